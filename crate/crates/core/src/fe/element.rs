//! Quadratic tetrahedron (tet10) isoparametric stiffness.

use nalgebra::{Matrix3, SMatrix};

use crate::quadrature::TetRule;
use crate::{Error, Result, Vec3};

pub type ElementMatrix = SMatrix<f64, 30, 30>;
pub type StrainVector = SMatrix<f64, 6, 1>;
type BMatrix = SMatrix<f64, 6, 30>;

/// Shape function values at barycentric `l`.
pub fn shape_functions(l: &[f64; 4]) -> [f64; 10] {
    let mut n = [0.0; 10];
    for i in 0..4 {
        n[i] = l[i] * (2.0 * l[i] - 1.0);
    }
    for (m, &(a, b)) in crate::mesh::TET10_EDGES.iter().enumerate() {
        n[4 + m] = 4.0 * l[a] * l[b];
    }
    n
}

/// Gradients with respect to the natural coordinates `(ξ, η, ζ) = (L1, L2, L3)`,
/// with `L0 = 1 − ξ − η − ζ`.
pub fn natural_gradients(l: &[f64; 4]) -> [[f64; 3]; 10] {
    // dN/dL_k for every node, then chain through dL0/dξ_i = -1
    let mut d_dl = [[0.0f64; 4]; 10];
    for i in 0..4 {
        d_dl[i][i] = 4.0 * l[i] - 1.0;
    }
    for (m, &(a, b)) in crate::mesh::TET10_EDGES.iter().enumerate() {
        d_dl[4 + m][a] = 4.0 * l[b];
        d_dl[4 + m][b] = 4.0 * l[a];
    }
    let mut g = [[0.0; 3]; 10];
    for n in 0..10 {
        for i in 0..3 {
            g[n][i] = d_dl[n][i + 1] - d_dl[n][0];
        }
    }
    g
}

/// Isotropic constitutive matrix in Voigt order `xx, yy, zz, xy, yz, zx`
/// with engineering shear strains.
pub fn isotropic_d(e: f64, nu: f64) -> SMatrix<f64, 6, 6> {
    let lambda = e * nu / ((1.0 + nu) * (1.0 - 2.0 * nu));
    let mu = e / (2.0 * (1.0 + nu));
    let mut d = SMatrix::<f64, 6, 6>::zeros();
    for i in 0..3 {
        for j in 0..3 {
            d[(i, j)] = lambda;
        }
        d[(i, i)] = lambda + 2.0 * mu;
        d[(i + 3, i + 3)] = mu;
    }
    d
}

/// Cartesian shape-function gradients and the Jacobian determinant.
fn cartesian_gradients(coords: &[Vec3; 10], l: &[f64; 4]) -> Result<([Vec3; 10], f64)> {
    let g = natural_gradients(l);
    // J[i][j] = ∂x_j / ∂ξ_i
    let mut j = Matrix3::zeros();
    for n in 0..10 {
        for a in 0..3 {
            for b in 0..3 {
                j[(a, b)] += g[n][a] * coords[n][b];
            }
        }
    }
    let det = j.determinant();
    if !(det > 0.0) {
        return Err(Error::Degenerate(format!(
            "non-positive Jacobian {det:e} for element with corners {:?}",
            &coords[..4].iter().map(|p| [p.x, p.y, p.z]).collect::<Vec<_>>()
        )));
    }
    let jinv = j.try_inverse().ok_or_else(|| Error::Degenerate("singular Jacobian".into()))?;
    let mut out = [Vec3::zeros(); 10];
    for n in 0..10 {
        out[n] = jinv * Vec3::new(g[n][0], g[n][1], g[n][2]);
    }
    Ok((out, det))
}

fn b_matrix(grads: &[Vec3; 10]) -> BMatrix {
    let mut b = BMatrix::zeros();
    for (n, d) in grads.iter().enumerate() {
        let c = 3 * n;
        b[(0, c)] = d.x;
        b[(1, c + 1)] = d.y;
        b[(2, c + 2)] = d.z;
        b[(3, c)] = d.y;
        b[(3, c + 1)] = d.x;
        b[(4, c + 1)] = d.z;
        b[(4, c + 2)] = d.y;
        b[(5, c)] = d.z;
        b[(5, c + 2)] = d.x;
    }
    b
}

/// 30×30 element stiffness, DOFs ordered node-major `(u, v, w)`.
pub fn tet10_stiffness(coords: &[Vec3; 10], e: f64, nu: f64, rule: TetRule) -> Result<Box<ElementMatrix>> {
    if !(e > 0.0) || !(0.0..0.5).contains(&nu) {
        return Err(Error::InvalidInput(format!("invalid material E={e}, nu={nu}")));
    }
    let d = isotropic_d(e, nu);
    let mut k = Box::new(ElementMatrix::zeros());
    for q in rule.points() {
        let (grads, det) = cartesian_gradients(coords, &q.bary)?;
        let b = b_matrix(&grads);
        let db = d * b;
        *k += b.transpose() * db * (q.weight * det);
    }
    // symmetrise away round-off
    let kt = k.transpose();
    *k = (*k + kt) * 0.5;
    Ok(k)
}

/// Small-strain tensor (Voigt, engineering shear) at barycentric `l`.
pub fn element_strain(coords: &[Vec3; 10], disp: &[Vec3; 10], l: &[f64; 4]) -> Result<StrainVector> {
    let (grads, _) = cartesian_gradients(coords, l)?;
    let b = b_matrix(&grads);
    let u = SMatrix::<f64, 30, 1>::from_fn(|r, _| disp[r / 3][r % 3]);
    Ok(b * u)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::mesh::test_meshes::regular_tet;

    fn coords_of(m: &crate::mesh::Mesh) -> [Vec3; 10] {
        m.element_coords(0)
    }

    fn skewed() -> [Vec3; 10] {
        let c = [
            Vec3::new(0.1, -0.2, 0.0),
            Vec3::new(1.7, 0.1, 0.2),
            Vec3::new(0.3, 1.4, -0.1),
            Vec3::new(0.4, 0.5, 1.9),
        ];
        let mut out = [Vec3::zeros(); 10];
        out[..4].copy_from_slice(&c);
        for (m, &(a, b)) in crate::mesh::TET10_EDGES.iter().enumerate() {
            out[4 + m] = 0.5 * (c[a] + c[b]);
        }
        out
    }

    fn rigid_modes(coords: &[Vec3; 10]) -> Vec<SMatrix<f64, 30, 1>> {
        let mut modes = Vec::new();
        for a in 0..3 {
            modes.push(SMatrix::<f64, 30, 1>::from_fn(|r, _| if r % 3 == a { 1.0 } else { 0.0 }));
        }
        for axis in [Vec3::x(), Vec3::y(), Vec3::z()] {
            modes.push(SMatrix::<f64, 30, 1>::from_fn(|r, _| axis.cross(&coords[r / 3])[r % 3]));
        }
        modes
    }

    #[test]
    fn partition_of_unity_and_gradient_sum() {
        let l = [0.1, 0.2, 0.3, 0.4];
        assert!((shape_functions(&l).iter().sum::<f64>() - 1.0).abs() < 1e-15);
        let g = natural_gradients(&l);
        for i in 0..3 {
            assert!(g.iter().map(|gn| gn[i]).sum::<f64>().abs() < 1e-14);
        }
    }

    #[test]
    fn kronecker_property_at_nodes() {
        let mut nodes_bary = vec![];
        for i in 0..4 {
            let mut l = [0.0; 4];
            l[i] = 1.0;
            nodes_bary.push(l);
        }
        for &(a, b) in &crate::mesh::TET10_EDGES {
            let mut l = [0.0; 4];
            l[a] = 0.5;
            l[b] = 0.5;
            nodes_bary.push(l);
        }
        for (i, l) in nodes_bary.iter().enumerate() {
            let n = shape_functions(l);
            for (j, v) in n.iter().enumerate() {
                assert!((v - if i == j { 1.0 } else { 0.0 }).abs() < 1e-15);
            }
        }
    }

    #[test]
    fn rigid_body_modes_are_in_the_kernel() {
        for coords in [coords_of(&regular_tet()), skewed()] {
            let k = tet10_stiffness(&coords, 1234.0, 0.3, TetRule::ElevenPoint).unwrap();
            let norm = k.norm();
            for mode in rigid_modes(&coords) {
                assert!((*k * mode).norm() < 1e-9 * norm);
            }
        }
    }

    #[test]
    fn symmetric() {
        let k = tet10_stiffness(&skewed(), 70.0, 0.45, TetRule::ElevenPoint).unwrap();
        let rel = (*k - k.transpose()).norm() / k.norm();
        assert!(rel <= 1e-12);
    }

    #[test]
    fn uniaxial_strain_energy_on_regular_tet() {
        let coords = coords_of(&regular_tet());
        let k = tet10_stiffness(&coords, 1.0, 0.0, TetRule::ElevenPoint).unwrap();
        // u = (x, 0, 0): εxx = 1, energy = E V / 2
        let u = SMatrix::<f64, 30, 1>::from_fn(|r, _| if r % 3 == 0 { coords[r / 3].x } else { 0.0 });
        let energy = 0.5 * (u.transpose() * *k * u)[(0, 0)];
        let volume = 1.0 / (6.0 * 2f64.sqrt());
        assert!((energy - 0.5 * volume).abs() < 1e-14);
    }

    #[test]
    fn four_and_eleven_point_rules_agree_on_straight_elements() {
        // B is linear, so BᵀDB is quadratic and both rules are exact
        let k4 = tet10_stiffness(&skewed(), 100.0, 0.3, TetRule::FourPoint).unwrap();
        let k11 = tet10_stiffness(&skewed(), 100.0, 0.3, TetRule::ElevenPoint).unwrap();
        assert!((*k4 - *k11).norm() < 1e-11 * k11.norm());
    }

    #[test]
    fn inverted_element_rejected() {
        let mut c = skewed();
        c.swap(1, 2);
        // keep midside nodes consistent with the swapped corners
        for (m, &(a, b)) in crate::mesh::TET10_EDGES.iter().enumerate() {
            c[4 + m] = 0.5 * (c[a] + c[b]);
        }
        assert!(matches!(
            tet10_stiffness(&c, 1.0, 0.3, TetRule::ElevenPoint),
            Err(Error::Degenerate(_))
        ));
    }

    #[test]
    fn quadratic_field_strain_is_exact() {
        // u = (x², xy, 0) → εxx = 2x, εyy = x, γxy = y
        let c = skewed();
        let disp = c.map(|p| Vec3::new(p.x * p.x, p.x * p.y, 0.0));
        let l = [0.1, 0.2, 0.3, 0.4];
        let p: Vec3 = (0..4).map(|i| l[i] * c[i]).sum();
        let s = element_strain(&c, &disp, &l).unwrap();
        assert!((s[0] - 2.0 * p.x).abs() < 1e-12);
        assert!((s[1] - p.x).abs() < 1e-12);
        assert!((s[3] - p.y).abs() < 1e-12);
        assert!(s[2].abs() < 1e-12 && s[4].abs() < 1e-12 && s[5].abs() < 1e-12);
    }
}
