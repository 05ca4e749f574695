//! Rigid motions and their least-squares extraction from point sets.

mod icp;
mod markers;

use nalgebra::{Matrix3, Rotation3, Unit, SVD};
use serde::{Deserialize, Serialize};

use crate::{Error, Result, Vec3};

pub use icp::{align_frames, AlignOptions, Registration, SurfaceIndex};
pub use markers::{read_markers, write_markers, MarkerSet};

/// Orthonormality and determinant tolerance for rotations.
pub const ROTATION_TOL: f64 = 1e-10;

/// `x ↦ R x + t`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RigidMotion {
    pub rotation: Matrix3<f64>,
    pub translation: Vec3,
}

impl Default for RigidMotion {
    fn default() -> Self {
        RigidMotion::identity()
    }
}

impl RigidMotion {
    pub fn identity() -> Self {
        RigidMotion {
            rotation: Matrix3::identity(),
            translation: Vec3::zeros(),
        }
    }

    pub fn new(rotation: Matrix3<f64>, translation: Vec3) -> Result<Self> {
        let m = RigidMotion { rotation, translation };
        m.validate()?;
        Ok(m)
    }

    pub fn translation(t: Vec3) -> Self {
        RigidMotion {
            rotation: Matrix3::identity(),
            translation: t,
        }
    }

    /// Rotation by `angle` radians about `axis` through `pivot`.
    pub fn about_point(axis: Vec3, angle: f64, pivot: Vec3) -> Self {
        let r = *Rotation3::from_axis_angle(&Unit::new_normalize(axis), angle).matrix();
        RigidMotion {
            rotation: r,
            translation: pivot - r * pivot,
        }
    }

    pub fn validate(&self) -> Result<()> {
        let r = &self.rotation;
        let ortho = (r.transpose() * r - Matrix3::identity()).abs().max();
        let det = r.determinant();
        if !(ortho <= ROTATION_TOL) || !((det - 1.0).abs() <= ROTATION_TOL) || !self.translation.iter().all(|v| v.is_finite()) {
            return Err(Error::InvalidInput(format!(
                "not a proper rotation: |RᵀR − I| = {ortho:e}, det = {det}"
            )));
        }
        Ok(())
    }

    pub fn apply(&self, p: &Vec3) -> Vec3 {
        self.rotation * p + self.translation
    }

    /// Displacement `R x + t − x` of a material point at `x`.
    pub fn displacement(&self, x: &Vec3) -> Vec3 {
        self.apply(x) - x
    }

    /// Axis times angle (radians) of the rotation part.
    pub fn rotation_vector(&self) -> Vec3 {
        // atan2 of the skew and symmetric parts stays accurate at small angles
        let r = &self.rotation;
        let v = Vec3::new(r[(2, 1)] - r[(1, 2)], r[(0, 2)] - r[(2, 0)], r[(1, 0)] - r[(0, 1)]) * 0.5;
        let s = v.norm();
        if s == 0.0 {
            return Rotation3::from_matrix_unchecked(self.rotation).scaled_axis();
        }
        let angle = s.atan2((r.trace() - 1.0) * 0.5);
        v * (angle / s)
    }

    /// Small-rotation form of the displacement about `pivot`: exact at the
    /// pivot, with the rotation replaced by `ω × (x − pivot)`. Its
    /// symmetric gradient is zero.
    pub fn linearized_displacement(&self, x: &Vec3, pivot: &Vec3) -> Vec3 {
        self.displacement(pivot) + self.rotation_vector().cross(&(x - pivot))
    }

    /// `self ∘ first`: applies `first`, then `self`.
    pub fn compose(&self, first: &RigidMotion) -> RigidMotion {
        RigidMotion {
            rotation: self.rotation * first.rotation,
            translation: self.rotation * first.translation + self.translation,
        }
    }

    pub fn inverse(&self) -> RigidMotion {
        let rt = self.rotation.transpose();
        RigidMotion {
            rotation: rt,
            translation: -(rt * self.translation),
        }
    }
}

/// Rotation angle in degrees, in `[0, 180]`.
///
/// Uses `atan2(|axial(R)|, tr R − 1)`, which equals `acos((tr R − 1)/2)`
/// but keeps full precision for angles near zero.
pub fn rotation_angle(m: &RigidMotion) -> f64 {
    let r = &m.rotation;
    let axial = Vec3::new(r[(2, 1)] - r[(1, 2)], r[(0, 2)] - r[(2, 0)], r[(1, 0)] - r[(0, 1)]);
    let cos2 = (r.trace() - 1.0).clamp(-2.0, 2.0);
    axial.norm().atan2(cos2).to_degrees().clamp(0.0, 180.0)
}

/// Least-squares rigid motion taking `from[i]` onto `to[i]` (Kabsch).
///
/// Returns the motion and the rms residual in mm.
pub fn fit_rigid_motion(from: &[Vec3], to: &[Vec3]) -> Result<(RigidMotion, f64)> {
    if from.len() != to.len() {
        return Err(Error::InvalidInput(format!(
            "point sets differ in size: {} vs {}",
            from.len(),
            to.len()
        )));
    }
    if from.len() < 3 {
        return Err(Error::InsufficientData(format!("need at least 3 points, got {}", from.len())));
    }
    let n = from.len() as f64;
    let c0 = from.iter().sum::<Vec3>() / n;
    let c1 = to.iter().sum::<Vec3>() / n;

    let mut scatter = Matrix3::zeros();
    let mut cross = Matrix3::zeros();
    for (p, q) in from.iter().zip(to) {
        let a = p - c0;
        let b = q - c1;
        scatter += a * a.transpose();
        cross += a * b.transpose();
    }
    let spread = SVD::new(scatter, false, false).singular_values;
    let mut sv: Vec<f64> = spread.iter().copied().collect();
    sv.sort_by(|a, b| b.total_cmp(a));
    if !(sv[1] >= 1e-12 * sv[0]) || sv[0] == 0.0 {
        return Err(Error::Degenerate(format!(
            "point set is collinear or coincident (spread singular values {sv:?})"
        )));
    }

    // cross = Σ a bᵀ = U S Vᵀ; optimal R = V diag(1, 1, d) Uᵀ
    let svd = SVD::new(cross, true, true);
    let u = svd.u.expect("requested U");
    let v = svd.v_t.expect("requested Vᵀ").transpose();
    // reflection guard; nalgebra does not sort singular values, so flip the
    // direction of the smallest one
    let smallest = (0..3)
        .min_by(|&i, &j| svd.singular_values[i].total_cmp(&svd.singular_values[j]))
        .unwrap();
    let mut fix = Matrix3::identity();
    if (v * u.transpose()).determinant() < 0.0 {
        fix[(smallest, smallest)] = -1.0;
    }
    let rotation = v * fix * u.transpose();
    let translation = c1 - rotation * c0;
    let motion = RigidMotion { rotation, translation };
    let ss: f64 = from.iter().zip(to).map(|(p, q)| (motion.apply(p) - q).norm_squared()).sum();
    Ok((motion, (ss / n).sqrt()))
}
