use std::time::Instant;

use serde::{Deserialize, Serialize};

use super::constraints::ConstrainedSystem;
use super::field::DisplacementField;
use super::sparse::{axpy, dot, norm, CsrMatrix};
use crate::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct PcgOptions {
    /// Relative residual `‖b − A x‖ / ‖b‖`.
    pub tol: f64,
    /// `None` means `20·√n + 1000`.
    pub max_iter: Option<usize>,
}

impl Default for PcgOptions {
    fn default() -> Self {
        PcgOptions { tol: 1e-9, max_iter: None }
    }
}

impl PcgOptions {
    pub fn max_iter_for(&self, n: usize) -> usize {
        self.max_iter.unwrap_or_else(|| (20.0 * (n as f64).sqrt()) as usize + 1000)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SolveStats {
    pub iterations: usize,
    pub relative_residual: f64,
    #[serde(skip)]
    pub wall_time_s: f64,
}

/// Jacobi-preconditioned conjugate gradients for SPD `a x = b`.
///
/// Returns the solution, the iteration count and the final true relative
/// residual.
pub fn pcg(a: &CsrMatrix, b: &[f64], tol: f64, max_iter: usize) -> Result<(Vec<f64>, usize, f64)> {
    let n = b.len();
    assert_eq!(a.nrows(), n);
    if !(tol > 0.0) {
        return Err(Error::InvalidInput(format!("pcg tolerance must be positive, got {tol}")));
    }
    let bnorm = norm(b);
    if !bnorm.is_finite() {
        return Err(Error::NonFinite(0));
    }
    let mut x = vec![0.0; n];
    if bnorm == 0.0 {
        return Ok((x, 0, 0.0));
    }
    let inv_diag: Vec<f64> = a
        .diagonal()
        .iter()
        .map(|&d| if d > 0.0 { 1.0 / d } else { 1.0 })
        .collect();
    let precondition = |r: &[f64]| -> Vec<f64> { r.iter().zip(&inv_diag).map(|(r, d)| r * d).collect() };

    let mut r = b.to_vec();
    let mut z = precondition(&r);
    let mut p = z.clone();
    let mut rz = dot(&r, &z);
    let mut ap = vec![0.0; n];
    let mut rel = 1.0;
    for it in 1..=max_iter {
        a.mul_vec_into(&p, &mut ap);
        let pap = dot(&p, &ap);
        if !pap.is_finite() || !rz.is_finite() {
            return Err(Error::NonFinite(it));
        }
        if pap <= 0.0 {
            return Err(Error::Degenerate(format!("matrix is not positive definite (pᵀAp = {pap:e})")));
        }
        let alpha = rz / pap;
        axpy(alpha, &p, &mut x);
        axpy(-alpha, &ap, &mut r);
        rel = norm(&r) / bnorm;
        if !rel.is_finite() {
            return Err(Error::NonFinite(it));
        }
        if rel <= tol {
            // guard against drift of the recursive residual
            let ax = a.mul_vec(&x);
            let true_r: Vec<f64> = b.iter().zip(&ax).map(|(b, ax)| b - ax).collect();
            let true_rel = norm(&true_r) / bnorm;
            if true_rel <= tol {
                return Ok((x, it, true_rel));
            }
            r = true_r;
            rel = true_rel;
        }
        z = precondition(&r);
        let rz_new = dot(&r, &z);
        let beta = rz_new / rz;
        rz = rz_new;
        for (pi, zi) in p.iter_mut().zip(&z) {
            *pi = zi + beta * *pi;
        }
    }
    Err(Error::NotConverged {
        iterations: max_iter,
        residual: rel,
    })
}

pub fn solve_pcg(system: &ConstrainedSystem, opts: &PcgOptions) -> Result<(DisplacementField, SolveStats)> {
    let start = Instant::now();
    let max_iter = opts.max_iter_for(system.num_free());
    let (x, iterations, relative_residual) = pcg(&system.reduced, &system.rhs, opts.tol, max_iter)?;
    let field = system.expand(&x);
    let stats = SolveStats {
        iterations,
        relative_residual,
        wall_time_s: start.elapsed().as_secs_f64(),
    };
    log::debug!(
        "pcg: {} free dofs, {} iterations, residual {:.2e}",
        system.num_free(),
        iterations,
        relative_residual
    );
    Ok((field, stats))
}
