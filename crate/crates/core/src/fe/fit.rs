use serde::{Deserialize, Serialize};

use crate::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct FitOptions {
    /// Accept `E` once `| |R(E)| − target | ≤ tol_rel · target`.
    pub tol_rel: f64,
    /// Budget of force evaluations (solves), including both endpoints.
    pub max_evaluations: usize,
}

impl Default for FitOptions {
    fn default() -> Self {
        FitOptions {
            tol_rel: 1e-4,
            max_evaluations: 30,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FitResult {
    pub e_disc_mpa: f64,
    pub force_n: f64,
    pub evaluations: usize,
    /// `(E, |R(E)|)` in evaluation order.
    pub history: Vec<(f64, f64)>,
}

/// Finds the disc modulus whose reaction-force magnitude equals `target`.
///
/// `force` maps a modulus to `|R|`. Uses the Illinois variant of regula
/// falsi, falling back to bisection whenever the bracket stops shrinking.
pub fn fit_disc_modulus(
    mut force: impl FnMut(f64) -> Result<f64>,
    target: f64,
    bracket: (f64, f64),
    opts: &FitOptions,
) -> Result<FitResult> {
    let (mut a, mut b) = bracket;
    if !(a > 0.0 && b > a && b.is_finite()) {
        return Err(Error::InvalidInput(format!("bracket must satisfy 0 < lo < hi, got ({a}, {b})")));
    }
    if !(target > 0.0 && target.is_finite()) {
        return Err(Error::InvalidInput(format!("target force must be positive, got {target}")));
    }
    if opts.max_evaluations < 2 {
        return Err(Error::InvalidInput("need at least 2 evaluations".into()));
    }
    let tol = opts.tol_rel * target;
    let mut history = Vec::new();
    let mut eval = |e: f64, history: &mut Vec<(f64, f64)>| -> Result<f64> {
        let f = force(e)?;
        history.push((e, f));
        Ok(f - target)
    };
    let done = |e: f64, history: Vec<(f64, f64)>| FitResult {
        e_disc_mpa: e,
        force_n: history.last().unwrap().1,
        evaluations: history.len(),
        history,
    };

    let mut ga = eval(a, &mut history)?;
    if ga.abs() <= tol {
        return Ok(done(a, history));
    }
    let mut gb = eval(b, &mut history)?;
    if gb.abs() <= tol {
        return Ok(done(b, history));
    }
    if ga.signum() == gb.signum() {
        return Err(Error::NoBracket {
            target,
            e_lo: a,
            e_hi: b,
            f_lo: history[0].1,
            f_hi: history[1].1,
        });
    }

    // which end was retained on the previous step (-1 a, +1 b)
    let mut side = 0;
    let mut width = f64::INFINITY;
    while history.len() < opts.max_evaluations {
        let mut c = (a * gb - b * ga) / (gb - ga);
        let bisect = !(c > a && c < b) || (b - a) > 0.5 * width;
        if bisect {
            c = 0.5 * (a + b);
        }
        width = b - a;
        let gc = eval(c, &mut history)?;
        log::debug!("fit: E = {c:.6} MPa, |R| = {:.6} N", gc + target);
        if gc.abs() <= tol {
            return Ok(done(c, history));
        }
        if gc.signum() == gb.signum() {
            b = c;
            gb = gc;
            if side == 1 {
                ga *= 0.5;
            }
            side = 1;
        } else {
            a = c;
            ga = gc;
            if side == -1 {
                gb *= 0.5;
            }
            side = -1;
        }
    }
    let last = *history.last().unwrap();
    Err(Error::NotConverged {
        iterations: history.len(),
        residual: (last.1 - target).abs() / target,
    })
}
