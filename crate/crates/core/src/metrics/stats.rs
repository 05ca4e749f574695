use serde::{Deserialize, Serialize};

use crate::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Regression {
    pub slope: f64,
    pub intercept: f64,
    pub r2: f64,
    /// `y` has zero variance; `r2` is reported as 0.
    pub degenerate: bool,
}

/// Ordinary least squares `y ≈ slope·x + intercept`.
pub fn linear_regression(x: &[f64], y: &[f64]) -> Result<Regression> {
    if x.len() != y.len() {
        return Err(Error::InvalidInput("regression inputs differ in length".into()));
    }
    if x.len() < 2 {
        return Err(Error::InsufficientData(format!("regression needs 2 points, got {}", x.len())));
    }
    let n = x.len() as f64;
    let mx = x.iter().sum::<f64>() / n;
    let my = y.iter().sum::<f64>() / n;
    let (mut sxx, mut sxy, mut syy) = (0.0, 0.0, 0.0);
    for (a, b) in x.iter().zip(y) {
        let (dx, dy) = (a - mx, b - my);
        sxx += dx * dx;
        sxy += dx * dy;
        syy += dy * dy;
    }
    if !(sxx > 0.0) {
        return Err(Error::Degenerate("regression predictor has zero variance".into()));
    }
    let slope = sxy / sxx;
    let intercept = my - slope * mx;
    if syy == 0.0 {
        return Ok(Regression {
            slope,
            intercept,
            r2: 0.0,
            degenerate: true,
        });
    }
    let ss_res: f64 = x.iter().zip(y).map(|(a, b)| (b - slope * a - intercept).powi(2)).sum();
    Ok(Regression {
        slope,
        intercept,
        r2: 1.0 - ss_res / syy,
        degenerate: false,
    })
}

/// `(RMSE, %RMSE)`; the percentage is `None` when every measured value is zero.
pub fn rmse_pct(measured: &[f64], predicted: &[f64]) -> Result<(f64, Option<f64>)> {
    if measured.len() != predicted.len() {
        return Err(Error::InvalidInput("rmse inputs differ in length".into()));
    }
    if measured.is_empty() {
        return Err(Error::InsufficientData("rmse of an empty sample".into()));
    }
    let mse = measured.iter().zip(predicted).map(|(m, p)| (p - m).powi(2)).sum::<f64>() / measured.len() as f64;
    let rmse = mse.sqrt();
    let peak = measured.iter().fold(0.0f64, |a, m| a.max(m.abs()));
    Ok((rmse, (peak > 0.0).then(|| 100.0 * rmse / peak)))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PercentDifference {
    /// `None` where `|measured|` is at or below the floor.
    pub per_point: Vec<Option<f64>>,
    pub mean: Option<f64>,
    pub max: Option<f64>,
    pub excluded: usize,
}

/// `100·|p − m|/|m|` wherever `|m| > floor`.
pub fn percent_difference(measured: &[f64], predicted: &[f64], floor: f64) -> Result<PercentDifference> {
    if measured.len() != predicted.len() {
        return Err(Error::InvalidInput("percent-difference inputs differ in length".into()));
    }
    let per_point: Vec<Option<f64>> = measured
        .iter()
        .zip(predicted)
        .map(|(m, p)| (m.abs() > floor).then(|| 100.0 * (p - m).abs() / m.abs()))
        .collect();
    let kept: Vec<f64> = per_point.iter().flatten().copied().collect();
    Ok(PercentDifference {
        excluded: per_point.len() - kept.len(),
        mean: (!kept.is_empty()).then(|| kept.iter().sum::<f64>() / kept.len() as f64),
        max: kept.iter().copied().reduce(f64::max),
        per_point,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct KsResult {
    pub d: f64,
    pub p: f64,
}

/// Survival function of the Kolmogorov distribution, `P(K > λ)`.
pub fn kolmogorov_sf(lambda: f64) -> f64 {
    const TERMS: usize = 100;
    if !(lambda > 0.0) {
        return 1.0;
    }
    let p = if lambda < 1.18 {
        // series in exp(-π²/(8λ²)) converges fast for small λ
        let s: f64 = (1..=TERMS)
            .map(|k| {
                let j = (2 * k - 1) as f64;
                (-j * j * std::f64::consts::PI.powi(2) / (8.0 * lambda * lambda)).exp()
            })
            .sum();
        1.0 - (2.0 * std::f64::consts::PI).sqrt() / lambda * s
    } else {
        2.0 * (1..=TERMS)
            .map(|k| {
                let sign = if k % 2 == 1 { 1.0 } else { -1.0 };
                sign * (-2.0 * (k * k) as f64 * lambda * lambda).exp()
            })
            .sum::<f64>()
    };
    p.clamp(0.0, 1.0)
}

/// Two-sample Kolmogorov-Smirnov statistic with its asymptotic p-value.
pub fn ks_two_sample(a: &[f64], b: &[f64]) -> Result<KsResult> {
    if a.is_empty() || b.is_empty() {
        return Err(Error::InsufficientData("KS test needs two non-empty samples".into()));
    }
    if a.iter().chain(b).any(|v| !v.is_finite()) {
        return Err(Error::InvalidInput("KS samples must be finite".into()));
    }
    let mut a = a.to_vec();
    let mut b = b.to_vec();
    a.sort_by(f64::total_cmp);
    b.sort_by(f64::total_cmp);
    let (na, nb) = (a.len(), b.len());
    let (mut i, mut j) = (0, 0);
    let mut d: f64 = 0.0;
    while i < na && j < nb {
        let x = a[i].min(b[j]);
        while i < na && a[i] <= x {
            i += 1;
        }
        while j < nb && b[j] <= x {
            j += 1;
        }
        d = d.max((i as f64 / na as f64 - j as f64 / nb as f64).abs());
    }
    let ne = (na * nb) as f64 / (na + nb) as f64;
    Ok(KsResult {
        d,
        p: kolmogorov_sf(ne.sqrt() * d),
    })
}

/// Pearson correlation; `None` if either sample has zero variance.
pub fn pearson(a: &[f64], b: &[f64]) -> Option<f64> {
    if a.len() != b.len() || a.len() < 2 {
        return None;
    }
    let n = a.len() as f64;
    let ma = a.iter().sum::<f64>() / n;
    let mb = b.iter().sum::<f64>() / n;
    let (mut sab, mut saa, mut sbb) = (0.0, 0.0, 0.0);
    for (x, y) in a.iter().zip(b) {
        sab += (x - ma) * (y - mb);
        saa += (x - ma).powi(2);
        sbb += (y - mb).powi(2);
    }
    (saa > 0.0 && sbb > 0.0).then(|| sab / (saa * sbb).sqrt())
}

pub fn mean(v: &[f64]) -> Option<f64> {
    (!v.is_empty()).then(|| v.iter().sum::<f64>() / v.len() as f64)
}
