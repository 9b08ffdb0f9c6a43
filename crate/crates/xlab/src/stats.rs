//! Order statistics and least-squares fits over trials.

use serde::Serialize;

/// Linear-interpolation quantile of sorted data (type 7).
fn quantile_sorted(sorted: &[f64], q: f64) -> f64 {
    let n = sorted.len();
    if n == 1 {
        return sorted[0];
    }
    let pos = q * (n - 1) as f64;
    let lo = pos.floor() as usize;
    let hi = (lo + 1).min(n - 1);
    let frac = pos - lo as f64;
    sorted[lo] + frac * (sorted[hi] - sorted[lo])
}

fn sorted(values: &[f64]) -> Vec<f64> {
    let mut v = values.to_vec();
    v.sort_by(f64::total_cmp);
    v
}

pub fn median(values: &[f64]) -> f64 {
    assert!(!values.is_empty(), "median of an empty sample");
    quantile_sorted(&sorted(values), 0.5)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Quartiles {
    pub q1: f64,
    pub median: f64,
    pub q3: f64,
}

pub fn quartiles(values: &[f64]) -> Quartiles {
    assert!(!values.is_empty(), "quartiles of an empty sample");
    let s = sorted(values);
    Quartiles {
        q1: quantile_sorted(&s, 0.25),
        median: quantile_sorted(&s, 0.5),
        q3: quantile_sorted(&s, 0.75),
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct LinearFit {
    pub slope: f64,
    pub intercept: f64,
    /// Standard error of the slope; absent with two points.
    pub slope_stderr: Option<f64>,
    pub points: usize,
}

/// Ordinary least squares `y = a + b x`; `None` when fewer than two distinct `x`.
pub fn ols(x: &[f64], y: &[f64]) -> Option<LinearFit> {
    assert_eq!(x.len(), y.len());
    let n = x.len();
    if n < 2 {
        return None;
    }
    let mx = x.iter().sum::<f64>() / n as f64;
    let my = y.iter().sum::<f64>() / n as f64;
    let sxx: f64 = x.iter().map(|v| (v - mx) * (v - mx)).sum();
    if sxx <= 0.0 {
        return None;
    }
    let sxy: f64 = x.iter().zip(y).map(|(a, b)| (a - mx) * (b - my)).sum();
    let slope = sxy / sxx;
    let intercept = my - slope * mx;
    let slope_stderr = (n > 2).then(|| {
        let rss: f64 = x
            .iter()
            .zip(y)
            .map(|(a, b)| (b - intercept - slope * a).powi(2))
            .sum();
        (rss / (n - 2) as f64 / sxx).sqrt()
    });
    Some(LinearFit {
        slope,
        intercept,
        slope_stderr,
        points: n,
    })
}

/// Log-log fit of `y` against `x`.
pub fn loglog(x: &[f64], y: &[f64]) -> Option<LinearFit> {
    let lx: Vec<f64> = x.iter().map(|v| v.ln()).collect();
    let ly: Vec<f64> = y.iter().map(|v| v.ln()).collect();
    ols(&lx, &ly)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct PooledFit {
    pub slope: f64,
    pub slope_stderr: Option<f64>,
    pub points: usize,
}

/// Common slope across groups with one intercept per group (fixed-effects OLS).
pub fn pooled_slope(groups: &[(Vec<f64>, Vec<f64>)]) -> Option<PooledFit> {
    let mut sxx = 0.0;
    let mut sxy = 0.0;
    let mut n = 0;
    let mut centered = Vec::new();
    for (x, y) in groups {
        if x.is_empty() {
            continue;
        }
        let mx = x.iter().sum::<f64>() / x.len() as f64;
        let my = y.iter().sum::<f64>() / y.len() as f64;
        for (a, b) in x.iter().zip(y) {
            sxx += (a - mx) * (a - mx);
            sxy += (a - mx) * (b - my);
            centered.push((a - mx, b - my));
        }
        n += x.len();
    }
    if sxx <= 0.0 {
        return None;
    }
    let slope = sxy / sxx;
    let groups_used = groups.iter().filter(|g| !g.0.is_empty()).count();
    let dof = n.checked_sub(groups_used + 1).filter(|&d| d > 0);
    let slope_stderr = dof.map(|d| {
        let rss: f64 = centered.iter().map(|(a, b)| (b - slope * a).powi(2)).sum();
        (rss / d as f64 / sxx).sqrt()
    });
    Some(PooledFit {
        slope,
        slope_stderr,
        points: n,
    })
}
