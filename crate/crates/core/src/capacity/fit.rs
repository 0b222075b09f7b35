use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Least-squares fit of `F(d) = 1 / (1 + exp(-(d - midpoint) / slope))`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LogisticFit {
    pub midpoint: f64,
    pub slope: f64,
    /// Root-mean-square residual over the fitted points.
    pub residual: f64,
}

const MIN_SLOPE: f64 = 1e-3;

fn logistic(d: f64, mid: f64, slope: f64) -> f64 {
    1.0 / (1.0 + (-(d - mid) / slope).exp())
}

fn sse(points: &[(f64, f64)], mid: f64, slope: f64) -> f64 {
    points
        .iter()
        .map(|&(d, f)| (logistic(d, mid, slope) - f).powi(2))
        .sum()
}

/// Abscissa where the piecewise-linear interpolant of `points` first reaches
/// `level`, clamped to the data range.
fn crossing(points: &[(f64, f64)], level: f64) -> f64 {
    if points[0].1 >= level {
        return points[0].0;
    }
    for w in points.windows(2) {
        let ((d0, f0), (d1, f1)) = (w[0], w[1]);
        if f1 >= level {
            if f1 == f0 {
                return d0;
            }
            return d0 + (level - f0) / (f1 - f0) * (d1 - d0);
        }
    }
    points[points.len() - 1].0
}

/// Fits the logistic by Levenberg–Marquardt on `(midpoint, ln slope)`,
/// started from the interpolated 0.5 crossing and 0.25–0.75 width.
/// `points` must be sorted by `d`.
pub fn fit_logistic(points: &[(f64, f64)]) -> Result<LogisticFit> {
    if points.len() < 2 {
        return Err(Error::Estimator(format!(
            "logistic fit needs at least 2 points, got {}",
            points.len()
        )));
    }
    if points.windows(2).any(|w| w[1].0 <= w[0].0) {
        return Err(Error::Estimator(
            "fit abscissae must be strictly increasing".into(),
        ));
    }
    let mut mid = crossing(points, 0.5);
    let width = crossing(points, 0.75) - crossing(points, 0.25);
    let mut ln_s = (width / (2.0 * 3f64.ln())).max(0.05).ln();
    let mut lambda = 1e-3;
    let mut cost = sse(points, mid, ln_s.exp());

    for _ in 0..500 {
        let s = ln_s.exp();
        // Normal equations for the 2x2 Gauss-Newton step.
        let (mut a11, mut a12, mut a22, mut g1, mut g2) = (0.0, 0.0, 0.0, 0.0, 0.0);
        for &(d, f) in points {
            let p = logistic(d, mid, s);
            let dp = p * (1.0 - p);
            let j_mid = -dp / s;
            let j_lns = -dp * (d - mid) / s;
            let r = p - f;
            a11 += j_mid * j_mid;
            a12 += j_mid * j_lns;
            a22 += j_lns * j_lns;
            g1 += j_mid * r;
            g2 += j_lns * r;
        }
        let mut improved = false;
        for _ in 0..30 {
            let b11 = a11 * (1.0 + lambda) + 1e-15;
            let b22 = a22 * (1.0 + lambda) + 1e-15;
            let det = b11 * b22 - a12 * a12;
            if det <= 0.0 || !det.is_finite() {
                lambda *= 10.0;
                continue;
            }
            let step_mid = -(b22 * g1 - a12 * g2) / det;
            let step_lns = -(b11 * g2 - a12 * g1) / det;
            let new_mid = mid + step_mid;
            let new_lns = (ln_s + step_lns).max(MIN_SLOPE.ln());
            let new_cost = sse(points, new_mid, new_lns.exp());
            if new_cost.is_finite() && new_cost <= cost {
                let delta = cost - new_cost;
                mid = new_mid;
                ln_s = new_lns;
                cost = new_cost;
                lambda = (lambda * 0.3).max(1e-12);
                improved =
                    delta > 1e-15 * (1.0 + cost) || step_mid.abs() > 1e-10 * (1.0 + mid.abs());
                break;
            }
            lambda *= 10.0;
        }
        if !improved {
            break;
        }
    }
    Ok(LogisticFit {
        midpoint: mid,
        slope: ln_s.exp(),
        residual: (cost / points.len() as f64).sqrt(),
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn recovers_exact_logistic() {
        let pts: Vec<(f64, f64)> = (0..15)
            .map(|i| {
                let d = 20.0 + 2.0 * i as f64;
                (d, logistic(d, 33.7, 3.2))
            })
            .collect();
        let fit = fit_logistic(&pts).unwrap();
        assert!((fit.midpoint - 33.7).abs() < 1e-6, "{fit:?}");
        assert!((fit.slope - 3.2).abs() < 1e-6, "{fit:?}");
        assert!(fit.residual < 1e-8);
    }

    #[test]
    fn step_curve_midpoint() {
        for d0 in [2usize, 7, 30, 101] {
            let pts: Vec<(f64, f64)> = (d0.saturating_sub(4).max(1)..d0 + 4)
                .map(|d| (d as f64, if d >= d0 { 1.0 } else { 0.0 }))
                .collect();
            let fit = fit_logistic(&pts).unwrap();
            assert!(
                (fit.midpoint - d0 as f64).abs() <= 0.5 + 1e-9,
                "{d0}: {fit:?}"
            );
            assert!(fit.slope > 0.0);
        }
    }

    #[test]
    fn rejects_bad_input() {
        assert!(fit_logistic(&[(1.0, 0.0)]).is_err());
        assert!(fit_logistic(&[(2.0, 0.0), (1.0, 1.0)]).is_err());
    }
}
