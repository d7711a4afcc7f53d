//! Small statistics helpers shared by the speed and tail fits.

use serde::Serialize;

/// Ordinary least-squares line `y = intercept + slope·x`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct LineFit {
    pub slope: f64,
    pub intercept: f64,
    /// Root mean square of the residuals.
    pub residual_rms: f64,
    /// Standard error of the slope.
    pub slope_se: f64,
    pub n: usize,
}

pub fn fit_line(x: &[f64], y: &[f64]) -> Option<LineFit> {
    let n = x.len();
    if n < 3 || y.len() != n {
        return None;
    }
    let nf = n as f64;
    let mx = x.iter().sum::<f64>() / nf;
    let my = y.iter().sum::<f64>() / nf;
    let sxx: f64 = x.iter().map(|v| (v - mx) * (v - mx)).sum();
    if sxx <= 0.0 {
        return None;
    }
    let sxy: f64 = x.iter().zip(y).map(|(a, b)| (a - mx) * (b - my)).sum();
    let slope = sxy / sxx;
    let intercept = my - slope * mx;
    let ssr: f64 = x
        .iter()
        .zip(y)
        .map(|(a, b)| {
            let e = b - intercept - slope * a;
            e * e
        })
        .sum();
    Some(LineFit {
        slope,
        intercept,
        residual_rms: (ssr / nf).sqrt(),
        slope_se: (ssr / (nf - 2.0) / sxx).sqrt(),
        n,
    })
}

/// `max / min` of the absolute values; infinite if any value is zero.
pub fn band_ratio(values: &[f64]) -> f64 {
    let lo = values.iter().fold(f64::INFINITY, |m, v| m.min(v.abs()));
    let hi = values.iter().fold(0.0_f64, |m, v| m.max(v.abs()));
    if lo == 0.0 {
        if hi == 0.0 {
            1.0
        } else {
            f64::INFINITY
        }
    } else {
        hi / lo
    }
}

pub fn strictly_decreasing(values: &[f64]) -> bool {
    values.windows(2).all(|w| w[1] < w[0])
}

/// Each value at most `(1 + slack)` times its predecessor.
pub fn decreasing_with_slack(values: &[f64], slack: f64) -> bool {
    values.windows(2).all(|w| w[1] <= w[0] * (1.0 + slack))
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;

    #[test]
    fn exact_line() {
        let x: Vec<f64> = (0..10).map(f64::from).collect();
        let y: Vec<f64> = x.iter().map(|v| 2.0 - 0.5 * v).collect();
        let f = fit_line(&x, &y).unwrap();
        assert_abs_diff_eq!(f.slope, -0.5, epsilon = 1e-14);
        assert_abs_diff_eq!(f.intercept, 2.0, epsilon = 1e-13);
        assert!(f.residual_rms < 1e-14);
    }

    #[test]
    fn ratios() {
        assert_eq!(band_ratio(&[1.0, 2.0, 4.0]), 4.0);
        assert!(strictly_decreasing(&[3.0, 2.0, 1.0]));
        assert!(!strictly_decreasing(&[3.0, 3.0]));
        assert!(decreasing_with_slack(&[1.0, 1.04], 0.05));
    }
}
