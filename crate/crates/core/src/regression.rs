//! Ordinary least squares on a single regressor.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RegressionResult {
    pub slope: f64,
    pub intercept: f64,
    /// Coefficient of determination, clamped to `[0, 1]`; 0 when `y` is constant.
    pub r_squared: f64,
}

/// Fits `y = slope * x + intercept` by ordinary least squares.
pub fn linear_regression(x: &[f64], y: &[f64]) -> Result<RegressionResult> {
    if x.len() != y.len() {
        return Err(Error::DegenerateRegression(format!(
            "x has {} points, y has {}",
            x.len(),
            y.len()
        )));
    }
    if x.len() < 2 {
        return Err(Error::DegenerateRegression("need at least 2 points".into()));
    }
    let n = x.len() as f64;
    let x_mean = x.iter().sum::<f64>() / n;
    let y_mean = y.iter().sum::<f64>() / n;
    let (mut sxx, mut sxy, mut syy) = (0.0, 0.0, 0.0);
    for (&xi, &yi) in x.iter().zip(y) {
        let dx = xi - x_mean;
        let dy = yi - y_mean;
        sxx += dx * dx;
        sxy += dx * dy;
        syy += dy * dy;
    }
    if !(sxx > 0.0) {
        return Err(Error::DegenerateRegression("all x values are equal".into()));
    }
    let slope = sxy / sxx;
    let intercept = y_mean - slope * x_mean;
    let r_squared = if syy > 0.0 {
        let ss_res: f64 = x
            .iter()
            .zip(y)
            .map(|(&xi, &yi)| {
                let e = yi - (slope * xi + intercept);
                e * e
            })
            .sum();
        (1.0 - ss_res / syy).clamp(0.0, 1.0)
    } else {
        0.0
    };
    Ok(RegressionResult {
        slope,
        intercept,
        r_squared,
    })
}

/// Least-squares slope of `y` against `t`.
pub fn slope(t: &[f64], y: &[f64]) -> Result<f64> {
    linear_regression(t, y).map(|r| r.slope)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn identity_line() {
        let x = [1.0, 2.0, 3.0, 7.0];
        let r = linear_regression(&x, &x).unwrap();
        assert!((r.slope - 1.0).abs() < 1e-15);
        assert!(r.intercept.abs() < 1e-14);
        assert_eq!(r.r_squared, 1.0);
    }

    #[test]
    fn flat_line() {
        let r = linear_regression(&[1.0, 2.0, 3.0], &[4.0, 4.0, 4.0]).unwrap();
        assert_eq!(r.slope, 0.0);
        assert_eq!(r.intercept, 4.0);
        assert_eq!(r.r_squared, 0.0);
    }

    #[test]
    fn degenerate_inputs() {
        assert!(matches!(
            linear_regression(&[2.0, 2.0, 2.0], &[1.0, 2.0, 3.0]),
            Err(Error::DegenerateRegression(_))
        ));
        assert!(linear_regression(&[1.0], &[1.0]).is_err());
        assert!(linear_regression(&[1.0, 2.0], &[1.0]).is_err());
    }
}
