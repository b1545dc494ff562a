//! Error and memory metrics.

use crate::error::{Error, Result};

/// Normalized root mean squared error `sqrt(<(y - z)²> / <(y - <y>)²>)`.
///
/// Non-finite predictions give a non-finite result rather than an error.
pub fn nrmse(y: &[f64], z: &[f64]) -> Result<f64> {
    if y.len() != z.len() {
        return Err(Error::dims("nrmse series", y.len(), z.len()));
    }
    if y.len() < 2 {
        return Err(Error::InvalidArgument("nrmse needs at least 2 samples".into()));
    }
    let n = y.len() as f64;
    let mean = y.iter().sum::<f64>() / n;
    let var = y.iter().map(|v| (v - mean) * (v - mean)).sum::<f64>() / n;
    if var == 0.0 {
        return Err(Error::ConstantTarget);
    }
    let mse = y.iter().zip(z).map(|(a, b)| (a - b) * (a - b)).sum::<f64>() / n;
    Ok((mse / var).sqrt())
}

/// Squared Pearson correlation; 0 when either series is constant.
pub fn squared_correlation(a: &[f64], b: &[f64]) -> f64 {
    assert_eq!(a.len(), b.len(), "squared_correlation: length mismatch");
    let n = a.len() as f64;
    let ma = a.iter().sum::<f64>() / n;
    let mb = b.iter().sum::<f64>() / n;
    let (mut sab, mut saa, mut sbb) = (0.0, 0.0, 0.0);
    for (x, y) in a.iter().zip(b) {
        let (dx, dy) = (x - ma, y - mb);
        sab += dx * dy;
        saa += dx * dx;
        sbb += dy * dy;
    }
    if saa == 0.0 || sbb == 0.0 {
        return 0.0;
    }
    (sab * sab) / (saa * sbb)
}

/// Mean and sample standard deviation (`n - 1` denominator; 0 for n = 1).
pub fn mean_std(values: &[f64]) -> (f64, f64) {
    let n = values.len();
    if n == 0 {
        return (f64::NAN, f64::NAN);
    }
    let mean = values.iter().sum::<f64>() / n as f64;
    if n == 1 {
        return (mean, 0.0);
    }
    let ss = values.iter().map(|v| (v - mean) * (v - mean)).sum::<f64>();
    (mean, (ss / (n - 1) as f64).sqrt())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn perfect_prediction_is_zero() {
        let y = [0.1, -0.4, 0.9, 0.3];
        assert_eq!(nrmse(&y, &y).unwrap(), 0.0);
    }

    #[test]
    fn mean_predictor_is_one() {
        let y = [1.0, 2.0, 3.0, 6.0];
        let z = [3.0; 4];
        assert!((nrmse(&y, &z).unwrap() - 1.0).abs() < 1e-15);
    }

    #[test]
    fn alternating_against_zero() {
        let v = nrmse(&[0.0, 1.0, 0.0, 1.0], &[0.0; 4]).unwrap();
        assert!((v - 2f64.sqrt()).abs() < 1e-15);
    }

    #[test]
    fn constant_target_is_an_error() {
        assert!(matches!(nrmse(&[2.0; 5], &[1.0; 5]), Err(Error::ConstantTarget)));
        assert!(nrmse(&[1.0], &[1.0]).is_err());
        assert!(nrmse(&[1.0, 2.0], &[1.0]).is_err());
    }

    #[test]
    fn correlation_cases() {
        let a = [1.0, 2.0, 4.0, 8.0];
        assert!((squared_correlation(&a, &a) - 1.0).abs() < 1e-15);
        let neg: Vec<f64> = a.iter().map(|v| -3.0 * v + 1.0).collect();
        assert!((squared_correlation(&a, &neg) - 1.0).abs() < 1e-15);
        assert_eq!(squared_correlation(&a, &[5.0; 4]), 0.0);
        let orth = squared_correlation(&[1.0, -1.0, 1.0, -1.0], &[1.0, 1.0, -1.0, -1.0]);
        assert!(orth.abs() < 1e-15);
    }

    #[test]
    fn sample_std() {
        let (m, s) = mean_std(&[2.0, 4.0, 4.0, 4.0, 5.0, 5.0, 7.0, 9.0]);
        assert_eq!(m, 5.0);
        assert!((s - (32.0f64 / 7.0).sqrt()).abs() < 1e-15);
        assert_eq!(mean_std(&[3.0]), (3.0, 0.0));
    }
}
