//! Small numeric helpers shared across the crate.

/// ln Σ exp(v) with max-shifting.
///
/// `-inf` entries drop out; the result is `-inf` only when every entry is.
pub fn log_sum_exp(vals: &[f64]) -> f64 {
    let mut max = f64::NEG_INFINITY;
    for &v in vals {
        debug_assert!(!v.is_nan());
        if v > max {
            max = v;
        }
    }
    if max.is_infinite() {
        return max;
    }
    let sum: f64 = vals.iter().map(|&v| (v - max).exp()).sum();
    max + sum.ln()
}

/// Truncate sub-tolerance rounding noise on a quantity that is
/// analytically nonnegative. Genuine negatives pass through untouched.
pub(crate) fn snap_nonnegative(x: f64) -> f64 {
    if x < 0.0 && x > -1e-9 {
        0.0
    } else {
        x
    }
}

/// Sample mean and standard error of the mean (ddof = 1).
///
/// Non-finite samples force the standard error to zero: the mean is then
/// an exact infinity rather than a noisy estimate.
pub fn mean_and_se(xs: &[f64]) -> (f64, f64) {
    let n = xs.len();
    if n == 0 {
        return (0.0, 0.0);
    }
    if xs.iter().any(|x| !x.is_finite()) {
        let mean = xs.iter().sum::<f64>() / n as f64;
        return (mean, 0.0);
    }
    let mean = xs.iter().sum::<f64>() / n as f64;
    if n < 2 {
        return (mean, 0.0);
    }
    let var = xs.iter().map(|x| (x - mean) * (x - mean)).sum::<f64>() / (n - 1) as f64;
    (mean, (var / n as f64).sqrt())
}
