//! Order-independent summation and the sample statistics used by the estimators.

const PAIRWISE_BLOCK: usize = 64;

/// Pairwise (cascade) summation; the split points depend only on the length,
/// so the result is a fixed function of the input slice.
pub fn pairwise_sum(xs: &[f64]) -> f64 {
    if xs.len() <= PAIRWISE_BLOCK {
        return xs.iter().sum();
    }
    let mid = xs.len() / 2;
    pairwise_sum(&xs[..mid]) + pairwise_sum(&xs[mid..])
}

pub fn mean(xs: &[f64]) -> f64 {
    if xs.is_empty() {
        return f64::NAN;
    }
    pairwise_sum(xs) / xs.len() as f64
}

/// Sample mean and its standard error `s / √n` (zero for a single sample).
pub fn mean_stderr(xs: &[f64]) -> (f64, f64) {
    let n = xs.len();
    let m = mean(xs);
    if n < 2 {
        return (m, 0.0);
    }
    let dev: Vec<f64> = xs.iter().map(|x| (x - m) * (x - m)).collect();
    let var = pairwise_sum(&dev) / (n - 1) as f64;
    (m, (var / n as f64).sqrt())
}

/// Unbiased sample covariance.
pub fn covariance(xs: &[f64], ys: &[f64]) -> f64 {
    assert_eq!(xs.len(), ys.len());
    let (mx, my) = (mean(xs), mean(ys));
    let prod: Vec<f64> = xs.iter().zip(ys).map(|(x, y)| (x - mx) * (y - my)).collect();
    pairwise_sum(&prod) / (xs.len() - 1) as f64
}

/// Sample second-moment estimator with its standard error: returns
/// (ĉov, stderr) where the error comes from the sample variance of the
/// centred products.
pub fn covariance_with_stderr(xs: &[f64], ys: &[f64]) -> (f64, f64) {
    let (mx, my) = (mean(xs), mean(ys));
    let prod: Vec<f64> = xs.iter().zip(ys).map(|(x, y)| (x - mx) * (y - my)).collect();
    let (m, se) = mean_stderr(&prod);
    let n = xs.len() as f64;
    (m * n / (n - 1.0), se)
}

/// Least-squares slope through the origin of `y` on `x`, with its standard error.
pub fn slope_through_origin(xs: &[f64], ys: &[f64]) -> (f64, f64) {
    assert_eq!(xs.len(), ys.len());
    let xx: Vec<f64> = xs.iter().map(|x| x * x).collect();
    let xy: Vec<f64> = xs.iter().zip(ys).map(|(x, y)| x * y).collect();
    let sxx = pairwise_sum(&xx);
    let slope = pairwise_sum(&xy) / sxx;
    let res: Vec<f64> = xs
        .iter()
        .zip(ys)
        .map(|(x, y)| (y - slope * x) * (y - slope * x))
        .collect();
    let dof = (xs.len().max(2) - 1) as f64;
    let s2 = pairwise_sum(&res) / dof;
    (slope, (s2 / sxx).sqrt())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn pairwise_matches_naive_on_small_input() {
        let xs: Vec<f64> = (0..10).map(|i| i as f64).collect();
        assert_eq!(pairwise_sum(&xs), 45.0);
    }

    #[test]
    fn pairwise_reduces_cancellation_error() {
        let xs = vec![0.1; 1_000_000];
        let err = (pairwise_sum(&xs) - 100_000.0).abs();
        let naive: f64 = xs.iter().sum();
        assert!(err < 1e-8);
        assert!(err <= (naive - 100_000.0).abs());
    }

    #[test]
    fn stderr_of_constant_sample_is_zero() {
        let (m, se) = mean_stderr(&[2.5; 100]);
        assert_eq!(m, 2.5);
        assert_eq!(se, 0.0);
    }

    #[test]
    fn slope_recovers_exact_line() {
        let xs = [1.0, -2.0, 3.0, 0.5];
        let ys: Vec<f64> = xs.iter().map(|x| 1.5 * x).collect();
        let (b, se) = slope_through_origin(&xs, &ys);
        assert!((b - 1.5).abs() < 1e-15);
        assert!(se < 1e-14);
    }
}
