//! Numerical building blocks shared by the pricers.

pub mod normal;
pub mod quadrature;
pub mod stats;

/// Solves a tridiagonal system in place with the Thomas algorithm.
///
/// `lower[0]` and `upper[n-1]` are ignored. Returns `None` when a pivot
/// vanishes.
pub fn solve_tridiagonal(lower: &[f64], diag: &[f64], upper: &[f64], rhs: &mut [f64]) -> Option<()> {
    let n = diag.len();
    let mut c = vec![0.0; n];
    let mut beta = diag[0];
    if beta == 0.0 {
        return None;
    }
    rhs[0] /= beta;
    for i in 1..n {
        c[i] = upper[i - 1] / beta;
        beta = diag[i] - lower[i] * c[i];
        if beta == 0.0 {
            return None;
        }
        rhs[i] = (rhs[i] - lower[i] * rhs[i - 1]) / beta;
    }
    for i in (0..n - 1).rev() {
        rhs[i] -= c[i + 1] * rhs[i + 1];
    }
    Some(())
}

/// `∫₀ᴸ e^{k x} dx`, stable as k → 0.
pub fn exp_integral(k: f64, len: f64) -> f64 {
    let z = k * len;
    if z.abs() < 1e-8 {
        len * (1.0 + 0.5 * z + z * z / 6.0)
    } else {
        z.exp_m1() / k
    }
}

/// `∫₀ᴸ ∫₀ˣ e^{-k(x-y)} dy dx = (kL − 1 + e^{−kL}) / k²`, stable as k → 0.
pub fn exp_double_integral(k: f64, len: f64) -> f64 {
    let z = k * len;
    if z.abs() < 1e-3 {
        len * len * (0.5 - z / 6.0 + z * z / 24.0 - z * z * z / 120.0)
    } else {
        (z + (-z).exp_m1()) / (k * k)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn thomas_solves_small_system() {
        // [2 1 0; 1 2 1; 0 1 2] x = [3, 4, 3] -> x = [1, 1, 1]
        let lower = [0.0, 1.0, 1.0];
        let diag = [2.0, 2.0, 2.0];
        let upper = [1.0, 1.0, 0.0];
        let mut rhs = [3.0, 4.0, 3.0];
        solve_tridiagonal(&lower, &diag, &upper, &mut rhs).unwrap();
        for v in rhs {
            assert!((v - 1.0).abs() < 1e-15);
        }
    }

    #[test]
    fn exponential_integrals_match_limits() {
        assert!((exp_integral(0.0, 2.0) - 2.0).abs() < 1e-15);
        assert!((exp_integral(0.5, 2.0) - (1f64.exp() - 1.0) / 0.5).abs() < 1e-14);
        assert!((exp_double_integral(0.0, 2.0) - 2.0).abs() < 1e-15);
        let k: f64 = 0.7;
        let l: f64 = 1.3;
        let direct = (k * l - 1.0 + (-k * l).exp()) / (k * k);
        assert!((exp_double_integral(k, l) - direct).abs() < 1e-14);
        // series branch agrees with the closed form near the switch
        for &k in &[9.99e-4_f64, -9.99e-4, 1e-6] {
            let direct = (k + (-k).exp_m1()) / (k * k);
            assert!((exp_double_integral(k, 1.0) - direct).abs() < 1e-9);
        }
    }
}
