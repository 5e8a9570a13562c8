//! Adaptive Gauss–Kronrod integration and fixed Gauss rules.

use nalgebra::{DMatrix, SymmetricEigen};

use crate::error::{Error, Result};

const XGK: [f64; 8] = [
    0.991_455_371_120_812_639_206_854_697_526_329,
    0.949_107_912_342_758_524_526_189_684_047_851,
    0.864_864_423_359_769_072_789_712_788_640_926,
    0.741_531_185_599_394_439_863_864_773_280_788,
    0.586_087_235_467_691_130_294_144_845_693_013,
    0.405_845_151_377_397_166_906_606_412_076_961,
    0.207_784_955_007_898_467_600_689_403_773_245,
    0.0,
];
const WGK: [f64; 8] = [
    0.022_935_322_010_529_224_963_732_008_058_970,
    0.063_092_092_629_978_553_290_700_663_189_204,
    0.104_790_010_322_250_183_839_876_322_541_518,
    0.140_653_259_715_525_918_745_189_590_510_238,
    0.169_004_726_639_267_902_826_583_426_598_550,
    0.190_350_578_064_785_409_913_256_402_421_014,
    0.204_432_940_075_298_892_414_161_999_234_649,
    0.209_482_141_084_727_828_012_999_174_891_714,
];
// Gauss weights for the nodes XGK[1], XGK[3], XGK[5], XGK[7].
const WG: [f64; 4] = [
    0.129_484_966_168_869_693_270_611_432_679_082,
    0.279_705_391_489_276_667_901_467_771_423_780,
    0.381_830_050_505_118_944_950_369_775_488_975,
    0.417_959_183_673_469_387_755_102_040_816_327,
];

/// Default absolute tolerance for the model integrals.
pub const DEFAULT_ABS_TOL: f64 = 1e-10;
const MAX_INTERVALS: usize = 2000;

#[derive(Debug, Clone, Copy)]
pub struct Quadrature {
    pub value: f64,
    pub abs_error: f64,
    pub intervals: usize,
}

fn gk15<F: Fn(f64) -> f64>(f: &F, a: f64, b: f64) -> (f64, f64) {
    let centre = 0.5 * (a + b);
    let half = 0.5 * (b - a);
    let fc = f(centre);
    let mut kronrod = fc * WGK[7];
    let mut gauss = fc * WG[3];
    for (j, (&x, &w)) in XGK.iter().zip(WGK.iter()).take(7).enumerate() {
        let dx = half * x;
        let pair = f(centre - dx) + f(centre + dx);
        kronrod += w * pair;
        if j % 2 == 1 {
            gauss += WG[j / 2] * pair;
        }
    }
    (kronrod * half, ((kronrod - gauss) * half).abs())
}

/// Globally adaptive G7–K15 quadrature of `f` over [a, b].
///
/// Splits the worst interval until the summed error estimate drops below
/// `abs_tol`. `breakpoints` inside (a, b) seed the initial partition, which
/// is how kinks of piecewise coefficients are kept off the Kronrod nodes.
pub fn integrate<F: Fn(f64) -> f64>(f: F, a: f64, b: f64, abs_tol: f64, breakpoints: &[f64]) -> Result<Quadrature> {
    if a == b {
        return Ok(Quadrature {
            value: 0.0,
            abs_error: 0.0,
            intervals: 0,
        });
    }
    if b < a {
        let q = integrate(f, b, a, abs_tol, breakpoints)?;
        return Ok(Quadrature { value: -q.value, ..q });
    }
    let mut edges = vec![a];
    edges.extend(breakpoints.iter().copied().filter(|&p| p > a && p < b));
    edges.push(b);
    edges.sort_by(|x, y| x.partial_cmp(y).unwrap());
    edges.dedup();

    let mut pieces: Vec<(f64, f64, f64, f64)> = edges
        .windows(2)
        .map(|w| {
            let (v, e) = gk15(&f, w[0], w[1]);
            (w[0], w[1], v, e)
        })
        .collect();

    loop {
        let err: f64 = pieces.iter().map(|p| p.3).sum();
        if !err.is_finite() {
            return Err(Error::numerical(
                "integrand is not finite on the integration range",
                &[("lower", a), ("upper", b)],
            ));
        }
        if err <= abs_tol {
            let value = pieces.iter().map(|p| p.2).sum();
            return Ok(Quadrature {
                value,
                abs_error: err,
                intervals: pieces.len(),
            });
        }
        if pieces.len() >= MAX_INTERVALS {
            return Err(Error::numerical(
                "adaptive quadrature did not converge",
                &[
                    ("lower", a),
                    ("upper", b),
                    ("error_estimate", err),
                    ("tolerance", abs_tol),
                    ("intervals", pieces.len() as f64),
                ],
            ));
        }
        let (worst, _) = pieces
            .iter()
            .enumerate()
            .max_by(|x, y| x.1 .3.total_cmp(&y.1 .3))
            .unwrap();
        let (lo, hi, _, _) = pieces.swap_remove(worst);
        let mid = 0.5 * (lo + hi);
        if mid <= lo || mid >= hi {
            return Err(Error::numerical(
                "adaptive quadrature hit machine resolution",
                &[("lower", lo), ("upper", hi), ("error_estimate", err)],
            ));
        }
        let (v1, e1) = gk15(&f, lo, mid);
        let (v2, e2) = gk15(&f, mid, hi);
        pieces.push((lo, mid, v1, e1));
        pieces.push((mid, hi, v2, e2));
    }
}

/// Nodes and weights of the n-point Gauss–Legendre rule on [-1, 1].
pub fn gauss_legendre(n: usize) -> (Vec<f64>, Vec<f64>) {
    let mut x = vec![0.0; n];
    let mut w = vec![0.0; n];
    let m = n.div_ceil(2);
    for i in 0..m {
        let mut z = (std::f64::consts::PI * (i as f64 + 0.75) / (n as f64 + 0.5)).cos();
        let mut dp = 1.0;
        for _ in 0..100 {
            let (mut p1, mut p2) = (1.0, 0.0);
            for j in 0..n {
                let p3 = p2;
                p2 = p1;
                p1 = ((2 * j + 1) as f64 * z * p2 - j as f64 * p3) / (j + 1) as f64;
            }
            dp = n as f64 * (z * p1 - p2) / (z * z - 1.0);
            let z1 = z;
            z = z1 - p1 / dp;
            if (z - z1).abs() < 1e-15 {
                break;
            }
        }
        x[i] = -z;
        x[n - 1 - i] = z;
        w[i] = 2.0 / ((1.0 - z * z) * dp * dp);
        w[n - 1 - i] = w[i];
    }
    (x, w)
}

/// Nodes and weights for E[g(Z)], Z ~ N(0, 1): probabilists' Gauss–Hermite
/// with weights normalised to sum to one, nodes ascending.
///
/// Starting nodes are the eigenvalues of the Jacobi matrix; each is then
/// polished by Newton steps on the orthonormal recurrence, and the weight is
/// `1 / Σ_j p̂_j(x)²`.
pub fn gauss_hermite(n: usize) -> (Vec<f64>, Vec<f64>) {
    assert!(n > 0);
    let jacobi = DMatrix::from_fn(n, n, |i, j| {
        if i + 1 == j || j + 1 == i {
            (i.max(j) as f64).sqrt()
        } else {
            0.0
        }
    });
    let mut nodes: Vec<f64> = SymmetricEigen::new(jacobi).eigenvalues.iter().copied().collect();
    nodes.sort_by(f64::total_cmp);
    let mut weights = Vec::with_capacity(n);
    for x in nodes.iter_mut() {
        for _ in 0..4 {
            let (pn, pn1, _) = hermite_orthonormal(n, *x);
            let step = pn / ((n as f64).sqrt() * pn1);
            if !step.is_finite() {
                break;
            }
            *x -= step;
        }
        let (_, _, norm) = hermite_orthonormal(n, *x);
        weights.push(1.0 / norm);
    }
    // Enforce exact symmetry.
    for i in 0..n / 2 {
        let xs = 0.5 * (nodes[n - 1 - i] - nodes[i]);
        let ws = 0.5 * (weights[i] + weights[n - 1 - i]);
        nodes[i] = -xs;
        nodes[n - 1 - i] = xs;
        weights[i] = ws;
        weights[n - 1 - i] = ws;
    }
    if n % 2 == 1 {
        nodes[n / 2] = 0.0;
    }
    (nodes, weights)
}

/// Returns (p̂_n(x), p̂_{n-1}(x), Σ_{j<n} p̂_j(x)²) for the orthonormal
/// probabilists' Hermite polynomials.
fn hermite_orthonormal(n: usize, x: f64) -> (f64, f64, f64) {
    let (mut prev, mut cur) = (0.0, 1.0);
    let mut norm = 0.0;
    for j in 0..n {
        norm += cur * cur;
        let next = (x * cur - (j as f64).sqrt() * prev) / ((j + 1) as f64).sqrt();
        prev = cur;
        cur = next;
    }
    (cur, prev, norm)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn kronrod_is_exact_for_low_degree_polynomials() {
        let q = integrate(|x| 3.0 * x * x - 2.0 * x + 1.0, 0.0, 2.0, 1e-13, &[]).unwrap();
        assert!((q.value - 6.0).abs() < 1e-13);
        assert_eq!(q.intervals, 1);
    }

    #[test]
    fn adaptive_handles_kinks_and_smooth_functions() {
        let q = integrate(|x: f64| x.abs(), -1.0, 2.0, 1e-12, &[]).unwrap();
        assert!((q.value - 2.5).abs() < 1e-11);
        let with_break = integrate(|x: f64| x.abs(), -1.0, 2.0, 1e-12, &[0.0]).unwrap();
        assert_eq!(with_break.intervals, 2);
        let e = integrate(|x: f64| x.exp(), 0.0, 1.0, 1e-14, &[]).unwrap();
        assert!((e.value - (1f64.exp() - 1.0)).abs() < 1e-14);
        let rev = integrate(|x: f64| x.exp(), 1.0, 0.0, 1e-14, &[]).unwrap();
        assert!((rev.value + e.value).abs() < 1e-15);
    }

    #[test]
    fn non_convergence_is_reported() {
        let r = integrate(|x: f64| 1.0 / (x * x), -1.0, 1.0, 1e-8, &[]);
        assert!(matches!(r, Err(Error::Numerical { .. })));
    }

    #[test]
    fn legendre_integrates_polynomials() {
        let (x, w) = gauss_legendre(10);
        let sum: f64 = w.iter().sum();
        assert!((sum - 2.0).abs() < 1e-14);
        let m18: f64 = x.iter().zip(&w).map(|(x, w)| w * x.powi(18)).sum();
        assert!((m18 - 2.0 / 19.0).abs() < 1e-14);
    }

    #[test]
    fn hermite_reproduces_normal_moments() {
        for &n in &[8usize, 41, 200] {
            let (x, w) = gauss_hermite(n);
            let m0: f64 = w.iter().sum();
            let m2: f64 = x.iter().zip(&w).map(|(x, w)| w * x * x).sum();
            let m4: f64 = x.iter().zip(&w).map(|(x, w)| w * x.powi(4)).sum();
            assert!((m0 - 1.0).abs() < 1e-12, "n={n} m0={m0}");
            assert!((m2 - 1.0).abs() < 1e-12, "n={n} m2={m2}");
            assert!((m4 - 3.0).abs() < 1e-11, "n={n} m4={m4}");
            assert!(x.windows(2).all(|p| p[0] < p[1]));
        }
    }
}
