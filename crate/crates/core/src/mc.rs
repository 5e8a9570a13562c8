//! Feynman–Kac Monte Carlo: the probabilistic solution of the Cauchy problem,
//! European claims under the driftless, risk-neutral and dividend diffusions,
//! the gain-process pricing formula, zero-coupon bonds, and the Hull–White
//! estimators.
//!
//! Every estimator is a pure function of its inputs and the seed. Path
//! functionals are reduced with pairwise summation, so results do not depend
//! on the number of worker threads.

use serde::Serialize;

use crate::analytic::{HullWhiteParams, Method, PriceResult};
use crate::error::{Error, Result};
use crate::model::{CoefficientFn, MarketModel, Payoff};
use crate::numerics::stats::{covariance_with_stderr, mean_stderr, slope_through_origin};
use crate::pde::CauchySpec;
use crate::simulate::{
    check_horizon, hw_terminal_pairs, pair_means, par_mean, par_paths, Diffusion, PathSet, SimConfig,
};

/// Sample mean of a path functional with `stderr = s / √n`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
#[serde(rename_all = "camelCase")]
pub struct McEstimate {
    pub value: f64,
    pub stderr: f64,
    pub n_paths: usize,
    pub seed: u64,
}

impl McEstimate {
    fn streamed(cfg: &SimConfig, (value, stderr): (f64, f64)) -> Self {
        McEstimate {
            value,
            stderr,
            n_paths: cfg.n_paths,
            seed: cfg.seed,
        }
    }

    pub fn from_samples(samples: &[f64], seed: u64) -> Self {
        let (value, stderr) = mean_stderr(samples);
        McEstimate {
            value,
            stderr,
            n_paths: samples.len(),
            seed,
        }
    }

    /// `|self − other| / √(se₁² + se₂²)`; infinite when both errors vanish
    /// and the values differ.
    pub fn z_score(&self, other: &McEstimate) -> f64 {
        let joint = self.stderr.hypot(other.stderr);
        let gap = (self.value - other.value).abs();
        if joint > 0.0 {
            gap / joint
        } else if gap == 0.0 {
            0.0
        } else {
            f64::INFINITY
        }
    }

    /// `|self − target| / stderr`, with the same conventions as [`Self::z_score`].
    pub fn z_against(&self, target: f64) -> f64 {
        let gap = (self.value - target).abs();
        if self.stderr > 0.0 {
            gap / self.stderr
        } else if gap == 0.0 {
            0.0
        } else {
            f64::INFINITY
        }
    }

    pub fn into_price(self) -> PriceResult {
        let mut diagnostics = std::collections::BTreeMap::new();
        diagnostics.insert("n_paths".into(), self.n_paths as f64);
        if self.value < 0.0 {
            diagnostics.insert("negative_price".into(), 1.0);
        }
        PriceResult {
            value: self.value,
            stderr: Some(self.stderr),
            method: Method::Mc,
            diagnostics,
        }
    }
}

/// `f(x₀, t₀) = E[∫_{t₀}^T φ h ds + φ_T g(X_T)]` with `φ = exp(−∫ a ds)` along
/// `dX = μ dt + σ dB`. Time integrals use the trapezoid rule on the
/// simulation grid; `cfg`'s seed, path and step counts are used over
/// `[t₀, T]`.
pub fn fk_price(spec: &CauchySpec, x0: f64, t0: f64, cfg: &SimConfig) -> Result<McEstimate> {
    if !(spec.sigma.bounds().0 > 0.0) {
        return Err(Error::Config("sigma must be positive".into()));
    }
    if t0 == spec.maturity {
        return Ok(McEstimate {
            value: spec.terminal.value(x0),
            stderr: 0.0,
            n_paths: cfg.n_paths,
            seed: cfg.seed,
        });
    }
    let cfg = cfg.over(t0, spec.maturity)?;
    let times = cfg.times();
    let d = Diffusion {
        drift: &spec.mu,
        drift_sign: 1.0,
        vol: &spec.sigma,
        rate: None,
    };
    let stats = par_mean(&cfg, |_, normals| {
        let mut kill = 0.0;
        let mut source = 0.0;
        let mut prev = (0.0, 0.0);
        let mut x_end = x0;
        d.walk(x0, &times, normals, |k, x, _| {
            let t = times[k];
            let a = spec.a.value(x, t);
            if k > 0 {
                kill += 0.5 * (prev.0 + a) * (t - times[k - 1]);
            }
            let weighted = (-kill).exp() * spec.h.value(x, t);
            if k > 0 {
                source += 0.5 * (prev.1 + weighted) * (t - times[k - 1]);
            }
            prev = (a, weighted);
            x_end = x;
        });
        source + (-kill).exp() * spec.terminal.value(x_end)
    });
    Ok(McEstimate::streamed(&cfg, stats))
}

/// Mean of `g(X_T) − ∫₀^T r(X_s, s) ds` along one diffusion started at `A₀`.
fn ecc_estimate(
    d: &Diffusion,
    model: &MarketModel,
    payoff: &Payoff,
    maturity: f64,
    cfg: &SimConfig,
) -> Result<McEstimate> {
    let cfg = cfg.over(0.0, maturity)?;
    check_horizon(&cfg, model.horizon)?;
    let times = cfg.times();
    let stats = par_mean(&cfg, |_, normals| {
        let mut x_end = model.a0;
        let integral = d.walk(model.a0, &times, normals, |_, x, _| x_end = x);
        payoff.value(x_end) - integral
    });
    Ok(McEstimate::streamed(&cfg, stats))
}

/// Price along the driftless diffusion `dZ = v dB`: the Feynman–Kac solution
/// of Bachelier's original PDE without a drift term.
pub fn price_ecc_driftless(model: &MarketModel, payoff: &Payoff, maturity: f64, cfg: &SimConfig) -> Result<McEstimate> {
    let zero = CoefficientFn::default();
    let d = Diffusion {
        drift: &zero,
        drift_sign: 1.0,
        vol: &model.vol,
        rate: Some(&model.rate),
    };
    ecc_estimate(&d, model, payoff, maturity, cfg)
}

/// `E^ℚ[g(A_T) − ∫₀^T r ds]` with `dA = r dt + v dB^ℚ`.
pub fn price_ecc_riskneutral(
    model: &MarketModel,
    payoff: &Payoff,
    maturity: f64,
    cfg: &SimConfig,
) -> Result<McEstimate> {
    let d = Diffusion {
        drift: &model.rate,
        drift_sign: 1.0,
        vol: &model.vol,
        rate: Some(&model.rate),
    };
    ecc_estimate(&d, model, payoff, maturity, cfg)
}

/// Price along `dZ = −D dt + v dB`; `D = 0` reproduces
/// [`price_ecc_driftless`] path by path.
pub fn price_ecc_dividend(model: &MarketModel, payoff: &Payoff, maturity: f64, cfg: &SimConfig) -> Result<McEstimate> {
    let dividend = model
        .dividend
        .as_ref()
        .ok_or_else(|| Error::Config("model has no dividend rate".into()))?;
    let d = Diffusion {
        drift: dividend,
        drift_sign: -1.0,
        vol: &model.vol,
        rate: Some(&model.rate),
    };
    ecc_estimate(&d, model, payoff, maturity, cfg)
}

/// `mean(g(X_T) − ∫ r ds)` over an existing path set. Pricing several payoffs
/// on one set shares the random numbers between them.
pub fn price_on_paths(paths: &PathSet, payoff: &Payoff) -> Result<McEstimate> {
    let integrals = paths
        .integrals
        .as_ref()
        .ok_or_else(|| Error::Config("path set carries no rate integral".into()))?;
    let cfg = &paths.meta.config;
    let samples: Vec<f64> = integrals
        .iter()
        .enumerate()
        .map(|(i, r)| payoff.value(paths.terminal(i)) - r)
        .collect();
    let (value, stderr) = mean_stderr(&pair_means(cfg, samples));
    Ok(McEstimate::streamed(cfg, (value, stderr)))
}

/// `E^ℚ[X_T + ∫₀^T 𝔇 ds − ∫₀^T r ds]` for a security paying the dividend
/// stream `𝔇(A_s, s)`, on risk-neutral asset paths.
pub fn price_gain_security(
    terminal: &Payoff,
    dividend_stream: &CoefficientFn,
    model: &MarketModel,
    maturity: f64,
    cfg: &SimConfig,
) -> Result<McEstimate> {
    let cfg = cfg.over(0.0, maturity)?;
    check_horizon(&cfg, model.horizon)?;
    let times = cfg.times();
    let d = Diffusion {
        drift: &model.rate,
        drift_sign: 1.0,
        vol: &model.vol,
        rate: Some(&model.rate),
    };
    let stats = par_mean(&cfg, |_, normals| {
        let mut paid = 0.0;
        let mut prev = 0.0;
        let mut x_end = model.a0;
        let rate_integral = d.walk(model.a0, &times, normals, |k, x, _| {
            let q = dividend_stream.value(x, times[k]);
            if k > 0 {
                paid += 0.5 * (prev + q) * (times[k] - times[k - 1]);
            }
            prev = q;
            x_end = x;
        });
        terminal.value(x_end) + paid - rate_integral
    });
    Ok(McEstimate::streamed(&cfg, stats))
}

/// Replicating weights of the bond: `a` units of the asset and `b` of the
/// account, from the martingale-representation integrand `γ_B`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
#[serde(rename_all = "camelCase")]
pub struct Replication {
    pub gamma_b: f64,
    pub gamma_b_stderr: f64,
    pub a: f64,
    pub b: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
#[serde(rename_all = "camelCase")]
pub struct BondEstimate {
    pub estimate: McEstimate,
    pub replication: Option<Replication>,
}

/// `ℬ(t,T) = 1 − E^ℚ_t ∫_t^T r ds` with the asset at `A₀` at time `t`.
///
/// With a constant volatility the time-averaged `γ_B` is the least-squares
/// slope of the centred `1 − ∫ r` on the Brownian increment `W_T − W_t`; the
/// replication weights are then `a = γ_B / v` and `b = 1 − γ_B / v`.
pub fn bond_price_mc(model: &MarketModel, t: f64, maturity: f64, cfg: &SimConfig) -> Result<BondEstimate> {
    if !(t <= maturity) {
        return Err(Error::Domain(format!("bond needs t <= T, got t = {t}, T = {maturity}")));
    }
    if t == maturity {
        return Ok(BondEstimate {
            estimate: McEstimate {
                value: 1.0,
                stderr: 0.0,
                n_paths: cfg.n_paths,
                seed: cfg.seed,
            },
            replication: None,
        });
    }
    let cfg = cfg.over(t, maturity)?;
    check_horizon(&cfg, model.horizon)?;
    let times = cfg.times();
    let d = Diffusion {
        drift: &model.rate,
        drift_sign: 1.0,
        vol: &model.vol,
        rate: Some(&model.rate),
    };
    let constant_vol = model.vol.as_constant().filter(|v| *v > 0.0);
    let pairs = par_paths(&cfg, |_, normals| {
        let mut dw = 0.0;
        let mut prev = model.a0;
        let integral = d.walk(model.a0, &times, normals, |k, x, _| {
            if k > 0 {
                let (s, dt) = (times[k - 1], times[k] - times[k - 1]);
                dw += (x - prev - model.rate.value(prev, s) * dt) / model.vol.value(prev, s);
            }
            prev = x;
        });
        (1.0 - integral, dw)
    });
    let ys: Vec<f64> = pairs.iter().map(|p| p.0).collect();
    let estimate = McEstimate::from_samples(&ys, cfg.seed);
    let replication = constant_vol.map(|v| {
        let centred: Vec<f64> = ys.iter().map(|y| y - estimate.value).collect();
        let dws: Vec<f64> = pairs.iter().map(|p| p.1).collect();
        let (gamma_b, gamma_b_stderr) = slope_through_origin(&dws, &centred);
        Replication {
            gamma_b,
            gamma_b_stderr,
            a: gamma_b / v,
            b: 1.0 - gamma_b / v,
        }
    });
    Ok(BondEstimate { estimate, replication })
}

/// `ℬ(t,T) = 1 − E ∫_t^T r ds` on Hull–White paths started from `r₀` at `t`.
pub fn hw_bond_price_mc(p: &HullWhiteParams, t: f64, maturity: f64, cfg: &SimConfig) -> Result<McEstimate> {
    if !(t <= maturity) {
        return Err(Error::Domain(format!("bond needs t <= T, got t = {t}, T = {maturity}")));
    }
    if t == maturity {
        return Ok(McEstimate {
            value: 1.0,
            stderr: 0.0,
            n_paths: cfg.n_paths,
            seed: cfg.seed,
        });
    }
    let cfg = cfg.over(t, maturity)?;
    let samples: Vec<f64> = hw_terminal_pairs(p, &cfg)?
        .into_iter()
        .map(|(_, big_r)| 1.0 - big_r)
        .collect();
    Ok(McEstimate::from_samples(&samples, cfg.seed))
}

/// A sample moment with its standard error.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Moment {
    pub value: f64,
    pub stderr: f64,
}

impl Moment {
    fn new((value, stderr): (f64, f64)) -> Self {
        Moment { value, stderr }
    }
}

/// Sample counterparts of [`crate::analytic::HwMoments`].
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
#[serde(rename_all = "camelCase")]
pub struct HwSampleMoments {
    pub mu_big_r: Moment,
    pub var_big_r: Moment,
    pub mu_r: Moment,
    pub var_r: Moment,
    pub cov: Moment,
}

/// Means, variances and covariance of `(R_τ, r_τ)` from simulated paths.
pub fn hw_moments_mc(p: &HullWhiteParams, tau: f64, cfg: &SimConfig) -> Result<HwSampleMoments> {
    let cfg = cfg.over(0.0, tau)?;
    let pairs = hw_terminal_pairs(p, &cfg)?;
    let r: Vec<f64> = pairs.iter().map(|x| x.0).collect();
    let big_r: Vec<f64> = pairs.iter().map(|x| x.1).collect();
    Ok(HwSampleMoments {
        mu_big_r: Moment::new(mean_stderr(&big_r)),
        var_big_r: Moment::new(covariance_with_stderr(&big_r, &big_r)),
        mu_r: Moment::new(mean_stderr(&r)),
        var_r: Moment::new(covariance_with_stderr(&r, &r)),
        cov: Moment::new(covariance_with_stderr(&big_r, &r)),
    })
}

/// `E[(ℬ(τ,T) − K)⁺ − R_τ]` with `ℬ(τ,T) = 1 − r_τ c(τ,T) − a(τ,T)` on
/// simulated `(r_τ, R_τ)`.
pub fn hw_bond_call_mc(p: &HullWhiteParams, t_bond: f64, tau: f64, strike: f64, cfg: &SimConfig) -> Result<McEstimate> {
    if !(tau > 0.0 && tau < t_bond) {
        return Err(Error::Domain(format!(
            "option expiry {tau} must lie strictly between 0 and the bond maturity {t_bond}"
        )));
    }
    let c = p.c(tau, t_bond)?;
    let a = p.a_term(tau, t_bond)?;
    let cfg = cfg.over(0.0, tau)?;
    let samples: Vec<f64> = hw_terminal_pairs(p, &cfg)?
        .into_iter()
        .map(|(r, big_r)| (1.0 - r * c - a - strike).max(0.0) - big_r)
        .collect();
    Ok(McEstimate::from_samples(&samples, cfg.seed))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::analytic::{bachelier_call, hw_bond_call, hw_bond_price, hw_moments};
    use crate::pde::{price_bachelier_pde, price_dividend_pde, DriftMode};
    use crate::simulate::{simulate_asset, Measure, Scheme, Storage};

    fn cfg(seed: u64, n_paths: usize, n_steps: usize) -> SimConfig {
        SimConfig::new(seed, n_paths, n_steps, 0.0, 1.0).unwrap()
    }

    fn flat_spec(a: f64, h: f64, terminal: Payoff) -> CauchySpec {
        CauchySpec {
            mu: CoefficientFn::constant(0.0),
            sigma: CoefficientFn::constant(10.0),
            a: CoefficientFn::constant(a),
            h: CoefficientFn::constant(h),
            terminal,
            maturity: 1.0,
        }
    }

    #[test]
    fn fk_martingale_and_discounting() {
        let c = cfg(3, 20_000, 50);
        let m = fk_price(&flat_spec(0.0, 0.0, Payoff::forward(0.0)), 100.0, 0.0, &c).unwrap();
        assert!(m.z_against(100.0) < 3.0, "{m:?}");
        let k = fk_price(&flat_spec(0.7, 0.0, Payoff::custom("one", |_| 1.0)), 100.0, 0.0, &c).unwrap();
        assert!((k.value - (-0.7f64).exp()).abs() < 1e-12);
        assert!(k.stderr < 1e-14);
    }

    #[test]
    fn fk_matches_driftless_pde() {
        let model = MarketModel::constant(100.0, 3.0, 2.0, 10.0).unwrap();
        let spec = crate::pde::bachelier_spec(&model, &Payoff::call(100.0), 1.0, DriftMode::PaperEq7);
        let mc = fk_price(&spec, 100.0, 0.0, &cfg(5, 100_000, 50)).unwrap();
        let pde = price_bachelier_pde(&model, &Payoff::call(100.0), 1.0, None, DriftMode::PaperEq7).unwrap();
        assert!(
            (mc.value - pde.value).abs() < (3.0 * mc.stderr).max(2e-3),
            "{mc:?} {}",
            pde.value
        );
    }

    #[test]
    fn riskneutral_call_matches_closed_form() {
        let model = MarketModel::constant(100.0, 3.0, 2.0, 10.0).unwrap();
        let mc = price_ecc_riskneutral(&model, &Payoff::call(100.0), 1.0, &cfg(7, 100_000, 50)).unwrap();
        let exact = bachelier_call(100.0, 100.0, 2.0, 10.0, 1.0).unwrap();
        assert!(mc.z_against(exact) < 3.0, "{mc:?}");
        let fwd = price_ecc_riskneutral(&model, &Payoff::forward(100.0), 1.0, &cfg(7, 100_000, 50)).unwrap();
        assert!(fwd.z_against(0.0) < 3.0, "{fwd:?}");
    }

    #[test]
    fn deterministic_paths_give_exact_values() {
        let flat = MarketModel::degenerate(
            CoefficientFn::constant(2.0),
            CoefficientFn::constant(0.0),
            CoefficientFn::constant(2.0),
            None,
            100.0,
            1.0,
        )
        .unwrap();
        let c = cfg(1, 4, 100);
        let call = price_ecc_riskneutral(&flat, &Payoff::call(95.0), 1.0, &c).unwrap();
        assert!((call.value - (102.0 - 95.0 - 2.0)).abs() < 1e-12);
        assert!(call.stderr < 1e-12);

        let no_rate = MarketModel::degenerate(
            CoefficientFn::constant(0.0),
            CoefficientFn::constant(0.0),
            CoefficientFn::constant(0.0),
            None,
            100.0,
            1.0,
        )
        .unwrap();
        let gain = price_gain_security(
            &Payoff::custom("zero", |_| 0.0),
            &CoefficientFn::constant(1.5),
            &no_rate,
            2.0,
            &c,
        )
        .unwrap();
        assert!((gain.value - 3.0).abs() < 1e-12);
    }

    #[test]
    fn gain_security_is_linear() {
        let model = MarketModel::constant(100.0, 3.0, 2.0, 10.0).unwrap();
        let c = cfg(9, 50_000, 25);
        let g = price_gain_security(&Payoff::forward(0.0), &CoefficientFn::constant(1.5), &model, 1.0, &c).unwrap();
        assert!(g.z_against(101.5) < 3.0, "{g:?}");
        let plain = price_gain_security(&Payoff::call(100.0), &CoefficientFn::constant(0.0), &model, 1.0, &c).unwrap();
        let ecc = price_ecc_riskneutral(&model, &Payoff::call(100.0), 1.0, &c).unwrap();
        assert_eq!(plain.value, ecc.value);
    }

    #[test]
    fn dividend_pricer_reduces_and_matches_pde() {
        let model = MarketModel::constant(100.0, 3.0, 2.0, 10.0).unwrap();
        let c = cfg(13, 50_000, 50);
        let zero_d = model.clone().with_dividend(CoefficientFn::constant(0.0));
        let a = price_ecc_dividend(&zero_d, &Payoff::call(100.0), 1.0, &c).unwrap();
        let b = price_ecc_driftless(&model, &Payoff::call(100.0), 1.0, &c).unwrap();
        assert_eq!(a, b);

        let with_d = model.with_dividend(CoefficientFn::constant(1.5));
        let mc = price_ecc_dividend(&with_d, &Payoff::call(100.0), 1.0, &cfg(13, 200_000, 50)).unwrap();
        let pde = price_dividend_pde(&with_d, &Payoff::call(100.0), 1.0, None).unwrap();
        assert!(
            (mc.value - pde.value).abs() < (3.0 * mc.stderr).max(2e-3),
            "{mc:?} {}",
            pde.value
        );
        assert!(matches!(
            price_ecc_dividend(
                &MarketModel::constant(100.0, 0.0, 0.0, 1.0).unwrap(),
                &Payoff::call(1.0),
                1.0,
                &c
            ),
            Err(Error::Config(_))
        ));
    }

    #[test]
    fn parity_is_exact_on_antithetic_paths() {
        let model = MarketModel::constant(100.0, 3.0, 2.0, 10.0).unwrap();
        let c = cfg(17, 20_000, 50)
            .with_storage(Storage::Terminal)
            .with_antithetic(true)
            .unwrap();
        let paths = simulate_asset(&model, &c, Measure::RiskNeutral).unwrap();
        let call = price_on_paths(&paths, &Payoff::call(95.0)).unwrap();
        let put = price_on_paths(&paths, &Payoff::put(95.0)).unwrap();
        assert!((call.value - put.value - (100.0 + 2.0 - 95.0)).abs() < 1e-12);
    }

    #[test]
    fn bond_examples() {
        let flat = MarketModel::constant(100.0, 0.05, 0.03, 10.0).unwrap();
        let b = bond_price_mc(&flat, 1.0, 3.0, &cfg(1, 1000, 100)).unwrap();
        assert!((b.estimate.value - 0.94).abs() < 1e-12);
        assert!(b.replication.unwrap().gamma_b.abs() < 1e-12);
        assert_eq!(
            bond_price_mc(&flat, 2.0, 2.0, &cfg(1, 10, 10)).unwrap().estimate.value,
            1.0
        );
        assert!(bond_price_mc(&flat, 2.0, 1.0, &cfg(1, 10, 10)).is_err());

        // r = 0.01 + 0.0001 x: γ_B averages −0.0001·v·(T − s) over [0, 1].
        let linear = MarketModel::new(
            CoefficientFn::constant(1.0),
            CoefficientFn::constant(10.0),
            CoefficientFn::tabulated(
                vec![-1000.0, 1000.0],
                vec![0.0, 30.0],
                vec![vec![-0.09, 0.11], vec![-0.09, 0.11]],
            )
            .unwrap(),
            None,
            100.0,
            1.0,
        )
        .unwrap();
        let one = bond_price_mc(&linear, 0.0, 1.0, &cfg(21, 50_000, 50)).unwrap();
        let two = bond_price_mc(&linear, 0.0, 1.0, &cfg(22, 50_000, 50)).unwrap();
        assert!(one.estimate.z_score(&two.estimate) < 3.0);
        let rep = one.replication.unwrap();
        assert!(
            (rep.gamma_b + 0.0001 * 10.0 * 0.5).abs() < 3.0 * rep.gamma_b_stderr + 1e-6,
            "{rep:?}"
        );
        assert!((rep.a + rep.b - 1.0).abs() < 1e-15);
    }

    #[test]
    fn hull_white_estimators_match_closed_forms() {
        let p = HullWhiteParams::constant(0.1, 0.5, 0.02, 0.03).unwrap();
        let c = SimConfig::new(31, 50_000, 100, 0.0, 1.0)
            .unwrap()
            .with_scheme(Scheme::ExactWhereAvailable);
        for (t, big_t) in [(0.0, 1.0), (0.5, 2.0)] {
            let mc = hw_bond_price_mc(&p, t, big_t, &c).unwrap();
            let exact = hw_bond_price(&p, p.r0, t, big_t).unwrap();
            assert!(mc.z_against(exact) < 3.0, "{t} {big_t}: {mc:?} vs {exact}");
        }
        let m = hw_moments(&p, 1.0).unwrap();
        let s = hw_moments_mc(&p, 1.0, &c).unwrap();
        for (est, exact) in [
            (s.mu_big_r, m.mu_big_r),
            (s.var_big_r, m.var_big_r),
            (s.mu_r, m.mu_r),
            (s.var_r, m.var_r),
            (s.cov, m.cov),
        ] {
            assert!((est.value - exact).abs() < 3.0 * est.stderr, "{est:?} vs {exact}");
        }
        let closed = hw_bond_call(&p, 2.0, 1.0, 0.88).unwrap();
        let mc = hw_bond_call_mc(&p, 2.0, 1.0, 0.88, &c).unwrap();
        assert!(mc.z_against(closed.value) < 3.0, "{mc:?} vs {}", closed.value);
    }
}
