//! Randomised invariants of the pricing and term-structure engine.

use bachelier_core::analytic::{
    bachelier_call, bachelier_put, forward_price, futures_price, hw_bond_price, hw_moments, perpetual_gamma,
    perpetual_residual, HullWhiteParams,
};
use bachelier_core::curve::{bonds_from_forward_rates, bonds_from_loan_rates, uniform_grid, RateKind, RateSurface};
use bachelier_core::mc::price_ecc_riskneutral;
use bachelier_core::model::{esg_adjusted_price, CoefficientFn, EsgInputs, MarketModel, Payoff};
use bachelier_core::pde::{price_bachelier_pde, solve_cauchy, CauchySpec, DriftMode, GridSpec};
use bachelier_core::simulate::SimConfig;
use proptest::prelude::*;

proptest! {
    #![proptest_config(ProptestConfig::with_cases(256))]

    #[test]
    fn put_call_parity(a in -200.0..200.0f64, k in -200.0..200.0f64, r in -5.0..5.0f64,
                       v in 0.01..50.0f64, tau in 0.0..10.0f64) {
        let gap = bachelier_call(a, k, r, v, tau).unwrap() - bachelier_put(a, k, r, v, tau).unwrap();
        let exact = a - k + r * tau;
        let scale = 1.0 + a.abs() + k.abs() + (r * tau).abs() + v * tau.sqrt();
        prop_assert!((gap - exact).abs() <= 1e-12 * scale, "gap {gap} exact {exact}");
    }

    #[test]
    fn call_is_monotone(a in 0.0..200.0f64, k in 0.0..200.0f64, r in -5.0..5.0f64,
                        v in 0.01..50.0f64, tau in 0.01..5.0f64, bump in 0.001..10.0f64) {
        let c = bachelier_call(a, k, r, v, tau).unwrap();
        let tol = 1e-12 * (1.0 + c.abs());
        prop_assert!(bachelier_call(a + bump, k, r, v, tau).unwrap() >= c - tol);
        prop_assert!(bachelier_call(a, k + bump, r, v, tau).unwrap() <= c + tol);
        prop_assert!(bachelier_call(a, k, r, v + bump, tau).unwrap() >= c - tol);
    }

    #[test]
    fn vanishing_volatility_gives_intrinsic_value(a in 0.0..200.0f64, k in 0.0..200.0f64,
                                                  r in -5.0..5.0f64, tau in 0.01..5.0f64) {
        prop_assume!(a - k + r * tau > 1e-3);
        let c = bachelier_call(a, k, r, 1e-9, tau).unwrap();
        prop_assert!((c - (a - k)).abs() < 1e-9 * (1.0 + a.abs() + k.abs()));
    }

    #[test]
    fn perpetual_residual_is_rounding(v in 0.01..20.0f64, r in 0.01..5.0f64, negative in any::<bool>()) {
        let r = if negative { -r } else { r };
        prop_assert!(perpetual_gamma(v, r).unwrap().is_finite());
        prop_assert!(perpetual_residual(v, r).unwrap().abs() < 1e-12);
    }

    #[test]
    fn hw_bond_at_its_maturity_is_one(a in 0.0..1.0f64, b in 0.0..2.0f64, v in 0.0..0.1f64,
                                     r in -0.05..0.2f64, t in 0.0..10.0f64) {
        let p = HullWhiteParams::constant(a, b, v, 0.03).unwrap();
        prop_assert_eq!(hw_bond_price(&p, r, t, t).unwrap(), 1.0);
    }

    #[test]
    fn hw_moments_are_positive_semidefinite(a in 0.0..1.0f64, b in 0.0..3.0f64, v in 0.0..0.2f64,
                                           r0 in -0.05..0.2f64, tau in 0.01..10.0f64) {
        let p = HullWhiteParams::constant(a, b, v, r0).unwrap();
        let m = hw_moments(&p, tau).unwrap();
        prop_assert!(m.var_big_r >= 0.0 && m.var_r >= 0.0);
        prop_assert!(m.var_big_r * m.var_r - m.cov * m.cov >= -1e-14);
    }

    #[test]
    fn futures_forward_spread_is_the_rate_integral(a in -200.0..200.0f64, v in -50.0..50.0f64,
                                                   integral in -5.0..5.0f64) {
        let spread = futures_price(a, integral) - (forward_price(a, v) + v);
        prop_assert!((spread - integral).abs() <= 1e-12 * (1.0 + a.abs() + v.abs()));
    }

    #[test]
    fn esg_price_is_linear_in_the_score(s in 0.1..500.0f64, aff in -2.0..2.0f64,
                                       x in -1.0..1.0f64, y in -1.0..1.0f64, w in 0.0..1.0f64) {
        let p = |score: f64| esg_adjusted_price(&EsgInputs::new(s, score, aff).unwrap());
        let mixed = p(w * x + (1.0 - w) * y);
        prop_assert!((mixed - (w * p(x) + (1.0 - w) * p(y))).abs() < 1e-10 * (1.0 + s));
    }

    #[test]
    fn accepted_models_never_see_rate_above_rho(starts in prop::collection::vec(0.1..10.0f64, 0..4),
                                                 rates in prop::collection::vec(-3.0..3.0f64, 5),
                                                 gaps in prop::collection::vec(-0.5..3.0f64, 5)) {
        let mut starts = starts;
        starts.sort_by(f64::total_cmp);
        starts.dedup();
        starts.insert(0, 0.0);
        let n = starts.len();
        let rate = CoefficientFn::piecewise(starts.clone(), rates[..n].to_vec()).unwrap();
        let rho_values = rates[..n].iter().zip(&gaps[..n]).map(|(r, g)| r + g).collect();
        let rho = CoefficientFn::piecewise(starts, rho_values).unwrap();
        let accepted = gaps[..n].iter().all(|g| *g >= 0.0);
        match MarketModel::new(rho, CoefficientFn::constant(10.0), rate, None, 100.0, 1.0) {
            Ok(m) => {
                prop_assert!(accepted);
                for (x, t) in m.check_domain().points(100) {
                    prop_assert!(m.rate.value(x, t) <= m.rho.value(x, t));
                }
            }
            Err(_) => prop_assert!(!accepted),
        }
    }

    #[test]
    fn coefficient_evaluation_is_pure(x in -500.0..500.0f64, t in 0.0..30.0f64) {
        let c = CoefficientFn::tabulated(vec![0.0, 100.0, 200.0], vec![0.0, 1.0],
                                         vec![vec![1.0, 2.0, 4.0], vec![3.0, 1.0, 0.5]]).unwrap();
        prop_assert_eq!(c.value(x, t).to_bits(), c.value(x, t).to_bits());
    }

    #[test]
    fn diagonal_bonds_are_exactly_one(level in -0.05..0.2f64, slope in -0.05..0.05f64,
                                      curvature in -0.01..0.01f64, n in 8usize..64) {
        let maturities = uniform_grid(0.0, 2.0, n).unwrap();
        let times: Vec<f64> = maturities.iter().step_by(4).copied().collect();
        let f = |t: f64, big_t: f64| Ok(level + slope * (big_t - t) + curvature * big_t * big_t);
        for kind in [RateKind::Loan, RateKind::Forward] {
            let rates = RateSurface::from_fn(&times, &maturities, kind, f).unwrap();
            let bonds = match kind {
                RateKind::Loan => bonds_from_loan_rates(&rates).unwrap(),
                RateKind::Forward => bonds_from_forward_rates(&rates).unwrap(),
            };
            for i in 0..bonds.times().len() {
                prop_assert_eq!(bonds.row(i).1[0], 1.0);
            }
        }
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(16))]

    #[test]
    fn pde_comparison_principle(k1 in 60.0..140.0f64, dk in 0.0..20.0f64, lift in 0.0..5.0f64) {
        let grid = GridSpec::new(0.0, 200.0, 81, 40).unwrap().with_theta(1.0).unwrap();
        let solve = |payoff: Payoff| {
            let spec = CauchySpec {
                mu: CoefficientFn::constant(1.0),
                sigma: CoefficientFn::constant(10.0),
                a: CoefficientFn::constant(0.0),
                h: CoefficientFn::constant(0.0),
                terminal: payoff,
                maturity: 1.0,
            };
            solve_cauchy(&spec, &grid).unwrap()
        };
        // call(k1) + lift >= call(k1 + dk) everywhere.
        let low = solve(Payoff::call(k1 + dk));
        let high = solve(Payoff::custom("lifted call", move |x| (x - k1).max(0.0) + lift));
        for (r_hi, r_lo) in high.surface.iter().zip(&low.surface) {
            for (h, l) in r_hi.iter().zip(r_lo) {
                prop_assert!(h >= &(l - 1e-12));
            }
        }
    }

    #[test]
    fn pde_price_is_shift_invariant(shift in -50.0..500.0f64) {
        let price = |c: f64| {
            let model = MarketModel::constant(100.0 + c, 3.0, 2.0, 10.0).unwrap();
            let grid = GridSpec::new(20.0 + c, 180.0 + c, 161, 80).unwrap();
            price_bachelier_pde(&model, &Payoff::call(100.0 + c), 1.0, Some(&grid), DriftMode::RiskNeutral)
                .unwrap()
                .value
        };
        prop_assert!((price(shift) - price(0.0)).abs() < 1e-10);
    }

    #[test]
    fn mc_estimates_depend_only_on_the_seed(seed in 0u64..1_000_000) {
        let model = MarketModel::constant(100.0, 3.0, 2.0, 10.0).unwrap();
        let call = Payoff::call(100.0);
        let cfg = SimConfig::new(seed, 4_000, 20, 0.0, 1.0).unwrap();
        let a = price_ecc_riskneutral(&model, &call, 1.0, &cfg).unwrap();
        let b = price_ecc_riskneutral(&model, &call, 1.0, &cfg).unwrap();
        prop_assert_eq!(a.value.to_bits(), b.value.to_bits());
        prop_assert_eq!(a.stderr.to_bits(), b.stderr.to_bits());
        let other = price_ecc_riskneutral(&model, &call, 1.0, &cfg.with_seed(seed + 1)).unwrap();
        prop_assert!(a.z_score(&other) < 6.0);
    }
}

#[test]
fn halving_the_time_step_moves_a_smooth_price_less_than_its_stderr() {
    let vol = CoefficientFn::tabulated(
        vec![50.0, 150.0],
        vec![0.0, 1.0],
        vec![vec![6.0, 14.0], vec![6.0, 14.0]],
    )
    .unwrap();
    let model = MarketModel::new(
        CoefficientFn::constant(3.0),
        vol,
        CoefficientFn::constant(2.0),
        None,
        100.0,
        1.0,
    )
    .unwrap();
    let payoff = Payoff::custom("quadratic", |x| (x - 100.0).powi(2) / 100.0);
    let fine = SimConfig::new(11, 100_000, 40, 0.0, 1.0).unwrap();
    let coarse = SimConfig::new(11, 100_000, 20, 0.0, 1.0)
        .unwrap()
        .with_substeps(2)
        .unwrap();
    let f = price_ecc_riskneutral(&model, &payoff, 1.0, &fine).unwrap();
    let c = price_ecc_riskneutral(&model, &payoff, 1.0, &coarse).unwrap();
    assert!((f.value - c.value).abs() < f.stderr, "fine {f:?} coarse {c:?}");
}
