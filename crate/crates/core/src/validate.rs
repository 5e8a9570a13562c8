//! The acceptance suite: fourteen numbered criteria run at desk scale, each a
//! list of measured quantities with their bounds.

use std::fmt::{self, Write as _};
use std::time::Instant;

use rand_chacha::rand_core::{RngCore, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

use crate::analytic::{
    bachelier_call, bachelier_put, forward_futures_spread, forward_price, futures_price, hw_bond_call, hw_bond_price,
    hw_moments, perpetual_residual, HullWhiteParams,
};
use crate::curve::{
    bhjm_simulate, bonds_from_loan_rates, forward_rate_from_bonds, hjm_simulate_forward, hw_curve,
    loan_rate_from_bonds, loan_rates_from_bonds, uniform_grid, BhjmSpec, LoanVol, RateKind, RateSurface,
};
use crate::error::Result;
use crate::mc::{
    hw_bond_call_mc, hw_bond_price_mc, hw_moments_mc, price_ecc_dividend, price_ecc_driftless, price_ecc_riskneutral,
    price_on_paths, McEstimate,
};
use crate::model::{CoefficientFn, MarketModel, Payoff};
use crate::numerics::stats::mean_stderr;
use crate::pde::{price_bachelier_pde, price_dividend_pde, DriftMode, GridSpec};
use crate::simulate::{simulate_asset, simulate_hw_rate, Measure, Scheme, SimConfig, Storage};

/// How a measured value is judged.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
#[serde(tag = "kind", rename_all = "kebab-case")]
pub enum Bound {
    AtMost { limit: f64 },
    AtLeast { limit: f64 },
    Between { lo: f64, hi: f64 },
}

impl Bound {
    pub fn holds(&self, x: f64) -> bool {
        match *self {
            Bound::AtMost { limit } => x <= limit,
            Bound::AtLeast { limit } => x >= limit,
            Bound::Between { lo, hi } => x >= lo && x <= hi,
        }
    }
}

impl fmt::Display for Bound {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match *self {
            Bound::AtMost { limit } => write!(f, "<= {limit:.3e}"),
            Bound::AtLeast { limit } => write!(f, ">= {limit:.3e}"),
            Bound::Between { lo, hi } => write!(f, "in [{lo}, {hi}]"),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Check {
    pub label: String,
    pub measured: f64,
    pub bound: Bound,
}

impl Check {
    fn new(label: impl Into<String>, measured: f64, bound: Bound) -> Self {
        Check {
            label: label.into(),
            measured,
            bound,
        }
    }

    pub fn passed(&self) -> bool {
        self.bound.holds(self.measured)
    }
}

fn at_most(label: impl Into<String>, measured: f64, limit: f64) -> Check {
    Check::new(label, measured, Bound::AtMost { limit })
}

fn at_least(label: impl Into<String>, measured: f64, limit: f64) -> Check {
    Check::new(label, measured, Bound::AtLeast { limit })
}

fn between(label: impl Into<String>, measured: f64, lo: f64, hi: f64) -> Check {
    Check::new(label, measured, Bound::Between { lo, hi })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Criterion {
    pub id: usize,
    pub name: &'static str,
    pub summary: &'static str,
}

pub const CRITERIA: [Criterion; 14] = [
    Criterion {
        id: 1,
        name: "closed-vs-mc",
        summary: "closed-form call vs risk-neutral MC, 1e6 paths, under 10 s",
    },
    Criterion {
        id: 2,
        name: "pde-vs-fk",
        summary: "rate-free-drift PDE vs driftless Feynman-Kac MC; both match the call formula at r = 0",
    },
    Criterion {
        id: 3,
        name: "pde-formula-gap",
        summary: "rate-free-drift PDE and call formula differ at r = 2, stably across seeds",
    },
    Criterion {
        id: 4,
        name: "parity",
        summary: "put-call parity in closed form and on one path set",
    },
    Criterion {
        id: 5,
        name: "martingale",
        summary: "A - beta is a risk-neutral martingale",
    },
    Criterion {
        id: 6,
        name: "perpetual",
        summary: "perpetual derivative PDE residual",
    },
    Criterion {
        id: 7,
        name: "pde-order",
        summary: "second-order PDE convergence",
    },
    Criterion {
        id: 8,
        name: "dividend",
        summary: "dividend PDE vs dividend MC",
    },
    Criterion {
        id: 9,
        name: "hw-bond",
        summary: "Hull-White bond closed form vs MC",
    },
    Criterion {
        id: 10,
        name: "hw-moments",
        summary: "Hull-White Gaussian moments vs MC",
    },
    Criterion {
        id: 11,
        name: "hw-option",
        summary: "Hull-White bond option: reduction vs 2-D quadrature vs MC",
    },
    Criterion {
        id: 12,
        name: "term-structure",
        summary: "diagonal identities and the futures-forward spread",
    },
    Criterion {
        id: 13,
        name: "bhjm",
        summary: "BHJM martingale, bond identity and round-trip order",
    },
    Criterion {
        id: 14,
        name: "determinism",
        summary: "bit-identical output across runs and thread counts",
    },
];

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CriterionReport {
    pub id: usize,
    pub name: &'static str,
    pub checks: Vec<Check>,
    /// Set when the criterion could not be evaluated.
    pub error: Option<String>,
    pub seconds: f64,
}

impl CriterionReport {
    pub fn passed(&self) -> bool {
        self.error.is_none() && !self.checks.is_empty() && self.checks.iter().all(Check::passed)
    }

    /// The first failing check, or the last one when all pass.
    pub fn headline(&self) -> Option<&Check> {
        self.checks.iter().find(|c| !c.passed()).or(self.checks.last())
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ValidateOptions {
    pub seed: u64,
    /// Criterion number or a substring of its name.
    pub filter: Option<String>,
    /// Replaces every bound of the matching criteria with an unattainable one.
    pub inject_bad_tolerance: Option<String>,
}

impl Default for ValidateOptions {
    fn default() -> Self {
        ValidateOptions {
            seed: 1,
            filter: None,
            inject_bad_tolerance: None,
        }
    }
}

fn matches(c: &Criterion, pattern: &str) -> bool {
    pattern.parse::<usize>() == Ok(c.id) || c.name.contains(pattern)
}

/// Criteria selected by `filter` (all when `None`).
pub fn select(filter: Option<&str>) -> Vec<Criterion> {
    CRITERIA
        .iter()
        .filter(|c| filter.is_none_or(|f| matches(c, f)))
        .copied()
        .collect()
}

/// Runs one criterion.
pub fn run_criterion(c: &Criterion, opts: &ValidateOptions) -> CriterionReport {
    let start = Instant::now();
    let seed = opts.seed;
    let result = match c.id {
        1 => closed_vs_mc(seed),
        2 => pde_vs_fk(seed),
        3 => pde_formula_gap(seed),
        4 => parity(seed),
        5 => martingale(seed),
        6 => perpetual(seed),
        7 => pde_order(),
        8 => dividend(seed),
        9 => hw_bond(seed),
        10 => hw_moment_checks(seed),
        11 => hw_option(seed),
        12 => term_structure(),
        13 => bhjm(seed),
        14 => determinism(seed),
        _ => unreachable!("criterion ids are 1..=14"),
    };
    let (mut checks, error) = match result {
        Ok(checks) => (checks, None),
        Err(e) => (Vec::new(), Some(e.to_string())),
    };
    if opts.inject_bad_tolerance.as_deref().is_some_and(|p| matches(c, p)) {
        for check in &mut checks {
            check.bound = Bound::AtMost {
                limit: f64::NEG_INFINITY,
            };
        }
    }
    CriterionReport {
        id: c.id,
        name: c.name,
        checks,
        error,
        seconds: start.elapsed().as_secs_f64(),
    }
}

/// Runs every selected criterion in order.
pub fn run(opts: &ValidateOptions) -> Vec<CriterionReport> {
    select(opts.filter.as_deref())
        .iter()
        .map(|c| run_criterion(c, opts))
        .collect()
}

/// One `PASS`/`FAIL` line per criterion, then the individual checks.
pub fn format_table(reports: &[CriterionReport]) -> String {
    let mut out = String::new();
    let _ = writeln!(
        out,
        "{:<3} {:<16} {:<6} {:>16}  {:<14} check",
        "id", "criterion", "result", "measured", "tolerance"
    );
    for r in reports {
        let status = if r.passed() { "PASS" } else { "FAIL" };
        match (&r.error, r.headline()) {
            (Some(e), _) => {
                let _ = writeln!(
                    out,
                    "{:<3} {:<16} {:<6} {:>16}  {:<14} error: {e}",
                    r.id, r.name, status, "-", "-"
                );
            }
            (None, Some(h)) => {
                let _ = writeln!(
                    out,
                    "{:<3} {:<16} {:<6} {:>16.9e}  {:<14} {}",
                    r.id,
                    r.name,
                    status,
                    h.measured,
                    h.bound.to_string(),
                    h.label
                );
            }
            (None, None) => {
                let _ = writeln!(out, "{:<3} {:<16} {:<6}", r.id, r.name, status);
            }
        }
    }
    out
}

/// Every check of every report, one line each.
pub fn format_details(reports: &[CriterionReport]) -> String {
    let mut out = String::new();
    for r in reports {
        for c in &r.checks {
            let _ = writeln!(
                out,
                "{:<3} {:<4} {:>16.9e}  {:<14} {}",
                r.id,
                if c.passed() { "ok" } else { "FAIL" },
                c.measured,
                c.bound.to_string(),
                c.label
            );
        }
    }
    out
}

fn standard_model() -> Result<MarketModel> {
    MarketModel::constant(100.0, 3.0, 2.0, 10.0)
}

fn zero_rate_model() -> Result<MarketModel> {
    MarketModel::constant(100.0, 0.0, 0.0, 10.0)
}

fn hw_params() -> Result<HullWhiteParams> {
    HullWhiteParams::constant(0.1, 0.5, 0.02, 0.03)
}

fn z_check(label: &str, est: &McEstimate, target: f64) -> Check {
    at_most(format!("{label}: |MC - exact| / stderr"), est.z_against(target), 3.0)
}

fn closed_vs_mc(seed: u64) -> Result<Vec<Check>> {
    let model = standard_model()?;
    let exact = bachelier_call(100.0, 100.0, 2.0, 10.0, 1.0)?;
    let cfg = SimConfig::new(seed, 1_000_000, 250, 0.0, 1.0)?;
    let start = Instant::now();
    let mc = price_ecc_riskneutral(&model, &Payoff::call(100.0), 1.0, &cfg)?;
    let seconds = start.elapsed().as_secs_f64();
    Ok(vec![
        z_check("risk-neutral call", &mc, exact),
        at_most("stderr", mc.stderr, 0.02),
        at_most("runtime in seconds", seconds, 10.0),
    ])
}

fn pde_vs_fk(seed: u64) -> Result<Vec<Check>> {
    let mut checks = Vec::new();
    let model = standard_model()?;
    let call = Payoff::call(100.0);
    let pde = price_bachelier_pde(&model, &call, 1.0, None, DriftMode::PaperEq7)?;
    let mc = price_ecc_driftless(&model, &call, 1.0, &SimConfig::new(seed, 100_000, 250, 0.0, 1.0)?)?;
    checks.push(at_most(
        "r = 2: |PDE - FK MC|",
        (pde.value - mc.value).abs(),
        (3.0 * mc.stderr).max(2e-3),
    ));

    let flat = zero_rate_model()?;
    let exact = bachelier_call(100.0, 100.0, 0.0, 10.0, 1.0)?;
    let pde0 = price_bachelier_pde(&flat, &call, 1.0, None, DriftMode::PaperEq7)?;
    checks.push(at_most("r = 0: |PDE - call formula|", (pde0.value - exact).abs(), 1e-3));
    // Constant coefficients: one step samples Z_T exactly.
    let cfg = SimConfig::new(seed, 300_000_000, 1, 0.0, 1.0)?.with_antithetic(true)?;
    let mc0 = price_ecc_driftless(&flat, &call, 1.0, &cfg)?;
    checks.push(at_most(
        "r = 0: |FK MC - call formula|",
        (mc0.value - exact).abs(),
        1e-3,
    ));
    checks.push(z_check("r = 0: FK MC", &mc0, exact));
    Ok(checks)
}

fn pde_formula_gap(seed: u64) -> Result<Vec<Check>> {
    let model = standard_model()?;
    let call = Payoff::call(100.0);
    let exact = bachelier_call(100.0, 100.0, 2.0, 10.0, 1.0)?;
    let pde = price_bachelier_pde(&model, &call, 1.0, None, DriftMode::PaperEq7)?.value;
    let mut checks = Vec::new();
    let mut gaps = Vec::new();
    for k in 0..3 {
        let cfg = SimConfig::new(seed + 100 + k, 100_000, 250, 0.0, 1.0)?;
        let mc = price_ecc_driftless(&model, &call, 1.0, &cfg)?;
        checks.push(at_least(
            format!("seed +{k}: |PDE - call formula| / MC stderr"),
            (pde - exact).abs() / mc.stderr,
            10.0,
        ));
        gaps.push(mc);
    }
    let signs: Vec<f64> = gaps.iter().map(|m| (exact - m.value).signum()).collect();
    checks.push(at_most(
        "sign changes of the formula - MC gap across seeds",
        signs.windows(2).filter(|w| w[0] != w[1]).count() as f64,
        0.0,
    ));
    let spread = (0..3)
        .flat_map(|i| (0..3).map(move |j| (i, j)))
        .filter(|(i, j)| i < j)
        .map(|(i, j)| gaps[i].z_score(&gaps[j]))
        .fold(0.0, f64::max);
    checks.push(at_most(
        "largest seed-to-seed gap difference / joint stderr",
        spread,
        6.0,
    ));

    // The two MC readings coincide path by path at r = 0.
    let flat = zero_rate_model()?;
    let cfg = SimConfig::new(seed, 20_000, 50, 0.0, 1.0)?;
    let a = price_ecc_driftless(&flat, &call, 1.0, &cfg)?;
    let b = price_ecc_riskneutral(&flat, &call, 1.0, &cfg)?;
    checks.push(at_most(
        "r = 0: |driftless MC - risk-neutral MC| / joint stderr",
        a.z_score(&b),
        3.0,
    ));
    Ok(checks)
}

fn parity(seed: u64) -> Result<Vec<Check>> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut uniform = |lo: f64, hi: f64| lo + (hi - lo) * (rng.next_u64() >> 11) as f64 / (1u64 << 53) as f64;
    let mut worst: f64 = 0.0;
    for _ in 0..1000 {
        let (a, k, r, v, tau) = (
            uniform(50.0, 150.0),
            uniform(50.0, 150.0),
            uniform(-2.0, 5.0),
            uniform(0.5, 30.0),
            uniform(0.01, 5.0),
        );
        let gap = bachelier_call(a, k, r, v, tau)? - bachelier_put(a, k, r, v, tau)? - (a - k + r * tau);
        worst = worst.max(gap.abs());
    }
    let model = standard_model()?;
    let base = SimConfig::new(seed, 100_000, 250, 0.0, 1.0)?.with_storage(Storage::Terminal);
    let anti = simulate_asset(&model, &base.with_antithetic(true)?, Measure::RiskNeutral)?;
    let c = price_on_paths(&anti, &Payoff::call(95.0))?;
    let p = price_on_paths(&anti, &Payoff::put(95.0))?;
    let plain = simulate_asset(&model, &base, Measure::RiskNeutral)?;
    let cp = price_on_paths(&plain, &Payoff::call(95.0))?;
    let pp = price_on_paths(&plain, &Payoff::put(95.0))?;
    let mean_terminal = mean_stderr(&plain.terminals()).0;
    Ok(vec![
        at_most(
            "closed form: max |C - P - (A - K + r tau)| over 1000 draws",
            worst,
            1e-10,
        ),
        at_most(
            "antithetic path set: |C - P - (A0 + rT - K)|",
            (c.value - p.value - 7.0).abs(),
            1e-12,
        ),
        at_most(
            "plain path set: |C - P - (mean A_T - K)|",
            (cp.value - pp.value - (mean_terminal - 95.0)).abs(),
            1e-12,
        ),
    ])
}

fn martingale(seed: u64) -> Result<Vec<Check>> {
    let model = standard_model()?;
    let cfg = SimConfig::new(seed, 100_000, 250, 0.0, 1.0)?;
    // Forward payoff struck at A0: A_T − ∫r − A0 = (A_T − β_T) − (A0 − β0).
    let excess = price_ecc_riskneutral(&model, &Payoff::forward(model.a0), 1.0, &cfg)?;
    Ok(vec![z_check("(A_T - beta_T) - (A0 - beta0)", &excess, 0.0)])
}

fn perpetual(seed: u64) -> Result<Vec<Check>> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut uniform = |lo: f64, hi: f64| lo + (hi - lo) * (rng.next_u64() >> 11) as f64 / (1u64 << 53) as f64;
    let mut worst: f64 = 0.0;
    for _ in 0..100 {
        let v = uniform(0.01, 20.0);
        let magnitude = uniform(0.01, 5.0);
        let r = if uniform(0.0, 1.0) < 0.5 { -magnitude } else { magnitude };
        worst = worst.max(perpetual_residual(v, r)?.abs());
    }
    Ok(vec![at_most("max |gamma r + v^2 - r| over 100 draws", worst, 1e-12)])
}

fn pde_order() -> Result<Vec<Check>> {
    let model = zero_rate_model()?;
    let exact = bachelier_call(100.0, 100.0, 0.0, 10.0, 1.0)?;
    let mut errors = Vec::new();
    for (nx, nt) in [(101, 25), (201, 50), (401, 100)] {
        let grid = GridSpec::new(20.0, 180.0, nx, nt)?;
        let p = price_bachelier_pde(&model, &Payoff::call(100.0), 1.0, Some(&grid), DriftMode::PaperEq7)?;
        errors.push((p.value - exact).abs());
    }
    Ok(vec![
        between("error ratio, first halving", errors[0] / errors[1], 3.5, 4.5),
        between("error ratio, second halving", errors[1] / errors[2], 3.5, 4.5),
    ])
}

fn dividend(seed: u64) -> Result<Vec<Check>> {
    let model = standard_model()?.with_dividend(CoefficientFn::constant(1.5));
    let call = Payoff::call(100.0);
    let pde = price_dividend_pde(&model, &call, 1.0, None)?;
    let mc = price_ecc_dividend(&model, &call, 1.0, &SimConfig::new(seed, 200_000, 250, 0.0, 1.0)?)?;
    Ok(vec![at_most(
        "|dividend PDE - dividend MC|",
        (pde.value - mc.value).abs(),
        (3.0 * mc.stderr).max(2e-3),
    )])
}

fn hw_cfg(seed: u64, n_paths: usize) -> Result<SimConfig> {
    Ok(SimConfig::new(seed, n_paths, 250, 0.0, 1.0)?.with_scheme(Scheme::ExactWhereAvailable))
}

fn hw_bond(seed: u64) -> Result<Vec<Check>> {
    let p = hw_params()?;
    let mut checks = Vec::new();
    for (t, big_t) in [(0.0, 1.0), (0.0, 2.0), (0.5, 2.0)] {
        let cfg = hw_cfg(seed, 100_000)?;
        let steps = ((big_t - t) * 250.0_f64).round() as usize;
        let cfg = SimConfig { n_steps: steps, ..cfg };
        let mc = hw_bond_price_mc(&p, t, big_t, &cfg)?;
        checks.push(z_check(
            &format!("B({t}, {big_t})"),
            &mc,
            hw_bond_price(&p, p.r0, t, big_t)?,
        ));
    }
    let flat = HullWhiteParams::constant(0.0, 0.0, 0.02, 0.03)?;
    let worst = [0.5, 1.0, 2.0, 5.0]
        .iter()
        .map(|&big_t| Ok((hw_bond_price(&flat, 0.03, 0.0, big_t)? - (1.0 - 0.03 * big_t)).abs()))
        .collect::<Result<Vec<f64>>>()?
        .into_iter()
        .fold(0.0, f64::max);
    checks.push(at_most("a = b = 0: |B(0,T) - (1 - r0 T)|", worst, 1e-12));
    Ok(checks)
}

fn hw_moment_checks(seed: u64) -> Result<Vec<Check>> {
    let p = hw_params()?;
    let m = hw_moments(&p, 1.0)?;
    let s = hw_moments_mc(&p, 1.0, &hw_cfg(seed, 100_000)?)?;
    Ok([
        ("mean of R", s.mu_big_r, m.mu_big_r),
        ("variance of R", s.var_big_r, m.var_big_r),
        ("mean of r", s.mu_r, m.mu_r),
        ("variance of r", s.var_r, m.var_r),
        ("covariance of R and r", s.cov, m.cov),
    ]
    .into_iter()
    .map(|(label, est, exact)| {
        at_most(
            format!("{label}: |MC - exact| / stderr"),
            (est.value - exact).abs() / est.stderr,
            3.0,
        )
    })
    .collect())
}

fn hw_option(seed: u64) -> Result<Vec<Check>> {
    let p = hw_params()?;
    let closed = hw_bond_call(&p, 2.0, 1.0, 0.88)?;
    let mc = hw_bond_call_mc(&p, 2.0, 1.0, 0.88, &hw_cfg(seed, 100_000)?)?;
    Ok(vec![
        at_most(
            "|reduction - 2-D quadrature|",
            (closed.value - closed.diagnostics["quadrature_2d"]).abs(),
            1e-6,
        ),
        z_check("bond call", &mc, closed.value),
    ])
}

fn term_structure() -> Result<Vec<Check>> {
    let mut checks = Vec::new();
    let p = hw_params()?;
    let maturities = uniform_grid(0.0, 3.0, 300)?;
    let h = maturities[1] - maturities[0];
    let times = [0.0, 0.5, 1.0];
    let short = [0.03, 0.045, 0.02];
    let hw = hw_curve(&p, &times, &maturities, Some(&short))?;
    let (mut worst_ell, mut worst_f) = (0.0_f64, 0.0_f64);
    for (i, &t) in times.iter().enumerate() {
        let slope = (p.a.value(0.0, t) - p.b.value(0.0, t) * short[i]).abs();
        let tol = 2.0 * h * slope;
        worst_ell = worst_ell.max((loan_rate_from_bonds(&hw, t, t)? - short[i]).abs() / tol);
        worst_f = worst_f.max((forward_rate_from_bonds(&hw, t, t)? - short[i]).abs() / tol);
    }
    checks.push(at_most("Hull-White: max |l(t,t) - r_t| / (2 dT |r'|)", worst_ell, 1.0));
    checks.push(at_most("Hull-White: max |f(t,t) - r_t| / (2 dT |r'|)", worst_f, 1.0));

    // Smooth loan-rate surface, integrated to bonds and differentiated back.
    let ell = |t: f64, big_t: f64| 0.03 + 0.01 * (big_t - 0.5 * t).sin();
    let ell_slope = |t: f64| 0.01 * (0.5 * t).cos();
    let rates = RateSurface::from_fn(&times, &maturities, RateKind::Loan, |t, big_t| Ok(ell(t, big_t)))?;
    let bonds = bonds_from_loan_rates(&rates)?;
    let mut worst = 0.0_f64;
    for &t in &times {
        let r_t = ell(t, t);
        let tol = 2.0 * h * ell_slope(t).abs();
        worst = worst
            .max((loan_rate_from_bonds(&bonds, t, t)? - r_t).abs() / tol)
            .max((forward_rate_from_bonds(&bonds, t, t)? - r_t).abs() / tol);
    }
    checks.push(at_most(
        "bootstrapped surface: max diagonal error / (2 dT |r'|)",
        worst,
        1.0,
    ));

    let off_diagonal = [&hw, &bonds]
        .iter()
        .flat_map(|s| (0..s.times().len()).map(move |i| s.row(i).1[0]))
        .filter(|&b| b != 1.0)
        .count();
    checks.push(at_most("diagonal bonds different from 1", off_diagonal as f64, 0.0));

    let mut rng = ChaCha8Rng::seed_from_u64(12);
    let mut uniform = |lo: f64, hi: f64| lo + (hi - lo) * (rng.next_u64() >> 11) as f64 / (1u64 << 53) as f64;
    let mut worst_spread = 0.0_f64;
    for _ in 0..100 {
        let (a, v, integral) = (uniform(50.0, 150.0), uniform(-10.0, 10.0), uniform(-1.0, 5.0));
        let phi0 = futures_price(a, integral);
        let f = forward_price(a, v);
        let spread = forward_futures_spread(integral, a + 1.0, phi0).spread;
        worst_spread = worst_spread
            .max((phi0 - (f + v) - integral).abs())
            .max((spread - integral).abs());
    }
    checks.push(at_most("max |Phi0 - (F + V) - integral of r|", worst_spread, 1e-12));
    Ok(checks)
}

fn bhjm(seed: u64) -> Result<Vec<Check>> {
    let mut checks = Vec::new();
    let maturities = uniform_grid(0.0, 2.0, 20)?;
    let curve: Vec<f64> = maturities.iter().map(|t| 0.02 + 0.01 * t).collect();
    let spec = BhjmSpec::new(LoanVol::Proportional(0.2), maturities.clone(), curve.clone(), None)?;
    let cfg = SimConfig::new(seed, 10_000, 20, 0.0, 2.0)?;
    let out = bhjm_simulate(&spec, &cfg, Measure::RiskNeutral)?;
    for (j, big_t) in [(5, 0.5), (10, 1.0), (15, 1.5), (20, 2.0)] {
        let incr: Vec<f64> = out.paths.iter().map(|p| p.short_rate[j] - curve[j]).collect();
        let (m, se) = mean_stderr(&incr);
        checks.push(at_most(
            format!("l(T,T) - l(0,T) at T = {big_t}: |mean| / stderr"),
            m.abs() / se,
            3.0,
        ));
    }
    for (steps, big_t) in [(10, 1.0), (20, 2.0)] {
        let integrals: Vec<f64> = out
            .paths
            .iter()
            .map(|p| {
                p.short_rate[..=steps]
                    .windows(2)
                    .map(|w| 0.5 * (w[0] + w[1]) * 0.1)
                    .sum()
            })
            .collect();
        let (m, se) = mean_stderr(&integrals);
        let bond = out.paths[0].bonds.value(0.0, big_t)?;
        checks.push(at_most(
            format!("1 - B(0,{big_t}) vs E int r: |gap| / stderr"),
            (1.0 - bond - m).abs() / se,
            3.0,
        ));
    }
    let ell = |t: f64, big_t: f64| Ok(0.03 + 0.01 * (big_t - 0.5 * t).sin() + 0.002 * big_t * big_t);
    let mut errors = Vec::new();
    for n in [16, 32, 64] {
        let grid = uniform_grid(0.0, 2.0, n)?;
        let rates = RateSurface::from_fn(&[0.0, 0.5, 1.0], &grid, RateKind::Loan, ell)?;
        let back = loan_rates_from_bonds(&bonds_from_loan_rates(&rates)?)?;
        let mut worst = 0.0_f64;
        for i in 0..3 {
            for (a, b) in rates.row(i).1.iter().zip(back.row(i).1) {
                worst = worst.max((a - b).abs());
            }
        }
        errors.push(worst);
    }
    checks.push(between(
        "round-trip error ratio, first halving",
        errors[0] / errors[1],
        3.5,
        4.5,
    ));
    checks.push(between(
        "round-trip error ratio, second halving",
        errors[1] / errors[2],
        3.5,
        4.5,
    ));
    Ok(checks)
}

fn io_error(e: std::io::Error) -> crate::Error {
    crate::Error::Config(format!("csv output: {e}"))
}

/// Bytes of every stochastic output at a given seed.
fn stochastic_outputs(seed: u64) -> Result<Vec<Vec<u8>>> {
    let model = standard_model()?;
    let mut out = Vec::new();
    let bits = |e: McEstimate| [e.value.to_bits().to_le_bytes(), e.stderr.to_bits().to_le_bytes()].concat();

    let cfg = SimConfig::new(seed, 20_000, 50, 0.0, 1.0)?;
    out.push(bits(price_ecc_riskneutral(&model, &Payoff::call(100.0), 1.0, &cfg)?));
    out.push(bits(price_ecc_riskneutral(
        &model,
        &Payoff::call(100.0),
        1.0,
        &cfg.with_antithetic(true)?,
    )?));

    let small = SimConfig::new(seed, 300, 20, 0.0, 1.0)?;
    let mut csv = Vec::new();
    simulate_asset(&model, &small, Measure::RiskNeutral)?
        .write_csv(&mut csv)
        .map_err(io_error)?;
    out.push(csv);

    let p = hw_params()?;
    let hw_small = small.with_scheme(Scheme::ExactWhereAvailable);
    let mut csv = Vec::new();
    simulate_hw_rate(&p, &hw_small)?.write_csv(&mut csv).map_err(io_error)?;
    out.push(csv);
    out.push(bits(hw_bond_price_mc(&p, 0.0, 1.0, &hw_cfg(seed, 10_000)?)?));

    let maturities = uniform_grid(0.0, 2.0, 20)?;
    let curve: Vec<f64> = maturities.iter().map(|t| 0.02 + 0.01 * t).collect();
    let spec = BhjmSpec::new(LoanVol::Proportional(0.2), maturities.clone(), curve.clone(), None)?;
    let bcfg = SimConfig::new(seed, 300, 10, 0.0, 1.0)?;
    let paths = bhjm_simulate(&spec, &bcfg, Measure::RiskNeutral)?;
    let mut csv = Vec::new();
    for path in &paths.paths {
        path.loan_rates.write_csv(&mut csv).map_err(io_error)?;
    }
    out.push(csv);
    let hjm = hjm_simulate_forward(&CoefficientFn::constant(0.01), &maturities, &curve, &bcfg)?;
    let mut csv = Vec::new();
    for s in &hjm {
        s.write_csv(&mut csv).map_err(io_error)?;
    }
    out.push(csv);
    Ok(out)
}

fn determinism(seed: u64) -> Result<Vec<Check>> {
    let many = std::thread::available_parallelism().map_or(2, |n| n.get()).max(2);
    let in_pool = |threads: usize| -> Result<Vec<Vec<u8>>> {
        let pool = rayon::ThreadPoolBuilder::new()
            .num_threads(threads)
            .build()
            .map_err(|e| crate::Error::Config(format!("thread pool: {e}")))?;
        pool.install(|| stochastic_outputs(seed))
    };
    let one = in_pool(1)?;
    let first = in_pool(many)?;
    let second = in_pool(many)?;
    let other_seed = stochastic_outputs(seed + 1)?;
    let differ = |a: &[Vec<u8>], b: &[Vec<u8>]| a.iter().zip(b).filter(|(x, y)| x != y).count() as f64;
    Ok(vec![
        at_most(
            format!("outputs differing between 1 and {many} threads"),
            differ(&one, &first),
            0.0,
        ),
        at_most(
            "outputs differing between two identical runs",
            differ(&first, &second),
            0.0,
        ),
        at_least(
            "outputs differing under another seed",
            differ(&first, &other_seed),
            one.len() as f64,
        ),
    ])
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn filter_selects_by_id_or_name() {
        assert_eq!(select(Some("parity")).len(), 1);
        assert_eq!(select(Some("7"))[0].name, "pde-order");
        assert_eq!(select(Some("hw-")).len(), 3);
        assert_eq!(select(None).len(), 14);
    }

    #[test]
    fn injected_tolerance_fails_the_named_criterion() {
        let opts = ValidateOptions {
            inject_bad_tolerance: Some("perpetual".into()),
            ..ValidateOptions::default()
        };
        let r = run_criterion(&select(Some("perpetual"))[0], &opts);
        assert!(!r.passed());
        assert!(format_table(&[r]).contains("perpetual        FAIL"));
        let ok = run_criterion(&select(Some("perpetual"))[0], &ValidateOptions::default());
        assert!(ok.passed());
    }
}
