//! Finite-difference solver for the Cauchy problem
//! `f_t + μ f_x + ½σ² f_xx − a f + h = 0`, `f(x, T) = g(x)`,
//! and its Bachelier instances.
//!
//! Bachelier's original PDE has no first-order term:
//! `f_t + ½v² f_xx − r = 0` (`μ = 0, a = 0, h = −r`). The closed-form call
//! instead solves `f_t + r f_x + ½v² f_xx − r = 0`. The two coincide only for
//! `r = 0`, so both are offered through [`DriftMode`]. The dividend version
//! uses `μ = −D`. A Black–Scholes-type PDE (`μ = r x`, `a = r`) would be yet
//! another operator; it is not built here.
//!
//! Time stepping is the θ-scheme (Crank–Nicolson by default). The first step
//! is replaced by two fully implicit half steps (Rannacher start) so that
//! kinked payoffs keep second-order convergence. Both ends use the linearity
//! condition `f_xx = 0`.

use std::collections::BTreeMap;
use std::io::{self, Write};

use serde::{Deserialize, Serialize};

use crate::analytic::{Method, PriceResult};
use crate::error::{Error, Result};
use crate::model::{CoefficientFn, MarketModel, Payoff};
use crate::numerics::solve_tridiagonal;
use crate::simulate::fmt9;

pub const DEFAULT_NX: usize = 401;
pub const DEFAULT_NT: usize = 200;
/// Half-width of the default spatial domain in units of `v√T`.
pub const DEFAULT_WIDTH: f64 = 8.0;

/// `f_t + μ f_x + ½σ² f_xx − a f + h = 0` on `[0, T]` with `f(·, T) = g`.
#[derive(Debug, Clone)]
pub struct CauchySpec {
    pub mu: CoefficientFn,
    pub sigma: CoefficientFn,
    pub a: CoefficientFn,
    pub h: CoefficientFn,
    pub terminal: Payoff,
    pub maturity: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub struct GridSpec {
    pub x_min: f64,
    pub x_max: f64,
    pub n_x: usize,
    pub n_t: usize,
    #[serde(default = "half")]
    pub theta: f64,
}

fn half() -> f64 {
    0.5
}

impl GridSpec {
    pub fn new(x_min: f64, x_max: f64, n_x: usize, n_t: usize) -> Result<Self> {
        let g = GridSpec {
            x_min,
            x_max,
            n_x,
            n_t,
            theta: 0.5,
        };
        g.validate()?;
        Ok(g)
    }

    /// `[centre − 8·v√T, centre + 8·v√T]` with the default resolution.
    pub fn around(centre: f64, vol: f64, maturity: f64) -> Result<Self> {
        let half_width = DEFAULT_WIDTH * vol * maturity.sqrt();
        Self::new(centre - half_width, centre + half_width, DEFAULT_NX, DEFAULT_NT)
    }

    pub fn with_theta(mut self, theta: f64) -> Result<Self> {
        self.theta = theta;
        self.validate()?;
        Ok(self)
    }

    pub fn with_resolution(mut self, n_x: usize, n_t: usize) -> Result<Self> {
        self.n_x = n_x;
        self.n_t = n_t;
        self.validate()?;
        Ok(self)
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.x_min < self.x_max) || !self.x_min.is_finite() || !self.x_max.is_finite() {
            return Err(Error::Config(format!(
                "grid needs xMin < xMax, got [{}, {}]",
                self.x_min, self.x_max
            )));
        }
        if self.n_x < 3 {
            return Err(Error::Config("grid needs nX >= 3".into()));
        }
        if self.n_t < 1 {
            return Err(Error::Config("grid needs nT >= 1".into()));
        }
        if !(0.0..=1.0).contains(&self.theta) {
            return Err(Error::Config(format!("theta must lie in [0, 1], got {}", self.theta)));
        }
        Ok(())
    }

    pub fn dx(&self) -> f64 {
        (self.x_max - self.x_min) / (self.n_x - 1) as f64
    }

    pub fn xs(&self) -> Vec<f64> {
        let dx = self.dx();
        let mut xs: Vec<f64> = (0..self.n_x).map(|j| self.x_min + j as f64 * dx).collect();
        xs[self.n_x - 1] = self.x_max;
        xs
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum DriftMode {
    /// `μ = 0`: Bachelier's original PDE.
    #[default]
    PaperEq7,
    /// `μ = r`: the operator solved by the closed-form call.
    RiskNeutral,
}

#[derive(Debug, Clone, PartialEq)]
pub struct PdeSolution {
    pub grid: GridSpec,
    pub xs: Vec<f64>,
    pub ts: Vec<f64>,
    /// `surface[n][j] = f(xs[j], ts[n])`; the last row is the payoff at `T`.
    pub surface: Vec<Vec<f64>>,
    /// θ actually used (1 after a fallback to the implicit scheme).
    pub theta_used: f64,
    pub warnings: Vec<String>,
}

/// A hedge ratio, with a note when it had to be taken one-sided.
#[derive(Debug, Clone, PartialEq)]
pub struct Delta {
    pub value: f64,
    pub warning: Option<String>,
}

/// Coefficients of the spatial operator at one time level.
struct Operator {
    lower: Vec<f64>,
    diag: Vec<f64>,
    upper: Vec<f64>,
    source: Vec<f64>,
}

impl Operator {
    fn at(spec: &CauchySpec, xs: &[f64], dx: f64, t: f64) -> Self {
        let n = xs.len();
        let (mut lower, mut diag, mut upper, mut source) = (vec![0.0; n], vec![0.0; n], vec![0.0; n], vec![0.0; n]);
        for (j, &x) in xs.iter().enumerate() {
            let s = spec.sigma.value(x, t);
            let mu = spec.mu.value(x, t);
            let diffusion = 0.5 * s * s / (dx * dx);
            let convection = 0.5 * mu / dx;
            lower[j] = diffusion - convection;
            diag[j] = -2.0 * diffusion - spec.a.value(x, t);
            upper[j] = diffusion + convection;
            source[j] = spec.h.value(x, t);
        }
        Operator {
            lower,
            diag,
            upper,
            source,
        }
    }

    fn is_monotone(&self) -> bool {
        self.lower.iter().chain(&self.upper).all(|&c| c >= 0.0)
    }

    /// `(L f)_j` at interior nodes.
    fn apply(&self, f: &[f64], j: usize) -> f64 {
        self.lower[j] * f[j - 1] + self.diag[j] * f[j] + self.upper[j] * f[j + 1]
    }
}

/// One backward step from `f_next` (time `t + dt`) to time `t`:
/// `(I − θΔt Lⁿ) fⁿ = (I + (1−θ)Δt Lⁿ⁺¹) fⁿ⁺¹ + Δt(θ hⁿ + (1−θ) hⁿ⁺¹)`,
/// with `f_xx = 0` rows eliminated at both ends.
fn step(now: &Operator, next: &Operator, f_next: &[f64], dt: f64, theta: f64) -> Result<Vec<f64>> {
    let n = f_next.len();
    let m = n - 2;
    let mut lower = vec![0.0; m];
    let mut diag = vec![0.0; m];
    let mut upper = vec![0.0; m];
    let mut rhs = vec![0.0; m];
    for j in 1..n - 1 {
        let i = j - 1;
        lower[i] = -theta * dt * now.lower[j];
        diag[i] = 1.0 - theta * dt * now.diag[j];
        upper[i] = -theta * dt * now.upper[j];
        rhs[i] = f_next[j]
            + (1.0 - theta) * dt * next.apply(f_next, j)
            + dt * (theta * now.source[j] + (1.0 - theta) * next.source[j]);
    }
    // f_0 = 2 f_1 − f_2 and f_{n−1} = 2 f_{n−2} − f_{n−3}
    diag[0] += 2.0 * lower[0];
    upper[0] -= lower[0];
    lower[0] = 0.0;
    diag[m - 1] += 2.0 * upper[m - 1];
    if m >= 2 {
        lower[m - 1] -= upper[m - 1];
    }
    upper[m - 1] = 0.0;
    solve_tridiagonal(&lower, &diag, &upper, &mut rhs)
        .ok_or_else(|| Error::numerical("singular finite-difference system", &[("dt", dt), ("theta", theta)]))?;
    let mut f = Vec::with_capacity(n);
    let first = if m >= 2 { 2.0 * rhs[0] - rhs[1] } else { rhs[0] };
    f.push(first);
    f.extend_from_slice(&rhs);
    let last = if m >= 2 {
        2.0 * rhs[m - 1] - rhs[m - 2]
    } else {
        rhs[m - 1]
    };
    f.push(last);
    Ok(f)
}

/// Backward θ-scheme over the full grid; returns every time level.
pub fn solve_cauchy(spec: &CauchySpec, grid: &GridSpec) -> Result<PdeSolution> {
    grid.validate()?;
    if !(spec.maturity > 0.0 && spec.maturity.is_finite()) {
        return Err(Error::Config(format!(
            "maturity must be positive, got {}",
            spec.maturity
        )));
    }
    let xs = grid.xs();
    let dx = grid.dx();
    let dt = spec.maturity / grid.n_t as f64;
    let ts: Vec<f64> = (0..=grid.n_t)
        .map(|n| if n == grid.n_t { spec.maturity } else { n as f64 * dt })
        .collect();
    for &x in &xs {
        for &t in &ts {
            let s = spec.sigma.value(x, t);
            if !(s > 0.0 && s.is_finite()) {
                return Err(Error::Config(format!(
                    "sigma must be positive on the grid, got {s} at (x = {x}, t = {t})"
                )));
            }
        }
    }

    let mut warnings = Vec::new();
    let mut theta = grid.theta;
    let ops: Vec<Operator> = ts.iter().map(|&t| Operator::at(spec, &xs, dx, t)).collect();
    if theta < 1.0 && !ops.iter().all(Operator::is_monotone) {
        warnings
            .push("drift dominates diffusion on this grid (negative off-diagonal); switched to theta = 1".to_string());
        theta = 1.0;
    }

    let mut surface = vec![Vec::new(); grid.n_t + 1];
    surface[grid.n_t] = xs.iter().map(|&x| spec.terminal.value(x)).collect();
    for n in (0..grid.n_t).rev() {
        let f_next = &surface[n + 1];
        let f = if n == grid.n_t - 1 && theta < 1.0 {
            // Rannacher start: two implicit half steps.
            let mid = Operator::at(spec, &xs, dx, ts[n] + 0.5 * dt);
            let half = step(&mid, &ops[n + 1], f_next, 0.5 * dt, 1.0)?;
            step(&ops[n], &mid, &half, 0.5 * dt, 1.0)?
        } else {
            step(&ops[n], &ops[n + 1], f_next, dt, theta)?
        };
        if f.iter().any(|v| !v.is_finite()) {
            return Err(Error::numerical(
                "finite-difference solution is not finite",
                &[("time", ts[n]), ("dx", dx), ("dt", dt)],
            ));
        }
        surface[n] = f;
    }
    Ok(PdeSolution {
        grid: *grid,
        xs,
        ts,
        surface,
        theta_used: theta,
        warnings,
    })
}

impl PdeSolution {
    fn check_x(&self, x: f64) -> Result<()> {
        if !(x >= self.grid.x_min && x <= self.grid.x_max) {
            return Err(Error::Domain(format!(
                "x = {x} outside the grid [{}, {}]",
                self.grid.x_min, self.grid.x_max
            )));
        }
        Ok(())
    }

    /// Cubic Lagrange interpolation in `x` on time row `n`.
    fn row_value(&self, n: usize, x: f64) -> f64 {
        let row = &self.surface[n];
        let dx = self.grid.dx();
        let nx = self.xs.len();
        let pos = (x - self.grid.x_min) / dx;
        let j = pos.round() as usize;
        if (pos - j as f64).abs() < 1e-12 && j < nx {
            return row[j];
        }
        let base = (pos.floor() as isize - 1).clamp(0, nx as isize - 4) as usize;
        let mut value = 0.0;
        for i in 0..4 {
            let xi = self.xs[base + i];
            let mut w = 1.0;
            for k in 0..4 {
                if k != i {
                    w *= (x - self.xs[base + k]) / (xi - self.xs[base + k]);
                }
            }
            value += w * row[base + i];
        }
        value
    }

    /// `f(x, t)`: cubic in `x`, linear in `t` between time levels.
    pub fn value_at(&self, x: f64, t: f64) -> Result<f64> {
        self.check_x(x)?;
        let maturity = *self.ts.last().unwrap();
        if !(0.0..=maturity).contains(&t) {
            return Err(Error::Domain(format!("t = {t} outside [0, {maturity}]")));
        }
        let dt = maturity / (self.ts.len() - 1) as f64;
        let n = ((t / dt).floor() as usize).min(self.ts.len() - 2);
        let w = ((t - self.ts[n]) / dt).clamp(0.0, 1.0);
        let lo = self.row_value(n, x);
        if w == 0.0 {
            return Ok(lo);
        }
        Ok(lo + w * (self.row_value(n + 1, x) - lo))
    }

    /// `∂f/∂x` by central differences of width `Δx`; one-sided with a warning
    /// when the stencil leaves the grid. The replicating position holds the
    /// negative of this many units of the asset.
    pub fn delta(&self, x: f64, t: f64) -> Result<Delta> {
        self.check_x(x)?;
        let h = self.grid.dx();
        let (lo, hi) = (x - h, x + h);
        if lo < self.grid.x_min {
            let v = (self.value_at(x + h, t)? - self.value_at(x, t)?) / h;
            return Ok(Delta {
                value: v,
                warning: Some(format!("x = {x} at the lower boundary: one-sided difference")),
            });
        }
        if hi > self.grid.x_max {
            let v = (self.value_at(x, t)? - self.value_at(x - h, t)?) / h;
            return Ok(Delta {
                value: v,
                warning: Some(format!("x = {x} at the upper boundary: one-sided difference")),
            });
        }
        Ok(Delta {
            value: (self.value_at(hi, t)? - self.value_at(lo, t)?) / (2.0 * h),
            warning: None,
        })
    }

    /// `t,x,f` rows for every grid point.
    pub fn write_csv<W: Write>(&self, out: &mut W) -> io::Result<()> {
        writeln!(out, "t,x,f")?;
        for (n, &t) in self.ts.iter().enumerate() {
            for (j, &x) in self.xs.iter().enumerate() {
                writeln!(out, "{},{},{}", fmt9(t), fmt9(x), fmt9(self.surface[n][j]))?;
            }
        }
        Ok(())
    }
}

/// The Cauchy problem for a Bachelier claim under the chosen drift reading.
pub fn bachelier_spec(model: &MarketModel, payoff: &Payoff, maturity: f64, mode: DriftMode) -> CauchySpec {
    CauchySpec {
        mu: match mode {
            DriftMode::PaperEq7 => CoefficientFn::constant(0.0),
            DriftMode::RiskNeutral => model.rate.clone(),
        },
        sigma: model.vol.clone(),
        a: CoefficientFn::constant(0.0),
        h: model.rate.scaled(-1.0),
        terminal: payoff.clone(),
        maturity,
    }
}

/// Dividend version: `μ = −D`, `σ = v`, `a = 0`, `h = −r`.
pub fn dividend_spec(model: &MarketModel, payoff: &Payoff, maturity: f64) -> Result<CauchySpec> {
    let d = model
        .dividend
        .as_ref()
        .ok_or_else(|| Error::Config("model has no dividend rate".into()))?;
    Ok(CauchySpec {
        mu: d.scaled(-1.0),
        sigma: model.vol.clone(),
        a: CoefficientFn::constant(0.0),
        h: model.rate.scaled(-1.0),
        terminal: payoff.clone(),
        maturity,
    })
}

fn default_grid(model: &MarketModel, maturity: f64) -> Result<GridSpec> {
    GridSpec::around(model.a0, model.vol.value(model.a0, 0.0), maturity)
}

fn price_spec(spec: &CauchySpec, x0: f64, grid: &GridSpec) -> Result<PriceResult> {
    if !(x0 >= grid.x_min && x0 <= grid.x_max) {
        return Err(Error::Domain(format!(
            "A0 = {x0} outside the grid [{}, {}]",
            grid.x_min, grid.x_max
        )));
    }
    let sol = solve_cauchy(spec, grid)?;
    let value = sol.value_at(x0, 0.0)?;
    let mut diagnostics = BTreeMap::new();
    diagnostics.insert("x_min".into(), grid.x_min);
    diagnostics.insert("x_max".into(), grid.x_max);
    diagnostics.insert("n_x".into(), grid.n_x as f64);
    diagnostics.insert("n_t".into(), grid.n_t as f64);
    diagnostics.insert("theta".into(), sol.theta_used);
    diagnostics.insert("delta".into(), sol.delta(x0, 0.0)?.value);
    if !sol.warnings.is_empty() {
        diagnostics.insert("implicit_fallback".into(), 1.0);
    }
    if value < 0.0 {
        diagnostics.insert("negative_price".into(), 1.0);
    }
    Ok(PriceResult {
        value,
        stderr: None,
        method: Method::Pde,
        diagnostics,
    })
}

/// `f(A₀, 0)` for Bachelier's PDE; `grid = None` uses `A₀ ± 8·v√T`.
pub fn price_bachelier_pde(
    model: &MarketModel,
    payoff: &Payoff,
    maturity: f64,
    grid: Option<&GridSpec>,
    mode: DriftMode,
) -> Result<PriceResult> {
    let grid = match grid {
        Some(g) => *g,
        None => default_grid(model, maturity)?,
    };
    let mut res = price_spec(&bachelier_spec(model, payoff, maturity, mode), model.a0, &grid)?;
    res.diagnostics.insert(
        "risk_neutral_drift".into(),
        if mode == DriftMode::RiskNeutral { 1.0 } else { 0.0 },
    );
    Ok(res)
}

/// `f(A₀, 0)` for the dividend PDE (`μ = −D`).
pub fn price_dividend_pde(
    model: &MarketModel,
    payoff: &Payoff,
    maturity: f64,
    grid: Option<&GridSpec>,
) -> Result<PriceResult> {
    let grid = match grid {
        Some(g) => *g,
        None => default_grid(model, maturity)?,
    };
    price_spec(&dividend_spec(model, payoff, maturity)?, model.a0, &grid)
}
