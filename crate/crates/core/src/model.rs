//! Market-model data types: coefficient functions, the model itself, payoffs.
//!
//! Units. The riskless account accrues *simple* interest,
//! `β_t = β_0 + ∫_0^t r_s ds`, so the rate `r` (like the drift `ρ` and a
//! dividend rate `D`) is measured in currency per year, not as a proportion.
//! Volatility `v` is in currency per √year. Asset levels and strikes may be
//! negative; nothing in the engine clamps them.

use std::fmt;
use std::sync::Arc;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Default horizon 𝒯 (years) over which models are validated.
pub const DEFAULT_HORIZON: f64 = 30.0;
/// Resolution of the sampled `rate ≤ rho` check, per axis.
pub const RATE_CHECK_RESOLUTION: usize = 256;

fn strictly_increasing(xs: &[f64]) -> bool {
    xs.windows(2).all(|w| w[0] < w[1]) && xs.iter().all(|x| x.is_finite())
}

/// Index `i` such that `grid[i] <= x < grid[i+1]`, clamped to the valid cells.
fn cell(grid: &[f64], x: f64) -> usize {
    match grid.partition_point(|&g| g <= x) {
        0 => 0,
        p => (p - 1).min(grid.len().saturating_sub(2)),
    }
}

/// Linear interpolation weight of `x` in the cell starting at `i`, clamped to [0, 1]
/// (flat extrapolation).
fn weight(grid: &[f64], i: usize, x: f64) -> f64 {
    if grid.len() < 2 {
        return 0.0;
    }
    ((x - grid[i]) / (grid[i + 1] - grid[i])).clamp(0.0, 1.0)
}

/// Step function of time: `values[i]` holds on `[starts[i], starts[i+1])`,
/// the last value holds to +∞ and the first one is extended backwards.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "StepsRepr")]
pub struct Steps {
    starts: Vec<f64>,
    values: Vec<f64>,
}

#[derive(Deserialize)]
struct StepsRepr {
    starts: Vec<f64>,
    values: Vec<f64>,
}

impl TryFrom<StepsRepr> for Steps {
    type Error = Error;
    fn try_from(r: StepsRepr) -> Result<Self> {
        Steps::new(r.starts, r.values)
    }
}

impl Steps {
    pub fn new(starts: Vec<f64>, values: Vec<f64>) -> Result<Self> {
        if starts.is_empty() || starts.len() != values.len() {
            return Err(Error::Construction(
                "piecewise coefficient needs one value per breakpoint".into(),
            ));
        }
        if !strictly_increasing(&starts) {
            return Err(Error::Construction(
                "piecewise breakpoints must be strictly increasing".into(),
            ));
        }
        if values.iter().any(|v| !v.is_finite()) {
            return Err(Error::Construction("piecewise values must be finite".into()));
        }
        Ok(Steps { starts, values })
    }

    pub fn starts(&self) -> &[f64] {
        &self.starts
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    fn at(&self, t: f64) -> f64 {
        let p = self.starts.partition_point(|&s| s <= t);
        self.values[p.saturating_sub(1)]
    }
}

/// Values on a rectangular `(x, t)` grid; `values[i][j]` sits at `(x[j], t[i])`.
/// Bilinear inside the grid, flat outside.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "GridRepr")]
pub struct Grid2 {
    x: Vec<f64>,
    t: Vec<f64>,
    values: Vec<Vec<f64>>,
}

#[derive(Deserialize)]
struct GridRepr {
    x: Vec<f64>,
    t: Vec<f64>,
    values: Vec<Vec<f64>>,
}

impl TryFrom<GridRepr> for Grid2 {
    type Error = Error;
    fn try_from(r: GridRepr) -> Result<Self> {
        Grid2::new(r.x, r.t, r.values)
    }
}

impl Grid2 {
    pub fn new(x: Vec<f64>, t: Vec<f64>, values: Vec<Vec<f64>>) -> Result<Self> {
        if x.is_empty() || t.is_empty() {
            return Err(Error::Construction("tabulated grid must be non-empty".into()));
        }
        if !strictly_increasing(&x) || !strictly_increasing(&t) {
            return Err(Error::Construction(
                "tabulated grid nodes must be strictly increasing".into(),
            ));
        }
        if values.len() != t.len() || values.iter().any(|row| row.len() != x.len()) {
            return Err(Error::Construction(format!(
                "tabulated values must be {} rows of {} entries",
                t.len(),
                x.len()
            )));
        }
        if values.iter().flatten().any(|v| !v.is_finite()) {
            return Err(Error::Construction("tabulated values must be finite".into()));
        }
        Ok(Grid2 { x, t, values })
    }

    pub fn x(&self) -> &[f64] {
        &self.x
    }

    pub fn t(&self) -> &[f64] {
        &self.t
    }

    fn row(&self, i: usize, x: f64) -> f64 {
        let row = &self.values[i];
        if self.x.len() == 1 {
            return row[0];
        }
        let j = cell(&self.x, x);
        let w = weight(&self.x, j, x);
        row[j] + w * (row[j + 1] - row[j])
    }

    fn at(&self, x: f64, t: f64) -> f64 {
        if self.t.len() == 1 {
            return self.row(0, x);
        }
        let i = cell(&self.t, t);
        let w = weight(&self.t, i, t);
        let lo = self.row(i, x);
        if w == 0.0 {
            return lo;
        }
        lo + w * (self.row(i + 1, x) - lo)
    }
}

/// A deterministic coefficient `c(x, t)` of the market model.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case")]
pub enum CoefficientFn {
    Constant {
        value: f64,
    },
    #[serde(rename = "piecewise")]
    Piecewise(Steps),
    Tabulated(Grid2),
}

impl CoefficientFn {
    pub fn constant(value: f64) -> Self {
        CoefficientFn::Constant { value }
    }

    pub fn piecewise(starts: Vec<f64>, values: Vec<f64>) -> Result<Self> {
        Steps::new(starts, values).map(CoefficientFn::Piecewise)
    }

    pub fn tabulated(x: Vec<f64>, t: Vec<f64>, values: Vec<Vec<f64>>) -> Result<Self> {
        Grid2::new(x, t, values).map(CoefficientFn::Tabulated)
    }

    /// Time-only tabulation, linear in `t` between nodes.
    pub fn tabulated_in_time(t: Vec<f64>, values: Vec<f64>) -> Result<Self> {
        let rows = values.into_iter().map(|v| vec![v]).collect();
        Self::tabulated(vec![0.0], t, rows)
    }

    #[inline]
    pub fn value(&self, x: f64, t: f64) -> f64 {
        match self {
            CoefficientFn::Constant { value } => *value,
            CoefficientFn::Piecewise(s) => s.at(t),
            CoefficientFn::Tabulated(g) => g.at(x, t),
        }
    }

    pub fn as_constant(&self) -> Option<f64> {
        match self {
            CoefficientFn::Constant { value } => Some(*value),
            _ => None,
        }
    }

    pub fn is_zero(&self) -> bool {
        self.as_constant() == Some(0.0)
    }

    /// Constant or piecewise-constant in time (no `x` dependence).
    pub fn is_piecewise_constant(&self) -> bool {
        !matches!(self, CoefficientFn::Tabulated(_))
    }

    pub fn depends_on_x(&self) -> bool {
        matches!(self, CoefficientFn::Tabulated(g) if g.x.len() > 1)
    }

    /// Times where the function (or its slope) may jump.
    pub fn breakpoints(&self) -> Vec<f64> {
        match self {
            CoefficientFn::Constant { .. } => Vec::new(),
            CoefficientFn::Piecewise(s) => s.starts.clone(),
            CoefficientFn::Tabulated(g) => g.t.clone(),
        }
    }

    /// `∫_{t0}^{t1} c(x, s) ds` at fixed `x`; exact for every kind since the
    /// time dependence is either stepwise or piecewise linear.
    pub fn time_integral(&self, x: f64, t0: f64, t1: f64) -> f64 {
        if t1 < t0 {
            return -self.time_integral(x, t1, t0);
        }
        match self {
            CoefficientFn::Constant { value } => value * (t1 - t0),
            _ => {
                let mut nodes = vec![t0];
                nodes.extend(self.breakpoints().into_iter().filter(|&b| b > t0 && b < t1));
                nodes.push(t1);
                nodes
                    .windows(2)
                    .map(|w| {
                        let (a, b) = (w[0], w[1]);
                        match self {
                            // value on [a, b) is the value at a
                            CoefficientFn::Piecewise(s) => s.at(a) * (b - a),
                            _ => 0.5 * (self.value(x, a) + self.value(x, b)) * (b - a),
                        }
                    })
                    .sum()
            }
        }
    }

    /// The same coefficient multiplied by `k`.
    pub fn scaled(&self, k: f64) -> Self {
        match self {
            CoefficientFn::Constant { value } => CoefficientFn::constant(k * value),
            CoefficientFn::Piecewise(s) => CoefficientFn::Piecewise(Steps {
                starts: s.starts.clone(),
                values: s.values.iter().map(|v| k * v).collect(),
            }),
            CoefficientFn::Tabulated(g) => CoefficientFn::Tabulated(Grid2 {
                x: g.x.clone(),
                t: g.t.clone(),
                values: g.values.iter().map(|row| row.iter().map(|v| k * v).collect()).collect(),
            }),
        }
    }

    /// Smallest and largest value the function takes anywhere. Exact, because
    /// interpolation never leaves the range of the node values.
    pub fn bounds(&self) -> (f64, f64) {
        let fold = |it: &mut dyn Iterator<Item = f64>| {
            it.fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), v| (lo.min(v), hi.max(v)))
        };
        match self {
            CoefficientFn::Constant { value } => (*value, *value),
            CoefficientFn::Piecewise(s) => fold(&mut s.values.iter().copied()),
            CoefficientFn::Tabulated(g) => fold(&mut g.values.iter().flatten().copied()),
        }
    }

    /// Range of `x` nodes, if tabulated in `x`.
    fn x_extent(&self) -> Option<(f64, f64)> {
        match self {
            CoefficientFn::Tabulated(g) => Some((g.x[0], *g.x.last().unwrap())),
            _ => None,
        }
    }
}

impl Default for CoefficientFn {
    fn default() -> Self {
        CoefficientFn::constant(0.0)
    }
}

/// Evaluates `c(x, t)` for `t` in `[0, horizon]`.
pub fn eval_coefficient(c: &CoefficientFn, x: f64, t: f64, horizon: f64) -> Result<f64> {
    if !(0.0..=horizon).contains(&t) {
        return Err(Error::Domain(format!("time {t} outside the horizon [0, {horizon}]")));
    }
    if !x.is_finite() {
        return Err(Error::Domain(format!("state {x} is not finite")));
    }
    Ok(c.value(x, t))
}

/// Rectangle over which model invariants are checked by sampling.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CheckDomain {
    pub x_min: f64,
    pub x_max: f64,
    pub horizon: f64,
}

impl CheckDomain {
    pub fn points(&self, n: usize) -> impl Iterator<Item = (f64, f64)> + '_ {
        let dx = (self.x_max - self.x_min) / (n - 1) as f64;
        let dt = self.horizon / (n - 1) as f64;
        (0..n).flat_map(move |i| (0..n).map(move |j| (self.x_min + j as f64 * dx, i as f64 * dt)))
    }
}

/// Bachelier's market: `dA = ρ dt + v dB` and the simple-interest account
/// `dβ = r dt`. The optional dividend rate `D` enters only the dividend
/// pricers, where the pricing diffusion drifts at `−D`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "MarketModelRepr")]
pub struct MarketModel {
    pub rho: CoefficientFn,
    pub vol: CoefficientFn,
    pub rate: CoefficientFn,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub dividend: Option<CoefficientFn>,
    #[serde(rename = "A0")]
    pub a0: f64,
    pub beta0: f64,
    pub horizon: f64,
    /// Accept `v ≡ 0`; only meaningful for deterministic test cases.
    #[serde(default, skip_serializing_if = "std::ops::Not::not")]
    pub degenerate: bool,
}

#[derive(Deserialize)]
struct MarketModelRepr {
    rho: CoefficientFn,
    vol: CoefficientFn,
    rate: CoefficientFn,
    #[serde(default)]
    dividend: Option<CoefficientFn>,
    #[serde(rename = "A0")]
    a0: f64,
    beta0: f64,
    #[serde(default = "default_horizon")]
    horizon: f64,
    #[serde(default)]
    degenerate: bool,
}

fn default_horizon() -> f64 {
    DEFAULT_HORIZON
}

impl TryFrom<MarketModelRepr> for MarketModel {
    type Error = Error;
    fn try_from(r: MarketModelRepr) -> Result<Self> {
        let m = MarketModel {
            rho: r.rho,
            vol: r.vol,
            rate: r.rate,
            dividend: r.dividend,
            a0: r.a0,
            beta0: r.beta0,
            horizon: r.horizon,
            degenerate: r.degenerate,
        };
        m.validate()?;
        Ok(m)
    }
}

impl MarketModel {
    pub fn new(
        rho: CoefficientFn,
        vol: CoefficientFn,
        rate: CoefficientFn,
        dividend: Option<CoefficientFn>,
        a0: f64,
        beta0: f64,
    ) -> Result<Self> {
        let m = MarketModel {
            rho,
            vol,
            rate,
            dividend,
            a0,
            beta0,
            horizon: DEFAULT_HORIZON,
            degenerate: false,
        };
        m.validate()?;
        Ok(m)
    }

    /// Constant-coefficient model with `β_0 = 1` and no dividend.
    pub fn constant(a0: f64, rho: f64, rate: f64, vol: f64) -> Result<Self> {
        Self::new(
            CoefficientFn::constant(rho),
            CoefficientFn::constant(vol),
            CoefficientFn::constant(rate),
            None,
            a0,
            1.0,
        )
    }

    /// Like [`MarketModel::new`] but accepts `v ≡ 0` (vol ≥ 0 instead of > 0).
    /// Only useful for deterministic test cases.
    pub fn degenerate(
        rho: CoefficientFn,
        vol: CoefficientFn,
        rate: CoefficientFn,
        dividend: Option<CoefficientFn>,
        a0: f64,
        beta0: f64,
    ) -> Result<Self> {
        let m = MarketModel {
            rho,
            vol,
            rate,
            dividend,
            a0,
            beta0,
            horizon: DEFAULT_HORIZON,
            degenerate: true,
        };
        m.validate()?;
        Ok(m)
    }

    pub fn with_horizon(mut self, horizon: f64) -> Result<Self> {
        self.horizon = horizon;
        self.validate()?;
        Ok(self)
    }

    pub fn with_dividend(mut self, dividend: CoefficientFn) -> Self {
        self.dividend = Some(dividend);
        self
    }

    /// Sampling rectangle: `A0 ± 10·max(1, v(A0,0)·√𝒯)`, widened to cover any
    /// tabulated `x` grid of `rho`, `rate` or `vol`.
    pub fn check_domain(&self) -> CheckDomain {
        let spread = 10.0 * (self.vol.value(self.a0, 0.0).abs() * self.horizon.sqrt()).max(1.0);
        let (mut lo, mut hi) = (self.a0 - spread, self.a0 + spread);
        for c in [&self.rho, &self.rate, &self.vol] {
            if let Some((a, b)) = c.x_extent() {
                lo = lo.min(a);
                hi = hi.max(b);
            }
        }
        CheckDomain {
            x_min: lo,
            x_max: hi,
            horizon: self.horizon,
        }
    }

    fn validate(&self) -> Result<()> {
        let strict_vol = !self.degenerate;
        if !(self.a0 > 0.0 && self.a0.is_finite()) {
            return Err(Error::Construction(format!("A0 must be > 0, got {}", self.a0)));
        }
        if !(self.beta0 > 0.0 && self.beta0.is_finite()) {
            return Err(Error::Construction(format!("beta0 must be > 0, got {}", self.beta0)));
        }
        if !(self.horizon > 0.0 && self.horizon.is_finite()) {
            return Err(Error::Construction("horizon must be positive".into()));
        }
        let domain = self.check_domain();
        for (x, t) in domain.points(RATE_CHECK_RESOLUTION) {
            let r = self.rate.value(x, t);
            let rho = self.rho.value(x, t);
            if r > rho {
                return Err(Error::Construction(format!(
                    "rate {r} exceeds drift {rho} at (x = {x}, t = {t})"
                )));
            }
            let v = self.vol.value(x, t);
            if (strict_vol && v <= 0.0) || v < 0.0 || !v.is_finite() {
                return Err(Error::Construction(format!(
                    "volatility must be positive, got {v} at (x = {x}, t = {t})"
                )));
            }
        }
        Ok(())
    }

    /// `(ρ, r, v, D)` when all coefficients are constants.
    pub fn constants(&self) -> Option<ConstantParams> {
        Some(ConstantParams {
            rho: self.rho.as_constant()?,
            rate: self.rate.as_constant()?,
            vol: self.vol.as_constant()?,
            dividend: match &self.dividend {
                None => 0.0,
                Some(d) => d.as_constant()?,
            },
        })
    }

    /// Market price of risk `θ = (ρ − r) / v`. Only `θ ≥ 0` follows from the
    /// model constraints, so no sign is enforced.
    pub fn market_price_of_risk(&self, x: f64, t: f64) -> f64 {
        (self.rho.value(x, t) - self.rate.value(x, t)) / self.vol.value(x, t)
    }

    /// `β_t` for a deterministic rate path evaluated at fixed `x`.
    pub fn account_value(&self, x: f64, t: f64) -> f64 {
        self.beta0 + self.rate.time_integral(x, 0.0, t)
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ConstantParams {
    pub rho: f64,
    pub rate: f64,
    pub vol: f64,
    pub dividend: f64,
}

/// Tabulated payoff: linear interpolation, flat extrapolation.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "TableRepr")]
pub struct Table {
    x: Vec<f64>,
    g: Vec<f64>,
}

#[derive(Deserialize)]
struct TableRepr {
    x: Vec<f64>,
    g: Vec<f64>,
}

impl TryFrom<TableRepr> for Table {
    type Error = Error;
    fn try_from(r: TableRepr) -> Result<Self> {
        Table::new(r.x, r.g)
    }
}

impl Table {
    pub fn new(x: Vec<f64>, g: Vec<f64>) -> Result<Self> {
        if x.is_empty() || x.len() != g.len() {
            return Err(Error::Construction(
                "tabulated payoff needs matching, non-empty x and g".into(),
            ));
        }
        if !strictly_increasing(&x) {
            return Err(Error::Construction(
                "tabulated payoff grid must be strictly increasing".into(),
            ));
        }
        if g.iter().any(|v| !v.is_finite()) {
            return Err(Error::Construction("tabulated payoff values must be finite".into()));
        }
        Ok(Table { x, g })
    }

    fn at(&self, x: f64) -> f64 {
        if self.x.len() == 1 {
            return self.g[0];
        }
        let i = cell(&self.x, x);
        let w = weight(&self.x, i, x);
        self.g[i] + w * (self.g[i + 1] - self.g[i])
    }
}

/// Payoff given by an arbitrary function; library-only (not serialisable).
#[derive(Clone)]
pub struct CustomPayoff {
    pub name: String,
    f: Arc<dyn Fn(f64) -> f64 + Send + Sync>,
}

impl fmt::Debug for CustomPayoff {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "CustomPayoff({})", self.name)
    }
}

impl PartialEq for CustomPayoff {
    fn eq(&self, other: &Self) -> bool {
        Arc::ptr_eq(&self.f, &other.f)
    }
}

/// Terminal payoff `g(A_T)`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case")]
pub enum Payoff {
    Call {
        strike: f64,
    },
    Put {
        strike: f64,
    },
    Forward {
        strike: f64,
    },
    Tabulated(Table),
    #[serde(skip)]
    Custom(CustomPayoff),
}

impl Payoff {
    pub fn call(strike: f64) -> Self {
        Payoff::Call { strike }
    }

    pub fn put(strike: f64) -> Self {
        Payoff::Put { strike }
    }

    pub fn forward(strike: f64) -> Self {
        Payoff::Forward { strike }
    }

    pub fn tabulated(x: Vec<f64>, g: Vec<f64>) -> Result<Self> {
        Table::new(x, g).map(Payoff::Tabulated)
    }

    pub fn custom(name: &str, f: impl Fn(f64) -> f64 + Send + Sync + 'static) -> Self {
        Payoff::Custom(CustomPayoff {
            name: name.to_string(),
            f: Arc::new(f),
        })
    }

    #[inline]
    pub fn value(&self, x: f64) -> f64 {
        match self {
            Payoff::Call { strike } => (x - strike).max(0.0),
            Payoff::Put { strike } => (strike - x).max(0.0),
            Payoff::Forward { strike } => x - strike,
            Payoff::Tabulated(t) => t.at(x),
            Payoff::Custom(c) => (c.f)(x),
        }
    }

    /// Point where the payoff is not smooth, if there is a single one.
    pub fn kink(&self) -> Option<f64> {
        match self {
            Payoff::Call { strike } | Payoff::Put { strike } => Some(*strike),
            _ => None,
        }
    }
}

/// Inputs of the ESG-adjusted price `S·(1 + γ·Z)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub struct EsgInputs {
    pub stock_price: f64,
    pub relative_score: f64,
    pub affinity: f64,
}

impl EsgInputs {
    pub fn new(stock_price: f64, relative_score: f64, affinity: f64) -> Result<Self> {
        if !(stock_price > 0.0) {
            return Err(Error::Construction(format!(
                "stock price must be > 0, got {stock_price}"
            )));
        }
        Ok(EsgInputs {
            stock_price,
            relative_score,
            affinity,
        })
    }
}

/// ESG-adjusted stock price. Can be negative, which is why an arithmetic
/// model of it is needed at all.
pub fn esg_adjusted_price(inputs: &EsgInputs) -> f64 {
    inputs.stock_price * (1.0 + inputs.affinity * inputs.relative_score)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn evaluates_each_kind() {
        assert_eq!(
            eval_coefficient(&CoefficientFn::constant(2.0), 50.0, 0.3, 1.0).unwrap(),
            2.0
        );
        let pw = CoefficientFn::piecewise(vec![0.0, 1.0], vec![1.0, 3.0]).unwrap();
        assert_eq!(eval_coefficient(&pw, 0.0, 1.5, 2.0).unwrap(), 3.0);
        assert_eq!(pw.value(0.0, 0.99), 1.0);
        assert_eq!(pw.value(0.0, 1.0), 3.0);
        let tab =
            CoefficientFn::tabulated(vec![0.0, 1.0], vec![0.0, 1.0], vec![vec![0.1, 0.2], vec![0.3, 0.4]]).unwrap();
        assert_eq!(tab.value(5.0, 0.0), 0.2);
        assert!((tab.value(0.5, 0.5) - 0.25).abs() < 1e-15);
        assert_eq!(tab.value(-3.0, 9.0), 0.3);
    }

    #[test]
    fn horizon_is_enforced() {
        let c = CoefficientFn::constant(1.0);
        assert!(matches!(eval_coefficient(&c, 0.0, 1.5, 1.0), Err(Error::Domain(_))));
        assert!(eval_coefficient(&c, 0.0, -0.1, 1.0).is_err());
    }

    #[test]
    fn piecewise_breakpoints_must_increase() {
        assert!(CoefficientFn::piecewise(vec![0.0, 1.0, 1.0], vec![1.0, 2.0, 3.0]).is_err());
        assert!(CoefficientFn::piecewise(vec![0.0], vec![]).is_err());
    }

    #[test]
    fn time_integral_is_exact() {
        let pw = CoefficientFn::piecewise(vec![0.0, 1.0], vec![1.0, 2.0]).unwrap();
        assert!((pw.time_integral(0.0, 0.0, 1.5) - 2.0).abs() < 1e-15);
        assert!((pw.time_integral(0.0, 0.5, 0.75) - 0.25).abs() < 1e-15);
        let lin = CoefficientFn::tabulated_in_time(vec![0.0, 2.0], vec![0.0, 2.0]).unwrap();
        assert!((lin.time_integral(0.0, 0.0, 3.0) - 4.0).abs() < 1e-15);
    }

    #[test]
    fn model_rejects_rate_above_drift() {
        let err = MarketModel::constant(100.0, 1.0, 2.0, 10.0).unwrap_err();
        assert!(matches!(err, Error::Construction(_)));
        assert!(MarketModel::constant(-1.0, 3.0, 2.0, 10.0).is_err());
        assert!(MarketModel::constant(100.0, 3.0, 2.0, 0.0).is_err());
        assert!(MarketModel::degenerate(
            CoefficientFn::constant(0.0),
            CoefficientFn::constant(0.0),
            CoefficientFn::constant(0.0),
            None,
            100.0,
            1.0
        )
        .is_ok());
    }

    #[test]
    fn rate_check_sees_state_dependence() {
        // r(x) = 0.0001 x crosses rho = 0.05 at x = 500, inside the tabulated grid.
        let rate = CoefficientFn::tabulated(vec![-1000.0, 1000.0], vec![0.0], vec![vec![-0.1, 0.1]]).unwrap();
        let m = MarketModel::new(
            CoefficientFn::constant(0.05),
            CoefficientFn::constant(10.0),
            rate,
            None,
            100.0,
            1.0,
        );
        assert!(m.is_err());
    }

    #[test]
    fn model_json_uses_the_documented_field_names() {
        let json = r#"{
            "rho": {"kind": "constant", "value": 3.0},
            "vol": {"kind": "constant", "value": 10.0},
            "rate": {"kind": "piecewise", "starts": [0.0, 1.0], "values": [2.0, 1.0]},
            "A0": 100.0,
            "beta0": 1.0
        }"#;
        let m: MarketModel = serde_json::from_str(json).unwrap();
        assert_eq!(m.rate.value(0.0, 1.5), 1.0);
        assert_eq!(m.horizon, DEFAULT_HORIZON);
        let back: MarketModel = serde_json::from_str(&serde_json::to_string(&m).unwrap()).unwrap();
        assert_eq!(back, m);

        let bad = json.replace("\"A0\": 100.0", "\"A0\": -1.0");
        assert!(serde_json::from_str::<MarketModel>(&bad).is_err());
    }

    #[test]
    fn payoff_json_and_values() {
        let p: Payoff = serde_json::from_str(r#"{"kind":"call","strike":-5.0}"#).unwrap();
        assert_eq!(p.value(-2.0), 3.0);
        let t: Payoff = serde_json::from_str(r#"{"kind":"tabulated","x":[0.0,1.0],"g":[0.0,2.0]}"#).unwrap();
        assert_eq!(t.value(0.25), 0.5);
        assert_eq!(t.value(7.0), 2.0);
        assert!(serde_json::from_str::<Payoff>(r#"{"kind":"tabulated","x":[1.0,0.0],"g":[0.0,2.0]}"#).is_err());
        assert_eq!(Payoff::put(1.0).value(3.0), 0.0);
        assert_eq!(Payoff::forward(1.0).value(-3.0), -4.0);
    }

    #[test]
    fn esg_examples() {
        let p = |s, z, g| esg_adjusted_price(&EsgInputs::new(s, z, g).unwrap());
        assert_eq!(p(100.0, 0.0, 0.5), 100.0);
        assert_eq!(p(100.0, -0.5, 3.0), -50.0);
        assert_eq!(p(80.0, 0.25, 1.0), 100.0);
        assert!(EsgInputs::new(0.0, 1.0, 1.0).is_err());
    }
}
