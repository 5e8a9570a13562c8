//! Bachelier's term structure: bond surfaces `ℬ(t,T)`, forward rates
//! `f = −∂ ln ℬ/∂T`, no-interest loan rates `ℓ = −∂ℬ/∂T`, forward LIBOR, and
//! the Hull–White surface.
//!
//! Surfaces live on a uniform maturity grid. Each observation time `t` must
//! be a grid node, and its row holds the values for `T ≥ t`, starting with
//! the diagonal. Access with `T < t` is an error. Derivatives in `T` use
//! second-order stencils (central inside, three-point one-sided at the row
//! ends), integrals use the trapezoid rule, and off-node values are linear
//! interpolations.

mod dynamics;

use std::fmt;
use std::io::{self, Write};

use serde::{Deserialize, Serialize};

use crate::analytic::{hw_bond_price, HullWhiteParams};
use crate::error::{Error, Result};
use crate::simulate::fmt9;

pub use dynamics::{bhjm_simulate, hjm_simulate_forward, BhjmPath, BhjmPaths, BhjmSpec, LoanVol};

const NODE_TOL: f64 = 1e-9;

/// Lower-triangular-in-time storage on a uniform maturity grid.
#[derive(Debug, Clone, PartialEq)]
pub struct Triangle {
    times: Vec<f64>,
    maturities: Vec<f64>,
    /// Index of `times[i]` in `maturities`.
    first: Vec<usize>,
    rows: Vec<Vec<f64>>,
}

impl Triangle {
    /// Fills every `(tᵢ, Tⱼ)` with `Tⱼ ≥ tᵢ` from `f(i, j)`.
    fn build(times: &[f64], maturities: &[f64], mut f: impl FnMut(usize, usize) -> Result<f64>) -> Result<Self> {
        check_uniform(maturities)?;
        let first = times
            .iter()
            .map(|&t| node_index(maturities, t))
            .collect::<Result<Vec<_>>>()?;
        if first.windows(2).any(|w| w[1] <= w[0]) {
            return Err(Error::Config("observation times must be strictly increasing".into()));
        }
        let mut rows = Vec::with_capacity(times.len());
        for (i, &j0) in first.iter().enumerate() {
            let row = (j0..maturities.len()).map(|j| f(i, j)).collect::<Result<Vec<_>>>()?;
            rows.push(row);
        }
        Ok(Triangle {
            times: first.iter().map(|&j| maturities[j]).collect(),
            maturities: maturities.to_vec(),
            first,
            rows,
        })
    }

    fn step(&self) -> f64 {
        self.maturities[1] - self.maturities[0]
    }

    fn row_index(&self, t: f64) -> Result<usize> {
        self.times
            .iter()
            .position(|&s| (s - t).abs() <= NODE_TOL * (1.0 + t.abs()))
            .ok_or_else(|| Error::Domain(format!("t = {t} is not an observation time of the surface")))
    }

    /// Row `i` as `(maturities, values)`.
    fn row(&self, i: usize) -> (&[f64], &[f64]) {
        (&self.maturities[self.first[i]..], &self.rows[i])
    }

    /// Row and fractional position of `T` in it.
    fn locate(&self, t: f64, big_t: f64) -> Result<(usize, usize, f64)> {
        let i = self.row_index(t)?;
        let (ts, _) = self.row(i);
        let t_row = ts[0];
        let last = *ts.last().unwrap();
        let tol = NODE_TOL * (1.0 + big_t.abs());
        if big_t < t_row - tol {
            return Err(Error::Domain(format!(
                "T = {big_t} precedes t = {t}; the surface holds T >= t only"
            )));
        }
        if big_t > last + tol {
            return Err(Error::Domain(format!("T = {big_t} beyond the last maturity {last}")));
        }
        let pos = ((big_t - t_row) / self.step()).clamp(0.0, (ts.len() - 1) as f64);
        let j = (pos.floor() as usize).min(ts.len().saturating_sub(2));
        Ok((i, j, pos - j as f64))
    }

    fn value(&self, t: f64, big_t: f64) -> Result<f64> {
        let (i, j, w) = self.locate(t, big_t)?;
        let row = &self.rows[i];
        if row.len() == 1 || w == 0.0 {
            return Ok(row[j]);
        }
        Ok(row[j] + w * (row[j + 1] - row[j]))
    }

    fn map_rows(&self, f: impl Fn(&[f64], f64) -> Result<Vec<f64>>) -> Result<Self> {
        let h = self.step();
        let rows = self.rows.iter().map(|r| f(r, h)).collect::<Result<Vec<_>>>()?;
        Ok(Triangle { rows, ..self.clone() })
    }

    fn write_csv<W: Write>(&self, out: &mut W, kind: &str) -> io::Result<()> {
        writeln!(out, "# kind: {kind}")?;
        writeln!(out, "t,T,value")?;
        for i in 0..self.times.len() {
            let (ts, vs) = self.row(i);
            for (big_t, v) in ts.iter().zip(vs) {
                writeln!(out, "{},{},{}", fmt9(self.times[i]), fmt9(*big_t), fmt9(*v))?;
            }
        }
        Ok(())
    }
}

fn check_uniform(grid: &[f64]) -> Result<()> {
    if grid.len() < 2 {
        return Err(Error::Config("maturity grid needs at least two nodes".into()));
    }
    let h = grid[1] - grid[0];
    if !(h > 0.0) || grid.iter().any(|x| !x.is_finite()) {
        return Err(Error::Config("maturity grid must be finite and increasing".into()));
    }
    for (k, &x) in grid.iter().enumerate() {
        let expected = grid[0] + k as f64 * h;
        if (x - expected).abs() > 1e-9 * (1.0 + expected.abs()) {
            return Err(Error::Config(format!("maturity grid must be uniform (node {k} = {x})")));
        }
    }
    Ok(())
}

fn node_index(grid: &[f64], t: f64) -> Result<usize> {
    let h = grid[1] - grid[0];
    let pos = (t - grid[0]) / h;
    let j = pos.round();
    if j < 0.0 || j as usize >= grid.len() || (pos - j).abs() > 1e-6 {
        return Err(Error::Config(format!(
            "time {t} is not a node of the maturity grid [{}, {}] with step {h}",
            grid[0],
            grid[grid.len() - 1]
        )));
    }
    Ok(j as usize)
}

/// A uniform grid `start, start + h, …, end` with `n` intervals.
pub fn uniform_grid(start: f64, end: f64, n: usize) -> Result<Vec<f64>> {
    if n == 0 || !(end > start) {
        return Err(Error::Config(format!(
            "grid needs start < end and n >= 1, got [{start}, {end}], n = {n}"
        )));
    }
    let h = (end - start) / n as f64;
    let mut g: Vec<f64> = (0..=n).map(|k| start + k as f64 * h).collect();
    g[n] = end;
    Ok(g)
}

/// `∂v/∂T` at node `j` of a row with spacing `h`.
fn derivative(v: &[f64], h: f64, j: usize) -> f64 {
    let n = v.len();
    match n {
        0 | 1 => f64::NAN,
        2 => (v[1] - v[0]) / h,
        _ if j == 0 => (-3.0 * v[0] + 4.0 * v[1] - v[2]) / (2.0 * h),
        _ if j == n - 1 => (3.0 * v[n - 1] - 4.0 * v[n - 2] + v[n - 3]) / (2.0 * h),
        _ => (v[j + 1] - v[j - 1]) / (2.0 * h),
    }
}

/// The nodes a [`derivative`] at `j` reads.
fn stencil(n: usize, j: usize) -> std::ops::Range<usize> {
    match n {
        0..=2 => 0..n,
        _ if j == 0 => 0..3,
        _ if j == n - 1 => n - 3..n,
        _ => j - 1..j + 2,
    }
}

/// How a bond surface relates to its rates.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum BondKind {
    /// `ℬ(t,T) = 1 − E_t ∫ r ds`, equivalently `1 − ∫ ℓ(t,u) du`.
    Linear,
    /// `exp(−∫ f(t,u) du)`, built from forward rates.
    Exponential,
}

/// Zero-coupon bond prices `ℬ(t,T)` for `T ≥ t`, with `ℬ(t,t) = 1`.
#[derive(Debug, Clone, PartialEq)]
pub struct BondSurface {
    grid: Triangle,
    pub kind: BondKind,
}

impl BondSurface {
    /// Evaluates `f(t, T)` off the diagonal and stores exactly 1 on it.
    pub fn from_fn(
        times: &[f64],
        maturities: &[f64],
        kind: BondKind,
        mut f: impl FnMut(f64, f64) -> Result<f64>,
    ) -> Result<Self> {
        let mut grid = Triangle::build(times, maturities, |_, _| Ok(0.0))?;
        for i in 0..grid.times.len() {
            let t = grid.times[i];
            let j0 = grid.first[i];
            for (k, v) in grid.rows[i].iter_mut().enumerate() {
                *v = if k == 0 { 1.0 } else { f(t, maturities[j0 + k])? };
            }
        }
        Ok(BondSurface { grid, kind })
    }

    pub fn times(&self) -> &[f64] {
        &self.grid.times
    }

    pub fn maturities(&self) -> &[f64] {
        &self.grid.maturities
    }

    /// Maturities and values of the row observed at `times()[i]`.
    pub fn row(&self, i: usize) -> (&[f64], &[f64]) {
        self.grid.row(i)
    }

    /// `ℬ(t, T)`, linear between maturities.
    pub fn value(&self, t: f64, big_t: f64) -> Result<f64> {
        self.grid.value(t, big_t)
    }

    pub fn write_csv<W: Write>(&self, out: &mut W) -> io::Result<()> {
        let kind = match self.kind {
            BondKind::Linear => "bond",
            BondKind::Exponential => "bond-exponential",
        };
        self.grid.write_csv(out, kind)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum RateKind {
    /// `f(t,T) = −∂ ln ℬ/∂T`.
    Forward,
    /// `ℓ(t,T) = −∂ℬ/∂T = E_t r_T`.
    Loan,
}

impl fmt::Display for RateKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            RateKind::Forward => "forward-rate",
            RateKind::Loan => "loan-rate",
        })
    }
}

/// Forward or no-interest loan rates on the same triangular layout.
#[derive(Debug, Clone, PartialEq)]
pub struct RateSurface {
    grid: Triangle,
    pub kind: RateKind,
}

impl RateSurface {
    pub fn from_fn(
        times: &[f64],
        maturities: &[f64],
        kind: RateKind,
        mut f: impl FnMut(f64, f64) -> Result<f64>,
    ) -> Result<Self> {
        let grid = Triangle::build(times, maturities, |i, j| f(times[i], maturities[j]))?;
        Ok(RateSurface { grid, kind })
    }

    /// Rows given directly: `rows[i]` covers the maturities from `times[i]` on.
    pub fn from_rows(times: &[f64], maturities: &[f64], kind: RateKind, rows: Vec<Vec<f64>>) -> Result<Self> {
        let mut grid = Triangle::build(times, maturities, |_, _| Ok(0.0))?;
        for (i, row) in rows.iter().enumerate() {
            if row.len() != grid.rows.get(i).map_or(usize::MAX, Vec::len) {
                return Err(Error::Config(format!("rate row {i} has the wrong length")));
            }
        }
        if rows.len() != grid.rows.len() {
            return Err(Error::Config("one rate row per observation time is required".into()));
        }
        grid.rows = rows;
        Ok(RateSurface { grid, kind })
    }

    pub fn times(&self) -> &[f64] {
        &self.grid.times
    }

    pub fn maturities(&self) -> &[f64] {
        &self.grid.maturities
    }

    pub fn row(&self, i: usize) -> (&[f64], &[f64]) {
        self.grid.row(i)
    }

    pub fn value(&self, t: f64, big_t: f64) -> Result<f64> {
        self.grid.value(t, big_t)
    }

    /// The diagonal `rate(t, t)` for every observation time.
    pub fn diagonal(&self) -> Vec<f64> {
        self.grid.rows.iter().map(|r| r[0]).collect()
    }

    pub fn write_csv<W: Write>(&self, out: &mut W) -> io::Result<()> {
        self.grid.write_csv(out, &self.kind.to_string())
    }
}

/// Point derivative of a row, linear between the node derivatives around `T`.
fn row_rate(grid: &Triangle, t: f64, big_t: f64, transform: impl Fn(&[f64], usize) -> Result<f64>) -> Result<f64> {
    let (i, j, w) = grid.locate(t, big_t)?;
    let row = &grid.rows[i];
    if row.len() < 2 {
        return Err(Error::Domain(format!(
            "row at t = {t} has a single maturity; no derivative"
        )));
    }
    let lo = transform(row, j)?;
    if w == 0.0 {
        return Ok(lo);
    }
    Ok(lo + w * (transform(row, j + 1)? - lo))
}

fn log_derivative(row: &[f64], h: f64, j: usize, t: f64) -> Result<f64> {
    let idx = stencil(row.len(), j);
    if row[idx.clone()].iter().any(|b| !(*b > 0.0)) {
        return Err(Error::Domain(format!(
            "bond value <= 0 near T-index {j} at t = {t}; the forward rate needs a positive bond"
        )));
    }
    let logs: Vec<f64> = row[idx.clone()].iter().map(|b| b.ln()).collect();
    Ok(-derivative(&logs, h, j - idx.start))
}

/// `f(t,T) = −∂ ln ℬ(t,T)/∂T` from the surface.
pub fn forward_rate_from_bonds(surface: &BondSurface, t: f64, big_t: f64) -> Result<f64> {
    let h = surface.grid.step();
    row_rate(&surface.grid, t, big_t, |row, j| log_derivative(row, h, j, t))
}

/// `ℓ(t,T) = −∂ℬ(t,T)/∂T` from the surface.
pub fn loan_rate_from_bonds(surface: &BondSurface, t: f64, big_t: f64) -> Result<f64> {
    require_linear(surface)?;
    let h = surface.grid.step();
    row_rate(&surface.grid, t, big_t, |row, j| Ok(-derivative(row, h, j)))
}

fn require_linear(surface: &BondSurface) -> Result<()> {
    if surface.kind != BondKind::Linear {
        return Err(Error::Config(
            "loan rates are defined from the linear bond representation only".into(),
        ));
    }
    Ok(())
}

fn check_rows(grid: &Triangle) -> Result<()> {
    if grid.rows.iter().any(|r| r.len() < 2) {
        return Err(Error::Domain(
            "every row needs at least two maturities to differentiate".into(),
        ));
    }
    Ok(())
}

/// Forward rates at every node of the surface.
pub fn forward_rates_from_bonds(surface: &BondSurface) -> Result<RateSurface> {
    check_rows(&surface.grid)?;
    let grid = surface
        .grid
        .map_rows(|row, h| (0..row.len()).map(|j| log_derivative(row, h, j, f64::NAN)).collect())?;
    Ok(RateSurface {
        grid,
        kind: RateKind::Forward,
    })
}

/// Loan rates at every node of the surface.
pub fn loan_rates_from_bonds(surface: &BondSurface) -> Result<RateSurface> {
    require_linear(surface)?;
    check_rows(&surface.grid)?;
    let grid = surface
        .grid
        .map_rows(|row, h| Ok((0..row.len()).map(|j| -derivative(row, h, j)).collect()))?;
    Ok(RateSurface {
        grid,
        kind: RateKind::Loan,
    })
}

/// Running trapezoid integral of a row, starting at 0 on the diagonal.
fn cumulative_trapezoid(row: &[f64], h: f64) -> Vec<f64> {
    let mut acc = 0.0;
    let mut out = Vec::with_capacity(row.len());
    out.push(0.0);
    for w in row.windows(2) {
        acc += 0.5 * (w[0] + w[1]) * h;
        out.push(acc);
    }
    out
}

/// `ℬ(t,T) = 1 − ∫_t^T ℓ(t,u) du` by the trapezoid rule.
pub fn bonds_from_loan_rates(rates: &RateSurface) -> Result<BondSurface> {
    if rates.kind != RateKind::Loan {
        return Err(Error::Config("bonds_from_loan_rates needs loan rates".into()));
    }
    let grid = rates
        .grid
        .map_rows(|row, h| Ok(cumulative_trapezoid(row, h).into_iter().map(|i| 1.0 - i).collect()))?;
    Ok(BondSurface {
        grid,
        kind: BondKind::Linear,
    })
}

/// `exp(−∫_t^T f(t,u) du)` by the trapezoid rule: the exponential
/// representation, which is close to but not equal to the linear one.
pub fn bonds_from_forward_rates(rates: &RateSurface) -> Result<BondSurface> {
    if rates.kind != RateKind::Forward {
        return Err(Error::Config("bonds_from_forward_rates needs forward rates".into()));
    }
    let grid = rates
        .grid
        .map_rows(|row, h| Ok(cumulative_trapezoid(row, h).into_iter().map(|i| (-i).exp()).collect()))?;
    Ok(BondSurface {
        grid,
        kind: BondKind::Exponential,
    })
}

/// `(1/δ) ∫_τ^{τ+δ} ℓ(t, t+u) du`: trapezoid over the grid nodes inside the
/// window plus interpolated end points.
pub fn forward_libor(rates: &RateSurface, t: f64, tau: f64, delta: f64) -> Result<f64> {
    if !(delta > 0.0) || !(tau >= 0.0) {
        return Err(Error::Domain(format!(
            "forward LIBOR needs tau >= 0 and delta > 0, got {tau}, {delta}"
        )));
    }
    let i = rates.grid.row_index(t)?;
    let t_row = rates.grid.times[i];
    let (lo, hi) = (t_row + tau, t_row + tau + delta);
    let mut xs = vec![lo];
    let (ts, _) = rates.grid.row(i);
    xs.extend(ts.iter().copied().filter(|&u| u > lo && u < hi));
    xs.push(hi);
    let ys = xs.iter().map(|&u| rates.value(t, u)).collect::<Result<Vec<_>>>()?;
    let integral: f64 = xs
        .windows(2)
        .zip(ys.windows(2))
        .map(|(x, y)| 0.5 * (y[0] + y[1]) * (x[1] - x[0]))
        .sum();
    Ok(integral / delta)
}

/// Hull–White bonds `1 − r_t c(t,T) − a(t,T)` on the grid. Rows at `t > 0`
/// need the short rate observed at `t`; `short_rates[i]` belongs to
/// `times[i]` and the row at `t = 0` uses `p.r0` when none are given.
pub fn hw_curve(
    p: &HullWhiteParams,
    times: &[f64],
    maturities: &[f64],
    short_rates: Option<&[f64]>,
) -> Result<BondSurface> {
    if let Some(r) = short_rates {
        if r.len() != times.len() {
            return Err(Error::Config(format!(
                "{} short rates given for {} observation times",
                r.len(),
                times.len()
            )));
        }
    }
    let rate_at = |i: usize| -> Result<f64> {
        match short_rates {
            Some(r) => Ok(r[i]),
            None if times[i] == 0.0 => Ok(p.r0),
            None => Err(Error::Config(format!(
                "the surface at t = {} needs the short rate observed then",
                times[i]
            ))),
        }
    };
    let rates = (0..times.len()).map(rate_at).collect::<Result<Vec<_>>>()?;
    let mut row = 0;
    BondSurface::from_fn(times, maturities, BondKind::Linear, |t, big_t| {
        while times[row] != t {
            row += 1;
        }
        hw_bond_price(p, rates[row], t, big_t)
    })
}
