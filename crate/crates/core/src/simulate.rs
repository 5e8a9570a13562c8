//! Discretised sample paths of the model's SDEs with reproducible randomness.
//!
//! Path `i` draws its normals from a ChaCha8 stream keyed by `(seed, i)`, so
//! the output does not depend on how paths are spread over threads. Uniforms
//! are turned into normals by the inverse normal CDF. With
//! `brownian_substeps = k` each step's increment is the sum of `k` stream
//! normals scaled by `1/√k`, which lets a coarse grid reuse the Brownian path
//! of a `k`-times finer one.

use std::io::{self, Write};

use rand_chacha::rand_core::{RngCore, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::analytic::HullWhiteParams;
use crate::error::{Error, Result};
use crate::model::{CoefficientFn, MarketModel};
use crate::numerics::normal::inv_cdf;
use crate::numerics::stats;

pub const DEFAULT_PATHS: usize = 100_000;
pub const STEPS_PER_YEAR: f64 = 250.0;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Scheme {
    #[default]
    Euler,
    ExactWhereAvailable,
}

/// Which time points a [`PathSet`] keeps.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Storage {
    /// Every step, `nSteps + 1` values per path.
    #[default]
    Full,
    /// Only the initial and terminal values.
    Terminal,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Measure {
    Physical,
    RiskNeutral,
}

fn one() -> usize {
    1
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub struct SimConfig {
    pub seed: u64,
    pub n_paths: usize,
    pub n_steps: usize,
    pub t_start: f64,
    pub t_end: f64,
    #[serde(default)]
    pub scheme: Scheme,
    #[serde(default = "one")]
    pub brownian_substeps: usize,
    #[serde(default)]
    pub storage: Storage,
    /// Pair path `2i + 1` with the negated normals of path `2i`.
    #[serde(default)]
    pub antithetic: bool,
}

impl SimConfig {
    pub fn new(seed: u64, n_paths: usize, n_steps: usize, t_start: f64, t_end: f64) -> Result<Self> {
        let cfg = SimConfig {
            seed,
            n_paths,
            n_steps,
            t_start,
            t_end,
            scheme: Scheme::Euler,
            brownian_substeps: 1,
            storage: Storage::Full,
            antithetic: false,
        };
        cfg.validate()?;
        Ok(cfg)
    }

    /// `n_paths` paths over `[0, t_end]` with 250 steps per year.
    pub fn standard(seed: u64, n_paths: usize, t_end: f64) -> Result<Self> {
        let steps = ((STEPS_PER_YEAR * t_end).ceil() as usize).max(1);
        Self::new(seed, n_paths, steps, 0.0, t_end)
    }

    pub fn with_scheme(mut self, scheme: Scheme) -> Self {
        self.scheme = scheme;
        self
    }

    pub fn with_storage(mut self, storage: Storage) -> Self {
        self.storage = storage;
        self
    }

    pub fn with_substeps(mut self, k: usize) -> Result<Self> {
        self.brownian_substeps = k;
        self.validate()?;
        Ok(self)
    }

    pub fn with_seed(mut self, seed: u64) -> Self {
        self.seed = seed;
        self
    }

    pub fn with_antithetic(mut self, on: bool) -> Result<Self> {
        self.antithetic = on;
        self.validate()?;
        Ok(self)
    }

    /// Same seed, path count and step count over `[t_start, t_end]`.
    pub fn over(mut self, t_start: f64, t_end: f64) -> Result<Self> {
        self.t_start = t_start;
        self.t_end = t_end;
        self.validate()?;
        Ok(self)
    }

    pub fn validate(&self) -> Result<()> {
        if self.n_paths == 0 {
            return Err(Error::Config("nPaths must be at least 1".into()));
        }
        if self.n_steps == 0 {
            return Err(Error::Config("nSteps must be at least 1".into()));
        }
        if self.antithetic && self.n_paths % 2 == 1 {
            return Err(Error::Config("antithetic sampling needs an even nPaths".into()));
        }
        if self.brownian_substeps == 0 {
            return Err(Error::Config("brownianSubsteps must be at least 1".into()));
        }
        if !(self.t_start.is_finite() && self.t_end.is_finite() && self.t_start >= 0.0) {
            return Err(Error::Config("tStart must be finite and >= 0".into()));
        }
        if !(self.t_end > self.t_start) {
            return Err(Error::Config(format!(
                "tEnd ({}) must exceed tStart ({})",
                self.t_end, self.t_start
            )));
        }
        Ok(())
    }

    pub fn dt(&self) -> f64 {
        (self.t_end - self.t_start) / self.n_steps as f64
    }

    /// Uniform time grid with exact end points.
    pub fn times(&self) -> Vec<f64> {
        let dt = self.dt();
        let mut t: Vec<f64> = (0..=self.n_steps).map(|k| self.t_start + k as f64 * dt).collect();
        t[self.n_steps] = self.t_end;
        t
    }
}

/// Standard normal increments, read from one ChaCha8 stream per seed.
///
/// Path `i` owns the `w = nSteps · brownianSubsteps` uniforms at positions
/// `[i·w, (i+1)·w)` of the stream, so its normals depend only on the seed
/// and its index. Under antithetic pairing path `2j + 1` replays the normals
/// of path `2j` with the opposite sign.
pub(crate) struct Normals {
    rng: ChaCha8Rng,
    substeps: usize,
    scale: f64,
    per_path: u64,
    used: u64,
    tape: Tape,
}

enum Tape {
    Off,
    Record(Vec<f64>),
    Replay(Vec<f64>, usize),
}

impl Normals {
    /// Positioned at the first draw of path `path` (a pair index under
    /// antithetic sampling).
    fn at(cfg: &SimConfig, source: usize) -> Self {
        let per_path = (cfg.n_steps * cfg.brownian_substeps) as u64;
        let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
        // Two 32-bit words per u64 draw.
        rng.set_word_pos(source as u128 * per_path as u128 * 2);
        Normals {
            rng,
            substeps: cfg.brownian_substeps,
            scale: 1.0 / (cfg.brownian_substeps as f64).sqrt(),
            per_path,
            used: 0,
            tape: if cfg.antithetic {
                Tape::Record(Vec::new())
            } else {
                Tape::Off
            },
        }
    }

    #[inline]
    fn draw(&mut self) -> f64 {
        self.used += 1;
        // 53 random bits mapped into the open interval (0, 1).
        let u = ((self.rng.next_u64() >> 11) as f64 + 0.5) * (1.0 / (1u64 << 53) as f64);
        inv_cdf(u)
    }

    /// Next step's standard normal.
    #[inline]
    pub(crate) fn next(&mut self) -> f64 {
        if let Tape::Replay(tape, k) = &mut self.tape {
            let z = -tape[*k];
            *k += 1;
            return z;
        }
        let z = if self.substeps == 1 {
            self.draw()
        } else {
            let mut s = 0.0;
            for _ in 0..self.substeps {
                s += self.draw();
            }
            s * self.scale
        };
        if let Tape::Record(tape) = &mut self.tape {
            tape.push(z);
        }
        z
    }

    /// Moves to the start of the next path's draws.
    fn end_path(&mut self) {
        if !matches!(self.tape, Tape::Replay(..)) {
            debug_assert!(self.used <= self.per_path, "path drew more normals than its budget");
            while self.used < self.per_path {
                self.rng.next_u64();
                self.used += 1;
            }
            self.used = 0;
        }
        self.tape = match std::mem::replace(&mut self.tape, Tape::Off) {
            Tape::Off => Tape::Off,
            Tape::Record(tape) => Tape::Replay(tape, 0),
            Tape::Replay(mut tape, _) => {
                tape.clear();
                Tape::Record(tape)
            }
        };
    }
}

/// Paths per task; even, so antithetic pairs never straddle two chunks.
const CHUNK: usize = 256;

/// `f` over the paths `range`, in order, with one sequential stream reader.
fn run_chunk<T, F>(cfg: &SimConfig, range: std::ops::Range<usize>, f: &F) -> Vec<T>
where
    F: Fn(usize, &mut Normals) -> T,
{
    let source = if cfg.antithetic { range.start / 2 } else { range.start };
    let mut normals = Normals::at(cfg, source);
    let mut out = Vec::with_capacity(range.len());
    for i in range {
        out.push(f(i, &mut normals));
        normals.end_path();
    }
    out
}

/// Runs `f` for the paths `[start, end)` in parallel chunks; output order is
/// the path order.
fn par_range<T, F>(cfg: &SimConfig, start: usize, end: usize, f: &F) -> Vec<T>
where
    T: Send,
    F: Fn(usize, &mut Normals) -> T + Sync + Send,
{
    let chunks: Vec<Vec<T>> = (start..end)
        .step_by(CHUNK)
        .collect::<Vec<_>>()
        .into_par_iter()
        .map(|s| run_chunk(cfg, s..(s + CHUNK).min(end), f))
        .collect();
    chunks.into_iter().flatten().collect()
}

/// Runs `f` for every path index in parallel; output order is the path order.
pub(crate) fn par_paths<T, F>(cfg: &SimConfig, f: F) -> Vec<T>
where
    T: Send,
    F: Fn(usize, &mut Normals) -> T + Sync + Send,
{
    par_range(cfg, 0, cfg.n_paths, &f)
}

/// Paths per block of [`par_mean`].
const BLOCK: usize = 1 << 16;

/// Under antithetic sampling the independent draws are the pair averages.
pub(crate) fn pair_means(cfg: &SimConfig, xs: Vec<f64>) -> Vec<f64> {
    if cfg.antithetic {
        xs.chunks(2).map(|p| 0.5 * (p[0] + p[1])).collect()
    } else {
        xs
    }
}

/// Sample mean and standard error of `f` over all paths without storing the
/// samples: fixed-size blocks are reduced pairwise and merged in path order.
/// Antithetic pairs count as one independent sample.
pub(crate) fn par_mean<F>(cfg: &SimConfig, f: F) -> (f64, f64)
where
    F: Fn(usize, &mut Normals) -> f64 + Sync + Send,
{
    let (mut n, mut mean, mut m2) = (0usize, 0.0, 0.0);
    for start in (0..cfg.n_paths).step_by(BLOCK) {
        let end = (start + BLOCK).min(cfg.n_paths);
        let xs = pair_means(cfg, par_range(cfg, start, end, &f));
        let nb = xs.len();
        let mb = stats::mean(&xs);
        let dev: Vec<f64> = xs.iter().map(|x| (x - mb) * (x - mb)).collect();
        let m2b = stats::pairwise_sum(&dev);
        let total = n + nb;
        let delta = mb - mean;
        mean += delta * nb as f64 / total as f64;
        m2 += m2b + delta * delta * (n as f64) * (nb as f64) / total as f64;
        n = total;
    }
    let stderr = if n > 1 {
        (m2 / (n - 1) as f64 / n as f64).sqrt()
    } else {
        0.0
    };
    (mean, stderr)
}

/// Identifies the process a [`PathSet`] was simulated from.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct PathMeta {
    pub config: SimConfig,
    pub model: String,
}

/// Simulated trajectories: one row of values per path.
#[derive(Debug, Clone, PartialEq)]
pub struct PathSet {
    pub times: Vec<f64>,
    values: Vec<f64>,
    width: usize,
    /// `∫ r ds` along each path, when the process carries a rate.
    pub integrals: Option<Vec<f64>>,
    /// Running integral at every stored time, same layout as `values`.
    running: Option<Vec<f64>>,
    pub meta: PathMeta,
}

impl PathSet {
    fn assemble(cfg: &SimConfig, model: &str, rows: Vec<Row>, with_integral: bool) -> Self {
        let all_times = cfg.times();
        let times = match cfg.storage {
            Storage::Full => all_times,
            Storage::Terminal => vec![cfg.t_start, cfg.t_end],
        };
        let width = times.len();
        let mut values = Vec::with_capacity(rows.len() * width);
        let cap = if with_integral { rows.len() } else { 0 };
        let mut integrals = Vec::with_capacity(cap);
        let mut running = Vec::with_capacity(cap * width);
        for row in rows {
            values.extend_from_slice(&row.values);
            if with_integral {
                integrals.push(row.integral);
                running.extend_from_slice(&row.running);
            }
        }
        PathSet {
            times,
            values,
            width,
            integrals: with_integral.then_some(integrals),
            running: with_integral.then_some(running),
            meta: PathMeta {
                config: *cfg,
                model: model.to_string(),
            },
        }
    }

    pub fn n_paths(&self) -> usize {
        self.values.len() / self.width
    }

    pub fn path(&self, i: usize) -> &[f64] {
        &self.values[i * self.width..(i + 1) * self.width]
    }

    pub fn terminal(&self, i: usize) -> f64 {
        self.values[(i + 1) * self.width - 1]
    }

    pub fn terminals(&self) -> Vec<f64> {
        (0..self.n_paths()).map(|i| self.terminal(i)).collect()
    }

    /// Running `∫ r ds` of path `i` at the stored times.
    pub fn running_integral(&self, i: usize) -> Option<&[f64]> {
        self.running.as_ref().map(|r| &r[i * self.width..(i + 1) * self.width])
    }

    /// Writes `path,time,value[,integral]` rows, the integral column holding
    /// the running `∫ r ds` up to that time.
    pub fn write_csv<W: Write>(&self, out: &mut W) -> io::Result<()> {
        let with_integral = self.integrals.is_some();
        if with_integral {
            writeln!(out, "path,time,value,integral")?;
        } else {
            writeln!(out, "path,time,value")?;
        }
        for i in 0..self.n_paths() {
            let running = self.running_integral(i);
            for (k, (&t, &v)) in self.times.iter().zip(self.path(i)).enumerate() {
                write!(out, "{i},{},{}", fmt9(t), fmt9(v))?;
                if let Some(acc) = running {
                    write!(out, ",{}", fmt9(acc[k]))?;
                }
                writeln!(out)?;
            }
        }
        Ok(())
    }
}

/// One simulated path as stored in a [`PathSet`].
struct Row {
    values: Vec<f64>,
    running: Vec<f64>,
    integral: f64,
}

impl Row {
    fn with_capacity(n: usize) -> Self {
        Row {
            values: Vec::with_capacity(n),
            running: Vec::with_capacity(n),
            integral: 0.0,
        }
    }

    fn push(&mut self, x: f64, acc: f64) {
        self.values.push(x);
        self.running.push(acc);
    }
}

/// Formats with 9 significant digits, dropping trailing zeros.
pub fn fmt9(x: f64) -> String {
    if x == 0.0 || !x.is_finite() {
        return format!("{}", if x == 0.0 { 0.0 } else { x });
    }
    let rounded: f64 = format!("{x:.8e}").parse().unwrap_or(x);
    format!("{rounded}")
}

/// One-dimensional diffusion `dX = μ(X,t) dt + σ(X,t) dB`, optionally carrying
/// the running integral of a rate `r(X,t)`.
pub(crate) struct Diffusion<'a> {
    pub drift: &'a CoefficientFn,
    pub drift_sign: f64,
    pub vol: &'a CoefficientFn,
    pub rate: Option<&'a CoefficientFn>,
}

impl Diffusion<'_> {
    /// Euler–Maruyama walk; `observe(k, x, acc)` sees every grid value
    /// including the start, with the running trapezoidal `∫ r ds`. Returns
    /// the full integral.
    #[inline]
    pub(crate) fn walk(
        &self,
        x0: f64,
        times: &[f64],
        normals: &mut Normals,
        mut observe: impl FnMut(usize, f64, f64),
    ) -> f64 {
        let mut x = x0;
        let mut integral = 0.0;
        let mut r_prev = self.rate.map_or(0.0, |r| r.value(x, times[0]));
        observe(0, x, 0.0);
        for k in 0..times.len() - 1 {
            let (t, dt) = (times[k], times[k + 1] - times[k]);
            let mu = self.drift_sign * self.drift.value(x, t);
            let sigma = self.vol.value(x, t);
            x += mu * dt + sigma * dt.sqrt() * normals.next();
            if let Some(r) = self.rate {
                let r_next = r.value(x, times[k + 1]);
                integral += 0.5 * (r_prev + r_next) * dt;
                r_prev = r_next;
            }
            observe(k + 1, x, integral);
        }
        integral
    }
}

fn run_diffusion(d: &Diffusion, x0: f64, cfg: &SimConfig, label: &str) -> PathSet {
    let times = cfg.times();
    let full = cfg.storage == Storage::Full;
    let last = cfg.n_steps;
    let rows = par_paths(cfg, |_, normals| {
        let mut row = Row::with_capacity(if full { last + 1 } else { 2 });
        row.integral = d.walk(x0, &times, normals, |k, x, acc| {
            if full || k == 0 || k == last {
                row.push(x, acc);
            }
        });
        row
    });
    PathSet::assemble(cfg, label, rows, d.rate.is_some())
}

pub(crate) fn check_horizon(cfg: &SimConfig, horizon: f64) -> Result<()> {
    if cfg.t_end > horizon {
        return Err(Error::Config(format!(
            "simulation end {} exceeds the model horizon {horizon}",
            cfg.t_end
        )));
    }
    Ok(())
}

/// Euler paths of the asset, `dA = ρ dt + v dB` under ℙ or `dA = r dt + v dB`
/// under ℚ, with the trapezoidal `∫ r(A_s, s) ds` per path.
pub fn simulate_asset(model: &MarketModel, cfg: &SimConfig, measure: Measure) -> Result<PathSet> {
    cfg.validate()?;
    check_horizon(cfg, model.horizon)?;
    let drift = match measure {
        Measure::Physical => &model.rho,
        Measure::RiskNeutral => &model.rate,
    };
    let d = Diffusion {
        drift,
        drift_sign: 1.0,
        vol: &model.vol,
        rate: Some(&model.rate),
    };
    let label = match measure {
        Measure::Physical => "asset/physical",
        Measure::RiskNeutral => "asset/risk-neutral",
    };
    Ok(run_diffusion(&d, model.a0, cfg, label))
}

/// Euler paths of `dZ = −D dt + v(Z,t) dB` started at `x0` at `cfg.t_start`
/// (`dividend = None` gives the driftless diffusion). `v ≡ 0` is accepted for
/// deterministic checks.
pub fn simulate_fk_diffusion(
    vol: &CoefficientFn,
    dividend: Option<&CoefficientFn>,
    x0: f64,
    cfg: &SimConfig,
) -> Result<PathSet> {
    cfg.validate()?;
    let (lo, _) = vol.bounds();
    if !(lo >= 0.0) {
        return Err(Error::Config("volatility must be nonnegative".into()));
    }
    let zero = CoefficientFn::default();
    let d = Diffusion {
        drift: dividend.unwrap_or(&zero),
        drift_sign: -1.0,
        vol,
        rate: None,
    };
    Ok(run_diffusion(&d, x0, cfg, "feynman-kac"))
}

/// Per-step coefficients of the short-rate recursion
/// `r_{k+1} = decay_k r_k + shift_k + sd_k ξ` (exact) or the Euler form.
enum RateStepper {
    Exact(Vec<(f64, f64, f64)>),
    Euler,
}

impl RateStepper {
    fn new(p: &HullWhiteParams, cfg: &SimConfig, times: &[f64]) -> Result<Self> {
        if cfg.scheme == Scheme::Euler || !p.is_piecewise_constant() {
            return Ok(RateStepper::Euler);
        }
        if p.b.bounds().0 <= 0.0 || p.v.bounds().0 <= 0.0 {
            return Err(Error::Config(
                "the exact Hull-White scheme needs b > 0 and v > 0".into(),
            ));
        }
        let steps = times
            .windows(2)
            .map(|w| p.transition(w[0], w[1]))
            .collect::<Result<Vec<_>>>()?;
        Ok(RateStepper::Exact(steps))
    }

    #[inline]
    fn step(&self, p: &HullWhiteParams, k: usize, t: f64, dt: f64, r: f64, z: f64) -> f64 {
        match self {
            RateStepper::Exact(s) => {
                let (decay, shift, sd) = s[k];
                decay * r + shift + sd * z
            }
            RateStepper::Euler => {
                let (a, b, v) = (p.a.value(0.0, t), p.b.value(0.0, t), p.v.value(0.0, t));
                r + (a - b * r) * dt + v * dt.sqrt() * z
            }
        }
    }
}

/// Short-rate paths of `dr = (a − b r) dt + v dB` started from `p.r0` at
/// `cfg.t_start`, with the trapezoidal `∫ r ds` per path. The exact Gaussian
/// transition is used when requested and the parameters are piecewise
/// constant; otherwise Euler.
pub fn simulate_hw_rate(p: &HullWhiteParams, cfg: &SimConfig) -> Result<PathSet> {
    cfg.validate()?;
    let times = cfg.times();
    let stepper = RateStepper::new(p, cfg, &times)?;
    let full = cfg.storage == Storage::Full;
    let rows = par_paths(cfg, |_, normals| hw_walk(p, &stepper, &times, normals, full).0);
    Ok(PathSet::assemble(cfg, "hull-white", rows, true))
}

/// One Hull–White path and its terminal rate.
fn hw_walk(p: &HullWhiteParams, stepper: &RateStepper, times: &[f64], normals: &mut Normals, full: bool) -> (Row, f64) {
    let n = times.len() - 1;
    let mut r = p.r0;
    let mut row = Row::with_capacity(if full { n + 1 } else { 2 });
    row.push(r, 0.0);
    for k in 0..n {
        let dt = times[k + 1] - times[k];
        let next = stepper.step(p, k, times[k], dt, r, normals.next());
        row.integral += 0.5 * (r + next) * dt;
        r = next;
        if full || k + 1 == n {
            row.push(r, row.integral);
        }
    }
    (row, r)
}

/// `(r_T, ∫ r ds)` for every path, without storing trajectories.
pub(crate) fn hw_terminal_pairs(p: &HullWhiteParams, cfg: &SimConfig) -> Result<Vec<(f64, f64)>> {
    cfg.validate()?;
    let times = cfg.times();
    let stepper = RateStepper::new(p, cfg, &times)?;
    Ok(par_paths(cfg, |_, normals| {
        let (row, r) = hw_walk(p, &stepper, &times, normals, false);
        (r, row.integral)
    }))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::analytic::hw_moments;
    use crate::numerics::stats::mean_stderr;

    fn cfg(n_paths: usize, n_steps: usize, t_end: f64) -> SimConfig {
        SimConfig::new(11, n_paths, n_steps, 0.0, t_end).unwrap()
    }

    #[test]
    fn config_is_validated() {
        assert!(SimConfig::new(1, 0, 10, 0.0, 1.0).is_err());
        assert!(SimConfig::new(1, 10, 0, 0.0, 1.0).is_err());
        assert!(SimConfig::new(1, 10, 10, 1.0, 1.0).is_err());
        let c = cfg(1, 4, 1.0);
        assert_eq!(c.times(), vec![0.0, 0.25, 0.5, 0.75, 1.0]);
    }

    #[test]
    fn degenerate_asset_paths_are_deterministic() {
        let flat = MarketModel::degenerate(
            CoefficientFn::constant(0.0),
            CoefficientFn::constant(0.0),
            CoefficientFn::constant(0.0),
            None,
            100.0,
            1.0,
        )
        .unwrap();
        let ps = simulate_asset(&flat, &cfg(5, 10, 1.0), Measure::Physical).unwrap();
        assert!((0..5).all(|i| ps.path(i).iter().all(|&x| x == 100.0)));
        let drift = MarketModel::degenerate(
            CoefficientFn::constant(2.0),
            CoefficientFn::constant(0.0),
            CoefficientFn::constant(0.0),
            None,
            100.0,
            1.0,
        )
        .unwrap();
        let ps = simulate_asset(&drift, &cfg(5, 10, 1.0), Measure::Physical).unwrap();
        assert!(ps.terminals().iter().all(|&x| (x - 102.0).abs() < 1e-12));
        assert_eq!(ps.path(0)[0], 100.0);
        assert_eq!(ps.times.first(), Some(&0.0));
        assert_eq!(ps.times.last(), Some(&1.0));
    }

    #[test]
    fn risk_neutral_mean_matches() {
        let m = MarketModel::constant(100.0, 3.0, 2.0, 10.0).unwrap();
        let c = cfg(100_000, 20, 1.0).with_storage(Storage::Terminal);
        let ps = simulate_asset(&m, &c, Measure::RiskNeutral).unwrap();
        let (mean, _) = mean_stderr(&ps.terminals());
        assert!((mean - 102.0).abs() < 3.0 * 10.0 / (1e5f64).sqrt());
        let integrals = ps.integrals.as_ref().unwrap();
        assert!(integrals.iter().all(|&i| (i - 2.0).abs() < 1e-12));
    }

    #[test]
    fn fk_diffusion_examples() {
        let zero = CoefficientFn::constant(0.0);
        let ps = simulate_fk_diffusion(&zero, None, 3.0, &cfg(4, 8, 1.0)).unwrap();
        assert!(ps.terminals().iter().all(|&x| x == 3.0));

        let ps = simulate_fk_diffusion(&CoefficientFn::constant(10.0), None, 0.0, &cfg(100_000, 10, 1.0)).unwrap();
        let z = ps.terminals();
        let m = z.iter().sum::<f64>() / z.len() as f64;
        let var = z.iter().map(|x| (x - m) * (x - m)).sum::<f64>() / (z.len() - 1) as f64;
        assert!((var / 100.0 - 1.0).abs() < 0.05);

        let d = CoefficientFn::constant(1.0);
        let ps = simulate_fk_diffusion(&zero, Some(&d), 5.0, &cfg(3, 50, 2.0)).unwrap();
        assert!(ps.terminals().iter().all(|&x| (x - 3.0).abs() < 1e-12));
    }

    #[test]
    fn hw_deterministic_examples() {
        let flat = HullWhiteParams::constant(0.0, 0.0, 0.0, 0.03).unwrap();
        let ps = simulate_hw_rate(&flat, &cfg(3, 10, 1.0)).unwrap();
        assert!(ps.path(1).iter().all(|&r| r == 0.03));
        let ramp = HullWhiteParams::constant(1.0, 0.0, 0.0, 0.0).unwrap();
        let ps = simulate_hw_rate(&ramp, &cfg(3, 10, 2.0)).unwrap();
        assert!(ps.terminals().iter().all(|&r| (r - 2.0).abs() < 1e-12));
        let exact = cfg(3, 10, 2.0).with_scheme(Scheme::ExactWhereAvailable);
        assert!(matches!(simulate_hw_rate(&ramp, &exact), Err(Error::Config(_))));
    }

    #[test]
    fn hw_rate_moments_match_closed_form() {
        let p = HullWhiteParams::constant(0.1, 0.5, 0.02, 0.03).unwrap();
        let m = hw_moments(&p, 1.0).unwrap();
        // Euler carries an O(Δt) bias in the mean, hence the finer grid.
        for (scheme, steps) in [(Scheme::Euler, 1000), (Scheme::ExactWhereAvailable, 50)] {
            let c = cfg(50_000, steps, 1.0)
                .with_scheme(scheme)
                .with_storage(Storage::Terminal);
            let r = simulate_hw_rate(&p, &c).unwrap().terminals();
            let (mean, se) = mean_stderr(&r);
            assert!((mean - m.mu_r).abs() < 3.0 * se, "{scheme:?}: {mean} vs {}", m.mu_r);
            let sq: Vec<f64> = r.iter().map(|x| (x - mean) * (x - mean)).collect();
            let (var, se_var) = mean_stderr(&sq);
            assert!(
                (var - m.var_r).abs() < 3.0 * se_var + 1e-8,
                "{scheme:?}: {var} vs {}",
                m.var_r
            );
        }
    }

    #[test]
    fn paths_do_not_depend_on_thread_count() {
        let m = MarketModel::constant(100.0, 3.0, 2.0, 10.0).unwrap();
        let c = cfg(500, 16, 1.0);
        let run = |threads| {
            rayon::ThreadPoolBuilder::new()
                .num_threads(threads)
                .build()
                .unwrap()
                .install(|| simulate_asset(&m, &c, Measure::RiskNeutral).unwrap())
        };
        assert_eq!(run(1), run(3));
    }

    #[test]
    fn substeps_share_the_fine_brownian_path() {
        let v = CoefficientFn::constant(1.0);
        let fine = simulate_fk_diffusion(&v, None, 0.0, &cfg(4, 8, 1.0)).unwrap();
        let coarse_cfg = cfg(4, 4, 1.0).with_substeps(2).unwrap();
        let coarse = simulate_fk_diffusion(&v, None, 0.0, &coarse_cfg).unwrap();
        for i in 0..4 {
            for k in 0..=4 {
                assert!((coarse.path(i)[k] - fine.path(i)[2 * k]).abs() < 1e-12);
            }
        }
    }

    #[test]
    fn csv_has_declared_header() {
        let m = MarketModel::constant(100.0, 3.0, 2.0, 10.0).unwrap();
        let ps = simulate_asset(&m, &cfg(2, 2, 1.0), Measure::RiskNeutral).unwrap();
        let mut buf = Vec::new();
        ps.write_csv(&mut buf).unwrap();
        let text = String::from_utf8(buf).unwrap();
        assert!(text.starts_with("path,time,value,integral\n"));
        assert_eq!(text.lines().count(), 1 + 2 * 3);
    }

    #[test]
    fn fmt9_rounds_to_nine_significant_digits() {
        assert_eq!(fmt9(3.068946358632), "3.06894636");
        assert_eq!(fmt9(0.94), "0.94");
        assert_eq!(fmt9(-1.0), "-1");
        assert_eq!(fmt9(1.23456789012e-7), "0.000000123456789");
    }
}
