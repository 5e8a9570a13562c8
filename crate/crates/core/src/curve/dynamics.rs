//! One-factor curve dynamics: HJM forward rates under ℚ and the BHJM
//! no-interest loan rates.
//!
//! Every curve is evolved with one Euler step per simulation interval, and
//! one Brownian increment is shared by all maturities. Simulation times must
//! be nodes of the maturity grid, so each row starts on its diagonal.

use serde::{Deserialize, Serialize};

use super::{bonds_from_loan_rates, check_uniform, node_index, BondSurface, RateKind, RateSurface};
use crate::error::{Error, Result};
use crate::model::CoefficientFn;
use crate::simulate::{par_paths, Measure, SimConfig};

/// Volatility of the loan rates, evaluated as `σ(t, T)`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum LoanVol {
    /// `σ_ℓ(t,T) = s · ℓ(t,T)`.
    Proportional(f64),
    /// `σ_ℓ(t,T)` given as a coefficient with `x = T`.
    General(CoefficientFn),
}

impl LoanVol {
    #[inline]
    fn at(&self, t: f64, big_t: f64, ell: f64) -> f64 {
        match self {
            LoanVol::Proportional(s) => s * ell,
            LoanVol::General(c) => c.value(big_t, t),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub struct BhjmSpec {
    pub sigma: LoanVol,
    /// Uniform maturity grid; the initial curve is `ℓ(maturities[0], ·)`.
    pub maturities: Vec<f64>,
    pub initial_curve: Vec<f64>,
    /// Market price of loan-rate risk; needed for physical-measure paths.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub theta: Option<f64>,
}

impl BhjmSpec {
    pub fn new(sigma: LoanVol, maturities: Vec<f64>, initial_curve: Vec<f64>, theta: Option<f64>) -> Result<Self> {
        let s = BhjmSpec {
            sigma,
            maturities,
            initial_curve,
            theta,
        };
        s.validate()?;
        Ok(s)
    }

    pub fn validate(&self) -> Result<()> {
        check_uniform(&self.maturities)?;
        if self.initial_curve.len() != self.maturities.len() {
            return Err(Error::Config(format!(
                "initial curve has {} values for {} maturities",
                self.initial_curve.len(),
                self.maturities.len()
            )));
        }
        if self.initial_curve.iter().any(|x| !x.is_finite()) {
            return Err(Error::Config("initial curve must be finite".into()));
        }
        let ok = match &self.sigma {
            LoanVol::Proportional(s) => *s >= 0.0 && s.is_finite(),
            LoanVol::General(c) => c.bounds().0 >= 0.0,
        };
        if !ok {
            return Err(Error::Config("loan-rate volatility must be nonnegative".into()));
        }
        Ok(())
    }
}

/// One simulated BHJM path.
#[derive(Debug, Clone, PartialEq)]
pub struct BhjmPath {
    pub loan_rates: RateSurface,
    pub bonds: BondSurface,
    /// `r_t = ℓ(t, t)` at every simulation time.
    pub short_rate: Vec<f64>,
    /// Brownian increment of every step.
    pub brownian: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct BhjmPaths {
    pub times: Vec<f64>,
    pub paths: Vec<BhjmPath>,
}

fn grid_rows(maturities: &[f64], times: &[f64], cfg: &SimConfig) -> Result<Vec<usize>> {
    if (times[0] - maturities[0]).abs() > 1e-9 {
        return Err(Error::Config(format!(
            "simulation must start at the first maturity {}, got {}",
            maturities[0], cfg.t_start
        )));
    }
    times.iter().map(|&t| node_index(maturities, t)).collect()
}

/// Evolves `ℓ(t,T)` for `T ≥ t`: `dℓ = σ_ℓ dB` under ℚ, `dℓ = σ_ℓ (θ dt + dB)`
/// under ℙ. Bonds are `1 − ∫ ℓ` per row and `r_t = ℓ(t,t)`.
pub fn bhjm_simulate(spec: &BhjmSpec, cfg: &SimConfig, measure: Measure) -> Result<BhjmPaths> {
    spec.validate()?;
    cfg.validate()?;
    let theta = match measure {
        Measure::RiskNeutral => 0.0,
        Measure::Physical => spec
            .theta
            .ok_or_else(|| Error::Config("physical-measure paths need theta".into()))?,
    };
    let times = cfg.times();
    let first = grid_rows(&spec.maturities, &times, cfg)?;
    let ms = &spec.maturities;
    let paths = par_paths(cfg, |_, normals| -> Result<BhjmPath> {
        let mut rows = Vec::with_capacity(times.len());
        let mut brownian = Vec::with_capacity(times.len() - 1);
        rows.push(spec.initial_curve[first[0]..].to_vec());
        for k in 0..times.len() - 1 {
            let dt = times[k + 1] - times[k];
            let db = dt.sqrt() * normals.next();
            brownian.push(db);
            let prev = &rows[k];
            let skip = first[k + 1] - first[k];
            let next: Vec<f64> = prev[skip..]
                .iter()
                .enumerate()
                .map(|(m, &ell)| {
                    let big_t = ms[first[k + 1] + m];
                    ell + spec.sigma.at(times[k], big_t, ell) * (theta * dt + db)
                })
                .collect();
            rows.push(next);
        }
        let short_rate = rows.iter().map(|r| r[0]).collect();
        let loan_rates = RateSurface::from_rows(&times, ms, RateKind::Loan, rows)?;
        let bonds = bonds_from_loan_rates(&loan_rates)?;
        Ok(BhjmPath {
            loan_rates,
            bonds,
            short_rate,
            brownian,
        })
    });
    Ok(BhjmPaths {
        times,
        paths: paths.into_iter().collect::<Result<Vec<_>>>()?,
    })
}

/// Evolves `f(t,T)` under ℚ with `df = σ_f σ_f* dt + σ_f dB`,
/// `σ_f*(t,T) = ∫_t^T σ_f(t,u) du` (trapezoid on the grid). `sigma_f` is
/// evaluated as `σ_f(t, T)` with `x = T`.
pub fn hjm_simulate_forward(
    sigma_f: &CoefficientFn,
    maturities: &[f64],
    f0: &[f64],
    cfg: &SimConfig,
) -> Result<Vec<RateSurface>> {
    check_uniform(maturities)?;
    cfg.validate()?;
    if f0.len() != maturities.len() || f0.iter().any(|x| !x.is_finite()) {
        return Err(Error::Config(
            "initial forward curve must be finite, one value per maturity".into(),
        ));
    }
    if sigma_f.bounds().0 < 0.0 {
        return Err(Error::Config("forward-rate volatility must be nonnegative".into()));
    }
    let times = cfg.times();
    let first = grid_rows(maturities, &times, cfg)?;
    let h = maturities[1] - maturities[0];
    // Drift and volatility per step depend only on the grid.
    let coeffs: Vec<Vec<(f64, f64)>> = (0..times.len() - 1)
        .map(|k| {
            let t = times[k];
            let sig: Vec<f64> = maturities[first[k]..].iter().map(|&u| sigma_f.value(u, t)).collect();
            let mut star = 0.0;
            let mut out = Vec::with_capacity(sig.len());
            for (m, &s) in sig.iter().enumerate() {
                if m > 0 {
                    star += 0.5 * (sig[m - 1] + s) * h;
                }
                out.push((s * star, s));
            }
            out
        })
        .collect();
    let paths = par_paths(cfg, |_, normals| -> Result<RateSurface> {
        let mut rows = Vec::with_capacity(times.len());
        rows.push(f0[first[0]..].to_vec());
        for k in 0..times.len() - 1 {
            let dt = times[k + 1] - times[k];
            let db = dt.sqrt() * normals.next();
            let skip = first[k + 1] - first[k];
            let next: Vec<f64> = rows[k][skip..]
                .iter()
                .zip(&coeffs[k][skip..])
                .map(|(&f, &(drift, s))| f + drift * dt + s * db)
                .collect();
            rows.push(next);
        }
        RateSurface::from_rows(&times, maturities, RateKind::Forward, rows)
    });
    paths.into_iter().collect()
}
