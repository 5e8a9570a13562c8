//! Closed-form results: the Bachelier call and put, the perpetual-derivative
//! exponent, forward and futures prices, and the Hull–White formulas.

pub mod hull_white;

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

pub use hull_white::{
    hw_b_star, hw_bond_call, hw_bond_price, hw_moments, hw_noarb_residual, HullWhiteParams, HwMoments,
};

use crate::error::{Error, Result};
use crate::model::{MarketModel, Payoff};
use crate::numerics::normal::{cdf, pdf};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Method {
    Closed,
    Pde,
    Mc,
    Quadrature,
}

/// A price with its provenance. `stderr` is present exactly for Monte Carlo.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct PriceResult {
    pub value: f64,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub stderr: Option<f64>,
    pub method: Method,
    pub diagnostics: BTreeMap<String, f64>,
}

impl PriceResult {
    pub fn closed(value: f64) -> Self {
        let mut diagnostics = BTreeMap::new();
        if value < 0.0 {
            diagnostics.insert("negative_price".to_string(), 1.0);
        }
        PriceResult {
            value,
            stderr: None,
            method: Method::Closed,
            diagnostics,
        }
    }
}

fn check_vol(v: f64, tau: f64) -> Result<()> {
    if !(v > 0.0) || !v.is_finite() {
        return Err(Error::Domain(format!("volatility must be positive, got {v}")));
    }
    if !(tau >= 0.0) || !tau.is_finite() {
        return Err(Error::Domain(format!("time to maturity must be >= 0, got {tau}")));
    }
    Ok(())
}

/// Bachelier call `λ₀Φ(λ₀/λ₁) + λ₁φ(λ₀/λ₁) − rτ` with `λ₀ = A − K + rτ`,
/// `λ₁ = v√τ`. The `−rτ` term can make the value negative; it is returned
/// as is.
pub fn bachelier_call(a: f64, k: f64, r: f64, v: f64, tau: f64) -> Result<f64> {
    check_vol(v, tau)?;
    if tau == 0.0 {
        return Ok((a - k).max(0.0));
    }
    let l0 = a - k + r * tau;
    let l1 = v * tau.sqrt();
    let d = l0 / l1;
    Ok(l0 * cdf(d) + l1 * pdf(d) - r * tau)
}

/// Bachelier put from parity: `P = C − (A − K + rτ)`.
pub fn bachelier_put(a: f64, k: f64, r: f64, v: f64, tau: f64) -> Result<f64> {
    check_vol(v, tau)?;
    if tau == 0.0 {
        return Ok((k - a).max(0.0));
    }
    Ok(bachelier_call(a, k, r, v, tau)? - (a - k + r * tau))
}

/// Closed-form price of a call, put or forward in a constant-coefficient model.
pub fn price_closed(model: &MarketModel, payoff: &Payoff, tau: f64) -> Result<PriceResult> {
    let c = model
        .constants()
        .ok_or_else(|| Error::Config("closed-form prices need constant rate and volatility".into()))?;
    if c.dividend != 0.0 {
        return Err(Error::Config("closed-form prices do not cover a dividend rate".into()));
    }
    let (a, r, v) = (model.a0, c.rate, c.vol);
    let value = match payoff {
        Payoff::Call { strike } => bachelier_call(a, *strike, r, v, tau)?,
        Payoff::Put { strike } => bachelier_put(a, *strike, r, v, tau)?,
        // E^Q[A_T − K] − rτ
        Payoff::Forward { strike } => a - strike,
        _ => {
            return Err(Error::Config(
                "closed form is available for call, put and forward payoffs only".into(),
            ))
        }
    };
    Ok(PriceResult::closed(value))
}

/// Exponent of the perpetual derivative `f(x,t) = x² + γ(β₀ + rt)`:
/// `γ = 1 − v²/r`.
pub fn perpetual_gamma(v: f64, r: f64) -> Result<f64> {
    if r == 0.0 {
        return Err(Error::Singularity("perpetual gamma is undefined for r = 0".into()));
    }
    Ok(1.0 - v * v / r)
}

/// Residual `γr + v² − r` of the perpetual derivative in the pricing PDE.
pub fn perpetual_residual(v: f64, r: f64) -> Result<f64> {
    let gamma = perpetual_gamma(v, r)?;
    Ok(gamma * r + v * v - r)
}

/// Forward (delivery) price `F(t,T) = A_t − V_t`.
pub fn forward_price(a_t: f64, v_t: f64) -> f64 {
    a_t - v_t
}

/// Value of a forward contract at `s` and its bond decomposition.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct ForwardValue {
    /// `A_s − F`
    pub value: f64,
    /// `A_s − F·E_s^Q[∫_s^T r du] − F·ℬ(s,T)`, equal to `value` when the
    /// bond is consistent with the rate integral.
    pub decomposition: f64,
    /// `A_s − E_s^Q[∫_s^T r du] − F·ℬ(s,T)`, the form with the factor `F`
    /// dropped from the rate term; it agrees with `value` only when `F = 1`
    /// or the rate integral vanishes.
    pub dropped_factor_form: f64,
}

/// `V(s,T) = A_s − F = A_s − F·(ℬ(s,T) + E_s^Q[∫_s^T r du])`.
///
/// Fails with a consistency error unless `ℬ(s,T) = 1 − E_s^Q[∫_s^T r du]`.
pub fn forward_value_at(s: f64, a_s: f64, forward: f64, bond_s_t: f64, eq_r_integral: f64) -> Result<ForwardValue> {
    if !(s >= 0.0) {
        return Err(Error::Domain(format!("valuation time must be >= 0, got {s}")));
    }
    let tol = 1e-10 * (1.0 + bond_s_t.abs() + eq_r_integral.abs());
    if (bond_s_t + eq_r_integral - 1.0).abs() > tol {
        return Err(Error::Consistency(format!(
            "bond price {bond_s_t} is inconsistent with the expected rate integral {eq_r_integral}: \
             their sum must be 1"
        )));
    }
    Ok(ForwardValue {
        value: a_s - forward,
        decomposition: a_s - forward * eq_r_integral - forward * bond_s_t,
        dropped_factor_form: a_s - eq_r_integral - forward * bond_s_t,
    })
}

/// Futures price `Φ_t = A_t + ∫_t^T r du`.
pub fn futures_price(a_t: f64, r_integral_t_t: f64) -> f64 {
    a_t + r_integral_t_t
}

/// Futures delivery price `Φ_{t_i} − A_{t_i}`.
pub fn futures_delivery_price(a_ti: f64, eq_a_t: f64) -> f64 {
    eq_a_t - a_ti
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum MarketState {
    Contango,
    NormalBackwardation,
    Neutral,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Spread {
    pub spread: f64,
    pub state: MarketState,
}

/// The spread `Φ₀ − (F(0,T) + V(0,T)) = ∫₀ᵀ r du`, and the market state:
/// contango when `Φ₀ > E^P A_T`, normal backwardation when `Φ₀ < E^P A_T`.
pub fn forward_futures_spread(r_integral_0_t: f64, ep_a_t: f64, phi0: f64) -> Spread {
    let state = if phi0 > ep_a_t {
        MarketState::Contango
    } else if phi0 < ep_a_t {
        MarketState::NormalBackwardation
    } else {
        MarketState::Neutral
    };
    Spread {
        spread: r_integral_0_t,
        state,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    #[test]
    fn call_examples() {
        // 10/√(2π) and 2Φ(0.2) + 10φ(0.2) − 2 (30-digit mpmath)
        assert_relative_eq!(
            bachelier_call(100.0, 100.0, 0.0, 10.0, 1.0).unwrap(),
            3.989422804014327,
            epsilon = 1e-13
        );
        assert_eq!(bachelier_call(105.0, 100.0, 0.0, 10.0, 0.0).unwrap(), 5.0);
        assert_relative_eq!(
            bachelier_call(100.0, 100.0, 2.0, 10.0, 1.0).unwrap(),
            3.06894635863276,
            epsilon = 1e-13
        );
        assert!(matches!(
            bachelier_call(100.0, 100.0, 0.0, 0.0, 1.0),
            Err(Error::Domain(_))
        ));
    }

    #[test]
    fn put_examples() {
        assert_relative_eq!(
            bachelier_put(100.0, 100.0, 0.0, 10.0, 1.0).unwrap(),
            3.989422804014327,
            epsilon = 1e-13
        );
        assert_eq!(bachelier_put(95.0, 100.0, 0.0, 10.0, 0.0).unwrap(), 5.0);
        assert_relative_eq!(
            bachelier_put(100.0, 100.0, 2.0, 10.0, 1.0).unwrap(),
            1.06894635863276,
            epsilon = 1e-13
        );
    }

    #[test]
    fn deep_out_of_the_money_call_is_negative() {
        let v = bachelier_call(50.0, 100.0, 2.0, 1.0, 1.0).unwrap();
        assert!(v < 0.0 && (v + 2.0).abs() < 1e-12);
        let model = MarketModel::constant(50.0, 3.0, 2.0, 1.0).unwrap();
        let res = price_closed(&model, &Payoff::call(100.0), 1.0).unwrap();
        assert_eq!(res.diagnostics.get("negative_price"), Some(&1.0));
    }

    #[test]
    fn perpetual_examples() {
        assert_eq!(perpetual_gamma(10.0, 2.0).unwrap(), -49.0);
        assert_eq!(perpetual_gamma(1.0, 1.0).unwrap(), 0.0);
        assert_eq!(perpetual_gamma(2.0, 2.0).unwrap(), -1.0);
        assert!(matches!(perpetual_gamma(1.0, 0.0), Err(Error::Singularity(_))));
        assert_eq!(perpetual_residual(10.0, 2.0).unwrap(), 0.0);
    }

    #[test]
    fn forward_and_futures_examples() {
        assert_eq!(forward_price(100.0, 3.0), 97.0);
        assert_eq!(forward_price(100.0, 0.0), 100.0);
        assert_eq!(forward_price(-50.0, 2.0), -52.0);
        assert_eq!(futures_price(100.0, 2.0), 102.0);
        assert_eq!(futures_price(100.0, 0.0), 100.0);
        assert_relative_eq!(futures_price(100.0, -0.0001), 99.9999, epsilon = 1e-12);
        assert_eq!(futures_delivery_price(100.0, 102.0), 2.0);
        assert_eq!(futures_delivery_price(102.0, 102.0), 0.0);
    }

    #[test]
    fn forward_value_examples() {
        let zero = forward_value_at(0.5, 100.0, 0.0, 0.98, 0.02).unwrap();
        assert_eq!(zero.value, 100.0);
        assert_eq!(zero.decomposition, 100.0);
        // r = 0.02 per year over one year: ℬ = 0.98.
        let fv = forward_value_at(0.0, 100.0, 97.0, 0.98, 0.02).unwrap();
        assert_relative_eq!(fv.value, 3.0, epsilon = 1e-12);
        assert_relative_eq!(fv.decomposition, 3.0, epsilon = 1e-12);
        assert_relative_eq!(fv.dropped_factor_form, 100.0 - 0.02 - 97.0 * 0.98, epsilon = 1e-12);
        let bad = forward_value_at(0.0, 100.0, 97.0, 0.5, 0.02);
        assert!(matches!(bad, Err(Error::Consistency(_))));
        let at_the_money = forward_value_at(1.0, 100.0, 100.0, 1.0, 0.0).unwrap();
        assert_eq!(at_the_money.value, 0.0);
    }

    #[test]
    fn spread_classification() {
        let s = forward_futures_spread(2.0, 103.0, 102.0);
        assert_eq!((s.spread, s.state), (2.0, MarketState::NormalBackwardation));
        assert_eq!(forward_futures_spread(2.0, 101.0, 102.0).state, MarketState::Contango);
        assert_eq!(forward_futures_spread(2.0, 102.0, 102.0).state, MarketState::Neutral);
    }
}
