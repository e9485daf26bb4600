//! European calls and puts with deterministic time-dependent parameters.
//!
//! With `rbar`, `qbar` and total variance `v` integrated over `[t, T]`,
//!
//! ```text
//! d1  = (ln(S/K) + rbar - qbar + v/2) / sqrt(v)
//! d1' = d1 - sqrt(v)
//! C   = e^-qbar S N(d1) - K e^-rbar N(d1')
//! ```

use std::f64::consts::FRAC_1_SQRT_2;

use serde::Serialize;

use crate::contract::OptionSide;
use crate::curves::{CurveSet, Window};
use crate::error::{PricingError, Result};

/// Standard normal CDF through `erfc`, accurate in both tails.
pub fn norm_cdf(x: f64) -> f64 {
    0.5 * libm::erfc(-x * FRAC_1_SQRT_2)
}

/// `ln N(x)`, finite far into the lower tail where `N(x)` itself underflows.
pub fn log_norm_cdf(x: f64) -> f64 {
    if x > -35.0 {
        return norm_cdf(x).ln();
    }
    // Asymptotic expansion of Mills' ratio; truncation error < 1e-16 at x = -35.
    let z = 1.0 / (x * x);
    let series =
        1.0 + z * (-1.0 + z * (3.0 + z * (-15.0 + z * (105.0 + z * (-945.0 + z * 10395.0)))));
    -0.5 * x * x - (-x).ln() - 0.5 * (2.0 * std::f64::consts::PI).ln() + series.ln()
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct VanillaQuote {
    pub price: f64,
    pub d1: f64,
    pub d1_prime: f64,
    pub discount_r: f64,
    pub discount_q: f64,
}

/// Black-Scholes value from integrated parameters. Zero variance falls back
/// to the discounted intrinsic value of the forward.
pub fn black(side: OptionSide, spot: f64, strike: f64, w: &Window) -> VanillaQuote {
    let discount_r = (-w.rbar).exp();
    let discount_q = (-w.qbar).exp();
    if w.sigma2bar <= 0.0 {
        let fwd = discount_q * spot - discount_r * strike;
        let price = match side {
            OptionSide::Call => fwd.max(0.0),
            OptionSide::Put => (-fwd).max(0.0),
        };
        let d = match fwd.partial_cmp(&0.0) {
            Some(std::cmp::Ordering::Greater) => f64::INFINITY,
            Some(std::cmp::Ordering::Less) => f64::NEG_INFINITY,
            _ => 0.0,
        };
        return VanillaQuote {
            price,
            d1: d,
            d1_prime: d,
            discount_r,
            discount_q,
        };
    }
    let sd = w.sigma2bar.sqrt();
    let d1 = ((spot / strike).ln() + w.rbar - w.qbar + 0.5 * w.sigma2bar) / sd;
    let d1_prime = d1 - sd;
    let price = match side {
        OptionSide::Call => {
            discount_q * spot * norm_cdf(d1) - strike * discount_r * norm_cdf(d1_prime)
        }
        OptionSide::Put => {
            strike * discount_r * norm_cdf(-d1_prime) - discount_q * spot * norm_cdf(-d1)
        }
    };
    VanillaQuote {
        price,
        d1,
        d1_prime,
        discount_r,
        discount_q,
    }
}

pub fn vanilla(
    side: OptionSide,
    spot: f64,
    t: f64,
    strike: f64,
    expiry: f64,
    curves: &CurveSet,
) -> Result<VanillaQuote> {
    if !(spot.is_finite() && spot > 0.0) {
        return Err(PricingError::Domain(format!(
            "spot must be positive, got {spot}"
        )));
    }
    if !(strike.is_finite() && strike > 0.0) {
        return Err(PricingError::Domain(format!(
            "strike must be positive, got {strike}"
        )));
    }
    if t >= expiry {
        // at or past expiry: intrinsic value
        let w = Window {
            rbar: 0.0,
            qbar: 0.0,
            sigma2bar: 0.0,
        };
        return Ok(black(side, spot, strike, &w));
    }
    Ok(black(side, spot, strike, &curves.window(t, expiry)?))
}

pub fn vanilla_call(
    spot: f64,
    t: f64,
    strike: f64,
    expiry: f64,
    curves: &CurveSet,
) -> Result<VanillaQuote> {
    vanilla(OptionSide::Call, spot, t, strike, expiry, curves)
}

pub fn vanilla_put(
    spot: f64,
    t: f64,
    strike: f64,
    expiry: f64,
    curves: &CurveSet,
) -> Result<VanillaQuote> {
    vanilla(OptionSide::Put, spot, t, strike, expiry, curves)
}
