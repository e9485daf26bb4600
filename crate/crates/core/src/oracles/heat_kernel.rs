//! Pricing by direct quadrature of the heat-kernel representation.
//!
//! In barrier-relative coordinates `x = ln(S / h(t))`, total variance
//! `tau = int_t^T sigma^2` and with `u = U exp(a x + b)`, `a = C + 1/2`,
//! `b = -rbar - a^2 tau / 2`, the knockout value solves the heat equation on
//! the half line `x > 0` with `U(0, tau) = 0`. Reflecting the kernel gives
//!
//! ```text
//! U(x, tau) = int_0^inf (G(x - xi) - G(x + xi)) e^(-a xi) g(xi) dxi
//! ```
//!
//! with `G` the Gaussian of variance `tau` and `g(xi)` the payoff at
//! `S_T = h(T) e^xi`. Nothing here uses the closed-form algebra.

use serde::Serialize;

use super::quadrature::{integrate, QuadConfig};
use super::Claim;
use crate::contract::{BarrierContract, BarrierStyle, MovingBarrier};
use crate::error::{PricingError, Result};

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct HeatCoords {
    /// `ln(S / h(t))`
    pub x: f64,
    /// Total variance to expiry.
    pub tau: f64,
    /// Exponent slope `a = C + 1/2`, constant in time for admissible barriers.
    pub a_t: f64,
    /// Exponent intercept `b(t)`; zero at expiry.
    pub b_t: f64,
}

fn coords_unchecked(spot: f64, t: f64, barrier: &MovingBarrier) -> Result<HeatCoords> {
    let level = barrier.level(t)?;
    let w = barrier.curves().window(t, barrier.expiry())?;
    let a = barrier.c() + 0.5;
    Ok(HeatCoords {
        x: (spot / level).ln(),
        tau: w.sigma2bar,
        a_t: a,
        b_t: -w.rbar - 0.5 * a * a * w.sigma2bar,
    })
}

pub fn to_heat_coords(spot: f64, t: f64, contract: &BarrierContract) -> Result<HeatCoords> {
    let coords = coords_unchecked(spot, t, &contract.barrier)?;
    if !(coords.x >= 0.0) {
        return Err(PricingError::Domain(format!(
            "spot {spot} lies below the barrier at t = {t}"
        )));
    }
    Ok(coords)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct HeatKernelValue {
    /// Knockout value: direct minus image.
    pub price: f64,
    /// Contribution of the direct kernel `G(x - xi)` alone.
    pub direct: f64,
    /// Contribution of the reflected kernel `G(x + xi)`.
    pub image: f64,
    /// Quadrature error estimate of `price`.
    pub error: f64,
    pub evaluations: usize,
}

const TRUNCATION_SDS: f64 = 12.0;

fn config() -> QuadConfig {
    QuadConfig {
        abs_tol: 1e-11,
        rel_tol: 1e-14,
        max_intervals: 4000,
    }
}

struct Kernel {
    coords: HeatCoords,
    ln_terminal: f64,
    strike: f64,
    claim: Claim,
    norm: f64,
}

impl Kernel {
    fn new(coords: HeatCoords, barrier: &MovingBarrier, strike: f64, claim: Claim) -> Self {
        Self {
            coords,
            ln_terminal: barrier.terminal_level().ln(),
            strike,
            claim,
            norm: 1.0 / (2.0 * std::f64::consts::PI * coords.tau).sqrt(),
        }
    }

    /// `exp(a x + b) G(x - xi) e^(-a xi) g(xi)`, with exponents merged.
    fn direct(&self, xi: f64) -> f64 {
        let HeatCoords { x, tau, a_t, b_t } = self.coords;
        let z = x - xi;
        let e = a_t * z + b_t - z * z / (2.0 * tau);
        let asset = (e + xi + self.ln_terminal).exp();
        let cash = self.strike * e.exp();
        let weighted = match self.claim {
            Claim::Call | Claim::Forward => asset - cash,
            Claim::Put => cash - asset,
        };
        self.norm * weighted
    }

    /// `G(x + xi) = G(x - xi) exp(-2 x xi / tau)`.
    fn reflection(&self, xi: f64) -> f64 {
        (-2.0 * self.coords.x * xi / self.coords.tau).exp()
    }

    fn knockout(&self, xi: f64) -> f64 {
        let survive = -(-2.0 * self.coords.x * xi / self.coords.tau).exp_m1();
        self.direct(xi) * survive
    }

    fn log_kink(&self) -> f64 {
        (self.strike.ln()) - self.ln_terminal
    }

    /// Payoff support in `xi`, on the whole line.
    fn support(&self) -> (f64, f64) {
        let k = self.log_kink();
        match self.claim {
            Claim::Call => (k, f64::INFINITY),
            Claim::Put => (f64::NEG_INFINITY, k),
            Claim::Forward => (f64::NEG_INFINITY, f64::INFINITY),
        }
    }

    /// Window outside of which the integrand is below ~e^-72 of its peak.
    fn envelope(&self) -> (f64, f64, [f64; 2]) {
        let HeatCoords { x, tau, a_t, .. } = self.coords;
        let sd = tau.sqrt();
        let centers = [x + (1.0 - a_t) * tau, x - a_t * tau];
        let lo = centers[0].min(centers[1]) - TRUNCATION_SDS * sd;
        let hi = centers[0].max(centers[1]) + TRUNCATION_SDS * sd;
        (lo, hi, centers)
    }

    fn limits(&self, half_line: bool) -> Option<(f64, f64, Vec<f64>)> {
        let (s_lo, s_hi) = self.support();
        let (e_lo, e_hi, centers) = self.envelope();
        let floor = if half_line { 0.0 } else { f64::NEG_INFINITY };
        let lo = s_lo.max(floor).max(e_lo);
        let hi = s_hi.min(e_hi);
        (lo < hi).then(|| (lo, hi, centers.to_vec()))
    }
}

/// Knockout value at `(S, t)` of `claim` on strike `K`, by quadrature.
pub fn heat_kernel_value(
    spot: f64,
    t: f64,
    barrier: &MovingBarrier,
    strike: f64,
    claim: Claim,
) -> Result<HeatKernelValue> {
    let coords = coords_unchecked(spot, t, barrier)?;
    if !(coords.x >= 0.0) {
        return Err(PricingError::Domain(format!(
            "spot {spot} lies below the barrier at t = {t}"
        )));
    }
    if coords.tau <= 0.0 {
        let payoff = if coords.x > 0.0 {
            claim.payoff(spot, strike)
        } else {
            0.0
        };
        return Ok(HeatKernelValue {
            price: payoff,
            direct: payoff,
            image: 0.0,
            error: 0.0,
            evaluations: 0,
        });
    }
    let kernel = Kernel::new(coords, barrier, strike, claim);
    let Some((lo, hi, breaks)) = kernel.limits(true) else {
        return Ok(HeatKernelValue {
            price: 0.0,
            direct: 0.0,
            image: 0.0,
            error: 0.0,
            evaluations: 0,
        });
    };
    let cfg = config();
    let price = integrate(|xi| kernel.knockout(xi), lo, hi, &breaks, cfg)?;
    let direct = integrate(|xi| kernel.direct(xi), lo, hi, &breaks, cfg)?;
    let image = integrate(
        |xi| kernel.direct(xi) * kernel.reflection(xi),
        lo,
        hi,
        &breaks,
        cfg,
    )?;
    Ok(HeatKernelValue {
        price: price.value,
        direct: direct.value,
        image: image.value,
        error: price.error,
        evaluations: price.evaluations + direct.evaluations + image.evaluations,
    })
}

/// No-barrier value of `claim` through the same transform: the direct kernel
/// integrated over the payoff's full support on the real line.
pub fn heat_kernel_vanilla(
    spot: f64,
    t: f64,
    barrier: &MovingBarrier,
    strike: f64,
    claim: Claim,
) -> Result<f64> {
    let coords = coords_unchecked(spot, t, barrier)?;
    if coords.tau <= 0.0 {
        return Ok(claim.payoff(spot, strike));
    }
    let kernel = Kernel::new(coords, barrier, strike, claim);
    match kernel.limits(false) {
        Some((lo, hi, breaks)) => {
            Ok(integrate(|xi| kernel.direct(xi), lo, hi, &breaks, config())?.value)
        }
        None => Ok(0.0),
    }
}

/// Price of `contract` by heat-kernel quadrature. Works for any strike,
/// including `K < h(T)` where the closed form does not apply.
pub fn heat_kernel_price(spot: f64, t: f64, contract: &BarrierContract) -> Result<f64> {
    let barrier = &contract.barrier;
    let claim = Claim::of(contract);
    let level = barrier.level(t)?;
    let out = if spot <= level {
        0.0
    } else {
        heat_kernel_value(spot, t, barrier, contract.strike, claim)?.price
    };
    match contract.style {
        BarrierStyle::DownAndOut => Ok(out),
        BarrierStyle::DownAndIn => {
            Ok(heat_kernel_vanilla(spot, t, barrier, contract.strike, claim)? - out)
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::contract::OptionSide;
    use crate::curves::{CurveSet, TermStructure};
    use crate::vanilla;
    use std::sync::Arc;

    fn flat_contract(k: f64, h_t: f64, c: f64) -> BarrierContract {
        let curves = Arc::new(CurveSet::constant(0.05, 0.0, 0.2, 1.0).unwrap());
        let b = MovingBarrier::from_terminal(h_t, c, curves, 1.0).unwrap();
        BarrierContract::new(k, OptionSide::Call, BarrierStyle::DownAndOut, b).unwrap()
    }

    #[test]
    fn coordinates() {
        let c = flat_contract(100.0, 90.0, -1.25);
        let hc = to_heat_coords(90.0, 0.0, &c).unwrap();
        assert!(hc.x.abs() < 1e-15);
        assert!((hc.tau - 0.04).abs() < 1e-15);
        assert_eq!(hc.a_t, -0.75);
        assert!((hc.b_t + 0.06125).abs() < 1e-15);
        let end = to_heat_coords(95.0, 1.0, &c).unwrap();
        assert_eq!(end.tau, 0.0);
        assert_eq!(end.b_t, 0.0);
        assert!(to_heat_coords(80.0, 0.0, &c).is_err());
    }

    #[test]
    fn zero_on_the_barrier() {
        let c = flat_contract(100.0, 90.0, 0.4);
        let h = c.barrier.level(0.3).unwrap();
        let v = heat_kernel_value(h, 0.3, &c.barrier, 100.0, Claim::Call).unwrap();
        assert_eq!(v.price, 0.0);
        assert!((v.direct - v.image).abs() < 1e-10);
    }

    #[test]
    fn direct_kernel_alone_is_the_vanilla() {
        let curves = Arc::new(
            CurveSet::new(
                TermStructure::new(vec![0.0, 0.5, 1.0], vec![0.02, 0.06]).unwrap(),
                TermStructure::new(vec![0.0, 0.5, 1.0], vec![0.0, 0.02]).unwrap(),
                TermStructure::new(vec![0.0, 0.5, 1.0], vec![0.15, 0.3]).unwrap(),
            )
            .unwrap(),
        );
        let b = MovingBarrier::from_terminal(90.0, 0.6, curves.clone(), 1.0).unwrap();
        for (s, k) in [(100.0, 100.0), (120.0, 95.0), (97.0, 130.0)] {
            let v = heat_kernel_value(s, 0.1, &b, k, Claim::Call).unwrap();
            let bs = vanilla::vanilla_call(s, 0.1, k, 1.0, &curves)
                .unwrap()
                .price;
            assert!((v.direct - bs).abs() < 1e-9, "{} vs {}", v.direct, bs);
            assert!((v.price - (v.direct - v.image)).abs() < 1e-9);
            // with K below h(T) only the full-line integral is the vanilla
            let full = heat_kernel_vanilla(s, 0.1, &b, 80.0, Claim::Call).unwrap();
            let bs80 = vanilla::vanilla_call(s, 0.1, 80.0, 1.0, &curves)
                .unwrap()
                .price;
            assert!((full - bs80).abs() < 1e-9);
            let put = heat_kernel_vanilla(s, 0.1, &b, k, Claim::Put).unwrap();
            let bsp = vanilla::vanilla_put(s, 0.1, k, 1.0, &curves).unwrap().price;
            assert!((put - bsp).abs() < 1e-9);
        }
    }

    #[test]
    fn put_with_strike_below_terminal_barrier_is_worthless() {
        let c = flat_contract(80.0, 90.0, 0.0).with_kind(OptionSide::Put, BarrierStyle::DownAndOut);
        assert_eq!(heat_kernel_price(100.0, 0.0, &c).unwrap(), 0.0);
    }

    #[test]
    fn in_style_below_barrier_is_vanilla() {
        let c =
            flat_contract(100.0, 90.0, -1.25).with_kind(OptionSide::Call, BarrierStyle::DownAndIn);
        let v = heat_kernel_price(85.0, 0.0, &c).unwrap();
        let bs = vanilla::vanilla_call(85.0, 0.0, 100.0, 1.0, c.curves())
            .unwrap()
            .price;
        assert!((v - bs).abs() < 1e-9);
    }
}
