//! Closed-form down-and-out / down-and-in prices for admissible moving barriers.
//!
//! For a barrier `h(t)` with drift constant `C` the down-and-out call is the
//! vanilla call minus its image under the reflection `S -> h(t)^2 / S`:
//!
//! ```text
//! c_do(S, t) = V(S, t; K) - (S / h(t))^(2C+1) V(h(t)^2 / S, t; K)
//! ```
//!
//! The subtracted term on its own is the down-and-in call. Puts come from the
//! knockout forward (terminal payoff `S - K` unless knocked out):
//!
//! ```text
//! p_do = c_do - F_do
//! F_do = e^-qbar S N(e1) - K e^-rbar N(e1')
//!        - (S/h)^(2C+1) (e^-qbar (h^2/S) N(e2) - K e^-rbar N(e2'))
//! ```
//!
//! where the `e` arguments are the `d` arguments with `K` replaced by `h(T)`
//! inside the logarithms only; the cash legs keep the strike `K`.

use serde::Serialize;

use crate::contract::{BarrierContract, BarrierStyle, MovingBarrier, OptionSide};
use crate::curves::{CurveSet, Window};
use crate::error::{PricingError, Result};
use crate::vanilla::{self, log_norm_cdf, norm_cdf};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Status {
    Live,
    /// Spot at or below the barrier for an out-style claim.
    KnockedOut,
    /// Spot at or below the barrier for an in-style claim; worth the vanilla.
    KnockedIn,
}

/// A price together with every intermediate of the image decomposition.
///
/// Out styles satisfy `price = vanilla_term - image_term`, in styles
/// `price = image_term`. `d*` fields are `NaN` (JSON `null`) at expiry.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct PriceBreakdown {
    pub status: Status,
    pub price: f64,
    pub vanilla_term: f64,
    pub image_term: f64,
    pub d1: f64,
    pub d1_prime: f64,
    pub d2: f64,
    pub d2_prime: f64,
    #[serde(rename = "C")]
    pub c: f64,
    pub power_factor: f64,
    pub barrier_level: f64,
    pub rbar: f64,
    pub qbar: f64,
    pub sigma2bar: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct DValues {
    pub d1: f64,
    pub d1_prime: f64,
    pub d2: f64,
    pub d2_prime: f64,
}

impl DValues {
    fn undefined() -> Self {
        Self {
            d1: f64::NAN,
            d1_prime: f64::NAN,
            d2: f64::NAN,
            d2_prime: f64::NAN,
        }
    }
}

/// Neumaier-compensated sum.
fn compensated_sum(terms: &[f64]) -> f64 {
    let mut sum = 0.0f64;
    let mut comp = 0.0f64;
    for &x in terms {
        let t = sum + x;
        if sum.abs() >= x.abs() {
            comp += (sum - t) + x;
        } else {
            comp += (x - t) + sum;
        }
        sum = t;
    }
    sum + comp
}

/// Everything shared by the pricers at one `(S, t)`.
struct Point<'a> {
    contract: &'a BarrierContract,
    spot: f64,
    level: f64,
    window: Window,
    at_expiry: bool,
}

impl<'a> Point<'a> {
    fn new(spot: f64, t: f64, contract: &'a BarrierContract) -> Result<Self> {
        if !(spot.is_finite() && spot > 0.0) {
            return Err(PricingError::Domain(format!(
                "spot must be positive, got {spot}"
            )));
        }
        if !contract.in_closed_form_regime() {
            return Err(PricingError::Regime {
                strike: contract.strike,
                terminal_barrier: contract.barrier.terminal_level(),
            });
        }
        let barrier = &contract.barrier;
        let level = barrier.level(t)?;
        let window = contract.curves().window(t, contract.expiry)?;
        Ok(Self {
            contract,
            spot,
            level,
            window,
            at_expiry: t == contract.expiry,
        })
    }

    fn barrier(&self) -> &MovingBarrier {
        &self.contract.barrier
    }

    fn hit(&self) -> bool {
        self.spot <= self.level
    }

    fn log_power(&self) -> f64 {
        (2.0 * self.barrier().c() + 1.0) * (self.spot / self.level).ln()
    }

    /// The four d arguments with `log_strike` in the logarithms.
    fn d_values(&self, log_strike: f64) -> DValues {
        if self.at_expiry {
            return DValues::undefined();
        }
        let w = &self.window;
        let sd = w.sigma2bar.sqrt();
        let carry = w.rbar - w.qbar + 0.5 * w.sigma2bar;
        let ln_spot = self.spot.ln();
        let d1 = (ln_spot - log_strike + carry) / sd;
        let ln_image_ratio = (self.level / self.spot).ln() + self.level.ln() - log_strike;
        let d2 = (ln_image_ratio + carry) / sd;
        DValues {
            d1,
            d1_prime: d1 - sd,
            d2,
            d2_prime: d2 - sd,
        }
    }

    /// Direct and image legs of a knocked-out claim whose payoff is
    /// `S_T - K` on `{S_T > strike_in_logs}`.
    fn legs(&self, log_strike: f64) -> Legs {
        let w = &self.window;
        let k = self.contract.strike;
        let d = self.d_values(log_strike);
        let log_power = self.log_power();
        let direct_asset = (-w.qbar).exp() * self.spot * norm_cdf(d.d1);
        let direct_cash = k * (-w.rbar).exp() * norm_cdf(d.d1_prime);
        // image legs assembled in log space: the power factor can be huge
        // exactly where the normal probabilities underflow
        let ln_image_spot = self.level.ln() + (self.level / self.spot).ln();
        let image_asset = (log_power - w.qbar + ln_image_spot + log_norm_cdf(d.d2)).exp();
        let image_cash = (log_power - w.rbar + k.ln() + log_norm_cdf(d.d2_prime)).exp();
        Legs {
            d,
            direct: [direct_asset, direct_cash],
            image: [image_asset, image_cash],
        }
    }

    fn breakdown(
        &self,
        status: Status,
        price: f64,
        vanilla_term: f64,
        image_term: f64,
        d: DValues,
    ) -> PriceBreakdown {
        PriceBreakdown {
            status,
            price,
            vanilla_term,
            image_term,
            d1: d.d1,
            d1_prime: d.d1_prime,
            d2: d.d2,
            d2_prime: d.d2_prime,
            c: self.barrier().c(),
            power_factor: self.log_power().exp(),
            barrier_level: self.level,
            rbar: self.window.rbar,
            qbar: self.window.qbar,
            sigma2bar: self.window.sigma2bar,
        }
    }

    fn vanilla(&self, side: OptionSide) -> f64 {
        vanilla::black(side, self.spot, self.contract.strike, &self.window).price
    }

    fn log_strike(&self) -> f64 {
        self.contract.strike.ln()
    }

    fn log_terminal(&self) -> f64 {
        self.barrier().terminal_level().ln()
    }

    /// Knockout claim paying `S_T - K` above `exp(log_strike)`.
    fn knockout(&self, log_strike: f64, intrinsic: f64) -> (PriceBreakdown, f64) {
        if self.hit() {
            let d = if self.at_expiry {
                DValues::undefined()
            } else {
                self.d_values(log_strike)
            };
            let v = if self.at_expiry {
                intrinsic
            } else {
                self.legs(log_strike).vanilla()
            };
            return (self.breakdown(Status::KnockedOut, 0.0, v, v, d), 0.0);
        }
        if self.at_expiry {
            return (
                self.breakdown(
                    Status::Live,
                    intrinsic,
                    intrinsic,
                    0.0,
                    DValues::undefined(),
                ),
                intrinsic.abs(),
            );
        }
        let legs = self.legs(log_strike);
        let b = self.breakdown(
            Status::Live,
            legs.price(),
            legs.vanilla(),
            legs.image(),
            legs.d,
        );
        (b, legs.scale())
    }

    fn call_out(&self) -> (PriceBreakdown, f64) {
        let intrinsic = (self.spot - self.contract.strike).max(0.0);
        self.knockout(self.log_strike(), intrinsic)
    }

    fn forward_out(&self) -> (PriceBreakdown, f64) {
        let intrinsic = self.spot - self.contract.strike;
        self.knockout(self.log_terminal(), intrinsic)
    }
}

struct Legs {
    d: DValues,
    direct: [f64; 2],
    image: [f64; 2],
}

impl Legs {
    fn vanilla(&self) -> f64 {
        self.direct[0] - self.direct[1]
    }

    fn image(&self) -> f64 {
        self.image[0] - self.image[1]
    }

    fn price(&self) -> f64 {
        compensated_sum(&[
            self.direct[0],
            -self.direct[1],
            -self.image[0],
            self.image[1],
        ])
    }

    fn scale(&self) -> f64 {
        self.direct.iter().chain(&self.image).map(|x| x.abs()).sum()
    }
}

/// d1, d1', d2, d2' of the down-and-out call at `(S, t)`.
pub fn d_values(spot: f64, t: f64, contract: &BarrierContract) -> Result<DValues> {
    let p = Point::new(spot, t, contract)?;
    if p.window.sigma2bar <= 0.0 {
        return Err(PricingError::Domain(
            "d arguments are undefined with zero remaining variance".into(),
        ));
    }
    Ok(p.d_values(p.log_strike()))
}

/// The image term `(S/h)^(2C+1) V(h^2/S)` evaluated without any knock-in
/// branching, for checking its boundary and PDE properties directly.
pub fn image_solution(spot: f64, t: f64, contract: &BarrierContract) -> Result<f64> {
    let p = Point::new(spot, t, contract)?;
    if p.at_expiry {
        let reflected = p.level * (p.level / spot);
        return Ok(p.log_power().exp() * (reflected - contract.strike).max(0.0));
    }
    Ok(p.legs(p.log_strike()).image())
}

pub fn down_and_out_call(spot: f64, t: f64, contract: &BarrierContract) -> Result<PriceBreakdown> {
    Ok(Point::new(spot, t, contract)?.call_out().0)
}

pub fn down_and_in_call(spot: f64, t: f64, contract: &BarrierContract) -> Result<PriceBreakdown> {
    let p = Point::new(spot, t, contract)?;
    let vanilla = p.vanilla(OptionSide::Call);
    let out = p.call_out().0;
    let mut b = out;
    if p.hit() {
        b.status = Status::KnockedIn;
        b.price = vanilla;
        b.image_term = vanilla;
    } else {
        b.price = out.image_term;
    }
    Ok(b)
}

/// Value of the knockout forward, i.e. `c_do - p_do`.
pub fn forward_barrier_value(
    spot: f64,
    t: f64,
    contract: &BarrierContract,
) -> Result<PriceBreakdown> {
    Ok(Point::new(spot, t, contract)?.forward_out().0)
}

pub fn down_and_out_put(spot: f64, t: f64, contract: &BarrierContract) -> Result<PriceBreakdown> {
    let p = Point::new(spot, t, contract)?;
    let (call, call_scale) = p.call_out();
    let (fwd, fwd_scale) = p.forward_out();
    let put_vanilla = p.vanilla(OptionSide::Put);
    let price = call.price - fwd.price;
    let tol = 1e-10 * (call_scale + fwd_scale).max(1e-300);
    if price < -tol {
        return Err(PricingError::Invariant(format!(
            "down-and-out put came out negative ({price:e}) at S = {spot}, t = {t}"
        )));
    }
    let mut b = call;
    b.price = price;
    b.vanilla_term = put_vanilla;
    b.image_term = put_vanilla - price;
    Ok(b)
}

pub fn down_and_in_put(spot: f64, t: f64, contract: &BarrierContract) -> Result<PriceBreakdown> {
    let out = down_and_out_put(spot, t, contract)?;
    let mut b = out;
    if out.status == Status::KnockedOut {
        b.status = Status::KnockedIn;
        b.price = out.vanilla_term;
        b.image_term = out.vanilla_term;
    } else {
        b.price = out.vanilla_term - out.price;
        b.image_term = b.price;
    }
    Ok(b)
}

/// Dispatch on the contract's side and style.
pub fn price(spot: f64, t: f64, contract: &BarrierContract) -> Result<PriceBreakdown> {
    match (contract.side, contract.style) {
        (OptionSide::Call, BarrierStyle::DownAndOut) => down_and_out_call(spot, t, contract),
        (OptionSide::Call, BarrierStyle::DownAndIn) => down_and_in_call(spot, t, contract),
        (OptionSide::Put, BarrierStyle::DownAndOut) => down_and_out_put(spot, t, contract),
        (OptionSide::Put, BarrierStyle::DownAndIn) => down_and_in_put(spot, t, contract),
    }
}

/// Inputs of the constant-parameter parity check with barrier
/// `h(t) = S_B exp(-a (T - t))`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct ConstantParityInputs {
    pub spot: f64,
    pub t: f64,
    pub barrier_terminal: f64,
    pub barrier_rate: f64,
    pub strike: f64,
    pub expiry: f64,
    pub r: f64,
    pub q: f64,
    pub sigma: f64,
}

/// Both sides of the constant-parameter parity identity, written directly in
/// the scalar parameters and evaluated against the general pricers.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct ConstantParityGap {
    /// `left - right` with `N(d1)` multiplying the discounted spot.
    pub corrected: f64,
    /// `left - right` with `N(d1')` on the discounted spot instead.
    pub as_printed: f64,
    /// `1 - 2 (r - q - a) / sigma^2`, which must equal `2C + 1`.
    pub exponent: f64,
    pub c: f64,
}

impl ConstantParityInputs {
    /// `C` that makes `S_B exp(-a (T - t))` admissible: `r - q + C sigma^2 = a`.
    pub fn implied_c(&self) -> f64 {
        (self.barrier_rate - self.r + self.q) / (self.sigma * self.sigma)
    }

    pub fn contract(&self) -> Result<BarrierContract> {
        let curves =
            std::sync::Arc::new(CurveSet::constant(self.r, self.q, self.sigma, self.expiry)?);
        let barrier = MovingBarrier::from_terminal(
            self.barrier_terminal,
            self.implied_c(),
            curves,
            self.expiry,
        )?;
        BarrierContract::new(
            self.strike,
            OptionSide::Call,
            BarrierStyle::DownAndOut,
            barrier,
        )
    }

    pub fn gap(&self) -> Result<ConstantParityGap> {
        let contract = self.contract()?;
        let (s, sb, a, k) = (
            self.spot,
            self.barrier_terminal,
            self.barrier_rate,
            self.strike,
        );
        let (r, q, sigma) = (self.r, self.q, self.sigma);
        let tau = self.expiry - self.t;
        if !(tau > 0.0) {
            return Err(PricingError::Domain("parity check needs t < T".into()));
        }
        if s <= sb * (-a * tau).exp() {
            return Err(PricingError::Domain(format!(
                "spot {s} is at or below the barrier; the parity identity covers live states"
            )));
        }
        let call = down_and_out_call(s, self.t, &contract)?.price;
        let put = down_and_out_put(s, self.t, &contract)?.price;

        let sd = sigma * tau.sqrt();
        let d1 = ((s / sb).ln() + (r - q + 0.5 * sigma * sigma) * tau) / sd;
        let d1p = d1 - sd;
        let d2 = ((sb / s).ln() + (r - q - 2.0 * a + 0.5 * sigma * sigma) * tau) / sd;
        let d2p = d2 - sd;
        let exponent = 1.0 - 2.0 / (sigma * sigma) * (r - q - a);

        let prefactor = (exponent * a * tau).exp() * (s / sb).powf(exponent);
        let image = (-(q + 2.0 * a) * tau).exp() * sb * sb / s * norm_cdf(d2)
            - k * (-r * tau).exp() * norm_cdf(d2p);
        let right = call + k * (-r * tau).exp() * norm_cdf(d1p) + prefactor * image;
        let spot_leg = (-q * tau).exp() * s;
        Ok(ConstantParityGap {
            corrected: put + spot_leg * norm_cdf(d1) - right,
            as_printed: put + spot_leg * norm_cdf(d1p) - right,
            exponent,
            c: self.implied_c(),
        })
    }
}

/// `left - right` of the corrected constant-parameter parity identity.
#[allow(clippy::too_many_arguments)]
pub fn constant_case_parity_gap(
    spot: f64,
    t: f64,
    barrier_terminal: f64,
    barrier_rate: f64,
    strike: f64,
    expiry: f64,
    r: f64,
    q: f64,
    sigma: f64,
) -> Result<f64> {
    let inputs = ConstantParityInputs {
        spot,
        t,
        barrier_terminal,
        barrier_rate,
        strike,
        expiry,
        r,
        q,
        sigma,
    };
    Ok(inputs.gap()?.corrected)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::curves::TermStructure;
    use std::sync::Arc;

    fn contract(k: f64, h_t: f64, c: f64, curves: CurveSet) -> BarrierContract {
        let b = MovingBarrier::from_terminal(h_t, c, Arc::new(curves), 1.0).unwrap();
        BarrierContract::new(k, OptionSide::Call, BarrierStyle::DownAndOut, b).unwrap()
    }

    fn flat_case() -> BarrierContract {
        contract(
            100.0,
            90.0,
            -1.25,
            CurveSet::constant(0.05, 0.0, 0.2, 1.0).unwrap(),
        )
    }

    fn td_curves() -> CurveSet {
        CurveSet::new(
            TermStructure::new(vec![0.0, 0.5, 1.0], vec![0.02, 0.06]).unwrap(),
            TermStructure::new(vec![0.0, 0.5, 1.0], vec![0.0, 0.02]).unwrap(),
            TermStructure::new(vec![0.0, 0.5, 1.0], vec![0.15, 0.30]).unwrap(),
        )
        .unwrap()
    }

    #[test]
    fn d_values_coincide_at_the_barrier() {
        let c = contract(100.0, 90.0, 0.7, td_curves());
        let h = c.barrier.level(0.2).unwrap();
        let d = d_values(h, 0.2, &c).unwrap();
        assert!((d.d1 - d.d2).abs() < 1e-14);
        let sd = c.curves().integral_sigma2(0.2, 1.0).unwrap().sqrt();
        assert_eq!(d.d1_prime, d.d1 - sd);
        assert_eq!(d.d2_prime, d.d2 - sd);
    }

    #[test]
    fn d_values_all_logs_vanish() {
        // r = q and a constant barrier at the strike: d1 = d2 = sqrt(v)/2
        let c = contract(
            100.0,
            100.0,
            0.0,
            CurveSet::constant(0.03, 0.03, 0.25, 1.0).unwrap(),
        );
        let d = d_values(100.0, 0.0, &c).unwrap();
        assert!((d.d1 - 0.125).abs() < 1e-15);
        assert!((d.d2 - 0.125).abs() < 1e-15);
        assert!(d_values(100.0, 1.0, &c).is_err());
    }

    #[test]
    fn zero_at_the_barrier() {
        for c in [flat_case(), contract(105.0, 90.0, 1.0, td_curves())] {
            for t in [0.0, 0.3, 0.75] {
                let h = c.barrier.level(t).unwrap();
                let b = down_and_out_call(h, t, &c).unwrap();
                assert_eq!(b.price, 0.0);
                assert_eq!(b.status, Status::KnockedOut);
                assert_eq!(forward_barrier_value(h, t, &c).unwrap().price, 0.0);
                assert_eq!(down_and_out_put(h, t, &c).unwrap().price, 0.0);
                let below = down_and_out_call(0.9 * h, t, &c).unwrap();
                assert_eq!(below.price, 0.0);
            }
        }
    }

    #[test]
    fn knocked_in_pays_vanilla() {
        let c = contract(100.0, 90.0, 0.5, td_curves());
        let h = c.barrier.level(0.1).unwrap();
        let vc = vanilla::vanilla_call(0.95 * h, 0.1, 100.0, 1.0, c.curves())
            .unwrap()
            .price;
        let vp = vanilla::vanilla_put(0.95 * h, 0.1, 100.0, 1.0, c.curves())
            .unwrap()
            .price;
        let di = down_and_in_call(0.95 * h, 0.1, &c).unwrap();
        assert_eq!(di.status, Status::KnockedIn);
        assert_eq!(di.price, vc);
        assert_eq!(down_and_in_put(0.95 * h, 0.1, &c).unwrap().price, vp);
    }

    #[test]
    fn regime_error_below_terminal_barrier() {
        let c = contract(
            80.0,
            90.0,
            0.0,
            CurveSet::constant(0.05, 0.0, 0.2, 1.0).unwrap(),
        );
        for f in [
            down_and_out_call,
            down_and_in_call,
            down_and_out_put,
            down_and_in_put,
        ] {
            assert!(matches!(
                f(100.0, 0.0, &c),
                Err(PricingError::Regime { .. })
            ));
        }
    }

    #[test]
    fn vanishing_barrier_recovers_vanillas() {
        for c_const in [-1.0, 0.0, 2.0] {
            let c = contract(100.0, 1e-6, c_const, td_curves());
            let vc = vanilla::vanilla_call(100.0, 0.0, 100.0, 1.0, c.curves())
                .unwrap()
                .price;
            let vp = vanilla::vanilla_put(100.0, 0.0, 100.0, 1.0, c.curves())
                .unwrap()
                .price;
            let w = c.curves().window(0.0, 1.0).unwrap();
            let fwd = (-w.qbar).exp() * 100.0 - 100.0 * (-w.rbar).exp();
            assert!((down_and_out_call(100.0, 0.0, &c).unwrap().price - vc).abs() <= 1e-10);
            assert!((down_and_out_put(100.0, 0.0, &c).unwrap().price - vp).abs() <= 1e-8);
            assert!((forward_barrier_value(100.0, 0.0, &c).unwrap().price - fwd).abs() <= 1e-10);
            assert!(down_and_in_put(100.0, 0.0, &c).unwrap().price.abs() <= 1e-8);
        }
    }

    #[test]
    fn expiry_behaviour() {
        let c = contract(100.0, 90.0, 0.3, td_curves());
        assert_eq!(down_and_out_call(120.0, 1.0, &c).unwrap().price, 20.0);
        assert_eq!(down_and_in_call(120.0, 1.0, &c).unwrap().price, 0.0);
        assert_eq!(forward_barrier_value(95.0, 1.0, &c).unwrap().price, -5.0);
        assert_eq!(down_and_out_put(95.0, 1.0, &c).unwrap().price, 5.0);
        assert_eq!(image_solution(95.0, 1.0, &c).unwrap(), 0.0);
        assert!(down_and_out_call(120.0, 1.01, &c).is_err());
    }

    #[test]
    fn breakdown_is_consistent() {
        let c = contract(100.0, 85.0, -0.5, td_curves());
        let b = down_and_out_call(100.0, 0.25, &c).unwrap();
        assert!((b.price - (b.vanilla_term - b.image_term)).abs() < 1e-13);
        let v = vanilla::vanilla_call(100.0, 0.25, 100.0, 1.0, c.curves()).unwrap();
        assert!((b.vanilla_term - v.price).abs() < 1e-13);
        assert_eq!(b.d1, v.d1);
        let h = c.barrier.level(0.25).unwrap();
        assert!((b.power_factor - (100.0 / h).powf(2.0 * -0.5 + 1.0)).abs() < 1e-14);
        let di = down_and_in_call(100.0, 0.25, &c).unwrap();
        assert_eq!(di.price, b.image_term);
        let json = serde_json::to_value(b).unwrap();
        for key in [
            "price",
            "vanilla_term",
            "image_term",
            "d1",
            "d1_prime",
            "d2",
            "d2_prime",
            "C",
            "power_factor",
            "rbar",
            "qbar",
            "sigma2bar",
            "status",
        ] {
            assert!(json.get(key).is_some(), "{key}");
        }
    }

    #[test]
    fn extreme_c_stays_finite() {
        let curves = CurveSet::constant(0.05, 0.0, 0.2, 1.0).unwrap();
        for c_const in [-500.0, 500.0] {
            let c = contract(100.0, 90.0, c_const, curves.clone());
            let h = c.barrier.level(0.0).unwrap();
            let s = h * 1.3;
            let p = down_and_out_call(s, 0.0, &c).unwrap().price;
            let v = vanilla::vanilla_call(s, 0.0, 100.0, 1.0, &curves)
                .unwrap()
                .price;
            assert!(
                p.is_finite() && p >= -1e-12 && p <= v + 1e-12,
                "C = {c_const}: {p}"
            );
            assert!(down_and_out_put(s, 0.0, &c).unwrap().price.is_finite());
        }
    }

    #[test]
    fn constant_case_exponent_matches_general_power() {
        let inputs = ConstantParityInputs {
            spot: 100.0,
            t: 0.0,
            barrier_terminal: 90.0,
            barrier_rate: 0.03,
            strike: 100.0,
            expiry: 1.0,
            r: 0.05,
            q: 0.01,
            sigma: 0.2,
        };
        let g = inputs.gap().unwrap();
        assert!((g.exponent - 0.5).abs() < 1e-12);
        assert!((2.0 * g.c + 1.0 - g.exponent).abs() < 1e-12);
        assert!(g.corrected.abs() <= 1e-12, "{}", g.corrected);
        assert!(g.as_printed.abs() > 1e-3);
        // barrier really is S_B exp(-a (T - t))
        let c = inputs.contract().unwrap();
        assert!((c.barrier.level(0.0).unwrap() - 90.0 * (-0.03f64).exp()).abs() < 1e-12);
    }

    #[test]
    fn constant_barrier_reduces_to_general_formula() {
        // a = 0 is a constant barrier with C = -(r - q) / sigma^2
        let inputs = ConstantParityInputs {
            spot: 100.0,
            t: 0.0,
            barrier_terminal: 90.0,
            barrier_rate: 0.0,
            strike: 100.0,
            expiry: 1.0,
            r: 0.05,
            q: 0.0,
            sigma: 0.2,
        };
        assert!((inputs.implied_c() + 1.25).abs() < 1e-15);
        let gap =
            constant_case_parity_gap(100.0, 0.0, 90.0, 0.0, 100.0, 1.0, 0.05, 0.0, 0.2).unwrap();
        assert!(gap.abs() <= 1e-12);
    }

    #[test]
    fn compensated_sum_recovers_small_differences() {
        let x = compensated_sum(&[1e16, 1.0, -1e16, 1.0]);
        assert_eq!(x, 2.0);
    }
}
