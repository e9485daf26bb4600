//! Crank-Nicolson solver for the knockout PDE in barrier-relative coordinates.
//!
//! With `x = ln(S / h(t))` the barrier sits at `x = 0` for all `t` and
//!
//! ```text
//! u_t + sigma^2/2 u_xx + (r - q - sigma^2/2 - h'/h) u_x - r u = 0,  0 < x < x_max
//! u(x, T) = payoff(h(T) e^x),   u(0, t) = 0
//! ```
//!
//! The far boundary carries the discounted forward (calls, forwards) or zero
//! (puts). Time steps are aligned to the curve breakpoints, the terminal data
//! is cell-averaged and the first two steps are replaced by four implicit
//! Euler half steps, which keeps the scheme second order despite the kink.

use serde::Serialize;

use super::Claim;
use crate::contract::{BarrierContract, BarrierStyle, MovingBarrier};
use crate::error::{PricingError, Result};
use crate::vanilla;

/// Far-field distance in standard deviations of log-price.
const FAR_FIELD_SDS: f64 = 8.0;

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct PdeGrid {
    pub x_max: f64,
    pub n_space: usize,
    pub n_time: usize,
}

impl PdeGrid {
    pub fn new(x_max: f64, n_space: usize, n_time: usize) -> Result<Self> {
        if n_space < 4 || n_time < 4 {
            return Err(PricingError::Domain(format!(
                "grid needs at least 4 space and 4 time steps, got {n_space} x {n_time}"
            )));
        }
        if !(x_max.is_finite() && x_max > 0.0) {
            return Err(PricingError::Domain(format!(
                "x_max must be positive, got {x_max}"
            )));
        }
        Ok(Self {
            x_max,
            n_space,
            n_time,
        })
    }

    /// A grid reaching `FAR_FIELD_SDS` standard deviations beyond both the
    /// spot and the strike, stretched so that the spot falls on a node.
    pub fn for_point(
        spot: f64,
        t: f64,
        contract: &BarrierContract,
        n_space: usize,
        n_time: usize,
    ) -> Result<Self> {
        let barrier = &contract.barrier;
        let x_spot = (spot / barrier.level(t)?).ln();
        let x_kink = (contract.strike / barrier.terminal_level()).ln();
        let tau = contract.curves().integral_sigma2(t, contract.expiry)?;
        let drift = (-(barrier.c() + 0.5) * tau).max(0.0);
        let span = x_spot.max(x_kink).max(0.0) + FAR_FIELD_SDS * tau.sqrt() + drift;
        let j = (n_space as f64 * x_spot / span).floor();
        let x_max = if j >= 1.0 && x_spot > 0.0 {
            n_space as f64 * x_spot / j
        } else {
            span
        };
        Self::new(x_max, n_space, n_time)
    }

    pub fn dx(&self) -> f64 {
        self.x_max / self.n_space as f64
    }

    /// Same domain, `factor` times as many steps in each direction.
    pub fn refined(&self, factor: usize) -> Self {
        Self {
            x_max: self.x_max,
            n_space: self.n_space * factor,
            n_time: self.n_time * factor,
        }
    }
}

/// Solution on the space grid at the requested time.
#[derive(Debug, Clone, PartialEq)]
pub struct PdeSolution {
    pub x: Vec<f64>,
    pub u: Vec<f64>,
}

impl PdeSolution {
    /// Four-point Lagrange interpolation at `x`.
    pub fn interpolate(&self, x: f64) -> f64 {
        let n = self.x.len() - 1;
        let dx = self.x[1] - self.x[0];
        let pos = (x - self.x[0]) / dx;
        let i = (pos.floor() as isize).clamp(1, n as isize - 2) as usize;
        let start = i - 1;
        let mut acc = 0.0;
        for j in 0..4 {
            let xj = self.x[start + j];
            let mut w = 1.0;
            for m in 0..4 {
                if m != j {
                    let xm = self.x[start + m];
                    w *= (x - xm) / (xj - xm);
                }
            }
            acc += w * self.u[start + j];
        }
        acc
    }
}

/// Exact mean of the payoff over `[lo, hi]` in `x`, with `S_T = h_T e^x`.
fn cell_average(claim: Claim, lo: f64, hi: f64, h_t: f64, strike: f64) -> f64 {
    let kink = (strike / h_t).ln();
    // antiderivative of h_T e^x - K
    let prim = |x: f64| h_t * x.exp() - strike * x;
    let integral = match claim {
        Claim::Forward => prim(hi) - prim(lo),
        Claim::Call => {
            let a = lo.max(kink);
            if a < hi {
                prim(hi) - prim(a)
            } else {
                0.0
            }
        }
        Claim::Put => {
            let b = hi.min(kink);
            if lo < b {
                -(prim(b) - prim(lo))
            } else {
                0.0
            }
        }
    };
    integral / (hi - lo)
}

fn far_field(
    claim: Claim,
    barrier: &MovingBarrier,
    strike: f64,
    x_max: f64,
    t: f64,
) -> Result<f64> {
    match claim {
        Claim::Put => Ok(0.0),
        Claim::Call | Claim::Forward => {
            let w = barrier.curves().window(t, barrier.expiry())?;
            let s = barrier.level(t)? * x_max.exp();
            Ok((-w.qbar).exp() * s - strike * (-w.rbar).exp())
        }
    }
}

/// Solves `(I - theta dt L) u_new = (I + (1 - theta) dt L) u_old` with
/// Dirichlet values `left`, `right` at the new time level.
#[allow(clippy::too_many_arguments)]
fn step(
    u: &mut [f64],
    scratch: &mut Scratch,
    lower: f64,
    diag: f64,
    upper: f64,
    dt: f64,
    theta: f64,
    right: f64,
) {
    let n = u.len() - 1;
    let m = n - 1; // interior unknowns 1..n-1
    let (ex_l, ex_d, ex_u) = (
        (1.0 - theta) * dt * lower,
        1.0 + (1.0 - theta) * dt * diag,
        (1.0 - theta) * dt * upper,
    );
    let (im_l, im_d, im_u) = (
        -theta * dt * lower,
        1.0 - theta * dt * diag,
        -theta * dt * upper,
    );

    let rhs = &mut scratch.rhs;
    for i in 1..n {
        rhs[i - 1] = ex_l * u[i - 1] + ex_d * u[i] + ex_u * u[i + 1];
    }
    // u[0] = 0 at both levels; far boundary moves to the right-hand side
    rhs[m - 1] -= im_u * right;

    // Thomas algorithm with constant bands
    let c = &mut scratch.c;
    let d = rhs;
    c[0] = im_u / im_d;
    d[0] /= im_d;
    for i in 1..m {
        let denom = im_d - im_l * c[i - 1];
        c[i] = im_u / denom;
        d[i] = (d[i] - im_l * d[i - 1]) / denom;
    }
    for i in (0..m - 1).rev() {
        d[i] -= c[i] * d[i + 1];
    }
    u[0] = 0.0;
    u[1..n].copy_from_slice(&d[..m]);
    u[n] = right;
}

struct Scratch {
    rhs: Vec<f64>,
    c: Vec<f64>,
}

/// Knockout value of `claim` on the whole grid at time `t`.
pub fn pde_solve(
    t: f64,
    barrier: &MovingBarrier,
    strike: f64,
    claim: Claim,
    grid: &PdeGrid,
) -> Result<PdeSolution> {
    let expiry = barrier.expiry();
    if !(t < expiry) {
        return Err(PricingError::Domain(format!(
            "need t < T, got t = {t}, T = {expiry}"
        )));
    }
    let curves = barrier.curves();
    let n = grid.n_space;
    let dx = grid.dx();
    let x: Vec<f64> = (0..=n).map(|i| i as f64 * dx).collect();
    let h_t = barrier.terminal_level();

    let mut u: Vec<f64> = x
        .iter()
        .map(|&xi| {
            let lo = (xi - 0.5 * dx).max(0.0);
            let hi = xi + 0.5 * dx;
            cell_average(claim, lo, hi, h_t, strike)
        })
        .collect();
    u[0] = 0.0;
    u[n] = far_field(claim, barrier, strike, grid.x_max, expiry)?;

    let times = curves.step_grid(t, expiry, grid.n_time)?;
    let mut scratch = Scratch {
        rhs: vec![0.0; n - 1],
        c: vec![0.0; n - 1],
    };
    let mut startup = 2;
    for w in times.windows(2).rev() {
        let (t0, t1) = (w[0], w[1]);
        let mid = 0.5 * (t0 + t1);
        let sigma = curves.sigma.value_at(mid)?;
        let r = curves.r.value_at(mid)?;
        let q = curves.q.value_at(mid)?;
        let diffusion = 0.5 * sigma * sigma;
        let drift = r - q - diffusion - barrier.growth_rate(mid)?;
        let lower = diffusion / (dx * dx) - drift / (2.0 * dx);
        let diag = -2.0 * diffusion / (dx * dx) - r;
        let upper = diffusion / (dx * dx) + drift / (2.0 * dx);

        if startup > 0 {
            startup -= 1;
            let half = 0.5 * (t1 - t0);
            let t_half = t0 + half;
            let right = far_field(claim, barrier, strike, grid.x_max, t_half)?;
            step(&mut u, &mut scratch, lower, diag, upper, half, 1.0, right);
            let right = far_field(claim, barrier, strike, grid.x_max, t0)?;
            step(&mut u, &mut scratch, lower, diag, upper, half, 1.0, right);
        } else {
            let right = far_field(claim, barrier, strike, grid.x_max, t0)?;
            step(
                &mut u,
                &mut scratch,
                lower,
                diag,
                upper,
                t1 - t0,
                0.5,
                right,
            );
        }
    }
    Ok(PdeSolution { x, u })
}

fn knockout_at(spot: f64, t: f64, contract: &BarrierContract, grid: &PdeGrid) -> Result<f64> {
    let barrier = &contract.barrier;
    let level = barrier.level(t)?;
    if spot <= level {
        return Ok(0.0);
    }
    let x_spot = (spot / level).ln();
    if x_spot > grid.x_max {
        return Err(PricingError::Domain(format!(
            "spot maps to x = {x_spot}, beyond the grid edge {}",
            grid.x_max
        )));
    }
    let sol = pde_solve(t, barrier, contract.strike, Claim::of(contract), grid)?;
    Ok(sol.interpolate(x_spot))
}

/// Price of `contract` by Crank-Nicolson; in-styles via the vanilla.
pub fn pde_price(spot: f64, t: f64, contract: &BarrierContract, grid: &PdeGrid) -> Result<f64> {
    let out = knockout_at(spot, t, contract, grid)?;
    match contract.style {
        BarrierStyle::DownAndOut => Ok(out),
        BarrierStyle::DownAndIn => {
            let v = vanilla::vanilla(
                contract.side,
                spot,
                t,
                contract.strike,
                contract.expiry,
                contract.curves(),
            )?;
            Ok(v.price - out)
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct PdeEstimate {
    pub price: f64,
    /// `|u(grid) - u(grid / 2)| / 3`, the Richardson error estimate.
    pub richardson: f64,
}

/// Solves on `grid` and on the half-resolution grid; errors with
/// [`PricingError::GridTooCoarse`] when the Richardson estimate exceeds
/// `rel_tol * |price|`.
pub fn pde_price_checked(
    spot: f64,
    t: f64,
    contract: &BarrierContract,
    grid: &PdeGrid,
    rel_tol: f64,
) -> Result<PdeEstimate> {
    let fine = pde_price(spot, t, contract, grid)?;
    let coarse_grid = PdeGrid::new(grid.x_max, grid.n_space / 2, grid.n_time / 2)?;
    let coarse = pde_price(spot, t, contract, &coarse_grid)?;
    let richardson = (fine - coarse).abs() / 3.0;
    let tolerance = rel_tol * fine.abs();
    if richardson > tolerance {
        return Err(PricingError::GridTooCoarse {
            estimate: richardson,
            tolerance,
        });
    }
    Ok(PdeEstimate {
        price: fine,
        richardson,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::barrier;
    use crate::contract::OptionSide;
    use crate::curves::CurveSet;
    use std::sync::Arc;

    fn flat_contract() -> BarrierContract {
        let curves = Arc::new(CurveSet::constant(0.05, 0.0, 0.2, 1.0).unwrap());
        let b = MovingBarrier::from_terminal(90.0, -1.25, curves, 1.0).unwrap();
        BarrierContract::new(100.0, OptionSide::Call, BarrierStyle::DownAndOut, b).unwrap()
    }

    #[test]
    fn barrier_row_is_zero() {
        let c = flat_contract();
        let grid = PdeGrid::for_point(100.0, 0.0, &c, 100, 100).unwrap();
        let sol = pde_solve(0.0, &c.barrier, 100.0, Claim::Call, &grid).unwrap();
        assert_eq!(sol.u[0], 0.0);
        assert_eq!(sol.x[0], 0.0);
    }

    #[test]
    fn spot_lands_on_a_node() {
        let c = flat_contract();
        let grid = PdeGrid::for_point(100.0, 0.0, &c, 200, 200).unwrap();
        let x_spot = (100.0f64 / 90.0).ln();
        let j = x_spot / grid.dx();
        assert!((j - j.round()).abs() < 1e-9);
        assert!(grid.x_max >= x_spot + 8.0 * 0.2);
    }

    #[test]
    fn grid_validation() {
        assert!(PdeGrid::new(1.0, 3, 10).is_err());
        assert!(PdeGrid::new(1.0, 10, 3).is_err());
        assert!(PdeGrid::new(0.0, 10, 10).is_err());
    }

    #[test]
    fn cell_average_of_linear_pieces() {
        // straddling the kink: mean of (90 e^x - 100)^+ over [0.1, 0.12]
        let k = (100.0f64 / 90.0).ln();
        let avg = cell_average(Claim::Call, 0.1, 0.12, 90.0, 100.0);
        let exact = (90.0 * (0.12f64.exp() - k.exp()) - 100.0 * (0.12 - k)) / 0.02;
        assert!((avg - exact).abs() < 1e-12);
        assert_eq!(cell_average(Claim::Put, 0.2, 0.3, 90.0, 100.0), 0.0);
        let f = cell_average(Claim::Forward, 0.0, 0.2, 90.0, 100.0);
        assert!((f - (90.0 * (0.2f64.exp() - 1.0) - 20.0) / 0.2).abs() < 1e-12);
    }

    #[test]
    fn matches_closed_form_on_moderate_grid() {
        let c = flat_contract();
        let grid = PdeGrid::for_point(100.0, 0.0, &c, 400, 400).unwrap();
        let pde = pde_price(100.0, 0.0, &c, &grid).unwrap();
        let cf = barrier::down_and_out_call(100.0, 0.0, &c).unwrap().price;
        assert!(((pde - cf) / cf).abs() < 5e-4, "{pde} vs {cf}");
    }

    #[test]
    fn coarse_grid_is_flagged() {
        let c = flat_contract();
        let grid = PdeGrid::for_point(100.0, 0.0, &c, 8, 8).unwrap();
        let r = pde_price_checked(100.0, 0.0, &c, &grid, 1e-6);
        assert!(matches!(r, Err(PricingError::GridTooCoarse { .. })));
        let grid = PdeGrid::for_point(100.0, 0.0, &c, 400, 400).unwrap();
        let ok = pde_price_checked(100.0, 0.0, &c, &grid, 1e-3).unwrap();
        assert!(ok.richardson < 1e-3 * ok.price);
    }
}
