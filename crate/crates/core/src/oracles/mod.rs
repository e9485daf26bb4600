//! Independent numerical pricers used to verify the closed forms.
//!
//! * [`heat_kernel`]: adaptive quadrature of the half-line heat kernel with
//!   its reflected image, in barrier-relative coordinates.
//! * [`pde`]: Crank-Nicolson on the barrier-relative PDE with the boundary
//!   frozen at `x = 0`.
//! * [`monte_carlo`]: exact log-normal stepping with Brownian-bridge
//!   crossing probabilities.

pub mod heat_kernel;
pub mod monte_carlo;
pub mod pde;
pub mod quadrature;

pub use heat_kernel::{
    heat_kernel_price, heat_kernel_value, to_heat_coords, HeatCoords, HeatKernelValue,
};
pub use monte_carlo::{mc_price, McEstimate};
pub use pde::{pde_price, pde_price_checked, pde_solve, PdeEstimate, PdeGrid, PdeSolution};

use crate::contract::{BarrierContract, OptionSide};

/// Terminal payoff of a knockout claim on `S_T`, for strike `K`.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Claim {
    Call,
    Put,
    /// `S_T - K`, the knockout forward.
    Forward,
}

impl Claim {
    pub fn of(contract: &BarrierContract) -> Self {
        match contract.side {
            OptionSide::Call => Claim::Call,
            OptionSide::Put => Claim::Put,
        }
    }

    pub fn payoff(self, s: f64, strike: f64) -> f64 {
        match self {
            Claim::Call => (s - strike).max(0.0),
            Claim::Put => (strike - s).max(0.0),
            Claim::Forward => s - strike,
        }
    }
}
