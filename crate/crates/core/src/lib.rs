//! Pricing of down-and-out and down-and-in options on barriers that move with
//! the market curves, under deterministic time-dependent rate, dividend yield
//! and volatility.
//!
//! [`barrier`] holds the closed forms; [`oracles`] holds three independent
//! numerical pricers (heat-kernel quadrature, Crank-Nicolson, Monte Carlo)
//! used to check them.

// Guards like `!(x > 0.0)` deliberately reject NaN as well.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod barrier;
pub mod contract;
pub mod curves;
pub mod error;
pub mod oracles;
pub mod vanilla;

pub use barrier::{
    constant_case_parity_gap, d_values, down_and_in_call, down_and_in_put, down_and_out_call,
    down_and_out_put, forward_barrier_value, image_solution, price, ConstantParityGap,
    ConstantParityInputs, DValues, PriceBreakdown, Status,
};
pub use contract::{
    c_from_levels, BarrierContract, BarrierSpec, BarrierStyle, ContractSpec, MovingBarrier,
    OptionSide,
};
pub use curves::{CurveSet, TermStructure, Window};
pub use error::{PricingError, Result};
pub use oracles::{
    heat_kernel_price, mc_price, pde_price, pde_price_checked, Claim, McEstimate, PdeEstimate,
    PdeGrid,
};
pub use vanilla::{norm_cdf, vanilla_call, vanilla_put, VanillaQuote};
