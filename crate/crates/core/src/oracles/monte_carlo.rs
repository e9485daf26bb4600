//! Monte Carlo with exact stepping in barrier-relative coordinates.
//!
//! `x = ln(S / h(t))` is a Brownian motion with drift `-(C + 1/2)` per unit
//! of variance, so over a step of integrated variance `v` the increment is
//! exactly `N(-(C + 1/2) v, v)`. The probability that the bridge between two
//! positive endpoints touched zero is `exp(-2 x0 x1 / v)`, and each path
//! carries the product of the survival probabilities as a weight. Paths are
//! split into fixed chunks with one ChaCha stream per path, so the estimate
//! does not depend on the thread count.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use rayon::prelude::*;
use serde::Serialize;

use super::Claim;
use crate::contract::{BarrierContract, BarrierStyle};
use crate::error::{PricingError, Result};

const CHUNK: usize = 1024;

/// Beyond this the crossing probability underflows to zero anyway.
const MAX_CROSSING_EXPONENT: f64 = 40.0;

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct McEstimate {
    pub price: f64,
    pub std_error: f64,
    pub n_paths: usize,
    pub n_steps: usize,
    /// Mean knockout probability across paths.
    pub knockout_fraction: f64,
}

#[derive(Debug, Clone, Copy, Default)]
struct Moments {
    n: f64,
    mean: f64,
    m2: f64,
    knocked: f64,
}

impl Moments {
    fn push(&mut self, value: f64, knock_prob: f64) {
        self.n += 1.0;
        let delta = value - self.mean;
        self.mean += delta / self.n;
        self.m2 += delta * (value - self.mean);
        self.knocked += knock_prob;
    }

    fn merge(self, other: Self) -> Self {
        if self.n == 0.0 {
            return other;
        }
        if other.n == 0.0 {
            return self;
        }
        let n = self.n + other.n;
        let delta = other.mean - self.mean;
        Self {
            n,
            mean: self.mean + delta * other.n / n,
            m2: self.m2 + other.m2 + delta * delta * self.n * other.n / n,
            knocked: self.knocked + other.knocked,
        }
    }
}

/// Prices `contract` at `(spot, t)` with `n_paths` paths of roughly
/// `n_steps` steps each (more if the curves have breakpoints to honour).
pub fn mc_price(
    spot: f64,
    t: f64,
    contract: &BarrierContract,
    n_paths: usize,
    n_steps: usize,
    seed: u64,
) -> Result<McEstimate> {
    if n_paths < 2 || n_steps == 0 {
        return Err(PricingError::Domain(format!(
            "need at least 2 paths and 1 step, got {n_paths} paths and {n_steps} steps"
        )));
    }
    if !(spot.is_finite() && spot > 0.0) {
        return Err(PricingError::Domain(format!(
            "spot must be positive, got {spot}"
        )));
    }
    let barrier = &contract.barrier;
    let curves = contract.curves();
    let expiry = contract.expiry;
    let x0 = (spot / barrier.level(t)?).ln();
    let discount = (-curves.integral_r(t, expiry)?).exp();
    let times = curves.step_grid(t, expiry, n_steps)?;
    let steps: Vec<(f64, f64)> = times
        .windows(2)
        .map(|w| {
            let v = curves.integral_sigma2(w[0], w[1])?;
            Ok((-(barrier.c() + 0.5) * v, v))
        })
        .collect::<Result<_>>()?;

    let claim = Claim::of(contract);
    let strike = contract.strike;
    let h_t = barrier.terminal_level();
    let knock_out = contract.style == BarrierStyle::DownAndOut;
    let base = ChaCha8Rng::seed_from_u64(seed);

    let simulate = |path: usize| -> (f64, f64) {
        if x0 <= 0.0 && knock_out {
            return (0.0, 1.0);
        }
        let mut rng = base.clone();
        rng.set_stream(path as u64);
        let mut x = x0;
        let mut survival = if x0 <= 0.0 { 0.0 } else { 1.0 };
        for &(drift, v) in &steps {
            let z: f64 = StandardNormal.sample(&mut rng);
            let next = x + drift + v.sqrt() * z;
            if survival > 0.0 {
                if next <= 0.0 {
                    survival = 0.0;
                } else {
                    let e = 2.0 * x * next / v;
                    if e < MAX_CROSSING_EXPONENT {
                        survival *= -(-e).exp_m1();
                    }
                }
            }
            x = next;
            if knock_out && survival == 0.0 {
                return (0.0, 1.0);
            }
        }
        let payoff = discount * claim.payoff(h_t * x.exp(), strike);
        let weight = if knock_out { survival } else { 1.0 - survival };
        (weight * payoff, 1.0 - survival)
    };

    let n_chunks = n_paths.div_ceil(CHUNK);
    let chunks: Vec<Moments> = (0..n_chunks)
        .into_par_iter()
        .map(|c| {
            let mut m = Moments::default();
            for path in c * CHUNK..((c + 1) * CHUNK).min(n_paths) {
                let (value, knocked) = simulate(path);
                m.push(value, knocked);
            }
            m
        })
        .collect();
    let total = chunks.into_iter().fold(Moments::default(), Moments::merge);
    let variance = total.m2 / (total.n - 1.0);
    Ok(McEstimate {
        price: total.mean,
        std_error: (variance / total.n).sqrt(),
        n_paths,
        n_steps: steps.len(),
        knockout_fraction: total.knocked / total.n,
    })
}
