//! Moving barriers of the exponential-drift class and barrier contracts.
//!
//! A barrier is pinned by its level at expiry and a drift constant `C`:
//!
//! ```text
//! h(t) = h(T) * exp(-int_t^T (r(s) - q(s) + C sigma^2(s)) ds)
//! ```
//!
//! Only barriers of this form admit the image-solution prices, so an
//! arbitrary `h(t)` cannot be constructed here.

use std::path::Path;
use std::sync::Arc;

use serde::{Deserialize, Serialize};

use crate::curves::CurveSet;
use crate::error::{PricingError, Result};

/// Largest accepted `|C|`; beyond it `(S/h)^(2C+1)` overflows for ordinary spots.
pub const MAX_ABS_C: f64 = 1e6;

#[derive(Debug, Clone, PartialEq)]
pub struct MovingBarrier {
    terminal_level: f64,
    c: f64,
    expiry: f64,
    curves: Arc<CurveSet>,
}

impl MovingBarrier {
    /// Barrier with level `h_T` at `expiry` and drift constant `c`.
    pub fn from_terminal(
        terminal_level: f64,
        c: f64,
        curves: Arc<CurveSet>,
        expiry: f64,
    ) -> Result<Self> {
        if !(terminal_level.is_finite() && terminal_level > 0.0) {
            return Err(PricingError::InvalidContract(format!(
                "terminal barrier level must be positive, got {terminal_level}"
            )));
        }
        if !c.is_finite() || c.abs() > MAX_ABS_C {
            return Err(PricingError::InvalidContract(format!(
                "barrier constant C = {c} is outside [-{MAX_ABS_C}, {MAX_ABS_C}]"
            )));
        }
        if !(expiry.is_finite() && expiry > 0.0) {
            return Err(PricingError::InvalidContract(format!(
                "expiry must be positive, got {expiry}"
            )));
        }
        Ok(Self {
            terminal_level,
            c,
            expiry,
            curves,
        })
    }

    /// Barrier passing through `h_t0` at `t0` and `h_T` at expiry.
    pub fn through_levels(
        level_t0: f64,
        t0: f64,
        terminal_level: f64,
        curves: Arc<CurveSet>,
        expiry: f64,
    ) -> Result<Self> {
        let c = c_from_levels(level_t0, t0, terminal_level, &curves, expiry)?;
        Self::from_terminal(terminal_level, c, curves, expiry)
    }

    pub fn terminal_level(&self) -> f64 {
        self.terminal_level
    }

    pub fn c(&self) -> f64 {
        self.c
    }

    pub fn expiry(&self) -> f64 {
        self.expiry
    }

    pub fn curves(&self) -> &CurveSet {
        &self.curves
    }

    pub fn curves_arc(&self) -> &Arc<CurveSet> {
        &self.curves
    }

    /// `ln(h(t) / h(T))`.
    pub fn log_level_ratio(&self, t: f64) -> Result<f64> {
        self.check_time(t)?;
        let w = self.curves.window(t, self.expiry)?;
        Ok(-(w.rbar - w.qbar + self.c * w.sigma2bar))
    }

    pub fn level(&self, t: f64) -> Result<f64> {
        Ok(self.terminal_level * self.log_level_ratio(t)?.exp())
    }

    /// `h'(t) / h(t) = r(t) - q(t) + C sigma^2(t)`.
    pub fn growth_rate(&self, t: f64) -> Result<f64> {
        self.check_time(t)?;
        let c = &self.curves;
        let sigma = c.sigma.value_at(t)?;
        Ok(c.r.value_at(t)? - c.q.value_at(t)? + self.c * sigma * sigma)
    }

    fn check_time(&self, t: f64) -> Result<()> {
        if !(t.is_finite() && t >= 0.0 && t <= self.expiry) {
            return Err(PricingError::Domain(format!(
                "time {t} is outside the barrier's life [0, {}]",
                self.expiry
            )));
        }
        Ok(())
    }
}

/// The drift constant `C` of the admissible barrier through `h_t0` at `t0`
/// and `h_T` at `T`.
pub fn c_from_levels(
    level_t0: f64,
    t0: f64,
    terminal_level: f64,
    curves: &CurveSet,
    expiry: f64,
) -> Result<f64> {
    if !(level_t0 > 0.0 && terminal_level > 0.0) {
        return Err(PricingError::InvalidContract(format!(
            "barrier levels must be positive, got {level_t0} and {terminal_level}"
        )));
    }
    if !(t0 < expiry) {
        return Err(PricingError::Domain(format!(
            "need t0 < T to determine C, got t0 = {t0}, T = {expiry}"
        )));
    }
    let w = curves.window(t0, expiry)?;
    if w.sigma2bar <= 0.0 {
        return Err(PricingError::Domain("zero variance over [t0, T]".into()));
    }
    Ok(-(w.rbar - w.qbar + (level_t0 / terminal_level).ln()) / w.sigma2bar)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum OptionSide {
    Call,
    Put,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum BarrierStyle {
    DownAndOut,
    DownAndIn,
}

#[derive(Debug, Clone, PartialEq)]
pub struct BarrierContract {
    pub strike: f64,
    pub expiry: f64,
    pub side: OptionSide,
    pub style: BarrierStyle,
    pub barrier: MovingBarrier,
}

impl BarrierContract {
    pub fn new(
        strike: f64,
        side: OptionSide,
        style: BarrierStyle,
        barrier: MovingBarrier,
    ) -> Result<Self> {
        if !(strike.is_finite() && strike > 0.0) {
            return Err(PricingError::InvalidContract(format!(
                "strike must be positive, got {strike}"
            )));
        }
        Ok(Self {
            strike,
            expiry: barrier.expiry(),
            side,
            style,
            barrier,
        })
    }

    /// Same barrier and strike, different payoff.
    pub fn with_kind(&self, side: OptionSide, style: BarrierStyle) -> Self {
        Self {
            side,
            style,
            ..self.clone()
        }
    }

    /// `K >= h(T)`: the payoff support lies entirely above the terminal barrier.
    pub fn in_closed_form_regime(&self) -> bool {
        self.strike >= self.barrier.terminal_level()
    }

    pub fn curves(&self) -> &CurveSet {
        self.barrier.curves()
    }

    pub fn from_json(text: &str, curves: Arc<CurveSet>) -> Result<Self> {
        let spec: ContractSpec = serde_json::from_str(text)?;
        spec.resolve(curves)
    }

    pub fn from_file(path: impl AsRef<Path>, curves: Arc<CurveSet>) -> Result<Self> {
        let path = path.as_ref();
        let text = std::fs::read_to_string(path)
            .map_err(|e| PricingError::Parse(format!("{}: {e}", path.display())))?;
        Self::from_json(&text, curves)
    }
}

/// On-disk contract description.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ContractSpec {
    pub strike: f64,
    pub expiry: f64,
    pub side: OptionSide,
    pub style: BarrierStyle,
    pub barrier: BarrierSpec,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum BarrierSpec {
    Terminal {
        #[serde(rename = "h_T")]
        terminal_level: f64,
        #[serde(rename = "C")]
        c: f64,
    },
    TwoLevels {
        h_t0: f64,
        t0: f64,
        #[serde(rename = "h_T")]
        terminal_level: f64,
    },
}

impl ContractSpec {
    pub fn resolve(&self, curves: Arc<CurveSet>) -> Result<BarrierContract> {
        let barrier = match self.barrier {
            BarrierSpec::Terminal { terminal_level, c } => {
                MovingBarrier::from_terminal(terminal_level, c, curves, self.expiry)?
            }
            BarrierSpec::TwoLevels {
                h_t0,
                t0,
                terminal_level,
            } => MovingBarrier::through_levels(h_t0, t0, terminal_level, curves, self.expiry)?,
        };
        BarrierContract::new(self.strike, self.side, self.style, barrier)
    }
}
