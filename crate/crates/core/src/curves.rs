//! Deterministic piecewise-constant market curves.
//!
//! A [`TermStructure`] is described by `n + 1` increasing breakpoints starting
//! at time 0 and `n` levels, one per interval. Evaluation is right-continuous
//! and the last level is held flat beyond the final breakpoint, so every
//! curve is defined on `[0, inf)`. Integrals are exact sums of rectangles.

use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{PricingError, Result};

/// Smallest volatility level accepted at construction.
pub const SIGMA_MIN: f64 = 1e-8;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "RawTermStructure", into = "RawTermStructure")]
pub struct TermStructure {
    breakpoints: Vec<f64>,
    values: Vec<f64>,
}

#[derive(Serialize, Deserialize)]
struct RawTermStructure {
    breakpoints: Vec<f64>,
    values: Vec<f64>,
}

impl TryFrom<RawTermStructure> for TermStructure {
    type Error = PricingError;

    fn try_from(raw: RawTermStructure) -> Result<Self> {
        TermStructure::new(raw.breakpoints, raw.values)
    }
}

impl From<TermStructure> for RawTermStructure {
    fn from(ts: TermStructure) -> Self {
        RawTermStructure {
            breakpoints: ts.breakpoints,
            values: ts.values,
        }
    }
}

impl TermStructure {
    pub fn new(breakpoints: Vec<f64>, values: Vec<f64>) -> Result<Self> {
        if values.is_empty() {
            return Err(PricingError::InvalidCurve(
                "at least one interval is required".into(),
            ));
        }
        if breakpoints.len() != values.len() + 1 {
            return Err(PricingError::InvalidCurve(format!(
                "{} values need {} breakpoints, got {}",
                values.len(),
                values.len() + 1,
                breakpoints.len()
            )));
        }
        if breakpoints[0] != 0.0 {
            return Err(PricingError::InvalidCurve(format!(
                "first breakpoint must be 0, got {}",
                breakpoints[0]
            )));
        }
        if breakpoints.iter().any(|b| !b.is_finite()) {
            return Err(PricingError::InvalidCurve("non-finite breakpoint".into()));
        }
        if let Some(w) = breakpoints.windows(2).find(|w| w[1] <= w[0]) {
            return Err(PricingError::InvalidCurve(format!(
                "breakpoints must be strictly increasing ({} then {})",
                w[0], w[1]
            )));
        }
        if values.iter().any(|v| !v.is_finite()) {
            return Err(PricingError::InvalidCurve("non-finite level".into()));
        }
        Ok(Self {
            breakpoints,
            values,
        })
    }

    /// A single level on `[0, horizon]`, extrapolated flat.
    pub fn constant(value: f64, horizon: f64) -> Result<Self> {
        Self::new(vec![0.0, horizon], vec![value])
    }

    /// A volatility curve: every level must be at least [`SIGMA_MIN`].
    pub fn volatility(breakpoints: Vec<f64>, values: Vec<f64>) -> Result<Self> {
        let ts = Self::new(breakpoints, values)?;
        ts.check_volatility()?;
        Ok(ts)
    }

    fn check_volatility(&self) -> Result<()> {
        match self.values.iter().find(|&&v| v < SIGMA_MIN) {
            Some(v) => Err(PricingError::InvalidCurve(format!(
                "volatility level {v} is below the minimum {SIGMA_MIN}"
            ))),
            None => Ok(()),
        }
    }

    pub fn breakpoints(&self) -> &[f64] {
        &self.breakpoints
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    /// End of the explicitly specified data; beyond it the last level applies.
    pub fn last_breakpoint(&self) -> f64 {
        *self.breakpoints.last().expect("validated non-empty")
    }

    /// Interval `i` spans `[lo, hi)`; the last one is open-ended.
    fn interval(&self, i: usize) -> (f64, f64) {
        let lo = self.breakpoints[i];
        let hi = if i + 1 == self.values.len() {
            f64::INFINITY
        } else {
            self.breakpoints[i + 1]
        };
        (lo, hi)
    }

    pub fn value_at(&self, t: f64) -> Result<f64> {
        check_time(t)?;
        // right-continuous: a breakpoint belongs to the interval it opens
        let idx = self.breakpoints[..self.values.len()].partition_point(|&b| b <= t);
        Ok(self.values[idx - 1])
    }

    /// Exact `int_t^T f(s) ds`.
    pub fn integral(&self, t: f64, maturity: f64) -> Result<f64> {
        self.integrate_with(t, maturity, |v| v)
    }

    /// Exact `int_t^T f(s)^2 ds`.
    pub fn integral_squared(&self, t: f64, maturity: f64) -> Result<f64> {
        self.integrate_with(t, maturity, |v| v * v)
    }

    fn integrate_with(&self, t: f64, maturity: f64, g: impl Fn(f64) -> f64) -> Result<f64> {
        check_window(t, maturity)?;
        let mut acc = 0.0;
        for (i, &v) in self.values.iter().enumerate() {
            let (lo, hi) = self.interval(i);
            if lo >= maturity {
                break;
            }
            let overlap = maturity.min(hi) - t.max(lo);
            if overlap > 0.0 {
                acc += g(v) * overlap;
            }
        }
        Ok(acc)
    }
}

fn check_time(t: f64) -> Result<()> {
    if !t.is_finite() || t < 0.0 {
        return Err(PricingError::Domain(format!(
            "time {t} is outside the curve horizon [0, inf)"
        )));
    }
    Ok(())
}

fn check_window(t: f64, maturity: f64) -> Result<()> {
    check_time(t)?;
    check_time(maturity)?;
    if t > maturity {
        return Err(PricingError::Domain(format!(
            "integration window is reversed: t = {t} > T = {maturity}"
        )));
    }
    Ok(())
}

/// The triple `(r, q, sigma)` driving the underlying.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "RawCurveSet")]
pub struct CurveSet {
    pub r: TermStructure,
    pub q: TermStructure,
    pub sigma: TermStructure,
}

#[derive(Deserialize)]
struct RawCurveSet {
    r: TermStructure,
    q: TermStructure,
    sigma: TermStructure,
}

impl TryFrom<RawCurveSet> for CurveSet {
    type Error = PricingError;

    fn try_from(raw: RawCurveSet) -> Result<Self> {
        CurveSet::new(raw.r, raw.q, raw.sigma)
    }
}

impl CurveSet {
    pub fn new(r: TermStructure, q: TermStructure, sigma: TermStructure) -> Result<Self> {
        sigma.check_volatility()?;
        Ok(Self { r, q, sigma })
    }

    /// Flat curves on `[0, horizon]`.
    pub fn constant(r: f64, q: f64, sigma: f64, horizon: f64) -> Result<Self> {
        Self::new(
            TermStructure::constant(r, horizon)?,
            TermStructure::constant(q, horizon)?,
            TermStructure::constant(sigma, horizon)?,
        )
    }

    pub fn from_json(text: &str) -> Result<Self> {
        Ok(serde_json::from_str(text)?)
    }

    pub fn from_file(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let text = std::fs::read_to_string(path)
            .map_err(|e| PricingError::Parse(format!("{}: {e}", path.display())))?;
        Self::from_json(&text)
    }

    pub fn integral_r(&self, t: f64, maturity: f64) -> Result<f64> {
        self.r.integral(t, maturity)
    }

    pub fn integral_q(&self, t: f64, maturity: f64) -> Result<f64> {
        self.q.integral(t, maturity)
    }

    /// Total variance `int_t^T sigma^2(s) ds`.
    pub fn integral_sigma2(&self, t: f64, maturity: f64) -> Result<f64> {
        self.sigma.integral_squared(t, maturity)
    }

    /// The three integrals over one window.
    pub fn window(&self, t: f64, maturity: f64) -> Result<Window> {
        Ok(Window {
            rbar: self.integral_r(t, maturity)?,
            qbar: self.integral_q(t, maturity)?,
            sigma2bar: self.integral_sigma2(t, maturity)?,
        })
    }

    /// Sorted breakpoints of all three curves lying strictly inside `(t, T)`.
    pub fn breakpoints_within(&self, t: f64, maturity: f64) -> Vec<f64> {
        let mut out: Vec<f64> = [&self.r, &self.q, &self.sigma]
            .iter()
            .flat_map(|c| c.breakpoints[1..c.values.len()].iter().copied())
            .filter(|&b| b > t && b < maturity)
            .collect();
        out.sort_by(f64::total_cmp);
        out.dedup();
        out
    }

    /// A time grid on `[t, T]` with roughly `n_steps` steps whose nodes include
    /// every curve breakpoint, so each step sees constant parameters.
    pub fn step_grid(&self, t: f64, maturity: f64, n_steps: usize) -> Result<Vec<f64>> {
        check_window(t, maturity)?;
        if maturity == t {
            return Ok(vec![t]);
        }
        let span = maturity - t;
        let mut edges = vec![t];
        edges.extend(self.breakpoints_within(t, maturity));
        edges.push(maturity);

        let mut grid = vec![t];
        for w in edges.windows(2) {
            let (lo, hi) = (w[0], w[1]);
            let k = ((n_steps as f64 * (hi - lo) / span).round() as usize).max(1);
            let dt = (hi - lo) / k as f64;
            grid.extend((1..k).map(|j| lo + j as f64 * dt));
            grid.push(hi);
        }
        Ok(grid)
    }
}

/// Integrated rate, dividend yield and variance over `[t, T]`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Window {
    pub rbar: f64,
    pub qbar: f64,
    pub sigma2bar: f64,
}

#[cfg(test)]
mod tests {
    use super::*;

    fn two_piece(a: f64, b: f64) -> TermStructure {
        TermStructure::new(vec![0.0, 0.5, 1.0], vec![a, b]).unwrap()
    }

    #[test]
    fn integral_examples() {
        let flat = CurveSet::constant(0.05, 0.05, 0.2, 2.0).unwrap();
        assert!((flat.integral_r(0.0, 2.0).unwrap() - 0.10).abs() < 1e-15);
        assert!((flat.integral_q(0.0, 2.0).unwrap() - 0.10).abs() < 1e-15);
        assert!((flat.integral_sigma2(0.0, 1.0).unwrap() - 0.04).abs() < 1e-15);
        assert_eq!(flat.integral_r(0.7, 0.7).unwrap(), 0.0);
        assert_eq!(flat.integral_sigma2(1.3, 1.3).unwrap(), 0.0);

        let r = two_piece(0.02, 0.04);
        assert!((r.integral(0.0, 1.0).unwrap() - 0.03).abs() < 1e-15);
        let s = two_piece(0.1, 0.3);
        assert!((s.integral_squared(0.0, 1.0).unwrap() - 0.05).abs() < 1e-15);
    }

    #[test]
    fn value_at_is_right_continuous_and_flat_beyond() {
        let r = two_piece(0.02, 0.04);
        assert_eq!(r.value_at(0.0).unwrap(), 0.02);
        assert_eq!(r.value_at(0.4999).unwrap(), 0.02);
        assert_eq!(r.value_at(0.5).unwrap(), 0.04);
        assert_eq!(r.value_at(1.0).unwrap(), 0.04);
        assert_eq!(r.value_at(7.5).unwrap(), 0.04);
        let c = TermStructure::constant(0.3, 1.0).unwrap();
        for t in [0.0, 0.2, 1.0, 3.0] {
            assert_eq!(c.value_at(t).unwrap(), 0.3);
        }
    }

    #[test]
    fn extrapolated_integral_uses_last_level() {
        let r = two_piece(0.02, 0.04);
        let v = r.integral(0.0, 3.0).unwrap();
        assert!((v - (0.01 + 0.04 * 2.5)).abs() < 1e-15);
    }

    #[test]
    fn domain_errors() {
        let r = two_piece(0.02, 0.04);
        assert!(matches!(r.integral(0.6, 0.5), Err(PricingError::Domain(_))));
        assert!(matches!(
            r.integral(-0.1, 0.5),
            Err(PricingError::Domain(_))
        ));
        assert!(matches!(r.value_at(-1.0), Err(PricingError::Domain(_))));
        assert!(matches!(r.value_at(f64::NAN), Err(PricingError::Domain(_))));
    }

    #[test]
    fn construction_errors() {
        assert!(TermStructure::new(vec![0.0], vec![]).is_err());
        assert!(TermStructure::new(vec![0.0, 1.0], vec![0.1, 0.2]).is_err());
        assert!(TermStructure::new(vec![0.1, 1.0], vec![0.1]).is_err());
        assert!(TermStructure::new(vec![0.0, 0.5, 0.5], vec![0.1, 0.2]).is_err());
        assert!(TermStructure::new(vec![0.0, 1.0], vec![f64::NAN]).is_err());
        assert!(TermStructure::volatility(vec![0.0, 1.0], vec![0.0]).is_err());
        assert!(CurveSet::constant(0.05, 0.0, 1e-9, 1.0).is_err());
        assert!(CurveSet::constant(-0.01, 0.0, SIGMA_MIN, 1.0).is_ok());
    }

    #[test]
    fn json_schema() {
        let text = r#"{
            "r": {"breakpoints": [0, 0.5, 1], "values": [0.02, 0.06]},
            "q": {"breakpoints": [0, 1], "values": [0.0]},
            "sigma": {"breakpoints": [0, 0.5, 1], "values": [0.15, 0.3]}
        }"#;
        let c = CurveSet::from_json(text).unwrap();
        assert!((c.integral_r(0.0, 1.0).unwrap() - 0.04).abs() < 1e-15);

        let bad = text.replace("0.15", "0.0");
        assert!(CurveSet::from_json(&bad).is_err());
        let bad = text.replace(
            "[0, 0.5, 1], \"values\": [0.02",
            "[0, 1.5, 1], \"values\": [0.02",
        );
        assert!(CurveSet::from_json(&bad).is_err());
    }

    #[test]
    fn step_grid_contains_breakpoints() {
        let c = CurveSet::new(
            two_piece(0.02, 0.06),
            TermStructure::new(vec![0.0, 0.3, 1.0], vec![0.0, 0.01]).unwrap(),
            two_piece(0.15, 0.3),
        )
        .unwrap();
        assert_eq!(c.breakpoints_within(0.0, 1.0), vec![0.3, 0.5]);
        let g = c.step_grid(0.0, 1.0, 10).unwrap();
        assert!(g.contains(&0.3) && g.contains(&0.5));
        assert_eq!(g[0], 0.0);
        assert_eq!(*g.last().unwrap(), 1.0);
        assert!(g.windows(2).all(|w| w[1] > w[0]));
        assert_eq!(g.len(), 11);
        assert_eq!(c.step_grid(0.2, 0.2, 10).unwrap(), vec![0.2]);
    }
}
