//! Derringer–Suich desirability functions.
//!
//! Each objective is mapped onto `[0, 1]` (1 = fully acceptable, 0 =
//! unacceptable) and the individual desirabilities are combined with a
//! geometric mean, so a single unacceptable objective zeroes the total.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Shape of a single desirability ramp.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "lowercase", deny_unknown_fields)]
pub enum DesirabilitySpec {
    /// 0 below `lower`, 1 above `upper`.
    Maximize { lower: f64, upper: f64, s: f64 },
    /// 1 below `lower`, 0 above `upper`.
    Minimize { lower: f64, upper: f64, s: f64 },
    /// 1 at `target`, 0 outside `[lower, upper]`.
    Target {
        lower: f64,
        upper: f64,
        target: f64,
        s1: f64,
        s2: f64,
    },
}

impl DesirabilitySpec {
    pub fn maximize(lower: f64, upper: f64, s: f64) -> Result<Self> {
        let spec = DesirabilitySpec::Maximize { lower, upper, s };
        spec.validate()?;
        Ok(spec)
    }

    pub fn minimize(lower: f64, upper: f64, s: f64) -> Result<Self> {
        let spec = DesirabilitySpec::Minimize { lower, upper, s };
        spec.validate()?;
        Ok(spec)
    }

    pub fn target(lower: f64, upper: f64, target: f64, s1: f64, s2: f64) -> Result<Self> {
        let spec = DesirabilitySpec::Target {
            lower,
            upper,
            target,
            s1,
            s2,
        };
        spec.validate()?;
        Ok(spec)
    }

    pub fn validate(&self) -> Result<()> {
        let (lower, upper) = self.bounds();
        if !(lower.is_finite() && upper.is_finite()) || lower >= upper {
            return Err(Error::config(format!(
                "desirability bounds must satisfy lower < upper, got [{lower}, {upper}]"
            )));
        }
        let positive = |name: &str, v: f64| {
            if v > 0.0 && v.is_finite() {
                Ok(())
            } else {
                Err(Error::config(format!(
                    "desirability exponent {name} must be positive, got {v}"
                )))
            }
        };
        match *self {
            DesirabilitySpec::Maximize { s, .. } | DesirabilitySpec::Minimize { s, .. } => {
                positive("s", s)
            }
            DesirabilitySpec::Target { target, s1, s2, .. } => {
                if !(lower < target && target < upper) {
                    return Err(Error::config(format!(
                        "desirability target {target} must lie strictly inside ({lower}, {upper})"
                    )));
                }
                positive("s1", s1)?;
                positive("s2", s2)
            }
        }
    }

    pub fn bounds(&self) -> (f64, f64) {
        match *self {
            DesirabilitySpec::Maximize { lower, upper, .. }
            | DesirabilitySpec::Minimize { lower, upper, .. }
            | DesirabilitySpec::Target { lower, upper, .. } => (lower, upper),
        }
    }

    /// Desirability of `f` under this spec. Non-finite inputs map to 0.
    pub fn evaluate(&self, f: f64) -> Result<f64> {
        self.validate()?;
        if !f.is_finite() {
            log::warn!("non-finite objective value {f} mapped to desirability 0");
            return Ok(0.0);
        }
        Ok(match *self {
            DesirabilitySpec::Maximize { lower, upper, s } => ramp_up(f, lower, upper, s),
            DesirabilitySpec::Minimize { lower, upper, s } => ramp_down(f, lower, upper, s),
            DesirabilitySpec::Target {
                lower,
                upper,
                target,
                s1,
                s2,
            } => {
                if f < lower || f > upper {
                    0.0
                } else if f <= target {
                    ((f - lower) / (target - lower)).powf(s1)
                } else {
                    ((f - upper) / (target - upper)).powf(s2)
                }
            }
        })
    }
}

fn ramp_up(f: f64, lower: f64, upper: f64, s: f64) -> f64 {
    if f < lower {
        0.0
    } else if f > upper {
        1.0
    } else {
        ((f - lower) / (upper - lower)).powf(s)
    }
}

fn ramp_down(f: f64, lower: f64, upper: f64, s: f64) -> f64 {
    if f < lower {
        1.0
    } else if f > upper {
        0.0
    } else {
        ((upper - f) / (upper - lower)).powf(s)
    }
}

/// Desirability for a larger-is-better objective.
pub fn d_max(f: f64, lower: f64, upper: f64, s: f64) -> Result<f64> {
    DesirabilitySpec::maximize(lower, upper, s)?.evaluate(f)
}

/// Desirability for a smaller-is-better objective.
pub fn d_min(f: f64, lower: f64, upper: f64, s: f64) -> Result<f64> {
    DesirabilitySpec::minimize(lower, upper, s)?.evaluate(f)
}

/// Desirability for a hit-the-target objective.
pub fn d_target(f: f64, lower: f64, upper: f64, target: f64, s1: f64, s2: f64) -> Result<f64> {
    DesirabilitySpec::target(lower, upper, target, s1, s2)?.evaluate(f)
}

/// Geometric mean of individual desirabilities; exactly 0 when any input is 0.
pub fn overall_desirability(ds: &[f64]) -> Result<f64> {
    if ds.is_empty() {
        return Err(Error::config("overall desirability needs at least one value"));
    }
    if let Some(bad) = ds.iter().find(|d| !(0.0..=1.0).contains(*d)) {
        return Err(Error::config(format!(
            "desirability values must lie in [0, 1], got {bad}"
        )));
    }
    if ds.iter().any(|&d| d == 0.0) {
        return Ok(0.0);
    }
    let mean_log = ds.iter().map(|d| d.ln()).sum::<f64>() / ds.len() as f64;
    Ok(mean_log.exp().min(1.0))
}
