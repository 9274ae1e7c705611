//! Hyperparameter tuning of the regression network for loss and explanation
//! consistency.

mod evaluate;
mod pareto;
mod smbo;
mod summary;

pub use evaluate::{evaluate_design, repeat_seeds, train_repeat, EvalContext, EvaluationRecord, RepeatResult};
pub use pareto::{dominates, pareto_front, pareto_indices};
pub use smbo::{
    evaluate_lhs, read_run_log, smbo_minimize, tune, write_run_log, Phase, SmboSettings, TraceEntry, TuningRun,
};
pub use summary::{summarize, SplitMetrics, Summary};

use serde::{Deserialize, Serialize};

use crate::consistency::{Metric, RankBasis};
use crate::desirability::{overall_desirability, DesirabilitySpec};
use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Mode {
    /// Validation MSE only.
    #[default]
    Loss,
    /// `w_loss * mse + w_cons * (-cons)`.
    Weighted,
    /// `1 - D` with one desirability per objective.
    Desirability,
}

impl Mode {
    pub const ALL: [Mode; 3] = [Mode::Loss, Mode::Weighted, Mode::Desirability];

    pub fn name(self) -> &'static str {
        match self {
            Mode::Loss => "loss",
            Mode::Weighted => "weighted",
            Mode::Desirability => "desirability",
        }
    }

    pub fn title(self) -> &'static str {
        match self {
            Mode::Loss => "Loss-Based",
            Mode::Weighted => "Weighted",
            Mode::Desirability => "Desirability",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Weights {
    pub loss: f64,
    pub consistency: f64,
}

impl Default for Weights {
    fn default() -> Self {
        Weights {
            loss: 1.0,
            consistency: 1.0,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct ObjectiveSpec {
    pub mode: Mode,
    pub weights: Weights,
    pub loss_desirability: DesirabilitySpec,
    /// Applied to the minimization form of the consistency metric, i.e.
    /// `-cons` for Spearman.
    pub consistency_desirability: DesirabilitySpec,
    pub metric: Metric,
    pub rank_basis: RankBasis,
}

impl Default for ObjectiveSpec {
    fn default() -> Self {
        ObjectiveSpec {
            mode: Mode::Loss,
            weights: Weights::default(),
            loss_desirability: DesirabilitySpec::Minimize {
                lower: 0.1,
                upper: 0.7,
                s: 1.0,
            },
            consistency_desirability: DesirabilitySpec::Minimize {
                lower: -1.0,
                upper: -0.5,
                s: 1.0,
            },
            metric: Metric::Spearman,
            rank_basis: RankBasis::Signed,
        }
    }
}

impl ObjectiveSpec {
    pub fn with_mode(mode: Mode) -> Self {
        ObjectiveSpec {
            mode,
            ..Self::default()
        }
    }

    pub fn validate(&self) -> Result<()> {
        let w = self.weights;
        if !(w.loss.is_finite() && w.consistency.is_finite()) || w.loss < 0.0 || w.consistency < 0.0 {
            return Err(Error::config("objective weights must be finite and non-negative"));
        }
        if w.loss == 0.0 && w.consistency == 0.0 {
            return Err(Error::config("objective weights must not both be zero"));
        }
        self.loss_desirability.validate()?;
        self.consistency_desirability.validate()
    }

    /// Whether evaluating a design needs attributions at all.
    pub fn needs_consistency(&self) -> bool {
        self.mode != Mode::Loss
    }

    /// Scalar objective (smaller is better) from mean MSE and mean consistency.
    pub fn scalarize(&self, mse: f64, consistency: Option<f64>) -> Result<f64> {
        if self.mode == Mode::Loss {
            return Ok(mse);
        }
        let cons = consistency.ok_or_else(|| {
            Error::config(format!("{} objective needs a consistency value", self.mode.name()))
        })?;
        let c = self.metric.to_minimize(cons);
        match self.mode {
            Mode::Loss => unreachable!(),
            Mode::Weighted => Ok(self.weights.loss * mse + self.weights.consistency * c),
            Mode::Desirability => {
                let d = self.overall_desirability(mse, cons)?;
                Ok(1.0 - d)
            }
        }
    }

    /// `D` for a pair of objective values; defined for every mode.
    pub fn overall_desirability(&self, mse: f64, consistency: f64) -> Result<f64> {
        let d1 = self.loss_desirability.evaluate(mse)?;
        let d2 = self.consistency_desirability.evaluate(self.metric.to_minimize(consistency))?;
        overall_desirability(&[d1, d2])
    }
}

/// Weighted sum of MSE and negated Spearman consistency.
pub fn scalarize_weighted(mse: f64, cons: f64, weights: Weights) -> f64 {
    weights.loss * mse + weights.consistency * -cons
}

/// `1 - D` with `loss` applied to the MSE and `consistency` to `-cons`.
pub fn scalarize_desirability(
    mse: f64,
    cons: f64,
    loss: &DesirabilitySpec,
    consistency: &DesirabilitySpec,
) -> Result<f64> {
    let d = overall_desirability(&[loss.evaluate(mse)?, consistency.evaluate(-cons)?])?;
    Ok(1.0 - d)
}
