use serde::{Deserialize, Serialize};

use super::evaluate::{train_repeat, EvalContext};
use super::smbo::TuningRun;
use super::Mode;
use crate::data::Dataset;
use crate::doe::Assignment;
use crate::error::{Error, Result};
use crate::nn::{mse, Mlp};
use crate::seed;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SplitMetrics {
    pub mse: f64,
    pub consistency: f64,
}

/// The best design of a run, re-trained with its repeat seeds and scored
/// on the validation and test splits.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Summary {
    pub mode: Mode,
    pub metric: String,
    pub best_index: usize,
    pub hyperparameters: Assignment,
    pub objective: f64,
    /// Overall desirability of the validation means and `1 - D`; only for
    /// desirability runs.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub desirability: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub one_minus_desirability: Option<f64>,
    pub validation: SplitMetrics,
    pub test: SplitMetrics,
    pub evaluations: usize,
    pub attribution_calls_during_tuning: usize,
}

const SUMMARY_STREAM: u64 = 0x5C;

fn score(model: &Mlp, data: &Dataset, ctx: &EvalContext, seed: u64) -> Result<(f64, f64)> {
    let err = mse(&model.predict_rows(&data.features)?, &data.targets)?;
    Ok((err, ctx.consistency(model, data, seed)?))
}

/// Post-hoc evaluation of the best record. This is the only place the test
/// split is read.
pub fn summarize(run: &TuningRun, ctx: &EvalContext) -> Result<(Summary, Vec<Mlp>)> {
    let best = run.best_record();
    if best.degenerate {
        return Err(Error::Numerical("every evaluation of the run was degenerate".into()));
    }
    let point = best.point();
    let mut models = Vec::new();
    let (mut val, mut test) = ((0.0, 0.0), (0.0, 0.0));
    let seeds = best.seeds();
    for &s in &seeds {
        let (model, report) = train_repeat(&point, ctx.splits, s)?;
        if report.diverged {
            return Err(Error::Numerical(format!("re-training design {} diverged", best.index)));
        }
        let v = score(&model, &ctx.splits.validation, ctx, seed::derive(s, &[SUMMARY_STREAM, 0]))?;
        let t = score(&model, ctx.splits.test(), ctx, seed::derive(s, &[SUMMARY_STREAM, 1]))?;
        val = (val.0 + v.0, val.1 + v.1);
        test = (test.0 + t.0, test.1 + t.1);
        models.push(model);
    }
    let n = seeds.len() as f64;
    let validation = SplitMetrics {
        mse: val.0 / n,
        consistency: val.1 / n,
    };
    let test = SplitMetrics {
        mse: test.0 / n,
        consistency: test.1 / n,
    };
    let desirability = if run.objective.mode == Mode::Desirability {
        Some(run.objective.overall_desirability(validation.mse, validation.consistency)?)
    } else {
        None
    };
    let summary = Summary {
        mode: run.objective.mode,
        metric: run.objective.metric.name().to_string(),
        best_index: best.index,
        hyperparameters: best.concrete.clone(),
        objective: best.objective,
        desirability,
        one_minus_desirability: desirability.map(|d| 1.0 - d),
        validation,
        test,
        evaluations: run.records.len(),
        attribution_calls_during_tuning: run.attribution_calls,
    };
    Ok((summary, models))
}
