use std::cell::Cell;
use std::time::Instant;

use serde::{Deserialize, Serialize};

use super::smbo::Phase;
use super::ObjectiveSpec;
use crate::data::{DataSplits, Dataset};
use crate::doe::{Assignment, DesignPoint};
use crate::error::{Error, Result};
use crate::nn::{mse, train, Mlp, MlpConfig, TrainReport};
use crate::seed;
use crate::xai::{attribution_matrix, AttributionSettings};

/// What one design evaluation needs besides the point itself.
pub struct EvalContext<'a> {
    pub splits: &'a DataSplits,
    pub objective: &'a ObjectiveSpec,
    pub attribution: &'a AttributionSettings,
    /// Store wall-clock seconds in records. Off by default so run logs are
    /// byte-reproducible.
    pub record_wall_time: bool,
    attribution_calls: Cell<usize>,
}

impl<'a> EvalContext<'a> {
    pub fn new(splits: &'a DataSplits, objective: &'a ObjectiveSpec, attribution: &'a AttributionSettings) -> Self {
        EvalContext {
            splits,
            objective,
            attribution,
            record_wall_time: false,
            attribution_calls: Cell::new(0),
        }
    }

    /// Number of attribution-matrix computations made through this context.
    pub fn attribution_calls(&self) -> usize {
        self.attribution_calls.get()
    }

    /// Consistency of `model` on `data` for the objective's metric.
    pub fn consistency(&self, model: &Mlp, data: &Dataset, seed: u64) -> Result<f64> {
        self.attribution_calls.set(self.attribution_calls.get() + 1);
        let e = attribution_matrix(model, &data.features, &data.feature_names, self.attribution, seed)?;
        self.objective.metric.evaluate(&e, self.objective.rank_basis)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RepeatResult {
    pub seed: u64,
    /// Validation MSE; absent when training diverged.
    pub mse: Option<f64>,
    pub consistency: Option<f64>,
    pub diverged: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EvaluationRecord {
    pub index: usize,
    pub phase: Phase,
    pub raw: Vec<f64>,
    pub concrete: Assignment,
    pub repeats: Vec<RepeatResult>,
    /// Mean validation MSE over repeats.
    pub mse: Option<f64>,
    /// Mean consistency over repeats; absent in loss-only mode.
    pub consistency: Option<f64>,
    /// Scalarized objective. For degenerate records this is the penalty.
    pub objective: f64,
    pub best_so_far: f64,
    pub degenerate: bool,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub wall_time_secs: Option<f64>,
}

impl EvaluationRecord {
    pub fn point(&self) -> DesignPoint {
        DesignPoint {
            raw: self.raw.clone(),
            concrete: self.concrete.clone(),
        }
    }

    pub fn seeds(&self) -> Vec<u64> {
        self.repeats.iter().map(|r| r.seed).collect()
    }
}

/// Seeds of the repeats of design `index`.
pub fn repeat_seeds(master: u64, index: usize, repeats: usize) -> Vec<u64> {
    (0..repeats)
        .map(|r| seed::derive(master, &[index as u64, r as u64]))
        .collect()
}

const ATTRIBUTION_STREAM: u64 = 0xA7;

/// Build and train the network for `point` on the training split.
pub fn train_repeat(point: &DesignPoint, splits: &DataSplits, seed: u64) -> Result<(Mlp, TrainReport)> {
    let config = MlpConfig::from_assignment(&point.concrete, seed)?;
    let mut model = Mlp::build(&config, splits.train.width())?;
    let report = train(&mut model, &splits.train, &config)?;
    Ok((model, report))
}

fn mean(values: impl Iterator<Item = f64>) -> f64 {
    let (sum, n) = values.fold((0.0, 0usize), |(s, n), v| (s + v, n + 1));
    sum / n as f64
}

/// Train one network per seed, score it on the validation split and
/// scalarize the per-objective means.
///
/// A diverged repeat, a non-finite validation MSE or a failed attribution
/// makes the record degenerate; its `objective` is then NaN until the
/// tuning loop assigns the penalty.
pub fn evaluate_design(point: &DesignPoint, ctx: &EvalContext, seeds: &[u64]) -> Result<EvaluationRecord> {
    if seeds.is_empty() {
        return Err(Error::config("at least one repeat is required"));
    }
    let started = Instant::now();
    let validation = &ctx.splits.validation;
    let mut repeats = Vec::with_capacity(seeds.len());
    for &s in seeds {
        let (model, report) = train_repeat(point, ctx.splits, s)?;
        let mut result = RepeatResult {
            seed: s,
            mse: None,
            consistency: None,
            diverged: report.diverged,
        };
        if !report.diverged {
            let err = mse(&model.predict_rows(&validation.features)?, &validation.targets)?;
            if err.is_finite() {
                result.mse = Some(err);
            } else {
                result.diverged = true;
            }
        }
        if !result.diverged && ctx.objective.needs_consistency() {
            match ctx.consistency(&model, validation, seed::derive(s, &[ATTRIBUTION_STREAM])) {
                Ok(c) => result.consistency = Some(c),
                Err(e @ Error::AttributionFailed { .. }) => {
                    log::warn!("design {:?}: {e}", point.raw);
                    result.diverged = true;
                }
                Err(e) => return Err(e),
            }
        }
        repeats.push(result);
    }

    let degenerate = repeats.iter().any(|r| r.diverged);
    let (mean_mse, mean_cons, objective) = if degenerate {
        (None, None, f64::NAN)
    } else {
        let m = mean(repeats.iter().filter_map(|r| r.mse));
        let c = if ctx.objective.needs_consistency() {
            Some(mean(repeats.iter().filter_map(|r| r.consistency)))
        } else {
            None
        };
        (Some(m), c, ctx.objective.scalarize(m, c)?)
    };
    Ok(EvaluationRecord {
        index: 0,
        phase: Phase::Initial,
        raw: point.raw.clone(),
        concrete: point.concrete.clone(),
        repeats,
        mse: mean_mse,
        consistency: mean_cons,
        objective,
        best_so_far: objective,
        degenerate,
        wall_time_secs: ctx.record_wall_time.then(|| started.elapsed().as_secs_f64()),
    })
}
