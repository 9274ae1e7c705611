use std::io::{BufRead, Write};

use serde::{Deserialize, Serialize};

use super::evaluate::{evaluate_design, repeat_seeds, EvalContext, EvaluationRecord};
use super::ObjectiveSpec;
use crate::doe::{latin_hypercube, DesignPoint, SearchSpace};
use crate::error::{Error, Result};
use crate::seed;
use crate::surrogate::{propose_next, KrigingModel, KrigingSettings, ProposalSettings};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Phase {
    Initial,
    Infill,
    /// Surrogate fit failed; the point was drawn uniformly instead.
    Random,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct SmboSettings {
    pub init: usize,
    pub budget: usize,
    pub repeats: usize,
    pub seed: u64,
    /// Count the initial design against `budget` instead of adding to it.
    pub budget_includes_init: bool,
    pub kriging: KrigingSettings,
    pub proposal: ProposalSettings,
    pub record_wall_time: bool,
}

impl Default for SmboSettings {
    fn default() -> Self {
        SmboSettings {
            init: 20,
            budget: 60,
            repeats: 2,
            seed: 0,
            budget_includes_init: false,
            kriging: KrigingSettings::default(),
            proposal: ProposalSettings::default(),
            record_wall_time: false,
        }
    }
}

impl SmboSettings {
    pub fn total_evaluations(&self) -> usize {
        if self.budget_includes_init {
            self.budget.max(self.init)
        } else {
            self.init + self.budget
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.init < 1 {
            return Err(Error::config("the initial design needs at least one point"));
        }
        if self.repeats < 1 {
            return Err(Error::config("repeats must be at least 1"));
        }
        if self.kriging.nugget <= 0.0 || self.kriging.max_nugget < self.kriging.nugget {
            return Err(Error::config("kriging nugget range must be positive and ordered"));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct TraceEntry {
    pub point: DesignPoint,
    pub phase: Phase,
    /// Objective value, or the penalty for a degenerate evaluation.
    pub value: f64,
    pub degenerate: bool,
}

const LHS_STREAM: u64 = 1;
const KRIGING_STREAM: u64 = 2;
const PROPOSAL_STREAM: u64 = 3;
const RANDOM_STREAM: u64 = 4;

/// Finite stand-in for failed evaluations, clearly worse than anything seen
/// in the initial design.
fn penalty(values: &[f64]) -> f64 {
    let finite: Vec<f64> = values.iter().copied().filter(|v| v.is_finite()).collect();
    if finite.is_empty() {
        log::warn!("every initial evaluation was degenerate; penalty set to 1");
        return 1.0;
    }
    let worst = finite.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let best = finite.iter().copied().fold(f64::INFINITY, f64::min);
    if worst > 0.0 {
        10.0 * worst
    } else {
        worst + 10.0 * (worst - best).max(1.0)
    }
}

/// Sequential model-based minimization. `evaluate(index, point)` returns
/// the objective, or `None` for a degenerate evaluation.
///
/// The initial design is a Latin hypercube; afterwards a Kriging model of
/// all values so far is minimized to pick each next point. If the model
/// cannot be fitted a uniformly random point is used for that iteration.
pub fn smbo_minimize<F>(space: &SearchSpace, settings: &SmboSettings, mut evaluate: F) -> Result<Vec<TraceEntry>>
where
    F: FnMut(usize, &DesignPoint) -> Result<Option<f64>>,
{
    space.validate()?;
    settings.validate()?;
    let total = settings.total_evaluations();
    let init = settings.init.min(total);
    let master = settings.seed;

    let mut trace = Vec::with_capacity(total);
    for (i, point) in latin_hypercube(init, space, seed::derive(master, &[LHS_STREAM]))?
        .into_iter()
        .enumerate()
    {
        let v = evaluate(i, &point)?;
        trace.push(TraceEntry {
            point,
            phase: Phase::Initial,
            value: v.unwrap_or(f64::NAN),
            degenerate: v.is_none(),
        });
    }
    let values: Vec<f64> = trace.iter().map(|t| t.value).collect();
    let penalty = penalty(&values);
    for t in trace.iter_mut().filter(|t| t.degenerate) {
        t.value = penalty;
    }

    for it in 0..total - init {
        let index = trace.len();
        let xs: Vec<Vec<f64>> = trace.iter().map(|t| t.point.raw.clone()).collect();
        let ys: Vec<f64> = trace.iter().map(|t| t.value).collect();
        let best = ys.iter().copied().fold(f64::INFINITY, f64::min);
        let kseed = seed::derive(master, &[KRIGING_STREAM, it as u64]);
        let (point, phase) = match KrigingModel::fit(&xs, &ys, &settings.kriging, kseed) {
            Ok(model) => {
                let pseed = seed::derive(master, &[PROPOSAL_STREAM, it as u64]);
                (propose_next(&model, space, &xs, best, &settings.proposal, pseed)?, Phase::Infill)
            }
            Err(e) => {
                log::warn!("surrogate fit failed at evaluation {index} ({e}); using a random point");
                let mut rng = seed::rng(seed::derive(master, &[RANDOM_STREAM, it as u64]));
                (space.random_point(&mut rng)?, Phase::Random)
            }
        };
        let v = evaluate(index, &point)?;
        trace.push(TraceEntry {
            point,
            phase,
            value: v.unwrap_or(penalty),
            degenerate: v.is_none(),
        });
    }
    Ok(trace)
}

/// A finished tuning run.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TuningRun {
    pub objective: ObjectiveSpec,
    pub space: SearchSpace,
    pub settings: SmboSettings,
    pub records: Vec<EvaluationRecord>,
    /// Index into `records` of the minimal objective (first on ties).
    pub best: usize,
    pub attribution_calls: usize,
}

impl TuningRun {
    pub fn best_record(&self) -> &EvaluationRecord {
        &self.records[self.best]
    }
}

fn finish_records(records: &mut [EvaluationRecord]) -> usize {
    let mut best = 0;
    let mut running = f64::INFINITY;
    for (i, r) in records.iter_mut().enumerate() {
        if r.objective < running {
            running = r.objective;
            best = i;
        }
        r.best_so_far = running;
    }
    best
}

/// Tune the network on `ctx.splits` for `ctx.objective`.
pub fn tune(space: &SearchSpace, settings: &SmboSettings, ctx: &EvalContext) -> Result<TuningRun> {
    ctx.objective.validate()?;
    ctx.attribution.validate()?;
    let mut records: Vec<EvaluationRecord> = Vec::new();
    let trace = smbo_minimize(space, settings, |index, point| {
        let mut rec = evaluate_design(point, ctx, &repeat_seeds(settings.seed, index, settings.repeats))?;
        rec.index = index;
        log::info!(
            "evaluation {index}: mse {:?} consistency {:?} objective {}",
            rec.mse,
            rec.consistency,
            rec.objective
        );
        let v = (!rec.degenerate).then_some(rec.objective);
        records.push(rec);
        Ok(v)
    })?;
    for (rec, entry) in records.iter_mut().zip(&trace) {
        rec.phase = entry.phase;
        rec.objective = entry.value;
    }
    let best = finish_records(&mut records);
    Ok(TuningRun {
        objective: ctx.objective.clone(),
        space: space.clone(),
        settings: settings.clone(),
        records,
        best,
        attribution_calls: ctx.attribution_calls(),
    })
}

/// Evaluate an `n`-point Latin hypercube without a surrogate, e.g. to map
/// the trade-off between the objectives.
pub fn evaluate_lhs(n: usize, space: &SearchSpace, repeats: usize, seed: u64, ctx: &EvalContext) -> Result<Vec<EvaluationRecord>> {
    let points = latin_hypercube(n, space, seed::derive(seed, &[LHS_STREAM]))?;
    let mut records = Vec::with_capacity(n);
    for (i, p) in points.iter().enumerate() {
        let mut rec = evaluate_design(p, ctx, &repeat_seeds(seed, i, repeats))?;
        rec.index = i;
        records.push(rec);
    }
    let values: Vec<f64> = records.iter().map(|r| r.objective).collect();
    let p = penalty(&values);
    for r in records.iter_mut().filter(|r| r.degenerate) {
        r.objective = p;
    }
    finish_records(&mut records);
    Ok(records)
}

/// One JSON object per line.
pub fn write_run_log(records: &[EvaluationRecord], mut out: impl Write) -> Result<()> {
    for r in records {
        serde_json::to_writer(&mut out, r)?;
        out.write_all(b"\n").map_err(|e| Error::io("<run log>", e))?;
    }
    Ok(())
}

pub fn read_run_log(input: impl BufRead) -> Result<Vec<EvaluationRecord>> {
    let mut records = Vec::new();
    for (i, line) in input.lines().enumerate() {
        let line = line.map_err(|e| Error::io("<run log>", e))?;
        if line.trim().is_empty() {
            continue;
        }
        records.push(serde_json::from_str(&line).map_err(|e| Error::Ingestion {
            line: i + 1,
            message: e.to_string(),
        })?);
    }
    Ok(records)
}
