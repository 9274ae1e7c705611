//! Desirability-based tuning: minimize `1 - D` where D combines a loss
//! ramp (ideal below 0.1, unacceptable above 0.7) and a consistency ramp
//! (ideal at 1, unacceptable at or below 0.5).
//!
//!     cargo run --release --example tune_desirability -- [seed]

use xaitune::config::RunConfig;
use xaitune::desirability::DesirabilitySpec;
use xaitune::doe::SearchSpace;
use xaitune::tuner::{summarize, tune, EvalContext, Mode, ObjectiveSpec, SmboSettings};
use xaitune::xai::AttributionSettings;

fn main() -> xaitune::Result<()> {
    let seed = std::env::args().nth(1).and_then(|s| s.parse().ok()).unwrap_or(1);
    let splits = RunConfig::default().prepare_data()?;
    let objective = ObjectiveSpec {
        loss_desirability: DesirabilitySpec::minimize(0.1, 0.7, 1.0)?,
        consistency_desirability: DesirabilitySpec::minimize(-1.0, -0.5, 1.0)?,
        ..ObjectiveSpec::with_mode(Mode::Desirability)
    };
    let attribution = AttributionSettings::default();
    let ctx = EvalContext::new(&splits, &objective, &attribution);
    let settings = SmboSettings {
        init: 10,
        budget: 20,
        repeats: 2,
        seed,
        ..SmboSettings::default()
    };

    let run = tune(&SearchSpace::desk(), &settings, &ctx)?;
    for r in &run.records {
        let d = match (r.mse, r.consistency) {
            (Some(m), Some(c)) => objective.overall_desirability(m, c)?,
            _ => f64::NAN,
        };
        println!("{:2} {:?}\tD {d:.3}\t1-D {:.3}", r.index, r.phase, r.objective);
    }
    let (summary, _) = summarize(&run, &ctx)?;
    println!("{}", serde_json::to_string_pretty(&summary)?);
    Ok(())
}
