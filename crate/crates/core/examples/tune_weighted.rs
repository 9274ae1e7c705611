//! Equally weighted loss and consistency: minimize `mse - cons_spearman`.
//!
//!     cargo run --release --example tune_weighted -- [seed]

use xaitune::config::RunConfig;
use xaitune::doe::SearchSpace;
use xaitune::tuner::{summarize, tune, EvalContext, Mode, ObjectiveSpec, SmboSettings, Weights};
use xaitune::xai::AttributionSettings;

fn main() -> xaitune::Result<()> {
    let seed = std::env::args().nth(1).and_then(|s| s.parse().ok()).unwrap_or(1);
    let splits = RunConfig::default().prepare_data()?;
    let objective = ObjectiveSpec {
        weights: Weights {
            loss: 1.0,
            consistency: 1.0,
        },
        ..ObjectiveSpec::with_mode(Mode::Weighted)
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
        println!(
            "{:2} {:?}\tmse {:.4}\tcons {:.3}\tobjective {:.4}",
            r.index,
            r.phase,
            r.mse.unwrap_or(f64::NAN),
            r.consistency.unwrap_or(f64::NAN),
            r.objective
        );
    }
    let (summary, _) = summarize(&run, &ctx)?;
    println!("{}", serde_json::to_string_pretty(&summary)?);
    Ok(())
}
