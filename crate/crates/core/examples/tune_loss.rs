//! Loss-only tuning on the fixture. Consistency is not part of the
//! objective; it is measured afterwards on the best design.
//!
//!     cargo run --release --example tune_loss -- [seed]

use xaitune::config::RunConfig;
use xaitune::doe::SearchSpace;
use xaitune::tuner::{summarize, tune, EvalContext, Mode, ObjectiveSpec, SmboSettings};
use xaitune::xai::AttributionSettings;

fn main() -> xaitune::Result<()> {
    let seed = std::env::args().nth(1).and_then(|s| s.parse().ok()).unwrap_or(1);
    let splits = RunConfig::default().prepare_data()?;
    let objective = ObjectiveSpec::with_mode(Mode::Loss);
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
        println!("{:2} {:?}\tmse {:.4}\tbest {:.4}", r.index, r.phase, r.mse.unwrap_or(f64::NAN), r.best_so_far);
    }
    // nothing was explained during tuning
    assert_eq!(run.attribution_calls, 0);
    assert_eq!(splits.test_reads(), 0);

    let (summary, _) = summarize(&run, &ctx)?;
    println!("{}", serde_json::to_string_pretty(&summary)?);
    Ok(())
}
