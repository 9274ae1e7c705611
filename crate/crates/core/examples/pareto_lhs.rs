//! Evaluate a Latin hypercube of designs for both objectives and extract
//! the Pareto front. Prints every point as `mse,consistency,front`, ready
//! for a scatter plot; designs with MSE above 3 are left out.
//!
//!     cargo run --release --example pareto_lhs -- [n]

use xaitune::config::RunConfig;
use xaitune::doe::SearchSpace;
use xaitune::tuner::{evaluate_lhs, pareto_front, EvalContext, Mode, ObjectiveSpec};
use xaitune::xai::AttributionSettings;

fn main() -> xaitune::Result<()> {
    let n = std::env::args().nth(1).and_then(|s| s.parse().ok()).unwrap_or(100);
    let splits = RunConfig::default().prepare_data()?;
    let objective = ObjectiveSpec::with_mode(Mode::Weighted);
    let attribution = AttributionSettings::default();
    let ctx = EvalContext::new(&splits, &objective, &attribution);

    let records = evaluate_lhs(n, &SearchSpace::desk(), 1, 5, &ctx)?;
    let shown: Vec<_> = records.into_iter().filter(|r| r.mse.is_some_and(|m| m <= 3.0)).collect();
    let front = pareto_front(&shown, objective.metric)?;
    let on_front: Vec<usize> = front.iter().map(|r| r.index).collect();

    println!("index,mse,consistency,front");
    for r in &shown {
        println!(
            "{},{:.5},{:.4},{}",
            r.index,
            r.mse.unwrap_or_default(),
            r.consistency.unwrap_or_default(),
            on_front.contains(&r.index)
        );
    }
    eprintln!("{} of {} designs on the front", front.len(), shown.len());
    Ok(())
}
