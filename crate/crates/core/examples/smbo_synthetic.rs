//! The tuning loop on a cheap function: minimize (x - 0.3)^2 on [0, 1].

use xaitune::doe::{Dim, SearchSpace};
use xaitune::tuner::{smbo_minimize, SmboSettings};

fn main() -> xaitune::Result<()> {
    let space = SearchSpace::new(vec![Dim::continuous("x", 0.0, 1.0)])?;
    let settings = SmboSettings {
        init: 5,
        budget: 15,
        seed: 11,
        ..SmboSettings::default()
    };
    let trace = smbo_minimize(&space, &settings, |_, p| Ok(Some((p.raw[0] - 0.3).powi(2))))?;

    let mut best = f64::INFINITY;
    for (i, t) in trace.iter().enumerate() {
        best = best.min(t.value);
        println!("{i:2} {:?}\tx = {:.4}\tf = {:.2e}\tbest = {best:.2e}", t.phase, t.point.raw[0], t.value);
    }
    Ok(())
}
