//! Latin hypercube over the full hyperparameter space.
//!
//!     cargo run --example lhs_design -- 10

use xaitune::doe::{latin_hypercube, SearchSpace};

fn main() -> xaitune::Result<()> {
    let n = std::env::args().nth(1).and_then(|s| s.parse().ok()).unwrap_or(10);
    let space = SearchSpace::full();
    let design = latin_hypercube(n, &space, 42)?;

    let names: Vec<&str> = space.dims.iter().map(|d| d.name.as_str()).collect();
    println!("{}", names.join("\t"));
    for p in &design {
        let row: Vec<String> = p.concrete.0.iter().map(|(_, v)| match v {
            xaitune::doe::Value::Real(x) => format!("{x:.3}"),
            other => other.to_string(),
        }).collect();
        println!("{}", row.join("\t"));
    }

    // each raw axis is split into n bins holding one point each
    let (lo, hi) = space.dims[0].bounds();
    let mut bins: Vec<usize> = design
        .iter()
        .map(|p| (((p.raw[0] - lo) / (hi - lo) * n as f64) as usize).min(n - 1))
        .collect();
    bins.sort_unstable();
    println!("l1 bins: {bins:?}");
    Ok(())
}
