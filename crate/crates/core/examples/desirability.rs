//! Desirability ramps and their geometric-mean combination.

use xaitune::desirability::{d_max, d_min, d_target, overall_desirability, DesirabilitySpec};

fn main() -> xaitune::Result<()> {
    // loss: fully acceptable below 0.1, unacceptable above 0.7
    for mse in [0.05, 0.1, 0.25, 0.4, 0.7, 0.8] {
        println!("d_min(mse = {mse:.2}) = {:.3}", d_min(mse, 0.1, 0.7, 1.0)?);
    }

    // consistency enters negated: -1 is ideal, above -0.5 is unacceptable
    let cons = DesirabilitySpec::minimize(-1.0, -0.5, 1.0)?;
    for c in [1.0, 0.9, 0.75, 0.5, 0.3] {
        println!("consistency {c:.2} -> d = {:.3}", cons.evaluate(-c)?);
    }

    // curvature: s > 1 is stricter, s < 1 more lenient
    for s in [0.5, 1.0, 2.0] {
        println!("d_max(0.5; 0, 1, s = {s}) = {:.3}", d_max(0.5, 0.0, 1.0, s)?);
    }
    println!("d_target(4; 0, 10, target 5) = {:.3}", d_target(4.0, 0.0, 10.0, 5.0, 1.0, 1.0)?);

    // one zero vetoes everything
    println!("D(0.9, 0.8) = {:.4}", overall_desirability(&[0.9, 0.8])?);
    println!("D(0.9, 0.0) = {:.4}", overall_desirability(&[0.9, 0.0])?);
    Ok(())
}
