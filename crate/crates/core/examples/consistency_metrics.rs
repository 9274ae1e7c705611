//! The three consistency metrics on small hand-made attribution tables.

use xaitune::consistency::{all_metrics, spearman_rho, RankBasis};
use xaitune::xai::AttributionMatrix;

fn show(label: &str, rows: Vec<Vec<f64>>) -> xaitune::Result<()> {
    let e = AttributionMatrix::from_rows(rows)?;
    print!("{label:<22}");
    for (metric, value) in all_metrics(&e, RankBasis::Signed)? {
        print!("  {} {value:7.4}", metric.name());
    }
    println!();
    Ok(())
}

fn main() -> xaitune::Result<()> {
    show("agreeing", vec![vec![0.5, 0.2, -0.1], vec![0.6, 0.25, -0.05], vec![0.4, 0.1, -0.2]])?;
    show("one sign flip", vec![vec![0.5, -0.3, 0.1], vec![0.5, 0.3, 0.1], vec![0.5, -0.3, 0.1]])?;
    show("reversed pair", vec![vec![1.0, 2.0, 3.0], vec![3.0, 2.0, 1.0]])?;
    show("max-diff 0.7", vec![vec![0.1, 0.9], vec![0.3, 0.4]])?;
    show("var 2", vec![vec![1.0, 2.0], vec![3.0, 4.0]])?;

    // ties share their average rank
    println!("rho with ties = {:.4}", spearman_rho(&[1.0, 2.0, 2.0, 3.0], &[1.0, 3.0, 2.0, 4.0])?);
    Ok(())
}
