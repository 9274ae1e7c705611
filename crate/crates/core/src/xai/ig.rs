use nalgebra::DMatrix;

use super::Differentiable;
use crate::error::{Error, Result};

/// Integrated gradients with the midpoint rule: gradients at
/// `x' + (k - 0.5) / steps * (x - x')`, `k = 1..=steps`, averaged and scaled
/// by `x - x'`.
pub fn integrated_gradients<M: Differentiable>(
    model: &M,
    x: &[f64],
    baseline: &[f64],
    steps: usize,
) -> Result<Vec<f64>> {
    let xm = DMatrix::from_column_slice(x.len(), 1, x);
    let out = integrated_gradients_batch(model, &xm, baseline, steps)?;
    Ok(out.column(0).iter().copied().collect())
}

/// Integrated gradients for every column of `x`.
pub fn integrated_gradients_batch<M: Differentiable>(
    model: &M,
    x: &DMatrix<f64>,
    baseline: &[f64],
    steps: usize,
) -> Result<DMatrix<f64>> {
    let m = model.input_dim();
    if steps < 1 {
        return Err(Error::config("integrated gradients needs at least one step"));
    }
    if x.nrows() != m || baseline.len() != m {
        return Err(Error::Shape(format!(
            "model expects {m} features, got input {} and baseline {}",
            x.nrows(),
            baseline.len()
        )));
    }
    let n = x.ncols();
    let mut out = DMatrix::zeros(m, n);
    let alphas: Vec<f64> = (1..=steps).map(|k| (k as f64 - 0.5) / steps as f64).collect();
    let path = DMatrix::from_fn(m, n * steps, |i, col| {
        let (c, k) = (col / steps, col % steps);
        baseline[i] + alphas[k] * (x[(i, c)] - baseline[i])
    });
    let grads = model.input_gradient_columns(&path);
    for c in 0..n {
        let block = grads.columns(c * steps, steps);
        for i in 0..m {
            let mean_grad = block.row(i).sum() / steps as f64;
            out[(i, c)] = (x[(i, c)] - baseline[i]) * mean_grad;
        }
    }
    Ok(out)
}
