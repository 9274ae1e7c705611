use nalgebra::DMatrix;
use rand::seq::SliceRandom;
use rand::Rng;

use super::{rows_to_matrix, Mlp, MlpConfig, OptimizerState};
use crate::data::Dataset;
use crate::error::{Error, Result};
use crate::seed;

#[derive(Debug, Clone, PartialEq)]
pub struct TrainReport {
    /// Mean training loss per completed epoch (train mode, with dropout).
    pub epoch_losses: Vec<f64>,
    /// Set when a non-finite loss stopped training early.
    pub diverged: bool,
}

/// Per-layer parameter gradients, shaped like the layer weights and biases.
#[derive(Debug, Clone)]
pub struct Gradients {
    pub w: Vec<DMatrix<f64>>,
    pub b: Vec<DMatrix<f64>>,
}

/// Forward in train mode and backpropagate the MSE of one minibatch.
/// Returns the batch loss and the gradients.
pub(crate) fn batch_gradients(
    model: &Mlp,
    x: &DMatrix<f64>,
    y: &[f64],
    rng: &mut impl Rng,
    train_mode: bool,
) -> (f64, Gradients) {
    let last = model.layers.len() - 1;
    let batch = x.ncols();
    let keep = 1.0 - model.dropout;
    let use_dropout = train_mode && model.dropout > 0.0;

    let mut zs: Vec<DMatrix<f64>> = Vec::with_capacity(model.layers.len());
    let mut masks: Vec<Option<DMatrix<f64>>> = Vec::with_capacity(last);
    let mut acts: Vec<DMatrix<f64>> = vec![x.clone()];
    for (l, layer) in model.layers.iter().enumerate() {
        let z = layer.affine(&acts[l]);
        if l < last {
            let mut a = z.map(|v| model.activation.apply(v));
            if use_dropout {
                let mask = DMatrix::from_fn(a.nrows(), a.ncols(), |_, _| {
                    if rng.random::<f64>() < keep {
                        1.0 / keep
                    } else {
                        0.0
                    }
                });
                a.component_mul_assign(&mask);
                masks.push(Some(mask));
            } else {
                masks.push(None);
            }
            acts.push(a);
        } else {
            acts.push(z.clone());
        }
        zs.push(z);
    }

    let out = &acts[last + 1];
    let mut loss = 0.0;
    let mut delta = DMatrix::zeros(1, batch);
    for j in 0..batch {
        let r = out[(0, j)] - y[j];
        loss += r * r;
        delta[(0, j)] = 2.0 * r / batch as f64;
    }
    loss /= batch as f64;

    let mut gw = vec![DMatrix::zeros(0, 0); model.layers.len()];
    let mut gb = vec![DMatrix::zeros(0, 0); model.layers.len()];
    for l in (0..=last).rev() {
        if l < last {
            if let Some(mask) = &masks[l] {
                delta.component_mul_assign(mask);
            }
            delta.zip_apply(&zs[l], |d, z| *d *= model.activation.derivative(z));
        }
        gw[l] = &delta * acts[l].transpose();
        gb[l] = DMatrix::from_iterator(delta.nrows(), 1, delta.row_iter().map(|r| r.sum()));
        if l > 0 {
            delta = model.layers[l].w.transpose() * &delta;
        }
    }
    (loss, Gradients { w: gw, b: gb })
}

/// Gradient of the eval-mode MSE over the columns of `x` with respect to
/// every weight and bias. Returns the loss alongside.
pub fn parameter_gradients(model: &Mlp, x: &DMatrix<f64>, y: &[f64]) -> Result<(f64, Gradients)> {
    if x.nrows() != model.input_dim() || x.ncols() != y.len() || y.is_empty() {
        return Err(Error::config(format!(
            "gradient batch is {}x{} with {} targets, model expects {} inputs",
            x.nrows(),
            x.ncols(),
            y.len(),
            model.input_dim()
        )));
    }
    Ok(batch_gradients(model, x, y, &mut seed::rng(0), false))
}

/// Minibatch training on MSE with per-epoch reshuffling. The last partial
/// batch is kept.
pub fn train(model: &mut Mlp, data: &Dataset, config: &MlpConfig) -> Result<TrainReport> {
    if data.is_empty() {
        return Err(Error::config("cannot train on an empty dataset"));
    }
    if data.width() != model.input_dim() {
        return Err(Error::Shape(format!(
            "network expects {} features, data has {}",
            model.input_dim(),
            data.width()
        )));
    }
    if data.targets.iter().any(|t| !t.is_finite()) {
        return Err(Error::Numerical("non-finite training targets".into()));
    }
    if config.batch_size == 0 {
        return Err(Error::config("batch size must be at least 1"));
    }
    let x_all = rows_to_matrix(&data.features)?;
    let n = data.len();
    let sizes: Vec<usize> = model
        .layers
        .iter()
        .flat_map(|l| [l.w.len(), l.b.len()])
        .collect();
    let mut opt = OptimizerState::new(config.optimizer, config.learning_rate(), &sizes);
    let mut shuffle_rng = seed::rng(seed::derive(config.seed, &[0x5_4FF1E]));
    let mut dropout_rng = seed::rng(seed::derive(config.seed, &[0xD40_9017]));
    let mut order: Vec<usize> = (0..n).collect();
    let mut report = TrainReport {
        epoch_losses: Vec::with_capacity(config.epochs),
        diverged: false,
    };

    for _ in 0..config.epochs {
        order.shuffle(&mut shuffle_rng);
        let mut epoch_loss = 0.0;
        for chunk in order.chunks(config.batch_size) {
            let x = x_all.select_columns(chunk);
            let y: Vec<f64> = chunk.iter().map(|&i| data.targets[i]).collect();
            let (loss, grads) = batch_gradients(model, &x, &y, &mut dropout_rng, true);
            if !loss.is_finite() {
                report.diverged = true;
                return Ok(report);
            }
            epoch_loss += loss * chunk.len() as f64;
            let mut params: Vec<&mut [f64]> = model
                .layers
                .iter_mut()
                .flat_map(|l| [l.w.as_mut_slice(), l.b.as_mut_slice()])
                .collect();
            let grad_slices: Vec<&[f64]> = grads
                .w
                .iter()
                .zip(&grads.b)
                .flat_map(|(w, b)| [w.as_slice(), b.as_slice()])
                .collect();
            opt.step(&mut params, &grad_slices);
        }
        let epoch_loss = epoch_loss / n as f64;
        report.epoch_losses.push(epoch_loss);
        let params_finite = model
            .layers
            .iter()
            .all(|l| l.w.iter().chain(l.b.iter()).all(|v| v.is_finite()));
        if !epoch_loss.is_finite() || !params_finite {
            report.diverged = true;
            return Ok(report);
        }
    }
    Ok(report)
}
