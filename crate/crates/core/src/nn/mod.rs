//! Dense regression network with dropout, trained by minibatch backprop.
//!
//! Activations are stored column-per-sample: a batch of `B` inputs of width
//! `m` is an `m x B` matrix.

mod io;
mod optim;
mod train;

pub use io::{read_weights, write_weights, WeightFormat};
pub use optim::{OptimizerKind, OptimizerState};
pub use train::{parameter_gradients, train, Gradients, TrainReport};

use nalgebra::{DMatrix, DVector};
use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::doe::{Assignment, Value};
use crate::error::{Error, Result};
use crate::seed;

/// Hidden-layer nonlinearity.
///
/// At kinks the derivative takes a fixed one-sided value: ReLU uses 0 at
/// `z = 0`, LeakyReLU uses the negative-side slope 0.01.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Activation {
    ReLU,
    LeakyReLU,
    ELU,
    Swish,
}

pub const LEAKY_SLOPE: f64 = 0.01;
pub const ELU_ALPHA: f64 = 1.0;

impl Activation {
    pub const ALL: [Activation; 4] = [
        Activation::ReLU,
        Activation::LeakyReLU,
        Activation::ELU,
        Activation::Swish,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Activation::ReLU => "ReLU",
            Activation::LeakyReLU => "LeakyReLU",
            Activation::ELU => "ELU",
            Activation::Swish => "Swish",
        }
    }

    pub fn from_name(name: &str) -> Result<Self> {
        Self::ALL
            .into_iter()
            .find(|a| a.name().eq_ignore_ascii_case(name))
            .ok_or_else(|| Error::config(format!("unknown activation `{name}`")))
    }

    #[inline]
    pub fn apply(self, z: f64) -> f64 {
        match self {
            Activation::ReLU => z.max(0.0),
            Activation::LeakyReLU => {
                if z > 0.0 {
                    z
                } else {
                    LEAKY_SLOPE * z
                }
            }
            Activation::ELU => {
                if z > 0.0 {
                    z
                } else {
                    ELU_ALPHA * z.exp_m1()
                }
            }
            Activation::Swish => z * sigmoid(z),
        }
    }

    #[inline]
    pub fn derivative(self, z: f64) -> f64 {
        match self {
            Activation::ReLU => {
                if z > 0.0 {
                    1.0
                } else {
                    0.0
                }
            }
            Activation::LeakyReLU => {
                if z > 0.0 {
                    1.0
                } else {
                    LEAKY_SLOPE
                }
            }
            Activation::ELU => {
                if z > 0.0 {
                    1.0
                } else {
                    ELU_ALPHA * z.exp()
                }
            }
            Activation::Swish => {
                let s = sigmoid(z);
                s + z * s * (1.0 - s)
            }
        }
    }
}

#[inline]
fn sigmoid(z: f64) -> f64 {
    if z >= 0.0 {
        1.0 / (1.0 + (-z).exp())
    } else {
        let e = z.exp();
        e / (1.0 + e)
    }
}

/// Tunable settings of the regression network.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MlpConfig {
    pub l1: usize,
    pub epochs: usize,
    pub batch_size: usize,
    pub dropout: f64,
    pub activation: Activation,
    pub optimizer: OptimizerKind,
    pub lr_multiplier: f64,
    pub seed: u64,
}

impl MlpConfig {
    pub fn validate(&self) -> Result<()> {
        if self.l1 < 4 {
            return Err(Error::config(format!("l1 must be at least 4, got {}", self.l1)));
        }
        if self.batch_size < 1 {
            return Err(Error::config("batch size must be at least 1"));
        }
        if !(0.0..=0.4).contains(&self.dropout) {
            return Err(Error::config(format!("dropout must lie in [0, 0.4], got {}", self.dropout)));
        }
        if !(0.1..=5.0).contains(&self.lr_multiplier) {
            return Err(Error::config(format!(
                "learning-rate multiplier must lie in [0.1, 5], got {}",
                self.lr_multiplier
            )));
        }
        Ok(())
    }

    /// Learning rate actually used: the optimizer's base rate times the multiplier.
    pub fn learning_rate(&self) -> f64 {
        self.optimizer.base_rate() * self.lr_multiplier
    }

    /// Read the hyperparameters out of a realized design point.
    pub fn from_assignment(a: &Assignment, seed: u64) -> Result<Self> {
        let int = |name: &str| match a.get(name) {
            Some(Value::Int(v)) if *v > 0 => Ok(*v as usize),
            other => Err(Error::config(format!("`{name}` must be a positive integer, got {other:?}"))),
        };
        let real = |name: &str| match a.get(name).and_then(Value::as_f64) {
            Some(v) => Ok(v),
            None => Err(Error::config(format!("`{name}` must be numeric"))),
        };
        let level = |name: &str| match a.get(name) {
            Some(Value::Level(s)) => Ok(s.clone()),
            other => Err(Error::config(format!("`{name}` must be a level, got {other:?}"))),
        };
        let cfg = MlpConfig {
            l1: int("l1")?,
            epochs: int("epochs")?,
            batch_size: int("batch_size")?,
            dropout: real("dropout")?,
            activation: Activation::from_name(&level("activation")?)?,
            optimizer: OptimizerKind::from_name(&level("optimizer")?)?,
            lr_multiplier: real("lr_multiplier")?,
            seed,
        };
        cfg.validate()?;
        Ok(cfg)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Dense {
    /// `out x in`
    pub w: DMatrix<f64>,
    pub b: DVector<f64>,
}

impl Dense {
    pub fn zeros(input: usize, output: usize) -> Self {
        Dense {
            w: DMatrix::zeros(output, input),
            b: DVector::zeros(output),
        }
    }

    pub fn input(&self) -> usize {
        self.w.ncols()
    }

    pub fn output(&self) -> usize {
        self.w.nrows()
    }

    fn affine(&self, a: &DMatrix<f64>) -> DMatrix<f64> {
        let mut z = &self.w * a;
        for mut col in z.column_iter_mut() {
            col += &self.b;
        }
        z
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Mode {
    Train,
    Eval,
}

/// Feed-forward network: every layer but the last is followed by the
/// activation and dropout; the last layer is linear.
#[derive(Debug, Clone, PartialEq)]
pub struct Mlp {
    pub layers: Vec<Dense>,
    pub activation: Activation,
    pub dropout: f64,
}

/// Per-layer values of one eval-mode forward pass.
#[derive(Debug, Clone)]
pub struct ForwardTrace {
    /// Pre-activations of every layer (the last entry is the output).
    pub z: Vec<DMatrix<f64>>,
    /// `a[0]` is the input; `a[l + 1]` is the post-activation of layer `l`.
    pub a: Vec<DMatrix<f64>>,
}

/// Hidden widths `[l1, l1/2, l1/2, l1/4]`.
pub fn hidden_widths(l1: usize) -> [usize; 4] {
    [l1, l1 / 2, l1 / 2, l1 / 4]
}

impl Mlp {
    /// The four-hidden-layer regression network for `config`, weights drawn
    /// uniformly from `±sqrt(1 / fan_in)`.
    pub fn build(config: &MlpConfig, input_dim: usize) -> Result<Self> {
        if config.l1 < 4 {
            return Err(Error::config(format!("l1 must be at least 4, got {}", config.l1)));
        }
        let mut widths = vec![input_dim];
        widths.extend(hidden_widths(config.l1));
        widths.push(1);
        Self::with_widths(&widths, config.activation, config.dropout, config.seed)
    }

    /// Arbitrary layer stack `widths[0] -> ... -> widths[last]`.
    pub fn with_widths(widths: &[usize], activation: Activation, dropout: f64, seed: u64) -> Result<Self> {
        if widths.len() < 2 || widths.iter().any(|w| *w == 0) {
            return Err(Error::config(format!("invalid layer widths {widths:?}")));
        }
        if !(0.0..1.0).contains(&dropout) {
            return Err(Error::config(format!("dropout must lie in [0, 1), got {dropout}")));
        }
        let mut rng = seed::rng(seed::derive(seed, &[0x1417]));
        let layers = widths
            .windows(2)
            .map(|w| {
                let bound = (1.0 / w[0] as f64).sqrt();
                let mut draw = || rng.random_range(-bound..=bound);
                let weights = DMatrix::from_fn(w[1], w[0], |_, _| draw());
                let bias = DVector::from_fn(w[1], |_, _| draw());
                Dense { w: weights, b: bias }
            })
            .collect();
        Ok(Mlp {
            layers,
            activation,
            dropout,
        })
    }

    pub fn from_layers(layers: Vec<Dense>, activation: Activation, dropout: f64) -> Result<Self> {
        if layers.is_empty() || layers.last().map(Dense::output) != Some(1) {
            return Err(Error::Shape("network needs a final single-unit layer".into()));
        }
        if layers.windows(2).any(|p| p[0].output() != p[1].input()) {
            return Err(Error::Shape("consecutive layer widths do not match".into()));
        }
        if layers.iter().any(|l| l.b.len() != l.output()) {
            return Err(Error::Shape("bias length does not match layer output".into()));
        }
        Ok(Mlp {
            layers,
            activation,
            dropout,
        })
    }

    pub fn input_dim(&self) -> usize {
        self.layers[0].input()
    }

    /// Units per layer, including the output unit.
    pub fn layer_sizes(&self) -> Vec<usize> {
        self.layers.iter().map(Dense::output).collect()
    }

    pub fn parameter_count(&self) -> usize {
        self.layers.iter().map(|l| l.w.len() + l.b.len()).sum()
    }

    fn check_width(&self, rows: usize) -> Result<()> {
        if rows != self.input_dim() {
            return Err(Error::Shape(format!(
                "network expects {} features, got {rows}",
                self.input_dim()
            )));
        }
        Ok(())
    }

    /// Forward a batch (`features x batch`). Dropout is applied only in
    /// train mode, with inverted scaling `1 / (1 - p)`.
    pub fn forward(&self, x: &DMatrix<f64>, mode: Mode, rng: &mut impl Rng) -> Result<DVector<f64>> {
        self.check_width(x.nrows())?;
        let last = self.layers.len() - 1;
        let mut a = x.clone();
        for (l, layer) in self.layers.iter().enumerate() {
            let mut z = layer.affine(&a);
            if l < last {
                z.apply(|v| *v = self.activation.apply(*v));
                if mode == Mode::Train && self.dropout > 0.0 {
                    let keep = 1.0 - self.dropout;
                    z.apply(|v| {
                        *v = if rng.random::<f64>() < keep { *v / keep } else { 0.0 };
                    });
                }
            }
            a = z;
        }
        Ok(DVector::from_iterator(a.ncols(), a.row(0).iter().copied()))
    }

    /// Deterministic prediction for a batch of rows.
    pub fn predict_rows(&self, rows: &[Vec<f64>]) -> Result<Vec<f64>> {
        if rows.is_empty() {
            return Ok(Vec::new());
        }
        let x = rows_to_matrix(rows)?;
        let out = self.forward(&x, Mode::Eval, &mut seed::rng(0))?;
        Ok(out.iter().copied().collect())
    }

    pub fn predict_one(&self, x: &[f64]) -> Result<f64> {
        self.check_width(x.len())?;
        let m = DMatrix::from_column_slice(x.len(), 1, x);
        Ok(self.forward(&m, Mode::Eval, &mut seed::rng(0))?[0])
    }

    /// Eval-mode forward pass keeping every layer's values.
    pub fn trace(&self, x: &DMatrix<f64>) -> Result<ForwardTrace> {
        self.check_width(x.nrows())?;
        let last = self.layers.len() - 1;
        let mut zs = Vec::with_capacity(self.layers.len());
        let mut acts = vec![x.clone()];
        for (l, layer) in self.layers.iter().enumerate() {
            let z = layer.affine(&acts[l]);
            let a = if l < last {
                z.map(|v| self.activation.apply(v))
            } else {
                z.clone()
            };
            zs.push(z);
            acts.push(a);
        }
        Ok(ForwardTrace { z: zs, a: acts })
    }

    /// Gradient of the (eval-mode) output with respect to each input column.
    pub fn input_gradients(&self, x: &DMatrix<f64>) -> Result<DMatrix<f64>> {
        let tr = self.trace(x)?;
        let last = self.layers.len() - 1;
        let mut delta = DMatrix::from_element(1, x.ncols(), 1.0);
        for l in (0..=last).rev() {
            if l < last {
                delta.zip_apply(&tr.z[l], |d, z| *d *= self.activation.derivative(z));
            }
            delta = self.layers[l].w.transpose() * &delta;
        }
        Ok(delta)
    }
}

/// Stack rows into a `width x rows` matrix.
pub fn rows_to_matrix(rows: &[Vec<f64>]) -> Result<DMatrix<f64>> {
    let width = rows.first().map(Vec::len).unwrap_or(0);
    if rows.iter().any(|r| r.len() != width) {
        return Err(Error::Shape("rows of unequal width".into()));
    }
    Ok(DMatrix::from_iterator(width, rows.len(), rows.iter().flatten().copied()))
}

/// Mean squared error.
pub fn mse(predictions: &[f64], targets: &[f64]) -> Result<f64> {
    if predictions.len() != targets.len() || predictions.is_empty() {
        return Err(Error::Shape(format!(
            "mse needs equal non-zero lengths, got {} and {}",
            predictions.len(),
            targets.len()
        )));
    }
    Ok(predictions
        .iter()
        .zip(targets)
        .map(|(p, t)| (p - t) * (p - t))
        .sum::<f64>()
        / predictions.len() as f64)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn config(l1: usize, activation: Activation, dropout: f64) -> MlpConfig {
        MlpConfig {
            l1,
            epochs: 1,
            batch_size: 8,
            dropout,
            activation,
            optimizer: OptimizerKind::Adam,
            lr_multiplier: 1.0,
            seed: 7,
        }
    }

    fn random_rows(n: usize, m: usize, seed: u64) -> Vec<Vec<f64>> {
        let mut rng = seed::rng(seed);
        (0..n).map(|_| (0..m).map(|_| rng.random_range(-2.0..2.0)).collect()).collect()
    }

    #[test]
    fn layer_sizes_follow_halving_rule() {
        let m = Mlp::build(&config(32, Activation::ReLU, 0.0), 8).unwrap();
        assert_eq!(m.layer_sizes(), vec![32, 16, 16, 8, 1]);
        assert_eq!(m.input_dim(), 8);
        let m = Mlp::build(&config(4, Activation::ReLU, 0.0), 3).unwrap();
        assert_eq!(m.layer_sizes(), vec![4, 2, 2, 1, 1]);
        assert!(Mlp::build(&config(2, Activation::ReLU, 0.0), 3).is_err());
    }

    #[test]
    fn init_is_seeded_and_bounded() {
        let a = Mlp::build(&config(16, Activation::ELU, 0.1), 5).unwrap();
        let b = Mlp::build(&config(16, Activation::ELU, 0.1), 5).unwrap();
        assert_eq!(a, b);
        for l in &a.layers {
            let bound = (1.0 / l.input() as f64).sqrt();
            assert!(l.w.iter().chain(l.b.iter()).all(|v| v.abs() <= bound));
        }
    }

    #[test]
    fn dropout_zero_train_equals_eval() {
        let m = Mlp::build(&config(16, Activation::Swish, 0.0), 4).unwrap();
        let x = rows_to_matrix(&random_rows(10, 4, 1)).unwrap();
        let t = m.forward(&x, Mode::Train, &mut seed::rng(3)).unwrap();
        let e = m.forward(&x, Mode::Eval, &mut seed::rng(4)).unwrap();
        assert_eq!(t, e);
    }

    #[test]
    fn zero_network_outputs_zero() {
        let mut m = Mlp::build(&config(8, Activation::ELU, 0.2), 3).unwrap();
        for l in &mut m.layers {
            l.w.fill(0.0);
            l.b.fill(0.0);
        }
        assert!(m.predict_rows(&random_rows(5, 3, 2)).unwrap().iter().all(|v| *v == 0.0));
    }

    #[test]
    fn eval_is_deterministic() {
        let m = Mlp::build(&config(8, Activation::LeakyReLU, 0.3), 3).unwrap();
        let rows = random_rows(6, 3, 5);
        assert_eq!(m.predict_rows(&rows).unwrap(), m.predict_rows(&rows).unwrap());
    }

    #[test]
    fn shape_mismatch() {
        let m = Mlp::build(&config(8, Activation::ReLU, 0.0), 3).unwrap();
        assert!(m.predict_rows(&random_rows(2, 4, 0)).is_err());
        assert!(m.predict_one(&[1.0]).is_err());
    }

    #[test]
    fn dropout_preserves_expected_preactivation() {
        // One hidden layer feeding a linear read-out: the expected train-mode
        // output equals the eval-mode output under inverted dropout.
        let m = Mlp::with_widths(&[3, 6, 1], Activation::Swish, 0.3, 11).unwrap();
        let x = DMatrix::from_column_slice(3, 1, &[0.4, -1.0, 0.7]);
        let eval = m.forward(&x, Mode::Eval, &mut seed::rng(0)).unwrap()[0];
        let reps = 200_000;
        let batch = DMatrix::from_fn(3, reps, |r, _| x[(r, 0)]);
        let train = m.forward(&batch, Mode::Train, &mut seed::rng(12)).unwrap();
        let bias = m.layers[1].b[0];
        let mc = train.mean() - bias;
        assert!((mc - (eval - bias)).abs() <= 0.01 * (eval - bias).abs(), "mc {mc} eval {}", eval - bias);
    }

    #[test]
    fn input_gradient_matches_finite_differences() {
        for act in Activation::ALL {
            let m = Mlp::build(&config(8, act, 0.0), 4).unwrap();
            let x = random_rows(1, 4, 9).remove(0);
            let g = m.input_gradients(&rows_to_matrix(&[x.clone()]).unwrap()).unwrap();
            for i in 0..4 {
                let h = 1e-6;
                let mut up = x.clone();
                up[i] += h;
                let mut dn = x.clone();
                dn[i] -= h;
                let fd = (m.predict_one(&up).unwrap() - m.predict_one(&dn).unwrap()) / (2.0 * h);
                assert!((fd - g[(i, 0)]).abs() < 1e-6, "{act:?} feature {i}");
            }
        }
    }

    #[test]
    fn mse_examples() {
        assert_eq!(mse(&[1.0, 2.0], &[1.0, 2.0]).unwrap(), 0.0);
        assert_eq!(mse(&[0.0, 0.0], &[1.0, 3.0]).unwrap(), 5.0);
        assert_eq!(mse(&[0.5], &[2.0]).unwrap(), 2.25);
        assert!(mse(&[1.0], &[1.0, 2.0]).is_err());
        assert!(mse(&[], &[]).is_err());
    }

    #[test]
    fn config_from_assignment() {
        let space = crate::doe::SearchSpace::full();
        let a = space.realize(&[8.0, 9.0, 7.0, 0.347, 0.1, 3.0, 6.0]).unwrap();
        let c = MlpConfig::from_assignment(&a, 1).unwrap();
        assert_eq!((c.l1, c.epochs, c.batch_size), (256, 512, 128));
        assert_eq!(c.activation, Activation::Swish);
        assert_eq!(c.optimizer, OptimizerKind::RMSprop);
        assert!((c.learning_rate() - 0.001).abs() < 1e-15);
    }
}
