//! Local feature attributions and their aggregation into global profiles.
//!
//! All methods explain the eval-mode output of a regression model relative
//! to a single baseline input.

mod deeplift;
mod ig;
mod matrix;
mod shap;

pub use deeplift::{deeplift, deeplift_batch};
pub use ig::{integrated_gradients, integrated_gradients_batch};
pub use matrix::AttributionMatrix;
pub use shap::{exact_shapley, kernel_shap, KernelShap, MAX_ENUMERATED_FEATURES, MAX_EXACT_FEATURES};

use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::nn::{rows_to_matrix, Mlp};

/// Anything that maps a batch of inputs (`features x batch`) to one output
/// per column.
pub trait Predictor {
    fn input_dim(&self) -> usize;
    fn predict_columns(&self, x: &DMatrix<f64>) -> Vec<f64>;
}

/// A predictor that also exposes input gradients.
pub trait Differentiable: Predictor {
    /// `features x batch` matrix of `d output / d input`.
    fn input_gradient_columns(&self, x: &DMatrix<f64>) -> DMatrix<f64>;
}

impl Predictor for Mlp {
    fn input_dim(&self) -> usize {
        Mlp::input_dim(self)
    }

    fn predict_columns(&self, x: &DMatrix<f64>) -> Vec<f64> {
        let tr = self.trace(x).expect("input width checked by caller");
        tr.a.last().map(|a| a.row(0).iter().copied().collect()).unwrap_or_default()
    }
}

impl Differentiable for Mlp {
    fn input_gradient_columns(&self, x: &DMatrix<f64>) -> DMatrix<f64> {
        self.input_gradients(x).expect("input width checked by caller")
    }
}

/// Wraps a plain function of one input vector.
pub struct FnPredictor<F> {
    pub dim: usize,
    pub f: F,
}

impl<F: Fn(&[f64]) -> f64> Predictor for FnPredictor<F> {
    fn input_dim(&self) -> usize {
        self.dim
    }

    fn predict_columns(&self, x: &DMatrix<f64>) -> Vec<f64> {
        x.column_iter()
            .map(|c| (self.f)(c.as_slice()))
            .collect()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case", tag = "kind", content = "values")]
pub enum Baseline {
    /// All-zero input; in standardized space this is the training mean.
    Zero,
    Explicit(Vec<f64>),
}

impl Default for Baseline {
    fn default() -> Self {
        Baseline::Zero
    }
}

impl Baseline {
    pub fn resolve(&self, width: usize) -> Result<Vec<f64>> {
        match self {
            Baseline::Zero => Ok(vec![0.0; width]),
            Baseline::Explicit(v) if v.len() == width => Ok(v.clone()),
            Baseline::Explicit(v) => Err(Error::config(format!(
                "baseline has {} entries, model expects {width}",
                v.len()
            ))),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Method {
    #[serde(rename = "ig", alias = "integrated_gradients")]
    IntegratedGradients,
    #[serde(rename = "deeplift")]
    DeepLift,
    #[serde(rename = "kernelshap", alias = "kernel_shap")]
    KernelShap,
}

impl Method {
    pub const ALL: [Method; 3] = [Method::IntegratedGradients, Method::DeepLift, Method::KernelShap];

    pub fn label(self) -> &'static str {
        match self {
            Method::IntegratedGradients => "IntegratedGradients",
            Method::DeepLift => "DeepLift",
            Method::KernelShap => "KernelSHAP",
        }
    }

    pub fn from_name(name: &str) -> Result<Self> {
        match name.to_ascii_lowercase().replace(['-', '_'], "").as_str() {
            "ig" | "integratedgradients" => Ok(Method::IntegratedGradients),
            "deeplift" => Ok(Method::DeepLift),
            "kernelshap" | "shap" => Ok(Method::KernelShap),
            _ => Err(Error::config(format!("unknown attribution method `{name}`"))),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct AttributionSettings {
    pub methods: Vec<Method>,
    pub ig_steps: usize,
    /// Coalition budget when there are too many features to enumerate.
    pub shap_samples: usize,
    pub baseline: Baseline,
    /// Explain at most this many rows (the first ones); all rows when unset.
    pub max_rows: Option<usize>,
}

impl Default for AttributionSettings {
    fn default() -> Self {
        AttributionSettings {
            methods: Method::ALL.to_vec(),
            ig_steps: 64,
            shap_samples: 2048,
            baseline: Baseline::Zero,
            max_rows: None,
        }
    }
}

impl AttributionSettings {
    pub fn validate(&self) -> Result<()> {
        if self.methods.is_empty() {
            return Err(Error::config("at least one attribution method is required"));
        }
        if self.ig_steps < 1 {
            return Err(Error::config("integrated gradients needs at least one step"));
        }
        if self.max_rows == Some(0) {
            return Err(Error::config("max_rows must be at least 1"));
        }
        Ok(())
    }
}

/// Fraction of non-finite local attributions above which a method fails.
pub const MAX_EXCLUDED_FRACTION: f64 = 0.05;

const CHUNK: usize = 64;

/// Local attributions for every row (`features x rows`).
pub fn local_attributions(
    model: &Mlp,
    rows: &[Vec<f64>],
    method: Method,
    settings: &AttributionSettings,
    seed: u64,
) -> Result<DMatrix<f64>> {
    let m = model.input_dim();
    let baseline = settings.baseline.resolve(m)?;
    let shap = if method == Method::KernelShap {
        Some(KernelShap::new(m, settings.shap_samples, seed)?)
    } else {
        None
    };
    let mut out = DMatrix::zeros(m, rows.len());
    for (c, chunk) in rows.chunks(CHUNK).enumerate() {
        let x = rows_to_matrix(chunk)?;
        if x.nrows() != m {
            return Err(Error::Shape(format!("model expects {m} features, rows have {}", x.nrows())));
        }
        let attr = match method {
            Method::IntegratedGradients => integrated_gradients_batch(model, &x, &baseline, settings.ig_steps)?,
            Method::DeepLift => deeplift_batch(model, &x, &baseline)?,
            Method::KernelShap => shap.as_ref().expect("constructed above").explain_batch(model, &x, &baseline)?,
        };
        out.columns_mut(c * CHUNK, chunk.len()).copy_from(&attr);
    }
    Ok(out)
}

/// Mean local attribution per feature over `rows`. Rows whose attribution
/// is non-finite are dropped; more than 5% dropped fails the method.
pub fn global_attribution(
    model: &Mlp,
    rows: &[Vec<f64>],
    method: Method,
    settings: &AttributionSettings,
    seed: u64,
) -> Result<Vec<f64>> {
    if rows.is_empty() {
        return Err(Error::config("cannot aggregate attributions over zero rows"));
    }
    let local = local_attributions(model, rows, method, settings, seed)?;
    mean_of_finite_columns(&local, method)
}

fn mean_of_finite_columns(local: &DMatrix<f64>, method: Method) -> Result<Vec<f64>> {
    let total = local.ncols();
    let mut sum = vec![0.0; local.nrows()];
    let mut kept = 0usize;
    for col in local.column_iter() {
        if col.iter().all(|v| v.is_finite()) {
            for (s, v) in sum.iter_mut().zip(col.iter()) {
                *s += v;
            }
            kept += 1;
        }
    }
    let excluded = total - kept;
    if kept == 0 || excluded as f64 > MAX_EXCLUDED_FRACTION * total as f64 {
        return Err(Error::AttributionFailed {
            method: method.label().to_string(),
            excluded,
            total,
        });
    }
    if excluded > 0 {
        log::warn!("{}: excluded {excluded} of {total} non-finite local attributions", method.label());
    }
    Ok(sum.into_iter().map(|s| s / kept as f64).collect())
}

/// One row per method of mean attributions over `rows`.
pub fn attribution_matrix(
    model: &Mlp,
    rows: &[Vec<f64>],
    feature_names: &[String],
    settings: &AttributionSettings,
    seed: u64,
) -> Result<AttributionMatrix> {
    settings.validate()?;
    let rows = &rows[..settings.max_rows.map_or(rows.len(), |k| k.min(rows.len()))];
    let values = settings
        .methods
        .iter()
        .map(|&method| global_attribution(model, rows, method, settings, seed))
        .collect::<Result<Vec<_>>>()?;
    AttributionMatrix::new(
        settings.methods.iter().map(|m| m.label().to_string()).collect(),
        feature_names.to_vec(),
        values,
    )
}
