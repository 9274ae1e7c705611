//! Mixed search spaces and Latin hypercube designs.
//!
//! Every dimension lives on a continuous "raw" axis that the surrogate sees.
//! [`SearchSpace::realize`] maps raw coordinates onto concrete values:
//! integer-exponent dimensions round and exponentiate (`2^x`), categorical
//! dimensions round to a level index, continuous dimensions pass through.

use std::fmt;

use rand::seq::SliceRandom;
use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::seed;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum DimKind {
    Continuous,
    /// Integer exponent `k`, realized as `2^k`.
    IntegerExponent,
    Categorical,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Dim {
    pub name: String,
    pub kind: DimKind,
    #[serde(default)]
    pub lower: f64,
    #[serde(default)]
    pub upper: f64,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub levels: Vec<String>,
}

impl Dim {
    pub fn continuous(name: &str, lower: f64, upper: f64) -> Self {
        Dim {
            name: name.to_string(),
            kind: DimKind::Continuous,
            lower,
            upper,
            levels: Vec::new(),
        }
    }

    pub fn pow2(name: &str, lower: i32, upper: i32) -> Self {
        Dim {
            name: name.to_string(),
            kind: DimKind::IntegerExponent,
            lower: f64::from(lower),
            upper: f64::from(upper),
            levels: Vec::new(),
        }
    }

    pub fn categorical(name: &str, levels: &[&str]) -> Self {
        Dim {
            name: name.to_string(),
            kind: DimKind::Categorical,
            lower: 0.0,
            upper: levels.len().saturating_sub(1) as f64,
            levels: levels.iter().map(|s| s.to_string()).collect(),
        }
    }

    /// Raw-axis bounds. Categorical dims span `[0, levels - 1]`.
    pub fn bounds(&self) -> (f64, f64) {
        match self.kind {
            DimKind::Categorical => (0.0, self.levels.len().saturating_sub(1) as f64),
            _ => (self.lower, self.upper),
        }
    }

    pub fn is_discrete(&self) -> bool {
        self.kind != DimKind::Continuous
    }

    fn validate(&self) -> Result<()> {
        match self.kind {
            DimKind::Categorical => {
                if self.levels.len() < 2 {
                    return Err(Error::config(format!(
                        "categorical dimension `{}` needs at least 2 levels",
                        self.name
                    )));
                }
            }
            _ => {
                if !(self.lower.is_finite() && self.upper.is_finite()) || self.lower >= self.upper
                {
                    return Err(Error::config(format!(
                        "dimension `{}` needs lower < upper, got [{}, {}]",
                        self.name, self.lower, self.upper
                    )));
                }
                if self.kind == DimKind::IntegerExponent
                    && (self.lower.fract() != 0.0 || self.upper.fract() != 0.0)
                {
                    return Err(Error::config(format!(
                        "integer-exponent dimension `{}` needs integer bounds",
                        self.name
                    )));
                }
            }
        }
        Ok(())
    }
}

/// A realized hyperparameter value.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum Value {
    Real(f64),
    Int(i64),
    Level(String),
}

impl Value {
    pub fn as_f64(&self) -> Option<f64> {
        match self {
            Value::Real(v) => Some(*v),
            Value::Int(v) => Some(*v as f64),
            Value::Level(_) => None,
        }
    }
}

impl fmt::Display for Value {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Value::Real(v) => write!(f, "{v}"),
            Value::Int(v) => write!(f, "{v}"),
            Value::Level(s) => f.write_str(s),
        }
    }
}

/// Concrete hyperparameters in the space's dimension order.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Assignment(pub Vec<(String, Value)>);

impl Assignment {
    pub fn get(&self, name: &str) -> Option<&Value> {
        self.0.iter().find(|(n, _)| n == name).map(|(_, v)| v)
    }
}

/// A point of the design: surrogate coordinates plus their realization.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DesignPoint {
    pub raw: Vec<f64>,
    pub concrete: Assignment,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SearchSpace {
    pub dims: Vec<Dim>,
}

pub const ACTIVATIONS: [&str; 4] = ["ReLU", "LeakyReLU", "ELU", "Swish"];
pub const OPTIMIZERS: [&str; 7] = ["Adam", "Adamax", "SGD", "NAdam", "RAdam", "Adagrad", "RMSprop"];

impl SearchSpace {
    pub fn new(dims: Vec<Dim>) -> Result<Self> {
        let space = SearchSpace { dims };
        space.validate()?;
        Ok(space)
    }

    /// The full tuning space for the regression network.
    pub fn full() -> Self {
        SearchSpace {
            dims: vec![
                Dim::pow2("l1", 2, 10),
                Dim::pow2("epochs", 4, 11),
                Dim::pow2("batch_size", 4, 10),
                Dim::continuous("dropout", 0.0, 0.4),
                Dim::continuous("lr_multiplier", 0.1, 5.0),
                Dim::categorical("activation", &ACTIVATIONS),
                Dim::categorical("optimizer", &OPTIMIZERS),
            ],
        }
    }

    /// Same dimensions as [`SearchSpace::full`] with the size-driving
    /// ranges cut down for single-core runs: `l1` in 4..=64, epochs in
    /// 16..=128, batch size in 16..=128.
    pub fn desk() -> Self {
        let mut space = Self::full();
        space.dims[0] = Dim::pow2("l1", 2, 6);
        space.dims[1] = Dim::pow2("epochs", 4, 7);
        space.dims[2] = Dim::pow2("batch_size", 4, 7);
        space
    }

    pub fn validate(&self) -> Result<()> {
        if self.dims.is_empty() {
            return Err(Error::config("search space has no dimensions"));
        }
        for (i, d) in self.dims.iter().enumerate() {
            d.validate()?;
            if self.dims[..i].iter().any(|o| o.name == d.name) {
                return Err(Error::config(format!("duplicate dimension `{}`", d.name)));
            }
        }
        Ok(())
    }

    pub fn len(&self) -> usize {
        self.dims.len()
    }

    pub fn is_empty(&self) -> bool {
        self.dims.is_empty()
    }

    pub fn bounds(&self) -> Vec<(f64, f64)> {
        self.dims.iter().map(Dim::bounds).collect()
    }

    /// Clamp to bounds and round discrete dimensions (half away from zero).
    pub fn canonicalize(&self, raw: &[f64]) -> Vec<f64> {
        self.dims
            .iter()
            .zip(raw)
            .map(|(d, &x)| {
                let (lo, hi) = d.bounds();
                let x = x.clamp(lo, hi);
                if d.is_discrete() {
                    x.round()
                } else {
                    x
                }
            })
            .collect()
    }

    /// Map raw surrogate coordinates to concrete hyperparameter values.
    pub fn realize(&self, raw: &[f64]) -> Result<Assignment> {
        if raw.len() != self.dims.len() {
            return Err(Error::Shape(format!(
                "design point has {} coordinates, space has {} dimensions",
                raw.len(),
                self.dims.len()
            )));
        }
        let mut out = Vec::with_capacity(raw.len());
        for (d, &x) in self.dims.iter().zip(raw) {
            if !x.is_finite() {
                return Err(Error::config(format!(
                    "non-finite coordinate for dimension `{}`",
                    d.name
                )));
            }
            let (lo, hi) = d.bounds();
            if x < lo || x > hi {
                log::warn!(
                    "coordinate {x} for `{}` outside [{lo}, {hi}], clamping",
                    d.name
                );
            }
            let x = x.clamp(lo, hi);
            let value = match d.kind {
                DimKind::Continuous => Value::Real(x),
                DimKind::IntegerExponent => Value::Int(1i64 << (x.round() as i64)),
                DimKind::Categorical => Value::Level(d.levels[x.round() as usize].clone()),
            };
            out.push((d.name.clone(), value));
        }
        Ok(Assignment(out))
    }

    /// Inverse of [`SearchSpace::realize`] for values it can produce.
    pub fn unrealize(&self, concrete: &Assignment) -> Result<Vec<f64>> {
        self.dims
            .iter()
            .map(|d| {
                let v = concrete
                    .get(&d.name)
                    .ok_or_else(|| Error::config(format!("missing value for `{}`", d.name)))?;
                match (d.kind, v) {
                    (DimKind::Continuous, Value::Real(x)) => Ok(*x),
                    (DimKind::IntegerExponent, Value::Int(n)) if *n > 0 && n.count_ones() == 1 => {
                        Ok(f64::from(n.trailing_zeros()))
                    }
                    (DimKind::Categorical, Value::Level(s)) => d
                        .levels
                        .iter()
                        .position(|l| l == s)
                        .map(|i| i as f64)
                        .ok_or_else(|| {
                            Error::config(format!("unknown level `{s}` for `{}`", d.name))
                        }),
                    _ => Err(Error::config(format!(
                        "value {v} does not fit dimension `{}`",
                        d.name
                    ))),
                }
            })
            .collect()
    }

    pub fn point(&self, raw: Vec<f64>) -> Result<DesignPoint> {
        let concrete = self.realize(&raw)?;
        Ok(DesignPoint { raw, concrete })
    }

    /// Uniformly random point, used as a fallback proposal.
    pub fn random_point(&self, rng: &mut impl Rng) -> Result<DesignPoint> {
        let raw = self
            .bounds()
            .into_iter()
            .map(|(lo, hi)| rng.random_range(lo..=hi))
            .collect();
        self.point(raw)
    }
}

/// Latin hypercube design: for every dimension, exactly one of the `n`
/// points falls in each of `n` equal-width bins of the raw range.
pub fn latin_hypercube(n: usize, space: &SearchSpace, seed: u64) -> Result<Vec<DesignPoint>> {
    if n < 1 {
        return Err(Error::config("latin hypercube needs at least one point"));
    }
    space.validate()?;
    let mut rng = seed::rng(seed);
    let mut columns = Vec::with_capacity(space.len());
    for (lo, hi) in space.bounds() {
        let mut strata: Vec<usize> = (0..n).collect();
        strata.shuffle(&mut rng);
        let width = (hi - lo) / n as f64;
        let col: Vec<f64> = strata
            .into_iter()
            .map(|k| {
                let u: f64 = rng.random();
                (lo + (k as f64 + u) * width).clamp(lo, hi)
            })
            .collect();
        columns.push(col);
    }
    (0..n)
        .map(|i| space.point(columns.iter().map(|c| c[i]).collect()))
        .collect()
}
