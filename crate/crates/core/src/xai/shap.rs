//! KernelSHAP and brute-force Shapley values with single-baseline masking:
//! a feature absent from a coalition takes its baseline value.

use nalgebra::{Cholesky, DMatrix, DVector, Dyn};
use rand::seq::index;
use rand::Rng;

use super::Predictor;
use crate::error::{Error, Result};
use crate::seed;

/// Up to this many features every proper coalition is enumerated.
pub const MAX_ENUMERATED_FEATURES: usize = 12;
/// Upper limit for the brute-force Shapley computation.
pub const MAX_EXACT_FEATURES: usize = 16;

fn binomial(n: usize, k: usize) -> f64 {
    let k = k.min(n - k);
    (0..k).fold(1.0, |acc, i| acc * (n - i) as f64 / (i + 1) as f64)
}

/// Shapley kernel weight of a coalition of size `s` among `m` features.
pub fn shapley_kernel(m: usize, s: usize) -> f64 {
    (m - 1) as f64 / (binomial(m, s) * s as f64 * (m - s) as f64)
}

/// Coalition design and the factorized weighted normal equations. The
/// efficiency constraint is built in by eliminating the last feature.
pub struct KernelShap {
    m: usize,
    coalitions: Vec<Vec<bool>>,
    weights: Vec<f64>,
    normal: Option<Cholesky<f64, Dyn>>,
    pub enumerated: bool,
}

impl KernelShap {
    /// With `m <= 12` all `2^m - 2` proper coalitions are used and `samples`
    /// is ignored; otherwise `samples` coalitions are drawn from the kernel
    /// distribution (seeded).
    pub fn new(m: usize, samples: usize, seed: u64) -> Result<Self> {
        if m == 0 {
            return Err(Error::config("KernelSHAP needs at least one feature"));
        }
        let (coalitions, weights, enumerated) = if m <= MAX_ENUMERATED_FEATURES {
            let mut cs = Vec::new();
            let mut ws = Vec::new();
            for mask in 1u32..(1u32 << m) - 1 {
                let z: Vec<bool> = (0..m).map(|i| mask >> i & 1 == 1).collect();
                ws.push(shapley_kernel(m, mask.count_ones() as usize));
                cs.push(z);
            }
            (cs, ws, true)
        } else {
            let mut rng = seed::rng(seed);
            let size_weights: Vec<f64> = (1..m).map(|s| (m - 1) as f64 / (s * (m - s)) as f64).collect();
            let total: f64 = size_weights.iter().sum();
            let mut cs = Vec::with_capacity(samples);
            for _ in 0..samples {
                let mut u = rng.random::<f64>() * total;
                let mut size = m - 1;
                for (k, w) in size_weights.iter().enumerate() {
                    if u < *w {
                        size = k + 1;
                        break;
                    }
                    u -= w;
                }
                let mut z = vec![false; m];
                for i in index::sample(&mut rng, m, size) {
                    z[i] = true;
                }
                cs.push(z);
            }
            let n = cs.len();
            (cs, vec![1.0; n], false)
        };

        let normal = if m == 1 {
            None
        } else {
            let k = m - 1;
            let mut a = DMatrix::<f64>::zeros(k, k);
            for (z, &w) in coalitions.iter().zip(&weights) {
                let last = f64::from(u8::from(z[m - 1]));
                let zt: Vec<f64> = (0..k).map(|i| f64::from(u8::from(z[i])) - last).collect();
                for r in 0..k {
                    if zt[r] == 0.0 {
                        continue;
                    }
                    for c in 0..k {
                        a[(r, c)] += w * zt[r] * zt[c];
                    }
                }
            }
            Some(a.cholesky().ok_or_else(|| {
                Error::Numerical(format!(
                    "KernelSHAP regression is singular with {} coalitions; increase the sample budget",
                    coalitions.len()
                ))
            })?)
        };
        Ok(KernelShap {
            m,
            coalitions,
            weights,
            normal,
            enumerated,
        })
    }

    pub fn coalition_count(&self) -> usize {
        self.coalitions.len()
    }

    /// Attributions for every column of `x`.
    pub fn explain_batch<P: Predictor>(&self, model: &P, x: &DMatrix<f64>, baseline: &[f64]) -> Result<DMatrix<f64>> {
        let m = self.m;
        if model.input_dim() != m || x.nrows() != m || baseline.len() != m {
            return Err(Error::Shape(format!(
                "KernelSHAP prepared for {m} features, got model {}, input {}, baseline {}",
                model.input_dim(),
                x.nrows(),
                baseline.len()
            )));
        }
        let n = x.ncols();
        let f0 = model.predict_columns(&DMatrix::from_column_slice(m, 1, baseline))[0];
        let fx = model.predict_columns(x);
        let mut out = DMatrix::zeros(m, n);
        let Some(normal) = &self.normal else {
            for c in 0..n {
                out[(0, c)] = fx[c] - f0;
            }
            return Ok(out);
        };

        let kc = self.coalitions.len();
        let k = m - 1;
        for c in 0..n {
            let masked = DMatrix::from_fn(m, kc, |i, j| if self.coalitions[j][i] { x[(i, c)] } else { baseline[i] });
            let fz = model.predict_columns(&masked);
            let delta = fx[c] - f0;
            let mut rhs = DVector::<f64>::zeros(k);
            for ((z, &w), f) in self.coalitions.iter().zip(&self.weights).zip(&fz) {
                let last = f64::from(u8::from(z[m - 1]));
                let target = (f - f0) - last * delta;
                for i in 0..k {
                    let zt = f64::from(u8::from(z[i])) - last;
                    rhs[i] += w * zt * target;
                }
            }
            let phi = normal.solve(&rhs);
            let mut sum = 0.0;
            for i in 0..k {
                out[(i, c)] = phi[i];
                sum += phi[i];
            }
            out[(k, c)] = delta - sum;
        }
        Ok(out)
    }
}

/// KernelSHAP attribution of a single input.
pub fn kernel_shap<P: Predictor>(model: &P, x: &[f64], baseline: &[f64], samples: usize, seed: u64) -> Result<Vec<f64>> {
    let ks = KernelShap::new(x.len(), samples, seed)?;
    let out = ks.explain_batch(model, &DMatrix::from_column_slice(x.len(), 1, x), baseline)?;
    Ok(out.column(0).iter().copied().collect())
}

/// Shapley values by summing marginal contributions over all subsets.
pub fn exact_shapley<P: Predictor>(model: &P, x: &[f64], baseline: &[f64]) -> Result<Vec<f64>> {
    let m = x.len();
    if m == 0 || m > MAX_EXACT_FEATURES {
        return Err(Error::config(format!(
            "exact Shapley values need 1..={MAX_EXACT_FEATURES} features, got {m}"
        )));
    }
    if baseline.len() != m || model.input_dim() != m {
        return Err(Error::Shape("baseline and model width must match the input".into()));
    }
    let subsets = 1usize << m;
    let masked = DMatrix::from_fn(m, subsets, |i, s| if s >> i & 1 == 1 { x[i] } else { baseline[i] });
    let v = model.predict_columns(&masked);
    let fact: Vec<f64> = (0..=m).scan(1.0, |acc, k| {
        if k > 0 {
            *acc *= k as f64;
        }
        Some(*acc)
    }).collect();
    let weight: Vec<f64> = (0..m).map(|s| fact[s] * fact[m - s - 1] / fact[m]).collect();
    let mut phi = vec![0.0; m];
    for (i, p) in phi.iter_mut().enumerate() {
        let bit = 1usize << i;
        for s in 0..subsets {
            if s & bit == 0 {
                *p += weight[s.count_ones() as usize] * (v[s | bit] - v[s]);
            }
        }
    }
    Ok(phi)
}
