//! First-order update rules operating on flat parameter slices.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum OptimizerKind {
    Adam,
    Adamax,
    SGD,
    NAdam,
    RAdam,
    Adagrad,
    RMSprop,
}

const BETA1: f64 = 0.9;
const BETA2: f64 = 0.999;
const EPS: f64 = 1e-8;
const RMS_ALPHA: f64 = 0.99;
const ADAGRAD_EPS: f64 = 1e-10;
const NADAM_MOMENTUM_DECAY: f64 = 0.004;

impl OptimizerKind {
    pub const ALL: [OptimizerKind; 7] = [
        OptimizerKind::Adam,
        OptimizerKind::Adamax,
        OptimizerKind::SGD,
        OptimizerKind::NAdam,
        OptimizerKind::RAdam,
        OptimizerKind::Adagrad,
        OptimizerKind::RMSprop,
    ];

    pub fn name(self) -> &'static str {
        match self {
            OptimizerKind::Adam => "Adam",
            OptimizerKind::Adamax => "Adamax",
            OptimizerKind::SGD => "SGD",
            OptimizerKind::NAdam => "NAdam",
            OptimizerKind::RAdam => "RAdam",
            OptimizerKind::Adagrad => "Adagrad",
            OptimizerKind::RMSprop => "RMSprop",
        }
    }

    pub fn from_name(name: &str) -> Result<Self> {
        Self::ALL
            .into_iter()
            .find(|o| o.name().eq_ignore_ascii_case(name))
            .ok_or_else(|| Error::config(format!("unknown optimizer `{name}`")))
    }

    /// Learning rate at multiplier 1.
    pub fn base_rate(self) -> f64 {
        match self {
            OptimizerKind::Adam | OptimizerKind::RAdam => 0.001,
            OptimizerKind::Adamax | OptimizerKind::NAdam => 0.002,
            OptimizerKind::SGD | OptimizerKind::Adagrad | OptimizerKind::RMSprop => 0.01,
        }
    }
}

/// Optimizer with per-parameter state for a fixed list of tensors.
#[derive(Debug, Clone)]
pub struct OptimizerState {
    pub kind: OptimizerKind,
    pub lr: f64,
    step: u64,
    /// First moment / Adagrad accumulator / RMS average.
    m: Vec<Vec<f64>>,
    /// Second moment / Adamax infinity norm.
    v: Vec<Vec<f64>>,
    nadam_mu_product: f64,
}

impl OptimizerState {
    pub fn new(kind: OptimizerKind, lr: f64, sizes: &[usize]) -> Self {
        OptimizerState {
            kind,
            lr,
            step: 0,
            m: sizes.iter().map(|&n| vec![0.0; n]).collect(),
            v: sizes.iter().map(|&n| vec![0.0; n]).collect(),
            nadam_mu_product: 1.0,
        }
    }

    /// Apply one update to every tensor. `params[i]` and `grads[i]` must
    /// have the size given at construction.
    pub fn step(&mut self, params: &mut [&mut [f64]], grads: &[&[f64]]) {
        self.step += 1;
        let t = self.step as f64;
        let lr = self.lr;
        let bc1 = 1.0 - BETA1.powf(t);
        let bc2 = 1.0 - BETA2.powf(t);

        // NAdam momentum schedule
        let (mu_t, mu_next, prod_t, prod_next) = if self.kind == OptimizerKind::NAdam {
            let mu_t = BETA1 * (1.0 - 0.5 * 0.96f64.powf(t * NADAM_MOMENTUM_DECAY));
            let mu_next = BETA1 * (1.0 - 0.5 * 0.96f64.powf((t + 1.0) * NADAM_MOMENTUM_DECAY));
            self.nadam_mu_product *= mu_t;
            (mu_t, mu_next, self.nadam_mu_product, self.nadam_mu_product * mu_next)
        } else {
            (0.0, 0.0, 1.0, 1.0)
        };

        // RAdam rectification
        let rho_inf = 2.0 / (1.0 - BETA2) - 1.0;
        let rho_t = rho_inf - 2.0 * t * BETA2.powf(t) / bc2;
        let radam_rect = if rho_t > 5.0 {
            Some(((rho_t - 4.0) * (rho_t - 2.0) * rho_inf / ((rho_inf - 4.0) * (rho_inf - 2.0) * rho_t)).sqrt())
        } else {
            None
        };

        for (k, (p, g)) in params.iter_mut().zip(grads).enumerate() {
            let m = &mut self.m[k];
            let v = &mut self.v[k];
            for i in 0..p.len() {
                let gi = g[i];
                match self.kind {
                    OptimizerKind::SGD => p[i] -= lr * gi,
                    OptimizerKind::Adagrad => {
                        m[i] += gi * gi;
                        p[i] -= lr * gi / (m[i].sqrt() + ADAGRAD_EPS);
                    }
                    OptimizerKind::RMSprop => {
                        m[i] = RMS_ALPHA * m[i] + (1.0 - RMS_ALPHA) * gi * gi;
                        p[i] -= lr * gi / (m[i].sqrt() + EPS);
                    }
                    OptimizerKind::Adam => {
                        m[i] = BETA1 * m[i] + (1.0 - BETA1) * gi;
                        v[i] = BETA2 * v[i] + (1.0 - BETA2) * gi * gi;
                        let denom = (v[i] / bc2).sqrt() + EPS;
                        p[i] -= lr * (m[i] / bc1) / denom;
                    }
                    OptimizerKind::Adamax => {
                        m[i] = BETA1 * m[i] + (1.0 - BETA1) * gi;
                        v[i] = (BETA2 * v[i]).max(gi.abs() + EPS);
                        p[i] -= lr / bc1 * m[i] / v[i];
                    }
                    OptimizerKind::NAdam => {
                        m[i] = BETA1 * m[i] + (1.0 - BETA1) * gi;
                        v[i] = BETA2 * v[i] + (1.0 - BETA2) * gi * gi;
                        let denom = (v[i] / bc2).sqrt() + EPS;
                        p[i] -= lr * (1.0 - mu_t) / (1.0 - prod_t) * gi / denom;
                        p[i] -= lr * mu_next / (1.0 - prod_next) * m[i] / denom;
                    }
                    OptimizerKind::RAdam => {
                        m[i] = BETA1 * m[i] + (1.0 - BETA1) * gi;
                        v[i] = BETA2 * v[i] + (1.0 - BETA2) * gi * gi;
                        let m_hat = m[i] / bc1;
                        match radam_rect {
                            Some(r) => {
                                let adaptive = bc2.sqrt() / (v[i].sqrt() + EPS);
                                p[i] -= lr * m_hat * adaptive * r;
                            }
                            None => p[i] -= lr * m_hat,
                        }
                    }
                }
            }
        }
    }
}
