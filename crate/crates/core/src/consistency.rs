//! Agreement between attribution methods, computed over the rows of an
//! [`AttributionMatrix`].

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::xai::AttributionMatrix;

/// What gets ranked for the Spearman metric.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum RankBasis {
    /// Signed attributions; a sign flip counts as disagreement.
    #[default]
    Signed,
    Absolute,
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Metric {
    #[default]
    #[serde(alias = "cons_spearman")]
    Spearman,
    #[serde(alias = "cons_max_diff", alias = "maxdiff")]
    MaxDiff,
    #[serde(alias = "cons_var", alias = "variance")]
    Var,
}

impl Metric {
    pub const ALL: [Metric; 3] = [Metric::Spearman, Metric::MaxDiff, Metric::Var];

    pub fn name(self) -> &'static str {
        match self {
            Metric::Spearman => "cons_spearman",
            Metric::MaxDiff => "cons_max_diff",
            Metric::Var => "cons_var",
        }
    }

    pub fn evaluate(self, e: &AttributionMatrix, basis: RankBasis) -> Result<f64> {
        match self {
            Metric::Spearman => cons_spearman_with(e, basis),
            Metric::MaxDiff => cons_max_diff(e),
            Metric::Var => cons_var(e),
        }
    }

    /// Value in "smaller is better" orientation. Spearman agreement is
    /// negated; the spread metrics already shrink as methods agree.
    pub fn to_minimize(self, value: f64) -> f64 {
        match self {
            Metric::Spearman => -value,
            Metric::MaxDiff | Metric::Var => value,
        }
    }
}

fn require_two(e: &AttributionMatrix) -> Result<()> {
    if e.n_methods() < 2 {
        return Err(Error::config(format!(
            "consistency needs at least two attribution methods, got {}",
            e.n_methods()
        )));
    }
    Ok(())
}

/// Sum over features of the largest pairwise gap between methods.
pub fn cons_max_diff(e: &AttributionMatrix) -> Result<f64> {
    require_two(e)?;
    Ok((0..e.n_features())
        .map(|j| {
            let (lo, hi) = e
                .column(j)
                .fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), v| (lo.min(v), hi.max(v)));
            hi - lo
        })
        .sum())
}

/// Sum over features of the population variance across methods.
pub fn cons_var(e: &AttributionMatrix) -> Result<f64> {
    require_two(e)?;
    let n = e.n_methods() as f64;
    Ok((0..e.n_features())
        .map(|j| {
            // shifting by the first entry makes identical rows give exactly 0
            let first = e.values[0][j];
            let mean = e.column(j).map(|v| v - first).sum::<f64>() / n;
            e.column(j).map(|v| (v - first - mean).powi(2)).sum::<f64>() / n
        })
        .sum())
}

/// Average ranks (1-based), ties sharing the mean of their positions.
pub fn fractional_ranks(v: &[f64]) -> Vec<f64> {
    let mut idx: Vec<usize> = (0..v.len()).collect();
    idx.sort_by(|&a, &b| v[a].total_cmp(&v[b]));
    let mut ranks = vec![0.0; v.len()];
    let mut i = 0;
    while i < idx.len() {
        let mut j = i;
        while j + 1 < idx.len() && v[idx[j + 1]] == v[idx[i]] {
            j += 1;
        }
        let r = (i + j) as f64 / 2.0 + 1.0;
        for &k in &idx[i..=j] {
            ranks[k] = r;
        }
        i = j + 1;
    }
    ranks
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Spearman {
    pub rho: f64,
    /// One of the inputs had all values tied; `rho` is then 0 by convention.
    pub degenerate: bool,
}

/// Spearman rank correlation as the Pearson correlation of fractional ranks.
pub fn spearman(a: &[f64], b: &[f64]) -> Result<Spearman> {
    if a.len() != b.len() {
        return Err(Error::Shape(format!("spearman inputs differ in length: {} vs {}", a.len(), b.len())));
    }
    if a.len() < 2 {
        return Err(Error::config("spearman correlation needs at least two values"));
    }
    if a.iter().chain(b).any(|v| !v.is_finite()) {
        return Err(Error::Numerical("spearman inputs must be finite".into()));
    }
    let (ra, rb) = (fractional_ranks(a), fractional_ranks(b));
    let mean = (a.len() as f64 + 1.0) / 2.0;
    let (mut sab, mut saa, mut sbb) = (0.0, 0.0, 0.0);
    for (x, y) in ra.iter().zip(&rb) {
        let (dx, dy) = (x - mean, y - mean);
        sab += dx * dy;
        saa += dx * dx;
        sbb += dy * dy;
    }
    if saa == 0.0 || sbb == 0.0 {
        return Ok(Spearman {
            rho: 0.0,
            degenerate: true,
        });
    }
    Ok(Spearman {
        rho: (sab / (saa * sbb).sqrt()).clamp(-1.0, 1.0),
        degenerate: false,
    })
}

/// Spearman rho alone; all-tied input yields 0 with a warning.
pub fn spearman_rho(a: &[f64], b: &[f64]) -> Result<f64> {
    let s = spearman(a, b)?;
    if s.degenerate {
        log::warn!("spearman correlation of an all-tied vector defined as 0");
    }
    Ok(s.rho)
}

/// Mean Spearman correlation over all unordered method pairs (signed ranks).
pub fn cons_spearman(e: &AttributionMatrix) -> Result<f64> {
    cons_spearman_with(e, RankBasis::Signed)
}

pub fn cons_spearman_with(e: &AttributionMatrix, basis: RankBasis) -> Result<f64> {
    require_two(e)?;
    let rows: Vec<Vec<f64>> = match basis {
        RankBasis::Signed => e.values.clone(),
        RankBasis::Absolute => e.values.iter().map(|r| r.iter().map(|v| v.abs()).collect()).collect(),
    };
    let n = rows.len();
    let mut total = 0.0;
    for i in 0..n {
        for k in i + 1..n {
            total += spearman_rho(&rows[i], &rows[k])?;
        }
    }
    Ok(total * 2.0 / (n * (n - 1)) as f64)
}

/// All three metrics, in the order spearman, max-diff, var.
pub fn all_metrics(e: &AttributionMatrix, basis: RankBasis) -> Result<[(Metric, f64); 3]> {
    Ok([
        (Metric::Spearman, cons_spearman_with(e, basis)?),
        (Metric::MaxDiff, cons_max_diff(e)?),
        (Metric::Var, cons_var(e)?),
    ])
}
