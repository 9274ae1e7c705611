//! Kriging surrogate, differential evolution, and infill proposals.

mod de;
mod kriging;

pub use de::{differential_evolution, DeResult, DeSettings};
pub use kriging::{KrigingModel, KrigingSettings};

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::doe::{DesignPoint, SearchSpace};
use crate::error::Result;
use crate::seed;

/// What the infill optimizer minimizes on the surrogate.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Infill {
    #[default]
    PredictedMean,
    /// Negative expected improvement over the best observed value.
    ExpectedImprovement,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct ProposalSettings {
    pub de: DeSettings,
    pub infill: Infill,
    /// Width of one stratum per dimension is `range / cells`; used to nudge
    /// proposals that land on an already evaluated point.
    pub cells: usize,
}

impl Default for ProposalSettings {
    fn default() -> Self {
        ProposalSettings {
            de: DeSettings::default(),
            infill: Infill::PredictedMean,
            cells: 20,
        }
    }
}

fn std_normal_cdf(z: f64) -> f64 {
    0.5 * erfc(-z / std::f64::consts::SQRT_2)
}

fn std_normal_pdf(z: f64) -> f64 {
    (-0.5 * z * z).exp() / (2.0 * std::f64::consts::PI).sqrt()
}

/// Complementary error function, Chebyshev fit with relative error < 1.2e-7.
fn erfc(x: f64) -> f64 {
    let z = x.abs();
    let t = 1.0 / (1.0 + 0.5 * z);
    let r = t * (-z * z - 1.265_512_23
        + t * (1.000_023_68
            + t * (0.374_091_96
                + t * (0.096_784_18
                    + t * (-0.186_288_06
                        + t * (0.278_868_07
                            + t * (-1.135_203_98
                                + t * (1.488_515_87 + t * (-0.822_152_23 + t * 0.170_872_77)))))))))
        .exp();
    if x >= 0.0 {
        r
    } else {
        2.0 - r
    }
}

/// Expected improvement below `best` for a Gaussian prediction.
pub fn expected_improvement(mean: f64, variance: f64, best: f64) -> f64 {
    let sd = variance.max(0.0).sqrt();
    if sd < 1e-12 {
        return (best - mean).max(0.0);
    }
    let z = (best - mean) / sd;
    (best - mean) * std_normal_cdf(z) + sd * std_normal_pdf(z)
}

/// Optimize the surrogate over the raw space and return the realized point.
///
/// `evaluated` holds the canonical raw coordinates already spent; a proposal
/// that coincides with one of them is moved by one stratum width along a
/// random dimension.
pub fn propose_next(
    model: &KrigingModel,
    space: &SearchSpace,
    evaluated: &[Vec<f64>],
    best_observed: f64,
    settings: &ProposalSettings,
    seed: u64,
) -> Result<DesignPoint> {
    let bounds = space.bounds();
    let objective = |x: &[f64]| {
        let x = space.canonicalize(x);
        match settings.infill {
            Infill::PredictedMean => model.predict_mean(&x),
            Infill::ExpectedImprovement => {
                let (m, v) = model.predict(&x);
                -expected_improvement(m, v, best_observed)
            }
        }
    };
    let best = differential_evolution(objective, &bounds, &settings.de, seed)?;
    let mut raw = space.canonicalize(&best.x);

    let mut rng = seed::rng(seed::derive(seed, &[0xD0_0D]));
    let cells = settings.cells.max(1) as f64;
    let mut tries = 0;
    while evaluated.iter().any(|e| *e == raw) && tries < 64 {
        let d = rng.random_range(0..space.len());
        let (lo, hi) = bounds[d];
        let mut step = (hi - lo) / cells;
        if space.dims[d].is_discrete() {
            step = step.max(1.0);
        }
        let up = raw[d] + step;
        let down = raw[d] - step;
        raw[d] = if up <= hi && (down < lo || rng.random::<bool>()) {
            up
        } else if down >= lo {
            down
        } else {
            raw[d]
        };
        raw = space.canonicalize(&raw);
        tries += 1;
    }
    if tries > 0 {
        log::debug!("proposal coincided with an evaluated point, moved {tries} time(s)");
    }
    space.point(raw)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::doe::Dim;

    fn fit_1d(f: impl Fn(f64) -> f64, n: usize) -> (SearchSpace, KrigingModel, Vec<Vec<f64>>) {
        let space = SearchSpace::new(vec![Dim::continuous("x", -1.0, 1.0)]).unwrap();
        let x: Vec<Vec<f64>> = (0..n)
            .map(|i| vec![-1.0 + 2.0 * i as f64 / (n - 1) as f64])
            .collect();
        let y: Vec<f64> = x.iter().map(|r| f(r[0])).collect();
        let m = KrigingModel::fit(&x, &y, &KrigingSettings::default(), 0).unwrap();
        (space, m, x)
    }

    #[test]
    fn quadratic_proposal_near_minimizer() {
        let (space, m, _) = fit_1d(|x| x * x, 6);
        let p = propose_next(&m, &space, &[], 0.04, &ProposalSettings::default(), 1).unwrap();
        assert!(p.raw[0].abs() < 0.1, "proposal {:?}", p.raw);
    }

    #[test]
    fn monotone_proposal_at_lower_bound() {
        let (space, m, _) = fit_1d(|x| 2.0 * x + 1.0, 5);
        let p = propose_next(&m, &space, &[], -1.0, &ProposalSettings::default(), 2).unwrap();
        assert!(p.raw[0] < -0.9, "proposal {:?}", p.raw);
    }

    #[test]
    fn deterministic_and_avoids_duplicates() {
        let (space, m, x) = fit_1d(|x| 2.0 * x + 1.0, 5);
        let s = ProposalSettings::default();
        let a = propose_next(&m, &space, &x, -1.0, &s, 3).unwrap();
        let b = propose_next(&m, &space, &x, -1.0, &s, 3).unwrap();
        assert_eq!(a, b);
        assert!(!x.contains(&a.raw));
    }

    #[test]
    fn expected_improvement_basics() {
        assert_eq!(expected_improvement(1.0, 0.0, 2.0), 1.0);
        assert_eq!(expected_improvement(3.0, 0.0, 2.0), 0.0);
        // at mean == best, EI = sd * pdf(0)
        let ei = expected_improvement(0.0, 4.0, 0.0);
        assert!((ei - 2.0 / (2.0 * std::f64::consts::PI).sqrt()).abs() < 1e-7);
        assert!((std_normal_cdf(1.0) - 0.841_344_746).abs() < 1e-6);
    }
}
