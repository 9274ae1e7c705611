//! DE/rand/1/bin differential evolution.

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::seed;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct DeSettings {
    /// Population size; `None` means `max(10 * dims, 20)`.
    #[serde(default)]
    pub population: Option<usize>,
    pub generations: usize,
    /// Differential weight.
    pub f: f64,
    /// Crossover rate.
    pub cr: f64,
}

impl Default for DeSettings {
    fn default() -> Self {
        DeSettings {
            population: None,
            generations: 50,
            f: 0.8,
            cr: 0.9,
        }
    }
}

impl DeSettings {
    pub fn population_for(&self, dims: usize) -> usize {
        self.population.unwrap_or_else(|| (10 * dims).max(20))
    }

    pub fn validate(&self, dims: usize) -> Result<()> {
        if self.population_for(dims) < 4 {
            return Err(Error::config("differential evolution needs a population of at least 4"));
        }
        if !(self.f > 0.0 && self.f <= 2.0) {
            return Err(Error::config(format!("DE weight F must lie in (0, 2], got {}", self.f)));
        }
        if !(0.0..=1.0).contains(&self.cr) {
            return Err(Error::config(format!("DE crossover rate must lie in [0, 1], got {}", self.cr)));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct DeResult {
    pub x: Vec<f64>,
    pub value: f64,
    pub evaluations: usize,
}

/// Minimize `objective` over the box `bounds`. NaN objective values are
/// treated as `+inf`.
pub fn differential_evolution<F>(
    mut objective: F,
    bounds: &[(f64, f64)],
    settings: &DeSettings,
    seed: u64,
) -> Result<DeResult>
where
    F: FnMut(&[f64]) -> f64,
{
    let dims = bounds.len();
    if dims == 0 {
        return Err(Error::config("differential evolution needs at least one dimension"));
    }
    if let Some(&(lo, hi)) = bounds.iter().find(|(lo, hi)| !(lo.is_finite() && hi.is_finite() && lo <= hi)) {
        return Err(Error::config(format!("invalid DE bounds [{lo}, {hi}]")));
    }
    settings.validate(dims)?;
    let np = settings.population_for(dims);
    let mut rng = seed::rng(seed);
    let mut eval = |x: &[f64]| {
        let v = objective(x);
        if v.is_nan() {
            f64::INFINITY
        } else {
            v
        }
    };

    let mut pop: Vec<Vec<f64>> = (0..np)
        .map(|_| {
            bounds
                .iter()
                .map(|&(lo, hi)| if lo == hi { lo } else { rng.random_range(lo..=hi) })
                .collect()
        })
        .collect();
    let mut fitness: Vec<f64> = pop.iter().map(|x| eval(x)).collect();
    let mut evaluations = np;

    let mut trial = vec![0.0; dims];
    for _ in 0..settings.generations {
        for i in 0..np {
            let (a, b, c) = distinct_three(&mut rng, np, i);
            let forced = rng.random_range(0..dims);
            for d in 0..dims {
                trial[d] = if d == forced || rng.random::<f64>() < settings.cr {
                    let v = pop[a][d] + settings.f * (pop[b][d] - pop[c][d]);
                    v.clamp(bounds[d].0, bounds[d].1)
                } else {
                    pop[i][d]
                };
            }
            let ft = eval(&trial);
            evaluations += 1;
            if ft <= fitness[i] {
                pop[i].copy_from_slice(&trial);
                fitness[i] = ft;
            }
        }
    }

    let best = (0..np)
        .min_by(|&a, &b| fitness[a].total_cmp(&fitness[b]))
        .unwrap_or(0);
    Ok(DeResult {
        x: pop[best].clone(),
        value: fitness[best],
        evaluations,
    })
}

fn distinct_three(rng: &mut impl Rng, np: usize, exclude: usize) -> (usize, usize, usize) {
    let mut pick = |taken: &[usize]| loop {
        let k = rng.random_range(0..np);
        if k != exclude && !taken.contains(&k) {
            return k;
        }
    };
    let a = pick(&[]);
    let b = pick(&[a]);
    let c = pick(&[a, b]);
    (a, b, c)
}
