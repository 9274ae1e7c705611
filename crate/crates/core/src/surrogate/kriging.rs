//! Ordinary Kriging with an anisotropic squared-exponential correlation.
//!
//! Inputs are rescaled to the unit cube using the training column ranges and
//! outputs are standardized before fitting; [`KrigingModel::predict`] undoes
//! both. The correlation parameters `theta` are found by maximizing the
//! concentrated log-likelihood with differential evolution over
//! `log10(theta)`.

use nalgebra::{Cholesky, DMatrix, DVector, Dyn};
use serde::{Deserialize, Serialize};

use super::de::{differential_evolution, DeSettings};
use crate::error::{Error, Result};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct KrigingSettings {
    /// Search range for `log10(theta_d)`.
    pub log10_theta: (f64, f64),
    pub nugget: f64,
    pub max_nugget: f64,
    pub de: DeSettings,
}

impl Default for KrigingSettings {
    fn default() -> Self {
        KrigingSettings {
            log10_theta: (-3.0, 2.0),
            nugget: 1e-8,
            max_nugget: 1e-4,
            de: DeSettings::default(),
        }
    }
}

#[derive(Debug, Clone)]
pub struct KrigingModel {
    /// Training inputs in the unit-cube scaling.
    x: Vec<Vec<f64>>,
    x_offset: Vec<f64>,
    x_scale: Vec<f64>,
    /// Standardized training outputs.
    y: DVector<f64>,
    y_mean: f64,
    y_std: f64,
    pub theta: Vec<f64>,
    /// Process mean (standardized units).
    pub mu: f64,
    /// Process variance (standardized units).
    pub sigma2: f64,
    pub nugget: f64,
    pub log_likelihood: f64,
    chol: Cholesky<f64, Dyn>,
    /// `R^-1 (y - mu)`
    alpha: DVector<f64>,
    /// `R^-1 1`
    r_inv_one: DVector<f64>,
    one_r_inv_one: f64,
}

/// Factorized correlation structure for one `theta`.
struct Factor {
    chol: Cholesky<f64, Dyn>,
    nugget: f64,
}

struct Concentrated {
    mu: f64,
    sigma2: f64,
    log_likelihood: f64,
    alpha: DVector<f64>,
    r_inv_one: DVector<f64>,
    one_r_inv_one: f64,
}

fn correlation(a: &[f64], b: &[f64], theta: &[f64]) -> f64 {
    let s: f64 = a
        .iter()
        .zip(b)
        .zip(theta)
        .map(|((x, y), t)| t * (x - y) * (x - y))
        .sum();
    (-s).exp()
}

fn factorize(x: &[Vec<f64>], theta: &[f64], nugget: f64, max_nugget: f64) -> Option<Factor> {
    let n = x.len();
    let mut r = DMatrix::<f64>::identity(n, n);
    for a in 0..n {
        for b in 0..a {
            let c = correlation(&x[a], &x[b], theta);
            r[(a, b)] = c;
            r[(b, a)] = c;
        }
    }
    let mut nug = nugget;
    loop {
        let mut m = r.clone();
        for i in 0..n {
            m[(i, i)] += nug;
        }
        if let Some(chol) = m.cholesky() {
            return Some(Factor { chol, nugget: nug });
        }
        nug *= 10.0;
        if nug > max_nugget * (1.0 + 1e-9) {
            return None;
        }
    }
}

fn concentrate(factor: &Factor, y: &DVector<f64>) -> Concentrated {
    let n = y.len();
    let ones = DVector::from_element(n, 1.0);
    let r_inv_one = factor.chol.solve(&ones);
    let r_inv_y = factor.chol.solve(y);
    let one_r_inv_one = ones.dot(&r_inv_one);
    let mu = ones.dot(&r_inv_y) / one_r_inv_one;
    let resid = y - &ones * mu;
    let alpha = factor.chol.solve(&resid);
    let sigma2 = (resid.dot(&alpha) / n as f64).max(0.0);
    let log_det: f64 = 2.0 * factor.chol.l_dirty().diagonal().iter().map(|d| d.ln()).sum::<f64>();
    let log_likelihood = -0.5 * n as f64 * sigma2.max(1e-12).ln() - 0.5 * log_det;
    Concentrated {
        mu,
        sigma2,
        log_likelihood,
        alpha,
        r_inv_one,
        one_r_inv_one,
    }
}

struct Prepared {
    x: Vec<Vec<f64>>,
    x_offset: Vec<f64>,
    x_scale: Vec<f64>,
    y: DVector<f64>,
    y_mean: f64,
    y_std: f64,
}

fn prepare(x: &[Vec<f64>], y: &[f64]) -> Result<Prepared> {
    if x.len() != y.len() {
        return Err(Error::Shape(format!(
            "{} design rows but {} objective values",
            x.len(),
            y.len()
        )));
    }
    let dims = x.first().map(Vec::len).unwrap_or(0);
    if dims == 0 || x.iter().any(|r| r.len() != dims) {
        return Err(Error::Shape("design rows must share a non-zero width".into()));
    }
    if y.iter().chain(x.iter().flatten()).any(|v| !v.is_finite()) {
        return Err(Error::Numerical("Kriging inputs must be finite".into()));
    }
    let distinct = x.iter().skip(1).any(|r| r != &x[0]);
    if x.len() < 2 || !distinct {
        return Err(Error::config("Kriging needs at least two distinct design rows"));
    }
    let mut x_offset = vec![0.0; dims];
    let mut x_scale = vec![1.0; dims];
    for d in 0..dims {
        let lo = x.iter().map(|r| r[d]).fold(f64::INFINITY, f64::min);
        let hi = x.iter().map(|r| r[d]).fold(f64::NEG_INFINITY, f64::max);
        x_offset[d] = lo;
        if hi > lo {
            x_scale[d] = hi - lo;
        }
    }
    let xs = x
        .iter()
        .map(|r| {
            r.iter()
                .enumerate()
                .map(|(d, v)| (v - x_offset[d]) / x_scale[d])
                .collect()
        })
        .collect();
    let n = y.len() as f64;
    let y_mean = y.iter().sum::<f64>() / n;
    let var = y.iter().map(|v| (v - y_mean).powi(2)).sum::<f64>() / n;
    let y_std = if var > 0.0 { var.sqrt() } else { 1.0 };
    let ys = DVector::from_iterator(y.len(), y.iter().map(|v| (v - y_mean) / y_std));
    Ok(Prepared {
        x: xs,
        x_offset,
        x_scale,
        y: ys,
        y_mean,
        y_std,
    })
}

impl KrigingModel {
    /// Fit to design rows `x` and objective values `y`.
    pub fn fit(x: &[Vec<f64>], y: &[f64], settings: &KrigingSettings, seed: u64) -> Result<Self> {
        let p = prepare(x, y)?;
        let dims = p.x[0].len();
        let (lo, hi) = settings.log10_theta;
        if !(lo < hi) {
            return Err(Error::config("log10 theta range must satisfy lower < upper"));
        }
        let bounds = vec![(lo, hi); dims];
        let objective = |log_theta: &[f64]| {
            let theta: Vec<f64> = log_theta.iter().map(|t| 10f64.powf(*t)).collect();
            match factorize(&p.x, &theta, settings.nugget, settings.max_nugget) {
                Some(f) => -concentrate(&f, &p.y).log_likelihood,
                None => f64::INFINITY,
            }
        };
        let best = differential_evolution(objective, &bounds, &settings.de, seed)?;
        let theta: Vec<f64> = best.x.iter().map(|t| 10f64.powf(*t)).collect();
        Self::with_theta_prepared(p, theta, settings)
    }

    /// Fit with fixed correlation parameters (no likelihood search).
    pub fn with_theta(
        x: &[Vec<f64>],
        y: &[f64],
        theta: Vec<f64>,
        settings: &KrigingSettings,
    ) -> Result<Self> {
        let p = prepare(x, y)?;
        if theta.len() != p.x[0].len() || theta.iter().any(|t| !(*t > 0.0)) {
            return Err(Error::config("theta needs one positive entry per dimension"));
        }
        Self::with_theta_prepared(p, theta, settings)
    }

    fn with_theta_prepared(p: Prepared, theta: Vec<f64>, settings: &KrigingSettings) -> Result<Self> {
        let factor = factorize(&p.x, &theta, settings.nugget, settings.max_nugget).ok_or_else(|| {
            Error::Numerical(format!(
                "correlation matrix not positive definite with nugget up to {:e}",
                settings.max_nugget
            ))
        })?;
        let c = concentrate(&factor, &p.y);
        if !c.log_likelihood.is_finite() {
            return Err(Error::Numerical("non-finite Kriging likelihood".into()));
        }
        Ok(KrigingModel {
            x: p.x,
            x_offset: p.x_offset,
            x_scale: p.x_scale,
            y: p.y,
            y_mean: p.y_mean,
            y_std: p.y_std,
            theta,
            mu: c.mu,
            sigma2: c.sigma2,
            nugget: factor.nugget,
            log_likelihood: c.log_likelihood,
            chol: factor.chol,
            alpha: c.alpha,
            r_inv_one: c.r_inv_one,
            one_r_inv_one: c.one_r_inv_one,
        })
    }

    /// Concentrated log-likelihood of the training data at `theta`, or
    /// `-inf` when the correlation matrix cannot be factorized.
    pub fn log_likelihood_at(&self, theta: &[f64], settings: &KrigingSettings) -> f64 {
        match factorize(&self.x, theta, settings.nugget, settings.max_nugget) {
            Some(f) => concentrate(&f, &self.y).log_likelihood,
            None => f64::NEG_INFINITY,
        }
    }

    pub fn dims(&self) -> usize {
        self.x_offset.len()
    }

    pub fn len(&self) -> usize {
        self.x.len()
    }

    pub fn is_empty(&self) -> bool {
        self.x.is_empty()
    }

    /// Process mean in objective units.
    pub fn process_mean(&self) -> f64 {
        self.mu * self.y_std + self.y_mean
    }

    fn scaled(&self, x: &[f64]) -> Vec<f64> {
        x.iter()
            .enumerate()
            .map(|(d, v)| (v - self.x_offset[d]) / self.x_scale[d])
            .collect()
    }

    fn correlations(&self, xs: &[f64]) -> (DVector<f64>, bool) {
        let mut on_data = false;
        let r = DVector::from_iterator(
            self.x.len(),
            self.x.iter().map(|row| {
                if row.as_slice() == xs {
                    on_data = true;
                    1.0 + self.nugget
                } else {
                    correlation(row, xs, &self.theta)
                }
            }),
        );
        (r, on_data)
    }

    /// Predicted mean only (cheaper than [`KrigingModel::predict`]).
    pub fn predict_mean(&self, x: &[f64]) -> f64 {
        let xs = self.scaled(x);
        let (r, _) = self.correlations(&xs);
        (self.mu + r.dot(&self.alpha)) * self.y_std + self.y_mean
    }

    /// Best linear unbiased predictor: `(mean, variance)`.
    pub fn predict(&self, x: &[f64]) -> (f64, f64) {
        let xs = self.scaled(x);
        let (r, on_data) = self.correlations(&xs);
        let mean = (self.mu + r.dot(&self.alpha)) * self.y_std + self.y_mean;
        let r_inv_r = self.chol.solve(&r);
        let k_self = if on_data { 1.0 + self.nugget } else { 1.0 };
        let u = 1.0 - self.r_inv_one.dot(&r);
        let var = self.sigma2 * (k_self - r.dot(&r_inv_r) + u * u / self.one_r_inv_one);
        (mean, var.max(0.0) * self.y_std * self.y_std)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::seed;
    use rand::Rng;

    #[test]
    fn two_point_interpolation() {
        let m = KrigingModel::fit(&[vec![0.0], vec![1.0]], &[0.0, 1.0], &KrigingSettings::default(), 1)
            .unwrap();
        assert!(m.log_likelihood.is_finite());
        assert!(m.predict(&[0.0]).0.abs() < 1e-6);
        assert!((m.predict(&[1.0]).0 - 1.0).abs() < 1e-6);
    }

    #[test]
    fn constant_data() {
        let x = vec![vec![0.0], vec![0.5], vec![1.0]];
        let m = KrigingModel::fit(&x, &[3.0, 3.0, 3.0], &KrigingSettings::default(), 2).unwrap();
        for t in [-1.0, 0.25, 0.7, 5.0] {
            assert!((m.predict(&[t]).0 - 3.0).abs() < 1e-9);
        }
        assert!(m.sigma2 < 1e-12);
    }

    #[test]
    fn symmetric_midpoint() {
        let m = KrigingModel::fit(&[vec![-1.0], vec![1.0]], &[0.0, 0.0], &KrigingSettings::default(), 3)
            .unwrap();
        assert!(m.predict(&[0.0]).0.abs() < 1e-12);
    }

    #[test]
    fn far_field_reverts_to_process_mean() {
        let x: Vec<Vec<f64>> = (0..6).map(|i| vec![i as f64 / 5.0]).collect();
        let y: Vec<f64> = x.iter().map(|r| (3.0 * r[0]).sin()).collect();
        let m = KrigingModel::fit(&x, &y, &KrigingSettings::default(), 4).unwrap();
        let far = m.predict(&[1e3]).0;
        assert!((far - m.process_mean()).abs() < 1e-9);
    }

    #[test]
    fn variance_zero_on_data_positive_between() {
        let x = vec![vec![0.0], vec![1.0], vec![2.0], vec![3.0]];
        let y = [1.0, -0.5, 0.25, 2.0];
        let m = KrigingModel::fit(&x, &y, &KrigingSettings::default(), 5).unwrap();
        for row in &x {
            assert!(m.predict(row).1 <= 1e-8);
        }
        assert!(m.predict(&[1.5]).1 > 0.0);
    }

    #[test]
    fn duplicate_rows_escalate_nugget() {
        let x = vec![vec![0.0], vec![0.0], vec![1.0]];
        let m = KrigingModel::fit(&x, &[1.0, 1.0, 2.0], &KrigingSettings::default(), 6).unwrap();
        assert!(m.nugget >= 1e-8 && m.nugget <= 1e-4);
        assert!(KrigingModel::fit(&[vec![1.0], vec![1.0]], &[0.0, 1.0], &KrigingSettings::default(), 0).is_err());
    }

    #[test]
    fn quadratic_leave_one_out() {
        let xs: Vec<f64> = (0..10).map(|i| -1.0 + 2.0 * i as f64 / 9.0).collect();
        let f = |x: f64| x * x;
        let range = 1.0;
        for hold in 1..9 {
            let x: Vec<Vec<f64>> = xs.iter().enumerate().filter(|(i, _)| *i != hold).map(|(_, v)| vec![*v]).collect();
            let y: Vec<f64> = x.iter().map(|r| f(r[0])).collect();
            let m = KrigingModel::fit(&x, &y, &KrigingSettings::default(), hold as u64).unwrap();
            let err = (m.predict(&[xs[hold]]).0 - f(xs[hold])).abs();
            assert!(err < range / 10.0, "hold-out {hold}: error {err}");
        }
    }

    #[test]
    fn fitted_theta_beats_random_draws() {
        let mut rng = seed::rng(17);
        let x: Vec<Vec<f64>> = (0..12).map(|_| vec![rng.random::<f64>(), rng.random::<f64>()]).collect();
        let y: Vec<f64> = x.iter().map(|r| (4.0 * r[0]).sin() + r[1] * r[1]).collect();
        let settings = KrigingSettings::default();
        let m = KrigingModel::fit(&x, &y, &settings, 8).unwrap();
        for _ in 0..10 {
            let theta: Vec<f64> = (0..2).map(|_| 10f64.powf(rng.random_range(-3.0..2.0))).collect();
            assert!(m.log_likelihood >= m.log_likelihood_at(&theta, &settings) - 1e-9);
        }
        assert!((m.log_likelihood - m.log_likelihood_at(&m.theta, &settings)).abs() < 1e-6);
    }

    #[test]
    fn shape_errors() {
        let s = KrigingSettings::default();
        assert!(KrigingModel::fit(&[vec![0.0], vec![1.0]], &[0.0], &s, 0).is_err());
        assert!(KrigingModel::fit(&[vec![0.0], vec![1.0, 2.0]], &[0.0, 1.0], &s, 0).is_err());
        assert!(KrigingModel::fit(&[vec![0.0], vec![1.0]], &[0.0, f64::NAN], &s, 0).is_err());
    }
}
