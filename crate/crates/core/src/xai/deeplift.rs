use nalgebra::DMatrix;

use crate::error::{Error, Result};
use crate::nn::Mlp;

/// Below this pre-activation gap the Rescale multiplier falls back to the
/// derivative at the midpoint.
const RESCALE_EPS: f64 = 1e-7;

/// DeepLIFT with the Rescale rule for a single input.
pub fn deeplift(model: &Mlp, x: &[f64], baseline: &[f64]) -> Result<Vec<f64>> {
    let xm = DMatrix::from_column_slice(x.len(), 1, x);
    let out = deeplift_batch(model, &xm, baseline)?;
    Ok(out.column(0).iter().copied().collect())
}

/// DeepLIFT (Rescale) for every column of `x`. Contributions sum to
/// `f(x) - f(baseline)` up to rounding.
pub fn deeplift_batch(model: &Mlp, x: &DMatrix<f64>, baseline: &[f64]) -> Result<DMatrix<f64>> {
    let m = model.input_dim();
    if x.nrows() != m || baseline.len() != m {
        return Err(Error::Shape(format!(
            "model expects {m} features, got input {} and baseline {}",
            x.nrows(),
            baseline.len()
        )));
    }
    let n = x.ncols();
    let act = model.activation;
    let last = model.layers.len() - 1;
    let tr = model.trace(x)?;
    let base = model.trace(&DMatrix::from_column_slice(m, 1, baseline))?;

    // multipliers of the output with respect to the current layer's values
    let mut mult = DMatrix::from_element(1, n, 1.0);
    for l in (0..=last).rev() {
        if l < last {
            let z = &tr.z[l];
            let z0 = &base.z[l];
            for c in 0..n {
                for r in 0..z.nrows() {
                    let (zi, zr) = (z[(r, c)], z0[(r, 0)]);
                    let dz = zi - zr;
                    let rescale = if dz.abs() < RESCALE_EPS {
                        act.derivative(0.5 * (zi + zr))
                    } else {
                        (act.apply(zi) - act.apply(zr)) / dz
                    };
                    mult[(r, c)] *= rescale;
                }
            }
        }
        mult = model.layers[l].w.transpose() * &mult;
    }
    for c in 0..n {
        for i in 0..m {
            mult[(i, c)] *= x[(i, c)] - baseline[i];
        }
    }
    Ok(mult)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::nn::{Activation, Dense};
    use crate::seed;
    use crate::xai::Differentiable;
    use nalgebra::DVector;
    use rand::Rng;

    #[test]
    fn linear_reduces_to_weight_times_delta() {
        let layer = Dense {
            w: DMatrix::from_row_slice(1, 2, &[2.0, -1.0]),
            b: DVector::from_element(1, 0.7),
        };
        let m = Mlp::from_layers(vec![layer], Activation::ELU, 0.0).unwrap();
        assert_eq!(deeplift(&m, &[1.0, 2.0], &[0.0, 0.0]).unwrap(), vec![2.0, -2.0]);
    }

    #[test]
    fn summation_to_delta() {
        let mut rng = seed::rng(4);
        for act in Activation::ALL {
            let m = Mlp::with_widths(&[5, 12, 6, 6, 3, 1], act, 0.0, rng.random()).unwrap();
            let x: Vec<f64> = (0..5).map(|_| rng.random_range(-2.0..2.0)).collect();
            let b: Vec<f64> = (0..5).map(|_| rng.random_range(-0.5..0.5)).collect();
            let a = deeplift(&m, &x, &b).unwrap();
            let delta = m.predict_one(&x).unwrap() - m.predict_one(&b).unwrap();
            assert!((a.iter().sum::<f64>() - delta).abs() <= 1e-6, "{act:?}");
        }
    }

    #[test]
    fn positive_regime_equals_gradient_times_delta() {
        // Positive weights and biases on positive inputs keep every ReLU
        // pre-activation positive, so the network is linear between x and x'.
        let mut rng = seed::rng(10);
        let mut m = Mlp::with_widths(&[3, 6, 4, 1], Activation::ReLU, 0.0, 1).unwrap();
        for l in &mut m.layers {
            l.w.apply(|v| *v = rng.random_range(0.1..1.0));
            l.b.apply(|v| *v = rng.random_range(0.1..0.5));
        }
        let x = [1.0, 0.5, 2.0];
        let b = [0.2, 0.1, 0.3];
        let tr = m.trace(&DMatrix::from_column_slice(3, 2, &[1.0, 0.5, 2.0, 0.2, 0.1, 0.3])).unwrap();
        assert!(tr.z[..2].iter().all(|z| z.iter().all(|v| *v > 0.0)));
        let g = m.input_gradient_columns(&DMatrix::from_column_slice(3, 1, &x));
        let a = deeplift(&m, &x, &b).unwrap();
        for i in 0..3 {
            assert!((a[i] - g[(i, 0)] * (x[i] - b[i])).abs() < 1e-12);
        }
    }

    #[test]
    fn zero_at_baseline() {
        let m = Mlp::with_widths(&[3, 5, 1], Activation::LeakyReLU, 0.0, 2).unwrap();
        let x = [0.1, 0.2, -0.3];
        assert_eq!(deeplift(&m, &x, &x).unwrap(), vec![0.0; 3]);
    }
}
