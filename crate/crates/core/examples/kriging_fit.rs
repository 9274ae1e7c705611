//! Fit a Kriging model to a few samples of a 1-D function and minimize it.

use xaitune::surrogate::{differential_evolution, DeSettings, KrigingModel, KrigingSettings};

fn f(x: f64) -> f64 {
    (2.0 * x).sin() + 0.3 * x
}

fn main() -> xaitune::Result<()> {
    let xs: Vec<Vec<f64>> = (0..10).map(|i| vec![-2.0 + 4.0 * i as f64 / 9.0]).collect();
    let ys: Vec<f64> = xs.iter().map(|x| f(x[0])).collect();
    let model = KrigingModel::fit(&xs, &ys, &KrigingSettings::default(), 1)?;
    println!("theta {:?}  nugget {:.1e}  log-likelihood {:.3}", model.theta, model.nugget, model.log_likelihood);

    println!("     x      f(x)    mean     sd");
    for i in 0..=16 {
        let x = -2.0 + 0.25 * i as f64;
        let (m, v) = model.predict(&[x]);
        println!("{x:6.2} {:8.3} {m:8.3} {:6.3}", f(x), v.sqrt());
    }

    let best = differential_evolution(|x| model.predict_mean(x), &[(-2.0, 2.0)], &DeSettings::default(), 7)?;
    println!("surrogate minimum at x = {:.3} (true f there: {:.3})", best.x[0], f(best.x[0]));
    Ok(())
}
