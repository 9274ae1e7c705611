//! Local and global attributions of a trained network.

use xaitune::config::RunConfig;
use xaitune::consistency::cons_spearman;
use xaitune::nn::{train, Activation, Mlp, MlpConfig, OptimizerKind};
use xaitune::xai::{
    attribution_matrix, deeplift, exact_shapley, integrated_gradients, kernel_shap, AttributionSettings,
};

fn print_row(label: &str, v: &[f64]) {
    let cells: Vec<String> = v.iter().map(|x| format!("{x:8.4}")).collect();
    println!("{label:<12}{}", cells.join(""));
}

fn main() -> xaitune::Result<()> {
    let splits = RunConfig::default().prepare_data()?;
    let config = MlpConfig {
        l1: 32,
        epochs: 32,
        batch_size: 32,
        dropout: 0.0,
        activation: Activation::ELU,
        optimizer: OptimizerKind::Adam,
        lr_multiplier: 1.0,
        seed: 1,
    };
    let mut model = Mlp::build(&config, splits.train.width())?;
    train(&mut model, &splits.train, &config)?;

    // one row against the all-zero baseline, i.e. the training mean
    let x = &splits.validation.features[0];
    let zero = vec![0.0; x.len()];
    let delta = model.predict_one(x)? - model.predict_one(&zero)?;
    println!("f(x) - f(baseline) = {delta:.4}");
    let names: Vec<String> = splits.train.feature_names.iter().map(|n| format!("{:>8}", &n[..n.len().min(8)])).collect();
    println!("{:<12}{}", "", names.join(""));
    let ig = integrated_gradients(&model, x, &zero, 256)?;
    let dl = deeplift(&model, x, &zero)?;
    let ks = kernel_shap(&model, x, &zero, 0, 0)?;
    let ex = exact_shapley(&model, x, &zero)?;
    for (label, a) in [("IG", &ig), ("DeepLIFT", &dl), ("KernelSHAP", &ks), ("Shapley", &ex)] {
        print_row(label, a);
        println!("{:<12}sum {:.6}", "", a.iter().sum::<f64>());
    }

    // mean over the validation split, the input of the consistency metrics
    let e = attribution_matrix(
        &model,
        &splits.validation.features,
        &splits.validation.feature_names,
        &AttributionSettings::default(),
        0,
    )?;
    println!();
    e.write_csv(std::io::stdout())?;
    println!("cons_spearman {:.4}", cons_spearman(&e)?);
    Ok(())
}
