//! Train the regression network on the bundled fixture and report
//! validation MSE per epoch block.

use xaitune::config::RunConfig;
use xaitune::nn::{mse, train, Activation, Mlp, MlpConfig, OptimizerKind};

fn main() -> xaitune::Result<()> {
    let splits = RunConfig::default().prepare_data()?;
    println!(
        "train {} / validation {} rows, {} features",
        splits.train.len(),
        splits.validation.len(),
        splits.train.width()
    );

    // the loss-only optimum of the full-size study, scaled down to l1 = 64
    let config = MlpConfig {
        l1: 64,
        epochs: 128,
        batch_size: 128,
        dropout: 0.347,
        activation: Activation::Swish,
        optimizer: OptimizerKind::RMSprop,
        lr_multiplier: 0.1,
        seed: 3,
    };
    let mut model = Mlp::build(&config, splits.train.width())?;
    println!("layers {:?}, {} parameters, lr {}", model.layer_sizes(), model.parameter_count(), config.learning_rate());

    let report = train(&mut model, &splits.train, &config)?;
    for (e, loss) in report.epoch_losses.iter().enumerate().filter(|(e, _)| e % 16 == 15) {
        println!("epoch {:4}  train loss {loss:.4}", e + 1);
    }
    let pred = model.predict_rows(&splits.validation.features)?;
    println!("validation MSE {:.4}", mse(&pred, &splits.validation.targets)?);
    Ok(())
}
