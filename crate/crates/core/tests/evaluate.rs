//! Contracts of single-design evaluation and of a short tuning run.

use xaitune::data::{DataSplits, Dataset};
use xaitune::doe::{Dim, SearchSpace};
use xaitune::tuner::{evaluate_design, summarize, tune, EvalContext, Mode, ObjectiveSpec, SmboSettings};
use xaitune::xai::AttributionSettings;

fn splits() -> DataSplits {
    let features: Vec<Vec<f64>> = (0..120)
        .map(|i| {
            let t = i as f64;
            vec![(t * 0.31).sin(), (t * 0.17).cos(), (i % 5) as f64]
        })
        .collect();
    let targets = features.iter().map(|x| 2.0 * x[0] - x[1] * x[2] + 0.1 * x[2]).collect();
    let ds = Dataset::new(vec!["a".into(), "b".into(), "c".into()], features, targets).unwrap();
    DataSplits::prepare(&ds, (0.6, 0.2, 0.2), 1).unwrap()
}

fn small_space() -> SearchSpace {
    SearchSpace::new(vec![
        Dim::pow2("l1", 2, 3),
        Dim::pow2("epochs", 4, 5),
        Dim::pow2("batch_size", 4, 5),
        Dim::continuous("dropout", 0.0, 0.1),
        Dim::continuous("lr_multiplier", 0.5, 2.0),
        Dim::categorical("activation", &["ReLU", "Swish"]),
        Dim::categorical("optimizer", &["Adam", "SGD"]),
    ])
    .unwrap()
}

#[test]
fn identical_seeds_give_identical_repeats() {
    let splits = splits();
    let objective = ObjectiveSpec::with_mode(Mode::Weighted);
    let attribution = AttributionSettings::default();
    let ctx = EvalContext::new(&splits, &objective, &attribution);
    let point = small_space().point(vec![2.0, 4.0, 4.0, 0.0, 1.0, 1.0, 0.0]).unwrap();
    let rec = evaluate_design(&point, &ctx, &[17, 17]).unwrap();
    assert_eq!(rec.repeats[0].mse, rec.repeats[1].mse);
    assert_eq!(rec.repeats[0].consistency, rec.repeats[1].consistency);
    assert_eq!(rec.mse, rec.repeats[0].mse);
    assert_eq!(rec.consistency, rec.repeats[0].consistency);
}

#[test]
fn tiny_network_record_is_in_range() {
    let splits = splits();
    let objective = ObjectiveSpec::with_mode(Mode::Desirability);
    let attribution = AttributionSettings::default();
    let ctx = EvalContext::new(&splits, &objective, &attribution);
    let point = small_space().point(vec![2.0, 4.0, 4.0, 0.05, 1.0, 0.0, 0.0]).unwrap();
    let rec = evaluate_design(&point, &ctx, &[3]).unwrap();
    assert!(!rec.degenerate);
    assert!(rec.mse.unwrap().is_finite());
    let cons = rec.consistency.unwrap();
    assert!((-1.0..=1.0).contains(&cons), "{cons}");
    assert!((0.0..=1.0).contains(&rec.objective));
}

#[test]
fn loss_mode_never_explains_nor_reads_test_data() {
    let splits = splits();
    let objective = ObjectiveSpec::with_mode(Mode::Loss);
    let attribution = AttributionSettings::default();
    let ctx = EvalContext::new(&splits, &objective, &attribution);
    let settings = SmboSettings {
        init: 3,
        budget: 2,
        repeats: 1,
        seed: 5,
        ..SmboSettings::default()
    };
    let run = tune(&small_space(), &settings, &ctx).unwrap();
    assert_eq!(run.records.len(), 5);
    assert_eq!(ctx.attribution_calls(), 0);
    assert!(run.records.iter().all(|r| r.consistency.is_none()));
    assert_eq!(splits.test_reads(), 0);

    let (summary, _) = summarize(&run, &ctx).unwrap();
    assert!(splits.test_reads() > 0);
    assert!((-1.0..=1.0).contains(&summary.validation.consistency));
    assert_eq!(summary.attribution_calls_during_tuning, 0);
}

#[test]
fn best_so_far_is_monotone() {
    let splits = splits();
    let objective = ObjectiveSpec::with_mode(Mode::Weighted);
    let attribution = AttributionSettings::default();
    let ctx = EvalContext::new(&splits, &objective, &attribution);
    let settings = SmboSettings {
        init: 3,
        budget: 2,
        repeats: 1,
        seed: 2,
        ..SmboSettings::default()
    };
    let run = tune(&small_space(), &settings, &ctx).unwrap();
    assert!(run.records.windows(2).all(|w| w[1].best_so_far <= w[0].best_so_far));
    assert_eq!(splits.test_reads(), 0);
}
