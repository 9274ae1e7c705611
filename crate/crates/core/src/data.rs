//! Tabular regression data: ingestion, shuffled splits, standardization.

use std::path::Path;
use std::sync::atomic::{AtomicUsize, Ordering};

use rand::seq::SliceRandom;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::seed;

/// Row-major feature matrix plus regression targets.
#[derive(Debug, Clone, PartialEq)]
pub struct Dataset {
    pub feature_names: Vec<String>,
    /// `rows x features`, row-major.
    pub features: Vec<Vec<f64>>,
    pub targets: Vec<f64>,
}

/// Outcome of [`load_table`].
#[derive(Debug, Clone)]
pub struct Loaded {
    pub dataset: Dataset,
    /// 1-based line numbers of rows dropped for non-finite values.
    pub skipped_lines: Vec<usize>,
}

impl Dataset {
    pub fn new(feature_names: Vec<String>, features: Vec<Vec<f64>>, targets: Vec<f64>) -> Result<Self> {
        if features.len() != targets.len() {
            return Err(Error::Shape(format!(
                "{} feature rows but {} targets",
                features.len(),
                targets.len()
            )));
        }
        if let Some(r) = features.iter().position(|r| r.len() != feature_names.len()) {
            return Err(Error::Shape(format!(
                "row {r} has {} features, expected {}",
                features[r].len(),
                feature_names.len()
            )));
        }
        if features.iter().flatten().chain(&targets).any(|v| !v.is_finite()) {
            return Err(Error::Numerical("dataset contains non-finite values".into()));
        }
        Ok(Dataset {
            feature_names,
            features,
            targets,
        })
    }

    pub fn len(&self) -> usize {
        self.targets.len()
    }

    pub fn is_empty(&self) -> bool {
        self.targets.is_empty()
    }

    pub fn width(&self) -> usize {
        self.feature_names.len()
    }

    pub fn subset(&self, rows: &[usize]) -> Dataset {
        Dataset {
            feature_names: self.feature_names.clone(),
            features: rows.iter().map(|&r| self.features[r].clone()).collect(),
            targets: rows.iter().map(|&r| self.targets[r]).collect(),
        }
    }
}

/// Read a comma-separated table with a header row. `target` names the target
/// column; `None` takes the last column.
pub fn load_table(path: impl AsRef<Path>, target: Option<&str>) -> Result<Loaded> {
    let path = path.as_ref();
    let file = std::fs::File::open(path).map_err(|e| Error::io(path, e))?;
    read_table(file, target)
}

pub fn read_table(reader: impl std::io::Read, target: Option<&str>) -> Result<Loaded> {
    let mut rdr = csv::ReaderBuilder::new()
        .has_headers(false)
        .flexible(true)
        .trim(csv::Trim::All)
        .from_reader(reader);
    let mut records = rdr.records();
    let header = match records.next() {
        Some(h) => h?,
        None => {
            return Err(Error::Ingestion {
                line: 1,
                message: "empty file, expected a header row".into(),
            })
        }
    };
    let names: Vec<String> = header.iter().map(str::to_string).collect();
    if names.iter().all(|n| n.parse::<f64>().is_ok()) {
        return Err(Error::Ingestion {
            line: 1,
            message: "missing header row (first row is numeric)".into(),
        });
    }
    if names.len() < 2 {
        return Err(Error::Ingestion {
            line: 1,
            message: "need at least one feature column and one target column".into(),
        });
    }
    let target_col = match target {
        Some(t) => names.iter().position(|n| n == t).ok_or_else(|| Error::Ingestion {
            line: 1,
            message: format!("target column `{t}` not found in header"),
        })?,
        None => names.len() - 1,
    };

    let mut features = Vec::new();
    let mut targets = Vec::new();
    let mut skipped = Vec::new();
    for (i, rec) in records.enumerate() {
        let line = i + 2;
        let rec = rec?;
        if rec.len() == 1 && rec.get(0) == Some("") {
            continue;
        }
        if rec.len() != names.len() {
            return Err(Error::Ingestion {
                line,
                message: format!("expected {} fields, found {}", names.len(), rec.len()),
            });
        }
        let mut row = Vec::with_capacity(names.len() - 1);
        let mut y = 0.0;
        for (c, field) in rec.iter().enumerate() {
            let v: f64 = field.parse().map_err(|_| Error::Ingestion {
                line,
                message: format!("cannot parse `{field}` in column `{}`", names[c]),
            })?;
            if c == target_col {
                y = v;
            } else {
                row.push(v);
            }
        }
        if !y.is_finite() || row.iter().any(|v| !v.is_finite()) {
            skipped.push(line);
            continue;
        }
        features.push(row);
        targets.push(y);
    }
    if !skipped.is_empty() {
        log::warn!("skipped {} row(s) with non-finite values", skipped.len());
    }
    let feature_names = names
        .into_iter()
        .enumerate()
        .filter(|(c, _)| *c != target_col)
        .map(|(_, n)| n)
        .collect();
    Ok(Loaded {
        dataset: Dataset::new(feature_names, features, targets)?,
        skipped_lines: skipped,
    })
}

/// Row indices of a three-way split, persisted next to run logs.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct SplitIndices {
    pub train: Vec<usize>,
    pub validation: Vec<usize>,
    pub test: Vec<usize>,
}

/// Shuffled partition into train/validation/test. Validation and test get
/// `floor(fraction * n)` rows; the remainder goes to train.
pub fn split_indices(n: usize, fractions: (f64, f64, f64), seed: u64) -> Result<SplitIndices> {
    let (ft, fv, fs) = fractions;
    if [ft, fv, fs].iter().any(|f| !(0.0..=1.0).contains(f)) || ((ft + fv + fs) - 1.0).abs() > 1e-9 {
        return Err(Error::config(format!(
            "split fractions must be in [0, 1] and sum to 1, got ({ft}, {fv}, {fs})"
        )));
    }
    if n < 3 {
        return Err(Error::config(format!("need at least 3 rows to split, got {n}")));
    }
    let mut idx: Vec<usize> = (0..n).collect();
    idx.shuffle(&mut seed::rng(seed));
    let n_val = (fv * n as f64).floor() as usize;
    let n_test = (fs * n as f64).floor() as usize;
    let n_train = n - n_val - n_test;
    let test = idx.split_off(n_train + n_val);
    let validation = idx.split_off(n_train);
    Ok(SplitIndices {
        train: idx,
        validation,
        test,
    })
}

pub fn split(ds: &Dataset, fractions: (f64, f64, f64), seed: u64) -> Result<(Dataset, Dataset, Dataset, SplitIndices)> {
    let idx = split_indices(ds.len(), fractions, seed)?;
    Ok((
        ds.subset(&idx.train),
        ds.subset(&idx.validation),
        ds.subset(&idx.test),
        idx,
    ))
}

/// Per-feature standardization fitted on training rows (population std).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StandardScaler {
    pub feature_names: Vec<String>,
    pub mean: Vec<f64>,
    pub std: Vec<f64>,
}

impl StandardScaler {
    pub fn fit(train: &Dataset) -> Result<Self> {
        if train.is_empty() {
            return Err(Error::config("cannot fit a scaler on zero rows"));
        }
        let n = train.len() as f64;
        let m = train.width();
        let mut mean = vec![0.0; m];
        for row in &train.features {
            for (acc, v) in mean.iter_mut().zip(row) {
                *acc += v;
            }
        }
        mean.iter_mut().for_each(|v| *v /= n);
        let mut var = vec![0.0; m];
        for row in &train.features {
            for ((acc, v), mu) in var.iter_mut().zip(row).zip(&mean) {
                *acc += (v - mu) * (v - mu);
            }
        }
        let std: Vec<f64> = var.iter().map(|v| (v / n).sqrt()).collect();
        if let Some(j) = std.iter().position(|s| !(*s > 0.0)) {
            return Err(Error::config(format!(
                "feature `{}` has zero variance on the training split",
                train.feature_names[j]
            )));
        }
        Ok(StandardScaler {
            feature_names: train.feature_names.clone(),
            mean,
            std,
        })
    }

    pub fn transform_row(&self, row: &[f64]) -> Vec<f64> {
        row.iter()
            .zip(self.mean.iter().zip(&self.std))
            .map(|(v, (mu, sd))| (v - mu) / sd)
            .collect()
    }

    pub fn inverse_row(&self, row: &[f64]) -> Vec<f64> {
        row.iter()
            .zip(self.mean.iter().zip(&self.std))
            .map(|(v, (mu, sd))| v * sd + mu)
            .collect()
    }

    pub fn transform(&self, ds: &Dataset) -> Result<Dataset> {
        if ds.width() != self.mean.len() {
            return Err(Error::Shape(format!(
                "scaler fitted on {} features, data has {}",
                self.mean.len(),
                ds.width()
            )));
        }
        Ok(Dataset {
            feature_names: ds.feature_names.clone(),
            features: ds.features.iter().map(|r| self.transform_row(r)).collect(),
            targets: ds.targets.clone(),
        })
    }
}

/// Standardized train/validation/test splits. Reads of the test split are
/// counted so tuning code can prove it never looked at it.
#[derive(Debug)]
pub struct DataSplits {
    pub train: Dataset,
    pub validation: Dataset,
    test: Dataset,
    pub scaler: StandardScaler,
    pub indices: SplitIndices,
    test_reads: AtomicUsize,
}

impl DataSplits {
    /// Split `ds`, fit the scaler on the training rows, standardize all three.
    pub fn prepare(ds: &Dataset, fractions: (f64, f64, f64), seed: u64) -> Result<Self> {
        let (train, validation, test, indices) = split(ds, fractions, seed)?;
        let scaler = StandardScaler::fit(&train)?;
        Ok(DataSplits {
            train: scaler.transform(&train)?,
            validation: scaler.transform(&validation)?,
            test: scaler.transform(&test)?,
            scaler,
            indices,
            test_reads: AtomicUsize::new(0),
        })
    }

    pub fn test(&self) -> &Dataset {
        self.test_reads.fetch_add(1, Ordering::SeqCst);
        &self.test
    }

    pub fn test_reads(&self) -> usize {
        self.test_reads.load(Ordering::SeqCst)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn table(s: &str) -> Result<Loaded> {
        read_table(s.as_bytes(), None)
    }

    fn toy(n: usize) -> Dataset {
        Dataset::new(
            vec!["a".into(), "b".into()],
            (0..n).map(|i| vec![i as f64, (i * i) as f64]).collect(),
            (0..n).map(|i| i as f64 * 0.5).collect(),
        )
        .unwrap()
    }

    #[test]
    fn loads_well_formed() {
        let l = table("a,b,y\n1,2,3\n4,5,6\n7,8,9\n").unwrap();
        assert_eq!(l.dataset.len(), 3);
        assert_eq!(l.dataset.feature_names, vec!["a", "b"]);
        assert_eq!(l.dataset.targets, vec![3.0, 6.0, 9.0]);
    }

    #[test]
    fn skips_nan_rows() {
        let l = table("a,b,y\n1,2,3\nNaN,5,6\n7,8,9\n").unwrap();
        assert_eq!(l.dataset.len(), 2);
        assert_eq!(l.skipped_lines, vec![3]);
    }

    #[test]
    fn ingestion_errors() {
        assert!(matches!(table("1,2,3\n4,5,6\n"), Err(Error::Ingestion { line: 1, .. })));
        assert!(matches!(table(""), Err(Error::Ingestion { line: 1, .. })));
        assert!(matches!(table("a,b,y\n1,2,3\n4,5\n"), Err(Error::Ingestion { line: 3, .. })));
        assert!(matches!(
            read_table("a,b,y\n1,2,3\n".as_bytes(), Some("price")),
            Err(Error::Ingestion { line: 1, .. })
        ));
        let named = read_table("y,a\n1,2\n".as_bytes(), Some("y")).unwrap();
        assert_eq!(named.dataset.feature_names, vec!["a"]);
        assert_eq!(named.dataset.targets, vec![1.0]);
    }

    #[test]
    fn split_sizes_and_determinism() {
        let idx = split_indices(10, (0.6, 0.2, 0.2), 1).unwrap();
        assert_eq!((idx.train.len(), idx.validation.len(), idx.test.len()), (6, 2, 2));
        assert_eq!(idx, split_indices(10, (0.6, 0.2, 0.2), 1).unwrap());
        assert!(split_indices(2, (0.6, 0.2, 0.2), 1).is_err());
        assert!(split_indices(10, (0.5, 0.2, 0.2), 1).is_err());
    }

    #[test]
    fn scaler_example() {
        let ds = Dataset::new(vec!["x".into()], vec![vec![1.0], vec![3.0]], vec![0.0, 0.0]).unwrap();
        let s = StandardScaler::fit(&ds).unwrap();
        assert_eq!(s.mean, vec![2.0]);
        assert_eq!(s.std, vec![1.0]);
        let t = s.transform(&ds).unwrap();
        assert_eq!(t.features, vec![vec![-1.0], vec![1.0]]);
        // applying to identical data reproduces the statistics
        let again = StandardScaler::fit(&t).unwrap();
        assert!(again.mean[0].abs() < 1e-12 && (again.std[0] - 1.0).abs() < 1e-12);
    }

    #[test]
    fn constant_column_rejected() {
        let ds = Dataset::new(vec!["c".into()], vec![vec![2.0]; 4], vec![0.0; 4]).unwrap();
        match StandardScaler::fit(&ds) {
            Err(Error::Config(msg)) => assert!(msg.contains("`c`")),
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn test_split_reads_are_counted() {
        let splits = DataSplits::prepare(&toy(20), (0.6, 0.2, 0.2), 3).unwrap();
        assert_eq!(splits.test_reads(), 0);
        assert_eq!(splits.test().len(), 4);
        assert_eq!(splits.test_reads(), 1);
    }

    proptest! {
        #[test]
        fn split_is_a_partition(n in 3usize..200, seed in any::<u64>()) {
            let idx = split_indices(n, (0.6, 0.2, 0.2), seed).unwrap();
            let mut all: Vec<usize> = idx.train.iter().chain(&idx.validation).chain(&idx.test).copied().collect();
            all.sort();
            prop_assert_eq!(all, (0..n).collect::<Vec<_>>());
        }

        #[test]
        fn standardized_moments_and_round_trip(
            rows in proptest::collection::vec(proptest::collection::vec(-1e3f64..1e3, 3), 5..40)
        ) {
            let n = rows.len();
            let ds = Dataset::new(vec!["a".into(), "b".into(), "c".into()], rows.clone(), vec![0.0; n]).unwrap();
            let Ok(s) = StandardScaler::fit(&ds) else { return Ok(()); };
            let t = s.transform(&ds).unwrap();
            for j in 0..3 {
                let mean = t.features.iter().map(|r| r[j]).sum::<f64>() / n as f64;
                let var = t.features.iter().map(|r| (r[j] - mean).powi(2)).sum::<f64>() / n as f64;
                prop_assert!(mean.abs() < 1e-9);
                prop_assert!((var.sqrt() - 1.0).abs() < 1e-9);
            }
            for (orig, tr) in rows.iter().zip(&t.features) {
                for (a, b) in orig.iter().zip(s.inverse_row(tr)) {
                    prop_assert!((a - b).abs() <= 1e-12 * a.abs().max(1.0));
                }
            }
        }
    }
}
