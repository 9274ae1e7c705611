use std::io::{Read, Write};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Mean attributions: one row per method, one column per feature.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AttributionMatrix {
    pub methods: Vec<String>,
    pub features: Vec<String>,
    pub values: Vec<Vec<f64>>,
}

impl AttributionMatrix {
    pub fn new(methods: Vec<String>, features: Vec<String>, values: Vec<Vec<f64>>) -> Result<Self> {
        if values.len() != methods.len() {
            return Err(Error::Shape(format!(
                "{} method labels for {} rows",
                methods.len(),
                values.len()
            )));
        }
        if values.iter().any(|r| r.len() != features.len()) {
            return Err(Error::Shape(format!("every row needs {} feature values", features.len())));
        }
        if values.iter().flatten().any(|v| !v.is_finite()) {
            return Err(Error::Numerical("attribution matrix contains non-finite values".into()));
        }
        Ok(AttributionMatrix {
            methods,
            features,
            values,
        })
    }

    /// Unlabeled matrix, for metric computations on raw numbers.
    pub fn from_rows(values: Vec<Vec<f64>>) -> Result<Self> {
        let m = values.first().map(Vec::len).unwrap_or(0);
        Self::new(
            (0..values.len()).map(|i| format!("method{i}")).collect(),
            (0..m).map(|j| format!("x{j}")).collect(),
            values,
        )
    }

    pub fn n_methods(&self) -> usize {
        self.values.len()
    }

    pub fn n_features(&self) -> usize {
        self.features.len()
    }

    pub fn column(&self, j: usize) -> impl Iterator<Item = f64> + '_ {
        self.values.iter().map(move |r| r[j])
    }

    /// Comma-separated table: header `method,<feature>...`, one row per method.
    pub fn write_csv(&self, out: impl Write) -> Result<()> {
        let mut w = csv::Writer::from_writer(out);
        let mut header = vec!["method".to_string()];
        header.extend(self.features.iter().cloned());
        w.write_record(&header)?;
        for (label, row) in self.methods.iter().zip(&self.values) {
            let mut rec = vec![label.clone()];
            rec.extend(row.iter().map(|v| v.to_string()));
            w.write_record(&rec)?;
        }
        w.flush().map_err(|e| Error::io("<attribution table>", e))?;
        Ok(())
    }

    pub fn read_csv(input: impl Read) -> Result<Self> {
        let mut r = csv::ReaderBuilder::new().trim(csv::Trim::All).from_reader(input);
        let header = r.headers()?.clone();
        if header.len() < 2 {
            return Err(Error::Ingestion {
                line: 1,
                message: "attribution table needs a method column and at least one feature".into(),
            });
        }
        let features: Vec<String> = header.iter().skip(1).map(str::to_string).collect();
        let mut methods = Vec::new();
        let mut values = Vec::new();
        for (i, rec) in r.records().enumerate() {
            let line = i + 2;
            let rec = rec.map_err(|e| Error::Ingestion {
                line,
                message: e.to_string(),
            })?;
            methods.push(rec.get(0).unwrap_or_default().to_string());
            let row = rec
                .iter()
                .skip(1)
                .map(|f| {
                    f.parse::<f64>().map_err(|_| Error::Ingestion {
                        line,
                        message: format!("cannot parse `{f}`"),
                    })
                })
                .collect::<Result<Vec<_>>>()?;
            values.push(row);
        }
        Self::new(methods, features, values)
    }
}
