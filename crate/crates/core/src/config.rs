//! Run configuration, read from a TOML file with one table per concern.
//!
//! ```toml
//! [data]
//! path = "california_fixture.csv"
//! split_seed = 1
//!
//! [space]
//! preset = "desk"
//!
//! [objective]
//! mode = "desirability"
//!
//! [smbo]
//! init = 10
//! budget = 20
//! seed = 7
//! ```

use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::data::{load_table, DataSplits};
use crate::doe::{Dim, SearchSpace};
use crate::error::{Error, Result};
use crate::tuner::{ObjectiveSpec, SmboSettings};
use crate::xai::AttributionSettings;

/// Directory searched for relative data paths.
pub const DATA_DIR_ENV: &str = "XAITUNE_DATA_DIR";
pub const DEFAULT_DATA_FILE: &str = "california_fixture.csv";

/// Where the bundled fixture lives in the source tree.
pub fn bundled_data_dir() -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("data")
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct DataConfig {
    pub path: PathBuf,
    /// Target column; the last column when unset.
    pub target: Option<String>,
    pub split_seed: u64,
    /// Train, validation, test.
    pub fractions: (f64, f64, f64),
}

impl Default for DataConfig {
    fn default() -> Self {
        DataConfig {
            path: PathBuf::from(DEFAULT_DATA_FILE),
            target: None,
            split_seed: 1,
            fractions: (0.6, 0.2, 0.2),
        }
    }
}

impl DataConfig {
    /// Absolute paths are used as given. Relative ones are looked up in
    /// `$XAITUNE_DATA_DIR`, then next to the config file, then in the
    /// bundled data directory.
    pub fn resolve_path(&self, config_dir: Option<&Path>) -> PathBuf {
        if self.path.is_absolute() {
            return self.path.clone();
        }
        let mut candidates = Vec::new();
        if let Some(dir) = std::env::var_os(DATA_DIR_ENV) {
            candidates.push(PathBuf::from(dir).join(&self.path));
        }
        if let Some(dir) = config_dir {
            candidates.push(dir.join(&self.path));
        }
        candidates.push(self.path.clone());
        candidates.push(bundled_data_dir().join(&self.path));
        candidates
            .iter()
            .find(|p| p.is_file())
            .cloned()
            .unwrap_or_else(|| candidates[0].clone())
    }

    pub fn validate(&self) -> Result<()> {
        let (a, b, c) = self.fractions;
        if [a, b, c].iter().any(|f| !(0.0..=1.0).contains(f)) || ((a + b + c) - 1.0).abs() > 1e-9 {
            return Err(Error::config(format!(
                "split fractions must lie in [0, 1] and sum to 1, got ({a}, {b}, {c})"
            )));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SpacePreset {
    /// Full hyperparameter ranges.
    Full,
    /// Reduced network size, epochs and batch size for single-core runs.
    Desk,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SpaceConfig {
    #[serde(default)]
    pub preset: Option<SpacePreset>,
    #[serde(default)]
    pub dims: Option<Vec<Dim>>,
}

impl Default for SpaceConfig {
    fn default() -> Self {
        SpaceConfig {
            preset: Some(SpacePreset::Desk),
            dims: None,
        }
    }
}

impl SpaceConfig {
    pub fn build(&self) -> Result<SearchSpace> {
        match (&self.preset, &self.dims) {
            (Some(_), Some(_)) => Err(Error::config("space: give either `preset` or `dims`, not both")),
            (Some(SpacePreset::Full), None) => Ok(SearchSpace::full()),
            (Some(SpacePreset::Desk), None) => Ok(SearchSpace::desk()),
            (None, Some(dims)) => SearchSpace::new(dims.clone()),
            (None, None) => Err(Error::config("space: `preset` or `dims` is required")),
        }
    }
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct RunConfig {
    pub data: DataConfig,
    pub space: SpaceConfig,
    pub objective: ObjectiveSpec,
    pub smbo: SmboSettings,
    pub attribution: AttributionSettings,
    /// Directory of the file this was read from, for relative data paths.
    #[serde(skip)]
    pub base_dir: Option<PathBuf>,
}

impl RunConfig {
    pub fn from_toml_str(text: &str) -> Result<Self> {
        let cfg: RunConfig = toml::from_str(text).map_err(|e| Error::config(e.to_string()))?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        let mut cfg = Self::from_toml_str(&text).map_err(|e| match e {
            Error::Config(msg) => Error::config(format!("{}: {msg}", path.display())),
            other => other,
        })?;
        cfg.base_dir = path.parent().map(Path::to_path_buf);
        Ok(cfg)
    }

    pub fn validate(&self) -> Result<()> {
        self.data.validate()?;
        self.space.build()?;
        self.objective.validate()?;
        self.smbo.validate()?;
        self.smbo.kriging.de.validate(1)?;
        self.smbo.proposal.de.validate(1)?;
        self.attribution.validate()
    }

    pub fn to_toml(&self) -> Result<String> {
        toml::to_string_pretty(self).map_err(|e| Error::config(e.to_string()))
    }

    pub fn data_path(&self) -> PathBuf {
        self.data.resolve_path(self.base_dir.as_deref())
    }

    /// Load, split and standardize the configured data set.
    pub fn prepare_data(&self) -> Result<DataSplits> {
        let loaded = load_table(self.data_path(), self.data.target.as_deref())?;
        if !loaded.skipped_lines.is_empty() {
            log::warn!("skipped {} rows with missing values", loaded.skipped_lines.len());
        }
        DataSplits::prepare(&loaded.dataset, self.data.fractions, self.data.split_seed)
    }
}
