//! Pipeline configuration: one TOML document covering the scenario, feature
//! extraction, training and scoring.

use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::learn::GbdtParams;
use crate::pipeline::{MatchOptions, RowOptions, DEFAULT_STRIDE};
use crate::risk::{FuzzyParams, DEFAULT_WINDOW};
use crate::sim::ScenarioConfig;
use crate::tci::Thresholds;

/// Optional input locations. Relative paths are taken from the directory of
/// the configuration file.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct Paths {
    /// Track JSON-lines file.
    pub tracks: Option<PathBuf>,
    /// Directory of face-frame and calibration files.
    pub faces: Option<PathBuf>,
    /// Site description (lanes, segments, origin).
    pub site: Option<PathBuf>,
    /// Directory of exported training tables.
    pub datasets: Option<PathBuf>,
    /// Directory of trained models.
    pub models: Option<PathBuf>,
    /// Score CSV for heat maps.
    pub scores: Option<PathBuf>,
}

impl Paths {
    fn all_mut(&mut self) -> [&mut Option<PathBuf>; 6] {
        [
            &mut self.tracks,
            &mut self.faces,
            &mut self.site,
            &mut self.datasets,
            &mut self.models,
            &mut self.scores,
        ]
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct PipelineConfig {
    pub seed: u64,
    pub horizons: Vec<u8>,
    /// Also train models without driver inputs.
    pub simplified: bool,
    /// Row spacing, s.
    pub stride: f64,
    pub folds: usize,
    /// Rebalance the final training sets with synthetic minority rows.
    /// Cross-validation reports both ways regardless.
    pub smote: bool,
    /// Train on the first half of the recording and score the second.
    pub temporal_split: bool,
    /// Heat-map timeline window, s.
    pub window: f64,
    pub thresholds: Thresholds,
    pub gbdt: GbdtParams,
    pub fuzzy: FuzzyParams,
    pub scenario: ScenarioConfig,
    pub matching: MatchOptions,
    pub paths: Paths,
}

impl Default for PipelineConfig {
    fn default() -> Self {
        PipelineConfig {
            seed: 7,
            horizons: vec![1, 2],
            simplified: false,
            stride: DEFAULT_STRIDE,
            folds: 10,
            smote: false,
            temporal_split: false,
            window: DEFAULT_WINDOW,
            thresholds: Thresholds::default(),
            gbdt: GbdtParams::default(),
            fuzzy: FuzzyParams::default(),
            scenario: ScenarioConfig::default(),
            matching: MatchOptions::default(),
            paths: Paths::default(),
        }
    }
}

impl PipelineConfig {
    pub fn from_toml(text: &str) -> Result<Self> {
        toml::from_str(text).map_err(|e| Error::Config(e.message().to_string()))
    }

    pub fn to_toml(&self) -> Result<String> {
        toml::to_string(self).map_err(|e| Error::Config(e.to_string()))
    }

    /// Reads, resolves relative paths against the file's directory, and
    /// validates.
    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::Config(format!("{}: {e}", path.display())))?;
        let mut config = Self::from_toml(&text)?;
        let base = path.parent().unwrap_or(Path::new("."));
        for p in config.paths.all_mut().into_iter().flatten() {
            if p.is_relative() {
                *p = base.join(&*p);
            }
        }
        config.validate()?;
        Ok(config)
    }

    /// Overrides the master seed everywhere it is used.
    pub fn set_seed(&mut self, seed: u64) {
        self.seed = seed;
        self.scenario.seed = seed;
    }

    pub fn row_options(&self) -> RowOptions {
        RowOptions {
            stride: self.stride,
            horizons: self.horizons.clone(),
            thresholds: self.thresholds,
        }
    }

    pub fn validate(&self) -> Result<()> {
        self.row_options().validate()?;
        self.gbdt.validate()?;
        self.fuzzy.validate()?;
        self.scenario.validate()?;
        if self.folds < 2 {
            return Err(Error::Config("folds must be at least 2".into()));
        }
        if !(self.window > 0.0) {
            return Err(Error::Config("window must be positive".into()));
        }
        let th = &self.thresholds;
        if !(th.ttc > 0.0 && th.mttc > 0.0 && th.drac > 0.0) {
            return Err(Error::Config("thresholds must be positive".into()));
        }
        if !(self.matching.radius > 0.0 && self.matching.time_tolerance > 0.0) {
            return Err(Error::Config("matching radius and time tolerance must be positive".into()));
        }
        let mut paths = self.paths.clone();
        for p in paths.all_mut().into_iter().flatten() {
            if !p.exists() {
                return Err(Error::Config(format!("{} does not exist", p.display())));
            }
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn default_round_trips() {
        let c = PipelineConfig::default();
        let back = PipelineConfig::from_toml(&c.to_toml().unwrap()).unwrap();
        assert_eq!(c, back);
        c.validate().unwrap();
    }

    #[test]
    fn partial_document_fills_defaults() {
        let c = PipelineConfig::from_toml("seed = 3\n[gbdt]\ntrees = 10\n[thresholds]\nttc_threshold_s = 2.0\n").unwrap();
        assert_eq!(c.seed, 3);
        assert_eq!(c.gbdt.trees, 10);
        assert_eq!(c.gbdt.max_leaves, 31);
        assert_eq!(c.thresholds.ttc, 2.0);
        assert_eq!(c.thresholds.drac, 3.35);
    }

    #[test]
    fn unknown_keys_are_rejected() {
        assert!(matches!(PipelineConfig::from_toml("sed = 3\n"), Err(Error::Config(_))));
        assert!(PipelineConfig::from_toml("[gbdt]\nleaves = 3\n").is_err());
        assert!(PipelineConfig::from_toml("[scenario]\nvehicle = 3\n").is_err());
    }

    #[test]
    fn missing_input_path_fails_validation() {
        let mut c = PipelineConfig::default();
        c.paths.tracks = Some(PathBuf::from("/nonexistent/tracks.jsonl"));
        assert!(matches!(c.validate(), Err(Error::Config(_))));
    }

    #[test]
    fn bad_mix_fails_validation() {
        let c = PipelineConfig::from_toml("[scenario.mix]\naggressive = 0.5\nnormal = 0.5\ndefensive = 0.5\n").unwrap();
        assert!(c.validate().is_err());
    }
}
