//! Single-document TOML configuration for the pipeline.
//!
//! ```toml
//! [scoring]
//! preset = "twitter"        # or "facebook"
//! threshold = 0.5
//! [scoring.weights]         # overrides on top of the preset
//! source = 3.0
//!
//! [profile]
//! min_stream = 10
//!
//! [detection]
//! window_seconds = 3600
//! allow_list = "allow.txt"
//! budget = 500
//! ```

use std::collections::{BTreeMap, BTreeSet};
use std::fs;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::campaign::{JudgeParams, ThresholdParams};
use crate::error::{Error, Result};
use crate::model::FeatureKind;
use crate::scoring::FeatureWeights;

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct Config {
    pub scoring: ScoringConfig,
    pub profile: ProfileConfig,
    pub detection: DetectionConfig,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ScoringConfig {
    pub preset: String,
    pub threshold: f64,
    pub weights: BTreeMap<FeatureKind, f64>,
    /// Offset applied to every account without its own entry.
    pub tz_offset_minutes: i32,
    pub account_tz_offsets: BTreeMap<String, i32>,
}

impl Default for ScoringConfig {
    fn default() -> Self {
        ScoringConfig {
            preset: "twitter".into(),
            threshold: crate::scoring::DEFAULT_THRESHOLD,
            weights: BTreeMap::new(),
            tz_offset_minutes: 0,
            account_tz_offsets: BTreeMap::new(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ProfileConfig {
    pub min_stream: usize,
    /// Training horizon: keep the most recent `history_days` of messages or
    /// the most recent `history_messages`, whichever is larger.
    pub history_days: i64,
    pub history_messages: usize,
    /// Directory of `<code>.txt` corpora replacing the bundled languages.
    pub language_corpus: Option<PathBuf>,
    /// Cache for profiles trained from `language_corpus`; defaults to
    /// `.language-profiles.json` inside the corpus directory.
    pub language_cache: Option<PathBuf>,
}

impl Default for ProfileConfig {
    fn default() -> Self {
        ProfileConfig {
            min_stream: crate::profile::DEFAULT_MIN_STREAM,
            history_days: 3,
            history_messages: 400,
            language_corpus: None,
            language_cache: None,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct DetectionConfig {
    pub window_seconds: i64,
    pub min_group_size: usize,
    pub slope: f64,
    pub intercept: f64,
    pub floor: f64,
    pub levenshtein_cutoff: f64,
    pub popularity_cutoff: f64,
    /// Bulk-application sample size; defaults to the profile minimum.
    pub sample_size: Option<usize>,
    pub allow_list: Option<PathBuf>,
    /// Maximum profiles fetched or built per window.
    pub budget: Option<usize>,
    pub seed: u64,
}

impl Default for DetectionConfig {
    fn default() -> Self {
        DetectionConfig {
            window_seconds: 3600,
            min_group_size: crate::cluster::DEFAULT_MIN_GROUP_SIZE,
            slope: crate::campaign::DEFAULT_SLOPE,
            intercept: crate::campaign::DEFAULT_INTERCEPT,
            floor: crate::campaign::DEFAULT_FLOOR,
            levenshtein_cutoff: crate::campaign::DEFAULT_LEVENSHTEIN_CUTOFF,
            popularity_cutoff: crate::campaign::DEFAULT_POPULARITY_CUTOFF,
            sample_size: None,
            allow_list: None,
            budget: None,
            seed: 0,
        }
    }
}

impl Config {
    pub fn load(path: &Path) -> Result<Self> {
        let raw = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        let cfg: Config = toml::from_str(&raw).map_err(|e| Error::Config(e.to_string()))?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn validate(&self) -> Result<()> {
        self.weights()?;
        if self.profile.min_stream == 0 {
            return Err(Error::Config(
                "profile.min_stream must be at least 1".into(),
            ));
        }
        if self.detection.window_seconds <= 0 {
            return Err(Error::Config(
                "detection.window_seconds must be positive".into(),
            ));
        }
        Ok(())
    }

    /// Preset weights with overrides and the configured threshold applied.
    pub fn weights(&self) -> Result<FeatureWeights> {
        let mut w = FeatureWeights::preset(&self.scoring.preset)?;
        for (k, v) in &self.scoring.weights {
            w.weights.insert(*k, *v);
        }
        w.with_threshold(self.scoring.threshold)
    }

    pub fn tz_offset_for(&self, account_id: &str) -> i32 {
        self.scoring
            .account_tz_offsets
            .get(account_id)
            .copied()
            .unwrap_or(self.scoring.tz_offset_minutes)
    }

    pub fn judge_params(&self) -> JudgeParams {
        JudgeParams {
            threshold: ThresholdParams {
                slope: self.detection.slope,
                intercept: self.detection.intercept,
                floor: self.detection.floor,
            },
            levenshtein_cutoff: self.detection.levenshtein_cutoff,
            popularity_cutoff: self.detection.popularity_cutoff,
        }
    }

    pub fn sample_size(&self) -> usize {
        self.detection
            .sample_size
            .unwrap_or(self.profile.min_stream)
    }
}

/// Reads an allow-list: one application name per line, `#` comments and
/// blank lines ignored.
pub fn read_allow_list(path: &Path) -> Result<BTreeSet<String>> {
    let raw = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    Ok(raw
        .lines()
        .map(str::trim)
        .filter(|l| !l.is_empty() && !l.starts_with('#'))
        .map(str::to_string)
        .collect())
}
