//! Per-feature anomaly scores and their weighted composition.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::features::{extract_features_with, LanguageDetector};
use crate::model::{BehavioralProfile, FeatureKind, FeatureModel, Message};

pub const DEFAULT_THRESHOLD: f64 = 0.5;

/// Per-feature weights plus the violation threshold on the normalized
/// composite score.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FeatureWeights {
    pub weights: BTreeMap<FeatureKind, f64>,
    pub threshold: f64,
}

impl FeatureWeights {
    pub fn new(weights: BTreeMap<FeatureKind, f64>, threshold: f64) -> Result<Self> {
        let w = FeatureWeights { weights, threshold };
        w.validate()?;
        Ok(w)
    }

    /// Twitter preset. No proximity signal is available on that network.
    pub fn twitter() -> Self {
        FeatureWeights {
            weights: BTreeMap::from([
                (FeatureKind::Source, 3.3),
                (FeatureKind::DirectInteraction, 1.4),
                (FeatureKind::Link, 0.96),
                (FeatureKind::TimeOfDay, 0.88),
                (FeatureKind::Language, 0.58),
                (FeatureKind::Topic, 0.39),
            ]),
            threshold: DEFAULT_THRESHOLD,
        }
    }

    /// Facebook preset. Language and topic carry no weight there.
    pub fn facebook() -> Self {
        FeatureWeights {
            weights: BTreeMap::from([
                (FeatureKind::Source, 2.2),
                (FeatureKind::Link, 1.1),
                (FeatureKind::DirectInteraction, 0.13),
                (FeatureKind::Proximity, 0.08),
                (FeatureKind::TimeOfDay, 0.06),
            ]),
            threshold: DEFAULT_THRESHOLD,
        }
    }

    pub fn preset(name: &str) -> Result<Self> {
        match name.to_ascii_lowercase().as_str() {
            "twitter" => Ok(Self::twitter()),
            "facebook" => Ok(Self::facebook()),
            other => Err(Error::InvalidWeights(format!("unknown preset {other:?}"))),
        }
    }

    pub fn with_threshold(mut self, threshold: f64) -> Result<Self> {
        self.threshold = threshold;
        self.validate()?;
        Ok(self)
    }

    pub fn validate(&self) -> Result<()> {
        if let Some((k, w)) = self
            .weights
            .iter()
            .find(|(_, w)| !w.is_finite() || **w < 0.0)
        {
            return Err(Error::InvalidWeights(format!("weight for {k} is {w}")));
        }
        if !self.weights.values().any(|w| *w > 0.0) {
            return Err(Error::InvalidWeights("all weights are zero".into()));
        }
        if !(0.0..=1.0).contains(&self.threshold) {
            return Err(Error::InvalidWeights(format!(
                "threshold {} outside [0, 1]",
                self.threshold
            )));
        }
        Ok(())
    }

    /// Weights that take part in the composite.
    pub fn active(&self) -> impl Iterator<Item = (FeatureKind, f64)> + '_ {
        self.weights
            .iter()
            .filter(|(_, w)| **w > 0.0)
            .map(|(k, w)| (*k, *w))
    }
}

/// Anomaly breakdown for one message.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MessageScore {
    pub message_id: String,
    pub account_id: String,
    pub per_feature: BTreeMap<FeatureKind, f64>,
    pub composite: f64,
    pub violates_profile: bool,
}

/// Score of one value against a mandatory model: 1 when never seen, 0 when
/// its count reaches the mean count per observed value, else `1 - c/N`.
pub fn score_mandatory(model: &FeatureModel, value: &str) -> f64 {
    if model.total_messages == 0 {
        return 1.0;
    }
    let (Some(count), Some(mean)) = (model.effective_count(value), model.mean_count()) else {
        return 1.0;
    };
    if count >= mean {
        0.0
    } else {
        (1.0 - count / model.total_messages as f64).clamp(0.0, 1.0)
    }
}

/// Score of the values a message carries for an optional model. No values is
/// never anomalous; an unseen value scores the account's probability of not
/// using the feature at all. Multiple values aggregate by maximum.
pub fn score_optional(model: &FeatureModel, values: &[&str]) -> f64 {
    if model.total_messages == 0 {
        return 0.0;
    }
    let p_null = (model.null_count() as f64 / model.total_messages as f64).clamp(0.0, 1.0);
    values
        .iter()
        .map(|v| if model.contains(v) { 0.0 } else { p_null })
        .fold(0.0, f64::max)
}

pub fn score_message(
    profile: &BehavioralProfile,
    m: &Message,
    weights: &FeatureWeights,
    tz_offset_minutes: i32,
) -> MessageScore {
    score_message_with(
        LanguageDetector::bundled(),
        profile,
        m,
        weights,
        tz_offset_minutes,
    )
}

/// Scores every feature of `m` against `profile` and combines the scores
/// into a weight-normalized composite in [0, 1].
pub fn score_message_with(
    detector: &LanguageDetector,
    profile: &BehavioralProfile,
    m: &Message,
    weights: &FeatureWeights,
    tz_offset_minutes: i32,
) -> MessageScore {
    let features = extract_features_with(detector, m, tz_offset_minutes);
    let mut per_feature = BTreeMap::new();
    for kind in FeatureKind::ALL {
        let Some(model) = profile.model(kind) else {
            continue;
        };
        let values: Vec<&str> = features
            .iter()
            .filter(|f| f.kind == kind)
            .map(|f| f.value.as_str())
            .collect();
        let score = if kind.is_mandatory() {
            values
                .first()
                .map(|v| score_mandatory(model, v))
                .unwrap_or(1.0)
        } else {
            score_optional(model, &values)
        };
        per_feature.insert(kind, score);
    }
    let composite = composite_score(&per_feature, weights);
    MessageScore {
        message_id: m.message_id.clone(),
        account_id: m.account_id.clone(),
        per_feature,
        composite,
        violates_profile: composite > weights.threshold,
    }
}

/// Σ w·s / Σ w over the kinds that have both a positive weight and a score.
pub fn composite_score(per_feature: &BTreeMap<FeatureKind, f64>, weights: &FeatureWeights) -> f64 {
    let (num, den) = weights
        .active()
        .filter_map(|(k, w)| per_feature.get(&k).map(|s| (w * s, w)))
        .fold((0.0, 0.0), |(n, d), (ws, w)| (n + ws, d + w));
    if den == 0.0 {
        0.0
    } else {
        (num / den).clamp(0.0, 1.0)
    }
}
