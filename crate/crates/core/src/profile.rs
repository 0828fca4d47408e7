//! Profile training.

use std::collections::{BTreeMap, BTreeSet};

use crate::error::{Error, Result};
use crate::features::{extract_features_with, LanguageDetector};
use crate::model::{BehavioralProfile, FeatureKind, FeatureModel, Message, NULL_VALUE};

/// Shortest history a profile is trained from.
pub const DEFAULT_MIN_STREAM: usize = 10;

/// Trains a profile with the bundled language profiles and UTC hours.
pub fn build_profile(
    account_id: &str,
    stream: &[Message],
    min_stream: usize,
) -> Result<BehavioralProfile> {
    build_profile_with(
        LanguageDetector::bundled(),
        account_id,
        stream,
        min_stream,
        0,
    )
}

/// Trains all seven feature models over `stream`.
///
/// Mandatory models count one value per message. Optional models count each
/// distinct value once per message and add one `null` per message that has
/// no value of that kind.
pub fn build_profile_with(
    detector: &LanguageDetector,
    account_id: &str,
    stream: &[Message],
    min_stream: usize,
    tz_offset_minutes: i32,
) -> Result<BehavioralProfile> {
    if stream.len() < min_stream || stream.is_empty() {
        return Err(Error::StreamTooShort {
            len: stream.len(),
            min: min_stream,
        });
    }
    if let Some(stranger) = stream.iter().find(|m| m.account_id != account_id) {
        return Err(Error::MixedAccounts {
            expected: account_id.to_string(),
            found: stranger.account_id.clone(),
        });
    }

    let n = stream.len() as u64;
    let mut models: BTreeMap<FeatureKind, FeatureModel> = FeatureKind::ALL
        .iter()
        .map(|k| {
            let mut model = FeatureModel::new(*k);
            model.total_messages = n;
            (*k, model)
        })
        .collect();

    for m in stream {
        let features = extract_features_with(detector, m, tz_offset_minutes);
        let mut present = BTreeSet::new();
        for fv in &features {
            present.insert(fv.kind);
            if let Some(model) = models.get_mut(&fv.kind) {
                model.bump(&fv.value);
            }
        }
        for kind in FeatureKind::ALL.iter().filter(|k| !k.is_mandatory()) {
            if !present.contains(kind) {
                if let Some(model) = models.get_mut(kind) {
                    model.bump(NULL_VALUE);
                }
            }
        }
    }

    if let Some(time) = models.get_mut(&FeatureKind::TimeOfDay) {
        time.smoothed_entries = Some(smooth_time_model(time));
    }

    let trained_at = stream.iter().map(|m| m.timestamp).max().unwrap_or_default();
    Ok(BehavioralProfile {
        account_id: account_id.to_string(),
        models,
        trained_on: n,
        trained_at,
    })
}

/// Averages each hour's count with its two neighbours, wrapping around
/// midnight. Only hours with a positive result are kept.
pub fn smooth_time_model(model: &FeatureModel) -> BTreeMap<u8, f64> {
    debug_assert_eq!(model.kind, FeatureKind::TimeOfDay);
    let mut raw = [0u64; 24];
    for (hour, count) in &model.entries {
        if let Ok(h) = hour.parse::<usize>() {
            if h < 24 {
                raw[h] += count;
            }
        }
    }
    (0..24usize)
        .filter_map(|i| {
            let sum = raw[(i + 23) % 24] + raw[i] + raw[(i + 1) % 24];
            (sum > 0).then(|| (i as u8, sum as f64 / 3.0))
        })
        .collect()
}

/// Groups messages by account and sorts each stream by (timestamp, id).
pub fn streams_by_account(messages: &[Message]) -> BTreeMap<String, Vec<Message>> {
    let mut out: BTreeMap<String, Vec<Message>> = BTreeMap::new();
    for m in messages {
        out.entry(m.account_id.clone()).or_default().push(m.clone());
    }
    for stream in out.values_mut() {
        stream.sort_by(|a, b| {
            a.timestamp
                .cmp(&b.timestamp)
                .then_with(|| a.message_id.cmp(&b.message_id))
        });
    }
    out
}
