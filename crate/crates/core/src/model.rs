//! Domain types shared by every stage: messages, the seven behavioral
//! features, per-feature histograms and the profile bundle.

use std::collections::{BTreeMap, HashSet};
use std::fmt;
use std::io::{BufRead, Write};

use chrono::{DateTime, Duration, Timelike, Utc};
use serde::{Deserialize, Deserializer, Serialize};
use url::Url;

use crate::error::{Error, Result};

/// Histogram key used by optional models to count messages without a value.
pub const NULL_VALUE: &str = "null";

/// One post from a social-network message stream.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Message {
    pub message_id: String,
    pub account_id: String,
    #[serde(with = "rfc3339_seconds")]
    pub timestamp: DateTime<Utc>,
    #[serde(default)]
    pub text: String,
    #[serde(default)]
    pub source_app: String,
    #[serde(default)]
    pub urls: Vec<String>,
    #[serde(default)]
    pub mentions: Vec<String>,
    #[serde(default, deserialize_with = "hashtags_normalized")]
    pub hashtags: Vec<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub network: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub recipient_network: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub language_hint: Option<String>,
}

impl Message {
    /// Minimal message; the remaining fields start empty.
    pub fn new(
        message_id: impl Into<String>,
        account_id: impl Into<String>,
        timestamp: DateTime<Utc>,
        text: impl Into<String>,
        source_app: impl Into<String>,
    ) -> Self {
        Message {
            message_id: message_id.into(),
            account_id: account_id.into(),
            timestamp: timestamp.with_nanosecond(0).unwrap_or(timestamp),
            text: text.into(),
            source_app: source_app.into(),
            urls: Vec::new(),
            mentions: Vec::new(),
            hashtags: Vec::new(),
            network: None,
            recipient_network: None,
            language_hint: None,
        }
    }
}

/// Strips a leading '#' and lowercases.
pub fn normalize_hashtag(tag: &str) -> String {
    tag.trim_start_matches('#').to_lowercase()
}

fn hashtags_normalized<'de, D>(de: D) -> std::result::Result<Vec<String>, D::Error>
where
    D: Deserializer<'de>,
{
    let raw = Vec::<String>::deserialize(de)?;
    Ok(raw.iter().map(|t| normalize_hashtag(t)).collect())
}

/// RFC 3339 timestamps truncated to whole seconds.
pub mod rfc3339_seconds {
    use chrono::{DateTime, SecondsFormat, Timelike, Utc};
    use serde::{de::Error as _, Deserialize, Deserializer, Serializer};

    pub fn serialize<S: Serializer>(ts: &DateTime<Utc>, ser: S) -> Result<S::Ok, S::Error> {
        ser.serialize_str(&ts.to_rfc3339_opts(SecondsFormat::Secs, true))
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(de: D) -> Result<DateTime<Utc>, D::Error> {
        let raw = String::deserialize(de)?;
        let parsed = DateTime::parse_from_rfc3339(&raw).map_err(D::Error::custom)?;
        let utc = parsed.with_timezone(&Utc);
        Ok(utc.with_nanosecond(0).unwrap_or(utc))
    }
}

/// Mandatory models see exactly one value per message; optional models see
/// zero or more and track absence with a `null` count.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum FeatureClass {
    Mandatory,
    Optional,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum FeatureKind {
    TimeOfDay,
    Source,
    Language,
    Topic,
    Link,
    DirectInteraction,
    Proximity,
}

impl FeatureKind {
    pub const ALL: [FeatureKind; 7] = [
        FeatureKind::TimeOfDay,
        FeatureKind::Source,
        FeatureKind::Language,
        FeatureKind::Topic,
        FeatureKind::Link,
        FeatureKind::DirectInteraction,
        FeatureKind::Proximity,
    ];

    pub fn class(self) -> FeatureClass {
        match self {
            FeatureKind::TimeOfDay
            | FeatureKind::Source
            | FeatureKind::Language
            | FeatureKind::Proximity => FeatureClass::Mandatory,
            FeatureKind::Topic | FeatureKind::Link | FeatureKind::DirectInteraction => {
                FeatureClass::Optional
            }
        }
    }

    pub fn is_mandatory(self) -> bool {
        self.class() == FeatureClass::Mandatory
    }

    pub fn as_str(self) -> &'static str {
        match self {
            FeatureKind::TimeOfDay => "time_of_day",
            FeatureKind::Source => "source",
            FeatureKind::Language => "language",
            FeatureKind::Topic => "topic",
            FeatureKind::Link => "link",
            FeatureKind::DirectInteraction => "direct_interaction",
            FeatureKind::Proximity => "proximity",
        }
    }
}

impl fmt::Display for FeatureKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

/// One extracted feature value in canonical string form.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct FeatureValue {
    pub kind: FeatureKind,
    pub value: String,
}

impl FeatureValue {
    pub fn new(kind: FeatureKind, value: impl Into<String>) -> Self {
        FeatureValue {
            kind,
            value: value.into(),
        }
    }

    pub fn hour(hour: u8) -> Self {
        FeatureValue::new(FeatureKind::TimeOfDay, format!("{hour:02}"))
    }
}

/// Histogram of the values one account showed for one feature.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FeatureModel {
    pub kind: FeatureKind,
    pub entries: BTreeMap<String, u64>,
    pub total_messages: u64,
    /// Time-of-day only: hour → averaged count over the hour and its two
    /// neighbours. Replaces `entries` when scoring.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub smoothed_entries: Option<BTreeMap<u8, f64>>,
}

impl FeatureModel {
    pub fn new(kind: FeatureKind) -> Self {
        FeatureModel {
            kind,
            entries: BTreeMap::new(),
            total_messages: 0,
            smoothed_entries: None,
        }
    }

    /// Builds a model from explicit counts, mostly for tests and fixtures.
    pub fn from_counts<'a>(
        kind: FeatureKind,
        counts: impl IntoIterator<Item = (&'a str, u64)>,
        total_messages: u64,
    ) -> Self {
        let entries = counts
            .into_iter()
            .filter(|(_, c)| *c > 0)
            .map(|(v, c)| (v.to_string(), c))
            .collect();
        FeatureModel {
            kind,
            entries,
            total_messages,
            smoothed_entries: None,
        }
    }

    pub(crate) fn bump(&mut self, value: &str) {
        *self.entries.entry(value.to_string()).or_insert(0) += 1;
    }

    /// Count used for scoring: the smoothed count when present, otherwise
    /// the raw count. `None` when the value was never observed.
    pub fn effective_count(&self, value: &str) -> Option<f64> {
        match &self.smoothed_entries {
            Some(smoothed) => {
                let hour: u8 = value.parse().ok()?;
                smoothed.get(&hour).copied().filter(|c| *c > 0.0)
            }
            None => self.entries.get(value).map(|c| *c as f64),
        }
    }

    /// Mean count per observed value (the bar a value must reach to be
    /// considered habitual).
    pub fn mean_count(&self) -> Option<f64> {
        match &self.smoothed_entries {
            Some(smoothed) => {
                let present: Vec<f64> = smoothed.values().copied().filter(|c| *c > 0.0).collect();
                if present.is_empty() {
                    None
                } else {
                    Some(present.iter().sum::<f64>() / present.len() as f64)
                }
            }
            None => {
                let present: Vec<u64> = self
                    .entries
                    .iter()
                    .filter(|(k, _)| k.as_str() != NULL_VALUE)
                    .map(|(_, c)| *c)
                    .collect();
                if present.is_empty() {
                    None
                } else {
                    Some(present.iter().sum::<u64>() as f64 / present.len() as f64)
                }
            }
        }
    }

    pub fn null_count(&self) -> u64 {
        self.entries.get(NULL_VALUE).copied().unwrap_or(0)
    }

    pub fn contains(&self, value: &str) -> bool {
        value != NULL_VALUE && self.entries.contains_key(value)
    }

    /// Value with the highest raw count; ties go to the smallest key.
    pub fn most_frequent(&self) -> Option<&str> {
        self.entries
            .iter()
            .filter(|(k, _)| k.as_str() != NULL_VALUE)
            .max_by(|a, b| a.1.cmp(b.1).then_with(|| b.0.cmp(a.0)))
            .map(|(k, _)| k.as_str())
    }
}

/// The seven feature models learned from one account's history.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BehavioralProfile {
    pub account_id: String,
    pub models: BTreeMap<FeatureKind, FeatureModel>,
    pub trained_on: u64,
    #[serde(with = "rfc3339_seconds")]
    pub trained_at: DateTime<Utc>,
}

impl BehavioralProfile {
    pub fn model(&self, kind: FeatureKind) -> Option<&FeatureModel> {
        self.models.get(&kind)
    }
}

/// Lowercased host of an absolute URL.
pub fn canonical_url_domain(url: &str) -> Result<String> {
    let parsed = Url::parse(url.trim()).map_err(|_| Error::UnparseableUrl(url.to_string()))?;
    match parsed.host_str() {
        Some(host) if !host.is_empty() => Ok(host.to_lowercase()),
        _ => Err(Error::UnparseableUrl(url.to_string())),
    }
}

/// Hour of day (0..=23) of the message after shifting by `tz_offset_minutes`.
pub fn message_hour(m: &Message, tz_offset_minutes: i32) -> u8 {
    let local = m.timestamp + Duration::minutes(i64::from(tz_offset_minutes));
    local.hour() as u8
}

/// Result of reading a JSONL message stream.
#[derive(Debug, Default)]
pub struct MessageBatch {
    pub messages: Vec<Message>,
    pub total_lines: usize,
    /// (1-based line number, reason) for every skipped line.
    pub malformed: Vec<(usize, String)>,
}

impl MessageBatch {
    pub fn all_malformed(&self) -> bool {
        self.total_lines > 0 && self.messages.is_empty() && !self.malformed.is_empty()
    }
}

/// Reads one message per line. Blank lines are ignored; lines that fail to
/// parse, have an empty id or repeat an earlier id are skipped and recorded.
pub fn read_messages<R: BufRead>(reader: R) -> Result<MessageBatch> {
    let mut batch = MessageBatch::default();
    let mut seen = HashSet::new();
    for (idx, line) in reader.lines().enumerate() {
        let line = line?;
        if line.trim().is_empty() {
            continue;
        }
        batch.total_lines += 1;
        let lineno = idx + 1;
        match serde_json::from_str::<Message>(&line) {
            Ok(m) if m.message_id.is_empty() => {
                batch.malformed.push((lineno, "empty message_id".into()))
            }
            Ok(m) => {
                if seen.insert(m.message_id.clone()) {
                    batch.messages.push(m);
                } else {
                    batch
                        .malformed
                        .push((lineno, format!("duplicate message_id {}", m.message_id)));
                }
            }
            Err(e) => batch.malformed.push((lineno, e.to_string())),
        }
    }
    Ok(batch)
}

/// Writes each item as one JSON line.
pub fn write_jsonl<W: Write, T: Serialize>(
    mut out: W,
    items: impl IntoIterator<Item = T>,
) -> Result<()> {
    for item in items {
        serde_json::to_writer(&mut out, &item)?;
        out.write_all(b"\n")?;
    }
    Ok(())
}
