//! Turns a [`Message`] into the feature values the profile models consume.

mod language;

use std::collections::BTreeSet;
use std::sync::OnceLock;

use regex::Regex;

pub use language::{
    bundled_corpus, bundled_languages, detect_language, ranked_ngrams, strip_entities,
    train_language_profiles, LanguageDetector, LanguageProfile, MAX_NGRAM, MIN_TEXT_CHARS,
    PROFILE_SIZE, UNDETERMINED,
};

use crate::model::{
    canonical_url_domain, message_hour, FeatureKind, FeatureValue, Message, NULL_VALUE,
};

pub const LOCAL: &str = "local";
pub const NONLOCAL: &str = "nonlocal";

fn mention_re() -> &'static Regex {
    static RE: OnceLock<Regex> = OnceLock::new();
    RE.get_or_init(|| Regex::new(r"(?:^|[^A-Za-z0-9_])@([A-Za-z0-9_]+)").unwrap())
}

fn hashtag_re() -> &'static Regex {
    static RE: OnceLock<Regex> = OnceLock::new();
    RE.get_or_init(|| Regex::new(r"(?:^|[^A-Za-z0-9_&])#([A-Za-z0-9_]+)").unwrap())
}

fn url_re() -> &'static Regex {
    static RE: OnceLock<Regex> = OnceLock::new();
    RE.get_or_init(|| Regex::new(r"(?i)\bhttps?://\S+").unwrap())
}

/// Explicit `urls`, or URLs found in the text when the field is empty.
pub fn message_urls(m: &Message) -> Vec<String> {
    if !m.urls.is_empty() {
        return m.urls.clone();
    }
    url_re()
        .find_iter(&m.text)
        .map(|u| u.as_str().to_string())
        .collect()
}

/// Explicit `mentions`, or `@name` tokens from the text.
pub fn message_mentions(m: &Message) -> Vec<String> {
    if !m.mentions.is_empty() {
        return m.mentions.clone();
    }
    mention_re()
        .captures_iter(&m.text)
        .map(|c| c[1].to_string())
        .collect()
}

/// Explicit `hashtags`, or `#tag` tokens from the text, lowercased.
pub fn message_hashtags(m: &Message) -> Vec<String> {
    if !m.hashtags.is_empty() {
        return m.hashtags.clone();
    }
    hashtag_re()
        .captures_iter(&m.text)
        .map(|c| c[1].to_lowercase())
        .collect()
}

pub fn proximity(m: &Message) -> &'static str {
    match &m.recipient_network {
        None => LOCAL,
        Some(target) if m.network.as_ref() == Some(target) => LOCAL,
        Some(_) => NONLOCAL,
    }
}

/// Feature values of `m` using the bundled language profiles.
pub fn extract_features(m: &Message, tz_offset_minutes: i32) -> Vec<FeatureValue> {
    extract_features_with(LanguageDetector::bundled(), m, tz_offset_minutes)
}

/// Exactly one value for each mandatory kind, followed by the distinct link
/// domains, mentions and hashtags (each sorted).
pub fn extract_features_with(
    detector: &LanguageDetector,
    m: &Message,
    tz_offset_minutes: i32,
) -> Vec<FeatureValue> {
    let language = match &m.language_hint {
        Some(hint) if !hint.is_empty() => hint.clone(),
        _ => detector.detect(&m.text),
    };
    let mut out = vec![
        FeatureValue::hour(message_hour(m, tz_offset_minutes)),
        FeatureValue::new(FeatureKind::Source, m.source_app.clone()),
        FeatureValue::new(FeatureKind::Language, language),
        FeatureValue::new(FeatureKind::Proximity, proximity(m)),
    ];

    let domains: BTreeSet<String> = message_urls(m)
        .iter()
        .filter_map(|u| canonical_url_domain(u).ok())
        .collect();
    let mentions: BTreeSet<String> = message_mentions(m).into_iter().collect();
    let topics: BTreeSet<String> = message_hashtags(m)
        .iter()
        .map(|t| crate::model::normalize_hashtag(t))
        .collect();

    for (kind, values) in [
        (FeatureKind::Link, domains),
        (FeatureKind::DirectInteraction, mentions),
        (FeatureKind::Topic, topics),
    ] {
        out.extend(
            values
                .into_iter()
                .filter(|v| !v.is_empty() && v != NULL_VALUE)
                .map(|v| FeatureValue::new(kind, v)),
        );
    }
    out
}
