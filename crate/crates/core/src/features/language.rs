//! Character n-gram language identification (Cavnar–Trenkle ranked
//! profiles with out-of-place distance).

use std::collections::HashMap;
use std::fs;
use std::path::Path;
use std::sync::OnceLock;

use log::warn;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::error::{Error, Result};

/// Number of ranked n-grams kept per profile; also the out-of-place penalty
/// for n-grams missing from a language profile.
pub const PROFILE_SIZE: usize = 400;
pub const MAX_NGRAM: usize = 5;
/// Texts shorter than this (in characters, after stripping URLs, mentions
/// and hashtags) are not classified.
pub const MIN_TEXT_CHARS: usize = 20;
pub const UNDETERMINED: &str = "und";

const CACHE_FORMAT_VERSION: u32 = 1;

const BUNDLED: &[(&str, &str)] = &[
    ("de", include_str!("../../corpora/de.txt")),
    ("en", include_str!("../../corpora/en.txt")),
    ("es", include_str!("../../corpora/es.txt")),
    ("fr", include_str!("../../corpora/fr.txt")),
    ("it", include_str!("../../corpora/it.txt")),
    ("nl", include_str!("../../corpora/nl.txt")),
    ("pt", include_str!("../../corpora/pt.txt")),
];

/// Text of a bundled corpus, by language code.
pub fn bundled_corpus(code: &str) -> Option<&'static str> {
    BUNDLED
        .iter()
        .find(|(c, _)| *c == code)
        .map(|(_, text)| *text)
}

/// Codes of the bundled corpora, sorted.
pub fn bundled_languages() -> impl Iterator<Item = &'static str> {
    BUNDLED.iter().map(|(c, _)| *c)
}

/// Ranked n-gram profile for one language. `ngrams[i].1 == i`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LanguageProfile {
    pub code: String,
    pub ngrams: Vec<(String, u32)>,
}

impl LanguageProfile {
    pub fn from_text(code: impl Into<String>, text: &str) -> Self {
        LanguageProfile {
            code: code.into(),
            ngrams: ranked_ngrams(text, PROFILE_SIZE),
        }
    }
}

/// Counts n-grams (n = 1..=5) over whitespace-padded alphabetic tokens and
/// returns the `limit` most frequent, ranked from 0. Ties are broken
/// lexicographically.
pub fn ranked_ngrams(text: &str, limit: usize) -> Vec<(String, u32)> {
    let mut counts: HashMap<String, u32> = HashMap::new();
    let lowered = text.to_lowercase();
    for token in lowered.split(|c: char| !c.is_alphabetic()) {
        if token.is_empty() {
            continue;
        }
        let padded: Vec<char> = std::iter::once('_')
            .chain(token.chars())
            .chain(std::iter::once('_'))
            .collect();
        for n in 1..=MAX_NGRAM {
            if n > padded.len() {
                break;
            }
            for window in padded.windows(n) {
                if window.iter().all(|c| *c == '_') {
                    continue;
                }
                *counts.entry(window.iter().collect()).or_insert(0) += 1;
            }
        }
    }
    let mut ranked: Vec<(String, u32)> = counts.into_iter().collect();
    ranked.sort_by(|a, b| b.1.cmp(&a.1).then_with(|| a.0.cmp(&b.0)));
    ranked.truncate(limit);
    ranked
        .into_iter()
        .enumerate()
        .map(|(rank, (gram, _))| (gram, rank as u32))
        .collect()
}

/// Removes URLs, @mentions and #hashtags so they do not influence the guess.
pub fn strip_entities(text: &str) -> String {
    text.split_whitespace()
        .filter(|tok| {
            let lower = tok.to_ascii_lowercase();
            !(lower.starts_with("http://")
                || lower.starts_with("https://")
                || lower.starts_with("www.")
                || tok.starts_with('@')
                || tok.starts_with('#'))
        })
        .collect::<Vec<_>>()
        .join(" ")
}

#[derive(Debug, Clone)]
pub struct LanguageDetector {
    profiles: Vec<LanguageProfile>,
    ranks: Vec<HashMap<String, u32>>,
}

#[derive(Serialize, Deserialize)]
struct ProfileCache {
    format_version: u32,
    corpus_digest: String,
    profiles: Vec<LanguageProfile>,
}

impl LanguageDetector {
    pub fn new(mut profiles: Vec<LanguageProfile>) -> Self {
        profiles.sort_by(|a, b| a.code.cmp(&b.code));
        let ranks = profiles
            .iter()
            .map(|p| p.ngrams.iter().cloned().collect())
            .collect();
        LanguageDetector { profiles, ranks }
    }

    /// Detector over the bundled corpora (de, en, es, fr, it, nl, pt).
    pub fn bundled() -> &'static LanguageDetector {
        static BUNDLED_DETECTOR: OnceLock<LanguageDetector> = OnceLock::new();
        BUNDLED_DETECTOR.get_or_init(|| {
            LanguageDetector::new(
                BUNDLED
                    .iter()
                    .map(|(code, text)| LanguageProfile::from_text(*code, text))
                    .collect(),
            )
        })
    }

    /// Loads profiles from `cache_path` when it matches the current corpus
    /// contents, otherwise retrains from `corpus_dir` and rewrites the cache.
    pub fn load_or_train(corpus_dir: &Path, cache_path: &Path) -> Result<Self> {
        let digest = corpus_digest(corpus_dir)?;
        if let Ok(raw) = fs::read(cache_path) {
            if let Ok(cache) = serde_json::from_slice::<ProfileCache>(&raw) {
                if cache.format_version == CACHE_FORMAT_VERSION && cache.corpus_digest == digest {
                    return Ok(LanguageDetector::new(cache.profiles));
                }
            }
        }
        let profiles = train_language_profiles(corpus_dir)?;
        let cache = ProfileCache {
            format_version: CACHE_FORMAT_VERSION,
            corpus_digest: digest,
            profiles: profiles.clone(),
        };
        fs::write(cache_path, serde_json::to_vec(&cache)?).map_err(|e| Error::io(cache_path, e))?;
        Ok(LanguageDetector::new(profiles))
    }

    pub fn profiles(&self) -> &[LanguageProfile] {
        &self.profiles
    }

    /// Out-of-place distance of a document profile to every language,
    /// sorted ascending (ties by code).
    pub fn distances(&self, text: &str) -> Vec<(&str, u64)> {
        let doc = ranked_ngrams(text, PROFILE_SIZE);
        let mut out: Vec<(&str, u64)> = self
            .profiles
            .iter()
            .zip(&self.ranks)
            .map(|(profile, ranks)| {
                let dist = doc
                    .iter()
                    .map(|(gram, rank)| match ranks.get(gram) {
                        Some(r) => u64::from(r.abs_diff(*rank)),
                        None => PROFILE_SIZE as u64,
                    })
                    .sum();
                (profile.code.as_str(), dist)
            })
            .collect();
        out.sort_by(|a, b| a.1.cmp(&b.1).then_with(|| a.0.cmp(b.0)));
        out
    }

    pub fn detect(&self, text: &str) -> String {
        let stripped = strip_entities(text);
        if stripped.chars().count() < MIN_TEXT_CHARS || self.profiles.is_empty() {
            return UNDETERMINED.to_string();
        }
        self.distances(&stripped)
            .first()
            .map(|(code, _)| code.to_string())
            .unwrap_or_else(|| UNDETERMINED.to_string())
    }
}

/// Language of `text` according to the bundled profiles.
pub fn detect_language(text: &str) -> String {
    LanguageDetector::bundled().detect(text)
}

/// One profile per non-empty `<code>.txt` file in `corpus_dir`, sorted by
/// code. Empty files are skipped with a warning.
pub fn train_language_profiles(corpus_dir: &Path) -> Result<Vec<LanguageProfile>> {
    let mut profiles = Vec::new();
    for (code, path) in corpus_files(corpus_dir)? {
        let text = fs::read_to_string(&path).map_err(|e| Error::io(&path, e))?;
        if text.trim().is_empty() {
            warn!("skipping empty language corpus {}", path.display());
            continue;
        }
        profiles.push(LanguageProfile::from_text(code, &text));
    }
    Ok(profiles)
}

fn corpus_files(corpus_dir: &Path) -> Result<Vec<(String, std::path::PathBuf)>> {
    let mut files = Vec::new();
    for entry in fs::read_dir(corpus_dir).map_err(|e| Error::io(corpus_dir, e))? {
        let path = entry.map_err(|e| Error::io(corpus_dir, e))?.path();
        if path.extension().and_then(|e| e.to_str()) != Some("txt") {
            continue;
        }
        if let Some(code) = path.file_stem().and_then(|s| s.to_str()) {
            files.push((code.to_string(), path.clone()));
        }
    }
    files.sort();
    Ok(files)
}

fn corpus_digest(corpus_dir: &Path) -> Result<String> {
    let mut hasher = Sha256::new();
    for (code, path) in corpus_files(corpus_dir)? {
        let bytes = fs::read(&path).map_err(|e| Error::io(&path, e))?;
        hasher.update(code.as_bytes());
        hasher.update((bytes.len() as u64).to_le_bytes());
        hasher.update(&bytes);
    }
    Ok(hex::encode(hasher.finalize()))
}
