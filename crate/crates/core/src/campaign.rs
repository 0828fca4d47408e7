//! Decides which message groups are campaigns run over compromised accounts.

use std::collections::{BTreeMap, BTreeSet, HashMap};
use std::fs;
use std::io::ErrorKind;
use std::path::Path;

use chrono::{DateTime, Utc};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::cluster::{MessageGroup, SimilarityKind};
use crate::error::{Error, Result};
use crate::model::{rfc3339_seconds, Message};
use crate::scoring::MessageScore;

pub const DEFAULT_SLOPE: f64 = -0.005;
pub const DEFAULT_INTERCEPT: f64 = 0.82;
pub const DEFAULT_FLOOR: f64 = 0.1;
pub const DEFAULT_LEVENSHTEIN_CUTOFF: f64 = 0.35;
pub const DEFAULT_POPULARITY_CUTOFF: f64 = 1_000_000.0;

/// Size-dependent violation threshold `max(floor, slope·n + intercept)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ThresholdParams {
    pub slope: f64,
    pub intercept: f64,
    pub floor: f64,
}

impl Default for ThresholdParams {
    fn default() -> Self {
        ThresholdParams {
            slope: DEFAULT_SLOPE,
            intercept: DEFAULT_INTERCEPT,
            floor: DEFAULT_FLOOR,
        }
    }
}

impl ThresholdParams {
    pub fn threshold(&self, n: usize) -> f64 {
        self.floor.max(self.slope * n as f64 + self.intercept)
    }
}

pub fn group_threshold(n: usize) -> f64 {
    ThresholdParams::default().threshold(n)
}

/// Edit distance over Unicode scalar values.
pub fn levenshtein(a: &str, b: &str) -> usize {
    let a: Vec<char> = a.chars().collect();
    let b: Vec<char> = b.chars().collect();
    if a.is_empty() {
        return b.len();
    }
    if b.is_empty() {
        return a.len();
    }
    let mut prev: Vec<usize> = (0..=b.len()).collect();
    let mut cur = vec![0; b.len() + 1];
    for (i, ca) in a.iter().enumerate() {
        cur[0] = i + 1;
        for (j, cb) in b.iter().enumerate() {
            let substitution = prev[j] + usize::from(ca != cb);
            cur[j + 1] = substitution.min(prev[j + 1] + 1).min(cur[j] + 1);
        }
        std::mem::swap(&mut prev, &mut cur);
    }
    prev[b.len()]
}

/// `1 - distance / max(len)`; two empty strings are identical.
pub fn lev_ratio(a: &str, b: &str) -> f64 {
    let longest = a.chars().count().max(b.chars().count());
    if longest == 0 {
        return 1.0;
    }
    1.0 - levenshtein(a, b) as f64 / longest as f64
}

/// Mean ratio over all unordered pairs, `None` for fewer than two texts.
pub fn mean_pairwise_ratio(texts: &[String]) -> Option<f64> {
    if texts.len() < 2 {
        return None;
    }
    let mut total = 0.0;
    let mut pairs = 0usize;
    for (i, a) in texts.iter().enumerate() {
        for b in &texts[i + 1..] {
            total += lev_ratio(a, b);
            pairs += 1;
        }
    }
    Some(total / pairs as f64)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum AppClass {
    Client,
    Bulk,
}

/// What the detector knows about one posting application.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ApplicationStats {
    pub app: String,
    #[serde(with = "rfc3339_seconds")]
    pub first_seen: DateTime<Utc>,
    #[serde(default, with = "optional_rfc3339_seconds")]
    pub first_violation: Option<DateTime<Utc>>,
    pub distinct_accounts_before_first_violation: u64,
    pub sampled_messages: Vec<String>,
    pub messages_seen: u64,
    /// Accounts seen so far; emptied once the first violation fixes the count.
    #[serde(default)]
    pub accounts_seen: BTreeSet<String>,
}

impl ApplicationStats {
    pub fn new(app: impl Into<String>, first_seen: DateTime<Utc>) -> Self {
        ApplicationStats {
            app: app.into(),
            first_seen,
            first_violation: None,
            distinct_accounts_before_first_violation: 0,
            sampled_messages: Vec::new(),
            messages_seen: 0,
            accounts_seen: BTreeSet::new(),
        }
    }

    /// Distinct accounts before the first violation × seconds from first
    /// sighting to that violation. `None` while no violation was seen.
    pub fn popularity_score(&self) -> Option<f64> {
        let violation = self.first_violation?;
        let age = (violation - self.first_seen).num_seconds().max(0);
        Some(self.distinct_accounts_before_first_violation as f64 * age as f64)
    }

    /// An application that never produced a violation is treated as popular.
    pub fn is_popular(&self, cutoff: f64) -> bool {
        self.popularity_score().is_none_or(|s| s > cutoff)
    }
}

mod optional_rfc3339_seconds {
    use chrono::{DateTime, Utc};
    use serde::{Deserialize, Deserializer, Serializer};

    pub fn serialize<S: Serializer>(ts: &Option<DateTime<Utc>>, ser: S) -> Result<S::Ok, S::Error> {
        match ts {
            Some(ts) => crate::model::rfc3339_seconds::serialize(ts, ser),
            None => ser.serialize_none(),
        }
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(
        de: D,
    ) -> Result<Option<DateTime<Utc>>, D::Error> {
        #[derive(Deserialize)]
        struct Wrap(#[serde(with = "crate::model::rfc3339_seconds")] DateTime<Utc>);
        Ok(Option::<Wrap>::deserialize(de)?.map(|w| w.0))
    }
}

/// Client unless the sampled messages look template-generated (mean
/// pairwise Levenshtein ratio at or above `cutoff`). Fewer than two samples
/// default to client.
pub fn classify_application(stats: &ApplicationStats, cutoff: f64) -> AppClass {
    match mean_pairwise_ratio(&stats.sampled_messages) {
        Some(ratio) if ratio >= cutoff => AppClass::Bulk,
        _ => AppClass::Client,
    }
}

/// Per-application history accumulated across windows.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ApplicationRegistry {
    pub sample_size: usize,
    pub seed: u64,
    pub apps: BTreeMap<String, ApplicationStats>,
}

impl ApplicationRegistry {
    pub fn new(sample_size: usize, seed: u64) -> Self {
        ApplicationRegistry {
            sample_size,
            seed,
            apps: BTreeMap::new(),
        }
    }

    pub fn get(&self, app: &str) -> Option<&ApplicationStats> {
        self.apps.get(app)
    }

    /// Records one message. `violated` is `Some(true)` when the message was
    /// scored and violated its account's profile. Messages should arrive in
    /// timestamp order for the account count to be meaningful.
    pub fn observe(&mut self, m: &Message, violated: Option<bool>) {
        let sample_size = self.sample_size;
        let seed = self.seed;
        let stats = self
            .apps
            .entry(m.source_app.clone())
            .or_insert_with(|| ApplicationStats::new(m.source_app.clone(), m.timestamp));
        if m.timestamp < stats.first_seen {
            stats.first_seen = m.timestamp;
        }

        // reservoir sample; the draw depends only on (seed, app, position)
        stats.messages_seen += 1;
        if stats.sampled_messages.len() < sample_size {
            stats.sampled_messages.push(m.text.clone());
        } else if sample_size > 0 {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            rng.set_stream(app_stream(&stats.app));
            rng.set_word_pos(u128::from(stats.messages_seen) * 4);
            let slot = rng.gen_range(0..stats.messages_seen) as usize;
            if slot < sample_size {
                stats.sampled_messages[slot] = m.text.clone();
            }
        }

        if stats.first_violation.is_none() {
            if violated == Some(true) {
                stats.first_violation = Some(m.timestamp.max(stats.first_seen));
                stats.distinct_accounts_before_first_violation = stats.accounts_seen.len() as u64;
                stats.accounts_seen.clear();
            } else {
                stats.accounts_seen.insert(m.account_id.clone());
            }
        }
    }

    pub fn load(path: &Path, sample_size: usize, seed: u64) -> Result<Self> {
        match fs::read(path) {
            Ok(raw) => Ok(serde_json::from_slice(&raw)?),
            Err(e) if e.kind() == ErrorKind::NotFound => Ok(Self::new(sample_size, seed)),
            Err(e) => Err(Error::io(path, e)),
        }
    }

    pub fn save(&self, path: &Path) -> Result<()> {
        crate::store::write_atomic(path, &serde_json::to_vec_pretty(self)?)
    }
}

fn app_stream(app: &str) -> u64 {
    let digest = Sha256::digest(app.as_bytes());
    let mut bytes = [0u8; 8];
    bytes.copy_from_slice(&digest[..8]);
    u64::from_le_bytes(bytes)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct JudgeParams {
    pub threshold: ThresholdParams,
    pub levenshtein_cutoff: f64,
    pub popularity_cutoff: f64,
}

impl Default for JudgeParams {
    fn default() -> Self {
        JudgeParams {
            threshold: ThresholdParams::default(),
            levenshtein_cutoff: DEFAULT_LEVENSHTEIN_CUTOFF,
            popularity_cutoff: DEFAULT_POPULARITY_CUTOFF,
        }
    }
}

/// Per-member outcome in a verdict. `composite` is absent for members whose
/// account has no profile.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MemberOutcome {
    pub message_id: String,
    pub account_id: String,
    pub composite: Option<f64>,
    pub violates_profile: Option<bool>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GroupVerdict {
    pub group_id: String,
    pub similarity_kind: SimilarityKind,
    pub key: String,
    pub n: usize,
    pub evaluated: usize,
    pub violations: usize,
    pub fraction: f64,
    pub threshold: f64,
    pub predominant_app: String,
    pub app_class: AppClass,
    pub app_popular: bool,
    pub popularity_score: Option<f64>,
    pub compromised: bool,
    /// Set when no member could be scored; `fraction` is then 0.
    pub no_evaluated_members: bool,
    pub compromised_accounts: Vec<String>,
    pub members: Vec<MemberOutcome>,
}

/// Most frequent source application; ties go to the smallest name.
pub fn predominant_app(messages: &[Message]) -> String {
    let mut counts: HashMap<&str, usize> = HashMap::new();
    for m in messages {
        *counts.entry(m.source_app.as_str()).or_insert(0) += 1;
    }
    counts
        .into_iter()
        .max_by(|a, b| a.1.cmp(&b.1).then_with(|| b.0.cmp(a.0)))
        .map(|(app, _)| app.to_string())
        .unwrap_or_default()
}

/// Judges one group. `scores` maps message ids to their score; members
/// missing from the map are unevaluable and excluded from the fraction.
pub fn judge_group(
    g: &MessageGroup,
    scores: &HashMap<String, MessageScore>,
    registry: &ApplicationRegistry,
    params: &JudgeParams,
) -> GroupVerdict {
    let n = g.size();
    let mut members = Vec::with_capacity(n);
    let mut evaluated = 0;
    let mut violations = 0;
    let mut violators = BTreeSet::new();
    for m in &g.messages {
        let score = scores.get(&m.message_id);
        if let Some(s) = score {
            evaluated += 1;
            if s.violates_profile {
                violations += 1;
                violators.insert(m.account_id.clone());
            }
        }
        members.push(MemberOutcome {
            message_id: m.message_id.clone(),
            account_id: m.account_id.clone(),
            composite: score.map(|s| s.composite),
            violates_profile: score.map(|s| s.violates_profile),
        });
    }

    let fraction = if evaluated == 0 {
        0.0
    } else {
        violations as f64 / evaluated as f64
    };
    let threshold = params.threshold.threshold(n);
    let app = predominant_app(&g.messages);
    let stats = registry.get(&app);
    let app_class = stats
        .map(|s| classify_application(s, params.levenshtein_cutoff))
        .unwrap_or(AppClass::Client);
    let app_popular = stats.is_none_or(|s| s.is_popular(params.popularity_cutoff));
    let popularity_score = stats.and_then(ApplicationStats::popularity_score);

    let suspicious = evaluated > 0 && fraction > threshold;
    let compromised = suspicious
        && match app_class {
            AppClass::Client => true,
            AppClass::Bulk => !app_popular,
        };

    GroupVerdict {
        group_id: g.group_id.clone(),
        similarity_kind: g.similarity_kind,
        key: g.key.clone(),
        n,
        evaluated,
        violations,
        fraction,
        threshold,
        predominant_app: app,
        app_class,
        app_popular,
        popularity_score,
        compromised,
        no_evaluated_members: evaluated == 0,
        compromised_accounts: if compromised {
            violators.into_iter().collect()
        } else {
            Vec::new()
        },
        members,
    }
}
