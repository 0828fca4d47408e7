//! Train / score / detect drivers shared by the CLI, the examples and the
//! acceptance tests.

use std::collections::{BTreeMap, BTreeSet, HashMap, HashSet};
use std::fs::File;
use std::io::{BufReader, Write};
use std::path::Path;
use std::sync::Arc;

use chrono::{DateTime, Duration, Utc};
use log::{info, warn};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::campaign::{judge_group, predominant_app, ApplicationRegistry, GroupVerdict};
use crate::cluster::{cluster_window_with, tumbling_windows, GroupRecord, MessageGroup};
use crate::config::{read_allow_list, Config};
use crate::error::{Error, Result};
use crate::features::LanguageDetector;
use crate::model::{
    read_messages, rfc3339_seconds, write_jsonl, BehavioralProfile, Message, MessageBatch,
};
use crate::profile::{build_profile_with, streams_by_account};
use crate::scoring::{score_message_with, FeatureWeights, MessageScore};
use crate::store::ProfileStore;

/// Where detection and scoring get profiles from.
pub trait ProfileSource: Sync {
    fn fetch(&self, account_id: &str) -> Option<Arc<BehavioralProfile>>;
}

impl ProfileSource for ProfileStore {
    fn fetch(&self, account_id: &str) -> Option<Arc<BehavioralProfile>> {
        match self.load(account_id) {
            Ok(p) => Some(Arc::new(p)),
            Err(Error::NotFound(_)) => None,
            Err(e) => {
                warn!("{e}");
                None
            }
        }
    }
}

impl ProfileSource for HashMap<String, Arc<BehavioralProfile>> {
    fn fetch(&self, account_id: &str) -> Option<Arc<BehavioralProfile>> {
        self.get(account_id).cloned()
    }
}

/// Builds profiles on demand from a separate history stream.
pub struct HistoryProfiles {
    pipeline: Pipeline,
    streams: BTreeMap<String, Vec<Message>>,
}

impl HistoryProfiles {
    pub fn new(pipeline: &Pipeline, history: &[Message]) -> Self {
        HistoryProfiles {
            pipeline: pipeline.clone(),
            streams: streams_by_account(history),
        }
    }

    pub fn accounts(&self) -> impl Iterator<Item = &str> {
        self.streams.keys().map(String::as_str)
    }
}

impl ProfileSource for HistoryProfiles {
    fn fetch(&self, account_id: &str) -> Option<Arc<BehavioralProfile>> {
        let stream = self.streams.get(account_id)?;
        self.pipeline
            .train_account(account_id, stream)
            .ok()
            .map(Arc::new)
    }
}

/// Configured detector: weights, language profiles and thresholds.
#[derive(Clone)]
pub struct Pipeline {
    pub config: Config,
    pub weights: FeatureWeights,
    pub detector: Arc<LanguageDetector>,
}

impl Pipeline {
    pub fn new(config: Config) -> Result<Self> {
        config.validate()?;
        let detector = match &config.profile.language_corpus {
            Some(dir) => {
                let cache = config
                    .profile
                    .language_cache
                    .clone()
                    .unwrap_or_else(|| dir.join(".language-profiles.json"));
                LanguageDetector::load_or_train(dir, &cache)?
            }
            None => LanguageDetector::bundled().clone(),
        };
        Ok(Pipeline {
            weights: config.weights()?,
            detector: Arc::new(detector),
            config,
        })
    }

    /// Most recent `history_days` or most recent `history_messages`,
    /// whichever keeps more. `stream` must be sorted by time.
    pub fn apply_horizon<'a>(&self, stream: &'a [Message]) -> &'a [Message] {
        let Some(last) = stream.last() else {
            return stream;
        };
        let cutoff = last.timestamp - Duration::days(self.config.profile.history_days);
        let by_days = stream.len() - stream.partition_point(|m| m.timestamp < cutoff);
        let keep = by_days
            .max(self.config.profile.history_messages)
            .min(stream.len());
        &stream[stream.len() - keep..]
    }

    pub fn train_account(&self, account_id: &str, stream: &[Message]) -> Result<BehavioralProfile> {
        build_profile_with(
            &self.detector,
            account_id,
            self.apply_horizon(stream),
            self.config.profile.min_stream,
            self.config.tz_offset_for(account_id),
        )
    }

    /// One profile per account with enough history.
    pub fn train(&self, messages: &[Message]) -> TrainOutcome {
        let streams = streams_by_account(messages);
        let results: Vec<(String, usize, Result<BehavioralProfile>)> = streams
            .par_iter()
            .map(|(account, stream)| {
                (
                    account.clone(),
                    stream.len(),
                    self.train_account(account, stream),
                )
            })
            .collect();
        let mut outcome = TrainOutcome::default();
        for (account, len, result) in results {
            match result {
                Ok(p) => outcome.profiles.push(p),
                Err(Error::StreamTooShort { .. }) => outcome.skipped.push((account, len)),
                Err(e) => {
                    warn!("training {account} failed: {e}");
                    outcome.skipped.push((account, len));
                }
            }
        }
        outcome
    }

    pub fn score_one(&self, profile: &BehavioralProfile, m: &Message) -> MessageScore {
        score_message_with(
            &self.detector,
            profile,
            m,
            &self.weights,
            self.config.tz_offset_for(&m.account_id),
        )
    }

    /// Scores every message against its account's profile, keeping input
    /// order, and appends a per-account summary.
    pub fn score(&self, messages: &[Message], source: &dyn ProfileSource) -> Vec<ScoreRecord> {
        let accounts: BTreeSet<&str> = messages.iter().map(|m| m.account_id.as_str()).collect();
        let profiles: HashMap<&str, Option<Arc<BehavioralProfile>>> = accounts
            .into_par_iter()
            .map(|a| (a, source.fetch(a)))
            .collect();
        let mut records: Vec<ScoreRecord> = messages
            .par_iter()
            .map(
                |m| match profiles.get(m.account_id.as_str()).and_then(|p| p.as_ref()) {
                    Some(p) => ScoreRecord::Score(self.score_one(p, m)),
                    None => ScoreRecord::Unevaluable {
                        message_id: m.message_id.clone(),
                        account_id: m.account_id.clone(),
                        reason: Error::ProfileMissing(m.account_id.clone()).to_string(),
                    },
                },
            )
            .collect();
        let summary = ScoreSummary::from_records(&records);
        records.push(ScoreRecord::Summary(summary));
        records
    }

    /// Windows the stream, clusters each window, scores group members and
    /// judges every group. The registry is updated with every window's
    /// messages before that window's groups are judged.
    pub fn detect(
        &self,
        messages: &[Message],
        source: &dyn ProfileSource,
        registry: &mut ApplicationRegistry,
        allow_list: &BTreeSet<String>,
    ) -> DetectReport {
        let det = &self.config.detection;
        let params = self.config.judge_params();
        let mut report = DetectReport::default();
        let mut flagged: BTreeSet<String> = BTreeSet::new();

        for window in tumbling_windows(messages, det.window_seconds) {
            report.summary.windows += 1;
            report.summary.messages += window.messages.len();
            let groups = cluster_window_with(&window, det.min_group_size);
            report.summary.groups_total += groups.len();

            let mut selected: Vec<&MessageGroup> = Vec::new();
            for g in &groups {
                if allow_list.contains(&predominant_app(&g.messages)) {
                    report.summary.groups_skipped_allow_list += 1;
                } else {
                    selected.push(g);
                }
            }

            // largest groups first until the profile budget runs out
            let mut wanted: Vec<&str> = Vec::new();
            let mut seen: HashSet<&str> = HashSet::new();
            let mut evaluated: Vec<&MessageGroup> = Vec::new();
            for g in selected {
                let budget_left = det.budget.map(|b| b.saturating_sub(wanted.len()));
                let needs_new = g
                    .messages
                    .iter()
                    .any(|m| !seen.contains(m.account_id.as_str()));
                if budget_left == Some(0) && needs_new {
                    report.summary.groups_skipped_budget += 1;
                    continue;
                }
                for m in &g.messages {
                    let within = det.budget.is_none_or(|b| wanted.len() < b);
                    if within && seen.insert(m.account_id.as_str()) {
                        wanted.push(m.account_id.as_str());
                    }
                }
                evaluated.push(g);
            }

            let profiles: HashMap<&str, Arc<BehavioralProfile>> = wanted
                .par_iter()
                .filter_map(|a| source.fetch(a).map(|p| (*a, p)))
                .collect();
            report.summary.profiles_fetched += wanted.len();

            let members: Vec<&Message> = evaluated.iter().flat_map(|g| g.messages.iter()).collect();
            let scores: HashMap<String, MessageScore> = members
                .par_iter()
                .filter_map(|m| {
                    profiles
                        .get(m.account_id.as_str())
                        .map(|p| (m.message_id.clone(), self.score_one(p, m)))
                })
                .collect();

            let mut ordered: Vec<&Message> = window.messages.iter().collect();
            ordered.sort_by(|a, b| {
                a.timestamp
                    .cmp(&b.timestamp)
                    .then_with(|| a.message_id.cmp(&b.message_id))
            });
            for m in ordered {
                registry.observe(m, scores.get(&m.message_id).map(|s| s.violates_profile));
            }

            let registry_view: &ApplicationRegistry = registry;
            let verdicts: Vec<GroupVerdict> = evaluated
                .par_iter()
                .map(|g| judge_group(g, &scores, registry_view, &params))
                .collect();
            for v in verdicts {
                report.summary.groups_evaluated += 1;
                if v.no_evaluated_members {
                    report.summary.groups_without_evaluated_members += 1;
                }
                if v.compromised {
                    report.summary.groups_compromised += 1;
                    flagged.extend(v.compromised_accounts.iter().cloned());
                }
                report.verdicts.push(WindowVerdict {
                    window_start: window.start,
                    verdict: v,
                });
            }
            report
                .groups
                .extend(groups.iter().map(MessageGroup::record));
        }
        report.summary.accounts_flagged = flagged.into_iter().collect();
        report
    }
}

#[derive(Debug, Default)]
pub struct TrainOutcome {
    pub profiles: Vec<BehavioralProfile>,
    /// (account, stream length) for accounts below the minimum.
    pub skipped: Vec<(String, usize)>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "record", rename_all = "snake_case")]
pub enum ScoreRecord {
    Score(MessageScore),
    Unevaluable {
        message_id: String,
        account_id: String,
        reason: String,
    },
    Summary(ScoreSummary),
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
pub struct AccountScoreSummary {
    pub account_id: String,
    pub scored: usize,
    pub unevaluable: usize,
    pub violations: usize,
    pub violation_pct: f64,
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
pub struct ScoreSummary {
    pub messages: usize,
    pub scored: usize,
    pub unevaluable: usize,
    pub violations: usize,
    pub violation_pct: f64,
    pub accounts: Vec<AccountScoreSummary>,
}

fn pct(part: usize, whole: usize) -> f64 {
    if whole == 0 {
        0.0
    } else {
        100.0 * part as f64 / whole as f64
    }
}

impl ScoreSummary {
    fn from_records(records: &[ScoreRecord]) -> Self {
        let mut per: BTreeMap<&str, AccountScoreSummary> = BTreeMap::new();
        for r in records {
            match r {
                ScoreRecord::Score(s) => {
                    let e = per.entry(&s.account_id).or_default();
                    e.scored += 1;
                    e.violations += usize::from(s.violates_profile);
                }
                ScoreRecord::Unevaluable { account_id, .. } => {
                    per.entry(account_id).or_default().unevaluable += 1;
                }
                ScoreRecord::Summary(_) => {}
            }
        }
        let accounts: Vec<AccountScoreSummary> = per
            .into_iter()
            .map(|(id, mut a)| {
                a.account_id = id.to_string();
                a.violation_pct = pct(a.violations, a.scored);
                a
            })
            .collect();
        let scored = accounts.iter().map(|a| a.scored).sum();
        let unevaluable = accounts.iter().map(|a| a.unevaluable).sum();
        let violations = accounts.iter().map(|a| a.violations).sum();
        ScoreSummary {
            messages: scored + unevaluable,
            scored,
            unevaluable,
            violations,
            violation_pct: pct(violations, scored),
            accounts,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct WindowVerdict {
    #[serde(with = "rfc3339_seconds")]
    pub window_start: DateTime<Utc>,
    #[serde(flatten)]
    pub verdict: GroupVerdict,
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
pub struct DetectSummary {
    pub windows: usize,
    pub messages: usize,
    pub malformed_lines: usize,
    pub groups_total: usize,
    pub groups_evaluated: usize,
    pub groups_compromised: usize,
    pub groups_skipped_allow_list: usize,
    pub groups_skipped_budget: usize,
    pub groups_without_evaluated_members: usize,
    pub profiles_fetched: usize,
    pub accounts_flagged: Vec<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "record", rename_all = "snake_case")]
pub enum DetectRecord {
    Verdict(WindowVerdict),
    Summary(DetectSummary),
}

#[derive(Debug, Clone, Default)]
pub struct DetectReport {
    /// Ordered by window start, then group size descending.
    pub verdicts: Vec<WindowVerdict>,
    pub groups: Vec<GroupRecord>,
    pub summary: DetectSummary,
}

impl DetectReport {
    pub fn has_detections(&self) -> bool {
        self.summary.groups_compromised > 0
    }

    pub fn write_jsonl<W: Write>(&self, out: W) -> Result<()> {
        let records = self
            .verdicts
            .iter()
            .cloned()
            .map(DetectRecord::Verdict)
            .chain(std::iter::once(DetectRecord::Summary(self.summary.clone())));
        write_jsonl(out, records)
    }
}

/// Reads a JSONL message file.
pub fn read_message_file(path: &Path) -> Result<MessageBatch> {
    let file = File::open(path).map_err(|e| Error::io(path, e))?;
    let batch = read_messages(BufReader::new(file))?;
    for (line, reason) in batch.malformed.iter().take(5) {
        warn!("{}:{line}: skipped: {reason}", path.display());
    }
    Ok(batch)
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
pub struct TrainReport {
    pub lines: usize,
    pub malformed_lines: usize,
    pub accounts: usize,
    pub trained: usize,
    pub skipped: Vec<(String, usize)>,
}

/// Trains profiles for every account in `stream_file` and saves them.
pub fn cmd_train(stream_file: &Path, store: &ProfileStore, config: &Config) -> Result<TrainReport> {
    let batch = read_message_file(stream_file)?;
    if batch.all_malformed() {
        return Err(Error::Parse {
            line: batch.malformed[0].0,
            reason: format!("all {} lines malformed", batch.total_lines),
        });
    }
    if batch.messages.is_empty() {
        warn!("{}: no messages", stream_file.display());
    }
    let pipeline = Pipeline::new(config.clone())?;
    let outcome = pipeline.train(&batch.messages);
    outcome
        .profiles
        .par_iter()
        .map(|p| store.save(p).map(|_| ()))
        .collect::<Result<Vec<()>>>()?;
    let report = TrainReport {
        lines: batch.total_lines,
        malformed_lines: batch.malformed.len(),
        accounts: outcome.profiles.len() + outcome.skipped.len(),
        trained: outcome.profiles.len(),
        skipped: outcome.skipped,
    };
    info!(
        "trained {} profiles, skipped {} short streams",
        report.trained,
        report.skipped.len()
    );
    Ok(report)
}

/// Scores `message_file` against stored profiles and writes score JSONL.
pub fn cmd_score<W: Write>(
    message_file: &Path,
    store: &ProfileStore,
    config: &Config,
    out: W,
) -> Result<ScoreSummary> {
    let batch = read_message_file(message_file)?;
    if batch.all_malformed() {
        return Err(Error::Parse {
            line: batch.malformed[0].0,
            reason: format!("all {} lines malformed", batch.total_lines),
        });
    }
    let pipeline = Pipeline::new(config.clone())?;
    let records = pipeline.score(&batch.messages, store);
    let summary = match records.last() {
        Some(ScoreRecord::Summary(s)) => s.clone(),
        _ => ScoreSummary::default(),
    };
    write_jsonl(out, &records)?;
    Ok(summary)
}

/// Runs detection over `stream_file`. Profiles come from `history_file`
/// when given, otherwise from the store. The application registry is
/// loaded from and saved back to the store.
pub fn cmd_detect<W: Write>(
    stream_file: &Path,
    history_file: Option<&Path>,
    store: &ProfileStore,
    config: &Config,
    out: W,
    groups_out: Option<&Path>,
) -> Result<DetectReport> {
    let batch = read_message_file(stream_file)?;
    if batch.all_malformed() {
        return Err(Error::Parse {
            line: batch.malformed[0].0,
            reason: format!("all {} lines malformed", batch.total_lines),
        });
    }
    let pipeline = Pipeline::new(config.clone())?;
    let allow_list = match &config.detection.allow_list {
        Some(path) => read_allow_list(path)?,
        None => BTreeSet::new(),
    };
    let registry_path = store.applications_path();
    let mut registry =
        ApplicationRegistry::load(&registry_path, config.sample_size(), config.detection.seed)?;

    let mut report = match history_file {
        Some(path) => {
            let history = read_message_file(path)?;
            let mut past = history.messages.clone();
            past.sort_by(|a, b| {
                a.timestamp
                    .cmp(&b.timestamp)
                    .then_with(|| a.message_id.cmp(&b.message_id))
            });
            for m in &past {
                registry.observe(m, None);
            }
            let source = HistoryProfiles::new(&pipeline, &past);
            pipeline.detect(&batch.messages, &source, &mut registry, &allow_list)
        }
        None => pipeline.detect(&batch.messages, store, &mut registry, &allow_list),
    };
    report.summary.malformed_lines = batch.malformed.len();
    registry.save(&registry_path)?;
    report.write_jsonl(out)?;
    if let Some(path) = groups_out {
        let file = File::create(path).map_err(|e| Error::io(path, e))?;
        write_jsonl(std::io::BufWriter::new(file), &report.groups)?;
    }
    Ok(report)
}
