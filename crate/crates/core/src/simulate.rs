//! Synthetic labeled message streams.
//!
//! A TOML spec describes a population of accounts with stable habits, plus
//! optional bulk applications, a trending link and injected campaigns. The
//! generator emits a history stream (for training), a detection stream and
//! the ground truth of injected messages. Output is a pure function of the
//! spec and the seed.
//!
//! ```toml
//! accounts = 200
//! history_start = "2024-03-01T00:00:00Z"
//! history_days = 14
//! detection_start = "2024-03-15T03:00:00Z"
//!
//! [[campaigns]]
//! name = "prize"
//! app = "PromoBlaster"
//! victims = 50
//! stealth = "none"
//! ```

use std::collections::BTreeSet;
use std::fs::{self, File};
use std::io::BufWriter;
use std::path::Path;

use chrono::{DateTime, Duration, Utc};
use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::features::bundled_corpus;
use crate::model::{write_jsonl, Message};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SimulationSpec {
    #[serde(default)]
    pub seed: u64,
    pub accounts: usize,
    #[serde(default = "defaults::history_messages")]
    pub history_messages: [usize; 2],
    pub history_start: DateTime<Utc>,
    #[serde(default = "defaults::history_days")]
    pub history_days: i64,
    pub detection_start: DateTime<Utc>,
    #[serde(default = "defaults::detection_seconds")]
    pub detection_seconds: i64,
    /// Benign posts per account inside the detection period (inclusive range).
    #[serde(default = "defaults::window_posts")]
    pub window_posts: [usize; 2],
    #[serde(default = "defaults::active_hours")]
    pub active_hours: [u32; 2],
    #[serde(default = "defaults::sources")]
    pub sources: Vec<String>,
    #[serde(default = "defaults::languages")]
    pub languages: Vec<String>,
    #[serde(default = "defaults::link_domains")]
    pub link_domains: Vec<String>,
    #[serde(default = "defaults::topics")]
    pub topics: Vec<String>,
    #[serde(default)]
    pub bulk_apps: Vec<BulkAppSpec>,
    #[serde(default)]
    pub trending: Vec<TrendingSpec>,
    #[serde(default)]
    pub campaigns: Vec<CampaignSpec>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct BulkAppSpec {
    pub app: String,
    /// `{n}` is replaced by a small random number.
    pub template: String,
    pub users: usize,
    /// Fraction of each user's history posted through the app.
    #[serde(default = "defaults::bulk_share")]
    pub share: f64,
    /// Chance that a user posts through the app during detection.
    #[serde(default = "defaults::half")]
    pub window_probability: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TrendingSpec {
    pub url: String,
    pub text: String,
    pub sharers: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CampaignSpec {
    pub name: String,
    pub app: String,
    #[serde(default = "defaults::template")]
    pub template: String,
    /// `{n}` is replaced by the victim index.
    #[serde(default = "defaults::campaign_url")]
    pub url: String,
    /// Defaults to five minutes into the detection period.
    #[serde(default)]
    pub start: Option<DateTime<Utc>>,
    pub victims: usize,
    #[serde(default)]
    pub stealth: Stealth,
}

/// Features the attacker copies from each victim's habits.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(untagged)]
pub enum Stealth {
    #[default]
    #[serde(skip)]
    Unset,
    Level(StealthLevel),
    Features(Vec<Mimic>),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum StealthLevel {
    None,
    AllFeatures,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Mimic {
    Source,
    Time,
    Link,
    Mention,
    Language,
    Topic,
}

impl Stealth {
    pub fn mimicked(&self) -> BTreeSet<Mimic> {
        use Mimic::*;
        match self {
            Stealth::Unset | Stealth::Level(StealthLevel::None) => BTreeSet::new(),
            Stealth::Level(StealthLevel::AllFeatures) => {
                [Source, Time, Link, Mention, Language, Topic].into()
            }
            Stealth::Features(f) => f.iter().copied().collect(),
        }
    }
}

mod defaults {
    pub fn history_messages() -> [usize; 2] {
        [20, 40]
    }
    pub fn history_days() -> i64 {
        14
    }
    pub fn detection_seconds() -> i64 {
        3600
    }
    pub fn window_posts() -> [usize; 2] {
        [0, 1]
    }
    pub fn active_hours() -> [u32; 2] {
        [9, 20]
    }
    pub fn sources() -> Vec<String> {
        [
            "Twitter Web Client",
            "Twitter for iPhone",
            "Twitter for Android",
            "TweetDeck",
            "Hootsuite",
            "SocialFlow",
        ]
        .map(String::from)
        .to_vec()
    }
    pub fn languages() -> Vec<String> {
        ["en", "en", "en", "en", "de", "es", "fr", "it", "nl", "pt"]
            .map(String::from)
            .to_vec()
    }
    pub fn link_domains() -> Vec<String> {
        [
            "news.example.com",
            "blog.example.org",
            "photos.example.net",
            "shop.example.com",
            "video.example.tv",
            "sports.example.com",
            "music.example.fm",
            "tech.example.io",
        ]
        .map(String::from)
        .to_vec()
    }
    pub fn topics() -> Vec<String> {
        [
            "news", "sports", "music", "tech", "travel", "food", "politics", "science", "movies",
            "weather",
        ]
        .map(String::from)
        .to_vec()
    }
    pub fn bulk_share() -> f64 {
        0.3
    }
    pub fn half() -> f64 {
        0.5
    }
    pub fn template() -> String {
        "Congratulations you have been selected to win a free {item} today, claim it here".into()
    }
    pub fn campaign_url() -> String {
        "http://win-prizes.biz/claim?id={n}".into()
    }
}

impl SimulationSpec {
    /// Parses a TOML spec; syntax errors carry the offending line number.
    pub fn from_toml(raw: &str) -> Result<Self> {
        let spec: SimulationSpec = toml::from_str(raw).map_err(|e| {
            let line = e
                .span()
                .map(|span| raw[..span.start.min(raw.len())].matches('\n').count() + 1)
                .unwrap_or(0);
            Error::Parse {
                line,
                reason: e.message().to_string(),
            }
        })?;
        spec.validate()?;
        Ok(spec)
    }

    pub fn load(path: &Path) -> Result<Self> {
        let raw = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Self::from_toml(&raw)
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |msg: String| Err(Error::SimulationSpec(msg));
        if self.accounts == 0 {
            return bad("accounts must be positive".into());
        }
        if self.history_messages[0] > self.history_messages[1] || self.history_messages[1] == 0 {
            return bad(format!(
                "history_messages range {:?} is empty",
                self.history_messages
            ));
        }
        if self.window_posts[0] > self.window_posts[1] {
            return bad(format!(
                "window_posts range {:?} is empty",
                self.window_posts
            ));
        }
        if self.active_hours[0] > self.active_hours[1] || self.active_hours[1] > 23 {
            return bad(format!(
                "active_hours {:?} must be an ascending pair within 0..=23",
                self.active_hours
            ));
        }
        if self.history_days <= 0 || self.detection_seconds <= 0 {
            return bad("history_days and detection_seconds must be positive".into());
        }
        let history_end = self.history_start + Duration::days(self.history_days);
        if self.detection_start < history_end {
            return bad("detection_start must not precede the end of the history period".into());
        }
        for (name, pool) in [
            ("sources", &self.sources),
            ("languages", &self.languages),
            ("link_domains", &self.link_domains),
            ("topics", &self.topics),
        ] {
            if pool.is_empty() {
                return bad(format!("{name} must not be empty"));
            }
        }
        if let Some(lang) = self.languages.iter().find(|l| bundled_corpus(l).is_none()) {
            return bad(format!("no bundled vocabulary for language {lang:?}"));
        }
        for b in &self.bulk_apps {
            if b.users > self.accounts {
                return bad(format!("bulk app {} has more users than accounts", b.app));
            }
            if !(0.0..=1.0).contains(&b.share) || !(0.0..=1.0).contains(&b.window_probability) {
                return bad(format!(
                    "bulk app {} probabilities must lie in [0, 1]",
                    b.app
                ));
            }
        }
        for t in &self.trending {
            if t.sharers > self.accounts {
                return bad(format!(
                    "trending link {} has more sharers than accounts",
                    t.url
                ));
            }
        }
        for c in &self.campaigns {
            if c.victims > self.accounts {
                return bad(format!(
                    "campaign {} has more victims than accounts",
                    c.name
                ));
            }
            if let Some(start) = c.start {
                let end = self.detection_start + Duration::seconds(self.detection_seconds);
                if start < self.detection_start || start >= end {
                    return bad(format!(
                        "campaign {} starts outside the detection period",
                        c.name
                    ));
                }
            }
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize)]
pub struct TruthEntry {
    pub account_id: String,
    pub message_id: String,
    pub campaign: String,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Simulation {
    pub history: Vec<Message>,
    pub stream: Vec<Message>,
    pub truth: Vec<TruthEntry>,
}

impl Simulation {
    /// Writes `history.jsonl`, `stream.jsonl` and `truth.jsonl` into `dir`.
    pub fn write_to(&self, dir: &Path) -> Result<()> {
        fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
        for (name, items) in [
            ("history.jsonl", &self.history),
            ("stream.jsonl", &self.stream),
        ] {
            let path = dir.join(name);
            let file = File::create(&path).map_err(|e| Error::io(&path, e))?;
            write_jsonl(BufWriter::new(file), items)?;
        }
        let path = dir.join("truth.jsonl");
        let file = File::create(&path).map_err(|e| Error::io(&path, e))?;
        write_jsonl(BufWriter::new(file), &self.truth)
    }

    pub fn compromised_accounts(&self) -> BTreeSet<String> {
        self.truth.iter().map(|t| t.account_id.clone()).collect()
    }
}

struct Habits {
    id: String,
    sources: Vec<(String, f64)>,
    language: String,
    hour_center: u32,
    link_p: f64,
    domains: Vec<String>,
    mention_p: f64,
    circle: Vec<String>,
    topic_p: f64,
    topics: Vec<String>,
}

fn vocabulary(code: &str) -> Vec<String> {
    let text = bundled_corpus(code).unwrap_or_default().to_lowercase();
    let words: BTreeSet<String> = text
        .split(|c: char| !c.is_alphabetic() && c != '\'')
        .filter(|w| w.chars().count() >= 2)
        .map(|w| w.trim_matches('\'').to_string())
        .filter(|w| !w.is_empty())
        .collect();
    words.into_iter().collect()
}

fn account_id(i: usize) -> String {
    format!("user{i:05}")
}

fn pick<'a, T>(rng: &mut ChaCha8Rng, pool: &'a [T]) -> &'a T {
    &pool[rng.gen_range(0..pool.len())]
}

fn pick_weighted<'a>(rng: &mut ChaCha8Rng, items: &'a [(String, f64)]) -> &'a str {
    let total: f64 = items.iter().map(|(_, w)| w).sum();
    let mut x = rng.gen_range(0.0..total);
    for (item, w) in items {
        if x < *w {
            return item;
        }
        x -= w;
    }
    &items[items.len() - 1].0
}

struct Generator<'a> {
    spec: &'a SimulationSpec,
    rng: ChaCha8Rng,
    vocab: std::collections::BTreeMap<String, Vec<String>>,
}

impl Generator<'_> {
    fn sentence(&mut self, language: &str) -> String {
        let words = &self.vocab[language];
        let len = self.rng.gen_range(8..=16);
        (0..len)
            .map(|_| words[self.rng.gen_range(0..words.len())].as_str())
            .collect::<Vec<_>>()
            .join(" ")
    }

    fn habits(&mut self, i: usize) -> Habits {
        let spec = self.spec;
        let rng = &mut self.rng;
        let primary = pick(rng, &spec.sources).clone();
        let mut sources = vec![(primary.clone(), 1.0)];
        if rng.gen_bool(0.3) {
            let other = pick(rng, &spec.sources).clone();
            if other != primary {
                sources.push((other, rng.gen_range(0.05..0.3)));
            }
        }
        let n_domains = rng.gen_range(1..=3).min(spec.link_domains.len());
        let mut domains: Vec<String> = spec
            .link_domains
            .choose_multiple(rng, n_domains)
            .cloned()
            .collect();
        domains.sort();
        let circle: Vec<String> = (0..rng.gen_range(3..=8))
            .map(|_| account_id(rng.gen_range(0..spec.accounts)))
            .filter(|a| *a != account_id(i))
            .collect();
        let n_topics = rng.gen_range(2..=4).min(spec.topics.len());
        let mut topics: Vec<String> = spec
            .topics
            .choose_multiple(rng, n_topics)
            .cloned()
            .collect();
        topics.sort();
        Habits {
            id: account_id(i),
            sources,
            language: pick(rng, &spec.languages).clone(),
            hour_center: rng.gen_range(spec.active_hours[0]..=spec.active_hours[1]),
            link_p: rng.gen_range(0.1..0.9),
            domains,
            mention_p: rng.gen_range(0.0..0.5),
            circle,
            topic_p: rng.gen_range(0.0..0.4),
            topics,
        }
    }

    fn habitual_hour(&mut self, h: &Habits) -> u32 {
        let offset: i32 = self.rng.gen_range(-2..=2);
        (h.hour_center as i32 + offset).rem_euclid(24) as u32
    }

    /// A message following the account's habits, at `ts`.
    fn benign(
        &mut self,
        h: &Habits,
        id: String,
        ts: DateTime<Utc>,
        source: Option<&str>,
    ) -> Message {
        let mut text = self.sentence(&h.language);
        let source = match source {
            Some(s) => s.to_string(),
            None => pick_weighted(&mut self.rng, &h.sources).to_string(),
        };
        let mut m = Message::new(id, h.id.clone(), ts, String::new(), source);
        if !h.circle.is_empty() && self.rng.gen_bool(h.mention_p) {
            let who = pick(&mut self.rng, &h.circle).clone();
            text = format!("@{who} {text}");
            m.mentions.push(who);
        }
        if self.rng.gen_bool(h.topic_p) {
            let tag = pick(&mut self.rng, &h.topics).clone();
            text.push_str(&format!(" #{tag}"));
            m.hashtags.push(tag);
        }
        if self.rng.gen_bool(h.link_p) {
            let domain = pick(&mut self.rng, &h.domains).clone();
            let url = format!("http://{domain}/p/{}", self.rng.gen_range(0..1_000_000u32));
            text.push_str(&format!(" {url}"));
            m.urls.push(url);
        }
        m.text = text;
        m
    }

    fn history_time(&mut self, h: &Habits) -> DateTime<Utc> {
        let day = self.rng.gen_range(0..self.spec.history_days);
        let hour = self.habitual_hour(h);
        let second = self.rng.gen_range(0..3600);
        self.spec.history_start
            + Duration::days(day)
            + Duration::hours(hour as i64)
            + Duration::seconds(second)
    }

    fn window_time(&mut self, from: DateTime<Utc>) -> DateTime<Utc> {
        let end = self.spec.detection_start + Duration::seconds(self.spec.detection_seconds);
        let span = (end - from).num_seconds().max(1);
        from + Duration::seconds(self.rng.gen_range(0..span))
    }
}

/// Generates the streams for `spec` with the given seed.
pub fn simulate(spec: &SimulationSpec, seed: u64) -> Result<Simulation> {
    spec.validate()?;
    let mut vocab = std::collections::BTreeMap::new();
    for lang in &spec.languages {
        vocab
            .entry(lang.clone())
            .or_insert_with(|| vocabulary(lang));
    }
    let mut g = Generator {
        spec,
        rng: ChaCha8Rng::seed_from_u64(seed),
        vocab,
    };
    let habits: Vec<Habits> = (0..spec.accounts).map(|i| g.habits(i)).collect();
    let all: Vec<usize> = (0..spec.accounts).collect();

    let bulk_users: Vec<Vec<usize>> = spec
        .bulk_apps
        .iter()
        .map(|b| {
            let mut users: Vec<usize> = all.choose_multiple(&mut g.rng, b.users).copied().collect();
            users.sort();
            users
        })
        .collect();

    let mut history = Vec::new();
    for (i, h) in habits.iter().enumerate() {
        let n = g
            .rng
            .gen_range(spec.history_messages[0]..=spec.history_messages[1]);
        let bulk: Vec<&BulkAppSpec> = spec
            .bulk_apps
            .iter()
            .zip(&bulk_users)
            .filter(|(_, users)| users.binary_search(&i).is_ok())
            .map(|(b, _)| b)
            .collect();
        for k in 0..n {
            let ts = g.history_time(h);
            let id = format!("{}-h{k}", h.id);
            let app = bulk.iter().find(|b| g.rng.gen_bool(b.share));
            let m = match app {
                Some(b) => bulk_message(&mut g, b, h, id, ts),
                None => g.benign(h, id, ts, None),
            };
            history.push(m);
        }
    }

    let mut stream = Vec::new();
    let start = spec.detection_start;
    for h in &habits {
        let posts = g.rng.gen_range(spec.window_posts[0]..=spec.window_posts[1]);
        for k in 0..posts {
            let ts = g.window_time(start);
            let m = g.benign(h, format!("{}-d{k}", h.id), ts, None);
            stream.push(m);
        }
    }
    for (b, users) in spec.bulk_apps.iter().zip(&bulk_users) {
        for &u in users {
            if g.rng.gen_bool(b.window_probability) {
                let ts = g.window_time(start);
                let id = format!("{}-b-{}", habits[u].id, slug(&b.app));
                stream.push(bulk_message(&mut g, b, &habits[u], id, ts));
            }
        }
    }
    for (t_idx, t) in spec.trending.iter().enumerate() {
        let sharers: Vec<usize> = all
            .choose_multiple(&mut g.rng, t.sharers)
            .copied()
            .collect();
        for u in sharers {
            let h = &habits[u];
            let ts = g.window_time(start);
            let source = pick_weighted(&mut g.rng, &h.sources).to_string();
            let mut m = Message::new(
                format!("{}-t{t_idx}", h.id),
                h.id.clone(),
                ts,
                format!("{} {}", t.text, t.url),
                source,
            );
            m.urls.push(t.url.clone());
            stream.push(m);
        }
    }

    let mut truth = Vec::new();
    for c in &spec.campaigns {
        let mimic = c.stealth.mimicked();
        let mut victims: Vec<usize> = all
            .choose_multiple(&mut g.rng, c.victims)
            .copied()
            .collect();
        victims.sort();
        let c_start = c.start.unwrap_or(start + Duration::minutes(5));
        for (n, &v) in victims.iter().enumerate() {
            let h = &habits[v];
            let id = format!("{}-{}-{n}", slug(&c.name), h.id);
            let ts = if mimic.contains(&Mimic::Time) {
                let day_start = start - Duration::seconds(start.timestamp().rem_euclid(86_400));
                let hour = g.habitual_hour(h);
                day_start
                    + Duration::hours(hour as i64)
                    + Duration::seconds(g.rng.gen_range(0..3600))
            } else {
                g.window_time(c_start)
            };
            let source = if mimic.contains(&Mimic::Source) {
                pick_weighted(&mut g.rng, &h.sources).to_string()
            } else {
                c.app.clone()
            };
            let item = pick(
                &mut g.rng,
                &["iPhone", "iPad", "gift card", "laptop", "vacation"],
            )
            .to_string();
            let mut text = c.template.replace("{item}", &item);
            let mut m = Message::new(id.clone(), h.id.clone(), ts, String::new(), source);
            let url = if mimic.contains(&Mimic::Link) {
                let domain = pick(&mut g.rng, &h.domains);
                format!("http://{domain}/claim?id={n}")
            } else {
                c.url.replace("{n}", &n.to_string())
            };
            text.push_str(&format!(" {url}"));
            m.urls.push(url);
            if mimic.contains(&Mimic::Mention) {
                if !h.circle.is_empty() && g.rng.gen_bool(h.mention_p) {
                    let who = pick(&mut g.rng, &h.circle).clone();
                    text = format!("@{who} {text}");
                    m.mentions.push(who);
                }
            } else {
                let who = format!("winner{:04}", g.rng.gen_range(0..10_000));
                text = format!("@{who} {text}");
                m.mentions.push(who);
            }
            if mimic.contains(&Mimic::Topic) {
                if g.rng.gen_bool(h.topic_p) {
                    let tag = pick(&mut g.rng, &h.topics).clone();
                    text.push_str(&format!(" #{tag}"));
                    m.hashtags.push(tag);
                }
            } else {
                text.push_str(" #giveaway");
                m.hashtags.push("giveaway".into());
            }
            if mimic.contains(&Mimic::Language) {
                m.language_hint = Some(h.language.clone());
            }
            m.text = text;
            truth.push(TruthEntry {
                account_id: h.id.clone(),
                message_id: id,
                campaign: c.name.clone(),
            });
            stream.push(m);
        }
    }

    let by_time = |a: &Message, b: &Message| {
        a.timestamp
            .cmp(&b.timestamp)
            .then_with(|| a.message_id.cmp(&b.message_id))
    };
    history.sort_by(by_time);
    stream.sort_by(by_time);
    truth.sort();
    Ok(Simulation {
        history,
        stream,
        truth,
    })
}

fn bulk_message(
    g: &mut Generator<'_>,
    b: &BulkAppSpec,
    h: &Habits,
    id: String,
    ts: DateTime<Utc>,
) -> Message {
    let n = g.rng.gen_range(1..=42);
    let text = b.template.replace("{n}", &n.to_string());
    let mut m = Message::new(id, h.id.clone(), ts, text, b.app.clone());
    m.hashtags = crate::features::message_hashtags(&m);
    m
}

fn slug(name: &str) -> String {
    name.chars()
        .map(|c| {
            if c.is_ascii_alphanumeric() {
                c.to_ascii_lowercase()
            } else {
                '_'
            }
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    const SPEC: &str = r#"
accounts = 200
history_start = "2024-03-01T00:00:00Z"
detection_start = "2024-03-15T03:00:00Z"

[[campaigns]]
name = "prize"
app = "PromoBlaster"
victims = 50
stealth = "none"
"#;

    #[test]
    fn campaign_ground_truth() {
        let spec = SimulationSpec::from_toml(SPEC).unwrap();
        let sim = simulate(&spec, 1).unwrap();
        assert_eq!(sim.truth.len(), 50);
        assert_eq!(sim.compromised_accounts().len(), 50);
        let accounts: BTreeSet<&str> = sim.history.iter().map(|m| m.account_id.as_str()).collect();
        assert_eq!(accounts.len(), 200);
        for t in &sim.truth {
            let m = sim
                .stream
                .iter()
                .find(|m| m.message_id == t.message_id)
                .unwrap();
            assert_eq!(m.source_app, "PromoBlaster");
            assert_eq!(m.account_id, t.account_id);
        }
        let end = spec.detection_start + Duration::seconds(spec.detection_seconds);
        assert!(sim
            .stream
            .iter()
            .all(|m| m.timestamp >= spec.detection_start && m.timestamp < end));
        assert!(sim
            .history
            .iter()
            .all(|m| m.timestamp < spec.detection_start));
    }

    #[test]
    fn same_seed_same_bytes() {
        let spec = SimulationSpec::from_toml(SPEC).unwrap();
        let a = tempfile::tempdir().unwrap();
        let b = tempfile::tempdir().unwrap();
        simulate(&spec, 9).unwrap().write_to(a.path()).unwrap();
        simulate(&spec, 9).unwrap().write_to(b.path()).unwrap();
        for f in ["history.jsonl", "stream.jsonl", "truth.jsonl"] {
            assert_eq!(
                fs::read(a.path().join(f)).unwrap(),
                fs::read(b.path().join(f)).unwrap()
            );
        }
        assert_ne!(simulate(&spec, 10).unwrap(), simulate(&spec, 9).unwrap());
    }

    #[test]
    fn all_features_stealth_uses_victim_habits() {
        let raw = SPEC.replace("stealth = \"none\"", "stealth = \"all-features\"");
        let spec = SimulationSpec::from_toml(&raw).unwrap();
        let sim = simulate(&spec, 1).unwrap();
        for t in &sim.truth {
            let m = sim
                .stream
                .iter()
                .find(|m| m.message_id == t.message_id)
                .unwrap();
            assert_ne!(m.source_app, "PromoBlaster");
            assert!(m.language_hint.is_some());
        }
    }

    #[test]
    fn feature_list_stealth() {
        let raw = SPEC.replace("stealth = \"none\"", "stealth = [\"source\", \"link\"]");
        let spec = SimulationSpec::from_toml(&raw).unwrap();
        assert_eq!(
            spec.campaigns[0].stealth.mimicked(),
            [Mimic::Source, Mimic::Link].into()
        );
    }

    #[test]
    fn parse_errors_have_line_numbers() {
        let raw =
            "accounts = 10\nhistory_start = \"2024-03-01T00:00:00Z\"\ndetection_start = nope\n";
        match SimulationSpec::from_toml(raw) {
            Err(Error::Parse { line, .. }) => assert_eq!(line, 3),
            other => panic!("expected parse error, got {other:?}"),
        }
        let raw = SPEC.replace("victims = 50", "victims = 500");
        assert!(matches!(
            SimulationSpec::from_toml(&raw),
            Err(Error::SimulationSpec(_))
        ));
    }
}
