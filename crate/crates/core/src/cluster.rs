//! Grouping of similar messages inside an observation window.
//!
//! Two messages are similar when they share a word 4-gram or a URL that is
//! identical once its query string and fragment are dropped. Groups are the
//! connected components of that relation, found with an inverted index
//! (key → first message seen with it) feeding a union-find.

use std::collections::{BTreeMap, BTreeSet, HashMap, HashSet};

use chrono::{DateTime, TimeZone, Utc};
use serde::{Deserialize, Serialize};
use url::Url;

use crate::features::message_urls;
use crate::model::Message;

pub const SHINGLE_WORDS: usize = 4;
pub const DEFAULT_MIN_GROUP_SIZE: usize = 2;
/// Hosts that address content through the query string.
pub const EXCLUDED_HOSTS: &[&str] = &[
    "youtube.com",
    "www.youtube.com",
    "facebook.com",
    "www.facebook.com",
];

#[derive(Debug, Clone, PartialEq)]
pub struct ObservationWindow {
    pub start: DateTime<Utc>,
    pub duration_secs: i64,
    pub messages: Vec<Message>,
}

impl ObservationWindow {
    pub fn end(&self) -> DateTime<Utc> {
        self.start + chrono::Duration::seconds(self.duration_secs)
    }

    pub fn contains(&self, ts: DateTime<Utc>) -> bool {
        ts >= self.start && ts < self.end()
    }
}

/// Splits messages into tumbling windows aligned to the Unix epoch. Windows
/// are returned in start order; empty windows are omitted.
pub fn tumbling_windows(messages: &[Message], duration_secs: i64) -> Vec<ObservationWindow> {
    assert!(duration_secs > 0, "window duration must be positive");
    let mut buckets: BTreeMap<i64, Vec<Message>> = BTreeMap::new();
    for m in messages {
        let start = m.timestamp.timestamp().div_euclid(duration_secs) * duration_secs;
        buckets.entry(start).or_default().push(m.clone());
    }
    buckets
        .into_iter()
        .map(|(start, messages)| ObservationWindow {
            start: Utc.timestamp_opt(start, 0).single().unwrap_or_default(),
            duration_secs,
            messages,
        })
        .collect()
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SimilarityKind {
    Text,
    Url,
}

#[derive(Debug, Clone, PartialEq)]
pub struct MessageGroup {
    pub group_id: String,
    pub similarity_kind: SimilarityKind,
    pub key: String,
    /// Sorted by (timestamp, message_id).
    pub messages: Vec<Message>,
}

impl MessageGroup {
    pub fn size(&self) -> usize {
        self.messages.len()
    }

    pub fn record(&self) -> GroupRecord {
        GroupRecord {
            group_id: self.group_id.clone(),
            kind: self.similarity_kind,
            key: self.key.clone(),
            n: self.size(),
            message_ids: self.messages.iter().map(|m| m.message_id.clone()).collect(),
        }
    }
}

/// One line of the group dump.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GroupRecord {
    pub group_id: String,
    pub kind: SimilarityKind,
    pub key: String,
    pub n: usize,
    pub message_ids: Vec<String>,
}

/// Word 4-grams of the lowercased text with URLs removed. Tokens are split
/// on whitespace only; punctuation stays attached.
pub fn text_shingles(text: &str) -> HashSet<String> {
    let lowered = text.to_lowercase();
    let tokens: Vec<&str> = lowered
        .split_whitespace()
        .filter(|t| {
            !(t.starts_with("http://") || t.starts_with("https://") || t.starts_with("www."))
        })
        .collect();
    tokens.windows(SHINGLE_WORDS).map(|w| w.join(" ")).collect()
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum NormalizedUrl {
    Normalized(String),
    Excluded,
}

impl NormalizedUrl {
    pub fn into_option(self) -> Option<String> {
        match self {
            NormalizedUrl::Normalized(s) => Some(s),
            NormalizedUrl::Excluded => None,
        }
    }
}

/// `scheme://host/path` with query and fragment removed. Unparseable URLs
/// and YouTube/Facebook links are excluded from URL similarity.
pub fn normalize_url_for_similarity(url: &str) -> NormalizedUrl {
    let Ok(parsed) = Url::parse(url.trim()) else {
        return NormalizedUrl::Excluded;
    };
    let Some(host) = parsed.host_str().map(str::to_lowercase) else {
        return NormalizedUrl::Excluded;
    };
    if host.is_empty() || EXCLUDED_HOSTS.contains(&host.as_str()) {
        return NormalizedUrl::Excluded;
    }
    NormalizedUrl::Normalized(format!("{}://{}{}", parsed.scheme(), host, parsed.path()))
}

/// Distinct normalized URLs of a message.
pub fn similarity_urls(m: &Message) -> HashSet<String> {
    message_urls(m)
        .iter()
        .filter_map(|u| normalize_url_for_similarity(u).into_option())
        .collect()
}

/// Keys shared by two or more messages, with their member indices.
type SharedKeys<'a> = Vec<(&'a str, &'a [usize])>;

struct UnionFind {
    parent: Vec<usize>,
    rank: Vec<u8>,
}

impl UnionFind {
    fn new(n: usize) -> Self {
        UnionFind {
            parent: (0..n).collect(),
            rank: vec![0; n],
        }
    }

    fn find(&mut self, mut x: usize) -> usize {
        while self.parent[x] != x {
            self.parent[x] = self.parent[self.parent[x]];
            x = self.parent[x];
        }
        x
    }

    fn union(&mut self, a: usize, b: usize) {
        let (ra, rb) = (self.find(a), self.find(b));
        if ra == rb {
            return;
        }
        match self.rank[ra].cmp(&self.rank[rb]) {
            std::cmp::Ordering::Less => self.parent[ra] = rb,
            std::cmp::Ordering::Greater => self.parent[rb] = ra,
            std::cmp::Ordering::Equal => {
                self.parent[rb] = ra;
                self.rank[ra] += 1;
            }
        }
    }
}

/// Clusters one window with the default minimum group size.
pub fn cluster_window(w: &ObservationWindow) -> Vec<MessageGroup> {
    cluster_window_with(w, DEFAULT_MIN_GROUP_SIZE)
}

/// Groups are ordered by size (descending), then key, then first message id.
pub fn cluster_window_with(w: &ObservationWindow, min_group_size: usize) -> Vec<MessageGroup> {
    let messages = &w.messages;
    let n = messages.len();
    let mut uf = UnionFind::new(n);

    // key → member indices, one index per kind
    let mut text_index: HashMap<String, Vec<usize>> = HashMap::new();
    let mut url_index: HashMap<String, Vec<usize>> = HashMap::new();
    for (i, m) in messages.iter().enumerate() {
        for shingle in text_shingles(&m.text) {
            text_index.entry(shingle).or_default().push(i);
        }
        for url in similarity_urls(m) {
            url_index.entry(url).or_default().push(i);
        }
    }
    for members in text_index.values().chain(url_index.values()) {
        for &other in &members[1..] {
            uf.union(members[0], other);
        }
    }

    let mut components: HashMap<usize, Vec<usize>> = HashMap::new();
    for i in 0..n {
        let root = uf.find(i);
        components.entry(root).or_default().push(i);
    }

    // shared keys per component, per kind
    let mut shared: HashMap<usize, [SharedKeys<'_>; 2]> = HashMap::new();
    for (kind_idx, index) in [&text_index, &url_index].into_iter().enumerate() {
        for (key, members) in index {
            if members.len() < 2 {
                continue;
            }
            let root = uf.find(members[0]);
            shared
                .entry(root)
                .or_insert_with(|| [Vec::new(), Vec::new()])[kind_idx]
                .push((key.as_str(), members.as_slice()));
        }
    }

    let mut groups: Vec<(SimilarityKind, String, Vec<usize>)> = Vec::new();
    for (root, members) in components {
        if members.len() < min_group_size.max(2) {
            continue;
        }
        let Some([text_keys, url_keys]) = shared.get(&root) else {
            continue;
        };
        let kind = match (text_keys.is_empty(), url_keys.is_empty()) {
            (false, true) => SimilarityKind::Text,
            (true, false) => SimilarityKind::Url,
            _ => {
                let text_pairs = connected_pairs(text_keys, members.len());
                let url_pairs = connected_pairs(url_keys, members.len());
                if url_pairs > text_pairs {
                    SimilarityKind::Url
                } else {
                    SimilarityKind::Text
                }
            }
        };
        let keys = match kind {
            SimilarityKind::Text => text_keys,
            SimilarityKind::Url => url_keys,
        };
        let key = keys
            .iter()
            .max_by(|a, b| a.1.len().cmp(&b.1.len()).then_with(|| b.0.cmp(a.0)))
            .map(|(k, _)| k.to_string())
            .unwrap_or_default();
        groups.push((kind, key, members));
    }

    let mut built: Vec<MessageGroup> = groups
        .into_iter()
        .map(|(kind, key, members)| {
            let mut msgs: Vec<Message> = members.iter().map(|&i| messages[i].clone()).collect();
            msgs.sort_by(|a, b| {
                a.timestamp
                    .cmp(&b.timestamp)
                    .then_with(|| a.message_id.cmp(&b.message_id))
            });
            MessageGroup {
                group_id: String::new(),
                similarity_kind: kind,
                key,
                messages: msgs,
            }
        })
        .collect();
    built.sort_by(|a, b| {
        b.size()
            .cmp(&a.size())
            .then_with(|| a.key.cmp(&b.key))
            .then_with(|| first_id(a).cmp(first_id(b)))
    });
    let label = w.start.timestamp();
    for (i, g) in built.iter_mut().enumerate() {
        g.group_id = format!("w{label}-g{i}");
    }
    built
}

fn first_id(g: &MessageGroup) -> &str {
    g.messages
        .iter()
        .map(|m| m.message_id.as_str())
        .min()
        .unwrap_or("")
}

/// Number of distinct member pairs that share at least one key.
fn connected_pairs(keys: &[(&str, &[usize])], component_size: usize) -> u64 {
    let full = (component_size as u64) * (component_size as u64 - 1) / 2;
    let mut lists: BTreeSet<&[usize]> = BTreeSet::new();
    for (_, members) in keys {
        if members.len() == component_size {
            return full;
        }
        lists.insert(members);
    }
    let mut pairs: HashSet<(usize, usize)> = HashSet::new();
    for members in lists {
        for (i, &a) in members.iter().enumerate() {
            for &b in &members[i + 1..] {
                pairs.insert((a.min(b), a.max(b)));
            }
        }
    }
    pairs.len() as u64
}
