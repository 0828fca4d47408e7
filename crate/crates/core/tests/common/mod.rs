#![allow(dead_code)]

use std::collections::{BTreeMap, BTreeSet, HashSet};

use chrono::{DateTime, Duration, TimeZone, Utc};
use rand::Rng;

use profilewatch::cluster::{similarity_urls, MessageGroup};
use profilewatch::{text_shingles, Message, ObservationWindow};

pub fn at(y: i32, mo: u32, d: u32, h: u32, mi: u32) -> DateTime<Utc> {
    Utc.with_ymd_and_hms(y, mo, d, h, mi, 0).unwrap()
}

const WORDS: &[&str] = &[
    "free", "win", "now", "click", "today", "great", "game", "news", "live", "photo", "deal",
    "best", "new", "city", "vote", "music",
];
const SOURCES: &[&str] = &["web", "iphone", "android", "deck", "bot"];
const LANGS: &[&str] = &["en", "de", "fr", "es"];
const DOMAINS: &[&str] = &["a.com", "b.org", "c.net", "d.io"];
const NAMES: &[&str] = &["ann", "bob", "cat", "dan", "eve"];
const TAGS: &[&str] = &["nfl", "vote", "music", "tech"];

/// A message drawn from small pools so repeats are common. The language is
/// supplied as a hint so no detection runs.
pub fn random_message<R: Rng>(rng: &mut R, id: usize, account: &str) -> Message {
    let ts = at(2024, 1, 1, 0, 0)
        + Duration::days(rng.gen_range(0..14))
        + Duration::minutes(rng.gen_range(0..1440));
    let mut m = Message::new(
        format!("m{id}"),
        account,
        ts,
        "",
        SOURCES[rng.gen_range(0..SOURCES.len())],
    );
    m.language_hint = Some(LANGS[rng.gen_range(0..LANGS.len())].into());
    for _ in 0..rng.gen_range(0..3) {
        if rng.gen_bool(0.5) {
            m.urls.push(format!(
                "http://{}/x",
                DOMAINS[rng.gen_range(0..DOMAINS.len())]
            ));
        }
    }
    for _ in 0..rng.gen_range(0..3) {
        if rng.gen_bool(0.4) {
            m.mentions.push(NAMES[rng.gen_range(0..NAMES.len())].into());
        }
    }
    for _ in 0..rng.gen_range(0..3) {
        if rng.gen_bool(0.3) {
            m.hashtags.push(TAGS[rng.gen_range(0..TAGS.len())].into());
        }
    }
    if rng.gen_bool(0.5) {
        m.network = Some("here".into());
        if rng.gen_bool(0.2) {
            m.recipient_network = Some("there".into());
        }
    }
    m
}

/// A window of messages whose texts and URLs collide often enough to form
/// groups of assorted sizes.
pub fn random_window<R: Rng>(rng: &mut R, n: usize) -> ObservationWindow {
    let start = at(2024, 1, 1, 0, 0);
    let vocab = rng.gen_range(4..WORDS.len());
    let messages = (0..n)
        .map(|i| {
            let len = rng.gen_range(0..8);
            let mut text: Vec<String> = (0..len)
                .map(|_| WORDS[rng.gen_range(0..vocab)].to_string())
                .collect();
            if rng.gen_bool(0.3) {
                let host = ["spam.biz", "www.youtube.com", "news.example.com"][rng.gen_range(0..3)];
                let q = rng.gen_range(0..5);
                text.push(format!("http://{host}/p{}?q={q}", rng.gen_range(0..200)));
            }
            let mut m = Message::new(
                format!("m{i:04}"),
                format!("u{}", rng.gen_range(0..n.max(1))),
                start + Duration::seconds(rng.gen_range(0..3600)),
                text.join(" "),
                "web",
            );
            if rng.gen_bool(0.05) {
                m.urls.push("not a url".into());
            }
            m
        })
        .collect();
    ObservationWindow {
        start,
        duration_secs: 3600,
        messages,
    }
}

/// Connected components of the "shares a 4-gram shingle or a normalized
/// URL" relation, found by checking every pair directly.
pub fn brute_force_partition(w: &ObservationWindow) -> BTreeSet<BTreeSet<String>> {
    let n = w.messages.len();
    let shingles: Vec<HashSet<String>> =
        w.messages.iter().map(|m| text_shingles(&m.text)).collect();
    let urls: Vec<HashSet<String>> = w.messages.iter().map(similarity_urls).collect();
    let mut adj = vec![Vec::new(); n];
    for i in 0..n {
        for j in i + 1..n {
            let linked = !shingles[i].is_disjoint(&shingles[j]) || !urls[i].is_disjoint(&urls[j]);
            if linked {
                adj[i].push(j);
                adj[j].push(i);
            }
        }
    }
    let mut seen = vec![false; n];
    let mut out = BTreeSet::new();
    for s in 0..n {
        if seen[s] {
            continue;
        }
        let mut stack = vec![s];
        let mut comp = BTreeSet::new();
        seen[s] = true;
        while let Some(x) = stack.pop() {
            comp.insert(w.messages[x].message_id.clone());
            for &y in &adj[x] {
                if !seen[y] {
                    seen[y] = true;
                    stack.push(y);
                }
            }
        }
        if comp.len() >= 2 {
            out.insert(comp);
        }
    }
    out
}

pub fn partition_of(groups: &[MessageGroup]) -> BTreeSet<BTreeSet<String>> {
    groups
        .iter()
        .map(|g| g.messages.iter().map(|m| m.message_id.clone()).collect())
        .collect()
}

/// Random hour histogram as (hour string, count) pairs.
pub fn random_hour_counts<R: Rng>(rng: &mut R) -> BTreeMap<String, u64> {
    let mut counts = BTreeMap::new();
    for _ in 0..rng.gen_range(1..12) {
        let h: u8 = rng.gen_range(0..24);
        *counts.entry(h.to_string()).or_insert(0) += rng.gen_range(1..50);
    }
    counts
}
