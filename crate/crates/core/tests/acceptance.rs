//! Acceptance suite. Prints one PASS/FAIL line per criterion and exits
//! non-zero when any criterion fails.

mod common;

use std::collections::{BTreeMap, BTreeSet};
use std::fs;
use std::path::Path;
use std::time::{Duration as StdDuration, Instant};

use chrono::{Duration, TimeZone, Utc};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use common::{
    brute_force_partition, partition_of, random_hour_counts, random_message, random_window,
};
use profilewatch::campaign::{group_threshold, mean_pairwise_ratio};
use profilewatch::pipeline::{cmd_detect, cmd_score, cmd_train, DetectRecord, ScoreRecord};
use profilewatch::profile::smooth_time_model;
use profilewatch::scoring::composite_score;
use profilewatch::simulate::{simulate, SimulationSpec};
use profilewatch::{
    build_profile, classify_application, cluster_window, score_mandatory, score_message, AppClass,
    ApplicationStats, Config, FeatureKind, FeatureModel, FeatureWeights, Message, ProfileStore,
};

type Criterion = Box<dyn FnOnce() -> Outcome>;

struct Outcome {
    pass: bool,
    detail: String,
}

fn outcome(pass: bool, detail: impl Into<String>) -> Outcome {
    Outcome {
        pass,
        detail: detail.into(),
    }
}

fn worked_example() -> Outcome {
    let m = FeatureModel::from_counts(FeatureKind::Language, [("en", 12), ("de", 9)], 21);
    let en = score_mandatory(&m, "en");
    let ru = score_mandatory(&m, "ru");
    let de = score_mandatory(&m, "de");
    let pass = en == 0.0 && ru == 1.0 && (de - 0.58).abs() <= 0.005;
    outcome(
        pass,
        format!("score(en)={en} score(ru)={ru} score(de)={de:.4} (target 0.58 +/- 0.005)"),
    )
}

fn threshold_function() -> Outcome {
    let checks = [(4, 0.80), (144, 0.10), (1000, 0.10)];
    let exact = checks
        .iter()
        .all(|(n, v)| (group_threshold(*n) - v).abs() <= 1e-9);
    let monotone = (1..10_000).all(|n| group_threshold(n + 1) <= group_threshold(n) + 1e-12);
    outcome(
        exact && monotone,
        format!(
            "th(4)={} th(144)={} th(1000)={} non-increasing={monotone}",
            group_threshold(4),
            group_threshold(144),
            group_threshold(1000)
        ),
    )
}

fn scoring_invariants() -> Outcome {
    let started = Instant::now();
    let mut rng = ChaCha8Rng::seed_from_u64(2024);
    let mut failures = Vec::new();
    for pair in 0..10_000 {
        let len = rng.gen_range(10..30);
        let mut stream: Vec<Message> = (0..len)
            .map(|i| random_message(&mut rng, i, "acct"))
            .collect();
        let probe = random_message(&mut rng, 9999, "acct");
        let raw: BTreeMap<FeatureKind, f64> = FeatureKind::ALL
            .into_iter()
            .map(|k| {
                (
                    k,
                    if rng.gen_bool(0.2) {
                        0.0
                    } else {
                        rng.gen_range(0.01..5.0)
                    },
                )
            })
            .collect();
        let Ok(w) = FeatureWeights::new(raw, rng.gen_range(0.0..=1.0)) else {
            continue;
        };

        let profile = build_profile("acct", &stream, 10).unwrap();
        let before = score_message(&profile, &probe, &w, 0);
        let bounded = before.per_feature.values().all(|s| (0.0..=1.0).contains(s))
            && (0.0..=1.0).contains(&before.composite);
        if !bounded {
            failures.push(format!("pair {pair}: score out of range"));
        }

        let mut copy = probe.clone();
        copy.message_id = "copy".into();
        stream.push(copy);
        let after = score_message(&build_profile("acct", &stream, 10).unwrap(), &probe, &w, 0);
        let monotone = FeatureKind::ALL
            .into_iter()
            .all(|k| after.per_feature[&k] <= before.per_feature[&k] + 1e-12)
            && after.composite <= before.composite + 1e-12;
        if !monotone {
            failures.push(format!("pair {pair}: score rose after a count increment"));
        }

        let k = rng.gen_range(0.01..100.0);
        let mut scaled = w.clone();
        for v in scaled.weights.values_mut() {
            *v *= k;
        }
        let c = composite_score(&before.per_feature, &scaled);
        let argmax = |w: &FeatureWeights| {
            FeatureKind::ALL
                .into_iter()
                .map(|f| {
                    (
                        f,
                        w.weights.get(&f).copied().unwrap_or(0.0) * before.per_feature[&f],
                    )
                })
                .fold((FeatureKind::TimeOfDay, f64::MIN), |a, b| {
                    if b.1 > a.1 {
                        b
                    } else {
                        a
                    }
                })
                .0
        };
        let invariant = (c - before.composite).abs() < 1e-9
            && (c > w.threshold) == before.violates_profile
            && argmax(&w) == argmax(&scaled);
        if !invariant {
            failures.push(format!("pair {pair}: scaling changed the outcome"));
        }
    }
    let elapsed = started.elapsed();
    let pass = failures.is_empty() && elapsed < StdDuration::from_secs(60);
    outcome(
        pass,
        format!(
            "10000 pairs, {} violations, {:.1}s{}",
            failures.len(),
            elapsed.as_secs_f64(),
            failures
                .first()
                .map(|f| format!(", first: {f}"))
                .unwrap_or_default()
        ),
    )
}

fn clustering_oracle() -> Outcome {
    let started = Instant::now();
    let mut rng = ChaCha8Rng::seed_from_u64(99);
    let mut mismatches = 0;
    let mut groups = 0;
    for _ in 0..200 {
        let n = rng.gen_range(0..=500);
        let w = random_window(&mut rng, n);
        let ours = partition_of(&cluster_window(&w));
        groups += ours.len();
        if ours != brute_force_partition(&w) {
            mismatches += 1;
        }
    }
    let elapsed = started.elapsed();
    outcome(
        mismatches == 0 && elapsed < StdDuration::from_secs(300),
        format!(
            "200 windows, {groups} groups, {mismatches} mismatches, {:.1}s",
            elapsed.as_secs_f64()
        ),
    )
}

fn smoothing_mass() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    let mut worst = 0.0f64;
    for _ in 0..1000 {
        let counts = random_hour_counts(&mut rng);
        let total: u64 = counts.values().sum();
        let model = FeatureModel::from_counts(
            FeatureKind::TimeOfDay,
            counts.iter().map(|(h, c)| (h.as_str(), *c)),
            total,
        );
        let smoothed: f64 = smooth_time_model(&model).values().sum();
        worst = worst.max((smoothed - total as f64).abs());
    }
    outcome(
        worst <= 1e-9,
        format!("1000 histograms, max |diff| = {worst:e}"),
    )
}

fn read_records(bytes: &[u8]) -> Vec<DetectRecord> {
    String::from_utf8_lossy(bytes)
        .lines()
        .map(|l| serde_json::from_str(l).unwrap())
        .collect()
}

const CAMPAIGN_SPEC: &str = r#"
accounts = 1000
history_messages = [20, 40]
history_start = "2024-03-01T00:00:00Z"
history_days = 14
detection_start = "2024-03-15T03:00:00Z"

[[bulk_apps]]
app = "DailyHoroscope"
template = "Your horoscope for today: the stars say number {n} brings luck"
users = 40

[[trending]]
url = "http://news.example.com/p/eclipse"
text = "Wow look at the total eclipse photos from this morning"
sharers = 25

[[campaigns]]
name = "prize"
app = "PromoBlaster"
victims = 50
stealth = "none"
"#;

fn campaign_end_to_end(dir: &Path) -> Outcome {
    let started = Instant::now();
    let spec = SimulationSpec::from_toml(CAMPAIGN_SPEC).unwrap();
    let sim = simulate(&spec, 17).unwrap();
    sim.write_to(dir).unwrap();
    let min_history = {
        let mut per: BTreeMap<&str, usize> = BTreeMap::new();
        for m in &sim.history {
            *per.entry(&m.account_id).or_default() += 1;
        }
        per.values().copied().min().unwrap_or(0)
    };
    let store = ProfileStore::open(dir.join("store")).unwrap();
    let config = Config::default();
    cmd_train(&dir.join("history.jsonl"), &store, &config).unwrap();
    let mut out = Vec::new();
    let report = cmd_detect(
        &dir.join("stream.jsonl"),
        None,
        &store,
        &config,
        &mut out,
        None,
    )
    .unwrap();

    let victims = sim.compromised_accounts();
    let flagged: BTreeSet<String> = report.summary.accounts_flagged.iter().cloned().collect();
    let caught = flagged.intersection(&victims).count();
    let false_flags = flagged.difference(&victims).count();
    let benign = spec.accounts - victims.len();
    let truth_ids: BTreeSet<&str> = sim.truth.iter().map(|t| t.message_id.as_str()).collect();
    let group_flagged = report.verdicts.iter().any(|v| {
        v.verdict.compromised
            && v.verdict
                .members
                .iter()
                .filter(|m| truth_ids.contains(m.message_id.as_str()))
                .count()
                * 2
                > v.verdict.n
    });
    let recall = caught as f64 / victims.len() as f64;
    let fpr = false_flags as f64 / benign as f64;
    let elapsed = started.elapsed();
    outcome(
        min_history >= 20 && group_flagged && recall >= 0.9 && fpr <= 0.05 && elapsed < StdDuration::from_secs(600),
        format!(
            "campaign group flagged={group_flagged}, victims flagged {caught}/{} ({:.0}%), benign flagged {false_flags}/{benign} ({:.1}%), {:.1}s",
            victims.len(),
            100.0 * recall,
            100.0 * fpr,
            elapsed.as_secs_f64()
        ),
    )
}

struct Persona {
    account: &'static str,
    source: &'static str,
    domains: &'static [&'static str],
    hours: [u32; 2],
    texts: &'static [&'static str],
}

const NEWS_TEXTS: &[&str] = &[
    "City council approves the new budget after a long debate on Tuesday",
    "Officials say the storm will reach the coast early tomorrow morning",
    "Markets closed higher as investors welcomed the latest jobs report",
    "The governor announced new funding for schools across the state",
    "Scientists report progress on a vaccine for the seasonal virus",
    "Voters head to the polls today in a closely watched election",
];

const PERSONAS: &[Persona] = &[
    Persona {
        account: "newswire",
        source: "SocialFlow",
        domains: &["apnews.example.com"],
        hours: [8, 16],
        texts: NEWS_TEXTS,
    },
    Persona {
        account: "politicsdesk",
        source: "TweetDeck",
        domains: &["politics.example.com", "video.example.com"],
        hours: [12, 20],
        texts: NEWS_TEXTS,
    },
    Persona {
        account: "voipservice",
        source: "Sprinklr",
        domains: &["support.example.com"],
        hours: [14, 22],
        texts: &[
            "Our engineers are looking into reports of dropped calls this morning",
            "Try the new group video calls on your phone and your desktop",
            "Check out the latest update with faster file sharing for everyone",
        ],
    },
    Persona {
        account: "portalnews",
        source: "TweetDeck",
        domains: &["news.example.org", "finance.example.org"],
        hours: [10, 18],
        texts: NEWS_TEXTS,
    },
    Persona {
        account: "burritochain",
        source: "Sprout Social",
        domains: &["menu.example.com"],
        hours: [15, 21],
        texts: &[
            "Our new seasonal salsa is available in every restaurant this week",
            "Free delivery on your first online order placed before Sunday night",
            "We are hiring friendly people in restaurants across the country",
        ],
    },
];

fn persona_history(p: &Persona) -> Vec<Message> {
    let mut rng = ChaCha8Rng::seed_from_u64(p.account.len() as u64);
    let base = Utc.with_ymd_and_hms(2013, 4, 1, 0, 0, 0).unwrap();
    (0..60)
        .map(|i| {
            let ts = base
                + Duration::days(i / 3)
                + Duration::hours(rng.gen_range(p.hours[0]..=p.hours[1]) as i64)
                + Duration::minutes(rng.gen_range(0..60));
            let domain = p.domains[i as usize % p.domains.len()];
            let url = format!("http://{domain}/story/{i}");
            let text = format!("{} {url}", p.texts[i as usize % p.texts.len()]);
            let mut m = Message::new(format!("{}-{i}", p.account), p.account, ts, text, p.source);
            m.urls.push(url);
            m
        })
        .collect()
}

fn high_profile_replay(dir: &Path) -> Outcome {
    let history: Vec<Message> = PERSONAS.iter().flat_map(persona_history).collect();
    let hist_path = dir.join("history.jsonl");
    profilewatch::model::write_jsonl(fs::File::create(&hist_path).unwrap(), &history).unwrap();
    let store = ProfileStore::open(dir.join("store")).unwrap();
    let config = Config::default();
    cmd_train(&hist_path, &store, &config).unwrap();

    let attack_day = Utc.with_ymd_and_hms(2013, 4, 23, 0, 0, 0).unwrap();
    let mut probes = Vec::new();
    for (i, p) in PERSONAS.iter().enumerate() {
        let ts = attack_day + Duration::hours(p.hours[0] as i64 + 2) + Duration::minutes(7);
        let chipotle = p.account == "burritochain";
        let mut m = if chipotle {
            let url = format!("http://{}/story/promo", p.domains[0]);
            let mut m = Message::new(
                format!("probe-{i}"),
                p.account,
                ts,
                format!("@fanaccount hey, we are giving away free lunch to everyone today {url}"),
                p.source,
            );
            m.urls.push(url);
            m
        } else {
            Message::new(
                format!("probe-{i}"),
                p.account,
                ts,
                "@everyone Breaking: two explosions reported downtown and many people are injured"
                    .to_string(),
                "Twitter Web Client",
            )
        };
        if i == 1 {
            m.text.push_str(" #breaking #alert");
        }
        if i == 2 {
            let url = "http://unknown-site.example.net/x".to_string();
            m.text.push_str(&format!(" {url}"));
            m.urls.push(url);
        }
        probes.push(m);
    }
    let probe_path = dir.join("probes.jsonl");
    profilewatch::model::write_jsonl(fs::File::create(&probe_path).unwrap(), &probes).unwrap();
    let mut out = Vec::new();
    cmd_score(&probe_path, &store, &config, &mut out).unwrap();

    let mut results = BTreeMap::new();
    for line in String::from_utf8_lossy(&out).lines() {
        if let ScoreRecord::Score(s) = serde_json::from_str(line).unwrap() {
            results.insert(s.account_id.clone(), (s.violates_profile, s.composite));
        }
    }
    let expected = |account: &str| account != "burritochain";
    let pass = PERSONAS.len() == results.len()
        && PERSONAS
            .iter()
            .all(|p| results.get(p.account).map(|r| r.0) == Some(expected(p.account)));
    let detail = results
        .iter()
        .map(|(a, (v, c))| format!("{a}={}({c:.3})", if *v { "flagged" } else { "clean" }))
        .collect::<Vec<_>>()
        .join(" ");
    outcome(pass, detail)
}

fn bulk_classification() -> Outcome {
    let template: Vec<String> = (0..10)
        .map(|_| "I just harvested my crops in Farm Town, come help me out".to_string())
        .collect();
    let mut rng = ChaCha8Rng::seed_from_u64(8);
    let random: Vec<String> = (0..10)
        .map(|_| {
            (0..100)
                .map(|_| rng.gen_range(b'!'..=b'~') as char)
                .collect()
        })
        .collect();
    let reference = |texts: &[String]| {
        let mut sum = 0.0;
        let mut pairs = 0;
        for i in 0..texts.len() {
            for j in i + 1..texts.len() {
                sum += strsim::normalized_levenshtein(&texts[i], &texts[j]);
                pairs += 1;
            }
        }
        sum / pairs as f64
    };
    let classify = |texts: &[String]| {
        let mut s =
            ApplicationStats::new("app", Utc.with_ymd_and_hms(2024, 1, 1, 0, 0, 0).unwrap());
        s.sampled_messages = texts.to_vec();
        classify_application(&s, 0.35)
    };
    let (t_ours, t_ref) = (
        mean_pairwise_ratio(&template).unwrap(),
        reference(&template),
    );
    let (r_ours, r_ref) = (mean_pairwise_ratio(&random).unwrap(), reference(&random));
    let pass = classify(&template) == AppClass::Bulk
        && classify(&random) == AppClass::Client
        && (t_ours - t_ref).abs() < 1e-12
        && (r_ours - r_ref).abs() < 1e-12
        && t_ref >= 0.35
        && r_ref < 0.35;
    outcome(
        pass,
        format!("template ratio {t_ours:.3} (reference {t_ref:.3}), random ratio {r_ours:.3} (reference {r_ref:.3})"),
    )
}

fn determinism(dir: &Path) -> Outcome {
    let spec =
        SimulationSpec::from_toml(&CAMPAIGN_SPEC.replace("accounts = 1000", "accounts = 300"))
            .unwrap();
    let mut reports = Vec::new();
    for run in 0..2 {
        let run_dir = dir.join(format!("run{run}"));
        simulate(&spec, 23).unwrap().write_to(&run_dir).unwrap();
        let store = ProfileStore::open(run_dir.join("store")).unwrap();
        let mut config = Config::default();
        config.detection.seed = 5;
        let mut out = Vec::new();
        let groups = run_dir.join("groups.jsonl");
        cmd_detect(
            &run_dir.join("stream.jsonl"),
            Some(&run_dir.join("history.jsonl")),
            &store,
            &config,
            &mut out,
            Some(&groups),
        )
        .unwrap();
        reports.push((
            out,
            fs::read(groups).unwrap(),
            fs::read(store.applications_path()).unwrap(),
        ));
    }
    let same = reports[0] == reports[1];
    let verdicts = read_records(&reports[0].0).len();
    outcome(
        same && verdicts > 1,
        format!(
            "{} report bytes, {verdicts} records, identical={same}",
            reports[0].0.len()
        ),
    )
}

fn throughput(dir: &Path) -> Outcome {
    let raw = CAMPAIGN_SPEC
        .replace("accounts = 1000", "accounts = 20000\nwindow_posts = [5, 5]")
        .replace("history_messages = [20, 40]", "history_messages = [10, 12]")
        .replace("users = 40", "users = 400");
    let spec = SimulationSpec::from_toml(&raw).unwrap();
    simulate(&spec, 31).unwrap().write_to(dir).unwrap();
    let store = ProfileStore::open(dir.join("store")).unwrap();
    let config = Config::default();
    cmd_train(&dir.join("history.jsonl"), &store, &config).unwrap();

    let started = Instant::now();
    let mut out = Vec::new();
    let report = cmd_detect(
        &dir.join("stream.jsonl"),
        None,
        &store,
        &config,
        &mut out,
        None,
    )
    .unwrap();
    let elapsed = started.elapsed();
    outcome(
        report.summary.messages >= 100_000
            && report.summary.windows == 1
            && elapsed < StdDuration::from_secs(60),
        format!(
            "{} messages in {} window, {} groups, {:.2}s",
            report.summary.messages,
            report.summary.windows,
            report.summary.groups_total,
            elapsed.as_secs_f64()
        ),
    )
}

fn main() {
    let tmp = tempfile::tempdir().unwrap();
    let sub = |name: &str| {
        let p = tmp.path().join(name);
        fs::create_dir_all(&p).unwrap();
        p
    };
    let criteria: Vec<(&str, Criterion)> = vec![
        ("worked-example fidelity", Box::new(worked_example)),
        ("threshold function", Box::new(threshold_function)),
        ("scoring invariants", Box::new(scoring_invariants)),
        ("clustering oracle equivalence", Box::new(clustering_oracle)),
        ("smoothing mass conservation", Box::new(smoothing_mass)),
        (
            "campaign end-to-end",
            Box::new({
                let d = sub("campaign");
                move || campaign_end_to_end(&d)
            }),
        ),
        (
            "high-profile replay",
            Box::new({
                let d = sub("replay");
                move || high_profile_replay(&d)
            }),
        ),
        ("bulk classification", Box::new(bulk_classification)),
        (
            "determinism",
            Box::new({
                let d = sub("determinism");
                move || determinism(&d)
            }),
        ),
        (
            "throughput",
            Box::new({
                let d = sub("throughput");
                move || throughput(&d)
            }),
        ),
    ];
    let mut failed = 0;
    for (i, (name, check)) in criteria.into_iter().enumerate() {
        let r = check();
        if !r.pass {
            failed += 1;
        }
        println!(
            "criterion {:>2} {name}: {} ({})",
            i + 1,
            if r.pass { "PASS" } else { "FAIL" },
            r.detail
        );
    }
    println!("acceptance: {} of 10 criteria passed", 10 - failed);
    if failed > 0 {
        std::process::exit(1);
    }
}
