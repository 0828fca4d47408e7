//! Judge a group of similar messages: profile-violation fraction against
//! the size-dependent threshold, then the posting application's class and
//! popularity.

use std::collections::HashMap;

use chrono::{Duration, TimeZone, Utc};
use profilewatch::campaign::{judge_group, JudgeParams};
use profilewatch::{
    group_threshold, ApplicationRegistry, Message, MessageGroup, MessageScore, SimilarityKind,
};

fn main() {
    for n in [2, 4, 50, 144, 1000] {
        println!("th({n}) = {:.3}", group_threshold(n));
    }

    let t0 = Utc.with_ymd_and_hms(2024, 3, 15, 3, 0, 0).unwrap();
    let text = "Congratulations you have been selected to win a free iPhone";
    let messages: Vec<Message> = (0..6)
        .map(|i| {
            Message::new(
                format!("m{i}"),
                format!("victim{i}"),
                t0 + Duration::minutes(i),
                text,
                "PromoBlaster",
            )
        })
        .collect();
    let group = MessageGroup {
        group_id: "w0-g0".into(),
        similarity_kind: SimilarityKind::Text,
        key: "been selected to win".into(),
        messages: messages.clone(),
    };

    let scores: HashMap<String, MessageScore> = messages
        .iter()
        .enumerate()
        .map(|(i, m)| {
            let composite = if i < 5 { 0.62 } else { 0.2 };
            let s = MessageScore {
                message_id: m.message_id.clone(),
                account_id: m.account_id.clone(),
                per_feature: Default::default(),
                composite,
                violates_profile: composite > 0.5,
            };
            (m.message_id.clone(), s)
        })
        .collect();

    let mut registry = ApplicationRegistry::new(10, 0);
    for m in &messages {
        registry.observe(m, Some(scores[&m.message_id].violates_profile));
    }
    let v = judge_group(&group, &scores, &registry, &JudgeParams::default());
    println!(
        "group {} n={} violations={}/{} fraction={:.2} threshold={:.3}",
        v.group_id, v.n, v.violations, v.evaluated, v.fraction, v.threshold
    );
    println!(
        "app {} class={:?} popular={} score={:?}",
        v.predominant_app, v.app_class, v.app_popular, v.popularity_score
    );
    println!(
        "compromised={} accounts={:?}",
        v.compromised, v.compromised_accounts
    );
}
