//! Score incoming messages against a profile with both weight presets.

use chrono::{Duration, TimeZone, Utc};
use profilewatch::{build_profile, score_message, FeatureWeights, Message};

fn main() -> profilewatch::Result<()> {
    let start = Utc.with_ymd_and_hms(2013, 4, 1, 0, 0, 0).unwrap();
    let history: Vec<Message> = (0..40)
        .map(|i| {
            let url = format!("http://apnews.example.com/story/{i}");
            let mut m = Message::new(
                format!("h{i}"),
                "newswire",
                start + Duration::days(i / 3) + Duration::hours(8 + i % 8),
                format!("The committee released its findings this afternoon {url}"),
                "SocialFlow",
            );
            m.urls.push(url);
            m
        })
        .collect();
    let profile = build_profile("newswire", &history, 10)?;

    let at = Utc.with_ymd_and_hms(2013, 4, 23, 10, 7, 0).unwrap();
    let routine = {
        let mut m = Message::new(
            "routine",
            "newswire",
            at,
            "The committee will publish a second report next month http://apnews.example.com/story/99",
            "SocialFlow",
        );
        m.urls.push("http://apnews.example.com/story/99".into());
        m
    };
    let hijacked = Message::new(
        "hijacked",
        "newswire",
        at,
        "@everyone Breaking: two explosions reported downtown and many people are injured",
        "Twitter Web Client",
    );

    for (name, weights) in [
        ("twitter", FeatureWeights::twitter()),
        ("facebook", FeatureWeights::facebook()),
    ] {
        println!("{name} weights, threshold {}", weights.threshold);
        for m in [&routine, &hijacked] {
            let s = score_message(&profile, m, &weights, 0);
            let per: Vec<String> = s
                .per_feature
                .iter()
                .map(|(k, v)| format!("{}={v:.2}", k.as_str()))
                .collect();
            println!(
                "  {:<9} composite {:.3} violates={}  [{}]",
                m.message_id,
                s.composite,
                s.violates_profile,
                per.join(" ")
            );
        }
    }
    Ok(())
}
