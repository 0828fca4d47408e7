//! Train a behavioral profile from an account's message history and print
//! what each feature model learned.

use chrono::{Duration, TimeZone, Utc};
use profilewatch::{build_profile, FeatureKind, Message, DEFAULT_MIN_STREAM};

fn main() -> profilewatch::Result<()> {
    let start = Utc.with_ymd_and_hms(2013, 4, 1, 0, 0, 0).unwrap();
    let stream: Vec<Message> = (0..30)
        .map(|i| {
            let ts = start + Duration::days(i / 2) + Duration::hours(13 + i % 4);
            let url = format!("http://apnews.example.com/story/{i}");
            let mut m = Message::new(
                format!("ap-{i}"),
                "newswire",
                ts,
                format!("Officials confirmed the report earlier today, more details at {url}"),
                if i % 10 == 0 {
                    "Twitter Web Client"
                } else {
                    "SocialFlow"
                },
            );
            m.urls.push(url);
            if i % 7 == 0 {
                m.mentions.push("reporter".into());
            }
            m
        })
        .collect();

    let profile = build_profile("newswire", &stream, DEFAULT_MIN_STREAM)?;
    println!(
        "{} trained on {} messages",
        profile.account_id, profile.trained_on
    );
    for kind in FeatureKind::ALL {
        let model = profile.model(kind).unwrap();
        let entries: Vec<String> = model
            .entries
            .iter()
            .map(|(v, c)| format!("{v}:{c}"))
            .collect();
        println!("{:<20} {}", kind.as_str(), entries.join(" "));
        if let Some(smoothed) = &model.smoothed_entries {
            let s: Vec<String> = smoothed
                .iter()
                .map(|(h, c)| format!("{h}:{c:.2}"))
                .collect();
            println!("{:<20} {}", "  smoothed", s.join(" "));
        }
    }

    match build_profile("newswire", &stream[..5], DEFAULT_MIN_STREAM) {
        Err(e) => println!("five messages: {e}"),
        Ok(_) => unreachable!(),
    }
    Ok(())
}
