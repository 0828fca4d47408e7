//! Group the messages of one observation window by shared word 4-grams or
//! shared normalized URLs.

use chrono::{Duration, TimeZone, Utc};
use profilewatch::cluster::tumbling_windows;
use profilewatch::{cluster_window, Message};

fn main() {
    let start = Utc.with_ymd_and_hms(2024, 3, 15, 3, 0, 0).unwrap();
    let texts = [
        (
            "a",
            "Congratulations you have been selected to win a free iPhone http://win.biz/c?id=1",
        ),
        (
            "b",
            "Congratulations you have been selected to win a free laptop http://win.biz/c?id=2",
        ),
        ("c", "WOW you have been selected to win a free vacation"),
        ("d", "look at this https://news.example.com/eclipse?utm=tw"),
        ("e", "amazing photos https://news.example.com/eclipse"),
        ("f", "my cat https://www.youtube.com/watch?v=1"),
        ("g", "my dog https://www.youtube.com/watch?v=1"),
        ("h", "nothing in common with anyone else here"),
    ];
    let messages: Vec<Message> = texts
        .iter()
        .enumerate()
        .map(|(i, (id, text))| {
            Message::new(
                *id,
                format!("user{i}"),
                start + Duration::minutes(i as i64 * 5),
                *text,
                "web",
            )
        })
        .collect();

    for window in tumbling_windows(&messages, 3600) {
        println!(
            "window {} .. {} ({} messages)",
            window.start,
            window.end(),
            window.messages.len()
        );
        for g in cluster_window(&window) {
            let ids: Vec<&str> = g.messages.iter().map(|m| m.message_id.as_str()).collect();
            println!(
                "  {} {:?} n={} key={:?} members={ids:?}",
                g.group_id,
                g.similarity_kind,
                g.size(),
                g.key
            );
        }
    }
}
