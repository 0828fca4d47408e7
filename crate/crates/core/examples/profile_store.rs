//! Persist profiles to an on-disk store, reload them, and detect tampering.

use chrono::{Duration, TimeZone, Utc};
use profilewatch::{build_profile, Message, ProfileStore};

fn main() -> profilewatch::Result<()> {
    let dir = std::env::temp_dir().join(format!("profile-store-example-{}", std::process::id()));
    let store = ProfileStore::open(&dir)?;

    let start = Utc.with_ymd_and_hms(2024, 1, 1, 9, 0, 0).unwrap();
    let stream: Vec<Message> = (0..12)
        .map(|i| {
            Message::new(
                format!("m{i}"),
                "alice",
                start + Duration::hours(i * 24),
                "morning coffee and the news",
                "iphone",
            )
        })
        .collect();
    let profile = build_profile("alice", &stream, 10)?;
    let path = store.save(&profile)?;
    println!("saved {}", path.display());
    println!("accounts in store: {:?}", store.accounts()?);
    println!("reloaded equal: {}", store.load("alice")? == profile);

    match store.load("bob") {
        Err(e) => println!("bob: {e}"),
        Ok(_) => unreachable!(),
    }

    let raw = std::fs::read_to_string(&path).unwrap();
    std::fs::write(&path, raw.replace("iphone", "android")).unwrap();
    match store.load("alice") {
        Err(e) => println!("after edit: {e}"),
        Ok(_) => println!("tampering went unnoticed"),
    }
    std::fs::remove_dir_all(&dir).ok();
    Ok(())
}
