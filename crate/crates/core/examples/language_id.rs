//! Identify the language of short messages with the bundled n-gram profiles.
//!
//! cargo run --example language_id -- "Das Wetter ist heute wirklich schön"

use profilewatch::features::strip_entities;
use profilewatch::LanguageDetector;

fn main() {
    let detector = LanguageDetector::bundled();
    let mut texts: Vec<String> = std::env::args().skip(1).collect();
    if texts.is_empty() {
        texts = [
            "The council will meet again next week to discuss the new park",
            "Nous avons passé une excellente soirée avec nos amis au restaurant",
            "Hoy hace mucho calor y todos quieren ir a la playa",
            "Vandaag gaan we met de fiets naar de markt in het centrum",
            "lol ok @friend http://example.com/x",
        ]
        .map(String::from)
        .to_vec();
    }
    for text in &texts {
        let guess = detector.detect(text);
        let stripped = strip_entities(text);
        let ranked = detector.distances(&stripped);
        let runner_up = ranked
            .get(1)
            .map(|(c, d)| format!("{c} ({d})"))
            .unwrap_or_default();
        println!("{guess:>3}  {text}");
        if guess != "und" {
            println!(
                "     best {} ({}), next {runner_up}",
                ranked[0].0, ranked[0].1
            );
        }
    }
}
