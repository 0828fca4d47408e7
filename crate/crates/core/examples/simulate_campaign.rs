//! End to end: generate a labeled stream, train profiles on the history,
//! run detection on the live hour and compare with the ground truth.
//!
//! cargo run --release --example simulate_campaign -- [spec.toml]

use std::collections::BTreeSet;
use std::path::PathBuf;

use profilewatch::pipeline::{cmd_detect, cmd_train};
use profilewatch::simulate::{simulate, SimulationSpec};
use profilewatch::{Config, ProfileStore};

fn main() -> profilewatch::Result<()> {
    let spec_path = std::env::args()
        .nth(1)
        .map(PathBuf::from)
        .unwrap_or_else(|| {
            PathBuf::from(concat!(
                env!("CARGO_MANIFEST_DIR"),
                "/examples/data/campaign.toml"
            ))
        });
    let spec = SimulationSpec::load(&spec_path)?;
    let dir = std::env::temp_dir().join(format!("simulate-campaign-{}", std::process::id()));
    let sim = simulate(&spec, spec.seed)?;
    sim.write_to(&dir)?;
    println!(
        "{} accounts, {} history messages, {} live messages, {} injected",
        spec.accounts,
        sim.history.len(),
        sim.stream.len(),
        sim.truth.len()
    );

    let store = ProfileStore::open(dir.join("store"))?;
    let config = Config::default();
    let trained = cmd_train(&dir.join("history.jsonl"), &store, &config)?;
    println!("trained {} profiles", trained.trained);

    let report = cmd_detect(
        &dir.join("stream.jsonl"),
        None,
        &store,
        &config,
        std::io::sink(),
        None,
    )?;
    for v in &report.verdicts {
        println!(
            "  {} n={:<3} violations {:>3}/{:<3} th={:.3} app={} ({:?}, popular={}) compromised={}",
            v.verdict.key,
            v.verdict.n,
            v.verdict.violations,
            v.verdict.evaluated,
            v.verdict.threshold,
            v.verdict.predominant_app,
            v.verdict.app_class,
            v.verdict.app_popular,
            v.verdict.compromised
        );
    }

    let truth = sim.compromised_accounts();
    let flagged: BTreeSet<String> = report.summary.accounts_flagged.iter().cloned().collect();
    println!(
        "flagged {} accounts: {} of {} victims, {} benign",
        flagged.len(),
        flagged.intersection(&truth).count(),
        truth.len(),
        flagged.difference(&truth).count()
    );
    std::fs::remove_dir_all(&dir).ok();
    Ok(())
}
