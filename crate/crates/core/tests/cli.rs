use std::fs;
use std::path::Path;
use std::process::{Command, Output};

const SPEC: &str = r#"
accounts = 120
history_start = "2024-03-01T00:00:00Z"
detection_start = "2024-03-15T03:00:00Z"

[[campaigns]]
name = "prize"
app = "PromoBlaster"
victims = 20
"#;

fn run(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_profilewatch"))
        .args(args)
        .output()
        .unwrap()
}

fn code(out: &Output) -> i32 {
    out.status.code().unwrap()
}

fn simulate(dir: &Path, spec: &str) {
    let spec_path = dir.join("spec.toml");
    fs::write(&spec_path, spec).unwrap();
    let out = run(&[
        "simulate",
        spec_path.to_str().unwrap(),
        "--seed",
        "3",
        "--out",
        dir.to_str().unwrap(),
    ]);
    assert_eq!(code(&out), 0, "{}", String::from_utf8_lossy(&out.stderr));
}

#[test]
fn train_detect_and_show() {
    let dir = tempfile::tempdir().unwrap();
    let d = dir.path();
    simulate(d, SPEC);
    let store = d.join("store");
    let s = store.to_str().unwrap();

    let out = run(&[
        "train",
        d.join("history.jsonl").to_str().unwrap(),
        "--store",
        s,
    ]);
    assert_eq!(code(&out), 0, "{}", String::from_utf8_lossy(&out.stderr));
    let report: serde_json::Value = serde_json::from_slice(&out.stdout).unwrap();
    assert_eq!(report["trained"], 120);

    let verdicts = d.join("verdicts.jsonl");
    let out = run(&[
        "detect",
        d.join("stream.jsonl").to_str().unwrap(),
        "--store",
        s,
        "--out",
        verdicts.to_str().unwrap(),
        "--window-seconds",
        "3600",
        "--seed",
        "1",
    ]);
    assert_eq!(code(&out), 1, "{}", String::from_utf8_lossy(&out.stderr));
    let last = fs::read_to_string(&verdicts)
        .unwrap()
        .lines()
        .last()
        .unwrap()
        .to_string();
    let summary: serde_json::Value = serde_json::from_str(&last).unwrap();
    assert_eq!(summary["record"], "summary");
    assert_eq!(summary["accounts_flagged"].as_array().unwrap().len(), 20);

    let account = report_account(&d.join("truth.jsonl"));
    let out = run(&["show-profile", &account, "--store", s]);
    assert_eq!(code(&out), 0);
    let profile: serde_json::Value = serde_json::from_slice(&out.stdout).unwrap();
    assert_eq!(profile["account_id"], account.as_str());

    assert_eq!(code(&run(&["show-profile", "nobody", "--store", s])), 2);

    // allow-listing the campaign app clears the detection
    let allow = d.join("allow.txt");
    fs::write(&allow, "PromoBlaster\n").unwrap();
    let out = run(&[
        "detect",
        d.join("stream.jsonl").to_str().unwrap(),
        "--store",
        s,
        "--allow-list",
        allow.to_str().unwrap(),
        "--out",
        d.join("v2.jsonl").to_str().unwrap(),
    ]);
    assert_eq!(code(&out), 0, "{}", String::from_utf8_lossy(&out.stderr));
}

fn report_account(truth: &Path) -> String {
    let line = fs::read_to_string(truth)
        .unwrap()
        .lines()
        .next()
        .unwrap()
        .to_string();
    let v: serde_json::Value = serde_json::from_str(&line).unwrap();
    v["account_id"].as_str().unwrap().to_string()
}

#[test]
fn clean_stream_exits_zero() {
    let dir = tempfile::tempdir().unwrap();
    let d = dir.path();
    let clean = SPEC.split("[[campaigns]]").next().unwrap();
    simulate(d, clean);
    let out = run(&[
        "detect",
        d.join("stream.jsonl").to_str().unwrap(),
        "--history",
        d.join("history.jsonl").to_str().unwrap(),
        "--store",
        d.join("store").to_str().unwrap(),
        "--weights-preset",
        "twitter",
        "--budget",
        "50",
        "--out",
        d.join("v.jsonl").to_str().unwrap(),
    ]);
    assert_eq!(code(&out), 0, "{}", String::from_utf8_lossy(&out.stderr));
}

#[test]
fn input_errors_exit_two() {
    let dir = tempfile::tempdir().unwrap();
    let d = dir.path();
    let s = d.join("store");
    let s = s.to_str().unwrap();

    let garbage = d.join("garbage.jsonl");
    fs::write(&garbage, "not json\n{\"also\": \"bad\"}\n").unwrap();
    assert_eq!(
        code(&run(&["train", garbage.to_str().unwrap(), "--store", s])),
        2
    );
    assert_eq!(
        code(&run(&["score", garbage.to_str().unwrap(), "--store", s])),
        2
    );
    assert_eq!(
        code(&run(&["detect", garbage.to_str().unwrap(), "--store", s])),
        2
    );
    assert_eq!(
        code(&run(&[
            "train",
            d.join("missing.jsonl").to_str().unwrap(),
            "--store",
            s
        ])),
        2
    );
    assert_eq!(
        code(&run(&[
            "detect",
            garbage.to_str().unwrap(),
            "--weights-preset",
            "myspace"
        ])),
        2
    );
    assert_eq!(
        code(&run(&[
            "score",
            garbage.to_str().unwrap(),
            "--threshold",
            "1.5",
            "--store",
            s
        ])),
        2
    );

    let cfg = d.join("bad.toml");
    fs::write(&cfg, "[detection]\nwindow_seconds = -5\n").unwrap();
    assert_eq!(
        code(&run(&[
            "train",
            garbage.to_str().unwrap(),
            "--config",
            cfg.to_str().unwrap()
        ])),
        2
    );

    let spec = d.join("spec.toml");
    fs::write(&spec, "accounts = \n").unwrap();
    let out = run(&[
        "simulate",
        spec.to_str().unwrap(),
        "--out",
        d.to_str().unwrap(),
    ]);
    assert_eq!(code(&out), 2);
    assert!(String::from_utf8_lossy(&out.stderr).contains("line 1"));
}

#[test]
fn score_reports_violations() {
    let dir = tempfile::tempdir().unwrap();
    let d = dir.path();
    simulate(d, SPEC);
    let s = d.join("store");
    let s = s.to_str().unwrap();
    assert_eq!(
        code(&run(&[
            "train",
            d.join("history.jsonl").to_str().unwrap(),
            "--store",
            s
        ])),
        0
    );
    let scores = d.join("scores.jsonl");
    let out = run(&[
        "score",
        d.join("stream.jsonl").to_str().unwrap(),
        "--store",
        s,
        "--out",
        scores.to_str().unwrap(),
    ]);
    assert_eq!(code(&out), 1);
    let text = fs::read_to_string(&scores).unwrap();
    assert!(text.lines().any(|l| l.contains("\"record\":\"score\"")));
    assert!(text
        .lines()
        .last()
        .unwrap()
        .contains("\"record\":\"summary\""));
}
