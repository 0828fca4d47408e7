use std::fs::File;
use std::io::{self, BufWriter, Write};
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};

use profilewatch::pipeline::{cmd_detect, cmd_score, cmd_train};
use profilewatch::simulate::{simulate, SimulationSpec};
use profilewatch::{Config, ProfileStore, Result};

/// Behavioral profiling and compromised-account detection.
///
/// Exit status: 0 when nothing was flagged, 1 when violations or
/// compromised groups were found, 2 on input or configuration errors.
#[derive(Parser)]
#[command(name = "profilewatch", version)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Build profiles for every account in a JSONL message stream.
    Train {
        stream: PathBuf,
        #[command(flatten)]
        common: Common,
    },
    /// Score messages against stored profiles.
    Score {
        messages: PathBuf,
        #[command(flatten)]
        common: Common,
    },
    /// Group similar messages per window and judge each group.
    Detect {
        stream: PathBuf,
        /// Build profiles from this history stream instead of the store.
        #[arg(long)]
        history: Option<PathBuf>,
        /// Also write every similarity group as JSONL.
        #[arg(long)]
        groups_out: Option<PathBuf>,
        #[command(flatten)]
        common: Common,
    },
    /// Generate a labeled synthetic stream from a TOML description.
    Simulate {
        spec: PathBuf,
        #[arg(long)]
        seed: Option<u64>,
        /// Output directory for history.jsonl, stream.jsonl and truth.jsonl.
        #[arg(long, default_value = ".")]
        out: PathBuf,
    },
    /// Print a stored profile as JSON.
    ShowProfile {
        account: String,
        #[arg(long, default_value = "profiles")]
        store: PathBuf,
        #[arg(long)]
        out: Option<PathBuf>,
    },
}

#[derive(Clone, Copy, ValueEnum)]
enum Preset {
    Twitter,
    Facebook,
}

#[derive(Args)]
struct Common {
    #[arg(long, default_value = "profiles")]
    store: PathBuf,
    #[arg(long)]
    config: Option<PathBuf>,
    #[arg(long)]
    window_seconds: Option<i64>,
    #[arg(long, value_enum)]
    weights_preset: Option<Preset>,
    #[arg(long)]
    threshold: Option<f64>,
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long)]
    allow_list: Option<PathBuf>,
    /// Maximum profiles fetched per window.
    #[arg(long)]
    budget: Option<usize>,
    /// Output file; stdout when omitted.
    #[arg(long)]
    out: Option<PathBuf>,
}

impl Common {
    fn config(&self) -> Result<Config> {
        let mut cfg = match &self.config {
            Some(path) => Config::load(path)?,
            None => Config::default(),
        };
        if let Some(p) = self.weights_preset {
            cfg.scoring.preset = match p {
                Preset::Twitter => "twitter",
                Preset::Facebook => "facebook",
            }
            .into();
            if self.window_seconds.is_none()
                && self.config.is_none()
                && matches!(p, Preset::Facebook)
            {
                cfg.detection.window_seconds = 28_800;
            }
        }
        if let Some(t) = self.threshold {
            cfg.scoring.threshold = t;
        }
        if let Some(w) = self.window_seconds {
            cfg.detection.window_seconds = w;
        }
        if let Some(s) = self.seed {
            cfg.detection.seed = s;
        }
        if let Some(a) = &self.allow_list {
            cfg.detection.allow_list = Some(a.clone());
        }
        if let Some(b) = self.budget {
            cfg.detection.budget = Some(b);
        }
        cfg.validate()?;
        Ok(cfg)
    }

    fn store(&self) -> Result<ProfileStore> {
        ProfileStore::open(&self.store)
    }
}

fn output(path: Option<&Path>) -> Result<Box<dyn Write>> {
    Ok(match path {
        Some(p) => Box::new(BufWriter::new(
            File::create(p).map_err(|e| profilewatch::Error::io(p, e))?,
        )),
        None => Box::new(BufWriter::new(io::stdout().lock())),
    })
}

fn run(cli: Cli) -> Result<bool> {
    match cli.command {
        Command::Train { stream, common } => {
            let cfg = common.config()?;
            let report = cmd_train(&stream, &common.store()?, &cfg)?;
            let mut out = output(common.out.as_deref())?;
            serde_json::to_writer(&mut out, &report)?;
            writeln!(out)?;
            Ok(false)
        }
        Command::Score { messages, common } => {
            let cfg = common.config()?;
            let summary = cmd_score(
                &messages,
                &common.store()?,
                &cfg,
                output(common.out.as_deref())?,
            )?;
            eprintln!(
                "scored {} of {} messages, {} violations",
                summary.scored, summary.messages, summary.violations
            );
            Ok(summary.violations > 0)
        }
        Command::Detect {
            stream,
            history,
            groups_out,
            common,
        } => {
            let cfg = common.config()?;
            let report = cmd_detect(
                &stream,
                history.as_deref(),
                &common.store()?,
                &cfg,
                output(common.out.as_deref())?,
                groups_out.as_deref(),
            )?;
            eprintln!(
                "{} groups, {} compromised, {} accounts flagged",
                report.summary.groups_total,
                report.summary.groups_compromised,
                report.summary.accounts_flagged.len()
            );
            Ok(report.has_detections())
        }
        Command::Simulate { spec, seed, out } => {
            let spec = SimulationSpec::load(&spec)?;
            let seed = seed.unwrap_or(spec.seed);
            let sim = simulate(&spec, seed)?;
            sim.write_to(&out)?;
            eprintln!(
                "{} history, {} stream, {} injected messages",
                sim.history.len(),
                sim.stream.len(),
                sim.truth.len()
            );
            Ok(false)
        }
        Command::ShowProfile {
            account,
            store,
            out,
        } => {
            let profile = ProfileStore::open(&store)?.load(&account)?;
            let mut w = output(out.as_deref())?;
            serde_json::to_writer_pretty(&mut w, &profile)?;
            writeln!(w)?;
            Ok(false)
        }
    }
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let cli = Cli::parse();
    match run(cli) {
        Ok(false) => ExitCode::SUCCESS,
        Ok(true) => ExitCode::from(1),
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(2)
        }
    }
}
