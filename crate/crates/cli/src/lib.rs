//! Operator surface for seed-stability experiments: prepare data and suites,
//! train every (seed, variant), evaluate, and write the stability report.

pub mod commands;
pub mod config;
pub mod error;
pub mod layout;
pub mod output;

use std::path::PathBuf;

use clap::{Parser, Subcommand};

pub use commands::{cmd_all, cmd_eval, cmd_prepare, cmd_report, cmd_train};
pub use config::RunConfig;
pub use error::{CliError, CliResult};
pub use layout::Layout;

#[derive(Debug, Parser)]
#[command(name = "seedstab", version, about = "Multi-seed stability experiments for a small sentiment classifier")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
    /// TOML run configuration; defaults apply when omitted.
    #[arg(long, global = true)]
    pub config: Option<PathBuf>,
    /// Seeds, e.g. `0-9` or `1,3,5`.
    #[arg(long, global = true)]
    pub seeds: Option<String>,
    /// `vanilla`, `swa` or `both`.
    #[arg(long, global = true)]
    pub variant: Option<String>,
    #[arg(long, global = true)]
    pub parallelism: Option<usize>,
    /// Output directory (overrides the config and $SEEDSTAB_OUT).
    #[arg(long, global = true)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Subcommand)]
pub enum Command {
    /// Materialize corpus, lexicons, name lists, vocabulary and suite.
    Prepare,
    /// Train every (seed, variant).
    Train,
    /// Evaluate every model on the dev set and the suite.
    Eval,
    /// Compute the stability report.
    Report,
    /// prepare, train, eval and report in sequence.
    All,
}

/// Applies flag overrides and resolves the output directory.
pub fn resolve(cli: &Cli) -> CliResult<(RunConfig, Layout)> {
    let mut cfg = match &cli.config {
        Some(path) => RunConfig::load(path)?,
        None => RunConfig::default(),
    };
    if let Some(s) = &cli.seeds {
        cfg.seeds = config::parse_seed_list(s)?;
    }
    if let Some(v) = &cli.variant {
        cfg.variants = config::parse_variants(v)?;
    }
    if let Some(p) = cli.parallelism {
        cfg.parallelism = p;
    }
    let env = std::env::var(config::OUT_ENV).ok();
    let out = config::resolve_out_dir(cli.out.as_deref(), &cfg, env.as_deref());
    cfg.out = Some(out.clone());
    Ok((cfg, Layout::new(out)))
}

pub fn run(cli: &Cli) -> CliResult<String> {
    let (cfg, layout) = resolve(cli)?;
    let root = layout.root().display().to_string();
    Ok(match cli.command {
        Command::Prepare => {
            let s = cmd_prepare(&cfg, &layout)?;
            format!(
                "prepared {root}: {} train / {} dev / {} test, vocabulary {}, {} capabilities, {} instances, names +{} -{}",
                s.n_train, s.n_dev, s.n_test, s.vocab_size, s.capabilities, s.instances, s.positive_names, s.negative_names
            )
        }
        Command::Train => {
            let s = cmd_train(&cfg, &layout)?;
            train_message(&s)
        }
        Command::Eval => {
            let s = cmd_eval(&cfg, &layout)?;
            format!(
                "evaluated {} models ({} records each), skipped {}",
                s.evaluated.len(),
                s.records_per_model,
                s.skipped.len()
            )
        }
        Command::Report => report_message(&cmd_report(&cfg, &layout)?, &layout),
        Command::All => {
            let s = cmd_all(&cfg, &layout)?;
            format!("{}\n{}", train_message(&s.train), report_message(&s.report, &layout))
        }
    })
}

fn train_message(s: &commands::TrainSummary) -> String {
    let mut msg = format!("trained {} models", s.trained.len());
    for f in &s.failures {
        msg.push_str(&format!("\nfailed: seed {} {}: {}", f.seed, f.variant, f.error));
    }
    msg
}

fn report_message(s: &commands::ReportSummary, layout: &Layout) -> String {
    match &s.without_outliers {
        None => format!(
            "report written to {} (no outlier seed flagged)",
            layout.report().display()
        ),
        Some(_) => format!(
            "reports written to {} and {}",
            layout.report().display(),
            layout.report_without_outliers().display()
        ),
    }
}
