mod commands;
mod config;
mod report;

use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::{Context, Result};
use clap::{Parser, Subcommand};
use log::info;

use qontexts_core::detection::MergeMode;
use qontexts_core::scheduler::ExecMode;

use commands::Artifacts;
use config::{ExperimentConfig, Overrides};
use report::{Report, REPORT_FILE, SUMMARY_FILE};

/// Crosstalk attacks and context-switched multi-programming on simulated
/// quantum machines.
#[derive(Parser, Debug)]
#[command(name = "qontexts", version)]
struct Cli {
    /// Experiment configuration (JSON).
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Master seed; every random draw derives from it.
    #[arg(long, global = true)]
    seed: Option<u64>,
    /// Output directory.
    #[arg(long, global = true)]
    out: Option<PathBuf>,
    /// Execution modes, comma separated: isolated, emp, qontexts, qontexts_ad.
    #[arg(long, global = true, value_delimiter = ',', value_parser = parse_mode)]
    mode: Option<Vec<ExecMode>>,
    /// Contexts per program.
    #[arg(long, global = true)]
    contexts: Option<u32>,
    /// Hold-out detection threshold.
    #[arg(long, global = true)]
    threshold: Option<f64>,
    /// Context weighting: inverse_noise or as_written.
    #[arg(long, global = true, value_parser = parse_merge)]
    merge: Option<MergeMode>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Crosstalk profiling sweeps (RF by hop distance and by attack-link count).
    Characterize,
    /// BV victims next to ZKTA co-runners.
    AttackDemo,
    /// One seeded queue under every configured execution mode.
    Run,
    /// Latency, resilience and queueing models.
    Analytics,
    /// Print the summary of an existing report.
    Report {
        /// Directory holding report.json; defaults to the output directory.
        dir: Option<PathBuf>,
        /// Recompute from the embedded configuration and compare.
        #[arg(long)]
        reproduce: bool,
    },
}

fn parse_mode(s: &str) -> Result<ExecMode, String> {
    s.parse().map_err(|e: qontexts_core::Error| e.to_string())
}

fn parse_merge(s: &str) -> Result<MergeMode, String> {
    s.parse().map_err(|e: qontexts_core::Error| e.to_string())
}

fn write_artifacts(a: &Artifacts, dir: &Path) -> Result<()> {
    std::fs::create_dir_all(dir).with_context(|| format!("creating {}", dir.display()))?;
    let put = |name: &str, text: &str| -> Result<()> {
        let p = dir.join(name);
        std::fs::write(&p, text).with_context(|| format!("writing {}", p.display()))
    };
    put(REPORT_FILE, &a.report.to_json()?)?;
    put(SUMMARY_FILE, &a.report.summary())?;
    for (name, text) in &a.files {
        put(name, text)?;
    }
    Ok(())
}

/// Reruns the report's command and diffs the report and every data file
/// against what is on disk.
fn reproduce(dir: &Path, old: &Report) -> Result<bool> {
    let fresh = commands::rerun(&old.config, old.outcome.command())?;
    let mut same = fresh.report == *old;
    if !same {
        println!("report.json differs");
    }
    for (name, text) in &fresh.files {
        let p = dir.join(name);
        match std::fs::read_to_string(&p) {
            Ok(disk) if disk == *text => {}
            Ok(_) => {
                println!("{name} differs");
                same = false;
            }
            Err(e) => {
                println!("{name}: {e}");
                same = false;
            }
        }
    }
    Ok(same)
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let cli = Cli::parse();
    match real_main(cli) {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(2)
        }
    }
}

fn real_main(cli: Cli) -> Result<ExitCode> {
    let mut cfg = ExperimentConfig::load(cli.config.as_deref())?;
    cfg.apply(&Overrides {
        seed: cli.seed,
        out: cli.out.clone(),
        modes: cli.mode.clone(),
        contexts: cli.contexts,
        threshold: cli.threshold,
        merge: cli.merge,
    });

    let artifacts = match cli.command {
        Command::Report { dir, reproduce: again } => {
            let dir = dir.unwrap_or_else(|| cfg.out.clone());
            let old = Report::read(&dir)?;
            print!("{}", old.summary());
            if again {
                let same = reproduce(&dir, &old)?;
                println!("reproduced: {}", if same { "identical" } else { "DIFFERENT" });
                return Ok(if same { ExitCode::SUCCESS } else { ExitCode::FAILURE });
            }
            return Ok(ExitCode::SUCCESS);
        }
        Command::Characterize => {
            cfg.validate()?;
            commands::characterize(&cfg)?
        }
        Command::AttackDemo => {
            cfg.validate()?;
            commands::attack_demo_cmd(&cfg)?
        }
        Command::Run => {
            cfg.validate()?;
            commands::run(&cfg)?
        }
        Command::Analytics => {
            cfg.validate()?;
            commands::analytics(&cfg)?
        }
    };
    write_artifacts(&artifacts, &cfg.out)?;
    print!("{}", artifacts.report.summary());
    info!("wrote {}", cfg.out.display());
    Ok(if artifacts.report.failures.is_empty() {
        ExitCode::SUCCESS
    } else {
        ExitCode::FAILURE
    })
}
