//! `pinch`: run, sweep, oracle-check and audit pinching-antenna designs.
//!
//! Tables go to stdout unless `--out` names a directory; progress and
//! diagnostics go to stderr.

use anyhow::{bail, Context, Result};
use clap::{Args, Parser, Subcommand, ValueEnum};
use pinch_core::config::{Algorithm, ScenarioConfig};
use pinch_core::experiment::{self, Axis, Batch, AUDIT_TOL};
use std::path::{Path, PathBuf};

#[derive(Parser)]
#[command(
    name = "pinch",
    version,
    about = "Power-minimizing designs for pinching-antenna systems"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Clone, Copy, PartialEq, Eq, ValueEnum)]
enum Format {
    /// Comma-separated run and summary tables.
    Table,
    /// One TOML `[[run]]` table per run, with the full design.
    Records,
}

#[derive(Args)]
struct Common {
    /// Scenario configuration (TOML). Built-in defaults when omitted.
    #[arg(long)]
    config: Option<PathBuf>,
    /// Seed of the user-drop generator.
    #[arg(long, env = "PASS_SEED")]
    seed: Option<u64>,
    /// Directory for the output files. Results go to stdout when omitted.
    #[arg(long, env = "PASS_OUT_DIR")]
    out: Option<PathBuf>,
    /// Algorithms to run (repeat or comma-separate). Overrides the configuration.
    #[arg(long, value_delimiter = ',', value_parser = parse_algorithm)]
    algo: Vec<Algorithm>,
    #[arg(long, value_enum, default_value_t = Format::Table)]
    format: Format,
}

#[derive(Subcommand)]
enum Command {
    /// Run the configured algorithms on one user drop.
    Run {
        #[command(flatten)]
        common: Common,
        /// Index of the user drop.
        #[arg(long, default_value_t = 0)]
        drop: u64,
    },
    /// Run every drop at each value of one parameter.
    Sweep {
        #[command(flatten)]
        common: Common,
        /// sinr, motion-power, grid-density, speed or area-scale.
        #[arg(long, value_parser = parse_axis)]
        axis: Axis,
        #[arg(long, value_delimiter = ',', required = true)]
        values: Vec<f64>,
        /// Number of drops per value. Overrides the configuration.
        #[arg(long)]
        drops: Option<usize>,
    },
    /// Compare both optimizers with brute-force optima on tiny instances.
    Oracle {
        #[arg(long, env = "PASS_SEED", default_value_t = 0)]
        seed: u64,
        #[arg(long, default_value_t = 20)]
        count: u64,
        #[arg(long, env = "PASS_OUT_DIR")]
        out: Option<PathBuf>,
    },
    /// Print the effective configuration as TOML.
    Config {
        #[arg(long)]
        config: Option<PathBuf>,
        #[arg(long, env = "PASS_SEED")]
        seed: Option<u64>,
    },
    /// Re-audit the designs in a records file.
    Audit {
        /// Configuration the records were produced with.
        #[arg(long)]
        config: Option<PathBuf>,
        /// Records file written by `run` or `sweep` with `--format records`.
        #[arg(long)]
        design: PathBuf,
    },
}

fn parse_algorithm(s: &str) -> Result<Algorithm, String> {
    Algorithm::from_token(s).ok_or_else(|| {
        let names: Vec<_> = Algorithm::ALL.iter().map(|a| a.token()).collect();
        format!(
            "unknown algorithm `{s}` (expected one of {})",
            names.join(", ")
        )
    })
}

fn parse_axis(s: &str) -> Result<Axis, String> {
    Axis::from_token(s).ok_or_else(|| {
        let names: Vec<_> = Axis::ALL.iter().map(|a| a.token()).collect();
        format!("unknown axis `{s}` (expected one of {})", names.join(", "))
    })
}

fn load_config(path: Option<&Path>) -> Result<ScenarioConfig> {
    match path {
        Some(p) => ScenarioConfig::load(p).with_context(|| format!("loading {}", p.display())),
        None => Ok(ScenarioConfig::default()),
    }
}

impl Common {
    fn config(&self) -> Result<ScenarioConfig> {
        let mut cfg = load_config(self.config.as_deref())?;
        if let Some(seed) = self.seed {
            cfg.seed = seed;
        }
        if !self.algo.is_empty() {
            cfg.algorithms = self.algo.clone();
        }
        Ok(cfg)
    }

    fn emit(&self, batch: &Batch) -> Result<()> {
        let files: Vec<(&str, String)> = match self.format {
            Format::Table => vec![
                ("runs.csv", experiment::runs_csv(&batch.rows)),
                (
                    "summary.csv",
                    experiment::summary_csv(&experiment::summarize(&batch.rows)),
                ),
            ],
            Format::Records => vec![("records.toml", experiment::records_toml(&batch.records))],
        };
        emit_files(self.out.as_deref(), &files)
    }
}

fn emit_files(out: Option<&Path>, files: &[(&str, String)]) -> Result<()> {
    match out {
        Some(dir) => {
            for (name, text) in files {
                let path = dir.join(name);
                experiment::write_file(&path, text)?;
                eprintln!("wrote {}", path.display());
            }
        }
        None => {
            for (i, (_, text)) in files.iter().enumerate() {
                if i > 0 {
                    println!();
                }
                print!("{text}");
            }
        }
    }
    Ok(())
}

fn main() -> Result<()> {
    match Cli::parse().command {
        Command::Run { common, drop } => {
            let cfg = common.config()?;
            let batch = experiment::run_drop(&cfg, drop)?;
            common.emit(&batch)
        }
        Command::Sweep {
            common,
            axis,
            values,
            drops,
        } => {
            let mut cfg = common.config()?;
            if let Some(d) = drops {
                cfg.drops = d;
            }
            let batch = experiment::sweep(&cfg, axis, &values)?;
            common.emit(&batch)
        }
        Command::Oracle { seed, count, out } => {
            let checks = experiment::oracle_checks(seed, count)?;
            emit_files(
                out.as_deref(),
                &[("oracle.csv", experiment::oracle_csv(&checks))],
            )
        }
        Command::Config { config, seed } => {
            let mut cfg = load_config(config.as_deref())?;
            if let Some(seed) = seed {
                cfg.seed = seed;
            }
            print!("{}", cfg.to_toml_string());
            Ok(())
        }
        Command::Audit { config, design } => {
            let cfg = load_config(config.as_deref())?;
            let text = std::fs::read_to_string(&design)
                .with_context(|| format!("reading {}", design.display()))?;
            let records = experiment::parse_records(&text)
                .with_context(|| format!("parsing {}", design.display()))?;
            let mut failures = 0;
            println!("axis,value,drop,algorithm,status,worst_violation,feasible");
            for rec in &records {
                let value = rec.value.map_or_else(String::new, |v| v.to_string());
                let head = format!(
                    "{},{value},{},{}",
                    rec.axis,
                    rec.drop,
                    rec.algorithm.token()
                );
                match experiment::audit_record(&cfg, rec) {
                    Ok(a) => {
                        let ok = a.is_feasible(AUDIT_TOL);
                        failures += usize::from(!ok);
                        println!("{head},{},{:.3e},{ok}", rec.status, a.worst());
                    }
                    // Failed runs carry no design; their rows stay blank.
                    Err(e) => {
                        println!("{head},{},,", rec.status);
                        eprintln!("drop {} {}: {e}", rec.drop, rec.algorithm.token());
                    }
                }
            }
            if failures > 0 {
                bail!("{failures} of {} designs failed the audit", records.len());
            }
            Ok(())
        }
    }
}
