use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::time::{SystemTime, UNIX_EPOCH};

use clap::{Args, Parser, Subcommand};
use mklsgd::experiments::{
    atomic_write, classification_benchmark, classification_to_csv, landscape, load_config,
    run_sweep, runs_to_csv, scan_to_csv, summaries_to_csv, summarize, theory_check, to_json,
    ClassificationConfig, LandscapeConfig, SweepConfig, TheoryConfig,
};
use mklsgd::{rank_probabilities, Replacement, SelectionScheme};

mod fractions;

#[derive(Parser)]
#[command(name = "mklsgd", version, about = "Min-k-loss SGD experiments")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Args)]
struct Common {
    /// TOML config file.
    #[arg(long)]
    config: PathBuf,
    /// Output file; stdout when absent.
    #[arg(long)]
    out: Option<PathBuf>,
    /// Replaces the seeds of the config with this one.
    #[arg(long)]
    seed: Option<u64>,
}

#[derive(Subcommand)]
enum Command {
    /// Run an optimizer grid and write one CSV row per run.
    Sweep {
        #[command(flatten)]
        common: Common,
        /// Also write per-cell statistics here.
        #[arg(long)]
        summary: Option<PathBuf>,
    },
    /// Scan the expected-update landscape along a segment.
    Landscape {
        #[command(flatten)]
        common: Common,
        /// Also write stationary points and condition checks as JSON.
        #[arg(long)]
        report: Option<PathBuf>,
    },
    /// Evaluate the distance bounds on one instance and write JSON.
    TheoryCheck {
        #[command(flatten)]
        common: Common,
    },
    /// Run the label-noise classification benchmark.
    Classify {
        #[command(flatten)]
        common: Common,
        /// Also write per-cell accuracy statistics as JSON.
        #[arg(long)]
        summary: Option<PathBuf>,
    },
    /// Print the pick probability of every loss rank.
    Probabilities {
        #[arg(long)]
        n: usize,
        #[arg(long)]
        k: usize,
        #[arg(long, conflicts_with = "without_replacement")]
        with_replacement: bool,
        #[arg(long)]
        without_replacement: bool,
    },
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() {
                ExitCode::from(1)
            } else {
                ExitCode::SUCCESS
            };
        }
    };
    match execute(cli.command) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(if e.is_numerical() { 2 } else { 1 })
        }
    }
}

fn base_dir(config: &Path) -> Option<&Path> {
    config.parent().filter(|p| !p.as_os_str().is_empty())
}

fn emit(path: Option<&Path>, bytes: &[u8]) -> mklsgd::Result<()> {
    match path {
        Some(p) => atomic_write(p, bytes),
        None => {
            use std::io::Write;
            std::io::stdout().write_all(bytes)?;
            Ok(())
        }
    }
}

fn execute(command: Command) -> mklsgd::Result<()> {
    match command {
        Command::Sweep { common, summary } => {
            let mut cfg: SweepConfig = load_config(&common.config)?;
            if let Some(s) = common.seed {
                cfg.run.seeds = vec![s];
            }
            let records = run_sweep(&cfg)?;
            let now = SystemTime::now()
                .duration_since(UNIX_EPOCH)
                .map(|d| d.as_secs())
                .ok();
            let csv = runs_to_csv(&records, now)?;
            let cells = summaries_to_csv(&summarize(&records))?;
            let out = common.out.or(cfg.run.out);
            emit(out.as_deref(), &csv)?;
            if let Some(p) = summary {
                atomic_write(&p, &cells)?;
            }
            Ok(())
        }
        Command::Landscape { common, report } => {
            let mut cfg: LandscapeConfig = load_config(&common.config)?;
            if let Some(s) = common.seed {
                cfg.problem.set_seed(s);
            }
            let r = landscape(&cfg, base_dir(&common.config))?;
            let csv = scan_to_csv(&r.rows)?;
            let json = to_json(&r)?;
            emit(common.out.as_deref(), &csv)?;
            if let Some(p) = report {
                atomic_write(&p, &json)?;
            }
            Ok(())
        }
        Command::TheoryCheck { common } => {
            let mut cfg: TheoryConfig = load_config(&common.config)?;
            if let Some(s) = common.seed {
                cfg.problem.set_seed(s);
                cfg.check.seed = s;
            }
            let r = theory_check(&cfg, base_dir(&common.config))?;
            emit(common.out.as_deref(), &to_json(&r)?)
        }
        Command::Classify { common, summary } => {
            let mut cfg: ClassificationConfig = load_config(&common.config)?;
            if let Some(s) = common.seed {
                cfg.run.seeds = vec![s];
            }
            let table = classification_benchmark(&cfg)?;
            let csv = classification_to_csv(&table)?;
            let json = to_json(&table.summary)?;
            let out = common.out.or(cfg.run.out);
            emit(out.as_deref(), &csv)?;
            if let Some(p) = summary {
                atomic_write(&p, &json)?;
            }
            Ok(())
        }
        Command::Probabilities {
            n,
            k,
            without_replacement,
            ..
        } => {
            let replacement = if without_replacement {
                Replacement::Without
            } else {
                Replacement::With
            };
            let scheme = SelectionScheme::min_k(k).with_replacement(replacement);
            let probs = rank_probabilities(n, &scheme)?;
            let exact = fractions::rank_fractions(n, k, replacement);
            let mut text = String::from("rank,fraction,probability\n");
            for (r, p) in probs.probs().iter().enumerate() {
                let frac = exact
                    .as_ref()
                    .map_or_else(|| "-".to_string(), |f| format!("{}/{}", f.0[r], f.1));
                text.push_str(&format!("{},{frac},{p}\n", r + 1));
            }
            emit(None, text.as_bytes())
        }
    }
}
