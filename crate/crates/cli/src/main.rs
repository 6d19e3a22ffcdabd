use std::path::PathBuf;

use anyhow::{bail, Context, Result};
use clap::{Parser, Subcommand};
use randisc::experiments::{run_experiment, summarize_paths, ExperimentConfig};
use randisc::lattice::Norm;
use randisc::matrix::read_csv_matrix;
use randisc::solvers::{disc_exact, disc_meet_middle, local_search, MAX_EXACT_COLUMNS, MAX_MEET_MIDDLE_COLUMNS};

#[derive(Parser)]
#[command(name = "randisc", version, about = "Seeded discrepancy experiments")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run the experiment described by a JSON config.
    Run {
        config: PathBuf,
        #[arg(long)]
        seed: Option<u64>,
        #[arg(long)]
        trials: Option<usize>,
        /// Output directory; the report goes to stdout when neither this nor the config sets one.
        #[arg(long)]
        out: Option<PathBuf>,
        #[arg(long)]
        workers: Option<usize>,
        /// Fraction of tsparse-disc trials cross-checked by DP.
        #[arg(long, value_name = "FRACTION")]
        subsample_check: Option<f64>,
    },
    /// Pool reports of one kind into a CSV keyed by (m, t, n).
    Summarize {
        #[arg(required = true)]
        reports: Vec<PathBuf>,
        /// Output CSV; stdout by default.
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Discrepancy of a CSV matrix (one row per line).
    Disc {
        matrix: PathBuf,
        #[arg(long, default_value = "sup")]
        norm: String,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        /// Restarts when the matrix is too wide for exact search.
        #[arg(long, default_value_t = 64)]
        restarts: usize,
    },
}

fn main() -> Result<()> {
    match Cli::parse().command {
        Command::Run { config, seed, trials, out, workers, subsample_check } => {
            let mut cfg = ExperimentConfig::from_path(&config).with_context(|| format!("reading {}", config.display()))?;
            if let Some(s) = seed {
                cfg.seed = s;
            }
            if let Some(t) = trials {
                cfg.trials = t;
            }
            if let Some(o) = out {
                cfg.output = Some(o);
            }
            if workers.is_some() {
                cfg.workers = workers;
            }
            if let Some(f) = subsample_check {
                cfg.subsample_check = f;
            }
            cfg.validate()?;
            let report = run_experiment(&cfg)?;
            match &cfg.output {
                Some(dir) => {
                    report.write_to(dir)?;
                    for v in &report.verdicts {
                        eprintln!("{} {}: {}", if v.pass { "PASS" } else { "FAIL" }, v.name, v.detail);
                    }
                    eprintln!("wrote {} ({:.2}s)", dir.display(), report.wall_time_secs);
                }
                None => print!("{}", report.to_json()?),
            }
        }
        Command::Summarize { reports, out } => {
            let summary = summarize_paths(&reports)?;
            match out {
                Some(p) => summary.write_csv(std::fs::File::create(&p)?)?,
                None => summary.write_csv(std::io::stdout().lock())?,
            }
        }
        Command::Disc { matrix, norm, seed, restarts } => {
            let norm = match norm.as_str() {
                "sup" => Norm::Sup,
                "euclidean" => Norm::Euclidean,
                other => bail!("unknown norm {other:?}; use sup or euclidean"),
            };
            let m = read_csv_matrix(std::fs::File::open(&matrix)?)?;
            let result = if m.cols() <= MAX_EXACT_COLUMNS {
                disc_exact(&m, norm)?
            } else if let (Some(im), true, Norm::Sup) = (m.to_integer(), m.cols() <= MAX_MEET_MIDDLE_COLUMNS, norm) {
                disc_meet_middle(&im, norm)?
            } else {
                let mut rng = randisc::experiments::substream(seed, 0);
                local_search(&m, norm, restarts, &mut rng)
            };
            println!("{}", serde_json::to_string_pretty(&result)?);
        }
    }
    Ok(())
}
