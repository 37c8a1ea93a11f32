//! `mgbench`: a deterministic benchmark harness for diffusion posterior
//! samplers.
//!
//! Five experiments are exposed as subcommands, all configured by a JSON
//! file and writing CSV:
//!
//! - `gm-bench`: sliced-Wasserstein benchmark of each method against the
//!   exact posterior on the tiled Gaussian-mixture protocol,
//! - `ablate-eta`: the same protocol sweeping the midpoint fraction η,
//! - `ablate-gradsteps`: the same protocol sweeping a constant number of
//!   gradient steps at the fixed plan `ℓ_k = ⌊3k/4⌋`,
//! - `gauss-w2`: the closed-form W2-versus-η landscape on random Gaussian
//!   instances (no sampling),
//! - `sample`: run one method on a user-described problem and dump its
//!   posterior samples.
//!
//! Every output byte is determined by the config and master seed,
//! regardless of worker count.

use std::fmt::Write as _;
use std::path::{Path, PathBuf};

use clap::Parser;

pub mod config;
pub mod csv;
pub mod error;
pub mod experiments;
pub mod plot;
pub mod problems;

pub use config::{load_config, BenchmarkConfig, Experiment, Method, PlanSpec};
pub use csv::{sort_rows, write_rows, ResultRow, CSV_HEADER};
pub use error::{CliError, Result};
pub use experiments::{run_experiment, run_single, RunOutput, SampleOutput};

/// Command-line interface.
#[derive(Debug, Parser)]
#[command(
    name = "mgbench",
    about = "Benchmark harness for diffusion posterior samplers",
    disable_help_subcommand = true
)]
pub struct Cli {
    /// Experiment: gm-bench | gauss-w2 | ablate-eta | ablate-gradsteps | sample
    pub experiment: String,
    /// Path to the JSON run configuration.
    #[arg(long)]
    pub config: PathBuf,
    /// Path of the CSV to write.
    #[arg(long)]
    pub out: PathBuf,
    /// Master seed (overrides the config).
    #[arg(long)]
    pub seed: Option<u64>,
    /// Worker thread count (overrides the config).
    #[arg(long)]
    pub workers: Option<usize>,
    /// Quick preset: 30 replicates, 500 samples, 2000 slices.
    #[arg(long)]
    pub quick: bool,
    /// Problem JSON (required by the sample experiment).
    #[arg(long)]
    pub problem: Option<PathBuf>,
    /// Also render a simple SVG next to the CSV.
    #[arg(long)]
    pub plot: bool,
}

fn read_file(path: &Path) -> Result<String> {
    std::fs::read_to_string(path)
        .map_err(|e| CliError::Io(format!("cannot read {}: {e}", path.display())))
}

fn mean_of(rows: &[ResultRow], pred: impl Fn(&ResultRow) -> bool) -> Option<f64> {
    let vals: Vec<f64> = rows.iter().filter(|r| pred(r)).map(|r| r.metric).collect();
    if vals.is_empty() {
        None
    } else {
        Some(vals.iter().sum::<f64>() / vals.len() as f64)
    }
}

/// Reduce result rows to the (x, y) points of the experiment's natural
/// curve.
fn curve_points(cfg: &BenchmarkConfig, rows: &[ResultRow]) -> Vec<(f64, f64)> {
    match cfg.experiment {
        Experiment::AblateEta | Experiment::GaussW2 => {
            let mut etas = cfg.etas.clone();
            etas.sort_by(|a, b| a.partial_cmp(b).unwrap());
            etas.iter()
                .filter_map(|&eta| mean_of(rows, |r| r.eta == eta).map(|m| (eta, m)))
                .collect()
        }
        Experiment::AblateGradsteps => {
            let mut ms = cfg.grad_step_multipliers.clone();
            ms.sort_unstable();
            ms.iter()
                .filter_map(|&m| {
                    let label = format!("mgps-m{m}");
                    mean_of(rows, |r| r.method == label).map(|v| (m as f64, v))
                })
                .collect()
        }
        Experiment::GmBench => {
            let mut labels: Vec<String> = rows.iter().map(|r| r.method.clone()).collect();
            labels.sort();
            labels.dedup();
            labels
                .iter()
                .enumerate()
                .filter_map(|(i, l)| mean_of(rows, |r| &r.method == l).map(|m| (i as f64, m)))
                .collect()
        }
        Experiment::Sample => Vec::new(),
    }
}

fn plot_path(out: &Path) -> PathBuf {
    let mut p = out.to_path_buf();
    p.set_extension("svg");
    p
}

fn write_if(path: &Path, text: &str) -> Result<()> {
    std::fs::write(path, text)
        .map_err(|e| CliError::Io(format!("cannot write {}: {e}", path.display())))?;
    Ok(())
}

fn run_sample_experiment(cli: &Cli, cfg: &BenchmarkConfig) -> Result<()> {
    let problem_path = cli.problem.as_ref().ok_or_else(|| {
        CliError::Config("the sample experiment needs --problem <json>".to_string())
    })?;
    let problem_text = read_file(problem_path)?;
    let out = experiments::run_single(cfg, &problem_text)?;

    let mut text = String::from("sample");
    for i in 0..out.dim {
        let _ = write!(text, ",dim_{i}");
    }
    text.push('\n');
    for (i, s) in out.samples.iter().enumerate() {
        let _ = write!(text, "{i}");
        for v in s.iter() {
            let _ = write!(text, ",{v}");
        }
        text.push('\n');
    }
    write_if(&cli.out, &text)?;
    println!("diverged: {}/{}", out.diverged, cfg.samples);
    if out.diverged == cfg.samples {
        println!("note: every chain diverged; benchmark metrics would be capped at 10");
    }

    if cli.plot {
        let points: Vec<(f64, f64)> = out
            .samples
            .iter()
            .enumerate()
            .map(|(i, s)| {
                if out.dim >= 2 {
                    (s[0], s[1])
                } else {
                    (i as f64, s[0])
                }
            })
            .collect();
        let (xl, yl) = if out.dim >= 2 {
            ("dim_0", "dim_1")
        } else {
            ("sample", "dim_0")
        };
        let svg = plot::render_scatter("posterior samples", xl, yl, &points);
        write_if(&plot_path(&cli.out), &svg)?;
    }
    Ok(())
}

/// Execute the parsed command line: load config, run the experiment, write
/// outputs, print the summary.
pub fn run(cli: &Cli) -> Result<()> {
    let experiment = Experiment::parse(&cli.experiment)?;
    let cfg_text = read_file(&cli.config)?;
    let cfg = load_config(&cfg_text, experiment, cli.quick, cli.seed, cli.workers)?;

    if experiment == Experiment::Sample {
        return run_sample_experiment(cli, &cfg);
    }

    let mut out = experiments::run_experiment(&cfg)?;
    write_rows(&cli.out, &mut out.rows)?;
    print!("{}", out.summary);

    if cli.plot {
        let points = curve_points(&cfg, &out.rows);
        let (xl, yl) = match experiment {
            Experiment::AblateEta => ("eta", "mean SW"),
            Experiment::GaussW2 => ("eta", "mean W2"),
            Experiment::AblateGradsteps => ("gradient steps", "mean SW"),
            _ => ("method index", "mean SW"),
        };
        let svg = plot::render_curve(experiment.name(), xl, yl, &points);
        write_if(&plot_path(&cli.out), &svg)?;
    }
    Ok(())
}
