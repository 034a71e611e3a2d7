use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::time::Instant;

use anyhow::{bail, Context, Result};
use clap::{Parser, Subcommand, ValueEnum};
use serde::{Deserialize, Serialize};

use noisetab::harness::{run_experiment, CellSummary, ExperimentConfig, Mode};
use noisetab::models::{evaluate_all, NoisyFunctionSpec, SeededRng};
use noisetab::select::{solve_selection, SelectionProblem, SelectionSolution, OBJECTIVE_NORMALIZATION};
use noisetab::{estimate_noise, HeuristicOptions, PointSet};

#[derive(Parser)]
#[command(name = "noisetab", version, about = "Noise-level estimation from differencing tables")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Estimate the noise level of a sequence of function values.
    ///
    /// FILE holds one value per line (blank lines and `#` comments are
    /// skipped), or a JSON object `{"points": [[..], ..], "function": {..},
    /// "seed": N}` whose points are evaluated before estimating.
    Estimate {
        file: PathBuf,
        #[arg(long, default_value_t = 0.1)]
        spread_factor: f64,
        #[arg(long, default_value_t = 4.0)]
        agreement_factor: f64,
    },
    /// Solve a point-selection problem given as JSON.
    Select {
        file: PathBuf,
        /// Wall-clock limit in seconds; overrides the problem's own limit.
        #[arg(long)]
        time_limit: Option<f64>,
        #[arg(long)]
        max_nodes: Option<u64>,
    },
    /// Run a Monte-Carlo experiment and write trials.csv, summary.json and config.json.
    Experiment {
        /// JSON experiment configuration; a preset is used when omitted.
        config: Option<PathBuf>,
        #[arg(long, value_enum)]
        preset: Option<Preset>,
        #[arg(long)]
        seed: Option<u64>,
        #[arg(long)]
        trials: Option<usize>,
        /// Worker threads; defaults to all cores.
        #[arg(long)]
        threads: Option<usize>,
        /// Output directory; created when missing.
        #[arg(long)]
        out: Option<PathBuf>,
    },
}

#[derive(Clone, Copy, ValueEnum)]
enum Preset {
    Geometry,
    Grid,
    Reuse,
}

#[derive(Deserialize)]
struct PointsInput {
    points: Vec<Vec<f64>>,
    function: NoisyFunctionSpec,
    #[serde(default)]
    seed: u64,
}

#[derive(Serialize)]
struct SelectOutput<'a> {
    #[serde(flatten)]
    solution: &'a SelectionSolution,
    objective_normalization: &'static str,
    wall_time_secs: f64,
}

fn read_values(path: &Path) -> Result<Vec<f64>> {
    let text = fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
    if text.trim_start().starts_with('{') {
        let input: PointsInput = serde_json::from_str(&text).context("parsing points JSON")?;
        input.function.validate()?;
        let points = PointSet::new(input.points)?;
        let mut rng = SeededRng::new(input.seed, 0);
        return Ok(evaluate_all(&input.function, points.points(), &mut rng)?);
    }
    let mut values = Vec::new();
    for (lineno, line) in text.lines().enumerate() {
        let line = line.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        let v: f64 = line
            .parse()
            .with_context(|| format!("line {}: not a number: {line:?}", lineno + 1))?;
        values.push(v);
    }
    Ok(values)
}

fn cmd_estimate(file: &Path, options: HeuristicOptions) -> Result<ExitCode> {
    let values = read_values(file)?;
    let est = estimate_noise(&values, &options)?;
    println!("{}", serde_json::to_string_pretty(&est)?);
    Ok(if est.is_ok() { ExitCode::SUCCESS } else { ExitCode::from(2) })
}

fn cmd_select(file: &Path, time_limit: Option<f64>, max_nodes: Option<u64>) -> Result<ExitCode> {
    let text = fs::read_to_string(file).with_context(|| format!("reading {}", file.display()))?;
    let mut problem: SelectionProblem = serde_json::from_str(&text).context("parsing problem JSON")?;
    if time_limit.is_some() {
        problem.limits.time_limit_secs = time_limit;
    }
    if let Some(n) = max_nodes {
        problem.limits.max_nodes = n;
    }
    let start = Instant::now();
    let solution = solve_selection(&problem)?;
    let out = SelectOutput {
        solution: &solution,
        objective_normalization: OBJECTIVE_NORMALIZATION,
        wall_time_secs: start.elapsed().as_secs_f64(),
    };
    println!("{}", serde_json::to_string_pretty(&out)?);
    Ok(ExitCode::SUCCESS)
}

fn print_cell(cell: &CellSummary) {
    let ks = cell
        .ks_standard_vs_arbitrary
        .map_or_else(|| "-".to_string(), |k| format!("{:.4}", k.p_value));
    println!("n={} h={:e} points={} ks_p={ks}", cell.n, cell.h, cell.points);
    for m in &cell.modes {
        let label = match (m.mode, m.reuse) {
            (Mode::Selected, Some(r)) => format!("selected R={r}"),
            (mode, _) => mode.as_str().to_string(),
        };
        print!(
            "  {label:<14} success={:.4} declined={:.4} evals/trial={:.2}",
            m.success_fraction, m.declined_fraction, m.evaluations_per_trial
        );
        if let Some(f) = m.optimal_fraction {
            print!(" optimal={f:.4}");
        }
        if m.error_count > 0 {
            print!(" errors={}", m.error_count);
        }
        println!();
    }
}

fn cmd_experiment(
    config: Option<&Path>,
    preset: Option<Preset>,
    seed: Option<u64>,
    trials: Option<usize>,
    threads: Option<usize>,
    out: Option<PathBuf>,
) -> Result<ExitCode> {
    let mut cfg = match (config, preset) {
        (Some(_), Some(_)) => bail!("give either a config file or --preset, not both"),
        (Some(path), None) => {
            let text = fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
            serde_json::from_str::<ExperimentConfig>(&text).context("parsing experiment config")?
        }
        (None, Some(p)) => match p {
            Preset::Geometry => ExperimentConfig::geometry_preset(),
            Preset::Grid => ExperimentConfig::grid_preset(),
            Preset::Reuse => ExperimentConfig::reuse_preset(),
        },
        (None, None) => bail!("need a config file or --preset"),
    };
    if let Some(s) = seed {
        cfg.seed = s;
    }
    if let Some(t) = trials {
        cfg.trials = t;
    }
    if let Some(dir) = out {
        cfg.output = Some(dir.to_string_lossy().into_owned());
    }
    let dir = PathBuf::from(cfg.output.clone().unwrap_or_else(|| "noisetab-out".to_string()));
    cfg.validate()?;
    let run = run_experiment(&cfg, threads)?;
    run.write(&dir)
        .with_context(|| format!("writing results to {}", dir.display()))?;
    for cell in &run.summary.cells {
        print_cell(cell);
    }
    println!("wrote {}", dir.display());
    Ok(ExitCode::SUCCESS)
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let cli = Cli::parse();
    let result = match cli.command {
        Command::Estimate {
            file,
            spread_factor,
            agreement_factor,
        } => cmd_estimate(
            &file,
            HeuristicOptions {
                spread_factor,
                agreement_factor,
            },
        ),
        Command::Select {
            file,
            time_limit,
            max_nodes,
        } => cmd_select(&file, time_limit, max_nodes),
        Command::Experiment {
            config,
            preset,
            seed,
            trials,
            threads,
            out,
        } => cmd_experiment(config.as_deref(), preset, seed, trials, threads, out),
    };
    match result {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(1)
        }
    }
}
