//! Seeded Monte-Carlo experiments comparing noise estimates from standard
//! (collinear, equally spaced) point sets, arbitrary point sets, and point
//! sets chosen by [`solve_selection`].
//!
//! Every trial draws from its own [`SeededRng`] stream, derived from the
//! trial index and the cell parameters `(n, h, point count)`. Results are
//! therefore independent of thread count and of the order in which cells
//! are listed.

use std::fs;
use std::io::Write;
use std::path::Path;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::diff_engine::{estimate_noise, EstimateStatus, HeuristicOptions};
use crate::error::{Error, Result};
use crate::models::{
    arbitrary_points, box_point, evaluate, evaluate_all, random_base_and_direction, standard_points,
    GroundTruth, NoiseModel, NoisyFunctionSpec, SeededRng,
};
use crate::select::{selected_points, solve_selection, SearchLimits, SelectionProblem, SlotAssignment};
use crate::stats::{histogram, ks_two_sample, HistogramBin, KsResult};

pub const TOOL_VERSION: &str = env!("CARGO_PKG_VERSION");

/// An estimate within this factor of the true noise level counts as a success.
pub const SUCCESS_FACTOR: f64 = 4.0;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ExperimentKind {
    Geometry,
    Grid,
    Reuse,
}

fn default_base_box() -> f64 {
    10.0
}

fn default_max_nodes() -> u64 {
    SearchLimits::default().max_nodes
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExperimentConfig {
    pub kind: ExperimentKind,
    /// Function family; its `dim` is replaced by each entry of `dims`.
    pub function: NoisyFunctionSpec,
    pub dims: Vec<usize>,
    pub hs: Vec<f64>,
    /// Point counts for geometry/grid; slot counts (points after `y0`) for reuse.
    pub ms: Vec<usize>,
    pub trials: usize,
    /// Pool size `M` (reuse only).
    #[serde(default)]
    pub pool_size: Option<usize>,
    /// Reuse budgets to try (reuse only); empty means `m, m-1, .., 1`.
    #[serde(default)]
    pub reuse: Vec<usize>,
    pub seed: u64,
    /// Base points are drawn from `[-base_box, base_box]^n`.
    #[serde(default = "default_base_box")]
    pub base_box: f64,
    #[serde(default)]
    pub heuristics: HeuristicOptions,
    /// Node budget per selection solve. No wall-clock limit is applied in
    /// experiments so that runs stay reproducible.
    #[serde(default = "default_max_nodes")]
    pub solver_max_nodes: u64,
    #[serde(default)]
    pub output: Option<String>,
}

impl ExperimentConfig {
    /// Quadratic with multiplicative noise, `n = 10`, `h = 1e-6`, `m in {6, 12, 24}`.
    pub fn geometry_preset() -> Self {
        ExperimentConfig {
            kind: ExperimentKind::Geometry,
            function: NoisyFunctionSpec {
                ground_truth: GroundTruth::Quadratic,
                noise: NoiseModel::Multiplicative { sigma: 1e-3 },
                dim: 10,
            },
            dims: vec![10],
            hs: vec![1e-6],
            ms: vec![6, 12, 24],
            trials: 10_000,
            pool_size: None,
            reuse: Vec::new(),
            seed: 0,
            base_box: default_base_box(),
            heuristics: HeuristicOptions::default(),
            solver_max_nodes: default_max_nodes(),
            output: None,
        }
    }

    /// `(sum x)^6` with additive noise over an `(h, n)` grid.
    pub fn grid_preset() -> Self {
        ExperimentConfig {
            kind: ExperimentKind::Grid,
            function: NoisyFunctionSpec {
                ground_truth: GroundTruth::PowerSum { degree: 6 },
                noise: NoiseModel::Additive { sigma: 1e-3 },
                dim: 2,
            },
            dims: vec![2, 6, 10],
            hs: vec![1e-2, 1e-4, 1e-6, 1e-8],
            ms: vec![6],
            ..Self::geometry_preset()
        }
    }

    /// Pool of 50 points at `n = 6`, `h = 1e-6`, every reuse budget.
    pub fn reuse_preset() -> Self {
        ExperimentConfig {
            kind: ExperimentKind::Reuse,
            dims: vec![6],
            hs: vec![1e-6],
            ms: vec![6],
            trials: 1_000,
            pool_size: Some(50),
            ..Self::grid_preset()
        }
    }

    pub fn preset(name: &str) -> Option<Self> {
        match name {
            "geometry" => Some(Self::geometry_preset()),
            "grid" => Some(Self::grid_preset()),
            "reuse" => Some(Self::reuse_preset()),
            _ => None,
        }
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |msg: String| Err(Error::Config(msg));
        if self.dims.is_empty() || self.hs.is_empty() || self.ms.is_empty() {
            return bad("dims, hs and ms must be nonempty".into());
        }
        if self.trials == 0 {
            return bad("trials must be at least 1".into());
        }
        if self.trials > u32::MAX as usize {
            return bad("too many trials".into());
        }
        self.function
            .validate()
            .map_err(|e| Error::Config(e.to_string()))?;
        if self.dims.contains(&0) {
            return bad("dimensions must be positive".into());
        }
        if self.hs.iter().any(|&h| !(h > 0.0 && h.is_finite())) {
            return bad("every h must be positive and finite".into());
        }
        if !(self.base_box > 0.0 && self.base_box.is_finite()) {
            return bad("base_box must be positive".into());
        }
        match self.kind {
            ExperimentKind::Geometry | ExperimentKind::Grid => {
                if let Some(&m) = self.ms.iter().find(|&&m| m < 4) {
                    return bad(format!("m = {m}: the estimator needs at least 4 points"));
                }
            }
            ExperimentKind::Reuse => {
                let pool = self
                    .pool_size
                    .ok_or_else(|| Error::Config("reuse experiments need pool_size".into()))?;
                for &m in &self.ms {
                    if m + 1 < 4 {
                        return bad(format!("m = {m}: the estimator needs at least 4 points"));
                    }
                    if pool < m {
                        return bad(format!("pool_size {pool} is smaller than m = {m}"));
                    }
                }
                if self.reuse.contains(&0) {
                    return bad("reuse budgets must be at least 1".into());
                }
            }
        }
        Ok(())
    }

    /// Reuse budgets used for a given `m`, largest first.
    pub fn reuse_budgets(&self, m: usize) -> Vec<usize> {
        let mut rs: Vec<usize> = if self.reuse.is_empty() {
            (1..=m).collect()
        } else {
            self.reuse.iter().copied().filter(|&r| r <= m).collect()
        };
        rs.sort_unstable_by(|a, b| b.cmp(a));
        rs.dedup();
        rs
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Mode {
    Standard,
    Arbitrary,
    Selected,
}

impl Mode {
    pub fn as_str(&self) -> &'static str {
        match self {
            Mode::Standard => "standard",
            Mode::Arbitrary => "arbitrary",
            Mode::Selected => "selected",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrialRecord {
    pub trial: usize,
    pub mode: Mode,
    pub n: usize,
    pub h: f64,
    /// Number of points handed to the estimator.
    pub points: usize,
    /// Estimate, zero when declined or failed.
    pub estimate: f64,
    /// `estimate / f(y0)` with the noisy base value; absent when `f(y0) = 0`.
    pub relative_estimate: Option<f64>,
    /// True noise standard deviation at `y0`.
    pub noise_level: f64,
    /// `None` when the trial failed before estimation.
    pub status: Option<EstimateStatus>,
    pub reuse: Option<usize>,
    pub optimal: Option<bool>,
    /// Fresh function evaluations this mode spent.
    pub evaluations: usize,
    pub error: Option<String>,
}

impl TrialRecord {
    pub fn success(&self) -> bool {
        within_factor(self.estimate, self.noise_level, SUCCESS_FACTOR)
    }
}

/// `target / factor <= estimate <= factor * target`, with `estimate > 0`.
pub fn within_factor(estimate: f64, target: f64, factor: f64) -> bool {
    estimate > 0.0 && estimate >= target / factor && estimate <= target * factor
}

fn splitmix(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// RNG stream for one trial of the cell `(n, h, point_count)`.
pub fn trial_stream(n: usize, h: f64, point_count: usize, trial: usize) -> u64 {
    let cell = splitmix(splitmix(splitmix(n as u64) ^ h.to_bits()) ^ point_count as u64);
    (cell << 32) ^ trial as u64
}

fn estimate_record(
    trial: usize,
    mode: Mode,
    n: usize,
    h: f64,
    values: &[f64],
    noise_level: f64,
    evaluations: usize,
    options: &HeuristicOptions,
) -> TrialRecord {
    let mut rec = TrialRecord {
        trial,
        mode,
        n,
        h,
        points: values.len(),
        estimate: 0.0,
        relative_estimate: None,
        noise_level,
        status: None,
        reuse: None,
        optimal: None,
        evaluations,
        error: None,
    };
    match estimate_noise(values, options) {
        Ok(est) => {
            rec.estimate = est.value;
            rec.status = Some(est.status);
            if values[0] != 0.0 {
                rec.relative_estimate = Some(est.value / values[0]);
            }
        }
        Err(e) => rec.error = Some(e.to_string()),
    }
    rec
}

fn failed_record(trial: usize, mode: Mode, n: usize, h: f64, points: usize, noise_level: f64, err: &Error) -> TrialRecord {
    TrialRecord {
        trial,
        mode,
        n,
        h,
        points,
        estimate: 0.0,
        relative_estimate: None,
        noise_level,
        status: None,
        reuse: None,
        optimal: None,
        evaluations: 0,
        error: Some(err.to_string()),
    }
}

/// Draws shared by every experiment kind for one trial.
struct BaselineDraw {
    rng: SeededRng,
    y0: Vec<f64>,
    arbitrary: Vec<Vec<f64>>,
    arbitrary_values: Vec<f64>,
    records: [TrialRecord; 2],
}

fn baseline_trial(config: &ExperimentConfig, spec: &NoisyFunctionSpec, h: f64, count: usize, trial: usize) -> Result<BaselineDraw> {
    let n = spec.dim;
    let mut rng = SeededRng::new(config.seed, trial_stream(n, h, count, trial));
    let (y0, d) = random_base_and_direction(n, config.base_box, &mut rng)?;
    let noise_level = spec.noise_level_at(&y0);

    let std_pts = standard_points(&y0, &d, h, count)?;
    let std_vals = evaluate_all(spec, std_pts.points(), &mut rng)?;
    let arb_pts = arbitrary_points(&y0, h, count, &mut rng)?;
    let arb_vals = evaluate_all(spec, arb_pts.points(), &mut rng)?;

    let opts = &config.heuristics;
    let standard = estimate_record(trial, Mode::Standard, n, h, &std_vals, noise_level, count, opts);
    let arbitrary = estimate_record(trial, Mode::Arbitrary, n, h, &arb_vals, noise_level, count, opts);
    Ok(BaselineDraw {
        rng,
        y0,
        arbitrary: arb_pts.points().to_vec(),
        arbitrary_values: arb_vals,
        records: [standard, arbitrary],
    })
}

fn baseline_records(config: &ExperimentConfig, spec: &NoisyFunctionSpec, h: f64, count: usize, trial: usize) -> Vec<TrialRecord> {
    match baseline_trial(config, spec, h, count, trial) {
        Ok(draw) => draw.records.to_vec(),
        Err(e) => vec![
            failed_record(trial, Mode::Standard, spec.dim, h, count, 0.0, &e),
            failed_record(trial, Mode::Arbitrary, spec.dim, h, count, 0.0, &e),
        ],
    }
}

fn reuse_records(config: &ExperimentConfig, spec: &NoisyFunctionSpec, h: f64, m: usize, trial: usize) -> Vec<TrialRecord> {
    let count = m + 1;
    let n = spec.dim;
    let mut draw = match baseline_trial(config, spec, h, count, trial) {
        Ok(d) => d,
        Err(_) => return baseline_records(config, spec, h, count, trial),
    };
    let mut out = draw.records.to_vec();
    let noise_level = draw.records[0].noise_level;
    let pool_size = config.pool_size.unwrap_or(m);

    // the arbitrary baseline's points open the pool; the rest are new draws
    let mut pool: Vec<Vec<f64>> = draw.arbitrary[1..].to_vec();
    let mut pool_values: Vec<f64> = draw.arbitrary_values[1..].to_vec();
    while pool.len() < pool_size {
        let p = box_point(&draw.y0, h, &mut draw.rng);
        let v = match evaluate(spec, &p, &mut draw.rng) {
            Ok(v) => v,
            Err(e) => {
                out.push(failed_record(trial, Mode::Selected, n, h, count, noise_level, &e));
                return out;
            }
        };
        pool.push(p);
        pool_values.push(v);
    }
    let base_value = draw.arbitrary_values[0];

    for r in config.reuse_budgets(m) {
        let mut problem = SelectionProblem::with_free_points(draw.y0.clone(), pool.clone(), m, r, h);
        problem.limits = SearchLimits {
            max_nodes: config.solver_max_nodes,
            time_limit_secs: None,
        };
        let solved = solve_selection(&problem).and_then(|sol| {
            let pts = selected_points(&problem, &sol.assignment)?;
            Ok((sol, pts))
        });
        let (sol, pts) = match solved {
            Ok(x) => x,
            Err(e) => {
                let mut rec = failed_record(trial, Mode::Selected, n, h, count, noise_level, &e);
                rec.reuse = Some(r);
                out.push(rec);
                continue;
            }
        };
        let mut free_rng = SeededRng::new(splitmix(config.seed ^ (r as u64).rotate_left(48)), trial_stream(n, h, count, trial));
        let mut values = Vec::with_capacity(count);
        values.push(base_value);
        let mut fresh = 0;
        let mut failure = None;
        for (slot, point) in sol.assignment.iter().zip(&pts[1..]) {
            match slot {
                SlotAssignment::Pool { index } => values.push(pool_values[*index]),
                SlotAssignment::Free { .. } => {
                    fresh += 1;
                    match evaluate(spec, point, &mut free_rng) {
                        Ok(v) => values.push(v),
                        Err(e) => failure = Some(e),
                    }
                }
            }
        }
        let mut rec = match failure {
            Some(e) => failed_record(trial, Mode::Selected, n, h, count, noise_level, &e),
            None => estimate_record(trial, Mode::Selected, n, h, &values, noise_level, fresh, &config.heuristics),
        };
        rec.reuse = Some(r);
        rec.optimal = Some(sol.optimal);
        out.push(rec);
    }
    out
}

/// One `(n, h, m)` combination.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Cell {
    pub n: usize,
    pub h: f64,
    pub m: usize,
}

pub fn cells(config: &ExperimentConfig) -> Vec<Cell> {
    let mut out = Vec::new();
    for &n in &config.dims {
        for &h in &config.hs {
            for &m in &config.ms {
                out.push(Cell { n, h, m });
            }
        }
    }
    out
}

fn run_trials<F>(config: &ExperimentConfig, threads: Option<usize>, per_trial: F) -> Result<Vec<TrialRecord>>
where
    F: Fn(&NoisyFunctionSpec, Cell, usize) -> Vec<TrialRecord> + Sync,
{
    config.validate()?;
    let jobs: Vec<(Cell, usize)> = cells(config)
        .into_iter()
        .flat_map(|c| (0..config.trials).map(move |t| (c, t)))
        .collect();
    let work = || -> Vec<TrialRecord> {
        jobs.par_iter()
            .map(|&(cell, t)| per_trial(&config.function.with_dim(cell.n), cell, t))
            .collect::<Vec<_>>()
            .into_iter()
            .flatten()
            .collect()
    };
    match threads {
        Some(k) => {
            let pool = rayon::ThreadPoolBuilder::new()
                .num_threads(k.max(1))
                .build()
                .map_err(|e| Error::Config(format!("thread pool: {e}")))?;
            Ok(pool.install(work))
        }
        None => Ok(work()),
    }
}

fn require_kind(config: &ExperimentConfig, kind: ExperimentKind) -> Result<()> {
    if config.kind != kind {
        return Err(Error::Config(format!(
            "expected a {kind:?} configuration, got {:?}",
            config.kind
        )));
    }
    Ok(())
}

/// Standard vs arbitrary geometry; relative estimates are compared.
pub fn run_geometry(config: &ExperimentConfig, threads: Option<usize>) -> Result<ExperimentRun> {
    require_kind(config, ExperimentKind::Geometry)?;
    let records = run_trials(config, threads, |spec, c, t| baseline_records(config, spec, c.h, c.m, t))?;
    Ok(ExperimentRun::new(config, records))
}

/// Standard vs arbitrary over a grid of `(h, n)`; raw estimates are compared.
pub fn run_grid(config: &ExperimentConfig, threads: Option<usize>) -> Result<ExperimentRun> {
    require_kind(config, ExperimentKind::Grid)?;
    let records = run_trials(config, threads, |spec, c, t| baseline_records(config, spec, c.h, c.m, t))?;
    Ok(ExperimentRun::new(config, records))
}

/// Selection from a pool of evaluated points under each reuse budget, with
/// the standard and arbitrary baselines on `m + 1` points.
pub fn run_reuse(config: &ExperimentConfig, threads: Option<usize>) -> Result<ExperimentRun> {
    require_kind(config, ExperimentKind::Reuse)?;
    let records = run_trials(config, threads, |spec, c, t| reuse_records(config, spec, c.h, c.m, t))?;
    Ok(ExperimentRun::new(config, records))
}

pub fn run_experiment(config: &ExperimentConfig, threads: Option<usize>) -> Result<ExperimentRun> {
    match config.kind {
        ExperimentKind::Geometry => run_geometry(config, threads),
        ExperimentKind::Grid => run_grid(config, threads),
        ExperimentKind::Reuse => run_reuse(config, threads),
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ModeSummary {
    pub mode: Mode,
    pub reuse: Option<usize>,
    pub trials: usize,
    pub success_fraction: f64,
    pub declined_fraction: f64,
    pub error_count: usize,
    pub evaluations_per_trial: f64,
    pub optimal_fraction: Option<f64>,
    /// Sorted samples of the compared quantity; together they define the ECDF.
    pub ecdf: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CellSummary {
    pub n: usize,
    pub h: f64,
    pub points: usize,
    pub modes: Vec<ModeSummary>,
    /// KS test between the standard and arbitrary populations.
    pub ks_standard_vs_arbitrary: Option<KsResult>,
    /// Histograms of the compared quantity per mode (standard, arbitrary).
    pub histograms: Vec<Vec<HistogramBin>>,
}

impl CellSummary {
    pub fn mode(&self, mode: Mode, reuse: Option<usize>) -> Option<&ModeSummary> {
        self.modes.iter().find(|s| s.mode == mode && s.reuse == reuse)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExperimentSummary {
    pub tool_version: String,
    pub seed: u64,
    pub config: ExperimentConfig,
    /// `relative_estimate` for geometry runs, `estimate` otherwise.
    pub compared_quantity: String,
    pub success_factor: f64,
    pub objective_normalization: Option<String>,
    pub cells: Vec<CellSummary>,
}

impl ExperimentSummary {
    pub fn cell(&self, n: usize, h: f64, points: usize) -> Option<&CellSummary> {
        self.cells
            .iter()
            .find(|c| c.n == n && c.h == h && c.points == points)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ExperimentRun {
    pub records: Vec<TrialRecord>,
    pub summary: ExperimentSummary,
}

const HISTOGRAM_BINS: usize = 50;

impl ExperimentRun {
    pub fn new(config: &ExperimentConfig, records: Vec<TrialRecord>) -> Self {
        let summary = summarize(config, &records);
        ExperimentRun { records, summary }
    }

    /// Writes `trials.csv`, `summary.json` and `config.json` into `dir`,
    /// creating it if needed. Each file is written to a temporary name and
    /// renamed into place.
    pub fn write(&self, dir: &Path) -> Result<()> {
        fs::create_dir_all(dir)?;
        write_atomic(&dir.join("trials.csv"), &records_csv(&self.records)?)?;
        let summary = serde_json::to_vec_pretty(&self.summary).map_err(|e| Error::Io(e.to_string()))?;
        write_atomic(&dir.join("summary.json"), &summary)?;
        let config = serde_json::to_vec_pretty(&self.summary.config).map_err(|e| Error::Io(e.to_string()))?;
        write_atomic(&dir.join("config.json"), &config)?;
        Ok(())
    }
}

pub fn write_atomic(path: &Path, bytes: &[u8]) -> Result<()> {
    let name = path
        .file_name()
        .ok_or_else(|| Error::Io(format!("bad output path {}", path.display())))?;
    let tmp = path.with_file_name(format!(".{}.tmp", name.to_string_lossy()));
    let res = (|| -> std::io::Result<()> {
        let mut f = fs::File::create(&tmp)?;
        f.write_all(bytes)?;
        f.sync_all()?;
        fs::rename(&tmp, path)
    })();
    if res.is_err() {
        let _ = fs::remove_file(&tmp);
    }
    res.map_err(Error::from)
}

fn fmt_opt<T: ToString>(v: Option<T>) -> String {
    v.map(|x| x.to_string()).unwrap_or_default()
}

/// CSV with columns
/// `trial,mode,n,h,points,estimate,relative_estimate,noise_level,status,R,optimal,evaluations,error`.
pub fn records_csv(records: &[TrialRecord]) -> Result<Vec<u8>> {
    let mut w = csv::Writer::from_writer(Vec::new());
    let io = |e: csv::Error| Error::Io(e.to_string());
    w.write_record([
        "trial",
        "mode",
        "n",
        "h",
        "points",
        "estimate",
        "relative_estimate",
        "noise_level",
        "status",
        "R",
        "optimal",
        "evaluations",
        "error",
    ])
    .map_err(io)?;
    for r in records {
        w.write_record([
            r.trial.to_string(),
            r.mode.as_str().to_string(),
            r.n.to_string(),
            r.h.to_string(),
            r.points.to_string(),
            r.estimate.to_string(),
            fmt_opt(r.relative_estimate),
            r.noise_level.to_string(),
            r.status.map_or_else(|| "Error".to_string(), |s| s.to_string()),
            fmt_opt(r.reuse),
            fmt_opt(r.optimal),
            r.evaluations.to_string(),
            r.error.clone().unwrap_or_default(),
        ])
        .map_err(io)?;
    }
    w.into_inner().map_err(|e| Error::Io(e.to_string()))
}

fn compared(config: &ExperimentConfig, r: &TrialRecord) -> Option<f64> {
    match config.kind {
        ExperimentKind::Geometry => r.relative_estimate,
        _ => Some(r.estimate),
    }
}

fn mode_summary(config: &ExperimentConfig, mode: Mode, reuse: Option<usize>, recs: &[&TrialRecord]) -> ModeSummary {
    let trials = recs.len();
    let frac = |k: usize| if trials == 0 { 0.0 } else { k as f64 / trials as f64 };
    let declined = recs
        .iter()
        .filter(|r| matches!(r.status, Some(s) if s != EstimateStatus::Ok))
        .count();
    let with_flag: Vec<bool> = recs.iter().filter_map(|r| r.optimal).collect();
    let mut ecdf: Vec<f64> = recs.iter().filter_map(|r| compared(config, r)).collect();
    ecdf.sort_by(f64::total_cmp);
    ModeSummary {
        mode,
        reuse,
        trials,
        success_fraction: frac(recs.iter().filter(|r| r.success()).count()),
        declined_fraction: frac(declined),
        error_count: recs.iter().filter(|r| r.error.is_some()).count(),
        evaluations_per_trial: if trials == 0 {
            0.0
        } else {
            recs.iter().map(|r| r.evaluations).sum::<usize>() as f64 / trials as f64
        },
        optimal_fraction: (!with_flag.is_empty())
            .then(|| with_flag.iter().filter(|&&b| b).count() as f64 / with_flag.len() as f64),
        ecdf,
    }
}

pub fn summarize(config: &ExperimentConfig, records: &[TrialRecord]) -> ExperimentSummary {
    let mut out_cells = Vec::new();
    for cell in cells(config) {
        let points = match config.kind {
            ExperimentKind::Reuse => cell.m + 1,
            _ => cell.m,
        };
        let in_cell: Vec<&TrialRecord> = records
            .iter()
            .filter(|r| r.n == cell.n && r.h == cell.h && r.points == points)
            .collect();
        let pick = |mode: Mode, reuse: Option<usize>| -> Vec<&TrialRecord> {
            in_cell
                .iter()
                .copied()
                .filter(|r| r.mode == mode && r.reuse == reuse)
                .collect()
        };
        let std = pick(Mode::Standard, None);
        let arb = pick(Mode::Arbitrary, None);
        let mut modes = vec![
            mode_summary(config, Mode::Standard, None, &std),
            mode_summary(config, Mode::Arbitrary, None, &arb),
        ];
        if config.kind == ExperimentKind::Reuse {
            for r in config.reuse_budgets(cell.m) {
                modes.push(mode_summary(config, Mode::Selected, Some(r), &pick(Mode::Selected, Some(r))));
            }
        }
        let ks = ks_two_sample(&modes[0].ecdf, &modes[1].ecdf).ok();
        let histograms = modes[..2]
            .iter()
            .map(|s| {
                let finite: Vec<f64> = s.ecdf.iter().copied().filter(|v| v.is_finite()).collect();
                histogram(&finite, HISTOGRAM_BINS).unwrap_or_default()
            })
            .collect();
        out_cells.push(CellSummary {
            n: cell.n,
            h: cell.h,
            points,
            modes,
            ks_standard_vs_arbitrary: ks,
            histograms,
        });
    }
    ExperimentSummary {
        tool_version: TOOL_VERSION.to_string(),
        seed: config.seed,
        config: config.clone(),
        compared_quantity: match config.kind {
            ExperimentKind::Geometry => "relative_estimate",
            _ => "estimate",
        }
        .to_string(),
        success_factor: SUCCESS_FACTOR,
        objective_normalization: (config.kind == ExperimentKind::Reuse)
            .then(|| crate::select::OBJECTIVE_NORMALIZATION.to_string()),
        cells: out_cells,
    }
}
