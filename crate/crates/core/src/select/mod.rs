//! Down-selection of previously evaluated points for noise estimation.
//!
//! Given a base point `y^0` and a pool of evaluated points, choose an
//! ordered assignment of `m` slots (`t = 1..m` on the interpolating curve)
//! so that the largest divided difference of the resulting curve, over all
//! coordinates and orders `1..m`, is as small as possible. Exactly `R`
//! slots take pool points; the remaining `m - R` slots take new points
//! anywhere in the box `||phi - y^0||_inf <= h`.
//!
//! The search is a depth-first branch and bound over slots `1, 2, ..., m`.
//! The order-`j` divided difference only involves slots `0..=j`, so the
//! objective restricted to a prefix can only grow as slots are added, which
//! makes prefix pruning sound. Free slots are placed by a small linear
//! program per coordinate (see [`free_point_subproblem`]).

pub mod lp;

use std::time::{Duration, Instant};

use serde::{Deserialize, Serialize};

use crate::curve::divided_differences;
use crate::error::{domain, Error, Result};

/// The objective is reported in divided-difference units, i.e. forward
/// differences of order `k` divided by `k!`.
pub const OBJECTIVE_NORMALIZATION: &str = "divided_difference";

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SearchLimits {
    pub max_nodes: u64,
    /// Wall-clock budget; `None` disables it, which keeps results
    /// independent of machine speed.
    pub time_limit_secs: Option<f64>,
}

impl Default for SearchLimits {
    fn default() -> Self {
        SearchLimits {
            max_nodes: 10_000_000,
            time_limit_secs: Some(10.0),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SelectionProblem {
    /// `y^0`, which always occupies slot 0.
    pub base: Vec<f64>,
    /// Candidate points `y^1 .. y^M` (absolute coordinates, 0-based indices).
    pub pool: Vec<Vec<f64>>,
    /// Number of slots to fill after the base point.
    pub m: usize,
    /// Number of slots that must be filled from the pool.
    pub reuse: usize,
    /// Infinity-norm radius about `y^0` for free points.
    #[serde(default)]
    pub h: f64,
    #[serde(default)]
    pub limits: SearchLimits,
}

impl SelectionProblem {
    /// Pure reuse: every slot takes a pool point.
    pub fn reuse_only(base: Vec<f64>, pool: Vec<Vec<f64>>, m: usize) -> Self {
        SelectionProblem {
            base,
            pool,
            m,
            reuse: m,
            h: 0.0,
            limits: SearchLimits::default(),
        }
    }

    pub fn with_free_points(base: Vec<f64>, pool: Vec<Vec<f64>>, m: usize, reuse: usize, h: f64) -> Self {
        SelectionProblem {
            base,
            pool,
            m,
            reuse,
            h,
            limits: SearchLimits::default(),
        }
    }

    pub fn dim(&self) -> usize {
        self.base.len()
    }

    pub fn free_slots(&self) -> usize {
        self.m - self.reuse
    }

    pub fn validate(&self) -> Result<()> {
        let n = self.base.len();
        if n == 0 {
            return domain("base point must have dimension >= 1");
        }
        if self.m == 0 {
            return domain("m must be at least 1");
        }
        if self.reuse > self.m {
            return domain(format!("reuse budget {} exceeds m = {}", self.reuse, self.m));
        }
        if self.pool.len() < self.reuse {
            return Err(Error::Infeasible(format!(
                "pool has {} points but reuse budget is {}",
                self.pool.len(),
                self.reuse
            )));
        }
        if self.reuse < self.m && !(self.h > 0.0 && self.h.is_finite()) {
            return domain("free points require a finite box radius h > 0");
        }
        for p in &self.pool {
            if p.len() != n {
                return Err(Error::DimensionMismatch {
                    expected: n,
                    got: p.len(),
                });
            }
        }
        if self
            .base
            .iter()
            .chain(self.pool.iter().flatten())
            .any(|c| !c.is_finite())
        {
            return domain("coordinates must be finite");
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum SlotAssignment {
    Pool { index: usize },
    /// Offset from `y^0`, with `||offset||_inf <= h`.
    Free { offset: Vec<f64> },
}

impl SlotAssignment {
    pub fn pool_index(&self) -> Option<usize> {
        match self {
            SlotAssignment::Pool { index } => Some(*index),
            SlotAssignment::Free { .. } => None,
        }
    }

    pub fn is_free(&self) -> bool {
        matches!(self, SlotAssignment::Free { .. })
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SelectionSolution {
    /// Slots `1..=m` in order.
    pub assignment: Vec<SlotAssignment>,
    /// `max_{i, j} |[c_i^0, .., c_i^j]|` for the assignment.
    pub objective: f64,
    /// The search tree was exhausted within the limits.
    pub optimal: bool,
    pub nodes: u64,
    #[serde(default)]
    pub diagnostics: Vec<String>,
}

impl SelectionSolution {
    /// Pool indices in slot order, free slots omitted.
    pub fn pool_indices(&self) -> Vec<usize> {
        self.assignment.iter().filter_map(SlotAssignment::pool_index).collect()
    }
}

/// `weights[j][l] = (-1)^{j-l} C(j, l) / j!`, so that
/// `[c^0, .., c^j] = sum_l weights[j][l] c^l` on unit-spaced nodes.
pub fn divided_difference_weights(m: usize) -> Vec<Vec<f64>> {
    let mut out = Vec::with_capacity(m + 1);
    let mut fact = 1.0;
    for j in 0..=m {
        if j > 0 {
            fact *= j as f64;
        }
        let mut binom = 1.0;
        let row: Vec<f64> = (0..=j)
            .map(|l| {
                if l > 0 {
                    binom = binom * (j - l + 1) as f64 / l as f64;
                }
                let sign = if (j - l) % 2 == 0 { 1.0 } else { -1.0 };
                sign * binom / fact
            })
            .collect();
        out.push(row);
    }
    out
}

/// One coordinate of the min-max placement problem: minimise
/// `max_{j=1..J} |omega_j|` over free slot values in `[-hbox, hbox]`, where
/// `omega_j = sum_{l=1..j} weights[j][l] c_l` and `c_0 = 0`.
///
/// `slots[l - 1]` is `Some(value)` for a fixed slot and `None` for a free
/// one. Returns the optimal value and the free values in slot order.
fn minmax_coordinate(weights: &[Vec<f64>], slots: &[Option<f64>], hbox: f64) -> (f64, Vec<f64>) {
    let depth = slots.len();
    let free: Vec<usize> = (1..=depth).filter(|&l| slots[l - 1].is_none()).collect();
    let fixed_part = |j: usize| -> f64 {
        (1..=j)
            .filter_map(|l| slots[l - 1].map(|c| weights[j][l] * c))
            .sum()
    };
    if free.is_empty() {
        let t = (1..=depth).map(|j| fixed_part(j).abs()).fold(0.0, f64::max);
        return (t, Vec::new());
    }

    // Shift phi = u - hbox so u >= 0, and t = t0 - r with t0 the value at
    // u = 0; every right-hand side is then nonnegative.
    let nf = free.len();
    let mut shifted = Vec::with_capacity(depth);
    let mut coefs = Vec::with_capacity(depth);
    for j in 1..=depth {
        let b: Vec<f64> = free
            .iter()
            .map(|&l| if l <= j { weights[j][l] } else { 0.0 })
            .collect();
        shifted.push(fixed_part(j) - hbox * b.iter().sum::<f64>());
        coefs.push(b);
    }
    let t0 = shifted.iter().map(|a| a.abs()).fold(0.0, f64::max);

    let mut rows = Vec::with_capacity(2 * depth + nf);
    let mut rhs = Vec::with_capacity(2 * depth + nf);
    for (b, a) in coefs.iter().zip(&shifted) {
        let mut up = b.clone();
        up.push(1.0);
        rows.push(up);
        rhs.push(t0 - a);
        let mut down: Vec<f64> = b.iter().map(|x| -x).collect();
        down.push(1.0);
        rows.push(down);
        rhs.push(t0 + a);
    }
    for f in 0..nf {
        let mut row = vec![0.0; nf + 1];
        row[f] = 1.0;
        rows.push(row);
        rhs.push(2.0 * hbox);
    }
    let mut c = vec![0.0; nf + 1];
    c[nf] = 1.0;
    let sol = lp::maximize(&c, &rows, &rhs).expect("min-max program is bounded");

    let phi: Vec<f64> = sol.x[..nf]
        .iter()
        .map(|u| (u - hbox).clamp(-hbox, hbox))
        .collect();
    let mut full = slots.to_vec();
    for (&l, &p) in free.iter().zip(&phi) {
        full[l - 1] = Some(p);
    }
    let t = (1..=depth)
        .map(|j| {
            (1..=j)
                .map(|l| weights[j][l] * full[l - 1].unwrap())
                .sum::<f64>()
                .abs()
        })
        .fold(0.0, f64::max);
    (t, phi)
}

/// A slot in a fixed pattern: a known point (offset from `y^0`) or a free one.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub enum SlotSpec {
    Fixed(Vec<f64>),
    Free,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FreePlacement {
    /// Offsets from `y^0` for each free slot, in slot order.
    pub placements: Vec<Vec<f64>>,
    pub objective: f64,
}

/// Optimal placement of the free slots in `slots` (slots `1..=m`, offsets
/// relative to `y^0`) within the box of radius `h`.
///
/// The problem separates by coordinate; each coordinate is a small linear
/// min-max program solved exactly.
pub fn free_point_subproblem(slots: &[SlotSpec], h: f64) -> Result<FreePlacement> {
    let n_free = slots.iter().filter(|s| matches!(s, SlotSpec::Free)).count();
    if n_free == 0 {
        return domain("free_point_subproblem needs at least one free slot");
    }
    if !(h > 0.0 && h.is_finite()) {
        return domain("box radius h must be positive");
    }
    let dims: Vec<usize> = slots
        .iter()
        .filter_map(|s| match s {
            SlotSpec::Fixed(p) => Some(p.len()),
            SlotSpec::Free => None,
        })
        .collect();
    let n = dims.first().copied().unwrap_or(1);
    if let Some(&bad) = dims.iter().find(|&&d| d != n) {
        return Err(Error::DimensionMismatch { expected: n, got: bad });
    }
    let scale = slots
        .iter()
        .filter_map(|s| match s {
            SlotSpec::Fixed(p) => Some(p.iter().fold(0.0f64, |a, c| a.max(c.abs()))),
            SlotSpec::Free => None,
        })
        .fold(h, f64::max);
    let weights = divided_difference_weights(slots.len());
    let mut placements = vec![vec![0.0; n]; n_free];
    let mut objective = 0.0f64;
    for i in 0..n {
        let coord: Vec<Option<f64>> = slots
            .iter()
            .map(|s| match s {
                SlotSpec::Fixed(p) => Some(p[i] / scale),
                SlotSpec::Free => None,
            })
            .collect();
        let (t, phi) = minmax_coordinate(&weights, &coord, h / scale);
        objective = objective.max(t * scale);
        for (f, p) in phi.into_iter().enumerate() {
            placements[f][i] = p * scale;
        }
    }
    Ok(FreePlacement {
        placements,
        objective,
    })
}

/// Translated and rescaled copy of a problem; all search arithmetic is O(1).
struct Scaled {
    n: usize,
    m: usize,
    reuse: usize,
    pool: Vec<Vec<f64>>,
    hbox: f64,
    scale: f64,
    weights: Vec<Vec<f64>>,
}

impl Scaled {
    fn new(problem: &SelectionProblem) -> Self {
        let base = &problem.base;
        let spread = problem
            .pool
            .iter()
            .flat_map(|p| p.iter().zip(base).map(|(a, b)| (a - b).abs()))
            .fold(0.0, f64::max);
        let h = if problem.reuse < problem.m { problem.h } else { 0.0 };
        let mut scale = spread.max(h);
        if scale == 0.0 {
            scale = 1.0;
        }
        let pool = problem
            .pool
            .iter()
            .map(|p| p.iter().zip(base).map(|(a, b)| (a - b) / scale).collect())
            .collect();
        Scaled {
            n: base.len(),
            m: problem.m,
            reuse: problem.reuse,
            pool,
            hbox: h / scale,
            scale,
            weights: divided_difference_weights(problem.m),
        }
    }

    /// Exact prefix objective for `slots` (pool index or free), plus free
    /// placements per coordinate. Stops early once a coordinate exceeds
    /// `cutoff`.
    fn prefix_value(&self, slots: &[Option<usize>], cutoff: f64) -> (f64, Vec<Vec<f64>>) {
        let mut worst = 0.0f64;
        let mut placements = Vec::with_capacity(self.n);
        for i in 0..self.n {
            let coord: Vec<Option<f64>> = slots.iter().map(|s| s.map(|q| self.pool[q][i])).collect();
            let (t, phi) = minmax_coordinate(&self.weights, &coord, self.hbox);
            worst = worst.max(t);
            placements.push(phi);
            if worst > cutoff {
                break;
            }
        }
        (worst, placements)
    }

    /// `max_i |omega_{i,j}|` for an all-pool prefix ending at slot `j`.
    fn pool_order_value(&self, slots: &[Option<usize>], last: usize) -> f64 {
        let j = slots.len() + 1;
        let w = &self.weights[j];
        (0..self.n)
            .map(|i| {
                let mut s = w[j] * self.pool[last][i];
                for (l, q) in slots.iter().enumerate() {
                    s += w[l + 1] * self.pool[q.unwrap()][i];
                }
                s.abs()
            })
            .fold(0.0, f64::max)
    }
}

fn tie_key(slots: &[Option<usize>]) -> Vec<usize> {
    slots.iter().map(|s| s.unwrap_or(usize::MAX)).collect()
}

struct Incumbent {
    value: f64,
    slots: Vec<Option<usize>>,
    /// `[coordinate][free slot]`, scaled units.
    placements: Vec<Vec<f64>>,
}

struct Search<'a> {
    ctx: &'a Scaled,
    used: Vec<bool>,
    slots: Vec<Option<usize>>,
    n_free: usize,
    best: Option<Incumbent>,
    nodes: u64,
    max_nodes: u64,
    deadline: Option<Instant>,
    aborted: bool,
}

impl<'a> Search<'a> {
    fn incumbent_value(&self) -> f64 {
        self.best.as_ref().map_or(f64::INFINITY, |b| b.value)
    }

    fn n_pool(&self) -> usize {
        self.slots.len() - self.n_free
    }

    /// Lower bound on any completion after appending `child` to the prefix.
    fn child_bound(&self, parent: f64, child: Option<usize>) -> f64 {
        match child {
            // a free slot can always match the current order's bound at
            // the prefix optimum up to its box; the parent bound stays valid
            None => parent,
            Some(q) if self.n_free == 0 => {
                let v = self.ctx.pool_order_value(&self.slots, q);
                parent.max(v)
            }
            Some(q) => {
                let mut slots = self.slots.clone();
                slots.push(Some(q));
                let (v, _) = self.ctx.prefix_value(&slots, self.incumbent_value());
                debug_assert!(v >= parent - 1e-9, "prefix objective decreased: {v} < {parent}");
                parent.max(v)
            }
        }
    }

    /// No completion of `prefix + child` can beat the incumbent: its bound
    /// is worse, or it ties and its key already exceeds the incumbent's.
    fn dominated(&self, child_bound: f64, child: Option<usize>) -> bool {
        let Some(best) = &self.best else {
            return false;
        };
        if child_bound != best.value {
            return child_bound > best.value;
        }
        let len = self.slots.len();
        let mine = self.slots.iter().chain(std::iter::once(&child)).map(|s| s.unwrap_or(usize::MAX));
        let theirs = best.slots[..=len].iter().map(|s| s.unwrap_or(usize::MAX));
        mine.cmp(theirs) == std::cmp::Ordering::Greater
    }

    fn offer_leaf(&mut self, bound: f64) {
        let (value, placements) = if self.n_free == 0 {
            (bound, Vec::new())
        } else {
            self.ctx.prefix_value(&self.slots, f64::INFINITY)
        };
        let better = match &self.best {
            None => true,
            Some(b) => value < b.value || (value == b.value && tie_key(&self.slots) < tie_key(&b.slots)),
        };
        if better {
            self.best = Some(Incumbent {
                value,
                slots: self.slots.clone(),
                placements,
            });
        }
    }

    fn out_of_budget(&mut self) -> bool {
        if self.aborted {
            return true;
        }
        if self.nodes >= self.max_nodes {
            self.aborted = true;
        } else if self.nodes.is_multiple_of(256) {
            if let Some(d) = self.deadline {
                if Instant::now() >= d {
                    self.aborted = true;
                }
            }
        }
        self.aborted
    }

    fn children(&self, bound: f64) -> Vec<(f64, Option<usize>)> {
        let mut kids = Vec::new();
        if self.n_pool() < self.ctx.reuse {
            for q in 0..self.ctx.pool.len() {
                if !self.used[q] {
                    kids.push((self.child_bound(bound, Some(q)), Some(q)));
                }
            }
        }
        if self.n_free < self.ctx.m - self.ctx.reuse {
            kids.push((bound, None));
        }
        kids.sort_by(|a, b| {
            a.0.partial_cmp(&b.0)
                .unwrap()
                .then(a.1.unwrap_or(usize::MAX).cmp(&b.1.unwrap_or(usize::MAX)))
        });
        kids
    }

    fn push(&mut self, child: Option<usize>) {
        match child {
            Some(q) => self.used[q] = true,
            None => self.n_free += 1,
        }
        self.slots.push(child);
    }

    fn pop(&mut self) {
        match self.slots.pop().unwrap() {
            Some(q) => self.used[q] = false,
            None => self.n_free -= 1,
        }
    }

    fn dfs(&mut self, bound: f64) {
        self.nodes += 1;
        if self.out_of_budget() {
            return;
        }
        if self.slots.len() == self.ctx.m {
            self.offer_leaf(bound);
            return;
        }
        for (child_bound, child) in self.children(bound) {
            if self.aborted {
                return;
            }
            if self.dominated(child_bound, child) {
                continue;
            }
            self.push(child);
            self.dfs(child_bound);
            self.pop();
        }
    }

    /// Nearest-first greedy: pool points fill slots `1..=R` one at a time,
    /// each minimising the prefix objective; free points fill the rest.
    fn seed(&mut self) {
        let mut bound = 0.0;
        for _ in 0..self.ctx.reuse {
            let pick = (0..self.ctx.pool.len())
                .filter(|&q| !self.used[q])
                .map(|q| (self.child_bound(bound, Some(q)), q))
                .min_by(|a, b| a.0.partial_cmp(&b.0).unwrap().then(a.1.cmp(&b.1)))
                .expect("pool holds at least R points");
            bound = pick.0;
            self.push(Some(pick.1));
        }
        while self.slots.len() < self.ctx.m {
            self.push(None);
        }
        self.offer_leaf(bound);
        while !self.slots.is_empty() {
            self.pop();
        }
    }
}

/// Solves the selection problem by branch and bound.
///
/// Returns the best assignment found; `optimal` is false when the node or
/// time budget ran out first. Among equal objectives the lexicographically
/// smallest sequence of pool indices wins (free slots sort after any index).
pub fn solve_selection(problem: &SelectionProblem) -> Result<SelectionSolution> {
    problem.validate()?;
    let ctx = Scaled::new(problem);
    let mut diagnostics = Vec::new();
    if problem.reuse == 0 {
        let msg = "reuse budget R = 0: every slot is free and the optimum collapses onto y0".to_string();
        log::warn!("{msg}");
        diagnostics.push(msg);
    }

    let mut search = Search {
        ctx: &ctx,
        used: vec![false; ctx.pool.len()],
        slots: Vec::with_capacity(ctx.m),
        n_free: 0,
        best: None,
        nodes: 0,
        max_nodes: problem.limits.max_nodes.max(1),
        deadline: problem
            .limits
            .time_limit_secs
            .map(|s| Instant::now() + Duration::from_secs_f64(s.max(0.0))),
        aborted: false,
    };
    search.seed();
    search.dfs(0.0);
    let optimal = !search.aborted;
    let nodes = search.nodes;
    if !optimal {
        let msg = format!("search budget exhausted after {nodes} nodes; returning best incumbent");
        log::warn!("{msg}");
        diagnostics.push(msg);
    }
    let best = search.best.expect("seeding always yields an incumbent");

    let mut free_idx = 0;
    let assignment = best
        .slots
        .iter()
        .map(|s| match s {
            Some(q) => SlotAssignment::Pool { index: *q },
            None => {
                let offset = (0..ctx.n)
                    .map(|i| best.placements[i][free_idx] * ctx.scale)
                    .collect();
                free_idx += 1;
                SlotAssignment::Free { offset }
            }
        })
        .collect();

    Ok(SelectionSolution {
        assignment,
        objective: best.value * ctx.scale,
        optimal,
        nodes,
        diagnostics,
    })
}

fn check_assignment(problem: &SelectionProblem, assignment: &[SlotAssignment]) -> Result<()> {
    if assignment.len() != problem.m {
        return domain(format!(
            "assignment has {} slots, expected {}",
            assignment.len(),
            problem.m
        ));
    }
    let mut seen = vec![false; problem.pool.len()];
    for slot in assignment {
        match slot {
            SlotAssignment::Pool { index } => {
                if *index >= problem.pool.len() {
                    return domain(format!("pool index {index} out of range"));
                }
                if std::mem::replace(&mut seen[*index], true) {
                    return domain(format!("pool index {index} used twice"));
                }
            }
            SlotAssignment::Free { offset } => {
                if offset.len() != problem.dim() {
                    return Err(Error::DimensionMismatch {
                        expected: problem.dim(),
                        got: offset.len(),
                    });
                }
            }
        }
    }
    Ok(())
}

/// Slot points `c^1..c^m` as offsets from `y^0`.
pub fn assignment_offsets(problem: &SelectionProblem, assignment: &[SlotAssignment]) -> Result<Vec<Vec<f64>>> {
    check_assignment(problem, assignment)?;
    Ok(assignment
        .iter()
        .map(|slot| match slot {
            SlotAssignment::Pool { index } => problem.pool[*index]
                .iter()
                .zip(&problem.base)
                .map(|(a, b)| a - b)
                .collect(),
            SlotAssignment::Free { offset } => offset.clone(),
        })
        .collect())
}

/// Absolute coordinates of `y^0, c^1, .., c^m` for an assignment.
pub fn selected_points(problem: &SelectionProblem, assignment: &[SlotAssignment]) -> Result<Vec<Vec<f64>>> {
    let offsets = assignment_offsets(problem, assignment)?;
    let mut out = Vec::with_capacity(offsets.len() + 1);
    out.push(problem.base.clone());
    for off in offsets {
        out.push(off.iter().zip(&problem.base).map(|(o, b)| b + o).collect());
    }
    Ok(out)
}

/// Max divided difference of `[0, c^1_i, .., c^m_i]` over coordinates and
/// orders `1..=m`, from the recursive divided-difference triangle.
fn offsets_objective(offsets: &[Vec<f64>], n: usize) -> f64 {
    (0..n)
        .map(|i| {
            let mut column = Vec::with_capacity(offsets.len() + 1);
            column.push(0.0);
            column.extend(offsets.iter().map(|c| c[i]));
            divided_differences(&column).unwrap()[1..]
                .iter()
                .map(|d| d.abs())
                .fold(0.0, f64::max)
        })
        .fold(0.0, f64::max)
}

/// Recomputes the objective of an assignment independently of the solver.
pub fn selection_objective(problem: &SelectionProblem, assignment: &[SlotAssignment]) -> Result<f64> {
    let offsets = assignment_offsets(problem, assignment)?;
    Ok(offsets_objective(&offsets, problem.dim()))
}

pub const BRUTE_FORCE_LIMIT: u128 = 1_000_000;
/// Grid intervals on `[-h, h]` for a single free slot.
pub const BRUTE_FORCE_GRID_1: usize = 10_000;
/// Grid intervals per axis when two slots are free.
pub const BRUTE_FORCE_GRID_2: usize = 200;

fn permutations_count(total: usize, take: usize) -> u128 {
    (0..take).map(|i| (total - i) as u128).product()
}

fn binomial(n: usize, k: usize) -> u128 {
    (0..k).fold(1u128, |acc, i| acc * (n - i) as u128 / (i + 1) as u128)
}

/// Exhaustive enumeration of every slot pattern and ordered pool choice.
///
/// Free slots (at most two) are placed by grid search on `[-h, h]` per
/// coordinate, so results with free slots are optimal up to the grid step.
/// Refuses instances with more than [`BRUTE_FORCE_LIMIT`] discrete choices.
pub fn brute_force_selection(problem: &SelectionProblem) -> Result<SelectionSolution> {
    problem.validate()?;
    let (m, r, n) = (problem.m, problem.reuse, problem.dim());
    let free = m - r;
    if free > 2 {
        return domain("brute force supports at most two free slots");
    }
    let count = binomial(m, free) * permutations_count(problem.pool.len(), r);
    if count > BRUTE_FORCE_LIMIT {
        return Err(Error::TooLarge {
            count,
            limit: BRUTE_FORCE_LIMIT,
        });
    }
    let offsets: Vec<Vec<f64>> = problem
        .pool
        .iter()
        .map(|p| p.iter().zip(&problem.base).map(|(a, b)| a - b).collect())
        .collect();
    let grid: Vec<f64> = match free {
        0 => Vec::new(),
        1 => linspace(problem.h, BRUTE_FORCE_GRID_1),
        _ => linspace(problem.h, BRUTE_FORCE_GRID_2),
    };

    let mut best: Option<(f64, Vec<usize>, Vec<SlotAssignment>)> = None;
    let mut nodes = 0u64;
    for free_mask in patterns(m, free) {
        for_each_ordering(offsets.len(), r, &mut |picks: &[usize]| {
            nodes += 1;
            let mut slots: Vec<Option<usize>> = Vec::with_capacity(m);
            let mut it = picks.iter();
            for is_free in &free_mask {
                slots.push(if *is_free { None } else { it.next().copied() });
            }
            let (value, placement) = evaluate_pattern(&slots, &offsets, n, &grid);
            let key = tie_key(&slots);
            let better = match &best {
                None => true,
                Some((v, k, _)) => value < *v || (value == *v && key < *k),
            };
            if better {
                let mut fi = 0;
                let assignment = slots
                    .iter()
                    .map(|s| match s {
                        Some(q) => SlotAssignment::Pool { index: *q },
                        None => {
                            let offset = placement.iter().map(|coord| coord[fi]).collect();
                            fi += 1;
                            SlotAssignment::Free { offset }
                        }
                    })
                    .collect();
                best = Some((value, key, assignment));
            }
        });
    }
    let (objective, _, assignment) = best.expect("at least one candidate");
    Ok(SelectionSolution {
        assignment,
        objective,
        optimal: true,
        nodes,
        diagnostics: Vec::new(),
    })
}

fn linspace(h: f64, intervals: usize) -> Vec<f64> {
    (0..=intervals)
        .map(|k| -h + 2.0 * h * k as f64 / intervals as f64)
        .collect()
}

/// Every way to mark `free` of `m` slots as free, as boolean masks.
fn patterns(m: usize, free: usize) -> Vec<Vec<bool>> {
    let mut out = Vec::new();
    for bits in 0u32..(1u32 << m) {
        if bits.count_ones() as usize == free {
            out.push((0..m).map(|j| bits & (1 << j) != 0).collect());
        }
    }
    out
}

fn for_each_ordering(total: usize, take: usize, f: &mut dyn FnMut(&[usize])) {
    fn rec(total: usize, take: usize, used: &mut Vec<bool>, cur: &mut Vec<usize>, f: &mut dyn FnMut(&[usize])) {
        if cur.len() == take {
            f(cur);
            return;
        }
        for q in 0..total {
            if !used[q] {
                used[q] = true;
                cur.push(q);
                rec(total, take, used, cur, f);
                cur.pop();
                used[q] = false;
            }
        }
    }
    rec(total, take, &mut vec![false; total], &mut Vec::with_capacity(take), f);
}

/// Per-coordinate grid search over free values; returns the objective and
/// `[coordinate][free slot]` placements.
fn evaluate_pattern(slots: &[Option<usize>], offsets: &[Vec<f64>], n: usize, grid: &[f64]) -> (f64, Vec<Vec<f64>>) {
    let free_pos: Vec<usize> = (0..slots.len()).filter(|&l| slots[l].is_none()).collect();
    let mut worst = 0.0f64;
    let mut placement = Vec::with_capacity(n);
    let mut column = vec![0.0; slots.len() + 1];
    for i in 0..n {
        for (l, s) in slots.iter().enumerate() {
            column[l + 1] = s.map_or(0.0, |q| offsets[q][i]);
        }
        let score = |col: &[f64]| {
            divided_differences(col).unwrap()[1..]
                .iter()
                .map(|d| d.abs())
                .fold(0.0, f64::max)
        };
        let (best, phi) = match free_pos.len() {
            0 => (score(&column), Vec::new()),
            1 => {
                let mut best = (f64::INFINITY, vec![0.0]);
                for &g in grid {
                    column[free_pos[0] + 1] = g;
                    let v = score(&column);
                    if v < best.0 {
                        best = (v, vec![g]);
                    }
                }
                best
            }
            _ => {
                let mut best = (f64::INFINITY, vec![0.0, 0.0]);
                for &g1 in grid {
                    for &g2 in grid {
                        column[free_pos[0] + 1] = g1;
                        column[free_pos[1] + 1] = g2;
                        let v = score(&column);
                        if v < best.0 {
                            best = (v, vec![g1, g2]);
                        }
                    }
                }
                best
            }
        };
        worst = worst.max(best);
        placement.push(phi);
    }
    (worst, placement)
}
