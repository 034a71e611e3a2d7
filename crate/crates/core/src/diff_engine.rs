//! Forward differencing tables and the noise-level estimator built on them.
//!
//! A table is built from `N` function values `f(y^0) .. f(y^{N-1})`. Column
//! `k` holds the `k`-th order forward differences, and each column yields a
//! noise estimate
//!
//! ```text
//! sigma_k = sqrt( gamma_k * mean_j (Delta^k f(y^j))^2 ),   gamma_k = (k!)^2 / (2k)!
//! ```
//!
//! [`estimate_noise`] picks one order (or declines) using the spread guard
//! and the cross-order agreement test described on [`HeuristicOptions`].

use serde::{Deserialize, Serialize};

use crate::error::{domain, Error, Result};

/// Triangular table of forward differences.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DifferenceTable {
    values: Vec<f64>,
    /// `columns[k - 1]` holds the order-`k` differences.
    columns: Vec<Vec<f64>>,
}

impl DifferenceTable {
    /// Function values, i.e. the order-0 column.
    pub fn values(&self) -> &[f64] {
        &self.values
    }

    /// Highest available order, `len(values) - 1`.
    pub fn max_order(&self) -> usize {
        self.columns.len()
    }

    /// Column of order `k`. Order 0 is the value column.
    pub fn column(&self, k: usize) -> Option<&[f64]> {
        match k {
            0 => Some(&self.values),
            _ => self.columns.get(k - 1).map(Vec::as_slice),
        }
    }

    /// Iterator over the difference columns of order 1, 2, ...
    pub fn columns(&self) -> impl Iterator<Item = &[f64]> {
        self.columns.iter().map(Vec::as_slice)
    }
}

/// Builds the full difference table up to order `values.len() - 1`.
pub fn build_table(values: &[f64]) -> Result<DifferenceTable> {
    if values.len() < 2 {
        return Err(Error::TooFewPoints {
            needed: 2,
            got: values.len(),
        });
    }
    let mut columns = Vec::with_capacity(values.len() - 1);
    let mut prev: &[f64] = values;
    for _ in 1..values.len() {
        let next: Vec<f64> = prev.windows(2).map(|w| w[1] - w[0]).collect();
        columns.push(next);
        prev = columns.last().unwrap();
    }
    Ok(DifferenceTable {
        values: values.to_vec(),
        columns,
    })
}

/// `(k!)^2 / (2k)!`, evaluated by the recurrence
/// `gamma_k = gamma_{k-1} * k / (2 (2k - 1))` so large `k` never overflows.
pub fn gamma(k: usize) -> Result<f64> {
    if k < 1 {
        return domain("gamma(k) requires k >= 1");
    }
    let mut g = 1.0;
    for j in 1..=k {
        g *= j as f64 / (2.0 * (2 * j - 1) as f64);
    }
    Ok(g)
}

/// Noise estimate from column `k` alone.
pub fn estimate_at_order(table: &DifferenceTable, k: usize) -> Result<f64> {
    if k < 1 || k > table.max_order() {
        return domain(format!(
            "order {k} outside 1..={} for this table",
            table.max_order()
        ));
    }
    let col = &table.columns[k - 1];
    let mean_sq = col.iter().map(|d| d * d).sum::<f64>() / col.len() as f64;
    Ok((gamma(k)? * mean_sq).sqrt())
}

/// Outcome of [`estimate_noise`].
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum EstimateStatus {
    Ok,
    /// Function values vary too much relative to their magnitude; the
    /// sampling radius is likely too large.
    SpreadTooLarge,
    /// No run of three consecutive orders agreed, or the agreeing orders
    /// carried no sign change.
    NoAgreement,
    TooFewPoints,
}

impl EstimateStatus {
    pub fn as_str(&self) -> &'static str {
        match self {
            EstimateStatus::Ok => "Ok",
            EstimateStatus::SpreadTooLarge => "SpreadTooLarge",
            EstimateStatus::NoAgreement => "NoAgreement",
            EstimateStatus::TooFewPoints => "TooFewPoints",
        }
    }
}

impl std::fmt::Display for EstimateStatus {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.as_str())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct OrderEstimate {
    pub order: usize,
    pub estimate: f64,
    /// Column of this order contains both strictly positive and strictly
    /// negative entries.
    pub sign_change: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NoiseEstimate {
    pub per_order: Vec<OrderEstimate>,
    pub selected_order: Option<usize>,
    /// Zero when the estimator declined.
    pub value: f64,
    pub status: EstimateStatus,
}

impl NoiseEstimate {
    pub fn is_ok(&self) -> bool {
        self.status == EstimateStatus::Ok
    }
}

/// Thresholds for accepting an estimate.
///
/// * spread guard: decline when `max f - min f > spread_factor * max(|max f|, |min f|)`.
/// * agreement: accept the smallest `k` in `1..=N-3` whose estimates at
///   `k, k+1, k+2` satisfy `max <= agreement_factor * min` and whose column
///   changes sign.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct HeuristicOptions {
    pub spread_factor: f64,
    pub agreement_factor: f64,
}

impl Default for HeuristicOptions {
    fn default() -> Self {
        HeuristicOptions {
            spread_factor: 0.1,
            agreement_factor: 4.0,
        }
    }
}

fn has_sign_change(col: &[f64]) -> bool {
    let (lo, hi) = col
        .iter()
        .fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), &d| {
            (lo.min(d), hi.max(d))
        });
    lo * hi < 0.0
}

/// Estimates the noise level of `values` using all difference orders and
/// the acceptance heuristics in `options`.
pub fn estimate_noise(values: &[f64], options: &HeuristicOptions) -> Result<NoiseEstimate> {
    if values.len() < 4 {
        return Err(Error::TooFewPoints {
            needed: 4,
            got: values.len(),
        });
    }
    let table = build_table(values)?;
    let mut per_order = Vec::with_capacity(table.max_order());
    for (idx, col) in table.columns().enumerate() {
        let order = idx + 1;
        per_order.push(OrderEstimate {
            order,
            estimate: estimate_at_order(&table, order)?,
            sign_change: has_sign_change(col),
        });
    }

    let declined = |status, per_order| NoiseEstimate {
        per_order,
        selected_order: None,
        value: 0.0,
        status,
    };

    let (fmin, fmax) = values
        .iter()
        .fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), &v| {
            (lo.min(v), hi.max(v))
        });
    if fmax - fmin > options.spread_factor * fmax.abs().max(fmin.abs()) {
        return Ok(declined(EstimateStatus::SpreadTooLarge, per_order));
    }

    for k in 1..=values.len() - 3 {
        let window = &per_order[k - 1..k + 2];
        let lo = window.iter().map(|e| e.estimate).fold(f64::INFINITY, f64::min);
        let hi = window.iter().map(|e| e.estimate).fold(0.0, f64::max);
        if hi <= options.agreement_factor * lo && per_order[k - 1].sign_change {
            let value = per_order[k - 1].estimate;
            return Ok(NoiseEstimate {
                per_order,
                selected_order: Some(k),
                value,
                status: EstimateStatus::Ok,
            });
        }
    }
    Ok(declined(EstimateStatus::NoAgreement, per_order))
}

/// Finite-difference interval `8^(1/4) * sqrt(eps_f / mu)` that balances
/// truncation and noise error for a forward difference.
pub fn optimal_fd_interval(eps_f: f64, mu: f64) -> Result<f64> {
    if !(eps_f > 0.0 && mu > 0.0) {
        return domain("optimal_fd_interval requires eps_f > 0 and mu > 0");
    }
    Ok(8f64.powf(0.25) * (eps_f / mu).sqrt())
}

/// Ordered sample points `y^0 .. y^{N-1}` of common dimension.
///
/// Spread measures are computed on access from the stored points.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "Vec<Vec<f64>>", into = "Vec<Vec<f64>>")]
pub struct PointSet {
    dim: usize,
    points: Vec<Vec<f64>>,
}

impl PointSet {
    pub fn new(points: Vec<Vec<f64>>) -> Result<Self> {
        if points.len() < 2 {
            return Err(Error::TooFewPoints {
                needed: 2,
                got: points.len(),
            });
        }
        let dim = points[0].len();
        if dim == 0 {
            return domain("points must have dimension >= 1");
        }
        for p in &points {
            if p.len() != dim {
                return Err(Error::DimensionMismatch {
                    expected: dim,
                    got: p.len(),
                });
            }
            if p.iter().any(|c| !c.is_finite()) {
                return domain("point coordinates must be finite");
            }
        }
        Ok(PointSet { dim, points })
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    pub fn base(&self) -> &[f64] {
        &self.points[0]
    }

    pub fn points(&self) -> &[Vec<f64>] {
        &self.points
    }

    pub fn point(&self, j: usize) -> &[f64] {
        &self.points[j]
    }

    /// `max_j ||y^{j+1} - y^j||_2`.
    pub fn h_consecutive(&self) -> f64 {
        self.points
            .windows(2)
            .map(|w| {
                w[0].iter()
                    .zip(&w[1])
                    .map(|(a, b)| (b - a) * (b - a))
                    .sum::<f64>()
                    .sqrt()
            })
            .fold(0.0, f64::max)
    }

    /// `max_{j >= 1} ||y^j - y^0||_inf`.
    pub fn h_radius(&self) -> f64 {
        let base = &self.points[0];
        self.points[1..]
            .iter()
            .flat_map(|p| p.iter().zip(base).map(|(a, b)| (a - b).abs()))
            .fold(0.0, f64::max)
    }

    /// Points with the base point subtracted, so `y^0` becomes the origin.
    pub fn translated(&self) -> Vec<Vec<f64>> {
        let base = &self.points[0];
        self.points
            .iter()
            .map(|p| p.iter().zip(base).map(|(a, b)| a - b).collect())
            .collect()
    }
}

impl TryFrom<Vec<Vec<f64>>> for PointSet {
    type Error = Error;

    fn try_from(points: Vec<Vec<f64>>) -> Result<Self> {
        PointSet::new(points)
    }
}

impl From<PointSet> for Vec<Vec<f64>> {
    fn from(ps: PointSet) -> Self {
        ps.points
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    const TABLE1: [f64; 6] = [328.3654, 329.2947, 328.4099, 328.5886, 328.2965, 328.4134];

    fn close(a: f64, b: f64, tol: f64) -> bool {
        (a - b).abs() <= tol
    }

    #[test]
    fn table1_first_column_is_exact() {
        let t = build_table(&TABLE1).unwrap();
        let expected = [0.9293, -0.8848, 0.1787, -0.2921, 0.1169];
        for (a, b) in t.column(1).unwrap().iter().zip(expected) {
            assert!(close(*a, b, 1e-9), "{a} vs {b}");
        }
        assert_eq!(t.max_order(), 5);
        assert_eq!(t.column(5).unwrap().len(), 1);
        assert!(close(t.column(5).unwrap()[0], 6.8260, 1e-9));
    }

    #[test]
    fn quadratic_has_constant_second_differences() {
        let t = build_table(&[0.0, 1.0, 4.0, 9.0]).unwrap();
        assert_eq!(t.column(2).unwrap(), &[2.0, 2.0]);
        assert_eq!(t.column(3).unwrap(), &[0.0]);
    }

    #[test]
    fn constant_values_give_zero_columns_and_estimates() {
        let t = build_table(&[3.5; 5]).unwrap();
        for k in 1..=t.max_order() {
            assert!(t.column(k).unwrap().iter().all(|&d| d == 0.0));
            assert_eq!(estimate_at_order(&t, k).unwrap(), 0.0);
        }
    }

    #[test]
    fn build_table_rejects_single_value() {
        assert!(matches!(
            build_table(&[1.0]),
            Err(Error::TooFewPoints { needed: 2, got: 1 })
        ));
    }

    #[test]
    fn gamma_small_orders() {
        assert_eq!(gamma(1).unwrap(), 0.5);
        assert!(close(gamma(2).unwrap(), 1.0 / 6.0, 1e-16));
        assert!(close(gamma(3).unwrap(), 0.05, 1e-16));
        assert!(gamma(0).is_err());
    }

    #[test]
    fn gamma_matches_factorial_ratio() {
        let mut fact = vec![1.0f64];
        for i in 1..=60 {
            fact.push(fact[i - 1] * i as f64);
        }
        for k in 1..=30 {
            let direct = fact[k] * fact[k] / fact[2 * k];
            let g = gamma(k).unwrap();
            assert!(((g - direct) / direct).abs() < 1e-13, "k={k}");
        }
        // large orders stay finite and positive
        assert!(gamma(200).unwrap() > 0.0);
    }

    #[test]
    fn estimate_at_order_table1() {
        let t = build_table(&TABLE1).unwrap();
        assert!(close(estimate_at_order(&t, 1).unwrap(), 0.4216, 5e-5));
        assert!(close(estimate_at_order(&t, 4).unwrap(), 0.4250, 5e-5));
        assert!(estimate_at_order(&t, 0).is_err());
        assert!(estimate_at_order(&t, 6).is_err());
    }

    #[test]
    fn estimate_noise_table1_is_ok() {
        let est = estimate_noise(&TABLE1, &HeuristicOptions::default()).unwrap();
        assert_eq!(est.status, EstimateStatus::Ok);
        assert_eq!(est.selected_order, Some(1));
        assert!(est.value >= 0.4216 - 5e-5 && est.value <= 0.4477 + 5e-5);
        assert_eq!(est.value, est.per_order[0].estimate);
    }

    #[test]
    fn spread_guard_fires() {
        let vals = [0.0, 1000.0, 0.0, 1000.0, 0.0, 1000.0];
        let est = estimate_noise(&vals, &HeuristicOptions::default()).unwrap();
        assert_eq!(est.status, EstimateStatus::SpreadTooLarge);
        assert_eq!(est.value, 0.0);
        assert_eq!(est.selected_order, None);
    }

    #[test]
    fn smooth_monotone_samples_decline() {
        // e^t on t = 0..5 varies by far more than 10% and trips the spread guard
        let vals: Vec<f64> = (0..6).map(|t| (t as f64).exp()).collect();
        let est = estimate_noise(&vals, &HeuristicOptions::default()).unwrap();
        assert_eq!(est.status, EstimateStatus::SpreadTooLarge);

        // with the guard disabled, the sign-change test is what declines
        let relaxed = HeuristicOptions {
            spread_factor: f64::INFINITY,
            ..Default::default()
        };
        let est = estimate_noise(&vals, &relaxed).unwrap();
        assert_eq!(est.status, EstimateStatus::NoAgreement);
        assert!(est.per_order.iter().all(|o| !o.sign_change));

        // a narrow sample of the same curve passes the guard and still declines
        let vals: Vec<f64> = (0..6).map(|t| (0.01 * t as f64).exp()).collect();
        let est = estimate_noise(&vals, &HeuristicOptions::default()).unwrap();
        assert_eq!(est.status, EstimateStatus::NoAgreement);
        assert_eq!(est.value, 0.0);
    }

    #[test]
    fn constant_values_decline_without_agreement() {
        let est = estimate_noise(&[7.0; 6], &HeuristicOptions::default()).unwrap();
        assert_eq!(est.status, EstimateStatus::NoAgreement);
        assert_eq!(est.value, 0.0);
    }

    #[test]
    fn estimate_noise_needs_four_values() {
        assert!(matches!(
            estimate_noise(&[1.0, 2.0, 3.0], &HeuristicOptions::default()),
            Err(Error::TooFewPoints { needed: 4, got: 3 })
        ));
    }

    #[test]
    fn optimal_interval_closed_form() {
        let r = 8f64.powf(0.25);
        assert!(close(optimal_fd_interval(1.0, 1.0).unwrap(), 1.681793, 1e-6));
        assert!(close(optimal_fd_interval(1e-6, 1.0).unwrap(), 1.681793e-3, 1e-9));
        assert!(close(optimal_fd_interval(4e-6, 1e-2).unwrap(), 3.363586e-2, 1e-8));
        assert!(close(optimal_fd_interval(4e-6, 1e-2).unwrap(), r * 0.02, 1e-15));
        assert!(optimal_fd_interval(0.0, 1.0).is_err());
        assert!(optimal_fd_interval(1.0, -1.0).is_err());
    }

    #[test]
    fn point_set_spreads() {
        let ps = PointSet::new(vec![vec![0.0, 0.0], vec![3.0, 4.0], vec![3.0, 5.0]]).unwrap();
        assert_eq!(ps.h_consecutive(), 5.0);
        assert_eq!(ps.h_radius(), 5.0);
        assert!(PointSet::new(vec![vec![1.0]]).is_err());
        assert!(PointSet::new(vec![vec![1.0], vec![1.0, 2.0]]).is_err());
        assert!(PointSet::new(vec![vec![], vec![]]).is_err());
    }
}
