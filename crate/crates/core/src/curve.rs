//! Polynomial curves through ordered point sets on the integer nodes
//! `t = 0, 1, ..., m`.
//!
//! Each coordinate of the curve is the unique degree-`m` interpolant of the
//! matching coordinate of the points, stored in Newton form. The Lagrange
//! basis on the same nodes gives derivative bounds that depend only on `m`
//! and the spread of the points about `y^0`.

use serde::{Deserialize, Serialize};

use crate::diff_engine::PointSet;
use crate::error::{domain, Result};

/// Divided differences `g[0], g[0,1], ..., g[0,..,m]` of samples taken at
/// the unit-spaced nodes `0, 1, ..., m`.
pub fn divided_differences(samples: &[f64]) -> Result<Vec<f64>> {
    if samples.is_empty() {
        return domain("divided_differences needs at least one sample");
    }
    let mut table = samples.to_vec();
    let n = table.len();
    for k in 1..n {
        // nodes j and j-k are k apart
        for j in (k..n).rev() {
            table[j] = (table[j] - table[j - 1]) / k as f64;
        }
    }
    Ok(table)
}

/// Newton-form interpolating curve through `y^0 .. y^m` at `t = 0 .. m`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NewtonCurve {
    dim: usize,
    order: usize,
    /// `coeffs[i][k]` is the `k`-th divided difference of coordinate `i`.
    coeffs: Vec<Vec<f64>>,
}

pub fn newton_curve(points: &PointSet) -> NewtonCurve {
    let dim = points.dim();
    let order = points.len() - 1;
    let base = points.base();
    let translated = points.translated();
    let coeffs = (0..dim)
        .map(|i| {
            let column: Vec<f64> = translated.iter().map(|p| p[i]).collect();
            let mut dd = divided_differences(&column).expect("point set is nonempty");
            dd[0] = base[i];
            dd
        })
        .collect();
    NewtonCurve { dim, order, coeffs }
}

impl NewtonCurve {
    pub fn dim(&self) -> usize {
        self.dim
    }

    /// Polynomial degree bound `m` (number of points minus one).
    pub fn order(&self) -> usize {
        self.order
    }

    pub fn coeffs(&self) -> &[Vec<f64>] {
        &self.coeffs
    }

    /// `p(t)` by nested multiplication.
    pub fn eval(&self, t: f64) -> Vec<f64> {
        self.coeffs
            .iter()
            .map(|c| {
                let mut acc = c[self.order];
                for k in (0..self.order).rev() {
                    acc = acc * (t - k as f64) + c[k];
                }
                acc
            })
            .collect()
    }

    /// `p^{(k)}(t)`, by expanding each coordinate into powers of
    /// `s = t - m/2` and differentiating.
    pub fn derivative(&self, t: f64, k: usize) -> Vec<f64> {
        let center = self.order as f64 / 2.0;
        self.coeffs
            .iter()
            .map(|c| {
                let mut poly = vec![c[self.order]];
                for j in (0..self.order).rev() {
                    poly = mul_linear(&poly, center - j as f64);
                    poly[0] += c[j];
                }
                eval_poly(&differentiate(&poly, k), t - center)
            })
            .collect()
    }
}

/// Evaluates `curve` at `t`; see [`NewtonCurve::eval`].
pub fn eval_curve(curve: &NewtonCurve, t: f64) -> Vec<f64> {
    curve.eval(t)
}

// Polynomials below are coefficient vectors in ascending powers.

/// `poly(s) * (s + shift)`.
fn mul_linear(poly: &[f64], shift: f64) -> Vec<f64> {
    let mut out = vec![0.0; poly.len() + 1];
    for (p, &a) in poly.iter().enumerate() {
        out[p + 1] += a;
        out[p] += a * shift;
    }
    out
}

fn differentiate(poly: &[f64], k: usize) -> Vec<f64> {
    let mut p = poly.to_vec();
    for _ in 0..k {
        if p.len() <= 1 {
            return vec![0.0];
        }
        p = p.iter().enumerate().skip(1).map(|(e, &a)| a * e as f64).collect();
    }
    p
}

fn eval_poly(poly: &[f64], s: f64) -> f64 {
    poly.iter().rev().fold(0.0, |acc, &a| acc * s + a)
}

/// `L_j` on nodes `0..=m` in powers of `s = t - m/2`.
fn lagrange_basis(m: usize, j: usize) -> Vec<f64> {
    let center = m as f64 / 2.0;
    let mut poly = vec![1.0];
    for l in (0..=m).filter(|&l| l != j) {
        // (t - l) / (j - l) with t = s + center
        poly = mul_linear(&poly, center - l as f64);
        let denom = j as f64 - l as f64;
        poly.iter_mut().for_each(|a| *a /= denom);
    }
    poly
}

/// Max of `|poly(t - center)|` over `[0, m]`: grid scan followed by a
/// golden-section refinement around the best grid point.
fn abs_max_on_interval(poly: &[f64], m: usize, grid: usize) -> f64 {
    let center = m as f64 / 2.0;
    let f = |t: f64| eval_poly(poly, t - center).abs();
    let step = m as f64 / grid as f64;
    let (mut best_i, mut best) = (0, f(0.0));
    for i in 1..=grid {
        let v = f(i as f64 * step);
        if v > best {
            best = v;
            best_i = i;
        }
    }
    let mut lo = (best_i as f64 - 1.0).max(0.0) * step;
    let mut hi = ((best_i + 1) as f64 * step).min(m as f64);
    let ratio = 0.5 * (5f64.sqrt() - 1.0);
    for _ in 0..60 {
        let a = hi - ratio * (hi - lo);
        let b = lo + ratio * (hi - lo);
        if f(a) >= f(b) {
            hi = b;
        } else {
            lo = a;
        }
    }
    best.max(f(0.5 * (lo + hi)))
}

/// `max_j max_{t in [0, m]} |L_j^{(k)}(t)|` for the Lagrange basis on the
/// nodes `0..=m`. Depends only on `m` and `k`.
pub fn lagrange_derivative_max(m: usize, k: usize, grid_resolution: usize) -> Result<f64> {
    if m < 1 {
        return domain("lagrange_derivative_max needs m >= 1");
    }
    if k > m {
        return domain(format!("derivative order {k} exceeds degree {m}"));
    }
    if grid_resolution < 100 {
        return domain("grid_resolution must be at least 100");
    }
    Ok((0..=m)
        .map(|j| abs_max_on_interval(&differentiate(&lagrange_basis(m, j), k), m, grid_resolution))
        .fold(0.0, f64::max))
}

pub const DEFAULT_BOUND_GRID: usize = 2000;

/// Upper bounds `B_k >= max_{i, t in [0, m]} |p_i^{(k)}(t)|` for `k = 1..=m`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DerivativeBound {
    /// `per_order[k - 1]` is `B_k`.
    pub per_order: Vec<f64>,
    pub h_radius: f64,
}

/// `B_k = h_radius * sum_j max_t |L_j^{(k)}(t)|`.
///
/// Valid because `p_i(t) - y^0_i = sum_j (y^j_i - y^0_i) L_j(t)` and every
/// translated coordinate is bounded by `h_radius`.
pub fn derivative_bound(points: &PointSet) -> DerivativeBound {
    let m = points.len() - 1;
    let h_radius = points.h_radius();
    let per_order = (1..=m)
        .map(|k| {
            let sum: f64 = (0..=m)
                .map(|j| {
                    abs_max_on_interval(
                        &differentiate(&lagrange_basis(m, j), k),
                        m,
                        DEFAULT_BOUND_GRID,
                    )
                })
                .sum();
            h_radius * sum
        })
        .collect();
    DerivativeBound {
        per_order,
        h_radius,
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn divided_differences_of_square() {
        assert_eq!(divided_differences(&[0.0, 1.0, 4.0]).unwrap(), vec![0.0, 1.0, 1.0]);
        assert_eq!(
            divided_differences(&[2.5; 4]).unwrap(),
            vec![2.5, 0.0, 0.0, 0.0]
        );
        assert!(divided_differences(&[]).is_err());
    }

    #[test]
    fn newton_quadratic() {
        let ps = PointSet::new(vec![vec![0.0], vec![1.0], vec![4.0], vec![9.0]]).unwrap();
        let c = newton_curve(&ps);
        assert_eq!(c.coeffs()[0], vec![0.0, 1.0, 1.0, 0.0]);
        assert_eq!(c.eval(1.5), vec![2.25]);
        assert_eq!(c.eval(0.0), vec![0.0]);
    }

    #[test]
    fn affine_data_collapses() {
        let y0 = [1.0, -2.0, 0.5];
        let d = [0.6, 0.0, 0.8];
        let h = 0.25;
        let pts = (0..5)
            .map(|j| y0.iter().zip(d).map(|(a, b)| a + j as f64 * h * b).collect())
            .collect();
        let c = newton_curve(&PointSet::new(pts).unwrap());
        for (i, row) in c.coeffs().iter().enumerate() {
            assert_eq!(row[0], y0[i]);
            assert!((row[1] - h * d[i]).abs() < 1e-15);
            assert!(row[2..].iter().all(|a| a.abs() < 1e-15));
        }
        let mid = c.eval(2.5);
        for i in 0..3 {
            assert!((mid[i] - (y0[i] + 2.5 * h * d[i])).abs() < 1e-14);
        }
    }

    #[test]
    fn derivative_of_newton_form() {
        // t^2 + 1 through 4 points: p' = 2t, p'' = 2, p''' = 0
        let ps = PointSet::new((0..4).map(|t| vec![(t * t) as f64 + 1.0]).collect()).unwrap();
        let c = newton_curve(&ps);
        assert!((c.derivative(1.3, 1)[0] - 2.6).abs() < 1e-12);
        assert!((c.derivative(2.9, 2)[0] - 2.0).abs() < 1e-12);
        assert!(c.derivative(0.4, 3)[0].abs() < 1e-12);
        assert_eq!(c.derivative(0.4, 7)[0], 0.0);
    }

    #[test]
    fn lagrange_linear_basis() {
        assert!((lagrange_derivative_max(1, 0, 100).unwrap() - 1.0).abs() < 1e-12);
        assert!((lagrange_derivative_max(1, 1, 100).unwrap() - 1.0).abs() < 1e-12);
        assert!(lagrange_derivative_max(2, 3, 100).is_err());
        assert!(lagrange_derivative_max(2, 1, 10).is_err());
    }

    #[test]
    fn lagrange_top_derivative_is_constant() {
        // L_j^{(m)} = m! / prod_{l != j}(j - l); largest at j = m/2
        let m = 4;
        let expected = 24.0 / 4.0; // j = 2: (2)(1)(-1)(-2) = 4
        let got = lagrange_derivative_max(m, m, 100).unwrap();
        assert!((got - expected).abs() < 1e-9, "{got}");
    }

    #[test]
    fn lagrange_max_converges_under_refinement() {
        let coarse = lagrange_derivative_max(6, 2, 1_000).unwrap();
        let fine = lagrange_derivative_max(6, 2, 10_000).unwrap();
        assert!(((coarse - fine) / fine).abs() < 0.01);
    }

    #[test]
    fn bound_scales_with_radius() {
        let pts = vec![
            vec![1.0, 1.0],
            vec![1.3, 0.8],
            vec![0.9, 1.1],
            vec![1.2, 1.25],
        ];
        let doubled: Vec<Vec<f64>> = pts
            .iter()
            .map(|p| p.iter().map(|c| 1.0 + 2.0 * (c - 1.0)).collect())
            .collect();
        let b1 = derivative_bound(&PointSet::new(pts).unwrap());
        let b2 = derivative_bound(&PointSet::new(doubled).unwrap());
        assert_eq!(b1.per_order.len(), 3);
        for (a, b) in b1.per_order.iter().zip(&b2.per_order) {
            assert!((2.0 * a - b).abs() < 1e-12 * b.abs());
        }
    }
}
