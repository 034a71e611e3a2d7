//! Dense tableau simplex for `max c.x  s.t.  A x <= b, x >= 0` with `b >= 0`.
//!
//! The slack basis is feasible from the start, so no phase one is needed.
//! Bland's rule guards against cycling on the degenerate vertices the
//! min-max formulations produce.

const EPS: f64 = 1e-12;

#[derive(Debug, Clone, PartialEq)]
pub struct LpSolution {
    pub x: Vec<f64>,
    pub objective: f64,
}

/// Returns `None` when the objective is unbounded.
///
/// `a` is row-major with `b.len()` rows of `c.len()` entries.
pub fn maximize(c: &[f64], a: &[Vec<f64>], b: &[f64]) -> Option<LpSolution> {
    let nvar = c.len();
    let nrow = b.len();
    debug_assert!(b.iter().all(|&v| v >= -EPS), "rhs must be nonnegative");
    let width = nvar + nrow + 1;
    let mut tab = vec![0.0; (nrow + 1) * width];
    for r in 0..nrow {
        let row = &mut tab[r * width..(r + 1) * width];
        row[..nvar].copy_from_slice(&a[r]);
        row[nvar + r] = 1.0;
        row[width - 1] = b[r].max(0.0);
    }
    {
        let z = &mut tab[nrow * width..];
        for j in 0..nvar {
            z[j] = -c[j];
        }
    }
    let mut basis: Vec<usize> = (nvar..nvar + nrow).collect();

    loop {
        let z = &tab[nrow * width..];
        let Some(enter) = (0..width - 1).find(|&j| z[j] < -EPS) else {
            break;
        };
        let ratio = |r: usize| {
            let coef = tab[r * width + enter];
            (coef > EPS).then(|| tab[r * width + width - 1] / coef)
        };
        let min_ratio = (0..nrow).filter_map(ratio).fold(f64::INFINITY, f64::min);
        if min_ratio.is_infinite() {
            return None;
        }
        // Bland: among tied rows, the smallest basic variable leaves
        let leave = (0..nrow)
            .filter(|&r| ratio(r).is_some_and(|q| q <= min_ratio + EPS))
            .min_by_key(|&r| basis[r])?;
        pivot(&mut tab, width, nrow + 1, leave, enter);
        basis[leave] = enter;
    }

    let mut x = vec![0.0; nvar];
    for (r, &bv) in basis.iter().enumerate() {
        if bv < nvar {
            x[bv] = tab[r * width + width - 1];
        }
    }
    let objective = c.iter().zip(&x).map(|(ci, xi)| ci * xi).sum();
    Some(LpSolution { x, objective })
}

fn pivot(tab: &mut [f64], width: usize, rows: usize, pr: usize, pc: usize) {
    let p = tab[pr * width + pc];
    for j in 0..width {
        tab[pr * width + j] /= p;
    }
    for r in 0..rows {
        if r == pr {
            continue;
        }
        let f = tab[r * width + pc];
        if f != 0.0 {
            for j in 0..width {
                tab[r * width + j] -= f * tab[pr * width + j];
            }
        }
    }
}
