//! Empirical distributions: ECDFs, histograms and the two-sample
//! Kolmogorov–Smirnov test.

use serde::{Deserialize, Serialize};

use crate::error::{domain, Result};

/// Empirical CDF `F(x) = #{samples <= x} / N`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Ecdf {
    sorted: Vec<f64>,
}

impl Ecdf {
    pub fn new(samples: &[f64]) -> Result<Self> {
        if samples.is_empty() {
            return domain("ecdf of an empty sample");
        }
        if samples.iter().any(|v| v.is_nan()) {
            return domain("ecdf samples must not contain NaN");
        }
        let mut sorted = samples.to_vec();
        sorted.sort_by(f64::total_cmp);
        Ok(Ecdf { sorted })
    }

    pub fn eval(&self, x: f64) -> f64 {
        self.sorted.partition_point(|&v| v <= x) as f64 / self.sorted.len() as f64
    }

    pub fn sorted_samples(&self) -> &[f64] {
        &self.sorted
    }

    pub fn len(&self) -> usize {
        self.sorted.len()
    }

    pub fn is_empty(&self) -> bool {
        self.sorted.is_empty()
    }
}

pub fn ecdf(samples: &[f64]) -> Result<Ecdf> {
    Ecdf::new(samples)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct KsResult {
    pub statistic: f64,
    pub p_value: f64,
    pub n1: usize,
    pub n2: usize,
}

/// Kolmogorov survival function `Q(l) = 2 sum_{j>=1} (-1)^{j-1} exp(-2 j^2 l^2)`.
pub fn kolmogorov_q(lambda: f64) -> f64 {
    // the alternating series converges too slowly below this; Q is 1 there
    if lambda < 0.2 {
        return 1.0;
    }
    let mut sum = 0.0;
    let mut sign = 1.0;
    for j in 1..=200 {
        let jf = j as f64;
        let term = sign * (-2.0 * jf * jf * lambda * lambda).exp();
        sum += term;
        if term.abs() < 1e-12 {
            break;
        }
        sign = -sign;
    }
    (2.0 * sum).clamp(0.0, 1.0)
}

/// Two-sample KS test with the asymptotic p-value
/// `Q((sqrt(ne) + 0.12 + 0.11 / sqrt(ne)) D)`, `ne = n1 n2 / (n1 + n2)`.
pub fn ks_two_sample(a: &[f64], b: &[f64]) -> Result<KsResult> {
    let ea = Ecdf::new(a)?;
    let eb = Ecdf::new(b)?;
    let (sa, sb) = (ea.sorted_samples(), eb.sorted_samples());
    let (n1, n2) = (sa.len(), sb.len());

    // walk both sorted samples, stepping past ties together
    let (mut i, mut j) = (0, 0);
    let mut d = 0.0f64;
    while i < n1 && j < n2 {
        let x = sa[i].min(sb[j]);
        while i < n1 && sa[i] <= x {
            i += 1;
        }
        while j < n2 && sb[j] <= x {
            j += 1;
        }
        d = d.max((i as f64 / n1 as f64 - j as f64 / n2 as f64).abs());
    }

    let ne = (n1 * n2) as f64 / (n1 + n2) as f64;
    let sqrt_ne = ne.sqrt();
    let lambda = (sqrt_ne + 0.12 + 0.11 / sqrt_ne) * d;
    Ok(KsResult {
        statistic: d,
        p_value: kolmogorov_q(lambda),
        n1,
        n2,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct HistogramBin {
    pub center: f64,
    pub count: usize,
}

/// Equal-width bins spanning `[min, max]`; the top edge is closed.
pub fn histogram(samples: &[f64], bin_count: usize) -> Result<Vec<HistogramBin>> {
    if samples.is_empty() {
        return domain("histogram of an empty sample");
    }
    if bin_count == 0 {
        return domain("histogram needs at least one bin");
    }
    if samples.iter().any(|v| !v.is_finite()) {
        return domain("histogram samples must be finite");
    }
    let lo = samples.iter().copied().fold(f64::INFINITY, f64::min);
    let hi = samples.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let width = (hi - lo) / bin_count as f64;
    let mut counts = vec![0usize; bin_count];
    for &x in samples {
        let idx = if width > 0.0 {
            (((x - lo) / width) as usize).min(bin_count - 1)
        } else {
            0
        };
        counts[idx] += 1;
    }
    Ok(counts
        .into_iter()
        .enumerate()
        .map(|(k, count)| HistogramBin {
            center: lo + (k as f64 + 0.5) * width,
            count,
        })
        .collect())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn ecdf_queries() {
        let e = ecdf(&[3.0, 1.0, 2.0]).unwrap();
        assert!((e.eval(2.0) - 2.0 / 3.0).abs() < 1e-15);
        assert_eq!(e.eval(0.5), 0.0);
        assert_eq!(e.eval(3.0), 1.0);
        let ties = ecdf(&[5.0, 5.0, 5.0]).unwrap();
        assert_eq!(ties.eval(5.0), 1.0);
        assert_eq!(ties.eval(4.999), 0.0);
        assert!(ecdf(&[]).is_err());
    }

    #[test]
    fn ks_identical_and_disjoint() {
        let a: Vec<f64> = (0..50).map(|i| i as f64 / 50.0).collect();
        let r = ks_two_sample(&a, &a).unwrap();
        assert_eq!(r.statistic, 0.0);
        assert_eq!(r.p_value, 1.0);

        let b: Vec<f64> = a.iter().map(|x| 2.0 + x).collect();
        let r = ks_two_sample(&a[..20], &b[..20]).unwrap();
        assert_eq!(r.statistic, 1.0);
        assert!(r.p_value < 1e-6);
        assert!(ks_two_sample(&[], &a).is_err());
    }

    #[test]
    fn ks_handles_ties_across_samples() {
        let r = ks_two_sample(&[0.0, 0.0, 1.0, 1.0], &[0.0, 1.0]).unwrap();
        assert_eq!(r.statistic, 0.0);
    }

    #[test]
    fn kolmogorov_q_known_values() {
        // Q(1) = 0.26999967...; Q(1.36) ~ 0.0494
        assert!((kolmogorov_q(1.0) - 0.269_999_67).abs() < 1e-7);
        assert!((kolmogorov_q(1.36) - 0.0494).abs() < 1e-3);
        assert_eq!(kolmogorov_q(0.0), 1.0);
    }

    #[test]
    fn histogram_basic() {
        let h = histogram(&[0.0, 1.0], 2).unwrap();
        assert_eq!(h.iter().map(|b| b.count).collect::<Vec<_>>(), vec![1, 1]);
        assert_eq!(h[0].center, 0.25);
        let h = histogram(&[2.0; 7], 4).unwrap();
        assert_eq!(h.iter().filter(|b| b.count > 0).count(), 1);
        assert_eq!(h.iter().map(|b| b.count).sum::<usize>(), 7);
        assert!(histogram(&[], 3).is_err());
        assert!(histogram(&[1.0], 0).is_err());
    }
}
