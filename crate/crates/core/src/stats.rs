//! Descriptive statistics and the two location tests used on distortion
//! samples.
//!
//! Sums run strictly left to right in input order. Callers that need
//! bit-identical results across constructions (adding exact zeros never
//! changes a running sum) rely on that order.

use serde::{Deserialize, Serialize};
use statrs::distribution::{ContinuousCDF, StudentsT};
use statrs::function::gamma::ln_gamma;

use crate::error::{Error, Result};

pub fn sum(xs: &[f64]) -> f64 {
    xs.iter().fold(0.0, |acc, &x| acc + x)
}

pub fn sum_of_squares(xs: &[f64]) -> f64 {
    xs.iter().fold(0.0, |acc, &x| acc + x * x)
}

pub fn mean(xs: &[f64]) -> f64 {
    sum(xs) / xs.len() as f64
}

/// Two-pass sample variance with the `n - 1` denominator.
pub fn sample_variance(xs: &[f64]) -> f64 {
    let m = mean(xs);
    let ss = xs.iter().fold(0.0, |acc, &x| acc + (x - m) * (x - m));
    ss / (xs.len() as f64 - 1.0)
}

pub fn sample_std(xs: &[f64]) -> f64 {
    sample_variance(xs).sqrt()
}

/// Sufficient statistics of a return multiset.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ReturnSummary {
    pub n: usize,
    pub mean: f64,
    /// Raw (uncentred) sum of squares.
    pub sum_of_squares: f64,
}

impl ReturnSummary {
    pub fn of(xs: &[f64]) -> Self {
        Self {
            n: xs.len(),
            mean: mean(xs),
            sum_of_squares: sum_of_squares(xs),
        }
    }
}

/// Linear-interpolation quantile (the "type 7" rule) of unsorted data.
pub fn quantile(xs: &[f64], q: f64) -> f64 {
    let mut v = xs.to_vec();
    v.sort_by(f64::total_cmp);
    quantile_sorted(&v, q)
}

fn quantile_sorted(v: &[f64], q: f64) -> f64 {
    let h = (v.len() - 1) as f64 * q.clamp(0.0, 1.0);
    let lo = h.floor() as usize;
    let hi = h.ceil() as usize;
    v[lo] + (h - lo as f64) * (v[hi] - v[lo])
}

pub fn median(xs: &[f64]) -> f64 {
    quantile(xs, 0.5)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FiveNumber {
    pub min: f64,
    pub q1: f64,
    pub median: f64,
    pub q3: f64,
    pub max: f64,
}

pub fn five_number(xs: &[f64]) -> FiveNumber {
    let mut v = xs.to_vec();
    v.sort_by(f64::total_cmp);
    FiveNumber {
        min: v[0],
        q1: quantile_sorted(&v, 0.25),
        median: quantile_sorted(&v, 0.5),
        q3: quantile_sorted(&v, 0.75),
        max: v[v.len() - 1],
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct HistogramBin {
    pub lower: f64,
    pub upper: f64,
    pub count: usize,
}

/// Equal-width bins over `[min, max]`; the last bin is closed on the right.
pub fn histogram(xs: &[f64], bins: usize) -> Vec<HistogramBin> {
    if xs.is_empty() || bins == 0 {
        return Vec::new();
    }
    let lo = xs.iter().copied().fold(f64::INFINITY, f64::min);
    let mut hi = xs.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    if hi == lo {
        hi = lo + 1.0;
    }
    let width = (hi - lo) / bins as f64;
    let mut counts = vec![0usize; bins];
    for &x in xs {
        let idx = (((x - lo) / width) as usize).min(bins - 1);
        counts[idx] += 1;
    }
    counts
        .into_iter()
        .enumerate()
        .map(|(i, count)| HistogramBin {
            lower: lo + i as f64 * width,
            upper: if i + 1 == bins { hi } else { lo + (i + 1) as f64 * width },
            count,
        })
        .collect()
}

/// `P(X >= k)` for `X ~ Binomial(n, 1/2)`.
fn binomial_half_upper_tail(n: usize, k: usize) -> f64 {
    if k == 0 {
        return 1.0;
    }
    if k > n {
        return 0.0;
    }
    if n <= 1000 {
        // term_i = C(n, i) / 2^n, walking down from i = n where it is exactly 2^-n.
        let mut term = 0.5f64.powi(n as i32);
        let mut tail = term;
        for i in (k + 1..=n).rev() {
            term *= i as f64 / (n - i + 1) as f64;
            tail += term;
        }
        tail.min(1.0)
    } else {
        let ln_half_n = n as f64 * 0.5f64.ln();
        let ln_fact_n = ln_gamma(n as f64 + 1.0);
        (k..=n)
            .map(|i| (ln_fact_n - ln_gamma(i as f64 + 1.0) - ln_gamma((n - i) as f64 + 1.0) + ln_half_n).exp())
            .sum::<f64>()
            .min(1.0)
    }
}

/// Exact two-sided sign test of a zero median. Zeros are dropped before
/// counting.
pub fn sign_test(deltas: &[f64]) -> Result<f64> {
    if deltas.is_empty() {
        return Err(Error::UndefinedTest("sign test on an empty sample"));
    }
    let positive = deltas.iter().filter(|&&d| d > 0.0).count();
    let negative = deltas.iter().filter(|&&d| d < 0.0).count();
    let n = positive + negative;
    if n == 0 {
        return Err(Error::UndefinedTest("sign test with every difference zero"));
    }
    let extreme = positive.max(negative);
    Ok((2.0 * binomial_half_upper_tail(n, extreme)).min(1.0))
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TTest {
    pub t: f64,
    pub p: f64,
    pub df: f64,
}

/// One-sample two-sided t-test of a zero mean.
pub fn t_test(deltas: &[f64]) -> Result<TTest> {
    if deltas.len() < 2 {
        return Err(Error::UndefinedTest("t-test needs at least two values"));
    }
    let n = deltas.len() as f64;
    let s = sample_std(deltas);
    if deltas.iter().all(|&d| d == deltas[0]) || !(s > 0.0) {
        return Err(Error::UndefinedTest("t-test on a zero-variance sample"));
    }
    let t = mean(deltas) / (s / n.sqrt());
    let df = n - 1.0;
    let dist = StudentsT::new(0.0, 1.0, df).map_err(|e| Error::InvalidParameter(e.to_string()))?;
    let p = (2.0 * dist.sf(t.abs())).min(1.0);
    Ok(TTest { t, p, df })
}
