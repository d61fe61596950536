//! Held-out scoring and the Wilcoxon signed-ranks comparison.

use std::fmt;
use std::io::Write;

use statrs::distribution::{ContinuousCDF, Normal};

use crate::data::SparseMatrix;
use crate::error::{Error, Result};
use crate::model::FactorModel;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Scorecard {
    pub rmse: f64,
    pub mae: f64,
    pub n_scored: usize,
    /// Entries whose row or column embedding is all zero (never trained),
    /// predicted with the fallback value.
    pub n_cold: usize,
}

impl Scorecard {
    pub fn write_tsv<W: Write>(&self, mut w: W) -> std::io::Result<()> {
        writeln!(w, "rmse\tmae\tn_scored\tn_cold")?;
        writeln!(
            w,
            "{:.6}\t{:.6}\t{}\t{}",
            self.rmse, self.mae, self.n_scored, self.n_cold
        )
    }
}

impl fmt::Display for Scorecard {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(f, "RMSE      {:>12.6}", self.rmse)?;
        writeln!(f, "MAE       {:>12.6}", self.mae)?;
        writeln!(f, "scored    {:>12}", self.n_scored)?;
        write!(f, "cold      {:>12}", self.n_cold)
    }
}

/// RMSE and MAE of raw predictions over every test entry.
///
/// Rows or columns with an all-zero embedding get `fallback` instead of a
/// model prediction and are counted in `n_cold`.
pub fn score(model: &FactorModel, test: &SparseMatrix, fallback: f64) -> Result<Scorecard> {
    if test.is_empty() {
        return Err(Error::EmptyMatrix);
    }
    if test.n_rows() > model.n_rows() || test.n_cols() > model.n_cols() {
        return Err(Error::InvalidArgument(format!(
            "test matrix {}x{} exceeds model {}x{}",
            test.n_rows(),
            test.n_cols(),
            model.n_rows(),
            model.n_cols()
        )));
    }
    let cold_rows: Vec<bool> = (0..model.n_rows())
        .map(|u| model.row_factors(u).iter().all(|&v| v == 0.0))
        .collect();
    let cold_cols: Vec<bool> = (0..model.n_cols())
        .map(|i| model.col_factors(i).iter().all(|&v| v == 0.0))
        .collect();
    let (mut sse, mut sae, mut n_cold) = (0.0, 0.0, 0usize);
    for e in test.entries() {
        let pred = if cold_rows[e.row] || cold_cols[e.col] {
            n_cold += 1;
            fallback
        } else {
            model.predict_unchecked(e.row, e.col)
        };
        let err = e.value - pred;
        sse += err * err;
        sae += err.abs();
    }
    let n = test.nnz() as f64;
    Ok(Scorecard {
        rmse: (sse / n).sqrt(),
        mae: sae / n,
        n_scored: test.nnz(),
        n_cold,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Alternative {
    TwoSided,
    /// `a` tends to exceed `b` (large R+).
    Greater,
    /// `a` tends to fall below `b` (large R−).
    Less,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct WilcoxonResult {
    /// Rank sum of the positive differences `a − b`.
    pub r_plus: f64,
    pub r_minus: f64,
    /// Pairs left after dropping zero differences.
    pub n: usize,
    pub p_value: f64,
    pub exact: bool,
}

/// Largest sample for which the exact null distribution is used.
pub const EXACT_LIMIT: usize = 25;

/// Wilcoxon signed-ranks test on the paired differences `a − b`.
///
/// Zero differences are dropped, tied magnitudes share their average rank.
/// The p-value is exact (by enumerating the rank-sum distribution, ties
/// included) up to [`EXACT_LIMIT`] pairs and uses the tie-corrected normal
/// approximation with continuity correction above that.
pub fn wilcoxon_signed_rank(a: &[f64], b: &[f64], alternative: Alternative) -> Result<WilcoxonResult> {
    if a.len() != b.len() {
        return Err(Error::InvalidArgument(format!(
            "paired samples differ in length: {} vs {}",
            a.len(),
            b.len()
        )));
    }
    if a.len() < 5 {
        return Err(Error::InvalidArgument(format!(
            "need at least 5 pairs, got {}",
            a.len()
        )));
    }
    let mut diffs: Vec<f64> = a.iter().zip(b).map(|(x, y)| x - y).collect();
    if let Some(d) = diffs.iter().find(|d| !d.is_finite()) {
        return Err(Error::NonFinite(*d));
    }
    diffs.retain(|&d| d != 0.0);
    if diffs.is_empty() {
        return Err(Error::UndefinedTest);
    }
    let n = diffs.len();
    let ranks = average_ranks(&diffs);
    let r_plus: f64 = diffs
        .iter()
        .zip(&ranks)
        .filter(|(d, _)| **d > 0.0)
        .map(|(_, r)| r)
        .sum();
    let total = (n * (n + 1)) as f64 / 2.0;
    let r_minus = total - r_plus;

    let (p_value, exact) = if n <= EXACT_LIMIT {
        (exact_p(&ranks, r_plus, alternative), true)
    } else {
        (normal_p(&ranks, r_plus, alternative), false)
    };
    Ok(WilcoxonResult {
        r_plus,
        r_minus,
        n,
        p_value,
        exact,
    })
}

/// Average ranks of `|d|`, in input order.
fn average_ranks(diffs: &[f64]) -> Vec<f64> {
    let mut order: Vec<usize> = (0..diffs.len()).collect();
    order.sort_by(|&i, &j| diffs[i].abs().total_cmp(&diffs[j].abs()));
    let mut ranks = vec![0.0; diffs.len()];
    let mut start = 0;
    while start < order.len() {
        let mut end = start + 1;
        while end < order.len() && diffs[order[end]].abs() == diffs[order[start]].abs() {
            end += 1;
        }
        // positions start..end hold ranks start+1..=end
        let avg = (start + 1 + end) as f64 / 2.0;
        for &k in &order[start..end] {
            ranks[k] = avg;
        }
        start = end;
    }
    ranks
}

fn exact_p(ranks: &[f64], r_plus: f64, alternative: Alternative) -> f64 {
    // Average ranks are multiples of 1/2, so doubled ranks are integers.
    let doubled: Vec<usize> = ranks.iter().map(|r| (r * 2.0).round() as usize).collect();
    let max: usize = doubled.iter().sum();
    let mut counts = vec![0.0f64; max + 1];
    counts[0] = 1.0;
    let mut reach = 0;
    for &w in &doubled {
        for s in (0..=reach).rev() {
            if counts[s] != 0.0 {
                counts[s + w] += counts[s];
            }
        }
        reach += w;
    }
    let total = 2f64.powi(ranks.len() as i32);
    let observed = (r_plus * 2.0).round() as usize;
    let upper: f64 = counts[observed..].iter().sum::<f64>() / total;
    let lower: f64 = counts[..=observed].iter().sum::<f64>() / total;
    match alternative {
        Alternative::Greater => upper,
        Alternative::Less => lower,
        Alternative::TwoSided => (2.0 * upper.min(lower)).min(1.0),
    }
}

fn normal_p(ranks: &[f64], r_plus: f64, alternative: Alternative) -> f64 {
    let n = ranks.len() as f64;
    let mean = n * (n + 1.0) / 4.0;
    let mut sorted = ranks.to_vec();
    sorted.sort_by(f64::total_cmp);
    let mut tie_term = 0.0;
    let mut k = 0;
    while k < sorted.len() {
        let mut j = k + 1;
        while j < sorted.len() && sorted[j] == sorted[k] {
            j += 1;
        }
        let t = (j - k) as f64;
        tie_term += t * t * t - t;
        k = j;
    }
    let var = n * (n + 1.0) * (2.0 * n + 1.0) / 24.0 - tie_term / 48.0;
    let sd = var.sqrt();
    let normal = Normal::standard();
    let upper = 1.0 - normal.cdf((r_plus - mean - 0.5) / sd);
    let lower = normal.cdf((r_plus - mean + 0.5) / sd);
    match alternative {
        Alternative::Greater => upper,
        Alternative::Less => lower,
        Alternative::TwoSided => (2.0 * upper.min(lower)).min(1.0),
    }
}
