//! Synthetic low-rank rating matrices with known ground truth.

use rand::distr::{Distribution, Uniform};
use rand::seq::index;
use rand_distr::Normal;

use crate::data::{Entry, SparseMatrix};
use crate::error::{Error, Result};
use crate::rng;

/// Parameters of a planted low-rank instance.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LowRankSpec {
    pub n_rows: usize,
    pub n_cols: usize,
    pub rank: usize,
    /// Share of the cells that are observed.
    pub density: f64,
    /// Standard deviation of the additive Gaussian noise.
    pub noise: f64,
    /// Map values onto integer stars `1..=5` instead of keeping them real.
    pub stars: bool,
}

/// Draws factors uniformly on `(0, 1)`, observes `density · n_rows · n_cols`
/// distinct cells chosen uniformly, and sets each to `x_u · y_i + N(0, noise²)`.
///
/// With `stars`, a value `v` becomes `round(1 + 8v / rank)` clipped to `[1, 5]`,
/// which centres the ratings near 3.
pub fn low_rank(spec: &LowRankSpec, seed: u64) -> Result<SparseMatrix> {
    if spec.rank == 0 || !(spec.density > 0.0 && spec.density <= 1.0) || spec.noise.is_nan() || spec.noise < 0.0 {
        return Err(Error::InvalidArgument(format!("bad synthetic spec {spec:?}")));
    }
    let mut rng = rng::seeded(seed);
    let unit = Uniform::new(0.0, 1.0).expect("valid bounds");
    let x: Vec<f64> = (0..spec.n_rows * spec.rank).map(|_| unit.sample(&mut rng)).collect();
    let y: Vec<f64> = (0..spec.n_cols * spec.rank).map(|_| unit.sample(&mut rng)).collect();
    let noise = Normal::new(0.0, spec.noise).map_err(|e| Error::InvalidArgument(e.to_string()))?;
    let cells = spec.n_rows * spec.n_cols;
    let k = (spec.density * cells as f64).round() as usize;
    let mut picked = index::sample(&mut rng, cells, k).into_vec();
    picked.sort_unstable();
    let entries = picked
        .into_iter()
        .map(|c| {
            let (u, i) = (c / spec.n_cols, c % spec.n_cols);
            let xu = &x[u * spec.rank..(u + 1) * spec.rank];
            let yi = &y[i * spec.rank..(i + 1) * spec.rank];
            let clean: f64 = xu.iter().zip(yi).map(|(a, b)| a * b).sum();
            let v = clean + noise.sample(&mut rng);
            let v = if spec.stars {
                (1.0 + 8.0 * v / spec.rank as f64).round().clamp(1.0, 5.0)
            } else {
                v
            };
            Entry::new(u, i, v)
        })
        .collect();
    SparseMatrix::new(spec.n_rows, spec.n_cols, entries)
}
