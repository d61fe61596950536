//! Latent factor model: embeddings, objective, SGD updates and clamping.

use std::fs::File;
use std::io::{BufRead, BufReader, BufWriter, Write};
use std::path::Path;

use rand::distr::Open01;
use rand::seq::SliceRandom;
use rand::Rng;

use crate::data::{Entry, ValueRange};
use crate::error::{Error, Result};
use crate::rng;

/// Row embeddings `X` (`n_rows x dim`) and column embeddings `Y` (`n_cols x dim`),
/// both stored row-major. Predictions are `X Yᵀ`.
#[derive(Debug, Clone, PartialEq)]
pub struct FactorModel {
    n_rows: usize,
    n_cols: usize,
    dim: usize,
    x: Vec<f64>,
    y: Vec<f64>,
    range: ValueRange,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SgdHyper {
    pub eta: f64,
    pub lambda: f64,
    pub alpha: f64,
}

impl SgdHyper {
    pub fn new(eta: f64, lambda: f64, alpha: f64) -> Result<Self> {
        let h = SgdHyper { eta, lambda, alpha };
        h.validate()?;
        Ok(h)
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.eta.is_finite() && self.eta > 0.0) {
            return Err(Error::InvalidArgument(format!(
                "learning rate must be positive and finite, got {}",
                self.eta
            )));
        }
        if !(self.lambda.is_finite() && self.lambda >= 0.0) {
            return Err(Error::InvalidArgument(format!(
                "regularization must be non-negative, got {}",
                self.lambda
            )));
        }
        if !(self.alpha.is_finite() && self.alpha >= 0.0) {
            return Err(Error::InvalidArgument(format!(
                "aggregation coefficient must be non-negative, got {}",
                self.alpha
            )));
        }
        Ok(())
    }
}

/// A clamped self-prediction for an unobserved pair.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PseudoEntry {
    pub u: usize,
    pub i: usize,
    pub value: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum EntryKind {
    Observed,
    Pseudo,
}

impl FactorModel {
    /// Wraps existing embeddings. Shapes and finiteness are checked.
    pub fn from_parts(
        n_rows: usize,
        n_cols: usize,
        dim: usize,
        x: Vec<f64>,
        y: Vec<f64>,
        range: ValueRange,
    ) -> Result<Self> {
        if dim == 0 {
            return Err(Error::InvalidArgument("embedding dimension must be >= 1".into()));
        }
        if x.len() != n_rows * dim || y.len() != n_cols * dim {
            return Err(Error::InvalidArgument(format!(
                "embedding shapes {}/{} do not match {n_rows}x{dim} and {n_cols}x{dim}",
                x.len(),
                y.len()
            )));
        }
        if let Some(v) = x.iter().chain(&y).find(|v| !v.is_finite()) {
            return Err(Error::NonFinite(*v));
        }
        Ok(FactorModel {
            n_rows,
            n_cols,
            dim,
            x,
            y,
            range,
        })
    }

    pub fn n_rows(&self) -> usize {
        self.n_rows
    }

    pub fn n_cols(&self) -> usize {
        self.n_cols
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn range(&self) -> ValueRange {
        self.range
    }

    pub fn row_factors(&self, u: usize) -> &[f64] {
        &self.x[u * self.dim..(u + 1) * self.dim]
    }

    pub fn col_factors(&self, i: usize) -> &[f64] {
        &self.y[i * self.dim..(i + 1) * self.dim]
    }

    pub fn row_factors_mut(&mut self, u: usize) -> &mut [f64] {
        &mut self.x[u * self.dim..(u + 1) * self.dim]
    }

    pub fn col_factors_mut(&mut self, i: usize) -> &mut [f64] {
        &mut self.y[i * self.dim..(i + 1) * self.dim]
    }

    fn check_ids(&self, u: usize, i: usize) -> Result<()> {
        if u >= self.n_rows || i >= self.n_cols {
            return Err(Error::OutOfBounds {
                row: u,
                col: i,
                n_rows: self.n_rows,
                n_cols: self.n_cols,
            });
        }
        Ok(())
    }

    /// Raw (unclamped) prediction `x_u · y_i`.
    pub fn predict(&self, u: usize, i: usize) -> Result<f64> {
        self.check_ids(u, i)?;
        Ok(self.predict_unchecked(u, i))
    }

    pub(crate) fn predict_unchecked(&self, u: usize, i: usize) -> f64 {
        dot(self.row_factors(u), self.col_factors(i))
    }

    /// `‖X‖²_F + ‖Y‖²_F`
    pub fn squared_norm(&self) -> f64 {
        self.x.iter().chain(&self.y).map(|v| v * v).sum()
    }

    /// Applies one update of the rule for `kind` on the entry `(u, i, value)`.
    ///
    /// The residual is taken once from the current embeddings and both rows are
    /// then updated together. For pseudo entries the residual is scaled by `alpha`.
    pub fn sgd_step(
        &mut self,
        u: usize,
        i: usize,
        value: f64,
        kind: EntryKind,
        hyper: &SgdHyper,
    ) -> Result<()> {
        self.check_ids(u, i)?;
        if !value.is_finite() {
            return Err(Error::NonFinite(value));
        }
        let dim = self.dim;
        let xu = &mut self.x[u * dim..(u + 1) * dim];
        let yi = &mut self.y[i * dim..(i + 1) * dim];
        let residual = value - dot(xu, yi);
        let g = match kind {
            EntryKind::Observed => residual,
            EntryKind::Pseudo => hyper.alpha * residual,
        };
        let (eta, lambda) = (hyper.eta, hyper.lambda);
        let mut finite = true;
        for (xv, yv) in xu.iter_mut().zip(yi.iter_mut()) {
            let (xo, yo) = (*xv, *yv);
            *xv = xo + eta * (yo * g - lambda * xo);
            *yv = yo + eta * (xo * g - lambda * yo);
            finite &= xv.is_finite() && yv.is_finite();
        }
        if !finite {
            return Err(Error::Divergence { row: u, col: i, eta });
        }
        Ok(())
    }

    /// Zeroes rows of `X` and `Y` whose flag is false.
    pub(crate) fn zero_unmarked(&mut self, rows: &[bool], cols: &[bool]) {
        for (u, &keep) in rows.iter().enumerate() {
            if !keep {
                self.row_factors_mut(u).fill(0.0);
            }
        }
        for (i, &keep) in cols.iter().enumerate() {
            if !keep {
                self.col_factors_mut(i).fill(0.0);
            }
        }
    }

    /// Writes `# rows cols f r_min r_max`, then the rows of `X`, then the rows of `Y`.
    /// Values are printed in shortest round-trip form so a reload is bit-exact.
    pub fn write<W: Write>(&self, mut w: W) -> std::io::Result<()> {
        writeln!(
            w,
            "# {} {} {} {:?} {:?}",
            self.n_rows,
            self.n_cols,
            self.dim,
            self.range.min(),
            self.range.max()
        )?;
        for row in self.x.chunks(self.dim).chain(self.y.chunks(self.dim)) {
            let mut first = true;
            for v in row {
                if !first {
                    w.write_all(b"\t")?;
                }
                first = false;
                write!(w, "{v:e}")?;
            }
            w.write_all(b"\n")?;
        }
        Ok(())
    }

    pub fn read<R: BufRead>(reader: R) -> Result<Self> {
        let mut lines = reader.lines().enumerate();
        let (n_rows, n_cols, dim, range) = loop {
            let Some((k, line)) = lines.next() else {
                return Err(Error::parse(0, "empty model file"));
            };
            let line = line.map_err(|e| Error::parse(k + 1, e.to_string()))?;
            if line.trim().is_empty() {
                continue;
            }
            break parse_model_header(&line, k + 1)?;
        };
        // Guard against headers that would make us allocate absurd buffers.
        let total = n_rows
            .checked_add(n_cols)
            .and_then(|n| n.checked_mul(dim))
            .ok_or_else(|| Error::parse(1, "model dimensions overflow"))?;
        let mut values: Vec<f64> = Vec::with_capacity(total.min(1 << 24));
        let mut rows_read = 0usize;
        for (k, line) in lines {
            let lineno = k + 1;
            let line = line.map_err(|e| Error::parse(lineno, e.to_string()))?;
            if line.trim().is_empty() {
                continue;
            }
            if rows_read == n_rows + n_cols {
                return Err(Error::parse(lineno, "trailing data after embeddings"));
            }
            let before = values.len();
            for tok in line.split('\t') {
                let v: f64 = tok
                    .parse()
                    .map_err(|_| Error::parse(lineno, format!("bad value {tok:?}")))?;
                if !v.is_finite() {
                    return Err(Error::parse(lineno, format!("value {tok:?} is not finite")));
                }
                values.push(v);
            }
            if values.len() - before != dim {
                return Err(Error::parse(
                    lineno,
                    format!("expected {dim} values, found {}", values.len() - before),
                ));
            }
            rows_read += 1;
        }
        if rows_read != n_rows + n_cols {
            return Err(Error::parse(
                0,
                format!("expected {} embedding rows, found {rows_read}", n_rows + n_cols),
            ));
        }
        let y = values.split_off(n_rows * dim);
        FactorModel::from_parts(n_rows, n_cols, dim, values, y, range)
    }

    pub fn save(&self, path: &Path) -> Result<()> {
        let file = File::create(path).map_err(|e| Error::io(path, e))?;
        let mut w = BufWriter::new(file);
        self.write(&mut w)
            .and_then(|_| w.flush())
            .map_err(|e| Error::io(path, e))
    }

    pub fn load(path: &Path) -> Result<Self> {
        let file = File::open(path).map_err(|e| Error::io(path, e))?;
        Self::read(BufReader::new(file))
    }
}

fn parse_model_header(line: &str, lineno: usize) -> Result<(usize, usize, usize, ValueRange)> {
    let body = line
        .strip_prefix('#')
        .ok_or_else(|| Error::parse(lineno, "missing `# rows cols f r_min r_max` header"))?;
    let fields: Vec<&str> = body.split_whitespace().collect();
    if fields.len() != 5 {
        return Err(Error::parse(lineno, "header needs rows, cols, f, r_min and r_max"));
    }
    let int = |s: &str| {
        s.parse::<usize>()
            .map_err(|_| Error::parse(lineno, format!("bad header count {s:?}")))
    };
    let real = |s: &str| {
        s.parse::<f64>()
            .map_err(|_| Error::parse(lineno, format!("bad header bound {s:?}")))
    };
    let range = ValueRange::new(real(fields[3])?, real(fields[4])?)?;
    Ok((int(fields[0])?, int(fields[1])?, int(fields[2])?, range))
}

#[inline]
pub(crate) fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(p, q)| p * q).sum()
}

/// Uniform positive initialization on `(0, sqrt(|mean| / dim))`.
///
/// The expected initial prediction is `|mean| / 4`. A zero mean falls back to
/// a unit scale. `dim` may not exceed half of the smaller side; above a tenth
/// a warning is logged.
pub fn init_model(
    n_rows: usize,
    n_cols: usize,
    dim: usize,
    seed: u64,
    mean: f64,
    range: ValueRange,
) -> Result<FactorModel> {
    let smaller = n_rows.min(n_cols);
    if dim == 0 || dim > smaller / 2 {
        return Err(Error::InvalidArgument(format!(
            "embedding dimension {dim} must be in [1, {}] for a {n_rows}x{n_cols} matrix",
            smaller / 2
        )));
    }
    if dim > smaller / 10 {
        log::warn!("embedding dimension {dim} is large relative to min(rows, cols) = {smaller}");
    }
    if !mean.is_finite() {
        return Err(Error::NonFinite(mean));
    }
    let level = if mean == 0.0 { 1.0 } else { mean.abs() };
    let scale = (level / dim as f64).sqrt();
    let mut rng = rng::seeded(seed);
    let mut draw = |n: usize| -> Vec<f64> {
        (0..n)
            .map(|_| scale * rng.sample::<f64, _>(Open01))
            .collect()
    };
    let x = draw(n_rows * dim);
    let y = draw(n_cols * dim);
    FactorModel::from_parts(n_rows, n_cols, dim, x, y, range)
}

/// Resets out-of-range predictions through a logistic squash.
///
/// Below `r_min` the result is `r_min + σ(r)`, above `r_max` it is
/// `r_max · σ(r)`, and in range the prediction passes through.
pub fn clamp_activation(prediction: f64, range: ValueRange) -> Result<f64> {
    if !prediction.is_finite() {
        return Err(Error::NonFinite(prediction));
    }
    let sigmoid = 1.0 / (1.0 + (-prediction).exp());
    Ok(if prediction < range.min() {
        range.min() + sigmoid
    } else if prediction > range.max() {
        range.max() * sigmoid
    } else {
        prediction
    })
}

/// Regularized objective over observed and pseudo entries:
/// `½Σ(r − r̂)² + ½αΣ(r̄ − r̂)² + ½λ(‖X‖² + ‖Y‖²)`.
pub fn objective(
    model: &FactorModel,
    observed: &[Entry],
    pseudo: &[PseudoEntry],
    hyper: &SgdHyper,
) -> f64 {
    let fit: f64 = observed
        .iter()
        .map(|e| {
            let r = e.value - model.predict_unchecked(e.row, e.col);
            r * r
        })
        .sum();
    let aux: f64 = pseudo
        .iter()
        .map(|p| {
            let r = p.value - model.predict_unchecked(p.u, p.i);
            r * r
        })
        .sum();
    0.5 * fit + 0.5 * hyper.alpha * aux + 0.5 * hyper.lambda * model.squared_norm()
}

/// One pass over `observed ∪ pseudo` in a shuffled order drawn from `rng`.
/// Returns the objective after the pass.
pub fn train_epoch<R: Rng + ?Sized>(
    model: &mut FactorModel,
    observed: &[Entry],
    pseudo: &[PseudoEntry],
    hyper: &SgdHyper,
    rng: &mut R,
) -> Result<f64> {
    if observed.is_empty() {
        return Err(Error::EmptyMatrix);
    }
    let mut order: Vec<usize> = (0..observed.len() + pseudo.len()).collect();
    order.shuffle(rng);
    for k in order {
        if let Some(e) = observed.get(k) {
            model.sgd_step(e.row, e.col, e.value, EntryKind::Observed, hyper)?;
        } else {
            let p = &pseudo[k - observed.len()];
            model.sgd_step(p.u, p.i, p.value, EntryKind::Pseudo, hyper)?;
        }
    }
    Ok(objective(model, observed, pseudo, hyper))
}
