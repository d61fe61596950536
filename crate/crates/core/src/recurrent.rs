//! Recurrent training: fit on observed data plus accumulated pseudo-labels,
//! then predict a fresh slice of the high-confidence HOI set, clamp it and
//! fold it into the pseudo-label pool for the next round.

use std::io::Write;

use rand::seq::index;
use rand::Rng;

use crate::data::{value_range, Entry, SparseMatrix, ValueRange};
use crate::error::{Error, Result};
use crate::graph::{hoi_census, HoiRecord, InteractionGraph};
use crate::model::{clamp_activation, init_model, objective, train_epoch, FactorModel, PseudoEntry, SgdHyper};
use crate::rng;

#[derive(Debug, Clone, PartialEq)]
pub struct TrainConfig {
    pub dim: usize,
    pub eta: f64,
    pub lambda: f64,
    pub alpha: f64,
    pub n_rounds: usize,
    pub max_epochs: usize,
    /// Early-stop threshold on the per-epoch drop in validation RMSE.
    pub tol: f64,
    /// Consecutive epochs improving by less than `tol` before a round stops.
    pub patience: usize,
    /// Share of the training entries held out for early stopping.
    pub val_fraction: f64,
    pub seed: u64,
    pub max_order: usize,
    pub warm_start: bool,
    pub range: Option<ValueRange>,
}

impl Default for TrainConfig {
    fn default() -> Self {
        TrainConfig {
            dim: 20,
            eta: 0.01,
            lambda: 0.05,
            alpha: 0.1,
            n_rounds: 3,
            max_epochs: 200,
            tol: 1e-5,
            patience: 1,
            val_fraction: 0.05,
            seed: 0,
            max_order: 2,
            warm_start: true,
            range: None,
        }
    }
}

impl TrainConfig {
    pub fn hyper(&self) -> SgdHyper {
        SgdHyper {
            eta: self.eta,
            lambda: self.lambda,
            alpha: self.alpha,
        }
    }

    pub fn validate(&self) -> Result<()> {
        self.hyper().validate()?;
        let bad = |msg: String| Err(Error::InvalidArgument(msg));
        if self.n_rounds == 0 {
            return bad("n_rounds must be at least 1".into());
        }
        if self.max_epochs == 0 {
            return bad("max_epochs must be at least 1".into());
        }
        if self.patience == 0 {
            return bad("patience must be at least 1".into());
        }
        if !(self.tol.is_finite() && self.tol >= 0.0) {
            return bad(format!("tol must be finite and non-negative, got {}", self.tol));
        }
        if !(self.val_fraction >= 0.0 && self.val_fraction < 0.5) {
            return bad(format!("val_fraction must be in [0, 0.5), got {}", self.val_fraction));
        }
        if self.max_order < 2 {
            return bad(format!("max_order must be at least 2, got {}", self.max_order));
        }
        Ok(())
    }
}

/// The accumulated pseudo-label pool Λ.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct LambdaSet {
    entries: Vec<PseudoEntry>,
    round_added: Vec<usize>,
}

impl LambdaSet {
    pub fn entries(&self) -> &[PseudoEntry] {
        &self.entries
    }

    pub fn round_added(&self) -> &[usize] {
        &self.round_added
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    fn extend(&mut self, round: usize, batch: Vec<PseudoEntry>) {
        self.round_added.extend(std::iter::repeat_n(round, batch.len()));
        self.entries.extend(batch);
    }
}

/// Takes this round's slice out of `remaining`.
///
/// Rounds before the last draw `⌈|remaining| / (N − n + 1)⌉` records uniformly
/// without replacement; the last round draws nothing since no later round
/// would consume its predictions. The slice is returned sorted by `(u, i)`.
pub fn select_sn<R: Rng + ?Sized>(
    remaining: &mut Vec<HoiRecord>,
    round: usize,
    n_rounds: usize,
    rng: &mut R,
) -> Result<Vec<HoiRecord>> {
    if round == 0 || round > n_rounds {
        return Err(Error::InvalidArgument(format!(
            "round {round} outside 1..={n_rounds}"
        )));
    }
    if round == n_rounds || remaining.is_empty() {
        return Ok(Vec::new());
    }
    let share = n_rounds - round + 1;
    let k = remaining.len().div_ceil(share);
    let mut picked = vec![false; remaining.len()];
    for j in index::sample(rng, remaining.len(), k) {
        picked[j] = true;
    }
    let mut chosen = Vec::with_capacity(k);
    let mut kept = Vec::with_capacity(remaining.len() - k);
    for (rec, take) in remaining.drain(..).zip(picked) {
        if take {
            chosen.push(rec);
        } else {
            kept.push(rec);
        }
    }
    *remaining = kept;
    Ok(chosen)
}

#[derive(Debug, Clone, PartialEq)]
pub struct RoundReport {
    pub round: usize,
    pub epochs: usize,
    pub objective: f64,
    pub val_rmse: Option<f64>,
    pub selected: usize,
    pub lambda_size: usize,
    /// Objective after each epoch.
    pub losses: Vec<f64>,
    /// Validation RMSE after each epoch (empty without a validation slice).
    pub val_trajectory: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct TrainReport {
    pub hoi_count: usize,
    pub fit_entries: usize,
    pub val_entries: usize,
    pub rounds: Vec<RoundReport>,
    pub lambda: LambdaSet,
}

impl TrainReport {
    /// One tab-separated record per round.
    pub fn write<W: Write>(&self, mut w: W) -> std::io::Result<()> {
        writeln!(
            w,
            "# hoi={} fit={} val={}",
            self.hoi_count, self.fit_entries, self.val_entries
        )?;
        writeln!(w, "round\tepochs\tobjective\tval_rmse\tselected\tlambda")?;
        for r in &self.rounds {
            let val = r.val_rmse.map_or_else(|| "NA".to_owned(), |v| format!("{v:.6}"));
            writeln!(
                w,
                "{}\t{}\t{:.6}\t{}\t{}\t{}",
                r.round, r.epochs, r.objective, val, r.selected, r.lambda_size
            )?;
        }
        Ok(())
    }

    /// Per-epoch objective and validation RMSE.
    pub fn write_trajectory<W: Write>(&self, mut w: W) -> std::io::Result<()> {
        writeln!(w, "round\tepoch\tobjective\tval_rmse")?;
        for r in &self.rounds {
            for (k, loss) in r.losses.iter().enumerate() {
                let val = r
                    .val_trajectory
                    .get(k)
                    .map_or_else(|| "NA".to_owned(), |v| format!("{v:.6}"));
                writeln!(w, "{}\t{}\t{:.6}\t{}", r.round, k + 1, loss, val)?;
            }
        }
        Ok(())
    }
}

fn rmse(model: &FactorModel, entries: &[Entry]) -> f64 {
    let sse: f64 = entries
        .iter()
        .map(|e| {
            let r = e.value - model.predict_unchecked(e.row, e.col);
            r * r
        })
        .sum();
    (sse / entries.len() as f64).sqrt()
}

/// Full recurrent training. See [`train_blf`] for the plain model.
pub fn train_glfa(train: &SparseMatrix, config: &TrainConfig) -> Result<(FactorModel, TrainReport)> {
    run(train, config, true)
}

/// The basic model: one round, no HOI mining.
pub fn train_blf(train: &SparseMatrix, config: &TrainConfig) -> Result<FactorModel> {
    let config = TrainConfig {
        n_rounds: 1,
        ..config.clone()
    };
    Ok(run(train, &config, false)?.0)
}

fn run(train: &SparseMatrix, config: &TrainConfig, mine: bool) -> Result<(FactorModel, TrainReport)> {
    config.validate()?;
    if train.is_empty() {
        return Err(Error::EmptyMatrix);
    }
    let hyper = config.hyper();
    let range = match config.range {
        Some(r) => r,
        None => value_range(train)?,
    };

    let n = train.nnz();
    let n_val = (config.val_fraction * n as f64).round() as usize;
    let (fit, val): (Vec<Entry>, Vec<Entry>) = if n_val == 0 {
        (train.entries().to_vec(), Vec::new())
    } else {
        let mut held = vec![false; n];
        let mut vrng = rng::stream(config.seed, rng::VALIDATION);
        for k in index::sample(&mut vrng, n, n_val) {
            held[k] = true;
        }
        let mut fit = Vec::with_capacity(n - n_val);
        let mut val = Vec::with_capacity(n_val);
        for (e, h) in train.entries().iter().zip(held) {
            if h {
                val.push(*e);
            } else {
                fit.push(*e);
            }
        }
        (fit, val)
    };
    if fit.is_empty() {
        return Err(Error::InvalidArgument("validation slice leaves nothing to fit".into()));
    }
    let mean = fit.iter().map(|e| e.value).sum::<f64>() / fit.len() as f64;

    // S is mined once from the whole training matrix, so no pseudo pair can
    // coincide with a validation entry.
    let mut remaining = if mine && config.n_rounds > 1 {
        let graph = InteractionGraph::build(train)?;
        hoi_census(&graph, config.max_order)?.high.into_records()
    } else {
        Vec::new()
    };
    let hoi_count = remaining.len();
    log::info!(
        "training on {} entries ({} held out), |S| = {hoi_count}",
        fit.len(),
        val.len()
    );

    let init_seed = |round: usize| {
        if round == 1 {
            rng::derive_seed(config.seed, rng::INIT)
        } else {
            rng::derive_seed(config.seed, &format!("{}/{round}", rng::INIT))
        }
    };
    let mut model = init_model(
        train.n_rows(),
        train.n_cols(),
        config.dim,
        init_seed(1),
        mean,
        range,
    )?;
    let mut shuffle = rng::stream(config.seed, rng::SHUFFLE);
    let mut selection = rng::stream(config.seed, rng::SELECTION);
    let mut lambda = LambdaSet::default();
    let mut rounds = Vec::with_capacity(config.n_rounds);

    for round in 1..=config.n_rounds {
        if round > 1 && !config.warm_start {
            model = init_model(
                train.n_rows(),
                train.n_cols(),
                config.dim,
                init_seed(round),
                mean,
                range,
            )?;
        }
        let mut losses = Vec::new();
        let mut val_trajectory = Vec::new();
        let mut best_val = f64::INFINITY;
        let mut best: Option<FactorModel> = None;
        let mut stalled = 0;
        for _ in 0..config.max_epochs {
            let loss = train_epoch(&mut model, &fit, lambda.entries(), &hyper, &mut shuffle)?;
            losses.push(loss);
            if !val.is_empty() {
                let v = rmse(&model, &val);
                val_trajectory.push(v);
                let improvement = best_val - v;
                if v < best_val {
                    best_val = v;
                    best = Some(model.clone());
                }
                if improvement < config.tol {
                    stalled += 1;
                    if stalled >= config.patience {
                        break;
                    }
                } else {
                    stalled = 0;
                }
            }
        }

        // The round ends on the epoch with the best validation RMSE.
        if let Some(b) = best {
            model = b;
        }
        let round_objective = objective(&model, &fit, lambda.entries(), &hyper);
        let round_val = (!val.is_empty()).then(|| rmse(&model, &val));

        let chosen = select_sn(&mut remaining, round, config.n_rounds, &mut selection)?;
        let batch = chosen
            .iter()
            .map(|r| {
                let raw = model.predict_unchecked(r.u, r.i);
                Ok(PseudoEntry {
                    u: r.u,
                    i: r.i,
                    value: clamp_activation(raw, range)?,
                })
            })
            .collect::<Result<Vec<_>>>()?;
        let selected = batch.len();
        lambda.extend(round, batch);

        log::info!(
            "round {round}: {} epochs, objective {:.4}, |S_n| = {selected}, |Λ| = {}",
            losses.len(),
            round_objective,
            lambda.len()
        );
        rounds.push(RoundReport {
            round,
            epochs: losses.len(),
            objective: round_objective,
            val_rmse: round_val,
            selected,
            lambda_size: lambda.len(),
            losses,
            val_trajectory,
        });
    }

    // Entities never visited by SGD keep only their random initialization;
    // zero them so scoring recognizes them as cold.
    let mut rows = vec![false; train.n_rows()];
    let mut cols = vec![false; train.n_cols()];
    for e in &fit {
        rows[e.row] = true;
        cols[e.col] = true;
    }
    for p in lambda.entries() {
        rows[p.u] = true;
        cols[p.i] = true;
    }
    model.zero_unmarked(&rows, &cols);

    let report = TrainReport {
        hoi_count,
        fit_entries: fit.len(),
        val_entries: val.len(),
        rounds,
        lambda,
    };
    Ok((model, report))
}
