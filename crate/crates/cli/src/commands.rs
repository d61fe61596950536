use std::fs::{self, File};
use std::io::{self, BufReader, BufWriter, Write};
use std::path::{Path, PathBuf};

use anyhow::{anyhow, bail, Context, Result};
use glfa::data::{load_matrix, load_ratings, save_matrix, split};
use glfa::graph::hoi_census;
use glfa::{
    clamp_activation, rng, score, train_glfa, wilcoxon_signed_rank, Alternative, Command, Error,
    FactorModel, IdMap, InputFormat, RunSpec, SparseMatrix, TrainConfig, TrainReport,
};
use rayon::prelude::*;

pub fn run(spec: &RunSpec) -> Result<()> {
    fs::create_dir_all(&spec.out)
        .map_err(|e| Error::Io { path: spec.out.clone(), source: e })?;
    write_file(&spec.out.join("runspec.conf"), |w| {
        w.write_all(spec.to_config_string().as_bytes())
    })?;
    match spec.command {
        Command::Split => split_cmd(spec),
        Command::HoiStats => hoi_stats(spec),
        Command::Train => train(spec),
        Command::Evaluate => evaluate(spec),
        Command::Predict => predict(spec),
        Command::Bench => bench(spec),
    }
}

fn required<'a>(path: &'a Option<PathBuf>, flag: &str) -> Result<&'a Path> {
    path.as_deref()
        .ok_or_else(|| Error::InvalidArgument(format!("--{flag} is required")).into())
}

fn write_file(path: &Path, body: impl FnOnce(&mut BufWriter<File>) -> io::Result<()>) -> Result<()> {
    let io_err = |e| Error::Io { path: path.to_owned(), source: e };
    let mut w = BufWriter::new(File::create(path).map_err(io_err)?);
    body(&mut w).and_then(|_| w.flush()).map_err(io_err)?;
    Ok(())
}

/// Reads `path` as a canonical matrix or as raw ratings per the spec's format.
fn load_input(spec: &RunSpec, path: &Path) -> Result<(SparseMatrix, Option<IdMap>)> {
    Ok(match spec.format {
        InputFormat::Matrix => (load_matrix(path)?, None),
        InputFormat::Ratings(fmt) => {
            let r = load_ratings(path, fmt, spec.has_header)?;
            (r.matrix, Some(r.ids))
        }
    })
}

fn split_cmd(spec: &RunSpec) -> Result<()> {
    let (matrix, ids) = load_input(spec, required(&spec.input, "input")?)?;
    let seed = rng::derive_seed(spec.train.seed, rng::SPLIT);
    let (train, test) = split(&matrix, spec.fraction, seed)?;
    save_matrix(&train, &spec.out.join("train.tsv"))?;
    save_matrix(&test, &spec.out.join("test.tsv"))?;
    if let Some(ids) = ids {
        ids.save(&spec.out.join("ids.tsv"))?;
    }
    println!(
        "{} entries: {} train, {} test ({} x {})",
        matrix.nnz(),
        train.nnz(),
        test.nnz(),
        matrix.n_rows(),
        matrix.n_cols()
    );
    Ok(())
}

fn hoi_stats(spec: &RunSpec) -> Result<()> {
    let (matrix, _) = load_input(spec, required(&spec.input, "input")?)?;
    let graph = glfa::build_graph(&matrix)?;
    let census = hoi_census(&graph, spec.train.max_order)?;
    write_file(&spec.out.join("hoi.tsv"), |w| {
        writeln!(w, "u\ti\torder")?;
        for r in census.high.records() {
            writeln!(w, "{}\t{}\t{}", r.u, r.i, r.order)?;
        }
        Ok(())
    })?;
    let mut summary = String::from("order\thigh\tlow\n");
    for p in 2..census.high_by_order.len() {
        summary.push_str(&format!(
            "{p}\t{}\t{}\n",
            census.high_by_order[p], census.low_by_order[p]
        ));
    }
    summary.push_str(&format!(
        "total\t{}\t{}\n",
        census.high.len(),
        census.low_count()
    ));
    write_file(&spec.out.join("hoi_summary.tsv"), |w| w.write_all(summary.as_bytes()))?;
    print!("{summary}");
    Ok(())
}

/// BLF is the single-round run; GLFA uses the configured rounds.
fn fit(train: &SparseMatrix, cfg: &TrainConfig, glfa: bool) -> Result<(FactorModel, TrainReport)> {
    let cfg = if glfa {
        cfg.clone()
    } else {
        TrainConfig { n_rounds: 1, ..cfg.clone() }
    };
    Ok(train_glfa(train, &cfg)?)
}

fn train(spec: &RunSpec) -> Result<()> {
    let (matrix, ids) = load_input(spec, required(&spec.input, "input")?)?;
    let (model, report) = fit(&matrix, &spec.train, spec.glfa)?;
    model.save(&spec.out.join("model.txt"))?;
    write_file(&spec.out.join("report.tsv"), |w| report.write(w))?;
    write_file(&spec.out.join("trajectory.tsv"), |w| report.write_trajectory(w))?;
    if let Some(ids) = ids {
        ids.save(&spec.out.join("ids.tsv"))?;
    }
    report.write(io::stdout().lock())?;
    Ok(())
}

fn evaluate(spec: &RunSpec) -> Result<()> {
    let model = FactorModel::load(required(&spec.model, "model")?)?;
    let test = load_matrix(required(&spec.test, "test")?)?;
    let fallback = match &spec.input {
        Some(path) => load_input(spec, path)?
            .0
            .mean()
            .ok_or(Error::EmptyMatrix)?,
        None => {
            let r = model.range();
            log::warn!("no --input given; cold entries fall back to the range midpoint");
            0.5 * (r.min() + r.max())
        }
    };
    let card = score(&model, &test, fallback)?;
    write_file(&spec.out.join("scorecard.tsv"), |w| card.write_tsv(w))?;
    println!("{card}");
    Ok(())
}

fn predict(spec: &RunSpec) -> Result<()> {
    let model = FactorModel::load(required(&spec.model, "model")?)?;
    let pairs_path = required(&spec.pairs, "pairs")?;
    let file = File::open(pairs_path).map_err(|e| Error::Io {
        path: pairs_path.to_owned(),
        source: e,
    })?;
    let pairs = glfa::data::read_pairs(BufReader::new(file))?;
    let ids = spec.ids.as_deref().map(IdMap::load).transpose()?;
    let lookup = |tok: &str, row: bool| -> Result<usize> {
        let id = match &ids {
            Some(m) if row => m.row_id(tok),
            Some(m) => m.col_id(tok),
            None => tok.parse().ok(),
        };
        id.ok_or_else(|| {
            Error::InvalidArgument(format!(
                "unknown {} {tok:?}",
                if row { "row" } else { "column" }
            ))
            .into()
        })
    };
    let mut lines = String::from("row\tcol\tprediction\n");
    for (r, c) in &pairs {
        let raw = model.predict(lookup(r, true)?, lookup(c, false)?)?;
        let value = if spec.clamp {
            clamp_activation(raw, model.range())?
        } else {
            raw
        };
        lines.push_str(&format!("{r}\t{c}\t{value}\n"));
    }
    write_file(&spec.out.join("predictions.tsv"), |w| w.write_all(lines.as_bytes()))?;
    println!("{} predictions", pairs.len());
    Ok(())
}

struct BenchRow {
    seed: u64,
    alpha: f64,
    blf: glfa::Scorecard,
    glfa: glfa::Scorecard,
}

fn bench_seed(matrix: &SparseMatrix, spec: &RunSpec, seed: u64) -> Result<BenchRow> {
    let (train, test) = split(matrix, spec.fraction, rng::derive_seed(seed, rng::SPLIT))?;
    let fallback = train.mean().ok_or(Error::EmptyMatrix)?;
    let cfg = TrainConfig { seed, ..spec.train.clone() };
    let (blf, _) = fit(&train, &cfg, false)?;

    let mut best: Option<(f64, f64, FactorModel)> = None;
    for &alpha in &spec.alphas {
        let (model, report) = fit(&train, &TrainConfig { alpha, ..cfg.clone() }, true)?;
        let val = report.rounds.last().and_then(|r| r.val_rmse).unwrap_or(f64::INFINITY);
        log::info!("seed {seed}: alpha {alpha} validation RMSE {val:.6}");
        if best.as_ref().is_none_or(|(v, _, _)| val < *v) {
            best = Some((val, alpha, model));
        }
    }
    let (_, alpha, model) = best.ok_or_else(|| anyhow!("no alpha candidates"))?;
    Ok(BenchRow {
        seed,
        alpha,
        blf: score(&blf, &test, fallback)?,
        glfa: score(&model, &test, fallback)?,
    })
}

fn bench(spec: &RunSpec) -> Result<()> {
    if spec.alphas.len() > 1 && spec.train.val_fraction == 0.0 {
        bail!(Error::InvalidArgument(
            "choosing among several alphas needs --val-fraction > 0".into()
        ));
    }
    if spec.train.n_rounds < 2 {
        log::warn!("n_rounds = 1 makes GLFA identical to BLF");
    }
    let (matrix, _) = load_input(spec, required(&spec.input, "input")?)?;
    let seeds: Vec<u64> = (0..spec.seeds as u64).map(|k| spec.train.seed + k).collect();
    let rows = seeds
        .par_iter()
        .map(|&s| bench_seed(&matrix, spec, s).with_context(|| format!("seed {s}")))
        .collect::<Result<Vec<_>>>()?;

    let mut table = String::from("seed\talpha\tblf_rmse\tglfa_rmse\tblf_mae\tglfa_mae\n");
    for r in &rows {
        table.push_str(&format!(
            "{}\t{}\t{:.6}\t{:.6}\t{:.6}\t{:.6}\n",
            r.seed, r.alpha, r.blf.rmse, r.glfa.rmse, r.blf.mae, r.glfa.mae
        ));
    }
    let blf_rmse: Vec<f64> = rows.iter().map(|r| r.blf.rmse).collect();
    let glfa_rmse: Vec<f64> = rows.iter().map(|r| r.glfa.rmse).collect();
    let blf_mae: Vec<f64> = rows.iter().map(|r| r.blf.mae).collect();
    let glfa_mae: Vec<f64> = rows.iter().map(|r| r.glfa.mae).collect();
    table.push_str(&format!(
        "median\t-\t{:.6}\t{:.6}\t{:.6}\t{:.6}\n",
        median(&blf_rmse),
        median(&glfa_rmse),
        median(&blf_mae),
        median(&glfa_mae)
    ));
    write_file(&spec.out.join("bench.tsv"), |w| w.write_all(table.as_bytes()))?;
    print!("{table}");

    // Differences are BLF − GLFA, so a large R+ favours GLFA.
    let mut tests = String::from("metric\tr_plus\tr_minus\tn\tp_value\texact\n");
    for (name, a, b) in [("rmse", &blf_rmse, &glfa_rmse), ("mae", &blf_mae, &glfa_mae)] {
        match wilcoxon_signed_rank(a, b, Alternative::Greater) {
            Ok(w) => tests.push_str(&format!(
                "{name}\t{}\t{}\t{}\t{:.6}\t{}\n",
                w.r_plus, w.r_minus, w.n, w.p_value, w.exact
            )),
            Err(e) => {
                log::warn!("{name}: no Wilcoxon test: {e}");
                tests.push_str(&format!("{name}\tNA\tNA\tNA\tNA\tNA\n"));
            }
        }
    }
    write_file(&spec.out.join("wilcoxon.tsv"), |w| w.write_all(tests.as_bytes()))?;
    print!("{tests}");
    Ok(())
}

fn median(values: &[f64]) -> f64 {
    let mut v = values.to_vec();
    v.sort_by(f64::total_cmp);
    let n = v.len();
    if n % 2 == 1 {
        v[n / 2]
    } else {
        0.5 * (v[n / 2 - 1] + v[n / 2])
    }
}
