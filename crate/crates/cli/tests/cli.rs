use std::fs;
use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use glfa::data::{load_matrix, save_matrix, SparseMatrix};
use glfa::synth::{low_rank, LowRankSpec};

fn glfa(dir: &Path, args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_glfa"))
        .current_dir(dir)
        .env_remove("RUST_LOG")
        .args(args)
        .output()
        .unwrap()
}

fn ok(dir: &Path, args: &[&str]) -> Output {
    let out = glfa(dir, args);
    assert!(
        out.status.success(),
        "glfa {args:?} failed: {}",
        String::from_utf8_lossy(&out.stderr)
    );
    out
}

fn triples(m: &SparseMatrix) -> Vec<(usize, usize, u64)> {
    let mut v: Vec<_> = m.entries().iter().map(|e| (e.row, e.col, e.value.to_bits())).collect();
    v.sort_unstable();
    v
}

fn star_fixture(dir: &Path, seed: u64) -> PathBuf {
    let spec = LowRankSpec {
        n_rows: 60,
        n_cols: 50,
        rank: 3,
        density: 0.15,
        noise: 0.1,
        stars: true,
    };
    let path = dir.join("stars.tsv");
    save_matrix(&low_rank(&spec, seed).unwrap(), &path).unwrap();
    path
}

#[test]
fn split_of_three_entries_covers_the_input() {
    let dir = tempfile::tempdir().unwrap();
    fs::write(dir.path().join("r.dat"), "1::10::5::0\n1::20::3::0\n2::10::4::0\n").unwrap();
    ok(dir.path(), &["split", "--input", "r.dat", "--fraction", "0.2", "--seed", "7", "--out", "o"]);
    let train = load_matrix(&dir.path().join("o/train.tsv")).unwrap();
    let test = load_matrix(&dir.path().join("o/test.tsv")).unwrap();
    assert_eq!((train.nnz(), test.nnz()), (1, 2));
    let mut union = triples(&train);
    union.extend(triples(&test));
    union.sort_unstable();
    assert_eq!(union.len(), 3);
    let ids = glfa::IdMap::load(&dir.path().join("o/ids.tsv")).unwrap();
    assert_eq!((ids.n_rows(), ids.n_cols()), (2, 2));
}

#[test]
fn single_round_glfa_writes_the_blf_model() {
    let dir = tempfile::tempdir().unwrap();
    star_fixture(dir.path(), 3);
    let common = ["--input", "stars.tsv", "--f", "4", "--seed", "11", "--n-rounds", "1", "--max-epochs", "50"];
    ok(dir.path(), &[&["train", "--out", "blf"], &common[..]].concat());
    ok(dir.path(), &[&["train", "--glfa", "--out", "glfa"], &common[..]].concat());
    let a = fs::read(dir.path().join("blf/model.txt")).unwrap();
    let b = fs::read(dir.path().join("glfa/model.txt")).unwrap();
    assert!(a == b, "model files differ");
}

#[test]
fn bench_favours_glfa_on_star_data() {
    let dir = tempfile::tempdir().unwrap();
    star_fixture(dir.path(), 5);
    ok(
        dir.path(),
        &[
            "bench", "--input", "stars.tsv", "--format", "matrix", "--fraction", "0.8", "--seeds",
            "5", "--f", "5", "--n-rounds", "3", "--max-epochs", "300", "--patience", "3",
            "--alphas", "0.05,0.1,0.2", "--r-min", "1", "--r-max", "5", "--out", "b",
        ],
    );
    let table = fs::read_to_string(dir.path().join("b/bench.tsv")).unwrap();
    let median: Vec<f64> = table
        .lines()
        .find(|l| l.starts_with("median"))
        .unwrap()
        .split('\t')
        .skip(2)
        .map(|v| v.parse().unwrap())
        .collect();
    assert!(median[1] <= median[0], "{table}");
    let tests = fs::read_to_string(dir.path().join("b/wilcoxon.tsv")).unwrap();
    assert!(tests.lines().nth(1).unwrap().starts_with("rmse\t"));
}

#[test]
fn flags_override_config_keys() {
    let dir = tempfile::tempdir().unwrap();
    star_fixture(dir.path(), 1);
    fs::write(dir.path().join("c.conf"), "input=stars.tsv\nf=3\nmax_epochs=7\nseed=2\n").unwrap();
    ok(dir.path(), &["train", "--config", "c.conf", "--f", "2", "--out", "o"]);
    let spec = fs::read_to_string(dir.path().join("o/runspec.conf")).unwrap();
    assert!(spec.lines().any(|l| l == "f=2"));
    assert!(spec.lines().any(|l| l == "max_epochs=7"));
    assert!(spec.lines().any(|l| l == "seed=2"));
    let model = fs::read_to_string(dir.path().join("o/model.txt")).unwrap();
    assert!(model.starts_with("# 60 50 2 "), "{}", model.lines().next().unwrap());
}

#[test]
fn rerun_from_resolved_spec_is_byte_identical() {
    let dir = tempfile::tempdir().unwrap();
    star_fixture(dir.path(), 2);
    ok(
        dir.path(),
        &["train", "--input", "stars.tsv", "--glfa", "--f", "3", "--max-epochs", "30", "--seed", "4", "--out", "run"],
    );
    let first: Vec<Vec<u8>> = ["model.txt", "report.tsv", "trajectory.tsv", "runspec.conf"]
        .iter()
        .map(|f| fs::read(dir.path().join("run").join(f)).unwrap())
        .collect();
    fs::copy(dir.path().join("run/runspec.conf"), dir.path().join("saved.conf")).unwrap();
    fs::remove_dir_all(dir.path().join("run")).unwrap();
    ok(dir.path(), &["train", "--config", "saved.conf"]);
    for (k, f) in ["model.txt", "report.tsv", "trajectory.tsv", "runspec.conf"].iter().enumerate() {
        assert!(fs::read(dir.path().join("run").join(f)).unwrap() == first[k], "{f} differs");
    }
}

#[test]
fn evaluate_and_predict_round_trip() {
    let dir = tempfile::tempdir().unwrap();
    star_fixture(dir.path(), 6);
    ok(dir.path(), &["split", "--input", "stars.tsv", "--format", "matrix", "--fraction", "0.8", "--out", "s"]);
    ok(dir.path(), &["train", "--input", "s/train.tsv", "--f", "3", "--max-epochs", "40", "--out", "t"]);
    let out = ok(dir.path(), &["evaluate", "--model", "t/model.txt", "--test", "s/test.tsv", "--input", "s/train.tsv", "--out", "e"]);
    assert!(String::from_utf8_lossy(&out.stdout).contains("RMSE"));
    let card = fs::read_to_string(dir.path().join("e/scorecard.tsv")).unwrap();
    assert!(card.starts_with("rmse\tmae\tn_scored\tn_cold\n"));

    fs::write(dir.path().join("pairs.tsv"), "0\t0\n59\t49\n").unwrap();
    ok(dir.path(), &["predict", "--model", "t/model.txt", "--pairs", "pairs.tsv", "--clamp", "--out", "p"]);
    let model = glfa::FactorModel::load(&dir.path().join("t/model.txt")).unwrap();
    let preds = fs::read_to_string(dir.path().join("p/predictions.tsv")).unwrap();
    for line in preds.lines().skip(1) {
        let f: Vec<&str> = line.split('\t').collect();
        let raw = model.predict(f[0].parse().unwrap(), f[1].parse().unwrap()).unwrap();
        let want = glfa::clamp_activation(raw, model.range()).unwrap();
        assert_eq!(f[2].parse::<f64>().unwrap(), want);
    }
}

#[test]
fn failures_have_distinct_exit_codes() {
    let dir = tempfile::tempdir().unwrap();
    let code = |args: &[&str]| glfa(dir.path(), args).status.code().unwrap();
    fs::write(dir.path().join("bad.tsv"), "not a matrix\n").unwrap();
    fs::write(dir.path().join("tiny.tsv"), "# rows=2 cols=2 nnz=2\n0\t0\t1\n1\t1\t5\n").unwrap();
    assert_eq!(code(&["train", "--input", "missing.tsv"]), 3);
    assert_eq!(code(&["train", "--input", "bad.tsv"]), 4);
    assert_eq!(code(&["train", "--input", "tiny.tsv", "--eta", "-1"]), 2);
    assert_eq!(code(&["train"]), 2);
    assert_eq!(code(&["train", "--bogus"]), 2);
    assert_eq!(code(&["train", "--input", "tiny.tsv", "--f", "1", "--eta", "1e300", "--max-epochs", "5", "--out", "d"]), 5);
}
