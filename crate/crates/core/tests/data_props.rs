use std::collections::HashSet;
use std::io::Cursor;

use glfa::data::{
    load_matrix, parse_ratings, read_matrix, read_pairs, save_matrix, split, write_matrix, Entry,
    IdMap, RatingFormat, SparseMatrix,
};
use proptest::prelude::*;
use rand::Rng;

fn random_matrix(seed: u64, n_rows: usize, n_cols: usize, nnz: usize) -> SparseMatrix {
    let mut rng = glfa_oracles::rng(seed);
    let mut seen = HashSet::new();
    let mut entries = Vec::with_capacity(nnz);
    while entries.len() < nnz {
        let (u, i) = (rng.random_range(0..n_rows), rng.random_range(0..n_cols));
        if seen.insert((u, i)) {
            entries.push(Entry::new(u, i, rng.random_range(-10.0..10.0)));
        }
    }
    SparseMatrix::new(n_rows, n_cols, entries).unwrap()
}

fn cells(m: &SparseMatrix) -> Vec<(usize, usize, u64)> {
    let mut v: Vec<_> = m.entries().iter().map(|e| (e.row, e.col, e.value.to_bits())).collect();
    v.sort_unstable();
    v
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn split_partitions_the_entries(seed in any::<u64>(), nnz in 2usize..200, frac in 0.05f64..0.95) {
        let m = random_matrix(seed, 20, 20, nnz);
        let (train, test) = split(&m, frac, seed ^ 1).unwrap();
        prop_assert_eq!(train.nnz(), (frac * nnz as f64).round() as usize);
        prop_assert_eq!(train.nnz() + test.nnz(), nnz);
        prop_assert_eq!((train.n_rows(), train.n_cols()), (20, 20));
        let mut union = cells(&train);
        union.extend(cells(&test));
        union.sort_unstable();
        prop_assert_eq!(union, cells(&m));
        for e in test.entries() {
            prop_assert!(!train.contains(e.row, e.col));
        }
        prop_assert_eq!(split(&m, frac, seed ^ 1).unwrap(), (train, test));
    }

    #[test]
    fn matrix_text_round_trips(seed in any::<u64>(), nnz in 1usize..300) {
        let m = random_matrix(seed, 30, 17, nnz);
        let mut buf = Vec::new();
        write_matrix(&m, &mut buf).unwrap();
        prop_assert_eq!(read_matrix(Cursor::new(buf)).unwrap(), m);
    }

    #[test]
    fn parsers_never_panic(bytes in proptest::collection::vec(any::<u8>(), 0..400)) {
        for fmt in [RatingFormat::MovieLens, RatingFormat::Tsv, RatingFormat::Csv] {
            let _ = parse_ratings(Cursor::new(&bytes), fmt, false);
            let _ = parse_ratings(Cursor::new(&bytes), fmt, true);
        }
        let _ = read_matrix(Cursor::new(&bytes));
        let _ = read_pairs(Cursor::new(&bytes));
        let _ = IdMap::read(Cursor::new(&bytes));
    }

    #[test]
    fn ratings_round_trip_through_tokens(seed in any::<u64>()) {
        let mut rng = glfa_oracles::rng(seed);
        let mut text = String::new();
        let mut want = Vec::new();
        let mut seen = HashSet::new();
        for _ in 0..rng.random_range(1..60) {
            let (u, i) = (rng.random_range(0..9u32), rng.random_range(0..9u32));
            if !seen.insert((u, i)) {
                continue;
            }
            let v = rng.random_range(1..=5u32);
            text.push_str(&format!("user{u}::item{i}::{v}::978300760\n"));
            want.push((format!("user{u}"), format!("item{i}"), v as f64));
        }
        let r = parse_ratings(Cursor::new(text), RatingFormat::MovieLens, false).unwrap();
        prop_assert_eq!(r.matrix.nnz(), want.len());
        for (u, i, v) in want {
            let (row, col) = (r.ids.row_id(&u).unwrap(), r.ids.col_id(&i).unwrap());
            prop_assert_eq!(r.matrix.get(row, col), Some(v));
            prop_assert_eq!(r.ids.row_token(row), Some(u.as_str()));
        }
    }
}

#[test]
fn ids_follow_first_appearance() {
    let text = "b,x,1\na,y,2\nb,y,3\nc,x,4\n";
    let r = parse_ratings(Cursor::new(text), RatingFormat::Csv, false).unwrap();
    assert_eq!(
        ["b", "a", "c"].map(|t| r.ids.row_id(t).unwrap()),
        [0, 1, 2]
    );
    assert_eq!(["x", "y"].map(|t| r.ids.col_id(t).unwrap()), [0, 1]);
    assert_eq!((r.matrix.n_rows(), r.matrix.n_cols()), (3, 2));
}

#[test]
fn large_matrix_survives_a_file_round_trip() {
    let m = random_matrix(10_000, 400, 500, 10_000);
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("m.tsv");
    save_matrix(&m, &path).unwrap();
    assert_eq!(load_matrix(&path).unwrap(), m);
}

#[test]
fn id_map_survives_a_file_round_trip() {
    let text = "u9\ti3\t4\nu1\ti3\t2\nu9\ti7\t5\n";
    let r = parse_ratings(Cursor::new(text), RatingFormat::Tsv, false).unwrap();
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("ids.tsv");
    r.ids.save(&path).unwrap();
    let back = IdMap::load(&path).unwrap();
    for t in ["u9", "u1"] {
        assert_eq!(back.row_id(t), r.ids.row_id(t));
    }
    for t in ["i3", "i7"] {
        assert_eq!(back.col_id(t), r.ids.col_id(t));
    }
}

#[test]
fn loading_bad_files_fails_cleanly() {
    let dir = tempfile::tempdir().unwrap();
    let empty = dir.path().join("empty.tsv");
    std::fs::write(&empty, "").unwrap();
    assert!(load_matrix(&empty).is_err());
    assert!(load_matrix(&dir.path().join("missing.tsv")).is_err());
    let short = dir.path().join("short.tsv");
    std::fs::write(&short, "# rows=2 cols=2 nnz=2\n0\t0\t1\n").unwrap();
    assert!(load_matrix(&short).is_err());
}
