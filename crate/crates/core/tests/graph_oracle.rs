use std::path::Path;

use glfa::data::{load_ratings, Entry, RatingFormat, SparseMatrix};
use glfa::graph::{
    build_graph, classify_confidence, high_confidence_set, hoi_census, hoi_order, Confidence,
    InteractionGraph,
};
use glfa_oracles::{brute_high_confidence, brute_high_set, brute_order, SmallGraph};
use proptest::prelude::*;
use rand::Rng;

fn to_matrix(g: &SmallGraph) -> SparseMatrix {
    let entries = g
        .triples()
        .into_iter()
        .map(|(u, i, w)| Entry::new(u, i, w))
        .collect();
    SparseMatrix::new(g.n_users, g.n_items, entries).unwrap()
}

fn fig2() -> (SparseMatrix, glfa::IdMap) {
    let path = Path::new(env!("CARGO_MANIFEST_DIR")).join("tests/fixtures/fig2.tsv");
    let r = load_ratings(&path, RatingFormat::Tsv, false).unwrap();
    (r.matrix, r.ids)
}

fn id(ids: &glfa::IdMap, u: &str, i: &str) -> (usize, usize) {
    (ids.row_id(u).unwrap(), ids.col_id(i).unwrap())
}

#[test]
fn worked_example_orders_and_labels() {
    let (m, ids) = fig2();
    let g = build_graph(&m).unwrap();
    for (item, order) in [("i3", 2), ("i4", 2), ("i5", 3)] {
        let (u, i) = id(&ids, "u1", item);
        assert_eq!(hoi_order(&g, u, i).unwrap(), Some(order), "{item}");
    }
    let label = |item: &str, p| {
        let (u, i) = id(&ids, "u1", item);
        classify_confidence(&g, u, i, p).unwrap()
    };
    assert_eq!(label("i4", 2), Confidence::High);
    assert_eq!(label("i3", 2), Confidence::Low);
    assert_eq!(label("i5", 3), Confidence::Low);
}

#[test]
fn worked_example_high_confidence_set() {
    let (m, ids) = fig2();
    let g = build_graph(&m).unwrap();
    let want: Vec<(usize, usize)> = [("u1", "i4"), ("u2", "i5"), ("u3", "i1"), ("u4", "i1")]
        .iter()
        .map(|(u, i)| id(&ids, u, i))
        .collect();
    for max_order in [3, 4, 10] {
        assert_eq!(high_confidence_set(&g, max_order).unwrap().pairs(), want);
    }
}

#[test]
fn worked_example_weights() {
    let (m, ids) = fig2();
    let g = build_graph(&m).unwrap();
    let (u1, i2) = id(&ids, "u1", "i2");
    let (u3, _) = id(&ids, "u3", "i2");
    assert_eq!(g.weight(u1, i2), Some(4.0));
    assert_eq!(g.weight(u3, i2), Some(4.0));
    let (_, i1) = id(&ids, "u1", "i1");
    let mut w: Vec<f64> = g.item_neighbors(i1).iter().map(|&(_, w)| w).collect();
    w.sort_by(f64::total_cmp);
    assert_eq!(w, vec![1.0, 5.0]);
}

#[test]
fn degree_sums_count_each_edge_twice() {
    let mut rng = glfa_oracles::rng(50);
    let mut entries = Vec::new();
    let mut seen = std::collections::HashSet::new();
    while entries.len() < 50 {
        let (u, i) = (rng.random_range(0..12), rng.random_range(0..15));
        if seen.insert((u, i)) {
            entries.push(Entry::new(u, i, rng.random_range(1..=5) as f64));
        }
    }
    let g = build_graph(&SparseMatrix::new(12, 15, entries).unwrap()).unwrap();
    let users: usize = (0..12).map(|u| g.user_neighbors(u).len()).sum();
    let items: usize = (0..15).map(|i| g.item_neighbors(i).len()).sum();
    assert_eq!(users + items, 100);
    for u in 0..12 {
        for &(i, w) in g.user_neighbors(u) {
            assert!(g.item_neighbors(i).contains(&(u, w)));
        }
    }
}

#[test]
fn census_partitions_all_cells() {
    let mut rng = glfa_oracles::rng(9);
    for _ in 0..50 {
        let sg = SmallGraph::random(&mut rng, 7, 7);
        let m = to_matrix(&sg);
        if m.is_empty() {
            continue;
        }
        let g = build_graph(&m).unwrap();
        let census = hoi_census(&g, usize::MAX).unwrap();
        let mut unreachable = 0;
        for u in 0..m.n_rows() {
            for i in 0..m.n_cols() {
                if !m.contains(u, i) && hoi_order(&g, u, i).unwrap().is_none() {
                    unreachable += 1;
                }
            }
        }
        assert_eq!(
            census.high.len() + census.low_count() + unreachable + m.nnz(),
            m.n_rows() * m.n_cols()
        );
    }
}

/// Reverses the adjacency construction order by feeding entries backwards.
fn reversed(m: &SparseMatrix) -> InteractionGraph {
    let mut entries = m.entries().to_vec();
    entries.reverse();
    build_graph(&SparseMatrix::new(m.n_rows(), m.n_cols(), entries).unwrap()).unwrap()
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(120))]

    #[test]
    fn order_and_confidence_match_path_enumeration(seed in any::<u64>()) {
        let mut rng = glfa_oracles::rng(seed);
        let sg = SmallGraph::random(&mut rng, 6, 6);
        let m = to_matrix(&sg);
        prop_assume!(!m.is_empty());
        let g = build_graph(&m).unwrap();
        for u in 0..sg.n_users {
            for i in 0..sg.n_items {
                if sg.weights[u][i].is_some() {
                    continue;
                }
                let want = brute_order(&sg, u, i);
                prop_assert_eq!(hoi_order(&g, u, i).unwrap(), want);
                if let Some(p) = want {
                    let high = classify_confidence(&g, u, i, p).unwrap() == Confidence::High;
                    prop_assert_eq!(high, brute_high_confidence(&sg, u, i, p));
                }
            }
        }
        prop_assert_eq!(high_confidence_set(&g, 3).unwrap().pairs(), brute_high_set(&sg, 3));
    }

    #[test]
    fn labels_do_not_depend_on_entry_order(seed in any::<u64>()) {
        let mut rng = glfa_oracles::rng(seed);
        let sg = SmallGraph::random(&mut rng, 7, 7);
        let m = to_matrix(&sg);
        prop_assume!(!m.is_empty());
        let g = build_graph(&m).unwrap();
        let r = reversed(&m);
        prop_assert_eq!(hoi_census(&g, 4).unwrap(), hoi_census(&r, 4).unwrap());
    }

    #[test]
    fn high_set_never_contains_observed_pairs(seed in any::<u64>()) {
        let mut rng = glfa_oracles::rng(seed);
        let sg = SmallGraph::random(&mut rng, 8, 8);
        let m = to_matrix(&sg);
        prop_assume!(!m.is_empty());
        let g = build_graph(&m).unwrap();
        let s = high_confidence_set(&g, 3).unwrap();
        for r in s.records() {
            prop_assert!(!m.contains(r.u, r.i));
            prop_assert!(r.order >= 2 && r.order <= 3);
        }
        let pairs = s.pairs();
        let mut sorted = pairs.clone();
        sorted.sort_unstable();
        sorted.dedup();
        prop_assert_eq!(pairs, sorted);
    }

    #[test]
    fn distance_is_symmetric(seed in any::<u64>()) {
        // Transposing the matrix swaps the sides; the u→i distance must equal i→u.
        let mut rng = glfa_oracles::rng(seed);
        let sg = SmallGraph::random(&mut rng, 7, 7);
        let m = to_matrix(&sg);
        prop_assume!(!m.is_empty());
        let t = SparseMatrix::new(
            m.n_cols(),
            m.n_rows(),
            m.entries().iter().map(|e| Entry::new(e.col, e.row, e.value)).collect(),
        ).unwrap();
        let g = build_graph(&m).unwrap();
        let gt = build_graph(&t).unwrap();
        for u in 0..m.n_rows() {
            for i in 0..m.n_cols() {
                if m.contains(u, i) {
                    continue;
                }
                prop_assert_eq!(hoi_order(&g, u, i).unwrap(), hoi_order(&gt, i, u).unwrap());
            }
        }
    }
}
