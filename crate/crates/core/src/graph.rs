//! Bipartite interaction graph and high-order interaction (HOI) mining.
//!
//! Rows are U-vertices, columns are I-vertices and every observed entry is an
//! edge weighted by its value. An unobserved pair `(u, i)` that is connected
//! only through other vertices is an HOI of order `p` when its shortest
//! alternating path has `2p - 1` edges.
//!
//! Confidence is judged over all shortest paths: a path is disqualifying if an
//! intermediate item on it carries two different weights on its two path edges.
//! Instead of enumerating paths, a single layered sweep from `u` propagates a
//! "clean" flag over the shortest-path DAG. A vertex is clean when every
//! shortest path reaching it is free of disqualifying bridges, so the label of
//! `(u, i)` is simply the flag of `i`.

use rayon::prelude::*;

use crate::data::SparseMatrix;
use crate::error::{Error, Result};

const WEIGHT_TOL: f64 = 1e-9;

pub(crate) fn weights_equal(a: f64, b: f64) -> bool {
    a == b || (a - b).abs() <= WEIGHT_TOL
}

#[derive(Debug, Clone, PartialEq)]
pub struct InteractionGraph {
    n_rows: usize,
    n_cols: usize,
    u_adj: Vec<Vec<(usize, f64)>>,
    i_adj: Vec<Vec<(usize, f64)>>,
}

impl InteractionGraph {
    /// Adjacency lists are sorted by neighbor id.
    pub fn build(train: &SparseMatrix) -> Result<Self> {
        if train.is_empty() {
            return Err(Error::EmptyMatrix);
        }
        let u_adj = (0..train.n_rows())
            .map(|u| train.row(u).map(|e| (e.col, e.value)).collect())
            .collect();
        let i_adj = (0..train.n_cols())
            .map(|i| train.col(i).map(|e| (e.row, e.value)).collect())
            .collect();
        Ok(InteractionGraph {
            n_rows: train.n_rows(),
            n_cols: train.n_cols(),
            u_adj,
            i_adj,
        })
    }

    pub fn n_rows(&self) -> usize {
        self.n_rows
    }

    pub fn n_cols(&self) -> usize {
        self.n_cols
    }

    pub fn user_neighbors(&self, u: usize) -> &[(usize, f64)] {
        &self.u_adj[u]
    }

    pub fn item_neighbors(&self, i: usize) -> &[(usize, f64)] {
        &self.i_adj[i]
    }

    pub fn n_edges(&self) -> usize {
        self.u_adj.iter().map(Vec::len).sum()
    }

    pub fn weight(&self, u: usize, i: usize) -> Option<f64> {
        let adj = self.u_adj.get(u)?;
        adj.binary_search_by_key(&i, |&(j, _)| j)
            .ok()
            .map(|k| adj[k].1)
    }

    fn check_pair(&self, u: usize, i: usize) -> Result<()> {
        if u >= self.n_rows || i >= self.n_cols {
            return Err(Error::OutOfBounds {
                row: u,
                col: i,
                n_rows: self.n_rows,
                n_cols: self.n_cols,
            });
        }
        if self.weight(u, i).is_some() {
            return Err(Error::NotIndirect { row: u, col: i });
        }
        Ok(())
    }
}

/// Convenience alias for [`InteractionGraph::build`].
pub fn build_graph(train: &SparseMatrix) -> Result<InteractionGraph> {
    InteractionGraph::build(train)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Confidence {
    High,
    Low,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct HoiRecord {
    pub u: usize,
    pub i: usize,
    pub order: usize,
    pub confidence: Confidence,
}

/// High-confidence HOIs sorted by `(u, i)`.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct HoiSet {
    records: Vec<HoiRecord>,
}

impl HoiSet {
    pub fn from_records(mut records: Vec<HoiRecord>) -> Self {
        records.retain(|r| r.confidence == Confidence::High);
        records.sort_unstable_by_key(|r| (r.u, r.i));
        records.dedup_by_key(|r| (r.u, r.i));
        HoiSet { records }
    }

    pub fn records(&self) -> &[HoiRecord] {
        &self.records
    }

    pub fn len(&self) -> usize {
        self.records.len()
    }

    pub fn is_empty(&self) -> bool {
        self.records.is_empty()
    }

    pub fn pairs(&self) -> Vec<(usize, usize)> {
        self.records.iter().map(|r| (r.u, r.i)).collect()
    }

    pub fn into_records(self) -> Vec<HoiRecord> {
        self.records
    }
}

const UNSEEN: u32 = u32::MAX;

#[derive(Debug, Clone, Copy, PartialEq)]
enum Incoming {
    None,
    Uniform(f64),
    Mixed,
}

impl Incoming {
    fn merge(self, w: f64) -> Self {
        match self {
            Incoming::None => Incoming::Uniform(w),
            Incoming::Uniform(v) if weights_equal(v, w) => self,
            _ => Incoming::Mixed,
        }
    }

    fn balanced_with(self, w: f64) -> bool {
        matches!(self, Incoming::Uniform(v) if weights_equal(v, w))
    }
}

/// Reusable buffers for one layered sweep.
struct Sweep {
    user_dist: Vec<u32>,
    item_dist: Vec<u32>,
    user_clean: Vec<bool>,
    item_clean: Vec<bool>,
    item_incoming: Vec<Incoming>,
    touched_users: Vec<usize>,
    touched_items: Vec<usize>,
}

impl Sweep {
    fn new(graph: &InteractionGraph) -> Self {
        Sweep {
            user_dist: vec![UNSEEN; graph.n_rows],
            item_dist: vec![UNSEEN; graph.n_cols],
            user_clean: vec![false; graph.n_rows],
            item_clean: vec![false; graph.n_cols],
            item_incoming: vec![Incoming::None; graph.n_cols],
            touched_users: Vec::new(),
            touched_items: Vec::new(),
        }
    }

    fn reset(&mut self) {
        for &u in &self.touched_users {
            self.user_dist[u] = UNSEEN;
        }
        for &i in &self.touched_items {
            self.item_dist[i] = UNSEEN;
            self.item_incoming[i] = Incoming::None;
        }
        self.touched_users.clear();
        self.touched_items.clear();
    }

    /// Layered BFS from `source` over at most `max_depth` edges. Stops early once
    /// `stop_at` has been labelled.
    fn run(&mut self, graph: &InteractionGraph, source: usize, max_depth: u32, stop_at: Option<usize>) {
        self.reset();
        self.user_dist[source] = 0;
        self.user_clean[source] = true;
        self.touched_users.push(source);
        let mut users = vec![source];
        let mut items = Vec::new();
        let mut depth = 0u32;
        while depth < max_depth && !users.is_empty() {
            // users at `depth` -> items at `depth + 1`
            items.clear();
            for &a in &users {
                let clean_a = self.user_clean[a];
                for &(j, w) in &graph.u_adj[a] {
                    let d = self.item_dist[j];
                    if d == UNSEEN {
                        self.item_dist[j] = depth + 1;
                        self.item_clean[j] = clean_a;
                        self.item_incoming[j] = Incoming::None.merge(w);
                        self.touched_items.push(j);
                        items.push(j);
                    } else if d == depth + 1 {
                        self.item_clean[j] &= clean_a;
                        self.item_incoming[j] = self.item_incoming[j].merge(w);
                    }
                }
            }
            depth += 1;
            if stop_at.is_some_and(|t| self.item_dist[t] != UNSEEN) || depth >= max_depth {
                break;
            }
            // items at `depth` -> users at `depth + 1`; the item is a bridge here
            users.clear();
            for &j in &items {
                let clean_j = self.item_clean[j];
                let incoming = self.item_incoming[j];
                for &(b, w) in &graph.i_adj[j] {
                    let d = self.user_dist[b];
                    let ok = clean_j && incoming.balanced_with(w);
                    if d == UNSEEN {
                        self.user_dist[b] = depth + 1;
                        self.user_clean[b] = ok;
                        self.touched_users.push(b);
                        users.push(b);
                    } else if d == depth + 1 {
                        self.user_clean[b] &= ok;
                    }
                }
            }
            depth += 1;
        }
    }

    fn order_of(&self, i: usize) -> Option<usize> {
        match self.item_dist[i] {
            UNSEEN => None,
            d => Some((d as usize).div_ceil(2)),
        }
    }
}

fn depth_for(max_order: usize) -> u32 {
    max_order
        .saturating_mul(2)
        .saturating_sub(1)
        .min(u32::MAX as usize - 1) as u32
}

/// Order `p` of the indirect pair `(u, i)`, or `None` when `i` is unreachable from `u`.
pub fn hoi_order(graph: &InteractionGraph, u: usize, i: usize) -> Result<Option<usize>> {
    graph.check_pair(u, i)?;
    let mut sweep = Sweep::new(graph);
    sweep.run(graph, u, u32::MAX - 1, Some(i));
    Ok(sweep.order_of(i))
}

/// Confidence of the order-`p` HOI `(u, i)` over all of its shortest paths.
pub fn classify_confidence(
    graph: &InteractionGraph,
    u: usize,
    i: usize,
    p: usize,
) -> Result<Confidence> {
    graph.check_pair(u, i)?;
    let mut sweep = Sweep::new(graph);
    sweep.run(graph, u, u32::MAX - 1, Some(i));
    let actual = sweep.order_of(i);
    if actual != Some(p) {
        return Err(Error::OrderMismatch {
            row: u,
            col: i,
            requested: p,
            actual,
        });
    }
    Ok(if sweep.item_clean[i] {
        Confidence::High
    } else {
        Confidence::Low
    })
}

/// Counts of HOIs found up to a given order.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct HoiCensus {
    pub high: HoiSet,
    /// `high_by_order[p]` and `low_by_order[p]` count HOIs of order `p`.
    pub high_by_order: Vec<usize>,
    pub low_by_order: Vec<usize>,
}

impl HoiCensus {
    pub fn low_count(&self) -> usize {
        self.low_by_order.iter().sum()
    }
}

fn mine_user(graph: &InteractionGraph, sweep: &mut Sweep, u: usize, max_depth: u32) -> Vec<HoiRecord> {
    sweep.run(graph, u, max_depth, None);
    let mut out: Vec<HoiRecord> = sweep
        .touched_items
        .iter()
        .filter(|&&i| sweep.item_dist[i] >= 3)
        .map(|&i| HoiRecord {
            u,
            i,
            order: (sweep.item_dist[i] as usize).div_ceil(2),
            confidence: if sweep.item_clean[i] {
                Confidence::High
            } else {
                Confidence::Low
            },
        })
        .collect();
    out.sort_unstable_by_key(|r| r.i);
    out
}

/// Classifies every reachable indirect pair of order at most `max_order`.
///
/// Sources are processed in parallel; the result does not depend on thread count.
pub fn hoi_census(graph: &InteractionGraph, max_order: usize) -> Result<HoiCensus> {
    if max_order < 2 {
        return Err(Error::InvalidArgument(format!(
            "max_order must be at least 2, got {max_order}"
        )));
    }
    let max_depth = depth_for(max_order);
    let per_user: Vec<Vec<HoiRecord>> = (0..graph.n_rows)
        .into_par_iter()
        .map_init(
            || Sweep::new(graph),
            |sweep, u| mine_user(graph, sweep, u, max_depth),
        )
        .collect();
    let top = per_user
        .iter()
        .flat_map(|rs| rs.iter().map(|r| r.order))
        .max()
        .unwrap_or(0);
    let mut high_by_order = vec![0; top + 1];
    let mut low_by_order = vec![0; top + 1];
    let mut high = Vec::new();
    for rec in per_user.into_iter().flatten() {
        match rec.confidence {
            Confidence::High => {
                high_by_order[rec.order] += 1;
                high.push(rec);
            }
            Confidence::Low => low_by_order[rec.order] += 1,
        }
    }
    Ok(HoiCensus {
        high: HoiSet { records: high },
        high_by_order,
        low_by_order,
    })
}

/// The high-confidence HOI set restricted to orders `<= max_order`.
pub fn high_confidence_set(graph: &InteractionGraph, max_order: usize) -> Result<HoiSet> {
    Ok(hoi_census(graph, max_order)?.high)
}
