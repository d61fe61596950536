//! Independent reference computations for tests.
//!
//! Nothing here calls into the `glfa` crate: every routine recomputes its
//! answer from first principles (exhaustive enumeration, finite differences,
//! direct formula evaluation) so it can check the optimized implementations.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

/// A small weighted bipartite graph given as a dense weight table.
#[derive(Debug, Clone)]
pub struct SmallGraph {
    pub n_users: usize,
    pub n_items: usize,
    /// `weights[u][i]` is `Some(w)` when `(u, i)` is observed.
    pub weights: Vec<Vec<Option<f64>>>,
}

impl SmallGraph {
    pub fn triples(&self) -> Vec<(usize, usize, f64)> {
        let mut out = Vec::new();
        for u in 0..self.n_users {
            for i in 0..self.n_items {
                if let Some(w) = self.weights[u][i] {
                    out.push((u, i, w));
                }
            }
        }
        out
    }

    /// Random graph with up to `max_users` x `max_items` vertices and integer
    /// weights drawn from `1..=levels` where `levels` itself is random in 1..=5.
    pub fn random(rng: &mut impl Rng, max_users: usize, max_items: usize) -> Self {
        let n_users = rng.random_range(1..=max_users);
        let n_items = rng.random_range(1..=max_items);
        let p: f64 = rng.random_range(0.15..0.6);
        let levels: u32 = rng.random_range(1..=5);
        let weights = (0..n_users)
            .map(|_| {
                (0..n_items)
                    .map(|_| (rng.random::<f64>() < p).then(|| rng.random_range(1..=levels) as f64))
                    .collect()
            })
            .collect();
        SmallGraph {
            n_users,
            n_items,
            weights,
        }
    }
}

/// Vertex of the bipartite graph.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum V {
    U(usize),
    I(usize),
}

/// Every simple path from user `u` to item `i` with at most `max_len` edges,
/// as vertex sequences.
fn simple_paths(g: &SmallGraph, u: usize, i: usize, max_len: usize) -> Vec<Vec<V>> {
    fn dfs(
        g: &SmallGraph,
        at: V,
        target: usize,
        max_len: usize,
        path: &mut Vec<V>,
        out: &mut Vec<Vec<V>>,
    ) {
        if let V::I(j) = at {
            if j == target {
                out.push(path.clone());
                return;
            }
        }
        if path.len() > max_len {
            return;
        }
        let next: Vec<V> = match at {
            V::U(a) => (0..g.n_items)
                .filter(|&j| g.weights[a][j].is_some())
                .map(V::I)
                .collect(),
            V::I(j) => (0..g.n_users)
                .filter(|&b| g.weights[b][j].is_some())
                .map(V::U)
                .collect(),
        };
        for v in next {
            if path.contains(&v) {
                continue;
            }
            path.push(v);
            dfs(g, v, target, max_len, path, out);
            path.pop();
        }
    }
    let mut out = Vec::new();
    let mut path = vec![V::U(u)];
    dfs(g, V::U(u), i, max_len, &mut path, &mut out);
    out
}

#[allow(clippy::needless_range_loop)]
fn connected(g: &SmallGraph, u: usize, i: usize) -> bool {
    let mut seen_u = vec![false; g.n_users];
    let mut seen_i = vec![false; g.n_items];
    let mut stack = vec![V::U(u)];
    seen_u[u] = true;
    while let Some(v) = stack.pop() {
        match v {
            V::U(a) => {
                for j in 0..g.n_items {
                    if g.weights[a][j].is_some() && !seen_i[j] {
                        seen_i[j] = true;
                        stack.push(V::I(j));
                    }
                }
            }
            V::I(j) => {
                for b in 0..g.n_users {
                    if g.weights[b][j].is_some() && !seen_u[b] {
                        seen_u[b] = true;
                        stack.push(V::U(b));
                    }
                }
            }
        }
    }
    seen_i[i]
}

/// Order of `(u, i)` found by enumerating simple paths of growing length.
/// `None` when `i` is not connected to `u`.
pub fn brute_order(g: &SmallGraph, u: usize, i: usize) -> Option<usize> {
    if !connected(g, u, i) {
        return None;
    }
    let mut len = 1;
    loop {
        let paths = simple_paths(g, u, i, len);
        if let Some(shortest) = paths.iter().map(|p| p.len() - 1).min() {
            return Some(shortest.div_ceil(2));
        }
        len += 2;
    }
}

/// `true` when every simple path of exactly `2p - 1` edges keeps each
/// intermediate item's two path weights equal.
pub fn brute_high_confidence(g: &SmallGraph, u: usize, i: usize, p: usize) -> bool {
    let len = 2 * p - 1;
    simple_paths(g, u, i, len)
        .into_iter()
        .filter(|path| path.len() - 1 == len)
        .all(|path| {
            path.windows(3).all(|w| match (w[0], w[1], w[2]) {
                (V::U(a), V::I(j), V::U(b)) => {
                    let wa = g.weights[a][j].unwrap();
                    let wb = g.weights[b][j].unwrap();
                    (wa - wb).abs() <= 1e-9
                }
                _ => true,
            })
        })
}

/// High-confidence pairs of order `<= max_order`, sorted.
pub fn brute_high_set(g: &SmallGraph, max_order: usize) -> Vec<(usize, usize)> {
    let mut out = Vec::new();
    for u in 0..g.n_users {
        for i in 0..g.n_items {
            if g.weights[u][i].is_some() {
                continue;
            }
            if let Some(p) = brute_order(g, u, i) {
                if p <= max_order && brute_high_confidence(g, u, i, p) {
                    out.push((u, i));
                }
            }
        }
    }
    out
}

/// Instantaneous loss on one entry for row vector `x` and column vector `y`:
/// `½·w·(r − x·y)² + ½·λ(‖x‖² + ‖y‖²)`, where `w` is 1 or the aggregation weight.
pub fn entry_loss(x: &[f64], y: &[f64], value: f64, weight: f64, lambda: f64) -> f64 {
    let mut pred = 0.0;
    for k in 0..x.len() {
        pred += x[k] * y[k];
    }
    let mut reg = 0.0;
    for k in 0..x.len() {
        reg += x[k] * x[k] + y[k] * y[k];
    }
    0.5 * weight * (value - pred) * (value - pred) + 0.5 * lambda * reg
}

/// Central finite-difference gradient of [`entry_loss`] with respect to `x` and `y`.
pub fn entry_loss_fd(
    x: &[f64],
    y: &[f64],
    value: f64,
    weight: f64,
    lambda: f64,
    h: f64,
) -> (Vec<f64>, Vec<f64>) {
    let f = |x: &[f64], y: &[f64]| entry_loss(x, y, value, weight, lambda);
    let mut gx = Vec::with_capacity(x.len());
    for k in 0..x.len() {
        let (mut a, mut b) = (x.to_vec(), x.to_vec());
        a[k] += h;
        b[k] -= h;
        gx.push((f(&a, y) - f(&b, y)) / (2.0 * h));
    }
    let mut gy = Vec::with_capacity(y.len());
    for k in 0..y.len() {
        let (mut a, mut b) = (y.to_vec(), y.to_vec());
        a[k] += h;
        b[k] -= h;
        gy.push((f(x, &a) - f(x, &b)) / (2.0 * h));
    }
    (gx, gy)
}

/// Regularized squared-error objective evaluated from dense factor tables.
pub fn naive_objective(
    x: &[Vec<f64>],
    y: &[Vec<f64>],
    observed: &[(usize, usize, f64)],
    pseudo: &[(usize, usize, f64)],
    alpha: f64,
    lambda: f64,
) -> f64 {
    let pred = |u: usize, i: usize| -> f64 {
        let mut s = 0.0;
        for k in 0..x[u].len() {
            s += x[u][k] * y[i][k];
        }
        s
    };
    let mut total = 0.0;
    for &(u, i, r) in observed {
        total += 0.5 * (r - pred(u, i)).powi(2);
    }
    for &(u, i, r) in pseudo {
        total += 0.5 * alpha * (r - pred(u, i)).powi(2);
    }
    let mut norm = 0.0;
    for row in x.iter().chain(y) {
        for v in row {
            norm += v * v;
        }
    }
    total + 0.5 * lambda * norm
}

/// Direct evaluation of the three-branch clamping formula.
pub fn clamp_reference(r: f64, r_min: f64, r_max: f64) -> f64 {
    if r < r_min {
        r_min + 1.0 / (1.0 + (-r).exp())
    } else if r > r_max {
        r_max / (1.0 + (-r).exp())
    } else {
        r
    }
}

/// Wilcoxon rank sums and exact one/two-sided p-values by enumerating all
/// `2ⁿ` sign patterns of the (average) ranks. Zero differences are dropped.
pub struct SignEnumeration {
    pub r_plus: f64,
    pub r_minus: f64,
    pub p_greater: f64,
    pub p_less: f64,
    pub p_two_sided: f64,
}

pub fn wilcoxon_by_enumeration(a: &[f64], b: &[f64]) -> SignEnumeration {
    let d: Vec<f64> = a.iter().zip(b).map(|(x, y)| x - y).filter(|d| *d != 0.0).collect();
    let n = d.len();
    // average ranks by counting: rank = (#smaller) + (#equal + 1) / 2
    let ranks: Vec<f64> = d
        .iter()
        .map(|x| {
            let smaller = d.iter().filter(|y| y.abs() < x.abs()).count() as f64;
            let equal = d.iter().filter(|y| y.abs() == x.abs()).count() as f64;
            smaller + (equal + 1.0) / 2.0
        })
        .collect();
    let r_plus: f64 = d.iter().zip(&ranks).filter(|(x, _)| **x > 0.0).map(|(_, r)| r).sum();
    let total: f64 = ranks.iter().sum();
    let (mut ge, mut le) = (0u64, 0u64);
    for mask in 0u64..(1u64 << n) {
        let s: f64 = (0..n).filter(|k| mask >> k & 1 == 1).map(|k| ranks[k]).sum();
        if s >= r_plus - 1e-9 {
            ge += 1;
        }
        if s <= r_plus + 1e-9 {
            le += 1;
        }
    }
    let all = (1u64 << n) as f64;
    let (p_greater, p_less) = (ge as f64 / all, le as f64 / all);
    SignEnumeration {
        r_plus,
        r_minus: total - r_plus,
        p_greater,
        p_less,
        p_two_sided: (2.0 * p_greater.min(p_less)).min(1.0),
    }
}

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

/// Median of a non-empty slice.
pub fn median(values: &[f64]) -> f64 {
    let mut v = values.to_vec();
    v.sort_by(f64::total_cmp);
    let n = v.len();
    if n % 2 == 1 {
        v[n / 2]
    } else {
        0.5 * (v[n / 2 - 1] + v[n / 2])
    }
}
