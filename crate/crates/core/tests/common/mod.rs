//! Brute-force reference implementations of the ego measures, written
//! against dense adjacency matrices and kept apart from the library code.
#![allow(dead_code, clippy::needless_range_loop)]

use egonet_core::features::{compute_ego_records, CentralityScale};
use egonet_core::graph::{build_graph_with_nodes, EdgeRecord};
use egonet_core::{EgoOrder, WeightedGraph};
use nalgebra::{DMatrix, SymmetricEigen};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

/// Dense symmetric weight matrix; 0 means no edge.
pub type Dense = Vec<Vec<f64>>;

pub fn node_id(i: usize) -> String {
    format!("v{i:02}")
}

/// Random graph on at most `max_n` nodes. Weights are powers of two so
/// inverse-weight path lengths are exact and ties are real ties.
pub fn random_dense(rng: &mut ChaCha8Rng, max_n: usize) -> Dense {
    let n = rng.random_range(1..=max_n);
    let p = rng.random_range(0.15..0.85);
    let mut w = vec![vec![0.0; n]; n];
    for i in 0..n {
        for j in i + 1..n {
            if rng.random_bool(p) {
                let x = [0.5, 1.0, 2.0, 4.0, 8.0][rng.random_range(0..5)];
                w[i][j] = x;
                w[j][i] = x;
            }
        }
    }
    w
}

pub fn to_graph(w: &Dense) -> WeightedGraph {
    let mut edges = Vec::new();
    for (i, row) in w.iter().enumerate() {
        for (j, &x) in row.iter().enumerate().skip(i + 1) {
            if x > 0.0 {
                edges.push(EdgeRecord::new(node_id(i), node_id(j), x));
            }
        }
    }
    build_graph_with_nodes(&edges, (0..w.len()).map(node_id).collect()).unwrap()
}

fn hops(w: &Dense) -> Vec<Vec<usize>> {
    let n = w.len();
    let mut h = vec![vec![usize::MAX; n]; n];
    for i in 0..n {
        h[i][i] = 0;
        for j in 0..n {
            if w[i][j] > 0.0 {
                h[i][j] = 1;
            }
        }
    }
    for k in 0..n {
        for i in 0..n {
            for j in 0..n {
                if h[i][k] != usize::MAX && h[k][j] != usize::MAX && h[i][k] + h[k][j] < h[i][j] {
                    h[i][j] = h[i][k] + h[k][j];
                }
            }
        }
    }
    h
}

fn sub(w: &Dense, nodes: &[usize]) -> Dense {
    nodes.iter().map(|&i| nodes.iter().map(|&j| w[i][j]).collect()).collect()
}

/// Ego graph of `v` with radius `r`, plus the ego's position in it.
pub fn ego_dense(w: &Dense, v: usize, r: usize) -> (Dense, usize) {
    let h = hops(w);
    let nodes: Vec<usize> = (0..w.len()).filter(|&j| h[v][j] <= r).collect();
    let pos = nodes.iter().position(|&j| j == v).unwrap();
    (sub(w, &nodes), pos)
}

fn floyd(w: &Dense) -> Dense {
    let n = w.len();
    let mut d = vec![vec![f64::INFINITY; n]; n];
    for i in 0..n {
        d[i][i] = 0.0;
        for j in 0..n {
            if w[i][j] > 0.0 {
                d[i][j] = 1.0 / w[i][j];
            }
        }
    }
    for k in 0..n {
        for i in 0..n {
            for j in 0..n {
                if d[i][k] + d[k][j] < d[i][j] {
                    d[i][j] = d[i][k] + d[k][j];
                }
            }
        }
    }
    d
}

/// Number of shortest paths between every pair, by counting predecessors
/// on the shortest-path DAG in order of distance.
fn path_counts(w: &Dense, d: &Dense) -> Vec<Vec<f64>> {
    let n = w.len();
    let mut sigma = vec![vec![0.0; n]; n];
    for s in 0..n {
        let mut order: Vec<usize> = (0..n).filter(|&t| d[s][t].is_finite()).collect();
        order.sort_by(|&a, &b| d[s][a].total_cmp(&d[s][b]));
        sigma[s][s] = 1.0;
        for &t in order.iter().skip(1) {
            sigma[s][t] = (0..n)
                .filter(|&u| w[u][t] > 0.0 && d[s][u] + 1.0 / w[u][t] == d[s][t])
                .map(|u| sigma[s][u])
                .sum();
        }
    }
    sigma
}

fn efficiency(w: &Dense) -> f64 {
    let n = w.len();
    if n < 2 {
        return 0.0;
    }
    let d = floyd(w);
    let mut s = 0.0;
    for i in 0..n {
        for j in 0..n {
            if i != j && d[i][j].is_finite() {
                s += 1.0 / d[i][j];
            }
        }
    }
    s / (n * (n - 1)) as f64
}

fn degree(w: &Dense, i: usize) -> usize {
    w[i].iter().filter(|&&x| x > 0.0).count()
}

fn neighbours(w: &Dense, i: usize) -> Vec<usize> {
    (0..w.len()).filter(|&j| w[i][j] > 0.0).collect()
}

fn eigenvector(w: &Dense, d: &Dense, e: usize) -> f64 {
    let comp: Vec<usize> = (0..w.len()).filter(|&j| d[e][j].is_finite()).collect();
    if comp.len() < 2 {
        return 0.0;
    }
    let m = comp.len();
    let a = DMatrix::from_fn(m, m, |i, j| w[comp[i]][comp[j]]);
    let eig = SymmetricEigen::new(a);
    let top = (0..m).max_by(|&i, &j| eig.eigenvalues[i].total_cmp(&eig.eigenvalues[j])).unwrap();
    let v: Vec<f64> = eig.eigenvectors.column(top).iter().map(|x| x.abs()).collect();
    let max = v.iter().cloned().fold(0.0, f64::max);
    v[comp.iter().position(|&j| j == e).unwrap()] / max
}

/// All thirteen normalized measures of ego `e` in `w`, in canonical order.
/// `parent_degree` is the ego's degree in the graph it was cut from.
pub fn oracle_features(w: &Dense, e: usize, parent_degree: usize) -> [f64; 13] {
    let n = w.len();
    let nf = n as f64;
    let d = floyd(w);
    let k = degree(w, e);
    let mut out = [0.0; 13];
    out[10] = parent_degree as f64;
    if n < 2 {
        return out;
    }
    out[0] = k as f64 / (nf - 1.0);
    if n > 2 {
        let sigma = path_counts(w, &d);
        let mut b = 0.0;
        for s in 0..n {
            for t in s + 1..n {
                if s == e || t == e || !d[s][t].is_finite() {
                    continue;
                }
                if d[s][e] + d[e][t] == d[s][t] {
                    b += sigma[s][e] * sigma[e][t] / sigma[s][t];
                }
            }
        }
        out[1] = b / ((nf - 1.0) * (nf - 2.0) / 2.0);
    }
    let reach: Vec<f64> = (0..n).filter(|&j| j != e && d[e][j].is_finite()).map(|j| d[e][j]).collect();
    if !reach.is_empty() {
        let r = reach.len() as f64;
        out[2] = r / reach.iter().sum::<f64>() * r / (nf - 1.0);
    }
    out[3] = eigenvector(w, &d, e);
    out[4] = efficiency(w);
    out[5] = (0..n)
        .filter(|&i| degree(w, i) >= 2)
        .map(|i| efficiency(&sub(w, &neighbours(w, i))))
        .sum::<f64>()
        / nf;
    out[6] = reach.iter().map(|x| 1.0 / x).sum::<f64>() / (nf - 1.0);

    let mut triangles = 0usize;
    for a in 0..n {
        for b in a + 1..n {
            for c in b + 1..n {
                if w[a][b] > 0.0 && w[b][c] > 0.0 && w[a][c] > 0.0 {
                    triangles += 1;
                }
            }
        }
    }
    let triples: usize = (0..n).map(|i| degree(w, i) * degree(w, i).saturating_sub(1) / 2).sum();
    out[7] = if triples > 0 { 3.0 * triangles as f64 / triples as f64 } else { 0.0 };
    if k >= 2 {
        let nb = neighbours(w, e);
        let mut links = 0;
        for (i, &a) in nb.iter().enumerate() {
            for &b in &nb[i + 1..] {
                if w[a][b] > 0.0 {
                    links += 1;
                }
            }
        }
        out[8] = links as f64 / (k * (k - 1) / 2) as f64;
    }

    let weights: Vec<f64> = (0..n).flat_map(|i| (i + 1..n).map(move |j| (i, j))).map(|(i, j)| w[i][j]).filter(|&x| x > 0.0).collect();
    out[9] = 2.0 * weights.len() as f64 / (nf * (nf - 1.0));
    if !weights.is_empty() {
        let mean = weights.iter().sum::<f64>() / weights.len() as f64;
        let dev = weights.iter().cloned().fold(f64::MIN, f64::max) - mean;
        out[11] = if dev > 1.0 { dev.ln() } else { 0.0 };
    }
    out[12] = weights.iter().sum();
    out
}

pub fn close(a: f64, b: f64, tol: f64) -> bool {
    (a - b).abs() <= tol * b.abs().max(1.0)
}

/// Checks every ego of `count` random graphs against the oracle, alternating
/// first- and second-order ego graphs. Returns (egos checked, mismatches).
pub fn feature_oracle_sweep(seed: u64, count: usize, max_n: usize, tol: f64) -> (usize, Vec<String>) {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut checked = 0;
    let mut bad = Vec::new();
    for gi in 0..count {
        let w = random_dense(&mut rng, max_n);
        let g = to_graph(&w);
        let (order, r) = if gi % 2 == 0 { (EgoOrder::First, 1) } else { (EgoOrder::Second, 2) };
        let records = compute_ego_records(&g, None, order, CentralityScale::Normalized).unwrap();
        for (v, rec) in records.iter().enumerate() {
            assert_eq!(rec.features.ego, node_id(v));
            let (ew, e) = ego_dense(&w, v, r);
            let want = oracle_features(&ew, e, degree(&w, v));
            for (f, (&got, &exp)) in rec.features.values.iter().zip(want.iter()).enumerate() {
                if !close(got, exp, tol) {
                    bad.push(format!("graph {gi} ego {v} feature {f}: got {got}, want {exp}"));
                }
            }
            checked += 1;
        }
    }
    (checked, bad)
}
