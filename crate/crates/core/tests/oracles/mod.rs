//! Brute-force reference implementations used as test oracles. They share no
//! code with the library and favor obviousness over speed.
#![allow(dead_code)]

use std::collections::HashSet;

use echoscope_core::controversy::Side;
use echoscope_core::DirectedWeightedGraph;

pub fn edge_list(g: &DirectedWeightedGraph) -> Vec<(usize, usize, u64)> {
    let mut out = Vec::new();
    for u in 0..g.node_count() {
        for v in 0..g.node_count() {
            if let Some(w) = g.edge_weight(u, v) {
                out.push((u, v, w));
            }
        }
    }
    out
}

/// Fraction of edges whose reverse also exists.
pub fn reciprocity(g: &DirectedWeightedGraph) -> Option<f64> {
    let edges = edge_list(g);
    if edges.is_empty() {
        return None;
    }
    let set: HashSet<(usize, usize)> = edges.iter().map(|&(u, v, _)| (u, v)).collect();
    let mutual = edges.iter().filter(|&&(u, v, _)| set.contains(&(v, u))).count();
    Some(mutual as f64 / edges.len() as f64)
}

fn undirected_matrix(g: &DirectedWeightedGraph) -> Vec<Vec<bool>> {
    let n = g.node_count();
    let mut a = vec![vec![false; n]; n];
    for (u, v, _) in edge_list(g) {
        a[u][v] = true;
        a[v][u] = true;
    }
    a
}

/// Local clustering by enumerating all neighbor pairs.
pub fn clustering(g: &DirectedWeightedGraph) -> Vec<f64> {
    let a = undirected_matrix(g);
    let n = a.len();
    (0..n)
        .map(|i| {
            let nb: Vec<usize> = (0..n).filter(|&j| a[i][j]).collect();
            let k = nb.len();
            if k < 2 {
                return 0.0;
            }
            let mut closed = 0;
            for x in 0..k {
                for y in x + 1..k {
                    if a[nb[x]][nb[y]] {
                        closed += 1;
                    }
                }
            }
            closed as f64 / (k * (k - 1) / 2) as f64
        })
        .collect()
}

/// Mean total degree of out-neighbors.
pub fn knn(g: &DirectedWeightedGraph) -> Vec<Option<f64>> {
    let edges = edge_list(g);
    let n = g.node_count();
    let mut deg = vec![0usize; n];
    for &(u, v, _) in &edges {
        deg[u] += 1;
        deg[v] += 1;
    }
    (0..n)
        .map(|i| {
            let targets: Vec<usize> = edges.iter().filter(|e| e.0 == i).map(|e| e.1).collect();
            if targets.is_empty() {
                None
            } else {
                Some(targets.iter().map(|&t| deg[t] as f64).sum::<f64>() / targets.len() as f64)
            }
        })
        .collect()
}

/// Probability that a random positive outranks a random negative, ties 1/2.
pub fn auc(scores: &[f64], labels: &[bool]) -> f64 {
    let mut wins = 0.0;
    let mut pairs = 0.0;
    for (i, &si) in scores.iter().enumerate() {
        for (j, &sj) in scores.iter().enumerate() {
            if labels[i] && !labels[j] {
                pairs += 1.0;
                if si > sj {
                    wins += 1.0;
                } else if si == sj {
                    wins += 0.5;
                }
            }
        }
    }
    wins / pairs
}

fn hubs(g: &DirectedWeightedGraph, sides: &[Side], side: Side, k: usize) -> Vec<usize> {
    let edges = edge_list(g);
    let mut members: Vec<(usize, u64, usize)> = (0..g.node_count())
        .filter(|&v| sides[v] == side)
        .map(|v| {
            let indeg = edges.iter().filter(|e| e.1 == v).count();
            let instr = edges.iter().filter(|e| e.1 == v).map(|e| e.2).sum();
            (indeg, instr, v)
        })
        .collect();
    // ids are stored sorted, so the index is the id order
    members.sort_by(|a, b| b.0.cmp(&a.0).then(b.1.cmp(&a.1)).then(a.2.cmp(&b.2)));
    members.into_iter().take(k).map(|m| m.2).collect()
}

/// Gaussian elimination with partial pivoting; `a` is square, `b` has one
/// column per right-hand side.
pub fn gauss_solve(mut a: Vec<Vec<f64>>, mut b: Vec<Vec<f64>>) -> Vec<Vec<f64>> {
    let n = a.len();
    for col in 0..n {
        let piv = (col..n)
            .max_by(|&x, &y| a[x][col].abs().total_cmp(&a[y][col].abs()))
            .unwrap();
        a.swap(col, piv);
        b.swap(col, piv);
        for r in col + 1..n {
            let f = a[r][col] / a[col][col];
            if f == 0.0 {
                continue;
            }
            for c in col..n {
                a[r][c] -= f * a[col][c];
            }
            for c in 0..b[r].len() {
                b[r][c] -= f * b[col][c];
            }
        }
    }
    let m = b.first().map_or(0, Vec::len);
    let mut x = vec![vec![0.0; m]; n];
    for r in (0..n).rev() {
        for c in 0..m {
            let mut s = b[r][c];
            for k in r + 1..n {
                s -= a[r][k] * x[k][c];
            }
            x[r][c] = s / a[r][r];
        }
    }
    x
}

/// RWC probabilities `[pxx, pxy, pyx, pyy]` from the full transition
/// matrix: hubs absorb, dangling nodes jump uniformly to the non-hub nodes
/// of the start side, states that cannot reach a hub are dropped and the
/// result is normalized over absorbed mass.
pub fn rwc(g: &DirectedWeightedGraph, sides: &[Side], hub_k: usize) -> [f64; 4] {
    let n = g.node_count();
    let mut is_hub = vec![false; n];
    for side in [Side::X, Side::Y] {
        for h in hubs(g, sides, side, hub_k) {
            is_hub[h] = true;
        }
    }
    let edges = edge_list(g);
    let mut out = [0.0; 4];
    for (si, side) in [Side::X, Side::Y].into_iter().enumerate() {
        let starts: Vec<usize> = (0..n).filter(|&v| sides[v] == side && !is_hub[v]).collect();
        // full transition matrix over all nodes
        let mut p = vec![vec![0.0; n]; n];
        for v in (0..n).filter(|&v| !is_hub[v]) {
            let total: u64 = edges.iter().filter(|e| e.0 == v).map(|e| e.2).sum();
            if total == 0 {
                for &s in &starts {
                    p[v][s] += 1.0 / starts.len() as f64;
                }
            } else {
                for e in edges.iter().filter(|e| e.0 == v) {
                    p[v][e.1] += e.2 as f64 / total as f64;
                }
            }
        }
        // transitive closure of the support
        let mut reach = vec![vec![false; n]; n];
        for u in 0..n {
            reach[u][u] = true;
            for v in 0..n {
                if p[u][v] > 0.0 {
                    reach[u][v] = true;
                }
            }
        }
        for k in 0..n {
            for u in 0..n {
                if reach[u][k] {
                    for v in 0..n {
                        if reach[k][v] {
                            reach[u][v] = true;
                        }
                    }
                }
            }
        }
        let states: Vec<usize> = (0..n)
            .filter(|&v| !is_hub[v] && (0..n).any(|h| is_hub[h] && reach[v][h]))
            .collect();
        let m = states.len();
        let mut a = vec![vec![0.0; m]; m];
        let mut b = vec![vec![0.0; 2]; m];
        for (i, &v) in states.iter().enumerate() {
            a[i][i] += 1.0;
            for (j, &u) in states.iter().enumerate() {
                a[i][j] -= p[v][u];
            }
            for h in (0..n).filter(|&h| is_hub[h]) {
                let c = if sides[h] == Side::X { 0 } else { 1 };
                b[i][c] += p[v][h];
            }
        }
        let x = gauss_solve(a, b);
        let mut mass = [0.0; 2];
        for &s in &starts {
            if let Some(i) = states.iter().position(|&v| v == s) {
                mass[0] += x[i][0];
                mass[1] += x[i][1];
            }
        }
        let total = mass[0] + mass[1];
        out[2 * si] = mass[0] / total;
        out[2 * si + 1] = mass[1] / total;
    }
    out
}
