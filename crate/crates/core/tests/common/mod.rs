#![allow(dead_code)]

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rwre_core::environment::{Environment, Resistances};
use rwre_core::graph::{FiniteGraph, GraphWithSink};

/// Connected multigraph on `n` vertices: a random spanning tree plus `extra`
/// random edges (parallel edges allowed). Root 0, sink `n - 1`.
pub fn random_network(
    rng: &mut ChaCha8Rng,
    n: usize,
    extra: usize,
) -> (GraphWithSink, Environment) {
    let mut graph = FiniteGraph::with_vertices(n);
    for v in 1..n {
        let u = rng.random_range(0..v);
        graph.add_edge(u, v).unwrap();
    }
    for _ in 0..extra {
        let u = rng.random_range(0..n);
        let mut v = rng.random_range(0..n);
        while v == u {
            v = rng.random_range(0..n);
        }
        graph.add_edge(u, v).unwrap();
    }
    let values = (0..graph.edge_count())
        .map(|_| rng.random_range(0.1..10.0))
        .collect();
    let g = GraphWithSink::from_graph(graph, 0, n - 1).unwrap();
    (g, Environment::from_values(values).unwrap())
}

pub fn random_networks(count: usize, seed: u64) -> Vec<(GraphWithSink, Environment)> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    (0..count)
        .map(|_| {
            let n = rng.random_range(3..=50);
            let extra = rng.random_range(0..=2 * n);
            random_network(&mut rng, n, extra)
        })
        .collect()
}

/// Potentials for unit current from `s` with `t` grounded, by Gaussian
/// elimination with partial pivoting on the dense reduced Laplacian. Assumes
/// every edge finite and the graph connected.
#[allow(clippy::needless_range_loop)]
pub fn dense_potentials<R: Resistances>(
    g: &GraphWithSink,
    env: &R,
    s: usize,
    t: usize,
) -> Vec<f64> {
    let n = g.vertex_count();
    let idx: Vec<Option<usize>> = {
        let mut k = 0;
        (0..n)
            .map(|v| {
                if v == t {
                    None
                } else {
                    k += 1;
                    Some(k - 1)
                }
            })
            .collect()
    };
    let m = n - 1;
    let mut a = vec![vec![0.0; m + 1]; m];
    for (e, &(u, v)) in g.graph.edges().iter().enumerate() {
        let c = 1.0 / env.resistance(e);
        if let Some(i) = idx[u] {
            a[i][i] += c;
            if let Some(j) = idx[v] {
                a[i][j] -= c;
            }
        }
        if let Some(j) = idx[v] {
            a[j][j] += c;
            if let Some(i) = idx[u] {
                a[j][i] -= c;
            }
        }
    }
    a[idx[s].unwrap()][m] = 1.0;
    for col in 0..m {
        let pivot = (col..m)
            .max_by(|&i, &j| a[i][col].abs().total_cmp(&a[j][col].abs()))
            .unwrap();
        a.swap(col, pivot);
        for row in col + 1..m {
            let f = a[row][col] / a[col][col];
            if f != 0.0 {
                for k in col..=m {
                    a[row][k] -= f * a[col][k];
                }
            }
        }
    }
    let mut x = vec![0.0; m];
    for row in (0..m).rev() {
        let tail: f64 = (row + 1..m).map(|k| a[row][k] * x[k]).sum();
        x[row] = (a[row][m] - tail) / a[row][row];
    }
    (0..n).map(|v| idx[v].map_or(0.0, |i| x[i])).collect()
}

/// Exact P(no return to `v` at times 1..=`horizon`) for the walk in `env`,
/// with the sink absorbing. Zero when `v` has no finite edge.
pub fn exact_failure<R: Resistances>(g: &GraphWithSink, env: &R, v: usize, horizon: usize) -> f64 {
    exact_failure_curve(g, env, v, horizon)[horizon]
}

/// `exact_failure` for every horizon `0..=max_horizon`.
pub fn exact_failure_curve<R: Resistances>(
    g: &GraphWithSink,
    env: &R,
    v: usize,
    max_horizon: usize,
) -> Vec<f64> {
    let n = g.vertex_count();
    let kernel: Vec<Vec<(usize, f64)>> = (0..n)
        .map(|x| {
            let total: f64 = g
                .graph
                .incident(x)
                .iter()
                .map(|&e| 1.0 / env.resistance(e))
                .sum();
            if x == g.sink || total == 0.0 {
                return Vec::new();
            }
            g.graph
                .incident(x)
                .iter()
                .map(|&e| (g.graph.other_end(e, x), (1.0 / env.resistance(e)) / total))
                .collect()
        })
        .collect();
    if kernel[v].is_empty() {
        return vec![0.0; max_horizon + 1];
    }
    let mut mass = vec![0.0; n];
    mass[v] = 1.0;
    let mut curve = vec![1.0];
    for _ in 0..max_horizon {
        let mut next = vec![0.0; n];
        next[g.sink] += mass[g.sink];
        for x in 0..n {
            if x == g.sink || mass[x] == 0.0 {
                continue;
            }
            for &(y, q) in &kernel[x] {
                if y != v {
                    next[y] += mass[x] * q;
                }
            }
        }
        mass = next;
        curve.push(mass.iter().sum());
    }
    curve
}
