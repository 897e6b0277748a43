//! Effective resistance, unit-current flows and Dirichlet energy.
//!
//! Conductances are `1 / R(e)`, so infinite resistances drop out of the
//! weighted Laplacian. The sink is grounded (potential 0) and a unit current
//! enters at the source; the source potential is then the effective resistance.

use std::collections::BTreeSet;
use std::io::Write;

use nalgebra::{DMatrix, DVector};
use serde::Serialize;
use thiserror::Error;

use crate::environment::{format_resistance, ResistanceDistribution, Resistances};
use crate::graph::{EdgeId, GraphWithSink, VertexId};
use crate::union_find::UnionFind;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum ResistanceError {
    #[error(
        "source and sink must be distinct vertices of the graph (got {source_vertex} and {sink})"
    )]
    InvalidTerminals {
        source_vertex: VertexId,
        sink: VertexId,
    },
    #[error("no current flows: source and sink are separated by infinite resistances")]
    Disconnected,
    #[error("network does not reduce by series/parallel moves ({edges} edges remain)")]
    NotSeriesParallel { edges: usize },
    #[error("conjugate gradient stopped after {iterations} iterations at relative residual {residual:e}")]
    NoConvergence { iterations: usize, residual: f64 },
    #[error("reduced Laplacian is not positive definite")]
    Singular,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum SolverMethod {
    Dense,
    ConjugateGradient,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SolverConfig {
    /// Systems with fewer unknowns than this are solved by dense Cholesky.
    pub dense_limit: usize,
    /// Relative residual target for conjugate gradient.
    pub tolerance: f64,
    pub max_iterations: Option<usize>,
}

impl Default for SolverConfig {
    fn default() -> Self {
        Self {
            dense_limit: 500,
            tolerance: 1e-10,
            max_iterations: None,
        }
    }
}

/// Potentials for unit current from `source` to a grounded `sink`.
#[derive(Debug, Clone, PartialEq)]
pub struct VoltageSolution {
    pub source: VertexId,
    pub sink: VertexId,
    /// `None` when the effective resistance is infinite. Vertices cut off from
    /// the source by infinite resistances are reported at potential 0.
    pub potentials: Option<Vec<f64>>,
    pub effective_resistance: f64,
    /// `||L v - b|| / ||b||` on the reduced system.
    pub residual_norm: f64,
    pub method: Option<SolverMethod>,
}

impl VoltageSolution {
    pub fn is_finite(&self) -> bool {
        self.potentials.is_some()
    }

    pub fn write_csv<W: Write>(&self, w: W) -> csv::Result<()> {
        let mut out = csv::Writer::from_writer(w);
        out.write_record(["vertex", "potential"])?;
        if let Some(v) = &self.potentials {
            for (i, p) in v.iter().enumerate() {
                out.write_record([i.to_string(), p.to_string()])?;
            }
        }
        out.flush()?;
        Ok(())
    }
}

pub fn solve_voltages<R: Resistances + ?Sized>(
    g: &GraphWithSink,
    env: &R,
    source: VertexId,
    sink: VertexId,
) -> Result<VoltageSolution, ResistanceError> {
    solve_voltages_with(g, env, source, sink, &SolverConfig::default())
}

pub fn solve_voltages_with<R: Resistances + ?Sized>(
    g: &GraphWithSink,
    env: &R,
    source: VertexId,
    sink: VertexId,
    config: &SolverConfig,
) -> Result<VoltageSolution, ResistanceError> {
    let n = g.vertex_count();
    if source == sink || source >= n || sink >= n {
        return Err(ResistanceError::InvalidTerminals {
            source_vertex: source,
            sink,
        });
    }
    let graph = &g.graph;
    let conductance: Vec<f64> = (0..graph.edge_count())
        .map(|e| 1.0 / env.resistance(e))
        .collect();

    let mut uf = UnionFind::new(n);
    for (e, &(u, v)) in graph.edges().iter().enumerate() {
        if conductance[e] > 0.0 {
            uf.union(u, v);
        }
    }
    if !uf.connected(source, sink) {
        return Ok(VoltageSolution {
            source,
            sink,
            potentials: None,
            effective_resistance: f64::INFINITY,
            residual_norm: 0.0,
            method: None,
        });
    }

    // unknowns: the source's component minus the sink
    let mut index = vec![usize::MAX; n];
    let mut unknowns = Vec::new();
    for (v, slot) in index.iter_mut().enumerate() {
        if v != sink && uf.connected(v, source) {
            *slot = unknowns.len();
            unknowns.push(v);
        }
    }
    let m = unknowns.len();
    let laplacian = SparseLaplacian::assemble(g, &conductance, &index, m);
    let mut rhs = vec![0.0; m];
    rhs[index[source]] = 1.0;

    let (x, method) = if m < config.dense_limit {
        (laplacian.solve_dense(&rhs)?, SolverMethod::Dense)
    } else {
        let max_iter = config.max_iterations.unwrap_or(10 * m + 100);
        (
            laplacian.solve_cg(&rhs, config.tolerance, max_iter)?,
            SolverMethod::ConjugateGradient,
        )
    };
    let residual_norm = laplacian.relative_residual(&x, &rhs);

    let mut potentials = vec![0.0; n];
    for (i, &v) in unknowns.iter().enumerate() {
        potentials[v] = x[i];
    }
    Ok(VoltageSolution {
        source,
        sink,
        effective_resistance: potentials[source],
        potentials: Some(potentials),
        residual_norm,
        method: Some(method),
    })
}

/// Effective resistance between `source` and `sink`; infinite when separated.
pub fn effective_resistance<R: Resistances + ?Sized>(
    g: &GraphWithSink,
    env: &R,
    source: VertexId,
    sink: VertexId,
) -> Result<f64, ResistanceError> {
    Ok(solve_voltages(g, env, source, sink)?.effective_resistance)
}

/// Reduced weighted Laplacian in compressed row form.
struct SparseLaplacian {
    row_start: Vec<usize>,
    cols: Vec<usize>,
    vals: Vec<f64>,
    diag: Vec<f64>,
}

impl SparseLaplacian {
    fn assemble(g: &GraphWithSink, conductance: &[f64], index: &[usize], m: usize) -> Self {
        let mut rows: Vec<Vec<(usize, f64)>> = vec![Vec::new(); m];
        let mut diag = vec![0.0; m];
        for (e, &(u, v)) in g.graph.edges().iter().enumerate() {
            let c = conductance[e];
            if c == 0.0 {
                continue;
            }
            let (iu, iv) = (index[u], index[v]);
            if iu != usize::MAX {
                diag[iu] += c;
            }
            if iv != usize::MAX {
                diag[iv] += c;
            }
            if iu != usize::MAX && iv != usize::MAX {
                rows[iu].push((iv, -c));
                rows[iv].push((iu, -c));
            }
        }
        let mut row_start = Vec::with_capacity(m + 1);
        let mut cols = Vec::new();
        let mut vals = Vec::new();
        row_start.push(0);
        for (i, mut row) in rows.into_iter().enumerate() {
            row.push((i, diag[i]));
            row.sort_by_key(|&(j, _)| j);
            for (j, x) in row {
                if cols.len() > row_start[i] && *cols.last().unwrap() == j {
                    *vals.last_mut().unwrap() += x;
                } else {
                    cols.push(j);
                    vals.push(x);
                }
            }
            row_start.push(cols.len());
        }
        Self {
            row_start,
            cols,
            vals,
            diag,
        }
    }

    fn dim(&self) -> usize {
        self.diag.len()
    }

    fn matvec(&self, x: &[f64], y: &mut [f64]) {
        for (i, yi) in y.iter_mut().enumerate() {
            let mut s = 0.0;
            for k in self.row_start[i]..self.row_start[i + 1] {
                s += self.vals[k] * x[self.cols[k]];
            }
            *yi = s;
        }
    }

    fn relative_residual(&self, x: &[f64], b: &[f64]) -> f64 {
        let mut ax = vec![0.0; self.dim()];
        self.matvec(x, &mut ax);
        let r: f64 = ax
            .iter()
            .zip(b)
            .map(|(a, b)| (a - b).powi(2))
            .sum::<f64>()
            .sqrt();
        r / norm(b)
    }

    fn solve_dense(&self, b: &[f64]) -> Result<Vec<f64>, ResistanceError> {
        let m = self.dim();
        let mut a = DMatrix::<f64>::zeros(m, m);
        for i in 0..m {
            for k in self.row_start[i]..self.row_start[i + 1] {
                a[(i, self.cols[k])] = self.vals[k];
            }
        }
        let chol = a.cholesky().ok_or(ResistanceError::Singular)?;
        Ok(chol
            .solve(&DVector::from_column_slice(b))
            .as_slice()
            .to_vec())
    }

    /// Jacobi-preconditioned conjugate gradient.
    fn solve_cg(&self, b: &[f64], tol: f64, max_iter: usize) -> Result<Vec<f64>, ResistanceError> {
        let m = self.dim();
        let b_norm = norm(b);
        let mut x = vec![0.0; m];
        let mut r = b.to_vec();
        let mut z: Vec<f64> = r.iter().zip(&self.diag).map(|(r, d)| r / d).collect();
        let mut p = z.clone();
        let mut ap = vec![0.0; m];
        let mut rz = dot(&r, &z);
        for it in 0..max_iter {
            if norm(&r) <= tol * b_norm {
                return Ok(x);
            }
            self.matvec(&p, &mut ap);
            let alpha = rz / dot(&p, &ap);
            for i in 0..m {
                x[i] += alpha * p[i];
                r[i] -= alpha * ap[i];
            }
            for i in 0..m {
                z[i] = r[i] / self.diag[i];
            }
            let rz_next = dot(&r, &z);
            let beta = rz_next / rz;
            rz = rz_next;
            for i in 0..m {
                p[i] = z[i] + beta * p[i];
            }
            if !alpha.is_finite() {
                return Err(ResistanceError::NoConvergence {
                    iterations: it,
                    residual: norm(&r) / b_norm,
                });
            }
        }
        let residual = norm(&r) / b_norm;
        if residual <= tol {
            Ok(x)
        } else {
            Err(ResistanceError::NoConvergence {
                iterations: max_iter,
                residual,
            })
        }
    }
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

fn norm(a: &[f64]) -> f64 {
    dot(a, a).sqrt()
}

/// Signed edge function. `values[e]` is the flow from the lower-numbered
/// endpoint of `e` to the higher-numbered one.
#[derive(Debug, Clone, PartialEq)]
pub struct Flow {
    pub values: Vec<f64>,
    pub source: VertexId,
    pub sink: VertexId,
}

impl Flow {
    /// Net flow out of `v`.
    pub fn divergence(&self, g: &GraphWithSink, v: VertexId) -> f64 {
        g.graph
            .incident(v)
            .iter()
            .map(|&e| {
                let (a, b) = g.graph.endpoints(e);
                if a.min(b) == v {
                    self.values[e]
                } else {
                    -self.values[e]
                }
            })
            .sum()
    }

    pub fn strength(&self, g: &GraphWithSink) -> f64 {
        self.divergence(g, self.source)
    }

    /// Largest |divergence| over vertices other than source and sink.
    pub fn max_conservation_defect(&self, g: &GraphWithSink) -> f64 {
        (0..g.vertex_count())
            .filter(|&v| v != self.source && v != self.sink)
            .map(|v| self.divergence(g, v).abs())
            .fold(0.0, f64::max)
    }

    /// Flow value along `e` in the direction `from -> other end`.
    pub fn along(&self, g: &GraphWithSink, e: EdgeId, from: VertexId) -> f64 {
        let (a, b) = g.graph.endpoints(e);
        if a.min(b) == from {
            self.values[e]
        } else {
            -self.values[e]
        }
    }

    pub fn scaled(&self, c: f64) -> Self {
        Self {
            values: self.values.iter().map(|f| f * c).collect(),
            ..self.clone()
        }
    }

    pub fn sum_of_squares(&self) -> f64 {
        self.values.iter().map(|f| f * f).sum()
    }

    /// Writes `edge_id,u,v,flow,resistance,energy_contrib`, oriented `u < v`.
    pub fn write_csv<W: Write, R: Resistances + ?Sized>(
        &self,
        g: &GraphWithSink,
        env: &R,
        w: W,
    ) -> csv::Result<()> {
        let mut out = csv::Writer::from_writer(w);
        out.write_record(["edge_id", "u", "v", "flow", "resistance", "energy_contrib"])?;
        for (e, &(a, b)) in g.graph.edges().iter().enumerate() {
            let r = env.resistance(e);
            out.write_record([
                e.to_string(),
                a.min(b).to_string(),
                a.max(b).to_string(),
                self.values[e].to_string(),
                format_resistance(r),
                energy_term(self.values[e], r).to_string(),
            ])?;
        }
        out.flush()?;
        Ok(())
    }
}

/// Ohm's law on a finite solution: `F(e) = (V(u) - V(w)) / R(e)`.
pub fn unit_current_flow<R: Resistances + ?Sized>(
    g: &GraphWithSink,
    sol: &VoltageSolution,
    env: &R,
) -> Result<Flow, ResistanceError> {
    let v = sol
        .potentials
        .as_ref()
        .ok_or(ResistanceError::Disconnected)?;
    let values = g
        .graph
        .edges()
        .iter()
        .enumerate()
        .map(|(e, &(a, b))| {
            let r = env.resistance(e);
            if r.is_infinite() {
                0.0
            } else {
                (v[a.min(b)] - v[a.max(b)]) / r
            }
        })
        .collect();
    Ok(Flow {
        values,
        source: sol.source,
        sink: sol.sink,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct EnergyReport {
    pub energy: f64,
    pub contributions: Vec<f64>,
    pub finite: bool,
}

#[inline]
fn energy_term(f: f64, r: f64) -> f64 {
    if f == 0.0 {
        0.0
    } else {
        f * f * r
    }
}

/// `Σ F(e)² R(e)`, with zero-flow edges contributing 0 even when `R(e) = ∞`.
pub fn flow_energy<R: Resistances + ?Sized>(flow: &Flow, env: &R) -> EnergyReport {
    let contributions: Vec<f64> = flow
        .values
        .iter()
        .enumerate()
        .map(|(e, &f)| energy_term(f, env.resistance(e)))
        .collect();
    let energy: f64 = contributions.iter().sum();
    EnergyReport {
        energy,
        finite: energy.is_finite(),
        contributions,
    }
}

/// `E Σ R(e) F(e)² = (∫ x dμ) Σ F(e)²` for i.i.d. resistances with law `dist`.
pub fn expected_energy_bound(dist: &ResistanceDistribution, flow: &Flow) -> f64 {
    let squares = flow.sum_of_squares();
    if squares == 0.0 {
        0.0
    } else {
        dist.mean() * squares
    }
}

/// Effective resistance by repeated series and parallel reduction.
///
/// Works on any network that collapses to a single `s`–`t` edge; dangling
/// pieces and components away from `s` are discarded first.
pub fn series_parallel_reduce<R: Resistances + ?Sized>(
    g: &GraphWithSink,
    env: &R,
    s: VertexId,
    t: VertexId,
) -> Result<f64, ResistanceError> {
    let n = g.vertex_count();
    if s == t || s >= n || t >= n {
        return Err(ResistanceError::InvalidTerminals {
            source_vertex: s,
            sink: t,
        });
    }
    let mut uf = UnionFind::new(n);
    for (e, &(u, v)) in g.graph.edges().iter().enumerate() {
        if env.resistance(e).is_finite() {
            uf.union(u, v);
        }
    }
    if !uf.connected(s, t) {
        return Ok(f64::INFINITY);
    }

    let mut edges: Vec<Option<(VertexId, VertexId, f64)>> = Vec::new();
    let mut incident: Vec<BTreeSet<usize>> = vec![BTreeSet::new(); n];
    for (e, &(u, v)) in g.graph.edges().iter().enumerate() {
        let r = env.resistance(e);
        if r.is_finite() && uf.connected(u, s) {
            incident[u].insert(edges.len());
            incident[v].insert(edges.len());
            edges.push(Some((u, v, r)));
        }
    }
    let other = |e: (VertexId, VertexId, f64), x: VertexId| if e.0 == x { e.1 } else { e.0 };

    loop {
        let mut changed = false;
        // parallel moves
        for x in 0..n {
            let ids: Vec<usize> = incident[x].iter().copied().collect();
            for (i, &a) in ids.iter().enumerate() {
                let Some(ea) = edges[a] else { continue };
                for &b in &ids[i + 1..] {
                    let Some(eb) = edges[b] else { continue };
                    if other(ea, x) == other(eb, x) {
                        let ra = edges[a].unwrap().2;
                        edges[a] = Some((ea.0, ea.1, ra * eb.2 / (ra + eb.2)));
                        edges[b] = None;
                        incident[eb.0].remove(&b);
                        incident[eb.1].remove(&b);
                        changed = true;
                    }
                }
            }
        }
        // dangling and series moves
        for x in 0..n {
            if x == s || x == t {
                continue;
            }
            let ids: Vec<usize> = incident[x].iter().copied().collect();
            match ids.as_slice() {
                [a] => {
                    let (u, v, _) = edges[*a].unwrap();
                    incident[u].remove(a);
                    incident[v].remove(a);
                    edges[*a] = None;
                    changed = true;
                }
                [a, b] => {
                    let (ea, eb) = (edges[*a].unwrap(), edges[*b].unwrap());
                    let (y, z) = (other(ea, x), other(eb, x));
                    if y == z {
                        continue;
                    }
                    incident[x].clear();
                    incident[y].remove(a);
                    incident[z].remove(b);
                    edges[*b] = None;
                    edges[*a] = Some((y, z, ea.2 + eb.2));
                    incident[y].insert(*a);
                    incident[z].insert(*a);
                    changed = true;
                }
                _ => {}
            }
        }
        let live: Vec<(VertexId, VertexId, f64)> = edges.iter().flatten().copied().collect();
        if let [(u, v, r)] = live.as_slice() {
            if (*u == s && *v == t) || (*u == t && *v == s) {
                return Ok(*r);
            }
        }
        if !changed {
            return Err(ResistanceError::NotSeriesParallel { edges: live.len() });
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::environment::Environment;
    use crate::graph::{build_lattice_ball, FiniteGraph};

    fn network(n: usize, edges: &[(usize, usize)], root: usize, sink: usize) -> GraphWithSink {
        GraphWithSink::new(FiniteGraph::from_edges(n, edges).unwrap(), root, sink, 1).unwrap()
    }

    #[test]
    fn series_pair() {
        let g = network(3, &[(0, 1), (1, 2)], 0, 2);
        let env = Environment::constant(2, 1.0);
        let sol = solve_voltages(&g, &env, 0, 2).unwrap();
        assert!((sol.effective_resistance - 2.0).abs() < 1e-12);
        let v = sol.potentials.as_ref().unwrap();
        for (a, b) in v.iter().zip([2.0, 1.0, 0.0]) {
            assert!((a - b).abs() < 1e-12);
        }
        let flow = unit_current_flow(&g, &sol, &env).unwrap();
        assert!(flow.values.iter().all(|f| (f - 1.0).abs() < 1e-12));
        assert!((flow_energy(&flow, &env).energy - 2.0).abs() < 1e-12);
        assert_eq!(series_parallel_reduce(&g, &env, 0, 2).unwrap(), 2.0);
    }

    #[test]
    fn parallel_pair() {
        let g = network(2, &[(0, 1), (0, 1)], 0, 1);
        let env = Environment::constant(2, 1.0);
        let sol = solve_voltages(&g, &env, 0, 1).unwrap();
        assert!((sol.effective_resistance - 0.5).abs() < 1e-12);
        let flow = unit_current_flow(&g, &sol, &env).unwrap();
        assert!(flow.values.iter().all(|f| (f - 0.5).abs() < 1e-12));
    }

    #[test]
    fn single_edge_and_simple_reductions() {
        let g = network(2, &[(0, 1)], 0, 1);
        let env = Environment::constant(1, 3.25);
        assert!((effective_resistance(&g, &env, 0, 1).unwrap() - 3.25).abs() < 1e-12);

        let series = network(3, &[(0, 1), (1, 2)], 0, 2);
        let env = Environment::from_values(vec![1.0, 2.0]).unwrap();
        assert_eq!(series_parallel_reduce(&series, &env, 0, 2).unwrap(), 3.0);

        let par = network(2, &[(0, 1), (0, 1)], 0, 1);
        let env = Environment::from_values(vec![2.0, 2.0]).unwrap();
        assert_eq!(series_parallel_reduce(&par, &env, 0, 1).unwrap(), 1.0);
    }

    #[test]
    fn disconnected_network_has_infinite_resistance() {
        let g = network(3, &[(0, 1), (1, 2)], 0, 2);
        let env = Environment::from_values(vec![1.0, f64::INFINITY]).unwrap();
        let sol = solve_voltages(&g, &env, 0, 2).unwrap();
        assert!(sol.effective_resistance.is_infinite());
        assert!(sol.potentials.is_none());
        assert_eq!(
            unit_current_flow(&g, &sol, &env),
            Err(ResistanceError::Disconnected)
        );
        assert!(series_parallel_reduce(&g, &env, 0, 2)
            .unwrap()
            .is_infinite());
    }

    #[test]
    fn cut_off_vertices_do_not_break_the_solve() {
        // vertex 3 hangs off an infinite edge
        let g = network(4, &[(0, 1), (1, 2), (1, 3)], 0, 2);
        let env = Environment::from_values(vec![1.0, 1.0, f64::INFINITY]).unwrap();
        let sol = solve_voltages(&g, &env, 0, 2).unwrap();
        assert!((sol.effective_resistance - 2.0).abs() < 1e-12);
        let flow = unit_current_flow(&g, &sol, &env).unwrap();
        assert_eq!(flow.values[2], 0.0);
        let report = flow_energy(&flow, &env);
        assert_eq!(report.contributions[2], 0.0);
        assert!(report.finite);
    }

    #[test]
    fn wheatstone_bridge_is_not_series_parallel() {
        let g = network(4, &[(0, 1), (0, 2), (1, 2), (1, 3), (2, 3)], 0, 3);
        let env = Environment::constant(5, 1.0);
        assert!(matches!(
            series_parallel_reduce(&g, &env, 0, 3),
            Err(ResistanceError::NotSeriesParallel { .. })
        ));
        // balanced bridge: R = 1
        assert!((effective_resistance(&g, &env, 0, 3).unwrap() - 1.0).abs() < 1e-12);
    }

    #[test]
    fn dense_and_cg_agree_on_a_lattice_ball() {
        let g = build_lattice_ball(3, 5).unwrap();
        let env = Environment::constant(g.edge_count(), 1.0);
        let dense = solve_voltages_with(
            &g,
            &env,
            g.root,
            g.sink,
            &SolverConfig {
                dense_limit: usize::MAX,
                ..Default::default()
            },
        )
        .unwrap();
        let cg = solve_voltages_with(
            &g,
            &env,
            g.root,
            g.sink,
            &SolverConfig {
                dense_limit: 0,
                ..Default::default()
            },
        )
        .unwrap();
        assert_eq!(cg.method, Some(SolverMethod::ConjugateGradient));
        assert!(cg.residual_norm <= 1e-10);
        let rel = (dense.effective_resistance - cg.effective_resistance).abs()
            / dense.effective_resistance;
        assert!(rel < 1e-8, "{rel}");
    }

    #[test]
    fn flow_scaling_is_quadratic_in_energy() {
        let g = build_lattice_ball(2, 3).unwrap();
        let env = Environment::constant(g.edge_count(), 2.0);
        let sol = solve_voltages(&g, &env, g.root, g.sink).unwrap();
        let flow = unit_current_flow(&g, &sol, &env).unwrap();
        let e1 = flow_energy(&flow, &env).energy;
        let e3 = flow_energy(&flow.scaled(3.0), &env).energy;
        assert!((e3 - 9.0 * e1).abs() < 1e-12 * e3);
    }

    #[test]
    fn expected_energy_identity() {
        let g = network(3, &[(0, 1), (1, 2)], 0, 2);
        let flow = Flow {
            values: vec![1.0, 1.0],
            source: 0,
            sink: 2,
        };
        let atoms = ResistanceDistribution::Atoms {
            atoms: vec![
                crate::environment::Atom {
                    value: 1.0,
                    mass: 0.5,
                },
                crate::environment::Atom {
                    value: 5.0,
                    mass: 0.5,
                },
            ],
        };
        assert_eq!(expected_energy_bound(&atoms, &flow), 6.0);
        let unit = ResistanceDistribution::Constant { value: 1.0 };
        assert_eq!(expected_energy_bound(&unit, &flow), flow.sum_of_squares());
        assert_eq!(flow.strength(&g), 1.0);
    }

    #[test]
    fn csv_exports() {
        let g = network(3, &[(0, 1), (1, 2)], 0, 2);
        let env = Environment::constant(2, 1.0);
        let sol = solve_voltages(&g, &env, 0, 2).unwrap();
        let mut buf = Vec::new();
        sol.write_csv(&mut buf).unwrap();
        assert_eq!(String::from_utf8(buf).unwrap().lines().count(), 4);
        let flow = unit_current_flow(&g, &sol, &env).unwrap();
        let mut buf = Vec::new();
        flow.write_csv(&g, &env, &mut buf).unwrap();
        let text = String::from_utf8(buf).unwrap();
        assert!(text.starts_with("edge_id,u,v,flow,resistance,energy_contrib\n"));
    }
}
