//! Bond percolation sharing its per-edge uniforms with environment sampling.
//!
//! Edge `e` is open iff `uniform_open01(seed, e) < p`, the same uniform that
//! [`crate::environment::sample_environment`] feeds through the inverse CDF.
//! Percolation at `p` and the threshold subgraph of any environment with
//! `μ(0, q] = p` drawn from the same seed are therefore identical.

use std::io::Write;

use serde::Serialize;

use crate::environment::{EdgeSet, Environment};
use crate::graph::{EdgeId, GraphWithSink, VertexId};
use crate::resistance::{effective_resistance, ResistanceError};
use crate::seed;
use crate::union_find::UnionFind;

#[derive(Debug, Clone, PartialEq)]
pub struct PercolationSample {
    pub open: EdgeSet,
    pub p: f64,
    pub seed: u64,
}

impl PercolationSample {
    pub fn open_fraction(&self) -> f64 {
        let n = self.open.mask().len();
        if n == 0 {
            0.0
        } else {
            self.open.count() as f64 / n as f64
        }
    }

    /// Writes `edge_id,open` rows with 0/1 flags.
    pub fn write_csv<W: Write>(&self, w: W) -> csv::Result<()> {
        let mut out = csv::Writer::from_writer(w);
        out.write_record(["edge_id", "open"])?;
        for (e, &open) in self.open.mask().iter().enumerate() {
            out.write_record([e.to_string(), u8::from(open).to_string()])?;
        }
        out.flush()?;
        Ok(())
    }
}

/// Maximal connected set of vertices in the open subgraph.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Cluster {
    /// Sorted; the first entry is the cluster label.
    pub vertices: Vec<VertexId>,
    pub edges: Vec<EdgeId>,
    pub contains_root: bool,
    pub touches_sink: bool,
}

impl Cluster {
    pub fn size(&self) -> usize {
        self.vertices.len()
    }

    pub fn is_isolated(&self) -> bool {
        self.vertices.len() == 1
    }

    pub fn label(&self) -> VertexId {
        self.vertices[0]
    }
}

/// Independent Bernoulli(`p`) bond percolation on `g`.
pub fn percolate(g: &GraphWithSink, p: f64, seed: u64) -> PercolationSample {
    assert!(
        (0.0..=1.0).contains(&p),
        "percolation parameter must lie in [0, 1]"
    );
    let mask = (0..g.edge_count())
        .map(|e| seed::uniform_open01(seed, e as u64) < p)
        .collect();
    PercolationSample {
        open: EdgeSet::from_mask(mask),
        p,
        seed,
    }
}

fn open_components(g: &GraphWithSink, sample: &PercolationSample) -> UnionFind {
    let mut uf = UnionFind::new(g.vertex_count());
    for e in sample.open.iter() {
        let (u, v) = g.graph.endpoints(e);
        uf.union(u, v);
    }
    uf
}

/// The open cluster containing `v`; a singleton exactly when `v` is isolated.
pub fn cluster_of(g: &GraphWithSink, sample: &PercolationSample, v: VertexId) -> Cluster {
    let mut uf = open_components(g, sample);
    let label = uf.find(v);
    let vertices: Vec<VertexId> = (0..g.vertex_count())
        .filter(|&u| uf.find(u) == label)
        .collect();
    let edges = sample
        .open
        .iter()
        .filter(|&e| uf.find(g.graph.endpoints(e).0) == label)
        .collect();
    Cluster {
        contains_root: uf.find(g.root) == label,
        touches_sink: uf.find(g.sink) == label,
        vertices,
        edges,
    }
}

/// All open clusters, ordered by label.
pub fn clusters(g: &GraphWithSink, sample: &PercolationSample) -> Vec<Cluster> {
    let mut uf = open_components(g, sample);
    let labels: Vec<VertexId> = (0..g.vertex_count()).map(|u| uf.find(u)).collect();
    let mut by_label: Vec<Option<usize>> = vec![None; g.vertex_count()];
    let mut out: Vec<Cluster> = Vec::new();
    for (u, &l) in labels.iter().enumerate() {
        let slot = *by_label[l].get_or_insert_with(|| {
            out.push(Cluster {
                vertices: Vec::new(),
                edges: Vec::new(),
                contains_root: false,
                touches_sink: false,
            });
            out.len() - 1
        });
        let c = &mut out[slot];
        c.vertices.push(u);
        c.contains_root |= u == g.root;
        c.touches_sink |= u == g.sink;
    }
    for e in sample.open.iter() {
        let slot = by_label[labels[g.graph.endpoints(e).0]].unwrap();
        out[slot].edges.push(e);
    }
    out
}

/// Unit-resistance environment on the open edges, infinite elsewhere.
pub fn open_environment(sample: &PercolationSample) -> Environment {
    let values = sample
        .open
        .mask()
        .iter()
        .map(|&open| if open { 1.0 } else { f64::INFINITY })
        .collect();
    Environment::from_values(values).expect("unit or infinite resistances are valid")
}

/// Resistance from `v` to the sink through its open cluster with unit
/// resistors; infinite when the cluster misses the sink.
pub fn cluster_resistance_to_sink(
    g: &GraphWithSink,
    sample: &PercolationSample,
    v: VertexId,
) -> Result<f64, ResistanceError> {
    if v == g.sink {
        return Ok(0.0);
    }
    effective_resistance(g, &open_environment(sample), v, g.sink)
}

/// JSON summary of the root cluster.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ClusterReport {
    pub size: usize,
    pub open_edges: usize,
    pub touches_sink: bool,
    pub isolated: bool,
    #[serde(serialize_with = "crate::percolation::serialize_resistance")]
    pub resistance: f64,
}

pub(crate) fn serialize_resistance<S: serde::Serializer>(r: &f64, s: S) -> Result<S::Ok, S::Error> {
    if r.is_infinite() {
        s.serialize_str("inf")
    } else {
        s.serialize_f64(*r)
    }
}

pub fn cluster_report(
    g: &GraphWithSink,
    sample: &PercolationSample,
    v: VertexId,
) -> Result<ClusterReport, ResistanceError> {
    let c = cluster_of(g, sample, v);
    Ok(ClusterReport {
        size: c.size(),
        open_edges: c.edges.len(),
        touches_sink: c.touches_sink,
        isolated: c.is_isolated(),
        resistance: cluster_resistance_to_sink(g, sample, v)?,
    })
}
