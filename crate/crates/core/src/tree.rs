//! Branching number, critical probability and exponentially decaying flows on
//! rooted trees.
//!
//! The edge into a vertex at level `j + 1` has distance `j` from the root.
//! The branching number is located by bisection on `λ`: with edge capacities
//! `λ^-dist(e)`, the maximal root-to-frontier flow stays bounded away from
//! zero as the frontier recedes iff `λ` is below the branching number.

use std::io::Write;
use std::str::FromStr;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::graph::MAX_VERTICES;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum TreeError {
    #[error("invalid tree spec: {0}")]
    InvalidSpec(String),
    #[error("tree of depth {depth} would exceed {limit} vertices")]
    Capacity { depth: usize, limit: usize },
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),
    #[error("max flow {flow} and min cut {cut} disagree")]
    FlowCutMismatch { flow: f64, cut: f64 },
}

/// How many children each vertex has.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case")]
pub enum TreeSpec {
    Constant {
        b: usize,
    },
    /// Vertices at level `j` have `pattern[j % len]` children.
    Periodic {
        pattern: Vec<usize>,
    },
    /// Child counts in breadth-first order; missing entries are leaves.
    Explicit {
        children: Vec<usize>,
    },
}

impl FromStr for TreeSpec {
    type Err = TreeError;

    /// Accepts `b=2`, `pattern=2,3` or `children=2,1,1,...`.
    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let (key, value) = s
            .split_once('=')
            .ok_or_else(|| TreeError::InvalidSpec(format!("expected key=value, got {s:?}")))?;
        let list = || {
            value
                .split(',')
                .map(|x| x.trim().parse::<usize>())
                .collect::<Result<Vec<_>, _>>()
                .map_err(|e| TreeError::InvalidSpec(format!("{s:?}: {e}")))
        };
        let spec = match key.trim() {
            "b" => TreeSpec::Constant {
                b: value
                    .trim()
                    .parse()
                    .map_err(|e| TreeError::InvalidSpec(format!("{s:?}: {e}")))?,
            },
            "pattern" => TreeSpec::Periodic { pattern: list()? },
            "children" => TreeSpec::Explicit { children: list()? },
            other => return Err(TreeError::InvalidSpec(format!("unknown key {other:?}"))),
        };
        spec.validate()?;
        Ok(spec)
    }
}

impl TreeSpec {
    pub fn validate(&self) -> Result<(), TreeError> {
        match self {
            Self::Periodic { pattern } if pattern.is_empty() => {
                Err(TreeError::InvalidSpec("periodic pattern is empty".into()))
            }
            Self::Explicit { children } if children.is_empty() => {
                Err(TreeError::InvalidSpec("child list is empty".into()))
            }
            _ => Ok(()),
        }
    }

    fn children_of(&self, vertex: usize, level: usize) -> usize {
        match self {
            Self::Constant { b } => *b,
            Self::Periodic { pattern } => pattern[level % pattern.len()],
            Self::Explicit { children } => children.get(vertex).copied().unwrap_or(0),
        }
    }

    fn max_children(&self) -> usize {
        match self {
            Self::Constant { b } => *b,
            Self::Periodic { pattern } => pattern.iter().copied().max().unwrap_or(0),
            Self::Explicit { children } => children.iter().copied().max().unwrap_or(0),
        }
    }
}

/// A tree truncated at `depth`, numbered breadth-first from the root 0.
#[derive(Debug, Clone, PartialEq)]
pub struct Tree {
    pub depth: usize,
    parent: Vec<usize>,
    level: Vec<usize>,
    first_child: Vec<usize>,
    child_count: Vec<usize>,
}

impl Tree {
    pub fn build(spec: &TreeSpec, depth: usize) -> Result<Self, TreeError> {
        spec.validate()?;
        if depth == 0 {
            return Err(TreeError::InvalidParameter(
                "depth must be at least 1".into(),
            ));
        }
        let mut parent = vec![0];
        let mut level = vec![0];
        let mut first_child = Vec::new();
        let mut child_count = Vec::new();
        let mut v = 0;
        while v < parent.len() {
            let k = if level[v] < depth {
                spec.children_of(v, level[v])
            } else {
                0
            };
            first_child.push(parent.len());
            child_count.push(k);
            if parent.len() + k > MAX_VERTICES {
                return Err(TreeError::Capacity {
                    depth,
                    limit: MAX_VERTICES,
                });
            }
            for _ in 0..k {
                parent.push(v);
                level.push(level[v] + 1);
            }
            v += 1;
        }
        Ok(Self {
            depth,
            parent,
            level,
            first_child,
            child_count,
        })
    }

    pub fn vertex_count(&self) -> usize {
        self.parent.len()
    }

    pub fn level(&self, v: usize) -> usize {
        self.level[v]
    }

    pub fn parent(&self, v: usize) -> Option<usize> {
        (v != 0).then(|| self.parent[v])
    }

    pub fn children(&self, v: usize) -> std::ops::Range<usize> {
        self.first_child[v]..self.first_child[v] + self.child_count[v]
    }

    /// Distance from the root of the edge entering `v` (`v != 0`).
    pub fn edge_dist(&self, v: usize) -> usize {
        self.level[v] - 1
    }

    pub fn level_sizes(&self) -> Vec<usize> {
        let mut sizes = vec![0; self.depth + 1];
        for &l in &self.level {
            sizes[l] += 1;
        }
        sizes
    }

    fn is_frontier(&self, v: usize) -> bool {
        self.level[v] == self.depth
    }
}

/// Maximal flow from the root to the depth-`d` frontier with capacities
/// `λ^-dist(e)`, together with the cut that certifies it.
#[derive(Debug, Clone, PartialEq)]
pub struct TreeMaxFlow {
    pub lambda: f64,
    pub value: f64,
    /// Flow on the edge entering each vertex; entry 0 is unused.
    pub edge_flow: Vec<f64>,
    /// Vertices whose entering edge is in the certifying cut.
    pub cut: Vec<usize>,
    pub cut_capacity: f64,
}

pub fn max_flow(tree: &Tree, lambda: f64) -> Result<TreeMaxFlow, TreeError> {
    if !(lambda > 0.0) {
        return Err(TreeError::InvalidParameter(format!(
            "lambda must be positive, got {lambda}"
        )));
    }
    let n = tree.vertex_count();
    let cap = |v: usize| lambda.powi(-(tree.edge_dist(v) as i32));

    // subtree capacity, bottom-up
    let mut through = vec![0.0f64; n];
    for v in (0..n).rev() {
        through[v] = if tree.is_frontier(v) {
            f64::INFINITY
        } else {
            tree.children(v).map(|c| cap(c).min(through[c])).sum()
        };
    }

    // route top-down, each child receiving its share of what arrives
    let mut edge_flow = vec![0.0f64; n];
    let mut arriving = vec![0.0f64; n];
    arriving[0] = through[0];
    for v in 0..n {
        if tree.is_frontier(v) || through[v] == 0.0 {
            continue;
        }
        let scale = arriving[v] / through[v];
        for c in tree.children(v) {
            let x = cap(c).min(through[c]) * scale;
            edge_flow[c] = x;
            arriving[c] = x;
        }
    }
    let value = through[0];

    // residual reachability from the root gives a cut of equal capacity
    let mut reachable = vec![false; n];
    reachable[0] = true;
    let mut cut = Vec::new();
    let mut cut_capacity = 0.0;
    for v in 1..n {
        let p = tree.parent[v];
        if !reachable[p] {
            continue;
        }
        let c = cap(v);
        if edge_flow[v] >= c * (1.0 - 1e-12) {
            cut.push(v);
            cut_capacity += c;
        } else {
            reachable[v] = true;
            if tree.is_frontier(v) {
                // augmenting path to the frontier
                return Err(TreeError::FlowCutMismatch {
                    flow: value,
                    cut: f64::INFINITY,
                });
            }
        }
    }
    if (value - cut_capacity).abs() > 1e-9 * value.max(1.0) {
        return Err(TreeError::FlowCutMismatch {
            flow: value,
            cut: cut_capacity,
        });
    }
    Ok(TreeMaxFlow {
        lambda,
        value,
        edge_flow,
        cut,
        cut_capacity,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BranchingEstimate {
    pub br: f64,
    pub dim: f64,
    pub lower: f64,
    pub upper: f64,
    pub depths: (usize, usize),
    pub warnings: Vec<String>,
}

/// Brackets the branching number to within `tol`.
///
/// `λ` counts as sustainable when the maximal flows to depth `depth / 2` and
/// to `depth` differ by less than `tol` relatively.
pub fn branching_number(
    spec: &TreeSpec,
    depth: usize,
    tol: f64,
) -> Result<BranchingEstimate, TreeError> {
    if depth < 2 {
        return Err(TreeError::InvalidParameter(
            "depth must be at least 2".into(),
        ));
    }
    if !(tol > 0.0) {
        return Err(TreeError::InvalidParameter(
            "tolerance must be positive".into(),
        ));
    }
    let near = Tree::build(spec, depth / 2)?;
    let far = Tree::build(spec, depth)?;
    let sustained = |lambda: f64| -> Result<bool, TreeError> {
        let a = max_flow(&near, lambda)?.value;
        let b = max_flow(&far, lambda)?.value;
        Ok(a > 0.0 && b > 0.0 && (a - b).abs() < tol * a)
    };

    let mut warnings = Vec::new();
    let mut lo = 1.0;
    if !sustained(lo)? {
        warnings.push("flow does not persist at lambda = 1; tree looks finite".into());
        lo = 0.0;
    }
    let mut hi = spec.max_children() as f64 + 1.0;
    while sustained(hi)? {
        lo = hi;
        hi *= 2.0;
        if hi > 1e6 {
            return Err(TreeError::InvalidParameter(
                "no upper bracket below 1e6".into(),
            ));
        }
    }
    // coarse scan for non-monotone behaviour inside the bracket
    let steps = 16;
    let mut seen_fail: Option<f64> = None;
    for i in 1..steps {
        let x = lo + (hi - lo) * i as f64 / steps as f64;
        let ok = sustained(x)?;
        match (ok, seen_fail) {
            (false, None) => seen_fail = Some(x),
            (true, Some(f)) => {
                warnings.push(format!(
                    "non-monotone bracket: fails at {f:.4} but holds at {x:.4}; widened"
                ));
                hi = hi.max(x + (hi - lo) / steps as f64);
                break;
            }
            _ => {}
        }
    }
    while hi - lo > tol / 4.0 {
        let mid = 0.5 * (lo + hi);
        if sustained(mid)? {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    let br = 0.5 * (lo + hi);
    Ok(BranchingEstimate {
        br,
        dim: br.max(f64::MIN_POSITIVE).ln().max(0.0),
        lower: lo,
        upper: hi,
        depths: (depth / 2, depth),
        warnings,
    })
}

/// `p_c = e^-dim`.
pub fn critical_probability(dim: f64) -> Result<f64, TreeError> {
    if !(dim >= 0.0) || dim.is_infinite() {
        return Err(TreeError::InvalidParameter(format!(
            "dimension must be finite and nonnegative, got {dim}"
        )));
    }
    Ok((-dim).exp())
}

/// Equal-splitting unit flow with its decay certificate `F(e) <= C ρ^dist(e)`.
#[derive(Debug, Clone, PartialEq)]
pub struct TreeFlow {
    pub tree: Tree,
    /// Flow on the edge entering each vertex; entry 0 is unused.
    pub edge_flow: Vec<f64>,
    pub rho: f64,
    /// Smallest `C` valid over the whole truncation.
    pub constant: f64,
    /// Smallest `C` valid one level shallower.
    pub previous_constant: f64,
    pub root_strength: f64,
    /// `C` is stable across the last two depths.
    pub pass: bool,
}

/// Serializable summary of a [`TreeFlow`].
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DecayCertificate {
    pub rho: f64,
    pub constant: f64,
    pub previous_constant: f64,
    pub depth: usize,
    pub root_strength: f64,
    pub max_conservation_defect: f64,
    pub pass: bool,
}

impl TreeFlow {
    /// Exhaustive check of `F(e) <= C ρ^dist(e)` over the truncation.
    pub fn decay_holds(&self) -> bool {
        (1..self.tree.vertex_count()).all(|v| {
            let bound = self.constant * self.rho.powi(self.tree.edge_dist(v) as i32);
            self.edge_flow[v] <= bound * (1.0 + 1e-12)
        })
    }

    /// Largest |inflow - outflow| over internal non-root vertices.
    pub fn max_conservation_defect(&self) -> f64 {
        (1..self.tree.vertex_count())
            .filter(|&v| !self.tree.children(v).is_empty())
            .map(|v| {
                let out: f64 = self.tree.children(v).map(|c| self.edge_flow[c]).sum();
                (self.edge_flow[v] - out).abs()
            })
            .fold(0.0, f64::max)
    }

    pub fn certificate(&self) -> DecayCertificate {
        DecayCertificate {
            rho: self.rho,
            constant: self.constant,
            previous_constant: self.previous_constant,
            depth: self.tree.depth,
            root_strength: self.root_strength,
            max_conservation_defect: self.max_conservation_defect(),
            pass: self.pass,
        }
    }

    /// Writes `edge_id,parent,child,dist,flow,bound`; edge ids are `child - 1`.
    pub fn write_csv<W: Write>(&self, w: W) -> csv::Result<()> {
        let mut out = csv::Writer::from_writer(w);
        out.write_record(["edge_id", "parent", "child", "dist", "flow", "bound"])?;
        for v in 1..self.tree.vertex_count() {
            let d = self.tree.edge_dist(v);
            out.write_record([
                (v - 1).to_string(),
                self.tree.parent[v].to_string(),
                v.to_string(),
                d.to_string(),
                self.edge_flow[v].to_string(),
                (self.constant * self.rho.powi(d as i32)).to_string(),
            ])?;
        }
        out.flush()?;
        Ok(())
    }
}

pub fn build_decay_flow(spec: &TreeSpec, rho: f64, depth: usize) -> Result<TreeFlow, TreeError> {
    if !(rho > 0.0 && rho < 1.0) {
        return Err(TreeError::InvalidParameter(format!(
            "rho must lie in (0, 1), got {rho}"
        )));
    }
    if depth < 2 {
        return Err(TreeError::InvalidParameter(
            "depth must be at least 2".into(),
        ));
    }
    let tree = Tree::build(spec, depth)?;
    let n = tree.vertex_count();
    let mut edge_flow = vec![0.0; n];
    let mut inflow = vec![0.0; n];
    inflow[0] = 1.0;
    for v in 0..n {
        let kids = tree.children(v);
        if kids.is_empty() {
            continue;
        }
        let share = inflow[v] / kids.len() as f64;
        for c in kids {
            edge_flow[c] = share;
            inflow[c] = share;
        }
    }
    let mut constant: f64 = 0.0;
    let mut previous_constant: f64 = 0.0;
    for (v, &f) in edge_flow.iter().enumerate().skip(1) {
        let d = tree.edge_dist(v);
        let ratio = f / rho.powi(d as i32);
        constant = constant.max(ratio);
        if d + 1 < depth {
            previous_constant = previous_constant.max(ratio);
        }
    }
    let root_strength = tree.children(0).map(|c| edge_flow[c]).sum();
    let pass =
        constant.is_finite() && (constant - previous_constant).abs() <= 1e-9 * previous_constant;
    Ok(TreeFlow {
        tree,
        edge_flow,
        rho,
        constant,
        previous_constant,
        root_strength,
        pass,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TreeEnergy {
    pub energy: f64,
    pub level_energies: Vec<f64>,
    /// Largest ratio of consecutive level energies near the frontier.
    pub tail_ratio: f64,
    /// Geometric bound on the energy beyond the truncation when the ratio is below 1.
    pub tail_bound: Option<f64>,
}

/// `Σ F(e)²` with unit resistances, grouped by edge distance.
pub fn flow_energy_on_tree(flow: &TreeFlow) -> TreeEnergy {
    let tree = &flow.tree;
    let mut level_energies = vec![0.0; tree.depth];
    for v in 1..tree.vertex_count() {
        level_energies[tree.edge_dist(v)] += flow.edge_flow[v].powi(2);
    }
    let energy = level_energies.iter().sum();
    let window = level_energies.len().saturating_sub(1).min(4);
    let tail_ratio = level_energies
        .windows(2)
        .rev()
        .take(window)
        .map(|w| if w[0] > 0.0 { w[1] / w[0] } else { 0.0 })
        .fold(0.0, f64::max);
    let last = *level_energies.last().unwrap_or(&0.0);
    let tail_bound = (tail_ratio < 1.0).then(|| last * tail_ratio / (1.0 - tail_ratio));
    TreeEnergy {
        energy,
        level_energies,
        tail_ratio,
        tail_bound,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::collections::VecDeque;

    /// Edmonds–Karp on the tree plus a super-sink joined to every frontier vertex.
    fn edmonds_karp(tree: &Tree, lambda: f64) -> f64 {
        let n = tree.vertex_count();
        let sink = n;
        let mut cap = vec![std::collections::HashMap::<usize, f64>::new(); n + 1];
        for v in 1..n {
            let p = tree.parent(v).unwrap();
            *cap[p].entry(v).or_default() += lambda.powi(-(tree.edge_dist(v) as i32));
            cap[v].entry(p).or_default();
            if tree.level(v) == tree.depth {
                cap[v].insert(sink, f64::INFINITY);
                cap[sink].entry(v).or_default();
            }
        }
        let mut total = 0.0;
        loop {
            let mut prev = vec![usize::MAX; n + 1];
            prev[0] = 0;
            let mut q = VecDeque::from([0]);
            while let Some(u) = q.pop_front() {
                for (&w, &c) in &cap[u] {
                    if c > 1e-15 && prev[w] == usize::MAX {
                        prev[w] = u;
                        q.push_back(w);
                    }
                }
            }
            if prev[sink] == usize::MAX {
                return total;
            }
            let mut bottleneck = f64::INFINITY;
            let mut w = sink;
            while w != 0 {
                bottleneck = bottleneck.min(cap[prev[w]][&w]);
                w = prev[w];
            }
            let mut w = sink;
            while w != 0 {
                let u = prev[w];
                *cap[u].get_mut(&w).unwrap() -= bottleneck;
                *cap[w].get_mut(&u).unwrap() += bottleneck;
                w = u;
            }
            total += bottleneck;
        }
    }

    #[test]
    fn spec_parsing() {
        assert_eq!(
            "b=2".parse::<TreeSpec>().unwrap(),
            TreeSpec::Constant { b: 2 }
        );
        assert_eq!(
            "pattern=2,3".parse::<TreeSpec>().unwrap(),
            TreeSpec::Periodic {
                pattern: vec![2, 3]
            }
        );
        assert!("q=2".parse::<TreeSpec>().is_err());
        assert!("b=x".parse::<TreeSpec>().is_err());
    }

    #[test]
    fn tree_shape() {
        let t = Tree::build(
            &TreeSpec::Periodic {
                pattern: vec![2, 3],
            },
            4,
        )
        .unwrap();
        assert_eq!(t.level_sizes(), vec![1, 2, 6, 12, 36]);
        let t = Tree::build(
            &TreeSpec::Explicit {
                children: vec![2, 0, 1],
            },
            3,
        )
        .unwrap();
        assert_eq!(t.level_sizes(), vec![1, 2, 1, 0]);
    }

    #[test]
    fn max_flow_matches_edmonds_karp() {
        let specs = [
            TreeSpec::Constant { b: 2 },
            TreeSpec::Periodic {
                pattern: vec![1, 3],
            },
            TreeSpec::Explicit {
                children: vec![3, 0, 2, 1, 1, 2, 0, 1, 1, 2, 3],
            },
        ];
        for spec in &specs {
            let tree = Tree::build(spec, 5).unwrap();
            for lambda in [0.7, 1.0, 1.5, 2.0, 2.6, 4.0] {
                let flow = max_flow(&tree, lambda).unwrap();
                let ek = edmonds_karp(&tree, lambda);
                assert!(
                    (flow.value - ek).abs() < 1e-9 * ek.max(1.0),
                    "{spec:?} λ={lambda}: {} vs {ek}",
                    flow.value
                );
                assert!((flow.value - flow.cut_capacity).abs() < 1e-9 * flow.value.max(1.0));
            }
        }
    }

    #[test]
    fn homogeneous_max_flow_closed_form() {
        // min over level cuts of b (b/λ)^j, j = 0..d-1
        let tree = Tree::build(&TreeSpec::Constant { b: 3 }, 6).unwrap();
        for lambda in [2.0f64, 3.0, 3.5, 5.0] {
            let expected = (0..6)
                .map(|j| 3.0 * (3.0 / lambda).powi(j))
                .fold(f64::INFINITY, f64::min);
            let got = max_flow(&tree, lambda).unwrap().value;
            assert!((got - expected).abs() < 1e-12 * expected, "λ={lambda}");
        }
    }

    #[test]
    fn branching_numbers() {
        let b2 = branching_number(&TreeSpec::Constant { b: 2 }, 14, 0.02).unwrap();
        assert!((b2.br - 2.0).abs() <= 0.02, "{b2:?}");
        let ray = branching_number(&TreeSpec::Constant { b: 1 }, 14, 0.02).unwrap();
        assert!((ray.br - 1.0).abs() <= 0.02, "{ray:?}");
        let per = branching_number(
            &TreeSpec::Periodic {
                pattern: vec![2, 3],
            },
            14,
            0.02,
        )
        .unwrap();
        assert!((per.br - 6f64.sqrt()).abs() <= 0.02, "{per:?}");
        assert!(branching_number(&TreeSpec::Constant { b: 2 }, 1, 0.02).is_err());
    }

    #[test]
    fn critical_probabilities() {
        assert_eq!(critical_probability(0.0).unwrap(), 1.0);
        assert!((critical_probability(2f64.ln()).unwrap() - 0.5).abs() < 1e-15);
        assert!((critical_probability(3f64.ln()).unwrap() - 1.0 / 3.0).abs() < 1e-15);
        assert!(critical_probability(-1.0).is_err());
    }

    #[test]
    fn decay_flow_on_binary_tree() {
        let f = build_decay_flow(&TreeSpec::Constant { b: 2 }, 0.6, 12).unwrap();
        assert!(f.pass);
        assert!((f.constant - 0.5).abs() < 1e-12);
        assert!(f.decay_holds());
        assert!(f.max_conservation_defect() < 1e-15);
        assert!((f.root_strength - 1.0).abs() < 1e-15);
        for v in 1..f.tree.vertex_count() {
            let d = f.tree.edge_dist(v) as i32;
            assert!((f.edge_flow[v] - 2f64.powi(-(d + 1))).abs() < 1e-15);
        }
        let boundary = build_decay_flow(&TreeSpec::Constant { b: 2 }, 0.5, 12).unwrap();
        assert!(boundary.pass);
        assert!((boundary.constant - 0.5).abs() < 1e-12);
    }

    #[test]
    fn decay_fails_on_the_ray() {
        let f = build_decay_flow(&TreeSpec::Constant { b: 1 }, 0.9, 10).unwrap();
        assert!(!f.pass);
        assert!((f.constant - 0.9f64.powi(-9)).abs() < 1e-9);
        assert!(
            f.decay_holds(),
            "the computed constant is still valid on the truncation"
        );
        assert!(build_decay_flow(&TreeSpec::Constant { b: 2 }, 1.0, 10).is_err());
    }

    #[test]
    fn tree_energies() {
        let bin =
            flow_energy_on_tree(&build_decay_flow(&TreeSpec::Constant { b: 2 }, 0.6, 12).unwrap());
        // Σ_{d<12} 2^-(d+1)
        assert!((bin.energy - (1.0 - 2f64.powi(-12))).abs() < 1e-12);
        assert!((bin.tail_ratio - 0.5).abs() < 1e-12);
        assert!(bin.energy + bin.tail_bound.unwrap() <= 1.0 + 1e-12);

        let ray =
            flow_energy_on_tree(&build_decay_flow(&TreeSpec::Constant { b: 1 }, 0.5, 9).unwrap());
        assert_eq!(ray.energy, 9.0);
        assert!(ray.tail_bound.is_none());

        let ter =
            flow_energy_on_tree(&build_decay_flow(&TreeSpec::Constant { b: 3 }, 0.6, 8).unwrap());
        assert!((ter.tail_ratio - 1.0 / 3.0).abs() < 1e-12);
        assert!(ter.energy + ter.tail_bound.unwrap() <= 0.5 + 1e-12);
    }
}
