use std::fmt;
use std::fs;
use std::path::PathBuf;
use std::str::FromStr;

use anyhow::{bail, Context, Result};
use rwre_core::graph::{build_lattice_ball, build_tree, load_graph, GraphWithSink};
use rwre_core::ResistanceDistribution;
use serde::{Serialize, Serializer};

/// `z1`, `z2`, `z3` (any `zD`), `tree:b=B` or `file:PATH`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum GraphSpec {
    Lattice(usize),
    Tree(usize),
    File(PathBuf),
}

impl FromStr for GraphSpec {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        if let Some(path) = s.strip_prefix("file:") {
            return Ok(Self::File(PathBuf::from(path)));
        }
        if let Some(rest) = s.strip_prefix("tree:") {
            let b = rest
                .strip_prefix("b=")
                .and_then(|b| b.parse().ok())
                .ok_or_else(|| format!("expected tree:b=<branching>, got {s:?}"))?;
            return Ok(Self::Tree(b));
        }
        match s.strip_prefix('z').map(str::parse::<usize>) {
            Some(Ok(d)) if d >= 1 => Ok(Self::Lattice(d)),
            _ => Err(format!(
                "unknown graph {s:?}; expected z1|z2|z3|tree:b=..|file:.."
            )),
        }
    }
}

impl fmt::Display for GraphSpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Self::Lattice(d) => write!(f, "z{d}"),
            Self::Tree(b) => write!(f, "tree:b={b}"),
            Self::File(p) => write!(f, "file:{}", p.display()),
        }
    }
}

impl Serialize for GraphSpec {
    fn serialize<S: Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        s.collect_str(self)
    }
}

impl GraphSpec {
    /// Builds the truncation. File graphs use vertex 0 as root and the
    /// highest vertex id as sink; their radius is inferred.
    pub fn build(&self, radius: Option<usize>) -> Result<GraphWithSink> {
        match self {
            Self::Lattice(d) => Ok(build_lattice_ball(*d, need_radius(radius)?)?),
            Self::Tree(b) => Ok(build_tree(*b, need_radius(radius)?)?),
            Self::File(path) => {
                let text = fs::read_to_string(path)
                    .with_context(|| format!("reading {}", path.display()))?;
                let graph = load_graph(&text)?;
                let n = graph.vertex_count();
                if n < 2 {
                    bail!("{} needs at least two vertices", path.display());
                }
                Ok(GraphWithSink::from_graph(graph, 0, n - 1)?)
            }
        }
    }

    /// Raw bytes of any file this spec reads.
    pub fn input_bytes(&self) -> Result<Vec<u8>> {
        match self {
            Self::File(path) => {
                fs::read(path).with_context(|| format!("reading {}", path.display()))
            }
            _ => Ok(Vec::new()),
        }
    }
}

fn need_radius(radius: Option<usize>) -> Result<usize> {
    radius.context("--radius is required for this graph")
}

/// Resistance law given as `unit`, inline JSON, or a path to a JSON file.
#[derive(Debug, Clone)]
pub struct DistArg {
    pub raw: String,
}

impl FromStr for DistArg {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        Ok(Self { raw: s.to_string() })
    }
}

impl DistArg {
    pub fn load(&self) -> Result<(ResistanceDistribution, Vec<u8>)> {
        let bytes = match self.raw.trim() {
            "unit" => return Ok((ResistanceDistribution::Constant { value: 1.0 }, Vec::new())),
            inline if inline.starts_with('{') => inline.as_bytes().to_vec(),
            path => fs::read(path).with_context(|| format!("reading distribution {path}"))?,
        };
        let dist: ResistanceDistribution =
            serde_json::from_slice(&bytes).context("parsing distribution")?;
        dist.validate()?;
        Ok((dist, bytes))
    }
}

/// `4`, `2,3,5` or an inclusive range `2..6`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct RadiusList(pub Vec<usize>);

impl FromStr for RadiusList {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let bad = |e: std::num::ParseIntError| format!("bad radius list {s:?}: {e}");
        if let Some((a, b)) = s.split_once("..") {
            let (a, b): (usize, usize) = (
                a.trim().parse().map_err(bad)?,
                b.trim().parse().map_err(bad)?,
            );
            if a > b {
                return Err(format!("empty radius range {s:?}"));
            }
            return Ok(Self((a..=b).collect()));
        }
        s.split(',')
            .map(|x| x.trim().parse().map_err(bad))
            .collect::<Result<_, _>>()
            .map(Self)
    }
}

impl Serialize for RadiusList {
    fn serialize<S: Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        self.0.serialize(s)
    }
}

/// Comma-separated floats.
#[derive(Debug, Clone, PartialEq)]
pub struct FloatList(pub Vec<f64>);

impl FromStr for FloatList {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        s.split(',')
            .map(|x| {
                x.trim()
                    .parse::<f64>()
                    .map_err(|e| format!("bad number {x:?}: {e}"))
            })
            .collect::<Result<_, _>>()
            .map(Self)
    }
}

impl Serialize for FloatList {
    fn serialize<S: Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        self.0.serialize(s)
    }
}
