//! Resistance distributions on (0, ∞] and i.i.d. environments built from them.
//!
//! An infinite resistance is an ordinary value (`f64::INFINITY`): the edge keeps
//! its id but carries zero conductance. Every edge's value is the inverse CDF of
//! a single uniform `seed::uniform_open01(seed, edge_id)`, so environments,
//! their truncations and percolation samples built from one base seed are
//! coupled edge by edge.

use std::io::Write;

use serde::{Deserialize, Deserializer, Serialize, Serializer};
use thiserror::Error;

use crate::graph::{EdgeId, GraphWithSink};
use crate::seed;

const MASS_TOLERANCE: f64 = 1e-12;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum EnvironmentError {
    #[error("invalid distribution: {0}")]
    InvalidDistribution(String),
    #[error("edge {edge}: resistance must lie in (0, inf], got {value}")]
    InvalidResistance { edge: EdgeId, value: f64 },
    #[error("environment has {got} values, graph has {expected} edges")]
    LengthMismatch { expected: usize, got: usize },
    #[error("threshold {0} captures no mass")]
    EmptyThreshold(f64),
}

/// A resistance value in JSON: a positive number or the string `"inf"`.
mod resistance_value {
    use super::*;

    #[derive(Serialize, Deserialize)]
    #[serde(untagged)]
    enum Repr {
        Number(f64),
        Text(String),
    }

    pub fn serialize<S: Serializer>(value: &f64, s: S) -> Result<S::Ok, S::Error> {
        if value.is_infinite() {
            s.serialize_str("inf")
        } else {
            s.serialize_f64(*value)
        }
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> Result<f64, D::Error> {
        match Repr::deserialize(d)? {
            Repr::Number(x) => Ok(x),
            Repr::Text(t) if matches!(t.as_str(), "inf" | "infinity" | "Infinity") => {
                Ok(f64::INFINITY)
            }
            Repr::Text(t) => Err(serde::de::Error::custom(format!(
                "invalid resistance {t:?}"
            ))),
        }
    }
}

pub(crate) fn format_resistance(r: f64) -> String {
    if r.is_infinite() {
        "inf".to_string()
    } else {
        format!("{r}")
    }
}

/// One atom of a user-supplied atomic distribution.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Atom {
    #[serde(with = "resistance_value")]
    pub value: f64,
    pub mass: f64,
}

/// Atomic distribution with atoms `gammas[k]` of mass `levels[k] - levels[k-1]`
/// and the remaining mass `1 - levels[K-1]` at infinity.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StaircaseMu {
    pub gammas: Vec<f64>,
    pub levels: Vec<f64>,
}

impl StaircaseMu {
    pub fn new(gammas: Vec<f64>, levels: Vec<f64>) -> Result<Self, EnvironmentError> {
        let mu = Self { gammas, levels };
        mu.validate()?;
        Ok(mu)
    }

    /// The single-level distribution `{gamma ↦ p, ∞ ↦ 1 - p}`.
    pub fn single(gamma: f64, p: f64) -> Result<Self, EnvironmentError> {
        Self::new(vec![gamma], vec![p])
    }

    pub fn validate(&self) -> Result<(), EnvironmentError> {
        let bad = |m: String| Err(EnvironmentError::InvalidDistribution(m));
        if self.gammas.is_empty() || self.gammas.len() != self.levels.len() {
            return bad(format!(
                "staircase needs matching non-empty gammas/levels, got {} and {}",
                self.gammas.len(),
                self.levels.len()
            ));
        }
        if !self.gammas.iter().all(|g| g.is_finite() && *g > 0.0) {
            return bad("staircase atoms must be finite and positive".into());
        }
        if self.gammas.windows(2).any(|w| w[0] >= w[1]) {
            return bad("staircase atoms must be strictly increasing".into());
        }
        if !(self.levels[0] > 0.0) || self.levels.windows(2).any(|w| w[0] >= w[1]) {
            return bad("staircase levels must be positive and strictly increasing".into());
        }
        if *self.levels.last().unwrap() > 1.0 {
            return bad("staircase levels must not exceed 1".into());
        }
        Ok(())
    }

    /// Number of realized levels K.
    pub fn depth(&self) -> usize {
        self.gammas.len()
    }

    /// Mass of the atom at `gammas[k]` (zero-based).
    pub fn mass_at(&self, k: usize) -> f64 {
        if k == 0 {
            self.levels[0]
        } else {
            self.levels[k] - self.levels[k - 1]
        }
    }

    /// Mass left at infinity.
    pub fn residual(&self) -> f64 {
        1.0 - self.levels.last().copied().unwrap_or(0.0)
    }

    pub fn atoms(&self) -> Vec<Atom> {
        let mut atoms: Vec<Atom> = (0..self.depth())
            .map(|k| Atom {
                value: self.gammas[k],
                mass: self.mass_at(k),
            })
            .collect();
        if self.residual() > 0.0 {
            atoms.push(Atom {
                value: f64::INFINITY,
                mass: self.residual(),
            });
        }
        atoms
    }

    /// Moves mass `p - p_last` from infinity onto a new top atom `gamma`.
    pub fn extend(&self, gamma: f64, p: f64) -> Result<Self, EnvironmentError> {
        let top = *self.gammas.last().unwrap();
        let p_last = *self.levels.last().unwrap();
        if !(p > p_last) {
            return Err(EnvironmentError::InvalidDistribution(format!(
                "new level {p} must exceed the previous level {p_last}"
            )));
        }
        if !(gamma > top) {
            return Err(EnvironmentError::InvalidDistribution(format!(
                "new atom {gamma} must exceed the current top atom {top}"
            )));
        }
        let mut next = self.clone();
        next.gammas.push(gamma);
        next.levels.push(p);
        next.validate()?;
        Ok(next)
    }

    /// The first `k` levels, i.e. the intermediate distribution μ_k.
    pub fn prefix(&self, k: usize) -> Result<Self, EnvironmentError> {
        if k == 0 || k > self.depth() {
            return Err(EnvironmentError::InvalidDistribution(format!(
                "prefix {k} out of range 1..={}",
                self.depth()
            )));
        }
        Ok(Self {
            gammas: self.gammas[..k].to_vec(),
            levels: self.levels[..k].to_vec(),
        })
    }

    #[inline]
    fn sample(&self, u: f64) -> f64 {
        for (g, p) in self.gammas.iter().zip(&self.levels) {
            if u < *p {
                return *g;
            }
        }
        f64::INFINITY
    }
}

/// Common law of the i.i.d. edge resistances.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case")]
pub enum ResistanceDistribution {
    Constant {
        value: f64,
    },
    /// `value` with probability `mass`, infinity otherwise.
    TwoPoint {
        value: f64,
        mass: f64,
    },
    Staircase(StaircaseMu),
    Exponential {
        mean: f64,
    },
    Atoms {
        atoms: Vec<Atom>,
    },
}

impl ResistanceDistribution {
    pub fn validate(&self) -> Result<(), EnvironmentError> {
        let bad = |m: String| Err(EnvironmentError::InvalidDistribution(m));
        match self {
            Self::Constant { value } => {
                if !(*value > 0.0) {
                    return bad(format!("constant resistance must be positive, got {value}"));
                }
            }
            Self::TwoPoint { value, mass } => {
                if !(value.is_finite() && *value > 0.0) {
                    return bad(format!(
                        "two-point atom must be finite and positive, got {value}"
                    ));
                }
                if !(0.0..=1.0).contains(mass) {
                    return bad(format!("two-point mass must lie in [0, 1], got {mass}"));
                }
            }
            Self::Staircase(mu) => mu.validate()?,
            Self::Exponential { mean } => {
                if !(mean.is_finite() && *mean > 0.0) {
                    return bad(format!(
                        "exponential mean must be finite and positive, got {mean}"
                    ));
                }
            }
            Self::Atoms { atoms } => {
                if atoms.is_empty() {
                    return bad("atom list is empty".into());
                }
                for a in atoms {
                    if !(a.value > 0.0) {
                        return bad(format!("atom value must be positive, got {}", a.value));
                    }
                    if !(a.mass >= 0.0) {
                        return bad(format!("atom mass must be nonnegative, got {}", a.mass));
                    }
                }
                let total: f64 = atoms.iter().map(|a| a.mass).sum();
                if (total - 1.0).abs() > MASS_TOLERANCE {
                    return bad(format!("atom masses sum to {total}, expected 1"));
                }
            }
        }
        Ok(())
    }

    /// Inverse-CDF sample from a uniform `u` in (0, 1). Atoms are ordered by
    /// value, so `value <= q` is equivalent to `u < mass_up_to(q)`.
    #[inline]
    pub fn sample(&self, u: f64) -> f64 {
        match self {
            Self::Constant { value } => *value,
            Self::TwoPoint { value, mass } => {
                if u < *mass {
                    *value
                } else {
                    f64::INFINITY
                }
            }
            Self::Staircase(mu) => mu.sample(u),
            Self::Exponential { mean } => -mean * (-u).ln_1p(),
            Self::Atoms { atoms } => {
                // atoms laid out on [0, 1) in (value, index) order
                let key = |i: usize| (atoms[i].value, i);
                let mut top = 0;
                for i in 0..atoms.len() {
                    let lower: f64 = (0..atoms.len())
                        .filter(|&j| key(j).0 < key(i).0 || (key(j).0 == key(i).0 && j < i))
                        .map(|j| atoms[j].mass)
                        .sum();
                    if lower <= u && u < lower + atoms[i].mass {
                        return atoms[i].value;
                    }
                    if atoms[i].value >= atoms[top].value {
                        top = i;
                    }
                }
                atoms[top].value
            }
        }
    }

    /// The mean `∫ x dμ`; infinite as soon as any mass sits at infinity.
    pub fn mean(&self) -> f64 {
        match self {
            Self::Constant { value } => *value,
            Self::TwoPoint { value, mass } => {
                if *mass < 1.0 {
                    f64::INFINITY
                } else {
                    *value
                }
            }
            Self::Staircase(mu) => {
                if mu.residual() > 0.0 {
                    f64::INFINITY
                } else {
                    (0..mu.depth()).map(|k| mu.gammas[k] * mu.mass_at(k)).sum()
                }
            }
            Self::Exponential { mean } => *mean,
            Self::Atoms { atoms } => atoms
                .iter()
                .filter(|a| a.mass > 0.0)
                .map(|a| a.value * a.mass)
                .sum(),
        }
    }

    /// μ(0, q].
    pub fn mass_up_to(&self, q: f64) -> f64 {
        match self {
            Self::Constant { value } => {
                if *value <= q {
                    1.0
                } else {
                    0.0
                }
            }
            Self::TwoPoint { value, mass } => {
                if *value <= q {
                    *mass
                } else {
                    0.0
                }
            }
            Self::Staircase(mu) => mu
                .gammas
                .iter()
                .zip(&mu.levels)
                .filter(|(g, _)| **g <= q)
                .map(|(_, p)| *p)
                .next_back()
                .unwrap_or(0.0),
            Self::Exponential { mean } => {
                if q.is_infinite() {
                    1.0
                } else {
                    -(-q / mean).exp_m1()
                }
            }
            Self::Atoms { atoms } => atoms.iter().filter(|a| a.value <= q).map(|a| a.mass).sum(),
        }
    }
}

/// The mean of `dist`; see [`ResistanceDistribution::mean`].
pub fn dist_mean(dist: &ResistanceDistribution) -> f64 {
    dist.mean()
}

/// Read access to per-edge resistances.
pub trait Resistances: Sync {
    fn resistance(&self, e: EdgeId) -> f64;
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Provenance {
    pub distribution: ResistanceDistribution,
    pub seed: u64,
}

/// A resistance in (0, ∞] for every edge of a graph.
#[derive(Debug, Clone, PartialEq)]
pub struct Environment {
    values: Vec<f64>,
    pub provenance: Option<Provenance>,
}

impl Environment {
    pub fn from_values(values: Vec<f64>) -> Result<Self, EnvironmentError> {
        for (edge, &value) in values.iter().enumerate() {
            if !(value > 0.0) {
                return Err(EnvironmentError::InvalidResistance { edge, value });
            }
        }
        Ok(Self {
            values,
            provenance: None,
        })
    }

    pub fn constant(edge_count: usize, value: f64) -> Self {
        assert!(value > 0.0, "resistance must be positive");
        Self {
            values: vec![value; edge_count],
            provenance: None,
        }
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    pub fn check_graph(&self, g: &GraphWithSink) -> Result<(), EnvironmentError> {
        if self.values.len() != g.edge_count() {
            return Err(EnvironmentError::LengthMismatch {
                expected: g.edge_count(),
                got: self.values.len(),
            });
        }
        Ok(())
    }

    /// `R^(γ)`: values above `gamma` become infinite; values equal to it stay.
    pub fn truncate_at(&self, gamma: f64) -> Self {
        assert!(gamma > 0.0, "truncation level must be positive");
        Self {
            values: self.values.iter().map(|&r| truncate(r, gamma)).collect(),
            provenance: self.provenance.clone(),
        }
    }

    /// Every resistance multiplied by `c`.
    pub fn scaled(&self, c: f64) -> Self {
        assert!(
            c > 0.0 && c.is_finite(),
            "scale must be finite and positive"
        );
        Self {
            values: self.values.iter().map(|r| r * c).collect(),
            provenance: None,
        }
    }

    pub fn with_resistance(&self, e: EdgeId, r: f64) -> Result<Self, EnvironmentError> {
        if !(r > 0.0) {
            return Err(EnvironmentError::InvalidResistance { edge: e, value: r });
        }
        let mut next = self.clone();
        next.values[e] = r;
        next.provenance = None;
        Ok(next)
    }

    /// Writes `edge_id,u,v,resistance` rows, with `inf` for infinite values.
    pub fn write_csv<W: Write>(&self, g: &GraphWithSink, w: W) -> csv::Result<()> {
        let mut out = csv::Writer::from_writer(w);
        out.write_record(["edge_id", "u", "v", "resistance"])?;
        for (e, &(u, v)) in g.graph.edges().iter().enumerate() {
            out.write_record([
                e.to_string(),
                u.to_string(),
                v.to_string(),
                format_resistance(self.values[e]),
            ])?;
        }
        out.flush()?;
        Ok(())
    }
}

#[inline]
fn truncate(r: f64, gamma: f64) -> f64 {
    if r <= gamma {
        r
    } else {
        f64::INFINITY
    }
}

impl Resistances for Environment {
    #[inline]
    fn resistance(&self, e: EdgeId) -> f64 {
        self.values[e]
    }
}

/// Environment computed on demand from `(distribution, seed)`; agrees edge for
/// edge with [`sample_environment`] on the same inputs.
#[derive(Debug, Clone, Copy)]
pub struct SampledField<'a> {
    pub distribution: &'a ResistanceDistribution,
    pub seed: u64,
}

impl Resistances for SampledField<'_> {
    #[inline]
    fn resistance(&self, e: EdgeId) -> f64 {
        self.distribution
            .sample(seed::uniform_open01(self.seed, e as u64))
    }
}

/// View of another environment truncated at `gamma`.
#[derive(Debug, Clone, Copy)]
pub struct Truncated<'a, R: ?Sized> {
    pub inner: &'a R,
    pub gamma: f64,
}

impl<R: Resistances + ?Sized> Resistances for Truncated<'_, R> {
    #[inline]
    fn resistance(&self, e: EdgeId) -> f64 {
        truncate(self.inner.resistance(e), self.gamma)
    }
}

/// Draws an independent resistance for every edge of `g`.
pub fn sample_environment(
    g: &GraphWithSink,
    dist: &ResistanceDistribution,
    seed: u64,
) -> Environment {
    let field = SampledField {
        distribution: dist,
        seed,
    };
    Environment {
        values: (0..g.edge_count()).map(|e| field.resistance(e)).collect(),
        provenance: Some(Provenance {
            distribution: dist.clone(),
            seed,
        }),
    }
}

/// Cutoff `q` together with the percolation mass `p = μ(0, q]` it captures.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ThresholdSpec {
    pub cutoff: f64,
    pub p: f64,
}

impl ThresholdSpec {
    pub fn for_distribution(
        dist: &ResistanceDistribution,
        cutoff: f64,
    ) -> Result<Self, EnvironmentError> {
        let p = dist.mass_up_to(cutoff);
        if !(p > 0.0) {
            return Err(EnvironmentError::EmptyThreshold(cutoff));
        }
        Ok(Self { cutoff, p })
    }
}

/// Subset of a graph's edge ids.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct EdgeSet {
    members: Vec<bool>,
}

impl EdgeSet {
    pub fn from_mask(members: Vec<bool>) -> Self {
        Self { members }
    }

    pub fn contains(&self, e: EdgeId) -> bool {
        self.members[e]
    }

    pub fn mask(&self) -> &[bool] {
        &self.members
    }

    pub fn count(&self) -> usize {
        self.members.iter().filter(|&&m| m).count()
    }

    pub fn is_subset_of(&self, other: &EdgeSet) -> bool {
        self.members
            .iter()
            .zip(&other.members)
            .all(|(&a, &b)| !a || b)
    }

    pub fn iter(&self) -> impl Iterator<Item = EdgeId> + '_ {
        self.members
            .iter()
            .enumerate()
            .filter(|(_, &m)| m)
            .map(|(e, _)| e)
    }
}

/// Edges with `R(e) <= cutoff`.
pub fn open_subgraph(env: &Environment, spec: &ThresholdSpec) -> EdgeSet {
    EdgeSet::from_mask(env.values.iter().map(|&r| r <= spec.cutoff).collect())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::graph::{build_lattice_ball, build_tree};
    use proptest::prelude::*;

    fn staircase(g: &[f64], p: &[f64]) -> ResistanceDistribution {
        ResistanceDistribution::Staircase(StaircaseMu::new(g.to_vec(), p.to_vec()).unwrap())
    }

    #[test]
    fn constant_environment() {
        let g = build_lattice_ball(2, 3).unwrap();
        let env = sample_environment(&g, &ResistanceDistribution::Constant { value: 1.0 }, 5);
        assert!(env.values().iter().all(|&r| r == 1.0));
        assert_eq!(env.len(), g.edge_count());
    }

    #[test]
    fn two_point_is_percolation_at_unit_resistance() {
        let g = build_lattice_ball(2, 6).unwrap();
        let env = sample_environment(
            &g,
            &ResistanceDistribution::TwoPoint {
                value: 1.0,
                mass: 0.5,
            },
            11,
        );
        assert!(env.values().iter().all(|&r| r == 1.0 || r.is_infinite()));
        let open = env.values().iter().filter(|r| r.is_finite()).count();
        assert!(open > 0 && open < env.len());
    }

    #[test]
    fn staircase_atom_frequencies() {
        // 10^4 draws of the K=2 staircase; binomial 3-sigma bands
        let dist = staircase(&[1.0, 100.0], &[0.5, 0.75]);
        let n = 10_000u64;
        let mut counts = [0u64; 3];
        for i in 0..n {
            match dist.sample(seed::uniform_open01(2024, i)) {
                1.0 => counts[0] += 1,
                100.0 => counts[1] += 1,
                r if r.is_infinite() => counts[2] += 1,
                r => panic!("unexpected atom {r}"),
            }
        }
        for (c, p) in counts.iter().zip([0.5, 0.25, 0.25]) {
            let sigma = (p * (1.0 - p) / n as f64).sqrt();
            assert!((*c as f64 / n as f64 - p).abs() < 3.0 * sigma, "{counts:?}");
        }
    }

    #[test]
    fn sampling_is_reproducible_and_matches_lazy_field() {
        let g = build_tree(3, 4).unwrap();
        let dist = ResistanceDistribution::Exponential { mean: 2.0 };
        let a = sample_environment(&g, &dist, 77);
        assert_eq!(a, sample_environment(&g, &dist, 77));
        assert_ne!(a.values(), sample_environment(&g, &dist, 78).values());
        let lazy = SampledField {
            distribution: &dist,
            seed: 77,
        };
        for e in 0..g.edge_count() {
            assert_eq!(lazy.resistance(e), a.resistance(e));
        }
    }

    #[test]
    fn paired_edge_draws_are_uncorrelated() {
        // correlation of (R(2i), R(2i+1)) over many pairs; sd of r ~ 1/sqrt(n)
        let dist = ResistanceDistribution::Exponential { mean: 1.0 };
        let field = SampledField {
            distribution: &dist,
            seed: 3,
        };
        let n = 20_000;
        let xs: Vec<f64> = (0..n).map(|i| field.resistance(2 * i)).collect();
        let ys: Vec<f64> = (0..n).map(|i| field.resistance(2 * i + 1)).collect();
        let mx = xs.iter().sum::<f64>() / n as f64;
        let my = ys.iter().sum::<f64>() / n as f64;
        let cov: f64 = xs.iter().zip(&ys).map(|(x, y)| (x - mx) * (y - my)).sum();
        let vx: f64 = xs.iter().map(|x| (x - mx).powi(2)).sum();
        let vy: f64 = ys.iter().map(|y| (y - my).powi(2)).sum();
        let r = cov / (vx * vy).sqrt();
        assert!(r.abs() < 3.0 / (n as f64).sqrt(), "r = {r}");
    }

    #[test]
    fn truncation_examples() {
        let env = Environment::from_values(vec![5.0, 3.0, 1.0]).unwrap();
        let t = env.truncate_at(3.0);
        assert!(t.values()[0].is_infinite());
        assert_eq!(t.values()[1], 3.0);
        assert_eq!(t.values()[2], 1.0);
        assert_eq!(env.values()[0], 5.0, "input untouched");
        assert_eq!(env.truncate_at(f64::INFINITY), env);
    }

    #[test]
    fn open_subgraph_examples() {
        let env = Environment::constant(7, 1.0);
        let all = ThresholdSpec {
            cutoff: 2.0,
            p: 1.0,
        };
        assert_eq!(open_subgraph(&env, &all).count(), 7);
        let none = ThresholdSpec {
            cutoff: 0.5,
            p: 1.0,
        };
        assert_eq!(open_subgraph(&env, &none).count(), 0);
        let dist = ResistanceDistribution::Constant { value: 1.0 };
        assert!(matches!(
            ThresholdSpec::for_distribution(&dist, 0.5),
            Err(EnvironmentError::EmptyThreshold(_))
        ));
    }

    #[test]
    fn means() {
        assert_eq!(ResistanceDistribution::Constant { value: 4.5 }.mean(), 4.5);
        assert!(staircase(&[1.0, 100.0], &[0.5, 0.75]).mean().is_infinite());
        let atoms = ResistanceDistribution::Atoms {
            atoms: vec![
                Atom {
                    value: 1.0,
                    mass: 0.5,
                },
                Atom {
                    value: 3.0,
                    mass: 0.5,
                },
            ],
        };
        assert_eq!(atoms.mean(), 2.0);
        assert_eq!(staircase(&[1.0, 3.0], &[0.5, 1.0]).mean(), 2.0);
        assert_eq!(
            ResistanceDistribution::Exponential { mean: 1.5 }.mean(),
            1.5
        );
    }

    #[test]
    fn staircase_extension() {
        let mu1 = StaircaseMu::single(1.0, 0.5).unwrap();
        let mu2 = mu1.extend(81.0, 0.75).unwrap();
        let atoms = mu2.atoms();
        assert_eq!(atoms.len(), 3);
        assert_eq!((atoms[0].value, atoms[0].mass), (1.0, 0.5));
        assert_eq!((atoms[1].value, atoms[1].mass), (81.0, 0.25));
        assert!(atoms[2].value.is_infinite());
        assert_eq!(atoms[2].mass, 0.25);
        assert!(mu1.extend(81.0, 0.5).is_err());
        assert!(mu1.extend(1.0, 0.75).is_err());

        let mu4 = mu2.extend(1e4, 0.875).unwrap().extend(1e6, 0.9375).unwrap();
        let finite: f64 = (0..mu4.depth()).map(|k| mu4.mass_at(k)).sum();
        assert!((finite - 0.9375).abs() < 1e-15);
        assert!((finite + mu4.residual() - 1.0).abs() < 1e-15);
        assert_eq!(mu4.prefix(2).unwrap(), mu2);
    }

    #[test]
    fn distribution_json_round_trip() {
        let dists = vec![
            ResistanceDistribution::Constant { value: 1.0 },
            ResistanceDistribution::TwoPoint {
                value: 1.0,
                mass: 0.5,
            },
            staircase(&[1.0, 81.0], &[0.5, 0.75]),
            ResistanceDistribution::Exponential { mean: 1.0 },
            ResistanceDistribution::Atoms {
                atoms: vec![
                    Atom {
                        value: 2.0,
                        mass: 0.25,
                    },
                    Atom {
                        value: f64::INFINITY,
                        mass: 0.75,
                    },
                ],
            },
        ];
        for d in dists {
            let text = serde_json::to_string(&d).unwrap();
            let back: ResistanceDistribution = serde_json::from_str(&text).unwrap();
            assert_eq!(back, d, "{text}");
        }
        let parsed: ResistanceDistribution =
            serde_json::from_str(r#"{"kind":"staircase","gammas":[1,81],"levels":[0.5,0.75]}"#)
                .unwrap();
        assert_eq!(parsed, staircase(&[1.0, 81.0], &[0.5, 0.75]));
        let atoms: ResistanceDistribution =
            serde_json::from_str(r#"{"kind":"atoms","atoms":[{"value":"inf","mass":1.0}]}"#)
                .unwrap();
        assert!(atoms.mean().is_infinite());
    }

    #[test]
    fn invalid_distributions() {
        let cases = vec![
            ResistanceDistribution::Constant { value: 0.0 },
            ResistanceDistribution::TwoPoint {
                value: 1.0,
                mass: 1.5,
            },
            ResistanceDistribution::Exponential { mean: -1.0 },
            ResistanceDistribution::Atoms {
                atoms: vec![Atom {
                    value: 1.0,
                    mass: 0.4,
                }],
            },
            ResistanceDistribution::Atoms {
                atoms: vec![
                    Atom {
                        value: -1.0,
                        mass: 0.5,
                    },
                    Atom {
                        value: 1.0,
                        mass: 0.5,
                    },
                ],
            },
        ];
        for d in cases {
            assert!(d.validate().is_err(), "{d:?}");
        }
        assert!(StaircaseMu::new(vec![2.0, 1.0], vec![0.5, 0.75]).is_err());
        assert!(StaircaseMu::new(vec![1.0, 2.0], vec![0.5, 0.5]).is_err());
    }

    #[test]
    fn csv_export_uses_inf_sentinel() {
        let g = build_lattice_ball(1, 1).unwrap();
        let env = Environment::from_values(vec![1.0, 2.5, f64::INFINITY, 4.0]).unwrap();
        let mut buf = Vec::new();
        env.write_csv(&g, &mut buf).unwrap();
        let text = String::from_utf8(buf).unwrap();
        assert!(text.starts_with("edge_id,u,v,resistance\n"));
        assert!(text.contains(",inf\n"));
        assert_eq!(text.lines().count(), 5);
    }

    proptest! {
        #[test]
        fn truncation_is_a_lattice(values in prop::collection::vec(0.01f64..100.0, 1..40),
                                   a in 0.01f64..100.0, b in 0.01f64..100.0) {
            let env = Environment::from_values(values).unwrap();
            let (lo, hi) = if a <= b { (a, b) } else { (b, a) };
            prop_assert_eq!(env.truncate_at(hi).truncate_at(lo), env.truncate_at(lo));
            for (t, r) in env.truncate_at(lo).values().iter().zip(env.values()) {
                prop_assert!(t >= r);
            }
        }

        #[test]
        fn threshold_membership_matches_uniform(u in 0.0001f64..0.9999, q in 0.5f64..200.0) {
            let dist = staircase(&[1.0, 10.0, 100.0], &[0.3, 0.6, 0.9]);
            prop_assert_eq!(dist.sample(u) <= q, u < dist.mass_up_to(q));
        }
    }
}
