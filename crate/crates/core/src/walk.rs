//! Reversible random walk driven by edge resistances.
//!
//! From `w` the walk crosses edge `e` with probability `R(e)^-1 / Σ_z R(wz)^-1`.
//! Parallel edges each contribute; infinite resistances contribute nothing. The
//! sink is absorbing.
//!
//! Truncated companions `S^(k)` (the walk in `R^(k)`, resistances above `γ_k`
//! set to infinity) are driven by the same uniform per step. While `S^(k)` is
//! still at the same vertex as `S`, it copies every step that crosses an edge
//! with `R <= γ_k`. At the first step where `S` crosses a heavier edge (time
//! `T_k`) the position of the uniform inside that edge's slot is reused to
//! pick from the truncated kernel. Since the truncated kernel is the base
//! kernel restricted to light edges and renormalised, the leftover mass of
//! each light edge is proportional to its conductance, so this is an exact
//! monotone coupling with `S^(k)_n = S_n` for every `n <= T_k`.

use std::io::Write;

use rand::Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::environment::{ResistanceDistribution, Resistances, SampledField, Truncated};
use crate::graph::{EdgeId, GraphWithSink, VertexId};
use crate::seed;
use crate::stats::{Proportion, Z_99};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum WalkError {
    #[error("start vertex {0} is isolated: every incident resistance is infinite")]
    IsolatedStart(VertexId),
    #[error("walk cannot start at the sink")]
    StartAtSink,
    #[error("truncation levels must be positive and strictly increasing")]
    BadLevels,
    #[error("level index {level} out of range ({levels} levels)")]
    LevelOutOfRange { level: usize, levels: usize },
    #[error("trace has {steps} steps, fewer than the horizon {horizon}, and was not absorbed")]
    ShortTrace { steps: usize, horizon: usize },
    #[error("trace does not start at vertex {0}")]
    WrongStart(VertexId),
    #[error("event containment violated: G holds but none of A, B, C ({0:?})")]
    ContainmentViolation(Box<EventClassification>),
    #[error("at least {min} trials are required, got {got}")]
    TooFewTrials { min: usize, got: usize },
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct KernelEntry {
    pub edge: EdgeId,
    pub to: VertexId,
    pub probability: f64,
}

/// One-step transition law out of a vertex.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct TransitionKernel {
    pub vertex: VertexId,
    pub entries: Vec<KernelEntry>,
    pub total_conductance: f64,
}

impl TransitionKernel {
    /// No finite incident edge: the walk cannot move.
    pub fn is_isolated(&self) -> bool {
        self.total_conductance == 0.0
    }

    /// Total probability of moving to `w`, summed over parallel edges.
    pub fn to_vertex(&self, w: VertexId) -> f64 {
        self.entries
            .iter()
            .filter(|x| x.to == w)
            .map(|x| x.probability)
            .sum()
    }
}

pub fn transition_probabilities<R: Resistances + ?Sized>(
    g: &GraphWithSink,
    env: &R,
    v: VertexId,
) -> TransitionKernel {
    let incident = g.graph.incident(v);
    let conductances: Vec<f64> = incident.iter().map(|&e| 1.0 / env.resistance(e)).collect();
    let total: f64 = conductances.iter().sum();
    let entries = incident
        .iter()
        .zip(&conductances)
        .map(|(&e, &c)| KernelEntry {
            edge: e,
            to: g.graph.other_end(e, v),
            probability: if total > 0.0 { c / total } else { 0.0 },
        })
        .collect();
    TransitionKernel {
        vertex: v,
        entries,
        total_conductance: total,
    }
}

/// Picks the incident edge of `w` whose slot contains `u`. Also returns the
/// relative position of `u` inside that slot, which is again uniform.
#[inline]
fn choose_edge<R: Resistances + ?Sized>(
    g: &GraphWithSink,
    env: &R,
    w: VertexId,
    u: f64,
) -> Option<(EdgeId, f64)> {
    let incident = g.graph.incident(w);
    let mut total = 0.0;
    for &e in incident {
        total += 1.0 / env.resistance(e);
    }
    if total == 0.0 {
        return None;
    }
    let target = u * total;
    let mut acc = 0.0;
    let mut last = None;
    for &e in incident {
        let c = 1.0 / env.resistance(e);
        if c == 0.0 {
            continue;
        }
        if target < acc + c {
            return Some((e, ((target - acc) / c).clamp(0.0, 1.0 - f64::EPSILON)));
        }
        acc += c;
        last = Some(e);
    }
    // rounding left `target` just past the final slot
    last.map(|e| (e, 1.0 - f64::EPSILON))
}

fn all_infinite<R: Resistances + ?Sized>(g: &GraphWithSink, env: &R, v: VertexId) -> bool {
    g.graph
        .incident(v)
        .iter()
        .all(|&e| env.resistance(e).is_infinite())
}

/// A realized path `S_0, S_1, ...`.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct WalkTrace {
    pub start: VertexId,
    pub vertices: Vec<VertexId>,
    /// `edges[n]` joins `vertices[n]` and `vertices[n + 1]`.
    pub edges: Vec<EdgeId>,
    pub seed: u64,
    pub absorbed: bool,
    /// Start vertex had no finite edge; the walk stays put.
    pub isolated: bool,
}

impl WalkTrace {
    pub fn steps(&self) -> usize {
        self.edges.len()
    }

    /// Vertex at time `n`. Isolated walks stay at the start forever; absorbed
    /// or horizon-limited walks have no position past their end.
    pub fn position(&self, n: usize) -> Option<VertexId> {
        if self.isolated {
            return Some(self.start);
        }
        self.vertices.get(n).copied()
    }

    /// Writes `step,vertex,edge_id`; `edge_id` is the edge used to arrive.
    pub fn write_csv<W: Write>(&self, w: W) -> csv::Result<()> {
        let mut out = csv::Writer::from_writer(w);
        out.write_record(["step", "vertex", "edge_id"])?;
        for (n, v) in self.vertices.iter().enumerate() {
            let e = if n == 0 {
                String::new()
            } else {
                self.edges[n - 1].to_string()
            };
            out.write_record([n.to_string(), v.to_string(), e])?;
        }
        out.flush()?;
        Ok(())
    }
}

/// Simulates up to `max_steps` steps from `start`, stopping at the sink.
pub fn run_walk<R: Resistances + ?Sized>(
    g: &GraphWithSink,
    env: &R,
    start: VertexId,
    max_steps: usize,
    seed: u64,
) -> Result<WalkTrace, WalkError> {
    if start == g.sink {
        return Err(WalkError::StartAtSink);
    }
    if all_infinite(g, env, start) {
        return Err(WalkError::IsolatedStart(start));
    }
    let mut rng = seed::stream(seed);
    let mut vertices = vec![start];
    let mut edges = Vec::new();
    let mut pos = start;
    let mut absorbed = false;
    for _ in 0..max_steps {
        let u: f64 = rng.random();
        let (e, _) =
            choose_edge(g, env, pos, u).expect("walk reached a vertex without finite edges");
        pos = g.graph.other_end(e, pos);
        vertices.push(pos);
        edges.push(e);
        if pos == g.sink {
            absorbed = true;
            break;
        }
    }
    Ok(WalkTrace {
        start,
        vertices,
        edges,
        seed,
        absorbed,
        isolated: false,
    })
}

/// Least `n >= 1` with `S_n = v`.
pub fn first_return_time(trace: &WalkTrace, v: VertexId) -> Option<usize> {
    trace
        .vertices
        .iter()
        .skip(1)
        .position(|&x| x == v)
        .map(|i| i + 1)
}

/// Truncated companion walk for one level.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct LevelTrace {
    pub gamma: f64,
    pub trace: WalkTrace,
    /// `T_k`: first `t` with `R(S_t S_{t+1}) > γ_k`; `None` if no such step.
    pub stop_time: Option<usize>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CoupledTraces {
    pub base: WalkTrace,
    pub levels: Vec<LevelTrace>,
}

impl CoupledTraces {
    /// Checks `S^(k)_n = S_n` for all `n <= T_k` and that `T_k` is
    /// nondecreasing in `k`.
    pub fn coupling_holds(&self) -> bool {
        let mut previous: Option<usize> = Some(0);
        for level in &self.levels {
            let limit = level.stop_time.unwrap_or(usize::MAX);
            let n_max = limit.min(self.base.vertices.len() - 1);
            for n in 0..=n_max {
                if level.trace.position(n) != self.base.position(n) {
                    return false;
                }
            }
            let monotone = match (previous, level.stop_time) {
                (None, Some(_)) => false,
                (Some(a), Some(b)) => a <= b,
                _ => true,
            };
            if !monotone {
                return false;
            }
            previous = level.stop_time;
        }
        true
    }
}

/// First `t` at which the trace crosses an edge heavier than `gamma`.
pub fn stopping_time<R: Resistances + ?Sized>(
    trace: &WalkTrace,
    env: &R,
    gamma: f64,
) -> Option<usize> {
    trace.edges.iter().position(|&e| env.resistance(e) > gamma)
}

struct LevelState {
    gamma: f64,
    pos: VertexId,
    together: bool,
    done: bool,
    vertices: Vec<VertexId>,
    edges: Vec<EdgeId>,
    absorbed: bool,
    isolated: bool,
    stop_time: Option<usize>,
}

/// Runs `S` and its truncations at each of `gammas` on one shared stream of
/// uniforms.
pub fn run_coupled<R: Resistances + ?Sized>(
    g: &GraphWithSink,
    env: &R,
    gammas: &[f64],
    start: VertexId,
    max_steps: usize,
    seed: u64,
) -> Result<CoupledTraces, WalkError> {
    if gammas.iter().any(|&x| !(x > 0.0)) || gammas.windows(2).any(|w| w[0] >= w[1]) {
        return Err(WalkError::BadLevels);
    }
    if start == g.sink {
        return Err(WalkError::StartAtSink);
    }
    if all_infinite(g, env, start) {
        return Err(WalkError::IsolatedStart(start));
    }
    let mut rng = seed::stream(seed);
    let mut levels: Vec<LevelState> = gammas
        .iter()
        .map(|&gamma| LevelState {
            gamma,
            pos: start,
            together: true,
            done: false,
            vertices: vec![start],
            edges: Vec::new(),
            absorbed: false,
            isolated: false,
            stop_time: None,
        })
        .collect();
    let mut base_pos = start;
    let mut base_vertices = vec![start];
    let mut base_edges = Vec::new();
    let mut base_done = false;
    let mut base_absorbed = false;

    for t in 0..max_steps {
        if base_done && levels.iter().all(|l| l.done) {
            break;
        }
        let u: f64 = rng.random();
        let base_choice = if base_done {
            None
        } else {
            choose_edge(g, env, base_pos, u)
        };

        for level in levels.iter_mut().filter(|l| !l.done) {
            let truncated = Truncated {
                inner: env,
                gamma: level.gamma,
            };
            let step = if level.together {
                let (e, rel) = base_choice.expect("coupled level outlived its base walk");
                if env.resistance(e) <= level.gamma {
                    Some(e)
                } else {
                    level.together = false;
                    level.stop_time = Some(t);
                    choose_edge(g, &truncated, level.pos, rel).map(|(e, _)| e)
                }
            } else {
                choose_edge(g, &truncated, level.pos, u).map(|(e, _)| e)
            };
            match step {
                Some(e) => {
                    level.pos = g.graph.other_end(e, level.pos);
                    level.vertices.push(level.pos);
                    level.edges.push(e);
                    if level.pos == g.sink {
                        level.absorbed = true;
                        level.done = true;
                    }
                }
                None => {
                    // only the start can lack light edges
                    level.isolated = true;
                    level.done = true;
                }
            }
        }

        if let Some((e, _)) = base_choice {
            base_pos = g.graph.other_end(e, base_pos);
            base_vertices.push(base_pos);
            base_edges.push(e);
            if base_pos == g.sink {
                base_absorbed = true;
                base_done = true;
            }
        }
    }

    let base = WalkTrace {
        start,
        vertices: base_vertices,
        edges: base_edges,
        seed,
        absorbed: base_absorbed,
        isolated: false,
    };
    let levels = levels
        .into_iter()
        .map(|l| LevelTrace {
            gamma: l.gamma,
            stop_time: l.stop_time,
            trace: WalkTrace {
                start,
                vertices: l.vertices,
                edges: l.edges,
                seed,
                absorbed: l.absorbed,
                isolated: l.isolated,
            },
        })
        .collect();
    Ok(CoupledTraces { base, levels })
}

/// Parameters for classifying level `k`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct LevelEventParams {
    /// Index into the coupled run's levels.
    pub level: usize,
    pub gamma: f64,
    /// `γ_(k+1)`; `None` stands for infinity.
    pub gamma_next: Option<f64>,
    pub horizon: usize,
}

/// Indicators of the events `A_k`, `B_k`, `C_k` and `G_k` on one trial.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct EventClassification {
    /// Every edge at `v` heavier than `γ_k`.
    pub a: bool,
    /// `{T_k < N_k} \ A_k`.
    pub b: bool,
    /// Some step before `N_k` crosses an edge of resistance `>= γ_(k+1)`, minus `A_k`.
    pub b_next_level: bool,
    /// `S^(k)` avoids `v` at times `1..=N_k`.
    pub c: bool,
    /// `S` avoids `v` at times `1..=N_k`.
    pub g: bool,
    pub stop_time: Option<usize>,
    pub params: LevelEventParams,
}

fn avoids(trace: &WalkTrace, v: VertexId, horizon: usize) -> bool {
    (1..=horizon).all(|n| trace.position(n).is_none_or(|x| x != v))
}

fn check_coverage(trace: &WalkTrace, horizon: usize) -> Result<(), WalkError> {
    if trace.isolated || trace.absorbed || trace.steps() >= horizon {
        Ok(())
    } else {
        Err(WalkError::ShortTrace {
            steps: trace.steps(),
            horizon,
        })
    }
}

/// Classifies a coupled run at one level. A trial in `G_k` outside
/// `A_k ∪ B_k ∪ C_k` is reported as an error: the coupling rules it out.
pub fn classify_events<R: Resistances + ?Sized>(
    g: &GraphWithSink,
    run: &CoupledTraces,
    env: &R,
    params: LevelEventParams,
    v: VertexId,
) -> Result<EventClassification, WalkError> {
    let level = run
        .levels
        .get(params.level)
        .ok_or(WalkError::LevelOutOfRange {
            level: params.level,
            levels: run.levels.len(),
        })?;
    if run.base.start != v {
        return Err(WalkError::WrongStart(v));
    }
    check_coverage(&run.base, params.horizon)?;

    let a = g
        .graph
        .incident(v)
        .iter()
        .all(|&e| env.resistance(e) > params.gamma);
    let b = level.stop_time.is_some_and(|t| t < params.horizon) && !a;
    let b_next_level = match params.gamma_next {
        Some(next) => {
            run.base
                .edges
                .iter()
                .take(params.horizon)
                .any(|&e| env.resistance(e) >= next)
                && !a
        }
        None => false,
    };
    let c = avoids(&level.trace, v, params.horizon);
    let g_event = avoids(&run.base, v, params.horizon);
    let out = EventClassification {
        a,
        b,
        b_next_level,
        c,
        g: g_event,
        stop_time: level.stop_time,
        params,
    };
    if g_event && !(a || b || c) {
        return Err(WalkError::ContainmentViolation(Box::new(out)));
    }
    Ok(out)
}

/// Counts of each event over many classified trials.
#[derive(Debug, Clone, Copy, Default, PartialEq, Serialize, Deserialize)]
pub struct EventTally {
    pub trials: u64,
    pub a: u64,
    pub b: u64,
    pub b_next_level: u64,
    pub c_minus_a: u64,
    pub g: u64,
    /// Trials where the `> γ_k` and `>= γ_(k+1)` readings of `B_k` differ.
    pub convention_mismatches: u64,
}

impl EventTally {
    pub fn record(&mut self, ev: &EventClassification) {
        self.trials += 1;
        self.a += u64::from(ev.a);
        self.b += u64::from(ev.b);
        self.b_next_level += u64::from(ev.b_next_level);
        self.c_minus_a += u64::from(ev.c && !ev.a);
        self.g += u64::from(ev.g);
        self.convention_mismatches += u64::from(ev.b != ev.b_next_level);
    }

    pub fn merge(mut self, other: &Self) -> Self {
        self.trials += other.trials;
        self.a += other.a;
        self.b += other.b;
        self.b_next_level += other.b_next_level;
        self.c_minus_a += other.c_minus_a;
        self.g += other.g;
        self.convention_mismatches += other.convention_mismatches;
        self
    }
}

/// Outcome of one return-time trial.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum ReturnOutcome {
    Isolated,
    Returned(usize),
    NoReturn { absorbed: bool },
}

impl ReturnOutcome {
    /// Not isolated and no return within `n` steps.
    pub fn fails_by(&self, n: usize) -> bool {
        match *self {
            Self::Isolated => false,
            Self::Returned(t) => t > n,
            Self::NoReturn { .. } => true,
        }
    }
}

fn return_outcome<R: Resistances + ?Sized>(
    g: &GraphWithSink,
    env: &R,
    v: VertexId,
    horizon: usize,
    seed: u64,
) -> ReturnOutcome {
    if all_infinite(g, env, v) {
        return ReturnOutcome::Isolated;
    }
    let mut rng = seed::stream(seed);
    let mut pos = v;
    for t in 1..=horizon {
        let u: f64 = rng.random();
        let (e, _) =
            choose_edge(g, env, pos, u).expect("walk reached a vertex without finite edges");
        pos = g.graph.other_end(e, pos);
        if pos == v {
            return ReturnOutcome::Returned(t);
        }
        if pos == g.sink {
            return ReturnOutcome::NoReturn { absorbed: true };
        }
    }
    ReturnOutcome::NoReturn { absorbed: false }
}

/// Runs `trials` independent (environment, walk) pairs from `v`, each walk
/// stopped at its first return, absorption or `horizon` steps. Trial `i`
/// uses `seed::trial_seeds(base_seed, i)`, so outcomes for a shorter horizon
/// are prefixes of those for a longer one.
pub fn return_outcomes(
    g: &GraphWithSink,
    dist: &ResistanceDistribution,
    v: VertexId,
    horizon: usize,
    trials: usize,
    base_seed: u64,
) -> Vec<ReturnOutcome> {
    (0..trials as u64)
        .into_par_iter()
        .map(|i| {
            let (env_seed, walk_seed) = seed::trial_seeds(base_seed, i);
            let field = SampledField {
                distribution: dist,
                seed: env_seed,
            };
            return_outcome(g, &field, v, horizon, walk_seed)
        })
        .collect()
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FailureEstimate {
    pub horizon: usize,
    pub trials: u64,
    pub failures: u64,
    pub absorbed: u64,
    pub estimate: f64,
    /// One-sided 99% Wilson upper bound.
    pub upper: f64,
}

impl FailureEstimate {
    pub fn from_outcomes(outcomes: &[ReturnOutcome], n: usize) -> Self {
        let failures = outcomes.iter().filter(|o| o.fails_by(n)).count() as u64;
        let absorbed = outcomes
            .iter()
            .filter(|o| matches!(o, ReturnOutcome::NoReturn { absorbed: true }))
            .count() as u64;
        let p = Proportion::new(failures, outcomes.len() as u64);
        Self {
            horizon: n,
            trials: p.trials,
            failures,
            absorbed,
            estimate: p.estimate(),
            upper: p.wilson_upper(Z_99),
        }
    }
}

pub const MIN_TRIALS: usize = 100;

/// Estimates P(v not isolated and no return to v within `n` steps) under a
/// fresh `dist`-environment per trial.
pub fn estimate_return_failure(
    g: &GraphWithSink,
    dist: &ResistanceDistribution,
    v: VertexId,
    n: usize,
    trials: usize,
    base_seed: u64,
) -> Result<FailureEstimate, WalkError> {
    if trials < MIN_TRIALS {
        return Err(WalkError::TooFewTrials {
            min: MIN_TRIALS,
            got: trials,
        });
    }
    if v == g.sink {
        return Err(WalkError::StartAtSink);
    }
    let outcomes = return_outcomes(g, dist, v, n, trials, base_seed);
    Ok(FailureEstimate::from_outcomes(&outcomes, n))
}
