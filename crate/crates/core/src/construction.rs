//! Level-by-level construction of a staircase resistance law whose walk keeps
//! returning to the root.
//!
//! Level `k` fixes an atom `γ_k` (with `γ_1 = 1`), a horizon `N_k` such that
//! under `μ_k` the root is, with probability at most `2^-k`, neither isolated
//! nor revisited within `N_k` steps, and the degree bound `D_k` of the ball of
//! radius `N_k`. The next atom is chosen so large that a walk of `N_k` steps
//! is unlikely to cross an edge of resistance `γ_(k+1)` while lighter edges are
//! available.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::environment::{EnvironmentError, ResistanceDistribution, SampledField, StaircaseMu};
use crate::graph::{max_degree_within, GraphError, GraphWithSink, VertexId};
use crate::seed;
use crate::stats::{Proportion, Z_99};
use crate::walk::{
    classify_events, return_outcomes, run_coupled, EventClassification, EventTally,
    FailureEstimate, LevelEventParams, WalkError, MIN_TRIALS,
};

#[derive(Debug, Error)]
pub enum ConstructionError {
    #[error("invalid level sequence: {0}")]
    InvalidLevels(String),
    #[error("level {level}: no horizon up to {max_n} met the target {target:e} (last upper bound {last_upper:.4})")]
    NonTermination {
        level: usize,
        max_n: usize,
        target: f64,
        last_upper: f64,
        search: Vec<SearchStep>,
    },
    #[error(transparent)]
    Graph(#[from] GraphError),
    #[error(transparent)]
    Environment(#[from] EnvironmentError),
    #[error(transparent)]
    Walk(#[from] WalkError),
}

/// How `γ_(k+1)` is derived from `(N_k, D_k, γ_k)`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum GammaPolicy {
    /// Smallest integer above `2 N_k D_k γ_k`.
    Minimal,
    /// Smallest integer above `2^k N_k D_k γ_k`, which makes
    /// `N_k D_k γ_k / γ_(k+1) < 2^-k`.
    Dyadic,
}

impl std::str::FromStr for GammaPolicy {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "minimal" => Ok(Self::Minimal),
            "dyadic" => Ok(Self::Dyadic),
            other => Err(format!(
                "unknown gamma policy {other:?} (expected dyadic or minimal)"
            )),
        }
    }
}

/// Smallest integer strictly greater than `2 n d gamma`.
pub fn next_gamma(n: usize, d: usize, gamma: f64) -> f64 {
    smallest_integer_above(2.0 * n as f64 * d as f64 * gamma)
}

/// `γ_(k+1)` under `policy`, given level `k >= 1` quantities.
pub fn next_gamma_for_level(policy: GammaPolicy, k: usize, n: usize, d: usize, gamma: f64) -> f64 {
    match policy {
        GammaPolicy::Minimal => next_gamma(n, d, gamma),
        GammaPolicy::Dyadic => {
            smallest_integer_above(2f64.powi(k as i32) * n as f64 * d as f64 * gamma)
        }
    }
}

fn smallest_integer_above(x: f64) -> f64 {
    x.floor() + 1.0
}

/// `μ_(k-1) + (p_k - p_(k-1)) (δ_(γ_k) - δ_∞)`.
pub fn extend_mu(mu: &StaircaseMu, gamma: f64, p: f64) -> Result<StaircaseMu, EnvironmentError> {
    mu.extend(gamma, p)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ChooseNConfig {
    pub trials: usize,
    /// The search accepts `N` once the upper bound is below `target * safety`.
    pub safety: f64,
    pub max_n: usize,
}

impl Default for ChooseNConfig {
    fn default() -> Self {
        Self {
            trials: 10_000,
            safety: 0.8,
            max_n: 1 << 20,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SearchStep {
    pub n: usize,
    pub estimate: f64,
    pub upper: f64,
    pub accepted: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ChosenHorizon {
    pub n: usize,
    pub target: f64,
    pub criterion: f64,
    pub estimate: Option<FailureEstimate>,
    pub search: Vec<SearchStep>,
}

/// Smallest horizon whose one-sided 99% upper bound on
/// P(root not isolated, no return within N) is at most `target * safety`.
///
/// Horizons are doubled from 1 until one passes, then bisected. Every
/// candidate reuses the same per-trial seeds, so failure counts are
/// monotone in `N` and the bisection reads them off the outcomes of the
/// last doubling step.
pub fn choose_n(
    g: &GraphWithSink,
    mu: &ResistanceDistribution,
    v: VertexId,
    target: f64,
    config: &ChooseNConfig,
    seed: u64,
) -> Result<ChosenHorizon, ConstructionError> {
    if target >= 1.0 {
        return Ok(ChosenHorizon {
            n: 0,
            target,
            criterion: target,
            estimate: None,
            search: Vec::new(),
        });
    }
    if config.trials < MIN_TRIALS {
        return Err(WalkError::TooFewTrials {
            min: MIN_TRIALS,
            got: config.trials,
        }
        .into());
    }
    let criterion = target * config.safety;
    let mut search = Vec::new();
    let mut lo = 0;
    let mut horizon = 1;
    let outcomes = loop {
        let outcomes = return_outcomes(g, mu, v, horizon, config.trials, seed);
        let est = FailureEstimate::from_outcomes(&outcomes, horizon);
        let accepted = est.upper <= criterion;
        search.push(SearchStep {
            n: horizon,
            estimate: est.estimate,
            upper: est.upper,
            accepted,
        });
        if accepted {
            break outcomes;
        }
        if horizon >= config.max_n {
            return Err(ConstructionError::NonTermination {
                level: 0,
                max_n: config.max_n,
                target,
                last_upper: est.upper,
                search,
            });
        }
        lo = horizon;
        horizon = (horizon * 2).min(config.max_n);
    };
    let mut hi = horizon;
    while hi - lo > 1 {
        let mid = lo + (hi - lo) / 2;
        let est = FailureEstimate::from_outcomes(&outcomes, mid);
        let accepted = est.upper <= criterion;
        search.push(SearchStep {
            n: mid,
            estimate: est.estimate,
            upper: est.upper,
            accepted,
        });
        if accepted {
            hi = mid;
        } else {
            lo = mid;
        }
    }
    Ok(ChosenHorizon {
        n: hi,
        target,
        criterion,
        estimate: Some(FailureEstimate::from_outcomes(&outcomes, hi)),
        search,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ConstructionConfig {
    pub choose: ChooseNConfig,
    pub policy: GammaPolicy,
    pub seed: u64,
}

impl Default for ConstructionConfig {
    fn default() -> Self {
        Self {
            choose: ChooseNConfig::default(),
            policy: GammaPolicy::Dyadic,
            seed: 0,
        }
    }
}

/// The inductive record at level `k`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ConstructionState {
    pub k: usize,
    pub p: f64,
    pub gamma: f64,
    pub n: usize,
    pub d: usize,
    pub mu: StaircaseMu,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LevelRecord {
    pub k: usize,
    pub p: f64,
    pub gamma: f64,
    pub n: usize,
    pub d: usize,
    /// The degree search ball reached the sink; `d` may understate the
    /// untruncated graph's bound.
    pub degree_reached_sink: bool,
    /// Truncation radius is at least `N_k`.
    pub radius_covers_horizon: bool,
    pub horizon: ChosenHorizon,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ConstructionReport {
    pub root: VertexId,
    pub radius: usize,
    pub levels: Vec<LevelRecord>,
    pub mu: StaircaseMu,
    pub config: ConstructionConfig,
}

impl ConstructionReport {
    /// State after level `k` (one-based).
    pub fn state(&self, k: usize) -> Option<ConstructionState> {
        let rec = self.levels.get(k.checked_sub(1)?)?;
        Some(ConstructionState {
            k,
            p: rec.p,
            gamma: rec.gamma,
            n: rec.n,
            d: rec.d,
            mu: self.mu.prefix(k).ok()?,
        })
    }

    /// Bounds for verifying level `k`; `γ_(K+1)` is infinite at the top level.
    pub fn level_bound(&self, k: usize) -> Option<LevelBound> {
        let state = self.state(k)?;
        Some(LevelBound {
            k,
            p: state.p,
            gamma: state.gamma,
            gamma_next: self.levels.get(k).map(|r| r.gamma),
            n: state.n,
            d: state.d,
        })
    }
}

/// Runs levels `1..=levels` of the construction from vertex `v`.
pub fn build_staircase(
    g: &GraphWithSink,
    v: VertexId,
    p_sequence: &[f64],
    levels: usize,
    config: &ConstructionConfig,
) -> Result<(StaircaseMu, ConstructionReport), ConstructionError> {
    if levels == 0 {
        return Err(ConstructionError::InvalidLevels(
            "at least one level is required".into(),
        ));
    }
    if p_sequence.len() < levels {
        return Err(ConstructionError::InvalidLevels(format!(
            "{levels} levels requested but only {} probabilities given",
            p_sequence.len()
        )));
    }
    let ps = &p_sequence[..levels];
    if ps.iter().any(|&p| !(p > 0.0 && p < 1.0)) || ps.windows(2).any(|w| w[0] >= w[1]) {
        return Err(ConstructionError::InvalidLevels(
            "probabilities must be strictly increasing inside (0, 1)".into(),
        ));
    }

    let mut records: Vec<LevelRecord> = Vec::with_capacity(levels);
    let mut mu = StaircaseMu::single(1.0, ps[0])?;
    for k in 1..=levels {
        if k > 1 {
            let prev = &records[k - 2];
            // N_(k-1) >= 1 keeps the atoms strictly increasing
            let gamma = next_gamma_for_level(
                config.policy,
                k - 1,
                prev.n.max(1),
                prev.d.max(1),
                prev.gamma,
            );
            mu = extend_mu(&mu, gamma, ps[k - 1])?;
        }
        let gamma = mu.gammas[k - 1];
        let target = 0.5f64.powi(k as i32);
        let dist = ResistanceDistribution::Staircase(mu.clone());
        let horizon = choose_n(
            g,
            &dist,
            v,
            target,
            &config.choose,
            seed::mix(config.seed, k as u64),
        )
        .map_err(|e| match e {
            ConstructionError::NonTermination {
                max_n,
                target,
                last_upper,
                search,
                ..
            } => ConstructionError::NonTermination {
                level: k,
                max_n,
                target,
                last_upper,
                search,
            },
            other => other,
        })?;
        let bound = max_degree_within(g, v, horizon.n)?;
        records.push(LevelRecord {
            k,
            p: ps[k - 1],
            gamma,
            n: horizon.n,
            d: bound.max_degree,
            degree_reached_sink: bound.reached_sink,
            radius_covers_horizon: g.radius >= horizon.n,
            horizon,
        });
    }
    let report = ConstructionReport {
        root: v,
        radius: g.radius,
        levels: records,
        mu: mu.clone(),
        config: config.clone(),
    };
    Ok((mu, report))
}

/// `(k, p_k, γ_k, γ_(k+1), N_k, D_k)` for one verification run.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LevelBound {
    pub k: usize,
    pub p: f64,
    pub gamma: f64,
    /// `None` stands for infinity.
    pub gamma_next: Option<f64>,
    pub n: usize,
    pub d: usize,
}

impl LevelBound {
    pub fn g_bound(&self) -> f64 {
        (1.0 - self.p) + 0.5f64.powi(self.k as i32 - 1)
    }

    pub fn a_bound(&self) -> f64 {
        1.0 - self.p
    }

    pub fn b_bound(&self) -> f64 {
        match self.gamma_next {
            Some(next) => self.n as f64 * self.d as f64 * self.gamma / next,
            None => 0.0,
        }
    }

    pub fn c_bound(&self) -> f64 {
        0.5f64.powi(self.k as i32)
    }
}

/// One checked inequality `P(event) <= bound`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BoundCheck {
    pub event: EventName,
    pub count: u64,
    pub trials: u64,
    pub estimate: f64,
    pub lower: f64,
    pub upper: f64,
    pub bound: f64,
    /// Half-width of the two-sided 99% interval.
    pub slack: f64,
    pub pass: bool,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum EventName {
    G,
    A,
    B,
    CMinusA,
}

impl std::fmt::Display for EventName {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            Self::G => "P(G_k)",
            Self::A => "P(A_k)",
            Self::B => "P(B_k)",
            Self::CMinusA => "P(C_k \\ A_k)",
        })
    }
}

impl BoundCheck {
    fn new(event: EventName, count: u64, trials: u64, bound: f64) -> Self {
        let p = Proportion::new(count, trials);
        let slack = p.slack_99();
        Self {
            event,
            count,
            trials,
            estimate: p.estimate(),
            lower: p.wilson_lower(Z_99),
            upper: p.wilson_upper(Z_99),
            bound,
            slack,
            pass: p.estimate() <= bound + slack,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct VerificationReport {
    pub level: LevelBound,
    pub tally: EventTally,
    pub checks: Vec<BoundCheck>,
    pub pass: bool,
}

impl VerificationReport {
    pub fn check(&self, event: EventName) -> &BoundCheck {
        self.checks
            .iter()
            .find(|c| c.event == event)
            .expect("every event is checked")
    }

    /// Plain-text PASS/FAIL table.
    pub fn table(&self) -> String {
        let mut out = format!(
            "level {} (p={}, gamma={}, N={}, D={})\n{:<14} {:>10} {:>10} {:>10} {:>6}\n",
            self.level.k,
            self.level.p,
            self.level.gamma,
            self.level.n,
            self.level.d,
            "event",
            "estimate",
            "bound",
            "slack",
            "result"
        );
        for c in &self.checks {
            out.push_str(&format!(
                "{:<14} {:>10.5} {:>10.5} {:>10.5} {:>6}\n",
                c.event.to_string(),
                c.estimate,
                c.bound,
                c.slack,
                if c.pass { "PASS" } else { "FAIL" }
            ));
        }
        out.push_str(if self.pass {
            "overall PASS\n"
        } else {
            "overall FAIL\n"
        });
        out
    }
}

/// Samples `trials` environments from `mu` with coupled walks from `v` and
/// checks the level-`k` event bounds.
pub fn verify_recurrence_bound(
    g: &GraphWithSink,
    mu: &StaircaseMu,
    level: LevelBound,
    v: VertexId,
    trials: usize,
    seed: u64,
) -> Result<VerificationReport, ConstructionError> {
    if trials < MIN_TRIALS {
        return Err(WalkError::TooFewTrials {
            min: MIN_TRIALS,
            got: trials,
        }
        .into());
    }
    let dist = ResistanceDistribution::Staircase(mu.clone());
    let params = LevelEventParams {
        level: 0,
        gamma: level.gamma,
        gamma_next: level.gamma_next,
        horizon: level.n,
    };
    let events: Vec<Result<EventClassification, WalkError>> = (0..trials as u64)
        .into_par_iter()
        .map(|i| {
            let (env_seed, walk_seed) = seed::trial_seeds(seed, i);
            let field = SampledField {
                distribution: &dist,
                seed: env_seed,
            };
            match run_coupled(g, &field, &[level.gamma], v, level.n, walk_seed) {
                Ok(run) => classify_events(g, &run, &field, params, v),
                // an isolated walk stays at v: it is in A_k and never in G_k
                Err(WalkError::IsolatedStart(_)) => Ok(EventClassification {
                    a: true,
                    b: false,
                    b_next_level: false,
                    c: false,
                    g: false,
                    stop_time: Some(0),
                    params,
                }),
                Err(e) => Err(e),
            }
        })
        .collect();
    let mut tally = EventTally::default();
    for ev in events {
        tally.record(&ev?);
    }
    let n = tally.trials;
    let checks = vec![
        BoundCheck::new(EventName::G, tally.g, n, level.g_bound()),
        BoundCheck::new(EventName::A, tally.a, n, level.a_bound()),
        BoundCheck::new(EventName::B, tally.b, n, level.b_bound()),
        BoundCheck::new(EventName::CMinusA, tally.c_minus_a, n, level.c_bound()),
    ];
    let pass = checks.iter().all(|c| c.pass);
    Ok(VerificationReport {
        level,
        tally,
        checks,
        pass,
    })
}
