mod common;

use rwre_core::construction::{
    build_staircase, choose_n, verify_recurrence_bound, ChooseNConfig, ConstructionConfig,
    ConstructionError, EventName, GammaPolicy,
};
use rwre_core::environment::{Environment, ResistanceDistribution};
use rwre_core::graph::{build_lattice_ball, GraphWithSink};

/// Failure curve averaged exactly over every open/closed pattern of the
/// two-point law `{1 with probability p, ∞ otherwise}`.
fn averaged_failure_curve(g: &GraphWithSink, p: f64, max_horizon: usize) -> Vec<f64> {
    let m = g.edge_count();
    assert!(m <= 20);
    let mut curve = vec![0.0; max_horizon + 1];
    for mask in 0u32..(1 << m) {
        let values: Vec<f64> = (0..m)
            .map(|e| {
                if mask >> e & 1 == 1 {
                    1.0
                } else {
                    f64::INFINITY
                }
            })
            .collect();
        let open = mask.count_ones() as i32;
        let weight = p.powi(open) * (1.0 - p).powi(m as i32 - open);
        let env = Environment::from_values(values).unwrap();
        for (acc, f) in
            curve
                .iter_mut()
                .zip(common::exact_failure_curve(g, &env, g.root, max_horizon))
        {
            *acc += weight * f;
        }
    }
    curve
}

#[test]
fn chosen_horizon_agrees_with_enumeration() {
    let g = build_lattice_ball(1, 6).unwrap();
    let exact = averaged_failure_curve(&g, 0.5, 256);
    let dist = ResistanceDistribution::TwoPoint {
        value: 1.0,
        mass: 0.5,
    };
    let config = ChooseNConfig {
        trials: 10_000,
        safety: 0.8,
        max_n: 1024,
    };
    let chosen = choose_n(&g, &dist, g.root, 0.5, &config, 21).unwrap();

    assert!(chosen.n <= 64, "N = {}", chosen.n);
    for step in &chosen.search {
        let f = exact[step.n];
        let sigma = (f * (1.0 - f) / 10_000.0).sqrt();
        assert!(
            (step.estimate - f).abs() <= 4.0 * sigma + 1e-12,
            "N={}: {} vs {f}",
            step.n,
            step.estimate
        );
    }
    let minimal = exact.iter().position(|&f| f <= 0.5).unwrap();
    let comfortable = exact.iter().position(|&f| f <= 0.35).unwrap();
    assert!(exact[chosen.n] <= 0.5);
    assert!(
        chosen.n >= minimal && chosen.n <= comfortable,
        "{} not in [{minimal}, {comfortable}]",
        chosen.n
    );
}

#[test]
fn level_one_verification_matches_enumeration() {
    let g = build_lattice_ball(1, 6).unwrap();
    let config = ConstructionConfig {
        choose: ChooseNConfig {
            trials: 10_000,
            ..ChooseNConfig::default()
        },
        policy: GammaPolicy::Dyadic,
        seed: 5,
    };
    let (mu, report) = build_staircase(&g, g.root, &[0.5], 1, &config).unwrap();
    let bound = report.level_bound(1).unwrap();
    let verification = verify_recurrence_bound(&g, &mu, bound, g.root, 10_000, 77).unwrap();
    assert!(verification.pass, "{}", verification.table());

    let exact = averaged_failure_curve(&g, 0.5, bound.n);
    let g_check = verification.check(EventName::G);
    let f = exact[bound.n];
    let sigma = (f * (1.0 - f) / 10_000.0).sqrt();
    assert!(
        (g_check.estimate - f).abs() <= 4.0 * sigma,
        "{} vs {f}",
        g_check.estimate
    );
    let a = verification.check(EventName::A);
    assert!((a.estimate - 0.25).abs() <= 4.0 * (0.25f64 * 0.75 / 10_000.0).sqrt());
}

#[test]
fn construction_is_deterministic() {
    let g = build_lattice_ball(1, 40).unwrap();
    let config = ConstructionConfig {
        choose: ChooseNConfig {
            trials: 2_000,
            ..ChooseNConfig::default()
        },
        policy: GammaPolicy::Dyadic,
        seed: 3,
    };
    let (_, a) = build_staircase(&g, g.root, &[0.5, 0.75], 2, &config).unwrap();
    let (_, b) = build_staircase(&g, g.root, &[0.5, 0.75], 2, &config).unwrap();
    assert_eq!(
        serde_json::to_string(&a).unwrap(),
        serde_json::to_string(&b).unwrap()
    );
    let r = &a.levels;
    assert!(r[1].gamma > 2.0 * (r[0].n * r[0].d) as f64 * r[0].gamma);
}

#[test]
fn corrupted_horizon_fails_verification() {
    let g = build_lattice_ball(1, 40).unwrap();
    let config = ConstructionConfig {
        choose: ChooseNConfig {
            trials: 2_000,
            ..ChooseNConfig::default()
        },
        ..ConstructionConfig::default()
    };
    let (mu, report) = build_staircase(&g, g.root, &[0.5, 0.75], 2, &config).unwrap();
    for k in 1..=2 {
        let mut bound = report.level_bound(k).unwrap();
        bound.n = 1;
        let v = verify_recurrence_bound(&g, &mu, bound, g.root, 2_000, 9).unwrap();
        assert!(!v.pass, "level {k}\n{}", v.table());
    }
}

#[test]
fn transient_truncation_reports_non_termination() {
    // the root's only edge leads into the sink
    let g = GraphWithSink::new(
        rwre_core::FiniteGraph::from_edges(2, &[(0, 1)]).unwrap(),
        0,
        1,
        0,
    )
    .unwrap();
    let dist = ResistanceDistribution::Constant { value: 1.0 };
    let config = ChooseNConfig {
        trials: 200,
        safety: 0.8,
        max_n: 64,
    };
    match choose_n(&g, &dist, g.root, 0.5, &config, 0) {
        Err(ConstructionError::NonTermination { max_n, search, .. }) => {
            assert_eq!(max_n, 64);
            assert_eq!(search.last().unwrap().n, 64);
        }
        other => panic!("expected non-termination, got {other:?}"),
    }
}
