use std::collections::HashSet;

use evoc::experiments::run_batch;
use evoc::fitness::evaluate;
use evoc::metrics::{diversity, mean_fitness};
use evoc::{Neighborhood, RunConfig, Simulation};
use proptest::prelude::*;

/// Creative leader, imitating followers. Values frozen from the first
/// verified run of this configuration at master seed 1.
#[test]
fn creative_leader_golden() {
    let mut cfg = RunConfig::default();
    cfg.leader_params.i = 1.0;
    cfg.leader_params.c = 1.0 / 6.0;
    cfg.follower_params.i = 0.0;
    let runs = run_batch(&cfg, 100, 1).unwrap();
    let finals: Vec<f64> = runs.iter().map(|t| t.records.last().unwrap().mean_fitness).collect();
    let near_max = finals.iter().filter(|&&f| f >= 0.9 * 14.0).count();
    assert!(near_max >= 90, "{near_max} of 100 runs within 10% of the maximum");
    assert_eq!(near_max, 95);
    let mean = finals.iter().sum::<f64>() / finals.len() as f64;
    assert!((mean - 13.89).abs() < 1e-9, "{mean}");
}

#[test]
fn non_inventing_leader_copies_only_neighbors() {
    let mut cfg = RunConfig {
        seed: 31,
        iterations: 120,
        ..RunConfig::default()
    };
    cfg.follower_params.i = 0.5;
    cfg.leader_params.i = 0.0;
    let mut sim = Simulation::new(&cfg).unwrap();
    let leader = sim.world().leader_id().unwrap();
    let neighbors = sim.world().neighbors(leader).unwrap();
    let mut changes = 0;
    for _ in 0..cfg.iterations {
        let before = sim.world().clone();
        sim.advance();
        let now = sim.world().agents()[leader].implemented;
        if now != before.agents()[leader].implemented {
            changes += 1;
            assert!(neighbors.iter().any(|&n| before.agents()[n].implemented == now));
        }
    }
    assert!(changes > 0);
}

fn arb_config() -> impl Strategy<Value = RunConfig> {
    (
        1usize..7,
        1usize..7,
        1usize..40,
        (0.0f64..=1.0, 0.0f64..=1.0, 0.0f64..=1.0, 0.0f64..=1.0),
        any::<bool>(),
        any::<bool>(),
        any::<bool>(),
        any::<u64>(),
    )
        .prop_map(|(w, h, iterations, (il, ifo, cl, cf), bc, vn, ops, seed)| {
            let mut cfg = RunConfig {
                width: w,
                height: h,
                iterations,
                broadcasting: bc,
                seed,
                neighborhood: if vn { Neighborhood::VonNeumann } else { Neighborhood::Moore },
                ..RunConfig::default()
            };
            cfg.leader_params.i = il;
            cfg.follower_params.i = ifo;
            cfg.leader_params.c = cl;
            cfg.follower_params.c = cf;
            cfg.set_operators(ops);
            cfg
        })
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn trajectory_invariants(cfg in arb_config()) {
        let mut sim = Simulation::new(&cfg).unwrap();
        let n = cfg.width * cfg.height;
        let mut prev: Vec<f64> = vec![2.0; n];
        let mut prev_mean = 2.0;
        while let Some(r) = sim.advance() {
            let w = sim.world();
            prop_assert_eq!(w.len(), n);
            prop_assert!(r.diversity >= 1 && r.diversity <= n.min(729));
            prop_assert!(r.mean_fitness >= prev_mean && r.mean_fitness <= 14.0);
            prop_assert_eq!(r.mean_fitness, mean_fitness(w));
            let fresh: Vec<f64> = w.agents().iter().map(|a| evaluate(&a.implemented).value()).collect();
            for ((a, f), p) in w.agents().iter().zip(&fresh).zip(&prev) {
                prop_assert_eq!(a.implemented_fitness.value(), *f);
                prop_assert!(*f >= *p);
                prop_assert!((0.0..=1.0).contains(&a.operator_state.sym_estimate));
                prop_assert!((0.0..=1.0).contains(&a.operator_state.mov_estimate));
            }
            let distinct: HashSet<_> = w.agents().iter().map(|a| a.implemented).collect();
            prop_assert_eq!(distinct.len(), diversity(w));
            prop_assert_eq!(diversity(w) == 1, distinct.len() == 1);
            prev = fresh;
            prev_mean = r.mean_fitness;
        }
        prop_assert_eq!(sim.records().len(), cfg.iterations);
        let leaders = sim.world().agents().iter().filter(|a| a.is_leader()).count();
        prop_assert_eq!(leaders, usize::from(cfg.broadcasting));
    }

    #[test]
    fn runs_are_reproducible(cfg in arb_config()) {
        prop_assert_eq!(evoc::run(&cfg).unwrap(), evoc::run(&cfg).unwrap());
    }
}
