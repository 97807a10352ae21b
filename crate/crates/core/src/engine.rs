//! The simulation loop.
//!
//! Updates are synchronous: every agent reads the actions implemented at
//! the start of the iteration and all adoptions land together. Each agent
//! draws from its own RNG stream, so the order in which agents are visited
//! within an iteration does not affect the outcome.

use std::sync::Arc;

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{EvocError, Result};
use crate::fitness::{FitnessScore, FitnessTable};
use crate::metrics::{self, IterationRecord};
use crate::model::{Action, AgentParams, AgentState, Neighborhood, World, WorldSpec};
use crate::operators::{invent, OperatorState};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunConfig {
    pub width: usize,
    pub height: usize,
    pub iterations: usize,
    pub follower_params: AgentParams,
    pub leader_params: AgentParams,
    pub broadcasting: bool,
    pub seed: u64,
    pub neighborhood: Neighborhood,
}

impl Default for RunConfig {
    fn default() -> Self {
        RunConfig {
            width: 10,
            height: 10,
            iterations: 100,
            follower_params: AgentParams::default(),
            leader_params: AgentParams::default(),
            broadcasting: true,
            seed: 0,
            neighborhood: Neighborhood::Moore,
        }
    }
}

impl RunConfig {
    pub fn validate(&self) -> Result<()> {
        if self.width == 0 || self.height == 0 {
            return Err(EvocError::InvalidConfig(format!(
                "world must be at least 1x1, got {}x{}",
                self.width, self.height
            )));
        }
        if self.iterations == 0 {
            return Err(EvocError::InvalidConfig("iterations must be at least 1".into()));
        }
        self.follower_params.validate()?;
        self.leader_params.validate()
    }

    /// Sets `operators_enabled` on both leader and followers.
    pub fn set_operators(&mut self, enabled: bool) {
        self.follower_params.operators_enabled = enabled;
        self.leader_params.operators_enabled = enabled;
    }

    fn world_spec(&self) -> WorldSpec {
        WorldSpec {
            width: self.width,
            height: self.height,
            neighborhood: self.neighborhood,
            broadcasting: self.broadcasting,
            follower_params: self.follower_params,
            leader_params: self.leader_params,
            seed: self.seed,
        }
    }
}

/// Per-iteration statistics of one run plus its final world.
#[derive(Debug, Clone, PartialEq)]
pub struct Trajectory {
    pub records: Vec<IterationRecord>,
    pub final_world: World,
}

/// An action as seen by an observer: what is implemented and how fit it is.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Observed {
    pub action: Action,
    pub fitness: FitnessScore,
}

/// Looks through `sources` in uniformly random order and returns the first
/// one strictly fitter than `current`. Stops there even if a fitter one
/// remains unvisited.
pub fn try_imitate<R: Rng + ?Sized>(
    current: FitnessScore,
    sources: &[Observed],
    rng: &mut R,
) -> Option<Observed> {
    let mut remaining: Vec<&Observed> = sources.iter().collect();
    while !remaining.is_empty() {
        let pick = rng.random_range(0..remaining.len());
        let source = remaining.swap_remove(pick);
        if source.fitness > current {
            return Some(*source);
        }
    }
    None
}

/// Invents one candidate and keeps it only if mental simulation rates it
/// strictly fitter than `current`.
pub fn try_invent<R: Rng + ?Sized>(
    current: Observed,
    c: f64,
    operators: &OperatorState,
    landscape: &FitnessTable,
    rng: &mut R,
) -> Option<Observed> {
    let candidate = invent(&current.action, c, operators, rng);
    let fitness = landscape.fitness(&candidate);
    (fitness > current.fitness).then_some(Observed {
        action: candidate,
        fitness,
    })
}

fn decide(
    agent: &mut AgentState,
    sources: &[usize],
    snapshot: &[Observed],
    landscape: &FitnessTable,
    scratch: &mut Vec<Observed>,
) -> Option<Observed> {
    let current = snapshot[agent.id];
    let u: f64 = agent.rng.random();
    if u < agent.params.i {
        try_invent(
            current,
            agent.params.c,
            &agent.operator_state,
            landscape,
            &mut agent.rng,
        )
    } else {
        scratch.clear();
        scratch.extend(sources.iter().map(|&s| snapshot[s]));
        try_imitate(current.fitness, scratch, &mut agent.rng)
    }
}

/// Advances the world by one iteration.
pub fn step(world: &mut World) {
    step_in_order(world, 0..world.len());
}

fn step_in_order(world: &mut World, order: impl IntoIterator<Item = usize>) {
    let snapshot: Vec<Observed> = world
        .agents
        .iter()
        .map(|a| Observed {
            action: a.implemented,
            fitness: a.implemented_fitness,
        })
        .collect();
    let mut adoptions: Vec<Option<Observed>> = vec![None; world.agents.len()];
    let mut scratch = Vec::with_capacity(9);
    for id in order {
        adoptions[id] = decide(
            &mut world.agents[id],
            &world.sources[id],
            &snapshot,
            &world.landscape,
            &mut scratch,
        );
    }
    for (agent, adopted) in world.agents.iter_mut().zip(adoptions) {
        if let Some(o) = adopted {
            agent.adopt(o.action, o.fitness);
        }
    }
    world.iteration += 1;
}

/// A run in progress.
#[derive(Debug, Clone)]
pub struct Simulation {
    world: World,
    iterations: usize,
    records: Vec<IterationRecord>,
}

impl Simulation {
    pub fn new(config: &RunConfig) -> Result<Self> {
        Self::with_landscape(config, FitnessTable::shared_default())
    }

    pub fn with_landscape(config: &RunConfig, landscape: Arc<FitnessTable>) -> Result<Self> {
        config.validate()?;
        Ok(Simulation {
            world: World::new(&config.world_spec(), landscape)?,
            iterations: config.iterations,
            records: Vec::with_capacity(config.iterations),
        })
    }

    pub fn world(&self) -> &World {
        &self.world
    }

    pub fn records(&self) -> &[IterationRecord] {
        &self.records
    }

    pub fn is_finished(&self) -> bool {
        self.records.len() >= self.iterations
    }

    /// Runs one iteration and records its statistics. Returns `None` once
    /// the configured number of iterations has been run.
    pub fn advance(&mut self) -> Option<IterationRecord> {
        if self.is_finished() {
            return None;
        }
        step(&mut self.world);
        let r = metrics::record(&self.world);
        self.records.push(r);
        Some(r)
    }

    pub fn finish(mut self) -> Trajectory {
        while self.advance().is_some() {}
        Trajectory {
            records: self.records,
            final_world: self.world,
        }
    }
}

/// Runs a full simulation. Record `k` describes the world after `k + 1`
/// iterations.
pub fn run(config: &RunConfig) -> Result<Trajectory> {
    Ok(Simulation::new(config)?.finish())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::Role;
    use crate::seed::agent_rng;

    fn obs(p: [i8; 6]) -> Observed {
        let action = Action::new(p).unwrap();
        Observed {
            action,
            fitness: crate::fitness::evaluate(&action),
        }
    }

    const OPTIMUM: [i8; 6] = [1, 1, -1, -1, 1, 0];

    #[test]
    fn imitate_nothing_fitter_than_optimum() {
        let mut rng = agent_rng(0, 0);
        let sources: Vec<Observed> = Action::all()
            .take(9)
            .map(|a| obs(a.parts()))
            .collect();
        assert_eq!(try_imitate(FitnessScore::new(14.0), &sources, &mut rng), None);
        assert_eq!(try_imitate(FitnessScore::new(2.0), &[], &mut rng), None);
    }

    #[test]
    fn imitate_single_fitter_source() {
        let mut rng = agent_rng(0, 1);
        let sources = [obs([0; 6]), obs(OPTIMUM), obs([0, 0, 0, 0, 0, 1])];
        for _ in 0..100 {
            let got = try_imitate(FitnessScore::new(2.0), &sources, &mut rng).unwrap();
            assert_eq!(got, obs(OPTIMUM));
        }
    }

    #[test]
    fn imitate_takes_first_found_not_best() {
        let a = obs([1, 1, 0, 0, 0, 1]);
        let b = obs([1, 1, -1, -1, 0, 0]);
        assert!(a.fitness.value() > 2.0 && b.fitness > a.fitness);
        let sources = [obs([0; 6]), a, b, obs([0, 0, 0, 0, 0, 1])];
        let mut rng = agent_rng(1, 0);
        let n = 100_000;
        let mut picked_a = 0;
        for _ in 0..n {
            if try_imitate(FitnessScore::new(2.0), &sources, &mut rng).unwrap() == a {
                picked_a += 1;
            }
        }
        let p = f64::from(picked_a) / f64::from(n);
        assert!((p - 0.5).abs() <= 0.02 * 0.5, "{p}");
    }

    #[test]
    fn invent_cannot_improve_optimum() {
        let mut rng = agent_rng(2, 0);
        let ops = OperatorState::new(true);
        let table = FitnessTable::shared_default();
        for _ in 0..1000 {
            assert_eq!(try_invent(obs(OPTIMUM), 1.0 / 6.0, &ops, &table, &mut rng), None);
        }
    }

    #[test]
    fn invent_with_zero_rate_never_adopts() {
        let mut rng = agent_rng(3, 0);
        let ops = OperatorState::new(true);
        let table = FitnessTable::shared_default();
        for _ in 0..1000 {
            assert_eq!(try_invent(obs([0; 6]), 0.0, &ops, &table, &mut rng), None);
        }
    }

    #[test]
    fn invent_adoption_rate_from_immobile() {
        // Oracle: with every part forced to change, the 64 sign patterns are
        // equally likely; count those strictly fitter than the start.
        let table = FitnessTable::shared_default();
        let mut fitter = 0;
        for bits in 0u32..64 {
            let mut p = [0i8; 6];
            for (k, slot) in p.iter_mut().enumerate() {
                *slot = if bits >> k & 1 == 1 { 1 } else { -1 };
            }
            if table.fitness(&Action::new(p).unwrap()).value() > 2.0 {
                fitter += 1;
            }
        }
        let expected = f64::from(fitter) / 64.0;
        assert_eq!(fitter, 64);

        let mut rng = agent_rng(4, 0);
        let ops = OperatorState::new(false);
        let n = 20_000;
        let adopted = (0..n)
            .filter(|_| try_invent(obs([0; 6]), 1.0, &ops, &table, &mut rng).is_some())
            .count();
        assert!((adopted as f64 / n as f64 - expected).abs() < 0.01);
    }

    fn config(seed: u64) -> RunConfig {
        RunConfig {
            seed,
            ..RunConfig::default()
        }
    }

    #[test]
    fn imitation_only_same_actions_is_static() {
        let mut cfg = config(3);
        cfg.follower_params.i = 0.0;
        cfg.leader_params.i = 0.0;
        let mut sim = Simulation::new(&cfg).unwrap();
        let before = sim.world().clone();
        sim.advance();
        let after = sim.world();
        assert_eq!(after.iteration(), 1);
        for (a, b) in before.agents().iter().zip(after.agents()) {
            assert_eq!(a.implemented, b.implemented);
            assert_eq!(a.operator_state, b.operator_state);
        }
    }

    #[test]
    fn step_is_deterministic() {
        let mut a = Simulation::new(&config(11)).unwrap();
        let mut b = Simulation::new(&config(11)).unwrap();
        for _ in 0..5 {
            a.advance();
            b.advance();
        }
        assert_eq!(a.world(), b.world());
    }

    #[test]
    fn agent_order_does_not_matter() {
        let cfg = config(12);
        let mut forward = Simulation::new(&cfg).unwrap().world;
        let mut reverse = forward.clone();
        let n = forward.len();
        for _ in 0..40 {
            step(&mut forward);
            step_in_order(&mut reverse, (0..n).rev());
        }
        assert_eq!(forward, reverse);
    }

    #[test]
    fn optimal_world_is_fixed_point() {
        let mut world = Simulation::new(&config(13)).unwrap().world;
        let best = Action::new(OPTIMUM).unwrap();
        let f = world.landscape().fitness(&best);
        for a in world.agents.iter_mut() {
            a.implemented = best;
            a.implemented_fitness = f;
        }
        let before: Vec<_> = world.agents().iter().map(|a| (a.implemented, a.operator_state)).collect();
        for _ in 0..10 {
            step(&mut world);
        }
        let after: Vec<_> = world.agents().iter().map(|a| (a.implemented, a.operator_state)).collect();
        assert_eq!(before, after);
    }

    #[test]
    fn silent_society_is_flat() {
        let mut cfg = config(14);
        cfg.broadcasting = false;
        cfg.follower_params.i = 0.0;
        cfg.leader_params.i = 0.0;
        let t = run(&cfg).unwrap();
        assert_eq!(t.records.len(), 100);
        for (k, r) in t.records.iter().enumerate() {
            assert_eq!(r.iteration, k as u64 + 1);
            assert_eq!(r.mean_fitness, 2.0);
            assert_eq!(r.diversity, 1);
        }
    }

    #[test]
    fn same_seed_same_trajectory() {
        let a = run(&config(15)).unwrap();
        let b = run(&config(15)).unwrap();
        assert_eq!(a, b);
        let c = run(&config(16)).unwrap();
        assert_ne!(a.records, c.records);
    }

    #[test]
    fn leader_gets_leader_params() {
        let mut cfg = config(17);
        cfg.leader_params.i = 1.0;
        cfg.follower_params.i = 0.0;
        let sim = Simulation::new(&cfg).unwrap();
        for a in sim.world().agents() {
            let expected = if a.role == Role::Leader { 1.0 } else { 0.0 };
            assert_eq!(a.params.i, expected);
        }
    }

    #[test]
    fn run_rejects_bad_config() {
        let mut cfg = config(0);
        cfg.iterations = 0;
        assert!(run(&cfg).is_err());
        let mut cfg = config(0);
        cfg.width = 0;
        assert!(run(&cfg).is_err());
        let mut cfg = config(0);
        cfg.follower_params.i = -0.1;
        assert!(run(&cfg).is_err());
    }

    #[test]
    fn fitness_is_monotone_and_cache_coherent() {
        let mut sim = Simulation::new(&config(18)).unwrap();
        let mut prev: Vec<f64> = sim.world().agents().iter().map(|a| a.implemented_fitness.value()).collect();
        let mut prev_mean = metrics::mean_fitness(sim.world());
        while sim.advance().is_some() {
            let w = sim.world();
            for (a, p) in w.agents().iter().zip(&prev) {
                let fresh = crate::fitness::evaluate(&a.implemented).value();
                assert_eq!(fresh, a.implemented_fitness.value());
                assert!(fresh >= *p);
            }
            let mean = metrics::mean_fitness(w);
            assert!(mean >= prev_mean);
            prev_mean = mean;
            prev = w.agents().iter().map(|a| a.implemented_fitness.value()).collect();
        }
    }

    #[test]
    fn adopted_actions_come_from_allowed_sources() {
        // Followers never invent; every action a follower adopts must have
        // been implemented by one of its sources on the previous iteration.
        let mut cfg = config(19);
        cfg.follower_params.i = 0.0;
        cfg.leader_params.i = 0.5;
        let mut sim = Simulation::new(&cfg).unwrap();
        for _ in 0..60 {
            let before = sim.world().clone();
            sim.advance();
            for (old, new) in before.agents().iter().zip(sim.world().agents()) {
                if old.implemented == new.implemented {
                    continue;
                }
                let from_source = before
                    .imitation_sources(old.id)
                    .unwrap()
                    .iter()
                    .any(|&s| before.agents()[s].implemented == new.implemented);
                if new.role == Role::Follower {
                    assert!(from_source, "follower {} adopted an unseen action", old.id);
                }
            }
        }
    }
}
