//! Society-wide statistics over a world snapshot.

use serde::{Deserialize, Serialize};

use crate::model::{World, ACTION_COUNT};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct IterationRecord {
    pub iteration: u64,
    pub mean_fitness: f64,
    pub diversity: usize,
}

/// Mean implemented fitness over all agents, leader included.
pub fn mean_fitness(world: &World) -> f64 {
    let total: f64 = world
        .agents()
        .iter()
        .map(|a| a.implemented_fitness.value())
        .sum();
    total / world.len() as f64
}

/// Number of distinct implemented actions.
pub fn diversity(world: &World) -> usize {
    let mut seen = [false; ACTION_COUNT];
    let mut count = 0;
    for a in world.agents() {
        let slot = &mut seen[a.implemented.index()];
        if !*slot {
            *slot = true;
            count += 1;
        }
    }
    count
}

pub fn record(world: &World) -> IterationRecord {
    IterationRecord {
        iteration: world.iteration(),
        mean_fitness: mean_fitness(world),
        diversity: diversity(world),
    }
}
