//! Actions, agents and the toroidal world they live on.

use std::fmt;
use std::sync::Arc;

use rand::Rng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{check_probability, EvocError, Result};
use crate::fitness::{FitnessScore, FitnessTable};
use crate::operators::OperatorState;
use crate::seed;

pub const PART_COUNT: usize = 6;
pub const ACTION_COUNT: usize = 729;

/// A body part. Arms and legs come in pairs; head and hips do not.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Part {
    LeftArm = 0,
    RightArm = 1,
    LeftLeg = 2,
    RightLeg = 3,
    Head = 4,
    Hips = 5,
}

impl Part {
    pub const ALL: [Part; PART_COUNT] = [
        Part::LeftArm,
        Part::RightArm,
        Part::LeftLeg,
        Part::RightLeg,
        Part::Head,
        Part::Hips,
    ];

    pub fn index(self) -> usize {
        self as usize
    }

    /// The other limb of an arm or leg pair.
    pub fn partner(self) -> Option<Part> {
        match self {
            Part::LeftArm => Some(Part::RightArm),
            Part::RightArm => Some(Part::LeftArm),
            Part::LeftLeg => Some(Part::RightLeg),
            Part::RightLeg => Some(Part::LeftLeg),
            Part::Head | Part::Hips => None,
        }
    }
}

/// Six ternary body-part positions: -1 down, 0 stationary, +1 up.
///
/// An idea and the action it describes share this representation. The
/// derived ordering is lexicographic on part values.
#[derive(Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Default, Serialize, Deserialize)]
#[serde(try_from = "[i8; 6]", into = "[i8; 6]")]
pub struct Action([i8; PART_COUNT]);

impl Action {
    /// Everything stationary: the action every agent starts with.
    pub const IMMOBILE: Action = Action([0; PART_COUNT]);

    pub fn new(parts: [i8; PART_COUNT]) -> Result<Self> {
        if parts.iter().all(|p| (-1..=1).contains(p)) {
            Ok(Action(parts))
        } else {
            Err(EvocError::InvalidConfig(format!(
                "action parts must be -1, 0 or +1, got {parts:?}"
            )))
        }
    }

    pub fn parts(&self) -> [i8; PART_COUNT] {
        self.0
    }

    pub fn get(&self, part: Part) -> i8 {
        self.0[part.index()]
    }

    pub fn with(mut self, part: Part, value: i8) -> Self {
        debug_assert!((-1..=1).contains(&value));
        self.0[part.index()] = value;
        self
    }

    /// Base-3 index in `0..729`. Index order equals lexicographic order.
    pub fn index(&self) -> usize {
        self.0
            .iter()
            .fold(0usize, |acc, &p| acc * 3 + (p + 1) as usize)
    }

    pub fn from_index(index: usize) -> Option<Self> {
        if index >= ACTION_COUNT {
            return None;
        }
        let mut parts = [0i8; PART_COUNT];
        let mut rest = index;
        for slot in parts.iter_mut().rev() {
            *slot = (rest % 3) as i8 - 1;
            rest /= 3;
        }
        Some(Action(parts))
    }

    /// All 729 actions in lexicographic order.
    pub fn all() -> impl Iterator<Item = Action> {
        (0..ACTION_COUNT).filter_map(Action::from_index)
    }

    pub fn moving_parts(&self) -> usize {
        self.0.iter().filter(|&&p| p != 0).count()
    }
}

impl TryFrom<[i8; PART_COUNT]> for Action {
    type Error = EvocError;

    fn try_from(parts: [i8; PART_COUNT]) -> Result<Self> {
        Action::new(parts)
    }
}

impl From<Action> for [i8; PART_COUNT] {
    fn from(a: Action) -> Self {
        a.0
    }
}

impl fmt::Debug for Action {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "Action({self})")
    }
}

impl fmt::Display for Action {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for p in self.0 {
            let c = match p {
                -1 => '-',
                0 => '0',
                _ => '+',
            };
            write!(f, "{c}")?;
        }
        Ok(())
    }
}

/// Creativity settings of one agent.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct AgentParams {
    /// Probability of inventing (rather than imitating) on a given iteration.
    pub i: f64,
    /// Per-part probability of change when inventing.
    pub c: f64,
    pub operators_enabled: bool,
}

impl AgentParams {
    pub fn new(i: f64, c: f64, operators_enabled: bool) -> Result<Self> {
        let params = AgentParams {
            i,
            c,
            operators_enabled,
        };
        params.validate()?;
        Ok(params)
    }

    pub fn validate(&self) -> Result<()> {
        check_probability("i", self.i)?;
        check_probability("c", self.c)
    }
}

impl Default for AgentParams {
    fn default() -> Self {
        AgentParams {
            i: 0.5,
            c: 1.0 / 6.0,
            operators_enabled: true,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Role {
    Leader,
    Follower,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Neighborhood {
    #[default]
    Moore,
    VonNeumann,
}

impl Neighborhood {
    fn offsets(self) -> &'static [(isize, isize)] {
        match self {
            Neighborhood::Moore => &[
                (-1, -1),
                (-1, 0),
                (-1, 1),
                (0, -1),
                (0, 1),
                (1, -1),
                (1, 0),
                (1, 1),
            ],
            Neighborhood::VonNeumann => &[(-1, 0), (0, -1), (0, 1), (1, 0)],
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct AgentState {
    pub id: usize,
    pub position: (usize, usize),
    pub implemented: Action,
    /// Cached `fitness(implemented)`.
    pub implemented_fitness: FitnessScore,
    pub params: AgentParams,
    pub role: Role,
    pub operator_state: OperatorState,
    pub(crate) rng: ChaCha8Rng,
}

impl AgentState {
    pub fn is_leader(&self) -> bool {
        self.role == Role::Leader
    }

    pub(crate) fn adopt(&mut self, action: Action, fitness: FitnessScore) {
        debug_assert!(fitness > self.implemented_fitness);
        self.implemented = action;
        self.implemented_fitness = fitness;
        self.operator_state.update(&action);
    }
}

/// A fully populated toroidal grid: one agent per cell, row-major.
#[derive(Debug, Clone, PartialEq)]
pub struct World {
    width: usize,
    height: usize,
    neighborhood: Neighborhood,
    broadcasting: bool,
    pub(crate) agents: Vec<AgentState>,
    leader_id: Option<usize>,
    pub(crate) iteration: u64,
    rng: ChaCha8Rng,
    pub(crate) sources: Vec<Vec<usize>>,
    pub(crate) landscape: Arc<FitnessTable>,
}

/// Everything needed to populate a fresh world.
#[derive(Debug, Clone)]
pub struct WorldSpec {
    pub width: usize,
    pub height: usize,
    pub neighborhood: Neighborhood,
    pub broadcasting: bool,
    pub follower_params: AgentParams,
    pub leader_params: AgentParams,
    pub seed: u64,
}

impl World {
    /// Places immobile agents and, when broadcasting, picks a leader
    /// uniformly at random from the world's RNG stream.
    pub fn new(spec: &WorldSpec, landscape: Arc<FitnessTable>) -> Result<Self> {
        if spec.width == 0 || spec.height == 0 {
            return Err(EvocError::InvalidConfig(format!(
                "world must be at least 1x1, got {}x{}",
                spec.width, spec.height
            )));
        }
        spec.follower_params.validate()?;
        spec.leader_params.validate()?;

        let count = spec.width * spec.height;
        let mut rng = seed::world_rng(spec.seed);
        let leader_id = spec.broadcasting.then(|| rng.random_range(0..count));
        let start_fitness = landscape.fitness(&Action::IMMOBILE);

        let agents = (0..count)
            .map(|id| {
                let (role, params) = if Some(id) == leader_id {
                    (Role::Leader, spec.leader_params)
                } else {
                    (Role::Follower, spec.follower_params)
                };
                AgentState {
                    id,
                    position: (id / spec.width, id % spec.width),
                    implemented: Action::IMMOBILE,
                    implemented_fitness: start_fitness,
                    params,
                    role,
                    operator_state: OperatorState::new(params.operators_enabled),
                    rng: seed::agent_rng(spec.seed, id),
                }
            })
            .collect();

        let mut world = World {
            width: spec.width,
            height: spec.height,
            neighborhood: spec.neighborhood,
            broadcasting: spec.broadcasting,
            agents,
            leader_id,
            iteration: 0,
            rng,
            sources: Vec::new(),
            landscape,
        };
        world.sources = (0..count)
            .map(|id| world.compute_imitation_sources(id))
            .collect();
        Ok(world)
    }

    pub fn width(&self) -> usize {
        self.width
    }

    pub fn height(&self) -> usize {
        self.height
    }

    pub fn len(&self) -> usize {
        self.agents.len()
    }

    pub fn is_empty(&self) -> bool {
        self.agents.is_empty()
    }

    pub fn agents(&self) -> &[AgentState] {
        &self.agents
    }

    pub fn agent(&self, id: usize) -> Result<&AgentState> {
        self.agents.get(id).ok_or(EvocError::InvalidAgent {
            id,
            count: self.agents.len(),
        })
    }

    pub fn leader_id(&self) -> Option<usize> {
        self.leader_id
    }

    pub fn iteration(&self) -> u64 {
        self.iteration
    }

    pub fn broadcasting(&self) -> bool {
        self.broadcasting
    }

    pub fn neighborhood(&self) -> Neighborhood {
        self.neighborhood
    }

    pub fn landscape(&self) -> &FitnessTable {
        &self.landscape
    }

    /// The world-level RNG stream (leader selection).
    pub fn rng(&self) -> &ChaCha8Rng {
        &self.rng
    }

    /// Grid neighbours of `agent_id` under toroidal wrap, in row-major
    /// offset order, without self or duplicates.
    pub fn neighbors(&self, agent_id: usize) -> Result<Vec<usize>> {
        self.agent(agent_id)?;
        Ok(self.compute_neighbors(agent_id))
    }

    /// Agents whose implemented action `agent_id` may observe: its
    /// neighbours, plus the leader for followers when broadcasting.
    pub fn imitation_sources(&self, agent_id: usize) -> Result<&[usize]> {
        self.agent(agent_id)?;
        Ok(&self.sources[agent_id])
    }

    fn compute_neighbors(&self, agent_id: usize) -> Vec<usize> {
        let (h, w) = (self.height as isize, self.width as isize);
        let row = (agent_id / self.width) as isize;
        let col = (agent_id % self.width) as isize;
        let mut out = Vec::with_capacity(8);
        for &(dr, dc) in self.neighborhood.offsets() {
            let r = (row + dr).rem_euclid(h);
            let c = (col + dc).rem_euclid(w);
            let id = (r * w + c) as usize;
            // small grids wrap onto themselves
            if id != agent_id && !out.contains(&id) {
                out.push(id);
            }
        }
        out
    }

    fn compute_imitation_sources(&self, agent_id: usize) -> Vec<usize> {
        let mut out = self.compute_neighbors(agent_id);
        if let Some(leader) = self.leader_id {
            if leader != agent_id && !out.contains(&leader) {
                out.push(leader);
            }
        }
        out
    }
}
