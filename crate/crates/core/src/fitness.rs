//! The fitness landscape over the 729 actions.
//!
//! The default landscape is epistatic: an arm or leg is worth most when its
//! partner moves in the same direction, so the value of changing one limb
//! depends on the other. Moving the head and keeping the hips still are
//! rewarded independently. Exactly eight actions reach the maximum of 14.

use std::sync::{Arc, OnceLock};

use serde::{Deserialize, Serialize};

use crate::model::{Action, Part, ACTION_COUNT};

/// Dimensionless fitness of an action.
#[derive(Debug, Clone, Copy, PartialEq, PartialOrd, Default, Serialize, Deserialize)]
#[serde(transparent)]
pub struct FitnessScore(f64);

impl FitnessScore {
    pub fn new(value: f64) -> Self {
        debug_assert!(value.is_finite() && value >= 0.0);
        FitnessScore(value)
    }

    pub fn value(self) -> f64 {
        self.0
    }
}

/// A scoring rule for actions.
pub trait Landscape {
    fn name(&self) -> &str;
    fn evaluate(&self, action: &Action) -> FitnessScore;
}

/// Limb-pair epistasis plus head-movement and still-hips rewards.
#[derive(Debug, Clone, Copy, Default)]
pub struct EpistaticLandscape;

impl EpistaticLandscape {
    pub const MAX: f64 = 14.0;

    fn pair(x: i8, y: i8) -> u32 {
        match (x, y) {
            (0, 0) => 0,
            (0, _) | (_, 0) => 2,
            _ if x == y => 5,
            _ => 1,
        }
    }
}

impl Landscape for EpistaticLandscape {
    fn name(&self) -> &str {
        "epistatic"
    }

    fn evaluate(&self, a: &Action) -> FitnessScore {
        let arms = Self::pair(a.get(Part::LeftArm), a.get(Part::RightArm));
        let legs = Self::pair(a.get(Part::LeftLeg), a.get(Part::RightLeg));
        let head = 2 * a.get(Part::Head).unsigned_abs() as u32;
        let hips = 2 * (1 - a.get(Part::Hips).unsigned_abs() as u32);
        FitnessScore((arms + legs + head + hips) as f64)
    }
}

/// Pre-evaluated landscape, indexed by [`Action::index`].
#[derive(Clone, PartialEq)]
pub struct FitnessTable {
    name: String,
    values: Box<[FitnessScore; ACTION_COUNT]>,
    max: FitnessScore,
}

impl FitnessTable {
    pub fn from_landscape<L: Landscape + ?Sized>(landscape: &L) -> Self {
        let mut values = Box::new([FitnessScore::default(); ACTION_COUNT]);
        for a in Action::all() {
            values[a.index()] = landscape.evaluate(&a);
        }
        let max = values
            .iter()
            .copied()
            .fold(FitnessScore(0.0), |m, v| if v > m { v } else { m });
        FitnessTable {
            name: landscape.name().to_owned(),
            values,
            max,
        }
    }

    /// Shared table for [`EpistaticLandscape`].
    pub fn shared_default() -> Arc<FitnessTable> {
        static DEFAULT: OnceLock<Arc<FitnessTable>> = OnceLock::new();
        DEFAULT
            .get_or_init(|| Arc::new(FitnessTable::from_landscape(&EpistaticLandscape)))
            .clone()
    }

    pub fn name(&self) -> &str {
        &self.name
    }

    pub fn fitness(&self, action: &Action) -> FitnessScore {
        self.values[action.index()]
    }

    pub fn max(&self) -> FitnessScore {
        self.max
    }

    /// All actions with their fitness, best first; ties in lexicographic
    /// action order.
    pub fn enumerate(&self) -> Vec<(Action, FitnessScore)> {
        let mut all: Vec<_> = Action::all().map(|a| (a, self.fitness(&a))).collect();
        all.sort_by(|(a, fa), (b, fb)| fb.0.total_cmp(&fa.0).then_with(|| a.cmp(b)));
        all
    }

    pub fn optima(&self) -> Vec<Action> {
        Action::all()
            .filter(|a| self.fitness(a) == self.max)
            .collect()
    }
}

impl std::fmt::Debug for FitnessTable {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("FitnessTable")
            .field("name", &self.name)
            .field("max", &self.max)
            .finish_non_exhaustive()
    }
}

pub fn evaluate(action: &Action) -> FitnessScore {
    EpistaticLandscape.evaluate(action)
}

/// The default landscape, best first.
pub fn enumerate_landscape() -> Vec<(Action, FitnessScore)> {
    FitnessTable::shared_default().enumerate()
}

/// Of the limb pairs with at least one moving limb, the fraction whose two
/// limbs move in the same direction. Zero when no limb moves.
pub fn symmetry_fraction(action: &Action) -> f64 {
    let pairs = [
        (action.get(Part::LeftArm), action.get(Part::RightArm)),
        (action.get(Part::LeftLeg), action.get(Part::RightLeg)),
    ];
    let (active, same) = pairs
        .iter()
        .filter(|(x, y)| *x != 0 || *y != 0)
        .fold((0u32, 0u32), |(n, s), (x, y)| (n + 1, s + u32::from(x == y)));
    if active == 0 {
        0.0
    } else {
        f64::from(same) / f64::from(active)
    }
}

/// Fraction of the six parts that move.
pub fn movement_fraction(action: &Action) -> f64 {
    action.moving_parts() as f64 / 6.0
}
