//! Knowledge-based operators and invention.
//!
//! Each agent keeps two running estimates built from the actions it has
//! learned: how often successful actions move paired limbs in the same
//! direction, and how much they move at all. Invention picks the new value
//! of a changed part with weights tilted by those estimates. With the
//! operators off both estimates stay at zero and invention is uniform.

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::fitness::{movement_fraction, symmetry_fraction};
use crate::model::{Action, Part};

pub const DEFAULT_LEARNING_RATE: f64 = 0.1;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct OperatorState {
    /// Estimated benefit of same-direction limb movement, in [0, 1].
    pub sym_estimate: f64,
    /// Estimated benefit of movement, in [0, 1].
    pub mov_estimate: f64,
    pub learning_rate: f64,
    pub enabled: bool,
}

impl OperatorState {
    pub fn new(enabled: bool) -> Self {
        Self::with_learning_rate(enabled, DEFAULT_LEARNING_RATE)
    }

    pub fn with_learning_rate(enabled: bool, learning_rate: f64) -> Self {
        assert!(
            learning_rate > 0.0 && learning_rate <= 1.0,
            "learning rate must lie in (0, 1]"
        );
        OperatorState {
            sym_estimate: 0.0,
            mov_estimate: 0.0,
            learning_rate,
            enabled,
        }
    }

    /// Folds a newly learned action into the estimates.
    pub fn update(&mut self, adopted: &Action) {
        if !self.enabled {
            return;
        }
        let a = self.learning_rate;
        self.sym_estimate = ((1.0 - a) * self.sym_estimate + a * symmetry_fraction(adopted)).clamp(0.0, 1.0);
        self.mov_estimate = ((1.0 - a) * self.mov_estimate + a * movement_fraction(adopted)).clamp(0.0, 1.0);
    }
}

pub fn update_operators(state: OperatorState, adopted: &Action) -> OperatorState {
    let mut next = state;
    next.update(adopted);
    next
}

/// Unnormalised weight of moving `part` to `value` given the current idea.
fn weight(current: &Action, part: Part, value: i8, state: &OperatorState) -> f64 {
    let mut w = 1.0;
    if value != 0 {
        w *= 1.0 + state.mov_estimate;
    }
    if let Some(partner) = part.partner() {
        let d = current.get(partner);
        if d != 0 && value == d {
            w *= 1.0 + state.sym_estimate;
        }
    }
    w
}

/// Proposes a new idea derived from `current`.
///
/// Each part independently changes with probability `c`; a changed part
/// always takes one of its two other values. Two uniform draws are consumed
/// per part whether or not it changes, so the RNG stream advances by the
/// same amount for every `c`.
pub fn invent<R: Rng + ?Sized>(current: &Action, c: f64, state: &OperatorState, rng: &mut R) -> Action {
    let mut next = *current;
    for part in Part::ALL {
        let change: f64 = rng.random();
        let pick: f64 = rng.random();
        if change >= c {
            continue;
        }
        let now = current.get(part);
        let (a, b) = match now {
            -1 => (0, 1),
            0 => (-1, 1),
            _ => (-1, 0),
        };
        let wa = weight(current, part, a, state);
        let wb = weight(current, part, b, state);
        let value = if pick * (wa + wb) < wa { a } else { b };
        next = next.with(part, value);
    }
    next
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::seed::agent_rng;

    fn act(p: [i8; 6]) -> Action {
        Action::new(p).unwrap()
    }

    #[test]
    fn ema_step() {
        let s = OperatorState::new(true);
        let next = update_operators(s, &act([1, 1, 0, 0, 0, 0]));
        assert!((next.sym_estimate - 0.1).abs() < 1e-15);
        assert!((next.mov_estimate - 0.1 * 2.0 / 6.0).abs() < 1e-15);
    }

    #[test]
    fn disabled_state_never_moves() {
        let s = OperatorState::new(false);
        let next = update_operators(s, &act([1, 1, -1, -1, 1, 0]));
        assert_eq!(next, s);
    }

    #[test]
    fn ema_converges_to_one_like_closed_form() {
        let symmetric = act([1, 1, 0, 0, 0, 0]);
        let mut s = OperatorState::new(true);
        let mut prev = 0.0;
        for n in 1..=100 {
            s.update(&symmetric);
            let closed = 1.0 - 0.9f64.powi(n);
            assert!((s.sym_estimate - closed).abs() < 1e-12, "step {n}");
            assert!(s.sym_estimate > prev && s.sym_estimate <= 1.0);
            prev = s.sym_estimate;
        }
    }

    #[test]
    fn zero_rate_is_identity() {
        let mut rng = agent_rng(1, 0);
        let s = OperatorState::new(true);
        for a in Action::all().step_by(7) {
            assert_eq!(invent(&a, 0.0, &s, &mut rng), a);
        }
    }

    #[test]
    fn full_rate_changes_every_part() {
        let mut rng = agent_rng(2, 0);
        let s = OperatorState::new(false);
        for a in Action::all().step_by(5) {
            let b = invent(&a, 1.0, &s, &mut rng);
            for p in Part::ALL {
                assert_ne!(a.get(p), b.get(p));
            }
        }
    }

    #[test]
    fn full_rate_from_immobile_is_uniform_signs() {
        let mut rng = agent_rng(3, 0);
        let s = OperatorState::new(false);
        let n = 100_000;
        let mut ups = [0u32; 6];
        for _ in 0..n {
            let b = invent(&Action::IMMOBILE, 1.0, &s, &mut rng);
            for (k, v) in b.parts().iter().enumerate() {
                assert_ne!(*v, 0);
                if *v == 1 {
                    ups[k] += 1;
                }
            }
        }
        for u in ups {
            let p = f64::from(u) / n as f64;
            assert!((p - 0.5).abs() < 0.01, "{p}");
        }
    }

    #[test]
    fn movement_bias_matches_weights() {
        // part currently +1: -1 has weight 1 + m = 2, 0 has weight 1.
        let s = OperatorState {
            sym_estimate: 0.0,
            mov_estimate: 1.0,
            learning_rate: 0.1,
            enabled: true,
        };
        let current = act([0, 0, 0, 0, 1, 0]);
        let mut rng = agent_rng(4, 0);
        let n = 100_000u32;
        let mut down = 0u32;
        for _ in 0..n {
            if invent(&current, 1.0, &s, &mut rng).get(Part::Head) == -1 {
                down += 1;
            }
        }
        let expected = [f64::from(n) * 2.0 / 3.0, f64::from(n) / 3.0];
        let observed = [f64::from(down), f64::from(n - down)];
        let chi2: f64 = observed
            .iter()
            .zip(expected)
            .map(|(o, e)| (o - e).powi(2) / e)
            .sum();
        // 1 dof, p = 0.001
        assert!(chi2 < 10.83, "chi2 = {chi2}");
    }

    #[test]
    fn symmetry_bias_prefers_partner_direction() {
        let s = OperatorState {
            sym_estimate: 1.0,
            mov_estimate: 0.0,
            learning_rate: 0.1,
            enabled: true,
        };
        // left arm at 0, right arm up: candidates -1 (w=1) and +1 (w=2)
        let current = act([0, 1, 0, 0, 0, 0]);
        let mut rng = agent_rng(5, 0);
        let n = 60_000u32;
        let mut same = 0u32;
        for _ in 0..n {
            if invent(&current, 1.0, &s, &mut rng).get(Part::LeftArm) == 1 {
                same += 1;
            }
        }
        let p = f64::from(same) / f64::from(n);
        assert!((p - 2.0 / 3.0).abs() < 0.01, "{p}");
    }

    #[test]
    fn mean_changed_parts_at_one_sixth() {
        let mut rng = agent_rng(6, 0);
        let s = OperatorState::new(false);
        let n = 100_000;
        let changed: usize = (0..n)
            .map(|_| {
                let b = invent(&Action::IMMOBILE, 1.0 / 6.0, &s, &mut rng);
                b.moving_parts()
            })
            .sum();
        let mean = changed as f64 / n as f64;
        assert!((mean - 1.0).abs() <= 0.02, "{mean}");
    }

    #[test]
    fn changed_part_counts_are_binomial() {
        // chi-square against Binomial(6, c), merging sparse tail cells
        for (seed, c) in [(7u64, 1.0 / 6.0), (8, 0.5)] {
            let mut rng = agent_rng(seed, 0);
            let s = OperatorState::new(false);
            let n = 100_000usize;
            let mut counts = [0f64; 7];
            let base = act([1, -1, 0, 1, 0, -1]);
            for _ in 0..n {
                let b = invent(&base, c, &s, &mut rng);
                let k = Part::ALL.iter().filter(|&&p| b.get(p) != base.get(p)).count();
                counts[k] += 1.0;
            }
            let binom = |k: i32| -> f64 {
                let choose = [1.0, 6.0, 15.0, 20.0, 15.0, 6.0, 1.0][k as usize];
                choose * c.powi(k) * (1.0 - c).powi(6 - k)
            };
            let mut chi2 = 0.0;
            let mut cells = 0;
            let (mut o_tail, mut e_tail) = (0.0, 0.0);
            for k in 0..7 {
                let e = binom(k) * n as f64;
                if e < 50.0 {
                    o_tail += counts[k as usize];
                    e_tail += e;
                    continue;
                }
                chi2 += (counts[k as usize] - e).powi(2) / e;
                cells += 1;
            }
            if e_tail > 0.0 {
                chi2 += (o_tail - e_tail).powi(2) / e_tail;
                cells += 1;
            }
            // p = 0.001 critical values for 5 and 6 dof
            let critical = if cells - 1 == 6 { 22.46 } else { 20.52 };
            assert!(chi2 < critical, "c = {c}: chi2 = {chi2} over {cells} cells");
        }
    }

    mod props {
        use super::*;
        use proptest::prelude::*;

        proptest! {
            #[test]
            fn estimates_stay_in_unit_interval(
                seq in proptest::collection::vec(0usize..729, 0..200),
                rate in 0.01f64..=1.0,
            ) {
                let mut s = OperatorState::with_learning_rate(true, rate);
                for idx in seq {
                    s.update(&Action::from_index(idx).unwrap());
                    prop_assert!((0.0..=1.0).contains(&s.sym_estimate));
                    prop_assert!((0.0..=1.0).contains(&s.mov_estimate));
                }
            }

            #[test]
            fn invent_stays_in_domain(
                idx in 0usize..729, c in 0.0f64..=1.0, seed in any::<u64>(),
                sym in 0.0f64..=1.0, mov in 0.0f64..=1.0,
            ) {
                let s = OperatorState { sym_estimate: sym, mov_estimate: mov, learning_rate: 0.1, enabled: true };
                let mut rng = agent_rng(seed, 0);
                let b = invent(&Action::from_index(idx).unwrap(), c, &s, &mut rng);
                prop_assert!(b.parts().iter().all(|p| (-1..=1).contains(p)));
                prop_assert!(b.index() < 729);
            }

            #[test]
            fn uniform_invention_is_label_invariant(seed in any::<u64>()) {
                // with operators off, each part's draw depends only on its own
                // value: permuting the input permutes the output distribution.
                let s = OperatorState::new(false);
                let mut rng = agent_rng(seed, 0);
                let n = 2000;
                let mut moved = [0u32; 6];
                let base = Action::IMMOBILE;
                for _ in 0..n {
                    let b = invent(&base, 0.5, &s, &mut rng);
                    for (k, v) in b.parts().iter().enumerate() {
                        if *v == 1 { moved[k] += 1; }
                    }
                }
                for m in moved {
                    let p = f64::from(m) / n as f64;
                    prop_assert!((p - 0.25).abs() < 0.06, "{}", p);
                }
            }
        }
    }
}
