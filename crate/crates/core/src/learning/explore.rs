use rand::Rng;

use super::{Hyperparams, QFunction};
use crate::space::{EnhancedAction, EnhancedActionSpace};

/// Index of the largest value; ties go to the lowest index.
pub fn argmax(values: &[f64]) -> usize {
    let mut best = 0;
    for (k, &v) in values.iter().enumerate().skip(1) {
        if v > values[best] {
            best = k;
        }
    }
    best
}

/// Draws one uniform number; below `epsilon` a second draw picks an action
/// uniformly, otherwise the greedy index is returned.
pub fn epsilon_greedy_index<R: Rng + ?Sized>(values: &[f64], epsilon: f64, rng: &mut R) -> usize {
    let u: f64 = rng.random();
    if u < epsilon {
        rng.random_range(0..values.len())
    } else {
        argmax(values)
    }
}

pub fn epsilon_greedy<S: ?Sized, Q: QFunction<S>, R: Rng + ?Sized>(
    q: &Q,
    state: &S,
    space: &EnhancedActionSpace,
    epsilon: f64,
    rng: &mut R,
) -> EnhancedAction {
    let values = q.values(state);
    let k = epsilon_greedy_index(&values, epsilon, rng);
    space.action(k).expect("q output width matches the space")
}

/// Linear decay from `epsilon_start` at episode 1 to `epsilon_final` at
/// `final_exploration_episode`, flat afterwards.
pub fn epsilon_schedule(episode: u64, hp: &Hyperparams) -> f64 {
    let last = hp.final_exploration_episode;
    if episode <= 1 || last <= 1 {
        return if episode >= last { hp.epsilon_final } else { hp.epsilon_start };
    }
    if episode >= last {
        return hp.epsilon_final;
    }
    let frac = (episode - 1) as f64 / (last - 1) as f64;
    hp.epsilon_start + frac * (hp.epsilon_final - hp.epsilon_start)
}
