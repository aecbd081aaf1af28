//! EASpace learning: macro bonus, transition fan-out, IMALR targets, ε-greedy
//! exploration, experience replay, and the SMDP / shaping baselines.

mod explore;
mod replay;
mod rules;
mod shaping;
mod tabular;

pub use explore::{argmax, epsilon_greedy, epsilon_greedy_index, epsilon_schedule};
pub use replay::ReplayBuffer;
pub use rules::{
    fanout, imalr_target, imalr_target_double, imalr_update_tabular, macro_bonus, smdp_target,
    smdp_update, SmdpAccumulator, SmdpTransition, Transition,
};
pub use shaping::shaping_advice_reward;
pub use tabular::{StepSize, TabularQ};

use crate::error::{Error, Result};

/// One regression sample `(state, flat action, target)`.
#[derive(Debug)]
pub struct FitSample<'a, S: ?Sized> {
    pub state: &'a S,
    pub action: usize,
    pub target: f64,
}

/// Action-value function over the flat enhanced action space.
pub trait QFunction<S: ?Sized> {
    fn num_actions(&self) -> usize;

    fn values(&self, state: &S) -> Vec<f64>;

    fn value(&self, state: &S, action: usize) -> f64 {
        self.values(state)[action]
    }

    fn max_value(&self, state: &S) -> f64 {
        self.values(state)
            .into_iter()
            .fold(f64::NEG_INFINITY, f64::max)
    }

    /// One update step on the batch. Returns the mean of `½(y − Q)²`
    /// measured before the step.
    fn fit(&mut self, batch: &[FitSample<'_, S>]) -> f64;

    /// Frozen copy used as the target network.
    fn snapshot(&self) -> Self
    where
        Self: Sized;
}

/// Training hyperparameters. [`Default`] gives the grid settings and
/// [`Hyperparams::pursuit`] the pursuit ones.
#[derive(Clone, Debug, PartialEq)]
pub struct Hyperparams {
    pub learning_rate: f64,
    pub gamma: f64,
    pub bonus_scale: f64,
    pub max_duration: u32,
    pub minibatch: usize,
    pub memory_size: usize,
    pub epsilon_start: f64,
    pub epsilon_final: f64,
    pub final_exploration_episode: u64,
    pub updates_per_episode: usize,
    pub target_sync_interval: u64,
    pub max_episode_steps: usize,
    pub max_episodes: u64,
    /// Potential of demonstrated pairs for the shaping baseline.
    pub shaping_potential: f64,
    pub double_q: bool,
}

impl Default for Hyperparams {
    fn default() -> Self {
        Self::grid()
    }
}

impl Hyperparams {
    pub fn grid() -> Self {
        Self {
            learning_rate: 7e-5,
            gamma: 0.99,
            bonus_scale: 0.01,
            max_duration: 10,
            minibatch: 128,
            memory_size: 1_000_000,
            epsilon_start: 1.0,
            epsilon_final: 0.05,
            final_exploration_episode: 4000,
            updates_per_episode: 300,
            target_sync_interval: 500,
            max_episode_steps: 300,
            max_episodes: 8000,
            shaping_potential: -0.05,
            double_q: false,
        }
    }

    pub fn pursuit() -> Self {
        Self {
            max_duration: 20,
            updates_per_episode: 1000,
            max_episode_steps: 1000,
            shaping_potential: -0.5,
            double_q: true,
            ..Self::grid()
        }
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.gamma > 0.0 && self.gamma < 1.0) {
            return Err(Error::invalid(format!("gamma must lie in (0,1), got {}", self.gamma)));
        }
        if !(self.learning_rate > 0.0) {
            return Err(Error::invalid("learning rate must be positive"));
        }
        if !(self.bonus_scale >= 0.0) {
            return Err(Error::invalid("bonus scale must be non-negative"));
        }
        if self.epsilon_final > self.epsilon_start {
            return Err(Error::invalid("epsilon_final exceeds epsilon_start"));
        }
        if !(0.0..=1.0).contains(&self.epsilon_start) || !(0.0..=1.0).contains(&self.epsilon_final)
        {
            return Err(Error::invalid("epsilon endpoints must lie in [0,1]"));
        }
        if self.max_duration == 0 || self.minibatch == 0 || self.memory_size == 0 {
            return Err(Error::invalid("max_duration, minibatch and memory_size must be positive"));
        }
        if self.target_sync_interval == 0 || self.final_exploration_episode == 0 {
            return Err(Error::invalid(
                "target_sync_interval and final_exploration_episode must be positive",
            ));
        }
        if self.max_episode_steps == 0 {
            return Err(Error::invalid("max_episode_steps must be positive"));
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn presets_validate() {
        Hyperparams::grid().validate().unwrap();
        Hyperparams::pursuit().validate().unwrap();
        assert_eq!(Hyperparams::pursuit().max_duration, 20);
        assert_eq!(Hyperparams::grid().target_sync_interval, 500);
    }

    #[test]
    fn bad_hyperparams_rejected() {
        let bad = [
            Hyperparams { gamma: 1.0, ..Hyperparams::grid() },
            Hyperparams { gamma: 0.0, ..Hyperparams::grid() },
            Hyperparams { learning_rate: 0.0, ..Hyperparams::grid() },
            Hyperparams { epsilon_final: 1.0, epsilon_start: 0.5, ..Hyperparams::grid() },
            Hyperparams { bonus_scale: -0.1, ..Hyperparams::grid() },
        ];
        for hp in bad {
            assert!(hp.validate().is_err(), "{hp:?}");
        }
    }
}
