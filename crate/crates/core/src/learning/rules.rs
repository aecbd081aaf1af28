use super::{argmax, FitSample, QFunction, TabularQ};
use crate::error::{Error, Result};
use crate::space::{EnhancedAction, EnhancedActionSpace};

/// One stored experience `(s, m^i(τ), r_total, s')`.
#[derive(Clone, Debug, PartialEq)]
pub struct Transition<S> {
    pub state: S,
    pub action: EnhancedAction,
    /// Task reward plus macro bonus.
    pub reward: f64,
    pub next_state: S,
    pub terminal: bool,
}

/// `r + c·(τ − 1)`: longer macros earn a larger intrinsic reward.
pub fn macro_bonus(reward: f64, c: f64, duration: u32) -> f64 {
    reward + c * (duration as f64 - 1.0)
}

/// Expands one executed timestep into the transitions it certifies.
///
/// A step taken while following expert `i` is valid experience for every
/// `m^i(τ_j)`, `τ_j = 1..=τ0`, because the expert's choice depends on the
/// state alone. A primitive step yields exactly one transition.
pub fn fanout<S: Clone>(
    state: &S,
    executed: EnhancedAction,
    reward: f64,
    next_state: &S,
    terminal: bool,
    c: f64,
    space: &EnhancedActionSpace,
) -> Vec<Transition<S>> {
    let make = |action: EnhancedAction| Transition {
        state: state.clone(),
        action,
        reward: macro_bonus(reward, c, action.duration()),
        next_state: next_state.clone(),
        terminal,
    };
    if executed.is_primitive() {
        vec![make(executed)]
    } else {
        (1..=space.max_duration())
            .map(|tau| make(executed.with_duration(tau)))
            .collect()
    }
}

/// IMALR TD target.
///
/// `r` at episode end; `r + γ·max_m Q⁻(s', m)` for `τ = 1`;
/// `r + γ·Q⁻(s', m^i(τ−1))` for `τ > 1`.
pub fn imalr_target<S, Q: QFunction<S>>(
    t: &Transition<S>,
    target_q: &Q,
    gamma: f64,
    space: &EnhancedActionSpace,
) -> Result<f64> {
    if t.terminal {
        return Ok(t.reward);
    }
    let tau = t.action.duration();
    if tau == 1 {
        Ok(t.reward + gamma * target_q.max_value(&t.next_state))
    } else {
        let shorter = space.flat_index(t.action.with_duration(tau - 1))?;
        Ok(t.reward + gamma * target_q.value(&t.next_state, shorter))
    }
}

/// Double-Q flavour: for `τ = 1` the live network picks the action and the
/// target network evaluates it. The `τ > 1` branch has nothing to select.
pub fn imalr_target_double<S, Q: QFunction<S>>(
    t: &Transition<S>,
    live_q: &Q,
    target_q: &Q,
    gamma: f64,
    space: &EnhancedActionSpace,
) -> Result<f64> {
    if t.terminal || t.action.duration() > 1 {
        return imalr_target(t, target_q, gamma, space);
    }
    let best = argmax(&live_q.values(&t.next_state));
    Ok(t.reward + gamma * target_q.value(&t.next_state, best))
}

/// Tabular IMALR step that bootstraps from the table itself.
pub fn imalr_update_tabular(
    q: &mut TabularQ,
    t: &Transition<usize>,
    gamma: f64,
    space: &EnhancedActionSpace,
) -> Result<f64> {
    let y = imalr_target(t, &*q, gamma, space)?;
    let a = space.flat_index(t.action)?;
    Ok(q.update(t.state, a, y))
}

/// A completed macro as seen by SMDP Q-learning.
#[derive(Clone, Debug, PartialEq)]
pub struct SmdpTransition<S> {
    pub state: S,
    pub action: EnhancedAction,
    /// `Σ_{j<k} γ^j r_{t+j}`.
    pub reward: f64,
    /// Elapsed timesteps `k`.
    pub steps: u32,
    pub next_state: S,
    pub terminal: bool,
}

/// `R + γ^k·max_m Q(s_{t+k}, m)`, or `R` if the macro ended the episode.
pub fn smdp_target<S, Q: QFunction<S>>(t: &SmdpTransition<S>, q: &Q, gamma: f64) -> Result<f64> {
    if t.steps < 1 {
        return Err(Error::invalid("an SMDP transition spans at least one step"));
    }
    if t.terminal {
        return Ok(t.reward);
    }
    Ok(t.reward + gamma.powi(t.steps as i32) * q.max_value(&t.next_state))
}

/// One SMDP Q-learning update bootstrapping from `q` itself.
pub fn smdp_update<S, Q: QFunction<S>>(
    q: &mut Q,
    t: &SmdpTransition<S>,
    gamma: f64,
    space: &EnhancedActionSpace,
) -> Result<f64> {
    let y = smdp_target(t, &*q, gamma)?;
    let a = space.flat_index(t.action)?;
    Ok(q.fit(&[FitSample {
        state: &t.state,
        action: a,
        target: y,
    }]))
}

/// Accumulates discounted reward while one macro runs.
#[derive(Clone, Debug)]
pub struct SmdpAccumulator<S> {
    state: S,
    action: EnhancedAction,
    reward: f64,
    discount: f64,
    steps: u32,
    gamma: f64,
}

impl<S> SmdpAccumulator<S> {
    pub fn start(state: S, action: EnhancedAction, gamma: f64) -> Self {
        Self {
            state,
            action,
            reward: 0.0,
            discount: 1.0,
            steps: 0,
            gamma,
        }
    }

    pub fn action(&self) -> EnhancedAction {
        self.action
    }

    pub fn push(&mut self, reward: f64) {
        self.reward += self.discount * reward;
        self.discount *= self.gamma;
        self.steps += 1;
    }

    pub fn finish(self, next_state: S, terminal: bool) -> SmdpTransition<S> {
        SmdpTransition {
            state: self.state,
            action: self.action,
            reward: self.reward,
            steps: self.steps,
            next_state,
            terminal,
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::learning::StepSize;

    fn space() -> EnhancedActionSpace {
        EnhancedActionSpace::build(4, 2, 10).unwrap()
    }

    #[test]
    fn bonus_examples() {
        assert!((macro_bonus(1.0, 0.01, 10) - 1.09).abs() < 1e-12);
        assert_eq!(macro_bonus(-5.0, 0.01, 1), -5.0);
        assert_eq!(macro_bonus(0.0, 0.0, 20), 0.0);
    }

    #[test]
    fn fanout_for_expert_and_primitive() {
        let sp = space();
        let m = EnhancedAction::new(2, 3).unwrap();
        let ts = fanout(&0usize, m, 1.5, &1usize, false, 0.01, &sp);
        assert_eq!(ts.len(), 10);
        for (j, t) in ts.iter().enumerate() {
            assert_eq!(t.action, EnhancedAction::new(2, j as u32 + 1).unwrap());
            assert!((t.reward - (1.5 + 0.01 * j as f64)).abs() < 1e-12);
        }
        let ts = fanout(&0usize, EnhancedAction::primitive(0), 1.5, &1usize, false, 0.01, &sp);
        assert_eq!(ts.len(), 1);
        assert_eq!(ts[0].reward, 1.5);

        let sp4 = EnhancedActionSpace::build(4, 1, 4).unwrap();
        let ts = fanout(&0usize, EnhancedAction::new(1, 2).unwrap(), 0.7, &1usize, true, 0.0, &sp4);
        assert_eq!(ts.len(), 4);
        assert!(ts.iter().all(|t| t.reward == 0.7 && t.terminal));
    }

    fn table_with(sp: &EnhancedActionSpace, next: usize, fill: impl Fn(usize) -> f64) -> TabularQ {
        let mut q = TabularQ::new(2, sp.len(), StepSize::Constant(1.0));
        for a in 0..sp.len() {
            q.set(next, a, fill(a));
        }
        q
    }

    #[test]
    fn target_one_step_uses_max() {
        let sp = space();
        let q = table_with(&sp, 1, |a| if a == 7 { 10.0 } else { 1.0 });
        let t = Transition {
            state: 0usize,
            action: EnhancedAction::new(1, 1).unwrap(),
            reward: 0.0,
            next_state: 1usize,
            terminal: false,
        };
        assert!((imalr_target(&t, &q, 0.99, &sp).unwrap() - 9.9).abs() < 1e-12);
    }

    #[test]
    fn target_multi_step_uses_shorter_macro() {
        let sp = space();
        let m4 = sp.flat_index(EnhancedAction::new(1, 4).unwrap()).unwrap();
        let q = table_with(&sp, 1, |a| if a == m4 { 2.0 } else { 100.0 });
        let t = Transition {
            state: 0usize,
            action: EnhancedAction::new(1, 5).unwrap(),
            reward: 1.0,
            next_state: 1usize,
            terminal: false,
        };
        assert!((imalr_target(&t, &q, 0.99, &sp).unwrap() - 2.98).abs() < 1e-12);
    }

    #[test]
    fn terminal_target_is_reward() {
        let sp = space();
        let q = table_with(&sp, 1, |_| 123.0);
        let t = Transition {
            state: 0usize,
            action: EnhancedAction::new(2, 6).unwrap(),
            reward: 50.0,
            next_state: 1usize,
            terminal: true,
        };
        assert_eq!(imalr_target(&t, &q, 0.99, &sp).unwrap(), 50.0);
    }

    #[test]
    fn double_q_selects_with_live() {
        let sp = EnhancedActionSpace::build(3, 0, 1).unwrap();
        let live = table_with(&sp, 1, |a| [0.0, 5.0, 1.0][a]);
        let target = table_with(&sp, 1, |a| [9.0, 2.0, 3.0][a]);
        let t = Transition {
            state: 0usize,
            action: EnhancedAction::primitive(0),
            reward: 1.0,
            next_state: 1usize,
            terminal: false,
        };
        let y = imalr_target_double(&t, &live, &target, 0.5, &sp).unwrap();
        assert_eq!(y, 1.0 + 0.5 * 2.0);
    }

    #[test]
    fn smdp_targets() {
        let sp = space();
        let q = table_with(&sp, 1, |a| if a == 3 { 4.0 } else { 0.0 });
        // k = 1 agrees with the IMALR one-step target
        let m = EnhancedAction::new(1, 1).unwrap();
        let s1 = SmdpTransition {
            state: 0usize,
            action: m,
            reward: 0.5,
            steps: 1,
            next_state: 1usize,
            terminal: false,
        };
        let t1 = Transition {
            state: 0usize,
            action: m,
            reward: 0.5,
            next_state: 1usize,
            terminal: false,
        };
        assert_eq!(smdp_target(&s1, &q, 0.9).unwrap(), imalr_target(&t1, &q, 0.9, &sp).unwrap());

        let zero = table_with(&sp, 1, |_| 0.0);
        let mut acc = SmdpAccumulator::start(0usize, EnhancedAction::new(1, 3).unwrap(), 1.0);
        for _ in 0..3 {
            acc.push(1.0);
        }
        let t = acc.finish(1usize, false);
        assert_eq!(t.steps, 3);
        assert_eq!(smdp_target(&t, &zero, 1.0).unwrap(), 3.0);

        let bad = SmdpTransition { steps: 0, ..t };
        assert!(matches!(smdp_target(&bad, &zero, 1.0), Err(Error::InvalidArgument(_))));
    }

    #[test]
    fn accumulator_discounts() {
        let mut acc = SmdpAccumulator::start((), EnhancedAction::primitive(0), 0.5);
        acc.push(1.0);
        acc.push(2.0);
        acc.push(4.0);
        let t = acc.finish((), false);
        assert_eq!(t.reward, 1.0 + 0.5 * 2.0 + 0.25 * 4.0);
    }

    #[test]
    fn tabular_update_moves_single_entry() {
        let sp = EnhancedActionSpace::build(2, 1, 3).unwrap();
        let mut q = TabularQ::new(2, sp.len(), StepSize::Constant(0.5));
        q.set(1, 0, 10.0);
        let t = Transition {
            state: 0usize,
            action: EnhancedAction::new(1, 1).unwrap(),
            reward: 0.0,
            next_state: 1usize,
            terminal: false,
        };
        imalr_update_tabular(&mut q, &t, 1.0 - 1e-9, &sp).unwrap();
        let a = sp.flat_index(t.action).unwrap();
        assert!((q.get(0, a) - 5.0).abs() < 1e-6);
        let changed = (0..sp.len()).filter(|&k| q.get(0, k) != 0.0).count();
        assert_eq!(changed, 1);
    }
}
