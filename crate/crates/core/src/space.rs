//! Enhanced action spaces and macro execution.
//!
//! Every expert policy `i ≥ 1` contributes `max_duration` macro actions
//! `m^i(1) ..= m^i(τ0)`; primitive action `k` is the one-step macro
//! `m^{-(k+1)}(1)`. All of them live side by side in one flat space:
//!
//! ```text
//! [ prim 0 .. prim |A|-1 | m^1(1) .. m^1(τ0) | m^2(1) .. m^2(τ0) | ... ]
//! ```

use std::fmt;

use crate::error::{Error, Result};

/// A duration-indexed macro action `m^i(τ)`.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct EnhancedAction {
    expert: i32,
    duration: u32,
}

impl EnhancedAction {
    /// Validating constructor using the signed expert index convention.
    pub fn new(expert_index: i32, duration: u32) -> Result<Self> {
        if expert_index == 0 {
            return Err(Error::invalid("expert index 0 is not an action"));
        }
        if duration == 0 {
            return Err(Error::invalid("macro duration must be at least 1"));
        }
        if expert_index < 0 && duration != 1 {
            return Err(Error::invalid(format!(
                "primitive m^{expert_index} must have duration 1, got {duration}"
            )));
        }
        Ok(Self {
            expert: expert_index,
            duration,
        })
    }

    /// Primitive action with 0-based index `k`, i.e. `m^{-(k+1)}(1)`.
    pub fn primitive(k: usize) -> Self {
        Self {
            expert: -(k as i32) - 1,
            duration: 1,
        }
    }

    /// Macro following expert `expert` (1-based) for `duration` steps.
    pub fn expert_macro(expert: usize, duration: u32) -> Result<Self> {
        Self::new(expert as i32, duration)
    }

    pub fn expert_index(&self) -> i32 {
        self.expert
    }

    pub fn duration(&self) -> u32 {
        self.duration
    }

    pub fn is_primitive(&self) -> bool {
        self.expert < 0
    }

    pub fn primitive_index(&self) -> Option<usize> {
        (self.expert < 0).then(|| (-self.expert - 1) as usize)
    }

    /// 1-based expert number, `None` for primitives.
    pub fn expert(&self) -> Option<usize> {
        (self.expert > 0).then_some(self.expert as usize)
    }

    /// Same expert, different duration. Primitives are returned unchanged.
    pub fn with_duration(self, duration: u32) -> Self {
        if self.is_primitive() {
            self
        } else {
            Self {
                expert: self.expert,
                duration: duration.max(1),
            }
        }
    }
}

impl fmt::Display for EnhancedAction {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "m^{}({})", self.expert, self.duration)
    }
}

/// The flat enhanced action space `A ∪ {m^i(τ)}`.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct EnhancedActionSpace {
    num_primitives: usize,
    num_experts: usize,
    max_duration: u32,
}

impl EnhancedActionSpace {
    pub fn build(num_primitives: usize, num_experts: usize, max_duration: u32) -> Result<Self> {
        if num_primitives == 0 {
            return Err(Error::invalid("an action space needs at least one primitive"));
        }
        if max_duration == 0 {
            return Err(Error::invalid("max duration must be at least 1"));
        }
        Ok(Self {
            num_primitives,
            num_experts,
            max_duration,
        })
    }

    pub fn num_primitives(&self) -> usize {
        self.num_primitives
    }

    pub fn num_experts(&self) -> usize {
        self.num_experts
    }

    pub fn max_duration(&self) -> u32 {
        self.max_duration
    }

    pub fn len(&self) -> usize {
        self.num_primitives + self.num_experts * self.max_duration as usize
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn contains(&self, m: EnhancedAction) -> bool {
        match m.primitive_index() {
            Some(k) => k < self.num_primitives,
            None => {
                let i = m.expert_index() as usize;
                i <= self.num_experts && m.duration() <= self.max_duration
            }
        }
    }

    pub fn flat_index(&self, m: EnhancedAction) -> Result<usize> {
        if !self.contains(m) {
            return Err(Error::invalid(format!("{m} is outside {self}")));
        }
        Ok(match m.primitive_index() {
            Some(k) => k,
            None => {
                let i = m.expert_index() as usize;
                self.num_primitives
                    + (i - 1) * self.max_duration as usize
                    + (m.duration() as usize - 1)
            }
        })
    }

    /// Inverse of [`flat_index`](Self::flat_index).
    pub fn action(&self, index: usize) -> Result<EnhancedAction> {
        if index >= self.len() {
            return Err(Error::invalid(format!(
                "flat index {index} out of range for {self}"
            )));
        }
        if index < self.num_primitives {
            return Ok(EnhancedAction::primitive(index));
        }
        let rest = index - self.num_primitives;
        let tau0 = self.max_duration as usize;
        Ok(EnhancedAction {
            expert: (rest / tau0 + 1) as i32,
            duration: (rest % tau0 + 1) as u32,
        })
    }

    /// Actions in flat-index order.
    pub fn iter(&self) -> impl Iterator<Item = EnhancedAction> + '_ {
        (0..self.len()).map(move |k| self.action(k).expect("index in range"))
    }

    /// Flat indices of `m^expert(1) ..= m^expert(τ0)`.
    pub fn macro_indices(&self, expert: usize) -> std::ops::Range<usize> {
        let start = self.num_primitives + (expert - 1) * self.max_duration as usize;
        start..start + self.max_duration as usize
    }
}

impl fmt::Display for EnhancedActionSpace {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(
            f,
            "space(|A|={}, n={}, tau0={})",
            self.num_primitives, self.num_experts, self.max_duration
        )
    }
}

/// Outcome of one executor tick.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct Decision {
    /// Macro being followed on this timestep.
    pub action: EnhancedAction,
    /// True if the upper-level selector ran on this timestep.
    pub selected: bool,
    /// True if the selection was forced by an interruption.
    pub interrupted: bool,
}

/// Upper-level control state: which macro runs and how long it has left.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct MacroExecutor {
    active: Option<EnhancedAction>,
    remaining: u32,
}

impl Default for MacroExecutor {
    fn default() -> Self {
        Self::new()
    }
}

impl MacroExecutor {
    pub fn new() -> Self {
        Self {
            active: None,
            remaining: 1,
        }
    }

    /// Executor resumed mid-macro; `remaining` counts the ticks already
    /// granted including the current one.
    pub fn resume(active: EnhancedAction, remaining: u32) -> Result<Self> {
        if remaining > active.duration() {
            return Err(Error::invalid(format!(
                "remaining {remaining} exceeds duration of {active}"
            )));
        }
        Ok(Self {
            active: Some(active),
            remaining,
        })
    }

    pub fn active(&self) -> Option<EnhancedAction> {
        self.active
    }

    pub fn remaining(&self) -> u32 {
        self.remaining
    }

    /// Episode ended: drop whatever was running.
    pub fn clear(&mut self) {
        *self = Self::new();
    }

    pub fn step<S: ?Sized>(
        &mut self,
        space: &EnhancedActionSpace,
        state: &S,
        selector: impl FnMut(&S) -> EnhancedAction,
    ) -> Result<Decision> {
        self.step_with_interrupt(space, state, selector, |_, _| false)
    }

    /// Like [`step`](Self::step), but while a macro is mid-flight
    /// `interrupt(state, continuation)` may force a fresh selection.
    /// The continuation is `m^i(τ_r)`, the part of the running macro that
    /// is still owed.
    pub fn step_with_interrupt<S: ?Sized>(
        &mut self,
        space: &EnhancedActionSpace,
        state: &S,
        mut selector: impl FnMut(&S) -> EnhancedAction,
        interrupt: impl FnOnce(&S, EnhancedAction) -> bool,
    ) -> Result<Decision> {
        self.remaining = self.remaining.saturating_sub(1);
        let mut interrupted = false;
        if self.remaining > 0 {
            let active = self
                .active
                .ok_or_else(|| Error::Internal("executor has time left but no macro".into()))?;
            if interrupt(state, active.with_duration(self.remaining)) {
                interrupted = true;
            } else {
                return Ok(Decision {
                    action: active,
                    selected: false,
                    interrupted: false,
                });
            }
        }
        let chosen = selector(state);
        if !space.contains(chosen) {
            return Err(Error::invalid(format!("selector returned {chosen} outside {space}")));
        }
        self.active = Some(chosen);
        self.remaining = chosen.duration();
        Ok(Decision {
            action: chosen,
            selected: true,
            interrupted,
        })
    }
}

/// One environment transition.
#[derive(Clone, Debug, PartialEq)]
pub struct StepOutcome<S> {
    pub state: S,
    pub reward: f64,
    /// Reached an absorbing state; bootstrapping stops here.
    pub terminal: bool,
    /// Cut off by the step cap; the state is not absorbing.
    pub truncated: bool,
}

impl<S> StepOutcome<S> {
    pub fn done(&self) -> bool {
        self.terminal || self.truncated
    }
}

/// Single-agent environment over primitive actions `0..num_primitives()`.
pub trait Environment {
    type State: Clone;

    fn num_primitives(&self) -> usize;

    fn reset(&mut self) -> Self::State;

    /// Errors if called after the episode finished and before `reset`.
    fn step(&mut self, action: usize) -> Result<StepOutcome<Self::State>>;
}

/// A deterministic, Markov lower-level policy.
pub trait ExpertPolicy<S: ?Sized> {
    fn act(&self, state: &S) -> usize;
}

impl<S: ?Sized, F: Fn(&S) -> usize> ExpertPolicy<S> for F {
    fn act(&self, state: &S) -> usize {
        self(state)
    }
}

/// Primitive to execute for `m` in `state`.
pub fn lower_action<S: ?Sized, E: ExpertPolicy<S>>(
    m: EnhancedAction,
    state: &S,
    experts: &[E],
) -> Result<usize> {
    match (m.primitive_index(), m.expert()) {
        (Some(k), _) => Ok(k),
        (None, Some(i)) => experts
            .get(i - 1)
            .map(|e| e.act(state))
            .ok_or_else(|| Error::invalid(format!("{m} refers to missing expert {i}"))),
        (None, None) => Err(Error::invalid("expert index 0 is not an action")),
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn space_sizes() {
        assert_eq!(EnhancedActionSpace::build(4, 4, 10).unwrap().len(), 44);
        assert_eq!(EnhancedActionSpace::build(24, 2, 20).unwrap().len(), 64);
        assert_eq!(EnhancedActionSpace::build(4, 0, 10).unwrap().len(), 4);
        assert!(EnhancedActionSpace::build(0, 1, 10).is_err());
        assert!(EnhancedActionSpace::build(4, 1, 0).is_err());
    }

    #[test]
    fn flat_index_examples() {
        let space = EnhancedActionSpace::build(4, 4, 10).unwrap();
        let idx = |i, t| space.flat_index(EnhancedAction::new(i, t).unwrap()).unwrap();
        assert_eq!(idx(-1, 1), 0);
        assert_eq!(idx(1, 1), 4);
        assert_eq!(idx(2, 3), 16);
        // enumeration agrees
        let listed: Vec<_> = space.iter().collect();
        assert_eq!(listed[16], EnhancedAction::new(2, 3).unwrap());
    }

    #[test]
    fn out_of_range_actions_rejected() {
        let space = EnhancedActionSpace::build(4, 2, 10).unwrap();
        assert!(space.flat_index(EnhancedAction::primitive(4)).is_err());
        assert!(space.flat_index(EnhancedAction::new(3, 1).unwrap()).is_err());
        assert!(space.flat_index(EnhancedAction::new(1, 11).unwrap()).is_err());
        assert!(space.action(24).is_err());
        assert!(EnhancedAction::new(0, 1).is_err());
        assert!(EnhancedAction::new(-2, 3).is_err());
        assert!(EnhancedAction::new(1, 0).is_err());
    }

    #[test]
    fn round_trip_exhaustive() {
        for a in 1..=32 {
            for n in 0..=8 {
                for tau0 in 1..=32u32 {
                    let space = EnhancedActionSpace::build(a, n, tau0).unwrap();
                    for k in 0..space.len() {
                        let m = space.action(k).unwrap();
                        assert_eq!(space.flat_index(m).unwrap(), k);
                    }
                }
            }
        }
    }

    #[test]
    fn no_experts_is_primitive_set() {
        let space = EnhancedActionSpace::build(5, 0, 7).unwrap();
        let listed: Vec<_> = space.iter().collect();
        let expect: Vec<_> = (0..5).map(EnhancedAction::primitive).collect();
        assert_eq!(listed, expect);
    }

    #[test]
    fn executor_keeps_running_macro() {
        let space = EnhancedActionSpace::build(4, 2, 10).unwrap();
        let m = EnhancedAction::new(1, 5).unwrap();
        let mut ex = MacroExecutor::resume(m, 3).unwrap();
        let d = ex
            .step(&space, &(), |_| panic!("selector must not run"))
            .unwrap();
        assert_eq!(d.action, m);
        assert!(!d.selected);
        assert_eq!(ex.remaining(), 2);
    }

    #[test]
    fn executor_selects_when_time_runs_out() {
        let space = EnhancedActionSpace::build(4, 2, 10).unwrap();
        let next = EnhancedAction::new(2, 7).unwrap();
        let mut ex = MacroExecutor::resume(EnhancedAction::new(1, 5).unwrap(), 1).unwrap();
        let d = ex.step(&space, &(), |_| next).unwrap();
        assert!(d.selected);
        assert_eq!(d.action, next);
        assert_eq!(ex.remaining(), 7);
    }

    #[test]
    fn executor_primitive_selects_every_tick() {
        let space = EnhancedActionSpace::build(4, 2, 10).unwrap();
        let mut ex = MacroExecutor::new();
        let mut calls = 0;
        for _ in 0..10 {
            ex.step(&space, &(), |_| {
                calls += 1;
                EnhancedAction::primitive(1)
            })
            .unwrap();
        }
        assert_eq!(calls, 10);
    }

    #[test]
    fn executor_rejects_foreign_action() {
        let space = EnhancedActionSpace::build(4, 1, 3).unwrap();
        let mut ex = MacroExecutor::new();
        let r = ex.step(&space, &(), |_| EnhancedAction::new(2, 1).unwrap());
        assert!(matches!(r, Err(Error::InvalidArgument(_))));
        assert!(MacroExecutor::resume(EnhancedAction::new(1, 2).unwrap(), 3).is_err());
    }

    #[test]
    fn selector_cadence_matches_durations() {
        // scripted durations; selector must fire at t0 and t0+τ exactly
        let space = EnhancedActionSpace::build(3, 2, 6).unwrap();
        let script = [3u32, 1, 6, 2, 5, 4, 1, 1];
        let mut ex = MacroExecutor::new();
        let mut pick = 0usize;
        let mut fired = Vec::new();
        let total: u32 = script.iter().sum();
        for t in 0..total {
            let d = ex
                .step(&space, &(), |_| {
                    let m = EnhancedAction::new(1 + (pick % 2) as i32, script[pick]).unwrap();
                    pick += 1;
                    m
                })
                .unwrap();
            if d.selected {
                fired.push(t);
            }
        }
        let mut expect = vec![0u32];
        for tau in &script[..script.len() - 1] {
            expect.push(expect.last().unwrap() + tau);
        }
        assert_eq!(fired, expect);
    }

    #[test]
    fn clear_forces_fresh_selection() {
        let space = EnhancedActionSpace::build(2, 1, 9).unwrap();
        let mut ex = MacroExecutor::resume(EnhancedAction::new(1, 9).unwrap(), 6).unwrap();
        ex.clear();
        let d = ex.step(&space, &(), |_| EnhancedAction::primitive(0)).unwrap();
        assert!(d.selected);
    }

    #[test]
    fn interrupt_sees_continuation() {
        let space = EnhancedActionSpace::build(2, 1, 9).unwrap();
        let m = EnhancedAction::new(1, 9).unwrap();
        let mut ex = MacroExecutor::resume(m, 5).unwrap();
        let mut seen = None;
        let d = ex
            .step_with_interrupt(
                &space,
                &(),
                |_| EnhancedAction::primitive(1),
                |_, cont| {
                    seen = Some(cont);
                    true
                },
            )
            .unwrap();
        assert_eq!(seen, Some(EnhancedAction::new(1, 4).unwrap()));
        assert!(d.selected && d.interrupted);
        assert_eq!(d.action, EnhancedAction::primitive(1));
    }

    #[test]
    fn lower_action_delegates() {
        let up = |_: &u8| 0usize;
        let down = |_: &u8| 1usize;
        let experts: Vec<&dyn Fn(&u8) -> usize> = vec![&up, &down];
        let p = EnhancedAction::new(-3, 1).unwrap();
        assert_eq!(lower_action(p, &0u8, &experts).unwrap(), 2);
        let m7 = EnhancedAction::new(1, 7).unwrap();
        assert_eq!(lower_action(m7, &0u8, &experts).unwrap(), 0);
        let a = lower_action(EnhancedAction::new(2, 7).unwrap(), &0u8, &experts).unwrap();
        let b = lower_action(EnhancedAction::new(2, 1).unwrap(), &0u8, &experts).unwrap();
        assert_eq!(a, b);
        assert!(lower_action(EnhancedAction::new(3, 1).unwrap(), &0u8, &experts).is_err());
    }
}
