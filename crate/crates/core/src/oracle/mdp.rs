use crate::error::{Error, Result};
use crate::space::{EnhancedAction, EnhancedActionSpace};

const ROW_SUM_TOL: f64 = 1e-12;

/// Explicit finite MDP `(S, A, P, R, γ)` with expected rewards `r(s, a)`.
#[derive(Clone, Debug, PartialEq)]
pub struct FiniteMdp {
    num_states: usize,
    num_actions: usize,
    gamma: f64,
    // P(s'|s,a) at ((s * A) + a) * S + s'
    transitions: Vec<f64>,
    // r(s,a) at s * A + a
    rewards: Vec<f64>,
}

impl FiniteMdp {
    pub fn new(
        num_states: usize,
        num_actions: usize,
        gamma: f64,
        transitions: Vec<f64>,
        rewards: Vec<f64>,
    ) -> Result<Self> {
        if num_states == 0 || num_actions == 0 {
            return Err(Error::invalid("an MDP needs at least one state and one action"));
        }
        if !(0.0..1.0).contains(&gamma) {
            return Err(Error::invalid(format!("gamma must lie in [0,1), got {gamma}")));
        }
        if transitions.len() != num_states * num_actions * num_states {
            return Err(Error::invalid("transition tensor has the wrong size"));
        }
        if rewards.len() != num_states * num_actions {
            return Err(Error::invalid("reward table has the wrong size"));
        }
        if rewards.iter().any(|r| !r.is_finite()) {
            return Err(Error::invalid("rewards must be finite"));
        }
        for (row_idx, row) in transitions.chunks(num_states).enumerate() {
            if row.iter().any(|p| !(*p >= 0.0) || !p.is_finite()) {
                return Err(Error::invalid(format!("row {row_idx} has a negative probability")));
            }
            let sum: f64 = row.iter().sum();
            if (sum - 1.0).abs() > ROW_SUM_TOL {
                return Err(Error::invalid(format!("row {row_idx} sums to {sum}, not 1")));
            }
        }
        Ok(Self {
            num_states,
            num_actions,
            gamma,
            transitions,
            rewards,
        })
    }

    pub fn num_states(&self) -> usize {
        self.num_states
    }

    pub fn num_actions(&self) -> usize {
        self.num_actions
    }

    pub fn gamma(&self) -> f64 {
        self.gamma
    }

    /// `P(·|s, a)`.
    pub fn row(&self, s: usize, a: usize) -> &[f64] {
        let start = (s * self.num_actions + a) * self.num_states;
        &self.transitions[start..start + self.num_states]
    }

    pub fn reward(&self, s: usize, a: usize) -> f64 {
        self.rewards[s * self.num_actions + a]
    }

    pub fn with_gamma(mut self, gamma: f64) -> Result<Self> {
        if !(0.0..1.0).contains(&gamma) {
            return Err(Error::invalid(format!("gamma must lie in [0,1), got {gamma}")));
        }
        self.gamma = gamma;
        Ok(self)
    }
}

/// A finite MDP augmented with deterministic experts and duration-indexed
/// macros over them.
#[derive(Clone, Debug, PartialEq)]
pub struct EnhancedFiniteMdp {
    base: FiniteMdp,
    experts: Vec<Vec<usize>>,
    space: EnhancedActionSpace,
    bonus: f64,
}

impl EnhancedFiniteMdp {
    pub fn new(base: FiniteMdp, experts: Vec<Vec<usize>>, max_duration: u32) -> Result<Self> {
        for (i, map) in experts.iter().enumerate() {
            if map.len() != base.num_states {
                return Err(Error::invalid(format!(
                    "expert {} covers {} states, expected {}",
                    i + 1,
                    map.len(),
                    base.num_states
                )));
            }
            if let Some(bad) = map.iter().find(|a| **a >= base.num_actions) {
                return Err(Error::invalid(format!("expert {} emits unknown action {bad}", i + 1)));
            }
        }
        let space = EnhancedActionSpace::build(base.num_actions, experts.len(), max_duration)?;
        Ok(Self {
            base,
            experts,
            space,
            bonus: 0.0,
        })
    }

    /// Folds the macro bonus `c·(τ − 1)` into the expected rewards.
    pub fn with_bonus(mut self, c: f64) -> Self {
        self.bonus = c;
        self
    }

    pub fn base(&self) -> &FiniteMdp {
        &self.base
    }

    pub fn experts(&self) -> &[Vec<usize>] {
        &self.experts
    }

    pub fn space(&self) -> &EnhancedActionSpace {
        &self.space
    }

    pub fn bonus(&self) -> f64 {
        self.bonus
    }

    pub fn gamma(&self) -> f64 {
        self.base.gamma
    }

    pub fn num_states(&self) -> usize {
        self.base.num_states
    }

    /// Primitive executed for `m` in state `s`.
    pub fn lower(&self, s: usize, m: EnhancedAction) -> usize {
        match m.primitive_index() {
            Some(k) => k,
            None => self.experts[m.expert_index() as usize - 1][s],
        }
    }

    /// Expected one-step reward for `m` in `s`, bonus included.
    pub fn reward(&self, s: usize, m: EnhancedAction) -> f64 {
        self.base.reward(s, self.lower(s, m)) + self.bonus * (m.duration() as f64 - 1.0)
    }
}

/// Dense `|S| × |enhanced space|` action-value table.
#[derive(Clone, Debug, PartialEq)]
pub struct QTable {
    num_states: usize,
    num_actions: usize,
    data: Vec<f64>,
}

impl QTable {
    pub fn zeros(num_states: usize, num_actions: usize) -> Self {
        Self::filled(num_states, num_actions, 0.0)
    }

    pub fn filled(num_states: usize, num_actions: usize, value: f64) -> Self {
        Self {
            num_states,
            num_actions,
            data: vec![value; num_states * num_actions],
        }
    }

    pub fn from_vec(num_states: usize, num_actions: usize, data: Vec<f64>) -> Result<Self> {
        if data.len() != num_states * num_actions {
            return Err(Error::invalid("table data has the wrong size"));
        }
        Ok(Self {
            num_states,
            num_actions,
            data,
        })
    }

    pub fn for_mdp(m: &EnhancedFiniteMdp) -> Self {
        Self::zeros(m.num_states(), m.space().len())
    }

    pub fn num_states(&self) -> usize {
        self.num_states
    }

    pub fn num_actions(&self) -> usize {
        self.num_actions
    }

    pub fn get(&self, s: usize, a: usize) -> f64 {
        self.data[s * self.num_actions + a]
    }

    pub fn set(&mut self, s: usize, a: usize, v: f64) {
        self.data[s * self.num_actions + a] = v;
    }

    pub fn row(&self, s: usize) -> &[f64] {
        &self.data[s * self.num_actions..(s + 1) * self.num_actions]
    }

    pub fn data(&self) -> &[f64] {
        &self.data
    }

    pub fn max_row(&self, s: usize) -> f64 {
        self.row(s).iter().copied().fold(f64::NEG_INFINITY, f64::max)
    }

    /// `‖self − other‖∞`.
    pub fn sup_distance(&self, other: &QTable) -> f64 {
        assert_eq!(self.data.len(), other.data.len(), "table shapes differ");
        self.data
            .iter()
            .zip(&other.data)
            .map(|(a, b)| (a - b).abs())
            .fold(0.0, f64::max)
    }

    pub fn map(&self, f: impl Fn(f64) -> f64) -> QTable {
        QTable {
            num_states: self.num_states,
            num_actions: self.num_actions,
            data: self.data.iter().map(|v| f(*v)).collect(),
        }
    }
}
