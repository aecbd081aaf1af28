use super::{FitSample, QFunction};

/// Step-size rule for table updates.
#[derive(Clone, Copy, Debug, PartialEq)]
pub enum StepSize {
    Constant(f64),
    /// `α_n = (1 + n)^(−exponent)` where `n` counts prior updates of the entry.
    Decaying { exponent: f64 },
    /// `α_n = (1 + (1 − γ)·n)^(−exponent)`: stays near 1 for about one
    /// horizon of visits before decaying.
    Rescaled { gamma: f64, exponent: f64 },
}

impl StepSize {
    /// Robbins–Monro schedule used for the convergence checks.
    pub const CONVERGENT: StepSize = StepSize::Decaying { exponent: 0.7 };

    pub fn at(&self, visits: u64) -> f64 {
        match *self {
            StepSize::Constant(a) => a,
            StepSize::Decaying { exponent } => (1.0 + visits as f64).powf(-exponent),
            StepSize::Rescaled { gamma, exponent } => (1.0 + (1.0 - gamma) * visits as f64).powf(-exponent),
        }
    }
}

/// Dense `states × actions` table, zero-initialised.
#[derive(Clone, Debug, PartialEq)]
pub struct TabularQ {
    num_states: usize,
    num_actions: usize,
    table: Vec<f64>,
    visits: Vec<u64>,
    step: StepSize,
}

impl TabularQ {
    pub fn new(num_states: usize, num_actions: usize, step: StepSize) -> Self {
        Self {
            num_states,
            num_actions,
            table: vec![0.0; num_states * num_actions],
            visits: vec![0; num_states * num_actions],
            step,
        }
    }

    pub fn from_table(num_states: usize, num_actions: usize, table: Vec<f64>, step: StepSize) -> Self {
        assert_eq!(table.len(), num_states * num_actions, "table shape");
        Self {
            num_states,
            num_actions,
            table,
            visits: vec![0; num_states * num_actions],
            step,
        }
    }

    pub fn num_states(&self) -> usize {
        self.num_states
    }

    pub fn step_size(&self) -> StepSize {
        self.step
    }

    pub fn row(&self, state: usize) -> &[f64] {
        &self.table[state * self.num_actions..(state + 1) * self.num_actions]
    }

    pub fn get(&self, state: usize, action: usize) -> f64 {
        self.table[state * self.num_actions + action]
    }

    pub fn set(&mut self, state: usize, action: usize, value: f64) {
        self.table[state * self.num_actions + action] = value;
    }

    pub fn visits(&self, state: usize, action: usize) -> u64 {
        self.visits[state * self.num_actions + action]
    }

    pub fn table(&self) -> &[f64] {
        &self.table
    }

    /// `Q ← Q + α(y − Q)` on one entry; returns the TD error `y − Q_old`.
    pub fn update(&mut self, state: usize, action: usize, target: f64) -> f64 {
        let k = state * self.num_actions + action;
        let alpha = self.step.at(self.visits[k]);
        let err = target - self.table[k];
        self.table[k] += alpha * err;
        self.visits[k] += 1;
        err
    }
}

impl QFunction<usize> for TabularQ {
    fn num_actions(&self) -> usize {
        self.num_actions
    }

    fn values(&self, state: &usize) -> Vec<f64> {
        self.row(*state).to_vec()
    }

    fn value(&self, state: &usize, action: usize) -> f64 {
        self.get(*state, action)
    }

    fn max_value(&self, state: &usize) -> f64 {
        self.row(*state).iter().copied().fold(f64::NEG_INFINITY, f64::max)
    }

    fn fit(&mut self, batch: &[FitSample<'_, usize>]) -> f64 {
        if batch.is_empty() {
            return 0.0;
        }
        let mut loss = 0.0;
        for s in batch {
            let err = self.update(*s.state, s.action, s.target);
            loss += 0.5 * err * err;
        }
        loss / batch.len() as f64
    }

    fn snapshot(&self) -> Self {
        self.clone()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn half_step_toward_target() {
        let mut q = TabularQ::new(2, 3, StepSize::Constant(0.5));
        q.update(1, 2, 10.0);
        assert_eq!(q.get(1, 2), 5.0);
        // only that entry moved
        let moved = q.table().iter().filter(|v| **v != 0.0).count();
        assert_eq!(moved, 1);
    }

    #[test]
    fn target_equal_to_value_is_stationary() {
        let mut q = TabularQ::new(1, 1, StepSize::Constant(0.3));
        q.set(0, 0, 4.25);
        q.update(0, 0, 4.25);
        assert_eq!(q.get(0, 0), 4.25);
    }

    #[test]
    fn decaying_schedule() {
        let s = StepSize::CONVERGENT;
        assert_eq!(s.at(0), 1.0);
        assert!((s.at(9) - 10f64.powf(-0.7)).abs() < 1e-15);
        let mut q = TabularQ::new(1, 1, s);
        q.update(0, 0, 3.0);
        assert_eq!(q.get(0, 0), 3.0);
        assert_eq!(q.visits(0, 0), 1);
    }

    #[test]
    fn rescaled_schedule() {
        let s = StepSize::Rescaled {
            gamma: 0.9,
            exponent: 1.0,
        };
        assert_eq!(s.at(0), 1.0);
        assert!((s.at(10) - 0.5).abs() < 1e-15);
        // a constant target is averaged exactly: α_n = 1/(1 + n) when γ = 0
        let mut q = TabularQ::new(
            1,
            1,
            StepSize::Rescaled {
                gamma: 0.0,
                exponent: 1.0,
            },
        );
        for y in [2.0, 4.0, 9.0] {
            q.update(0, 0, y);
        }
        assert!((q.get(0, 0) - 5.0).abs() < 1e-12);
    }
}
