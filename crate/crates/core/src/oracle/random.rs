use rand::Rng;
use rand_distr::{Distribution, Exp1};

use super::{EnhancedFiniteMdp, FiniteMdp};

/// Size ranges for randomly drawn instances.
#[derive(Clone, Debug, PartialEq)]
pub struct RandomFamily {
    pub states: (usize, usize),
    pub actions: (usize, usize),
    pub experts: (usize, usize),
    pub max_duration: (u32, u32),
    pub gammas: Vec<f64>,
}

impl Default for RandomFamily {
    fn default() -> Self {
        Self {
            states: (1, 12),
            actions: (1, 4),
            experts: (0, 2),
            max_duration: (1, 5),
            gammas: vec![0.5, 0.9, 0.99],
        }
    }
}

impl RandomFamily {
    /// Dirichlet(1) transition rows, rewards uniform in `[−1, 1]`, experts
    /// drawn as uniformly random deterministic maps.
    pub fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> EnhancedFiniteMdp {
        let n_s = rng.random_range(self.states.0..=self.states.1);
        let n_a = rng.random_range(self.actions.0..=self.actions.1);
        let n = rng.random_range(self.experts.0..=self.experts.1);
        let tau0 = rng.random_range(self.max_duration.0..=self.max_duration.1);
        let gamma = self.gammas[rng.random_range(0..self.gammas.len())];

        let mut transitions = Vec::with_capacity(n_s * n_a * n_s);
        for _ in 0..n_s * n_a {
            let row: Vec<f64> = (0..n_s).map(|_| Exp1.sample(rng)).collect();
            let total: f64 = row.iter().sum();
            let mut row: Vec<f64> = row.iter().map(|x| x / total).collect();
            // pin the row sum to 1 up to the last ulp
            let rest: f64 = row[..n_s - 1].iter().sum();
            row[n_s - 1] = (1.0 - rest).max(0.0);
            transitions.extend(row);
        }
        let rewards = (0..n_s * n_a).map(|_| rng.random_range(-1.0..=1.0)).collect();
        let experts = (0..n)
            .map(|_| (0..n_s).map(|_| rng.random_range(0..n_a)).collect())
            .collect();
        let base = FiniteMdp::new(n_s, n_a, gamma, transitions, rewards)
            .expect("sampled rows are stochastic");
        EnhancedFiniteMdp::new(base, experts, tau0).expect("sampled experts are valid")
    }
}
