use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::maze::{Maze, MOVES};
use crate::error::{Error, Result};
use crate::oracle::FiniteMdp;
use crate::space::{Environment, StepOutcome};

pub const GOAL_REWARD: f64 = 10.0;

/// Where the probability mass of a failed move goes.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub enum SlipModel {
    /// Uniformly over the three other directions.
    #[default]
    Uniform,
    /// The agent stays where it is.
    Stay,
}

/// A goal-reaching task on a maze.
#[derive(Clone, Debug, PartialEq)]
pub struct GridTask {
    pub maze: Maze,
    pub goal: char,
    pub p_move: f64,
    pub slip: SlipModel,
    /// Scale of the Manhattan potential; zero disables shaping.
    pub beta: f64,
    pub gamma: f64,
    pub max_steps: usize,
}

impl GridTask {
    pub fn new(maze: Maze, goal: char) -> Result<Self> {
        let task = Self {
            maze,
            goal,
            p_move: 0.8,
            slip: SlipModel::Uniform,
            beta: 0.1,
            gamma: 0.99,
            max_steps: 300,
        };
        task.validate()?;
        Ok(task)
    }

    pub fn validate(&self) -> Result<()> {
        self.maze.goal(self.goal)?;
        if !(self.p_move > 0.0 && self.p_move <= 1.0) {
            return Err(Error::invalid(format!("p_move must lie in (0,1], got {}", self.p_move)));
        }
        if !(self.beta >= 0.0) {
            return Err(Error::invalid("beta must be non-negative"));
        }
        if self.max_steps == 0 {
            return Err(Error::invalid("step cap must be positive"));
        }
        Ok(())
    }

    pub fn goal_state(&self) -> usize {
        let (x, y) = self.maze.goal(self.goal).expect("validated");
        self.maze.state_of(x, y).expect("goal is free")
    }

    fn manhattan_to_goal(&self, s: usize) -> f64 {
        let (x, y) = self.maze.cell(s);
        let (gx, gy) = self.maze.goal(self.goal).expect("validated");
        (x.abs_diff(gx) + y.abs_diff(gy)) as f64
    }

    pub fn potential(&self, s: usize) -> f64 {
        -self.beta * self.manhattan_to_goal(s)
    }

    pub fn shaping(&self, s: usize, next: usize) -> f64 {
        shaping_term(self.potential(s), self.potential(next), self.gamma)
    }

    pub fn reward(&self, s: usize, next: usize) -> f64 {
        let main = if next == self.goal_state() { GOAL_REWARD } else { 0.0 };
        main + self.shaping(s, next)
    }

    /// Outcome distribution `(next, probability)` of one move, merged by cell.
    pub fn outcomes(&self, s: usize, action: usize) -> Vec<(usize, f64)> {
        let mut out: Vec<(usize, f64)> = Vec::with_capacity(4);
        let mut add = |n: usize, p: f64| match out.iter_mut().find(|(c, _)| *c == n) {
            Some(e) => e.1 += p,
            None => out.push((n, p)),
        };
        add(self.maze.neighbor(s, action), self.p_move);
        let rest = 1.0 - self.p_move;
        if rest > 0.0 {
            match self.slip {
                SlipModel::Uniform => {
                    for other in (0..MOVES.len()).filter(|a| *a != action) {
                        add(self.maze.neighbor(s, other), rest / 3.0);
                    }
                }
                SlipModel::Stay => add(s, rest),
            }
        }
        out
    }

    /// The exact MDP over free cells; the goal is absorbing with zero reward
    /// and the step cap is ignored.
    pub fn to_mdp(&self) -> Result<FiniteMdp> {
        let n = self.maze.num_free();
        let goal = self.goal_state();
        let mut transitions = vec![0.0; n * 4 * n];
        let mut rewards = vec![0.0; n * 4];
        for s in 0..n {
            for a in 0..4 {
                let row = &mut transitions[(s * 4 + a) * n..(s * 4 + a + 1) * n];
                if s == goal {
                    row[s] = 1.0;
                    continue;
                }
                for (next, p) in self.outcomes(s, a) {
                    row[next] += p;
                    rewards[s * 4 + a] += p * self.reward(s, next);
                }
            }
        }
        FiniteMdp::new(n, 4, self.gamma, transitions, rewards)
    }
}

/// `γΦ(s') − Φ(s)`.
pub fn shaping_term(phi: f64, phi_next: f64, gamma: f64) -> f64 {
    gamma * phi_next - phi
}

/// Samples the cell reached by `action` from `s`.
///
/// Draws one uniform to decide success, then (uniform slip only) one index
/// among the three other directions.
pub fn sample_move<R: Rng + ?Sized>(task: &GridTask, s: usize, action: usize, rng: &mut R) -> usize {
    if rng.random::<f64>() < task.p_move {
        return task.maze.neighbor(s, action);
    }
    match task.slip {
        SlipModel::Uniform => {
            let k = rng.random_range(0..3);
            let other = (0..MOVES.len()).filter(|a| *a != action).nth(k).expect("three others");
            task.maze.neighbor(s, other)
        }
        SlipModel::Stay => s,
    }
}

/// Episodic environment over a [`GridTask`]; states are free-cell indices.
#[derive(Clone, Debug)]
pub struct GridEnv {
    task: GridTask,
    rng: ChaCha8Rng,
    state: usize,
    steps: usize,
    done: bool,
    spawn: Vec<usize>,
}

impl GridEnv {
    pub fn new(task: GridTask, seed: u64) -> Result<Self> {
        task.validate()?;
        let goal = task.goal_state();
        let spawn: Vec<usize> = (0..task.maze.num_free()).filter(|s| *s != goal).collect();
        if spawn.is_empty() {
            return Err(Error::invalid("maze has no free cell besides the goal"));
        }
        Ok(Self {
            task,
            rng: ChaCha8Rng::seed_from_u64(seed),
            state: spawn[0],
            steps: 0,
            done: true,
            spawn,
        })
    }

    pub fn task(&self) -> &GridTask {
        &self.task
    }

    pub fn state(&self) -> usize {
        self.state
    }

    pub fn steps(&self) -> usize {
        self.steps
    }

    /// Starts an episode from a chosen cell.
    pub fn reset_to(&mut self, state: usize) -> Result<usize> {
        if state >= self.task.maze.num_free() {
            return Err(Error::invalid(format!("state {state} is not a free cell")));
        }
        self.state = state;
        self.steps = 0;
        self.done = state == self.task.goal_state();
        Ok(state)
    }
}

impl Environment for GridEnv {
    type State = usize;

    fn num_primitives(&self) -> usize {
        MOVES.len()
    }

    /// Uniform spawn over free cells other than the goal.
    fn reset(&mut self) -> usize {
        let s = self.spawn[self.rng.random_range(0..self.spawn.len())];
        self.state = s;
        self.steps = 0;
        self.done = false;
        s
    }

    fn step(&mut self, action: usize) -> Result<StepOutcome<usize>> {
        if self.done {
            return Err(Error::invalid("step called on a finished episode"));
        }
        if action >= MOVES.len() {
            return Err(Error::invalid(format!("grid action {action} out of range")));
        }
        let next = sample_move(&self.task, self.state, action, &mut self.rng);
        let reward = self.task.reward(self.state, next);
        self.state = next;
        self.steps += 1;
        let terminal = next == self.task.goal_state();
        let truncated = !terminal && self.steps >= self.task.max_steps;
        self.done = terminal || truncated;
        Ok(StepOutcome {
            state: next,
            reward,
            terminal,
            truncated,
        })
    }
}
