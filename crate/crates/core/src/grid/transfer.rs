use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use super::env::{sample_move, GridTask};
use super::maze::Maze;
use crate::error::{Error, Result};
use crate::learning::argmax;
use crate::space::ExpertPolicy;

/// Greedy policy of a converged source task.
#[derive(Clone, Debug, PartialEq)]
pub struct SourcePolicy {
    maze: Maze,
    goal: char,
    q: Vec<f64>,
    actions: Vec<usize>,
    sweeps: usize,
}

impl SourcePolicy {
    pub fn maze(&self) -> &Maze {
        &self.maze
    }

    pub fn goal(&self) -> char {
        self.goal
    }

    pub fn action(&self, state: usize) -> usize {
        self.actions[state]
    }

    pub fn actions(&self) -> &[usize] {
        &self.actions
    }

    /// Q-values, row-major over `(state, action)`.
    pub fn q_values(&self) -> &[f64] {
        &self.q
    }

    pub fn sweeps(&self) -> usize {
        self.sweeps
    }
}

impl ExpertPolicy<usize> for SourcePolicy {
    fn act(&self, state: &usize) -> usize {
        self.actions[*state]
    }
}

/// Fraction of non-goal cells from which one seeded greedy rollout reaches
/// the goal within `limit` steps.
pub fn greedy_success_rate(task: &GridTask, actions: &[usize], limit: usize, seed: u64) -> f64 {
    let goal = task.goal_state();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let starts: Vec<usize> = (0..task.maze.num_free()).filter(|s| *s != goal).collect();
    if starts.is_empty() {
        return 1.0;
    }
    let reached = starts
        .iter()
        .filter(|&&start| {
            let mut s = start;
            for _ in 0..limit {
                s = sample_move(task, s, actions[s], &mut rng);
                if s == goal {
                    return true;
                }
            }
            false
        })
        .count();
    reached as f64 / starts.len() as f64
}

/// Solves the source task with in-place expected backups over the exact
/// maze model.
///
/// Stops once a sweep changes no entry by more than `1e-4`; fails if that
/// takes more than `budget` sweeps or the greedy policy reaches the goal
/// from fewer than 95% of the cells within `4·(width + height)` steps.
pub fn train_source_policy(task: &GridTask, budget: usize, seed: u64) -> Result<SourcePolicy> {
    task.validate()?;
    let maze = &task.maze;
    let n = maze.num_free();
    let goal = task.goal_state();
    let outcomes: Vec<Vec<(usize, f64, f64)>> = (0..n * 4)
        .map(|k| {
            let (s, a) = (k / 4, k % 4);
            task.outcomes(s, a)
                .into_iter()
                .map(|(next, p)| (next, p, task.reward(s, next)))
                .collect()
        })
        .collect();
    let mut q = vec![0.0; n * 4];
    let row_max = |q: &[f64], s: usize| q[s * 4..s * 4 + 4].iter().copied().fold(f64::NEG_INFINITY, f64::max);

    let mut sweeps = 0;
    loop {
        if sweeps == budget {
            return Err(Error::TrainingFailure(format!(
                "source task '{}' did not settle within {budget} sweeps",
                task.goal
            )));
        }
        sweeps += 1;
        let mut delta: f64 = 0.0;
        for s in (0..n).filter(|s| *s != goal) {
            for a in 0..4 {
                let v: f64 = outcomes[s * 4 + a]
                    .iter()
                    .map(|&(next, p, r)| {
                        let cont = if next == goal { 0.0 } else { row_max(&q, next) };
                        p * (r + task.gamma * cont)
                    })
                    .sum();
                delta = delta.max((v - q[s * 4 + a]).abs());
                q[s * 4 + a] = v;
            }
        }
        if delta < 1e-4 {
            break;
        }
    }

    let actions: Vec<usize> = (0..n).map(|s| argmax(&q[s * 4..s * 4 + 4])).collect();
    let limit = 4 * (maze.width() + maze.height());
    let rate = greedy_success_rate(task, &actions, limit, seed);
    if rate < 0.95 {
        return Err(Error::TrainingFailure(format!(
            "source policy for '{}' reaches the goal from only {:.1}% of cells",
            task.goal,
            rate * 100.0
        )));
    }
    Ok(SourcePolicy {
        maze: maze.clone(),
        goal: task.goal,
        q,
        actions,
        sweeps,
    })
}

/// Source policy evaluated on a `scale`-times larger maze through
/// `(⌊x/scale⌋, ⌊y/scale⌋)`, falling back to the nearest free source cell.
#[derive(Clone, Debug, PartialEq)]
pub struct MappedExpert {
    table: Vec<usize>,
    cells: Vec<usize>,
}

impl MappedExpert {
    pub fn new(source: &SourcePolicy, target: &Maze, scale: usize) -> Result<Self> {
        if scale == 0 {
            return Err(Error::invalid("scale must be positive"));
        }
        let cells: Vec<usize> = (0..target.num_free())
            .map(|s| {
                let (x, y) = target.cell(s);
                map_cell(source.maze(), x, y, scale)
            })
            .collect();
        let table = cells.iter().map(|c| source.action(*c)).collect();
        Ok(Self { table, cells })
    }

    /// Source state used for target state `s`.
    pub fn source_cell(&self, s: usize) -> usize {
        self.cells[s]
    }
}

impl ExpertPolicy<usize> for MappedExpert {
    fn act(&self, state: &usize) -> usize {
        self.table[*state]
    }
}

/// Source state matched to target cell `(x, y)`.
pub fn map_cell(small: &Maze, x: usize, y: usize, scale: usize) -> usize {
    small.nearest_free(x / scale, y / scale)
}

/// Primitive action of `source` for target cell `(x, y)`.
pub fn mapped_expert(source: &SourcePolicy, x: usize, y: usize, scale: usize) -> usize {
    source.action(map_cell(source.maze(), x, y, scale))
}
