//! Stochastic multi-room maze: ASCII loader, 3× enlargement, shaped
//! rewards, exact model export, source-policy training and the linear
//! state mapping used to reuse small-maze policies.

mod env;
mod maze;
mod transfer;

pub use env::{sample_move, shaping_term, GridEnv, GridTask, SlipModel, GOAL_REWARD};
pub use maze::{parse_maze, shipped_maze, Maze, MOVES};
pub use transfer::{greedy_success_rate, map_cell, mapped_expert, train_source_policy, MappedExpert, SourcePolicy};

pub const UP: usize = 0;
pub const DOWN: usize = 1;
pub const LEFT: usize = 2;
pub const RIGHT: usize = 3;

#[cfg(test)]
mod tests {
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    use super::*;
    use crate::oracle::{apply_h, EnhancedFiniteMdp, QTable};
    use crate::space::Environment;
    use crate::Error;

    fn open(w: usize, h: usize, goal: (usize, usize)) -> Maze {
        let mut text = String::new();
        for y in 0..h {
            for x in 0..w {
                text.push(if (x, y) == goal { '1' } else { '.' });
            }
            text.push('\n');
        }
        parse_maze(&text).unwrap()
    }

    fn exact(task: GridTask) -> GridTask {
        GridTask { p_move: 1.0, ..task }
    }

    #[test]
    fn shipped_maze_shape() {
        let m = shipped_maze();
        assert_eq!((m.width(), m.height()), (17, 17));
        let labels: String = m.goals().keys().collect();
        assert_eq!(labels, "1234ab");
        assert_eq!(parse_maze(&m.to_string()).unwrap(), m);
    }

    #[test]
    fn enlargement_scales_walls() {
        let small = shipped_maze();
        let big = small.enlarge(3).unwrap();
        assert_eq!((big.width(), big.height()), (51, 51));
        for y in 0..51 {
            for x in 0..51 {
                assert_eq!(big.is_wall(x, y), small.is_wall(x / 3, y / 3));
            }
        }
        for (l, &(x, y)) in small.goals() {
            assert_eq!(big.goal(*l).unwrap(), (3 * x + 1, 3 * y + 1));
        }
    }

    #[test]
    fn parse_errors() {
        let cases = [("", 0), ("..\n.\n", 2), ("..\n.x\n", 2), ("1.\n.1\n", 2)];
        for (text, line) in cases {
            match parse_maze(text) {
                Err(Error::Parse { line: l, .. }) => assert_eq!(l, line, "{text:?}"),
                other => panic!("{text:?}: {other:?}"),
            }
        }
        assert!(matches!(parse_maze(".#.\n"), Err(Error::InvalidArgument(_))));
        assert!(matches!(parse_maze("###\n"), Err(Error::InvalidArgument(_))));
    }

    #[test]
    fn reaching_goal_pays_and_ends() {
        let task = exact(GridTask::new(open(3, 3, (2, 1)), '1').unwrap());
        let mut env = GridEnv::new(task, 0).unwrap();
        let start = env.task().maze.state_of(1, 1).unwrap();
        env.reset_to(start).unwrap();
        let out = env.step(RIGHT).unwrap();
        // γΦ(goal) − Φ(s) = 0 − (−0.1)
        assert!((out.reward - (10.0 + 0.1)).abs() < 1e-12);
        assert!(out.terminal && !out.truncated);
        assert!(env.step(LEFT).is_err());
    }

    #[test]
    fn wall_bump_keeps_position() {
        let task = exact(GridTask::new(shipped_maze(), 'a').unwrap());
        let mut env = GridEnv::new(task, 0).unwrap();
        let s = env.task().maze.state_of(1, 1).unwrap();
        env.reset_to(s).unwrap();
        assert_eq!(env.step(UP).unwrap().state, s);
        assert_eq!(env.step(LEFT).unwrap().state, s);
    }

    #[test]
    fn intended_move_frequency() {
        let task = GridTask::new(open(5, 5, (0, 0)), '1').unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(9);
        let s = task.maze.state_of(2, 2).unwrap();
        let target = task.maze.neighbor(s, UP);
        let n = 100_000;
        let hits = (0..n).filter(|_| sample_move(&task, s, UP, &mut rng) == target).count();
        let p = hits as f64 / n as f64;
        let sigma = (0.8f64 * 0.2 / n as f64).sqrt();
        assert!((p - 0.8).abs() <= 3.0 * sigma, "{p}");
    }

    #[test]
    fn exported_model_matches_sampling() {
        let task = GridTask::new(shipped_maze(), '1').unwrap();
        let mdp = task.to_mdp().unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(4);
        let n = task.maze.num_free();
        let s = task.maze.state_of(5, 4).unwrap();
        for a in 0..4 {
            let draws = 40_000;
            let mut counts = vec![0usize; n];
            for _ in 0..draws {
                counts[sample_move(&task, s, a, &mut rng)] += 1;
            }
            for (next, &p) in mdp.row(s, a).iter().enumerate() {
                let f = counts[next] as f64 / draws as f64;
                let sigma = (p * (1.0 - p) / draws as f64).sqrt();
                assert!((f - p).abs() <= 4.0 * sigma + 1e-12, "a={a} next={next}: {f} vs {p}");
            }
        }
    }

    #[test]
    fn shaping_examples() {
        let task = GridTask { gamma: 1.0, ..GridTask::new(open(5, 1, (4, 0)), '1').unwrap() };
        let s = task.maze.state_of(1, 0).unwrap();
        let closer = task.maze.state_of(2, 0).unwrap();
        assert!((task.shaping(s, closer) - 0.1).abs() < 1e-12);
        let g = GridTask { gamma: 0.9, ..task.clone() };
        assert!((g.shaping(s, s) - (0.9 - 1.0) * g.potential(s)).abs() < 1e-12);
        assert_eq!(shaping_term(-0.3, -0.2, 1.0), -0.2 + 0.3);
    }

    #[test]
    fn shaping_telescopes() {
        let maze = shipped_maze();
        let task = GridTask { gamma: 1.0, p_move: 0.5, ..GridTask::new(maze, '2').unwrap() };
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        let goal = task.goal_state();
        for _ in 0..5 {
            let start = rng.random_range(0..task.maze.num_free());
            let mut s = start;
            let mut total = 0.0;
            while s != goal {
                let next = sample_move(&task, s, rng.random_range(0..4), &mut rng);
                total += task.shaping(s, next);
                s = next;
            }
            let (x, y) = task.maze.cell(start);
            let (gx, gy) = task.maze.goal('2').unwrap();
            let manhattan = (x.abs_diff(gx) + y.abs_diff(gy)) as f64;
            assert!((total - 0.1 * manhattan).abs() < 1e-9);
        }
    }

    #[test]
    fn cap_truncates_without_goal_reward() {
        let task = GridTask { max_steps: 5, p_move: 1.0, beta: 0.0, ..GridTask::new(shipped_maze(), 'a').unwrap() };
        let mut env = GridEnv::new(task, 1).unwrap();
        env.reset_to(env.task().maze.state_of(1, 1).unwrap()).unwrap();
        let mut total = 0.0;
        for k in 0..5 {
            let out = env.step(UP).unwrap();
            total += out.reward;
            assert_eq!(out.truncated, k == 4);
            assert!(!out.terminal);
        }
        assert_eq!(total, 0.0);
        assert!(env.step(UP).is_err());
    }

    #[test]
    fn seeded_episodes_repeat() {
        let run = |seed| {
            let mut env = GridEnv::new(GridTask::new(shipped_maze(), 'a').unwrap(), seed).unwrap();
            let mut trace = vec![env.reset()];
            for k in 0..50 {
                let out = env.step(k % 4).unwrap();
                trace.push(out.state);
                if out.done() {
                    break;
                }
            }
            trace
        };
        assert_eq!(run(3), run(3));
        assert_ne!(run(3), run(4));
    }

    #[test]
    fn open_maze_policy_follows_shortest_paths() {
        let task = GridTask::new(open(3, 3, (2, 2)), '1').unwrap();
        let policy = train_source_policy(&task, 10_000, 0).unwrap();
        let goal = task.goal_state();
        let dist = task.maze.distances_from(goal);
        for s in (0..task.maze.num_free()).filter(|s| *s != goal) {
            let next = task.maze.neighbor(s, policy.action(s));
            assert_eq!(dist[next].unwrap() + 1, dist[s].unwrap(), "state {s}");
        }
    }

    #[test]
    fn source_policies_converge() {
        let maze = shipped_maze();
        for goal in ['1', '2', '3', '4'] {
            let task = GridTask::new(maze.clone(), goal).unwrap();
            let policy = train_source_policy(&task, 10_000, 1).unwrap();
            let base = task.to_mdp().unwrap();
            let m = EnhancedFiniteMdp::new(base, vec![], 1).unwrap();
            let q = QTable::from_vec(maze.num_free(), 4, policy.q_values().to_vec()).unwrap();
            assert!(apply_h(&q, &m).sup_distance(&q) < 0.05);
        }
    }

    #[test]
    fn starved_budget_fails() {
        let task = GridTask::new(shipped_maze(), '1').unwrap();
        assert!(matches!(train_source_policy(&task, 2, 0), Err(Error::TrainingFailure(_))));
    }

    #[test]
    fn linear_mapping() {
        let small = open(5, 5, (0, 0));
        assert_eq!(map_cell(&small, 0, 0, 3), small.state_of(0, 0).unwrap());
        assert_eq!(map_cell(&small, 7, 4, 3), small.state_of(2, 1).unwrap());
    }

    #[test]
    fn mapping_lands_on_free_cells() {
        let small = shipped_maze();
        let big = small.enlarge(3).unwrap();
        for x in 0..big.width() {
            for y in 0..big.height() {
                let (sx, sy) = small.cell(map_cell(&small, x, y, 3));
                assert!(!small.is_wall(sx, sy));
                if !small.is_wall(x / 3, y / 3) {
                    assert_eq!((sx, sy), (x / 3, y / 3));
                }
            }
        }
        // corner wall (0,0): (1,0),(0,1) are walls too; (1,1) is the only cell at distance 2
        assert_eq!(small.cell(small.nearest_free(0, 0)), (1, 1));
    }

    #[test]
    fn nearest_free_prefers_lowest_index() {
        let m = parse_maze("...\n.#.\n...\n").unwrap();
        // four cells at distance 1; (1,0) comes first row-major
        assert_eq!(m.cell(m.nearest_free(1, 1)), (1, 0));
    }

    #[test]
    fn mapped_expert_uses_block_source() {
        let small = shipped_maze();
        let task = GridTask::new(small.clone(), '1').unwrap();
        let policy = train_source_policy(&task, 10_000, 0).unwrap();
        let big = small.enlarge(3).unwrap();
        let expert = MappedExpert::new(&policy, &big, 3).unwrap();
        use crate::space::ExpertPolicy;
        for s in 0..big.num_free() {
            let (x, y) = big.cell(s);
            assert_eq!(expert.act(&s), mapped_expert(&policy, x, y, 3));
        }
    }
}
