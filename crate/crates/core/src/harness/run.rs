use std::fs;
use std::path::{Path, PathBuf};
use std::time::Instant;

use rand::{RngCore, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::config::{EnvId, ExperimentConfig, ModelKind, OptimizerKind};
use super::episode::{eval_episode, train_episode, EpisodeStats, Rollout, Scheme};
use super::learner::Learner;
use super::metrics::{curve_auc, duration_histogram, emit_csv, seed_dir, CurvePoint, RunMetrics};
use super::multi::{eval_pursuit_episode, train_pursuit_episode};
use crate::approx::{checkpoint, ApproxQ, Architecture, Network, Optimizer, SavedPolicy};
use crate::error::{Error, Result};
use crate::grid::{parse_maze, shipped_maze, train_source_policy, GridEnv, GridTask, MappedExpert, Maze, SourcePolicy};
use crate::learning::{epsilon_schedule, QFunction, TabularQ};
use crate::pursuit::{parse_scenario, PursuitWorld, Scenario};
use crate::space::{EnhancedActionSpace, ExpertPolicy};

/// Sweep budget for exact source-policy training.
pub const SOURCE_SWEEPS: usize = 10_000;
/// Scale between the small maze and its enlargement.
pub const LARGE_SCALE: usize = 3;
/// Moving obstacles in `pursuit-dynamic`.
pub const DYNAMIC_OBSTACLES: usize = 2;

const STREAM_ENV: u64 = 1;
const STREAM_AGENT: u64 = 2;
const STREAM_REPLAY: u64 = 3;
const STREAM_INIT: u64 = 4;
const STREAM_VALIDATION: u64 = 5;
const STREAM_SOURCE: u64 = 6;

/// Independent seed for one purpose of a run.
pub fn derive_seed(seed: u64, stream: u64) -> u64 {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(stream);
    rng.next_u64()
}

/// Expert acting on grid cells: a source policy used in place, or one read
/// through the linear state mapping.
#[derive(Clone, Debug)]
pub enum GridExpert {
    Source(SourcePolicy),
    Mapped(MappedExpert),
}

impl ExpertPolicy<usize> for GridExpert {
    fn act(&self, s: &usize) -> usize {
        match self {
            GridExpert::Source(p) => p.act(s),
            GridExpert::Mapped(p) => p.act(s),
        }
    }
}

/// Target task and the experts available to it.
#[derive(Clone, Debug)]
pub struct GridSetup {
    pub task: GridTask,
    pub experts: Vec<GridExpert>,
}

fn read_text(path: &Path) -> Result<String> {
    fs::read_to_string(path).map_err(|e| Error::io(path, e))
}

fn load_maze(cfg: &ExperimentConfig) -> Result<Maze> {
    match &cfg.maze_file {
        Some(p) => parse_maze(&read_text(p)?),
        None => Ok(shipped_maze()),
    }
}

/// Builds the target task and trains the source experts.
pub fn grid_setup(cfg: &ExperimentConfig, seed: u64) -> Result<GridSetup> {
    let small = load_maze(cfg)?;
    let (maze, scale) = match cfg.environment {
        EnvId::GridSmall => (small.clone(), 1),
        EnvId::GridLargeG1 | EnvId::GridLargeG2 => (small.enlarge(LARGE_SCALE)?, LARGE_SCALE),
        other => return Err(Error::invalid(format!("{other} is not a grid environment"))),
    };
    let mut task = GridTask::new(maze.clone(), cfg.target)?;
    task.gamma = cfg.hp.gamma;
    task.max_steps = cfg.hp.max_episode_steps;
    let mut experts = Vec::new();
    if cfg.algorithm.uses_macros() || cfg.algorithm == super::config::Algorithm::Shaping {
        for (k, goal) in cfg.expert_goals.iter().enumerate() {
            let source_task = GridTask::new(small.clone(), *goal)?;
            let policy = train_source_policy(&source_task, SOURCE_SWEEPS, derive_seed(seed, STREAM_SOURCE + k as u64))?;
            experts.push(if scale == 1 {
                GridExpert::Source(policy)
            } else {
                GridExpert::Mapped(MappedExpert::new(&policy, &maze, scale)?)
            });
        }
    }
    Ok(GridSetup { task, experts })
}

/// Arena for a pursuit environment.
pub fn pursuit_scenario(cfg: &ExperimentConfig) -> Result<Scenario> {
    let mut sc = match &cfg.scenario_file {
        Some(p) => parse_scenario(&read_text(p)?)?,
        None => Scenario::shipped(),
    };
    match cfg.environment {
        EnvId::Pursuit => {}
        EnvId::PursuitDynamic => sc.dynamic_obstacles = DYNAMIC_OBSTACLES,
        other => return Err(Error::invalid(format!("{other} is not a pursuit environment"))),
    }
    sc.max_steps = cfg.hp.max_episode_steps;
    sc.validate()?;
    Ok(sc)
}

/// Network input for a grid cell: coordinates scaled to `[0, 1]`.
pub fn cell_features(maze: &Maze, s: usize) -> Vec<f64> {
    let (x, y) = maze.cell(s);
    let span = |n: usize| (n.max(2) - 1) as f64;
    vec![x as f64 / span(maze.width()), y as f64 / span(maze.height())]
}

fn new_network(cfg: &ExperimentConfig, inputs: usize, outputs: usize, seed: u64) -> Result<ApproxQ> {
    let arch = match cfg.model {
        ModelKind::Dueling => Architecture::dueling_default(inputs, outputs),
        _ => Architecture::plain_default(inputs, outputs),
    };
    let net = Network::new(arch, &mut ChaCha8Rng::seed_from_u64(derive_seed(seed, STREAM_INIT)))?;
    let opt = match cfg.optimizer {
        OptimizerKind::Adam => Optimizer::adam(cfg.hp.learning_rate),
        OptimizerKind::Sgd => Optimizer::sgd(cfg.hp.learning_rate),
    };
    Ok(ApproxQ::new(net, opt))
}

trait Snapshot {
    fn saved(&self) -> SavedPolicy;
}

impl Snapshot for TabularQ {
    fn saved(&self) -> SavedPolicy {
        SavedPolicy::Table(self.clone())
    }
}

impl Snapshot for ApproxQ {
    fn saved(&self) -> SavedPolicy {
        SavedPolicy::Network(self.net.clone())
    }
}

/// A training loop over one environment family.
trait Session {
    fn episode(&mut self, epsilon: f64, rng: &mut ChaCha8Rng) -> Result<EpisodeStats>;
    fn train(&mut self) -> Result<Vec<f64>>;
    fn policy(&self) -> SavedPolicy;
}

struct GridSession<S, Q> {
    env: GridEnv,
    experts: Vec<GridExpert>,
    features: Box<dyn Fn(&usize) -> S + Send>,
    learner: Learner<S, Q>,
    scheme: Scheme,
}

impl<S: Clone, Q: QFunction<S> + Snapshot> Session for GridSession<S, Q> {
    fn episode(&mut self, epsilon: f64, rng: &mut ChaCha8Rng) -> Result<EpisodeStats> {
        train_episode(
            &mut self.env,
            &self.experts,
            &self.features,
            &mut self.learner,
            &self.scheme,
            epsilon,
            rng,
        )
    }

    fn train(&mut self) -> Result<Vec<f64>> {
        self.learner.train()
    }

    fn policy(&self) -> SavedPolicy {
        self.learner.q.saved()
    }
}

struct PursuitSession {
    world: PursuitWorld,
    learner: Learner<Vec<f64>, ApproxQ>,
    scheme: Scheme,
}

impl Session for PursuitSession {
    fn episode(&mut self, epsilon: f64, rng: &mut ChaCha8Rng) -> Result<EpisodeStats> {
        train_pursuit_episode(&mut self.world, &mut self.learner, &self.scheme, epsilon, rng)
    }

    fn train(&mut self) -> Result<Vec<f64>> {
        self.learner.train()
    }

    fn policy(&self) -> SavedPolicy {
        self.learner.q.saved()
    }
}

fn build_session(cfg: &ExperimentConfig, seed: u64) -> Result<Box<dyn Session>> {
    let space = cfg.space()?;
    let scheme = Scheme::new(cfg.algorithm, &cfg.hp);
    let replay_seed = derive_seed(seed, STREAM_REPLAY);
    if cfg.environment.is_grid() {
        let setup = grid_setup(cfg, seed)?;
        let env = GridEnv::new(setup.task.clone(), derive_seed(seed, STREAM_ENV))?;
        let maze = setup.task.maze.clone();
        if cfg.model == ModelKind::Tabular {
            let q = TabularQ::new(maze.num_free(), space.len(), cfg.step_size());
            return Ok(Box::new(GridSession {
                env,
                experts: setup.experts,
                features: Box::new(|s: &usize| *s),
                learner: Learner::new(q, space, &cfg.hp, cfg.online_updates, replay_seed)?,
                scheme,
            }));
        }
        let q = new_network(cfg, 2, space.len(), seed)?;
        return Ok(Box::new(GridSession {
            env,
            experts: setup.experts,
            features: Box::new(move |s: &usize| cell_features(&maze, *s)),
            learner: Learner::new(q, space, &cfg.hp, false, replay_seed)?,
            scheme,
        }));
    }
    let world = PursuitWorld::new(pursuit_scenario(cfg)?, derive_seed(seed, STREAM_ENV))?;
    let q = new_network(cfg, crate::pursuit::OBS_WIDTH, space.len(), seed)?;
    Ok(Box::new(PursuitSession {
        world,
        learner: Learner::new(q, space, &cfg.hp, false, replay_seed)?,
        scheme,
    }))
}

fn checkpoint_path(dir: &Path, episode: u64) -> PathBuf {
    dir.join("checkpoints").join(format!("ep{episode:06}.easq"))
}

fn save_policy(policy: &SavedPolicy, path: &Path) -> Result<()> {
    if let Some(parent) = path.parent() {
        fs::create_dir_all(parent).map_err(|e| Error::io(parent, e))?;
    }
    checkpoint::save(policy, path)
}

/// Trains one seed: per episode act, store, replay-update; every
/// `checkpoint_interval` episodes record a curve point and save the policy.
/// The best checkpoint is validated greedily at the end.
pub fn run_seed(cfg: &ExperimentConfig, seed: u64) -> Result<RunMetrics> {
    cfg.validate()?;
    let start = Instant::now();
    let mut session = build_session(cfg, seed)?;
    let mut rng = ChaCha8Rng::seed_from_u64(derive_seed(seed, STREAM_AGENT));
    let dir = seed_dir(&cfg.output_dir, seed);
    let mut metrics = RunMetrics::empty(seed);
    let mut best: Option<(f64, SavedPolicy)> = None;
    let (mut wins, mut episodes, mut loss_sum, mut loss_count) = (0usize, 0usize, 0.0, 0usize);
    let last = cfg.hp.max_episodes;
    for ep in 1..=last {
        let epsilon = epsilon_schedule(ep, &cfg.hp);
        let stats = session.episode(epsilon, &mut rng)?;
        let losses = session.train()?;
        wins += usize::from(stats.success);
        episodes += 1;
        for l in stats.losses.iter().chain(&losses) {
            loss_sum += l;
            loss_count += 1;
        }
        if ep % cfg.checkpoint_interval == 0 || ep == last {
            let rate = wins as f64 / episodes as f64;
            metrics.curve.push(CurvePoint {
                episode: ep,
                success_rate: rate,
                epsilon,
                mean_loss: if loss_count == 0 { f64::NAN } else { loss_sum / loss_count as f64 },
            });
            let policy = session.policy();
            save_policy(&policy, &checkpoint_path(&dir, ep))?;
            if best.as_ref().is_none_or(|(b, _)| rate > *b) {
                save_policy(&policy, &dir.join("best.easq"))?;
                best = Some((rate, policy));
            }
            (wins, episodes, loss_sum, loss_count) = (0, 0, 0.0, 0);
        }
    }
    if let Some((_, policy)) = best {
        let v = run_validation(
            cfg,
            &policy,
            &ValidationOptions {
                episodes: cfg.validation_episodes,
                seed,
                ..ValidationOptions::default()
            },
        )?;
        metrics.final_success = v.success_rate;
        let durations: Vec<Vec<u32>> = v.rollouts.into_iter().map(|r| r.durations).collect();
        metrics.durations = duration_histogram(&durations, cfg.hp.max_duration);
        metrics.checkpoint = Some(dir.join("best.easq"));
    }
    metrics.auc = curve_auc(&metrics.curve);
    metrics.wall_clock = start.elapsed();
    Ok(metrics)
}

/// Trains every configured seed, each on its own thread, and returns the
/// metrics sorted by seed.
pub fn run_training(cfg: &ExperimentConfig) -> Result<Vec<RunMetrics>> {
    cfg.validate()?;
    let results: Vec<Result<RunMetrics>> = std::thread::scope(|scope| {
        let handles: Vec<_> = cfg
            .seeds
            .iter()
            .map(|&seed| scope.spawn(move || run_seed(cfg, seed)))
            .collect();
        handles
            .into_iter()
            .map(|h| h.join().unwrap_or_else(|_| Err(Error::Internal("training thread panicked".into()))))
            .collect()
    });
    let mut out = results.into_iter().collect::<Result<Vec<_>>>()?;
    out.sort_by_key(|m| m.seed);
    Ok(out)
}

/// Settings of an evaluation run.
#[derive(Clone, Debug)]
pub struct ValidationOptions {
    pub episodes: usize,
    /// ε = 0 when set; otherwise the final exploration rate is used.
    pub greedy: bool,
    /// Interrupt a running macro when another action beats it by more.
    pub c_l: Option<f64>,
    pub seed: u64,
    /// Record every interruption test.
    pub trace: bool,
}

impl Default for ValidationOptions {
    fn default() -> Self {
        Self {
            episodes: 1000,
            greedy: true,
            c_l: None,
            seed: 0,
            trace: false,
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct Validation {
    /// NaN for zero episodes.
    pub success_rate: f64,
    pub rollouts: Vec<Rollout>,
}

fn check_shape(policy_inputs: Option<usize>, want_inputs: usize, outputs: usize, space: &EnhancedActionSpace) -> Result<()> {
    if let Some(n) = policy_inputs {
        if n != want_inputs {
            return Err(Error::invalid(format!("policy expects {n} inputs, environment provides {want_inputs}")));
        }
    }
    if outputs != space.len() {
        return Err(Error::invalid(format!(
            "policy has {outputs} actions, the configured space has {}",
            space.len()
        )));
    }
    Ok(())
}

/// Evaluates a saved policy on the configured environment.
pub fn run_validation(cfg: &ExperimentConfig, policy: &SavedPolicy, opts: &ValidationOptions) -> Result<Validation> {
    let space = cfg.space()?;
    let epsilon = if opts.greedy { 0.0 } else { cfg.hp.epsilon_final };
    let env_seed = derive_seed(opts.seed, STREAM_VALIDATION);
    let mut rng = ChaCha8Rng::seed_from_u64(derive_seed(opts.seed, STREAM_VALIDATION + 100));
    let mut rollouts = Vec::with_capacity(opts.episodes);
    if cfg.environment.is_grid() {
        let setup = grid_setup(cfg, opts.seed)?;
        let maze = setup.task.maze.clone();
        let mut env = GridEnv::new(setup.task.clone(), env_seed)?;
        match policy {
            SavedPolicy::Table(q) => {
                if q.num_states() != maze.num_free() {
                    return Err(Error::invalid(format!(
                        "policy covers {} states, maze has {} free cells",
                        q.num_states(),
                        maze.num_free()
                    )));
                }
                check_shape(None, 0, q.num_actions(), &space)?;
                for _ in 0..opts.episodes {
                    rollouts.push(eval_episode(
                        &mut env,
                        &setup.experts,
                        &|s: &usize| *s,
                        q,
                        &space,
                        epsilon,
                        &mut rng,
                        opts.c_l,
                        opts.trace,
                    )?);
                }
            }
            SavedPolicy::Network(net) => {
                check_shape(Some(net.num_inputs()), 2, net.num_outputs(), &space)?;
                let q = ApproxQ::new(net.clone(), Optimizer::sgd(cfg.hp.learning_rate));
                for _ in 0..opts.episodes {
                    rollouts.push(eval_episode(
                        &mut env,
                        &setup.experts,
                        &|s: &usize| cell_features(&maze, *s),
                        &q,
                        &space,
                        epsilon,
                        &mut rng,
                        opts.c_l,
                        opts.trace,
                    )?);
                }
            }
        }
    } else {
        let SavedPolicy::Network(net) = policy else {
            return Err(Error::invalid("pursuit needs a network policy"));
        };
        check_shape(Some(net.num_inputs()), crate::pursuit::OBS_WIDTH, net.num_outputs(), &space)?;
        let q = ApproxQ::new(net.clone(), Optimizer::sgd(cfg.hp.learning_rate));
        let mut world = PursuitWorld::new(pursuit_scenario(cfg)?, env_seed)?;
        for _ in 0..opts.episodes {
            rollouts.push(eval_pursuit_episode(&mut world, &q, &space, epsilon, &mut rng, opts.c_l, opts.trace)?);
        }
    }
    let success_rate = if rollouts.is_empty() {
        f64::NAN
    } else {
        rollouts.iter().filter(|r| r.success).count() as f64 / rollouts.len() as f64
    };
    Ok(Validation { success_rate, rollouts })
}

/// One cell of a τ0 × c sweep.
#[derive(Clone, Debug, PartialEq)]
pub struct SweepRow {
    pub max_duration: u32,
    pub bonus_scale: f64,
    pub mean_auc: f64,
    pub mean_final_success: f64,
}

fn mean(xs: impl Iterator<Item = f64>) -> f64 {
    let v: Vec<f64> = xs.collect();
    if v.is_empty() {
        f64::NAN
    } else {
        v.iter().sum::<f64>() / v.len() as f64
    }
}

/// Trains every `(τ0, c)` combination into `tau<τ0>_c<c>/` under the output
/// directory and writes `sweep.csv` with the seed-averaged results.
pub fn run_sweep(cfg: &ExperimentConfig, durations: &[u32], bonuses: &[f64]) -> Result<Vec<SweepRow>> {
    let mut rows = Vec::new();
    for &tau in durations {
        for &c in bonuses {
            let mut cell = cfg.clone();
            cell.hp.max_duration = tau;
            cell.hp.bonus_scale = c;
            cell.output_dir = cfg.output_dir.join(format!("tau{tau}_c{c}"));
            let metrics = run_training(&cell)?;
            emit_csv(&metrics, &cell.output_dir)?;
            rows.push(SweepRow {
                max_duration: tau,
                bonus_scale: c,
                mean_auc: mean(metrics.iter().map(|m| m.auc)),
                mean_final_success: mean(metrics.iter().map(|m| m.final_success)),
            });
        }
    }
    let path = cfg.output_dir.join("sweep.csv");
    fs::create_dir_all(&cfg.output_dir).map_err(|e| Error::io(&cfg.output_dir, e))?;
    let mut text = String::from("max_duration,bonus_scale,mean_auc,mean_final_success\n");
    for r in &rows {
        text.push_str(&format!(
            "{},{},{},{}\n",
            r.max_duration, r.bonus_scale, r.mean_auc, r.mean_final_success
        ));
    }
    fs::write(&path, text).map_err(|e| Error::io(&path, e))?;
    Ok(rows)
}
