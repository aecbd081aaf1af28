use std::collections::HashSet;
use std::fmt;
use std::fmt::Write as _;
use std::path::PathBuf;
use std::str::FromStr;

use crate::error::{Error, Result};
use crate::learning::{Hyperparams, StepSize};
use crate::space::EnhancedActionSpace;

/// Benchmark environment.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum EnvId {
    /// Shipped 17×17 maze, target `a`, experts for G1 and G2 used in place.
    GridSmall,
    /// 51×51 enlargement, target `a`, four mapped experts.
    GridLargeG1,
    /// 51×51 enlargement, target `b`, four mapped experts.
    GridLargeG2,
    Pursuit,
    /// Pursuit with two moving obstacles.
    PursuitDynamic,
}

impl EnvId {
    pub const ALL: [EnvId; 5] = [
        EnvId::GridSmall,
        EnvId::GridLargeG1,
        EnvId::GridLargeG2,
        EnvId::Pursuit,
        EnvId::PursuitDynamic,
    ];

    pub fn name(self) -> &'static str {
        match self {
            EnvId::GridSmall => "grid-small",
            EnvId::GridLargeG1 => "grid-large-g1",
            EnvId::GridLargeG2 => "grid-large-g2",
            EnvId::Pursuit => "pursuit",
            EnvId::PursuitDynamic => "pursuit-dynamic",
        }
    }

    pub fn is_grid(self) -> bool {
        matches!(self, EnvId::GridSmall | EnvId::GridLargeG1 | EnvId::GridLargeG2)
    }
}

impl fmt::Display for EnvId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for EnvId {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, String> {
        EnvId::ALL
            .into_iter()
            .find(|e| e.name() == s)
            .ok_or_else(|| format!("unknown environment `{s}`"))
    }
}

/// Learning algorithm.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Algorithm {
    EaSpace,
    /// Macros in the action space, one update per completed macro.
    Smdp,
    /// Primitive actions only.
    Dqn,
    /// Primitive actions plus potential-based advice from the experts.
    Shaping,
    /// EASpace with the macro bonus forced to zero.
    NoBonus,
}

impl Algorithm {
    pub const ALL: [Algorithm; 5] = [
        Algorithm::EaSpace,
        Algorithm::Smdp,
        Algorithm::Dqn,
        Algorithm::Shaping,
        Algorithm::NoBonus,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Algorithm::EaSpace => "easpace",
            Algorithm::Smdp => "smdp",
            Algorithm::Dqn => "dqn",
            Algorithm::Shaping => "shaping",
            Algorithm::NoBonus => "no-bonus",
        }
    }

    /// Whether expert macros are part of the action space.
    pub fn uses_macros(self) -> bool {
        matches!(self, Algorithm::EaSpace | Algorithm::Smdp | Algorithm::NoBonus)
    }

    /// Effective macro bonus scale.
    pub fn bonus(self, hp: &Hyperparams) -> f64 {
        match self {
            Algorithm::EaSpace | Algorithm::Smdp => hp.bonus_scale,
            _ => 0.0,
        }
    }
}

impl fmt::Display for Algorithm {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Algorithm {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, String> {
        Algorithm::ALL
            .into_iter()
            .find(|a| a.name() == s)
            .ok_or_else(|| format!("unknown algorithm `{s}`"))
    }
}

/// Q-function representation.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum ModelKind {
    Tabular,
    Mlp,
    Dueling,
}

impl ModelKind {
    pub fn name(self) -> &'static str {
        match self {
            ModelKind::Tabular => "tabular",
            ModelKind::Mlp => "mlp",
            ModelKind::Dueling => "dueling",
        }
    }
}

impl FromStr for ModelKind {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, String> {
        match s {
            "tabular" => Ok(ModelKind::Tabular),
            "mlp" => Ok(ModelKind::Mlp),
            "dueling" => Ok(ModelKind::Dueling),
            _ => Err(format!("unknown model `{s}`")),
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum OptimizerKind {
    Adam,
    Sgd,
}

impl FromStr for OptimizerKind {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, String> {
        match s {
            "adam" => Ok(OptimizerKind::Adam),
            "sgd" => Ok(OptimizerKind::Sgd),
            _ => Err(format!("unknown optimizer `{s}`")),
        }
    }
}

/// Everything a training run needs.
#[derive(Clone, Debug, PartialEq)]
pub struct ExperimentConfig {
    pub environment: EnvId,
    pub algorithm: Algorithm,
    pub model: ModelKind,
    pub optimizer: OptimizerKind,
    pub hp: Hyperparams,
    pub seeds: Vec<u64>,
    pub validation_episodes: usize,
    pub checkpoint_interval: u64,
    pub output_dir: PathBuf,
    /// Constant step size of the tabular model.
    pub tabular_alpha: f64,
    /// Per-entry decaying step `(1+n)^−k` instead of the constant one.
    pub tabular_decay: Option<f64>,
    /// Tabular only: also apply every stored transition immediately.
    pub online_updates: bool,
    pub maze_file: Option<PathBuf>,
    pub scenario_file: Option<PathBuf>,
    /// Grid only: goal label of the target task.
    pub target: char,
    /// Grid only: goal labels whose source policies become experts.
    pub expert_goals: Vec<char>,
}

impl ExperimentConfig {
    /// Defaults for an environment/algorithm pair.
    pub fn new(environment: EnvId, algorithm: Algorithm) -> Self {
        let grid = environment.is_grid();
        Self {
            environment,
            algorithm,
            model: if grid { ModelKind::Tabular } else { ModelKind::Dueling },
            optimizer: OptimizerKind::Adam,
            hp: if grid { Hyperparams::grid() } else { Hyperparams::pursuit() },
            seeds: vec![0],
            validation_episodes: 1000,
            checkpoint_interval: 250,
            output_dir: PathBuf::from("runs"),
            tabular_alpha: 0.1,
            tabular_decay: None,
            online_updates: false,
            maze_file: None,
            scenario_file: None,
            target: if environment == EnvId::GridLargeG2 { 'b' } else { 'a' },
            expert_goals: match environment {
                EnvId::GridSmall => vec!['4', '2'],
                EnvId::GridLargeG1 | EnvId::GridLargeG2 => vec!['1', '2', '3', '4'],
                _ => Vec::new(),
            },
        }
    }

    /// Action space the algorithm acts in.
    pub fn space(&self) -> Result<EnhancedActionSpace> {
        let primitives = if self.environment.is_grid() {
            crate::grid::MOVES.len()
        } else {
            crate::pursuit::NUM_HEADINGS
        };
        let experts = if !self.algorithm.uses_macros() {
            0
        } else if self.environment.is_grid() {
            self.expert_goals.len()
        } else {
            2
        };
        EnhancedActionSpace::build(primitives, experts, self.hp.max_duration)
    }

    pub fn step_size(&self) -> StepSize {
        match self.tabular_decay {
            Some(exponent) => StepSize::Decaying { exponent },
            None => StepSize::Constant(self.tabular_alpha),
        }
    }

    pub fn validate(&self) -> Result<()> {
        self.hp.validate()?;
        if self.seeds.is_empty() {
            return Err(Error::invalid("at least one seed is required"));
        }
        let mut seen = HashSet::new();
        if let Some(s) = self.seeds.iter().find(|s| !seen.insert(**s)) {
            return Err(Error::invalid(format!("seed {s} listed twice")));
        }
        if self.checkpoint_interval == 0 {
            return Err(Error::invalid("checkpoint_interval must be positive"));
        }
        if self.model == ModelKind::Tabular && !self.environment.is_grid() {
            return Err(Error::invalid(format!("the tabular model cannot represent {}", self.environment)));
        }
        if self.online_updates && self.model != ModelKind::Tabular {
            return Err(Error::invalid("online_updates requires the tabular model"));
        }
        if !(self.tabular_alpha > 0.0 && self.tabular_alpha <= 1.0) {
            return Err(Error::invalid("tabular_alpha must lie in (0,1]"));
        }
        if let Some(k) = self.tabular_decay {
            if !(k > 0.5 && k <= 1.0) {
                return Err(Error::invalid("tabular_decay must lie in (0.5,1]"));
            }
        }
        if self.environment.is_grid() {
            if self.expert_goals.contains(&self.target) {
                return Err(Error::invalid(format!("goal '{}' is both target and expert", self.target)));
            }
            let mut seen = HashSet::new();
            if let Some(g) = self.expert_goals.iter().find(|g| !seen.insert(**g)) {
                return Err(Error::invalid(format!("expert goal '{g}' listed twice")));
            }
        }
        if self.environment.is_grid() && self.scenario_file.is_some() {
            return Err(Error::invalid("scenario_file applies to pursuit environments only"));
        }
        if !self.environment.is_grid() && self.maze_file.is_some() {
            return Err(Error::invalid("maze_file applies to grid environments only"));
        }
        Ok(())
    }

    /// Sets one key from its textual value.
    pub fn set(&mut self, key: &str, value: &str) -> Result<(), String> {
        let hp = &mut self.hp;
        match key {
            "environment" => self.environment = value.parse()?,
            "algorithm" => self.algorithm = value.parse()?,
            "model" => self.model = value.parse()?,
            "optimizer" => self.optimizer = value.parse()?,
            "seeds" => self.seeds = parse_seeds(value)?,
            "validation_episodes" => self.validation_episodes = num(value)?,
            "checkpoint_interval" => self.checkpoint_interval = num(value)?,
            "output_dir" => self.output_dir = path(value)?,
            "tabular_alpha" => self.tabular_alpha = num(value)?,
            "tabular_decay" => {
                self.tabular_decay = if value == "none" { None } else { Some(num(value)?) }
            }
            "online_updates" => self.online_updates = flag(value)?,
            "maze_file" => self.maze_file = Some(path(value)?),
            "scenario_file" => self.scenario_file = Some(path(value)?),
            "target" => self.target = goal_label(value)?,
            "experts" => {
                self.expert_goals = if value.is_empty() {
                    Vec::new()
                } else {
                    value.split(',').map(|g| goal_label(g.trim())).collect::<Result<_, _>>()?
                }
            }
            "learning_rate" => hp.learning_rate = num(value)?,
            "gamma" => hp.gamma = num(value)?,
            "bonus_scale" => hp.bonus_scale = num(value)?,
            "max_duration" => hp.max_duration = num(value)?,
            "minibatch" => hp.minibatch = num(value)?,
            "memory_size" => hp.memory_size = num(value)?,
            "epsilon_start" => hp.epsilon_start = num(value)?,
            "epsilon_final" => hp.epsilon_final = num(value)?,
            "final_exploration_episode" => hp.final_exploration_episode = num(value)?,
            "updates_per_episode" => hp.updates_per_episode = num(value)?,
            "target_sync_interval" => hp.target_sync_interval = num(value)?,
            "max_episode_steps" => hp.max_episode_steps = num(value)?,
            "max_episodes" => hp.max_episodes = num(value)?,
            "shaping_potential" => hp.shaping_potential = num(value)?,
            "double_q" => hp.double_q = flag(value)?,
            _ => return Err(format!("unknown key `{key}`")),
        }
        Ok(())
    }

    /// Builds a config from `(line, key, value)` triples. The environment and
    /// algorithm pick the defaults; every other key is applied in order.
    pub fn from_pairs(pairs: &[(usize, String, String)]) -> Result<Self> {
        let mut env = EnvId::GridSmall;
        let mut algo = Algorithm::EaSpace;
        for (line, key, value) in pairs {
            match key.as_str() {
                "environment" => env = value.parse().map_err(|m| Error::parse(*line, m))?,
                "algorithm" => algo = value.parse().map_err(|m| Error::parse(*line, m))?,
                _ => {}
            }
        }
        let mut cfg = Self::new(env, algo);
        for (line, key, value) in pairs {
            cfg.set(key, value).map_err(|m| Error::parse(*line, m))?;
        }
        cfg.validate()?;
        Ok(cfg)
    }

    /// Flat `key = value` rendering accepted by [`parse_config`].
    pub fn to_text(&self) -> String {
        let hp = &self.hp;
        let mut out = String::new();
        let mut put = |k: &str, v: String| {
            let _ = writeln!(out, "{k} = {v}");
        };
        put("environment", self.environment.to_string());
        put("algorithm", self.algorithm.to_string());
        put("model", self.model.name().into());
        put(
            "optimizer",
            match self.optimizer {
                OptimizerKind::Adam => "adam".into(),
                OptimizerKind::Sgd => "sgd".into(),
            },
        );
        put(
            "seeds",
            self.seeds.iter().map(u64::to_string).collect::<Vec<_>>().join(","),
        );
        put("validation_episodes", self.validation_episodes.to_string());
        put("checkpoint_interval", self.checkpoint_interval.to_string());
        put("output_dir", self.output_dir.display().to_string());
        put("tabular_alpha", self.tabular_alpha.to_string());
        put(
            "tabular_decay",
            self.tabular_decay.map_or("none".into(), |k| k.to_string()),
        );
        put("online_updates", self.online_updates.to_string());
        if let Some(p) = &self.maze_file {
            put("maze_file", p.display().to_string());
        }
        if let Some(p) = &self.scenario_file {
            put("scenario_file", p.display().to_string());
        }
        put("target", self.target.to_string());
        put(
            "experts",
            self.expert_goals.iter().map(char::to_string).collect::<Vec<_>>().join(","),
        );
        put("learning_rate", hp.learning_rate.to_string());
        put("gamma", hp.gamma.to_string());
        put("bonus_scale", hp.bonus_scale.to_string());
        put("max_duration", hp.max_duration.to_string());
        put("minibatch", hp.minibatch.to_string());
        put("memory_size", hp.memory_size.to_string());
        put("epsilon_start", hp.epsilon_start.to_string());
        put("epsilon_final", hp.epsilon_final.to_string());
        put("final_exploration_episode", hp.final_exploration_episode.to_string());
        put("updates_per_episode", hp.updates_per_episode.to_string());
        put("target_sync_interval", hp.target_sync_interval.to_string());
        put("max_episode_steps", hp.max_episode_steps.to_string());
        put("max_episodes", hp.max_episodes.to_string());
        put("shaping_potential", hp.shaping_potential.to_string());
        put("double_q", hp.double_q.to_string());
        out
    }
}

fn num<T: FromStr>(value: &str) -> Result<T, String> {
    value.parse().map_err(|_| format!("bad number `{value}`"))
}

fn flag(value: &str) -> Result<bool, String> {
    match value {
        "true" | "1" | "yes" => Ok(true),
        "false" | "0" | "no" => Ok(false),
        _ => Err(format!("bad boolean `{value}`")),
    }
}

fn path(value: &str) -> Result<PathBuf, String> {
    if value.is_empty() {
        Err("empty path".into())
    } else {
        Ok(PathBuf::from(value))
    }
}

fn goal_label(value: &str) -> Result<char, String> {
    let mut chars = value.chars();
    match (chars.next(), chars.next()) {
        (Some(c), None) if "1234ab".contains(c) => Ok(c),
        _ => Err(format!("bad goal label `{value}`")),
    }
}

fn parse_seeds(value: &str) -> Result<Vec<u64>, String> {
    value.split(',').map(|s| num(s.trim())).collect()
}

/// Splits config text into `(line, key, value)` triples. Duplicate keys
/// within one file are rejected.
pub fn parse_pairs(text: &str) -> Result<Vec<(usize, String, String)>> {
    let mut seen = HashSet::new();
    let mut pairs = Vec::new();
    for (idx, raw) in text.lines().enumerate() {
        let line = idx + 1;
        let body = raw.split('#').next().unwrap_or("").trim();
        if body.is_empty() {
            continue;
        }
        let (key, value) = body
            .split_once('=')
            .ok_or_else(|| Error::parse(line, "expected `key = value`"))?;
        let (key, value) = (key.trim(), value.trim());
        if key.is_empty() {
            return Err(Error::parse(line, "empty key"));
        }
        if !seen.insert(key.to_string()) {
            return Err(Error::parse(line, format!("duplicate key `{key}`")));
        }
        pairs.push((line, key.to_string(), value.to_string()));
    }
    Ok(pairs)
}

/// Parses a flat `key = value` config with `#` comments.
pub fn parse_config(text: &str) -> Result<ExperimentConfig> {
    ExperimentConfig::from_pairs(&parse_pairs(text)?)
}

/// Parses `key=value` command-line overrides; they carry line number 0.
pub fn parse_override(arg: &str) -> Result<(usize, String, String)> {
    let (k, v) = arg
        .split_once('=')
        .ok_or_else(|| Error::parse(0, format!("override `{arg}` is not key=value")))?;
    Ok((0, k.trim().to_string(), v.trim().to_string()))
}
