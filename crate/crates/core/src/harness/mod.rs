//! Experiment orchestration: configuration, training loops with a shared
//! Q-function across pursuers, greedy validation with optional macro
//! interruption, learning-curve metrics and CSV output.

mod config;
mod episode;
mod learner;
mod metrics;
mod multi;
mod run;

pub use config::{parse_config, parse_override, parse_pairs, Algorithm, EnvId, ExperimentConfig, ModelKind, OptimizerKind};
pub use episode::{eval_episode, train_episode, EpisodeStats, ImaEvent, Rollout, Scheme};
pub use learner::{Learner, Stored, UpdateRecord};
pub use metrics::{
    auc, curve_auc, duration_histogram, emit_csv, read_durations, read_learning_curve, read_summary, seed_dir,
    CurvePoint, RunMetrics,
};
pub use multi::{eval_pursuit_episode, expert_bins, lower_pursuit, train_pursuit_episode, EXPERT_APF, EXPERT_WALL};
pub use run::{
    cell_features, derive_seed, grid_setup, pursuit_scenario, run_seed, run_sweep, run_training, run_validation,
    GridExpert, GridSetup, SweepRow, Validation, ValidationOptions, DYNAMIC_OBSTACLES, LARGE_SCALE, SOURCE_SWEEPS,
};
