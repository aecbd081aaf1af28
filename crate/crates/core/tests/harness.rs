use std::fs;
use std::path::Path;

use easpace::approx::{checkpoint, Architecture, ApproxQ, Network, Optimizer};
use easpace::harness::{
    emit_csv, read_learning_curve, run_seed, run_training, run_validation, train_pursuit_episode, Algorithm, EnvId,
    ExperimentConfig, Learner, Scheme, ValidationOptions,
};
use easpace::pursuit::{PursuitWorld, Scenario, OBS_WIDTH};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use tempfile::tempdir;

fn small_grid(algo: Algorithm, out: &Path) -> ExperimentConfig {
    let mut cfg = ExperimentConfig::new(EnvId::GridSmall, algo);
    cfg.hp.max_episodes = 40;
    cfg.hp.final_exploration_episode = 30;
    cfg.hp.updates_per_episode = 20;
    cfg.hp.minibatch = 16;
    cfg.checkpoint_interval = 10;
    cfg.validation_episodes = 20;
    cfg.seeds = vec![3, 4];
    cfg.output_dir = out.to_path_buf();
    cfg
}

fn csv_files(dir: &Path) -> Vec<(String, Vec<u8>)> {
    let mut out = Vec::new();
    let mut stack = vec![dir.to_path_buf()];
    while let Some(d) = stack.pop() {
        for e in fs::read_dir(&d).unwrap() {
            let p = e.unwrap().path();
            if p.is_dir() {
                stack.push(p);
            } else if p.extension().is_some_and(|x| x == "csv") {
                out.push((p.strip_prefix(dir).unwrap().display().to_string(), fs::read(&p).unwrap()));
            }
        }
    }
    out.sort();
    out
}

#[test]
fn zero_budget_gives_empty_metrics() {
    let dir = tempdir().unwrap();
    let mut cfg = small_grid(Algorithm::EaSpace, dir.path());
    cfg.hp.max_episodes = 0;
    let ms = run_training(&cfg).unwrap();
    assert_eq!(ms.len(), 2);
    for m in &ms {
        assert!(m.curve.is_empty() && m.durations.is_empty() && m.checkpoint.is_none());
        assert!(m.auc.is_nan());
    }
    emit_csv(&ms, dir.path()).unwrap();
    let curve = read_learning_curve(&dir.path().join("seed-3/learning_curve.csv")).unwrap();
    assert!(curve.is_empty());
}

#[test]
fn same_seed_gives_identical_csvs() {
    let (a, b) = (tempdir().unwrap(), tempdir().unwrap());
    for d in [&a, &b] {
        let cfg = small_grid(Algorithm::EaSpace, d.path());
        emit_csv(&run_training(&cfg).unwrap(), d.path()).unwrap();
    }
    let (fa, fb) = (csv_files(a.path()), csv_files(b.path()));
    assert_eq!(fa.len(), 5);
    assert_eq!(fa, fb);
}

#[test]
fn zero_bonus_matches_no_bonus() {
    let (a, b) = (tempdir().unwrap(), tempdir().unwrap());
    let mut ea = small_grid(Algorithm::EaSpace, a.path());
    ea.hp.bonus_scale = 0.0;
    let nb = small_grid(Algorithm::NoBonus, b.path());
    let (x, y) = (run_seed(&ea, 3).unwrap(), run_seed(&nb, 3).unwrap());
    assert_eq!(x.curve, y.curve);
    assert_eq!(x.durations, y.durations);
    assert_eq!(x.final_success, y.final_success);
}

#[test]
fn best_checkpoint_reproduces_final_validation() {
    let dir = tempdir().unwrap();
    let cfg = small_grid(Algorithm::EaSpace, dir.path());
    let m = run_seed(&cfg, 4).unwrap();
    let policy = checkpoint::load(m.checkpoint.as_ref().unwrap()).unwrap();
    let opts = ValidationOptions {
        episodes: cfg.validation_episodes,
        seed: 4,
        ..ValidationOptions::default()
    };
    assert_eq!(run_validation(&cfg, &policy, &opts).unwrap().success_rate, m.final_success);
    // every interval leaves a checkpoint on disk
    let saved = fs::read_dir(dir.path().join("seed-4/checkpoints")).unwrap().count();
    assert_eq!(saved, 4);
}

#[test]
fn validation_edge_cases() {
    let dir = tempdir().unwrap();
    let cfg = small_grid(Algorithm::EaSpace, dir.path());
    let m = run_seed(&cfg, 3).unwrap();
    let policy = checkpoint::load(m.checkpoint.as_ref().unwrap()).unwrap();
    let none = ValidationOptions {
        episodes: 0,
        ..ValidationOptions::default()
    };
    assert!(run_validation(&cfg, &policy, &none).unwrap().success_rate.is_nan());

    // the same table cannot drive an agent with a different action count
    let dqn = small_grid(Algorithm::Dqn, dir.path());
    assert!(run_validation(&dqn, &policy, &ValidationOptions::default()).is_err());
}

#[test]
fn pursuit_storage_matches_fanout_sizes() {
    let mut cfg = ExperimentConfig::new(EnvId::Pursuit, Algorithm::EaSpace);
    cfg.hp.updates_per_episode = 0;
    let space = cfg.space().unwrap();
    let tau0 = cfg.hp.max_duration as usize;
    let mut rng = ChaCha8Rng::seed_from_u64(9);
    let net = Network::new(Architecture::dueling_default(OBS_WIDTH, space.len()), &mut rng).unwrap();
    let q = ApproxQ::new(net, Optimizer::adam(cfg.hp.learning_rate));
    let mut learner = Learner::new(q, space, &cfg.hp, false, 1).unwrap();
    let scenario = Scenario {
        max_steps: 120,
        ..Scenario::shipped()
    };
    let pursuers = scenario.num_pursuers;
    let mut world = PursuitWorld::new(scenario, 2).unwrap();
    let scheme = Scheme::new(Algorithm::EaSpace, &cfg.hp);
    let mut expected = 0u64;
    for _ in 0..3 {
        let s = train_pursuit_episode(&mut world, &mut learner, &scheme, 0.5, &mut rng).unwrap();
        let agent_steps = s.steps * pursuers;
        assert!(s.macro_steps > 0 && s.macro_steps < agent_steps);
        expected += ((agent_steps - s.macro_steps) + s.macro_steps * tau0) as u64;
    }
    assert_eq!(learner.stored(), expected);
    assert_eq!(learner.replay_len(), 0);
}
