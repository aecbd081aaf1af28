use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::{Context, Result};
use clap::{Parser, Subcommand};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use easpace::approx::checkpoint;
use easpace::harness::{
    emit_csv, parse_override, parse_pairs, run_sweep, run_training, run_validation, ExperimentConfig,
    ValidationOptions,
};
use easpace::oracle::{
    apply_h, contraction_check, monotonicity_check, parse_mdp, value_iteration, value_iteration_from, QTable,
    RandomFamily,
};
use easpace::pursuit::{parse_scenario, write_scenario, Scenario};
use easpace::Error;

#[derive(Parser)]
#[command(name = "easpace", version, about = "Enhanced action space experiments")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(clap::Args)]
struct ConfigArgs {
    /// Flat key=value config file.
    #[arg(long, short)]
    config: Option<PathBuf>,
    /// Override one key, e.g. `--set gamma=0.9`. Repeatable.
    #[arg(long = "set", value_name = "KEY=VALUE")]
    overrides: Vec<String>,
}

impl ConfigArgs {
    fn load(&self) -> Result<ExperimentConfig> {
        let mut pairs = match &self.config {
            Some(path) => {
                let text = fs::read_to_string(path).map_err(|e| Error::Io {
                    path: path.clone(),
                    source: e,
                })?;
                parse_pairs(&text).with_context(|| format!("reading {}", path.display()))?
            }
            None => Vec::new(),
        };
        for o in &self.overrides {
            pairs.push(parse_override(o)?);
        }
        Ok(ExperimentConfig::from_pairs(&pairs)?)
    }
}

#[derive(Subcommand)]
enum Command {
    /// Train every configured seed and write the CSV metrics.
    Train {
        #[command(flatten)]
        cfg: ConfigArgs,
    },
    /// Evaluate a saved policy.
    Validate {
        #[command(flatten)]
        cfg: ConfigArgs,
        #[arg(long)]
        checkpoint: PathBuf,
        #[arg(long, default_value_t = 1000)]
        episodes: usize,
        /// Interruption threshold; omit to run macros to completion.
        #[arg(long)]
        c_l: Option<f64>,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        /// Keep the final exploration rate instead of acting greedily.
        #[arg(long)]
        explore: bool,
    },
    /// Check the operator on random instances, or solve one instance file.
    Oracle {
        #[arg(long, default_value_t = 100)]
        instances: usize,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        /// Solve this instance and print Q*.
        #[arg(long)]
        file: Option<PathBuf>,
    },
    /// Train over a grid of macro lengths and bonus scales.
    Sweep {
        #[command(flatten)]
        cfg: ConfigArgs,
        #[arg(long, value_delimiter = ',', default_values_t = vec![5u32, 10, 20])]
        tau: Vec<u32>,
        #[arg(long, value_delimiter = ',', default_values_t = vec![0.0, 0.01, 0.1])]
        bonus: Vec<f64>,
    },
    /// Print or check scenario files.
    Scenario {
        #[command(subcommand)]
        action: ScenarioAction,
    },
}

#[derive(Subcommand)]
enum ScenarioAction {
    /// Print the shipped scenario (or a parsed file) in canonical form.
    Dump { file: Option<PathBuf> },
    /// Parse and validate a scenario file.
    Check { file: PathBuf },
}

fn read(path: &Path) -> Result<String> {
    Ok(fs::read_to_string(path).map_err(|e| Error::Io {
        path: path.to_path_buf(),
        source: e,
    })?)
}

fn train(cfg: &ExperimentConfig) -> Result<()> {
    let metrics = run_training(cfg)?;
    emit_csv(&metrics, &cfg.output_dir)?;
    for m in &metrics {
        println!(
            "seed {}: auc {:.4}, final success {:.4}, {:.1}s",
            m.seed,
            m.auc,
            m.final_success,
            m.wall_clock.as_secs_f64()
        );
    }
    println!("wrote {}", cfg.output_dir.display());
    Ok(())
}

fn oracle(instances: usize, seed: u64, file: Option<&Path>) -> Result<()> {
    if let Some(path) = file {
        let m = parse_mdp(&read(path)?).with_context(|| format!("parsing {}", path.display()))?;
        let q = value_iteration(&m, 1e-10)?;
        let residual = apply_h(&q, &m).sup_distance(&q);
        println!("residual {residual:.3e}");
        for s in 0..q.num_states() {
            let row: Vec<String> = q.row(s).iter().map(|v| format!("{v:.6}")).collect();
            println!("{s}: {}", row.join(" "));
        }
        return Ok(());
    }
    let family = RandomFamily::default();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let (mut contraction, mut fixed, mut monotone) = (0, 0, 0);
    for _ in 0..instances {
        let m = family.sample(&mut rng);
        let (n_s, n_a) = (m.num_states(), m.space().len());
        let mut random_q = || {
            let data = (0..n_s * n_a).map(|_| rng.random_range(-10.0..10.0)).collect();
            QTable::from_vec(n_s, n_a, data)
        };
        let (qj, qk) = (random_q()?, random_q()?);
        contraction += usize::from(contraction_check(&m, &qj, &qk));
        let q = value_iteration(&m, 1e-11)?;
        let (other, _) = value_iteration_from(&m, qj, 1e-11)?;
        let residual = apply_h(&q, &m).sup_distance(&q);
        fixed += usize::from(residual < 1e-9 && q.sup_distance(&other) < 1e-8);
        monotone += usize::from(monotonicity_check(&q, &m));
    }
    println!("contraction  {contraction}/{instances}");
    println!("fixed point  {fixed}/{instances}");
    println!("monotonicity {monotone}/{instances}");
    if contraction + fixed + monotone != 3 * instances {
        anyhow::bail!(Error::Internal("operator battery failed".into()));
    }
    Ok(())
}

fn run(cli: Cli) -> Result<()> {
    match cli.command {
        Command::Train { cfg } => train(&cfg.load()?),
        Command::Validate {
            cfg,
            checkpoint: path,
            episodes,
            c_l,
            seed,
            explore,
        } => {
            let cfg = cfg.load()?;
            let policy = checkpoint::load(&path)?;
            let opts = ValidationOptions {
                episodes,
                greedy: !explore,
                c_l,
                seed,
                trace: false,
            };
            let v = run_validation(&cfg, &policy, &opts)?;
            println!("success rate {} over {episodes} episodes", v.success_rate);
            Ok(())
        }
        Command::Oracle { instances, seed, file } => oracle(instances, seed, file.as_deref()),
        Command::Sweep { cfg, tau, bonus } => {
            let cfg = cfg.load()?;
            for r in run_sweep(&cfg, &tau, &bonus)? {
                println!(
                    "tau0 {:>3}  c {:<6}  auc {:.4}  final {:.4}",
                    r.max_duration, r.bonus_scale, r.mean_auc, r.mean_final_success
                );
            }
            Ok(())
        }
        Command::Scenario { action } => match action {
            ScenarioAction::Dump { file } => {
                let sc = match file {
                    Some(p) => parse_scenario(&read(&p)?)?,
                    None => Scenario::shipped(),
                };
                print!("{}", write_scenario(&sc));
                Ok(())
            }
            ScenarioAction::Check { file } => {
                let sc = parse_scenario(&read(&file)?).with_context(|| format!("checking {}", file.display()))?;
                println!(
                    "ok: {}x{} arena, {} obstacles, {} pursuers",
                    sc.arena.width,
                    sc.arena.height,
                    sc.arena.obstacles.len(),
                    sc.num_pursuers
                );
                Ok(())
            }
        },
    }
}

fn exit_code(err: &anyhow::Error) -> u8 {
    match err.downcast_ref::<Error>() {
        Some(Error::InvalidArgument(_) | Error::Parse { .. }) => 2,
        Some(Error::TrainingFailure(_)) => 3,
        Some(Error::Io { .. }) => 4,
        _ => 1,
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(err) => {
            // library errors already quote their source
            let mut msg = err.to_string();
            for cause in err.chain().skip(1) {
                let text = cause.to_string();
                if !msg.contains(&text) {
                    msg = format!("{msg}: {text}");
                }
            }
            eprintln!("error: {msg}");
            ExitCode::from(exit_code(&err))
        }
    }
}
