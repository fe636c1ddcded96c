use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};

use tomcollab::config::{EnvConfig, ExperimentConfig};
use tomcollab::error::{Error, Result};
use tomcollab::game::AgentId;
use tomcollab::harness::{
    evaluate, evaluate_scripted, switch_eval, write_csv, EvalOptions, EvalReport, InformedChef, OwnFreeSlot, RandomSlot,
    Split, SplitGame, UniformPolicy,
};
use tomcollab::kitchen::KitchenGame;
use tomcollab::policy::ActMode;
use tomcollab::scheduling::SchedulingGame;
use tomcollab::trainer::{gradient_checks, Datasets, TeamCheckpoint, Trainer};

#[derive(Parser)]
#[command(name = "tomcollab", version, about = "Train and evaluate Theory-of-Mind agents on cooperative games")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Generate exclusive train/test splits.
    GenData(Common),
    /// Train a pair of agents on one split.
    Train(Common),
    /// Evaluate a trained team and the scripted baselines on the test split.
    Eval(Common),
    /// Evaluate two independently trained teams with their partners swapped.
    SwitchEval(Common),
    /// Compare analytic and finite-difference gradients of every network.
    GradCheck(Common),
}

#[derive(Clone, Copy, ValueEnum)]
enum Env {
    Kitchen,
    Scheduling,
}

#[derive(Args)]
struct Common {
    #[arg(long, value_enum)]
    env: Option<Env>,
    /// Flat key = value configuration file.
    #[arg(long)]
    config: Option<PathBuf>,
    /// Overrides the training seed (and, for gen-data, the split seed).
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long, default_value = "out")]
    out: PathBuf,
    /// Team checkpoint; switch-eval takes it twice.
    #[arg(long)]
    checkpoint: Vec<PathBuf>,
    /// Evaluation episodes.
    #[arg(long)]
    episodes: Option<usize>,
    /// Which generated split to use.
    #[arg(long, default_value_t = 0)]
    split: usize,
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::FAILURE
        }
    }
}

fn load_config(c: &Common) -> Result<ExperimentConfig> {
    let env = c.env.map(|e| match e {
        Env::Kitchen => "kitchen",
        Env::Scheduling => "scheduling",
    });
    let mut cfg = match &c.config {
        Some(path) => ExperimentConfig::from_file(path, env)?,
        None => ExperimentConfig::parse("", env)?,
    };
    if let Some(seed) = c.seed {
        cfg.train.seed = seed;
    }
    if let Some(n) = c.episodes {
        cfg.train.eval_episodes = n;
    }
    Ok(cfg)
}

fn run(cli: Cli) -> Result<()> {
    let (cmd, common) = match &cli.command {
        Command::GenData(c) => ("gen-data", c),
        Command::Train(c) => ("train", c),
        Command::Eval(c) => ("eval", c),
        Command::SwitchEval(c) => ("switch-eval", c),
        Command::GradCheck(c) => ("grad-check", c),
    };
    let cfg = load_config(common)?;
    fs::create_dir_all(&common.out)?;
    match cfg.env {
        EnvConfig::Kitchen(g) => dispatch(cmd, common, &cfg, &g, Baselines::Kitchen(&g)),
        EnvConfig::Scheduling(g) => dispatch(cmd, common, &cfg, &g, Baselines::Scheduling(&g)),
    }
}

enum Baselines<'a> {
    Kitchen(&'a KitchenGame),
    Scheduling(&'a SchedulingGame),
}

fn split_dir(out: &Path, index: usize) -> PathBuf {
    out.join("data").join(format!("split_{index}"))
}

/// Reuse a split already under `--out`, or generate it from the config.
fn obtain_split<G: SplitGame>(game: &G, cfg: &ExperimentConfig, out: &Path, index: usize) -> Result<Split<G::Scenario>> {
    let dir = split_dir(out, index);
    let (train, test) = (dir.join("train.json"), dir.join("test.json"));
    if train.exists() && test.exists() {
        return game.load_split(&train, &test);
    }
    let split = game.split(&cfg.split_spec(index))?;
    fs::create_dir_all(&dir)?;
    G::save(&train, &split.train)?;
    G::save(&test, &split.test)?;
    Ok(split)
}

fn dispatch<G: SplitGame>(cmd: &str, c: &Common, cfg: &ExperimentConfig, game: &G, baselines: Baselines<'_>) -> Result<()> {
    let eval_opts = EvalOptions {
        episodes: cfg.train.eval_episodes,
        seed: cfg.train.seed ^ 0xe7a1,
        mode: if cfg.train.eval_greedy { ActMode::Greedy } else { ActMode::Sample { beta: cfg.train.beta_exec } },
    };
    match cmd {
        "gen-data" => {
            for i in 0..cfg.splits {
                let mut spec = cfg.split_spec(i);
                if let Some(seed) = c.seed {
                    spec.seed = seed + i as u64;
                }
                let split = game.split(&spec)?;
                let dir = split_dir(&c.out, i);
                fs::create_dir_all(&dir)?;
                G::save(&dir.join("train.json"), &split.train)?;
                G::save(&dir.join("test.json"), &split.test)?;
                println!("split {i}: {} train, {} test scenarios in {}", split.train.len(), split.test.len(), dir.display());
            }
            Ok(())
        }
        "train" => {
            let split = obtain_split(game, cfg, &c.out, c.split)?;
            let mut trainer = Trainer::new(game, cfg.train.clone())?;
            let metrics = c.out.join("metrics.ndjson");
            if metrics.exists() {
                fs::remove_file(&metrics)?;
            }
            trainer.log_to(&metrics)?;
            trainer.checkpoint_to(&c.out.join("checkpoints"))?;
            let data = Datasets { train: &split.train, test: &split.test };
            for round in 0..cfg.train.rounds {
                for learner in AgentId::ALL {
                    let r = trainer.train_round(learner, round, &data)?;
                    println!(
                        "round {round} learner {learner}: {} iterations, train success {:.3}, best validation {:.3}",
                        r.iterations, r.train_success, r.best_val_success
                    );
                }
                trainer.end_of_round(round, &data)?;
                if let Some(e) = trainer.round_evals().last() {
                    println!("round {round}: test success {e:.4}");
                }
            }
            let team = trainer.into_team();
            team.save(&c.out.join("team.json"))?;
            let report = evaluate(game, [&team.agents[0], &team.agents[1]], &split.test, &eval_opts)?;
            write_csv(&c.out.join("summary.csv"), &[labelled(report, "trained")])?;
            Ok(())
        }
        "eval" => {
            let path = single_checkpoint(c)?;
            let team = TeamCheckpoint::load(path)?;
            team.check_compatible(game)?;
            let split = obtain_split(game, cfg, &c.out, c.split)?;
            let mut reports = vec![labelled(evaluate(game, [&team.agents[0], &team.agents[1]], &split.test, &eval_opts)?, "trained")];
            reports.extend(baseline_reports(&baselines, cfg, &c.out, c.split, &eval_opts)?);
            for r in &reports {
                println!("{:<18} success {:.4} ± {:.4} over {} episodes", r.label, r.success_rate, r.stderr, r.episodes);
            }
            write_csv(&c.out.join("eval.csv"), &reports)
        }
        "switch-eval" => {
            if c.checkpoint.len() != 2 {
                return Err(Error::Usage("switch-eval needs --checkpoint twice".into()));
            }
            let one = TeamCheckpoint::load(&c.checkpoint[0])?;
            let two = TeamCheckpoint::load(&c.checkpoint[1])?;
            one.check_compatible(game)?;
            two.check_compatible(game)?;
            let split = obtain_split(game, cfg, &c.out, c.split)?;
            let same = EvalReport::merge(
                "same_pair",
                &[
                    evaluate(game, [&one.agents[0], &one.agents[1]], &split.test, &eval_opts)?,
                    evaluate(game, [&two.agents[0], &two.agents[1]], &split.test, &eval_opts)?,
                ],
            );
            let switched = switch_eval(game, &one.agents, &two.agents, &split.test, &eval_opts)?;
            println!("same pair {:.4}, switched {:.4}", same.success_rate, switched.success_rate);
            write_csv(&c.out.join("switch.csv"), &[same, switched])
        }
        "grad-check" => {
            let split = game.split(&cfg.split_spec(0))?;
            let mut worst = 0.0f64;
            for (label, err) in gradient_checks(game, &split.train, &cfg.train.arch, cfg.train.seed, 1e-5)? {
                println!("{label}: max relative error {err:.3e}");
                worst = worst.max(err);
            }
            if worst < 1e-4 {
                Ok(())
            } else {
                Err(Error::Numeric(format!("gradient check failed: max relative error {worst:.3e}")))
            }
        }
        _ => unreachable!(),
    }
}

fn single_checkpoint(c: &Common) -> Result<&PathBuf> {
    match c.checkpoint.as_slice() {
        [p] => Ok(p),
        _ => Err(Error::Usage("eval needs exactly one --checkpoint".into())),
    }
}

fn labelled(mut r: EvalReport, label: &str) -> EvalReport {
    r.label = label.into();
    r
}

fn baseline_reports(
    baselines: &Baselines<'_>,
    cfg: &ExperimentConfig,
    out: &Path,
    index: usize,
    opts: &EvalOptions,
) -> Result<Vec<EvalReport>> {
    Ok(match *baselines {
        Baselines::Kitchen(g) => {
            let split = obtain_split(g, cfg, out, index)?;
            vec![
                evaluate_scripted(g, [&UniformPolicy, &UniformPolicy], &split.test, opts, "uniform")?,
                evaluate_scripted(g, [&InformedChef, &UniformPolicy], &split.test, opts, "informed_chef")?,
            ]
        }
        Baselines::Scheduling(g) => {
            let split = obtain_split(g, cfg, out, index)?;
            vec![
                evaluate_scripted(g, [&RandomSlot, &UniformPolicy], &split.test, opts, "random_slot")?,
                evaluate_scripted(g, [&OwnFreeSlot, &UniformPolicy], &split.test, opts, "own_free_slot")?,
            ]
        }
    })
}
