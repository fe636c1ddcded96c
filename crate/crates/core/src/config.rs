//! Flat `key = value` experiment configuration.
//!
//! Blank lines and text after `#` are ignored. Unknown keys are errors. Keys:
//!
//! | key | meaning |
//! |-----|---------|
//! | `env` | `kitchen` or `scheduling` |
//! | `k`, `m`, `w` | kitchen dishes per recipe, max ingredients per dish, ingredient count |
//! | `d`, `p` | scheduling slots and occupancy probability |
//! | `seed` | training seed |
//! | `split_seed`, `splits` | seed of the first split and number of independent splits |
//! | `train_primitives`, `test_primitives` | dishes or schedules reserved for each side |
//! | `train_scenarios`, `test_scenarios` | scenarios generated per side |
//! | `gamma`, `batch_size`, `lr_q`, `lr_pi`, `lr_f`, `optimizer`, `grad_clip` | optimization |
//! | `target_sync`, `round_length`, `rounds`, `buffer_capacity` | schedule of alternating training |
//! | `beta_start`, `beta_end`, `beta_exec`, `eps_start`, `eps_end` | exploration |
//! | `hidden` (comma separated widths), `activation` (`relu`/`tanh`) | network shape |
//! | `log_every`, `val_episodes`, `log_eval_episodes`, `eval_episodes` | logging and evaluation |
//! | `keep_best`, `patience`, `eval_greedy` | model selection and evaluation mode |

use std::collections::BTreeMap;
use std::path::Path;
use std::str::FromStr;

use crate::error::{config_err, Result};
use crate::harness::SplitSpec;
use crate::kitchen::KitchenGame;
use crate::nn::{Activation, OptimizerKind};
use crate::scheduling::SchedulingGame;
use crate::trainer::TrainConfig;

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum EnvConfig {
    Kitchen(KitchenGame),
    Scheduling(SchedulingGame),
}

impl EnvConfig {
    pub fn name(&self) -> &'static str {
        match self {
            EnvConfig::Kitchen(_) => "kitchen",
            EnvConfig::Scheduling(_) => "scheduling",
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ExperimentConfig {
    pub env: EnvConfig,
    pub split: SplitSpec,
    pub splits: usize,
    pub train: TrainConfig,
}

impl ExperimentConfig {
    /// Desk-scale defaults for an environment name.
    pub fn defaults(env: &str) -> Result<Self> {
        let (env, split) = match env {
            "kitchen" => (
                EnvConfig::Kitchen(KitchenGame::new(3, 3, 6)?),
                SplitSpec { seed: 1, train_primitives: 58, test_primitives: 25, train_scenarios: 5000, test_scenarios: 1000 },
            ),
            "scheduling" => (
                EnvConfig::Scheduling(SchedulingGame::new(4, 0.5)?),
                SplitSpec { seed: 1, train_primitives: 10, test_primitives: 6, train_scenarios: 2000, test_scenarios: 1000 },
            ),
            other => return Err(config_err(format!("unknown env `{other}` (expected kitchen or scheduling)"))),
        };
        Ok(Self { env, split, splits: 3, train: TrainConfig::default() })
    }

    /// Parse config text. `env_override` wins over an `env` key in the text.
    pub fn parse(text: &str, env_override: Option<&str>) -> Result<Self> {
        let mut pairs = BTreeMap::new();
        let mut order = Vec::new();
        for (n, raw) in text.lines().enumerate() {
            let line = raw.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let (k, v) = line
                .split_once('=')
                .ok_or_else(|| config_err(format!("line {}: expected key = value, got `{line}`", n + 1)))?;
            let (k, v) = (k.trim().to_string(), v.trim().to_string());
            if pairs.insert(k.clone(), v).is_some() {
                return Err(config_err(format!("line {}: duplicate key `{k}`", n + 1)));
            }
            order.push(k);
        }
        let env = env_override
            .map(str::to_string)
            .or_else(|| pairs.get("env").cloned())
            .unwrap_or_else(|| "kitchen".into());
        if let (Some(o), Some(file)) = (env_override, pairs.get("env")) {
            if o != file {
                return Err(config_err(format!("--env {o} conflicts with env = {file} in the config")));
            }
        }
        let mut cfg = Self::defaults(&env)?;
        let mut sizes: BTreeMap<String, f64> = BTreeMap::new();
        for key in &order {
            let v = &pairs[key];
            let t = &mut cfg.train;
            let s = &mut cfg.split;
            match key.as_str() {
                "env" => {}
                "k" | "m" | "w" | "d" | "p" => {
                    sizes.insert(key.clone(), num(key, v)?);
                }
                "seed" => t.seed = num(key, v)?,
                "split_seed" => s.seed = num(key, v)?,
                "splits" => cfg.splits = num(key, v)?,
                "train_primitives" => s.train_primitives = num(key, v)?,
                "test_primitives" => s.test_primitives = num(key, v)?,
                "train_scenarios" => s.train_scenarios = num(key, v)?,
                "test_scenarios" => s.test_scenarios = num(key, v)?,
                "gamma" => t.gamma = num(key, v)?,
                "batch_size" => t.batch_size = num(key, v)?,
                "lr_q" => t.lr_q = num(key, v)?,
                "lr_pi" => t.lr_pi = num(key, v)?,
                "lr_f" => t.lr_f = num(key, v)?,
                "optimizer" => {
                    t.optimizer = match v.as_str() {
                        "adam" => OptimizerKind::Adam,
                        "sgd" => OptimizerKind::Sgd,
                        _ => return Err(config_err(format!("optimizer must be adam or sgd, got `{v}`"))),
                    }
                }
                "grad_clip" => t.grad_clip = num(key, v)?,
                "target_sync" => t.target_sync = num(key, v)?,
                "round_length" => t.round_length = num(key, v)?,
                "rounds" => t.rounds = num(key, v)?,
                "buffer_capacity" => t.buffer_capacity = num(key, v)?,
                "beta_start" => t.beta_start = num(key, v)?,
                "beta_end" => t.beta_end = num(key, v)?,
                "beta_exec" => t.beta_exec = num(key, v)?,
                "eps_start" => t.eps_start = num(key, v)?,
                "eps_end" => t.eps_end = num(key, v)?,
                "hidden" => {
                    t.arch.hidden = v
                        .split(',')
                        .map(|x| num::<usize>(key, x.trim()))
                        .collect::<Result<Vec<_>>>()?;
                }
                "activation" => {
                    t.arch.activation = match v.as_str() {
                        "relu" => Activation::Relu,
                        "tanh" => Activation::Tanh,
                        _ => return Err(config_err(format!("activation must be relu or tanh, got `{v}`"))),
                    }
                }
                "log_every" => t.log_every = num(key, v)?,
                "val_episodes" => t.val_episodes = num(key, v)?,
                "log_eval_episodes" => t.log_eval_episodes = num(key, v)?,
                "eval_episodes" => t.eval_episodes = num(key, v)?,
                "keep_best" => t.keep_best = boolean(key, v)?,
                "patience" => t.patience = num(key, v)?,
                "eval_greedy" => t.eval_greedy = boolean(key, v)?,
                other => return Err(config_err(format!("unknown config key `{other}`"))),
            }
        }
        cfg.env = match cfg.env {
            EnvConfig::Kitchen(g) => {
                for key in ["d", "p"] {
                    if sizes.contains_key(key) {
                        return Err(config_err(format!("`{key}` does not apply to the kitchen")));
                    }
                }
                let get = |key: &str, dflt: usize| sizes.get(key).map(|&x| x as usize).unwrap_or(dflt);
                EnvConfig::Kitchen(KitchenGame::new(get("k", g.k), get("m", g.m), get("w", g.w))?)
            }
            EnvConfig::Scheduling(g) => {
                for key in ["k", "m", "w"] {
                    if sizes.contains_key(key) {
                        return Err(config_err(format!("`{key}` does not apply to scheduling")));
                    }
                }
                let d = sizes.get("d").map(|&x| x as usize).unwrap_or(g.d);
                EnvConfig::Scheduling(SchedulingGame::new(d, sizes.get("p").copied().unwrap_or(g.p))?)
            }
        };
        cfg.train.validate()?;
        if cfg.splits == 0 {
            return Err(config_err("splits must be at least 1"));
        }
        Ok(cfg)
    }

    pub fn from_file(path: &Path, env_override: Option<&str>) -> Result<Self> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| config_err(format!("cannot read config {}: {e}", path.display())))?;
        Self::parse(&text, env_override)
    }

    /// Spec of split `index`; later splits get consecutive seeds.
    pub fn split_spec(&self, index: usize) -> SplitSpec {
        SplitSpec { seed: self.split.seed + index as u64, ..self.split }
    }
}

fn num<T: FromStr>(key: &str, v: &str) -> Result<T> {
    v.parse().map_err(|_| config_err(format!("bad value `{v}` for `{key}`")))
}

fn boolean(key: &str, v: &str) -> Result<bool> {
    match v {
        "true" | "1" | "yes" => Ok(true),
        "false" | "0" | "no" => Ok(false),
        _ => Err(config_err(format!("bad boolean `{v}` for `{key}`"))),
    }
}
