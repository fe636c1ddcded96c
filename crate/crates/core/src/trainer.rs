//! Alternating centralized training.
//!
//! Agents take turns learning. While one agent learns, its partner is frozen
//! and acts at its execution rationality, so the learner faces a stationary
//! environment. Each learning phase starts from an empty replay buffer of whole
//! trajectories; every played episode is followed by one update of the
//! learner's Q-function (TD against a periodically synced target copy), its
//! partner-policy model (cross-entropy on the partner's revealed actions) and
//! its belief-over-belief update (distance to the partner's discretized belief).

use std::collections::VecDeque;
use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::belief::{bob_update, bob_features, Belief};
use crate::error::{config_err, Result};
use crate::game::{AgentId, Game, Trajectory, TrajectoryStep};
use crate::harness::{evaluate, EvalOptions};
use crate::nn::{clip_grad_norm, Activation, Example, LossKind, Optimizer, OptimizerKind, ParamVector, Target};
use crate::policy::{
    act, partner_likelihoods, pi_hat_features, q_features, ActMode, AgentModules, Architecture, QueryContext,
};
use crate::rng::SeededRng;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct TrainConfig {
    pub seed: u64,
    pub gamma: f64,
    /// Trajectories per update.
    pub batch_size: usize,
    pub lr_q: f64,
    pub lr_pi: f64,
    pub lr_f: f64,
    pub optimizer: OptimizerKind,
    pub grad_clip: f64,
    /// Updates between target-network syncs.
    pub target_sync: usize,
    /// Episodes (and updates) per learner per round.
    pub round_length: usize,
    pub rounds: usize,
    /// Replay capacity in trajectories.
    pub buffer_capacity: usize,
    pub beta_start: f64,
    pub beta_end: f64,
    /// Rationality of frozen partners and of evaluation sampling.
    pub beta_exec: f64,
    pub eps_start: f64,
    pub eps_end: f64,
    pub arch: Architecture,
    pub log_every: usize,
    /// Validation episodes (training scenarios) used to keep the best parameters of a phase.
    pub val_episodes: usize,
    /// Test episodes evaluated at every log point; 0 disables.
    pub log_eval_episodes: usize,
    /// Test episodes evaluated at the end of every round.
    pub eval_episodes: usize,
    pub keep_best: bool,
    /// Stop a phase once validation success has not improved for this many iterations; 0 disables.
    pub patience: usize,
    pub eval_greedy: bool,
}

impl Default for TrainConfig {
    fn default() -> Self {
        Self {
            seed: 0,
            gamma: 0.95,
            batch_size: 32,
            lr_q: 1e-3,
            lr_pi: 1e-3,
            lr_f: 1e-3,
            optimizer: OptimizerKind::Adam,
            grad_clip: 10.0,
            target_sync: 500,
            round_length: 5000,
            rounds: 3,
            buffer_capacity: 5000,
            beta_start: 1.0,
            beta_end: 5.0,
            beta_exec: 5.0,
            eps_start: 0.3,
            eps_end: 0.02,
            arch: Architecture::default(),
            log_every: 1000,
            val_episodes: 300,
            log_eval_episodes: 0,
            eval_episodes: 1000,
            keep_best: true,
            patience: 0,
            eval_greedy: true,
        }
    }
}

impl TrainConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.gamma > 0.0 && self.gamma <= 1.0) {
            return Err(config_err(format!("gamma {} must lie in (0, 1]", self.gamma)));
        }
        let positive = [
            ("batch_size", self.batch_size as f64),
            ("lr_q", self.lr_q),
            ("lr_pi", self.lr_pi),
            ("lr_f", self.lr_f),
            ("target_sync", self.target_sync as f64),
            ("buffer_capacity", self.buffer_capacity as f64),
            ("log_every", self.log_every as f64),
            ("beta_exec", self.beta_exec),
        ];
        for (name, v) in positive {
            if !(v > 0.0) {
                return Err(config_err(format!("{name} must be positive")));
            }
        }
        if self.beta_start < 0.0 || self.beta_end < 0.0 {
            return Err(config_err("rationality schedule must be nonnegative"));
        }
        if !(0.0..=1.0).contains(&self.eps_start) || !(0.0..=1.0).contains(&self.eps_end) {
            return Err(config_err("exploration rates must lie in [0, 1]"));
        }
        if self.arch.hidden.is_empty() {
            return Err(config_err("at least one hidden layer is required"));
        }
        Ok(())
    }

    fn eval_mode(&self) -> ActMode {
        if self.eval_greedy {
            ActMode::Greedy
        } else {
            ActMode::Sample { beta: self.beta_exec }
        }
    }
}

/// FIFO store of complete trajectories.
#[derive(Debug, Clone)]
pub struct ReplayBuffer<S> {
    capacity: usize,
    storage: VecDeque<Trajectory<S>>,
}

impl<S: Clone> ReplayBuffer<S> {
    pub fn new(capacity: usize) -> Self {
        Self { capacity, storage: VecDeque::with_capacity(capacity.min(1 << 16)) }
    }

    pub fn push(&mut self, t: Trajectory<S>) {
        if self.storage.len() == self.capacity {
            self.storage.pop_front();
        }
        self.storage.push_back(t);
    }

    pub fn len(&self) -> usize {
        self.storage.len()
    }

    pub fn is_empty(&self) -> bool {
        self.storage.is_empty()
    }

    pub fn iter(&self) -> impl Iterator<Item = &Trajectory<S>> {
        self.storage.iter()
    }

    /// `m` trajectories drawn uniformly with replacement.
    pub fn sample(&self, m: usize, rng: &mut SeededRng) -> Vec<&Trajectory<S>> {
        if self.storage.is_empty() {
            return Vec::new();
        }
        (0..m).map(|_| &self.storage[rng.below(self.storage.len())]).collect()
    }
}

#[derive(Debug, Clone, Copy)]
pub struct EpisodeOptions {
    pub modes: [ActMode; 2],
    /// Record discretized partner beliefs for belief-over-belief supervision.
    pub supervise: bool,
}

#[derive(Debug, Clone)]
pub struct Episode<S> {
    pub trajectory: Trajectory<S>,
    /// Beliefs that lost all mass and were reset to uniform.
    pub degenerate_resets: usize,
}

fn reset_if_degenerate(r: std::result::Result<Belief, crate::belief::Degenerate>, n: usize, resets: &mut usize) -> Belief {
    r.unwrap_or_else(|_| {
        *resets += 1;
        Belief::uniform(n)
    })
}

/// Play one game with decentralized execution.
///
/// Each step the mover picks an action from its belief-weighted Q-values, the
/// observer updates its belief about the mover by counterfactual Bayes (then
/// applies the public consistency mask), and the mover pushes its estimate of
/// the observer's belief through its learned update.
pub fn run_episode<G: Game>(
    game: &G,
    agents: [&AgentModules; 2],
    scenario: &G::Scenario,
    opts: &EpisodeOptions,
    rng: &mut SeededRng,
) -> Result<Episode<G::State>> {
    let (mut state, privates) = game.reset(scenario)?;
    let mut beliefs = [
        Belief::uniform(game.private_space(AgentId::B)),
        Belief::uniform(game.private_space(AgentId::A)),
    ];
    let mut bobs = [
        game.belief_to_bob(AgentId::A, &Belief::uniform(game.private_space(AgentId::A))),
        game.belief_to_bob(AgentId::B, &Belief::uniform(game.private_space(AgentId::B))),
    ];
    let mut traj = Trajectory::new(privates);
    let mut resets = 0;

    loop {
        let actor = game.turn(&state);
        let observer = actor.other();
        let (ai, oi) = (actor.index(), observer.index());
        let ctx = QueryContext {
            state: &state,
            agent: actor,
            own: privates[ai],
            belief: &beliefs[ai],
            bob: &bobs[ai],
        };
        let action = act(game, agents[ai], &ctx, opts.modes[ai], rng)?;
        let outcome = game.step(&state, &privates, action)?;

        let lik = partner_likelihoods(game, agents[oi], &state, &bobs[oi], &beliefs[oi], action)?;
        let n_actor = game.private_space(actor);
        let mut observed = reset_if_degenerate(beliefs[oi].counterfactual_update(&lik), n_actor, &mut resets);
        if !outcome.is_terminal() {
            if let Some(mask) = game.consistency_mask(&outcome.next_state, actor) {
                observed = reset_if_degenerate(observed.apply_mask(&mask), n_actor, &mut resets);
            }
        }
        let new_bob = bob_update(game, actor, &agents[ai].f, &bobs[ai], action, &state)?;
        let supervision = if opts.supervise && game.bob_dim(actor) > 1 {
            Some(game.discretize(&game.belief_to_bob(actor, &observed), rng))
        } else {
            None
        };

        let terminal = outcome.terminal;
        traj.record_step(
            TrajectoryStep {
                state: state.clone(),
                actor,
                action,
                rewards: outcome.rewards,
                beliefs: beliefs.clone(),
                bobs: bobs.clone(),
                supervision,
                terminal,
            },
            outcome.cause,
        )?;
        beliefs[oi] = observed;
        bobs[ai] = new_bob;
        if outcome.is_terminal() {
            break;
        }
        state = outcome.next_state;
    }
    Ok(Episode { trajectory: traj, degenerate_resets: resets })
}

/// One decision of the learner: reward accrued until its next decision (or the end).
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LearnerTransition {
    pub step: usize,
    pub reward: f64,
    pub next: Option<usize>,
}

pub fn learner_transitions<S: Clone>(traj: &Trajectory<S>, learner: AgentId) -> Vec<LearnerTransition> {
    let own: Vec<usize> = traj.steps_of(learner).collect();
    own.iter()
        .enumerate()
        .map(|(j, &t)| {
            let next = own.get(j + 1).copied();
            let end = next.unwrap_or(traj.len());
            let reward = traj.steps[t..end].iter().map(|s| s.rewards[learner.index()]).sum();
            LearnerTransition { step: t, reward, next }
        })
        .collect()
}

/// TD targets `y = r + gamma * max_a Q_target(next)` for every learner decision
/// in `batch`, with `y = r` where the game ended before the learner moved again.
pub fn compute_targets<G: Game>(
    game: &G,
    batch: &[&Trajectory<G::State>],
    learner: AgentId,
    target_q: &ParamVector,
    gamma: f64,
) -> Result<Vec<Vec<f64>>> {
    let li = learner.index();
    let mut rows = Vec::new();
    let mut nrows = 0;
    let mut plan = Vec::with_capacity(batch.len());
    for traj in batch {
        let trans = learner_transitions(traj, learner);
        for tr in &trans {
            if let Some(n) = tr.next {
                let s = &traj.steps[n];
                rows.extend(q_features(game, &s.state, learner, traj.privates[li], traj.privates[1 - li], &s.bobs[li]));
                nrows += 1;
            }
        }
        plan.push(trans);
    }
    let next_q = if nrows > 0 { Some(target_q.forward_batch(&rows, nrows)?) } else { None };
    let mut r = 0;
    Ok(plan
        .into_iter()
        .map(|trans| {
            trans
                .iter()
                .map(|tr| match tr.next {
                    Some(_) => {
                        let q = next_q.as_ref().unwrap();
                        let max = q.row(r).iter().cloned().fold(f64::NEG_INFINITY, f64::max);
                        r += 1;
                        tr.reward + gamma * max
                    }
                    None => tr.reward,
                })
                .collect()
        })
        .collect())
}

/// Losses of one update and the gradients of each parameter set.
#[derive(Debug, Clone)]
pub struct LossReport {
    pub l_q: f64,
    pub l_pi: f64,
    pub l_f: f64,
    pub grad_q: Vec<f64>,
    pub grad_pi: Vec<f64>,
    pub grad_f: Vec<f64>,
}

/// Training examples for the learner's three networks from a batch.
pub fn build_examples<G: Game>(
    game: &G,
    batch: &[&Trajectory<G::State>],
    learner: AgentId,
    targets: &[Vec<f64>],
) -> (Vec<Example>, Vec<Example>, Vec<Example>) {
    let li = learner.index();
    let partner = learner.other();
    let model_partner = game.private_space(partner) > 1 && game.num_actions(partner) > 1;
    let learn_bob = game.bob_dim(learner) > 1;
    let (mut q, mut pi, mut f) = (Vec::new(), Vec::new(), Vec::new());
    for (traj, ys) in batch.iter().zip(targets) {
        let own = traj.privates[li];
        let other = traj.privates[1 - li];
        let mut k = 0;
        for step in &traj.steps {
            if step.actor == learner {
                let x = q_features(game, &step.state, learner, own, other, &step.bobs[li]);
                q.push(Example::new(x, Target::Index { index: step.action, value: ys[k] }, LossKind::SquaredError));
                k += 1;
                if learn_bob {
                    if let Some(sup) = &step.supervision {
                        let x = bob_features(game, learner, &step.bobs[li], step.action, &step.state);
                        f.push(Example::new(x, Target::Dense(sup.clone()), game.bob_loss()));
                    }
                }
            } else if model_partner {
                let belief_bob = game.belief_to_bob(partner, &step.beliefs[li]);
                let x = pi_hat_features(game, &step.state, learner, other, &step.bobs[li], &belief_bob);
                pi.push(Example::new(x, Target::Class(step.action), LossKind::SoftmaxCrossEntropy));
            }
        }
    }
    (q, pi, f)
}

pub fn losses<G: Game>(
    game: &G,
    batch: &[&Trajectory<G::State>],
    learner: &AgentModules,
    targets: &[Vec<f64>],
) -> Result<LossReport> {
    let (q, pi, f) = build_examples(game, batch, learner.agent, targets);
    let (l_q, grad_q) = learner.q.loss_and_grad(&q)?;
    let (l_pi, grad_pi) = learner.pi_hat.loss_and_grad(&pi)?;
    let (l_f, grad_f) = learner.f.loss_and_grad(&f)?;
    Ok(LossReport { l_q, l_pi, l_f, grad_q, grad_pi, grad_f })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MetricRecord {
    pub event: String,
    pub iteration: u64,
    pub round: usize,
    pub learner: AgentId,
    #[serde(rename = "L_Q")]
    pub l_q: f64,
    #[serde(rename = "L_pi")]
    pub l_pi: f64,
    #[serde(rename = "L_f")]
    pub l_f: f64,
    pub train_success: f64,
    pub eval_success: Option<f64>,
    pub val_success: Option<f64>,
}

/// Result of one learner phase.
#[derive(Debug, Clone, PartialEq)]
pub struct RoundReport {
    pub learner: AgentId,
    pub round: usize,
    pub iterations: usize,
    pub updates: usize,
    pub best_val_success: f64,
    pub train_success: f64,
    pub degenerate_resets: usize,
}

/// Both agents of a team, ready to be written to or read from disk.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TeamCheckpoint {
    pub v: u32,
    pub game: String,
    pub agents: [AgentModules; 2],
}

impl TeamCheckpoint {
    pub fn new(agents: [AgentModules; 2]) -> Self {
        let game = agents[0].game.clone();
        Self { v: crate::policy::AGENT_FORMAT_VERSION, game, agents }
    }

    pub fn save(&self, path: &Path) -> Result<()> {
        fs::write(path, serde_json::to_string(self)?)?;
        Ok(())
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = fs::read_to_string(path)?;
        Ok(serde_json::from_str(&text)?)
    }

    pub fn check_compatible<G: Game>(&self, game: &G) -> Result<()> {
        for id in AgentId::ALL {
            self.agents[id.index()].check_compatible(game, id)?;
        }
        Ok(())
    }
}

/// Scenario pools a training run draws from.
pub struct Datasets<'a, Sc> {
    pub train: &'a [Sc],
    pub test: &'a [Sc],
}

/// Drives alternating rounds over both agents.
pub struct Trainer<'g, G: Game> {
    game: &'g G,
    pub config: TrainConfig,
    pub agents: [AgentModules; 2],
    rng: SeededRng,
    iteration: u64,
    pub log: Vec<MetricRecord>,
    log_file: Option<fs::File>,
    checkpoint_dir: Option<PathBuf>,
}

impl<'g, G: Game> Trainer<'g, G> {
    /// Fresh agents initialized from the config seed.
    pub fn new(game: &'g G, config: TrainConfig) -> Result<Self> {
        config.validate()?;
        let mut init_rng = SeededRng::derive(config.seed, u64::MAX - 1);
        let agents = [
            AgentModules::new(game, AgentId::A, &config.arch, config.beta_exec, &mut init_rng)?,
            AgentModules::new(game, AgentId::B, &config.arch, config.beta_exec, &mut init_rng)?,
        ];
        Self::with_agents(game, config, agents)
    }

    pub fn with_agents(game: &'g G, config: TrainConfig, agents: [AgentModules; 2]) -> Result<Self> {
        config.validate()?;
        for id in AgentId::ALL {
            agents[id.index()].check_compatible(game, id)?;
        }
        let rng = SeededRng::new(config.seed);
        Ok(Self {
            game,
            config,
            agents,
            rng,
            iteration: 0,
            log: Vec::new(),
            log_file: None,
            checkpoint_dir: None,
        })
    }

    /// Append metric records to `path` as newline-delimited JSON.
    pub fn log_to(&mut self, path: &Path) -> Result<()> {
        self.log_file = Some(fs::OpenOptions::new().create(true).append(true).open(path)?);
        Ok(())
    }

    /// Write team checkpoints into `dir` after every round.
    pub fn checkpoint_to(&mut self, dir: &Path) -> Result<()> {
        fs::create_dir_all(dir)?;
        self.checkpoint_dir = Some(dir.to_path_buf());
        Ok(())
    }

    pub fn iteration(&self) -> u64 {
        self.iteration
    }

    fn emit(&mut self, rec: MetricRecord) -> Result<()> {
        if let Some(f) = &mut self.log_file {
            serde_json::to_writer(&mut *f, &rec)?;
            f.write_all(b"\n")?;
        }
        self.log.push(rec);
        Ok(())
    }

    fn eval_options(&self, episodes: usize, seed: u64) -> EvalOptions {
        EvalOptions { episodes, seed, mode: self.config.eval_mode() }
    }

    /// Train `learner` for one phase with its partner frozen.
    pub fn train_round(&mut self, learner: AgentId, round: usize, data: &Datasets<'_, G::Scenario>) -> Result<RoundReport> {
        if data.train.is_empty() {
            return Err(config_err("empty training set"));
        }
        let cfg = self.config.clone();
        let li = learner.index();
        let game = self.game;
        let mut buffer = ReplayBuffer::new(cfg.buffer_capacity);
        let mut target_q = self.agents[li].q.clone();
        let mut opt_q = Optimizer::new(cfg.optimizer, self.agents[li].q.len());
        let mut opt_pi = Optimizer::new(cfg.optimizer, self.agents[li].pi_hat.len());
        let mut opt_f = Optimizer::new(cfg.optimizer, self.agents[li].f.len());
        let val_seed = cfg.seed ^ 0x5eed_0000 ^ (round as u64) << 8 ^ li as u64;

        let validate = |agents: &[AgentModules; 2]| -> Result<f64> {
            if cfg.val_episodes == 0 {
                return Ok(0.0);
            }
            let opts = EvalOptions { episodes: cfg.val_episodes, seed: val_seed, mode: cfg.eval_mode() };
            Ok(evaluate(game, [&agents[0], &agents[1]], data.train, &opts)?.success_rate)
        };

        let mut best_val = if cfg.keep_best { validate(&self.agents)? } else { f64::NEG_INFINITY };
        let mut best = self.agents[li].clone();
        let mut since_best = 0usize;

        let (mut sum_q, mut sum_pi, mut sum_f, mut n_upd) = (0.0, 0.0, 0.0, 0usize);
        let (mut wins, mut played) = (0usize, 0usize);
        let (mut total_wins, mut total_played) = (0usize, 0usize);
        let mut updates = 0usize;
        let mut resets = 0usize;
        let mut iterations = 0usize;

        for it in 0..cfg.round_length {
            let frac = if cfg.round_length > 1 { it as f64 / (cfg.round_length - 1) as f64 } else { 1.0 };
            let beta = cfg.beta_start + (cfg.beta_end - cfg.beta_start) * frac;
            let eps = cfg.eps_start + (cfg.eps_end - cfg.eps_start) * frac;
            let mut modes = [ActMode::Sample { beta: cfg.beta_exec }; 2];
            modes[li] = ActMode::EpsilonSample { eps, beta };

            let scenario = &data.train[self.rng.below(data.train.len())];
            let ep = run_episode(
                game,
                [&self.agents[0], &self.agents[1]],
                scenario,
                &EpisodeOptions { modes, supervise: true },
                &mut self.rng,
            )?;
            resets += ep.degenerate_resets;
            played += 1;
            total_played += 1;
            if ep.trajectory.is_success() {
                wins += 1;
                total_wins += 1;
            }
            buffer.push(ep.trajectory);

            let batch = buffer.sample(cfg.batch_size, &mut self.rng);
            let targets = compute_targets(game, &batch, learner, &target_q, cfg.gamma)?;
            let mut rep = losses(game, &batch, &self.agents[li], &targets)?;
            drop(batch);
            let modules = &mut self.agents[li];
            clip_grad_norm(&mut rep.grad_q, cfg.grad_clip);
            clip_grad_norm(&mut rep.grad_pi, cfg.grad_clip);
            clip_grad_norm(&mut rep.grad_f, cfg.grad_clip);
            opt_q.step(&mut modules.q.values, &rep.grad_q, cfg.lr_q)?;
            opt_pi.step(&mut modules.pi_hat.values, &rep.grad_pi, cfg.lr_pi)?;
            opt_f.step(&mut modules.f.values, &rep.grad_f, cfg.lr_f)?;
            updates += 1;
            if updates.is_multiple_of(cfg.target_sync) {
                target_q = modules.q.clone();
            }
            sum_q += rep.l_q;
            sum_pi += rep.l_pi;
            sum_f += rep.l_f;
            n_upd += 1;
            self.iteration += 1;
            iterations += 1;

            if (it + 1) % cfg.log_every == 0 || it + 1 == cfg.round_length {
                let val = if cfg.keep_best || cfg.patience > 0 { Some(validate(&self.agents)?) } else { None };
                let eval = if cfg.log_eval_episodes > 0 && !data.test.is_empty() {
                    let opts = self.eval_options(cfg.log_eval_episodes, cfg.seed ^ 0xe7a1);
                    Some(evaluate(game, [&self.agents[0], &self.agents[1]], data.test, &opts)?.success_rate)
                } else {
                    None
                };
                let denom = n_upd.max(1) as f64;
                let rec = MetricRecord {
                    event: "progress".into(),
                    iteration: self.iteration,
                    round,
                    learner,
                    l_q: sum_q / denom,
                    l_pi: sum_pi / denom,
                    l_f: sum_f / denom,
                    train_success: wins as f64 / played.max(1) as f64,
                    eval_success: eval,
                    val_success: val,
                };
                self.emit(rec)?;
                (sum_q, sum_pi, sum_f, n_upd, wins, played) = (0.0, 0.0, 0.0, 0, 0, 0);

                if let Some(v) = val {
                    if v >= best_val {
                        best_val = v;
                        best = self.agents[li].clone();
                        since_best = 0;
                    } else {
                        since_best += cfg.log_every;
                    }
                    if cfg.patience > 0 && since_best >= cfg.patience {
                        break;
                    }
                }
            }
        }

        if cfg.keep_best {
            self.agents[li] = best;
        }
        Ok(RoundReport {
            learner,
            round,
            iterations,
            updates,
            best_val_success: best_val,
            train_success: total_wins as f64 / total_played.max(1) as f64,
            degenerate_resets: resets,
        })
    }

    /// Full alternating schedule: every round trains A then B, then evaluates on the test set.
    pub fn train(&mut self, data: &Datasets<'_, G::Scenario>) -> Result<Vec<RoundReport>> {
        let mut reports = Vec::new();
        for round in 0..self.config.rounds {
            for learner in AgentId::ALL {
                reports.push(self.train_round(learner, round, data)?);
            }
            self.end_of_round(round, data)?;
        }
        Ok(reports)
    }

    pub fn end_of_round(&mut self, round: usize, data: &Datasets<'_, G::Scenario>) -> Result<()> {
        let eval = if self.config.eval_episodes > 0 && !data.test.is_empty() {
            let opts = self.eval_options(self.config.eval_episodes, self.config.seed ^ 0xe7a1);
            Some(evaluate(self.game, [&self.agents[0], &self.agents[1]], data.test, &opts)?.success_rate)
        } else {
            None
        };
        let rec = MetricRecord {
            event: "round_end".into(),
            iteration: self.iteration,
            round,
            learner: AgentId::B,
            l_q: 0.0,
            l_pi: 0.0,
            l_f: 0.0,
            train_success: 0.0,
            eval_success: eval,
            val_success: None,
        };
        self.emit(rec)?;
        if let Some(dir) = self.checkpoint_dir.clone() {
            TeamCheckpoint::new(self.agents.clone()).save(&dir.join(format!("round_{round:03}.json")))?;
        }
        Ok(())
    }

    /// Per-round test success from the `round_end` records.
    pub fn round_evals(&self) -> Vec<f64> {
        self.log
            .iter()
            .filter(|r| r.event == "round_end")
            .filter_map(|r| r.eval_success)
            .collect()
    }

    pub fn into_team(self) -> TeamCheckpoint {
        TeamCheckpoint::new(self.agents)
    }
}

/// Hidden pre-activations closer to zero than this are treated as ReLU kinks by [`gradient_checks`].
pub const KINK_MARGIN: f64 = 1e-3;

/// Gradient magnitude below which [`gradient_checks`] compares absolute rather than relative error.
pub const GRAD_FLOOR: f64 = 1e-5;

/// Finite-difference check of every network of both agents on examples drawn
/// from real episodes. Returns `(label, max relative error)` per network.
pub fn gradient_checks<G: Game>(
    game: &G,
    scenarios: &[G::Scenario],
    arch: &Architecture,
    seed: u64,
    step: f64,
) -> Result<Vec<(String, f64)>> {
    let mut rng = SeededRng::new(seed);
    let agents = [
        AgentModules::new(game, AgentId::A, arch, 1.0, &mut rng)?,
        AgentModules::new(game, AgentId::B, arch, 1.0, &mut rng)?,
    ];
    let opts = EpisodeOptions { modes: [ActMode::EpsilonSample { eps: 0.5, beta: 1.0 }; 2], supervise: true };
    let mut trajs = Vec::new();
    for i in 0..24 {
        let sc = &scenarios[i % scenarios.len()];
        trajs.push(run_episode(game, [&agents[0], &agents[1]], sc, &opts, &mut rng)?.trajectory);
    }
    let batch: Vec<&Trajectory<G::State>> = trajs.iter().collect();
    let mut out = Vec::new();
    for id in AgentId::ALL {
        let m = &agents[id.index()];
        let targets = compute_targets(game, &batch, id, &m.q, 0.95)?;
        let (q, pi, f) = build_examples(game, &batch, id, &targets);
        for (name, p, ex) in [("q", &m.q, q), ("pi_hat", &m.pi_hat, pi), ("f", &m.f, f)] {
            if ex.is_empty() {
                continue;
            }
            // zero biases put all-zero inputs exactly on ReLU kinks; check at a generic point instead
            let mut p = p.clone();
            p.values.iter_mut().for_each(|v| *v += 0.05 * (2.0 * rng.uniform() - 1.0));
            let p = &p;
            // and keep only examples whose loss is smooth within the probe step
            let mut kept = Vec::new();
            for e in ex {
                if kept.len() == 16 {
                    break;
                }
                if p.spec.activation != Activation::Relu || p.min_hidden_preactivation(&e.input)? > KINK_MARGIN {
                    kept.push(e);
                }
            }
            let ex = kept;
            if ex.is_empty() {
                continue;
            }
            let label = format!("{} agent {id} {name} {:?}/{:?}", game.id(), p.spec.head, ex[0].loss);
            out.push((label, crate::nn::gradient_check(p, &ex, step, GRAD_FLOOR)?));
        }
    }
    Ok(out)
}
