//! Shared environment contract and trajectory recording.

use std::fmt::Debug;
use std::io::{BufRead, Write};

use serde::de::DeserializeOwned;
use serde::{Deserialize, Serialize};

use crate::belief::Belief;
use crate::error::{usage_err, Error, Result};
use crate::nn::{Head, LossKind};
use crate::rng::SeededRng;

/// Hard cap on the number of actions in one episode. Reaching it without a
/// terminal outcome counts as a failure.
pub const EPISODE_CAP: usize = 20;

/// Trajectory line format version.
pub const TRAJECTORY_FORMAT_VERSION: u32 = 1;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct AgentId(pub usize);

impl AgentId {
    pub const A: AgentId = AgentId(0);
    pub const B: AgentId = AgentId(1);
    pub const ALL: [AgentId; 2] = [AgentId::A, AgentId::B];

    pub fn other(self) -> AgentId {
        AgentId(1 - self.0)
    }

    pub fn index(self) -> usize {
        self.0
    }
}

impl std::fmt::Display for AgentId {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(if self.0 == 0 { "A" } else { "B" })
    }
}

/// Index into an agent's enumerated private-state space. Constant for an episode.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct PrivateState(pub usize);

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum TerminalKind {
    Success,
    Failure,
    None,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum FailureCause {
    /// Kitchen: an ingredient that is not in the target dish.
    WrongIngredient,
    /// Kitchen: more copies of an ingredient than the target dish holds.
    OverPrepared,
    /// Scheduling: proposed slot is occupied for at least one agent.
    WrongProposal,
    /// Scheduling: rejected although a common free slot exists.
    WrongReject,
    /// Scheduling: informed an interval containing a free slot.
    WrongInform,
    EpisodeCap,
    /// Toy environments.
    Other,
}

impl FailureCause {
    pub fn as_str(self) -> &'static str {
        match self {
            FailureCause::WrongIngredient => "wrong_ingredient",
            FailureCause::OverPrepared => "over_prepared",
            FailureCause::WrongProposal => "wrong_proposal",
            FailureCause::WrongReject => "wrong_reject",
            FailureCause::WrongInform => "wrong_inform",
            FailureCause::EpisodeCap => "episode_cap",
            FailureCause::Other => "other",
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct StepOutcome<S> {
    pub next_state: S,
    pub rewards: [f64; 2],
    pub terminal: TerminalKind,
    pub cause: Option<FailureCause>,
}

impl<S> StepOutcome<S> {
    pub fn is_terminal(&self) -> bool {
        self.terminal != TerminalKind::None
    }
}

/// Everything one agent needs to know about a game to act, learn and reason
/// about its partner.
///
/// Actions are indices into a canonical per-agent action list. Private states
/// are indices into enumerated spaces so beliefs can be plain vectors.
pub trait Game: Send + Sync {
    type State: Clone + Debug + PartialEq + Serialize + DeserializeOwned + Send + Sync;
    type Scenario: Clone + Debug + Send + Sync;

    /// Short identifier stored in checkpoints.
    fn id(&self) -> String;

    fn num_actions(&self, agent: AgentId) -> usize;

    /// Size of `agent`'s private-state space.
    fn private_space(&self, agent: AgentId) -> usize;

    fn reset(&self, scenario: &Self::Scenario) -> Result<(Self::State, [PrivateState; 2])>;

    fn step(
        &self,
        state: &Self::State,
        privates: &[PrivateState; 2],
        action: usize,
    ) -> Result<StepOutcome<Self::State>>;

    fn turn(&self, state: &Self::State) -> AgentId;

    fn step_count(&self, state: &Self::State) -> usize;

    /// Public-state encoding shared by all learned modules.
    fn public_features(&self, state: &Self::State, out: &mut Vec<f64>);
    fn public_dim(&self) -> usize;

    /// Encoding of a (possibly hypothesized) private state of `agent`.
    fn private_features(
        &self,
        state: &Self::State,
        agent: AgentId,
        omega: PrivateState,
        out: &mut Vec<f64>,
    );
    fn private_dim(&self, agent: AgentId) -> usize;

    /// Width of the belief-over-belief an agent keeps about its own private state.
    fn bob_dim(&self, about: AgentId) -> usize;
    fn bob_head(&self) -> Head;
    fn bob_loss(&self) -> LossKind;

    /// Convert a belief about `about`'s private state into belief-over-belief form.
    fn belief_to_bob(&self, about: AgentId, belief: &Belief) -> Vec<f64>;

    /// Discretize a partner belief (in belief-over-belief form) into a supervision target.
    fn discretize(&self, bob: &[f64], rng: &mut SeededRng) -> Vec<f64>;

    /// Hypotheses about `about`'s private state that are still consistent with
    /// the public state of a live game. `None` means no hard constraint.
    fn consistency_mask(&self, state: &Self::State, about: AgentId) -> Option<Vec<bool>>;

    /// Whether `action`, played as the opening move of `scenario`, singles out
    /// the first mover's private state. `None` when the notion does not apply.
    fn unique_opening(&self, _scenario: &Self::Scenario, _action: usize) -> Option<bool> {
        None
    }
}

/// One recorded action with the agents' epistemic snapshots taken before it.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrajectoryStep<S> {
    pub state: S,
    pub actor: AgentId,
    pub action: usize,
    pub rewards: [f64; 2],
    pub beliefs: [Belief; 2],
    pub bobs: [Vec<f64>; 2],
    /// The observer's belief about the actor after this action, discretized.
    pub supervision: Option<Vec<f64>>,
    pub terminal: TerminalKind,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Trajectory<S> {
    pub privates: [PrivateState; 2],
    pub steps: Vec<TrajectoryStep<S>>,
    pub outcome: TerminalKind,
    pub cause: Option<FailureCause>,
}

impl<S: Clone> Trajectory<S> {
    pub fn new(privates: [PrivateState; 2]) -> Self {
        Self {
            privates,
            steps: Vec::new(),
            outcome: TerminalKind::None,
            cause: None,
        }
    }

    pub fn len(&self) -> usize {
        self.steps.len()
    }

    pub fn is_empty(&self) -> bool {
        self.steps.is_empty()
    }

    pub fn is_terminal(&self) -> bool {
        self.outcome != TerminalKind::None
    }

    pub fn is_success(&self) -> bool {
        self.outcome == TerminalKind::Success
    }

    /// Append a step. Fails once the trajectory has ended.
    pub fn record_step(&mut self, step: TrajectoryStep<S>, cause: Option<FailureCause>) -> Result<()> {
        if self.is_terminal() {
            return Err(usage_err("cannot append to a finished trajectory"));
        }
        if step.terminal != TerminalKind::None {
            self.outcome = step.terminal;
            self.cause = cause;
        }
        self.steps.push(step);
        Ok(())
    }

    /// Sum of recorded rewards for one agent.
    pub fn total_reward(&self, agent: AgentId) -> f64 {
        self.steps.iter().map(|s| s.rewards[agent.index()]).sum()
    }

    /// Indices of the steps taken by `agent`.
    pub fn steps_of(&self, agent: AgentId) -> impl Iterator<Item = usize> + '_ {
        self.steps
            .iter()
            .enumerate()
            .filter(move |(_, s)| s.actor == agent)
            .map(|(i, _)| i)
    }
}

#[derive(Serialize, Deserialize)]
struct TrajectoryLine<T> {
    v: u32,
    #[serde(flatten)]
    trajectory: T,
}

/// Write trajectories as newline-delimited JSON, one record per line.
pub fn write_trajectories<S: Serialize + Clone, W: Write>(
    out: &mut W,
    trajectories: &[Trajectory<S>],
) -> Result<()> {
    for t in trajectories {
        let line = TrajectoryLine {
            v: TRAJECTORY_FORMAT_VERSION,
            trajectory: t,
        };
        serde_json::to_writer(&mut *out, &line)?;
        out.write_all(b"\n")?;
    }
    Ok(())
}

pub fn read_trajectories<S: DeserializeOwned + Clone, R: BufRead>(input: R) -> Result<Vec<Trajectory<S>>> {
    let mut result = Vec::new();
    for line in input.lines() {
        let line = line?;
        if line.trim().is_empty() {
            continue;
        }
        let rec: TrajectoryLine<Trajectory<S>> = serde_json::from_str(&line)?;
        if rec.v != TRAJECTORY_FORMAT_VERSION {
            return Err(Error::Config(format!("unsupported trajectory format version {}", rec.v)));
        }
        result.push(rec.trajectory);
    }
    Ok(result)
}

/// Re-run a trajectory's actions through the environment and return the rewards it yields.
pub fn replay_rewards<G: Game>(game: &G, scenario: &G::Scenario, traj: &Trajectory<G::State>) -> Result<Vec<[f64; 2]>> {
    let (mut state, privates) = game.reset(scenario)?;
    let mut rewards = Vec::with_capacity(traj.len());
    for step in &traj.steps {
        let outcome = game.step(&state, &privates, step.action)?;
        rewards.push(outcome.rewards);
        state = outcome.next_state;
    }
    Ok(rewards)
}
