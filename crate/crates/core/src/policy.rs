//! Acting on beliefs: belief-weighted Q-values, Boltzmann selection, and the
//! learned model of the partner's policy.

use serde::{Deserialize, Serialize};

use crate::belief::Belief;
use crate::error::{config_err, Error, Result};
use crate::game::{AgentId, Game, PrivateState};
use crate::nn::{Activation, ApproximatorSpec, Head, ParamVector};
use crate::rng::SeededRng;

pub const AGENT_FORMAT_VERSION: u32 = 1;

/// Hidden layout shared by the three networks of an agent.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Architecture {
    pub hidden: Vec<usize>,
    pub activation: Activation,
}

impl Default for Architecture {
    fn default() -> Self {
        Self { hidden: vec![64, 64], activation: Activation::Relu }
    }
}

/// The three learned parameter sets of one agent plus its rationality coefficient.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AgentModules {
    pub v: u32,
    pub game: String,
    pub agent: AgentId,
    pub beta: f64,
    /// `Q(a | s, own private, partner private, belief over belief)`.
    pub q: ParamVector,
    /// Partner policy estimate, softmax over the partner's actions.
    pub pi_hat: ParamVector,
    /// Belief-over-belief update.
    pub f: ParamVector,
}

pub fn q_input_dim<G: Game>(game: &G, agent: AgentId) -> usize {
    game.public_dim() + game.private_dim(agent) + game.private_dim(agent.other()) + game.bob_dim(agent)
}

pub fn pi_hat_input_dim<G: Game>(game: &G, agent: AgentId) -> usize {
    game.public_dim() + game.private_dim(agent.other()) + game.bob_dim(agent) + game.bob_dim(agent.other())
}

pub fn f_input_dim<G: Game>(game: &G, agent: AgentId) -> usize {
    game.bob_dim(agent) + game.num_actions(agent) + game.public_dim()
}

impl AgentModules {
    pub fn specs<G: Game>(game: &G, agent: AgentId, arch: &Architecture) -> [ApproximatorSpec; 3] {
        let partner = agent.other();
        [
            ApproximatorSpec::new(q_input_dim(game, agent), &arch.hidden, game.num_actions(agent), arch.activation, Head::Linear),
            ApproximatorSpec::new(
                pi_hat_input_dim(game, agent),
                &arch.hidden,
                game.num_actions(partner),
                arch.activation,
                Head::Softmax,
            ),
            ApproximatorSpec::new(f_input_dim(game, agent), &arch.hidden, game.bob_dim(agent), arch.activation, game.bob_head()),
        ]
    }

    /// Randomly initialized modules.
    pub fn new<G: Game>(game: &G, agent: AgentId, arch: &Architecture, beta: f64, rng: &mut SeededRng) -> Result<Self> {
        let [q, pi, f] = Self::specs(game, agent, arch);
        Ok(Self {
            v: AGENT_FORMAT_VERSION,
            game: game.id(),
            agent,
            beta,
            q: ParamVector::init(q, rng)?,
            pi_hat: ParamVector::init(pi, rng)?,
            f: ParamVector::init(f, rng)?,
        })
    }

    /// All-zero modules: Q is identically zero, the partner model is uniform.
    pub fn zeros<G: Game>(game: &G, agent: AgentId, arch: &Architecture, beta: f64) -> Result<Self> {
        let [q, pi, f] = Self::specs(game, agent, arch);
        Ok(Self {
            v: AGENT_FORMAT_VERSION,
            game: game.id(),
            agent,
            beta,
            q: ParamVector::zeros(q)?,
            pi_hat: ParamVector::zeros(pi)?,
            f: ParamVector::zeros(f)?,
        })
    }

    /// Fails unless these modules were built for `game` and seat `agent`.
    pub fn check_compatible<G: Game>(&self, game: &G, agent: AgentId) -> Result<()> {
        if self.v != AGENT_FORMAT_VERSION {
            return Err(config_err(format!("unsupported agent format version {}", self.v)));
        }
        if self.game != game.id() {
            return Err(config_err(format!("agent was trained for {}, not {}", self.game, game.id())));
        }
        if self.agent != agent {
            return Err(config_err(format!("agent checkpoint is for seat {}, not {}", self.agent, agent)));
        }
        let expected = [
            q_input_dim(game, agent),
            pi_hat_input_dim(game, agent),
            f_input_dim(game, agent),
        ];
        for (p, want) in [&self.q, &self.pi_hat, &self.f].into_iter().zip(expected) {
            if p.spec.input_dim() != want {
                return Err(Error::Shape { expected: want, got: p.spec.input_dim() });
            }
        }
        Ok(())
    }

    pub fn fingerprint(&self) -> u64 {
        self.q.fingerprint() ^ self.pi_hat.fingerprint().rotate_left(21) ^ self.f.fingerprint().rotate_left(42)
    }
}

/// What an agent knows when it has to pick an action.
#[derive(Debug, Clone, Copy)]
pub struct QueryContext<'a, S> {
    pub state: &'a S,
    pub agent: AgentId,
    pub own: PrivateState,
    /// Belief over the partner's private state.
    pub belief: &'a Belief,
    /// Estimate of the partner's belief about `own`.
    pub bob: &'a [f64],
}

fn q_row<G: Game>(game: &G, ctx: &QueryContext<'_, G::State>, public: &[f64], hyp: PrivateState, out: &mut Vec<f64>) {
    out.extend_from_slice(public);
    game.private_features(ctx.state, ctx.agent, ctx.own, out);
    game.private_features(ctx.state, ctx.agent.other(), hyp, out);
    out.extend_from_slice(ctx.bob);
}

/// Q input for a known pair of private states.
pub fn q_features<G: Game>(
    game: &G,
    state: &G::State,
    agent: AgentId,
    own: PrivateState,
    partner: PrivateState,
    bob: &[f64],
) -> Vec<f64> {
    let mut public = Vec::with_capacity(game.public_dim());
    game.public_features(state, &mut public);
    let belief = Belief::uniform(1);
    let ctx = QueryContext { state, agent, own, belief: &belief, bob };
    let mut row = Vec::with_capacity(q_input_dim(game, agent));
    q_row(game, &ctx, &public, partner, &mut row);
    row
}

/// Q-values for every action under one hypothesis of the partner's private state.
pub fn q_values<G: Game>(game: &G, modules: &AgentModules, ctx: &QueryContext<'_, G::State>, hyp: PrivateState) -> Result<Vec<f64>> {
    let row = q_features(game, ctx.state, ctx.agent, ctx.own, hyp, ctx.bob);
    modules.q.forward(&row)
}

/// Belief-weighted Q-values: `sum_w b(w) Q(a | s, own, w, bob)`.
pub fn expected_q<G: Game>(game: &G, modules: &AgentModules, ctx: &QueryContext<'_, G::State>) -> Result<Vec<f64>> {
    let mut public = Vec::with_capacity(game.public_dim());
    game.public_features(ctx.state, &mut public);
    let support: Vec<(usize, f64)> = ctx
        .belief
        .weights()
        .iter()
        .enumerate()
        .filter(|(_, &w)| w > 0.0)
        .map(|(i, &w)| (i, w))
        .collect();
    let width = modules.q.spec.input_dim();
    let mut rows = Vec::with_capacity(support.len() * width);
    for &(i, _) in &support {
        q_row(game, ctx, &public, PrivateState(i), &mut rows);
    }
    let out = modules.q.forward_batch(&rows, support.len())?;
    let mut values = vec![0.0; out.ncols()];
    for (r, &(_, w)) in support.iter().enumerate() {
        for (v, q) in values.iter_mut().zip(out.row(r)) {
            *v += w * q;
        }
    }
    Ok(values)
}

/// Softmax of `beta * values`, shifted by the maximum for stability.
pub fn boltzmann(values: &[f64], beta: f64) -> Vec<f64> {
    let max = values.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    let exps: Vec<f64> = values.iter().map(|&v| (beta * (v - max)).exp()).collect();
    let total: f64 = exps.iter().sum();
    exps.into_iter().map(|e| e / total).collect()
}

/// Index of the largest value; ties go to the lowest index.
pub fn argmax(values: &[f64]) -> usize {
    let mut best = 0;
    for (i, &v) in values.iter().enumerate() {
        if v > values[best] {
            best = i;
        }
    }
    best
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ActMode {
    Greedy,
    /// Boltzmann sampling at the given rationality.
    Sample { beta: f64 },
    /// Uniform with probability `eps`, Boltzmann sampling otherwise.
    EpsilonSample { eps: f64, beta: f64 },
}

pub fn select_action(values: &[f64], mode: ActMode, rng: &mut SeededRng) -> usize {
    match mode {
        ActMode::Greedy => argmax(values),
        ActMode::Sample { beta } => rng.categorical(&boltzmann(values, beta)),
        ActMode::EpsilonSample { eps, beta } => {
            if rng.uniform() < eps {
                rng.below(values.len())
            } else {
                rng.categorical(&boltzmann(values, beta))
            }
        }
    }
}

pub fn act<G: Game>(
    game: &G,
    modules: &AgentModules,
    ctx: &QueryContext<'_, G::State>,
    mode: ActMode,
    rng: &mut SeededRng,
) -> Result<usize> {
    let values = expected_q(game, modules, ctx)?;
    Ok(select_action(&values, mode, rng))
}

fn pi_hat_row<G: Game>(
    game: &G,
    state: &G::State,
    viewer: AgentId,
    public: &[f64],
    hyp: PrivateState,
    bob: &[f64],
    belief_bob: &[f64],
    out: &mut Vec<f64>,
) {
    out.extend_from_slice(public);
    game.private_features(state, viewer.other(), hyp, out);
    out.extend_from_slice(bob);
    out.extend_from_slice(belief_bob);
}

/// Input row of the partner-policy model.
///
/// Besides the public state and the hypothesized partner private state it
/// carries the viewer's own estimate of what the partner believes about it
/// (`bob`) and the viewer's belief about the partner in belief-over-belief
/// form, which stands in for the partner's estimate of the viewer.
pub fn pi_hat_features<G: Game>(
    game: &G,
    state: &G::State,
    viewer: AgentId,
    hyp: PrivateState,
    bob: &[f64],
    belief_bob: &[f64],
) -> Vec<f64> {
    let mut public = Vec::with_capacity(game.public_dim());
    game.public_features(state, &mut public);
    let mut row = Vec::with_capacity(pi_hat_input_dim(game, viewer));
    pi_hat_row(game, state, viewer, &public, hyp, bob, belief_bob, &mut row);
    row
}

/// Estimated distribution over the partner's next action given a hypothesis of its private state.
pub fn partner_policy<G: Game>(
    game: &G,
    viewer: &AgentModules,
    state: &G::State,
    hyp: PrivateState,
    bob: &[f64],
    belief: &Belief,
) -> Result<Vec<f64>> {
    let belief_bob = game.belief_to_bob(viewer.agent.other(), belief);
    viewer
        .pi_hat
        .forward(&pi_hat_features(game, state, viewer.agent, hyp, bob, &belief_bob))
}

/// Likelihood of the partner's observed `action` under every hypothesis in the
/// support of `belief`; hypotheses outside the support get 0.
pub fn partner_likelihoods<G: Game>(
    game: &G,
    viewer: &AgentModules,
    state: &G::State,
    bob: &[f64],
    belief: &Belief,
    action: usize,
) -> Result<Vec<f64>> {
    let n = belief.len();
    if n == 1 {
        return Ok(vec![1.0]);
    }
    let belief_bob = game.belief_to_bob(viewer.agent.other(), belief);
    let mut public = Vec::with_capacity(game.public_dim());
    game.public_features(state, &mut public);
    let support: Vec<usize> = (0..n).filter(|&i| belief.weights()[i] > 0.0).collect();
    let width = viewer.pi_hat.spec.input_dim();
    let mut rows = Vec::with_capacity(support.len() * width);
    for &i in &support {
        pi_hat_row(game, state, viewer.agent, &public, PrivateState(i), bob, &belief_bob, &mut rows);
    }
    let out = viewer.pi_hat.forward_batch(&rows, support.len())?;
    let mut lik = vec![0.0; n];
    for (r, &i) in support.iter().enumerate() {
        lik[i] = out[[r, action]];
    }
    Ok(lik)
}
