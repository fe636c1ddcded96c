//! A five-state decision chain with a partner that can only pass.
//!
//! Small enough to solve by value iteration, so the learned Q-function can be
//! compared entry by entry against exact optimal values.

use serde::{Deserialize, Serialize};

use crate::belief::Belief;
use crate::error::{usage_err, Result};
use crate::game::{AgentId, FailureCause, Game, PrivateState, StepOutcome, TerminalKind, EPISODE_CAP};
use crate::nn::{Head, LossKind};
use crate::rng::SeededRng;

pub const NUM_STATES: usize = 5;
pub const NUM_ACTIONS: usize = 2;
/// Successor marker for "episode ends".
pub const END: usize = usize::MAX;

/// `(next node, reward)` for every node and action.
pub const TRANSITIONS: [[(usize, f64); NUM_ACTIONS]; NUM_STATES] = [
    [(1, 0.0), (2, 0.2)],
    [(3, 0.0), (END, 0.5)],
    [(3, 0.1), (4, -0.2)],
    [(4, 0.3), (END, 0.6)],
    [(END, 1.0), (END, -1.0)],
];

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ToyState {
    pub node: usize,
    pub turn: AgentId,
    pub step: usize,
    /// Reward A earned on its last move, paid out when the episode ends on the partner's pass.
    pub pending_end: bool,
}

#[derive(Debug, Clone, Copy, Default)]
pub struct ToyGame;

impl ToyGame {
    pub fn state_at(node: usize) -> ToyState {
        ToyState { node, turn: AgentId::A, step: 0, pending_end: false }
    }
}

/// Optimal action values of the chain by value iteration.
pub fn value_iteration(gamma: f64, tol: f64) -> [[f64; NUM_ACTIONS]; NUM_STATES] {
    let mut v = [0.0; NUM_STATES];
    loop {
        let mut delta: f64 = 0.0;
        for s in 0..NUM_STATES {
            let best = (0..NUM_ACTIONS)
                .map(|a| backup(&v, s, a, gamma))
                .fold(f64::NEG_INFINITY, f64::max);
            delta = delta.max((best - v[s]).abs());
            v[s] = best;
        }
        if delta < tol {
            break;
        }
    }
    let mut q = [[0.0; NUM_ACTIONS]; NUM_STATES];
    for (s, row) in q.iter_mut().enumerate() {
        for (a, x) in row.iter_mut().enumerate() {
            *x = backup(&v, s, a, gamma);
        }
    }
    q
}

fn backup(v: &[f64; NUM_STATES], s: usize, a: usize, gamma: f64) -> f64 {
    let (next, r) = TRANSITIONS[s][a];
    if next == END {
        r
    } else {
        r + gamma * v[next]
    }
}

impl Game for ToyGame {
    type State = ToyState;
    type Scenario = ();

    fn id(&self) -> String {
        "toy-chain".into()
    }

    fn num_actions(&self, agent: AgentId) -> usize {
        if agent == AgentId::A {
            NUM_ACTIONS
        } else {
            1
        }
    }

    fn private_space(&self, _agent: AgentId) -> usize {
        1
    }

    fn reset(&self, _scenario: &()) -> Result<(ToyState, [PrivateState; 2])> {
        Ok((Self::state_at(0), [PrivateState(0); 2]))
    }

    fn step(&self, state: &ToyState, _privates: &[PrivateState; 2], action: usize) -> Result<StepOutcome<ToyState>> {
        if action >= self.num_actions(state.turn) {
            return Err(usage_err(format!("action {action} out of range")));
        }
        let step = state.step + 1;
        if state.turn == AgentId::B {
            let next = ToyState { node: state.node, turn: AgentId::A, step, pending_end: false };
            let terminal = if state.pending_end { TerminalKind::Success } else { TerminalKind::None };
            return Ok(StepOutcome { next_state: next, rewards: [0.0; 2], terminal, cause: None });
        }
        let (node, r) = TRANSITIONS[state.node][action];
        let next = ToyState {
            node: if node == END { state.node } else { node },
            turn: AgentId::B,
            step,
            pending_end: node == END,
        };
        let capped = step >= EPISODE_CAP;
        Ok(StepOutcome {
            next_state: next,
            rewards: [r; 2],
            terminal: if capped { TerminalKind::Failure } else { TerminalKind::None },
            cause: capped.then_some(FailureCause::EpisodeCap),
        })
    }

    fn turn(&self, state: &ToyState) -> AgentId {
        state.turn
    }

    fn step_count(&self, state: &ToyState) -> usize {
        state.step
    }

    fn public_features(&self, state: &ToyState, out: &mut Vec<f64>) {
        let start = out.len();
        out.resize(start + NUM_STATES, 0.0);
        out[start + state.node] = 1.0;
    }

    fn public_dim(&self) -> usize {
        NUM_STATES
    }

    fn private_features(&self, _state: &ToyState, _agent: AgentId, _omega: PrivateState, _out: &mut Vec<f64>) {}

    fn private_dim(&self, _agent: AgentId) -> usize {
        0
    }

    fn bob_dim(&self, _about: AgentId) -> usize {
        1
    }

    fn bob_head(&self) -> Head {
        Head::Softmax
    }

    fn bob_loss(&self) -> LossKind {
        LossKind::KlDivergence
    }

    fn belief_to_bob(&self, _about: AgentId, belief: &Belief) -> Vec<f64> {
        belief.weights().to_vec()
    }

    fn discretize(&self, bob: &[f64], _rng: &mut SeededRng) -> Vec<f64> {
        bob.to_vec()
    }

    fn consistency_mask(&self, _state: &ToyState, _about: AgentId) -> Option<Vec<bool>> {
        None
    }
}
