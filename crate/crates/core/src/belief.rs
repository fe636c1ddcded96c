//! Beliefs over a partner's private state and the updates applied to them.
//!
//! An agent's belief about its partner is refined by counterfactual Bayes: for
//! every hypothesis of the partner's private state, how likely was the action
//! just observed? Its estimate of the partner's belief about *itself* is a
//! single point propagated by a learned function.

use serde::{Deserialize, Serialize};

use crate::error::Result;
use crate::game::{AgentId, Game};
use crate::nn::ParamVector;
use crate::rng::SeededRng;

/// Posterior mass below which an update is treated as degenerate.
pub const DEGENERATE_MASS: f64 = 1e-12;

/// Probability vector over an enumerated hypothesis space.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(transparent)]
pub struct Belief {
    weights: Vec<f64>,
}

/// All posterior mass was eliminated.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Degenerate;

impl std::fmt::Display for Degenerate {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str("belief lost all probability mass")
    }
}

impl std::error::Error for Degenerate {}

impl Belief {
    pub fn uniform(n: usize) -> Self {
        Self { weights: vec![1.0 / n as f64; n] }
    }

    pub fn point(n: usize, index: usize) -> Self {
        let mut weights = vec![0.0; n];
        weights[index] = 1.0;
        Self { weights }
    }

    /// Normalize nonnegative weights into a belief.
    pub fn from_weights(weights: Vec<f64>) -> std::result::Result<Self, Degenerate> {
        normalize(weights)
    }

    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    pub fn len(&self) -> usize {
        self.weights.len()
    }

    pub fn is_empty(&self) -> bool {
        self.weights.is_empty()
    }

    pub fn is_valid(&self) -> bool {
        self.weights.iter().all(|&w| w >= 0.0 && w.is_finite())
            && (self.weights.iter().sum::<f64>() - 1.0).abs() <= 1e-9
    }

    /// Bayes' rule with per-hypothesis likelihoods of the observed action:
    /// `posterior(w) ∝ likelihood(w) * prior(w)`.
    pub fn counterfactual_update(&self, likelihood: &[f64]) -> std::result::Result<Belief, Degenerate> {
        assert_eq!(likelihood.len(), self.weights.len(), "likelihood width");
        normalize(self.weights.iter().zip(likelihood).map(|(p, l)| p * l).collect())
    }

    /// Zero out hypotheses whose mask entry is `false` and renormalize.
    pub fn apply_mask(&self, mask: &[bool]) -> std::result::Result<Belief, Degenerate> {
        assert_eq!(mask.len(), self.weights.len(), "mask width");
        normalize(
            self.weights
                .iter()
                .zip(mask)
                .map(|(&p, &keep)| if keep { p } else { 0.0 })
                .collect(),
        )
    }
}

fn normalize(mut weights: Vec<f64>) -> std::result::Result<Belief, Degenerate> {
    let total: f64 = weights.iter().sum();
    if !(total >= DEGENERATE_MASS) || !total.is_finite() {
        return Err(Degenerate);
    }
    weights.iter_mut().for_each(|w| *w /= total);
    Ok(Belief { weights })
}

/// Exact posterior by enumerating the joint distribution `P(w, a)` from a full
/// likelihood table `table[w][a] = P(a | w)` and conditioning on `observed`.
pub fn brute_force_posterior(prior: &[f64], table: &[Vec<f64>], observed: usize) -> std::result::Result<Belief, Degenerate> {
    let joint: Vec<Vec<f64>> = prior
        .iter()
        .zip(table)
        .map(|(&p, row)| row.iter().map(|&l| p * l).collect())
        .collect();
    let evidence: f64 = joint.iter().map(|row| row[observed]).sum();
    if !(evidence >= DEGENERATE_MASS) {
        return Err(Degenerate);
    }
    Ok(Belief {
        weights: joint.iter().map(|row| row[observed] / evidence).collect(),
    })
}

/// Per-slot occupancy probabilities from a belief over all `2^d` schedules.
pub fn marginalize(belief: &Belief, d: usize) -> Vec<f64> {
    let mut out = vec![0.0; d];
    for (omega, &w) in belief.weights().iter().enumerate() {
        for (slot, o) in out.iter_mut().enumerate() {
            if omega >> slot & 1 == 1 {
                *o += w;
            }
        }
    }
    out
}

/// One-hot vector at an index sampled from `belief`.
pub fn discretize_kitchen(belief: &[f64], rng: &mut SeededRng) -> Vec<f64> {
    let k = rng.categorical(belief);
    let mut v = vec![0.0; belief.len()];
    v[k] = 1.0;
    v
}

/// Round each entry to the nearest tenth, halves rounding up.
pub fn discretize_scheduling(marginals: &[f64]) -> Vec<f64> {
    marginals
        .iter()
        .map(|&x| {
            // the epsilon makes decimal halves such as 0.45 (stored just below) round up
            let tenths = (x * 10.0 + 0.5 + 1e-9).floor().clamp(0.0, 10.0);
            tenths / 10.0
        })
        .collect()
}

/// Input row for the belief-over-belief update network: old estimate, one-hot
/// own action, public state.
pub fn bob_features<G: Game>(game: &G, agent: AgentId, old: &[f64], action: usize, state: &G::State) -> Vec<f64> {
    let mut x = Vec::with_capacity(old.len() + game.num_actions(agent) + game.public_dim());
    x.extend_from_slice(old);
    let start = x.len();
    x.resize(start + game.num_actions(agent), 0.0);
    x[start + action] = 1.0;
    game.public_features(state, &mut x);
    x
}

/// Propagate an agent's estimate of its partner's belief about it through the
/// learned update `f` after the agent's own action.
pub fn bob_update<G: Game>(
    game: &G,
    agent: AgentId,
    f: &ParamVector,
    old: &[f64],
    action: usize,
    state: &G::State,
) -> Result<Vec<f64>> {
    if game.bob_dim(agent) == 1 {
        return Ok(vec![1.0]);
    }
    f.forward(&bob_features(game, agent, old, action, state))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn uniform_likelihood_keeps_prior() {
        let b = Belief::from_weights(vec![0.2, 0.3, 0.5]).unwrap();
        let post = b.counterfactual_update(&[0.4, 0.4, 0.4]).unwrap();
        for (a, c) in post.weights().iter().zip(b.weights()) {
            assert!((a - c).abs() < 1e-15);
        }
    }

    #[test]
    fn hand_bayes() {
        let b = Belief::uniform(2);
        let post = b.counterfactual_update(&[0.8, 0.2]).unwrap();
        assert!((post.weights()[0] - 0.8).abs() < 1e-15);
        assert!((post.weights()[1] - 0.2).abs() < 1e-15);
        let post = b.counterfactual_update(&[0.0, 1.0]).unwrap();
        assert_eq!(post.weights(), &[0.0, 1.0]);
    }

    #[test]
    fn zero_prior_stays_zero() {
        let b = Belief::from_weights(vec![0.0, 1.0, 1.0]).unwrap();
        let post = b.counterfactual_update(&[1.0, 0.1, 0.9]).unwrap();
        assert_eq!(post.weights()[0], 0.0);
    }

    #[test]
    fn total_elimination_is_degenerate() {
        let b = Belief::from_weights(vec![1.0, 0.0]).unwrap();
        assert_eq!(b.counterfactual_update(&[0.0, 1.0]), Err(Degenerate));
        assert_eq!(b.apply_mask(&[false, true]), Err(Degenerate));
    }

    #[test]
    fn masks() {
        let b = Belief::uniform(4);
        assert_eq!(b.apply_mask(&[true; 4]).unwrap(), b);
        let half = b.apply_mask(&[true, false, true, false]).unwrap();
        assert_eq!(half.weights(), &[0.5, 0.0, 0.5, 0.0]);
    }

    #[test]
    fn mask_from_single_slot_inform() {
        // D=3, partner informs slot 1 occupied
        let mask = crate::scheduling::consistent_schedule_mask(&[(AgentId::B, (1, 1))], AgentId::B, 3);
        let post = Belief::uniform(8).apply_mask(&mask).unwrap();
        for (omega, &w) in post.weights().iter().enumerate() {
            if omega & 0b010 != 0 {
                assert!((w - 0.25).abs() < 1e-15);
            } else {
                assert_eq!(w, 0.0);
            }
        }
    }

    #[test]
    fn marginals() {
        // D=2 hypotheses ordered by index: 00, slot0, slot1, both
        let b = Belief::from_weights(vec![0.1, 0.2, 0.3, 0.4]).unwrap();
        let m = marginalize(&b, 2);
        assert!((m[0] - 0.6).abs() < 1e-12);
        assert!((m[1] - 0.7).abs() < 1e-12);
        assert_eq!(marginalize(&Belief::point(8, 0b101), 3), vec![1.0, 0.0, 1.0]);
        assert!(marginalize(&Belief::uniform(16), 4).iter().all(|&v| (v - 0.5).abs() < 1e-12));
    }

    #[test]
    fn rounding_grid() {
        assert_eq!(discretize_scheduling(&[0.43, 0.67]), vec![0.4, 0.7]);
        assert_eq!(discretize_scheduling(&[0.0, 1.0]), vec![0.0, 1.0]);
        assert_eq!(discretize_scheduling(&[0.45]), vec![0.5]);
        assert_eq!(discretize_scheduling(&[0.05, 0.95, 0.35]), vec![0.1, 1.0, 0.4]);
    }

    #[test]
    fn kitchen_discretization() {
        let mut rng = SeededRng::new(0);
        for _ in 0..100 {
            assert_eq!(discretize_kitchen(&[1.0, 0.0, 0.0, 0.0], &mut rng), vec![1.0, 0.0, 0.0, 0.0]);
        }
        let mut a = SeededRng::new(5);
        let mut b = SeededRng::new(5);
        let u = [0.25; 4];
        for _ in 0..20 {
            assert_eq!(discretize_kitchen(&u, &mut a), discretize_kitchen(&u, &mut b));
        }
    }

    #[test]
    fn brute_force_identity_on_uniform_likelihood() {
        let prior = vec![0.1, 0.0, 0.9];
        let table = vec![vec![0.5, 0.5]; 3];
        let post = brute_force_posterior(&prior, &table, 1).unwrap();
        assert!((post.weights()[0] - 0.1).abs() < 1e-15);
        assert_eq!(post.weights()[1], 0.0);
    }
}
