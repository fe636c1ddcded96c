//! Theory-of-Mind agents for two-player cooperative games with private information.
//!
//! Each agent keeps a belief over its partner's private state, updated by
//! counterfactual Bayes through a learned model of the partner's policy, and an
//! estimate of the partner's belief about itself, propagated by a learned
//! update. Agents act on belief-weighted Q-values and are trained in
//! alternation with the partner frozen.

pub mod belief;
pub mod config;
pub mod error;
pub mod game;
pub mod harness;
pub mod kitchen;
pub mod nn;
pub mod policy;
pub mod rng;
pub mod scheduling;
pub mod toy;
pub mod trainer;

pub use error::{Error, Result};
