//! Kitchen collaboration: a chef who knows the target dish and an assistant
//! who does not take turns putting ingredients on a shared workplace.

use std::collections::{BTreeSet, HashSet};

use serde::{Deserialize, Serialize};

use crate::belief::Belief;
use crate::error::{config_err, usage_err, Result};
use crate::game::{
    AgentId, FailureCause, Game, PrivateState, StepOutcome, TerminalKind, EPISODE_CAP,
};
use crate::nn::{Head, LossKind};
use crate::rng::SeededRng;

const MAX_RESAMPLES: usize = 10_000;

/// A multiset of ingredients, kept sorted.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(transparent)]
pub struct Dish(pub Vec<u8>);

impl Dish {
    pub fn new(mut ingredients: Vec<u8>) -> Self {
        ingredients.sort_unstable();
        Dish(ingredients)
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn counts(&self, w: usize) -> Vec<u8> {
        let mut c = vec![0u8; w];
        for &i in &self.0 {
            c[i as usize] += 1;
        }
        c
    }

    pub fn contains(&self, ingredient: u8) -> bool {
        self.0.binary_search(&ingredient).is_ok()
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(transparent)]
pub struct Recipe(pub Vec<Dish>);

impl Recipe {
    pub fn dishes(&self) -> &[Dish] {
        &self.0
    }
}

/// A recipe plus the index of the target dish (the chef's private state).
#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct KitchenScenario {
    pub recipe: Recipe,
    pub target: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct KitchenState {
    pub recipe: Recipe,
    /// Ingredient counts on the workplace.
    pub prepared: Vec<u8>,
    pub turn: AgentId,
    pub step: usize,
}

/// Draw `m` values from `0..=w` with replacement and drop every `w`.
pub fn generate_dish(rng: &mut SeededRng, m: usize, w: usize) -> Dish {
    let picks = (0..m)
        .map(|_| rng.below(w + 1))
        .filter(|&x| x != w)
        .map(|x| x as u8)
        .collect();
    Dish::new(picks)
}

/// `k` pairwise-distinct, nonempty dishes.
pub fn generate_recipe(rng: &mut SeededRng, k: usize, m: usize, w: usize) -> Result<Recipe> {
    generate_recipe_from(rng, k, m, w, |_| true)
}

/// Like [`generate_recipe`], resampling any dish rejected by `accept`.
pub fn generate_recipe_from(
    rng: &mut SeededRng,
    k: usize,
    m: usize,
    w: usize,
    accept: impl Fn(&Dish) -> bool,
) -> Result<Recipe> {
    let mut dishes: Vec<Dish> = Vec::with_capacity(k);
    let mut attempts = 0;
    while dishes.len() < k {
        attempts += 1;
        if attempts > MAX_RESAMPLES * k.max(1) {
            return Err(config_err(format!(
                "could not draw {k} distinct dishes with M={m}, W={w}"
            )));
        }
        let dish = generate_dish(rng, m, w);
        if dish.is_empty() || dishes.contains(&dish) || !accept(&dish) {
            continue;
        }
        dishes.push(dish);
    }
    Ok(Recipe(dishes))
}

/// Target multiset minus the prepared multiset, as counts (never negative).
pub fn remaining_needed(prepared: &[u8], dish: &Dish) -> Vec<u8> {
    let mut c = dish.counts(prepared.len());
    for (ci, &p) in c.iter_mut().zip(prepared) {
        *ci = ci.saturating_sub(p);
    }
    c
}

/// Ingredients of the target dish that appear in no other dish of the recipe.
pub fn unique_identifiers(recipe: &Recipe, target: usize) -> BTreeSet<u8> {
    let dishes = recipe.dishes();
    dishes[target]
        .0
        .iter()
        .copied()
        .filter(|&ing| {
            dishes
                .iter()
                .enumerate()
                .all(|(k, d)| k == target || !d.contains(ing))
        })
        .collect()
}

fn is_sub_multiset(prepared: &[u8], dish_counts: &[u8]) -> bool {
    prepared.iter().zip(dish_counts).all(|(p, d)| p <= d)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct KitchenGame {
    /// Dishes per recipe.
    pub k: usize,
    /// Maximum ingredients per dish.
    pub m: usize,
    /// Number of distinct ingredients.
    pub w: usize,
}

impl KitchenGame {
    pub fn new(k: usize, m: usize, w: usize) -> Result<Self> {
        if k == 0 || m == 0 || w < 2 || w > u8::MAX as usize {
            return Err(config_err(format!("invalid kitchen sizes K={k}, M={m}, W={w}")));
        }
        Ok(Self { k, m, w })
    }

    pub fn validate(&self, scenario: &KitchenScenario) -> Result<()> {
        let dishes = scenario.recipe.dishes();
        if dishes.len() != self.k {
            return Err(config_err(format!("recipe has {} dishes, expected {}", dishes.len(), self.k)));
        }
        if scenario.target >= self.k {
            return Err(config_err(format!("target {} out of range", scenario.target)));
        }
        let mut seen = HashSet::new();
        for d in dishes {
            if d.is_empty() || d.len() > self.m {
                return Err(config_err(format!("dish {:?} must hold 1..={} ingredients", d.0, self.m)));
            }
            if d.0.iter().any(|&i| i as usize >= self.w) {
                return Err(config_err(format!("dish {:?} has an ingredient >= W={}", d.0, self.w)));
            }
            if d.0.windows(2).any(|p| p[0] > p[1]) {
                return Err(config_err(format!("dish {:?} is not sorted", d.0)));
            }
            if !seen.insert(d) {
                return Err(config_err(format!("duplicate dish {:?}", d.0)));
            }
        }
        Ok(())
    }

    pub fn random_scenario(&self, rng: &mut SeededRng) -> Result<KitchenScenario> {
        let recipe = generate_recipe(rng, self.k, self.m, self.w)?;
        let target = rng.below(self.k);
        Ok(KitchenScenario { recipe, target })
    }

    /// Dishes still compatible with the workplace.
    pub fn consistent_dishes(&self, state: &KitchenState) -> Vec<bool> {
        state
            .recipe
            .dishes()
            .iter()
            .map(|d| is_sub_multiset(&state.prepared, &d.counts(self.w)))
            .collect()
    }
}

impl Game for KitchenGame {
    type State = KitchenState;
    type Scenario = KitchenScenario;

    fn id(&self) -> String {
        format!("kitchen:k={},m={},w={}", self.k, self.m, self.w)
    }

    fn num_actions(&self, _agent: AgentId) -> usize {
        self.w
    }

    fn private_space(&self, agent: AgentId) -> usize {
        if agent == AgentId::A {
            self.k
        } else {
            1
        }
    }

    fn reset(&self, scenario: &KitchenScenario) -> Result<(KitchenState, [PrivateState; 2])> {
        self.validate(scenario)?;
        let state = KitchenState {
            recipe: scenario.recipe.clone(),
            prepared: vec![0; self.w],
            turn: AgentId::A,
            step: 0,
        };
        Ok((state, [PrivateState(scenario.target), PrivateState(0)]))
    }

    fn step(
        &self,
        state: &KitchenState,
        privates: &[PrivateState; 2],
        action: usize,
    ) -> Result<StepOutcome<KitchenState>> {
        if action >= self.w {
            return Err(usage_err(format!("ingredient {action} out of range 0..{}", self.w)));
        }
        let target = state
            .recipe
            .dishes()
            .get(privates[0].0)
            .ok_or_else(|| usage_err("target index out of range"))?;
        let need = target.counts(self.w);
        if !is_sub_multiset(&state.prepared, &need) {
            return Err(usage_err("step called on a failed game"));
        }

        let mut next = state.clone();
        next.prepared[action] += 1;
        next.step += 1;
        next.turn = state.turn.other();

        if next.prepared[action] > need[action] {
            let cause = if need[action] == 0 {
                FailureCause::WrongIngredient
            } else {
                FailureCause::OverPrepared
            };
            return Ok(StepOutcome {
                next_state: next,
                rewards: [-1.0, -1.0],
                terminal: TerminalKind::Failure,
                cause: Some(cause),
            });
        }
        if next.prepared == need {
            return Ok(StepOutcome {
                next_state: next,
                rewards: [1.0, 1.0],
                terminal: TerminalKind::Success,
                cause: None,
            });
        }
        if next.step >= EPISODE_CAP {
            return Ok(StepOutcome {
                next_state: next,
                rewards: [-1.0, -1.0],
                terminal: TerminalKind::Failure,
                cause: Some(FailureCause::EpisodeCap),
            });
        }
        Ok(StepOutcome {
            next_state: next,
            rewards: [0.0, 0.0],
            terminal: TerminalKind::None,
            cause: None,
        })
    }

    fn turn(&self, state: &KitchenState) -> AgentId {
        state.turn
    }

    fn step_count(&self, state: &KitchenState) -> usize {
        state.step
    }

    fn public_dim(&self) -> usize {
        self.k * self.w + self.w + self.k + self.w + 1
    }

    /// Recipe rows of ingredient counts, workplace counts, per-dish consistency
    /// flags, per-ingredient share of consistent dishes that still need it, and
    /// the step counter.
    fn public_features(&self, state: &KitchenState, out: &mut Vec<f64>) {
        let counts: Vec<Vec<u8>> = state.recipe.dishes().iter().map(|d| d.counts(self.w)).collect();
        for c in &counts {
            out.extend(c.iter().map(|&x| x as f64));
        }
        out.extend(state.prepared.iter().map(|&x| x as f64));
        let consistent: Vec<bool> = counts.iter().map(|c| is_sub_multiset(&state.prepared, c)).collect();
        out.extend(consistent.iter().map(|&b| if b { 1.0 } else { 0.0 }));
        for ing in 0..self.w {
            let needing = counts
                .iter()
                .zip(&consistent)
                .filter(|(c, &ok)| ok && c[ing] > state.prepared[ing])
                .count();
            out.push(needing as f64 / self.k as f64);
        }
        out.push(state.step as f64 / EPISODE_CAP as f64);
    }

    fn private_dim(&self, agent: AgentId) -> usize {
        if agent == AgentId::A {
            self.k + self.w
        } else {
            0
        }
    }

    /// Chef: one-hot target plus what the target still needs. Assistant: nothing.
    fn private_features(&self, state: &KitchenState, agent: AgentId, omega: PrivateState, out: &mut Vec<f64>) {
        if agent != AgentId::A {
            return;
        }
        out.extend((0..self.k).map(|k| if k == omega.0 { 1.0 } else { 0.0 }));
        let rem = remaining_needed(&state.prepared, &state.recipe.dishes()[omega.0]);
        out.extend(rem.iter().map(|&x| x as f64));
    }

    fn bob_dim(&self, about: AgentId) -> usize {
        self.private_space(about)
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

    fn discretize(&self, bob: &[f64], rng: &mut SeededRng) -> Vec<f64> {
        crate::belief::discretize_kitchen(bob, rng)
    }

    fn consistency_mask(&self, state: &KitchenState, about: AgentId) -> Option<Vec<bool>> {
        if about == AgentId::A {
            Some(self.consistent_dishes(state))
        } else {
            None
        }
    }

    fn unique_opening(&self, scenario: &KitchenScenario, action: usize) -> Option<bool> {
        let unique = unique_identifiers(&scenario.recipe, scenario.target);
        if unique.is_empty() {
            None
        } else {
            Some(unique.contains(&(action as u8)))
        }
    }
}

/// Every nonempty dish with at most `m` ingredients drawn from `w`, in lexicographic order.
pub fn enumerate_dishes(m: usize, w: usize) -> Vec<Dish> {
    fn grow(cur: &mut Vec<u8>, from: usize, m: usize, w: usize, out: &mut Vec<Dish>) {
        if !cur.is_empty() {
            out.push(Dish(cur.clone()));
        }
        if cur.len() == m {
            return;
        }
        for i in from..w {
            cur.push(i as u8);
            grow(cur, i, m, w, out);
            cur.pop();
        }
    }
    let mut out = Vec::new();
    grow(&mut Vec::new(), 0, m, w, &mut out);
    out
}
