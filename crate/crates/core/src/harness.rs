//! Dataset splits, evaluation, scripted baselines and partner-switch tests.

use std::collections::{BTreeMap, BTreeSet};
use std::fs;
use std::path::Path;

use rayon::prelude::*;
use serde::de::DeserializeOwned;
use serde::{Deserialize, Serialize};

use crate::error::{config_err, Result};
use crate::game::{AgentId, FailureCause, Game, PrivateState, TerminalKind};
use crate::kitchen::{enumerate_dishes, generate_dish, remaining_needed, unique_identifiers, Dish, KitchenGame, KitchenScenario, Recipe};
use crate::policy::{ActMode, AgentModules};
use crate::rng::SeededRng;
use crate::scheduling::{generate_schedule, SchedAction, SchedScenario, Schedule, SchedulingGame};
use crate::trainer::{run_episode, EpisodeOptions};

/// Tries per scenario before a restricted generator is declared infeasible.
const MAX_DRAWS: usize = 100_000;

/// How to carve one train/test split.
///
/// Primitives are dishes for the kitchen and single schedules for scheduling;
/// no primitive of the test side may appear anywhere in training.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SplitSpec {
    pub seed: u64,
    pub train_primitives: usize,
    pub test_primitives: usize,
    pub train_scenarios: usize,
    pub test_scenarios: usize,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Split<S> {
    pub train: Vec<S>,
    pub test: Vec<S>,
}

fn partition<T: Clone>(mut pool: Vec<T>, spec: &SplitSpec, rng: &mut SeededRng, what: &str) -> Result<(Vec<T>, Vec<T>)> {
    let want = spec.train_primitives + spec.test_primitives;
    if spec.train_primitives == 0 || spec.test_primitives == 0 || want > pool.len() {
        return Err(config_err(format!(
            "cannot split {} {what} into {} exclusive training and {} test {what}",
            pool.len(),
            spec.train_primitives,
            spec.test_primitives
        )));
    }
    for i in (1..pool.len()).rev() {
        pool.swap(i, rng.below(i + 1));
    }
    let test = pool.split_off(pool.len() - spec.test_primitives);
    pool.truncate(spec.train_primitives);
    Ok((pool, test))
}

fn kitchen_scenario_from(game: &KitchenGame, allowed: &BTreeSet<Dish>, rng: &mut SeededRng) -> Result<KitchenScenario> {
    let mut dishes: Vec<Dish> = Vec::with_capacity(game.k);
    let mut draws = 0;
    while dishes.len() < game.k {
        draws += 1;
        if draws > MAX_DRAWS {
            return Err(config_err("dish split too small to fill a recipe"));
        }
        let d = generate_dish(rng, game.m, game.w);
        if allowed.contains(&d) && !dishes.contains(&d) {
            dishes.push(d);
        }
    }
    Ok(KitchenScenario { recipe: Recipe(dishes), target: rng.below(game.k) })
}

/// Kitchen split whose training and test recipes draw on disjoint dish sets.
pub fn kitchen_split(game: &KitchenGame, spec: &SplitSpec) -> Result<Split<KitchenScenario>> {
    let mut rng = SeededRng::new(spec.seed);
    let (train_d, test_d) = partition(enumerate_dishes(game.m, game.w), spec, &mut rng, "dishes")?;
    if train_d.len() < game.k || test_d.len() < game.k {
        return Err(config_err(format!("each side needs at least K={} dishes", game.k)));
    }
    let train_d: BTreeSet<Dish> = train_d.into_iter().collect();
    let test_d: BTreeSet<Dish> = test_d.into_iter().collect();
    let train = (0..spec.train_scenarios)
        .map(|_| kitchen_scenario_from(game, &train_d, &mut rng))
        .collect::<Result<Vec<_>>>()?;
    let test = (0..spec.test_scenarios)
        .map(|_| kitchen_scenario_from(game, &test_d, &mut rng))
        .collect::<Result<Vec<_>>>()?;
    let split = Split { train, test };
    check_kitchen_exclusive(&split)?;
    Ok(split)
}

pub fn check_kitchen_exclusive(split: &Split<KitchenScenario>) -> Result<()> {
    let train: BTreeSet<&Dish> = split.train.iter().flat_map(|s| s.recipe.dishes()).collect();
    match split.test.iter().flat_map(|s| s.recipe.dishes()).find(|d| train.contains(d)) {
        Some(d) => Err(config_err(format!("test dish {:?} also appears in training", d.0))),
        None => Ok(()),
    }
}

fn draw_schedule(game: &SchedulingGame, allowed: &BTreeSet<Schedule>, rng: &mut SeededRng) -> Result<Schedule> {
    for _ in 0..MAX_DRAWS {
        let s = generate_schedule(rng, game.d, game.p);
        if allowed.contains(&s) {
            return Ok(s);
        }
    }
    Err(config_err("schedule split too unlikely under the generator"))
}

/// Scheduling split whose training and test pairs draw on disjoint schedule sets.
pub fn scheduling_split(game: &SchedulingGame, spec: &SplitSpec) -> Result<Split<SchedScenario>> {
    let mut rng = SeededRng::new(spec.seed);
    let all: Vec<Schedule> = (0..1usize << game.d).map(|i| Schedule::from_index(i, game.d)).collect();
    let (train_s, test_s) = partition(all, spec, &mut rng, "schedules")?;
    let train_s: BTreeSet<Schedule> = train_s.into_iter().collect();
    let test_s: BTreeSet<Schedule> = test_s.into_iter().collect();
    let mut pairs = |n: usize, set: &BTreeSet<Schedule>| -> Result<Vec<SchedScenario>> {
        (0..n)
            .map(|_| {
                let a = draw_schedule(game, set, &mut rng)?;
                let b = draw_schedule(game, set, &mut rng)?;
                Ok(SchedScenario { a, b })
            })
            .collect()
    };
    let train = pairs(spec.train_scenarios, &train_s)?;
    let test = pairs(spec.test_scenarios, &test_s)?;
    let split = Split { train, test };
    check_scheduling_exclusive(&split)?;
    Ok(split)
}

pub fn check_scheduling_exclusive(split: &Split<SchedScenario>) -> Result<()> {
    let train: BTreeSet<&Schedule> = split.train.iter().flat_map(|s| [&s.a, &s.b]).collect();
    match split.test.iter().flat_map(|s| [&s.a, &s.b]).find(|s| train.contains(s)) {
        Some(s) => Err(config_err(format!("test schedule {s:?} also appears in training"))),
        None => Ok(()),
    }
}

pub fn save_scenarios<S: Serialize>(path: &Path, scenarios: &[S]) -> Result<()> {
    fs::write(path, serde_json::to_string(scenarios)?)?;
    Ok(())
}

pub fn load_scenarios<S: DeserializeOwned>(path: &Path) -> Result<Vec<S>> {
    Ok(serde_json::from_str(&fs::read_to_string(path)?)?)
}

/// Evaluation settings. Episode `i` plays scenario `i mod len` with its own
/// random stream, so results do not depend on scheduling across threads.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EvalOptions {
    pub episodes: usize,
    pub seed: u64,
    pub mode: ActMode,
}

impl EvalOptions {
    pub fn greedy(episodes: usize, seed: u64) -> Self {
        Self { episodes, seed, mode: ActMode::Greedy }
    }
}

#[derive(Debug, Clone, PartialEq)]
struct EpisodeSummary {
    success: bool,
    cause: Option<FailureCause>,
    returns: [f64; 2],
    length: usize,
    unique_opening: Option<bool>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EvalReport {
    pub label: String,
    pub episodes: usize,
    pub successes: usize,
    pub success_rate: f64,
    /// Standard error of the success rate under a Bernoulli model.
    pub stderr: f64,
    pub failures: BTreeMap<String, usize>,
    /// Share of openings that play a unique identifier, over episodes where one exists.
    pub unique_identifier_rate: Option<f64>,
    pub unique_identifier_episodes: usize,
    pub mean_return: [f64; 2],
    pub mean_length: f64,
}

const CAUSES: [FailureCause; 7] = [
    FailureCause::WrongIngredient,
    FailureCause::OverPrepared,
    FailureCause::WrongProposal,
    FailureCause::WrongReject,
    FailureCause::WrongInform,
    FailureCause::EpisodeCap,
    FailureCause::Other,
];

impl EvalReport {
    fn from_summaries(label: &str, all: &[EpisodeSummary]) -> Self {
        let n = all.len();
        let successes = all.iter().filter(|e| e.success).count();
        let p = if n > 0 { successes as f64 / n as f64 } else { 0.0 };
        let mut failures = BTreeMap::new();
        for e in all.iter().filter(|e| !e.success) {
            *failures.entry(e.cause.unwrap_or(FailureCause::Other).as_str().to_string()).or_insert(0) += 1;
        }
        let openings: Vec<bool> = all.iter().filter_map(|e| e.unique_opening).collect();
        let hits = openings.iter().filter(|&&h| h).count();
        let denom = n.max(1) as f64;
        let mut mean_return = [0.0; 2];
        let mut len = 0.0;
        for e in all {
            mean_return[0] += e.returns[0];
            mean_return[1] += e.returns[1];
            len += e.length as f64;
        }
        Self {
            label: label.to_string(),
            episodes: n,
            successes,
            success_rate: p,
            stderr: if n > 0 { (p * (1.0 - p) / n as f64).sqrt() } else { 0.0 },
            failures,
            unique_identifier_rate: (!openings.is_empty()).then(|| hits as f64 / openings.len() as f64),
            unique_identifier_episodes: openings.len(),
            mean_return: [mean_return[0] / denom, mean_return[1] / denom],
            mean_length: len / denom,
        }
    }

    /// Pool the episodes of several reports.
    pub fn merge(label: &str, parts: &[EvalReport]) -> Self {
        let episodes: usize = parts.iter().map(|r| r.episodes).sum();
        let successes: usize = parts.iter().map(|r| r.successes).sum();
        let p = if episodes > 0 { successes as f64 / episodes as f64 } else { 0.0 };
        let mut failures = BTreeMap::new();
        for r in parts {
            for (k, v) in &r.failures {
                *failures.entry(k.clone()).or_insert(0) += v;
            }
        }
        let ue: usize = parts.iter().map(|r| r.unique_identifier_episodes).sum();
        let uh: f64 = parts
            .iter()
            .map(|r| r.unique_identifier_rate.unwrap_or(0.0) * r.unique_identifier_episodes as f64)
            .sum();
        let w = |f: &dyn Fn(&EvalReport) -> f64| {
            parts.iter().map(|r| f(r) * r.episodes as f64).sum::<f64>() / episodes.max(1) as f64
        };
        Self {
            label: label.to_string(),
            episodes,
            successes,
            success_rate: p,
            stderr: if episodes > 0 { (p * (1.0 - p) / episodes as f64).sqrt() } else { 0.0 },
            failures,
            unique_identifier_rate: (ue > 0).then(|| uh / ue as f64),
            unique_identifier_episodes: ue,
            mean_return: [w(&|r| r.mean_return[0]), w(&|r| r.mean_return[1])],
            mean_length: w(&|r| r.mean_length),
        }
    }

    pub fn csv_header() -> String {
        let mut cols = vec![
            "label",
            "episodes",
            "successes",
            "success_rate",
            "stderr",
            "mean_return_a",
            "mean_return_b",
            "mean_length",
            "unique_identifier_rate",
        ]
        .into_iter()
        .map(String::from)
        .collect::<Vec<_>>();
        cols.extend(CAUSES.iter().map(|c| format!("fail_{}", c.as_str())));
        cols.join(",")
    }

    pub fn csv_row(&self) -> String {
        let mut cols = vec![
            self.label.replace(',', ";"),
            self.episodes.to_string(),
            self.successes.to_string(),
            format!("{:.6}", self.success_rate),
            format!("{:.6}", self.stderr),
            format!("{:.6}", self.mean_return[0]),
            format!("{:.6}", self.mean_return[1]),
            format!("{:.4}", self.mean_length),
            self.unique_identifier_rate.map(|u| format!("{u:.6}")).unwrap_or_default(),
        ];
        cols.extend(CAUSES.iter().map(|c| self.failures.get(c.as_str()).copied().unwrap_or(0).to_string()));
        cols.join(",")
    }
}

/// Write reports as CSV with a header row.
pub fn write_csv(path: &Path, reports: &[EvalReport]) -> Result<()> {
    let mut text = EvalReport::csv_header();
    text.push('\n');
    for r in reports {
        text.push_str(&r.csv_row());
        text.push('\n');
    }
    fs::write(path, text)?;
    Ok(())
}

fn run_parallel<G, F>(_game: &G, scenarios: &[G::Scenario], opts: &EvalOptions, label: &str, play: F) -> Result<EvalReport>
where
    G: Game,
    F: Fn(&G::Scenario, &mut SeededRng) -> Result<EpisodeSummary> + Sync,
{
    if scenarios.is_empty() {
        return Err(config_err("no scenarios to evaluate"));
    }
    let summaries = (0..opts.episodes)
        .into_par_iter()
        .map(|i| {
            let mut rng = SeededRng::derive(opts.seed, i as u64);
            play(&scenarios[i % scenarios.len()], &mut rng)
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(EvalReport::from_summaries(label, &summaries))
}

/// Decentralized evaluation of a trained pair. Parameters are only read.
pub fn evaluate<G: Game>(game: &G, agents: [&AgentModules; 2], scenarios: &[G::Scenario], opts: &EvalOptions) -> Result<EvalReport> {
    for id in AgentId::ALL {
        agents[id.index()].check_compatible(game, id)?;
    }
    let ep_opts = EpisodeOptions { modes: [opts.mode; 2], supervise: false };
    run_parallel(game, scenarios, opts, "agents", |scenario, rng| {
        let ep = run_episode(game, agents, scenario, &ep_opts, rng)?.trajectory;
        let opening = ep.steps.first().and_then(|s| game.unique_opening(scenario, s.action));
        Ok(EpisodeSummary {
            success: ep.is_success(),
            cause: ep.cause,
            returns: [ep.total_reward(AgentId::A), ep.total_reward(AgentId::B)],
            length: ep.len(),
            unique_opening: opening,
        })
    })
}

/// Cross-paired evaluation of two independently trained teams: A from the
/// first with B from the second, and vice versa, pooled.
pub fn switch_eval<G: Game>(
    game: &G,
    first: &[AgentModules; 2],
    second: &[AgentModules; 2],
    scenarios: &[G::Scenario],
    opts: &EvalOptions,
) -> Result<EvalReport> {
    let one = evaluate(game, [&first[0], &second[1]], scenarios, opts)?;
    let two = evaluate(game, [&second[0], &first[1]], scenarios, opts)?;
    Ok(EvalReport::merge("switched", &[one, two]))
}

/// A fixed, hand-written policy used for baselines.
pub trait Scripted<G: Game>: Sync {
    fn act(&self, game: &G, state: &G::State, own: PrivateState, rng: &mut SeededRng) -> usize;
}

/// Uniform over all actions.
#[derive(Debug, Clone, Copy, Default)]
pub struct UniformPolicy;

impl<G: Game> Scripted<G> for UniformPolicy {
    fn act(&self, game: &G, state: &G::State, _own: PrivateState, rng: &mut SeededRng) -> usize {
        rng.below(game.num_actions(game.turn(state)))
    }
}

/// Chef that adds a uniformly chosen ingredient still missing from its target.
#[derive(Debug, Clone, Copy, Default)]
pub struct InformedChef;

impl Scripted<KitchenGame> for InformedChef {
    fn act(&self, game: &KitchenGame, state: &crate::kitchen::KitchenState, own: PrivateState, rng: &mut SeededRng) -> usize {
        let need = remaining_needed(&state.prepared, &state.recipe.dishes()[own.0]);
        let open: Vec<usize> = (0..game.w).filter(|&i| need[i] > 0).collect();
        if open.is_empty() {
            rng.below(game.w)
        } else {
            open[rng.below(open.len())]
        }
    }
}

/// Proposes a uniformly random slot.
#[derive(Debug, Clone, Copy, Default)]
pub struct RandomSlot;

impl Scripted<SchedulingGame> for RandomSlot {
    fn act(&self, game: &SchedulingGame, _state: &crate::scheduling::SchedState, _own: PrivateState, rng: &mut SeededRng) -> usize {
        let slot = rng.below(game.d);
        game.action_index(SchedAction::Propose { slot }).expect("slot in range")
    }
}

/// Proposes a uniformly random slot that is free in its own schedule; rejects when fully booked.
#[derive(Debug, Clone, Copy, Default)]
pub struct OwnFreeSlot;

impl Scripted<SchedulingGame> for OwnFreeSlot {
    fn act(&self, game: &SchedulingGame, _state: &crate::scheduling::SchedState, own: PrivateState, rng: &mut SeededRng) -> usize {
        let mine = Schedule::from_index(own.0, game.d);
        let free: Vec<usize> = (0..game.d).filter(|&s| !mine.occupied(s)).collect();
        let action = if free.is_empty() {
            SchedAction::Reject
        } else {
            SchedAction::Propose { slot: free[rng.below(free.len())] }
        };
        game.action_index(action).expect("action in range")
    }
}

/// Evaluate a pair of scripted policies.
pub fn evaluate_scripted<G: Game>(
    game: &G,
    policies: [&dyn Scripted<G>; 2],
    scenarios: &[G::Scenario],
    opts: &EvalOptions,
    label: &str,
) -> Result<EvalReport> {
    run_parallel(game, scenarios, opts, label, |scenario, rng| {
        let (mut state, privates) = game.reset(scenario)?;
        let mut returns = [0.0; 2];
        let mut length = 0;
        let mut opening = None;
        loop {
            let actor = game.turn(&state);
            let a = policies[actor.index()].act(game, &state, privates[actor.index()], rng);
            if length == 0 {
                opening = game.unique_opening(scenario, a);
            }
            let out = game.step(&state, &privates, a)?;
            returns[0] += out.rewards[0];
            returns[1] += out.rewards[1];
            length += 1;
            if out.is_terminal() {
                return Ok(EpisodeSummary {
                    success: out.terminal == TerminalKind::Success,
                    cause: out.cause,
                    returns,
                    length,
                    unique_opening: opening,
                });
            }
            state = out.next_state;
        }
    })
}

/// Exact unique-identifier rate of a uniformly random chef over `scenarios`:
/// the mean of `|unique| / W` over scenarios with a nonempty unique set.
pub fn random_chef_unique_rate(game: &KitchenGame, scenarios: &[KitchenScenario]) -> Option<f64> {
    let sizes: Vec<usize> = scenarios
        .iter()
        .map(|s| unique_identifiers(&s.recipe, s.target).len())
        .filter(|&n| n > 0)
        .collect();
    (!sizes.is_empty()).then(|| sizes.iter().map(|&n| n as f64 / game.w as f64).sum::<f64>() / sizes.len() as f64)
}

/// Unique-identifier rate of a trained chef's opening moves.
pub fn unique_identifier_rate(
    game: &KitchenGame,
    agents: [&AgentModules; 2],
    scenarios: &[KitchenScenario],
    opts: &EvalOptions,
) -> Result<Option<f64>> {
    Ok(evaluate(game, agents, scenarios, opts)?.unique_identifier_rate)
}

/// Share of scheduling pairs that have a common free slot.
pub fn meetable_share(scenarios: &[SchedScenario]) -> f64 {
    let n = scenarios.iter().filter(|s| (0..s.a.len()).any(|d| !s.a.occupied(d) && !s.b.occupied(d))).count();
    n as f64 / scenarios.len().max(1) as f64
}

/// Games whose scenarios can be split exclusively and stored as JSON.
pub trait SplitGame: Game {
    fn split(&self, spec: &SplitSpec) -> Result<Split<Self::Scenario>>;
    fn check_exclusive(split: &Split<Self::Scenario>) -> Result<()>;
    fn save(path: &Path, scenarios: &[Self::Scenario]) -> Result<()>;
    fn load(path: &Path) -> Result<Vec<Self::Scenario>>;
    fn validate_scenario(&self, scenario: &Self::Scenario) -> Result<()>;

    /// Load a train/test pair and re-verify exclusivity and shape.
    fn load_split(&self, train: &Path, test: &Path) -> Result<Split<Self::Scenario>> {
        let split = Split { train: Self::load(train)?, test: Self::load(test)? };
        for s in split.train.iter().chain(&split.test) {
            self.validate_scenario(s)?;
        }
        Self::check_exclusive(&split)?;
        Ok(split)
    }
}

impl SplitGame for KitchenGame {
    fn split(&self, spec: &SplitSpec) -> Result<Split<KitchenScenario>> {
        kitchen_split(self, spec)
    }
    fn check_exclusive(split: &Split<KitchenScenario>) -> Result<()> {
        check_kitchen_exclusive(split)
    }
    fn save(path: &Path, scenarios: &[KitchenScenario]) -> Result<()> {
        save_scenarios(path, scenarios)
    }
    fn load(path: &Path) -> Result<Vec<KitchenScenario>> {
        load_scenarios(path)
    }
    fn validate_scenario(&self, scenario: &KitchenScenario) -> Result<()> {
        self.validate(scenario)
    }
}

impl SplitGame for SchedulingGame {
    fn split(&self, spec: &SplitSpec) -> Result<Split<SchedScenario>> {
        scheduling_split(self, spec)
    }
    fn check_exclusive(split: &Split<SchedScenario>) -> Result<()> {
        check_scheduling_exclusive(split)
    }
    fn save(path: &Path, scenarios: &[SchedScenario]) -> Result<()> {
        save_scenarios(path, scenarios)
    }
    fn load(path: &Path) -> Result<Vec<SchedScenario>> {
        load_scenarios(path)
    }
    fn validate_scenario(&self, scenario: &SchedScenario) -> Result<()> {
        if scenario.a.len() != self.d || scenario.b.len() != self.d {
            return Err(config_err(format!("schedule pair does not have D={} slots", self.d)));
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn spec(train: usize, test: usize) -> SplitSpec {
        SplitSpec { seed: 3, train_primitives: train, test_primitives: test, train_scenarios: 200, test_scenarios: 100 }
    }

    #[test]
    fn kitchen_split_is_exclusive() {
        let g = KitchenGame::new(3, 3, 6).unwrap();
        let s = kitchen_split(&g, &spec(58, 25)).unwrap();
        assert_eq!(s.train.len(), 200);
        assert!(check_kitchen_exclusive(&s).is_ok());
        for sc in s.train.iter().chain(&s.test) {
            g.validate(sc).unwrap();
        }
    }

    #[test]
    fn tampered_split_detected() {
        let g = KitchenGame::new(3, 3, 6).unwrap();
        let mut s = kitchen_split(&g, &spec(58, 25)).unwrap();
        s.test.push(s.train[0].clone());
        assert!(check_kitchen_exclusive(&s).is_err());
    }

    #[test]
    fn scheduling_pigeonhole() {
        let g = SchedulingGame::new(4, 0.5).unwrap();
        assert!(scheduling_split(&g, &spec(10, 10)).is_err());
        let s = scheduling_split(&g, &spec(10, 6)).unwrap();
        assert!(check_scheduling_exclusive(&s).is_ok());
    }

    #[test]
    fn report_stderr_and_csv() {
        let all = vec![
            EpisodeSummary { success: true, cause: None, returns: [1.0, 1.0], length: 2, unique_opening: Some(true) },
            EpisodeSummary {
                success: false,
                cause: Some(FailureCause::WrongIngredient),
                returns: [-1.0, -1.0],
                length: 1,
                unique_opening: Some(false),
            },
            EpisodeSummary { success: true, cause: None, returns: [1.0, 1.0], length: 3, unique_opening: None },
            EpisodeSummary { success: true, cause: None, returns: [1.0, 1.0], length: 4, unique_opening: None },
        ];
        let r = EvalReport::from_summaries("x", &all);
        assert_eq!(r.success_rate, 0.75);
        assert!((r.stderr - (0.75f64 * 0.25 / 4.0).sqrt()).abs() < 1e-15);
        assert_eq!(r.unique_identifier_rate, Some(0.5));
        assert_eq!(r.failures["wrong_ingredient"], 1);
        assert_eq!(r.mean_length, 2.5);
        let header = EvalReport::csv_header();
        assert_eq!(header.split(',').count(), r.csv_row().split(',').count());
        let merged = EvalReport::merge("m", &[r.clone(), r.clone()]);
        assert_eq!(merged.episodes, 8);
        assert_eq!(merged.success_rate, 0.75);
        assert_eq!(merged.unique_identifier_rate, Some(0.5));
    }

    #[test]
    fn always_unique_chef_scores_one() {
        struct UniqueChef;
        impl Scripted<KitchenGame> for UniqueChef {
            fn act(&self, g: &KitchenGame, s: &crate::kitchen::KitchenState, own: PrivateState, rng: &mut SeededRng) -> usize {
                let scen = KitchenScenario { recipe: s.recipe.clone(), target: own.0 };
                match unique_identifiers(&scen.recipe, scen.target).first() {
                    Some(&i) if s.step == 0 => i as usize,
                    _ => InformedChef.act(g, s, own, rng),
                }
            }
        }
        let g = KitchenGame::new(3, 3, 6).unwrap();
        let s = kitchen_split(&g, &spec(58, 25)).unwrap();
        let r = evaluate_scripted(&g, [&UniqueChef, &UniformPolicy], &s.test, &EvalOptions::greedy(300, 1), "u").unwrap();
        assert_eq!(r.unique_identifier_rate, Some(1.0));
    }
}
