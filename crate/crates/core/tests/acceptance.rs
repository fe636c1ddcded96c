//! Acceptance suite. Runs every criterion, prints one PASS/FAIL line each and
//! exits nonzero if any fails. Built with `harness = false` so the lines are
//! always visible.

use std::collections::BTreeSet;
use std::fs;
use std::path::{Path, PathBuf};
use std::process::{Command, ExitCode};
use std::time::Instant;

use tomcollab::belief::{brute_force_posterior, Belief};
use tomcollab::config::{EnvConfig, ExperimentConfig};
use tomcollab::game::{AgentId, FailureCause, Game, PrivateState, TerminalKind};
use tomcollab::harness::{
    evaluate, evaluate_scripted, random_chef_unique_rate, switch_eval, EvalOptions, EvalReport, InformedChef,
    OwnFreeSlot, RandomSlot, SplitGame, UniformPolicy,
};
use tomcollab::kitchen::{enumerate_dishes, Dish, KitchenGame, KitchenScenario, KitchenState, Recipe};
use tomcollab::nn::Activation;
use tomcollab::policy::{q_features, Architecture};
use tomcollab::rng::SeededRng;
use tomcollab::scheduling::{SchedAction, SchedScenario, Schedule, SchedulingGame, FAILURE_REWARD, MESSAGE_COST, SUCCESS_REWARD};
use tomcollab::toy::{value_iteration, ToyGame, NUM_ACTIONS, NUM_STATES};
use tomcollab::trainer::{gradient_checks, Datasets, TeamCheckpoint, TrainConfig, Trainer};

struct Verdict {
    id: usize,
    name: &'static str,
    pass: bool,
    detail: String,
}

fn configs() -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("../../configs")
}

fn load(name: &str) -> ExperimentConfig {
    ExperimentConfig::from_file(&configs().join(name), None).expect("config")
}

fn timed<T>(f: impl FnOnce() -> T) -> (T, f64) {
    let t = Instant::now();
    let v = f();
    (v, t.elapsed().as_secs_f64())
}

// ---------------------------------------------------------------- 1

fn random_simplex(rng: &mut SeededRng, n: usize, zeros: bool) -> Vec<f64> {
    let mut w: Vec<f64> = (0..n).map(|_| rng.uniform() + 1e-3).collect();
    if zeros {
        for x in w.iter_mut() {
            if rng.bernoulli(0.25) {
                *x = 0.0;
            }
        }
        if w.iter().all(|&x| x == 0.0) {
            w[rng.below(n)] = 1.0;
        }
    }
    let s: f64 = w.iter().sum();
    w.iter().map(|x| x / s).collect()
}

fn criterion_belief() -> Verdict {
    let ((update_err, commute_err, cases), secs) = timed(|| {
        let mut rng = SeededRng::new(101);
        let (mut update_err, mut commute_err, mut cases) = (0.0f64, 0.0f64, 0usize);
        for i in 0..10_000 {
            // Kitchen-like spaces up to 16 hypotheses, scheduling spaces 2^D for D <= 4.
            let n = if i % 2 == 0 { 1 + rng.below(16) } else { 1 << (1 + rng.below(4)) };
            let actions = 2 + rng.below(8);
            let prior = Belief::from_weights(random_simplex(&mut rng, n, i % 3 == 0)).unwrap();
            let table: Vec<Vec<f64>> = (0..n).map(|_| random_simplex(&mut rng, actions, i % 5 == 0)).collect();
            let observed = rng.below(actions);
            let lik: Vec<f64> = table.iter().map(|row| row[observed]).collect();
            let (fast, slow) = (prior.counterfactual_update(&lik), brute_force_posterior(prior.weights(), &table, observed));
            match (fast, slow) {
                (Ok(a), Ok(b)) => {
                    cases += 1;
                    for (x, y) in a.weights().iter().zip(b.weights()) {
                        update_err = update_err.max((x - y).abs());
                    }
                    let mask: Vec<bool> = (0..n).map(|_| rng.bernoulli(0.7)).collect();
                    let um = a.apply_mask(&mask);
                    let mu = prior.apply_mask(&mask).and_then(|p| p.counterfactual_update(&lik));
                    match (um, mu) {
                        (Ok(x), Ok(y)) => {
                            for (p, q) in x.weights().iter().zip(y.weights()) {
                                commute_err = commute_err.max((p - q).abs());
                            }
                        }
                        (Err(_), Err(_)) => {}
                        _ => commute_err = f64::INFINITY,
                    }
                }
                (Err(_), Err(_)) => {}
                _ => update_err = f64::INFINITY,
            }
        }
        (update_err, commute_err, cases)
    });
    Verdict {
        id: 1,
        name: "belief update matches brute-force posterior",
        pass: update_err <= 1e-12 && commute_err <= 1e-9 && secs < 60.0,
        detail: format!("update err {update_err:.2e} (<=1e-12), mask commutation err {commute_err:.2e} (<=1e-9), {cases} nondegenerate of 10000, {secs:.1}s (<60s)"),
    }
}

// ---------------------------------------------------------------- 2

/// Independent statement of the kitchen rules on sorted ingredient lists.
fn reference_kitchen_step(target: &[u8], prepared: &[u8], add: u8) -> (f64, TerminalKind, Option<FailureCause>, Vec<u8>) {
    let mut next = prepared.to_vec();
    next.push(add);
    next.sort_unstable();
    let have = next.iter().filter(|&&x| x == add).count();
    let need = target.iter().filter(|&&x| x == add).count();
    if have > need {
        let cause = if need == 0 { FailureCause::WrongIngredient } else { FailureCause::OverPrepared };
        (-1.0, TerminalKind::Failure, Some(cause), next)
    } else if next == target {
        (1.0, TerminalKind::Success, None, next)
    } else {
        (0.0, TerminalKind::None, None, next)
    }
}

fn sub_multiset(small: &[u8], big: &[u8]) -> bool {
    let mut big = big.to_vec();
    for x in small {
        match big.iter().position(|y| y == x) {
            Some(i) => {
                big.swap_remove(i);
            }
            None => return false,
        }
    }
    true
}

fn counts_to_list(counts: &[u8]) -> Vec<u8> {
    counts.iter().enumerate().flat_map(|(i, &c)| std::iter::repeat_n(i as u8, c as usize)).collect()
}

fn kitchen_walk(
    game: &KitchenGame,
    scenario: &KitchenScenario,
    state: &KitchenState,
    privates: &[PrivateState; 2],
    prepared: &[u8],
    depth: usize,
    checked: &mut usize,
) -> Result<(), String> {
    if depth == 4 {
        return Ok(());
    }
    let target = &scenario.recipe.dishes()[scenario.target].0;
    for a in 0..game.w {
        let out = game.step(state, privates, a).map_err(|e| e.to_string())?;
        let (r, kind, cause, next) = reference_kitchen_step(target, prepared, a as u8);
        *checked += 1;
        let s = &out.next_state;
        let ok = out.rewards == [r, r]
            && out.terminal == kind
            && out.cause == cause
            && counts_to_list(&s.prepared) == next
            && s.turn == state.turn.other()
            && s.step == state.step + 1;
        if !ok {
            return Err(format!("{scenario:?} after {prepared:?} adding {a}: got {out:?}"));
        }
        if kind == TerminalKind::None {
            let mask = game.consistency_mask(s, AgentId::A).unwrap();
            let expect: Vec<bool> = scenario.recipe.dishes().iter().map(|d| sub_multiset(&next, &d.0)).collect();
            if mask != expect {
                return Err(format!("{scenario:?} mask after {next:?}: {mask:?} vs {expect:?}"));
            }
            kitchen_walk(game, scenario, s, privates, &next, depth + 1, checked)?;
        }
    }
    Ok(())
}

fn combinations(n: usize, k: usize, start: usize, cur: &mut Vec<usize>, out: &mut dyn FnMut(&[usize])) {
    if cur.len() == k {
        out(cur);
        return;
    }
    for i in start..n {
        cur.push(i);
        combinations(n, k, i + 1, cur, out);
        cur.pop();
    }
}

fn kitchen_oracle() -> Result<(usize, usize), String> {
    let (mut scenarios, mut checked) = (0usize, 0usize);
    for w in 2..=4 {
        for m in 1..=3 {
            let dishes: Vec<Dish> = enumerate_dishes(m, w);
            for k in 1..=3.min(dishes.len()) {
                let game = KitchenGame::new(k, m, w).map_err(|e| e.to_string())?;
                let mut err = None;
                combinations(dishes.len(), k, 0, &mut Vec::new(), &mut |idx| {
                    if err.is_some() {
                        return;
                    }
                    let recipe = Recipe(idx.iter().map(|&i| dishes[i].clone()).collect());
                    for target in 0..k {
                        let sc = KitchenScenario { recipe: recipe.clone(), target };
                        let (state, privates) = match game.reset(&sc) {
                            Ok(x) => x,
                            Err(e) => {
                                err = Some(e.to_string());
                                return;
                            }
                        };
                        scenarios += 1;
                        if let Err(e) = kitchen_walk(&game, &sc, &state, &privates, &[], 0, &mut checked) {
                            err = Some(e);
                            return;
                        }
                    }
                });
                if let Some(e) = err {
                    return Err(e);
                }
            }
        }
    }
    Ok((scenarios, checked))
}

/// Opening-move outcome by the written rules: (rewards for A, terminal, cause, informed interval).
fn reference_sched_open(a: &[bool], b: &[bool], action: &SchedAction) -> (f64, TerminalKind, Option<FailureCause>) {
    match *action {
        SchedAction::Propose { slot } => {
            if !a[slot] && !b[slot] {
                (SUCCESS_REWARD, TerminalKind::Success, None)
            } else {
                (FAILURE_REWARD, TerminalKind::Failure, Some(FailureCause::WrongProposal))
            }
        }
        SchedAction::Reject => {
            if a.iter().zip(b).any(|(&x, &y)| !x && !y) {
                (FAILURE_REWARD, TerminalKind::Failure, Some(FailureCause::WrongReject))
            } else {
                (SUCCESS_REWARD, TerminalKind::Success, None)
            }
        }
        SchedAction::Inform { start, end } => {
            if a[start..=end].iter().all(|&x| x) {
                (0.0, TerminalKind::None, None)
            } else {
                (FAILURE_REWARD, TerminalKind::Failure, Some(FailureCause::WrongInform))
            }
        }
    }
}

fn scheduling_oracle() -> Result<usize, String> {
    let mut checked = 0;
    for d in 1..=4usize {
        let game = SchedulingGame::new(d, 0.5).map_err(|e| e.to_string())?;
        let mut actions = Vec::new();
        for start in 0..d {
            for end in start..d {
                actions.push(SchedAction::Inform { start, end });
            }
        }
        actions.extend((0..d).map(|slot| SchedAction::Propose { slot }));
        actions.push(SchedAction::Reject);
        if actions.len() != game.num_actions(AgentId::A) {
            return Err(format!("D={d}: {} actions, expected {}", game.num_actions(AgentId::A), actions.len()));
        }
        for ia in 0..1usize << d {
            for ib in 0..1usize << d {
                let sc = SchedScenario { a: Schedule::from_index(ia, d), b: Schedule::from_index(ib, d) };
                let (state, privates) = game.reset(&sc).map_err(|e| e.to_string())?;
                for (index, action) in actions.iter().enumerate() {
                    if game.action_index(*action).map_err(|e| e.to_string())? != index {
                        return Err(format!("D={d}: index of {action:?}"));
                    }
                    let out = game.step(&state, &privates, index).map_err(|e| e.to_string())?;
                    let (r, kind, cause) = reference_sched_open(&sc.a.0, &sc.b.0, action);
                    let mut ok = out.rewards == [r, r] && out.terminal == kind && out.cause == cause;
                    ok &= out.next_state.turn == AgentId::B && out.next_state.step == 1;
                    if let (SchedAction::Inform { start, end }, TerminalKind::None) = (action, kind) {
                        ok &= out.next_state.history == vec![(AgentId::A, (*start, *end))];
                        ok &= out.next_state.costs == [MESSAGE_COST, 0.0];
                    }
                    if !ok {
                        return Err(format!("D={d} {sc:?} {action:?}: got {out:?}"));
                    }
                    checked += 1;
                }
            }
        }
    }
    Ok(checked)
}

fn criterion_env_oracles() -> Verdict {
    let ((kitchen, sched), secs) = timed(|| (kitchen_oracle(), scheduling_oracle()));
    let detail = match (&kitchen, &sched) {
        (Ok((n, steps)), Ok(cases)) => {
            format!("kitchen {n} scenarios / {steps} steps identical, scheduling {cases} pair-action cases identical, {secs:.1}s (<120s)")
        }
        (Err(e), _) | (_, Err(e)) => format!("mismatch: {e}"),
    };
    Verdict {
        id: 2,
        name: "environment steps match independent rule simulators",
        pass: kitchen.is_ok() && sched.is_ok() && secs < 120.0,
        detail,
    }
}

// ---------------------------------------------------------------- 3

fn criterion_gradients() -> Verdict {
    let (result, secs) = timed(|| -> tomcollab::Result<(f64, usize)> {
        let (mut worst, mut pairs) = (0.0f64, 0usize);
        let kitchen = load("kitchen_desk.cfg");
        let sched = load("scheduling_desk.cfg");
        for activation in [Activation::Relu, Activation::Tanh] {
            let arch = Architecture { hidden: vec![64, 64], activation };
            if let EnvConfig::Kitchen(g) = kitchen.env {
                let split = g.split(&kitchen.split_spec(0))?;
                for (_, e) in gradient_checks(&g, &split.train, &arch, 7, 1e-5)? {
                    worst = worst.max(e);
                    pairs += 1;
                }
            }
            if let EnvConfig::Scheduling(g) = sched.env {
                let split = g.split(&sched.split_spec(0))?;
                for (_, e) in gradient_checks(&g, &split.train, &arch, 7, 1e-5)? {
                    worst = worst.max(e);
                    pairs += 1;
                }
            }
        }
        Ok((worst, pairs))
    });
    match result {
        Ok((worst, pairs)) => Verdict {
            id: 3,
            name: "analytic gradients match central differences",
            pass: worst < 1e-4 && secs < 60.0,
            detail: format!("max relative error {worst:.2e} (<1e-4) over {pairs} network checks, step 1e-5, {secs:.1}s (<60s)"),
        },
        Err(e) => Verdict { id: 3, name: "analytic gradients match central differences", pass: false, detail: e.to_string() },
    }
}

// ---------------------------------------------------------------- 4

fn criterion_toy() -> Verdict {
    let (result, secs) = timed(|| -> tomcollab::Result<f64> {
        let game = ToyGame;
        let mut cfg = TrainConfig {
            seed: 3,
            batch_size: 16,
            round_length: 3000,
            target_sync: 50,
            buffer_capacity: 2000,
            lr_q: 3e-3,
            eps_start: 1.0,
            eps_end: 1.0,
            val_episodes: 0,
            eval_episodes: 0,
            keep_best: false,
            arch: Architecture { hidden: vec![32], activation: Activation::Relu },
            ..TrainConfig::default()
        };
        let scenarios = [()];
        let data = Datasets { train: &scenarios, test: &scenarios };
        let mut trainer = Trainer::new(&game, cfg.clone())?;
        trainer.train_round(AgentId::A, 0, &data)?;
        cfg.lr_q = 1e-4;
        cfg.round_length = 1000;
        trainer.config = cfg.clone();
        trainer.train_round(AgentId::A, 1, &data)?;
        let oracle = value_iteration(cfg.gamma, 1e-14);
        let mut worst = 0.0f64;
        for (s, row) in oracle.iter().enumerate().take(NUM_STATES) {
            let x = q_features(&game, &ToyGame::state_at(s), AgentId::A, PrivateState(0), PrivateState(0), &[1.0]);
            let q = trainer.agents[0].q.forward(&x)?;
            for a in 0..NUM_ACTIONS {
                let e = (q[a] - row[a]).abs();
                worst = if e.is_nan() { f64::INFINITY } else { worst.max(e) };
            }
        }
        Ok(worst)
    });
    let name = "learned Q matches value iteration on the toy chain";
    match result {
        Ok(worst) => Verdict {
            id: 4,
            name,
            pass: worst <= 1e-2 && secs < 60.0,
            detail: format!("max |Q - Q*| {worst:.2e} (<=1e-2), {secs:.1}s (<60s)"),
        },
        Err(e) => Verdict { id: 4, name, pass: false, detail: e.to_string() },
    }
}

// ---------------------------------------------------------------- 5

fn criterion_baselines() -> Verdict {
    let (result, secs) = timed(|| -> tomcollab::Result<(f64, f64, f64)> {
        let n = 10_000;
        let kitchen = KitchenGame::new(4, 5, 10)?;
        let mut rng = SeededRng::new(55);
        let ks = (0..n).map(|_| kitchen.random_scenario(&mut rng)).collect::<tomcollab::Result<Vec<_>>>()?;
        let k = evaluate_scripted(&kitchen, [&InformedChef, &UniformPolicy], &ks, &EvalOptions::greedy(n, 5), "random")?;
        let sched = SchedulingGame::new(8, 0.5)?;
        let ss: Vec<_> = (0..n).map(|_| sched.random_scenario(&mut rng)).collect();
        let r = evaluate_scripted(&sched, [&RandomSlot, &UniformPolicy], &ss, &EvalOptions::greedy(n, 6), "random_slot")?;
        let o = evaluate_scripted(&sched, [&OwnFreeSlot, &UniformPolicy], &ss, &EvalOptions::greedy(n, 7), "own_free_slot")?;
        Ok((k.success_rate, r.success_rate, o.success_rate))
    });
    let name = "random baselines reproduce reported rates";
    match result {
        Ok((k, r, o)) => Verdict {
            id: 5,
            name,
            pass: (k - 0.0567).abs() <= 0.02 && (r - 0.25).abs() <= 0.02 && (o - 0.50).abs() <= 0.02 && secs < 60.0,
            detail: format!(
                "kitchen {:.2}% (5.67±2), random slot {:.2}% (25±2), own free slot {:.2}% (50±2), 1e4 episodes each, {secs:.1}s (<60s)",
                100.0 * k,
                100.0 * r,
                100.0 * o
            ),
        },
        Err(e) => Verdict { id: 5, name, pass: false, detail: e.to_string() },
    }
}

// ---------------------------------------------------------------- 6-10

struct Run {
    team: TeamCheckpoint,
    round_evals: Vec<f64>,
    iterations: u64,
    report: EvalReport,
}

fn train_run<G: SplitGame>(game: &G, cfg: &ExperimentConfig, seed: u64, split: &tomcollab::harness::Split<G::Scenario>) -> tomcollab::Result<Run> {
    let mut train = cfg.train.clone();
    train.seed = seed;
    let mut trainer = Trainer::new(game, train.clone())?;
    trainer.train(&Datasets { train: &split.train, test: &split.test })?;
    let round_evals = trainer.round_evals();
    let iterations = trainer.iteration();
    let team = trainer.into_team();
    let report = evaluate(game, [&team.agents[0], &team.agents[1]], &split.test, &test_options(&train))?;
    Ok(Run { team, round_evals, iterations, report })
}

fn test_options(train: &TrainConfig) -> EvalOptions {
    EvalOptions::greedy(train.eval_episodes, 0xe7a1)
}

fn fail_all(ids: &[(usize, &'static str)], e: &tomcollab::Error) -> Vec<Verdict> {
    ids.iter().map(|&(id, name)| Verdict { id, name, pass: false, detail: format!("run failed: {e}") }).collect()
}

const KITCHEN_NAMES: [(usize, &str); 4] = [
    (6, "desk kitchen learning"),
    (8, "unique identifiers emerge"),
    (9, "partner switch robustness"),
    (10, "per-round evaluation never drops"),
];

fn kitchen_desk() -> Vec<Verdict> {
    match kitchen_desk_inner() {
        Ok(v) => v,
        Err(e) => fail_all(&KITCHEN_NAMES, &e),
    }
}

fn kitchen_desk_inner() -> tomcollab::Result<Vec<Verdict>> {
    let cfg = load("kitchen_desk.cfg");
    let EnvConfig::Kitchen(game) = cfg.env else { unreachable!() };
    let split = game.split(&cfg.split_spec(0))?;
    let (runs, secs) = timed(|| [1u64, 2].map(|s| train_run(&game, &cfg, s, &split)));
    let [a, b] = runs;
    let (a, b) = (a?, b?);
    let mut out = Vec::new();

    // Monte-Carlo baselines at this scale on fresh random scenarios.
    let n = 10_000;
    let mut rng = SeededRng::new(66);
    let fresh = (0..n).map(|_| game.random_scenario(&mut rng)).collect::<tomcollab::Result<Vec<_>>>()?;
    let uniform = evaluate_scripted(&game, [&UniformPolicy, &UniformPolicy], &fresh, &EvalOptions::greedy(n, 8), "uniform")?;
    let informed = evaluate_scripted(&game, [&InformedChef, &UniformPolicy], &fresh, &EvalOptions::greedy(n, 9), "informed")?;
    let accs = [a.report.success_rate, b.report.success_rate];
    let worst = accs[0].min(accs[1]);
    out.push(Verdict {
        id: 6,
        name: KITCHEN_NAMES[0].1,
        pass: worst >= 0.70 && worst >= 10.0 * uniform.success_rate && a.iterations.max(b.iterations) <= 300_000 && secs <= 1800.0,
        detail: format!(
            "test success {:.1}% / {:.1}% (>=70%), {:.0}x uniform-random {:.2}% (>=10x), {:.1}x informed-chef {:.2}%, {} iterations per run, {secs:.0}s",
            100.0 * accs[0],
            100.0 * accs[1],
            worst / uniform.success_rate,
            100.0 * uniform.success_rate,
            worst / informed.success_rate,
            100.0 * informed.success_rate,
            a.iterations,
        ),
    });

    let random_rate = random_chef_unique_rate(&game, &split.test).unwrap_or(0.0);
    let trained: Vec<f64> = [&a, &b].iter().filter_map(|r| r.report.unique_identifier_rate).collect();
    let trained_mean = trained.iter().sum::<f64>() / trained.len().max(1) as f64;
    let trained_min = trained.iter().cloned().fold(f64::INFINITY, f64::min);
    out.push(Verdict {
        id: 8,
        name: KITCHEN_NAMES[1].1,
        pass: trained.len() == 2 && trained_min - random_rate >= 0.15,
        detail: format!(
            "trained chef {:.1}% (seeds {:.1}% / {:.1}%) vs random chef {:.1}%, gap {:.1} pp (>=15)",
            100.0 * trained_mean,
            100.0 * trained.first().copied().unwrap_or(f64::NAN),
            100.0 * trained.get(1).copied().unwrap_or(f64::NAN),
            100.0 * random_rate,
            100.0 * (trained_min - random_rate)
        ),
    });

    let opts = test_options(&cfg.train);
    let same = EvalReport::merge("same_pair", &[a.report.clone(), b.report.clone()]);
    let switched = switch_eval(&game, &a.team.agents, &b.team.agents, &split.test, &opts)?;
    let drop = same.success_rate - switched.success_rate;
    out.push(Verdict {
        id: 9,
        name: KITCHEN_NAMES[2].1,
        pass: drop <= 0.15,
        detail: format!(
            "same pair {:.1}%, switched {:.1}%, drop {:.1} pp (<=15)",
            100.0 * same.success_rate,
            100.0 * switched.success_rate,
            100.0 * drop
        ),
    });

    let mean: Vec<f64> = a.round_evals.iter().zip(&b.round_evals).map(|(x, y)| (x + y) / 2.0).collect();
    let max_drop = mean.windows(2).map(|w| w[0] - w[1]).fold(0.0f64, f64::max);
    out.push(Verdict {
        id: 10,
        name: KITCHEN_NAMES[3].1,
        pass: mean.len() >= 2 && mean.len() == cfg.train.rounds && max_drop <= 0.03,
        detail: format!(
            "mean per-round test success [{}], largest drop {:.2} pp (<=3)",
            mean.iter().map(|x| format!("{:.1}%", 100.0 * x)).collect::<Vec<_>>().join(", "),
            100.0 * max_drop
        ),
    });
    Ok(out)
}

fn scheduling_desk() -> Verdict {
    let name = "desk scheduling learning";
    let result = (|| -> tomcollab::Result<Verdict> {
        let cfg = load("scheduling_desk.cfg");
        let EnvConfig::Scheduling(game) = cfg.env else { unreachable!() };
        let split = game.split(&cfg.split_spec(0))?;
        let ([a, b], secs) = timed(|| [1u64, 2].map(|s| train_run(&game, &cfg, s, &split)));
        let (a, b) = (a?, b?);
        let n = 10_000;
        let own = evaluate_scripted(&game, [&OwnFreeSlot, &UniformPolicy], &split.test, &EvalOptions::greedy(n, 10), "own")?;
        let worst = a.report.success_rate.min(b.report.success_rate);
        Ok(Verdict {
            id: 7,
            name,
            pass: worst >= 0.65
                && worst - own.success_rate >= 0.10
                && a.iterations.max(b.iterations) <= 300_000
                && secs <= 1800.0,
            detail: format!(
                "test success {:.1}% / {:.1}% (>=65%), own-free-slot on the same test set {:.1}%, margin {:.1} pp (>=10), {} iterations per run, {secs:.0}s",
                100.0 * a.report.success_rate,
                100.0 * b.report.success_rate,
                100.0 * own.success_rate,
                100.0 * (worst - own.success_rate),
                a.iterations
            ),
        })
    })();
    result.unwrap_or_else(|e| Verdict { id: 7, name, pass: false, detail: format!("run failed: {e}") })
}

// ---------------------------------------------------------------- 11

const DETERMINISM_CFG: &str = "env = kitchen
k = 3
m = 3
w = 6
splits = 1
train_scenarios = 500
test_scenarios = 200
rounds = 2
round_length = 300
log_every = 100
val_episodes = 50
eval_episodes = 100
log_eval_episodes = 50
hidden = 16, 16
";

fn files_under(dir: &Path) -> BTreeSet<PathBuf> {
    let mut out = BTreeSet::new();
    let mut stack = vec![dir.to_path_buf()];
    while let Some(d) = stack.pop() {
        for e in fs::read_dir(&d).into_iter().flatten().flatten() {
            let p = e.path();
            if p.is_dir() {
                stack.push(p);
            } else {
                out.insert(p.strip_prefix(dir).unwrap().to_path_buf());
            }
        }
    }
    out
}

fn criterion_determinism() -> Verdict {
    let name = "identical seed and config give identical outputs";
    let tmp = tempfile::tempdir().expect("tempdir");
    let cfg = tmp.path().join("det.cfg");
    fs::write(&cfg, DETERMINISM_CFG).unwrap();
    let run = |tag: &str| -> Result<PathBuf, String> {
        let out = tmp.path().join(tag);
        let status = Command::new(env!("CARGO_BIN_EXE_tomcollab"))
            .args(["train", "--seed", "4", "--config"])
            .arg(&cfg)
            .arg("--out")
            .arg(&out)
            .env("RAYON_NUM_THREADS", "1")
            .output()
            .map_err(|e| e.to_string())?;
        if !status.status.success() {
            return Err(String::from_utf8_lossy(&status.stderr).into_owned());
        }
        Ok(out)
    };
    let result = run("first").and_then(|x| run("second").map(|y| (x, y)));
    let (x, y) = match result {
        Ok(p) => p,
        Err(e) => return Verdict { id: 11, name, pass: false, detail: format!("cli failed: {e}") },
    };
    let (fx, fy) = (files_under(&x), files_under(&y));
    let mut differing = Vec::new();
    for f in fx.union(&fy) {
        if fs::read(x.join(f)).ok() != fs::read(y.join(f)).ok() {
            differing.push(f.display().to_string());
        }
    }
    let has_log = fx.contains(Path::new("metrics.ndjson"));
    let checkpoints = fx.iter().filter(|p| p.starts_with("checkpoints")).count();
    Verdict {
        id: 11,
        name,
        pass: differing.is_empty() && has_log && checkpoints == 2,
        detail: if differing.is_empty() {
            format!("{} files byte-identical across two runs, including metrics.ndjson and {checkpoints} round checkpoints", fx.len())
        } else {
            format!("differing files: {}", differing.join(", "))
        },
    }
}

fn main() -> ExitCode {
    let mut verdicts = vec![criterion_belief(), criterion_env_oracles(), criterion_gradients(), criterion_toy(), criterion_baselines()];
    verdicts.extend(kitchen_desk());
    verdicts.push(scheduling_desk());
    verdicts.push(criterion_determinism());
    verdicts.sort_by_key(|v| v.id);
    for v in &verdicts {
        println!("{} [{:>2}] {}: {}", if v.pass { "PASS" } else { "FAIL" }, v.id, v.name, v.detail);
    }
    let failed = verdicts.iter().filter(|v| !v.pass).count();
    println!("acceptance: {} passed, {failed} failed", verdicts.len() - failed);
    if failed == 0 {
        ExitCode::SUCCESS
    } else {
        ExitCode::FAILURE
    }
}
