//! C interface to the tomcollab library.
//!
//! Every function returns a [`TcStatus`]; results come back through out
//! pointers. On failure a message is kept per thread and can be copied out
//! with [`tc_last_error_message`]. Handles are opaque and must be released
//! with the matching `_free` function.

use std::cell::RefCell;
use std::ffi::{c_char, CStr};
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::path::Path;
use std::ptr;

use tomcollab::belief::Belief;
use tomcollab::game::{AgentId, Game, PrivateState, TerminalKind};
use tomcollab::harness::{evaluate, evaluate_scripted, EvalOptions, InformedChef, SplitGame, UniformPolicy};
use tomcollab::kitchen::{KitchenGame, KitchenScenario, KitchenState};
use tomcollab::rng::SeededRng;
use tomcollab::scheduling::{SchedScenario, SchedState, SchedulingGame};
use tomcollab::trainer::TeamCheckpoint;
use tomcollab::Error;

#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum TcStatus {
    Ok = 0,
    NullPointer = 1,
    InvalidUtf8 = 2,
    Config = 3,
    Usage = 4,
    Shape = 5,
    Numeric = 6,
    Io = 7,
    Json = 8,
    Degenerate = 9,
    Panic = 10,
}

thread_local! {
    static LAST_ERROR: RefCell<String> = const { RefCell::new(String::new()) };
}

fn set_error(msg: String) {
    LAST_ERROR.with(|e| *e.borrow_mut() = msg);
}

fn status_of(e: &Error) -> TcStatus {
    match e {
        Error::Config(_) => TcStatus::Config,
        Error::Usage(_) => TcStatus::Usage,
        Error::Shape { .. } => TcStatus::Shape,
        Error::Numeric(_) => TcStatus::Numeric,
        Error::Io(_) => TcStatus::Io,
        Error::Json(_) => TcStatus::Json,
    }
}

fn fail(status: TcStatus, msg: impl Into<String>) -> TcStatus {
    set_error(msg.into());
    status
}

fn guard(f: impl FnOnce() -> Result<(), TcStatus>) -> TcStatus {
    match catch_unwind(AssertUnwindSafe(f)) {
        Ok(Ok(())) => TcStatus::Ok,
        Ok(Err(s)) => s,
        Err(_) => fail(TcStatus::Panic, "internal panic"),
    }
}

fn lib(e: Error) -> TcStatus {
    let s = status_of(&e);
    fail(s, e.to_string())
}

unsafe fn path_arg<'a>(p: *const c_char) -> Result<&'a Path, TcStatus> {
    if p.is_null() {
        return Err(fail(TcStatus::NullPointer, "path is null"));
    }
    CStr::from_ptr(p)
        .to_str()
        .map(Path::new)
        .map_err(|_| fail(TcStatus::InvalidUtf8, "path is not UTF-8"))
}

unsafe fn str_arg<'a>(p: *const c_char) -> Result<&'a str, TcStatus> {
    if p.is_null() {
        return Err(fail(TcStatus::NullPointer, "string is null"));
    }
    CStr::from_ptr(p).to_str().map_err(|_| fail(TcStatus::InvalidUtf8, "string is not UTF-8"))
}

fn nonnull<T>(p: *const T, what: &str) -> Result<(), TcStatus> {
    if p.is_null() {
        Err(fail(TcStatus::NullPointer, format!("{what} is null")))
    } else {
        Ok(())
    }
}

/// Copy the calling thread's last error message into `buf` (NUL terminated,
/// truncated to `len`). Returns the full message length in bytes.
///
/// # Safety
/// `buf` must be null or point to at least `len` writable bytes.
#[no_mangle]
pub unsafe extern "C" fn tc_last_error_message(buf: *mut c_char, len: usize) -> usize {
    LAST_ERROR.with(|e| {
        let msg = e.borrow();
        if !buf.is_null() && len > 0 {
            let n = msg.len().min(len - 1);
            ptr::copy_nonoverlapping(msg.as_ptr(), buf as *mut u8, n);
            *buf.add(n) = 0;
        }
        msg.len()
    })
}

/// Counterfactual Bayes: `out[i] ∝ prior[i] * likelihood[i]`.
///
/// # Safety
/// `prior`, `likelihood` and `out` must each point to `n` doubles.
#[no_mangle]
pub unsafe extern "C" fn tc_belief_update(prior: *const f64, likelihood: *const f64, n: usize, out: *mut f64) -> TcStatus {
    guard(|| {
        nonnull(prior, "prior")?;
        nonnull(likelihood, "likelihood")?;
        nonnull(out, "out")?;
        if n == 0 {
            return Err(fail(TcStatus::Shape, "empty belief"));
        }
        let prior = std::slice::from_raw_parts(prior, n);
        let lik = std::slice::from_raw_parts(likelihood, n);
        if prior.iter().chain(lik).any(|&x| x < 0.0 || !x.is_finite()) {
            return Err(fail(TcStatus::Numeric, "weights must be finite and nonnegative"));
        }
        let b = Belief::from_weights(prior.to_vec()).map_err(|e| fail(TcStatus::Degenerate, e.to_string()))?;
        let post = b.counterfactual_update(lik).map_err(|e| fail(TcStatus::Degenerate, e.to_string()))?;
        std::slice::from_raw_parts_mut(out, n).copy_from_slice(post.weights());
        Ok(())
    })
}

/// A kitchen configuration.
pub struct TcKitchen {
    game: KitchenGame,
}

/// A kitchen game in progress.
pub struct TcKitchenEpisode {
    game: KitchenGame,
    state: KitchenState,
    privates: [PrivateState; 2],
    outcome: TerminalKind,
}

/// A scheduling configuration.
pub struct TcScheduling {
    game: SchedulingGame,
}

/// Two trained agents loaded from a team checkpoint.
pub struct TcTeam {
    team: TeamCheckpoint,
}

/// # Safety
/// `out` must be a valid pointer to a handle slot.
#[no_mangle]
pub unsafe extern "C" fn tc_kitchen_new(k: usize, m: usize, w: usize, out: *mut *mut TcKitchen) -> TcStatus {
    guard(|| {
        nonnull(out, "out")?;
        let game = KitchenGame::new(k, m, w).map_err(lib)?;
        *out = Box::into_raw(Box::new(TcKitchen { game }));
        Ok(())
    })
}

/// # Safety
/// `h` must be null or a handle from [`tc_kitchen_new`] not yet freed.
#[no_mangle]
pub unsafe extern "C" fn tc_kitchen_free(h: *mut TcKitchen) {
    if !h.is_null() {
        drop(Box::from_raw(h));
    }
}

/// Start a game from a scenario given as JSON `{"recipe": [[...], ...], "target": i}`.
///
/// # Safety
/// `h` must be a live kitchen handle, `scenario_json` a NUL-terminated string, `out` a valid slot.
#[no_mangle]
pub unsafe extern "C" fn tc_kitchen_start(
    h: *const TcKitchen,
    scenario_json: *const c_char,
    out: *mut *mut TcKitchenEpisode,
) -> TcStatus {
    guard(|| {
        nonnull(h, "kitchen")?;
        nonnull(out, "out")?;
        let text = str_arg(scenario_json)?;
        let scenario: KitchenScenario =
            serde_json::from_str(text).map_err(|e| fail(TcStatus::Json, e.to_string()))?;
        let game = (*h).game;
        let (state, privates) = game.reset(&scenario).map_err(lib)?;
        *out = Box::into_raw(Box::new(TcKitchenEpisode { game, state, privates, outcome: TerminalKind::None }));
        Ok(())
    })
}

/// Add one ingredient. `terminal` receives 0 (running), 1 (success) or 2 (failure).
///
/// # Safety
/// `ep` must be a live episode; `reward` and `terminal` valid pointers.
#[no_mangle]
pub unsafe extern "C" fn tc_kitchen_step(
    ep: *mut TcKitchenEpisode,
    ingredient: usize,
    reward: *mut f64,
    terminal: *mut i32,
) -> TcStatus {
    guard(|| {
        nonnull(ep, "episode")?;
        nonnull(reward, "reward")?;
        nonnull(terminal, "terminal")?;
        let ep = &mut *ep;
        if ep.outcome != TerminalKind::None {
            return Err(fail(TcStatus::Usage, "episode already finished"));
        }
        let o = ep.game.step(&ep.state, &ep.privates, ingredient).map_err(lib)?;
        *reward = o.rewards[0];
        *terminal = match o.terminal {
            TerminalKind::None => 0,
            TerminalKind::Success => 1,
            TerminalKind::Failure => 2,
        };
        ep.outcome = o.terminal;
        ep.state = o.next_state;
        Ok(())
    })
}

/// Agent to move next: 0 for the chef, 1 for the assistant.
///
/// # Safety
/// `ep` must be a live episode and `agent` a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn tc_kitchen_turn(ep: *const TcKitchenEpisode, agent: *mut u32) -> TcStatus {
    guard(|| {
        nonnull(ep, "episode")?;
        nonnull(agent, "agent")?;
        *agent = (*ep).game.turn(&(*ep).state).index() as u32;
        Ok(())
    })
}

/// # Safety
/// `ep` must be null or an episode from [`tc_kitchen_start`] not yet freed.
#[no_mangle]
pub unsafe extern "C" fn tc_kitchen_episode_free(ep: *mut TcKitchenEpisode) {
    if !ep.is_null() {
        drop(Box::from_raw(ep));
    }
}

/// Success rate of an informed chef (random ingredient still needed by the
/// target) with a uniformly random assistant over freshly generated recipes.
///
/// # Safety
/// `h` must be a live kitchen handle and `success` a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn tc_kitchen_random_baseline(
    h: *const TcKitchen,
    episodes: usize,
    seed: u64,
    success: *mut f64,
) -> TcStatus {
    guard(|| {
        nonnull(h, "kitchen")?;
        nonnull(success, "success")?;
        let game = (*h).game;
        let mut rng = SeededRng::new(seed);
        let scenarios = (0..episodes.max(1))
            .map(|_| game.random_scenario(&mut rng))
            .collect::<tomcollab::Result<Vec<_>>>()
            .map_err(lib)?;
        let r = evaluate_scripted(&game, [&InformedChef, &UniformPolicy], &scenarios, &EvalOptions::greedy(episodes, seed), "random")
            .map_err(lib)?;
        *success = r.success_rate;
        Ok(())
    })
}

/// # Safety
/// `out` must be a valid pointer to a handle slot.
#[no_mangle]
pub unsafe extern "C" fn tc_scheduling_new(d: usize, p: f64, out: *mut *mut TcScheduling) -> TcStatus {
    guard(|| {
        nonnull(out, "out")?;
        let game = SchedulingGame::new(d, p).map_err(lib)?;
        *out = Box::into_raw(Box::new(TcScheduling { game }));
        Ok(())
    })
}

/// # Safety
/// `h` must be null or a handle from [`tc_scheduling_new`] not yet freed.
#[no_mangle]
pub unsafe extern "C" fn tc_scheduling_free(h: *mut TcScheduling) {
    if !h.is_null() {
        drop(Box::from_raw(h));
    }
}

/// Play one action from the opening position of a schedule pair given as
/// JSON `{"a": [0/1...], "b": [0/1...]}`. Writes the first agent's reward and
/// the terminal code (0 running, 1 success, 2 failure).
///
/// # Safety
/// `h` must be a live handle, `pair_json` a NUL-terminated string, the outputs valid pointers.
#[no_mangle]
pub unsafe extern "C" fn tc_scheduling_open(
    h: *const TcScheduling,
    pair_json: *const c_char,
    action: usize,
    reward: *mut f64,
    terminal: *mut i32,
) -> TcStatus {
    guard(|| {
        nonnull(h, "scheduling")?;
        nonnull(reward, "reward")?;
        nonnull(terminal, "terminal")?;
        let pair: SchedScenario =
            serde_json::from_str(str_arg(pair_json)?).map_err(|e| fail(TcStatus::Json, e.to_string()))?;
        let game = (*h).game;
        let (state, privates): (SchedState, _) = game.reset(&pair).map_err(lib)?;
        let o = game.step(&state, &privates, action).map_err(lib)?;
        *reward = o.rewards[0];
        *terminal = match o.terminal {
            TerminalKind::None => 0,
            TerminalKind::Success => 1,
            TerminalKind::Failure => 2,
        };
        Ok(())
    })
}

/// Number of actions per agent for this scheduling configuration.
///
/// # Safety
/// `h` must be a live handle and `n` a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn tc_scheduling_num_actions(h: *const TcScheduling, n: *mut usize) -> TcStatus {
    guard(|| {
        nonnull(h, "scheduling")?;
        nonnull(n, "n")?;
        *n = (*h).game.num_actions(AgentId::A);
        Ok(())
    })
}

/// # Safety
/// `path` must be a NUL-terminated string and `out` a valid slot.
#[no_mangle]
pub unsafe extern "C" fn tc_team_load(path: *const c_char, out: *mut *mut TcTeam) -> TcStatus {
    guard(|| {
        nonnull(out, "out")?;
        let team = TeamCheckpoint::load(path_arg(path)?).map_err(lib)?;
        *out = Box::into_raw(Box::new(TcTeam { team }));
        Ok(())
    })
}

/// # Safety
/// `h` must be null or a handle from [`tc_team_load`] not yet freed.
#[no_mangle]
pub unsafe extern "C" fn tc_team_free(h: *mut TcTeam) {
    if !h.is_null() {
        drop(Box::from_raw(h));
    }
}

fn eval_team<G: SplitGame>(game: &G, team: &TeamCheckpoint, path: &Path, episodes: usize, seed: u64) -> Result<f64, TcStatus> {
    team.check_compatible(game).map_err(lib)?;
    let scenarios = G::load(path).map_err(lib)?;
    for s in &scenarios {
        game.validate_scenario(s).map_err(lib)?;
    }
    let r = evaluate(game, [&team.agents[0], &team.agents[1]], &scenarios, &EvalOptions::greedy(episodes, seed)).map_err(lib)?;
    Ok(r.success_rate)
}

/// Greedy success rate of a team on kitchen scenarios stored as JSON.
///
/// # Safety
/// Handles must be live, `scenarios_path` NUL-terminated, `success` valid.
#[no_mangle]
pub unsafe extern "C" fn tc_team_eval_kitchen(
    team: *const TcTeam,
    game: *const TcKitchen,
    scenarios_path: *const c_char,
    episodes: usize,
    seed: u64,
    success: *mut f64,
) -> TcStatus {
    guard(|| {
        nonnull(team, "team")?;
        nonnull(game, "kitchen")?;
        nonnull(success, "success")?;
        *success = eval_team(&(*game).game, &(*team).team, path_arg(scenarios_path)?, episodes, seed)?;
        Ok(())
    })
}

/// Greedy success rate of a team on scheduling pairs stored as JSON.
///
/// # Safety
/// Handles must be live, `scenarios_path` NUL-terminated, `success` valid.
#[no_mangle]
pub unsafe extern "C" fn tc_team_eval_scheduling(
    team: *const TcTeam,
    game: *const TcScheduling,
    scenarios_path: *const c_char,
    episodes: usize,
    seed: u64,
    success: *mut f64,
) -> TcStatus {
    guard(|| {
        nonnull(team, "team")?;
        nonnull(game, "scheduling")?;
        nonnull(success, "success")?;
        *success = eval_team(&(*game).game, &(*team).team, path_arg(scenarios_path)?, episodes, seed)?;
        Ok(())
    })
}
