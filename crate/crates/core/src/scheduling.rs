//! Appointment scheduling: two agents with private timetables exchange
//! truthful "occupied" messages until one of them proposes a slot or rejects.

use serde::{Deserialize, Serialize};

use crate::belief::{discretize_scheduling, marginalize, Belief};
use crate::error::{config_err, usage_err, Result};
use crate::game::{
    AgentId, FailureCause, Game, PrivateState, StepOutcome, TerminalKind, EPISODE_CAP,
};
use crate::nn::{Head, LossKind};
use crate::rng::SeededRng;

/// Terminal reward for a correct proposal or rejection.
pub const SUCCESS_REWARD: f64 = 1.0;
/// Terminal reward for any failure.
pub const FAILURE_REWARD: f64 = -2.0;
/// Charged to the sender of every correct inform.
pub const MESSAGE_COST: f64 = -0.1;

/// `D` slots, `true` meaning occupied. Slot `d` maps to bit `d` of [`Schedule::index`].
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Schedule(pub Vec<bool>);

impl Schedule {
    pub fn from_index(index: usize, d: usize) -> Self {
        Schedule((0..d).map(|s| index >> s & 1 == 1).collect())
    }

    pub fn index(&self) -> usize {
        self.0
            .iter()
            .enumerate()
            .fold(0, |acc, (s, &occ)| acc | (usize::from(occ) << s))
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn occupied(&self, slot: usize) -> bool {
        self.0[slot]
    }
}

impl Serialize for Schedule {
    fn serialize<S: serde::Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        let bits: Vec<u8> = self.0.iter().map(|&b| u8::from(b)).collect();
        bits.serialize(s)
    }
}

impl<'de> Deserialize<'de> for Schedule {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        let bits = Vec::<u8>::deserialize(d)?;
        bits.iter()
            .map(|&b| match b {
                0 => Ok(false),
                1 => Ok(true),
                _ => Err(serde::de::Error::custom("schedule slots must be 0 or 1")),
            })
            .collect::<std::result::Result<Vec<_>, _>>()
            .map(Schedule)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SchedAction {
    /// Slots `start..=end` are occupied for the sender.
    Inform { start: usize, end: usize },
    Propose { slot: usize },
    Reject,
}

/// Canonical action order: informs sorted by `(start, end)`, then proposals by
/// slot, then reject. `D(D+1)/2 + D + 1` actions.
pub fn action_space(d: usize) -> Vec<SchedAction> {
    let mut actions = Vec::with_capacity(d * (d + 1) / 2 + d + 1);
    for start in 0..d {
        for end in start..d {
            actions.push(SchedAction::Inform { start, end });
        }
    }
    actions.extend((0..d).map(|slot| SchedAction::Propose { slot }));
    actions.push(SchedAction::Reject);
    actions
}

/// Every interval whose slots are all occupied.
pub fn legal_informs(schedule: &Schedule) -> Vec<(usize, usize)> {
    let d = schedule.len();
    let mut out = Vec::new();
    for start in 0..d {
        for end in start..d {
            if !schedule.occupied(end) {
                break;
            }
            out.push((start, end));
        }
    }
    out
}

pub fn generate_schedule(rng: &mut SeededRng, d: usize, p: f64) -> Schedule {
    Schedule((0..d).map(|_| rng.bernoulli(p)).collect())
}

fn common_free_slot(a: &Schedule, b: &Schedule) -> bool {
    a.0.iter().zip(&b.0).any(|(&x, &y)| !x && !y)
}

#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct SchedScenario {
    pub a: Schedule,
    pub b: Schedule,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SchedState {
    /// Informed intervals in order, with their senders.
    pub history: Vec<(AgentId, (usize, usize))>,
    pub turn: AgentId,
    pub step: usize,
    /// Accumulated message cost per agent (nonpositive).
    pub costs: [f64; 2],
}

/// Mask over all `2^d` schedules: `true` iff the schedule marks every slot
/// `sender` has informed as occupied.
pub fn consistent_schedule_mask(history: &[(AgentId, (usize, usize))], sender: AgentId, d: usize) -> Vec<bool> {
    let mut required = 0usize;
    for &(who, (start, end)) in history {
        if who == sender {
            for s in start..=end {
                required |= 1 << s;
            }
        }
    }
    (0..1usize << d).map(|omega| omega & required == required).collect()
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SchedulingGame {
    /// Slots per timetable.
    pub d: usize,
    /// Probability that a generated slot is occupied.
    pub p: f64,
}

impl SchedulingGame {
    pub fn new(d: usize, p: f64) -> Result<Self> {
        if d == 0 || d > 12 {
            return Err(config_err(format!("D={d} outside supported range 1..=12")));
        }
        if !(p > 0.0 && p < 1.0) {
            return Err(config_err(format!("occupancy probability {p} must lie in (0, 1)")));
        }
        Ok(Self { d, p })
    }

    pub fn action(&self, index: usize) -> Result<SchedAction> {
        decode_action(self.d, index)
    }

    pub fn action_index(&self, action: SchedAction) -> Result<usize> {
        encode_action(self.d, action)
    }

    pub fn random_scenario(&self, rng: &mut SeededRng) -> SchedScenario {
        SchedScenario {
            a: generate_schedule(rng, self.d, self.p),
            b: generate_schedule(rng, self.d, self.p),
        }
    }

    fn schedule(&self, omega: PrivateState) -> Schedule {
        Schedule::from_index(omega.0, self.d)
    }

    /// Step with an explicit action value instead of an index.
    pub fn step_action(
        &self,
        state: &SchedState,
        privates: &[PrivateState; 2],
        action: SchedAction,
    ) -> Result<StepOutcome<SchedState>> {
        let idx = self.action_index(action)?;
        self.step(state, privates, idx)
    }
}

fn encode_action(d: usize, action: SchedAction) -> Result<usize> {
    match action {
        SchedAction::Inform { start, end } if start <= end && end < d => {
            // informs with smaller start come first; start s contributes d - s entries
            let before: usize = (0..start).map(|s| d - s).sum();
            Ok(before + (end - start))
        }
        SchedAction::Propose { slot } if slot < d => Ok(d * (d + 1) / 2 + slot),
        SchedAction::Reject => Ok(d * (d + 1) / 2 + d),
        other => Err(usage_err(format!("malformed action {other:?} for D={d}"))),
    }
}

fn decode_action(d: usize, mut index: usize) -> Result<SchedAction> {
    for start in 0..d {
        let span = d - start;
        if index < span {
            return Ok(SchedAction::Inform { start, end: start + index });
        }
        index -= span;
    }
    if index < d {
        return Ok(SchedAction::Propose { slot: index });
    }
    if index == d {
        return Ok(SchedAction::Reject);
    }
    Err(usage_err(format!("action index out of range for D={d}")))
}

impl Game for SchedulingGame {
    type State = SchedState;
    type Scenario = SchedScenario;

    fn id(&self) -> String {
        format!("scheduling:d={}", self.d)
    }

    fn num_actions(&self, _agent: AgentId) -> usize {
        self.d * (self.d + 1) / 2 + self.d + 1
    }

    fn private_space(&self, _agent: AgentId) -> usize {
        1 << self.d
    }

    fn reset(&self, scenario: &SchedScenario) -> Result<(SchedState, [PrivateState; 2])> {
        if scenario.a.len() != self.d || scenario.b.len() != self.d {
            return Err(config_err(format!("schedules must have exactly {} slots", self.d)));
        }
        let state = SchedState {
            history: Vec::new(),
            turn: AgentId::A,
            step: 0,
            costs: [0.0, 0.0],
        };
        Ok((state, [PrivateState(scenario.a.index()), PrivateState(scenario.b.index())]))
    }

    fn step(
        &self,
        state: &SchedState,
        privates: &[PrivateState; 2],
        action: usize,
    ) -> Result<StepOutcome<SchedState>> {
        let action = decode_action(self.d, action)?;
        let sender = state.turn;
        let a = self.schedule(privates[0]);
        let b = self.schedule(privates[1]);
        let own = if sender == AgentId::A { &a } else { &b };

        let mut next = state.clone();
        next.step += 1;
        next.turn = sender.other();

        let finish = |next: SchedState, outcome: f64, kind: TerminalKind, cause: Option<FailureCause>| StepOutcome {
            rewards: [outcome + next.costs[0], outcome + next.costs[1]],
            next_state: next,
            terminal: kind,
            cause,
        };

        match action {
            SchedAction::Propose { slot } => {
                let ok = !a.occupied(slot) && !b.occupied(slot);
                Ok(if ok {
                    finish(next, SUCCESS_REWARD, TerminalKind::Success, None)
                } else {
                    finish(next, FAILURE_REWARD, TerminalKind::Failure, Some(FailureCause::WrongProposal))
                })
            }
            SchedAction::Reject => {
                let ok = !common_free_slot(&a, &b);
                Ok(if ok {
                    finish(next, SUCCESS_REWARD, TerminalKind::Success, None)
                } else {
                    finish(next, FAILURE_REWARD, TerminalKind::Failure, Some(FailureCause::WrongReject))
                })
            }
            SchedAction::Inform { start, end } => {
                if (start..=end).any(|s| !own.occupied(s)) {
                    return Ok(finish(next, FAILURE_REWARD, TerminalKind::Failure, Some(FailureCause::WrongInform)));
                }
                next.history.push((sender, (start, end)));
                next.costs[sender.index()] += MESSAGE_COST;
                if next.step >= EPISODE_CAP {
                    return Ok(finish(next, FAILURE_REWARD, TerminalKind::Failure, Some(FailureCause::EpisodeCap)));
                }
                Ok(StepOutcome {
                    next_state: next,
                    rewards: [0.0, 0.0],
                    terminal: TerminalKind::None,
                    cause: None,
                })
            }
        }
    }

    fn turn(&self, state: &SchedState) -> AgentId {
        state.turn
    }

    fn step_count(&self, state: &SchedState) -> usize {
        state.step
    }

    fn public_dim(&self) -> usize {
        2 * self.d + 1
    }

    /// Slots informed so far by A, slots informed by B, step counter.
    fn public_features(&self, state: &SchedState, out: &mut Vec<f64>) {
        let base = out.len();
        out.resize(base + 2 * self.d, 0.0);
        for &(who, (start, end)) in &state.history {
            for s in start..=end {
                out[base + who.index() * self.d + s] = 1.0;
            }
        }
        out.push(state.step as f64 / EPISODE_CAP as f64);
    }

    fn private_dim(&self, _agent: AgentId) -> usize {
        self.d + self.d * (self.d + 1) / 2
    }

    /// Occupancy bits, then one flag per interval (in inform-action order)
    /// marking whether the whole interval is occupied.
    fn private_features(&self, _state: &SchedState, _agent: AgentId, omega: PrivateState, out: &mut Vec<f64>) {
        let bit = |s: usize| omega.0 >> s & 1 == 1;
        out.extend((0..self.d).map(|s| if bit(s) { 1.0 } else { 0.0 }));
        for start in 0..self.d {
            for end in start..self.d {
                out.push(if (start..=end).all(bit) { 1.0 } else { 0.0 });
            }
        }
    }

    fn bob_dim(&self, _about: AgentId) -> usize {
        self.d
    }

    fn bob_head(&self) -> Head {
        Head::Sigmoid
    }

    fn bob_loss(&self) -> LossKind {
        LossKind::L2Distance
    }

    fn belief_to_bob(&self, _about: AgentId, belief: &Belief) -> Vec<f64> {
        marginalize(belief, self.d)
    }

    fn discretize(&self, bob: &[f64], _rng: &mut SeededRng) -> Vec<f64> {
        discretize_scheduling(bob)
    }

    fn consistency_mask(&self, state: &SchedState, about: AgentId) -> Option<Vec<bool>> {
        Some(consistent_schedule_mask(&state.history, about, self.d))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn sched(bits: &[u8]) -> Schedule {
        Schedule(bits.iter().map(|&b| b == 1).collect())
    }

    fn start(game: &SchedulingGame, a: &[u8], b: &[u8]) -> (SchedState, [PrivateState; 2]) {
        game.reset(&SchedScenario { a: sched(a), b: sched(b) }).unwrap()
    }

    #[test]
    fn legal_informs_documented_example() {
        let s = sched(&[0, 0, 1, 1, 1, 0, 1, 1]);
        let got = legal_informs(&s);
        let expected = vec![(2, 2), (2, 3), (2, 4), (3, 3), (3, 4), (4, 4), (6, 6), (6, 7), (7, 7)];
        assert_eq!(got, expected);
        assert!(legal_informs(&sched(&[0, 0, 0])).is_empty());
        assert_eq!(legal_informs(&sched(&[1, 1, 1])).len(), 6);
    }

    #[test]
    fn action_space_sizes_and_order() {
        assert_eq!(action_space(8).len(), 45);
        assert_eq!(action_space(1).len(), 3);
        let acts = action_space(3);
        assert_eq!(acts[0], SchedAction::Inform { start: 0, end: 0 });
        assert_eq!(acts[2], SchedAction::Inform { start: 0, end: 2 });
        assert_eq!(acts[3], SchedAction::Inform { start: 1, end: 1 });
        assert_eq!(acts[6], SchedAction::Propose { slot: 0 });
        assert_eq!(*acts.last().unwrap(), SchedAction::Reject);
        for (i, a) in acts.iter().enumerate() {
            assert_eq!(encode_action(3, *a).unwrap(), i);
            assert_eq!(decode_action(3, i).unwrap(), *a);
        }
        assert_eq!(action_space(8), action_space(8));
    }

    #[test]
    fn reset_has_empty_history() {
        let game = SchedulingGame::new(8, 0.5).unwrap();
        let mut rng = SeededRng::new(5);
        let scen = game.random_scenario(&mut rng);
        let (s, p) = game.reset(&scen).unwrap();
        assert!(s.history.is_empty());
        assert_eq!(s.turn, AgentId::A);
        assert_eq!(p[0].0, scen.a.index());
    }

    #[test]
    fn propose_common_free_slot_succeeds() {
        let game = SchedulingGame::new(8, 0.5).unwrap();
        let (s, p) = start(&game, &[0, 0, 1, 1, 1, 0, 1, 1], &[1, 0, 1, 1, 1, 1, 1, 1]);
        let o = game.step_action(&s, &p, SchedAction::Propose { slot: 1 }).unwrap();
        assert_eq!(o.terminal, TerminalKind::Success);
        assert_eq!(o.rewards, [1.0, 1.0]);
        let o = game.step_action(&s, &p, SchedAction::Propose { slot: 0 }).unwrap();
        assert_eq!(o.terminal, TerminalKind::Failure);
        assert_eq!(o.rewards, [-2.0, -2.0]);
    }

    #[test]
    fn reject_meetable_fails() {
        let game = SchedulingGame::new(8, 0.5).unwrap();
        let (s, p) = start(&game, &[0, 0, 1, 1, 1, 0, 1, 1], &[1, 0, 1, 1, 1, 1, 1, 1]);
        let o = game.step_action(&s, &p, SchedAction::Reject).unwrap();
        assert_eq!(o.terminal, TerminalKind::Failure);
        assert_eq!(o.cause, Some(FailureCause::WrongReject));
        assert_eq!(o.rewards, [-2.0, -2.0]);
    }

    #[test]
    fn wrong_inform_fails_without_cost() {
        let game = SchedulingGame::new(8, 0.5).unwrap();
        let (s, p) = start(&game, &[0, 0, 1, 1, 1, 0, 1, 1], &[1, 0, 1, 1, 1, 1, 1, 1]);
        let o = game.step_action(&s, &p, SchedAction::Inform { start: 0, end: 2 }).unwrap();
        assert_eq!(o.terminal, TerminalKind::Failure);
        assert_eq!(o.cause, Some(FailureCause::WrongInform));
        assert_eq!(o.rewards, [-2.0, -2.0]);
    }

    #[test]
    fn inform_costs_sender_only() {
        let game = SchedulingGame::new(8, 0.5).unwrap();
        let (s, p) = start(&game, &[0, 0, 1, 1, 1, 0, 1, 1], &[1, 0, 1, 1, 1, 1, 1, 1]);
        let o = game.step_action(&s, &p, SchedAction::Inform { start: 2, end: 4 }).unwrap();
        assert_eq!(o.terminal, TerminalKind::None);
        assert_eq!(o.rewards, [0.0, 0.0]);
        assert_eq!(o.next_state.costs, [-0.1, 0.0]);
        assert_eq!(o.next_state.turn, AgentId::B);
        // B ends the game; A carries its message cost
        let o2 = game.step_action(&o.next_state, &p, SchedAction::Propose { slot: 1 }).unwrap();
        assert_eq!(o2.terminal, TerminalKind::Success);
        assert!((o2.rewards[0] - 0.9).abs() < 1e-12);
        assert_eq!(o2.rewards[1], 1.0);
    }

    #[test]
    fn malformed_action_is_usage_error() {
        let game = SchedulingGame::new(4, 0.5).unwrap();
        let (s, p) = start(&game, &[0, 0, 0, 0], &[0, 0, 0, 0]);
        assert!(game.step(&s, &p, 15).is_err());
        assert!(game.step_action(&s, &p, SchedAction::Propose { slot: 4 }).is_err());
        assert!(game.step_action(&s, &p, SchedAction::Inform { start: 2, end: 1 }).is_err());
    }

    #[test]
    fn mask_examples() {
        let d = 4;
        assert!(consistent_schedule_mask(&[], AgentId::B, d).iter().all(|&m| m));
        let mask = consistent_schedule_mask(&[(AgentId::B, (2, 3))], AgentId::B, d);
        assert_eq!(mask.iter().filter(|&&m| m).count(), 1 << (d - 2));
        for (omega, &m) in mask.iter().enumerate() {
            assert_eq!(m, omega & 0b1100 == 0b1100);
        }
        // informs by the other agent are ignored
        assert!(consistent_schedule_mask(&[(AgentId::A, (0, 0))], AgentId::B, d).iter().all(|&m| m));
    }

    #[test]
    fn schedule_index_roundtrip() {
        for i in 0..16 {
            assert_eq!(Schedule::from_index(i, 4).index(), i);
        }
        let s = sched(&[1, 0, 1]);
        assert_eq!(s.index(), 0b101);
        let json = serde_json::to_string(&s).unwrap();
        assert_eq!(json, "[1,0,1]");
        assert_eq!(serde_json::from_str::<Schedule>(&json).unwrap(), s);
        assert!(serde_json::from_str::<Schedule>("[2]").is_err());
    }

    #[test]
    fn cap_ends_in_failure() {
        let game = SchedulingGame::new(2, 0.5).unwrap();
        let (mut s, p) = start(&game, &[1, 1], &[1, 1]);
        let inform = game.action_index(SchedAction::Inform { start: 0, end: 0 }).unwrap();
        let mut last = None;
        for _ in 0..EPISODE_CAP {
            let o = game.step(&s, &p, inform).unwrap();
            s = o.next_state.clone();
            let done = o.is_terminal();
            last = Some(o);
            if done {
                break;
            }
        }
        let o = last.unwrap();
        assert_eq!(o.cause, Some(FailureCause::EpisodeCap));
        assert!((o.rewards[0] - (-2.0 - 1.0)).abs() < 1e-9);
        assert!((o.rewards[1] - (-2.0 - 1.0)).abs() < 1e-9);
    }
}
