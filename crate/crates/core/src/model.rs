//! Grounded temporal planning: states, actions, plan validation and
//! makespan compression of sequential plans.
//!
//! Time, cost and risk are exact integers. A task carries the number of
//! integer ticks per PDDL unit for each quantity so that fractional
//! durations or costs from the problem file stay exact.

use std::collections::BinaryHeap;
use std::cmp::Reverse;
use std::fmt;

use rustc_hash::FxHashMap;
use smallvec::{smallvec, SmallVec};
use serde::{Deserialize, Serialize};
use thiserror::Error;

pub type AtomId = usize;
pub type ActionId = usize;

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum ModelError {
    #[error("atom id {atom} out of range (task has {len} atoms)")]
    AtomOutOfRange { atom: AtomId, len: usize },
    #[error("action id {action} out of range (task has {len} actions)")]
    ActionOutOfRange { action: ActionId, len: usize },
    #[error("action {action} is not applicable in the given state")]
    NotApplicable { action: String },
    #[error("malformed action {action}: {reason}")]
    MalformedAction { action: String, reason: String },
    #[error("invalid plan at step {step} ({action}): {reason}")]
    Validation {
        step: usize,
        action: String,
        reason: String,
    },
    #[error("plan does not reach the goal; missing {missing}")]
    GoalNotReached { missing: String },
}

/// How the secondary objective of a plan is accumulated.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum ObjectiveMode {
    CostSum,
    RiskMax,
}

impl fmt::Display for ObjectiveMode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            ObjectiveMode::CostSum => f.write_str("cost-sum"),
            ObjectiveMode::RiskMax => f.write_str("risk-max"),
        }
    }
}

/// Fixed-length bitset over the atoms of a task.
#[derive(Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct State {
    // inline up to 256 atoms; planner states are cloned per node
    words: SmallVec<[u64; 4]>,
    len: usize,
}

impl State {
    pub fn empty(len: usize) -> Self {
        State {
            words: smallvec![0; len.div_ceil(64)],
            len,
        }
    }

    pub fn from_atoms(len: usize, atoms: impl IntoIterator<Item = AtomId>) -> Result<Self, ModelError> {
        let mut s = State::empty(len);
        for a in atoms {
            if a >= len {
                return Err(ModelError::AtomOutOfRange { atom: a, len });
            }
            s.insert(a);
        }
        Ok(s)
    }

    #[inline]
    pub fn len(&self) -> usize {
        self.len
    }

    #[inline]
    pub fn is_empty(&self) -> bool {
        self.words.iter().all(|w| *w == 0)
    }

    #[inline]
    pub fn contains(&self, atom: AtomId) -> bool {
        atom < self.len && self.words[atom >> 6] & (1 << (atom & 63)) != 0
    }

    #[inline]
    pub fn insert(&mut self, atom: AtomId) {
        self.words[atom >> 6] |= 1 << (atom & 63);
    }

    #[inline]
    pub fn remove(&mut self, atom: AtomId) {
        self.words[atom >> 6] &= !(1 << (atom & 63));
    }

    #[inline]
    pub fn contains_all(&self, atoms: &[AtomId]) -> bool {
        atoms.iter().all(|&a| self.contains(a))
    }

    pub fn count(&self) -> usize {
        self.words.iter().map(|w| w.count_ones() as usize).sum()
    }

    pub fn iter(&self) -> impl Iterator<Item = AtomId> + '_ {
        self.words.iter().enumerate().flat_map(|(i, &w)| {
            let mut w = w;
            std::iter::from_fn(move || {
                if w == 0 {
                    return None;
                }
                let bit = w.trailing_zeros() as usize;
                w &= w - 1;
                Some(i * 64 + bit)
            })
        })
    }
}

impl fmt::Debug for State {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_set().entries(self.iter()).finish()
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Atom {
    pub id: AtomId,
    pub name: String,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct GroundedAction {
    pub id: ActionId,
    pub name: String,
    /// Sorted, deduplicated.
    pub pre: Vec<AtomId>,
    pub add: Vec<AtomId>,
    pub del: Vec<AtomId>,
    /// Ticks; strictly positive.
    pub duration: i64,
    pub cost: i64,
    pub risk: i64,
}

impl GroundedAction {
    /// True if one action's deletes touch the other's preconditions or adds.
    pub fn interferes(&self, other: &GroundedAction) -> bool {
        fn meets(a: &[AtomId], b: &[AtomId]) -> bool {
            let (mut i, mut j) = (0, 0);
            while i < a.len() && j < b.len() {
                match a[i].cmp(&b[j]) {
                    std::cmp::Ordering::Less => i += 1,
                    std::cmp::Ordering::Greater => j += 1,
                    std::cmp::Ordering::Equal => return true,
                }
            }
            false
        }
        meets(&self.del, &other.pre)
            || meets(&self.del, &other.add)
            || meets(&other.del, &self.pre)
            || meets(&other.del, &self.add)
    }

    /// Secondary objective contribution under `mode`.
    #[inline]
    pub fn secondary(&self, mode: ObjectiveMode) -> i64 {
        match mode {
            ObjectiveMode::CostSum => self.cost,
            ObjectiveMode::RiskMax => self.risk,
        }
    }
}

/// (makespan, secondary) pair; secondary is summed cost or maximal risk.
#[derive(
    Clone, Copy, Debug, Default, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize,
)]
#[serde(from = "[i64; 2]", into = "[i64; 2]")]
pub struct ObjectiveVector {
    pub makespan: i64,
    pub secondary: i64,
}

impl ObjectiveVector {
    pub const fn new(makespan: i64, secondary: i64) -> Self {
        ObjectiveVector {
            makespan,
            secondary,
        }
    }

    /// Minimisation dominance: no worse in both, better in one.
    #[inline]
    pub fn dominates(&self, other: &ObjectiveVector) -> bool {
        self.makespan <= other.makespan && self.secondary <= other.secondary && self != other
    }

    #[inline]
    pub fn weakly_dominates(&self, other: &ObjectiveVector) -> bool {
        self.makespan <= other.makespan && self.secondary <= other.secondary
    }
}

impl From<[i64; 2]> for ObjectiveVector {
    fn from(v: [i64; 2]) -> Self {
        ObjectiveVector::new(v[0], v[1])
    }
}

impl From<ObjectiveVector> for [i64; 2] {
    fn from(v: ObjectiveVector) -> Self {
        [v.makespan, v.secondary]
    }
}

impl fmt::Display for ObjectiveVector {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "({},{})", self.makespan, self.secondary)
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct PlanStep {
    pub start: i64,
    pub action: ActionId,
}

/// A schedule of actions together with its validated objectives.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Plan {
    pub steps: Vec<PlanStep>,
    pub objectives: ObjectiveVector,
}

impl Plan {
    /// Sorts `steps` by start time (ties by action id) and scores them.
    pub fn new(task: &GroundedTask, mut steps: Vec<PlanStep>) -> Result<Self, ModelError> {
        steps.sort();
        let objectives = validate_and_score(task, &steps)?;
        Ok(Plan { steps, objectives })
    }

    pub fn action_sequence(&self) -> Vec<ActionId> {
        self.steps.iter().map(|s| s.action).collect()
    }
}

#[derive(Clone, Debug)]
pub struct GroundedTask {
    pub name: String,
    atoms: Vec<Atom>,
    actions: Vec<GroundedAction>,
    init: State,
    goal: Vec<AtomId>,
    mode: ObjectiveMode,
    /// Integer ticks per time unit of the source problem.
    pub time_quantum: i64,
    /// Integer ticks per cost/risk unit of the source problem.
    pub cost_quantum: i64,
    atom_index: FxHashMap<String, AtomId>,
    action_index: FxHashMap<String, ActionId>,
    achievers: Vec<Vec<ActionId>>,
    pre_of: Vec<Vec<ActionId>>,
}

impl GroundedTask {
    /// Builds a task, checking every structural invariant. Atom and action
    /// ids are taken from list positions.
    pub fn new(
        name: impl Into<String>,
        atom_names: Vec<String>,
        mut actions: Vec<GroundedAction>,
        init: impl IntoIterator<Item = AtomId>,
        goal: impl IntoIterator<Item = AtomId>,
        mode: ObjectiveMode,
    ) -> Result<Self, ModelError> {
        let n = atom_names.len();
        let atoms: Vec<Atom> = atom_names
            .into_iter()
            .enumerate()
            .map(|(id, name)| Atom { id, name })
            .collect();
        let mut atom_index = FxHashMap::default();
        for a in &atoms {
            if atom_index.insert(a.name.clone(), a.id).is_some() {
                return Err(ModelError::MalformedAction {
                    action: a.name.clone(),
                    reason: "duplicate atom name".into(),
                });
            }
        }
        let mut action_index = FxHashMap::default();
        let mut achievers = vec![Vec::new(); n];
        let mut pre_of = vec![Vec::new(); n];
        for (id, act) in actions.iter_mut().enumerate() {
            act.id = id;
            for list in [&mut act.pre, &mut act.add, &mut act.del] {
                list.sort_unstable();
                list.dedup();
                if let Some(&bad) = list.iter().find(|&&a| a >= n) {
                    return Err(ModelError::AtomOutOfRange { atom: bad, len: n });
                }
            }
            let malformed = |reason: &str| ModelError::MalformedAction {
                action: act.name.clone(),
                reason: reason.into(),
            };
            if act.add.iter().any(|a| act.del.binary_search(a).is_ok()) {
                return Err(malformed("add and delete effects overlap"));
            }
            if act.duration <= 0 {
                return Err(malformed("duration must be positive"));
            }
            if act.cost < 0 || act.risk < 0 {
                return Err(malformed("negative cost or risk"));
            }
            for &a in &act.add {
                achievers[a].push(id);
            }
            for &a in &act.pre {
                pre_of[a].push(id);
            }
            if action_index.insert(act.name.clone(), id).is_some() {
                return Err(malformed("duplicate action name"));
            }
        }
        let init = State::from_atoms(n, init)?;
        let mut goal: Vec<AtomId> = goal.into_iter().collect();
        goal.sort_unstable();
        goal.dedup();
        if let Some(&bad) = goal.iter().find(|&&a| a >= n) {
            return Err(ModelError::AtomOutOfRange { atom: bad, len: n });
        }
        Ok(GroundedTask {
            name: name.into(),
            atoms,
            actions,
            init,
            goal,
            mode,
            time_quantum: 1,
            cost_quantum: 1,
            atom_index,
            action_index,
            achievers,
            pre_of,
        })
    }

    pub fn atoms(&self) -> &[Atom] {
        &self.atoms
    }

    pub fn num_atoms(&self) -> usize {
        self.atoms.len()
    }

    pub fn actions(&self) -> &[GroundedAction] {
        &self.actions
    }

    pub fn action(&self, id: ActionId) -> &GroundedAction {
        &self.actions[id]
    }

    pub fn init(&self) -> &State {
        &self.init
    }

    pub fn goal(&self) -> &[AtomId] {
        &self.goal
    }

    pub fn mode(&self) -> ObjectiveMode {
        self.mode
    }

    /// Same task with a different secondary objective.
    pub fn with_mode(&self, mode: ObjectiveMode) -> Self {
        GroundedTask {
            mode,
            ..self.clone()
        }
    }

    /// Same atoms and actions, different initial state and goal.
    pub fn subproblem(&self, init: State, goal: Vec<AtomId>) -> Self {
        let mut goal = goal;
        goal.sort_unstable();
        goal.dedup();
        GroundedTask {
            init,
            goal,
            ..self.clone()
        }
    }

    pub fn atom_id(&self, name: &str) -> Option<AtomId> {
        self.atom_index.get(name).copied()
    }

    pub fn action_id(&self, name: &str) -> Option<ActionId> {
        self.action_index.get(name).copied()
    }

    /// Actions adding `atom`, ascending id.
    pub fn achievers(&self, atom: AtomId) -> &[ActionId] {
        &self.achievers[atom]
    }

    /// Actions requiring `atom`, ascending id.
    pub fn consumers(&self, atom: AtomId) -> &[ActionId] {
        &self.pre_of[atom]
    }

    fn check_state(&self, state: &State) -> Result<(), ModelError> {
        if state.len() != self.num_atoms() {
            return Err(ModelError::AtomOutOfRange {
                atom: state.len(),
                len: self.num_atoms(),
            });
        }
        Ok(())
    }

    fn checked_action(&self, action: ActionId) -> Result<&GroundedAction, ModelError> {
        self.actions.get(action).ok_or(ModelError::ActionOutOfRange {
            action,
            len: self.actions.len(),
        })
    }

    pub fn is_goal(&self, state: &State) -> bool {
        state.contains_all(&self.goal)
    }

    /// Scales a tick count back to source units for display.
    pub fn format_time(&self, ticks: i64) -> String {
        format_scaled(ticks, self.time_quantum)
    }

    pub fn format_cost(&self, ticks: i64) -> String {
        format_scaled(ticks, self.cost_quantum)
    }
}

pub(crate) fn format_scaled(value: i64, quantum: i64) -> String {
    if quantum == 1 {
        return value.to_string();
    }
    let digits = (quantum as f64).log10().round() as usize;
    let sign = if value < 0 { "-" } else { "" };
    let v = value.unsigned_abs();
    let q = quantum as u64;
    format!("{sign}{}.{:0width$}", v / q, v % q, width = digits)
}

/// True iff the preconditions of `action` hold in `state`.
pub fn applicable(task: &GroundedTask, state: &State, action: ActionId) -> Result<bool, ModelError> {
    task.check_state(state)?;
    let act = task.checked_action(action)?;
    Ok(state.contains_all(&act.pre))
}

/// `(state \ del) ∪ add`; the action must be applicable.
pub fn apply(task: &GroundedTask, state: &State, action: ActionId) -> Result<State, ModelError> {
    if !applicable(task, state, action)? {
        return Err(ModelError::NotApplicable {
            action: task.actions[action].name.clone(),
        });
    }
    let mut next = state.clone();
    apply_unchecked(&task.actions[action], &mut next);
    Ok(next)
}

#[inline]
pub(crate) fn apply_unchecked(act: &GroundedAction, state: &mut State) {
    for &d in &act.del {
        state.remove(d);
    }
    for &a in &act.add {
        state.insert(a);
    }
}

/// Simulates a schedule and returns its objectives.
///
/// Conditions are checked at start, effects happen at end, and effects of
/// actions ending at time `t` are visible to actions starting at `t`. Two
/// actions whose execution intervals overlap must not interfere.
pub fn validate_and_score(task: &GroundedTask, steps: &[PlanStep]) -> Result<ObjectiveVector, ModelError> {
    let mut order: Vec<usize> = (0..steps.len()).collect();
    order.sort_by_key(|&i| (steps[i].start, steps[i].action, i));

    let mut state = task.init.clone();
    let mut running: BinaryHeap<Reverse<(i64, usize)>> = BinaryHeap::new();
    let mut makespan = 0i64;
    let mut secondary = 0i64;

    for (rank, &i) in order.iter().enumerate() {
        let step = steps[i];
        let act = task.checked_action(step.action)?;
        let fail = |reason: String| ModelError::Validation {
            step: rank,
            action: act.name.clone(),
            reason,
        };
        if step.start < 0 {
            return Err(fail(format!("negative start time {}", step.start)));
        }
        while let Some(&Reverse((end, j))) = running.peek() {
            if end > step.start {
                break;
            }
            running.pop();
            apply_unchecked(&task.actions[steps[j].action], &mut state);
        }
        if let Some(&missing) = act.pre.iter().find(|&&p| !state.contains(p)) {
            return Err(fail(format!(
                "precondition {} does not hold at t={}",
                task.atoms[missing].name, step.start
            )));
        }
        for &Reverse((_, j)) in running.iter() {
            let other = &task.actions[steps[j].action];
            if act.interferes(other) {
                return Err(fail(format!("interferes with overlapping {}", other.name)));
            }
        }
        let end = step.start + act.duration;
        running.push(Reverse((end, i)));
        makespan = makespan.max(end);
        secondary = match task.mode {
            ObjectiveMode::CostSum => secondary + act.cost,
            ObjectiveMode::RiskMax => secondary.max(act.risk),
        };
    }
    while let Some(Reverse((_, j))) = running.pop() {
        apply_unchecked(&task.actions[steps[j].action], &mut state);
    }
    if let Some(&missing) = task.goal.iter().find(|&&g| !state.contains(g)) {
        return Err(ModelError::GoalNotReached {
            missing: task.atoms[missing].name.clone(),
        });
    }
    Ok(ObjectiveVector::new(makespan, secondary))
}

/// Applies `actions` in order from the initial state and returns the final
/// state, failing on the first inapplicable action.
pub fn execute_sequential(task: &GroundedTask, actions: &[ActionId]) -> Result<State, ModelError> {
    let mut state = task.init.clone();
    for (k, &a) in actions.iter().enumerate() {
        let act = task.checked_action(a)?;
        if let Some(&missing) = act.pre.iter().find(|&&p| !state.contains(p)) {
            return Err(ModelError::Validation {
                step: k,
                action: act.name.clone(),
                reason: format!("precondition {} does not hold", task.atoms[missing].name),
            });
        }
        apply_unchecked(act, &mut state);
    }
    Ok(state)
}

/// Greedy earliest-start scheduling of a valid sequential plan.
///
/// Each action, in sequence order, starts once the last earlier provider of
/// each precondition has ended and once every earlier interfering action has
/// ended.
pub fn compress(task: &GroundedTask, actions: &[ActionId]) -> Result<Plan, ModelError> {
    let last = execute_sequential(task, actions)?;
    if let Some(&missing) = task.goal.iter().find(|&&g| !last.contains(g)) {
        return Err(ModelError::GoalNotReached {
            missing: task.atoms[missing].name.clone(),
        });
    }
    let steps = schedule_greedy(task, actions);
    Plan::new(task, steps)
}

/// Earliest-start times for an already validated sequence.
pub(crate) fn schedule_greedy(task: &GroundedTask, actions: &[ActionId]) -> Vec<PlanStep> {
    let n = task.num_atoms();
    let mut last_add_end = vec![0i64; n];
    let mut del_end = vec![0i64; n];
    let mut use_end = vec![0i64; n];
    let mut steps = Vec::with_capacity(actions.len());
    for &a in actions {
        let act = &task.actions[a];
        let mut start = 0i64;
        for &p in &act.pre {
            start = start.max(last_add_end[p]).max(del_end[p]);
        }
        for &p in &act.add {
            start = start.max(del_end[p]);
        }
        for &p in &act.del {
            start = start.max(use_end[p]);
        }
        let end = start + act.duration;
        for &p in &act.pre {
            use_end[p] = use_end[p].max(end);
        }
        for &p in &act.add {
            use_end[p] = use_end[p].max(end);
            last_add_end[p] = end;
        }
        for &p in &act.del {
            del_end[p] = del_end[p].max(end);
        }
        steps.push(PlanStep { start, action: a });
    }
    steps
}
