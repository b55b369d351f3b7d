//! Satisficing forward-search planner used to solve each subproblem.
//!
//! Lazy greedy best-first search: a node is evaluated when it is popped and
//! its successors inherit its heuristic value. The heuristic is a relaxed plan
//! extracted from an additive delete-relaxation fixpoint. From every expanded
//! node, the relaxed plan's actions are applied greedily while applicable and
//! the resulting deep state is queued ahead of ordinary successors.

use std::cmp::Reverse;
use std::collections::BinaryHeap;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rustc_hash::FxHashSet;
use serde::{Deserialize, Serialize};

use crate::model::{apply_unchecked, ActionId, AtomId, GroundedTask, ObjectiveMode, State};

/// Which objective the planner optimises; the other is only computed.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Strategy {
    Makespan,
    Cost,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct SearchBudget {
    pub max_expanded: u64,
    pub max_evaluated: u64,
}

impl SearchBudget {
    pub fn nodes(n: u64) -> Self {
        SearchBudget {
            max_expanded: n,
            max_evaluated: n,
        }
    }
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct SearchStats {
    pub expanded: u64,
    /// Heuristic evaluations, including the goal test of the initial state.
    pub evaluated: u64,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Failure {
    BudgetExhausted,
    /// The delete relaxation already proves the goal unreachable.
    Unreachable,
    /// Every reachable state was expanded without reaching the goal.
    SearchSpaceExhausted,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct SolveResult {
    pub plan: Result<Vec<ActionId>, Failure>,
    pub stats: SearchStats,
}

struct Node {
    state: State,
    parent: u32,
    /// Actions leading here from the parent, as a range of `segments`.
    seg: (u32, u32),
}

/// (h of parent, class, action weight, random key); lower pops first.
type Key = (Weight, u8, Weight, u64);

/// Search buffers kept between calls to avoid reallocation.
#[derive(Default)]
struct Scratch {
    nodes: Vec<Node>,
    segments: Vec<ActionId>,
    open: BinaryHeap<Reverse<(Key, u32)>>,
    closed: FxHashSet<State>,
    rp: Vec<ActionId>,
    pending: Vec<ActionId>,
}

impl Scratch {
    fn clear(&mut self) {
        self.nodes.clear();
        self.segments.clear();
        self.open.clear();
        // clearing costs O(capacity); drop tables grown by a long search
        if self.closed.capacity() > 1 << 12 {
            self.closed = FxHashSet::default();
        } else {
            self.closed.clear();
        }
    }
}

/// Lexicographic pair; the first component is the optimised quantity.
type Weight = (u64, u64);
const INF: Weight = (u64::MAX, u64::MAX);

fn add(a: Weight, b: Weight) -> Weight {
    (a.0.saturating_add(b.0), a.1.saturating_add(b.1))
}

/// Reusable solver for one task; holds scratch buffers, so keep one per worker.
pub struct Planner<'a> {
    task: &'a GroundedTask,
    weights: [Vec<Weight>; 2],
    atom_cost: Vec<Weight>,
    supporter: Vec<u32>,
    remaining: Vec<u32>,
    acc: Vec<Weight>,
    act_cost: Vec<Weight>,
    in_plan: Vec<bool>,
    settled: Vec<bool>,
    heap: BinaryHeap<Reverse<(Weight, u32)>>,
    stack: Vec<AtomId>,
    no_pre: Vec<ActionId>,
    /// Actions whose fixpoint entries are current carry the current epoch.
    act_epoch: Vec<u32>,
    epoch: u32,
    scratch: Scratch,
}

const NO_SUPPORTER: u32 = u32::MAX;

impl<'a> Planner<'a> {
    pub fn new(task: &'a GroundedTask) -> Self {
        let mode = task.mode();
        let acts = task.actions();
        let makespan: Vec<Weight> = acts
            .iter()
            .map(|a| (a.duration as u64, a.secondary(mode) as u64))
            .collect();
        let cost: Vec<Weight> = acts
            .iter()
            .map(|a| (a.secondary(mode) as u64, a.duration as u64))
            .collect();
        Planner {
            task,
            weights: [makespan, cost],
            atom_cost: vec![INF; task.num_atoms()],
            supporter: vec![NO_SUPPORTER; task.num_atoms()],
            remaining: vec![0; acts.len()],
            acc: vec![(0, 0); acts.len()],
            act_cost: vec![INF; acts.len()],
            in_plan: vec![false; acts.len()],
            settled: vec![false; task.num_atoms()],
            heap: BinaryHeap::new(),
            stack: Vec::new(),
            no_pre: acts.iter().filter(|a| a.pre.is_empty()).map(|a| a.id).collect(),
            act_epoch: vec![0; acts.len()],
            epoch: 0,
            scratch: Scratch::default(),
        }
    }

    pub fn task(&self) -> &'a GroundedTask {
        self.task
    }

    fn weight_index(strategy: Strategy) -> usize {
        match strategy {
            Strategy::Makespan => 0,
            Strategy::Cost => 1,
        }
    }

    /// Resets an action's fixpoint entries on first use in this epoch.
    #[inline]
    fn touch(&mut self, a: ActionId) {
        if self.act_epoch[a] != self.epoch {
            self.act_epoch[a] = self.epoch;
            self.acc[a] = (0, 0);
            self.act_cost[a] = INF;
            self.remaining[a] = self.task.action(a).pre.len() as u32;
        }
    }

    /// Charges a newly settled atom to its consumers and relaxes the adds of
    /// those that become applicable.
    #[inline]
    fn propagate(&mut self, atom: AtomId, c: Weight, wi: usize) {
        let task = self.task;
        for &a in task.consumers(atom) {
            self.touch(a);
            self.acc[a] = add(self.acc[a], c);
            self.remaining[a] -= 1;
            if self.remaining[a] == 0 {
                self.act_cost[a] = self.acc[a];
                let through = add(self.acc[a], self.weights[wi][a]);
                for &q in &task.action(a).add {
                    if through < self.atom_cost[q] {
                        self.atom_cost[q] = through;
                        self.supporter[q] = a as u32;
                        self.heap.push(Reverse((through, q as u32)));
                    }
                }
            }
        }
    }

    /// Additive fixpoint from `state`, stopping once every goal atom is
    /// settled. Returns false if some goal atom is unreachable.
    fn fixpoint(&mut self, state: &State, goal: &[AtomId], strategy: Strategy) -> bool {
        let task = self.task;
        let wi = Self::weight_index(strategy);
        self.atom_cost.fill(INF);
        self.supporter.fill(NO_SUPPORTER);
        self.epoch = self.epoch.wrapping_add(1);
        if self.epoch == 0 {
            self.act_epoch.fill(0);
            self.epoch = 1;
        }
        self.heap.clear();
        for atom in state.iter() {
            self.atom_cost[atom] = (0, 0);
        }
        let mut open_goals = goal.iter().filter(|&&g| !state.contains(g)).count();
        if open_goals == 0 {
            return true;
        }
        for i in 0..self.no_pre.len() {
            let a = self.no_pre[i];
            self.touch(a);
            self.act_cost[a] = (0, 0);
            let c = self.weights[wi][a];
            for &q in &task.action(a).add {
                if c < self.atom_cost[q] {
                    self.atom_cost[q] = c;
                    self.supporter[q] = a as u32;
                    self.heap.push(Reverse((c, q as u32)));
                }
            }
        }
        self.settled.fill(false);
        // every action weight is positive, so state atoms settle first
        for atom in state.iter() {
            self.settled[atom] = true;
            self.propagate(atom, (0, 0), wi);
        }
        while let Some(Reverse((c, atom))) = self.heap.pop() {
            let atom = atom as usize;
            if self.settled[atom] || c > self.atom_cost[atom] {
                continue;
            }
            self.settled[atom] = true;
            if goal.binary_search(&atom).is_ok() {
                open_goals -= 1;
                if open_goals == 0 {
                    return true;
                }
            }
            self.propagate(atom, c, wi);
        }
        false
    }

    /// Relaxed plan ordered by the cost at which each action becomes
    /// applicable, or `None` if the goal is unreachable without deletes.
    fn extract(&mut self, state: &State, goal: &[AtomId], strategy: Strategy, out: &mut Vec<ActionId>) -> bool {
        out.clear();
        if !self.fixpoint(state, goal, strategy) {
            return false;
        }
        self.stack.clear();
        self.stack.extend(goal.iter().copied().filter(|&g| !state.contains(g)));
        while let Some(atom) = self.stack.pop() {
            let a = self.supporter[atom];
            debug_assert_ne!(a, NO_SUPPORTER);
            let a = a as usize;
            if self.in_plan[a] {
                continue;
            }
            self.in_plan[a] = true;
            out.push(a);
            for &p in &self.task.action(a).pre {
                if !state.contains(p) {
                    self.stack.push(p);
                }
            }
        }
        for &a in out.iter() {
            self.in_plan[a] = false;
        }
        let cost = &self.act_cost;
        out.sort_by_key(|&a| (cost[a], a));
        true
    }

    /// Relaxed plan from `state` to `goal` under the makespan weighting.
    pub fn relaxed_plan(&mut self, state: &State, goal: &[AtomId]) -> Option<Vec<ActionId>> {
        let mut goal = goal.to_vec();
        goal.sort_unstable();
        goal.dedup();
        let mut out = Vec::new();
        self.extract(state, &goal, Strategy::Makespan, &mut out).then_some(out)
    }

    /// Priority of a relaxed plan: the optimised quantity first.
    fn score(&self, plan: &[ActionId], strategy: Strategy) -> Weight {
        let mode = self.task.mode();
        let mut dur = 0u64;
        let mut sec = 0u64;
        for &a in plan {
            let act = self.task.action(a);
            dur += act.duration as u64;
            let s = act.secondary(mode) as u64;
            sec = match mode {
                ObjectiveMode::CostSum => sec + s,
                ObjectiveMode::RiskMax => sec.max(s),
            };
        }
        match strategy {
            Strategy::Makespan => (dur, sec),
            Strategy::Cost => (sec, dur),
        }
    }

    /// Searches for a sequential plan from `init` reaching every atom of
    /// `goal`.
    pub fn solve(&mut self, init: &State, goal: &[AtomId], strategy: Strategy, budget: SearchBudget, seed: u64) -> SolveResult {
        let mut goal = goal.to_vec();
        goal.sort_unstable();
        goal.dedup();
        let stats = SearchStats {
            expanded: 0,
            evaluated: 1,
        };
        if init.contains_all(&goal) {
            return SolveResult {
                plan: Ok(Vec::new()),
                stats,
            };
        }
        let mut sc = std::mem::take(&mut self.scratch);
        let result = self.search(&mut sc, init, &goal, strategy, budget, seed, stats);
        self.scratch = sc;
        result
    }

    #[allow(clippy::too_many_arguments)]
    fn search(
        &mut self,
        sc: &mut Scratch,
        init: &State,
        goal: &[AtomId],
        strategy: Strategy,
        budget: SearchBudget,
        seed: u64,
        mut stats: SearchStats,
    ) -> SolveResult {
        let done = |plan, stats| SolveResult { plan, stats };
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let wi = Self::weight_index(strategy);
        sc.clear();
        let Scratch {
            nodes,
            segments,
            open,
            closed,
            rp,
            pending,
        } = sc;
        nodes.push(Node {
            state: init.clone(),
            parent: u32::MAX,
            seg: (0, 0),
        });
        open.push(Reverse((((0, 0), 0, (0, 0), 0), 0)));
        let mut first = true;

        let path = |nodes: &[Node], segments: &[ActionId], mut idx: u32, tail: &[ActionId]| {
            let mut parts: Vec<&[ActionId]> = vec![tail];
            while idx != u32::MAX {
                let n = &nodes[idx as usize];
                parts.push(&segments[n.seg.0 as usize..(n.seg.0 + n.seg.1) as usize]);
                idx = n.parent;
            }
            parts.into_iter().rev().flatten().copied().collect::<Vec<_>>()
        };

        while let Some(Reverse((_, idx))) = open.pop() {
            if stats.expanded >= budget.max_expanded || stats.evaluated >= budget.max_evaluated {
                return done(Err(Failure::BudgetExhausted), stats);
            }
            // a node is popped at most once, so its state can move out
            let state = std::mem::replace(&mut nodes[idx as usize].state, State::empty(0));
            if closed.contains(&state) {
                continue;
            }
            closed.insert(state.clone());
            // the root's goal test counted as its evaluation
            if !first {
                stats.evaluated += 1;
            }
            let reachable = self.extract(&state, goal, strategy, rp);
            if !reachable {
                if first {
                    return done(Err(Failure::Unreachable), stats);
                }
                continue;
            }
            first = false;
            let h = self.score(rp, strategy);
            stats.expanded += 1;

            // lookahead along the relaxed plan
            let mut deep = state.clone();
            let mut seq: Vec<ActionId> = Vec::new();
            pending.clear();
            pending.extend_from_slice(rp);
            loop {
                let Some(pos) = pending.iter().position(|&a| deep.contains_all(&self.task.action(a).pre)) else {
                    break;
                };
                let a = pending.remove(pos);
                apply_unchecked(self.task.action(a), &mut deep);
                seq.push(a);
                if deep.contains_all(&goal) {
                    return done(Ok(path(nodes, segments, idx, &seq)), stats);
                }
            }
            if !seq.is_empty() && !closed.contains(&deep) {
                let start = segments.len() as u32;
                segments.extend_from_slice(&seq);
                nodes.push(Node {
                    state: deep,
                    parent: idx,
                    seg: (start, seq.len() as u32),
                });
                open.push(Reverse(((h, 0, (0, 0), rng.gen()), (nodes.len() - 1) as u32)));
            }

            for act in self.task.actions() {
                if !state.contains_all(&act.pre) {
                    continue;
                }
                let mut next = state.clone();
                apply_unchecked(act, &mut next);
                if next.contains_all(&goal) {
                    return done(Ok(path(nodes, segments, idx, &[act.id])), stats);
                }
                if closed.contains(&next) {
                    continue;
                }
                let helpful = rp.binary_search_by_key(&(self.act_cost[act.id], act.id), |&a| (self.act_cost[a], a)).is_ok();
                let start = segments.len() as u32;
                segments.push(act.id);
                nodes.push(Node {
                    state: next,
                    parent: idx,
                    seg: (start, 1),
                });
                let class = if helpful { 1 } else { 2 };
                open.push(Reverse(((h, class, self.weights[wi][act.id], rng.gen()), (nodes.len() - 1) as u32)));
            }
        }
        done(Err(Failure::SearchSpaceExhausted), stats)
    }
}

/// One-shot solve of a task's own initial state and goal.
pub fn solve(task: &GroundedTask, strategy: Strategy, budget: SearchBudget, seed: u64) -> SolveResult {
    Planner::new(task).solve(task.init(), task.goal(), strategy, budget, seed)
}

/// One-shot relaxed plan.
pub fn relaxed_plan(task: &GroundedTask, state: &State, goal: &[AtomId]) -> Option<Vec<ActionId>> {
    Planner::new(task).relaxed_plan(state, goal)
}
