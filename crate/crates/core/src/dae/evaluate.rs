//! Decoding a genome into a plan by chaining planner calls.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::{DaeContext, EvoParams, Individual};
use crate::model::{apply_unchecked, compress, ActionId, ObjectiveVector, Plan};
use crate::planner::{Planner, SearchBudget, Strategy};

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct EvaluationResult {
    pub feasible: bool,
    /// Scored compressed plan; `None` when some subproblem failed.
    pub objectives: Option<ObjectiveVector>,
    /// Subproblems solved before the first failure.
    pub solved: usize,
    /// States plus the final goal.
    pub total: usize,
    pub plan: Option<Plan>,
    /// Planner evaluations summed over every call, failed ones included.
    pub nodes: u64,
    pub strategy: Strategy,
}

impl EvaluationResult {
    pub fn unsolved(&self) -> usize {
        self.total - self.solved
    }
}

fn pick_strategy<R: Rng>(params: &EvoParams, rng: &mut R) -> Strategy {
    let total = params.w_makespan + params.w_cost;
    let p_makespan = if total > 0.0 { params.w_makespan / total } else { 0.5 };
    if rng.gen_bool(p_makespan.clamp(0.0, 1.0)) {
        Strategy::Makespan
    } else {
        Strategy::Cost
    }
}

/// Solves each partial state in turn from the state the previous plan
/// reached, then the task goal, all with one strategy. `per_call` is split
/// evenly across the calls, at least one node each.
pub fn evaluate(
    ind: &Individual,
    ctx: &DaeContext,
    planner: &mut Planner,
    params: &EvoParams,
    per_call: u64,
    seed: u64,
) -> EvaluationResult {
    let task = ctx.task;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let strategy = pick_strategy(params, &mut rng);
    let total = ind.len() + 1;
    let budget = SearchBudget::nodes((per_call / total as u64).max(1));
    let mut state = task.init().clone();
    let mut actions: Vec<ActionId> = Vec::new();
    let mut nodes = 0;
    let goals = ind.states.iter().map(|s| s.atoms.as_slice()).chain(std::iter::once(task.goal()));
    let mut result = EvaluationResult {
        feasible: false,
        objectives: None,
        solved: 0,
        total,
        plan: None,
        nodes: 0,
        strategy,
    };
    for goal in goals {
        let out = planner.solve(&state, goal, strategy, budget, rng.gen());
        nodes += out.stats.evaluated;
        let Ok(steps) = out.plan else {
            result.nodes = nodes;
            return result;
        };
        for &a in &steps {
            apply_unchecked(task.action(a), &mut state);
        }
        actions.extend(steps);
        result.solved += 1;
    }
    result.nodes = nodes;
    let plan = compress(task, &actions).expect("chained subplans execute from the initial state");
    result.feasible = true;
    result.objectives = Some(plan.objectives);
    result.plan = Some(plan);
    result
}

/// Penalty for infeasible individuals: per objective, ten times the largest
/// feasible value seen so far (at least `PENALTY_FLOOR`), scaled up by the
/// fraction of unsolved subproblems so partial progress ranks better.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct PenaltyTracker {
    pub max_feasible: ObjectiveVector,
}

pub const PENALTY_FLOOR: i64 = 1_000_000;

impl PenaltyTracker {
    pub fn observe(&mut self, objectives: &ObjectiveVector) {
        let m = &mut self.max_feasible;
        m.makespan = m.makespan.max(objectives.makespan);
        m.secondary = m.secondary.max(objectives.secondary);
    }

    pub fn base(&self) -> ObjectiveVector {
        let scale = |v: i64| v.saturating_mul(10).max(PENALTY_FLOOR);
        ObjectiveVector::new(scale(self.max_feasible.makespan), scale(self.max_feasible.secondary))
    }

    /// Both objectives of an infeasible individual.
    pub fn penalty(&self, solved: usize, total: usize) -> ObjectiveVector {
        debug_assert!(solved < total);
        let num = (2 * total - solved) as i64;
        let scale = |b: i64| b.saturating_mul(num) / total as i64;
        let b = self.base();
        ObjectiveVector::new(scale(b.makespan), scale(b.secondary))
    }

    /// Objectives for a result: its own when feasible, otherwise the penalty.
    pub fn fitness(&self, r: &EvaluationResult) -> ObjectiveVector {
        r.objectives.unwrap_or_else(|| self.penalty(r.solved, r.total))
    }
}
