//! Divide-and-Evolve genome: a chronological sequence of partial states,
//! each solved in turn by the embedded planner.

mod analysis;
mod evaluate;
mod ops;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::model::{AtomId, GroundedTask};
pub use analysis::{h1_earliest, mutex_pairs, MutexTable};
pub use evaluate::{evaluate, EvaluationResult, PenaltyTracker, PENALTY_FLOOR};
pub use ops::{apply_mutation, crossover, init_individual, mutate, splice, MutationKind};

/// Intermediate goal: atoms required to hold together.
#[derive(Clone, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct PartialState {
    /// Sorted, non-empty, pairwise non-mutex.
    pub atoms: Vec<AtomId>,
    /// Latest earliest-time among the atoms.
    pub anchor: i64,
}

#[derive(Clone, Debug, Default, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct Individual {
    pub states: Vec<PartialState>,
}

impl Individual {
    pub fn len(&self) -> usize {
        self.states.len()
    }

    pub fn is_empty(&self) -> bool {
        self.states.is_empty()
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct EvoParams {
    pub pop_size: usize,
    pub proba_cross: f64,
    pub proba_mut: f64,
    /// Relative weight of inserting a state.
    pub w_addgoal: f64,
    /// Relative weight of removing a state.
    pub w_delgoal: f64,
    /// Relative weight of changing or adding atoms within a state.
    pub w_addatom: f64,
    /// Relative weight of removing atoms within a state.
    pub w_delatom: f64,
    pub proba_change: f64,
    pub proba_delatom: f64,
    /// Number of neighbouring earliest-times from which inserted atoms are drawn.
    pub radius: usize,
    /// Relative weight of the makespan strategy for the embedded planner.
    pub w_makespan: f64,
    /// Relative weight of the cost (or risk) strategy.
    pub w_cost: f64,
    pub max_states: usize,
    pub max_atoms: usize,
    pub crossover_retries: usize,
}

impl Default for EvoParams {
    fn default() -> Self {
        EvoParams {
            pop_size: 30,
            proba_cross: 0.5,
            proba_mut: 0.8,
            w_addgoal: 1.0,
            w_delgoal: 1.0,
            w_addatom: 1.0,
            w_delatom: 1.0,
            proba_change: 0.8,
            proba_delatom: 0.1,
            radius: 2,
            w_makespan: 1.0,
            w_cost: 1.0,
            max_states: 20,
            max_atoms: 5,
            crossover_retries: 10,
        }
    }
}

#[derive(Debug, Error, Clone, PartialEq)]
#[error("parameter {name} = {value} outside [{lo}, {hi}]")]
pub struct ParamRangeError {
    pub name: &'static str,
    pub value: f64,
    pub lo: f64,
    pub hi: f64,
}

impl EvoParams {
    pub fn validate(&self) -> Result<(), ParamRangeError> {
        let checks: [(&'static str, f64, f64, f64); 14] = [
            ("pop_size", self.pop_size as f64, 10.0, 300.0),
            ("proba_cross", self.proba_cross, 0.0, 1.0),
            ("proba_mut", self.proba_mut, 0.0, 1.0),
            ("w_addgoal", self.w_addgoal, 1.0, 10.0),
            ("w_delgoal", self.w_delgoal, 1.0, 10.0),
            ("w_addatom", self.w_addatom, 1.0, 10.0),
            ("w_delatom", self.w_delatom, 1.0, 10.0),
            ("proba_change", self.proba_change, 0.0, 1.0),
            ("proba_delatom", self.proba_delatom, 0.0, 1.0),
            ("radius", self.radius as f64, 1.0, 10.0),
            ("w_makespan", self.w_makespan, 0.0, 5.0),
            ("w_cost", self.w_cost, 0.0, 5.0),
            ("max_states", self.max_states as f64, 1.0, 1000.0),
            ("max_atoms", self.max_atoms as f64, 1.0, 1000.0),
        ];
        for (name, value, lo, hi) in checks {
            // NaN fails both comparisons
            if !(value >= lo && value <= hi) {
                return Err(ParamRangeError { name, value, lo, hi });
            }
        }
        Ok(())
    }
}

/// Per-task data shared by every genome operation.
#[derive(Clone, Debug)]
pub struct DaeContext<'a> {
    pub task: &'a GroundedTask,
    pub h1: Vec<Option<i64>>,
    pub mutex: MutexTable,
    /// Distinct finite earliest-times available as state anchors, ascending.
    pub times: Vec<i64>,
    /// Atoms grouped by earliest-time, parallel to `times`.
    pub atoms_at: Vec<Vec<AtomId>>,
}

impl<'a> DaeContext<'a> {
    pub fn new(task: &'a GroundedTask) -> Self {
        let h1 = h1_earliest(task);
        let mutex = mutex_pairs(task);
        let mut times: Vec<i64> = h1.iter().flatten().copied().collect();
        times.sort_unstable();
        times.dedup();
        // anchors at time 0 only when nothing else exists
        if times.len() > 1 {
            times.retain(|&t| t > 0);
        }
        let atoms_at = times
            .iter()
            .map(|&t| (0..task.num_atoms()).filter(|&a| h1[a] == Some(t)).collect())
            .collect();
        DaeContext {
            task,
            h1,
            mutex,
            times,
            atoms_at,
        }
    }

    /// Anchor of a non-empty atom set.
    pub fn anchor_of(&self, atoms: &[AtomId]) -> Option<i64> {
        atoms.iter().map(|&a| self.h1[a]).try_fold(0, |acc, t| t.map(|t| acc.max(t)))
    }

    /// Checks every genome invariant; `Err` names the first violation.
    pub fn check(&self, ind: &Individual, params: &EvoParams) -> Result<(), String> {
        if ind.len() > params.max_states {
            return Err(format!("{} states exceed the maximum {}", ind.len(), params.max_states));
        }
        let mut prev = i64::MIN;
        for (i, s) in ind.states.iter().enumerate() {
            if s.atoms.is_empty() {
                return Err(format!("state {i} is empty"));
            }
            if s.atoms.windows(2).any(|w| w[0] >= w[1]) {
                return Err(format!("state {i} atoms not sorted and distinct"));
            }
            for (j, &a) in s.atoms.iter().enumerate() {
                if let Some(&b) = s.atoms[j + 1..].iter().find(|&&b| self.mutex.is_mutex(a, b)) {
                    return Err(format!("state {i} holds mutex atoms {a} and {b}"));
                }
            }
            if self.anchor_of(&s.atoms) != Some(s.anchor) {
                return Err(format!("state {i} anchor {} is not its latest earliest-time", s.anchor));
            }
            if s.anchor < prev {
                return Err(format!("state {i} anchor {} precedes {prev}", s.anchor));
            }
            prev = s.anchor;
        }
        Ok(())
    }
}
