//! Weighted-sum campaign: one single-objective run per α, merged afterwards.

use serde::{Deserialize, Serialize};

use super::engine::{derive_seed, evolve_single, EngineConfig, EngineError, ObjectiveBounds};
use super::trace::RunTrace;
use crate::assess::nondominated;
use crate::model::{GroundedTask, ObjectiveVector};
use crate::par::Execution;

pub const DEFAULT_ALPHAS: [f64; 7] = [0.0, 0.1, 0.3, 0.5, 0.7, 0.9, 1.0];

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct AggregationConfig {
    /// Sorted, distinct, within [0, 1].
    pub alphas: Vec<f64>,
    /// Derived from the α = 1 and α = 0 runs when absent.
    pub bounds: Option<ObjectiveBounds>,
}

impl Default for AggregationConfig {
    fn default() -> Self {
        AggregationConfig {
            alphas: DEFAULT_ALPHAS.to_vec(),
            bounds: None,
        }
    }
}

impl AggregationConfig {
    pub fn validate(&self) -> Result<(), EngineError> {
        if self.alphas.is_empty() {
            return Err(EngineError::Config("no alphas given".into()));
        }
        if self.alphas.iter().any(|a| !(0.0..=1.0).contains(a)) {
            return Err(EngineError::Config("alphas must lie in [0, 1]".into()));
        }
        if self.alphas.windows(2).any(|w| w[0] >= w[1]) {
            return Err(EngineError::Config("alphas must be sorted and distinct".into()));
        }
        if let Some(b) = &self.bounds {
            b.validate()?;
        }
        Ok(())
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct Campaign {
    /// Non-dominated feasible points of the union of final populations.
    pub front: Vec<ObjectiveVector>,
    pub bounds: ObjectiveBounds,
    /// One per α in config order, followed by bootstrap runs for α = 1 and
    /// α = 0 when those were needed but are not in the list.
    pub traces: Vec<RunTrace>,
}

impl Campaign {
    pub fn budget_used(&self) -> u64 {
        self.traces.iter().map(|t| t.budget_used).sum()
    }
}

/// Seed of the α-run, independent of where α sits in the list.
pub fn alpha_seed(seed: u64, alpha: f64) -> u64 {
    derive_seed(seed, u64::MAX, alpha.to_bits())
}

fn best_by(trace: &RunTrace, key: fn(&ObjectiveVector) -> (i64, i64)) -> Option<ObjectiveVector> {
    trace.final_population.iter().filter(|m| m.feasible).map(|m| m.point).min_by_key(key)
}

/// Extremes observed in the two single-objective runs: the makespan range
/// spans the best-makespan point to the best-secondary point, and vice versa.
pub fn bootstrap_bounds(makespan_run: &RunTrace, secondary_run: &RunTrace) -> Option<ObjectiveBounds> {
    let fast = best_by(makespan_run, |v| (v.makespan, v.secondary))?;
    let cheap = best_by(secondary_run, |v| (v.secondary, v.makespan))?;
    let range = |lo: i64, hi: i64| {
        let (lo, hi) = (lo.min(hi) as f64, lo.max(hi) as f64);
        [lo, if hi > lo { hi } else { lo + 1.0 }]
    };
    Some(ObjectiveBounds {
        makespan: range(fast.makespan, cheap.makespan),
        secondary: range(cheap.secondary, fast.secondary),
    })
}

/// `cfg.budget` is the budget of each α-run.
pub fn aggregate_campaign(
    task: &GroundedTask,
    cfg: &EngineConfig,
    agg: &AggregationConfig,
    seed: u64,
    exec: Execution,
) -> Result<Campaign, EngineError> {
    agg.validate()?;
    cfg.validate()?;
    let mut bootstrap: Vec<(f64, RunTrace)> = Vec::new();
    let bounds = match agg.bounds {
        Some(b) => b,
        None => {
            // unscaled objectives order correctly for α = 1 and α = 0
            for alpha in [1.0, 0.0] {
                bootstrap.push((alpha, evolve_single(task, cfg, alpha, None, alpha_seed(seed, alpha), exec)?));
            }
            bootstrap_bounds(&bootstrap[0].1, &bootstrap[1].1)
                .ok_or_else(|| EngineError::Config("bootstrap runs found no feasible plan".into()))?
        }
    };
    let mut traces = Vec::new();
    for &alpha in &agg.alphas {
        let reused = bootstrap.iter().position(|(a, _)| *a == alpha);
        let trace = match reused {
            Some(i) => bootstrap.remove(i).1,
            None => evolve_single(task, cfg, alpha, Some(bounds), alpha_seed(seed, alpha), exec)?,
        };
        traces.push(trace);
    }
    traces.extend(bootstrap.into_iter().map(|(_, t)| t));
    let finals: Vec<ObjectiveVector> = traces
        .iter()
        .take(agg.alphas.len())
        .flat_map(|t| t.final_population.iter().filter(|m| m.feasible).map(|m| m.point))
        .collect();
    Ok(Campaign {
        front: nondominated(&finals),
        bounds,
        traces,
    })
}
