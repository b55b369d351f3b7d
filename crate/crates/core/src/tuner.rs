//! Iterated local search over discretised evolution parameters, scoring each
//! configuration by its mean hypervolume gap to a known front.

use std::collections::HashMap;

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::assess::unary_hv_diff;
use crate::dae::EvoParams;
use crate::model::GroundedTask;
use crate::moea::{derive_seed, evolve_pareto, EngineConfig, EngineError};
use crate::par::{par_map, Execution};
use crate::zeno::ParetoFront;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Param {
    PopSize,
    ProbaCross,
    ProbaMut,
    WAddgoal,
    WDelgoal,
    WAddatom,
    WDelatom,
    ProbaChange,
    ProbaDelatom,
    Radius,
    WMakespan,
    WCost,
}

impl Param {
    pub const ALL: [Param; 12] = [
        Param::PopSize,
        Param::ProbaCross,
        Param::ProbaMut,
        Param::WAddgoal,
        Param::WDelgoal,
        Param::WAddatom,
        Param::WDelatom,
        Param::ProbaChange,
        Param::ProbaDelatom,
        Param::Radius,
        Param::WMakespan,
        Param::WCost,
    ];

    pub fn get(self, p: &EvoParams) -> f64 {
        match self {
            Param::PopSize => p.pop_size as f64,
            Param::ProbaCross => p.proba_cross,
            Param::ProbaMut => p.proba_mut,
            Param::WAddgoal => p.w_addgoal,
            Param::WDelgoal => p.w_delgoal,
            Param::WAddatom => p.w_addatom,
            Param::WDelatom => p.w_delatom,
            Param::ProbaChange => p.proba_change,
            Param::ProbaDelatom => p.proba_delatom,
            Param::Radius => p.radius as f64,
            Param::WMakespan => p.w_makespan,
            Param::WCost => p.w_cost,
        }
    }

    pub fn set(self, p: &mut EvoParams, v: f64) {
        match self {
            Param::PopSize => p.pop_size = v as usize,
            Param::ProbaCross => p.proba_cross = v,
            Param::ProbaMut => p.proba_mut = v,
            Param::WAddgoal => p.w_addgoal = v,
            Param::WDelgoal => p.w_delgoal = v,
            Param::WAddatom => p.w_addatom = v,
            Param::WDelatom => p.w_delatom = v,
            Param::ProbaChange => p.proba_change = v,
            Param::ProbaDelatom => p.proba_delatom = v,
            Param::Radius => p.radius = v as usize,
            Param::WMakespan => p.w_makespan = v,
            Param::WCost => p.w_cost = v,
        }
    }

    fn default_grid(self) -> Vec<f64> {
        match self {
            Param::PopSize => vec![10.0, 30.0, 50.0, 100.0, 200.0, 300.0],
            Param::ProbaCross => vec![0.0, 0.1, 0.2, 0.5, 0.8, 1.0],
            Param::ProbaMut | Param::ProbaChange => vec![0.0, 0.2, 0.5, 0.8, 1.0],
            Param::WAddgoal | Param::WDelgoal | Param::WAddatom | Param::WDelatom => vec![1.0, 3.0, 5.0, 7.0, 10.0],
            Param::ProbaDelatom => vec![0.0, 0.1, 0.3, 0.5, 1.0],
            Param::Radius => vec![1.0, 2.0, 3.0, 5.0, 7.0, 10.0],
            Param::WMakespan | Param::WCost => vec![0.0, 1.0, 2.0, 3.0, 5.0],
        }
    }
}

#[derive(Debug, Error, Clone, PartialEq)]
pub enum TunerError {
    #[error("grid for {0:?} is empty")]
    EmptyGrid(Param),
    #[error("{0:?} listed twice")]
    Duplicate(Param),
    #[error("grid value {value} for {param:?} is out of range: {reason}")]
    OutOfRange { param: Param, value: f64, reason: String },
    #[error("tuning budget must be at least 1")]
    ZeroBudget,
    #[error("runs per evaluation must be at least 1")]
    ZeroRuns,
    #[error(transparent)]
    Engine(#[from] EngineError),
    #[error("scoring failed: {0}")]
    Score(String),
}

/// Ordered value grid per tuned parameter; untuned parameters keep the
/// base value.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ParamSpace {
    pub base: EvoParams,
    pub grids: Vec<(Param, Vec<f64>)>,
}

impl Default for ParamSpace {
    fn default() -> Self {
        ParamSpace {
            base: EvoParams::default(),
            grids: Param::ALL.iter().map(|&p| (p, p.default_grid())).collect(),
        }
    }
}

/// Index into each grid of a `ParamSpace`.
#[derive(Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct ParamConfig(pub Vec<usize>);

impl ParamSpace {
    pub fn validate(&self) -> Result<(), TunerError> {
        for (i, (param, grid)) in self.grids.iter().enumerate() {
            if grid.is_empty() {
                return Err(TunerError::EmptyGrid(*param));
            }
            if self.grids[..i].iter().any(|(p, _)| p == param) {
                return Err(TunerError::Duplicate(*param));
            }
            for &value in grid {
                let mut p = self.base;
                param.set(&mut p, value);
                if let Err(e) = p.validate() {
                    return Err(TunerError::OutOfRange {
                        param: *param,
                        value,
                        reason: e.to_string(),
                    });
                }
            }
        }
        Ok(())
    }

    pub fn params(&self, c: &ParamConfig) -> EvoParams {
        let mut p = self.base;
        for ((param, grid), &i) in self.grids.iter().zip(&c.0) {
            param.set(&mut p, grid[i]);
        }
        p
    }

    /// Grid point nearest to the base parameters.
    pub fn initial(&self) -> ParamConfig {
        ParamConfig(
            self.grids
                .iter()
                .map(|(param, grid)| {
                    let target = param.get(&self.base);
                    (0..grid.len())
                        .min_by(|&a, &b| (grid[a] - target).abs().total_cmp(&(grid[b] - target).abs()))
                        .expect("grids are non-empty")
                })
                .collect(),
        )
    }

    pub fn random<R: Rng>(&self, rng: &mut R) -> ParamConfig {
        ParamConfig(self.grids.iter().map(|(_, g)| rng.gen_range(0..g.len())).collect())
    }

    /// Configurations differing from `c` in exactly one parameter.
    pub fn neighbors(&self, c: &ParamConfig) -> Vec<ParamConfig> {
        let mut out = Vec::new();
        for (k, (_, grid)) in self.grids.iter().enumerate() {
            for v in 0..grid.len() {
                if v != c.0[k] {
                    let mut n = c.clone();
                    n.0[k] = v;
                    out.push(n);
                }
            }
        }
        out
    }

    /// Values by parameter, for reporting.
    pub fn describe(&self, c: &ParamConfig) -> Vec<(Param, f64)> {
        self.grids.iter().zip(&c.0).map(|((p, g), &i)| (*p, g[i])).collect()
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TuneResult {
    pub best: ParamConfig,
    pub best_score: f64,
    pub params: EvoParams,
    /// Every scored configuration in evaluation order.
    pub history: Vec<(ParamConfig, f64)>,
}

pub const RESTART_PROBABILITY: f64 = 0.01;
pub const PERTURBATION_MOVES: usize = 3;

struct Ils<'a, F> {
    space: &'a ParamSpace,
    score_fn: F,
    budget: usize,
    cache: HashMap<ParamConfig, f64>,
    history: Vec<(ParamConfig, f64)>,
}

impl<F: FnMut(&ParamConfig) -> Result<f64, TunerError>> Ils<'_, F> {
    /// Cached score, or `None` once the budget is spent.
    fn score(&mut self, c: &ParamConfig) -> Result<Option<f64>, TunerError> {
        if let Some(&s) = self.cache.get(c) {
            return Ok(Some(s));
        }
        if self.history.len() >= self.budget {
            return Ok(None);
        }
        let s = (self.score_fn)(c)?;
        self.cache.insert(c.clone(), s);
        self.history.push((c.clone(), s));
        Ok(Some(s))
    }

    /// First-improvement descent in random neighbour order.
    fn descend<R: Rng>(&mut self, mut cur: ParamConfig, rng: &mut R) -> Result<ParamConfig, TunerError> {
        let Some(mut cur_score) = self.score(&cur)? else { return Ok(cur) };
        'outer: loop {
            let mut ns = self.space.neighbors(&cur);
            ns.shuffle(rng);
            for n in ns {
                let Some(s) = self.score(&n)? else { return Ok(cur) };
                if s < cur_score {
                    cur = n;
                    cur_score = s;
                    continue 'outer;
                }
            }
            return Ok(cur);
        }
    }
}

/// BasicILS with a caller-supplied score (lower is better). The budget
/// counts distinct configurations scored.
pub fn tune_with<F>(space: &ParamSpace, budget: usize, seed: u64, score_fn: F) -> Result<TuneResult, TunerError>
where
    F: FnMut(&ParamConfig) -> Result<f64, TunerError>,
{
    space.validate()?;
    if budget == 0 {
        return Err(TunerError::ZeroBudget);
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut ils = Ils {
        space,
        score_fn,
        budget,
        cache: HashMap::new(),
        history: Vec::new(),
    };
    let mut cur = ils.descend(space.initial(), &mut rng)?;
    while ils.history.len() < budget {
        let start = if rng.gen_bool(RESTART_PROBABILITY) {
            space.random(&mut rng)
        } else {
            let mut c = cur.clone();
            for _ in 0..PERTURBATION_MOVES {
                let ns = space.neighbors(&c);
                if let Some(n) = ns.choose(&mut rng) {
                    c = n.clone();
                }
            }
            c
        };
        let before = ils.history.len();
        let cand = ils.descend(start, &mut rng)?;
        if let (Some(a), Some(b)) = (ils.cache.get(&cand), ils.cache.get(&cur)) {
            if a <= b {
                cur = cand;
            }
        }
        // a fully cached space cannot spend more budget
        if ils.history.len() == before && ils.cache.len() >= space_size(space) {
            break;
        }
    }
    let (best, best_score) = ils
        .history
        .iter()
        .fold(None, |acc: Option<&(ParamConfig, f64)>, h| match acc {
            Some(a) if a.1 <= h.1 => Some(a),
            _ => Some(h),
        })
        .cloned()
        .expect("at least one configuration scored");
    Ok(TuneResult {
        params: space.params(&best),
        best,
        best_score,
        history: ils.history,
    })
}

fn space_size(space: &ParamSpace) -> usize {
    space.grids.iter().map(|(_, g)| g.len()).fold(1usize, |a, b| a.saturating_mul(b))
}

/// Tunes the Pareto engine on `task`. A configuration scores the mean gap
/// between final archive and `front` over `runs_per_eval` runs, whose seeds
/// are shared by every configuration.
#[allow(clippy::too_many_arguments)]
pub fn tune(
    task: &GroundedTask,
    front: &ParetoFront,
    engine: &EngineConfig,
    space: &ParamSpace,
    runs_per_eval: usize,
    budget: usize,
    seed: u64,
    exec: Execution,
) -> Result<TuneResult, TunerError> {
    if runs_per_eval == 0 {
        return Err(TunerError::ZeroRuns);
    }
    let seeds: Vec<u64> = (0..runs_per_eval as u64).map(|r| derive_seed(seed, u64::MAX - 1, r)).collect();
    tune_with(space, budget, seed, |c| {
        let cfg = EngineConfig {
            params: space.params(c),
            ..engine.clone()
        };
        let gaps = par_map(exec, &seeds, |&s| -> Result<f64, TunerError> {
            // runs inside a configuration are the parallel unit
            let trace = evolve_pareto(task, &cfg, s, Execution::Sequential)?;
            unary_hv_diff(&trace.final_archive(), front).map_err(|e| TunerError::Score(e.to_string()))
        });
        let gaps: Vec<f64> = gaps.into_iter().collect::<Result<_, _>>()?;
        Ok(gaps.iter().sum::<f64>() / gaps.len() as f64)
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn space(grids: Vec<(Param, Vec<f64>)>) -> ParamSpace {
        ParamSpace {
            base: EvoParams::default(),
            grids,
        }
    }

    #[test]
    fn neighbourhood_sizes() {
        let s = space(vec![(Param::Radius, vec![1.0, 2.0, 3.0, 4.0, 5.0])]);
        assert_eq!(s.neighbors(&ParamConfig(vec![2])).len(), 4);
        let s = space(vec![
            (Param::Radius, vec![1.0, 2.0, 3.0]),
            (Param::ProbaCross, vec![0.0, 0.5, 1.0]),
            (Param::WCost, vec![0.0, 1.0, 2.0]),
        ]);
        assert_eq!(s.neighbors(&ParamConfig(vec![0, 1, 2])).len(), 6);
    }

    #[test]
    fn default_space_is_valid() {
        let s = ParamSpace::default();
        s.validate().unwrap();
        assert!(s.grids.iter().all(|(_, g)| (5..=8).contains(&g.len())));
        assert_eq!(s.params(&s.initial()), EvoParams::default());
    }

    #[test]
    fn rejects_out_of_range_grid() {
        let s = space(vec![(Param::Radius, vec![0.0, 2.0])]);
        assert!(matches!(s.validate(), Err(TunerError::OutOfRange { .. })));
    }

    #[test]
    fn budget_one_scores_only_the_initial_config() {
        let s = space(vec![(Param::Radius, vec![1.0, 2.0, 3.0])]);
        let r = tune_with(&s, 1, 0, |c| Ok(c.0[0] as f64)).unwrap();
        assert_eq!(r.history.len(), 1);
        assert_eq!(r.best, s.initial());
    }
}
