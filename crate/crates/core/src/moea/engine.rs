//! Generational evolution loop shared by the Pareto and single-objective
//! engines. Only environmental selection and mating keys differ.

use std::time::Instant;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};
use thiserror::Error;

use super::ibea::{ibea_select, DEFAULT_KAPPA};
use super::trace::{ArchiveEvent, Member, RunTrace, Snapshot};
use crate::dae::{
    crossover, evaluate, init_individual, mutate, DaeContext, EvaluationResult, EvoParams, Individual,
    ParamRangeError, PenaltyTracker,
};
use crate::model::{GroundedTask, ObjectiveVector};
use crate::par::{par_map_init, Execution};
use crate::planner::Planner;

/// When a run stops. Node and evaluation budgets are never exceeded: the
/// first evaluation that would overrun them is discarded and ends the run.
/// The initial population is always evaluated in full.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Budget {
    /// Embedded-planner node evaluations.
    Nodes(u64),
    Evaluations(u64),
    /// Not reproducible; checked between generations only.
    WallClockMs(u64),
}

impl Budget {
    pub fn limit(&self) -> u64 {
        match *self {
            Budget::Nodes(n) | Budget::Evaluations(n) | Budget::WallClockMs(n) => n,
        }
    }
}

pub const DEFAULT_PER_CALL: u64 = 10_000;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct EngineConfig {
    pub params: EvoParams,
    pub budget: Budget,
    /// Planner node budget for one evaluation, split across its subproblems.
    pub per_call: u64,
    pub kappa: f64,
    pub tournament: usize,
    /// Never drop the best individual on either objective in selection.
    pub preserve_extremes: bool,
}

impl Default for EngineConfig {
    fn default() -> Self {
        EngineConfig {
            params: EvoParams::default(),
            budget: Budget::Nodes(2_000_000),
            per_call: DEFAULT_PER_CALL,
            kappa: DEFAULT_KAPPA,
            tournament: 2,
            preserve_extremes: true,
        }
    }
}

#[derive(Debug, Error, Clone, PartialEq)]
pub enum EngineError {
    #[error(transparent)]
    Param(#[from] ParamRangeError),
    #[error("invalid engine setting: {0}")]
    Config(String),
}

impl EngineConfig {
    pub fn validate(&self) -> Result<(), EngineError> {
        self.params.validate()?;
        if self.per_call == 0 {
            return Err(EngineError::Config("per-call budget must be positive".into()));
        }
        if self.tournament == 0 {
            return Err(EngineError::Config("tournament size must be positive".into()));
        }
        if !(self.kappa > 0.0 && self.kappa.is_finite()) {
            return Err(EngineError::Config(format!("kappa {} must be positive", self.kappa)));
        }
        Ok(())
    }
}

/// Per-objective normalisation ranges for scalarisation.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct ObjectiveBounds {
    pub makespan: [f64; 2],
    pub secondary: [f64; 2],
}

impl ObjectiveBounds {
    pub fn validate(&self) -> Result<(), EngineError> {
        for (name, [lo, hi]) in [("makespan", self.makespan), ("secondary", self.secondary)] {
            if !(lo < hi && lo.is_finite() && hi.is_finite()) {
                return Err(EngineError::Config(format!("{name} bounds [{lo}, {hi}] need min < max")));
            }
        }
        Ok(())
    }
}

/// `α·m̂ + (1−α)·ŝ` with each objective scaled into [0, 1] by `bounds` and
/// clamped. Without bounds the raw values are combined, which only orders
/// sensibly for α ∈ {0, 1}.
pub fn f_alpha(v: &ObjectiveVector, alpha: f64, bounds: Option<&ObjectiveBounds>) -> f64 {
    let (m, s) = (v.makespan as f64, v.secondary as f64);
    let (m, s) = match bounds {
        Some(b) => {
            let unit = |x: f64, [lo, hi]: [f64; 2]| ((x - lo) / (hi - lo)).clamp(0.0, 1.0);
            (unit(m, b.makespan), unit(s, b.secondary))
        }
        None => (m, s),
    };
    alpha * m + (1.0 - alpha) * s
}

/// Selection scheme of an engine.
#[derive(Clone, Copy, Debug, PartialEq)]
pub enum Selector {
    Pareto,
    Single { alpha: f64, bounds: Option<ObjectiveBounds> },
}

impl Selector {
    fn name(&self) -> &'static str {
        match self {
            Selector::Pareto => "pareto",
            Selector::Single { .. } => "single",
        }
    }
}

struct Scored {
    ind: Individual,
    eval: EvaluationResult,
    /// Own objectives if feasible, otherwise the penalty at creation time.
    fitness: ObjectiveVector,
    /// Mating key, lower is better.
    key: (bool, f64),
}

/// Independent stream per (run, generation, index) so parallel evaluation
/// reproduces the sequential schedule.
pub fn derive_seed(seed: u64, generation: u64, index: u64) -> u64 {
    let mut z = seed ^ generation.wrapping_mul(0x9E37_79B9_7F4A_7C15) ^ index.wrapping_mul(0xD1B5_4A32_D192_ED03);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

pub fn config_digest(task: &GroundedTask, cfg: &EngineConfig, selector: &Selector) -> String {
    let (alpha, bounds) = match selector {
        Selector::Pareto => (None, None),
        Selector::Single { alpha, bounds } => (Some(*alpha), *bounds),
    };
    let blob = serde_json::json!({
        "engine": selector.name(),
        "task": task.name,
        "config": cfg,
        "alpha": alpha,
        "bounds": bounds,
    });
    let hash = Sha256::digest(blob.to_string().as_bytes());
    hash.iter().take(8).map(|b| format!("{b:02x}")).collect()
}

struct Run<'a> {
    ctx: DaeContext<'a>,
    cfg: &'a EngineConfig,
    selector: Selector,
    seed: u64,
    exec: Execution,
    rng: ChaCha8Rng,
    tracker: PenaltyTracker,
    used: u64,
    evaluations: u64,
    archive: Vec<ObjectiveVector>,
    events: Vec<ArchiveEvent>,
    started: Instant,
}

impl Run<'_> {
    fn exhausted(&self) -> bool {
        match self.cfg.budget {
            Budget::Nodes(b) => self.used >= b,
            Budget::Evaluations(b) => self.evaluations >= b,
            Budget::WallClockMs(ms) => self.started.elapsed().as_millis() >= ms as u128,
        }
    }

    fn would_overrun(&self, nodes: u64) -> bool {
        match self.cfg.budget {
            Budget::Nodes(b) => self.used + nodes > b,
            Budget::Evaluations(b) => self.evaluations + 1 > b,
            Budget::WallClockMs(_) => false,
        }
    }

    fn evaluate_batch(&self, inds: &[Individual], generation: u64) -> Vec<EvaluationResult> {
        let jobs: Vec<(usize, &Individual)> = inds.iter().enumerate().collect();
        let task = self.ctx.task;
        par_map_init(
            self.exec,
            &jobs,
            || Planner::new(task),
            |planner, &(i, ind)| {
                evaluate(
                    ind,
                    &self.ctx,
                    planner,
                    &self.cfg.params,
                    self.cfg.per_call,
                    derive_seed(self.seed, generation, i as u64),
                )
            },
        )
    }

    fn archive_insert(&mut self, p: ObjectiveVector) {
        if self.archive.iter().any(|a| a.weakly_dominates(&p)) {
            return;
        }
        self.archive.retain(|a| !p.dominates(a));
        self.archive.push(p);
        self.archive.sort_unstable();
        self.events.push(ArchiveEvent { budget: self.used, point: p });
    }

    /// Accounts for a batch in index order; returns the scored members kept
    /// and whether the budget cut the batch short.
    fn absorb(&mut self, inds: Vec<Individual>, evals: Vec<EvaluationResult>, force: bool) -> (Vec<Scored>, bool) {
        let mut kept = Vec::new();
        let mut cut = false;
        for (ind, mut eval) in inds.into_iter().zip(evals) {
            if !force && self.would_overrun(eval.nodes) {
                cut = true;
                break;
            }
            self.used += eval.nodes;
            self.evaluations += 1;
            if let Some(p) = eval.objectives {
                self.tracker.observe(&p);
                self.archive_insert(p);
            }
            // plans are not needed past this point
            eval.plan = None;
            kept.push((ind, eval));
        }
        let scored = kept
            .into_iter()
            .map(|(ind, eval)| {
                let fitness = self.tracker.fitness(&eval);
                Scored {
                    ind,
                    eval,
                    fitness,
                    key: (false, 0.0),
                }
            })
            .collect();
        (scored, cut)
    }

    /// Environmental selection down to `out` members; also sets mating keys.
    fn select(&self, mut pool: Vec<Scored>, out: usize) -> Vec<Scored> {
        let out = out.min(pool.len());
        match self.selector {
            Selector::Pareto => {
                let (feas, infeas): (Vec<usize>, Vec<usize>) = (0..pool.len()).partition(|&i| pool[i].eval.feasible);
                let mut keep: Vec<(usize, (bool, f64))> = Vec::new();
                let mut pick = |group: &[usize], n: usize, infeasible: bool| {
                    let pts: Vec<ObjectiveVector> = group.iter().map(|&i| pool[i].fitness).collect();
                    let sel = ibea_select(&pts, self.cfg.kappa, n, self.cfg.preserve_extremes)
                        .expect("selection size within group");
                    for (k, f) in sel.kept.into_iter().zip(sel.fitness) {
                        keep.push((group[k], (infeasible, -f)));
                    }
                };
                if feas.len() >= out {
                    pick(&feas, out, false);
                } else {
                    pick(&feas, feas.len(), false);
                    pick(&infeas, out - feas.len(), true);
                }
                keep.sort_by_key(|&(i, _)| i);
                let mut slots: Vec<Option<Scored>> = pool.drain(..).map(Some).collect();
                keep.into_iter()
                    .map(|(i, key)| {
                        let mut m = slots[i].take().expect("each index kept once");
                        m.key = key;
                        m
                    })
                    .collect()
            }
            Selector::Single { alpha, bounds } => {
                for m in &mut pool {
                    m.key = if m.eval.feasible {
                        (false, f_alpha(&m.fitness, alpha, bounds.as_ref()))
                    } else {
                        (true, m.fitness.makespan as f64)
                    };
                }
                // stable: earlier members win ties
                pool.sort_by(|a, b| a.key.partial_cmp(&b.key).expect("finite keys"));
                pool.truncate(out);
                pool
            }
        }
    }

    fn tournament<'p>(&mut self, pop: &'p [Scored]) -> &'p Individual {
        let mut best = self.rng.gen_range(0..pop.len());
        for _ in 1..self.cfg.tournament {
            let c = self.rng.gen_range(0..pop.len());
            if pop[c].key.partial_cmp(&pop[best].key) == Some(std::cmp::Ordering::Less) {
                best = c;
            }
        }
        &pop[best].ind
    }

    fn snapshot(&self, generation: u64) -> Snapshot {
        Snapshot {
            budget: self.used,
            generation,
            evaluations: self.evaluations,
            archive: self.archive.clone(),
        }
    }
}

/// Runs one evolution. Results depend only on (task, config, selector, seed),
/// never on `exec`, except under a wall-clock budget.
pub fn evolve(
    task: &GroundedTask,
    cfg: &EngineConfig,
    selector: Selector,
    seed: u64,
    exec: Execution,
) -> Result<RunTrace, EngineError> {
    cfg.validate()?;
    if let Selector::Single { bounds: Some(b), .. } = &selector {
        b.validate()?;
    }
    let mut run = Run {
        ctx: DaeContext::new(task),
        cfg,
        selector,
        seed,
        exec,
        rng: ChaCha8Rng::seed_from_u64(seed),
        tracker: PenaltyTracker::default(),
        used: 0,
        evaluations: 0,
        archive: Vec::new(),
        events: Vec::new(),
        started: Instant::now(),
    };
    let mu = cfg.params.pop_size;
    let params = cfg.params;

    let initial: Vec<Individual> = (0..mu).map(|_| init_individual(&run.ctx, &params, &mut run.rng)).collect();
    let evals = run.evaluate_batch(&initial, 0);
    let (members, _) = run.absorb(initial, evals, true);
    let mut pop = run.select(members, mu);
    let mut snapshots = vec![run.snapshot(0)];

    let mut generation = 0;
    while !run.exhausted() {
        generation += 1;
        let mut offspring = Vec::with_capacity(mu);
        for _ in 0..mu {
            let p1 = run.tournament(&pop).clone();
            let mut child = if run.rng.gen_bool(params.proba_cross) {
                let p2 = run.tournament(&pop).clone();
                crossover(&p1, &p2, &params, &mut run.rng)
            } else {
                p1
            };
            if run.rng.gen_bool(params.proba_mut) {
                child = mutate(&child, &run.ctx, &params, &mut run.rng).0;
            }
            offspring.push(child);
        }
        let evals = run.evaluate_batch(&offspring, generation);
        let (children, cut) = run.absorb(offspring, evals, false);
        if children.is_empty() {
            break;
        }
        pop.extend(children);
        pop = run.select(pop, mu);
        snapshots.push(run.snapshot(generation));
        if cut {
            break;
        }
    }

    let alpha = match selector {
        Selector::Pareto => None,
        Selector::Single { alpha, .. } => Some(alpha),
    };
    Ok(RunTrace {
        engine: selector.name().to_string(),
        task: task.name.clone(),
        seed,
        config_digest: config_digest(task, cfg, &selector),
        alpha,
        archive_events: run.events,
        snapshots,
        final_population: pop
            .iter()
            .map(|m| Member {
                point: m.fitness,
                feasible: m.eval.feasible,
            })
            .collect(),
        budget_used: run.used,
        evaluations: run.evaluations,
    })
}

pub fn evolve_pareto(task: &GroundedTask, cfg: &EngineConfig, seed: u64, exec: Execution) -> Result<RunTrace, EngineError> {
    evolve(task, cfg, Selector::Pareto, seed, exec)
}

pub fn evolve_single(
    task: &GroundedTask,
    cfg: &EngineConfig,
    alpha: f64,
    bounds: Option<ObjectiveBounds>,
    seed: u64,
    exec: Execution,
) -> Result<RunTrace, EngineError> {
    if !(0.0..=1.0).contains(&alpha) {
        return Err(EngineError::Config(format!("alpha {alpha} outside [0, 1]")));
    }
    evolve(task, cfg, Selector::Single { alpha, bounds }, seed, exec)
}
