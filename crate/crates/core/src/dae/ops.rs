//! Initialisation and variation operators. Every operator returns a valid
//! individual: an edit that would break an invariant is abandoned and the
//! input returned unchanged.

use rand::distributions::{Distribution, WeightedIndex};
use rand::seq::{index, SliceRandom};
use rand::Rng;
use serde::{Deserialize, Serialize};

use super::{DaeContext, EvoParams, Individual, PartialState};
use crate::model::AtomId;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum MutationKind {
    AddState,
    DelState,
    AddChangeAtom,
    DelAtom,
}

impl MutationKind {
    pub const ALL: [MutationKind; 4] = [
        MutationKind::AddState,
        MutationKind::DelState,
        MutationKind::AddChangeAtom,
        MutationKind::DelAtom,
    ];
}

/// Adds up to `extra` atoms from `pool` to `atoms`, skipping duplicates and
/// atoms mutex with those already chosen.
fn fill<R: Rng>(ctx: &DaeContext, atoms: &mut Vec<AtomId>, pool: &[AtomId], extra: usize, rng: &mut R) {
    let mut added = 0;
    for _ in 0..extra * 3 {
        if added == extra {
            break;
        }
        let Some(&c) = pool.choose(rng) else { return };
        if !atoms.contains(&c) && ctx.mutex.compatible(c, atoms) {
            atoms.push(c);
            added += 1;
        }
    }
}

fn make_state(ctx: &DaeContext, mut atoms: Vec<AtomId>) -> PartialState {
    atoms.sort_unstable();
    let anchor = ctx.anchor_of(&atoms).expect("atoms have finite earliest-times");
    PartialState { atoms, anchor }
}

/// Atoms whose earliest-time is finite and at most `t`.
fn atoms_up_to(ctx: &DaeContext, t: i64) -> Vec<AtomId> {
    (0..ctx.h1.len()).filter(|&a| ctx.h1[a].is_some_and(|h| h <= t)).collect()
}

pub fn init_individual<R: Rng>(ctx: &DaeContext, params: &EvoParams, rng: &mut R) -> Individual {
    if ctx.times.is_empty() {
        return Individual::default();
    }
    let len = rng.gen_range(1..=params.max_states).min(ctx.times.len());
    let mut picks = index::sample(rng, ctx.times.len(), len).into_vec();
    picks.sort_unstable();
    let states = picks
        .into_iter()
        .map(|ti| {
            let t = ctx.times[ti];
            let first = *ctx.atoms_at[ti].choose(rng).expect("every anchor time has atoms");
            let mut atoms = vec![first];
            let k = rng.gen_range(1..=params.max_atoms);
            fill(ctx, &mut atoms, &atoms_up_to(ctx, t), k - 1, rng);
            make_state(ctx, atoms)
        })
        .collect();
    Individual { states }
}

fn monotone(states: &[PartialState]) -> bool {
    states.windows(2).all(|w| w[0].anchor <= w[1].anchor)
}

/// One-point crossover with independent cut points; only the first child is
/// kept. Falls back to a copy of `p1` after `crossover_retries` invalid draws.
pub fn crossover<R: Rng>(p1: &Individual, p2: &Individual, params: &EvoParams, rng: &mut R) -> Individual {
    for _ in 0..params.crossover_retries.max(1) {
        let c1 = rng.gen_range(0..=p1.len());
        let c2 = rng.gen_range(0..=p2.len());
        if let Some(child) = splice(p1, c1, p2, c2, params) {
            return child;
        }
    }
    p1.clone()
}

/// `p1[..c1] ++ p2[c2..]` if the result is chronological and short enough.
pub fn splice(p1: &Individual, c1: usize, p2: &Individual, c2: usize, params: &EvoParams) -> Option<Individual> {
    if c1 + (p2.len() - c2) > params.max_states {
        return None;
    }
    if c1 > 0 && c2 < p2.len() && p1.states[c1 - 1].anchor > p2.states[c2].anchor {
        return None;
    }
    let states: Vec<PartialState> = p1.states[..c1].iter().chain(&p2.states[c2..]).cloned().collect();
    debug_assert!(monotone(&states));
    Some(Individual { states })
}

/// Applies one operator drawn with the configured weights; operators that
/// need an existing state fall back to inserting one on an empty individual.
pub fn mutate<R: Rng>(ind: &Individual, ctx: &DaeContext, params: &EvoParams, rng: &mut R) -> (Individual, MutationKind) {
    let weights = [params.w_addgoal, params.w_delgoal, params.w_addatom, params.w_delatom];
    let kind = match WeightedIndex::new(weights) {
        Ok(dist) => MutationKind::ALL[dist.sample(rng)],
        Err(_) => MutationKind::AddState,
    };
    let kind = if ind.is_empty() { MutationKind::AddState } else { kind };
    (apply_mutation(kind, ind, ctx, params, rng), kind)
}

/// Anchor window `[lo, hi]` for a state at position `i`, given neighbours.
fn window(ind: &Individual, before: Option<usize>, after: Option<usize>) -> (i64, i64) {
    let lo = before.map_or(i64::MIN, |j| ind.states[j].anchor);
    let hi = after.map_or(i64::MAX, |j| ind.states[j].anchor);
    (lo, hi)
}

pub fn apply_mutation<R: Rng>(
    kind: MutationKind,
    ind: &Individual,
    ctx: &DaeContext,
    params: &EvoParams,
    rng: &mut R,
) -> Individual {
    let mut out = ind.clone();
    match kind {
        MutationKind::AddState => {
            if ind.len() >= params.max_states {
                return out;
            }
            let pos = rng.gen_range(0..=ind.len());
            let (lo, hi) = window(ind, pos.checked_sub(1), (pos < ind.len()).then_some(pos));
            let slots: Vec<usize> = (0..ctx.times.len())
                .filter(|&i| ctx.times[i] >= lo && ctx.times[i] <= hi)
                .collect();
            let Some(&centre) = slots.choose(rng) else { return out };
            let c = ctx.times[centre];
            let mut near = slots.clone();
            near.sort_by_key(|&i| ((ctx.times[i] - c).abs(), ctx.times[i]));
            near.truncate(params.radius.max(1));
            let pool: Vec<AtomId> = near.iter().flat_map(|&i| ctx.atoms_at[i].iter().copied()).collect();
            let mut atoms = Vec::new();
            fill(ctx, &mut atoms, &pool, rng.gen_range(1..=params.max_atoms), rng);
            if atoms.is_empty() {
                return out;
            }
            out.states.insert(pos, make_state(ctx, atoms));
        }
        MutationKind::DelState => {
            if ind.is_empty() {
                return out;
            }
            out.states.remove(rng.gen_range(0..ind.len()));
        }
        MutationKind::AddChangeAtom => {
            if ind.is_empty() {
                return out;
            }
            let j = rng.gen_range(0..ind.len());
            let (lo, hi) = window(ind, j.checked_sub(1), (j + 1 < ind.len()).then_some(j + 1));
            let pool = atoms_up_to(ctx, hi);
            let mut atoms = ind.states[j].atoms.clone();
            for k in 0..atoms.len() {
                if !rng.gen_bool(params.proba_change) {
                    continue;
                }
                let others: Vec<AtomId> = atoms.iter().enumerate().filter(|&(i, _)| i != k).map(|(_, &a)| a).collect();
                let fits = |c: &AtomId| !atoms.contains(c) && ctx.mutex.compatible(*c, &others);
                if let Some(&c) = pool.iter().filter(|c| fits(c)).collect::<Vec<_>>().choose(rng) {
                    atoms[k] = *c;
                }
            }
            if atoms.len() < params.max_atoms && rng.gen_bool(params.proba_change) {
                fill(ctx, &mut atoms, &pool, 1, rng);
            }
            let state = make_state(ctx, atoms);
            if state.anchor < lo {
                return out;
            }
            out.states[j] = state;
        }
        MutationKind::DelAtom => {
            if ind.is_empty() {
                return out;
            }
            let j = rng.gen_range(0..ind.len());
            let (lo, _) = window(ind, j.checked_sub(1), None);
            let old = &ind.states[j].atoms;
            let mut atoms: Vec<AtomId> = old.iter().copied().filter(|_| !rng.gen_bool(params.proba_delatom)).collect();
            if atoms.is_empty() {
                atoms.push(*old.choose(rng).expect("states are non-empty"));
            }
            let state = make_state(ctx, atoms);
            if state.anchor < lo {
                return out;
            }
            out.states[j] = state;
        }
    }
    out
}
