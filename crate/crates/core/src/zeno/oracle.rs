//! Exact bi-objective front of a MultiZeno instance.
//!
//! Every valid plan can be shifted left until each flight starts as soon as
//! its plane and passenger are both free; ordering such a plan's flights by
//! start time gives a canonical sequence in which each start is at least the
//! previous one. The search enumerates exactly these sequences. The current
//! start time is the clock, and everything else is stored relative to it:
//!
//! * a plane is (city, time until free), or stale if it became free before
//!   the clock; a stale plane can only leave when a fresh passenger arrives;
//! * a passenger not at the goal is either past (arrived before the clock,
//!   counted per city) or fresh (arrives at or after the clock).
//!
//! Passengers and planes are interchangeable, so the state is a multiset.
//! Labels are (clock, secondary) and are settled in lexicographic order, so a
//! settled label can only be dominated at its own state by an earlier one.

use std::cmp::Reverse;
use std::collections::BinaryHeap;

use rustc_hash::FxHashMap;
use serde::{Deserialize, Serialize};

use super::{fly_carry_name, fly_empty_name, ZenoConfig, ZenoError};
use crate::model::{GroundedTask, ObjectiveMode, ObjectiveVector, PlanStep};

const MAX_PLANES: usize = 4;
const MAX_FRESH: usize = 2 * MAX_PLANES;
const MAX_CITIES: usize = 15;
const STALE: u8 = 15;
const EMPTY: u8 = 0xFF;
const MAX_DURATION: i64 = 14;

/// Non-dominated objective vectors, ascending makespan and strictly
/// descending secondary.
#[derive(Clone, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(transparent)]
pub struct ParetoFront {
    pub points: Vec<ObjectiveVector>,
}

impl ParetoFront {
    /// Filters `points` down to their non-dominated subset.
    pub fn from_points(points: impl IntoIterator<Item = ObjectiveVector>) -> Self {
        ParetoFront {
            points: crate::assess::nondominated(&points.into_iter().collect::<Vec<_>>()),
        }
    }

    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    pub fn contains(&self, v: &ObjectiveVector) -> bool {
        self.points.binary_search_by_key(&v.makespan, |p| p.makespan).is_ok_and(|i| self.points[i] == *v)
    }
}

/// One flight with real identities (1-based plane and person numbers).
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Leg {
    pub start: i64,
    pub plane: usize,
    pub passenger: Option<usize>,
    pub from: usize,
    pub to: usize,
}

#[derive(Clone, Copy, PartialEq, Eq, Hash)]
struct Node {
    /// `city << 4 | rel`, ascending, unused slots `EMPTY`.
    planes: [u8; MAX_PLANES],
    /// Fresh passengers as `city << 4 | rel`, ascending, unused slots `EMPTY`.
    fresh: [u8; MAX_FRESH],
    /// Past passengers per city; the goal city is always zero.
    past: [u8; MAX_CITIES],
}

const CARRY_NONE: u8 = 0xFF;
const CARRY_PAST: u8 = 0xFE;

#[derive(Clone, Copy)]
struct Label {
    node: Node,
    clock: i64,
    parent: u32,
    plane: u8,
    to: u8,
    carry: u8,
}

struct Search<'a> {
    cfg: &'a ZenoConfig,
    adj: Vec<Vec<(usize, i64)>>,
    goal: usize,
    time_to_goal: Vec<i64>,
    secondary_to_goal: Vec<i64>,
    bound: i64,
}

impl Search<'_> {
    fn combine(&self, acc: i64, add: i64) -> i64 {
        match self.cfg.mode {
            ObjectiveMode::CostSum => acc + add,
            ObjectiveMode::RiskMax => acc.max(add),
        }
    }

    /// Lower bounds on the final (makespan, secondary) of any completion.
    fn lower_bound(&self, n: &Node, clock: i64, sec: i64) -> (i64, i64) {
        let mut m = 0i64;
        for &p in n.planes.iter().take_while(|&&p| p != EMPTY) {
            if p & 15 != STALE {
                m = m.max((p & 15) as i64);
            }
        }
        let mut s = sec;
        for &f in n.fresh.iter().take_while(|&&f| f != EMPTY) {
            let c = (f >> 4) as usize;
            m = m.max((f & 15) as i64 + self.time_to_goal[c]);
            s = self.combine(s, self.secondary_to_goal[c]);
        }
        for (c, &k) in n.past.iter().enumerate() {
            if k > 0 {
                m = m.max(self.time_to_goal[c]);
                for _ in 0..k {
                    s = self.combine(s, self.secondary_to_goal[c]);
                }
            }
        }
        (clock + m, s)
    }

    fn is_goal(n: &Node) -> bool {
        n.fresh[0] == EMPTY && n.past.iter().all(|&k| k == 0)
    }

    fn makespan(n: &Node, clock: i64) -> i64 {
        let rel = n
            .planes
            .iter()
            .take_while(|&&p| p != EMPTY)
            .filter(|&&p| p & 15 != STALE)
            .map(|&p| (p & 15) as i64)
            .max()
            .unwrap_or(0);
        clock + rel
    }

    /// Successor after plane slot `i` flies to `to`; `carry` selects the
    /// passenger. Returns the new node and the start offset from the clock.
    fn step(&self, n: &Node, i: usize, to: usize, dur: i64, carry: u8) -> (Node, i64) {
        let key = n.planes[i];
        let (pos, rel) = ((key >> 4) as usize, key & 15);
        let start = match carry {
            CARRY_NONE | CARRY_PAST => rel as i64,
            f if rel == STALE => (f & 15) as i64,
            f => rel.max(f & 15) as i64,
        };
        let mut out = Node {
            planes: [EMPTY; MAX_PLANES],
            fresh: [EMPTY; MAX_FRESH],
            past: n.past,
        };
        let mut np = 0;
        for (j, &p) in n.planes.iter().enumerate().take_while(|(_, &p)| p != EMPTY) {
            let shifted = if j == i {
                ((to as u8) << 4) | dur as u8
            } else {
                let r = p & 15;
                let r = if r == STALE || (r as i64) < start { STALE } else { r - start as u8 };
                (p & 0xF0) | r
            };
            out.planes[np] = shifted;
            np += 1;
        }
        out.planes[..np].sort_unstable();
        if carry == CARRY_PAST {
            out.past[pos] -= 1;
        }
        let mut nf = 0;
        let mut removed = carry == CARRY_NONE || carry == CARRY_PAST;
        for &f in n.fresh.iter().take_while(|&&f| f != EMPTY) {
            if !removed && f == carry {
                removed = true;
                continue;
            }
            let r = (f & 15) as i64 - start;
            if r < 0 {
                out.past[(f >> 4) as usize] += 1;
            } else {
                out.fresh[nf] = (f & 0xF0) | r as u8;
                nf += 1;
            }
        }
        if carry != CARRY_NONE && to != self.goal {
            out.fresh[nf] = ((to as u8) << 4) | dur as u8;
            nf += 1;
        }
        out.fresh[..nf].sort_unstable();
        (out, start)
    }
}

/// Exact Pareto front of plans whose makespan is at most `bound`.
pub fn exact_front(cfg: &ZenoConfig, bound: i64) -> Result<ParetoFront, ZenoError> {
    Ok(ParetoFront {
        points: exact_front_with_plans(cfg, bound)?.into_iter().map(|(v, _)| v).collect(),
    })
}

/// Front points with one witnessing plan each, ascending makespan.
pub fn exact_front_with_plans(cfg: &ZenoConfig, bound: i64) -> Result<Vec<(ObjectiveVector, Vec<Leg>)>, ZenoError> {
    cfg.validate()?;
    if cfg.planes > MAX_PLANES {
        return Err(ZenoError::Capacity(format!("at most {MAX_PLANES} planes")));
    }
    if cfg.cities > MAX_CITIES {
        return Err(ZenoError::Capacity(format!("at most {MAX_CITIES} cities")));
    }
    if cfg.edges.iter().any(|e| e.duration > MAX_DURATION) {
        return Err(ZenoError::Capacity(format!("flight durations at most {MAX_DURATION}")));
    }
    if cfg.passengers > u8::MAX as usize {
        return Err(ZenoError::Capacity("at most 255 passengers".into()));
    }
    let adj = cfg.neighbours();
    let goal = cfg.goal_city();
    let search = Search {
        cfg,
        time_to_goal: distances(&adj, goal, |_, d, acc| acc + d),
        secondary_to_goal: distances(&adj, goal, |v, _, acc| match cfg.mode {
            ObjectiveMode::CostSum => acc + cfg.secondary_of(v),
            ObjectiveMode::RiskMax => acc.max(cfg.secondary_of(v)),
        }),
        adj,
        goal,
        bound,
    };

    let mut root = Node {
        planes: [EMPTY; MAX_PLANES],
        fresh: [EMPTY; MAX_FRESH],
        past: [0; MAX_CITIES],
    };
    for p in root.planes.iter_mut().take(cfg.planes) {
        *p = 0;
    }
    if goal != 0 {
        root.past[0] = cfg.passengers as u8;
    }
    let mut arena = vec![Label {
        node: root,
        clock: 0,
        parent: u32::MAX,
        plane: 0,
        to: 0,
        carry: CARRY_NONE,
    }];
    // (vector, arena index of the goal label)
    let mut goals: Vec<(ObjectiveVector, u32)> = Vec::new();
    if Search::is_goal(&root) {
        goals.push((ObjectiveVector::new(0, 0), 0));
    }
    let mut settled: FxHashMap<Node, i64> = FxHashMap::default();
    let mut heap = BinaryHeap::new();
    if goals.is_empty() {
        heap.push(Reverse((0i64, 0i64, 0u32)));
    }
    let mut pruned_by_bound: Option<i64> = None;

    let dominated_by_goal = |goals: &[(ObjectiveVector, u32)], m: i64, s: i64| {
        goals.iter().any(|(g, _)| g.makespan <= m && g.secondary <= s)
    };

    while let Some(Reverse((clock, sec, idx))) = heap.pop() {
        let label = arena[idx as usize];
        let node = label.node;
        match settled.get(&node) {
            Some(&best) if best <= sec => continue,
            _ => {}
        }
        settled.insert(node, sec);
        let (lbm, lbs) = search.lower_bound(&node, clock, sec);
        if dominated_by_goal(&goals, lbm, lbs) {
            continue;
        }
        let planes = node.planes.iter().take_while(|&&p| p != EMPTY).count();
        for i in 0..planes {
            if i > 0 && node.planes[i] == node.planes[i - 1] {
                continue;
            }
            let key = node.planes[i];
            let (pos, stale) = ((key >> 4) as usize, key & 15 == STALE);
            let mut carries: Vec<u8> = Vec::with_capacity(MAX_FRESH + 2);
            if !stale {
                carries.push(CARRY_NONE);
            }
            if pos != search.goal {
                if !stale && node.past[pos] > 0 {
                    carries.push(CARRY_PAST);
                }
                let mut last = EMPTY;
                for &f in node.fresh.iter().take_while(|&&f| f != EMPTY) {
                    if (f >> 4) as usize == pos && f != last {
                        carries.push(f);
                        last = f;
                    }
                }
            }
            for &(to, dur) in &search.adj[pos] {
                for &carry in &carries {
                    let (child, offset) = search.step(&node, i, to, dur, carry);
                    let c2 = clock + offset;
                    let s2 = search.combine(sec, search.cfg.secondary_of(to));
                    let new_label = Label {
                        node: child,
                        clock: c2,
                        parent: idx,
                        plane: key,
                        to: to as u8,
                        carry,
                    };
                    if Search::is_goal(&child) {
                        let v = ObjectiveVector::new(Search::makespan(&child, c2), s2);
                        if v.makespan > search.bound {
                            let b = pruned_by_bound.get_or_insert(s2);
                            *b = (*b).min(s2);
                            continue;
                        }
                        if !dominated_by_goal(&goals, v.makespan, v.secondary) {
                            arena.push(new_label);
                            goals.retain(|(g, _)| !v.weakly_dominates(g));
                            goals.push((v, (arena.len() - 1) as u32));
                        }
                        continue;
                    }
                    if matches!(settled.get(&child), Some(&best) if best <= s2) {
                        continue;
                    }
                    let (m, s) = search.lower_bound(&child, c2, s2);
                    if dominated_by_goal(&goals, m, s) {
                        continue;
                    }
                    if m > search.bound {
                        let b = pruned_by_bound.get_or_insert(s);
                        *b = (*b).min(s);
                        continue;
                    }
                    arena.push(new_label);
                    heap.push(Reverse((c2, s2, (arena.len() - 1) as u32)));
                }
            }
        }
    }

    goals.sort_by_key(|(v, _)| *v);
    if let Some(b) = pruned_by_bound {
        let min_sec = goals.iter().map(|(v, _)| v.secondary).min();
        if min_sec.is_none_or(|s| b < s) {
            return Err(ZenoError::BoundTooSmall { bound });
        }
    }
    Ok(goals
        .into_iter()
        .map(|(v, idx)| (v, replay(cfg, &arena, idx)))
        .collect())
}

/// Shortest `combine`-distance from every city to `goal` over the adjacency;
/// `combine(v, duration, acc)` extends a path entering `v`.
fn distances(adj: &[Vec<(usize, i64)>], goal: usize, combine: impl Fn(usize, i64, i64) -> i64) -> Vec<i64> {
    let mut dist = vec![i64::MAX; adj.len()];
    dist[goal] = 0;
    loop {
        let mut changed = false;
        for u in 0..adj.len() {
            for &(v, d) in &adj[u] {
                if dist[v] != i64::MAX {
                    let cand = combine(v, d, dist[v]);
                    if cand < dist[u] {
                        dist[u] = cand;
                        changed = true;
                    }
                }
            }
        }
        if !changed {
            return dist;
        }
    }
}

/// Reassigns real plane and passenger identities along a label path.
fn replay(cfg: &ZenoConfig, arena: &[Label], idx: u32) -> Vec<Leg> {
    let mut path = Vec::new();
    let mut cur = idx;
    while cur != 0 {
        path.push(cur);
        cur = arena[cur as usize].parent;
    }
    path.reverse();
    let adj = cfg.neighbours();
    let mut plane_pos = vec![0usize; cfg.planes];
    let mut plane_ready = vec![0i64; cfg.planes];
    let mut person_pos = vec![0usize; cfg.passengers];
    let mut person_avail = vec![i64::MIN; cfg.passengers];
    let mut clock = 0i64;
    let mut legs = Vec::with_capacity(path.len());
    for &li in &path {
        let l = arena[li as usize];
        let rel_key = |pos: usize, t: i64| -> u8 {
            let r = if t < clock { STALE } else { (t - clock) as u8 };
            ((pos as u8) << 4) | r
        };
        let plane = (0..cfg.planes)
            .find(|&a| rel_key(plane_pos[a], plane_ready[a]) == l.plane)
            .expect("label path matches a real plane");
        let from = plane_pos[plane];
        let to = l.to as usize;
        let passenger = match l.carry {
            CARRY_NONE => None,
            CARRY_PAST => (0..cfg.passengers).find(|&p| person_pos[p] == from && person_avail[p] < clock),
            f => (0..cfg.passengers).find(|&p| {
                person_pos[p] == from && person_avail[p] >= clock && rel_key(from, person_avail[p]) == f
            }),
        };
        let avail = passenger.map_or(i64::MIN, |p| person_avail[p]);
        let start = plane_ready[plane].max(avail);
        debug_assert_eq!(start, l.clock);
        let dur = adj[from].iter().find(|&&(v, _)| v == to).expect("route exists").1;
        plane_pos[plane] = to;
        plane_ready[plane] = start + dur;
        if let Some(p) = passenger {
            person_pos[p] = to;
            person_avail[p] = start + dur;
        }
        clock = start;
        legs.push(Leg {
            start,
            plane: plane + 1,
            passenger: passenger.map(|p| p + 1),
            from,
            to,
        });
    }
    legs
}

/// Maps legs onto the grounded task's actions.
pub fn realize_plan(task: &GroundedTask, legs: &[Leg]) -> Option<Vec<PlanStep>> {
    legs.iter()
        .map(|l| {
            let name = match l.passenger {
                Some(p) => fly_carry_name(l.plane, p, l.from, l.to),
                None => fly_empty_name(l.plane, l.from, l.to),
            };
            task.action_id(&name).map(|action| PlanStep { start: l.start, action })
        })
        .collect()
}
