//! Test-only oracles, written without reference to the library internals,
//! and shared fixtures.
#![allow(dead_code)]

use std::collections::HashMap;

use modae::model::{GroundedTask, ObjectiveMode, PlanStep};
use modae::zeno::{build_task, default_config, fly_carry_name, fly_empty_name, Variant};

/// Lin route table: (city, city, duration).
pub const LIN_EDGES: [(u8, u8, u8); 9] = [(0, 1, 2), (0, 2, 4), (0, 3, 6), (1, 2, 3), (1, 3, 5), (2, 3, 3), (1, 4, 2), (2, 4, 4), (3, 4, 6)];
/// Landing cost (equal to landing risk) per city; only central cities charge.
pub const LIN_LANDING: [i64; 5] = [0, 30, 20, 10, 0];
const PLANES: usize = 2;
const GOAL: u8 = 4;
const IN_FLIGHT: u8 = 100;

#[derive(Clone, Copy, PartialEq, Eq, Hash)]
struct Plane {
    /// Current city, or destination while flying.
    at: u8,
    /// Ticks until landing; 0 when idle.
    left: u8,
    /// 1-based passenger on board, 0 if empty.
    cargo: u8,
}

#[derive(Clone, PartialEq, Eq, Hash)]
struct Config {
    planes: [Plane; PLANES],
    /// City per passenger, or `IN_FLIGHT`.
    people: Vec<u8>,
}

fn neighbours(city: u8) -> impl Iterator<Item = (u8, u8)> {
    LIN_EDGES.iter().filter_map(move |&(a, b, d)| {
        if a == city {
            Some((b, d))
        } else if b == city {
            Some((a, d))
        } else {
            None
        }
    })
}

/// Every joint choice of idle planes: wait, fly empty, or fly with one
/// passenger standing in the same city. Passengers board one plane at most.
fn launches(c: &Config, risk_mode: bool, acc: i64) -> Vec<(Config, i64)> {
    let mut out = vec![(c.clone(), acc)];
    for p in 0..PLANES {
        if c.planes[p].left > 0 {
            continue;
        }
        let mut next = Vec::new();
        for (cfg, acc) in out {
            next.push((cfg.clone(), acc));
            let here = cfg.planes[p].at;
            for (to, d) in neighbours(here) {
                let land = LIN_LANDING[to as usize];
                let acc = if risk_mode { acc.max(land) } else { acc + land };
                let mut empty = cfg.clone();
                empty.planes[p] = Plane { at: to, left: d, cargo: 0 };
                next.push((empty, acc));
                for who in 0..cfg.people.len() {
                    if cfg.people[who] == here {
                        let mut carry = cfg.clone();
                        carry.planes[p] = Plane { at: to, left: d, cargo: who as u8 + 1 };
                        carry.people[who] = IN_FLIGHT;
                        next.push((carry, acc));
                    }
                }
            }
        }
        out = next;
    }
    out
}

fn tick(mut c: Config) -> Config {
    for p in c.planes.iter_mut() {
        if p.left > 0 {
            p.left -= 1;
            if p.left == 0 && p.cargo > 0 {
                c.people[p.cargo as usize - 1] = p.at;
                p.cargo = 0;
            }
        }
    }
    c
}

/// Exact Pareto front of the Lin instance by unit-time simulation of every
/// joint schedule, with no symmetry reduction. Configurations reached at the
/// same tick keep only their least secondary value, which is sound because
/// the secondary never decreases. Goal configurations are not extended.
pub fn brute_front(passengers: usize, risk_mode: bool, horizon: u8) -> Vec<(i64, i64)> {
    let start = Config {
        planes: [Plane { at: 0, left: 0, cargo: 0 }; PLANES],
        people: vec![0; passengers],
    };
    let mut layer: HashMap<Config, i64> = HashMap::from([(start, 0)]);
    let mut best_at: Vec<(i64, i64)> = Vec::new();
    if passengers == 0 {
        return vec![(0, 0)];
    }
    for t in 1..=horizon as i64 {
        let mut next: HashMap<Config, i64> = HashMap::new();
        let mut goal_best: Option<i64> = None;
        for (c, &acc) in &layer {
            for (launched, acc) in launches(c, risk_mode, acc) {
                let after = tick(launched);
                let done = after.people.iter().all(|&p| p == GOAL) && after.planes.iter().all(|p| p.left == 0);
                if done {
                    goal_best = Some(goal_best.map_or(acc, |g: i64| g.min(acc)));
                    continue;
                }
                let slot = next.entry(after).or_insert(i64::MAX);
                *slot = (*slot).min(acc);
            }
        }
        if let Some(g) = goal_best {
            best_at.push((t, g));
        }
        layer = next;
    }
    let mut front: Vec<(i64, i64)> = Vec::new();
    for (t, s) in best_at {
        if front.last().is_none_or(|&(_, prev)| s < prev) {
            front.push((t, s));
        }
    }
    front
}

/// Reference Wilcoxon signed-rank p-value by full enumeration of sign
/// assignments over the doubled average ranks (no zero differences).
pub fn wilcoxon_enumerated(a: &[f64], b: &[f64]) -> f64 {
    let d: Vec<f64> = a.iter().zip(b).map(|(x, y)| x - y).filter(|d| *d != 0.0).collect();
    let n = d.len();
    if n == 0 {
        return 1.0;
    }
    let mut ranks2 = vec![0u64; n];
    for i in 0..n {
        let less = d.iter().filter(|x| x.abs() < d[i].abs()).count() as u64;
        let equal = d.iter().filter(|x| x.abs() == d[i].abs()).count() as u64;
        // average of ranks less+1 ..= less+equal, doubled
        ranks2[i] = 2 * less + equal + 1;
    }
    let total: u64 = ranks2.iter().sum();
    let w_plus: u64 = (0..n).filter(|&i| d[i] > 0.0).map(|i| ranks2[i]).sum();
    let observed = w_plus.min(total - w_plus);
    let mut extreme = 0u64;
    for mask in 0u64..(1 << n) {
        let w: u64 = (0..n).filter(|&i| mask >> i & 1 == 1).map(|i| ranks2[i]).sum();
        if w.min(total - w) <= observed {
            extreme += 1;
        }
    }
    extreme as f64 / (1u64 << n) as f64
}

/// The two-plane exchange schedule through city1: both planes ferry a
/// passenger there, one drops its passenger and fetches the third.
pub fn exchange_plan(mode: ObjectiveMode) -> (GroundedTask, Vec<PlanStep>) {
    let task = build_task(&default_config(Variant::Lin, 3, mode)).unwrap();
    let id = |name: String| task.action_id(&name).unwrap_or_else(|| panic!("missing {name}"));
    let steps = vec![
        PlanStep { start: 0, action: id(fly_carry_name(1, 1, 0, 1)) },
        PlanStep { start: 0, action: id(fly_carry_name(2, 2, 0, 1)) },
        PlanStep { start: 2, action: id(fly_carry_name(1, 1, 1, 4)) },
        PlanStep { start: 2, action: id(fly_empty_name(2, 1, 0)) },
        PlanStep { start: 4, action: id(fly_empty_name(1, 4, 1)) },
        PlanStep { start: 4, action: id(fly_carry_name(2, 3, 0, 1)) },
        PlanStep { start: 6, action: id(fly_carry_name(1, 3, 1, 4)) },
        PlanStep { start: 6, action: id(fly_carry_name(2, 2, 1, 4)) },
    ];
    (task, steps)
}
