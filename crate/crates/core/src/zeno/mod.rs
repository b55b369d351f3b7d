//! MultiZeno benchmark: configurable instance generator and exact oracle.
//!
//! Planes shuttle passengers from city 0 to the last city; each plane carries
//! at most one passenger per flight and boarding takes no time. Only central
//! cities charge a landing cost and risk.

mod oracle;

use std::collections::{BTreeMap, VecDeque};
use std::fmt::{self, Write as _};
use std::str::FromStr;

use rand::seq::SliceRandom;
use rand::Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::model::{ActionId, GroundedTask, ObjectiveMode};
pub use oracle::{exact_front, exact_front_with_plans, realize_plan, Leg, ParetoFront};

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum ZenoError {
    #[error("invalid configuration: {0}")]
    InvalidConfig(String),
    #[error("makespan bound {bound} is too small: the front may continue beyond it")]
    BoundTooSmall { bound: i64 },
    #[error("instance exceeds oracle capacity: {0}")]
    Capacity(String),
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Variant {
    Lin,
    Cvx,
    Ccve,
    Custom,
}

impl fmt::Display for Variant {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Variant::Lin => "lin",
            Variant::Cvx => "cvx",
            Variant::Ccve => "ccve",
            Variant::Custom => "custom",
        })
    }
}

impl FromStr for Variant {
    type Err = ZenoError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.to_ascii_lowercase().as_str() {
            "lin" => Ok(Variant::Lin),
            "cvx" => Ok(Variant::Cvx),
            "ccve" => Ok(Variant::Ccve),
            "custom" => Ok(Variant::Custom),
            other => Err(ZenoError::InvalidConfig(format!("unknown variant '{other}'"))),
        }
    }
}

/// Undirected route; flights take the same time both ways.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Edge {
    pub a: usize,
    pub b: usize,
    pub duration: i64,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct ZenoConfig {
    pub variant: Variant,
    pub passengers: usize,
    pub planes: usize,
    /// Cities are `city0..city{cities-1}`; passengers start at the first and
    /// must reach the last.
    pub cities: usize,
    pub edges: Vec<Edge>,
    /// Landing cost per central city; absent cities cost nothing.
    pub central_costs: BTreeMap<usize, i64>,
    pub central_risks: BTreeMap<usize, i64>,
    pub mode: ObjectiveMode,
}

/// Edge order: city0 to each central city, the three inter-central routes,
/// then each central city to the goal.
const TOPOLOGY: [(usize, usize); 9] = [(0, 1), (0, 2), (0, 3), (1, 2), (1, 3), (2, 3), (1, 4), (2, 4), (3, 4)];

pub fn default_config(variant: Variant, passengers: usize, mode: ObjectiveMode) -> ZenoConfig {
    let durations: [i64; 9] = match variant {
        Variant::Ccve => [2, 3, 4, 1, 2, 1, 2, 3, 4],
        _ => [2, 4, 6, 3, 5, 3, 2, 4, 6],
    };
    let costs: [i64; 3] = match variant {
        Variant::Cvx => [30, 11, 10],
        Variant::Ccve => [30, 29, 10],
        _ => [30, 20, 10],
    };
    let central: BTreeMap<usize, i64> = costs.iter().enumerate().map(|(i, &c)| (i + 1, c)).collect();
    ZenoConfig {
        variant,
        passengers,
        planes: 2,
        cities: 5,
        edges: TOPOLOGY
            .iter()
            .zip(durations)
            .map(|(&(a, b), duration)| Edge { a, b, duration })
            .collect(),
        central_costs: central.clone(),
        central_risks: central,
        mode,
    }
}

impl ZenoConfig {
    pub fn goal_city(&self) -> usize {
        self.cities - 1
    }

    pub fn cost_of(&self, city: usize) -> i64 {
        self.central_costs.get(&city).copied().unwrap_or(0)
    }

    pub fn risk_of(&self, city: usize) -> i64 {
        self.central_risks.get(&city).copied().unwrap_or(0)
    }

    /// Landing contribution to the secondary objective.
    pub fn secondary_of(&self, city: usize) -> i64 {
        match self.mode {
            ObjectiveMode::CostSum => self.cost_of(city),
            ObjectiveMode::RiskMax => self.risk_of(city),
        }
    }

    pub fn name(&self) -> String {
        let mode = match self.mode {
            ObjectiveMode::CostSum => "cost",
            ObjectiveMode::RiskMax => "risk",
        };
        format!("multizeno{}-{}-{}", self.passengers, self.variant, mode)
    }

    pub fn with_mode(&self, mode: ObjectiveMode) -> Self {
        ZenoConfig { mode, ..self.clone() }
    }

    /// Adjacency with durations, neighbours in ascending city order.
    pub fn neighbours(&self) -> Vec<Vec<(usize, i64)>> {
        let mut adj = vec![Vec::new(); self.cities];
        for e in &self.edges {
            adj[e.a].push((e.b, e.duration));
            adj[e.b].push((e.a, e.duration));
        }
        for n in &mut adj {
            n.sort_unstable();
        }
        adj
    }

    pub fn validate(&self) -> Result<(), ZenoError> {
        let bad = |m: String| Err(ZenoError::InvalidConfig(m));
        if self.cities < 2 {
            return bad("at least two cities are required".into());
        }
        if self.planes == 0 {
            return bad("at least one plane is required".into());
        }
        for e in &self.edges {
            if e.a >= self.cities || e.b >= self.cities || e.a == e.b {
                return bad(format!("edge {}-{} is not between two distinct cities", e.a, e.b));
            }
            if e.duration <= 0 {
                return bad(format!("edge {}-{} has non-positive duration", e.a, e.b));
            }
        }
        let mut pairs: Vec<(usize, usize)> = self.edges.iter().map(|e| (e.a.min(e.b), e.a.max(e.b))).collect();
        pairs.sort_unstable();
        if pairs.windows(2).any(|w| w[0] == w[1]) {
            return bad("duplicate edge".into());
        }
        for (name, map) in [("cost", &self.central_costs), ("risk", &self.central_risks)] {
            for (&c, &v) in map {
                if c == 0 || c >= self.goal_city() {
                    return bad(format!("{name} attached to non-central city{c}"));
                }
                if v <= 0 {
                    return bad(format!("city{c} {name} must be positive"));
                }
            }
        }
        let adj = self.neighbours();
        let mut seen = vec![false; self.cities];
        let mut queue = VecDeque::from([0]);
        seen[0] = true;
        while let Some(u) = queue.pop_front() {
            for &(v, _) in &adj[u] {
                if !seen[v] {
                    seen[v] = true;
                    queue.push_back(v);
                }
            }
        }
        if !seen[self.goal_city()] {
            return bad("goal city unreachable from city0".into());
        }
        Ok(())
    }
}

/// PDDL domain and problem text for an instance.
pub fn generate(cfg: &ZenoConfig) -> Result<(String, String), ZenoError> {
    cfg.validate()?;
    let domain = "\
(define (domain multizeno)
  (:requirements :typing :durative-actions :action-costs)
  (:types person plane - locatable
          locatable city - object)
  (:predicates (at ?x - locatable ?c - city)
               (in ?p - person ?a - plane)
               (route ?from ?to - city))
  (:functions (flight-time ?from ?to - city)
              (landing-cost ?c - city)
              (landing-risk ?c - city)
              (total-cost)
              (total-risk) - number)
  (:durative-action fly-empty
    :parameters (?a - plane ?from ?to - city)
    :duration (= ?duration (flight-time ?from ?to))
    :condition (and (at start (route ?from ?to))
                    (at start (at ?a ?from)))
    :effect (and (at end (not (at ?a ?from)))
                 (at end (at ?a ?to))
                 (at end (increase (total-cost) (landing-cost ?to)))
                 (at end (increase (total-risk) (landing-risk ?to)))))
  ; one passenger per flight; boarding is folded into the flight
  (:durative-action fly-carry
    :parameters (?a - plane ?p - person ?from ?to - city)
    :duration (= ?duration (flight-time ?from ?to))
    :condition (and (at start (route ?from ?to))
                    (at start (at ?a ?from))
                    (at start (at ?p ?from)))
    :effect (and (at end (not (at ?a ?from)))
                 (at end (not (at ?p ?from)))
                 (at end (at ?a ?to))
                 (at end (at ?p ?to))
                 (at end (increase (total-cost) (landing-cost ?to)))
                 (at end (increase (total-risk) (landing-risk ?to))))))
"
    .to_string();

    let mut p = String::new();
    let _ = writeln!(p, "(define (problem {})", cfg.name());
    let _ = writeln!(p, "  (:domain multizeno)");
    let list = |prefix: &str, range: std::ops::Range<usize>| {
        range.map(|i| format!("{prefix}{i}")).collect::<Vec<_>>().join(" ")
    };
    let _ = writeln!(p, "  (:objects {} - person", list("person", 1..cfg.passengers + 1));
    let _ = writeln!(p, "            {} - plane", list("plane", 1..cfg.planes + 1));
    let _ = writeln!(p, "            {} - city)", list("city", 0..cfg.cities));
    let _ = writeln!(p, "  (:init");
    for i in 1..=cfg.passengers {
        let _ = writeln!(p, "    (at person{i} city0)");
    }
    for i in 1..=cfg.planes {
        let _ = writeln!(p, "    (at plane{i} city0)");
    }
    for (u, adj) in cfg.neighbours().iter().enumerate() {
        for &(v, d) in adj {
            let _ = writeln!(p, "    (route city{u} city{v}) (= (flight-time city{u} city{v}) {d})");
        }
    }
    for c in 0..cfg.cities {
        let _ = writeln!(
            p,
            "    (= (landing-cost city{c}) {}) (= (landing-risk city{c}) {})",
            cfg.cost_of(c),
            cfg.risk_of(c)
        );
    }
    let _ = writeln!(p, "    (= (total-cost) 0) (= (total-risk) 0))");
    let goals: Vec<String> = (1..=cfg.passengers)
        .map(|i| format!("(at person{i} city{})", cfg.goal_city()))
        .collect();
    let _ = writeln!(p, "  (:goal (and {}))", goals.join(" "));
    let metric = match cfg.mode {
        ObjectiveMode::CostSum => "total-cost",
        ObjectiveMode::RiskMax => "total-risk",
    };
    let _ = writeln!(p, "  (:metric minimize ({metric})))");
    Ok((domain, p))
}

/// Generates and grounds an instance.
pub fn build_task(cfg: &ZenoConfig) -> Result<GroundedTask, crate::Error> {
    let (d, p) = generate(cfg)?;
    Ok(crate::pddl::load(&d, &p)?)
}

pub fn fly_empty_name(plane: usize, from: usize, to: usize) -> String {
    format!("fly-empty(plane{plane},city{from},city{to})")
}

pub fn fly_carry_name(plane: usize, person: usize, from: usize, to: usize) -> String {
    format!("fly-carry(plane{plane},person{person},city{from},city{to})")
}

/// A random valid sequential plan reaching the goal. Moves are uniformly
/// random half of the time and follow a shortest route to the goal otherwise,
/// so every passenger eventually arrives.
pub fn random_plan<R: Rng>(cfg: &ZenoConfig, task: &GroundedTask, rng: &mut R) -> Vec<ActionId> {
    let adj = cfg.neighbours();
    let goal = cfg.goal_city();
    // hop distance to goal for the greedy half
    let mut hops = vec![usize::MAX; cfg.cities];
    hops[goal] = 0;
    let mut queue = VecDeque::from([goal]);
    while let Some(u) = queue.pop_front() {
        for &(v, _) in &adj[u] {
            if hops[v] == usize::MAX {
                hops[v] = hops[u] + 1;
                queue.push_back(v);
            }
        }
    }
    let mut plane_at = vec![0usize; cfg.planes + 1];
    let mut person_at = vec![0usize; cfg.passengers + 1];
    let mut plan = Vec::new();
    while (1..=cfg.passengers).any(|p| person_at[p] != goal) {
        let plane = rng.gen_range(1..=cfg.planes);
        let here = plane_at[plane];
        let waiting: Vec<usize> = (1..=cfg.passengers)
            .filter(|&p| person_at[p] == here && here != goal)
            .collect();
        let greedy = rng.gen_bool(0.5);
        let to = if greedy && !waiting.is_empty() {
            adj[here].iter().map(|&(v, _)| v).min_by_key(|&v| hops[v]).expect("connected")
        } else if greedy {
            // head towards the nearest waiting passenger
            let target = (1..=cfg.passengers)
                .filter(|&p| person_at[p] != goal)
                .map(|p| person_at[p])
                .min_by_key(|&c| (c != here, c))
                .expect("some passenger remains");
            step_towards(&adj, here, target)
        } else {
            adj[here].choose(rng).expect("connected").0
        };
        let carry = !waiting.is_empty() && (greedy || rng.gen_bool(0.5));
        let name = if carry {
            let p = *waiting.choose(rng).expect("non-empty");
            person_at[p] = to;
            fly_carry_name(plane, p, here, to)
        } else {
            fly_empty_name(plane, here, to)
        };
        plane_at[plane] = to;
        plan.push(task.action_id(&name).expect("generated action exists"));
    }
    plan
}

fn step_towards(adj: &[Vec<(usize, i64)>], from: usize, target: usize) -> usize {
    if from == target {
        return adj[from][0].0;
    }
    let mut prev = vec![usize::MAX; adj.len()];
    prev[from] = from;
    let mut queue = VecDeque::from([from]);
    while let Some(u) = queue.pop_front() {
        if u == target {
            break;
        }
        for &(v, _) in &adj[u] {
            if prev[v] == usize::MAX {
                prev[v] = u;
                queue.push_back(v);
            }
        }
    }
    let mut cur = target;
    while prev[cur] != from {
        cur = prev[cur];
    }
    cur
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn variant_tables() {
        let lin = default_config(Variant::Lin, 3, ObjectiveMode::CostSum);
        assert_eq!(lin.edges[0].duration, 2);
        assert_eq!(lin.cost_of(1), 30);
        let cvx = default_config(Variant::Cvx, 6, ObjectiveMode::CostSum);
        assert_eq!(cvx.cost_of(2), 11);
        assert_eq!(cvx.edges, lin.edges);
        let ccve = default_config(Variant::Ccve, 6, ObjectiveMode::CostSum);
        assert_eq!(ccve.edges[3].duration, 1);
        assert_eq!(ccve.cost_of(2), 29);
        for c in [lin, cvx, ccve] {
            c.validate().unwrap();
            assert_eq!(c.cost_of(0), 0);
            assert_eq!(c.cost_of(4), 0);
        }
    }

    #[test]
    fn rejects_bad_configs() {
        let mut c = default_config(Variant::Lin, 3, ObjectiveMode::CostSum);
        c.edges.retain(|e| e.b != 4);
        assert!(c.validate().is_err());
        let mut c = default_config(Variant::Lin, 3, ObjectiveMode::CostSum);
        c.edges[0].duration = 0;
        assert!(c.validate().is_err());
        let mut c = default_config(Variant::Lin, 3, ObjectiveMode::CostSum);
        c.central_costs.insert(4, 5);
        assert!(c.validate().is_err());
    }

    #[test]
    fn variant_parses() {
        assert_eq!("CCVE".parse::<Variant>().unwrap(), Variant::Ccve);
        assert!("zig".parse::<Variant>().is_err());
    }
}
