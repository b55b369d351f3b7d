//! Reachability analyses over a grounded task: earliest atom times and
//! pairwise mutual exclusion.

use std::cmp::Reverse;
use std::collections::BinaryHeap;

use crate::model::{AtomId, GroundedTask};

/// Earliest time each atom can become true, ignoring deletes and
/// interference: 0 for initial atoms, otherwise the cheapest achiever's
/// duration plus the latest of its preconditions. `None` if unreachable.
pub fn h1_earliest(task: &GroundedTask) -> Vec<Option<i64>> {
    let n = task.num_atoms();
    let mut time: Vec<Option<i64>> = vec![None; n];
    let mut remaining: Vec<usize> = task.actions().iter().map(|a| a.pre.len()).collect();
    let mut ready_at: Vec<i64> = vec![0; task.actions().len()];
    let mut heap = BinaryHeap::new();
    let mut done = vec![false; n];
    for a in task.init().iter() {
        time[a] = Some(0);
        heap.push(Reverse((0i64, a)));
    }
    let fire = |act: usize, t: i64, time: &mut Vec<Option<i64>>, heap: &mut BinaryHeap<Reverse<(i64, AtomId)>>| {
        let a = task.action(act);
        let end = t + a.duration;
        for &q in &a.add {
            if time[q].is_none_or(|old| end < old) {
                time[q] = Some(end);
                heap.push(Reverse((end, q)));
            }
        }
    };
    for a in task.actions().iter().filter(|a| a.pre.is_empty()) {
        fire(a.id, 0, &mut time, &mut heap);
    }
    while let Some(Reverse((t, atom))) = heap.pop() {
        if done[atom] || time[atom] != Some(t) {
            continue;
        }
        done[atom] = true;
        for &act in task.consumers(atom) {
            ready_at[act] = ready_at[act].max(t);
            remaining[act] -= 1;
            if remaining[act] == 0 {
                fire(act, ready_at[act], &mut time, &mut heap);
            }
        }
    }
    time
}

/// Symmetric, irreflexive relation over atoms, stored as a bit matrix.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct MutexTable {
    n: usize,
    words: usize,
    bits: Vec<u64>,
}

impl MutexTable {
    fn new(n: usize) -> Self {
        let words = n.div_ceil(64);
        MutexTable {
            n,
            words,
            bits: vec![0; n * words],
        }
    }

    fn get(&self, a: AtomId, b: AtomId) -> bool {
        self.bits[a * self.words + b / 64] >> (b % 64) & 1 == 1
    }

    fn set(&mut self, a: AtomId, b: AtomId) {
        self.bits[a * self.words + b / 64] |= 1 << (b % 64);
        self.bits[b * self.words + a / 64] |= 1 << (a % 64);
    }

    pub fn is_mutex(&self, a: AtomId, b: AtomId) -> bool {
        a != b && self.get(a, b)
    }

    /// True if `atom` is mutex with none of `others`.
    pub fn compatible(&self, atom: AtomId, others: &[AtomId]) -> bool {
        others.iter().all(|&o| !self.is_mutex(atom, o))
    }

    pub fn num_atoms(&self) -> usize {
        self.n
    }

    /// All mutex pairs with `a < b`.
    pub fn pairs(&self) -> Vec<(AtomId, AtomId)> {
        let mut out = Vec::new();
        for a in 0..self.n {
            for b in a + 1..self.n {
                if self.get(a, b) {
                    out.push((a, b));
                }
            }
        }
        out
    }
}

/// Pairs of atoms never reached together by the pairwise reachability
/// fixpoint (h² without time). A sound over-approximation of co-reachability,
/// so every pair true together in some reachable state is left unmarked.
pub fn mutex_pairs(task: &GroundedTask) -> MutexTable {
    let n = task.num_atoms();
    // reach.get(a, b) means a and b were reached together; (a, a) means a
    // itself was reached
    let mut reach = MutexTable::new(n);
    let init: Vec<AtomId> = task.init().iter().collect();
    for &a in &init {
        for &b in &init {
            reach.set(a, b);
        }
    }
    loop {
        let mut changed = false;
        for act in task.actions() {
            let pre_ok = act.pre.iter().all(|&p| reach.get(p, p))
                && act.pre.iter().enumerate().all(|(i, &p)| act.pre[i + 1..].iter().all(|&q| reach.get(p, q)));
            if !pre_ok {
                continue;
            }
            for &p in &act.add {
                for &q in &act.add {
                    if !reach.get(p, q) {
                        reach.set(p, q);
                        changed = true;
                    }
                }
            }
            // an atom persisting through the action joins every add
            for q in 0..n {
                if !reach.get(q, q) || act.del.binary_search(&q).is_ok() || act.add.binary_search(&q).is_ok() {
                    continue;
                }
                if !act.pre.iter().all(|&p| reach.get(p, q)) {
                    continue;
                }
                for &p in &act.add {
                    if !reach.get(p, q) {
                        reach.set(p, q);
                        changed = true;
                    }
                }
            }
        }
        if !changed {
            break;
        }
    }
    let mut mutex = MutexTable::new(n);
    for a in 0..n {
        for b in a + 1..n {
            if !reach.get(a, b) {
                mutex.set(a, b);
            }
        }
    }
    mutex
}
