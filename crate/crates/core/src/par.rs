//! Data-parallel map with a sequential fallback. Output order always matches
//! input order, so results do not depend on the execution mode.

use serde::{Deserialize, Serialize};

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Execution {
    Sequential,
    /// Falls back to sequential when built without the `parallel` feature.
    #[default]
    Parallel,
}

/// Maps `f` over `items`; each worker builds its scratch state once with
/// `init` and reuses it across the items it handles.
pub fn par_map_init<T, S, R, I, F>(exec: Execution, items: &[T], init: I, f: F) -> Vec<R>
where
    T: Sync,
    R: Send,
    I: Fn() -> S + Sync + Send,
    F: Fn(&mut S, &T) -> R + Sync + Send,
{
    match exec {
        #[cfg(feature = "parallel")]
        Execution::Parallel => {
            use rayon::prelude::*;
            items.par_iter().map_init(&init, |s, t| f(s, t)).collect()
        }
        _ => {
            let mut s = init();
            items.iter().map(|t| f(&mut s, t)).collect()
        }
    }
}

pub fn par_map<T, R, F>(exec: Execution, items: &[T], f: F) -> Vec<R>
where
    T: Sync,
    R: Send,
    F: Fn(&T) -> R + Sync + Send,
{
    par_map_init(exec, items, || (), |_, t| f(t))
}

/// Runs `f` with parallel maps limited to `workers` threads (0 means the
/// default pool).
pub fn with_workers<R: Send>(workers: usize, f: impl FnOnce() -> R + Send) -> R {
    #[cfg(feature = "parallel")]
    if workers > 0 {
        if let Ok(pool) = rayon::ThreadPoolBuilder::new().num_threads(workers).build() {
            return pool.install(f);
        }
    }
    let _ = workers;
    f()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn modes_agree() {
        let xs: Vec<u64> = (0..1000).collect();
        let seq = par_map(Execution::Sequential, &xs, |x| x * x);
        let par = par_map(Execution::Parallel, &xs, |x| x * x);
        assert_eq!(seq, par);
    }
}
