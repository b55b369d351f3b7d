//! Evolution engines over the DaE genome and their run traces.

mod aggregate;
mod engine;
mod ibea;
mod trace;

pub use aggregate::{aggregate_campaign, alpha_seed, bootstrap_bounds, AggregationConfig, Campaign, DEFAULT_ALPHAS};
pub use engine::{
    config_digest, derive_seed, evolve, evolve_pareto, evolve_single, f_alpha, Budget, EngineConfig, EngineError,
    ObjectiveBounds, Selector, DEFAULT_PER_CALL,
};
pub use ibea::{dominates, hv_indicator, ibea_select, scale_population, SelectError, Selection, DEFAULT_KAPPA, IBEA_REFERENCE};
pub use trace::{ArchiveEvent, Member, RunTrace, Snapshot, TraceError};
