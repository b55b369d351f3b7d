pub mod assess;
pub mod dae;
pub mod experiment;
pub mod model;
pub mod moea;
pub mod par;
pub mod pddl;
pub mod planner;
pub mod tuner;
pub mod zeno;

#[derive(Debug, thiserror::Error)]
pub enum Error {
    #[error(transparent)]
    Model(#[from] model::ModelError),
    #[error(transparent)]
    Pddl(#[from] pddl::PddlError),
    #[error(transparent)]
    Zeno(#[from] zeno::ZenoError),
}
