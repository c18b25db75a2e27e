//! Joint caching and routing optimization over networks with link capacities.

pub mod baselines;
pub mod error;
pub mod fw;
pub mod harness;
pub mod io;
pub mod lp;
pub mod model;
pub mod objective;
pub mod primal_dual;
pub mod scenario;

pub use error::{Error, Result};
pub use model::{DemandModel, DualVector, NetworkInstance, Path, Request, StrategyPair};
pub use objective::ObjectiveContext;
