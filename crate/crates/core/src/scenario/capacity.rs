//! Link capacities scaled from the flows of a random reference strategy.

use log::warn;
use rand::seq::index::sample;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::Result;
use crate::model::{DemandModel, NetworkInstance, StrategyPair};
use crate::objective::ObjectiveContext;

/// Routing of the reference strategy.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ReferenceRouting {
    /// Each path carries `1/|P|` of its request (`ρ̃ = 1 - 1/|P|`), a point of
    /// the exact routing set.
    #[default]
    Uniform,
    /// `ρ̃ = 1/|P|` taken literally for the routing complements.
    Complement,
}

/// Random full caches plus the chosen routing.
pub fn reference_strategy(
    instance: &NetworkInstance,
    demand: &DemandModel,
    routing: ReferenceRouting,
    rng: &mut ChaCha8Rng,
) -> StrategyPair {
    let mut y = StrategyPair::zeros(instance, demand);
    let catalog = instance.catalog_size();
    for v in 0..instance.num_nodes() {
        let c = (instance.cache_capacity(v) as usize).min(catalog);
        for i in sample(rng, catalog, c) {
            y.xi_mut()[instance.xi_index(v, i)] = 1.0;
        }
    }
    for r in 0..demand.num_requests() {
        let range = demand.path_range(r);
        let share = 1.0 / range.len() as f64;
        let value = match routing {
            ReferenceRouting::Uniform => 1.0 - share,
            ReferenceRouting::Complement => share,
        };
        for p in range {
            y.rho_tilde_mut()[p] = value;
        }
    }
    y
}

/// Sets `μ_e = κ · flow_e(reference)` on every edge.
pub fn set_link_capacities(
    instance: &NetworkInstance,
    demand: &DemandModel,
    kappa: f64,
    routing: ReferenceRouting,
    rng: &mut ChaCha8Rng,
) -> Result<NetworkInstance> {
    let max_paths = demand.max_paths();
    if kappa < 1.0 || (max_paths > 1 && kappa >= max_paths as f64) {
        warn!("looseness {kappa} outside [1, {max_paths})");
    }
    let reference = reference_strategy(instance, demand, routing, rng);
    let ctx = ObjectiveContext::new(instance, demand);
    let capacities: Vec<f64> = ctx.edge_flows(&reference).iter().map(|f| kappa * f).collect();
    instance.clone().with_capacities(&capacities)
}
