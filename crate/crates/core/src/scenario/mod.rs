//! Experiment inputs: topologies, demand, path sets and link capacities.
//!
//! Every random stage draws from its own ChaCha8 stream of the scenario seed,
//! so changing one stage's parameters leaves the others untouched.

pub mod capacity;
pub mod counterexample;
pub mod paths;
pub mod requests;
pub mod topology;
pub mod trace;

use std::path::PathBuf;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::io::Problem;
use crate::model::{DemandModel, Edge, NetworkInstance};

pub use capacity::{set_link_capacities, ReferenceRouting};
pub use paths::{generate_paths, PathOptions};

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Topology {
    ErdosRenyi { nodes: usize, probability: f64 },
    BalancedTree { branching: usize, depth: usize },
    Hypercube { dimension: u32 },
    Grid { rows: usize, cols: usize },
    SmallWorld { side: usize, long_links: usize, exponent: f64 },
    Backbone { path: PathBuf },
    Counterexample,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ScenarioSpec {
    pub topology: Topology,
    pub query_nodes: usize,
    pub requests: usize,
    pub max_paths: usize,
    pub cache_range: (u32, u32),
    pub weight_range: (u32, u32),
    pub catalog: usize,
    pub zipf_exponent: f64,
    pub stretch: f64,
    /// Looseness; `None` leaves every link unconstrained.
    pub kappa: Option<f64>,
    #[serde(default)]
    pub reference: ReferenceRouting,
    pub seed: u64,
}

impl Default for ScenarioSpec {
    fn default() -> Self {
        Self {
            topology: Topology::ErdosRenyi {
                nodes: 100,
                probability: 0.1055,
            },
            query_nodes: 10,
            requests: 5000,
            max_paths: 5,
            cache_range: (10, 20),
            weight_range: (1, 100),
            catalog: 1000,
            zipf_exponent: 1.2,
            stretch: 4.0,
            kappa: Some(1.0),
            reference: ReferenceRouting::Uniform,
            seed: 0,
        }
    }
}

/// Random streams, one per generation stage.
#[derive(Clone, Copy, Debug)]
#[repr(u64)]
pub enum Stage {
    Topology = 1,
    Weights,
    Caches,
    Servers,
    Queries,
    Requests,
    Capacities,
    Trace,
}

pub fn stage_rng(seed: u64, stage: Stage) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(stage as u64);
    rng
}

impl ScenarioSpec {
    pub fn validate(&self) -> Result<()> {
        let bad = |m: String| Err(Error::InvalidScenario(m));
        if self.cache_range.0 > self.cache_range.1 || self.weight_range.0 > self.weight_range.1 {
            return bad("empty cache or weight range".into());
        }
        if self.catalog == 0 {
            return bad("catalog must be nonempty".into());
        }
        if self.max_paths == 0 || !(self.stretch >= 1.0) {
            return bad("need at least one path and stretch ≥ 1".into());
        }
        if let Some(k) = self.kappa {
            if !(k > 0.0 && k.is_finite()) {
                return bad(format!("looseness {k} must be positive"));
            }
        }
        if !(self.zipf_exponent >= 0.0) {
            return bad("Zipf exponent must be nonnegative".into());
        }
        Ok(())
    }

    pub fn path_options(&self) -> PathOptions {
        PathOptions {
            max_paths: self.max_paths,
            stretch: self.stretch,
        }
    }
}

pub fn generate_graph(spec: &ScenarioSpec) -> Result<topology::Graph> {
    let mut rng = stage_rng(spec.seed, Stage::Topology);
    Ok(match &spec.topology {
        Topology::ErdosRenyi { nodes, probability } => topology::erdos_renyi(*nodes, *probability, &mut rng)?,
        Topology::BalancedTree { branching, depth } => topology::balanced_tree(*branching, *depth),
        Topology::Hypercube { dimension } => topology::hypercube(*dimension),
        Topology::Grid { rows, cols } => topology::grid(*rows, *cols),
        Topology::SmallWorld {
            side,
            long_links,
            exponent,
        } => topology::small_world(*side, *long_links, *exponent, &mut rng),
        Topology::Backbone { path } => topology::load_edge_list(path)?,
        Topology::Counterexample => {
            return Err(Error::InvalidScenario(
                "the counterexample is a fixed instance, not a graph family".into(),
            ))
        }
    })
}

/// Instance with random weights, caches and servers and unconstrained links.
pub fn generate_topology(spec: &ScenarioSpec) -> Result<NetworkInstance> {
    spec.validate()?;
    let graph = generate_graph(spec)?;
    if graph.nodes == 0 {
        return Err(Error::InvalidScenario("empty graph".into()));
    }
    let mut wrng = stage_rng(spec.seed, Stage::Weights);
    let (wlo, whi) = spec.weight_range;
    let mut edges = Vec::with_capacity(2 * graph.edges.len());
    for &(a, b) in &graph.edges {
        for (from, to) in [(a, b), (b, a)] {
            edges.push(Edge {
                from,
                to,
                weight: wrng.random_range(wlo..=whi) as f64,
                capacity: f64::INFINITY,
            });
        }
    }
    let mut crng = stage_rng(spec.seed, Stage::Caches);
    let (clo, chi) = spec.cache_range;
    let caches = (0..graph.nodes).map(|_| crng.random_range(clo..=chi)).collect();
    let mut srng = stage_rng(spec.seed, Stage::Servers);
    let servers = (0..spec.catalog)
        .map(|_| vec![srng.random_range(0..graph.nodes)])
        .collect();
    NetworkInstance::new(graph.nodes, edges, spec.catalog, servers, caches)
}

/// Zipf demand with bounded-stretch path sets on `instance`.
pub fn generate_demand(spec: &ScenarioSpec, instance: &NetworkInstance) -> Result<DemandModel> {
    let mut qrng = stage_rng(spec.seed, Stage::Queries);
    let queries = requests::query_nodes(instance, spec.query_nodes, &mut qrng)?;
    let candidates = requests::candidate_pairs(instance, &queries);
    let mut rrng = stage_rng(spec.seed, Stage::Requests);
    let reqs = requests::zipf_requests(&candidates, spec.requests, spec.zipf_exponent, &mut rrng)?;
    let (reqs, paths) = generate_paths(instance, reqs, &spec.path_options());
    DemandModel::new(instance, reqs, paths)
}

/// Full scenario: topology, demand and, when a looseness is given, scaled
/// link capacities.
pub fn generate_scenario(spec: &ScenarioSpec) -> Result<Problem> {
    if spec.topology == Topology::Counterexample {
        return counterexample::build_counterexample();
    }
    let instance = generate_topology(spec)?;
    let demand = generate_demand(spec, &instance)?;
    let instance = match spec.kappa {
        Some(kappa) => {
            let mut rng = stage_rng(spec.seed, Stage::Capacities);
            set_link_capacities(&instance, &demand, kappa, spec.reference, &mut rng)?
        }
        None => instance,
    };
    Ok(Problem::new(instance, demand))
}
