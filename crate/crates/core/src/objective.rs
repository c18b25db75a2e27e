//! Expected cost, cache gain, edge flows, overflows and the Lagrangian,
//! together with their exact gradients.
//!
//! Every function here is multilinear in each coordinate of `y` (a path never
//! visits a node twice and each path owns one routing coordinate), so the
//! partial derivative equals the pinned difference `f(y|y_i=1) - f(y|y_i=0)`.
//! Gradients are computed in one pass per path from prefix products of
//! `(1 - ξ)` and suffix sums, never by division.

use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::model::{DemandModel, NetworkInstance, NodeId, StrategyPair};

/// Requests per gradient work unit. Fixed so the reduction order, and hence
/// every bit of the result, does not depend on the number of worker threads.
const REQUEST_CHUNK: usize = 64;

#[derive(Clone, Copy, Debug)]
struct Hop {
    /// Coordinate of `ξ_{p_k, i}`.
    xi: usize,
    /// Edge `(p_{k+1}, p_k)` in response direction.
    edge: usize,
    weight: f64,
    /// Whether the edge has a finite capacity; multipliers on unbounded
    /// edges are ignored.
    bounded: bool,
}

/// Coefficients of `gain_weight·F - Σ_e ψ_e G_e`. With `all_edges` the
/// multipliers also apply to unbounded edges.
#[derive(Clone, Copy)]
struct Weights<'p> {
    gain_weight: f64,
    psi: &'p [f64],
    all_edges: bool,
}

#[derive(Clone, Debug)]
struct PathTable {
    rate: f64,
    rho_coord: usize,
    hops: std::ops::Range<usize>,
}

/// Precomputed per-path tables for fast evaluation over one instance.
#[derive(Clone, Debug)]
pub struct ObjectiveContext<'a> {
    instance: &'a NetworkInstance,
    demand: &'a DemandModel,
    paths: Vec<PathTable>,
    hops: Vec<Hop>,
    /// Path ranges per chunk of `REQUEST_CHUNK` requests.
    chunks: Vec<std::ops::Range<usize>>,
    /// For each caching coordinate, the `(path, hop)` pairs where it occurs.
    occurrences: Vec<Vec<(u32, u32)>>,
    c0: f64,
    total_rate: f64,
}

/// Result of one evaluation pass.
#[derive(Clone, Debug, PartialEq)]
pub struct Evaluation {
    pub cost: f64,
    pub gain: f64,
    /// Expected flow per edge id.
    pub flows: Vec<f64>,
}

/// One partial derivative per primal coordinate, in strategy layout.
#[derive(Clone, Debug, PartialEq)]
pub struct GradientVector(Vec<f64>);

impl GradientVector {
    pub fn as_slice(&self) -> &[f64] {
        &self.0
    }

    pub fn into_inner(self) -> Vec<f64> {
        self.0
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }
}

impl From<Vec<f64>> for GradientVector {
    fn from(v: Vec<f64>) -> Self {
        GradientVector(v)
    }
}

impl<'a> ObjectiveContext<'a> {
    pub fn new(instance: &'a NetworkInstance, demand: &'a DemandModel) -> Self {
        let cache_dim = instance.cache_dim();
        let mut paths = Vec::with_capacity(demand.total_paths());
        let mut hops = Vec::new();
        let mut occurrences = vec![Vec::new(); cache_dim];
        let mut c0 = 0.0;
        for (r, req) in demand.requests().iter().enumerate() {
            for (offset, p) in demand.path_range(r).zip(demand.paths(r)) {
                let start = hops.len();
                let path_id = paths.len() as u32;
                for (k, (to, from)) in p.response_edges().enumerate() {
                    let edge = instance
                        .edge_id(to, from)
                        .expect("demand paths are validated against the instance");
                    let weight = instance.edge(edge).weight;
                    let bounded = instance.edge(edge).capacity.is_finite();
                    let xi = instance.xi_index(from, req.item);
                    occurrences[xi].push((path_id, k as u32));
                    hops.push(Hop {
                        xi,
                        edge,
                        weight,
                        bounded,
                    });
                    c0 += weight * req.rate;
                }
                paths.push(PathTable {
                    rate: req.rate,
                    rho_coord: cache_dim + offset,
                    hops: start..hops.len(),
                });
            }
        }
        let chunks = (0..demand.num_requests())
            .step_by(REQUEST_CHUNK)
            .map(|r0| {
                let r1 = (r0 + REQUEST_CHUNK).min(demand.num_requests());
                demand.path_range(r0).start..demand.path_range(r1 - 1).end
            })
            .collect();
        Self {
            instance,
            demand,
            paths,
            hops,
            chunks,
            occurrences,
            c0,
            total_rate: demand.total_rate(),
        }
    }

    pub fn instance(&self) -> &'a NetworkInstance {
        self.instance
    }

    pub fn demand(&self) -> &'a DemandModel {
        self.demand
    }

    /// Total primal dimension `|V||C| + P_TOT`.
    pub fn dim(&self) -> usize {
        self.instance.cache_dim() + self.demand.total_paths()
    }

    pub fn cache_dim(&self) -> usize {
        self.instance.cache_dim()
    }

    /// Cost of serving every request over every one of its paths with empty
    /// caches; the gain is measured against it.
    pub fn c0(&self) -> f64 {
        self.c0
    }

    /// `Σ λ` over all requests, an upper bound on any edge flow.
    pub fn total_rate(&self) -> f64 {
        self.total_rate
    }

    pub fn zeros(&self) -> StrategyPair {
        StrategyPair::zeros(self.instance, self.demand)
    }

    fn check(&self, y: &StrategyPair) {
        assert_eq!(
            y.len(),
            self.dim(),
            "strategy dimension does not match the objective context"
        );
        assert_eq!(y.cache_dim(), self.cache_dim());
    }

    /// Single pass computing cost, gain and all edge flows.
    pub fn evaluate(&self, y: &StrategyPair) -> Evaluation {
        self.check(y);
        let y = y.as_slice();
        let mut flows = vec![0.0; self.instance.num_edges()];
        let mut cost = 0.0;
        for path in &self.paths {
            let scale = path.rate * (1.0 - y[path.rho_coord]);
            let mut prefix = 1.0;
            for hop in &self.hops[path.hops.clone()] {
                prefix *= 1.0 - y[hop.xi];
                let term = scale * prefix;
                cost += hop.weight * term;
                flows[hop.edge] += term;
            }
        }
        Evaluation {
            cost,
            gain: self.c0 - cost,
            flows,
        }
    }

    pub fn expected_cost(&self, y: &StrategyPair) -> f64 {
        self.evaluate(y).cost
    }

    pub fn cache_gain(&self, y: &StrategyPair) -> f64 {
        self.evaluate(y).gain
    }

    pub fn edge_flows(&self, y: &StrategyPair) -> Vec<f64> {
        self.evaluate(y).flows
    }

    fn edge_by_nodes(&self, edge: (NodeId, NodeId)) -> Result<usize> {
        self.instance
            .edge_id(edge.0, edge.1)
            .ok_or(Error::UnknownEdge(edge.0, edge.1))
    }

    pub fn edge_flow(&self, y: &StrategyPair, edge: (NodeId, NodeId)) -> Result<f64> {
        let id = self.edge_by_nodes(edge)?;
        Ok(self.evaluate(y).flows[id])
    }

    /// `flow - μ` for one edge; negative values are slack.
    pub fn overflow(&self, y: &StrategyPair, edge: (NodeId, NodeId)) -> Result<f64> {
        let id = self.edge_by_nodes(edge)?;
        Ok(self.evaluate(y).flows[id] - self.instance.edge(id).capacity)
    }

    pub fn overflows(&self, y: &StrategyPair) -> Vec<f64> {
        self.overflows_from_flows(&self.evaluate(y).flows)
    }

    pub fn overflows_from_flows(&self, flows: &[f64]) -> Vec<f64> {
        flows
            .iter()
            .zip(self.instance.edges())
            .map(|(f, e)| f - e.capacity)
            .collect()
    }

    /// `Σ_e ψ_e G_e` from precomputed flows over edges with finite capacity.
    pub fn penalty(&self, flows: &[f64], psi: &[f64]) -> f64 {
        let mut total = 0.0;
        for ((&f, e), &p) in flows.iter().zip(self.instance.edges()).zip(psi) {
            if p != 0.0 && e.capacity.is_finite() {
                total += p * (f - e.capacity);
            }
        }
        total
    }

    pub fn lagrangian(&self, y: &StrategyPair, psi: &[f64]) -> Result<f64> {
        self.check_psi(psi)?;
        let eval = self.evaluate(y);
        Ok(eval.gain - self.penalty(&eval.flows, psi))
    }

    pub(crate) fn lagrangian_from(&self, eval: &Evaluation, psi: &[f64]) -> f64 {
        eval.gain - self.penalty(&eval.flows, psi)
    }

    fn check_psi(&self, psi: &[f64]) -> Result<()> {
        if psi.len() != self.instance.num_edges() {
            return Err(Error::Dimension {
                what: "dual vector",
                expected: self.instance.num_edges(),
                actual: psi.len(),
            });
        }
        if let Some((edge, &value)) = psi
            .iter()
            .enumerate()
            .find(|(_, p)| p.is_nan() || **p < 0.0)
        {
            return Err(Error::NegativeMultiplier { edge, value });
        }
        Ok(())
    }

    /// Offset `Σ_e ψ_e (Σλ - μ_e)` that bounds the penalty term from above.
    pub fn dual_offset(&self, psi: &[f64]) -> f64 {
        let mut total = 0.0;
        for (e, &p) in self.instance.edges().iter().zip(psi) {
            if p != 0.0 && e.capacity.is_finite() {
                total += p * (self.total_rate - e.capacity);
            }
        }
        total
    }

    /// `M = 2·L(1, ψ)·(|V||C| + P_TOT)²`.
    pub fn lipschitz_constant(&self, psi: &[f64]) -> Result<f64> {
        let ones = StrategyPair::ones(self.instance, self.demand);
        let n = self.dim() as f64;
        Ok(2.0 * self.lagrangian(&ones, psi)? * n * n)
    }

    /// Gradient of `L(·, ψ)`.
    pub fn gradient(&self, y: &StrategyPair, psi: &[f64]) -> GradientVector {
        debug_assert!(psi.iter().all(|&p| p >= 0.0));
        GradientVector(self.weighted_gradient(y, 1.0, psi))
    }

    /// Gradient of the cache gain `F` alone.
    pub fn gain_gradient(&self, y: &StrategyPair) -> GradientVector {
        GradientVector(self.weighted_gradient(y, 1.0, &[]))
    }

    /// Gradient of the flow (equivalently the overflow) on one edge.
    pub fn flow_gradient(&self, y: &StrategyPair, edge: usize) -> GradientVector {
        let mut unit = vec![0.0; self.instance.num_edges()];
        unit[edge] = 1.0;
        let mut g = self.gradient_with(
            y,
            Weights {
                gain_weight: 0.0,
                psi: &unit,
                all_edges: true,
            },
        );
        for x in &mut g {
            *x = -*x;
        }
        GradientVector(g)
    }

    /// Gradient of `gain_weight·F - Σ_e ψ_e G_e`. An empty `psi` means zero.
    pub fn weighted_gradient(&self, y: &StrategyPair, gain_weight: f64, psi: &[f64]) -> Vec<f64> {
        self.gradient_with(
            y,
            Weights {
                gain_weight,
                psi,
                all_edges: false,
            },
        )
    }

    fn gradient_with(&self, y: &StrategyPair, weights: Weights<'_>) -> Vec<f64> {
        self.check(y);
        let ys = y.as_slice();
        let mut grad = vec![0.0; self.dim()];
        if self.chunks.len() <= 1 {
            let mut scratch = Vec::new();
            for path in &self.paths {
                self.path_gradient(path, ys, weights, &mut scratch, |c, v| {
                    grad[c] += v
                });
            }
            return grad;
        }
        let partials: Vec<Vec<(usize, f64)>> = self
            .chunks
            .par_iter()
            .map(|range| {
                let mut out = Vec::new();
                let mut scratch = Vec::new();
                for path in &self.paths[range.clone()] {
                    self.path_gradient(path, ys, weights, &mut scratch, |c, v| {
                        out.push((c, v))
                    });
                }
                out
            })
            .collect();
        for part in partials {
            for (c, v) in part {
                grad[c] += v;
            }
        }
        grad
    }

    #[inline]
    fn hop_coefficient(&self, hop: &Hop, rate: f64, weights: Weights<'_>) -> f64 {
        let Weights { gain_weight, psi, all_edges } = weights;
        let penalty = if psi.is_empty() || !(hop.bounded || all_edges) {
            0.0
        } else {
            psi[hop.edge]
        };
        rate * (gain_weight * hop.weight + penalty)
    }

    fn path_gradient(
        &self,
        path: &PathTable,
        y: &[f64],
        weights: Weights<'_>,
        prefix: &mut Vec<f64>,
        mut emit: impl FnMut(usize, f64),
    ) {
        let hops = &self.hops[path.hops.clone()];
        if hops.is_empty() {
            emit(path.rho_coord, 0.0);
            return;
        }
        // prefix[k] = Π_{k' < k} (1 - ξ_{p_k'}), prefix[0] = 1
        prefix.clear();
        let mut acc = 1.0;
        for hop in hops {
            prefix.push(acc);
            acc *= 1.0 - y[hop.xi];
        }
        let route = 1.0 - y[path.rho_coord];
        let mut suffix = 0.0;
        for k in (0..hops.len()).rev() {
            if k + 1 < hops.len() {
                suffix *= 1.0 - y[hops[k + 1].xi];
            }
            suffix += self.hop_coefficient(&hops[k], path.rate, weights);
            emit(hops[k].xi, route * prefix[k] * suffix);
        }
        emit(path.rho_coord, (1.0 - y[hops[0].xi]) * suffix);
    }

    /// Partial derivative of `gain_weight·F - Σψ G` along one coordinate,
    /// touching only the paths that contain it.
    pub fn coordinate_gradient(
        &self,
        y: &StrategyPair,
        coord: usize,
        gain_weight: f64,
        psi: &[f64],
    ) -> f64 {
        self.check(y);
        let ys = y.as_slice();
        let weights = Weights {
            gain_weight,
            psi,
            all_edges: false,
        };
        let mut total = 0.0;
        let mut scratch = Vec::new();
        if coord < self.cache_dim() {
            for &(path_id, hop_idx) in &self.occurrences[coord] {
                let path = &self.paths[path_id as usize];
                let mut value = 0.0;
                self.path_gradient(path, ys, weights, &mut scratch, |c, v| {
                    if c == coord {
                        value = v;
                    }
                });
                debug_assert_eq!(self.hops[path.hops.start + hop_idx as usize].xi, coord);
                total += value;
            }
        } else {
            let path_id = coord - self.cache_dim();
            let path = &self.paths[path_id];
            self.path_gradient(path, ys, weights, &mut scratch, |c, v| {
                if c == coord {
                    total = v;
                }
            });
        }
        total
    }

    /// Paths (global index) and per-path cost under fixed caching, used by
    /// the routing linear program: `Σ_k w_k Π_{k'≤k}(1-ξ)` and the per-edge
    /// load factors `Π_{k'≤k}(1-ξ)`.
    pub(crate) fn path_profile(&self, path_id: usize, xi: &[f64]) -> (f64, Vec<(usize, f64)>) {
        let path = &self.paths[path_id];
        let mut prefix = 1.0;
        let mut cost = 0.0;
        let mut loads = Vec::with_capacity(path.hops.len());
        for hop in &self.hops[path.hops.clone()] {
            prefix *= 1.0 - xi[hop.xi];
            cost += hop.weight * prefix;
            loads.push((hop.edge, prefix));
        }
        (cost, loads)
    }

    /// Edge ids crossed by a path, in response direction.
    pub fn path_edges(&self, path_id: usize) -> impl Iterator<Item = usize> + '_ {
        self.hops[self.paths[path_id].hops.clone()]
            .iter()
            .map(|h| h.edge)
    }

    /// Number of (path, hop) pairs touching a caching coordinate.
    pub fn occurrences(&self, coord: usize) -> usize {
        self.occurrences[coord].len()
    }
}
