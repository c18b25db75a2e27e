//! Network, demand and strategy data model.
//!
//! Coordinates of a [`StrategyPair`] follow one fixed layout used by every
//! other module: caching marginals first, row-major by `(node, item)`, then
//! routing complements in request order and, within a request, path order.

use std::collections::{HashMap, HashSet};
use std::fmt;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

pub type NodeId = usize;
pub type ItemId = usize;

/// Tolerance used for every equality and inequality check on strategies.
pub const FEASIBILITY_TOL: f64 = 1e-9;

/// Directed edge with its transfer cost and expected-traffic capacity.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Edge {
    pub from: NodeId,
    pub to: NodeId,
    pub weight: f64,
    /// `f64::INFINITY` means unconstrained.
    #[serde(with = "capacity_serde")]
    pub capacity: f64,
}

/// Capacities as JSON numbers, with `"inf"` for unconstrained edges.
mod capacity_serde {
    use serde::{de::Error, Deserialize, Deserializer, Serializer};

    pub fn serialize<S: Serializer>(v: &f64, s: S) -> Result<S::Ok, S::Error> {
        if v.is_infinite() {
            s.serialize_str("inf")
        } else {
            s.serialize_f64(*v)
        }
    }

    #[derive(Deserialize)]
    #[serde(untagged)]
    enum Repr {
        Num(f64),
        Text(String),
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> Result<f64, D::Error> {
        match Repr::deserialize(d)? {
            Repr::Num(v) => Ok(v),
            Repr::Text(t) if t == "inf" => Ok(f64::INFINITY),
            Repr::Text(t) => Err(D::Error::custom(format!("invalid capacity {t:?}"))),
        }
    }
}

/// Symmetric directed graph together with catalog, servers and cache sizes.
#[derive(Clone, Debug, PartialEq)]
pub struct NetworkInstance {
    num_nodes: usize,
    edges: Vec<Edge>,
    edge_index: HashMap<(NodeId, NodeId), usize>,
    out_edges: Vec<Vec<usize>>,
    catalog_size: usize,
    servers: Vec<Vec<NodeId>>,
    cache_capacities: Vec<u32>,
}

impl NetworkInstance {
    pub fn new(
        num_nodes: usize,
        mut edges: Vec<Edge>,
        catalog_size: usize,
        servers: Vec<Vec<NodeId>>,
        cache_capacities: Vec<u32>,
    ) -> Result<Self> {
        let bad = |msg: String| Err(Error::InvalidNetwork(msg));
        if cache_capacities.len() != num_nodes {
            return bad(format!(
                "{} cache capacities for {} nodes",
                cache_capacities.len(),
                num_nodes
            ));
        }
        if servers.len() != catalog_size {
            return bad(format!(
                "{} server sets for a catalog of {} items",
                servers.len(),
                catalog_size
            ));
        }
        edges.sort_by_key(|e| (e.from, e.to));
        let mut edge_index = HashMap::with_capacity(edges.len());
        let mut out_edges = vec![Vec::new(); num_nodes];
        for (id, e) in edges.iter().enumerate() {
            if e.from >= num_nodes || e.to >= num_nodes {
                return bad(format!("edge ({}, {}) references a missing node", e.from, e.to));
            }
            if e.from == e.to {
                return bad(format!("self loop at node {}", e.from));
            }
            if !(e.weight.is_finite() && e.weight >= 0.0) {
                return bad(format!("edge ({}, {}) has weight {}", e.from, e.to, e.weight));
            }
            if e.capacity.is_nan() || e.capacity < 0.0 {
                return bad(format!(
                    "edge ({}, {}) has capacity {}",
                    e.from, e.to, e.capacity
                ));
            }
            if edge_index.insert((e.from, e.to), id).is_some() {
                return bad(format!("duplicate edge ({}, {})", e.from, e.to));
            }
            out_edges[e.from].push(id);
        }
        for e in &edges {
            if !edge_index.contains_key(&(e.to, e.from)) {
                return bad(format!(
                    "graph is not symmetric: ({}, {}) present but ({}, {}) missing",
                    e.from, e.to, e.to, e.from
                ));
            }
        }
        let mut sorted_servers = Vec::with_capacity(servers.len());
        for (item, mut set) in servers.into_iter().enumerate() {
            set.sort_unstable();
            set.dedup();
            if set.is_empty() {
                return bad(format!("item {item} has no designated server"));
            }
            if let Some(&v) = set.iter().find(|&&v| v >= num_nodes) {
                return bad(format!("item {item} designated to missing node {v}"));
            }
            sorted_servers.push(set);
        }
        Ok(Self {
            num_nodes,
            edges,
            edge_index,
            out_edges,
            catalog_size,
            servers: sorted_servers,
            cache_capacities,
        })
    }

    pub fn num_nodes(&self) -> usize {
        self.num_nodes
    }

    pub fn catalog_size(&self) -> usize {
        self.catalog_size
    }

    /// Edges sorted by `(from, to)`; the position is the edge id.
    pub fn edges(&self) -> &[Edge] {
        &self.edges
    }

    pub fn num_edges(&self) -> usize {
        self.edges.len()
    }

    pub fn edge(&self, id: usize) -> &Edge {
        &self.edges[id]
    }

    pub fn edge_id(&self, from: NodeId, to: NodeId) -> Option<usize> {
        self.edge_index.get(&(from, to)).copied()
    }

    /// Ids of edges leaving `v`, ordered by target node.
    pub fn out_edges(&self, v: NodeId) -> &[usize] {
        &self.out_edges[v]
    }

    pub fn servers(&self, item: ItemId) -> &[NodeId] {
        &self.servers[item]
    }

    pub fn is_server(&self, item: ItemId, v: NodeId) -> bool {
        self.servers[item].binary_search(&v).is_ok()
    }

    pub fn cache_capacity(&self, v: NodeId) -> u32 {
        self.cache_capacities[v]
    }

    pub fn cache_capacities(&self) -> &[u32] {
        &self.cache_capacities
    }

    pub fn capacities(&self) -> Vec<f64> {
        self.edges.iter().map(|e| e.capacity).collect()
    }

    /// Replaces every link capacity, indexed by edge id.
    pub fn with_capacities(mut self, capacities: &[f64]) -> Result<Self> {
        if capacities.len() != self.edges.len() {
            return Err(Error::Dimension {
                what: "link capacities",
                expected: self.edges.len(),
                actual: capacities.len(),
            });
        }
        for (e, &mu) in self.edges.iter_mut().zip(capacities) {
            if mu.is_nan() || mu < 0.0 {
                return Err(Error::InvalidNetwork(format!(
                    "edge ({}, {}) has capacity {}",
                    e.from, e.to, mu
                )));
            }
            e.capacity = mu;
        }
        Ok(self)
    }

    pub fn with_cache_capacities(mut self, caches: Vec<u32>) -> Result<Self> {
        if caches.len() != self.num_nodes {
            return Err(Error::Dimension {
                what: "cache capacities",
                expected: self.num_nodes,
                actual: caches.len(),
            });
        }
        self.cache_capacities = caches;
        Ok(self)
    }

    /// Dimension of the caching block of a strategy, `|V|·|C|`.
    pub fn cache_dim(&self) -> usize {
        self.num_nodes * self.catalog_size
    }

    pub fn xi_index(&self, v: NodeId, item: ItemId) -> usize {
        v * self.catalog_size + item
    }
}

/// A request `(item, source)` and its per-slot arrival probability.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Request {
    pub item: ItemId,
    pub source: NodeId,
    pub rate: f64,
}

/// A simple node sequence from a request source to a designated server.
#[derive(Clone, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(transparent)]
pub struct Path(Vec<NodeId>);

impl Path {
    pub fn new(nodes: Vec<NodeId>) -> Self {
        Path(nodes)
    }

    pub fn nodes(&self) -> &[NodeId] {
        &self.0
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    /// 1-based position of `v`.
    pub fn position(&self, v: NodeId) -> Result<usize> {
        path_position(&self.0, v)
    }

    /// Edges in response direction: `(p_{k+1}, p_k)` for `k = 1..|p|-1`.
    pub fn response_edges(&self) -> impl Iterator<Item = (NodeId, NodeId)> + '_ {
        self.0.windows(2).map(|w| (w[1], w[0]))
    }
}

impl fmt::Display for Path {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let mut first = true;
        for v in &self.0 {
            if !first {
                f.write_str("-")?;
            }
            write!(f, "{v}")?;
            first = false;
        }
        Ok(())
    }
}

/// 1-based index `k` such that `path[k-1] == v`.
pub fn path_position(path: &[NodeId], v: NodeId) -> Result<usize> {
    path.iter()
        .position(|&u| u == v)
        .map(|k| k + 1)
        .ok_or_else(|| Error::NodeNotOnPath {
            node: v,
            path: path.to_vec(),
        })
}

/// Checks the four well-routedness conditions plus edge existence.
pub fn check_well_routed(
    instance: &NetworkInstance,
    item: ItemId,
    source: NodeId,
    path: &[NodeId],
) -> std::result::Result<(), String> {
    let Some((&last, body)) = path.split_last() else {
        return Err("empty path".into());
    };
    if path[0] != source {
        return Err(format!("starts at {} instead of source {source}", path[0]));
    }
    let mut seen = HashSet::with_capacity(path.len());
    for &v in path {
        if v >= instance.num_nodes() {
            return Err(format!("node {v} does not exist"));
        }
        if !seen.insert(v) {
            return Err(format!("node {v} repeats"));
        }
    }
    if !instance.is_server(item, last) {
        return Err(format!("ends at {last}, not a designated server of item {item}"));
    }
    if let Some(&v) = body.iter().find(|&&v| instance.is_server(item, v)) {
        return Err(format!("passes designated server {v} before its end"));
    }
    for w in path.windows(2) {
        if instance.edge_id(w[0], w[1]).is_none() {
            return Err(format!("({}, {}) is not an edge", w[0], w[1]));
        }
    }
    Ok(())
}

/// Requests, their rates and their candidate path sets.
#[derive(Clone, Debug, PartialEq)]
pub struct DemandModel {
    requests: Vec<Request>,
    paths: Vec<Vec<Path>>,
    path_offsets: Vec<usize>,
}

impl DemandModel {
    pub fn new(
        instance: &NetworkInstance,
        requests: Vec<Request>,
        paths: Vec<Vec<Path>>,
    ) -> Result<Self> {
        if paths.len() != requests.len() {
            return Err(Error::InvalidDemand(format!(
                "{} path sets for {} requests",
                paths.len(),
                requests.len()
            )));
        }
        let mut seen = HashSet::with_capacity(requests.len());
        for (r, req) in requests.iter().enumerate() {
            if req.item >= instance.catalog_size() {
                return Err(Error::InvalidDemand(format!(
                    "request {r} asks for missing item {}",
                    req.item
                )));
            }
            if req.source >= instance.num_nodes() {
                return Err(Error::InvalidDemand(format!(
                    "request {r} originates at missing node {}",
                    req.source
                )));
            }
            if !(0.0..=1.0).contains(&req.rate) {
                return Err(Error::InvalidDemand(format!(
                    "request {r} has rate {} outside [0, 1]",
                    req.rate
                )));
            }
            if !seen.insert((req.item, req.source)) {
                return Err(Error::InvalidDemand(format!(
                    "request ({}, {}) appears more than once",
                    req.item, req.source
                )));
            }
            if paths[r].is_empty() {
                return Err(Error::InvalidDemand(format!("request {r} has no path")));
            }
            let mut distinct = HashSet::with_capacity(paths[r].len());
            for p in &paths[r] {
                check_well_routed(instance, req.item, req.source, p.nodes()).map_err(|reason| {
                    Error::NotWellRouted {
                        request: r,
                        path: p.nodes().to_vec(),
                        reason,
                    }
                })?;
                if !distinct.insert(p) {
                    return Err(Error::NotWellRouted {
                        request: r,
                        path: p.nodes().to_vec(),
                        reason: "duplicate path".into(),
                    });
                }
            }
        }
        let mut path_offsets = Vec::with_capacity(paths.len() + 1);
        let mut acc = 0;
        path_offsets.push(0);
        for set in &paths {
            acc += set.len();
            path_offsets.push(acc);
        }
        Ok(Self {
            requests,
            paths,
            path_offsets,
        })
    }

    pub fn empty() -> Self {
        Self {
            requests: Vec::new(),
            paths: Vec::new(),
            path_offsets: vec![0],
        }
    }

    pub fn requests(&self) -> &[Request] {
        &self.requests
    }

    pub fn num_requests(&self) -> usize {
        self.requests.len()
    }

    pub fn paths(&self, request: usize) -> &[Path] {
        &self.paths[request]
    }

    pub fn path_sets(&self) -> &[Vec<Path>] {
        &self.paths
    }

    /// `P_TOT`, the total number of paths over all requests.
    pub fn total_paths(&self) -> usize {
        *self.path_offsets.last().unwrap()
    }

    /// Range of routing coordinates (within the routing block) of a request.
    pub fn path_range(&self, request: usize) -> std::ops::Range<usize> {
        self.path_offsets[request]..self.path_offsets[request + 1]
    }

    pub fn total_rate(&self) -> f64 {
        self.requests.iter().map(|r| r.rate).sum()
    }

    pub fn max_paths(&self) -> usize {
        self.paths.iter().map(Vec::len).max().unwrap_or(0)
    }
}

/// Joint primal vector `y = (ξ, ρ̃)` stored contiguously.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(into = "StrategyParts", try_from = "StrategyParts")]
pub struct StrategyPair {
    values: Vec<f64>,
    cache_dim: usize,
}

#[derive(Serialize, Deserialize)]
struct StrategyParts {
    xi: Vec<f64>,
    rho_tilde: Vec<f64>,
}

impl From<StrategyPair> for StrategyParts {
    fn from(y: StrategyPair) -> Self {
        let (xi, rho_tilde) = y.into_parts();
        StrategyParts { xi, rho_tilde }
    }
}

impl TryFrom<StrategyParts> for StrategyPair {
    type Error = Error;

    fn try_from(parts: StrategyParts) -> Result<Self> {
        Ok(StrategyPair::from_parts(parts.xi, parts.rho_tilde))
    }
}

impl StrategyPair {
    pub fn zeros(instance: &NetworkInstance, demand: &DemandModel) -> Self {
        Self::filled(instance.cache_dim(), demand.total_paths(), 0.0)
    }

    pub fn ones(instance: &NetworkInstance, demand: &DemandModel) -> Self {
        Self::filled(instance.cache_dim(), demand.total_paths(), 1.0)
    }

    pub fn filled(cache_dim: usize, route_dim: usize, value: f64) -> Self {
        Self {
            values: vec![value; cache_dim + route_dim],
            cache_dim,
        }
    }

    pub fn from_parts(mut xi: Vec<f64>, rho_tilde: Vec<f64>) -> Self {
        let cache_dim = xi.len();
        xi.extend_from_slice(&rho_tilde);
        Self {
            values: xi,
            cache_dim,
        }
    }

    pub fn from_flat(values: Vec<f64>, cache_dim: usize) -> Self {
        assert!(cache_dim <= values.len());
        Self { values, cache_dim }
    }

    pub fn into_parts(mut self) -> (Vec<f64>, Vec<f64>) {
        let rho = self.values.split_off(self.cache_dim);
        (self.values, rho)
    }

    pub fn xi(&self) -> &[f64] {
        &self.values[..self.cache_dim]
    }

    pub fn xi_mut(&mut self) -> &mut [f64] {
        &mut self.values[..self.cache_dim]
    }

    pub fn rho_tilde(&self) -> &[f64] {
        &self.values[self.cache_dim..]
    }

    pub fn rho_tilde_mut(&mut self) -> &mut [f64] {
        &mut self.values[self.cache_dim..]
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.values
    }

    pub fn as_mut_slice(&mut self) -> &mut [f64] {
        &mut self.values
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    pub fn cache_dim(&self) -> usize {
        self.cache_dim
    }

    pub fn route_dim(&self) -> usize {
        self.values.len() - self.cache_dim
    }

    /// `weight·other + (1-weight)·self`, coordinatewise.
    pub fn blend_towards(&mut self, other: &StrategyPair, weight: f64) {
        assert_eq!(self.values.len(), other.values.len());
        assert_eq!(self.cache_dim, other.cache_dim);
        if weight == 1.0 {
            self.values.copy_from_slice(&other.values);
            return;
        }
        for (a, &b) in self.values.iter_mut().zip(&other.values) {
            *a = weight * b + (1.0 - weight) * *a;
        }
    }

    pub fn check_layout(&self, instance: &NetworkInstance, demand: &DemandModel) -> Result<()> {
        if self.cache_dim != instance.cache_dim() {
            return Err(Error::Dimension {
                what: "caching marginals",
                expected: instance.cache_dim(),
                actual: self.cache_dim,
            });
        }
        if self.route_dim() != demand.total_paths() {
            return Err(Error::Dimension {
                what: "routing complements",
                expected: demand.total_paths(),
                actual: self.route_dim(),
            });
        }
        Ok(())
    }
}

/// One nonnegative multiplier per directed edge, indexed by edge id.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(transparent)]
pub struct DualVector(Vec<f64>);

impl DualVector {
    pub fn zeros(num_edges: usize) -> Self {
        DualVector(vec![0.0; num_edges])
    }

    pub fn new(values: Vec<f64>) -> Result<Self> {
        if let Some((edge, &value)) = values
            .iter()
            .enumerate()
            .find(|(_, v)| v.is_nan() || **v < 0.0)
        {
            return Err(Error::NegativeMultiplier { edge, value });
        }
        Ok(DualVector(values))
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.0
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn norm(&self) -> f64 {
        self.0.iter().map(|x| x * x).sum::<f64>().sqrt()
    }

    pub fn is_zero(&self) -> bool {
        self.0.iter().all(|&x| x == 0.0)
    }
}

/// Which routing constraint to enforce: the equality set `D` or its
/// down-closed relaxation `D′`.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum SetKind {
    Exact,
    Relaxed,
}

#[derive(Clone, Debug, PartialEq)]
pub struct ConstraintCheck {
    pub satisfied: bool,
    pub worst_violation: f64,
    pub offending_index: Option<usize>,
}

impl ConstraintCheck {
    fn new() -> Self {
        Self {
            satisfied: true,
            worst_violation: 0.0,
            offending_index: None,
        }
    }

    fn observe(&mut self, index: usize, violation: f64) {
        if violation > FEASIBILITY_TOL {
            self.satisfied = false;
        }
        if violation > self.worst_violation {
            self.worst_violation = violation;
            self.offending_index = Some(index);
        }
    }
}

/// Per-family outcome of [`validate_strategy`]. Offending indices are
/// coordinates for `bounds`, nodes for `cache` and requests for `routing`.
#[derive(Clone, Debug, PartialEq)]
pub struct FeasibilityReport {
    pub bounds: ConstraintCheck,
    pub cache: ConstraintCheck,
    pub routing: ConstraintCheck,
}

impl FeasibilityReport {
    pub fn is_feasible(&self) -> bool {
        self.bounds.satisfied && self.cache.satisfied && self.routing.satisfied
    }
}

/// Checks box, cache-capacity and routing constraints of `y`.
pub fn validate_strategy(
    instance: &NetworkInstance,
    demand: &DemandModel,
    y: &StrategyPair,
    set: SetKind,
) -> Result<FeasibilityReport> {
    y.check_layout(instance, demand)?;
    let mut bounds = ConstraintCheck::new();
    for (i, &x) in y.as_slice().iter().enumerate() {
        let violation = if x.is_nan() {
            f64::INFINITY
        } else {
            (-x).max(x - 1.0).max(0.0)
        };
        bounds.observe(i, violation);
    }

    let mut cache = ConstraintCheck::new();
    let catalog = instance.catalog_size();
    for v in 0..instance.num_nodes() {
        let row = &y.xi()[v * catalog..(v + 1) * catalog];
        let load: f64 = row.iter().sum();
        cache.observe(v, (load - instance.cache_capacity(v) as f64).max(0.0));
    }

    let mut routing = ConstraintCheck::new();
    let rho = y.rho_tilde();
    for r in 0..demand.num_requests() {
        let mass: f64 = rho[demand.path_range(r)].iter().map(|x| 1.0 - x).sum();
        let violation = match set {
            SetKind::Exact => (mass - 1.0).abs(),
            SetKind::Relaxed => (1.0 - mass).max(0.0),
        };
        routing.observe(r, violation);
    }

    Ok(FeasibilityReport {
        bounds,
        cache,
        routing,
    })
}

/// Coordinatewise `1 - ρ`; an involution on `[0, 1]^n`.
pub fn route_complement(rho: &[f64]) -> Result<Vec<f64>> {
    rho.iter()
        .enumerate()
        .map(|(index, &value)| {
            if (0.0..=1.0).contains(&value) {
                Ok(1.0 - value)
            } else {
                Err(Error::OutOfRange { index, value })
            }
        })
        .collect()
}
