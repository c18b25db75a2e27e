//! Random small instances and brute-force oracles shared by the integration
//! tests. Everything here recomputes quantities from node sequences and edge
//! lists directly, without going through the library's precomputed tables.

#![allow(dead_code)]

use std::collections::{BTreeSet, HashMap};

use cachenet::io::Problem;
use cachenet::model::{DemandModel, Edge, NetworkInstance, Path, Request, StrategyPair};
use petgraph::algo::dijkstra;
use petgraph::graph::{DiGraph, NodeIndex};
use rand::seq::{IndexedRandom, SliceRandom};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

#[derive(Clone, Debug)]
pub struct TinySpec {
    pub nodes: (usize, usize),
    pub catalog: usize,
    pub requests: usize,
    pub max_paths: usize,
    pub cache_max: u32,
    pub extra_edges: usize,
    /// Probability that a link is left unconstrained.
    pub infinite_share: f64,
}

impl Default for TinySpec {
    fn default() -> Self {
        Self {
            nodes: (4, 7),
            catalog: 3,
            requests: 4,
            max_paths: 3,
            cache_max: 2,
            extra_edges: 3,
            infinite_share: 0.2,
        }
    }
}

/// All well-routed paths from `source` for `item`, in DFS order, at most `cap`.
pub fn simple_paths(
    n: usize,
    adj: &[Vec<usize>],
    servers: &[usize],
    source: usize,
    cap: usize,
) -> Vec<Vec<usize>> {
    fn go(
        adj: &[Vec<usize>],
        servers: &[usize],
        stack: &mut Vec<usize>,
        on: &mut [bool],
        out: &mut Vec<Vec<usize>>,
        cap: usize,
    ) {
        if out.len() >= cap {
            return;
        }
        let v = *stack.last().unwrap();
        if servers.contains(&v) {
            out.push(stack.clone());
            return;
        }
        for &u in &adj[v] {
            if !on[u] {
                on[u] = true;
                stack.push(u);
                go(adj, servers, stack, on, out, cap);
                stack.pop();
                on[u] = false;
            }
        }
    }
    let mut on = vec![false; n];
    on[source] = true;
    let mut out = Vec::new();
    go(adj, servers, &mut vec![source], &mut on, &mut out, cap);
    out
}

/// Random connected instance with independent weights per direction and
/// random path sets drawn from all well-routed paths.
pub fn random_problem(rng: &mut ChaCha8Rng, spec: &TinySpec) -> Problem {
    loop {
        if let Some(p) = try_random_problem(rng, spec) {
            return p;
        }
    }
}

fn try_random_problem(rng: &mut ChaCha8Rng, spec: &TinySpec) -> Option<Problem> {
    let n = rng.random_range(spec.nodes.0..=spec.nodes.1);
    let mut pairs = BTreeSet::new();
    for v in 1..n {
        let u = rng.random_range(0..v);
        pairs.insert((u, v));
    }
    for _ in 0..spec.extra_edges {
        let a = rng.random_range(0..n);
        let b = rng.random_range(0..n);
        if a != b {
            pairs.insert((a.min(b), a.max(b)));
        }
    }
    let mut edges = Vec::new();
    let mut adj = vec![Vec::new(); n];
    for &(a, b) in &pairs {
        for (u, v) in [(a, b), (b, a)] {
            let capacity = if rng.random_bool(spec.infinite_share) {
                f64::INFINITY
            } else {
                rng.random_range(0.05..1.5)
            };
            edges.push(Edge {
                from: u,
                to: v,
                weight: rng.random_range(1..=10) as f64,
                capacity,
            });
            adj[u].push(v);
        }
    }
    let servers: Vec<Vec<usize>> = (0..spec.catalog)
        .map(|_| {
            let mut s = vec![rng.random_range(0..n)];
            if rng.random_bool(0.2) {
                let extra = rng.random_range(0..n);
                if extra != s[0] {
                    s.push(extra);
                }
            }
            s
        })
        .collect();
    let caches: Vec<u32> = (0..n).map(|_| rng.random_range(0..=spec.cache_max)).collect();
    let instance = NetworkInstance::new(n, edges, spec.catalog, servers.clone(), caches).ok()?;

    let mut candidates: Vec<(usize, usize)> = (0..spec.catalog)
        .flat_map(|i| (0..n).map(move |s| (i, s)))
        .filter(|&(i, s)| !servers[i].contains(&s))
        .collect();
    candidates.shuffle(rng);
    let mut requests = Vec::new();
    let mut paths = Vec::new();
    for (i, s) in candidates {
        if requests.len() == spec.requests {
            break;
        }
        let mut all = simple_paths(n, &adj, &servers[i], s, 64);
        if all.is_empty() {
            continue;
        }
        all.shuffle(rng);
        all.truncate(rng.random_range(1..=spec.max_paths));
        requests.push(Request {
            item: i,
            source: s,
            rate: rng.random_range(0.05..=1.0),
        });
        paths.push(all.into_iter().map(Path::new).collect());
    }
    if requests.is_empty() {
        return None;
    }
    let demand = DemandModel::new(&instance, requests, paths).ok()?;
    Some(Problem::new(instance, demand))
}

/// Uniform random point of the box.
pub fn random_box_point(rng: &mut ChaCha8Rng, p: &Problem) -> StrategyPair {
    let n = p.instance.cache_dim() + p.demand.total_paths();
    let v: Vec<f64> = (0..n).map(|_| rng.random::<f64>()).collect();
    StrategyPair::from_flat(v, p.instance.cache_dim())
}

/// Random point of the exact feasible set `D`.
pub fn random_d_point(rng: &mut ChaCha8Rng, p: &Problem) -> StrategyPair {
    let (inst, dem) = (&p.instance, &p.demand);
    let c = inst.catalog_size();
    let mut xi = vec![0.0; inst.cache_dim()];
    for v in 0..inst.num_nodes() {
        let row: Vec<f64> = (0..c).map(|_| rng.random::<f64>()).collect();
        let sum: f64 = row.iter().sum();
        let cap = inst.cache_capacity(v) as f64;
        let scale = if sum > cap { cap / sum } else { 1.0 };
        for (i, x) in row.into_iter().enumerate() {
            xi[v * c + i] = (x * scale).min(1.0);
        }
    }
    let mut rho = Vec::with_capacity(dem.total_paths());
    for r in 0..dem.num_requests() {
        let k = dem.paths(r).len();
        let w: Vec<f64> = (0..k).map(|_| rng.random::<f64>() + 1e-3).collect();
        let s: f64 = w.iter().sum();
        rho.extend(w.into_iter().map(|x| 1.0 - x / s));
    }
    StrategyPair::from_parts(xi, rho)
}

pub struct Oracle<'a> {
    pub problem: &'a Problem,
    weight: HashMap<(usize, usize), f64>,
    capacity: HashMap<(usize, usize), f64>,
    edge_order: Vec<(usize, usize)>,
    /// Per path: rate, routing coordinate and hops as
    /// (caching coordinate, edge position in `edge_order`, weight).
    paths: Vec<(f64, usize, Vec<(usize, usize, f64)>)>,
}

impl<'a> Oracle<'a> {
    pub fn new(problem: &'a Problem) -> Self {
        let inst = &problem.instance;
        let dem = &problem.demand;
        let mut weight = HashMap::new();
        let mut capacity = HashMap::new();
        let mut position = HashMap::new();
        let mut edge_order = Vec::new();
        for (k, e) in inst.edges().iter().enumerate() {
            weight.insert((e.from, e.to), e.weight);
            capacity.insert((e.from, e.to), e.capacity);
            position.insert((e.from, e.to), k);
            edge_order.push((e.from, e.to));
        }
        let c = inst.catalog_size();
        let cache_dim = inst.cache_dim();
        let mut paths = Vec::new();
        for (r, req) in dem.requests().iter().enumerate() {
            for path in dem.paths(r) {
                let nodes = path.nodes();
                let hops = (0..nodes.len() - 1)
                    .map(|k| {
                        let edge = (nodes[k + 1], nodes[k]);
                        (nodes[k] * c + req.item, position[&edge], weight[&edge])
                    })
                    .collect();
                paths.push((req.rate, cache_dim + paths.len(), hops));
            }
        }
        Self {
            problem,
            weight,
            capacity,
            edge_order,
            paths,
        }
    }

    /// Visits every (path, hop) with the edge position, the request rate times
    /// the probability that the response crosses the edge, and its weight.
    fn walk(&self, y: &[f64], mut visit: impl FnMut(usize, f64, f64)) {
        for (rate, route_coord, hops) in &self.paths {
            let route = 1.0 - y[*route_coord];
            let mut miss = 1.0;
            for &(xi, edge, w) in hops {
                miss *= 1.0 - y[xi];
                visit(edge, rate * route * miss, w);
            }
        }
    }

    pub fn c0(&self) -> f64 {
        let dem = &self.problem.demand;
        let mut total = 0.0;
        for (r, req) in dem.requests().iter().enumerate() {
            for path in dem.paths(r) {
                for w in path.nodes().windows(2) {
                    total += req.rate * self.weight[&(w[1], w[0])];
                }
            }
        }
        total
    }

    pub fn cost(&self, y: &[f64]) -> f64 {
        let mut total = 0.0;
        self.walk(y, |_, load, w| total += load * w);
        total
    }

    pub fn gain(&self, y: &[f64]) -> f64 {
        self.c0() - self.cost(y)
    }

    pub fn flows(&self, y: &[f64]) -> HashMap<(usize, usize), f64> {
        self.edge_order.iter().copied().zip(self.flow_vec(y)).collect()
    }

    /// Flow per edge in instance edge order.
    pub fn flow_vec(&self, y: &[f64]) -> Vec<f64> {
        let mut flows = vec![0.0; self.edge_order.len()];
        self.walk(y, |e, load, _| flows[e] += load);
        flows
    }

    pub fn lagrangian(&self, y: &[f64], psi: &[f64]) -> f64 {
        let flows = self.flow_vec(y);
        let mut penalty = 0.0;
        for ((e, f), &p) in self.edge_order.iter().zip(flows).zip(psi) {
            let mu = self.capacity[e];
            if p > 0.0 && mu.is_finite() {
                penalty += p * (f - mu);
            }
        }
        self.gain(y) - penalty
    }

    /// `L(y | y_i = 1) - L(y | y_i = 0)` for every coordinate.
    pub fn pinned_gradient(&self, y: &[f64], psi: &[f64]) -> Vec<f64> {
        let mut work = y.to_vec();
        (0..y.len())
            .map(|i| {
                work[i] = 1.0;
                let hi = self.lagrangian(&work, psi);
                work[i] = 0.0;
                let lo = self.lagrangian(&work, psi);
                work[i] = y[i];
                hi - lo
            })
            .collect()
    }

    /// Pinned difference of one edge flow along every coordinate.
    pub fn pinned_flow_gradient(&self, y: &[f64], edge: usize) -> Vec<f64> {
        let mut work = y.to_vec();
        (0..y.len())
            .map(|i| {
                work[i] = 1.0;
                let hi = self.flow_vec(&work)[edge];
                work[i] = 0.0;
                let lo = self.flow_vec(&work)[edge];
                work[i] = y[i];
                hi - lo
            })
            .collect()
    }

    /// Exact expectation of `f` when the coordinates in `coords` are
    /// independent Bernoulli variables with means taken from `y`, by
    /// enumerating all realizations. Other coordinates keep their values.
    pub fn enumerate<T>(&self, y: &[f64], coords: &[usize], f: impl Fn(&[f64]) -> T) -> T
    where
        T: Default + std::ops::AddAssign + std::ops::Mul<f64, Output = T>,
    {
        let d = coords.len();
        assert!(d <= 16, "enumeration over {d} coordinates");
        let mut total = T::default();
        let mut state = y.to_vec();
        for mask in 0u32..(1 << d) {
            let mut prob = 1.0;
            for (j, &c) in coords.iter().enumerate() {
                if mask >> j & 1 == 1 {
                    state[c] = 1.0;
                    prob *= y[c];
                } else {
                    state[c] = 0.0;
                    prob *= 1.0 - y[c];
                }
            }
            if prob > 0.0 {
                total += f(&state) * prob;
            }
        }
        total
    }

    /// Monte-Carlo estimate of the expected cost: mean and standard error.
    pub fn sampled_cost(&self, y: &[f64], samples: usize, rng: &mut ChaCha8Rng) -> (f64, f64) {
        let mut state = vec![0.0; y.len()];
        let (mut sum, mut sq) = (0.0, 0.0);
        for _ in 0..samples {
            for (s, &p) in state.iter_mut().zip(y) {
                *s = if rng.random::<f64>() < p { 1.0 } else { 0.0 };
            }
            let c = self.cost(&state);
            sum += c;
            sq += c * c;
        }
        let n = samples as f64;
        let mean = sum / n;
        let var = (sq / n - mean * mean).max(0.0);
        (mean, (var / n).sqrt())
    }

    /// Coordinates that affect the objective: caching coordinates of
    /// non-terminal path nodes for the requested item, and all routing
    /// coordinates.
    pub fn relevant_xi(&self) -> Vec<usize> {
        let inst = &self.problem.instance;
        let dem = &self.problem.demand;
        let mut set = BTreeSet::new();
        for (r, req) in dem.requests().iter().enumerate() {
            for path in dem.paths(r) {
                let nodes = path.nodes();
                for &v in &nodes[..nodes.len() - 1] {
                    set.insert(v * inst.catalog_size() + req.item);
                }
            }
        }
        set.into_iter().collect()
    }
}

/// One block of the feasible set: a node's caching row or a request's
/// routing coordinates.
#[derive(Clone, Debug)]
pub enum Block {
    Cache { coords: Vec<usize>, capacity: u32 },
    Route { coords: Vec<usize> },
}

/// Blocks over the relevant coordinates; irrelevant coordinates stay at 0.
pub fn blocks(p: &Problem) -> Vec<Block> {
    let oracle = Oracle::new(p);
    let c = p.instance.catalog_size();
    let mut by_node: Vec<Vec<usize>> = vec![Vec::new(); p.instance.num_nodes()];
    for x in oracle.relevant_xi() {
        by_node[x / c].push(x);
    }
    let mut out = Vec::new();
    for (v, coords) in by_node.into_iter().enumerate() {
        let capacity = p.instance.cache_capacity(v);
        if !coords.is_empty() && capacity > 0 {
            out.push(Block::Cache { coords, capacity });
        }
    }
    let cache_dim = p.instance.cache_dim();
    for r in 0..p.demand.num_requests() {
        let coords = p.demand.path_range(r).map(|j| cache_dim + j).collect();
        out.push(Block::Route { coords });
    }
    out
}

/// Feasible settings of one block on a grid of resolution `1/res`. Caching
/// rows obey the capacity, routing blocks place total mass one.
pub fn block_grid(block: &Block, res: u32, exact: bool) -> Vec<Vec<(usize, f64)>> {
    fn compositions(k: usize, total: u32, max_each: u32, out: &mut Vec<Vec<u32>>, cur: &mut Vec<u32>, exact: bool) {
        if cur.len() == k {
            let s: u32 = cur.iter().sum();
            if !exact || s == total {
                out.push(cur.clone());
            }
            return;
        }
        let used: u32 = cur.iter().sum();
        for x in 0..=max_each.min(total - used) {
            cur.push(x);
            compositions(k, total, max_each, out, cur, exact);
            cur.pop();
        }
    }
    let mut raw = Vec::new();
    match block {
        Block::Cache { coords, capacity } => {
            let budget = (*capacity).min(coords.len() as u32) * res;
            compositions(coords.len(), budget, res, &mut raw, &mut Vec::new(), false);
            raw.into_iter()
                .map(|v| {
                    coords
                        .iter()
                        .zip(v)
                        .map(|(&c, x)| (c, x as f64 / res as f64))
                        .collect()
                })
                .collect()
        }
        Block::Route { coords } => {
            compositions(coords.len(), res, res, &mut raw, &mut Vec::new(), exact);
            raw.into_iter()
                .map(|v| {
                    coords
                        .iter()
                        .zip(v)
                        .map(|(&c, x)| (c, 1.0 - x as f64 / res as f64))
                        .collect()
                })
                .collect()
        }
    }
}

/// Number of points in the product grid, saturating.
pub fn grid_size(blocks: &[Block], res: u32) -> u64 {
    blocks
        .iter()
        .map(|b| block_grid(b, res, true).len() as u64)
        .fold(1u64, |a, b| a.saturating_mul(b))
}

/// Maximum of `f` over the product of per-block choices, with the maximizer.
pub fn product_max(
    dim: usize,
    choices: &[Vec<Vec<(usize, f64)>>],
    f: &mut impl FnMut(&[f64]) -> f64,
) -> (f64, Vec<f64>) {
    fn go(
        level: usize,
        choices: &[Vec<Vec<(usize, f64)>>],
        y: &mut Vec<f64>,
        best: &mut (f64, Vec<f64>),
        f: &mut impl FnMut(&[f64]) -> f64,
    ) {
        if level == choices.len() {
            let v = f(y);
            if v > best.0 {
                *best = (v, y.clone());
            }
            return;
        }
        for choice in &choices[level] {
            for &(c, x) in choice {
                y[c] = x;
            }
            go(level + 1, choices, y, best, f);
        }
        for &(c, _) in &choices[level][0] {
            y[c] = 0.0;
        }
    }
    let mut y = vec![0.0; dim];
    let mut best = (f64::NEG_INFINITY, Vec::new());
    go(0, choices, &mut y, &mut best, f);
    best
}

/// Maximum of `L(·, ψ)` over `D` by grid search at resolution `1/res`.
pub fn grid_opt(p: &Problem, psi: &[f64], res: u32) -> (f64, Vec<f64>) {
    let oracle = Oracle::new(p);
    let choices: Vec<_> = blocks(p).iter().map(|b| block_grid(b, res, true)).collect();
    let dim = p.instance.cache_dim() + p.demand.total_paths();
    product_max(dim, &choices, &mut |y| oracle.lagrangian(y, psi))
}

/// Vertices of one block: caching subsets up to capacity; routing either one
/// path in use (`D`) or any nonempty set of paths in use (`D′`).
pub fn block_vertices(block: &Block, exact: bool) -> Vec<Vec<(usize, f64)>> {
    let coords = match block {
        Block::Cache { coords, .. } | Block::Route { coords } => coords,
    };
    let k = coords.len();
    let mut out = Vec::new();
    for mask in 0u32..(1 << k) {
        let ones = mask.count_ones();
        let keep = match block {
            Block::Cache { capacity, .. } => ones <= *capacity,
            // Bit set means the path carries traffic (ρ̃ = 0).
            Block::Route { .. } => {
                if exact {
                    ones == 1
                } else {
                    ones >= 1
                }
            }
        };
        if !keep {
            continue;
        }
        out.push(
            coords
                .iter()
                .enumerate()
                .map(|(j, &c)| {
                    let bit = (mask >> j & 1) as f64;
                    let value = match block {
                        Block::Cache { .. } => bit,
                        Block::Route { .. } => 1.0 - bit,
                    };
                    (c, value)
                })
                .collect(),
        );
    }
    out
}

/// Best value of a linear function over all vertices of `D′`, every caching
/// coordinate included.
pub fn brute_lmo_value(p: &Problem, g: &[f64]) -> f64 {
    let c = p.instance.catalog_size();
    let mut total = 0.0;
    for v in 0..p.instance.num_nodes() {
        let block = Block::Cache {
            coords: (v * c..(v + 1) * c).collect(),
            capacity: p.instance.cache_capacity(v),
        };
        total += best_linear(&block_vertices(&block, false), g);
    }
    let cache_dim = p.instance.cache_dim();
    for r in 0..p.demand.num_requests() {
        let block = Block::Route {
            coords: p.demand.path_range(r).map(|j| cache_dim + j).collect(),
        };
        total += best_linear(&block_vertices(&block, false), g);
    }
    total
}

fn best_linear(vertices: &[Vec<(usize, f64)>], g: &[f64]) -> f64 {
    vertices
        .iter()
        .map(|v| v.iter().map(|&(c, x)| x * g[c]).sum::<f64>())
        .fold(f64::NEG_INFINITY, f64::max)
}

/// Best integral caching under fixed routing, over the relevant caching
/// coordinates.
pub fn enumerate_caching(p: &Problem, rho_tilde: &[f64]) -> (f64, Vec<f64>) {
    let oracle = Oracle::new(p);
    let cache_dim = p.instance.cache_dim();
    let choices: Vec<_> = blocks(p)
        .iter()
        .filter(|b| matches!(b, Block::Cache { .. }))
        .map(|b| block_vertices(b, true))
        .collect();
    let mut y = vec![0.0; cache_dim + rho_tilde.len()];
    y[cache_dim..].copy_from_slice(rho_tilde);
    product_max(cache_dim, &choices, &mut |xi| {
        y[..cache_dim].copy_from_slice(xi);
        oracle.gain(&y)
    })
}

/// Number of binary caching slots considered by [`enumerate_caching`].
pub fn binary_slots(p: &Problem) -> usize {
    blocks(p)
        .iter()
        .map(|b| match b {
            Block::Cache { coords, .. } => coords.len(),
            Block::Route { .. } => 0,
        })
        .sum()
}

/// Cheapest response cost from `source` to any server of `item`, by Dijkstra
/// on a graph whose arc `u → v` costs the weight of the response edge `v → u`.
pub fn shortest_cost(instance: &NetworkInstance, source: usize, item: usize) -> f64 {
    let mut g: DiGraph<(), f64> = DiGraph::new();
    let nodes: Vec<NodeIndex> = (0..instance.num_nodes()).map(|_| g.add_node(())).collect();
    for e in instance.edges() {
        g.add_edge(nodes[e.to], nodes[e.from], e.weight);
    }
    let dist = dijkstra(&g, nodes[source], None, |e| *e.weight());
    instance
        .servers(item)
        .iter()
        .filter_map(|&s| dist.get(&nodes[s]).copied())
        .fold(f64::INFINITY, f64::min)
}

/// Response cost of a path given as a node sequence.
pub fn response_cost(instance: &NetworkInstance, nodes: &[usize]) -> f64 {
    nodes
        .windows(2)
        .map(|w| {
            instance
                .edges()
                .iter()
                .find(|e| e.from == w[1] && e.to == w[0])
                .expect("path edge exists")
                .weight
        })
        .sum()
}

/// Random nonnegative dual vector, with about half the entries zero.
pub fn random_psi(rng: &mut ChaCha8Rng, instance: &NetworkInstance) -> Vec<f64> {
    (0..instance.num_edges())
        .map(|_| {
            if rng.random_bool(0.5) {
                0.0
            } else {
                rng.random_range(0.0..5.0)
            }
        })
        .collect()
}

/// Pick an element, for tests that need a random coordinate.
pub fn pick<T: Copy>(rng: &mut ChaCha8Rng, xs: &[T]) -> T {
    *xs.choose(rng).expect("nonempty")
}

/// Instance with at most two cache slots and at most two requests with at
/// most two paths each, small enough for a grid search at `res`.
pub fn brute_forceable(rng: &mut ChaCha8Rng, res: u32, max_grid: u64) -> Problem {
    let spec = TinySpec {
        nodes: (3, 5),
        catalog: 2,
        requests: 2,
        max_paths: 2,
        cache_max: 0,
        extra_edges: 2,
        infinite_share: 0.2,
    };
    loop {
        let p = random_problem(rng, &spec);
        let n = p.instance.num_nodes();
        let mut caches = vec![0u32; n];
        for _ in 0..rng.random_range(1..=2) {
            caches[rng.random_range(0..n)] += 1;
        }
        let instance = p.instance.clone().with_cache_capacities(caches).unwrap();
        let candidate = Problem::new(instance, p.demand.clone());
        let size = grid_size(&blocks(&candidate), res);
        let has_cache = blocks(&candidate)
            .iter()
            .any(|b| matches!(b, Block::Cache { .. }));
        if has_cache && size <= max_grid {
            return candidate;
        }
    }
}

/// Maximum of `L(·, ψ)` over all vertices of `D`.
pub fn vertex_opt(p: &Problem, psi: &[f64]) -> (f64, Vec<f64>) {
    let oracle = Oracle::new(p);
    let choices: Vec<_> = blocks(p).iter().map(|b| block_vertices(b, true)).collect();
    let dim = p.instance.cache_dim() + p.demand.total_paths();
    product_max(dim, &choices, &mut |y| oracle.lagrangian(y, psi))
}

/// Whether some routing in `D` keeps every flow within capacity under fixed
/// caching `xi`. Flows are affine in the path fractions, so this is a
/// linear feasibility question, settled by Fourier-Motzkin elimination.
pub fn routing_feasible(p: &Problem, xi: &[f64], tol: f64) -> bool {
    let oracle = Oracle::new(p);
    let cache_dim = p.instance.cache_dim();
    // Variables: fractions on all but the last path of each request.
    let mut vars = Vec::new();
    let mut base = vec![0.0; cache_dim + p.demand.total_paths()];
    base[..cache_dim].copy_from_slice(xi);
    for r in 0..p.demand.num_requests() {
        let range = p.demand.path_range(r);
        for j in range.clone() {
            base[cache_dim + j] = 1.0;
        }
        base[cache_dim + range.end - 1] = 0.0;
        for j in range.start..range.end - 1 {
            vars.push((j, range.end - 1));
        }
    }
    let n = vars.len();
    let f0 = oracle.flow_vec(&base);
    let slopes: Vec<Vec<f64>> = vars
        .iter()
        .map(|&(j, last)| {
            let mut y = base.clone();
            y[cache_dim + j] = 0.0;
            y[cache_dim + last] = 1.0;
            oracle.flow_vec(&y).iter().zip(&f0).map(|(a, b)| a - b).collect()
        })
        .collect();
    let mut rows: Vec<(Vec<f64>, f64)> = Vec::new();
    for (e, edge) in p.instance.edges().iter().enumerate() {
        if edge.capacity.is_finite() {
            rows.push(((0..n).map(|k| slopes[k][e]).collect(), edge.capacity - f0[e] + tol));
        }
    }
    for k in 0..n {
        let mut neg = vec![0.0; n];
        neg[k] = -1.0;
        rows.push((neg, 0.0));
    }
    for r in 0..p.demand.num_requests() {
        let range = p.demand.path_range(r);
        let coeffs = (0..n)
            .map(|k| if range.contains(&vars[k].0) { 1.0 } else { 0.0 })
            .collect();
        rows.push((coeffs, 1.0));
    }
    for k in 0..n {
        let (mut pos, mut neg, mut rest) = (Vec::new(), Vec::new(), Vec::new());
        for row in rows {
            if row.0[k] > 1e-15 {
                pos.push(row);
            } else if row.0[k] < -1e-15 {
                neg.push(row);
            } else {
                rest.push(row);
            }
        }
        for (a, b) in &pos {
            for (c, d) in &neg {
                let (s, t) = (1.0 / a[k], -1.0 / c[k]);
                let coeffs = a.iter().zip(c).map(|(x, y)| s * x + t * y).collect();
                rest.push((coeffs, s * b + t * d));
            }
        }
        rows = rest;
    }
    rows.iter().all(|(_, b)| *b >= -1e-12)
}
