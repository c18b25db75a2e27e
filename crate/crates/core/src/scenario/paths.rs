//! Bounded-stretch path sets.
//!
//! The cost of a path counts the response direction, from the server back
//! to the source, so distances are computed over reversed edges.

use std::cmp::Reverse;
use std::collections::{BinaryHeap, HashSet};

use log::warn;

use crate::model::{NetworkInstance, NodeId, Path, Request};

/// Node expansions allowed per request during enumeration.
pub const MAX_EXPANSIONS: usize = 200_000;

const COST_TOL: f64 = 1e-9;

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct PathOptions {
    pub max_paths: usize,
    pub stretch: f64,
}

impl Default for PathOptions {
    fn default() -> Self {
        Self {
            max_paths: 5,
            stretch: 4.0,
        }
    }
}

/// Cost of `path` in the response direction.
pub fn path_cost(instance: &NetworkInstance, path: &[NodeId]) -> f64 {
    path.windows(2)
        .map(|w| {
            let e = instance
                .edge_id(w[1], w[0])
                .expect("consecutive path nodes are adjacent");
            instance.edge(e).weight
        })
        .sum()
}

/// Distance from every node to the nearest server of `item` and the next
/// hop on one shortest path. Servers are terminals.
pub fn distances_to_servers(instance: &NetworkInstance, item: usize) -> (Vec<f64>, Vec<Option<NodeId>>) {
    let n = instance.num_nodes();
    let mut dist = vec![f64::INFINITY; n];
    let mut next = vec![None; n];
    let mut heap = BinaryHeap::new();
    for &s in instance.servers(item) {
        dist[s] = 0.0;
        heap.push(Reverse((OrdF64(0.0), s)));
    }
    while let Some(Reverse((OrdF64(d), y))) = heap.pop() {
        if d > dist[y] {
            continue;
        }
        for &e in instance.out_edges(y) {
            let edge = instance.edge(e);
            let x = edge.to;
            if instance.is_server(item, x) {
                continue;
            }
            let cand = d + edge.weight;
            if cand < dist[x] {
                dist[x] = cand;
                next[x] = Some(y);
                heap.push(Reverse((OrdF64(cand), x)));
            }
        }
    }
    (dist, next)
}

#[derive(Clone, Copy, PartialEq, PartialOrd)]
struct OrdF64(f64);

impl Eq for OrdF64 {}

impl Ord for OrdF64 {
    fn cmp(&self, other: &Self) -> std::cmp::Ordering {
        self.0.total_cmp(&other.0)
    }
}

/// Up to `max_paths` well-routed simple paths from the source to a server,
/// the shortest first, each within `stretch` times the shortest cost.
/// Returns an empty set when no server is reachable.
pub fn paths_for_request(
    instance: &NetworkInstance,
    request: &Request,
    options: &PathOptions,
    dist: &[f64],
    next: &[Option<NodeId>],
) -> Vec<Path> {
    let source = request.source;
    let item = request.item;
    if !dist[source].is_finite() || options.max_paths == 0 {
        return Vec::new();
    }
    let mut shortest = vec![source];
    let mut cur = source;
    while let Some(y) = next[cur] {
        shortest.push(y);
        cur = y;
    }
    let budget = options.stretch * dist[source] + COST_TOL;
    let mut out = vec![Path::new(shortest.clone())];
    let mut seen: HashSet<Vec<NodeId>> = HashSet::from([shortest]);

    let mut on_path = vec![false; instance.num_nodes()];
    let mut stack_path = vec![source];
    on_path[source] = true;
    let mut expansions = 0usize;
    // Each frame holds the remaining candidate next hops of a path prefix.
    let mut frames: Vec<(f64, Vec<NodeId>)> = vec![(0.0, candidates(instance, source, dist, &on_path))];
    while let Some((cost, cands)) = frames.last_mut() {
        if out.len() >= options.max_paths || expansions >= MAX_EXPANSIONS {
            break;
        }
        let cost = *cost;
        let Some(y) = (!cands.is_empty()).then(|| cands.remove(0)) else {
            frames.pop();
            let v = stack_path.pop().expect("frame per node");
            on_path[v] = false;
            continue;
        };
        let cur = *stack_path.last().expect("nonempty");
        let w = instance.edge(instance.edge_id(y, cur).expect("adjacent")).weight;
        let new_cost = cost + w;
        if new_cost + dist[y] > budget {
            continue;
        }
        expansions += 1;
        if instance.is_server(item, y) {
            let mut nodes = stack_path.clone();
            nodes.push(y);
            if seen.insert(nodes.clone()) {
                out.push(Path::new(nodes));
            }
            continue;
        }
        on_path[y] = true;
        stack_path.push(y);
        let c = candidates(instance, y, dist, &on_path);
        frames.push((new_cost, c));
    }
    out
}

/// Unvisited neighbours of `v` that can still reach a server, cheapest
/// estimated completion first.
fn candidates(
    instance: &NetworkInstance,
    v: NodeId,
    dist: &[f64],
    on_path: &[bool],
) -> Vec<NodeId> {
    let mut c: Vec<(f64, NodeId)> = instance
        .out_edges(v)
        .iter()
        .map(|&e| instance.edge(e).to)
        .filter(|&y| !on_path[y] && dist[y].is_finite())
        .map(|y| {
            let w = instance.edge(instance.edge_id(y, v).expect("symmetric")).weight;
            (w + dist[y], y)
        })
        .collect();
    c.sort_by(|a, b| a.0.total_cmp(&b.0).then(a.1.cmp(&b.1)));
    c.into_iter().map(|(_, y)| y).collect()
}

/// Path sets for all requests; requests without any path are dropped with a
/// warning.
pub fn generate_paths(
    instance: &NetworkInstance,
    requests: Vec<Request>,
    options: &PathOptions,
) -> (Vec<Request>, Vec<Vec<Path>>) {
    let mut cache: Vec<Option<(Vec<f64>, Vec<Option<NodeId>>)>> = vec![None; instance.catalog_size()];
    let mut kept = Vec::with_capacity(requests.len());
    let mut sets = Vec::with_capacity(requests.len());
    for req in requests {
        let (dist, next) = cache[req.item].get_or_insert_with(|| distances_to_servers(instance, req.item));
        let paths = paths_for_request(instance, &req, options, dist, next);
        if paths.is_empty() {
            warn!("dropping request for item {} at node {}: no path to a server", req.item, req.source);
            continue;
        }
        kept.push(req);
        sets.push(paths);
    }
    (kept, sets)
}
