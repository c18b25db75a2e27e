//! Undirected graph families, returned as sorted edge lists `(a, b)` with
//! `a < b`.

use std::collections::{BTreeSet, VecDeque};
use std::fs;
use std::path::Path;

use rand::Rng;
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};

/// Regeneration attempts for random families that must be connected.
const MAX_ATTEMPTS: usize = 1000;

#[derive(Clone, Debug, PartialEq)]
pub struct Graph {
    pub nodes: usize,
    pub edges: Vec<(usize, usize)>,
}

impl Graph {
    fn from_set(nodes: usize, set: BTreeSet<(usize, usize)>) -> Self {
        Self {
            nodes,
            edges: set.into_iter().collect(),
        }
    }

    pub fn is_connected(&self) -> bool {
        if self.nodes == 0 {
            return true;
        }
        let mut adj = vec![Vec::new(); self.nodes];
        for &(a, b) in &self.edges {
            adj[a].push(b);
            adj[b].push(a);
        }
        let mut seen = vec![false; self.nodes];
        let mut queue = VecDeque::from([0]);
        seen[0] = true;
        let mut count = 1;
        while let Some(u) = queue.pop_front() {
            for &v in &adj[u] {
                if !seen[v] {
                    seen[v] = true;
                    count += 1;
                    queue.push_back(v);
                }
            }
        }
        count == self.nodes
    }
}

fn ordered(a: usize, b: usize) -> (usize, usize) {
    (a.min(b), a.max(b))
}

/// `G(n, p)`, redrawn until connected.
pub fn erdos_renyi(nodes: usize, probability: f64, rng: &mut ChaCha8Rng) -> Result<Graph> {
    if !(0.0..=1.0).contains(&probability) {
        return Err(Error::InvalidScenario(format!(
            "edge probability {probability} outside [0, 1]"
        )));
    }
    for _ in 0..MAX_ATTEMPTS {
        let mut set = BTreeSet::new();
        for a in 0..nodes {
            for b in a + 1..nodes {
                if rng.random_bool(probability) {
                    set.insert((a, b));
                }
            }
        }
        let g = Graph::from_set(nodes, set);
        if g.is_connected() {
            return Ok(g);
        }
    }
    Err(Error::InvalidScenario(format!(
        "no connected G({nodes}, {probability}) after {MAX_ATTEMPTS} draws"
    )))
}

/// Complete `branching`-ary tree with `depth` levels below the root.
pub fn balanced_tree(branching: usize, depth: usize) -> Graph {
    let mut edges = Vec::new();
    let mut level = vec![0usize];
    let mut next_id = 1;
    for _ in 0..depth {
        let mut children = Vec::with_capacity(level.len() * branching);
        for &parent in &level {
            for _ in 0..branching {
                edges.push((parent, next_id));
                children.push(next_id);
                next_id += 1;
            }
        }
        level = children;
    }
    Graph {
        nodes: next_id,
        edges,
    }
}

pub fn hypercube(dimension: u32) -> Graph {
    let nodes = 1usize << dimension;
    let mut edges = Vec::new();
    for a in 0..nodes {
        for bit in 0..dimension {
            let b = a ^ (1 << bit);
            if a < b {
                edges.push((a, b));
            }
        }
    }
    edges.sort_unstable();
    Graph { nodes, edges }
}

/// Four-neighbour lattice; node `(r, c)` has id `r * cols + c`.
pub fn grid(rows: usize, cols: usize) -> Graph {
    let mut edges = Vec::new();
    for r in 0..rows {
        for c in 0..cols {
            let id = r * cols + c;
            if c + 1 < cols {
                edges.push((id, id + 1));
            }
            if r + 1 < rows {
                edges.push((id, id + cols));
            }
        }
    }
    edges.sort_unstable();
    Graph {
        nodes: rows * cols,
        edges,
    }
}

/// Kleinberg small world: a `side × side` lattice where every node adds
/// `long_links` contacts drawn with probability proportional to
/// `distance^-exponent` (lattice distance).
pub fn small_world(side: usize, long_links: usize, exponent: f64, rng: &mut ChaCha8Rng) -> Graph {
    let base = grid(side, side);
    let mut set: BTreeSet<_> = base.edges.into_iter().collect();
    let n = side * side;
    let coord = |v: usize| ((v / side) as i64, (v % side) as i64);
    let mut weights = vec![0.0; n];
    for u in 0..n {
        let (ur, uc) = coord(u);
        let mut total = 0.0;
        for (v, w) in weights.iter_mut().enumerate() {
            let (vr, vc) = coord(v);
            let d = (ur - vr).abs() + (uc - vc).abs();
            *w = if d == 0 { 0.0 } else { (d as f64).powf(-exponent) };
            total += *w;
        }
        if total <= 0.0 {
            continue;
        }
        for _ in 0..long_links {
            let mut target = rng.random::<f64>() * total;
            let mut pick = n - 1;
            for (v, &w) in weights.iter().enumerate() {
                if target < w {
                    pick = v;
                    break;
                }
                target -= w;
            }
            if pick != u {
                set.insert(ordered(u, pick));
            }
        }
    }
    Graph::from_set(n, set)
}

/// Undirected edge list, one `u v` pair per line, `#` comments allowed.
pub fn load_edge_list(path: &Path) -> Result<Graph> {
    let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    let mut set = BTreeSet::new();
    let mut nodes = 0;
    for (idx, raw) in text.lines().enumerate() {
        let content = raw.split('#').next().unwrap_or("").trim();
        if content.is_empty() {
            continue;
        }
        let err = |message: String| Error::Parse {
            path: path.display().to_string(),
            line: idx + 1,
            message,
        };
        let fields: Vec<_> = content.split(|c: char| c.is_whitespace() || c == ',').filter(|s| !s.is_empty()).collect();
        if fields.len() != 2 {
            return Err(err(format!("expected `u v`, found {content:?}")));
        }
        let parse = |s: &str| s.parse::<usize>().map_err(|_| err(format!("bad node id {s:?}")));
        let (a, b) = (parse(fields[0])?, parse(fields[1])?);
        if a == b {
            return Err(err(format!("self loop on node {a}")));
        }
        nodes = nodes.max(a + 1).max(b + 1);
        set.insert(ordered(a, b));
    }
    Ok(Graph::from_set(nodes, set))
}
