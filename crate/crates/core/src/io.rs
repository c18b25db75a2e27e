//! Instance and strategy files.
//!
//! The line-oriented text format has one record per line; `#` starts a
//! comment and blank lines are ignored:
//!
//! ```text
//! nodes <count>
//! catalog <count>
//! edge <u> <v> <weight> <capacity|inf>
//! cache <v> <slots>
//! server <item> <v>
//! request <item> <source> <rate>
//! path <request index> <v1> <v2> ... <vk>
//! ```
//!
//! Every directed edge is listed separately. Nodes without a `cache` record
//! have no cache. Requests are indexed in order of appearance. Files ending
//! in `.json` use the equivalent JSON document instead.

use std::fmt::Write as _;
use std::fs;
use std::path::Path as FsPath;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::model::{DemandModel, Edge, NetworkInstance, NodeId, Path, Request, StrategyPair};

/// A network instance with its demand.
#[derive(Clone, Debug, PartialEq)]
pub struct Problem {
    pub instance: NetworkInstance,
    pub demand: DemandModel,
}

#[derive(Serialize, Deserialize)]
struct Document {
    nodes: usize,
    catalog: usize,
    edges: Vec<Edge>,
    caches: Vec<u32>,
    servers: Vec<Vec<NodeId>>,
    requests: Vec<Request>,
    paths: Vec<Vec<Path>>,
}

impl Problem {
    pub fn new(instance: NetworkInstance, demand: DemandModel) -> Self {
        Self { instance, demand }
    }

    pub fn to_text(&self) -> String {
        let net = &self.instance;
        let mut out = String::new();
        let _ = writeln!(out, "nodes {}", net.num_nodes());
        let _ = writeln!(out, "catalog {}", net.catalog_size());
        for e in net.edges() {
            let _ = writeln!(out, "edge {} {} {} {}", e.from, e.to, e.weight, fmt_capacity(e.capacity));
        }
        for (v, &c) in net.cache_capacities().iter().enumerate() {
            if c > 0 {
                let _ = writeln!(out, "cache {v} {c}");
            }
        }
        for i in 0..net.catalog_size() {
            for &v in net.servers(i) {
                let _ = writeln!(out, "server {i} {v}");
            }
        }
        for r in self.demand.requests() {
            let _ = writeln!(out, "request {} {} {}", r.item, r.source, r.rate);
        }
        for r in 0..self.demand.num_requests() {
            for p in self.demand.paths(r) {
                let _ = write!(out, "path {r}");
                for v in p.nodes() {
                    let _ = write!(out, " {v}");
                }
                out.push('\n');
            }
        }
        out
    }

    pub fn parse_text(text: &str, origin: &str) -> Result<Self> {
        let mut nodes = None;
        let mut catalog = None;
        let mut edges = Vec::new();
        let mut caches: Vec<(usize, u32)> = Vec::new();
        let mut servers: Vec<(usize, NodeId)> = Vec::new();
        let mut requests = Vec::new();
        let mut paths: Vec<(usize, Vec<NodeId>, usize)> = Vec::new();
        for (idx, raw) in text.lines().enumerate() {
            let line = idx + 1;
            let content = raw.split('#').next().unwrap_or("").trim();
            if content.is_empty() {
                continue;
            }
            let err = |message: String| Error::Parse {
                path: origin.to_string(),
                line,
                message,
            };
            let mut fields = content.split_whitespace();
            let keyword = fields.next().unwrap_or_default();
            let args: Vec<&str> = fields.collect();
            let arity = |n: usize| {
                if args.len() == n {
                    Ok(())
                } else {
                    Err(err(format!("`{keyword}` takes {n} fields, found {}", args.len())))
                }
            };
            let num = |s: &str| parse_field::<usize>(s).map_err(&err);
            match keyword {
                "nodes" => {
                    arity(1)?;
                    nodes = Some(num(args[0])?);
                }
                "catalog" => {
                    arity(1)?;
                    catalog = Some(num(args[0])?);
                }
                "edge" => {
                    arity(4)?;
                    let capacity = if args[3] == "inf" {
                        f64::INFINITY
                    } else {
                        parse_field::<f64>(args[3]).map_err(&err)?
                    };
                    edges.push(Edge {
                        from: num(args[0])?,
                        to: num(args[1])?,
                        weight: parse_field::<f64>(args[2]).map_err(&err)?,
                        capacity,
                    });
                }
                "cache" => {
                    arity(2)?;
                    caches.push((num(args[0])?, parse_field::<u32>(args[1]).map_err(&err)?));
                }
                "server" => {
                    arity(2)?;
                    servers.push((num(args[0])?, num(args[1])?));
                }
                "request" => {
                    arity(3)?;
                    requests.push(Request {
                        item: num(args[0])?,
                        source: num(args[1])?,
                        rate: parse_field::<f64>(args[2]).map_err(&err)?,
                    });
                }
                "path" => {
                    if args.len() < 3 {
                        return Err(err("`path` needs a request index and at least two nodes".into()));
                    }
                    let nodes = args[1..].iter().map(|s| num(s)).collect::<Result<Vec<_>>>()?;
                    paths.push((num(args[0])?, nodes, line));
                }
                other => return Err(err(format!("unknown record `{other}`"))),
            }
        }
        let missing = |what: &str| Error::Parse {
            path: origin.to_string(),
            line: 0,
            message: format!("missing `{what}` record"),
        };
        let nodes = nodes.ok_or_else(|| missing("nodes"))?;
        let catalog = catalog.ok_or_else(|| missing("catalog"))?;
        let mut cache_caps = vec![0u32; nodes];
        for (v, c) in caches {
            if v >= nodes {
                return Err(Error::InvalidNetwork(format!("cache record for unknown node {v}")));
            }
            cache_caps[v] = c;
        }
        let mut server_sets = vec![Vec::new(); catalog];
        for (i, v) in servers {
            if i >= catalog {
                return Err(Error::InvalidNetwork(format!("server record for unknown item {i}")));
            }
            server_sets[i].push(v);
        }
        let instance = NetworkInstance::new(nodes, edges, catalog, server_sets, cache_caps)?;
        let mut path_sets = vec![Vec::new(); requests.len()];
        for (r, nodes, line) in paths {
            if r >= requests.len() {
                return Err(Error::Parse {
                    path: origin.to_string(),
                    line,
                    message: format!("path for unknown request {r}"),
                });
            }
            path_sets[r].push(Path::new(nodes));
        }
        let demand = DemandModel::new(&instance, requests, path_sets)?;
        Ok(Self { instance, demand })
    }

    pub fn to_json(&self) -> Result<String> {
        let net = &self.instance;
        let doc = Document {
            nodes: net.num_nodes(),
            catalog: net.catalog_size(),
            edges: net.edges().to_vec(),
            caches: net.cache_capacities().to_vec(),
            servers: (0..net.catalog_size()).map(|i| net.servers(i).to_vec()).collect(),
            requests: self.demand.requests().to_vec(),
            paths: self.demand.path_sets().to_vec(),
        };
        Ok(serde_json::to_string_pretty(&doc)?)
    }

    pub fn parse_json(text: &str) -> Result<Self> {
        let doc: Document = serde_json::from_str(text)?;
        let instance = NetworkInstance::new(doc.nodes, doc.edges, doc.catalog, doc.servers, doc.caches)?;
        let demand = DemandModel::new(&instance, doc.requests, doc.paths)?;
        Ok(Self { instance, demand })
    }

    pub fn load(path: impl AsRef<FsPath>) -> Result<Self> {
        let path = path.as_ref();
        let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        if is_json(path) {
            Self::parse_json(&text)
        } else {
            Self::parse_text(&text, &path.display().to_string())
        }
    }

    pub fn save(&self, path: impl AsRef<FsPath>) -> Result<()> {
        let path = path.as_ref();
        let text = if is_json(path) {
            self.to_json()?
        } else {
            self.to_text()
        };
        fs::write(path, text).map_err(|e| Error::io(path, e))
    }
}

fn is_json(path: &FsPath) -> bool {
    path.extension().is_some_and(|e| e.eq_ignore_ascii_case("json"))
}

fn fmt_capacity(mu: f64) -> String {
    if mu.is_infinite() {
        "inf".into()
    } else {
        mu.to_string()
    }
}

fn parse_field<T: FromStr>(s: &str) -> std::result::Result<T, String> {
    s.parse::<T>().map_err(|_| format!("cannot parse {s:?}"))
}

pub fn save_strategy(y: &StrategyPair, path: impl AsRef<FsPath>) -> Result<()> {
    let path = path.as_ref();
    let text = serde_json::to_string(y)?;
    fs::write(path, text).map_err(|e| Error::io(path, e))
}

pub fn load_strategy(path: impl AsRef<FsPath>) -> Result<StrategyPair> {
    let path = path.as_ref();
    let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    Ok(serde_json::from_str(&text)?)
}
