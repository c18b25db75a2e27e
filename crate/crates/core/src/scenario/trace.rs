//! Request traces: `item_id, node_id, count` records.

use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::fs;
use std::path::Path;

use log::warn;
use rand::Rng;
use rand_chacha::ChaCha8Rng;
use rand_distr::Zipf;

use crate::error::{Error, Result};
use crate::model::{DemandModel, NetworkInstance, NodeId, Request};
use crate::scenario::paths::{generate_paths, PathOptions};

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct TraceRecord {
    pub item: usize,
    pub node: NodeId,
    pub count: u64,
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct TraceOptions {
    /// Keep only the most frequent records.
    pub top: Option<usize>,
    /// Multiplier applied to every finite link capacity.
    pub capacity_scale: f64,
    pub paths: PathOptions,
}

impl Default for TraceOptions {
    fn default() -> Self {
        Self {
            top: None,
            capacity_scale: 1.0,
            paths: PathOptions::default(),
        }
    }
}

pub fn parse_trace(text: &str, origin: &str) -> Result<Vec<TraceRecord>> {
    let mut out = Vec::new();
    for (idx, raw) in text.lines().enumerate() {
        let content = raw.split('#').next().unwrap_or("").trim();
        if content.is_empty() {
            continue;
        }
        let err = |message: String| Error::Parse {
            path: origin.to_string(),
            line: idx + 1,
            message,
        };
        let fields: Vec<&str> = content.split(',').map(str::trim).collect();
        if fields.len() != 3 {
            return Err(err(format!("expected `item_id, node_id, count`, found {content:?}")));
        }
        let parse = |s: &str| s.parse::<u64>().map_err(|_| err(format!("cannot parse {s:?}")));
        let record = TraceRecord {
            item: parse(fields[0])? as usize,
            node: parse(fields[1])? as usize,
            count: parse(fields[2])?,
        };
        if record.count == 0 {
            return Err(err("counts must be positive".into()));
        }
        out.push(record);
    }
    Ok(out)
}

pub fn read_trace(path: &Path) -> Result<Vec<TraceRecord>> {
    let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    parse_trace(&text, &path.display().to_string())
}

pub fn write_trace(records: &[TraceRecord], path: &Path) -> Result<()> {
    let mut out = String::new();
    for r in records {
        let _ = writeln!(out, "{}, {}, {}", r.item, r.node, r.count);
    }
    fs::write(path, out).map_err(|e| Error::io(path, e))
}

/// Requests from trace records: duplicates are merged, pairs whose source is
/// a server are dropped, the `top` most frequent survive, and rates are
/// counts divided by the largest count. Ordered by decreasing count.
pub fn trace_requests(instance: &NetworkInstance, records: &[TraceRecord], top: Option<usize>) -> Result<Vec<Request>> {
    let mut merged: BTreeMap<(usize, NodeId), u64> = BTreeMap::new();
    for r in records {
        if r.item >= instance.catalog_size() || r.node >= instance.num_nodes() {
            return Err(Error::InvalidDemand(format!(
                "trace record ({}, {}) outside the instance",
                r.item, r.node
            )));
        }
        *merged.entry((r.item, r.node)).or_default() += r.count;
    }
    let mut pairs: Vec<((usize, NodeId), u64)> = merged
        .into_iter()
        .filter(|&((i, s), _)| {
            let ok = !instance.is_server(i, s);
            if !ok {
                warn!("dropping trace record for item {i} at its server {s}");
            }
            ok
        })
        .collect();
    pairs.sort_by(|a, b| b.1.cmp(&a.1).then(a.0.cmp(&b.0)));
    if let Some(n) = top {
        pairs.truncate(n);
    }
    let max = pairs.first().map_or(1, |p| p.1) as f64;
    Ok(pairs
        .into_iter()
        .map(|((item, source), count)| Request {
            item,
            source,
            rate: count as f64 / max,
        })
        .collect())
}

/// Demand and rescaled instance for a trace.
pub fn load_trace(
    path: &Path,
    instance: &NetworkInstance,
    options: &TraceOptions,
) -> Result<(NetworkInstance, DemandModel)> {
    let records = read_trace(path)?;
    trace_demand(instance, &records, options)
}

pub fn trace_demand(
    instance: &NetworkInstance,
    records: &[TraceRecord],
    options: &TraceOptions,
) -> Result<(NetworkInstance, DemandModel)> {
    let requests = trace_requests(instance, records, options.top)?;
    let scaled: Vec<f64> = instance
        .capacities()
        .iter()
        .map(|&mu| if mu.is_finite() { mu * options.capacity_scale } else { mu })
        .collect();
    let instance = instance.clone().with_capacities(&scaled)?;
    let (requests, paths) = generate_paths(&instance, requests, &options.paths);
    let demand = DemandModel::new(&instance, requests, paths)?;
    Ok((instance, demand))
}

/// `draws` requests sampled with Zipf popularity over `pairs` (the first
/// pair is the most popular), aggregated into records.
pub fn synthesize_trace(
    pairs: &[(usize, NodeId)],
    draws: usize,
    exponent: f64,
    rng: &mut ChaCha8Rng,
) -> Result<Vec<TraceRecord>> {
    if pairs.is_empty() {
        return Ok(Vec::new());
    }
    let zipf = Zipf::new(pairs.len() as f64, exponent)
        .map_err(|e| Error::InvalidScenario(format!("Zipf parameters: {e}")))?;
    let mut counts = vec![0u64; pairs.len()];
    for _ in 0..draws {
        let rank: f64 = rng.sample(zipf);
        counts[rank as usize - 1] += 1;
    }
    Ok(pairs
        .iter()
        .zip(counts)
        .filter(|(_, c)| *c > 0)
        .map(|(&(item, node), count)| TraceRecord { item, node, count })
        .collect())
}
