//! Query nodes, request pairs and Zipf rates.

use rand::seq::index::sample;
use rand::seq::SliceRandom;
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};
use crate::model::{NetworkInstance, NodeId, Request};

/// Rate of the request with popularity rank `rank` (1-based), normalized so
/// that rank 1 has rate one.
pub fn zipf_rate(rank: usize, exponent: f64) -> f64 {
    (rank as f64).powf(-exponent)
}

/// `count` distinct nodes drawn uniformly, in ascending order.
pub fn query_nodes(instance: &NetworkInstance, count: usize, rng: &mut ChaCha8Rng) -> Result<Vec<NodeId>> {
    let n = instance.num_nodes();
    if count > n {
        return Err(Error::InvalidScenario(format!(
            "{count} query nodes requested from {n} nodes"
        )));
    }
    let mut q = sample(rng, n, count).into_vec();
    q.sort_unstable();
    Ok(q)
}

/// All `(item, source)` pairs with a query-node source that is not a server
/// of the item, in item-major order.
pub fn candidate_pairs(instance: &NetworkInstance, queries: &[NodeId]) -> Vec<(usize, NodeId)> {
    (0..instance.catalog_size())
        .flat_map(|i| queries.iter().map(move |&s| (i, s)))
        .filter(|&(i, s)| !instance.is_server(i, s))
        .collect()
}

/// `count` distinct pairs drawn uniformly from `candidates`, each given a
/// Zipf rate by a uniformly random popularity rank.
pub fn zipf_requests(
    candidates: &[(usize, NodeId)],
    count: usize,
    exponent: f64,
    rng: &mut ChaCha8Rng,
) -> Result<Vec<Request>> {
    if count > candidates.len() {
        return Err(Error::InvalidScenario(format!(
            "{count} requests exceed the {} available (item, source) pairs",
            candidates.len()
        )));
    }
    let mut picks = sample(rng, candidates.len(), count).into_vec();
    picks.sort_unstable();
    let mut ranks: Vec<usize> = (1..=count).collect();
    ranks.shuffle(rng);
    Ok(picks
        .into_iter()
        .zip(ranks)
        .map(|(k, rank)| {
            let (item, source) = candidates[k];
            Request {
                item,
                source,
                rate: zipf_rate(rank, exponent),
            }
        })
        .collect())
}
