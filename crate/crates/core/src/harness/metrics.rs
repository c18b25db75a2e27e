//! Feasibility metrics and the per-run result record.

use serde::{Deserialize, Serialize};

use crate::model::{NetworkInstance, StrategyPair};
use crate::objective::ObjectiveContext;

/// Reported InF and MaxInF for severe infeasibility.
pub const INF_SENTINEL: f64 = 1e6;

/// Average and maximum normalized positive overflow over edges that carry
/// flow. Edges with infinite capacity contribute zero; an edge with zero
/// capacity and positive flow yields the sentinel for both values.
pub fn compute_inf(ctx: &ObjectiveContext<'_>, y: &StrategyPair) -> (f64, f64) {
    inf_from_flows(ctx.instance(), &ctx.edge_flows(y))
}

pub fn inf_from_flows(instance: &NetworkInstance, flows: &[f64]) -> (f64, f64) {
    let mut active = 0usize;
    let mut sum = 0.0;
    let mut max: f64 = 0.0;
    for (edge, &flow) in instance.edges().iter().zip(flows) {
        if flow <= 0.0 {
            continue;
        }
        active += 1;
        let mu = edge.capacity;
        if mu.is_infinite() {
            continue;
        }
        if mu <= 0.0 {
            return (INF_SENTINEL, INF_SENTINEL);
        }
        let ratio = (flow - mu).max(0.0) / mu;
        sum += ratio;
        max = max.max(ratio);
    }
    if active == 0 {
        return (0.0, 0.0);
    }
    (sum / active as f64, max)
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum FeasibilityStatus {
    Feasible,
    Infeasible,
}

/// One row of the results table. Field order is the column order.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct MetricsRecord {
    pub algorithm: String,
    pub instance: String,
    /// Looseness of the instance, when generated with one.
    pub kappa: Option<f64>,
    pub gain: f64,
    pub normalized_gain: f64,
    pub inf: f64,
    pub max_inf: f64,
    pub iterations: usize,
    pub wall_seconds: f64,
    pub status: FeasibilityStatus,
}

/// Gain and feasibility of one strategy.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct RunMetrics {
    pub gain: f64,
    pub inf: f64,
    pub max_inf: f64,
    pub status: FeasibilityStatus,
}

/// Metrics of `y`; `failed` marks a run whose routing step found no
/// capacity-feasible solution, which reports the sentinel.
pub fn run_metrics(ctx: &ObjectiveContext<'_>, y: &StrategyPair, failed: bool) -> RunMetrics {
    let gain = ctx.cache_gain(y);
    let (inf, max_inf) = if failed {
        (INF_SENTINEL, INF_SENTINEL)
    } else {
        compute_inf(ctx, y)
    };
    let status = if inf >= INF_SENTINEL {
        FeasibilityStatus::Infeasible
    } else {
        FeasibilityStatus::Feasible
    };
    RunMetrics {
        gain,
        inf,
        max_inf,
        status,
    }
}
