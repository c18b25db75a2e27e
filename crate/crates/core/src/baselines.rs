//! Competitor pipelines: uniform or greedy caching composed with
//! LP-optimal routing, and alternating maximization.

use std::cmp::Ordering;
use std::collections::BinaryHeap;
use std::fmt;
use std::str::FromStr;
use std::time::Instant;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::fw::{frank_wolfe_caching, FwConfig};
use crate::harness::metrics::{compute_inf, INF_SENTINEL};
use crate::lp::{LinearProgram, LpStatus, RowKind};
use crate::model::{DemandModel, DualVector, NetworkInstance, StrategyPair};
use crate::objective::ObjectiveContext;
use crate::primal_dual::{IterationRecord, RunReport};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum BaselineKind {
    Random1,
    Random2,
    Greedy1,
    Greedy2,
    Alternating,
}

impl BaselineKind {
    pub const ALL: [BaselineKind; 5] = [
        BaselineKind::Random1,
        BaselineKind::Random2,
        BaselineKind::Greedy1,
        BaselineKind::Greedy2,
        BaselineKind::Alternating,
    ];

    pub fn name(self) -> &'static str {
        match self {
            BaselineKind::Random1 => "random1",
            BaselineKind::Random2 => "random2",
            BaselineKind::Greedy1 => "greedy1",
            BaselineKind::Greedy2 => "greedy2",
            BaselineKind::Alternating => "alternating",
        }
    }
}

impl fmt::Display for BaselineKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for BaselineKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        BaselineKind::ALL
            .into_iter()
            .find(|k| k.name().eq_ignore_ascii_case(s))
            .ok_or_else(|| Error::InvalidScenario(format!("unknown baseline {s:?}")))
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct BaselineConfig {
    /// Frank-Wolfe settings for the caching step of alternating maximization.
    pub fw: FwConfig,
    pub max_rounds: usize,
    pub gain_threshold: f64,
}

impl Default for BaselineConfig {
    fn default() -> Self {
        Self {
            fw: FwConfig::default(),
            max_rounds: 25,
            gain_threshold: 1e-3,
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct LpSolution {
    pub status: LpStatus,
    pub rho_tilde: Vec<f64>,
    /// Cache gain at the fixed caching and the returned routing.
    pub objective: f64,
}

/// Each node splits its capacity evenly over the distinct items that have a
/// request path through it, capped at one.
pub fn uniform_caching(instance: &NetworkInstance, demand: &DemandModel) -> Vec<f64> {
    let catalog = instance.catalog_size();
    let mut seen = vec![false; instance.cache_dim()];
    for (r, req) in demand.requests().iter().enumerate() {
        for p in demand.paths(r) {
            let nodes = p.nodes();
            for &v in &nodes[..nodes.len() - 1] {
                seen[v * catalog + req.item] = true;
            }
        }
    }
    let mut xi = vec![0.0; instance.cache_dim()];
    for v in 0..instance.num_nodes() {
        let row = v * catalog..(v + 1) * catalog;
        let count = seen[row.clone()].iter().filter(|&&s| s).count();
        if count == 0 {
            continue;
        }
        let share = (instance.cache_capacity(v) as f64 / count as f64).min(1.0);
        for j in row {
            if seen[j] {
                xi[j] = share;
            }
        }
    }
    xi
}

#[derive(PartialEq)]
struct Candidate {
    gain: f64,
    coord: usize,
}

impl Eq for Candidate {}

impl Ord for Candidate {
    fn cmp(&self, other: &Self) -> Ordering {
        self.gain
            .total_cmp(&other.gain)
            .then(other.coord.cmp(&self.coord))
    }
}

impl PartialOrd for Candidate {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

/// Greedy integral caching under fixed routing complements: repeatedly
/// caches the item with the largest positive marginal gain at a node with
/// room left. The gain is affine in each caching coordinate, so the partial
/// derivative is the exact marginal; diminishing returns make lazy
/// re-evaluation exact.
pub fn greedy_caching(ctx: &ObjectiveContext<'_>, rho_tilde: &[f64]) -> Vec<f64> {
    let instance = ctx.instance();
    let catalog = instance.catalog_size();
    let mut y = ctx.zeros();
    y.rho_tilde_mut().copy_from_slice(rho_tilde);
    let mut room: Vec<u32> = instance.cache_capacities().to_vec();
    let mut heap: BinaryHeap<Candidate> = (0..ctx.cache_dim())
        .filter(|&c| ctx.occurrences(c) > 0 && room[c / catalog] > 0)
        .map(|coord| Candidate {
            gain: ctx.coordinate_gradient(&y, coord, 1.0, &[]),
            coord,
        })
        .filter(|c| c.gain > 0.0)
        .collect();
    while let Some(top) = heap.pop() {
        let node = top.coord / catalog;
        if room[node] == 0 {
            continue;
        }
        let fresh = ctx.coordinate_gradient(&y, top.coord, 1.0, &[]);
        if fresh <= 0.0 {
            continue;
        }
        let candidate = Candidate {
            gain: fresh,
            coord: top.coord,
        };
        if heap.peek().is_some_and(|next| *next > candidate) {
            heap.push(candidate);
            continue;
        }
        y.xi_mut()[top.coord] = 1.0;
        room[node] -= 1;
    }
    y.xi().to_vec()
}

/// Routing that maximizes the cache gain under fixed caching, subject to
/// every link capacity.
pub fn optimal_routing(ctx: &ObjectiveContext<'_>, xi: &[f64]) -> Result<LpSolution> {
    let instance = ctx.instance();
    let demand = ctx.demand();
    if xi.len() != instance.cache_dim() {
        return Err(Error::Dimension {
            what: "caching strategy",
            expected: instance.cache_dim(),
            actual: xi.len(),
        });
    }
    let capacities = instance.capacities();
    let mut fixed_load = vec![0.0; instance.num_edges()];
    let mut var_of_path = vec![usize::MAX; demand.total_paths()];
    let mut num_vars = 0;
    for r in 0..demand.num_requests() {
        let range = demand.path_range(r);
        if range.len() > 1 {
            for p in range {
                var_of_path[p] = num_vars;
                num_vars += 1;
            }
        }
    }
    let mut lp = LinearProgram::new(num_vars);
    let mut edge_terms: Vec<Vec<(usize, f64)>> = vec![Vec::new(); instance.num_edges()];
    for (r, req) in demand.requests().iter().enumerate() {
        let range = demand.path_range(r);
        let free = range.len() > 1;
        for p in range.clone() {
            let (cost, loads) = ctx.path_profile(p, xi);
            if free {
                lp.objective[var_of_path[p]] = req.rate * cost;
            }
            for (edge, load) in loads {
                let amount = req.rate * load;
                if amount == 0.0 {
                    continue;
                }
                if free {
                    edge_terms[edge].push((var_of_path[p], amount));
                } else {
                    fixed_load[edge] += amount;
                }
            }
        }
        if free {
            lp.add_row(range.map(|p| (var_of_path[p], 1.0)).collect(), RowKind::Eq, 1.0);
        }
    }
    let infeasible = || LpSolution {
        status: LpStatus::Infeasible,
        rho_tilde: vec![0.0; demand.total_paths()],
        objective: f64::NAN,
    };
    for (edge, terms) in edge_terms.into_iter().enumerate() {
        let mu = capacities[edge];
        if mu.is_infinite() {
            continue;
        }
        let rhs = mu - fixed_load[edge];
        if terms.is_empty() {
            if rhs < -1e-9 * (1.0 + mu) {
                return Ok(infeasible());
            }
            continue;
        }
        lp.add_row(terms, RowKind::Le, rhs);
    }
    let res = lp.solve()?;
    match res.status {
        LpStatus::Optimal => {}
        LpStatus::Infeasible => return Ok(infeasible()),
        LpStatus::Unbounded => {
            return Err(Error::Lp("routing program reported unbounded".into()));
        }
    }
    let mut rho_tilde = vec![0.0; demand.total_paths()];
    for (p, &var) in var_of_path.iter().enumerate() {
        if var != usize::MAX {
            rho_tilde[p] = 1.0 - res.x[var].clamp(0.0, 1.0);
        }
    }
    let y = StrategyPair::from_parts(xi.to_vec(), rho_tilde);
    let objective = ctx.cache_gain(&y);
    let (_, rho_tilde) = y.into_parts();
    Ok(LpSolution {
        status: LpStatus::Optimal,
        rho_tilde,
        objective,
    })
}

/// Any routing in the exact set: every request uses its first path.
fn first_path_routing(demand: &DemandModel) -> Vec<f64> {
    let mut rho = vec![1.0; demand.total_paths()];
    for r in 0..demand.num_requests() {
        rho[demand.path_range(r).start] = 0.0;
    }
    rho
}

struct Outcome {
    strategy: StrategyPair,
    failed_step: Option<String>,
    records: Vec<IterationRecord>,
    converged: bool,
}

pub fn run_baseline(
    kind: BaselineKind,
    instance: &NetworkInstance,
    demand: &DemandModel,
    config: &BaselineConfig,
) -> Result<RunReport> {
    let start = Instant::now();
    let ctx = ObjectiveContext::new(instance, demand);
    let outcome = match kind {
        BaselineKind::Random1 => cache_then_route(&ctx, uniform_caching(instance, demand))?,
        BaselineKind::Greedy1 => {
            let xi = greedy_caching(&ctx, &vec![0.0; demand.total_paths()]);
            cache_then_route(&ctx, xi)?
        }
        BaselineKind::Random2 => route_then_cache(&ctx, |_, _| uniform_caching(instance, demand))?,
        BaselineKind::Greedy2 => route_then_cache(&ctx, |ctx, rho| greedy_caching(ctx, rho))?,
        BaselineKind::Alternating => alternate(&ctx, config)?,
    };
    let iterations = match kind {
        BaselineKind::Alternating => outcome.records.len(),
        _ => 1,
    };
    Ok(RunReport {
        algorithm: kind.name().into(),
        records: outcome.records,
        strategy: outcome.strategy,
        dual: DualVector::zeros(instance.num_edges()),
        converged: outcome.converged,
        iterations,
        wall_seconds: start.elapsed().as_secs_f64(),
        failed_step: outcome.failed_step,
        step_scale: 0.0,
        restarts: 0,
        iterates: Vec::new(),
    })
}

fn cache_then_route(ctx: &ObjectiveContext<'_>, xi: Vec<f64>) -> Result<Outcome> {
    let lp = optimal_routing(ctx, &xi)?;
    Ok(match lp.status {
        LpStatus::Optimal => Outcome {
            strategy: StrategyPair::from_parts(xi, lp.rho_tilde),
            failed_step: None,
            records: Vec::new(),
            converged: true,
        },
        _ => Outcome {
            strategy: StrategyPair::from_parts(xi, first_path_routing(ctx.demand())),
            failed_step: Some("routing after caching".into()),
            records: Vec::new(),
            converged: false,
        },
    })
}

fn route_then_cache(
    ctx: &ObjectiveContext<'_>,
    cache: impl Fn(&ObjectiveContext<'_>, &[f64]) -> Vec<f64>,
) -> Result<Outcome> {
    let empty = vec![0.0; ctx.cache_dim()];
    let lp = optimal_routing(ctx, &empty)?;
    if lp.status != LpStatus::Optimal {
        let rho = first_path_routing(ctx.demand());
        let xi = cache(ctx, &rho);
        return Ok(Outcome {
            strategy: StrategyPair::from_parts(xi, rho),
            failed_step: Some("routing under empty caches".into()),
            records: Vec::new(),
            converged: false,
        });
    }
    let xi = cache(ctx, &lp.rho_tilde);
    Ok(Outcome {
        strategy: StrategyPair::from_parts(xi, lp.rho_tilde),
        failed_step: None,
        records: Vec::new(),
        converged: true,
    })
}

/// Alternates Frank-Wolfe caching under fixed routing with LP routing under
/// fixed caching. The best feasible pair seen so far is kept, so the
/// reported gain never decreases across rounds.
fn alternate(ctx: &ObjectiveContext<'_>, config: &BaselineConfig) -> Result<Outcome> {
    let demand = ctx.demand();
    let zero_psi = vec![0.0; ctx.instance().num_edges()];
    let mut rho = vec![0.0; demand.total_paths()];
    let mut best: Option<(StrategyPair, f64)> = None;
    let mut records = Vec::new();
    let mut converged = false;
    for round in 0..config.max_rounds {
        let cached = frank_wolfe_caching(ctx, &rho, &zero_psi, &config.fw)?;
        let (xi, _) = cached.into_parts();
        let lp = optimal_routing(ctx, &xi)?;
        if lp.status != LpStatus::Optimal {
            if best.is_none() {
                records.push(IterationRecord {
                    t: round,
                    gain: 0.0,
                    lagrangian: 0.0,
                    inf: INF_SENTINEL,
                    max_inf: INF_SENTINEL,
                    dual_norm: 0.0,
                });
                return Ok(Outcome {
                    strategy: StrategyPair::from_parts(xi, first_path_routing(demand)),
                    failed_step: Some(format!("routing in round {round}")),
                    records,
                    converged: false,
                });
            }
            break;
        }
        let y = StrategyPair::from_parts(xi, lp.rho_tilde.clone());
        let gain = lp.objective;
        let previous = best.as_ref().map(|b| b.1);
        if previous.is_none_or(|p| gain > p) {
            best = Some((y, gain));
        }
        let (kept, kept_gain) = best.as_ref().expect("set above");
        let (inf, max_inf) = compute_inf(ctx, kept);
        records.push(IterationRecord {
            t: round,
            gain: *kept_gain,
            lagrangian: *kept_gain,
            inf,
            max_inf,
            dual_norm: 0.0,
        });
        if previous.is_some_and(|p| (kept_gain - p).abs() < config.gain_threshold) {
            converged = true;
            break;
        }
        rho = lp.rho_tilde;
    }
    let (strategy, _) = best.expect("at least one round ran");
    Ok(Outcome {
        strategy,
        failed_step: None,
        records,
        converged,
    })
}
