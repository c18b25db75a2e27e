//! Frank-Wolfe variant over the down-closed relaxation `D′`.
//!
//! Starting from `y = 0`, every iteration moves a constant step `1/K`
//! towards the linear-maximization vertex of the current gradient, so the
//! output is the average of `K` vertices of `D′`. A final binding pass raises
//! routing complements until each request selects exactly one unit of paths.

use std::cmp::Ordering;

use crate::error::{Error, Result};
use crate::model::{DemandModel, NetworkInstance, StrategyPair, FEASIBILITY_TOL};
use crate::objective::ObjectiveContext;

/// Upper limit on the number of Frank-Wolfe iterations.
pub const MAX_FW_ITERATIONS: usize = 1_000_000;

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct FwConfig {
    /// `K`; the step is `γ = 1/K` and the steps sum to one.
    pub iterations: usize,
    /// Record `L(y_k, ψ)` after every step.
    pub record_trace: bool,
    /// Keep every iterate `y_k`.
    pub record_iterates: bool,
}

impl Default for FwConfig {
    fn default() -> Self {
        Self {
            iterations: 100,
            record_trace: false,
            record_iterates: false,
        }
    }
}

impl FwConfig {
    pub fn new(iterations: usize) -> Result<Self> {
        let cfg = Self {
            iterations,
            ..Self::default()
        };
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn validate(&self) -> Result<()> {
        if self.iterations == 0 || self.iterations > MAX_FW_ITERATIONS {
            return Err(Error::InvalidScenario(format!(
                "Frank-Wolfe iteration count {} outside 1..={MAX_FW_ITERATIONS}",
                self.iterations
            )));
        }
        Ok(())
    }
}

#[derive(Clone, Debug)]
pub struct FwOutput {
    /// Output after binding, a point of `D`.
    pub strategy: StrategyPair,
    /// `L(y_k, ψ)` for `k = 0..=K` when tracing is enabled, before binding.
    pub trace: Vec<f64>,
    /// `y_k` for `k = 0..=K` when requested, before binding.
    pub iterates: Vec<StrategyPair>,
}

/// Descending by value, ascending by index: a total order for ties.
fn by_gradient(g: &[f64]) -> impl Fn(&usize, &usize) -> Ordering + '_ {
    move |&a, &b| g[b].total_cmp(&g[a]).then(a.cmp(&b))
}

/// Indices (relative to `g`) of up to `budget` largest strictly positive
/// entries, ties broken by lowest index.
fn top_positive(g: &[f64], budget: usize, out: &mut Vec<usize>) {
    out.clear();
    if budget == 0 {
        return;
    }
    out.extend((0..g.len()).filter(|&i| g[i] > 0.0));
    if out.len() > budget {
        out.select_nth_unstable_by(budget - 1, by_gradient(g));
        out.truncate(budget);
    }
}

/// Writes the caching block of the `D′` maximizer of `⟨v, g⟩` into `v`.
fn lmo_caching(g: &[f64], instance: &NetworkInstance, v: &mut [f64], picks: &mut Vec<usize>) {
    let catalog = instance.catalog_size();
    v.fill(0.0);
    for node in 0..instance.num_nodes() {
        let row = node * catalog..(node + 1) * catalog;
        top_positive(&g[row.clone()], instance.cache_capacity(node) as usize, picks);
        for &i in picks.iter() {
            v[row.start + i] = 1.0;
        }
    }
}

/// Writes the routing block of the `D′` maximizer of `⟨v, g⟩` into `v`.
fn lmo_routing(g: &[f64], demand: &DemandModel, v: &mut [f64], picks: &mut Vec<usize>) {
    v.fill(0.0);
    for r in 0..demand.num_requests() {
        let range = demand.path_range(r);
        let budget = range.len() - 1;
        top_positive(&g[range.clone()], budget, picks);
        for &p in picks.iter() {
            v[range.start + p] = 1.0;
        }
    }
}

/// Exact maximizer of `⟨v, gradient⟩` over `D′`, a 0/1 vertex.
///
/// Each node caches the items with its `c_v` largest positive entries and
/// each request turns off the paths with its `|P| - 1` largest positive
/// routing-complement entries.
pub fn lmo(gradient: &[f64], instance: &NetworkInstance, demand: &DemandModel) -> StrategyPair {
    let cache_dim = instance.cache_dim();
    assert_eq!(gradient.len(), cache_dim + demand.total_paths());
    let mut v = StrategyPair::zeros(instance, demand);
    let mut picks = Vec::new();
    lmo_caching(&gradient[..cache_dim], instance, v.xi_mut(), &mut picks);
    lmo_routing(&gradient[cache_dim..], demand, v.rho_tilde_mut(), &mut picks);
    v
}

/// Runs the Frank-Wolfe variant for `L(·, ψ)` and binds the result into `D`.
pub fn frank_wolfe_variant(
    ctx: &ObjectiveContext<'_>,
    psi: &[f64],
    config: &FwConfig,
) -> Result<FwOutput> {
    config.validate()?;
    let mut out = run(ctx, psi, config, None)?;
    out.strategy = bind_routing(ctx, &out.strategy, psi);
    Ok(out)
}

/// Frank-Wolfe over the caching block only, with routing complements held
/// at `rho_tilde`. Cache capacities are the only constraints.
pub fn frank_wolfe_caching(
    ctx: &ObjectiveContext<'_>,
    rho_tilde: &[f64],
    psi: &[f64],
    config: &FwConfig,
) -> Result<StrategyPair> {
    config.validate()?;
    if rho_tilde.len() != ctx.demand().total_paths() {
        return Err(Error::Dimension {
            what: "routing complements",
            expected: ctx.demand().total_paths(),
            actual: rho_tilde.len(),
        });
    }
    Ok(run(ctx, psi, config, Some(rho_tilde))?.strategy)
}

fn run(
    ctx: &ObjectiveContext<'_>,
    psi: &[f64],
    config: &FwConfig,
    fixed_routing: Option<&[f64]>,
) -> Result<FwOutput> {
    let instance = ctx.instance();
    let demand = ctx.demand();
    let cache_dim = ctx.cache_dim();
    let k_total = config.iterations;
    let mut y = ctx.zeros();
    if let Some(rho) = fixed_routing {
        y.rho_tilde_mut().copy_from_slice(rho);
    }
    // y_k = counts / K keeps every coordinate exactly on the grid of 1/K.
    let mut counts = vec![0u32; ctx.dim()];
    let mut vertex = ctx.zeros();
    let mut picks = Vec::new();
    let mut trace = Vec::new();
    let mut iterates = Vec::new();
    if config.record_trace {
        trace.push(ctx.lagrangian(&y, psi)?);
    }
    if config.record_iterates {
        iterates.push(y.clone());
    }
    for _ in 0..k_total {
        let g = ctx.gradient(&y, psi);
        let g = g.as_slice();
        lmo_caching(&g[..cache_dim], instance, vertex.xi_mut(), &mut picks);
        let limit = if fixed_routing.is_some() {
            cache_dim
        } else {
            lmo_routing(&g[cache_dim..], demand, vertex.rho_tilde_mut(), &mut picks);
            ctx.dim()
        };
        let v = vertex.as_slice();
        let ys = y.as_mut_slice();
        for i in 0..limit {
            if v[i] == 1.0 {
                counts[i] += 1;
                ys[i] = counts[i] as f64 / k_total as f64;
            }
        }
        if config.record_trace {
            trace.push(ctx.lagrangian(&y, psi)?);
        }
        if config.record_iterates {
            iterates.push(y.clone());
        }
    }
    Ok(FwOutput {
        strategy: y,
        trace,
        iterates,
    })
}

/// Raises routing complements of requests with slack in `Σ(1-ρ̃) ≥ 1` until
/// it binds, in descending order of `∇L` (ties to the lower path index).
///
/// Within a request the partial derivatives of the routing complements do
/// not depend on one another, so a single gradient evaluation orders them.
pub fn bind_routing(ctx: &ObjectiveContext<'_>, y: &StrategyPair, psi: &[f64]) -> StrategyPair {
    let demand = ctx.demand();
    let mut out = y.clone();
    let needs_binding = (0..demand.num_requests()).any(|r| routing_slack(y, demand, r) > 0.0);
    if !needs_binding {
        return out;
    }
    let g = ctx.gradient(y, psi);
    let g_route = &g.as_slice()[ctx.cache_dim()..];
    let mut order = Vec::new();
    for r in 0..demand.num_requests() {
        let mut slack = routing_slack(y, demand, r);
        if slack <= 0.0 {
            continue;
        }
        let range = demand.path_range(r);
        let local = &g_route[range.clone()];
        order.clear();
        order.extend(0..range.len());
        order.sort_by(by_gradient(local));
        let rho = out.rho_tilde_mut();
        for &p in &order {
            let coord = range.start + p;
            let raise = (1.0 - rho[coord]).min(slack);
            if raise <= 0.0 {
                continue;
            }
            rho[coord] += raise;
            slack -= raise;
            if slack <= FEASIBILITY_TOL * 1e-3 {
                break;
            }
        }
    }
    out
}

/// `(|P| - 1) - Σ ρ̃`, positive when the request routes less than one unit.
fn routing_slack(y: &StrategyPair, demand: &DemandModel, r: usize) -> f64 {
    let range = demand.path_range(r);
    let budget = (range.len() - 1) as f64;
    let used: f64 = y.rho_tilde()[range].iter().sum();
    let slack = budget - used;
    if slack > FEASIBILITY_TOL * 1e-3 {
        slack
    } else {
        0.0
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::{validate_strategy, Edge, Path, Request, SetKind};

    fn star_instance() -> (NetworkInstance, DemandModel) {
        // 0 -> {1, 2, 3} -> 4 (server), three disjoint two-hop paths
        let mut edges = Vec::new();
        for (a, b) in [(0, 1), (0, 2), (0, 3), (1, 4), (2, 4), (3, 4)] {
            for (u, v) in [(a, b), (b, a)] {
                edges.push(Edge {
                    from: u,
                    to: v,
                    weight: 1.0 + (u + v) as f64,
                    capacity: f64::INFINITY,
                });
            }
        }
        let net = NetworkInstance::new(5, edges, 2, vec![vec![4], vec![4]], vec![1, 1, 0, 0, 0])
            .unwrap();
        let demand = DemandModel::new(
            &net,
            vec![Request {
                item: 0,
                source: 0,
                rate: 1.0,
            }],
            vec![vec![
                Path::new(vec![0, 1, 4]),
                Path::new(vec![0, 2, 4]),
                Path::new(vec![0, 3, 4]),
            ]],
        )
        .unwrap();
        (net, demand)
    }

    #[test]
    fn lmo_takes_top_cache_entry() {
        let (net, demand) = star_instance();
        let mut g = vec![0.0; net.cache_dim() + demand.total_paths()];
        g[net.xi_index(0, 0)] = 3.0;
        g[net.xi_index(0, 1)] = 5.0;
        let v = lmo(&g, &net, &demand);
        assert_eq!(v.xi()[net.xi_index(0, 0)], 0.0);
        assert_eq!(v.xi()[net.xi_index(0, 1)], 1.0);
    }

    #[test]
    fn lmo_routing_budget_skips_negatives() {
        let (net, demand) = star_instance();
        let mut g = vec![0.0; net.cache_dim() + 3];
        let base = net.cache_dim();
        g[base] = 2.0;
        g[base + 1] = -1.0;
        g[base + 2] = 4.0;
        let v = lmo(&g, &net, &demand);
        assert_eq!(v.rho_tilde(), &[1.0, 0.0, 1.0]);

        g[base + 2] = -4.0;
        let v = lmo(&g, &net, &demand);
        assert_eq!(v.rho_tilde(), &[1.0, 0.0, 0.0]);
    }

    #[test]
    fn lmo_ties_go_to_lowest_index() {
        let (net, demand) = star_instance();
        let mut g = vec![1.0; net.cache_dim() + 3];
        g[net.cache_dim() + 1] = 7.0;
        let v = lmo(&g, &net, &demand);
        assert_eq!(v.xi()[net.xi_index(0, 0)], 1.0);
        assert_eq!(v.xi()[net.xi_index(0, 1)], 0.0);
        assert_eq!(v.rho_tilde(), &[1.0, 1.0, 0.0]);
    }

    #[test]
    fn binding_raises_largest_gradient_first() {
        let net = NetworkInstance::new(
            4,
            [(0, 1, 1.0), (0, 2, 5.0), (1, 3, 1.0), (2, 3, 1.0)]
                .iter()
                .flat_map(|&(a, b, w)| {
                    [
                        Edge {
                            from: a,
                            to: b,
                            weight: w,
                            capacity: f64::INFINITY,
                        },
                        Edge {
                            from: b,
                            to: a,
                            weight: w,
                            capacity: f64::INFINITY,
                        },
                    ]
                })
                .collect(),
            1,
            vec![vec![3]],
            vec![0; 4],
        )
        .unwrap();
        let demand = DemandModel::new(
            &net,
            vec![Request {
                item: 0,
                source: 0,
                rate: 1.0,
            }],
            vec![vec![Path::new(vec![0, 1, 3]), Path::new(vec![0, 2, 3])]],
        )
        .unwrap();
        let ctx = ObjectiveContext::new(&net, &demand);
        let psi = vec![0.0; net.num_edges()];
        let bound = bind_routing(&ctx, &ctx.zeros(), &psi);
        // the second path is more expensive, so dropping it gains more
        assert_eq!(bound.rho_tilde(), &[0.0, 1.0]);
        let again = bind_routing(&ctx, &bound, &psi);
        assert_eq!(again, bound);
        assert!(validate_strategy(&net, &demand, &bound, SetKind::Exact)
            .unwrap()
            .is_feasible());
    }

    #[test]
    fn dominant_item_takes_all_mass() {
        let edges = vec![
            Edge {
                from: 0,
                to: 1,
                weight: 1.0,
                capacity: f64::INFINITY,
            },
            Edge {
                from: 1,
                to: 0,
                weight: 1.0,
                capacity: f64::INFINITY,
            },
        ];
        let net = NetworkInstance::new(2, edges, 2, vec![vec![1], vec![1]], vec![1, 0]).unwrap();
        let demand = DemandModel::new(
            &net,
            vec![
                Request {
                    item: 0,
                    source: 0,
                    rate: 1.0,
                },
                Request {
                    item: 1,
                    source: 0,
                    rate: 0.6,
                },
            ],
            vec![vec![Path::new(vec![0, 1])], vec![Path::new(vec![0, 1])]],
        )
        .unwrap();
        let ctx = ObjectiveContext::new(&net, &demand);
        let psi = vec![0.0; net.num_edges()];
        let out = frank_wolfe_variant(&ctx, &psi, &FwConfig::default()).unwrap();
        assert_eq!(out.strategy.xi()[net.xi_index(0, 0)], 1.0);
        assert_eq!(out.strategy.xi()[net.xi_index(0, 1)], 0.0);
    }

    #[test]
    fn zero_demand_gives_zero_gain() {
        let (net, _) = star_instance();
        let demand = DemandModel::empty();
        let ctx = ObjectiveContext::new(&net, &demand);
        let psi = vec![0.0; net.num_edges()];
        let out = frank_wolfe_variant(&ctx, &psi, &FwConfig::default()).unwrap();
        assert_eq!(ctx.cache_gain(&out.strategy), 0.0);
    }

    #[test]
    fn rejects_zero_iterations() {
        assert!(FwConfig::new(0).is_err());
    }
}
