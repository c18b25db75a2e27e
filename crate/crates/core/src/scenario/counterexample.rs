//! Small instance on which every decoupled baseline fails to find a
//! capacity-feasible solution while the primal-dual method succeeds.
//!
//! The instance was found by `examples/counterexample_search.rs` and is
//! stored as a fixture; the integration tests certify it independently.

use crate::baselines::{optimal_routing, run_baseline, BaselineConfig, BaselineKind};
use crate::error::Result;
use crate::harness::metrics::{run_metrics, INF_SENTINEL};
use crate::io::Problem;
use crate::lp::LpStatus;
use crate::objective::ObjectiveContext;
use crate::primal_dual::{run_primal_dual, PdConfig};

pub const FIXTURE: &str = include_str!("../../fixtures/counterexample.txt");

pub fn build_counterexample() -> Result<Problem> {
    Problem::parse_text(FIXTURE, "fixtures/counterexample.txt")
}

/// Which behaviours an instance exhibits.
#[derive(Clone, Debug, Default, PartialEq)]
pub struct FailureModes {
    /// Routing under empty caches is infeasible (first step of the
    /// route-then-cache pipelines).
    pub empty_cache_routing_infeasible: bool,
    pub random1_fails: bool,
    pub greedy1_fails: bool,
    pub alternating_fails: bool,
    pub random2_fails: bool,
    pub greedy2_fails: bool,
    pub primal_dual_inf: f64,
    pub primal_dual_gain: f64,
    pub primal_dual_converged: bool,
}

impl FailureModes {
    pub fn all_hold(&self) -> bool {
        self.empty_cache_routing_infeasible
            && self.random1_fails
            && self.greedy1_fails
            && self.alternating_fails
            && self.random2_fails
            && self.greedy2_fails
            && self.primal_dual_converged
            && self.primal_dual_inf == 0.0
            && self.primal_dual_gain > 0.0
    }
}

pub fn failure_modes(problem: &Problem, pd: &PdConfig) -> Result<FailureModes> {
    let (instance, demand) = (&problem.instance, &problem.demand);
    let ctx = ObjectiveContext::new(instance, demand);
    let empty = optimal_routing(&ctx, &vec![0.0; instance.cache_dim()])?;
    let cfg = BaselineConfig::default();
    let fails = |kind| -> Result<bool> {
        let report = run_baseline(kind, instance, demand, &cfg)?;
        let m = run_metrics(&ctx, &report.strategy, report.failed_step.is_some());
        Ok(m.inf >= INF_SENTINEL)
    };
    let report = run_primal_dual(instance, demand, pd)?;
    let m = run_metrics(&ctx, &report.strategy, false);
    Ok(FailureModes {
        empty_cache_routing_infeasible: empty.status == LpStatus::Infeasible,
        random1_fails: fails(BaselineKind::Random1)?,
        greedy1_fails: fails(BaselineKind::Greedy1)?,
        alternating_fails: fails(BaselineKind::Alternating)?,
        random2_fails: fails(BaselineKind::Random2)?,
        greedy2_fails: fails(BaselineKind::Greedy2)?,
        primal_dual_inf: m.inf,
        primal_dual_gain: m.gain,
        primal_dual_converged: report.converged,
    })
}
