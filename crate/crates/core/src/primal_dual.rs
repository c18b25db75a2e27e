//! Lagrangian primal-dual iteration with momentum primal steps.

use std::time::Instant;

use log::{info, warn};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::fw::{bind_routing, frank_wolfe_variant, lmo, FwConfig};
use crate::harness::metrics::inf_from_flows;
use crate::model::{DemandModel, DualVector, NetworkInstance, StrategyPair};
use crate::objective::ObjectiveContext;

/// Added to the overflow sum when choosing the adaptive dual step scale.
pub const STEP_SCALE_EPS: f64 = 1e-9;

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub enum StepScale {
    /// `c = F(y₁) / (Σ max(G(y₁), 0) + ε)`, halved and restarted whenever the
    /// Lagrangian turns negative.
    Adaptive { max_restarts: usize },
    Fixed(f64),
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct PdConfig {
    pub max_iterations: usize,
    pub step_scale: StepScale,
    pub inf_threshold: f64,
    pub gain_threshold: f64,
    pub fw: FwConfig,
    pub momentum: bool,
    /// Stop at the first iterate meeting both thresholds.
    pub stop_on_convergence: bool,
    /// Keep every primal iterate in the report.
    pub keep_iterates: bool,
}

impl Default for PdConfig {
    fn default() -> Self {
        Self {
            max_iterations: 1000,
            step_scale: StepScale::Adaptive { max_restarts: 40 },
            inf_threshold: 1e-3,
            gain_threshold: 1e-3,
            fw: FwConfig::default(),
            momentum: true,
            stop_on_convergence: true,
            keep_iterates: false,
        }
    }
}

impl PdConfig {
    pub fn validate(&self) -> Result<()> {
        let bad = |msg: String| Err(Error::InvalidScenario(msg));
        if let StepScale::Fixed(c) = self.step_scale {
            if !(c > 0.0 && c.is_finite()) {
                return bad(format!("dual step scale must be positive, got {c}"));
            }
        }
        if !(self.inf_threshold > 0.0 && self.gain_threshold > 0.0) {
            return bad("convergence thresholds must be positive".into());
        }
        self.fw.validate()
    }

    /// `α_t`, the weight of the new Frank-Wolfe point.
    pub fn momentum_weight(&self, t: usize) -> f64 {
        if self.momentum {
            2.0 / (t as f64 + 2.0)
        } else {
            1.0
        }
    }
}

/// `β_t = c/√t`, with `β_0 = c`.
pub fn dual_step_size(c: f64, t: usize) -> f64 {
    if t == 0 {
        c
    } else {
        c / (t as f64).sqrt()
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct IterationRecord {
    pub t: usize,
    pub gain: f64,
    pub lagrangian: f64,
    pub inf: f64,
    pub max_inf: f64,
    pub dual_norm: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RunReport {
    pub algorithm: String,
    pub records: Vec<IterationRecord>,
    pub strategy: StrategyPair,
    pub dual: DualVector,
    pub converged: bool,
    pub iterations: usize,
    pub wall_seconds: f64,
    /// Set when a routing step found no capacity-feasible solution.
    pub failed_step: Option<String>,
    /// Dual step scale actually used.
    pub step_scale: f64,
    pub restarts: usize,
    #[serde(skip)]
    pub iterates: Vec<StrategyPair>,
}

/// `α_t · y_FW + (1 - α_t) · y_t` where `y_FW` maximizes `L(·, ψ_t)`.
pub fn primal_step(
    ctx: &ObjectiveContext<'_>,
    y: &StrategyPair,
    psi: &[f64],
    t: usize,
    config: &PdConfig,
) -> Result<StrategyPair> {
    let target = frank_wolfe_variant(ctx, psi, &config.fw)?.strategy;
    let mut next = y.clone();
    next.blend_towards(&target, config.momentum_weight(t));
    Ok(next)
}

/// Projected dual ascent `ψ ← [ψ + β_t G(y)]⁺`.
pub fn dual_step(overflows: &[f64], psi: &[f64], c: f64, t: usize) -> Vec<f64> {
    let beta = dual_step_size(c, t);
    psi.iter()
        .zip(overflows)
        .map(|(&p, &g)| {
            let v = p + beta * g;
            if v > 0.0 {
                v
            } else {
                0.0
            }
        })
        .collect()
}

enum Attempt {
    Done(RunReport),
    NegativeLagrangian(usize),
}

pub fn run_primal_dual(
    instance: &NetworkInstance,
    demand: &DemandModel,
    config: &PdConfig,
) -> Result<RunReport> {
    config.validate()?;
    let start = Instant::now();
    let ctx = ObjectiveContext::new(instance, demand);
    let zero_psi = vec![0.0; instance.num_edges()];
    let y0 = bind_routing(&ctx, &lmo(ctx.gain_gradient(&ctx.zeros()).as_slice(), instance, demand), &zero_psi);

    let (mut c, max_restarts) = match config.step_scale {
        StepScale::Fixed(c) => (c, 0),
        StepScale::Adaptive { max_restarts } => {
            let y1 = primal_step(&ctx, &y0, &zero_psi, 0, config)?;
            let eval = ctx.evaluate(&y1);
            let excess: f64 = ctx
                .overflows_from_flows(&eval.flows)
                .iter()
                .filter(|g| g.is_finite())
                .map(|g| g.max(0.0))
                .sum();
            let c = eval.gain / (excess + STEP_SCALE_EPS);
            let c = if c > 0.0 && c.is_finite() { c } else { 1.0 };
            info!("adaptive dual step scale c = {c:.6e}");
            (c, max_restarts)
        }
    };
    let mut restarts = 0;
    loop {
        let check_sign = restarts < max_restarts;
        match attempt(&ctx, &y0, c, config, check_sign)? {
            Attempt::Done(mut report) => {
                report.restarts = restarts;
                report.step_scale = c;
                report.wall_seconds = start.elapsed().as_secs_f64();
                return Ok(report);
            }
            Attempt::NegativeLagrangian(t) => {
                restarts += 1;
                c *= 0.5;
                info!("Lagrangian negative at iteration {t}; restarting with c = {c:.6e}");
                if restarts == max_restarts {
                    warn!("restart cap {max_restarts} reached; keeping c = {c:.6e}");
                }
            }
        }
    }
}

fn attempt(
    ctx: &ObjectiveContext<'_>,
    y0: &StrategyPair,
    c: f64,
    config: &PdConfig,
    check_sign: bool,
) -> Result<Attempt> {
    let instance = ctx.instance();
    let mut y = y0.clone();
    let mut psi = vec![0.0; instance.num_edges()];
    let mut records = Vec::with_capacity(config.max_iterations.min(4096));
    let mut iterates = Vec::new();
    let mut converged = false;
    let mut prev_gain = None;
    for t in 0..config.max_iterations {
        y = primal_step(ctx, &y, &psi, t, config)?;
        let eval = ctx.evaluate(&y);
        let overflows = ctx.overflows_from_flows(&eval.flows);
        psi = dual_step(&overflows, &psi, c, t);
        let lagrangian = ctx.lagrangian_from(&eval, &psi);
        if check_sign && lagrangian < 0.0 {
            return Ok(Attempt::NegativeLagrangian(t));
        }
        let (inf, max_inf) = inf_from_flows(instance, &eval.flows);
        records.push(IterationRecord {
            t,
            gain: eval.gain,
            lagrangian,
            inf,
            max_inf,
            dual_norm: psi.iter().map(|p| p * p).sum::<f64>().sqrt(),
        });
        if config.keep_iterates {
            iterates.push(y.clone());
        }
        let stable = prev_gain.is_some_and(|p: f64| (eval.gain - p).abs() < config.gain_threshold);
        prev_gain = Some(eval.gain);
        if stable && inf <= config.inf_threshold {
            converged = true;
            if config.stop_on_convergence {
                break;
            }
        } else if !config.stop_on_convergence {
            converged = false;
        }
    }
    let dual = DualVector::new(psi)?;
    Ok(Attempt::Done(RunReport {
        algorithm: "primaldual".into(),
        iterations: records.len(),
        records,
        strategy: y,
        dual,
        converged,
        wall_seconds: 0.0,
        failed_step: None,
        step_scale: c,
        restarts: 0,
        iterates,
    }))
}
