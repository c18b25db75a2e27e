//! Random search for a small instance on which every decoupled baseline is
//! infeasible while the primal-dual method reaches zero infeasibility. A hit
//! must also overflow some link at the unpenalized Frank-Wolfe point, so the
//! multipliers are exercised, and the momentum run must end with a smaller
//! late-stage spread of the gain and no more infeasibility than the run
//! without momentum.
//!
//! Usage: `cargo run --release --example counterexample_search -- [start] [count]`
//! Prints the first hit in the instance text format and, on stderr, how many
//! candidates reached each filter.

use std::collections::BTreeSet;

use cachenet::io::Problem;
use cachenet::model::{DemandModel, Edge, NetworkInstance, Request};
use std::sync::atomic::{AtomicUsize, Ordering};

use cachenet::fw::frank_wolfe_variant;
use cachenet::harness::compute_inf;
use cachenet::primal_dual::{run_primal_dual, IterationRecord, PdConfig};
use cachenet::scenario::capacity::reference_strategy;
use cachenet::scenario::counterexample::failure_modes;
use cachenet::scenario::{generate_paths, PathOptions, ReferenceRouting};
use cachenet::ObjectiveContext;
use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

fn candidate(seed: u64) -> Option<Problem> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let n = rng.random_range(5..=7);
    let mut set = BTreeSet::new();
    for v in 1..n {
        let u = rng.random_range(0..v);
        set.insert((u, v));
    }
    let extra = rng.random_range(1..=3);
    for _ in 0..extra {
        let a = rng.random_range(0..n);
        let b = rng.random_range(0..n);
        if a != b {
            set.insert((a.min(b), a.max(b)));
        }
    }
    let mut edges = Vec::new();
    for &(a, b) in &set {
        for (u, v) in [(a, b), (b, a)] {
            edges.push(Edge {
                from: u,
                to: v,
                weight: rng.random_range(1..=100) as f64,
                capacity: f64::INFINITY,
            });
        }
    }
    let mut nodes: Vec<usize> = (0..n).collect();
    nodes.shuffle(&mut rng);
    let servers = vec![vec![nodes[0]], vec![nodes[1]]];
    let caches: Vec<u32> = (0..n)
        .map(|v| if v == nodes[0] || v == nodes[1] { 0 } else { rng.random_range(0..=1) })
        .collect();
    let net = NetworkInstance::new(n, edges, 2, servers, caches).ok()?;
    let queries = [nodes[2], nodes[3]];
    let mut pairs: Vec<(usize, usize)> = (0..2).flat_map(|i| queries.map(|s| (i, s))).collect();
    pairs.shuffle(&mut rng);
    let rates = [1.0, 0.5f64.powf(1.2), 3f64.powf(-1.2)];
    let requests: Vec<Request> = pairs[..3]
        .iter()
        .zip(rates)
        .map(|(&(item, source), rate)| Request { item, source, rate })
        .collect();
    let opts = PathOptions {
        max_paths: 2,
        stretch: 4.0,
    };
    let (requests, paths) = generate_paths(&net, requests, &opts);
    if requests.len() < 3 || paths.iter().all(|p| p.len() < 2) {
        return None;
    }
    let demand = DemandModel::new(&net, requests, paths).ok()?;
    let reference = reference_strategy(&net, &demand, ReferenceRouting::Uniform, &mut rng);
    let flows = ObjectiveContext::new(&net, &demand).edge_flows(&reference);
    // Edges without reference traffic stay unconstrained.
    let capacities: Vec<f64> = flows
        .iter()
        .map(|&f| if f > 0.0 { f } else { f64::INFINITY })
        .collect();
    let net = net.with_capacities(&capacities).ok()?;
    Some(Problem::new(net, demand))
}

fn tail_variance(records: &[IterationRecord]) -> f64 {
    let tail = &records[records.len().saturating_sub(100)..];
    let first = tail[0].gain;
    let n = tail.len() as f64;
    let mean = tail.iter().map(|r| r.gain - first).sum::<f64>() / n;
    tail.iter().map(|r| (r.gain - first - mean).powi(2)).sum::<f64>() / n
}

fn multipliers_engage(p: &Problem, pd: &PdConfig) -> bool {
    let ctx = ObjectiveContext::new(&p.instance, &p.demand);
    let psi = vec![0.0; p.instance.num_edges()];
    frank_wolfe_variant(&ctx, &psi, &pd.fw).is_ok_and(|out| compute_inf(&ctx, &out.strategy).0 > 0.0)
}

fn momentum_helps(p: &Problem) -> bool {
    let run = |momentum| {
        let cfg = PdConfig {
            max_iterations: 1000,
            stop_on_convergence: false,
            momentum,
            ..PdConfig::default()
        };
        run_primal_dual(&p.instance, &p.demand, &cfg).ok()
    };
    match (run(true), run(false)) {
        (Some(with), Some(without)) => {
            let (iw, io) = (with.records.last().unwrap().inf, without.records.last().unwrap().inf);
            tail_variance(&with.records) < tail_variance(&without.records) && iw <= io
        }
        _ => false,
    }
}

fn main() {
    let args: Vec<u64> = std::env::args().skip(1).filter_map(|a| a.parse().ok()).collect();
    let start = args.first().copied().unwrap_or(0);
    let count = args.get(1).copied().unwrap_or(20_000);
    let pd = PdConfig::default();
    let (baseline_hits, engaged) = (AtomicUsize::new(0), AtomicUsize::new(0));
    let hit = (start..start + count).into_par_iter().find_first(|&seed| {
        let Some(p) = candidate(seed) else { return false };
        if !failure_modes(&p, &pd).is_ok_and(|m| m.all_hold()) {
            return false;
        }
        baseline_hits.fetch_add(1, Ordering::Relaxed);
        if !multipliers_engage(&p, &pd) {
            return false;
        }
        engaged.fetch_add(1, Ordering::Relaxed);
        momentum_helps(&p)
    });
    eprintln!(
        "{} candidates with every failure mode, {} of them with active multipliers",
        baseline_hits.load(Ordering::Relaxed),
        engaged.load(Ordering::Relaxed)
    );
    match hit {
        Some(seed) => {
            let problem = candidate(seed).expect("hit is a valid candidate");
            let modes = failure_modes(&problem, &pd).expect("hit was evaluated");
            println!("# seed {seed}");
            println!("# {modes:?}");
            print!("{}", problem.to_text());
        }
        None => {
            eprintln!("no counterexample among seeds {start}..{}", start + count);
            std::process::exit(1);
        }
    }
}
