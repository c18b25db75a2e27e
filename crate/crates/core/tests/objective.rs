mod common;

use cachenet::model::{DemandModel, Edge, NetworkInstance, Path, Request, StrategyPair};
use cachenet::{Error, ObjectiveContext};
use common::{random_box_point, random_problem, random_psi, rng, Oracle, TinySpec};
use proptest::prelude::*;
use rand::Rng;

fn line(weight: f64, capacity: f64, rate: f64) -> (NetworkInstance, DemandModel) {
    let edges = vec![
        Edge { from: 0, to: 1, weight, capacity },
        Edge { from: 1, to: 0, weight, capacity },
    ];
    let net = NetworkInstance::new(2, edges, 1, vec![vec![1]], vec![1, 0]).unwrap();
    let dem = DemandModel::new(
        &net,
        vec![Request { item: 0, source: 0, rate }],
        vec![vec![Path::new(vec![0, 1])]],
    )
    .unwrap();
    (net, dem)
}

#[test]
fn single_edge_examples() {
    let (net, dem) = line(5.0, 1.0, 1.0);
    let ctx = ObjectiveContext::new(&net, &dem);
    let mut y = ctx.zeros();
    assert_eq!(ctx.expected_cost(&y), 5.0);
    assert_eq!(ctx.cache_gain(&y), 0.0);
    y.xi_mut()[0] = 1.0;
    assert_eq!(ctx.expected_cost(&y), 0.0);
    assert_eq!(ctx.cache_gain(&StrategyPair::ones(&net, &dem)), ctx.c0());

    let g = ctx.gradient(&ctx.zeros(), &[0.0, 0.0]);
    assert_eq!(g.as_slice()[0], 5.0);
}

#[test]
fn flow_overflow_and_lagrangian_examples() {
    let (net, dem) = line(1.0, 0.5, 0.4);
    let ctx = ObjectiveContext::new(&net, &dem);
    let y = ctx.zeros();
    assert!((ctx.edge_flow(&y, (1, 0)).unwrap() - 0.4).abs() < 1e-15);
    assert_eq!(ctx.edge_flow(&y, (0, 1)).unwrap(), 0.0);
    assert!((ctx.overflow(&y, (1, 0)).unwrap() + 0.1).abs() < 1e-15);
    assert!(matches!(ctx.edge_flow(&y, (0, 5)), Err(Error::UnknownEdge { .. })));

    let mut blocked = y.clone();
    blocked.xi_mut()[0] = 1.0;
    assert_eq!(ctx.edge_flow(&blocked, (1, 0)).unwrap(), 0.0);

    let (net, dem) = line(1.0, 0.4, 0.4);
    let ctx = ObjectiveContext::new(&net, &dem);
    assert_eq!(ctx.overflow(&ctx.zeros(), (1, 0)).unwrap(), 0.0);

    let (net, dem) = line(1.0, 0.0, 0.4);
    let ctx = ObjectiveContext::new(&net, &dem);
    assert!((ctx.overflow(&ctx.zeros(), (1, 0)).unwrap() - 0.4).abs() < 1e-15);

    let (net, dem) = line(1.0, 1.0, 0.4);
    let ctx = ObjectiveContext::new(&net, &dem);
    let id = net.edge_id(1, 0).unwrap();
    let mut psi = vec![0.0; 2];
    psi[id] = 2.0;
    assert!((ctx.lagrangian(&ctx.zeros(), &psi).unwrap() - 1.2).abs() < 1e-12);
    psi[id] = -1.0;
    assert!(matches!(
        ctx.lagrangian(&ctx.zeros(), &psi),
        Err(Error::NegativeMultiplier { .. })
    ));
}

#[test]
fn evaluation_matches_direct_formula() {
    let mut r = rng(11);
    for _ in 0..40 {
        let p = random_problem(&mut r, &TinySpec::default());
        let ctx = ObjectiveContext::new(&p.instance, &p.demand);
        let oracle = Oracle::new(&p);
        assert!((ctx.c0() - oracle.c0()).abs() < 1e-12);
        for _ in 0..10 {
            let y = random_box_point(&mut r, &p);
            let eval = ctx.evaluate(&y);
            assert!((eval.cost - oracle.cost(y.as_slice())).abs() < 1e-12);
            assert!((eval.gain - oracle.gain(y.as_slice())).abs() < 1e-12);
            for (a, b) in eval.flows.iter().zip(oracle.flow_vec(y.as_slice())) {
                assert!((a - b).abs() < 1e-12);
            }
        }
    }
}

#[test]
fn expected_cost_matches_sampling() {
    let spec = TinySpec {
        nodes: (4, 4),
        catalog: 2,
        requests: 3,
        ..TinySpec::default()
    };
    let mut r = rng(3);
    let p = random_problem(&mut r, &spec);
    let ctx = ObjectiveContext::new(&p.instance, &p.demand);
    let oracle = Oracle::new(&p);
    let y = random_box_point(&mut r, &p);
    let (mean, se) = oracle.sampled_cost(y.as_slice(), 1_000_000, &mut r);
    let exact = ctx.expected_cost(&y);
    assert!(
        (exact - mean).abs() <= 3.0 * se + 1e-12,
        "exact {exact}, sampled {mean} ± {se}"
    );
}

#[test]
fn edge_flow_matches_enumeration() {
    let spec = TinySpec {
        nodes: (4, 5),
        catalog: 1,
        requests: 2,
        max_paths: 3,
        ..TinySpec::default()
    };
    let mut r = rng(5);
    let mut checked = 0;
    while checked < 10 {
        let p = random_problem(&mut r, &spec);
        let oracle = Oracle::new(&p);
        let cache_dim = p.instance.cache_dim();
        let mut coords = oracle.relevant_xi();
        coords.extend(cache_dim..cache_dim + p.demand.total_paths());
        if coords.len() > 12 {
            continue;
        }
        checked += 1;
        let ctx = ObjectiveContext::new(&p.instance, &p.demand);
        let y = random_box_point(&mut r, &p);
        let flows = ctx.edge_flows(&y);
        for (e, &f) in flows.iter().enumerate() {
            let brute = oracle.enumerate(y.as_slice(), &coords, |s| oracle.flow_vec(s)[e]);
            assert!((f - brute).abs() < 1e-12, "edge {e}: {f} vs {brute}");
        }
        let brute_cost = oracle.enumerate(y.as_slice(), &coords, |s| oracle.cost(s));
        assert!((ctx.expected_cost(&y) - brute_cost).abs() < 1e-10);
    }
}

#[test]
fn gradient_matches_pinned_evaluations() {
    let mut r = rng(17);
    for _ in 0..20 {
        let p = random_problem(&mut r, &TinySpec::default());
        let ctx = ObjectiveContext::new(&p.instance, &p.demand);
        let oracle = Oracle::new(&p);
        let y = random_box_point(&mut r, &p);
        let psi = random_psi(&mut r, &p.instance);
        let g = ctx.gradient(&y, &psi);
        let pinned = oracle.pinned_gradient(y.as_slice(), &psi);
        for (i, (a, b)) in g.as_slice().iter().zip(&pinned).enumerate() {
            assert!((a - b).abs() <= 1e-10, "coordinate {i}: {a} vs {b}");
            let single = ctx.coordinate_gradient(&y, i, 1.0, &psi);
            assert!((single - b).abs() <= 1e-10);
        }
        let e = r.random_range(0..p.instance.num_edges());
        let fg = ctx.flow_gradient(&y, e);
        for (a, b) in fg.as_slice().iter().zip(oracle.pinned_flow_gradient(y.as_slice(), e)) {
            assert!((a - b).abs() <= 1e-12);
        }
    }
}

#[test]
fn gradient_is_deterministic_across_thread_counts() {
    let spec = TinySpec {
        nodes: (8, 10),
        catalog: 40,
        requests: 300,
        ..TinySpec::default()
    };
    let p = random_problem(&mut rng(23), &spec);
    let ctx = ObjectiveContext::new(&p.instance, &p.demand);
    let y = random_box_point(&mut rng(24), &p);
    let psi = random_psi(&mut rng(25), &p.instance);
    let run = |threads| {
        rayon::ThreadPoolBuilder::new()
            .num_threads(threads)
            .build()
            .unwrap()
            .install(|| ctx.gradient(&y, &psi))
    };
    let one = run(1);
    assert_eq!(one, run(4));
    assert_eq!(one, run(7));
}

fn tiny() -> impl Strategy<Value = u64> {
    any::<u64>()
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn gain_plus_cost_is_constant(seed in tiny()) {
        let mut r = rng(seed);
        let p = random_problem(&mut r, &TinySpec::default());
        let ctx = ObjectiveContext::new(&p.instance, &p.demand);
        let y = random_box_point(&mut r, &p);
        let eval = ctx.evaluate(&y);
        prop_assert!((eval.gain + eval.cost - ctx.c0()).abs() <= 1e-9 * (1.0 + ctx.c0()));
        prop_assert!(eval.cost >= -1e-12 && eval.cost <= ctx.c0() + 1e-9);
        for &f in &eval.flows {
            prop_assert!(f >= 0.0 && f <= ctx.total_rate() * p.demand.max_paths() as f64 + 1e-12);
        }
    }

    #[test]
    fn objective_is_affine_in_each_coordinate(seed in tiny()) {
        let mut r = rng(seed);
        let p = random_problem(&mut r, &TinySpec::default());
        let ctx = ObjectiveContext::new(&p.instance, &p.demand);
        let psi = random_psi(&mut r, &p.instance);
        let mut y = random_box_point(&mut r, &p);
        let i = r.random_range(0..y.len());
        let mut at = |t: f64| {
            y.as_mut_slice()[i] = t;
            ctx.lagrangian(&y, &psi).unwrap()
        };
        let (a, b, m) = (at(0.0), at(1.0), at(0.5));
        prop_assert!((m - 0.5 * (a + b)).abs() <= 1e-12 * (1.0 + a.abs() + b.abs()));
    }

    #[test]
    fn gradient_nonnegative_and_offset_bounds_penalty(seed in tiny()) {
        let mut r = rng(seed);
        let p = random_problem(&mut r, &TinySpec::default());
        let ctx = ObjectiveContext::new(&p.instance, &p.demand);
        let psi = random_psi(&mut r, &p.instance);
        let y = random_box_point(&mut r, &p);
        prop_assert!(ctx.gradient(&y, &psi).as_slice().iter().all(|&g| g >= -1e-9));
        let l = ctx.lagrangian(&y, &psi).unwrap();
        prop_assert!(l + ctx.dual_offset(&psi) >= -1e-9);
    }

    #[test]
    fn mixed_differences_of_gain_are_nonpositive(seed in tiny()) {
        let mut r = rng(seed);
        let p = random_problem(&mut r, &TinySpec::default());
        let ctx = ObjectiveContext::new(&p.instance, &p.demand);
        let y = random_box_point(&mut r, &p);
        let n = y.len();
        let i = r.random_range(0..n);
        let j = (i + r.random_range(1..n)) % n;
        let delta = r.random_range(0.0..1.0f64);
        let shift = |coords: &[usize]| {
            let mut z = y.clone();
            for &c in coords {
                z.as_mut_slice()[c] = y.as_slice()[c] * (1.0 - delta) + delta;
            }
            ctx.cache_gain(&z)
        };
        let mixed = shift(&[i, j]) - shift(&[i]) - shift(&[j]) + shift(&[]);
        prop_assert!(mixed <= 1e-9, "mixed difference {mixed}");
    }
}
