use std::ops::ControlFlow;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::*;
use crate::enumeration::enumerate;
use crate::metrics::cost;
use crate::testutil::{axis, line_space, numeric_space};

fn random_space(seed: u64) -> Space {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let xc = rng.gen_range(1..=3);
    let yc = rng.gen_range(0..=2);
    let n = rng.gen_range(5..40);
    let points: Vec<Vec<f64>> = (0..n)
        .map(|_| vec![rng.gen_range(0.0..10.0), rng.gen_range(0.0..10.0)])
        .collect();
    let classes: Vec<u32> = (0..n).map(|_| rng.gen_range(0..2)).collect();
    let cuts = |c: usize, rng: &mut ChaCha8Rng| {
        let mut v: Vec<f64> = (0..c).map(|_| rng.gen_range(1..10) as f64).collect();
        v.sort_by(f64::total_cmp);
        v.dedup();
        v
    };
    let (x, y) = (cuts(xc, &mut rng), cuts(yc, &mut rng));
    numeric_space(&[axis("x", 0.0, 10.0, &x), axis("y", 0.0, 10.0, &y)], &points, Some(&classes))
}

fn brute_force(space: &Space, cfg: &SearchConfig) -> Option<f64> {
    let params = cfg.metric_params(space);
    let c = Constraints::new(space, &cfg.constraints).unwrap();
    let mut best: Option<f64> = None;
    enumerate(space, |t| {
        if c.check_all(space, t).is_none() {
            let v = cost(space, t, &params).unwrap();
            best = Some(best.map_or(v, |b: f64| b.min(v)));
        }
        ControlFlow::Continue(())
    })
    .unwrap();
    best
}

fn k_config(metric: Metric, k: u32) -> SearchConfig {
    SearchConfig::new(
        metric,
        ConstraintSet {
            k: Some(k),
            ..Default::default()
        },
    )
}

fn close(a: f64, b: f64) -> bool {
    (a - b).abs() <= 1e-9 * a.abs().max(b.abs()).max(1.0)
}

#[test]
fn matches_brute_force_on_random_instances() {
    for seed in 0..30 {
        let space = random_space(seed);
        for metric in [Metric::Dm, Metric::Cm, Metric::Vm] {
            for priority in [Priority::Lb, Priority::Cost, Priority::LbOverCost] {
                let mut cfg = k_config(metric, 3);
                cfg.priority = priority;
                let expect = brute_force(&space, &cfg);
                match search(&space, &cfg) {
                    Ok(r) => {
                        assert!(r.certificate);
                        assert!(close(r.cost, expect.unwrap()), "seed {seed} {metric:?}: {} vs {expect:?}", r.cost);
                        assert!(r.lower_bound <= r.cost && r.ratio >= 1.0);
                        r.tree.validate(&space).unwrap();
                    }
                    Err(Error::Infeasible) => assert_eq!(expect, None),
                    Err(e) => panic!("{e}"),
                }
            }
        }
    }
}

#[test]
fn approximate_mode_stays_within_alpha() {
    for seed in 0..30 {
        let space = random_space(seed);
        let mut cfg = k_config(Metric::Dm, 2);
        let opt = brute_force(&space, &cfg).unwrap();
        for alpha in [1.5, 3.0] {
            cfg.mode = Mode::Approx(alpha);
            let r = search(&space, &cfg).unwrap();
            assert!(r.cost <= alpha * opt + 1e-9);
            assert!(r.lower_bound <= opt + 1e-9);
            assert!(r.ratio <= alpha + 1e-9);
        }
    }
}

#[test]
fn every_split_breaking_k_returns_root() {
    let space = line_space(&[2, 1, 2]);
    let r = search(&space, &k_config(Metric::Dm, 4)).unwrap();
    assert_eq!(r.tree.leaf_count(), 1);
    assert_eq!(r.cost, 25.0);
    assert!(r.certificate);
    assert!(matches!(search(&space, &k_config(Metric::Dm, 6)), Err(Error::Infeasible)));
}

#[test]
fn probe_clears_queue_without_drops() {
    // Single cells are optimal, every bound equals their cost, and the first
    // dive finds them, emptying the queue.
    let space = line_space(&[2; 4]);
    let mut cfg = k_config(Metric::Dm, 2);
    cfg.max_queue = 2;
    let r = search(&space, &cfg).unwrap();
    assert_eq!(r.cost, 16.0);
    assert!(r.stats.probes >= 1);
    assert_eq!(r.stats.forced_drops, 0);
    assert!(r.certificate);
}

#[test]
fn forced_drops_clear_certificate_but_keep_a_valid_bound() {
    let mut dropped = 0;
    for seed in 0..20 {
        let space = random_space(seed);
        let mut cfg = k_config(Metric::Dm, 2);
        cfg.max_queue = 2;
        let opt = brute_force(&space, &cfg).unwrap();
        let r = search(&space, &cfg).unwrap();
        assert!(r.lower_bound <= opt && opt <= r.cost);
        if r.stats.forced_drops > 0 {
            dropped += 1;
            assert!(!r.certificate);
        }
    }
    assert!(dropped > 0);
}

#[test]
fn budgets_give_best_effort_results() {
    let space = line_space(&[1; 12]);
    let mut cfg = k_config(Metric::Dm, 2);
    cfg.node_limit = Some(3);
    let r = search(&space, &cfg).unwrap();
    assert!(r.budget_exhausted && !r.certificate);
    assert!(r.lower_bound <= 24.0 && r.cost >= 24.0);
}

#[test]
fn deterministic_and_worker_independent_cost() {
    let space = random_space(7);
    let cfg = k_config(Metric::Cm, 2);
    let a = search(&space, &cfg).unwrap();
    let b = search(&space, &cfg).unwrap();
    assert_eq!(a.tree.preorder(), b.tree.preorder());
    assert_eq!((a.stats.expanded, a.stats.generated), (b.stats.expanded, b.stats.generated));
    let mut par = cfg.clone();
    par.workers = 3;
    assert_eq!(search(&space, &par).unwrap().cost, a.cost);
}

#[test]
fn progress_reports_each_improvement() {
    let space = random_space(3);
    let mut seen = Vec::new();
    let r = prioritized_enumerate(&space, &k_config(Metric::Dm, 2), &mut |p| seen.push(*p)).unwrap();
    assert!(!seen.is_empty());
    assert!(seen.windows(2).all(|w| w[1].best < w[0].best));
    assert_eq!(seen.last().unwrap().best, r.cost);
    assert!(seen.iter().all(|p| p.ratio >= 1.0 && p.lower_bound <= p.best));
}

#[test]
fn greedy_is_feasible_and_never_beats_optimum() {
    for seed in 0..30 {
        let space = random_space(seed);
        let cfg = k_config(Metric::Dm, 2);
        let g = mondrian_greedy(&space, &cfg).unwrap();
        g.tree.validate(&space).unwrap();
        let opt = search(&space, &cfg).unwrap();
        assert!(g.cost >= opt.cost);
        let improved = improve_from_seed(&space, &cfg, g.tree.clone()).unwrap();
        assert!(improved.cost <= g.cost);
        assert_eq!(improved.cost, opt.cost);
        let again = improve_from_seed(&space, &cfg, opt.tree.clone()).unwrap();
        assert_eq!(again.cost, opt.cost);
        assert!(again.stats.expanded <= opt.stats.expanded);
    }
}

#[test]
fn greedy_on_tiny_table_keeps_one_block() {
    let space = line_space(&[1, 1, 1]);
    let g = mondrian_greedy(&space, &k_config(Metric::Dm, 2)).unwrap();
    assert_eq!(g.tree.leaf_count(), 1);
    assert!(matches!(mondrian_greedy(&space, &k_config(Metric::Dm, 4)), Err(Error::Infeasible)));
}

#[test]
fn infeasible_seed_rejected() {
    let space = line_space(&[1, 1, 2]);
    let cfg = k_config(Metric::Dm, 2);
    let seed = PartitionTree::new(&space).apply_split(&space, 0, 1).unwrap();
    assert!(matches!(improve_from_seed(&space, &cfg, seed), Err(Error::InvalidSeed(_))));
}
