//! Counted-work growth rates of the three strategies.

use logbel_core::bench::{per_cycle, run_bench, BenchConfig, TreeShape};
use logbel_core::generate::{balanced_tree, chain_tree, clear_evidence, rng};
use logbel_core::{contract, full_propagate, LazyState, Network, Session, Strategy};

#[test]
fn full_propagation_is_linear() {
    let mut prev = None;
    for e in 6..=12 {
        let mut t = balanced_tree((1 << e) - 1, 3, &mut rng(e as u64)).unwrap();
        clear_evidence(&mut t);
        let mv = full_propagate(&t).unwrap().counters.matrix_vector_mults as f64;
        if let Some(p) = prev {
            let r = mv / p;
            assert!((1.8..=2.2).contains(&r), "2^{e}: ratio {r}");
        }
        prev = Some(mv);
    }
}

/// Depth-lazy queries walk the whole root path, so on a chain the deepest
/// node costs one equation per level.
#[test]
fn lazy_chain_query_is_linear_in_depth() {
    for l in [50, 100, 200] {
        let t = chain_tree(2 * l, 2, &mut rng(l as u64)).unwrap();
        let lazy = LazyState::new(t.clone());
        let deepest = t.node_id(&format!("x{l}")).unwrap();
        let before = lazy.counters().equation_evals;
        lazy.lazy_query(deepest).unwrap();
        assert_eq!((lazy.counters().equation_evals - before) as usize, t.depth_of(deepest));
        assert_eq!(t.depth_of(deepest), l - 1);
    }
}

/// Per-cycle work on chains: logarithmic under contraction, linear under
/// full propagation.
#[test]
fn chain_growth_rates() {
    let sizes: Vec<usize> = (7..=13).map(|e| (1 << e) - 1).collect();
    let rows = run_bench(&BenchConfig::new(TreeShape::Chain, sizes.clone(), 2, 300, 42)).unwrap();
    let xs: Vec<f64> = sizes.iter().map(|&n| (n as f64).log2()).collect();
    let con: Vec<f64> = sizes.iter().map(|&n| per_cycle(&rows, "contract", n).unwrap()).collect();
    let full: Vec<f64> = sizes.iter().map(|&n| per_cycle(&rows, "full", n).unwrap()).collect();

    for w in full.windows(2) {
        let r = w[1] / w[0];
        assert!((1.8..=2.2).contains(&r), "full doubling ratio {r}");
    }

    // least-squares fit con = a + b log2 N
    let n = xs.len() as f64;
    let (mx, my) = (xs.iter().sum::<f64>() / n, con.iter().sum::<f64>() / n);
    let sxy: f64 = xs.iter().zip(&con).map(|(x, y)| (x - mx) * (y - my)).sum();
    let sxx: f64 = xs.iter().map(|x| (x - mx).powi(2)).sum();
    let b = sxy / sxx;
    let a = my - b * mx;
    assert!(b > 0.0);
    for (x, y) in xs.iter().zip(&con) {
        let fit = a + b * x;
        assert!((y - fit).abs() <= 0.15 * fit, "log2 N = {x}: {y} vs fit {fit}");
    }
    // cost per log2 N stays within a constant band while N grows 64-fold
    let per_log: Vec<f64> = con.iter().zip(&xs).map(|(c, x)| c / x).collect();
    let (lo, hi) = per_log.iter().fold((f64::MAX, 0.0f64), |(l, h), &v| (l.min(v), h.max(v)));
    assert!(hi / lo <= 1.5, "{per_log:?}");
}

/// Per-op counter deltas add up to the session totals.
#[test]
fn counter_integrity() {
    let t = balanced_tree(127, 2, &mut rng(1)).unwrap();
    let net = Network::Tree(t.clone());
    let leaves = t.leaves();
    for strategy in [Strategy::Full, Strategy::Lazy, Strategy::Contract] {
        let mut s = Session::new(&net, strategy).unwrap();
        let start = s.counters();
        let mut sum = start;
        for (i, &leaf) in leaves.iter().enumerate().take(20) {
            let before = s.counters();
            s.update(t.name(leaf), logbel_core::Evidence::hard(2, i % 2)).unwrap();
            s.query(t.name(t.root())).unwrap();
            sum = sum + (s.counters() - before);
        }
        assert_eq!(sum, s.counters(), "{strategy}");
    }
    let ix = contract(&t).unwrap();
    assert_eq!(ix.counters(), ix.preprocessing_counters());
}
