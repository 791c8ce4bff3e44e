//! Compiled polytree engines checked against priors, brute force and
//! themselves.

use logbel_core::generate::rng;
use logbel_core::jointree::{
    extract_cliques, polytree_brute_force, prior_marginals, random_polytree, CompileOptions, PolytreeEngine,
};
use logbel_core::linalg::max_abs_diff;
use logbel_core::model::DEFAULT_STATE_CAP;
use logbel_core::Evidence;
use rand::Rng;

fn ceil_log2(x: usize) -> usize {
    (usize::BITS - x.saturating_sub(1).leading_zeros()) as usize
}

fn engines(count: u64, max_domain: usize) -> impl Iterator<Item = PolytreeEngine> {
    (0..count).map(move |i| {
        let mut g = rng(300 + i);
        let n = g.random_range(2..=10);
        PolytreeEngine::new(random_polytree(n, 2, max_domain, &mut g).unwrap(), CompileOptions::default()).unwrap()
    })
}

#[test]
fn no_evidence_gives_priors() {
    for eng in engines(50, 3) {
        let prior = prior_marginals(eng.polytree());
        for (v, var) in eng.polytree().vars().iter().enumerate() {
            let b = eng.polytree_query(&var.name).unwrap();
            assert!(max_abs_diff(&b.dist, &prior[v]) <= 1e-10);
        }
    }
}

#[test]
fn binary_clique_domains_are_bounded() {
    for eng in engines(50, 2) {
        let p = eng.polytree().max_parents();
        for c in &eng.compiled().join_tree.cliques {
            assert!(c.states <= 1 << (p + 1));
        }
        let (_, check) = extract_cliques(eng.polytree()).unwrap();
        assert!(check.chordal);
    }
}

/// Shared variables read from either clique agree, and adjacent clique
/// beliefs agree on their separator.
#[test]
fn clique_consistency_under_evidence() {
    for (i, mut eng) in engines(40, 3).enumerate() {
        let mut g = rng(i as u64);
        let pt = eng.polytree().clone();
        for _ in 0..5 {
            let v = g.random_range(0..pt.len());
            let k = pt.var(v).domain;
            let l: Vec<f64> = (0..k).map(|_| g.random_range(0.05..1.0)).collect();
            eng.polytree_update(&pt.var(v).name, Evidence::new(l)).unwrap();
        }
        let jt = eng.compiled().join_tree.clone();
        for e in jt.edges.iter() {
            let s = e.separator;
            let a = eng.query_via(s, e.parent).unwrap();
            let b = eng.query_via(s, e.child).unwrap();
            assert!(max_abs_diff(&a.dist, &b.dist) <= 1e-9);
            let own = eng.query_via(s, s).unwrap();
            assert!(max_abs_diff(&own.dist, &a.dist) <= 1e-10);
        }
    }
}

#[test]
fn uniform_update_changes_nothing() {
    for (i, mut eng) in engines(30, 3).enumerate() {
        let pt = eng.polytree().clone();
        let mut g = rng(900 + i as u64);
        let v = g.random_range(0..pt.len());
        eng.polytree_update(&pt.var(v).name, Evidence::hard(pt.var(v).domain, 0)).unwrap();
        let before: Vec<Vec<f64>> = pt.vars().iter().map(|x| eng.polytree_query(&x.name).unwrap().dist).collect();
        let w = g.random_range(0..pt.len());
        eng.polytree_update(&pt.var(w).name, Evidence::uniform(pt.var(w).domain)).unwrap();
        if w != v {
            for (x, b) in pt.vars().iter().zip(&before) {
                assert!(max_abs_diff(&eng.polytree_query(&x.name).unwrap().dist, b) <= 1e-12);
            }
        }
    }
}

#[test]
fn updates_match_brute_force_and_stay_local() {
    for (i, mut eng) in engines(40, 3).enumerate() {
        let pt = eng.polytree().clone();
        let mut g = rng(50 + i as u64);
        let mut evidence: Vec<Vec<f64>> = pt.domains().iter().map(|&k| vec![1.0; k]).collect();
        let bound = 2 * ceil_log2(eng.index().tree().len());
        for _ in 0..20 {
            let v = g.random_range(0..pt.len());
            let ev = Evidence::hard(pt.var(v).domain, g.random_range(0..pt.var(v).domain));
            evidence[v] = ev.likelihood().to_vec();
            let rep = eng.polytree_update(&pt.var(v).name, ev).unwrap();
            assert!(rep.recomputed.len() <= bound);
        }
        let want = polytree_brute_force(&pt, &evidence, DEFAULT_STATE_CAP).unwrap();
        for (v, var) in pt.vars().iter().enumerate() {
            let got = eng.polytree_query(&var.name).unwrap();
            assert!(max_abs_diff(&got.dist, &want[v].dist) <= 1e-9);
        }
    }
}

#[test]
fn unknown_variable_rejected() {
    let mut eng = engines(1, 2).next().unwrap();
    assert!(eng.polytree_query("nope").is_err());
    assert!(eng.polytree_update("nope", Evidence::uniform(2)).is_err());
}
