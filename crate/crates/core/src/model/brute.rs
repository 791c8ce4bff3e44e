//! Joint-enumeration oracle.
//!
//! Enumerates every assignment of the root and the internal nodes; the
//! variables of non-root leaves are summed out inline for each assignment,
//! which keeps the enumerated space at `prod(domain)` over non-leaves.

use super::{Belief, CausalTree, NodeId};
use crate::error::{Error, Result};

/// Default cap on enumerated joint states (2^24).
pub const DEFAULT_STATE_CAP: u128 = 1 << 24;

/// Posterior marginal of every node by exhaustive enumeration.
pub fn brute_force_marginals(tree: &CausalTree, cap: u128) -> Result<Vec<Belief>> {
    let root = tree.root();
    let enumerated: Vec<NodeId> = tree
        .preorder()
        .iter()
        .copied()
        .filter(|&id| id == root || !tree.node(id).is_leaf())
        .collect();
    let summed: Vec<NodeId> = tree
        .preorder()
        .iter()
        .copied()
        .filter(|&id| id != root && tree.node(id).is_leaf())
        .collect();

    let space = enumerated
        .iter()
        .fold(1u128, |acc, &id| acc.saturating_mul(tree.node(id).domain as u128));
    if space > cap {
        return Err(Error::StateSpaceTooLarge(space, cap));
    }

    let n = tree.len();
    let mut value = vec![0usize; n];
    let mut marg: Vec<Vec<f64>> = tree.nodes().iter().map(|nd| vec![0.0; nd.domain]).collect();
    let mut leaf_terms: Vec<Vec<f64>> = summed
        .iter()
        .map(|&id| vec![0.0; tree.node(id).domain])
        .collect();
    let mut sums = vec![0.0; summed.len()];
    let mut prefix = vec![0.0; summed.len() + 1];
    let mut suffix = vec![0.0; summed.len() + 1];
    let mut total = 0.0;

    loop {
        let mut w = 1.0;
        for &id in &enumerated {
            let nd = tree.node(id);
            let v = value[id.0];
            w *= match nd.parent {
                None => nd.prior.as_ref().expect("root prior")[v],
                Some(p) => nd.cpt.as_ref().expect("edge cpt").get(value[p.0], v),
            };
            if let Some(ev) = &nd.evidence {
                w *= ev.likelihood()[v];
            }
        }
        if w != 0.0 {
            for (j, &id) in summed.iter().enumerate() {
                let nd = tree.node(id);
                let row = nd.cpt.as_ref().expect("edge cpt").row(value[nd.parent.expect("non-root").0]);
                let ev = nd.evidence.as_ref().expect("leaf evidence").likelihood();
                let mut s = 0.0;
                for (t, (a, b)) in leaf_terms[j].iter_mut().zip(row.iter().zip(ev)) {
                    *t = a * b;
                    s += *t;
                }
                sums[j] = s;
            }
            prefix[0] = 1.0;
            for j in 0..summed.len() {
                prefix[j + 1] = prefix[j] * sums[j];
            }
            suffix[summed.len()] = 1.0;
            for j in (0..summed.len()).rev() {
                suffix[j] = suffix[j + 1] * sums[j];
            }
            let joint = w * prefix[summed.len()];
            total += joint;
            for &id in &enumerated {
                marg[id.0][value[id.0]] += joint;
            }
            for (j, &id) in summed.iter().enumerate() {
                let others = w * prefix[j] * suffix[j + 1];
                if others != 0.0 {
                    for (m, t) in marg[id.0].iter_mut().zip(&leaf_terms[j]) {
                        *m += others * t;
                    }
                }
            }
        }

        // odometer over the enumerated nodes, last node fastest
        let mut pos = enumerated.len();
        loop {
            if pos == 0 {
                if total <= 0.0 {
                    return Err(Error::ImpossibleEvidence(tree.name(root).to_string()));
                }
                return marg
                    .iter()
                    .enumerate()
                    .map(|(i, m)| Belief::from_unnormalized(tree.name(NodeId(i)), m))
                    .collect();
            }
            pos -= 1;
            let id = enumerated[pos];
            value[id.0] += 1;
            if value[id.0] < tree.node(id).domain {
                break;
            }
            value[id.0] = 0;
        }
    }
}

/// Posterior marginal of one node by exhaustive enumeration.
pub fn brute_force_marginal(tree: &CausalTree, id: NodeId, cap: u128) -> Result<Belief> {
    tree.get(id)?;
    Ok(brute_force_marginals(tree, cap)?.swap_remove(id.0))
}

#[cfg(test)]
mod tests {
    use super::super::tests::spec;
    use super::super::{build_tree, normalize_tree, Evidence, NetworkFile};
    use super::*;

    fn assert_close(a: &[f64], b: &[f64], tol: f64) {
        assert_eq!(a.len(), b.len());
        for (x, y) in a.iter().zip(b) {
            assert!((x - y).abs() <= tol, "{a:?} vs {b:?}");
        }
    }

    #[test]
    fn identity_channel_pins_root() {
        let eye = vec![vec![1.0, 0.0], vec![0.0, 1.0]];
        let f = NetworkFile {
            nodes: vec![
                spec("u", 2, None, None, Some(vec![0.5, 0.5]), None),
                spec("e", 2, Some("u"), Some(eye.clone()), None, Some(vec![1.0, 0.0])),
                spec("f", 2, Some("u"), Some(eye), None, Some(vec![1.0, 1.0])),
            ],
        };
        let t = build_tree(&f).unwrap();
        let b = brute_force_marginal(&t, t.root(), DEFAULT_STATE_CAP).unwrap();
        assert_eq!(b.dist, vec![1.0, 0.0]);
    }

    #[test]
    fn uniform_channels_leave_prior() {
        let flat = vec![vec![0.5, 0.5], vec![0.5, 0.5]];
        let f = NetworkFile {
            nodes: vec![
                spec("u", 2, None, None, Some(vec![0.2, 0.8]), None),
                spec("e", 2, Some("u"), Some(flat.clone()), None, Some(vec![0.0, 1.0])),
                spec("f", 2, Some("u"), Some(flat), None, Some(vec![0.9, 0.1])),
            ],
        };
        let t = build_tree(&f).unwrap();
        let b = brute_force_marginal(&t, t.root(), DEFAULT_STATE_CAP).unwrap();
        assert_close(&b.dist, &[0.2, 0.8], 1e-15);
    }

    #[test]
    fn hand_computed_two_level() {
        // u -> x -> e, u -> f. P(u)=[.3,.7], M_x|u=[[.9,.1],[.2,.8]],
        // M_e|x = I with e observed 1, M_f|u flat with f uniform.
        let f = NetworkFile {
            nodes: vec![
                spec("u", 2, None, None, Some(vec![0.3, 0.7]), None),
                spec("x", 2, Some("u"), Some(vec![vec![0.9, 0.1], vec![0.2, 0.8]]), None, None),
                spec("e", 2, Some("x"), Some(vec![vec![1.0, 0.0], vec![0.0, 1.0]]), None, Some(vec![0.0, 1.0])),
                spec("f", 2, Some("u"), Some(vec![vec![0.5, 0.5], vec![0.5, 0.5]]), None, Some(vec![1.0, 1.0])),
            ],
        };
        let t = build_tree(&f).unwrap();
        let m = brute_force_marginals(&t, DEFAULT_STATE_CAP).unwrap();
        // p(u, e=1) = [.3*.1, .7*.8] = [.03, .56]
        assert_close(&m[0].dist, &[0.03 / 0.59, 0.56 / 0.59], 1e-15);
        assert_close(&m[1].dist, &[0.0, 1.0], 1e-15);
        assert_close(&m[3].dist, &[0.5, 0.5], 1e-15);
    }

    #[test]
    fn impossible_and_too_large() {
        let eye = vec![vec![1.0, 0.0], vec![0.0, 1.0]];
        let f = NetworkFile {
            nodes: vec![
                spec("u", 2, None, None, Some(vec![1.0, 0.0]), None),
                spec("e", 2, Some("u"), Some(eye.clone()), None, Some(vec![0.0, 1.0])),
                spec("f", 2, Some("u"), Some(eye), None, Some(vec![1.0, 1.0])),
            ],
        };
        let t = build_tree(&f).unwrap();
        assert!(matches!(
            brute_force_marginals(&t, DEFAULT_STATE_CAP),
            Err(Error::ImpossibleEvidence(_))
        ));
        assert!(matches!(
            brute_force_marginals(&t, 1),
            Err(Error::StateSpaceTooLarge(2, 1))
        ));
    }

    #[test]
    fn normalization_preserves_marginals() {
        // root with three children, one of which has a single child
        let f = NetworkFile {
            nodes: vec![
                spec("r", 3, None, None, Some(vec![0.2, 0.3, 0.5]), None),
                spec("a", 2, Some("r"), Some(vec![vec![0.1, 0.9], vec![0.6, 0.4], vec![0.5, 0.5]]), None, Some(vec![0.2, 1.0])),
                spec("b", 2, Some("r"), Some(vec![vec![0.7, 0.3], vec![0.2, 0.8], vec![0.4, 0.6]]), None, None),
                spec("c", 3, Some("r"), Some(vec![vec![0.2, 0.2, 0.6], vec![0.1, 0.8, 0.1], vec![1.0, 0.0, 0.0]]), None, Some(vec![0.0, 1.0, 0.5])),
                spec("d", 2, Some("b"), Some(vec![vec![0.3, 0.7], vec![0.9, 0.1]]), None, Some(vec![1.0, 0.0])),
            ],
        };
        let t = build_tree(&f).unwrap();
        assert!(!t.is_complete_binary());
        let (nt, map) = normalize_tree(&t).unwrap();
        assert!(nt.is_complete_binary());
        // one split node for r, one unit leaf for b
        assert_eq!(nt.len(), t.len() + 2);
        assert!(nt.len() <= 2 * t.len() + 1);
        let before = brute_force_marginals(&t, DEFAULT_STATE_CAP).unwrap();
        let after = brute_force_marginals(&nt, DEFAULT_STATE_CAP).unwrap();
        for id in t.ids() {
            assert_eq!(t.name(id), nt.name(map[id.0]));
            assert_close(&before[id.0].dist, &after[map[id.0].0].dist, 1e-12);
        }
    }

    #[test]
    fn complete_binary_is_unchanged() {
        let eye = vec![vec![1.0, 0.0], vec![0.0, 1.0]];
        let f = NetworkFile {
            nodes: vec![
                spec("u", 2, None, None, Some(vec![0.5, 0.5]), None),
                spec("y", 2, Some("u"), Some(eye.clone()), None, Some(vec![1.0, 0.0])),
                spec("z", 2, Some("u"), Some(eye), None, Some(vec![1.0, 1.0])),
            ],
        };
        let t = build_tree(&f).unwrap();
        let (nt, map) = normalize_tree(&t).unwrap();
        assert_eq!(nt, t);
        assert_eq!(map, vec![NodeId(0), NodeId(1), NodeId(2)]);
        let mut t2 = nt.clone();
        t2.set_evidence(NodeId(2), Evidence::hard(2, 1)).unwrap();
        assert_ne!(t2, t);
    }
}
