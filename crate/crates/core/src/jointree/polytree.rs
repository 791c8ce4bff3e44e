//! Polytree model, file format, prior marginals and the enumeration oracle.

use std::collections::{HashMap, VecDeque};

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::generate::{dirichlet_row, random_cpt};
use crate::linalg::Matrix;
use crate::model::{Belief, STOCHASTIC_TOL};

/// JSON polytree: `{"variables":[{"id","domain","parents","cpt","prior"}]}`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PolytreeFile {
    pub variables: Vec<VariableSpec>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct VariableSpec {
    pub id: String,
    pub domain: usize,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub parents: Vec<String>,
    /// One row per joint parent assignment, first parent most significant.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub cpt: Option<Vec<Vec<f64>>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub prior: Option<Vec<f64>>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Variable {
    pub name: String,
    pub domain: usize,
    pub parents: Vec<usize>,
    /// `∏ parent domains` rows by `domain` columns; a single row (the prior)
    /// for parentless variables.
    pub table: Matrix,
}

impl Variable {
    /// Row of `table` for a full assignment `values` (indexed by variable).
    pub fn row_index(&self, values: &[usize], domains: &[usize]) -> usize {
        self.parents
            .iter()
            .fold(0, |acc, &p| acc * domains[p] + values[p])
    }
}

/// A validated singly connected network.
#[derive(Debug, Clone, PartialEq)]
pub struct Polytree {
    vars: Vec<Variable>,
    children: Vec<Vec<usize>>,
    by_name: HashMap<String, usize>,
    topo: Vec<usize>,
}

impl Polytree {
    pub fn from_file(file: &PolytreeFile) -> Result<Polytree> {
        let mut by_name = HashMap::new();
        for (i, v) in file.variables.iter().enumerate() {
            if by_name.insert(v.id.clone(), i).is_some() {
                return Err(Error::DuplicateId(v.id.clone()));
            }
        }
        let n = file.variables.len();
        if n == 0 {
            return Err(Error::MissingRoot);
        }
        let mut vars = Vec::with_capacity(n);
        let mut children = vec![Vec::new(); n];
        for (i, spec) in file.variables.iter().enumerate() {
            let name = spec.id.clone();
            if spec.domain == 0 {
                return Err(Error::DimensionMismatch { node: name, expected: 1, found: 0 });
            }
            let mut parents = Vec::with_capacity(spec.parents.len());
            for p in &spec.parents {
                let pi = *by_name
                    .get(p)
                    .ok_or_else(|| Error::UnknownParent(name.clone(), p.clone()))?;
                if parents.contains(&pi) || pi == i {
                    return Err(Error::NotAPolytree(format!("`{name}` lists parent `{p}` twice or itself")));
                }
                parents.push(pi);
                children[pi].push(i);
            }
            let rows: Vec<Vec<f64>> = match (&spec.cpt, &spec.prior, parents.is_empty()) {
                (None, Some(prior), true) => vec![prior.clone()],
                (Some(cpt), None, false) => cpt.clone(),
                (Some(_), _, true) => return Err(Error::UnexpectedField { node: name, field: "cpt" }),
                (_, Some(_), false) => return Err(Error::UnexpectedField { node: name, field: "prior" }),
                (None, None, true) => return Err(Error::MissingField { node: name, field: "prior" }),
                (None, None, false) => return Err(Error::MissingField { node: name, field: "cpt" }),
            };
            let expected: usize = spec.parents.iter().map(|p| file.variables[by_name[p]].domain).product();
            if rows.len() != expected {
                return Err(Error::DimensionMismatch { node: name, expected, found: rows.len() });
            }
            if let Some(r) = rows.iter().find(|r| r.len() != spec.domain) {
                return Err(Error::DimensionMismatch { node: name, expected: spec.domain, found: r.len() });
            }
            let table = Matrix::from_rows(&rows).expect("rows checked");
            if !table.all_finite_nonneg() {
                return Err(Error::InvalidProbability(name));
            }
            if let Some((row, sum)) = table.non_stochastic_row(STOCHASTIC_TOL) {
                return Err(Error::RowNotStochastic { node: name, row, sum });
            }
            vars.push(Variable { name, domain: spec.domain, parents, table });
        }

        // singly connected: n - 1 edges and connected as an undirected graph
        let edges: usize = vars.iter().map(|v| v.parents.len()).sum();
        let mut seen = vec![false; n];
        let mut queue = VecDeque::from([0]);
        seen[0] = true;
        let mut reached = 1;
        while let Some(x) = queue.pop_front() {
            for &y in vars[x].parents.iter().chain(&children[x]) {
                if !seen[y] {
                    seen[y] = true;
                    reached += 1;
                    queue.push_back(y);
                }
            }
        }
        if reached != n {
            return Err(Error::NotAPolytree("underlying graph is disconnected".into()));
        }
        if edges != n - 1 {
            return Err(Error::NotAPolytree("underlying graph has a cycle".into()));
        }

        // Kahn order; cannot stall on an undirected tree
        let mut indeg: Vec<usize> = vars.iter().map(|v| v.parents.len()).collect();
        let mut ready: VecDeque<usize> = (0..n).filter(|&i| indeg[i] == 0).collect();
        let mut topo = Vec::with_capacity(n);
        while let Some(x) = ready.pop_front() {
            topo.push(x);
            for &c in &children[x] {
                indeg[c] -= 1;
                if indeg[c] == 0 {
                    ready.push_back(c);
                }
            }
        }
        debug_assert_eq!(topo.len(), n);
        Ok(Polytree { vars, children, by_name, topo })
    }

    pub fn from_json(text: &str) -> Result<Polytree> {
        Polytree::from_file(&serde_json::from_str(text)?)
    }

    pub fn to_file(&self) -> PolytreeFile {
        PolytreeFile {
            variables: self
                .vars
                .iter()
                .map(|v| {
                    let rows = v.table.to_rows();
                    VariableSpec {
                        id: v.name.clone(),
                        domain: v.domain,
                        parents: v.parents.iter().map(|&p| self.vars[p].name.clone()).collect(),
                        prior: v.parents.is_empty().then(|| rows[0].clone()),
                        cpt: (!v.parents.is_empty()).then_some(rows),
                    }
                })
                .collect(),
        }
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(&self.to_file()).expect("serializable")
    }

    pub fn len(&self) -> usize {
        self.vars.len()
    }

    pub fn is_empty(&self) -> bool {
        self.vars.is_empty()
    }

    pub fn var(&self, i: usize) -> &Variable {
        &self.vars[i]
    }

    pub fn vars(&self) -> &[Variable] {
        &self.vars
    }

    pub fn children(&self, i: usize) -> &[usize] {
        &self.children[i]
    }

    pub fn index_of(&self, name: &str) -> Result<usize> {
        self.by_name
            .get(name)
            .copied()
            .ok_or_else(|| Error::UnknownVariable(name.to_string()))
    }

    /// Parents come before children.
    pub fn topological_order(&self) -> &[usize] {
        &self.topo
    }

    /// Largest parent count `p`.
    pub fn max_parents(&self) -> usize {
        self.vars.iter().map(|v| v.parents.len()).max().unwrap_or(0)
    }

    /// Directed edges `(parent, child)`.
    pub fn edges(&self) -> Vec<(usize, usize)> {
        self.vars
            .iter()
            .enumerate()
            .flat_map(|(c, v)| v.parents.iter().map(move |&p| (p, c)))
            .collect()
    }

    pub fn domains(&self) -> Vec<usize> {
        self.vars.iter().map(|v| v.domain).collect()
    }
}

/// Evidence-free marginal of every variable by one pass in topological
/// order. Parents of a polytree node are marginally independent, so the
/// joint of the parents is the product of their marginals.
pub fn prior_marginals(pt: &Polytree) -> Vec<Vec<f64>> {
    let mut marg: Vec<Vec<f64>> = vec![Vec::new(); pt.len()];
    for &w in pt.topological_order() {
        let v = pt.var(w);
        let mut out = vec![0.0; v.domain];
        for (r, row) in v.table.to_rows().iter().enumerate() {
            // decode r, last parent least significant
            let mut rest = r;
            let mut weight = 1.0;
            for &p in v.parents.iter().rev() {
                let k = pt.var(p).domain;
                weight *= marg[p][rest % k];
                rest /= k;
            }
            for (o, x) in out.iter_mut().zip(row) {
                *o += weight * x;
            }
        }
        marg[w] = out;
    }
    marg
}

/// Posterior marginals of every variable by enumerating the joint.
/// `evidence[v]` is a likelihood over the domain of `v`.
pub fn polytree_brute_force(pt: &Polytree, evidence: &[Vec<f64>], cap: u128) -> Result<Vec<Belief>> {
    let domains = pt.domains();
    let space = domains.iter().fold(1u128, |a, &k| a.saturating_mul(k as u128));
    if space > cap {
        return Err(Error::StateSpaceTooLarge(space, cap));
    }
    let n = pt.len();
    let mut values = vec![0usize; n];
    let mut marg: Vec<Vec<f64>> = domains.iter().map(|&k| vec![0.0; k]).collect();
    loop {
        let mut w = 1.0;
        for (i, v) in pt.vars().iter().enumerate() {
            w *= v.table.get(v.row_index(&values, &domains), values[i]) * evidence[i][values[i]];
            if w == 0.0 {
                break;
            }
        }
        if w != 0.0 {
            for i in 0..n {
                marg[i][values[i]] += w;
            }
        }
        let mut pos = n;
        loop {
            if pos == 0 {
                return marg
                    .iter()
                    .enumerate()
                    .map(|(i, m)| Belief::from_unnormalized(&pt.var(i).name, m))
                    .collect();
            }
            pos -= 1;
            values[pos] += 1;
            if values[pos] < domains[pos] {
                break;
            }
            values[pos] = 0;
        }
    }
}

/// Random polytree: each new variable attaches to a uniformly chosen earlier
/// one, as its child or (when that keeps at most `max_parents` parents) as
/// its parent. Domains are uniform in `2..=max_domain`.
pub fn random_polytree<R: Rng>(n: usize, max_parents: usize, max_domain: usize, rng: &mut R) -> Result<Polytree> {
    let n = n.max(1);
    let mut parents: Vec<Vec<usize>> = vec![Vec::new(); n];
    for i in 1..n {
        let j = rng.random_range(0..i);
        if parents[j].len() < max_parents && rng.random_bool(0.5) {
            parents[j].push(i);
        } else {
            parents[i].push(j);
        }
    }
    let domains: Vec<usize> = (0..n).map(|_| rng.random_range(2..=max_domain.max(2))).collect();
    let variables = (0..n)
        .map(|i| {
            let rows: usize = parents[i].iter().map(|&p| domains[p]).product();
            VariableSpec {
                id: format!("v{i}"),
                domain: domains[i],
                parents: parents[i].iter().map(|p| format!("v{p}")).collect(),
                cpt: (!parents[i].is_empty()).then(|| random_cpt(rows, domains[i], rng)),
                prior: parents[i].is_empty().then(|| dirichlet_row(domains[i], rng)),
            }
        })
        .collect();
    Polytree::from_file(&PolytreeFile { variables })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::generate::rng;
    use crate::model::DEFAULT_STATE_CAP;

    fn var(id: &str, parents: &[&str], cpt: Option<Vec<Vec<f64>>>, prior: Option<Vec<f64>>) -> VariableSpec {
        VariableSpec {
            id: id.into(),
            domain: 2,
            parents: parents.iter().map(|s| s.to_string()).collect(),
            cpt,
            prior,
        }
    }

    #[test]
    fn diamond_rejected() {
        let row = || Some(vec![vec![0.5, 0.5], vec![0.5, 0.5]]);
        let f = PolytreeFile {
            variables: vec![
                var("a", &[], None, Some(vec![0.5, 0.5])),
                var("b", &["a"], row(), None),
                var("c", &["a"], row(), None),
                var("d", &["b", "c"], Some(vec![vec![0.5, 0.5]; 4]), None),
            ],
        };
        assert!(matches!(Polytree::from_file(&f), Err(Error::NotAPolytree(_))));
    }

    #[test]
    fn field_rules() {
        let f = PolytreeFile {
            variables: vec![var("a", &[], Some(vec![vec![1.0, 0.0]]), None)],
        };
        assert!(matches!(Polytree::from_file(&f), Err(Error::UnexpectedField { .. })));
        let f = PolytreeFile {
            variables: vec![
                var("a", &[], None, Some(vec![0.5, 0.5])),
                var("b", &["a"], Some(vec![vec![0.5, 0.5]]), None),
            ],
        };
        assert!(matches!(Polytree::from_file(&f), Err(Error::DimensionMismatch { .. })));
        assert!(Polytree::from_json(r#"{"variables":[{"id":"a","domain":2,"prior":[1,0],"x":1}]}"#).is_err());
    }

    #[test]
    fn chain_with_identity_keeps_prior() {
        let eye = || Some(vec![vec![1.0, 0.0], vec![0.0, 1.0]]);
        let f = PolytreeFile {
            variables: vec![
                var("a", &[], None, Some(vec![0.3, 0.7])),
                var("b", &["a"], eye(), None),
                var("c", &["b"], eye(), None),
            ],
        };
        let pt = Polytree::from_file(&f).unwrap();
        for m in prior_marginals(&pt) {
            assert!((m[0] - 0.3).abs() < 1e-15 && (m[1] - 0.7).abs() < 1e-15);
        }
    }

    #[test]
    fn marginals_match_enumeration() {
        for seed in 0..30 {
            let pt = random_polytree(8, 2, 3, &mut rng(seed)).unwrap();
            assert!(pt.max_parents() <= 2);
            let flat: Vec<Vec<f64>> = pt.domains().iter().map(|&k| vec![1.0; k]).collect();
            let brute = polytree_brute_force(&pt, &flat, DEFAULT_STATE_CAP).unwrap();
            for (m, b) in prior_marginals(&pt).iter().zip(&brute) {
                let d = m.iter().zip(&b.dist).map(|(x, y)| (x - y).abs()).fold(0.0, f64::max);
                assert!(d < 1e-12);
            }
            let round = Polytree::from_json(&pt.to_json()).unwrap();
            assert_eq!(round, pt);
        }
    }
}
