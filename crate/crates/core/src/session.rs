//! Strategy-independent front end: load a network, apply updates and answer
//! queries by node or variable name.

use std::fmt;
use std::str::FromStr;

use crate::contraction::{contract, ContractionIndex};
use crate::counters::{OpCounters, OpRecorder};
use crate::error::{Error, Result};
use crate::jointree::{
    compile_polytree, polytree_brute_force, Clique, CompileOptions, CompiledPolytree, FactoredMatrix, Polytree,
};
use crate::linalg::Matrix;
use crate::model::{brute_force_marginal, normalize_tree, Belief, CausalTree, Evidence, NodeId, DEFAULT_STATE_CAP};
use crate::propagate::{full_propagate_with, LazyState, PropagationTable};
use crate::stream::Command;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Strategy {
    /// λ/π propagation over the whole tree on every query after an update.
    Full,
    /// Cached λ with π computed along the root path.
    Lazy,
    /// Dense contraction index.
    Contract,
    /// Factored contraction over the compiled clique tree (polytrees only).
    Polytree,
    /// Joint enumeration; the correctness oracle.
    Brute,
}

impl Strategy {
    pub const ALL: [Strategy; 5] = [
        Strategy::Full,
        Strategy::Lazy,
        Strategy::Contract,
        Strategy::Polytree,
        Strategy::Brute,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Strategy::Full => "full",
            Strategy::Lazy => "lazy",
            Strategy::Contract => "contract",
            Strategy::Polytree => "polytree",
            Strategy::Brute => "brute",
        }
    }
}

impl fmt::Display for Strategy {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Strategy {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        Strategy::ALL
            .into_iter()
            .find(|x| x.name() == s)
            .ok_or_else(|| Error::Parse(format!("unknown strategy `{s}`")))
    }
}

/// A loaded network of either kind.
#[derive(Debug, Clone, PartialEq)]
pub enum Network {
    Tree(CausalTree),
    Polytree(Polytree),
}

impl Network {
    /// Reads a network file, telling the kinds apart by their top-level key.
    pub fn from_json(text: &str) -> Result<Network> {
        let value: serde_json::Value = serde_json::from_str(text)?;
        let obj = value
            .as_object()
            .ok_or_else(|| Error::Parse("network file must be a JSON object".into()))?;
        if obj.contains_key("variables") {
            Ok(Network::Polytree(Polytree::from_file(&serde_json::from_value(value)?)?))
        } else if obj.contains_key("nodes") {
            Ok(Network::Tree(CausalTree::from_json(text)?))
        } else {
            Err(Error::Parse("expected a `nodes` or `variables` key".into()))
        }
    }

    pub fn strategies(&self) -> &'static [Strategy] {
        match self {
            Network::Tree(_) => &[Strategy::Full, Strategy::Lazy, Strategy::Contract, Strategy::Brute],
            Network::Polytree(_) => &[
                Strategy::Full,
                Strategy::Lazy,
                Strategy::Contract,
                Strategy::Polytree,
                Strategy::Brute,
            ],
        }
    }

    fn kind(&self) -> &'static str {
        match self {
            Network::Tree(_) => "a causal tree",
            Network::Polytree(_) => "a polytree",
        }
    }

    /// Domain size of a queryable name.
    pub fn domain(&self, name: &str) -> Result<usize> {
        match self {
            Network::Tree(t) => Ok(t.node(t.node_id(name)?).domain()),
            Network::Polytree(p) => Ok(p.var(p.index_of(name)?).domain),
        }
    }

    /// Evidence a command would install, validated against the network.
    /// `None` for queries.
    pub fn evidence_for(&self, cmd: &Command) -> Result<Option<Evidence>> {
        let target = cmd.target();
        let domain = self.domain(target)?;
        if let (Network::Tree(t), Command::Hard { .. } | Command::Soft { .. }) = (self, cmd) {
            if !t.node(t.node_id(target)?).is_leaf() {
                return Err(Error::NotALeaf(target.to_string()));
            }
        }
        let ev = match cmd {
            Command::Query { .. } => return Ok(None),
            Command::Hard { value, .. } => {
                if *value >= domain {
                    return Err(Error::DimensionMismatch {
                        node: target.to_string(),
                        expected: domain,
                        found: value + 1,
                    });
                }
                Evidence::hard(domain, *value)
            }
            Command::Soft { likelihood, .. } => Evidence::new(likelihood.clone()),
        };
        ev.validate(target, domain)?;
        Ok(Some(ev))
    }
}

#[derive(Debug)]
struct FullBackend {
    tree: CausalTree,
    table: Option<PropagationTable>,
    rec: OpRecorder,
}

#[derive(Debug)]
enum Backend {
    Full(FullBackend),
    Lazy(LazyState),
    Contract(ContractionIndex<Matrix>),
    Factored(ContractionIndex<FactoredMatrix>),
    Brute(CausalTree),
    PolyBrute { pt: Polytree, evidence: Vec<Vec<f64>> },
}

impl Backend {
    fn set(&mut self, x: NodeId, ev: Evidence) -> Result<()> {
        match self {
            Backend::Full(f) => {
                f.tree.set_evidence(x, ev)?;
                f.table = None;
                Ok(())
            }
            Backend::Lazy(s) => s.lazy_update(x, ev),
            Backend::Contract(ix) => ix.update_evidence(x, ev).map(drop),
            Backend::Factored(ix) => ix.update_evidence(x, ev).map(drop),
            Backend::Brute(t) => t.set_evidence(x, ev),
            Backend::PolyBrute { evidence, .. } => {
                evidence[x.0] = ev.likelihood().to_vec();
                Ok(())
            }
        }
    }

    fn belief(&mut self, x: NodeId) -> Result<Belief> {
        match self {
            Backend::Full(f) => {
                if f.table.is_none() {
                    f.table = Some(full_propagate_with(&f.tree, &f.rec)?);
                }
                f.table.as_ref().expect("just computed").belief(x).cloned()
            }
            Backend::Lazy(s) => s.lazy_query(x),
            Backend::Contract(ix) => ix.belief_query(x),
            Backend::Factored(ix) => ix.belief_query(x),
            Backend::Brute(t) => brute_force_marginal(t, x, DEFAULT_STATE_CAP),
            Backend::PolyBrute { pt, evidence } => {
                Ok(polytree_brute_force(pt, evidence, DEFAULT_STATE_CAP)?.swap_remove(x.0))
            }
        }
    }

    fn counters(&self) -> OpCounters {
        match self {
            Backend::Full(f) => f.rec.snapshot(),
            Backend::Lazy(s) => s.counters(),
            Backend::Contract(ix) => ix.counters(),
            Backend::Factored(ix) => ix.counters(),
            Backend::Brute(_) | Backend::PolyBrute { .. } => OpCounters::default(),
        }
    }
}

/// How names map onto nodes of the tree a backend runs on.
#[derive(Debug)]
enum Names {
    Tree(CausalTree),
    Compiled { pt: Polytree, cliques: Vec<Clique> },
    Variables(Polytree),
}

/// A network bound to one strategy.
#[derive(Debug)]
pub struct Session {
    strategy: Strategy,
    network: Network,
    names: Names,
    backend: Backend,
}

impl Session {
    pub fn new(network: &Network, strategy: Strategy) -> Result<Session> {
        Session::with_options(network, strategy, CompileOptions::default())
    }

    pub fn with_options(network: &Network, strategy: Strategy, opts: CompileOptions) -> Result<Session> {
        if !network.strategies().contains(&strategy) {
            return Err(Error::UnsupportedStrategy(strategy.to_string(), network.kind()));
        }
        let (names, backend) = match network {
            Network::Tree(t) => {
                let backend = match strategy {
                    Strategy::Full => Backend::Full(FullBackend {
                        tree: t.clone(),
                        table: None,
                        rec: OpRecorder::new(),
                    }),
                    Strategy::Lazy => Backend::Lazy(LazyState::new(t.clone())),
                    // normalization keeps original ids, so names resolve alike
                    Strategy::Contract => Backend::Contract(contract(&normalize_tree(t)?.0)?),
                    Strategy::Brute => Backend::Brute(t.clone()),
                    Strategy::Polytree => unreachable!("filtered above"),
                };
                (Names::Tree(t.clone()), backend)
            }
            Network::Polytree(pt) if strategy == Strategy::Brute => (
                Names::Variables(pt.clone()),
                Backend::PolyBrute {
                    pt: pt.clone(),
                    evidence: pt.domains().iter().map(|&k| vec![1.0; k]).collect(),
                },
            ),
            Network::Polytree(pt) => {
                let c: CompiledPolytree = compile_polytree(pt, opts)?;
                let backend = match strategy {
                    Strategy::Full => Backend::Full(FullBackend {
                        tree: c.tree.clone(),
                        table: None,
                        rec: OpRecorder::new(),
                    }),
                    Strategy::Lazy => Backend::Lazy(LazyState::new(c.tree.clone())),
                    Strategy::Contract => Backend::Contract(contract(&c.tree)?),
                    Strategy::Polytree => {
                        Backend::Factored(ContractionIndex::with_coefficients(c.tree.clone(), c.factored.clone())?)
                    }
                    Strategy::Brute => unreachable!("handled above"),
                };
                let names = Names::Compiled {
                    pt: pt.clone(),
                    cliques: c.join_tree.cliques.clone(),
                };
                (names, backend)
            }
        };
        Ok(Session {
            strategy,
            network: network.clone(),
            names,
            backend,
        })
    }

    pub fn strategy(&self) -> Strategy {
        self.strategy
    }

    pub fn network(&self) -> &Network {
        &self.network
    }

    /// Installs evidence on a tree leaf or a polytree variable.
    pub fn update(&mut self, target: &str, evidence: Evidence) -> Result<()> {
        let node = match &self.names {
            Names::Tree(t) => t.node_id(target)?,
            Names::Compiled { pt, .. } => NodeId(pt.len() + pt.index_of(target)?),
            Names::Variables(pt) => NodeId(pt.index_of(target)?),
        };
        self.backend.set(node, evidence)
    }

    /// Posterior of a tree node or a polytree variable.
    pub fn query(&mut self, target: &str) -> Result<Belief> {
        match &self.names {
            Names::Tree(t) => {
                let x = t.node_id(target)?;
                self.backend.belief(x)
            }
            Names::Variables(pt) => {
                let v = pt.index_of(target)?;
                self.backend.belief(NodeId(v))
            }
            Names::Compiled { pt, cliques } => {
                let v = pt.index_of(target)?;
                let clique = cliques[v].clone();
                let b = self.backend.belief(NodeId(v))?;
                let m = clique.marginalize(&b.dist, v).expect("own clique holds the variable");
                Belief::from_unnormalized(target, &m)
            }
        }
    }

    /// Validates and applies one command; returns the belief for queries.
    pub fn apply(&mut self, cmd: &Command) -> Result<Option<Belief>> {
        match self.network.evidence_for(cmd)? {
            Some(ev) => self.update(cmd.target(), ev).map(|_| None),
            None => self.query(cmd.target()).map(Some),
        }
    }

    pub fn counters(&self) -> OpCounters {
        self.backend.counters()
    }

    /// Corrupts one stored coefficient of a contraction-based session.
    #[doc(hidden)]
    pub fn inject_fault(&mut self) -> Result<()> {
        match &mut self.backend {
            Backend::Contract(ix) => ix.inject_fault(),
            Backend::Factored(ix) => ix.inject_fault(),
            _ => return Err(Error::UnsupportedStrategy(self.strategy.to_string(), "fault injection")),
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::generate::rng;
    use crate::jointree::random_polytree;
    use crate::linalg::max_abs_diff;
    use crate::stream::parse_stream;

    const IDENTITY3: &str = r#"{"nodes":[
        {"id":"u","domain":2,"parent":null,"prior":[0.5,0.5]},
        {"id":"e","domain":2,"parent":"u","cpt":[[1,0],[0,1]],"evidence":[1,1]},
        {"id":"f","domain":2,"parent":"u","cpt":[[1,0],[0,1]],"evidence":[1,1]}]}"#;

    #[test]
    fn identity_tree_all_strategies() {
        let net = Network::from_json(IDENTITY3).unwrap();
        let ops = parse_stream("U e 0\nQ u\nQ f").unwrap();
        for &s in net.strategies() {
            let mut sess = Session::new(&net, s).unwrap();
            let out: Vec<Belief> = ops.iter().filter_map(|o| sess.apply(&o.command).unwrap()).collect();
            assert_eq!(out[0].dist, vec![1.0, 0.0], "{s}");
            assert_eq!(out[1].dist, vec![1.0, 0.0], "{s}");
        }
        assert!(matches!(
            Session::new(&net, Strategy::Polytree),
            Err(Error::UnsupportedStrategy(_, _))
        ));
        let mut sess = Session::new(&net, Strategy::Full).unwrap();
        let bad = parse_stream("U u 0").unwrap();
        assert!(matches!(sess.apply(&bad[0].command), Err(Error::NotALeaf(_))));
        let bad = parse_stream("U e 2").unwrap();
        assert!(matches!(sess.apply(&bad[0].command), Err(Error::DimensionMismatch { .. })));
        let bad = parse_stream("Q zz").unwrap();
        assert!(matches!(sess.apply(&bad[0].command), Err(Error::UnknownNode(_))));
    }

    #[test]
    fn polytree_strategies_agree() {
        let pt = random_polytree(7, 2, 3, &mut rng(4)).unwrap();
        let net = Network::Polytree(pt.clone());
        let mut sessions: Vec<Session> = net.strategies().iter().map(|&s| Session::new(&net, s).unwrap()).collect();
        let ops = parse_stream("U v3 1\nU v0 1\nQ v1\nQ v5\nU v6 0\nQ v3").unwrap();
        for op in &ops {
            let outs: Vec<Option<Belief>> = sessions.iter_mut().map(|s| s.apply(&op.command).unwrap()).collect();
            if let Some(Some(first)) = outs.first() {
                for o in &outs {
                    assert!(max_abs_diff(&o.as_ref().unwrap().dist, &first.dist) < 1e-10);
                }
            }
        }
        assert!(matches!(sessions[0].query("nope"), Err(Error::UnknownVariable(_))));
    }
}
