//! Update/query cycle benchmarks reported as CSV rows of counted work.

use std::fmt;
use std::io::{Read, Write};
use std::str::FromStr;
use std::time::Instant;

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::generate::{balanced_tree, chain_tree, clear_evidence, mild_evidence, random_tree, rng};
use crate::model::{CausalTree, Evidence};
use crate::session::{Network, Session, Strategy};

/// Exact CSV header of a bench report.
pub const CSV_HEADER: &str = "shape,n,k,strategy,op,count,mult_adds,equation_evals,wall_ns";

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum TreeShape {
    Chain,
    Balanced,
    Random,
}

impl TreeShape {
    pub fn name(self) -> &'static str {
        match self {
            TreeShape::Chain => "chain",
            TreeShape::Balanced => "balanced",
            TreeShape::Random => "random",
        }
    }

    pub fn generate<R: Rng>(self, n: usize, k: usize, rng: &mut R) -> Result<CausalTree> {
        match self {
            TreeShape::Chain => chain_tree(n, k, rng),
            TreeShape::Balanced => balanced_tree(n, k, rng),
            TreeShape::Random => random_tree(n, k, rng),
        }
    }
}

impl fmt::Display for TreeShape {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for TreeShape {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        [TreeShape::Chain, TreeShape::Balanced, TreeShape::Random]
            .into_iter()
            .find(|x| x.name() == s)
            .ok_or_else(|| Error::Parse(format!("unknown shape `{s}`")))
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct BenchRow {
    pub shape: String,
    pub n: usize,
    pub k: usize,
    pub strategy: String,
    /// `build`, `update`, `query` or `cycle` (update plus query).
    pub op: String,
    pub count: u64,
    pub mult_adds: u64,
    pub equation_evals: u64,
    pub wall_ns: u64,
}

#[derive(Debug, Clone)]
pub struct BenchConfig {
    pub shape: TreeShape,
    pub sizes: Vec<usize>,
    pub k: usize,
    pub cycles: usize,
    pub seed: u64,
    pub strategies: Vec<Strategy>,
}

impl BenchConfig {
    pub fn new(shape: TreeShape, sizes: Vec<usize>, k: usize, cycles: usize, seed: u64) -> Self {
        BenchConfig {
            shape,
            sizes,
            k,
            cycles,
            seed,
            strategies: vec![Strategy::Full, Strategy::Contract],
        }
    }
}

#[derive(Default, Clone, Copy)]
struct Tally {
    count: u64,
    mult_adds: u64,
    equation_evals: u64,
    wall_ns: u64,
}

impl Tally {
    fn add(&mut self, d: crate::counters::OpCounters, ns: u128) {
        self.count += 1;
        self.mult_adds += d.scalar_mult_adds;
        self.equation_evals += d.equation_evals;
        self.wall_ns += ns as u64;
    }
}

/// Runs `cycles` random update-then-query cycles per size and strategy.
/// Every strategy sees the same tree and the same cycle sequence. Leaves
/// start uninformative and updates install mild soft evidence, so long
/// runs on large trees stay clear of underflow; counted work does not
/// depend on the likelihood values.
pub fn run_bench(cfg: &BenchConfig) -> Result<Vec<BenchRow>> {
    if cfg.k == 0 || cfg.cycles == 0 || cfg.sizes.is_empty() || cfg.sizes.contains(&0) {
        return Err(Error::Parse("bench parameters must be positive".into()));
    }
    let mut rows = Vec::new();
    for &n in &cfg.sizes {
        let mut g = rng(cfg.seed ^ (n as u64).rotate_left(32));
        let mut tree = cfg.shape.generate(n, cfg.k, &mut g)?;
        clear_evidence(&mut tree);
        let leaves = tree.leaves();
        let plan: Vec<(String, Evidence, String)> = (0..cfg.cycles)
            .map(|_| {
                let leaf = tree.name(leaves[g.random_range(0..leaves.len())]).to_string();
                let ev = Evidence::new(mild_evidence(cfg.k, &mut g));
                let q = tree.name(crate::model::NodeId(g.random_range(0..tree.len()))).to_string();
                (leaf, ev, q)
            })
            .collect();
        let net = Network::Tree(tree);
        let n_nodes = match &net {
            Network::Tree(t) => t.len(),
            Network::Polytree(_) => unreachable!(),
        };
        for &strategy in &cfg.strategies {
            let start = Instant::now();
            let mut sess = Session::new(&net, strategy)?;
            let mut build = Tally::default();
            build.add(sess.counters(), start.elapsed().as_nanos());
            let (mut upd, mut qry) = (Tally::default(), Tally::default());
            for (leaf, ev, q) in &plan {
                let before = sess.counters();
                let t = Instant::now();
                sess.update(leaf, ev.clone())?;
                let mid = sess.counters();
                upd.add(mid - before, t.elapsed().as_nanos());
                let t = Instant::now();
                sess.query(q)?;
                qry.add(sess.counters() - mid, t.elapsed().as_nanos());
            }
            let cycle = Tally {
                count: upd.count,
                mult_adds: upd.mult_adds + qry.mult_adds,
                equation_evals: upd.equation_evals + qry.equation_evals,
                wall_ns: upd.wall_ns + qry.wall_ns,
            };
            for (op, t) in [("build", build), ("update", upd), ("query", qry), ("cycle", cycle)] {
                rows.push(BenchRow {
                    shape: cfg.shape.to_string(),
                    n: n_nodes,
                    k: cfg.k,
                    strategy: strategy.to_string(),
                    op: op.to_string(),
                    count: t.count,
                    mult_adds: t.mult_adds,
                    equation_evals: t.equation_evals,
                    wall_ns: t.wall_ns,
                });
            }
        }
    }
    Ok(rows)
}

pub fn write_csv<W: Write>(rows: &[BenchRow], out: W) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    if rows.is_empty() {
        w.write_record(CSV_HEADER.split(','))
            .map_err(|e| Error::Parse(e.to_string()))?;
    }
    for r in rows {
        w.serialize(r).map_err(|e| Error::Parse(e.to_string()))?;
    }
    w.flush().map_err(|e| Error::Parse(e.to_string()))
}

pub fn read_csv<R: Read>(input: R) -> Result<Vec<BenchRow>> {
    csv::Reader::from_reader(input)
        .deserialize()
        .map(|r| r.map_err(|e| Error::Parse(e.to_string())))
        .collect()
}

/// Mult-adds per cycle of `strategy` at size `n`, if present.
pub fn per_cycle(rows: &[BenchRow], strategy: &str, n: usize) -> Option<f64> {
    rows.iter()
        .find(|r| r.strategy == strategy && r.n == n && r.op == "cycle")
        .map(|r| r.mult_adds as f64 / r.count as f64)
}
