//! `logbel`: replay update/query streams, check strategies against an
//! oracle, and write operation-count benchmarks.

use std::fmt::Write as _;
use std::fs;
use std::io::{self, Write};
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Parser, Subcommand, ValueEnum};
use logbel_core::bench::{per_cycle, run_bench, write_csv, BenchConfig, TreeShape};
use logbel_core::linalg::max_abs_diff;
use logbel_core::stream::{parse_stream, Command, Op};
use logbel_core::{Belief, Error, Evidence, Network, Session, Strategy};

#[derive(Parser)]
#[command(name = "logbel", version, about = "Dynamic exact inference on causal trees and polytrees")]
struct Cli {
    #[command(subcommand)]
    command: Cmd,
}

#[derive(Subcommand)]
enum Cmd {
    /// Replay a stream and print every query result.
    Run {
        #[arg(long)]
        network: PathBuf,
        #[arg(long)]
        ops: PathBuf,
        #[arg(long, default_value = "contract")]
        strategy: Strategy,
    },
    /// Replay a stream under the contraction strategies and an oracle and
    /// compare every query.
    Verify {
        #[arg(long)]
        network: PathBuf,
        #[arg(long)]
        ops: PathBuf,
        #[arg(long, value_enum, default_value = "full")]
        oracle: Oracle,
        #[arg(long, default_value_t = 1e-9)]
        tol: f64,
        /// Corrupt one stored coefficient first (exercises the failure path).
        #[arg(long, hide = true)]
        inject_fault: bool,
    },
    /// Run random update+query cycles and write counters as CSV.
    Bench {
        #[arg(long)]
        shape: TreeShape,
        #[arg(long, value_delimiter = ',', required = true)]
        n: Vec<usize>,
        #[arg(long, default_value_t = 2)]
        k: usize,
        #[arg(long, default_value_t = 1000)]
        cycles: usize,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long)]
        csv: PathBuf,
        #[arg(long, value_delimiter = ',', default_value = "full,contract")]
        strategies: Vec<Strategy>,
    },
}

#[derive(Clone, Copy, ValueEnum)]
enum Oracle {
    Brute,
    Full,
}

impl From<Oracle> for Strategy {
    fn from(o: Oracle) -> Strategy {
        match o {
            Oracle::Brute => Strategy::Brute,
            Oracle::Full => Strategy::Full,
        }
    }
}

/// Exit status with the message to print on stderr.
struct Failure(u8, String);

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        let code = if matches!(e, Error::ImpossibleEvidence(_)) { 2 } else { 1 };
        Failure(code, e.to_string())
    }
}

fn read(path: &Path) -> Result<String, Failure> {
    fs::read_to_string(path).map_err(|e| Failure(1, format!("cannot read {}: {e}", path.display())))
}

/// A stream op with the evidence it installs (`None` for queries).
type Checked = (Op, Option<Evidence>);

/// Loads the network and a stream that is fully validated against it.
fn load(network: &Path, ops: &Path) -> Result<(Network, Vec<Checked>), Failure> {
    let net = Network::from_json(&read(network)?).map_err(|e| Failure(1, format!("{}: {e}", network.display())))?;
    let ops = parse_stream(&read(ops)?).map_err(|e| Failure(1, format!("{}: {e}", ops.display())))?;
    let checked = ops
        .into_iter()
        .map(|op| {
            let ev = net
                .evidence_for(&op.command)
                .map_err(|e| Failure(1, format!("line {}: {e}", op.line)))?;
            Ok((op, ev))
        })
        .collect::<Result<_, Failure>>()?;
    Ok((net, checked))
}

fn format_query(id: &str, b: &Belief) -> String {
    let mut s = format!("Q {id}");
    for p in &b.dist {
        write!(s, " {p:.12}").expect("string write");
    }
    s
}

/// Applies one validated op; the belief for queries.
fn step(sess: &mut Session, op: &Op, ev: &Option<Evidence>) -> Result<Option<Belief>, Failure> {
    let target = op.command.target();
    match ev {
        Some(ev) => sess.update(target, ev.clone()).map(|_| None),
        None => sess.query(target).map(Some),
    }
    .map_err(|e| {
        let f = Failure::from(e);
        Failure(f.0, format!("line {}: {}", op.line, f.1))
    })
}

fn cmd_run(network: &Path, ops: &Path, strategy: Strategy) -> Result<(), Failure> {
    let (net, ops) = load(network, ops)?;
    let mut sess = Session::new(&net, strategy)?;
    let stdout = io::stdout();
    let mut out = stdout.lock();
    for (op, ev) in &ops {
        if let Some(b) = step(&mut sess, op, ev)? {
            writeln!(out, "{}", format_query(op.command.target(), &b)).map_err(|e| Failure(1, e.to_string()))?;
        }
    }
    Ok(())
}

fn cmd_verify(network: &Path, ops: &Path, oracle: Oracle, tol: f64, inject_fault: bool) -> Result<(), Failure> {
    let (net, ops) = load(network, ops)?;
    let mut oracle_sess = Session::new(&net, oracle.into())?;
    let mut subjects: Vec<Session> = [Strategy::Contract, Strategy::Polytree]
        .into_iter()
        .filter(|s| net.strategies().contains(s))
        .map(|s| Session::new(&net, s))
        .collect::<Result<_, _>>()?;
    if inject_fault {
        for s in &mut subjects {
            s.inject_fault()?;
        }
    }
    let mut worst: f64 = 0.0;
    let mut queries = 0usize;
    for (op, ev) in &ops {
        let want = step(&mut oracle_sess, op, ev)?;
        for sess in &mut subjects {
            let got = step(sess, op, ev)?;
            if let (Some(w), Some(g)) = (&want, &got) {
                let d = max_abs_diff(&w.dist, &g.dist);
                worst = worst.max(d);
                if d > tol || d.is_nan() {
                    return Err(Failure(
                        3,
                        format!(
                            "FAIL line {}: `Q {}` under {} deviates from {} by {d:.3e} (tol {tol:.1e})\n  got  {}\n  want {}",
                            op.line,
                            op.command.target(),
                            sess.strategy(),
                            oracle_sess.strategy(),
                            format_query(op.command.target(), g),
                            format_query(op.command.target(), w),
                        ),
                    ));
                }
            }
        }
        queries += usize::from(matches!(op.command, Command::Query { .. }));
    }
    let names: Vec<String> = subjects.iter().map(|s| s.strategy().to_string()).collect();
    println!(
        "PASS {} vs {}: {queries} queries, max deviation {worst:.3e} (tol {tol:.1e})",
        names.join("+"),
        oracle_sess.strategy()
    );
    Ok(())
}

fn cmd_bench(cfg: BenchConfig, csv: &Path) -> Result<(), Failure> {
    let file = fs::File::create(csv).map_err(|e| Failure(1, format!("cannot write {}: {e}", csv.display())))?;
    let rows = run_bench(&cfg)?;
    write_csv(&rows, io::BufWriter::new(file))?;
    let mut sizes: Vec<usize> = rows.iter().map(|r| r.n).collect();
    sizes.dedup();
    for n in sizes {
        let mut line = format!("{} n={n} k={}:", cfg.shape, cfg.k);
        for s in &cfg.strategies {
            if let Some(c) = per_cycle(&rows, s.name(), n) {
                write!(line, " {s} {c:.1}").expect("string write");
            }
        }
        println!("{line} mult-adds/cycle");
    }
    Ok(())
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = match cli.command {
        Cmd::Run { network, ops, strategy } => cmd_run(&network, &ops, strategy),
        Cmd::Verify {
            network,
            ops,
            oracle,
            tol,
            inject_fault,
        } => cmd_verify(&network, &ops, oracle, tol, inject_fault),
        Cmd::Bench {
            shape,
            n,
            k,
            cycles,
            seed,
            csv,
            strategies,
        } => {
            let mut cfg = BenchConfig::new(shape, n, k, cycles, seed);
            cfg.strategies = strategies;
            cmd_bench(cfg, &csv)
        }
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(Failure(code, msg)) => {
            eprintln!("logbel: {msg}");
            ExitCode::from(code)
        }
    }
}
