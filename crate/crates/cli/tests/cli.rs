use std::fs;
use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use logbel_core::generate::{chain_tree, random_evidence, random_tree, rng};
use logbel_core::jointree::random_polytree;
use logbel_core::CausalTree;
use rand::Rng;
use tempfile::TempDir;

const IDENTITY3: &str = r#"{"nodes":[
  {"id":"u","domain":2,"prior":[0.5,0.5]},
  {"id":"e","domain":2,"parent":"u","cpt":[[1,0],[0,1]],"evidence":[1,1]},
  {"id":"f","domain":2,"parent":"u","cpt":[[1,0],[0,1]],"evidence":[1,1]}
]}"#;

fn logbel(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_logbel")).args(args).output().unwrap()
}

fn write(dir: &TempDir, name: &str, text: &str) -> PathBuf {
    let p = dir.path().join(name);
    fs::write(&p, text).unwrap();
    p
}

fn s(p: &Path) -> &str {
    p.to_str().unwrap()
}

fn run(net: &Path, ops: &Path, strategy: &str) -> Output {
    logbel(&["run", "--network", s(net), "--ops", s(ops), "--strategy", strategy])
}

fn stdout(o: &Output) -> String {
    String::from_utf8(o.stdout.clone()).unwrap()
}

/// Random stream over a tree: leaf updates and queries on any node.
fn tree_stream(t: &CausalTree, len: usize, seed: u64) -> String {
    let mut g = rng(seed);
    let leaves = t.leaves();
    let mut out = String::from("# generated\n");
    for _ in 0..len {
        if g.random_bool(0.5) {
            let leaf = leaves[g.random_range(0..leaves.len())];
            let k = t.node(leaf).domain();
            if g.random_bool(0.5) {
                out += &format!("U {} {}\n", t.name(leaf), g.random_range(0..k));
            } else {
                let l: Vec<String> = random_evidence(k, &mut g).iter().map(|x| format!("{x:e}")).collect();
                out += &format!("S {} {}\n", t.name(leaf), l.join(" "));
            }
        } else {
            let x = logbel_core::NodeId(g.random_range(0..t.len()));
            out += &format!("Q {}\n", t.name(x));
        }
    }
    out
}

#[test]
fn identity_tree_example() {
    let dir = TempDir::new().unwrap();
    let net = write(&dir, "net.json", IDENTITY3);
    let ops = write(&dir, "ops.txt", "Q u\nU e 0\nQ u\n");
    for strategy in ["full", "lazy", "contract", "brute"] {
        let o = run(&net, &ops, strategy);
        assert!(o.status.success(), "{strategy}: {}", String::from_utf8_lossy(&o.stderr));
        assert_eq!(stdout(&o), "Q u 0.500000000000 0.500000000000\nQ u 1.000000000000 0.000000000000\n");
    }
}

#[test]
fn strategies_agree_on_random_tree() {
    let dir = TempDir::new().unwrap();
    let t = random_tree(21, 3, &mut rng(9)).unwrap();
    let net = write(&dir, "net.json", &t.to_json());
    let ops = write(&dir, "ops.txt", &tree_stream(&t, 200, 10));
    let outputs: Vec<String> = ["full", "lazy", "contract", "brute"]
        .iter()
        .map(|st| {
            let o = run(&net, &ops, st);
            assert!(o.status.success(), "{st}: {}", String::from_utf8_lossy(&o.stderr));
            stdout(&o)
        })
        .collect();
    assert!(outputs[0].lines().count() > 50);
    assert_same_results(&outputs);
}

/// Query outputs agree line by line up to 1e-10.
fn assert_same_results(outputs: &[String]) {
    for other in &outputs[1..] {
        for (a, b) in outputs[0].lines().zip(other.lines()) {
            let (wa, wb): (Vec<&str>, Vec<&str>) = (a.split(' ').collect(), b.split(' ').collect());
            assert_eq!(wa[..2], wb[..2]);
            for (x, y) in wa[2..].iter().zip(&wb[2..]) {
                let (x, y): (f64, f64) = (x.parse().unwrap(), y.parse().unwrap());
                assert!((x - y).abs() <= 1e-10, "{a} vs {b}");
            }
        }
        assert_eq!(outputs[0].lines().count(), other.lines().count());
    }
}

#[test]
fn verify_passes_and_fault_exits_3() {
    let dir = TempDir::new().unwrap();
    let t = chain_tree(8, 2, &mut rng(3)).unwrap();
    let net = write(&dir, "chain.json", &t.to_json());
    let mut text = tree_stream(&t, 100, 4);
    text += &t.ids().map(|x| format!("Q {}\n", t.name(x))).collect::<String>();
    let ops = write(&dir, "ops.txt", &text);
    let base = ["verify", "--network", s(&net), "--ops", s(&ops), "--oracle", "full", "--tol", "1e-8"];
    let o = logbel(&base);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    assert!(stdout(&o).starts_with("PASS contract vs full"));

    let mut faulty = base.to_vec();
    faulty.push("--inject-fault");
    let o = logbel(&faulty);
    assert_eq!(o.status.code(), Some(3));
    let err = String::from_utf8(o.stderr).unwrap();
    assert!(err.contains("FAIL line") && err.contains("`Q "), "{err}");
}

#[test]
fn verify_polytree_against_brute() {
    let dir = TempDir::new().unwrap();
    let pt = random_polytree(10, 2, 3, &mut rng(21)).unwrap();
    let net = write(&dir, "poly.json", &pt.to_json());
    let mut g = rng(22);
    let mut text = String::new();
    for _ in 0..200 {
        let v = pt.var(g.random_range(0..pt.len()));
        match g.random_range(0..3) {
            0 => text += &format!("U {} {}\n", v.name, g.random_range(0..v.domain)),
            1 => {
                let l: Vec<String> = (0..v.domain).map(|_| format!("{:.6}", g.random_range(0.05..1.0))).collect();
                text += &format!("S {} {}\n", v.name, l.join(" "));
            }
            _ => text += &format!("Q {}\n", v.name),
        }
    }
    let ops = write(&dir, "ops.txt", &text);
    let o = logbel(&["verify", "--network", s(&net), "--ops", s(&ops), "--oracle", "brute", "--tol", "1e-9"]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    assert!(stdout(&o).starts_with("PASS contract+polytree vs brute"), "{}", stdout(&o));

    let outputs: Vec<String> = ["polytree", "full", "lazy", "contract", "brute"]
        .iter()
        .map(|st| {
            let o = run(&net, &ops, st);
            assert!(o.status.success(), "{st}: {}", String::from_utf8_lossy(&o.stderr));
            stdout(&o)
        })
        .collect();
    assert_same_results(&outputs);
}

#[test]
fn error_exit_codes() {
    let dir = TempDir::new().unwrap();
    let net = write(&dir, "net.json", IDENTITY3);

    // the whole stream is validated before anything runs
    let ops = write(&dir, "bad.txt", "Q u\nU e 7\n");
    let o = run(&net, &ops, "contract");
    assert_eq!(o.status.code(), Some(1));
    assert!(o.stdout.is_empty());
    assert!(String::from_utf8_lossy(&o.stderr).contains("line 2"));

    for bad in ["Q nope\n", "U u 0\n", "X e 0\n", "S e 0.5\n"] {
        let ops = write(&dir, "bad.txt", bad);
        assert_eq!(run(&net, &ops, "contract").status.code(), Some(1), "{bad}");
    }
    let ops = write(&dir, "ok.txt", "Q u\n");
    assert_eq!(run(&net, &ops, "polytree").status.code(), Some(1));
    let broken = write(&dir, "broken.json", "{\"nodes\": [");
    assert_eq!(run(&broken, &ops, "full").status.code(), Some(1));

    let ops = write(&dir, "impossible.txt", "U e 0\nU f 1\nQ u\n");
    for strategy in ["full", "lazy", "contract", "brute"] {
        assert_eq!(run(&net, &ops, strategy).status.code(), Some(2), "{strategy}");
    }
}

fn bench(dir: &TempDir, name: &str) -> (Output, PathBuf) {
    let csv = dir.path().join(name);
    let o = logbel(&[
        "bench", "--shape", "random", "--n", "31,63", "--k", "2", "--cycles", "50", "--seed", "5", "--csv", s(&csv),
    ]);
    (o, csv)
}

/// Drops the wall-clock column.
fn counted(csv: &Path) -> Vec<String> {
    fs::read_to_string(csv)
        .unwrap()
        .lines()
        .map(|l| l.rsplit_once(',').unwrap().0.to_string())
        .collect()
}

#[test]
fn bench_csv_is_deterministic() {
    let dir = TempDir::new().unwrap();
    let (o, a) = bench(&dir, "a.csv");
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    let (_, b) = bench(&dir, "b.csv");
    let text = fs::read_to_string(&a).unwrap();
    assert_eq!(text.lines().next().unwrap(), "shape,n,k,strategy,op,count,mult_adds,equation_evals,wall_ns");
    assert_eq!(text.lines().count(), 1 + 2 * 2 * 4);
    assert_eq!(counted(&a), counted(&b));

    let o = logbel(&["bench", "--shape", "chain", "--n", "15", "--csv", "/nonexistent/dir/out.csv"]);
    assert_eq!(o.status.code(), Some(1));
}
