//! Behavior tests for the `binquant` binary: each subcommand is exercised as
//! a subprocess and compared against direct library calls where the contract
//! promises the CLI is a thin shell.

use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use binquant::io;
use binquant::{fit, FeatureMatrix, FitConfig, Method, PreprocessKind, RandomSource};

fn bin() -> Command {
    Command::new(env!("CARGO_BIN_EXE_binquant"))
}

fn run(args: &[&str]) -> Output {
    bin().args(args).output().expect("binary spawns")
}

fn assert_success(out: &Output) {
    assert!(
        out.status.success(),
        "command failed\nstdout: {}\nstderr: {}",
        String::from_utf8_lossy(&out.stdout),
        String::from_utf8_lossy(&out.stderr)
    );
}

fn assert_failure_mentioning(out: &Output, needles: &[&str]) {
    assert!(!out.status.success(), "command unexpectedly succeeded");
    let stderr = String::from_utf8_lossy(&out.stderr);
    for needle in needles {
        assert!(
            stderr.contains(needle),
            "stderr should mention {needle:?}, got: {stderr}"
        );
    }
}

fn gaussian_features(seed: u64, d: usize, n: usize) -> FeatureMatrix {
    let mut rng = RandomSource::new(seed);
    let data: Vec<f64> = (0..d * n).map(|_| rng.normal()).collect();
    FeatureMatrix::from_column_major(d, n, &data).unwrap()
}

fn write_features(path: &Path, x: &FeatureMatrix) {
    io::save_features(path, x).unwrap();
}

struct Workspace {
    _dir: tempfile::TempDir,
    root: PathBuf,
}

impl Workspace {
    fn new() -> Self {
        let dir = tempfile::tempdir().unwrap();
        let root = dir.path().to_path_buf();
        Workspace { _dir: dir, root }
    }

    fn path(&self, name: &str) -> PathBuf {
        self.root.join(name)
    }

    fn s(&self, name: &str) -> String {
        self.path(name).to_str().unwrap().to_owned()
    }
}

#[test]
fn fit_is_deterministic_and_reports_the_trace() {
    let ws = Workspace::new();
    write_features(&ws.path("db.bqf"), &gaussian_features(1, 12, 80));
    for out_name in ["m1.bqm", "m2.bqm"] {
        let out = run(&[
            "fit",
            "--input",
            &ws.s("db.bqf"),
            "--method",
            "atq",
            "--bits",
            "16",
            "--seed",
            "7",
            "--out",
            &ws.s(out_name),
        ]);
        assert_success(&out);
        let stdout = String::from_utf8_lossy(&out.stdout);
        assert!(stdout.contains("iterations="), "trace summary: {stdout}");
        assert!(stdout.contains("final_j="), "trace summary: {stdout}");
        assert!(stdout.contains("stop="), "trace summary: {stdout}");
    }
    let a = std::fs::read(ws.path("m1.bqm")).unwrap();
    let b = std::fs::read(ws.path("m2.bqm")).unwrap();
    assert_eq!(a, b, "same fit invocation must be byte-identical");
}

#[test]
fn fit_atq_on_a_single_sample_fails_naming_the_requirement() {
    let ws = Workspace::new();
    write_features(&ws.path("one.bqf"), &gaussian_features(2, 6, 1));
    let out = run(&[
        "fit",
        "--input",
        &ws.s("one.bqf"),
        "--method",
        "atq",
        "--out",
        &ws.s("m.bqm"),
    ]);
    assert_failure_mentioning(&out, &["n >= 2"]);
}

#[test]
fn fit_rejects_unknown_method_and_bad_optimizer_constants() {
    let ws = Workspace::new();
    write_features(&ws.path("db.bqf"), &gaussian_features(3, 6, 20));
    let base = ["fit", "--input", &ws.s("db.bqf"), "--out", &ws.s("m.bqm")].map(str::to_owned);

    let mut bad_method = base.to_vec();
    bad_method.extend(["--method".into(), "pq".into()]);
    let out = bin().args(&bad_method).output().unwrap();
    assert_failure_mentioning(&out, &["pq"]);

    let mut bad_lambda = base.to_vec();
    bad_lambda.extend([
        "--method".into(),
        "atq".into(),
        "--lambda".into(),
        "1.5".into(),
    ]);
    let out = bin().args(&bad_lambda).output().unwrap();
    assert_failure_mentioning(&out, &["lambda"]);
}

#[test]
fn encode_reproduces_library_codes_bitwise() {
    let ws = Workspace::new();
    let x = gaussian_features(4, 10, 60);
    write_features(&ws.path("db.bqf"), &x);
    assert_success(&run(&[
        "fit",
        "--input",
        &ws.s("db.bqf"),
        "--method",
        "cq",
        "--bits",
        "24",
        "--seed",
        "5",
        "--out",
        &ws.s("m.bqm"),
    ]));
    assert_success(&run(&[
        "encode",
        "--model",
        &ws.s("m.bqm"),
        "--input",
        &ws.s("db.bqf"),
        "--out",
        &ws.s("c1.bqc"),
    ]));
    assert_success(&run(&[
        "encode",
        "--model",
        &ws.s("m.bqm"),
        "--input",
        &ws.s("db.bqf"),
        "--out",
        &ws.s("c2.bqc"),
    ]));
    assert_eq!(
        std::fs::read(ws.path("c1.bqc")).unwrap(),
        std::fs::read(ws.path("c2.bqc")).unwrap(),
        "re-encoding must be reproducible bitwise"
    );

    // The CLI is a thin shell: the same fit composed through the library
    // yields the same code words.
    let config = FitConfig {
        preprocess: PreprocessKind::Center,
        ..FitConfig::default()
    };
    let model = fit(Method::Cq, &x, 24, 5, &config).unwrap();
    let expected = model.encode(&x).unwrap();
    let from_cli = io::load_codes(&ws.path("c1.bqc")).unwrap();
    assert_eq!(from_cli.words(), expected.words());
    assert_eq!(from_cli.r(), expected.r());
}

#[test]
fn encode_with_mismatched_dimensions_names_both() {
    let ws = Workspace::new();
    write_features(&ws.path("train.bqf"), &gaussian_features(5, 8, 30));
    write_features(&ws.path("other.bqf"), &gaussian_features(6, 5, 30));
    assert_success(&run(&[
        "fit",
        "--input",
        &ws.s("train.bqf"),
        "--method",
        "lsh",
        "--out",
        &ws.s("m.bqm"),
    ]));
    let out = run(&[
        "encode",
        "--model",
        &ws.s("m.bqm"),
        "--input",
        &ws.s("other.bqf"),
        "--out",
        &ws.s("c.bqc"),
    ]);
    assert_failure_mentioning(&out, &["8", "5"]);
}

#[test]
fn encode_of_an_empty_feature_file_yields_a_valid_empty_code_file() {
    let ws = Workspace::new();
    write_features(&ws.path("train.bqf"), &gaussian_features(7, 8, 30));
    write_features(&ws.path("empty.bqf"), &gaussian_features(0, 8, 0));
    assert_success(&run(&[
        "fit",
        "--input",
        &ws.s("train.bqf"),
        "--method",
        "lsh",
        "--bits",
        "16",
        "--out",
        &ws.s("m.bqm"),
    ]));
    assert_success(&run(&[
        "encode",
        "--model",
        &ws.s("m.bqm"),
        "--input",
        &ws.s("empty.bqf"),
        "--out",
        &ws.s("empty.bqc"),
    ]));
    let codes = io::load_codes(&ws.path("empty.bqc")).unwrap();
    assert_eq!(codes.len(), 0);
    assert_eq!(codes.r(), 16);
}

#[test]
fn query_returns_each_query_itself_at_distance_zero() {
    let ws = Workspace::new();
    let x = gaussian_features(8, 12, 40);
    write_features(&ws.path("db.bqf"), &x);
    assert_success(&run(&[
        "fit",
        "--input",
        &ws.s("db.bqf"),
        "--method",
        "lsh",
        "--bits",
        "32",
        "--seed",
        "3",
        "--out",
        &ws.s("m.bqm"),
    ]));
    assert_success(&run(&[
        "encode",
        "--model",
        &ws.s("m.bqm"),
        "--input",
        &ws.s("db.bqf"),
        "--out",
        &ws.s("db.bqc"),
    ]));
    let out = run(&[
        "query",
        "--db",
        &ws.s("db.bqc"),
        "--queries",
        &ws.s("db.bqc"),
        "-k",
        "1",
    ]);
    assert_success(&out);
    let stdout = String::from_utf8(out.stdout).unwrap();
    let lines: Vec<&str> = stdout.lines().collect();
    assert_eq!(lines.len(), 40);
    for (i, line) in lines.iter().enumerate() {
        assert_eq!(*line, format!("{i}: {i}:0"));
    }
}

#[test]
fn query_output_matches_the_library_ranking_prefix() {
    let ws = Workspace::new();
    let x = gaussian_features(9, 10, 25);
    let q = gaussian_features(10, 10, 4);
    write_features(&ws.path("db.bqf"), &x);
    write_features(&ws.path("q.bqf"), &q);
    for (input, out_name) in [("db.bqf", "db.bqc"), ("q.bqf", "q.bqc")] {
        assert_success(&run(&[
            "fit",
            "--input",
            &ws.s("db.bqf"),
            "--method",
            "sh",
            "--bits",
            "8",
            "--out",
            &ws.s("m.bqm"),
        ]));
        assert_success(&run(&[
            "encode",
            "--model",
            &ws.s("m.bqm"),
            "--input",
            &ws.s(input),
            "--out",
            &ws.s(out_name),
        ]));
    }
    let out = run(&[
        "query",
        "--db",
        &ws.s("db.bqc"),
        "--queries",
        &ws.s("q.bqc"),
        "-k",
        "5",
    ]);
    assert_success(&out);

    let db = io::load_codes(&ws.path("db.bqc")).unwrap();
    let queries = io::load_codes(&ws.path("q.bqc")).unwrap();
    let stdout = String::from_utf8(out.stdout).unwrap();
    for (i, line) in stdout.lines().enumerate() {
        let ranked = binquant::index::top_k(&db, queries.code(i), i, 5).unwrap();
        let expect: Vec<String> = ranked
            .entries
            .iter()
            .map(|(id, dist)| format!("{id}:{dist}"))
            .collect();
        assert_eq!(*line, format!("{i}: {}", expect.join(" ")));
    }
}

#[test]
fn query_with_k_beyond_the_database_fails() {
    let ws = Workspace::new();
    let x = gaussian_features(11, 10, 6);
    write_features(&ws.path("db.bqf"), &x);
    assert_success(&run(&[
        "fit",
        "--input",
        &ws.s("db.bqf"),
        "--method",
        "lsh",
        "--out",
        &ws.s("m.bqm"),
    ]));
    assert_success(&run(&[
        "encode",
        "--model",
        &ws.s("m.bqm"),
        "--input",
        &ws.s("db.bqf"),
        "--out",
        &ws.s("db.bqc"),
    ]));
    let out = run(&[
        "query",
        "--db",
        &ws.s("db.bqc"),
        "--queries",
        &ws.s("db.bqc"),
        "-k",
        "7",
    ]);
    assert_failure_mentioning(&out, &["k must satisfy", "6"]);
}

#[test]
fn bench_writes_the_expected_rows_and_is_deterministic() {
    let ws = Workspace::new();
    write_features(&ws.path("data.bqf"), &gaussian_features(12, 16, 160));
    let args = [
        "bench",
        "--input",
        &ws.s("data.bqf"),
        "--methods",
        "cq,atq",
        "--db-size",
        "120",
        "--query-size",
        "12",
        "--bit-sweep",
        "8,16,32",
        "--gt-neighbors",
        "5",
        "--seed",
        "9",
        "--out",
        &ws.s("r1.csv"),
    ]
    .map(str::to_owned);
    let out = bin().args(&args).output().unwrap();
    assert_success(&out);

    let mut again = args.to_vec();
    let last = again.len() - 1;
    again[last] = ws.s("r2.csv");
    assert_success(&bin().args(&again).output().unwrap());

    let r1 = std::fs::read(ws.path("r1.csv")).unwrap();
    let r2 = std::fs::read(ws.path("r2.csv")).unwrap();
    assert_eq!(r1, r2, "fixed seed must give identical CSV bytes");

    let text = String::from_utf8(r1).unwrap();
    let lines: Vec<&str> = text.lines().collect();
    assert_eq!(lines.len(), 1 + 2 * 3, "header plus methods x bits rows");
    assert_eq!(
        lines[0],
        "method,bits,neighbors,seed,map,fit_ms,encode_ms,query_ms"
    );
    for line in &lines[1..] {
        assert!(line.starts_with("atq,") || line.starts_with("cq,"));
        assert!(
            line.ends_with(",0.000,0.000,0.000"),
            "timings zeroed: {line}"
        );
    }
}

#[test]
fn bench_neighbor_sweep_reports_exactly_the_requested_neighbor_counts() {
    let ws = Workspace::new();
    write_features(&ws.path("data.bqf"), &gaussian_features(13, 16, 150));
    let out = run(&[
        "bench",
        "--input",
        &ws.s("data.bqf"),
        "--methods",
        "lsh,itq",
        "--db-size",
        "110",
        "--query-size",
        "10",
        "--neighbor-sweep",
        "10,25,50",
        "--bits",
        "16",
        "--seed",
        "2",
        "--out",
        &ws.s("r.csv"),
    ]);
    assert_success(&out);
    let text = std::fs::read_to_string(ws.path("r.csv")).unwrap();
    let mut seen: Vec<(String, usize, usize)> = Vec::new();
    for line in text.lines().skip(1) {
        let cols: Vec<&str> = line.split(',').collect();
        seen.push((
            cols[0].to_owned(),
            cols[1].parse().unwrap(),
            cols[2].parse().unwrap(),
        ));
    }
    let mut expect = Vec::new();
    for m in ["itq", "lsh"] {
        for k in [10usize, 25, 50] {
            expect.push((m.to_owned(), 16usize, k));
        }
    }
    assert_eq!(seen, expect);
}

#[test]
fn bench_with_insufficient_data_fails_naming_the_sizes() {
    let ws = Workspace::new();
    write_features(&ws.path("small.bqf"), &gaussian_features(14, 8, 50));
    let out = run(&[
        "bench",
        "--input",
        &ws.s("small.bqf"),
        "--db-size",
        "100",
        "--query-size",
        "10",
        "--out",
        &ws.s("r.csv"),
    ]);
    assert_failure_mentioning(&out, &["n = 50", "110"]);
    assert!(!ws.path("r.csv").exists(), "no CSV on failure");
}

#[test]
fn bench_reads_idx_and_csv_datasets_too() {
    let ws = Workspace::new();
    // CSV: one row per sample.
    let x = gaussian_features(15, 6, 40);
    let mut csv = String::new();
    for i in 0..x.n() {
        let row: Vec<String> = (0..x.d())
            .map(|j| format!("{}", x.data()[(j, i)]))
            .collect();
        csv.push_str(&row.join(","));
        csv.push('\n');
    }
    std::fs::write(ws.path("data.csv"), csv).unwrap();
    let out = run(&[
        "bench",
        "--input",
        &ws.s("data.csv"),
        "--methods",
        "lsh",
        "--db-size",
        "30",
        "--query-size",
        "5",
        "--bits",
        "8",
        "--gt-neighbors",
        "3",
        "--out",
        &ws.s("r.csv"),
    ]);
    assert_success(&out);
    let text = std::fs::read_to_string(ws.path("r.csv")).unwrap();
    assert_eq!(text.lines().count(), 2);

    // IDX: the bundled digit images, sniffed by magic number.
    let idx = concat!(env!("CARGO_MANIFEST_DIR"), "/tests/data/digits.idx3");
    let out = run(&[
        "bench",
        "--input",
        idx,
        "--methods",
        "lsh",
        "--db-size",
        "60",
        "--query-size",
        "6",
        "--bits",
        "8",
        "--gt-neighbors",
        "3",
        "--out",
        &ws.s("r-idx.csv"),
    ]);
    assert_success(&out);
    let text = std::fs::read_to_string(ws.path("r-idx.csv")).unwrap();
    assert_eq!(text.lines().count(), 2);
    assert!(text.lines().nth(1).unwrap().starts_with("lsh,8,3,"));
}
