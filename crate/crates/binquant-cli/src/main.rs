//! Command-line front end for the binquant library: fit quantization models,
//! encode datasets into binary codes, run exact Hamming queries, and produce
//! benchmark CSVs from seeded database/query splits.
//!
//! Every subcommand is a thin shell over library calls; all randomness flows
//! from the `--seed` flag, so identical invocations produce identical bytes.

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use binquant::eval::SweepCell;
use binquant::index::top_k;
use binquant::io;
use binquant::optim::CgParams;
use binquant::{fit_with_trace, Error, FitConfig, Method, PreprocessKind, RandomSource, Result};

#[derive(Parser)]
#[command(
    name = "binquant",
    version,
    about = "Learn binary codes for approximate nearest-neighbor search",
    propagate_version = true
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Fit a quantization model on a dataset and write it to a model file
    Fit(FitCmd),
    /// Encode a dataset into binary codes using a fitted model
    Encode(EncodeCmd),
    /// Rank database codes by Hamming distance for each query code
    Query(QueryCmd),
    /// Benchmark methods on a seeded database/query split, writing a CSV
    Bench(BenchCmd),
}

/// Flags shared by every command that fits models.
#[derive(Args)]
struct TrainArgs {
    /// Feature preprocessing: none, center, or zscore
    #[arg(long, default_value = "center")]
    preprocess: String,
    /// Armijo sufficient-decrease constant for the atq optimizer
    #[arg(long, default_value_t = 0.01)]
    lambda: f64,
    /// Relative-decrease stopping constant for the atq optimizer
    #[arg(long, default_value_t = 0.01)]
    epsilon: f64,
    /// Initial step size tried by each atq line search
    #[arg(long, default_value_t = 1.0)]
    alpha0: f64,
    /// Backtracking shrink factor for the atq line search
    #[arg(long, default_value_t = 0.5)]
    beta: f64,
    /// Cap on accepted atq optimizer iterations
    #[arg(long, default_value_t = 200)]
    max_iters: usize,
    /// Kernel bandwidth for cq (default: median pairwise-distance heuristic)
    #[arg(long)]
    cq_gamma: Option<f64>,
    /// Alternating-minimization iterations for itq
    #[arg(long, default_value_t = 50)]
    itq_iters: usize,
    /// Independent atq initializations; the lowest final objective wins
    #[arg(long, default_value_t = 1)]
    atq_restarts: usize,
}

impl TrainArgs {
    fn to_config(&self) -> Result<FitConfig> {
        let preprocess: PreprocessKind = self.preprocess.parse()?;
        let cg = CgParams {
            lambda: self.lambda,
            epsilon: self.epsilon,
            alpha0: self.alpha0,
            beta: self.beta,
            max_iters: self.max_iters,
            ..CgParams::default()
        };
        cg.validate()?;
        if self.itq_iters == 0 {
            return Err(Error::InvalidInput("--itq-iters must be >= 1".into()));
        }
        if self.atq_restarts == 0 {
            return Err(Error::InvalidInput("--atq-restarts must be >= 1".into()));
        }
        Ok(FitConfig {
            preprocess,
            cg,
            cq_gamma: self.cq_gamma,
            itq_iters: self.itq_iters,
            atq_restarts: self.atq_restarts,
        })
    }
}

#[derive(Args)]
struct FitCmd {
    /// Training dataset: binary feature file, IDX image file, or numeric CSV
    #[arg(long)]
    input: PathBuf,
    /// Quantization method: lsh, cq, sh, itq, or atq
    #[arg(long)]
    method: String,
    /// Code width in bits
    #[arg(long, default_value_t = 16)]
    bits: usize,
    /// Random seed
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Output model file
    #[arg(long)]
    out: PathBuf,
    #[command(flatten)]
    train: TrainArgs,
}

#[derive(Args)]
struct EncodeCmd {
    /// Fitted model file
    #[arg(long)]
    model: PathBuf,
    /// Dataset to encode: binary feature file, IDX image file, or numeric CSV
    #[arg(long)]
    input: PathBuf,
    /// Output code file
    #[arg(long)]
    out: PathBuf,
}

#[derive(Args)]
struct QueryCmd {
    /// Database code file
    #[arg(long)]
    db: PathBuf,
    /// Query code file
    #[arg(long)]
    queries: PathBuf,
    /// Neighbors to report per query
    #[arg(long, short, default_value_t = 1)]
    k: usize,
}

#[derive(Args)]
struct BenchCmd {
    /// Dataset to split: binary feature file, IDX image file, or numeric CSV
    #[arg(long)]
    input: PathBuf,
    /// Comma-separated methods to benchmark
    #[arg(long, value_delimiter = ',', default_value = "lsh,cq,sh,itq,atq")]
    methods: Vec<String>,
    /// Database rows drawn from the shuffled dataset
    #[arg(long, default_value_t = 10000)]
    db_size: usize,
    /// Query rows drawn after the database rows (disjoint)
    #[arg(long, default_value_t = 1000)]
    query_size: usize,
    /// Code width for single runs and --neighbor-sweep
    #[arg(long, default_value_t = 16)]
    bits: usize,
    /// Comma-separated code widths; adds a bit sweep at --gt-neighbors
    #[arg(long, value_delimiter = ',')]
    bit_sweep: Vec<usize>,
    /// Comma-separated ground-truth sizes; adds a neighbor sweep at --bits
    #[arg(long, value_delimiter = ',')]
    neighbor_sweep: Vec<usize>,
    /// Ground-truth neighbor count for single runs and --bit-sweep
    #[arg(long, default_value_t = 50)]
    gt_neighbors: usize,
    /// Random seed driving the split and every benchmark cell
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Output CSV path
    #[arg(long)]
    out: PathBuf,
    /// Write measured timings into the CSV (default: zeroed for stable bytes)
    #[arg(long)]
    timings: bool,
    /// Worker threads for parallel sections (default: all cores)
    #[arg(long)]
    threads: Option<usize>,
    #[command(flatten)]
    train: TrainArgs,
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = match cli.command {
        Command::Fit(cmd) => run_fit(&cmd),
        Command::Encode(cmd) => run_encode(&cmd),
        Command::Query(cmd) => run_query(&cmd),
        Command::Bench(cmd) => run_bench(&cmd),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::FAILURE
        }
    }
}

fn run_fit(cmd: &FitCmd) -> Result<()> {
    let method: Method = cmd.method.parse()?;
    let config = cmd.train.to_config()?;
    let x = io::load_dataset(&cmd.input)?;
    let (model, trace) = fit_with_trace(method, &x, cmd.bits, cmd.seed, &config)?;
    io::save_model(&cmd.out, &model)?;
    match trace {
        Some(t) => println!(
            "fitted atq: d={} r={} n={} iterations={} initial_j={:.6} final_j={:.6} stop={}",
            model.d(),
            model.r(),
            x.n(),
            t.iterations,
            t.initial_objective(),
            t.final_objective(),
            t.stop.name()
        ),
        None => println!(
            "fitted {}: d={} r={} n={}",
            method,
            model.d(),
            model.r(),
            x.n()
        ),
    }
    Ok(())
}

fn run_encode(cmd: &EncodeCmd) -> Result<()> {
    let model = io::load_model(&cmd.model)?;
    let x = io::load_dataset(&cmd.input)?;
    let codes = model.encode(&x)?;
    io::save_codes(&cmd.out, &codes)?;
    println!("encoded {} codes at r={} bits", codes.len(), codes.r());
    Ok(())
}

fn run_query(cmd: &QueryCmd) -> Result<()> {
    let db = io::load_codes(&cmd.db)?;
    let queries = io::load_codes(&cmd.queries)?;
    let mut out = String::new();
    for i in 0..queries.len() {
        let ranked = top_k(&db, queries.code(i), i, cmd.k)?;
        out.push_str(&format!("{i}:"));
        for (id, dist) in ranked.entries {
            out.push_str(&format!(" {id}:{dist}"));
        }
        out.push('\n');
    }
    print!("{out}");
    Ok(())
}

fn run_bench(cmd: &BenchCmd) -> Result<()> {
    if let Some(n) = cmd.threads {
        rayon::ThreadPoolBuilder::new()
            .num_threads(n)
            .build_global()
            .map_err(|e| Error::InvalidInput(format!("cannot set --threads {n}: {e}")))?;
    }
    let methods: Vec<Method> = cmd
        .methods
        .iter()
        .map(|s| s.parse())
        .collect::<Result<_>>()?;
    let config = cmd.train.to_config()?;
    if cmd.db_size == 0 || cmd.query_size == 0 {
        return Err(Error::InvalidInput(
            "--db-size and --query-size must be >= 1".into(),
        ));
    }

    let x = io::load_dataset(&cmd.input)?;
    let need = cmd.db_size + cmd.query_size;
    if x.n() < need {
        return Err(Error::InvalidInput(format!(
            "dataset has n = {}, but --db-size {} + --query-size {} needs {}",
            x.n(),
            cmd.db_size,
            cmd.query_size,
            need
        )));
    }
    let perm = RandomSource::new(cmd.seed).permutation(x.n());
    let x_db = x.select_columns(&perm[..cmd.db_size])?;
    let x_q = x.select_columns(&perm[cmd.db_size..need])?;

    let mut cells: Vec<SweepCell> = Vec::new();
    if !cmd.bit_sweep.is_empty() {
        cells.extend(binquant::eval::sweep_bits(
            &x_db,
            &x_q,
            &methods,
            &cmd.bit_sweep,
            cmd.gt_neighbors,
            cmd.seed,
            &config,
        )?);
    }
    if !cmd.neighbor_sweep.is_empty() {
        cells.extend(binquant::eval::sweep_neighbors(
            &x_db,
            &x_q,
            &methods,
            &cmd.neighbor_sweep,
            cmd.bits,
            cmd.seed,
            &config,
        )?);
    }
    if cmd.bit_sweep.is_empty() && cmd.neighbor_sweep.is_empty() {
        cells.extend(binquant::eval::sweep_bits(
            &x_db,
            &x_q,
            &methods,
            &[cmd.bits],
            cmd.gt_neighbors,
            cmd.seed,
            &config,
        )?);
    }

    let mut failures = 0usize;
    let mut reports = Vec::new();
    for cell in &cells {
        match &cell.outcome {
            Ok(rep) => {
                eprintln!(
                    "{} bits={} k={}: map={:.6} (fit {:.1} ms, encode {:.1} ms, query {:.1} ms)",
                    cell.method,
                    cell.bits,
                    cell.neighbors,
                    rep.map,
                    rep.fit_ms,
                    rep.encode_ms,
                    rep.query_ms
                );
                reports.push(rep);
            }
            Err(e) => {
                failures += 1;
                eprintln!(
                    "{} bits={} k={}: failed: {e}",
                    cell.method, cell.bits, cell.neighbors
                );
            }
        }
    }
    if failures > 0 {
        return Err(Error::InvalidInput(format!(
            "{failures} benchmark cell(s) failed; no CSV written"
        )));
    }
    io::write_results_csv(&cmd.out, &reports, cmd.timings)?;
    println!("wrote {} rows to {}", reports.len(), cmd.out.display());
    Ok(())
}
