use std::fs::File;
use std::io::{self, BufWriter, Write};
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::{bail, Context, Result};
use clap::{Args, Parser, Subcommand, ValueEnum};
use frechet_testing::freespace::{ExplicitMatrix, FreeSpaceOracle};
use frechet_testing::geometry::{gen_straight_curve, make_far_pair, perturb_within, Curve};
use frechet_testing::harness::{
    run_batch, seed_from_env, stream_rng, sweep_queries, verify_suite, write_report_jsonl, write_sweep_csv,
    SweepAxis, TrialConfig,
};
use frechet_testing::io::{load_curve, load_matrix, save_curve, save_matrix};
use frechet_testing::reference::{
    count_barriers, discrete_frechet, discrete_hausdorff, exact_locality, min_cost_coupling,
    min_cost_diagonal_restricted,
};
use frechet_testing::testers::{
    approx_frechet_tester, continuous_frechet_tester, frechet_tester1, frechet_tester2, hausdorff_tester,
    reduced_frechet_tester_on, Answer, ContinuousMode, ReducedMode, Tester1Params, Verdict,
};
use serde_json::json;

#[derive(Parser)]
#[command(name = "frechet", version, about = "Sublinear property testers for the discrete Fréchet distance")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Generate a pair of curves (and optionally their free space matrix).
    Gen(GenArgs),
    /// Run one tester and print its verdict as JSON. Exit code 0 = yes, 1 = no.
    Test(TestArgs),
    /// Print exact reference quantities for two curves as JSON.
    Exact(ExactArgs),
    /// Run a batch or a parameter sweep from a JSON trial config.
    Bench(BenchArgs),
    /// Run the structural property suite.
    Verify(VerifyArgs),
}

#[derive(Clone, Copy, ValueEnum)]
enum Algo {
    Frechet1,
    Frechet2,
    Hausdorff,
    Approx,
    Reduced,
    Continuous,
}

#[derive(Args)]
struct GenArgs {
    /// Vertices per curve.
    #[arg(long, default_value_t = 1000)]
    n: usize,
    #[arg(long, default_value_t = 2)]
    dim: usize,
    #[arg(long, default_value_t = 1.0)]
    edge_min: f64,
    #[arg(long, default_value_t = 1.0)]
    edge_max: f64,
    /// Maximum heading change per vertex, in degrees.
    #[arg(long, default_value_t = 5.0)]
    turn_deg: f64,
    /// Q moves every vertex of P by at most this radius.
    #[arg(long, default_value_t = 0.2)]
    radius: f64,
    /// Translate a block of Q so that the pair becomes about this far.
    #[arg(long)]
    far_eps: Option<f64>,
    #[arg(long, default_value_t = 4.0)]
    margin: f64,
    /// Threshold used for the far block and the optional matrix.
    #[arg(long, default_value_t = 1.0)]
    delta: f64,
    #[arg(long, env = "SEED", default_value_t = 0)]
    seed: u64,
    /// Output for P (`.json` for JSON, CSV otherwise).
    #[arg(long)]
    out_p: PathBuf,
    #[arg(long)]
    out_q: PathBuf,
    /// Also write the δ-free space matrix.
    #[arg(long)]
    matrix: Option<PathBuf>,
}

#[derive(Args)]
struct Inputs {
    /// Free space matrix file, instead of two curves.
    #[arg(long, conflicts_with_all = ["p", "q"])]
    matrix: Option<PathBuf>,
    /// Curve P.
    p: Option<PathBuf>,
    /// Curve Q.
    q: Option<PathBuf>,
}

#[derive(Args)]
struct TestArgs {
    #[arg(long, value_enum)]
    algo: Algo,
    #[arg(long)]
    delta: f64,
    #[arg(long)]
    epsilon: f64,
    /// Locality (frechet1, approx) or straightness (reduced, continuous).
    #[arg(long)]
    t: Option<usize>,
    #[arg(long, default_value_t = 0.5)]
    eps_prime: f64,
    #[arg(long, default_value_t = 1.0)]
    alpha: f64,
    #[arg(long, default_value_t = 1.0)]
    gamma: f64,
    #[arg(long, env = "SEED", default_value_t = 0)]
    seed: u64,
    #[command(flatten)]
    inputs: Inputs,
}

#[derive(Args)]
struct ExactArgs {
    p: PathBuf,
    q: PathBuf,
    #[arg(long)]
    delta: f64,
}

#[derive(Args)]
struct BenchArgs {
    /// Trial config as JSON.
    #[arg(long)]
    config: PathBuf,
    /// Sweep axis; without it a single batch runs.
    #[arg(long)]
    axis: Option<SweepAxis>,
    /// Comma-separated sweep values, ascending.
    #[arg(long, value_delimiter = ',')]
    values: Vec<f64>,
    /// Sweep CSV destination (stdout if absent).
    #[arg(long)]
    out: Option<PathBuf>,
    /// JSONL report destination for a single batch (stdout if absent).
    #[arg(long)]
    report: Option<PathBuf>,
}

#[derive(Args)]
struct VerifyArgs {
    #[arg(long, env = "SEED", default_value_t = 2024)]
    seed: u64,
    /// Random instances per check.
    #[arg(long, default_value_t = 1000)]
    instances: usize,
}

fn main() -> ExitCode {
    match run(Cli::parse()) {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(2)
        }
    }
}

fn run(cli: Cli) -> Result<ExitCode> {
    match cli.command {
        Command::Gen(a) => gen(a).map(|()| ExitCode::SUCCESS),
        Command::Test(a) => test(a),
        Command::Exact(a) => exact(a).map(|()| ExitCode::SUCCESS),
        Command::Bench(a) => bench(a).map(|()| ExitCode::SUCCESS),
        Command::Verify(a) => verify(a),
    }
}

fn gen(a: GenArgs) -> Result<()> {
    let mut rng = stream_rng(a.seed, 0);
    let p = gen_straight_curve(a.n, a.dim, (a.edge_min, a.edge_max), a.turn_deg.to_radians(), &mut rng)?;
    let mut q = perturb_within(&p, a.radius, &mut rng)?;
    if let Some(eps) = a.far_eps {
        q = make_far_pair(&q, eps, a.delta, a.margin, &mut rng)?;
    }
    save_curve(&p, &a.out_p).with_context(|| format!("writing {}", a.out_p.display()))?;
    save_curve(&q, &a.out_q).with_context(|| format!("writing {}", a.out_q.display()))?;
    if let Some(path) = &a.matrix {
        save_matrix(&ExplicitMatrix::from_curves(&p, &q, a.delta)?, path)
            .with_context(|| format!("writing {}", path.display()))?;
    }
    Ok(())
}

fn load(path: &Path) -> Result<Curve> {
    load_curve(path).with_context(|| format!("reading {}", path.display()))
}

fn test(a: TestArgs) -> Result<ExitCode> {
    let mut rng = stream_rng(a.seed, 0);
    let curves = match (&a.inputs.p, &a.inputs.q) {
        (Some(p), Some(q)) => Some((load(p)?, load(q)?)),
        (None, None) => None,
        _ => bail!("give two curve files or --matrix"),
    };
    let oracle = match (&a.inputs.matrix, &curves) {
        (Some(m), _) => FreeSpaceOracle::from_matrix(
            load_matrix(m).with_context(|| format!("reading {}", m.display()))?,
        ),
        (None, Some((p, q))) => FreeSpaceOracle::from_curves(p.clone(), q.clone(), a.delta)?,
        (None, None) => bail!("give two curve files or --matrix"),
    };
    let locality = || -> usize { (exact_locality(&oracle.materialize()).ceil() as usize).max(1) };
    let verdict: Verdict = match a.algo {
        Algo::Frechet1 => {
            let t = a.t.unwrap_or_else(locality);
            frechet_tester1(&oracle, &Tester1Params::new(t, a.epsilon), &mut rng)?
        }
        Algo::Frechet2 => frechet_tester2(&oracle, a.epsilon, &mut rng)?,
        Algo::Hausdorff => hausdorff_tester(&oracle, a.epsilon, &mut rng)?,
        Algo::Approx => approx_frechet_tester(&oracle, a.epsilon, a.t.unwrap_or_else(locality), &mut rng)?,
        Algo::Reduced => {
            let mode = match a.t {
                Some(t) => ReducedMode::KnownT { t, gamma: a.gamma },
                None => ReducedMode::Oblivious,
            };
            reduced_frechet_tester_on(&oracle, a.delta, a.epsilon, a.eps_prime, a.alpha, mode, &mut rng)?
        }
        Algo::Continuous => {
            let Some((p, q)) = &curves else {
                bail!("the continuous tester needs two curve files");
            };
            let mode = match a.t {
                Some(t) => ContinuousMode::KnownT { t },
                None => ContinuousMode::Oblivious,
            };
            continuous_frechet_tester(p, q, a.delta, a.epsilon, a.eps_prime, mode, &mut rng)?
        }
    };
    println!("{}", serde_json::to_string(&verdict)?);
    Ok(match verdict.answer {
        Answer::Yes => ExitCode::SUCCESS,
        Answer::No => ExitCode::from(1),
    })
}

fn exact(a: ExactArgs) -> Result<()> {
    let (p, q) = (load(&a.p)?, load(&a.q)?);
    let m = ExplicitMatrix::from_curves(&p, &q, a.delta)?;
    let (barrier_columns, barrier_rows) = count_barriers(&m);
    let out = json!({
        "n": p.len(),
        "m": q.len(),
        "delta": a.delta,
        "discrete_frechet": discrete_frechet(&p, &q)?,
        "discrete_hausdorff": discrete_hausdorff(&p, &q)?,
        "min_cost_coupling": min_cost_coupling(&m),
        "min_cost_diagonal_restricted": min_cost_diagonal_restricted(&m),
        "exact_locality": exact_locality(&m),
        "barrier_columns": barrier_columns,
        "barrier_rows": barrier_rows,
    });
    println!("{}", serde_json::to_string_pretty(&out)?);
    Ok(())
}

fn writer(path: &Option<PathBuf>) -> Result<Box<dyn Write>> {
    Ok(match path {
        Some(p) => Box::new(BufWriter::new(
            File::create(p).with_context(|| format!("creating {}", p.display()))?,
        )),
        None => Box::new(io::stdout().lock()),
    })
}

fn bench(a: BenchArgs) -> Result<()> {
    let text = std::fs::read_to_string(&a.config).with_context(|| format!("reading {}", a.config.display()))?;
    let mut cfg: TrialConfig = serde_json::from_str(&text).context("parsing trial config")?;
    cfg.base_seed = seed_from_env(cfg.base_seed);
    match a.axis {
        Some(axis) => {
            if a.values.is_empty() {
                bail!("--axis needs --values");
            }
            if a.values.windows(2).any(|w| w[0] > w[1]) {
                bail!("--values must be sorted");
            }
            let rows = sweep_queries(&cfg, axis, &a.values)?;
            write_sweep_csv(&rows, writer(&a.out)?)?;
        }
        None => {
            let report = run_batch(&cfg)?;
            let mut w = writer(&a.report)?;
            write_report_jsonl(&report, &mut w)?;
            w.flush()?;
            if report.aggregate.unsound_witnesses > 0 {
                bail!("{} witnesses failed verification", report.aggregate.unsound_witnesses);
            }
        }
    }
    Ok(())
}

fn verify(a: VerifyArgs) -> Result<ExitCode> {
    let rep = verify_suite(a.seed, a.instances);
    for c in &rep.checks {
        let tag = if c.passed() { "PASS" } else { "FAIL" };
        println!("{tag}  {}  ({} checked, {} skipped)", c.name, c.instances - c.skipped, c.skipped);
        for ce in &c.counterexamples {
            println!("  counterexample:\n{ce}");
        }
    }
    Ok(if rep.passed() { ExitCode::SUCCESS } else { ExitCode::from(1) })
}
