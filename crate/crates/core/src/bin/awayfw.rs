use std::fs::File;
use std::io::BufWriter;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::de::DeserializeOwned;
use serde::{Deserialize, Serialize};

use awayfw::bench::{
    run_lower_bound, run_recovery, run_robustness, Method, PlantedFaceConfig, RecoveryConfig, RobustnessConfig,
};
use awayfw::objective::LeastSquaresObjective;
use awayfw::polytope::{Polytope, VertexId};
use awayfw::solver::{greedy_start, SolverConfig};
use awayfw::{Error, Result};

#[derive(Parser)]
#[command(
    name = "awayfw",
    version,
    about = "Frank-Wolfe and away-step Frank-Wolfe experiments"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Squared norm over the down-closed simplex under adversarial ties.
    LowerBound(LowerBoundArgs),
    /// Sparse recovery over a scaled simplex, averaged over seeded runs.
    Recover(RecoverArgs),
    /// Face stability of a planted instance under linear tilts.
    Robustness(RobustnessArgs),
    /// Least squares over a polytope, writing the iteration trace.
    Solve(SolveArgs),
}

#[derive(Clone, Copy, Debug, ValueEnum, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
enum MethodArg {
    Fw,
    Away,
}

impl From<MethodArg> for Method {
    fn from(m: MethodArg) -> Self {
        match m {
            MethodArg::Fw => Method::Fw,
            MethodArg::Away => Method::AwayFw,
        }
    }
}

/// Flags override values from `--config`, which override defaults.
trait Merge: Sized + Default + DeserializeOwned {
    fn config_path(&self) -> Option<&Path>;
    fn merge(self, file: Self) -> Self;

    fn resolve(self) -> Result<Self> {
        match self.config_path() {
            Some(path) => {
                let text = std::fs::read_to_string(path)?;
                let file: Self = serde_json::from_str(&text).map_err(|e| Error::Parse {
                    path: path.display().to_string(),
                    msg: e.to_string(),
                })?;
                Ok(self.merge(file))
            }
            None => Ok(self),
        }
    }
}

fn require<T>(v: Option<T>, name: &str) -> Result<T> {
    v.ok_or_else(|| Error::InvalidArgument(format!("missing required value --{name}")))
}

#[derive(Args, Default, Deserialize)]
#[serde(default, deny_unknown_fields)]
struct LowerBoundArgs {
    #[arg(long)]
    d: Option<usize>,
    #[arg(long, value_enum)]
    method: Option<MethodArg>,
    /// Use first-index ties instead of the adversarial oracle.
    #[arg(long)]
    benign_ties: bool,
    #[arg(long)]
    out: Option<PathBuf>,
    #[arg(long)]
    #[serde(skip)]
    config: Option<PathBuf>,
}

impl Merge for LowerBoundArgs {
    fn config_path(&self) -> Option<&Path> {
        self.config.as_deref()
    }
    fn merge(self, file: Self) -> Self {
        Self {
            d: self.d.or(file.d),
            method: self.method.or(file.method),
            benign_ties: self.benign_ties || file.benign_ties,
            out: self.out.or(file.out),
            config: self.config,
        }
    }
}

#[derive(Args, Default, Deserialize)]
#[serde(default, deny_unknown_fields)]
struct RecoverArgs {
    #[arg(long)]
    d: Option<usize>,
    #[arg(long)]
    m: Option<usize>,
    #[arg(long)]
    nnz: Option<usize>,
    /// Relative noise level.
    #[arg(long)]
    c: Option<f64>,
    /// Simplex scale.
    #[arg(long)]
    tau: Option<f64>,
    #[arg(long)]
    runs: Option<usize>,
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long)]
    out: Option<PathBuf>,
    #[arg(long)]
    #[serde(skip)]
    config: Option<PathBuf>,
}

impl Merge for RecoverArgs {
    fn config_path(&self) -> Option<&Path> {
        self.config.as_deref()
    }
    fn merge(self, file: Self) -> Self {
        Self {
            d: self.d.or(file.d),
            m: self.m.or(file.m),
            nnz: self.nnz.or(file.nnz),
            c: self.c.or(file.c),
            tau: self.tau.or(file.tau),
            runs: self.runs.or(file.runs),
            seed: self.seed.or(file.seed),
            out: self.out.or(file.out),
            config: self.config,
        }
    }
}

#[derive(Args, Default, Deserialize)]
#[serde(default, deny_unknown_fields)]
struct RobustnessArgs {
    #[arg(long)]
    seed: Option<u64>,
    /// Perturbation sizes, comma separated.
    #[arg(long, value_delimiter = ',')]
    nu: Vec<f64>,
    #[arg(long)]
    d: Option<usize>,
    #[arg(long)]
    m: Option<usize>,
    #[arg(long)]
    face_size: Option<usize>,
    #[arg(long)]
    out: Option<PathBuf>,
    #[arg(long)]
    #[serde(skip)]
    config: Option<PathBuf>,
}

impl Merge for RobustnessArgs {
    fn config_path(&self) -> Option<&Path> {
        self.config.as_deref()
    }
    fn merge(self, file: Self) -> Self {
        Self {
            seed: self.seed.or(file.seed),
            nu: if self.nu.is_empty() { file.nu } else { self.nu },
            d: self.d.or(file.d),
            m: self.m.or(file.m),
            face_size: self.face_size.or(file.face_size),
            out: self.out.or(file.out),
            config: self.config,
        }
    }
}

#[derive(Args, Default, Deserialize)]
#[serde(default, deny_unknown_fields)]
struct SolveArgs {
    /// simplex:D[:TAU], downsimplex:D, cube:D or vertices:PATH
    #[arg(long)]
    polytope: Option<String>,
    /// A.txt,b.txt for 0.5·‖Ax − b‖²
    #[arg(long)]
    objective: Option<String>,
    #[arg(long, value_enum)]
    method: Option<MethodArg>,
    #[arg(long)]
    gap_tol: Option<f64>,
    #[arg(long)]
    max_iters: Option<usize>,
    /// Start vertex id; defaults to a greedy choice.
    #[arg(long)]
    start: Option<u64>,
    #[arg(long)]
    trace: Option<PathBuf>,
    #[arg(long)]
    #[serde(skip)]
    config: Option<PathBuf>,
}

impl Merge for SolveArgs {
    fn config_path(&self) -> Option<&Path> {
        self.config.as_deref()
    }
    fn merge(self, file: Self) -> Self {
        Self {
            polytope: self.polytope.or(file.polytope),
            objective: self.objective.or(file.objective),
            method: self.method.or(file.method),
            gap_tol: self.gap_tol.or(file.gap_tol),
            max_iters: self.max_iters.or(file.max_iters),
            start: self.start.or(file.start),
            trace: self.trace.or(file.trace),
            config: self.config,
        }
    }
}

fn parse_polytope(spec: &str) -> Result<Polytope> {
    let bad = || Error::InvalidArgument(format!("bad polytope spec {spec:?}"));
    let (kind, rest) = spec.split_once(':').ok_or_else(bad)?;
    let dim = |s: &str| s.parse::<usize>().map_err(|_| bad());
    match kind {
        "simplex" => match rest.split_once(':') {
            Some((d, tau)) => Polytope::unit_simplex(dim(d)?, tau.parse().map_err(|_| bad())?),
            None => Polytope::unit_simplex(dim(rest)?, 1.0),
        },
        "downsimplex" => Polytope::down_closed_simplex(dim(rest)?),
        "cube" => Polytope::hypercube(dim(rest)?),
        "vertices" => Polytope::explicit_from_file(rest),
        _ => Err(bad()),
    }
}

fn write_json<T: Serialize>(path: &Path, value: &T) -> Result<()> {
    serde_json::to_writer_pretty(BufWriter::new(File::create(path)?), value)?;
    Ok(())
}

fn lower_bound(args: LowerBoundArgs) -> Result<()> {
    let args = args.resolve()?;
    let d = require(args.d, "d")?;
    let method = require(args.method, "method")?;
    let out = require(args.out, "out")?;
    let report = run_lower_bound(d, method.into(), !args.benign_ties)?;
    report.trace.write_csv(BufWriter::new(File::create(&out)?))?;
    match report.iterations_to_below_1_over_d {
        Some(t) => println!("d={d} first t with f < 1/d: {t}"),
        None => println!("d={d} f never fell below 1/d"),
    }
    Ok(())
}

fn recover(args: RecoverArgs) -> Result<()> {
    let args = args.resolve()?;
    let defaults = RecoveryConfig::default();
    let cfg = RecoveryConfig {
        d: args.d.unwrap_or(defaults.d),
        m: args.m.unwrap_or(defaults.m),
        nnz: args.nnz.unwrap_or(defaults.nnz),
        noise_scale: args.c.unwrap_or(defaults.noise_scale),
        simplex_scale: args.tau.unwrap_or(defaults.simplex_scale),
        runs: args.runs.unwrap_or(defaults.runs),
        seed: args.seed.unwrap_or(defaults.seed),
    };
    let out = require(args.out, "out")?;
    let report = run_recovery(&cfg)?;
    write_json(&out, &report)?;
    let stragglers = report.per_run.iter().filter(|r| !r.converged).count();
    println!(
        "avg recovery error {:.4e}  avg delta {:.4}  unconverged runs {stragglers}",
        report.avg_recovery_error, report.avg_delta
    );
    Ok(())
}

fn robustness(args: RobustnessArgs) -> Result<()> {
    let args = args.resolve()?;
    let defaults = RobustnessConfig::default();
    let cfg = RobustnessConfig {
        instance: PlantedFaceConfig {
            d: args.d.unwrap_or(defaults.instance.d),
            m: args.m.unwrap_or(defaults.instance.m),
            face_size: args.face_size.unwrap_or(defaults.instance.face_size),
            ..defaults.instance
        },
        seed: require(args.seed, "seed")?,
        ..defaults
    };
    let out = require(args.out, "out")?;
    let report = run_robustness(&cfg, &args.nu)?;
    write_json(&out, &report)?;
    println!("delta {:.4e}  nu_max {:.4e}", report.delta, report.bound.nu_max);
    for o in report.outcomes.iter().chain([&report.adversarial]) {
        println!("nu {:.4e}  contained {}", o.nu, o.contained);
    }
    Ok(())
}

fn solve(args: SolveArgs) -> Result<()> {
    let args = args.resolve()?;
    let polytope = parse_polytope(&require(args.polytope, "polytope")?)?;
    let files = require(args.objective, "objective")?;
    let (a_path, b_path) = files
        .split_once(',')
        .ok_or_else(|| Error::InvalidArgument(format!("objective must be A,b file paths, got {files:?}")))?;
    let obj = LeastSquaresObjective::from_files(a_path, b_path)?;
    let method: Method = args.method.unwrap_or(MethodArg::Away).into();
    let defaults = SolverConfig::default();
    let cfg = SolverConfig {
        gap_tol: args.gap_tol.unwrap_or(defaults.gap_tol),
        max_iters: args.max_iters.unwrap_or(defaults.max_iters),
        ..defaults
    };
    let start = match args.start {
        Some(id) => polytope.vertex(VertexId(id))?,
        None => greedy_start(&obj, &polytope)?,
    };
    let trace = method.run(&obj, &polytope, &start, &cfg)?;
    if let Some(path) = &args.trace {
        trace.write_csv(BufWriter::new(File::create(path)?))?;
    }
    println!(
        "{:?} after {} iterations  f {:.10e}  gap {:.3e}",
        trace.termination,
        trace.len(),
        trace.final_value,
        trace.final_gap()
    );
    Ok(())
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = match cli.command {
        Command::LowerBound(a) => lower_bound(a),
        Command::Recover(a) => recover(a),
        Command::Robustness(a) => robustness(a),
        Command::Solve(a) => solve(a),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(match e {
                Error::Inconsistent(_) => 3,
                _ => 2,
            })
        }
    }
}
