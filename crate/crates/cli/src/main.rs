//! `resolvent-lab`: evaluate resolvents and semigroups, tabulate radii and
//! orders, and run the verification suite.
//!
//! Exit status: 0 on success, 1 when a verification check fails, 2 on bad
//! arguments, 3 when a computation cannot be carried out.

mod args;

use std::fs::File;
use std::io::{self, BufWriter, Write};
use std::path::PathBuf;
use std::process::ExitCode;

use clap::error::ErrorKind;
use clap::{Args, CommandFactory, Parser, Subcommand, ValueEnum};
use resolvent_core::format::{fmt17, fmt_complex};
use resolvent_core::geometry::{estimate_orders, theoretical_orders, ResolventMap};
use resolvent_core::ode::OdeOptions;
use resolvent_core::semigroup::{trajectory, FlowField};
use resolvent_core::verifier::{self, summarize, SuiteConfig};
use resolvent_core::{
    flow, resolvent_radii, solve_resolvent, Complex64, Generator, GeneratorSpec, SolverOptions,
};
use serde_json::json;

const THREADS_ENV: &str = "RESOLVENT_LAB_THREADS";

#[derive(Parser, Debug)]
#[command(name = "resolvent-lab", version, about = "Nonlinear resolvents of disk generators")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Resolvent value G_r(z), or the flow u(t, z) when --t is given.
    Eval(EvalArgs),
    /// Distortion and covering radii over r.
    Radii(RadiiArgs),
    /// Estimated versus theoretical starlikeness orders over r.
    Orders(OrdersArgs),
    /// Run the verification suite.
    Verify(VerifyArgs),
    /// Sampled semigroup trajectory as CSV.
    Trajectory(TrajectoryArgs),
}

#[derive(Args, Debug)]
struct GenArgs {
    /// Generator spec as inline JSON.
    #[arg(long = "gen", value_name = "JSON", conflicts_with = "gen_file")]
    gen: Option<String>,
    /// Generator spec read from a JSON file.
    #[arg(long, value_name = "PATH")]
    gen_file: Option<PathBuf>,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
enum Format {
    Csv,
    Json,
}

#[derive(Args, Debug)]
struct OutArgs {
    /// Write output here instead of stdout.
    #[arg(long, value_name = "PATH")]
    out: Option<PathBuf>,
    #[arg(long, value_enum)]
    format: Option<Format>,
}

#[derive(Args, Debug)]
struct SweepArgs {
    #[arg(long, conflicts_with = "r_sweep")]
    r: Option<f64>,
    /// Inclusive sweep `a:b:step`.
    #[arg(long, value_name = "A:B:STEP", value_parser = args::sweep)]
    r_sweep: Option<args::Sweep>,
}

impl SweepArgs {
    fn values(&self) -> Result<Vec<f64>, Failure> {
        match (&self.r, &self.r_sweep) {
            (Some(r), _) => Ok(vec![*r]),
            (None, Some(v)) => Ok(v.0.clone()),
            (None, None) => Err(Failure::Usage("one of --r or --r-sweep is required".into())),
        }
    }
}

#[derive(Args, Debug)]
struct EvalArgs {
    #[command(flatten)]
    gen: GenArgs,
    #[arg(long)]
    r: Option<f64>,
    /// Point `re,im`.
    #[arg(long, value_parser = args::complex, allow_hyphen_values = true)]
    z: Complex64,
    /// Complex time `re,im` for the flow of the generator.
    #[arg(long, value_parser = args::complex, allow_hyphen_values = true, conflicts_with = "r")]
    t: Option<Complex64>,
    /// Newton tolerance.
    #[arg(long)]
    tol: Option<f64>,
    #[command(flatten)]
    out: OutArgs,
}

#[derive(Args, Debug)]
struct RadiiArgs {
    /// `f'(0) = q` as `re,im`; ignored when a generator is given.
    #[arg(long, value_parser = args::complex, allow_hyphen_values = true, default_value = "1,0")]
    q: Complex64,
    #[command(flatten)]
    gen: GenArgs,
    #[command(flatten)]
    sweep: SweepArgs,
    #[command(flatten)]
    out: OutArgs,
}

#[derive(Args, Debug)]
struct OrdersArgs {
    #[command(flatten)]
    gen: GenArgs,
    #[command(flatten)]
    sweep: SweepArgs,
    #[arg(long, value_name = "NRxNA", value_parser = args::grid_dims, default_value = "64x256")]
    grid: (usize, usize),
    /// Spirallike angle.
    #[arg(long, default_value_t = 0.0, allow_negative_numbers = true)]
    theta: f64,
    #[arg(long)]
    tol: Option<f64>,
    #[command(flatten)]
    out: OutArgs,
}

#[derive(Args, Debug)]
struct VerifyArgs {
    /// Check ids; all checks when omitted.
    #[arg(long, value_delimiter = ',')]
    checks: Vec<String>,
    /// Seeds, e.g. `1-20` or `1,4,9`.
    #[arg(long, value_parser = args::seeds)]
    seeds: Option<args::Seeds>,
    /// Values of x = r Re q.
    #[arg(long, value_delimiter = ',')]
    xs: Vec<f64>,
    #[arg(long, value_parser = args::complex, allow_hyphen_values = true, default_value = "1,0")]
    q: Complex64,
    /// Boundary atoms per sampled generator.
    #[arg(long, default_value_t = 3)]
    atoms: usize,
    #[arg(long, value_name = "NRxNA", value_parser = args::grid_dims, default_value = "64x256")]
    grid: (usize, usize),
    #[arg(long, default_value_t = 20)]
    squeeze_samples: usize,
    #[arg(long)]
    tol: Option<f64>,
    #[command(flatten)]
    out: OutArgs,
}

#[derive(Args, Debug)]
struct TrajectoryArgs {
    #[command(flatten)]
    gen: GenArgs,
    #[arg(long, value_parser = args::complex, allow_hyphen_values = true)]
    z: Complex64,
    /// Final complex time `re,im`; the ray is `arg t`.
    #[arg(long, value_parser = args::complex, allow_hyphen_values = true)]
    t: Complex64,
    /// Flow the semigroup generated by G_r instead of the generator.
    #[arg(long)]
    r: Option<f64>,
    #[arg(long, default_value = "gen")]
    id: String,
    #[arg(long)]
    tol: Option<f64>,
    #[command(flatten)]
    out: OutArgs,
}

enum Failure {
    Usage(String),
    Infra(String),
    Io(io::Error),
}

impl From<io::Error> for Failure {
    fn from(e: io::Error) -> Self {
        Failure::Io(e)
    }
}

fn infra(e: impl std::fmt::Display) -> Failure {
    Failure::Infra(e.to_string())
}

fn load_generator(g: &GenArgs) -> Result<Option<Generator>, Failure> {
    let text = match (&g.gen, &g.gen_file) {
        (Some(s), _) => s.clone(),
        (None, Some(path)) => std::fs::read_to_string(path)
            .map_err(|e| Failure::Usage(format!("cannot read {}: {e}", path.display())))?,
        (None, None) => return Ok(None),
    };
    let spec: GeneratorSpec = serde_json::from_str(&text)
        .map_err(|e| Failure::Usage(format!("invalid generator spec: {e}")))?;
    spec.build()
        .map(Some)
        .map_err(|e| Failure::Usage(format!("invalid generator: {e}")))
}

fn require_generator(g: &GenArgs) -> Result<Generator, Failure> {
    load_generator(g)?.ok_or_else(|| Failure::Usage("one of --gen or --gen-file is required".into()))
}

fn solver(tol: Option<f64>) -> Result<SolverOptions, Failure> {
    match tol {
        None => Ok(SolverOptions::default()),
        Some(t) if t > 0.0 && t.is_finite() => Ok(SolverOptions::with_tol(t)),
        Some(t) => Err(Failure::Usage(format!("--tol must be positive, got {t}"))),
    }
}

fn sink(out: &OutArgs) -> Result<Box<dyn Write>, Failure> {
    Ok(match &out.out {
        Some(path) => Box::new(BufWriter::new(File::create(path)?)),
        None => Box::new(BufWriter::new(io::stdout().lock())),
    })
}

fn opt17(v: Option<f64>) -> String {
    v.map(fmt17).unwrap_or_default()
}

fn complex_json(z: Complex64) -> serde_json::Value {
    json!({ "re": z.re, "im": z.im })
}

fn eval(a: &EvalArgs) -> Result<ExitCode, Failure> {
    let gen = require_generator(&a.gen)?;
    let opts = solver(a.tol)?;
    let fmt = a.out.format.unwrap_or(Format::Csv);
    let mut out = sink(&a.out)?;
    if let Some(t) = a.t {
        let u = flow(&FlowField::Generator(&gen), t, a.z, &OdeOptions::default()).map_err(infra)?;
        match fmt {
            Format::Csv => writeln!(out, "{}", fmt_complex(u))?,
            Format::Json => writeln!(
                out,
                "{}",
                json!({ "t": complex_json(t), "z": complex_json(a.z), "u": complex_json(u) })
            )?,
        }
    } else {
        let r = a
            .r
            .ok_or_else(|| Failure::Usage("eval needs --r (resolvent) or --t (flow)".into()))?;
        let v = solve_resolvent(&gen, r, a.z, &opts).map_err(infra)?;
        match fmt {
            Format::Csv => writeln!(out, "{}", fmt_complex(v.w))?,
            Format::Json => writeln!(
                out,
                "{}",
                json!({
                    "r": r,
                    "z": complex_json(a.z),
                    "w": complex_json(v.w),
                    "deriv": complex_json(v.deriv),
                    "residual": v.residual,
                })
            )?,
        }
    }
    out.flush()?;
    Ok(ExitCode::SUCCESS)
}

fn radii(a: &RadiiArgs) -> Result<ExitCode, Failure> {
    let q = match load_generator(&a.gen)? {
        Some(g) => g.q(),
        None => a.q,
    };
    let rs = a.sweep.values()?;
    let rows = rs
        .iter()
        .map(|&r| resolvent_radii(r, q))
        .collect::<Result<Vec<_>, _>>()
        .map_err(infra)?;
    let mut out = sink(&a.out)?;
    match a.out.format.unwrap_or(Format::Csv) {
        Format::Csv => {
            writeln!(out, "r,q_re,q_im,x,rho,rho1,rho2,rho2_general,rho3,rho4")?;
            for d in &rows {
                writeln!(
                    out,
                    "{},{},{},{},{},{},{},{},{},{}",
                    fmt17(d.r),
                    fmt17(d.q.re),
                    fmt17(d.q.im),
                    fmt17(d.x),
                    opt17(d.rho),
                    opt17(d.rho1),
                    opt17(d.rho2),
                    opt17(d.rho2_general),
                    opt17(d.rho3),
                    fmt17(d.rho4)
                )?;
            }
        }
        Format::Json => {
            for d in &rows {
                serde_json::to_writer(&mut out, d).map_err(infra)?;
                writeln!(out)?;
            }
        }
    }
    out.flush()?;
    Ok(ExitCode::SUCCESS)
}

fn orders(a: &OrdersArgs) -> Result<ExitCode, Failure> {
    let gen = require_generator(&a.gen)?;
    let opts = solver(a.tol)?;
    let grid = args::grid(a.grid, 0.999);
    let q = gen.q();
    let mut rows = Vec::new();
    for r in a.sweep.values()? {
        if !(r > 0.0) {
            return Err(Failure::Usage(format!("r must be positive, got {r}")));
        }
        let map = ResolventMap {
            gen: &gen,
            r,
            opts,
        };
        let est = estimate_orders(&map, &grid, a.theta).map_err(infra)?;
        // theory applies only past the threshold; leave it blank elsewhere
        let th = theoretical_orders(r * q.re, a.theta).ok();
        rows.push((r, est, th));
    }
    let mut out = sink(&a.out)?;
    match a.out.format.unwrap_or(Format::Csv) {
        Format::Csv => {
            writeln!(
                out,
                "r,x,theta,starlike_estimate,alpha_r,strong_estimate,beta_r,spirallike_estimate,alpha_r_theta,gamma_r,k_qc"
            )?;
            for (r, est, th) in &rows {
                writeln!(
                    out,
                    "{},{},{},{},{},{},{},{},{},{},{}",
                    fmt17(*r),
                    fmt17(r * q.re),
                    fmt17(a.theta),
                    fmt17(est.starlike_order),
                    opt17(th.map(|t| t.alpha_r)),
                    fmt17(est.strong_order),
                    opt17(th.map(|t| t.beta_r)),
                    opt17(est.spirallike_order),
                    opt17(th.and_then(|t| t.alpha_r_theta)),
                    opt17(th.map(|t| t.gamma_r)),
                    opt17(th.map(|t| t.k_qc)),
                )?;
            }
        }
        Format::Json => {
            for (r, est, th) in &rows {
                let row = json!({ "r": r, "x": r * q.re, "estimate": est, "theory": th });
                writeln!(out, "{row}")?;
            }
        }
    }
    out.flush()?;
    Ok(ExitCode::SUCCESS)
}

fn verify(a: &VerifyArgs) -> Result<ExitCode, Failure> {
    let mut cfg = SuiteConfig {
        checks: a.checks.clone(),
        q: a.q,
        n_atoms: a.atoms,
        grid: args::grid(a.grid, 0.999),
        squeeze_samples: a.squeeze_samples,
        solver: solver(a.tol)?,
        ..SuiteConfig::default()
    };
    if let Some(seeds) = &a.seeds {
        cfg.seeds = seeds.0.clone();
    }
    if !a.xs.is_empty() {
        cfg.xs = a.xs.clone();
    }
    let reports = verifier::run_suite(&cfg).map_err(|e| match e {
        verifier::SuiteError::UnknownCheck(_) | verifier::SuiteError::Sampler(_) => {
            Failure::Usage(e.to_string())
        }
        other => infra(other),
    })?;
    let mut out = sink(&a.out)?;
    match a.out.format.unwrap_or(Format::Json) {
        Format::Json => verifier::write_jsonl(&reports, &mut out)?,
        Format::Csv => verifier::write_csv(&reports, &mut out)?,
    }
    out.flush()?;
    let summary = summarize(&reports);
    eprintln!(
        "{} reports, {} failed, min margin {} ({})",
        summary.total,
        summary.failed,
        fmt17(summary.min_margin),
        summary.worst_check.as_deref().unwrap_or("-")
    );
    Ok(if summary.all_pass() {
        ExitCode::SUCCESS
    } else {
        ExitCode::from(1)
    })
}

fn trajectory_cmd(a: &TrajectoryArgs) -> Result<ExitCode, Failure> {
    let gen = require_generator(&a.gen)?;
    let opts = solver(a.tol)?;
    let field = match a.r {
        Some(r) => FlowField::Resolvent { gen: &gen, r, opts },
        None => FlowField::Generator(&gen),
    };
    let traj = trajectory(&field, a.t, a.z, &OdeOptions::default(), a.id.clone()).map_err(infra)?;
    let mut out = sink(&a.out)?;
    match a.out.format.unwrap_or(Format::Csv) {
        Format::Csv => traj.write_csv(&mut out)?,
        Format::Json => {
            serde_json::to_writer(&mut out, &traj).map_err(infra)?;
            writeln!(out)?;
        }
    }
    out.flush()?;
    Ok(ExitCode::SUCCESS)
}

fn init_threads() -> Result<(), Failure> {
    let Ok(value) = std::env::var(THREADS_ENV) else {
        return Ok(());
    };
    let n: usize = value
        .trim()
        .parse()
        .ok()
        .filter(|&n| n > 0)
        .ok_or_else(|| Failure::Usage(format!("{THREADS_ENV} must be a positive integer, got {value:?}")))?;
    rayon::ThreadPoolBuilder::new()
        .num_threads(n)
        .build_global()
        .map_err(infra)
}

fn run(cli: &Cli) -> Result<ExitCode, Failure> {
    init_threads()?;
    match &cli.command {
        Command::Eval(a) => eval(a),
        Command::Radii(a) => radii(a),
        Command::Orders(a) => orders(a),
        Command::Verify(a) => verify(a),
        Command::Trajectory(a) => trajectory_cmd(a),
    }
}

fn parse_args() -> Cli {
    match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) if e.use_stderr() => {
            let text = e.render().to_string();
            eprint!("{text}");
            if !text.contains("Usage:") {
                eprintln!("\n{}", Cli::command().render_usage());
            }
            std::process::exit(2)
        }
        Err(e) => e.exit(),
    }
}

fn main() -> ExitCode {
    let cli = parse_args();
    match run(&cli) {
        Ok(code) => code,
        Err(Failure::Usage(msg)) => Cli::command().error(ErrorKind::ValueValidation, msg).exit(),
        Err(Failure::Infra(msg)) => {
            eprintln!("error: {msg}");
            ExitCode::from(3)
        }
        // a closed pipe is not worth a failure status
        Err(Failure::Io(e)) if e.kind() == io::ErrorKind::BrokenPipe => ExitCode::SUCCESS,
        Err(Failure::Io(e)) => {
            eprintln!("error: {e}");
            ExitCode::from(3)
        }
    }
}
