//! `linqubit` command line: grid sweeps, closed-form vs brute-force
//! verification, design-point search and single-point evaluation.

pub mod output;

use std::fs::File;
use std::io::{self, BufWriter, Write};
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand, ValueEnum};

use linqubit_core::design::{self, DesignQuery};
use linqubit_core::scheme::{self, NumericCircuit};
use linqubit_core::sweep::{self, parse_scalar};
use linqubit_core::verify::{self, VerifyConfig};
use linqubit_core::{
    AxisRange, Complex64, Cutoff, DensityOperator, Error, EvalMode, Herald, SchemeParams, SweepSpec, TargetQubit,
};

pub mod exit {
    pub const SUCCESS: i32 = 0;
    pub const VERIFY_FAILED: i32 = 1;
    pub const IO_ERROR: i32 = 2;
    pub const INFEASIBLE: i32 = 3;
    pub const USAGE: i32 = 64;
}

#[derive(Debug, Parser)]
#[command(name = "linqubit", version, about = "Heralded vacuum/one-photon qubits from linear optics and on/off detectors")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Evaluate P_YN and F over a (gamma, phi) grid.
    Sweep(SweepArgs),
    /// Reconcile the closed forms with the brute-force simulation.
    Verify(VerifyArgs),
    /// Search for the highest-fidelity setting above a probability floor.
    Design(DesignArgs),
    /// Evaluate a single parameter point.
    Point(PointArgs),
}

#[derive(Debug, Clone, Copy, ValueEnum)]
pub enum Format {
    Csv,
    Json,
}

#[derive(Debug, Args)]
pub struct SweepArgs {
    #[arg(long, default_value_t = 0.8)]
    pub eta: f64,
    /// Fix gamma to one value (overrides --gamma-range).
    #[arg(long)]
    pub gamma: Option<String>,
    /// Fix phi to one value (overrides --phi-range).
    #[arg(long)]
    pub phi: Option<String>,
    #[arg(long, default_value = "0:2:41")]
    pub gamma_range: String,
    #[arg(long, default_value = "0:pi:41")]
    pub phi_range: String,
    #[arg(long, default_value = "yn")]
    pub outcome: String,
    #[arg(long, default_value = "analytic")]
    pub mode: String,
    #[arg(long, default_value = "auto")]
    pub cutoff: String,
    #[arg(long, value_enum, default_value_t = Format::Csv)]
    pub format: Format,
    /// Output file; standard output when absent.
    #[arg(long)]
    pub out: Option<PathBuf>,
    /// Also write gnuplot matrix blocks (P_YN, then F) to this file.
    #[arg(long)]
    pub gnuplot: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct VerifyArgs {
    #[arg(long, value_delimiter = ',', default_values_t = [0.4, 0.8, 1.0])]
    pub eta: Vec<f64>,
    /// Points per axis of the (gamma, phi) grid.
    #[arg(long, default_value_t = 12)]
    pub grid: usize,
    /// Perturb eta in the numeric arm; the run must then fail.
    #[arg(long)]
    pub inject_fault: bool,
}

#[derive(Debug, Args)]
pub struct DesignArgs {
    #[arg(long, default_value_t = 0.8)]
    pub eta: f64,
    #[arg(long)]
    pub p_min: f64,
    /// Target amplitudes `a0,a1` (complex allowed, e.g. `0.6,0.8i`).
    #[arg(long)]
    pub target: Option<String>,
}

#[derive(Debug, Args)]
pub struct PointArgs {
    #[arg(long, default_value_t = 0.8)]
    pub eta: f64,
    /// Coherent amplitude, real or complex (`0.5+0.2i`).
    #[arg(long)]
    pub gamma: String,
    #[arg(long)]
    pub phi: String,
    #[arg(long, default_value = "yn")]
    pub outcome: String,
    #[arg(long, default_value = "both")]
    pub mode: String,
    #[arg(long, default_value = "auto")]
    pub cutoff: String,
}

/// Failure carrying its process exit code.
#[derive(Debug)]
pub struct Failure {
    pub code: i32,
    pub message: String,
}

impl Failure {
    fn usage(message: impl Into<String>) -> Self {
        Self { code: exit::USAGE, message: message.into() }
    }

    fn io(path: &Path, err: io::Error) -> Self {
        Self { code: exit::IO_ERROR, message: format!("cannot write {}: {err}", path.display()) }
    }
}

impl From<Error> for Failure {
    fn from(err: Error) -> Self {
        let code = match err {
            Error::Infeasible { .. } => exit::INFEASIBLE,
            Error::NumericalInconsistency(_) => exit::VERIFY_FAILED,
            _ => exit::USAGE,
        };
        Self { code, message: err.to_string() }
    }
}

type CmdResult = Result<i32, Failure>;

fn parse_complex(text: &str) -> Result<Complex64, Failure> {
    let t = text.trim();
    if let Ok(x) = parse_scalar(t) {
        return Ok(Complex64::new(x, 0.0));
    }
    t.parse::<Complex64>()
        .map_err(|_| Failure::usage(format!("cannot parse complex number '{text}'")))
}

fn parse_target(text: &str) -> Result<TargetQubit, Failure> {
    let parts: Vec<&str> = text.split(',').collect();
    let [a0, a1] = parts.as_slice() else {
        return Err(Failure::usage(format!("target must be 'a0,a1', got '{text}'")));
    };
    Ok(TargetQubit::new(parse_complex(a0)?, parse_complex(a1)?)?)
}

fn create(path: &Path) -> Result<BufWriter<File>, Failure> {
    File::create(path).map(BufWriter::new).map_err(|e| Failure::io(path, e))
}

pub fn cmd_sweep(args: &SweepArgs) -> CmdResult {
    let gamma = match &args.gamma {
        Some(g) => AxisRange::single(parse_scalar(g)?),
        None => args.gamma_range.parse()?,
    };
    let phi = match &args.phi {
        Some(p) => AxisRange::single(parse_scalar(p)?),
        None => args.phi_range.parse()?,
    };
    let spec = SweepSpec {
        gamma,
        phi,
        eta: args.eta,
        herald: args.outcome.parse()?,
        mode: args.mode.parse()?,
        cutoff: args.cutoff.parse()?,
    };
    spec.validate()?;
    let records = sweep::run_sweep(&spec)?;

    let written = match &args.out {
        Some(path) => {
            let mut w = create(path)?;
            write_records(&records, args.format, &mut w)
                .and_then(|_| w.flush())
                .map_err(|e| Failure::io(path, e))
        }
        None => {
            let stdout = io::stdout();
            let mut w = stdout.lock();
            write_records(&records, args.format, &mut w).map_err(|e| Failure::io(Path::new("<stdout>"), e))
        }
    };
    written?;
    if let Some(path) = &args.gnuplot {
        let mut w = create(path)?;
        output::write_gnuplot(&records, &spec.gamma.values(), &mut w)
            .and_then(|_| w.flush())
            .map_err(|e| Failure::io(path, e))?;
    }
    Ok(exit::SUCCESS)
}

fn write_records<W: Write>(records: &[linqubit_core::SweepRecord], format: Format, w: W) -> io::Result<()> {
    match format {
        Format::Csv => output::write_csv(records, w),
        Format::Json => output::write_json(records, w),
    }
}

pub fn cmd_verify<W: Write>(args: &VerifyArgs, out: &mut W) -> CmdResult {
    if args.grid == 0 || args.eta.is_empty() {
        return Err(Failure::usage("verify needs a non-empty eta list and grid >= 1"));
    }
    let config = VerifyConfig { etas: args.eta.clone(), grid: args.grid, inject_fault: args.inject_fault };
    let report = verify::run_verify(&config)?;
    let io_err = |e| Failure::io(Path::new("<stdout>"), e);
    writeln!(
        out,
        "verify: {} grid points, eta in {:?}{}",
        report.points,
        config.etas,
        if config.inject_fault { " (fault injected)" } else { "" }
    )
    .map_err(io_err)?;
    for check in &report.checks {
        writeln!(out, "{check}").map_err(io_err)?;
    }
    for (eta, vacuum) in &report.vacuum_projector {
        let what = if *vacuum { "vacuum projector" } else { "not a vacuum projector" };
        writeln!(out, "eta={eta}: Pi_N is {what}").map_err(io_err)?;
    }
    if report.passed() {
        writeln!(out, "verify: PASS").map_err(io_err)?;
        Ok(exit::SUCCESS)
    } else {
        writeln!(out, "verify: FAIL").map_err(io_err)?;
        Ok(exit::VERIFY_FAILED)
    }
}

pub fn cmd_design<W: Write>(args: &DesignArgs, out: &mut W) -> CmdResult {
    let target = args.target.as_deref().map(parse_target).transpose()?;
    let query = DesignQuery::new(args.eta, args.p_min, target)?;
    let report = match design::design_search(&query) {
        Ok(r) => r,
        Err(Error::Infeasible { p_min, max_probability }) => {
            writeln!(out, "infeasible: P_YN >= {p_min} unreachable; max P_YN = {max_probability:.6}")
                .map_err(|e| Failure::io(Path::new("<stdout>"), e))?;
            return Ok(exit::INFEASIBLE);
        }
        Err(e) => return Err(e.into()),
    };
    let b = report.best;
    let gamma = if b.gamma.im == 0.0 { format!("{:.10}", b.gamma.re) } else { format!("{:.10}", b.gamma) };
    writeln!(
        out,
        "gamma* = {gamma}\nphi*   = {:.10}\nF*     = {:.10}\nP_YN*  = {:.10}",
        b.phi, b.fidelity, b.p_yn
    )
    .map_err(|e| Failure::io(Path::new("<stdout>"), e))?;
    Ok(exit::SUCCESS)
}

fn print_rho<W: Write>(out: &mut W, label: &str, rho: &DensityOperator) -> io::Result<()> {
    writeln!(out, "{label}")?;
    for i in 0..2 {
        let row: Vec<String> = (0..2)
            .map(|j| {
                let z = rho.get(i, j);
                format!("{:+.12e}{:+.12e}i", z.re, z.im)
            })
            .collect();
        writeln!(out, "  [{}]", row.join("  "))?;
    }
    Ok(())
}

pub fn cmd_point<W: Write>(args: &PointArgs, out: &mut W) -> CmdResult {
    let gamma = parse_complex(&args.gamma)?;
    let phi = parse_scalar(&args.phi)?;
    let herald: Herald = args.outcome.parse()?;
    let mode: EvalMode = args.mode.parse()?;
    let cutoff: Cutoff = args.cutoff.parse()?;
    let params = SchemeParams::new(args.eta, gamma, phi, cutoff)?;
    let io_err = |e| Failure::io(Path::new("<stdout>"), e);

    let analytic = match mode {
        EvalMode::Numeric => None,
        _ => Some(scheme::analytic_point(params.eta, gamma, phi, herald)?),
    };
    let numeric = match mode {
        EvalMode::Analytic => None,
        _ => Some(NumericCircuit::build(&params)?.evaluate(herald, gamma, phi)?),
    };
    writeln!(out, "eta = {}  gamma = {}  phi = {}  outcome = {}", params.eta, gamma, phi, herald).map_err(io_err)?;
    if let Some(a) = &analytic {
        writeln!(out, "analytic: P_YN = {:.12e}  F = {:.12e}", a.probability, a.fidelity).map_err(io_err)?;
        print_rho(out, "analytic rho:", &a.rho).map_err(io_err)?;
    }
    if let Some(n) = &numeric {
        writeln!(
            out,
            "numeric:  P_YN = {:.12e}  F = {:.12e}  (cutoff {}, leakage {:.1e})",
            n.p_yn, n.fidelity, n.diagnostics.cutoff, n.diagnostics.transform_leakage
        )
        .map_err(io_err)?;
        print_rho(out, "numeric rho:", &n.rho).map_err(io_err)?;
    }
    if let (Some(a), Some(n)) = (&analytic, &numeric) {
        writeln!(
            out,
            "|dp| = {:.3e}  |drho|_max = {:.3e}  |dF| = {:.3e}",
            (n.p_yn - a.probability).abs(),
            n.rho.max_abs_diff(&a.rho)?,
            (n.fidelity - a.fidelity).abs()
        )
        .map_err(io_err)?;
    }
    Ok(exit::SUCCESS)
}

/// Parses `args` and runs the command, returning the process exit code.
pub fn run<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<std::ffi::OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() { exit::USAGE } else { exit::SUCCESS };
            let _ = e.print();
            return code;
        }
    };
    let stdout = io::stdout();
    let mut out = stdout.lock();
    let result = match &cli.command {
        Command::Sweep(a) => cmd_sweep(a),
        Command::Verify(a) => cmd_verify(a, &mut out),
        Command::Design(a) => cmd_design(a, &mut out),
        Command::Point(a) => cmd_point(a, &mut out),
    };
    match result {
        Ok(code) => code,
        Err(f) => {
            eprintln!("linqubit: {}", f.message);
            f.code
        }
    }
}
