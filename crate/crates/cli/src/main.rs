//! `slgl`: forward, inverse, validation and round-trip runs over JSON and CSV files.

use std::f64::consts::PI;
use std::fmt;
use std::fs::File;
use std::io::{self, BufReader, BufWriter, Write};
use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::str::FromStr;

use clap::{Args, Parser, Subcommand};
use serde::Serialize;
use slgl::forward::{forward, sample_potential, ForwardConfig, DEFAULT_GRID};
use slgl::inverse::{b_from_a, inverse_solve, InverseConfig, DEFAULT_INVERSE_GRID, DEFAULT_PRODUCT_TRUNCATION};
use slgl::series::{build_f, decompose, tabulate_a, DEFAULT_DECAY_THRESHOLD};
use slgl::validator::{check_alpha_identity, validate, Status, ValidationConfig, ValidationReport};
use slgl::{BoundaryAngles, Error, GridFunction, SpectralData, SpectralFile};

const DEFAULT_N: usize = 64;

#[derive(Parser)]
#[command(
    name = "slgl",
    version,
    about = "Sturm-Liouville spectral data: forward, inverse and validation runs"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Compute eigenvalues and norming constants of L(q, alpha, beta)
    Forward(ForwardArgs),
    /// Reconstruct q, alpha and beta from spectral data
    Inverse(InverseArgs),
    /// Check spectral data against the characterization conditions
    Validate(ValidateArgs),
    /// Forward run followed by reconstruction, reporting the error in q
    Roundtrip(RoundtripArgs),
    /// Convert left norming constants a_n to right norming constants b_n
    Bconvert(BconvertArgs),
}

#[derive(Args)]
struct AngleArgs {
    /// Left boundary angle in (0, pi)
    #[arg(long, default_value_t = PI / 2.0, allow_negative_numbers = true)]
    alpha: f64,
    /// Right boundary angle in (0, pi)
    #[arg(long, default_value_t = PI / 2.0, allow_negative_numbers = true)]
    beta: f64,
    /// Read all angles in degrees
    #[arg(long)]
    degrees: bool,
}

impl AngleArgs {
    fn radians(&self, v: f64) -> f64 {
        if self.degrees {
            v.to_radians()
        } else {
            v
        }
    }

    fn angles(&self) -> Result<BoundaryAngles, CliError> {
        Ok(BoundaryAngles::new(self.radians(self.alpha), self.radians(self.beta))?)
    }
}

#[derive(Args)]
struct ForwardArgs {
    /// Potential: zero, const:c, cos2x or file:path (CSV with x,value columns)
    #[arg(long)]
    q: QSource,
    #[command(flatten)]
    angles: AngleArgs,
    /// Number of eigenpairs
    #[arg(long = "N", default_value_t = DEFAULT_N, value_parser = at_least(1))]
    n: usize,
    /// Integration grid size
    #[arg(long, default_value_t = DEFAULT_GRID, value_parser = at_least(3))]
    m: usize,
    /// Output JSON; standard output when omitted
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct InverseArgs {
    /// Spectral data JSON
    #[arg(long)]
    input: PathBuf,
    /// Reconstruction grid size
    #[arg(long, default_value_t = DEFAULT_INVERSE_GRID, value_parser = at_least(3))]
    m: usize,
    /// Reconstructed potential CSV
    #[arg(long, default_value = "q.csv")]
    q_out: PathBuf,
    /// Result summary JSON; standard output when omitted
    #[arg(long)]
    out: Option<PathBuf>,
    /// Tabulated a(x) on [0, 2 pi] as CSV
    #[arg(long)]
    a_out: Option<PathBuf>,
    /// Kernel F(x, t), t <= x, as CSV
    #[arg(long)]
    f_out: Option<PathBuf>,
    #[arg(long, allow_negative_numbers = true)]
    expect_alpha: Option<f64>,
    #[arg(long, allow_negative_numbers = true)]
    expect_beta: Option<f64>,
    /// Read expected angles in degrees
    #[arg(long)]
    degrees: bool,
    #[arg(long, default_value_t = DEFAULT_DECAY_THRESHOLD)]
    decay_threshold: f64,
}

#[derive(Args)]
struct ValidateArgs {
    /// Spectral data JSON
    #[arg(long)]
    input: PathBuf,
    #[command(flatten)]
    angles: AngleArgs,
    /// Truncation of the infinite products
    #[arg(long = "K", default_value_t = DEFAULT_PRODUCT_TRUNCATION, value_parser = at_least(100))]
    k: usize,
    #[arg(long, default_value_t = DEFAULT_DECAY_THRESHOLD)]
    decay_threshold: f64,
    /// Report JSON; standard output when omitted
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct RoundtripArgs {
    #[arg(long)]
    q: QSource,
    #[command(flatten)]
    angles: AngleArgs,
    #[arg(long = "N", default_value_t = DEFAULT_N, value_parser = at_least(1))]
    n: usize,
    /// Reconstruction grid size
    #[arg(long, default_value_t = DEFAULT_INVERSE_GRID, value_parser = at_least(3))]
    m: usize,
    /// Grid size of the forward integration
    #[arg(long, default_value_t = DEFAULT_GRID, value_parser = at_least(3))]
    forward_m: usize,
    /// Errors are measured on [margin, pi - margin]
    #[arg(long, default_value_t = 0.1)]
    margin: f64,
    #[arg(long)]
    q_out: Option<PathBuf>,
    /// Report JSON; standard output when omitted
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct BconvertArgs {
    #[arg(long)]
    input: PathBuf,
    #[arg(long = "K", default_value_t = DEFAULT_PRODUCT_TRUNCATION, value_parser = at_least(100))]
    k: usize,
    /// Output JSON with the b array added; standard output when omitted
    #[arg(long)]
    out: Option<PathBuf>,
}

fn at_least(min: usize) -> impl Fn(&str) -> Result<usize, String> + Clone {
    move |s| {
        let v: usize = s.parse().map_err(|e| format!("{e}"))?;
        if v < min {
            Err(format!("must be at least {min}"))
        } else {
            Ok(v)
        }
    }
}

#[derive(Clone, Debug)]
enum QSource {
    Zero,
    Const(f64),
    Cos2x,
    File(PathBuf),
}

impl FromStr for QSource {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, String> {
        match s {
            "zero" => Ok(QSource::Zero),
            "cos2x" => Ok(QSource::Cos2x),
            _ => {
                if let Some(c) = s.strip_prefix("const:") {
                    c.parse()
                        .map(QSource::Const)
                        .map_err(|e| format!("bad constant {c:?}: {e}"))
                } else if let Some(p) = s.strip_prefix("file:") {
                    Ok(QSource::File(PathBuf::from(p)))
                } else {
                    Err(format!(
                        "unknown potential {s:?}; expected zero, const:c, cos2x or file:path"
                    ))
                }
            }
        }
    }
}

impl QSource {
    fn sample(&self, m: usize) -> Result<GridFunction, CliError> {
        let q = match self {
            QSource::Zero => sample_potential(m, |_| 0.0)?,
            QSource::Const(c) => sample_potential(m, |_| *c)?,
            QSource::Cos2x => sample_potential(m, |x| (2.0 * x).cos())?,
            QSource::File(p) => {
                let q = GridFunction::read_csv(BufReader::new(open(p)?)).map_err(|e| CliError::input(p, e))?;
                let g = q.grid();
                if g.start().abs() > 1e-12 || (g.end() - PI).abs() > 1e-9 {
                    return Err(CliError::Input(format!(
                        "{}: potential must be sampled on [0, pi], got [{}, {}]",
                        p.display(),
                        g.start(),
                        g.end()
                    )));
                }
                q
            }
        };
        Ok(q)
    }
}

#[derive(Debug)]
enum CliError {
    Input(String),
    Validation(String),
    Numerical(String),
}

impl CliError {
    fn input(path: &Path, e: impl fmt::Display) -> Self {
        CliError::Input(format!("{}: {e}", path.display()))
    }

    fn code(&self) -> u8 {
        match self {
            CliError::Input(_) => 2,
            CliError::Validation(_) => 3,
            CliError::Numerical(_) => 4,
        }
    }
}

impl fmt::Display for CliError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            CliError::Input(m) => write!(f, "input error: {m}"),
            CliError::Validation(m) => write!(f, "validation failed: {m}"),
            CliError::Numerical(m) => write!(f, "numerical failure: {m}"),
        }
    }
}

impl From<Error> for CliError {
    fn from(e: Error) -> Self {
        let msg = e.to_string();
        match e.root() {
            Error::InvalidArgument(_) | Error::Parse(_) | Error::Io(_) => CliError::Input(msg),
            Error::Rejected(_) => CliError::Validation(msg),
            _ => CliError::Numerical(msg),
        }
    }
}

fn open(path: &Path) -> Result<File, CliError> {
    File::open(path).map_err(|e| CliError::input(path, e))
}

fn read_spectral(path: &Path) -> Result<(SpectralFile, SpectralData), CliError> {
    let file = SpectralFile::read(BufReader::new(open(path)?)).map_err(|e| CliError::input(path, e))?;
    let data = file.spectral().map_err(|e| CliError::input(path, e))?;
    Ok((file, data))
}

/// Runs `f` on the named file, or on standard output when there is none.
fn with_output(path: Option<&Path>, f: impl FnOnce(&mut dyn Write) -> slgl::Result<()>) -> Result<(), CliError> {
    match path {
        Some(p) => {
            let file = File::create(p).map_err(|e| CliError::input(p, e))?;
            let mut w = BufWriter::new(file);
            f(&mut w).map_err(|e| CliError::input(p, e))?;
            w.flush().map_err(|e| CliError::input(p, e))
        }
        None => {
            let mut w = io::stdout().lock();
            f(&mut w)?;
            writeln!(w).map_err(|e| CliError::Input(e.to_string()))
        }
    }
}

fn write_json<T: Serialize>(path: Option<&Path>, value: &T) -> Result<(), CliError> {
    with_output(path, |w| slgl::json::write_pretty(w, value))
}

/// Progress lines go to stdout only when stdout is not carrying the result.
fn note(to_stdout: bool, msg: &str) {
    if to_stdout {
        println!("{msg}");
    } else {
        eprintln!("{msg}");
    }
}

fn cmd_forward(args: &ForwardArgs) -> Result<(), CliError> {
    let angles = args.angles.angles()?;
    let q = args.q.sample(args.m)?;
    let r = forward(
        &q,
        angles,
        args.n,
        ForwardConfig {
            m: args.m,
            retain_traces: false,
        },
    )?;
    write_json(args.out.as_deref(), &SpectralFile::from_data(&r.spectral, Some(&r.b)))?;

    let loud = args.out.is_some();
    let head: Vec<String> = r.spectral.mus().iter().take(5).map(|mu| format!("{mu:.10}")).collect();
    note(loud, &format!("first eigenvalues: [{}]", head.join(", ")));
    let id = check_alpha_identity(&r.spectral, angles.alpha());
    note(
        loud,
        &format!(
            "alpha identity residual: {:.3e} (tolerance {:.3e})",
            id.residual, id.tolerance
        ),
    );
    Ok(())
}

fn write_kernel_csv(path: &Path, f: &slgl::kernel::TriangularKernel) -> Result<(), CliError> {
    let mut w = BufWriter::new(File::create(path).map_err(|e| CliError::input(path, e))?);
    let grid = f.grid();
    let io = |e: io::Error| CliError::input(path, e);
    writeln!(w, "x,t,value").map_err(io)?;
    for i in 0..f.m() {
        for j in 0..=i {
            writeln!(w, "{:.16e},{:.16e},{:.16e}", grid.x(i), grid.x(j), f.get(i, j)).map_err(io)?;
        }
    }
    w.flush().map_err(io)
}

fn cmd_inverse(args: &InverseArgs) -> Result<(), CliError> {
    let (_, data) = read_spectral(&args.input)?;
    let radians = |v: f64| if args.degrees { v.to_radians() } else { v };
    let config = InverseConfig {
        m: args.m,
        decay_threshold: args.decay_threshold,
        alpha_expected: args.expect_alpha.map(radians),
        beta_expected: args.expect_beta.map(radians),
        ..InverseConfig::default()
    };
    let r = inverse_solve(&data, &config)?;

    let q_file = File::create(&args.q_out).map_err(|e| CliError::input(&args.q_out, e))?;
    r.q.write_csv(BufWriter::new(q_file))
        .map_err(|e| CliError::input(&args.q_out, e))?;
    if args.a_out.is_some() || args.f_out.is_some() {
        let dec = decompose(&data, args.decay_threshold)?;
        if let Some(p) = &args.a_out {
            let table = tabulate_a(&data, &dec, args.m)?;
            let a = GridFunction::new(*table.grid(), table.values().to_vec())?;
            a.write_csv(BufWriter::new(File::create(p).map_err(|e| CliError::input(p, e))?))
                .map_err(|e| CliError::input(p, e))?;
        }
        if let Some(p) = &args.f_out {
            write_kernel_csv(p, &build_f(&data, &dec, args.m)?)?;
        }
    }
    write_json(args.out.as_deref(), &r.summary(args.q_out.display().to_string()))?;

    let loud = args.out.is_some();
    let d = &r.diagnostics;
    note(
        loud,
        &format!("alpha = {:.10}, beta = {:.10}", r.alpha_tilde, r.beta_tilde),
    );
    note(
        loud,
        &format!("residual = {:.3e}, condition = {:.3e}", d.residual, d.condition),
    );
    if let Some(dev) = d.alpha_deviation {
        note(loud, &format!("alpha deviation: {dev:.3e}"));
    }
    if let Some(dev) = d.beta_deviation {
        note(loud, &format!("beta deviation: {dev:.3e}"));
    }
    if !d.a_zero_settled {
        eprintln!(
            "warning: a(0) partial sums have not settled (last change {:.3e})",
            d.a_zero_change
        );
    }
    Ok(())
}

fn cmd_validate(args: &ValidateArgs) -> Result<(), CliError> {
    let (_, data) = read_spectral(&args.input)?;
    let angles = args.angles.angles()?;
    let config = ValidationConfig {
        decay_threshold: args.decay_threshold,
        k_max: args.k,
    };
    let report = validate(&data, angles.alpha(), angles.beta(), &config)?;
    write_json(args.out.as_deref(), &report)?;
    if report.passed {
        Ok(())
    } else {
        Err(CliError::Validation(failed_checks(&report).join(", ")))
    }
}

fn failed_checks(r: &ValidationReport) -> Vec<&'static str> {
    let mut failed = Vec::new();
    if !r.hard.passed() {
        failed.push("hard checks");
    }
    if r.asymptotics.as_ref().is_some_and(|a| !a.passed()) {
        failed.push("asymptotics");
    }
    if r.alpha_identity.as_ref().is_some_and(|c| c.status != Status::Pass) {
        failed.push("alpha identity");
    }
    if r.beta_identity.as_ref().is_some_and(|c| c.status != Status::Pass) {
        failed.push("beta identity");
    }
    failed
}

#[derive(Serialize)]
struct RoundtripReport {
    #[serde(rename = "N")]
    n: usize,
    m: usize,
    alpha: f64,
    beta: f64,
    alpha_tilde: f64,
    beta_tilde: f64,
    margin: f64,
    max_error: f64,
    l1_error: f64,
    residual: f64,
}

fn cmd_roundtrip(args: &RoundtripArgs) -> Result<(), CliError> {
    let angles = args.angles.angles()?;
    if !(0.0..PI / 2.0).contains(&args.margin) {
        return Err(CliError::Input(format!("margin {} must lie in [0, pi/2)", args.margin)));
    }
    let q = args.q.sample(args.forward_m)?;
    let fwd = forward(
        &q,
        angles,
        args.n,
        ForwardConfig {
            m: args.forward_m,
            retain_traces: false,
        },
    )?;
    let r = inverse_solve(
        &fwd.spectral,
        &InverseConfig {
            m: args.m,
            ..InverseConfig::default()
        },
    )?;

    let grid = r.q.grid();
    let (lo, hi) = (args.margin, PI - args.margin);
    let err: Vec<(f64, f64)> = (0..grid.len())
        .map(|i| (grid.x(i), (r.q.values()[i] - q.interpolate(grid.x(i))).abs()))
        .collect();
    let interior = || err.iter().filter(|(x, _)| *x >= lo && *x <= hi).map(|(_, e)| *e);
    let max_error = interior().fold(0.0, f64::max);
    let l1_error = interior().sum::<f64>() * grid.spacing();

    if let Some(p) = &args.q_out {
        r.q.write_csv(BufWriter::new(File::create(p).map_err(|e| CliError::input(p, e))?))
            .map_err(|e| CliError::input(p, e))?;
    }
    let report = RoundtripReport {
        n: args.n,
        m: args.m,
        alpha: angles.alpha(),
        beta: angles.beta(),
        alpha_tilde: r.alpha_tilde,
        beta_tilde: r.beta_tilde,
        margin: args.margin,
        max_error,
        l1_error,
        residual: r.diagnostics.residual,
    };
    write_json(args.out.as_deref(), &report)?;
    note(
        args.out.is_some(),
        &format!("interior max error {max_error:.3e}, L1 error {l1_error:.3e}"),
    );
    Ok(())
}

fn cmd_bconvert(args: &BconvertArgs) -> Result<(), CliError> {
    let (_, data) = read_spectral(&args.input)?;
    let conv = b_from_a(&data, args.k)?;
    write_json(args.out.as_deref(), &SpectralFile::from_data(&data, Some(&conv.b)))?;
    let worst = conv.relative_error.iter().fold(0.0f64, |m, e| m.max(*e));
    note(
        args.out.is_some(),
        &format!("worst relative error bound on b: {worst:.3e}"),
    );
    Ok(())
}

fn configure_threads() -> Result<(), CliError> {
    let Ok(v) = std::env::var("SLGL_THREADS") else {
        return Ok(());
    };
    let n: usize = v
        .parse()
        .ok()
        .filter(|&n| n > 0)
        .ok_or_else(|| CliError::Input(format!("SLGL_THREADS must be a positive integer, got {v:?}")))?;
    rayon::ThreadPoolBuilder::new()
        .num_threads(n)
        .build_global()
        .map_err(|e| CliError::Numerical(e.to_string()))
}

fn run(cli: &Cli) -> Result<(), CliError> {
    configure_threads()?;
    match &cli.command {
        Command::Forward(a) => cmd_forward(a),
        Command::Inverse(a) => cmd_inverse(a),
        Command::Validate(a) => cmd_validate(a),
        Command::Roundtrip(a) => cmd_roundtrip(a),
        Command::Bconvert(a) => cmd_bconvert(a),
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(&cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("slgl: {e}");
            ExitCode::from(e.code())
        }
    }
}
