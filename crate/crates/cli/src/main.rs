use std::collections::BTreeSet;
use std::io::{self, Write};
use std::path::Path;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};
use lrchain::{csv, ChainSpec, Channel, Error, SweepRequest, Variant, DEFAULT_WINDOW_FACTOR, MAX_ORACLE_SITES};

const ORACLE_TOL: f64 = 1e-10;

/// State transfer through long-range interacting spin chains.
///
/// Exit codes: 0 ok, 1 oracle mismatch, 2 invalid input, 3 numerical failure.
#[derive(Debug, Parser)]
#[command(name = "lrchain", version)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Fidelity as a function of time (CSV: t,f_abs,f_sq,fidelity).
    Trace(TraceArgs),
    /// Transfer metrics over a range of chain sizes.
    Sweep(SweepArgs),
    /// Components of selected eigenvectors on every site.
    Eigvec(EigvecArgs),
    /// Diagonal Hamiltonian elements per occupied site.
    Onsite(OnsiteArgs),
    /// Compare the single-excitation builder against the full 2^N Hamiltonian.
    OracleCheck(OracleArgs),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
enum VariantArg {
    Complete,
    Dh,
    Custom,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
enum SweepVariantArg {
    Complete,
    Dh,
    Custom,
    /// complete and dh
    Both,
}

#[derive(Debug, Args)]
struct Output {
    /// Output file, or `-` for standard output. Files are replaced atomically.
    #[arg(long, default_value = "-")]
    output: String,
    /// Suppress status messages on standard error.
    #[arg(long)]
    quiet: bool,
}

#[derive(Debug, Args)]
struct ChainArgs {
    /// Number of sites N.
    #[arg(long)]
    n: usize,
    /// Coupling exponent.
    #[arg(long, default_value_t = 3.0)]
    nu: f64,
    #[arg(long, value_enum, default_value_t = VariantArg::Complete)]
    variant: VariantArg,
    /// Hole sites for `--variant custom`, e.g. `3,48`.
    #[arg(long, value_delimiter = ',')]
    holes: Option<Vec<usize>>,
}

#[derive(Debug, Args)]
struct TraceArgs {
    #[command(flatten)]
    chain: ChainArgs,
    /// Trace length as a multiple of the ideal transfer time (ignored with --t-max).
    #[arg(long, default_value_t = DEFAULT_WINDOW_FACTOR)]
    window_factor: f64,
    /// Trace length in time units.
    #[arg(long)]
    t_max: Option<f64>,
    /// Number of time samples.
    #[arg(long, default_value_t = 20_001)]
    samples: usize,
    #[command(flatten)]
    out: Output,
}

#[derive(Debug, Args)]
struct SweepArgs {
    /// Chain sizes: `start:stop:step` (stop included when aligned) or a list `10,20,50`.
    #[arg(long)]
    n: String,
    #[arg(long, default_value_t = 3.0)]
    nu: f64,
    #[arg(long, value_enum, default_value_t = SweepVariantArg::Both)]
    variant: SweepVariantArg,
    #[arg(long, value_delimiter = ',')]
    holes: Option<Vec<usize>>,
    /// Search window as a multiple of the ideal transfer time.
    #[arg(long, default_value_t = DEFAULT_WINDOW_FACTOR)]
    window_factor: f64,
    /// Coarse scan steps per window.
    #[arg(long, default_value_t = 20_000)]
    samples: usize,
    #[command(flatten)]
    out: Output,
}

#[derive(Debug, Args)]
struct EigvecArgs {
    #[command(flatten)]
    chain: ChainArgs,
    /// 1-based eigenvector indices, ascending energy.
    #[arg(long, value_delimiter = ',', default_value = "1,2")]
    j: Vec<usize>,
    #[command(flatten)]
    out: Output,
}

#[derive(Debug, Args)]
struct OnsiteArgs {
    #[command(flatten)]
    chain: ChainArgs,
    /// Subtract the lowest on-site energy.
    #[arg(long)]
    shifted: bool,
    #[command(flatten)]
    out: Output,
}

#[derive(Debug, Args)]
struct OracleArgs {
    #[command(flatten)]
    chain: ChainArgs,
    #[command(flatten)]
    out: Output,
}

#[derive(Debug)]
struct Failure {
    code: u8,
    message: String,
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        Failure { code: e.exit_code() as u8, message: e.to_string() }
    }
}

fn invalid(message: impl Into<String>) -> Failure {
    Failure { code: 2, message: message.into() }
}

fn resolve_variant(variant: VariantArg, holes: Option<&Vec<usize>>) -> Result<Variant, Failure> {
    match (variant, holes) {
        (VariantArg::Custom, Some(h)) => Ok(Variant::Custom(h.iter().copied().collect::<BTreeSet<_>>())),
        (VariantArg::Custom, None) => Err(invalid("--variant custom requires --holes")),
        (_, Some(_)) => Err(invalid("--holes conflicts with --variant complete/dh; use --variant custom")),
        (VariantArg::Complete, None) => Ok(Variant::Complete),
        (VariantArg::Dh, None) => Ok(Variant::DoubleHole),
    }
}

impl ChainArgs {
    fn spec(&self) -> Result<ChainSpec, Failure> {
        Ok(resolve_variant(self.variant, self.holes.as_ref())?.spec(self.n, self.nu)?)
    }
}

/// Parses `start:stop:step` or a comma-separated list.
fn parse_sizes(text: &str) -> Result<Vec<usize>, Failure> {
    let num = |s: &str| s.trim().parse::<usize>().map_err(|_| invalid(format!("bad size `{s}` in --n {text}")));
    if text.contains(':') {
        let parts: Vec<&str> = text.split(':').collect();
        let (start, stop, step) = match parts.as_slice() {
            [a, b] => (num(a)?, num(b)?, 1),
            [a, b, c] => (num(a)?, num(b)?, num(c)?),
            _ => return Err(invalid(format!("range must be start:stop[:step], got {text}"))),
        };
        if step == 0 || start > stop {
            return Err(invalid(format!("empty range {text}")));
        }
        Ok((start..=stop).step_by(step).collect())
    } else {
        text.split(',').map(num).collect()
    }
}

fn emit(out: &Output, what: &str, write: impl FnOnce(&mut dyn Write) -> io::Result<()>) -> Result<(), Failure> {
    let io_fail = |e: io::Error| invalid(format!("cannot write {}: {e}", out.output));
    if out.output == "-" {
        let stdout = io::stdout();
        let mut lock = stdout.lock();
        write(&mut lock).and_then(|_| lock.flush()).map_err(io_fail)?;
        return Ok(());
    }
    let path = Path::new(&out.output);
    let dir = match path.parent() {
        Some(p) if !p.as_os_str().is_empty() => p,
        _ => Path::new("."),
    };
    let mut tmp = tempfile::NamedTempFile::new_in(dir).map_err(io_fail)?;
    {
        let mut buf = io::BufWriter::new(tmp.as_file_mut());
        write(&mut buf).and_then(|_| buf.flush()).map_err(io_fail)?;
    }
    tmp.persist(path).map_err(|e| io_fail(e.error))?;
    if !out.quiet {
        eprintln!("wrote {what} to {}", out.output);
    }
    Ok(())
}

fn cmd_trace(args: &TraceArgs) -> Result<(), Failure> {
    let spec = args.chain.spec()?;
    let t_max = match args.t_max {
        Some(t) => t,
        None => {
            if !(args.window_factor > 0.0) {
                return Err(invalid("--window-factor must be positive"));
            }
            args.window_factor * Channel::of(&spec).t_ideal()?
        }
    };
    let trace = lrchain::run_fidelity_trace(&spec, t_max, args.samples)?;
    emit(&args.out, "trace", |w| csv::write_trace(w, &trace))
}

fn cmd_sweep(args: &SweepArgs) -> Result<(), Failure> {
    let variants = match args.variant {
        SweepVariantArg::Both if args.holes.is_some() => {
            return Err(invalid("--holes conflicts with --variant both; use --variant custom"))
        }
        SweepVariantArg::Both => vec![Variant::Complete, Variant::DoubleHole],
        SweepVariantArg::Complete => vec![resolve_variant(VariantArg::Complete, args.holes.as_ref())?],
        SweepVariantArg::Dh => vec![resolve_variant(VariantArg::Dh, args.holes.as_ref())?],
        SweepVariantArg::Custom => vec![resolve_variant(VariantArg::Custom, args.holes.as_ref())?],
    };
    let mut req = SweepRequest::new(parse_sizes(&args.n)?, args.nu, variants);
    req.window_factor = args.window_factor;
    req.coarse_steps = args.samples;
    let result = lrchain::run_sweep(&req)?;
    let failed = result.rows.iter().filter(|r| r.outcome.is_err()).count();
    if failed > 0 && !args.out.quiet {
        eprintln!("{failed} of {} rows failed; see ERROR entries", result.rows.len());
    }
    emit(&args.out, "sweep", |w| csv::write_sweep(w, &result))
}

fn cmd_eigvec(args: &EigvecArgs) -> Result<(), Failure> {
    let spec = args.chain.spec()?;
    let table = lrchain::dump_eigenvector_components(&spec, &args.j)?;
    emit(&args.out, "eigenvectors", |w| csv::write_eigenvectors(w, &table))
}

fn cmd_onsite(args: &OnsiteArgs) -> Result<(), Failure> {
    let spec = args.chain.spec()?;
    let rows = lrchain::dump_onsite_energies(&spec, args.shifted)?;
    emit(&args.out, "on-site energies", |w| csv::write_onsite(w, &rows))
}

fn cmd_oracle_check(args: &OracleArgs) -> Result<(), Failure> {
    if args.chain.n > MAX_ORACLE_SITES {
        return Err(invalid(format!(
            "oracle-check builds a 2^N matrix; N = {} exceeds the limit of {MAX_ORACLE_SITES}",
            args.chain.n
        )));
    }
    let spec = args.chain.spec()?;
    let cmp = lrchain::oracle_check(&spec)?;
    let pass = cmp.passes(ORACLE_TOL);
    let (r, c) = cmp.worst;
    let (site_r, site_c) = (spec.occupied_sites()[r], spec.occupied_sites()[c]);
    let report = format!(
        "oracle-check {}\ndim={} shift={} max_deviation={} worst=({site_r},{site_c}) tol={ORACLE_TOL:e}\n{}\n",
        lrchain::experiments::spec_id(&spec),
        cmp.dim,
        csv::num(cmp.shift),
        csv::num(cmp.max_deviation),
        if pass { "PASS" } else { "FAIL" },
    );
    if !(args.out.quiet && args.out.output == "-") {
        emit(&args.out, "oracle report", |w| w.write_all(report.as_bytes()))?;
    }
    if pass {
        Ok(())
    } else {
        Err(Failure {
            code: 1,
            message: format!("mismatch at sites ({site_r}, {site_c}): deviation {:e}", cmp.max_deviation),
        })
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = match &cli.command {
        Command::Trace(a) => cmd_trace(a),
        Command::Sweep(a) => cmd_sweep(a),
        Command::Eigvec(a) => cmd_eigvec(a),
        Command::Onsite(a) => cmd_onsite(a),
        Command::OracleCheck(a) => cmd_oracle_check(a),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(f) => {
            eprintln!("error: {}", f.message);
            ExitCode::from(f.code)
        }
    }
}
