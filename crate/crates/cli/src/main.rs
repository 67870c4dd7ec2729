use std::fs::File;
use std::io::{self, BufWriter, Write};
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Parser, Subcommand, ValueEnum};

use mpmue::estimation::{self, SampleData, DEFAULT_TRIM};
use mpmue::mixed_poisson::{self as mp, TimeTransform};
use mpmue::verify::{self, ledger, Tolerances};
use mpmue::waiting_times as wt;
use mpmue::{Params, RandomStream};

type CliResult<T> = Result<T, Box<dyn std::error::Error>>;

/// Max-U-Exp distributions and the mixed Poisson process.
#[derive(Parser)]
#[command(name = "mpmue", version, about)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Evaluate densities, distribution functions or count probabilities.
    Eval {
        #[arg(value_enum)]
        dist: Dist,
        #[command(flatten)]
        params: ParamArgs,
        /// Evaluation points (comma separated or repeated).
        #[arg(long = "x", visible_alias = "t", value_delimiter = ',', num_args = 1..)]
        points: Vec<f64>,
        /// Erlang order, or the counts for `pmf` (default: 0 up to the tail cutoff).
        #[arg(long, value_delimiter = ',', num_args = 1..)]
        n: Vec<u64>,
        /// Clock value μ(t) for `pmf`.
        #[arg(long)]
        mu: Option<f64>,
        #[arg(short, long)]
        output: Option<PathBuf>,
    },
    /// Fit (a, λ) to a single-column CSV sample.
    Fit {
        input: PathBuf,
        #[arg(long, value_enum, default_value_t = Method::Auto)]
        method: Method,
        /// Fraction of the largest observations dropped by least squares.
        #[arg(long, default_value_t = DEFAULT_TRIM)]
        trim: f64,
    },
    /// Draw samples or a process path.
    Simulate {
        #[arg(value_enum)]
        target: Target,
        #[command(flatten)]
        params: ParamArgs,
        /// Number of draws.
        #[arg(long, default_value_t = 1000)]
        n: usize,
        /// Erlang order.
        #[arg(long, default_value_t = 1)]
        order: u32,
        /// Path horizon.
        #[arg(long, default_value_t = 1.0)]
        horizon: f64,
        /// Clock: `power:c` or `table:<csv of t,mu>`.
        #[arg(long, default_value = "power:1")]
        mu: String,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(short, long)]
        output: Option<PathBuf>,
    },
    /// Emit the moment-ratio curve g(x) on a grid.
    Momcurve {
        #[arg(long, default_value_t = 0.1)]
        lo: f64,
        #[arg(long, default_value_t = 10.0)]
        hi: f64,
        #[arg(long, default_value_t = 1000)]
        steps: usize,
        #[arg(short, long)]
        output: Option<PathBuf>,
    },
    /// Run every oracle check and write the formula ledger.
    ///
    /// MPMUE_TOL overrides the deterministic tolerance (default 1e-8).
    Verify {
        #[arg(long, default_value = "ledger.json")]
        ledger: PathBuf,
    },
}

#[derive(clap::Args)]
struct ParamArgs {
    #[arg(long, default_value_t = 1.0)]
    a: f64,
    #[arg(long, default_value_t = 1.0)]
    lambda: f64,
}

impl ParamArgs {
    fn build(&self) -> CliResult<Params> {
        Ok(Params::new(self.a, self.lambda)?)
    }
}

#[derive(Clone, Copy, ValueEnum)]
enum Dist {
    Maxuexp,
    Emue,
    Erlang,
    Pmf,
}

#[derive(Clone, Copy, ValueEnum)]
enum Method {
    Mom,
    Lsq,
    Auto,
}

#[derive(Clone, Copy, ValueEnum)]
enum Target {
    Xi,
    Tau,
    Erlang,
    Path,
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli) {
        Ok(code) => code,
        Err(e) if e.downcast_ref::<io::Error>().is_some_and(|e| e.kind() == io::ErrorKind::BrokenPipe) => {
            ExitCode::SUCCESS
        }
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(2)
        }
    }
}

fn run(cli: Cli) -> CliResult<ExitCode> {
    match cli.command {
        Command::Eval { dist, params, points, n, mu, output } => {
            let p = params.build()?;
            let mut out = sink(output.as_deref())?;
            eval(&mut out, dist, &p, &points, &n, mu)?;
            out.flush()?;
        }
        Command::Fit { input, method, trim } => {
            let sample = read_sample(&input)?;
            let report = match method {
                Method::Mom => estimation::solve_mom(&sample)?,
                Method::Lsq => {
                    let init = estimation::solve_mom(&sample)?.params()?;
                    estimation::lsq_fit(&sample, &init, trim)?
                }
                Method::Auto => estimation::fit_auto(&sample)?,
            };
            writeln!(io::stdout().lock(), "{}", serde_json::to_string_pretty(&report)?)?;
        }
        Command::Simulate { target, params, n, order, horizon, mu, seed, output } => {
            let p = params.build()?;
            let mut out = sink(output.as_deref())?;
            simulate(&mut out, target, &p, n, order, horizon, &mu, seed)?;
            out.flush()?;
        }
        Command::Momcurve { lo, hi, steps, output } => {
            if !(lo > 0.0 && lo < hi && hi.is_finite()) || steps == 0 {
                return Err(format!("need 0 < lo < hi and steps >= 1, got lo={lo}, hi={hi}, steps={steps}").into());
            }
            let (argmin, min) = estimation::mom_curve_minimum()?;
            let mut out = sink(output.as_deref())?;
            writeln!(out, "# argmin={argmin:.4} min={min:.4}")?;
            writeln!(out, "x,g")?;
            for i in 0..=steps {
                let x = lo + (hi - lo) * i as f64 / steps as f64;
                writeln!(out, "{},{}", sig(x), sig(estimation::mom_curve(x)))?;
            }
            out.flush()?;
        }
        Command::Verify { ledger: path } => return verify_cmd(&path),
    }
    Ok(ExitCode::SUCCESS)
}

fn sink(path: Option<&Path>) -> CliResult<Box<dyn Write>> {
    Ok(match path {
        Some(p) => Box::new(BufWriter::new(File::create(p)?)),
        None => Box::new(BufWriter::new(io::stdout().lock())),
    })
}

/// Decimal with 12 significant digits and trailing zeros removed; very
/// large or small magnitudes fall back to scientific notation.
fn sig(v: f64) -> String {
    if v == 0.0 || !v.is_finite() {
        return format!("{v}");
    }
    let exp = v.abs().log10().floor() as i32;
    if !(-6..=15).contains(&exp) {
        return format!("{v:.11e}");
    }
    let decimals = (11 - exp).max(0) as usize;
    let s = format!("{v:.decimals$}");
    if s.contains('.') {
        s.trim_end_matches('0').trim_end_matches('.').to_string()
    } else {
        s
    }
}

fn eval(out: &mut dyn Write, dist: Dist, p: &Params, points: &[f64], n: &[u64], mu: Option<f64>) -> CliResult<()> {
    let need_points = || -> CliResult<()> {
        if points.is_empty() {
            return Err("no evaluation points given (use --x)".into());
        }
        Ok(())
    };
    match dist {
        Dist::Maxuexp => {
            need_points()?;
            writeln!(out, "x,pdf,cdf")?;
            for &x in points {
                writeln!(out, "{x},{},{}", sig(p.pdf(x)), sig(p.cdf(x)))?;
            }
        }
        Dist::Emue => {
            need_points()?;
            writeln!(out, "t,pdf,cdf")?;
            for &t in points {
                writeln!(out, "{t},{},{}", sig(wt::emue_pdf(p, t)), sig(wt::emue_cdf(p, t)))?;
            }
        }
        Dist::Erlang => {
            let order = match n {
                [k] => u32::try_from(*k)?,
                _ => return Err("erlang needs exactly one order --n".into()),
            };
            need_points()?;
            // Validate the order before writing anything.
            wt::erlang_pdf(p, order, 1.0)?;
            writeln!(out, "t,pdf,cdf")?;
            for &t in points {
                writeln!(out, "{t},{},{}", sig(wt::erlang_pdf(p, order, t)?), sig(wt::erlang_cdf(p, order, t)?))?;
            }
        }
        Dist::Pmf => {
            let m = mu.ok_or("pmf needs the clock value --mu")?;
            let counts: Vec<u64> = if n.is_empty() {
                (0..=mp::pmf_cutoff(p, m, 1e-12)?).collect()
            } else {
                n.to_vec()
            };
            let values = counts.iter().map(|&k| mp::pmf(p, m, k)).collect::<Result<Vec<_>, _>>()?;
            writeln!(out, "n,pmf")?;
            for (k, v) in counts.iter().zip(values) {
                writeln!(out, "{k},{}", sig(v))?;
            }
        }
    }
    Ok(())
}

fn csv_reader(path: &Path) -> CliResult<csv::Reader<File>> {
    let file = File::open(path).map_err(|e| format!("{}: {e}", path.display()))?;
    Ok(csv::ReaderBuilder::new().has_headers(false).flexible(true).comment(Some(b'#')).from_reader(file))
}

/// Single numeric column with an optional `x` header.
fn read_sample(path: &Path) -> CliResult<SampleData> {
    let mut values = Vec::new();
    for (i, rec) in csv_reader(path)?.records().enumerate() {
        let rec = rec?;
        let row = i + 1;
        let field = rec.get(0).unwrap_or("").trim();
        if row == 1 && field.eq_ignore_ascii_case("x") {
            continue;
        }
        if rec.len() != 1 {
            return Err(format!("row {row}: expected one column, found {}", rec.len()).into());
        }
        let v: f64 = field.parse().map_err(|_| format!("row {row}: '{field}' is not a number"))?;
        if !(v > 0.0 && v.is_finite()) {
            return Err(format!("row {row}: value {v} is not positive").into());
        }
        values.push(v);
    }
    if values.is_empty() {
        return Err(format!("{}: no observations", path.display()).into());
    }
    Ok(SampleData::new(values)?)
}

/// `power:c` or `table:<path>`; the table is a two-column CSV of `(t, μ)`.
fn parse_clock(spec: &str) -> CliResult<TimeTransform> {
    if let Some(c) = spec.strip_prefix("power:") {
        let c: f64 = c.parse().map_err(|_| format!("bad power exponent '{c}'"))?;
        return Ok(TimeTransform::power(c)?);
    }
    if let Some(path) = spec.strip_prefix("table:") {
        let mut points = Vec::new();
        for (i, rec) in csv_reader(Path::new(path))?.records().enumerate() {
            let rec = rec?;
            let row = i + 1;
            let cols: Vec<&str> = rec.iter().map(str::trim).collect();
            if cols.len() != 2 {
                return Err(format!("{path} row {row}: expected two columns t,mu").into());
            }
            match (cols[0].parse::<f64>(), cols[1].parse::<f64>()) {
                (Ok(t), Ok(m)) => points.push((t, m)),
                _ if row == 1 => continue,
                _ => return Err(format!("{path} row {row}: non-numeric entry").into()),
            }
        }
        return Ok(TimeTransform::table(points).map_err(|e| format!("{path}: {e}"))?);
    }
    Err(format!("clock must be power:c or table:<path>, got '{spec}'").into())
}

#[allow(clippy::too_many_arguments)]
fn simulate(
    out: &mut dyn Write,
    target: Target,
    p: &Params,
    n: usize,
    order: u32,
    horizon: f64,
    clock: &str,
    seed: u64,
) -> CliResult<()> {
    let mut s = RandomStream::new(seed);
    match target {
        Target::Xi | Target::Tau | Target::Erlang => {
            if matches!(target, Target::Erlang) && order == 0 {
                return Err("Erlang order must be at least 1".into());
            }
            for _ in 0..n {
                let v = match target {
                    Target::Xi => p.sample(&mut s),
                    Target::Tau => wt::emue_sample(p, &mut s),
                    _ => wt::erlang_sample(p, order, &mut s),
                };
                writeln!(out, "{}", sig(v))?;
            }
        }
        Target::Path => {
            let tt = parse_clock(clock)?;
            let path = mp::simulate_path(p, &tt, horizon, &mut s)?;
            writeln!(out, "# xi={}", sig(path.xi))?;
            writeln!(out, "event_index,time")?;
            for (i, t) in path.events.iter().enumerate() {
                writeln!(out, "{},{}", i + 1, sig(*t))?;
            }
        }
    }
    Ok(())
}

fn verify_cmd(ledger_path: &Path) -> CliResult<ExitCode> {
    let tol = Tolerances::from_env();
    let report = verify::run_all(&tol);
    if let Some(dir) = ledger_path.parent().filter(|d| !d.as_os_str().is_empty()) {
        std::fs::create_dir_all(dir)?;
    }
    ledger::write_json(&report.ledger, ledger_path)?;

    let mut out = io::stdout().lock();
    for c in &report.checks {
        let mark = if c.passed { "PASS" } else { "FAIL" };
        writeln!(out, "{mark} {:<38} {:.3e} (bound {:.3e}) {}", c.id, c.statistic, c.threshold, c.detail)?;
    }
    for r in &report.ledger {
        let verdict = serde_json::to_value(r.verdict)?;
        writeln!(out, "LEDGER {:<26} {}", r.formula_id, verdict.as_str().unwrap_or_default())?;
    }
    let failed = report.failures().count();
    writeln!(out, "{} checks, {failed} failed; ledger written to {}", report.checks.len(), ledger_path.display())?;
    if failed > 0 {
        eprintln!("{failed} of {} checks failed", report.checks.len());
        for c in report.failures() {
            eprintln!("  {}: {}", c.id, c.detail);
        }
        return Ok(ExitCode::from(1));
    }
    Ok(ExitCode::SUCCESS)
}
