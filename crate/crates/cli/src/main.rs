use std::collections::BTreeMap;
use std::fs::File;
use std::io::{self, BufWriter, Write};
use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};

use detcount::casework::casework_report;
use detcount::error::Error;
use detcount::format::real;
use detcount::lemmas::log_grid;
use detcount::sweep::{
    casework_fixtures, fit_sweep, fit_sweep_log, hyperbola_diagnostics, read_sweep_csv, run_sweep,
    shifted_rows, tau_rows, write_casework_csv, write_fixtures_csv, write_hyperbola_csv,
    write_json, write_lemma_csv, write_shifted_csv, write_sweep_csv, write_tau_csv, SweepConfig,
    DEFAULT_EPSILON,
};
use detcount::Budget;

/// Exact counts of 2×2 integer matrices of bounded height and fixed
/// determinant, with asymptotic diagnostics.
///
/// Data goes to `--output` (or stdout); summary lines go to stderr.
#[derive(Parser)]
#[command(name = "detcount", version)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Clone, Copy, ValueEnum)]
enum Format {
    Csv,
    Json,
}

#[derive(Args)]
struct Common {
    /// Exponent ε in the nominal error bounds.
    #[arg(long, default_value_t = DEFAULT_EPSILON)]
    epsilon: f64,
    /// Worker threads.
    #[arg(long, default_value_t = 1)]
    jobs: usize,
    /// Write data here instead of stdout.
    #[arg(long)]
    output: Option<PathBuf>,
    #[arg(long, value_enum, default_value_t = Format::Csv)]
    format: Format,
}

#[derive(Subcommand)]
enum Command {
    /// Exact #D₂(H, Δ) against its main term.
    Count {
        #[arg(long = "H")]
        h: u64,
        #[arg(long, allow_negative_numbers = true)]
        delta: i64,
        #[command(flatten)]
        common: Common,
    },
    /// Counts over a grid of heights and determinants.
    Sweep {
        #[arg(long = "H", value_delimiter = ',')]
        h: Vec<u64>,
        #[arg(long, value_delimiter = ',', allow_hyphen_values = true)]
        delta: Vec<i64>,
        /// JSON file with keys H, delta, epsilon, jobs, timing; overrides the list flags.
        #[arg(long)]
        config: Option<PathBuf>,
        /// Fit the error exponent per Δ.
        #[arg(long)]
        fit: bool,
        /// Omit the wall_time_ms column.
        #[arg(long)]
        no_timing: bool,
        #[command(flatten)]
        common: Common,
    },
    /// Moments Σ τ_N(n)^k, or shifted sums Σ τ_N(n)τ_N(n+Δ) when --delta is given.
    Tau {
        #[arg(long = "N", value_delimiter = ',', required = true)]
        n: Vec<u64>,
        #[arg(long, default_value_t = 2)]
        k: u32,
        #[arg(long, value_delimiter = ',', allow_hyphen_values = true)]
        delta: Vec<i64>,
        #[command(flatten)]
        common: Common,
    },
    /// Modular hyperbola counts against their main terms on seeded random queries.
    Hyperbola {
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long, default_value_t = 500)]
        count: usize,
        #[command(flatten)]
        common: Common,
    },
    /// Summation identities on the logarithmic grid.
    Lemmas {
        /// Ratio above which an envelope is reported as exceeded.
        #[arg(long, default_value_t = 25.0)]
        threshold: f64,
        #[command(flatten)]
        common: Common,
    },
    /// Region sums of the per-(a, c) counts, direct and via hyperbola counts.
    Casework {
        #[arg(long = "H", value_delimiter = ',', required = true)]
        h: Vec<u64>,
        #[arg(long, value_delimiter = ',', required = true)]
        delta: Vec<i64>,
        #[command(flatten)]
        common: Common,
    },
    /// Error-exponent fits of a sweep CSV.
    Fit {
        #[arg(long)]
        input: PathBuf,
    },
    /// Golden casework region sums (H, delta, region, count).
    Fixtures {
        #[arg(long = "H", value_delimiter = ',', default_value = "20,20,10,40")]
        h: Vec<u64>,
        #[arg(long, value_delimiter = ',', default_value = "60,7,3,25")]
        delta: Vec<i64>,
        #[arg(long)]
        output: Option<PathBuf>,
    },
}

fn sink(path: &Option<PathBuf>) -> Result<Box<dyn Write>, Error> {
    Ok(match path {
        Some(p) => Box::new(BufWriter::new(File::create(p)?)),
        None => Box::new(BufWriter::new(io::stdout().lock())),
    })
}

fn echo(pairs: &[(&'static str, String)]) -> BTreeMap<&'static str, String> {
    pairs.iter().cloned().collect()
}

fn run(cli: Cli) -> Result<(), Error> {
    let budget = Budget::default();
    match cli.command {
        Command::Count { h, delta, common } => {
            let cfg = SweepConfig {
                heights: vec![h],
                deltas: vec![delta],
                epsilon: common.epsilon,
                jobs: common.jobs,
                timing: false,
            };
            let rows = run_sweep(&cfg, &budget)?;
            let r = &rows[0];
            let mut w = sink(&common.output)?;
            match common.format {
                Format::Json => write_json(&cfg, &rows, &mut w)?,
                Format::Csv => writeln!(
                    w,
                    "H={} delta={} exact={} main={} error={} normalized_error={} bound={}",
                    r.h,
                    r.delta,
                    r.exact,
                    real(r.main),
                    real(r.error),
                    real(r.normalized_error),
                    real(r.bound)
                )?,
            }
            w.flush()?;
        }
        Command::Sweep {
            h,
            delta,
            config,
            fit,
            no_timing,
            common,
        } => {
            let cfg = match config {
                Some(path) => {
                    let mut cfg: SweepConfig = serde_json::from_reader(File::open(path)?)?;
                    if no_timing {
                        cfg.timing = false;
                    }
                    cfg
                }
                None => SweepConfig {
                    heights: h,
                    deltas: delta,
                    epsilon: common.epsilon,
                    jobs: common.jobs,
                    timing: !no_timing,
                },
            };
            let rows = run_sweep(&cfg, &budget)?;
            let mut w = sink(&common.output)?;
            match common.format {
                Format::Csv => write_sweep_csv(&rows, &mut w)?,
                Format::Json => write_json(&cfg, &rows, &mut w)?,
            }
            w.flush()?;
            if fit {
                print_fits(&rows);
            }
        }
        Command::Tau {
            n,
            k,
            delta,
            common,
        } => {
            let mut w = sink(&common.output)?;
            if delta.is_empty() {
                let rows = tau_rows(&n, k, common.jobs, &budget)?;
                match common.format {
                    Format::Csv => write_tau_csv(&rows, &mut w)?,
                    Format::Json => write_json(
                        &echo(&[("N", format!("{n:?}")), ("k", k.to_string())]),
                        &rows,
                        &mut w,
                    )?,
                }
                if k == 2 && rows.len() >= 2 {
                    let pts: Vec<(u64, f64)> =
                        rows.iter().map(|r| (r.n, r.moment as f64)).collect();
                    let f = detcount::asymptotics::fit_linear_in_log(&pts)?;
                    eprintln!(
                        "fit k=2 a={} b={} (12/pi^2={})",
                        real(f.a),
                        real(f.b),
                        real(12.0 / std::f64::consts::PI.powi(2))
                    );
                }
            } else {
                let (rows, verdicts) = shifted_rows(&n, &delta, common.jobs, &budget)?;
                match common.format {
                    Format::Csv => write_shifted_csv(&rows, &mut w)?,
                    Format::Json => write_json(
                        &echo(&[("N", format!("{n:?}")), ("delta", format!("{delta:?}"))]),
                        &rows,
                        &mut w,
                    )?,
                }
                for v in verdicts {
                    eprintln!(
                        "shifted delta={} slope={} stderr={} log_slope={} selected={:?} log_exponent={} nolog_exponent={}",
                        v.delta,
                        real(v.slope),
                        real(v.slope_stderr),
                        real(v.log_slope),
                        v.selected,
                        real(v.log_exponent),
                        real(v.nolog_exponent)
                    );
                }
            }
            w.flush()?;
        }
        Command::Hyperbola {
            seed,
            count,
            common,
        } => {
            let rows = hyperbola_diagnostics(seed, count, common.epsilon, common.jobs)?;
            let mut w = sink(&common.output)?;
            match common.format {
                Format::Csv => write_hyperbola_csv(&rows, &mut w)?,
                Format::Json => write_json(
                    &echo(&[
                        ("seed", seed.to_string()),
                        ("count", count.to_string()),
                        ("epsilon", real(common.epsilon)),
                    ]),
                    &rows,
                    &mut w,
                )?,
            }
            w.flush()?;
            for variant in ["box", "curve"] {
                let max = rows
                    .iter()
                    .filter(|r| r.variant == variant)
                    .map(|r| r.ratio)
                    .fold(0.0, f64::max);
                eprintln!("hyperbola {variant} max_ratio={}", real(max));
            }
        }
        Command::Lemmas { threshold, common } => {
            let rows = detcount::sweep::thread_pool(common.jobs)?.install(|| log_grid(0.05))?;
            let mut w = sink(&common.output)?;
            match common.format {
                Format::Csv => write_lemma_csv(&rows, &mut w)?,
                Format::Json => {
                    write_json(&echo(&[("threshold", real(threshold))]), &rows, &mut w)?
                }
            }
            w.flush()?;
            let worst = rows.iter().map(|r| r.report.ratio).fold(0.0, f64::max);
            eprintln!("lemmas rows={} max_ratio={}", rows.len(), real(worst));
            for r in rows.iter().filter(|r| r.report.ratio > threshold) {
                eprintln!(
                    "exceeded: {} variant={} X={} Y={} r={} ratio={}",
                    r.lemma,
                    r.variant,
                    real(r.x),
                    real(r.y),
                    r.r,
                    real(r.report.ratio)
                );
            }
        }
        Command::Casework { h, delta, common } => {
            let reports = detcount::sweep::thread_pool(common.jobs)?.install(|| {
                let mut out = Vec::new();
                for &hh in &h {
                    for &d in &delta {
                        out.push(casework_report(hh, d, &budget)?);
                    }
                }
                Ok::<_, Error>(out)
            })?;
            let mut w = sink(&common.output)?;
            match common.format {
                Format::Csv => write_casework_csv(&reports, &mut w)?,
                Format::Json => write_json(
                    &echo(&[("H", format!("{h:?}")), ("delta", format!("{delta:?}"))]),
                    &reports,
                    &mut w,
                )?,
            }
            w.flush()?;
            if let Some(bad) = reports.iter().find(|r| !r.consistent()) {
                return Err(Error::Invariant(format!(
                    "casework identities fail at H = {}, Δ = {}",
                    bad.height, bad.delta
                )));
            }
        }
        Command::Fit { input } => {
            let rows = read_sweep_csv(File::open(input)?)?;
            print_fits(&rows);
        }
        Command::Fixtures { h, delta, output } => {
            if h.len() != delta.len() {
                return Err(Error::InvalidArgument(
                    "--H and --delta must have equal length".into(),
                ));
            }
            let points: Vec<(u64, i64)> = h.into_iter().zip(delta).collect();
            let rows = casework_fixtures(&points)?;
            let mut w = sink(&output)?;
            write_fixtures_csv(&rows, &mut w)?;
            w.flush()?;
        }
    }
    Ok(())
}

fn print_fits(rows: &[detcount::sweep::SweepRow]) {
    match fit_sweep(rows) {
        Ok(fits) => {
            for (delta, f) in fits {
                eprintln!(
                    "fit delta={delta} exponent={} log_constant={} r_squared={} points={}",
                    real(f.exponent),
                    real(f.log_constant),
                    real(f.r_squared),
                    f.points.len()
                );
            }
        }
        Err(e) => eprintln!("fit unavailable: {e}"),
    }
    if rows.iter().any(|r| r.delta == 0) {
        match fit_sweep_log(rows, 0) {
            Ok(f) => eprintln!(
                "fit delta=0 a={} b={} (96/pi^2={})",
                real(f.a),
                real(f.b),
                real(96.0 / std::f64::consts::PI.powi(2))
            ),
            Err(e) => eprintln!("delta=0 log fit unavailable: {e}"),
        }
    }
}

fn exit_code(e: &Error) -> u8 {
    match e {
        Error::Budget { .. } => 2,
        Error::Invariant(_) | Error::Overflow(_) => 3,
        _ => 1,
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() {
                ExitCode::from(1)
            } else {
                ExitCode::SUCCESS
            };
        }
    };
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(exit_code(&e))
        }
    }
}
