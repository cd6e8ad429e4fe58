//! `hyperstab`: positive-realness classification, closed-loop simulation,
//! energy audits, Parseval checks and corpus regression.
//!
//! Exit codes: 0 success, 1 runtime failure, 2 parse or schema error,
//! 3 improper transfer function, 4 diverged run, 5 Parseval tolerance
//! breach, 6 corpus mismatch.

use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::{anyhow, Context};
use clap::{Parser, Subcommand};
use hyperstab::realness::realness_report;
use hyperstab::{
    classify_taxonomy, corpus_check, frequency_energy, inner_product, load_corpus, popov_audit,
    run_closed_loop, FrequencyGrid, HarnessError, PolyError, RationalFunction, Scenario, Signal,
    TaxonomyVerdict, Trace, Verdict,
};
use serde::Serialize;

const EXIT_RUNTIME: u8 = 1;
const EXIT_PARSE: u8 = 2;
const EXIT_IMPROPER: u8 = 3;
const EXIT_DIVERGED: u8 = 4;
const EXIT_PARSEVAL: u8 = 5;
const EXIT_CORPUS: u8 = 6;

/// Largest relative time/frequency energy discrepancy accepted by `parseval`.
const PARSEVAL_TOL: f64 = 1e-6;

const GRID_POINTS_ENV: &str = "HYPERSTAB_GRID_POINTS";

#[derive(Debug, Parser)]
#[command(
    name = "hyperstab",
    version,
    about = "Positive-realness and hyperstability toolkit"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Grade a transfer function as NotPR, PR, WSPR or SSPR.
    Classify {
        /// "num;den" with comma-separated coefficients, highest power first.
        #[arg(long)]
        tf: String,
        #[arg(long)]
        grid_min: Option<f64>,
        #[arg(long)]
        grid_max: Option<f64>,
        #[arg(long)]
        points: Option<usize>,
        /// Write the report here instead of stdout.
        #[arg(long)]
        json: Option<PathBuf>,
    },
    /// Run a closed-loop scenario and write traces.csv and report.json.
    Simulate {
        #[arg(long)]
        scenario: PathBuf,
        #[arg(long)]
        out_dir: PathBuf,
    },
    /// Audit the energy balance of a trace CSV against the passivity taxonomy.
    Audit {
        #[arg(long)]
        traces: PathBuf,
        /// Use the S (storage) and D (dissipation) columns.
        #[arg(long)]
        with_storage: bool,
    },
    /// Compare time-domain and frequency-domain energy of a trace CSV.
    Parseval {
        #[arg(long)]
        traces: PathBuf,
    },
    /// Check a corpus file of hand-graded transfer functions.
    Corpus {
        #[arg(long)]
        file: PathBuf,
        /// Print the full JSON report instead of a table.
        #[arg(long)]
        json: bool,
    },
}

/// An error paired with the exit code it maps to.
struct Failure {
    code: u8,
    error: anyhow::Error,
}

impl Failure {
    fn new(code: u8, error: impl Into<anyhow::Error>) -> Self {
        Self {
            code,
            error: error.into(),
        }
    }
}

trait WithCode<T> {
    fn code(self, code: u8) -> Result<T, Failure>;
}

impl<T, E: Into<anyhow::Error>> WithCode<T> for Result<T, E> {
    fn code(self, code: u8) -> Result<T, Failure> {
        self.map_err(|e| Failure::new(code, e))
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let outcome = match cli.command {
        Command::Classify {
            tf,
            grid_min,
            grid_max,
            points,
            json,
        } => cmd_classify(&tf, grid_min, grid_max, points, json.as_deref()),
        Command::Simulate { scenario, out_dir } => cmd_simulate(&scenario, &out_dir),
        Command::Audit {
            traces,
            with_storage,
        } => cmd_audit(&traces, with_storage),
        Command::Parseval { traces } => cmd_parseval(&traces),
        Command::Corpus { file, json } => cmd_corpus(&file, json),
    };
    match outcome {
        Ok(code) => ExitCode::from(code),
        Err(f) => {
            eprintln!("error: {:#}", f.error);
            ExitCode::from(f.code)
        }
    }
}

fn print_json<T: Serialize>(value: &T) -> Result<(), Failure> {
    let text = serde_json::to_string_pretty(value).code(EXIT_RUNTIME)?;
    let mut out = std::io::stdout().lock();
    writeln!(out, "{text}").code(EXIT_RUNTIME)
}

/// Parses "num;den" with coefficients listed from the highest power down.
fn parse_tf(text: &str) -> Result<(Vec<f64>, Vec<f64>), anyhow::Error> {
    let (num, den) = text
        .split_once(';')
        .ok_or_else(|| anyhow!("expected \"num;den\", got {text:?}"))?;
    let coeffs = |part: &str, what: &str| -> anyhow::Result<Vec<f64>> {
        let mut c = part
            .split(',')
            .map(|s| {
                let s = s.trim();
                s.parse::<f64>()
                    .with_context(|| format!("bad {what} coefficient {s:?}"))
            })
            .collect::<anyhow::Result<Vec<f64>>>()?;
        c.reverse();
        Ok(c)
    };
    Ok((coeffs(num, "numerator")?, coeffs(den, "denominator")?))
}

fn grid_from(
    min: Option<f64>,
    max: Option<f64>,
    points: Option<usize>,
) -> Result<FrequencyGrid, Failure> {
    let default = FrequencyGrid::default();
    let points = match points {
        Some(p) => p,
        None => match std::env::var(GRID_POINTS_ENV) {
            Ok(v) => v
                .trim()
                .parse()
                .with_context(|| format!("{GRID_POINTS_ENV}={v:?} is not a point count"))
                .code(EXIT_PARSE)?,
            Err(_) => default.points(),
        },
    };
    FrequencyGrid::new(
        min.unwrap_or(default.omega_min()),
        max.unwrap_or(default.omega_max()),
        points,
    )
    .code(EXIT_PARSE)
}

fn cmd_classify(
    tf: &str,
    grid_min: Option<f64>,
    grid_max: Option<f64>,
    points: Option<usize>,
    json: Option<&Path>,
) -> Result<u8, Failure> {
    let (num, den) = parse_tf(tf).code(EXIT_PARSE)?;
    let g = RationalFunction::new(&num, &den).map_err(|e| {
        let code = match e {
            PolyError::ImproperTransferFunction { .. } => EXIT_IMPROPER,
            _ => EXIT_PARSE,
        };
        Failure::new(code, e)
    })?;
    let grid = grid_from(grid_min, grid_max, points)?;
    let report = realness_report(&g, &grid);
    match json {
        Some(path) => {
            let text = serde_json::to_string_pretty(&report).code(EXIT_RUNTIME)?;
            fs::write(path, text + "\n")
                .with_context(|| format!("writing {}", path.display()))
                .code(EXIT_RUNTIME)?;
        }
        None => print_json(&report)?,
    }
    Ok(0)
}

fn cmd_simulate(scenario: &Path, out_dir: &Path) -> Result<u8, Failure> {
    let text = fs::read_to_string(scenario)
        .with_context(|| format!("reading scenario {}", scenario.display()))
        .code(EXIT_PARSE)?;
    let sc: Scenario = serde_json::from_str(&text)
        .with_context(|| format!("scenario {}", scenario.display()))
        .code(EXIT_PARSE)?;
    let run = run_closed_loop(&sc).map_err(|e| {
        let code = match e {
            HarnessError::InvalidScenario(_) | HarnessError::Device(_) => EXIT_PARSE,
            _ => EXIT_RUNTIME,
        };
        Failure::new(code, e)
    })?;
    fs::create_dir_all(out_dir)
        .with_context(|| format!("creating {}", out_dir.display()))
        .code(EXIT_RUNTIME)?;
    run.trace()
        .code(EXIT_RUNTIME)?
        .write_path(&out_dir.join("traces.csv"))
        .code(EXIT_RUNTIME)?;
    let report = run.report();
    let text = serde_json::to_string_pretty(&report).code(EXIT_RUNTIME)?;
    fs::write(out_dir.join("report.json"), text + "\n")
        .context("writing report.json")
        .code(EXIT_RUNTIME)?;
    print_json(&report)?;
    Ok(if report.verdict == Verdict::Diverged {
        EXIT_DIVERGED
    } else {
        0
    })
}

fn read_trace(path: &Path) -> Result<Trace, Failure> {
    Trace::read_path(path)
        .with_context(|| format!("reading traces {}", path.display()))
        .code(EXIT_PARSE)
}

fn column(trace: &Trace, name: &str) -> Result<Option<Signal>, Failure> {
    trace.signal(name).transpose().code(EXIT_PARSE)
}

fn required(trace: &Trace, name: &str) -> Result<Signal, Failure> {
    column(trace, name)?
        .ok_or_else(|| Failure::new(EXIT_PARSE, anyhow!("trace has no {name} column")))
}

#[derive(Debug, Serialize)]
struct AuditReport {
    #[serde(flatten)]
    taxonomy: TaxonomyVerdict,
    /// `gamma0^2` of the device from the `v` and `y` columns.
    device_gamma0_sq: Option<f64>,
    /// `gamma0^2` of the loop seen from the zero-state plant (`-u`, `y_zs`).
    loop_gamma0_sq: Option<f64>,
}

fn cmd_audit(traces: &Path, with_storage: bool) -> Result<u8, Failure> {
    let trace = read_trace(traces)?;
    let u = required(&trace, "u")?;
    let y = required(&trace, "y")?;
    let (storage, dissipation) = if with_storage {
        let s = column(&trace, "S")?;
        let d = column(&trace, "D")?;
        if s.is_none() && d.is_none() {
            return Err(Failure::new(
                EXIT_PARSE,
                anyhow!("--with-storage needs an S or D column"),
            ));
        }
        (s, d)
    } else {
        (None, None)
    };
    let taxonomy =
        classify_taxonomy(&u, &y, storage.as_ref(), dissipation.as_ref()).code(EXIT_PARSE)?;
    let device_gamma0_sq = match column(&trace, "v")? {
        Some(v) => Some(popov_audit(&v, &y).code(EXIT_PARSE)?.gamma0_sq),
        None => None,
    };
    let loop_gamma0_sq = match column(&trace, "y_zs")? {
        Some(y_zs) => Some(
            popov_audit(&u.map(|x| -x), &y_zs)
                .code(EXIT_PARSE)?
                .gamma0_sq,
        ),
        None => None,
    };
    print_json(&AuditReport {
        taxonomy,
        device_gamma0_sq,
        loop_gamma0_sq,
    })?;
    Ok(0)
}

#[derive(Debug, Serialize)]
struct ParsevalReport {
    time_energy: f64,
    freq_energy: f64,
    rel_error: f64,
}

fn cmd_parseval(traces: &Path) -> Result<u8, Failure> {
    let trace = read_trace(traces)?;
    let u = required(&trace, "u")?;
    let y = required(&trace, "y")?;
    let time_energy = inner_product(&u, &y, u.duration()).code(EXIT_PARSE)?;
    let freq_energy = frequency_energy(&u, &y).code(EXIT_PARSE)?;
    let scale = time_energy.abs().max(freq_energy.abs());
    let rel_error = if scale > 0.0 {
        (time_energy - freq_energy).abs() / scale
    } else {
        0.0
    };
    print_json(&ParsevalReport {
        time_energy,
        freq_energy,
        rel_error,
    })?;
    if rel_error <= PARSEVAL_TOL {
        Ok(0)
    } else {
        eprintln!(
            "time and frequency energies differ by {rel_error:e} (tolerance {PARSEVAL_TOL:e})"
        );
        Ok(EXIT_PARSEVAL)
    }
}

fn cmd_corpus(file: &Path, json: bool) -> Result<u8, Failure> {
    let entries = load_corpus(file)
        .with_context(|| format!("corpus {}", file.display()))
        .code(EXIT_PARSE)?;
    let grid = grid_from(None, None, None)?;
    let report = corpus_check(&entries, &grid);
    if json {
        print_json(&report)?;
    } else {
        let mut out = std::io::stdout().lock();
        let mut line = |s: String| writeln!(out, "{s}").code(EXIT_RUNTIME);
        line(format!(
            "{:<20} {:<8} {:<8} {:>12} {:>12} {:>12}  status",
            "id", "expected", "grade", "d", "d0", "d1"
        ))?;
        for r in &report.rows {
            line(format!(
                "{:<20} {:<8} {:<8} {:>12.6e} {:>12.6e} {:>12.6e}  {}",
                r.id,
                r.expected_grade.as_str(),
                r.grade.as_str(),
                r.d,
                r.d0,
                r.d1,
                if r.ok { "ok" } else { "MISMATCH" }
            ))?;
        }
        for m in &report.mismatches {
            line(format!(
                "mismatch {}: {} expected {}, got {}",
                m.id, m.field, m.expected, m.got
            ))?;
        }
        line(format!(
            "{} entries, {} mismatches",
            report.rows.len(),
            report.mismatches.len()
        ))?;
    }
    Ok(if report.is_clean() { 0 } else { EXIT_CORPUS })
}
