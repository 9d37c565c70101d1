//! Command-line front end.
//!
//! Exit codes: 0 success (converging, feasible, bound holds), 1 input
//! error, 2 negative verdict. JSON is the source of truth for reports; the
//! table format is a rendering of the same JSON value.

use std::ffi::OsString;
use std::fs::File;
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand, ValueEnum};
use nalgebra::DVector;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use serde::Serialize;
use serde_json::Value;

use crate::error::{Error, Result};
use crate::gain_margin::{pick_feasible, MarginProblem};
use crate::method_spec::{preset, FunctionClass, Method, MethodSpec, Preset};
use crate::simulation::{constant_history, make_quadratic, run, SpectrumPolicy};
use crate::spectral::{certify_lower_bound, certify_lower_bound_until, worst_case_rho, SweepOptions, SweepSample};

pub const EXIT_OK: i32 = 0;
pub const EXIT_INPUT_ERROR: i32 = 1;
pub const EXIT_NEGATIVE: i32 = 2;

/// Environment variable capping the worker thread count.
pub const THREADS_ENV: &str = "MOMENTUM_MARGIN_THREADS";

#[derive(Debug, Parser)]
#[command(name = "momentum-margin", version, about = "Worst-case convergence rates of first-order methods on quadratics")]
pub struct CommandConfig {
    #[command(subcommand)]
    pub command: Command,

    /// Output format for reports.
    #[arg(long, value_enum, default_value_t = Format::Table, global = true)]
    pub format: Format,

    /// Write the report (or CSV curve/trace) here instead of stdout.
    #[arg(long, global = true)]
    pub output: Option<PathBuf>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Format {
    Json,
    Csv,
    Table,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Worst-case rate of one method over the class.
    Analyze {
        #[command(flatten)]
        method: MethodArgs,
        #[command(flatten)]
        class: ClassArgs,
        #[command(flatten)]
        sweep: SweepArgs,
    },
    /// Worst-case rates of several presets, fastest first.
    Compare {
        #[command(flatten)]
        class: ClassArgs,
        /// Comma-separated preset names (default: all).
        #[arg(long, value_delimiter = ',')]
        presets: Vec<String>,
        #[command(flatten)]
        sweep: SweepArgs,
    },
    /// Spectral radius on the lambda grid, as CSV.
    Sweep {
        #[command(flatten)]
        method: MethodArgs,
        #[command(flatten)]
        class: ClassArgs,
        #[command(flatten)]
        sweep: SweepArgs,
    },
    /// Pick-matrix test for pole placement inside |z| < rho.
    Certify {
        #[command(flatten)]
        class: ClassArgs,
        #[arg(long)]
        rho: f64,
    },
    /// Run the method on a random quadratic and estimate its rate.
    Simulate {
        #[command(flatten)]
        method: MethodArgs,
        #[command(flatten)]
        class: ClassArgs,
        #[arg(long, default_value_t = 10)]
        dim: usize,
        #[arg(long, default_value_t = 500)]
        steps: usize,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long, value_enum, default_value_t = SpectrumArg::Endpoints)]
        spectrum: SpectrumArg,
        /// Initial iterate: a random point or the minimizer itself.
        #[arg(long, value_enum, default_value_t = StartArg::Random)]
        start: StartArg,
    },
    /// Sample random methods and check none beats the optimal rate.
    Lowerbound {
        #[command(flatten)]
        class: ClassArgs,
        /// Methods to draw (the cap when --until-converging is given).
        #[arg(long, default_value_t = 1000)]
        trials: usize,
        /// Keep drawing until this many sampled methods converge.
        #[arg(long)]
        until_converging: Option<usize>,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[command(flatten)]
        sweep: SweepArgs,
    },
}

#[derive(Debug, Args)]
#[group(required = true, multiple = false)]
pub struct MethodArgs {
    /// gradient-descent | heavy-ball | nesterov | triple-momentum
    #[arg(long)]
    pub preset: Option<String>,
    /// JSON file {"k", "l", "alpha", "beta", "gamma"}.
    #[arg(long)]
    pub spec: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct ClassArgs {
    #[arg(long)]
    pub m: f64,
    #[arg(long = "L")]
    pub big_l: f64,
}

#[derive(Debug, Args)]
pub struct SweepArgs {
    #[arg(long, default_value_t = 2001)]
    pub grid: usize,
    #[arg(long, default_value_t = 1e-9)]
    pub tolerance: f64,
}

#[derive(Debug, Clone, Copy, ValueEnum)]
pub enum SpectrumArg {
    Endpoints,
    Uniform,
}

#[derive(Debug, Clone, Copy, ValueEnum)]
pub enum StartArg {
    Random,
    Minimizer,
}

impl From<SpectrumArg> for SpectrumPolicy {
    fn from(s: SpectrumArg) -> Self {
        match s {
            SpectrumArg::Endpoints => SpectrumPolicy::Endpoints,
            SpectrumArg::Uniform => SpectrumPolicy::Uniform,
        }
    }
}

impl ClassArgs {
    fn resolve(&self) -> Result<FunctionClass> {
        FunctionClass::new(self.m, self.big_l)
    }
}

impl SweepArgs {
    fn resolve(&self) -> Result<SweepOptions> {
        if self.grid < 2 {
            return Err(Error::InvalidArgument("--grid needs at least 2 points".into()));
        }
        if !(self.tolerance >= 0.0 && self.tolerance.is_finite()) {
            return Err(Error::InvalidArgument("--tolerance must be finite and non-negative".into()));
        }
        Ok(SweepOptions { grid_points: self.grid, tolerance: self.tolerance })
    }
}

impl MethodArgs {
    /// Preset name or spec-file stem, and the validated method.
    fn resolve(&self, fc: &FunctionClass) -> Result<(String, Method)> {
        match (&self.preset, &self.spec) {
            (Some(name), _) => {
                let p: Preset = name.parse()?;
                Ok((p.name().to_string(), preset(p, fc)))
            }
            (None, Some(path)) => Ok((path.display().to_string(), load_spec(path)?)),
            (None, None) => Err(Error::InvalidArgument("one of --preset or --spec is required".into())),
        }
    }
}

pub fn load_spec(path: &Path) -> Result<Method> {
    let text = std::fs::read_to_string(path)?;
    let spec: MethodSpec = serde_json::from_str(&text)?;
    Method::new(spec)
}

/// Parse `args` (including the program name) and run the command.
pub fn run_cli<I, T>(args: I, stdout: &mut dyn Write, stderr: &mut dyn Write) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let config = match CommandConfig::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            let code = if e.use_stderr() { EXIT_INPUT_ERROR } else { EXIT_OK };
            let sink: &mut dyn Write = if e.use_stderr() { stderr } else { stdout };
            let _ = write!(sink, "{}", e.render());
            return code;
        }
    };
    match execute(&config, stdout) {
        Ok(code) => code,
        Err(e) => {
            let _ = writeln!(stderr, "error: {e}");
            EXIT_INPUT_ERROR
        }
    }
}

pub fn execute(config: &CommandConfig, stdout: &mut dyn Write) -> Result<i32> {
    match &config.command {
        Command::Analyze { method, class, sweep } => {
            let fc = class.resolve()?;
            let (_, method) = method.resolve(&fc)?;
            let opts = sweep.resolve()?;
            let report = worst_case_rho(&method, &fc, &opts);
            let summary = AnalyzeSummary {
                worst_rho: report.worst_rho,
                argmax_lambda: report.argmax_lambda,
                rho_star: report.rho_star,
                gap: report.gap,
                converging: report.converging,
            };
            match config.format {
                Format::Json => emit(config, stdout, |w| write_json(w, &report))?,
                Format::Csv => emit(config, stdout, |w| write_csv_rows(w, &[summary]))?,
                Format::Table => emit(config, stdout, |w| write_table(w, &summary))?,
            }
            Ok(if report.converging { EXIT_OK } else { EXIT_NEGATIVE })
        }
        Command::Compare { class, presets, sweep } => {
            let fc = class.resolve()?;
            let opts = sweep.resolve()?;
            let chosen: Vec<Preset> = if presets.is_empty() {
                Preset::ALL.to_vec()
            } else {
                presets.iter().map(|p| p.trim().parse()).collect::<Result<_>>()?
            };
            let mut rows: Vec<CompareRow> = chosen
                .into_iter()
                .map(|p| {
                    let report = worst_case_rho(&preset(p, &fc), &fc, &opts);
                    CompareRow {
                        method: p.name(),
                        worst_rho: report.worst_rho,
                        rho_star: report.rho_star,
                        gap: report.gap,
                        converging: report.converging,
                    }
                })
                .collect();
            rows.sort_by(|a, b| a.worst_rho.total_cmp(&b.worst_rho));
            match config.format {
                Format::Json => emit(config, stdout, |w| write_json(w, &rows))?,
                Format::Csv => emit(config, stdout, |w| write_csv_rows(w, &rows))?,
                Format::Table => emit(config, stdout, |w| write_table(w, &rows))?,
            }
            Ok(EXIT_OK)
        }
        Command::Sweep { method, class, sweep } => {
            let fc = class.resolve()?;
            let (_, method) = method.resolve(&fc)?;
            let opts = sweep.resolve()?;
            let report = worst_case_rho(&method, &fc, &opts);
            match config.format {
                Format::Json => emit(config, stdout, |w| write_json(w, &report.sweep))?,
                _ => emit(config, stdout, |w| write_csv_rows::<SweepSample>(w, &report.sweep))?,
            }
            Ok(EXIT_OK)
        }
        Command::Certify { class, rho } => {
            let fc = class.resolve()?;
            let report = pick_feasible(&MarginProblem::new(fc, *rho)?);
            match config.format {
                Format::Json => emit(config, stdout, |w| write_json(w, &report))?,
                Format::Csv => emit(config, stdout, |w| {
                    write_csv_rows(
                        w,
                        &[CertifyRow {
                            rho: report.rho,
                            rho_star: report.rho_star,
                            first_minor: report.first_minor,
                            determinant: report.determinant,
                            feasible: report.feasible,
                        }],
                    )
                })?,
                Format::Table => emit(config, stdout, |w| write_table(w, &report))?,
            }
            Ok(if report.feasible { EXIT_OK } else { EXIT_NEGATIVE })
        }
        Command::Simulate { method, class, dim, steps, seed, spectrum, start } => {
            let fc = class.resolve()?;
            let (name, method) = method.resolve(&fc)?;
            let quadratic = make_quadratic(*dim, &fc, *seed, (*spectrum).into())?;
            let x0 = match start {
                StartArg::Minimizer => quadratic.minimizer().clone(),
                StartArg::Random => {
                    let mut rng = ChaCha8Rng::seed_from_u64(*seed);
                    rng.set_stream(1);
                    let offset: DVector<f64> = DVector::from_fn(*dim, |_, _| StandardNormal.sample(&mut rng));
                    quadratic.minimizer() + offset
                }
            };
            let trace = run(&method, &quadratic, constant_history(&method, &x0), *steps)?;
            let summary = SimulateSummary {
                method: name,
                dim: *dim,
                steps: *steps,
                seed: *seed,
                spectrum: (*spectrum).into(),
                empirical_r: trace.empirical_r,
                predicted_r: trace.predicted_r,
                difference: trace.empirical_r - trace.predicted_r,
                truncated_at: trace.truncated_at,
            };
            match (&config.output, config.format) {
                (Some(path), format) => {
                    write_file(path, |w| trace.write_csv(w))?;
                    match format {
                        Format::Json => write_json(stdout, &summary)?,
                        _ => write_table(stdout, &summary)?,
                    }
                }
                (None, Format::Csv) => trace.write_csv(&mut *stdout)?,
                (None, Format::Json) => write_json(stdout, &summary)?,
                (None, Format::Table) => write_table(stdout, &summary)?,
            }
            Ok(if trace.empirical_r < 1.0 { EXIT_OK } else { EXIT_NEGATIVE })
        }
        Command::Lowerbound { class, trials, until_converging, seed, sweep } => {
            let fc = class.resolve()?;
            let opts = sweep.resolve()?;
            if *trials == 0 {
                return Err(Error::InvalidArgument("--trials must be at least 1".into()));
            }
            let report = match until_converging {
                Some(target) => certify_lower_bound_until(*target, *trials, &fc, *seed, &opts),
                None => certify_lower_bound(*trials, &fc, *seed, &opts),
            };
            let summary = LowerBoundSummary {
                trials: report.samples,
                converging: report.converging,
                min_worst_rho: report.min_worst_rho,
                rho_star: report.rho_star,
                margin: report.margin,
                holds: report.holds(),
            };
            match config.format {
                Format::Json => emit(config, stdout, |w| write_json(w, &report))?,
                Format::Csv => emit(config, stdout, |w| write_csv_rows(w, &[summary.clone()]))?,
                Format::Table => emit(config, stdout, |w| write_table(w, &summary))?,
            }
            Ok(if report.holds() { EXIT_OK } else { EXIT_NEGATIVE })
        }
    }
}

#[derive(Debug, Clone, Serialize)]
struct AnalyzeSummary {
    worst_rho: f64,
    argmax_lambda: f64,
    rho_star: f64,
    gap: f64,
    converging: bool,
}

#[derive(Debug, Clone, Serialize)]
struct CompareRow {
    method: &'static str,
    worst_rho: f64,
    rho_star: f64,
    gap: f64,
    converging: bool,
}

#[derive(Debug, Clone, Serialize)]
struct CertifyRow {
    rho: f64,
    rho_star: f64,
    first_minor: f64,
    determinant: f64,
    feasible: bool,
}

#[derive(Debug, Clone, Serialize)]
struct SimulateSummary {
    method: String,
    dim: usize,
    steps: usize,
    seed: u64,
    spectrum: SpectrumPolicy,
    empirical_r: f64,
    predicted_r: f64,
    difference: f64,
    truncated_at: usize,
}

#[derive(Debug, Clone, Serialize)]
struct LowerBoundSummary {
    trials: usize,
    converging: usize,
    min_worst_rho: Option<f64>,
    rho_star: f64,
    margin: Option<f64>,
    holds: bool,
}

/// Send output to `--output` when given, stdout otherwise.
fn emit<F>(config: &CommandConfig, stdout: &mut dyn Write, body: F) -> Result<()>
where
    F: FnOnce(&mut dyn Write) -> Result<()>,
{
    match &config.output {
        Some(path) => write_file(path, body),
        None => body(stdout),
    }
}

fn write_file<F>(path: &Path, body: F) -> Result<()>
where
    F: FnOnce(&mut dyn Write) -> Result<()>,
{
    let mut file = BufWriter::new(File::create(path)?);
    body(&mut file)?;
    file.flush()?;
    Ok(())
}

fn write_json<T: Serialize + ?Sized>(w: &mut dyn Write, value: &T) -> Result<()> {
    serde_json::to_writer_pretty(&mut *w, value)?;
    writeln!(w)?;
    Ok(())
}

fn write_csv_rows<T: Serialize>(w: &mut dyn Write, rows: &[T]) -> Result<()> {
    let mut writer = csv::Writer::from_writer(w);
    for row in rows {
        writer.serialize(row)?;
    }
    writer.flush()?;
    Ok(())
}

/// Human-readable rendering of the JSON form of `value`: objects become
/// `key  value` lines, arrays of objects become aligned columns.
fn write_table<T: Serialize + ?Sized>(w: &mut dyn Write, value: &T) -> Result<()> {
    let json = serde_json::to_value(value)?;
    match &json {
        Value::Array(rows) => {
            let headers: Vec<String> = match rows.first() {
                Some(Value::Object(first)) => first.keys().cloned().collect(),
                _ => Vec::new(),
            };
            let cells: Vec<Vec<String>> = rows
                .iter()
                .map(|row| headers.iter().map(|h| scalar(row.get(h).unwrap_or(&Value::Null))).collect())
                .collect();
            let widths: Vec<usize> = headers
                .iter()
                .enumerate()
                .map(|(i, h)| cells.iter().map(|r| r[i].len()).chain([h.len()]).max().unwrap_or(0))
                .collect();
            let line = |w: &mut dyn Write, items: &[String]| -> std::io::Result<()> {
                let padded: Vec<String> = items.iter().zip(&widths).map(|(s, &n)| format!("{s:<n$}")).collect();
                writeln!(w, "{}", padded.join("  ").trim_end())
            };
            line(w, &headers)?;
            for row in &cells {
                line(w, row)?;
            }
        }
        Value::Object(map) => {
            let width = map.keys().map(String::len).max().unwrap_or(0);
            for (key, v) in map {
                writeln!(w, "{key:<width$}  {}", scalar(v))?;
            }
        }
        other => writeln!(w, "{}", scalar(other))?,
    }
    Ok(())
}

fn scalar(v: &Value) -> String {
    match v {
        Value::Null => "-".to_string(),
        Value::String(s) => s.clone(),
        Value::Array(items) if items.iter().all(|i| !i.is_object() && !i.is_array()) => {
            format!("[{}]", items.iter().map(scalar).collect::<Vec<_>>().join(", "))
        }
        Value::Array(items) => format!("[{}]", items.iter().map(scalar).collect::<Vec<_>>().join("; ")),
        other => other.to_string(),
    }
}
