//! Command-line driver.
//!
//! Every parameter can be given as a flag or in a TOML file passed with
//! `--config`; flags take precedence. Top-level keys of the file hold the
//! global options, and one table per subcommand (`[spectrum]`, `[zeros]`,
//! `[invert]`, `[synthesize]`, `[polarizability]`, plus `[solver]`) holds the
//! rest, with the flag names spelled in snake case.
//!
//! Exit status: 0 on success, 2 for input or validation errors, 3 when a
//! solver fails or a problem is rank deficient.

use std::ffi::OsString;
use std::io::Write;
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand, ValueEnum};
use rayzero_core::amplitude::partial_static_polarizability;
use rayzero_core::inversion::{solve, tail_sensitivity, Target};
use rayzero_core::zeros::approx_zero_iterated;
use rayzero_core::{
    dynamic_polarizability, find_zeros, find_zeros_resonance_only, truncation_bound,
    zero_below_multiplet, AtomicSystem, GuardPolicy, LevelKey, SolverConfig, ZeroMethod,
    ZeroRecord,
};
use serde::Deserialize;
use thiserror::Error;

use crate::bundled::{open_dataset, provenance};
use crate::csv_io::{num, spectrum_csv, zeros_csv, ZeroRow, FIT_HEADER};
use crate::dataset::DatasetError;
use crate::problem::{load_problem, ProblemError, ReferencePolarizability, TailSpec};
use crate::report;
use crate::scan::{linear_grid, scan_parallel};
use crate::synth::{synthesize, Synthesis};

pub const EXIT_OK: i32 = 0;
pub const EXIT_INPUT: i32 = 2;
pub const EXIT_SOLVER: i32 = 3;

#[derive(Debug, Error)]
pub enum CliError {
    #[error("{0}")]
    Input(String),
    #[error("{0}")]
    Solver(String),
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Input(_) => EXIT_INPUT,
            CliError::Solver(_) => EXIT_SOLVER,
        }
    }
}

impl From<rayzero_core::Error> for CliError {
    fn from(e: rayzero_core::Error) -> Self {
        if e.is_solver_failure() {
            CliError::Solver(e.to_string())
        } else {
            CliError::Input(e.to_string())
        }
    }
}

impl From<DatasetError> for CliError {
    fn from(e: DatasetError) -> Self {
        CliError::Input(e.to_string())
    }
}

impl From<ProblemError> for CliError {
    fn from(e: ProblemError) -> Self {
        match e {
            ProblemError::Core(core) => core.into(),
            other => CliError::Input(other.to_string()),
        }
    }
}

impl From<std::io::Error> for CliError {
    fn from(e: std::io::Error) -> Self {
        CliError::Input(e.to_string())
    }
}

type CliResult<T> = Result<T, CliError>;

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Format {
    Csv,
    Human,
}

#[derive(Debug, Parser)]
#[command(
    name = "rayzero",
    about = "Zeros of polarized Rayleigh scattering amplitudes and matrix-element extraction",
    disable_version_flag = true
)]
pub struct Cli {
    /// Print the version and the SHA-256 of each bundled dataset.
    #[arg(short = 'V', long)]
    pub version: bool,
    /// TOML file with default parameters.
    #[arg(long, global = true)]
    pub config: Option<PathBuf>,
    /// Worker threads for grid scans and Monte-Carlo work.
    #[arg(long, global = true)]
    pub threads: Option<usize>,
    /// Minimum detuning from any pole, cm-1.
    #[arg(long, global = true)]
    pub guard_band: Option<f64>,
    /// Output format; csv is the default.
    #[arg(long, global = true, value_enum)]
    pub format: Option<Format>,
    /// Write the table here instead of stdout.
    #[arg(short, long, global = true)]
    pub output: Option<PathBuf>,
    /// Root bracket width at which bisection stops, cm-1.
    #[arg(long, global = true)]
    pub abs_tol: Option<f64>,
    /// Iteration cap for root polishing and fits.
    #[arg(long, global = true)]
    pub max_iter: Option<usize>,
    /// Pre-scan samples per inter-pole gap.
    #[arg(long, global = true)]
    pub scan_points: Option<usize>,
    #[command(subcommand)]
    pub command: Option<Command>,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Amplitudes, cross sections and depolarization on a frequency grid.
    Spectrum(SpectrumArgs),
    /// Zero locations, per multiplet or over a frequency range.
    Zeros(ZerosArgs),
    /// Fit unknown strengths to measured zeros.
    Invert(InvertArgs),
    /// Generate a problem file from a dataset with seeded noise.
    Synthesize(SynthesizeArgs),
    /// Static and dynamic polarizability of the ground level.
    Polarizability(PolarizabilityArgs),
}

/// Fields shared by the subcommands that load a dataset directly.
#[derive(Debug, Clone, Default, Args, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct DatasetArgs {
    /// Level table path, or @li / @cs for a bundled one.
    #[arg(long)]
    pub dataset: Option<String>,
    /// Reference static polarizability (a.u.) used to bound the tail.
    #[arg(long)]
    pub alpha_ref: Option<f64>,
    /// One-sigma uncertainty of --alpha-ref.
    #[arg(long)]
    pub alpha_unc: Option<f64>,
}

impl DatasetArgs {
    fn merge(self, file: DatasetArgs) -> DatasetArgs {
        DatasetArgs {
            dataset: self.dataset.or(file.dataset),
            alpha_ref: self.alpha_ref.or(file.alpha_ref),
            alpha_unc: self.alpha_unc.or(file.alpha_unc),
        }
    }

    fn tail_spec(&self) -> CliResult<Option<TailSpec>> {
        match (self.alpha_ref, self.alpha_unc) {
            (None, None) => Ok(None),
            (Some(alpha_ref), unc) => Ok(Some(TailSpec::Reference(ReferencePolarizability {
                alpha_ref,
                alpha_unc: unc.unwrap_or(0.0),
            }))),
            (None, Some(_)) => Err(CliError::Input("--alpha-unc needs --alpha-ref".into())),
        }
    }

    fn dataset_name(&self) -> CliResult<&str> {
        self.dataset
            .as_deref()
            .ok_or_else(|| CliError::Input("no dataset given (--dataset)".into()))
    }

    fn load(&self, base: Option<&Path>) -> CliResult<AtomicSystem> {
        let system = open_dataset(self.dataset_name()?, base, None)?;
        Ok(match self.tail_spec()? {
            Some(spec) => {
                let tail = spec.resolve(&system)?;
                system.with_tail(Some(tail))
            }
            None => system,
        })
    }
}

#[derive(Debug, Clone, Default, Args, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct SpectrumArgs {
    #[command(flatten)]
    #[serde(flatten)]
    pub data: DatasetArgs,
    /// Grid start, cm-1 (relative to --rel-to when given).
    #[arg(long, allow_negative_numbers = true)]
    pub from: Option<f64>,
    /// Range end, cm-1.
    #[arg(long, allow_negative_numbers = true)]
    pub to: Option<f64>,
    /// Grid points, at least 2.
    #[arg(long)]
    pub points: Option<usize>,
    /// Quote frequencies relative to a level, e.g. `n=7,j=3/2` or `7p3/2`.
    #[arg(long)]
    pub rel_to: Option<String>,
}

#[derive(Debug, Clone, Default, Args, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct ZerosArgs {
    #[command(flatten)]
    #[serde(flatten)]
    pub data: DatasetArgs,
    /// Tabulate the zero just below each listed multiplet.
    #[arg(long, value_delimiter = ',')]
    pub n: Option<Vec<u32>>,
    /// Search range start, cm-1 (relative to --rel-to when given).
    #[arg(long, allow_negative_numbers = true)]
    pub from: Option<f64>,
    /// Range end, cm-1.
    #[arg(long, allow_negative_numbers = true)]
    pub to: Option<f64>,
    /// Level the range is measured from.
    #[arg(long)]
    pub rel_to: Option<String>,
    /// Methods: numerical, resonance_only, approx_analytic.
    #[arg(long, value_delimiter = ',')]
    pub methods: Option<Vec<String>>,
    /// Fixed-point refinements of the closed-form estimate.
    #[arg(long)]
    pub iterations: Option<usize>,
}

#[derive(Debug, Clone, Default, Args, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct InvertArgs {
    /// Problem file (TOML).
    #[arg(long)]
    pub problem: Option<PathBuf>,
    /// Refit with remote levels and tail scaled by 1 ± this fraction.
    #[arg(long)]
    pub sensitivity: Option<f64>,
}

#[derive(Debug, Clone, Default, Args, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct SynthesizeArgs {
    #[command(flatten)]
    #[serde(flatten)]
    pub data: DatasetArgs,
    /// Levels (`7p3/2`) or multiplets (`3p`) to treat as unknown.
    #[arg(long, value_delimiter = ',')]
    pub unknowns: Option<Vec<String>>,
    /// Levels or multiplets whose strengths anchor the fit.
    #[arg(long, value_delimiter = ',')]
    pub fiducials: Option<Vec<String>>,
    /// True strengths, `target=value` in a0^2.
    #[arg(long, value_delimiter = ',')]
    pub truth: Option<Vec<String>>,
    /// Factor applied to the dataset strength of unknowns without --truth.
    #[arg(long)]
    pub truth_scale: Option<f64>,
    /// Gaussian noise added to each zero, cm-1.
    #[arg(long)]
    pub noise: Option<f64>,
    /// Quoted uncertainty per zero (defaults to the noise, or 0.01).
    #[arg(long)]
    pub sigma: Option<f64>,
    /// RNG seed for the noise.
    #[arg(long)]
    pub seed: Option<u64>,
    /// Measure every inter-pole gap.
    #[arg(long)]
    #[serde(default)]
    pub all_gaps: bool,
}

#[derive(Debug, Clone, Default, Args, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct PolarizabilityArgs {
    #[command(flatten)]
    #[serde(flatten)]
    pub data: DatasetArgs,
    /// Frequencies at which to evaluate the dynamic polarizability, cm-1.
    #[arg(long, value_delimiter = ',')]
    pub omega: Option<Vec<f64>>,
}

#[derive(Debug, Clone, Default, Deserialize)]
#[serde(deny_unknown_fields, default)]
struct SolverFile {
    abs_tol_omega: Option<f64>,
    max_iter: Option<usize>,
    scan_points_per_gap: Option<usize>,
}

#[derive(Debug, Clone, Default, Deserialize)]
#[serde(deny_unknown_fields, default)]
struct ConfigFile {
    threads: Option<usize>,
    guard_band: Option<f64>,
    format: Option<Format>,
    output: Option<PathBuf>,
    solver: SolverFile,
    spectrum: SpectrumArgs,
    zeros: ZerosArgs,
    invert: InvertArgs,
    synthesize: SynthesizeArgs,
    polarizability: PolarizabilityArgs,
}

/// Settings after merging flags over the config file.
struct Run {
    guard: GuardPolicy,
    solver: SolverConfig,
    format: Format,
    output: Option<PathBuf>,
    /// Directory of the config file; relative paths in it resolve from here.
    base: Option<PathBuf>,
}

/// Parses `n=7,j=3/2` or `7p3/2`.
pub fn parse_rel_to(s: &str) -> CliResult<LevelKey> {
    let bad = || CliError::Input(format!("cannot parse level `{s}` (expected n=7,j=3/2 or 7p3/2)"));
    if !s.contains('=') {
        return s.parse().map_err(|_| bad());
    }
    let mut n = None;
    let mut twice_j = None;
    for part in s.split(',') {
        let (k, v) = part.split_once('=').ok_or_else(bad)?;
        match k.trim() {
            "n" => n = Some(v.trim().parse::<u32>().map_err(|_| bad())?),
            "j" => {
                twice_j = Some(match v.trim() {
                    "1/2" => 1,
                    "3/2" => 3,
                    _ => return Err(bad()),
                })
            }
            _ => return Err(bad()),
        }
    }
    LevelKey::p(n.ok_or_else(bad)?, twice_j.ok_or_else(bad)?).map_err(|_| bad())
}

fn origin(system: &AtomicSystem, rel_to: Option<&str>) -> CliResult<Option<(LevelKey, f64)>> {
    rel_to
        .map(|s| {
            let key = parse_rel_to(s)?;
            let level = system
                .level(key)
                .ok_or(rayzero_core::Error::LevelAbsent(key))?;
            Ok((key, level.omega))
        })
        .transpose()
}

fn emit(run: &Run, stdout: &mut dyn Write, text: &str) -> CliResult<()> {
    match &run.output {
        Some(path) => std::fs::write(path, text)
            .map_err(|e| CliError::Input(format!("cannot write {}: {e}", path.display())))?,
        None => stdout.write_all(text.as_bytes())?,
    }
    Ok(())
}

/// Runs the CLI with explicit streams and returns the exit status.
pub fn run<I, T>(args: I, stdout: &mut dyn Write, stderr: &mut dyn Write) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            let code = e.exit_code();
            let rendered = e.render().to_string();
            if code == 0 {
                let _ = stdout.write_all(rendered.as_bytes());
            } else {
                let _ = stderr.write_all(rendered.as_bytes());
            }
            return code;
        }
    };
    if cli.version {
        let _ = writeln!(stdout, "rayzero {}", env!("CARGO_PKG_VERSION"));
        for (name, hash) in provenance() {
            let _ = writeln!(stdout, "{name} sha256:{hash}");
        }
        return EXIT_OK;
    }
    match dispatch(cli, stdout, stderr) {
        Ok(()) => EXIT_OK,
        Err(e) => {
            let _ = writeln!(stderr, "error: {e}");
            e.exit_code()
        }
    }
}

fn read_config(path: &Path) -> CliResult<ConfigFile> {
    let text = std::fs::read_to_string(path)
        .map_err(|e| CliError::Input(format!("cannot read config {}: {e}", path.display())))?;
    toml::from_str(&text).map_err(|e| CliError::Input(format!("config {}: {e}", path.display())))
}

fn dispatch(cli: Cli, stdout: &mut dyn Write, stderr: &mut dyn Write) -> CliResult<()> {
    let Some(command) = cli.command else {
        return Err(CliError::Input("no subcommand given; see --help".into()));
    };
    let (file, base) = match &cli.config {
        Some(path) => (read_config(path)?, path.parent().map(Path::to_path_buf)),
        None => (ConfigFile::default(), None),
    };
    let guard = GuardPolicy::new(cli.guard_band.or(file.guard_band).unwrap_or(0.5))?;
    let defaults = SolverConfig::default();
    let solver = SolverConfig {
        abs_tol_omega: cli
            .abs_tol
            .or(file.solver.abs_tol_omega)
            .unwrap_or(defaults.abs_tol_omega),
        max_iter: cli.max_iter.or(file.solver.max_iter).unwrap_or(defaults.max_iter),
        scan_points_per_gap: cli
            .scan_points
            .or(file.solver.scan_points_per_gap)
            .unwrap_or(defaults.scan_points_per_gap),
    };
    solver.validate()?;
    let run = Run {
        guard,
        solver,
        format: cli.format.or(file.format).unwrap_or(Format::Csv),
        output: cli.output.or_else(|| {
            file.output
                .map(|p| base.as_ref().map_or(p.clone(), |b| b.join(&p)))
        }),
        base,
    };
    let threads = cli.threads.or(file.threads);
    // Buffered so the job can move onto a pool thread.
    let mut out_buf: Vec<u8> = Vec::new();
    let mut err_buf: Vec<u8> = Vec::new();
    let job = |out: &mut Vec<u8>, err: &mut Vec<u8>| -> CliResult<()> {
        match command {
            Command::Spectrum(a) => cmd_spectrum(&run, merge_spectrum(a, file.spectrum), out, err),
            Command::Zeros(a) => cmd_zeros(&run, merge_zeros(a, file.zeros), out, err),
            Command::Invert(a) => cmd_invert(&run, merge_invert(a, file.invert), out, err),
            Command::Synthesize(a) => {
                cmd_synthesize(&run, merge_synthesize(a, file.synthesize), out, err)
            }
            Command::Polarizability(a) => {
                cmd_polarizability(&run, merge_polarizability(a, file.polarizability), out, err)
            }
        }
    };
    let result = match threads {
        Some(0) => Err(CliError::Input("--threads must be at least 1".into())),
        Some(n) => rayon::ThreadPoolBuilder::new()
            .num_threads(n)
            .build()
            .map_err(|e| CliError::Input(format!("cannot start thread pool: {e}")))
            .and_then(|pool| pool.install(|| job(&mut out_buf, &mut err_buf))),
        None => job(&mut out_buf, &mut err_buf),
    };
    stdout.write_all(&out_buf)?;
    stderr.write_all(&err_buf)?;
    result
}

fn merge_spectrum(a: SpectrumArgs, f: SpectrumArgs) -> SpectrumArgs {
    SpectrumArgs {
        data: a.data.merge(f.data),
        from: a.from.or(f.from),
        to: a.to.or(f.to),
        points: a.points.or(f.points),
        rel_to: a.rel_to.or(f.rel_to),
    }
}

fn merge_zeros(a: ZerosArgs, f: ZerosArgs) -> ZerosArgs {
    ZerosArgs {
        data: a.data.merge(f.data),
        n: a.n.or(f.n),
        from: a.from.or(f.from),
        to: a.to.or(f.to),
        rel_to: a.rel_to.or(f.rel_to),
        methods: a.methods.or(f.methods),
        iterations: a.iterations.or(f.iterations),
    }
}

fn merge_invert(a: InvertArgs, f: InvertArgs) -> InvertArgs {
    InvertArgs {
        problem: a.problem.or(f.problem),
        sensitivity: a.sensitivity.or(f.sensitivity),
    }
}

fn merge_synthesize(a: SynthesizeArgs, f: SynthesizeArgs) -> SynthesizeArgs {
    SynthesizeArgs {
        data: a.data.merge(f.data),
        unknowns: a.unknowns.or(f.unknowns),
        fiducials: a.fiducials.or(f.fiducials),
        truth: a.truth.or(f.truth),
        truth_scale: a.truth_scale.or(f.truth_scale),
        noise: a.noise.or(f.noise),
        sigma: a.sigma.or(f.sigma),
        seed: a.seed.or(f.seed),
        all_gaps: a.all_gaps || f.all_gaps,
    }
}

fn merge_polarizability(a: PolarizabilityArgs, f: PolarizabilityArgs) -> PolarizabilityArgs {
    PolarizabilityArgs {
        data: a.data.merge(f.data),
        omega: a.omega.or(f.omega),
    }
}

fn cmd_spectrum(
    run: &Run,
    args: SpectrumArgs,
    stdout: &mut dyn Write,
    stderr: &mut dyn Write,
) -> CliResult<()> {
    let system = args.data.load(run.base.as_deref())?;
    let origin = origin(&system, args.rel_to.as_deref())?;
    let (Some(from), Some(to)) = (args.from, args.to) else {
        return Err(CliError::Input("spectrum needs --from and --to".into()));
    };
    let shift = origin.map_or(0.0, |o| o.1);
    let grid = linear_grid(from + shift, to + shift, args.points.unwrap_or(2000))?;
    if grid[0] <= 0.0 {
        return Err(CliError::Input(format!(
            "grid starts at {} cm-1; frequencies must be positive",
            grid[0]
        )));
    }
    let scan = scan_parallel(&system, &grid, &run.guard)?;
    let summary = report::spectrum_summary(&scan, origin);
    match run.format {
        Format::Csv => {
            emit(run, stdout, &spectrum_csv(&scan.points))?;
            stderr.write_all(summary.as_bytes())?;
        }
        Format::Human => {
            let text = format!("{summary}{}", report::spectrum_table(&scan, origin));
            emit(run, stdout, &text)?;
        }
    }
    Ok(())
}

fn parse_methods(items: Option<&[String]>) -> CliResult<Vec<ZeroMethod>> {
    let all = [
        ZeroMethod::Numerical,
        ZeroMethod::NumericalResonanceOnly,
        ZeroMethod::ApproxAnalytic,
    ];
    match items {
        None => Ok(all.to_vec()),
        Some(list) => list
            .iter()
            .map(|s| {
                all.iter()
                    .copied()
                    .find(|m| m.label() == s.trim())
                    .ok_or_else(|| CliError::Input(format!("unknown method `{s}`")))
            })
            .collect(),
    }
}

fn warn_widths(system: &AtomicSystem, records: &[ZeroRecord], stderr: &mut dyn Write) -> CliResult<()> {
    for r in records {
        if let Some(ratio) = r.width_ratio(system) {
            if ratio >= 0.01 {
                writeln!(
                    stderr,
                    "warning: zero at {:.4} cm-1 lies within 100 natural widths of {} (ratio {ratio:.2e})",
                    r.omega_zero, r.reference
                )?;
            }
        }
    }
    Ok(())
}

fn cmd_zeros(
    run: &Run,
    args: ZerosArgs,
    stdout: &mut dyn Write,
    stderr: &mut dyn Write,
) -> CliResult<()> {
    let system = args.data.load(run.base.as_deref())?;
    let origin = origin(&system, args.rel_to.as_deref())?;
    let methods = parse_methods(args.methods.as_deref())?;
    if system.is_truncated() {
        writeln!(stderr, "note: no tail estimate attached; level sums are truncated")?;
    }
    let mut records: Vec<ZeroRecord> = Vec::new();
    let mut table: Vec<(u32, Vec<ZeroRecord>)> = Vec::new();
    if let Some(list) = &args.n {
        if args.from.is_some() || args.to.is_some() {
            return Err(CliError::Input("--n cannot be combined with --from/--to".into()));
        }
        for &n in list {
            let mut row = Vec::new();
            for &m in &methods {
                let mut rec = match (m, args.iterations) {
                    (ZeroMethod::ApproxAnalytic, Some(k)) if k > 0 => {
                        approx_zero_iterated(&system, n, k)?
                    }
                    _ => zero_below_multiplet(&system, n, m, &run.solver)?,
                };
                if let Some((key, _)) = origin {
                    rec = rec.relative_to(&system, key)?;
                }
                row.push(rec);
            }
            records.extend(row.iter().cloned());
            table.push((n, row));
        }
    } else {
        let (Some(from), Some(to)) = (args.from, args.to) else {
            return Err(CliError::Input("zeros needs --n or both --from and --to".into()));
        };
        let shift = origin.map_or(0.0, |o| o.1);
        let range = (from + shift, to + shift);
        for &m in &methods {
            let search = match m {
                ZeroMethod::Numerical => find_zeros(&system, range, &run.solver)?,
                ZeroMethod::NumericalResonanceOnly => {
                    find_zeros_resonance_only(&system, range, &run.solver)?
                }
                ZeroMethod::ApproxAnalytic => {
                    writeln!(stderr, "note: approx_analytic is only tabulated with --n")?;
                    continue;
                }
            };
            for (lo, hi) in &search.multi_root_gaps {
                writeln!(stderr, "warning: more than one sign change in ({lo}, {hi})")?;
            }
            for z in search.zeros {
                records.push(match origin {
                    Some((key, _)) => z.relative_to(&system, key)?,
                    None => z,
                });
            }
        }
        if records.is_empty() {
            writeln!(
                stderr,
                "warning: no zeros between {:.4} and {:.4} cm-1",
                range.0, range.1
            )?;
        }
    }
    warn_widths(&system, &records, stderr)?;
    match run.format {
        Format::Csv => {
            let rows: Vec<ZeroRow> = records.iter().map(ZeroRow::from).collect();
            emit(run, stdout, &zeros_csv(&rows))?;
        }
        Format::Human if !table.is_empty() => emit(run, stdout, &report::zero_table(&table, &methods))?,
        Format::Human => emit(run, stdout, &report::zero_list(&records))?,
    }
    Ok(())
}

fn cmd_invert(
    run: &Run,
    args: InvertArgs,
    stdout: &mut dyn Write,
    stderr: &mut dyn Write,
) -> CliResult<()> {
    let path = args
        .problem
        .ok_or_else(|| CliError::Input("invert needs --problem".into()))?;
    let path = match &run.base {
        Some(b) if path.is_relative() && !path.exists() => b.join(path),
        _ => path,
    };
    let (file, problem) = load_problem(&path)?;
    let result = solve(&problem, &run.solver)?;
    let shifts = match args.sensitivity {
        Some(p) => Some((p, tail_sensitivity(&problem, &result, p, &run.solver)?)),
        None => None,
    };
    let truth = file.truth_values();
    let text = report::fit_report(
        &problem,
        &result,
        truth.as_deref(),
        shifts.as_ref().map(|(p, s)| (*p, s.as_slice())),
    );
    match run.format {
        Format::Csv => {
            let mut csv = String::from(FIT_HEADER);
            csv.push('\n');
            for (k, t) in result.targets.iter().enumerate() {
                let truth_col = truth.as_ref().map_or(String::new(), |tv| num(tv[k]));
                csv.push_str(&format!(
                    "{},{},{},{},{},{},{}\n",
                    t,
                    num(result.values[k]),
                    num(result.stat_sigma(k)),
                    num(result.fiducial_sigma(k)),
                    num(result.remote_sigma(k)),
                    num(result.total_sigma(k)),
                    truth_col
                ));
            }
            emit(run, stdout, &csv)?;
            stderr.write_all(text.as_bytes())?;
        }
        Format::Human => emit(run, stdout, &text)?,
    }
    Ok(())
}

fn parse_truth(
    items: &[String],
    unknowns: &[Target],
) -> CliResult<Vec<Option<f64>>> {
    let mut truth = vec![None; unknowns.len()];
    for item in items {
        let (name, value) = item
            .split_once('=')
            .ok_or_else(|| CliError::Input(format!("truth entry `{item}` is not target=value")))?;
        let target: Target = name.parse()?;
        let k = unknowns
            .iter()
            .position(|u| *u == target)
            .ok_or_else(|| CliError::Input(format!("truth given for {target}, which is not an unknown")))?;
        truth[k] = Some(
            value
                .trim()
                .parse()
                .map_err(|_| CliError::Input(format!("cannot parse truth value `{value}`")))?,
        );
    }
    Ok(truth)
}

fn cmd_synthesize(
    run: &Run,
    args: SynthesizeArgs,
    stdout: &mut dyn Write,
    stderr: &mut dyn Write,
) -> CliResult<()> {
    let system = args.data.load(run.base.as_deref())?;
    let parse = |items: &Option<Vec<String>>| -> CliResult<Vec<Target>> {
        Ok(items
            .iter()
            .flatten()
            .map(|s| s.parse())
            .collect::<rayzero_core::Result<Vec<Target>>>()?)
    };
    let unknowns = parse(&args.unknowns)?;
    if unknowns.is_empty() {
        return Err(CliError::Input("synthesize needs --unknowns".into()));
    }
    let fiducials = parse(&args.fiducials)?;
    let scale = args.truth_scale.unwrap_or(1.0);
    let truth = parse_truth(args.truth.as_deref().unwrap_or(&[]), &unknowns)?
        .into_iter()
        .zip(&unknowns)
        .map(|(t, u)| t.or_else(|| (scale != 1.0).then(|| u.value_in(&system) * scale)))
        .collect();
    let noise = args.noise.unwrap_or(0.0);
    let spec = Synthesis {
        dataset: args.data.dataset_name()?.to_string(),
        tail: args.data.tail_spec()?,
        unknowns,
        fiducials,
        truth,
        noise,
        sigma: args.sigma.unwrap_or(if noise > 0.0 { noise } else { 0.01 }),
        seed: args.seed.unwrap_or(0),
        all_gaps: args.all_gaps,
    };
    let file = synthesize(&system, &spec, &run.solver)?;
    writeln!(
        stderr,
        "{} measurement(s) for {} unknown(s), seed {}",
        file.measurements.len(),
        file.unknowns.len(),
        spec.seed
    )?;
    emit(run, stdout, &file.to_toml())
}

fn cmd_polarizability(
    run: &Run,
    args: PolarizabilityArgs,
    stdout: &mut dyn Write,
    stderr: &mut dyn Write,
) -> CliResult<()> {
    let system = args.data.load(run.base.as_deref())?;
    let partial = partial_static_polarizability(system.levels());
    let resonance = system
        .resonance_multiplet()
        .map(|n| partial_static_polarizability(system.multiplet(n)))
        .unwrap_or(0.0);
    let mut summary = format!(
        "static polarizability of the loaded levels: {partial:.6} a.u.\n\
         resonance multiplet alone: {resonance:.6} a.u. ({:.3} % of the loaded sum)\n",
        100.0 * resonance / partial
    );
    if let Some(alpha_ref) = args.data.alpha_ref {
        let unc = args.data.alpha_unc.unwrap_or(0.0);
        let tail = truncation_bound(&system, alpha_ref, unc)?;
        let total = dynamic_polarizability(&system.clone().with_tail(Some(tail)), 0.0, &run.guard)?;
        summary.push_str(&format!(
            "reference {alpha_ref} ± {unc} a.u.: tail {:.6} a.u. (p_zz = {:.6e} a0^2 cm, rel_unc {:.3e}), total {total:.6} a.u.\n\
             resonance multiplet share of the reference: {:.3} %\n",
            alpha_ref - partial.min(alpha_ref),
            tail.p_zz,
            tail.rel_unc,
            100.0 * resonance / alpha_ref
        ));
    }
    let omegas = args.omega.unwrap_or_else(|| vec![0.0]);
    let mut csv = String::from("omega_cm1,alpha_au\n");
    let mut table = String::new();
    for w in omegas {
        let a = dynamic_polarizability(&system, w, &run.guard)?;
        csv.push_str(&format!("{},{}\n", num(w), num(a)));
        table.push_str(&format!("alpha({w} cm-1) = {a:.9} a.u.\n"));
    }
    match run.format {
        Format::Csv => {
            emit(run, stdout, &csv)?;
            stderr.write_all(summary.as_bytes())?;
        }
        Format::Human => emit(run, stdout, &format!("{summary}{table}"))?,
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn rel_to_forms() {
        let k = LevelKey::p(7, 3).unwrap();
        assert_eq!(parse_rel_to("n=7,j=3/2").unwrap(), k);
        assert_eq!(parse_rel_to("7p3/2").unwrap(), k);
        assert!(parse_rel_to("n=7").is_err());
        assert!(parse_rel_to("n=7,j=5/2").is_err());
    }

    #[test]
    fn config_sections_parse() {
        let cfg: ConfigFile = toml::from_str(
            "threads = 2\nformat = \"human\"\n[spectrum]\ndataset = \"@cs\"\nfrom = -250.0\n[solver]\nmax_iter = 50\n",
        )
        .unwrap();
        assert_eq!(cfg.threads, Some(2));
        assert_eq!(cfg.format, Some(Format::Human));
        assert_eq!(cfg.spectrum.data.dataset.as_deref(), Some("@cs"));
        assert_eq!(cfg.solver.max_iter, Some(50));
        assert!(toml::from_str::<ConfigFile>("[spectrum]\nbogus = 1\n").is_err());
    }
}
