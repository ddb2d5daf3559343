//! Command implementations behind the `fcs` binary: resolved run
//! configurations, machine-readable output documents, exit-code mapping,
//! and atomic file writes.
//!
//! Output contract (stable):
//!
//! * every command is deterministic — identical configuration produces
//!   byte-identical output (eigenvalues are canonically sorted, sweep rows
//!   follow the grid);
//! * CSV numbers carry 17 significant digits (`{:.16e}`), `.` decimal,
//!   no locale;
//! * JSON is pretty-printed;
//! * exit codes: 0 success, 1 usage, 2 domain infeasibility, 3 I/O or parse;
//! * files are written atomically (temp file in the target directory, then
//!   rename); stdout is used when no output path is given.

use std::io::Write;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use thiserror::Error;

use fcs_core::fcs::{build_covariant, FcsError, PopescuSystem};
use fcs_core::models::{
    detailed_balance_check, g_invariance_check, model_zoo, variational_sweep, LocalHamiltonian,
    Model, ModelsError, SweepResult,
};
use fcs_core::numerics::CMatrix;
use fcs_core::su2::{make_irrep, Spin};
use fcs_core::transfer::{
    build_transfer, decay_certificate, spectral_report, two_point_series, SpectralDocument,
    TransferError,
};

/// What failed, mapped onto the stable exit-code contract.
#[derive(Debug, Error)]
pub enum CliError {
    /// Exit 1: the invocation itself is malformed (flag combinations,
    /// out-of-range parameters, unknown names).
    #[error("{0}")]
    Usage(String),
    /// Exit 2: a well-formed request whose computation is infeasible
    /// (infeasible spin pair, empty sweep, non-mixing spectrum, …).
    #[error("{0}")]
    Domain(String),
    /// Exit 3: reading, writing, or parsing input/output data failed.
    #[error("{0}")]
    InputOutput(String),
}

impl CliError {
    /// The process exit code this error maps to.
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Usage(_) => 1,
            CliError::Domain(_) => 2,
            CliError::InputOutput(_) => 3,
        }
    }
}

/// Which subcommand a [`RunConfig`] drives.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Command {
    Sweep,
    Spectrum,
    Check,
    Correlate,
    Export,
}

/// A model referenced by zoo name plus optional parameters.
#[derive(Clone, Debug)]
pub struct ModelSpec {
    pub name: String,
    pub lambda: Option<f64>,
}

/// Output format of a command. Tabular commands (sweep, correlate) default
/// to CSV and also speak JSON; report commands (spectrum, check, export)
/// are JSON only.
#[derive(Clone, Copy, Debug, PartialEq, Eq, clap::ValueEnum)]
pub enum Format {
    Csv,
    Json,
}

/// Single-site spin observables selectable for correlator tables.
#[derive(Clone, Copy, Debug, PartialEq, Eq, clap::ValueEnum)]
pub enum Observable {
    Sx,
    Sy,
    Sz,
}

impl Observable {
    /// Column label in output tables.
    pub fn label(self) -> &'static str {
        match self {
            Observable::Sx => "Sx",
            Observable::Sy => "Sy",
            Observable::Sz => "Sz",
        }
    }
}

/// A fully resolved invocation: one command plus every parameter any
/// command consumes. Each `cmd_*` validates the fields it needs; the shared
/// invariant — a model source is exactly one of zoo name / input file — is
/// enforced by the resolver helpers.
#[derive(Clone, Debug)]
pub struct RunConfig {
    pub command: Command,
    pub model: Option<ModelSpec>,
    pub import: Option<PathBuf>,
    pub s: Option<Spin>,
    pub t: Option<Spin>,
    pub t_max: Spin,
    pub k_max: usize,
    pub observables: Vec<Observable>,
    pub output: Option<PathBuf>,
    pub format: Option<Format>,
}

impl RunConfig {
    /// A configuration with every optional source empty and the documented
    /// defaults filled in (t_max = 9/2, k_max = 20, observables Sx, Sy, Sz).
    pub fn new(command: Command) -> Self {
        Self {
            command,
            model: None,
            import: None,
            s: None,
            t: None,
            t_max: Spin::from_twice(9),
            k_max: 20,
            observables: vec![Observable::Sx, Observable::Sy, Observable::Sz],
            output: None,
            format: None,
        }
    }
}

/// Executes a resolved configuration, writing the command's document to the
/// configured destination.
pub fn run(config: &RunConfig) -> Result<(), CliError> {
    match config.command {
        Command::Sweep => cmd_sweep(config),
        Command::Spectrum => cmd_spectrum(config),
        Command::Check => cmd_check(config),
        Command::Correlate => cmd_correlate(config),
        Command::Export => cmd_export(config),
    }
}

// ---------------------------------------------------------------------------
// Error classification
// ---------------------------------------------------------------------------

/// Errors while building a covariant system from command-line spins.
fn construction_error(e: FcsError) -> CliError {
    CliError::Domain(e.to_string())
}

/// Errors while reading a system or Hamiltonian document from disk.
fn import_error(e: impl std::fmt::Display) -> CliError {
    CliError::InputOutput(e.to_string())
}

/// Errors from model resolution and energy/sweep evaluation.
fn models_error(e: ModelsError) -> CliError {
    match e {
        ModelsError::UnknownModel { .. } | ModelsError::MissingParameter { .. } => {
            CliError::Usage(e.to_string())
        }
        ModelsError::Parse(_) | ModelsError::NotHermitian { .. } | ModelsError::BadShape { .. } => {
            CliError::InputOutput(e.to_string())
        }
        other => CliError::Domain(other.to_string()),
    }
}

/// Errors from spectral analysis and correlators.
fn transfer_error(e: TransferError) -> CliError {
    match e {
        TransferError::InvalidDistance { .. } | TransferError::NoObservables => {
            CliError::Usage(e.to_string())
        }
        other => CliError::Domain(other.to_string()),
    }
}

// ---------------------------------------------------------------------------
// Source resolution
// ---------------------------------------------------------------------------

/// The interaction term for sweep/check: either a zoo model by name or an
/// imported Hamiltonian document — exactly one.
fn resolve_hamiltonian(config: &RunConfig) -> Result<LocalHamiltonian, CliError> {
    match (&config.model, &config.import) {
        (Some(spec), None) => {
            let model = Model::parse(&spec.name, spec.lambda, config.s).map_err(models_error)?;
            Ok(model_zoo(model))
        }
        (None, Some(path)) => {
            let text = std::fs::read_to_string(path)
                .map_err(|e| import_error(format!("cannot read {}: {e}", path.display())))?;
            LocalHamiltonian::from_json(&text).map_err(models_error)
        }
        (Some(_), Some(_)) => Err(CliError::Usage(
            "--model and --import are mutually exclusive".into(),
        )),
        (None, None) => Err(CliError::Usage(
            "one of --model or --import is required".into(),
        )),
    }
}

/// The Popescu system for spectrum/correlate: either the covariant system
/// of (--s, --t) or an imported system document — exactly one.
fn resolve_system(config: &RunConfig) -> Result<PopescuSystem, CliError> {
    match (config.s, config.t, &config.import) {
        (Some(s), Some(t), None) => Ok(build_covariant(s, t)
            .map_err(construction_error)?
            .base()
            .clone()),
        (None, None, Some(path)) => {
            let text = std::fs::read_to_string(path)
                .map_err(|e| import_error(format!("cannot read {}: {e}", path.display())))?;
            PopescuSystem::from_json(&text).map_err(import_error)
        }
        (_, _, Some(_)) => Err(CliError::Usage(
            "--import is mutually exclusive with --s/--t".into(),
        )),
        _ => Err(CliError::Usage(
            "either both --s and --t, or --import, are required".into(),
        )),
    }
}

/// Picks the effective format, rejecting combinations a command does not
/// speak (report commands are JSON only).
fn effective_format(
    config: &RunConfig,
    default: Format,
    csv_allowed: bool,
) -> Result<Format, CliError> {
    let format = config.format.unwrap_or(default);
    if format == Format::Csv && !csv_allowed {
        return Err(CliError::Usage(
            "this command emits JSON only; drop --format or pass --format json".into(),
        ));
    }
    Ok(format)
}

// ---------------------------------------------------------------------------
// Commands
// ---------------------------------------------------------------------------

/// `sweep`: variational sweep of covariant states over the auxiliary-spin
/// grid for one model, reporting energy, decay rate, and correlation length
/// per grid point.
pub fn cmd_sweep(config: &RunConfig) -> Result<(), CliError> {
    let format = effective_format(config, Format::Csv, true)?;
    let h = resolve_hamiltonian(config)?;
    let s = config.s.unwrap_or_else(|| h.site_spin());
    let sweep = variational_sweep(s, &h, config.t_max).map_err(models_error)?;
    let text = match format {
        Format::Csv => sweep_csv(&sweep),
        Format::Json => to_pretty_json(&SweepDocument::new(&sweep)),
    };
    write_output(config.output.as_deref(), &text)
}

/// `spectrum`: full transfer-operator spectrum with decay rate α,
/// correlation length ξ, and the mixing/balance flags, as JSON.
pub fn cmd_spectrum(config: &RunConfig) -> Result<(), CliError> {
    effective_format(config, Format::Json, false)?;
    let sys = resolve_system(config)?;
    let op = build_transfer(&sys);
    let report = spectral_report(&op).map_err(transfer_error)?;
    let doc = SpectralDocument::new(&report, op.detailed_balance());
    write_output(config.output.as_deref(), &doc.to_json())
}

/// `check`: symmetry report of an interaction term — lattice reflection,
/// per-site transpose reality, their conjunction (detailed balance), and
/// the deviation of the term from global SU(2) invariance.
pub fn cmd_check(config: &RunConfig) -> Result<(), CliError> {
    effective_format(config, Format::Json, false)?;
    let h = resolve_hamiltonian(config)?;
    if let Some(s) = config.s {
        if s != h.site_spin() {
            return Err(CliError::Domain(format!(
                "--s {s} does not match the site spin {} of {:?} (d = {})",
                h.site_spin(),
                h.label(),
                h.d()
            )));
        }
    }
    let balance = detailed_balance_check(&h);
    let site = make_irrep(h.site_spin());
    let g_dev = g_invariance_check(&h, &site).map_err(models_error)?;
    let doc = CheckDocument {
        lattice_symmetric: balance.lattice_symmetric,
        real: balance.real,
        detailed_balance: balance.detailed_balance,
        g_invariance_deviation: g_dev,
    };
    write_output(config.output.as_deref(), &to_pretty_json(&doc))
}

/// `correlate`: connected two-point correlators c_k for every ordered pair
/// of the selected single-site spin observables, distances 1 … k_max, plus
/// the pooled fitted decay rate and ln α in the footer.
pub fn cmd_correlate(config: &RunConfig) -> Result<(), CliError> {
    let format = effective_format(config, Format::Csv, true)?;
    if config.k_max < 2 {
        return Err(CliError::Usage(format!(
            "--k-max must be at least 2 to fit a decay rate, got {}",
            config.k_max
        )));
    }
    if config.observables.is_empty() {
        return Err(CliError::Usage(
            "--observables must name at least one of sx, sy, sz".into(),
        ));
    }
    let sys = resolve_system(config)?;
    let site = make_irrep(Spin::from_twice(sys.d() as u32 - 1));
    let matrices: Vec<(&'static str, CMatrix)> = config
        .observables
        .iter()
        .map(|o| {
            let m = match o {
                Observable::Sx => site.sx().clone(),
                Observable::Sy => site.sy().clone(),
                Observable::Sz => site.sz().clone(),
            };
            (o.label(), m)
        })
        .collect();

    let obs_only: Vec<CMatrix> = matrices.iter().map(|(_, m)| m.clone()).collect();
    let cert = decay_certificate(&sys, &obs_only, config.k_max).map_err(transfer_error)?;

    let means: Vec<f64> = matrices
        .iter()
        .map(|(_, m)| sys.local_expectation(m).map(|z| z.re))
        .collect::<Result<_, _>>()
        .map_err(|e: FcsError| CliError::Domain(e.to_string()))?;

    let mut columns = Vec::new();
    for (ia, (label_a, a)) in matrices.iter().enumerate() {
        for (ib, (label_b, b)) in matrices.iter().enumerate() {
            let series = two_point_series(&sys, a, b, config.k_max).map_err(transfer_error)?;
            let values: Vec<f64> = series
                .iter()
                .map(|z| z.re - means[ia] * means[ib])
                .collect();
            columns.push(CorrelatorColumn {
                pair: [(*label_a).to_string(), (*label_b).to_string()],
                values,
            });
        }
    }

    let doc = CorrelatorDocument {
        k_max: config.k_max,
        observables: matrices.iter().map(|(l, _)| (*l).to_string()).collect(),
        alpha: cert.alpha,
        ln_alpha: (cert.alpha > 0.0).then(|| cert.alpha.ln()),
        fitted_rate: cert.fitted_rate,
        prefactor: cert.prefactor,
        max_violation: cert.max_violation,
        columns,
    };
    let text = match format {
        Format::Csv => correlator_csv(&doc),
        Format::Json => to_pretty_json(&doc),
    };
    write_output(config.output.as_deref(), &text)
}

/// `export`: the covariant system of (--s, --t) as a system document,
/// suitable for later `--import`.
pub fn cmd_export(config: &RunConfig) -> Result<(), CliError> {
    effective_format(config, Format::Json, false)?;
    if config.import.is_some() {
        return Err(CliError::Usage(
            "export builds from --s/--t and does not take --import".into(),
        ));
    }
    let (s, t) = match (config.s, config.t) {
        (Some(s), Some(t)) => (s, t),
        _ => return Err(CliError::Usage("export requires both --s and --t".into())),
    };
    let sys = build_covariant(s, t).map_err(construction_error)?;
    write_output(config.output.as_deref(), &sys.base().to_json())
}

// ---------------------------------------------------------------------------
// Documents
// ---------------------------------------------------------------------------

/// JSON form of a sweep. Spins appear as their numeric value (0.5, 1, …);
/// infeasible rows carry `null` in the numeric fields.
#[derive(Serialize, Deserialize)]
pub struct SweepDocument {
    pub model: String,
    pub argmin_t: f64,
    pub rows: Vec<SweepRowDocument>,
}

/// One grid point of a [`SweepDocument`].
#[derive(Serialize, Deserialize)]
pub struct SweepRowDocument {
    pub t: f64,
    pub feasible: bool,
    pub energy: Option<f64>,
    pub alpha: Option<f64>,
    pub xi: Option<f64>,
}

impl SweepDocument {
    pub fn new(sweep: &SweepResult) -> Self {
        Self {
            model: sweep.model.clone(),
            argmin_t: sweep.argmin_t.j(),
            rows: sweep
                .rows
                .iter()
                .map(|r| SweepRowDocument {
                    t: r.t.j(),
                    feasible: r.feasible,
                    energy: r.energy,
                    alpha: r.alpha,
                    xi: r.xi,
                })
                .collect(),
        }
    }
}

/// JSON form of the symmetry report of `check`.
#[derive(Serialize, Deserialize)]
pub struct CheckDocument {
    pub lattice_symmetric: bool,
    pub real: bool,
    pub detailed_balance: bool,
    pub g_invariance_deviation: f64,
}

/// JSON form of a correlator table: per ordered observable pair the
/// connected correlators c_k = ω(A⊗1^{k−1}⊗B) − ω(A)ω(B) for k = 1 … k_max
/// (real numbers — the observables are Hermitian), plus the decay summary.
#[derive(Serialize, Deserialize)]
pub struct CorrelatorDocument {
    pub k_max: usize,
    pub observables: Vec<String>,
    pub alpha: f64,
    /// `null` when α = 0 (no decay scale).
    pub ln_alpha: Option<f64>,
    /// Pooled least-squares slope of ln|c_k| vs k; `null` for a degenerate
    /// fit (fewer than two points above the noise floor).
    pub fitted_rate: Option<f64>,
    pub prefactor: f64,
    pub max_violation: f64,
    pub columns: Vec<CorrelatorColumn>,
}

/// One ordered pair's correlator column.
#[derive(Serialize, Deserialize)]
pub struct CorrelatorColumn {
    pub pair: [String; 2],
    pub values: Vec<f64>,
}

// ---------------------------------------------------------------------------
// Formatting
// ---------------------------------------------------------------------------

/// 17 significant digits — round-trip exact for f64.
fn fmt_float(x: f64) -> String {
    format!("{x:.16e}")
}

/// Spins as plain decimals for tables: `0.5`, `1`, `1.5`, …
fn fmt_spin(s: Spin) -> String {
    format!("{}", s.j())
}

fn to_pretty_json<T: Serialize>(value: &T) -> String {
    serde_json::to_string_pretty(value).expect("documents serialize")
}

/// CSV with header `t,energy,alpha,xi,feasible`; infeasible rows keep their
/// grid position with empty numeric cells.
fn sweep_csv(sweep: &SweepResult) -> String {
    let mut out = String::from("t,energy,alpha,xi,feasible\n");
    for row in &sweep.rows {
        let cell = |v: Option<f64>| v.map(fmt_float).unwrap_or_default();
        out.push_str(&format!(
            "{},{},{},{},{}\n",
            fmt_spin(row.t),
            cell(row.energy),
            cell(row.alpha),
            cell(row.xi),
            row.feasible
        ));
    }
    out
}

/// CSV with one `c_A_B` column per ordered observable pair and two footer
/// rows, `fitted_rate` and `ln_alpha` (value cell empty when undefined).
fn correlator_csv(doc: &CorrelatorDocument) -> String {
    let mut out = String::from("k");
    for column in &doc.columns {
        out.push_str(&format!(",c_{}_{}", column.pair[0], column.pair[1]));
    }
    out.push('\n');
    for k in 0..doc.k_max {
        out.push_str(&(k + 1).to_string());
        for column in &doc.columns {
            out.push(',');
            out.push_str(&fmt_float(column.values[k]));
        }
        out.push('\n');
    }
    let footer = |v: Option<f64>| v.map(fmt_float).unwrap_or_default();
    out.push_str(&format!("fitted_rate,{}\n", footer(doc.fitted_rate)));
    out.push_str(&format!("ln_alpha,{}\n", footer(doc.ln_alpha)));
    out
}

// ---------------------------------------------------------------------------
// Output plumbing
// ---------------------------------------------------------------------------

/// Writes `text` (newline-terminated) to the path, atomically — or to
/// stdout when no path is configured.
fn write_output(path: Option<&Path>, text: &str) -> Result<(), CliError> {
    let mut body = text.to_string();
    if !body.ends_with('\n') {
        body.push('\n');
    }
    let text = body.as_str();
    match path {
        None => std::io::stdout()
            .write_all(text.as_bytes())
            .map_err(|e| CliError::InputOutput(format!("cannot write to stdout: {e}"))),
        Some(path) => atomic_write(path, text),
    }
}

/// Temp file in the destination directory, then rename over the target —
/// readers never observe a partial file.
fn atomic_write(path: &Path, text: &str) -> Result<(), CliError> {
    let dir = match path.parent() {
        Some(p) if !p.as_os_str().is_empty() => p,
        _ => Path::new("."),
    };
    let err = |e: &dyn std::fmt::Display| {
        CliError::InputOutput(format!("cannot write {}: {e}", path.display()))
    };
    let mut tmp = tempfile::NamedTempFile::new_in(dir).map_err(|e| err(&e))?;
    tmp.write_all(text.as_bytes()).map_err(|e| err(&e))?;
    tmp.persist(path).map_err(|e| err(&e))?;
    Ok(())
}
