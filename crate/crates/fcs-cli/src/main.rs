//! The `fcs` binary: batch analysis of SU(2)-covariant finitely correlated
//! spin-chain states. See `fcs --help` for the command menu; outputs are
//! machine-readable tables and reports (CSV/JSON) written atomically.

use std::path::PathBuf;
use std::process::ExitCode;

use clap::error::ErrorKind;
use clap::{Args, Parser, Subcommand};

use fcs_cli::{run, CliError, Command, Format, ModelSpec, Observable, RunConfig};
use fcs_core::su2::Spin;

fn parse_spin(text: &str) -> Result<Spin, String> {
    text.parse::<Spin>().map_err(|e| e.to_string())
}

#[derive(Parser)]
#[command(
    name = "fcs",
    version,
    about = "Finitely correlated spin-chain states: variational sweeps, transfer spectra, \
             symmetry checks, and correlator tables"
)]
struct Cli {
    #[command(subcommand)]
    command: Cmd,
}

#[derive(Subcommand)]
enum Cmd {
    /// Sweep auxiliary spins 2t ∈ {1, …, 2·t_max}, minimizing mean energy
    Sweep(SweepArgs),
    /// Transfer-operator spectrum, decay rate α, and correlation length ξ
    Spectrum(SpectrumArgs),
    /// Symmetry report of an interaction term (reflection, reality, balance)
    Check(CheckArgs),
    /// Connected two-point correlators with a fitted decay rate
    Correlate(CorrelateArgs),
    /// Write a covariant system as a JSON document for later --import
    Export(ExportArgs),
}

#[derive(Args)]
struct SweepArgs {
    /// Zoo model: ising, xy, majumdar_ghosh (mg), xxx, aklt
    #[arg(long, conflicts_with = "import")]
    model: Option<String>,
    /// Field strength λ of the xy model (default 0)
    #[arg(long)]
    lambda: Option<f64>,
    /// Interaction term as a JSON Hamiltonian document
    #[arg(long, value_name = "FILE")]
    import: Option<PathBuf>,
    /// Site spin s, e.g. 1, 0.5, 3/2 (default: the model's site spin)
    #[arg(long, value_parser = parse_spin)]
    s: Option<Spin>,
    /// Largest auxiliary spin on the grid
    #[arg(long = "t-max", value_parser = parse_spin, default_value = "4.5")]
    t_max: Spin,
    /// Output file (stdout when omitted)
    #[arg(long, value_name = "FILE")]
    output: Option<PathBuf>,
    /// csv (default) or json
    #[arg(long, value_enum)]
    format: Option<Format>,
}

#[derive(Args)]
struct SpectrumArgs {
    /// Site spin s of the covariant system
    #[arg(long, value_parser = parse_spin, conflicts_with = "import")]
    s: Option<Spin>,
    /// Auxiliary spin t of the covariant system
    #[arg(long, value_parser = parse_spin, conflicts_with = "import")]
    t: Option<Spin>,
    /// Analyze a previously exported system document instead
    #[arg(long, value_name = "FILE")]
    import: Option<PathBuf>,
    /// Output file (stdout when omitted)
    #[arg(long, value_name = "FILE")]
    output: Option<PathBuf>,
    /// json (the only format this report speaks)
    #[arg(long, value_enum)]
    format: Option<Format>,
}

#[derive(Args)]
struct CheckArgs {
    /// Zoo model: ising, xy, majumdar_ghosh (mg), xxx, aklt
    #[arg(long, conflicts_with = "import")]
    model: Option<String>,
    /// Field strength λ of the xy model (default 0)
    #[arg(long)]
    lambda: Option<f64>,
    /// Interaction term as a JSON Hamiltonian document
    #[arg(long, value_name = "FILE")]
    import: Option<PathBuf>,
    /// Site spin s — required by xxx, validated against the term otherwise
    #[arg(long, value_parser = parse_spin)]
    s: Option<Spin>,
    /// Output file (stdout when omitted)
    #[arg(long, value_name = "FILE")]
    output: Option<PathBuf>,
    /// json (the only format this report speaks)
    #[arg(long, value_enum)]
    format: Option<Format>,
}

#[derive(Args)]
struct CorrelateArgs {
    /// Site spin s of the covariant system
    #[arg(long, value_parser = parse_spin, conflicts_with = "import")]
    s: Option<Spin>,
    /// Auxiliary spin t of the covariant system
    #[arg(long, value_parser = parse_spin, conflicts_with = "import")]
    t: Option<Spin>,
    /// Analyze a previously exported system document instead
    #[arg(long, value_name = "FILE")]
    import: Option<PathBuf>,
    /// Largest correlator distance (must be ≥ 2)
    #[arg(long = "k-max", default_value_t = 20)]
    k_max: usize,
    /// Comma-separated subset of sx, sy, sz (default: all three)
    #[arg(long, value_enum, value_delimiter = ',')]
    observables: Vec<Observable>,
    /// Output file (stdout when omitted)
    #[arg(long, value_name = "FILE")]
    output: Option<PathBuf>,
    /// csv (default) or json
    #[arg(long, value_enum)]
    format: Option<Format>,
}

#[derive(Args)]
struct ExportArgs {
    /// Site spin s of the covariant system
    #[arg(long, value_parser = parse_spin)]
    s: Option<Spin>,
    /// Auxiliary spin t of the covariant system
    #[arg(long, value_parser = parse_spin)]
    t: Option<Spin>,
    /// Output file (stdout when omitted)
    #[arg(long, value_name = "FILE")]
    output: Option<PathBuf>,
    /// json (the only format this document speaks)
    #[arg(long, value_enum)]
    format: Option<Format>,
}

impl Cli {
    fn into_config(self) -> RunConfig {
        match self.command {
            Cmd::Sweep(a) => {
                let mut config = RunConfig::new(Command::Sweep);
                config.model = a.model.map(|name| ModelSpec {
                    name,
                    lambda: a.lambda,
                });
                config.import = a.import;
                config.s = a.s;
                config.t_max = a.t_max;
                config.output = a.output;
                config.format = a.format;
                config
            }
            Cmd::Spectrum(a) => {
                let mut config = RunConfig::new(Command::Spectrum);
                config.s = a.s;
                config.t = a.t;
                config.import = a.import;
                config.output = a.output;
                config.format = a.format;
                config
            }
            Cmd::Check(a) => {
                let mut config = RunConfig::new(Command::Check);
                config.model = a.model.map(|name| ModelSpec {
                    name,
                    lambda: a.lambda,
                });
                config.import = a.import;
                config.s = a.s;
                config.output = a.output;
                config.format = a.format;
                config
            }
            Cmd::Correlate(a) => {
                let mut config = RunConfig::new(Command::Correlate);
                config.s = a.s;
                config.t = a.t;
                config.import = a.import;
                config.k_max = a.k_max;
                if !a.observables.is_empty() {
                    config.observables = a.observables;
                }
                config.output = a.output;
                config.format = a.format;
                config
            }
            Cmd::Export(a) => {
                let mut config = RunConfig::new(Command::Export);
                config.s = a.s;
                config.t = a.t;
                config.output = a.output;
                config.format = a.format;
                config
            }
        }
    }
}

/// Bounds rayon's worker pool when FCS_THREADS is set; an unusable value is
/// a usage error rather than a silent fallback.
fn configure_threads() -> Result<(), CliError> {
    let Ok(raw) = std::env::var("FCS_THREADS") else {
        return Ok(());
    };
    let threads: usize = raw.trim().parse().map_err(|_| {
        CliError::Usage(format!(
            "FCS_THREADS must be a positive integer, got {raw:?}"
        ))
    })?;
    if threads == 0 {
        return Err(CliError::Usage(
            "FCS_THREADS must be a positive integer, got 0".into(),
        ));
    }
    // A pool may already exist (e.g. under a test harness); the bound then
    // cannot be applied retroactively, which is fine for a fresh process.
    let _ = rayon::ThreadPoolBuilder::new()
        .num_threads(threads)
        .build_global();
    Ok(())
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e)
            if matches!(
                e.kind(),
                ErrorKind::DisplayHelp
                    | ErrorKind::DisplayVersion
                    | ErrorKind::DisplayHelpOnMissingArgumentOrSubcommand
            ) =>
        {
            print!("{e}");
            return ExitCode::SUCCESS;
        }
        Err(e) => {
            eprint!("{e}");
            return ExitCode::from(1);
        }
    };
    let result = configure_threads().and_then(|()| run(&cli.into_config()));
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
