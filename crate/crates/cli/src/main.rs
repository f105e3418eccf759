//! `fman`: verify catalog entries and spec files, integrate the n = 3
//! rotation-coefficient system, and run Legendre transformations.

mod commands;
mod output;

use std::collections::BTreeMap;
use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};

#[derive(Parser, Debug)]
#[command(name = "fman", version, about = "Numerical verification of F-manifold structures")]
struct Cli {
    #[command(subcommand)]
    command: Command,
    #[command(flatten)]
    run: RunConfig,
}

/// Options shared by every subcommand.
#[derive(Args, Debug, Clone)]
pub struct RunConfig {
    /// Seed for point sampling.
    #[arg(long, global = true, default_value_t = 42)]
    pub seed: u64,
    /// Number of sample points.
    #[arg(long, global = true, default_value_t = 20)]
    pub points: usize,
    /// Absolute tolerance. For `verify` and `legendre` this is the
    /// threshold on the normalized residual `|Δ|/(1 + scale)`.
    #[arg(long, global = true)]
    pub atol: Option<f64>,
    /// Relative tolerance (integrator step control for `ode`).
    #[arg(long, global = true)]
    pub rtol: Option<f64>,
    #[arg(long, global = true, value_enum, default_value_t = Format::Json)]
    pub format: Format,
    /// Parameter override `name=value`; repeatable.
    #[arg(long = "param", global = true, value_parser = parse_param)]
    pub params: Vec<(String, f64)>,
    /// Write the report here instead of stdout.
    #[arg(long, global = true)]
    pub out: Option<PathBuf>,
}

impl RunConfig {
    pub fn param_map(&self) -> BTreeMap<String, f64> {
        self.params.iter().cloned().collect()
    }
}

#[derive(ValueEnum, Clone, Copy, Debug, PartialEq, Eq)]
pub enum Format {
    Json,
    Markdown,
    Csv,
}

fn parse_param(s: &str) -> Result<(String, f64), String> {
    let (k, v) = s.split_once('=').ok_or_else(|| format!("expected name=value, got `{s}`"))?;
    let v: f64 = v.trim().parse().map_err(|_| format!("`{v}` is not a number"))?;
    Ok((k.trim().to_string(), v))
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Run the checks implied by an entry's claims, or only the named ones.
    Verify {
        /// Catalog entry name or path to a spec JSON file.
        spec: String,
        /// Run only this check; repeatable. See `fman catalog checks`.
        #[arg(long = "check")]
        checks: Vec<String>,
    },
    /// Integrate the rotation-coefficient system along real z; CSV output.
    Ode(commands::OdeArgs),
    /// Legendre-transform a spec by a flat invertible field.
    Legendre {
        spec: String,
        /// Field name: `e`, `E`, or a named field of the entry.
        #[arg(long)]
        field: String,
        /// Field components instead of a name, comma separated.
        #[arg(long)]
        components: Option<String>,
        /// Catalog entry whose metric the transform should reproduce.
        #[arg(long)]
        target: Option<String>,
        /// Write the transformed spec here; otherwise it is embedded in the output.
        #[arg(long)]
        spec_out: Option<PathBuf>,
    },
    /// Inspect the built-in catalog.
    Catalog {
        #[command(subcommand)]
        action: CatalogAction,
    },
}

#[derive(Subcommand, Debug)]
enum CatalogAction {
    /// Entry names with their claims.
    List,
    /// The structure JSON of an entry.
    Export {
        name: String,
        /// The full entry (flags, charts, fields) rather than the structure alone.
        #[arg(long)]
        full: bool,
    },
    /// Identifiers accepted by `verify --check`.
    Checks,
}

/// Why a command did not succeed; the code is the process exit status.
#[derive(Debug)]
pub struct Failure {
    pub code: u8,
    pub message: String,
}

impl Failure {
    pub fn checks(message: impl Into<String>) -> Self {
        Failure { code: 1, message: message.into() }
    }

    pub fn input(message: impl Into<String>) -> Self {
        Failure { code: 2, message: message.into() }
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let r = match cli.command {
        Command::Verify { spec, checks } => commands::verify(&cli.run, &spec, &checks),
        Command::Ode(args) => commands::ode(&cli.run, &args),
        Command::Legendre { spec, field, components, target, spec_out } => {
            commands::legendre(&cli.run, &spec, &field, components.as_deref(), target.as_deref(), spec_out.as_deref())
        }
        Command::Catalog { action } => match action {
            CatalogAction::List => commands::catalog_list(&cli.run),
            CatalogAction::Export { name, full } => commands::catalog_export(&cli.run, &name, full),
            CatalogAction::Checks => commands::catalog_checks(&cli.run),
        },
    };
    match r {
        Ok(()) => ExitCode::SUCCESS,
        Err(f) => {
            eprintln!("fman: {}", f.message);
            ExitCode::from(f.code)
        }
    }
}
