mod commands;
mod config;
mod output;

use std::fs;
use std::io::Write;
use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand, ValueEnum};
use hyperdelta::Error;
use serde_json::{Map, Value};

use config::RunConfig;

#[derive(Debug)]
pub enum CliError {
    Config(String),
    Lib(Error),
}

impl From<Error> for CliError {
    fn from(e: Error) -> Self {
        CliError::Lib(e)
    }
}

impl std::fmt::Display for CliError {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            CliError::Config(m) => write!(f, "configuration error: {m}"),
            CliError::Lib(e) => write!(f, "{e}"),
        }
    }
}

impl CliError {
    pub fn exit_code(&self) -> u8 {
        match self {
            CliError::Config(_) => 2,
            CliError::Lib(e) => match e {
                Error::InvalidGroup(_) | Error::Io(_) | Error::Parse(_) => 2,
                Error::BallOverflow { .. } => 3,
                Error::NoContraction { .. } => 5,
                Error::PoleAtNonpositiveInteger(_)
                | Error::PoleAtOne
                | Error::NearPole(_)
                | Error::PoleOnBoundary(_)
                | Error::PoleOfEisenstein
                | Error::ScatteringPole(_)
                | Error::ZeroOfRelativeZeta(_)
                | Error::SingularPair(_)
                | Error::SingularReparametrization(_) => 6,
                _ => 4,
            },
        }
    }
}

#[derive(Parser, Debug)]
#[command(
    name = "hyperdelta",
    version,
    about = "Delta-potential perturbations of the Laplacian on hyperbolic surfaces",
    after_long_help = RunConfig::help()
)]
struct Cli {
    /// Configuration file of key=value lines.
    #[arg(short, long, global = true)]
    config: Option<PathBuf>,
    /// Override a configuration key, e.g. --set radius=6 (repeatable).
    #[arg(short = 's', long = "set", value_name = "KEY=VALUE", global = true)]
    set: Vec<String>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Enumerate the orbit ball and write it as CSV (a,b,c,d,length).
    OrbitBall,
    /// Evaluate the relative zeta function or locate its real zeros.
    Relzeta {
        #[arg(value_enum)]
        action: RelzetaAction,
    },
    /// Trace-formula checks.
    Trace {
        #[arg(value_enum)]
        action: TraceAction,
    },
    /// Eisenstein series and scattering coefficients on the modular surface.
    Eisenstein {
        #[arg(value_enum)]
        action: EisensteinAction,
    },
}

#[derive(ValueEnum, Clone, Copy, Debug)]
enum RelzetaAction {
    Eval,
    Roots,
}

#[derive(ValueEnum, Clone, Copy, Debug)]
enum TraceAction {
    Sphere,
    Geometric,
    ZetaIdentity,
}

#[derive(ValueEnum, Clone, Copy, Debug)]
enum EisensteinAction {
    Eval,
    Check,
    Perturbed,
}

impl Command {
    fn name(&self) -> String {
        match self {
            Command::OrbitBall => "orbit-ball".into(),
            Command::Relzeta { action } => format!("relzeta {}", action.to_possible_value().unwrap().get_name()),
            Command::Trace { action } => format!("trace {}", action.to_possible_value().unwrap().get_name()),
            Command::Eisenstein { action } => format!("eisenstein {}", action.to_possible_value().unwrap().get_name()),
        }
    }
}

fn write_artifact(cfg: Option<&RunConfig>, body: &str) -> Result<(), CliError> {
    match cfg.and_then(|c| c.get("output")) {
        Some(path) => fs::write(path, body).map_err(|e| CliError::Config(format!("cannot write {path}: {e}"))),
        None => {
            let mut out = std::io::stdout().lock();
            out.write_all(body.as_bytes()).map_err(|e| CliError::Config(format!("stdout: {e}")))
        }
    }
}

fn envelope(command: &str, cfg: Option<&RunConfig>, results: Value, errors: Vec<String>) -> String {
    let mut config = Map::new();
    if let Some(cfg) = cfg {
        for (k, v) in cfg.entries() {
            config.insert(k.into(), Value::String(v.into()));
        }
    }
    let doc = output::obj([
        ("command", Value::String(command.into())),
        ("config", Value::Object(config)),
        ("results", results),
        ("errors", Value::Array(errors.into_iter().map(Value::String).collect())),
        ("version", Value::String(hyperdelta::VERSION.into())),
    ]);
    let mut s = serde_json::to_string_pretty(&doc).expect("serializable");
    s.push('\n');
    s
}

fn run(cli: &Cli, cfg: &RunConfig) -> Result<Value, CliError> {
    match &cli.command {
        Command::OrbitBall => commands::orbit_ball(cfg).map(|_| Value::Null),
        Command::Relzeta { action: RelzetaAction::Eval } => commands::relzeta_eval(cfg),
        Command::Relzeta { action: RelzetaAction::Roots } => commands::relzeta_roots(cfg),
        Command::Trace { action: TraceAction::Sphere } => commands::trace_sphere(cfg),
        Command::Trace { action: TraceAction::Geometric } => commands::trace_geometric(cfg),
        Command::Trace { action: TraceAction::ZetaIdentity } => commands::trace_zeta_identity(cfg),
        Command::Eisenstein { action: EisensteinAction::Eval } => commands::eisenstein_eval(cfg),
        Command::Eisenstein { action: EisensteinAction::Check } => commands::eisenstein_check(cfg),
        Command::Eisenstein { action: EisensteinAction::Perturbed } => commands::eisenstein_perturbed(cfg),
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let name = cli.command.name();
    let json = !matches!(cli.command, Command::OrbitBall);
    let cfg = match RunConfig::load(cli.config.as_deref(), &cli.set) {
        Ok(c) => c,
        Err(e) => {
            eprintln!("hyperdelta: {e}");
            if json {
                let _ = write_artifact(None, &envelope(&name, None, Value::Null, vec![e.to_string()]));
            }
            return ExitCode::from(e.exit_code());
        }
    };
    match run(&cli, &cfg) {
        Ok(results) => {
            if json {
                if let Err(e) = write_artifact(Some(&cfg), &envelope(&name, Some(&cfg), results, Vec::new())) {
                    eprintln!("hyperdelta: {e}");
                    return ExitCode::from(e.exit_code());
                }
            }
            ExitCode::SUCCESS
        }
        Err(e) => {
            eprintln!("hyperdelta: {e}");
            if json {
                let _ = write_artifact(Some(&cfg), &envelope(&name, Some(&cfg), Value::Null, vec![e.to_string()]));
            }
            ExitCode::from(e.exit_code())
        }
    }
}
