//! Command-line front end.
//!
//! Exit codes: 0 success (for `table` and `verify`: everything matched),
//! 2 usage or unreadable/unparsable input, 3 invalid experiment or failed
//! comparison, 4 conditioning on an impossible outcome.

use std::path::PathBuf;
use std::process::ExitCode;

use ablsim::hilbert::OutcomeProb;
use ablsim::montecarlo::estimate;
use ablsim::presets::{build_scenario, mixture_demo, reference_table, D1Variant, MarginalSource};
use ablsim::scenario::Scenario;
use clap::{Parser, Subcommand, ValueEnum};

use ablsim_cli::report::{
    ConditionalReport, ReportDocument, ScenarioReport, TableReport, VerifyReport,
};
use ablsim_cli::scenario_file::{load_scenario, LoadError};

#[derive(Parser)]
#[command(
    name = "ablsim",
    version,
    about = "Pre- and post-selected interferometer probabilities: forward runs, \
             two-time conditionals, trajectory sampling, and total-probability mixtures"
)]
struct Cli {
    /// Output format: readable text or one JSON document.
    #[arg(long, global = true, value_enum, default_value_t = Format::Human)]
    format: Format,
    #[command(subcommand)]
    command: Command,
}

#[derive(Clone, Copy, ValueEnum)]
enum Format {
    Human,
    Machine,
}

/// First-detector realization: one detector spanning both bright rails, or
/// two detectors on their sum and difference rays.
#[derive(Clone, Copy, ValueEnum)]
enum Variant {
    Original,
    Plusminus,
}

impl From<Variant> for D1Variant {
    fn from(v: Variant) -> Self {
        match v {
            Variant::Original => D1Variant::Subspace,
            Variant::Plusminus => D1Variant::PlusMinus,
        }
    }
}

#[derive(Clone, Copy, ValueEnum)]
enum Presence {
    Present,
    Absent,
}

impl Presence {
    fn is_present(self) -> bool {
        matches!(self, Presence::Present)
    }
}

#[derive(Subcommand)]
enum Command {
    /// Forward and two-time probabilities for a built-in arrangement.
    Preset {
        #[arg(long, value_enum, default_value_t = Variant::Original)]
        variant: Variant,
        /// Whether the which-way coupler sits in the circuit.
        #[arg(long, value_enum, default_value_t = Presence::Present)]
        d3: Presence,
    },
    /// Check every built-in probability against its expected fraction.
    Table,
    /// Forward and two-time probabilities for a scenario file.
    Run {
        /// TOML scenario file.
        path: PathBuf,
    },
    /// Click/no-click distribution conditioned on one final outcome.
    Abl {
        /// TOML scenario file.
        path: PathBuf,
        /// Detector name to condition on.
        #[arg(long)]
        condition: String,
    },
    /// Sample trajectories and compare frequencies with the closed forms.
    Verify {
        /// TOML scenario file; omit to sample a built-in arrangement.
        path: Option<PathBuf>,
        /// Built-in arrangement to sample (default when no file is given).
        #[arg(long, value_enum, conflicts_with = "path")]
        preset: Option<Variant>,
        /// Coupler presence for preset sampling.
        #[arg(long, value_enum, default_value_t = Presence::Present, conflicts_with = "path")]
        d3: Presence,
        #[arg(long, default_value_t = 1_000_000)]
        shots: u64,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        /// Sampling threads; the report is identical for any worker count.
        #[arg(long, default_value_t = 1)]
        workers: usize,
    },
    /// Reconstruct the click probability as a mixture over final outcomes.
    Decompose {
        #[arg(long, value_enum, default_value_t = Variant::Original)]
        variant: Variant,
        /// Which arrangement supplies the final-outcome marginals. Conditionals
        /// always describe the coupled circuit, so `absent` mixes arrangements.
        #[arg(long, value_enum, default_value_t = Presence::Absent)]
        marginals: Presence,
        /// Substitute the published 1/4 claim for the first detector's
        /// computed conditional (original variant only).
        #[arg(long)]
        published_conditional: bool,
    },
}

struct Failure {
    code: u8,
    message: String,
}

fn fail(code: u8, message: impl Into<String>) -> Failure {
    Failure {
        code,
        message: message.into(),
    }
}

fn from_core(err: ablsim::Error) -> Failure {
    let code = match &err {
        ablsim::Error::ImpossiblePostSelection | ablsim::Error::ImpossibleOutcome { .. } => 4,
        ablsim::Error::EmptySample => 2,
        _ => 3,
    };
    fail(code, err.to_string())
}

fn from_load(err: LoadError) -> Failure {
    match err {
        LoadError::Parse(msg) => fail(2, msg),
        LoadError::Invalid(err) => from_core(err),
    }
}

fn scenario_report(scenario: &Scenario) -> Result<ScenarioReport, Failure> {
    let forward = OutcomeProb::rows(&scenario.forward_probabilities().map_err(from_core)?);
    let (intermediate, conditionals) = if scenario.d3_present() {
        let rows = OutcomeProb::rows(&scenario.abl_conditionals().map_err(from_core)?);
        (
            Some(scenario.intermediate_name().to_string()),
            Some(rows),
        )
    } else {
        (None, None)
    };
    Ok(ScenarioReport {
        scenario: scenario.name().to_string(),
        d3_present: scenario.d3_present(),
        intermediate,
        forward,
        conditionals,
    })
}

/// Builds the document and the exit code it should carry.
fn dispatch(command: Command) -> Result<(ReportDocument, u8), Failure> {
    match command {
        Command::Preset { variant, d3 } => {
            let scenario =
                build_scenario(d3.is_present(), variant.into()).map_err(from_core)?;
            Ok((ReportDocument::Scenario(scenario_report(&scenario)?), 0))
        }
        Command::Table => {
            let table = reference_table().map_err(from_core)?;
            let all_match = table.all_match();
            let code = if all_match { 0 } else { 3 };
            Ok((ReportDocument::Table(TableReport { all_match, table }), code))
        }
        Command::Run { path } => {
            let scenario = load_scenario(&path).map_err(from_load)?;
            Ok((ReportDocument::Scenario(scenario_report(&scenario)?), 0))
        }
        Command::Abl { path, condition } => {
            let scenario = load_scenario(&path).map_err(from_load)?;
            if !scenario.detectors().iter().any(|d| d.name == condition) {
                let known: Vec<&str> =
                    scenario.detectors().iter().map(|d| d.name.as_str()).collect();
                return Err(fail(
                    2,
                    format!(
                        "unknown detector {condition:?}; this scenario has: {}",
                        known.join(", ")
                    ),
                ));
            }
            let distribution =
                OutcomeProb::rows(&scenario.click_conditional(&condition).map_err(from_core)?);
            Ok((
                ReportDocument::Conditional(ConditionalReport {
                    scenario: scenario.name().to_string(),
                    intermediate: scenario.intermediate_name().to_string(),
                    condition,
                    distribution,
                }),
                0,
            ))
        }
        Command::Verify {
            path,
            preset,
            d3,
            shots,
            seed,
            workers,
        } => {
            let scenario = match (path, preset) {
                (Some(path), None) => load_scenario(&path).map_err(from_load)?,
                (None, variant) => build_scenario(
                    d3.is_present(),
                    variant.unwrap_or(Variant::Original).into(),
                )
                .map_err(from_core)?,
                (Some(_), Some(_)) => unreachable!("clap rejects path together with --preset"),
            };
            let estimate = estimate(&scenario, shots, seed, workers).map_err(from_core)?;
            let code = if estimate.pass { 0 } else { 3 };
            Ok((
                ReportDocument::Verify(VerifyReport {
                    d3_present: scenario.d3_present(),
                    estimate,
                }),
                code,
            ))
        }
        Command::Decompose {
            variant,
            marginals,
            published_conditional,
        } => {
            if published_conditional && matches!(variant, Variant::Plusminus) {
                return Err(fail(
                    2,
                    "--published-conditional refers to the undivided first detector; \
                     use --variant original",
                ));
            }
            let source = if marginals.is_present() {
                MarginalSource::Present
            } else {
                MarginalSource::Absent
            };
            let demo =
                mixture_demo(variant.into(), source, published_conditional).map_err(from_core)?;
            Ok((ReportDocument::Decompose(demo), 0))
        }
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match dispatch(cli.command) {
        Ok((document, code)) => {
            match cli.format {
                Format::Human => print!("{}", document.human()),
                Format::Machine => print!("{}", document.machine()),
            }
            ExitCode::from(code)
        }
        Err(failure) => {
            eprintln!("error: {}", failure.message);
            ExitCode::from(failure.code)
        }
    }
}
