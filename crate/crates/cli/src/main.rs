use std::path::PathBuf;
use std::process::ExitCode;

use clap::Parser;
use sarg_core::keyrate::{ExperimentParams, FeMode};
use sarg_core::protocol::EventType;
use sarg_core::sweep::{self, DistanceGrid, MuOpt, StudyKind, SweepConfig};
use sarg_core::Error;

const EXIT_CONFIG: u8 = 1;
const EXIT_VALIDATION: u8 = 2;
const EXIT_IO: u8 = 3;

/// Key-rate sweeps and parameter studies for MDI-SARG04.
///
/// Prints a tab-separated table with a commented parameter header. With
/// `--mc-rounds` it instead checks the Monte Carlo simulator against exact
/// enumeration and exits with status 2 if any |z| exceeds 4.
#[derive(Debug, Parser)]
#[command(name = "sarg-sweep", version)]
struct Args {
    /// Detector quantum efficiency.
    #[arg(long, default_value_t = 0.045)]
    eta: f64,
    /// Dark-count probability per detector per window.
    #[arg(long, default_value_t = 8.5e-7)]
    dark: f64,
    /// Fiber loss in dB/km.
    #[arg(long, default_value_t = 0.21)]
    alpha: f64,
    /// Mean photon number of both sources.
    #[arg(long, default_value_t = 0.1)]
    mu: f64,
    /// Error-correction model: `enzer` or `fixed:<value>`.
    #[arg(long, default_value = "enzer")]
    fe: String,
    /// Event class: 1, 2 or both.
    #[arg(long = "type", default_value = "both")]
    event_type: String,
    /// Distance grid `min:max:step` in km.
    #[arg(long = "L", default_value = "0:200:1")]
    grid: String,
    /// Study: fe, dark, eta or none.
    #[arg(long, default_value = "none")]
    study: String,
    /// Comma-separated scenario values for the study.
    #[arg(long)]
    list: Option<String>,
    /// Optimize μ over `lo:hi:steps` at every grid point.
    #[arg(long = "mu-opt")]
    mu_opt: Option<String>,
    /// Photon-number cutoff of the yield model.
    #[arg(long, default_value_t = 6)]
    nmax: usize,
    /// Run Monte Carlo validation with this many rounds per protocol.
    #[arg(long = "mc-rounds")]
    mc_rounds: Option<u64>,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Depolarizing probability of the validation channel.
    #[arg(long, default_value_t = 0.0)]
    depolarize: f64,
    /// Output file; stdout when absent.
    #[arg(long)]
    out: Option<PathBuf>,
}

fn parse_types(s: &str) -> Result<Vec<EventType>, Error> {
    match s.trim() {
        "1" => Ok(vec![EventType::Type1]),
        "2" => Ok(vec![EventType::Type2]),
        "both" => Ok(EventType::BOTH.to_vec()),
        other => Err(Error::Config(format!("unknown type '{other}'"))),
    }
}

fn parse_floats(list: &str) -> Result<Vec<f64>, Error> {
    list.split(',')
        .map(|v| {
            v.trim()
                .parse()
                .map_err(|_| Error::Config(format!("bad list value '{}'", v.trim())))
        })
        .collect()
}

fn build_config(args: &Args) -> Result<SweepConfig, Error> {
    let params = ExperimentParams {
        eta: args.eta,
        dark: args.dark,
        alpha: args.alpha,
        mu_a: args.mu,
        mu_b: args.mu,
        fe_mode: args.fe.parse()?,
        n_max: args.nmax,
    };
    let mut config = SweepConfig {
        grid: args.grid.parse::<DistanceGrid>()?,
        params,
        types: parse_types(&args.event_type)?,
        study: args.study.parse::<StudyKind>()?,
        mu_opt: args.mu_opt.as_deref().map_or(Ok(MuOpt::Off), str::parse)?,
        seed: args.seed,
        depolarizing: args.depolarize,
        ..SweepConfig::default()
    };
    if let Some(rounds) = args.mc_rounds {
        config.mc_rounds = rounds;
    }
    if let Some(list) = &args.list {
        match config.study {
            StudyKind::Fe => {
                config.fe_modes = list
                    .split(',')
                    .map(str::parse)
                    .collect::<Result<Vec<FeMode>, _>>()?
            }
            StudyKind::Dark => config.darks = parse_floats(list)?,
            StudyKind::Eta => config.etas = parse_floats(list)?,
            StudyKind::None => {
                return Err(Error::Config("--list needs --study fe, dark or eta".into()))
            }
        }
    }
    config.validate()?;
    Ok(config)
}

fn emit(out: Option<&PathBuf>, text: &str) -> Result<(), Error> {
    match out {
        Some(path) => sweep::write_output(path, text),
        None => {
            print!("{text}");
            Ok(())
        }
    }
}

fn exit_code(err: &Error) -> u8 {
    match err {
        Error::Io { .. } => EXIT_IO,
        _ => EXIT_CONFIG,
    }
}

fn run(args: &Args) -> Result<u8, Error> {
    let config = build_config(args)?;
    if args.mc_rounds.is_some() {
        let report = sweep::validate_mc(&config)?;
        emit(args.out.as_ref(), &report.to_text())?;
        return Ok(if report.passed() { 0 } else { EXIT_VALIDATION });
    }
    let text = sweep::run_study(&config)?;
    emit(args.out.as_ref(), &text)?;
    Ok(0)
}

fn main() -> ExitCode {
    let args = match Args::try_parse() {
        Ok(a) => a,
        Err(e) => {
            let _ = e.print();
            return ExitCode::from(if e.use_stderr() { EXIT_CONFIG } else { 0 });
        }
    };
    match run(&args) {
        Ok(code) => ExitCode::from(code),
        Err(e) => {
            eprintln!("sarg-sweep: {e}");
            ExitCode::from(exit_code(&e))
        }
    }
}
