//! Command-line driver: run cases, tabulate coexistence points and fit d² laws.

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand, ValueEnum};
use thermolbm::config::{CaseConfig, FaceConfig};
use thermolbm::diagnostics::{d2_law_fit, jakob_number};
use thermolbm::io::read_series_csv;
use thermolbm::{maxwell_coexistence, run_case, EosParams, Error, InitConfig, ThermalBackend};

const EXIT_CONFIG: u8 = 2;
const EXIT_NUMERICAL: u8 = 3;

#[derive(Parser, Debug)]
#[command(name = "thermolbm", version, about = "Pseudopotential lattice Boltzmann liquid-vapor phase-change solver")]
struct Cli {
    /// Increase log verbosity (-v info, -vv debug).
    #[arg(short, long, action = clap::ArgAction::Count, global = true)]
    verbose: u8,

    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Run a case from a TOML configuration or a built-in preset.
    Run {
        /// Case configuration file.
        #[arg(long, conflicts_with = "preset", required_unless_present = "preset")]
        config: Option<PathBuf>,
        /// Built-in case: conduction_slab, droplet_evaporation or sessile_droplet.
        #[arg(long)]
        preset: Option<String>,
        /// Override the number of steps.
        #[arg(long)]
        steps: Option<u64>,
        /// Directory for snapshots and the diagnostics series.
        #[arg(long)]
        output_dir: Option<PathBuf>,
        /// Override the temperature solver.
        #[arg(long, value_enum)]
        backend: Option<Backend>,
        /// Correction-term switch (0 or 1).
        #[arg(long, value_parser = clap::value_parser!(u8).range(0..=1))]
        theta: Option<u8>,
        /// Worker threads (overrides the configuration and THERMOLBM_THREADS).
        #[arg(long)]
        threads: Option<usize>,
    },
    /// Print the Maxwell coexistence point at T/T_c as a CSV row `T,rho_l,rho_v,p_sat`.
    Coexist {
        #[arg(long)]
        t_ratio: f64,
        /// Also print the header row.
        #[arg(long)]
        header: bool,
    },
    /// Post-processing of diagnostics series.
    Diag {
        #[command(subcommand)]
        command: DiagCommand,
    },
    /// Print a built-in case as TOML.
    Preset { name: String },
}

#[derive(Subcommand, Debug)]
enum DiagCommand {
    /// Fit (D/D_0)² = 1 − K t to a diagnostics series.
    D2law {
        #[arg(long)]
        series: PathBuf,
        /// Leading fraction of the series discarded as transient.
        #[arg(long, default_value_t = 0.1)]
        discard: f64,
    },
}

#[derive(Clone, Copy, Debug, ValueEnum)]
enum Backend {
    Lbm,
    Fdm,
    None,
}

impl From<Backend> for ThermalBackend {
    fn from(b: Backend) -> Self {
        match b {
            Backend::Lbm => ThermalBackend::Lbm,
            Backend::Fdm => ThermalBackend::Fdm,
            Backend::None => ThermalBackend::None,
        }
    }
}

fn exit_code(e: &Error) -> u8 {
    if e.is_numerical() {
        EXIT_NUMERICAL
    } else {
        EXIT_CONFIG
    }
}

fn run(cli: Cli) -> Result<(), Error> {
    match cli.command {
        Command::Run {
            config,
            preset,
            steps,
            output_dir,
            backend,
            theta,
            threads,
        } => {
            let mut case = match (config, preset) {
                (Some(path), _) => CaseConfig::from_file(&path)?,
                (None, Some(name)) => CaseConfig::preset(&name)?,
                (None, None) => return Err(Error::Config("either --config or --preset is required".into())),
            };
            if let Some(n) = steps {
                case.run.steps = n;
            }
            if let Some(b) = backend {
                case.thermal.backend = b.into();
            }
            if let Some(t) = theta {
                case.thermal.correction = t;
            }
            if threads.is_some() {
                case.run.threads = threads;
            }
            case.validate()?;
            log::info!("running '{}' on {:?} for {} steps", case.name, case.dims(), case.run.steps);
            let jakob = match (&case.init, &case.faces.z_minus) {
                (InitConfig::SessileDroplet { t_sat, .. }, FaceConfig::Wall { temperature: Some(t_wall), .. }) => {
                    let tc = case.eos_params()?.tc();
                    Some(jakob_number(case.thermal.cv, t_wall * tc, t_sat * tc, case.thermal.latent_heat))
                }
                _ => None,
            };
            let summary = run_case(case, output_dir.as_deref())?;
            let d = &summary.diagnostics;
            println!("steps,{}", d.steps);
            println!("steady,{}", d.steady);
            println!("mass,{:.12e}", summary.final_mass);
            if let Some(last) = d.records.last() {
                println!("diameter,{:.6}", last.diameter);
                println!("mean_step_seconds,{:.6e}", last.mean_step_seconds);
            }
            if let Some(ja) = jakob {
                // No separate c_p is configured; c_v stands in for it.
                println!("jakob_number_cp_as_cv,{ja:.6}");
            }
            if let Some(slab) = summary.slab {
                println!("interface,{}", slab.interface);
                println!("slope_ratio,{:.6}", slab.slope_ratio);
            }
            Ok(())
        }
        Command::Coexist { t_ratio, header } => {
            let eos = EosParams::reference();
            let c = maxwell_coexistence(t_ratio * eos.tc(), &eos)?;
            if header {
                println!("T,rho_l,rho_v,p_sat");
            }
            println!("{:.12e},{:.12e},{:.12e},{:.12e}", c.t, c.rho_liquid, c.rho_vapor, c.p_sat);
            Ok(())
        }
        Command::Diag {
            command: DiagCommand::D2law { series, discard },
        } => {
            let records = read_series_csv(&series)?;
            let times: Vec<f64> = records.iter().map(|r| r.step as f64).collect();
            let diameters: Vec<f64> = records.iter().map(|r| r.diameter).collect();
            let fit = d2_law_fit(&times, &diameters, discard)?;
            println!("K,R2,samples");
            println!("{:.9e},{:.9},{}", fit.k, fit.r_squared, fit.samples);
            Ok(())
        }
        Command::Preset { name } => {
            print!("{}", CaseConfig::preset(&name)?.to_toml_string());
            Ok(())
        }
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let level = match cli.verbose {
        0 => "warn",
        1 => "info",
        _ => "debug",
    };
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or(level)).init();
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(exit_code(&e))
        }
    }
}
