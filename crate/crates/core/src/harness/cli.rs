//! Command-line front end: `simulate`, `mas`, `compare`, `linearize`.

use std::ffi::OsString;
use std::fs;
use std::path::{Path, PathBuf};

use clap::{Parser, Subcommand};

use super::linearize::{compare_models, format_comparison, linearize_closed_loop};
use super::metrics::{compute_metrics, format_table, MetricsReport};
use super::scenario::{load_scenario, GovernorKind, Scenario, ScenarioError};
use super::sim::{default_admissible_set, run_scenario, Governor};
use super::HarnessError;
use crate::governor::{build_mas, default_linear_model, discretize_zoh, AdmissibleSet};
use crate::params::{load_params, ParamSet};
use crate::units;

pub const EXIT_OK: i32 = 0;
pub const EXIT_USAGE: i32 = 2;
pub const EXIT_CONFIG: i32 = 3;
pub const EXIT_NUMERIC: i32 = 4;
pub const EXIT_IO: i32 = 5;
pub const EXIT_MAS: i32 = 6;

const FILE_HELP: &str = "\
Config file (TOML, --config). The [gas], [stack], [control], [polarization]
and [faraday_efficiency] keys are required, except control.k_p_an. The
[solver], [simulation], [governor] and [scenarios] sections are optional and
fall back to the built-in defaults. Unknown keys are rejected. Without
--config the built-in default file is used.

  [gas]          r_o2, r_h2 [J/(kg K)], gamma, faraday [C/mol], m_h2, m_o2 [kg/mol]
  [stack]        v_an, v_ca [m^3], tau_ca [s], c_d, a_t [m^2], n_cell, a_cell [m^2],
                 t_el_kelvin | t_el_celsius
  [control]      k_p_ca [Nm^3/(h bar)], k_i [Nm^3/(h bar s)], k_p_an [1/bar],
                 p_h2_ref_pa | p_h2_ref_bar, p_min_pa | p_min_bar, p_max_pa | p_max_bar
  [polarization] r1, r2, s1, s2, s3, t1, t2, t3, temperature = celsius | kelvin,
                 log_base = e | 10
  [faraday_efficiency] a1..a5, temperature = celsius | kelvin
  [solver]       power_min_w, power_max_w
  [simulation]   dt [s], governor_period [s] (an integer multiple of dt)
  [governor]     epsilon_bar, horizon_cap, lpf_tau [s], nominal_power_w
  [scenarios]    large_low_w, large_high_w, small_base_w, small_step_w

Scenario file (TOML, --scenario <path>):

  name = \"ramp\"
  duration_s = 300.0
  governor = \"pg\"                      # pg | lpf | none
  profile_w = [[0.0, 5000.0], [100.0, 9000.0]]
  [windows]
  tracking_s = [100.0, 300.0]
  production_s = [100.0, 200.0]
  auxiliary_s = [200.0, 300.0]

Exit codes: 2 usage, 3 config or scenario, 4 numerical failure, 5 file I/O,
6 admissible set construction.";

#[derive(Debug, Parser)]
#[command(name = "elygov", version, about = "Electrolyzer pressure simulation with a reference power governor", after_long_help = FILE_HELP)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Run one scenario and write its time series as CSV.
    Simulate {
        /// large-step, small-steps or a scenario file
        #[arg(long)]
        scenario: String,
        /// pg, lpf or none (defaults to the scenario's own choice)
        #[arg(long)]
        governor: Option<GovernorKind>,
        #[arg(long)]
        config: Option<PathBuf>,
        /// CSV destination; stdout when omitted
        #[arg(long)]
        output: Option<PathBuf>,
        /// Load a prebuilt admissible set instead of building one
        #[arg(long)]
        mas: Option<PathBuf>,
    },
    /// Build the admissible set and write it as JSON.
    Mas {
        /// Sample time, s
        #[arg(long)]
        ts: Option<f64>,
        /// Steady-state tightening, bar
        #[arg(long)]
        eps: Option<f64>,
        /// Upper pressure deviation bound, bar
        #[arg(long, allow_hyphen_values = true)]
        upper: Option<f64>,
        /// Lower pressure deviation bound, bar (negative)
        #[arg(long, allow_hyphen_values = true)]
        lower: Option<f64>,
        #[arg(long)]
        horizon_cap: Option<usize>,
        #[arg(long)]
        config: Option<PathBuf>,
        /// JSON destination; stdout when omitted
        #[arg(long)]
        output: Option<PathBuf>,
    },
    /// Run the governor and the low-pass filter on one scenario and tabulate metrics.
    Compare {
        #[arg(long)]
        scenario: String,
        #[arg(long)]
        config: Option<PathBuf>,
        /// Directory for <scenario>_pg.csv and <scenario>_lpf.csv
        #[arg(long, default_value = ".")]
        out_dir: PathBuf,
        /// Also write the metrics as JSON
        #[arg(long)]
        json: Option<PathBuf>,
    },
    /// Numerical Jacobian of the nonlinear loop beside the shipped linear model.
    Linearize {
        /// Operating power, kW (defaults to the nominal power)
        #[arg(long)]
        power_kw: Option<f64>,
        #[arg(long)]
        config: Option<PathBuf>,
    },
}

impl clap::builder::ValueParserFactory for GovernorKind {
    type Parser = clap::builder::ValueParser;
    fn value_parser() -> Self::Parser {
        clap::builder::ValueParser::new(|s: &str| s.parse::<GovernorKind>().map_err(|e| e.to_string()))
    }
}

pub fn exit_code(err: &HarnessError) -> i32 {
    match err {
        HarnessError::Params(_) | HarnessError::Scenario(_) => EXIT_CONFIG,
        HarnessError::Plant(_) | HarnessError::Electrochem(_) => EXIT_NUMERIC,
        HarnessError::Io { .. } => EXIT_IO,
        HarnessError::Governor(_) => EXIT_MAS,
    }
}

fn read(path: &Path) -> Result<String, HarnessError> {
    fs::read_to_string(path).map_err(|source| HarnessError::Io {
        path: path.display().to_string(),
        source,
    })
}

fn write(path: &Path, text: &str) -> Result<(), HarnessError> {
    fs::write(path, text).map_err(|source| HarnessError::Io {
        path: path.display().to_string(),
        source,
    })
}

fn params_from(config: Option<&Path>) -> Result<ParamSet, HarnessError> {
    match config {
        Some(p) => Ok(load_params(&read(p)?)?),
        None => Ok(ParamSet::default()),
    }
}

/// Shipped scenario by name, otherwise a scenario file.
pub fn resolve_scenario(arg: &str, params: &ParamSet) -> Result<Scenario, HarnessError> {
    match Scenario::by_name(arg, params) {
        Ok(s) => Ok(s),
        Err(ScenarioError::Unknown(_)) if Path::new(arg).is_file() => Ok(load_scenario(&read(Path::new(arg))?, params)?),
        Err(e) => Err(e.into()),
    }
}

fn run_one(scenario: &Scenario, params: &ParamSet, kind: GovernorKind, omega: Option<&AdmissibleSet>) -> Result<(String, MetricsReport), HarnessError> {
    let governor = match kind {
        GovernorKind::None => Governor::None,
        GovernorKind::Lpf => Governor::Lpf { tau: params.governor.lpf_tau },
        GovernorKind::Pg => Governor::Pg {
            omega: omega.expect("admissible set built for pg"),
        },
    };
    let record = run_scenario(scenario, params, governor)?;
    if record.events.infeasible > 0 {
        log::warn!("{} governor updates started outside the admissible set", record.events.infeasible);
    }
    Ok((record.to_csv(params), compute_metrics(&record, scenario, params)))
}

fn execute(cli: Cli) -> Result<(), HarnessError> {
    match cli.command {
        Command::Simulate {
            scenario,
            governor,
            config,
            output,
            mas,
        } => {
            let params = params_from(config.as_deref())?;
            let scenario = resolve_scenario(&scenario, &params)?;
            let kind = governor.unwrap_or(scenario.governor);
            let omega = match (kind, mas) {
                (GovernorKind::Pg, Some(path)) => Some(AdmissibleSet::from_json(&read(&path)?)?),
                (GovernorKind::Pg, None) => Some(default_admissible_set(&params)?),
                _ => None,
            };
            let (csv, report) = run_one(&scenario, &params, kind, omega.as_ref())?;
            match output {
                Some(path) => {
                    write(&path, &csv)?;
                    print!("{}", format_table(&[report]));
                }
                None => print!("{csv}"),
            }
        }
        Command::Mas {
            ts,
            eps,
            upper,
            lower,
            horizon_cap,
            config,
            output,
        } => {
            let params = params_from(config.as_deref())?;
            let c = &params.control;
            let model = discretize_zoh(&default_linear_model(), ts.unwrap_or(params.simulation.governor_period))?;
            let set = build_mas(
                &model,
                upper.unwrap_or(units::pa_to_bar(c.p_max - c.p_h2_ref)),
                lower.unwrap_or(units::pa_to_bar(c.p_min - c.p_h2_ref)),
                eps.unwrap_or(params.governor.epsilon_bar),
                horizon_cap.unwrap_or(params.governor.horizon_cap),
            )?;
            let summary = format!("rows: {}\nj_star: {}\nepsilon: {}", set.rows(), set.j_star, set.epsilon);
            match output {
                Some(path) => {
                    write(&path, &set.to_json())?;
                    println!("{summary}");
                }
                None => {
                    println!("{}", set.to_json());
                    eprintln!("{summary}");
                }
            }
        }
        Command::Compare {
            scenario,
            config,
            out_dir,
            json,
        } => {
            let params = params_from(config.as_deref())?;
            let scenario = resolve_scenario(&scenario, &params)?;
            let omega = default_admissible_set(&params)?;
            let (pg, lpf) = std::thread::scope(|s| {
                let pg = s.spawn(|| run_one(&scenario, &params, GovernorKind::Pg, Some(&omega)));
                let lpf = s.spawn(|| run_one(&scenario, &params, GovernorKind::Lpf, None));
                (pg.join().expect("pg run panicked"), lpf.join().expect("lpf run panicked"))
            });
            let (pg, lpf) = (pg?, lpf?);
            fs::create_dir_all(&out_dir).map_err(|source| HarnessError::Io {
                path: out_dir.display().to_string(),
                source,
            })?;
            write(&out_dir.join(format!("{}_pg.csv", scenario.name)), &pg.0)?;
            write(&out_dir.join(format!("{}_lpf.csv", scenario.name)), &lpf.0)?;
            let reports = [pg.1, lpf.1];
            println!("scenario: {}", scenario.name);
            print!("{}", format_table(&reports));
            if let Some(path) = json {
                let text = serde_json::to_string_pretty(&reports).expect("reports serialize");
                write(&path, &text)?;
            }
        }
        Command::Linearize { power_kw, config } => {
            let params = params_from(config.as_deref())?;
            let power = power_kw.map_or(params.governor.nominal_power, |p| p * units::W_PER_KW);
            let numeric = linearize_closed_loop(power, &params)?;
            println!("closed-loop Jacobian at {} kW (states: p_H2 [bar], W_H2,out [Nm3/h], K_i q [Nm3/h]; input: P [kW])", power / units::W_PER_KW);
            print!("{}", format_comparison(&compare_models(&default_linear_model(), &numeric)));
        }
    }
    Ok(())
}

/// Parses `args` (program name first) and runs the command; returns the
/// process exit code.
pub fn run<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() { EXIT_USAGE } else { EXIT_OK };
            let _ = e.print();
            return code;
        }
    };
    match execute(cli) {
        Ok(()) => EXIT_OK,
        Err(e) => {
            eprintln!("error: {e}");
            exit_code(&e)
        }
    }
}
