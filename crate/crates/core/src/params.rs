//! Every tunable number of the model, loaded from a TOML document.
//!
//! The in-memory [`ParamSet`] is strict SI except for the three controller
//! gains, which keep the units the gains are quoted in (Nm³/h per bar,
//! Nm³/h per bar·s, 1/bar), and the governor tightening `epsilon`, which
//! lives in the governor model's output units (bar).

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::units;

/// The parameter set shipped with the crate.
pub const DEFAULT_CONFIG: &str = include_str!("../configs/default.toml");

/// Default anode equalizer gain, 1/bar.
pub const DEFAULT_K_P_AN: f64 = -20.0;
pub const DEFAULT_EPSILON_BAR: f64 = 0.01;
pub const DEFAULT_DT: f64 = 0.01;
pub const DEFAULT_GOVERNOR_PERIOD: f64 = 0.1;
pub const DEFAULT_HORIZON_CAP: usize = 1000;
pub const DEFAULT_LPF_TAU: f64 = 14.5;

#[derive(Debug, thiserror::Error, PartialEq)]
pub enum ParamError {
    #[error("config parse error: {0}")]
    Parse(String),
    #[error("missing required key `{0}`")]
    Missing(String),
    #[error("`{key}` must be strictly positive (got {value})")]
    NonPositive { key: String, value: f64 },
    #[error("invalid value for `{key}`: {reason}")]
    Invalid { key: String, reason: String },
    #[error("`{0}` and its alternate unit key are both set")]
    Conflict(String),
}

/// Temperature scale a set of empirical coefficients was fitted in.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "lowercase")]
pub enum TemperatureScale {
    #[default]
    Celsius,
    Kelvin,
}

impl TemperatureScale {
    /// Express a Kelvin temperature on this scale.
    pub fn from_kelvin(self, t_kelvin: f64) -> f64 {
        match self {
            TemperatureScale::Celsius => units::kelvin_to_celsius(t_kelvin),
            TemperatureScale::Kelvin => t_kelvin,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
pub enum LogBase {
    #[default]
    #[serde(rename = "e")]
    Natural,
    #[serde(rename = "10")]
    Ten,
}

impl LogBase {
    pub fn log(self, x: f64) -> f64 {
        match self {
            LogBase::Natural => x.ln(),
            LogBase::Ten => x.log10(),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct GasConstants {
    pub r_o2: f64,
    pub r_h2: f64,
    pub gamma: f64,
    pub faraday: f64,
    pub m_h2: f64,
    pub m_o2: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct StackParams {
    pub v_an: f64,
    pub v_ca: f64,
    pub tau_ca: f64,
    pub c_d: f64,
    pub a_t: f64,
    pub n_cell: u32,
    pub a_cell: f64,
    /// Stack temperature, K.
    pub t_el: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ControlParams {
    /// Nm³/(h·bar)
    pub k_p_ca: f64,
    /// Nm³/(h·bar·s)
    pub k_i: f64,
    /// 1/bar
    pub k_p_an: f64,
    pub p_h2_ref: f64,
    pub p_min: f64,
    pub p_max: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct PolarizationCoeffs {
    pub r1: f64,
    pub r2: f64,
    pub s1: f64,
    pub s2: f64,
    pub s3: f64,
    pub t1: f64,
    pub t2: f64,
    pub t3: f64,
    pub temperature: TemperatureScale,
    pub log_base: LogBase,
}

#[derive(Debug, Clone, PartialEq)]
pub struct FaradayCoeffs {
    pub a: [f64; 5],
    pub temperature: TemperatureScale,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SolverSettings {
    pub power_min: f64,
    pub power_max: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SimulationSettings {
    /// RK4 step, s.
    pub dt: f64,
    /// Governor sample time, s.
    pub governor_period: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct GovernorSettings {
    pub epsilon_bar: f64,
    pub horizon_cap: usize,
    pub lpf_tau: f64,
    pub nominal_power: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ScenarioSettings {
    pub large_low: f64,
    pub large_high: f64,
    pub small_base: f64,
    pub small_step: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ParamSet {
    pub gas: GasConstants,
    pub stack: StackParams,
    pub control: ControlParams,
    pub polarization: PolarizationCoeffs,
    pub faraday_efficiency: FaradayCoeffs,
    pub solver: SolverSettings,
    pub simulation: SimulationSettings,
    pub governor: GovernorSettings,
    pub scenarios: ScenarioSettings,
}

impl Default for ParamSet {
    fn default() -> Self {
        load_params(DEFAULT_CONFIG).expect("shipped default config is valid")
    }
}

impl ParamSet {
    /// Number of RK4 substeps per governor period.
    pub fn substeps(&self) -> usize {
        (self.simulation.governor_period / self.simulation.dt).round() as usize
    }

    /// Hex SHA-256 of the emitted document; identifies a parameter set in run records.
    pub fn hash(&self) -> String {
        hex_digest(emit_params(self).as_bytes())
    }
}

pub(crate) fn hex_digest(bytes: &[u8]) -> String {
    Sha256::digest(bytes)
        .iter()
        .map(|b| format!("{b:02x}"))
        .collect()
}

// ---------------------------------------------------------------------------
// File schema

#[derive(Debug, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct ParamFile {
    gas: Option<GasFile>,
    stack: Option<StackFile>,
    control: Option<ControlFile>,
    polarization: Option<PolarizationFile>,
    faraday_efficiency: Option<FaradayFile>,
    #[serde(default)]
    solver: SolverFile,
    #[serde(default)]
    simulation: SimulationFile,
    #[serde(default)]
    governor: GovernorFile,
    #[serde(default)]
    scenarios: ScenariosFile,
}

#[derive(Debug, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct GasFile {
    r_o2: Option<f64>,
    r_h2: Option<f64>,
    gamma: Option<f64>,
    faraday: Option<f64>,
    m_h2: Option<f64>,
    m_o2: Option<f64>,
}

#[derive(Debug, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct StackFile {
    v_an: Option<f64>,
    v_ca: Option<f64>,
    tau_ca: Option<f64>,
    c_d: Option<f64>,
    a_t: Option<f64>,
    n_cell: Option<i64>,
    a_cell: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    t_el_kelvin: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    t_el_celsius: Option<f64>,
}

#[derive(Debug, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct ControlFile {
    k_p_ca: Option<f64>,
    k_i: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    k_p_an: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    p_h2_ref_pa: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    p_h2_ref_bar: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    p_min_pa: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    p_min_bar: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    p_max_pa: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    p_max_bar: Option<f64>,
}

#[derive(Debug, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct PolarizationFile {
    r1: Option<f64>,
    r2: Option<f64>,
    s1: Option<f64>,
    s2: Option<f64>,
    s3: Option<f64>,
    t1: Option<f64>,
    t2: Option<f64>,
    t3: Option<f64>,
    #[serde(default)]
    temperature: TemperatureScale,
    #[serde(default)]
    log_base: LogBase,
}

#[derive(Debug, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct FaradayFile {
    a1: Option<f64>,
    a2: Option<f64>,
    a3: Option<f64>,
    a4: Option<f64>,
    a5: Option<f64>,
    #[serde(default)]
    temperature: TemperatureScale,
}

#[derive(Debug, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct SolverFile {
    power_min_w: Option<f64>,
    power_max_w: Option<f64>,
}

#[derive(Debug, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct SimulationFile {
    dt: Option<f64>,
    governor_period: Option<f64>,
}

#[derive(Debug, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct GovernorFile {
    epsilon_bar: Option<f64>,
    horizon_cap: Option<i64>,
    lpf_tau: Option<f64>,
    nominal_power_w: Option<f64>,
}

#[derive(Debug, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct ScenariosFile {
    large_low_w: Option<f64>,
    large_high_w: Option<f64>,
    small_base_w: Option<f64>,
    small_step_w: Option<f64>,
}

fn section<'a, T>(value: &'a Option<T>, name: &str) -> Result<&'a T, ParamError> {
    value.as_ref().ok_or_else(|| ParamError::Missing(name.to_string()))
}

fn required(value: Option<f64>, key: &str) -> Result<f64, ParamError> {
    let v = value.ok_or_else(|| ParamError::Missing(key.to_string()))?;
    finite(v, key)
}

fn finite(v: f64, key: &str) -> Result<f64, ParamError> {
    if v.is_finite() {
        Ok(v)
    } else {
        Err(ParamError::Invalid {
            key: key.to_string(),
            reason: "not a finite number".into(),
        })
    }
}

fn positive(value: Option<f64>, key: &str) -> Result<f64, ParamError> {
    let v = required(value, key)?;
    if v > 0.0 {
        Ok(v)
    } else {
        Err(ParamError::NonPositive {
            key: key.to_string(),
            value: v,
        })
    }
}

fn positive_or(value: Option<f64>, default: f64, key: &str) -> Result<f64, ParamError> {
    positive(Some(value.unwrap_or(default)), key)
}

/// Reads a pressure given either in Pa or in bar, returning Pa.
fn pressure(pa: Option<f64>, bar: Option<f64>, key: &str) -> Result<f64, ParamError> {
    match (pa, bar) {
        (Some(_), Some(_)) => Err(ParamError::Conflict(format!("{key}_pa"))),
        (Some(p), None) => positive(Some(p), &format!("{key}_pa")),
        (None, Some(b)) => positive(Some(b), &format!("{key}_bar")).map(units::bar_to_pa),
        (None, None) => Err(ParamError::Missing(format!("{key}_bar"))),
    }
}

/// Parses and validates a parameter document.
pub fn load_params(text: &str) -> Result<ParamSet, ParamError> {
    let file: ParamFile = toml::from_str(text).map_err(|e| ParamError::Parse(e.to_string()))?;

    let g = section(&file.gas, "gas")?;
    let gas = GasConstants {
        r_o2: positive(g.r_o2, "gas.r_o2")?,
        r_h2: positive(g.r_h2, "gas.r_h2")?,
        gamma: positive(g.gamma, "gas.gamma")?,
        faraday: positive(g.faraday, "gas.faraday")?,
        m_h2: positive(g.m_h2, "gas.m_h2")?,
        m_o2: positive(g.m_o2, "gas.m_o2")?,
    };
    if gas.gamma <= 1.0 {
        return Err(ParamError::Invalid {
            key: "gas.gamma".into(),
            reason: format!("must exceed 1 (got {})", gas.gamma),
        });
    }

    let s = section(&file.stack, "stack")?;
    let n_cell = s
        .n_cell
        .ok_or_else(|| ParamError::Missing("stack.n_cell".into()))?;
    if n_cell < 1 || n_cell > u32::MAX as i64 {
        return Err(ParamError::Invalid {
            key: "stack.n_cell".into(),
            reason: format!("must be at least 1 (got {n_cell})"),
        });
    }
    let t_el = match (s.t_el_kelvin, s.t_el_celsius) {
        (Some(_), Some(_)) => return Err(ParamError::Conflict("stack.t_el_kelvin".into())),
        (Some(k), None) => positive(Some(k), "stack.t_el_kelvin")?,
        (None, Some(c)) => positive(
            Some(units::celsius_to_kelvin(finite(c, "stack.t_el_celsius")?)),
            "stack.t_el_celsius",
        )?,
        (None, None) => return Err(ParamError::Missing("stack.t_el_celsius".into())),
    };
    let stack = StackParams {
        v_an: positive(s.v_an, "stack.v_an")?,
        v_ca: positive(s.v_ca, "stack.v_ca")?,
        tau_ca: positive(s.tau_ca, "stack.tau_ca")?,
        c_d: positive(s.c_d, "stack.c_d")?,
        a_t: positive(s.a_t, "stack.a_t")?,
        n_cell: n_cell as u32,
        a_cell: positive(s.a_cell, "stack.a_cell")?,
        t_el,
    };

    let c = section(&file.control, "control")?;
    let control = ControlParams {
        k_p_ca: required(c.k_p_ca, "control.k_p_ca")?,
        k_i: required(c.k_i, "control.k_i")?,
        k_p_an: finite(c.k_p_an.unwrap_or(DEFAULT_K_P_AN), "control.k_p_an")?,
        p_h2_ref: pressure(c.p_h2_ref_pa, c.p_h2_ref_bar, "control.p_h2_ref")?,
        p_min: pressure(c.p_min_pa, c.p_min_bar, "control.p_min")?,
        p_max: pressure(c.p_max_pa, c.p_max_bar, "control.p_max")?,
    };
    if control.p_min >= control.p_max {
        return Err(ParamError::Invalid {
            key: "control.p_min".into(),
            reason: "p_min must be below p_max".into(),
        });
    }
    if !(control.p_min < control.p_h2_ref && control.p_h2_ref < control.p_max) {
        return Err(ParamError::Invalid {
            key: "control.p_h2_ref".into(),
            reason: "setpoint must lie strictly between p_min and p_max".into(),
        });
    }

    let p = section(&file.polarization, "polarization")?;
    let polarization = PolarizationCoeffs {
        r1: required(p.r1, "polarization.r1")?,
        r2: required(p.r2, "polarization.r2")?,
        s1: required(p.s1, "polarization.s1")?,
        s2: required(p.s2, "polarization.s2")?,
        s3: required(p.s3, "polarization.s3")?,
        t1: required(p.t1, "polarization.t1")?,
        t2: required(p.t2, "polarization.t2")?,
        t3: required(p.t3, "polarization.t3")?,
        temperature: p.temperature,
        log_base: p.log_base,
    };

    let f = section(&file.faraday_efficiency, "faraday_efficiency")?;
    let a1 = positive(f.a1, "faraday_efficiency.a1")?;
    if a1 > 1.0 {
        return Err(ParamError::Invalid {
            key: "faraday_efficiency.a1".into(),
            reason: format!("must not exceed 1 (got {a1})"),
        });
    }
    let faraday_efficiency = FaradayCoeffs {
        a: [
            a1,
            required(f.a2, "faraday_efficiency.a2")?,
            required(f.a3, "faraday_efficiency.a3")?,
            required(f.a4, "faraday_efficiency.a4")?,
            required(f.a5, "faraday_efficiency.a5")?,
        ],
        temperature: f.temperature,
    };

    let solver = SolverSettings {
        power_min: finite(file.solver.power_min_w.unwrap_or(100.0), "solver.power_min_w")?,
        power_max: positive_or(file.solver.power_max_w, 30_000.0, "solver.power_max_w")?,
    };
    if solver.power_min < 0.0 || solver.power_min >= solver.power_max {
        return Err(ParamError::Invalid {
            key: "solver.power_min_w".into(),
            reason: "bracket must satisfy 0 <= power_min < power_max".into(),
        });
    }

    let simulation = SimulationSettings {
        dt: positive_or(file.simulation.dt, DEFAULT_DT, "simulation.dt")?,
        governor_period: positive_or(
            file.simulation.governor_period,
            DEFAULT_GOVERNOR_PERIOD,
            "simulation.governor_period",
        )?,
    };
    let ratio = simulation.governor_period / simulation.dt;
    if ratio < 1.0 - 1e-9 || (ratio - ratio.round()).abs() > 1e-9 * ratio {
        return Err(ParamError::Invalid {
            key: "simulation.dt".into(),
            reason: "governor_period must be an integer multiple of dt".into(),
        });
    }

    let horizon_cap = file
        .governor
        .horizon_cap
        .unwrap_or(DEFAULT_HORIZON_CAP as i64);
    if horizon_cap < 1 {
        return Err(ParamError::NonPositive {
            key: "governor.horizon_cap".into(),
            value: horizon_cap as f64,
        });
    }
    let governor = GovernorSettings {
        epsilon_bar: positive_or(
            file.governor.epsilon_bar,
            DEFAULT_EPSILON_BAR,
            "governor.epsilon_bar",
        )?,
        horizon_cap: horizon_cap as usize,
        lpf_tau: positive_or(file.governor.lpf_tau, DEFAULT_LPF_TAU, "governor.lpf_tau")?,
        nominal_power: positive_or(
            file.governor.nominal_power_w,
            7000.0,
            "governor.nominal_power_w",
        )?,
    };

    let sc = &file.scenarios;
    let scenarios = ScenarioSettings {
        large_low: positive_or(sc.large_low_w, 3000.0, "scenarios.large_low_w")?,
        large_high: positive_or(sc.large_high_w, 14_000.0, "scenarios.large_high_w")?,
        small_base: positive_or(sc.small_base_w, 7000.0, "scenarios.small_base_w")?,
        small_step: positive_or(sc.small_step_w, 1000.0, "scenarios.small_step_w")?,
    };

    Ok(ParamSet {
        gas,
        stack,
        control,
        polarization,
        faraday_efficiency,
        solver,
        simulation,
        governor,
        scenarios,
    })
}

/// Writes a parameter set back out as a TOML document. Values are emitted in
/// the SI key variants so that `load_params(&emit_params(p)) == p` exactly.
pub fn emit_params(p: &ParamSet) -> String {
    let file = ParamFile {
        gas: Some(GasFile {
            r_o2: Some(p.gas.r_o2),
            r_h2: Some(p.gas.r_h2),
            gamma: Some(p.gas.gamma),
            faraday: Some(p.gas.faraday),
            m_h2: Some(p.gas.m_h2),
            m_o2: Some(p.gas.m_o2),
        }),
        stack: Some(StackFile {
            v_an: Some(p.stack.v_an),
            v_ca: Some(p.stack.v_ca),
            tau_ca: Some(p.stack.tau_ca),
            c_d: Some(p.stack.c_d),
            a_t: Some(p.stack.a_t),
            n_cell: Some(p.stack.n_cell as i64),
            a_cell: Some(p.stack.a_cell),
            t_el_kelvin: Some(p.stack.t_el),
            t_el_celsius: None,
        }),
        control: Some(ControlFile {
            k_p_ca: Some(p.control.k_p_ca),
            k_i: Some(p.control.k_i),
            k_p_an: Some(p.control.k_p_an),
            p_h2_ref_pa: Some(p.control.p_h2_ref),
            p_min_pa: Some(p.control.p_min),
            p_max_pa: Some(p.control.p_max),
            ..Default::default()
        }),
        polarization: Some(PolarizationFile {
            r1: Some(p.polarization.r1),
            r2: Some(p.polarization.r2),
            s1: Some(p.polarization.s1),
            s2: Some(p.polarization.s2),
            s3: Some(p.polarization.s3),
            t1: Some(p.polarization.t1),
            t2: Some(p.polarization.t2),
            t3: Some(p.polarization.t3),
            temperature: p.polarization.temperature,
            log_base: p.polarization.log_base,
        }),
        faraday_efficiency: Some(FaradayFile {
            a1: Some(p.faraday_efficiency.a[0]),
            a2: Some(p.faraday_efficiency.a[1]),
            a3: Some(p.faraday_efficiency.a[2]),
            a4: Some(p.faraday_efficiency.a[3]),
            a5: Some(p.faraday_efficiency.a[4]),
            temperature: p.faraday_efficiency.temperature,
        }),
        solver: SolverFile {
            power_min_w: Some(p.solver.power_min),
            power_max_w: Some(p.solver.power_max),
        },
        simulation: SimulationFile {
            dt: Some(p.simulation.dt),
            governor_period: Some(p.simulation.governor_period),
        },
        governor: GovernorFile {
            epsilon_bar: Some(p.governor.epsilon_bar),
            horizon_cap: Some(p.governor.horizon_cap as i64),
            lpf_tau: Some(p.governor.lpf_tau),
            nominal_power_w: Some(p.governor.nominal_power),
        },
        scenarios: ScenariosFile {
            large_low_w: Some(p.scenarios.large_low),
            large_high_w: Some(p.scenarios.large_high),
            small_base_w: Some(p.scenarios.small_base),
            small_step_w: Some(p.scenarios.small_step),
        },
    };
    toml::to_string(&file).expect("parameter file serializes")
}
