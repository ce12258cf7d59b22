//! End-to-end closed-loop runs: plant and regulators stepped with RK4 under a
//! power command shaped by the governor, the low-pass filter or nothing.

use std::fmt::Write as _;

use nalgebra::DVector;

use super::scenario::{GovernorKind, Scenario};
use super::HarnessError;
use crate::governor::{build_mas, default_linear_model, discretize_zoh, AdmissibleSet, GovernorState, RgStep};
use crate::params::ParamSet;
use crate::plant::{self, GasGeneration, PlantError, PlantState, StepEvents};
use crate::regulators;
use crate::units;

pub const CSV_HEADER: &str = "t,P_req_kW,P_app_kW,pH2_bar,pO2_bar,WH2out_Nm3h,WH2gen_Nm3h,u_exh,kappa";

/// How the requested power is turned into applied power.
#[derive(Debug, Clone, Copy)]
pub enum Governor<'a> {
    None,
    Lpf { tau: f64 },
    Pg { omega: &'a AdmissibleSet },
}

impl Governor<'_> {
    pub fn kind(&self) -> GovernorKind {
        match self {
            Governor::None => GovernorKind::None,
            Governor::Lpf { .. } => GovernorKind::Lpf,
            Governor::Pg { .. } => GovernorKind::Pg,
        }
    }
}

/// Builds the admissible set for the default linear model at the configured
/// governor period, pressure bounds and epsilon.
pub fn default_admissible_set(params: &ParamSet) -> Result<AdmissibleSet, HarnessError> {
    let model = discretize_zoh(&default_linear_model(), params.simulation.governor_period)?;
    let c = &params.control;
    let upper = units::pa_to_bar(c.p_max - c.p_h2_ref);
    let lower = units::pa_to_bar(c.p_min - c.p_h2_ref);
    Ok(build_mas(&model, upper, lower, params.governor.epsilon_bar, params.governor.horizon_cap)?)
}

/// One logged sample, SI units.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Sample {
    pub t: f64,
    pub p_req: f64,
    pub p_app: f64,
    pub p_h2: f64,
    pub p_o2: f64,
    pub w_h2_out: f64,
    pub w_h2_gen: f64,
    pub u_exh: f64,
    pub kappa: Option<f64>,
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct RunEvents {
    /// Governor updates that found the state outside the admissible set.
    pub infeasible: usize,
    pub plant: StepEvents,
}

#[derive(Debug, Clone, PartialEq)]
pub struct RunRecord {
    pub scenario: String,
    pub governor: GovernorKind,
    pub ts: f64,
    pub params_hash: String,
    pub samples: Vec<Sample>,
    pub events: RunEvents,
}

impl RunRecord {
    pub fn to_csv(&self, params: &ParamSet) -> String {
        let pg = self.governor == GovernorKind::Pg;
        let mut out = String::with_capacity(self.samples.len() * 160);
        if pg {
            out.push_str(CSV_HEADER);
        } else {
            out.push_str(CSV_HEADER.strip_suffix(",kappa").expect("header ends with kappa"));
        }
        out.push('\n');
        let nm3h = |w: f64| units::mass_flow_to_normal_volumetric(w, params.gas.m_h2);
        for s in &self.samples {
            write!(
                out,
                "{},{},{},{},{},{},{},{}",
                s.t,
                s.p_req / units::W_PER_KW,
                s.p_app / units::W_PER_KW,
                units::pa_to_bar(s.p_h2),
                units::pa_to_bar(s.p_o2),
                nm3h(s.w_h2_out),
                nm3h(s.w_h2_gen),
                s.u_exh
            )
            .expect("writing to a String cannot fail");
            if pg {
                write!(out, ",{}", s.kappa.unwrap_or(f64::NAN)).expect("writing to a String cannot fail");
            }
            out.push('\n');
        }
        out
    }
}

/// Maps plant state and power to the linear model's deviation coordinates:
/// pressure in bar, outlet flow and scaled integrator in Nm³/h, power in kW.
#[derive(Debug, Clone, Copy)]
pub struct ModelCoordinates {
    pub nominal: PlantState,
    pub nominal_power: f64,
    k_i: f64,
    m_h2: f64,
}

impl ModelCoordinates {
    pub fn new(params: &ParamSet) -> Result<Self, PlantError> {
        Ok(ModelCoordinates {
            nominal: plant::find_equilibrium(params.governor.nominal_power, params)?,
            nominal_power: params.governor.nominal_power,
            k_i: params.control.k_i,
            m_h2: params.gas.m_h2,
        })
    }

    pub fn state(&self, x: &PlantState) -> DVector<f64> {
        DVector::from_column_slice(&[
            units::pa_to_bar(x.p_h2 - self.nominal.p_h2),
            units::mass_flow_to_normal_volumetric(x.w_h2_out - self.nominal.w_h2_out, self.m_h2),
            self.k_i * units::pa_to_bar(x.q - self.nominal.q),
        ])
    }

    pub fn power(&self, p: f64) -> f64 {
        (p - self.nominal_power) / units::W_PER_KW
    }

    pub fn power_from_model(&self, v: f64) -> f64 {
        self.nominal_power + v * units::W_PER_KW
    }
}

/// What the governor saw and did at one sample.
#[derive(Debug, Clone)]
pub struct GovernorTrace {
    pub t: f64,
    /// State in model coordinates.
    pub x: DVector<f64>,
    /// Command deviation in force before the update.
    pub v_prev: f64,
    /// Requested deviation.
    pub r: f64,
    pub step: RgStep,
}

/// Runs a scenario from the equilibrium at its first level.
pub fn run_scenario(scenario: &Scenario, params: &ParamSet, governor: Governor<'_>) -> Result<RunRecord, HarnessError> {
    run_scenario_observed(scenario, params, governor, |_| {})
}

/// [`run_scenario`] with a callback after every governor update.
pub fn run_scenario_observed(
    scenario: &Scenario,
    params: &ParamSet,
    governor: Governor<'_>,
    mut observe: impl FnMut(&GovernorTrace),
) -> Result<RunRecord, HarnessError> {
    scenario.validate(params)?;
    let ts = params.simulation.governor_period;
    let substeps = params.substeps();
    let n = (scenario.duration / ts).round() as usize;
    let coords = ModelCoordinates::new(params)?;

    let mut x = plant::find_equilibrium(scenario.level_at(0.0), params)?;
    let mut applied = scenario.level_at(0.0);
    let mut gov = GovernorState::new(coords.power(applied));
    let mut events = RunEvents::default();
    let mut samples = Vec::with_capacity(n + 1);
    let mut prev_request = applied;

    for k in 0..=n {
        let t = k as f64 * ts;
        let request = scenario.level_at(t);
        let mut kappa = None;
        applied = match governor {
            Governor::None => request,
            // exact sampling of the continuous filter driven by the held request
            Governor::Lpf { tau } => {
                if k == 0 {
                    applied
                } else {
                    regulators::lpf_step(applied, prev_request, ts, tau)
                }
            }
            Governor::Pg { omega } => {
                let xm = coords.state(&x);
                let v_prev = gov.v_prev;
                let r = coords.power(request);
                let step = gov.step(&xm, r, omega);
                observe(&GovernorTrace { t, x: xm, v_prev, r, step });
                kappa = Some(step.kappa);
                if step.infeasible {
                    log::info!("t = {t:.1} s: governor state outside the admissible set");
                }
                if step.kappa >= 1.0 {
                    request
                } else {
                    coords.power_from_model(step.v)
                }
            }
        };
        prev_request = request;

        let generation = GasGeneration::at_power(applied, params)
            .map_err(|source| PlantError::Electrochem { time: t, source })?;
        samples.push(Sample {
            t,
            p_req: request,
            p_app: applied,
            p_h2: x.p_h2,
            p_o2: x.p_o2,
            w_h2_out: x.w_h2_out,
            w_h2_gen: generation.h2,
            u_exh: regulators::p_anode(x.p_h2, x.p_o2, params),
            kappa,
        });
        if k < n {
            x = plant::advance_closed_loop(&x, &generation, applied, substeps, t, params, &mut events.plant)?;
        }
    }
    events.infeasible = gov.infeasible_events;

    Ok(RunRecord {
        scenario: scenario.name.clone(),
        governor: governor.kind(),
        ts,
        params_hash: params.hash(),
        samples,
        events,
    })
}
