//! Nonlinear gas dynamics of the electrolyzer, integrated with fixed-step
//! RK4. The state holds both electrode pressures, the lagged hydrogen outlet
//! flow and the PI integrator.

use std::ops::{Add, Mul};

use crate::electrochem::{self, ElectrochemError};
use crate::params::ParamSet;
use crate::regulators;
use crate::units;

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum PlantError {
    #[error("at t = {time} s: {source}")]
    Electrochem {
        time: f64,
        #[source]
        source: ElectrochemError,
    },
    #[error("numeric blow-up at t = {time} s: {state:?}")]
    BlowUp { time: f64, state: PlantState },
    #[error("no equilibrium at {power} W: {reason}")]
    NoEquilibrium { power: f64, reason: String },
}

/// Plant state in SI: pressures in Pa, outlet flow in kg/s, integrator in Pa·s.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct PlantState {
    pub p_o2: f64,
    pub p_h2: f64,
    pub w_h2_out: f64,
    pub q: f64,
}

impl PlantState {
    pub fn is_finite(&self) -> bool {
        self.p_o2.is_finite() && self.p_h2.is_finite() && self.w_h2_out.is_finite() && self.q.is_finite()
    }

    pub fn to_array(self) -> [f64; 4] {
        [self.p_o2, self.p_h2, self.w_h2_out, self.q]
    }

    pub fn from_array(a: [f64; 4]) -> Self {
        PlantState {
            p_o2: a[0],
            p_h2: a[1],
            w_h2_out: a[2],
            q: a[3],
        }
    }
}

impl Add for PlantState {
    type Output = PlantState;
    fn add(self, o: PlantState) -> PlantState {
        PlantState {
            p_o2: self.p_o2 + o.p_o2,
            p_h2: self.p_h2 + o.p_h2,
            w_h2_out: self.w_h2_out + o.w_h2_out,
            q: self.q + o.q,
        }
    }
}

impl Mul<f64> for PlantState {
    type Output = PlantState;
    fn mul(self, k: f64) -> PlantState {
        PlantState {
            p_o2: self.p_o2 * k,
            p_h2: self.p_h2 * k,
            w_h2_out: self.w_h2_out * k,
            q: self.q * k,
        }
    }
}

/// Inputs held over one integration step.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PlantInputs {
    /// Electric power applied to the stack, W.
    pub power: f64,
    /// Hydrogen outlet flow reference, kg/s.
    pub w_h2_out_ref: f64,
    /// Exhaust valve opening in [0, 1].
    pub u_exh: f64,
}

/// Gas generation at a fixed input power, as mass flows in kg/s.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct GasGeneration {
    pub h2: f64,
    pub o2: f64,
}

impl GasGeneration {
    /// Generation at `power` watts. Zero power means the stack is off.
    pub fn at_power(power: f64, params: &ParamSet) -> Result<Self, ElectrochemError> {
        if power == 0.0 {
            return Ok(GasGeneration::default());
        }
        let op = electrochem::solve_operating_point(power, params)?;
        let rates = electrochem::generation_rates(op.i_st, op.eta_f, params);
        Ok(GasGeneration {
            h2: units::molar_to_mass_flow(rates.h2, params.gas.m_h2),
            o2: units::molar_to_mass_flow(rates.o2, params.gas.m_o2),
        })
    }

    /// Hydrogen generation in Nm³/h.
    pub fn h2_nm3_per_h(&self, params: &ParamSet) -> f64 {
        units::mass_flow_to_normal_volumetric(self.h2, params.gas.m_h2)
    }
}

/// γ^½ (2/(γ+1))^((γ+1)/(2(γ−1)))
pub fn choked_flow_coefficient(gamma: f64) -> f64 {
    gamma.sqrt() * (2.0 / (gamma + 1.0)).powf((gamma + 1.0) / (2.0 * (gamma - 1.0)))
}

/// Oxygen mass flow through the exhaust valve under choked conditions, kg/s.
pub fn exhaust_flow(p_o2: f64, u_exh: f64, params: &ParamSet) -> f64 {
    let s = &params.stack;
    u_exh * s.c_d * s.a_t * p_o2 / (params.gas.r_o2 * s.t_el).sqrt()
        * choked_flow_coefficient(params.gas.gamma)
}

/// State derivative with generation already resolved for the held input power.
pub fn derivatives_with(
    state: &PlantState,
    inputs: &PlantInputs,
    generation: &GasGeneration,
    params: &ParamSet,
) -> PlantState {
    let (g, s) = (&params.gas, &params.stack);
    let w_o2_out = exhaust_flow(state.p_o2, inputs.u_exh, params);
    PlantState {
        p_o2: g.r_o2 * s.t_el / s.v_an * (generation.o2 - w_o2_out),
        p_h2: g.r_h2 * s.t_el / s.v_ca * (generation.h2 - state.w_h2_out),
        w_h2_out: (inputs.w_h2_out_ref - state.w_h2_out) / s.tau_ca,
        q: params.control.p_h2_ref - state.p_h2,
    }
}

/// State derivative; solves the operating point for `inputs.power`.
pub fn derivatives(
    state: &PlantState,
    inputs: &PlantInputs,
    params: &ParamSet,
) -> Result<PlantState, ElectrochemError> {
    let generation = GasGeneration::at_power(inputs.power, params)?;
    Ok(derivatives_with(state, inputs, &generation, params))
}

/// One classic RK4 step of length `dt` with inputs held constant.
/// `t` is the step start time, used only to annotate errors.
pub fn step_rk4(
    state: &PlantState,
    inputs: &PlantInputs,
    generation: &GasGeneration,
    dt: f64,
    t: f64,
    params: &ParamSet,
) -> Result<PlantState, PlantError> {
    let f = |x: &PlantState| derivatives_with(x, inputs, generation, params);
    let x = *state;
    let k1 = f(&x);
    let k2 = f(&(x + k1 * (0.5 * dt)));
    let k3 = f(&(x + k2 * (0.5 * dt)));
    let k4 = f(&(x + k3 * dt));
    let next = x + (k1 + k2 * 2.0 + k3 * 2.0 + k4) * (dt / 6.0);
    if !next.is_finite() || next.p_o2 <= 0.0 || next.p_h2 <= 0.0 {
        return Err(PlantError::BlowUp {
            time: t + dt,
            state: next,
        });
    }
    Ok(next)
}

/// Regulator outputs for the current state. The second value is true when the
/// PI reference had to be clamped at zero (the compressor cannot reverse).
pub fn regulator_inputs(state: &PlantState, power: f64, params: &ParamSet) -> (PlantInputs, bool) {
    let w_ref = regulators::pi_cathode(state.p_h2, state.q, params);
    let clamped = w_ref < 0.0;
    (
        PlantInputs {
            power,
            w_h2_out_ref: w_ref.max(0.0),
            u_exh: regulators::p_anode(state.p_h2, state.p_o2, params),
        },
        clamped,
    )
}

/// Counters for events raised while advancing the closed loop.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct StepEvents {
    /// Substeps where the PI flow reference was clamped at zero.
    pub reference_clamps: usize,
    /// Substeps where the outlet-flow state went negative and was reset to zero.
    pub backflow_clamps: usize,
}

/// Advances the plant with its regulators over `steps` RK4 substeps at a
/// constant applied power. Regulators are re-evaluated at every substep.
pub fn advance_closed_loop(
    state: &PlantState,
    generation: &GasGeneration,
    power: f64,
    steps: usize,
    t0: f64,
    params: &ParamSet,
    events: &mut StepEvents,
) -> Result<PlantState, PlantError> {
    let dt = params.simulation.dt;
    let mut x = *state;
    for k in 0..steps {
        let (inputs, clamped) = regulator_inputs(&x, power, params);
        if clamped {
            events.reference_clamps += 1;
        }
        x = step_rk4(&x, &inputs, generation, dt, t0 + k as f64 * dt, params)?;
        if x.w_h2_out < 0.0 {
            log::debug!("outlet flow {} kg/s clamped at zero", x.w_h2_out);
            x.w_h2_out = 0.0;
            events.backflow_clamps += 1;
        }
    }
    Ok(x)
}

/// Steady state of the closed loop at constant input power.
///
/// Hydrogen pressure sits at the setpoint with the outlet flow equal to
/// generation, so the integrator carries the whole PI output. Oxygen pressure
/// settles where the equalizer-driven exhaust balances oxygen generation.
pub fn find_equilibrium(power: f64, params: &ParamSet) -> Result<PlantState, PlantError> {
    let generation = GasGeneration::at_power(power, params).map_err(|source| {
        PlantError::Electrochem { time: 0.0, source }
    })?;
    let c = &params.control;
    let p_h2 = c.p_h2_ref;
    let w_out = generation.h2;
    let w_out_nm3h = units::mass_flow_to_normal_volumetric(w_out, params.gas.m_h2);
    let q = if w_out_nm3h == 0.0 {
        0.0
    } else if c.k_i == 0.0 {
        return Err(PlantError::NoEquilibrium {
            power,
            reason: "zero integral gain cannot hold a nonzero outlet flow".into(),
        });
    } else {
        units::bar_to_pa(w_out_nm3h / c.k_i)
    };
    let p_o2 = anode_balance_pressure(generation.o2, p_h2, params)
        .ok_or_else(|| PlantError::NoEquilibrium {
            power,
            reason: "exhaust valve cannot balance oxygen generation".into(),
        })?;
    Ok(PlantState {
        p_o2,
        p_h2,
        w_h2_out: w_out,
        q,
    })
}

/// Oxygen pressure at which the valve flow equals `w_o2` for a hydrogen-side
/// pressure `p_h2`, on the stable branch of the valve law.
fn anode_balance_pressure(w_o2: f64, p_h2: f64, params: &ParamSet) -> Option<f64> {
    let valve = |p: f64| exhaust_flow(p, regulators::p_anode(p_h2, p, params), params);
    if w_o2 == 0.0 {
        // Closed valve at balance for a negative gain, empty anode otherwise.
        return (params.control.k_p_an < 0.0).then_some(p_h2);
    }
    let k = params.control.k_p_an;
    let (lo, hi) = if k < 0.0 {
        // valve flow increases with p_o2 above p_h2 and saturates at u = 1
        let full_open = p_h2 + units::bar_to_pa(1.0 / k.abs());
        let unit_flow = exhaust_flow(1.0, 1.0, params);
        (p_h2, full_open.max(w_o2 / unit_flow) * (1.0 + 1e-9) + 1.0)
    } else if k > 0.0 {
        // valve opens below p_h2; the stable root lies left of the flow peak
        let n = 2000;
        let peak = (1..n)
            .map(|j| p_h2 * j as f64 / n as f64)
            .max_by(|a, b| valve(*a).total_cmp(&valve(*b)))?;
        (0.0, peak)
    } else {
        return None;
    };
    if valve(hi) < w_o2 {
        return None;
    }
    let (mut lo, mut hi) = (lo, hi);
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if valve(mid) < w_o2 {
            lo = mid;
        } else {
            hi = mid;
        }
        if hi - lo <= 4.0 * f64::EPSILON * hi {
            break;
        }
    }
    Some(0.5 * (lo + hi))
}
