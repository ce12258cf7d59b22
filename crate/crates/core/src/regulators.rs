//! Inner-loop regulators and the low-pass-filter baseline.

use crate::params::ParamSet;
use crate::units;

/// Cathode PI controller: hydrogen outlet flow reference in kg/s.
///
/// The gains are quoted in Nm³/h per bar (and per bar·s), so the error and
/// integrator are taken to bar / bar·s, the law is evaluated in Nm³/h and the
/// result converted to a mass flow. The output is not clamped here.
pub fn pi_cathode(p_h2: f64, q: f64, params: &ParamSet) -> f64 {
    let c = &params.control;
    let e_bar = units::pa_to_bar(c.p_h2_ref - p_h2);
    let q_bar_s = units::pa_to_bar(q);
    let nm3_per_h = c.k_p_ca * e_bar + c.k_i * q_bar_s;
    units::normal_volumetric_to_mass_flow(nm3_per_h, params.gas.m_h2)
}

/// Anode proportional equalizer: exhaust valve opening in [0, 1].
pub fn p_anode(p_h2: f64, p_o2: f64, params: &ParamSet) -> f64 {
    (params.control.k_p_an * units::pa_to_bar(p_h2 - p_o2)).clamp(0.0, 1.0)
}

/// One sample of a first-order lag with time constant `tau`, discretized
/// exactly under a zero-order hold on `r`.
pub fn lpf_step(v_prev: f64, r: f64, dt: f64, tau: f64) -> f64 {
    let alpha = -(-dt / tau).exp_m1();
    v_prev + alpha * (r - v_prev)
}
