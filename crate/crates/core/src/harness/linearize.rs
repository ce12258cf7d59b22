//! Numerical Jacobian of the nonlinear pressure loop, in the linear model's
//! coordinates, for comparison against the shipped matrices.

use nalgebra::DMatrix;

use super::HarnessError;
use crate::governor::{default_linear_model, LtiModel};
use crate::params::ParamSet;
use crate::plant::{self, GasGeneration, PlantError, PlantInputs, PlantState};
use crate::regulators;
use crate::units;

// central-difference steps in model units (bar, Nm³/h, kW)
const STATE_STEP: f64 = 1e-4;
const POWER_STEP_KW: f64 = 1e-3;

/// Cathode-side closed-loop derivative in model units at a perturbed point.
/// `dx` is (bar, Nm³/h, Nm³/h) and `dv` kW, both deviations from the point
/// at which `base` sits.
fn model_rate(
    base: &PlantState,
    base_power: f64,
    dx: [f64; 3],
    dv: f64,
    params: &ParamSet,
) -> Result<[f64; 3], PlantError> {
    let m_h2 = params.gas.m_h2;
    let k_i = params.control.k_i;
    let x = PlantState {
        p_o2: base.p_o2,
        p_h2: base.p_h2 + units::bar_to_pa(dx[0]),
        w_h2_out: base.w_h2_out + units::normal_volumetric_to_mass_flow(dx[1], m_h2),
        q: base.q + units::bar_to_pa(dx[2] / k_i),
    };
    let power = base_power + dv * units::W_PER_KW;
    let generation = GasGeneration::at_power(power, params).map_err(|source| PlantError::Electrochem { time: 0.0, source })?;
    // regulators stay continuous here: no clamp on the flow reference
    let inputs = PlantInputs {
        power,
        w_h2_out_ref: regulators::pi_cathode(x.p_h2, x.q, params),
        u_exh: regulators::p_anode(x.p_h2, x.p_o2, params),
    };
    let d = plant::derivatives_with(&x, &inputs, &generation, params);
    Ok([
        units::pa_to_bar(d.p_h2),
        units::mass_flow_to_normal_volumetric(d.w_h2_out, m_h2),
        k_i * units::pa_to_bar(d.q),
    ])
}

/// Continuous linearization of the hydrogen-side closed loop at `power` W.
/// The anode pressure does not enter the hydrogen-side dynamics and is left
/// out, matching the state order of the shipped model.
pub fn linearize_closed_loop(power: f64, params: &ParamSet) -> Result<LtiModel, HarnessError> {
    let base = plant::find_equilibrium(power, params)?;
    let mut a = DMatrix::zeros(3, 3);
    for j in 0..3 {
        let h = STATE_STEP;
        let mut plus = [0.0; 3];
        let mut minus = [0.0; 3];
        plus[j] = h;
        minus[j] = -h;
        let fp = model_rate(&base, power, plus, 0.0, params)?;
        let fm = model_rate(&base, power, minus, 0.0, params)?;
        for i in 0..3 {
            a[(i, j)] = (fp[i] - fm[i]) / (2.0 * h);
        }
    }
    let h = POWER_STEP_KW;
    let fp = model_rate(&base, power, [0.0; 3], h, params)?;
    let fm = model_rate(&base, power, [0.0; 3], -h, params)?;
    let b = DMatrix::from_fn(3, 1, |i, _| (fp[i] - fm[i]) / (2.0 * h));

    let mut model = default_linear_model();
    model.a = a;
    model.b = b;
    model.state_offsets = vec![
        units::pa_to_bar(base.p_h2),
        units::mass_flow_to_normal_volumetric(base.w_h2_out, params.gas.m_h2),
        params.control.k_i * units::pa_to_bar(base.q),
    ];
    model.input_offset = power / units::W_PER_KW;
    model.output_offsets = vec![units::pa_to_bar(base.p_h2)];
    Ok(model)
}

/// Entry-wise comparison of two continuous models, A then B.
#[derive(Debug, Clone, PartialEq)]
pub struct EntryComparison {
    pub label: String,
    pub reference: f64,
    pub numeric: f64,
}

impl EntryComparison {
    pub fn relative_error(&self) -> f64 {
        if self.reference == 0.0 {
            self.numeric.abs()
        } else {
            (self.numeric - self.reference).abs() / self.reference.abs()
        }
    }
}

pub fn compare_models(reference: &LtiModel, numeric: &LtiModel) -> Vec<EntryComparison> {
    let mut out = Vec::new();
    for i in 0..reference.n() {
        for j in 0..reference.n() {
            out.push(EntryComparison {
                label: format!("A[{i}][{j}]"),
                reference: reference.a[(i, j)],
                numeric: numeric.a[(i, j)],
            });
        }
    }
    for i in 0..reference.n() {
        out.push(EntryComparison {
            label: format!("B[{i}]"),
            reference: reference.b[(i, 0)],
            numeric: numeric.b[(i, 0)],
        });
    }
    out
}

pub fn format_comparison(rows: &[EntryComparison]) -> String {
    let mut out = format!("{:<8}  {:>10}  {:>12}  {:>8}\n", "entry", "reference", "numeric", "rel.err");
    for r in rows {
        let rel = if r.reference == 0.0 {
            "-".to_string()
        } else {
            format!("{:.3}", r.relative_error())
        };
        out.push_str(&format!("{:<8}  {:>10.4}  {:>12.6}  {:>8}\n", r.label, r.reference, r.numeric, rel));
    }
    out
}
