use nalgebra::DVector;

use super::AdmissibleSet;

/// Slack allowed on membership before a state counts as outside the set.
pub const MEMBERSHIP_TOLERANCE: f64 = 1e-9;

/// Result of one governor update.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RgStep {
    /// Applied command deviation.
    pub v: f64,
    pub kappa: f64,
    /// True when `(x, v_prev)` was already outside the set; the previous
    /// command is held.
    pub infeasible: bool,
}

/// Largest `kappa` in [0, 1] with `Hx x + Hv (v_prev + kappa (r - v_prev)) <= h`,
/// by intersecting the per-row intervals.
pub fn rg_update(x: &DVector<f64>, v_prev: f64, r: f64, omega: &AdmissibleSet) -> RgStep {
    let base = &omega.hx * x + &omega.hv * v_prev;
    let dir = r - v_prev;
    let mut kappa = 1.0f64;
    let mut infeasible = false;
    for i in 0..omega.rows() {
        let slack = omega.h[i] - base[i];
        if slack < -MEMBERSHIP_TOLERANCE * (1.0 + omega.h[i].abs()) {
            infeasible = true;
            break;
        }
        let b = omega.hv[i] * dir;
        if b > 0.0 {
            kappa = kappa.min(slack.max(0.0) / b);
        }
    }
    if infeasible {
        log::debug!("state outside the admissible set; holding command {v_prev}");
        return RgStep {
            v: v_prev,
            kappa: 0.0,
            infeasible: true,
        };
    }
    let kappa = kappa.clamp(0.0, 1.0);
    let v = if kappa >= 1.0 { r } else { v_prev + kappa * dir };
    RgStep {
        v,
        kappa,
        infeasible: false,
    }
}

/// Per-run governor memory.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GovernorState {
    /// Last applied command deviation.
    pub v_prev: f64,
    pub kappa_last: f64,
    pub infeasible_events: usize,
}

impl GovernorState {
    pub fn new(v0: f64) -> Self {
        GovernorState {
            v_prev: v0,
            kappa_last: 1.0,
            infeasible_events: 0,
        }
    }

    pub fn step(&mut self, x: &DVector<f64>, r: f64, omega: &AdmissibleSet) -> RgStep {
        let out = rg_update(x, self.v_prev, r, omega);
        self.v_prev = out.v;
        self.kappa_last = out.kappa;
        if out.infeasible {
            self.infeasible_events += 1;
        }
        out
    }
}
