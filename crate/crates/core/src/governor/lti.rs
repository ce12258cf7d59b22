use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use super::GovernorError;

/// Linear time-invariant model `x' = A x + B v`, `y = C x + D v`, continuous
/// when `ts` is `None` and discrete with sample time `ts` otherwise.
///
/// Signals are deviations from a nominal point; `state_offsets`,
/// `input_offset` and `output_offsets` record that point in the units named
/// by the labels.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LtiModel {
    pub a: DMatrix<f64>,
    pub b: DMatrix<f64>,
    pub c: DMatrix<f64>,
    pub d: DMatrix<f64>,
    pub ts: Option<f64>,
    pub state_labels: Vec<String>,
    pub input_label: String,
    pub output_labels: Vec<String>,
    pub state_offsets: Vec<f64>,
    pub input_offset: f64,
    pub output_offsets: Vec<f64>,
}

impl LtiModel {
    pub fn n(&self) -> usize {
        self.a.nrows()
    }

    pub fn m(&self) -> usize {
        self.c.nrows()
    }

    /// Minimal unlabeled model, handy for small examples.
    pub fn new(
        a: DMatrix<f64>,
        b: DMatrix<f64>,
        c: DMatrix<f64>,
        d: DMatrix<f64>,
        ts: Option<f64>,
    ) -> Result<Self, GovernorError> {
        let (n, m) = (a.nrows(), c.nrows());
        let model = LtiModel {
            state_labels: (0..n).map(|i| format!("x{i}")).collect(),
            input_label: "v".into(),
            output_labels: (0..m).map(|i| format!("y{i}")).collect(),
            state_offsets: vec![0.0; n],
            input_offset: 0.0,
            output_offsets: vec![0.0; m],
            a,
            b,
            c,
            d,
            ts,
        };
        model.check_dimensions()?;
        Ok(model)
    }

    pub fn check_dimensions(&self) -> Result<(), GovernorError> {
        let n = self.a.nrows();
        let m = self.c.nrows();
        let bad = |what: &str| Err(GovernorError::Dimension(what.to_string()));
        if self.a.ncols() != n {
            return bad("A must be square");
        }
        if self.b.shape() != (n, 1) {
            return bad("B must be n x 1");
        }
        if self.c.ncols() != n {
            return bad("C must be m x n");
        }
        if self.d.shape() != (m, 1) {
            return bad("D must be m x 1");
        }
        if self.state_labels.len() != n || self.state_offsets.len() != n {
            return bad("state labels/offsets must have n entries");
        }
        if self.output_labels.len() != m || self.output_offsets.len() != m {
            return bad("output labels/offsets must have m entries");
        }
        Ok(())
    }

    pub fn eigenvalues(&self) -> Vec<nalgebra::Complex<f64>> {
        self.a.complex_eigenvalues().iter().copied().collect()
    }

    pub fn spectral_radius(&self) -> f64 {
        self.eigenvalues().iter().map(|z| z.norm()).fold(0.0, f64::max)
    }

    pub fn is_schur(&self) -> bool {
        self.spectral_radius() < 1.0
    }

    pub fn is_hurwitz(&self) -> bool {
        self.eigenvalues().iter().all(|z| z.re < 0.0)
    }

    /// Rank of `[C; CA; ...; CA^(n-1)]`.
    pub fn observability_rank(&self) -> usize {
        let n = self.n();
        let m = self.m();
        let mut stack = DMatrix::zeros(n * m, n);
        let mut cak = self.c.clone();
        for k in 0..n {
            stack.view_mut((k * m, 0), (m, n)).copy_from(&cak);
            cak = &cak * &self.a;
        }
        let scale = stack.abs().max().max(1.0);
        stack.rank(1e-10 * scale)
    }

    pub fn is_observable(&self) -> bool {
        self.observability_rank() == self.n()
    }

    /// Steady-state output gain `C (I - A)^-1 B + D` of a discrete model.
    pub fn dc_gain(&self) -> Result<DVector<f64>, GovernorError> {
        let n = self.n();
        let lhs = DMatrix::identity(n, n) - &self.a;
        let x = lhs
            .lu()
            .solve(&self.b)
            .ok_or_else(|| GovernorError::Dimension("I - A is singular".into()))?;
        Ok((&self.c * x + &self.d).column(0).into_owned())
    }

    /// Hex SHA-256 over the matrices and sample time.
    pub fn hash(&self) -> String {
        let mut h = Sha256::new();
        for mat in [&self.a, &self.b, &self.c, &self.d] {
            h.update((mat.nrows() as u64).to_le_bytes());
            h.update((mat.ncols() as u64).to_le_bytes());
            for v in mat.iter() {
                h.update(v.to_le_bytes());
            }
        }
        h.update(self.ts.unwrap_or(0.0).to_le_bytes());
        crate::params::hex_digest(&h.finalize())
    }
}

/// Continuous linearized model of the closed-loop electrolyzer at 3.5 bar and
/// 7 kW. States: hydrogen pressure (bar), outlet flow (Nm³/h) and the
/// integrator scaled by the integral gain (Nm³/h). Input: power (kW).
/// Output: hydrogen pressure (bar).
pub fn default_linear_model() -> LtiModel {
    LtiModel {
        a: DMatrix::from_row_slice(3, 3, &[0.0, -0.363, 0.0, 0.927, -1.0, 1.0, 0.063, 0.0, 0.0]),
        b: DMatrix::from_row_slice(3, 1, &[0.073, 0.0, 0.0]),
        c: DMatrix::from_row_slice(1, 3, &[1.0, 0.0, 0.0]),
        d: DMatrix::zeros(1, 1),
        ts: None,
        state_labels: vec!["p_H2 [bar]".into(), "W_H2,out [Nm3/h]".into(), "K_i q [Nm3/h]".into()],
        input_label: "P [kW]".into(),
        output_labels: vec!["p_H2 [bar]".into()],
        state_offsets: vec![3.5, 1.51, 1.51],
        input_offset: 7.0,
        output_offsets: vec![3.5],
    }
}

/// Zero-order-hold discretization through the exponential of the augmented
/// matrix `[[A, B], [0, 0]] * ts`.
pub fn discretize_zoh(model: &LtiModel, ts: f64) -> Result<LtiModel, GovernorError> {
    if model.ts.is_some() {
        return Err(GovernorError::AlreadyDiscrete);
    }
    if !(ts > 0.0 && ts.is_finite()) {
        return Err(GovernorError::SampleTime(ts));
    }
    model.check_dimensions()?;
    let n = model.n();
    let mut aug = DMatrix::zeros(n + 1, n + 1);
    aug.view_mut((0, 0), (n, n)).copy_from(&(&model.a * ts));
    aug.view_mut((0, n), (n, 1)).copy_from(&(&model.b * ts));
    let e = aug.exp();
    Ok(LtiModel {
        a: e.view((0, 0), (n, n)).into_owned(),
        b: e.view((0, n), (n, 1)).into_owned(),
        ts: Some(ts),
        ..model.clone()
    })
}
