//! Maximal output admissible set of a discrete model under a constant input,
//! with the steady-state constraint tightened by epsilon so the set is
//! finitely determined.
//!
//! Rows are `Hx x + Hv v <= h`. The steady-state block comes first, then one
//! block per step `j = 0..=j_star`. Each block has an upper and a lower row per
//! output (a row is left out when its bound is infinite).

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use super::lp::{lp_max, LpError, LP_TOLERANCE};
use super::{GovernorError, LtiModel};

pub const MAS_FORMAT: &str = "elygov-admissible-set";
pub const MAS_VERSION: u32 = 1;

#[derive(Debug, Clone, PartialEq)]
pub struct AdmissibleSet {
    pub hx: DMatrix<f64>,
    pub hv: DVector<f64>,
    pub h: DVector<f64>,
    pub j_star: usize,
    pub epsilon: f64,
    pub y_upper: f64,
    pub y_lower: f64,
    pub ts: f64,
    pub model_hash: String,
}

impl AdmissibleSet {
    pub fn rows(&self) -> usize {
        self.h.len()
    }

    pub fn n(&self) -> usize {
        self.hx.ncols()
    }

    /// Largest row violation `max(Hx x + Hv v - h)`; nonpositive inside the set.
    pub fn max_violation(&self, x: &DVector<f64>, v: f64) -> f64 {
        let lhs = &self.hx * x + &self.hv * v;
        (lhs - &self.h).max()
    }

    pub fn contains(&self, x: &DVector<f64>, v: f64, tol: f64) -> bool {
        self.max_violation(x, v) <= tol
    }

    /// Same set with every row multiplied by a positive factor.
    pub fn scaled(&self, factor: f64) -> AdmissibleSet {
        AdmissibleSet {
            hx: &self.hx * factor,
            hv: &self.hv * factor,
            h: &self.h * factor,
            ..self.clone()
        }
    }

    pub fn to_document(&self) -> MasDocument {
        MasDocument {
            format: MAS_FORMAT.into(),
            version: MAS_VERSION,
            model_hash: self.model_hash.clone(),
            ts: self.ts,
            epsilon: self.epsilon,
            y_upper: self.y_upper,
            y_lower: self.y_lower,
            j_star: self.j_star,
            n_states: self.n(),
            row_count: self.rows(),
            rows: (0..self.rows())
                .map(|i| MasRow {
                    hx: self.hx.row(i).iter().copied().collect(),
                    hv: self.hv[i],
                    h: self.h[i],
                })
                .collect(),
        }
    }

    pub fn from_document(doc: &MasDocument) -> Result<Self, GovernorError> {
        let fail = |m: String| Err(GovernorError::Format(m));
        if doc.format != MAS_FORMAT {
            return fail(format!("unknown format {:?}", doc.format));
        }
        if doc.version != MAS_VERSION {
            return fail(format!("unsupported version {}", doc.version));
        }
        if doc.rows.len() != doc.row_count {
            return fail(format!("row_count {} but {} rows", doc.row_count, doc.rows.len()));
        }
        if let Some(r) = doc.rows.iter().find(|r| r.hx.len() != doc.n_states) {
            return fail(format!("row with {} state coefficients, expected {}", r.hx.len(), doc.n_states));
        }
        let n = doc.n_states;
        let rows = doc.rows.len();
        Ok(AdmissibleSet {
            hx: DMatrix::from_fn(rows, n, |i, j| doc.rows[i].hx[j]),
            hv: DVector::from_fn(rows, |i, _| doc.rows[i].hv),
            h: DVector::from_fn(rows, |i, _| doc.rows[i].h),
            j_star: doc.j_star,
            epsilon: doc.epsilon,
            y_upper: doc.y_upper,
            y_lower: doc.y_lower,
            ts: doc.ts,
            model_hash: doc.model_hash.clone(),
        })
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(&self.to_document()).expect("document is always serializable")
    }

    pub fn from_json(text: &str) -> Result<Self, GovernorError> {
        let doc: MasDocument =
            serde_json::from_str(text).map_err(|e| GovernorError::Format(e.to_string()))?;
        Self::from_document(&doc)
    }
}

/// Serialized form of an [`AdmissibleSet`].
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct MasDocument {
    pub format: String,
    pub version: u32,
    pub model_hash: String,
    pub ts: f64,
    pub epsilon: f64,
    pub y_upper: f64,
    pub y_lower: f64,
    pub j_star: usize,
    pub n_states: usize,
    pub row_count: usize,
    pub rows: Vec<MasRow>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct MasRow {
    pub hx: Vec<f64>,
    pub hv: f64,
    pub h: f64,
}

struct RowStack {
    n: usize,
    hx: Vec<f64>,
    hv: Vec<f64>,
    h: Vec<f64>,
}

impl RowStack {
    fn push(&mut self, hx: &[f64], hv: f64, h: f64) {
        self.hx.extend_from_slice(hx);
        self.hv.push(hv);
        self.h.push(h);
    }

    fn len(&self) -> usize {
        self.h.len()
    }

    /// Polytope in `(x, v)` for the LP solver.
    fn lp_form(&self) -> (DMatrix<f64>, DVector<f64>) {
        let rows = self.len();
        let g = DMatrix::from_fn(rows, self.n + 1, |i, j| {
            if j < self.n {
                self.hx[i * self.n + j]
            } else {
                self.hv[i]
            }
        });
        (g, DVector::from_column_slice(&self.h))
    }
}

/// Output rows `(Hx, Hv, h)` for one prediction step, given `C A^j` and
/// `C S_j + D`.
fn step_rows(cx: &DMatrix<f64>, cv: &DMatrix<f64>, y_upper: f64, y_lower: f64) -> Vec<(Vec<f64>, f64, f64)> {
    let mut out = Vec::new();
    for i in 0..cx.nrows() {
        let row: Vec<f64> = cx.row(i).iter().copied().collect();
        if y_upper.is_finite() {
            out.push((row.clone(), cv[(i, 0)], y_upper));
        }
        if y_lower.is_finite() {
            out.push((row.iter().map(|v| -v).collect(), -cv[(i, 0)], -y_lower));
        }
    }
    out
}

/// Builds the admissible set of a discrete model for `y_lower <= y <= y_upper`
/// (deviation units), tightening the steady-state rows by `epsilon`.
pub fn build_mas(
    model: &LtiModel,
    y_upper: f64,
    y_lower: f64,
    epsilon: f64,
    horizon_cap: usize,
) -> Result<AdmissibleSet, GovernorError> {
    let ts = model.ts.ok_or(GovernorError::NotDiscrete)?;
    model.check_dimensions()?;
    if !(y_lower < 0.0 && y_upper > 0.0) {
        return Err(GovernorError::Bounds {
            lower: y_lower,
            upper: y_upper,
        });
    }
    if !(epsilon > 0.0 && epsilon < y_upper && epsilon < -y_lower) {
        return Err(GovernorError::Epsilon(epsilon));
    }
    let rho = model.spectral_radius();
    if rho >= 1.0 {
        return Err(GovernorError::NotSchur(rho));
    }
    let rank = model.observability_rank();
    if rank < model.n() {
        return Err(GovernorError::NotObservable { rank, n: model.n() });
    }

    let n = model.n();
    let mut stack = RowStack {
        n,
        hx: Vec::new(),
        hv: Vec::new(),
        h: Vec::new(),
    };
    let zeros = vec![0.0; n];
    let gain = model.dc_gain()?;
    for &g in gain.iter() {
        if y_upper.is_finite() {
            stack.push(&zeros, g, y_upper - epsilon);
        }
        if y_lower.is_finite() {
            stack.push(&zeros, -g, -y_lower - epsilon);
        }
    }

    let mut a_pow = DMatrix::identity(n, n);
    let mut s = DMatrix::zeros(n, 1);
    for (hx, hv, h) in step_rows(&(&model.c * &a_pow), &model.d, y_upper, y_lower) {
        stack.push(&hx, hv, h);
    }

    for j in 0..=horizon_cap {
        s = &s + &a_pow * &model.b;
        a_pow = &a_pow * &model.a;
        let next = step_rows(&(&model.c * &a_pow), &(&model.c * &s + &model.d), y_upper, y_lower);
        let (g_mat, g) = stack.lp_form();
        let mut implied = true;
        for (hx, hv, h) in &next {
            let c = DVector::from_column_slice(hx).push(*hv);
            match lp_max(&c, &g_mat, &g) {
                Ok(sol) if sol.value <= h + LP_TOLERANCE => {}
                Ok(_) | Err(LpError::Unbounded) => {
                    implied = false;
                    break;
                }
                Err(e) => return Err(e.into()),
            }
        }
        if implied {
            log::info!("admissible set determined at j* = {j} with {} rows", stack.len());
            let rows = stack.len();
            return Ok(AdmissibleSet {
                hx: DMatrix::from_row_slice(rows, n, &stack.hx),
                hv: DVector::from_column_slice(&stack.hv),
                h: DVector::from_column_slice(&stack.h),
                j_star: j,
                epsilon,
                y_upper,
                y_lower,
                ts,
                model_hash: model.hash(),
            });
        }
        if j == horizon_cap {
            break;
        }
        for (hx, hv, h) in next {
            stack.push(&hx, hv, h);
        }
    }
    Err(GovernorError::NotDetermined { cap: horizon_cap })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::governor::{default_linear_model, discretize_zoh};

    fn scalar(a: f64, b: f64) -> LtiModel {
        LtiModel::new(
            DMatrix::from_element(1, 1, a),
            DMatrix::from_element(1, 1, b),
            DMatrix::from_element(1, 1, 1.0),
            DMatrix::zeros(1, 1),
            Some(1.0),
        )
        .unwrap()
    }

    #[test]
    fn contraction_needs_only_first_step() {
        let set = build_mas(&scalar(0.5, 0.0), 1.0, f64::NEG_INFINITY, 0.01, 100).unwrap();
        assert_eq!(set.j_star, 0);
        // steady-state row plus the j = 0 row
        assert_eq!(set.rows(), 2);
    }

    #[test]
    fn row_count_matches_horizon() {
        let set = build_mas(&scalar(0.5, 1.0), 1.0, -1.0, 0.01, 100).unwrap();
        assert_eq!(set.rows(), 2 * (set.j_star + 2));
    }

    #[test]
    fn grid_matches_simulation() {
        let eps = 0.01;
        let set = build_mas(&scalar(0.5, 1.0), 1.0, -1.0, eps, 100).unwrap();
        let mut checked = 0;
        for ix in 0..200 {
            for iv in 0..200 {
                // offsets keep grid points off the polytope faces
                let x0 = -3.0 + 6.0 * (ix as f64 + 0.37) / 200.0;
                let v = -1.0 + 2.0 * (iv as f64 + 0.41) / 200.0;
                let margin = set.max_violation(&DVector::from_element(1, x0), v);
                if margin.abs() < 1e-9 {
                    continue;
                }
                let mut x = x0;
                let mut ok = (2.0 * v).abs() <= 1.0 - eps;
                for _ in 0..=500 {
                    ok &= x.abs() <= 1.0;
                    x = 0.5 * x + v;
                }
                assert_eq!(margin <= 0.0, ok, "x0 = {x0}, v = {v}");
                checked += 1;
            }
        }
        assert!(checked > 39_000);
    }

    #[test]
    fn nominal_point_strictly_inside() {
        let model = discretize_zoh(&default_linear_model(), 0.1).unwrap();
        let set = build_mas(&model, 1.0, -1.0, 0.01, 1000).unwrap();
        assert!(set.max_violation(&DVector::zeros(3), 0.0) < 0.0);
        for i in 0..set.rows() {
            if set.hx.row(i).iter().all(|&v| v == 0.0) && set.hv[i] == 0.0 {
                assert!(set.h[i] >= 0.0);
            }
        }
        assert_eq!(set.rows(), 2 * (set.j_star + 2));
        assert!(set.j_star <= 200, "{}", set.j_star);
        println!("rows {} j* {}", set.rows(), set.j_star);
    }

    #[test]
    fn json_round_trip() {
        let set = build_mas(&scalar(0.5, 1.0), 1.0, -1.0, 0.01, 100).unwrap();
        let back = AdmissibleSet::from_json(&set.to_json()).unwrap();
        assert_eq!(back, set);
    }

    #[test]
    fn json_rejects_other_versions() {
        let set = build_mas(&scalar(0.5, 1.0), 1.0, -1.0, 0.01, 100).unwrap();
        let mut doc = set.to_document();
        doc.version = 99;
        assert!(matches!(AdmissibleSet::from_document(&doc), Err(GovernorError::Format(_))));
    }

    #[test]
    fn rejects_bad_inputs() {
        let m = scalar(0.5, 1.0);
        assert!(matches!(build_mas(&m, 1.0, 0.5, 0.01, 10), Err(GovernorError::Bounds { .. })));
        assert!(matches!(build_mas(&m, 1.0, -1.0, 0.0, 10), Err(GovernorError::Epsilon(_))));
        assert!(matches!(build_mas(&m, 1.0, -1.0, 2.0, 10), Err(GovernorError::Epsilon(_))));
        assert!(matches!(build_mas(&scalar(1.5, 1.0), 1.0, -1.0, 0.01, 10), Err(GovernorError::NotSchur(_))));
        let mut cont = m.clone();
        cont.ts = None;
        assert_eq!(build_mas(&cont, 1.0, -1.0, 0.01, 10), Err(GovernorError::NotDiscrete));
    }

    #[test]
    fn horizon_cap_reported() {
        let m = discretize_zoh(&default_linear_model(), 0.1).unwrap();
        assert_eq!(
            build_mas(&m, 1.0, -1.0, 0.01, 3),
            Err(GovernorError::NotDetermined { cap: 3 })
        );
    }
}
