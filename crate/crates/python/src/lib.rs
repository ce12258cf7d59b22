//! Python bindings for the electrolyzer model and the power governor.

use elygov_core::electrochem::{self, OperatingPoint as CoreOperatingPoint};
use elygov_core::governor::{build_mas as core_build_mas, default_linear_model, discretize_zoh, rg_update, AdmissibleSet as CoreSet};
use elygov_core::harness::linearize::linearize_closed_loop;
use elygov_core::harness::metrics::{compute_metrics, MetricsReport};
use elygov_core::harness::{self, cli, default_admissible_set, run_scenario, Governor, GovernorKind, HarnessError, RunRecord, Scenario};
use elygov_core::params::{emit_params, load_params, ParamSet as CoreParams};
use elygov_core::plant;
use elygov_core::units;
use nalgebra::DVector;
use pyo3::create_exception;
use pyo3::exceptions::PyException;
use pyo3::prelude::*;
use pyo3::types::PyDict;

create_exception!(elygov, ElygovError, PyException);

fn err(e: impl std::fmt::Display) -> PyErr {
    ElygovError::new_err(e.to_string())
}

fn harness_err(e: HarnessError) -> PyErr {
    ElygovError::new_err(format!("{e} (exit code {})", cli::exit_code(&e)))
}

#[pyclass(name = "ParamSet", frozen, module = "elygov")]
struct ParamSet {
    inner: CoreParams,
}

#[pymethods]
impl ParamSet {
    /// Built-in defaults, or parsed from TOML text when given.
    #[new]
    #[pyo3(signature = (config = None))]
    fn new(config: Option<&str>) -> PyResult<Self> {
        let inner = match config {
            Some(text) => load_params(text).map_err(err)?,
            None => CoreParams::default(),
        };
        Ok(ParamSet { inner })
    }

    #[staticmethod]
    fn from_file(path: &str) -> PyResult<Self> {
        let text = std::fs::read_to_string(path).map_err(err)?;
        Self::new(Some(&text))
    }

    fn to_toml(&self) -> String {
        emit_params(&self.inner)
    }

    fn hash(&self) -> String {
        self.inner.hash()
    }

    #[getter]
    fn k_p_an(&self) -> f64 {
        self.inner.control.k_p_an
    }

    #[getter]
    fn p_h2_ref_bar(&self) -> f64 {
        units::pa_to_bar(self.inner.control.p_h2_ref)
    }

    #[getter]
    fn epsilon_bar(&self) -> f64 {
        self.inner.governor.epsilon_bar
    }

    #[getter]
    fn lpf_tau(&self) -> f64 {
        self.inner.governor.lpf_tau
    }

    fn __repr__(&self) -> String {
        format!("ParamSet(hash={:?})", &self.inner.hash()[..12])
    }
}

fn params_or_default(params: Option<&ParamSet>) -> CoreParams {
    params.map_or_else(CoreParams::default, |p| p.inner.clone())
}

#[pyclass(name = "OperatingPoint", frozen, get_all, module = "elygov")]
struct OperatingPoint {
    /// Current density, A/m².
    i: f64,
    i_st: f64,
    v_st: f64,
    v_cell: f64,
    p_in: f64,
    eta_f: f64,
}

impl From<CoreOperatingPoint> for OperatingPoint {
    fn from(op: CoreOperatingPoint) -> Self {
        OperatingPoint {
            i: op.i,
            i_st: op.i_st,
            v_st: op.v_st,
            v_cell: op.v_cell,
            p_in: op.p_in,
            eta_f: op.eta_f,
        }
    }
}

#[pymethods]
impl OperatingPoint {
    fn __repr__(&self) -> String {
        format!("OperatingPoint(i_st={:.3} A, v_st={:.3} V, eta_f={:.4})", self.i_st, self.v_st, self.eta_f)
    }
}

/// Stack operating point drawing `power_w` watts.
#[pyfunction]
#[pyo3(signature = (power_w, params = None))]
fn solve_operating_point(power_w: f64, params: Option<&ParamSet>) -> PyResult<OperatingPoint> {
    let p = params_or_default(params);
    electrochem::solve_operating_point(power_w, &p).map(Into::into).map_err(err)
}

/// Closed-loop steady state at `power_w`, in bar, Nm³/h and bar·s.
#[pyfunction]
#[pyo3(signature = (power_w, params = None))]
fn find_equilibrium<'py>(py: Python<'py>, power_w: f64, params: Option<&ParamSet>) -> PyResult<Bound<'py, PyDict>> {
    let p = params_or_default(params);
    let x = plant::find_equilibrium(power_w, &p).map_err(err)?;
    let d = PyDict::new(py);
    d.set_item("p_o2_bar", units::pa_to_bar(x.p_o2))?;
    d.set_item("p_h2_bar", units::pa_to_bar(x.p_h2))?;
    d.set_item("w_h2_out_nm3h", units::mass_flow_to_normal_volumetric(x.w_h2_out, p.gas.m_h2))?;
    d.set_item("q_bar_s", units::pa_to_bar(x.q))?;
    Ok(d)
}

#[pyclass(name = "AdmissibleSet", frozen, module = "elygov")]
struct AdmissibleSet {
    inner: CoreSet,
}

#[pymethods]
impl AdmissibleSet {
    #[getter]
    fn rows(&self) -> usize {
        self.inner.rows()
    }

    #[getter]
    fn j_star(&self) -> usize {
        self.inner.j_star
    }

    #[getter]
    fn epsilon(&self) -> f64 {
        self.inner.epsilon
    }

    fn to_json(&self) -> String {
        self.inner.to_json()
    }

    #[staticmethod]
    fn from_json(text: &str) -> PyResult<Self> {
        CoreSet::from_json(text).map(|inner| AdmissibleSet { inner }).map_err(err)
    }

    /// Membership of `(x, v)` in model coordinates.
    #[pyo3(signature = (x, v, tol = 1e-9))]
    fn contains(&self, x: Vec<f64>, v: f64, tol: f64) -> PyResult<bool> {
        self.check_len(&x)?;
        Ok(self.inner.contains(&DVector::from_vec(x), v, tol))
    }

    /// One governor update; returns `(v, kappa, infeasible)`.
    fn rg_update(&self, x: Vec<f64>, v_prev: f64, r: f64) -> PyResult<(f64, f64, bool)> {
        self.check_len(&x)?;
        let s = rg_update(&DVector::from_vec(x), v_prev, r, &self.inner);
        Ok((s.v, s.kappa, s.infeasible))
    }

    fn __repr__(&self) -> String {
        format!("AdmissibleSet(rows={}, j_star={}, epsilon={})", self.inner.rows(), self.inner.j_star, self.inner.epsilon)
    }
}

impl AdmissibleSet {
    fn check_len(&self, x: &[f64]) -> PyResult<()> {
        if x.len() != self.inner.n() {
            return Err(err(format!("state has {} entries, expected {}", x.len(), self.inner.n())));
        }
        Ok(())
    }
}

/// Admissible set of the default linear model, bounds in bar deviation.
#[pyfunction]
#[pyo3(signature = (ts = 0.1, epsilon = 0.01, upper = 1.0, lower = -1.0, horizon_cap = 1000))]
fn build_mas(ts: f64, epsilon: f64, upper: f64, lower: f64, horizon_cap: usize) -> PyResult<AdmissibleSet> {
    let model = discretize_zoh(&default_linear_model(), ts).map_err(err)?;
    core_build_mas(&model, upper, lower, epsilon, horizon_cap)
        .map(|inner| AdmissibleSet { inner })
        .map_err(err)
}

#[pyclass(name = "Run", frozen, module = "elygov")]
struct Run {
    record: RunRecord,
    metrics: MetricsReport,
    params: CoreParams,
}

#[pymethods]
impl Run {
    fn csv(&self) -> String {
        self.record.to_csv(&self.params)
    }

    fn metrics<'py>(&self, py: Python<'py>) -> PyResult<Bound<'py, PyDict>> {
        metrics_dict(py, &self.metrics)
    }

    #[getter]
    fn infeasible_events(&self) -> usize {
        self.record.events.infeasible
    }

    /// Time series in reporting units, keyed like the CSV header.
    fn columns<'py>(&self, py: Python<'py>) -> PyResult<Bound<'py, PyDict>> {
        let s = &self.record.samples;
        let m = self.params.gas.m_h2;
        let col = |f: &dyn Fn(&harness::Sample) -> f64| s.iter().map(f).collect::<Vec<f64>>();
        let d = PyDict::new(py);
        d.set_item("t", col(&|x| x.t))?;
        d.set_item("P_req_kW", col(&|x| x.p_req / units::W_PER_KW))?;
        d.set_item("P_app_kW", col(&|x| x.p_app / units::W_PER_KW))?;
        d.set_item("pH2_bar", col(&|x| units::pa_to_bar(x.p_h2)))?;
        d.set_item("pO2_bar", col(&|x| units::pa_to_bar(x.p_o2)))?;
        d.set_item("WH2out_Nm3h", col(&|x| units::mass_flow_to_normal_volumetric(x.w_h2_out, m)))?;
        d.set_item("WH2gen_Nm3h", col(&|x| units::mass_flow_to_normal_volumetric(x.w_h2_gen, m)))?;
        d.set_item("u_exh", col(&|x| x.u_exh))?;
        if self.record.governor == GovernorKind::Pg {
            d.set_item("kappa", col(&|x| x.kappa.unwrap_or(f64::NAN)))?;
        }
        Ok(d)
    }
}

fn metrics_dict<'py>(py: Python<'py>, m: &MetricsReport) -> PyResult<Bound<'py, PyDict>> {
    let d = PyDict::new(py);
    d.set_item("scenario", &m.scenario)?;
    d.set_item("governor", &m.governor)?;
    d.set_item("tracking_mse_kw2", m.tracking_mse_kw2)?;
    d.set_item("tracking_rmse_kw", m.tracking_rmse_kw)?;
    d.set_item("h2_production_nm3", m.h2_production_nm3)?;
    d.set_item("h2_delivered_nm3", m.h2_delivered_nm3)?;
    d.set_item("auxiliary_energy_kwh", m.auxiliary_energy_kwh)?;
    d.set_item("violation_peak_bar", m.violation.peak_bar)?;
    d.set_item("violation_duration_s", m.violation.duration_s)?;
    d.set_item("infeasible_events", m.infeasible_events)?;
    Ok(d)
}

/// Runs a shipped scenario or scenario file with `governor` ("pg", "lpf" or
/// "none"; the scenario's own choice when omitted).
#[pyfunction]
#[pyo3(signature = (scenario, governor = None, params = None, mas = None))]
fn simulate(
    py: Python<'_>,
    scenario: &str,
    governor: Option<&str>,
    params: Option<&ParamSet>,
    mas: Option<&AdmissibleSet>,
) -> PyResult<Run> {
    let p = params_or_default(params);
    let s: Scenario = cli::resolve_scenario(scenario, &p).map_err(harness_err)?;
    let kind = match governor {
        Some(g) => g.parse::<GovernorKind>().map_err(err)?,
        None => s.governor,
    };
    py.detach(|| {
        let built;
        let gov = match kind {
            GovernorKind::None => Governor::None,
            GovernorKind::Lpf => Governor::Lpf { tau: p.governor.lpf_tau },
            GovernorKind::Pg => match mas {
                Some(m) => Governor::Pg { omega: &m.inner },
                None => {
                    built = default_admissible_set(&p)?;
                    Governor::Pg { omega: &built }
                }
            },
        };
        let record = run_scenario(&s, &p, gov)?;
        let metrics = compute_metrics(&record, &s, &p);
        Ok(Run { record, metrics, params: p.clone() })
    })
    .map_err(harness_err)
}

/// Numerical Jacobian `(A, B)` of the nonlinear loop at `power_kw`.
#[pyfunction]
#[pyo3(signature = (power_kw = 7.0, params = None))]
fn linearize(power_kw: f64, params: Option<&ParamSet>) -> PyResult<(Vec<Vec<f64>>, Vec<f64>)> {
    let p = params_or_default(params);
    let m = linearize_closed_loop(power_kw * units::W_PER_KW, &p).map_err(harness_err)?;
    let a = (0..m.n()).map(|i| m.a.row(i).iter().copied().collect()).collect();
    Ok((a, m.b.iter().copied().collect()))
}

/// The shipped continuous linear model `(A, B, C)`.
#[pyfunction]
fn linear_model() -> (Vec<Vec<f64>>, Vec<f64>, Vec<f64>) {
    let m = default_linear_model();
    let a = (0..m.n()).map(|i| m.a.row(i).iter().copied().collect()).collect();
    (a, m.b.iter().copied().collect(), m.c.iter().copied().collect())
}

#[pymodule]
fn elygov(m: &Bound<'_, PyModule>) -> PyResult<()> {
    m.add("ElygovError", m.py().get_type::<ElygovError>())?;
    m.add("CSV_HEADER", harness::CSV_HEADER)?;
    m.add_class::<ParamSet>()?;
    m.add_class::<OperatingPoint>()?;
    m.add_class::<AdmissibleSet>()?;
    m.add_class::<Run>()?;
    m.add_function(wrap_pyfunction!(solve_operating_point, m)?)?;
    m.add_function(wrap_pyfunction!(find_equilibrium, m)?)?;
    m.add_function(wrap_pyfunction!(build_mas, m)?)?;
    m.add_function(wrap_pyfunction!(simulate, m)?)?;
    m.add_function(wrap_pyfunction!(linearize, m)?)?;
    m.add_function(wrap_pyfunction!(linear_model, m)?)?;
    Ok(())
}
