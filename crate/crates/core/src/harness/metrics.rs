//! Run metrics over the scenario windows.
//!
//! Integrals are sums of samples times the governor period, which is exact
//! for the zero-order-held command.

use serde::Serialize;

use super::scenario::{Scenario, Window};
use super::sim::RunRecord;
use crate::params::ParamSet;
use crate::units;

#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize)]
pub struct ViolationStats {
    /// Largest excursion beyond either bound, bar (0 when none).
    pub peak_bar: f64,
    pub above_peak_bar: f64,
    pub below_peak_bar: f64,
    /// Time spent outside the bounds, s.
    pub duration_s: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct MetricsReport {
    pub scenario: String,
    pub governor: String,
    /// Mean squared error between requested and applied power, kW².
    pub tracking_mse_kw2: f64,
    pub tracking_rmse_kw: f64,
    /// Generated hydrogen, Nm³.
    pub h2_production_nm3: f64,
    /// Hydrogen leaving through the outlet, Nm³.
    pub h2_delivered_nm3: f64,
    /// Energy drawn beyond the request, kWh.
    pub auxiliary_energy_kwh: f64,
    pub violation: ViolationStats,
    pub infeasible_events: usize,
}

/// Sum of squared tracking errors (kW²) and sample count over a window.
pub fn tracking_sums(record: &RunRecord, window: Window) -> (f64, usize) {
    record
        .samples
        .iter()
        .filter(|s| window.contains(s.t))
        .fold((0.0, 0), |(sum, n), s| {
            let e = (s.p_req - s.p_app) / units::W_PER_KW;
            (sum + e * e, n + 1)
        })
}

pub fn tracking_mse(record: &RunRecord, window: Window) -> f64 {
    let (sum, n) = tracking_sums(record, window);
    if n == 0 {
        0.0
    } else {
        sum / n as f64
    }
}

fn nm3(record: &RunRecord, window: Window, params: &ParamSet, flow: impl Fn(&super::sim::Sample) -> f64) -> f64 {
    let kg: f64 = record.samples.iter().filter(|s| window.contains(s.t)).map(flow).sum::<f64>() * record.ts;
    units::mass_flow_to_normal_volumetric(kg, params.gas.m_h2) / units::SECONDS_PER_HOUR
}

pub fn h2_production(record: &RunRecord, window: Window, params: &ParamSet) -> f64 {
    nm3(record, window, params, |s| s.w_h2_gen)
}

pub fn h2_delivered(record: &RunRecord, window: Window, params: &ParamSet) -> f64 {
    nm3(record, window, params, |s| s.w_h2_out)
}

pub fn auxiliary_energy(record: &RunRecord, window: Window) -> f64 {
    let joules: f64 = record
        .samples
        .iter()
        .filter(|s| window.contains(s.t))
        .map(|s| (s.p_app - s.p_req).max(0.0))
        .sum::<f64>()
        * record.ts;
    joules / units::J_PER_KWH
}

pub fn violation_stats(record: &RunRecord, params: &ParamSet) -> ViolationStats {
    let (lo, hi) = (params.control.p_min, params.control.p_max);
    let mut v = ViolationStats::default();
    let mut outside = 0usize;
    for s in &record.samples {
        let above = units::pa_to_bar(s.p_h2 - hi).max(0.0);
        let below = units::pa_to_bar(lo - s.p_h2).max(0.0);
        v.above_peak_bar = v.above_peak_bar.max(above);
        v.below_peak_bar = v.below_peak_bar.max(below);
        if above > 0.0 || below > 0.0 {
            outside += 1;
        }
    }
    v.peak_bar = v.above_peak_bar.max(v.below_peak_bar);
    v.duration_s = outside as f64 * record.ts;
    v
}

pub fn compute_metrics(record: &RunRecord, scenario: &Scenario, params: &ParamSet) -> MetricsReport {
    let mse = tracking_mse(record, scenario.tracking);
    MetricsReport {
        scenario: record.scenario.clone(),
        governor: record.governor.to_string(),
        tracking_mse_kw2: mse,
        tracking_rmse_kw: mse.sqrt(),
        h2_production_nm3: h2_production(record, scenario.production, params),
        h2_delivered_nm3: h2_delivered(record, scenario.production, params),
        auxiliary_energy_kwh: auxiliary_energy(record, scenario.auxiliary),
        violation: violation_stats(record, params),
        infeasible_events: record.events.infeasible,
    }
}

/// Aligned text table, one column per report.
pub fn format_table(reports: &[MetricsReport]) -> String {
    let rows: [(&str, fn(&MetricsReport) -> String); 9] = [
        ("governor", |r| r.governor.clone()),
        ("tracking MSE [kW^2]", |r| format!("{:.4}", r.tracking_mse_kw2)),
        ("tracking RMSE [kW]", |r| format!("{:.4}", r.tracking_rmse_kw)),
        ("H2 production [Nm^3]", |r| format!("{:.4}", r.h2_production_nm3)),
        ("H2 delivered [Nm^3]", |r| format!("{:.4}", r.h2_delivered_nm3)),
        ("auxiliary energy [kWh]", |r| format!("{:.4}", r.auxiliary_energy_kwh)),
        ("violation peak [bar]", |r| format!("{:.4}", r.violation.peak_bar)),
        ("violation time [s]", |r| format!("{:.1}", r.violation.duration_s)),
        ("infeasible updates", |r| r.infeasible_events.to_string()),
    ];
    let label_w = rows.iter().map(|(l, _)| l.len()).max().unwrap_or(0);
    let cells: Vec<Vec<String>> = rows.iter().map(|(_, f)| reports.iter().map(f).collect()).collect();
    let col_w: Vec<usize> = (0..reports.len())
        .map(|j| cells.iter().map(|r| r[j].len()).max().unwrap_or(0))
        .collect();
    let mut out = String::new();
    for ((label, _), row) in rows.iter().zip(&cells) {
        out.push_str(&format!("{label:<label_w$}"));
        for (cell, w) in row.iter().zip(&col_w) {
            out.push_str(&format!("  {cell:>w$}"));
        }
        out.push('\n');
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::harness::scenario::GovernorKind;
    use crate::harness::sim::{RunEvents, Sample};

    fn record(samples: Vec<(f64, f64, f64)>) -> RunRecord {
        RunRecord {
            scenario: "t".into(),
            governor: GovernorKind::Lpf,
            ts: 0.1,
            params_hash: String::new(),
            samples: samples
                .into_iter()
                .map(|(t, req, app)| Sample {
                    t,
                    p_req: req,
                    p_app: app,
                    p_h2: 3.5e5,
                    p_o2: 3.5e5,
                    w_h2_out: 1e-4,
                    w_h2_gen: 1e-4,
                    u_exh: 0.0,
                    kappa: None,
                })
                .collect(),
            events: RunEvents::default(),
        }
    }

    #[test]
    fn perfect_tracking_is_zero() {
        let r = record((0..100).map(|k| (k as f64 * 0.1, 5000.0, 5000.0)).collect());
        let w = Window::new(0.0, 10.0);
        assert_eq!(tracking_mse(&r, w), 0.0);
        assert_eq!(auxiliary_energy(&r, w), 0.0);
    }

    #[test]
    fn mse_and_auxiliary_by_hand() {
        // 1 kW above the request for 10 samples of 0.1 s
        let r = record((0..10).map(|k| (k as f64 * 0.1, 5000.0, 6000.0)).collect());
        let w = Window::new(0.0, 1.0);
        assert_eq!(tracking_mse(&r, w), 1.0);
        assert!((auxiliary_energy(&r, w) - 1.0 / 3600.0).abs() < 1e-15);
        // shortfall does not count as auxiliary energy
        let r = record((0..10).map(|k| (k as f64 * 0.1, 6000.0, 5000.0)).collect());
        assert_eq!(auxiliary_energy(&r, w), 0.0);
    }

    #[test]
    fn production_by_hand() {
        let p = ParamSet::default();
        let r = record((0..36_000).map(|k| (k as f64 * 0.1, 0.0, 0.0)).collect());
        // one hour at 1e-4 kg/s
        let want = units::mass_flow_to_normal_volumetric(1e-4, p.gas.m_h2);
        let got = h2_production(&r, Window::new(0.0, 3600.0), &p);
        assert!((got - want).abs() < 1e-9 * want);
    }

    #[test]
    fn violation_counts_samples() {
        let p = ParamSet::default();
        let mut r = record((0..10).map(|k| (k as f64 * 0.1, 0.0, 0.0)).collect());
        r.samples[3].p_h2 = 4.6e5;
        r.samples[4].p_h2 = 4.55e5;
        r.samples[7].p_h2 = 2.45e5;
        let v = violation_stats(&r, &p);
        assert!((v.above_peak_bar - 0.1).abs() < 1e-12);
        assert!((v.below_peak_bar - 0.05).abs() < 1e-12);
        assert_eq!(v.peak_bar, v.above_peak_bar);
        assert!((v.duration_s - 0.3).abs() < 1e-12);
    }

    proptest::proptest! {
        #[test]
        fn windows_combine(
            errs in proptest::collection::vec(-5.0f64..5.0, 60),
            split in 1usize..59,
        ) {
            let p = ParamSet::default();
            let mut r = record(errs.iter().enumerate().map(|(k, e)| (k as f64 * 0.1, 7000.0, 7000.0 + 1000.0 * e)).collect());
            for (k, s) in r.samples.iter_mut().enumerate() {
                s.w_h2_gen = 1e-5 * (k as f64 + 1.0);
            }
            let b = split as f64 * 0.1;
            let (w1, w2, w) = (Window::new(0.0, b), Window::new(b, 6.0), Window::new(0.0, 6.0));
            let (s1, n1) = tracking_sums(&r, w1);
            let (s2, n2) = tracking_sums(&r, w2);
            proptest::prop_assert_eq!(n1 + n2, 60);
            let mse = (tracking_mse(&r, w1) * n1 as f64 + tracking_mse(&r, w2) * n2 as f64) / 60.0;
            proptest::prop_assert!((mse - tracking_mse(&r, w)).abs() <= 1e-12 * (1.0 + mse));
            proptest::prop_assert!((s1 + s2 - tracking_sums(&r, w).0).abs() <= 1e-9);
            let prod = h2_production(&r, w1, &p) + h2_production(&r, w2, &p);
            proptest::prop_assert!((prod - h2_production(&r, w, &p)).abs() <= 1e-12 * prod);
            let aux = auxiliary_energy(&r, w1) + auxiliary_energy(&r, w2);
            proptest::prop_assert!((aux - auxiliary_energy(&r, w)).abs() <= 1e-12 * (1.0 + aux));
        }
    }

    #[test]
    fn table_is_aligned() {
        let r = record(vec![(0.0, 1.0, 1.0)]);
        let p = ParamSet::default();
        let s = crate::harness::scenario::Scenario::constant(1.0, 0.1);
        let rep = compute_metrics(&r, &s, &p);
        let t = format_table(&[rep.clone(), rep]);
        let widths: Vec<usize> = t.lines().map(|l| l.len()).collect();
        assert!(widths.windows(2).all(|w| w[0] == w[1]), "{t}");
    }
}
