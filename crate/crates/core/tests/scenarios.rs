use elygov_core::harness::metrics::{compute_metrics, violation_stats};
use elygov_core::harness::{default_admissible_set, run_scenario, Governor, Scenario};
use elygov_core::params::{load_params, ParamSet, DEFAULT_CONFIG};

#[test]
fn runs_are_byte_identical() {
    let p = ParamSet::default();
    let set = default_admissible_set(&p).unwrap();
    let s = Scenario::large_step(&p);
    for g in [Governor::None, Governor::Lpf { tau: 14.5 }, Governor::Pg { omega: &set }] {
        let a = run_scenario(&s, &p, g).unwrap().to_csv(&p);
        let b = run_scenario(&s, &p, g).unwrap().to_csv(&p);
        assert_eq!(a, b);
    }
}

#[test]
fn ungoverned_runs_apply_the_request() {
    let p = ParamSet::default();
    for s in Scenario::shipped(&p) {
        let rec = run_scenario(&s, &p, Governor::None).unwrap();
        assert!(rec.samples.iter().all(|x| x.p_app == x.p_req && x.kappa.is_none()));
    }
}

#[test]
fn ungoverned_large_step_leaves_bounds_both_ways() {
    let p = ParamSet::default();
    let rec = run_scenario(&Scenario::large_step(&p), &p, Governor::None).unwrap();
    let v = violation_stats(&rec, &p);
    assert!(v.above_peak_bar > 0.0 && v.below_peak_bar > 0.0, "{v:?}");
}

#[test]
fn ungoverned_small_steps_stay_inside() {
    let p = ParamSet::default();
    let rec = run_scenario(&Scenario::small_steps(&p), &p, Governor::None).unwrap();
    assert_eq!(violation_stats(&rec, &p).duration_s, 0.0);
}

#[test]
fn governed_large_step_violation_is_brief() {
    let p = ParamSet::default();
    let set = default_admissible_set(&p).unwrap();
    let rec = run_scenario(&Scenario::large_step(&p), &p, Governor::Pg { omega: &set }).unwrap();
    let v = violation_stats(&rec, &p);
    assert!(v.duration_s <= 1.0 && v.peak_bar <= 0.1, "{v:?}");
}

#[test]
fn governor_leaves_small_steps_untouched() {
    let p = ParamSet::default();
    let set = default_admissible_set(&p).unwrap();
    let s = Scenario::small_steps(&p);
    let pg = compute_metrics(&run_scenario(&s, &p, Governor::Pg { omega: &set }).unwrap(), &s, &p);
    let lpf = compute_metrics(&run_scenario(&s, &p, Governor::Lpf { tau: 14.5 }).unwrap(), &s, &p);
    assert_eq!(pg.tracking_mse_kw2, 0.0);
    assert_eq!(pg.auxiliary_energy_kwh, 0.0);
    assert!(lpf.tracking_mse_kw2 > 0.0 && lpf.auxiliary_energy_kwh > 0.0);
}

#[test]
fn governor_beats_filter_on_large_step() {
    let p = ParamSet::default();
    let set = default_admissible_set(&p).unwrap();
    let s = Scenario::large_step(&p);
    let pg = compute_metrics(&run_scenario(&s, &p, Governor::Pg { omega: &set }).unwrap(), &s, &p);
    let lpf = compute_metrics(&run_scenario(&s, &p, Governor::Lpf { tau: 14.5 }).unwrap(), &s, &p);
    assert!(pg.tracking_mse_kw2 < lpf.tracking_mse_kw2);
    assert!(pg.h2_production_nm3 > lpf.h2_production_nm3);
    assert!(pg.auxiliary_energy_kwh < lpf.auxiliary_energy_kwh);
}

#[test]
fn configured_levels_change_the_scenario() {
    let text = DEFAULT_CONFIG.replacen("small_step_w = 1000.0", "small_step_w = 500.0", 1);
    let p = load_params(&text).unwrap();
    let s = Scenario::small_steps(&p);
    assert_eq!(s.breakpoints[3].1, 8500.0);
    let rec = run_scenario(&s, &p, Governor::None).unwrap();
    assert_eq!(rec.samples.iter().map(|x| x.p_req).fold(0.0, f64::max), 8500.0);
}
