//! Unit conversions used at the parse and report boundaries.
//!
//! Everything inside the crate runs in SI (Pa, kg/s, K, W). Hydrogen flows
//! are reported in normal cubic metres per hour, where "normal" means 0 °C
//! and 1 atm (22.414 L/mol).

/// Molar volume of an ideal gas at 0 °C and 101325 Pa, m³/mol.
pub const NORMAL_MOLAR_VOLUME: f64 = 0.022414;

pub const PA_PER_BAR: f64 = 1.0e5;
pub const SECONDS_PER_HOUR: f64 = 3600.0;
pub const W_PER_KW: f64 = 1.0e3;
pub const J_PER_KWH: f64 = 3.6e6;
pub const KELVIN_OFFSET: f64 = 273.15;

/// Molar rate (mol/s) to mass rate (kg/s).
pub fn molar_to_mass_flow(n_dot: f64, molar_mass: f64) -> f64 {
    n_dot * molar_mass
}

/// Mass rate (kg/s) to molar rate (mol/s).
pub fn mass_to_molar_flow(w: f64, molar_mass: f64) -> f64 {
    w / molar_mass
}

/// Mass rate (kg/s) to normal volumetric rate (Nm³/h).
pub fn mass_flow_to_normal_volumetric(w: f64, molar_mass: f64) -> f64 {
    w / molar_mass * NORMAL_MOLAR_VOLUME * SECONDS_PER_HOUR
}

/// Normal volumetric rate (Nm³/h) to mass rate (kg/s).
pub fn normal_volumetric_to_mass_flow(nm3_per_h: f64, molar_mass: f64) -> f64 {
    nm3_per_h / (NORMAL_MOLAR_VOLUME * SECONDS_PER_HOUR) * molar_mass
}

pub fn bar_to_pa(bar: f64) -> f64 {
    bar * PA_PER_BAR
}

pub fn pa_to_bar(pa: f64) -> f64 {
    pa / PA_PER_BAR
}

pub fn celsius_to_kelvin(c: f64) -> f64 {
    c + KELVIN_OFFSET
}

pub fn kelvin_to_celsius(k: f64) -> f64 {
    k - KELVIN_OFFSET
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    const M_H2: f64 = 2.016e-3;

    #[test]
    fn zero_flow_maps_to_zero() {
        assert_eq!(molar_to_mass_flow(0.0, M_H2), 0.0);
        assert_eq!(mass_flow_to_normal_volumetric(0.0, M_H2), 0.0);
    }

    #[test]
    fn one_mole_per_second_of_hydrogen() {
        let w = molar_to_mass_flow(1.0, M_H2);
        assert_relative_eq!(w, 2.016e-3, max_relative = 1e-15);
        // (1 mol/s)(0.022414 m³/mol)(3600 s/h)
        assert_relative_eq!(
            mass_flow_to_normal_volumetric(w, M_H2),
            80.6904,
            max_relative = 1e-12
        );
    }

    #[test]
    fn temperature_round_trip() {
        assert_relative_eq!(celsius_to_kelvin(80.0), 353.15);
        assert_relative_eq!(kelvin_to_celsius(celsius_to_kelvin(21.5)), 21.5);
    }

    proptest::proptest! {
        #[test]
        fn conversions_are_mutually_inverse(w in 0.0f64..10.0, m in 1e-3f64..0.1) {
            let back = normal_volumetric_to_mass_flow(mass_flow_to_normal_volumetric(w, m), m);
            proptest::prop_assert!((back - w).abs() <= 1e-12 * w.abs().max(1e-300));
            let n = mass_to_molar_flow(molar_to_mass_flow(w, m), m);
            proptest::prop_assert!((n - w).abs() <= 1e-12 * w.abs().max(1e-300));
        }

        #[test]
        fn conversions_are_linear(a in 0.0f64..5.0, b in 0.0f64..5.0, m in 1e-3f64..0.1) {
            let lhs = mass_flow_to_normal_volumetric(a + b, m);
            let rhs = mass_flow_to_normal_volumetric(a, m) + mass_flow_to_normal_volumetric(b, m);
            proptest::prop_assert!((lhs - rhs).abs() <= 1e-12 * lhs.abs().max(1e-300));
        }
    }
}
