use super::gate::gate_to_kf;
use crate::constants::{PhysicalConstants, R0_OHM};
use crate::error::{Error, Result};
use crate::transport::ConductanceTrace;
use serde::{Deserialize, Serialize};
use std::f64::consts::PI;

/// Ballistic mode count and conductance of a constriction.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Ballistic {
    /// `k_F W / pi`, per valley.
    pub modes: f64,
    /// `2 N` in units of 2e^2/h (valley degeneracy).
    pub conductance: f64,
}

/// `G_bal = 4e^2/h * k_F W / pi`, with `k_F` in 1/m and `W` in m.
pub fn ballistic_conductance(k_f: f64, width_m: f64) -> Ballistic {
    let modes = k_f * width_m / PI;
    Ballistic { modes, conductance: 2.0 * modes }
}

/// Transmission fraction `G / G_bal` and the mean free path it implies.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TransmissionFraction {
    pub fraction: f64,
    pub mean_free_path_nm: f64,
    /// `fraction > 1.05`: the assumed geometry cannot be right.
    pub inconsistent: bool,
}

/// `g` in units of 2e^2/h, `k_f` in 1/m, `width_m` and `length_m` in m.
pub fn transmission_fraction(g: f64, k_f: f64, width_m: f64, length_m: f64) -> Result<TransmissionFraction> {
    if !(g >= 0.0 && k_f > 0.0 && width_m > 0.0 && length_m > 0.0) {
        return Err(Error::InvalidParameter(format!(
            "transmission fraction needs G >= 0 and positive k_F, W, L (got {g}, {k_f}, {width_m}, {length_m})"
        )));
    }
    let fraction = g / ballistic_conductance(k_f, width_m).conductance;
    Ok(TransmissionFraction { fraction, mean_free_path_nm: fraction * length_m * 1e9, inconsistent: fraction > 1.05 })
}

/// Mean free path from the two-probe sheet conductivity at each `k_F > 0`
/// point of a trace: `lambda = (pi/2) sigma / k_F` with `sigma = G L / W` in
/// units of 2e^2/h. The `pi/2` makes `lambda = T L`, so both routes through
/// the ballistic conductance agree.
pub fn mean_free_path(trace: &ConductanceTrace, length_m: f64, width_m: f64) -> Result<Vec<(f64, f64)>> {
    if !(length_m > 0.0 && width_m > 0.0) {
        return Err(Error::InvalidParameter(format!(
            "mean free path needs positive L and W (got {length_m}, {width_m})"
        )));
    }
    Ok(trace
        .gate_voltages
        .iter()
        .zip(&trace.conductance)
        .filter_map(|(&v, &g)| {
            let k_f = gate_to_kf(v, trace.alpha, trace.dirac_point).k_f;
            (k_f > 0.0).then(|| (k_f, mean_free_path_at(g, k_f, length_m, width_m) * 1e9))
        })
        .collect())
}

/// Single-point mean free path (m).
pub fn mean_free_path_at(g: f64, k_f: f64, length_m: f64, width_m: f64) -> f64 {
    0.5 * PI * g * length_m / (width_m * k_f)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EnergyScales {
    pub zeeman_ev: f64,
    pub thermal_ev: f64,
    /// `zeeman / thermal`; infinite at zero temperature.
    pub ratio: f64,
}

pub fn energy_scales(constants: &PhysicalConstants, b_tesla: f64, temperature: f64) -> EnergyScales {
    let zeeman_ev = constants.g_factor * constants.mu_b * b_tesla.abs();
    let thermal_ev = constants.k_b * temperature;
    let ratio = if thermal_ev > 0.0 { zeeman_ev / thermal_ev } else { f64::INFINITY };
    EnergyScales { zeeman_ev, thermal_ev, ratio }
}

/// Removes a series resistance: `G = 1 / (1/G_raw - R)`. Negative `r_ohm`
/// puts resistance back.
pub fn subtract_series_resistance(trace: &ConductanceTrace, r_ohm: f64) -> Result<ConductanceTrace> {
    if !r_ohm.is_finite() {
        return Err(Error::InvalidParameter(format!("series resistance must be finite, got {r_ohm}")));
    }
    let mut out = trace.clone();
    for (i, g) in out.conductance.iter_mut().enumerate() {
        if *g == 0.0 {
            continue;
        }
        let inverse_g_ohm = R0_OHM / *g;
        let rest = inverse_g_ohm - r_ohm;
        if rest <= 0.0 {
            return Err(Error::OverSubtraction { index: i, r_ohm, inverse_g_ohm });
        }
        *g = R0_OHM / rest;
    }
    out.series_resistance += r_ohm;
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::constants::{G0_SIEMENS, K_B_EV_PER_K};

    fn trace(g: Vec<f64>) -> ConductanceTrace {
        let n = g.len();
        ConductanceTrace {
            gate_voltages: (0..n).map(|i| i as f64).collect(),
            conductance: g,
            alpha: 8e-6,
            dirac_point: 0.0,
            b_tesla: 0.0,
            temperature: 0.0,
            series_resistance: 0.0,
            fingerprint: None,
            flagged: vec![false; n],
        }
    }

    #[test]
    fn ballistic_samples() {
        let g1 = ballistic_conductance(70e6, 2.5e-6).conductance;
        assert!((g1 - 350.0 / PI).abs() < 1e-12);
        let g2 = ballistic_conductance(80e6, 1.5e-6).conductance;
        assert!((g2 - 76.0).abs() < 1.0);
        assert_eq!(ballistic_conductance(0.0, 1e-6).conductance, 0.0);
    }

    #[test]
    fn transmission_fraction_samples() {
        let s1 = transmission_fraction(21.0, 70e6, 2.5e-6, 1e-6).unwrap();
        assert!((s1.fraction - 0.19).abs() < 0.01);
        assert!((s1.mean_free_path_nm - 190.0).abs() < 10.0);
        let s2 = transmission_fraction(35.0, 80e6, 1.5e-6, 1e-6).unwrap();
        assert!((s2.fraction - 0.47).abs() < 0.047 && !s2.inconsistent);
        let full = ballistic_conductance(70e6, 2.5e-6).conductance;
        let t = transmission_fraction(full, 70e6, 2.5e-6, 1e-6).unwrap();
        assert!((t.fraction - 1.0).abs() < 1e-15);
        assert!((t.mean_free_path_nm - 1000.0).abs() < 1e-9);
        assert!(transmission_fraction(1.1 * full, 70e6, 2.5e-6, 1e-6).unwrap().inconsistent);
    }

    #[test]
    fn einstein_route_matches_transmission_route() {
        let (k_f, w, l) = (70e6, 2.5e-6, 1e-6);
        let lambda = mean_free_path_at(21.0, k_f, l, w) * 1e9;
        assert!((lambda - 190.0).abs() < 10.0, "{lambda}");
        let t = transmission_fraction(21.0, k_f, w, l).unwrap();
        assert!((lambda - t.mean_free_path_nm).abs() < 1e-10 * lambda);
        assert_eq!(mean_free_path_at(0.0, k_f, l, w), 0.0);
    }

    #[test]
    fn ballistic_trace_has_mean_free_path_equal_to_length() {
        let w = 300e-9;
        let mut t = trace(vec![0.0; 20]);
        t.gate_voltages = (0..20).map(|i| -10.0 + i as f64 * 1.7).collect();
        t.conductance = t
            .gate_voltages
            .iter()
            .map(|&v| ballistic_conductance(gate_to_kf(v, t.alpha, 0.0).k_f, w).conductance)
            .collect();
        let mfp = mean_free_path(&t, w, w).unwrap();
        assert_eq!(mfp.len(), 20);
        for (_, l) in mfp {
            assert!((l - 300.0).abs() < 1e-9);
        }
    }

    #[test]
    fn energy_scale_samples() {
        let c = PhysicalConstants::default();
        let s = energy_scales(&c, 0.2, 4.2);
        assert!((s.zeeman_ev - 23.15e-6).abs() < 0.05e-6);
        assert!((s.zeeman_ev - 25e-6).abs() / 25e-6 < 0.15);
        assert!((s.thermal_ev - 362e-6).abs() < 1e-6);
        assert!((s.ratio - 0.064).abs() < 0.001);
        assert_eq!(energy_scales(&c, 0.0, 4.2).zeeman_ev, 0.0);
        assert!((s.thermal_ev - K_B_EV_PER_K * 4.2).abs() < 1e-18);
    }

    #[test]
    fn series_resistance() {
        let raw = 1.0 / (R0_OHM + 80.0) / G0_SIEMENS;
        let t = trace(vec![raw, 0.5, 0.0]);
        assert_eq!(subtract_series_resistance(&t, 0.0).unwrap(), t);
        let c = subtract_series_resistance(&t, 80.0).unwrap();
        assert!((c.conductance[0] - 1.0).abs() < 1e-6);
        assert_eq!(c.series_resistance, 80.0);
        assert_eq!(c.conductance[2], 0.0);
        let back = subtract_series_resistance(&c, -80.0).unwrap();
        for (a, b) in back.conductance.iter().zip(&t.conductance) {
            assert!((a - b).abs() < 1e-12);
        }
        match subtract_series_resistance(&t, 30_000.0) {
            Err(Error::OverSubtraction { index: 0, .. }) => {}
            other => panic!("{other:?}"),
        }
    }
}
