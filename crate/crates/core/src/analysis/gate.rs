use crate::constants::E_CHARGE;
use serde::{Deserialize, Serialize};
use std::f64::consts::PI;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Carrier {
    Electron,
    Hole,
    Neutral,
}

impl Carrier {
    pub fn sign(self) -> f64 {
        match self {
            Carrier::Electron => 1.0,
            Carrier::Hole => -1.0,
            Carrier::Neutral => 0.0,
        }
    }

    fn of(x: f64) -> Self {
        if x > 0.0 {
            Carrier::Electron
        } else if x < 0.0 {
            Carrier::Hole
        } else {
            Carrier::Neutral
        }
    }
}

/// Gate-induced carrier density and Fermi wavenumber.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GateDensity {
    /// Signed density (1/m^2), positive for electrons.
    pub density: f64,
    /// Fermi wavenumber (1/m).
    pub k_f: f64,
    pub carrier: Carrier,
}

/// Parallel-plate gate: `n = alpha (V_g - V_D) / e`, `k_F = sqrt(pi |n|)`.
/// `alpha` is the gate capacitance per area in F/m^2.
pub fn gate_to_kf(v_g: f64, alpha: f64, v_d: f64) -> GateDensity {
    let density = alpha * (v_g - v_d) / E_CHARGE;
    GateDensity { density, k_f: (PI * density.abs()).sqrt(), carrier: Carrier::of(density) }
}

/// Inverse of [`gate_to_kf`] for a given carrier type.
pub fn kf_to_gate(k_f: f64, carrier: Carrier, alpha: f64, v_d: f64) -> f64 {
    v_d + carrier.sign() * k_f * k_f / PI * E_CHARGE / alpha
}

/// Density (1/m^2) that puts the Fermi wavenumber at `k_f` (1/m).
pub fn kf_to_density(k_f: f64) -> f64 {
    k_f * k_f / PI
}

/// Signed Fermi energy (eV) for a signed density, given hbar v_F in eV nm.
pub fn density_to_fermi_energy(density: f64, hbar_vf_ev_nm: f64) -> f64 {
    let k_f_per_nm = (PI * density.abs()).sqrt() * 1e-9;
    density.signum() * hbar_vf_ev_nm * k_f_per_nm
}

/// Gate voltage that puts the Fermi level at `energy` (eV).
pub fn fermi_energy_to_gate(energy: f64, hbar_vf_ev_nm: f64, alpha: f64, v_d: f64) -> f64 {
    let k_f = energy.abs() / hbar_vf_ev_nm * 1e9;
    kf_to_gate(k_f, Carrier::of(energy), alpha, v_d)
}

#[cfg(test)]
mod tests {
    use super::*;

    const ALPHA: f64 = 8e-6; // 8 aF/um^2

    #[test]
    fn dirac_point_is_neutral() {
        let g = gate_to_kf(3.0, ALPHA, 3.0);
        assert_eq!(g.density, 0.0);
        assert_eq!(g.k_f, 0.0);
        assert_eq!(g.carrier, Carrier::Neutral);
    }

    #[test]
    fn ten_volts_at_eight_af() {
        // 8e-6 F/m^2 * 10 V / e = 4.993e14 m^-2 = 4.99e10 cm^-2
        let g = gate_to_kf(10.0, ALPHA, 0.0);
        assert!((g.density * 1e-4 / 1e10 - 4.993).abs() < 0.01, "{}", g.density);
        assert!((g.k_f / 3.96e7 - 1.0).abs() < 0.005, "{}", g.k_f);
        assert_eq!(g.carrier, Carrier::Electron);
    }

    #[test]
    fn forty_volts_of_holes() {
        let g = gate_to_kf(-40.0, ALPHA, 0.0);
        assert!((g.density * 1e-4 / -2.0e11 - 1.0).abs() < 0.01);
        assert_eq!(g.carrier, Carrier::Hole);
    }

    #[test]
    fn kf_of_three_e11() {
        // sqrt(pi * 3e15 m^-2) = 9.708e7 m^-1
        let g = gate_to_kf(3e15 * E_CHARGE / ALPHA, ALPHA, 0.0);
        assert!((g.k_f / 9.7e7 - 1.0).abs() < 0.005, "{}", g.k_f);
        assert!((kf_to_density(g.k_f) / 3e15 - 1.0).abs() < 1e-12);
    }

    #[test]
    fn fermi_energy_sign_and_scale() {
        let hv = 0.658_211_957; // hbar * 1e6 m/s in eV nm
        let n = kf_to_density(1e8);
        assert!((density_to_fermi_energy(n, hv) - 0.0658211957).abs() < 1e-9);
        assert!((density_to_fermi_energy(-n, hv) + 0.0658211957).abs() < 1e-9);
        assert_eq!(density_to_fermi_energy(0.0, hv), 0.0);
    }
}
