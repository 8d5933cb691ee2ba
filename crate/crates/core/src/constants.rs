//! Physical constants and unit conversions.
//!
//! Everything internal is SI unless a name says otherwise; lattice quantities
//! use nm and eV because those are the natural scales of a tight-binding model.

use serde::{Deserialize, Serialize};
use std::f64::consts::PI;

/// Elementary charge (C).
pub const E_CHARGE: f64 = 1.602_176_634e-19;
/// Planck constant (J s).
pub const PLANCK: f64 = 6.626_070_15e-34;
/// Reduced Planck constant (J s).
pub const HBAR: f64 = PLANCK / (2.0 * PI);
/// Reduced Planck constant in eV s.
pub const HBAR_EV_S: f64 = HBAR / E_CHARGE;
/// Bohr magneton (eV/T).
pub const MU_B_EV_PER_T: f64 = 5.788_381_806_0e-5;
/// Boltzmann constant (eV/K).
pub const K_B_EV_PER_K: f64 = 8.617_333_262e-5;
/// Conductance quantum 2e^2/h (S).
pub const G0_SIEMENS: f64 = 2.0 * E_CHARGE * E_CHARGE / PLANCK;
/// Resistance quantum h/2e^2 (ohm).
pub const R0_OHM: f64 = 1.0 / G0_SIEMENS;
/// e/hbar in 1/(T nm^2): the Peierls phase per tesla per nm^2 of enclosed area.
pub const E_OVER_HBAR_PER_T_NM2: f64 = E_CHARGE / HBAR * 1e-18;

/// Constants used by the closed-form energy scales and the extraction pipeline.
///
/// `v_f` is configurable: the measured device never pins it down, and the
/// tight-binding lattice has its own `1.5 a t / hbar`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PhysicalConstants {
    pub hbar: f64,
    pub e_charge: f64,
    pub h: f64,
    pub v_f: f64,
    pub g_factor: f64,
    pub mu_b: f64,
    pub k_b: f64,
}

impl Default for PhysicalConstants {
    fn default() -> Self {
        Self {
            hbar: HBAR,
            e_charge: E_CHARGE,
            h: PLANCK,
            v_f: 1.0e6,
            g_factor: 2.0,
            mu_b: MU_B_EV_PER_T,
            k_b: K_B_EV_PER_K,
        }
    }
}

impl PhysicalConstants {
    pub fn with_fermi_velocity(v_f: f64) -> Self {
        Self { v_f, ..Self::default() }
    }

    /// hbar v_F in eV nm.
    pub fn hbar_vf_ev_nm(&self) -> f64 {
        self.hbar * self.v_f / self.e_charge * 1e9
    }

    /// Magnetic flux quantum h/e (T m^2).
    pub fn flux_quantum(&self) -> f64 {
        self.h / self.e_charge
    }

    /// Conductance quantum 2e^2/h (S).
    pub fn g0(&self) -> f64 {
        2.0 * self.e_charge * self.e_charge / self.h
    }

    pub fn is_consistent(&self) -> bool {
        let all_positive = [self.hbar, self.e_charge, self.h, self.v_f, self.g_factor, self.mu_b, self.k_b]
            .iter()
            .all(|v| *v > 0.0 && v.is_finite());
        all_positive && ((self.h - 2.0 * PI * self.hbar) / self.h).abs() < 1e-12
    }
}

/// Magnetic length sqrt(hbar / eB) in nm.
pub fn magnetic_length_nm(b_tesla: f64) -> f64 {
    (HBAR / (E_CHARGE * b_tesla.abs())).sqrt() * 1e9
}
