//! Fixtures shared by the benches.

use gnc_core::lattice::build_ribbon;
use gnc_core::transport::{GreenOptions, TransportSolver};
use gnc_core::{DeviceLattice, EdgeType, LatticeParams};

/// Armchair ribbon of the given width and length (nm) at scaling factor 10.
pub fn ribbon(width_nm: f64, length_nm: f64) -> DeviceLattice {
    build_ribbon(LatticeParams::scaled(10.0), EdgeType::Armchair, width_nm, length_nm).expect("fixture ribbon")
}

pub fn solver(device: &DeviceLattice) -> TransportSolver {
    TransportSolver::new(device, GreenOptions::default()).expect("fixture solver")
}

/// A noisy four-step staircase sampled on `n` points.
pub fn staircase(n: usize) -> (Vec<f64>, Vec<f64>) {
    let v: Vec<f64> = (0..n).map(|i| 40.0 * i as f64 / n as f64).collect();
    let g = v.iter().enumerate().map(|(i, x)| (x / 10.0).floor() + 1e-3 * ((i * 7919) % 13) as f64).collect();
    (v, g)
}
