//! Subband dispersions of a translation-invariant ribbon cell, plus the
//! closed-form energy scales used as analytic oracles.

use crate::constants::PhysicalConstants;
use crate::error::{Error, Result};
use crate::lattice::{DeviceLattice, EdgeType, LeadCell};
use ndarray::Array2;
use ndarray_linalg::{EigValsh, UPLO};
use num_complex::Complex64;
use serde::{Deserialize, Serialize};
use std::f64::consts::PI;
use std::io::Write;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BandStructure {
    /// Uniform grid over one Brillouin zone including both zone edges (1/nm).
    pub k_samples: Vec<f64>,
    /// `energies[i]` holds the sorted eigenvalues at `k_samples[i]` (eV).
    pub energies: Vec<Vec<f64>>,
    /// Length of the unit cell along the ribbon axis (nm).
    pub unit_cell_width: f64,
    pub edge_type: EdgeType,
    /// Group velocities below this (eV nm) count as band extrema.
    pub velocity_floor: f64,
}

/// Result of counting right-moving channels at one energy.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct ModeCount {
    pub count: usize,
    /// Counts just below and above `E` when `E` sits within grid resolution
    /// of a band extremum.
    pub ambiguous: Option<(usize, usize)>,
}

/// Bloch Hamiltonian `H(k) = H0 + H1 e^{ikP} + H1^dag e^{-ikP}`.
pub fn bloch_hamiltonian(lead: &LeadCell, k: f64) -> Array2<Complex64> {
    let n = lead.sites.len();
    let mut h = Array2::<Complex64>::zeros((n, n));
    for (i, e) in lead.onsite.iter().enumerate() {
        h[[i, i]] += Complex64::new(*e, 0.0);
    }
    for hop in &lead.intra {
        h[[hop.i, hop.j]] += hop.amplitude;
    }
    let phase = Complex64::from_polar(1.0, k * lead.period_nm);
    for hop in &lead.inter {
        let v = hop.amplitude * phase;
        h[[hop.i, hop.j]] += v;
        h[[hop.j, hop.i]] += v.conj();
    }
    h
}

/// Dispersion of the device's left lead cell on `k_count` uniform k points.
pub fn ribbon_bands(device: &DeviceLattice, k_count: usize) -> Result<BandStructure> {
    let floor = 1e-6 * device.params.t() * device.params.a();
    lead_bands(&device.left_lead, device.geometry.edge_type, floor, k_count)
}

pub fn lead_bands(lead: &LeadCell, edge_type: EdgeType, velocity_floor: f64, k_count: usize) -> Result<BandStructure> {
    if k_count < 16 {
        return Err(Error::InvalidParameter(format!("k_count must be >= 16, got {k_count}")));
    }
    let kmax = PI / lead.period_nm;
    let k_samples: Vec<f64> = (0..k_count).map(|i| -kmax + 2.0 * kmax * i as f64 / (k_count - 1) as f64).collect();
    let mut energies = Vec::with_capacity(k_count);
    for &k in &k_samples {
        let h = bloch_hamiltonian(lead, k);
        let dev = (&h - &h.t().mapv(|z| z.conj())).iter().fold(0.0f64, |m, z| m.max(z.norm()));
        if dev > 1e-10 {
            return Err(Error::NonHermitian(format!("Bloch matrix at k = {k} deviates by {dev:e}")));
        }
        let vals = h.eigvalsh(UPLO::Lower)?;
        let mut vals = vals.to_vec();
        vals.sort_by(f64::total_cmp);
        energies.push(vals);
    }
    Ok(BandStructure { k_samples, energies, unit_cell_width: lead.period_nm, edge_type, velocity_floor })
}

impl BandStructure {
    pub fn num_bands(&self) -> usize {
        self.energies.first().map(Vec::len).unwrap_or(0)
    }

    pub fn band(&self, m: usize) -> Vec<f64> {
        self.energies.iter().map(|e| e[m]).collect()
    }

    /// Fraction of the zone over which band `m` satisfies `|E| < tol`, with
    /// linear interpolation inside each k interval.
    pub fn zone_fraction_below(&self, m: usize, tol: f64) -> f64 {
        let e = self.band(m);
        let mut measure = 0.0;
        for w in e.windows(2) {
            let (a, b) = (w[0].abs() - tol, w[1].abs() - tol);
            measure += match (a < 0.0, b < 0.0) {
                (true, true) => 1.0,
                (false, false) => 0.0,
                _ => a.min(b).abs() / (a - b).abs(),
            };
        }
        measure / (e.len() - 1) as f64
    }

    pub fn energy_range(&self) -> (f64, f64) {
        self.energies.iter().flatten().fold((f64::MAX, f64::MIN), |(lo, hi), &e| (lo.min(e), hi.max(e)))
    }

    /// Values of every local band minimum and maximum on the grid, sorted.
    pub fn extrema(&self) -> Vec<f64> {
        let n = self.k_samples.len();
        let mut out = Vec::new();
        for m in 0..self.num_bands() {
            let b = self.band(m);
            for i in 0..n - 1 {
                let prev = b[if i == 0 { n - 2 } else { i - 1 }];
                let next = b[i + 1];
                if (b[i] - prev) * (next - b[i]) <= 0.0 {
                    out.push(b[i]);
                }
            }
        }
        out.sort_by(f64::total_cmp);
        out.dedup_by(|p, q| (*p - *q).abs() < 1e-12);
        out
    }

    /// Conduction-band thresholds: positive band minima, sorted.
    pub fn thresholds_above(&self, e_min: f64) -> Vec<f64> {
        let n = self.k_samples.len();
        let mut out = Vec::new();
        for m in 0..self.num_bands() {
            let b = self.band(m);
            for i in 0..n - 1 {
                let prev = b[if i == 0 { n - 2 } else { i - 1 }];
                if b[i] <= prev && b[i] <= b[i + 1] && b[i] > e_min {
                    out.push(b[i]);
                }
            }
        }
        out.sort_by(f64::total_cmp);
        out
    }

    fn raw_count(&self, e: f64) -> usize {
        let n = self.k_samples.len();
        let mut count = 0;
        for m in 0..self.num_bands() {
            for i in 0..n - 1 {
                let (e0, e1) = (self.energies[i][m], self.energies[i + 1][m]);
                let slope = (e1 - e0) / (self.k_samples[i + 1] - self.k_samples[i]);
                if e0 < e && e <= e1 && slope > self.velocity_floor {
                    count += 1;
                }
            }
        }
        count
    }

    /// Right-moving subbands at energy `e`; each is one spin-degenerate channel.
    pub fn count_propagating_modes(&self, e: f64) -> ModeCount {
        let count = self.raw_count(e);
        let n = self.k_samples.len();
        let mut resolution: f64 = 0.0;
        for m in 0..self.num_bands() {
            let b = self.band(m);
            for i in 0..n - 1 {
                let prev = b[if i == 0 { n - 2 } else { i - 1 }];
                let next = b[i + 1];
                let extremum = (b[i] - prev) * (next - b[i]) <= 0.0;
                let step = (b[i] - prev).abs().max((next - b[i]).abs());
                if extremum && (e - b[i]).abs() <= step {
                    resolution = resolution.max(step);
                }
            }
        }
        let ambiguous = (resolution > 0.0).then(|| (self.raw_count(e - resolution), self.raw_count(e + resolution)));
        ModeCount { count, ambiguous }
    }

    /// CSV with columns `k_per_nm, E_1..E_M` (eV).
    pub fn write_csv<W: Write>(&self, mut out: W) -> std::io::Result<()> {
        let header: Vec<String> =
            std::iter::once("k_per_nm".to_string()).chain((1..=self.num_bands()).map(|m| format!("E_{m}"))).collect();
        writeln!(out, "{}", header.join(","))?;
        for (k, row) in self.k_samples.iter().zip(&self.energies) {
            let cells: Vec<String> =
                std::iter::once(format!("{k:.10e}")).chain(row.iter().map(|e| format!("{e:.12e}"))).collect();
            writeln!(out, "{}", cells.join(","))?;
        }
        Ok(())
    }
}

/// Relativistic Landau level `E_n = v_F sqrt(2 hbar e B n)` in eV.
pub fn landau_level(constants: &PhysicalConstants, b_tesla: f64, n: u32) -> f64 {
    let c = constants;
    c.v_f * (2.0 * c.hbar * c.e_charge * b_tesla.abs() * n as f64).sqrt() / c.e_charge
}

/// Hard-wall subband spacing `hbar v_F pi / W` in eV for a width in nm.
pub fn hard_wall_subband_spacing(constants: &PhysicalConstants, width_nm: f64) -> f64 {
    constants.hbar_vf_ev_nm() * PI / width_nm
}

/// Which quantization sequence a device is expected to show.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum PlateauRegime {
    /// Valley degeneracy lifted by armchair edges: 1, 2, 3, ...
    Armchair,
    /// Zigzag edges: 1, 3, 5, ...
    Zigzag,
    /// Graphene quantum Hall sequence: 1, 3, 5, ...
    QuantumHall,
}

impl From<EdgeType> for PlateauRegime {
    fn from(e: EdgeType) -> Self {
        match e {
            EdgeType::Armchair => PlateauRegime::Armchair,
            EdgeType::Zigzag => PlateauRegime::Zigzag,
        }
    }
}

/// First `count` plateau values in units of 2e^2/h.
pub fn expected_plateau_sequence(regime: PlateauRegime, count: usize) -> Vec<u32> {
    match regime {
        PlateauRegime::Armchair => (1..=count as u32).collect(),
        PlateauRegime::Zigzag | PlateauRegime::QuantumHall => (0..count as u32).map(|i| 2 * i + 1).collect(),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::lattice::{build_ribbon, LatticeParams};

    fn armchair(units: usize) -> DeviceLattice {
        let p = LatticeParams::default();
        let w = (units - 1) as f64 * 0.5 * 3f64.sqrt() * p.a();
        let dev = build_ribbon(p, EdgeType::Armchair, w, 1.0).unwrap();
        assert_eq!(dev.realized.lead_units, units);
        dev
    }

    /// Lowest |E| over all bands and k.
    fn gap(b: &BandStructure) -> f64 {
        b.energies.iter().flatten().fold(f64::MAX, |m, e| m.min(e.abs()))
    }

    #[test]
    fn metallic_armchair_is_gapless() {
        // dimer-line count 5 = 2 (mod 3)
        let b = ribbon_bands(&armchair(5), 65).unwrap();
        assert!(gap(&b) < 1e-6, "gap {}", gap(&b));
        // the k = 0 point of the grid carries the crossing
        let mid = &b.energies[32];
        assert!(mid.iter().any(|e| e.abs() < 1e-10));
    }

    #[test]
    fn semiconducting_armchair_has_gap() {
        for units in [6, 7] {
            let b = ribbon_bands(&armchair(units), 65).unwrap();
            assert!(gap(&b) > 0.1, "N = {units}: gap {}", gap(&b));
            assert_eq!(b.count_propagating_modes(0.0).count, 0);
        }
    }

    #[test]
    fn zigzag_edge_band_is_flat() {
        let p = LatticeParams::scaled(1.0);
        let dev = build_ribbon(p, EdgeType::Zigzag, 20.0, 2.0).unwrap();
        let b = ribbon_bands(&dev, 121).unwrap();
        let tol = 0.02 * p.t();
        // edge states fill 2pi/3 < |kP| <= pi once the ribbon is wide in lattice units
        let frac = b.zone_fraction_below(b.num_bands() / 2, tol);
        assert!((1.0 / 3.0..0.4).contains(&frac), "{frac}");
        let edge = &b.energies[b.k_samples.len() - 1];
        assert_eq!(edge.iter().filter(|v| v.abs() < 1e-9).count(), 2);
        let mut lowest_conduction_min = f64::MAX;
        for row in &b.energies {
            let pos = row.iter().copied().filter(|e| *e >= 0.0).fold(f64::MAX, f64::min);
            lowest_conduction_min = lowest_conduction_min.min(pos);
        }
        assert!(lowest_conduction_min < 1e-6);
    }

    #[test]
    fn time_reversal_symmetry() {
        let b = ribbon_bands(&armchair(8), 41).unwrap();
        let n = b.k_samples.len();
        for i in 0..n {
            for (p, q) in b.energies[i].iter().zip(&b.energies[n - 1 - i]) {
                assert!((p - q).abs() < 1e-10);
            }
        }
    }

    #[test]
    fn mode_counting_basics() {
        let b = ribbon_bands(&armchair(5), 201).unwrap();
        // gapless single channel near zero
        assert_eq!(b.count_propagating_modes(1e-3).count, 1);
        let (lo, hi) = b.energy_range();
        assert_eq!(b.count_propagating_modes(hi + 1.0).count, 0);
        assert_eq!(b.count_propagating_modes(lo - 1.0).count, 0);
    }

    #[test]
    fn ambiguity_is_flagged_at_threshold() {
        let b = ribbon_bands(&armchair(6), 201).unwrap();
        let th = b.thresholds_above(0.0)[0];
        let mc = b.count_propagating_modes(th);
        let (lo, hi) = mc.ambiguous.expect("flagged");
        assert!(hi > lo);
        assert!(b.count_propagating_modes(th + 0.05).ambiguous.is_none());
    }

    #[test]
    fn rejects_coarse_grid() {
        assert!(ribbon_bands(&armchair(5), 8).is_err());
    }

    #[test]
    fn csv_header() {
        let b = ribbon_bands(&armchair(5), 16).unwrap();
        let mut buf = Vec::new();
        b.write_csv(&mut buf).unwrap();
        let text = String::from_utf8(buf).unwrap();
        let first = text.lines().next().unwrap();
        assert!(first.starts_with("k_per_nm,E_1,E_2"));
        assert_eq!(text.lines().count(), 17);
    }

    #[test]
    fn landau_levels() {
        let c = PhysicalConstants::default();
        assert_eq!(landau_level(&c, 0.7, 0), 0.0);
        let e = |n| landau_level(&c, 0.5, n);
        let mean = 0.5 * ((e(3) - e(2)) + (e(4) - e(3)));
        assert!((mean * 1e3 - 7.5).abs() < 0.2, "{}", mean * 1e3);
        for n in 1..6 {
            assert!((landau_level(&c, 2.0, n) / landau_level(&c, 0.5, n) - 2.0).abs() < 1e-12);
        }
    }

    #[test]
    fn landau_fan_is_linear_in_inverse_field() {
        let c = PhysicalConstants::default();
        let e = 0.05;
        // n(E) = E^2 / (2 hbar e B v_F^2) in SI
        for b in [0.2, 0.5, 1.0, 2.0] {
            let n_real = (e * c.e_charge / c.v_f).powi(2) / (2.0 * c.hbar * c.e_charge * b);
            let n = n_real.floor() as u32;
            assert!(landau_level(&c, b, n) <= e + 1e-15);
            assert!(landau_level(&c, b, n + 1) > e);
            let n_ref = (e * c.e_charge / c.v_f).powi(2) / (2.0 * c.hbar * c.e_charge);
            assert!((n_real * b - n_ref).abs() < 1e-9 * n_ref);
        }
    }

    #[test]
    fn hard_wall_spacing() {
        let c = PhysicalConstants::default();
        assert!((hard_wall_subband_spacing(&c, 240.0) * 1e3 - 8.6).abs() < 0.05);
        assert!((hard_wall_subband_spacing(&c, 300.0) * 1e3 - 6.9).abs() < 0.05);
        let w = 137.0;
        assert!((hard_wall_subband_spacing(&c, 2.0 * w) * 2.0 - hard_wall_subband_spacing(&c, w)).abs() < 1e-15);
        let product = hard_wall_subband_spacing(&c, 10.0) * 10.0;
        for w in [1.0, 33.3, 250.0, 1e4] {
            assert!((hard_wall_subband_spacing(&c, w) * w - product).abs() < 1e-15 * product.max(1.0));
        }
    }

    #[test]
    fn plateau_sequences() {
        assert_eq!(expected_plateau_sequence(PlateauRegime::Armchair, 3), vec![1, 2, 3]);
        assert_eq!(expected_plateau_sequence(PlateauRegime::Zigzag, 3), vec![1, 3, 5]);
        assert_eq!(expected_plateau_sequence(PlateauRegime::QuantumHall, 4), vec![1, 3, 5, 7]);
    }
}
