//! Landauer transmission, gate sweeps, thermal broadening and bias maps.
//!
//! Everything above the solver works on a [`TransmissionSource`]: either the
//! exact [`TransportSolver`] or a sampled [`TransmissionCurve`]. Traces and
//! bias maps built from the same source agree exactly at zero bias.

mod lead;
mod rgf;

pub use lead::{lead_self_energy, GreenOptions, LeadSide, SelfEnergy};
pub use rgf::{TransmissionResult, TransportSolver};

use crate::analysis::gate::{density_to_fermi_energy, gate_to_kf};
use crate::constants::K_B_EV_PER_K;
use crate::error::{Error, Result};
use crate::lattice::{apply_peierls, DeviceLattice};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use std::io::Write;

/// Below this temperature (K) the Fermi window is treated as a delta function.
pub const ZERO_TEMPERATURE: f64 = 1e-3;

/// Anything that returns a transmission at a real energy (eV).
pub trait TransmissionSource: Sync {
    fn transmission_at(&self, energy: f64) -> Result<f64>;

    fn fingerprint(&self) -> String;

    fn b_tesla(&self) -> f64;

    /// Data-parallel evaluation; results come back in input order.
    fn transmissions(&self, energies: &[f64]) -> Result<Vec<f64>> {
        energies.par_iter().map(|&e| self.transmission_at(e)).collect()
    }
}

impl TransmissionSource for TransportSolver {
    fn transmission_at(&self, energy: f64) -> Result<f64> {
        self.transmission(energy)
    }

    fn fingerprint(&self) -> String {
        TransportSolver::fingerprint(self).to_string()
    }

    fn b_tesla(&self) -> f64 {
        TransportSolver::b_tesla(self)
    }
}

/// Transmission sampled on an increasing energy grid, linearly interpolated.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TransmissionCurve {
    pub energies: Vec<f64>,
    pub transmission: Vec<f64>,
    pub fingerprint: String,
    pub b_tesla: f64,
}

impl TransmissionCurve {
    pub fn new(energies: Vec<f64>, transmission: Vec<f64>, fingerprint: String, b_tesla: f64) -> Result<Self> {
        if energies.len() != transmission.len() || energies.len() < 2 {
            return Err(Error::InvalidParameter("a curve needs at least two equal-length samples".into()));
        }
        if energies.windows(2).any(|w| w[1] <= w[0]) {
            return Err(Error::InvalidParameter("curve energies must be strictly increasing".into()));
        }
        Ok(Self { energies, transmission, fingerprint, b_tesla })
    }

    /// Samples `source` at the given energies.
    pub fn sample(source: &dyn TransmissionSource, energies: Vec<f64>) -> Result<Self> {
        let t = source.transmissions(&energies)?;
        Self::new(energies, t, source.fingerprint(), source.b_tesla())
    }

    /// Uniform grid from `lo` to `hi` with spacing at most `step`.
    pub fn uniform(source: &dyn TransmissionSource, lo: f64, hi: f64, step: f64) -> Result<Self> {
        Self::sample(source, uniform_grid(lo, hi, step)?)
    }

    /// Base grid plus dense uniform patches of half-width `half_width` and
    /// spacing `step` around every centre. Overlapping patches are merged so
    /// the dense regions stay uniform.
    pub fn refined(
        source: &dyn TransmissionSource,
        base: &[f64],
        centers: &[f64],
        half_width: f64,
        step: f64,
    ) -> Result<Self> {
        Self::sample(source, refined_grid(base, centers, half_width, step)?)
    }

    pub fn range(&self) -> (f64, f64) {
        (self.energies[0], self.energies[self.energies.len() - 1])
    }

    /// Linear interpolation; energies outside the sampled range are an error.
    pub fn value_at(&self, energy: f64) -> Result<f64> {
        let (lo, hi) = self.range();
        let slack = 1e-12 * (hi - lo).abs().max(1e-12);
        if !(energy >= lo - slack && energy <= hi + slack) {
            return Err(Error::WindowOutOfRange { lo: energy, hi: energy, min: lo, max: hi });
        }
        let e = energy.clamp(lo, hi);
        let i = self.energies.partition_point(|&x| x <= e);
        if i == 0 {
            return Ok(self.transmission[0]);
        }
        if i >= self.energies.len() {
            return Ok(self.transmission[self.energies.len() - 1]);
        }
        let (x0, x1) = (self.energies[i - 1], self.energies[i]);
        let (y0, y1) = (self.transmission[i - 1], self.transmission[i]);
        if e == x0 {
            return Ok(y0);
        }
        Ok(y0 + (y1 - y0) * (e - x0) / (x1 - x0))
    }

    /// Largest grid spacing among intervals that overlap `[lo, hi]`.
    pub fn max_step_within(&self, lo: f64, hi: f64) -> f64 {
        self.energies.windows(2).filter(|w| w[1] > lo && w[0] < hi).map(|w| w[1] - w[0]).fold(0.0, f64::max)
    }
}

impl TransmissionSource for TransmissionCurve {
    fn transmission_at(&self, energy: f64) -> Result<f64> {
        self.value_at(energy)
    }

    fn fingerprint(&self) -> String {
        self.fingerprint.clone()
    }

    fn b_tesla(&self) -> f64 {
        self.b_tesla
    }

    fn transmissions(&self, energies: &[f64]) -> Result<Vec<f64>> {
        energies.iter().map(|&e| self.value_at(e)).collect()
    }
}

pub fn uniform_grid(lo: f64, hi: f64, step: f64) -> Result<Vec<f64>> {
    if !(step > 0.0) || !(hi > lo) || !lo.is_finite() || !hi.is_finite() {
        return Err(Error::InvalidParameter(format!("bad grid [{lo}, {hi}] step {step}")));
    }
    let n = ((hi - lo) / step).ceil().max(1.0) as usize;
    Ok((0..=n).map(|i| lo + (hi - lo) * i as f64 / n as f64).collect())
}

fn refined_grid(base: &[f64], centers: &[f64], half_width: f64, step: f64) -> Result<Vec<f64>> {
    let mut spans: Vec<(f64, f64)> = centers.iter().map(|&c| (c - half_width, c + half_width)).collect();
    spans.sort_by(|a, b| a.0.total_cmp(&b.0));
    let mut merged: Vec<(f64, f64)> = Vec::new();
    for (lo, hi) in spans {
        match merged.last_mut() {
            Some(last) if lo <= last.1 => last.1 = last.1.max(hi),
            _ => merged.push((lo, hi)),
        }
    }
    let mut grid: Vec<f64> =
        base.iter().copied().filter(|&e| !merged.iter().any(|&(lo, hi)| e >= lo && e <= hi)).collect();
    for &(lo, hi) in &merged {
        // align patch nodes to a global lattice of spacing `step` for reproducibility
        let start = (lo / step).floor() * step;
        let stop = (hi / step).ceil() * step;
        let n = ((stop - start) / step).round() as usize;
        grid.extend((0..=n).map(|i| start + step * i as f64));
    }
    grid.sort_by(f64::total_cmp);
    grid.dedup_by(|a, b| (*a - *b).abs() < 1e-6 * step);
    if grid.len() < 2 {
        return Err(Error::InvalidParameter("refined grid has fewer than two points".into()));
    }
    Ok(grid)
}

/// `G = int T(E) (-df/dE)(E - E_F) dE` over `E_F +- 10 kT`, trapezoidal on
/// the curve's own nodes. The kernel weights are normalized so a constant
/// transmission is returned unchanged.
pub fn thermal_broadening(curve: &TransmissionCurve, temperature: f64, e_f: f64) -> Result<f64> {
    if temperature < ZERO_TEMPERATURE {
        return curve.value_at(e_f);
    }
    let kt = K_B_EV_PER_K * temperature;
    let (lo, hi) = (e_f - 10.0 * kt, e_f + 10.0 * kt);
    let (min, max) = curve.range();
    if lo < min || hi > max {
        return Err(Error::WindowOutOfRange { lo, hi, min, max });
    }
    let step = curve.max_step_within(lo, hi);
    if step >= 0.25 * kt {
        return Err(Error::GridTooCoarse { step, limit: 0.25 * kt });
    }
    let mut nodes: Vec<(f64, f64)> = vec![(lo, curve.value_at(lo)?)];
    for (e, t) in curve.energies.iter().zip(&curve.transmission) {
        if *e > lo && *e < hi {
            nodes.push((*e, *t));
        }
    }
    nodes.push((hi, curve.value_at(hi)?));
    let kernel = |e: f64| {
        let x = (e - e_f) / kt;
        // -df/dE = 1 / (4 kT cosh^2(x/2))
        let c = (0.5 * x).cosh();
        1.0 / (4.0 * kt * c * c)
    };
    let (mut num, mut den) = (0.0, 0.0);
    for w in nodes.windows(2) {
        let (e0, t0) = w[0];
        let (e1, t1) = w[1];
        let (k0, k1) = (kernel(e0), kernel(e1));
        let h = 0.5 * (e1 - e0);
        num += h * (k0 * t0 + k1 * t1);
        den += h * (k0 + k1);
    }
    Ok(num / den)
}

/// Gate electrostatics and the lattice's validity window.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GateModel {
    /// Capacitance per area (F/m^2).
    pub alpha: f64,
    /// Dirac-point gate voltage (V).
    pub dirac_point: f64,
    /// hbar v_F of the simulated lattice (eV nm).
    pub hbar_vf_ev_nm: f64,
    /// |E_F| above this (eV) is flagged as a lattice artifact.
    pub window_ev: f64,
}

impl GateModel {
    /// Uses the lattice's own Fermi velocity and the `t'/3` window.
    pub fn for_device(device: &DeviceLattice, alpha: f64, dirac_point: f64) -> Self {
        Self { alpha, dirac_point, hbar_vf_ev_nm: device.params.hbar_vf(), window_ev: device.params.t() / 3.0 }
    }

    pub fn fermi_energy(&self, v_g: f64) -> f64 {
        let g = gate_to_kf(v_g, self.alpha, self.dirac_point);
        density_to_fermi_energy(g.density, self.hbar_vf_ev_nm)
    }

    pub fn in_window(&self, energy: f64) -> bool {
        energy.abs() <= self.window_ev
    }

    fn check(&self) -> Result<()> {
        if !(self.alpha > 0.0 && self.alpha.is_finite()) {
            return Err(Error::InvalidParameter(format!("alpha must be positive, got {}", self.alpha)));
        }
        Ok(())
    }
}

/// Conductance versus gate voltage, simulated or measured.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ConductanceTrace {
    pub gate_voltages: Vec<f64>,
    /// Units of 2e^2/h.
    pub conductance: Vec<f64>,
    pub alpha: f64,
    pub dirac_point: f64,
    pub b_tesla: f64,
    pub temperature: f64,
    pub series_resistance: f64,
    pub fingerprint: Option<String>,
    /// Points whose Fermi energy left the lattice validity window.
    pub flagged: Vec<bool>,
}

impl ConductanceTrace {
    pub fn len(&self) -> usize {
        self.gate_voltages.len()
    }

    pub fn is_empty(&self) -> bool {
        self.gate_voltages.is_empty()
    }

    pub fn flagged_count(&self) -> usize {
        self.flagged.iter().filter(|f| **f).count()
    }

    pub fn write_csv<W: Write>(&self, mut out: W) -> Result<()> {
        if let Some(fp) = &self.fingerprint {
            writeln!(out, "# fingerprint: {fp}")?;
        }
        writeln!(out, "# B_T: {}", self.b_tesla)?;
        writeln!(out, "# temperature_K: {}", self.temperature)?;
        writeln!(out, "# alpha_F_per_m2: {}", self.alpha)?;
        writeln!(out, "# dirac_point_V: {}", self.dirac_point)?;
        writeln!(out, "# R_series_ohm: {}", self.series_resistance)?;
        writeln!(out, "# flagged_points: {}", self.flagged_count())?;
        writeln!(out, "Vg_V,G_2e2_over_h")?;
        for (v, g) in self.gate_voltages.iter().zip(&self.conductance) {
            writeln!(out, "{v},{g}")?;
        }
        Ok(())
    }
}

/// Gate-sweep settings shared by traces and bias maps.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GateSweep {
    pub gate_voltages: Vec<f64>,
    pub alpha: f64,
    pub dirac_point: f64,
    pub b_tesla: f64,
    pub temperature: f64,
}

/// Device with its Peierls phases set to `b_tesla`.
pub fn device_in_field(device: &DeviceLattice, b_tesla: f64) -> DeviceLattice {
    let delta = b_tesla - device.field_tesla;
    if delta == 0.0 {
        device.clone()
    } else {
        apply_peierls(device, delta)
    }
}

/// Simulated `G(V_g)` for a device: applies the field, builds the solver and
/// evaluates [`conductance_from_source`].
pub fn conductance_vs_gate(
    device: &DeviceLattice,
    sweep: &GateSweep,
    options: &GreenOptions,
) -> Result<ConductanceTrace> {
    let dev = device_in_field(device, sweep.b_tesla);
    let solver = TransportSolver::new(&dev, *options)?;
    let model = GateModel::for_device(&dev, sweep.alpha, sweep.dirac_point);
    conductance_from_source(&solver, &model, &sweep.gate_voltages, sweep.temperature)
}

/// `G(V_g)` from any transmission source. At finite temperature the source
/// is sampled on dense patches (spacing kT/8) around every Fermi energy.
pub fn conductance_from_source(
    source: &dyn TransmissionSource,
    model: &GateModel,
    gate_voltages: &[f64],
    temperature: f64,
) -> Result<ConductanceTrace> {
    model.check()?;
    check_monotone(gate_voltages, "gate grid")?;
    if !(temperature >= 0.0) {
        return Err(Error::InvalidParameter(format!("temperature must be >= 0, got {temperature}")));
    }
    let energies: Vec<f64> = gate_voltages.iter().map(|&v| model.fermi_energy(v)).collect();
    let flagged = energies.iter().map(|&e| !model.in_window(e)).collect();
    let conductance = if temperature < ZERO_TEMPERATURE {
        source.transmissions(&energies)?
    } else {
        let kt = K_B_EV_PER_K * temperature;
        let step = kt / 8.0;
        let curve = TransmissionCurve::refined(source, &[], &energies, 10.0 * kt + 2.0 * step, step)?;
        energies.par_iter().map(|&e| thermal_broadening(&curve, temperature, e)).collect::<Result<Vec<_>>>()?
    };
    Ok(ConductanceTrace {
        gate_voltages: gate_voltages.to_vec(),
        conductance,
        alpha: model.alpha,
        dirac_point: model.dirac_point,
        b_tesla: source.b_tesla(),
        temperature,
        series_resistance: 0.0,
        fingerprint: Some(source.fingerprint()),
        flagged,
    })
}

/// Differential conductance map, rows indexed by gate, columns by bias.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BiasMap {
    pub gate_voltages: Vec<f64>,
    pub bias_voltages: Vec<f64>,
    /// `g_diff[i][j]` at gate `i`, bias `j`, units of 2e^2/h.
    pub g_diff: Vec<Vec<f64>>,
    pub b_tesla: f64,
    pub alpha: f64,
    pub dirac_point: f64,
    pub fingerprint: Option<String>,
    pub flagged: Vec<bool>,
}

impl BiasMap {
    /// Column at the given bias index.
    pub fn column(&self, j: usize) -> Vec<f64> {
        self.g_diff.iter().map(|row| row[j]).collect()
    }

    /// Index of the exactly-zero bias column, if present.
    pub fn zero_bias_index(&self) -> Option<usize> {
        self.bias_voltages.iter().position(|&v| v == 0.0)
    }

    pub fn write_csv<W: Write>(&self, mut out: W) -> Result<()> {
        if let Some(fp) = &self.fingerprint {
            writeln!(out, "# fingerprint: {fp}")?;
        }
        writeln!(out, "# B_T: {}", self.b_tesla)?;
        writeln!(out, "# temperature_K: 0")?;
        writeln!(out, "# alpha_F_per_m2: {}", self.alpha)?;
        writeln!(out, "# dirac_point_V: {}", self.dirac_point)?;
        writeln!(out, "# flagged_points: {}", self.flagged.iter().filter(|f| **f).count())?;
        writeln!(out, "Vg_V,Vsd_V,Gdiff_2e2_over_h")?;
        for (v, row) in self.gate_voltages.iter().zip(&self.g_diff) {
            for (b, g) in self.bias_voltages.iter().zip(row) {
                writeln!(out, "{v},{b},{g}")?;
            }
        }
        Ok(())
    }
}

/// Symmetric source-drain split:
/// `g(V_g, V_sd) = [T(E_F + eV_sd/2) + T(E_F - eV_sd/2)] / 2`.
pub fn bias_map_from_source(
    source: &dyn TransmissionSource,
    model: &GateModel,
    gate_voltages: &[f64],
    bias_voltages: &[f64],
) -> Result<BiasMap> {
    model.check()?;
    check_monotone(gate_voltages, "gate grid")?;
    check_monotone(bias_voltages, "bias grid")?;
    let fermi: Vec<f64> = gate_voltages.iter().map(|&v| model.fermi_energy(v)).collect();
    // bias in volts is e V_sd in eV
    let mut energies = Vec::with_capacity(2 * fermi.len() * bias_voltages.len());
    for &e in &fermi {
        for &v in bias_voltages {
            energies.push(e + 0.5 * v);
            energies.push(e - 0.5 * v);
        }
    }
    let t = source.transmissions(&energies)?;
    let nb = bias_voltages.len();
    let g_diff = (0..fermi.len())
        .map(|i| (0..nb).map(|j| 0.5 * (t[2 * (i * nb + j)] + t[2 * (i * nb + j) + 1])).collect())
        .collect();
    let half = max_half_bias(bias_voltages);
    let flagged = fermi.iter().map(|&e| !model.in_window(e + half) || !model.in_window(e - half)).collect();
    Ok(BiasMap {
        gate_voltages: gate_voltages.to_vec(),
        bias_voltages: bias_voltages.to_vec(),
        g_diff,
        b_tesla: source.b_tesla(),
        alpha: model.alpha,
        dirac_point: model.dirac_point,
        fingerprint: Some(source.fingerprint()),
        flagged,
    })
}

/// Bias-map settings.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BiasSweep {
    pub gate_voltages: Vec<f64>,
    pub bias_voltages: Vec<f64>,
    pub alpha: f64,
    pub dirac_point: f64,
    pub b_tesla: f64,
    /// When set, transmission is first sampled on a uniform energy grid of
    /// this spacing (eV) and interpolated; otherwise every point is exact.
    pub energy_step: Option<f64>,
}

pub fn bias_map(device: &DeviceLattice, sweep: &BiasSweep, options: &GreenOptions) -> Result<BiasMap> {
    let dev = device_in_field(device, sweep.b_tesla);
    let solver = TransportSolver::new(&dev, *options)?;
    let model = GateModel::for_device(&dev, sweep.alpha, sweep.dirac_point);
    let (gates, biases) = (&sweep.gate_voltages, &sweep.bias_voltages);
    match sweep.energy_step {
        None => bias_map_from_source(&solver, &model, gates, biases),
        Some(step) => {
            let curve = curve_for_bias(&solver, &model, gates, biases, step)?;
            bias_map_from_source(&curve, &model, gates, biases)
        }
    }
}

/// Uniform curve covering every energy a bias map over these grids needs.
pub fn curve_for_bias(
    source: &dyn TransmissionSource,
    model: &GateModel,
    gate_voltages: &[f64],
    bias_voltages: &[f64],
    step: f64,
) -> Result<TransmissionCurve> {
    let fermi: Vec<f64> = gate_voltages.iter().map(|&v| model.fermi_energy(v)).collect();
    let half = max_half_bias(bias_voltages);
    let lo = fermi.iter().copied().fold(f64::INFINITY, f64::min) - half;
    let hi = fermi.iter().copied().fold(f64::NEG_INFINITY, f64::max) + half;
    let (lo, hi) = if hi > lo { (lo, hi) } else { (lo - step, hi + step) };
    TransmissionCurve::uniform(source, lo, hi, step)
}

fn max_half_bias(bias_voltages: &[f64]) -> f64 {
    0.5 * bias_voltages.iter().fold(0.0f64, |m, v| m.max(v.abs()))
}

fn check_monotone(grid: &[f64], what: &str) -> Result<()> {
    if grid.is_empty() {
        return Err(Error::InvalidParameter(format!("{what} is empty")));
    }
    if grid.iter().any(|v| !v.is_finite()) {
        return Err(Error::InvalidParameter(format!("{what} contains non-finite values")));
    }
    let up = grid.windows(2).all(|w| w[1] > w[0]);
    let down = grid.windows(2).all(|w| w[1] < w[0]);
    if !(up || down) {
        return Err(Error::InvalidParameter(format!("{what} must be strictly monotone")));
    }
    Ok(())
}
