use super::plateau::{detect_plateaus, DEFAULT_MIN_EXTENT_FRACTION, DEFAULT_VALUE_TOLERANCE};
use crate::bands::hard_wall_subband_spacing;
use crate::constants::PhysicalConstants;
use crate::error::{Error, Result};
use crate::transport::BiasMap;
use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SubbandSpacing {
    pub delta_e_mev: f64,
    /// `hbar v_F pi / Delta E`.
    pub width_inferred_nm: f64,
    /// Bias column (V) where the half plateau is widest.
    pub bias_v: f64,
    /// Zero-bias plateau levels the half plateau sits between.
    pub lower_level: f64,
    pub upper_level: f64,
    pub half_plateau_extent_v: f64,
}

/// Subband spacing from a finite-bias map. Between zero-bias plateaus `m`
/// and `m'` the split model gives a plateau at `(m + m')/2` whose gate
/// extent is largest when `e V_sd` equals the threshold spacing; that bias
/// is the spacing.
pub fn subband_spacing_from_bias(map: &BiasMap, constants: &PhysicalConstants) -> Result<SubbandSpacing> {
    let zero = map.zero_bias_index().ok_or_else(|| Error::NoHalfPlateau("map has no zero-bias column".into()))?;
    if map.bias_voltages.iter().all(|&v| v == 0.0) {
        return Err(Error::NoHalfPlateau("map has no finite-bias data".into()));
    }
    let gates = &map.gate_voltages;
    let span =
        gates.iter().fold(f64::NEG_INFINITY, |m, v| m.max(*v)) - gates.iter().fold(f64::INFINITY, |m, v| m.min(*v));
    let min_extent = DEFAULT_MIN_EXTENT_FRACTION * span;
    let tol = DEFAULT_VALUE_TOLERANCE;
    let base = detect_plateaus(gates, &map.column(zero), tol, min_extent)?;
    let mut levels: Vec<f64> = base.distinct_levels().iter().map(|p| p.mean.round()).collect();
    levels.dedup();
    if levels.len() < 2 {
        return Err(Error::NoHalfPlateau(format!("need two zero-bias plateaus, found {}", levels.len())));
    }
    let halves: Vec<(f64, f64)> = levels.windows(2).map(|w| (w[0], w[1])).collect();
    let mut best: Option<SubbandSpacing> = None;
    for (j, &v) in map.bias_voltages.iter().enumerate() {
        if v == 0.0 {
            continue;
        }
        let set = detect_plateaus(gates, &map.column(j), tol, min_extent)?;
        for p in &set.plateaus {
            for &(lo, hi) in &halves {
                let mid = 0.5 * (lo + hi);
                // a mid value that is itself a zero-bias level is not a half plateau
                if levels.contains(&mid) || (p.mean - mid).abs() > tol {
                    continue;
                }
                if best.is_none_or(|b| p.gate_extent_v > b.half_plateau_extent_v) {
                    let delta = v.abs();
                    best = Some(SubbandSpacing {
                        delta_e_mev: delta * 1e3,
                        width_inferred_nm: hard_wall_subband_spacing(constants, 1.0) / delta,
                        bias_v: v,
                        lower_level: lo,
                        upper_level: hi,
                        half_plateau_extent_v: p.gate_extent_v,
                    });
                }
            }
        }
    }
    best.ok_or_else(|| Error::NoHalfPlateau("no half plateau at any bias".into()))
}

/// `hbar v_F pi / Delta E` in nm for a spacing in meV.
pub fn width_from_spacing(constants: &PhysicalConstants, delta_e_mev: f64) -> f64 {
    hard_wall_subband_spacing(constants, 1.0) / (delta_e_mev * 1e-3)
}
