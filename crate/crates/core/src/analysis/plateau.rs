use crate::error::{Error, Result};
use serde::{Deserialize, Serialize};

pub const DEFAULT_VALUE_TOLERANCE: f64 = 0.05;
/// Minimum plateau extent as a fraction of the sweep span.
pub const DEFAULT_MIN_EXTENT_FRACTION: f64 = 0.05;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Plateau {
    pub center_gate_v: f64,
    /// Mean conductance over the plateau, units of 2e^2/h.
    pub mean: f64,
    pub gate_extent_v: f64,
    /// RMS deviation from the mean.
    pub flatness_residual: f64,
    pub start_gate_v: f64,
    pub end_gate_v: f64,
    pub points: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PlateauSet {
    /// Ordered by center, non-overlapping.
    pub plateaus: Vec<Plateau>,
    pub value_tolerance: f64,
    pub min_extent_v: f64,
}

impl PlateauSet {
    /// Plateau means rounded to the nearest integer.
    pub fn levels(&self) -> Vec<i64> {
        self.plateaus.iter().map(|p| p.mean.round() as i64).collect()
    }

    /// First plateau whose mean lies within `tol` of `value`.
    pub fn find(&self, value: f64, tol: f64) -> Option<&Plateau> {
        self.plateaus.iter().find(|p| (p.mean - value).abs() <= tol)
    }

    /// Consecutive plateaus with the same rounded level are merged views of
    /// one step; this keeps the widest of each run.
    pub fn distinct_levels(&self) -> Vec<&Plateau> {
        let mut out: Vec<&Plateau> = Vec::new();
        for p in &self.plateaus {
            match out.last_mut() {
                Some(last) if last.mean.round() == p.mean.round() => {
                    if p.gate_extent_v > last.gate_extent_v {
                        *last = p;
                    }
                }
                _ => out.push(p),
            }
        }
        out
    }
}

/// Maximal gate intervals over which `G` stays within `value_tolerance` of
/// the interval mean and which span at least `min_extent_v` volts.
///
/// The trace is sorted by gate first, so ascending and descending sweeps
/// give the same set. Intervals are grown greedily from the low-gate end.
pub fn detect_plateaus(
    gate_voltages: &[f64],
    conductance: &[f64],
    value_tolerance: f64,
    min_extent_v: f64,
) -> Result<PlateauSet> {
    if gate_voltages.len() != conductance.len() {
        return Err(Error::InvalidParameter(format!(
            "{} gate values but {} conductance values",
            gate_voltages.len(),
            conductance.len()
        )));
    }
    if !(value_tolerance > 0.0 && min_extent_v >= 0.0) {
        return Err(Error::InvalidParameter(format!(
            "plateau tolerance must be positive and extent non-negative (got {value_tolerance}, {min_extent_v})"
        )));
    }
    let mut pts: Vec<(f64, f64)> = gate_voltages.iter().copied().zip(conductance.iter().copied()).collect();
    if pts.iter().any(|(v, g)| !v.is_finite() || !g.is_finite()) {
        return Err(Error::InvalidParameter("trace contains non-finite values".into()));
    }
    pts.sort_by(|a, b| a.0.total_cmp(&b.0));
    let mut plateaus = Vec::new();
    let n = pts.len();
    let mut i = 0;
    while i < n {
        let mut sum = pts[i].1;
        let (mut lo, mut hi) = (pts[i].1, pts[i].1);
        let mut j = i;
        while j + 1 < n {
            let g = pts[j + 1].1;
            let (nlo, nhi) = (lo.min(g), hi.max(g));
            let mean = (sum + g) / (j + 2 - i) as f64;
            if nhi - mean > value_tolerance || mean - nlo > value_tolerance {
                break;
            }
            sum += g;
            lo = nlo;
            hi = nhi;
            j += 1;
        }
        let extent = pts[j].0 - pts[i].0;
        if j > i && extent >= min_extent_v {
            let seg = &pts[i..=j];
            let mean = sum / seg.len() as f64;
            let rms = (seg.iter().map(|(_, g)| (g - mean).powi(2)).sum::<f64>() / seg.len() as f64).sqrt();
            plateaus.push(Plateau {
                center_gate_v: 0.5 * (pts[i].0 + pts[j].0),
                mean,
                gate_extent_v: extent,
                flatness_residual: rms,
                start_gate_v: pts[i].0,
                end_gate_v: pts[j].0,
                points: seg.len(),
            });
            i = j + 1;
        } else {
            i += 1;
        }
    }
    Ok(PlateauSet { plateaus, value_tolerance, min_extent_v })
}

/// [`detect_plateaus`] with the default tolerance and a minimum extent of
/// 5% of the sweep span.
pub fn detect_plateaus_default(gate_voltages: &[f64], conductance: &[f64]) -> Result<PlateauSet> {
    let (lo, hi) = gate_voltages.iter().fold((f64::INFINITY, f64::NEG_INFINITY), |(a, b), v| (a.min(*v), b.max(*v)));
    let span = if hi > lo { hi - lo } else { 0.0 };
    detect_plateaus(gate_voltages, conductance, DEFAULT_VALUE_TOLERANCE, DEFAULT_MIN_EXTENT_FRACTION * span)
}
