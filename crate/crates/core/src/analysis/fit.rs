use super::gate::{gate_to_kf, Carrier};
use crate::constants::{E_CHARGE, HBAR, PLANCK};
use crate::error::{Error, Result};
use crate::transport::ConductanceTrace;
use serde::{Deserialize, Serialize};
use std::f64::consts::PI;

pub const MIN_WIDTH_FIT_POINTS: usize = 8;
pub const MIN_REGIME_POINTS: usize = 4;

/// Width from `G = (2/pi) k_F W` fitted through the origin.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct WidthFit {
    pub width_nm: f64,
    /// RMS misfit in units of 2e^2/h.
    pub residual: f64,
    pub points: usize,
}

/// Separate fits for each carrier type; a side with too few points is `None`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SemiclassicalWidth {
    pub electron: Option<WidthFit>,
    pub hole: Option<WidthFit>,
}

impl SemiclassicalWidth {
    /// Both sides pooled by point count, or whichever side exists.
    pub fn combined(&self) -> Option<WidthFit> {
        match (self.electron, self.hole) {
            (Some(e), Some(h)) => {
                let n = (e.points + h.points) as f64;
                Some(WidthFit {
                    width_nm: (e.width_nm * e.points as f64 + h.width_nm * h.points as f64) / n,
                    residual: ((e.residual.powi(2) * e.points as f64 + h.residual.powi(2) * h.points as f64) / n)
                        .sqrt(),
                    points: e.points + h.points,
                })
            }
            (e, h) => e.or(h),
        }
    }
}

pub fn fit_width_semiclassical(trace: &ConductanceTrace) -> Result<SemiclassicalWidth> {
    let side = |carrier: Carrier| -> Option<WidthFit> {
        let pts: Vec<(f64, f64)> = trace
            .gate_voltages
            .iter()
            .zip(&trace.conductance)
            .filter_map(|(&v, &g)| {
                let d = gate_to_kf(v, trace.alpha, trace.dirac_point);
                (d.carrier == carrier && g.is_finite()).then_some((d.k_f, g))
            })
            .collect();
        if pts.len() < MIN_WIDTH_FIT_POINTS {
            return None;
        }
        let sxx: f64 = pts.iter().map(|(k, _)| k * k).sum();
        let sxy: f64 = pts.iter().map(|(k, g)| k * g).sum();
        let slope = sxy / sxx;
        let rms = (pts.iter().map(|(k, g)| (g - slope * k).powi(2)).sum::<f64>() / pts.len() as f64).sqrt();
        Some(WidthFit { width_nm: slope * PI / 2.0 * 1e9, residual: rms, points: pts.len() })
    };
    let out = SemiclassicalWidth { electron: side(Carrier::Electron), hole: side(Carrier::Hole) };
    if out.electron.is_none() && out.hole.is_none() {
        return Err(Error::InsufficientData(format!(
            "semiclassical width fit needs at least {MIN_WIDTH_FIT_POINTS} points of one carrier type"
        )));
    }
    Ok(out)
}

/// Piecewise fit of a plateau position against field: constant `dv_sat`
/// below `b_star`, `slope * B` above, continuous at `b_star`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CrossoverFit {
    pub b_star_t: f64,
    pub width_nm: f64,
    pub k_f: f64,
    pub dv_sat: f64,
    pub slope_v_per_t: f64,
    /// Total squared misfit; infinite when the two regimes cannot be told apart.
    pub residual: f64,
    pub plateau_index: usize,
}

impl CrossoverFit {
    pub fn is_ambiguous(&self) -> bool {
        self.residual.is_infinite()
    }
}

/// `W = 2 hbar k_F / (e B*)`, the field at which the cyclotron diameter
/// equals the width. Returns nm.
pub fn crossover_width_from_kf(k_f: f64, b_star_t: f64) -> f64 {
    2.0 * HBAR * k_f / (E_CHARGE * b_star_t) * 1e9
}

/// Fits `(B, dV_N)` pairs, where `dV_N` is the gate offset of plateau `N`
/// from the Dirac point. Break points are tried between every pair of
/// neighbouring fields; the split with the least total squared misfit wins.
pub fn crossover_width(points: &[(f64, f64)], alpha: f64, plateau_index: usize) -> Result<CrossoverFit> {
    if !(alpha > 0.0) {
        return Err(Error::InvalidParameter(format!("alpha must be positive, got {alpha}")));
    }
    let mut pts: Vec<(f64, f64)> = points.to_vec();
    if pts.iter().any(|(b, v)| !b.is_finite() || !v.is_finite()) {
        return Err(Error::InvalidParameter("non-finite crossover data".into()));
    }
    pts.sort_by(|a, b| a.0.total_cmp(&b.0));
    let n = pts.len();
    if n < 2 * MIN_REGIME_POINTS {
        return Err(Error::InsufficientData(format!(
            "crossover fit needs {} points per regime, got {n} in total",
            MIN_REGIME_POINTS
        )));
    }
    let sse_const = |s: &[(f64, f64)]| {
        let c = s.iter().map(|p| p.1).sum::<f64>() / s.len() as f64;
        (c, s.iter().map(|p| (p.1 - c).powi(2)).sum::<f64>())
    };
    let sse_lin = |s: &[(f64, f64)]| {
        let sxx: f64 = s.iter().map(|p| p.0 * p.0).sum();
        let m = if sxx > 0.0 { s.iter().map(|p| p.0 * p.1).sum::<f64>() / sxx } else { 0.0 };
        (m, s.iter().map(|p| (p.1 - m * p.0).powi(2)).sum::<f64>())
    };
    let mut best: Option<(f64, f64, f64)> = None;
    for k in MIN_REGIME_POINTS..=n - MIN_REGIME_POINTS {
        let (c, e1) = sse_const(&pts[..k]);
        let (m, e2) = sse_lin(&pts[k..]);
        let total = e1 + e2;
        if best.is_none_or(|b| total < b.2) {
            best = Some((c, m, total));
        }
    }
    let (c, m, sse) = best.expect("at least one split");
    let b_star = if m != 0.0 { c / m } else { f64::INFINITY };
    let k_f = gate_to_kf(c.abs(), alpha, 0.0).k_f;
    let width_nm = crossover_width_from_kf(k_f, b_star.abs());
    // a single regime describing the data as well as the split means there
    // is no crossover to locate
    let single = sse_const(&pts).1.min(sse_lin(&pts).1);
    let in_range = b_star > pts[0].0 && b_star < pts[n - 1].0;
    let separated = single > 2.0 * sse + 1e-12 * pts.iter().map(|p| p.1 * p.1).sum::<f64>();
    let residual = if c.signum() == m.signum() && m != 0.0 && in_range && separated { sse } else { f64::INFINITY };
    Ok(CrossoverFit { b_star_t: b_star, width_nm, k_f, dv_sat: c, slope_v_per_t: m, residual, plateau_index })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CapacitanceFit {
    /// F/m^2.
    pub alpha: f64,
    /// Fitted gate offset of zero density relative to `V_D` (V).
    pub offset_v: f64,
    /// RMS density misfit (1/m^2).
    pub residual: f64,
}

/// Quantum Hall plateau `nu` sits at density `nu e B / h`; the slope of
/// density against `V_g - V_D` gives `alpha = e dn/dV_g`.
pub fn extract_capacitance(plateaus: &[(f64, f64)], b_tesla: f64, dirac_point: f64) -> Result<CapacitanceFit> {
    if plateaus.len() < 2 {
        return Err(Error::InsufficientData("capacitance fit needs at least two plateaus".into()));
    }
    if !(b_tesla.abs() > 0.0) {
        return Err(Error::InvalidParameter("capacitance fit needs a non-zero field".into()));
    }
    let xs: Vec<f64> = plateaus.iter().map(|p| p.1 - dirac_point).collect();
    let ys: Vec<f64> = plateaus.iter().map(|p| p.0 * E_CHARGE * b_tesla.abs() / PLANCK).collect();
    let nf = xs.len() as f64;
    let (mx, my) = (xs.iter().sum::<f64>() / nf, ys.iter().sum::<f64>() / nf);
    let sxx: f64 = xs.iter().map(|x| (x - mx).powi(2)).sum();
    if !(sxx > 1e-24 * xs.iter().map(|x| x * x).sum::<f64>().max(1e-300)) {
        return Err(Error::DegenerateFit("all plateaus sit at the same gate voltage".into()));
    }
    let sxy: f64 = xs.iter().zip(&ys).map(|(x, y)| (x - mx) * (y - my)).sum();
    let slope = sxy / sxx;
    if !(slope > 0.0) {
        return Err(Error::DegenerateFit(format!("density does not increase with gate (slope {slope:e})")));
    }
    let intercept = my - slope * mx;
    let residual = (xs.iter().zip(&ys).map(|(x, y)| (y - intercept - slope * x).powi(2)).sum::<f64>() / nf).sqrt();
    Ok(CapacitanceFit { alpha: E_CHARGE * slope, offset_v: -intercept / slope, residual })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::analysis::gate::kf_to_gate;

    fn trace_from(gates: Vec<f64>, g: impl Fn(f64) -> f64) -> ConductanceTrace {
        let n = gates.len();
        let alpha = 8e-6;
        ConductanceTrace {
            conductance: gates.iter().map(|&v| g(gate_to_kf(v, alpha, 1.0).k_f)).collect(),
            gate_voltages: gates,
            alpha,
            dirac_point: 1.0,
            b_tesla: 0.0,
            temperature: 0.0,
            series_resistance: 0.0,
            fingerprint: None,
            flagged: vec![false; n],
        }
    }

    #[test]
    fn exact_line_gives_its_width() {
        let w0 = 200e-9;
        let t = trace_from((0..41).map(|i| -19.0 + i as f64).collect(), |k| 2.0 / PI * k * w0);
        let fit = fit_width_semiclassical(&t).unwrap();
        for side in [fit.electron.unwrap(), fit.hole.unwrap()] {
            assert!((side.width_nm - 200.0).abs() < 1e-10 * 200.0);
            assert!(side.residual < 1e-10);
        }
        assert_eq!(fit.electron.unwrap().points, 20);
    }

    #[test]
    fn width_fit_ignores_gate_grid_scaling() {
        let w0 = 150e-9;
        let stair = |k: f64| (2.0 / PI * k * w0).floor() + 0.5;
        let a = trace_from((0..60).map(|i| 1.5 + 0.5 * i as f64).collect(), stair);
        // same (k_F, G) pairs reached through a rescaled gate axis
        let mut b = a.clone();
        b.alpha = a.alpha * 4.0;
        b.gate_voltages = a.gate_voltages.iter().map(|v| 1.0 + (v - 1.0) / 4.0).collect();
        let (fa, fb) = (fit_width_semiclassical(&a).unwrap(), fit_width_semiclassical(&b).unwrap());
        assert!((fa.electron.unwrap().width_nm - fb.electron.unwrap().width_nm).abs() < 1e-9);
    }

    #[test]
    fn width_fit_needs_points() {
        let t = trace_from((0..7).map(|i| 2.0 + i as f64).collect(), |k| k * 1e-7);
        assert!(matches!(fit_width_semiclassical(&t), Err(Error::InsufficientData(_))));
    }

    #[test]
    fn crossover_anchor() {
        let w = crossover_width_from_kf(1.37e7, 0.06);
        assert!((w - 300.0).abs() < 3.0, "{w}");
    }

    fn piecewise(b_star: f64, dv: f64) -> Vec<(f64, f64)> {
        (1..=20)
            .map(|i| {
                let b = 0.015 * i as f64;
                (b, if b < b_star { dv } else { dv * b / b_star })
            })
            .collect()
    }

    #[test]
    fn crossover_recovers_its_own_model() {
        let alpha = 8e-6;
        let dv = 0.5;
        let fit = crossover_width(&piecewise(0.0675, dv), alpha, 1).unwrap();
        assert!((fit.b_star_t - 0.0675).abs() < 1e-8 * 0.0675, "{fit:?}");
        let w = crossover_width_from_kf(gate_to_kf(dv, alpha, 0.0).k_f, 0.0675);
        assert!((fit.width_nm - w).abs() < 1e-8 * w);
        assert!(fit.residual < 1e-20);
    }

    #[test]
    fn crossover_higher_plateau_gives_same_width() {
        // plateau N sits at N^2 times the gate offset of plateau 1; B* scales with N
        let alpha = 8e-6;
        let w0 = 250e-9;
        let mut widths = Vec::new();
        for n in [1.0f64, 3.0] {
            let dv = 0.3 * n * n;
            let k_f = gate_to_kf(dv, alpha, 0.0).k_f;
            let b_star = 2.0 * HBAR * k_f / (E_CHARGE * w0);
            let pts: Vec<(f64, f64)> = (1..=24)
                .map(|i| {
                    let b = b_star * 0.1 * i as f64;
                    (b, if b < b_star { dv } else { dv * b / b_star })
                })
                .collect();
            widths.push(crossover_width(&pts, alpha, n as usize).unwrap().width_nm);
        }
        assert!((widths[0] - widths[1]).abs() / widths[0] < 0.1);
        assert!((widths[0] - 250.0).abs() < 1e-6);
    }

    #[test]
    fn flat_data_is_ambiguous() {
        let pts: Vec<(f64, f64)> = (1..=12).map(|i| (0.01 * i as f64, 0.5)).collect();
        assert!(crossover_width(&pts, 8e-6, 1).unwrap().is_ambiguous());
        let line: Vec<(f64, f64)> = (1..=12).map(|i| (0.01 * i as f64, 3.0 * 0.01 * i as f64)).collect();
        assert!(crossover_width(&line, 8e-6, 1).unwrap().is_ambiguous());
        assert!(crossover_width(&pts[..6], 8e-6, 1).is_err());
    }

    #[test]
    fn capacitance_examples() {
        // nu = 2 at 0.5 T sits 4.8 V from the Dirac point
        let n2 = 2.0 * E_CHARGE * 0.5 / PLANCK;
        assert!((n2 * 1e-4 - 2.42e10).abs() < 0.01e10);
        let alpha = 8e-6;
        let v2 = n2 * E_CHARGE / alpha;
        assert!((v2 - 4.8).abs() < 0.05);
        let v6 = 3.0 * v2;
        let fit = extract_capacitance(&[(2.0, 0.3 + v2), (6.0, 0.3 + v6)], 0.5, 0.3).unwrap();
        assert!((fit.alpha - alpha).abs() < 1e-12 * alpha);
        assert!(fit.offset_v.abs() < 1e-9);
        let holes = extract_capacitance(&[(-2.0, 0.3 - v2), (2.0, 0.3 + v2), (6.0, 0.3 + v6)], 0.5, 0.3).unwrap();
        assert!((holes.alpha - alpha).abs() < 1e-12 * alpha);
    }

    #[test]
    fn capacitance_errors() {
        assert!(extract_capacitance(&[(2.0, 4.0)], 0.5, 0.0).is_err());
        assert!(matches!(extract_capacitance(&[(2.0, 4.0), (6.0, 4.0)], 0.5, 0.0), Err(Error::DegenerateFit(_))));
        assert!(extract_capacitance(&[(2.0, 4.0), (6.0, 12.0)], 0.0, 0.0).is_err());
    }

    #[test]
    fn kf_round_trip_through_gate() {
        let v = kf_to_gate(5e7, Carrier::Hole, 8e-6, 2.0);
        let d = gate_to_kf(v, 8e-6, 2.0);
        assert!((d.k_f - 5e7).abs() < 1e-12 * 5e7 && d.carrier == Carrier::Hole);
    }
}
