use super::bias::subband_spacing_from_bias;
use super::fit::{crossover_width, extract_capacitance, fit_width_semiclassical, WidthFit};
use super::formulas::{energy_scales, mean_free_path, EnergyScales};
use super::plateau::{detect_plateaus, PlateauSet, DEFAULT_MIN_EXTENT_FRACTION, DEFAULT_VALUE_TOLERANCE};
use crate::constants::PhysicalConstants;
use crate::error::{Error, Result};
use crate::transport::{BiasMap, ConductanceTrace};
use serde::{Deserialize, Serialize};

/// A reported number with its method and fit residual.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Quantity<T> {
    pub value: T,
    pub unit: String,
    pub method: String,
    pub residual: f64,
}

/// Either a result or the reason there is none.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "status", rename_all = "lowercase")]
pub enum Reported<T> {
    Present(Quantity<T>),
    Absent { reason: String },
}

impl<T> Reported<T> {
    pub fn absent(reason: impl Into<String>) -> Self {
        Reported::Absent { reason: reason.into() }
    }

    pub fn present(value: T, unit: &str, method: &str, residual: f64) -> Self {
        Reported::Present(Quantity { value, unit: unit.into(), method: method.into(), residual })
    }

    pub fn value(&self) -> Option<&T> {
        match self {
            Reported::Present(q) => Some(&q.value),
            Reported::Absent { .. } => None,
        }
    }

    fn from_result(r: Result<Quantity<T>>) -> Self {
        match r {
            Ok(q) => Reported::Present(q),
            Err(e) => Reported::absent(e.to_string()),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExtractionReport {
    pub width_semiclassical_electron_nm: Reported<f64>,
    pub width_semiclassical_hole_nm: Reported<f64>,
    pub width_crossover_nm: Reported<f64>,
    pub crossover_b_t: Reported<f64>,
    pub width_spacing_nm: Reported<f64>,
    pub delta_e_mev: Reported<f64>,
    #[serde(rename = "alpha_F_per_m2")]
    pub alpha_f_per_m2: Reported<f64>,
    /// `(k_F [1/m], lambda [nm])` pairs.
    pub mfp_nm_vs_kf: Reported<Vec<(f64, f64)>>,
    pub energy_scales: Reported<EnergyScales>,
    pub plateaus: Option<PlateauSet>,
}

/// Whatever data is available for one device. Each extraction runs on the
/// inputs it needs and is reported absent otherwise.
#[derive(Debug, Clone, Default)]
pub struct ExtractionInputs {
    /// Zero-field (or lowest-field) gate trace.
    pub trace: Option<ConductanceTrace>,
    /// Gate traces at several fields for the crossover fit.
    pub fan: Vec<ConductanceTrace>,
    /// Quantum Hall trace for the capacitance fit.
    pub quantum_hall: Option<ConductanceTrace>,
    pub bias_map: Option<BiasMap>,
    pub length_nm: Option<f64>,
    pub width_nm: Option<f64>,
    /// Plateau tracked through the fan, counted from the Dirac point (1 = first).
    pub crossover_plateau: usize,
    pub value_tolerance: f64,
    pub min_extent_fraction: f64,
}

impl ExtractionInputs {
    pub fn new() -> Self {
        Self {
            crossover_plateau: 1,
            value_tolerance: DEFAULT_VALUE_TOLERANCE,
            min_extent_fraction: DEFAULT_MIN_EXTENT_FRACTION,
            ..Self::default()
        }
    }
}

fn plateaus_of(trace: &ConductanceTrace, inputs: &ExtractionInputs) -> Result<PlateauSet> {
    let v = &trace.gate_voltages;
    let span = v.iter().fold(f64::NEG_INFINITY, |m, x| m.max(*x)) - v.iter().fold(f64::INFINITY, |m, x| m.min(*x));
    detect_plateaus(v, &trace.conductance, inputs.value_tolerance, inputs.min_extent_fraction * span.max(0.0))
}

/// Gate offset from the Dirac point of the `n`-th distinct plateau on the
/// electron side (`n >= 1`).
pub fn plateau_offset(set: &PlateauSet, dirac_point: f64, n: usize) -> Option<f64> {
    let electron: Vec<_> =
        set.distinct_levels().into_iter().filter(|p| p.center_gate_v > dirac_point && p.mean.round() >= 1.0).collect();
    electron.get(n.checked_sub(1)?).map(|p| p.center_gate_v - dirac_point)
}

pub fn extract(inputs: &ExtractionInputs, constants: &PhysicalConstants) -> ExtractionReport {
    let missing = |what: &str| format!("no {what} supplied");
    let (mut we, mut wh) = (Reported::absent(missing("gate trace")), Reported::absent(missing("gate trace")));
    let mut mfp = Reported::absent(missing("gate trace"));
    let mut scales = Reported::absent(missing("gate trace"));
    let mut plateaus = None;
    if let Some(t) = &inputs.trace {
        let side = |w: Option<WidthFit>, name: &str| match w {
            Some(w) => Reported::present(w.width_nm, "nm", "semiclassical G = (2/pi) k_F W", w.residual),
            None => Reported::absent(format!("fewer than 8 {name} points")),
        };
        match fit_width_semiclassical(t) {
            Ok(fit) => {
                we = side(fit.electron, "electron");
                wh = side(fit.hole, "hole");
            }
            Err(e) => {
                we = Reported::absent(e.to_string());
                wh = Reported::absent(e.to_string());
            }
        }
        mfp = match (inputs.length_nm, inputs.width_nm) {
            (Some(l), Some(w)) => Reported::from_result(mean_free_path(t, l * 1e-9, w * 1e-9).map(|v| Quantity {
                value: v,
                unit: "nm".into(),
                method: "einstein relation".into(),
                residual: 0.0,
            })),
            _ => Reported::absent("sample length and width not given"),
        };
        scales = Reported::present(energy_scales(constants, t.b_tesla, t.temperature), "eV", "g mu_B B, k_B T", 0.0);
        plateaus = plateaus_of(t, inputs).ok();
    }

    let crossover = if inputs.fan.is_empty() {
        Err(Error::InsufficientData(missing("field fan")))
    } else {
        let pts: Vec<(f64, f64)> = inputs
            .fan
            .iter()
            .filter_map(|t| {
                let set = plateaus_of(t, inputs).ok()?;
                plateau_offset(&set, t.dirac_point, inputs.crossover_plateau).map(|dv| (t.b_tesla, dv))
            })
            .collect();
        crossover_width(&pts, inputs.fan[0].alpha, inputs.crossover_plateau)
    };
    let (width_crossover, crossover_b) = match crossover {
        Ok(c) => (
            Reported::present(c.width_nm, "nm", "crossover 2 l_c = W", c.residual),
            Reported::present(c.b_star_t, "T", "piecewise saturated/linear fit", c.residual),
        ),
        Err(e) => (Reported::absent(e.to_string()), Reported::absent(e.to_string())),
    };

    let alpha = match &inputs.quantum_hall {
        None => Reported::absent(missing("quantum Hall trace")),
        Some(t) => Reported::from_result(plateaus_of(t, inputs).and_then(|set| {
            // plateau G = m (2e^2/h) is filling nu = 2m, signed by carrier
            let pts: Vec<(f64, f64)> = set
                .distinct_levels()
                .iter()
                .filter(|p| p.mean.round() >= 1.0)
                .map(|p| (2.0 * p.mean.round() * (p.center_gate_v - t.dirac_point).signum(), p.center_gate_v))
                .collect();
            let fit = extract_capacitance(&pts, t.b_tesla, t.dirac_point)?;
            Ok(Quantity {
                value: fit.alpha,
                unit: "F/m^2".into(),
                method: "quantum Hall plateau positions".into(),
                residual: fit.residual,
            })
        })),
    };

    let (spacing_w, delta_e) = match &inputs.bias_map {
        None => (Reported::absent(missing("bias map")), Reported::absent(missing("bias map"))),
        Some(m) => match subband_spacing_from_bias(m, constants) {
            Ok(s) => (
                Reported::present(s.width_inferred_nm, "nm", "hard-wall spacing hbar v_F pi / dE", 0.0),
                Reported::present(s.delta_e_mev, "meV", "widest half plateau", 0.0),
            ),
            Err(e) => (Reported::absent(e.to_string()), Reported::absent(e.to_string())),
        },
    };

    ExtractionReport {
        width_semiclassical_electron_nm: we,
        width_semiclassical_hole_nm: wh,
        width_crossover_nm: width_crossover,
        crossover_b_t: crossover_b,
        width_spacing_nm: spacing_w,
        delta_e_mev: delta_e,
        alpha_f_per_m2: alpha,
        mfp_nm_vs_kf: mfp,
        energy_scales: scales,
        plateaus,
    }
}
