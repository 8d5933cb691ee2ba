//! Extraction pipeline shared by simulated and measured data: gate
//! conversions, ballistic estimates, widths, plateaus, capacitance, mean free
//! path, bias spectroscopy and energy scales.

pub mod bias;
pub mod fit;
pub mod formulas;
pub mod gate;
pub mod ingest;
pub mod plateau;
pub mod report;

pub use bias::{subband_spacing_from_bias, width_from_spacing, SubbandSpacing};
pub use fit::{
    crossover_width, crossover_width_from_kf, extract_capacitance, fit_width_semiclassical, CapacitanceFit,
    CrossoverFit, SemiclassicalWidth, WidthFit,
};
pub use formulas::{
    ballistic_conductance, energy_scales, mean_free_path, mean_free_path_at, subtract_series_resistance,
    transmission_fraction, Ballistic, EnergyScales, TransmissionFraction,
};
pub use gate::{gate_to_kf, kf_to_gate, Carrier, GateDensity};
pub use ingest::{read_bias_map_csv, read_trace_csv, IngestedTrace};
pub use plateau::{
    detect_plateaus, detect_plateaus_default, Plateau, PlateauSet, DEFAULT_MIN_EXTENT_FRACTION, DEFAULT_VALUE_TOLERANCE,
};
pub use report::{extract, plateau_offset, ExtractionInputs, ExtractionReport, Quantity, Reported};
