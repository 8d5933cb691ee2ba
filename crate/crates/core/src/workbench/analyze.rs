use super::config::{AnalysisConfig, Extraction, RunConfig, SweepKind};
use super::run::SweepData;
use crate::analysis::{
    extract, read_bias_map_csv, read_trace_csv, ExtractionInputs, ExtractionReport, IngestedTrace, Reported,
};
use crate::constants::PhysicalConstants;
use crate::error::{Error, Result};
use crate::transport::BiasMap;
use std::fs;
use std::io::BufReader;
use std::path::{Path, PathBuf};

/// Sorts traces into the roles the extractions need. The lowest-field trace
/// below `quantum_hall_min_field` is the zero-field trace; all such traces
/// form the fan; the highest-field trace at or above it is the quantum Hall
/// trace.
pub fn inputs_from(traces: Vec<IngestedTrace>, bias_map: Option<BiasMap>, cfg: &AnalysisConfig) -> ExtractionInputs {
    let mut traces = traces;
    traces.sort_by(|a, b| a.trace.b_tesla.total_cmp(&b.trace.b_tesla));
    let length_nm = traces.iter().find_map(|t| t.length_nm);
    let width_nm = traces.iter().find_map(|t| t.width_nm);
    let (low, high): (Vec<_>, Vec<_>) = traces.into_iter().partition(|t| t.trace.b_tesla < cfg.quantum_hall_min_field);
    let mut inputs = ExtractionInputs::new();
    inputs.trace = low.first().map(|t| t.trace.clone());
    inputs.fan = if low.len() > 1 { low.iter().map(|t| t.trace.clone()).collect() } else { Vec::new() };
    inputs.quantum_hall = high.last().map(|t| t.trace.clone());
    inputs.bias_map = bias_map;
    inputs.length_nm = length_nm;
    inputs.width_nm = width_nm;
    inputs.crossover_plateau = cfg.crossover_plateau;
    inputs.value_tolerance = cfg.value_tolerance;
    inputs.min_extent_fraction = cfg.min_extent_fraction;
    inputs
}

/// Runs [`extract`] and blanks the quantities that were not asked for.
pub fn analyze_inputs(
    inputs: &ExtractionInputs,
    cfg: &AnalysisConfig,
    constants: &PhysicalConstants,
) -> ExtractionReport {
    let mut r = extract(inputs, constants);
    let wanted = |e: Extraction| cfg.extractions.contains(&e);
    fn skip<T>(slot: &mut Reported<T>) {
        *slot = Reported::absent("not requested");
    }
    if !wanted(Extraction::SemiclassicalWidth) {
        skip(&mut r.width_semiclassical_electron_nm);
        skip(&mut r.width_semiclassical_hole_nm);
    }
    if !wanted(Extraction::CrossoverWidth) {
        skip(&mut r.width_crossover_nm);
        skip(&mut r.crossover_b_t);
    }
    if !wanted(Extraction::Capacitance) {
        skip(&mut r.alpha_f_per_m2);
    }
    if !wanted(Extraction::SubbandSpacing) {
        skip(&mut r.width_spacing_nm);
        skip(&mut r.delta_e_mev);
    }
    if !wanted(Extraction::MeanFreePath) {
        skip(&mut r.mfp_nm_vs_kf);
    }
    if !wanted(Extraction::EnergyScales) {
        skip(&mut r.energy_scales);
    }
    r
}

fn open(path: &Path) -> Result<BufReader<fs::File>> {
    Ok(BufReader::new(fs::File::open(path)?))
}

fn is_bias_map(path: &Path) -> Result<bool> {
    let text = fs::read_to_string(path)?;
    Ok(text.lines().map(str::trim).find(|l| !l.is_empty() && !l.starts_with('#')).is_some_and(|h| h.contains("Vsd_V")))
}

fn with_path<T>(path: &Path, r: Result<T>) -> Result<T> {
    r.map_err(|e| match e {
        Error::Schema { line, message } => Error::Schema { line, message: format!("{}: {message}", path.display()) },
        other => other,
    })
}

/// Analyzes ingested CSV files: traces and at most one bias map, told apart
/// by their column header.
pub fn analyze_files(
    paths: &[PathBuf],
    cfg: &AnalysisConfig,
    constants: &PhysicalConstants,
) -> Result<ExtractionReport> {
    let mut traces = Vec::new();
    let mut map = None;
    for p in paths {
        if is_bias_map(p)? {
            if map.is_some() {
                return Err(Error::InvalidParameter("more than one bias map given".into()));
            }
            map = Some(with_path(p, read_bias_map_csv(open(p)?))?);
        } else {
            traces.push(with_path(p, read_trace_csv(open(p)?))?);
        }
    }
    Ok(analyze_inputs(&inputs_from(traces, map, cfg), cfg, constants))
}

/// Inputs taken straight from simulated data, without a CSV round trip.
pub fn inputs_from_data(data: &SweepData, cfg: &AnalysisConfig) -> ExtractionInputs {
    let geom = |trace| IngestedTrace { trace, length_nm: Some(data.length_nm), width_nm: Some(data.width_nm) };
    let traces: Vec<IngestedTrace> = match data.kind {
        SweepKind::DisorderEnsemble => data.ensemble_mean_trace().into_iter().map(geom).collect(),
        _ => data.traces.iter().map(|t| geom(t.trace.clone())).collect(),
    };
    inputs_from(traces, data.bias_map.clone(), cfg)
}

/// Analyzes the output directory of a run. CSV files are preferred; a run
/// written as JSON only is read from `sweep.json`. `cfg` overrides the
/// analysis section stored with the run.
pub fn analyze_run_dir(
    dir: &Path,
    cfg: Option<&AnalysisConfig>,
    constants: &PhysicalConstants,
) -> Result<ExtractionReport> {
    let config: RunConfig = serde_json::from_slice(&fs::read(dir.join("config.json"))?)?;
    let cfg = cfg.unwrap_or(&config.analysis);
    let manifest = super::run::read_manifest(dir)?;
    let listed = |name: &str| manifest.outputs.iter().any(|o| o.file == name);
    let csvs: Vec<PathBuf> = match config.sweep.kind {
        SweepKind::DisorderEnsemble => vec!["ensemble_mean.csv".into()],
        SweepKind::BiasMap => vec!["trace.csv".into(), "bias_map.csv".into()],
        _ => manifest.outputs.iter().filter(|o| o.file.starts_with("trace")).map(|o| o.file.clone().into()).collect(),
    };
    if !csvs.is_empty() && csvs.iter().all(|f| listed(&f.to_string_lossy())) {
        let paths: Vec<PathBuf> = csvs.iter().map(|f| dir.join(f)).collect();
        return analyze_files(&paths, cfg, constants);
    }
    if listed("sweep.json") {
        let data: SweepData = serde_json::from_slice(&fs::read(dir.join("sweep.json"))?)?;
        return Ok(analyze_inputs(&inputs_from_data(&data, cfg), cfg, constants));
    }
    Err(Error::InvalidParameter(format!("{} holds no analyzable outputs", dir.display())))
}
