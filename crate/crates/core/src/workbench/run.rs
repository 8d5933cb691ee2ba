use super::config::{Format, RunConfig, SweepKind};
use crate::error::{Error, Result};
use crate::lattice::{apply_edge_disorder, build_constriction, DeviceLattice, DisorderSpec};
use crate::transport::{
    bias_map_from_source, conductance_from_source, conductance_vs_gate, curve_for_bias, device_in_field, BiasMap,
    ConductanceTrace, GateModel, GateSweep, TransportSolver,
};
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};
use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};
use std::time::Instant;

pub const ARTIFACT_VERSION: &str = env!("CARGO_PKG_VERSION");
const STAGING: &str = ".gnc-staging";

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OutputRecord {
    pub file: String,
    pub sha256: String,
    pub bytes: u64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunManifest {
    pub artifact_version: String,
    pub config_sha256: String,
    pub sweep_kind: SweepKind,
    pub rng_seeds: Vec<u64>,
    pub wall_clock_s: f64,
    /// Every file the run wrote except the manifest itself.
    pub outputs: Vec<OutputRecord>,
    pub warnings: Vec<String>,
    /// Grid points whose energy left the lattice validity window.
    pub flagged_points: usize,
}

impl RunManifest {
    pub fn is_flagged(&self) -> bool {
        self.flagged_points > 0
    }

    /// `(file, sha256)` pairs; equal across runs of one config.
    pub fn checksums(&self) -> Vec<(String, String)> {
        self.outputs.iter().map(|o| (o.file.clone(), o.sha256.clone())).collect()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LabeledTrace {
    pub label: String,
    pub seed: Option<u64>,
    pub trace: ConductanceTrace,
}

/// Per-gate mean and sample standard deviation over disorder seeds.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Ensemble {
    pub gate_voltages: Vec<f64>,
    pub seeds: Vec<u64>,
    pub mean: Vec<f64>,
    pub std: Vec<f64>,
}

impl Ensemble {
    pub fn from_traces(traces: &[LabeledTrace]) -> Result<Self> {
        let first = traces.first().ok_or_else(|| Error::InsufficientData("empty ensemble".into()))?;
        let n = traces.len() as f64;
        let gates = first.trace.gate_voltages.clone();
        let (mut mean, mut std) = (Vec::with_capacity(gates.len()), Vec::with_capacity(gates.len()));
        for i in 0..gates.len() {
            let m = traces.iter().map(|t| t.trace.conductance[i]).sum::<f64>() / n;
            let var = if traces.len() > 1 {
                traces.iter().map(|t| (t.trace.conductance[i] - m).powi(2)).sum::<f64>() / (n - 1.0)
            } else {
                0.0
            };
            mean.push(m);
            std.push(var.sqrt());
        }
        Ok(Self { gate_voltages: gates, seeds: traces.iter().filter_map(|t| t.seed).collect(), mean, std })
    }
}

/// Everything a run computed, before it is written out.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepData {
    pub kind: SweepKind,
    pub length_nm: f64,
    pub width_nm: f64,
    pub traces: Vec<LabeledTrace>,
    pub ensemble: Option<Ensemble>,
    pub bias_map: Option<BiasMap>,
    pub device_warnings: Vec<String>,
}

impl SweepData {
    /// The trace that stands for the whole run in a zero-field analysis.
    pub fn ensemble_mean_trace(&self) -> Option<ConductanceTrace> {
        let e = self.ensemble.as_ref()?;
        let base = &self.traces.first()?.trace;
        Some(ConductanceTrace {
            gate_voltages: e.gate_voltages.clone(),
            conductance: e.mean.clone(),
            fingerprint: None,
            flagged: self.traces.iter().fold(vec![false; e.gate_voltages.len()], |acc, t| {
                acc.iter().zip(&t.trace.flagged).map(|(a, b)| *a || *b).collect()
            }),
            ..base.clone()
        })
    }
}

pub fn build_device(config: &RunConfig) -> Result<DeviceLattice> {
    let dev = build_constriction(config.device.lattice, config.device.geometry.clone())?;
    match &config.device.disorder {
        Some(d) if config.sweep.kind != SweepKind::DisorderEnsemble => apply_edge_disorder(&dev, d),
        _ => Ok(dev),
    }
}

/// Seeds the run draws disorder from.
pub fn seeds_of(config: &RunConfig) -> Vec<u64> {
    match (&config.device.disorder, config.sweep.kind) {
        (Some(d), SweepKind::DisorderEnsemble) => {
            (0..config.sweep.seeds.unwrap_or(1)).map(|i| d.rng_seed.wrapping_add(i)).collect()
        }
        (Some(d), _) => vec![d.rng_seed],
        (None, _) => Vec::new(),
    }
}

/// Runs the configured sweep. Grid points are evaluated in parallel and
/// assembled in index order, so results do not depend on the thread count.
pub fn simulate(config: &RunConfig) -> Result<SweepData> {
    config.validate()?;
    let s = &config.sweep;
    let opts = config.device.green;
    let dev = build_device(config)?;
    let gates = s.gate.values();
    let gate_sweep = |b: f64| GateSweep {
        gate_voltages: gates.clone(),
        alpha: s.alpha,
        dirac_point: s.dirac_point,
        b_tesla: b,
        temperature: s.temperature,
    };
    let labeled = |label: String, seed, trace| LabeledTrace { label, seed, trace };
    let mut traces = Vec::new();
    let mut ensemble = None;
    let mut map = None;
    match s.kind {
        SweepKind::Gate => {
            traces.push(labeled("trace".into(), None, conductance_vs_gate(&dev, &gate_sweep(s.b_tesla), &opts)?))
        }
        SweepKind::FieldFan => {
            for (i, b) in s.fields.as_ref().map(|g| g.values()).unwrap_or_default().into_iter().enumerate() {
                traces.push(labeled(
                    format!("trace_B_{i:03}"),
                    None,
                    conductance_vs_gate(&dev, &gate_sweep(b), &opts)?,
                ));
            }
        }
        SweepKind::BiasMap => {
            let biases = s.bias.as_ref().map(|g| g.values()).unwrap_or_default();
            let d = device_in_field(&dev, s.b_tesla);
            let solver = TransportSolver::new(&d, opts)?;
            let model = GateModel::for_device(&d, s.alpha, s.dirac_point);
            // map and linear trace share one source, so they agree at zero bias
            let (m, trace) = match s.energy_step {
                None => (
                    bias_map_from_source(&solver, &model, &gates, &biases)?,
                    conductance_from_source(&solver, &model, &gates, 0.0)?,
                ),
                Some(step) => {
                    let curve = curve_for_bias(&solver, &model, &gates, &biases, step)?;
                    (
                        bias_map_from_source(&curve, &model, &gates, &biases)?,
                        conductance_from_source(&curve, &model, &gates, 0.0)?,
                    )
                }
            };
            traces.push(labeled("trace".into(), None, trace));
            map = Some(m);
        }
        SweepKind::DisorderEnsemble => {
            let base = config.device.disorder.expect("validated");
            for seed in seeds_of(config) {
                let d = apply_edge_disorder(&dev, &DisorderSpec { rng_seed: seed, ..base })?;
                traces.push(labeled(
                    format!("trace_seed_{seed}"),
                    Some(seed),
                    conductance_vs_gate(&d, &gate_sweep(s.b_tesla), &opts)?,
                ));
            }
            ensemble = Some(Ensemble::from_traces(&traces)?);
        }
    }
    Ok(SweepData {
        kind: s.kind,
        length_nm: dev.realized.narrow_length_nm(),
        width_nm: dev.realized.constriction_width_nm,
        traces,
        ensemble,
        bias_map: map,
        device_warnings: dev.warnings.clone(),
    })
}

pub fn sha256_hex(bytes: &[u8]) -> String {
    Sha256::digest(bytes).iter().map(|b| format!("{b:02x}")).collect()
}

/// Trace CSV with the sample geometry in its metadata.
pub fn trace_csv(trace: &ConductanceTrace, length_nm: f64, width_nm: f64) -> Result<Vec<u8>> {
    let mut buf = Vec::new();
    writeln!(buf, "# L_nm: {length_nm}")?;
    writeln!(buf, "# W_nm: {width_nm}")?;
    trace.write_csv(&mut buf)?;
    Ok(buf)
}

fn fan_csv(traces: &[LabeledTrace]) -> Result<Vec<u8>> {
    let mut buf = Vec::new();
    writeln!(buf, "B_T,Vg_V,G_2e2_over_h")?;
    for t in traces {
        for (v, g) in t.trace.gate_voltages.iter().zip(&t.trace.conductance) {
            writeln!(buf, "{},{v},{g}", t.trace.b_tesla)?;
        }
    }
    Ok(buf)
}

fn ensemble_csv(e: &Ensemble, traces: &[LabeledTrace]) -> Result<Vec<u8>> {
    let mut buf = Vec::new();
    let cols: Vec<String> = e.seeds.iter().map(|s| format!("G_seed_{s}")).collect();
    writeln!(buf, "Vg_V,{},G_mean,G_std", cols.join(","))?;
    for (i, v) in e.gate_voltages.iter().enumerate() {
        let row: Vec<String> = traces.iter().map(|t| t.trace.conductance[i].to_string()).collect();
        writeln!(buf, "{v},{},{},{}", row.join(","), e.mean[i], e.std[i])?;
    }
    Ok(buf)
}

/// The config as stored with its outputs. The output directory is recorded
/// as `.` so a run does not depend on where it was written.
fn relocatable(config: &RunConfig) -> RunConfig {
    let mut c = config.clone();
    c.output.directory = PathBuf::from(".");
    c
}

/// File contents for a run, in a fixed order.
pub fn render_outputs(config: &RunConfig, data: &SweepData) -> Result<Vec<(String, Vec<u8>)>> {
    let mut files = vec![("config.json".to_string(), serde_json::to_vec_pretty(&relocatable(config))?)];
    let (l, w) = (data.length_nm, data.width_nm);
    if config.output.formats.contains(&Format::Csv) {
        for t in &data.traces {
            files.push((format!("{}.csv", t.label), trace_csv(&t.trace, l, w)?));
        }
        if data.kind == SweepKind::FieldFan {
            files.push(("fan.csv".into(), fan_csv(&data.traces)?));
        }
        if let Some(m) = &data.bias_map {
            let mut buf = Vec::new();
            m.write_csv(&mut buf)?;
            files.push(("bias_map.csv".into(), buf));
        }
        if let Some(e) = &data.ensemble {
            files.push(("ensemble.csv".into(), ensemble_csv(e, &data.traces)?));
            let mean = data.ensemble_mean_trace().expect("ensemble present");
            files.push(("ensemble_mean.csv".into(), trace_csv(&mean, l, w)?));
        }
    }
    if config.output.formats.contains(&Format::Json) {
        files.push(("sweep.json".into(), serde_json::to_vec_pretty(data)?));
    }
    Ok(files)
}

fn warnings_of(data: &SweepData) -> Vec<String> {
    let mut out = data.device_warnings.clone();
    for t in &data.traces {
        let n = t.trace.flagged_count();
        if n > 0 {
            out.push(format!("{}: {n} of {} points outside the lattice validity window", t.label, t.trace.len()));
        }
    }
    if let Some(m) = &data.bias_map {
        let n = m.flagged.iter().filter(|f| **f).count();
        if n > 0 {
            out.push(format!(
                "bias_map: {n} of {} gate rows reach outside the lattice validity window",
                m.flagged.len()
            ));
        }
    }
    out
}

/// Runs the sweep and writes its outputs plus `manifest.json` into
/// `config.output.directory`. Files are staged first; on failure nothing
/// from this run is left behind.
pub fn run(config: &RunConfig) -> Result<RunManifest> {
    let start = Instant::now();
    let data = simulate(config)?;
    let files = render_outputs(config, &data)?;
    let out = &config.output.directory;
    let staging = out.join(STAGING);
    let result = write_staged(out, &staging, &files);
    if result.is_err() {
        let _ = fs::remove_dir_all(&staging);
    }
    let outputs = result?;
    let manifest = RunManifest {
        artifact_version: ARTIFACT_VERSION.into(),
        config_sha256: sha256_hex(&serde_json::to_vec(&relocatable(config))?),
        sweep_kind: config.sweep.kind,
        rng_seeds: seeds_of(config),
        wall_clock_s: start.elapsed().as_secs_f64(),
        outputs,
        warnings: warnings_of(&data),
        flagged_points: data.traces.iter().map(|t| t.trace.flagged_count()).sum::<usize>()
            + data.bias_map.as_ref().map_or(0, |m| m.flagged.iter().filter(|f| **f).count()),
    };
    fs::write(out.join("manifest.json"), serde_json::to_vec_pretty(&manifest)?)?;
    Ok(manifest)
}

fn write_staged(out: &Path, staging: &Path, files: &[(String, Vec<u8>)]) -> Result<Vec<OutputRecord>> {
    fs::create_dir_all(staging)?;
    let mut records = Vec::with_capacity(files.len());
    for (name, bytes) in files {
        fs::write(staging.join(name), bytes)?;
        records.push(OutputRecord { file: name.clone(), sha256: sha256_hex(bytes), bytes: bytes.len() as u64 });
    }
    for (name, _) in files {
        fs::rename(staging.join(name), out.join(name))?;
    }
    fs::remove_dir(staging)?;
    Ok(records)
}

/// Reads `manifest.json` from a run directory.
pub fn read_manifest(dir: &Path) -> Result<RunManifest> {
    Ok(serde_json::from_slice(&fs::read(dir.join("manifest.json"))?)?)
}

/// Files listed in the manifest whose checksum no longer matches.
pub fn verify_manifest(dir: &Path, manifest: &RunManifest) -> Result<Vec<PathBuf>> {
    let mut bad = Vec::new();
    for o in &manifest.outputs {
        let p = dir.join(&o.file);
        if !p.exists() || sha256_hex(&fs::read(&p)?) != o.sha256 {
            bad.push(p);
        }
    }
    Ok(bad)
}
