use super::analyze::analyze_run_dir;
use super::config::{parse_config, RunConfig};
use super::run::{read_manifest, run, sha256_hex, OutputRecord, RunManifest};
use crate::analysis::ExtractionReport;
use crate::constants::PhysicalConstants;
use crate::error::{Error, Result};
use std::fs;
use std::path::Path;
use std::str::FromStr;

/// Canned desk-scale runs mirroring the structure of each figure.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Figure {
    /// Zero-field gate trace with the semiclassical width fit.
    Fig2,
    /// Field fan and the 2 l_c = W crossover.
    Fig3,
    /// Finite-bias map and the subband spacing.
    Fig4,
}

impl FromStr for Figure {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "fig2" => Ok(Figure::Fig2),
            "fig3" => Ok(Figure::Fig3),
            "fig4" => Ok(Figure::Fig4),
            other => Err(Error::InvalidParameter(format!("unknown figure {other}, expected fig2, fig3 or fig4"))),
        }
    }
}

impl Figure {
    pub fn name(self) -> &'static str {
        match self {
            Figure::Fig2 => "fig2",
            Figure::Fig3 => "fig3",
            Figure::Fig4 => "fig4",
        }
    }

    pub fn config_json(self) -> &'static str {
        match self {
            Figure::Fig2 => FIG2,
            Figure::Fig3 => FIG3,
            Figure::Fig4 => FIG4,
        }
    }

    pub fn config(self, out: &Path) -> Result<RunConfig> {
        let mut c = parse_config(self.config_json())?;
        c.output.directory = out.to_path_buf();
        Ok(c)
    }

    /// Gnuplot script for the run's outputs; `report` supplies fitted values.
    pub fn gnuplot(self, report: &ExtractionReport) -> String {
        let value = |r: &crate::analysis::Reported<f64>| r.value().copied().unwrap_or(f64::NAN);
        match self {
            Figure::Fig2 => format!(
                "set datafile commentschars '#'\nset datafile separator ','\n\
                 set xlabel 'V_g (V)'\nset ylabel 'G (2e^2/h)'\n\
                 alpha = {alpha}\nW = {w}e-9\n\
                 kf(v) = sqrt(pi * alpha * abs(v) / 1.602176634e-19)\n\
                 set key left top\n\
                 plot 'trace.csv' using 1:2 with lines title 'simulated', \\\n     \
                 (2 / pi) * kf(x) * W with lines dashtype 2 title sprintf('semiclassical, W = %.0f nm', W * 1e9)\n\
                 pause mouse close\n",
                alpha = crate::workbench::config::DEFAULT_ALPHA,
                w = value(&report.width_semiclassical_electron_nm),
            ),
            Figure::Fig3 => format!(
                "set datafile commentschars '#'\nset datafile separator ','\n\
                 set xlabel 'V_g (V)'\nset ylabel 'G (2e^2/h), offset by B'\n\
                 # crossover B* = {b} T, width {w} nm\n\
                 plot 'fan.csv' using 2:($3 + 4 * $1) with lines notitle\n\
                 pause mouse close\n",
                b = value(&report.crossover_b_t),
                w = value(&report.width_crossover_nm),
            ),
            Figure::Fig4 => format!(
                "set datafile commentschars '#'\nset datafile separator ','\n\
                 set xlabel 'V_g (V)'\nset ylabel 'V_sd (V)'\nset cblabel 'g (2e^2/h)'\n\
                 # subband spacing {d} meV\n\
                 set view map\nset pm3d map\n\
                 splot 'bias_map.csv' using 1:2:3 with pm3d notitle\n\
                 pause mouse close\n",
                d = value(&report.delta_e_mev),
            ),
        }
    }
}

/// Writes extra files into a finished run directory and records them in its
/// manifest.
pub fn append_outputs(dir: &Path, files: &[(String, Vec<u8>)]) -> Result<RunManifest> {
    let mut manifest = read_manifest(dir)?;
    for (name, bytes) in files {
        fs::write(dir.join(name), bytes)?;
        manifest.outputs.retain(|o| &o.file != name);
        manifest.outputs.push(OutputRecord {
            file: name.clone(),
            sha256: sha256_hex(bytes),
            bytes: bytes.len() as u64,
        });
    }
    fs::write(dir.join("manifest.json"), serde_json::to_vec_pretty(&manifest)?)?;
    Ok(manifest)
}

/// Runs a canned figure config into `out`, analyzes it and writes
/// `report.json` and `<fig>.gp` next to the data.
pub fn repro(figure: Figure, out: &Path) -> Result<(RunManifest, ExtractionReport)> {
    let config = figure.config(out)?;
    run(&config)?;
    let report = analyze_run_dir(out, None, &PhysicalConstants::default())?;
    let files = vec![
        ("report.json".to_string(), serde_json::to_vec_pretty(&report)?),
        (format!("{}.gp", figure.name()), figure.gnuplot(&report).into_bytes()),
    ];
    let manifest = append_outputs(out, &files)?;
    Ok((manifest, report))
}

const FIG2: &str = r#"{
  "device": {
    "geometry": {"edge_type": "zigzag", "lead_width": 250, "constriction_width": 100,
                 "constriction_length": 100, "profile": "smooth-cosine", "total_length": 700},
    "lattice": {"scaling_factor": 20}
  },
  "sweep": {"kind": "gate", "gate_V": {"start": -70, "stop": 70, "points": 141}},
  "analysis": {"extractions": ["semiclassical-width", "mean-free-path", "energy-scales"]}
}"#;

const FIG3: &str = r#"{
  "device": {
    "geometry": {"edge_type": "armchair", "lead_width": 100, "total_length": 100,
                 "profile": "abrupt", "metallic_snap": false},
    "lattice": {"scaling_factor": 20}
  },
  "sweep": {"kind": "field-fan", "gate_V": {"start": 0.25, "stop": 40, "points": 160},
            "fields_T": {"start": 0, "stop": 1, "points": 11}},
  "analysis": {"extractions": ["crossover-width", "semiclassical-width"]}
}"#;

const FIG4: &str = r#"{
  "device": {
    "geometry": {"edge_type": "armchair", "lead_width": 100, "total_length": 50,
                 "profile": "abrupt", "metallic_snap": false},
    "lattice": {"scaling_factor": 20}
  },
  "sweep": {"kind": "bias-map", "gate_V": {"start": 0.1, "stop": 30, "points": 300},
            "bias_V": {"start": 0, "stop": 0.02, "points": 41}, "energy_step_eV": 1e-4},
  "analysis": {"extractions": ["subband-spacing"]}
}"#;
