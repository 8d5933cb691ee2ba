//! Config-driven runs: build a device, sweep it, write CSV/JSON outputs with a
//! checksummed manifest, and run the extraction pipeline on the result.

mod analyze;
mod config;
mod repro;
mod run;

pub use analyze::{analyze_files, analyze_inputs, analyze_run_dir, inputs_from, inputs_from_data};
pub use config::{
    parse_analysis_config, parse_config, AnalysisConfig, DeviceConfig, Extraction, Format, Grid, OutputConfig,
    RunConfig, SweepConfig, SweepKind, DEFAULT_ALPHA,
};
pub use repro::{append_outputs, repro, Figure};
pub use run::{
    build_device, read_manifest, render_outputs, run, seeds_of, sha256_hex, simulate, trace_csv, verify_manifest,
    Ensemble, LabeledTrace, OutputRecord, RunManifest, SweepData, ARTIFACT_VERSION,
};
