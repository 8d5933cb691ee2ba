use anyhow::Context;
use clap::{Args, Parser, Subcommand};
use gnc_core::bands::ribbon_bands;
use gnc_core::workbench::{
    analyze_files, analyze_run_dir, build_device, parse_analysis_config, parse_config, repro, run, AnalysisConfig,
    Figure, RunConfig, RunManifest, SweepKind,
};
use gnc_core::{Error, PhysicalConstants};
use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

/// Graphene nanoconstriction transport workbench.
#[derive(Parser)]
#[command(name = "gnc", version, about)]
struct Cli {
    #[command(flatten)]
    global: Global,
    #[command(subcommand)]
    command: Command,
}

#[derive(Args)]
struct Global {
    /// JSON config file.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Output directory; overrides the config.
    #[arg(long, global = true)]
    out: Option<PathBuf>,
    /// Disorder seed; overrides the config.
    #[arg(long, global = true)]
    seed: Option<u64>,
    /// Worker threads (default: all cores).
    #[arg(long, global = true)]
    threads: Option<usize>,
    /// Treat flagged validity warnings as errors (exit code 3).
    #[arg(long, global = true)]
    strict: bool,
}

#[derive(Subcommand)]
enum Command {
    /// Build the device and export the lattice as JSON.
    Build,
    /// Lead band structure as CSV.
    Bands {
        #[arg(long, default_value_t = 401)]
        k_points: usize,
    },
    /// Run the sweep described by the config.
    Sweep,
    /// Run the config as a bias-map sweep.
    BiasMap,
    /// Run the extraction pipeline on a run directory or on CSV files.
    Analyze {
        #[arg(required = true)]
        inputs: Vec<PathBuf>,
    },
    /// Reproduce the structure of a figure with a canned desk-scale run.
    Repro { figure: String },
}

enum Failure {
    Validation(anyhow::Error),
    Runtime(anyhow::Error),
    Flagged(usize),
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        match e {
            Error::Validation(_) | Error::Config(_) | Error::Schema { .. } => Failure::Validation(e.into()),
            other => Failure::Runtime(other.into()),
        }
    }
}

impl From<anyhow::Error> for Failure {
    fn from(e: anyhow::Error) -> Self {
        match e.downcast::<Error>() {
            Ok(inner) => inner.into(),
            Err(e) => Failure::Runtime(e),
        }
    }
}

fn read_config(global: &Global) -> Result<RunConfig, Failure> {
    let path = global.config.as_ref().ok_or_else(|| Failure::Validation(anyhow::anyhow!("--config is required")))?;
    let text = fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
    let mut config = parse_config(&text)?;
    if let Some(out) = &global.out {
        config.output.directory = out.clone();
    }
    if let Some(seed) = global.seed {
        match config.device.disorder.as_mut() {
            Some(d) => d.rng_seed = seed,
            None => log::warn!("--seed given but the device has no disorder section"),
        }
    }
    Ok(config)
}

fn out_dir(global: &Global, config: Option<&RunConfig>) -> PathBuf {
    global
        .out
        .clone()
        .or_else(|| config.map(|c| c.output.directory.clone()))
        .unwrap_or_else(|| PathBuf::from("gnc-out"))
}

fn finish(manifest: &RunManifest, dir: &Path, strict: bool) -> Result<(), Failure> {
    for w in &manifest.warnings {
        log::warn!("{w}");
    }
    println!("wrote {} files to {} in {:.1} s", manifest.outputs.len(), dir.display(), manifest.wall_clock_s);
    if strict && manifest.is_flagged() {
        return Err(Failure::Flagged(manifest.flagged_points));
    }
    Ok(())
}

fn execute(cli: Cli) -> Result<(), Failure> {
    let g = &cli.global;
    if let Some(n) = g.threads {
        rayon::ThreadPoolBuilder::new()
            .num_threads(n)
            .build_global()
            .map_err(|e| Failure::Validation(anyhow::anyhow!("--threads: {e}")))?;
    }
    match cli.command {
        Command::Build => {
            let config = read_config(g)?;
            let dev = build_device(&config)?;
            let dir = out_dir(g, Some(&config));
            fs::create_dir_all(&dir).context("creating output directory")?;
            fs::write(dir.join("device.json"), dev.to_json().map_err(Error::from)?).context("writing device.json")?;
            for w in &dev.warnings {
                log::warn!("{w}");
            }
            println!(
                "{} sites, constriction {:.2} nm wide, lead {:.2} nm wide; wrote {}",
                dev.num_sites(),
                dev.realized.constriction_width_nm,
                dev.realized.lead_width_nm,
                dir.join("device.json").display()
            );
        }
        Command::Bands { k_points } => {
            let config = read_config(g)?;
            let dev = build_device(&config)?;
            let bands = ribbon_bands(&dev, k_points)?;
            let dir = out_dir(g, Some(&config));
            fs::create_dir_all(&dir).context("creating output directory")?;
            let mut buf = Vec::new();
            bands.write_csv(&mut buf).context("formatting bands")?;
            fs::write(dir.join("bands.csv"), buf).context("writing bands.csv")?;
            let th: Vec<String> =
                bands.thresholds_above(0.0).iter().take(6).map(|e| format!("{:.2}", e * 1e3)).collect();
            println!("{} bands; first thresholds (meV): {}", bands.num_bands(), th.join(", "));
        }
        Command::Sweep | Command::BiasMap => {
            let mut config = read_config(g)?;
            if matches!(cli.command, Command::BiasMap) {
                config.sweep.kind = SweepKind::BiasMap;
                config.validate()?;
            }
            let manifest = run(&config)?;
            finish(&manifest, &config.output.directory, g.strict)?;
        }
        Command::Analyze { inputs } => {
            let constants = PhysicalConstants::default();
            let cfg: Option<AnalysisConfig> = match &g.config {
                Some(p) => Some(parse_analysis_config(
                    &fs::read_to_string(p).with_context(|| format!("reading {}", p.display()))?,
                )?),
                None => None,
            };
            let report = if inputs.len() == 1 && inputs[0].is_dir() {
                analyze_run_dir(&inputs[0], cfg.as_ref(), &constants)?
            } else {
                analyze_files(&inputs, &cfg.unwrap_or_default(), &constants)?
            };
            let json = serde_json::to_string_pretty(&report).context("serializing report")?;
            match &g.out {
                Some(dir) => {
                    fs::create_dir_all(dir).context("creating output directory")?;
                    fs::write(dir.join("report.json"), json).context("writing report.json")?;
                    println!("wrote {}", dir.join("report.json").display());
                }
                None => println!("{json}"),
            }
        }
        Command::Repro { figure } => {
            let figure: Figure = figure.parse().map_err(|e: Error| Failure::Validation(e.into()))?;
            let dir = g.out.clone().unwrap_or_else(|| PathBuf::from(figure.name()));
            let (manifest, _) = repro(figure, &dir)?;
            finish(&manifest, &dir, g.strict)?;
            println!("plot with: gnuplot {}", dir.join(format!("{}.gp", figure.name())).display());
        }
    }
    Ok(())
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    match execute(Cli::parse()) {
        Ok(()) => ExitCode::SUCCESS,
        Err(Failure::Validation(e)) => {
            eprintln!("error: {e:#}");
            ExitCode::from(1)
        }
        Err(Failure::Runtime(e)) => {
            eprintln!("error: {e:#}");
            ExitCode::from(2)
        }
        Err(Failure::Flagged(n)) => {
            eprintln!("error: {n} points outside the lattice validity window (--strict)");
            ExitCode::from(3)
        }
    }
}
