use crate::error::{ConfigIssue, Error, Result};
use crate::lattice::{DisorderSpec, EdgeType, GeometrySpec, LatticeParams, Profile};
use crate::transport::GreenOptions;
use serde::{Deserialize, Serialize};
use serde_json::{Map, Value};
use std::path::PathBuf;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum SweepKind {
    Gate,
    FieldFan,
    BiasMap,
    DisorderEnsemble,
}

/// Either `{start, stop, points}` or an explicit `{values}` list.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum Grid {
    Linear { start: f64, stop: f64, points: usize },
    Values { values: Vec<f64> },
}

impl Grid {
    pub fn values(&self) -> Vec<f64> {
        match self {
            Grid::Values { values } => values.clone(),
            Grid::Linear { points: 0, .. } => Vec::new(),
            Grid::Linear { start, points: 1, .. } => vec![*start],
            Grid::Linear { start, stop, points } => {
                let n = (*points - 1) as f64;
                (0..*points).map(|i| start + (stop - start) * i as f64 / n).collect()
            }
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Extraction {
    SemiclassicalWidth,
    CrossoverWidth,
    Capacitance,
    SubbandSpacing,
    MeanFreePath,
    EnergyScales,
}

impl Extraction {
    pub const ALL: [Extraction; 6] = [
        Extraction::SemiclassicalWidth,
        Extraction::CrossoverWidth,
        Extraction::Capacitance,
        Extraction::SubbandSpacing,
        Extraction::MeanFreePath,
        Extraction::EnergyScales,
    ];
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Format {
    Csv,
    Json,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DeviceConfig {
    pub geometry: GeometrySpec,
    pub lattice: LatticeParams,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub disorder: Option<DisorderSpec>,
    pub green: GreenOptions,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepConfig {
    pub kind: SweepKind,
    #[serde(rename = "gate_V")]
    pub gate: Grid,
    #[serde(rename = "alpha_F_per_m2")]
    pub alpha: f64,
    #[serde(rename = "dirac_point_V")]
    pub dirac_point: f64,
    #[serde(rename = "temperature_K")]
    pub temperature: f64,
    #[serde(rename = "B_T")]
    pub b_tesla: f64,
    #[serde(rename = "fields_T", skip_serializing_if = "Option::is_none")]
    pub fields: Option<Grid>,
    #[serde(rename = "bias_V", skip_serializing_if = "Option::is_none")]
    pub bias: Option<Grid>,
    #[serde(rename = "energy_step_eV", skip_serializing_if = "Option::is_none")]
    pub energy_step: Option<f64>,
    /// Ensemble size; seeds run from the disorder `rng_seed` upward.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub seeds: Option<u64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AnalysisConfig {
    pub extractions: Vec<Extraction>,
    pub value_tolerance: f64,
    pub min_extent_fraction: f64,
    pub crossover_plateau: usize,
    /// Traces at or above this field feed the capacitance fit.
    #[serde(rename = "quantum_hall_min_field_T")]
    pub quantum_hall_min_field: f64,
}

impl Default for AnalysisConfig {
    fn default() -> Self {
        Self {
            extractions: Extraction::ALL.to_vec(),
            value_tolerance: crate::analysis::DEFAULT_VALUE_TOLERANCE,
            min_extent_fraction: crate::analysis::DEFAULT_MIN_EXTENT_FRACTION,
            crossover_plateau: 1,
            quantum_hall_min_field: 1.5,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OutputConfig {
    pub directory: PathBuf,
    pub formats: Vec<Format>,
}

impl Default for OutputConfig {
    fn default() -> Self {
        Self { directory: PathBuf::from("gnc-out"), formats: vec![Format::Csv, Format::Json] }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunConfig {
    pub device: DeviceConfig,
    pub sweep: SweepConfig,
    pub analysis: AnalysisConfig,
    pub output: OutputConfig,
}

pub const DEFAULT_ALPHA: f64 = 8e-6;

/// Parses and validates a JSON run config. Every problem found is reported,
/// each with the JSON path it concerns; unknown keys are errors.
pub fn parse_config(document: &str) -> Result<RunConfig> {
    let value: Value = serde_json::from_str(document).map_err(|e| Error::Config(format!("malformed JSON: {e}")))?;
    let mut cx = Walker::default();
    let config = cx.run_config(&value);
    match config {
        Some(c) if cx.issues.is_empty() => Ok(c),
        _ => Err(Error::Validation(cx.issues)),
    }
}

/// Parses a standalone analysis section, as given to `analyze`. A full run
/// config is accepted too; only its analysis section is used.
pub fn parse_analysis_config(document: &str) -> Result<AnalysisConfig> {
    let value: Value = serde_json::from_str(document).map_err(|e| Error::Config(format!("malformed JSON: {e}")))?;
    if value.get("device").is_some() || value.get("sweep").is_some() {
        return parse_config(document).map(|c| c.analysis);
    }
    let mut cx = Walker::default();
    let (v, path) = match value.get("analysis") {
        Some(a) => (a, "analysis"),
        None => (&value, ""),
    };
    let cfg = cx.analysis(v, path);
    match cfg {
        Some(c) if cx.issues.is_empty() => Ok(c),
        _ => Err(Error::Validation(cx.issues)),
    }
}

impl RunConfig {
    /// Re-validates a config built in code, e.g. after CLI overrides.
    pub fn validate(&self) -> Result<()> {
        let value = serde_json::to_value(self)?;
        parse_config(&value.to_string()).map(|_| ())
    }
}

fn join(path: &str, key: &str) -> String {
    if path.is_empty() {
        key.to_string()
    } else {
        format!("{path}.{key}")
    }
}

#[derive(Default)]
struct Walker {
    issues: Vec<ConfigIssue>,
}

impl Walker {
    fn push(&mut self, path: &str, message: impl Into<String>) {
        self.issues.push(ConfigIssue { path: path.to_string(), message: message.into() });
    }

    fn object<'a>(&mut self, v: &'a Value, path: &str, keys: &[&str]) -> Option<&'a Map<String, Value>> {
        let Some(m) = v.as_object() else {
            self.push(path, "expected an object");
            return None;
        };
        for k in m.keys() {
            if !keys.contains(&k.as_str()) {
                self.push(&join(path, k), "unknown key");
            }
        }
        Some(m)
    }

    fn required<'a>(&mut self, m: &'a Map<String, Value>, path: &str, key: &str) -> Option<&'a Value> {
        let v = m.get(key);
        if v.is_none() {
            self.push(&join(path, key), "missing required key");
        }
        v
    }

    fn number(&mut self, v: &Value, path: &str) -> Option<f64> {
        let x = v.as_f64();
        if x.is_none() {
            self.push(path, "expected a number");
        }
        x
    }

    fn field(&mut self, m: &Map<String, Value>, path: &str, key: &str, default: Option<f64>) -> Option<f64> {
        match m.get(key) {
            Some(v) => self.number(v, &join(path, key)),
            None if default.is_some() => default,
            None => {
                self.push(&join(path, key), "missing required key");
                None
            }
        }
    }

    fn positive(&mut self, m: &Map<String, Value>, path: &str, key: &str, default: Option<f64>) -> Option<f64> {
        let x = self.field(m, path, key, default)?;
        if !(x > 0.0 && x.is_finite()) {
            self.push(&join(path, key), format!("must be positive, got {x}"));
        }
        Some(x)
    }

    fn integer(&mut self, m: &Map<String, Value>, path: &str, key: &str, default: Option<u64>) -> Option<u64> {
        match m.get(key) {
            Some(v) => {
                let x = v.as_u64();
                if x.is_none() {
                    self.push(&join(path, key), "expected a non-negative integer");
                }
                x
            }
            None if default.is_some() => default,
            None => {
                self.push(&join(path, key), "missing required key");
                None
            }
        }
    }

    fn choice<T: Copy>(&mut self, v: &Value, path: &str, choices: &[(&str, T)]) -> Option<T> {
        let found = v.as_str().and_then(|s| choices.iter().find(|(n, _)| *n == s)).map(|(_, t)| *t);
        if found.is_none() {
            let names: Vec<&str> = choices.iter().map(|(n, _)| *n).collect();
            self.push(path, format!("expected one of {}", names.join(", ")));
        }
        found
    }

    fn run_config(&mut self, v: &Value) -> Option<RunConfig> {
        let m = self.object(v, "", &["device", "sweep", "analysis", "output"])?;
        let device = self.required(m, "", "device").and_then(|d| self.device(d, "device"));
        let sweep = self.required(m, "", "sweep").and_then(|s| self.sweep(s, "sweep"));
        let analysis = match m.get("analysis") {
            Some(a) => self.analysis(a, "analysis"),
            None => Some(AnalysisConfig::default()),
        };
        let output = match m.get("output") {
            Some(o) => self.output(o, "output"),
            None => Some(OutputConfig::default()),
        };
        let ensemble = v.pointer("/sweep/kind").and_then(Value::as_str) == Some("disorder-ensemble");
        if ensemble && v.pointer("/device/disorder").is_none() {
            self.push("device.disorder", "required for a disorder-ensemble sweep");
        }
        Some(RunConfig { device: device?, sweep: sweep?, analysis: analysis?, output: output? })
    }

    fn device(&mut self, v: &Value, path: &str) -> Option<DeviceConfig> {
        let m = self.object(v, path, &["geometry", "lattice", "disorder", "green"])?;
        let geometry = self.required(m, path, "geometry").and_then(|g| self.geometry(g, &join(path, "geometry")));
        let lattice = match m.get("lattice") {
            Some(l) => self.lattice(l, &join(path, "lattice")),
            None => Some(LatticeParams::default()),
        };
        let disorder = match m.get("disorder") {
            Some(d) => Some(self.disorder(d, &join(path, "disorder"))?),
            None => None,
        };
        let green = match m.get("green") {
            Some(g) => self.green(g, &join(path, "green")),
            None => Some(GreenOptions::default()),
        };
        Some(DeviceConfig { geometry: geometry?, lattice: lattice?, disorder, green: green? })
    }

    fn geometry(&mut self, v: &Value, path: &str) -> Option<GeometrySpec> {
        const KEYS: [&str; 7] = [
            "edge_type",
            "lead_width",
            "constriction_width",
            "constriction_length",
            "profile",
            "total_length",
            "metallic_snap",
        ];
        let m = self.object(v, path, &KEYS)?;
        let edge_type = self.required(m, path, "edge_type").and_then(|e| {
            self.choice(e, &join(path, "edge_type"), &[("armchair", EdgeType::Armchair), ("zigzag", EdgeType::Zigzag)])
        });
        let profile = match m.get("profile") {
            Some(p) => self.choice(
                p,
                &join(path, "profile"),
                &[("abrupt", Profile::Abrupt), ("wedge", Profile::Wedge), ("smooth-cosine", Profile::SmoothCosine)],
            ),
            None => Some(Profile::SmoothCosine),
        };
        let lead_width = self.field(m, path, "lead_width", None);
        let constriction_width = self.field(m, path, "constriction_width", lead_width);
        let total_length = self.field(m, path, "total_length", None);
        let constriction_length = self.field(m, path, "constriction_length", total_length);
        let metallic_snap = match m.get("metallic_snap") {
            Some(Value::Bool(b)) => Some(*b),
            Some(_) => {
                self.push(&join(path, "metallic_snap"), "expected a boolean");
                None
            }
            None => Some(true),
        };
        let g = GeometrySpec {
            edge_type: edge_type?,
            lead_width: lead_width?,
            constriction_width: constriction_width?,
            constriction_length: constriction_length?,
            profile: profile?,
            total_length: total_length?,
            metallic_snap: metallic_snap?,
        };
        for (field, msg) in g.violations() {
            self.push(&join(path, field), msg);
        }
        Some(g)
    }

    fn lattice(&mut self, v: &Value, path: &str) -> Option<LatticeParams> {
        let m = self.object(v, path, &["cc_distance", "hopping_t", "scaling_factor"])?;
        let d = LatticeParams::default();
        let p = LatticeParams {
            cc_distance: self.field(m, path, "cc_distance", Some(d.cc_distance))?,
            hopping_t: self.field(m, path, "hopping_t", Some(d.hopping_t))?,
            scaling_factor: self.field(m, path, "scaling_factor", Some(d.scaling_factor))?,
        };
        for msg in p.validate() {
            let field = msg.split_whitespace().next().unwrap_or_default();
            self.push(&join(path, field), msg.clone());
        }
        Some(p)
    }

    fn disorder(&mut self, v: &Value, path: &str) -> Option<DisorderSpec> {
        let m = self.object(v, path, &["edge_removal_probability", "rng_seed", "edge_depth"])?;
        let p = self.field(m, path, "edge_removal_probability", None);
        let seed = self.integer(m, path, "rng_seed", Some(0));
        let depth = self.integer(m, path, "edge_depth", Some(1));
        let depth = depth.and_then(|d| {
            let r = u32::try_from(d).ok();
            if r.is_none() {
                self.push(&join(path, "edge_depth"), "out of range");
            }
            r
        });
        let spec = DisorderSpec { edge_removal_probability: p?, rng_seed: seed?, edge_depth: depth? };
        for msg in spec.validate() {
            let field = msg.split_whitespace().next().unwrap_or_default();
            self.push(&join(path, field), msg.clone());
        }
        Some(spec)
    }

    fn green(&mut self, v: &Value, path: &str) -> Option<GreenOptions> {
        const KEYS: [&str; 6] = ["eta", "tolerance", "max_iterations", "min_iterations", "device_eta", "energy_floor"];
        let m = self.object(v, path, &KEYS)?;
        let d = GreenOptions::default();
        let g = GreenOptions {
            eta: self.field(m, path, "eta", Some(d.eta))?,
            tolerance: self.field(m, path, "tolerance", Some(d.tolerance))?,
            max_iterations: self.integer(m, path, "max_iterations", Some(d.max_iterations as u64))? as usize,
            min_iterations: self.integer(m, path, "min_iterations", Some(d.min_iterations as u64))? as usize,
            device_eta: self.field(m, path, "device_eta", Some(d.device_eta))?,
            energy_floor: self.field(m, path, "energy_floor", Some(d.energy_floor))?,
        };
        for msg in g.validate() {
            let field = msg.split_whitespace().next().unwrap_or_default();
            self.push(&join(path, field), msg.clone());
        }
        Some(g)
    }

    fn grid(&mut self, v: &Value, path: &str) -> Option<Grid> {
        let m = self.object(v, path, &["start", "stop", "points", "values"])?;
        let grid = if let Some(vals) = m.get("values") {
            if ["start", "stop", "points"].iter().any(|k| m.contains_key(*k)) {
                self.push(path, "give either values or start/stop/points, not both");
                return None;
            }
            let Some(arr) = vals.as_array() else {
                self.push(&join(path, "values"), "expected an array of numbers");
                return None;
            };
            let values: Vec<f64> = arr
                .iter()
                .enumerate()
                .filter_map(|(i, x)| self.number(x, &format!("{}[{i}]", join(path, "values"))))
                .collect();
            if values.len() != arr.len() {
                return None;
            }
            Grid::Values { values }
        } else {
            let start = self.field(m, path, "start", None);
            let stop = self.field(m, path, "stop", None);
            let points = self.integer(m, path, "points", None);
            Grid::Linear { start: start?, stop: stop?, points: points? as usize }
        };
        let vals = grid.values();
        if vals.is_empty() {
            self.push(path, "grid is empty");
        } else if vals.iter().any(|x| !x.is_finite()) {
            self.push(path, "grid contains non-finite values");
        } else if vals.len() > 1 {
            let up = vals.windows(2).all(|w| w[1] > w[0]);
            let down = vals.windows(2).all(|w| w[1] < w[0]);
            if !(up || down) {
                self.push(path, "grid must be strictly monotone");
            }
        }
        Some(grid)
    }

    fn sweep(&mut self, v: &Value, path: &str) -> Option<SweepConfig> {
        const KEYS: [&str; 10] = [
            "kind",
            "gate_V",
            "alpha_F_per_m2",
            "dirac_point_V",
            "temperature_K",
            "B_T",
            "fields_T",
            "bias_V",
            "energy_step_eV",
            "seeds",
        ];
        let m = self.object(v, path, &KEYS)?;
        let kind = self.required(m, path, "kind").and_then(|k| {
            self.choice(
                k,
                &join(path, "kind"),
                &[
                    ("gate", SweepKind::Gate),
                    ("field-fan", SweepKind::FieldFan),
                    ("bias-map", SweepKind::BiasMap),
                    ("disorder-ensemble", SweepKind::DisorderEnsemble),
                ],
            )
        });
        let gate = self.required(m, path, "gate_V").and_then(|g| self.grid(g, &join(path, "gate_V")));
        let alpha = self.positive(m, path, "alpha_F_per_m2", Some(DEFAULT_ALPHA));
        let dirac_point = self.field(m, path, "dirac_point_V", Some(0.0));
        let temperature = self.field(m, path, "temperature_K", Some(0.0));
        if let Some(t) = temperature {
            if !(t >= 0.0 && t.is_finite()) {
                self.push(&join(path, "temperature_K"), format!("must be non-negative, got {t}"));
            }
        }
        let b_tesla = self.field(m, path, "B_T", Some(0.0));
        let optional_grid = |w: &mut Self, key: &str, needed: bool| match m.get(key) {
            Some(g) => w.grid(g, &join(path, key)).map(Some),
            None if needed => {
                w.push(&join(path, key), "required for this sweep kind");
                None
            }
            None => Some(None),
        };
        let fields = optional_grid(self, "fields_T", kind == Some(SweepKind::FieldFan));
        let bias = optional_grid(self, "bias_V", kind == Some(SweepKind::BiasMap));
        let energy_step = match m.get("energy_step_eV") {
            Some(_) => Some(Some(self.positive(m, path, "energy_step_eV", None)?)),
            None => Some(None),
        };
        let seeds = match m.get("seeds") {
            Some(_) => {
                let n = self.integer(m, path, "seeds", None)?;
                if n == 0 {
                    self.push(&join(path, "seeds"), "need at least one seed");
                }
                Some(Some(n))
            }
            None if kind == Some(SweepKind::DisorderEnsemble) => {
                self.push(&join(path, "seeds"), "required for this sweep kind");
                None
            }
            None => Some(None),
        };
        Some(SweepConfig {
            kind: kind?,
            gate: gate?,
            alpha: alpha?,
            dirac_point: dirac_point?,
            temperature: temperature?,
            b_tesla: b_tesla?,
            fields: fields?,
            bias: bias?,
            energy_step: energy_step?,
            seeds: seeds?,
        })
    }

    fn analysis(&mut self, v: &Value, path: &str) -> Option<AnalysisConfig> {
        const KEYS: [&str; 5] =
            ["extractions", "value_tolerance", "min_extent_fraction", "crossover_plateau", "quantum_hall_min_field_T"];
        let m = self.object(v, path, &KEYS)?;
        let d = AnalysisConfig::default();
        let extractions = match m.get("extractions") {
            None => Some(d.extractions.clone()),
            Some(Value::Array(items)) => {
                let choices: Vec<(&str, Extraction)> = Extraction::ALL
                    .iter()
                    .map(|e| match e {
                        Extraction::SemiclassicalWidth => ("semiclassical-width", *e),
                        Extraction::CrossoverWidth => ("crossover-width", *e),
                        Extraction::Capacitance => ("capacitance", *e),
                        Extraction::SubbandSpacing => ("subband-spacing", *e),
                        Extraction::MeanFreePath => ("mean-free-path", *e),
                        Extraction::EnergyScales => ("energy-scales", *e),
                    })
                    .collect();
                let base = join(path, "extractions");
                let out: Vec<Extraction> = items
                    .iter()
                    .enumerate()
                    .filter_map(|(i, x)| self.choice(x, &format!("{base}[{i}]"), &choices))
                    .collect();
                (out.len() == items.len()).then_some(out)
            }
            Some(_) => {
                self.push(&join(path, "extractions"), "expected an array");
                None
            }
        };
        let value_tolerance = self.positive(m, path, "value_tolerance", Some(d.value_tolerance));
        let min_extent_fraction = self.field(m, path, "min_extent_fraction", Some(d.min_extent_fraction));
        if let Some(f) = min_extent_fraction {
            if !(0.0..1.0).contains(&f) {
                self.push(&join(path, "min_extent_fraction"), format!("must lie in [0, 1), got {f}"));
            }
        }
        let crossover_plateau = self.integer(m, path, "crossover_plateau", Some(1));
        if crossover_plateau == Some(0) {
            self.push(&join(path, "crossover_plateau"), "plateaus are counted from 1");
        }
        let qh = self.positive(m, path, "quantum_hall_min_field_T", Some(d.quantum_hall_min_field));
        Some(AnalysisConfig {
            extractions: extractions?,
            value_tolerance: value_tolerance?,
            min_extent_fraction: min_extent_fraction?,
            crossover_plateau: crossover_plateau? as usize,
            quantum_hall_min_field: qh?,
        })
    }

    fn output(&mut self, v: &Value, path: &str) -> Option<OutputConfig> {
        let m = self.object(v, path, &["directory", "formats"])?;
        let d = OutputConfig::default();
        let directory = match m.get("directory") {
            None => Some(d.directory),
            Some(Value::String(s)) if !s.is_empty() => Some(PathBuf::from(s)),
            Some(_) => {
                self.push(&join(path, "directory"), "expected a non-empty string");
                None
            }
        };
        let formats = match m.get("formats") {
            None => Some(d.formats),
            Some(Value::Array(items)) => {
                let base = join(path, "formats");
                let out: Vec<Format> = items
                    .iter()
                    .enumerate()
                    .filter_map(|(i, x)| {
                        self.choice(x, &format!("{base}[{i}]"), &[("csv", Format::Csv), ("json", Format::Json)])
                    })
                    .collect();
                if items.is_empty() {
                    self.push(&base, "need at least one format");
                }
                (out.len() == items.len()).then_some(out)
            }
            Some(_) => {
                self.push(&join(path, "formats"), "expected an array");
                None
            }
        };
        Some(OutputConfig { directory: directory?, formats: formats? })
    }
}
