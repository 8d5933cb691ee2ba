//! Reading measured or previously exported traces and bias maps.
//!
//! Files start with `# key: value` metadata lines followed by a CSV header.
//! Conductance is `G_siemens` or `G_2e2_over_h`; an optional `G_unit`
//! metadata entry must agree with the column name.

use crate::constants::G0_SIEMENS;
use crate::error::{Error, Result};
use crate::transport::{BiasMap, ConductanceTrace};
use std::collections::BTreeMap;
use std::io::BufRead;

/// Trace plus the optional sample geometry from its metadata.
#[derive(Debug, Clone, PartialEq)]
pub struct IngestedTrace {
    pub trace: ConductanceTrace,
    pub length_nm: Option<f64>,
    pub width_nm: Option<f64>,
}

const KNOWN_KEYS: &[&str] = &[
    "alpha_F_per_m2",
    "dirac_point_V",
    "B_T",
    "temperature_K",
    "R_series_ohm",
    "L_nm",
    "W_nm",
    "G_unit",
    "fingerprint",
    "flagged_points",
];

struct Parsed {
    meta: BTreeMap<String, (usize, String)>,
    header: Vec<String>,
    header_line: usize,
    rows: Vec<(usize, Vec<f64>)>,
}

fn schema(line: usize, message: impl Into<String>) -> Error {
    Error::Schema { line: Some(line), message: message.into() }
}

fn parse<R: BufRead>(mut reader: R) -> Result<Parsed> {
    let mut text = String::new();
    reader.read_to_string(&mut text)?;
    let mut meta = BTreeMap::new();
    let mut header_line = None;
    for (idx, line) in text.lines().enumerate() {
        let n = idx + 1;
        let line = line.trim();
        let Some(rest) = line.strip_prefix('#') else {
            if header_line.is_none() && !line.is_empty() {
                header_line = Some(n);
            }
            continue;
        };
        if header_line.is_some() {
            return Err(schema(n, "metadata after the column header"));
        }
        let (k, v) =
            rest.split_once(':').ok_or_else(|| schema(n, format!("metadata line is not `# key: value`: {line}")))?;
        let key = k.trim().to_string();
        if !KNOWN_KEYS.contains(&key.as_str()) {
            log::warn!("line {n}: ignoring unknown metadata key `{key}`");
        }
        if meta.insert(key.clone(), (n, v.trim().to_string())).is_some() {
            return Err(schema(n, format!("duplicate metadata key `{key}`")));
        }
    }
    let mut rdr = csv::ReaderBuilder::new().comment(Some(b'#')).trim(csv::Trim::All).from_reader(text.as_bytes());
    let header_line =
        header_line.ok_or_else(|| Error::Schema { line: None, message: "missing column header".into() })?;
    let header: Vec<String> = rdr.headers()?.iter().map(str::to_string).collect();
    let mut rows = Vec::new();
    for record in rdr.records() {
        let record = record.map_err(|e| {
            let line = e.position().map(|p| p.line() as usize);
            match e.into_kind() {
                csv::ErrorKind::UnequalLengths { expected_len, len, .. } => {
                    Error::Schema { line, message: format!("expected {expected_len} columns, found {len}") }
                }
                other => Error::Schema { line, message: format!("{other:?}") },
            }
        })?;
        let n = record.position().map_or(0, |p| p.line() as usize);
        let vals = record
            .iter()
            .zip(&header)
            .map(|(f, c)| {
                f.parse::<f64>()
                    .ok()
                    .filter(|v| v.is_finite())
                    .ok_or_else(|| schema(n, format!("column `{c}`: `{f}` is not a finite number")))
            })
            .collect::<Result<Vec<f64>>>()?;
        rows.push((n, vals));
    }
    Ok(Parsed { meta, header, header_line, rows })
}

impl Parsed {
    fn number(&self, key: &str) -> Result<Option<f64>> {
        match self.meta.get(key) {
            None => Ok(None),
            Some((n, v)) => v
                .parse::<f64>()
                .ok()
                .filter(|x| x.is_finite())
                .map(Some)
                .ok_or_else(|| schema(*n, format!("metadata `{key}`: `{v}` is not a finite number"))),
        }
    }

    fn required(&self, key: &str) -> Result<f64> {
        self.number(key)?
            .ok_or_else(|| Error::Schema { line: None, message: format!("missing required metadata `{key}`") })
    }

    fn column(&self, name: &str) -> Result<usize> {
        self.header
            .iter()
            .position(|h| h == name)
            .ok_or_else(|| schema(self.header_line, format!("missing column `{name}`")))
    }

    /// Factor taking the conductance column to units of 2e^2/h.
    fn conductance_column(&self, names: &[(&str, f64)]) -> Result<(usize, f64)> {
        let found =
            names.iter().find_map(|(name, f)| self.header.iter().position(|h| h == name).map(|i| (i, *name, *f)));
        let (i, name, f) = found.ok_or_else(|| {
            schema(
                self.header_line,
                format!(
                    "no conductance column; expected one of {}",
                    names.iter().map(|n| n.0).collect::<Vec<_>>().join(", ")
                ),
            )
        })?;
        if let Some((n, unit)) = self.meta.get("G_unit") {
            if !name.ends_with(unit.as_str()) {
                return Err(schema(*n, format!("G_unit `{unit}` disagrees with column `{name}`")));
            }
        }
        Ok((i, f))
    }
}

pub fn read_trace_csv<R: BufRead>(reader: R) -> Result<IngestedTrace> {
    let p = parse(reader)?;
    let vi = p.column("Vg_V")?;
    let (gi, factor) = p.conductance_column(&[("G_2e2_over_h", 1.0), ("G_siemens", 1.0 / G0_SIEMENS)])?;
    if p.rows.is_empty() {
        return Err(Error::Schema { line: None, message: "trace has no data rows".into() });
    }
    let alpha = p.required("alpha_F_per_m2")?;
    if !(alpha > 0.0) {
        return Err(schema(p.meta["alpha_F_per_m2"].0, format!("alpha_F_per_m2 must be positive, got {alpha}")));
    }
    let positive = |key: &str| -> Result<Option<f64>> {
        match p.number(key)? {
            Some(v) if v <= 0.0 => Err(schema(p.meta[key].0, format!("{key} must be positive, got {v}"))),
            other => Ok(other),
        }
    };
    let trace = ConductanceTrace {
        gate_voltages: p.rows.iter().map(|(_, r)| r[vi]).collect(),
        conductance: p.rows.iter().map(|(_, r)| r[gi] * factor).collect(),
        alpha,
        dirac_point: p.required("dirac_point_V")?,
        b_tesla: p.number("B_T")?.unwrap_or(0.0),
        temperature: p.number("temperature_K")?.unwrap_or(0.0),
        series_resistance: p.number("R_series_ohm")?.unwrap_or(0.0),
        fingerprint: p.meta.get("fingerprint").map(|(_, v)| v.clone()),
        flagged: vec![false; p.rows.len()],
    };
    Ok(IngestedTrace { length_nm: positive("L_nm")?, width_nm: positive("W_nm")?, trace })
}

/// Reads the long-format `Vg_V,Vsd_V,Gdiff_2e2_over_h` map written by
/// [`BiasMap::write_csv`]. Every (gate, bias) pair must appear exactly once.
pub fn read_bias_map_csv<R: BufRead>(reader: R) -> Result<BiasMap> {
    let p = parse(reader)?;
    let (vi, bi) = (p.column("Vg_V")?, p.column("Vsd_V")?);
    let (gi, factor) = p.conductance_column(&[("Gdiff_2e2_over_h", 1.0), ("Gdiff_siemens", 1.0 / G0_SIEMENS)])?;
    let mut gates: Vec<f64> = p.rows.iter().map(|(_, r)| r[vi]).collect();
    let mut biases: Vec<f64> = p.rows.iter().map(|(_, r)| r[bi]).collect();
    for v in [&mut gates, &mut biases] {
        v.sort_by(f64::total_cmp);
        v.dedup();
    }
    if gates.is_empty() {
        return Err(Error::Schema { line: None, message: "bias map has no data rows".into() });
    }
    let mut grid = vec![vec![f64::NAN; biases.len()]; gates.len()];
    for (n, r) in &p.rows {
        let i = gates.binary_search_by(|x| x.total_cmp(&r[vi])).expect("gate present");
        let j = biases.binary_search_by(|x| x.total_cmp(&r[bi])).expect("bias present");
        if !grid[i][j].is_nan() {
            return Err(schema(*n, format!("duplicate point V_g = {}, V_sd = {}", r[vi], r[bi])));
        }
        grid[i][j] = r[gi] * factor;
    }
    if grid.iter().flatten().any(|g| g.is_nan()) {
        return Err(Error::Schema {
            line: None,
            message: format!("bias map is not a full {} x {} grid", gates.len(), biases.len()),
        });
    }
    Ok(BiasMap {
        flagged: vec![false; gates.len()],
        gate_voltages: gates,
        bias_voltages: biases,
        g_diff: grid,
        b_tesla: p.number("B_T")?.unwrap_or(0.0),
        alpha: p.required("alpha_F_per_m2")?,
        dirac_point: p.required("dirac_point_V")?,
        fingerprint: p.meta.get("fingerprint").map(|(_, v)| v.clone()),
    })
}
