use super::DeviceLattice;
use crate::error::{Error, Result};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use std::collections::HashMap;

/// Random removal of edge atoms.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DisorderSpec {
    /// Probability that an edge site is removed.
    pub edge_removal_probability: f64,
    pub rng_seed: u64,
    /// Atomic rows from each boundary that count as edge.
    #[serde(default = "default_depth")]
    pub edge_depth: u32,
}

fn default_depth() -> u32 {
    1
}

impl DisorderSpec {
    pub fn new(p: f64, seed: u64) -> Self {
        Self { edge_removal_probability: p, rng_seed: seed, edge_depth: 1 }
    }

    pub fn validate(&self) -> Vec<String> {
        let mut errs = Vec::new();
        let p = self.edge_removal_probability;
        if !(0.0..=1.0).contains(&p) {
            errs.push(format!("edge_removal_probability must lie in [0, 1], got {p}"));
        }
        if self.edge_depth == 0 {
            errs.push("edge_depth must be at least 1".into());
        }
        errs
    }
}

/// Removes each edge site independently with probability `p`, then prunes
/// atoms left with fewer than two bonds. The lead-identical outer periods are
/// never touched. Sites are visited in id order, so a seed fixes the result.
pub fn apply_edge_disorder(lattice: &DeviceLattice, spec: &DisorderSpec) -> Result<DeviceLattice> {
    if let Some(msg) = spec.validate().into_iter().next() {
        return Err(Error::InvalidParameter(msg));
    }
    let mut out = lattice.clone();
    if spec.edge_removal_probability == 0.0 {
        return Ok(out);
    }
    let k = out.realized.columns_per_period;
    // row extent of each period after construction
    let mut extent: HashMap<usize, (i64, i64)> = HashMap::new();
    for s in &out.sites {
        let e = extent.entry(s.column / k).or_insert((s.row, s.row));
        e.0 = e.0.min(s.row);
        e.1 = e.1.max(s.row);
    }
    let depth = spec.edge_depth as i64;
    let mut rng = ChaCha8Rng::seed_from_u64(spec.rng_seed);
    let keep: Vec<bool> = out
        .sites
        .iter()
        .map(|s| {
            if out.is_lead_column(s.column) {
                return true;
            }
            let (lo, hi) = extent[&(s.column / k)];
            let is_edge = s.row - lo < depth || hi - s.row < depth;
            // draw for every edge site so the stream does not depend on p
            !(is_edge && rng.random::<f64>() < spec.edge_removal_probability)
        })
        .collect();
    out.retain_sites(&keep);
    out.prune(2);
    if !out.leads_connected() {
        return Err(Error::Disconnected);
    }
    Ok(out)
}
