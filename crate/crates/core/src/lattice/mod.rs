//! Honeycomb tight-binding devices: ribbons and wide-narrow-wide constrictions
//! attached to two semi-infinite leads.
//!
//! Transport runs along +x. Sites are stored column by column (a column is the
//! set of atoms sharing one x coordinate), which is the slicing the recursive
//! Green's function solver consumes. Nearest-neighbour bonds only ever connect
//! a column to itself or to an adjacent column.

mod build;
mod disorder;
mod export;
mod field;
mod potential;

pub use build::{build_constriction, build_ribbon};
pub use disorder::{apply_edge_disorder, DisorderSpec};
pub use export::LatticeExport;
pub use field::{apply_peierls, apply_peierls_with_gauge, peierls_phase};
pub use potential::{apply_onsite_potential, saddle_potential};

use crate::error::{Error, Result};
use num_complex::Complex64;
use serde::{Deserialize, Serialize};
use std::collections::{HashMap, VecDeque};

/// Microscopic lattice parameters, with optional lattice scaling
/// (`a' = s a`, `t' = t / s`) that keeps `hbar v_F = 1.5 a t` fixed.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct LatticeParams {
    /// Carbon-carbon distance of the unscaled lattice (nm).
    #[serde(default = "default_cc")]
    pub cc_distance: f64,
    /// Nearest-neighbour hopping of the unscaled lattice (eV).
    #[serde(default = "default_t")]
    pub hopping_t: f64,
    #[serde(default = "default_scaling")]
    pub scaling_factor: f64,
}

fn default_cc() -> f64 {
    0.142
}
fn default_t() -> f64 {
    2.7
}
fn default_scaling() -> f64 {
    1.0
}

impl Default for LatticeParams {
    fn default() -> Self {
        Self { cc_distance: default_cc(), hopping_t: default_t(), scaling_factor: default_scaling() }
    }
}

impl LatticeParams {
    pub fn scaled(scaling_factor: f64) -> Self {
        Self { scaling_factor, ..Self::default() }
    }

    /// Scaled bond length a' (nm).
    pub fn a(&self) -> f64 {
        self.cc_distance * self.scaling_factor
    }

    /// Scaled hopping t' (eV).
    pub fn t(&self) -> f64 {
        self.hopping_t / self.scaling_factor
    }

    /// hbar v_F = 1.5 a t (eV nm), invariant under scaling.
    pub fn hbar_vf(&self) -> f64 {
        1.5 * self.a() * self.t()
    }

    /// Fermi velocity of the lattice (m/s).
    pub fn fermi_velocity(&self) -> f64 {
        self.hbar_vf() * 1e-9 / crate::constants::HBAR_EV_S
    }

    pub fn validate(&self) -> Vec<String> {
        let mut errs = Vec::new();
        if !(self.cc_distance > 0.0 && self.cc_distance.is_finite()) {
            errs.push("cc_distance must be positive".into());
        }
        if !(self.hopping_t > 0.0 && self.hopping_t.is_finite()) {
            errs.push("hopping_t must be positive".into());
        }
        if !(self.scaling_factor >= 1.0 && self.scaling_factor.is_finite()) {
            errs.push("scaling_factor must be >= 1".into());
        }
        errs
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum EdgeType {
    Armchair,
    Zigzag,
}

/// Width profile of the wide-narrow-wide transition.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Profile {
    Abrupt,
    Wedge,
    SmoothCosine,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GeometrySpec {
    pub edge_type: EdgeType,
    /// nm
    pub lead_width: f64,
    /// nm
    pub constriction_width: f64,
    /// nm
    pub constriction_length: f64,
    pub profile: Profile,
    /// nm
    pub total_length: f64,
    /// Armchair only: snap every cross-section to the gapless (N = 2 mod 3) class.
    #[serde(default = "default_snap")]
    pub metallic_snap: bool,
}

fn default_snap() -> bool {
    true
}

impl GeometrySpec {
    /// A uniform ribbon: constriction width equal to lead width, no snapping.
    pub fn ribbon(edge_type: EdgeType, width_nm: f64, length_nm: f64) -> Self {
        Self {
            edge_type,
            lead_width: width_nm,
            constriction_width: width_nm,
            constriction_length: length_nm,
            profile: Profile::Abrupt,
            total_length: length_nm,
            metallic_snap: false,
        }
    }

    /// Constraint violations as `(field, message)` pairs.
    pub fn violations(&self) -> Vec<(&'static str, String)> {
        let mut out = Vec::new();
        for (name, v) in [
            ("lead_width", self.lead_width),
            ("constriction_width", self.constriction_width),
            ("constriction_length", self.constriction_length),
            ("total_length", self.total_length),
        ] {
            if !(v > 0.0 && v.is_finite()) {
                out.push((name, format!("must be a positive length, got {v}")));
            }
        }
        if self.constriction_width > self.lead_width {
            out.push((
                "constriction_width",
                format!("constriction width {} nm exceeds lead width {} nm", self.constriction_width, self.lead_width),
            ));
        }
        if self.constriction_length > self.total_length {
            out.push((
                "constriction_length",
                format!(
                    "constriction length {} nm exceeds total length {} nm",
                    self.constriction_length, self.total_length
                ),
            ));
        }
        out
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Sublattice {
    A,
    B,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Site {
    pub id: usize,
    /// nm
    pub x: f64,
    /// nm
    pub y: f64,
    pub sublattice: Sublattice,
    /// Atomic row index counted from the bottom edge of the lead.
    pub row: i64,
    /// Column index along the transport axis.
    pub column: usize,
}

/// Matrix element `<i|H|j>` (eV). Lists always hold both `(i, j)` and `(j, i)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Hopping {
    pub i: usize,
    pub j: usize,
    pub amplitude: Complex64,
}

/// One period of a semi-infinite lead.
///
/// `sites` are the positions of the lead cell touching the device; `inter`
/// holds `<i, n|H|j, n+1>` with `j` living in the cell shifted by `+period_nm`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LeadCell {
    pub sites: Vec<Site>,
    pub onsite: Vec<f64>,
    pub intra: Vec<Hopping>,
    pub inter: Vec<Hopping>,
    pub period_nm: f64,
    pub columns: usize,
}

/// What the builder actually produced after rounding to whole atomic rows.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RealizedGeometry {
    /// Transverse units (dimer lines for armchair, zigzag chains for zigzag).
    pub lead_units: usize,
    pub narrow_units: usize,
    pub lead_width_nm: f64,
    pub constriction_width_nm: f64,
    pub periods: usize,
    pub period_nm: f64,
    pub columns_per_period: usize,
    /// Transverse pitch between units (nm).
    pub unit_pitch_nm: f64,
    /// Units present in each period along x.
    pub units_per_period: Vec<usize>,
    /// True when metallic snapping moved a requested width.
    pub snapped: bool,
}

impl RealizedGeometry {
    /// Length of the narrowest section (nm).
    pub fn narrow_length_nm(&self) -> f64 {
        let n_min = self.units_per_period.iter().copied().min().unwrap_or(0);
        self.units_per_period.iter().filter(|&&u| u == n_min).count() as f64 * self.period_nm
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DeviceLattice {
    pub params: LatticeParams,
    pub geometry: GeometrySpec,
    pub realized: RealizedGeometry,
    pub sites: Vec<Site>,
    pub hoppings: Vec<Hopping>,
    pub onsite: Vec<f64>,
    pub left_lead: LeadCell,
    pub right_lead: LeadCell,
    /// Total perpendicular field applied so far (T).
    pub field_tesla: f64,
    pub warnings: Vec<String>,
}

impl DeviceLattice {
    pub fn num_sites(&self) -> usize {
        self.sites.len()
    }

    pub fn num_columns(&self) -> usize {
        self.sites.last().map(|s| s.column + 1).unwrap_or(0)
    }

    /// Columns belonging to the lead-identical outermost periods.
    pub fn is_lead_column(&self, column: usize) -> bool {
        let k = self.realized.columns_per_period;
        column < k || column >= (self.realized.periods - 1) * k
    }

    /// Neighbour lists built from the hopping list.
    pub fn adjacency(&self) -> Vec<Vec<usize>> {
        let mut adj = vec![Vec::new(); self.sites.len()];
        for h in &self.hoppings {
            if h.i != h.j {
                adj[h.i].push(h.j);
            }
        }
        adj
    }

    /// Short content hash identifying this exact device (positions, hoppings, onsite).
    pub fn fingerprint(&self) -> String {
        use sha2::{Digest, Sha256};
        let mut hasher = Sha256::new();
        for s in &self.sites {
            hasher.update(s.x.to_le_bytes());
            hasher.update(s.y.to_le_bytes());
        }
        for h in &self.hoppings {
            hasher.update((h.i as u64).to_le_bytes());
            hasher.update((h.j as u64).to_le_bytes());
            hasher.update(h.amplitude.re.to_le_bytes());
            hasher.update(h.amplitude.im.to_le_bytes());
        }
        for e in &self.onsite {
            hasher.update(e.to_le_bytes());
        }
        let digest = hasher.finalize();
        digest.iter().take(8).map(|b| format!("{b:02x}")).collect()
    }

    /// Conjugate-symmetry scan of the device and both leads.
    pub fn check_hermiticity(&self) -> Result<()> {
        check_pairs(&self.hoppings, "device")?;
        check_pairs(&self.left_lead.intra, "left lead")?;
        check_pairs(&self.right_lead.intra, "right lead")?;
        Ok(())
    }

    /// Every site has between one and three neighbours.
    pub fn check_coordination(&self) -> Result<()> {
        for (i, nb) in self.adjacency().iter().enumerate() {
            if nb.is_empty() || nb.len() > 3 {
                return Err(Error::Topology(format!("site {i} has {} neighbours", nb.len())));
            }
        }
        Ok(())
    }

    /// True if some path of bonds joins the first and the last period.
    pub fn leads_connected(&self) -> bool {
        let reach = self.reachable_from(|s| s.column < self.realized.columns_per_period);
        let k = self.realized.columns_per_period;
        let last = (self.realized.periods - 1) * k;
        self.sites.iter().any(|s| s.column >= last && reach[s.id])
    }

    fn reachable_from(&self, seed: impl Fn(&Site) -> bool) -> Vec<bool> {
        let adj = self.adjacency();
        let mut seen = vec![false; self.sites.len()];
        let mut queue: VecDeque<usize> = VecDeque::new();
        for s in &self.sites {
            if seed(s) {
                seen[s.id] = true;
                queue.push_back(s.id);
            }
        }
        while let Some(u) = queue.pop_front() {
            for &v in &adj[u] {
                if !seen[v] {
                    seen[v] = true;
                    queue.push_back(v);
                }
            }
        }
        seen
    }

    /// Keep only the sites flagged in `keep`, renumbering ids and hoppings.
    pub(crate) fn retain_sites(&mut self, keep: &[bool]) {
        let mut new_id = vec![usize::MAX; self.sites.len()];
        let mut sites = Vec::with_capacity(self.sites.len());
        let mut onsite = Vec::with_capacity(self.sites.len());
        for (old, s) in self.sites.iter().enumerate() {
            if keep[old] {
                new_id[old] = sites.len();
                sites.push(Site { id: sites.len(), ..*s });
                onsite.push(self.onsite[old]);
            }
        }
        let hoppings = self
            .hoppings
            .iter()
            .filter(|h| keep[h.i] && keep[h.j])
            .map(|h| Hopping { i: new_id[h.i], j: new_id[h.j], amplitude: h.amplitude })
            .collect();
        self.sites = sites;
        self.onsite = onsite;
        self.hoppings = hoppings;
    }

    /// Iteratively remove non-lead sites with fewer than `min_bonds` bonds, then
    /// drop fragments attached to neither lead.
    pub(crate) fn prune(&mut self, min_bonds: usize) {
        loop {
            let adj = self.adjacency();
            let keep: Vec<bool> =
                self.sites.iter().map(|s| self.is_lead_column(s.column) || adj[s.id].len() >= min_bonds).collect();
            if keep.iter().all(|&k| k) {
                break;
            }
            self.retain_sites(&keep);
        }
        let k = self.realized.columns_per_period;
        let last = (self.realized.periods - 1) * k;
        let attached = self.reachable_from(|s| s.column < k || s.column >= last);
        if attached.iter().any(|&a| !a) {
            self.retain_sites(&attached);
        }
    }

    /// Plaquettes (6-rings) as site ids in counter-clockwise order.
    pub fn plaquettes(&self) -> Vec<[usize; 6]> {
        let adj = self.adjacency();
        let mut found: HashMap<[usize; 6], [usize; 6]> = HashMap::new();
        for start in 0..self.sites.len() {
            let mut path = vec![start];
            ring_search(&adj, start, &mut path, &mut found);
        }
        let mut rings: Vec<[usize; 6]> = found
            .into_values()
            .map(|mut ring| {
                if signed_area(&self.sites, &ring) < 0.0 {
                    ring.reverse();
                }
                ring
            })
            .collect();
        rings.sort();
        rings
    }

    /// Signed area of a closed polygon of sites (nm^2).
    pub fn polygon_area(&self, ring: &[usize]) -> f64 {
        signed_area(&self.sites, ring)
    }
}

fn ring_search(adj: &[Vec<usize>], start: usize, path: &mut Vec<usize>, found: &mut HashMap<[usize; 6], [usize; 6]>) {
    let last = *path.last().unwrap();
    if path.len() == 6 {
        if adj[last].contains(&start) {
            let ring: [usize; 6] = path.as_slice().try_into().unwrap();
            let mut key = ring;
            key.sort_unstable();
            found.entry(key).or_insert(ring);
        }
        return;
    }
    for &next in &adj[last] {
        if next > start && !path.contains(&next) {
            path.push(next);
            ring_search(adj, start, path, found);
            path.pop();
        }
    }
}

fn signed_area(sites: &[Site], ring: &[usize]) -> f64 {
    let n = ring.len();
    let mut acc = 0.0;
    for k in 0..n {
        let p = &sites[ring[k]];
        let q = &sites[ring[(k + 1) % n]];
        acc += p.x * q.y - q.x * p.y;
    }
    0.5 * acc
}

fn check_pairs(hoppings: &[Hopping], label: &str) -> Result<()> {
    let map: HashMap<(usize, usize), Complex64> = hoppings.iter().map(|h| ((h.i, h.j), h.amplitude)).collect();
    for h in hoppings {
        match map.get(&(h.j, h.i)) {
            Some(back) if (back.conj() - h.amplitude).norm() <= 1e-12 * h.amplitude.norm().max(1.0) => {}
            Some(back) => {
                return Err(Error::NonHermitian(format!(
                    "{label}: <{}|H|{}> = {} but <{}|H|{}> = {}",
                    h.i, h.j, h.amplitude, h.j, h.i, back
                )))
            }
            None => {
                return Err(Error::NonHermitian(format!("{label}: hopping {} -> {} has no reverse partner", h.j, h.i)))
            }
        }
    }
    Ok(())
}
