use super::{
    DeviceLattice, EdgeType, GeometrySpec, Hopping, LatticeParams, LeadCell, Profile, RealizedGeometry, Site,
    Sublattice,
};
use crate::error::{Error, Result};
use num_complex::Complex64;
use std::collections::HashMap;
use std::f64::consts::PI;

const SQRT3: f64 = 1.732_050_807_568_877_2;

/// Atom of one transverse unit inside one period.
#[derive(Debug, Clone, Copy)]
struct AtomTemplate {
    dx: f64,
    y: f64,
    sublattice: Sublattice,
    local_column: usize,
    row: i64,
}

/// Honeycomb orientation with the given edge running along x.
///
/// Armchair: bonds parallel to x, period 3a, transverse units are dimer lines
/// spaced sqrt(3)a/2. Zigzag: bonds parallel to y, period sqrt(3)a, transverse
/// units are zigzag chains spaced 3a/2.
#[derive(Debug, Clone, Copy)]
pub(crate) struct Orientation {
    pub edge: EdgeType,
    pub a: f64,
}

impl Orientation {
    pub fn period(&self) -> f64 {
        match self.edge {
            EdgeType::Armchair => 3.0 * self.a,
            EdgeType::Zigzag => SQRT3 * self.a,
        }
    }

    pub fn columns(&self) -> usize {
        match self.edge {
            EdgeType::Armchair => 4,
            EdgeType::Zigzag => 2,
        }
    }

    pub fn pitch(&self) -> f64 {
        match self.edge {
            EdgeType::Armchair => 0.5 * SQRT3 * self.a,
            EdgeType::Zigzag => 1.5 * self.a,
        }
    }

    pub fn min_units(&self) -> usize {
        match self.edge {
            EdgeType::Armchair => 3,
            EdgeType::Zigzag => 2,
        }
    }

    /// Transverse extent between the outermost atomic rows (nm).
    pub fn width_of(&self, units: usize) -> f64 {
        let n = units as f64;
        match self.edge {
            EdgeType::Armchair => (n - 1.0) * self.pitch(),
            EdgeType::Zigzag => (n - 1.0) * self.pitch() + 0.5 * self.a,
        }
    }

    pub fn units_for(&self, width_nm: f64) -> usize {
        let raw = match self.edge {
            EdgeType::Armchair => width_nm / self.pitch(),
            EdgeType::Zigzag => (width_nm - 0.5 * self.a) / self.pitch(),
        };
        (raw.round().max(0.0) as usize) + 1
    }

    fn unit_atoms(&self, u: i64) -> [AtomTemplate; 2] {
        let a = self.a;
        match self.edge {
            EdgeType::Armchair => {
                let y = u as f64 * self.pitch();
                if u.rem_euclid(2) == 0 {
                    [
                        AtomTemplate { dx: 0.0, y, sublattice: Sublattice::A, local_column: 0, row: u },
                        AtomTemplate { dx: a, y, sublattice: Sublattice::B, local_column: 1, row: u },
                    ]
                } else {
                    [
                        AtomTemplate { dx: 1.5 * a, y, sublattice: Sublattice::A, local_column: 2, row: u },
                        AtomTemplate { dx: 2.5 * a, y, sublattice: Sublattice::B, local_column: 3, row: u },
                    ]
                }
            }
            EdgeType::Zigzag => {
                let y0 = 1.5 * a * u as f64;
                let half = 0.5 * SQRT3 * a;
                let (lower_dx, lower_col, upper_dx, upper_col) =
                    if u.rem_euclid(2) == 0 { (half, 1, 0.0, 0) } else { (0.0, 0, half, 1) };
                [
                    AtomTemplate {
                        dx: lower_dx,
                        y: y0,
                        sublattice: Sublattice::B,
                        local_column: lower_col,
                        row: 2 * u,
                    },
                    AtomTemplate {
                        dx: upper_dx,
                        y: y0 + 0.5 * a,
                        sublattice: Sublattice::A,
                        local_column: upper_col,
                        row: 2 * u + 1,
                    },
                ]
            }
        }
    }
}

fn snap_metallic(units: usize) -> usize {
    // nearest N with N = 2 (mod 3); always within one row
    match units % 3 {
        2 => units,
        0 => units - 1,
        _ => units + 1,
    }
}

/// Clean ribbon of uniform width with leads of the same width.
pub fn build_ribbon(
    params: LatticeParams,
    edge_type: EdgeType,
    width_nm: f64,
    length_nm: f64,
) -> Result<DeviceLattice> {
    build_constriction(params, GeometrySpec::ribbon(edge_type, width_nm, length_nm))
}

/// Wide-narrow-wide device. Widths are rounded to whole transverse units;
/// what was actually built is recorded in `realized`.
pub fn build_constriction(params: LatticeParams, geometry: GeometrySpec) -> Result<DeviceLattice> {
    if let Some(msg) = params.validate().into_iter().next() {
        return Err(Error::InvalidParameter(msg));
    }
    if let Some((field, msg)) = geometry.violations().into_iter().next() {
        return Err(Error::InvalidParameter(format!("{field}: {msg}")));
    }
    let orient = Orientation { edge: geometry.edge_type, a: params.a() };
    let period = orient.period();
    let k = orient.columns();

    let mut lead_units = orient.units_for(geometry.lead_width);
    let mut narrow_units = orient.units_for(geometry.constriction_width);
    let snap = geometry.metallic_snap && geometry.edge_type == EdgeType::Armchair;
    let mut snapped = false;
    if snap {
        let (l, n) = (snap_metallic(lead_units), snap_metallic(narrow_units));
        snapped = l != lead_units || n != narrow_units;
        lead_units = l;
        narrow_units = n;
    }
    for (units, width) in [(narrow_units, geometry.constriction_width), (lead_units, geometry.lead_width)] {
        if units < orient.min_units() {
            return Err(Error::TooNarrow { requested_nm: width, rows: units, min: orient.min_units() });
        }
    }

    let periods = (geometry.total_length / period).round() as usize;
    if periods < 2 {
        return Err(Error::TooShort { periods });
    }

    let units_per_period = width_profile(&geometry, periods, period, lead_units, narrow_units, snap);

    let mut sites = Vec::new();
    for (p, &units) in units_per_period.iter().enumerate() {
        let first = ((lead_units - units) / 2) as i64;
        for u in first..first + units as i64 {
            for atom in orient.unit_atoms(u) {
                sites.push(Site {
                    id: 0,
                    x: p as f64 * period + atom.dx,
                    y: atom.y,
                    sublattice: atom.sublattice,
                    row: atom.row,
                    column: p * k + atom.local_column,
                });
            }
        }
    }
    sort_sites(&mut sites);

    let t = params.t();
    let hoppings = bonds(&sites, params.a(), -t);
    let onsite = vec![0.0; sites.len()];

    let left_cell: Vec<Site> = sites.iter().filter(|s| s.column < k).map(|s| Site { x: s.x - period, ..*s }).collect();
    let last_first_col = (periods - 1) * k;
    let right_cell: Vec<Site> =
        sites.iter().filter(|s| s.column >= last_first_col).map(|s| Site { x: s.x + period, ..*s }).collect();

    let realized = RealizedGeometry {
        lead_units,
        narrow_units,
        lead_width_nm: orient.width_of(lead_units),
        constriction_width_nm: orient.width_of(narrow_units),
        periods,
        period_nm: period,
        columns_per_period: k,
        unit_pitch_nm: orient.pitch(),
        units_per_period,
        snapped,
    };
    let mut warnings = Vec::new();
    if snapped {
        warnings.push(format!(
            "armchair widths snapped to the metallic class: lead {} units ({:.2} nm), constriction {} units ({:.2} nm)",
            lead_units, realized.lead_width_nm, narrow_units, realized.constriction_width_nm
        ));
    }

    let mut device = DeviceLattice {
        params,
        geometry,
        realized,
        sites,
        hoppings,
        onsite,
        left_lead: lead_cell(left_cell, period, k, params.a(), -t),
        right_lead: lead_cell(right_cell, period, k, params.a(), -t),
        field_tesla: 0.0,
        warnings,
    };
    device.prune(2);
    if !device.leads_connected() {
        return Err(Error::Disconnected);
    }
    Ok(device)
}

fn width_profile(
    geometry: &GeometrySpec,
    periods: usize,
    period: f64,
    lead_units: usize,
    narrow_units: usize,
    snap: bool,
) -> Vec<usize> {
    let center = 0.5 * periods as f64 * period;
    let half = 0.5 * geometry.constriction_length;
    // transitions end one period before each device end, which stays lead-like
    let ramp = center - half - period;
    let span = (lead_units - narrow_units) as f64;
    (0..periods)
        .map(|p| {
            if p == 0 || p + 1 == periods {
                return lead_units;
            }
            let xc = (p as f64 + 0.5) * period;
            let dist = (xc - center).abs();
            let outside = (dist - half).max(0.0);
            let frac = if ramp <= 0.0 {
                if outside > 0.0 {
                    1.0
                } else {
                    0.0
                }
            } else {
                (outside / ramp).min(1.0)
            };
            let raw = match geometry.profile {
                Profile::Abrupt => {
                    if dist <= half.max(0.5 * period) {
                        0.0
                    } else {
                        span
                    }
                }
                Profile::Wedge => span * frac,
                Profile::SmoothCosine => span * 0.5 * (1.0 - (PI * frac).cos()),
            };
            let extra = if snap { 3.0 * (raw / 3.0).round() } else { raw.round() };
            narrow_units + (extra as usize).min(lead_units - narrow_units)
        })
        .collect()
}

pub(crate) fn sort_sites(sites: &mut [Site]) {
    sites.sort_by(|p, q| p.column.cmp(&q.column).then(p.y.total_cmp(&q.y)));
    for (i, s) in sites.iter_mut().enumerate() {
        s.id = i;
    }
}

/// Nearest-neighbour bonds by distance, both directions.
fn bonds(sites: &[Site], a: f64, amplitude: f64) -> Vec<Hopping> {
    let mut index: HashMap<(usize, i64), Vec<usize>> = HashMap::new();
    for s in sites {
        index.entry((s.column, s.row)).or_default().push(s.id);
    }
    let mut out = Vec::new();
    for s in sites {
        for dc in [-1i64, 0, 1] {
            let col = s.column as i64 + dc;
            if col < 0 {
                continue;
            }
            for dr in [-1i64, 0, 1] {
                if let Some(cands) = index.get(&(col as usize, s.row + dr)) {
                    for &j in cands {
                        if j != s.id && is_bond(s, &sites[j], 0.0, a) {
                            out.push(Hopping { i: s.id, j, amplitude: Complex64::new(amplitude, 0.0) });
                        }
                    }
                }
            }
        }
    }
    out
}

fn is_bond(p: &Site, q: &Site, shift_x: f64, a: f64) -> bool {
    let dx = q.x + shift_x - p.x;
    let dy = q.y - p.y;
    ((dx * dx + dy * dy).sqrt() - a).abs() < 1e-6 * a
}

fn lead_cell(sites: Vec<Site>, period: f64, columns: usize, a: f64, amplitude: f64) -> LeadCell {
    let sites: Vec<Site> = sites.into_iter().enumerate().map(|(i, s)| Site { id: i, ..s }).collect();
    let mut intra = Vec::new();
    let mut inter = Vec::new();
    let hop = Complex64::new(amplitude, 0.0);
    for p in &sites {
        for q in &sites {
            if p.id != q.id && is_bond(p, q, 0.0, a) {
                intra.push(Hopping { i: p.id, j: q.id, amplitude: hop });
            }
            if is_bond(p, q, period, a) {
                inter.push(Hopping { i: p.id, j: q.id, amplitude: hop });
            }
        }
    }
    let onsite = vec![0.0; sites.len()];
    LeadCell { sites, onsite, intra, inter, period_nm: period, columns }
}
