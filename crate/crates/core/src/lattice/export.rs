use super::{DeviceLattice, GeometrySpec, LatticeParams, RealizedGeometry, Sublattice};
use serde::{Deserialize, Serialize};

/// JSON view of a device for debugging and cross-implementation diffs.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LatticeExport {
    pub sites: Vec<SiteRecord>,
    pub hoppings: Vec<HoppingRecord>,
    pub onsite: Vec<f64>,
    pub geometry: GeometrySpec,
    pub realized: RealizedGeometry,
    pub params: LatticeParams,
    pub field_tesla: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SiteRecord {
    pub id: usize,
    pub x_nm: f64,
    pub y_nm: f64,
    pub sublattice: Sublattice,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct HoppingRecord {
    pub i: usize,
    pub j: usize,
    pub re: f64,
    pub im: f64,
}

impl From<&DeviceLattice> for LatticeExport {
    fn from(d: &DeviceLattice) -> Self {
        Self {
            sites: d
                .sites
                .iter()
                .map(|s| SiteRecord { id: s.id, x_nm: s.x, y_nm: s.y, sublattice: s.sublattice })
                .collect(),
            hoppings: d
                .hoppings
                .iter()
                .map(|h| HoppingRecord { i: h.i, j: h.j, re: h.amplitude.re, im: h.amplitude.im })
                .collect(),
            onsite: d.onsite.clone(),
            geometry: d.geometry.clone(),
            realized: d.realized.clone(),
            params: d.params,
            field_tesla: d.field_tesla,
        }
    }
}

impl DeviceLattice {
    pub fn to_json(&self) -> serde_json::Result<String> {
        serde_json::to_string_pretty(&LatticeExport::from(self))
    }
}
