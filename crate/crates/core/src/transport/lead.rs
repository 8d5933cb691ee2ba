use crate::error::{Error, Result};
use crate::lattice::LeadCell;
use ndarray::Array2;
use ndarray_linalg::Inverse;
use num_complex::Complex64;
use serde::{Deserialize, Serialize};

pub(crate) type CMat = Array2<Complex64>;

/// Green's function settings for the semi-infinite leads.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct GreenOptions {
    /// Imaginary energy shift (eV) applied to the lead surface Green's functions.
    pub eta: f64,
    /// Decimation stops once the renormalized couplings fall below this
    /// fraction of their starting size.
    pub tolerance: f64,
    pub max_iterations: usize,
    /// Keep decimating at least this long even after convergence.
    pub min_iterations: usize,
    /// Imaginary shift (eV) inside the device. Far below `eta`, it only
    /// regularizes exact zero modes of isolated columns.
    pub device_eta: f64,
    /// Energies closer to the Dirac point than this (eV) are evaluated at
    /// `+energy_floor`. The leads cannot resolve scales below `eta`, and at
    /// E = 0 the zigzag flat band and step-edge zero modes are singular.
    pub energy_floor: f64,
}

impl Default for GreenOptions {
    fn default() -> Self {
        Self {
            eta: 1e-6,
            tolerance: 1e-13,
            max_iterations: 200,
            min_iterations: 0,
            device_eta: 1e-12,
            energy_floor: 1e-5,
        }
    }
}

impl GreenOptions {
    pub fn with_eta(eta: f64) -> Self {
        Self { eta, ..Self::default() }
    }

    pub fn validate(&self) -> Vec<String> {
        let mut errs = Vec::new();
        if !(self.eta > 0.0 && self.eta.is_finite()) {
            errs.push(format!("eta must be positive, got {}", self.eta));
        }
        if !(self.tolerance > 0.0) {
            errs.push(format!("tolerance must be positive, got {}", self.tolerance));
        }
        if !(self.device_eta >= 0.0 && self.device_eta.is_finite()) {
            errs.push(format!("device_eta must be non-negative, got {}", self.device_eta));
        }
        if !(self.energy_floor >= 0.0 && self.energy_floor.is_finite()) {
            errs.push(format!("energy_floor must be non-negative, got {}", self.energy_floor));
        }
        if self.max_iterations == 0 {
            errs.push("max_iterations must be at least 1".into());
        }
        errs
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum LeadSide {
    Left,
    Right,
}

/// Self-energy of one lead acting on the outermost device column. `sites`
/// lists the lead-cell sites that are copies of that column, in the order
/// used by `sigma`.
#[derive(Debug, Clone)]
pub struct SelfEnergy {
    pub sigma: CMat,
    pub sites: Vec<usize>,
    pub iterations: usize,
}

impl SelfEnergy {
    /// Broadening `i(Sigma - Sigma^dag)`.
    pub fn gamma(&self) -> CMat {
        gamma(&self.sigma)
    }
}

pub(crate) fn gamma(sigma: &CMat) -> CMat {
    let i = Complex64::i();
    (sigma - &sigma.t().mapv(|z| z.conj())).mapv(|z| i * z)
}

/// Lead cell pre-split into the column that touches the device and the rest.
#[derive(Debug, Clone)]
pub(crate) struct LeadBlocks {
    pub side: LeadSide,
    /// Boundary column of the lead facing the device side.
    pub boundary: Vec<usize>,
    /// Boundary column on the far side, through which cells are chained.
    pub far: Vec<usize>,
    h: CMat,
    /// `<cell n | H | cell n+1>`.
    u: CMat,
}

impl LeadBlocks {
    pub fn new(lead: &LeadCell, side: LeadSide) -> Result<Self> {
        let n = lead.sites.len();
        if n == 0 {
            return Err(Error::Topology("empty lead cell".into()));
        }
        let mut h = CMat::zeros((n, n));
        for (i, e) in lead.onsite.iter().enumerate() {
            h[[i, i]] += Complex64::new(*e, 0.0);
        }
        for hop in &lead.intra {
            h[[hop.i, hop.j]] += hop.amplitude;
        }
        let mut u = CMat::zeros((n, n));
        for hop in &lead.inter {
            u[[hop.i, hop.j]] += hop.amplitude;
        }
        let c_min = lead.sites.iter().map(|s| s.column).min().unwrap_or(0);
        let c_max = lead.sites.iter().map(|s| s.column).max().unwrap_or(0);
        let column = |c: usize| -> Vec<usize> { lead.sites.iter().filter(|s| s.column == c).map(|s| s.id).collect() };
        let (first, last) = (column(c_min), column(c_max));
        if c_min == c_max {
            return Err(Error::Topology("lead cell must span at least two columns".into()));
        }
        // inter-cell bonds may only join the last column to the next cell's first
        for hop in &lead.inter {
            if !last.contains(&hop.i) || !first.contains(&hop.j) {
                return Err(Error::Topology(format!("lead inter-cell bond {} -> {} skips a column", hop.i, hop.j)));
            }
        }
        let (boundary, far) = match side {
            LeadSide::Left => (last, first),
            LeadSide::Right => (first, last),
        };
        Ok(Self { side, boundary, far, h, u })
    }

    pub fn len(&self) -> usize {
        self.h.nrows()
    }

    /// Coupling from the device column to the lead boundary column:
    /// `<device | H | lead boundary>`.
    pub fn device_coupling(&self) -> CMat {
        // the device column is a copy of `far` in the neighbouring cell
        match self.side {
            LeadSide::Left => adjoint(&select(&self.u, &self.boundary, &self.far)),
            LeadSide::Right => select(&self.u, &self.far, &self.boundary),
        }
    }

    /// Surface Green's function on `boundary` at `energy + i eta`, and the
    /// number of decimation steps taken.
    pub fn surface_green(&self, energy: f64, opts: &GreenOptions) -> Result<(CMat, usize)> {
        let z = Complex64::new(energy, opts.eta);
        let n = self.len();
        let b = &self.boundary;
        let rest: Vec<usize> = (0..n).filter(|i| !b.contains(i)).collect();
        let h_bb = select(&self.h, b, b);
        let h_br = select(&self.h, b, &rest);
        let h_rb = select(&self.h, &rest, b);
        let g_r = resolvent(z, &select(&self.h, &rest, &rest))?;
        let eps_s = &h_bb + &h_br.dot(&g_r).dot(&h_rb);
        let (eps, toward, back) = match self.side {
            LeadSide::Right => {
                // chain on the first column: F_n -> R_n -> F_{n+1}
                let w = select(&self.u, &rest, b);
                let eps = &eps_s + &adjoint(&w).dot(&g_r).dot(&w);
                let right = h_br.dot(&g_r).dot(&w);
                let left = adjoint(&w).dot(&g_r).dot(&h_rb);
                (eps, right, left)
            }
            LeadSide::Left => {
                // chain on the last column: L_n -> Q_{n+1} -> L_{n+1}; surface at the right end
                let w = select(&self.u, b, &rest);
                let eps = &eps_s + &w.dot(&g_r).dot(&adjoint(&w));
                let right = w.dot(&g_r).dot(&h_rb);
                let left = h_br.dot(&g_r).dot(&adjoint(&w));
                (eps, left, right)
            }
        };
        decimate(z, eps_s, eps, toward, back, energy, opts)
    }
}

/// Lopez Sancho renormalization of a semi-infinite chain whose surface cell
/// couples inward through `toward` and back through `back`.
fn decimate(
    z: Complex64,
    mut eps_s: CMat,
    mut eps: CMat,
    mut toward: CMat,
    mut back: CMat,
    energy: f64,
    opts: &GreenOptions,
) -> Result<(CMat, usize)> {
    let scale = max_abs(&toward).max(max_abs(&back)).max(f64::MIN_POSITIVE);
    let mut converged = false;
    let mut it = 0;
    while it < opts.max_iterations {
        it += 1;
        let g = resolvent(z, &eps)?;
        let tg = toward.dot(&g);
        let bg = back.dot(&g);
        let tgb = tg.dot(&back);
        let bgt = bg.dot(&toward);
        eps_s += &tgb;
        eps += &tgb;
        eps += &bgt;
        toward = tg.dot(&toward);
        back = bg.dot(&back);
        if max_abs(&toward).max(max_abs(&back)) < opts.tolerance * scale {
            converged = true;
            if it >= opts.min_iterations {
                break;
            }
        }
    }
    if !converged {
        return Err(Error::LeadNotConverged { energy, eta: opts.eta, iterations: it });
    }
    Ok((resolvent(z, &eps_s)?, it))
}

/// Self-energy of the left or right lead at `energy`, on the lead's boundary
/// column facing the device.
pub fn lead_self_energy(lead: &LeadCell, side: LeadSide, energy: f64, opts: &GreenOptions) -> Result<SelfEnergy> {
    let blocks = LeadBlocks::new(lead, side)?;
    blocks.self_energy(energy, opts)
}

impl LeadBlocks {
    pub fn self_energy(&self, energy: f64, opts: &GreenOptions) -> Result<SelfEnergy> {
        let (g, iterations) = self.surface_green(energy, opts)?;
        let v = self.device_coupling();
        let sigma = v.dot(&g).dot(&adjoint(&v));
        Ok(SelfEnergy { sigma, sites: self.far.clone(), iterations })
    }
}

pub(crate) fn resolvent(z: Complex64, h: &CMat) -> Result<CMat> {
    let n = h.nrows();
    if n == 0 {
        return Ok(CMat::zeros((0, 0)));
    }
    let mut a = h.mapv(|v| -v);
    for i in 0..n {
        a[[i, i]] += z;
    }
    Ok(a.inv()?)
}

pub(crate) fn select(m: &CMat, rows: &[usize], cols: &[usize]) -> CMat {
    CMat::from_shape_fn((rows.len(), cols.len()), |(a, b)| m[[rows[a], cols[b]]])
}

pub(crate) fn adjoint(m: &CMat) -> CMat {
    m.t().mapv(|z| z.conj())
}

pub(crate) fn max_abs(m: &CMat) -> f64 {
    m.iter().fold(0.0, |acc, z| acc.max(z.norm()))
}
