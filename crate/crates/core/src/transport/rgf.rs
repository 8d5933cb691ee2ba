use super::lead::{adjoint, gamma, resolvent, CMat, GreenOptions, LeadBlocks, LeadSide};
use crate::error::{Error, Result};
use crate::lattice::{DeviceLattice, LeadCell, Site};
use num_complex::Complex64;

/// Recursive Green's function solver for one device, prepared once and
/// evaluated at many energies.
///
/// The device is cut into slices of one or a few atomic columns; bonds only
/// join a slice to itself or its neighbours. The leads' imaginary shift `eta` enters only
/// through the self-energies; the device sees the much smaller `device_eta`,
/// so absorption inside it stays negligible and clean ribbons give integer
/// transmission.
#[derive(Debug, Clone)]
pub struct TransportSolver {
    blocks: Vec<CMat>,
    /// `couplings[i] = <column i | H | column i+1>`.
    couplings: Vec<CMat>,
    left: LeadBlocks,
    right: LeadBlocks,
    /// End-column position -> index into the lead self-energy. The left
    /// column opens the first slice and the right column closes the last.
    left_map: Vec<usize>,
    right_map: Vec<usize>,
    options: GreenOptions,
    fingerprint: String,
    b_tesla: f64,
}

/// Transmission at one energy together with lead diagnostics.
#[derive(Debug, Clone, PartialEq)]
pub struct TransmissionResult {
    pub energy: f64,
    pub transmission: f64,
    pub lead_iterations: (usize, usize),
}

impl TransportSolver {
    pub fn new(device: &DeviceLattice, options: GreenOptions) -> Result<Self> {
        if let Some(msg) = options.validate().into_iter().next() {
            return Err(Error::InvalidParameter(msg));
        }
        if device.sites.is_empty() || !device.leads_connected() {
            return Err(Error::Disconnected);
        }
        let mut columns: Vec<usize> = device.sites.iter().map(|s| s.column).collect();
        columns.sort_unstable();
        columns.dedup();
        if columns.windows(2).any(|w| w[1] != w[0] + 1) {
            return Err(Error::Disconnected);
        }
        let c0 = columns[0];
        let ncol = columns.len();
        let mut neighbours: Vec<Vec<usize>> = vec![Vec::new(); device.num_sites()];
        let mut by_column: Vec<Vec<usize>> = vec![Vec::new(); ncol];
        for s in &device.sites {
            by_column[s.column - c0].push(s.id);
        }
        for h in &device.hoppings {
            let (ci, cj) = (device.sites[h.i].column, device.sites[h.j].column);
            if ci.abs_diff(cj) > 1 {
                return Err(Error::Topology(format!("bond {} -> {} joins non-adjacent columns", h.i, h.j)));
            }
            neighbours[h.i].push(cj - c0);
        }
        // A site whose bonds all point forward has a bare 1/z resolvent; near
        // E = 0 that swamps the next slice. Pull its partners into its slice.
        let mut slice_of = vec![0usize; ncol];
        let mut start = 0;
        let mut nslices = 0;
        while start < ncol {
            let mut end = start;
            while end + 1 < ncol
                && (start..=end).flat_map(|c| &by_column[c]).any(|&i| {
                    let nb = &neighbours[i];
                    !nb.iter().any(|&c| c + 1 >= start && c <= end) && nb.contains(&(end + 1))
                })
            {
                end += 1;
            }
            slice_of[start..=end].fill(nslices);
            nslices += 1;
            start = end + 1;
        }
        let mut members: Vec<Vec<usize>> = vec![Vec::new(); nslices];
        let mut local = vec![0usize; device.num_sites()];
        for s in &device.sites {
            let k = slice_of[s.column - c0];
            local[s.id] = members[k].len();
            members[k].push(s.id);
        }
        let mut blocks: Vec<CMat> = members.iter().map(|m| CMat::zeros((m.len(), m.len()))).collect();
        let mut couplings: Vec<CMat> = members.windows(2).map(|w| CMat::zeros((w[0].len(), w[1].len()))).collect();
        for (k, m) in members.iter().enumerate() {
            for &i in m {
                blocks[k][[local[i], local[i]]] += Complex64::new(device.onsite[i], 0.0);
            }
        }
        for h in &device.hoppings {
            let ki = slice_of[device.sites[h.i].column - c0];
            let kj = slice_of[device.sites[h.j].column - c0];
            let (a, b) = (local[h.i], local[h.j]);
            if ki == kj {
                blocks[ki][[a, b]] += h.amplitude;
            } else if kj == ki + 1 {
                couplings[ki][[a, b]] += h.amplitude;
            }
        }
        let left = LeadBlocks::new(&device.left_lead, LeadSide::Left)?;
        let right = LeadBlocks::new(&device.right_lead, LeadSide::Right)?;
        let period = device.realized.period_nm;
        let first: Vec<&Site> = by_column[0].iter().map(|&i| &device.sites[i]).collect();
        let last: Vec<&Site> = by_column[ncol - 1].iter().map(|&i| &device.sites[i]).collect();
        // sites are ordered by column, so the end columns sit at the slice edges
        let left_map = match_column(&first, &device.left_lead, &left.far, period, "left")?;
        let right_map = match_column(&last, &device.right_lead, &right.far, -period, "right")?;
        Ok(Self {
            blocks,
            couplings,
            left,
            right,
            left_map,
            right_map,
            options,
            fingerprint: device.fingerprint(),
            b_tesla: device.field_tesla,
        })
    }

    pub fn options(&self) -> &GreenOptions {
        &self.options
    }

    pub fn fingerprint(&self) -> &str {
        &self.fingerprint
    }

    pub fn b_tesla(&self) -> f64 {
        self.b_tesla
    }

    pub fn num_slices(&self) -> usize {
        self.blocks.len()
    }

    /// Lead self-energies embedded in the first and last slices.
    pub fn self_energies(&self, energy: f64) -> Result<(CMat, CMat, (usize, usize))> {
        let l = self.left.self_energy(energy, &self.options)?;
        let r = self.right.self_energy(energy, &self.options)?;
        let embed = |s: &CMat, map: &[usize], size: usize, offset: usize| {
            let mut out = CMat::zeros((size, size));
            for (a, &ma) in map.iter().enumerate() {
                for (b, &mb) in map.iter().enumerate() {
                    out[[offset + a, offset + b]] = s[[ma, mb]];
                }
            }
            out
        };
        let n_first = self.blocks[0].nrows();
        let n_last = self.blocks[self.blocks.len() - 1].nrows();
        Ok((
            embed(&l.sigma, &self.left_map, n_first, 0),
            embed(&r.sigma, &self.right_map, n_last, n_last - self.right_map.len()),
            (l.iterations, r.iterations),
        ))
    }

    /// Left-to-right transmission `Tr[Gamma_R G Gamma_L G^dag]` with `G = G_{N,1}`.
    pub fn transmission(&self, energy: f64) -> Result<f64> {
        Ok(self.solve(energy)?.transmission)
    }

    /// Energy actually evaluated for a requested `energy`.
    pub fn evaluated_energy(&self, energy: f64) -> f64 {
        if energy.abs() < self.options.energy_floor {
            self.options.energy_floor
        } else {
            energy
        }
    }

    pub fn solve(&self, energy: f64) -> Result<TransmissionResult> {
        let energy = self.evaluated_energy(energy);
        let (sl, sr, its) = self.self_energies(energy)?;
        let n = self.blocks.len();
        let z = Complex64::new(energy, self.options.device_eta);
        let mut h = &self.blocks[0] + &sl;
        if n == 1 {
            h += &sr;
        }
        let mut g = resolvent(z, &h)?;
        let mut p = g.clone();
        for i in 1..n {
            let v = &self.couplings[i - 1];
            let vd = adjoint(v);
            let mut h = &self.blocks[i] + &vd.dot(&g).dot(v);
            if i == n - 1 {
                h += &sr;
            }
            g = resolvent(z, &h)?;
            p = g.dot(&vd).dot(&p);
        }
        let t = self.check(energy, trace_product(&gamma(&sr), &p, &gamma(&sl)))?;
        Ok(TransmissionResult { energy, transmission: t, lead_iterations: its })
    }

    /// Right-to-left transmission from a sweep that starts at the right lead.
    pub fn transmission_reverse(&self, energy: f64) -> Result<f64> {
        let energy = self.evaluated_energy(energy);
        let (sl, sr, _) = self.self_energies(energy)?;
        let n = self.blocks.len();
        let z = Complex64::new(energy, self.options.device_eta);
        let mut h = &self.blocks[n - 1] + &sr;
        if n == 1 {
            h += &sl;
        }
        let mut g = resolvent(z, &h)?;
        let mut q = g.clone();
        for i in (0..n - 1).rev() {
            let v = &self.couplings[i];
            let mut h = &self.blocks[i] + &v.dot(&g).dot(&adjoint(v));
            if i == 0 {
                h += &sl;
            }
            g = resolvent(z, &h)?;
            q = g.dot(v).dot(&q);
        }
        self.check(energy, trace_product(&gamma(&sl), &q, &gamma(&sr)))
    }

    /// No lead carries more channels than its end column has sites.
    fn check(&self, energy: f64, t: f64) -> Result<f64> {
        let bound = self.left_map.len().min(self.right_map.len()) as f64;
        if !t.is_finite() || t > bound + 1e-6 || t < -1e-6 {
            return Err(Error::Linalg(format!("transmission {t:e} at E = {energy} eV is outside [0, {bound}]")));
        }
        Ok(t)
    }
}

/// `Re Tr[A P B P^dag]`.
fn trace_product(a: &CMat, p: &CMat, b: &CMat) -> f64 {
    let left = a.dot(p);
    let right = b.dot(&adjoint(p));
    let mut t = Complex64::new(0.0, 0.0);
    for i in 0..left.nrows() {
        for k in 0..left.ncols() {
            t += left[[i, k]] * right[[k, i]];
        }
    }
    t.re
}

/// Pairs each site of a device end column with its copy in the lead cell.
fn match_column(
    column: &[&Site],
    lead: &LeadCell,
    lead_column: &[usize],
    shift: f64,
    side: &str,
) -> Result<Vec<usize>> {
    if column.len() != lead_column.len() {
        return Err(Error::Topology(format!(
            "{side} lead column has {} sites, device end column has {}",
            lead_column.len(),
            column.len()
        )));
    }
    let tol = 1e-6;
    column
        .iter()
        .map(|s| {
            lead_column
                .iter()
                .position(|&j| {
                    let l = &lead.sites[j];
                    (l.x + shift - s.x).abs() < tol && (l.y - s.y).abs() < tol
                })
                .ok_or_else(|| Error::Topology(format!("{side} lead does not match device site {}", s.id)))
        })
        .collect()
}
