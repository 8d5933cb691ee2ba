use super::DeviceLattice;

/// Sets every onsite energy to `profile(x, y)` (nm in, eV out).
///
/// The leads take the values of the outermost slices they are copies of, so
/// lead cells and the slices they attach to stay identical.
pub fn apply_onsite_potential<F>(lattice: &DeviceLattice, profile: F) -> DeviceLattice
where
    F: Fn(f64, f64) -> f64,
{
    let mut out = lattice.clone();
    for (e, s) in out.onsite.iter_mut().zip(&lattice.sites) {
        *e = profile(s.x, s.y);
    }
    let period = lattice.realized.period_nm;
    for (lead, shift) in [(&mut out.left_lead, period), (&mut out.right_lead, -period)] {
        for (e, s) in lead.onsite.iter_mut().zip(&lead.sites) {
            *e = profile(s.x + shift, s.y);
        }
    }
    out
}

/// Smooth saddle: a Gaussian barrier of `height` eV centred on the
/// constriction, rising towards both edges with transverse curvature set by
/// `lateral_height` at the device edges.
pub fn saddle_potential(
    lattice: &DeviceLattice,
    height: f64,
    lateral_height: f64,
    length_nm: f64,
) -> impl Fn(f64, f64) -> f64 {
    let xs = lattice.sites.iter().map(|s| s.x);
    let ys = lattice.sites.iter().map(|s| s.y);
    let (x_lo, x_hi) = xs.fold((f64::MAX, f64::MIN), |(lo, hi), v| (lo.min(v), hi.max(v)));
    let (y_lo, y_hi) = ys.fold((f64::MAX, f64::MIN), |(lo, hi), v| (lo.min(v), hi.max(v)));
    let (xc, yc) = (0.5 * (x_lo + x_hi), 0.5 * (y_lo + y_hi));
    let half_width = 0.5 * (y_hi - y_lo).max(1e-9);
    move |x, y| {
        let along = (-((x - xc) / length_nm).powi(2)).exp();
        let across = ((y - yc) / half_width).powi(2);
        along * (height + lateral_height * across)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::lattice::{build_ribbon, EdgeType, LatticeParams};

    #[test]
    fn zero_profile_is_identity() {
        let dev = build_ribbon(LatticeParams::scaled(10.0), EdgeType::Zigzag, 10.0, 10.0).unwrap();
        let out = apply_onsite_potential(&dev, |_, _| 0.0);
        assert_eq!(dev, out);
    }

    #[test]
    fn uniform_shift_reaches_leads() {
        let dev = build_ribbon(LatticeParams::scaled(10.0), EdgeType::Zigzag, 10.0, 10.0).unwrap();
        let out = apply_onsite_potential(&dev, |_, _| 0.02);
        assert!(out.onsite.iter().all(|&e| e == 0.02));
        assert!(out.left_lead.onsite.iter().all(|&e| e == 0.02));
        assert!(out.right_lead.onsite.iter().all(|&e| e == 0.02));
    }

    #[test]
    fn lead_matches_outer_slice_for_varying_profile() {
        let dev = build_ribbon(LatticeParams::scaled(10.0), EdgeType::Armchair, 10.0, 20.0).unwrap();
        let out = apply_onsite_potential(&dev, |x, y| 1e-3 * x + 2e-3 * y);
        let k = out.realized.columns_per_period;
        let slice: Vec<f64> = out.sites.iter().filter(|s| s.column < k).map(|s| out.onsite[s.id]).collect();
        assert_eq!(slice, out.left_lead.onsite);
    }
}
