use super::{DeviceLattice, Hopping, LeadCell, Site};
use crate::constants::{magnetic_length_nm, E_OVER_HBAR_PER_T_NM2};
use num_complex::Complex64;

/// Peierls phase of `<i|H|j>` for hopping from `from` to `to` in the Landau
/// gauge `A = (-B (y - y0), 0)`, integrated along the straight bond.
pub fn peierls_phase(b_tesla: f64, gauge_y0: f64, from: (f64, f64), to: (f64, f64)) -> f64 {
    let y_mid = 0.5 * (from.1 + to.1) - gauge_y0;
    -E_OVER_HBAR_PER_T_NM2 * b_tesla * y_mid * (to.0 - from.0)
}

/// Perpendicular field through Peierls phases, gauge origin at y = 0.
pub fn apply_peierls(lattice: &DeviceLattice, b_tesla: f64) -> DeviceLattice {
    apply_peierls_with_gauge(lattice, b_tesla, 0.0)
}

/// Same as [`apply_peierls`] with the Landau gauge centred at `gauge_y0` (nm).
///
/// The gauge depends only on y, so the leads keep their translation symmetry.
pub fn apply_peierls_with_gauge(lattice: &DeviceLattice, b_tesla: f64, gauge_y0: f64) -> DeviceLattice {
    let mut out = lattice.clone();
    if b_tesla == 0.0 {
        return out;
    }
    rotate(&mut out.hoppings, &lattice.sites, &lattice.sites, 0.0, b_tesla, gauge_y0);
    for lead in [&mut out.left_lead, &mut out.right_lead] {
        let LeadCell { sites, intra, inter, period_nm, .. } = lead;
        rotate(intra, sites, sites, 0.0, b_tesla, gauge_y0);
        rotate(inter, sites, sites, *period_nm, b_tesla, gauge_y0);
    }
    out.field_tesla += b_tesla;

    let l_b = magnetic_length_nm(out.field_tesla);
    let limit = 4.0 * out.params.a();
    if out.field_tesla != 0.0 && l_b <= limit {
        let msg = format!(
            "magnetic length {l_b:.2} nm at B = {} T is below 4 a' = {limit:.2} nm; lattice artifacts expected",
            out.field_tesla
        );
        log::warn!("{msg}");
        out.warnings.push(msg);
    }
    out
}

fn rotate(hoppings: &mut [Hopping], rows: &[Site], cols: &[Site], shift_j: f64, b: f64, y0: f64) {
    for h in hoppings.iter_mut() {
        let to = (rows[h.i].x, rows[h.i].y);
        let from = (cols[h.j].x + shift_j, cols[h.j].y);
        let phi = peierls_phase(b, y0, from, to);
        h.amplitude *= Complex64::from_polar(1.0, phi);
    }
}
