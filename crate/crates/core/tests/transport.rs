use gnc_core::bands::ribbon_bands;
use gnc_core::lattice::{apply_edge_disorder, apply_peierls, apply_peierls_with_gauge, build_ribbon};
use gnc_core::transport::*;
use gnc_core::{DeviceLattice, DisorderSpec, EdgeType, Error, LatticeParams};
use ndarray_linalg::{EigValsh, UPLO};
use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn ribbon(edge: EdgeType, width: f64, length: f64) -> DeviceLattice {
    build_ribbon(LatticeParams::scaled(10.0), edge, width, length).unwrap()
}

fn solver(dev: &DeviceLattice) -> TransportSolver {
    TransportSolver::new(dev, GreenOptions::default()).unwrap()
}

fn min_eig(m: &ndarray::Array2<num_complex::Complex64>) -> f64 {
    let vals = m.eigvalsh(UPLO::Lower).unwrap();
    vals.iter().copied().fold(f64::INFINITY, f64::min)
}

#[test]
fn broadening_is_positive_semidefinite() {
    let dev = apply_peierls(&ribbon(EdgeType::Zigzag, 20.0, 10.0), 2.0);
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    let t = dev.params.t();
    for _ in 0..100 {
        let e = rng.random_range(-t..t);
        for (lead, side) in [(&dev.left_lead, LeadSide::Left), (&dev.right_lead, LeadSide::Right)] {
            let s = lead_self_energy(lead, side, e, &GreenOptions::default()).unwrap();
            assert!(min_eig(&s.gamma()) >= -1e-10, "E = {e}");
        }
    }
}

#[test]
fn no_broadening_inside_the_gap() {
    // semiconducting armchair: the band structure fixes the gap
    let dev = ribbon(EdgeType::Armchair, 10.0, 10.0);
    assert_ne!(dev.realized.lead_units % 3, 2);
    let bands = ribbon_bands(&dev, 201).unwrap();
    let gap_edge = bands
        .energies
        .iter()
        .map(|row| row.iter().copied().filter(|e| *e > 0.0).fold(f64::INFINITY, f64::min))
        .fold(f64::INFINITY, f64::min);
    assert!(gap_edge > 0.01, "expected a gap, got {gap_edge}");
    // The cut end of an armchair lead carries zero modes, so Gamma ~ eta / E^2
    // near E = 0; inside the gap it must vanish linearly with eta.
    let max_gamma = |e: f64, eta: f64| {
        let s = lead_self_energy(&dev.left_lead, LeadSide::Left, e, &GreenOptions::with_eta(eta)).unwrap();
        s.gamma().eigvalsh(UPLO::Lower).unwrap().iter().fold(0.0f64, |m, v| m.max(v.abs()))
    };
    for e in [0.3 * gap_edge, -0.6 * gap_edge, 0.9 * gap_edge] {
        let (g12, g10) = (max_gamma(e, 1e-12), max_gamma(e, 1e-10));
        assert!(g12 < 1e-8, "E = {e}: {g12}");
        assert!((g10 / g12 / 100.0 - 1.0).abs() < 0.01, "E = {e}: {g10} vs {g12}");
    }
    // above the gap edge a channel opens
    let s = lead_self_energy(&dev.left_lead, LeadSide::Left, 1.2 * gap_edge, &GreenOptions::with_eta(1e-12)).unwrap();
    let vals = s.gamma().eigvalsh(UPLO::Lower).unwrap();
    assert!(vals.iter().any(|v| *v > 1e-3));
}

#[test]
fn decimation_is_at_its_fixed_point() {
    let dev = ribbon(EdgeType::Armchair, 20.0, 10.0);
    for e in [0.013, 0.071, -0.12] {
        let base = lead_self_energy(&dev.right_lead, LeadSide::Right, e, &GreenOptions::default()).unwrap();
        let opts = GreenOptions { min_iterations: 2 * base.iterations, ..GreenOptions::default() };
        let more = lead_self_energy(&dev.right_lead, LeadSide::Right, e, &opts).unwrap();
        assert!(more.iterations >= 2 * base.iterations);
        let diff = (&more.sigma - &base.sigma).iter().fold(0.0f64, |m, z| m.max(z.norm()));
        assert!(diff < 1e-10, "E = {e}: {diff}");
    }
}

#[test]
fn decimation_reports_non_convergence() {
    let dev = ribbon(EdgeType::Armchair, 20.0, 10.0);
    let opts = GreenOptions { max_iterations: 2, ..GreenOptions::default() };
    match lead_self_energy(&dev.left_lead, LeadSide::Left, 0.05, &opts) {
        Err(Error::LeadNotConverged { energy, eta, iterations }) => {
            assert_eq!(energy, 0.05);
            assert_eq!(eta, 1e-6);
            assert_eq!(iterations, 2);
        }
        other => panic!("expected non-convergence, got {other:?}"),
    }
}

#[test]
fn clean_ribbons_transmit_the_mode_count() {
    let mut rng = ChaCha8Rng::seed_from_u64(11);
    for edge in [EdgeType::Armchair, EdgeType::Zigzag] {
        let dev = ribbon(edge, 25.0, 20.0);
        let bands = ribbon_bands(&dev, 801).unwrap();
        let s = solver(&dev);
        let mut checked = 0;
        while checked < 25 {
            let e = rng.random_range(-0.12..0.12);
            let mc = bands.count_propagating_modes(e);
            if mc.ambiguous.is_some() {
                continue;
            }
            let t = s.transmission(e).unwrap();
            assert!((t - mc.count as f64).abs() < 1e-6, "{edge:?} E = {e}: T = {t}, modes = {}", mc.count);
            checked += 1;
        }
    }
}

#[test]
fn reciprocity_forward_and_reverse_sweeps() {
    let dev = apply_edge_disorder(&ribbon(EdgeType::Armchair, 20.0, 30.0), &DisorderSpec::new(0.2, 3)).unwrap();
    for b in [0.0, 3.0] {
        let s = solver(&apply_peierls(&dev, b));
        for e in [0.02, 0.055, -0.08, 0.11] {
            let (f, r) = (s.transmission(e).unwrap(), s.transmission_reverse(e).unwrap());
            assert!((f - r).abs() < 1e-9, "B = {b}, E = {e}: {f} vs {r}");
        }
    }
}

#[test]
fn gauge_origin_does_not_matter() {
    let dev = apply_edge_disorder(&ribbon(EdgeType::Zigzag, 20.0, 30.0), &DisorderSpec::new(0.15, 8)).unwrap();
    let a = solver(&apply_peierls_with_gauge(&dev, 4.0, 0.0));
    let b = solver(&apply_peierls_with_gauge(&dev, 4.0, 13.7));
    for e in [0.01, 0.04, 0.09] {
        let (ta, tb) = (a.transmission(e).unwrap(), b.transmission(e).unwrap());
        assert!((ta - tb).abs() <= 1e-8 * ta.abs().max(1.0), "E = {e}: {ta} vs {tb}");
    }
}

#[test]
fn weak_field_is_continuous() {
    let dev = apply_edge_disorder(&ribbon(EdgeType::Armchair, 20.0, 30.0), &DisorderSpec::new(0.2, 5)).unwrap();
    let zero = solver(&dev);
    let weak = solver(&apply_peierls(&dev, 1e-4));
    for e in [0.03, 0.06, 0.1] {
        let d = (zero.transmission(e).unwrap() - weak.transmission(e).unwrap()).abs();
        assert!(d < 1e-3, "E = {e}: {d}");
    }
}

#[test]
fn particle_hole_symmetry() {
    let dev = apply_edge_disorder(&ribbon(EdgeType::Zigzag, 20.0, 30.0), &DisorderSpec::new(0.2, 1)).unwrap();
    for b in [0.0, 5.0] {
        let s = solver(&apply_peierls(&dev, b));
        for e in [0.017, 0.05, 0.083] {
            let (p, h) = (s.transmission(e).unwrap(), s.transmission(-e).unwrap());
            assert!((p - h).abs() < 1e-8, "B = {b}, E = {e}: {p} vs {h}");
        }
    }
}

#[test]
fn solver_rejects_bad_options() {
    let dev = ribbon(EdgeType::Armchair, 10.0, 10.0);
    let opts = GreenOptions { eta: 0.0, ..GreenOptions::default() };
    assert!(matches!(TransportSolver::new(&dev, opts), Err(Error::InvalidParameter(_))));
}

fn staircase_curve() -> TransmissionCurve {
    let energies: Vec<f64> = (0..=8000).map(|i| -0.03 + 1e-5 * i as f64).collect();
    let t = energies.iter().map(|e: &f64| (e.max(0.0) / 0.005).floor()).collect();
    TransmissionCurve::new(energies, t, "synthetic".into(), 0.0).unwrap()
}

#[test]
fn thermal_zero_temperature_limit() {
    let curve = staircase_curve();
    for e in [0.0025, 0.0071, 0.013] {
        let g = thermal_broadening(&curve, 1e-4, e).unwrap();
        assert!((g - curve.value_at(e).unwrap()).abs() < 1e-6);
    }
}

#[test]
fn thermal_kernel_is_normalized() {
    let energies: Vec<f64> = (0..=2000).map(|i| -0.01 + 1e-5 * i as f64).collect();
    let curve = TransmissionCurve::new(energies.clone(), vec![2.7; energies.len()], "c".into(), 0.0).unwrap();
    for temp in [0.5, 1.5, 4.2, 8.0] {
        let g = thermal_broadening(&curve, temp, 0.0).unwrap();
        assert!((g - 2.7).abs() < 1e-12, "T = {temp}: {g}");
    }
}

#[test]
fn thermal_plateaus_are_robust_and_risers_broaden() {
    let curve = staircase_curve();
    let mid = 0.0075; // middle of the second plateau
    let g42 = thermal_broadening(&curve, 4.2, mid).unwrap();
    let g12 = thermal_broadening(&curve, 12.0, mid).unwrap();
    assert!((g42 - 1.0).abs() < 0.02 && (g12 - 1.0).abs() < 0.02, "{g42} {g12}");
    // just past a riser the higher temperature pulls further from the plateau
    let riser = 0.0102;
    let d42 = (thermal_broadening(&curve, 4.2, riser).unwrap() - 2.0).abs();
    let d12 = (thermal_broadening(&curve, 12.0, riser).unwrap() - 2.0).abs();
    assert!(d12 > d42);
}

#[test]
fn thermal_errors() {
    let curve = staircase_curve();
    assert!(matches!(thermal_broadening(&curve, 4.2, 0.0495), Err(Error::WindowOutOfRange { .. })));
    let coarse: Vec<f64> = (0..=40).map(|i| -0.02 + 1e-3 * i as f64).collect();
    let c = TransmissionCurve::new(coarse.clone(), vec![1.0; coarse.len()], "c".into(), 0.0).unwrap();
    assert!(matches!(thermal_broadening(&c, 4.2, 0.0), Err(Error::GridTooCoarse { .. })));
}

#[test]
fn curve_interpolation_and_range() {
    let c = TransmissionCurve::new(vec![0.0, 1.0, 3.0], vec![0.0, 2.0, 3.0], "c".into(), 0.0).unwrap();
    assert_eq!(c.value_at(0.5).unwrap(), 1.0);
    assert_eq!(c.value_at(2.0).unwrap(), 2.5);
    assert_eq!(c.value_at(3.0).unwrap(), 3.0);
    assert!(c.value_at(3.5).is_err());
    assert!(TransmissionCurve::new(vec![0.0, 0.0], vec![1.0, 1.0], "c".into(), 0.0).is_err());
}

#[test]
fn metallic_ribbon_conducts_at_the_dirac_point() {
    // armchair ribbons with 3m + 2 dimer lines are metallic
    let dev = build_ribbon(LatticeParams::scaled(10.0), EdgeType::Armchair, 12.0, 20.0).unwrap();
    assert_eq!(dev.realized.lead_units % 3, 2);
    let sweep = GateSweep { gate_voltages: vec![2.0], alpha: 8e-6, dirac_point: 2.0, b_tesla: 0.0, temperature: 0.0 };
    let trace = conductance_vs_gate(&dev, &sweep, &GreenOptions::default()).unwrap();
    assert!((trace.conductance[0] - 1.0).abs() < 1e-6, "{:?}", trace.conductance);
    let bands = ribbon_bands(&dev, 401).unwrap();
    assert_eq!(bands.count_propagating_modes(0.0).count, 1);
}

#[test]
fn gate_trace_flags_points_outside_the_lattice_window() {
    let dev = ribbon(EdgeType::Zigzag, 10.0, 10.0);
    let model = GateModel::for_device(&dev, 8e-6, 0.0);
    // a gate far enough out to push |E_F| past t'/3
    let far = gnc_core::analysis::gate::fermi_energy_to_gate(1.2 * model.window_ev, model.hbar_vf_ev_nm, 8e-6, 0.0);
    let sweep =
        GateSweep { gate_voltages: vec![0.0, 1.0, far], alpha: 8e-6, dirac_point: 0.0, b_tesla: 0.0, temperature: 0.0 };
    let trace = conductance_vs_gate(&dev, &sweep, &GreenOptions::default()).unwrap();
    assert_eq!(trace.flagged, vec![false, false, true]);
    assert_eq!(trace.flagged_count(), 1);
}

#[test]
fn gate_grid_must_be_monotone() {
    let dev = ribbon(EdgeType::Zigzag, 10.0, 10.0);
    let sweep =
        GateSweep { gate_voltages: vec![0.0, 2.0, 1.0], alpha: 8e-6, dirac_point: 0.0, b_tesla: 0.0, temperature: 0.0 };
    assert!(conductance_vs_gate(&dev, &sweep, &GreenOptions::default()).is_err());
    let sweep =
        GateSweep { gate_voltages: vec![0.0, 1.0], alpha: -1.0, dirac_point: 0.0, b_tesla: 0.0, temperature: 0.0 };
    assert!(conductance_vs_gate(&dev, &sweep, &GreenOptions::default()).is_err());
}

#[test]
fn finite_temperature_trace_matches_direct_broadening() {
    let dev = ribbon(EdgeType::Zigzag, 15.0, 10.0);
    let s = solver(&dev);
    let model = GateModel::for_device(&dev, 8e-6, 0.0);
    let gates = [5.0, 20.0, 60.0];
    let trace = conductance_from_source(&s, &model, &gates, 4.2).unwrap();
    let kt = gnc_core::constants::K_B_EV_PER_K * 4.2;
    for (v, g) in gates.iter().zip(&trace.conductance) {
        let e = model.fermi_energy(*v);
        let curve = TransmissionCurve::uniform(&s, e - 11.0 * kt, e + 11.0 * kt, kt / 10.0).unwrap();
        let direct = thermal_broadening(&curve, 4.2, e).unwrap();
        assert!((g - direct).abs() < 2e-3, "V = {v}: {g} vs {direct}");
    }
}

#[test]
fn zero_bias_column_equals_linear_trace() {
    let dev = apply_edge_disorder(&ribbon(EdgeType::Armchair, 20.0, 30.0), &DisorderSpec::new(0.1, 2)).unwrap();
    let s = solver(&dev);
    let model = GateModel::for_device(&dev, 8e-6, 0.0);
    let gates: Vec<f64> = (0..12).map(|i| -30.0 + 6.0 * i as f64).collect();
    let biases = [-0.01, -0.004, 0.0, 0.004, 0.01];
    let linear = conductance_from_source(&s, &model, &gates, 0.0).unwrap();
    let exact = bias_map_from_source(&s, &model, &gates, &biases).unwrap();
    let j = exact.zero_bias_index().unwrap();
    for (a, b) in exact.column(j).iter().zip(&linear.conductance) {
        assert!((a - b).abs() <= 1e-9);
    }
    // the same through an interpolated curve
    let curve = curve_for_bias(&s, &model, &gates, &biases, 5e-4).unwrap();
    let lin_c = conductance_from_source(&curve, &model, &gates, 0.0).unwrap();
    let map_c = bias_map_from_source(&curve, &model, &gates, &biases).unwrap();
    for (a, b) in map_c.column(j).iter().zip(&lin_c.conductance) {
        assert!((a - b).abs() <= 1e-9);
    }
}

#[test]
fn split_model_gives_half_plateaus() {
    let curve = staircase_curve();
    let model = GateModel { alpha: 8e-6, dirac_point: 0.0, hbar_vf_ev_nm: 0.575, window_ev: 1.0 };
    // gate on the riser at E = 0.01 (between plateaus 1 and 2), bias above the spacing
    let v = gnc_core::analysis::gate::fermi_energy_to_gate(0.01, 0.575, 8e-6, 0.0);
    let map = bias_map_from_source(&curve, &model, &[v], &[0.0, 0.006]).unwrap();
    assert!((map.g_diff[0][1] - 1.5).abs() < 1e-12, "{:?}", map.g_diff);
}

#[test]
fn csv_exports_have_metadata_and_columns() {
    let curve = staircase_curve();
    let model = GateModel { alpha: 8e-6, dirac_point: 0.5, hbar_vf_ev_nm: 0.575, window_ev: 1.0 };
    let trace = conductance_from_source(&curve, &model, &[0.5, 1.0, 2.0], 0.0).unwrap();
    let mut buf = Vec::new();
    trace.write_csv(&mut buf).unwrap();
    let text = String::from_utf8(buf).unwrap();
    for key in [
        "# fingerprint: synthetic",
        "# B_T: 0",
        "# temperature_K: 0",
        "# alpha_F_per_m2: 0.000008",
        "# dirac_point_V: 0.5",
    ] {
        assert!(text.contains(key), "missing {key}\n{text}");
    }
    assert!(text.lines().any(|l| l == "Vg_V,G_2e2_over_h"));
    assert_eq!(text.lines().filter(|l| !l.starts_with('#')).count(), 4);

    let map = bias_map_from_source(&curve, &model, &[0.5, 1.0], &[0.0, 0.002]).unwrap();
    let mut buf = Vec::new();
    map.write_csv(&mut buf).unwrap();
    let text = String::from_utf8(buf).unwrap();
    assert!(text.lines().any(|l| l == "Vg_V,Vsd_V,Gdiff_2e2_over_h"));
    assert_eq!(text.lines().filter(|l| !l.starts_with('#')).count(), 5);
}

#[test]
fn results_do_not_depend_on_thread_count() {
    let dev = ribbon(EdgeType::Armchair, 15.0, 20.0);
    let s = solver(&dev);
    let energies: Vec<f64> = (0..16).map(|i| 0.007 * i as f64).collect();
    let one = rayon::ThreadPoolBuilder::new().num_threads(1).build().unwrap();
    let three = rayon::ThreadPoolBuilder::new().num_threads(3).build().unwrap();
    let a = one.install(|| s.transmissions(&energies).unwrap());
    let b = three.install(|| s.transmissions(&energies).unwrap());
    assert_eq!(a, b);
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(12))]

    #[test]
    fn transmission_respects_the_open_mode_count(
        width in 8.0f64..20.0,
        zigzag in any::<bool>(),
        p in 0.0f64..0.3,
        seed in 0u64..1000,
        e in -0.12f64..0.12,
    ) {
        let edge = if zigzag { EdgeType::Zigzag } else { EdgeType::Armchair };
        let clean = ribbon(edge, width, 20.0);
        let dev = match apply_edge_disorder(&clean, &DisorderSpec::new(p, seed)) {
            Ok(d) => d,
            Err(Error::Disconnected) => return Ok(()),
            Err(err) => panic!("{err}"),
        };
        let bands = ribbon_bands(&clean, 401).unwrap();
        let mc = bands.count_propagating_modes(e);
        let bound = mc.ambiguous.map(|(lo, hi)| lo.max(hi)).unwrap_or(mc.count) as f64;
        // in-gap leakage through device resonances is O(eta)
        let t = TransportSolver::new(&dev, GreenOptions::with_eta(1e-9)).unwrap().transmission(e).unwrap();
        prop_assert!(t >= -1e-10, "T = {}", t);
        prop_assert!(t <= bound + 1e-6, "T = {} > {}", t, bound);
    }
}
