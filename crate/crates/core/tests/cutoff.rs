use cascade_core::cover::{generate_cover, CoverParams, ProbeSet};
use cascade_core::cutoff::{points_inward, CutoffShape, SpatialCutoff, TemporalCutoff};
use cascade_core::ensemble::{cover_cutoffs, partition_check};
use cascade_core::{CutoffFunction, Grid3};
use proptest::prelude::*;

fn unit_box(n: usize, half: f64) -> Grid3 {
    Grid3::with_origin(n, 2.0 * half, [-half; 3]).unwrap()
}

#[test]
fn eta_edges_and_plateau() {
    let e = TemporalCutoff::new(1.0, 0.5).unwrap();
    assert_eq!(e.power(), 3);
    assert_eq!(e.eta(0.5), 1.0);
    assert_eq!((e.eta(0.0), e.eta_dot(0.0)), (0.0, 0.0));
    assert_eq!((e.eta(2.0), e.eta_dot(2.0)), (0.0, 0.0));
    for t in [0.25, 0.6, 1.0, 1.25] {
        assert_eq!(e.eta(t), 1.0);
        assert_eq!(e.eta_dot(t), 0.0);
    }
}

#[test]
fn certified_c0_bounds_an_independent_dense_sampling() {
    for (t_half, delta, m) in [(1.0, 2.0 / 3.0, 4), (0.3, 0.5, 3), (2.5, 0.9, 11)] {
        let e = TemporalCutoff::new(t_half, delta).unwrap();
        assert_eq!(e.power(), m);
        // offset midpoints, disjoint from the construction's own sample set
        let n = 100_000;
        let mut sup: f64 = 0.0;
        for i in 0..n {
            let t = 2.0 * t_half * (i as f64 + 0.37) / n as f64;
            let eta = e.eta(t);
            if eta > 0.0 {
                sup = sup.max(e.eta_dot(t).abs() / eta.powf(delta));
            } else {
                assert_eq!(e.eta_dot(t), 0.0);
            }
        }
        assert!(sup * t_half <= e.c0(), "delta {delta}: {} > {}", sup * t_half, e.c0());
    }
}

#[test]
fn interior_cutoff_center_and_support() {
    let g = unit_box(64, 1.0);
    let r = 0.2;
    let shape = CutoffShape::interior([0.1, 0.0, -0.05], r);
    assert_eq!(shape.eval(&[0.1, 0.0, -0.05]).0, 1.0);
    let h = g.spacing();
    assert_eq!(shape.eval(&[0.1 + 2.0 * r + h, 0.0, -0.05]).0, 0.0);
    let psi = SpatialCutoff::interior(&g, shape.center, r).unwrap();
    assert!(points_inward(&psi, 0.0));
    assert!(psi.psi_samples().iter().all(|p| (0.0..=1.0).contains(p)));
}

#[test]
fn boundary_cutoff_center_cone_patch_and_bounds() {
    let r0 = 1.0;
    let x0 = [0.5, 0.3, -0.4];
    let shape = CutoffShape::boundary(x0, 0.5, r0).unwrap();
    assert_eq!(shape.eval(&x0).0, 1.0);
    let norm = (x0[0] * x0[0] + x0[1] * x0[1] + x0[2] * x0[2]).sqrt();
    let on_ray = x0.map(|v| 1.5 * r0 * v / norm);
    let psi0 = CutoffShape::integral(r0);
    assert!((shape.eval(&on_ray).0 - psi0.eval(&on_ray).0).abs() < 1e-15);

    let g = unit_box(64, 2.2);
    let psi = SpatialCutoff::boundary(&g, x0, 0.5, r0).unwrap();
    for l in 0..psi.len() {
        let x = psi.point(l);
        let p = psi.psi_samples()[l];
        let base = psi0.eval(&x).0;
        assert!(p >= 0.0 && p <= base + 1e-15, "psi {p} > psi0 {base} at {x:?}");
    }
    assert!(points_inward(&psi, 1e-12));
}

#[test]
fn assembled_cutoff_plateau_and_time_derivative_bound() {
    let g = unit_box(48, 1.0);
    let eta = TemporalCutoff::new(1.0, 0.5).unwrap();
    let psi = SpatialCutoff::interior(&g, [0.0; 3], 0.3).unwrap();
    let phi = CutoffFunction::assemble(eta, psi);
    for l in 0..phi.spatial.len() {
        let x = phi.spatial.point(l);
        if x.iter().map(|v| v * v).sum::<f64>() <= 0.09 {
            for t in [0.25, 0.7, 1.25] {
                assert_eq!(phi.phi(t, l), 1.0);
                assert_eq!(phi.phi_t(t, l), 0.0);
                assert_eq!(phi.grad_phi(t, l), [0.0; 3]);
            }
        }
    }
    let times: Vec<f64> = (1..200).map(|i| 2.0 * i as f64 / 200.0).collect();
    assert!(phi.time_bound_excess(&times) <= 0.0);

    let psi0 = SpatialCutoff::integral(&g, 0.45).unwrap();
    let phi0 = CutoffFunction::assemble(eta, psi0);
    for l in 0..phi0.spatial.len() {
        let x = phi0.spatial.point(l);
        if x.iter().map(|v| v * v).sum::<f64>() <= 0.45 * 0.45 {
            assert_eq!(phi0.phi(0.5, l), 1.0);
        }
    }
}

#[test]
fn cover_cutoffs_dominate_and_respect_the_overlap_count() {
    let probes = ProbeSet::new(1.0, 100_000, 3).unwrap();
    let g = unit_box(48, 2.2);
    let psi0 = SpatialCutoff::sample(&g, CutoffShape::integral(1.0), 0.0).unwrap();
    for (r, seed) in [(0.5, 1), (0.25, 2)] {
        let params = CoverParams { r, jitter: 0.05, seed, ..CoverParams::new(1.0, r) };
        let cover = generate_cover(&params, &probes).unwrap();
        let cutoffs = cover_cutoffs(&g, &cover, 0.0).unwrap();
        let check = partition_check(&cutoffs, &psi0, 0.5, cover.k2());
        assert!(check.holds(cover.k2()), "R = {r}: {check:?}");
    }
}

proptest! {
    #![proptest_config(ProptestConfig { cases: 24, failure_persistence: None, ..ProptestConfig::default() })]

    #[test]
    fn interior_cutoffs_point_inward_and_stay_in_unit_range(
        cx in -0.2f64..0.2, cy in -0.2f64..0.2, cz in -0.2f64..0.2, r in 0.13f64..0.25,
    ) {
        let g = unit_box(64, 1.0);
        let psi = SpatialCutoff::interior(&g, [cx, cy, cz], r).unwrap();
        prop_assert!(points_inward(&psi, 0.0));
        prop_assert!(psi.psi_samples().iter().all(|p| (0.0..=1.0).contains(p)));
    }

    #[test]
    fn boundary_cutoffs_stay_below_psi0(
        theta in 0.0f64..std::f64::consts::PI, phi in 0.0f64..6.28, rho in 0.6f64..1.0, r in 0.2f64..0.5,
    ) {
        let x0 = [rho * theta.sin() * phi.cos(), rho * theta.sin() * phi.sin(), rho * theta.cos()];
        prop_assume!(rho + r > 1.0);
        let shape = CutoffShape::boundary(x0, r, 1.0).unwrap();
        let base = CutoffShape::integral(1.0);
        for i in 0..400 {
            let s = i as f64 / 400.0;
            let x = [2.2 * (s * 7.3).sin() * s, 2.2 * (s * 5.1).cos() * s, 2.2 * (s * 3.7).sin() * (1.0 - s)];
            let (p, g) = shape.eval(&x);
            prop_assert!(p >= 0.0 && p <= base.eval(&x).0 + 1e-15);
            let to_center = [x0[0] - x[0], x0[1] - x[1], x0[2] - x[2]];
            let d = g[0] * to_center[0] + g[1] * to_center[1] + g[2] * to_center[2];
            prop_assert!(d >= -1e-12);
        }
    }
}
