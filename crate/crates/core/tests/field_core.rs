use cascade_core::cutoff::{ball_volume, Power, SpatialCutoff};
use cascade_core::generators::{abc, singular_swirl, taylor_green, zero, SwirlProfile};
use cascade_core::quadrature::integrate;
use cascade_core::spectral::{max_divergence, max_momentum_residual, solve_pressure, Spectral};
use cascade_core::{Grid3, TimeAxis};
use std::f64::consts::PI;

fn max_abs(v: &[f64]) -> f64 {
    v.iter().fold(0.0, |m, x| m.max(x.abs()))
}

fn max_speed_sq(u: &[f64]) -> f64 {
    u.chunks_exact(3).map(|v| v[0] * v[0] + v[1] * v[1] + v[2] * v[2]).fold(0.0, f64::max)
}

#[test]
fn grid_spacing_examples() {
    assert!((Grid3::new(8, 2.0 * PI).unwrap().spacing() - PI / 4.0).abs() < 1e-15);
    assert!((Grid3::new(64, 2.0 * PI).unwrap().spacing() - 0.09817477042468103).abs() < 1e-12);
    let err = Grid3::new(7, 2.0 * PI).unwrap_err();
    assert!(err.to_string().contains("too coarse"), "{err}");
}

#[test]
fn abc_is_divergence_free_and_steady_euler() {
    let g = Grid3::new(64, 2.0 * PI).unwrap();
    let f = abc(&g, 1.0, 1.0, 1.0, 1.0).unwrap();
    let umax = f.max_speed();
    assert!(max_divergence(&f) <= 1e-10 * umax);
    let res = max_momentum_residual(&f).unwrap();
    assert!(res <= 1e-6 * umax * umax, "residual {res}");
}

#[test]
fn abc_zero_amplitudes_give_zero_field() {
    let g = Grid3::new(8, 2.0 * PI).unwrap();
    let f = abc(&g, 0.0, 0.0, 0.0, 1.0).unwrap();
    assert!(f.velocity().iter().all(|v| *v == 0.0));
}

#[test]
fn recovered_abc_pressure_is_minus_half_speed_squared() {
    let g = Grid3::new(64, 2.0 * PI).unwrap();
    let f = abc(&g, 1.0, 0.7, 0.3, 1.0).unwrap();
    let solved = solve_pressure(&f.clone().without_pressure()).unwrap();
    let p = solved.pressure().unwrap();
    let mut exact: Vec<f64> = f.velocity().chunks_exact(3).map(|v| -0.5 * (v[0] * v[0] + v[1] * v[1] + v[2] * v[2])).collect();
    let mean = exact.iter().sum::<f64>() / exact.len() as f64;
    exact.iter_mut().for_each(|e| *e -= mean);
    let dev = p.iter().zip(&exact).fold(0.0f64, |m, (a, b)| m.max((a - b).abs()));
    assert!(dev <= 1e-8 * max_speed_sq(f.velocity()), "deviation {dev}");
}

#[test]
fn zero_field_has_zero_pressure() {
    let g = Grid3::new(16, 1.0).unwrap();
    let f = solve_pressure(&zero(&g, 1.0).unwrap().without_pressure()).unwrap();
    assert!(f.pressure().unwrap().iter().all(|p| *p == 0.0));
}

#[test]
fn pressure_solve_round_trips_through_the_laplacian() {
    let g = Grid3::new(32, 2.0 * PI).unwrap();
    let f = taylor_green(&g, 1.3, 1.0).unwrap();
    let ops = Spectral::new(&g);
    let p = ops.pressure(f.velocity());
    let lap = ops.laplacian(&p);
    let rhs = ops.double_divergence(f.velocity());
    let scale = max_abs(&rhs);
    let dev = lap.iter().zip(&rhs).fold(0.0f64, |m, (a, b)| m.max((a + b).abs()));
    assert!(dev <= 1e-8 * scale, "deviation {dev} against {scale}");
}

#[test]
fn taylor_green_divergence_and_mean_energy() {
    let g = Grid3::new(32, 2.0 * PI).unwrap();
    let amp = 1.7;
    let f = taylor_green(&g, amp, 1.0).unwrap();
    assert!(max_divergence(&f) <= 1e-10 * amp);
    // independent quadrature of ½|u|² over the box
    let n = 48;
    let h = 2.0 * PI / n as f64;
    let mut acc = 0.0;
    for k in 0..n {
        for j in 0..n {
            for i in 0..n {
                let (x, y, z) = (i as f64 * h, j as f64 * h, k as f64 * h);
                let ux = amp * x.sin() * y.cos() * z.cos();
                let uy = -amp * x.cos() * y.sin() * z.cos();
                acc += 0.5 * (ux * ux + uy * uy);
            }
        }
    }
    let oracle = acc / (n * n * n) as f64;
    assert!((oracle - amp * amp / 8.0).abs() < 1e-12);
    let mean = f.velocity().chunks_exact(3).map(|v| 0.5 * (v[0] * v[0] + v[1] * v[1] + v[2] * v[2])).sum::<f64>()
        / g.len() as f64;
    assert!((mean - amp * amp / 8.0).abs() < 1e-12, "mean energy {mean}");
    let z = taylor_green(&g, 0.0, 1.0).unwrap();
    assert!(z.velocity().iter().all(|v| *v == 0.0));
}

#[test]
fn swirl_is_tangential_to_every_cylinder() {
    let g = Grid3::with_origin(32, 2.0, [-1.0; 3]).unwrap();
    let f = singular_swirl(&g, 0.4, 0.0, 0.8, 1.0).unwrap();
    let grid = f.grid();
    for (idx, v) in f.velocity().chunks_exact(3).enumerate() {
        let x = grid.point_of(idx);
        let radial = x[0] * v[0] + x[1] * v[1];
        assert!(radial.abs() <= 1e-12 * (x[0].abs() + x[1].abs()) * v[0].abs().max(v[1].abs()));
        assert_eq!(v[2], 0.0);
    }
}

#[test]
fn swirl_closed_form_is_a_steady_euler_solution_off_axis() {
    // residual (u·∇)u + ∇p of the closed-form profile by fine central
    // differences around every node between the axis neighbourhood and the
    // cutoff annulus; the field is independent of z, so one plane suffices
    let n = 128;
    let g = Grid3::with_origin(n, 2.0, [-1.0; 3]).unwrap();
    let prof = SwirlProfile::new(0.4, 0.0, 0.8).unwrap();
    let f = singular_swirl(&g, 0.4, 0.0, 0.8, 1.0).unwrap();
    let grid = *f.grid();
    let h = grid.spacing();
    let mut worst: f64 = 0.0;
    for idx in 0..n * n {
        let x = grid.point_of(idx);
        let r = (x[0] * x[0] + x[1] * x[1]).sqrt();
        if r < 3.0 * h || r >= prof.r_taper() {
            continue;
        }
        let u = prof.velocity_at(x);
        let step = 1e-5 * r;
        let mut res = [0.0; 3];
        for a in 0..3 {
            let mut xp = x;
            let mut xm = x;
            xp[a] += step;
            xm[a] -= step;
            let (up, um) = (prof.velocity_at(xp), prof.velocity_at(xm));
            let dp = (prof.pressure_at(xp) - prof.pressure_at(xm)) / (2.0 * step);
            for c in 0..3 {
                res[c] += u[a] * (up[c] - um[c]) / (2.0 * step);
            }
            res[a] += dp;
        }
        let speed2 = u[0] * u[0] + u[1] * u[1];
        if speed2 == 0.0 {
            continue;
        }
        let rel = (res[0] * res[0] + res[1] * res[1] + res[2] * res[2]).sqrt() / (speed2 / r);
        worst = worst.max(rel);
    }
    assert!(worst <= 1e-4, "relative residual {worst}");
}

#[test]
fn swirl_rejects_alpha_outside_l3_range() {
    let g = Grid3::with_origin(16, 2.0, [-1.0; 3]).unwrap();
    let err = singular_swirl(&g, 0.7, 0.0, 0.8, 1.0).unwrap_err();
    assert!(err.to_string().contains("alpha"), "{err}");
    assert!(singular_swirl(&g, 0.4, 0.0, 1.0, 1.0).is_err());
}

#[test]
fn recovered_swirl_pressure_matches_the_radial_quadrature() {
    let n = 128;
    let g = Grid3::with_origin(n, 2.0, [-1.0; 3]).unwrap();
    let prof = SwirlProfile::new(0.4, 0.1, 0.8).unwrap();
    let f = singular_swirl(&g, 0.4, 0.1, 0.8, 1.0).unwrap();
    let solved = solve_pressure(&f.clone().without_pressure()).unwrap();
    let grid = *solved.grid();
    let p = solved.pressure().unwrap();
    // 1D oracle p(r) = -∫_r^{r_cut} f²/s ds, independent of the profile's own integration
    let oracle = |r: f64| {
        let m = 200_000;
        let ds = (prof.r_cut - r) / m as f64;
        -(0..m)
            .map(|i| {
                let s = r + (i as f64 + 0.5) * ds;
                let v = prof.speed(s);
                v * v / s
            })
            .sum::<f64>()
            * ds
    };
    // the spectral gauge differs by a constant: fix it at the cutoff radius
    let node_near = |r: f64| {
        let mut best = (f64::INFINITY, 0);
        for idx in 0..grid.len() {
            let x = grid.point_of(idx);
            if x[2].abs() > 0.5 * grid.spacing() + 1e-12 {
                continue;
            }
            let d = ((x[0] * x[0] + x[1] * x[1]).sqrt() - r).abs() + x[1].abs();
            if d < best.0 {
                best = (d, idx);
            }
        }
        let x = grid.point_of(best.1);
        ((x[0] * x[0] + x[1] * x[1]).sqrt(), best.1)
    };
    let (r_ref, i_ref) = node_near(0.9);
    let shift = p[i_ref] - oracle(r_ref.min(prof.r_cut));
    let scale = oracle(0.1).abs();
    for r in [0.15, 0.25, 0.4, 0.6, 0.75] {
        let (rr, idx) = node_near(r);
        let dev = (p[idx] - shift - oracle(rr)).abs();
        assert!(dev <= 1e-3 * scale, "r = {rr}: deviation {dev} against {scale}");
    }
}

#[test]
fn swirl_energy_quadrature_converges_under_refinement() {
    // ∫_{B(0,R0)} ½ f(r)² dx with f = r^{-α}, truncated to the ball, for a
    // slab of height 2R0 around the plane z = 0
    let r0: f64 = 0.5;
    let alpha = 0.4;
    let mut values = Vec::new();
    for n in [32, 64, 128] {
        let g = Grid3::with_origin(n, 2.0, [-1.0; 3]).unwrap();
        let f = singular_swirl(&g, alpha, 0.0, 0.8, 1.0).unwrap();
        let grid = *f.grid();
        let mut acc = 0.0;
        for (idx, v) in f.velocity().chunks_exact(3).enumerate() {
            let x = grid.point_of(idx);
            if x[0] * x[0] + x[1] * x[1] + x[2] * x[2] <= r0 * r0 {
                acc += 0.5 * (v[0] * v[0] + v[1] * v[1]);
            }
        }
        values.push(acc * grid.cell_volume());
    }
    // exact: ∫ over the ball of ½ r^{-2α} in cylindrical coordinates
    let exact = {
        let m = 4000;
        let dz = 2.0 * r0 / m as f64;
        (0..m)
            .map(|i| {
                let z = -r0 + (i as f64 + 0.5) * dz;
                let rho = (r0 * r0 - z * z).sqrt();
                PI * rho.powf(2.0 - 2.0 * alpha) / (2.0 - 2.0 * alpha)
            })
            .sum::<f64>()
            * dz
    };
    let errs: Vec<f64> = values.iter().map(|v| (v - exact).abs() / exact).collect();
    assert!(errs[2] < errs[0], "{errs:?}");
    assert!(errs[2] < 2e-2, "{errs:?}");
}

#[test]
fn unit_density_integrates_to_volume_times_duration() {
    let g = Grid3::new(8, 2.0).unwrap();
    let t = TimeAxis::steady(0.75).unwrap();
    let ones = vec![1.0; g.len()];
    let v = integrate(&g, &t, &ones, &ones).unwrap();
    assert!((v - 8.0 * 1.5).abs() < 1e-12);
    assert!(integrate(&g, &t, &ones, &ones[1..]).is_err());
}

#[test]
fn ball_cutoff_integral_is_bracketed_by_ball_volumes_and_converges() {
    let r = 0.3;
    let mut prev = f64::INFINITY;
    let mut values = Vec::new();
    for n in [32, 64, 128] {
        let g = Grid3::with_origin(n, 2.0, [-1.0; 3]).unwrap();
        let psi = SpatialCutoff::interior(&g, [0.05, -0.1, 0.02], r).unwrap();
        let ones = vec![1.0; g.len()];
        let v = psi.pair_scalar(&ones, Power::One).value;
        assert!(v > ball_volume(r) && v < ball_volume(2.0 * r), "n = {n}: {v}");
        values.push(v);
    }
    for w in values.windows(2).skip(1) {
        let d = (w[1] - w[0]).abs();
        assert!(d <= prev);
        prev = d;
    }
    assert!((values[2] - values[1]).abs() < 1e-3 * values[2]);
}
