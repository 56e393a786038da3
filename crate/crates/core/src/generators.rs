//! Closed-form velocity fields and nonnegative densities used as oracles.

use alloc::format;
use alloc::vec::Vec;

use rand_chacha::ChaCha8Rng;
use rand_core::{RngCore, SeedableRng};

use crate::error::{Error, Result};
use crate::field::{ScalarDensity, VectorField3};
use crate::grid::{Grid3, TimeAxis};
use crate::math::{abs, cos, exp_neg, integrate_gl, powf, sin, smoothstep, sqrt, TWO_PI};

#[inline]
fn sq(v: f64) -> f64 {
    v * v
}

fn require_native_period(grid: &Grid3) -> Result<()> {
    if abs(grid.box_length() - TWO_PI) > 1e-12 * TWO_PI {
        return Err(Error::WrongBoxLength(grid.box_length()));
    }
    Ok(())
}

/// Arnold-Beltrami-Childress flow with its exact steady pressure
/// `p = -|u|^2/2 + (A^2 + B^2 + C^2)/2` (zero spatial mean).
pub fn abc(grid: &Grid3, a: f64, b: f64, c: f64, t_half: f64) -> Result<VectorField3> {
    require_native_period(grid)?;
    let times = TimeAxis::steady(t_half)?;
    let mean = 0.5 * (a * a + b * b + c * c);
    let mut u = Vec::with_capacity(3 * grid.len());
    let mut p = Vec::with_capacity(grid.len());
    for idx in 0..grid.len() {
        let [x, y, z] = grid.point_of(idx);
        let v = [a * sin(z) + c * cos(y), b * sin(x) + a * cos(z), c * sin(y) + b * cos(x)];
        p.push(mean - 0.5 * (v[0] * v[0] + v[1] * v[1] + v[2] * v[2]));
        u.extend_from_slice(&v);
    }
    VectorField3::new(*grid, times, u, Some(p))
}

/// Taylor-Green velocity snapshot `A (sin x cos y cos z, -cos x sin y cos z, 0)`.
/// No pressure is attached; it is not an Euler solution.
pub fn taylor_green(grid: &Grid3, amplitude: f64, t_half: f64) -> Result<VectorField3> {
    require_native_period(grid)?;
    let times = TimeAxis::steady(t_half)?;
    let mut u = Vec::with_capacity(3 * grid.len());
    for idx in 0..grid.len() {
        let [x, y, z] = grid.point_of(idx);
        u.extend_from_slice(&[
            amplitude * sin(x) * cos(y) * cos(z),
            -amplitude * cos(x) * sin(y) * cos(z),
            0.0,
        ]);
    }
    VectorField3::new(*grid, times, u, None)
}

pub fn zero(grid: &Grid3, t_half: f64) -> Result<VectorField3> {
    Ok(VectorField3::zeros(*grid, TimeAxis::steady(t_half)?))
}

/// Radial profile of the azimuthal swirl `u = f(r) e_theta` about the vertical
/// axis through the world origin.
///
/// `f(r) = r^-alpha` on `[r_core, r_taper]`, a C¹ odd cubic inside `r_core`,
/// and a quintic taper to zero on `[r_taper, r_cut]`. The pressure solves
/// `p'(r) = f(r)^2 / r` with `p(r_cut) = 0`, so the field is an exact steady
/// Euler solution away from the axis.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SwirlProfile {
    pub alpha: f64,
    pub r_core: f64,
    pub r_cut: f64,
    r_taper: f64,
    core_a: f64,
    core_b: f64,
    taper_integral: f64,
}

impl SwirlProfile {
    pub fn new(alpha: f64, r_core: f64, r_cut: f64) -> Result<Self> {
        if !(alpha > 0.0 && alpha < 2.0 / 3.0) {
            return Err(Error::AlphaOutOfRange(alpha));
        }
        if !(r_core >= 0.0 && r_core < r_cut) {
            return Err(Error::InvalidParameter(format!("need 0 <= r_core < r_cut, got {r_core}, {r_cut}")));
        }
        let r_taper = r_core + 0.75 * (r_cut - r_core);
        let (core_a, core_b) = if r_core > 0.0 {
            let f = powf(r_core, -alpha);
            (0.5 * (3.0 + alpha) * f / r_core, -0.5 * (1.0 + alpha) * f / (r_core * r_core * r_core))
        } else {
            (0.0, 0.0)
        };
        let mut profile = SwirlProfile { alpha, r_core, r_cut, r_taper, core_a, core_b, taper_integral: 0.0 };
        profile.taper_integral = profile.taper_pressure_integral(r_taper);
        Ok(profile)
    }

    pub fn r_taper(&self) -> f64 {
        self.r_taper
    }

    pub fn speed(&self, r: f64) -> f64 {
        if r >= self.r_cut {
            0.0
        } else if r < self.r_core {
            r * (self.core_a + self.core_b * r * r)
        } else if r <= self.r_taper {
            powf(r, -self.alpha)
        } else {
            powf(r, -self.alpha) * (1.0 - smoothstep((r - self.r_taper) / (self.r_cut - self.r_taper)))
        }
    }

    fn taper_pressure_integral(&self, r: f64) -> f64 {
        let g = |s: f64| {
            let f = self.speed(s);
            f * f / s
        };
        integrate_gl(g, r, self.r_cut, 8, 16)
    }

    /// `p(r) = -∫_r^{r_cut} f(s)^2 / s ds`.
    pub fn pressure(&self, r: f64) -> f64 {
        if r >= self.r_cut {
            return 0.0;
        }
        if r >= self.r_taper {
            return -self.taper_pressure_integral(r);
        }
        let two_a = 2.0 * self.alpha;
        let power = |lo: f64| (powf(lo, -two_a) - powf(self.r_taper, -two_a)) / two_a;
        if r >= self.r_core {
            return -(power(r) + self.taper_integral);
        }
        let (a, b, rc) = (self.core_a, self.core_b, self.r_core);
        let core = a * a * (rc * rc - r * r) / 2.0
            + a * b * (powf(rc, 4.0) - powf(r, 4.0)) / 2.0
            + b * b * (powf(rc, 6.0) - powf(r, 6.0)) / 6.0;
        -(core + power(rc) + self.taper_integral)
    }

    pub fn velocity_at(&self, x: [f64; 3]) -> [f64; 3] {
        let r = sqrt(x[0] * x[0] + x[1] * x[1]);
        if r == 0.0 {
            return [0.0; 3];
        }
        let f = self.speed(r) / r;
        [-x[1] * f, x[0] * f, 0.0]
    }

    pub fn pressure_at(&self, x: [f64; 3]) -> f64 {
        self.pressure(sqrt(x[0] * x[0] + x[1] * x[1]))
    }
}

/// Minimum-image offset of `x` from the plane coordinate 0 in a periodic box.
fn wrap(x: f64, box_length: f64) -> f64 {
    x - box_length * crate::math::round(x / box_length)
}

/// Singular swirl about the vertical axis through the world origin. If a
/// node column would sit on the axis, the returned field lives on the grid
/// shifted by half a cell in `x` and `y`.
pub fn singular_swirl(grid: &Grid3, alpha: f64, r_core: f64, r_cut: f64, t_half: f64) -> Result<VectorField3> {
    let profile = SwirlProfile::new(alpha, r_core, r_cut)?;
    if r_cut >= 0.5 * grid.box_length() {
        return Err(Error::InvalidParameter(format!(
            "r_cut = {r_cut} must be below half the box length {}",
            0.5 * grid.box_length()
        )));
    }
    let h = grid.spacing();
    let on_node = |axis: usize| {
        let s = -grid.origin()[axis] / h;
        abs(s - crate::math::round(s)) < 1e-9
    };
    let grid = if on_node(0) && on_node(1) { grid.half_offset_xy() } else { *grid };
    let times = TimeAxis::steady(t_half)?;
    let l = grid.box_length();
    // the field does not depend on z: evaluate one plane and repeat it
    let plane = grid.n() * grid.n();
    let mut u = Vec::with_capacity(3 * grid.len());
    let mut p = Vec::with_capacity(grid.len());
    for idx in 0..plane {
        let [x, y, _] = grid.point_of(idx);
        let q = [wrap(x, l), wrap(y, l), 0.0];
        u.extend_from_slice(&profile.velocity_at(q));
        p.push(profile.pressure_at(q));
    }
    for _ in 1..grid.n() {
        u.extend_from_within(..3 * plane);
        p.extend_from_within(..plane);
    }
    VectorField3::new(grid, times, u, Some(p))
}

pub(crate) fn unit(rng: &mut ChaCha8Rng) -> f64 {
    (rng.next_u64() >> 11) as f64 * (1.0 / (1u64 << 53) as f64)
}

/// Random smooth nonnegative density: a sum of Gaussian blobs centred in
/// `B(0, region)`, each amplitude modulated in time (still nonnegative) on
/// unsteady axes.
pub fn gaussian_blobs(grid: &Grid3, times: TimeAxis, n_blobs: usize, region: f64, seed: u64) -> Result<ScalarDensity> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    struct Blob {
        c: [f64; 3],
        inv_two_var: f64,
        amp: f64,
        omega: f64,
        phase: f64,
    }
    let blobs: Vec<Blob> = (0..n_blobs)
        .map(|_| {
            let c = loop {
                let p = [2.0 * unit(&mut rng) - 1.0, 2.0 * unit(&mut rng) - 1.0, 2.0 * unit(&mut rng) - 1.0];
                if p[0] * p[0] + p[1] * p[1] + p[2] * p[2] <= 1.0 {
                    break [p[0] * region, p[1] * region, p[2] * region];
                }
            };
            let sigma = region * (0.08 + 0.3 * unit(&mut rng));
            Blob {
                c,
                inv_two_var: 1.0 / (2.0 * sigma * sigma),
                amp: 0.2 + unit(&mut rng),
                omega: TWO_PI * unit(&mut rng) / times.t_end(),
                phase: TWO_PI * unit(&mut rng),
            }
        })
        .collect();
    let mut d = Vec::with_capacity(grid.len() * times.n_samples());
    for k in 0..times.n_samples() {
        let t = times.time(k);
        let amps: Vec<f64> = blobs
            .iter()
            .map(|b| if times.is_steady() { b.amp } else { b.amp * (1.0 + 0.5 * sin(b.omega * t + b.phase)) })
            .collect();
        for idx in 0..grid.len() {
            let x = grid.point_of(idx);
            let mut v = 0.0;
            for (b, a) in blobs.iter().zip(&amps) {
                let r2 = sq(x[0] - b.c[0]) + sq(x[1] - b.c[1]) + sq(x[2] - b.c[2]);
                v += a * exp_neg(r2 * b.inv_two_var);
            }
            d.push(v);
        }
    }
    ScalarDensity::new(*grid, times, d)
}

/// Compact bump `amplitude (1 - |x - c|^2 / rho^2)^3` supported in `B(c, rho)`.
pub fn ball_bump(grid: &Grid3, times: TimeAxis, center: [f64; 3], rho: f64, amplitude: f64) -> Result<ScalarDensity> {
    let mut d = Vec::with_capacity(grid.len() * times.n_samples());
    for _ in 0..times.n_samples() {
        for idx in 0..grid.len() {
            let x = grid.point_of(idx);
            let r2 = sq(x[0] - center[0]) + sq(x[1] - center[1]) + sq(x[2] - center[2]);
            let s = 1.0 - r2 / (rho * rho);
            d.push(if s > 0.0 { amplitude * s * s * s } else { 0.0 });
        }
    }
    ScalarDensity::new(*grid, times, d)
}

/// Mollified line density `amplitude (1 - r^2 / rho^2)^3` concentrated on the
/// vertical axis through the world origin (`r` = distance to the axis).
pub fn axis_tube(grid: &Grid3, times: TimeAxis, rho: f64, amplitude: f64) -> Result<ScalarDensity> {
    let l = grid.box_length();
    let mut d = Vec::with_capacity(grid.len() * times.n_samples());
    for _ in 0..times.n_samples() {
        for idx in 0..grid.len() {
            let x = grid.point_of(idx);
            let (dx, dy) = (wrap(x[0], l), wrap(x[1], l));
            let s = 1.0 - (dx * dx + dy * dy) / (rho * rho);
            d.push(if s > 0.0 { amplitude * s * s * s } else { 0.0 });
        }
    }
    ScalarDensity::new(*grid, times, d)
}

/// Constant density.
pub fn uniform_density(grid: &Grid3, times: TimeAxis, value: f64) -> Result<ScalarDensity> {
    ScalarDensity::new(*grid, times, alloc::vec![value; grid.len() * times.n_samples()])
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::math::PI;

    #[test]
    fn abc_zero_amplitude_is_zero() {
        let g = Grid3::new(8, 2.0 * PI).unwrap();
        let f = abc(&g, 0.0, 0.0, 0.0, 1.0).unwrap();
        assert!(f.velocity().iter().all(|v| *v == 0.0));
        assert!(f.pressure().unwrap().iter().all(|v| *v == 0.0));
    }

    #[test]
    fn generators_check_box_length() {
        let g = Grid3::new(8, 1.0).unwrap();
        assert_eq!(abc(&g, 1.0, 1.0, 1.0, 1.0).unwrap_err(), Error::WrongBoxLength(1.0));
        assert!(taylor_green(&g, 1.0, 1.0).is_err());
    }

    #[test]
    fn swirl_rejects_alpha_outside_l3_range() {
        let g = Grid3::new(16, 2.0 * PI).unwrap();
        assert_eq!(singular_swirl(&g, 0.7, 0.0, 2.0, 1.0).unwrap_err(), Error::AlphaOutOfRange(0.7));
        assert!(singular_swirl(&g, 0.4, 0.0, 3.5, 1.0).is_err());
    }

    #[test]
    fn swirl_profile_is_continuous_and_pressure_matches_quadrature() {
        let prof = SwirlProfile::new(0.4, 0.1, 2.0).unwrap();
        for &r in &[prof.r_core, prof.r_taper()] {
            assert!((prof.speed(r - 1e-12) - prof.speed(r + 1e-12)).abs() < 1e-9);
            assert!((prof.pressure(r - 1e-12) - prof.pressure(r + 1e-12)).abs() < 1e-9);
        }
        // p(r) = -∫_r^{r_cut} f^2/s ds by brute-force midpoint quadrature
        for &r in &[0.05, 0.3, 1.0, 1.7] {
            let m = 400_000;
            let w = (prof.r_cut - r) / m as f64;
            let q: f64 = (0..m)
                .map(|i| {
                    let s = r + (i as f64 + 0.5) * w;
                    prof.speed(s).powi(2) / s
                })
                .sum::<f64>()
                * w;
            assert!((prof.pressure(r) + q).abs() < 1e-8 * q.abs().max(1.0), "r = {r}");
        }
    }

    #[test]
    fn swirl_grid_avoids_axis() {
        let g = Grid3::new(16, 2.0 * PI).unwrap();
        let f = singular_swirl(&g, 0.4, 0.0, 2.5, 1.0).unwrap();
        assert!(f.velocity().iter().all(|v| v.is_finite()));
        assert_ne!(f.grid().origin(), g.origin());
    }
}
