//! Test functions `phi(t, x) = eta(t) psi(x)`.
//!
//! `eta` is a power of a C² ramp supported in `(0, 2T)` and equal to one on
//! `[T/4, 5T/4]`; its constant `C0` is measured and certified. `psi` comes in
//! three kinds: the integral cutoff `psi0` about the origin, the radial
//! interior cutoff of a ball `B(x0, R)`, and the boundary-cone cutoff for
//! balls protruding from `B(0, R0)`.

use alloc::format;
use alloc::vec::Vec;

use crate::error::{Error, Result};
use crate::grid::{Grid3, TimeAxis};
use crate::math::{
    abs, ceil, dot, gauss_legendre, integrate_gl, norm, powf, powi, profile, profile_d1,
    profile_d2, scale, smoothstep, smoothstep_d1, sub,
};
use crate::reduce::tree_sum;
use crate::Vec3;

/// Number of samples used to measure `sup |eta'| / eta^delta`.
pub const C0_SAMPLES: usize = 100_000;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TemporalCutoff {
    t_half: f64,
    delta: f64,
    c0: f64,
    m: u32,
    int_eta: f64,
    int_eta_delta: f64,
}

impl TemporalCutoff {
    /// Builds `eta = chi^m` with `m = ceil(1/(1-delta)) + 1` and certifies `C0`
    /// as `1.1 T sup |eta'|/eta^delta` over [`C0_SAMPLES`] points.
    pub fn new(t_half: f64, delta: f64) -> Result<Self> {
        if !(t_half > 0.0 && t_half.is_finite()) {
            return Err(Error::InvalidParameter(format!("T must be positive, got {t_half}")));
        }
        if !(delta > 0.0 && delta < 1.0) {
            return Err(Error::InvalidParameter(format!("delta must lie in (0, 1), got {delta}")));
        }
        let m = ceil(1.0 / (1.0 - delta) - 1e-9) as u32 + 1;
        let mut eta = TemporalCutoff { t_half, delta, c0: 0.0, m, int_eta: 0.0, int_eta_delta: 0.0 };
        let two_t = 2.0 * t_half;
        let mut sup: f64 = 0.0;
        for i in 1..C0_SAMPLES {
            let t = two_t * i as f64 / C0_SAMPLES as f64;
            let e = eta.eta(t);
            if e > 0.0 {
                sup = sup.max(abs(eta.eta_dot(t)) / powf(e, delta));
            }
        }
        eta.c0 = 1.1 * t_half * sup;
        // ramps occupy T/4 + 3T/4 = T in total; S^m is a polynomial of degree 5m
        let (x, w) = gauss_legendre((5 * m as usize) / 2 + 2);
        let ramp_eta: f64 = x.iter().zip(&w).map(|(x, w)| 0.5 * w * powi(smoothstep(0.5 * (x + 1.0)), m)).sum();
        let ramp_delta = integrate_gl(|s| powf(smoothstep(s), m as f64 * delta), 0.0, 1.0, 64, 16);
        eta.int_eta = t_half * (1.0 + ramp_eta);
        eta.int_eta_delta = t_half * (1.0 + ramp_delta);
        Ok(eta)
    }

    pub fn t_half(&self) -> f64 {
        self.t_half
    }

    pub fn delta(&self) -> f64 {
        self.delta
    }

    pub fn c0(&self) -> f64 {
        self.c0
    }

    pub fn power(&self) -> u32 {
        self.m
    }

    fn chi(&self, t: f64) -> (f64, f64) {
        let tt = self.t_half;
        if t <= 0.0 || t >= 2.0 * tt {
            (0.0, 0.0)
        } else if t < 0.25 * tt {
            let s = t / (0.25 * tt);
            (smoothstep(s), smoothstep_d1(s) / (0.25 * tt))
        } else if t <= 1.25 * tt {
            (1.0, 0.0)
        } else {
            let s = (2.0 * tt - t) / (0.75 * tt);
            (smoothstep(s), -smoothstep_d1(s) / (0.75 * tt))
        }
    }

    pub fn eta(&self, t: f64) -> f64 {
        powi(self.chi(t).0, self.m)
    }

    pub fn eta_dot(&self, t: f64) -> f64 {
        let (c, dc) = self.chi(t);
        self.m as f64 * powi(c, self.m - 1) * dc
    }

    pub fn eta_delta(&self, t: f64) -> f64 {
        powf(self.eta(t), self.delta)
    }

    /// `∫_0^{2T} eta dt` (exact Gauss-Legendre on the polynomial ramps).
    pub fn integral_eta(&self) -> f64 {
        self.int_eta
    }

    /// `∫_0^{2T} eta^delta dt`.
    pub fn integral_eta_delta(&self) -> f64 {
        self.int_eta_delta
    }

    /// Sample weights for `∫ a(t) g(t) dt` on `times`, where `a` is `eta`,
    /// `eta^delta` or `eta'`. A steady axis yields the closed-form integral
    /// of `a` (and zero for `eta'`).
    pub fn time_weights(&self, times: &TimeAxis, factor: TimeFactor) -> Result<Vec<f64>> {
        self.check_axis(times)?;
        if times.is_steady() {
            return Ok(alloc::vec![match factor {
                TimeFactor::Eta => self.int_eta,
                TimeFactor::EtaDelta => self.int_eta_delta,
                TimeFactor::EtaDot => 0.0,
            }]);
        }
        Ok(times
            .trapezoid_weights()
            .iter()
            .enumerate()
            .map(|(k, w)| {
                let t = times.time(k);
                w * match factor {
                    TimeFactor::Eta => self.eta(t),
                    TimeFactor::EtaDelta => self.eta_delta(t),
                    TimeFactor::EtaDot => self.eta_dot(t),
                }
            })
            .collect())
    }

    pub fn check_axis(&self, times: &TimeAxis) -> Result<()> {
        if abs(times.t_half() - self.t_half) > 1e-12 * self.t_half {
            return Err(Error::ShapeMismatch(format!(
                "cutoff T = {} but field time axis has T = {}",
                self.t_half,
                times.t_half()
            )));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum TimeFactor {
    Eta,
    EtaDelta,
    EtaDot,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SpatialKind {
    Interior,
    BoundaryCone,
    Integral,
}

/// Closed-form geometry of a spatial cutoff.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CutoffShape {
    pub kind: SpatialKind,
    pub center: Vec3,
    pub radius: f64,
    /// Integral scale; used by the boundary-cone kind.
    pub r0: f64,
}

#[inline]
fn radial(center: &Vec3, radius: f64, x: &Vec3) -> (f64, Vec3, f64) {
    let d = sub(x, center);
    let r = norm(&d);
    let arg = (2.0 * radius - r) / radius;
    let psi = profile(arg);
    if r == 0.0 || arg >= 1.0 || arg <= 0.0 {
        return (psi, [0.0; 3], 0.0);
    }
    let dpsi = -profile_d1(arg) / radius;
    let lap = profile_d2(arg) / (radius * radius) + 2.0 * dpsi / r;
    (psi, scale(&d, dpsi / r), lap)
}

impl CutoffShape {
    pub fn interior(center: Vec3, radius: f64) -> Self {
        CutoffShape { kind: SpatialKind::Interior, center, radius, r0: radius }
    }

    pub fn integral(r0: f64) -> Self {
        CutoffShape { kind: SpatialKind::Integral, center: [0.0; 3], radius: r0, r0 }
    }

    pub fn boundary(center: Vec3, radius: f64, r0: f64) -> Result<Self> {
        let c = norm(&center);
        if c > r0 * (1.0 + 1e-12) {
            return Err(Error::InvalidParameter(format!("centre at |x0| = {c} lies outside B(0, {r0})")));
        }
        if c + radius <= r0 {
            return Err(Error::InvalidParameter(format!(
                "B(x0, {radius}) with |x0| = {c} lies inside B(0, {r0}); use the interior cutoff"
            )));
        }
        Ok(CutoffShape { kind: SpatialKind::BoundaryCone, center, radius, r0 })
    }

    /// Interior or boundary-cone cutoff as dictated by `B(x0, R) ⊂ B(0, R0)`.
    pub fn for_cover_ball(center: Vec3, radius: f64, r0: f64) -> Result<Self> {
        if norm(&center) + radius <= r0 {
            Ok(Self::interior(center, radius))
        } else {
            Self::boundary(center, radius, r0)
        }
    }

    /// `(psi, grad psi)` at `x`.
    pub fn eval(&self, x: &Vec3) -> (f64, Vec3) {
        let (p, g, _) = self.eval_full(x);
        (p, g)
    }

    /// `(psi, grad psi, laplacian)`; the Laplacian is only provided for the radial kinds.
    pub fn eval_full(&self, x: &Vec3) -> (f64, Vec3, Option<f64>) {
        match self.kind {
            SpatialKind::Interior | SpatialKind::Integral => {
                let (p, g, l) = radial(&self.center, self.radius, x);
                (p, g, Some(l))
            }
            SpatialKind::BoundaryCone => {
                let rho = norm(x);
                if rho <= self.r0 {
                    let (p, g, _) = radial(&self.center, self.radius, x);
                    return (p, g, None);
                }
                if rho >= 2.0 * self.r0 {
                    return (0.0, [0.0; 3], None);
                }
                let xhat = scale(x, 1.0 / rho);
                let y = scale(&xhat, self.r0);
                let (a, grad_a, _) = radial(&self.center, self.radius, &y);
                if a == 0.0 {
                    return (0.0, [0.0; 3], None);
                }
                let s0 = (2.0 * self.r0 - rho) / self.r0;
                let psi0 = profile(s0);
                let dpsi0 = -profile_d1(s0) / self.r0;
                // tangential projection of grad a, scaled by d(y)/dx = (R0/rho)(I - xhat xhat^T)
                let radial_part = dot(&xhat, &grad_a);
                let k = self.r0 / rho;
                let mut g = [0.0; 3];
                for i in 0..3 {
                    g[i] = dpsi0 * a * xhat[i] + psi0 * k * (grad_a[i] - radial_part * xhat[i]);
                }
                (psi0 * a, g, None)
            }
        }
    }

    /// Axis-aligned box containing the support.
    pub fn support_box(&self) -> (Vec3, Vec3) {
        let (c, r) = (self.center, self.radius);
        match self.kind {
            SpatialKind::Interior | SpatialKind::Integral => {
                ([c[0] - 2.0 * r, c[1] - 2.0 * r, c[2] - 2.0 * r], [c[0] + 2.0 * r, c[1] + 2.0 * r, c[2] + 2.0 * r])
            }
            SpatialKind::BoundaryCone => {
                // the cone patch lies in the hull of B(x0, 2R) and B(2 x0, 4R)
                let mut lo = [0.0; 3];
                let mut hi = [0.0; 3];
                for i in 0..3 {
                    lo[i] = (c[i] - 2.0 * r).min(2.0 * c[i] - 4.0 * r).max(-2.0 * self.r0);
                    hi[i] = (c[i] + 2.0 * r).max(2.0 * c[i] + 4.0 * r).min(2.0 * self.r0);
                }
                (lo, hi)
            }
        }
    }
}

/// Sums returned by the pairings: the fine-grid value, the same rule on the
/// even sub-grid (spacing 2h), and the sum of absolute term magnitudes.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct PairSum {
    pub value: f64,
    pub coarse: f64,
    pub abs: f64,
}

impl PairSum {
    /// `|Q_h - Q_2h|` plus a round-off floor proportional to the absolute sum.
    pub fn error(&self) -> f64 {
        abs(self.value - self.coarse) + 16.0 * f64::EPSILON * self.abs
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Power {
    One,
    Delta(f64),
}

/// A spatial cutoff sampled on the grid nodes of its support box.
/// Gradients come from the closed-form profile, never from differencing.
#[derive(Debug, Clone, PartialEq)]
pub struct SpatialCutoff {
    shape: CutoffShape,
    grid: Grid3,
    lo: [usize; 3],
    dims: [usize; 3],
    psi: Vec<f64>,
    grad: Vec<Vec3>,
    lap: Option<Vec<f64>>,
}

/// Default resolvability requirement `R > 4h` for field functionals.
pub const MIN_RESOLVED_CELLS: f64 = 4.0;

impl SpatialCutoff {
    /// Samples `shape` on `grid`, requiring `R > min_cells * h`.
    pub fn sample(grid: &Grid3, shape: CutoffShape, min_cells: f64) -> Result<Self> {
        let h = grid.spacing();
        if !(shape.radius > min_cells * h) || !(shape.radius > 0.0) {
            return Err(Error::Unresolved { radius: shape.radius, min_cells });
        }
        let (blo, bhi) = shape.support_box();
        let mut lo = [0usize; 3];
        let mut dims = [0usize; 3];
        for axis in 0..3 {
            let (first, last) = grid.node_range(axis, blo[axis], bhi[axis])?;
            lo[axis] = first;
            dims[axis] = last + 1 - first;
        }
        let total = dims[0] * dims[1] * dims[2];
        let mut psi = Vec::with_capacity(total);
        let mut grad = Vec::with_capacity(total);
        let radial = shape.kind != SpatialKind::BoundaryCone;
        let mut lap = if radial { Some(Vec::with_capacity(total)) } else { None };
        for c in 0..dims[2] {
            for b in 0..dims[1] {
                for a in 0..dims[0] {
                    let x = grid.point(lo[0] + a, lo[1] + b, lo[2] + c);
                    let (p, g, l) = shape.eval_full(&x);
                    psi.push(p);
                    grad.push(g);
                    if let (Some(lap), Some(l)) = (lap.as_mut(), l) {
                        lap.push(l);
                    }
                }
            }
        }
        Ok(SpatialCutoff { shape, grid: *grid, lo, dims, psi, grad, lap })
    }

    pub fn interior(grid: &Grid3, center: Vec3, radius: f64) -> Result<Self> {
        Self::sample(grid, CutoffShape::interior(center, radius), MIN_RESOLVED_CELLS)
    }

    pub fn boundary(grid: &Grid3, center: Vec3, radius: f64, r0: f64) -> Result<Self> {
        Self::sample(grid, CutoffShape::boundary(center, radius, r0)?, MIN_RESOLVED_CELLS)
    }

    /// The integral cutoff `psi0`: one on `B(0, R0)`, supported in `B(0, 2R0)`.
    pub fn integral(grid: &Grid3, r0: f64) -> Result<Self> {
        Self::sample(grid, CutoffShape::integral(r0), MIN_RESOLVED_CELLS)
    }

    pub fn shape(&self) -> &CutoffShape {
        &self.shape
    }

    pub fn kind(&self) -> SpatialKind {
        self.shape.kind
    }

    pub fn grid(&self) -> &Grid3 {
        &self.grid
    }

    pub fn len(&self) -> usize {
        self.psi.len()
    }

    pub fn is_empty(&self) -> bool {
        self.psi.is_empty()
    }

    pub fn psi_samples(&self) -> &[f64] {
        &self.psi
    }

    pub fn grad_samples(&self) -> &[Vec3] {
        &self.grad
    }

    /// Linear grid index of local sample `l`.
    #[inline]
    pub fn global_index(&self, l: usize) -> usize {
        let a = l % self.dims[0];
        let b = (l / self.dims[0]) % self.dims[1];
        let c = l / (self.dims[0] * self.dims[1]);
        self.grid.index(self.lo[0] + a, self.lo[1] + b, self.lo[2] + c)
    }

    /// Grid point of local sample `l`.
    pub fn point(&self, l: usize) -> Vec3 {
        self.grid.point_of(self.global_index(l))
    }

    /// `self + weight·other` sampled on the union of both boxes. The result
    /// keeps `self`'s shape metadata; its samples are no longer those of a
    /// single closed-form profile.
    pub fn superpose(&self, other: &SpatialCutoff, weight: f64) -> Result<SpatialCutoff> {
        if self.grid != other.grid {
            return Err(Error::ShapeMismatch("cutoffs sampled on different grids".into()));
        }
        let mut lo = [0usize; 3];
        let mut dims = [0usize; 3];
        for a in 0..3 {
            lo[a] = self.lo[a].min(other.lo[a]);
            let hi = (self.lo[a] + self.dims[a]).max(other.lo[a] + other.dims[a]);
            dims[a] = hi - lo[a];
        }
        let total = dims[0] * dims[1] * dims[2];
        let mut psi = alloc::vec![0.0; total];
        let mut grad = alloc::vec![[0.0; 3]; total];
        let mut lap = match (&self.lap, &other.lap) {
            (Some(_), Some(_)) => Some(alloc::vec![0.0; total]),
            _ => None,
        };
        for (src, w) in [(self, 1.0), (other, weight)] {
            for l in 0..src.len() {
                let a = l % src.dims[0] + src.lo[0] - lo[0];
                let b = (l / src.dims[0]) % src.dims[1] + src.lo[1] - lo[1];
                let c = l / (src.dims[0] * src.dims[1]) + src.lo[2] - lo[2];
                let t = (c * dims[1] + b) * dims[0] + a;
                psi[t] += w * src.psi[l];
                for i in 0..3 {
                    grad[t][i] += w * src.grad[l][i];
                }
                if let (Some(out), Some(s)) = (lap.as_mut(), src.lap.as_ref()) {
                    out[t] += w * s[l];
                }
            }
        }
        Ok(SpatialCutoff { shape: self.shape, grid: self.grid, lo, dims, psi, grad, lap })
    }

    /// Iterates `(local, global, on_even_subgrid)` over z-slabs, summing
    /// `term(local, global) -> (value, magnitude)` over a fixed tree.
    fn reduce<F: Fn(usize, usize) -> (f64, f64)>(&self, term: F) -> PairSum {
        let [nx, ny, nz] = self.dims;
        let n = self.grid.n();
        let mut fine = Vec::with_capacity(nz);
        let mut coarse = Vec::with_capacity(nz);
        let mut mags = Vec::with_capacity(nz);
        for c in 0..nz {
            let gz = self.lo[2] + c;
            let (mut sf, mut sc, mut sa) = (0.0, 0.0, 0.0);
            for b in 0..ny {
                let gy = self.lo[1] + b;
                let row_local = (c * ny + b) * nx;
                let row_global = (gz * n + gy) * n + self.lo[0];
                let even_row = gz % 2 == 0 && gy % 2 == 0;
                for a in 0..nx {
                    let (v, m) = term(row_local + a, row_global + a);
                    sf += v;
                    sa += m;
                    if even_row && (self.lo[0] + a) % 2 == 0 {
                        sc += v;
                    }
                }
            }
            fine.push(sf);
            coarse.push(sc);
            mags.push(sa);
        }
        let h3 = self.grid.cell_volume();
        PairSum { value: tree_sum(&fine) * h3, coarse: 8.0 * tree_sum(&coarse) * h3, abs: tree_sum(&mags) * h3 }
    }

    /// `Σ values·psi^power h³` for one time slice of a scalar grid array.
    pub fn pair_scalar(&self, values: &[f64], power: Power) -> PairSum {
        debug_assert_eq!(values.len(), self.grid.len());
        match power {
            Power::One => self.reduce(|l, g| {
                let t = values[g] * self.psi[l];
                (t, abs(t))
            }),
            Power::Delta(d) => self.reduce(|l, g| {
                let p = self.psi[l];
                let t = if p > 0.0 { values[g] * powf(p, d) } else { 0.0 };
                (t, abs(t))
            }),
        }
    }

    /// `Σ q·∇psi h³` for an interleaved 3-component grid array.
    pub fn pair_gradient(&self, q: &[f64]) -> PairSum {
        debug_assert_eq!(q.len(), 3 * self.grid.len());
        self.reduce(|l, g| {
            let gr = &self.grad[l];
            let v = [q[3 * g], q[3 * g + 1], q[3 * g + 2]];
            (dot(&v, gr), norm(&v) * norm(gr))
        })
    }

    /// `Σ values·Δpsi h³`; only radial cutoffs carry a Laplacian.
    pub fn pair_laplacian(&self, values: &[f64]) -> Result<PairSum> {
        let lap = self
            .lap
            .as_ref()
            .ok_or_else(|| Error::Unsupported("Laplacian of a boundary-cone cutoff".into()))?;
        Ok(self.reduce(|l, g| {
            let t = values[g] * lap[l];
            (t, abs(t))
        }))
    }
}

/// `phi = eta(t) psi(x)` with its derivatives `∂t phi = eta' psi` and `∇phi = eta ∇psi`.
#[derive(Debug, Clone, PartialEq)]
pub struct CutoffFunction {
    pub temporal: TemporalCutoff,
    pub spatial: SpatialCutoff,
}

impl CutoffFunction {
    pub fn assemble(temporal: TemporalCutoff, spatial: SpatialCutoff) -> Self {
        CutoffFunction { temporal, spatial }
    }

    pub fn delta(&self) -> f64 {
        self.temporal.delta()
    }

    pub fn phi(&self, t: f64, local: usize) -> f64 {
        self.temporal.eta(t) * self.spatial.psi[local]
    }

    pub fn phi_delta(&self, t: f64, local: usize) -> f64 {
        powf(self.phi(t, local), self.delta())
    }

    pub fn phi_t(&self, t: f64, local: usize) -> f64 {
        self.temporal.eta_dot(t) * self.spatial.psi[local]
    }

    pub fn grad_phi(&self, t: f64, local: usize) -> Vec3 {
        scale(&self.spatial.grad[local], self.temporal.eta(t))
    }

    /// `max (|∂t phi| - (C0/T) phi^delta)` over the given times and all
    /// sampled nodes; nonpositive when the time-derivative bound holds.
    pub fn time_bound_excess(&self, times: &[f64]) -> f64 {
        let k = self.temporal.c0() / self.temporal.t_half();
        let mut worst = f64::NEG_INFINITY;
        for &t in times {
            for l in 0..self.spatial.len() {
                worst = worst.max(abs(self.phi_t(t, l)) - k * self.phi_delta(t, l));
            }
        }
        worst
    }
}

/// Volume of a ball, for bracketing quadratures.
pub fn ball_volume(r: f64) -> f64 {
    4.0 / 3.0 * crate::math::PI * r * r * r
}

/// Angle-free inward check: `∇psi · (x0 - x) >= -tol |∇psi| |x0 - x|` at every node.
pub fn points_inward(cutoff: &SpatialCutoff, tol: f64) -> bool {
    let c = cutoff.shape.center;
    (0..cutoff.len()).all(|l| {
        let g = &cutoff.grad[l];
        let to_center = sub(&c, &cutoff.point(l));
        dot(g, &to_center) >= -tol * norm(g) * norm(&to_center)
    })
}
