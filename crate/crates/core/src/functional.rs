//! Localized functionals of a velocity field against a cutoff `phi = eta psi`:
//! energy `∫ ½|u|² phi^δ`, flux `∫ (½|u|² + p) u·∇phi`, anomalous dissipation
//! `∫∫ ½|u|² ∂t phi + ∫∫ (½|u|² + p) u·∇phi`, the Duchon-Robert estimator and
//! the viscous balance residual. Measure-level counterparts pair a
//! nonnegative density with the same cutoffs.

use alloc::format;
use alloc::vec::Vec;

use crate::cutoff::{CutoffFunction, PairSum, Power, SpatialCutoff, SpatialKind, TemporalCutoff, TimeFactor};
use crate::error::{Error, Result};
use crate::field::{ScalarDensity, VectorField3};
use crate::grid::{Grid3, TimeAxis};
use crate::math::{abs, cos, floor, gauss_legendre, ln, sin, TWO_PI};
use crate::reduce::{map_indexed, tree_sum};
use crate::spectral::Spectral;
use crate::Vec3;

/// A quadrature value with a nonnegative error estimate.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct Estimate {
    pub value: f64,
    pub error: f64,
}

impl Estimate {
    pub fn new(value: f64, error: f64) -> Self {
        Estimate { value, error }
    }

    fn accumulate(&mut self, weight: f64, s: &PairSum) {
        self.value += weight * s.value;
        self.error += abs(weight) * s.error();
    }

    pub fn scaled(self, k: f64) -> Self {
        Estimate { value: self.value * k, error: self.error * abs(k) }
    }

    pub fn plus(self, o: Estimate) -> Self {
        Estimate { value: self.value + o.value, error: self.error + o.error }
    }

    pub fn minus(self, o: Estimate) -> Self {
        Estimate { value: self.value - o.value, error: self.error + o.error }
    }

    /// Fixed-tree sum of many estimates.
    pub fn sum(items: &[Estimate]) -> Self {
        let v: Vec<f64> = items.iter().map(|e| e.value).collect();
        let e: Vec<f64> = items.iter().map(|e| e.error).collect();
        Estimate { value: tree_sum(&v), error: tree_sum(&e) }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LocalFunctionalValue {
    pub value: f64,
    pub center: Vec3,
    pub radius: f64,
    pub quadrature_error: f64,
}

impl LocalFunctionalValue {
    fn from(e: Estimate, psi: &SpatialCutoff) -> Self {
        LocalFunctionalValue {
            value: e.value,
            center: psi.shape().center,
            radius: psi.shape().radius,
            quadrature_error: e.error,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum FluxForm {
    /// `∫ (½|u|² + p) u·∇phi`.
    Gradient,
    /// `-∫ ((u·∇)u + ∇p)·u phi`, spectral derivatives.
    Advective,
}

/// Pointwise integrands derived from a velocity field with pressure:
/// `w = ½|u|²` and `q = (½|u|² + p) u` (interleaved), per time slice.
#[derive(Debug, Clone, PartialEq)]
pub struct FieldDensities {
    grid: Grid3,
    times: TimeAxis,
    energy: Vec<f64>,
    flux: Vec<f64>,
    advective: Option<Vec<f64>>,
}

impl FieldDensities {
    pub fn new(field: &VectorField3) -> Result<Self> {
        let p = field.pressure().ok_or(Error::MissingPressure)?;
        let u = field.velocity();
        let mut energy = Vec::with_capacity(p.len());
        let mut flux = Vec::with_capacity(u.len());
        for (v, &p) in u.chunks_exact(3).zip(p) {
            let w = 0.5 * (v[0] * v[0] + v[1] * v[1] + v[2] * v[2]);
            energy.push(w);
            let b = w + p;
            flux.extend_from_slice(&[b * v[0], b * v[1], b * v[2]]);
        }
        Ok(FieldDensities { grid: *field.grid(), times: *field.times(), energy, flux, advective: None })
    }

    /// Adds the advective flux integrand `-((u·∇)u + ∇p)·u`.
    pub fn with_advective(mut self, field: &VectorField3) -> Result<Self> {
        if field.grid() != &self.grid || field.times() != &self.times {
            return Err(Error::ShapeMismatch("field does not match the densities".into()));
        }
        let ops = Spectral::new(&self.grid);
        let mut s = Vec::with_capacity(self.energy.len());
        for k in 0..self.times.n_samples() {
            let p = field.pressure_at(k).ok_or(Error::MissingPressure)?;
            s.extend(ops.advective_density(field.velocity_at(k), p));
        }
        self.advective = Some(s);
        Ok(self)
    }

    pub fn grid(&self) -> &Grid3 {
        &self.grid
    }

    pub fn times(&self) -> &TimeAxis {
        &self.times
    }

    pub fn energy_at(&self, k: usize) -> &[f64] {
        let m = self.grid.len();
        &self.energy[k * m..(k + 1) * m]
    }

    pub fn flux_at(&self, k: usize) -> &[f64] {
        let m = 3 * self.grid.len();
        &self.flux[k * m..(k + 1) * m]
    }

    pub fn advective_at(&self, k: usize) -> Option<&[f64]> {
        let m = self.grid.len();
        self.advective.as_ref().map(|s| &s[k * m..(k + 1) * m])
    }
}

/// What gets paired with the cutoffs: a velocity field, or a pair of
/// nonnegative densities (energy density `w`, dissipation density `d`).
#[derive(Debug, Clone, Copy)]
pub enum Source<'a> {
    Field(&'a FieldDensities),
    Measure { energy: &'a ScalarDensity, dissipation: &'a ScalarDensity },
}

impl<'a> Source<'a> {
    pub fn measure(energy: &'a ScalarDensity, dissipation: &'a ScalarDensity) -> Result<Self> {
        if energy.grid() != dissipation.grid() || energy.times() != dissipation.times() {
            return Err(Error::ShapeMismatch("energy and dissipation densities differ in grid or time axis".into()));
        }
        Ok(Source::Measure { energy, dissipation })
    }

    pub fn grid(&self) -> &Grid3 {
        match self {
            Source::Field(f) => f.grid(),
            Source::Measure { energy, .. } => energy.grid(),
        }
    }

    pub fn times(&self) -> &TimeAxis {
        match self {
            Source::Field(f) => f.times(),
            Source::Measure { energy, .. } => energy.times(),
        }
    }

    fn energy_at(&self, k: usize) -> &[f64] {
        match self {
            Source::Field(f) => f.energy_at(k),
            Source::Measure { energy, .. } => energy.values_at(k),
        }
    }

    /// Cutoff resolution floor in grid cells. Field functionals need `R > 4h`;
    /// measure pairings are sample-exact and accept any radius.
    pub fn min_cells(&self) -> f64 {
        match self {
            Source::Field(_) => crate::cutoff::MIN_RESOLVED_CELLS,
            Source::Measure { .. } => 0.0,
        }
    }
}

/// Space-time pairings of one cutoff, all integrated over `(0, 2T)`:
/// `energy = ∫∫ w phi^δ`, `time = ∫∫ w ∂t phi`, `flux = ∫∫ q·∇phi` and
/// `dissipation = time + flux`. For a measure source `dissipation = ∫∫ d phi`
/// and `flux` is defined by the same identity.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct ElementPairings {
    pub energy: Estimate,
    pub time: Estimate,
    pub flux: Estimate,
    pub dissipation: Estimate,
}

fn check_compatible(grid: &Grid3, times: &TimeAxis, eta: &TemporalCutoff, psi: &SpatialCutoff) -> Result<()> {
    if psi.grid() != grid {
        return Err(Error::ShapeMismatch("cutoff sampled on a different grid".into()));
    }
    eta.check_axis(times)
}

pub fn element_pairings(source: &Source, eta: &TemporalCutoff, psi: &SpatialCutoff) -> Result<ElementPairings> {
    let times = source.times();
    check_compatible(source.grid(), times, eta, psi)?;
    let a = eta.time_weights(times, TimeFactor::Eta)?;
    let ad = eta.time_weights(times, TimeFactor::EtaDelta)?;
    let at = eta.time_weights(times, TimeFactor::EtaDot)?;
    let mut out = ElementPairings::default();
    for k in 0..times.n_samples() {
        let w = source.energy_at(k);
        out.energy.accumulate(ad[k], &psi.pair_scalar(w, Power::Delta(eta.delta())));
        if at[k] != 0.0 {
            out.time.accumulate(at[k], &psi.pair_scalar(w, Power::One));
        }
        match source {
            Source::Field(f) => out.flux.accumulate(a[k], &psi.pair_gradient(f.flux_at(k))),
            Source::Measure { dissipation, .. } => {
                out.dissipation.accumulate(a[k], &psi.pair_scalar(dissipation.values_at(k), Power::One))
            }
        }
    }
    match source {
        Source::Field(_) => out.dissipation = out.time.plus(out.flux),
        Source::Measure { .. } => out.flux = out.dissipation.minus(out.time),
    }
    Ok(out)
}

/// `∫∫ d eta psi` alone, for the measure-level bound checks.
pub fn dissipation_pairing(density: &ScalarDensity, eta: &TemporalCutoff, psi: &SpatialCutoff) -> Result<Estimate> {
    let times = density.times();
    check_compatible(density.grid(), times, eta, psi)?;
    let a = eta.time_weights(times, TimeFactor::Eta)?;
    let mut e = Estimate::default();
    for (k, ak) in a.iter().enumerate() {
        e.accumulate(*ak, &psi.pair_scalar(density.values_at(k), Power::One));
    }
    Ok(e)
}

/// Time slices bracketing `t` with linear interpolation weights.
fn slices_at(times: &TimeAxis, t: f64) -> Result<Vec<(usize, f64)>> {
    if !(t > 0.0 && t < times.t_end()) {
        return Err(Error::TimeOutOfRange(t));
    }
    if times.is_steady() {
        return Ok(alloc::vec![(0, 1.0)]);
    }
    let s = t / times.dt();
    let k = (floor(s) as usize).min(times.n_samples() - 2);
    let f = s - k as f64;
    if f < 1e-12 {
        Ok(alloc::vec![(k, 1.0)])
    } else if f > 1.0 - 1e-12 {
        Ok(alloc::vec![(k + 1, 1.0)])
    } else {
        Ok(alloc::vec![(k, 1.0 - f), (k + 1, f)])
    }
}

/// `∫ ½|u(t)|² phi(t)^δ dx`.
pub fn local_energy(dens: &FieldDensities, cutoff: &CutoffFunction, t: f64) -> Result<LocalFunctionalValue> {
    let psi = &cutoff.spatial;
    check_compatible(dens.grid(), dens.times(), &cutoff.temporal, psi)?;
    let k = cutoff.temporal.eta_delta(t);
    let mut e = Estimate::default();
    for (s, w) in slices_at(dens.times(), t)? {
        e.accumulate(w * k, &psi.pair_scalar(dens.energy_at(s), Power::Delta(cutoff.delta())));
    }
    Ok(LocalFunctionalValue::from(e, psi))
}

/// Flux through the cutoff at time `t` in the requested form.
pub fn local_flux(dens: &FieldDensities, cutoff: &CutoffFunction, t: f64, form: FluxForm) -> Result<LocalFunctionalValue> {
    let psi = &cutoff.spatial;
    check_compatible(dens.grid(), dens.times(), &cutoff.temporal, psi)?;
    let k = cutoff.temporal.eta(t);
    let mut e = Estimate::default();
    for (s, w) in slices_at(dens.times(), t)? {
        let pair = match form {
            FluxForm::Gradient => psi.pair_gradient(dens.flux_at(s)),
            FluxForm::Advective => {
                let a = dens
                    .advective_at(s)
                    .ok_or_else(|| Error::Unsupported("advective form needs FieldDensities::with_advective".into()))?;
                psi.pair_scalar(a, Power::One)
            }
        };
        e.accumulate(w * k, &pair);
    }
    Ok(LocalFunctionalValue::from(e, psi))
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FluxComparison {
    pub gradient: LocalFunctionalValue,
    pub advective: LocalFunctionalValue,
    pub discrepancy: f64,
    /// `η(t) Σ |q| |∇psi| h³`, the scale against which the discrepancy is judged.
    pub magnitude: f64,
}

impl FluxComparison {
    pub fn relative(&self) -> f64 {
        if self.magnitude > 0.0 {
            self.discrepancy / self.magnitude
        } else {
            self.discrepancy
        }
    }
}

/// Both flux forms and their discrepancy.
pub fn flux_forms(dens: &FieldDensities, cutoff: &CutoffFunction, t: f64) -> Result<FluxComparison> {
    let gradient = local_flux(dens, cutoff, t, FluxForm::Gradient)?;
    let advective = local_flux(dens, cutoff, t, FluxForm::Advective)?;
    let k = cutoff.temporal.eta(t);
    let mut magnitude = 0.0;
    for (s, w) in slices_at(dens.times(), t)? {
        magnitude += w * k * cutoff.spatial.pair_gradient(dens.flux_at(s)).abs;
    }
    Ok(FluxComparison { gradient, advective, discrepancy: abs(gradient.value - advective.value), magnitude })
}

/// `ε = ∫∫ ½|u|² ∂t phi + ∫∫ (½|u|² + p) u·∇phi`, never clamped.
pub fn anomalous_dissipation(dens: &FieldDensities, cutoff: &CutoffFunction) -> Result<LocalFunctionalValue> {
    let p = element_pairings(&Source::Field(dens), &cutoff.temporal, &cutoff.spatial)?;
    Ok(LocalFunctionalValue::from(p.dissipation, &cutoff.spatial))
}

/// `⟨∂t w + div q - νΔw + ν|∇u|², phi⟩` with every derivative moved onto
/// `phi`, i.e. `-ε - ν⟨w, Δphi⟩ + ν⟨|∇u|², phi⟩`. Radial cutoffs only.
pub fn viscous_balance_residual(
    field: &VectorField3,
    dens: &FieldDensities,
    cutoff: &CutoffFunction,
    nu: f64,
) -> Result<f64> {
    let eps = anomalous_dissipation(dens, cutoff)?.value;
    if nu == 0.0 {
        return Ok(-eps);
    }
    let (lap, grad) = viscous_pairings(field, dens, cutoff)?;
    Ok(-eps + nu * (grad - lap))
}

/// `(⟨½|u|², Δphi⟩, ⟨|∇u|², phi⟩)` over `(0, 2T)`.
pub fn viscous_pairings(field: &VectorField3, dens: &FieldDensities, cutoff: &CutoffFunction) -> Result<(f64, f64)> {
    let psi = &cutoff.spatial;
    if psi.kind() == SpatialKind::BoundaryCone {
        return Err(Error::Unsupported("viscous pairing needs a radial cutoff".into()));
    }
    let times = dens.times();
    check_compatible(dens.grid(), times, &cutoff.temporal, psi)?;
    let a = cutoff.temporal.time_weights(times, TimeFactor::Eta)?;
    let ops = Spectral::new(dens.grid());
    let (mut lap, mut grad) = (0.0, 0.0);
    for (k, ak) in a.iter().enumerate() {
        lap += ak * psi.pair_laplacian(dens.energy_at(k))?.value;
        let g = ops.velocity_gradient(field.velocity_at(k));
        let mut sq = alloc::vec![0.0; dens.grid().len()];
        for row in &g {
            for comp in row {
                for (s, v) in sq.iter_mut().zip(comp) {
                    *s += v * v;
                }
            }
        }
        grad += ak * psi.pair_scalar(&sq, Power::One).value;
    }
    Ok((lap, grad))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum Interpolation {
    #[default]
    Trilinear,
    /// Four-point Lagrange per axis.
    Tricubic,
}

/// Quadrature of the spherical stencil: Gauss-Legendre in radius and in
/// `cos θ`, uniform in azimuth.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct StencilSpec {
    pub radial: usize,
    pub polar: usize,
    pub azimuthal: usize,
    pub interpolation: Interpolation,
}

impl Default for StencilSpec {
    fn default() -> Self {
        StencilSpec { radial: 16, polar: 16, azimuthal: 32, interpolation: Interpolation::Trilinear }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct DrScan {
    pub scales: Vec<f64>,
    pub points: Vec<Vec3>,
    /// `values[p][k]` is `D_{ε_k}` at point `p`.
    pub values: Vec<Vec<f64>>,
    /// Least-squares slope of `ln |D_k|` against `ln ε_k`, per point.
    pub slopes: Vec<Option<f64>>,
    /// Same fit applied to `max_p |D_k|`.
    pub slope_of_max: Option<f64>,
}

impl DrScan {
    pub fn max_abs_at(&self, k: usize) -> f64 {
        self.values.iter().map(|v| abs(v[k])).fold(0.0, f64::max)
    }
}

struct Sampler<'a> {
    grid: &'a Grid3,
    u: &'a [f64],
    mode: Interpolation,
}

impl Sampler<'_> {
    fn at(&self, x: &Vec3) -> Vec3 {
        let n = self.grid.n();
        let h = self.grid.spacing();
        let o = self.grid.origin();
        let mut base = [0isize; 3];
        let mut frac = [0.0; 3];
        for d in 0..3 {
            let f = (x[d] - o[d]) / h;
            let fl = floor(f);
            base[d] = fl as isize;
            frac[d] = f - fl;
        }
        let wrap = |i: isize| i.rem_euclid(n as isize) as usize;
        let (offs, weights): (&[isize], [[f64; 4]; 3]) = match self.mode {
            Interpolation::Trilinear => {
                let mut w = [[0.0; 4]; 3];
                for d in 0..3 {
                    w[d][0] = 1.0 - frac[d];
                    w[d][1] = frac[d];
                }
                (&[0, 1], w)
            }
            Interpolation::Tricubic => {
                let mut w = [[0.0; 4]; 3];
                for d in 0..3 {
                    let t = frac[d];
                    w[d][0] = -t * (t - 1.0) * (t - 2.0) / 6.0;
                    w[d][1] = (t + 1.0) * (t - 1.0) * (t - 2.0) / 2.0;
                    w[d][2] = -(t + 1.0) * t * (t - 2.0) / 2.0;
                    w[d][3] = (t + 1.0) * t * (t - 1.0) / 6.0;
                }
                (&[-1, 0, 1, 2], w)
            }
        };
        let mut out = [0.0; 3];
        for (c, dz) in offs.iter().enumerate() {
            let iz = wrap(base[2] + dz);
            for (b, dy) in offs.iter().enumerate() {
                let iy = wrap(base[1] + dy);
                let wzy = weights[2][c] * weights[1][b];
                for (a, dx) in offs.iter().enumerate() {
                    let ix = wrap(base[0] + dx);
                    let w = wzy * weights[0][a];
                    let idx = 3 * self.grid.index(ix, iy, iz);
                    out[0] += w * self.u[idx];
                    out[1] += w * self.u[idx + 1];
                    out[2] += w * self.u[idx + 2];
                }
            }
        }
        out
    }
}

fn log_slope(eps: &[f64], vals: &[f64]) -> Option<f64> {
    let pts: Vec<(f64, f64)> =
        eps.iter().zip(vals).filter(|(_, v)| abs(**v) > 0.0).map(|(e, v)| (ln(*e), ln(abs(*v)))).collect();
    if pts.len() < 2 {
        return None;
    }
    let m = pts.len() as f64;
    let mx = pts.iter().map(|p| p.0).sum::<f64>() / m;
    let my = pts.iter().map(|p| p.1).sum::<f64>() / m;
    let sxx: f64 = pts.iter().map(|p| (p.0 - mx) * (p.0 - mx)).sum();
    let sxy: f64 = pts.iter().map(|p| (p.0 - mx) * (p.1 - my)).sum();
    if sxx == 0.0 {
        None
    } else {
        Some(sxy / sxx)
    }
}

/// `D_ε(x) = ¼ ∫ ∇ρ_ε(y)·δu |δu|² dy` with `δu = u(x + y) - u(x)` for
/// `ε_k = eps_max 2^-k`, `k = 0..=k_max`, on time slice `slice`. The
/// mollifier is `ρ(s) ∝ (1 - s²)³`, normalized on the stencil itself.
pub fn dr_scan(
    field: &VectorField3,
    slice: usize,
    points: &[Vec3],
    eps_max: f64,
    k_max: u32,
    spec: &StencilSpec,
) -> Result<DrScan> {
    let grid = field.grid();
    if slice >= field.times().n_samples() {
        return Err(Error::InvalidParameter(format!("time slice {slice} out of range")));
    }
    let two_h = 2.0 * grid.spacing();
    let eps_min = eps_max * libm::exp2(-(k_max as f64));
    if !(eps_min >= two_h * (1.0 - 1e-12)) {
        return Err(Error::UnderResolved { eps: eps_min, two_h });
    }
    if spec.radial == 0 || spec.polar == 0 || spec.azimuthal == 0 {
        return Err(Error::InvalidParameter("stencil needs at least one node per direction".into()));
    }
    let (xr, wr) = gauss_legendre(spec.radial);
    let (xm, wm) = gauss_legendre(spec.polar);
    // unit-ball nodes: (direction, s, weight for ∫ dy / ε³, ρ(s), ρ'(s))
    let mut nodes: Vec<(Vec3, f64)> = Vec::new();
    let mut norm_sum = 0.0;
    let dphi = TWO_PI / spec.azimuthal as f64;
    for (r, wrr) in xr.iter().zip(&wr) {
        let s = 0.5 * (r + 1.0);
        let ws = 0.5 * wrr * s * s;
        let rho = (1.0 - s * s) * (1.0 - s * s) * (1.0 - s * s);
        let drho = -6.0 * s * (1.0 - s * s) * (1.0 - s * s);
        for (mu, wmu) in xm.iter().zip(&wm) {
            let st = libm::sqrt(1.0 - mu * mu);
            for j in 0..spec.azimuthal {
                let ph = (j as f64 + 0.5) * dphi;
                let w = ws * wmu * dphi;
                norm_sum += w * rho;
                nodes.push(([st * cos(ph) * s, st * sin(ph) * s, *mu * s], w * drho / s));
            }
        }
    }
    // ∇ρ_ε(y) = ρ'(s)/(Z ε⁴) ŷ and dy = ε³ (weight), so each term carries
    // w ρ'(s)/(Z ε) (y/ε)·δu |δu|² / s; the 1/s is folded into the node weight.
    let scales: Vec<f64> = (0..=k_max).map(|k| eps_max * libm::exp2(-(k as f64))).collect();
    let sampler = Sampler { grid, u: field.velocity_at(slice), mode: spec.interpolation };
    let values: Vec<Vec<f64>> = map_indexed(points.len(), |pi| {
        let x = points[pi];
        let u0 = sampler.at(&x);
        scales
            .iter()
            .map(|&eps| {
                let terms: Vec<f64> = nodes
                    .iter()
                    .map(|(y, w)| {
                        let p = [x[0] + eps * y[0], x[1] + eps * y[1], x[2] + eps * y[2]];
                        let v = sampler.at(&p);
                        let du = [v[0] - u0[0], v[1] - u0[1], v[2] - u0[2]];
                        let d2 = du[0] * du[0] + du[1] * du[1] + du[2] * du[2];
                        w * (y[0] * du[0] + y[1] * du[1] + y[2] * du[2]) * d2
                    })
                    .collect();
                0.25 * tree_sum(&terms) / (norm_sum * eps)
            })
            .collect()
    });
    let slopes = values.iter().map(|v| log_slope(&scales, v)).collect();
    let maxes: Vec<f64> = (0..scales.len()).map(|k| values.iter().map(|v| abs(v[k])).fold(0.0, f64::max)).collect();
    Ok(DrScan { slope_of_max: log_slope(&scales, &maxes), scales, points: points.to_vec(), values, slopes })
}
