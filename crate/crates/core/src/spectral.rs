//! Pseudo-spectral calculus on the periodic grid and the pressure solve
//! `-Δp = ∂i∂j(u^i u^j)` (zero-mean gauge).

use alloc::vec;
use alloc::vec::Vec;

use crate::error::Result;
use crate::fft::{Fft3, C64};
use crate::field::VectorField3;
use crate::grid::Grid3;
use crate::math::{abs, sqrt, TWO_PI};

/// Spectral operators for one grid. Nyquist wavenumbers are zeroed for every
/// derivative so that first and second derivatives stay consistent.
#[derive(Debug, Clone)]
pub struct Spectral {
    n: usize,
    fft: Fft3,
    k: Vec<f64>,
}

impl Spectral {
    pub fn new(grid: &Grid3) -> Self {
        let n = grid.n();
        let base = TWO_PI / grid.box_length();
        let k = (0..n)
            .map(|j| {
                if 2 * j == n {
                    0.0
                } else if j < n / 2 + n % 2 {
                    base * j as f64
                } else {
                    base * (j as f64 - n as f64)
                }
            })
            .collect();
        Spectral { n, fft: Fft3::new(n), k }
    }

    fn forward(&self, real: &[f64]) -> Vec<C64> {
        let mut c: Vec<C64> = real.iter().map(|&v| C64::new(v, 0.0)).collect();
        self.fft.forward(&mut c);
        c
    }

    fn inverse_real(&self, mut c: Vec<C64>) -> Vec<f64> {
        self.fft.inverse(&mut c);
        c.into_iter().map(|v| v.re).collect()
    }

    #[inline]
    fn wave(&self, idx: usize) -> [f64; 3] {
        let n = self.n;
        [self.k[idx % n], self.k[(idx / n) % n], self.k[idx / (n * n)]]
    }

    fn derivative_of_hat(&self, hat: &[C64], axis: usize) -> Vec<f64> {
        let d: Vec<C64> = hat
            .iter()
            .enumerate()
            .map(|(i, v)| v * C64::new(0.0, self.wave(i)[axis]))
            .collect();
        self.inverse_real(d)
    }

    pub fn gradient(&self, scalar: &[f64]) -> [Vec<f64>; 3] {
        let hat = self.forward(scalar);
        [self.derivative_of_hat(&hat, 0), self.derivative_of_hat(&hat, 1), self.derivative_of_hat(&hat, 2)]
    }

    pub fn laplacian(&self, scalar: &[f64]) -> Vec<f64> {
        let hat = self.forward(scalar);
        let d: Vec<C64> = hat
            .iter()
            .enumerate()
            .map(|(i, v)| {
                let k = self.wave(i);
                v * -(k[0] * k[0] + k[1] * k[1] + k[2] * k[2])
            })
            .collect();
        self.inverse_real(d)
    }

    /// Spectral divergence of an interleaved 3-component sample array.
    pub fn divergence(&self, u: &[f64]) -> Vec<f64> {
        let mut acc = vec![C64::new(0.0, 0.0); self.n * self.n * self.n];
        for axis in 0..3 {
            let comp: Vec<f64> = u.iter().skip(axis).step_by(3).copied().collect();
            let hat = self.forward(&comp);
            for (i, (a, v)) in acc.iter_mut().zip(&hat).enumerate() {
                *a += v * C64::new(0.0, self.wave(i)[axis]);
            }
        }
        self.inverse_real(acc)
    }

    /// `grad[i][j] = ∂_j u^i` for an interleaved velocity sample array.
    pub fn velocity_gradient(&self, u: &[f64]) -> [[Vec<f64>; 3]; 3] {
        let comp = |c: usize| -> Vec<f64> { u.iter().skip(c).step_by(3).copied().collect() };
        [self.gradient(&comp(0)), self.gradient(&comp(1)), self.gradient(&comp(2))]
    }

    /// `∂i∂j(u^i u^j)` (summed), i.e. minus the pressure-Poisson right-hand side.
    pub fn double_divergence(&self, u: &[f64]) -> Vec<f64> {
        let mut acc = vec![C64::new(0.0, 0.0); self.n * self.n * self.n];
        for i in 0..3 {
            for j in i..3 {
                let prod: Vec<f64> = u.chunks_exact(3).map(|v| v[i] * v[j]).collect();
                let hat = self.forward(&prod);
                let mult = if i == j { 1.0 } else { 2.0 };
                for (idx, (a, v)) in acc.iter_mut().zip(&hat).enumerate() {
                    let k = self.wave(idx);
                    *a += v * (-mult * k[i] * k[j]);
                }
            }
        }
        self.inverse_real(acc)
    }

    /// Solves `-Δp = ∂i∂j(u^i u^j)` for one time slice with zero spatial mean.
    pub fn pressure(&self, u: &[f64]) -> Vec<f64> {
        let mut acc = vec![C64::new(0.0, 0.0); self.n * self.n * self.n];
        for i in 0..3 {
            for j in i..3 {
                let prod: Vec<f64> = u.chunks_exact(3).map(|v| v[i] * v[j]).collect();
                let hat = self.forward(&prod);
                let mult = if i == j { 1.0 } else { 2.0 };
                for (idx, (a, v)) in acc.iter_mut().zip(&hat).enumerate() {
                    let k = self.wave(idx);
                    *a += v * (mult * k[i] * k[j]);
                }
            }
        }
        // -|k|^2 p = k_i k_j Q_ij  =>  p = -k_i k_j Q_ij / |k|^2
        for (idx, a) in acc.iter_mut().enumerate() {
            let k = self.wave(idx);
            let k2 = k[0] * k[0] + k[1] * k[1] + k[2] * k[2];
            *a = if k2 == 0.0 { C64::new(0.0, 0.0) } else { -*a / k2 };
        }
        self.inverse_real(acc)
    }

    /// Pointwise momentum residual `(u·∇)u + ∇p` for one time slice, interleaved.
    pub fn momentum_residual(&self, u: &[f64], p: &[f64]) -> Vec<f64> {
        let g = self.velocity_gradient(u);
        let gp = self.gradient(p);
        let mut out = vec![0.0; u.len()];
        for (idx, v) in u.chunks_exact(3).enumerate() {
            for i in 0..3 {
                out[3 * idx + i] = v[0] * g[i][0][idx] + v[1] * g[i][1][idx] + v[2] * g[i][2][idx] + gp[i][idx];
            }
        }
        out
    }

    /// `-((u·∇)u + ∇p)·u`: the integrand of the advective flux form.
    pub fn advective_density(&self, u: &[f64], p: &[f64]) -> Vec<f64> {
        let r = self.momentum_residual(u, p);
        r.chunks_exact(3)
            .zip(u.chunks_exact(3))
            .map(|(r, v)| -(r[0] * v[0] + r[1] * v[1] + r[2] * v[2]))
            .collect()
    }
}

/// Recovers pressure for every time slice; any existing pressure is replaced.
pub fn solve_pressure(field: &VectorField3) -> Result<VectorField3> {
    let grid = *field.grid();
    let ops = Spectral::new(&grid);
    let mut p = Vec::with_capacity(grid.len() * field.times().n_samples());
    for k in 0..field.times().n_samples() {
        p.extend(ops.pressure(field.velocity_at(k)));
    }
    field.clone().with_pressure(p)
}

/// Max norm of the spectral divergence over all time slices.
pub fn max_divergence(field: &VectorField3) -> f64 {
    let ops = Spectral::new(field.grid());
    (0..field.times().n_samples())
        .map(|k| ops.divergence(field.velocity_at(k)).iter().fold(0.0, |m, v| f64::max(m, abs(*v))))
        .fold(0.0, f64::max)
}

/// Max norm of the momentum residual `(u·∇)u + ∇p` over all time slices.
pub fn max_momentum_residual(field: &VectorField3) -> Option<f64> {
    let ops = Spectral::new(field.grid());
    let mut worst: f64 = 0.0;
    for k in 0..field.times().n_samples() {
        let r = ops.momentum_residual(field.velocity_at(k), field.pressure_at(k)?);
        for v in r.chunks_exact(3) {
            worst = worst.max(sqrt(v[0] * v[0] + v[1] * v[1] + v[2] * v[2]));
        }
    }
    Some(worst)
}
