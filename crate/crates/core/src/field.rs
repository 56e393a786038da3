use alloc::format;
use alloc::vec::Vec;

use crate::error::{Error, Result};
use crate::grid::{Grid3, TimeAxis};

/// Sampled velocity (and optionally pressure) on a periodic grid.
///
/// `u` holds `3 * grid.len()` values per time sample in `(t, z, y, x, component)`
/// order; `p` holds `grid.len()` values per time sample.
#[derive(Debug, Clone, PartialEq)]
pub struct VectorField3 {
    grid: Grid3,
    times: TimeAxis,
    u: Vec<f64>,
    p: Option<Vec<f64>>,
}

impl VectorField3 {
    pub fn new(grid: Grid3, times: TimeAxis, u: Vec<f64>, p: Option<Vec<f64>>) -> Result<Self> {
        let expected = 3 * grid.len() * times.n_samples();
        if u.len() != expected {
            return Err(Error::ShapeMismatch(format!("velocity has {} samples, expected {expected}", u.len())));
        }
        if let Some(i) = u.iter().position(|v| !v.is_finite()) {
            return Err(Error::NonFinite(i));
        }
        if let Some(p) = &p {
            let expected = grid.len() * times.n_samples();
            if p.len() != expected {
                return Err(Error::ShapeMismatch(format!("pressure has {} samples, expected {expected}", p.len())));
            }
            if let Some(i) = p.iter().position(|v| !v.is_finite()) {
                return Err(Error::NonFinite(i));
            }
        }
        Ok(VectorField3 { grid, times, u, p })
    }

    pub fn zeros(grid: Grid3, times: TimeAxis) -> Self {
        let n = grid.len() * times.n_samples();
        VectorField3 { grid, times, u: alloc::vec![0.0; 3 * n], p: Some(alloc::vec![0.0; n]) }
    }

    pub fn grid(&self) -> &Grid3 {
        &self.grid
    }

    pub fn times(&self) -> &TimeAxis {
        &self.times
    }

    pub fn is_steady(&self) -> bool {
        self.times.is_steady()
    }

    pub fn velocity(&self) -> &[f64] {
        &self.u
    }

    pub fn pressure(&self) -> Option<&[f64]> {
        self.p.as_deref()
    }

    /// Velocity samples of time slice `k`.
    pub fn velocity_at(&self, k: usize) -> &[f64] {
        let m = 3 * self.grid.len();
        &self.u[k * m..(k + 1) * m]
    }

    pub fn pressure_at(&self, k: usize) -> Option<&[f64]> {
        let m = self.grid.len();
        self.p.as_ref().map(|p| &p[k * m..(k + 1) * m])
    }

    pub fn with_pressure(mut self, p: Vec<f64>) -> Result<Self> {
        let expected = self.grid.len() * self.times.n_samples();
        if p.len() != expected {
            return Err(Error::ShapeMismatch(format!("pressure has {} samples, expected {expected}", p.len())));
        }
        if let Some(i) = p.iter().position(|v| !v.is_finite()) {
            return Err(Error::NonFinite(i));
        }
        self.p = Some(p);
        Ok(self)
    }

    pub fn without_pressure(mut self) -> Self {
        self.p = None;
        self
    }

    /// Largest velocity magnitude over all samples.
    pub fn max_speed(&self) -> f64 {
        self.u
            .chunks_exact(3)
            .map(|v| crate::math::sqrt(v[0] * v[0] + v[1] * v[1] + v[2] * v[2]))
            .fold(0.0, f64::max)
    }

    /// Multiplies velocity by `lambda` and pressure by `lambda^2`.
    pub fn scaled(&self, lambda: f64) -> Self {
        VectorField3 {
            grid: self.grid,
            times: self.times,
            u: self.u.iter().map(|v| v * lambda).collect(),
            p: self.p.as_ref().map(|p| p.iter().map(|v| v * lambda * lambda).collect()),
        }
    }
}

/// Nonnegative sampled scalar (a dissipation-rate or energy density).
#[derive(Debug, Clone, PartialEq)]
pub struct ScalarDensity {
    grid: Grid3,
    times: TimeAxis,
    d: Vec<f64>,
}

impl ScalarDensity {
    pub fn new(grid: Grid3, times: TimeAxis, d: Vec<f64>) -> Result<Self> {
        let expected = grid.len() * times.n_samples();
        if d.len() != expected {
            return Err(Error::ShapeMismatch(format!("density has {} samples, expected {expected}", d.len())));
        }
        for (index, &value) in d.iter().enumerate() {
            if !value.is_finite() {
                return Err(Error::NonFinite(index));
            }
            if value < 0.0 {
                return Err(Error::NegativeDensity { index, value });
            }
        }
        Ok(ScalarDensity { grid, times, d })
    }

    pub fn grid(&self) -> &Grid3 {
        &self.grid
    }

    pub fn times(&self) -> &TimeAxis {
        &self.times
    }

    pub fn values(&self) -> &[f64] {
        &self.d
    }

    pub fn values_at(&self, k: usize) -> &[f64] {
        let m = self.grid.len();
        &self.d[k * m..(k + 1) * m]
    }

    pub fn scaled(&self, lambda: f64) -> Result<Self> {
        Self::new(self.grid, self.times, self.d.iter().map(|v| v * lambda).collect())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn density_rejects_negative_and_nan() {
        let g = Grid3::new(8, 1.0).unwrap();
        let t = TimeAxis::steady(1.0).unwrap();
        let mut d = alloc::vec![1.0; g.len()];
        d[5] = -1e-3;
        assert!(matches!(ScalarDensity::new(g, t, d.clone()), Err(Error::NegativeDensity { index: 5, .. })));
        d[5] = f64::NAN;
        assert_eq!(ScalarDensity::new(g, t, d), Err(Error::NonFinite(5)));
    }

    #[test]
    fn field_rejects_wrong_shape() {
        let g = Grid3::new(8, 1.0).unwrap();
        let t = TimeAxis::steady(1.0).unwrap();
        assert!(VectorField3::new(g, t, alloc::vec![0.0; 10], None).is_err());
    }
}
