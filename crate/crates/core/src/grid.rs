use alloc::format;
use alloc::vec::Vec;

use crate::error::{Error, Result};
use crate::math::{ceil, floor};

/// Uniform periodic grid on the cube `[origin, origin + box_length)^3`.
///
/// Node `(ix, iy, iz)` sits at `origin + (ix, iy, iz) * h`; samples are stored
/// with `x` fastest, i.e. linear index `(iz * n + iy) * n + ix`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Grid3 {
    n: usize,
    box_length: f64,
    origin: [f64; 3],
}

impl Grid3 {
    /// Cubic periodic grid centred on the world origin.
    pub fn new(n: usize, box_length: f64) -> Result<Self> {
        let half = 0.5 * box_length;
        Self::with_origin(n, box_length, [-half, -half, -half])
    }

    pub fn with_origin(n: usize, box_length: f64, origin: [f64; 3]) -> Result<Self> {
        if n < 8 {
            return Err(Error::GridTooCoarse(n));
        }
        if !(box_length > 0.0 && box_length.is_finite()) {
            return Err(Error::InvalidParameter(format!("box_length must be positive, got {box_length}")));
        }
        if origin.iter().any(|o| !o.is_finite()) {
            return Err(Error::InvalidParameter(format!("non-finite origin {origin:?}")));
        }
        Ok(Grid3 { n, box_length, origin })
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn box_length(&self) -> f64 {
        self.box_length
    }

    pub fn origin(&self) -> [f64; 3] {
        self.origin
    }

    pub fn spacing(&self) -> f64 {
        self.box_length / self.n as f64
    }

    pub fn cell_volume(&self) -> f64 {
        let h = self.spacing();
        h * h * h
    }

    pub fn len(&self) -> usize {
        self.n * self.n * self.n
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    #[inline]
    pub fn index(&self, ix: usize, iy: usize, iz: usize) -> usize {
        (iz * self.n + iy) * self.n + ix
    }

    #[inline]
    pub fn coord(&self, axis: usize, i: usize) -> f64 {
        self.origin[axis] + i as f64 * self.spacing()
    }

    #[inline]
    pub fn point(&self, ix: usize, iy: usize, iz: usize) -> [f64; 3] {
        [self.coord(0, ix), self.coord(1, iy), self.coord(2, iz)]
    }

    /// Point of linear index `idx`.
    pub fn point_of(&self, idx: usize) -> [f64; 3] {
        let ix = idx % self.n;
        let iy = (idx / self.n) % self.n;
        let iz = idx / (self.n * self.n);
        self.point(ix, iy, iz)
    }

    /// Inclusive node range `[first, last]` along `axis` covering `[lo, hi]`;
    /// fails when the interval leaves the box (no periodic wrap).
    pub fn node_range(&self, axis: usize, lo: f64, hi: f64) -> Result<(usize, usize)> {
        let h = self.spacing();
        let o = self.origin[axis];
        let last_node = o + (self.n - 1) as f64 * h;
        if lo < o || hi > last_node {
            return Err(Error::EscapesBox(format!(
                "[{lo}, {hi}] along axis {axis} not inside [{o}, {last_node}]"
            )));
        }
        let first = ceil((lo - o) / h).max(0.0) as usize;
        let last = (floor((hi - o) / h) as usize).min(self.n - 1);
        Ok((first, last))
    }

    /// Same grid shifted by half a cell in `x` and `y`.
    pub fn half_offset_xy(&self) -> Self {
        let h = 0.5 * self.spacing();
        Grid3 { origin: [self.origin[0] + h, self.origin[1] + h, self.origin[2]], ..*self }
    }
}

/// Uniform sampling of `[0, 2T]`; a single sample marks a steady field.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TimeAxis {
    t_end: f64,
    n_samples: usize,
}

impl TimeAxis {
    pub fn new(t_end: f64, n_samples: usize) -> Result<Self> {
        if !(t_end > 0.0 && t_end.is_finite()) {
            return Err(Error::InvalidParameter(format!("t_end must be positive, got {t_end}")));
        }
        if n_samples == 0 {
            return Err(Error::InvalidParameter("time axis needs at least one sample".into()));
        }
        Ok(TimeAxis { t_end, n_samples })
    }

    /// Steady axis over `(0, 2T)`.
    pub fn steady(t_half: f64) -> Result<Self> {
        Self::new(2.0 * t_half, 1)
    }

    pub fn t_end(&self) -> f64 {
        self.t_end
    }

    /// The half-length `T` of `(0, 2T)`.
    pub fn t_half(&self) -> f64 {
        0.5 * self.t_end
    }

    pub fn n_samples(&self) -> usize {
        self.n_samples
    }

    pub fn is_steady(&self) -> bool {
        self.n_samples == 1
    }

    pub fn dt(&self) -> f64 {
        if self.is_steady() {
            self.t_end
        } else {
            self.t_end / (self.n_samples - 1) as f64
        }
    }

    pub fn time(&self, k: usize) -> f64 {
        if self.is_steady() {
            self.t_half()
        } else {
            k as f64 * self.dt()
        }
    }

    /// Trapezoid weights; a steady axis has no sample weights (time integrals
    /// of the cutoff factor are taken in closed form instead).
    pub fn trapezoid_weights(&self) -> Vec<f64> {
        if self.is_steady() {
            return alloc::vec![1.0];
        }
        let dt = self.dt();
        (0..self.n_samples)
            .map(|k| if k == 0 || k + 1 == self.n_samples { 0.5 * dt } else { dt })
            .collect()
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::math::PI;

    #[test]
    fn spacing_matches_definition() {
        let g = Grid3::new(8, 2.0 * PI).unwrap();
        assert!((g.spacing() - PI / 4.0).abs() < 1e-15);
        let g = Grid3::new(64, 2.0 * PI).unwrap();
        assert!((g.spacing() - 0.09817477042468103).abs() < 1e-15);
    }

    #[test]
    fn rejects_coarse_grid() {
        assert_eq!(Grid3::new(7, 2.0 * PI), Err(Error::GridTooCoarse(7)));
    }

    #[test]
    fn node_range_rejects_wrap() {
        let g = Grid3::new(16, 2.0).unwrap();
        assert_eq!(g.node_range(0, -0.5, 0.5).unwrap(), (4, 12));
        assert!(g.node_range(0, -1.2, 0.0).is_err());
        assert!(g.node_range(0, 0.0, 0.99).is_err());
    }

    #[test]
    fn trapezoid_weights_sum_to_length() {
        let t = TimeAxis::new(2.0, 11).unwrap();
        let s: f64 = t.trapezoid_weights().iter().sum();
        assert!((s - 2.0).abs() < 1e-14);
        assert!(TimeAxis::steady(1.0).unwrap().is_steady());
    }
}
