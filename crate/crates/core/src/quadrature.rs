//! Midpoint-rule quadrature on the grid, trapezoid in time, summed over a
//! fixed tree (per z-slab partial sums, then [`tree_sum`]).

use alloc::format;
use alloc::vec::Vec;

use crate::error::{Error, Result};
use crate::grid::{Grid3, TimeAxis};
use crate::reduce::{map_indexed, tree_sum};

/// `Σ_x values·weight·h³` for one time slice.
pub fn spatial_sum(grid: &Grid3, values: &[f64], weight: &[f64]) -> Result<f64> {
    if values.len() != grid.len() || weight.len() != grid.len() {
        return Err(Error::ShapeMismatch(format!(
            "values {} / weight {} vs grid {}",
            values.len(),
            weight.len(),
            grid.len()
        )));
    }
    let slab = grid.n() * grid.n();
    let partial: Vec<f64> = map_indexed(grid.n(), |z| {
        let lo = z * slab;
        let mut acc = 0.0;
        for i in lo..lo + slab {
            acc += values[i] * weight[i];
        }
        acc
    });
    Ok(tree_sum(&partial) * grid.cell_volume())
}

/// `∫∫ value·weight dx dt` over all time samples. On a steady axis the single
/// slice is integrated over `(0, 2T)`; callers carrying a cutoff factor in
/// time use the closed-form integrals of [`crate::cutoff::TemporalCutoff`].
pub fn integrate(grid: &Grid3, times: &TimeAxis, values: &[f64], weight: &[f64]) -> Result<f64> {
    let m = grid.len();
    let expected = m * times.n_samples();
    if values.len() != expected || weight.len() != expected {
        return Err(Error::ShapeMismatch(format!(
            "values {} / weight {} vs {} samples",
            values.len(),
            weight.len(),
            expected
        )));
    }
    if times.is_steady() {
        return Ok(spatial_sum(grid, values, weight)? * times.t_end());
    }
    let w = times.trapezoid_weights();
    let per: Result<Vec<f64>> = (0..times.n_samples())
        .map(|k| spatial_sum(grid, &values[k * m..(k + 1) * m], &weight[k * m..(k + 1) * m]).map(|s| s * w[k]))
        .collect();
    Ok(tree_sum(&per?))
}
