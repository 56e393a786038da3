//! Ensemble averages over covers and the inequalities built on them: the
//! two-sided dissipation bounds, the cascade verdict, scale locality and the
//! tube scans.
//!
//! Averages are per unit mass and time:
//! `e_R = (1/(n T R³)) Σ_i ∫∫ ½|u|² phi_i^δ`, likewise `Φ_R` and `ε_R`, and
//! `e_0`, `ε_0` use the integral cutoff with `R0` in place of `R`.

use alloc::format;
use alloc::string::String;
use alloc::vec::Vec;

use crate::cover::{Cover, LatticeDecomposition};
use crate::cutoff::{CutoffShape, SpatialCutoff, TemporalCutoff};
use crate::error::{Error, Result};
use crate::field::ScalarDensity;
use crate::functional::{dissipation_pairing, element_pairings, ElementPairings, Estimate, Source};
use crate::grid::Grid3;
use crate::math::{abs, powf, powi, sqrt};
use crate::reduce::{map_indexed, tree_sum};

/// Cube of the sublattice count per axis in the lattice argument; the upper
/// dissipation bound is `K = 8³ K2`.
pub const LATTICE_FACTOR: f64 = 512.0;

/// Samples the cutoff of every cover ball: interior when `B(x_i, R) ⊂ B(0, R0)`,
/// boundary-cone otherwise.
pub fn cover_cutoffs(grid: &Grid3, cover: &Cover, min_cells: f64) -> Result<Vec<SpatialCutoff>> {
    let (r, r0) = (cover.radius(), cover.r0());
    let built: Vec<Result<SpatialCutoff>> = map_indexed(cover.len(), |i| {
        let shape = CutoffShape::for_cover_ball(cover.centers()[i], r, r0)?;
        SpatialCutoff::sample(grid, shape, min_cells)
    });
    built.into_iter().collect()
}

/// Integral-scale quantities `e_0`, `ε_0` (and the matching flux).
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Baseline {
    pub r0: f64,
    pub t_half: f64,
    pub pairings: ElementPairings,
    pub e0: Estimate,
    pub eps0: Estimate,
    pub phi0: Estimate,
}

impl Baseline {
    /// `τ0`, undefined while `ε_0` does not exceed its quadrature error.
    pub fn tau0(&self) -> Option<f64> {
        if self.eps0.value > self.eps0.error {
            taylor_scale(self.e0.value, self.eps0.value, self.r0, self.t_half)
        } else {
            None
        }
    }
}

pub fn baseline(source: &Source, eta: &TemporalCutoff, r0: f64) -> Result<Baseline> {
    let psi0 = SpatialCutoff::sample(source.grid(), CutoffShape::integral(r0), source.min_cells())?;
    baseline_with(source, eta, &psi0)
}

pub fn baseline_with(source: &Source, eta: &TemporalCutoff, psi0: &SpatialCutoff) -> Result<Baseline> {
    let r0 = psi0.shape().radius;
    let p = element_pairings(source, eta, psi0)?;
    let k = 1.0 / (eta.t_half() * powi(r0, 3));
    Ok(Baseline {
        r0,
        t_half: eta.t_half(),
        pairings: p,
        e0: p.energy.scaled(k),
        eps0: p.dissipation.scaled(k),
        phi0: p.flux.scaled(k),
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Quantity {
    Energy,
    Flux,
    Anomalous,
}

#[derive(Debug, Clone, PartialEq)]
pub struct EnsembleAverage {
    pub radius: f64,
    pub n: usize,
    pub e_r: Estimate,
    pub phi_r: Estimate,
    pub eps_r: Estimate,
    /// `(1/(n T R³)) Σ_i ∫∫ ½|u|² ∂t phi_i`, so that `Φ_R = ε_R - time_r`.
    pub time_r: Estimate,
    pub elements: Vec<ElementPairings>,
}

impl EnsembleAverage {
    pub fn get(&self, q: Quantity) -> Estimate {
        match q {
            Quantity::Energy => self.e_r,
            Quantity::Flux => self.phi_r,
            Quantity::Anomalous => self.eps_r,
        }
    }
}

/// Averages every pairing over the cover; `cutoffs` must come from
/// [`cover_cutoffs`] for the same cover.
pub fn ensemble_average(
    source: &Source,
    eta: &TemporalCutoff,
    cover: &Cover,
    cutoffs: &[SpatialCutoff],
) -> Result<EnsembleAverage> {
    if cutoffs.len() != cover.len() {
        return Err(Error::ShapeMismatch(format!("{} cutoffs for {} cover balls", cutoffs.len(), cover.len())));
    }
    let results: Vec<Result<ElementPairings>> = map_indexed(cutoffs.len(), |i| element_pairings(source, eta, &cutoffs[i]));
    let elements: Vec<ElementPairings> = results.into_iter().collect::<Result<_>>()?;
    let k = 1.0 / (cover.len() as f64 * eta.t_half() * powi(cover.radius(), 3));
    let pick = |f: fn(&ElementPairings) -> Estimate| {
        let items: Vec<Estimate> = elements.iter().map(f).collect();
        Estimate::sum(&items).scaled(k)
    };
    Ok(EnsembleAverage {
        radius: cover.radius(),
        n: cover.len(),
        e_r: pick(|e| e.energy),
        phi_r: pick(|e| e.flux),
        eps_r: pick(|e| e.dissipation),
        time_r: pick(|e| e.time),
        elements,
    })
}

/// Per-scale record.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EnsembleReport {
    pub radius: f64,
    pub cover_id: u64,
    pub n: usize,
    pub e_r: Estimate,
    pub phi_r: Estimate,
    pub eps_r: Estimate,
    pub time_r: Estimate,
    pub e0: Estimate,
    pub eps0: Estimate,
    pub tau0: Option<f64>,
}

impl EnsembleReport {
    pub fn new(avg: &EnsembleAverage, base: &Baseline, cover_id: u64) -> Self {
        EnsembleReport {
            radius: avg.radius,
            cover_id,
            n: avg.n,
            e_r: avg.e_r,
            phi_r: avg.phi_r,
            eps_r: avg.eps_r,
            time_r: avg.time_r,
            e0: base.e0,
            eps0: base.eps0,
            tau0: base.tau0(),
        }
    }
}

/// `τ0 = (R0² e0 / (T ε0))^{1/2}`; `None` unless `ε0 > 0` and `e0 >= 0`.
pub fn taylor_scale(e0: f64, eps0: f64, r0: f64, t: f64) -> Option<f64> {
    if !(eps0 > 0.0) || !(e0 >= 0.0) || !(t > 0.0) {
        return None;
    }
    Some(sqrt(r0 * r0 * e0 / (t * eps0)))
}

/// Pointwise facts behind the two-sided bounds, checked on grid nodes:
/// `Σ psi_i >= psi0`, `psi_i <= psi0`, and at most `K2` positive `psi_i`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PartitionCheck {
    pub min_excess: f64,
    pub max_count: usize,
    pub dominated: bool,
    /// `max (Σ psi_i^δ - K2 psi0^δ)`.
    pub max_power_excess: f64,
}

impl PartitionCheck {
    pub fn holds(&self, k2: u32) -> bool {
        self.min_excess >= -1e-12 && self.dominated && self.max_count <= k2 as usize && self.max_power_excess <= 1e-12
    }
}

pub fn partition_check(cutoffs: &[SpatialCutoff], psi0: &SpatialCutoff, delta: f64, k2: u32) -> PartitionCheck {
    let grid = psi0.grid();
    let m = grid.len();
    let mut base = alloc::vec![0.0; m];
    for (l, p) in psi0.psi_samples().iter().enumerate() {
        base[psi0.global_index(l)] = *p;
    }
    let mut sum = alloc::vec![0.0; m];
    let mut sum_delta = alloc::vec![0.0; m];
    let mut count = alloc::vec![0u32; m];
    let mut dominated = true;
    for c in cutoffs {
        for (l, p) in c.psi_samples().iter().enumerate() {
            if *p > 0.0 {
                let g = c.global_index(l);
                sum[g] += p;
                sum_delta[g] += powf(*p, delta);
                count[g] += 1;
                if *p > base[g] * (1.0 + 1e-12) + 1e-15 {
                    dominated = false;
                }
            }
        }
    }
    let mut min_excess = f64::INFINITY;
    let mut max_power_excess = f64::NEG_INFINITY;
    for g in 0..m {
        if base[g] > 0.0 {
            min_excess = min_excess.min(sum[g] - base[g]);
        }
        max_power_excess = max_power_excess.max(sum_delta[g] - k2 as f64 * powf(base[g], delta));
    }
    PartitionCheck { min_excess, max_count: count.iter().copied().max().unwrap_or(0) as usize, dominated, max_power_excess }
}

/// Outcome of the two-sided bound `ε_0/K1 <= ε_R <= 8³ K2 ε_0` for one cover,
/// plus the family inequality `Σ_{i∈F} ∫∫ d phi_i <= T R0³ ε_0`.
#[derive(Debug, Clone, PartialEq)]
pub struct LemmaCheck {
    pub radius: f64,
    pub n: usize,
    pub eps_r: f64,
    pub eps0: f64,
    pub lower: f64,
    pub upper: f64,
    pub tolerance: f64,
    pub lower_ok: bool,
    pub upper_ok: bool,
    /// The lower bound with `K1 ε_0` in place of `ε_0/K1`.
    pub printed_lower_ok: bool,
    pub families: usize,
    /// `max_F Σ_{i∈F} ∫∫ d phi_i / (T R0³ ε_0)`.
    pub family_ratio_max: f64,
    pub family_ok: bool,
    pub disjoint: bool,
}

impl LemmaCheck {
    pub fn lower_margin(&self) -> f64 {
        self.eps_r - self.lower
    }

    pub fn upper_margin(&self) -> f64 {
        self.upper - self.eps_r
    }

    pub fn holds(&self) -> bool {
        self.lower_ok && self.upper_ok && self.family_ok && self.disjoint
    }
}

/// Measure-level bound check for a nonnegative density; `raw0 = ∫∫ d phi_0`.
pub fn lemma_bounds_check(
    density: &ScalarDensity,
    eta: &TemporalCutoff,
    cover: &Cover,
    cutoffs: &[SpatialCutoff],
    decomposition: &LatticeDecomposition,
    psi0: &SpatialCutoff,
    rel_tol: f64,
) -> Result<LemmaCheck> {
    if cutoffs.len() != cover.len() {
        return Err(Error::ShapeMismatch(format!("{} cutoffs for {} cover balls", cutoffs.len(), cover.len())));
    }
    let results: Vec<Result<Estimate>> = map_indexed(cutoffs.len(), |i| dissipation_pairing(density, eta, &cutoffs[i]));
    let eps: Vec<f64> = results.into_iter().map(|r| r.map(|e| e.value)).collect::<Result<_>>()?;
    let raw0 = dissipation_pairing(density, eta, psi0)?.value;
    let t = eta.t_half();
    let (r, r0) = (cover.radius(), cover.r0());
    let eps_r = tree_sum(&eps) / (cover.len() as f64 * t * powi(r, 3));
    let eps0 = raw0 / (t * powi(r0, 3));
    let tolerance = rel_tol * eps0.max(eps_r);
    let lower = eps0 / cover.k1() as f64;
    let upper = LATTICE_FACTOR * cover.k2() as f64 * eps0;
    let mut family_ratio_max: f64 = 0.0;
    let mut family_ok = true;
    for fam in &decomposition.families {
        let vals: Vec<f64> = fam.iter().map(|&i| eps[i]).collect();
        let s = tree_sum(&vals);
        if s > raw0 + rel_tol * abs(raw0) {
            family_ok = false;
        }
        if raw0 > 0.0 {
            family_ratio_max = family_ratio_max.max(s / raw0);
        }
    }
    Ok(LemmaCheck {
        radius: r,
        n: cover.len(),
        eps_r,
        eps0,
        lower,
        upper,
        tolerance,
        lower_ok: eps_r >= lower - tolerance,
        upper_ok: eps_r <= upper + tolerance,
        printed_lower_ok: eps_r >= cover.k1() as f64 * eps0 - tolerance,
        families: decomposition.families.len(),
        family_ratio_max,
        family_ok,
        disjoint: decomposition.disjoint(),
    })
}

/// Which reading of the cascade constants to use.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum ConstantsMode {
    /// `c = √(K1/(C0 K2))`, `c0 = K1 (1 - γ²)`, `c1 = K [1 + (K1/K) γ²]`.
    AsPrinted,
    /// `c = (C0 K2 K1)^{-1/2}`, `c0 = (1 - γ²)/K1`, `c1 = K [1 + γ²/(K K1)]`,
    /// which follow from the lower bound `ε_0/K1 <= ε_R`.
    #[default]
    AsDerived,
}

impl ConstantsMode {
    pub fn name(&self) -> &'static str {
        match self {
            ConstantsMode::AsPrinted => "as-printed",
            ConstantsMode::AsDerived => "as-derived",
        }
    }

    pub fn parse(s: &str) -> Result<Self> {
        match s {
            "as-printed" => Ok(ConstantsMode::AsPrinted),
            "as-derived" => Ok(ConstantsMode::AsDerived),
            _ => Err(Error::InvalidParameter(format!("unknown constants mode '{s}'"))),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct VerdictConstants {
    pub c: f64,
    pub c0: f64,
    pub c1: f64,
    /// `K = 8³ K2`.
    pub k: f64,
}

impl VerdictConstants {
    pub fn new(gamma: f64, k1: u32, k2: u32, c0_time: f64, mode: ConstantsMode) -> Result<Self> {
        if !(gamma > 0.0 && gamma < 1.0) {
            return Err(Error::InvalidParameter(format!("gamma must lie in (0, 1), got {gamma}")));
        }
        if k1 == 0 || k2 == 0 || !(c0_time > 0.0) {
            return Err(Error::InvalidParameter("K1, K2 and C0 must be positive".into()));
        }
        let (k1, k2) = (k1 as f64, k2 as f64);
        let k = LATTICE_FACTOR * k2;
        let g2 = gamma * gamma;
        Ok(match mode {
            ConstantsMode::AsPrinted => {
                VerdictConstants { c: sqrt(k1 / (c0_time * k2)), c0: k1 * (1.0 - g2), c1: k * (1.0 + k1 / k * g2), k }
            }
            ConstantsMode::AsDerived => VerdictConstants {
                c: 1.0 / sqrt(c0_time * k2 * k1),
                c0: (1.0 - g2) / k1,
                c1: k * (1.0 + g2 / (k * k1)),
                k,
            },
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct VerdictParams {
    pub gamma: f64,
    pub k1: u32,
    pub k2: u32,
    pub c0_time: f64,
    pub mode: ConstantsMode,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ScaleBound {
    pub radius: f64,
    pub phi_r: f64,
    pub lower: f64,
    pub upper: f64,
    pub holds: bool,
}

#[derive(Debug, Clone, PartialEq)]
pub struct CascadeVerdict {
    pub params: VerdictParams,
    pub constants: VerdictConstants,
    pub e0: f64,
    pub eps0: f64,
    pub tau0: Option<f64>,
    /// `γ c R0`.
    pub threshold: f64,
    pub condition_holds: bool,
    /// `ε_0` does not exceed its quadrature error; the condition cannot fire.
    pub vacuous: bool,
    pub scales: Vec<ScaleBound>,
}

impl CascadeVerdict {
    pub fn all_bounds_hold(&self) -> bool {
        self.scales.iter().all(|s| s.holds)
    }
}

/// Evaluates `τ0 < γ c R0` and `c0 ε_0 <= Φ_R <= c1 ε_0` at every reported scale.
pub fn cascade_verdict(base: &Baseline, reports: &[EnsembleReport], params: VerdictParams) -> Result<CascadeVerdict> {
    let eps0 = base.eps0.value;
    if !(eps0 > 0.0) {
        return Err(Error::InvalidParameter(format!("cascade verdict needs ε_0 > 0, got {eps0}")));
    }
    let constants = VerdictConstants::new(params.gamma, params.k1, params.k2, params.c0_time, params.mode)?;
    let tau0 = base.tau0();
    let threshold = params.gamma * constants.c * base.r0;
    let slack = 1e-12 * eps0;
    let scales = reports
        .iter()
        .map(|r| {
            let (lower, upper) = (constants.c0 * eps0, constants.c1 * eps0);
            let phi = r.phi_r.value;
            ScaleBound { radius: r.radius, phi_r: phi, lower, upper, holds: phi >= lower - slack && phi <= upper + slack }
        })
        .collect();
    Ok(CascadeVerdict {
        params,
        constants,
        e0: base.e0.value,
        eps0,
        tau0,
        threshold,
        condition_holds: tau0.is_some_and(|t| t < threshold),
        vacuous: tau0.is_none(),
        scales,
    })
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LocalityPair {
    pub big: f64,
    pub small: f64,
    /// `R³Φ_R / (r³Φ_r)`.
    pub ratio: f64,
    pub lower: f64,
    pub upper: f64,
    pub within: bool,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DyadicRow {
    pub k: i32,
    pub lower: f64,
    pub upper: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct LocalityReport {
    pub pairs: Vec<LocalityPair>,
    pub skipped: Vec<(f64, f64, String)>,
    pub dyadic: Vec<DyadicRow>,
}

impl LocalityReport {
    pub fn all_within(&self) -> bool {
        self.pairs.iter().all(|p| p.within)
    }
}

/// Ratios `Φ~_R/Φ~_r` (with `Φ~_R = R³Φ_R`) for every pair `R > r` of the
/// given `(R, Φ_R)` values, against `[(c0/c1)(R/r)³, (c1/c0)(R/r)³]`, and the
/// dyadic bound table for `k = -1, ..., -k_max`.
pub fn locality_ratios(scales: &[(f64, f64)], c0: f64, c1: f64, k_max: u32) -> LocalityReport {
    let mut pairs = Vec::new();
    let mut skipped = Vec::new();
    for &(big, phi_big) in scales {
        for &(small, phi_small) in scales {
            if !(big > small) {
                continue;
            }
            if phi_small == 0.0 {
                skipped.push((big, small, String::from("zero flux at the smaller scale")));
                continue;
            }
            let q = powi(big / small, 3);
            let ratio = q * phi_big / phi_small;
            let (lower, upper) = (c0 / c1 * q, c1 / c0 * q);
            let tol = 1e-12 * ratio.abs();
            pairs.push(LocalityPair { big, small, ratio, lower, upper, within: ratio >= lower - tol && ratio <= upper + tol });
        }
    }
    let dyadic = (1..=k_max as i32)
        .map(|j| {
            let q = libm::exp2(3.0 * j as f64);
            DyadicRow { k: -j, lower: c0 / c1 * q, upper: c1 / c0 * q }
        })
        .collect();
    LocalityReport { pairs, skipped, dyadic }
}

#[derive(Debug, Clone, PartialEq)]
pub struct TubeScan {
    pub radii: Vec<f64>,
    /// `ε_{0,R}` per radius (unnormalized pairing).
    pub values: Vec<Estimate>,
    pub max_deviation: f64,
    /// Largest `err_i + err_j` over pairs.
    pub estimate: f64,
}

impl TubeScan {
    pub fn within_estimate(&self) -> bool {
        self.max_deviation <= self.estimate
    }

    pub fn max_relative_deviation(&self) -> f64 {
        let scale = self.values.iter().map(|v| abs(v.value)).fold(0.0, f64::max);
        if scale > 0.0 {
            self.max_deviation / scale
        } else {
            self.max_deviation
        }
    }
}

/// `ε_{0,R}` for interior cutoffs about the origin at each radius.
pub fn tube_constancy_scan(source: &Source, eta: &TemporalCutoff, radii: &[f64]) -> Result<TubeScan> {
    if radii.windows(2).any(|w| !(w[1] > w[0])) {
        return Err(Error::InvalidParameter("radii must increase".into()));
    }
    let mut values = Vec::with_capacity(radii.len());
    for &r in radii {
        let psi = SpatialCutoff::sample(source.grid(), CutoffShape::interior([0.0; 3], r), source.min_cells())?;
        values.push(element_pairings(source, eta, &psi)?.dissipation);
    }
    let (mut max_deviation, mut estimate) = (0.0f64, 0.0f64);
    for i in 0..values.len() {
        for j in i + 1..values.len() {
            max_deviation = max_deviation.max(abs(values[i].value - values[j].value));
            estimate = estimate.max(values[i].error + values[j].error);
        }
    }
    Ok(TubeScan { radii: radii.to_vec(), values, max_deviation, estimate })
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SmallScaleRow {
    pub r0: f64,
    pub e0: f64,
    pub eps0: f64,
    pub tau0: Option<f64>,
    pub threshold: f64,
    pub holds: bool,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SmallScaleSearch {
    pub rows: Vec<SmallScaleRow>,
    /// Largest listed `R0` from which the condition holds at every smaller listed `R0`.
    pub r0_star: Option<f64>,
}

/// Scans decreasing integral scales for the cascade condition `τ0 < γ c R0`.
pub fn small_r0_search(
    source: &Source,
    eta: &TemporalCutoff,
    r0_list: &[f64],
    params: VerdictParams,
) -> Result<SmallScaleSearch> {
    if r0_list.windows(2).any(|w| !(w[1] < w[0])) {
        return Err(Error::InvalidParameter("R0 list must decrease".into()));
    }
    let constants = VerdictConstants::new(params.gamma, params.k1, params.k2, params.c0_time, params.mode)?;
    let mut rows = Vec::with_capacity(r0_list.len());
    for &r0 in r0_list {
        let b = baseline(source, eta, r0)?;
        let tau0 = b.tau0();
        let threshold = params.gamma * constants.c * r0;
        rows.push(SmallScaleRow {
            r0,
            e0: b.e0.value,
            eps0: b.eps0.value,
            tau0,
            threshold,
            holds: tau0.is_some_and(|t| t < threshold),
        });
    }
    let mut r0_star = None;
    for row in rows.iter().rev() {
        if row.holds {
            r0_star = Some(row.r0);
        } else {
            break;
        }
    }
    Ok(SmallScaleSearch { rows, r0_star })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn taylor_scale_cases() {
        assert_eq!(taylor_scale(1.5, 1.5, 2.0, 4.0), Some(1.0));
        assert_eq!(taylor_scale(0.0, 1.0, 1.0, 1.0), Some(0.0));
        assert_eq!(taylor_scale(2.0, 1.0, 1.0, 8.0), Some(0.5));
        assert_eq!(taylor_scale(1.0, 0.0, 1.0, 1.0), None);
        assert_eq!(taylor_scale(1.0, -1.0, 1.0, 1.0), None);
    }

    #[test]
    fn printed_constants_match_hand_arithmetic() {
        let k = VerdictConstants::new(0.5, 2, 4, 8.0, ConstantsMode::AsPrinted).unwrap();
        assert!((k.c - 0.25).abs() < 1e-15);
        assert!((k.c0 - 1.5).abs() < 1e-15);
        assert_eq!(k.k, 2048.0);
        assert!((k.c1 - 2048.5).abs() < 1e-12);
    }

    #[test]
    fn derived_constants_match_hand_arithmetic() {
        let k = VerdictConstants::new(0.5, 2, 4, 8.0, ConstantsMode::AsDerived).unwrap();
        assert!((k.c - 0.125).abs() < 1e-15);
        assert!((k.c0 - 0.375).abs() < 1e-15);
        assert!((k.c1 - 2048.0 * (1.0 + 0.25 / 4096.0)).abs() < 1e-12);
    }

    #[test]
    fn lower_constant_degenerates_as_gamma_approaches_one() {
        let a = VerdictConstants::new(1.0 - 1e-9, 2, 4, 8.0, ConstantsMode::AsDerived).unwrap();
        assert!(a.c0 < 1e-8);
        assert!(VerdictConstants::new(1.0, 2, 4, 8.0, ConstantsMode::AsDerived).is_err());
    }

    #[test]
    fn equal_fluxes_give_cubed_ratios() {
        let rep = locality_ratios(&[(1.0, 3.0), (0.5, 3.0)], 0.375, 2048.0, 3);
        assert_eq!(rep.pairs.len(), 1);
        assert_eq!(rep.pairs[0].ratio, 8.0);
        assert!(rep.pairs[0].within);
        let last = rep.dyadic.last().unwrap();
        assert_eq!(last.k, -3);
        assert!((last.lower - 0.375 / 2048.0 * 512.0).abs() < 1e-12);
        assert!((last.upper - 2048.0 / 0.375 * 512.0).abs() < 1e-6);
    }

    #[test]
    fn zero_small_scale_flux_is_skipped() {
        let rep = locality_ratios(&[(1.0, 3.0), (0.5, 0.0)], 0.375, 2048.0, 1);
        assert!(rep.pairs.is_empty());
        assert_eq!(rep.skipped.len(), 1);
    }

    #[test]
    fn mode_names_round_trip() {
        for m in [ConstantsMode::AsPrinted, ConstantsMode::AsDerived] {
            assert_eq!(ConstantsMode::parse(m.name()).unwrap(), m);
        }
        assert!(ConstantsMode::parse("literal").is_err());
    }
}
