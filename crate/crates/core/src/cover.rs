//! `(K1, K2)`-covers of the integral ball `B(0, R0)` by balls of radius `R`.
//!
//! A cover holds `(R0/R)^3 <= n <= K1 (R0/R)^3` centres in `B(0, R0)` such
//! that the balls `B(x_i, R)` cover `B(0, R0)` and no point of `B(0, R0)` lies
//! in more than `K2` of the doubled balls `B(x_i, 2R)`.

use alloc::collections::BTreeMap;
use alloc::format;
use alloc::string::String;
use alloc::vec::Vec;
use core::sync::atomic::{AtomicUsize, Ordering};

use rand_chacha::ChaCha8Rng;
use rand_core::SeedableRng;

use crate::error::{Error, Result};
use crate::generators::unit;
use crate::math::{abs, ceil, floor, norm, powi, round, scale, sqrt, PI};
use crate::reduce::map_indexed;
use crate::Vec3;

/// Lattice spacing factor relative to the covering spacing `2R/√3`.
pub const SPACING_SAFETY: f64 = 0.95;

/// Largest jitter (as a fraction of `R`) for which coverage holds by construction.
pub const GUARANTEED_JITTER: f64 = 1.0 - SPACING_SAFETY;

pub const MIN_PROBES: usize = 100_000;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CoverParams {
    pub r0: f64,
    pub r: f64,
    pub k1: u32,
    pub k2: u32,
    pub jitter: f64,
    pub seed: u64,
}

impl Default for CoverParams {
    fn default() -> Self {
        CoverParams { r0: 1.0, r: 1.0, k1: 20, k2: 40, jitter: 0.0, seed: 0 }
    }
}

impl CoverParams {
    pub fn new(r0: f64, r: f64) -> Self {
        CoverParams { r0, r, ..Default::default() }
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.r0 > 0.0 && self.r0.is_finite()) {
            return Err(Error::InvalidParameter(format!("R0 must be positive, got {}", self.r0)));
        }
        if !(self.r > 0.0 && self.r <= self.r0 * (1.0 + 1e-12)) {
            return Err(Error::InvalidParameter(format!("need 0 < R <= R0, got R = {}, R0 = {}", self.r, self.r0)));
        }
        if self.k1 == 0 || self.k2 == 0 {
            return Err(Error::InvalidParameter("K1 and K2 must be positive".into()));
        }
        if !(0.0..=0.2).contains(&self.jitter) {
            return Err(Error::InvalidParameter(format!("jitter must lie in [0, 0.2], got {}", self.jitter)));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Cover {
    r0: f64,
    r: f64,
    k1: u32,
    k2: u32,
    centers: Vec<Vec3>,
    verified: bool,
}

impl Cover {
    /// Wraps explicit centres; the result is unverified.
    pub fn new(r0: f64, r: f64, k1: u32, k2: u32, centers: Vec<Vec3>) -> Result<Self> {
        CoverParams { r0, r, k1, k2, jitter: 0.0, seed: 0 }.validate()?;
        if centers.is_empty() {
            return Err(Error::InvalidParameter("a cover needs at least one centre".into()));
        }
        for (i, c) in centers.iter().enumerate() {
            if !c.iter().all(|v| v.is_finite()) || norm(c) > r0 * (1.0 + 1e-9) {
                return Err(Error::InvalidParameter(format!("centre {i} lies outside B(0, R0)")));
            }
        }
        Ok(Cover { r0, r, k1, k2, centers, verified: false })
    }

    pub fn r0(&self) -> f64 {
        self.r0
    }

    pub fn radius(&self) -> f64 {
        self.r
    }

    pub fn k1(&self) -> u32 {
        self.k1
    }

    pub fn k2(&self) -> u32 {
        self.k2
    }

    pub fn centers(&self) -> &[Vec3] {
        &self.centers
    }

    pub fn len(&self) -> usize {
        self.centers.len()
    }

    pub fn is_empty(&self) -> bool {
        self.centers.is_empty()
    }

    pub fn is_verified(&self) -> bool {
        self.verified
    }

    /// `[(R0/R)^3, K1 (R0/R)^3]`.
    pub fn n_bounds(&self) -> (f64, f64) {
        let q = powi(self.r0 / self.r, 3);
        (q, self.k1 as f64 * q)
    }

    pub fn n_ok(&self) -> bool {
        let (lo, hi) = self.n_bounds();
        let n = self.len() as f64;
        // R0/R is usually a power of two, so these bounds are exact
        n >= lo * (1.0 - 1e-12) && n <= hi * (1.0 + 1e-12)
    }

    /// Runs [`verify_cover`] and records the outcome.
    pub fn verify(&mut self, probes: &ProbeSet) -> CoverVerification {
        let v = verify_cover(self, probes);
        self.verified = v.passed();
        v
    }

    /// Copy without centre `i`, for negative tests.
    pub fn without_center(&self, i: usize) -> Cover {
        let mut c = self.clone();
        c.centers.remove(i);
        c.verified = false;
        c
    }
}

/// Quasi-random points of `B(0, R0)`: a Halton sequence in bases 2, 3, 5 with
/// a seeded Cranley-Patterson shift, rejection-sampled into the ball and
/// sorted along a Morton curve for locality.
#[derive(Debug, Clone, PartialEq)]
pub struct ProbeSet {
    r0: f64,
    seed: u64,
    points: Vec<Vec3>,
}

fn radical_inverse(mut i: u64, base: u64) -> f64 {
    let inv = 1.0 / base as f64;
    let mut f = inv;
    let mut x = 0.0;
    while i > 0 {
        x += f * (i % base) as f64;
        i /= base;
        f *= inv;
    }
    x
}

fn spread_bits(v: u64) -> u64 {
    let mut x = v & 0x3ff;
    x = (x | (x << 16)) & 0x030000ff;
    x = (x | (x << 8)) & 0x0300f00f;
    x = (x | (x << 4)) & 0x030c30c3;
    x = (x | (x << 2)) & 0x09249249;
    x
}

impl ProbeSet {
    pub fn new(r0: f64, n_probe: usize, seed: u64) -> Result<Self> {
        if n_probe < MIN_PROBES {
            return Err(Error::InvalidParameter(format!("need at least {MIN_PROBES} probes, got {n_probe}")));
        }
        if !(r0 > 0.0) {
            return Err(Error::InvalidParameter(format!("R0 must be positive, got {r0}")));
        }
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let shift = [unit(&mut rng), unit(&mut rng), unit(&mut rng)];
        let mut points = Vec::with_capacity(n_probe);
        let mut i = 1u64;
        while points.len() < n_probe {
            let mut p = [0.0; 3];
            for (d, base) in [2u64, 3, 5].into_iter().enumerate() {
                let v = radical_inverse(i, base) + shift[d];
                let v = v - floor(v);
                p[d] = r0 * (2.0 * v - 1.0);
            }
            i += 1;
            if norm(&p) <= r0 {
                points.push(p);
            }
        }
        let key = |p: &Vec3| {
            let q = |v: f64| ((v / r0 + 1.0) * 511.999) as u64;
            spread_bits(q(p[0])) | (spread_bits(q(p[1])) << 1) | (spread_bits(q(p[2])) << 2)
        };
        let mut keyed: Vec<(u64, usize)> = points.iter().enumerate().map(|(i, p)| (key(p), i)).collect();
        keyed.sort_unstable();
        let points = keyed.into_iter().map(|(_, i)| points[i]).collect();
        Ok(ProbeSet { r0, seed, points })
    }

    pub fn r0(&self) -> f64 {
        self.r0
    }

    pub fn seed(&self) -> u64 {
        self.seed
    }

    pub fn points(&self) -> &[Vec3] {
        &self.points
    }

    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct CoverVerification {
    pub n: usize,
    pub n_bounds: (f64, f64),
    pub n_ok: bool,
    pub coverage_ok: bool,
    pub uncovered_probes: usize,
    /// Largest number of doubled balls `B(x_i, 2R)` containing one probe.
    pub multiplicity_max: usize,
    pub k2: u32,
    pub n_probe: usize,
}

impl CoverVerification {
    pub fn multiplicity_ok(&self) -> bool {
        self.multiplicity_max <= self.k2 as usize
    }

    pub fn passed(&self) -> bool {
        self.n_ok && self.coverage_ok && self.multiplicity_ok()
    }
}

/// Uniform cell index over `[-R0, R0]^3` answering, per probe, "how many
/// doubled balls contain it" and "is it inside some ball". Balls that contain
/// a whole cell are counted once per cell; only balls whose boundary may cut
/// the cell are tested per probe.
struct CellIndex {
    lo: f64,
    size: f64,
    m: usize,
    certain: Vec<u32>,
    covered: Vec<bool>,
    amb2_start: Vec<u32>,
    /// Centre coordinates of the doubled-ball candidates, one array per axis,
    /// so the per-probe test streams through contiguous memory.
    amb2: [Vec<f64>; 3],
    amb1_start: Vec<u32>,
    amb1: Vec<u32>,
}

impl CellIndex {
    fn build(cover: &Cover) -> Self {
        let (r, r0) = (cover.r, cover.r0);
        // the build grows like n / size^2 and the probe loop like size; large
        // covers are dominated by the build
        let size = if cover.len() > 1000 { r / 2.0 } else { r / 3.0 };
        let m = (ceil(2.0 * r0 / size) as usize).max(1);
        let hd = 0.5 * sqrt(3.0) * size;
        let lo = -r0;
        let sq = |v: f64| v * v;
        let center = |i: usize| lo + (i as f64 + 0.5) * size;
        let (in2, out2) = (sq(2.0 * r - hd), sq(2.0 * r + hd));
        let in1 = if r > hd { sq(r - hd) } else { -1.0 };
        let out1 = sq(r + hd);
        let relevant = |i: usize, j: usize, k: usize| {
            sq(center(i)) + sq(center(j)) + sq(center(k)) <= sq(r0 + hd)
        };
        let cells = m * m * m;
        // per-row difference arrays: index (row * (m + 1) + i)
        let mut certain_d = alloc::vec![0i32; m * m * (m + 1)];
        let mut covered_d = alloc::vec![0i32; m * m * (m + 1)];
        let mut pairs2: Vec<(u32, u32)> = Vec::with_capacity(cover.centers.len() * 800);
        let mut pairs1: Vec<(u32, u32)> = Vec::with_capacity(cover.centers.len() * 250);
        // cells with index in [a, b] whose centres satisfy (c - x)^2 < w2, as a
        // conservative superset
        let span = |x: f64, w2: f64| -> Option<(usize, usize)> {
            if w2 < 0.0 {
                return None;
            }
            let w = sqrt(w2);
            let a = (x - w - lo) / size - 0.5 - 1.0;
            let b = (x + w - lo) / size - 0.5 + 1.0;
            if b < 0.0 || a > (m - 1) as f64 {
                return None;
            }
            Some(((a.max(0.0)) as usize, (b as usize).min(m - 1)))
        };
        // exact interval of cells whose centre satisfies d2 < t (or <= t)
        let inner = |x: f64, rest: f64, t: f64, closed: bool| -> Option<(usize, usize)> {
            let ok = |i: usize| {
                let d2 = rest + sq(center(i) - x);
                if closed { d2 <= t } else { d2 < t }
            };
            let (mut a, mut b) = span(x, t - rest)?;
            while a <= b && !ok(a) {
                a += 1;
            }
            while b > a && !ok(b) {
                b -= 1;
            }
            if a <= b && ok(a) { Some((a, b)) } else { None }
        };
        for (bi, x) in cover.centers.iter().enumerate() {
            let Some((az, bz)) = span(x[2], out2) else { continue };
            for k in az..=bz {
                let dz2 = sq(center(k) - x[2]);
                if dz2 >= out2 {
                    continue;
                }
                let Some((ay, by)) = span(x[1], out2 - dz2) else { continue };
                for j in ay..=by {
                    let rest = dz2 + sq(center(j) - x[1]);
                    if rest >= out2 {
                        continue;
                    }
                    let row = k * m + j;
                    let Some((ax, bx)) = span(x[0], out2 - rest) else { continue };
                    let c_in = inner(x[0], rest, in2, false);
                    let v_in = inner(x[0], rest, in1, true);
                    if let Some((a, b)) = c_in {
                        certain_d[row * (m + 1) + a] += 1;
                        certain_d[row * (m + 1) + b + 1] -= 1;
                    }
                    if let Some((a, b)) = v_in {
                        covered_d[row * (m + 1) + a] += 1;
                        covered_d[row * (m + 1) + b + 1] -= 1;
                    }
                    let within = |iv: Option<(usize, usize)>, i: usize| iv.is_some_and(|(a, b)| a <= i && i <= b);
                    let mut visit = |i: usize| {
                        let d2 = rest + sq(center(i) - x[0]);
                        if d2 >= out2 || !relevant(i, j, k) {
                            return;
                        }
                        let c = (row * m + i) as u32;
                        if !within(c_in, i) && d2 >= in2 {
                            pairs2.push((c, bi as u32));
                        }
                        if !within(v_in, i) && d2 > in1 && d2 <= out1 {
                            pairs1.push((c, bi as u32));
                        }
                    };
                    match c_in {
                        None => (ax..=bx).for_each(&mut visit),
                        Some((a, b)) => {
                            (ax..a).for_each(&mut visit);
                            ((b + 1)..=bx).for_each(&mut visit);
                            // inside the certain interval only the R-ball shell matters
                            if let Some((sa, sb)) = span(x[0], out1 - rest) {
                                (sa.max(a)..=sb.min(b)).filter(|&i| !within(v_in, i)).for_each(&mut visit);
                            }
                        }
                    }
                }
            }
        }
        let mut certain = alloc::vec![0u32; cells];
        let mut covered = alloc::vec![false; cells];
        for row in 0..m * m {
            let (mut acc_c, mut acc_v) = (0i32, 0i32);
            for i in 0..m {
                acc_c += certain_d[row * (m + 1) + i];
                acc_v += covered_d[row * (m + 1) + i];
                certain[row * m + i] = acc_c as u32;
                covered[row * m + i] = acc_v > 0;
            }
        }
        // covered cells never consult their R-ball candidates
        pairs1.retain(|&(c, _)| !covered[c as usize]);
        let csr = |pairs: &[(u32, u32)]| {
            let mut start = alloc::vec![0u32; cells + 1];
            for &(c, _) in pairs {
                start[c as usize + 1] += 1;
            }
            for c in 0..cells {
                start[c + 1] += start[c];
            }
            let mut fill = start.clone();
            let mut list = alloc::vec![0u32; pairs.len()];
            for &(c, b) in pairs {
                list[fill[c as usize] as usize] = b;
                fill[c as usize] += 1;
            }
            (start, list)
        };
        let (amb2_start, amb2_ids) = csr(&pairs2);
        let amb2 = [0, 1, 2].map(|d| amb2_ids.iter().map(|&b| cover.centers[b as usize][d]).collect());
        let (amb1_start, amb1) = csr(&pairs1);
        CellIndex { lo, size, m, certain, covered, amb2_start, amb2, amb1_start, amb1 }
    }

    #[inline]
    fn cell_of(&self, p: &Vec3) -> usize {
        // probes lie in the ball, so the offsets are nonnegative and truncation floors
        let inv = 1.0 / self.size;
        let q = |v: f64| (((v - self.lo) * inv).max(0.0) as usize).min(self.m - 1);
        (q(p[2]) * self.m + q(p[1])) * self.m + q(p[0])
    }
}

/// Checks the count bounds exactly and coverage / `K2`-multiplicity on the probes.
pub fn verify_cover(cover: &Cover, probes: &ProbeSet) -> CoverVerification {
    let index = CellIndex::build(cover);
    let r = cover.r;
    let (r2_sq, r1_sq) = (4.0 * r * r, r * r);
    let centers = &cover.centers;
    let pts = probes.points();
    const CHUNK: usize = 8192;
    let chunks = pts.len().div_ceil(CHUNK);
    // best maximum found so far by any chunk; only used to skip work, so the
    // result does not depend on the order chunks finish in
    let shared_max = AtomicUsize::new(0);
    let partial: Vec<(usize, usize)> = map_indexed(chunks, |ci| {
        let (mut mult_max, mut uncovered) = (shared_max.load(Ordering::Relaxed), 0usize);
        for p in &pts[ci * CHUNK..((ci + 1) * CHUNK).min(pts.len())] {
            let c = index.cell_of(p);
            let (a, b) = (index.amb2_start[c] as usize, index.amb2_start[c + 1] as usize);
            let certain = index.certain[c] as usize;
            // the exact count cannot raise the running maximum
            if certain + (b - a) > mult_max {
                let (xs, ys, zs) = (&index.amb2[0][a..b], &index.amb2[1][a..b], &index.amb2[2][a..b]);
                let mut count = certain;
                // blocks of eight; stop once the rest cannot lift this probe above the maximum
                for (start, ((bx, by), bz)) in xs.chunks(8).zip(ys.chunks(8)).zip(zs.chunks(8)).enumerate() {
                    if count + (xs.len() - 8 * start) <= mult_max {
                        break;
                    }
                    count += bx
                        .iter()
                        .zip(by)
                        .zip(bz)
                        .filter(|((x, y), z)| {
                            let (dx, dy, dz) = (p[0] - **x, p[1] - **y, p[2] - **z);
                            dx * dx + dy * dy + dz * dz < r2_sq
                        })
                        .count();
                }
                mult_max = mult_max.max(count);
            }
            if !index.covered[c] {
                let hit = index.amb1[index.amb1_start[c] as usize..index.amb1_start[c + 1] as usize].iter().any(|&b| {
                    let x = &centers[b as usize];
                    let d2 =
                        (p[0] - x[0]) * (p[0] - x[0]) + (p[1] - x[1]) * (p[1] - x[1]) + (p[2] - x[2]) * (p[2] - x[2]);
                    d2 <= r1_sq
                });
                if !hit {
                    uncovered += 1;
                }
            }
        }
        shared_max.fetch_max(mult_max, Ordering::Relaxed);
        (mult_max, uncovered)
    });
    let multiplicity_max = partial.iter().map(|p| p.0).max().unwrap_or(0);
    let uncovered: usize = partial.iter().map(|p| p.1).sum();
    CoverVerification {
        n: cover.len(),
        n_bounds: cover.n_bounds(),
        n_ok: cover.n_ok(),
        coverage_ok: uncovered == 0,
        uncovered_probes: uncovered,
        multiplicity_max,
        k2: cover.k2,
        n_probe: pts.len(),
    }
}

fn infeasible(v: &CoverVerification, reason: String) -> Error {
    Error::InfeasibleCover { n: v.n, multiplicity_max: v.multiplicity_max, coverage_ok: v.coverage_ok, reason }
}

/// Lattice cover: centres on a cubic lattice of spacing `0.95 · 2R/√3` (one
/// per lattice cube meeting `B(0, R0)`), jittered uniformly in a ball of
/// radius `jitter · R`, then projected radially into `B(0, R0)`. `R = R0`
/// yields the single centre at the origin. The result is verified against
/// `probes` and rejected if any bound fails.
pub fn generate_cover(params: &CoverParams, probes: &ProbeSet) -> Result<Cover> {
    generate_verified_cover(params, probes).map(|(c, _)| c)
}

/// [`generate_cover`] that also returns the verification it ran.
pub fn generate_verified_cover(params: &CoverParams, probes: &ProbeSet) -> Result<(Cover, CoverVerification)> {
    params.validate()?;
    if abs(probes.r0() - params.r0) > 1e-12 * params.r0 {
        return Err(Error::InvalidParameter(format!(
            "probe set built for R0 = {} but cover has R0 = {}",
            probes.r0(),
            params.r0
        )));
    }
    let (r0, r) = (params.r0, params.r);
    let centers = if abs(r - r0) <= 1e-12 * r0 {
        alloc::vec![[0.0; 3]]
    } else {
        lattice_centers(r0, r, params.jitter, params.seed)
    };
    let mut cover = Cover { r0, r, k1: params.k1, k2: params.k2, centers, verified: false };
    let v = cover.verify(probes);
    if !v.n_ok {
        let (lo, hi) = v.n_bounds;
        return Err(infeasible(&v, format!("n = {} outside [{lo}, {hi}]", v.n)));
    }
    if !v.coverage_ok {
        return Err(infeasible(&v, format!("{} probes uncovered", v.uncovered_probes)));
    }
    if !v.multiplicity_ok() {
        return Err(infeasible(&v, format!("multiplicity {} exceeds K2 = {}", v.multiplicity_max, params.k2)));
    }
    Ok((cover, v))
}

/// Subdivisions per axis of a lattice cube in the redundancy test.
const PRUNE_SUBDIVISIONS: usize = 8;

/// Unverified centres of the lattice cover (see [`generate_cover`]). The
/// count depends on `R0` and `R` only, never on the jitter draw.
pub fn lattice_centers(r0: f64, r: f64, jitter: f64, seed: u64) -> Vec<Vec3> {
    let s = SPACING_SAFETY * 2.0 * r / sqrt(3.0);
    let reach = ceil(r0 / s + 0.5) as i64;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut sites = Vec::new();
    for k in -reach..=reach {
        for j in -reach..=reach {
            for i in -reach..=reach {
                let site = [i as f64 * s, j as f64 * s, k as f64 * s];
                // distance from the origin to the lattice cube around `site`
                let mut d2 = 0.0;
                for v in site {
                    let e = (abs(v) - 0.5 * s).max(0.0);
                    d2 += e * e;
                }
                if d2 > r0 * r0 {
                    continue;
                }
                let mut off = [0.0; 3];
                if jitter > 0.0 {
                    let o = loop {
                        let o = [2.0 * unit(&mut rng) - 1.0, 2.0 * unit(&mut rng) - 1.0, 2.0 * unit(&mut rng) - 1.0];
                        if norm(&o) <= 1.0 {
                            break o;
                        }
                    };
                    off = scale(&o, jitter * r);
                }
                sites.push(([i, j, k], site, off));
            }
        }
    }
    let keep = prune_sites(r0, r, s, reach, &sites);
    sites
        .iter()
        .zip(keep)
        .filter(|(_, k)| *k)
        .map(|((_, site, off), _)| {
            let x = [site[0] + off[0], site[1] + off[1], site[2] + off[2]];
            let rho = norm(&x);
            if rho > r0 {
                scale(&x, r0 / rho)
            } else {
                x
            }
        })
        .collect()
}

/// Greedy removal of redundant lattice sites. Sites are visited farthest
/// from the origin first; a site is dropped when every sub-cube of its
/// lattice cube that meets `B(0, R0)` has all corners within
/// `(1 - GUARANTEED_JITTER) R` of one other remaining centre (projected,
/// unjittered). The centres a removal relies on are locked so that later
/// removals cannot undo it. Using the unjittered positions with the jitter
/// allowance keeps the selection independent of the jitter draw.
fn prune_sites(r0: f64, r: f64, s: f64, reach: i64, sites: &[([i64; 3], Vec3, Vec3)]) -> Vec<bool> {
    let project = |x: &Vec3| {
        let rho = norm(x);
        if rho > r0 {
            scale(x, r0 / rho)
        } else {
            *x
        }
    };
    let reach2 = {
        let v = (1.0 - GUARANTEED_JITTER) * r;
        v * v
    };
    let pos: Vec<Vec3> = sites.iter().map(|(_, q, _)| project(q)).collect();
    let side = (2 * reach + 1) as usize;
    let mut slot = alloc::vec![usize::MAX; side * side * side];
    let flat = |ijk: [i64; 3]| -> Option<usize> {
        if ijk.iter().any(|v| v.abs() > reach) {
            return None;
        }
        let u = |v: i64| (v + reach) as usize;
        Some((u(ijk[2]) * side + u(ijk[1])) * side + u(ijk[0]))
    };
    for (n, (ijk, _, _)) in sites.iter().enumerate() {
        slot[flat(*ijk).unwrap()] = n;
    }
    let mut keep = alloc::vec![true; sites.len()];
    let mut locked = alloc::vec![false; sites.len()];
    let mut order: Vec<usize> = (0..sites.len()).collect();
    order.sort_by(|&a, &b| norm(&sites[b].1).total_cmp(&norm(&sites[a].1)).then(a.cmp(&b)));
    let sub = s / PRUNE_SUBDIVISIONS as f64;
    let mut used = Vec::new();
    for &i in &order {
        if locked[i] {
            continue;
        }
        let (ijk, q, _) = sites[i];
        // other lattice sites are >= s > (1 - GUARANTEED_JITTER) R from the
        // cube centre, and projected ones lie on the sphere
        if norm(&q) < r0 - r {
            continue;
        }
        let mut near: Vec<usize> = Vec::new();
        for dz in -3..=3 {
            for dy in -3..=3 {
                for dx in -3..=3 {
                    let Some(f) = flat([ijk[0] + dx, ijk[1] + dy, ijk[2] + dz]) else { continue };
                    let j = slot[f];
                    if j != usize::MAX
                        && j != i
                        && keep[j]
                        && norm(&[pos[j][0] - q[0], pos[j][1] - q[1], pos[j][2] - q[2]]) <= r + s
                    {
                        near.push(j);
                    }
                }
            }
        }
        used.clear();
        let mut redundant = true;
        'cells: for a in 0..PRUNE_SUBDIVISIONS {
            for b in 0..PRUNE_SUBDIVISIONS {
                for c in 0..PRUNE_SUBDIVISIONS {
                    let lo = [
                        q[0] - 0.5 * s + a as f64 * sub,
                        q[1] - 0.5 * s + b as f64 * sub,
                        q[2] - 0.5 * s + c as f64 * sub,
                    ];
                    let mut d2 = 0.0;
                    for d in 0..3 {
                        let e = (abs(lo[d] + 0.5 * sub) - 0.5 * sub).max(0.0);
                        d2 += e * e;
                    }
                    if d2 > r0 * r0 {
                        continue;
                    }
                    let covers = |j: &usize| {
                        let ctr = &pos[*j];
                        (0..8).all(|corner| {
                            let p = [
                                lo[0] + if corner & 1 != 0 { sub } else { 0.0 },
                                lo[1] + if corner & 2 != 0 { sub } else { 0.0 },
                                lo[2] + if corner & 4 != 0 { sub } else { 0.0 },
                            ];
                            let dd = [p[0] - ctr[0], p[1] - ctr[1], p[2] - ctr[2]];
                            dd[0] * dd[0] + dd[1] * dd[1] + dd[2] * dd[2] <= reach2
                        })
                    };
                    // lean on centres that are locked already, so fewer get pinned
                    let cover_by = near
                        .iter()
                        .copied()
                        .filter(|j| locked[*j] || used.contains(j))
                        .find(|j| covers(j))
                        .or_else(|| near.iter().copied().find(|j| covers(j)));
                    match cover_by {
                        Some(j) => used.push(j),
                        None => {
                            redundant = false;
                            break 'cells;
                        }
                    }
                }
            }
        }
        if redundant {
            keep[i] = false;
            for &j in &used {
                locked[j] = true;
            }
        }
    }
    keep
}

/// Descending scales `R0 2^k` for `k = k_max, ..., k_min`.
pub fn dyadic_scales(r0: f64, k_min: i32, k_max: i32) -> Result<Vec<f64>> {
    if k_min > k_max || k_max > 0 {
        return Err(Error::InvalidParameter(format!("need k_min <= k_max <= 0, got [{k_min}, {k_max}]")));
    }
    Ok((k_min..=k_max).rev().map(|k| r0 * libm::exp2(k as f64)).collect())
}

/// Default sublattice stride (in base-lattice steps). Points of one
/// sublattice are `6R` apart, so balls `B(x, R)` containing distinct points
/// have centres at least `4R` apart and disjoint doubled balls.
pub const DEFAULT_STRIDE: usize = 12;

/// The lattice argument behind the two-sided bounds: base lattice `(R/2) Z^3`
/// restricted to `B(0, R0)`, split into `stride^3` sublattices; each
/// sublattice is split further into families, the `j`-th family taking the
/// `j`-th ball (by index) containing each of its points.
#[derive(Debug, Clone, PartialEq)]
pub struct LatticeDecomposition {
    pub spacing: f64,
    pub stride: usize,
    pub point_count: usize,
    /// `[2^3 (R0/R)^3, (4π/3) 2^3 (R0/R)^3]`.
    pub count_bounds: (f64, f64),
    pub n_sublattices: usize,
    /// Ball indices per family, in lexicographic (sublattice, j) order.
    pub families: Vec<Vec<usize>>,
    /// Smallest centre distance between two balls of one family.
    pub min_separation: f64,
    /// Largest number of balls `B(x_i, R)` containing one lattice point.
    pub max_point_multiplicity: usize,
    pub radius: f64,
}

impl LatticeDecomposition {
    pub fn count_ok(&self) -> bool {
        let n = self.point_count as f64;
        n >= self.count_bounds.0 && n <= self.count_bounds.1
    }

    /// Doubled balls within every family are pairwise disjoint.
    pub fn disjoint(&self) -> bool {
        self.min_separation >= 4.0 * self.radius * (1.0 - 1e-12)
    }
}

/// Builds the lattice decomposition; fails if some ball contains no lattice point.
pub fn decompose_lattice(cover: &Cover, stride: usize) -> Result<LatticeDecomposition> {
    if stride == 0 {
        return Err(Error::InvalidParameter("stride must be positive".into()));
    }
    let (r0, r) = (cover.r0, cover.r);
    let a = 0.5 * r;
    let reach = floor(r0 / a) as i64;
    // bins of width R for the centres
    let bins = (ceil(2.0 * r0 / r) as usize).max(1);
    let bin_of = |v: f64| (((v + r0) / r) as isize).clamp(0, bins as isize - 1) as usize;
    let mut binned: Vec<Vec<usize>> = alloc::vec![Vec::new(); bins * bins * bins];
    for (i, c) in cover.centers.iter().enumerate() {
        binned[(bin_of(c[2]) * bins + bin_of(c[1])) * bins + bin_of(c[0])].push(i);
    }
    let mut touched = alloc::vec![false; cover.len()];
    let mut families: BTreeMap<(usize, usize), Vec<usize>> = BTreeMap::new();
    let mut point_count = 0usize;
    let mut max_mult = 0usize;
    let st = stride as i64;
    for k in -reach..=reach {
        for j in -reach..=reach {
            for i in -reach..=reach {
                let p = [i as f64 * a, j as f64 * a, k as f64 * a];
                if norm(&p) > r0 {
                    continue;
                }
                point_count += 1;
                let sub = ((k.rem_euclid(st) * st + j.rem_euclid(st)) * st + i.rem_euclid(st)) as usize;
                let mut containing = Vec::new();
                let b = [bin_of(p[0]), bin_of(p[1]), bin_of(p[2])];
                for bz in b[2].saturating_sub(1)..=(b[2] + 1).min(bins - 1) {
                    for by in b[1].saturating_sub(1)..=(b[1] + 1).min(bins - 1) {
                        for bx in b[0].saturating_sub(1)..=(b[0] + 1).min(bins - 1) {
                            for &ci in &binned[(bz * bins + by) * bins + bx] {
                                let c = &cover.centers[ci];
                                let d = norm(&[p[0] - c[0], p[1] - c[1], p[2] - c[2]]);
                                if d <= r {
                                    containing.push(ci);
                                }
                            }
                        }
                    }
                }
                containing.sort_unstable();
                max_mult = max_mult.max(containing.len());
                for (jth, &ci) in containing.iter().enumerate() {
                    touched[ci] = true;
                    families.entry((sub, jth)).or_default().push(ci);
                }
            }
        }
    }
    if let Some(bad) = touched.iter().position(|t| !t) {
        return Err(Error::PathologicalCover(bad));
    }
    let mut min_sep = f64::INFINITY;
    for fam in families.values() {
        for (x, &bi) in fam.iter().enumerate() {
            for &bj in &fam[x + 1..] {
                let (p, q) = (&cover.centers[bi], &cover.centers[bj]);
                min_sep = min_sep.min(norm(&[p[0] - q[0], p[1] - q[1], p[2] - q[2]]));
            }
        }
    }
    let q = powi(r0 / r, 3);
    Ok(LatticeDecomposition {
        spacing: a,
        stride,
        point_count,
        count_bounds: (8.0 * q, 4.0 / 3.0 * PI * 8.0 * q),
        n_sublattices: stride * stride * stride,
        families: families.into_values().collect(),
        min_separation: min_sep,
        max_point_multiplicity: max_mult,
        radius: r,
    })
}

/// Parses the `"R0 R K1 K2 n"` header plus `"x y z"` lines.
pub fn parse_cover(text: &str) -> Result<Cover> {
    let mut lines = text.lines().map(str::trim).filter(|l| !l.is_empty() && !l.starts_with('#'));
    let header = lines.next().ok_or_else(|| Error::InvalidParameter("empty cover file".into()))?;
    let h: Vec<&str> = header.split_whitespace().collect();
    if h.len() != 5 {
        return Err(Error::InvalidParameter(format!("cover header needs 5 fields, got {}", h.len())));
    }
    let num = |s: &str| s.parse::<f64>().map_err(|_| Error::InvalidParameter(format!("bad number '{s}'")));
    let int = |s: &str| s.parse::<u64>().map_err(|_| Error::InvalidParameter(format!("bad integer '{s}'")));
    let (r0, r, k1, k2, n) = (num(h[0])?, num(h[1])?, int(h[2])?, int(h[3])?, int(h[4])? as usize);
    let mut centers = Vec::with_capacity(n);
    for line in lines {
        let f: Vec<&str> = line.split_whitespace().collect();
        if f.len() != 3 {
            return Err(Error::InvalidParameter(format!("cover line needs 3 coordinates: '{line}'")));
        }
        centers.push([num(f[0])?, num(f[1])?, num(f[2])?]);
    }
    if centers.len() != n {
        return Err(Error::InvalidParameter(format!("header declares {n} centres, found {}", centers.len())));
    }
    Cover::new(r0, r, k1 as u32, k2 as u32, centers)
}

/// Inverse of [`parse_cover`]; coordinates use shortest round-trip formatting.
pub fn format_cover(cover: &Cover) -> String {
    use core::fmt::Write;
    let mut s = String::new();
    let _ = writeln!(s, "{:?} {:?} {} {} {}", cover.r0, cover.r, cover.k1, cover.k2, cover.len());
    for c in &cover.centers {
        let _ = writeln!(s, "{:?} {:?} {:?}", c[0], c[1], c[2]);
    }
    s
}

/// Round `(R0/R)` to the nearest integer when it is one, for labels.
pub fn scale_ratio(r0: f64, r: f64) -> f64 {
    let q = r0 / r;
    if abs(q - round(q)) < 1e-9 {
        round(q)
    } else {
        q
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn probes() -> ProbeSet {
        ProbeSet::new(1.0, MIN_PROBES, 7).unwrap()
    }

    #[test]
    fn single_ball_at_integral_scale() {
        let c = generate_cover(&CoverParams::new(1.0, 1.0), &probes()).unwrap();
        assert_eq!(c.len(), 1);
        let v = verify_cover(&c, &probes());
        assert!(v.coverage_ok);
        assert_eq!(v.multiplicity_max, 1);
    }

    #[test]
    fn half_scale_cover_passes() {
        let p = CoverParams { r: 0.5, ..CoverParams::new(1.0, 0.5) };
        let c = generate_cover(&p, &probes()).unwrap();
        assert!(c.len() >= 8 && c.len() <= 160, "n = {}", c.len());
        assert!(c.is_verified());
    }

    #[test]
    fn deleting_a_central_center_opens_a_hole() {
        let c = generate_cover(&CoverParams::new(1.0, 0.5), &probes()).unwrap();
        let i = c.centers().iter().position(|x| norm(x) < 1e-12).unwrap();
        let v = verify_cover(&c.without_center(i), &probes());
        assert!(!v.coverage_ok);
        assert!(v.uncovered_probes > 0);
    }

    #[test]
    fn k2_of_one_is_infeasible() {
        let p = CoverParams { k2: 1, ..CoverParams::new(1.0, 0.125) };
        match generate_cover(&p, &probes()) {
            Err(Error::InfeasibleCover { multiplicity_max, .. }) => assert!(multiplicity_max > 1),
            other => panic!("expected infeasible, got {other:?}"),
        }
    }

    #[test]
    fn dyadic_lists() {
        assert_eq!(dyadic_scales(1.0, -3, 0).unwrap(), [1.0, 0.5, 0.25, 0.125]);
        assert_eq!(dyadic_scales(1.0, 0, 0).unwrap(), [1.0]);
        assert_eq!(dyadic_scales(1.0, -10, -8).unwrap(), [1.0 / 256.0, 1.0 / 512.0, 1.0 / 1024.0]);
        assert!(dyadic_scales(1.0, 0, 1).is_err());
    }

    #[test]
    fn lattice_counts_at_quarter_scale() {
        let c = generate_cover(&CoverParams::new(1.0, 0.25), &probes()).unwrap();
        let d = decompose_lattice(&c, DEFAULT_STRIDE).unwrap();
        assert!(d.count_ok(), "{} not in {:?}", d.point_count, d.count_bounds);
        assert!((d.count_bounds.0 - 512.0).abs() < 1e-9);
        assert!(d.disjoint());
        assert_eq!(decompose_lattice(&c, 8).unwrap().n_sublattices, 512);
    }

    #[test]
    fn family_members_are_distinct_balls() {
        let c = generate_cover(&CoverParams::new(1.0, 0.25), &probes()).unwrap();
        let d = decompose_lattice(&c, DEFAULT_STRIDE).unwrap();
        let mut seen = alloc::vec![false; c.len()];
        for f in &d.families {
            let mut f2 = f.clone();
            f2.sort_unstable();
            f2.dedup();
            assert_eq!(f2.len(), f.len());
            for &b in f {
                seen[b] = true;
            }
        }
        assert!(seen.iter().all(|s| *s));
    }

    #[test]
    fn cover_text_round_trip() {
        let c = generate_cover(&CoverParams { jitter: 0.05, seed: 3, ..CoverParams::new(1.0, 0.5) }, &probes()).unwrap();
        let back = parse_cover(&format_cover(&c)).unwrap();
        assert_eq!(back.centers(), c.centers());
        assert_eq!(back.radius(), c.radius());
    }
}
