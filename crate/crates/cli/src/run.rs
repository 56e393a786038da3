//! The subcommands. Each takes the merged configuration and an output path
//! and returns the summary printed on stdout.

use std::fmt::Write as _;
use std::fs;
use std::path::Path;

use anyhow::{anyhow, bail, Context, Result};
use cascade_core::cover::{decompose_lattice, format_cover, generate_cover, parse_cover, verify_cover, CoverParams};
use cascade_core::cutoff::{CutoffShape, SpatialCutoff};
use cascade_core::ensemble::{
    baseline, cascade_verdict, cover_cutoffs, ensemble_average, lemma_bounds_check, locality_ratios,
    tube_constancy_scan, EnsembleReport, LemmaCheck, LocalityReport, VerdictConstants, VerdictParams,
};
use cascade_core::functional::{dr_scan, Source, StencilSpec};
use cascade_core::generators::{
    abc, axis_tube, ball_bump, gaussian_blobs, singular_swirl, taylor_green, uniform_density, zero,
};
use cascade_core::spectral::{max_divergence, max_momentum_residual, solve_pressure};
use cascade_core::{
    ConstantsMode, Cover, FieldDensities, Grid3, ProbeSet, ScalarDensity, TemporalCutoff, TimeAxis, VectorField3,
};

use crate::config::RunConfig;
use crate::io;
use crate::report::{self, num};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Command {
    Gen,
    Cover,
    Analyze,
    Dr,
    Tube,
    Locality,
}

impl Command {
    pub fn name(self) -> &'static str {
        match self {
            Command::Gen => "gen",
            Command::Cover => "cover",
            Command::Analyze => "analyze",
            Command::Dr => "dr",
            Command::Tube => "tube",
            Command::Locality => "locality",
        }
    }

    pub fn parse(s: &str) -> Option<Self> {
        [Command::Gen, Command::Cover, Command::Analyze, Command::Dr, Command::Tube, Command::Locality]
            .into_iter()
            .find(|c| c.name() == s)
    }

    /// Process exit status when the command fails.
    pub fn exit_code(self) -> i32 {
        match self {
            Command::Gen => 2,
            Command::Cover => 3,
            Command::Analyze | Command::Locality => 4,
            Command::Dr | Command::Tube => 5,
        }
    }

    pub fn run(self, cfg: &RunConfig, out: &Path) -> Result<String> {
        match self {
            Command::Gen => cmd_gen(cfg, out),
            Command::Cover => cmd_cover(cfg, out),
            Command::Analyze => cmd_analyze(cfg, out),
            Command::Dr => cmd_dr(cfg, out),
            Command::Tube => cmd_tube(cfg, out),
            Command::Locality => cmd_locality(cfg, out),
        }
    }
}

fn time_axis(cfg: &RunConfig) -> Result<TimeAxis> {
    let t = cfg.f64("t")?;
    Ok(match cfg.usize("n_time")? {
        1 => TimeAxis::steady(t)?,
        k => TimeAxis::new(2.0 * t, k)?,
    })
}

pub fn cmd_gen(cfg: &RunConfig, out: &Path) -> Result<String> {
    let grid = Grid3::new(cfg.usize("n")?, cfg.box_length()?)?;
    let t = cfg.f64("t")?;
    let name = cfg.get("generator");
    let field = match name {
        "abc" => Some(abc(&grid, cfg.f64("abc_a")?, cfg.f64("abc_b")?, cfg.f64("abc_c")?, t)?),
        "taylor-green" => Some(taylor_green(&grid, cfg.f64("amplitude")?, t)?),
        "swirl" => Some(singular_swirl(&grid, cfg.f64("alpha")?, cfg.f64("r_core")?, cfg.f64("r_cut")?, t)?),
        "zero" => Some(zero(&grid, t)?),
        _ => None,
    };
    let mut s = String::new();
    if let Some(f) = field {
        io::write_field(&f, out).with_context(|| format!("writing {}", out.display()))?;
        writeln!(s, "wrote {} ({} bytes)", out.display(), io::HEADER_LEN + 8 * (f.velocity().len() + f.pressure().map_or(0, |p| p.len())))?;
        writeln!(s, "max |u| = {}", num(f.max_speed()))?;
        writeln!(s, "max |div u| = {}", num(max_divergence(&f)))?;
        let res = max_momentum_residual(&f).map(num).unwrap_or_else(|| "n/a (no pressure)".into());
        writeln!(s, "max |(u.grad)u + grad p| = {res}")?;
        return Ok(s);
    }
    let times = time_axis(cfg)?;
    let amp = cfg.f64("amplitude")?;
    let d = match name {
        "blobs" => gaussian_blobs(&grid, times, cfg.usize("blobs")?, 0.9 * cfg.f64("r0")?, cfg.u64("seed")?)?.scaled(amp)?,
        "tube" => axis_tube(&grid, times, cfg.f64("rho")?, amp)?,
        "bump" => ball_bump(&grid, times, [0.0; 3], cfg.f64("rho")?, amp)?,
        "uniform" => uniform_density(&grid, times, amp)?,
        other => bail!("unknown generator '{other}'"),
    };
    io::write_density(&d, out).with_context(|| format!("writing {}", out.display()))?;
    writeln!(s, "wrote {} ({} bytes)", out.display(), io::HEADER_LEN + 8 * d.values().len())?;
    writeln!(s, "max density = {}", num(d.values().iter().fold(0.0, |m: f64, v| m.max(*v))))?;
    Ok(s)
}

fn verify_text(s: &mut String, cover: &Cover, probes: &ProbeSet, stride: usize) -> Result<()> {
    let v = verify_cover(cover, probes);
    let (lo, hi) = cover.n_bounds();
    writeln!(s, "n = {} (bounds {} .. {}, ok = {})", cover.len(), lo, hi, v.n_ok)?;
    writeln!(s, "coverage_ok = {} ({} probes, {} uncovered)", v.coverage_ok, probes.len(), v.uncovered_probes)?;
    writeln!(s, "multiplicity_max = {} (K2 = {}, ok = {})", v.multiplicity_max, cover.k2(), v.multiplicity_ok())?;
    let d = decompose_lattice(cover, stride)?;
    writeln!(
        s,
        "decomposition: stride {}, {} sublattices, {} families, disjoint = {}, min separation = {}",
        stride,
        d.n_sublattices,
        d.families.len(),
        d.disjoint(),
        num(d.min_separation)
    )?;
    Ok(())
}

fn cover_params(cfg: &RunConfig, r: f64, seed: u64) -> Result<CoverParams> {
    Ok(CoverParams {
        k1: cfg.u32("k1")?,
        k2: cfg.u32("k2")?,
        jitter: cfg.f64("jitter")?,
        seed,
        ..CoverParams::new(cfg.f64("r0")?, r)
    })
}

pub fn cmd_cover(cfg: &RunConfig, out: &Path) -> Result<String> {
    let probes = ProbeSet::new(cfg.f64("r0")?, cfg.usize("probes")?, cfg.u64("seed")?)?;
    let cover = generate_cover(&cover_params(cfg, cfg.f64("r")?, cfg.u64("seed")?)?, &probes)?;
    fs::write(out, format_cover(&cover)).with_context(|| format!("writing {}", out.display()))?;
    let mut s = format!("wrote {}\n", out.display());
    verify_text(&mut s, &cover, &probes, cfg.usize("stride")?)?;
    Ok(s)
}

/// What the analysis pairs against the cutoffs.
pub enum Data {
    Field { dens: FieldDensities, note: &'static str },
    Measure { energy: ScalarDensity, dissipation: ScalarDensity },
}

impl Data {
    pub fn load(cfg: &RunConfig) -> Result<Self> {
        if let Some(path) = cfg.path("field") {
            let f = io::read_field(Path::new(path)).with_context(|| format!("reading {path}"))?;
            let (f, note) = match f.pressure() {
                Some(_) => (f, "stored"),
                None => (solve_pressure(&f)?, "recovered spectrally"),
            };
            return Ok(Data::Field { dens: FieldDensities::new(&f)?, note });
        }
        match (cfg.path("energy_density"), cfg.path("dissipation_density")) {
            (Some(e), Some(d)) => Ok(Data::Measure {
                energy: io::read_density(Path::new(e)).with_context(|| format!("reading {e}"))?,
                dissipation: io::read_density(Path::new(d)).with_context(|| format!("reading {d}"))?,
            }),
            _ => bail!("need 'field', or both 'energy_density' and 'dissipation_density'"),
        }
    }

    pub fn source(&self) -> Result<Source<'_>> {
        Ok(match self {
            Data::Field { dens, .. } => Source::Field(dens),
            Data::Measure { energy, dissipation } => Source::measure(energy, dissipation)?,
        })
    }

    fn describe(&self, s: &mut String) -> Result<()> {
        let src = self.source()?;
        let (g, t) = (src.grid(), src.times());
        s.push_str("[source]\n");
        match self {
            Data::Field { note, .. } => writeln!(s, "kind = field (pressure {note})")?,
            Data::Measure { .. } => writeln!(s, "kind = measure")?,
        }
        let o = g.origin();
        writeln!(s, "grid = {}^3, box_length = {}, origin = {} {} {}", g.n(), num(g.box_length()), num(o[0]), num(o[1]), num(o[2]))?;
        writeln!(s, "time = (0, {}), {} samples", num(t.t_end()), t.n_samples())?;
        Ok(())
    }
}

fn eta(cfg: &RunConfig, src: &Source) -> Result<TemporalCutoff> {
    Ok(TemporalCutoff::new(src.times().t_half(), cfg.f64("delta")?)?)
}

fn verdict_params(cfg: &RunConfig, eta: &TemporalCutoff) -> Result<VerdictParams> {
    Ok(VerdictParams {
        gamma: cfg.f64("gamma")?,
        k1: cfg.u32("k1")?,
        k2: cfg.u32("k2")?,
        c0_time: eta.c0(),
        mode: ConstantsMode::parse(cfg.get("mode"))?,
    })
}

fn locality_for(scales: &[(f64, f64)], p: &VerdictParams) -> Result<LocalityReport> {
    let k = VerdictConstants::new(p.gamma, p.k1, p.k2, p.c0_time, p.mode)?;
    Ok(locality_ratios(scales, k.c0, k.c1, 3))
}

/// Covers of the analysis, generated per scale or loaded from files.
fn analysis_covers(cfg: &RunConfig, probes: &ProbeSet) -> Result<Vec<(Cover, u64)>> {
    let r0 = cfg.f64("r0")?;
    let seed = cfg.u64("seed")?;
    if let Some(list) = cfg.path("covers") {
        return list
            .split(',')
            .map(|p| p.trim())
            .enumerate()
            .map(|(i, p)| {
                let text = fs::read_to_string(p).with_context(|| format!("reading cover {p}"))?;
                let mut c = parse_cover(&text)?;
                if c.r0() != r0 {
                    bail!("cover {p} has R0 = {}, config has {r0}", c.r0());
                }
                let v = c.verify(probes);
                if !v.passed() {
                    bail!("cover {p} fails verification: {v:?}");
                }
                Ok((c, seed + i as u64))
            })
            .collect();
    }
    cfg.list("scales")?
        .iter()
        .enumerate()
        .map(|(i, f)| {
            let id = seed + i as u64;
            let c = generate_cover(&cover_params(cfg, f * r0, id)?, probes).with_context(|| format!("cover at R = {}", f * r0))?;
            Ok((c, id))
        })
        .collect()
}

pub fn cmd_analyze(cfg: &RunConfig, out: &Path) -> Result<String> {
    let data = Data::load(cfg)?;
    let src = data.source()?;
    let grid = *src.grid();
    let eta = eta(cfg, &src)?;
    let r0 = cfg.f64("r0")?;
    let probes = ProbeSet::new(r0, cfg.usize("probes")?, cfg.u64("seed")?)?;
    let base = baseline(&src, &eta, r0).context("baseline at R0")?;
    let covers = analysis_covers(cfg, &probes)?;

    let mut rows = Vec::new();
    let mut lemma: Vec<LemmaCheck> = Vec::new();
    let psi0 = SpatialCutoff::sample(&grid, CutoffShape::integral(r0), src.min_cells())?;
    for (cover, id) in &covers {
        let r = cover.radius();
        let cut = cover_cutoffs(&grid, cover, src.min_cells()).with_context(|| format!("cutoffs at R = {r}"))?;
        let avg = ensemble_average(&src, &eta, cover, &cut).with_context(|| format!("averages at R = {r}"))?;
        rows.push(EnsembleReport::new(&avg, &base, *id));
        if let Data::Measure { dissipation, .. } = &data {
            let dec = decompose_lattice(cover, cfg.usize("stride")?)?;
            lemma.push(lemma_bounds_check(dissipation, &eta, cover, &cut, &dec, &psi0, 1e-8)?);
        }
    }

    let params = verdict_params(cfg, &eta)?;
    let scales: Vec<(f64, f64)> = rows.iter().map(|r| (r.radius, r.phi_r.value)).collect();
    let loc = locality_for(&scales, &params)?;

    let mut s = String::from("cascade analysis report\n");
    writeln!(s, "version = {}", env!("CARGO_PKG_VERSION"))?;
    s.push_str("[config]\n");
    s.push_str(&cfg.echo());
    data.describe(&mut s)?;
    s.push_str("[cutoff]\n");
    writeln!(s, "delta = {}, eta power m = {}, C0 = {}", num(eta.delta()), eta.power(), num(eta.c0()))?;
    report::baseline_text(&mut s, &base);
    report::scales_text(&mut s, &rows);
    if !lemma.is_empty() {
        report::lemma_text(&mut s, &lemma);
    }
    s.push_str("[verdict]\n");
    writeln!(s, "mode = {}, gamma = {}, K1 = {}, K2 = {}", params.mode.name(), num(params.gamma), params.k1, params.k2)?;
    let k = VerdictConstants::new(params.gamma, params.k1, params.k2, params.c0_time, params.mode)?;
    report::constants_text(&mut s, &k);
    match cascade_verdict(&base, &rows, params) {
        Ok(v) => report::verdict_text(&mut s, &v),
        Err(_) => s.push_str("condition = vacuous (eps0 <= quadrature error)\n"),
    }
    report::locality_text(&mut s, &loc);

    fs::create_dir_all(out).with_context(|| format!("creating {}", out.display()))?;
    fs::write(out.join("report.txt"), &s)?;
    fs::write(out.join("scales.csv"), report::scales_csv(&rows))?;
    fs::write(out.join("locality.csv"), report::locality_csv(&loc))?;
    fs::write(out.join("config.echo"), cfg.echo())?;

    let mut summary = format!("wrote report.txt, scales.csv, locality.csv, config.echo to {}\n", out.display());
    writeln!(summary, "eps0 = {}, tau0 = {}", report::est(&base.eps0), report::opt(base.tau0()))?;
    Ok(summary)
}

pub fn cmd_dr(cfg: &RunConfig, out: &Path) -> Result<String> {
    let path = cfg.path("field").ok_or_else(|| anyhow!("dr needs 'field'"))?;
    let f: VectorField3 = io::read_field(Path::new(path)).with_context(|| format!("reading {path}"))?;
    let h = f.grid().spacing();
    let eps_max = match cfg.get("eps_max") {
        "auto" => 64.0 * h,
        _ => cfg.f64("eps_max")?,
    };
    let points = cfg.points("points")?;
    let scan = dr_scan(&f, cfg.usize("slice")?, &points, eps_max, cfg.u32("k_max")?, &StencilSpec::default())?;

    let mut csv = String::from("point,x,y,z,eps,D\n");
    for (p, row) in scan.values.iter().enumerate() {
        let x = scan.points[p];
        for (k, d) in row.iter().enumerate() {
            writeln!(csv, "{p},{:e},{:e},{:e},{:e},{:e}", x[0], x[1], x[2], scan.scales[k], d)?;
        }
    }
    let mut s = String::new();
    for (p, slope) in scan.slopes.iter().enumerate() {
        writeln!(s, "point {p}: slope = {}", report::opt(*slope))?;
    }
    writeln!(s, "slope of max |D| = {}", report::opt(scan.slope_of_max))?;
    let last = scan.scales.len() - 1;
    let umax = f.max_speed();
    let norm = if umax > 0.0 { scan.max_abs_at(last) * f.grid().box_length() / (umax * umax * umax) } else { 0.0 };
    writeln!(s, "max |D| at eps = {}: {} (normalized {})", num(scan.scales[last]), num(scan.max_abs_at(last)), num(norm))?;
    fs::create_dir_all(out)?;
    fs::write(out.join("dr.csv"), csv)?;
    fs::write(out.join("dr.txt"), &s)?;
    Ok(s)
}

pub fn cmd_tube(cfg: &RunConfig, out: &Path) -> Result<String> {
    let data = Data::load(cfg)?;
    let src = data.source()?;
    let eta = eta(cfg, &src)?;
    let scan = tube_constancy_scan(&src, &eta, &cfg.list("radii")?)?;
    let mut csv = String::from("R,eps,err\n");
    for (r, v) in scan.radii.iter().zip(&scan.values) {
        writeln!(csv, "{r:e},{:e},{:e}", v.value, v.error)?;
    }
    let mut s = String::new();
    writeln!(s, "max pairwise deviation = {}", num(scan.max_deviation))?;
    writeln!(s, "quadrature estimate = {}", num(scan.estimate))?;
    writeln!(s, "max relative deviation = {}", num(scan.max_relative_deviation()))?;
    writeln!(s, "within_estimate = {}", scan.within_estimate())?;
    fs::create_dir_all(out)?;
    fs::write(out.join("tube.csv"), csv)?;
    fs::write(out.join("tube.txt"), &s)?;
    Ok(s)
}

pub fn cmd_locality(cfg: &RunConfig, out: &Path) -> Result<String> {
    let path = cfg.path("scales_csv").ok_or_else(|| anyhow!("locality needs 'scales_csv'"))?;
    let text = fs::read_to_string(path).with_context(|| format!("reading {path}"))?;
    let scales = report::parse_scales_csv(&text).map_err(|e| anyhow!("{path}: {e}"))?;
    let eta = TemporalCutoff::new(cfg.f64("t")?, cfg.f64("delta")?)?;
    let loc = locality_for(&scales, &verdict_params(cfg, &eta)?)?;
    let mut s = String::new();
    report::locality_text(&mut s, &loc);
    fs::create_dir_all(out)?;
    fs::write(out.join("locality.csv"), report::locality_csv(&loc))?;
    Ok(s)
}
