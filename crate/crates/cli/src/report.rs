//! Text report and comma-separated tables.
//!
//! Numbers in the text report use a fixed 12-digit mantissa; the tables use
//! the shortest representation that parses back to the same `f64`.

use std::fmt::Write;

use cascade_core::ensemble::{Baseline, CascadeVerdict, EnsembleReport, LemmaCheck, LocalityReport, VerdictConstants};
use cascade_core::functional::Estimate;

pub fn num(x: f64) -> String {
    format!("{x:.12e}")
}

pub fn est(e: &Estimate) -> String {
    format!("{} +- {}", num(e.value), num(e.error))
}

pub fn opt(x: Option<f64>) -> String {
    x.map(num).unwrap_or_else(|| "undefined".into())
}

pub const SCALES_HEADER: &str = "R,n,cover_seed,e_R,e_R_err,phi_R,phi_R_err,eps_R,eps_R_err,time_R,e0,eps0,tau0";

pub fn scales_csv(rows: &[EnsembleReport]) -> String {
    let mut s = String::from(SCALES_HEADER);
    s.push('\n');
    for r in rows {
        let tau = r.tau0.map(|t| format!("{t:e}")).unwrap_or_default();
        writeln!(
            s,
            "{:e},{},{},{:e},{:e},{:e},{:e},{:e},{:e},{:e},{:e},{:e},{}",
            r.radius,
            r.n,
            r.cover_id,
            r.e_r.value,
            r.e_r.error,
            r.phi_r.value,
            r.phi_r.error,
            r.eps_r.value,
            r.eps_r.error,
            r.time_r.value,
            r.e0.value,
            r.eps0.value,
            tau
        )
        .unwrap();
    }
    s
}

/// `(R, Φ_R)` pairs from a table written by [`scales_csv`].
pub fn parse_scales_csv(text: &str) -> Result<Vec<(f64, f64)>, String> {
    let mut lines = text.lines();
    let head = lines.next().ok_or("empty scales table")?;
    let cols: Vec<&str> = head.split(',').collect();
    let find = |name: &str| cols.iter().position(|c| c.trim() == name).ok_or(format!("no '{name}' column"));
    let (ir, ip) = (find("R")?, find("phi_R")?);
    let mut out = Vec::new();
    for (i, line) in lines.enumerate().filter(|(_, l)| !l.trim().is_empty()) {
        let f: Vec<&str> = line.split(',').collect();
        let get = |j: usize| -> Result<f64, String> {
            f.get(j).and_then(|s| s.trim().parse().ok()).ok_or(format!("row {}: bad value in column {j}", i + 1))
        };
        out.push((get(ir)?, get(ip)?));
    }
    Ok(out)
}

pub fn locality_csv(rep: &LocalityReport) -> String {
    let mut s = String::from("R,r,ratio,lower,upper,within\n");
    for p in &rep.pairs {
        writeln!(s, "{:e},{:e},{:e},{:e},{:e},{}", p.big, p.small, p.ratio, p.lower, p.upper, p.within).unwrap();
    }
    s
}

pub fn locality_text(out: &mut String, rep: &LocalityReport) {
    out.push_str("[locality]\n");
    out.push_str("# R r R^3 Phi_R/(r^3 Phi_r) lower upper within\n");
    for p in &rep.pairs {
        writeln!(out, "{} {} {} {} {} {}", num(p.big), num(p.small), num(p.ratio), num(p.lower), num(p.upper), p.within)
            .unwrap();
    }
    for (big, small, why) in &rep.skipped {
        writeln!(out, "skipped {} {}: {why}", num(*big), num(*small)).unwrap();
    }
    out.push_str("# dyadic r = 2^k R: k lower upper\n");
    for d in &rep.dyadic {
        writeln!(out, "{} {} {}", d.k, num(d.lower), num(d.upper)).unwrap();
    }
    writeln!(out, "all_within = {}", rep.all_within()).unwrap();
}

pub fn baseline_text(out: &mut String, b: &Baseline) {
    out.push_str("[baseline]\n");
    writeln!(out, "R0 = {}", num(b.r0)).unwrap();
    writeln!(out, "T = {}", num(b.t_half)).unwrap();
    writeln!(out, "e0 = {}", est(&b.e0)).unwrap();
    writeln!(out, "eps0 = {}", est(&b.eps0)).unwrap();
    writeln!(out, "phi0 = {}", est(&b.phi0)).unwrap();
    writeln!(out, "tau0 = {}", opt(b.tau0())).unwrap();
}

pub fn scales_text(out: &mut String, rows: &[EnsembleReport]) {
    out.push_str("[scales]\n");
    out.push_str("# R n cover_seed e_R phi_R eps_R time_R\n");
    for r in rows {
        writeln!(
            out,
            "{} {} {} {} {} {} {}",
            num(r.radius),
            r.n,
            r.cover_id,
            est(&r.e_r),
            est(&r.phi_r),
            est(&r.eps_r),
            est(&r.time_r)
        )
        .unwrap();
    }
}

pub fn lemma_text(out: &mut String, checks: &[LemmaCheck]) {
    out.push_str("[lemma]\n");
    out.push_str("# R n eps0/K1 eps_R 512*K2*eps0 lower_ok upper_ok lower_margin upper_margin family_ratio_max disjoint\n");
    for c in checks {
        writeln!(
            out,
            "{} {} {} {} {} {} {} {} {} {} {}",
            num(c.radius),
            c.n,
            num(c.lower),
            num(c.eps_r),
            num(c.upper),
            c.lower_ok,
            c.upper_ok,
            num(c.lower_margin()),
            num(c.upper_margin()),
            num(c.family_ratio_max),
            c.disjoint
        )
        .unwrap();
    }
}

pub fn constants_text(out: &mut String, k: &VerdictConstants) {
    writeln!(out, "c = {}", num(k.c)).unwrap();
    writeln!(out, "c0 = {}", num(k.c0)).unwrap();
    writeln!(out, "c1 = {}", num(k.c1)).unwrap();
    writeln!(out, "K = {}", num(k.k)).unwrap();
}

pub fn verdict_text(out: &mut String, v: &CascadeVerdict) {
    writeln!(out, "threshold gamma*c*R0 = {}", num(v.threshold)).unwrap();
    let state = if v.vacuous {
        "vacuous (eps0 <= quadrature error)"
    } else if v.condition_holds {
        "holds"
    } else {
        "fails"
    };
    writeln!(out, "condition = {state}").unwrap();
    out.push_str("# R phi_R c0*eps0 c1*eps0 holds\n");
    for s in &v.scales {
        writeln!(out, "{} {} {} {} {}", num(s.radius), num(s.phi_r), num(s.lower), num(s.upper), s.holds).unwrap();
    }
    writeln!(out, "all_bounds_hold = {}", v.all_bounds_hold()).unwrap();
}
