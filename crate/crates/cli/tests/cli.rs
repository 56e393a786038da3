use std::fs;
use std::path::Path;
use std::process::{Command, Output};

use cascade_cli::io::{self, FormatError, HEADER_LEN};
use cascade_core::generators::{abc, gaussian_blobs};
use cascade_core::{Grid3, TimeAxis};

fn cascade(dir: &Path, args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_cascade")).args(args).current_dir(dir).output().unwrap()
}

fn ok(dir: &Path, args: &[&str]) -> String {
    let o = cascade(dir, args);
    assert!(o.status.success(), "{args:?}: {}", String::from_utf8_lossy(&o.stderr));
    String::from_utf8(o.stdout).unwrap()
}

fn code(dir: &Path, args: &[&str]) -> i32 {
    cascade(dir, args).status.code().unwrap()
}

#[test]
fn field_bytes_round_trip_exactly() {
    let g = Grid3::new(8, 2.0 * std::f64::consts::PI).unwrap();
    let f = abc(&g, 1.0, 0.7, 0.3, 1.0).unwrap();
    let bytes = io::field_to_bytes(&f);
    assert_eq!(bytes.len(), HEADER_LEN + 4 * 8 * 512);
    let back = io::field_from_bytes(&bytes).unwrap();
    assert_eq!(io::field_to_bytes(&back), bytes);
    assert_eq!(back.velocity(), f.velocity());
    assert_eq!(back.pressure(), f.pressure());
}

#[test]
fn malformed_files_are_rejected() {
    let g = Grid3::new(8, 2.0 * std::f64::consts::PI).unwrap();
    let f = abc(&g, 1.0, 1.0, 1.0, 1.0).unwrap();
    let bytes = io::field_to_bytes(&f);

    let err = io::field_from_bytes(&bytes[..bytes.len() - 8]).unwrap_err();
    assert!(matches!(err, FormatError::Truncated { .. }));
    assert!(err.to_string().starts_with("payload shorter than header claims"));

    let mut extra = bytes.clone();
    extra.push(0);
    assert!(matches!(io::field_from_bytes(&extra), Err(FormatError::Trailing(1))));

    let mut magic = bytes.clone();
    magic[..4].copy_from_slice(b"XXXX");
    assert!(matches!(io::field_from_bytes(&magic), Err(FormatError::Magic(_))));

    let mut zero_n = bytes.clone();
    zero_n[4..8].copy_from_slice(&0u32.to_le_bytes());
    assert!(matches!(io::field_from_bytes(&zero_n), Err(FormatError::Header(_))));

    let mut flag = bytes.clone();
    flag[HEADER_LEN - 1] = 0;
    assert!(matches!(io::field_from_bytes(&flag), Err(FormatError::Header(_))));

    let mut nan = bytes.clone();
    nan[HEADER_LEN..HEADER_LEN + 8].copy_from_slice(&f64::NAN.to_le_bytes());
    assert!(matches!(io::field_from_bytes(&nan), Err(FormatError::Invalid(_))));

    assert!(io::field_from_bytes(&bytes[..10]).is_err());
}

#[test]
fn density_bytes_round_trip_and_are_not_fields() {
    let g = Grid3::with_origin(8, 2.0, [-1.0; 3]).unwrap();
    let d = gaussian_blobs(&g, TimeAxis::new(1.0, 3).unwrap(), 2, 0.8, 4).unwrap();
    let bytes = io::density_to_bytes(&d);
    assert_eq!(bytes.len(), HEADER_LEN + 8 * 3 * 512);
    assert_eq!(io::density_from_bytes(&bytes).unwrap(), d);
    assert!(matches!(io::field_from_bytes(&bytes), Err(FormatError::Magic(_))));
}

#[test]
fn gen_writes_fields_of_the_stated_size() {
    let dir = tempfile::tempdir().unwrap();
    let out = ok(dir.path(), &["gen", "--out", "abc.csf", "--n", "32"]);
    assert!(out.contains("max |u| = "));
    let len = fs::metadata(dir.path().join("abc.csf")).unwrap().len() as usize;
    assert_eq!(len, HEADER_LEN + 4 * 32usize.pow(3) * 8);
    assert_eq!(&io::sniff(&dir.path().join("abc.csf")).unwrap(), io::FIELD_MAGIC);

    ok(dir.path(), &["gen", "--out", "zero.csf", "--generator", "zero", "--n", "8"]);
    let z = io::read_field(&dir.path().join("zero.csf")).unwrap();
    assert!(z.velocity().iter().all(|v| *v == 0.0));
}

#[test]
fn gen_rejects_bad_parameters() {
    let dir = tempfile::tempdir().unwrap();
    assert_eq!(code(dir.path(), &["gen", "--out", "s.csf", "--generator", "swirl", "--alpha", "0.9", "--n", "16"]), 2);
    assert_eq!(code(dir.path(), &["gen", "--out", "s.csf", "--generator", "vortex"]), 2);
    assert_eq!(code(dir.path(), &["gen", "--out", "s.csf", "--n", "many"]), 2);
    assert_eq!(code(dir.path(), &["gen"]), 2);
}

#[test]
fn cover_command_verifies_what_it_writes() {
    let dir = tempfile::tempdir().unwrap();
    let out = ok(dir.path(), &["cover", "--out", "whole.txt", "--r", "1.0", "--probes", "100000"]);
    assert!(out.contains("multiplicity_max = 1 "), "{out}");
    let text = fs::read_to_string(dir.path().join("whole.txt")).unwrap();
    let cover = cascade_core::cover::parse_cover(&text).unwrap();
    assert_eq!(cover.len(), 1);

    let out = ok(dir.path(), &["cover", "--out", "fine.txt", "--r", "0.125", "--jitter", "0.04", "--probes", "100000"]);
    assert!(out.contains("coverage_ok = true"), "{out}");
    assert!(out.contains("disjoint = true"), "{out}");

    assert_eq!(code(dir.path(), &["cover", "--out", "x.txt", "--r", "0.25", "--k2", "1", "--probes", "100000"]), 3);
}

fn report(dir: &Path, run: &str) -> String {
    fs::read_to_string(dir.join(run).join("report.txt")).unwrap()
}

#[test]
fn analyze_abc_is_vacuous_and_reproducible_from_its_echo() {
    let dir = tempfile::tempdir().unwrap();
    let d = dir.path();
    ok(d, &["gen", "--out", "abc.csf", "--n", "48"]);
    let args = ["analyze", "--out", "a", "--field", "abc.csf", "--r0", "1.4", "--scales", "0.7,0.5", "--probes", "100000"];
    ok(d, &args);
    let first = report(d, "a");
    for section in ["[config]", "[source]", "[baseline]", "[scales]", "[verdict]", "[locality]"] {
        assert!(first.contains(section), "missing {section}");
    }
    assert!(first.contains("pressure stored"), "{first}");
    assert!(first.contains("condition = vacuous"), "{first}");
    assert!(!first.contains("[lemma]"));

    ok(d, &["analyze", "--out", "b", "--config", "a/config.echo"]);
    assert_eq!(report(d, "b"), first);
    assert_eq!(fs::read(d.join("a/scales.csv")).unwrap(), fs::read(d.join("b/scales.csv")).unwrap());
}

#[test]
fn analyze_zero_field_reports_zeros() {
    let dir = tempfile::tempdir().unwrap();
    let d = dir.path();
    ok(d, &["gen", "--out", "z.csf", "--generator", "zero", "--n", "48"]);
    ok(d, &["analyze", "--out", "z", "--field", "z.csf", "--scales", "0.5", "--probes", "100000"]);
    let csv = fs::read_to_string(d.join("z/scales.csv")).unwrap();
    let row: Vec<&str> = csv.lines().nth(1).unwrap().split(',').collect();
    // columns 3.. are the averages and baselines; tau0 is left empty
    for v in &row[3..12] {
        assert_eq!(v.parse::<f64>().unwrap(), 0.0, "{csv}");
    }
    assert_eq!(row[12], "");
    assert!(report(d, "z").contains("tau0 = undefined"));
}

#[test]
fn analyze_measures_checks_the_lemma_bounds() {
    let dir = tempfile::tempdir().unwrap();
    let d = dir.path();
    let common = ["--generator", "blobs", "--n", "32", "--n_time", "3"];
    ok(d, &[&["gen", "--out", "w.csd", "--seed", "1"][..], &common].concat());
    ok(d, &[&["gen", "--out", "e.csd", "--seed", "2"][..], &common].concat());
    let out = ok(
        d,
        &["analyze", "--out", "m", "--energy_density", "w.csd", "--dissipation_density", "e.csd", "--scales", "0.5,0.25", "--probes", "100000"],
    );
    assert!(out.contains("eps0 = "), "{out}");
    let text = report(d, "m");
    assert!(text.contains("kind = measure"));
    let lemma: Vec<&str> = text.lines().skip_while(|l| *l != "[lemma]").skip(2).take(2).collect();
    assert_eq!(lemma.len(), 2, "{text}");
    for line in lemma {
        let f: Vec<&str> = line.split_whitespace().collect();
        assert_eq!(&f[5..7], ["true", "true"], "{line}");
        assert_eq!(f[10], "true", "{line}");
    }

    // the locality command reproduces the table from scales.csv
    ok(d, &["locality", "--out", "l", "--scales_csv", "m/scales.csv"]);
    assert_eq!(fs::read(d.join("l/locality.csv")).unwrap(), fs::read(d.join("m/locality.csv")).unwrap());
}

#[test]
fn analyze_without_input_fails() {
    let dir = tempfile::tempdir().unwrap();
    assert_eq!(code(dir.path(), &["analyze", "--out", "x"]), 4);
    assert_eq!(code(dir.path(), &["analyze", "--out", "x", "--field", "missing.csf"]), 4);
    assert_eq!(code(dir.path(), &["locality", "--out", "x"]), 4);
}

#[test]
fn dr_on_zero_field_and_under_resolved_scales() {
    let dir = tempfile::tempdir().unwrap();
    let d = dir.path();
    ok(d, &["gen", "--out", "z.csf", "--generator", "zero", "--n", "32"]);
    ok(d, &["dr", "--out", "dr", "--field", "z.csf"]);
    let csv = fs::read_to_string(d.join("dr/dr.csv")).unwrap();
    assert_eq!(csv.lines().count(), 1 + 2 * 4);
    assert!(csv.lines().skip(1).all(|l| l.ends_with(",0e0")), "{csv}");
    assert_eq!(code(d, &["dr", "--out", "dr2", "--field", "z.csf", "--eps_max", "0.5"]), 5);
}

#[test]
fn tube_scan_on_the_swirl_stays_within_its_estimate() {
    let dir = tempfile::tempdir().unwrap();
    let d = dir.path();
    let box_args = ["--n", "64", "--box_length", "2.0", "--r_cut", "0.9"];
    ok(d, &[&["gen", "--out", "s.csf", "--generator", "swirl"][..], &box_args].concat());
    let out = ok(d, &["tube", "--out", "t", "--field", "s.csf"]);
    assert!(out.contains("within_estimate = true"), "{out}");
    assert_eq!(fs::read_to_string(d.join("t/tube.csv")).unwrap().lines().count(), 4);
}
