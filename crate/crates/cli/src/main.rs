use std::path::PathBuf;
use std::process::ExitCode;
use std::time::Instant;

use anyhow::{Context, Result};
use cascade_cli::config::KEYS;
use cascade_cli::{Command, RunConfig, THREADS_VAR};
use clap::{Arg, ArgMatches};

const ABOUT: &[(&str, &str)] = &[
    ("gen", "write a synthetic velocity field or density file"),
    ("cover", "generate and verify a ball cover of B(0, r0)"),
    ("analyze", "ensemble averages, cascade verdict and locality table"),
    ("dr", "Duchon-Robert estimator scan"),
    ("tube", "dissipation pairing at nested radii about the origin"),
    ("locality", "locality ratios from a scales.csv table"),
];

fn cli() -> clap::Command {
    let mut root = clap::Command::new("cascade")
        .version(env!("CARGO_PKG_VERSION"))
        .about("Energy-cascade diagnostics over ball covers")
        .subcommand_required(true);
    for (name, about) in ABOUT {
        let mut sub = clap::Command::new(*name)
            .about(*about)
            .arg(Arg::new("config").long("config").value_name("FILE").help("key = value file"))
            .arg(Arg::new("out").long("out").short('o').value_name("PATH").required(true).help("output file or directory"));
        for k in KEYS {
            let help = if k.default.is_empty() { k.help.to_string() } else { format!("{} [default: {}]", k.help, k.default) };
            sub = sub.arg(Arg::new(k.name).long(k.name).value_name("VALUE").help(help));
        }
        root = root.subcommand(sub);
    }
    root
}

fn configure(m: &ArgMatches) -> Result<RunConfig> {
    let mut cfg = RunConfig::default();
    if let Some(path) = m.get_one::<String>("config") {
        let text = std::fs::read_to_string(path).with_context(|| format!("reading {path}"))?;
        cfg.merge(&text)?;
    }
    for k in KEYS {
        if let Some(v) = m.get_one::<String>(k.name) {
            cfg.set(k.name, v)?;
        }
    }
    Ok(cfg)
}

fn set_threads() -> Result<()> {
    if let Ok(v) = std::env::var(THREADS_VAR) {
        let n: usize = v.parse().with_context(|| format!("{THREADS_VAR}={v}"))?;
        rayon::ThreadPoolBuilder::new().num_threads(n).build_global()?;
    }
    Ok(())
}

fn main() -> ExitCode {
    let matches = cli().get_matches();
    let (name, m) = matches.subcommand().expect("subcommand required");
    let cmd = Command::parse(name).expect("registered subcommand");
    let start = Instant::now();
    let result = set_threads().and_then(|_| {
        let cfg = configure(m)?;
        let out = PathBuf::from(m.get_one::<String>("out").expect("required"));
        cmd.run(&cfg, &out)
    });
    match result {
        Ok(summary) => {
            print!("{summary}");
            eprintln!("{} finished in {:.2} s", cmd.name(), start.elapsed().as_secs_f64());
            ExitCode::SUCCESS
        }
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(cmd.exit_code() as u8)
        }
    }
}
