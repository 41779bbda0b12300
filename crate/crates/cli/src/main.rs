//! `fblab`: batch driver for the experiments.
//!
//! Exit codes: 0 success, 1 acceptance failure, 2 usage error, 3 invalid
//! configuration or I/O failure.

mod commands;
mod config;
mod report;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Arg, ArgAction, ArgMatches, Command};

use commands::RunError;
use config::{flag_name, Resolved};
use report::Writer;

const DEFAULT_OUT: &str = "fblab-out";

fn cli() -> Command {
    let mut app = Command::new("fblab")
        .about("Parabolic Kolmogorov equation with form-bounded drift")
        .subcommand_required(true)
        .arg_required_else_help(true);
    for c in commands::commands() {
        let mut sub = Command::new(c.name)
            .about(c.about)
            .arg(Arg::new("config").long("config").value_name("FILE").help("key = value file"))
            .arg(Arg::new("out").long("out").value_name("DIR").help("output directory (default $FBLAB_OUT_DIR, then ./fblab-out)"))
            .arg(Arg::new("no-timestamp").long("no-timestamp").action(ArgAction::SetTrue).help("omit the generation time"))
            .arg(Arg::new("jobs").long("jobs").value_parser(clap::value_parser!(usize)).help("worker threads"));
        if c.name == "formbound" || c.stochastic {
            sub = sub.arg(
                Arg::new("seed")
                    .long("seed")
                    .value_parser(clap::value_parser!(u64))
                    .required(c.stochastic)
                    .help("random seed"),
            );
        }
        for k in &c.keys {
            let mut help = k.help.to_string();
            if let Some(d) = k.default {
                help.push_str(&format!(" [default: {d}]"));
            }
            sub = sub.arg(Arg::new(k.name).long(flag_name(k.name)).value_name("VALUE").help(help).allow_hyphen_values(true));
        }
        app = app.subcommand(sub);
    }
    app
}

fn execute(name: &str, m: &ArgMatches) -> Result<(), RunError> {
    let spec = commands::commands().into_iter().find(|c| c.name == name).expect("registered subcommand");
    let file = match m.get_one::<String>("config") {
        Some(path) => config::parse(&std::fs::read_to_string(path)?)?,
        None => Vec::new(),
    };
    let flags: Vec<(String, String)> =
        spec.keys.iter().filter_map(|k| m.get_one::<String>(k.name).map(|v| (k.name.to_string(), v.clone()))).collect();
    let mut cfg = Resolved::new(&spec.keys, file, flags)?;
    for k in &spec.keys {
        if k.default.is_none() && required(name, k.name) && cfg.opt(k.name).is_none() {
            return Err(fblab::Error::Config(format!("missing key {} (--{})", k.name, flag_name(k.name))).into());
        }
    }
    let seed = m.try_get_one::<u64>("seed").ok().flatten().copied();
    if let Some(s) = seed {
        cfg.record("seed", s);
    }
    if let Some(&jobs) = m.get_one::<usize>("jobs") {
        // only fails if a pool already exists, which cannot happen here
        let _ = rayon::ThreadPoolBuilder::new().num_threads(jobs).build_global();
    }
    let dir = m
        .get_one::<String>("out")
        .map(PathBuf::from)
        .or_else(|| std::env::var_os("FBLAB_OUT_DIR").map(PathBuf::from))
        .unwrap_or_else(|| PathBuf::from(DEFAULT_OUT));
    let mut out = Writer::new(&dir, name, &cfg, !m.get_flag("no-timestamp"))?;
    let res = commands::run(name, &cfg, &mut out, seed);
    for p in &out.written {
        eprintln!("wrote {}", p.display());
    }
    res
}

/// Keys without a default that a subcommand cannot run without.
fn required(sub: &str, key: &str) -> bool {
    matches!((sub, key), ("admissibility", "d" | "q" | "delta") | ("moser", "d" | "q"))
}

fn main() -> ExitCode {
    let matches = cli().get_matches();
    let (name, m) = matches.subcommand().expect("subcommand required");
    match execute(name, m) {
        Ok(()) => ExitCode::SUCCESS,
        Err(RunError::AcceptanceFailed) => {
            eprintln!("fblab: acceptance criteria failed");
            ExitCode::from(1)
        }
        Err(RunError::Validation(e)) => {
            eprintln!("fblab: {e}");
            ExitCode::from(3)
        }
        Err(RunError::Io(e)) => {
            eprintln!("fblab: {e}");
            ExitCode::from(3)
        }
    }
}
