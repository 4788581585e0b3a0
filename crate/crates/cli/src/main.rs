mod args;
mod commands;
mod failure;
mod manifest;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::Parser;

use args::{Cli, Command};
use failure::{code, CliResult, Failure};
use manifest::{sha256_hex, Run, RunManifest};

fn main() -> ExitCode {
    let argv: Vec<String> = std::env::args().skip(1).collect();
    let cli = Cli::parse();
    match dispatch(cli, argv) {
        Ok(()) => ExitCode::SUCCESS,
        Err(f) => {
            eprintln!("error: {f}");
            ExitCode::from(f.code)
        }
    }
}

fn dispatch(cli: Cli, argv: Vec<String>) -> CliResult<()> {
    match &cli.command {
        Command::Rerun(a) => rerun(&a.manifest, a.out.clone()),
        _ => execute(cli, argv).map(|_| ()),
    }
}

/// Runs one subcommand into its output directory and writes the manifest.
fn execute(mut cli: Cli, argv: Vec<String>) -> CliResult<RunManifest> {
    let out = cli.command.common_mut().expect("not a rerun").out.clone();
    let mut run = Run::create(&out)?;
    let mut verified = true;
    match &cli.command {
        Command::Schedule(a) => commands::cmd_schedule(a, &mut run)?,
        Command::Grids(a) => commands::cmd_grids(a, &mut run)?,
        Command::Report(a) => commands::cmd_report(a, &mut run)?,
        Command::Simulate(a) => commands::cmd_simulate(a, &mut run)?,
        Command::Verify(a) => verified = commands::cmd_verify(a, &mut run)?,
        Command::MmseTable(a) => commands::cmd_mmse_table(a, &mut run)?,
        Command::Rerun(_) => unreachable!(),
    }
    let config = serde_json::to_value(&cli).expect("config serializes");
    let manifest = run.finish(argv, config)?;
    if !verified {
        return Err(Failure::new(code::VERIFY, "verification failed"));
    }
    Ok(manifest)
}

/// Replays `manifest` into a fresh directory and compares every artifact.
fn rerun(manifest: &std::path::Path, out: Option<PathBuf>) -> CliResult<()> {
    let old = RunManifest::load(manifest)?;
    let out = out.unwrap_or_else(|| manifest.parent().unwrap_or(std::path::Path::new(".")).join("rerun"));
    let mut cli = Cli::try_parse_from(std::iter::once("lasched".to_string()).chain(old.argv.iter().cloned()))
        .map_err(|e| Failure::config(format!("manifest argv does not parse: {e}")))?;
    let common = cli
        .command
        .common_mut()
        .ok_or_else(|| Failure::config("a manifest cannot replay `rerun`"))?;
    common.out = out.clone();
    let new = execute(cli, old.argv.clone())?;
    let mut mismatches = 0;
    for a in &old.artifacts {
        let now = std::fs::read(out.join(&a.path)).map(|b| sha256_hex(&b)).ok();
        let ok = now.as_deref() == Some(a.sha256.as_str());
        if !ok {
            mismatches += 1;
        }
        println!("{} {}", if ok { "same" } else { "DIFF" }, a.path);
    }
    if new.artifacts.len() != old.artifacts.len() {
        mismatches += 1;
    }
    if mismatches > 0 {
        return Err(Failure::new(code::VERIFY, format!("{mismatches} artifact(s) differ")));
    }
    Ok(())
}
