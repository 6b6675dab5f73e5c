use std::process::ExitCode;

use anyhow::Result;
use clap::Parser;
use eitsim::config::{resolve_cell, AtomDoc, CellDoc};
use eitsim::AtomSpec;

use eitsim_cli::args::{self, Cli, Command};
use eitsim_cli::commands::{execute, input_error, write_artifacts, Context, InputError};
use eitsim_cli::manifest::{self, RunManifest, MANIFEST_NAME};

const THREADS_VAR: &str = "EITSIM_THREADS";

fn configure_threads() -> Result<()> {
    let Ok(v) = std::env::var(THREADS_VAR) else {
        return Ok(());
    };
    let n: usize = v
        .parse()
        .ok()
        .filter(|&n| n > 0)
        .ok_or_else(|| input_error(format!("{THREADS_VAR}={v} is not a positive integer")))?;
    rayon::ThreadPoolBuilder::new().num_threads(n).build_global()?;
    Ok(())
}

fn exit_code(e: &anyhow::Error) -> u8 {
    use eitsim::Error as E;
    for cause in e.chain() {
        if cause.is::<InputError>() {
            return 2;
        }
        if let Some(err) = cause.downcast_ref::<E>() {
            return match err {
                E::Domain { .. }
                | E::Invalid(_)
                | E::Parse { .. }
                | E::GridMismatch(_)
                | E::BeerLambert { .. }
                | E::ZeroBaseline
                | E::Io(_)
                | E::Json(_) => 2,
                _ => 3,
            };
        }
    }
    1
}

fn fresh(cmd: Command) -> Result<()> {
    let atom = AtomSpec::default_rb85_d1();
    let cell = match cmd.cell() {
        Some(arg) => Some(resolve_cell(arg)?),
        None => None,
    };
    let ctx = Context { atom, cell };
    let outcome = execute(&ctx, &cmd)?;
    let m = RunManifest {
        tool: env!("CARGO_PKG_NAME").into(),
        version: env!("CARGO_PKG_VERSION").into(),
        timestamp: manifest::timestamp(),
        subcommand: cmd.name().into(),
        params: cmd.clone(),
        atom_preset: "rb85-d1".into(),
        cell_arg: cmd.cell().map(String::from),
        cell_doc: ctx.cell.as_ref().map(|(_, d)| d.clone()),
        atom: AtomDoc::from_spec(&ctx.atom),
        cell: ctx.cell.as_ref().map(|(c, _)| CellDoc::from_spec(c)),
        inputs: outcome.inputs.clone(),
        outputs: manifest::digests(&outcome.artifacts),
    };
    let mut artifacts = outcome.artifacts;
    let mut bytes = serde_json::to_vec_pretty(&m)?;
    bytes.push(b'\n');
    artifacts.push((MANIFEST_NAME.into(), bytes));
    write_artifacts(cmd.out(), &artifacts)?;
    print!("{}", outcome.summary);
    Ok(())
}

fn replay(r: &args::RunArgs) -> Result<()> {
    let (m, raw) = manifest::load(&r.from_manifest)?;
    if m.version != env!("CARGO_PKG_VERSION") {
        eprintln!(
            "warning: manifest written by version {}, replaying with {}",
            m.version,
            env!("CARGO_PKG_VERSION")
        );
    }
    let atom = AtomDoc::preset(&m.atom_preset).to_spec()?;
    let cell = match &m.cell_doc {
        Some(doc) => Some((doc.to_spec()?, doc.clone())),
        None => None,
    };
    let ctx = Context { atom, cell };
    let outcome = execute(&ctx, &m.params)?;
    manifest::check_inputs(&outcome.inputs, &m.inputs)?;
    let produced = manifest::digests(&outcome.artifacts);
    let mut artifacts = outcome.artifacts;
    artifacts.push((MANIFEST_NAME.into(), raw));
    write_artifacts(&r.out.out, &artifacts)?;
    print!("{}", outcome.summary);
    if produced != m.outputs {
        anyhow::bail!("replayed artifacts differ from the digests recorded in the manifest");
    }
    Ok(())
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return ExitCode::from(if e.use_stderr() { 2 } else { 0 });
        }
    };
    let result = configure_threads().and_then(|_| match &cli.command {
        Command::Run(r) => replay(r),
        cmd => fresh(cmd.clone()),
    });
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(exit_code(&e))
        }
    }
}
