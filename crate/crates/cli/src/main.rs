mod config;
mod run;

use std::process::ExitCode;

use clap::Parser;
use config::{Cli, RunConfig};
use tangentscope_core::Error;

fn load(cli: Cli) -> anyhow::Result<RunConfig> {
    use anyhow::Context;
    if let Some(path) = cli.config {
        if cli.command.is_some() {
            anyhow::bail!("--config replays a saved run and cannot be combined with a subcommand");
        }
        let text = std::fs::read_to_string(&path).with_context(|| format!("--config {}", path.display()))?;
        let mut cfg: RunConfig =
            serde_json::from_str(&text).with_context(|| format!("--config {}: not a run file", path.display()))?;
        if let Some(out) = cli.out {
            cfg.out = out;
        }
        return Ok(cfg);
    }
    let command = cli.command.context("a subcommand or --config is required")?;
    let out = cli.out.context("--out <DIR> is required")?;
    Ok(RunConfig { out, command })
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { ExitCode::from(1) } else { ExitCode::SUCCESS };
        }
    };
    let cfg = match load(cli) {
        Ok(c) => c,
        Err(e) => {
            eprintln!("error: {e:#}");
            return ExitCode::from(1);
        }
    };
    let Err(e) = run::run(&cfg) else {
        return ExitCode::SUCCESS;
    };
    if let Some(d) = e.downcast_ref::<Error>().and_then(Error::diagnostic) {
        let _ = run::write_json(&cfg.out.join("diagnostic.json"), d);
        eprintln!("{}", serde_json::to_string(d).unwrap_or_else(|_| d.to_string()));
        return ExitCode::from(2);
    }
    eprintln!("error: {e:#}");
    ExitCode::from(1)
}
