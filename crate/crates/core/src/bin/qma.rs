use std::fmt::Write as _;
use std::io::Write as _;
use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use serde_json::{json, Value};

use qma_core::config::{self, Overrides};
use qma_core::experiments::{registry, ParamKind};
use qma_core::Error;

/// Batch runner for the branching-wave-function experiments.
#[derive(Parser)]
#[command(name = "qma", version, args_conflicts_with_subcommands = true)]
struct Cli {
    #[command(subcommand)]
    command: Option<Command>,
    #[command(flatten)]
    run: RunArgs,
}

#[derive(Subcommand)]
enum Command {
    /// Run experiments from a config file and/or flags (the default).
    Run(RunArgs),
    /// Print every experiment with its parameters.
    List {
        #[arg(long)]
        json: bool,
    },
}

#[derive(Args, Default)]
struct RunArgs {
    /// JSON config file.
    #[arg(long)]
    config: Option<PathBuf>,
    /// Output directory.
    #[arg(long)]
    out: Option<PathBuf>,
    /// Master seed.
    #[arg(long)]
    seed: Option<u64>,
    /// Experiments run at once.
    #[arg(long)]
    jobs: Option<usize>,
    /// Reduced Planck constant, J·s.
    #[arg(long)]
    hbar: Option<f64>,
    /// Run only this experiment, replacing the config's list.
    #[arg(long)]
    experiment: Option<String>,
    /// Experiment parameter `key=value`; the value is read as JSON if it parses.
    #[arg(long = "param", value_name = "KEY=VALUE")]
    params: Vec<String>,
}

fn kind_name(kind: ParamKind) -> String {
    match kind {
        ParamKind::Number => "number".into(),
        ParamKind::Integer => "integer".into(),
        ParamKind::Bool => "bool".into(),
        ParamKind::Numbers => "number list".into(),
        ParamKind::Choice(options) => options.join("|"),
    }
}

fn list(as_json: bool) -> String {
    let mut out = String::new();
    if as_json {
        let entries: Vec<Value> = registry()
            .iter()
            .map(|e| {
                json!({
                    "name": e.name,
                    "anchor": e.anchor,
                    "params": e.params.iter().map(|p| json!({
                        "name": p.name,
                        "kind": kind_name(p.kind),
                        "default": serde_json::from_str::<Value>(p.default).expect("registry defaults parse"),
                        "doc": p.doc,
                    })).collect::<Vec<_>>(),
                })
            })
            .collect();
        out = serde_json::to_string_pretty(&entries).expect("serializable");
        out.push('\n');
        return out;
    }
    for e in registry() {
        let _ = writeln!(out, "{}", e.name);
        let _ = writeln!(out, "  anchor: {}", e.anchor);
        for p in e.params {
            let _ = writeln!(out, "  --param {}=<{}> (default {}): {}", p.name, kind_name(p.kind), p.default, p.doc);
        }
    }
    out
}

fn run(args: RunArgs) -> Result<i32, Error> {
    let params = args.params.iter().map(|s| config::parse_param(s)).collect::<Result<Vec<_>, _>>()?;
    let overrides = Overrides {
        output_dir: args.out,
        master_seed: args.seed,
        jobs: args.jobs,
        hbar: args.hbar,
        experiment: args.experiment,
        params,
    };
    let cfg = config::load(args.config.as_deref(), &overrides)?;
    let summary = config::execute(&cfg)?;
    for e in &summary.experiments {
        match &e.error {
            Some(msg) => eprintln!("{:<24} error: {msg}", e.label),
            None => {
                let failed: Vec<&str> = e.verdicts.iter().filter(|(_, &v)| !v).map(|(k, _)| k.as_str()).collect();
                if failed.is_empty() {
                    println!("{:<24} pass", e.label);
                } else {
                    println!("{:<24} FAIL {}", e.label, failed.join(", "));
                }
            }
        }
    }
    Ok(summary.exit_code())
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let code = match cli.command {
        Some(Command::List { json }) => {
            // a closed pipe (`qma list | head`) is not an error
            let _ = std::io::stdout().lock().write_all(list(json).as_bytes());
            0
        }
        Some(Command::Run(args)) => run(args).unwrap_or_else(report),
        None => run(cli.run).unwrap_or_else(report),
    };
    ExitCode::from(code as u8)
}

fn report(e: Error) -> i32 {
    eprintln!("error: {e}");
    if matches!(e, Error::Config { .. }) { 2 } else { 1 }
}
