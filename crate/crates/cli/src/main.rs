//! `nofob`: certified splitting solves from JSON configuration documents.
//!
//! Exit status: 0 when every verdict check passes, 1 when the step-size
//! certificate fails under enforcement, 2 on divergence, 3 on configuration
//! errors and 4 when the run completes but a verdict check fails.

mod config;
mod solve;

use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::{bail, Context};
use clap::{Args, Parser, Subcommand};
use nofob::methods::presets;
use nofob::problems::generate;
use serde_json::json;

use config::{Overrides, Resolved, RunConfig};
use solve::{execute, table, table_csv, Outcome, Status};

const CONFIG_ERROR: u8 = 3;

#[derive(Parser)]
#[command(name = "nofob", version, about = "Certified forward-backward type splitting solves")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Args, Clone, Default)]
struct RunFlags {
    /// Output directory for traces and summaries.
    #[arg(long, value_name = "DIR")]
    out: Option<PathBuf>,
    /// Seed for generated problems.
    #[arg(long, value_name = "N")]
    seed: Option<u64>,
    /// Run even if the step-size certificate fails.
    #[arg(long)]
    no_enforce_certificate: bool,
    #[arg(long, value_name = "N")]
    max_iter: Option<usize>,
    /// Residual tolerance of the stopping rule.
    #[arg(long, value_name = "X")]
    tol: Option<f64>,
    /// Problem view to solve.
    #[arg(long, value_name = "NAME")]
    view: Option<String>,
}

impl RunFlags {
    fn overrides(&self) -> Overrides {
        Overrides {
            seed: self.seed,
            no_enforce: self.no_enforce_certificate,
            max_iter: self.max_iter,
            tol: self.tol,
            view: self.view.clone(),
        }
    }

    fn out_dir(&self) -> PathBuf {
        self.out.clone().unwrap_or_else(|| PathBuf::from("."))
    }
}

#[derive(Subcommand)]
enum Command {
    /// Run one configuration; writes a trace CSV and a JSON summary.
    Run {
        #[arg(long, value_name = "PATH")]
        config: PathBuf,
        #[command(flatten)]
        flags: RunFlags,
    },
    /// List the method presets with their parameters and certificates.
    ListMethods {
        #[arg(long)]
        json: bool,
    },
    /// Run several configurations on one problem and tabulate them.
    Compare {
        #[arg(long = "config", value_name = "PATH", required = true)]
        configs: Vec<PathBuf>,
        #[command(flatten)]
        flags: RunFlags,
    },
    /// Write a generated problem document.
    GenProblem {
        /// Generator name.
        name: String,
        #[arg(long, value_name = "N", default_value_t = 0)]
        seed: u64,
        /// Directory for `<name>-<seed>.json`; stdout when absent.
        #[arg(long, value_name = "DIR")]
        out: Option<PathBuf>,
    },
}

fn write(path: &Path, contents: &str) -> anyhow::Result<()> {
    if let Some(dir) = path.parent() {
        fs::create_dir_all(dir).with_context(|| format!("creating {}", dir.display()))?;
    }
    fs::write(path, contents).with_context(|| format!("writing {}", path.display()))
}

fn load(path: &Path, flags: &RunFlags) -> anyhow::Result<Resolved> {
    let mut config = RunConfig::load(path)?;
    config.apply(&flags.overrides());
    config.resolve()
}

fn write_outcome(o: &Outcome, trace: &Path, summary: &Path) -> anyhow::Result<()> {
    if let Some(csv) = &o.trace_csv {
        write(trace, csv)?;
    }
    write(summary, &(serde_json::to_string_pretty(&o.summary)? + "\n"))
}

fn run(config: &Path, flags: &RunFlags) -> anyhow::Result<Status> {
    let resolved = load(config, flags)?;
    let outcome = execute(&resolved)?;
    let out = flags.out_dir();
    let output = &resolved.config.output;
    let trace = out.join(output.trace.clone().unwrap_or_else(|| "trace.csv".into()));
    let summary = out.join(output.summary.clone().unwrap_or_else(|| "summary.json".into()));
    write_outcome(&outcome, &trace, &summary)?;
    let residual = outcome.residual.map(|r| format!("{r:.3e}")).unwrap_or_else(|| "-".into());
    println!(
        "{} on {}/{}: {} after {} iterations, residual {residual}",
        outcome.preset,
        resolved.document.name,
        outcome.view,
        outcome.status.label(),
        outcome.iterations
    );
    if let Some(err) = outcome.summary.get("error").and_then(|e| e.as_str()) {
        eprintln!("error: {err}");
    }
    Ok(outcome.status)
}

fn compare(configs: &[PathBuf], flags: &RunFlags) -> anyhow::Result<Status> {
    let mut members: Vec<Resolved> = Vec::new();
    for path in configs {
        let mut config = RunConfig::load(path)?;
        config.apply(&flags.overrides());
        config.validate()?;
        // one document per distinct source
        let key = config.problem_key()?;
        let shared = members.iter().find(|m| m.problem_key == key).map(|m| m.document.clone());
        let resolved = match shared {
            Some(document) => Resolved {
                preset: config.validate()?,
                config,
                document,
                problem_key: key,
            },
            None => config.resolve()?,
        };
        if let Some(first) = members.first() {
            if first.document != resolved.document {
                bail!(
                    "compare needs one shared problem: {} uses `{}`, {} uses `{}`",
                    configs[0].display(),
                    first.problem_key,
                    path.display(),
                    resolved.problem_key
                );
            }
        }
        members.push(resolved);
    }
    let outcomes = members.iter().map(execute).collect::<anyhow::Result<Vec<_>>>()?;
    print!("{}", table(&outcomes));
    if let Some(out) = &flags.out {
        for (i, o) in outcomes.iter().enumerate() {
            let stem = format!("{i}-{}", o.preset);
            write_outcome(o, &out.join(format!("{stem}.csv")), &out.join(format!("{stem}.json")))?;
        }
        write(&out.join("compare.csv"), &table_csv(&outcomes))?;
    }
    Ok(outcomes
        .iter()
        .map(|o| o.status)
        .find(|s| *s != Status::Passed)
        .unwrap_or(Status::Passed))
}

fn list_methods(as_json: bool) -> anyhow::Result<()> {
    if as_json {
        let entries: Vec<_> = presets()
            .iter()
            .map(|p| {
                let mut entry = serde_json::to_value(p).expect("presets serialize");
                entry["certificate"] = json!(p.certificate());
                entry
            })
            .collect();
        println!("{}", serde_json::to_string_pretty(&entries)?);
        return Ok(());
    }
    for p in presets() {
        println!("{}: {}", p.name, p.method);
        println!("  form:        {}", serde_json::to_value(p.form)?.as_str().unwrap_or_default());
        println!("  kernel:      {}", p.kernel);
        println!("  requires:    {}", p.requires);
        println!("  certificate: {}", p.certificate());
        println!("  parameters:");
        for spec in p.params {
            println!("    {} ({}): {}", spec.name, spec.kind, spec.description);
        }
        println!();
    }
    Ok(())
}

fn gen_problem(name: &str, seed: u64, out: Option<&Path>) -> anyhow::Result<()> {
    let doc = generate(name, seed)?;
    let text = doc.to_json() + "\n";
    match out {
        Some(dir) => {
            let path = dir.join(format!("{name}-{seed}.json"));
            write(&path, &text)?;
            println!("{}", path.display());
        }
        None => print!("{text}"),
    }
    Ok(())
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = match &cli.command {
        Command::Run { config, flags } => run(config, flags),
        Command::Compare { configs, flags } => compare(configs, flags),
        Command::ListMethods { json } => list_methods(*json).map(|_| Status::Passed),
        Command::GenProblem { name, seed, out } => gen_problem(name, *seed, out.as_deref()).map(|_| Status::Passed),
    };
    match result {
        Ok(status) => ExitCode::from(status.exit_code()),
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(CONFIG_ERROR)
        }
    }
}
