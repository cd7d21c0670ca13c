//! Command-line front end: `run`, `compare` and `trace`.

use std::ffi::OsString;
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand};

use crate::config::{load_config, parse_policies};
use crate::error::{Error, Result};
use crate::harness::{monte_carlo, run_episode, trial_seed, Experiment, ExperimentConfig};
use crate::output::{results_csv, trace_csv, write_atomic, RunManifest};
use crate::policies::PolicyKind;

pub const OUT_ENV: &str = "BEAMTRACK_OUT";

#[derive(Debug, Parser)]
#[command(name = "beamtrack", version, about = "Adaptive pilot-beam selection experiments")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Monte Carlo evaluation of one experiment; writes <name>.csv and a manifest.
    Run(Common),
    /// Several presets with common random numbers; writes compare.csv.
    Compare(Common),
    /// A single episode (trial 0) of one policy, the first listed unless
    /// --policies names one; writes <name>_<policy>_trace.csv.
    Trace(Common),
}

#[derive(Debug, Args)]
struct Common {
    /// Preset name(s): fig5a, fig5b, fig6, fig7. `compare` takes a comma list.
    #[arg(long, value_delimiter = ',')]
    preset: Vec<String>,
    /// TOML config file with dotted keys; applied on top of the preset.
    #[arg(long)]
    config: Option<PathBuf>,
    #[arg(long)]
    trials: Option<usize>,
    #[arg(long)]
    seed: Option<u64>,
    /// Output directory.
    #[arg(long, env = OUT_ENV, default_value = "results")]
    out: PathBuf,
    /// Comma-separated policies, e.g. greedy-full,lookahead(2),random.
    #[arg(long)]
    policies: Option<String>,
    /// Depth for every lookahead policy in the list.
    #[arg(long)]
    depth: Option<usize>,
}

/// Parses `args` (including the program name), runs the command and
/// returns the process exit code.
pub fn run<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return e.exit_code();
        }
    };
    match execute(cli.command) {
        Ok(paths) => {
            for p in paths {
                println!("{}", p.display());
            }
            0
        }
        Err(e) => {
            eprintln!("error: {e}");
            exit_code(&e)
        }
    }
}

fn exit_code(e: &Error) -> i32 {
    match e {
        Error::Config(_) | Error::Parameter(_) => 2,
        Error::ImpossibleObservation(_) | Error::Io { .. } => 1,
    }
}

fn resolve(args: &Common, preset: Option<&str>) -> Result<ExperimentConfig> {
    let mut cfg = match (&args.config, preset) {
        (Some(path), p) => load_config(path, p)?,
        (None, Some(p)) => ExperimentConfig::preset(p)?,
        (None, None) => return Err(Error::config("need --preset or --config")),
    };
    if let Some(t) = args.trials {
        cfg.trials = t;
    }
    if let Some(s) = args.seed {
        cfg.seed = s;
    }
    if let Some(list) = &args.policies {
        cfg.policies = parse_policies([list.as_str()])?;
        if cfg.policies.is_empty() {
            return Err(Error::config("--policies is empty"));
        }
    }
    if let Some(d) = args.depth {
        if d == 0 {
            return Err(Error::config("--depth must be at least 1"));
        }
        for p in &mut cfg.policies {
            if let PolicyKind::Lookahead(_) = p {
                *p = PolicyKind::Lookahead(d);
            }
        }
    }
    cfg.validate()?;
    Ok(cfg)
}

fn single_preset(args: &Common) -> Result<Option<&str>> {
    match args.preset.as_slice() {
        [] => Ok(None),
        [p] => Ok(Some(p.as_str())),
        _ => Err(Error::config("this command takes a single --preset")),
    }
}

fn write_results(out: &Path, stem: &str, command: &str, configs: Vec<ExperimentConfig>) -> Result<Vec<PathBuf>> {
    let results = configs
        .iter()
        .map(|c| monte_carlo(&Experiment::new(c.clone())?))
        .collect::<Result<Vec<_>>>()?;
    let csv = out.join(format!("{stem}.csv"));
    let manifest = out.join(format!("{stem}.manifest.json"));
    write_atomic(&csv, &results_csv(&results))?;
    let m = RunManifest::new(command, configs, vec![csv.clone()], results);
    write_atomic(&manifest, &m.to_json())?;
    Ok(vec![csv, manifest])
}

fn execute(command: Command) -> Result<Vec<PathBuf>> {
    match command {
        Command::Run(args) => {
            let cfg = resolve(&args, single_preset(&args)?)?;
            let stem = cfg.name.clone();
            write_results(&args.out, &stem, "run", vec![cfg])
        }
        Command::Compare(args) => {
            if args.preset.is_empty() {
                return Err(Error::config("compare needs at least one --preset"));
            }
            let configs = args
                .preset
                .iter()
                .map(|p| resolve(&args, Some(p)))
                .collect::<Result<Vec<_>>>()?;
            write_results(&args.out, "compare", "compare", configs)
        }
        Command::Trace(args) => {
            let cfg = resolve(&args, single_preset(&args)?)?;
            if args.policies.is_some() && cfg.policies.len() != 1 {
                return Err(Error::config("trace takes exactly one policy"));
            }
            let kind = cfg.policies[0];
            let exp = Experiment::new(cfg)?;
            let trace = run_episode(&exp, kind, trial_seed(exp.config.seed, 0))?;
            let name = kind.to_string().replace(['(', ')'], "");
            let path = args.out.join(format!("{}_{name}_trace.csv", exp.config.name));
            write_atomic(&path, &trace_csv(&trace))?;
            Ok(vec![path])
        }
    }
}
