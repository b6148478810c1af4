mod config;
mod experiments;
mod params;
mod report;

use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::time::Instant;

use clap::{Args, Parser, Subcommand};
use statforge::{exec, DistributionSpec, RandomStream};

use config::{parse_config, ExperimentConfig, Flags, Format};
use experiments::{Ctx, EXPERIMENTS};
use report::{ConfigEcho, ReportEnvelope, Runtime};

#[derive(Parser)]
#[command(name = "statforge", version, about = "Seeded statistical experiments with tolerance-checked reports")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run one experiment from a config file and/or flags.
    Run(RunArgs),
    /// List experiment tags with their parameters and defaults.
    ListExperiments,
    /// Evaluate a distribution, e.g. `dist 'Normal{mu=0, sigma2=1}' --cdf 1.96`.
    Dist(DistArgs),
}

#[derive(Args)]
struct RunArgs {
    /// TOML config file.
    config: Option<PathBuf>,
    /// Experiment tag; overrides the config.
    #[arg(long)]
    experiment: Option<String>,
    #[arg(long, conflicts_with = "fresh_seed")]
    seed: Option<u64>,
    /// Draw a seed from the clock; it is recorded in the report.
    #[arg(long)]
    fresh_seed: bool,
    /// Worker threads for replicate fan-out; results do not depend on it.
    #[arg(long)]
    workers: Option<usize>,
    #[arg(long)]
    replicates: Option<usize>,
    /// Output directory for the report and CSV tables; stdout otherwise.
    #[arg(long)]
    out: Option<PathBuf>,
    #[arg(long, value_enum)]
    format: Option<Format>,
    /// Parameter override `key=value`, repeatable.
    #[arg(long = "set", value_name = "KEY=VALUE")]
    sets: Vec<String>,
}

#[derive(Args)]
#[group(required = true, multiple = false, id = "query")]
struct Query {
    #[arg(long, group = "query")]
    pdf: Option<f64>,
    #[arg(long, group = "query")]
    cdf: Option<f64>,
    #[arg(long, group = "query")]
    quantile: Option<f64>,
}

#[derive(Args)]
struct DistArgs {
    spec: String,
    #[command(flatten)]
    query: Query,
}

fn write_outputs(dir: &Path, env: &ReportEnvelope, tables: &[report::Table], format: Format) -> Result<(), String> {
    std::fs::create_dir_all(dir).map_err(|e| format!("{}: {e}", dir.display()))?;
    let (name, body) = match format {
        Format::Json => ("report.json", env.to_json()),
        Format::Csv => ("report.csv", env.to_csv()?),
    };
    let write = |file: &str, bytes: &[u8]| {
        let p = dir.join(file);
        std::fs::write(&p, bytes).map_err(|e| format!("{}: {e}", p.display()))
    };
    write(name, body.as_bytes())?;
    for t in tables {
        write(&format!("{}.csv", t.name), &t.content)?;
    }
    Ok(())
}

fn execute(cfg: &ExperimentConfig, workers: Option<usize>) -> Result<(ReportEnvelope, Vec<report::Table>), String> {
    let tag = cfg.experiment.tag;
    let start = Instant::now();
    let ctx = Ctx { params: &cfg.params, replicates: cfg.replicates, root: RandomStream::new(cfg.seed) };
    let run = || (cfg.experiment.run)(&ctx);
    let outcome = match workers {
        Some(0) => return Err("--workers must be at least 1".into()),
        Some(w) => exec::with_workers(w, run),
        None => run(),
    }
    .map_err(|e| format!("{tag}: {e}"))?;
    let pass = outcome.metrics.iter().all(|m| m.pass != Some(false));
    let env = ReportEnvelope {
        config: ConfigEcho {
            experiment: tag.to_string(),
            seed: cfg.seed,
            seed_source: cfg.seed_source,
            replicates: cfg.replicates,
            params: cfg.params.as_map().clone(),
            overrides: cfg.overrides.clone(),
        },
        metrics: outcome.metrics,
        pass,
        formulas: outcome.formulas,
        tables: outcome.tables.iter().map(|t| format!("{}.csv", t.name)).collect(),
        runtime: Runtime { workers, wall_time_s: start.elapsed().as_secs_f64() },
    };
    Ok((env, outcome.tables))
}

fn run(args: RunArgs) -> Result<bool, String> {
    let text = match &args.config {
        Some(p) => Some(std::fs::read_to_string(p).map_err(|e| format!("{}: {e}", p.display()))?),
        None => None,
    };
    let flags = Flags {
        experiment: args.experiment,
        seed: args.seed,
        fresh_seed: args.fresh_seed,
        replicates: args.replicates,
        out: args.out,
        format: args.format,
        sets: args.sets,
    };
    let cfg = parse_config(text.as_deref(), &flags)?;
    let (env, tables) = execute(&cfg, args.workers)?;
    match &cfg.output {
        Some(dir) => {
            write_outputs(dir, &env, &tables, cfg.format)?;
            for m in &env.metrics {
                let verdict = match m.pass {
                    Some(true) => "pass",
                    Some(false) => "FAIL",
                    None => "-",
                };
                println!("{:<32} {:>16.8} {verdict}", m.name, m.value);
            }
            println!("{}: {} (report in {})", env.config.experiment, if env.pass { "pass" } else { "FAIL" }, dir.display());
        }
        None => match cfg.format {
            Format::Json => print!("{}", env.to_json()),
            Format::Csv => print!("{}", env.to_csv()?),
        },
    }
    Ok(env.pass)
}

fn list() {
    for e in EXPERIMENTS {
        println!("{:<13} {} (default replicates {})", e.tag, e.summary, e.replicates);
        for (key, default) in e.params {
            println!("    {key:<20} {default:?}");
        }
    }
}

fn dist(args: DistArgs) -> Result<(), String> {
    let spec: DistributionSpec = args.spec.parse().map_err(|e: statforge::StatError| e.to_string())?;
    let q = args.query;
    let v = if let Some(x) = q.pdf {
        spec.pdf(x)
    } else if let Some(x) = q.cdf {
        spec.cdf(x)
    } else {
        spec.quantile(q.quantile.unwrap()).map_err(|e| e.to_string())?
    };
    println!("{v}");
    Ok(())
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = match cli.command {
        Command::Run(a) => run(a).map(|pass| if pass { 0 } else { 2 }),
        Command::ListExperiments => {
            list();
            Ok(0)
        }
        Command::Dist(a) => dist(a).map(|_| 0),
    };
    match result {
        Ok(code) => ExitCode::from(code),
        Err(msg) => {
            eprintln!("error: {msg}");
            ExitCode::from(1)
        }
    }
}
