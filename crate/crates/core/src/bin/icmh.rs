use std::collections::BTreeMap;
use std::path::PathBuf;

use anyhow::{bail, Context, Result};
use clap::{Parser, Subcommand};
use icmh::cli::{self, EvalArgs, RunConfig};
use icmh::eval::Cutoff;

#[derive(Parser)]
#[command(name = "icmh", version, about = "Incremental cross-modal hashing")]
struct Args {
    /// key=value configuration file
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Master seed
    #[arg(long, global = true)]
    seed: Option<u64>,
    /// Output directory
    #[arg(long, global = true)]
    out: Option<PathBuf>,
    /// Machine-readable key=value output
    #[arg(long, global = true)]
    porcelain: bool,
    /// Override a configuration key (repeatable)
    #[arg(long = "set", value_name = "KEY=VALUE", global = true)]
    set: Vec<String>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Write a synthetic paired dataset and its manifest
    GenSynth,
    /// Run the incremental protocols and write results
    Run,
    /// Score query codes against gallery codes
    Eval {
        /// Dataset manifest whose x and y matrices hold query codes
        #[arg(long)]
        query: PathBuf,
        /// Dataset manifest whose x and y matrices hold gallery codes
        #[arg(long)]
        gallery: PathBuf,
        /// Cutoff: a positive integer or `all`
        #[arg(long, short, default_value = "50")]
        k: Cutoff,
        /// Skip the gallery item at the query's own index
        #[arg(long)]
        exclude_self: bool,
    },
}

fn config(args: &Args) -> Result<RunConfig> {
    let mut overrides = BTreeMap::new();
    for s in &args.set {
        let Some((k, v)) = s.split_once('=') else {
            bail!("--set expects KEY=VALUE, got {s:?}");
        };
        overrides.insert(k.trim().to_string(), v.trim().to_string());
    }
    if let Some(seed) = args.seed {
        overrides.insert("seed".into(), seed.to_string());
    }
    if let Some(out) = &args.out {
        overrides.insert("out".into(), out.display().to_string());
    }
    let cfg = RunConfig::load(args.config.as_deref(), &overrides).context("invalid configuration")?;
    for n in &cfg.notices {
        eprintln!("{n}");
    }
    Ok(cfg)
}

fn main() -> Result<()> {
    let args = Args::parse();
    match &args.command {
        Command::GenSynth => {
            let cfg = config(&args)?;
            let manifest = cli::cmd_gen_synth(&cfg)?;
            if args.porcelain {
                println!("manifest={}", manifest.display());
            } else {
                println!("wrote {}", manifest.display());
            }
        }
        Command::Run => {
            let cfg = config(&args)?;
            let out = cli::cmd_run(&cfg)?;
            for f in &out.files {
                if args.porcelain {
                    println!("file={}", f.display());
                }
            }
            if !args.porcelain {
                for run in &out.runs {
                    let last = run.final_phase();
                    println!(
                        "{} {}: final retrieval MAP {:.4}, hashing MAP {:.4}",
                        run.protocol, run.method, last.retrieval.average, last.hashing.average
                    );
                }
                println!("results in {}", cfg.out.display());
            }
        }
        Command::Eval {
            query,
            gallery,
            k,
            exclude_self,
        } => {
            let report = cli::cmd_eval(&EvalArgs {
                query: query.clone(),
                gallery: gallery.clone(),
                cutoff: *k,
                exclude_self: *exclude_self,
            })?;
            if args.porcelain {
                print!("{}", report.porcelain());
            } else {
                print!("{}", report.human());
            }
        }
    }
    Ok(())
}
