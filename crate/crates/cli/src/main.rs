use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use netinfer_cli::commands::{self, GofOptions, SeOptions};
use netinfer_cli::config::{FamilyChoice, FamilyConfig, ModelChoice};
use netinfer_cli::{CliError, CliResult};
use netinfer_core::optimizer::FitOptions;

/// Simulate, fit and check joint regression models of unit responses and
/// network connections.
#[derive(Parser)]
#[command(name = "netinfer", version)]
struct Cli {
    /// Worker threads (default: all available cores).
    #[arg(long, global = true, env = "NETINFER_THREADS")]
    threads: Option<usize>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Simulate a dataset from a JSON configuration.
    Simulate {
        #[arg(long)]
        config: PathBuf,
        #[arg(long)]
        seed: u64,
        #[arg(long)]
        out: PathBuf,
    },
    /// Maximum pseudo-likelihood fit of a data directory.
    Fit {
        #[arg(long)]
        data: PathBuf,
        #[arg(long, value_enum, default_value = "undirected-example")]
        model: ModelChoice,
        #[command(flatten)]
        family: FamilyArgs,
        #[arg(long, default_value = "fit.json")]
        out: PathBuf,
        #[arg(long, default_value_t = 1000)]
        max_iters: usize,
    },
    /// Add Godambe standard errors and confidence intervals to a fit.
    Se {
        #[arg(long)]
        fit: PathBuf,
        #[arg(long, default_value_t = 500)]
        draws: usize,
        #[arg(long, default_value_t = 500)]
        burn_in: usize,
        #[arg(long, default_value_t = 10)]
        thin: usize,
        #[arg(long)]
        seed: u64,
        #[arg(long, default_value_t = 0.95)]
        level: f64,
        /// Data directory, if it moved since fitting.
        #[arg(long)]
        data: Option<PathBuf>,
        /// Output path (default: overwrite the input artifact).
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Simulation envelopes of network statistics and ROC curves.
    Gof {
        #[arg(long)]
        fit: PathBuf,
        #[arg(long, default_value_t = 100)]
        sims: usize,
        /// Comma-separated: edge_count, shared_partners, spillover_in,
        /// spillover_out, response_sum.
        #[arg(long, value_delimiter = ',', default_value = "shared_partners,edge_count")]
        stats: Vec<String>,
        #[arg(long, default_value_t = 200)]
        burn_in: usize,
        #[arg(long, default_value_t = 10)]
        thin: usize,
        #[arg(long)]
        seed: u64,
        #[arg(long)]
        data: Option<PathBuf>,
        #[arg(long)]
        out: PathBuf,
    },
    /// Replicated simulate-and-fit study; reruns skip finished replications.
    Study {
        #[arg(long)]
        config: PathBuf,
        #[arg(long)]
        out: PathBuf,
        /// Overrides the seed of the configuration.
        #[arg(long)]
        seed: Option<u64>,
    },
}

#[derive(Args)]
struct FamilyArgs {
    #[arg(long, value_enum, default_value = "bernoulli")]
    family: FamilyChoice,
    /// Scale of Gaussian responses.
    #[arg(long, default_value_t = 1.0)]
    psi: f64,
}

fn run(cli: Cli) -> CliResult<()> {
    if let Some(t) = cli.threads {
        if t == 0 {
            return Err(CliError::Validation("--threads must be at least 1".into()));
        }
        rayon::ThreadPoolBuilder::new()
            .num_threads(t)
            .build_global()
            .map_err(|e| CliError::Validation(e.to_string()))?;
    }
    match cli.command {
        Command::Simulate { config, seed, out } => {
            let truth = commands::simulate(&config, seed, &out)?;
            println!("simulated {} units, mean degree {:.2}, into {}", truth.n_units, truth.mean_degree, out.display());
        }
        Command::Fit { data, model, family, out, max_iters } => {
            let family = FamilyConfig { kind: family.family, psi: family.psi };
            let options = FitOptions { max_iters, ..FitOptions::default() };
            let art = commands::fit_data(&data, model, family, options, &out)?;
            let c = &art.convergence;
            println!(
                "{} after {} iterations, pseudo-loglikelihood {:.6}; wrote {}",
                if c.converged { "converged" } else { "NOT converged" },
                c.iterations,
                c.final_loglik,
                out.display()
            );
        }
        Command::Se { fit, draws, burn_in, thin, seed, level, data, out } => {
            let out = out.unwrap_or_else(|| fit.clone());
            let opts = SeOptions { draws, burn_in, thin, seed, level };
            let art = commands::standard_errors(&fit, opts, data.as_deref(), &out)?;
            let q = art.parameters.len() - art.spec()?.n_interest();
            for p in &art.parameters[q..] {
                println!(
                    "{:<14} {:>10.4}  se {:>8.4}  [{:.4}, {:.4}]",
                    p.name,
                    p.estimate,
                    p.se.unwrap_or(f64::NAN),
                    p.ci_lo.unwrap_or(f64::NAN),
                    p.ci_hi.unwrap_or(f64::NAN)
                );
            }
        }
        Command::Gof { fit, sims, stats, burn_in, thin, seed, data, out } => {
            let opts = GofOptions { sims, stats, burn_in, thin, seed };
            let summary = commands::goodness_of_fit(&fit, &opts, data.as_deref(), &out)?;
            for s in &summary.statistics {
                println!("{}: {} points, envelope coverage {:?}", s.statistic, s.points, s.coverage);
            }
            if let (Some(a), Some(b)) = (summary.auc_joint, summary.auc_baseline) {
                println!("AUC joint {a:.4}, baseline {b:.4}");
            }
        }
        Command::Study { config, out, seed } => {
            let (manifest, reps) = commands::study(&config, seed, &out)?;
            print!("{}", commands::study_report(&reps));
            println!("{} replications recorded in {}", manifest.completed.len(), out.display());
        }
    }
    Ok(())
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    match run(Cli::parse()) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
