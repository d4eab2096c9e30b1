use anyhow::{bail, Context, Result};
use clap::{Parser, Subcommand};
use std::path::{Path, PathBuf};
use trimshell::assembly::MassKind;
use trimshell::harness::{pipeline, ExperimentConfig};

/// Explicit dynamics of trimmed isogeometric shells.
#[derive(Parser)]
#[command(name = "trimshell", version)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run one simulation.
    Run {
        config: PathBuf,
        /// Overrides `out.dir`.
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Vary one parameter over a list of values for several mass variants.
    Sweep {
        config: PathBuf,
        /// eps, p, tau, h or any config key.
        #[arg(long)]
        axis: String,
        #[arg(long, value_delimiter = ',', required = true)]
        values: Vec<String>,
        /// Defaults to all four variants.
        #[arg(long, value_delimiter = ',')]
        kinds: Vec<String>,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Critical step sizes and smallest eigenvalues of every mass variant.
    Spectrum {
        config: PathBuf,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Dyadic mesh refinement study.
    Convergence {
        config: PathBuf,
        #[arg(long, default_value_t = 3)]
        levels: usize,
        #[arg(long)]
        out: Option<PathBuf>,
    },
}

fn load(path: &Path, out: Option<PathBuf>) -> Result<ExperimentConfig> {
    let mut cfg = ExperimentConfig::from_file(path).with_context(|| format!("reading {}", path.display()))?;
    if out.is_some() {
        cfg.out_dir = out;
    }
    cfg.validate()?;
    if let Some(dir) = &cfg.out_dir {
        std::fs::create_dir_all(dir).with_context(|| format!("creating {}", dir.display()))?;
    }
    Ok(cfg)
}

fn main() -> Result<()> {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    match Cli::parse().command {
        Command::Run { config, out } => {
            let cfg = load(&config, out)?;
            let o = pipeline::run(&cfg)?;
            println!(
                "{} / {}: {} dofs, {} steps of {:.6e} (dt_c {:.6e})",
                o.kind.name(),
                o.scheme.name(),
                o.n_dofs,
                o.result.steps,
                o.result.dt,
                o.dt_crit
            );
            if let Some(e) = o.final_error() {
                println!("final error at t = {:.6e}: l2_u {:.6e}, linf_u {:.6e}", e.t, e.l2_u, e.linf_u);
            }
        }
        Command::Sweep { config, axis, values, kinds, out } => {
            let cfg = load(&config, out)?;
            let kinds = if kinds.is_empty() {
                MassKind::ALL.to_vec()
            } else {
                kinds.iter().map(|k| MassKind::parse(k)).collect::<trimshell::Result<Vec<_>>>()?
            };
            let rows = pipeline::sweep(&cfg, &axis, &values, &kinds)?;
            let key = trimshell::harness::config::axis_key(&axis)?;
            print!("{}", pipeline::sweep_csv(key, &rows));
            let failed = rows.iter().filter(|r| r.status != "ok").count();
            if failed == rows.len() {
                bail!("all {failed} sweep rows failed");
            }
        }
        Command::Spectrum { config, out } => {
            let cfg = load(&config, out)?;
            for r in pipeline::spectrum(&cfg)? {
                println!(
                    "{}: omega_max_sq {:.6e}, dt_crit {:.6e}, null_dim {}, min_eigs {:?}",
                    r.mass_kind.name(),
                    r.omega_max_sq,
                    r.dt_crit,
                    r.null_dim,
                    r.min_eigs
                );
            }
        }
        Command::Convergence { config, levels, out } => {
            let cfg = load(&config, out)?;
            if levels == 0 {
                bail!("--levels must be positive");
            }
            print!("{}", pipeline::convergence_csv(&pipeline::convergence(&cfg, levels)?));
        }
    }
    Ok(())
}
