use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use serde::Serialize;

use swarm_rfs::error::Error;
use swarm_rfs::sim::{export_results, format_f64, run_scenario, LoopMode, ScenarioConfig, ScenarioResult};

#[derive(Parser)]
#[command(name = "swarm-rfs", version, about = "RFS swarm control: ILQR, sparsity-promoting LQR and GM-PHD simulation")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run one scenario and export its results.
    Run {
        #[arg(long)]
        config: PathBuf,
        #[arg(long, default_value = "out")]
        out: PathBuf,
        #[arg(long)]
        seed: Option<u64>,
        /// Comma-separated γ list replacing the configured one.
        #[arg(long)]
        gamma: Option<String>,
        /// true_state or phd_estimate.
        #[arg(long = "loop-mode")]
        loop_mode: Option<String>,
    },
    /// Monte Carlo over consecutive seeds starting at the configured one.
    Sweep {
        #[arg(long)]
        config: PathBuf,
        #[arg(long)]
        seeds: u64,
        #[arg(long, default_value = "out")]
        out: PathBuf,
    },
    /// Check a config file without running it.
    Validate {
        #[arg(long)]
        config: PathBuf,
    },
}

fn exit_code(e: &Error) -> u8 {
    match e {
        Error::Config(_) => 2,
        Error::Io(_) => 1,
        _ => 3,
    }
}

fn parse_gammas(list: &str) -> Result<Vec<f64>, Error> {
    list.split(',')
        .map(|t| t.trim().parse::<f64>().map_err(|e| Error::Config(format!("gamma `{t}`: {e}"))))
        .collect()
}

fn print_table(res: &ScenarioResult) {
    let b = &res.baseline;
    println!(
        "ilqr: {} iterations (converged: {}), nnz(K_c) = {}, formation distance reduction {:.4}",
        b.ilqr_iterations,
        b.ilqr_converged,
        b.ilqr_nnz,
        b.rollout.distance_reduction()
    );
    println!("{:>14} {:>6} {:>10} {:>14} {:>6}", "gamma", "nnz", "nnz_ratio", "(J-Jc)/Jc", "edges");
    for e in &res.entries {
        match &e.record {
            Ok(r) => println!(
                "{:>14.4e} {:>6} {:>10.4} {:>14.4e} {:>6}",
                e.gamma,
                r.nnz,
                r.nnz_ratio,
                r.j_ratio.unwrap_or(f64::NAN),
                r.edges
            ),
            Err(msg) => println!("{:>14.4e} failed: {msg}", e.gamma),
        }
    }
}

fn run_one(cfg: &ScenarioConfig, out: &Path) -> Result<ScenarioResult, Error> {
    let res = run_scenario(cfg)?;
    for (stage, secs) in &res.timings {
        log::info!("{stage}: {secs:.2} s");
    }
    export_results(&res, out)?;
    Ok(res)
}

#[derive(Serialize)]
struct SeedRow {
    seed: u64,
    error: Option<String>,
    distance_reduction: Option<f64>,
    gammas: Vec<f64>,
    nnz_ratio: Vec<Option<f64>>,
    j_ratio: Vec<Option<f64>>,
}

fn execute(cli: Cli) -> Result<(), Error> {
    match cli.command {
        Command::Validate { config } => {
            ScenarioConfig::load(&config)?;
            println!("{}: ok", config.display());
        }
        Command::Run { config, out, seed, gamma, loop_mode } => {
            let mut cfg = ScenarioConfig::load(&config)?;
            if let Some(s) = seed {
                cfg.rng_seed = s;
            }
            if let Some(g) = gamma {
                cfg.gamma_list = parse_gammas(&g)?;
            }
            if let Some(m) = loop_mode {
                cfg.loop_mode = m.parse::<LoopMode>()?;
            }
            cfg.validate()?;
            let res = run_one(&cfg, &out)?;
            print_table(&res);
            println!("results written to {}", out.display());
        }
        Command::Sweep { config, seeds, out } => {
            let base = ScenarioConfig::load(&config)?;
            if seeds == 0 {
                return Err(Error::Config("--seeds must be at least 1".into()));
            }
            let mut rows = Vec::new();
            let mut first_err = None;
            for i in 0..seeds {
                let cfg = ScenarioConfig { rng_seed: base.rng_seed.wrapping_add(i), ..base.clone() };
                let dir = out.join(format!("seed_{}", cfg.rng_seed));
                let row = match run_one(&cfg, &dir) {
                    Ok(res) => SeedRow {
                        seed: cfg.rng_seed,
                        error: None,
                        distance_reduction: Some(res.baseline.rollout.distance_reduction()),
                        gammas: res.entries.iter().map(|e| e.gamma).collect(),
                        nnz_ratio: res.entries.iter().map(|e| e.record.as_ref().ok().map(|r| r.nnz_ratio)).collect(),
                        j_ratio: res.entries.iter().map(|e| e.record.as_ref().ok().and_then(|r| r.j_ratio)).collect(),
                    },
                    Err(e @ Error::Io(_)) => return Err(e),
                    Err(e) => {
                        let row = SeedRow {
                            seed: cfg.rng_seed,
                            error: Some(e.to_string()),
                            distance_reduction: None,
                            gammas: cfg.gamma_list.clone(),
                            nnz_ratio: vec![],
                            j_ratio: vec![],
                        };
                        first_err.get_or_insert(e);
                        row
                    }
                };
                match &row.error {
                    None => println!(
                        "seed {}: distance reduction {}",
                        row.seed,
                        row.distance_reduction.map(format_f64).unwrap_or_default()
                    ),
                    Some(e) => println!("seed {}: failed: {e}", row.seed),
                }
                rows.push(row);
            }
            std::fs::create_dir_all(&out).map_err(|e| Error::Io(format!("{}: {e}", out.display())))?;
            let text = serde_json::to_string_pretty(&rows).map_err(|e| Error::Io(e.to_string()))?;
            let path = out.join("sweep.json");
            std::fs::write(&path, text + "\n").map_err(|e| Error::Io(format!("{}: {e}", path.display())))?;
            if rows.iter().all(|r| r.error.is_some()) {
                if let Some(e) = first_err {
                    return Err(e);
                }
            }
        }
    }
    Ok(())
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    match execute(Cli::parse()) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(exit_code(&e))
        }
    }
}
