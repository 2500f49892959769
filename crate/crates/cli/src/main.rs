use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use fracdrift_core::harness::{
    load_config, run_config, run_preset, Preset, PresetOptions, RunOutcome,
};

/// Fractional drift-diffusion solver and experiment presets.
///
/// Set FRACDRIFT_THREADS to fix the worker thread count.
#[derive(Parser)]
#[command(name = "fracdrift", version)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run the simulation described by a TOML config.
    Run {
        config: PathBuf,
        /// Overrides `output.dir` from the config.
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Run a named experiment and print its verdict.
    Preset {
        /// One of sqg_maxprinciple, besov_chain, molecule_ledger, transfer, picard, linfty_truncation.
        name: Preset,
        #[arg(long, default_value = "out")]
        out: PathBuf,
        /// Grid points per axis.
        #[arg(long)]
        n: Option<usize>,
        #[arg(long)]
        alpha: Option<f64>,
        #[arg(long)]
        dt: Option<f64>,
        #[arg(long, default_value_t = 7)]
        seed: u64,
    },
    /// Parse and validate a config without running it.
    Validate { config: PathBuf },
}

fn init_threads() -> Result<(), String> {
    let Ok(raw) = std::env::var("FRACDRIFT_THREADS") else {
        return Ok(());
    };
    let n: usize = raw
        .parse()
        .map_err(|_| format!("FRACDRIFT_THREADS must be a positive integer, got `{raw}`"))?;
    rayon::ThreadPoolBuilder::new()
        .num_threads(n)
        .build_global()
        .map_err(|e| e.to_string())
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    if let Err(e) = init_threads() {
        eprintln!("error: {e}");
        return ExitCode::from(2);
    }
    match execute(cli.command) {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => ExitCode::from(1),
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(2)
        }
    }
}

fn execute(command: Command) -> fracdrift_core::Result<bool> {
    match command {
        Command::Validate { config } => {
            let cfg = load_config(&config)?;
            println!(
                "ok: {}-d grid N = {}, L = {}, alpha = {}, dt = {}, t_end = {}{}",
                cfg.grid.dim(),
                cfg.grid.points_per_axis(),
                cfg.grid.box_length(),
                cfg.equation.alpha,
                cfg.dt,
                cfg.t_end,
                cfg.preset
                    .as_deref()
                    .map(|p| format!(", preset {p}"))
                    .unwrap_or_default()
            );
            Ok(true)
        }
        Command::Run { config, out } => {
            let cfg = load_config(&config)?;
            let outcome = run_config(&cfg, out.as_deref())?;
            match &outcome {
                RunOutcome::Preset(p) => print!("{}", p.verdict_text()),
                RunOutcome::Single(s) => {
                    println!("steps {}, t = {}", s.steps, s.final_time);
                    println!(
                        "final L2 {:.6e}, Linf {:.6e}",
                        s.final_norms.lp(2.0).unwrap_or(f64::NAN),
                        s.final_norms.linf
                    );
                    if let Some(r) = s.transfer_residual {
                        println!("transfer residual {r:.3e}");
                    }
                    if let Some(l) = &s.ledger {
                        println!("ledger {}", if l.pass() { "PASS" } else { "FAIL" });
                    }
                    for f in &s.files {
                        println!("wrote {}", f.display());
                    }
                }
            }
            Ok(outcome.pass())
        }
        Command::Preset {
            name,
            out,
            n,
            alpha,
            dt,
            seed,
        } => {
            let opts = PresetOptions {
                out_dir: out,
                n,
                alpha,
                dt,
                seed,
            };
            let outcome = run_preset(name, &opts)?;
            print!("{}", outcome.verdict_text());
            Ok(outcome.pass())
        }
    }
}
