//! Scenario-driven CLI front end.
//!
//! `flexodg run <config.json> [--out DIR] [--vtk] [--scenario NAME]
//! [--set key=value ...]` — exit codes: 0 success, 2 config error,
//! 3 solver/runtime failure.

use clap::{Parser, Subcommand};
use flexodg::scenario::{run_scenario, write_csv, ScenarioConfig};
use flexodg::vtk::write_vtk;
use flexodg::FlexoError;
use std::path::PathBuf;
use std::process::ExitCode;

#[derive(Parser)]
#[command(name = "flexodg", about = "Multi-patch IGA solver for flexoelectric lattices")]
struct Cli {
    #[command(subcommand)]
    cmd: Cmd,
}

#[derive(Subcommand)]
enum Cmd {
    /// Run a scenario config and write CSV (and optionally VTK) outputs.
    Run {
        /// Path to a JSON scenario config.
        config: PathBuf,
        /// Output directory (created if missing).
        #[arg(long, default_value = ".")]
        out: PathBuf,
        /// Also write one VTK field file per solve.
        #[arg(long)]
        vtk: bool,
        /// Override the scenario name from the config.
        #[arg(long)]
        scenario: Option<String>,
        /// Dotted-path config overrides, e.g. --set rho=0.3.
        #[arg(long = "set", value_name = "KEY=VALUE")]
        set: Vec<String>,
    },
}

fn exit_code_for(err: &FlexoError) -> u8 {
    match err {
        FlexoError::Config(_) | FlexoError::InvalidArgument(_) => 2,
        _ => 3,
    }
}

fn run(
    config: &PathBuf,
    out: &PathBuf,
    vtk: bool,
    scenario: Option<&str>,
    set: &[String],
) -> Result<(), FlexoError> {
    let text = std::fs::read_to_string(config)
        .map_err(|e| FlexoError::Config(format!("{}: {e}", config.display())))?;
    let mut value: serde_json::Value = serde_json::from_str(&text)
        .map_err(|e| FlexoError::Config(format!("{}: {e}", config.display())))?;
    if let Some(name) = scenario {
        ScenarioConfig::apply_set(&mut value, "scenario", &format!("\"{name}\""))?;
    }
    for kv in set {
        let (k, v) = kv
            .split_once('=')
            .ok_or_else(|| FlexoError::Config(format!("--set expects KEY=VALUE, got '{kv}'")))?;
        ScenarioConfig::apply_set(&mut value, k, v)?;
    }
    let cfg = ScenarioConfig::from_value(value)?;

    let output = run_scenario(&cfg)?;
    std::fs::create_dir_all(out).map_err(FlexoError::Io)?;
    let csv_path = out.join(format!("{}.csv", cfg.scenario));
    write_csv(&output.records, &csv_path)?;
    for r in &output.records {
        println!(
            "{} {}={:.6e} dofs={} residual={:.3e} k_em={:.6e} [{:.2}s]",
            r.scenario, r.sweep, r.sweep_value, r.n_dofs, r.residual, r.k_em, r.wall_time_s
        );
    }
    println!("wrote {}", csv_path.display());
    if vtk {
        let sampling = cfg.vtk_sampling.unwrap_or(4);
        for (stem, mesh, sol) in &output.solutions {
            let path = out.join(format!("{stem}.vtk"));
            write_vtk(mesh, sol, sampling, &path)?;
            println!("wrote {}", path.display());
        }
    }
    Ok(())
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match cli.cmd {
        Cmd::Run {
            config,
            out,
            vtk,
            scenario,
            set,
        } => match run(&config, &out, vtk, scenario.as_deref(), &set) {
            Ok(()) => ExitCode::SUCCESS,
            Err(e) => {
                eprintln!("error: {e}");
                ExitCode::from(exit_code_for(&e))
            }
        },
    }
}
