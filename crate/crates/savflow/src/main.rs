//! `savflow <experiment> [--config PATH] [--key value ...]`
//!
//! Exit codes: 0 success, 2 configuration error, 3 solver divergence.

use clap::Parser;
use savflow::cli::{
    resolve_config, run_convergence, run_cylinder, run_offset_circles, Experiment,
    ExperimentError,
};
use savflow::solver::SolverError;
use std::path::PathBuf;
use std::process::ExitCode;

#[derive(Parser, Debug)]
#[command(
    name = "savflow",
    about = "2D incompressible Navier-Stokes benchmarks with subgrid artificial viscosity stabilization",
    after_help = "Override any config key with --key value pairs, e.g.\n  savflow cylinder --dt 0.02 --t_end 4 --outdir out/quick\nValid keys: n0, levels, h_target, dt, t_end, nu, reynolds, alpha1_mode,\nalpha2, sav, compare_nosav, outdir, solver, gmres_tol, gmres_max_iter."
)]
struct Args {
    /// Experiment to run: convergence | cylinder | offset-circles
    experiment: String,
    /// Optional `key = value` configuration file
    #[arg(long)]
    config: Option<PathBuf>,
    /// Trailing `--key value` overrides
    #[arg(allow_hyphen_values = true, trailing_var_arg = true)]
    overrides: Vec<String>,
}

fn parse_overrides(tokens: &[String]) -> Result<Vec<(String, String)>, String> {
    let mut pairs = Vec::new();
    let mut it = tokens.iter();
    while let Some(tok) = it.next() {
        let Some(key) = tok.strip_prefix("--") else {
            return Err(format!("expected `--key`, got '{tok}'"));
        };
        let Some(value) = it.next() else {
            return Err(format!("flag '--{key}' is missing a value"));
        };
        pairs.push((key.replace('-', "_"), value.clone()));
    }
    Ok(pairs)
}

fn main() -> ExitCode {
    let args = Args::parse();
    let Some(experiment) = Experiment::parse(&args.experiment) else {
        eprintln!(
            "unknown experiment '{}'; expected convergence | cylinder | offset-circles",
            args.experiment
        );
        return ExitCode::from(2);
    };
    let overrides = match parse_overrides(&args.overrides) {
        Ok(p) => p,
        Err(msg) => {
            eprintln!("argument error: {msg}");
            return ExitCode::from(2);
        }
    };
    let cfg = match resolve_config(experiment, args.config.as_deref(), &overrides) {
        Ok(c) => c,
        Err(e) => {
            eprintln!("configuration error: {e}");
            return ExitCode::from(2);
        }
    };

    let result: Result<(), ExperimentError> = match experiment {
        Experiment::Convergence => run_convergence(&cfg).map(|(summary, _artifacts)| {
            println!("n      h         dt        error(L2-mode)  error(H1-mode)  rate(H1)");
            for (i, row) in summary.rows.iter().enumerate() {
                let rate = if i == 0 {
                    "  --".to_string()
                } else {
                    format!("{:5.2}", summary.rates_h1[i - 1])
                };
                println!(
                    "{:<6} {:<9.5} {:<9.6} {:<15.6e} {:<15.6e} {rate}",
                    row.n, row.h, row.dt, row.error_l2, row.error_h1
                );
            }
            println!(
                "matched norm mode: {}",
                summary.matched_mode.unwrap_or("none")
            );
            println!("artifacts in {}", cfg.output_dir.display());
        }),
        Experiment::Cylinder => run_cylinder(&cfg).map(|(summary, _artifacts)| {
            println!("taylor-hood dofs: {}", summary.taylor_hood_dofs);
            println!(
                "c_d_max = {:.5} at t = {:.3}",
                summary.cd_max, summary.t_cd_max
            );
            println!(
                "c_l_max = {:.6} at t = {:.3}",
                summary.cl_max, summary.t_cl_max
            );
            println!("artifacts in {}", cfg.output_dir.display());
        }),
        Experiment::OffsetCircles => run_offset_circles(&cfg).map(|(summary, _artifacts)| {
            println!("reynolds = {:.0}", summary.reynolds);
            println!("taylor-hood dofs: {}", summary.taylor_hood_dofs);
            println!(
                "sav:   finite = {}, final energy = {:.6e}, energy TV = {:.6e}",
                summary.sav.all_finite,
                summary.sav.final_energy,
                summary.sav.energy_total_variation
            );
            if let Some(nosav) = &summary.nosav {
                println!(
                    "nosav: finite = {}, final energy = {:.6e}, energy TV = {:.6e}",
                    nosav.all_finite, nosav.final_energy, nosav.energy_total_variation
                );
            }
            println!("artifacts in {}", cfg.output_dir.display());
        }),
    };

    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(ExperimentError::Config(e)) => {
            eprintln!("configuration error: {e}");
            ExitCode::from(2)
        }
        Err(ExperimentError::Solver(SolverError::Diverged { step, time })) => {
            eprintln!("solver diverged at step {step} (t = {time})");
            ExitCode::from(3)
        }
        Err(ExperimentError::Diagnostics(savflow::diagnostics::DiagnosticsError::Solver(
            SolverError::Diverged { step, time },
        ))) => {
            eprintln!("solver diverged at step {step} (t = {time})");
            ExitCode::from(3)
        }
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::FAILURE
        }
    }
}
