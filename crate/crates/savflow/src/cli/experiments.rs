//! The three benchmark experiments: manufactured-solution convergence,
//! flow around a cylinder, and flow between two offset circles.

use super::{
    echo_config, write_atomic, Alpha1Mode, ConfigError, CsvWriter, ExperimentConfig, RunArtifacts,
};
use crate::diagnostics::{
    error_norms, run_with_diagnostics, DiagnosticsError, DiagnosticsRecord, ErrorNormMode,
    ExactSolution,
};
use crate::mesh::{
    build_channel_cylinder, build_offset_annulus, build_unit_square, Mesh, MeshError,
};
use crate::solver::{nosav_mode, Alpha1, ProblemSetup, SavParameters, SolverError};
use crate::spaces::{DirichletBc, SpaceError};
use std::f64::consts::PI;
use std::path::PathBuf;
use std::sync::Arc;
use thiserror::Error;

#[derive(Debug, Error)]
pub enum ExperimentError {
    #[error(transparent)]
    Config(#[from] ConfigError),
    #[error(transparent)]
    Mesh(#[from] MeshError),
    #[error(transparent)]
    Solver(#[from] SolverError),
    #[error(transparent)]
    Diagnostics(#[from] DiagnosticsError),
    #[error(transparent)]
    Space(#[from] SpaceError),
    #[error("hard-coded manufactured forcing fails the residual check: {residual:.3e} > 1e-10")]
    ForcingResidual { residual: f64 },
    #[error("io error: {0}")]
    Io(#[from] std::io::Error),
}

/// Reference errors of the convergence study, indexed by grid resolution
/// `n` (mesh size `1/n`), in the norm mode that reproduces them.
pub const TABLE1_ERRORS: &[(usize, f64)] = &[
    (4, 5.25977e-1),
    (8, 1.3403e-1),
    (16, 3.397e-2),
    (32, 8.50843e-3),
    (64, 2.13204e-3),
    (128, 5.32992e-4),
];

/// The prescribed solution of the convergence study:
/// `u = ((1 + 0.01 t) sin(2 pi y), (1 + 0.01 t) cos(2 pi x))`,
/// `p = x + y`.
pub fn manufactured_solution() -> ExactSolution {
    ExactSolution {
        velocity: Arc::new(|x, y, t| {
            let a = 1.0 + 0.01 * t;
            (a * (2.0 * PI * y).sin(), a * (2.0 * PI * x).cos())
        }),
        velocity_gradient: Arc::new(|x, y, t| {
            let a = 1.0 + 0.01 * t;
            [
                [0.0, 2.0 * PI * a * (2.0 * PI * y).cos()],
                [-2.0 * PI * a * (2.0 * PI * x).sin(), 0.0],
            ]
        }),
    }
}

/// Forcing derived analytically from the momentum equation
/// `f = u_t - nu lap(u) + (u . grad) u + grad p` for the prescribed
/// solution; hard-coded and verified by residual sampling at startup.
pub fn manufactured_forcing(nu: f64) -> impl Fn(f64, f64, f64) -> (f64, f64) + Send + Sync + Copy {
    move |x: f64, y: f64, t: f64| {
        let a = 1.0 + 0.01 * t;
        let sy = (2.0 * PI * y).sin();
        let cy = (2.0 * PI * y).cos();
        let sx = (2.0 * PI * x).sin();
        let cx = (2.0 * PI * x).cos();
        let f1 = 0.01 * sy + 4.0 * PI * PI * nu * a * sy + 2.0 * PI * a * a * cx * cy + 1.0;
        let f2 = 0.01 * cx + 4.0 * PI * PI * nu * a * cx - 2.0 * PI * a * a * sx * sy + 1.0;
        (f1, f2)
    }
}

/// Samples the strong-form residual `u_t - nu lap(u) + (u.grad)u + grad p
/// - f` at 20 deterministic quasi-random points and times; each derivative
/// comes from its own closure, so a transcription slip in the hard-coded
/// forcing is caught.
pub fn verify_manufactured_forcing(nu: f64) -> f64 {
    let f = manufactured_forcing(nu);
    let u = |x: f64, y: f64, t: f64| {
        let a = 1.0 + 0.01 * t;
        (a * (2.0 * PI * y).sin(), a * (2.0 * PI * x).cos())
    };
    let u_t = |x: f64, y: f64, _t: f64| (0.01 * (2.0 * PI * y).sin(), 0.01 * (2.0 * PI * x).cos());
    let lap_u = |x: f64, y: f64, t: f64| {
        let a = 1.0 + 0.01 * t;
        (
            -4.0 * PI * PI * a * (2.0 * PI * y).sin(),
            -4.0 * PI * PI * a * (2.0 * PI * x).cos(),
        )
    };
    let grad_u = |x: f64, y: f64, t: f64| {
        let a = 1.0 + 0.01 * t;
        // rows: components; cols: d/dx, d/dy
        [
            [0.0, 2.0 * PI * a * (2.0 * PI * y).cos()],
            [-2.0 * PI * a * (2.0 * PI * x).sin(), 0.0],
        ]
    };
    let grad_p = (1.0, 1.0);
    let mut max_res: f64 = 0.0;
    // golden-ratio lattice over the unit square and [0, 1] in time
    let phi = 0.618_033_988_749_894_9_f64;
    for k in 0..20 {
        let x = ((k as f64 + 0.5) * phi).fract();
        let y = ((k as f64 + 0.5) * phi * phi).fract();
        let t = (k as f64 / 20.0).fract();
        let (u1, u2) = u(x, y, t);
        let (ut1, ut2) = u_t(x, y, t);
        let (l1, l2) = lap_u(x, y, t);
        let g = grad_u(x, y, t);
        let conv1 = u1 * g[0][0] + u2 * g[0][1];
        let conv2 = u1 * g[1][0] + u2 * g[1][1];
        let (f1, f2) = f(x, y, t);
        let r1 = ut1 - nu * l1 + conv1 + grad_p.0 - f1;
        let r2 = ut2 - nu * l2 + conv2 + grad_p.1 - f2;
        max_res = max_res.max(r1.abs()).max(r2.abs());
    }
    max_res
}

fn resolve_alpha1(mode: Alpha1Mode, mesh: &Mesh) -> Alpha1 {
    match mode {
        Alpha1Mode::UniformH2 => Alpha1::Uniform(mesh.nominal_h() * mesh.nominal_h()),
        Alpha1Mode::PerElementH2 => Alpha1::PerElement(
            (0..mesh.n_triangles())
                .map(|t| {
                    let h = mesh.triangle_h(t);
                    h * h
                })
                .collect(),
        ),
        Alpha1Mode::Explicit(v) => Alpha1::Uniform(v),
    }
}

/// One row of the convergence study.
#[derive(Debug, Clone)]
pub struct ConvergenceRow {
    pub n: usize,
    pub h: f64,
    pub dt: f64,
    pub error_l2: f64,
    pub error_h1: f64,
    pub taylor_hood_dofs: usize,
    pub stability_lhs: f64,
    pub stability_rhs: f64,
    pub max_sav_violation: f64,
}

#[derive(Debug, Clone)]
pub struct ConvergenceSummary {
    pub rows: Vec<ConvergenceRow>,
    /// `log2(e_i / e_{i+1})` between consecutive rows, per norm mode
    pub rates_l2: Vec<f64>,
    pub rates_h1: Vec<f64>,
    /// the norm mode that reproduces the reference errors within 10%,
    /// if any ("l2" or "h1")
    pub matched_mode: Option<&'static str>,
}

/// Manufactured-solution convergence study over simultaneous `(h, dt)`
/// halvings.
pub fn run_convergence(
    cfg: &ExperimentConfig,
) -> Result<(ConvergenceSummary, RunArtifacts), ExperimentError> {
    let residual = verify_manufactured_forcing(cfg.nu);
    if residual > 1e-10 {
        return Err(ExperimentError::ForcingResidual { residual });
    }
    let exact = manufactured_solution();
    let mut rows = Vec::new();
    let mut step_csvs = Vec::new();
    std::fs::create_dir_all(&cfg.output_dir)?;
    for level in 0..cfg.levels {
        let n = cfg.n0 << level;
        let dt = cfg.dt / (1 << level) as f64;
        let mesh = Arc::new(build_unit_square(n)?);
        let alpha1 = resolve_alpha1(cfg.alpha1_mode, &mesh);
        let exact_v = Arc::clone(&exact.velocity);
        let bc = DirichletBc::new(vec![1], move |x, y, t| exact_v(x, y, t));
        let forcing = manufactured_forcing(cfg.nu);
        let exact_v0 = Arc::clone(&exact.velocity);
        let setup = ProblemSetup::new(
            mesh.clone(),
            vec![bc],
            Some(Arc::new(move |x, y, t| forcing(x, y, t))),
            Arc::new(move |x, y| exact_v0(x, y, 0.0)),
        )?;
        let params = SavParameters {
            nu: cfg.nu,
            alpha1,
            alpha2: cfg.alpha2,
            dt,
            t_end: cfg.t_end,
            sav_enabled: cfg.sav_enabled,
            convection_enabled: true,
            linear_solver: cfg.solver,
        };
        let (records, (lhs, rhs), _) =
            run_with_diagnostics(&setup, &params, Some(exact.clone()))?;
        let error_l2 = error_norms(&records, dt, ErrorNormMode::L2InTimeOfL2);
        let error_h1 = error_norms(&records, dt, ErrorNormMode::L2InTimeOfH1);
        let max_sav_violation = records
            .iter()
            .map(|r| (-r.sav_bound_slack).max(0.0))
            .fold(0.0, f64::max);
        let mut csv = CsvWriter::new(&["t", "error_l2", "error_h1", "energy", "div_l2"]);
        for r in &records {
            csv.row(&[
                r.time,
                r.error_l2.unwrap_or(0.0),
                r.error_h1.unwrap_or(0.0),
                r.kinetic_energy,
                r.div_l2,
            ]);
        }
        let path = cfg.output_dir.join(format!("steps_n{n}.csv"));
        csv.finish(&path)?;
        step_csvs.push(path);
        rows.push(ConvergenceRow {
            n,
            h: 1.0 / n as f64,
            dt,
            error_l2,
            error_h1,
            taylor_hood_dofs: setup.taylor_hood_dofs(),
            stability_lhs: lhs,
            stability_rhs: rhs,
            max_sav_violation,
        });
    }
    let rate = |errs: &[f64]| -> Vec<f64> {
        errs.windows(2).map(|w| (w[0] / w[1]).log2()).collect()
    };
    let errs_l2: Vec<f64> = rows.iter().map(|r| r.error_l2).collect();
    let errs_h1: Vec<f64> = rows.iter().map(|r| r.error_h1).collect();
    let rates_l2 = rate(&errs_l2);
    let rates_h1 = rate(&errs_h1);

    let within = |err: f64, reference: f64| (err - reference).abs() <= 0.10 * reference;
    let mode_matches = |pick: &dyn Fn(&ConvergenceRow) -> f64| -> bool {
        let mut any = false;
        for row in &rows {
            if let Some(&(_, reference)) = TABLE1_ERRORS.iter().find(|&&(n, _)| n == row.n) {
                any = true;
                if !within(pick(row), reference) {
                    return false;
                }
            }
        }
        any
    };
    let matched_mode = if mode_matches(&|r| r.error_h1) {
        Some("h1")
    } else if mode_matches(&|r| r.error_l2) {
        Some("l2")
    } else {
        None
    };

    let summary = ConvergenceSummary {
        rows,
        rates_l2,
        rates_h1,
        matched_mode,
    };
    let summary_path = cfg.output_dir.join("summary.csv");
    let mut csv = CsvWriter::new(&[
        "n",
        "h",
        "dt",
        "error_l2",
        "error_h1",
        "rate_l2",
        "rate_h1",
        "dofs",
    ]);
    for (i, r) in summary.rows.iter().enumerate() {
        csv.row(&[
            r.n as f64,
            r.h,
            r.dt,
            r.error_l2,
            r.error_h1,
            if i == 0 { f64::NAN } else { summary.rates_l2[i - 1] },
            if i == 0 { f64::NAN } else { summary.rates_h1[i - 1] },
            r.taylor_hood_dofs as f64,
        ]);
    }
    csv.finish(&summary_path)?;
    let mut text = String::from("n h dt error_l2 error_h1 rate_h1 dofs\n");
    for (i, r) in summary.rows.iter().enumerate() {
        let rate = if i == 0 {
            "--".to_string()
        } else {
            format!("{:.2}", summary.rates_h1[i - 1])
        };
        text.push_str(&format!(
            "{} {:.6} {:.6} {:.6e} {:.6e} {} {}\n",
            r.n, r.h, r.dt, r.error_l2, r.error_h1, rate, r.taylor_hood_dofs
        ));
    }
    text.push_str(&format!(
        "matched_norm_mode = {}\n",
        summary.matched_mode.unwrap_or("none")
    ));
    write_atomic(&cfg.output_dir.join("summary.txt"), text.as_bytes())?;
    let config_echo = echo_config(cfg)?;
    let artifacts = RunArtifacts {
        step_csvs,
        summary: summary_path,
        config_echo,
    };
    Ok((summary, artifacts))
}

/// Time-dependent parabolic inflow/outflow profile of the benchmark
/// channel: `u1 = (6/0.41^2) sin(pi t / 8) y (0.41 - y)`, `u2 = 0`.
pub fn cylinder_inflow(_x: f64, y: f64, t: f64) -> (f64, f64) {
    (
        6.0 / (0.41 * 0.41) * (PI * t / 8.0).sin() * y * (0.41 - y),
        0.0,
    )
}

#[derive(Debug, Clone)]
pub struct CylinderSummary {
    pub taylor_hood_dofs: usize,
    pub cd_max: f64,
    pub t_cd_max: f64,
    pub cl_max: f64,
    pub t_cl_max: f64,
    pub max_identity_residual: Option<f64>,
    pub max_sav_violation: f64,
    pub records: Vec<DiagnosticsRecord>,
}

/// Flow around a cylinder with the time-periodic inflow.
pub fn run_cylinder(
    cfg: &ExperimentConfig,
) -> Result<(CylinderSummary, RunArtifacts), ExperimentError> {
    let mesh = Arc::new(build_channel_cylinder(cfg.h_target)?);
    let alpha1 = resolve_alpha1(cfg.alpha1_mode, &mesh);
    let bcs = vec![
        DirichletBc::new(vec![1, 2], cylinder_inflow),
        DirichletBc::zero(vec![3, 4]),
    ];
    let setup = ProblemSetup::new(mesh, bcs, None, Arc::new(|_, _| (0.0, 0.0)))?;
    let params = SavParameters {
        nu: cfg.nu,
        alpha1,
        alpha2: cfg.alpha2,
        dt: cfg.dt,
        t_end: cfg.t_end,
        sav_enabled: cfg.sav_enabled,
        convection_enabled: true,
        linear_solver: cfg.solver,
    };
    let (records, _, _) = run_with_diagnostics(&setup, &params, None)?;
    std::fs::create_dir_all(&cfg.output_dir)?;
    let mut csv = CsvWriter::new(&["t", "energy", "c_d", "c_l", "delta_p"]);
    for r in &records {
        csv.row(&[
            r.time,
            r.kinetic_energy,
            r.drag.unwrap_or(f64::NAN),
            r.lift.unwrap_or(f64::NAN),
            r.pressure_drop.unwrap_or(f64::NAN),
        ]);
    }
    let steps_path = cfg.output_dir.join("steps.csv");
    csv.finish(&steps_path)?;

    let pick_max = |get: &dyn Fn(&DiagnosticsRecord) -> Option<f64>| -> (f64, f64) {
        let mut best = (f64::NEG_INFINITY, 0.0);
        for r in &records {
            if let Some(v) = get(r) {
                if v > best.0 {
                    best = (v, r.time);
                }
            }
        }
        best
    };
    let (cd_max, t_cd_max) = pick_max(&|r| r.drag);
    let (cl_max, t_cl_max) = pick_max(&|r| r.lift);
    let max_identity_residual = records
        .iter()
        .filter_map(|r| r.energy_identity_residual)
        .fold(None, |m: Option<f64>, v| Some(m.map_or(v, |x| x.max(v))));
    let max_sav_violation = records
        .iter()
        .map(|r| (-r.sav_bound_slack).max(0.0))
        .fold(0.0, f64::max);
    let summary = CylinderSummary {
        taylor_hood_dofs: setup.taylor_hood_dofs(),
        cd_max,
        t_cd_max,
        cl_max,
        t_cl_max,
        max_identity_residual,
        max_sav_violation,
        records,
    };
    let text = format!(
        "taylor_hood_dofs = {}\nc_d_max = {:.6}\nt(c_d_max) = {:.4}\nc_l_max = {:.6}\nt(c_l_max) = {:.4}\n",
        summary.taylor_hood_dofs, summary.cd_max, summary.t_cd_max, summary.cl_max, summary.t_cl_max
    );
    let summary_path = cfg.output_dir.join("summary.txt");
    write_atomic(&summary_path, text.as_bytes())?;
    let config_echo = echo_config(cfg)?;
    Ok((
        summary,
        RunArtifacts {
            step_csvs: vec![steps_path],
            summary: summary_path,
            config_echo,
        },
    ))
}

/// Body force driving the offset-circles flow counterclockwise; tangential
/// to circles centered at the origin (`f . (x, y) = 0` pointwise).
pub fn offset_circles_forcing(x: f64, y: f64, _t: f64) -> (f64, f64) {
    let r2 = 1.0 - x * x - y * y;
    (-4.0 * y * r2, 4.0 * x * r2)
}

/// Per-method statistics of an offset-circles run.
#[derive(Debug, Clone)]
pub struct SeriesStats {
    pub all_finite: bool,
    pub final_energy: f64,
    pub max_energy: f64,
    pub energy_total_variation: f64,
    pub final_enstrophy: f64,
    pub max_identity_residual: Option<f64>,
    pub max_sav_violation: f64,
    pub stability_lhs: f64,
    pub stability_rhs: f64,
    pub records: Vec<DiagnosticsRecord>,
}

fn series_stats(records: Vec<DiagnosticsRecord>, sides: (f64, f64)) -> SeriesStats {
    let all_finite = records
        .iter()
        .all(|r| r.kinetic_energy.is_finite() && r.enstrophy.is_finite());
    let final_energy = records.last().map_or(0.0, |r| r.kinetic_energy);
    let final_enstrophy = records.last().map_or(0.0, |r| r.enstrophy);
    let max_energy = records
        .iter()
        .map(|r| r.kinetic_energy)
        .fold(f64::NEG_INFINITY, f64::max);
    let energy_total_variation = records
        .windows(2)
        .map(|w| (w[1].kinetic_energy - w[0].kinetic_energy).abs())
        .sum();
    let max_identity_residual = records
        .iter()
        .filter_map(|r| r.energy_identity_residual)
        .fold(None, |m: Option<f64>, v| Some(m.map_or(v, |x| x.max(v))));
    let max_sav_violation = records
        .iter()
        .map(|r| (-r.sav_bound_slack).max(0.0))
        .fold(0.0, f64::max);
    SeriesStats {
        all_finite,
        final_energy,
        max_energy,
        energy_total_variation,
        final_enstrophy,
        max_identity_residual,
        max_sav_violation,
        stability_lhs: sides.0,
        stability_rhs: sides.1,
        records,
    }
}

#[derive(Debug, Clone)]
pub struct OffsetCirclesSummary {
    pub reynolds: f64,
    pub taylor_hood_dofs: usize,
    pub sav: SeriesStats,
    pub nosav: Option<SeriesStats>,
}

/// Flow between two offset circles, driven by the rotational body force;
/// optionally also runs the unstabilized scheme for comparison.
pub fn run_offset_circles(
    cfg: &ExperimentConfig,
) -> Result<(OffsetCirclesSummary, RunArtifacts), ExperimentError> {
    let mesh = Arc::new(build_offset_annulus(cfg.h_target)?);
    let alpha1 = resolve_alpha1(cfg.alpha1_mode, &mesh);
    let make_setup = || -> Result<ProblemSetup, SpaceError> {
        ProblemSetup::new(
            Arc::clone(&mesh),
            vec![DirichletBc::zero(vec![1, 2])],
            Some(Arc::new(offset_circles_forcing)),
            Arc::new(|_, _| (0.0, 0.0)),
        )
    };
    let setup = make_setup()?;
    let params = SavParameters {
        nu: cfg.nu,
        alpha1,
        alpha2: cfg.alpha2,
        dt: cfg.dt,
        t_end: cfg.t_end,
        sav_enabled: cfg.sav_enabled,
        convection_enabled: true,
        linear_solver: cfg.solver,
    };
    std::fs::create_dir_all(&cfg.output_dir)?;
    let mut step_csvs: Vec<PathBuf> = Vec::new();
    let emit = |records: &[DiagnosticsRecord], name: &str| -> Result<PathBuf, ExperimentError> {
        let mut csv = CsvWriter::new(&["t", "energy", "enstrophy"]);
        for r in records {
            csv.row(&[r.time, r.kinetic_energy, r.enstrophy]);
        }
        let path = cfg.output_dir.join(name);
        csv.finish(&path)?;
        Ok(path)
    };

    let (records, sides, _) = run_with_diagnostics(&setup, &params, None)?;
    step_csvs.push(emit(&records, "steps_sav.csv")?);
    let sav = series_stats(records, sides);

    let nosav = if cfg.compare_nosav {
        let nosav_params = nosav_mode(params.clone());
        // the unstabilized scheme may diverge at high Reynolds number; that
        // is a reportable outcome of the comparison, not a failure
        match run_with_diagnostics(&setup, &nosav_params, None) {
            Ok((records, sides, _)) => {
                step_csvs.push(emit(&records, "steps_nosav.csv")?);
                Some(series_stats(records, sides))
            }
            Err(DiagnosticsError::Solver(SolverError::Diverged { .. })) => Some(SeriesStats {
                all_finite: false,
                final_energy: f64::NAN,
                max_energy: f64::NAN,
                energy_total_variation: f64::INFINITY,
                final_enstrophy: f64::NAN,
                max_identity_residual: None,
                max_sav_violation: 0.0,
                stability_lhs: f64::NAN,
                stability_rhs: f64::NAN,
                records: Vec::new(),
            }),
            Err(e) => return Err(e.into()),
        }
    } else {
        None
    };

    let summary = OffsetCirclesSummary {
        reynolds: 1.0 / cfg.nu,
        taylor_hood_dofs: setup.taylor_hood_dofs(),
        sav,
        nosav,
    };
    let mut text = format!(
        "reynolds = {:.1}\ntaylor_hood_dofs = {}\nsav_all_finite = {}\nsav_final_energy = {:.6e}\nsav_energy_total_variation = {:.6e}\n",
        summary.reynolds,
        summary.taylor_hood_dofs,
        summary.sav.all_finite,
        summary.sav.final_energy,
        summary.sav.energy_total_variation,
    );
    if let Some(nosav) = &summary.nosav {
        text.push_str(&format!(
            "nosav_all_finite = {}\nnosav_final_energy = {:.6e}\nnosav_energy_total_variation = {:.6e}\n",
            nosav.all_finite, nosav.final_energy, nosav.energy_total_variation,
        ));
    }
    let summary_path = cfg.output_dir.join("summary.txt");
    write_atomic(&summary_path, text.as_bytes())?;
    let config_echo = echo_config(cfg)?;
    Ok((
        summary,
        RunArtifacts {
            step_csvs,
            summary: summary_path,
            config_echo,
        },
    ))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn forcing_matches_strong_form() {
        for nu in [1.0, 0.1, 1e-3] {
            let residual = verify_manufactured_forcing(nu);
            assert!(residual <= 1e-10, "nu = {nu}: residual {residual:.3e}");
        }
    }

    #[test]
    fn inflow_is_zero_at_t0_and_walls() {
        let (u1, u2) = cylinder_inflow(0.0, 0.2, 0.0);
        assert_eq!(u1, 0.0);
        assert_eq!(u2, 0.0);
        let (w1, _) = cylinder_inflow(0.0, 0.0, 4.0);
        assert_eq!(w1, 0.0);
        let (m, _) = cylinder_inflow(0.0, 0.205, 4.0);
        assert!((m - 1.5).abs() < 1e-12);
    }

    #[test]
    fn offset_forcing_is_tangential() {
        let phi = 0.618_033_988_749_894_9_f64;
        for k in 0..30 {
            let x = 2.0 * ((k as f64 * phi).fract()) - 1.0;
            let y = 2.0 * ((k as f64 * phi * phi).fract()) - 1.0;
            let (fx, fy) = offset_circles_forcing(x, y, 0.0);
            assert!(
                (fx * x + fy * y).abs() < 1e-13,
                "f . (x,y) != 0 at ({x},{y})"
            );
        }
    }

    #[test]
    fn convergence_single_coarse_row_runs() {
        let dir = tempfile::tempdir().unwrap();
        let mut cfg = ExperimentConfig::defaults(super::super::Experiment::Convergence);
        cfg.n0 = 4;
        cfg.levels = 1;
        cfg.output_dir = dir.path().to_path_buf();
        let (summary, artifacts) = run_convergence(&cfg).unwrap();
        assert_eq!(summary.rows.len(), 1);
        assert!(summary.rows[0].error_h1.is_finite());
        assert!(artifacts.summary.exists());
        assert!(artifacts.config_echo.exists());
        // the echoed config re-parses identically
        let pairs = super::super::parse_config(&artifacts.config_echo).unwrap();
        let mut back = ExperimentConfig::defaults(super::super::Experiment::Convergence);
        back.n0 = 4;
        back.levels = 1;
        back.output_dir = dir.path().to_path_buf();
        back.apply(&pairs).unwrap();
        assert_eq!(back, cfg);
    }

    #[test]
    fn offset_circles_short_run_is_finite() {
        let dir = tempfile::tempdir().unwrap();
        let mut cfg = ExperimentConfig::defaults(super::super::Experiment::OffsetCircles);
        cfg.h_target = 0.25;
        cfg.t_end = 0.1;
        cfg.compare_nosav = false;
        cfg.output_dir = dir.path().to_path_buf();
        let (summary, _) = run_offset_circles(&cfg).unwrap();
        assert!(summary.sav.all_finite);
        assert!(summary.sav.final_energy > 0.0);
        assert!(summary.nosav.is_none());
    }
}
