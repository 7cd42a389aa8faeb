//! The BDF2 time stepper with linearly extrapolated convection and subgrid
//! artificial viscosity.
//!
//! Each step: (a) project the current vorticity onto the coarse space to get
//! `S_H^{n+1}` (decoupled; the projection equation involves only `u^n`);
//! (b) extrapolate the convecting field `beta = 2 u^n - u^{n-1}`;
//! (c) assemble and solve the monolithic saddle-point system for
//! `(u^{n+1}, p^{n+1})` with a scalar multiplier enforcing the zero-mean
//! pressure; (d) advance the window. The velocity block is
//! `3/(2 dt) M + nu K + alpha1 C_curl + alpha2 D_div + N(beta)` and the
//! right-hand side carries `1/(2 dt) M (4 u^n - u^{n-1}) + F(t^{n+1})
//! + alpha1 C^T S_H^{n+1}`.
//!
//! Matrices with fixed values (mass, stiffness, curl-curl, grad-div,
//! pressure coupling) are assembled once; only the convection block is
//! rebuilt per step. The sparse LU is refactorized every step, reusing the
//! fill-reducing ordering.

use crate::linalg::{BlockSystem, FillOrdering, LinalgError, LuFactorization, SparseMatrix};
use crate::mesh::Mesh;
use crate::spaces::{
    apply_dirichlet, assemble_convection, assemble_curl_coupling_weighted,
    assemble_curlcurl_weighted, assemble_divdiv, assemble_load, assemble_mass,
    assemble_pressure_div, assemble_stiffness, pressure_mean_vector, vector_block_diag,
    velocity_dirichlet_values, CurlProjector, DirichletBc, FeFunction, FeSpace, SpaceError,
};
use std::sync::Arc;
use std::time::{Duration, Instant};
use thiserror::Error;

#[derive(Debug, Error)]
pub enum SolverError {
    #[error("invalid parameters: {0}")]
    InvalidParameters(String),
    #[error("linear solve failed at step {step}: {source}")]
    Linear {
        step: usize,
        #[source]
        source: LinalgError,
    },
    #[error("solution diverged (non-finite values) at step {step}, t = {time}")]
    Diverged { step: usize, time: f64 },
    #[error(transparent)]
    Space(#[from] SpaceError),
}

/// Linear solver for the per-step monolithic system. The direct LU is the
/// default; GMRES is a fallback for meshes beyond the direct solver's range
/// and is substantially slower on these saddle-point systems.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum LinearSolver {
    DirectLu,
    Gmres { tol: f64, max_iter: usize },
}

impl Default for LinearSolver {
    fn default() -> Self {
        LinearSolver::DirectLu
    }
}

/// Artificial viscosity parameter: one value everywhere, or constant per
/// element.
#[derive(Debug, Clone)]
pub enum Alpha1 {
    Uniform(f64),
    PerElement(Vec<f64>),
}

impl Alpha1 {
    /// Per-element weight vector used by the weighted assemblies.
    pub fn weights(&self, n_triangles: usize) -> Vec<f64> {
        match self {
            Alpha1::Uniform(a) => vec![*a; n_triangles],
            Alpha1::PerElement(v) => {
                assert_eq!(v.len(), n_triangles);
                v.clone()
            }
        }
    }

    pub fn min_value(&self) -> f64 {
        match self {
            Alpha1::Uniform(a) => *a,
            Alpha1::PerElement(v) => v.iter().copied().fold(f64::INFINITY, f64::min),
        }
    }

    pub fn max_value(&self) -> f64 {
        match self {
            Alpha1::Uniform(a) => *a,
            Alpha1::PerElement(v) => v.iter().copied().fold(0.0, f64::max),
        }
    }
}

/// Physical and discretization parameters of a run.
#[derive(Debug, Clone)]
pub struct SavParameters {
    pub nu: f64,
    pub alpha1: Alpha1,
    pub alpha2: f64,
    pub dt: f64,
    pub t_end: f64,
    pub sav_enabled: bool,
    /// Test hook: force the extrapolated convecting field to zero (Stokes
    /// limit). Defaults to true in all experiments.
    pub convection_enabled: bool,
    pub linear_solver: LinearSolver,
}

impl SavParameters {
    pub fn validate(&self) -> Result<(), SolverError> {
        if !(self.nu > 0.0) {
            return Err(SolverError::InvalidParameters(format!(
                "nu must be positive, got {}",
                self.nu
            )));
        }
        if !(self.dt > 0.0) {
            return Err(SolverError::InvalidParameters(format!(
                "dt must be positive, got {}",
                self.dt
            )));
        }
        if self.alpha1.min_value() < 0.0 {
            return Err(SolverError::InvalidParameters(
                "alpha1 must be nonnegative".into(),
            ));
        }
        if self.alpha2 < 0.0 {
            return Err(SolverError::InvalidParameters(
                "alpha2 must be nonnegative".into(),
            ));
        }
        let steps = self.n_steps();
        if steps == 0 {
            return Err(SolverError::InvalidParameters(
                "t_end must cover at least one step".into(),
            ));
        }
        let reached = steps as f64 * self.dt;
        if (reached - self.t_end).abs() > 1e-6 * self.t_end.max(self.dt) {
            return Err(SolverError::InvalidParameters(format!(
                "t_end = {} is not an integer multiple of dt = {}",
                self.t_end, self.dt
            )));
        }
        Ok(())
    }

    pub fn n_steps(&self) -> usize {
        (self.t_end / self.dt).round() as usize
    }
}

/// Disables the subgrid stabilization: the `alpha1` terms and the coarse
/// projection are skipped entirely; grad-div is kept as configured.
pub fn nosav_mode(mut params: SavParameters) -> SavParameters {
    params.sav_enabled = false;
    params
}

/// Geometry, spaces, boundary data, forcing and initial condition.
pub struct ProblemSetup {
    pub mesh: Arc<Mesh>,
    pub velocity: Arc<FeSpace>,
    pub pressure: Arc<FeSpace>,
    pub coarse: Arc<FeSpace>,
    pub bcs: Vec<DirichletBc>,
    pub body_force: Option<Arc<dyn Fn(f64, f64, f64) -> (f64, f64) + Send + Sync>>,
    pub initial_velocity: Arc<dyn Fn(f64, f64) -> (f64, f64) + Send + Sync>,
    /// Whether every Dirichlet value is identically zero; the energy
    /// identity is only asserted on homogeneous problems.
    pub homogeneous_bc: bool,
}

impl ProblemSetup {
    /// Builds the Taylor-Hood pair (P2 velocity, P1 pressure) and the P1
    /// coarse space over one mesh. Homogeneity of the boundary data is
    /// probed by sampling.
    pub fn new(
        mesh: Arc<Mesh>,
        bcs: Vec<DirichletBc>,
        body_force: Option<Arc<dyn Fn(f64, f64, f64) -> (f64, f64) + Send + Sync>>,
        initial_velocity: Arc<dyn Fn(f64, f64) -> (f64, f64) + Send + Sync>,
    ) -> Result<Self, SpaceError> {
        let velocity = FeSpace::new(Arc::clone(&mesh), 2)?;
        let pressure = FeSpace::new(Arc::clone(&mesh), 1)?;
        let coarse = FeSpace::new(Arc::clone(&mesh), 1)?;
        let mut homogeneous = true;
        'probe: for bc in &bcs {
            let dofs = velocity.boundary_dofs(&bc.markers)?;
            for &d in dofs.iter().take(64) {
                let (x, y) = velocity.dof_coords()[d];
                for t in [0.0, 0.31, 1.7, 4.0, 7.3] {
                    let (vx, vy) = (bc.value)(x, y, t);
                    if vx != 0.0 || vy != 0.0 {
                        homogeneous = false;
                        break 'probe;
                    }
                }
            }
        }
        Ok(Self {
            mesh,
            velocity,
            pressure,
            coarse,
            bcs,
            body_force,
            initial_velocity,
            homogeneous_bc: homogeneous,
        })
    }

    /// Total Taylor-Hood degrees of freedom (two velocity components plus
    /// pressure).
    pub fn taylor_hood_dofs(&self) -> usize {
        2 * self.velocity.n_dofs() + self.pressure.n_dofs()
    }
}

/// The time-stepping window at time `t^n`.
#[derive(Debug, Clone)]
pub struct SavState {
    pub u_curr: FeFunction,
    pub u_prev: FeFunction,
    pub p_curr: FeFunction,
    pub s_curr: FeFunction,
    pub step_index: usize,
    pub time: f64,
}

/// Per-step solve metadata.
#[derive(Debug, Clone)]
pub struct StepReport {
    /// `||A x - b||_inf / max(1, ||b||_inf)` of the monolithic solve
    pub linear_residual: f64,
    pub wall_time: Duration,
    pub velocity_dofs: usize,
    pub pressure_dofs: usize,
    /// `||B u^{n+1}||_inf`: discrete incompressibility defect
    pub div_inf: f64,
    /// multiplier enforcing the zero pressure mean
    pub mean_multiplier: f64,
}

/// Interpolates the initial condition and seeds the window with
/// `u^0 = u^{-1}`; the coarse variable starts as the projection of the
/// initial vorticity.
pub fn initialize(setup: &ProblemSetup, params: &SavParameters) -> Result<SavState, SolverError> {
    params.validate()?;
    let u0 = FeFunction::interpolate_vector(&setup.velocity, |x, y| (setup.initial_velocity)(x, y));
    if u0.coeffs().iter().any(|c| !c.is_finite()) {
        return Err(SolverError::InvalidParameters(
            "initial velocity interpolation produced non-finite values".into(),
        ));
    }
    let s_curr = if params.sav_enabled {
        let projector = CurlProjector::new(&setup.velocity, &setup.coarse)?;
        projector.project(&u0)?
    } else {
        FeFunction::zeros(&setup.coarse, 1)
    };
    Ok(SavState {
        u_prev: u0.clone(),
        u_curr: u0,
        p_curr: FeFunction::zeros(&setup.pressure, 1),
        s_curr,
        step_index: 0,
        time: 0.0,
    })
}

/// Cached operators for repeated stepping on one problem.
pub struct Stepper<'a> {
    setup: &'a ProblemSetup,
    params: &'a SavParameters,
    mass_vec: SparseMatrix,
    stiff_vec: SparseMatrix,
    divdiv: SparseMatrix,
    curl_alpha: Option<SparseMatrix>,
    coupling_alpha: Option<SparseMatrix>,
    b_div: SparseMatrix,
    b_t: SparseMatrix,
    mean_col: SparseMatrix,
    mean_row: SparseMatrix,
    projector: Option<CurlProjector>,
    ordering: Option<FillOrdering>,
}

impl<'a> Stepper<'a> {
    pub fn new(setup: &'a ProblemSetup, params: &'a SavParameters) -> Result<Self, SolverError> {
        params.validate()?;
        let vel = &setup.velocity;
        let mass_vec = vector_block_diag(&assemble_mass(vel));
        let stiff_vec = vector_block_diag(&assemble_stiffness(vel));
        let divdiv = assemble_divdiv(vel);
        let (curl_alpha, coupling_alpha, projector) = if params.sav_enabled {
            let w = params.alpha1.weights(setup.mesh.n_triangles());
            (
                Some(assemble_curlcurl_weighted(vel, &w)),
                Some(assemble_curl_coupling_weighted(vel, &setup.coarse, &w)?),
                Some(CurlProjector::new(vel, &setup.coarse)?),
            )
        } else {
            (None, None, None)
        };
        let b_div = assemble_pressure_div(vel, &setup.pressure)?;
        let b_t = b_div.transpose();
        let mean = pressure_mean_vector(&setup.pressure);
        let np = setup.pressure.n_dofs();
        let mean_col = SparseMatrix::from_column(np, &mean);
        let mean_row = mean_col.transpose();
        Ok(Self {
            setup,
            params,
            mass_vec,
            stiff_vec,
            divdiv,
            curl_alpha,
            coupling_alpha,
            b_div,
            b_t,
            mean_col,
            mean_row,
            projector,
            ordering: None,
        })
    }

    /// Advances one step from `t^n` to `t^{n+1}`.
    pub fn step(&mut self, state: &SavState) -> Result<(SavState, StepReport), SolverError> {
        let t_start = Instant::now();
        let step = state.step_index;
        let params = self.params;
        let setup = self.setup;
        let nu_dofs = setup.velocity.n_dofs();
        let np = setup.pressure.n_dofs();
        let dt = params.dt;
        let t_next = state.time + dt;

        // (a) coarse-scale projection of the current vorticity
        let s_next = match &self.projector {
            Some(p) => p.project(&state.u_curr)?,
            None => FeFunction::zeros(&setup.coarse, 1),
        };

        // (b) linearly extrapolated convecting field
        let mut beta = FeFunction::zeros(&setup.velocity, 2);
        if params.convection_enabled {
            beta.axpy(2.0, &state.u_curr);
            beta.axpy(-1.0, &state.u_prev);
        }
        let convection = assemble_convection(&beta, &setup.velocity)?;

        // (c) velocity block and right-hand side
        let mut terms: Vec<(f64, &SparseMatrix)> = vec![
            (3.0 / (2.0 * dt), &self.mass_vec),
            (params.nu, &self.stiff_vec),
            (params.alpha2, &self.divdiv),
            (1.0, &convection),
        ];
        if let Some(c) = &self.curl_alpha {
            terms.push((1.0, c));
        }
        let a_vel = SparseMatrix::linear_combination(&terms)
            .map_err(|source| SolverError::Linear { step, source })?;

        let mut window = state.u_curr.clone();
        window.scale(4.0);
        window.axpy(-1.0, &state.u_prev);
        let mut rhs_vel = self
            .mass_vec
            .spmv(window.coeffs())
            .map_err(|source| SolverError::Linear { step, source })?;
        for v in rhs_vel.iter_mut() {
            *v /= 2.0 * dt;
        }
        if let Some(f) = &setup.body_force {
            let load = assemble_load(&setup.velocity, |x, y| f(x, y, t_next));
            for (r, l) in rhs_vel.iter_mut().zip(&load) {
                *r += l;
            }
        }
        if let Some(cpl) = &self.coupling_alpha {
            let sav_rhs = cpl
                .spmv_transpose(s_next.coeffs())
                .map_err(|source| SolverError::Linear { step, source })?;
            for (r, s) in rhs_vel.iter_mut().zip(&sav_rhs) {
                *r += s;
            }
        }

        let mut system = BlockSystem::new(vec![2 * nu_dofs, np, 1], vec![2 * nu_dofs, np, 1]);
        system.set_block(0, 0, &a_vel);
        system.set_block_scaled(0, 1, -1.0, &self.b_t);
        system.set_block(1, 0, &self.b_div);
        system.set_block(1, 2, &self.mean_col);
        system.set_block(2, 1, &self.mean_row);
        system.set_rhs(0, &rhs_vel);
        let (mut matrix, mut rhs) = system
            .assemble()
            .map_err(|source| SolverError::Linear { step, source })?;

        // (d) boundary conditions at the new time level, then solve
        let constrained = velocity_dirichlet_values(&setup.velocity, &setup.bcs, t_next)?;
        apply_dirichlet(&mut matrix, &mut rhs, &constrained);

        let x = match params.linear_solver {
            LinearSolver::DirectLu => {
                if self.ordering.is_none() {
                    self.ordering = Some(FillOrdering::min_degree(&matrix));
                }
                let lu =
                    LuFactorization::factor_with(&matrix, self.ordering.as_ref().unwrap())
                        .map_err(|source| SolverError::Linear { step, source })?;
                lu.solve_refined(&matrix, &rhs, 1)
                    .map_err(|source| SolverError::Linear { step, source })?
            }
            LinearSolver::Gmres { tol, max_iter } => {
                let jacobi = crate::linalg::JacobiPreconditioner::new(&matrix);
                crate::linalg::solve_gmres(&matrix, &rhs, tol, max_iter, Some(&jacobi))
                    .map_err(|source| SolverError::Linear { step, source })?
            }
        };
        if x.iter().any(|v| !v.is_finite()) {
            return Err(SolverError::Diverged {
                step: step + 1,
                time: t_next,
            });
        }
        let residual = matrix
            .residual_inf(&x, &rhs)
            .map_err(|source| SolverError::Linear { step, source })?;
        let rhs_scale = rhs.iter().fold(1.0f64, |m, v| m.max(v.abs()));

        let u_next = FeFunction::from_coeffs(&setup.velocity, 2, x[..2 * nu_dofs].to_vec());
        let p_next =
            FeFunction::from_coeffs(&setup.pressure, 1, x[2 * nu_dofs..2 * nu_dofs + np].to_vec());
        let mean_multiplier = x[2 * nu_dofs + np];
        let div_vec = self
            .b_div
            .spmv(u_next.coeffs())
            .map_err(|source| SolverError::Linear { step, source })?;
        let div_inf = div_vec.iter().fold(0.0f64, |m, v| m.max(v.abs()));

        let report = StepReport {
            linear_residual: residual / rhs_scale,
            wall_time: t_start.elapsed(),
            velocity_dofs: 2 * nu_dofs,
            pressure_dofs: np,
            div_inf,
            mean_multiplier,
        };
        let next = SavState {
            u_prev: state.u_curr.clone(),
            u_curr: u_next,
            p_curr: p_next,
            s_curr: s_next,
            step_index: step + 1,
            time: t_next,
        };
        Ok((next, report))
    }
}

/// Observer invoked after every step with the states before and after the
/// transition; read-only by construction.
pub type StepObserver<'a> = Box<dyn FnMut(&SavState, &SavState, &StepReport) + 'a>;

/// Runs the scheme from `t = 0` to `t_end`, invoking every observer each
/// step. Deterministic for identical inputs.
pub fn run(
    setup: &ProblemSetup,
    params: &SavParameters,
    observers: &mut [StepObserver<'_>],
) -> Result<SavState, SolverError> {
    let mut stepper = Stepper::new(setup, params)?;
    let mut state = initialize(setup, params)?;
    let n = params.n_steps();
    for _ in 0..n {
        let (next, report) = stepper.step(&state)?;
        for obs in observers.iter_mut() {
            obs(&state, &next, &report);
        }
        state = next;
    }
    Ok(state)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::mesh::build_unit_square;
    use crate::spaces::norms;

    fn unit_square_setup(
        n: usize,
        bcs: Vec<DirichletBc>,
        f: Option<Arc<dyn Fn(f64, f64, f64) -> (f64, f64) + Send + Sync>>,
        u0: impl Fn(f64, f64) -> (f64, f64) + Send + Sync + 'static,
    ) -> ProblemSetup {
        let mesh = Arc::new(build_unit_square(n).unwrap());
        ProblemSetup::new(mesh, bcs, f, Arc::new(u0)).unwrap()
    }

    fn default_params(dt: f64, t_end: f64, h: f64) -> SavParameters {
        SavParameters {
            nu: 1.0,
            alpha1: Alpha1::Uniform(h * h),
            alpha2: 1.0,
            dt,
            t_end,
            sav_enabled: true,
            convection_enabled: true,
            linear_solver: LinearSolver::default(),
        }
    }

    #[test]
    fn zero_data_stays_zero() {
        let setup = unit_square_setup(3, vec![DirichletBc::zero(vec![1])], None, |_, _| (0.0, 0.0));
        let params = default_params(0.1, 0.5, 1.0 / 3.0);
        let final_state = run(&setup, &params, &mut []).unwrap();
        assert_eq!(final_state.step_index, 5);
        assert!(final_state.u_curr.coeffs().iter().all(|&v| v == 0.0));
        assert!(final_state.p_curr.coeffs().iter().all(|&v| v.abs() < 1e-12));
    }

    #[test]
    fn initialize_matches_interpolant() {
        let setup = unit_square_setup(2, vec![DirichletBc::zero(vec![1])], None, |x, y| (y, x));
        let params = default_params(0.1, 0.1, 0.5);
        let state = initialize(&setup, &params).unwrap();
        let interp = FeFunction::interpolate_vector(&setup.velocity, |x, y| (y, x));
        assert_eq!(state.u_curr.coeffs(), interp.coeffs());
        assert_eq!(state.u_prev.coeffs(), interp.coeffs());
        assert_eq!(state.step_index, 0);
    }

    #[test]
    fn initial_projection_of_gradient_field_vanishes() {
        // u0 = grad(x^2/2 + y^2/2) = (x, y): curl-free
        let setup = unit_square_setup(3, vec![DirichletBc::zero(vec![1])], None, |x, y| (x, y));
        let params = default_params(0.1, 0.1, 1.0 / 3.0);
        let state = initialize(&setup, &params).unwrap();
        assert!(state.s_curr.coeffs().iter().all(|&v| v.abs() < 1e-12));
    }

    /// Steady Stokes with a polynomial solution representable in the
    /// spaces: u = (y^2, x^2), p = x - 1/2, f = (1 - 2 nu, -2 nu). The
    /// interpolant is an exact fixed point of the stepper with convection
    /// disabled.
    #[test]
    fn stokes_limit_preserves_polynomial_steady_state() {
        let nu = 1.0;
        let exact = |x: f64, y: f64| (y * y, x * x);
        let bc = DirichletBc::new(vec![1], move |x, y, _| exact(x, y));
        let f: Arc<dyn Fn(f64, f64, f64) -> (f64, f64) + Send + Sync> =
            Arc::new(move |_x, _y, _t| (1.0 - 2.0 * nu, -2.0 * nu));
        let setup = unit_square_setup(3, vec![bc], Some(f), exact);
        let mut params = default_params(0.05, 0.25, 1.0 / 3.0);
        params.convection_enabled = false;
        let final_state = run(&setup, &params, &mut []).unwrap();
        let exact_fn = FeFunction::interpolate_vector(&setup.velocity, exact);
        let mut err = final_state.u_curr.clone();
        err.axpy(-1.0, &exact_fn);
        assert!(norms(&err).l2 < 1e-10, "velocity drifted: {}", norms(&err).l2);
        let p_exact = FeFunction::interpolate_scalar(&setup.pressure, |x, _| x - 0.5);
        let mut perr = final_state.p_curr.clone();
        perr.axpy(-1.0, &p_exact);
        assert!(norms(&perr).l2 < 1e-9, "pressure drifted: {}", norms(&perr).l2);
    }

    /// Full-scheme fixed point: the same polynomial velocity with the
    /// convection term included in the forcing. All integrands stay within
    /// the quadrature degree, so the interpolant is preserved to solver
    /// precision.
    #[test]
    fn nse_polynomial_fixed_point_with_convection() {
        let nu = 0.7;
        let exact = |x: f64, y: f64| (y * y, x * x);
        let bc = DirichletBc::new(vec![1], move |x, y, _| exact(x, y));
        let f: Arc<dyn Fn(f64, f64, f64) -> (f64, f64) + Send + Sync> =
            Arc::new(move |x, y, _t| {
                (
                    1.0 - 2.0 * nu + 2.0 * x * x * y,
                    -2.0 * nu + 2.0 * x * y * y,
                )
            });
        let setup = unit_square_setup(3, vec![bc], Some(f), exact);
        let mut params = default_params(0.05, 0.25, 1.0 / 3.0);
        params.nu = nu;
        let final_state = run(&setup, &params, &mut []).unwrap();
        let exact_fn = FeFunction::interpolate_vector(&setup.velocity, exact);
        let mut err = final_state.u_curr.clone();
        err.axpy(-1.0, &exact_fn);
        assert!(norms(&err).l2 < 1e-9, "velocity drifted: {}", norms(&err).l2);
    }

    #[test]
    fn single_step_equals_run_with_one_step() {
        let setup = unit_square_setup(
            2,
            vec![DirichletBc::zero(vec![1])],
            Some(Arc::new(|x: f64, y: f64, _t: f64| (x * y, x - y))),
            |_, _| (0.0, 0.0),
        );
        let params = default_params(0.1, 0.1, 0.5);
        let from_run = run(&setup, &params, &mut []).unwrap();
        let mut stepper = Stepper::new(&setup, &params).unwrap();
        let s0 = initialize(&setup, &params).unwrap();
        let (from_step, _) = stepper.step(&s0).unwrap();
        assert_eq!(from_run.u_curr.coeffs(), from_step.u_curr.coeffs());
        assert_eq!(from_run.p_curr.coeffs(), from_step.p_curr.coeffs());
    }

    #[test]
    fn observers_do_not_perturb_trajectory() {
        let setup = unit_square_setup(
            2,
            vec![DirichletBc::zero(vec![1])],
            Some(Arc::new(|x: f64, y: f64, t: f64| (x * t, y))),
            |_, _| (0.0, 0.0),
        );
        let params = default_params(0.05, 0.2, 0.5);
        let baseline = run(&setup, &params, &mut []).unwrap();
        let mut counts = [0usize; 3];
        {
            let counts_cell = std::cell::RefCell::new(&mut counts);
            let mut observers: Vec<StepObserver> = (0..3)
                .map(|i| {
                    let cell = &counts_cell;
                    Box::new(move |_: &SavState, _: &SavState, _: &StepReport| {
                        cell.borrow_mut()[i] += 1;
                    }) as StepObserver
                })
                .collect();
            let observed = run(&setup, &params, &mut observers).unwrap();
            assert_eq!(baseline.u_curr.coeffs(), observed.u_curr.coeffs());
        }
        assert_eq!(counts, [4, 4, 4]);
    }

    #[test]
    fn nosav_equals_sav_with_zero_alpha1() {
        let setup = unit_square_setup(
            2,
            vec![DirichletBc::zero(vec![1])],
            Some(Arc::new(|x: f64, y: f64, _t: f64| (y - x, x * y))),
            |_, _| (0.0, 0.0),
        );
        let mut params = default_params(0.05, 0.2, 0.5);
        params.alpha1 = Alpha1::Uniform(0.0);
        let sav = run(&setup, &params, &mut []).unwrap();
        let nosav = run(&setup, &nosav_mode(params), &mut []).unwrap();
        let scale: f64 = sav
            .u_curr
            .coeffs()
            .iter()
            .fold(1.0f64, |m, v| m.max(v.abs()));
        for (a, b) in sav.u_curr.coeffs().iter().zip(nosav.u_curr.coeffs()) {
            assert!((a - b).abs() <= 1e-11 * scale);
        }
    }

    #[test]
    fn discrete_divergence_is_tiny_every_step() {
        let setup = unit_square_setup(
            3,
            vec![DirichletBc::zero(vec![1])],
            Some(Arc::new(|x: f64, y: f64, t: f64| {
                ((1.0 + t) * y, x * x - 0.3)
            })),
            |_, _| (0.0, 0.0),
        );
        let params = default_params(0.05, 0.25, 1.0 / 3.0);
        let max_div = std::cell::Cell::new(0.0f64);
        {
            let mut observers: Vec<StepObserver> =
                vec![Box::new(|_: &SavState, _: &SavState, report: &StepReport| {
                    max_div.set(max_div.get().max(report.div_inf));
                })];
            run(&setup, &params, &mut observers).unwrap();
        }
        assert!(max_div.get() <= 1e-9, "max ||B u||_inf = {}", max_div.get());
    }

    #[test]
    fn invalid_dt_rejected() {
        let params = SavParameters {
            nu: 1.0,
            alpha1: Alpha1::Uniform(0.1),
            alpha2: 0.0,
            dt: -0.1,
            t_end: 1.0,
            sav_enabled: true,
            convection_enabled: true,
            linear_solver: LinearSolver::default(),
        };
        assert!(matches!(
            params.validate(),
            Err(SolverError::InvalidParameters(_))
        ));
    }
}
