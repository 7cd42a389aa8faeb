//! Quantities of interest and exact discrete identity checks.
//!
//! Everything here is recomputed by quadrature from state snapshots,
//! independently of the assembled matrices in the solver: a vanishing
//! energy-identity residual therefore certifies assembly and solve
//! together. The per-step identity tested is the one obtained by testing
//! the momentum equation with `u^{n+1}` and using the BDF2 square
//! decomposition `a(3a-4b+c)/2 = 1/4[a^2+(2a-b)^2] - 1/4[b^2+(2b-c)^2]
//! + 1/4 (a-2b+c)^2`; it holds only when `u^{n+1}` is an admissible test
//! function, i.e. for homogeneous Dirichlet data.

use crate::mesh::Mesh;
use crate::solver::{
    initialize, run, ProblemSetup, SavParameters, SavState, StepObserver, StepReport,
};
use crate::spaces::{
    norms, point_eval, BasisTable, FeFunction, QuadratureRule, SpaceError,
};
use std::collections::HashMap;
use std::sync::Arc;
use thiserror::Error;

#[derive(Debug, Error)]
pub enum DiagnosticsError {
    #[error("mesh has no edges with marker {0}; not an obstacle benchmark mesh")]
    MissingMarker(u32),
    #[error(transparent)]
    Space(#[from] SpaceError),
    #[error(transparent)]
    Solver(#[from] crate::solver::SolverError),
}

/// Per-step scalars recorded during a run.
#[derive(Debug, Clone, Default)]
pub struct DiagnosticsRecord {
    pub time: f64,
    pub kinetic_energy: f64,
    pub enstrophy: f64,
    pub drag: Option<f64>,
    pub lift: Option<f64>,
    pub pressure_drop: Option<f64>,
    /// `None` when the identity is not applicable (inhomogeneous Dirichlet
    /// data)
    pub energy_identity_residual: Option<f64>,
    pub sav_bound_slack: f64,
    pub div_l2: f64,
    pub error_l2: Option<f64>,
    pub error_h1: Option<f64>,
}

/// Kinetic energy `1/2 ||u||^2`.
pub fn energy(u: &FeFunction) -> f64 {
    let l2 = norms(u).l2;
    0.5 * l2 * l2
}

/// Enstrophy `1/2 nu ||curl u||^2`.
pub fn enstrophy(u: &FeFunction, nu: f64) -> f64 {
    let c = norms(u).curl_l2;
    0.5 * nu * c * c
}

/// Every term of the tested per-step energy identity, recomputed by
/// quadrature.
#[derive(Debug, Clone)]
pub struct EnergyLedger {
    /// `1/(4 dt) (||u^{n+1}||^2 - ||u^n||^2)`
    pub kinetic_difference: f64,
    /// `1/(4 dt) (||2u^{n+1}-u^n||^2 - ||2u^n-u^{n-1}||^2)`
    pub window_difference: f64,
    /// `1/(4 dt) ||u^{n+1} - 2u^n + u^{n-1}||^2`
    pub curvature: f64,
    /// `nu ||grad u^{n+1}||^2`
    pub viscous: f64,
    /// `alpha1 [ (curl u^{n+1}, curl u^{n+1}) - (S_H^{n+1}, curl u^{n+1}) ]`
    pub subgrid: f64,
    /// `alpha2 ||div u^{n+1}||^2`
    pub grad_div: f64,
    /// `(f(t^{n+1}), u^{n+1})`
    pub forcing: f64,
}

impl EnergyLedger {
    pub fn residual(&self) -> f64 {
        self.kinetic_difference + self.window_difference + self.curvature + self.viscous
            + self.subgrid
            + self.grad_div
            - self.forcing
    }

    /// Residual relative to the largest participating term.
    pub fn relative_residual(&self) -> f64 {
        let scale = [
            self.kinetic_difference,
            self.window_difference,
            self.curvature,
            self.viscous,
            self.subgrid,
            self.grad_div,
            self.forcing,
        ]
        .iter()
        .fold(0.0f64, |m, t| m.max(t.abs()))
        .max(1e-300);
        self.residual().abs() / scale
    }
}

/// Evaluates the per-step identity for the transition
/// `(u^{n-1}, u^n) -> u^{n+1}` with `S_H^{n+1}` from the new state.
/// `alpha1_weights` must be the same per-element values the solver used
/// (empty slice for a run without the subgrid terms).
#[allow(clippy::too_many_arguments)]
pub fn energy_identity_check(
    u_next: &FeFunction,
    u_curr: &FeFunction,
    u_prev: &FeFunction,
    s_next: &FeFunction,
    body_force: Option<&dyn Fn(f64, f64, f64) -> (f64, f64)>,
    t_next: f64,
    nu: f64,
    alpha1_weights: &[f64],
    alpha2: f64,
    dt: f64,
) -> EnergyLedger {
    let n_next = norms(u_next);
    let n_curr = norms(u_curr);
    let mut w_next = u_next.clone(); // 2u^{n+1} - u^n
    w_next.scale(2.0);
    w_next.axpy(-1.0, u_curr);
    let mut w_curr = u_curr.clone(); // 2u^n - u^{n-1}
    w_curr.scale(2.0);
    w_curr.axpy(-1.0, u_prev);
    let mut second_diff = u_next.clone(); // u^{n+1} - 2u^n + u^{n-1}
    second_diff.axpy(-2.0, u_curr);
    second_diff.axpy(1.0, u_prev);

    let quarter_dt = 1.0 / (4.0 * dt);
    let kinetic_difference = quarter_dt * (n_next.l2.powi(2) - n_curr.l2.powi(2));
    let window_difference =
        quarter_dt * (norms(&w_next).l2.powi(2) - norms(&w_curr).l2.powi(2));
    let curvature = quarter_dt * norms(&second_diff).l2.powi(2);
    let viscous = nu * n_next.h1_semi.powi(2);
    let grad_div = alpha2 * n_next.div_l2.powi(2);
    let subgrid = if alpha1_weights.is_empty() {
        0.0
    } else {
        let (curl_sq, s_curl) = weighted_curl_terms(u_next, s_next, alpha1_weights);
        curl_sq - s_curl
    };
    let forcing = match body_force {
        Some(f) => integrate_force_dot(u_next, |x, y| f(x, y, t_next)),
        None => 0.0,
    };
    EnergyLedger {
        kinetic_difference,
        window_difference,
        curvature,
        viscous,
        subgrid,
        grad_div,
        forcing,
    }
}

/// `(sum_K w_K int_K (curl u)^2, sum_K w_K int_K s * curl u)` by direct
/// quadrature.
fn weighted_curl_terms(u: &FeFunction, s: &FeFunction, weights: &[f64]) -> (f64, f64) {
    let space = u.space();
    let rule = QuadratureRule::degree5();
    let table = BasisTable::tabulate(space.degree(), &rule.points).expect("degree validated");
    let stable = BasisTable::tabulate(s.space().degree(), &rule.points).expect("degree validated");
    let mesh = space.mesh();
    let n = space.n_dofs();
    let mut curl_sq = 0.0;
    let mut s_curl = 0.0;
    for t in 0..mesh.n_triangles() {
        let em = crate::spaces::element_map(mesh, t);
        let dofs = space.element_dofs(t);
        let sdofs = s.space().element_dofs(t);
        let wk = weights[t];
        for (q, w) in rule.weights.iter().enumerate() {
            let wq = w * em.det * wk;
            let mut curl = 0.0;
            for (a, &d) in dofs.iter().enumerate() {
                let g = em.grad(table.grads[q][a]);
                curl += u.coeffs()[n + d] * g.0 - u.coeffs()[d] * g.1;
            }
            let mut sval = 0.0;
            for (a, &d) in sdofs.iter().enumerate() {
                sval += s.coeffs()[d] * stable.values[q][a];
            }
            curl_sq += wq * curl * curl;
            s_curl += wq * sval * curl;
        }
    }
    (curl_sq, s_curl)
}

/// `(f, u)` over the mesh by the default quadrature (matching the load
/// assembly, so the identity closes to rounding).
fn integrate_force_dot(u: &FeFunction, f: impl Fn(f64, f64) -> (f64, f64)) -> f64 {
    let space = u.space();
    let rule = QuadratureRule::degree5();
    let table = BasisTable::tabulate(space.degree(), &rule.points).expect("degree validated");
    let mesh = space.mesh();
    let n = space.n_dofs();
    let mut acc = 0.0;
    for t in 0..mesh.n_triangles() {
        let em = crate::spaces::element_map(mesh, t);
        let dofs = space.element_dofs(t);
        for (q, w) in rule.weights.iter().enumerate() {
            let wq = w * em.det;
            let (x, y) = em.point(rule.points[q]);
            let (fx, fy) = f(x, y);
            let mut ux = 0.0;
            let mut uy = 0.0;
            for (a, &d) in dofs.iter().enumerate() {
                ux += u.coeffs()[d] * table.values[q][a];
                uy += u.coeffs()[n + d] * table.values[q][a];
            }
            acc += wq * (fx * ux + fy * uy);
        }
    }
    acc
}

/// `||f(., t)||_{L2}` over the mesh.
fn force_l2(mesh: &Mesh, f: &dyn Fn(f64, f64, f64) -> (f64, f64), t: f64) -> f64 {
    let rule = QuadratureRule::degree5();
    let mut acc = 0.0;
    for tri in 0..mesh.n_triangles() {
        let em = crate::spaces::element_map(mesh, tri);
        for (q, w) in rule.weights.iter().enumerate() {
            let wq = w * em.det;
            let (x, y) = em.point(rule.points[q]);
            let (fx, fy) = f(x, y, t);
            acc += wq * (fx * fx + fy * fy);
        }
    }
    acc.sqrt()
}

/// Projection-stability slack `||curl u^n|| - ||S_H^{n+1}||`; nonnegative
/// up to rounding.
pub fn sav_bound_check(s_next: &FeFunction, u_curr: &FeFunction) -> f64 {
    norms(u_curr).curl_l2 - norms(s_next).l2
}

/// Domain diameter (max pairwise distance over boundary vertices); a valid
/// Poincare-Friedrichs constant for the zero-trace space.
pub fn domain_diameter(mesh: &Mesh) -> f64 {
    let mut bvs: Vec<usize> = mesh
        .boundary_edges()
        .iter()
        .flat_map(|&(a, b, _)| [a, b])
        .collect();
    bvs.sort_unstable();
    bvs.dedup();
    let mut d2: f64 = 0.0;
    for i in 0..bvs.len() {
        let (xi, yi) = mesh.vertex(bvs[i]);
        for &j in &bvs[i + 1..] {
            let (xj, yj) = mesh.vertex(j);
            d2 = d2.max((xi - xj).powi(2) + (yi - yj).powi(2));
        }
    }
    d2.sqrt()
}

/// Accumulates both sides of the unconditional stability bound
/// `||u^N||^2 + ||2u^N - u^{N-1}||^2 + 2 dt sum (nu ||grad u^{n+1}||^2
/// + 2 alpha2 ||div u^{n+1}||^2) + 2 alpha1 dt ||curl u^N||^2
/// <= ||u^1||^2 + ||2u^1 - u^0||^2 + 2 alpha1 dt ||curl u^1||^2
/// + 2 dt sum nu^{-1} ||f(t^{n+1})||_{-1}^2`, sums over n = 1..N-1, with
/// the dual norm replaced by the computable bound `C_PF ||f||`.
pub struct StabilityLedger {
    nu: f64,
    alpha1: f64,
    alpha2: f64,
    dt: f64,
    c_pf: f64,
    body_force: Option<Arc<dyn Fn(f64, f64, f64) -> (f64, f64) + Send + Sync>>,
    initial_terms: Option<f64>,
    dissipation_sum: f64,
    forcing_sum: f64,
    last: Option<(f64, f64, f64)>, // ||u^N||^2, ||2u^N-u^{N-1}||^2, ||curl u^N||^2
}

impl StabilityLedger {
    pub fn new(params: &SavParameters, setup: &ProblemSetup) -> Self {
        let alpha1 = if params.sav_enabled {
            params.alpha1.max_value()
        } else {
            0.0
        };
        Self {
            nu: params.nu,
            alpha1,
            alpha2: params.alpha2,
            dt: params.dt,
            c_pf: domain_diameter(&setup.mesh),
            body_force: setup.body_force.clone(),
            initial_terms: None,
            dissipation_sum: 0.0,
            forcing_sum: 0.0,
            last: None,
        }
    }

    pub fn observe(&mut self, _before: &SavState, after: &SavState, _report: &StepReport) {
        let n = norms(&after.u_curr);
        let mut window = after.u_curr.clone();
        window.scale(2.0);
        window.axpy(-1.0, &after.u_prev);
        let wn = norms(&window).l2;
        if after.step_index == 1 {
            self.initial_terms = Some(
                n.l2.powi(2) + wn * wn + 2.0 * self.alpha1 * self.dt * n.curl_l2.powi(2),
            );
        } else {
            // transitions n >= 1 contribute dissipation and forcing
            self.dissipation_sum +=
                self.nu * n.h1_semi.powi(2) + 2.0 * self.alpha2 * n.div_l2.powi(2);
            if let Some(f) = &self.body_force {
                let fl2 = force_l2(after.u_curr.space().mesh(), f.as_ref(), after.time);
                self.forcing_sum += (self.c_pf * fl2).powi(2) / self.nu;
            }
        }
        self.last = Some((n.l2.powi(2), wn * wn, n.curl_l2.powi(2)));
    }

    /// `(lhs, rhs)` of the bound; valid once at least one step was observed.
    pub fn sides(&self) -> (f64, f64) {
        let (un, wn, curln) = self.last.unwrap_or((0.0, 0.0, 0.0));
        let lhs = un
            + wn
            + 2.0 * self.dt * self.dissipation_sum
            + 2.0 * self.alpha1 * self.dt * curln;
        let rhs = self.initial_terms.unwrap_or(0.0) + 2.0 * self.dt * self.forcing_sum;
        (lhs, rhs)
    }
}

/// Scaling constants of the benchmark force coefficients:
/// `2 / (rho L U_max^2) = 20` with `rho = 1`, `L = 0.1` and unit maximal
/// mean inflow.
pub const DRAG_LIFT_PREFACTOR: f64 = 20.0;
const OBSTACLE_MARKER: u32 = 4;

/// Drag and lift coefficients by the boundary line integral over the
/// obstacle, 3-point Gauss per edge. The normal points out of the fluid
/// obstacle surface into the fluid, the tangent is `(n_y, -n_x)`.
pub fn drag_lift(
    u: &FeFunction,
    p: &FeFunction,
    mesh: &Mesh,
    nu: f64,
) -> Result<(f64, f64), DiagnosticsError> {
    let edges: Vec<(usize, usize)> = mesh
        .boundary_edges()
        .iter()
        .filter(|&&(_, _, m)| m == OBSTACLE_MARKER)
        .map(|&(a, b, _)| (a, b))
        .collect();
    if edges.is_empty() {
        return Err(DiagnosticsError::MissingMarker(OBSTACLE_MARKER));
    }
    // directed edge -> containing triangle
    let mut tri_of: HashMap<(usize, usize), usize> = HashMap::new();
    for (t, tri) in mesh.triangles().iter().enumerate() {
        for k in 0..3 {
            tri_of.insert((tri[k], tri[(k + 1) % 3]), t);
        }
    }
    // 3-point Gauss on [0,1]
    let sqrt35 = (3.0f64 / 5.0).sqrt();
    let gauss = [
        (0.5 * (1.0 - sqrt35), 5.0 / 18.0),
        (0.5, 8.0 / 18.0),
        (0.5 * (1.0 + sqrt35), 5.0 / 18.0),
    ];
    let uspace = u.space();
    let pspace = p.space();
    let nuv = uspace.n_dofs();
    let mut f_d = 0.0;
    let mut f_l = 0.0;
    for &(a, b) in &edges {
        let t = *tri_of
            .get(&(a, b))
            .expect("boundary edge oriented with its triangle");
        let tri = mesh.triangle(t);
        let loc_a = tri.iter().position(|&v| v == a).unwrap();
        let loc_b = tri.iter().position(|&v| v == b).unwrap();
        let (ax, ay) = mesh.vertex(a);
        let (bx, by) = mesh.vertex(b);
        let (dx, dy) = (bx - ax, by - ay);
        let len = (dx * dx + dy * dy).sqrt();
        // fluid lies left of the directed edge, so the left normal points
        // into the fluid (out of the obstacle)
        let n = (-dy / len, dx / len);
        let t_s = (n.1, -n.0);
        let em = crate::spaces::element_map(mesh, t);
        for &(s, w) in &gauss {
            let mut bary = [0.0f64; 3];
            bary[loc_a] = 1.0 - s;
            bary[loc_b] = s;
            let (vals, grads_ref) =
                crate::spaces::eval_basis(uspace.degree(), bary).expect("degree validated");
            let dofs = uspace.element_dofs(t);
            // grad of tangential velocity component u . t_s
            let mut grad_ut = (0.0, 0.0);
            for (k, &d) in dofs.iter().enumerate() {
                let g = em.grad(grads_ref[k]);
                let coef_t = u.coeffs()[d] * t_s.0 + u.coeffs()[nuv + d] * t_s.1;
                grad_ut.0 += coef_t * g.0;
                grad_ut.1 += coef_t * g.1;
            }
            let dut_dn = grad_ut.0 * n.0 + grad_ut.1 * n.1;
            let _ = vals;
            let (pvals, _) =
                crate::spaces::eval_basis(pspace.degree(), bary).expect("degree validated");
            let pdofs = pspace.element_dofs(t);
            let mut pval = 0.0;
            for (k, &d) in pdofs.iter().enumerate() {
                pval += p.coeffs()[d] * pvals[k];
            }
            let ds = w * len;
            f_d += ds * (nu * dut_dn * n.1 - pval * n.0);
            f_l -= ds * (nu * dut_dn * n.0 + pval * n.1);
        }
    }
    Ok((DRAG_LIFT_PREFACTOR * f_d, DRAG_LIFT_PREFACTOR * f_l))
}

/// Benchmark pressure drop `p(0.15, 0.2) - p(0.25, 0.2)`.
pub fn pressure_drop(p: &FeFunction) -> Result<f64, DiagnosticsError> {
    let front = point_eval(p, 0.15, 0.2)?;
    let back = point_eval(p, 0.25, 0.2)?;
    Ok(front[0] - back[0])
}

/// Velocity error against an analytic solution at one time level:
/// `(||u - u_h||_{L2}^2, ||grad u - grad u_h||_{L2}^2)`.
pub fn velocity_error_squared(
    u_h: &FeFunction,
    t: f64,
    exact: &dyn Fn(f64, f64, f64) -> (f64, f64),
    exact_grad: &dyn Fn(f64, f64, f64) -> [[f64; 2]; 2],
) -> (f64, f64) {
    let space = u_h.space();
    let rule = QuadratureRule::degree5();
    let table = BasisTable::tabulate(space.degree(), &rule.points).expect("degree validated");
    let mesh = space.mesh();
    let n = space.n_dofs();
    let mut l2 = 0.0;
    let mut h1 = 0.0;
    for tri in 0..mesh.n_triangles() {
        let em = crate::spaces::element_map(mesh, tri);
        let dofs = space.element_dofs(tri);
        for (q, w) in rule.weights.iter().enumerate() {
            let wq = w * em.det;
            let (x, y) = em.point(rule.points[q]);
            let (ex, ey) = exact(x, y, t);
            let eg = exact_grad(x, y, t);
            let mut ux = 0.0;
            let mut uy = 0.0;
            let mut gx = (0.0, 0.0);
            let mut gy = (0.0, 0.0);
            for (a, &d) in dofs.iter().enumerate() {
                let val = table.values[q][a];
                let g = em.grad(table.grads[q][a]);
                ux += u_h.coeffs()[d] * val;
                uy += u_h.coeffs()[n + d] * val;
                gx.0 += u_h.coeffs()[d] * g.0;
                gx.1 += u_h.coeffs()[d] * g.1;
                gy.0 += u_h.coeffs()[n + d] * g.0;
                gy.1 += u_h.coeffs()[n + d] * g.1;
            }
            l2 += wq * ((ux - ex).powi(2) + (uy - ey).powi(2));
            h1 += wq
                * ((gx.0 - eg[0][0]).powi(2)
                    + (gx.1 - eg[0][1]).powi(2)
                    + (gy.0 - eg[1][0]).powi(2)
                    + (gy.1 - eg[1][1]).powi(2));
        }
    }
    (l2, h1)
}

/// Which spatial norm enters the discrete time aggregation.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ErrorNormMode {
    L2InTimeOfL2,
    L2InTimeOfH1,
}

/// Discrete norm `sqrt(dt * sum_{n=1}^{N} e_n^2)` over the per-step errors
/// recorded during a run.
pub fn error_norms(records: &[DiagnosticsRecord], dt: f64, mode: ErrorNormMode) -> f64 {
    let sum: f64 = records
        .iter()
        .map(|r| match mode {
            ErrorNormMode::L2InTimeOfL2 => r.error_l2.unwrap_or(0.0).powi(2),
            ErrorNormMode::L2InTimeOfH1 => r.error_h1.unwrap_or(0.0).powi(2),
        })
        .sum();
    (dt * sum).sqrt()
}

/// Pair of closures describing an analytic solution for error monitoring.
#[derive(Clone)]
pub struct ExactSolution {
    pub velocity: Arc<dyn Fn(f64, f64, f64) -> (f64, f64) + Send + Sync>,
    pub velocity_gradient: Arc<dyn Fn(f64, f64, f64) -> [[f64; 2]; 2] + Send + Sync>,
}

/// Observer that assembles a [`DiagnosticsRecord`] per step.
pub struct Recorder {
    nu: f64,
    dt: f64,
    alpha2: f64,
    alpha1_weights: Vec<f64>,
    sav_enabled: bool,
    homogeneous_bc: bool,
    body_force: Option<Arc<dyn Fn(f64, f64, f64) -> (f64, f64) + Send + Sync>>,
    forces: bool,
    exact: Option<ExactSolution>,
    pub records: Vec<DiagnosticsRecord>,
}

impl Recorder {
    pub fn new(setup: &ProblemSetup, params: &SavParameters) -> Self {
        let alpha1_weights = if params.sav_enabled {
            params.alpha1.weights(setup.mesh.n_triangles())
        } else {
            Vec::new()
        };
        let forces = setup
            .mesh
            .boundary_edges()
            .iter()
            .any(|&(_, _, m)| m == OBSTACLE_MARKER);
        Self {
            nu: params.nu,
            dt: params.dt,
            alpha2: params.alpha2,
            alpha1_weights,
            sav_enabled: params.sav_enabled,
            homogeneous_bc: setup.homogeneous_bc,
            body_force: setup.body_force.clone(),
            forces,
            exact: None,
            records: Vec::new(),
        }
    }

    /// Enables per-step error recording against an analytic solution.
    pub fn with_exact(mut self, exact: ExactSolution) -> Self {
        self.exact = Some(exact);
        self
    }

    /// Disables the obstacle force integrals even if marker 4 exists.
    pub fn without_forces(mut self) -> Self {
        self.forces = false;
        self
    }

    pub fn observe(&mut self, before: &SavState, after: &SavState, _report: &StepReport) {
        let u = &after.u_curr;
        let n = norms(u);
        let mut rec = DiagnosticsRecord {
            time: after.time,
            kinetic_energy: 0.5 * n.l2 * n.l2,
            enstrophy: 0.5 * self.nu * n.curl_l2 * n.curl_l2,
            div_l2: n.div_l2,
            ..Default::default()
        };
        rec.sav_bound_slack = if self.sav_enabled {
            sav_bound_check(&after.s_curr, &before.u_curr)
        } else {
            0.0
        };
        if self.homogeneous_bc {
            let ledger = energy_identity_check(
                &after.u_curr,
                &before.u_curr,
                &before.u_prev,
                &after.s_curr,
                self.body_force.as_ref().map(|f| f.as_ref() as &dyn Fn(f64, f64, f64) -> (f64, f64)),
                after.time,
                self.nu,
                &self.alpha1_weights,
                self.alpha2,
                self.dt,
            );
            rec.energy_identity_residual = Some(ledger.relative_residual());
        }
        if self.forces {
            if let Ok((cd, cl)) = drag_lift(u, &after.p_curr, u.space().mesh(), self.nu) {
                rec.drag = Some(cd);
                rec.lift = Some(cl);
            }
            if let Ok(dp) = pressure_drop(&after.p_curr) {
                rec.pressure_drop = Some(dp);
            }
        }
        if let Some(exact) = &self.exact {
            let (l2sq, h1sq) = velocity_error_squared(
                u,
                after.time,
                exact.velocity.as_ref(),
                exact.velocity_gradient.as_ref(),
            );
            rec.error_l2 = Some(l2sq.sqrt());
            rec.error_h1 = Some(h1sq.sqrt());
        }
        self.records.push(rec);
    }
}

/// Runs the scheme and returns the per-step diagnostics records together
/// with the stability-ledger sides and the final state.
pub fn run_with_diagnostics(
    setup: &ProblemSetup,
    params: &SavParameters,
    exact: Option<ExactSolution>,
) -> Result<(Vec<DiagnosticsRecord>, (f64, f64), SavState), DiagnosticsError> {
    let mut recorder = Recorder::new(setup, params);
    if let Some(e) = exact {
        recorder = recorder.with_exact(e);
    }
    let mut ledger = StabilityLedger::new(params, setup);
    let final_state = {
        let rec = &mut recorder;
        let led = &mut ledger;
        let mut observers: Vec<StepObserver> = vec![
            Box::new(move |b: &SavState, a: &SavState, r: &StepReport| rec.observe(b, a, r)),
            Box::new(move |b: &SavState, a: &SavState, r: &StepReport| led.observe(b, a, r)),
        ];
        run(setup, params, &mut observers)?
    };
    let sides = ledger.sides();
    Ok((recorder.records, sides, final_state))
}

/// Convenience used by tests: initial state without stepping.
pub fn initial_state(
    setup: &ProblemSetup,
    params: &SavParameters,
) -> Result<SavState, DiagnosticsError> {
    Ok(initialize(setup, params)?)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::mesh::{build_channel_cylinder, build_unit_square};
    use crate::solver::{Alpha1, LinearSolver};
    use crate::spaces::{DirichletBc, FeSpace};

    #[test]
    fn energy_and_enstrophy_basics() {
        let mesh = Arc::new(build_unit_square(4).unwrap());
        let p2 = FeSpace::new(mesh, 2).unwrap();
        let zero = FeFunction::zeros(&p2, 2);
        assert_eq!(energy(&zero), 0.0);
        assert_eq!(enstrophy(&zero, 0.5), 0.0);
        // u = (-y, x): enstrophy = nu/2 * 4 = 2 nu
        let rot = FeFunction::interpolate_vector(&p2, |x, y| (-y, x));
        let nu = 0.3;
        assert!((enstrophy(&rot, nu) - 2.0 * nu).abs() < 1e-12);
    }

    #[test]
    fn manufactured_energy_at_t0() {
        // u = (sin 2 pi y, cos 2 pi x): energy = 1/2
        let mesh = Arc::new(build_unit_square(48).unwrap());
        let p2 = FeSpace::new(mesh, 2).unwrap();
        let u = FeFunction::interpolate_vector(&p2, |x, y| {
            (
                (2.0 * std::f64::consts::PI * y).sin(),
                (2.0 * std::f64::consts::PI * x).cos(),
            )
        });
        assert!((energy(&u) - 0.5).abs() < 1e-5);
    }

    #[test]
    fn identity_residual_zero_for_zero_solution() {
        let mesh = Arc::new(build_unit_square(2).unwrap());
        let p2 = FeSpace::new(Arc::clone(&mesh), 2).unwrap();
        let p1 = FeSpace::new(mesh, 1).unwrap();
        let z = FeFunction::zeros(&p2, 2);
        let s = FeFunction::zeros(&p1, 1);
        let weights = vec![0.1; z.space().mesh().n_triangles()];
        let ledger = energy_identity_check(&z, &z, &z, &s, None, 0.1, 1.0, &weights, 1.0, 0.1);
        assert_eq!(ledger.residual(), 0.0);
    }

    #[test]
    fn perturbing_solution_breaks_identity() {
        // negative control on a real transition from a short run
        let mesh = Arc::new(build_unit_square(3).unwrap());
        let setup = crate::solver::ProblemSetup::new(
            mesh,
            vec![DirichletBc::zero(vec![1])],
            Some(Arc::new(|x: f64, y: f64, _t: f64| (y - x, x * y))),
            Arc::new(|_, _| (0.0, 0.0)),
        )
        .unwrap();
        let params = SavParameters {
            nu: 1.0,
            alpha1: Alpha1::Uniform(0.1),
            alpha2: 1.0,
            dt: 0.05,
            t_end: 0.1,
            sav_enabled: true,
            convection_enabled: true,
            linear_solver: LinearSolver::default(),
        };
        let captured: std::cell::RefCell<Option<(SavState, SavState)>> =
            std::cell::RefCell::new(None);
        {
            let mut observers: Vec<StepObserver> =
                vec![Box::new(|b: &SavState, a: &SavState, _: &StepReport| {
                    *captured.borrow_mut() = Some((b.clone(), a.clone()));
                })];
            run(&setup, &params, &mut observers).unwrap();
        }
        let (before, after) = captured.into_inner().unwrap();
        let weights = params.alpha1.weights(setup.mesh.n_triangles());
        let f = setup.body_force.clone().unwrap();
        let clean = energy_identity_check(
            &after.u_curr,
            &before.u_curr,
            &before.u_prev,
            &after.s_curr,
            Some(&*f),
            after.time,
            params.nu,
            &weights,
            params.alpha2,
            params.dt,
        );
        assert!(clean.relative_residual() <= 1e-9, "{}", clean.relative_residual());
        let mut perturbed = after.u_curr.clone();
        perturbed.coeffs_mut()[3] += 1e-3;
        let broken = energy_identity_check(
            &perturbed,
            &before.u_curr,
            &before.u_prev,
            &after.s_curr,
            Some(&*f),
            after.time,
            params.nu,
            &weights,
            params.alpha2,
            params.dt,
        );
        assert!(
            broken.relative_residual() > 1e-6,
            "perturbation went unnoticed: {}",
            broken.relative_residual()
        );
    }

    #[test]
    fn sav_bound_on_constant_curl() {
        let mesh = Arc::new(build_unit_square(4).unwrap());
        let p2 = FeSpace::new(Arc::clone(&mesh), 2).unwrap();
        let p1 = FeSpace::new(mesh, 1).unwrap();
        let u = FeFunction::interpolate_vector(&p2, |x, y| (-y, x));
        let s = crate::spaces::l2_project_curl(&u, &p1).unwrap();
        let slack = sav_bound_check(&s, &u);
        assert!(slack.abs() < 1e-10, "constant curl projects exactly: {slack}");
        let zero = FeFunction::zeros(&p2, 2);
        let sz = crate::spaces::l2_project_curl(&zero, &p1).unwrap();
        assert_eq!(sav_bound_check(&sz, &zero), 0.0);
    }

    #[test]
    fn drag_constant_pressure_closed_curve() {
        let mesh = Arc::new(build_channel_cylinder(0.05).unwrap());
        let p2 = FeSpace::new(Arc::clone(&mesh), 2).unwrap();
        let p1 = FeSpace::new(Arc::clone(&mesh), 1).unwrap();
        let u = FeFunction::zeros(&p2, 2);
        let p_const = FeFunction::interpolate_scalar(&p1, |_, _| 1.0);
        let (cd, cl) = drag_lift(&u, &p_const, &mesh, 1e-3).unwrap();
        // closed polygon: integral of the normal vanishes
        assert!(cd.abs() < 1e-12, "cd = {cd}");
        assert!(cl.abs() < 1e-12, "cl = {cl}");
    }

    #[test]
    fn drag_linear_pressure_divergence_theorem() {
        let mesh = Arc::new(build_channel_cylinder(0.03).unwrap());
        let p2 = FeSpace::new(Arc::clone(&mesh), 2).unwrap();
        let p1 = FeSpace::new(Arc::clone(&mesh), 1).unwrap();
        let u = FeFunction::zeros(&p2, 2);
        let p_lin = FeFunction::interpolate_scalar(&p1, |x, _| x);
        let (cd, _) = drag_lift(&u, &p_lin, &mesh, 1e-3).unwrap();
        // c_d = -20 * int x n_x ds = -20 * pi r^2 for the disk-outward
        // normal, up to the polygonal approximation of the circle
        let want = -20.0 * std::f64::consts::PI * 0.05 * 0.05;
        assert!(
            (cd - want).abs() < 2e-3 * want.abs().max(1.0),
            "cd = {cd}, want {want}"
        );
    }

    #[test]
    fn drag_requires_obstacle_marker() {
        let mesh = Arc::new(build_unit_square(2).unwrap());
        let p2 = FeSpace::new(Arc::clone(&mesh), 2).unwrap();
        let p1 = FeSpace::new(Arc::clone(&mesh), 1).unwrap();
        let u = FeFunction::zeros(&p2, 2);
        let p = FeFunction::zeros(&p1, 1);
        assert!(matches!(
            drag_lift(&u, &p, &mesh, 1.0),
            Err(DiagnosticsError::MissingMarker(4))
        ));
    }

    #[test]
    fn pressure_drop_analytic() {
        let mesh = Arc::new(build_channel_cylinder(0.05).unwrap());
        let p1 = FeSpace::new(Arc::clone(&mesh), 1).unwrap();
        let pc = FeFunction::interpolate_scalar(&p1, |_, _| 3.25);
        assert!(pressure_drop(&pc).unwrap().abs() < 1e-13);
        let px = FeFunction::interpolate_scalar(&p1, |x, _| x);
        assert!((pressure_drop(&px).unwrap() + 0.1).abs() < 1e-12);
    }

    #[test]
    fn error_norm_zero_for_exact_match() {
        let recs = vec![
            DiagnosticsRecord {
                error_l2: Some(0.0),
                error_h1: Some(0.0),
                ..Default::default()
            };
            3
        ];
        assert_eq!(error_norms(&recs, 0.1, ErrorNormMode::L2InTimeOfL2), 0.0);
    }

    #[test]
    fn stability_ledger_zero_run() {
        let mesh = Arc::new(build_unit_square(2).unwrap());
        let setup = crate::solver::ProblemSetup::new(
            mesh,
            vec![DirichletBc::zero(vec![1])],
            None,
            Arc::new(|_, _| (0.0, 0.0)),
        )
        .unwrap();
        let params = SavParameters {
            nu: 1.0,
            alpha1: Alpha1::Uniform(0.25),
            alpha2: 1.0,
            dt: 0.1,
            t_end: 0.3,
            sav_enabled: true,
            convection_enabled: true,
            linear_solver: LinearSolver::default(),
        };
        let (records, (lhs, rhs), _) = run_with_diagnostics(&setup, &params, None).unwrap();
        assert_eq!(records.len(), 3);
        assert_eq!(lhs, 0.0);
        assert_eq!(rhs, 0.0);
        for r in &records {
            assert_eq!(r.kinetic_energy, 0.0);
            assert_eq!(r.energy_identity_residual, Some(0.0));
        }
    }
}
