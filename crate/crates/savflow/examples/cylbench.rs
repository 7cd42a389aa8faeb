use savflow::mesh::build_channel_cylinder;
use savflow::cli::cylinder_inflow;
use savflow::solver::*;
use savflow::spaces::DirichletBc;
use std::sync::Arc;
use std::time::Instant;

fn main() {
    let mesh = Arc::new(build_channel_cylinder(0.026).unwrap());
    let setup = ProblemSetup::new(
        mesh.clone(),
        vec![
            DirichletBc::new(vec![1, 2], cylinder_inflow),
            DirichletBc::zero(vec![3, 4]),
        ],
        None,
        Arc::new(|_, _| (0.0, 0.0)),
    )
    .unwrap();
    let h = mesh.nominal_h();
    let params = SavParameters {
        nu: 1e-3,
        alpha1: Alpha1::Uniform(h * h),
        alpha2: 0.001,
        dt: 0.01,
        t_end: 8.0,
        sav_enabled: true,
        convection_enabled: true,
        linear_solver: LinearSolver::DirectLu,
    };
    println!("dofs = {}", setup.taylor_hood_dofs());
    let mut stepper = Stepper::new(&setup, &params).unwrap();
    let mut state = initialize(&setup, &params).unwrap();
    for k in 0..5 {
        let t0 = Instant::now();
        let (next, rep) = stepper.step(&state).unwrap();
        println!(
            "step {k}: {:?} resid {:.1e} div_inf {:.1e}",
            t0.elapsed(),
            rep.linear_residual,
            rep.div_inf
        );
        state = next;
    }
}
