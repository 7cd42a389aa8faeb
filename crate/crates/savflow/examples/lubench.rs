use savflow::linalg::{FillOrdering, LuFactorization};
use savflow::mesh::build_unit_square;
use savflow::solver::*;
use savflow::spaces::*;
use std::sync::Arc;
use std::time::Instant;

fn main() {
    for n in [8usize, 16, 32] {
        let mesh = Arc::new(build_unit_square(n).unwrap());
        let setup = ProblemSetup::new(
            mesh,
            vec![DirichletBc::zero(vec![1])],
            None,
            Arc::new(|_, _| (0.0, 0.0)),
        )
        .unwrap();
        let params = SavParameters {
            nu: 1.0,
            alpha1: Alpha1::Uniform(0.01),
            alpha2: 1.0,
            dt: 0.01,
            t_end: 0.01,
            sav_enabled: true,
            convection_enabled: true,
            linear_solver: LinearSolver::DirectLu,
        };
        let mut stepper = Stepper::new(&setup, &params).unwrap();
        let state = initialize(&setup, &params).unwrap();
        let t0 = Instant::now();
        let (_s1, rep) = stepper.step(&state).unwrap();
        println!(
            "n={n}: dofs={} first step {:?} (includes ordering)",
            setup.taylor_hood_dofs() + 1,
            t0.elapsed()
        );
        let t1 = Instant::now();
        let (_s2, _) = stepper.step(&_s1).unwrap();
        println!("         second step {:?} resid={:.2e}", t1.elapsed(), rep.linear_residual);
    }
}
