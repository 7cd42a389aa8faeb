use savflow::linalg::{FillOrdering, LuFactorization};
use savflow::mesh::build_unit_square;
use savflow::solver::*;
use savflow::spaces::*;
use std::sync::Arc;
use std::time::Instant;

fn main() {
    let n = 16usize;
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
    // build one monolithic matrix by stepping once with instrumentation:
    // reuse stepper internals indirectly: assemble the same system via a step
    // then factor the matrix with different orderings. Simplest: grab the
    // monolithic system through a tiny replication here.
    let vel = &setup.velocity;
    let mass = vector_block_diag(&assemble_mass(vel));
    let stiff = vector_block_diag(&assemble_stiffness(vel));
    let dd = assemble_divdiv(vel);
    let cc = assemble_curlcurl(vel);
    let b = assemble_pressure_div(vel, &setup.pressure).unwrap();
    let bt = b.transpose();
    let mean = pressure_mean_vector(&setup.pressure);
    let np = setup.pressure.n_dofs();
    let mean_col = savflow::linalg::SparseMatrix::from_column(np, &mean);
    let mean_row = mean_col.transpose();
    let beta = FeFunction::zeros(vel, 2);
    let conv = assemble_convection(&beta, vel).unwrap();
    let a_vel = savflow::linalg::SparseMatrix::linear_combination(&[
        (150.0, &mass),
        (1.0, &stiff),
        (0.01, &cc),
        (1.0, &dd),
        (1.0, &conv),
    ])
    .unwrap();
    let nu2 = vel.n_dofs() * 2;
    let mut sys = savflow::linalg::BlockSystem::new(vec![nu2, np, 1], vec![nu2, np, 1]);
    sys.set_block(0, 0, &a_vel);
    sys.set_block_scaled(0, 1, -1.0, &bt);
    sys.set_block(1, 0, &b);
    sys.set_block(1, 2, &mean_col);
    sys.set_block(2, 1, &mean_row);
    let (mut m, mut rhs) = sys.assemble().unwrap();
    let con = velocity_dirichlet_values(vel, &setup.bcs, 0.01).unwrap();
    apply_dirichlet(&mut m, &mut rhs, &con);
    println!("matrix: {} dofs, nnz {}", m.n_rows(), m.nnz());

    let t0 = Instant::now();
    let md = FillOrdering::min_degree(&m);
    println!("md ordering: {:?}", t0.elapsed());
    let t0 = Instant::now();
    let lu = LuFactorization::factor_with(&m, &md).unwrap();
    let (l, u) = lu.fill();
    println!("md factor: {:?}, fill l+u = {}, off-pivots = {}/{}", t0.elapsed(), l + u, lu.off_structure_pivots(), m.n_rows());

    // velocity block alone: SPD-ish, no saddle structure
    let t0 = Instant::now();
    let md_v = FillOrdering::min_degree(&a_vel);
    let lu_v = LuFactorization::factor_with(&a_vel, &md_v).unwrap();
    let (lv, uv) = lu_v.fill();
    println!(
        "velocity-only: {:?}, n = {}, fill l+u = {} ({:.0}/row), off-pivots = {}",
        t0.elapsed(), a_vel.n_rows(), lv + uv, (lv + uv) as f64 / a_vel.n_rows() as f64,
        lu_v.off_structure_pivots()
    );
    let t0 = Instant::now();
    let nat = FillOrdering::natural(m.n_rows());
    let lu2 = LuFactorization::factor_with(&m, &nat).unwrap();
    let (l2, u2) = lu2.fill();
    println!("natural factor: {:?}, fill l+u = {}", t0.elapsed(), l2 + u2);
}
