//! Assembly of every bilinear form in the scheme, plus Dirichlet
//! application by symmetric row/column elimination.
//!
//! Scalar forms (mass, stiffness, convection) are assembled on the scalar
//! space and expanded to vector fields as block diagonals; the forms that
//! couple components (grad-div, curl-curl, pressure-divergence, vorticity
//! coupling) are assembled directly on the stacked vector layout.
//!
//! 2D curl convention: `curl u = du2/dx - du1/dy` (a scalar).

use super::basis::BasisTable;
use super::quadrature::QuadratureRule;
use super::{DirichletBc, ElementMap, FeFunction, FeSpace, SpaceError};
use crate::linalg::{CooBuilder, SparseMatrix};

/// Sign and gradient component giving `curl` of a basis function in
/// component `c`: curl (phi, 0) = -dphi/dy, curl (0, phi) = +dphi/dx.
#[inline]
fn curl_of(grad: (f64, f64), comp: usize) -> f64 {
    if comp == 0 {
        -grad.1
    } else {
        grad.0
    }
}

fn default_rule() -> QuadratureRule {
    let rule = QuadratureRule::degree5();
    debug_assert!(rule.verify().is_ok());
    rule
}

/// Scalar mass matrix `(phi_j, phi_i)`.
pub fn assemble_mass(space: &FeSpace) -> SparseMatrix {
    let rule = default_rule();
    let table = BasisTable::tabulate(space.degree(), &rule.points).expect("degree validated");
    let n = space.n_dofs();
    let nl = space.n_local();
    let mesh = space.mesh();
    let mut coo = CooBuilder::with_capacity(n, n, nl * nl * mesh.n_triangles());
    for t in 0..mesh.n_triangles() {
        let em = ElementMap::new(mesh, t);
        let dofs = space.element_dofs(t);
        let mut local = [[0.0f64; 6]; 6];
        for (q, w) in rule.weights.iter().enumerate() {
            let wq = w * em.det;
            let vals = &table.values[q];
            for a in 0..nl {
                for b in 0..nl {
                    local[a][b] += wq * vals[a] * vals[b];
                }
            }
        }
        for a in 0..nl {
            for b in 0..nl {
                coo.push(dofs[a], dofs[b], local[a][b]);
            }
        }
    }
    coo.finalize()
}

/// Scalar stiffness matrix `(grad phi_j, grad phi_i)`.
pub fn assemble_stiffness(space: &FeSpace) -> SparseMatrix {
    let rule = default_rule();
    let table = BasisTable::tabulate(space.degree(), &rule.points).expect("degree validated");
    let n = space.n_dofs();
    let nl = space.n_local();
    let mesh = space.mesh();
    let mut coo = CooBuilder::with_capacity(n, n, nl * nl * mesh.n_triangles());
    let mut grads = [(0.0f64, 0.0f64); 6];
    for t in 0..mesh.n_triangles() {
        let em = ElementMap::new(mesh, t);
        let dofs = space.element_dofs(t);
        let mut local = [[0.0f64; 6]; 6];
        for (q, w) in rule.weights.iter().enumerate() {
            let wq = w * em.det;
            for a in 0..nl {
                grads[a] = em.grad(table.grads[q][a]);
            }
            for a in 0..nl {
                for b in 0..nl {
                    local[a][b] += wq * (grads[a].0 * grads[b].0 + grads[a].1 * grads[b].1);
                }
            }
        }
        for a in 0..nl {
            for b in 0..nl {
                coo.push(dofs[a], dofs[b], local[a][b]);
            }
        }
    }
    coo.finalize()
}

/// Expands a scalar operator to the stacked two-component layout,
/// `[M 0; 0 M]`.
pub fn vector_block_diag(m: &SparseMatrix) -> SparseMatrix {
    let n = m.n_rows();
    debug_assert_eq!(n, m.n_cols());
    let mut coo = CooBuilder::with_capacity(2 * n, 2 * n, 2 * m.nnz());
    for r in 0..n {
        for (c, v) in m.row(r) {
            coo.push(r, c, v);
            coo.push(n + r, n + c, v);
        }
    }
    coo.finalize()
}

/// Grad-div operator `(div u, div v)` on the vector space.
pub fn assemble_divdiv(space: &FeSpace) -> SparseMatrix {
    assemble_cross_component(space, None, |grad_a, ca, grad_b, cb| {
        let div_a = if ca == 0 { grad_a.0 } else { grad_a.1 };
        let div_b = if cb == 0 { grad_b.0 } else { grad_b.1 };
        div_a * div_b
    })
}

/// Curl-curl operator `(curl u, curl v)` on the vector space.
pub fn assemble_curlcurl(space: &FeSpace) -> SparseMatrix {
    assemble_cross_component(space, None, |grad_a, ca, grad_b, cb| {
        curl_of(grad_a, ca) * curl_of(grad_b, cb)
    })
}

/// Curl-curl with a per-element weight (element-wise artificial viscosity).
pub fn assemble_curlcurl_weighted(space: &FeSpace, weights: &[f64]) -> SparseMatrix {
    assemble_cross_component(space, Some(weights), |grad_a, ca, grad_b, cb| {
        curl_of(grad_a, ca) * curl_of(grad_b, cb)
    })
}

fn assemble_cross_component(
    space: &FeSpace,
    elem_weights: Option<&[f64]>,
    term: impl Fn((f64, f64), usize, (f64, f64), usize) -> f64,
) -> SparseMatrix {
    let rule = default_rule();
    let table = BasisTable::tabulate(space.degree(), &rule.points).expect("degree validated");
    let n = space.n_dofs();
    let nl = space.n_local();
    let mesh = space.mesh();
    let mut coo = CooBuilder::with_capacity(2 * n, 2 * n, 4 * nl * nl * mesh.n_triangles());
    let mut grads = [(0.0f64, 0.0f64); 6];
    for t in 0..mesh.n_triangles() {
        let em = ElementMap::new(mesh, t);
        let dofs = space.element_dofs(t);
        let wk = elem_weights.map_or(1.0, |w| w[t]);
        let mut local = [[0.0f64; 12]; 12];
        for (q, w) in rule.weights.iter().enumerate() {
            let wq = w * em.det * wk;
            for a in 0..nl {
                grads[a] = em.grad(table.grads[q][a]);
            }
            for ca in 0..2 {
                for a in 0..nl {
                    for cb in 0..2 {
                        for b in 0..nl {
                            local[ca * nl + a][cb * nl + b] +=
                                wq * term(grads[a], ca, grads[b], cb);
                        }
                    }
                }
            }
        }
        for ca in 0..2 {
            for a in 0..nl {
                for cb in 0..2 {
                    for b in 0..nl {
                        coo.push(
                            ca * n + dofs[a],
                            cb * n + dofs[b],
                            local[ca * nl + a][cb * nl + b],
                        );
                    }
                }
            }
        }
    }
    coo.finalize()
}

/// Pressure-divergence coupling `B[q, v] = (div v, q)`, shape
/// `n_pressure x 2 n_velocity`. The momentum block uses `-B^T`.
pub fn assemble_pressure_div(
    velocity: &FeSpace,
    pressure: &FeSpace,
) -> Result<SparseMatrix, SpaceError> {
    if !velocity.same_mesh(pressure) {
        return Err(SpaceError::MeshMismatch);
    }
    let rule = default_rule();
    let vtab = BasisTable::tabulate(velocity.degree(), &rule.points)?;
    let ptab = BasisTable::tabulate(pressure.degree(), &rule.points)?;
    let nu = velocity.n_dofs();
    let np = pressure.n_dofs();
    let nlv = velocity.n_local();
    let nlp = pressure.n_local();
    let mesh = velocity.mesh();
    let mut coo = CooBuilder::with_capacity(np, 2 * nu, 2 * nlv * nlp * mesh.n_triangles());
    let mut grads = [(0.0f64, 0.0f64); 6];
    for t in 0..mesh.n_triangles() {
        let em = ElementMap::new(mesh, t);
        let vdofs = velocity.element_dofs(t);
        let pdofs = pressure.element_dofs(t);
        let mut local = [[0.0f64; 12]; 6];
        for (q, w) in rule.weights.iter().enumerate() {
            let wq = w * em.det;
            for a in 0..nlv {
                grads[a] = em.grad(vtab.grads[q][a]);
            }
            let pvals = &ptab.values[q];
            for (p, &pv) in pvals.iter().enumerate().take(nlp) {
                for b in 0..nlv {
                    local[p][b] += wq * pv * grads[b].0;
                    local[p][nlv + b] += wq * pv * grads[b].1;
                }
            }
        }
        for p in 0..nlp {
            for b in 0..nlv {
                coo.push(pdofs[p], vdofs[b], local[p][b]);
                coo.push(pdofs[p], nu + vdofs[b], local[p][nlv + b]);
            }
        }
    }
    Ok(coo.finalize())
}

/// Vorticity coupling `C[l, v] = (l, curl v)`, shape
/// `n_coarse x 2 n_velocity`; the transpose feeds the subgrid term to the
/// momentum right-hand side.
pub fn assemble_curl_coupling(
    velocity: &FeSpace,
    coarse: &FeSpace,
) -> Result<SparseMatrix, SpaceError> {
    assemble_curl_coupling_impl(velocity, coarse, None)
}

/// Vorticity coupling with a per-element weight.
pub fn assemble_curl_coupling_weighted(
    velocity: &FeSpace,
    coarse: &FeSpace,
    weights: &[f64],
) -> Result<SparseMatrix, SpaceError> {
    assemble_curl_coupling_impl(velocity, coarse, Some(weights))
}

fn assemble_curl_coupling_impl(
    velocity: &FeSpace,
    coarse: &FeSpace,
    elem_weights: Option<&[f64]>,
) -> Result<SparseMatrix, SpaceError> {
    if !velocity.same_mesh(coarse) {
        return Err(SpaceError::MeshMismatch);
    }
    let rule = default_rule();
    let vtab = BasisTable::tabulate(velocity.degree(), &rule.points)?;
    let ltab = BasisTable::tabulate(coarse.degree(), &rule.points)?;
    let nu = velocity.n_dofs();
    let nl_coarse = coarse.n_local();
    let nlv = velocity.n_local();
    let mesh = velocity.mesh();
    let mut coo = CooBuilder::with_capacity(
        coarse.n_dofs(),
        2 * nu,
        2 * nlv * nl_coarse * mesh.n_triangles(),
    );
    let mut grads = [(0.0f64, 0.0f64); 6];
    for t in 0..mesh.n_triangles() {
        let em = ElementMap::new(mesh, t);
        let vdofs = velocity.element_dofs(t);
        let ldofs = coarse.element_dofs(t);
        let wk = elem_weights.map_or(1.0, |w| w[t]);
        let mut local = [[0.0f64; 12]; 6];
        for (q, w) in rule.weights.iter().enumerate() {
            let wq = w * em.det * wk;
            for b in 0..nlv {
                grads[b] = em.grad(vtab.grads[q][b]);
            }
            let lvals = &ltab.values[q];
            for (l, &lv) in lvals.iter().enumerate().take(nl_coarse) {
                for b in 0..nlv {
                    local[l][b] += wq * lv * curl_of(grads[b], 0);
                    local[l][nlv + b] += wq * lv * curl_of(grads[b], 1);
                }
            }
        }
        for l in 0..nl_coarse {
            for b in 0..nlv {
                coo.push(ldofs[l], vdofs[b], local[l][b]);
                coo.push(ldofs[l], nu + vdofs[b], local[l][nlv + b]);
            }
        }
    }
    Ok(coo.finalize())
}

/// Skew-symmetric convection `N(beta)` on the vector space:
/// `N[v_i, v_j] = 1/2 ((beta . grad phi_j, phi_i) - (beta . grad phi_i, phi_j))`.
/// The quadratic form `v^T N v` vanishes identically.
pub fn assemble_convection(
    beta: &FeFunction,
    space: &FeSpace,
) -> Result<SparseMatrix, SpaceError> {
    if beta.components() != 2 {
        return Err(SpaceError::ComponentMismatch {
            expected: 2,
            found: beta.components(),
        });
    }
    if !beta.space().same_mesh(space) {
        return Err(SpaceError::MeshMismatch);
    }
    let rule = default_rule();
    let table = BasisTable::tabulate(space.degree(), &rule.points)?;
    let btab = BasisTable::tabulate(beta.space().degree(), &rule.points)?;
    let n = space.n_dofs();
    let nl = space.n_local();
    let nb = beta.space().n_local();
    let nbeta = beta.space().n_dofs();
    let mesh = space.mesh();
    let mut coo = CooBuilder::with_capacity(n, n, nl * nl * mesh.n_triangles());
    let mut grads = [(0.0f64, 0.0f64); 6];
    for t in 0..mesh.n_triangles() {
        let em = ElementMap::new(mesh, t);
        let dofs = space.element_dofs(t);
        let bdofs = beta.space().element_dofs(t);
        let mut local = [[0.0f64; 6]; 6];
        for (q, w) in rule.weights.iter().enumerate() {
            let wq = w * em.det;
            let vals = &table.values[q];
            for a in 0..nl {
                grads[a] = em.grad(table.grads[q][a]);
            }
            let mut bx = 0.0;
            let mut by = 0.0;
            for (k, &bd) in bdofs.iter().enumerate().take(nb) {
                bx += beta.coeffs()[bd] * btab.values[q][k];
                by += beta.coeffs()[nbeta + bd] * btab.values[q][k];
            }
            for a in 0..nl {
                let adv_a = bx * grads[a].0 + by * grads[a].1;
                for b in 0..nl {
                    let adv_b = bx * grads[b].0 + by * grads[b].1;
                    local[a][b] += 0.5 * wq * (adv_b * vals[a] - adv_a * vals[b]);
                }
            }
        }
        for a in 0..nl {
            for b in 0..nl {
                coo.push(dofs[a], dofs[b], local[a][b]);
            }
        }
    }
    Ok(vector_block_diag(&coo.finalize()))
}

/// Load vector `(f(t), v)` on the vector space.
pub fn assemble_load(space: &FeSpace, f: impl Fn(f64, f64) -> (f64, f64)) -> Vec<f64> {
    let rule = default_rule();
    let table = BasisTable::tabulate(space.degree(), &rule.points).expect("degree validated");
    let n = space.n_dofs();
    let nl = space.n_local();
    let mesh = space.mesh();
    let mut load = vec![0.0; 2 * n];
    for t in 0..mesh.n_triangles() {
        let em = ElementMap::new(mesh, t);
        let dofs = space.element_dofs(t);
        for (q, w) in rule.weights.iter().enumerate() {
            let wq = w * em.det;
            let (x, y) = em.point(rule.points[q]);
            let (fx, fy) = f(x, y);
            let vals = &table.values[q];
            for a in 0..nl {
                load[dofs[a]] += wq * fx * vals[a];
                load[n + dofs[a]] += wq * fy * vals[a];
            }
        }
    }
    load
}

/// Integral of each pressure basis function; couples the zero-mean
/// constraint multiplier.
pub fn pressure_mean_vector(pressure: &FeSpace) -> Vec<f64> {
    let rule = default_rule();
    let table = BasisTable::tabulate(pressure.degree(), &rule.points).expect("degree validated");
    let mesh = pressure.mesh();
    let mut m = vec![0.0; pressure.n_dofs()];
    for t in 0..mesh.n_triangles() {
        let em = ElementMap::new(mesh, t);
        let dofs = pressure.element_dofs(t);
        for (q, w) in rule.weights.iter().enumerate() {
            let wq = w * em.det;
            for (a, &d) in dofs.iter().enumerate() {
                m[d] += wq * table.values[q][a];
            }
        }
    }
    m
}

/// Constrained vector-velocity dofs with their prescribed values, in
/// ascending dof order.
#[derive(Debug, Clone)]
pub struct ConstrainedDofs {
    pub dofs: Vec<usize>,
    pub values: Vec<f64>,
}

/// Samples the Dirichlet data at time `t` on every constrained dof of the
/// stacked velocity layout.
pub fn velocity_dirichlet_values(
    space: &FeSpace,
    bcs: &[DirichletBc],
    t: f64,
) -> Result<ConstrainedDofs, SpaceError> {
    let n = space.n_dofs();
    let mut set = vec![false; 2 * n];
    let mut val = vec![0.0; 2 * n];
    for bc in bcs {
        let scalar_dofs = space.boundary_dofs(&bc.markers)?;
        for &d in &scalar_dofs {
            let (x, y) = space.dof_coords()[d];
            let (vx, vy) = (bc.value)(x, y, t);
            set[d] = true;
            val[d] = vx;
            set[n + d] = true;
            val[n + d] = vy;
        }
    }
    let dofs: Vec<usize> = (0..2 * n).filter(|&d| set[d]).collect();
    let values: Vec<f64> = dofs.iter().map(|&d| val[d]).collect();
    Ok(ConstrainedDofs { dofs, values })
}

/// Symmetric elimination of Dirichlet dofs on an assembled system: the
/// constrained rows become identity rows with the prescribed value, and the
/// matching columns are folded into the right-hand side.
pub fn apply_dirichlet(matrix: &mut SparseMatrix, rhs: &mut [f64], constrained: &ConstrainedDofs) {
    let n = matrix.n_rows();
    debug_assert_eq!(rhs.len(), n);
    let mut is_con = vec![false; n];
    let mut val = vec![0.0; n];
    for (&d, &v) in constrained.dofs.iter().zip(&constrained.values) {
        is_con[d] = true;
        val[d] = v;
    }
    let offsets = matrix.row_offsets().to_vec();
    let cols = matrix.col_indices().to_vec();
    let values = matrix.values_mut();
    for r in 0..n {
        if is_con[r] {
            for k in offsets[r]..offsets[r + 1] {
                values[k] = if cols[k] == r { 1.0 } else { 0.0 };
            }
            rhs[r] = val[r];
        } else {
            for k in offsets[r]..offsets[r + 1] {
                let c = cols[k];
                if is_con[c] {
                    rhs[r] -= values[k] * val[c];
                    values[k] = 0.0;
                }
            }
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::mesh::{build_unit_square, Mesh};
    use std::sync::Arc;

    fn single_triangle() -> Arc<Mesh> {
        Arc::new(
            Mesh::new(
                vec![(0.0, 0.0), (1.0, 0.0), (0.0, 1.0)],
                vec![[0, 1, 2]],
                vec![(0, 1, 1), (1, 2, 1), (2, 0, 1)],
            )
            .unwrap(),
        )
    }

    fn p_space(mesh: &Arc<Mesh>, degree: u8) -> Arc<FeSpace> {
        FeSpace::new(Arc::clone(mesh), degree).unwrap()
    }

    #[test]
    fn p1_mass_single_triangle_exact() {
        let mesh = single_triangle();
        let p1 = p_space(&mesh, 1);
        let m = assemble_mass(&p1).to_dense();
        // (A/12) [[2,1,1],[1,2,1],[1,1,2]] with A = 1/2
        for i in 0..3 {
            for j in 0..3 {
                let want = if i == j { 2.0 } else { 1.0 } / 24.0;
                assert!((m[i][j] - want).abs() < 1e-15, "({i},{j})");
            }
        }
    }

    #[test]
    fn p1_stiffness_single_triangle_exact() {
        let mesh = single_triangle();
        let p1 = p_space(&mesh, 1);
        let k = assemble_stiffness(&p1).to_dense();
        let want = [
            [1.0, -0.5, -0.5],
            [-0.5, 0.5, 0.0],
            [-0.5, 0.0, 0.5],
        ];
        for i in 0..3 {
            for j in 0..3 {
                assert!((k[i][j] - want[i][j]).abs() < 1e-15, "({i},{j})");
            }
        }
    }

    #[test]
    fn mass_entries_sum_to_area() {
        let mesh = Arc::new(build_unit_square(3).unwrap());
        let p2 = p_space(&mesh, 2);
        let m = assemble_mass(&p2);
        let total: f64 = m.values().iter().sum();
        assert!((total - 1.0).abs() < 1e-13);
    }

    #[test]
    fn divdiv_on_rotation_and_stretch() {
        let mesh = Arc::new(build_unit_square(4).unwrap());
        let p2 = p_space(&mesh, 2);
        let d = assemble_divdiv(&p2);
        let rot = FeFunction::interpolate_vector(&p2, |x, y| (-y, x));
        let q_rot = quadratic_form(&d, rot.coeffs());
        assert!(q_rot.abs() < 1e-13, "rigid rotation is divergence-free");
        let stretch = FeFunction::interpolate_vector(&p2, |x, y| (x, y));
        let q_str = quadratic_form(&d, stretch.coeffs());
        assert!((q_str - 4.0).abs() < 1e-12, "int (div (x,y))^2 = 4 area");
        // symmetry
        let dt = d.transpose();
        for (a, b) in d.values().iter().zip(dt.values()) {
            assert!((a - b).abs() < 1e-15);
        }
    }

    #[test]
    fn curlcurl_on_gradient_and_rotation() {
        let mesh = Arc::new(build_unit_square(4).unwrap());
        let p2 = p_space(&mesh, 2);
        let c = assemble_curlcurl(&p2);
        let grad_field = FeFunction::interpolate_vector(&p2, |x, y| (x, y));
        assert!(quadratic_form(&c, grad_field.coeffs()).abs() < 1e-13);
        let rot = FeFunction::interpolate_vector(&p2, |x, y| (-y, x));
        let q = quadratic_form(&c, rot.coeffs());
        assert!((q - 4.0).abs() < 1e-12, "curl (-y,x) = 2, int 4 = 4 area");
    }

    #[test]
    fn curlcurl_plus_divdiv_equals_stiffness_on_zero_boundary_fields() {
        // for any FE vector field vanishing on the boundary,
        // |grad u|^2 = |curl u|^2 + |div u|^2 integrated (null Lagrangian)
        let mesh = Arc::new(build_unit_square(3).unwrap());
        let p2 = p_space(&mesh, 2);
        let k = vector_block_diag(&assemble_stiffness(&p2));
        let c = assemble_curlcurl(&p2);
        let d = assemble_divdiv(&p2);
        let boundary = p2.boundary_dofs(&[1]).unwrap();
        let n = p2.n_dofs();
        let mut state = 0x1234_5678_9abc_def0u64;
        let mut rng = move || {
            state ^= state << 13;
            state ^= state >> 7;
            state ^= state << 17;
            (state >> 11) as f64 / (1u64 << 53) as f64 - 0.5
        };
        for _ in 0..3 {
            let mut v = vec![0.0; 2 * n];
            for x in v.iter_mut() {
                *x = rng();
            }
            for &b in &boundary {
                v[b] = 0.0;
                v[n + b] = 0.0;
            }
            let qk = quadratic_form(&k, &v);
            let qc = quadratic_form(&c, &v);
            let qd = quadratic_form(&d, &v);
            assert!(
                (qk - qc - qd).abs() <= 1e-12 * qk.abs().max(1.0),
                "qk={qk}, qc+qd={}",
                qc + qd
            );
        }
    }

    #[test]
    fn pressure_div_against_analytic() {
        let mesh = Arc::new(build_unit_square(4).unwrap());
        let p2 = p_space(&mesh, 2);
        let p1 = p_space(&mesh, 1);
        let b = assemble_pressure_div(&p2, &p1).unwrap();
        // u = (x, 0), q = 1: (div u, q) = area = 1
        let u = FeFunction::interpolate_vector(&p2, |x, _| (x, 0.0));
        let bu = b.spmv(u.coeffs()).unwrap();
        let total: f64 = bu.iter().sum(); // pairing with q = sum of P1 hats = 1
        assert!((total - 1.0).abs() < 1e-13);
        // v vanishing on the boundary: (div v, 1) = 0 by the divergence theorem
        let boundary = p2.boundary_dofs(&[1]).unwrap();
        let mut v = FeFunction::interpolate_vector(&p2, |x, y| {
            (x * (1.0 - x) * y, y * (1.0 - y) * x)
        });
        let n = p2.n_dofs();
        for &d in &boundary {
            v.coeffs_mut()[d] = 0.0;
            v.coeffs_mut()[n + d] = 0.0;
        }
        let bv = b.spmv(v.coeffs()).unwrap();
        let flux: f64 = bv.iter().sum();
        assert!(flux.abs() < 1e-13);
    }

    #[test]
    fn convection_of_zero_field_is_zero() {
        let mesh = Arc::new(build_unit_square(2).unwrap());
        let p2 = p_space(&mesh, 2);
        let beta = FeFunction::zeros(&p2, 2);
        let n = assemble_convection(&beta, &p2).unwrap();
        assert!(n.values().iter().all(|&v| v == 0.0));
    }

    #[test]
    fn convection_skew_symmetry() {
        let mesh = Arc::new(build_unit_square(3).unwrap());
        let p2 = p_space(&mesh, 2);
        let mut state = 0xdead_beef_cafe_f00du64;
        let mut rng = move || {
            state ^= state << 13;
            state ^= state >> 7;
            state ^= state << 17;
            (state >> 11) as f64 / (1u64 << 53) as f64 - 0.5
        };
        let ndofs = p2.n_dofs();
        let mut beta = FeFunction::zeros(&p2, 2);
        for c in beta.coeffs_mut() {
            *c = rng();
        }
        let nmat = assemble_convection(&beta, &p2).unwrap();
        for _ in 0..4 {
            let v: Vec<f64> = (0..2 * ndofs).map(|_| rng()).collect();
            let w: Vec<f64> = (0..2 * ndofs).map(|_| rng()).collect();
            let vv = quadratic_form(&nmat, &v);
            let scale: f64 = v.iter().map(|x| x * x).sum::<f64>();
            assert!(vv.abs() <= 1e-12 * scale.max(1.0), "b(beta,v,v) = 0");
            // b(beta, v, w) = -b(beta, w, v)
            let nv = nmat.spmv(&v).unwrap();
            let nw = nmat.spmv(&w).unwrap();
            let wnv: f64 = w.iter().zip(&nv).map(|(a, b)| a * b).sum();
            let vnw: f64 = v.iter().zip(&nw).map(|(a, b)| a * b).sum();
            assert!((wnv + vnw).abs() <= 1e-12 * (wnv.abs().max(1.0)));
        }
    }

    #[test]
    fn curl_coupling_against_analytic() {
        let mesh = Arc::new(build_unit_square(4).unwrap());
        let p2 = p_space(&mesh, 2);
        let p1 = p_space(&mesh, 1);
        let c = assemble_curl_coupling(&p2, &p1).unwrap();
        // gradient field has zero curl
        let gf = FeFunction::interpolate_vector(&p2, |x, y| (x, y));
        let cg = c.spmv(gf.coeffs()).unwrap();
        assert!(cg.iter().all(|v| v.abs() < 1e-13));
        // (1, curl(-y, x)) = 2 * area
        let rot = FeFunction::interpolate_vector(&p2, |x, y| (-y, x));
        let cr = c.spmv(rot.coeffs()).unwrap();
        let total: f64 = cr.iter().sum();
        assert!((total - 2.0).abs() < 1e-13);
    }

    #[test]
    fn dirichlet_zero_bc_zeroes_boundary() {
        let mesh = Arc::new(build_unit_square(3).unwrap());
        let p2 = p_space(&mesh, 2);
        let k = vector_block_diag(&assemble_stiffness(&p2));
        let m = vector_block_diag(&assemble_mass(&p2));
        let mut a = SparseMatrix::linear_combination(&[(1.0, &k), (1.0, &m)]).unwrap();
        let mut rhs = assemble_load(&p2, |_, _| (1.0, 0.5));
        let bc = DirichletBc::zero(vec![1]);
        let con = velocity_dirichlet_values(&p2, &[bc], 0.0).unwrap();
        apply_dirichlet(&mut a, &mut rhs, &con);
        let x = crate::linalg::solve_sparse_lu(&a, &rhs).unwrap();
        for &d in &con.dofs {
            assert_eq!(x[d], 0.0);
        }
    }

    #[test]
    fn dirichlet_profile_value_matches_printed_formula() {
        // inflow profile at t=4, y=0.205: (6/0.41^2) sin(pi/2) * 0.205 * 0.205 = 1.5
        let profile =
            |_x: f64, y: f64, t: f64| -> (f64, f64) {
                (
                    6.0 / (0.41f64 * 0.41) * (std::f64::consts::PI * t / 8.0).sin() * y
                        * (0.41 - y),
                    0.0,
                )
            };
        let (vx, _) = profile(0.0, 0.205, 4.0);
        assert!((vx - 1.5).abs() < 1e-12);
    }

    fn quadratic_form(a: &SparseMatrix, v: &[f64]) -> f64 {
        let av = a.spmv(v).unwrap();
        v.iter().zip(&av).map(|(x, y)| x * y).sum()
    }
}
