//! Numerical inf-sup (LBB) constant of a velocity/pressure pair.
//!
//! beta^2 is the smallest nonzero eigenvalue of the generalized problem
//! `B K^{-1} B^T q = lambda M_p q`, where K is the vector stiffness on the
//! zero-boundary velocity space, B the pressure-divergence coupling and
//! M_p the pressure mass. The constant-pressure mode contributes the zero
//! eigenvalue and is excluded. Dense path only; errors out on fine meshes.

use super::{assemble_mass, assemble_pressure_div, assemble_stiffness, FeSpace, SpaceError};

const DENSE_LIMIT: usize = 3000;

pub fn infsup_constant(velocity: &FeSpace, pressure: &FeSpace) -> Result<f64, SpaceError> {
    if !velocity.same_mesh(pressure) {
        return Err(SpaceError::MeshMismatch);
    }
    let nu = velocity.n_dofs();
    if nu > DENSE_LIMIT {
        return Err(SpaceError::TooLargeForDense {
            dofs: nu,
            limit: DENSE_LIMIT,
        });
    }
    let markers = velocity.mesh().markers();
    let boundary = velocity.boundary_dofs(&markers)?;
    let mut interior: Vec<usize> = Vec::with_capacity(nu);
    {
        let mut is_bnd = vec![false; nu];
        for &b in &boundary {
            is_bnd[b] = true;
        }
        for d in 0..nu {
            if !is_bnd[d] {
                interior.push(d);
            }
        }
    }
    let ni = interior.len();
    let np = pressure.n_dofs();

    // dense interior scalar stiffness (the vector operator is block diagonal)
    let k_sparse = assemble_stiffness(velocity);
    let mut pos = vec![usize::MAX; nu];
    for (i, &d) in interior.iter().enumerate() {
        pos[d] = i;
    }
    let mut k = vec![vec![0.0; ni]; ni];
    for (i, &d) in interior.iter().enumerate() {
        for (c, v) in k_sparse.row(d) {
            if pos[c] != usize::MAX {
                k[i][pos[c]] = v;
            }
        }
    }
    let l_k = cholesky(&k).ok_or(SpaceError::Linalg(
        crate::linalg::LinalgError::SingularPivot { index: 0 },
    ))?;

    // B restricted to interior columns, per component
    let b = assemble_pressure_div(velocity, pressure)?;
    let mut bx = vec![vec![0.0; ni]; np];
    let mut by = vec![vec![0.0; ni]; np];
    for q in 0..np {
        for (c, v) in b.row(q) {
            let (comp, dof) = if c < nu { (0, c) } else { (1, c - nu) };
            if pos[dof] != usize::MAX {
                if comp == 0 {
                    bx[q][pos[dof]] = v;
                } else {
                    by[q][pos[dof]] = v;
                }
            }
        }
    }

    // S = Bx K^{-1} Bx^T + By K^{-1} By^T
    let mut s = vec![vec![0.0; np]; np];
    for bcomp in [&bx, &by] {
        for q in 0..np {
            let z = cholesky_solve(&l_k, &bcomp[q]);
            for p in 0..np {
                let dot: f64 = bcomp[p].iter().zip(&z).map(|(a, b)| a * b).sum();
                s[p][q] += dot;
            }
        }
    }

    // generalized problem via the pressure-mass Cholesky factor
    let m_sparse = assemble_mass(pressure);
    let mut mp = vec![vec![0.0; np]; np];
    for r in 0..np {
        for (c, v) in m_sparse.row(r) {
            mp[r][c] = v;
        }
    }
    let l_m = cholesky(&mp).ok_or(SpaceError::Linalg(
        crate::linalg::LinalgError::SingularPivot { index: 0 },
    ))?;
    // T = L^{-1} S L^{-T}
    let mut t = vec![vec![0.0; np]; np];
    for q in 0..np {
        let col: Vec<f64> = (0..np).map(|p| s[p][q]).collect();
        let z = forward_solve(&l_m, &col);
        for p in 0..np {
            t[p][q] = z[p];
        }
    }
    for p in 0..np {
        let row = t[p].clone();
        let z = forward_solve(&l_m, &row);
        t[p] = z;
    }
    // symmetrize against rounding
    for p in 0..np {
        for q in 0..p {
            let avg = 0.5 * (t[p][q] + t[q][p]);
            t[p][q] = avg;
            t[q][p] = avg;
        }
    }
    let mut eigs = jacobi_eigenvalues(&mut t);
    eigs.sort_by(|a, b| a.partial_cmp(b).unwrap());
    let max = eigs.last().copied().unwrap_or(0.0).max(1e-300);
    let smallest_nonzero = eigs
        .iter()
        .copied()
        .find(|&l| l > 1e-10 * max)
        .unwrap_or(0.0);
    Ok(smallest_nonzero.max(0.0).sqrt())
}

/// Dense Cholesky `A = L L^T`; returns the lower factor or `None` if the
/// matrix is not positive definite.
fn cholesky(a: &[Vec<f64>]) -> Option<Vec<Vec<f64>>> {
    let n = a.len();
    let mut l = vec![vec![0.0; n]; n];
    for i in 0..n {
        for j in 0..=i {
            let mut sum = a[i][j];
            for k in 0..j {
                sum -= l[i][k] * l[j][k];
            }
            if i == j {
                if sum <= 0.0 {
                    return None;
                }
                l[i][j] = sum.sqrt();
            } else {
                l[i][j] = sum / l[j][j];
            }
        }
    }
    Some(l)
}

fn forward_solve(l: &[Vec<f64>], b: &[f64]) -> Vec<f64> {
    let n = l.len();
    let mut y = vec![0.0; n];
    for i in 0..n {
        let mut sum = b[i];
        for k in 0..i {
            sum -= l[i][k] * y[k];
        }
        y[i] = sum / l[i][i];
    }
    y
}

fn cholesky_solve(l: &[Vec<f64>], b: &[f64]) -> Vec<f64> {
    let n = l.len();
    let mut y = forward_solve(l, b);
    for i in (0..n).rev() {
        let mut sum = y[i];
        for k in i + 1..n {
            sum -= l[k][i] * y[k];
        }
        y[i] = sum / l[i][i];
    }
    y
}

/// Cyclic Jacobi sweeps; destroys the input and returns the eigenvalues.
fn jacobi_eigenvalues(a: &mut [Vec<f64>]) -> Vec<f64> {
    let n = a.len();
    let frob: f64 = a
        .iter()
        .flat_map(|r| r.iter())
        .map(|v| v * v)
        .sum::<f64>()
        .sqrt()
        .max(1e-300);
    for _sweep in 0..60 {
        let mut off = 0.0;
        for p in 0..n {
            for q in p + 1..n {
                off += a[p][q] * a[p][q];
            }
        }
        if off.sqrt() < 1e-13 * frob {
            break;
        }
        for p in 0..n {
            for q in p + 1..n {
                let apq = a[p][q];
                if apq.abs() < 1e-300 {
                    continue;
                }
                let theta = (a[q][q] - a[p][p]) / (2.0 * apq);
                let t = theta.signum() / (theta.abs() + (theta * theta + 1.0).sqrt());
                let c = 1.0 / (t * t + 1.0).sqrt();
                let s = t * c;
                for k in 0..n {
                    let akp = a[k][p];
                    let akq = a[k][q];
                    a[k][p] = c * akp - s * akq;
                    a[k][q] = s * akp + c * akq;
                }
                for k in 0..n {
                    let apk = a[p][k];
                    let aqk = a[q][k];
                    a[p][k] = c * apk - s * aqk;
                    a[q][k] = s * apk + c * aqk;
                }
            }
        }
    }
    (0..n).map(|i| a[i][i]).collect()
}
