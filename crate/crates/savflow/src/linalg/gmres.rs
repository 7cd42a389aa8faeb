//! Right-preconditioned GMRES. Fallback path for meshes too large for the
//! direct solver; the benchmark runs all use sparse LU.

use super::{norm2, LinalgError, SparseMatrix};

/// Application of an approximate inverse, used to precondition GMRES.
pub trait Preconditioner {
    fn apply(&self, r: &[f64]) -> Vec<f64>;
}

/// Diagonal (Jacobi) preconditioner; zero diagonal entries pass through.
pub struct JacobiPreconditioner {
    inv_diag: Vec<f64>,
}

impl JacobiPreconditioner {
    pub fn new(a: &SparseMatrix) -> Self {
        let n = a.n_rows();
        let mut inv_diag = vec![1.0; n];
        for r in 0..n {
            for (c, v) in a.row(r) {
                if c == r && v != 0.0 {
                    inv_diag[r] = 1.0 / v;
                }
            }
        }
        Self { inv_diag }
    }
}

impl Preconditioner for JacobiPreconditioner {
    fn apply(&self, r: &[f64]) -> Vec<f64> {
        r.iter().zip(&self.inv_diag).map(|(v, d)| v * d).collect()
    }
}

/// Solves `A x = b` to relative residual `tol` by restarted GMRES(200).
///
/// Returns an error carrying the final residual when `max_iter` products
/// are exhausted without convergence.
pub fn solve_gmres(
    a: &SparseMatrix,
    b: &[f64],
    tol: f64,
    max_iter: usize,
    preconditioner: Option<&dyn Preconditioner>,
) -> Result<Vec<f64>, LinalgError> {
    let n = a.n_rows();
    if a.n_cols() != n {
        return Err(LinalgError::DimensionMismatch {
            context: "gmres (square matrix required)",
            expected: n,
            found: a.n_cols(),
        });
    }
    if b.len() != n {
        return Err(LinalgError::DimensionMismatch {
            context: "gmres rhs",
            expected: n,
            found: b.len(),
        });
    }
    let b_norm = norm2(b);
    if b_norm == 0.0 {
        return Ok(vec![0.0; n]);
    }
    let restart = 200.min(max_iter.max(1));
    let mut x = vec![0.0; n];
    let mut total_iters = 0usize;
    let mut last_rel = f64::INFINITY;

    while total_iters < max_iter {
        let ax = a.spmv(&x)?;
        let r0: Vec<f64> = b.iter().zip(&ax).map(|(bi, ai)| bi - ai).collect();
        let beta = norm2(&r0);
        last_rel = beta / b_norm;
        if last_rel <= tol {
            return Ok(x);
        }
        // Arnoldi with modified Gram-Schmidt and Givens rotations
        let mut basis: Vec<Vec<f64>> = Vec::with_capacity(restart + 1);
        basis.push(r0.iter().map(|v| v / beta).collect());
        let mut h: Vec<Vec<f64>> = Vec::new(); // h[j] has j+2 entries
        let mut cs: Vec<f64> = Vec::new();
        let mut sn: Vec<f64> = Vec::new();
        let mut g = vec![0.0; restart + 1];
        g[0] = beta;
        let mut inner = 0usize;

        for j in 0..restart {
            if total_iters >= max_iter {
                break;
            }
            total_iters += 1;
            let z = match preconditioner {
                Some(p) => p.apply(&basis[j]),
                None => basis[j].clone(),
            };
            let mut w = a.spmv(&z)?;
            let mut hj = vec![0.0; j + 2];
            for (i, vi) in basis.iter().enumerate() {
                let dot: f64 = w.iter().zip(vi).map(|(a, b)| a * b).sum();
                hj[i] = dot;
                for (wk, vk) in w.iter_mut().zip(vi) {
                    *wk -= dot * vk;
                }
            }
            let wnorm = norm2(&w);
            hj[j + 1] = wnorm;
            // apply accumulated rotations
            for i in 0..j {
                let t = cs[i] * hj[i] + sn[i] * hj[i + 1];
                hj[i + 1] = -sn[i] * hj[i] + cs[i] * hj[i + 1];
                hj[i] = t;
            }
            let denom = (hj[j] * hj[j] + hj[j + 1] * hj[j + 1]).sqrt();
            let (c, s) = if denom == 0.0 {
                (1.0, 0.0)
            } else {
                (hj[j] / denom, hj[j + 1] / denom)
            };
            cs.push(c);
            sn.push(s);
            hj[j] = c * hj[j] + s * hj[j + 1];
            hj[j + 1] = 0.0;
            g[j + 1] = -s * g[j];
            g[j] *= c;
            h.push(hj);
            inner = j + 1;
            last_rel = g[j + 1].abs() / b_norm;
            if last_rel <= tol || wnorm == 0.0 {
                break;
            }
            basis.push(w.iter().map(|v| v / wnorm).collect());
        }

        // back substitution for the least-squares coefficients
        let mut y = vec![0.0; inner];
        for i in (0..inner).rev() {
            let mut s = g[i];
            for k in i + 1..inner {
                s -= h[k][i] * y[k];
            }
            y[i] = s / h[i][i];
        }
        for (j, &yj) in y.iter().enumerate() {
            let z = match preconditioner {
                Some(p) => p.apply(&basis[j]),
                None => basis[j].clone(),
            };
            for (xi, zi) in x.iter_mut().zip(&z) {
                *xi += yj * zi;
            }
        }
        let ax = a.spmv(&x)?;
        let r: Vec<f64> = b.iter().zip(&ax).map(|(bi, ai)| bi - ai).collect();
        last_rel = norm2(&r) / b_norm;
        if last_rel <= tol {
            return Ok(x);
        }
    }
    Err(LinalgError::NonConvergence {
        iterations: total_iters,
        residual: last_rel,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg::CooBuilder;

    #[test]
    fn identity_converges_in_one_iteration() {
        let a = SparseMatrix::identity(8);
        let b: Vec<f64> = (0..8).map(|i| i as f64 + 1.0).collect();
        let x = solve_gmres(&a, &b, 1e-12, 1, None).unwrap();
        for i in 0..8 {
            assert!((x[i] - b[i]).abs() < 1e-12);
        }
    }

    #[test]
    fn diagonal_has_analytic_inverse() {
        let n = 10;
        let mut builder = CooBuilder::new(n, n);
        for i in 0..n {
            builder.push(i, i, (i + 1) as f64);
        }
        let a = builder.finalize();
        let b = vec![1.0; n];
        let x = solve_gmres(&a, &b, 1e-12, 50, None).unwrap();
        for i in 0..n {
            assert!((x[i] - 1.0 / (i + 1) as f64).abs() < 1e-10);
        }
    }

    #[test]
    fn agrees_with_direct_solve() {
        // same system class as the LU random SPD test
        let n = 30;
        let mut state = 0x2545f4914f6cdd1du64;
        let mut rng = move || {
            state ^= state << 13;
            state ^= state >> 7;
            state ^= state << 17;
            (state >> 11) as f64 / (1u64 << 53) as f64 - 0.5
        };
        let mut bmat = vec![vec![0.0; n]; n];
        for row in bmat.iter_mut() {
            for v in row.iter_mut() {
                *v = rng();
            }
        }
        let mut builder = CooBuilder::new(n, n);
        for i in 0..n {
            for j in 0..n {
                let mut s = 0.0;
                for k in 0..n {
                    s += bmat[k][i] * bmat[k][j];
                }
                if i == j {
                    s += n as f64;
                }
                builder.push(i, j, s);
            }
        }
        let a = builder.finalize();
        let b: Vec<f64> = (0..n).map(|i| ((i * 7 % 13) as f64) - 6.0).collect();
        let x_direct = crate::linalg::solve_sparse_lu(&a, &b).unwrap();
        let jac = JacobiPreconditioner::new(&a);
        let x_gmres = solve_gmres(&a, &b, 1e-11, 500, Some(&jac)).unwrap();
        for i in 0..n {
            assert!((x_direct[i] - x_gmres[i]).abs() < 1e-8);
        }
    }

    #[test]
    fn nonconvergence_reports_residual() {
        let n = 12;
        let mut builder = CooBuilder::new(n, n);
        for i in 0..n {
            builder.push(i, i, 1.0);
            builder.push(i, (i + 1) % n, -2.0);
        }
        let a = builder.finalize();
        let mut b = vec![0.0; n];
        b[0] = 1.0; // not an eigenvector: needs the full Krylov space
        match solve_gmres(&a, &b, 1e-14, 2, None) {
            Err(LinalgError::NonConvergence {
                iterations,
                residual,
            }) => {
                assert_eq!(iterations, 2);
                assert!(residual.is_finite());
            }
            other => panic!("expected non-convergence, got {other:?}"),
        }
    }
}
