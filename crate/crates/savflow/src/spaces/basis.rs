//! Lagrange basis functions on the reference triangle.
//!
//! Local numbering: dofs 0,1,2 at the vertices; for P2, dofs 3,4,5 at the
//! midpoints of edges (0,1), (1,2), (2,0). Reference gradients are taken
//! with respect to `(xi, eta)` where `lambda = (1 - xi - eta, xi, eta)`.

use super::SpaceError;

/// Barycentric gradients with respect to the reference coordinates.
const DLAMBDA: [(f64, f64); 3] = [(-1.0, -1.0), (1.0, 0.0), (0.0, 1.0)];

/// Evaluates basis values and reference gradients at a barycentric point.
pub fn eval_basis(degree: u8, bary: [f64; 3]) -> Result<(Vec<f64>, Vec<(f64, f64)>), SpaceError> {
    let [l0, l1, l2] = bary;
    match degree {
        1 => {
            let values = vec![l0, l1, l2];
            let grads = DLAMBDA.to_vec();
            Ok((values, grads))
        }
        2 => {
            let l = [l0, l1, l2];
            let mut values = Vec::with_capacity(6);
            let mut grads = Vec::with_capacity(6);
            for i in 0..3 {
                values.push(l[i] * (2.0 * l[i] - 1.0));
                let (dx, dy) = DLAMBDA[i];
                grads.push(((4.0 * l[i] - 1.0) * dx, (4.0 * l[i] - 1.0) * dy));
            }
            for (i, j) in [(0usize, 1usize), (1, 2), (2, 0)] {
                values.push(4.0 * l[i] * l[j]);
                let (dxi, dyi) = DLAMBDA[i];
                let (dxj, dyj) = DLAMBDA[j];
                grads.push((
                    4.0 * (l[j] * dxi + l[i] * dxj),
                    4.0 * (l[j] * dyi + l[i] * dyj),
                ));
            }
            Ok((values, grads))
        }
        d => Err(SpaceError::InvalidDegree(d)),
    }
}

/// Number of local dofs for a degree.
pub fn n_local(degree: u8) -> usize {
    match degree {
        1 => 3,
        2 => 6,
        _ => unreachable!("degree validated at space construction"),
    }
}

/// Basis values and reference gradients tabulated at a set of quadrature
/// points.
#[derive(Debug, Clone)]
pub struct BasisTable {
    pub values: Vec<Vec<f64>>,
    pub grads: Vec<Vec<(f64, f64)>>,
}

impl BasisTable {
    pub fn tabulate(degree: u8, points: &[[f64; 3]]) -> Result<Self, SpaceError> {
        let mut values = Vec::with_capacity(points.len());
        let mut grads = Vec::with_capacity(points.len());
        for &p in points {
            let (v, g) = eval_basis(degree, p)?;
            values.push(v);
            grads.push(g);
        }
        Ok(Self { values, grads })
    }
}
