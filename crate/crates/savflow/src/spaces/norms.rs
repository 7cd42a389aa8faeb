//! Quadrature-exact norms of finite element functions and point evaluation.

use super::basis::BasisTable;
use super::quadrature::QuadratureRule;
use super::{ElementMap, FeFunction, SpaceError};

/// Per-snapshot norms of a finite element function. For scalar fields the
/// divergence and curl entries are zero.
#[derive(Debug, Clone, Copy, Default)]
pub struct Norms {
    pub l2: f64,
    pub h1_semi: f64,
    pub div_l2: f64,
    pub curl_l2: f64,
}

/// Computes all norms by quadrature (exact for the space's degree).
pub fn norms(f: &FeFunction) -> Norms {
    let space = f.space();
    let rule = QuadratureRule::degree5();
    let table = BasisTable::tabulate(space.degree(), &rule.points).expect("degree validated");
    let mesh = space.mesh();
    let nl = space.n_local();
    let n = space.n_dofs();
    let vector = f.components() == 2;
    let mut l2 = 0.0;
    let mut h1 = 0.0;
    let mut div = 0.0;
    let mut curl = 0.0;
    for t in 0..mesh.n_triangles() {
        let em = ElementMap::new(mesh, t);
        let dofs = space.element_dofs(t);
        for (q, w) in rule.weights.iter().enumerate() {
            let wq = w * em.det;
            let mut vx = 0.0;
            let mut vy = 0.0;
            let mut gx = (0.0, 0.0); // gradient of component x
            let mut gy = (0.0, 0.0);
            for a in 0..nl {
                let val = table.values[q][a];
                let g = em.grad(table.grads[q][a]);
                let cx = f.coeffs()[dofs[a]];
                vx += cx * val;
                gx.0 += cx * g.0;
                gx.1 += cx * g.1;
                if vector {
                    let cy = f.coeffs()[n + dofs[a]];
                    vy += cy * val;
                    gy.0 += cy * g.0;
                    gy.1 += cy * g.1;
                }
            }
            l2 += wq * (vx * vx + vy * vy);
            h1 += wq * (gx.0 * gx.0 + gx.1 * gx.1 + gy.0 * gy.0 + gy.1 * gy.1);
            if vector {
                let d = gx.0 + gy.1;
                let c = gy.0 - gx.1;
                div += wq * d * d;
                curl += wq * c * c;
            }
        }
    }
    Norms {
        l2: l2.sqrt(),
        h1_semi: h1.sqrt(),
        div_l2: div.sqrt(),
        curl_l2: curl.sqrt(),
    }
}

/// Locates the triangle containing `(x, y)` and evaluates the function
/// there. Components are returned in order.
pub fn point_eval(f: &FeFunction, x: f64, y: f64) -> Result<Vec<f64>, SpaceError> {
    let mesh = f.space().mesh();
    let tol = 1e-12;
    for t in 0..mesh.n_triangles() {
        let [a, b, c] = mesh.triangle(t);
        let (ax, ay) = mesh.vertex(a);
        let (bx, by) = mesh.vertex(b);
        let (cx, cy) = mesh.vertex(c);
        let det = (bx - ax) * (cy - ay) - (cx - ax) * (by - ay);
        let l1 = ((x - ax) * (cy - ay) - (cx - ax) * (y - ay)) / det;
        let l2 = ((bx - ax) * (y - ay) - (x - ax) * (by - ay)) / det;
        let l0 = 1.0 - l1 - l2;
        if l0 >= -tol && l1 >= -tol && l2 >= -tol {
            return Ok(f.eval_in_element(t, [l0, l1, l2]));
        }
    }
    Err(SpaceError::PointOutsideDomain { x, y })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::mesh::build_unit_square;
    use crate::spaces::FeSpace;
    use std::sync::Arc;

    #[test]
    fn constant_one_has_unit_l2() {
        let mesh = Arc::new(build_unit_square(3).unwrap());
        let p2 = FeSpace::new(mesh, 2).unwrap();
        let one = FeFunction::interpolate_scalar(&p2, |_, _| 1.0);
        let n = norms(&one);
        assert!((n.l2 - 1.0).abs() < 1e-14);
        assert!(n.h1_semi < 1e-12);
    }

    #[test]
    fn rotation_field_norms() {
        let mesh = Arc::new(build_unit_square(4).unwrap());
        let p2 = FeSpace::new(mesh, 2).unwrap();
        let rot = FeFunction::interpolate_vector(&p2, |x, y| (-y, x));
        let n = norms(&rot);
        assert!((n.curl_l2 - 2.0).abs() < 1e-13);
        assert!(n.div_l2 < 1e-13);
    }

    #[test]
    fn manufactured_velocity_l2_at_t0() {
        // u = (sin(2 pi y), cos(2 pi x)): integral of sin^2 + cos^2 = 1
        let mesh = Arc::new(build_unit_square(48).unwrap());
        let p2 = FeSpace::new(mesh, 2).unwrap();
        let u = FeFunction::interpolate_vector(&p2, |x, y| {
            (
                (2.0 * std::f64::consts::PI * y).sin(),
                (2.0 * std::f64::consts::PI * x).cos(),
            )
        });
        let n = norms(&u);
        // interpolation + quadrature error at h = 1/48
        assert!((n.l2 * n.l2 - 1.0).abs() < 1e-5, "l2^2 = {}", n.l2 * n.l2);
    }

    #[test]
    fn point_eval_exact_for_linear() {
        let mesh = Arc::new(build_unit_square(2).unwrap());
        let p1 = FeSpace::new(mesh, 1).unwrap();
        let f = FeFunction::interpolate_scalar(&p1, |x, y| x + y);
        let v = point_eval(&f, 0.3, 0.4).unwrap();
        assert!((v[0] - 0.7).abs() < 1e-14);
    }

    #[test]
    fn point_eval_at_vertex_gives_coefficient() {
        let mesh = Arc::new(build_unit_square(2).unwrap());
        let p1 = FeSpace::new(Arc::clone(&mesh), 1).unwrap();
        let f = FeFunction::interpolate_scalar(&p1, |x, y| 3.0 * x - y);
        let (x, y) = mesh.vertex(4);
        let v = point_eval(&f, x, y).unwrap();
        assert!((v[0] - (3.0 * x - y)).abs() < 1e-14);
    }

    #[test]
    fn point_eval_outside_domain_errors() {
        let mesh = Arc::new(build_unit_square(2).unwrap());
        let p1 = FeSpace::new(mesh, 1).unwrap();
        let f = FeFunction::interpolate_scalar(&p1, |_, _| 0.0);
        assert!(matches!(
            point_eval(&f, 2.0, 2.0),
            Err(SpaceError::PointOutsideDomain { .. })
        ));
    }
}
