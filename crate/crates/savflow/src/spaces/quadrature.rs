//! Quadrature rules on the reference triangle, in barycentric form.
//!
//! Weights carry the reference-triangle measure, so they sum to 1/2 and
//! `integral over K = sum_q w_q * det(J_K) * f(x_q)`. The declared exactness
//! degree is verified against barycentric monomials.

use thiserror::Error;

#[derive(Debug, Error)]
#[error("quadrature rule claims degree {degree} but misses monomial ({a},{b},{c}): got {got:.16}, want {want:.16}")]
pub struct QuadratureError {
    pub degree: usize,
    pub a: usize,
    pub b: usize,
    pub c: usize,
    pub got: f64,
    pub want: f64,
}

/// Points (barycentric) and weights (reference measure) of fixed exactness.
#[derive(Debug, Clone)]
pub struct QuadratureRule {
    pub points: Vec<[f64; 3]>,
    pub weights: Vec<f64>,
    pub degree: usize,
}

impl QuadratureRule {
    /// Midpoint rule, exact through degree 2.
    pub fn degree2() -> Self {
        let w = 1.0 / 6.0;
        Self {
            points: vec![
                [0.5, 0.5, 0.0],
                [0.0, 0.5, 0.5],
                [0.5, 0.0, 0.5],
            ],
            weights: vec![w, w, w],
            degree: 2,
        }
    }

    /// Seven-point rule, exact through degree 5. This is the default rule:
    /// the convection term pairs two P2 factors with a P2 gradient, degree 5
    /// under affine maps.
    pub fn degree5() -> Self {
        let s15 = 15.0f64.sqrt();
        let a1 = (6.0 + s15) / 21.0;
        let w1 = (155.0 + s15) / 2400.0;
        let a2 = (6.0 - s15) / 21.0;
        let w2 = (155.0 - s15) / 2400.0;
        let third = 1.0 / 3.0;
        let mut points = vec![[third, third, third]];
        let mut weights = vec![9.0 / 80.0];
        for (a, w) in [(a1, w1), (a2, w2)] {
            let b = 1.0 - 2.0 * a;
            points.push([b, a, a]);
            points.push([a, b, a]);
            points.push([a, a, b]);
            weights.extend_from_slice(&[w, w, w]);
        }
        Self {
            points,
            weights,
            degree: 5,
        }
    }

    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    /// Checks every barycentric monomial of total degree <= declared degree
    /// against the exact value `a! b! c! / (a+b+c+2)!`.
    pub fn verify(&self) -> Result<(), QuadratureError> {
        for total in 0..=self.degree {
            for a in 0..=total {
                for b in 0..=(total - a) {
                    let c = total - a - b;
                    let got: f64 = self
                        .points
                        .iter()
                        .zip(&self.weights)
                        .map(|(p, w)| w * p[0].powi(a as i32) * p[1].powi(b as i32) * p[2].powi(c as i32))
                        .sum();
                    let want = factorial(a) * factorial(b) * factorial(c) / factorial(a + b + c + 2);
                    if (got - want).abs() > 1e-14 {
                        return Err(QuadratureError {
                            degree: self.degree,
                            a,
                            b,
                            c,
                            got,
                            want,
                        });
                    }
                }
            }
        }
        Ok(())
    }
}

fn factorial(n: usize) -> f64 {
    (1..=n).map(|k| k as f64).product()
}
