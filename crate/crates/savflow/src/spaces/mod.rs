//! Scalar P1/P2 Lagrange spaces over a triangulation, finite element
//! functions, Dirichlet boundary conditions, operator assembly and norms.
//!
//! Velocity fields are `FeFunction`s with two components stacked as
//! `[all x-coefficients, all y-coefficients]`; global vector dof
//! `comp * n_scalar + scalar_dof`. The coarse "large scale" space for the
//! vorticity projection is P1 on the same mesh.

mod assemble;
mod basis;
mod infsup;
mod norms;
mod project;
mod quadrature;

pub use assemble::{
    apply_dirichlet, assemble_convection, assemble_curl_coupling, assemble_curl_coupling_weighted,
    assemble_curlcurl, assemble_curlcurl_weighted, assemble_divdiv, assemble_load, assemble_mass,
    assemble_pressure_div, assemble_stiffness, pressure_mean_vector, vector_block_diag,
    velocity_dirichlet_values, ConstrainedDofs,
};
pub use basis::{eval_basis, n_local, BasisTable};
pub use infsup::infsup_constant;
pub use norms::{norms, point_eval, Norms};
pub use project::{l2_project_curl, projection_slack, CurlProjector};
pub use quadrature::{QuadratureError, QuadratureRule};

use crate::linalg::LinalgError;
use crate::mesh::Mesh;
use std::collections::HashMap;
use std::sync::Arc;
use thiserror::Error;

#[derive(Debug, Error)]
pub enum SpaceError {
    #[error("unsupported polynomial degree {0} (only 1 and 2)")]
    InvalidDegree(u8),
    #[error("boundary marker {0} not present in the mesh")]
    MarkerNotFound(u32),
    #[error("point ({x}, {y}) lies outside the mesh")]
    PointOutsideDomain { x: f64, y: f64 },
    #[error("spaces live on different meshes")]
    MeshMismatch,
    #[error("expected a {expected}-component field, found {found}")]
    ComponentMismatch { expected: usize, found: usize },
    #[error("problem too large for the dense path ({dofs} dofs > {limit}); skip this check on fine meshes")]
    TooLargeForDense { dofs: usize, limit: usize },
    #[error(transparent)]
    Linalg(#[from] LinalgError),
    #[error(transparent)]
    Quadrature(#[from] QuadratureError),
}

/// Scalar Lagrange space of degree 1 or 2 over a mesh.
///
/// Dof layout: vertex dofs first (P1 and P2), then one dof per mesh edge
/// (P2 only), in the mesh's deterministic edge order.
#[derive(Debug)]
pub struct FeSpace {
    mesh: Arc<Mesh>,
    degree: u8,
    n_dofs: usize,
    element_dofs: Vec<[usize; 6]>,
    dof_coords: Vec<(f64, f64)>,
}

impl FeSpace {
    pub fn new(mesh: Arc<Mesh>, degree: u8) -> Result<Arc<Self>, SpaceError> {
        if degree != 1 && degree != 2 {
            return Err(SpaceError::InvalidDegree(degree));
        }
        let nv = mesh.n_vertices();
        let edges = mesh.edges();
        let mut edge_index: HashMap<(usize, usize), usize> = HashMap::with_capacity(edges.len());
        for (k, &e) in edges.iter().enumerate() {
            edge_index.insert(e, k);
        }
        let mut element_dofs = Vec::with_capacity(mesh.n_triangles());
        for t in mesh.triangles() {
            let mut dofs = [0usize; 6];
            dofs[..3].copy_from_slice(t);
            if degree == 2 {
                for (k, (i, j)) in [(0usize, 1usize), (1, 2), (2, 0)].iter().enumerate() {
                    let a = t[*i];
                    let b = t[*j];
                    let e = edge_index[&(a.min(b), a.max(b))];
                    dofs[3 + k] = nv + e;
                }
            }
            element_dofs.push(dofs);
        }
        let mut dof_coords: Vec<(f64, f64)> = mesh.vertices().to_vec();
        if degree == 2 {
            for &(a, b) in &edges {
                let (ax, ay) = mesh.vertex(a);
                let (bx, by) = mesh.vertex(b);
                dof_coords.push((0.5 * (ax + bx), 0.5 * (ay + by)));
            }
        }
        let n_dofs = if degree == 1 { nv } else { nv + edges.len() };
        Ok(Arc::new(Self {
            mesh,
            degree,
            n_dofs,
            element_dofs,
            dof_coords,
        }))
    }

    pub fn mesh(&self) -> &Arc<Mesh> {
        &self.mesh
    }

    pub fn degree(&self) -> u8 {
        self.degree
    }

    pub fn n_dofs(&self) -> usize {
        self.n_dofs
    }

    pub fn n_local(&self) -> usize {
        basis::n_local(self.degree)
    }

    /// Global dofs of element `t` (first `n_local()` entries are valid).
    pub fn element_dofs(&self, t: usize) -> &[usize] {
        &self.element_dofs[t][..self.n_local()]
    }

    pub fn dof_coords(&self) -> &[(f64, f64)] {
        &self.dof_coords
    }

    /// Checks that two spaces share a mesh.
    pub fn same_mesh(&self, other: &FeSpace) -> bool {
        Arc::ptr_eq(&self.mesh, &other.mesh)
    }

    /// Scalar dofs lying on boundary edges with any of the given markers,
    /// sorted ascending.
    pub fn boundary_dofs(&self, markers: &[u32]) -> Result<Vec<usize>, SpaceError> {
        let present = self.mesh.markers();
        for &m in markers {
            if !present.contains(&m) {
                return Err(SpaceError::MarkerNotFound(m));
            }
        }
        let nv = self.mesh.n_vertices();
        let edges = self.mesh.edges();
        let mut edge_index: HashMap<(usize, usize), usize> = HashMap::with_capacity(edges.len());
        for (k, &e) in edges.iter().enumerate() {
            edge_index.insert(e, k);
        }
        let mut dofs = Vec::new();
        for &(a, b, m) in self.mesh.boundary_edges() {
            if markers.contains(&m) {
                dofs.push(a);
                dofs.push(b);
                if self.degree == 2 {
                    dofs.push(nv + edge_index[&(a.min(b), a.max(b))]);
                }
            }
        }
        dofs.sort_unstable();
        dofs.dedup();
        Ok(dofs)
    }
}

/// Affine map data of one element (crate-internal: diagnostics recomputes
/// integrals independently of the assembled operators).
pub(crate) fn element_map(mesh: &Mesh, t: usize) -> ElementMap {
    ElementMap::new(mesh, t)
}

/// Affine map data of one element.
#[derive(Debug, Clone, Copy)]
pub(crate) struct ElementMap {
    pub det: f64,
    /// inverse-transpose Jacobian, row-major
    pub inv_jt: [[f64; 2]; 2],
    pub verts: [(f64, f64); 3],
}

impl ElementMap {
    pub fn new(mesh: &Mesh, t: usize) -> Self {
        let [a, b, c] = mesh.triangle(t);
        let pa = mesh.vertex(a);
        let pb = mesh.vertex(b);
        let pc = mesh.vertex(c);
        let j = [[pb.0 - pa.0, pc.0 - pa.0], [pb.1 - pa.1, pc.1 - pa.1]];
        let det = j[0][0] * j[1][1] - j[0][1] * j[1][0];
        let inv_jt = [
            [j[1][1] / det, -j[1][0] / det],
            [-j[0][1] / det, j[0][0] / det],
        ];
        Self {
            det,
            inv_jt,
            verts: [pa, pb, pc],
        }
    }

    /// Physical gradient from a reference gradient.
    #[inline]
    pub fn grad(&self, g: (f64, f64)) -> (f64, f64) {
        (
            self.inv_jt[0][0] * g.0 + self.inv_jt[0][1] * g.1,
            self.inv_jt[1][0] * g.0 + self.inv_jt[1][1] * g.1,
        )
    }

    /// Physical coordinates of a barycentric point.
    #[inline]
    pub fn point(&self, bary: [f64; 3]) -> (f64, f64) {
        let [p0, p1, p2] = self.verts;
        (
            bary[0] * p0.0 + bary[1] * p1.0 + bary[2] * p2.0,
            bary[0] * p0.1 + bary[1] * p1.1 + bary[2] * p2.1,
        )
    }
}

/// A finite element function: one coefficient vector per component.
#[derive(Debug, Clone)]
pub struct FeFunction {
    space: Arc<FeSpace>,
    components: usize,
    coeffs: Vec<f64>,
}

impl FeFunction {
    pub fn zeros(space: &Arc<FeSpace>, components: usize) -> Self {
        Self {
            space: Arc::clone(space),
            components,
            coeffs: vec![0.0; components * space.n_dofs()],
        }
    }

    pub fn from_coeffs(space: &Arc<FeSpace>, components: usize, coeffs: Vec<f64>) -> Self {
        assert_eq!(coeffs.len(), components * space.n_dofs());
        Self {
            space: Arc::clone(space),
            components,
            coeffs,
        }
    }

    /// Nodal interpolant of a scalar function.
    pub fn interpolate_scalar(space: &Arc<FeSpace>, f: impl Fn(f64, f64) -> f64) -> Self {
        let coeffs = space.dof_coords().iter().map(|&(x, y)| f(x, y)).collect();
        Self {
            space: Arc::clone(space),
            components: 1,
            coeffs,
        }
    }

    /// Nodal interpolant of a vector function.
    pub fn interpolate_vector(space: &Arc<FeSpace>, f: impl Fn(f64, f64) -> (f64, f64)) -> Self {
        let n = space.n_dofs();
        let mut coeffs = vec![0.0; 2 * n];
        for (i, &(x, y)) in space.dof_coords().iter().enumerate() {
            let (fx, fy) = f(x, y);
            coeffs[i] = fx;
            coeffs[n + i] = fy;
        }
        Self {
            space: Arc::clone(space),
            components: 2,
            coeffs,
        }
    }

    pub fn space(&self) -> &Arc<FeSpace> {
        &self.space
    }

    pub fn components(&self) -> usize {
        self.components
    }

    pub fn coeffs(&self) -> &[f64] {
        &self.coeffs
    }

    pub fn coeffs_mut(&mut self) -> &mut [f64] {
        &mut self.coeffs
    }

    /// Coefficient slice of one component.
    pub fn component(&self, c: usize) -> &[f64] {
        let n = self.space.n_dofs();
        &self.coeffs[c * n..(c + 1) * n]
    }

    /// `self + alpha * other`, elementwise on coefficients.
    pub fn axpy(&mut self, alpha: f64, other: &FeFunction) {
        debug_assert_eq!(self.coeffs.len(), other.coeffs.len());
        for (a, b) in self.coeffs.iter_mut().zip(&other.coeffs) {
            *a += alpha * b;
        }
    }

    pub fn scale(&mut self, alpha: f64) {
        for a in self.coeffs.iter_mut() {
            *a *= alpha;
        }
    }

    /// Component values at a barycentric point of element `t`.
    pub fn eval_in_element(&self, t: usize, bary: [f64; 3]) -> Vec<f64> {
        let (vals, _) = eval_basis(self.space.degree(), bary).expect("degree validated");
        let dofs = self.space.element_dofs(t);
        let n = self.space.n_dofs();
        (0..self.components)
            .map(|c| {
                dofs.iter()
                    .zip(&vals)
                    .map(|(&d, &v)| self.coeffs[c * n + d] * v)
                    .sum()
            })
            .collect()
    }
}

/// Time-dependent Dirichlet data for the velocity on a set of markers.
pub struct DirichletBc {
    pub markers: Vec<u32>,
    pub value: Arc<dyn Fn(f64, f64, f64) -> (f64, f64) + Send + Sync>,
}

impl DirichletBc {
    pub fn new(
        markers: Vec<u32>,
        value: impl Fn(f64, f64, f64) -> (f64, f64) + Send + Sync + 'static,
    ) -> Self {
        Self {
            markers,
            value: Arc::new(value),
        }
    }

    /// Homogeneous no-slip condition.
    pub fn zero(markers: Vec<u32>) -> Self {
        Self::new(markers, |_, _, _| (0.0, 0.0))
    }
}

impl std::fmt::Debug for DirichletBc {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("DirichletBc")
            .field("markers", &self.markers)
            .finish()
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::mesh::build_unit_square;

    #[test]
    fn p2_dof_count_is_vertices_plus_edges() {
        let mesh = Arc::new(build_unit_square(3).unwrap());
        let p2 = FeSpace::new(Arc::clone(&mesh), 2).unwrap();
        assert_eq!(p2.n_dofs(), mesh.n_vertices() + mesh.edges().len());
        let p1 = FeSpace::new(Arc::clone(&mesh), 1).unwrap();
        assert_eq!(p1.n_dofs(), mesh.n_vertices());
    }

    #[test]
    fn shared_edge_dofs_are_identified() {
        let mesh = Arc::new(build_unit_square(1).unwrap());
        let p2 = FeSpace::new(mesh, 2).unwrap();
        // the two triangles share the diagonal edge; its midpoint dof must
        // coincide
        let d0: Vec<usize> = p2.element_dofs(0).to_vec();
        let d1: Vec<usize> = p2.element_dofs(1).to_vec();
        let shared: Vec<usize> = d0.iter().filter(|d| d1.contains(d)).copied().collect();
        // two shared vertices + one shared midpoint
        assert_eq!(shared.len(), 3);
    }

    #[test]
    fn interpolate_linear_exact_p1() {
        let mesh = Arc::new(build_unit_square(2).unwrap());
        let p1 = FeSpace::new(mesh, 1).unwrap();
        let f = FeFunction::interpolate_scalar(&p1, |x, y| 2.0 * x - y + 0.5);
        // exact at an interior barycentric point of every element
        for t in 0..f.space().mesh().n_triangles() {
            let bary = [0.2, 0.3, 0.5];
            let em = ElementMap::new(f.space().mesh(), t);
            let (x, y) = em.point(bary);
            let v = f.eval_in_element(t, bary)[0];
            assert!((v - (2.0 * x - y + 0.5)).abs() < 1e-14);
        }
    }

    #[test]
    fn interpolate_quadratic_exact_p2() {
        let mesh = Arc::new(build_unit_square(2).unwrap());
        let p2 = FeSpace::new(mesh, 2).unwrap();
        let f = FeFunction::interpolate_scalar(&p2, |x, y| x * x - 3.0 * x * y + 2.0 * y * y);
        for t in 0..f.space().mesh().n_triangles() {
            let bary = [0.1, 0.6, 0.3];
            let em = ElementMap::new(f.space().mesh(), t);
            let (x, y) = em.point(bary);
            let v = f.eval_in_element(t, bary)[0];
            assert!((v - (x * x - 3.0 * x * y + 2.0 * y * y)).abs() < 1e-13);
        }
    }

    #[test]
    fn boundary_dofs_rejects_missing_marker() {
        let mesh = Arc::new(build_unit_square(2).unwrap());
        let p2 = FeSpace::new(mesh, 2).unwrap();
        assert!(matches!(
            p2.boundary_dofs(&[9]),
            Err(SpaceError::MarkerNotFound(9))
        ));
    }

    #[test]
    fn boundary_dof_count_unit_square() {
        let n = 4;
        let mesh = Arc::new(build_unit_square(n).unwrap());
        let p2 = FeSpace::new(mesh, 2).unwrap();
        let dofs = p2.boundary_dofs(&[1]).unwrap();
        // 4n boundary vertices + 4n boundary edge midpoints
        assert_eq!(dofs.len(), 8 * n);
    }
}
