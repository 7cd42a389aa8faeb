//! Conforming triangulations of the benchmark domains: a unit square, a
//! channel with a circular obstacle, and an annulus between two offset
//! circles. All meshes are counter-clockwise oriented with marked boundary
//! edges, and are immutable after construction.

mod generate;
mod io;

pub use generate::{build_channel_cylinder, build_offset_annulus, build_unit_square};
pub use io::{read_mesh, write_mesh};

use std::collections::HashMap;
use thiserror::Error;

#[derive(Debug, Error)]
pub enum MeshError {
    #[error("resolution parameter must be positive")]
    ZeroResolution,
    #[error("target mesh size {h} cannot resolve the geometry: {reason}")]
    Unresolvable { h: f64, reason: String },
    #[error("triangle {index} has non-positive area {area:.3e}")]
    Orientation { index: usize, area: f64 },
    #[error("dangling vertex index {index} (only {n_vertices} vertices)")]
    DanglingIndex { index: usize, n_vertices: usize },
    #[error("boundary is not watertight: {0}")]
    Boundary(String),
    #[error("parse error at line {line}: {message}")]
    Parse { line: usize, message: String },
    #[error("io error: {0}")]
    Io(#[from] std::io::Error),
}

/// A conforming triangulation with boundary markers.
///
/// Invariants (checked by [`Mesh::new`]): every triangle has positive signed
/// area, the boundary edge list exactly covers the edges incident to one
/// triangle, and every boundary edge appears as a directed edge of its
/// triangle (so the domain lies to its left).
#[derive(Debug, Clone, PartialEq)]
pub struct Mesh {
    vertices: Vec<(f64, f64)>,
    triangles: Vec<[usize; 3]>,
    boundary_edges: Vec<(usize, usize, u32)>,
    /// Nominal resolution used for parameter scalings like `alpha1 = h^2`:
    /// the grid parameter `1/n` for the structured square, the longest edge
    /// otherwise.
    nominal_h: f64,
}

impl Mesh {
    /// Validates and constructs a mesh. The nominal size defaults to the
    /// longest edge; structured constructors override it.
    pub fn new(
        vertices: Vec<(f64, f64)>,
        triangles: Vec<[usize; 3]>,
        boundary_edges: Vec<(usize, usize, u32)>,
    ) -> Result<Self, MeshError> {
        let mut mesh = Mesh {
            vertices,
            triangles,
            boundary_edges,
            nominal_h: 0.0,
        };
        mesh.validate()?;
        mesh.nominal_h = mesh.max_edge_length();
        Ok(mesh)
    }

    pub(crate) fn with_nominal_h(mut self, h: f64) -> Self {
        self.nominal_h = h;
        self
    }

    fn validate(&self) -> Result<(), MeshError> {
        let nv = self.vertices.len();
        for (i, t) in self.triangles.iter().enumerate() {
            for &v in t {
                if v >= nv {
                    return Err(MeshError::DanglingIndex {
                        index: v,
                        n_vertices: nv,
                    });
                }
            }
            let area = self.triangle_area(i);
            if area <= 0.0 {
                return Err(MeshError::Orientation { index: i, area });
            }
        }
        for &(a, b, m) in &self.boundary_edges {
            if a >= nv || b >= nv {
                return Err(MeshError::DanglingIndex {
                    index: a.max(b),
                    n_vertices: nv,
                });
            }
            if m == 0 {
                return Err(MeshError::Boundary(format!(
                    "edge ({a},{b}) has marker 0; markers must be positive"
                )));
            }
        }
        // edges incident to exactly one triangle must match the boundary list
        let mut count: HashMap<(usize, usize), usize> = HashMap::new();
        for t in &self.triangles {
            for k in 0..3 {
                let (a, b) = (t[k], t[(k + 1) % 3]);
                let key = (a.min(b), a.max(b));
                *count.entry(key).or_insert(0) += 1;
            }
        }
        let mut boundary_set: HashMap<(usize, usize), (usize, usize)> = HashMap::new();
        for &(a, b, _) in &self.boundary_edges {
            boundary_set.insert((a.min(b), a.max(b)), (a, b));
        }
        for (key, c) in &count {
            match c {
                1 => {
                    if !boundary_set.contains_key(key) {
                        return Err(MeshError::Boundary(format!(
                            "edge {key:?} lies on the boundary but is unmarked"
                        )));
                    }
                }
                2 => {
                    if boundary_set.contains_key(key) {
                        return Err(MeshError::Boundary(format!(
                            "edge {key:?} is interior but marked as boundary"
                        )));
                    }
                }
                c => {
                    return Err(MeshError::Boundary(format!(
                        "edge {key:?} belongs to {c} triangles"
                    )));
                }
            }
        }
        for (key, &(a, b)) in &boundary_set {
            if !count.contains_key(key) {
                return Err(MeshError::Boundary(format!(
                    "marked edge ({a},{b}) is not an edge of any triangle"
                )));
            }
        }
        // orientation: each boundary edge must be a directed triangle edge
        let mut directed: HashMap<(usize, usize), ()> = HashMap::new();
        for t in &self.triangles {
            for k in 0..3 {
                directed.insert((t[k], t[(k + 1) % 3]), ());
            }
        }
        for &(a, b, _) in &self.boundary_edges {
            if !directed.contains_key(&(a, b)) {
                return Err(MeshError::Boundary(format!(
                    "boundary edge ({a},{b}) is oriented against its triangle"
                )));
            }
        }
        Ok(())
    }

    pub fn n_vertices(&self) -> usize {
        self.vertices.len()
    }

    pub fn n_triangles(&self) -> usize {
        self.triangles.len()
    }

    pub fn vertices(&self) -> &[(f64, f64)] {
        &self.vertices
    }

    pub fn vertex(&self, i: usize) -> (f64, f64) {
        self.vertices[i]
    }

    pub fn triangles(&self) -> &[[usize; 3]] {
        &self.triangles
    }

    pub fn triangle(&self, i: usize) -> [usize; 3] {
        self.triangles[i]
    }

    pub fn boundary_edges(&self) -> &[(usize, usize, u32)] {
        &self.boundary_edges
    }

    /// Nominal mesh size `h` (see field docs).
    pub fn nominal_h(&self) -> f64 {
        self.nominal_h
    }

    pub fn triangle_area(&self, i: usize) -> f64 {
        let [a, b, c] = self.triangles[i];
        let (ax, ay) = self.vertices[a];
        let (bx, by) = self.vertices[b];
        let (cx, cy) = self.vertices[c];
        0.5 * ((bx - ax) * (cy - ay) - (cx - ax) * (by - ay))
    }

    pub fn total_area(&self) -> f64 {
        (0..self.triangles.len())
            .map(|i| self.triangle_area(i))
            .sum()
    }

    /// Longest edge of triangle `i`.
    pub fn triangle_h(&self, i: usize) -> f64 {
        let [a, b, c] = self.triangles[i];
        let d = |p: (f64, f64), q: (f64, f64)| ((p.0 - q.0).powi(2) + (p.1 - q.1).powi(2)).sqrt();
        let (pa, pb, pc) = (self.vertices[a], self.vertices[b], self.vertices[c]);
        d(pa, pb).max(d(pb, pc)).max(d(pc, pa))
    }

    pub fn max_edge_length(&self) -> f64 {
        (0..self.triangles.len())
            .map(|i| self.triangle_h(i))
            .fold(0.0, f64::max)
    }

    /// Unique undirected edges in deterministic (first-seen) order, each as
    /// `(min_vertex, max_vertex)`.
    pub fn edges(&self) -> Vec<(usize, usize)> {
        let mut seen: HashMap<(usize, usize), ()> = HashMap::new();
        let mut edges = Vec::new();
        for t in &self.triangles {
            for k in 0..3 {
                let (a, b) = (t[k], t[(k + 1) % 3]);
                let key = (a.min(b), a.max(b));
                if seen.insert(key, ()).is_none() {
                    edges.push(key);
                }
            }
        }
        edges
    }

    /// Set of markers present on the boundary.
    pub fn markers(&self) -> Vec<u32> {
        let mut m: Vec<u32> = self.boundary_edges.iter().map(|&(_, _, m)| m).collect();
        m.sort_unstable();
        m.dedup();
        m
    }
}

/// Parameterized description of the three benchmark domains.
#[derive(Debug, Clone, PartialEq)]
pub enum GeometrySpec {
    UnitSquare { n: usize },
    ChannelCylinder { h_target: f64 },
    OffsetAnnulus { h_target: f64 },
}

impl GeometrySpec {
    pub fn build(&self) -> Result<Mesh, MeshError> {
        match *self {
            GeometrySpec::UnitSquare { n } => build_unit_square(n),
            GeometrySpec::ChannelCylinder { h_target } => build_channel_cylinder(h_target),
            GeometrySpec::OffsetAnnulus { h_target } => build_offset_annulus(h_target),
        }
    }
}

/// Splits every triangle into four congruent children via edge midpoints.
/// Boundary markers are inherited; the nominal size halves.
pub fn refine_uniform(mesh: &Mesh) -> Result<Mesh, MeshError> {
    let mut vertices = mesh.vertices.to_vec();
    let mut midpoint: HashMap<(usize, usize), usize> = HashMap::new();
    let mut mid = |a: usize, b: usize, vertices: &mut Vec<(f64, f64)>| -> usize {
        let key = (a.min(b), a.max(b));
        if let Some(&m) = midpoint.get(&key) {
            return m;
        }
        let (ax, ay) = vertices[a];
        let (bx, by) = vertices[b];
        let idx = vertices.len();
        vertices.push((0.5 * (ax + bx), 0.5 * (ay + by)));
        midpoint.insert(key, idx);
        idx
    };
    let mut triangles = Vec::with_capacity(4 * mesh.triangles.len());
    for &[a, b, c] in &mesh.triangles {
        let mab = mid(a, b, &mut vertices);
        let mbc = mid(b, c, &mut vertices);
        let mca = mid(c, a, &mut vertices);
        triangles.push([a, mab, mca]);
        triangles.push([mab, b, mbc]);
        triangles.push([mca, mbc, c]);
        triangles.push([mab, mbc, mca]);
    }
    let mut boundary_edges = Vec::with_capacity(2 * mesh.boundary_edges.len());
    for &(a, b, marker) in &mesh.boundary_edges {
        let m = mid(a, b, &mut vertices);
        boundary_edges.push((a, m, marker));
        boundary_edges.push((m, b, marker));
    }
    let h = mesh.nominal_h / 2.0;
    Ok(Mesh::new(vertices, triangles, boundary_edges)?.with_nominal_h(h))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn unit_square_smallest_case() {
        let m = build_unit_square(1).unwrap();
        assert_eq!(m.n_vertices(), 4);
        assert_eq!(m.n_triangles(), 2);
        assert_eq!(m.boundary_edges().len(), 4);
    }

    #[test]
    fn unit_square_rejects_zero() {
        assert!(matches!(build_unit_square(0), Err(MeshError::ZeroResolution)));
    }

    #[test]
    fn unit_square_table_one_resolution() {
        let m = build_unit_square(4).unwrap();
        assert!((m.nominal_h() - 0.25).abs() < 1e-15);
        assert_eq!(m.n_vertices(), 25);
        assert_eq!(m.n_triangles(), 32);
    }

    #[test]
    fn unit_square_area_partition() {
        for n in [1, 3, 7] {
            let m = build_unit_square(n).unwrap();
            assert!((m.total_area() - 1.0).abs() < 1e-13, "n={n}");
        }
    }

    #[test]
    fn refine_quadruples_triangles_and_preserves_area() {
        let m = build_unit_square(3).unwrap();
        let r = refine_uniform(&m).unwrap();
        assert_eq!(r.n_triangles(), 4 * m.n_triangles());
        // V' = V + E
        assert_eq!(r.n_vertices(), m.n_vertices() + m.edges().len());
        assert!((r.total_area() - m.total_area()).abs() < 1e-14);
        assert!((r.max_edge_length() - m.max_edge_length() / 2.0).abs() < 1e-14);
    }

    /// Canonical form: vertices sorted lexicographically, triangles rotated
    /// to put the smallest index first, triangle list sorted.
    fn canonical(m: &Mesh) -> (Vec<(f64, f64)>, Vec<[usize; 3]>) {
        let mut order: Vec<usize> = (0..m.n_vertices()).collect();
        order.sort_by(|&a, &b| {
            m.vertex(a)
                .partial_cmp(&m.vertex(b))
                .unwrap_or(std::cmp::Ordering::Equal)
        });
        let mut rank = vec![0usize; m.n_vertices()];
        for (new, &old) in order.iter().enumerate() {
            rank[old] = new;
        }
        let verts: Vec<(f64, f64)> = order.iter().map(|&i| m.vertex(i)).collect();
        let mut tris: Vec<[usize; 3]> = m
            .triangles()
            .iter()
            .map(|&[a, b, c]| {
                let t = [rank[a], rank[b], rank[c]];
                let k = (0..3).min_by_key(|&k| t[k]).unwrap();
                [t[k], t[(k + 1) % 3], t[(k + 2) % 3]]
            })
            .collect();
        tris.sort_unstable();
        (verts, tris)
    }

    #[test]
    fn refined_unit_square_matches_finer_grid() {
        let coarse = refine_uniform(&build_unit_square(1).unwrap()).unwrap();
        let fine = build_unit_square(2).unwrap();
        let (va, ta) = canonical(&coarse);
        let (vb, tb) = canonical(&fine);
        assert_eq!(va, vb);
        assert_eq!(ta, tb);
    }

    #[test]
    fn channel_cylinder_vertices_on_exact_circle() {
        let m = build_channel_cylinder(0.05).unwrap();
        let mut on_circle = 0;
        for &(a, b, marker) in m.boundary_edges() {
            if marker == 4 {
                for v in [a, b] {
                    let (x, y) = m.vertex(v);
                    let r2 = (x - 0.2).powi(2) + (y - 0.2).powi(2);
                    assert!((r2 - 0.05f64.powi(2)).abs() < 1e-12);
                    on_circle += 1;
                }
            }
        }
        assert!(on_circle >= 16);
    }

    #[test]
    fn channel_cylinder_area() {
        let m = build_channel_cylinder(0.03).unwrap();
        let exact = 2.2 * 0.41 - std::f64::consts::PI * 0.05 * 0.05;
        // polygonal circle: O(h^2) defect, and the polygon is inscribed so
        // the meshed area is slightly larger than the true area
        let defect = (m.total_area() - exact).abs();
        assert!(defect < 1e-3, "area defect {defect}");
    }

    #[test]
    fn channel_cylinder_markers_partition() {
        let m = build_channel_cylinder(0.05).unwrap();
        assert_eq!(m.markers(), vec![1, 2, 3, 4]);
        for &(a, b, marker) in m.boundary_edges() {
            let (xa, ya) = m.vertex(a);
            let (xb, yb) = m.vertex(b);
            match marker {
                1 => assert!(xa.abs() < 1e-12 && xb.abs() < 1e-12),
                2 => assert!((xa - 2.2).abs() < 1e-12 && (xb - 2.2).abs() < 1e-12),
                3 => {
                    let wall = |y: f64| y.abs() < 1e-12 || (y - 0.41).abs() < 1e-12;
                    assert!(wall(ya) && wall(yb));
                }
                4 => {}
                m => panic!("unexpected marker {m}"),
            }
        }
    }

    #[test]
    fn channel_cylinder_unresolvable() {
        assert!(matches!(
            build_channel_cylinder(0.5),
            Err(MeshError::Unresolvable { .. })
        ));
    }

    #[test]
    fn offset_annulus_area_and_containment() {
        let m = build_offset_annulus(0.1).unwrap();
        let exact = std::f64::consts::PI * (1.0 - 0.01);
        assert!((m.total_area() - exact).abs() < 2e-2);
        for &(x, y) in m.vertices() {
            assert!(x * x + y * y <= 1.0 + 1e-12);
            let d2 = (x - 0.5).powi(2) + y * y;
            assert!(d2 >= 0.01 - 1e-3);
        }
    }

    #[test]
    fn offset_annulus_markers() {
        let m = build_offset_annulus(0.1).unwrap();
        for &(a, b, marker) in m.boundary_edges() {
            for v in [a, b] {
                let (x, y) = m.vertex(v);
                match marker {
                    1 => assert!((x * x + y * y - 1.0).abs() < 1e-12),
                    2 => assert!(((x - 0.5).powi(2) + y * y - 0.01).abs() < 1e-12),
                    m => panic!("unexpected marker {m}"),
                }
            }
        }
        assert_eq!(m.markers(), vec![1, 2]);
    }

    #[test]
    fn mesh_rejects_flipped_triangle() {
        let r = Mesh::new(
            vec![(0.0, 0.0), (1.0, 0.0), (0.0, 1.0)],
            vec![[0, 2, 1]],
            vec![(0, 2, 1), (2, 1, 1), (1, 0, 1)],
        );
        assert!(matches!(r, Err(MeshError::Orientation { index: 0, .. })));
    }

    #[test]
    fn mesh_rejects_dangling_index() {
        let r = Mesh::new(
            vec![(0.0, 0.0), (1.0, 0.0), (0.0, 1.0)],
            vec![[0, 1, 5]],
            vec![],
        );
        assert!(matches!(r, Err(MeshError::DanglingIndex { index: 5, .. })));
    }
}
