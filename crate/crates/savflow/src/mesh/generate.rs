//! Constructors for the three benchmark domains.
//!
//! The channel-with-cylinder geometry follows the Schaefer-Turek 2D
//! benchmark: channel `[0,2.2] x [0,0.41]`, obstacle disk centered at
//! `(0.2,0.2)` with diameter `0.1`. The obstacle block is meshed by an
//! O-grid whose rays run from the exact circle to the square block
//! `[0,0.41]^2`, geometrically graded in the radial direction; the rest of
//! the channel is a Cartesian grid. The offset annulus (outer radius 1 at
//! the origin, inner radius 0.1 at `(0.5,0)`) is meshed by radial rays from
//! the inner center. Circle boundary vertices lie on the exact circles in
//! all cases.

use super::{Mesh, MeshError};

pub const CYL_CENTER: (f64, f64) = (0.2, 0.2);
pub const CYL_RADIUS: f64 = 0.05;
pub const CHANNEL_LENGTH: f64 = 2.2;
pub const CHANNEL_HEIGHT: f64 = 0.41;

pub const ANNULUS_OUTER_RADIUS: f64 = 1.0;
pub const ANNULUS_INNER_RADIUS: f64 = 0.1;
pub const ANNULUS_INNER_CENTER: (f64, f64) = (0.5, 0.0);

/// Structured diagonal-split triangulation of `[0,1]^2` with `n` cells per
/// side; all boundary edges carry marker 1.
pub fn build_unit_square(n: usize) -> Result<Mesh, MeshError> {
    if n == 0 {
        return Err(MeshError::ZeroResolution);
    }
    let np = n + 1;
    let mut vertices = Vec::with_capacity(np * np);
    for j in 0..np {
        for i in 0..np {
            vertices.push((i as f64 / n as f64, j as f64 / n as f64));
        }
    }
    let vid = |i: usize, j: usize| j * np + i;
    let mut triangles = Vec::with_capacity(2 * n * n);
    for j in 0..n {
        for i in 0..n {
            let (a, b, c, d) = (vid(i, j), vid(i + 1, j), vid(i + 1, j + 1), vid(i, j + 1));
            triangles.push([a, b, d]);
            triangles.push([b, c, d]);
        }
    }
    let mut boundary_edges = Vec::with_capacity(4 * n);
    for i in 0..n {
        boundary_edges.push((vid(i, 0), vid(i + 1, 0), 1)); // bottom, +x
        boundary_edges.push((vid(i + 1, n), vid(i, n), 1)); // top, -x
    }
    for j in 0..n {
        boundary_edges.push((vid(n, j), vid(n, j + 1), 1)); // right, +y
        boundary_edges.push((vid(0, j + 1), vid(0, j), 1)); // left, -y
    }
    Ok(Mesh::new(vertices, triangles, boundary_edges)?.with_nominal_h(1.0 / n as f64))
}

/// Number of geometric layers such that the first layer is about
/// `first / len` of the normalized ray and layers grow by `growth`.
fn graded_layers(len: f64, first: f64, growth: f64) -> usize {
    let t1 = (first / len).min(0.5);
    let m = ((1.0 + (growth - 1.0) / t1).ln() / growth.ln()).ceil() as usize;
    m.max(2)
}

/// Normalized geometric grading `t_0 = 0 < t_1 < ... < t_m = 1`.
fn grading(m: usize, growth: f64) -> Vec<f64> {
    let denom = growth.powi(m as i32) - 1.0;
    (0..=m)
        .map(|k| (growth.powi(k as i32) - 1.0) / denom)
        .collect()
}

/// Channel `[0,2.2] x [0,0.41]` minus the benchmark disk.
///
/// Markers: 1 = inflow (x=0), 2 = outflow (x=2.2), 3 = walls, 4 = cylinder.
pub fn build_channel_cylinder(h_target: f64) -> Result<Mesh, MeshError> {
    if !(h_target > 0.0) {
        return Err(MeshError::Unresolvable {
            h: h_target,
            reason: "mesh size must be positive".into(),
        });
    }
    let ns = (CHANNEL_HEIGHT / h_target).round() as usize;
    if ns < 4 {
        return Err(MeshError::Unresolvable {
            h: h_target,
            reason: format!(
                "obstacle circle would get {} edges; at least 16 required",
                4 * ns.max(1)
            ),
        });
    }
    let (cx, cy) = CYL_CENTER;
    let side = CHANNEL_HEIGHT;
    let n_ring = 4 * ns;

    // square block boundary walked counter-clockwise from the origin
    let mut outer: Vec<(f64, f64)> = Vec::with_capacity(n_ring);
    for i in 0..ns {
        outer.push((i as f64 * side / ns as f64, 0.0));
    }
    for j in 0..ns {
        outer.push((side, j as f64 * side / ns as f64));
    }
    for i in 0..ns {
        outer.push((side - i as f64 * side / ns as f64, side));
    }
    for j in 0..ns {
        outer.push((0.0, side - j as f64 * side / ns as f64));
    }

    let circle_spacing = 2.0 * std::f64::consts::PI * CYL_RADIUS / n_ring as f64;
    let min_ray = outer
        .iter()
        .map(|&(x, y)| ((x - cx).powi(2) + (y - cy).powi(2)).sqrt() - CYL_RADIUS)
        .fold(f64::INFINITY, f64::min);
    let growth = 1.5;
    let m = graded_layers(min_ray, circle_spacing, growth);
    let t = grading(m, growth);

    // O-grid vertices: ring k, ray p -> index k*n_ring + p
    let mut vertices: Vec<(f64, f64)> = Vec::with_capacity((m + 1) * n_ring);
    for tk in t.iter() {
        for &(px, py) in &outer {
            let theta = (py - cy).atan2(px - cx);
            let (qx, qy) = (cx + CYL_RADIUS * theta.cos(), cy + CYL_RADIUS * theta.sin());
            vertices.push((qx + tk * (px - qx), qy + tk * (py - qy)));
        }
    }
    // force the outermost ring to the exact block boundary
    for (p, &pt) in outer.iter().enumerate() {
        vertices[m * n_ring + p] = pt;
    }
    let ring = |k: usize, p: usize| k * n_ring + (p % n_ring);

    let mut triangles: Vec<[usize; 3]> = Vec::new();
    for k in 0..m {
        for p in 0..n_ring {
            let a = ring(k, p);
            let b = ring(k, p + 1);
            let c = ring(k + 1, p + 1);
            let d = ring(k + 1, p);
            triangles.push([a, c, b]);
            triangles.push([a, d, c]);
        }
    }

    // Cartesian block to the right of the O-grid square
    let nx = ((CHANNEL_LENGTH - side) / (side / ns as f64)).round() as usize;
    let nx = nx.max(1);
    let base = vertices.len();
    for i in 1..=nx {
        let x = side + i as f64 * (CHANNEL_LENGTH - side) / nx as f64;
        for j in 0..=ns {
            vertices.push((x, j as f64 * side / ns as f64));
        }
    }
    let vid_b = |i: usize, j: usize| -> usize {
        if i == 0 {
            // the right side of the square walk starts at p = ns
            ring(m, ns + j)
        } else {
            base + (i - 1) * (ns + 1) + j
        }
    };
    for i in 0..nx {
        for j in 0..ns {
            let a = vid_b(i, j);
            let b = vid_b(i + 1, j);
            let c = vid_b(i + 1, j + 1);
            let d = vid_b(i, j + 1);
            triangles.push([a, b, c]);
            triangles.push([a, c, d]);
        }
    }

    let mut boundary_edges: Vec<(usize, usize, u32)> = Vec::new();
    // cylinder: clockwise so the fluid stays on the left
    for p in 0..n_ring {
        boundary_edges.push((ring(0, p + 1), ring(0, p), 4));
    }
    // square block sides 0 (bottom), 2 (top), 3 (left); side 1 is interior
    for p in 0..n_ring {
        let side_id = p / ns;
        let marker = match side_id {
            0 | 2 => 3,
            3 => 1,
            _ => continue,
        };
        boundary_edges.push((ring(m, p), ring(m, p + 1), marker));
    }
    for i in 0..nx {
        boundary_edges.push((vid_b(i, 0), vid_b(i + 1, 0), 3));
        boundary_edges.push((vid_b(i + 1, ns), vid_b(i, ns), 3));
    }
    for j in 0..ns {
        boundary_edges.push((vid_b(nx, j), vid_b(nx, j + 1), 2));
    }

    let h = side / ns as f64;
    Ok(Mesh::new(vertices, triangles, boundary_edges)?.with_nominal_h(h))
}

/// Annulus between the unit circle (marker 1) and the offset inner circle
/// of radius 0.1 centered at `(0.5, 0)` (marker 2).
pub fn build_offset_annulus(h_target: f64) -> Result<Mesh, MeshError> {
    if !(h_target > 0.0) {
        return Err(MeshError::Unresolvable {
            h: h_target,
            reason: "mesh size must be positive".into(),
        });
    }
    let (cx, cy) = ANNULUS_INNER_CENTER;
    let r_in = ANNULUS_INNER_RADIUS;
    let n_theta = (1.2 * 2.0 * std::f64::consts::PI / h_target).ceil() as usize;
    if n_theta < 16 {
        return Err(MeshError::Unresolvable {
            h: h_target,
            reason: format!("inner circle would get {n_theta} edges; at least 16 required"),
        });
    }
    // ray lengths from the inner circle to the outer circle
    let ray_len = |theta: f64| -> f64 {
        let ce = cx * theta.cos() + cy * theta.sin();
        let r_out = ANNULUS_OUTER_RADIUS;
        let d = -ce + (ce * ce + r_out * r_out - (cx * cx + cy * cy)).sqrt();
        d - r_in
    };
    let min_len = (0..n_theta)
        .map(|i| ray_len(2.0 * std::f64::consts::PI * i as f64 / n_theta as f64))
        .fold(f64::INFINITY, f64::min);
    let growth = 1.3;
    let m = graded_layers(min_len, (h_target / 2.5).max(min_len / 40.0), growth);
    let t = grading(m, growth);

    let mut vertices: Vec<(f64, f64)> = Vec::with_capacity((m + 1) * n_theta);
    for tk in t.iter() {
        for i in 0..n_theta {
            let theta = 2.0 * std::f64::consts::PI * i as f64 / n_theta as f64;
            let (ex, ey) = (theta.cos(), theta.sin());
            let d = ray_len(theta);
            let rho = r_in + tk * d;
            vertices.push((cx + rho * ex, cy + rho * ey));
        }
    }
    let ring = |k: usize, i: usize| k * n_theta + (i % n_theta);

    let mut triangles: Vec<[usize; 3]> = Vec::new();
    for k in 0..m {
        for i in 0..n_theta {
            let a = ring(k, i);
            let b = ring(k, i + 1);
            let c = ring(k + 1, i + 1);
            let d = ring(k + 1, i);
            triangles.push([a, c, b]);
            triangles.push([a, d, c]);
        }
    }
    let mut boundary_edges: Vec<(usize, usize, u32)> = Vec::new();
    for i in 0..n_theta {
        boundary_edges.push((ring(0, i + 1), ring(0, i), 2)); // inner, clockwise
        boundary_edges.push((ring(m, i), ring(m, i + 1), 1)); // outer, ccw
    }
    Ok(Mesh::new(vertices, triangles, boundary_edges)?.with_nominal_h(h_target))
}
