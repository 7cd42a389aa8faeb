use savflow::mesh::*;
fn main() {
    for h in [0.030, 0.026, 0.024, 0.022, 0.020, 0.018, 0.016] {
        let m = build_channel_cylinder(h).unwrap();
        let v = m.n_vertices();
        let e = m.edges().len();
        let dof = 2 * (v + e) + v;
        println!("h={:.3} V={} T={} E={} TH-DOF={}", h, v, m.n_triangles(), e, dof);
    }
    for h in [0.10, 0.08, 0.06] {
        let m = build_offset_annulus(h).unwrap();
        let v = m.n_vertices();
        let e = m.edges().len();
        println!("annulus h={:.2} V={} T={} TH-DOF={}", h, v, m.n_triangles(), 2*(v+e)+v);
    }
}
