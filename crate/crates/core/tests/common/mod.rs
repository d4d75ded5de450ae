#![allow(dead_code)]

pub mod oracle;

use leray_rom::fom::{FlowBoundary, InflowProfile, TimeFactor};
use leray_rom::fvops::{BoundaryCondition, CellField};
use leray_rom::mesh::{channel_cylinder_lattice, rectilinear_mesh, ChannelGeometry, Mesh, PatchKind, Vec3};

pub fn grid2d(nx: usize, ny: usize, lx: f64, ly: f64) -> Mesh {
    let xs: Vec<f64> = (0..=nx).map(|i| lx * i as f64 / nx as f64).collect();
    let ys: Vec<f64> = (0..=ny).map(|i| ly * i as f64 / ny as f64).collect();
    rectilinear_mesh(&xs, &ys, None, |_| false).unwrap()
}

/// Stretched lattice: coordinates from cumulative sums of `widths`.
pub fn stretched2d(wx: &[f64], wy: &[f64]) -> Mesh {
    let cum = |w: &[f64]| {
        let mut v = vec![0.0];
        for x in w {
            v.push(v.last().unwrap() + x);
        }
        v
    };
    rectilinear_mesh(&cum(wx), &cum(wy), None, |_| false).unwrap()
}

/// Small channel with a stair-step obstacle: 2D benchmark geometry on a
/// coarse lattice.
pub fn small_cylinder(nx: usize, ny: usize) -> Mesh {
    channel_cylinder_lattice(&ChannelGeometry::benchmark_2d(), [nx, ny, 1]).unwrap()
}

pub fn benchmark_bc(mesh: &Mesh) -> FlowBoundary {
    FlowBoundary::standard(mesh, InflowProfile::Parabolic2d { height: 0.41 }, TimeFactor::Sine { period: 8.0 })
}

/// Face flux of the stream function `psi` (2D meshes): the flux through the
/// edge from `a` to `b` is `psi(b) - psi(a)` when the edge normal agrees
/// with the face area. Sums around any cell telescope to zero.
pub fn stream_flux(mesh: &Mesh, psi: impl Fn(f64, f64) -> f64) -> Vec<f64> {
    (0..mesh.n_faces())
        .map(|f| {
            if mesh.is_empty_face(f) {
                return 0.0;
            }
            let pts = &mesh.faces()[f];
            let p = mesh.points()[pts[0]];
            let q = pts
                .iter()
                .map(|&i| mesh.points()[i])
                .find(|x| ((x.x - p.x).powi(2) + (x.y - p.y).powi(2)).sqrt() > 1e-12)
                .expect("face has extent in the plane");
            let s = mesh.face_area(f);
            let depth = s.norm() / ((q.x - p.x).powi(2) + (q.y - p.y).powi(2)).sqrt();
            let n = Vec3::new(q.y - p.y, -(q.x - p.x), 0.0);
            let d = depth * (psi(q.x, q.y) - psi(p.x, p.y));
            if n.dot(&s) > 0.0 { d } else { -d }
        })
        .collect()
}

pub fn scalar_bcs(mesh: &Mesh, bc: BoundaryCondition<f64>) -> Vec<BoundaryCondition<f64>> {
    mesh.patches().iter().map(|p| if p.kind == PatchKind::Empty { BoundaryCondition::Empty } else { bc }).collect()
}

/// Scalar field with cell and boundary values sampled from `f`.
pub fn sampled(mesh: &Mesh, bc: BoundaryCondition<f64>, f: impl Fn(Vec3) -> f64) -> CellField<f64> {
    let mut field = CellField::zeros(mesh, scalar_bcs(mesh, bc));
    for c in 0..mesh.n_cells() {
        field.cells[c] = f(mesh.cell_centre(c));
    }
    let n_int = mesh.n_internal_faces();
    for b in n_int..mesh.n_faces() {
        field.boundary[b - n_int] = f(mesh.face_centre(b));
    }
    field
}

pub fn assert_close(a: f64, b: f64, tol: f64, what: &str) {
    assert!((a - b).abs() <= tol, "{what}: {a} vs {b} (tol {tol})");
}
