//! Explicit finite-volume operators. Every per-cell result here is a volume
//! average (surface sum divided by the cell volume); empty faces never
//! contribute.

use super::field::{CellField, FieldValue};
use crate::mesh::{Mesh, Vec3};

/// Central-differencing face values; boundary faces take the boundary value.
/// Empty faces carry the owner value.
pub fn interpolate_to_faces<T: FieldValue>(mesh: &Mesh, f: &CellField<T>) -> Vec<T> {
    let n_int = mesh.n_internal_faces();
    (0..mesh.n_faces())
        .map(|face| {
            if face < n_int {
                f.face_value(mesh, face)
            } else if mesh.is_empty_face(face) {
                f.cells[mesh.owner()[face]]
            } else {
                f.boundary[face - n_int]
            }
        })
        .collect()
}

/// Green–Gauss gradient `(1/Ω) Σ_f φ_f S_f`.
pub fn green_gauss_gradient<T: FieldValue>(mesh: &Mesh, f: &CellField<T>) -> Vec<T::Grad> {
    let mut g = vec![T::grad_zero(); mesh.n_cells()];
    let owner = mesh.owner();
    let neighbour = mesh.neighbour();
    for face in 0..mesh.n_faces() {
        if mesh.is_empty_face(face) {
            continue;
        }
        let contrib = f.face_value(mesh, face).outer(&mesh.face_area(face));
        g[owner[face]] += contrib;
        if face < neighbour.len() {
            g[neighbour[face]] += contrib * -1.0;
        }
    }
    for (c, gc) in g.iter_mut().enumerate() {
        *gc = *gc * (1.0 / mesh.cell_volume(c));
    }
    g
}

/// Volume-normalised divergence of a face flux, `(1/Ω) Σ_f ±φ_f`.
pub fn divergence(mesh: &Mesh, flux: &[f64]) -> Vec<f64> {
    let mut d = vec![0.0; mesh.n_cells()];
    let owner = mesh.owner();
    let neighbour = mesh.neighbour();
    for face in 0..mesh.n_faces() {
        if mesh.is_empty_face(face) {
            continue;
        }
        d[owner[face]] += flux[face];
        if face < neighbour.len() {
            d[neighbour[face]] -= flux[face];
        }
    }
    for (c, v) in d.iter_mut().enumerate() {
        *v /= mesh.cell_volume(c);
    }
    d
}

/// Face flux `u_f · S_f` from interpolated velocity; zero on empty faces.
pub fn face_flux(mesh: &Mesh, u: &CellField<Vec3>) -> Vec<f64> {
    (0..mesh.n_faces())
        .map(|face| {
            if mesh.is_empty_face(face) {
                0.0
            } else {
                u.face_value(mesh, face).dot(&mesh.face_area(face))
            }
        })
        .collect()
}

/// Face-normal gradient times area, `(∇φ)_f · S_f`, with the orthogonal
/// two-point part and the explicit non-orthogonal correction `k · (∇φ)_f`.
/// `grad` is the cell gradient used for the correction.
pub fn face_normal_gradient<T: FieldValue>(
    mesh: &Mesh,
    f: &CellField<T>,
    grad: &[T::Grad],
    face: usize,
) -> T {
    let o = mesh.owner()[face];
    let dc = mesh.delta_coeff(face);
    let k = mesh.non_orthogonal_vector(face);
    if mesh.is_internal(face) {
        let n = mesh.neighbour()[face];
        let w = mesh.interpolation_weight(face);
        let gf = grad[o] * w + grad[n] * (1.0 - w);
        (f.cells[n] - f.cells[o]) * dc + T::grad_dot(&gf, &k)
    } else {
        (f.boundary[mesh.boundary_slot(face)] - f.cells[o]) * dc + T::grad_dot(&grad[o], &k)
    }
}

/// Volume-averaged Laplacian `(1/Ω) Σ_f (∇φ)_f · S_f`.
pub fn laplacian<T: FieldValue>(mesh: &Mesh, f: &CellField<T>) -> Vec<T> {
    let grad = if mesh.is_non_orthogonal() {
        green_gauss_gradient(mesh, f)
    } else {
        vec![T::grad_zero(); mesh.n_cells()]
    };
    let mut out = vec![T::zero(); mesh.n_cells()];
    let owner = mesh.owner();
    let neighbour = mesh.neighbour();
    for face in 0..mesh.n_faces() {
        if mesh.is_empty_face(face) {
            continue;
        }
        let g = face_normal_gradient(mesh, f, &grad, face);
        out[owner[face]] += g;
        if face < neighbour.len() {
            out[neighbour[face]] -= g;
        }
    }
    for (c, v) in out.iter_mut().enumerate() {
        *v = *v * (1.0 / mesh.cell_volume(c));
    }
    out
}

/// Volume-averaged convection `(1/Ω) Σ_f F_f φ_f` of `f` by the face flux `flux`.
pub fn convection<T: FieldValue>(mesh: &Mesh, f: &CellField<T>, flux: &[f64]) -> Vec<T> {
    let mut out = vec![T::zero(); mesh.n_cells()];
    let owner = mesh.owner();
    let neighbour = mesh.neighbour();
    for face in 0..mesh.n_faces() {
        if mesh.is_empty_face(face) {
            continue;
        }
        let v = f.face_value(mesh, face) * flux[face];
        out[owner[face]] += v;
        if face < neighbour.len() {
            out[neighbour[face]] -= v;
        }
    }
    for (c, v) in out.iter_mut().enumerate() {
        *v = *v * (1.0 / mesh.cell_volume(c));
    }
    out
}

/// Curl of a vector field from its Jacobian `(i,j) = ∂u_i/∂x_j`.
pub fn curl(j: &nalgebra::Matrix3<f64>) -> Vec3 {
    Vec3::new(j[(2, 1)] - j[(1, 2)], j[(0, 2)] - j[(2, 0)], j[(1, 0)] - j[(0, 1)])
}

/// Volume-weighted inner product `Σ Ω_i a_i · b_i`.
pub fn weighted_dot<T: FieldValue>(mesh: &Mesh, a: &[T], b: &[T]) -> f64 {
    a.iter()
        .zip(b)
        .zip(mesh.cell_volumes())
        .map(|((x, y), w)| w * x.inner(*y))
        .sum()
}

/// `max_i |v_i|`.
pub fn max_abs(v: &[f64]) -> f64 {
    v.iter().fold(0.0f64, |m, x| m.max(x.abs()))
}
