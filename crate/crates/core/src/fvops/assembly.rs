//! Implicit operator assembly. Rows are integrated over the cell (not divided
//! by the volume). Boundary faces are eliminated through the affine relation
//! `φ_b = a φ_P + b` of their boundary condition; the constant part goes to
//! the right-hand side.

use super::field::{normal_distance, CellField, FieldValue};
use super::ldu::LduMatrix;
use super::ops::green_gauss_gradient;
use crate::mesh::Mesh;

/// Adds `coeff * Ω_P` to every diagonal entry (time derivative).
pub fn add_temporal(mesh: &Mesh, coeff: f64, m: &mut LduMatrix) {
    for (d, v) in m.diag.iter_mut().zip(mesh.cell_volumes()) {
        *d += coeff * v;
    }
}

/// Central-differencing convection `ρ Σ_f F_f φ_f` with frozen face flux `flux`.
///
/// The Dirichlet/Neumann data comes from the boundary values and conditions
/// of `field`.
pub fn assemble_convection<T: FieldValue>(
    mesh: &Mesh,
    rho: f64,
    flux: &[f64],
    field: &CellField<T>,
    m: &mut LduMatrix,
    rhs: &mut [T],
) {
    let n_int = mesh.n_internal_faces();
    let owner = mesh.owner();
    for f in 0..n_int {
        let w = mesh.interpolation_weight(f);
        let rf = rho * flux[f];
        m.diag[owner[f]] += rf * w;
        m.upper[f] += rf * (1.0 - w);
        m.diag[mesh.neighbour()[f]] -= rf * (1.0 - w);
        m.lower[f] -= rf * w;
    }
    for f in n_int..mesh.n_faces() {
        if mesh.is_empty_face(f) {
            continue;
        }
        let bc = field.bc_of_face(mesh, f);
        let (a, b) = bc.affine(field.boundary[f - n_int], normal_distance(mesh, f));
        let rf = rho * flux[f];
        m.diag[owner[f]] += rf * a;
        rhs[owner[f]] -= b * rf;
    }
}

/// Linear interpolation of a cell viscosity to faces; boundary faces take
/// the owner value.
pub fn interpolate_viscosity(mesh: &Mesh, cell_values: &[f64]) -> Vec<f64> {
    (0..mesh.n_faces())
        .map(|f| {
            let o = cell_values[mesh.owner()[f]];
            if mesh.is_internal(f) {
                let w = mesh.interpolation_weight(f);
                w * o + (1.0 - w) * cell_values[mesh.neighbour()[f]]
            } else {
                o
            }
        })
        .collect()
}

/// Diffusion operator `-Σ_f Γ_f (∇φ)_f · S_f` (positive semi-definite sign
/// convention). The orthogonal two-point part is implicit; the non-orthogonal
/// remainder `Γ_f k_f · (∇φ)_f` is evaluated from the current cell values of
/// `field` and added to the right-hand side (deferred correction).
pub fn assemble_diffusion<T: FieldValue>(
    mesh: &Mesh,
    gamma: &[f64],
    field: &CellField<T>,
    m: &mut LduMatrix,
    rhs: &mut [T],
) {
    let n_int = mesh.n_internal_faces();
    let owner = mesh.owner();
    let grad = if mesh.is_non_orthogonal() {
        Some(green_gauss_gradient(mesh, field))
    } else {
        None
    };
    for f in 0..n_int {
        let n = mesh.neighbour()[f];
        let c = gamma[f] * mesh.delta_coeff(f);
        m.diag[owner[f]] += c;
        m.diag[n] += c;
        m.upper[f] -= c;
        m.lower[f] -= c;
        if let Some(g) = &grad {
            let w = mesh.interpolation_weight(f);
            let gf = g[owner[f]] * w + g[n] * (1.0 - w);
            let corr = T::grad_dot(&gf, &mesh.non_orthogonal_vector(f)) * gamma[f];
            rhs[owner[f]] += corr;
            rhs[n] -= corr;
        }
    }
    for f in n_int..mesh.n_faces() {
        if mesh.is_empty_face(f) {
            continue;
        }
        let bc = field.bc_of_face(mesh, f);
        let (a, b) = bc.affine(field.boundary[f - n_int], normal_distance(mesh, f));
        let c = gamma[f] * mesh.delta_coeff(f);
        m.diag[owner[f]] += c * (1.0 - a);
        rhs[owner[f]] += b * c;
        if let Some(g) = &grad {
            rhs[owner[f]] += T::grad_dot(&g[owner[f]], &mesh.non_orthogonal_vector(f)) * gamma[f];
        }
    }
}
