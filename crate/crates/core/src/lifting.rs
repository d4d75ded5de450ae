//! Divergence-free lifting fields carrying the inflow data, and
//! homogenization of velocity snapshots.
//!
//! The lifting field is the solution of one generalized Stokes problem
//! `χ - α_l² Δχ + ∇λ = 0`, `∇·χ = 0` with the unit-amplitude inflow profile
//! on the inflow patches and zero on the other Dirichlet patches. It is
//! computed with the filter solver, so its face flux is discretely
//! divergence-free on any mesh.

use crate::error::{Error, Result};
use crate::fom::{filter_step, FilterCache, FilterReport, FlowBoundary, SolverControls, VelocityBc};
use crate::mesh::{Mesh, PatchKind, Vec3};
use crate::pod::{FieldLayout, SnapshotMatrix, SnapshotSet};
use crate::fvops::CellField;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LiftingOptions {
    /// Radius `α_l` of the auxiliary Stokes problem.
    pub alpha: f64,
    pub max_outer: usize,
    pub tol: f64,
}

impl Default for LiftingOptions {
    fn default() -> Self {
        LiftingOptions { alpha: 0.01, max_outer: 500, tol: 1e-9 }
    }
}

/// One lifting function `χ` with its face flux.
#[derive(Debug, Clone, PartialEq)]
pub struct Lifting {
    pub field: CellField<Vec3>,
    pub flux: Vec<f64>,
    pub report: FilterReport,
}

impl Lifting {
    /// `χ` in the velocity snapshot layout.
    pub fn column(&self, mesh: &Mesh) -> Vec<f64> {
        FieldLayout::velocity(mesh).pack_velocity(&self.field, &self.flux)
    }
}

pub fn build_lifting(mesh: &Mesh, bc: &FlowBoundary, opts: &LiftingOptions) -> Result<Lifting> {
    bc.check(mesh)?;
    let has_inflow = bc
        .patches
        .iter()
        .zip(mesh.patches())
        .any(|(b, p)| p.kind != PatchKind::Empty && b.velocity == VelocityBc::Inflow);
    if !has_inflow {
        return Err(Error::config_key("boundary", "lifting needs at least one inflow patch"));
    }
    let mut chi = bc.new_velocity(mesh);
    bc.apply_velocity_scaled(mesh, &mut chi, 1.0);
    let mut lambda = bc.new_pressure(mesh);
    for v in lambda.boundary.iter_mut() {
        *v = 0.0;
    }
    let zeros = vec![Vec3::zeros(); mesh.n_cells()];
    let zero_flux = vec![0.0; mesh.n_faces()];
    let controls = SolverControls {
        filter_tol: opts.tol,
        filter_max_outer: opts.max_outer,
        ..SolverControls::default()
    };
    let mut cache = FilterCache::default();
    let (flux, report) = filter_step(
        mesh,
        1.0,
        opts.alpha * opts.alpha,
        1.0,
        &zeros,
        &zero_flux,
        &mut chi,
        &mut lambda,
        &controls,
        &mut cache,
    )?;
    Ok(Lifting { field: chi, flux, report })
}

/// `s - a χ` over every entry of the column (cells, boundary values, fluxes).
pub fn homogenize(column: &[f64], lifting: &[f64], amplitude: f64) -> Vec<f64> {
    assert_eq!(column.len(), lifting.len());
    column.iter().zip(lifting).map(|(s, c)| s - amplitude * c).collect()
}

/// `s + a χ`, the inverse of [`homogenize`].
pub fn reapply_lifting(column: &[f64], lifting: &[f64], amplitude: f64) -> Vec<f64> {
    assert_eq!(column.len(), lifting.len());
    column.iter().zip(lifting).map(|(s, c)| s + amplitude * c).collect()
}

fn homogenize_matrix(m: &SnapshotMatrix, lifting: &[f64], amplitudes: &[f64]) -> SnapshotMatrix {
    let cols: Vec<Vec<f64>> = (0..m.n_snapshots())
        .map(|j| homogenize(m.column(j), lifting, amplitudes[j]))
        .collect();
    SnapshotMatrix::from_columns(m.layout, &cols)
}

/// Subtracts `amplitude_j χ` from every velocity column (`v` and `u`);
/// pressures are left untouched.
pub fn homogenize_set(set: &SnapshotSet, lifting: &[f64]) -> Result<SnapshotSet> {
    set.check()?;
    if lifting.len() != set.v.layout.len() {
        return Err(Error::Dimension(format!(
            "lifting column has {} entries, velocity snapshots {}",
            lifting.len(),
            set.v.layout.len()
        )));
    }
    Ok(SnapshotSet {
        v: homogenize_matrix(&set.v, lifting, &set.amplitudes),
        u: homogenize_matrix(&set.u, lifting, &set.amplitudes),
        ..set.clone()
    })
}

/// Largest absolute value of a velocity column on Dirichlet boundary faces.
pub fn dirichlet_trace(mesh: &Mesh, bc: &FlowBoundary, column: &[f64]) -> f64 {
    let layout = FieldLayout::velocity(mesh);
    let n_int = mesh.n_internal_faces();
    let mut m = 0.0f64;
    for (p, b) in mesh.patches().iter().zip(&bc.patches) {
        if p.kind == PatchKind::Empty || b.velocity == VelocityBc::ZeroGradient {
            continue;
        }
        for f in p.faces() {
            let k = 3 * (layout.n_cells + f - n_int);
            for c in &column[k..k + 3] {
                m = m.max(c.abs());
            }
        }
    }
    m
}
