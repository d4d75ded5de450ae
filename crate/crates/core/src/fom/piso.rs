//! PISO solve of the BDF momentum/continuity system (the evolve step).

use super::coupling::{
    assemble_momentum, face_coefficient, h_rest, integrated_gradient, interpolated_flux,
    is_open_face, max_divergence, solve_pressure, solve_vector,
};
use super::{Bdf, FluidProperties, SolverControls};
use crate::error::Result;
use crate::fvops::CellField;
use crate::mesh::{Mesh, Vec3};

/// Explicit data of one evolve step.
pub struct EvolveInput<'a> {
    pub props: FluidProperties,
    pub dt: f64,
    pub bdf: Bdf,
    /// History of the field that feeds the time derivative, levels n and n-1,
    /// with its conservative face fluxes.
    pub history: [&'a [Vec3]; 2],
    pub history_flux: [&'a [f64]; 2],
    /// Convecting face flux `φ*`.
    pub convecting_flux: &'a [f64],
    pub convection: bool,
    pub controls: &'a SolverControls,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EvolveReport {
    pub momentum_iterations: usize,
    pub pressure_iterations: usize,
    pub divergence: f64,
}

/// One PISO step. `v` enters with the previous solution as initial guess and
/// its Dirichlet values already set to time `t^{n+1}`; `q` enters with the
/// previous pressure. Returns the conservative face flux of `v^{n+1}`.
pub fn evolve_step(
    mesh: &Mesh,
    inp: &EvolveInput,
    v: &mut CellField<Vec3>,
    q: &mut CellField<f64>,
) -> Result<(Vec<f64>, EvolveReport)> {
    let rho = inp.props.rho;
    let Bdf { c0, c1, c2 } = inp.bdf;
    let dt = inp.dt;
    let conv = inp.convection.then_some((rho, inp.convecting_flux));
    let m = assemble_momentum(mesh, v, rho * c0 / dt, conv, 2.0 * inp.props.mu);

    let vol = mesh.cell_volumes();
    let [xn, xo] = inp.history;
    let source: Vec<Vec3> = (0..mesh.n_cells())
        .map(|i| (xn[i] * c1 - xo[i] * c2) * (rho * vol[i] / dt))
        .collect();

    // Momentum predictor with the old pressure gradient.
    let gq = integrated_gradient(mesh, q);
    let b: Vec<Vec3> = (0..mesh.n_cells()).map(|i| m.rhs_bc[i] + source[i] - gq[i]).collect();
    let ctl = inp.controls;
    let momentum_iterations =
        solve_vector(&m.matrix, &b, &mut v.cells, ctl.momentum_rtol, ctl.max_iter, None)?;
    v.update_boundary(mesh);

    let a_p = &m.matrix.diag;
    let rau: Vec<f64> = vol.iter().zip(a_p).map(|(o, a)| o / a).collect();
    let rau_f = face_coefficient(mesh, &rau);
    let [fxn, fxo] = inp.history_flux;
    let ddt_flux: Vec<f64> = fxn.iter().zip(fxo).map(|(a, b)| (c1 * a - c2 * b) / dt).collect();

    let n_int = mesh.n_internal_faces();
    let mut flux = vec![0.0; mesh.n_faces()];
    let mut pressure_iterations = 0;
    for _ in 0..ctl.n_correctors.max(1) {
        let h = h_rest(&m, &v.cells);
        let hr: Vec<Vec3> = h.iter().zip(a_p).map(|(h, a)| *h / *a).collect();
        let mut phi = interpolated_flux(mesh, &hr);
        for f in 0..n_int {
            phi[f] += rho * rau_f[f] * ddt_flux[f];
        }
        for f in n_int..mesh.n_faces() {
            if mesh.is_empty_face(f) {
                continue;
            }
            let s = mesh.face_area(f);
            phi[f] = if is_open_face(mesh, v, f) {
                let o = mesh.owner()[f];
                hr[o].dot(&s) + rho * rau[o] * ddt_flux[f]
            } else {
                v.boundary[f - n_int].dot(&s)
            };
        }
        let ps = solve_pressure(mesh, &rau_f, &phi, q, ctl.pressure_rtol, ctl.max_iter, None)?;
        pressure_iterations += ps.report.iterations;
        flux = ps.flux;
        let gq = integrated_gradient(mesh, q);
        for i in 0..mesh.n_cells() {
            v.cells[i] = (h[i] + source[i] - gq[i]) / a_p[i];
        }
        v.update_boundary(mesh);
    }
    let divergence = max_divergence(mesh, &flux);
    Ok((flux, EvolveReport { momentum_iterations, pressure_iterations, divergence }))
}
