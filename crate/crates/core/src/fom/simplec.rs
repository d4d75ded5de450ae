//! SIMPLEC solve of the generalized Stokes problem
//! `(ρ/Δt) u - μ̄ Δu + ∇q̄ = (ρ/Δt) v`, `∇·u = 0` (the filter step).

use super::coupling::{
    assemble_momentum, face_coefficient, h_rest, integrated_gradient, interpolated_flux,
    is_open_face, max_divergence, solve_pressure, solve_vector,
};
use super::SolverControls;
use crate::error::Result;
use crate::fvops::{CellField, ProfileCholesky};
use crate::mesh::{Mesh, Vec3};

/// Factorisations reused across outer iterations and time steps. The filter
/// matrix depends only on `ρ/Δt`, `μ̄` and the boundary condition types.
#[derive(Debug, Default, Clone)]
pub struct FilterCache {
    key: Option<(f64, f64)>,
    momentum: Option<ProfileCholesky>,
    pressure: Option<ProfileCholesky>,
}

impl FilterCache {
    fn prepare(&mut self, temporal: f64, mu_bar: f64) {
        if self.key != Some((temporal, mu_bar)) {
            *self = FilterCache { key: Some((temporal, mu_bar)), ..Default::default() };
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FilterReport {
    pub outer_iterations: usize,
    /// Relative momentum residual at exit.
    pub residual: f64,
    pub converged: bool,
    pub divergence: f64,
}

fn norm3(v: &[Vec3]) -> f64 {
    v.iter().map(|x| x.norm_squared()).sum::<f64>().sqrt()
}

/// One filter solve. `u` enters with an initial guess and its Dirichlet
/// values set; `qbar` with the previous auxiliary pressure (its Dirichlet
/// values set). `v` and `phi_v` are the field being filtered and its
/// conservative flux. Returns the conservative flux of `u`.
///
/// Outer iterations stop when the momentum residual at the start of an
/// iteration is at most `controls.filter_tol` relative to the right-hand
/// side; reaching `controls.filter_max_outer` is reported, not an error.
#[allow(clippy::too_many_arguments)]
pub fn filter_step(
    mesh: &Mesh,
    rho: f64,
    mu_bar: f64,
    dt: f64,
    v: &[Vec3],
    phi_v: &[f64],
    u: &mut CellField<Vec3>,
    qbar: &mut CellField<f64>,
    controls: &SolverControls,
    cache: &mut FilterCache,
) -> Result<(Vec<f64>, FilterReport)> {
    let temporal = rho / dt;
    cache.prepare(temporal, mu_bar);
    let mut m = assemble_momentum(mesh, u, temporal, None, mu_bar);
    if cache.momentum.is_none() {
        cache.momentum = ProfileCholesky::factor(&m.matrix).ok();
    }
    let vol = mesh.cell_volumes();
    let n = mesh.n_cells();
    let n_int = mesh.n_internal_faces();
    let source: Vec<Vec3> = (0..n).map(|i| v[i] * (temporal * vol[i])).collect();

    let a_p = m.matrix.diag.clone();
    let off = m.matrix.off_diagonal_sum();
    let rau: Vec<f64> = vol.iter().zip(&a_p).map(|(o, a)| o / a).collect();
    let ratu: Vec<f64> = (0..n).map(|i| vol[i] / (a_p[i] + off[i])).collect();
    let rau_f = face_coefficient(mesh, &rau);
    let ratu_f = face_coefficient(mesh, &ratu);

    let mut flux = phi_v.to_vec();
    let mut report = FilterReport { outer_iterations: 0, residual: f64::NAN, converged: false, divergence: 0.0 };
    let mut r = vec![Vec3::zeros(); n];
    for it in 0..=controls.filter_max_outer {
        if it > 0 && mesh.is_non_orthogonal() {
            m = assemble_momentum(mesh, u, temporal, None, mu_bar);
        }
        let gq = integrated_gradient(mesh, qbar);
        let b: Vec<Vec3> = (0..n).map(|i| m.rhs_bc[i] + source[i] - gq[i]).collect();
        if it > 0 {
            for k in 0..3 {
                let xk: Vec<f64> = u.cells.iter().map(|x| x[k]).collect();
                let ax = m.matrix.apply(&xk);
                for i in 0..n {
                    r[i][k] = b[i][k] - ax[i];
                }
            }
            let bn = norm3(&b);
            let rn = norm3(&r);
            report.residual = if bn > 0.0 { rn / bn } else if rn == 0.0 { 0.0 } else { f64::INFINITY };
            if report.residual <= controls.filter_tol {
                report.converged = true;
                break;
            }
            if it == controls.filter_max_outer {
                break;
            }
        }
        report.outer_iterations = it + 1;

        solve_vector(
            &m.matrix,
            &b,
            &mut u.cells,
            controls.momentum_rtol,
            controls.max_iter,
            cache.momentum.as_ref(),
        )?;
        u.update_boundary(mesh);

        let h = h_rest(&m, &u.cells);
        let hr: Vec<Vec3> = h.iter().zip(&a_p).map(|(h, a)| *h / *a).collect();
        let mut hbya: Vec<Vec3> = (0..n)
            .map(|i| (h[i] + source[i]) / a_p[i] - gq[i] * ((rau[i] - ratu[i]) / vol[i]))
            .collect();
        let mut phi = interpolated_flux(mesh, &hr);
        for f in 0..n_int {
            let (o, nb) = (mesh.owner()[f], mesh.neighbour()[f]);
            phi[f] += temporal * rau_f[f] * phi_v[f]
                + (ratu_f[f] - rau_f[f]) * mesh.delta_coeff(f) * (qbar.cells[nb] - qbar.cells[o]);
        }
        for f in n_int..mesh.n_faces() {
            if mesh.is_empty_face(f) {
                continue;
            }
            let s = mesh.face_area(f);
            phi[f] = if is_open_face(mesh, u, f) {
                let o = mesh.owner()[f];
                hr[o].dot(&s)
                    + temporal * rau[o] * phi_v[f]
                    + (ratu[o] - rau[o]) * mesh.delta_coeff(f) * (qbar.boundary[f - n_int] - qbar.cells[o])
            } else {
                u.boundary[f - n_int].dot(&s)
            };
        }
        let ps = solve_pressure(
            mesh,
            &ratu_f,
            &phi,
            qbar,
            controls.pressure_rtol,
            controls.max_iter,
            Some(&mut cache.pressure),
        )?;
        flux = ps.flux;
        let gq_new = integrated_gradient(mesh, qbar);
        for i in 0..n {
            hbya[i] -= gq_new[i] * (ratu[i] / vol[i]);
        }
        u.cells = hbya;
        u.update_boundary(mesh);
    }
    if !report.converged {
        log::warn!(
            "filter did not converge in {} outer iterations (residual {:.3e}, target {:.1e})",
            report.outer_iterations,
            report.residual,
            controls.filter_tol
        );
    }
    report.divergence = max_divergence(mesh, &flux);
    Ok((flux, report))
}
