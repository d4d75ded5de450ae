//! Pieces shared by the PISO and SIMPLEC loops: momentum assembly, the
//! off-diagonal operator `H`, face interpolation of `Ω/a_P`-type
//! coefficients and the pressure equation.

use crate::error::{Result, SolverError};
use crate::fvops::{
    add_temporal, assemble_convection, assemble_diffusion, bicgstab, green_gauss_gradient, pcg,
    remove_weighted_mean, BoundaryCondition, CellField, LduMatrix, Preconditioner,
    ProfileCholesky, SolveReport, SolverSettings,
};
use crate::mesh::{Mesh, Vec3};

/// Momentum matrix and its boundary/deferred-correction right-hand side
/// (no source, no pressure gradient).
pub(crate) struct Momentum {
    pub matrix: LduMatrix,
    pub rhs_bc: Vec<Vec3>,
}

/// `temporal Ω + ρ conv(flux) + diffusion(gamma)` for the vector field `u`.
pub(crate) fn assemble_momentum(
    mesh: &Mesh,
    u: &CellField<Vec3>,
    temporal: f64,
    convection: Option<(f64, &[f64])>,
    gamma: f64,
) -> Momentum {
    let mut matrix = LduMatrix::zeros(mesh);
    let mut rhs_bc = vec![Vec3::zeros(); mesh.n_cells()];
    add_temporal(mesh, temporal, &mut matrix);
    if let Some((rho, flux)) = convection {
        assemble_convection(mesh, rho, flux, u, &mut matrix, &mut rhs_bc);
    }
    if gamma != 0.0 {
        let g = vec![gamma; mesh.n_faces()];
        assemble_diffusion(mesh, &g, u, &mut matrix, &mut rhs_bc);
    }
    Momentum { matrix, rhs_bc }
}

/// `rhs_bc - Σ_N a_PN u_N`.
pub(crate) fn h_rest(m: &Momentum, u: &[Vec3]) -> Vec<Vec3> {
    let a = &m.matrix;
    let mut h = m.rhs_bc.clone();
    for f in 0..a.upper.len() {
        let (o, n) = (a.owner()[f], a.neighbour()[f]);
        h[o] -= u[n] * a.upper[f];
        h[n] -= u[o] * a.lower[f];
    }
    h
}

/// Solves `A x_k = b_k` for the three components, starting from `x`.
pub(crate) fn solve_vector(
    a: &LduMatrix,
    b: &[Vec3],
    x: &mut [Vec3],
    rtol: f64,
    max_iter: usize,
    chol: Option<&ProfileCholesky>,
) -> std::result::Result<usize, SolverError> {
    let mut iters = 0;
    let settings = SolverSettings { max_iter, ..SolverSettings::bicgstab(rtol) };
    for k in 0..3 {
        let bk: Vec<f64> = b.iter().map(|v| v[k]).collect();
        let mut xk: Vec<f64> = x.iter().map(|v| v[k]).collect();
        let rep = match chol {
            Some(l) => pcg(a, &bk, &mut xk, &settings, &Preconditioner::Cholesky(l))?,
            None => bicgstab(a, &bk, &mut xk, &settings)?,
        };
        iters += rep.iterations;
        for (v, xv) in x.iter_mut().zip(xk) {
            v[k] = xv;
        }
    }
    Ok(iters)
}

/// Linear interpolation of a cell coefficient to faces; boundary faces take
/// the owner value.
pub(crate) fn face_coefficient(mesh: &Mesh, c: &[f64]) -> Vec<f64> {
    let owner = mesh.owner();
    (0..mesh.n_faces())
        .map(|f| {
            if mesh.is_internal(f) {
                let w = mesh.interpolation_weight(f);
                w * c[owner[f]] + (1.0 - w) * c[mesh.neighbour()[f]]
            } else {
                c[owner[f]]
            }
        })
        .collect()
}

/// Face flux of a cell vector field `w` by linear interpolation on internal
/// faces; boundary faces are left at zero for the caller to fill.
pub(crate) fn interpolated_flux(mesh: &Mesh, w: &[Vec3]) -> Vec<f64> {
    let n_int = mesh.n_internal_faces();
    let mut phi = vec![0.0; mesh.n_faces()];
    for (f, p) in phi.iter_mut().enumerate().take(n_int) {
        let wt = mesh.interpolation_weight(f);
        let v = w[mesh.owner()[f]] * wt + w[mesh.neighbour()[f]] * (1.0 - wt);
        *p = v.dot(&mesh.face_area(f));
    }
    phi
}

pub(crate) struct PressureSolve {
    pub flux: Vec<f64>,
    pub report: SolveReport,
}

/// Pressure equation `Σ_f r_f Δ_f (q_P - q_N) = -Σ_f φ_f` and the flux
/// correction `φ = φ_HbyA - r_f Δ_f (q_N - q_P)`.
///
/// `r` holds the face values of `Ω/a_P` (or its SIMPLEC counterpart).
/// Boundary faces with a Dirichlet pressure take part through their
/// boundary value; all others keep `φ_HbyA`. The solve is direct through a
/// profile Cholesky factor (refined by PCG to `rtol`); without a Dirichlet
/// face the constant nullspace is removed under volume weights.
///
/// `cache` keeps the Cholesky factor between calls when the coefficients
/// `r` do not change; pass `None` to factor afresh.
pub(crate) fn solve_pressure(
    mesh: &Mesh,
    r: &[f64],
    phi_hbya: &[f64],
    q: &mut CellField<f64>,
    rtol: f64,
    max_iter: usize,
    cache: Option<&mut Option<ProfileCholesky>>,
) -> Result<PressureSolve> {
    let n_int = mesh.n_internal_faces();
    let owner = mesh.owner();
    let neighbour = mesh.neighbour();
    let mut m = LduMatrix::zeros(mesh);
    let mut rhs = vec![0.0; mesh.n_cells()];
    let mut anchored = false;
    for f in 0..n_int {
        let c = r[f] * mesh.delta_coeff(f);
        let (o, n) = (owner[f], neighbour[f]);
        m.diag[o] += c;
        m.diag[n] += c;
        m.upper[f] -= c;
        m.lower[f] -= c;
        rhs[o] -= phi_hbya[f];
        rhs[n] += phi_hbya[f];
    }
    for f in n_int..mesh.n_faces() {
        if mesh.is_empty_face(f) {
            continue;
        }
        let o = owner[f];
        rhs[o] -= phi_hbya[f];
        if q.bc_of_face(mesh, f).is_dirichlet() {
            let c = r[f] * mesh.delta_coeff(f);
            m.diag[o] += c;
            rhs[o] += c * q.boundary[f - n_int];
            anchored = true;
        }
    }
    if !anchored {
        let mean = rhs.iter().sum::<f64>() / rhs.len() as f64;
        rhs.iter_mut().for_each(|v| *v -= mean);
    }
    let settings = SolverSettings { max_iter, ..SolverSettings::cg(rtol) };
    let mut x = q.cells.clone();
    let report = if anchored {
        let mut local = None;
        let slot = cache.unwrap_or(&mut local);
        if slot.is_none() {
            *slot = ProfileCholesky::factor(&m).ok();
        }
        match slot.as_ref() {
            Some(l) => pcg(&m, &rhs, &mut x, &settings, &Preconditioner::Cholesky(l))?,
            None => pcg(&m, &rhs, &mut x, &settings, &Preconditioner::Jacobi)?,
        }
    } else {
        let rep = pcg(&m, &rhs, &mut x, &settings, &Preconditioner::Jacobi)?;
        remove_weighted_mean(&mut x, Some(mesh.cell_volumes()));
        rep
    };
    q.cells = x;
    let mut flux = phi_hbya.to_vec();
    for f in 0..n_int {
        let c = r[f] * mesh.delta_coeff(f);
        flux[f] -= c * (q.cells[neighbour[f]] - q.cells[owner[f]]);
    }
    for f in n_int..mesh.n_faces() {
        if mesh.is_empty_face(f) {
            flux[f] = 0.0;
        } else if q.bc_of_face(mesh, f).is_dirichlet() {
            let c = r[f] * mesh.delta_coeff(f);
            flux[f] -= c * (q.boundary[f - n_int] - q.cells[owner[f]]);
        }
    }
    q.update_boundary(mesh);
    Ok(PressureSolve { flux, report })
}

/// Volume-integrated pressure gradient `Ω ∇q` (Green–Gauss).
pub(crate) fn integrated_gradient(mesh: &Mesh, q: &CellField<f64>) -> Vec<Vec3> {
    green_gauss_gradient(mesh, q)
        .into_iter()
        .zip(mesh.cell_volumes())
        .map(|(g, v)| g * *v)
        .collect()
}

/// True for non-empty boundary faces whose velocity is not prescribed.
pub(crate) fn is_open_face(mesh: &Mesh, u: &CellField<Vec3>, f: usize) -> bool {
    !mesh.is_internal(f)
        && !mesh.is_empty_face(f)
        && !matches!(u.bc_of_face(mesh, f), BoundaryCondition::Dirichlet)
}

/// Maximum of `|div φ|` (volume normalised) over the cells.
pub fn max_divergence(mesh: &Mesh, flux: &[f64]) -> f64 {
    crate::fvops::max_abs(&crate::fvops::divergence(mesh, flux))
}

/// Largest cell Courant number `½ Δt Σ_f |φ_f| / Ω`.
pub fn max_courant(mesh: &Mesh, flux: &[f64], dt: f64) -> f64 {
    let mut s = vec![0.0; mesh.n_cells()];
    for f in 0..mesh.n_faces() {
        if mesh.is_empty_face(f) {
            continue;
        }
        s[mesh.owner()[f]] += flux[f].abs();
        if mesh.is_internal(f) {
            s[mesh.neighbour()[f]] += flux[f].abs();
        }
    }
    s.iter()
        .zip(mesh.cell_volumes())
        .map(|(a, v)| 0.5 * dt * a / v)
        .fold(0.0, f64::max)
}
