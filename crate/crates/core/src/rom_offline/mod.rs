//! Galerkin projection of the finite-volume operators onto POD bases.
//!
//! Every entry is the volume-weighted inner product of a test mode with the
//! discrete operator applied to a trial mode, using the boundary values and
//! conservative fluxes stored in the mode columns. Homogenized velocity
//! modes vanish on Dirichlet faces; the inflow enters through the lifting
//! terms, which multiply the known amplitude online.
//!
//! Nothing here depends on time-level data or on `ρ`, `μ`, `α`, `Δt`; those
//! are recorded as metadata and used only by the online solver.

mod archive;
mod tensor;

pub use archive::{decode_operators, encode_operators, load_operators, save_operators, write_operators_csv};
pub use tensor::Tensor3;

use nalgebra::{DMatrix, DVector, Matrix3};

use crate::error::{Error, Result};
use crate::fom::FlowBoundary;
use crate::fvops::{
    convection, curl, divergence, face_flux, green_gauss_gradient, laplacian, weighted_dot, BoundaryCondition,
    CellField,
};
use crate::mesh::{Mesh, Vec3};
use crate::pod::{FieldLayout, PodBasis};

/// Mode matrices (one column per mode) of the four fields.
#[derive(Debug, Clone, PartialEq)]
pub struct ModeSet {
    pub v: DMatrix<f64>,
    pub u: DMatrix<f64>,
    pub q: DMatrix<f64>,
    pub qbar: DMatrix<f64>,
}

impl ModeSet {
    pub fn from_bases(v: &PodBasis, u: &PodBasis, q: &PodBasis, qbar: &PodBasis) -> Self {
        ModeSet { v: v.modes.clone(), u: u.modes.clone(), q: q.modes.clone(), qbar: qbar.modes.clone() }
    }

    pub fn ranks(&self) -> Ranks {
        Ranks { v: self.v.ncols(), u: self.u.ncols(), q: self.q.ncols(), qbar: self.qbar.ncols() }
    }

    fn check(&self, mesh: &Mesh) -> Result<()> {
        let vl = FieldLayout::velocity(mesh).len();
        let pl = FieldLayout::pressure(mesh).len();
        for (name, m, len) in [("v", &self.v, vl), ("u", &self.u, vl), ("q", &self.q, pl), ("qbar", &self.qbar, pl)] {
            if m.nrows() != len {
                return Err(Error::Dimension(format!(
                    "{name} modes have {} rows, the mesh layout needs {len}",
                    m.nrows()
                )));
            }
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Ranks {
    pub v: usize,
    pub u: usize,
    pub q: usize,
    pub qbar: usize,
}

/// Physical constants recorded with the operators (not used in assembly).
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct OperatorConstants {
    pub rho: f64,
    pub mu: f64,
    pub alpha: f64,
    pub dt: f64,
}

/// Projections involving the lifting function `χ`.
#[derive(Debug, Clone, PartialEq)]
pub struct LiftingTerms {
    /// `(φ_i, χ)`
    pub m_chi: DVector<f64>,
    /// `(φ̄_i, χ)`
    pub mbar_chi: DVector<f64>,
    /// `(φ_i, Δχ)`
    pub a_chi: DVector<f64>,
    /// `(φ̄_i, Δχ)`
    pub abar_chi: DVector<f64>,
    /// `(φ_i, ∇·(φ_j ⊗ χ))`: modes convected by `χ`.
    pub g_by_chi: DMatrix<f64>,
    /// `(φ_i, ∇·(χ ⊗ φ̄_k))`: `χ` convected by the filtered modes.
    pub g_of_chi: DMatrix<f64>,
    /// `(φ_i, ∇·(χ ⊗ χ))`
    pub g_chi: DVector<f64>,
    /// `(∇ψ_i, ∇·(φ_j ⊗ χ))`
    pub j_by_chi: DMatrix<f64>,
    /// `(∇ψ_i, ∇·(χ ⊗ φ̄_k))`
    pub j_of_chi: DMatrix<f64>,
    /// `(∇ψ_i, ∇·(χ ⊗ χ))`
    pub j_chi: DVector<f64>,
    /// `(n × ∇ψ_i, ∇ × χ)_∂Ω`
    pub n_chi: DVector<f64>,
    /// `(n × ∇ψ̄_i, ∇ × χ)_∂Ω`
    pub nbar_chi: DVector<f64>,
    /// `(ψ_i, n·χ)_∂Ω`
    pub f_chi: DVector<f64>,
    /// `(ψ_i, ∇·χ)`
    pub p_chi: DVector<f64>,
    /// `(ψ̄_i, ∇·χ)`
    pub pbar_chi: DVector<f64>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ReducedOperators {
    pub ranks: Ranks,
    pub constants: OperatorConstants,
    /// `(φ_i, φ_j)`
    pub m: DMatrix<f64>,
    /// `(φ_i, φ̄_j)`
    pub m_tilde: DMatrix<f64>,
    /// `(φ_i, Δφ_j)`
    pub a: DMatrix<f64>,
    /// `(φ_i, ∇ψ_j)`
    pub b: DMatrix<f64>,
    /// `(ψ_i, ∇·φ_j)`
    pub p: DMatrix<f64>,
    /// `(φ_i, ∇·(φ_j ⊗ φ̄_k))`
    pub g: Tensor3,
    /// `(∇ψ_i, ∇ψ_j)`
    pub d: DMatrix<f64>,
    /// `(n × ∇ψ_i, ∇ × φ_j)_∂Ω`
    pub n: DMatrix<f64>,
    /// `(ψ_i, n·φ_j)_∂Ω`
    pub f_v: DMatrix<f64>,
    /// `(ψ_i, n·φ̄_j)_∂Ω`
    pub f_u: DMatrix<f64>,
    /// `(∇ψ_i, ∇·(φ_j ⊗ φ̄_k))`
    pub j: Tensor3,
    pub m_bar: DMatrix<f64>,
    pub a_bar: DMatrix<f64>,
    pub b_bar: DMatrix<f64>,
    pub p_bar: DMatrix<f64>,
    pub d_bar: DMatrix<f64>,
    pub n_bar: DMatrix<f64>,
    pub lifting: Option<LiftingTerms>,
}

/// Boundary faces carrying the pressure Neumann condition (every
/// non-empty face whose pressure is not prescribed).
pub fn ppe_faces(mesh: &Mesh, bcs: &[BoundaryCondition<f64>]) -> Vec<usize> {
    let mut out = Vec::new();
    for (p, bc) in mesh.patches().iter().zip(bcs) {
        if matches!(bc, BoundaryCondition::Dirichlet | BoundaryCondition::Empty) || p.kind == crate::mesh::PatchKind::Empty {
            continue;
        }
        out.extend(p.faces());
    }
    out
}

/// Operator images of one velocity mode.
pub(crate) struct VelocityMode {
    pub field: CellField<Vec3>,
    pub flux: Vec<f64>,
    pub lap: Vec<Vec3>,
    /// Divergence of the interpolated (not the conservative) face flux.
    pub div: Vec<f64>,
    /// Owner-cell curl on each PPE face.
    pub curl_b: Vec<Vec3>,
}

impl VelocityMode {
    pub fn new(mesh: &Mesh, col: &[f64], bcs: &[BoundaryCondition<Vec3>], faces: &[usize]) -> Self {
        let (field, flux) = FieldLayout::velocity(mesh).unpack_velocity(col, bcs.to_vec());
        let lap = laplacian(mesh, &field);
        let div = divergence(mesh, &face_flux(mesh, &field));
        let jac: Vec<Matrix3<f64>> = green_gauss_gradient(mesh, &field);
        let curl_b = faces.iter().map(|&f| curl(&jac[mesh.owner()[f]])).collect();
        VelocityMode { field, flux, lap, div, curl_b }
    }
}

pub(crate) struct PressureMode {
    pub field: CellField<f64>,
    pub grad: Vec<Vec3>,
}

impl PressureMode {
    pub fn new(mesh: &Mesh, col: &[f64], bcs: &[BoundaryCondition<f64>]) -> Self {
        let field = FieldLayout::pressure(mesh).unpack_pressure(col, bcs.to_vec());
        let grad = green_gauss_gradient(mesh, &field);
        PressureMode { field, grad }
    }
}

fn columns(m: &DMatrix<f64>) -> impl Iterator<Item = &[f64]> {
    let n = m.nrows();
    (0..m.ncols()).map(move |j| &m.as_slice()[j * n..(j + 1) * n])
}

fn gram<A, B>(a: &[A], b: &[B], f: impl Fn(&A, &B) -> f64) -> DMatrix<f64> {
    DMatrix::from_fn(a.len(), b.len(), |i, j| f(&a[i], &b[j]))
}

/// `Σ_f (n × ∇ψ)·c |S|` over the PPE faces, with the owner-cell gradient.
fn boundary_curl_term(mesh: &Mesh, faces: &[usize], psi: &PressureMode, curl_b: &[Vec3]) -> f64 {
    faces
        .iter()
        .zip(curl_b)
        .map(|(&f, c)| {
            let s = mesh.face_area(f);
            let g = psi.grad[mesh.owner()[f]];
            s.cross(&g).dot(c)
        })
        .sum()
}

/// `Σ_f ψ_f (v_f · S_f)` over the PPE faces, with the stored face flux.
fn boundary_flux_term(mesh: &Mesh, faces: &[usize], psi: &PressureMode, flux: &[f64]) -> f64 {
    faces.iter().map(|&f| psi.field.boundary[mesh.boundary_slot(f)] * flux[f]).sum()
}

struct Side<'a> {
    vel: &'a [VelocityMode],
    pres: &'a [PressureMode],
}

fn side_matrices(mesh: &Mesh, s: &Side, faces: &[usize]) -> [DMatrix<f64>; 6] {
    let m = gram(s.vel, s.vel, |a, b| weighted_dot(mesh, &a.field.cells, &b.field.cells));
    let a = gram(s.vel, s.vel, |a, b| weighted_dot(mesh, &a.field.cells, &b.lap));
    let bm = gram(s.vel, s.pres, |a, p| weighted_dot(mesh, &a.field.cells, &p.grad));
    let p = gram(s.pres, s.vel, |p, a| weighted_dot(mesh, &p.field.cells, &a.div));
    let d = gram(s.pres, s.pres, |p, r| weighted_dot(mesh, &p.grad, &r.grad));
    let n = gram(s.pres, s.vel, |p, a| boundary_curl_term(mesh, faces, p, &a.curl_b));
    [m, a, bm, p, d, n]
}

/// Assembles every reduced operator. `lifting` is the lifting column in
/// the velocity layout, if the snapshots were homogenized.
pub fn assemble(
    mesh: &Mesh,
    bc: &FlowBoundary,
    modes: &ModeSet,
    lifting: Option<&[f64]>,
    constants: OperatorConstants,
) -> Result<ReducedOperators> {
    bc.check(mesh)?;
    modes.check(mesh)?;
    if let Some(l) = lifting {
        if l.len() != FieldLayout::velocity(mesh).len() {
            return Err(Error::Dimension(format!("lifting column has {} entries", l.len())));
        }
    }
    let vbcs = bc.velocity_bcs();
    let pbcs = bc.pressure_bcs();
    let faces = ppe_faces(mesh, &pbcs);

    let vel = |m: &DMatrix<f64>| -> Vec<VelocityMode> {
        columns(m).map(|c| VelocityMode::new(mesh, c, &vbcs, &faces)).collect()
    };
    let pres = |m: &DMatrix<f64>| -> Vec<PressureMode> { columns(m).map(|c| PressureMode::new(mesh, c, &pbcs)).collect() };
    let phi = vel(&modes.v);
    let phib = vel(&modes.u);
    let psi = pres(&modes.q);
    let psib = pres(&modes.qbar);

    let [m, a, b, p, d, n] = side_matrices(mesh, &Side { vel: &phi, pres: &psi }, &faces);
    let [m_bar, a_bar, b_bar, p_bar, d_bar, n_bar] = side_matrices(mesh, &Side { vel: &phib, pres: &psib }, &faces);
    let m_tilde = gram(&phi, &phib, |a, b| weighted_dot(mesh, &a.field.cells, &b.field.cells));
    let f_v = gram(&psi, &phi, |p, a| boundary_flux_term(mesh, &faces, p, &a.flux));
    let f_u = gram(&psi, &phib, |p, a| boundary_flux_term(mesh, &faces, p, &a.flux));

    let (nv, nu, nq) = (phi.len(), phib.len(), psi.len());
    let mut g = Tensor3::zeros([nv, nv, nu]);
    let mut j = Tensor3::zeros([nq, nv, nu]);
    for (jj, pj) in phi.iter().enumerate() {
        for (k, pk) in phib.iter().enumerate() {
            let c = convection(mesh, &pj.field, &pk.flux);
            for (i, pi) in phi.iter().enumerate() {
                g.set(i, jj, k, weighted_dot(mesh, &pi.field.cells, &c));
            }
            for (i, qi) in psi.iter().enumerate() {
                j.set(i, jj, k, weighted_dot(mesh, &qi.grad, &c));
            }
        }
    }

    let lifting = lifting.map(|col| {
        let chi = VelocityMode::new(mesh, col, &vbcs, &faces);
        let vec = |n: usize, f: &dyn Fn(usize) -> f64| DVector::from_fn(n, |i, _| f(i));
        let by_chi: Vec<Vec<Vec3>> = phi.iter().map(|pj| convection(mesh, &pj.field, &chi.flux)).collect();
        let of_chi: Vec<Vec<Vec3>> = phib.iter().map(|pk| convection(mesh, &chi.field, &pk.flux)).collect();
        let cc = convection(mesh, &chi.field, &chi.flux);
        LiftingTerms {
            m_chi: vec(nv, &|i| weighted_dot(mesh, &phi[i].field.cells, &chi.field.cells)),
            mbar_chi: vec(nu, &|i| weighted_dot(mesh, &phib[i].field.cells, &chi.field.cells)),
            a_chi: vec(nv, &|i| weighted_dot(mesh, &phi[i].field.cells, &chi.lap)),
            abar_chi: vec(nu, &|i| weighted_dot(mesh, &phib[i].field.cells, &chi.lap)),
            g_by_chi: DMatrix::from_fn(nv, nv, |i, j| weighted_dot(mesh, &phi[i].field.cells, &by_chi[j])),
            g_of_chi: DMatrix::from_fn(nv, nu, |i, k| weighted_dot(mesh, &phi[i].field.cells, &of_chi[k])),
            g_chi: vec(nv, &|i| weighted_dot(mesh, &phi[i].field.cells, &cc)),
            j_by_chi: DMatrix::from_fn(nq, nv, |i, j| weighted_dot(mesh, &psi[i].grad, &by_chi[j])),
            j_of_chi: DMatrix::from_fn(nq, nu, |i, k| weighted_dot(mesh, &psi[i].grad, &of_chi[k])),
            j_chi: vec(nq, &|i| weighted_dot(mesh, &psi[i].grad, &cc)),
            n_chi: vec(nq, &|i| boundary_curl_term(mesh, &faces, &psi[i], &chi.curl_b)),
            nbar_chi: vec(psib.len(), &|i| boundary_curl_term(mesh, &faces, &psib[i], &chi.curl_b)),
            f_chi: vec(nq, &|i| boundary_flux_term(mesh, &faces, &psi[i], &chi.flux)),
            p_chi: vec(nq, &|i| weighted_dot(mesh, &psi[i].field.cells, &chi.div)),
            pbar_chi: vec(psib.len(), &|i| weighted_dot(mesh, &psib[i].field.cells, &chi.div)),
        }
    });

    Ok(ReducedOperators {
        ranks: modes.ranks(),
        constants,
        m,
        m_tilde,
        a,
        b,
        p,
        g,
        d,
        n,
        f_v,
        f_u,
        j,
        m_bar,
        a_bar,
        b_bar,
        p_bar,
        d_bar,
        n_bar,
        lifting,
    })
}

impl ReducedOperators {
    /// Checks that every array has the dimensions implied by `ranks`.
    pub fn check(&self) -> Result<()> {
        let Ranks { v, u, q, qbar } = self.ranks;
        let shapes: [(&str, &DMatrix<f64>, usize, usize); 15] = [
            ("M", &self.m, v, v),
            ("Mtilde", &self.m_tilde, v, u),
            ("A", &self.a, v, v),
            ("B", &self.b, v, q),
            ("P", &self.p, q, v),
            ("D", &self.d, q, q),
            ("N", &self.n, q, v),
            ("Fv", &self.f_v, q, v),
            ("Fu", &self.f_u, q, u),
            ("Mbar", &self.m_bar, u, u),
            ("Abar", &self.a_bar, u, u),
            ("Bbar", &self.b_bar, u, qbar),
            ("Pbar", &self.p_bar, qbar, u),
            ("Dbar", &self.d_bar, qbar, qbar),
            ("Nbar", &self.n_bar, qbar, u),
        ];
        for (name, m, r, c) in shapes {
            if m.shape() != (r, c) {
                return Err(Error::Dimension(format!("{name} is {:?}, expected ({r}, {c})", m.shape())));
            }
        }
        if self.g.dims != [v, v, u] || self.j.dims != [q, v, u] {
            return Err(Error::Dimension(format!("tensor shapes G {:?}, J {:?}", self.g.dims, self.j.dims)));
        }
        if let Some(l) = &self.lifting {
            let vecs = [
                (&l.m_chi, v),
                (&l.mbar_chi, u),
                (&l.a_chi, v),
                (&l.abar_chi, u),
                (&l.g_chi, v),
                (&l.j_chi, q),
                (&l.n_chi, q),
                (&l.nbar_chi, qbar),
                (&l.f_chi, q),
                (&l.p_chi, q),
                (&l.pbar_chi, qbar),
            ];
            let mats = [(&l.g_by_chi, v, v), (&l.g_of_chi, v, u), (&l.j_by_chi, q, v), (&l.j_of_chi, q, u)];
            if vecs.iter().any(|(x, n)| x.len() != *n) || mats.iter().any(|(m, r, c)| m.shape() != (*r, *c)) {
                return Err(Error::Dimension("lifting terms do not match the ranks".into()));
            }
        }
        Ok(())
    }
}
