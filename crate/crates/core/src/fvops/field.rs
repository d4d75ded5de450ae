use std::fmt::Debug;
use std::ops::{Add, AddAssign, Mul, Neg, Sub, SubAssign};

use nalgebra::Matrix3;

use crate::mesh::{Mesh, PatchKind, Vec3};

/// Quantity stored per cell: a scalar or a 3-vector.
pub trait FieldValue:
    Copy
    + Debug
    + PartialEq
    + Send
    + Sync
    + Add<Output = Self>
    + Sub<Output = Self>
    + Neg<Output = Self>
    + Mul<f64, Output = Self>
    + AddAssign
    + SubAssign
    + 'static
{
    /// Gradient type: a vector for scalars, the Jacobian `d u_i / d x_j` for vectors.
    type Grad: Copy
        + Debug
        + Send
        + Sync
        + Add<Output = Self::Grad>
        + Sub<Output = Self::Grad>
        + Mul<f64, Output = Self::Grad>
        + AddAssign;

    const COMPONENTS: usize;

    fn zero() -> Self;
    fn grad_zero() -> Self::Grad;
    /// `self ⊗ s`, the Green–Gauss face contribution.
    fn outer(self, s: &Vec3) -> Self::Grad;
    /// Directional derivative `grad · k`.
    fn grad_dot(g: &Self::Grad, k: &Vec3) -> Self;
    fn inner(self, other: Self) -> f64;
    fn component(self, i: usize) -> f64;
    fn set_component(&mut self, i: usize, v: f64);
}

impl FieldValue for f64 {
    type Grad = Vec3;
    const COMPONENTS: usize = 1;

    fn zero() -> Self {
        0.0
    }
    fn grad_zero() -> Vec3 {
        Vec3::zeros()
    }
    fn outer(self, s: &Vec3) -> Vec3 {
        s * self
    }
    fn grad_dot(g: &Vec3, k: &Vec3) -> f64 {
        g.dot(k)
    }
    fn inner(self, other: f64) -> f64 {
        self * other
    }
    fn component(self, _: usize) -> f64 {
        self
    }
    fn set_component(&mut self, _: usize, v: f64) {
        *self = v;
    }
}

impl FieldValue for Vec3 {
    type Grad = Matrix3<f64>;
    const COMPONENTS: usize = 3;

    fn zero() -> Self {
        Vec3::zeros()
    }
    fn grad_zero() -> Matrix3<f64> {
        Matrix3::zeros()
    }
    fn outer(self, s: &Vec3) -> Matrix3<f64> {
        self * s.transpose()
    }
    fn grad_dot(g: &Matrix3<f64>, k: &Vec3) -> Vec3 {
        g * k
    }
    fn inner(self, other: Vec3) -> f64 {
        Vec3::dot(&self, &other)
    }
    fn component(self, i: usize) -> f64 {
        self[i]
    }
    fn set_component(&mut self, i: usize, v: f64) {
        self[i] = v;
    }
}

/// Per-patch boundary condition. Dirichlet data lives in the field's
/// boundary value array so it can change in time without rebuilding the
/// condition list.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum BoundaryCondition<T> {
    Dirichlet,
    /// Prescribed outward normal gradient.
    Neumann(T),
    ZeroGradient,
    Empty,
}

impl<T: FieldValue> BoundaryCondition<T> {
    /// Face value as an affine function `a * cell + b` of the owner value;
    /// `dn` is the normal distance from cell centre to face.
    pub fn affine(&self, face_value: T, dn: f64) -> (f64, T) {
        match self {
            BoundaryCondition::Dirichlet => (0.0, face_value),
            BoundaryCondition::Neumann(g) => (1.0, *g * dn),
            BoundaryCondition::ZeroGradient | BoundaryCondition::Empty => (1.0, T::zero()),
        }
    }

    pub fn is_dirichlet(&self) -> bool {
        matches!(self, BoundaryCondition::Dirichlet)
    }
}

/// Cell-centred field with one value per boundary face.
#[derive(Debug, Clone, PartialEq)]
pub struct CellField<T> {
    pub cells: Vec<T>,
    /// Indexed by boundary slot (`face - n_internal_faces`).
    pub boundary: Vec<T>,
    pub bcs: Vec<BoundaryCondition<T>>,
}

pub type ScalarField = CellField<f64>;
pub type VectorField = CellField<Vec3>;

/// One scalar per face, oriented with the face area vector.
pub type FaceFlux = Vec<f64>;

impl<T: FieldValue> CellField<T> {
    /// Zero field. Empty patches get [`BoundaryCondition::Empty`] regardless
    /// of what `bcs` says for them.
    pub fn zeros(mesh: &Mesh, bcs: Vec<BoundaryCondition<T>>) -> Self {
        assert_eq!(bcs.len(), mesh.patches().len(), "one boundary condition per patch");
        let bcs = bcs
            .into_iter()
            .zip(mesh.patches())
            .map(|(bc, p)| if p.kind == PatchKind::Empty { BoundaryCondition::Empty } else { bc })
            .collect();
        CellField {
            cells: vec![T::zero(); mesh.n_cells()],
            boundary: vec![T::zero(); mesh.n_boundary_faces()],
            bcs,
        }
    }

    /// Same conditions, zero values.
    pub fn zeros_like(&self) -> Self {
        CellField {
            cells: vec![T::zero(); self.cells.len()],
            boundary: vec![T::zero(); self.boundary.len()],
            bcs: self.bcs.clone(),
        }
    }

    pub fn bc_of_face(&self, mesh: &Mesh, f: usize) -> BoundaryCondition<T> {
        self.bcs[mesh.face_patch(f).expect("boundary face")]
    }

    /// Sets Dirichlet values on patch `patch` from a function of the face centre.
    pub fn set_patch_values(&mut self, mesh: &Mesh, patch: usize, value: impl Fn(Vec3) -> T) {
        let n_int = mesh.n_internal_faces();
        for f in mesh.patches()[patch].faces() {
            self.boundary[f - n_int] = value(mesh.face_centre(f));
        }
    }

    /// Refreshes boundary values of every non-Dirichlet patch from the cells.
    pub fn update_boundary(&mut self, mesh: &Mesh) {
        let n_int = mesh.n_internal_faces();
        for (pi, p) in mesh.patches().iter().enumerate() {
            let bc = self.bcs[pi];
            if bc.is_dirichlet() {
                continue;
            }
            for f in p.faces() {
                let c = mesh.owner()[f];
                let dn = normal_distance(mesh, f);
                let (a, b) = bc.affine(T::zero(), dn);
                self.boundary[f - n_int] = self.cells[c] * a + b;
            }
        }
    }

    /// Value on face `f`: linear interpolation inside, boundary value outside.
    pub fn face_value(&self, mesh: &Mesh, f: usize) -> T {
        if mesh.is_internal(f) {
            let w = mesh.interpolation_weight(f);
            self.cells[mesh.owner()[f]] * w + self.cells[mesh.neighbour()[f]] * (1.0 - w)
        } else {
            self.boundary[mesh.boundary_slot(f)]
        }
    }

    /// `self + other * s`, keeping the conditions of `self`.
    pub fn axpy(&mut self, s: f64, other: &Self) {
        for (a, b) in self.cells.iter_mut().zip(&other.cells) {
            *a += *b * s;
        }
        for (a, b) in self.boundary.iter_mut().zip(&other.boundary) {
            *a += *b * s;
        }
    }

    pub fn scaled(&self, s: f64) -> Self {
        CellField {
            cells: self.cells.iter().map(|v| *v * s).collect(),
            boundary: self.boundary.iter().map(|v| *v * s).collect(),
            bcs: self.bcs.clone(),
        }
    }
}

/// Distance from the owner centre to boundary face `f` measured along its normal.
pub fn normal_distance(mesh: &Mesh, f: usize) -> f64 {
    let s = mesh.face_area(f);
    s.dot(&(mesh.face_centre(f) - mesh.cell_centre(mesh.owner()[f]))) / s.norm()
}
