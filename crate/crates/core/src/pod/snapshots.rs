//! Snapshot columns and matrices.
//!
//! A velocity column stores the cell values (three components per cell),
//! the boundary-face values and the conservative face fluxes; a pressure
//! column stores cell and boundary-face values. Only the cell block carries
//! weight in the inner product, but linear combinations of columns keep
//! boundary values and fluxes consistent with the cell values, which the
//! reduced operators need.

use nalgebra::DMatrix;

use crate::error::{Error, Result};
use crate::fvops::{BoundaryCondition, CellField};
use crate::mesh::{Mesh, Vec3};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum FieldKind {
    Velocity,
    Pressure,
}

impl FieldKind {
    pub fn as_str(self) -> &'static str {
        match self {
            FieldKind::Velocity => "velocity",
            FieldKind::Pressure => "pressure",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct FieldLayout {
    pub kind: FieldKind,
    pub n_cells: usize,
    pub n_boundary: usize,
    pub n_faces: usize,
}

impl FieldLayout {
    pub fn velocity(mesh: &Mesh) -> Self {
        FieldLayout {
            kind: FieldKind::Velocity,
            n_cells: mesh.n_cells(),
            n_boundary: mesh.n_boundary_faces(),
            n_faces: mesh.n_faces(),
        }
    }

    pub fn pressure(mesh: &Mesh) -> Self {
        FieldLayout {
            kind: FieldKind::Pressure,
            n_cells: mesh.n_cells(),
            n_boundary: mesh.n_boundary_faces(),
            n_faces: mesh.n_faces(),
        }
    }

    pub fn components(&self) -> usize {
        match self.kind {
            FieldKind::Velocity => 3,
            FieldKind::Pressure => 1,
        }
    }

    pub fn len(&self) -> usize {
        match self.kind {
            FieldKind::Velocity => 3 * self.n_cells + 3 * self.n_boundary + self.n_faces,
            FieldKind::Pressure => self.n_cells + self.n_boundary,
        }
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    /// Number of leading entries that carry quadrature weight.
    pub fn n_weighted(&self) -> usize {
        self.components() * self.n_cells
    }

    pub fn check(&self, mesh: &Mesh) -> Result<()> {
        if self.n_cells != mesh.n_cells()
            || self.n_boundary != mesh.n_boundary_faces()
            || self.n_faces != mesh.n_faces()
        {
            return Err(Error::Dimension(format!(
                "{} layout ({} cells, {} faces) does not match the mesh ({} cells, {} faces)",
                self.kind.as_str(),
                self.n_cells,
                self.n_faces,
                mesh.n_cells(),
                mesh.n_faces()
            )));
        }
        Ok(())
    }

    /// Cell volumes repeated per component; zero on boundary and flux entries.
    pub fn weights(&self, mesh: &Mesh) -> Vec<f64> {
        let c = self.components();
        let mut w = vec![0.0; self.len()];
        for (i, v) in mesh.cell_volumes().iter().enumerate() {
            for k in 0..c {
                w[c * i + k] = *v;
            }
        }
        w
    }

    pub fn pack_velocity(&self, u: &CellField<Vec3>, flux: &[f64]) -> Vec<f64> {
        debug_assert_eq!(self.kind, FieldKind::Velocity);
        let mut col = Vec::with_capacity(self.len());
        for v in u.cells.iter().chain(&u.boundary) {
            col.extend_from_slice(&[v.x, v.y, v.z]);
        }
        col.extend_from_slice(flux);
        col
    }

    pub fn pack_pressure(&self, q: &CellField<f64>) -> Vec<f64> {
        debug_assert_eq!(self.kind, FieldKind::Pressure);
        let mut col = Vec::with_capacity(self.len());
        col.extend_from_slice(&q.cells);
        col.extend_from_slice(&q.boundary);
        col
    }

    pub fn velocity_cells(&self, col: &[f64]) -> Vec<Vec3> {
        col[..3 * self.n_cells]
            .chunks_exact(3)
            .map(|c| Vec3::new(c[0], c[1], c[2]))
            .collect()
    }

    pub fn flux<'a>(&self, col: &'a [f64]) -> &'a [f64] {
        &col[3 * (self.n_cells + self.n_boundary)..]
    }

    pub fn unpack_velocity(
        &self,
        col: &[f64],
        bcs: Vec<BoundaryCondition<Vec3>>,
    ) -> (CellField<Vec3>, Vec<f64>) {
        let all: Vec<Vec3> = col[..3 * (self.n_cells + self.n_boundary)]
            .chunks_exact(3)
            .map(|c| Vec3::new(c[0], c[1], c[2]))
            .collect();
        let field = CellField {
            cells: all[..self.n_cells].to_vec(),
            boundary: all[self.n_cells..].to_vec(),
            bcs,
        };
        (field, self.flux(col).to_vec())
    }

    pub fn unpack_pressure(&self, col: &[f64], bcs: Vec<BoundaryCondition<f64>>) -> CellField<f64> {
        CellField {
            cells: col[..self.n_cells].to_vec(),
            boundary: col[self.n_cells..self.n_cells + self.n_boundary].to_vec(),
            bcs,
        }
    }
}

/// Snapshot matrix of one field, one column per snapshot.
#[derive(Debug, Clone, PartialEq)]
pub struct SnapshotMatrix {
    pub layout: FieldLayout,
    pub data: DMatrix<f64>,
}

impl SnapshotMatrix {
    pub fn new(layout: FieldLayout) -> Self {
        SnapshotMatrix { layout, data: DMatrix::zeros(layout.len(), 0) }
    }

    pub fn from_columns(layout: FieldLayout, cols: &[Vec<f64>]) -> Self {
        let mut data = DMatrix::zeros(layout.len(), cols.len());
        for (j, c) in cols.iter().enumerate() {
            data.column_mut(j).copy_from_slice(c);
        }
        SnapshotMatrix { layout, data }
    }

    pub fn n_snapshots(&self) -> usize {
        self.data.ncols()
    }

    pub fn column(&self, j: usize) -> &[f64] {
        let n = self.data.nrows();
        &self.data.as_slice()[j * n..(j + 1) * n]
    }

    pub fn push(&mut self, col: &[f64]) {
        assert_eq!(col.len(), self.layout.len());
        let n = self.data.ncols();
        let data = std::mem::replace(&mut self.data, DMatrix::zeros(0, 0));
        self.data = data.insert_column(n, 0.0);
        self.data.column_mut(n).copy_from_slice(col);
    }

    /// Columns of `self` followed by those of `other`.
    pub fn concat(&self, other: &Self) -> Result<Self> {
        if self.layout != other.layout {
            return Err(Error::Dimension("snapshot layouts differ".into()));
        }
        let (n, a, b) = (self.data.nrows(), self.data.ncols(), other.data.ncols());
        let mut data = DMatrix::zeros(n, a + b);
        data.columns_mut(0, a).copy_from(&self.data);
        data.columns_mut(a, b).copy_from(&other.data);
        Ok(SnapshotMatrix { layout: self.layout, data })
    }
}

/// Snapshots of the four fields with their sampling metadata.
#[derive(Debug, Clone, PartialEq)]
pub struct SnapshotSet {
    pub times: Vec<f64>,
    /// Parameter value (filter radius) of each column.
    pub params: Vec<f64>,
    /// Lifting amplitude subtracted from the velocity columns.
    pub amplitudes: Vec<f64>,
    pub v: SnapshotMatrix,
    pub u: SnapshotMatrix,
    pub q: SnapshotMatrix,
    pub qbar: SnapshotMatrix,
}

impl SnapshotSet {
    pub fn new(mesh: &Mesh) -> Self {
        SnapshotSet {
            times: Vec::new(),
            params: Vec::new(),
            amplitudes: Vec::new(),
            v: SnapshotMatrix::new(FieldLayout::velocity(mesh)),
            u: SnapshotMatrix::new(FieldLayout::velocity(mesh)),
            q: SnapshotMatrix::new(FieldLayout::pressure(mesh)),
            qbar: SnapshotMatrix::new(FieldLayout::pressure(mesh)),
        }
    }

    pub fn n_snapshots(&self) -> usize {
        self.times.len()
    }

    pub fn check(&self) -> Result<()> {
        let n = self.times.len();
        for (name, m) in [("v", &self.v), ("u", &self.u), ("q", &self.q), ("qbar", &self.qbar)] {
            if m.n_snapshots() != n {
                return Err(Error::Dimension(format!(
                    "snapshot matrix {name} has {} columns, expected {n}",
                    m.n_snapshots()
                )));
            }
        }
        if self.params.len() != n || self.amplitudes.len() != n {
            return Err(Error::Dimension("snapshot metadata length mismatch".into()));
        }
        Ok(())
    }

    /// Pools two sets (e.g. runs at different parameter values).
    pub fn concat(&self, other: &Self) -> Result<Self> {
        let cat = |a: &[f64], b: &[f64]| a.iter().chain(b).copied().collect::<Vec<_>>();
        Ok(SnapshotSet {
            times: cat(&self.times, &other.times),
            params: cat(&self.params, &other.params),
            amplitudes: cat(&self.amplitudes, &other.amplitudes),
            v: self.v.concat(&other.v)?,
            u: self.u.concat(&other.u)?,
            q: self.q.concat(&other.q)?,
            qbar: self.qbar.concat(&other.qbar)?,
        })
    }
}
