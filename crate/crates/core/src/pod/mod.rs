//! Snapshot POD: weighted correlation matrices, symmetric eigenproblems,
//! basis construction and truncation.
//!
//! The inner product is the finite-volume quadrature `Σ Ω_i a_i · b_i` over
//! the cell block of each column. Modes are scaled to unit weighted norm
//! (rather than by `1/(N_s Λ_i)`), and the snapshot mean is not removed.

mod basis;
mod eigen;
mod snapshots;

pub use basis::{
    build_basis, correlation_matrix, cumulative_energy, eigendecompose, gram, numerical_rank, pod,
    project, reconstruct, PodBasis, RankSelection, Spectrum, RANK_TOLERANCE,
};
pub use eigen::{symmetric_eigen, SymmetricEigen};
pub use snapshots::{FieldKind, FieldLayout, SnapshotMatrix, SnapshotSet};
