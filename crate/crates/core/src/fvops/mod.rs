//! Finite-volume operators, matrix assembly and sparse linear solvers.

mod assembly;
mod cholesky;
mod field;
mod ldu;
mod ops;
mod solve;

pub use assembly::{add_temporal, assemble_convection, assemble_diffusion, interpolate_viscosity};
pub use cholesky::ProfileCholesky;
pub use field::{
    normal_distance, BoundaryCondition, CellField, FaceFlux, FieldValue, ScalarField, VectorField,
};
pub use ldu::LduMatrix;
pub use ops::{
    convection, curl, divergence, face_flux, face_normal_gradient, green_gauss_gradient,
    interpolate_to_faces, laplacian, max_abs, weighted_dot,
};
pub use solve::{
    bicgstab, condition_estimate, dense_lu, dense_solve, pcg, remove_weighted_mean, solve_sparse,
    Method, Preconditioner, SolveReport, SolverSettings, SparseSystem, DENSE_LIMIT,
};
