use nalgebra::{DMatrix, DVector};

use super::eigen::{symmetric_eigen, SymmetricEigen};
use super::snapshots::{FieldLayout, SnapshotMatrix};
use crate::error::{Error, Result};

/// Relative threshold below which eigenvalues count as numerically zero.
pub const RANK_TOLERANCE: f64 = 1e-12;

/// `C_ij = Σ_k w_k S_ki S_kj`, symmetrised.
pub fn correlation_matrix(s: &DMatrix<f64>, weights: &[f64]) -> DMatrix<f64> {
    assert_eq!(s.nrows(), weights.len());
    let mut ws = s.clone();
    for (mut row, w) in ws.row_iter_mut().zip(weights) {
        row *= *w;
    }
    let c = s.transpose() * ws;
    (&c + c.transpose()) * 0.5
}

/// Eigenvalues clipped at zero, with what was removed.
#[derive(Debug, Clone, PartialEq)]
pub struct Spectrum {
    pub values: Vec<f64>,
    pub vectors: DMatrix<f64>,
    /// `(index, amount)` of every negative eigenvalue raised to zero.
    pub clipped: Vec<(usize, f64)>,
}

pub fn eigendecompose(c: &DMatrix<f64>) -> Result<Spectrum> {
    let SymmetricEigen { mut values, vectors } = symmetric_eigen(c)?;
    let mut clipped = Vec::new();
    for (i, v) in values.iter_mut().enumerate() {
        if *v < 0.0 {
            clipped.push((i, -*v));
            *v = 0.0;
        }
    }
    Ok(Spectrum { values, vectors, clipped })
}

/// `curve_k = Σ_{i≤k} Λ_i / Σ Λ_i`. An all-zero spectrum gives ones.
pub fn cumulative_energy(values: &[f64]) -> Vec<f64> {
    let total: f64 = values.iter().sum();
    let mut acc = 0.0;
    values
        .iter()
        .map(|v| {
            acc += v;
            if total > 0.0 { (acc / total).min(1.0) } else { 1.0 }
        })
        .collect()
}

/// Number of eigenvalues above `RANK_TOLERANCE · Λ_max`.
pub fn numerical_rank(values: &[f64]) -> usize {
    let max = values.first().copied().unwrap_or(0.0);
    if !(max > 0.0) {
        return 0;
    }
    values.iter().filter(|v| **v > RANK_TOLERANCE * max).count()
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum RankSelection {
    Fixed(usize),
    /// Smallest rank whose cumulative energy reaches the threshold.
    Energy(f64),
}

/// Orthonormal modes of one field with its spectrum.
#[derive(Debug, Clone, PartialEq)]
pub struct PodBasis {
    pub layout: FieldLayout,
    /// `N_h × r`, orthonormal under the weights.
    pub modes: DMatrix<f64>,
    pub eigenvalues: Vec<f64>,
    pub eigenvectors: DMatrix<f64>,
    pub clipped: Vec<(usize, f64)>,
    pub cumulative: Vec<f64>,
}

impl PodBasis {
    pub fn rank(&self) -> usize {
        self.modes.ncols()
    }

    pub fn mode(&self, i: usize) -> &[f64] {
        let n = self.modes.nrows();
        &self.modes.as_slice()[i * n..(i + 1) * n]
    }

    /// Coefficients `a_i = (ζ_i, f)_w`.
    pub fn project(&self, f: &[f64], weights: &[f64]) -> Vec<f64> {
        project(&self.modes, f, weights)
    }

    pub fn reconstruct(&self, coeffs: &[f64]) -> Vec<f64> {
        reconstruct(&self.modes, coeffs)
    }

    /// Copy keeping the first `r` modes.
    pub fn truncated(&self, r: usize) -> Result<Self> {
        if r > self.rank() {
            return Err(Error::Dimension(format!("cannot truncate a rank-{} basis to {r}", self.rank())));
        }
        Ok(PodBasis { modes: self.modes.columns(0, r).clone_owned(), ..self.clone() })
    }
}

pub fn project(modes: &DMatrix<f64>, f: &[f64], weights: &[f64]) -> Vec<f64> {
    assert_eq!(f.len(), modes.nrows());
    (0..modes.ncols())
        .map(|i| modes.column(i).iter().zip(f).zip(weights).map(|((a, b), w)| a * b * w).sum())
        .collect()
}

pub fn reconstruct(modes: &DMatrix<f64>, coeffs: &[f64]) -> Vec<f64> {
    assert_eq!(coeffs.len(), modes.ncols());
    (modes * DVector::from_column_slice(coeffs)).data.into()
}

fn weighted_dot(a: &[f64], b: &[f64], w: &[f64]) -> f64 {
    a.iter().zip(b).zip(w).map(|((x, y), z)| x * y * z).sum()
}

/// Modes `ζ_i = S Q_i / sqrt(Λ_i)`, then two passes of weighted
/// Gram–Schmidt so orthonormality holds to rounding even for small `Λ_i`.
pub fn build_basis(s: &SnapshotMatrix, weights: &[f64], spec: &Spectrum, r: usize) -> Result<PodBasis> {
    let usable = numerical_rank(&spec.values);
    if r > usable {
        return Err(Error::Numerical(format!(
            "requested {r} {} modes but the snapshots have numerical rank {usable}",
            s.layout.kind.as_str()
        )));
    }
    let n = s.data.nrows();
    let mut modes = DMatrix::zeros(n, r);
    for i in 0..r {
        let q = spec.vectors.column(i);
        let mut z = &s.data * q;
        z /= spec.values[i].sqrt();
        modes.set_column(i, &z);
    }
    for _ in 0..2 {
        for i in 0..r {
            for j in 0..i {
                let (head, tail) = modes.as_mut_slice().split_at_mut(i * n);
                let zj = &head[j * n..(j + 1) * n];
                let zi = &mut tail[..n];
                let c = weighted_dot(zi, zj, weights);
                for (a, b) in zi.iter_mut().zip(zj) {
                    *a -= c * b;
                }
            }
            let zi = &mut modes.as_mut_slice()[i * n..(i + 1) * n];
            let nrm = weighted_dot(zi, zi, weights).sqrt();
            if !(nrm > 0.0) {
                return Err(Error::Numerical(format!("mode {i} vanished during orthonormalisation")));
            }
            zi.iter_mut().for_each(|a| *a /= nrm);
        }
    }
    Ok(PodBasis {
        layout: s.layout,
        modes,
        eigenvalues: spec.values.clone(),
        eigenvectors: spec.vectors.clone(),
        clipped: spec.clipped.clone(),
        cumulative: cumulative_energy(&spec.values),
    })
}

/// Correlation, eigen-decomposition and basis in one call.
pub fn pod(s: &SnapshotMatrix, weights: &[f64], rank: RankSelection) -> Result<PodBasis> {
    let c = correlation_matrix(&s.data, weights);
    let spec = eigendecompose(&c)?;
    let r = match rank {
        RankSelection::Fixed(r) => r,
        RankSelection::Energy(th) => {
            if !(th > 0.0 && th <= 1.0) {
                return Err(Error::config_key("energy_threshold", format!("must lie in (0, 1], got {th}")));
            }
            let curve = cumulative_energy(&spec.values);
            let usable = numerical_rank(&spec.values);
            curve.iter().position(|c| *c >= th - 1e-15).map(|i| i + 1).unwrap_or(usable).min(usable.max(1))
        }
    };
    build_basis(s, weights, &spec, r)
}

/// Weighted Gram matrix `L^T W L` (identity for an orthonormal basis).
pub fn gram(modes: &DMatrix<f64>, weights: &[f64]) -> DMatrix<f64> {
    correlation_matrix(modes, weights)
}
