use nalgebra::DMatrix;

use crate::mesh::Mesh;

/// Cell-based sparse matrix in lower/diagonal/upper form: one diagonal entry
/// per cell and two off-diagonal entries per internal face.
///
/// `upper[f]` is the coefficient of the neighbour in the owner row,
/// `lower[f]` the coefficient of the owner in the neighbour row.
#[derive(Debug, Clone, PartialEq)]
pub struct LduMatrix {
    pub diag: Vec<f64>,
    pub upper: Vec<f64>,
    pub lower: Vec<f64>,
    owner: Vec<usize>,
    neighbour: Vec<usize>,
}

impl LduMatrix {
    pub fn zeros(mesh: &Mesh) -> Self {
        let n_int = mesh.n_internal_faces();
        LduMatrix {
            diag: vec![0.0; mesh.n_cells()],
            upper: vec![0.0; n_int],
            lower: vec![0.0; n_int],
            owner: mesh.owner()[..n_int].to_vec(),
            neighbour: mesh.neighbour().to_vec(),
        }
    }

    /// Matrix with the same sparsity pattern built from explicit addressing.
    pub fn from_parts(
        diag: Vec<f64>,
        upper: Vec<f64>,
        lower: Vec<f64>,
        owner: Vec<usize>,
        neighbour: Vec<usize>,
    ) -> Self {
        assert_eq!(upper.len(), owner.len());
        assert_eq!(lower.len(), owner.len());
        assert_eq!(neighbour.len(), owner.len());
        LduMatrix { diag, upper, lower, owner, neighbour }
    }

    pub fn n(&self) -> usize {
        self.diag.len()
    }

    pub fn owner(&self) -> &[usize] {
        &self.owner
    }

    pub fn neighbour(&self) -> &[usize] {
        &self.neighbour
    }

    pub fn mul(&self, x: &[f64], y: &mut [f64]) {
        for ((yi, d), xi) in y.iter_mut().zip(&self.diag).zip(x) {
            *yi = d * xi;
        }
        for f in 0..self.upper.len() {
            let (o, n) = (self.owner[f], self.neighbour[f]);
            y[o] += self.upper[f] * x[n];
            y[n] += self.lower[f] * x[o];
        }
    }

    pub fn apply(&self, x: &[f64]) -> Vec<f64> {
        let mut y = vec![0.0; x.len()];
        self.mul(x, &mut y);
        y
    }

    /// `r = b - A x`.
    pub fn residual(&self, x: &[f64], b: &[f64], r: &mut [f64]) {
        self.mul(x, r);
        for (ri, bi) in r.iter_mut().zip(b) {
            *ri = bi - *ri;
        }
    }

    pub fn is_symmetric(&self) -> bool {
        self.upper == self.lower
    }

    pub fn to_dense(&self) -> DMatrix<f64> {
        let n = self.n();
        let mut a = DMatrix::zeros(n, n);
        for i in 0..n {
            a[(i, i)] = self.diag[i];
        }
        for f in 0..self.upper.len() {
            let (o, nb) = (self.owner[f], self.neighbour[f]);
            a[(o, nb)] += self.upper[f];
            a[(nb, o)] += self.lower[f];
        }
        a
    }

    /// Sum of `|a_ij|` over the off-diagonal entries of each row.
    pub fn off_diagonal_abs_sum(&self) -> Vec<f64> {
        let mut s = vec![0.0; self.n()];
        for f in 0..self.upper.len() {
            s[self.owner[f]] += self.upper[f].abs();
            s[self.neighbour[f]] += self.lower[f].abs();
        }
        s
    }

    /// Sum of the off-diagonal entries of each row.
    pub fn off_diagonal_sum(&self) -> Vec<f64> {
        let mut s = vec![0.0; self.n()];
        for f in 0..self.upper.len() {
            s[self.owner[f]] += self.upper[f];
            s[self.neighbour[f]] += self.lower[f];
        }
        s
    }

    /// `-Σ_N a_PN x_N` for each row P (the off-diagonal part moved to the right).
    pub fn neg_off_diagonal_mul(&self, x: &[f64]) -> Vec<f64> {
        let mut y = vec![0.0; self.n()];
        for f in 0..self.upper.len() {
            let (o, n) = (self.owner[f], self.neighbour[f]);
            y[o] -= self.upper[f] * x[n];
            y[n] -= self.lower[f] * x[o];
        }
        y
    }

    /// True when every row sums to zero, i.e. constants span the nullspace.
    pub fn has_constant_nullspace(&self) -> bool {
        let sums = self.off_diagonal_sum();
        self.diag
            .iter()
            .zip(&sums)
            .all(|(d, s)| (d + s).abs() <= 1e-12 * d.abs().max(f64::MIN_POSITIVE))
    }
}
