use nalgebra::{DMatrix, DVector};

/// Dense third-order tensor `T_ijk`, row-major (`k` fastest).
#[derive(Debug, Clone, PartialEq)]
pub struct Tensor3 {
    pub dims: [usize; 3],
    pub data: Vec<f64>,
}

impl Tensor3 {
    pub fn zeros(dims: [usize; 3]) -> Self {
        Tensor3 { dims, data: vec![0.0; dims[0] * dims[1] * dims[2]] }
    }

    #[inline]
    fn index(&self, i: usize, j: usize, k: usize) -> usize {
        (i * self.dims[1] + j) * self.dims[2] + k
    }

    pub fn get(&self, i: usize, j: usize, k: usize) -> f64 {
        self.data[self.index(i, j, k)]
    }

    pub fn set(&mut self, i: usize, j: usize, k: usize, v: f64) {
        let idx = self.index(i, j, k);
        self.data[idx] = v;
    }

    /// Matrix `Σ_k T_ijk c_k`, i.e. the tensor with its last index contracted.
    pub fn contract_last(&self, c: &[f64]) -> DMatrix<f64> {
        assert_eq!(c.len(), self.dims[2]);
        let [n0, n1, _] = self.dims;
        DMatrix::from_fn(n0, n1, |i, j| {
            let base = self.index(i, j, 0);
            self.data[base..base + c.len()].iter().zip(c).map(|(t, x)| t * x).sum()
        })
    }

    /// Vector `Σ_jk T_ijk b_j c_k`.
    pub fn contract(&self, b: &[f64], c: &[f64]) -> DVector<f64> {
        assert_eq!(b.len(), self.dims[1]);
        self.contract_last(c) * DVector::from_column_slice(b)
    }

    pub fn max_abs(&self) -> f64 {
        self.data.iter().fold(0.0, |m, x| m.max(x.abs()))
    }
}
