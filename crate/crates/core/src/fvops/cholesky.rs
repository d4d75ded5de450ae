//! Profile (envelope) Cholesky factorisation of symmetric [`LduMatrix`]
//! systems. With the generator's cell numbering the envelope is about one
//! lattice column wide, so factorisation and solves are cheap enough to use
//! as an exact preconditioner for pressure equations.

use super::ldu::LduMatrix;
use crate::error::SolverError;

#[derive(Debug, Clone)]
pub struct ProfileCholesky {
    first: Vec<usize>,
    start: Vec<usize>,
    values: Vec<f64>,
}

impl ProfileCholesky {
    /// Factors `A = L Lᵀ` using the upper coefficients of `a`.
    pub fn factor(a: &LduMatrix) -> Result<Self, SolverError> {
        let n = a.n();
        let mut first: Vec<usize> = (0..n).collect();
        for f in 0..a.upper.len() {
            let (o, nb) = (a.owner()[f], a.neighbour()[f]);
            let (lo, hi) = if o < nb { (o, nb) } else { (nb, o) };
            first[hi] = first[hi].min(lo);
        }
        let mut start = Vec::with_capacity(n + 1);
        let mut len = 0;
        for i in 0..n {
            start.push(len);
            len += i - first[i] + 1;
        }
        start.push(len);
        let mut values = vec![0.0; len];
        for i in 0..n {
            values[start[i] + i - first[i]] = a.diag[i];
        }
        for f in 0..a.upper.len() {
            let (o, nb) = (a.owner()[f], a.neighbour()[f]);
            let (lo, hi) = if o < nb { (o, nb) } else { (nb, o) };
            values[start[hi] + lo - first[hi]] += a.upper[f];
        }

        for i in 0..n {
            let fi = first[i];
            for j in fi..=i {
                let fj = first[j];
                let k0 = fi.max(fj);
                let mut s = values[start[i] + j - fi];
                let ri = start[i] + k0 - fi;
                let rj = start[j] + k0 - fj;
                for k in 0..(j - k0) {
                    s -= values[ri + k] * values[rj + k];
                }
                if j == i {
                    if !(s > 0.0) {
                        return Err(SolverError::Singular { condition_estimate: f64::INFINITY });
                    }
                    values[start[i] + i - fi] = s.sqrt();
                } else {
                    values[start[i] + j - fi] = s / values[start[j] + j - fj];
                }
            }
        }
        Ok(ProfileCholesky { first, start, values })
    }

    pub fn n(&self) -> usize {
        self.first.len()
    }

    fn at(&self, i: usize, j: usize) -> f64 {
        self.values[self.start[i] + j - self.first[i]]
    }

    /// Overwrites `b` with `A⁻¹ b`.
    pub fn solve_in_place(&self, b: &mut [f64]) {
        let n = self.n();
        for i in 0..n {
            let fi = self.first[i];
            let row = &self.values[self.start[i]..self.start[i + 1]];
            let mut s = b[i];
            for (k, l) in row[..i - fi].iter().enumerate() {
                s -= l * b[fi + k];
            }
            b[i] = s / row[i - fi];
        }
        for i in (0..n).rev() {
            let xi = b[i] / self.at(i, i);
            b[i] = xi;
            let fi = self.first[i];
            let row = &self.values[self.start[i]..self.start[i + 1]];
            for (k, l) in row[..i - fi].iter().enumerate() {
                b[fi + k] -= l * xi;
            }
        }
    }
}
