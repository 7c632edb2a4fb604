//! Sparse matrices and a direct solver for the (possibly indefinite)
//! linearised systems.
//!
//! Factorization is sparse LU with partial row pivoting (faer). A solve is
//! accepted only if the normwise backward error
//! `‖b − Ax‖∞ / (‖A‖∞ ‖x‖∞ + ‖b‖∞)` reaches [`RESIDUAL_TOL`], after at most
//! [`REFINEMENT_STEPS`] rounds of iterative refinement; anything else is
//! reported as a numerically singular matrix.

use faer::linalg::solvers::Solve;
use faer::sparse::{SparseColMat, Triplet};
use faer::Mat;

use crate::error::{Error, Result};

pub const RESIDUAL_TOL: f64 = 1e-10;
pub const REFINEMENT_STEPS: usize = 3;

/// Square matrix in compressed sparse row form. Column indices are sorted
/// within each row and duplicates are summed on construction.
#[derive(Debug, Clone, PartialEq)]
pub struct SparseMatrix {
    dim: usize,
    row_ptr: Vec<usize>,
    cols: Vec<usize>,
    values: Vec<f64>,
}

impl SparseMatrix {
    pub fn from_triplets(dim: usize, mut entries: Vec<(usize, usize, f64)>) -> Result<SparseMatrix> {
        if let Some(&(i, j, _)) = entries.iter().find(|(i, j, _)| *i >= dim || *j >= dim) {
            return Err(Error::DimensionMismatch(format!("entry ({i}, {j}) outside a {dim}x{dim} matrix")));
        }
        entries.sort_by_key(|&(i, j, _)| (i, j));
        let mut row_ptr = vec![0; dim + 1];
        let mut cols = Vec::with_capacity(entries.len());
        let mut values: Vec<f64> = Vec::with_capacity(entries.len());
        let mut last = None;
        for (i, j, v) in entries {
            if last == Some((i, j)) {
                *values.last_mut().expect("entry present") += v;
            } else {
                cols.push(j);
                values.push(v);
                row_ptr[i + 1] += 1;
                last = Some((i, j));
            }
        }
        for i in 0..dim {
            row_ptr[i + 1] += row_ptr[i];
        }
        Ok(SparseMatrix { dim, row_ptr, cols, values })
    }

    pub fn identity(dim: usize) -> SparseMatrix {
        SparseMatrix {
            dim,
            row_ptr: (0..=dim).collect(),
            cols: (0..dim).collect(),
            values: vec![1.0; dim],
        }
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn nnz(&self) -> usize {
        self.values.len()
    }

    pub fn row(&self, i: usize) -> impl Iterator<Item = (usize, f64)> + '_ {
        let r = self.row_ptr[i]..self.row_ptr[i + 1];
        self.cols[r.clone()].iter().copied().zip(self.values[r].iter().copied())
    }

    pub fn get(&self, i: usize, j: usize) -> f64 {
        let r = self.row_ptr[i]..self.row_ptr[i + 1];
        match self.cols[r.clone()].binary_search(&j) {
            Ok(k) => self.values[r.start + k],
            Err(_) => 0.0,
        }
    }

    pub fn mul_vec(&self, x: &[f64]) -> Vec<f64> {
        (0..self.dim).map(|i| self.row(i).map(|(j, v)| v * x[j]).sum()).collect()
    }

    /// Maximum absolute row sum.
    pub fn norm_inf(&self) -> f64 {
        (0..self.dim).map(|i| self.row(i).map(|(_, v)| v.abs()).sum::<f64>()).fold(0.0, f64::max)
    }

    pub fn max_abs(&self) -> f64 {
        self.values.iter().fold(0.0, |m, v| m.max(v.abs()))
    }

    pub fn to_dense(&self) -> Vec<Vec<f64>> {
        let mut d = vec![vec![0.0; self.dim]; self.dim];
        for (i, row) in d.iter_mut().enumerate() {
            for (j, v) in self.row(i) {
                row[j] = v;
            }
        }
        d
    }

    /// Largest `|a_ij - a_ji|` relative to the largest entry.
    pub fn asymmetry(&self) -> f64 {
        let scale = self.max_abs().max(f64::MIN_POSITIVE);
        let mut worst = 0.0f64;
        for i in 0..self.dim {
            for (j, v) in self.row(i) {
                worst = worst.max((v - self.get(j, i)).abs() / scale);
            }
        }
        worst
    }
}

/// A reusable factorization of a [`SparseMatrix`].
pub struct Factorization<'a> {
    matrix: &'a SparseMatrix,
    lu: Option<faer::sparse::linalg::solvers::Lu<usize, f64>>,
}

impl<'a> Factorization<'a> {
    pub fn new(matrix: &'a SparseMatrix) -> Result<Factorization<'a>> {
        if matrix.dim == 0 {
            return Ok(Factorization { matrix, lu: None });
        }
        let triplets: Vec<Triplet<usize, usize, f64>> = (0..matrix.dim)
            .flat_map(|i| matrix.row(i).map(move |(j, v)| Triplet::new(i, j, v)))
            .collect();
        let csc = SparseColMat::<usize, f64>::try_new_from_triplets(matrix.dim, matrix.dim, &triplets)
            .map_err(|e| Error::SingularMatrix(format!("matrix conversion failed: {e:?}")))?;
        let lu = csc
            .sp_lu()
            .map_err(|e| Error::SingularMatrix(format!("LU factorization failed: {e:?}")))?;
        Ok(Factorization { matrix, lu: Some(lu) })
    }

    pub fn solve(&self, b: &[f64]) -> Result<Vec<f64>> {
        let n = self.matrix.dim;
        if b.len() != n {
            return Err(Error::DimensionMismatch(format!("rhs has length {}, matrix is {n}x{n}", b.len())));
        }
        let b_norm = norm_inf(b);
        if b_norm == 0.0 {
            return Ok(vec![0.0; n]);
        }
        let lu = self.lu.as_ref().expect("non-empty system has a factorization");
        let raw_solve = |rhs: &[f64]| -> Vec<f64> {
            let m = Mat::from_fn(n, 1, |i, _| rhs[i]);
            let x = lu.solve(&m);
            (0..n).map(|i| x[(i, 0)]).collect()
        };
        let a_norm = self.matrix.norm_inf();
        let mut x = raw_solve(b);
        for step in 0..=REFINEMENT_STEPS {
            if x.iter().any(|v| !v.is_finite()) {
                return Err(Error::SingularMatrix("solution has non-finite entries".into()));
            }
            let ax = self.matrix.mul_vec(&x);
            let r: Vec<f64> = b.iter().zip(&ax).map(|(bi, ai)| bi - ai).collect();
            let rel = norm_inf(&r) / (a_norm * norm_inf(&x) + b_norm);
            if rel <= RESIDUAL_TOL {
                return Ok(x);
            }
            if step == REFINEMENT_STEPS {
                return Err(Error::SingularMatrix(format!("backward error {rel:.3e} after refinement")));
            }
            let dx = raw_solve(&r);
            x.iter_mut().zip(&dx).for_each(|(xi, di)| *xi += di);
        }
        unreachable!()
    }
}

/// Factorizes `a` and solves `a x = b`.
pub fn factor_solve(a: &SparseMatrix, b: &[f64]) -> Result<Vec<f64>> {
    Factorization::new(a)?.solve(b)
}

fn norm_inf(v: &[f64]) -> f64 {
    v.iter().fold(0.0, |m, x| m.max(x.abs()))
}
