use faer::sparse::{SparseColMat, Triplet};

use crate::error::{Error, Result};

/// Square sparse matrix in compressed-row form with sorted, unique column indices.
#[derive(Clone, Debug, PartialEq)]
pub struct CsrMatrix {
    n: usize,
    row_ptr: Vec<usize>,
    col_idx: Vec<usize>,
    values: Vec<f64>,
}

impl CsrMatrix {
    /// Builds an `n`-by-`n` matrix, summing duplicate entries in input order so the
    /// result does not depend on how the triplets were produced.
    pub fn from_triplets(n: usize, mut triplets: Vec<(usize, usize, f64)>) -> Self {
        // stable sort keeps the summation order of duplicates fixed
        triplets.sort_by_key(|&(i, j, _)| (i, j));
        let mut row_ptr = vec![0usize; n + 1];
        let mut col_idx = Vec::with_capacity(triplets.len());
        let mut values: Vec<f64> = Vec::with_capacity(triplets.len());
        let mut last: Option<(usize, usize)> = None;
        for (i, j, v) in triplets {
            assert!(i < n && j < n, "triplet ({i}, {j}) outside a {n}x{n} matrix");
            if last == Some((i, j)) {
                *values.last_mut().unwrap() += v;
            } else {
                col_idx.push(j);
                values.push(v);
                row_ptr[i + 1] += 1;
                last = Some((i, j));
            }
        }
        for i in 0..n {
            row_ptr[i + 1] += row_ptr[i];
        }
        Self { n, row_ptr, col_idx, values }
    }

    pub fn zeros(n: usize) -> Self {
        Self { n, row_ptr: vec![0; n + 1], col_idx: Vec::new(), values: Vec::new() }
    }

    pub fn dim(&self) -> usize {
        self.n
    }

    pub fn nnz(&self) -> usize {
        self.values.len()
    }

    /// Entries of row `i` as `(column, value)` pairs.
    pub fn row(&self, i: usize) -> impl Iterator<Item = (usize, f64)> + '_ {
        let r = self.row_ptr[i]..self.row_ptr[i + 1];
        self.col_idx[r.clone()].iter().copied().zip(self.values[r].iter().copied())
    }

    pub fn get(&self, i: usize, j: usize) -> f64 {
        let r = self.row_ptr[i]..self.row_ptr[i + 1];
        match self.col_idx[r.clone()].binary_search(&j) {
            Ok(k) => self.values[r.start + k],
            Err(_) => 0.0,
        }
    }

    pub fn matvec(&self, x: &[f64]) -> Result<Vec<f64>> {
        check_len(self.n, x.len())?;
        Ok((0..self.n).map(|i| self.row(i).map(|(j, v)| v * x[j]).sum()).collect())
    }

    /// `xᵀ A y`.
    pub fn bilinear(&self, x: &[f64], y: &[f64]) -> Result<f64> {
        check_len(self.n, x.len())?;
        let ay = self.matvec(y)?;
        Ok(x.iter().zip(&ay).map(|(a, b)| a * b).sum())
    }

    /// Returns `self + s * other`.
    pub fn add_scaled(&self, s: f64, other: &CsrMatrix) -> Result<CsrMatrix> {
        check_len(self.n, other.n)?;
        let mut t = self.triplets();
        t.extend(other.triplets().into_iter().map(|(i, j, v)| (i, j, s * v)));
        Ok(CsrMatrix::from_triplets(self.n, t))
    }

    pub fn scaled(&self, s: f64) -> CsrMatrix {
        let mut out = self.clone();
        out.values.iter_mut().for_each(|v| *v *= s);
        out
    }

    pub fn triplets(&self) -> Vec<(usize, usize, f64)> {
        (0..self.n).flat_map(|i| self.row(i).map(move |(j, v)| (i, j, v))).collect()
    }

    /// Submatrix on `dofs` (in the given order), renumbered `0..dofs.len()`.
    pub fn restrict(&self, dofs: &[usize]) -> CsrMatrix {
        let mut local = vec![usize::MAX; self.n];
        for (k, &d) in dofs.iter().enumerate() {
            local[d] = k;
        }
        let mut t = Vec::new();
        for (k, &d) in dofs.iter().enumerate() {
            for (j, v) in self.row(d) {
                if local[j] != usize::MAX {
                    t.push((k, local[j], v));
                }
            }
        }
        CsrMatrix::from_triplets(dofs.len(), t)
    }

    /// Largest relative asymmetry `|a_ij - a_ji| / max|a|`.
    pub fn asymmetry(&self) -> f64 {
        let scale = self.max_abs();
        if scale == 0.0 {
            return 0.0;
        }
        (0..self.n)
            .flat_map(|i| self.row(i).map(move |(j, v)| (i, j, v)))
            .map(|(i, j, v)| (v - self.get(j, i)).abs())
            .fold(0.0, f64::max)
            / scale
    }

    pub fn max_abs(&self) -> f64 {
        self.values.iter().fold(0.0, |m, v| m.max(v.abs()))
    }

    /// Infinity norm (maximum absolute row sum).
    pub fn norm_inf(&self) -> f64 {
        (0..self.n).map(|i| self.row(i).map(|(_, v)| v.abs()).sum::<f64>()).fold(0.0, f64::max)
    }

    pub(crate) fn to_faer(&self) -> Result<SparseColMat<usize, f64>> {
        let t: Vec<Triplet<usize, usize, f64>> = self
            .triplets()
            .into_iter()
            .map(|(i, j, v)| Triplet::new(i, j, v))
            .collect();
        SparseColMat::try_new_from_triplets(self.n, self.n, &t)
            .map_err(|e| Error::solver(format!("sparse matrix conversion failed: {e:?}")))
    }
}

pub(crate) fn check_len(expected: usize, found: usize) -> Result<()> {
    if expected == found {
        Ok(())
    } else {
        Err(Error::Dimension { expected, found })
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn duplicates_are_summed() {
        let a = CsrMatrix::from_triplets(2, vec![(0, 0, 1.0), (1, 0, 2.0), (0, 0, 3.0), (0, 1, 2.0)]);
        assert_eq!(a.get(0, 0), 4.0);
        assert_eq!(a.get(1, 1), 0.0);
        assert_eq!(a.matvec(&[1.0, 1.0]).unwrap(), vec![6.0, 2.0]);
        assert_eq!(a.asymmetry(), 0.0);
        assert_eq!(a.nnz(), 3);
    }

    #[test]
    fn restriction_renumbers() {
        let a = CsrMatrix::from_triplets(3, vec![(0, 0, 1.0), (1, 1, 2.0), (2, 2, 3.0), (0, 2, 5.0)]);
        let r = a.restrict(&[2, 0]);
        assert_eq!(r.get(0, 0), 3.0);
        assert_eq!(r.get(1, 0), 5.0);
        assert_eq!(r.get(0, 1), 0.0);
    }

    #[test]
    fn dimension_mismatch() {
        let a = CsrMatrix::zeros(3);
        assert!(matches!(a.matvec(&[1.0]), Err(Error::Dimension { expected: 3, found: 1 })));
    }
}
