//! Minimal sparse symmetric linear algebra: CSR storage, zero-fill
//! incomplete Cholesky, and preconditioned conjugate gradients.
//!
//! Matrices store the full (both triangles) pattern so matvec is a plain
//! row sweep. The factorization keeps only the lower-triangular pattern of
//! the input (IC(0)); on 1D tridiagonal matrices that pattern has no fill,
//! so the "incomplete" factor is the exact Cholesky factor and the
//! preconditioner becomes a direct solver.

use crate::{Error, Result};

#[derive(Debug, Clone, PartialEq)]
pub struct CsrMatrix {
    n: usize,
    row_ptr: Vec<usize>,
    col_idx: Vec<usize>,
    vals: Vec<f64>,
}

impl CsrMatrix {
    /// Build from (row, col, value) triplets; duplicates are summed.
    pub fn from_triplets(n: usize, triplets: &[(usize, usize, f64)]) -> Self {
        let mut order: Vec<usize> = (0..triplets.len()).collect();
        order.sort_unstable_by_key(|&k| (triplets[k].0, triplets[k].1));
        let mut row_ptr = vec![0usize; n + 1];
        let mut col_idx = Vec::with_capacity(triplets.len());
        let mut vals: Vec<f64> = Vec::with_capacity(triplets.len());
        let mut last: Option<(usize, usize)> = None;
        for &k in &order {
            let (i, j, v) = triplets[k];
            assert!(i < n && j < n, "triplet ({i},{j}) out of range {n}");
            if last == Some((i, j)) {
                *vals.last_mut().unwrap() += v;
            } else {
                col_idx.push(j);
                vals.push(v);
                row_ptr[i + 1] += 1;
                last = Some((i, j));
            }
        }
        for i in 0..n {
            row_ptr[i + 1] += row_ptr[i];
        }
        CsrMatrix { n, row_ptr, col_idx, vals }
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn nnz(&self) -> usize {
        self.vals.len()
    }

    pub fn row(&self, i: usize) -> (&[usize], &[f64]) {
        let (a, b) = (self.row_ptr[i], self.row_ptr[i + 1]);
        (&self.col_idx[a..b], &self.vals[a..b])
    }

    pub fn matvec(&self, x: &[f64], y: &mut [f64]) {
        debug_assert_eq!(x.len(), self.n);
        debug_assert_eq!(y.len(), self.n);
        for i in 0..self.n {
            let (cols, vals) = self.row(i);
            let mut acc = 0.0;
            for (&j, &v) in cols.iter().zip(vals) {
                acc += v * x[j];
            }
            y[i] = acc;
        }
    }

    pub fn matvec_alloc(&self, x: &[f64]) -> Vec<f64> {
        let mut y = vec![0.0; self.n];
        self.matvec(x, &mut y);
        y
    }

    pub fn diag(&self) -> Vec<f64> {
        (0..self.n)
            .map(|i| {
                let (cols, vals) = self.row(i);
                cols.iter().zip(vals).find(|(&j, _)| j == i).map_or(0.0, |(_, &v)| v)
            })
            .collect()
    }

    /// Maximum absolute row sum.
    pub fn inf_norm(&self) -> f64 {
        (0..self.n)
            .map(|i| self.row(i).1.iter().map(|v| v.abs()).sum::<f64>())
            .fold(0.0, f64::max)
    }

    /// Σ αₖ·Aₖ over matrices of equal size with arbitrary patterns.
    pub fn linear_combination(terms: &[(f64, &CsrMatrix)]) -> CsrMatrix {
        assert!(!terms.is_empty());
        let n = terms[0].1.n;
        let mut row_ptr = vec![0usize; n + 1];
        let mut col_idx = Vec::new();
        let mut vals = Vec::new();
        let mut marker = vec![usize::MAX; n];
        let mut row_cols: Vec<usize> = Vec::new();
        let mut row_vals = vec![0.0f64; n];
        for i in 0..n {
            row_cols.clear();
            for &(alpha, m) in terms {
                assert_eq!(m.n, n);
                let (cols, v) = m.row(i);
                for (&j, &x) in cols.iter().zip(v) {
                    if marker[j] != i {
                        marker[j] = i;
                        row_vals[j] = 0.0;
                        row_cols.push(j);
                    }
                    row_vals[j] += alpha * x;
                }
            }
            row_cols.sort_unstable();
            for &j in &row_cols {
                col_idx.push(j);
                vals.push(row_vals[j]);
            }
            row_ptr[i + 1] = col_idx.len();
        }
        CsrMatrix { n, row_ptr, col_idx, vals }
    }

    /// Principal submatrix on the given (sorted, deduplicated) index set.
    pub fn restrict(&self, keep: &[usize]) -> CsrMatrix {
        let mut new_id = vec![usize::MAX; self.n];
        for (k, &i) in keep.iter().enumerate() {
            new_id[i] = k;
        }
        let mut triplets = Vec::new();
        for (k, &i) in keep.iter().enumerate() {
            let (cols, vals) = self.row(i);
            for (&j, &v) in cols.iter().zip(vals) {
                if new_id[j] != usize::MAX {
                    triplets.push((k, new_id[j], v));
                }
            }
        }
        CsrMatrix::from_triplets(keep.len(), &triplets)
    }

    /// (row, col, value) triplets of the stored pattern.
    pub fn triplets(&self) -> Vec<(usize, usize, f64)> {
        let mut out = Vec::with_capacity(self.nnz());
        for i in 0..self.n {
            let (cols, vals) = self.row(i);
            for (&j, &v) in cols.iter().zip(vals) {
                out.push((i, j, v));
            }
        }
        out
    }

    pub fn symmetry_defect(&self) -> f64 {
        let mut worst = 0.0f64;
        for i in 0..self.n {
            let (cols, vals) = self.row(i);
            for (&j, &v) in cols.iter().zip(vals) {
                let (jc, jv) = self.row(j);
                let vt = jc.iter().zip(jv).find(|(&c, _)| c == i).map_or(0.0, |(_, &x)| x);
                worst = worst.max((v - vt).abs());
            }
        }
        worst
    }
}

/// Symmetric preconditioner interface: z ≈ A⁻¹ r.
pub trait Preconditioner {
    fn apply(&self, r: &[f64], z: &mut [f64]);
}

/// Identity (no preconditioning).
pub struct NoPrecond;

impl Preconditioner for NoPrecond {
    fn apply(&self, r: &[f64], z: &mut [f64]) {
        z.copy_from_slice(r);
    }
}

/// Zero-fill incomplete Cholesky factor L (A ≈ L·Lᵀ, lower pattern of A).
pub struct IncompleteCholesky {
    n: usize,
    row_ptr: Vec<usize>,
    col_idx: Vec<usize>,
    vals: Vec<f64>,
    diag_pos: Vec<usize>,
}

impl IncompleteCholesky {
    /// Factor an SPD matrix; retries with a scaled diagonal shift if a
    /// pivot goes nonpositive (the shift only weakens the preconditioner,
    /// never the operator itself).
    pub fn new(a: &CsrMatrix) -> Result<Self> {
        let mut shift = 0.0;
        loop {
            match Self::try_factor(a, shift) {
                Some(f) => return Ok(f),
                None => {
                    shift = if shift == 0.0 { 1e-8 } else { shift * 10.0 };
                    if shift > 1e6 {
                        return Err(Error::numeric("incomplete Cholesky breakdown"));
                    }
                }
            }
        }
    }

    fn try_factor(a: &CsrMatrix, shift: f64) -> Option<Self> {
        let n = a.n();
        let mut row_ptr = vec![0usize; n + 1];
        let mut col_idx: Vec<usize> = Vec::new();
        let mut vals: Vec<f64> = Vec::new();
        let mut diag_pos = vec![0usize; n];
        // lower-triangular pattern, column-sorted (CSR rows are sorted)
        for i in 0..n {
            let (cols, avals) = a.row(i);
            for (&j, &v) in cols.iter().zip(avals) {
                if j < i {
                    col_idx.push(j);
                    vals.push(v);
                } else if j == i {
                    diag_pos[i] = col_idx.len();
                    col_idx.push(j);
                    vals.push(v * (1.0 + shift));
                }
            }
            row_ptr[i + 1] = col_idx.len();
        }
        // up-looking factorization restricted to the pattern
        for i in 0..n {
            let (ri_lo, ri_hi) = (row_ptr[i], row_ptr[i + 1]);
            for pos in ri_lo..ri_hi {
                let k = col_idx[pos];
                // sparse dot of rows i and k over columns < k
                let mut sum = 0.0;
                let (mut pi, mut pk) = (ri_lo, row_ptr[k]);
                let (ri_end, rk_end) = (pos, diag_pos[k]);
                while pi < ri_end && pk < rk_end {
                    match col_idx[pi].cmp(&col_idx[pk]) {
                        std::cmp::Ordering::Less => pi += 1,
                        std::cmp::Ordering::Greater => pk += 1,
                        std::cmp::Ordering::Equal => {
                            sum += vals[pi] * vals[pk];
                            pi += 1;
                            pk += 1;
                        }
                    }
                }
                if k == i {
                    let d = vals[pos] - sum;
                    if d <= 0.0 || !d.is_finite() {
                        return None;
                    }
                    vals[pos] = d.sqrt();
                } else {
                    vals[pos] = (vals[pos] - sum) / vals[diag_pos[k]];
                }
            }
        }
        Some(IncompleteCholesky { n, row_ptr, col_idx, vals, diag_pos })
    }
}

impl Preconditioner for IncompleteCholesky {
    fn apply(&self, r: &[f64], z: &mut [f64]) {
        debug_assert_eq!(r.len(), self.n);
        // forward solve L y = r
        for i in 0..self.n {
            let mut acc = r[i];
            for pos in self.row_ptr[i]..self.diag_pos[i] {
                acc -= self.vals[pos] * z[self.col_idx[pos]];
            }
            z[i] = acc / self.vals[self.diag_pos[i]];
        }
        // backward solve Lᵀ z = y
        for i in (0..self.n).rev() {
            let zi = z[i] / self.vals[self.diag_pos[i]];
            z[i] = zi;
            for pos in self.row_ptr[i]..self.diag_pos[i] {
                z[self.col_idx[pos]] -= self.vals[pos] * zi;
            }
        }
    }
}

pub fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

pub fn norm2(a: &[f64]) -> f64 {
    dot(a, a).sqrt()
}

pub fn axpy(y: &mut [f64], alpha: f64, x: &[f64]) {
    for (yi, xi) in y.iter_mut().zip(x) {
        *yi += alpha * xi;
    }
}

/// Solve A x = b by preconditioned CG, starting from the content of `x`.
pub fn pcg(
    a: &CsrMatrix,
    b: &[f64],
    x: &mut [f64],
    precond: &dyn Preconditioner,
    rel_tol: f64,
    max_iter: usize,
) -> Result<usize> {
    let n = a.n();
    let mut r = vec![0.0; n];
    a.matvec(x, &mut r);
    for i in 0..n {
        r[i] = b[i] - r[i];
    }
    let b_norm = norm2(b).max(f64::MIN_POSITIVE);
    if norm2(&r) <= rel_tol * b_norm {
        return Ok(0);
    }
    let mut z = vec![0.0; n];
    precond.apply(&r, &mut z);
    let mut p = z.clone();
    let mut rz = dot(&r, &z);
    let mut ap = vec![0.0; n];
    for it in 1..=max_iter {
        a.matvec(&p, &mut ap);
        let pap = dot(&p, &ap);
        if pap <= 0.0 || !pap.is_finite() {
            return Err(Error::numeric(format!("CG breakdown: pᵀAp = {pap}")));
        }
        let alpha = rz / pap;
        axpy(x, alpha, &p);
        axpy(&mut r, -alpha, &ap);
        if norm2(&r) <= rel_tol * b_norm {
            return Ok(it);
        }
        precond.apply(&r, &mut z);
        let rz_new = dot(&r, &z);
        let beta = rz_new / rz;
        rz = rz_new;
        for i in 0..n {
            p[i] = z[i] + beta * p[i];
        }
    }
    Err(Error::numeric(format!("CG failed to converge in {max_iter} iterations")))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn laplacian_1d(n: usize) -> CsrMatrix {
        let mut t = Vec::new();
        for i in 0..n {
            t.push((i, i, 2.0));
            if i > 0 {
                t.push((i, i - 1, -1.0));
            }
            if i + 1 < n {
                t.push((i, i + 1, -1.0));
            }
        }
        CsrMatrix::from_triplets(n, &t)
    }

    #[test]
    fn triplets_sum_duplicates() {
        let m = CsrMatrix::from_triplets(2, &[(0, 0, 1.0), (0, 0, 2.0), (1, 0, 4.0)]);
        assert_eq!(m.nnz(), 2);
        assert_eq!(m.diag(), vec![3.0, 0.0]);
    }

    #[test]
    fn matvec_and_combination() {
        let a = laplacian_1d(5);
        let b = CsrMatrix::from_triplets(5, &[(0, 0, 1.0), (4, 4, 1.0)]);
        let c = CsrMatrix::linear_combination(&[(1.0, &a), (10.0, &b)]);
        let x = vec![1.0; 5];
        let y = c.matvec_alloc(&x);
        assert_eq!(y, vec![11.0, 0.0, 0.0, 0.0, 11.0]);
        assert_eq!(c.symmetry_defect(), 0.0);
    }

    #[test]
    fn tridiagonal_ic0_is_exact() {
        let n = 40;
        let a = laplacian_1d(n);
        let ic = IncompleteCholesky::new(&a).unwrap();
        let b: Vec<f64> = (0..n).map(|i| (i as f64 * 0.37).sin()).collect();
        let mut z = vec![0.0; n];
        ic.apply(&b, &mut z);
        let r = a.matvec_alloc(&z);
        let err: f64 = r.iter().zip(&b).map(|(x, y)| (x - y).abs()).fold(0.0, f64::max);
        assert!(err < 1e-12, "exact factor expected on tridiagonal, err {err}");
    }

    #[test]
    fn pcg_solves() {
        let n = 200;
        let a = laplacian_1d(n);
        let ic = IncompleteCholesky::new(&a).unwrap();
        let b = vec![1.0; n];
        let mut x = vec![0.0; n];
        let iters = pcg(&a, &b, &mut x, &ic, 1e-12, 500).unwrap();
        assert!(iters <= 3, "tridiagonal PCG should be direct, took {iters}");
        let r = a.matvec_alloc(&x);
        assert!(r.iter().zip(&b).all(|(x, y)| (x - y).abs() < 1e-9));
    }

    #[test]
    fn restrict_takes_principal_block() {
        let a = laplacian_1d(5);
        let r = a.restrict(&[1, 2, 3]);
        assert_eq!(r.n(), 3);
        assert_eq!(r.diag(), vec![2.0, 2.0, 2.0]);
        let y = r.matvec_alloc(&[1.0, 1.0, 1.0]);
        assert_eq!(y, vec![1.0, 0.0, 1.0]);
    }
}
