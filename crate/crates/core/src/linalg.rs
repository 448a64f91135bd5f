//! Minimal dense real linear algebra kernel.
//!
//! Row-major `f64` matrices with the four factorizations the solver needs:
//! Cholesky, a cyclic Jacobi symmetric eigensolver, LU with partial
//! pivoting, and least squares via column-scaled normal equations. All
//! routines are pure functions of their inputs and fully deterministic
//! (fixed sweep orders, fixed tie-breaks, fixed eigenvector sign
//! convention), so outputs are reproducible byte for byte.

use alloc::vec;
use alloc::vec::Vec;
use core::fmt;
use core::ops::{Index, IndexMut};

#[allow(unused_imports)]
use num_traits::Float;

/// Relative tolerance when checking that a matrix is symmetric.
pub const SYMMETRY_TOL: f64 = 1e-12;
/// A Cholesky pivot below this fraction of the largest diagonal entry
/// counts as non-positive.
const CHOLESKY_PIVOT_REL: f64 = 1e-13;
/// LU pivots below this fraction of the largest matrix entry are singular.
const LU_PIVOT_REL: f64 = 1e-14;
/// Jacobi eigensolver sweep limit.
const JACOBI_MAX_SWEEPS: usize = 100;
/// Jacobi stops once the off-diagonal Frobenius norm drops below this
/// fraction of the input Frobenius norm.
const JACOBI_TOL_REL: f64 = 1e-12;

#[derive(Debug, Clone, PartialEq)]
pub enum LinalgError {
    /// Input violated the symmetry precondition.
    NotSymmetric { deviation: f64 },
    /// Cholesky hit a non-positive pivot; the 0-based pivot index names the
    /// first failing row.
    NotPositiveDefinite { pivot: usize },
    /// Jacobi did not reach the off-diagonal target within the sweep limit.
    NoConvergence { sweeps: usize },
    /// LU elimination found no usable pivot.
    Singular { condition_estimate: f64 },
    /// Scaled normal equations were not positive definite.
    RankDeficient,
}

impl fmt::Display for LinalgError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            LinalgError::NotSymmetric { deviation } => {
                write!(f, "matrix is not symmetric (max|A - A^T| = {deviation:e})")
            }
            LinalgError::NotPositiveDefinite { pivot } => {
                write!(f, "matrix is not positive definite (pivot {pivot})")
            }
            LinalgError::NoConvergence { sweeps } => {
                write!(f, "Jacobi eigensolver did not converge in {sweeps} sweeps")
            }
            LinalgError::Singular { condition_estimate } => {
                write!(f, "matrix is singular (condition estimate {condition_estimate:e})")
            }
            LinalgError::RankDeficient => write!(f, "least-squares system is rank deficient"),
        }
    }
}

/// Dense row-major matrix of 64-bit floats.
#[derive(Debug, Clone, PartialEq)]
pub struct DenseMatrix {
    rows: usize,
    cols: usize,
    data: Vec<f64>,
}

impl DenseMatrix {
    pub fn zeros(rows: usize, cols: usize) -> Self {
        DenseMatrix { rows, cols, data: vec![0.0; rows * cols] }
    }

    pub fn identity(n: usize) -> Self {
        let mut m = DenseMatrix::zeros(n, n);
        for i in 0..n {
            m[(i, i)] = 1.0;
        }
        m
    }

    pub fn from_rows(rows: &[Vec<f64>]) -> Self {
        let r = rows.len();
        let c = if r == 0 { 0 } else { rows[0].len() };
        let mut m = DenseMatrix::zeros(r, c);
        for (i, row) in rows.iter().enumerate() {
            assert_eq!(row.len(), c, "ragged rows");
            m.row_mut(i).copy_from_slice(row);
        }
        m
    }

    pub fn from_fn(rows: usize, cols: usize, mut f: impl FnMut(usize, usize) -> f64) -> Self {
        let mut m = DenseMatrix::zeros(rows, cols);
        for i in 0..rows {
            for j in 0..cols {
                m[(i, j)] = f(i, j);
            }
        }
        m
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn row(&self, r: usize) -> &[f64] {
        &self.data[r * self.cols..(r + 1) * self.cols]
    }

    pub fn row_mut(&mut self, r: usize) -> &mut [f64] {
        &mut self.data[r * self.cols..(r + 1) * self.cols]
    }

    pub fn col(&self, c: usize) -> Vec<f64> {
        (0..self.rows).map(|i| self[(i, c)]).collect()
    }

    pub fn set_col(&mut self, c: usize, values: &[f64]) {
        assert_eq!(values.len(), self.rows);
        for (i, v) in values.iter().enumerate() {
            self[(i, c)] = *v;
        }
    }

    pub fn transpose(&self) -> DenseMatrix {
        let mut t = DenseMatrix::zeros(self.cols, self.rows);
        for i in 0..self.rows {
            for j in 0..self.cols {
                t[(j, i)] = self[(i, j)];
            }
        }
        t
    }

    pub fn matvec(&self, x: &[f64]) -> Vec<f64> {
        assert_eq!(x.len(), self.cols);
        let mut y = vec![0.0; self.rows];
        for i in 0..self.rows {
            let row = self.row(i);
            let mut acc = 0.0;
            for (a, b) in row.iter().zip(x.iter()) {
                acc += a * b;
            }
            y[i] = acc;
        }
        y
    }

    pub fn matmul(&self, rhs: &DenseMatrix) -> DenseMatrix {
        assert_eq!(self.cols, rhs.rows, "inner dimensions must match");
        let mut out = DenseMatrix::zeros(self.rows, rhs.cols);
        for i in 0..self.rows {
            for k in 0..self.cols {
                let aik = self[(i, k)];
                if aik == 0.0 {
                    continue;
                }
                let rrow = rhs.row(k);
                let orow = out.row_mut(i);
                for j in 0..rrow.len() {
                    orow[j] += aik * rrow[j];
                }
            }
        }
        out
    }

    /// Largest absolute entry.
    pub fn max_abs(&self) -> f64 {
        self.data.iter().fold(0.0, |m, v| m.max(v.abs()))
    }

    pub fn frobenius(&self) -> f64 {
        self.data.iter().map(|v| v * v).sum::<f64>().sqrt()
    }

    /// max|A - A^T|.
    pub fn symmetry_deviation(&self) -> f64 {
        assert_eq!(self.rows, self.cols);
        let mut dev: f64 = 0.0;
        for i in 0..self.rows {
            for j in (i + 1)..self.cols {
                dev = dev.max((self[(i, j)] - self[(j, i)]).abs());
            }
        }
        dev
    }

    fn require_symmetric(&self) -> Result<(), LinalgError> {
        assert_eq!(self.rows, self.cols, "symmetric operation on non-square matrix");
        let dev = self.symmetry_deviation();
        if dev > SYMMETRY_TOL * self.max_abs().max(f64::MIN_POSITIVE) {
            return Err(LinalgError::NotSymmetric { deviation: dev });
        }
        Ok(())
    }

    /// Replace A by (A + A^T)/2, removing round-off asymmetry.
    pub fn symmetrize(&mut self) {
        assert_eq!(self.rows, self.cols);
        for i in 0..self.rows {
            for j in (i + 1)..self.cols {
                let s = 0.5 * (self[(i, j)] + self[(j, i)]);
                self[(i, j)] = s;
                self[(j, i)] = s;
            }
        }
    }

    /// A += scale * u u^T.
    pub fn add_scaled_outer(&mut self, scale: f64, u: &[f64]) {
        assert_eq!(self.rows, self.cols);
        assert_eq!(u.len(), self.rows);
        for i in 0..self.rows {
            let ui = scale * u[i];
            let row = self.row_mut(i);
            for j in 0..u.len() {
                row[j] += ui * u[j];
            }
        }
    }
}

impl Index<(usize, usize)> for DenseMatrix {
    type Output = f64;
    fn index(&self, (r, c): (usize, usize)) -> &f64 {
        debug_assert!(r < self.rows && c < self.cols);
        &self.data[r * self.cols + c]
    }
}

impl IndexMut<(usize, usize)> for DenseMatrix {
    fn index_mut(&mut self, (r, c): (usize, usize)) -> &mut f64 {
        debug_assert!(r < self.rows && c < self.cols);
        &mut self.data[r * self.cols + c]
    }
}

/// Cholesky factorization A = L L^T of a symmetric positive definite matrix.
///
/// Returns the lower-triangular factor. Fails with the 0-based pivot index
/// as soon as a diagonal pivot drops below `CHOLESKY_PIVOT_REL` times the
/// largest diagonal entry, which is how coercivity failures of the damped
/// collision operator surface.
pub fn cholesky(a: &DenseMatrix) -> Result<DenseMatrix, LinalgError> {
    a.require_symmetric()?;
    let n = a.rows();
    let mut max_diag: f64 = 0.0;
    for i in 0..n {
        max_diag = max_diag.max(a[(i, i)].abs());
    }
    let floor = CHOLESKY_PIVOT_REL * max_diag.max(f64::MIN_POSITIVE);

    let mut l = DenseMatrix::zeros(n, n);
    for j in 0..n {
        let mut d = a[(j, j)];
        for k in 0..j {
            d -= l[(j, k)] * l[(j, k)];
        }
        if !(d > floor) {
            return Err(LinalgError::NotPositiveDefinite { pivot: j });
        }
        let dj = d.sqrt();
        l[(j, j)] = dj;
        for i in (j + 1)..n {
            let mut s = a[(i, j)];
            for k in 0..j {
                s -= l[(i, k)] * l[(j, k)];
            }
            l[(i, j)] = s / dj;
        }
    }
    Ok(l)
}

/// Solve L y = b with L lower triangular.
pub fn solve_lower(l: &DenseMatrix, b: &[f64]) -> Vec<f64> {
    let n = l.rows();
    assert_eq!(b.len(), n);
    let mut y = vec![0.0; n];
    for i in 0..n {
        let mut s = b[i];
        let row = l.row(i);
        for k in 0..i {
            s -= row[k] * y[k];
        }
        y[i] = s / row[i];
    }
    y
}

/// Solve L^T x = b with L lower triangular.
pub fn solve_lower_transpose(l: &DenseMatrix, b: &[f64]) -> Vec<f64> {
    let n = l.rows();
    assert_eq!(b.len(), n);
    let mut x = vec![0.0; n];
    for i in (0..n).rev() {
        let mut s = b[i];
        for k in (i + 1)..n {
            s -= l[(k, i)] * x[k];
        }
        x[i] = s / l[(i, i)];
    }
    x
}

/// Symmetric eigendecomposition by cyclic Jacobi rotations.
///
/// Returns eigenvalues in ascending order and the matching column
/// eigenvectors with `V^T V = I`. Sign convention: the first
/// largest-magnitude component of each eigenvector is made positive, so
/// repeated runs and golden files agree.
pub fn sym_eig(a: &DenseMatrix) -> Result<(Vec<f64>, DenseMatrix), LinalgError> {
    a.require_symmetric()?;
    let n = a.rows();
    if n == 0 {
        return Ok((Vec::new(), DenseMatrix::zeros(0, 0)));
    }
    let mut m = a.clone();
    m.symmetrize();
    // Eigenvectors accumulate as *rows* of vt so rotations touch
    // contiguous memory; transposed into columns at the end.
    let mut vt = DenseMatrix::identity(n);

    let norm = m.frobenius();
    if norm == 0.0 {
        return Ok((vec![0.0; n], vt));
    }
    // `tol` is the acceptance threshold; sweeps continue past it down to
    // `target` (quadratic convergence makes the extra sweep cheap) so that
    // downstream quadrature nodes come out at machine accuracy.
    let tol = JACOBI_TOL_REL * norm;
    let target = 4.0 * f64::EPSILON * norm;
    let skip = target / (10.0 * n as f64);

    let mut row_p = vec![0.0; n];
    let mut row_q = vec![0.0; n];
    let mut converged = false;
    let mut prev_off = f64::INFINITY;
    for _sweep in 0..JACOBI_MAX_SWEEPS {
        let mut off = 0.0;
        for p in 0..n {
            let row = m.row(p);
            for q in (p + 1)..n {
                off += 2.0 * row[q] * row[q];
            }
        }
        let off = off.sqrt();
        if off <= target || (off <= tol && off >= 0.5 * prev_off) {
            converged = true;
            break;
        }
        prev_off = off;
        for p in 0..(n - 1) {
            for q in (p + 1)..n {
                let apq = m[(p, q)];
                if apq.abs() <= skip {
                    continue;
                }
                let app = m[(p, p)];
                let aqq = m[(q, q)];
                let theta = (aqq - app) / (2.0 * apq);
                let t = if theta == 0.0 {
                    1.0
                } else {
                    theta.signum() / (theta.abs() + (theta * theta + 1.0).sqrt())
                };
                let c = 1.0 / (t * t + 1.0).sqrt();
                let s = t * c;

                // Rotate rows p and q in contiguous scratch, then mirror
                // into the columns (the matrix stays symmetric).
                row_p.copy_from_slice(m.row(p));
                row_q.copy_from_slice(m.row(q));
                for i in 0..n {
                    let aip = row_p[i];
                    let aiq = row_q[i];
                    row_p[i] = c * aip - s * aiq;
                    row_q[i] = s * aip + c * aiq;
                }
                row_p[p] = app - t * apq;
                row_q[q] = aqq + t * apq;
                row_p[q] = 0.0;
                row_q[p] = 0.0;
                m.row_mut(p).copy_from_slice(&row_p);
                m.row_mut(q).copy_from_slice(&row_q);
                for i in 0..n {
                    m[(i, p)] = row_p[i];
                    m[(i, q)] = row_q[i];
                }

                row_p.copy_from_slice(vt.row(p));
                row_q.copy_from_slice(vt.row(q));
                for i in 0..n {
                    let vip = row_p[i];
                    let viq = row_q[i];
                    row_p[i] = c * vip - s * viq;
                    row_q[i] = s * vip + c * viq;
                }
                vt.row_mut(p).copy_from_slice(&row_p);
                vt.row_mut(q).copy_from_slice(&row_q);
            }
        }
    }
    if !converged {
        // Final check: the last sweep may have finished the job.
        let mut off = 0.0;
        for p in 0..n {
            let row = m.row(p);
            for q in (p + 1)..n {
                off += 2.0 * row[q] * row[q];
            }
        }
        if off.sqrt() > tol {
            return Err(LinalgError::NoConvergence { sweeps: JACOBI_MAX_SWEEPS });
        }
    }
    let v = vt.transpose();

    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&i, &j| m[(i, i)].partial_cmp(&m[(j, j)]).unwrap().then(i.cmp(&j)));

    let mut values = vec![0.0; n];
    let mut vectors = DenseMatrix::zeros(n, n);
    for (dst, &src) in order.iter().enumerate() {
        values[dst] = m[(src, src)];
        // Fix the sign: first component of largest magnitude becomes positive.
        let mut pivot = 0;
        let mut best = 0.0;
        for i in 0..n {
            let mag = v[(i, src)].abs();
            if mag > best {
                best = mag;
                pivot = i;
            }
        }
        let flip = if v[(pivot, src)] < 0.0 { -1.0 } else { 1.0 };
        for i in 0..n {
            vectors[(i, dst)] = flip * v[(i, src)];
        }
    }
    Ok((values, vectors))
}

/// LU factorization with partial pivoting, reusable for several right-hand
/// sides.
pub struct LuFactors {
    lu: DenseMatrix,
    perm: Vec<usize>,
}

pub fn lu_factor(a: &DenseMatrix) -> Result<LuFactors, LinalgError> {
    assert_eq!(a.rows(), a.cols(), "solve requires a square matrix");
    let n = a.rows();
    let norm = a.max_abs();
    let floor = LU_PIVOT_REL * norm.max(f64::MIN_POSITIVE);

    let mut lu = a.clone();
    let mut perm: Vec<usize> = (0..n).collect();
    for k in 0..n {
        let mut piv = k;
        let mut best = lu[(k, k)].abs();
        for i in (k + 1)..n {
            let mag = lu[(i, k)].abs();
            if mag > best {
                best = mag;
                piv = i;
            }
        }
        if best < floor {
            let est = if best > 0.0 { norm / best } else { f64::INFINITY };
            return Err(LinalgError::Singular { condition_estimate: est });
        }
        if piv != k {
            perm.swap(k, piv);
            for j in 0..n {
                let tmp = lu[(k, j)];
                lu[(k, j)] = lu[(piv, j)];
                lu[(piv, j)] = tmp;
            }
        }
        let dk = lu[(k, k)];
        for i in (k + 1)..n {
            let f = lu[(i, k)] / dk;
            lu[(i, k)] = f;
            if f == 0.0 {
                continue;
            }
            for j in (k + 1)..n {
                let delta = f * lu[(k, j)];
                lu[(i, j)] -= delta;
            }
        }
    }
    Ok(LuFactors { lu, perm })
}

impl LuFactors {
    pub fn solve(&self, b: &[f64]) -> Vec<f64> {
        let n = self.lu.rows();
        assert_eq!(b.len(), n);
        let mut y = vec![0.0; n];
        for i in 0..n {
            let mut s = b[self.perm[i]];
            let row = self.lu.row(i);
            for k in 0..i {
                s -= row[k] * y[k];
            }
            y[i] = s;
        }
        for i in (0..n).rev() {
            let row = self.lu.row(i);
            let mut s = y[i];
            for k in (i + 1)..n {
                s -= row[k] * y[k];
            }
            y[i] = s / row[i];
        }
        y
    }

    /// Invert column by column. Used to cross-validate closed-form
    /// boundary operator inverses.
    pub fn inverse(&self) -> DenseMatrix {
        let n = self.lu.rows();
        let mut inv = DenseMatrix::zeros(n, n);
        let mut e = vec![0.0; n];
        for j in 0..n {
            e[j] = 1.0;
            let col = self.solve(&e);
            inv.set_col(j, &col);
            e[j] = 0.0;
        }
        inv
    }
}

/// Solve A x = b by LU with partial pivoting.
pub fn solve(a: &DenseMatrix, b: &[f64]) -> Result<Vec<f64>, LinalgError> {
    Ok(lu_factor(a)?.solve(b))
}

/// Least squares min ||A x - b||_2 for rows >= cols via normal equations
/// with column scaling. Returns the minimizer and the residual norm.
pub fn least_squares(a: &DenseMatrix, b: &[f64]) -> Result<(Vec<f64>, f64), LinalgError> {
    let (rows, cols) = (a.rows(), a.cols());
    assert!(rows >= cols, "least squares requires rows >= cols");
    assert_eq!(b.len(), rows);

    let mut scale = vec![0.0; cols];
    for (j, s) in scale.iter_mut().enumerate() {
        let norm = a.col(j).iter().map(|v| v * v).sum::<f64>().sqrt();
        if norm == 0.0 {
            return Err(LinalgError::RankDeficient);
        }
        *s = norm;
    }

    let mut normal = DenseMatrix::zeros(cols, cols);
    let mut rhs = vec![0.0; cols];
    for i in 0..rows {
        let row = a.row(i);
        for j in 0..cols {
            let aij = row[j] / scale[j];
            rhs[j] += aij * b[i];
            for k in j..cols {
                normal[(j, k)] += aij * row[k] / scale[k];
            }
        }
    }
    for j in 0..cols {
        for k in (j + 1)..cols {
            normal[(k, j)] = normal[(j, k)];
        }
    }

    let l = cholesky(&normal).map_err(|_| LinalgError::RankDeficient)?;
    let y = solve_lower(&l, &rhs);
    let z = solve_lower_transpose(&l, &y);
    let x: Vec<f64> = z.iter().zip(scale.iter()).map(|(v, s)| v / s).collect();

    let ax = a.matvec(&x);
    let residual = ax
        .iter()
        .zip(b.iter())
        .map(|(p, q)| (p - q) * (p - q))
        .sum::<f64>()
        .sqrt();
    Ok((x, residual))
}

pub fn dot(a: &[f64], b: &[f64]) -> f64 {
    assert_eq!(a.len(), b.len());
    a.iter().zip(b.iter()).map(|(x, y)| x * y).sum()
}

pub fn norm2(a: &[f64]) -> f64 {
    dot(a, a).sqrt()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng::SplitMix64;

    fn random_symmetric(n: usize, rng: &mut SplitMix64) -> DenseMatrix {
        let mut a = DenseMatrix::zeros(n, n);
        for i in 0..n {
            for j in i..n {
                let v = rng.next_symmetric();
                a[(i, j)] = v;
                a[(j, i)] = v;
            }
        }
        a
    }

    fn random_spd(n: usize, rng: &mut SplitMix64) -> DenseMatrix {
        let m = DenseMatrix::from_fn(n, n, |_, _| rng.next_symmetric());
        let mut a = m.transpose().matmul(&m);
        for i in 0..n {
            a[(i, i)] += 0.5 * n as f64;
        }
        a.symmetrize();
        a
    }

    /// Sylvester signature oracle: pivoted LDL^T with diagonal pivoting.
    fn ldlt_signature(a: &DenseMatrix) -> (usize, usize, usize) {
        let n = a.rows();
        let mut m = a.clone();
        let mut alive: Vec<usize> = (0..n).collect();
        let (mut pos, mut neg, mut zero) = (0, 0, 0);
        let scale = m.max_abs().max(f64::MIN_POSITIVE);
        while let Some((slot, &idx)) = alive
            .iter()
            .enumerate()
            .max_by(|x, y| m[(*x.1, *x.1)].abs().partial_cmp(&m[(*y.1, *y.1)].abs()).unwrap())
        {
            let d = m[(idx, idx)];
            if d.abs() < 1e-12 * scale {
                zero += alive.len();
                break;
            }
            if d > 0.0 {
                pos += 1;
            } else {
                neg += 1;
            }
            alive.remove(slot);
            for &i in &alive {
                for &j in &alive {
                    let update = m[(i, idx)] * m[(idx, j)] / d;
                    m[(i, j)] -= update;
                }
            }
            let _ = slot;
        }
        (pos, neg, zero)
    }

    #[test]
    fn cholesky_identity() {
        let a = DenseMatrix::identity(3);
        let l = cholesky(&a).unwrap();
        assert_eq!(l, DenseMatrix::identity(3));
    }

    #[test]
    fn cholesky_known_factor() {
        let a = DenseMatrix::from_rows(&[vec![4.0, 2.0], vec![2.0, 5.0]]);
        let l = cholesky(&a).unwrap();
        let expect = DenseMatrix::from_rows(&[vec![2.0, 0.0], vec![1.0, 2.0]]);
        for i in 0..2 {
            for j in 0..2 {
                assert!((l[(i, j)] - expect[(i, j)]).abs() < 1e-14);
            }
        }
    }

    #[test]
    fn cholesky_indefinite_reports_pivot() {
        // Eigenvalues 3 and -1, so the second pivot fails.
        let a = DenseMatrix::from_rows(&[vec![1.0, 2.0], vec![2.0, 1.0]]);
        match cholesky(&a) {
            Err(LinalgError::NotPositiveDefinite { pivot }) => assert_eq!(pivot, 1),
            other => panic!("expected NotPositiveDefinite, got {other:?}"),
        }
    }

    #[test]
    fn cholesky_reconstructs_random_spd() {
        let mut rng = SplitMix64::new(0x5eed);
        for trial in 0..100 {
            let n = 2 + (trial % 49);
            let a = random_spd(n, &mut rng);
            let l = cholesky(&a).unwrap();
            let back = l.matmul(&l.transpose());
            let scale = a.max_abs();
            for i in 0..n {
                for j in 0..n {
                    assert!(
                        (back[(i, j)] - a[(i, j)]).abs() <= 1e-10 * scale,
                        "n={n} entry ({i},{j})"
                    );
                }
            }
        }
    }

    #[test]
    fn sym_eig_diagonal_permutation() {
        let a = DenseMatrix::from_rows(&[
            vec![3.0, 0.0, 0.0],
            vec![0.0, 1.0, 0.0],
            vec![0.0, 0.0, 2.0],
        ]);
        let (vals, vecs) = sym_eig(&a).unwrap();
        assert!((vals[0] - 1.0).abs() < 1e-14);
        assert!((vals[1] - 2.0).abs() < 1e-14);
        assert!((vals[2] - 3.0).abs() < 1e-14);
        // Permutation eigenvectors with positive orientation.
        assert!((vecs[(1, 0)] - 1.0).abs() < 1e-14);
        assert!((vecs[(2, 1)] - 1.0).abs() < 1e-14);
        assert!((vecs[(0, 2)] - 1.0).abs() < 1e-14);
    }

    #[test]
    fn sym_eig_two_by_two_closed_form() {
        let a = DenseMatrix::from_rows(&[vec![0.0, 1.0], vec![1.0, 0.0]]);
        let (vals, vecs) = sym_eig(&a).unwrap();
        let inv_sqrt2 = core::f64::consts::FRAC_1_SQRT_2;
        assert!((vals[0] + 1.0).abs() < 1e-14);
        assert!((vals[1] - 1.0).abs() < 1e-14);
        assert!((vecs[(0, 0)] - inv_sqrt2).abs() < 1e-14);
        assert!((vecs[(1, 0)] + inv_sqrt2).abs() < 1e-14);
        assert!((vecs[(0, 1)] - inv_sqrt2).abs() < 1e-14);
        assert!((vecs[(1, 1)] - inv_sqrt2).abs() < 1e-14);
    }

    #[test]
    fn sym_eig_residual_random() {
        let mut rng = SplitMix64::new(42);
        let a = random_symmetric(5, &mut rng);
        let (vals, vecs) = sym_eig(&a).unwrap();
        let av = a.matmul(&vecs);
        for j in 0..5 {
            for i in 0..5 {
                let r = av[(i, j)] - vals[j] * vecs[(i, j)];
                assert!(r.abs() <= 1e-10, "residual {r:e}");
            }
        }
        // Orthonormality.
        let vtv = vecs.transpose().matmul(&vecs);
        for i in 0..5 {
            for j in 0..5 {
                let expect = if i == j { 1.0 } else { 0.0 };
                assert!((vtv[(i, j)] - expect).abs() <= 1e-10);
            }
        }
    }

    #[test]
    fn sym_eig_trace_and_signature() {
        let mut rng = SplitMix64::new(7);
        for trial in 0..20 {
            let n = 3 + (trial % 10);
            let a = random_symmetric(n, &mut rng);
            let (vals, _) = sym_eig(&a).unwrap();
            let trace: f64 = (0..n).map(|i| a[(i, i)]).sum();
            let sum: f64 = vals.iter().sum();
            assert!((trace - sum).abs() <= 1e-10 * trace.abs().max(1.0));

            let pos = vals.iter().filter(|v| **v > 0.0).count();
            let neg = vals.iter().filter(|v| **v < 0.0).count();
            let (p, m, _) = ldlt_signature(&a);
            assert_eq!((pos, neg), (p, m), "signature mismatch at n={n}");
        }
    }

    #[test]
    fn solve_identity_and_diagonal() {
        let a = DenseMatrix::identity(3);
        let b = vec![1.0, -2.0, 3.0];
        assert_eq!(solve(&a, &b).unwrap(), b);

        let d = DenseMatrix::from_rows(&[vec![2.0, 0.0], vec![0.0, 4.0]]);
        let x = solve(&d, &[2.0, 8.0]).unwrap();
        assert!((x[0] - 1.0).abs() < 1e-15 && (x[1] - 2.0).abs() < 1e-15);
    }

    #[test]
    fn solve_hilbert_with_manufactured_rhs() {
        let n = 4;
        let h = DenseMatrix::from_fn(n, n, |i, j| 1.0 / ((i + j + 1) as f64));
        let b = h.matvec(&vec![1.0; n]);
        let x = solve(&h, &b).unwrap();
        for v in &x {
            assert!((v - 1.0).abs() <= 1e-8, "{v}");
        }
    }

    #[test]
    fn solve_roundtrip_random() {
        let mut rng = SplitMix64::new(11);
        for _ in 0..20 {
            let n = 8;
            let a = random_spd(n, &mut rng);
            let x_true: Vec<f64> = (0..n).map(|_| rng.next_symmetric()).collect();
            let b = a.matvec(&x_true);
            let x = solve(&a, &b).unwrap();
            for (u, v) in x.iter().zip(x_true.iter()) {
                assert!((u - v).abs() <= 1e-9);
            }
        }
    }

    #[test]
    fn solve_singular_detected() {
        let a = DenseMatrix::from_rows(&[vec![1.0, 2.0], vec![2.0, 4.0]]);
        match solve(&a, &[1.0, 2.0]) {
            Err(LinalgError::Singular { .. }) => {}
            other => panic!("expected Singular, got {other:?}"),
        }
    }

    #[test]
    fn least_squares_matches_solve_on_square_systems() {
        let a = DenseMatrix::from_rows(&[vec![3.0, 1.0], vec![1.0, 2.0]]);
        let b = vec![5.0, 5.0];
        let direct = solve(&a, &b).unwrap();
        let (ls, residual) = least_squares(&a, &b).unwrap();
        for (u, v) in ls.iter().zip(direct.iter()) {
            assert!((u - v).abs() <= 1e-9);
        }
        assert!(residual <= 1e-10);
    }

    #[test]
    fn least_squares_one_parameter() {
        let a = DenseMatrix::from_rows(&[vec![1.0], vec![1.0]]);
        let (x, residual) = least_squares(&a, &[0.0, 2.0]).unwrap();
        assert!((x[0] - 1.0).abs() <= 1e-14);
        assert!((residual - core::f64::consts::SQRT_2).abs() <= 1e-14);
    }

    #[test]
    fn least_squares_consistent_overdetermined() {
        let a = DenseMatrix::from_rows(&[
            vec![1.0, 0.0],
            vec![0.0, 1.0],
            vec![1.0, 1.0],
        ]);
        let x_true = [2.0, -3.0];
        let b = a.matvec(&x_true);
        let (x, residual) = least_squares(&a, &b).unwrap();
        assert!((x[0] - 2.0).abs() <= 1e-12 && (x[1] + 3.0).abs() <= 1e-12);
        assert!(residual <= 1e-10);
    }

    #[test]
    fn least_squares_rank_deficient() {
        let a = DenseMatrix::from_rows(&[vec![1.0, 1.0], vec![1.0, 1.0], vec![1.0, 1.0]]);
        match least_squares(&a, &[1.0, 1.0, 1.0]) {
            Err(LinalgError::RankDeficient) => {}
            other => panic!("expected RankDeficient, got {other:?}"),
        }
    }

    #[test]
    fn sym_eig_rejects_asymmetric() {
        let a = DenseMatrix::from_rows(&[vec![1.0, 2.0], vec![0.0, 1.0]]);
        assert!(matches!(sym_eig(&a), Err(LinalgError::NotSymmetric { .. })));
    }
}
