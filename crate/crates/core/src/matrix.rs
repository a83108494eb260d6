//! Dense real linear algebra.
//!
//! A row-major matrix type plus the handful of factorizations the manifold
//! code needs: LU with partial pivoting, Cholesky, cyclic Jacobi for
//! symmetric eigenproblems, the Padé-13 matrix exponential and a seeded
//! complex QR used to build unitary test matrices.
//!
//! Storage is `data[i * cols + j] = A[i, j]`. Arithmetic with mismatched
//! shapes panics (like indexing out of bounds); factorizations and solves
//! return [`LinalgError`].

use std::fmt;
use std::ops::{Add, AddAssign, Index, IndexMut, Mul, Neg, Sub, SubAssign};

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use thiserror::Error;

/// Residual tolerance (relative) for all linear solves.
pub const TOL_SOLVE: f64 = 1e-10;

/// Cap on Jacobi sweeps before reporting [`LinalgError::NoConvergence`].
pub const JACOBI_MAX_SWEEPS: usize = 100;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum LinalgError {
    #[error("shape mismatch: expected {expected:?}, got {got:?}")]
    ShapeMismatch {
        expected: (usize, usize),
        got: (usize, usize),
    },
    #[error("matrix must be square, got {0}x{1}")]
    NotSquare(usize, usize),
    #[error("singular matrix (pivot {pivot:.3e} below threshold {threshold:.3e})")]
    SingularMatrix { pivot: f64, threshold: f64 },
    #[error("matrix is not positive definite")]
    NotPositiveDefinite,
    #[error("matrix is not symmetric (asymmetry {0:.3e})")]
    NotSymmetric(f64),
    #[error("Jacobi iteration did not converge after {0} sweeps")]
    NoConvergence(usize),
    #[error("rank deficient column encountered after {0} draws")]
    RankDeficient(usize),
    #[error("non-finite entry produced")]
    NonFinite,
}

pub type LinalgResult<T> = Result<T, LinalgError>;

/// Seed for every random generator in the crate.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Default)]
pub struct Seed(pub u64);

impl Seed {
    /// Independent sub-stream derived from this seed (splitmix64 mixing).
    pub fn derive(self, stream: u64) -> Seed {
        let mut z = self
            .0
            .wrapping_add(0x9E37_79B9_7F4A_7C15u64.wrapping_mul(stream.wrapping_add(1)));
        z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
        z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
        Seed(z ^ (z >> 31))
    }

    pub fn rng(self) -> ChaCha8Rng {
        ChaCha8Rng::seed_from_u64(self.0)
    }
}

impl fmt::Display for Seed {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.0)
    }
}

#[derive(Clone, PartialEq)]
pub struct DenseMatrix {
    rows: usize,
    cols: usize,
    data: Vec<f64>,
}

impl fmt::Debug for DenseMatrix {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(f, "DenseMatrix {}x{} [", self.rows, self.cols)?;
        for i in 0..self.rows.min(8) {
            let row: Vec<String> = (0..self.cols.min(8))
                .map(|j| format!("{:>11.4e}", self[(i, j)]))
                .collect();
            writeln!(f, "  {}", row.join(" "))?;
        }
        write!(f, "]")
    }
}

impl DenseMatrix {
    pub fn zeros(rows: usize, cols: usize) -> Self {
        Self {
            rows,
            cols,
            data: vec![0.0; rows * cols],
        }
    }

    pub fn identity(n: usize) -> Self {
        let mut m = Self::zeros(n, n);
        for i in 0..n {
            m.data[i * n + i] = 1.0;
        }
        m
    }

    pub fn from_vec(rows: usize, cols: usize, data: Vec<f64>) -> LinalgResult<Self> {
        if data.len() != rows * cols {
            return Err(LinalgError::ShapeMismatch {
                expected: (rows, cols),
                got: (data.len(), 1),
            });
        }
        Ok(Self { rows, cols, data })
    }

    /// # Panics
    /// If the rows have different lengths.
    pub fn from_rows(rows: &[&[f64]]) -> Self {
        let r = rows.len();
        let c = rows.first().map_or(0, |row| row.len());
        let mut data = Vec::with_capacity(r * c);
        for row in rows {
            assert_eq!(row.len(), c, "ragged rows");
            data.extend_from_slice(row);
        }
        Self { rows: r, cols: c, data }
    }

    pub fn from_fn(rows: usize, cols: usize, mut f: impl FnMut(usize, usize) -> f64) -> Self {
        let mut data = Vec::with_capacity(rows * cols);
        for i in 0..rows {
            for j in 0..cols {
                data.push(f(i, j));
            }
        }
        Self { rows, cols, data }
    }

    pub fn from_diag(diag: &[f64]) -> Self {
        let n = diag.len();
        let mut m = Self::zeros(n, n);
        for (i, &d) in diag.iter().enumerate() {
            m.data[i * n + i] = d;
        }
        m
    }

    /// Matrix with i.i.d. standard normal entries.
    pub fn randn<R: rand::Rng + ?Sized>(rows: usize, cols: usize, rng: &mut R) -> Self {
        let data = (0..rows * cols).map(|_| StandardNormal.sample(rng)).collect();
        Self { rows, cols, data }
    }

    #[inline]
    pub fn rows(&self) -> usize {
        self.rows
    }

    #[inline]
    pub fn cols(&self) -> usize {
        self.cols
    }

    #[inline]
    pub fn shape(&self) -> (usize, usize) {
        (self.rows, self.cols)
    }

    pub fn is_square(&self) -> bool {
        self.rows == self.cols
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.data
    }

    pub fn into_vec(self) -> Vec<f64> {
        self.data
    }

    pub fn row(&self, i: usize) -> &[f64] {
        &self.data[i * self.cols..(i + 1) * self.cols]
    }

    pub fn transpose(&self) -> Self {
        let mut out = Self::zeros(self.cols, self.rows);
        for i in 0..self.rows {
            for j in 0..self.cols {
                out.data[j * self.rows + i] = self.data[i * self.cols + j];
            }
        }
        out
    }

    /// `self * other`.
    pub fn matmul(&self, other: &Self) -> Self {
        assert_eq!(
            self.cols, other.rows,
            "matmul: {}x{} * {}x{}",
            self.rows, self.cols, other.rows, other.cols
        );
        let (m, n) = (self.rows, other.cols);
        let mut out = Self::zeros(m, n);
        for i in 0..m {
            let out_row = &mut out.data[i * n..(i + 1) * n];
            for (p, &a) in self.row(i).iter().enumerate() {
                if a == 0.0 {
                    continue;
                }
                let b_row = &other.data[p * n..(p + 1) * n];
                for (o, &b) in out_row.iter_mut().zip(b_row) {
                    *o += a * b;
                }
            }
        }
        out
    }

    /// `selfᵀ * other` without forming the transpose.
    pub fn t_matmul(&self, other: &Self) -> Self {
        assert_eq!(
            self.rows, other.rows,
            "t_matmul: ({}x{})ᵀ * {}x{}",
            self.rows, self.cols, other.rows, other.cols
        );
        let (m, n) = (self.cols, other.cols);
        let mut out = Self::zeros(m, n);
        for p in 0..self.rows {
            let a_row = self.row(p);
            let b_row = other.row(p);
            for (i, &a) in a_row.iter().enumerate() {
                if a == 0.0 {
                    continue;
                }
                let out_row = &mut out.data[i * n..(i + 1) * n];
                for (o, &b) in out_row.iter_mut().zip(b_row) {
                    *o += a * b;
                }
            }
        }
        out
    }

    /// `self * otherᵀ` without forming the transpose.
    pub fn matmul_t(&self, other: &Self) -> Self {
        assert_eq!(
            self.cols, other.cols,
            "matmul_t: {}x{} * ({}x{})ᵀ",
            self.rows, self.cols, other.rows, other.cols
        );
        Self::from_fn(self.rows, other.rows, |i, j| {
            self.row(i).iter().zip(other.row(j)).map(|(a, b)| a * b).sum()
        })
    }

    /// Gram matrix `selfᵀ self`, exactly symmetric.
    pub fn gram(&self) -> Self {
        let mut g = self.t_matmul(self);
        g.symmetrize();
        g
    }

    /// Replace with `(A + Aᵀ)/2`.
    pub fn symmetrize(&mut self) {
        assert!(self.is_square());
        let n = self.rows;
        for i in 0..n {
            for j in (i + 1)..n {
                let v = 0.5 * (self.data[i * n + j] + self.data[j * n + i]);
                self.data[i * n + j] = v;
                self.data[j * n + i] = v;
            }
        }
    }

    pub fn scale(&self, alpha: f64) -> Self {
        Self {
            rows: self.rows,
            cols: self.cols,
            data: self.data.iter().map(|v| alpha * v).collect(),
        }
    }

    /// `self += alpha * other`.
    pub fn axpy(&mut self, alpha: f64, other: &Self) {
        assert_eq!(self.shape(), other.shape(), "axpy shape mismatch");
        for (a, b) in self.data.iter_mut().zip(&other.data) {
            *a += alpha * b;
        }
    }

    /// `alpha * a + beta * b`.
    pub fn lin_comb(alpha: f64, a: &Self, beta: f64, b: &Self) -> Self {
        assert_eq!(a.shape(), b.shape(), "lin_comb shape mismatch");
        Self {
            rows: a.rows,
            cols: a.cols,
            data: a.data.iter().zip(&b.data).map(|(x, y)| alpha * x + beta * y).collect(),
        }
    }

    pub fn frob_norm(&self) -> f64 {
        self.frob_dot(self).sqrt()
    }

    /// Frobenius inner product `tr(selfᵀ other)`.
    pub fn frob_dot(&self, other: &Self) -> f64 {
        assert_eq!(self.shape(), other.shape(), "frob_dot shape mismatch");
        self.data.iter().zip(&other.data).map(|(a, b)| a * b).sum()
    }

    pub fn trace(&self) -> f64 {
        assert!(self.is_square(), "trace of non-square matrix");
        (0..self.rows).map(|i| self.data[i * self.cols + i]).sum()
    }

    /// Induced 1-norm (max absolute column sum).
    pub fn norm1(&self) -> f64 {
        (0..self.cols)
            .map(|j| (0..self.rows).map(|i| self[(i, j)].abs()).sum::<f64>())
            .fold(0.0, f64::max)
    }

    pub fn max_abs(&self) -> f64 {
        self.data.iter().fold(0.0, |m, v| m.max(v.abs()))
    }

    pub fn is_finite(&self) -> bool {
        self.data.iter().all(|v| v.is_finite())
    }

    /// Frobenius norm of `self - selfᵀ`.
    pub fn asymmetry(&self) -> f64 {
        assert!(self.is_square());
        let n = self.rows;
        let mut s = 0.0;
        for i in 0..n {
            for j in 0..n {
                let d = self.data[i * n + j] - self.data[j * n + i];
                s += d * d;
            }
        }
        s.sqrt()
    }

    pub fn block(&self, r0: usize, c0: usize, rows: usize, cols: usize) -> Self {
        assert!(r0 + rows <= self.rows && c0 + cols <= self.cols, "block out of range");
        Self::from_fn(rows, cols, |i, j| self[(r0 + i, c0 + j)])
    }

    pub fn set_block(&mut self, r0: usize, c0: usize, src: &Self) {
        assert!(
            r0 + src.rows <= self.rows && c0 + src.cols <= self.cols,
            "set_block out of range"
        );
        for i in 0..src.rows {
            let dst = (r0 + i) * self.cols + c0;
            self.data[dst..dst + src.cols].copy_from_slice(src.row(i));
        }
    }

    pub fn hstack(blocks: &[&Self]) -> Self {
        let rows = blocks.first().map_or(0, |b| b.rows);
        let cols = blocks.iter().map(|b| b.cols).sum();
        let mut out = Self::zeros(rows, cols);
        let mut c0 = 0;
        for b in blocks {
            assert_eq!(b.rows, rows, "hstack row mismatch");
            out.set_block(0, c0, b);
            c0 += b.cols;
        }
        out
    }

    pub fn vstack(blocks: &[&Self]) -> Self {
        let cols = blocks.first().map_or(0, |b| b.cols);
        let rows = blocks.iter().map(|b| b.rows).sum();
        let mut out = Self::zeros(rows, cols);
        let mut r0 = 0;
        for b in blocks {
            assert_eq!(b.cols, cols, "vstack column mismatch");
            out.set_block(r0, 0, b);
            r0 += b.rows;
        }
        out
    }

    /// `I - self` for square `self`.
    pub fn identity_minus(&self) -> Self {
        assert!(self.is_square());
        let mut out = -self;
        for i in 0..self.rows {
            out.data[i * self.cols + i] += 1.0;
        }
        out
    }

    fn ensure_finite(self) -> LinalgResult<Self> {
        if self.is_finite() {
            Ok(self)
        } else {
            Err(LinalgError::NonFinite)
        }
    }
}

impl Index<(usize, usize)> for DenseMatrix {
    type Output = f64;

    #[inline]
    fn index(&self, (i, j): (usize, usize)) -> &f64 {
        debug_assert!(i < self.rows && j < self.cols);
        &self.data[i * self.cols + j]
    }
}

impl IndexMut<(usize, usize)> for DenseMatrix {
    #[inline]
    fn index_mut(&mut self, (i, j): (usize, usize)) -> &mut f64 {
        debug_assert!(i < self.rows && j < self.cols);
        &mut self.data[i * self.cols + j]
    }
}

impl Add for &DenseMatrix {
    type Output = DenseMatrix;
    fn add(self, rhs: &DenseMatrix) -> DenseMatrix {
        DenseMatrix::lin_comb(1.0, self, 1.0, rhs)
    }
}

impl Sub for &DenseMatrix {
    type Output = DenseMatrix;
    fn sub(self, rhs: &DenseMatrix) -> DenseMatrix {
        DenseMatrix::lin_comb(1.0, self, -1.0, rhs)
    }
}

impl Add for DenseMatrix {
    type Output = DenseMatrix;
    fn add(mut self, rhs: DenseMatrix) -> DenseMatrix {
        self += &rhs;
        self
    }
}

impl Sub for DenseMatrix {
    type Output = DenseMatrix;
    fn sub(mut self, rhs: DenseMatrix) -> DenseMatrix {
        self -= &rhs;
        self
    }
}

impl AddAssign<&DenseMatrix> for DenseMatrix {
    fn add_assign(&mut self, rhs: &DenseMatrix) {
        self.axpy(1.0, rhs);
    }
}

impl SubAssign<&DenseMatrix> for DenseMatrix {
    fn sub_assign(&mut self, rhs: &DenseMatrix) {
        self.axpy(-1.0, rhs);
    }
}

impl Mul for &DenseMatrix {
    type Output = DenseMatrix;
    fn mul(self, rhs: &DenseMatrix) -> DenseMatrix {
        self.matmul(rhs)
    }
}

impl Mul<f64> for &DenseMatrix {
    type Output = DenseMatrix;
    fn mul(self, rhs: f64) -> DenseMatrix {
        self.scale(rhs)
    }
}

impl Mul<&DenseMatrix> for f64 {
    type Output = DenseMatrix;
    fn mul(self, rhs: &DenseMatrix) -> DenseMatrix {
        rhs.scale(self)
    }
}

impl Neg for &DenseMatrix {
    type Output = DenseMatrix;
    fn neg(self) -> DenseMatrix {
        self.scale(-1.0)
    }
}

/// LU factorization with partial pivoting, `P A = L U`.
#[derive(Debug, Clone)]
pub struct Lu {
    n: usize,
    lu: Vec<f64>,
    perm: Vec<usize>,
}

impl Lu {
    pub fn factor(a: &DenseMatrix) -> LinalgResult<Self> {
        if !a.is_square() {
            return Err(LinalgError::NotSquare(a.rows, a.cols));
        }
        let n = a.rows;
        let threshold = 1e-14 * a.frob_norm();
        let mut lu = a.data.clone();
        let mut perm: Vec<usize> = (0..n).collect();
        for k in 0..n {
            let (p, pmax) = (k..n)
                .map(|i| (i, lu[i * n + k].abs()))
                .fold((k, -1.0), |acc, x| if x.1 > acc.1 { x } else { acc });
            if !(pmax >= threshold) || pmax == 0.0 {
                return Err(LinalgError::SingularMatrix { pivot: pmax, threshold });
            }
            if p != k {
                for j in 0..n {
                    lu.swap(k * n + j, p * n + j);
                }
                perm.swap(k, p);
            }
            let pivot = lu[k * n + k];
            for i in (k + 1)..n {
                let factor = lu[i * n + k] / pivot;
                lu[i * n + k] = factor;
                if factor != 0.0 {
                    for j in (k + 1)..n {
                        lu[i * n + j] -= factor * lu[k * n + j];
                    }
                }
            }
        }
        Ok(Self { n, lu, perm })
    }

    pub fn dim(&self) -> usize {
        self.n
    }

    /// Solve `A X = B`.
    pub fn solve(&self, b: &DenseMatrix) -> LinalgResult<DenseMatrix> {
        let n = self.n;
        if b.rows != n {
            return Err(LinalgError::ShapeMismatch {
                expected: (n, b.cols),
                got: b.shape(),
            });
        }
        let m = b.cols;
        let mut x = DenseMatrix::zeros(n, m);
        for (i, &p) in self.perm.iter().enumerate() {
            x.data[i * m..(i + 1) * m].copy_from_slice(b.row(p));
        }
        // forward substitution with unit lower factor
        for i in 0..n {
            for k in 0..i {
                let l = self.lu[i * n + k];
                if l != 0.0 {
                    let (head, tail) = x.data.split_at_mut(i * m);
                    let src = &head[k * m..(k + 1) * m];
                    for (d, s) in tail[..m].iter_mut().zip(src) {
                        *d -= l * s;
                    }
                }
            }
        }
        for i in (0..n).rev() {
            for k in (i + 1)..n {
                let u = self.lu[i * n + k];
                if u != 0.0 {
                    let (head, tail) = x.data.split_at_mut(k * m);
                    let dst = &mut head[i * m..(i + 1) * m];
                    for (d, s) in dst.iter_mut().zip(&tail[..m]) {
                        *d -= u * s;
                    }
                }
            }
            let d = self.lu[i * n + i];
            for v in &mut x.data[i * m..(i + 1) * m] {
                *v /= d;
            }
        }
        x.ensure_finite()
    }

    pub fn determinant(&self) -> f64 {
        let n = self.n;
        let mut det: f64 = (0..n).map(|i| self.lu[i * n + i]).product();
        // parity of the permutation
        let mut seen = vec![false; n];
        for start in 0..n {
            if seen[start] {
                continue;
            }
            let mut len = 0;
            let mut j = start;
            while !seen[j] {
                seen[j] = true;
                j = self.perm[j];
                len += 1;
            }
            if len % 2 == 0 {
                det = -det;
            }
        }
        det
    }
}

pub fn lu_solve(a: &DenseMatrix, b: &DenseMatrix) -> LinalgResult<DenseMatrix> {
    Lu::factor(a)?.solve(b)
}

/// Cholesky factor `A = L Lᵀ` of a symmetric positive definite matrix.
#[derive(Debug, Clone)]
pub struct Cholesky {
    n: usize,
    l: Vec<f64>,
}

impl Cholesky {
    pub fn factor(a: &DenseMatrix) -> LinalgResult<Self> {
        if !a.is_square() {
            return Err(LinalgError::NotSquare(a.rows, a.cols));
        }
        let asym = a.asymmetry();
        if asym > 1e-12 * a.frob_norm().max(f64::MIN_POSITIVE) {
            return Err(LinalgError::NotSymmetric(asym));
        }
        let n = a.rows;
        let mut l = vec![0.0; n * n];
        for j in 0..n {
            let mut d = a.data[j * n + j];
            for k in 0..j {
                d -= l[j * n + k] * l[j * n + k];
            }
            if !(d > 0.0) {
                return Err(LinalgError::NotPositiveDefinite);
            }
            let d = d.sqrt();
            l[j * n + j] = d;
            for i in (j + 1)..n {
                let mut s = a.data[i * n + j];
                for k in 0..j {
                    s -= l[i * n + k] * l[j * n + k];
                }
                l[i * n + j] = s / d;
            }
        }
        Ok(Self { n, l })
    }

    /// Solve `A X = B`.
    pub fn solve(&self, b: &DenseMatrix) -> LinalgResult<DenseMatrix> {
        let n = self.n;
        if b.rows != n {
            return Err(LinalgError::ShapeMismatch {
                expected: (n, b.cols),
                got: b.shape(),
            });
        }
        let m = b.cols;
        let mut x = b.clone();
        for i in 0..n {
            for k in 0..i {
                let l = self.l[i * n + k];
                if l != 0.0 {
                    let (head, tail) = x.data.split_at_mut(i * m);
                    for (d, s) in tail[..m].iter_mut().zip(&head[k * m..(k + 1) * m]) {
                        *d -= l * s;
                    }
                }
            }
            let d = self.l[i * n + i];
            for v in &mut x.data[i * m..(i + 1) * m] {
                *v /= d;
            }
        }
        for i in (0..n).rev() {
            for k in (i + 1)..n {
                let l = self.l[k * n + i];
                if l != 0.0 {
                    let (head, tail) = x.data.split_at_mut(k * m);
                    for (d, s) in head[i * m..(i + 1) * m].iter_mut().zip(&tail[..m]) {
                        *d -= l * s;
                    }
                }
            }
            let d = self.l[i * n + i];
            for v in &mut x.data[i * m..(i + 1) * m] {
                *v /= d;
            }
        }
        x.ensure_finite()
    }

    /// `B A⁻¹` (uses the symmetry of `A`).
    pub fn solve_right(&self, b: &DenseMatrix) -> LinalgResult<DenseMatrix> {
        Ok(self.solve(&b.transpose())?.transpose())
    }

    /// Explicit lower factor.
    pub fn factor_l(&self) -> DenseMatrix {
        DenseMatrix {
            rows: self.n,
            cols: self.n,
            data: self.l.clone(),
        }
    }
}

pub fn cholesky_solve(a: &DenseMatrix, b: &DenseMatrix) -> LinalgResult<DenseMatrix> {
    Cholesky::factor(a)?.solve(b)
}

/// Eigen-decomposition of a symmetric matrix, `A = V diag(values) Vᵀ`.
#[derive(Debug, Clone)]
pub struct SymEig {
    /// Ascending.
    pub values: Vec<f64>,
    /// Orthogonal; column `j` belongs to `values[j]`.
    pub vectors: DenseMatrix,
}

/// Cyclic Jacobi eigensolver for symmetric matrices.
pub fn sym_eig_jacobi(a: &DenseMatrix) -> LinalgResult<SymEig> {
    if !a.is_square() {
        return Err(LinalgError::NotSquare(a.rows, a.cols));
    }
    let scale = a.frob_norm();
    let asym = a.asymmetry();
    if asym > 1e-10 * scale.max(f64::MIN_POSITIVE) {
        return Err(LinalgError::NotSymmetric(asym));
    }
    let n = a.rows;
    let mut m = a.clone();
    m.symmetrize();
    let mut v = DenseMatrix::identity(n);
    let off = |m: &DenseMatrix| -> f64 {
        let mut s = 0.0;
        for i in 0..n {
            for j in 0..n {
                if i != j {
                    s += m.data[i * n + j] * m.data[i * n + j];
                }
            }
        }
        s.sqrt()
    };
    let target = f64::EPSILON * scale;
    let mut converged = n < 2 || off(&m) <= target;
    let mut sweeps = 0;
    while !converged {
        if sweeps == JACOBI_MAX_SWEEPS {
            return Err(LinalgError::NoConvergence(JACOBI_MAX_SWEEPS));
        }
        sweeps += 1;
        for p in 0..n - 1 {
            for q in (p + 1)..n {
                let apq = m.data[p * n + q];
                if apq.abs() <= f64::MIN_POSITIVE {
                    continue;
                }
                let app = m.data[p * n + p];
                let aqq = m.data[q * n + q];
                let theta = (aqq - app) / (2.0 * apq);
                let t = theta.signum() / (theta.abs() + (theta * theta + 1.0).sqrt());
                let t = if theta == 0.0 { 1.0 } else { t };
                let c = 1.0 / (t * t + 1.0).sqrt();
                let s = t * c;
                // A <- Jᵀ A J on rows/cols p, q
                for k in 0..n {
                    let akp = m.data[k * n + p];
                    let akq = m.data[k * n + q];
                    m.data[k * n + p] = c * akp - s * akq;
                    m.data[k * n + q] = s * akp + c * akq;
                }
                for k in 0..n {
                    let apk = m.data[p * n + k];
                    let aqk = m.data[q * n + k];
                    m.data[p * n + k] = c * apk - s * aqk;
                    m.data[q * n + k] = s * apk + c * aqk;
                }
                m.data[p * n + q] = 0.0;
                m.data[q * n + p] = 0.0;
                for k in 0..n {
                    let vkp = v.data[k * n + p];
                    let vkq = v.data[k * n + q];
                    v.data[k * n + p] = c * vkp - s * vkq;
                    v.data[k * n + q] = s * vkp + c * vkq;
                }
            }
        }
        converged = off(&m) <= target;
    }
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&i, &j| m.data[i * n + i].total_cmp(&m.data[j * n + j]));
    let values = order.iter().map(|&i| m.data[i * n + i]).collect();
    let vectors = DenseMatrix::from_fn(n, n, |r, c| v.data[r * n + order[c]]);
    Ok(SymEig { values, vectors })
}

const PADE13: [f64; 14] = [
    64764752532480000.0,
    32382376266240000.0,
    7771770303897600.0,
    1187353796428800.0,
    129060195264000.0,
    10559470521600.0,
    670442572800.0,
    33522128640.0,
    1323241920.0,
    40840800.0,
    960960.0,
    16380.0,
    182.0,
    1.0,
];

/// Scaling threshold on `‖A‖₁` for the degree-13 Padé approximant.
pub const EXPM_THETA13: f64 = 5.371920351148152;

/// Matrix exponential by scaling and squaring with a degree-13 Padé approximant.
pub fn expm(a: &DenseMatrix) -> LinalgResult<DenseMatrix> {
    if !a.is_square() {
        return Err(LinalgError::NotSquare(a.rows, a.cols));
    }
    if !a.is_finite() {
        return Err(LinalgError::NonFinite);
    }
    let n = a.rows;
    let norm = a.norm1();
    let s = if norm > EXPM_THETA13 {
        (norm / EXPM_THETA13).log2().ceil() as i32
    } else {
        0
    };
    let a = a.scale(0.5f64.powi(s));
    let b = &PADE13;
    let id = DenseMatrix::identity(n);
    let a2 = &a * &a;
    let a4 = &a2 * &a2;
    let a6 = &a4 * &a2;

    let mut u_inner = a6.scale(b[13]);
    u_inner.axpy(b[11], &a4);
    u_inner.axpy(b[9], &a2);
    let mut u = &a6 * &u_inner;
    u.axpy(b[7], &a6);
    u.axpy(b[5], &a4);
    u.axpy(b[3], &a2);
    u.axpy(b[1], &id);
    let u = &a * &u;

    let mut v_inner = a6.scale(b[12]);
    v_inner.axpy(b[10], &a4);
    v_inner.axpy(b[8], &a2);
    let mut v = &a6 * &v_inner;
    v.axpy(b[6], &a6);
    v.axpy(b[4], &a4);
    v.axpy(b[2], &a2);
    v.axpy(b[0], &id);

    let p = &v + &u;
    let q = &v - &u;
    let mut r = lu_solve(&q, &p)?;
    for _ in 0..s {
        r = &r * &r;
    }
    r.ensure_finite()
}

/// Real and imaginary parts of a seeded random unitary matrix.
///
/// Draws a complex Gaussian matrix and orthonormalizes its columns with
/// modified Gram–Schmidt. A column whose norm collapses triggers a fresh
/// draw, at most five draws in total.
pub fn complex_qr_unitary(n: usize, seed: Seed) -> LinalgResult<(DenseMatrix, DenseMatrix)> {
    const MAX_DRAWS: usize = 5;
    let mut rng = seed.rng();
    'draw: for _ in 0..MAX_DRAWS {
        let mut re = DenseMatrix::randn(n, n, &mut rng);
        let mut im = DenseMatrix::randn(n, n, &mut rng);
        for j in 0..n {
            for i in 0..j {
                // r = <q_i, a_j> = Σ conj(q_i) a_j
                let (mut rr, mut ri) = (0.0, 0.0);
                for k in 0..n {
                    let (qr, qi) = (re[(k, i)], im[(k, i)]);
                    let (ar, ai) = (re[(k, j)], im[(k, j)]);
                    rr += qr * ar + qi * ai;
                    ri += qr * ai - qi * ar;
                }
                for k in 0..n {
                    let (qr, qi) = (re[(k, i)], im[(k, i)]);
                    re[(k, j)] -= rr * qr - ri * qi;
                    im[(k, j)] -= rr * qi + ri * qr;
                }
            }
            let norm = (0..n)
                .map(|k| re[(k, j)].powi(2) + im[(k, j)].powi(2))
                .sum::<f64>()
                .sqrt();
            if norm < 1e-10 {
                continue 'draw;
            }
            for k in 0..n {
                re[(k, j)] /= norm;
                im[(k, j)] /= norm;
            }
        }
        return Ok((re, im));
    }
    Err(LinalgError::RankDeficient(MAX_DRAWS))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn well_conditioned(n: usize, seed: u64) -> DenseMatrix {
        let mut rng = Seed(seed).rng();
        let mut a = DenseMatrix::randn(n, n, &mut rng);
        for i in 0..n {
            a[(i, i)] += 2.0 * n as f64;
        }
        a
    }

    #[test]
    fn lu_identity_and_diagonal() {
        let b = DenseMatrix::from_rows(&[&[1.0, 2.0], &[3.0, 4.0], &[5.0, 6.0]]);
        assert_eq!(lu_solve(&DenseMatrix::identity(3), &b).unwrap(), b);
        let a = DenseMatrix::from_diag(&[2.0, 4.0]);
        let x = lu_solve(&a, &DenseMatrix::from_rows(&[&[2.0], &[4.0]])).unwrap();
        assert_eq!(x, DenseMatrix::from_rows(&[&[1.0], &[1.0]]));
    }

    #[test]
    fn lu_round_trip() {
        let a = well_conditioned(10, 1);
        let x0 = DenseMatrix::randn(10, 3, &mut Seed(2).rng());
        let x = lu_solve(&a, &(&a * &x0)).unwrap();
        assert!((&x - &x0).frob_norm() <= 1e-10 * x0.frob_norm());
        let b = &a * &x0;
        assert!((&(&a * &x) - &b).frob_norm() <= TOL_SOLVE * (1.0 + b.frob_norm()));
    }

    #[test]
    fn lu_singular() {
        let a = DenseMatrix::from_rows(&[&[1.0, 2.0], &[2.0, 4.0]]);
        assert!(matches!(Lu::factor(&a), Err(LinalgError::SingularMatrix { .. })));
    }

    #[test]
    fn lu_determinant() {
        let a = DenseMatrix::from_rows(&[&[0.0, 2.0], &[3.0, 1.0]]);
        assert!((Lu::factor(&a).unwrap().determinant() + 6.0).abs() < 1e-14);
    }

    #[test]
    fn cholesky_cases() {
        let i2 = DenseMatrix::identity(2);
        assert_eq!(cholesky_solve(&i2, &i2).unwrap(), i2);
        let x = cholesky_solve(&DenseMatrix::from_diag(&[4.0, 9.0]), &i2).unwrap();
        assert!((&x - &DenseMatrix::from_diag(&[0.25, 1.0 / 9.0])).max_abs() < 1e-15);
        let bad = DenseMatrix::from_rows(&[&[1.0, 2.0], &[2.0, 1.0]]);
        assert_eq!(Cholesky::factor(&bad).unwrap_err(), LinalgError::NotPositiveDefinite);
        let asym = DenseMatrix::from_rows(&[&[2.0, 1.0], &[0.0, 2.0]]);
        assert!(matches!(Cholesky::factor(&asym), Err(LinalgError::NotSymmetric(_))));
    }

    #[test]
    fn cholesky_residual_and_right_solve() {
        let e = DenseMatrix::randn(12, 5, &mut Seed(3).rng());
        let g = e.gram();
        let b = DenseMatrix::randn(5, 4, &mut Seed(4).rng());
        let chol = Cholesky::factor(&g).unwrap();
        let x = chol.solve(&b).unwrap();
        assert!((&(&g * &x) - &b).frob_norm() <= TOL_SOLVE * (1.0 + b.frob_norm()));
        let bt = b.transpose();
        let y = chol.solve_right(&bt).unwrap();
        assert!((&(&y * &g) - &bt).frob_norm() <= TOL_SOLVE * (1.0 + b.frob_norm()));
    }

    #[test]
    fn jacobi_small_cases() {
        let e = sym_eig_jacobi(&DenseMatrix::from_diag(&[3.0, 1.0])).unwrap();
        assert_eq!(e.values, vec![1.0, 3.0]);
        let e = sym_eig_jacobi(&DenseMatrix::from_rows(&[&[0.0, 1.0], &[1.0, 0.0]])).unwrap();
        assert!((e.values[0] + 1.0).abs() < 1e-15 && (e.values[1] - 1.0).abs() < 1e-15);
    }

    #[test]
    fn jacobi_reconstruction() {
        let mut a = DenseMatrix::randn(8, 8, &mut Seed(5).rng());
        a.symmetrize();
        let e = sym_eig_jacobi(&a).unwrap();
        let v = &e.vectors;
        let av = &a * v;
        let vl = v * &DenseMatrix::from_diag(&e.values);
        assert!((&av - &vl).frob_norm() <= 1e-10 * a.frob_norm());
        assert!((&v.gram() - &DenseMatrix::identity(8)).frob_norm() <= 1e-12);
        let rec = &vl.matmul_t(v);
        assert!((rec - &a).frob_norm() <= 1e-10 * a.frob_norm());
        assert!(e.values.windows(2).all(|w| w[0] <= w[1]));
        let tr: f64 = e.values.iter().sum();
        assert!((tr - a.trace()).abs() <= 1e-10 * a.frob_norm());
    }

    #[test]
    fn expm_zero_and_diagonal() {
        let z = expm(&DenseMatrix::zeros(3, 3)).unwrap();
        assert_eq!(z, DenseMatrix::identity(3));
        let d = expm(&DenseMatrix::from_diag(&[1.0, 2.0])).unwrap();
        assert!((d[(0, 0)] - 1f64.exp()).abs() < 1e-14);
        assert!((d[(1, 1)] - 2f64.exp()).abs() < 1e-13);
        assert_eq!(d[(0, 1)], 0.0);
    }

    #[test]
    fn expm_inverse_and_group_property() {
        let mut rng = Seed(6).rng();
        for scale in [0.1, 1.0, 4.0, 10.0] {
            let a = DenseMatrix::randn(6, 6, &mut rng);
            let a = a.scale(scale / a.norm1());
            let p = &expm(&a).unwrap() * &expm(&(-&a)).unwrap();
            assert!((&p - &DenseMatrix::identity(6)).frob_norm() <= 1e-10, "scale {scale}");
            let e = expm(&a).unwrap();
            let e2 = expm(&a.scale(2.0)).unwrap();
            assert!((&(&e * &e) - &e2).frob_norm() <= 1e-10 * e2.frob_norm());
        }
    }

    #[test]
    fn expm_rotation() {
        let t = 0.7;
        let a = DenseMatrix::from_rows(&[&[0.0, -t], &[t, 0.0]]);
        let e = expm(&a).unwrap();
        assert!((e[(0, 0)] - t.cos()).abs() < 1e-15);
        assert!((e[(1, 0)] - t.sin()).abs() < 1e-15);
    }

    #[test]
    fn unitary_cases() {
        let (re, im) = complex_qr_unitary(1, Seed(9)).unwrap();
        assert!((re[(0, 0)].powi(2) + im[(0, 0)].powi(2) - 1.0).abs() < 1e-14);

        let (re, im) = complex_qr_unitary(4, Seed(10)).unwrap();
        let mim = -&im;
        let top = DenseMatrix::hstack(&[&re, &mim]);
        let bot = DenseMatrix::hstack(&[&im, &re]);
        let k = DenseMatrix::vstack(&[&top, &bot]);
        assert!((&k.gram() - &DenseMatrix::identity(8)).frob_norm() <= 1e-10);

        let (re2, _) = complex_qr_unitary(4, Seed(11)).unwrap();
        assert_ne!(re, re2);
        let (re3, im3) = complex_qr_unitary(4, Seed(10)).unwrap();
        assert_eq!((re3, im3), (re, im));
    }

    #[test]
    fn seed_streams_differ() {
        assert_ne!(Seed(1).derive(0), Seed(1).derive(1));
        assert_eq!(Seed(1).derive(3), Seed(1).derive(3));
    }

    #[test]
    fn products_agree() {
        let mut rng = Seed(12).rng();
        let a = DenseMatrix::randn(5, 3, &mut rng);
        let b = DenseMatrix::randn(5, 4, &mut rng);
        let c = DenseMatrix::randn(6, 3, &mut rng);
        assert!((&a.t_matmul(&b) - &a.transpose().matmul(&b)).max_abs() < 1e-14);
        assert!((&a.matmul_t(&c) - &a.matmul(&c.transpose())).max_abs() < 1e-14);
    }
}
