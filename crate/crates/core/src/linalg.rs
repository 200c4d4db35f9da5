//! Small dense complex linear algebra.
//!
//! Everything here works on matrices of dimension at most a few hundred
//! (the largest objects are `C(9,4) x C(9,4)` coefficient matrices), so
//! the algorithms favour accuracy and determinism over asymptotic speed:
//! Householder QR, cyclic Jacobi for Hermitian eigenproblems and one-sided
//! (Hestenes) Jacobi for singular values.

use alloc::vec;
use alloc::vec::Vec;
use core::ops::{Index, IndexMut};

use num_complex::Complex64;
use num_traits::Zero;
use rand::Rng;
use rand_distr::StandardNormal;

pub type C64 = Complex64;

/// Relative singular-value threshold below which a direction counts as zero.
pub const RANK_TOL: f64 = 1e-9;

const JACOBI_MAX_SWEEPS: usize = 100;

/// Row-major dense complex matrix.
#[derive(Clone, Debug, PartialEq)]
pub struct CMatrix {
    rows: usize,
    cols: usize,
    data: Vec<C64>,
}

impl CMatrix {
    pub fn zeros(rows: usize, cols: usize) -> Self {
        Self {
            rows,
            cols,
            data: vec![C64::zero(); rows * cols],
        }
    }

    pub fn identity(n: usize) -> Self {
        let mut m = Self::zeros(n, n);
        for i in 0..n {
            m[(i, i)] = C64::new(1.0, 0.0);
        }
        m
    }

    pub fn from_fn(rows: usize, cols: usize, mut f: impl FnMut(usize, usize) -> C64) -> Self {
        let mut data = Vec::with_capacity(rows * cols);
        for i in 0..rows {
            for j in 0..cols {
                data.push(f(i, j));
            }
        }
        Self { rows, cols, data }
    }

    /// Builds a `rows x columns.len()` matrix whose columns are the given vectors.
    pub fn from_columns(rows: usize, columns: &[Vec<C64>]) -> Self {
        let mut m = Self::zeros(rows, columns.len());
        for (j, col) in columns.iter().enumerate() {
            debug_assert_eq!(col.len(), rows);
            for (i, v) in col.iter().enumerate() {
                m[(i, j)] = *v;
            }
        }
        m
    }

    pub fn from_real_diagonal(diag: &[f64]) -> Self {
        let mut m = Self::zeros(diag.len(), diag.len());
        for (i, d) in diag.iter().enumerate() {
            m[(i, i)] = C64::new(*d, 0.0);
        }
        m
    }

    #[inline]
    pub fn rows(&self) -> usize {
        self.rows
    }

    #[inline]
    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn as_slice(&self) -> &[C64] {
        &self.data
    }

    pub fn column(&self, j: usize) -> Vec<C64> {
        (0..self.rows).map(|i| self[(i, j)]).collect()
    }

    pub fn columns(&self) -> Vec<Vec<C64>> {
        (0..self.cols).map(|j| self.column(j)).collect()
    }

    pub fn adjoint(&self) -> Self {
        Self::from_fn(self.cols, self.rows, |i, j| self[(j, i)].conj())
    }

    pub fn mul(&self, other: &Self) -> Self {
        assert_eq!(self.cols, other.rows, "matrix product shape mismatch");
        let mut out = Self::zeros(self.rows, other.cols);
        for i in 0..self.rows {
            for l in 0..self.cols {
                let a = self[(i, l)];
                if a.is_zero() {
                    continue;
                }
                let orow = &other.data[l * other.cols..(l + 1) * other.cols];
                let dst = &mut out.data[i * other.cols..(i + 1) * other.cols];
                for (d, b) in dst.iter_mut().zip(orow) {
                    *d += a * b;
                }
            }
        }
        out
    }

    pub fn mul_vec(&self, v: &[C64]) -> Vec<C64> {
        assert_eq!(self.cols, v.len(), "matrix-vector shape mismatch");
        (0..self.rows)
            .map(|i| {
                self.data[i * self.cols..(i + 1) * self.cols]
                    .iter()
                    .zip(v)
                    .map(|(a, b)| a * b)
                    .sum()
            })
            .collect()
    }

    pub fn scaled(&self, s: f64) -> Self {
        Self {
            rows: self.rows,
            cols: self.cols,
            data: self.data.iter().map(|v| v * s).collect(),
        }
    }

    pub fn add(&self, other: &Self) -> Self {
        assert_eq!((self.rows, self.cols), (other.rows, other.cols));
        Self {
            rows: self.rows,
            cols: self.cols,
            data: self.data.iter().zip(&other.data).map(|(a, b)| a + b).collect(),
        }
    }

    pub fn sub(&self, other: &Self) -> Self {
        assert_eq!((self.rows, self.cols), (other.rows, other.cols));
        Self {
            rows: self.rows,
            cols: self.cols,
            data: self.data.iter().zip(&other.data).map(|(a, b)| a - b).collect(),
        }
    }

    /// `self += s * other`.
    pub fn add_scaled_assign(&mut self, s: f64, other: &Self) {
        assert_eq!((self.rows, self.cols), (other.rows, other.cols));
        for (a, b) in self.data.iter_mut().zip(&other.data) {
            *a += b * s;
        }
    }

    pub fn frobenius_norm(&self) -> f64 {
        self.data.iter().map(|v| v.norm_sqr()).sum::<f64>().sqrt()
    }

    pub fn max_abs(&self) -> f64 {
        self.data.iter().map(|v| v.norm()).fold(0.0, f64::max)
    }

    pub fn trace(&self) -> C64 {
        (0..self.rows.min(self.cols)).map(|i| self[(i, i)]).sum()
    }

    pub fn is_finite(&self) -> bool {
        self.data.iter().all(|v| v.re.is_finite() && v.im.is_finite())
    }

    /// Largest `|H[i][j] - conj(H[j][i])|` relative to the largest entry.
    pub fn hermitian_defect(&self) -> f64 {
        if self.rows != self.cols {
            return f64::INFINITY;
        }
        let scale = self.max_abs();
        if scale == 0.0 {
            return 0.0;
        }
        let mut worst = 0.0f64;
        for i in 0..self.rows {
            for j in i..self.cols {
                worst = worst.max((self[(i, j)] - self[(j, i)].conj()).norm());
            }
        }
        worst / scale
    }

    pub fn is_hermitian(&self, rel_tol: f64) -> bool {
        self.hermitian_defect() <= rel_tol
    }

    /// Replaces the matrix by `(A + A^*) / 2`.
    pub fn hermitize(&mut self) {
        assert_eq!(self.rows, self.cols);
        for i in 0..self.rows {
            for j in i..self.cols {
                let avg = (self[(i, j)] + self[(j, i)].conj()) * 0.5;
                self[(i, j)] = avg;
                self[(j, i)] = avg.conj();
            }
        }
    }

    /// Selects the given rows and columns (in the given order).
    pub fn submatrix(&self, rows: &[usize], cols: &[usize]) -> Self {
        Self::from_fn(rows.len(), cols.len(), |i, j| self[(rows[i], cols[j])])
    }

    /// Horizontal concatenation `[self | other]`.
    pub fn hstack(&self, other: &Self) -> Self {
        assert_eq!(self.rows, other.rows);
        Self::from_fn(self.rows, self.cols + other.cols, |i, j| {
            if j < self.cols {
                self[(i, j)]
            } else {
                other[(i, j - self.cols)]
            }
        })
    }

    /// The first `n` columns.
    pub fn leading_columns(&self, n: usize) -> Self {
        Self::from_fn(self.rows, n, |i, j| self[(i, j)])
    }

    /// Columns `start..self.cols()`.
    pub fn trailing_columns(&self, start: usize) -> Self {
        Self::from_fn(self.rows, self.cols - start, |i, j| self[(i, j + start)])
    }
}

impl Index<(usize, usize)> for CMatrix {
    type Output = C64;

    #[inline]
    fn index(&self, (i, j): (usize, usize)) -> &C64 {
        &self.data[i * self.cols + j]
    }
}

impl IndexMut<(usize, usize)> for CMatrix {
    #[inline]
    fn index_mut(&mut self, (i, j): (usize, usize)) -> &mut C64 {
        &mut self.data[i * self.cols + j]
    }
}

// ---------------------------------------------------------------------------
// Vectors

pub fn dot(a: &[C64], b: &[C64]) -> C64 {
    a.iter().zip(b).map(|(x, y)| x.conj() * y).sum()
}

pub fn norm(v: &[C64]) -> f64 {
    v.iter().map(|x| x.norm_sqr()).sum::<f64>().sqrt()
}

pub fn scale(v: &[C64], s: C64) -> Vec<C64> {
    v.iter().map(|x| x * s).collect()
}

pub fn axpy(a: C64, x: &[C64], y: &mut [C64]) {
    for (yi, xi) in y.iter_mut().zip(x) {
        *yi += a * xi;
    }
}

/// Returns `v / |v|`, or `None` for a (numerically) zero vector.
pub fn normalized(v: &[C64]) -> Option<Vec<C64>> {
    let n = norm(v);
    if n == 0.0 || !n.is_finite() {
        return None;
    }
    Some(v.iter().map(|x| x / n).collect())
}

pub fn unit_vector(n: usize, i: usize) -> Vec<C64> {
    let mut v = vec![C64::zero(); n];
    v[i] = C64::new(1.0, 0.0);
    v
}

/// Component of `v` orthogonal to the unit vector `u`.
pub fn reject(v: &[C64], u: &[C64]) -> Vec<C64> {
    let c = dot(u, v);
    v.iter().zip(u).map(|(x, y)| x - c * y).collect()
}

// ---------------------------------------------------------------------------
// Factorizations

/// Householder QR of an `m x n` matrix, returning the full unitary `Q`
/// (`m x m`) and the upper-trapezoidal `R` (`m x n`).
pub fn householder_qr(a: &CMatrix) -> (CMatrix, CMatrix) {
    let m = a.rows();
    let n = a.cols();
    let mut r = a.clone();
    let mut q = CMatrix::identity(m);
    for k in 0..n.min(m.saturating_sub(1)) {
        let x: Vec<C64> = (k..m).map(|i| r[(i, k)]).collect();
        let alpha_norm = norm(&x);
        if alpha_norm == 0.0 {
            continue;
        }
        let phase = if x[0].norm() == 0.0 {
            C64::new(1.0, 0.0)
        } else {
            x[0] / x[0].norm()
        };
        let mut v = x.clone();
        v[0] += phase * alpha_norm;
        let vnorm = norm(&v);
        if vnorm == 0.0 {
            continue;
        }
        for vi in v.iter_mut() {
            *vi /= vnorm;
        }
        // R <- (I - 2 v v^*) R on rows k..m
        for j in 0..n {
            let s: C64 = (k..m).map(|i| v[i - k].conj() * r[(i, j)]).sum();
            for i in k..m {
                let delta = v[i - k] * s * 2.0;
                r[(i, j)] -= delta;
            }
        }
        // Q <- Q (I - 2 v v^*) on columns k..m
        for i in 0..m {
            let s: C64 = (k..m).map(|l| q[(i, l)] * v[l - k]).sum();
            for l in k..m {
                let delta = s * v[l - k].conj() * 2.0;
                q[(i, l)] -= delta;
            }
        }
    }
    (q, r)
}

/// LU factorization with partial pivoting of a square matrix.
pub struct Lu {
    lu: CMatrix,
    perm: Vec<usize>,
    sign: f64,
    singular: bool,
}

impl Lu {
    pub fn new(a: &CMatrix) -> Self {
        assert_eq!(a.rows(), a.cols(), "LU needs a square matrix");
        let n = a.rows();
        let mut lu = a.clone();
        let mut perm: Vec<usize> = (0..n).collect();
        let mut sign = 1.0;
        let mut singular = false;
        for k in 0..n {
            let (piv, best) = (k..n)
                .map(|i| (i, lu[(i, k)].norm()))
                .fold((k, -1.0), |acc, x| if x.1 > acc.1 { x } else { acc });
            if best == 0.0 {
                singular = true;
                continue;
            }
            if piv != k {
                for j in 0..n {
                    let tmp = lu[(k, j)];
                    lu[(k, j)] = lu[(piv, j)];
                    lu[(piv, j)] = tmp;
                }
                perm.swap(k, piv);
                sign = -sign;
            }
            let d = lu[(k, k)];
            for i in (k + 1)..n {
                let f = lu[(i, k)] / d;
                lu[(i, k)] = f;
                if f.is_zero() {
                    continue;
                }
                for j in (k + 1)..n {
                    let delta = f * lu[(k, j)];
                    lu[(i, j)] -= delta;
                }
            }
        }
        Self {
            lu,
            perm,
            sign,
            singular,
        }
    }

    pub fn determinant(&self) -> C64 {
        if self.singular {
            return C64::zero();
        }
        let n = self.lu.rows();
        (0..n).fold(C64::new(self.sign, 0.0), |acc, i| acc * self.lu[(i, i)])
    }

    pub fn is_singular(&self) -> bool {
        self.singular
    }

    /// Solves `A x = b`. Returns `None` when `A` is exactly singular.
    pub fn solve(&self, b: &[C64]) -> Option<Vec<C64>> {
        if self.singular {
            return None;
        }
        let n = self.lu.rows();
        let mut x: Vec<C64> = self.perm.iter().map(|&p| b[p]).collect();
        for i in 0..n {
            for j in 0..i {
                let delta = self.lu[(i, j)] * x[j];
                x[i] -= delta;
            }
        }
        for i in (0..n).rev() {
            for j in (i + 1)..n {
                let delta = self.lu[(i, j)] * x[j];
                x[i] -= delta;
            }
            x[i] /= self.lu[(i, i)];
        }
        Some(x)
    }

    pub fn inverse(&self) -> Option<CMatrix> {
        let n = self.lu.rows();
        let cols: Option<Vec<Vec<C64>>> = (0..n).map(|j| self.solve(&unit_vector(n, j))).collect();
        cols.map(|c| CMatrix::from_columns(n, &c))
    }
}

pub fn determinant(a: &CMatrix) -> C64 {
    match a.rows() {
        0 => C64::new(1.0, 0.0),
        1 => a[(0, 0)],
        2 => a[(0, 0)] * a[(1, 1)] - a[(0, 1)] * a[(1, 0)],
        _ => Lu::new(a).determinant(),
    }
}

/// Eigen-decomposition of a Hermitian matrix.
#[derive(Clone, Debug)]
pub struct HermitianEigen {
    /// Eigenvalues in descending order.
    pub values: Vec<f64>,
    /// Matching orthonormal eigenvectors as columns.
    pub vectors: CMatrix,
}

/// Cyclic complex Jacobi eigensolver. The input is hermitized first.
pub fn eigh(a: &CMatrix) -> HermitianEigen {
    assert_eq!(a.rows(), a.cols(), "eigh needs a square matrix");
    let n = a.rows();
    let mut m = a.clone();
    m.hermitize();
    let mut v = CMatrix::identity(n);
    let scale = m.frobenius_norm();
    if scale > 0.0 {
        for _ in 0..JACOBI_MAX_SWEEPS {
            let off: f64 = (0..n)
                .flat_map(|i| (0..n).filter(move |&j| j != i).map(move |j| (i, j)))
                .map(|(i, j)| m[(i, j)].norm_sqr())
                .sum::<f64>()
                .sqrt();
            if off <= 1e-15 * scale {
                break;
            }
            for p in 0..n {
                for q in (p + 1)..n {
                    let apq = m[(p, q)];
                    let g = apq.norm();
                    if g <= 1e-300 {
                        continue;
                    }
                    let e = apq / g; // e^{i phi}
                    let app = m[(p, p)].re;
                    let aqq = m[(q, q)].re;
                    let tau = (aqq - app) / (2.0 * g);
                    let t = if tau >= 0.0 {
                        1.0 / (tau + (1.0 + tau * tau).sqrt())
                    } else {
                        -1.0 / (-tau + (1.0 + tau * tau).sqrt())
                    };
                    let c = 1.0 / (1.0 + t * t).sqrt();
                    let s = c * t;
                    // U = diag(1, conj(e)) * [[c, s], [-s, c]] acting on (p, q)
                    let upp = C64::new(c, 0.0);
                    let upq = C64::new(s, 0.0);
                    let uqp = e.conj() * (-s);
                    let uqq = e.conj() * c;
                    apply_two_sided(&mut m, p, q, upp, upq, uqp, uqq);
                    for i in 0..n {
                        let vip = v[(i, p)];
                        let viq = v[(i, q)];
                        v[(i, p)] = vip * upp + viq * uqp;
                        v[(i, q)] = vip * upq + viq * uqq;
                    }
                }
            }
        }
    }
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&i, &j| {
        m[(j, j)]
            .re
            .partial_cmp(&m[(i, i)].re)
            .unwrap_or(core::cmp::Ordering::Equal)
    });
    let values = order.iter().map(|&i| m[(i, i)].re).collect();
    let vectors = CMatrix::from_fn(n, n, |i, j| v[(i, order[j])]);
    HermitianEigen { values, vectors }
}

fn apply_two_sided(m: &mut CMatrix, p: usize, q: usize, upp: C64, upq: C64, uqp: C64, uqq: C64) {
    let n = m.rows();
    // columns: M <- M U
    for i in 0..n {
        let mip = m[(i, p)];
        let miq = m[(i, q)];
        m[(i, p)] = mip * upp + miq * uqp;
        m[(i, q)] = mip * upq + miq * uqq;
    }
    // rows: M <- U^* M
    for j in 0..n {
        let mpj = m[(p, j)];
        let mqj = m[(q, j)];
        m[(p, j)] = upp.conj() * mpj + uqp.conj() * mqj;
        m[(q, j)] = upq.conj() * mpj + uqq.conj() * mqj;
    }
    m[(p, q)] = C64::zero();
    m[(q, p)] = C64::zero();
    m[(p, p)].im = 0.0;
    m[(q, q)].im = 0.0;
}

/// Singular values (descending) and left singular vectors of an `m x n`
/// matrix, computed by one-sided Jacobi on the columns.
#[derive(Clone, Debug)]
pub struct Svd {
    pub values: Vec<f64>,
    /// Left singular vectors, one per entry of `values`; the vector is
    /// `None` when the corresponding singular value is exactly zero.
    pub left: Vec<Option<Vec<C64>>>,
}

impl Svd {
    pub fn largest(&self) -> f64 {
        self.values.first().copied().unwrap_or(0.0)
    }

    pub fn rank(&self, rel_tol: f64) -> usize {
        numerical_rank(&self.values, rel_tol)
    }

    /// Orthonormal basis (as columns) of the numerical range.
    pub fn range_basis(&self, rel_tol: f64) -> Vec<Vec<C64>> {
        let r = self.rank(rel_tol);
        self.left[..r]
            .iter()
            .map(|u| u.clone().expect("nonzero singular value"))
            .collect()
    }
}

pub fn svd(a: &CMatrix) -> Svd {
    let m = a.rows();
    let mut cols = a.columns();
    let n = cols.len();
    let scale = a.frobenius_norm();
    if scale > 0.0 && n > 1 {
        for _ in 0..JACOBI_MAX_SWEEPS {
            let mut rotated = false;
            for i in 0..n {
                for j in (i + 1)..n {
                    let alpha: f64 = cols[i].iter().map(|x| x.norm_sqr()).sum();
                    let beta: f64 = cols[j].iter().map(|x| x.norm_sqr()).sum();
                    let gamma = dot(&cols[i], &cols[j]);
                    let g = gamma.norm();
                    if g == 0.0 || g <= 1e-15 * (alpha * beta).sqrt() {
                        continue;
                    }
                    rotated = true;
                    let e = gamma / g;
                    let zeta = (beta - alpha) / (2.0 * g);
                    let t = if zeta >= 0.0 {
                        1.0 / (zeta + (1.0 + zeta * zeta).sqrt())
                    } else {
                        -1.0 / (-zeta + (1.0 + zeta * zeta).sqrt())
                    };
                    let c = 1.0 / (1.0 + t * t).sqrt();
                    let s = c * t;
                    // b_j = conj(e) a_j makes <a_i, b_j> real and positive.
                    let (head, tail) = cols.split_at_mut(j);
                    for (ai, aj) in head[i].iter_mut().zip(tail[0].iter_mut()) {
                        let (x, bj) = (*ai, *aj * e.conj());
                        *ai = x * c - bj * s;
                        *aj = x * s + bj * c;
                    }
                }
            }
            if !rotated {
                break;
            }
        }
    }
    let mut entries: Vec<(f64, Vec<C64>)> = cols.into_iter().map(|c| (norm(&c), c)).collect();
    entries.sort_by(|a, b| b.0.partial_cmp(&a.0).unwrap_or(core::cmp::Ordering::Equal));
    entries.truncate(m.min(n));
    let values = entries.iter().map(|e| e.0).collect();
    let left = entries
        .into_iter()
        .map(|(s, c)| {
            if s > 0.0 {
                Some(c.iter().map(|x| x / s).collect())
            } else {
                None
            }
        })
        .collect();
    Svd { values, left }
}

/// Number of values strictly above `rel_tol * max`. A value exactly at the
/// threshold counts as zero.
pub fn numerical_rank(values: &[f64], rel_tol: f64) -> usize {
    let largest = values.iter().copied().fold(0.0, f64::max);
    if largest == 0.0 || !largest.is_finite() {
        return 0;
    }
    let threshold = rel_tol * largest;
    values.iter().filter(|&&s| s > threshold).count()
}

pub fn matrix_rank(a: &CMatrix, rel_tol: f64) -> usize {
    if a.rows() == 0 || a.cols() == 0 {
        return 0;
    }
    svd(a).rank(rel_tol)
}

/// Orthonormal basis for the span of the given vectors of length `dim`.
pub fn span_basis(dim: usize, vectors: &[Vec<C64>], rel_tol: f64) -> Vec<Vec<C64>> {
    if vectors.is_empty() {
        return Vec::new();
    }
    svd(&CMatrix::from_columns(dim, vectors)).range_basis(rel_tol)
}

/// Orthonormal basis of the orthogonal complement of `span(vectors)` in `C^dim`.
pub fn orthogonal_complement(dim: usize, vectors: &[Vec<C64>]) -> Vec<Vec<C64>> {
    let basis = span_basis(dim, vectors, RANK_TOL);
    let mut proj = CMatrix::identity(dim);
    for u in &basis {
        for i in 0..dim {
            for j in 0..dim {
                proj[(i, j)] -= u[i] * u[j].conj();
            }
        }
    }
    let complement = svd(&proj);
    let target = dim - basis.len();
    complement
        .left
        .into_iter()
        .take(target)
        .map(|u| u.expect("projector has unit singular values"))
        .collect()
}

/// Modified Gram-Schmidt with re-orthogonalization. Vectors whose residual
/// falls below `rel_tol` times their original norm are skipped.
pub fn gram_schmidt(vectors: &[Vec<C64>], rel_tol: f64) -> Vec<Vec<C64>> {
    let mut out: Vec<Vec<C64>> = Vec::new();
    for v in vectors {
        let original = norm(v);
        if original == 0.0 {
            continue;
        }
        let mut w = v.clone();
        for _ in 0..2 {
            for u in &out {
                let c = dot(u, &w);
                axpy(-c, u, &mut w);
            }
        }
        let residual = norm(&w);
        if residual > rel_tol * original {
            out.push(w.iter().map(|x| x / residual).collect());
        }
    }
    out
}

/// Orthogonal projector `Q Q^*` for an orthonormal family `Q`.
pub fn projector(dim: usize, orthonormal: &[Vec<C64>]) -> CMatrix {
    let mut p = CMatrix::zeros(dim, dim);
    for u in orthonormal {
        for i in 0..dim {
            for j in 0..dim {
                p[(i, j)] += u[i] * u[j].conj();
            }
        }
    }
    p
}

/// Spectral-norm distance between the orthogonal projectors onto two
/// subspaces given by orthonormal bases. Subspaces of different dimension
/// are at distance 1.
pub fn subspace_distance(dim: usize, a: &[Vec<C64>], b: &[Vec<C64>]) -> f64 {
    if a.len() != b.len() {
        return 1.0;
    }
    let diff = projector(dim, a).sub(&projector(dim, b));
    svd(&diff).largest()
}

/// Sine of the smallest principal angle between `span(a)` and `span(b)`
/// (orthonormal bases), computed as the smallest distance from a unit
/// vector of `span(a)` to `span(b)`.
pub fn min_principal_sine(dim: usize, a: &[Vec<C64>], b: &[Vec<C64>]) -> f64 {
    if a.is_empty() || b.is_empty() {
        return 1.0;
    }
    let reject_b = CMatrix::identity(dim).sub(&projector(dim, b));
    let residual = reject_b.mul(&CMatrix::from_columns(dim, a));
    svd(&residual)
        .values
        .iter()
        .copied()
        .fold(f64::INFINITY, f64::min)
        .max(0.0)
}

// ---------------------------------------------------------------------------
// Random sampling

/// Standard complex Gaussian `(N(0,1) + i N(0,1)) / sqrt(2)`.
pub fn complex_gaussian<R: Rng + ?Sized>(rng: &mut R) -> C64 {
    let re: f64 = rng.sample(StandardNormal);
    let im: f64 = rng.sample(StandardNormal);
    C64::new(re, im) * core::f64::consts::FRAC_1_SQRT_2
}

pub fn gaussian_vector<R: Rng + ?Sized>(n: usize, rng: &mut R) -> Vec<C64> {
    (0..n).map(|_| complex_gaussian(rng)).collect()
}

/// Complex Gaussian matrix, filled row by row.
pub fn gaussian_matrix<R: Rng + ?Sized>(rows: usize, cols: usize, rng: &mut R) -> CMatrix {
    CMatrix::from_fn(rows, cols, |_, _| complex_gaussian(rng))
}

/// Haar-distributed point on the unit sphere of `C^n`.
pub fn random_unit_vector<R: Rng + ?Sized>(n: usize, rng: &mut R) -> Vec<C64> {
    loop {
        if let Some(v) = normalized(&gaussian_vector(n, rng)) {
            return v;
        }
    }
}

/// Haar-distributed unitary `n x n` matrix: Householder QR of a complex
/// Gaussian matrix, with the phases of `R`'s diagonal moved into `Q`
/// (`Q <- Q diag(R_ii / |R_ii|)`), which makes the factorization unique.
pub fn haar_unitary<R: Rng + ?Sized>(n: usize, rng: &mut R) -> CMatrix {
    let g = gaussian_matrix(n, n, rng);
    let (mut q, r) = householder_qr(&g);
    for j in 0..n {
        let d = r[(j, j)];
        let phase = if d.norm() == 0.0 {
            C64::new(1.0, 0.0)
        } else {
            d / d.norm()
        };
        for i in 0..n {
            q[(i, j)] *= phase;
        }
    }
    q
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn rng(seed: u64) -> ChaCha8Rng {
        ChaCha8Rng::seed_from_u64(seed)
    }

    #[test]
    fn haar_unitary_is_unitary() {
        let mut r = rng(3);
        for n in 1..8 {
            let u = haar_unitary(n, &mut r);
            let err = u.adjoint().mul(&u).sub(&CMatrix::identity(n)).max_abs();
            assert!(err < 1e-12, "n={n} err={err}");
        }
    }

    #[test]
    fn qr_reconstructs() {
        let mut r = rng(5);
        let a = gaussian_matrix(6, 4, &mut r);
        let (q, rr) = householder_qr(&a);
        assert!(q.mul(&rr).sub(&a).max_abs() < 1e-12);
        for i in 0..6 {
            for j in 0..i.min(4) {
                assert!(rr[(i, j)].norm() < 1e-12);
            }
        }
    }

    #[test]
    fn eigh_diagonalizes() {
        let mut r = rng(11);
        for n in [1, 2, 5, 12] {
            let g = gaussian_matrix(n, n, &mut r);
            let h = g.add(&g.adjoint());
            let e = eigh(&h);
            let recon = e
                .vectors
                .mul(&CMatrix::from_real_diagonal(&e.values))
                .mul(&e.vectors.adjoint());
            assert!(recon.sub(&h).max_abs() < 1e-11 * h.max_abs().max(1.0));
            assert!(e.values.windows(2).all(|w| w[0] >= w[1]));
        }
    }

    #[test]
    fn svd_matches_known_values() {
        let a = CMatrix::from_real_diagonal(&[3.0, 0.0, 1.0]);
        let s = svd(&a);
        assert!((s.values[0] - 3.0).abs() < 1e-14);
        assert!((s.values[1] - 1.0).abs() < 1e-14);
        assert_eq!(s.values[2], 0.0);
        assert_eq!(s.rank(RANK_TOL), 2);
    }

    #[test]
    fn svd_of_wide_matrix_and_rank() {
        let mut r = rng(17);
        // 4 x 9 of rank 2
        let left = gaussian_matrix(4, 2, &mut r);
        let right = gaussian_matrix(2, 9, &mut r);
        let a = left.mul(&right);
        assert_eq!(matrix_rank(&a, RANK_TOL), 2);
        let basis = svd(&a).range_basis(RANK_TOL);
        let expected = span_basis(4, &left.columns(), RANK_TOL);
        assert!(subspace_distance(4, &basis, &expected) < 1e-10);
    }

    #[test]
    fn determinant_and_solve() {
        let mut r = rng(23);
        let a = gaussian_matrix(5, 5, &mut r);
        let lu = Lu::new(&a);
        let b = gaussian_vector(5, &mut r);
        let x = lu.solve(&b).unwrap();
        let ax = a.mul_vec(&x);
        assert!(ax.iter().zip(&b).all(|(u, v)| (u - v).norm() < 1e-11));
        // det(A) equals product of eigen... use det(A A^*) = |det A|^2
        let d = lu.determinant();
        let dd = Lu::new(&a.mul(&a.adjoint())).determinant();
        assert!((dd.re - d.norm_sqr()).abs() < 1e-9 * dd.re.abs());
    }

    #[test]
    fn complement_is_orthogonal() {
        let mut r = rng(29);
        let vs = vec![gaussian_vector(5, &mut r), gaussian_vector(5, &mut r)];
        let comp = orthogonal_complement(5, &vs);
        assert_eq!(comp.len(), 3);
        for c in &comp {
            for v in &vs {
                assert!(dot(c, v).norm() < 1e-12);
            }
        }
    }

    #[test]
    fn principal_sine_detects_intersection() {
        let e = |i| unit_vector(3, i);
        assert!(min_principal_sine(3, &[e(0)], &[e(0), e(1)]) < 1e-15);
        assert!((min_principal_sine(3, &[e(2)], &[e(0), e(1)]) - 1.0).abs() < 1e-15);
    }

    #[test]
    fn rank_threshold_ties_resolve_down() {
        assert_eq!(numerical_rank(&[1.0, 1e-9], 1e-9), 1);
        assert_eq!(numerical_rank(&[1.0, 1.0000001e-9], 1e-9), 2);
        assert_eq!(numerical_rank(&[0.0, 0.0], 1e-9), 0);
    }
}
