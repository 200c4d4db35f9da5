//! Strongly positive (p,p)-vectors kept as explicit nonnegative combinations
//! of decomposable terms.
//!
//! The rank of a strongly positive vector is the dimension of the smallest
//! subspace `W` with `t ∈ ∧^{p,p}(W)`. With the decomposition at hand this is
//! the dimension of the span of all constituent frames; the contraction
//! `t ⌟ β^{p-1}` gives a second, coefficient-only route used as a cross-check.

use alloc::format;
use alloc::vec::Vec;

use rand::Rng;

use crate::error::{domain, Result};
use crate::exterior::{contract_beta, plucker_from_frame, pp_from_plucker, trace, PPMatrix, PluckerVector};
use crate::linalg::{self, eigh, gaussian_vector, matrix_rank, svd, CMatrix, C64, RANK_TOL};

/// A wedge is treated as zero when `|v_1 ∧ … ∧ v_p| ≤ WEDGE_TOL · Π |v_i|`.
pub const WEDGE_TOL: f64 = 1e-9;

/// Eigenvalue floor for positive semidefiniteness, relative to the spectral norm.
pub const PSD_TOL: f64 = 1e-10;

/// Tolerance on `trace = 1` for normalized vectors.
pub const TRACE_TOL: f64 = 1e-10;

/// One decomposable term `λ · (v_1 ∧ … ∧ v_p) ⊗ conj(v_1 ∧ … ∧ v_p)`.
#[derive(Clone, Debug, PartialEq)]
pub struct SPTerm {
    pub lambda: f64,
    pub frame: Vec<Vec<C64>>,
}

impl SPTerm {
    pub fn new(lambda: f64, frame: Vec<Vec<C64>>) -> Self {
        Self { lambda, frame }
    }
}

/// Strongly positive (p,p)-vector on `C^dim` with its decomposition.
#[derive(Clone, Debug, PartialEq)]
pub struct SPVector {
    dim: usize,
    p: usize,
    terms: Vec<SPTerm>,
    /// Plücker vector per term; zeroed when the wedge numerically vanishes.
    wedges: Vec<PluckerVector>,
    cached: PPMatrix,
}

fn wedge_of(dim: usize, frame: &[Vec<C64>]) -> Result<(PluckerVector, bool)> {
    let w = plucker_from_frame(dim, frame)?;
    let scale: f64 = frame.iter().map(|v| linalg::norm(v)).product();
    let vanishing = scale == 0.0 || w.norm_sqr().sqrt() <= WEDGE_TOL * scale;
    if vanishing {
        let zeros = alloc::vec![C64::new(0.0, 0.0); w.coeffs().len()];
        Ok((PluckerVector::new(dim, frame.len(), zeros)?, true))
    } else {
        Ok((w, false))
    }
}

impl SPVector {
    pub fn new(dim: usize, p: usize, terms: Vec<SPTerm>) -> Result<Self> {
        let mut wedges = Vec::with_capacity(terms.len());
        let mut cached = PPMatrix::zero(dim, p);
        let mut h = cached.matrix().clone();
        for (i, term) in terms.iter().enumerate() {
            if !(term.lambda >= 0.0 && term.lambda.is_finite()) {
                return Err(domain(format!(
                    "term {i} has weight {} (must be finite and ≥ 0)",
                    term.lambda
                )));
            }
            if term.frame.len() != p {
                return Err(domain(format!(
                    "term {i} has {} frame vectors, expected p={p}",
                    term.frame.len()
                )));
            }
            if term
                .frame
                .iter()
                .flatten()
                .any(|z| !(z.re.is_finite() && z.im.is_finite()))
            {
                return Err(domain(format!("term {i} has a non-finite frame entry")));
            }
            let (w, _) = wedge_of(dim, &term.frame)?;
            h.add_scaled_assign(term.lambda, pp_from_plucker(&w).matrix());
            wedges.push(w);
        }
        if !terms.is_empty() {
            cached = PPMatrix::from_raw(dim, p, h);
        }
        Ok(Self {
            dim,
            p,
            terms,
            wedges,
            cached,
        })
    }

    /// Single decomposable term with weight 1.
    pub fn decomposable(dim: usize, frame: Vec<Vec<C64>>) -> Result<Self> {
        let p = frame.len();
        Self::new(dim, p, alloc::vec![SPTerm::new(1.0, frame)])
    }

    pub fn zero(dim: usize, p: usize) -> Self {
        Self {
            dim,
            p,
            terms: Vec::new(),
            wedges: Vec::new(),
            cached: PPMatrix::zero(dim, p),
        }
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn p(&self) -> usize {
        self.p
    }

    pub fn terms(&self) -> &[SPTerm] {
        &self.terms
    }

    pub fn cached(&self) -> &PPMatrix {
        &self.cached
    }

    pub fn trace(&self) -> f64 {
        trace(&self.cached)
    }

    /// `Σ λ |w|²` over the stored terms.
    pub fn trace_from_terms(&self) -> f64 {
        self.terms
            .iter()
            .zip(&self.wedges)
            .map(|(t, w)| t.lambda * w.norm_sqr())
            .sum()
    }

    /// Terms with positive weight and non-vanishing wedge.
    pub fn effective_terms(&self) -> impl Iterator<Item = &SPTerm> {
        self.terms
            .iter()
            .zip(&self.wedges)
            .filter(|(t, w)| t.lambda > 0.0 && w.norm_sqr() > 0.0)
            .map(|(t, _)| t)
    }

    pub fn is_zero(&self) -> bool {
        self.effective_terms().next().is_none()
    }

    /// All vectors of all effective frames, in term order.
    pub fn constituent_vectors(&self) -> Vec<Vec<C64>> {
        self.effective_terms().flat_map(|t| t.frame.iter().cloned()).collect()
    }

    /// Orthonormal basis of `Span(t)`.
    pub fn span_basis(&self) -> Vec<Vec<C64>> {
        linalg::span_basis(self.dim, &self.constituent_vectors(), RANK_TOL)
    }

    pub fn scaled(&self, s: f64) -> Result<Self> {
        let terms = self
            .terms
            .iter()
            .map(|t| SPTerm::new(t.lambda * s, t.frame.clone()))
            .collect();
        Self::new(self.dim, self.p, terms)
    }

    /// Smallest eigenvalue of the cached matrix relative to its spectral norm.
    pub fn psd_floor(&self) -> f64 {
        let e = eigh(self.cached.matrix());
        let top = e.values.iter().map(|v| v.abs()).fold(0.0, f64::max);
        if top == 0.0 {
            return 0.0;
        }
        e.values.last().copied().unwrap_or(0.0) / top
    }

    pub fn is_psd(&self) -> bool {
        self.psd_floor() >= -PSD_TOL
    }

    /// Applies the linear map `m : C^dim -> C^rows` to every frame vector.
    /// A mapped term whose wedge is at most `WEDGE_TOL · Π |m| |v_i|` is
    /// replaced by a zero frame, so that it drops out of ranks and traces.
    pub fn map_linear(&self, m: &CMatrix) -> Result<Self> {
        if m.cols() != self.dim {
            return Err(domain(format!(
                "map has {} columns, vector lives in C^{}",
                m.cols(),
                self.dim
            )));
        }
        let op_norm = svd(m).largest();
        let target_dim = m.rows();
        let mut terms = Vec::with_capacity(self.terms.len());
        for t in &self.terms {
            let frame: Vec<Vec<C64>> = t.frame.iter().map(|v| m.mul_vec(v)).collect();
            let scale: f64 = t.frame.iter().map(|v| op_norm * linalg::norm(v)).product();
            let w = plucker_from_frame(target_dim, &frame)?;
            let frame = if w.norm_sqr().sqrt() <= WEDGE_TOL * scale {
                alloc::vec![alloc::vec![C64::new(0.0, 0.0); target_dim]; self.p]
            } else {
                frame
            };
            terms.push(SPTerm::new(t.lambda, frame));
        }
        Self::new(target_dim, self.p, terms)
    }
}

/// Dimension of `Span(t)`: numerical rank of the stacked constituent frames.
pub fn rank_via_span(t: &SPVector) -> usize {
    let vectors = t.constituent_vectors();
    if vectors.is_empty() {
        return 0;
    }
    matrix_rank(&CMatrix::from_columns(t.dim, &vectors), RANK_TOL)
}

/// Numerical rank of `t ⌟ β^{p-1}` computed from the coefficient matrix only.
pub fn rank_via_contraction(t: &SPVector) -> Result<usize> {
    let m = contract_beta(t.cached())?;
    Ok(svd(&m).rank(RANK_TOL))
}

/// A nonzero strongly positive vector is decomposable iff its rank is `p`.
pub fn is_decomposable_by_rank(t: &SPVector) -> Result<bool> {
    if t.is_zero() {
        return Err(domain("decomposability criterion is undefined for the zero vector"));
    }
    Ok(rank_via_span(t) == t.p)
}

/// Rescales `t` to trace 1.
pub fn normalize_trace(t: &SPVector) -> Result<SPVector> {
    let tr = t.trace();
    if !tr.is_finite() || tr <= 0.0 {
        return Err(domain(format!("cannot normalize a vector of trace {tr}")));
    }
    t.scaled(1.0 / tr)
}

/// `Σ μ_α t_α` for a finite family of trace-1 vectors and probability weights.
pub fn average(family: &[SPVector], mu: &[f64]) -> Result<SPVector> {
    let first = family.first().ok_or_else(|| domain("averaging an empty family"))?;
    if family.len() != mu.len() {
        return Err(domain(format!("{} vectors but {} weights", family.len(), mu.len())));
    }
    if mu.iter().any(|&m| !m.is_finite() || m < 0.0) {
        return Err(domain("weights must be finite and nonnegative"));
    }
    let total: f64 = mu.iter().sum();
    if (total - 1.0).abs() > 1e-12 {
        return Err(domain(format!("weights sum to {total}, not 1")));
    }
    let (dim, p) = (first.dim, first.p);
    let mut terms = Vec::new();
    let mut wedges = Vec::new();
    let mut h = CMatrix::zeros(first.cached.matrix().rows(), first.cached.matrix().cols());
    for (i, (t, &m)) in family.iter().zip(mu).enumerate() {
        if (t.dim, t.p) != (dim, p) {
            return Err(domain(format!(
                "family member {i} has shape ({}, {}), expected ({dim}, {p})",
                t.dim, t.p
            )));
        }
        if (t.trace() - 1.0).abs() > TRACE_TOL {
            return Err(domain(format!(
                "family member {i} has trace {} instead of 1",
                t.trace()
            )));
        }
        h.add_scaled_assign(m, t.cached.matrix());
        for (term, w) in t.terms.iter().zip(&t.wedges) {
            terms.push(SPTerm::new(term.lambda * m, term.frame.clone()));
            wedges.push(w.clone());
        }
    }
    Ok(SPVector {
        dim,
        p,
        terms,
        wedges,
        cached: PPMatrix::from_raw(dim, p, h),
    })
}

/// Outcome of the finite-family check of "rank(∫ t_α dμ) < dim V implies
/// rank(t_α) < dim V for μ-a.e. α".
#[derive(Clone, Debug, PartialEq)]
pub struct LemmaIReport {
    pub avg_rank: usize,
    /// μ-mass of members with full rank `dim`.
    pub fraction_full_rank: f64,
    /// Largest `|H_α v| / |H_α|` over kernel vectors `v` of the averaged matrix
    /// and members with `μ_α > 0`.
    pub kernel_residual: f64,
    pub holds: bool,
}

pub fn lemma_i_check(family: &[SPVector], mu: &[f64]) -> Result<LemmaIReport> {
    let avg = average(family, mu)?;
    let dim = avg.dim;
    let avg_rank = rank_via_span(&avg);
    let fraction_full_rank: f64 = family
        .iter()
        .zip(mu)
        .filter(|(t, &m)| m > 0.0 && rank_via_span(t) == dim)
        .map(|(_, &m)| m)
        .sum();
    let kernel_residual = kernel_inheritance_residual(&avg, family, mu);
    let holds = avg_rank == dim || fraction_full_rank == 0.0;
    Ok(LemmaIReport {
        avg_rank,
        fraction_full_rank,
        kernel_residual,
        holds,
    })
}

/// Orthonormal basis of the numerical kernel of a Hermitian PSD matrix.
pub fn psd_kernel(h: &CMatrix) -> Vec<Vec<C64>> {
    let e = eigh(h);
    let top = e.values.iter().map(|v| v.abs()).fold(0.0, f64::max);
    if top == 0.0 {
        return e.vectors.columns();
    }
    e.values
        .iter()
        .enumerate()
        .filter(|(_, &v)| v <= RANK_TOL * top)
        .map(|(j, _)| e.vectors.column(j))
        .collect()
}

/// Largest relative residual `|H_α v| / |H_α|` over kernel vectors `v` of the
/// averaged coefficient matrix and positively weighted members.
pub fn kernel_inheritance_residual(avg: &SPVector, family: &[SPVector], mu: &[f64]) -> f64 {
    let kernel = psd_kernel(avg.cached.matrix());
    let mut worst = 0.0f64;
    for (t, &m) in family.iter().zip(mu) {
        let h = t.cached.matrix();
        let scale = h.frobenius_norm();
        if m <= 0.0 || scale == 0.0 {
            continue;
        }
        for v in &kernel {
            worst = worst.max(linalg::norm(&h.mul_vec(v)) / scale);
        }
    }
    worst
}

/// `det(M)^{1/n}` for an `n x n` Hermitian PSD matrix (negative eigenvalues
/// from rounding are clamped to zero).
pub fn det_root(m: &CMatrix) -> f64 {
    let n = m.rows();
    if n == 0 {
        return 1.0;
    }
    let e = eigh(m);
    // geometric mean, accumulated in log space
    if e.values.iter().any(|&v| v <= 0.0) {
        return 0.0;
    }
    (e.values.iter().map(|v| v.ln()).sum::<f64>() / n as f64).exp()
}

/// Random strongly positive vector with `n_terms` Gaussian frames spanning
/// generic subspaces of `C^dim`; weights uniform in `[0.1, 1]`.
pub fn random_spvector<R: Rng + ?Sized>(dim: usize, p: usize, n_terms: usize, rng: &mut R) -> Result<SPVector> {
    let basis: Vec<Vec<C64>> = (0..dim).map(|i| linalg::unit_vector(dim, i)).collect();
    random_spvector_in(&basis, dim, p, n_terms, rng)
}

/// Random strongly positive vector whose frames are Gaussian combinations of
/// the given `basis` vectors, so that `Span(t) ⊂ span(basis)`.
pub fn random_spvector_in<R: Rng + ?Sized>(
    basis: &[Vec<C64>],
    dim: usize,
    p: usize,
    n_terms: usize,
    rng: &mut R,
) -> Result<SPVector> {
    if p > basis.len() {
        return Err(domain(format!(
            "cannot draw {p}-frames inside a {}-dimensional span",
            basis.len()
        )));
    }
    let terms = (0..n_terms)
        .map(|_| {
            let frame = (0..p)
                .map(|_| {
                    let coeffs = gaussian_vector(basis.len(), rng);
                    let mut v = alloc::vec![C64::new(0.0, 0.0); dim];
                    for (c, b) in coeffs.iter().zip(basis) {
                        linalg::axpy(*c, b, &mut v);
                    }
                    v
                })
                .collect();
            SPTerm::new(rng.random_range(0.1..=1.0), frame)
        })
        .collect();
    SPVector::new(dim, p, terms)
}
