//! Exterior algebra of a Hermitian space `C^dim`.
//!
//! A (p,p)-vector is stored as a Hermitian matrix over pairs of multi-indices
//! of size `p`. A decomposable strongly positive vector built from a p-frame
//! with Plücker coordinates `w` is the rank-one PSD matrix `w w^*`; the
//! `i^{p^2}` sign of the classical form is absorbed into this convention so
//! that positivity is manifest and every pairing is real.

use alloc::format;
use alloc::vec;
use alloc::vec::Vec;

use num_traits::Zero;

use crate::error::{domain, Result};
use crate::linalg::{determinant, CMatrix, C64};

/// Hermitian symmetry tolerance (relative to the largest entry).
pub const HERMITIAN_TOL: f64 = 1e-12;

/// Largest supported ambient dimension.
pub const MAX_DIM: usize = 9;

pub fn binomial(n: usize, k: usize) -> usize {
    if k > n {
        return 0;
    }
    let k = k.min(n - k);
    (0..k).fold(1usize, |acc, i| acc * (n - i) / (i + 1))
}

/// Strictly increasing `p`-tuple of indices in `[0, dim)`.
#[derive(Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct MultiIndex(Vec<usize>);

impl MultiIndex {
    pub fn new(entries: Vec<usize>, dim: usize) -> Result<Self> {
        if entries.windows(2).any(|w| w[0] >= w[1]) {
            return Err(domain(format!("multi-index {entries:?} is not strictly increasing")));
        }
        if entries.last().is_some_and(|&e| e >= dim) {
            return Err(domain(format!(
                "multi-index {entries:?} out of range for dimension {dim}"
            )));
        }
        Ok(Self(entries))
    }

    pub fn entries(&self) -> &[usize] {
        &self.0
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn contains(&self, a: usize) -> bool {
        self.0.binary_search(&a).is_ok()
    }

    /// Position of this multi-index in the lexicographic enumeration of all
    /// `len`-subsets of `[0, dim)`.
    pub fn lex_rank(&self, dim: usize) -> usize {
        let p = self.0.len();
        let mut rank = 0;
        let mut next = 0;
        for (j, &e) in self.0.iter().enumerate() {
            for x in next..e {
                rank += binomial(dim - 1 - x, p - 1 - j);
            }
            next = e + 1;
        }
        rank
    }

    /// Inserts `a` (not already present), returning the sorted index and the
    /// sign `(-1)^{#{entries < a}}` of moving `a` from the front into place.
    pub fn insert(&self, a: usize) -> (MultiIndex, f64) {
        let pos = self.0.partition_point(|&e| e < a);
        let mut v = self.0.clone();
        v.insert(pos, a);
        (MultiIndex(v), if pos % 2 == 0 { 1.0 } else { -1.0 })
    }
}

/// All `p`-subsets of `[0, dim)` in lexicographic order.
pub fn enumerate_multiindices(dim: usize, p: usize) -> Result<Vec<MultiIndex>> {
    if p > dim {
        return Err(domain(format!("cannot choose p={p} indices out of {dim}")));
    }
    let mut out = Vec::with_capacity(binomial(dim, p));
    let mut current: Vec<usize> = (0..p).collect();
    loop {
        out.push(MultiIndex(current.clone()));
        // advance to the lexicographic successor
        let mut i = p;
        loop {
            if i == 0 {
                return Ok(out);
            }
            i -= 1;
            if current[i] < dim - p + i {
                current[i] += 1;
                for j in (i + 1)..p {
                    current[j] = current[j - 1] + 1;
                }
                break;
            }
        }
    }
}

/// Coordinates of `v_1 ∧ … ∧ v_p` in the basis of lexicographically ordered
/// multi-indices.
#[derive(Clone, Debug, PartialEq)]
pub struct PluckerVector {
    dim: usize,
    p: usize,
    coeffs: Vec<C64>,
}

impl PluckerVector {
    pub fn new(dim: usize, p: usize, coeffs: Vec<C64>) -> Result<Self> {
        if coeffs.len() != binomial(dim, p) {
            return Err(domain(format!(
                "expected {} Plücker coordinates for (dim={dim}, p={p}), got {}",
                binomial(dim, p),
                coeffs.len()
            )));
        }
        Ok(Self { dim, p, coeffs })
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn p(&self) -> usize {
        self.p
    }

    pub fn coeffs(&self) -> &[C64] {
        &self.coeffs
    }

    pub fn norm_sqr(&self) -> f64 {
        self.coeffs.iter().map(|c| c.norm_sqr()).sum()
    }
}

/// Plücker coordinates of the wedge of `frame` (p vectors in `C^dim`):
/// `coeffs[I]` is the determinant of the `p x p` minor with rows `I`.
pub fn plucker_from_frame(dim: usize, frame: &[Vec<C64>]) -> Result<PluckerVector> {
    let p = frame.len();
    if p > dim {
        return Err(domain(format!("frame of {p} vectors in dimension {dim}")));
    }
    if let Some(bad) = frame.iter().position(|v| v.len() != dim) {
        return Err(domain(format!(
            "frame vector {bad} has length {} instead of {dim}",
            frame[bad].len()
        )));
    }
    let mat = CMatrix::from_columns(dim, frame);
    let cols: Vec<usize> = (0..p).collect();
    let coeffs = enumerate_multiindices(dim, p)?
        .iter()
        .map(|idx| determinant(&mat.submatrix(idx.entries(), &cols)))
        .collect();
    Ok(PluckerVector { dim, p, coeffs })
}

/// `p`-th compound of a linear map `C^n -> C^m`: the induced map
/// `∧^p C^n -> ∧^p C^m` whose entries are the `p x p` minors.
pub fn compound_matrix(map: &CMatrix, p: usize) -> Result<CMatrix> {
    let targets = enumerate_multiindices(map.rows(), p)?;
    let sources = enumerate_multiindices(map.cols(), p)?;
    Ok(CMatrix::from_fn(targets.len(), sources.len(), |i, j| {
        determinant(&map.submatrix(targets[i].entries(), sources[j].entries()))
    }))
}

/// Coefficient matrix of a (p,p)-vector.
#[derive(Clone, Debug, PartialEq)]
pub struct PPMatrix {
    dim: usize,
    p: usize,
    h: CMatrix,
}

/// Coefficient matrix of a (p,p)-form (cotangent side).
#[derive(Clone, Debug, PartialEq)]
pub struct PPForm {
    dim: usize,
    p: usize,
    h: CMatrix,
}

fn check_shape(dim: usize, p: usize, h: &CMatrix) -> Result<()> {
    let n = binomial(dim, p);
    if p > dim || h.rows() != n || h.cols() != n {
        return Err(domain(format!(
            "coefficient matrix is {}x{}, expected {n}x{n} for (dim={dim}, p={p})",
            h.rows(),
            h.cols()
        )));
    }
    if !h.is_hermitian(HERMITIAN_TOL) {
        return Err(domain(format!(
            "coefficient matrix is not Hermitian (defect {:e})",
            h.hermitian_defect()
        )));
    }
    Ok(())
}

macro_rules! coefficient_matrix_impl {
    ($ty:ident) => {
        impl $ty {
            /// Wraps a Hermitian coefficient matrix.
            pub fn new(dim: usize, p: usize, h: CMatrix) -> Result<Self> {
                check_shape(dim, p, &h)?;
                Ok(Self { dim, p, h })
            }

            pub fn zero(dim: usize, p: usize) -> Self {
                let n = binomial(dim, p);
                Self {
                    dim,
                    p,
                    h: CMatrix::zeros(n, n),
                }
            }

            /// The identity coefficient matrix (the Kähler power `β^p` up to
            /// normalization).
            pub fn identity(dim: usize, p: usize) -> Self {
                Self {
                    dim,
                    p,
                    h: CMatrix::identity(binomial(dim, p)),
                }
            }

            pub fn dim(&self) -> usize {
                self.dim
            }

            pub fn p(&self) -> usize {
                self.p
            }

            pub fn matrix(&self) -> &CMatrix {
                &self.h
            }

            pub fn scaled(&self, s: f64) -> Self {
                Self {
                    dim: self.dim,
                    p: self.p,
                    h: self.h.scaled(s),
                }
            }

            pub fn add(&self, other: &Self) -> Result<Self> {
                if (self.dim, self.p) != (other.dim, other.p) {
                    return Err(domain("adding coefficient matrices of different shapes"));
                }
                Ok(Self {
                    dim: self.dim,
                    p: self.p,
                    h: self.h.add(&other.h),
                })
            }

            #[allow(dead_code)]
            pub(crate) fn from_raw(dim: usize, p: usize, h: CMatrix) -> Self {
                Self { dim, p, h }
            }
        }
    };
}

coefficient_matrix_impl!(PPMatrix);
coefficient_matrix_impl!(PPForm);

impl PPMatrix {
    /// Image under the linear map whose `p`-th compound is `compound`:
    /// `A H A^*`, living in dimension `target_dim`.
    pub fn pushforward(&self, compound: &CMatrix, target_dim: usize) -> Result<Self> {
        if compound.cols() != self.h.rows() || compound.rows() != binomial(target_dim, self.p) {
            return Err(domain("compound matrix does not match the (p,p)-vector"));
        }
        let mut h = compound.mul(&self.h).mul(&compound.adjoint());
        h.hermitize();
        Ok(Self {
            dim: target_dim,
            p: self.p,
            h,
        })
    }
}

impl PPForm {
    /// Pullback by the linear map whose `p`-th compound is `compound`:
    /// `A^* Φ A`, the adjoint of [`PPMatrix::pushforward`] under [`pair`].
    pub fn pullback(&self, compound: &CMatrix, source_dim: usize) -> Result<Self> {
        if compound.rows() != self.h.rows() || compound.cols() != binomial(source_dim, self.p) {
            return Err(domain("compound matrix does not match the (p,p)-form"));
        }
        let mut h = compound.adjoint().mul(&self.h).mul(compound);
        h.hermitize();
        Ok(Self {
            dim: source_dim,
            p: self.p,
            h,
        })
    }
}

/// The rank-one matrix `w w^*`.
pub fn pp_from_plucker(w: &PluckerVector) -> PPMatrix {
    let n = w.coeffs.len();
    let h = CMatrix::from_fn(n, n, |i, j| w.coeffs[i] * w.coeffs[j].conj());
    PPMatrix { dim: w.dim, p: w.p, h }
}

/// Contraction `t ⌟ β^{p-1}`, a `dim x dim` Hermitian matrix (a (1,1)-vector).
///
/// `M[a][b] = Σ_K s(a,K) s(b,K) H[K∪a][K∪b]` over `(p-1)`-subsets `K`
/// avoiding `a` and `b`. The constant `(p-1)!` is dropped.
pub fn contract_beta(t: &PPMatrix) -> Result<CMatrix> {
    if t.p == 0 {
        return Err(domain("contraction against β^{p-1} needs p ≥ 1"));
    }
    let dim = t.dim;
    let mut m = CMatrix::zeros(dim, dim);
    for k in enumerate_multiindices(dim, t.p - 1)? {
        // (row of H, sign) for each a ∉ K
        let slots: Vec<Option<(usize, f64)>> = (0..dim)
            .map(|a| {
                if k.contains(a) {
                    None
                } else {
                    let (idx, sign) = k.insert(a);
                    Some((idx.lex_rank(dim), sign))
                }
            })
            .collect();
        for a in 0..dim {
            let Some((ia, sa)) = slots[a] else { continue };
            for b in 0..dim {
                let Some((ib, sb)) = slots[b] else { continue };
                m[(a, b)] += t.h[(ia, ib)] * (sa * sb);
            }
        }
    }
    Ok(m)
}

/// Real part of `Σ_{I,J} H_t[I][J] · conj(H_φ[I][J])`.
pub fn pair(t: &PPMatrix, phi: &PPForm) -> Result<f64> {
    if (t.dim, t.p) != (phi.dim, phi.p) {
        return Err(domain(format!(
            "pairing a (dim={}, p={}) vector with a (dim={}, p={}) form",
            t.dim, t.p, phi.dim, phi.p
        )));
    }
    Ok(t.h
        .as_slice()
        .iter()
        .zip(phi.h.as_slice())
        .map(|(a, b)| (a * b.conj()).re)
        .sum())
}

/// `Σ_I H[I][I]`.
pub fn trace(t: &PPMatrix) -> f64 {
    t.h.trace().re
}

/// Rank-one coefficient matrix of a single frame, as a convenience.
pub fn pp_from_frame(dim: usize, frame: &[Vec<C64>]) -> Result<PPMatrix> {
    Ok(pp_from_plucker(&plucker_from_frame(dim, frame)?))
}

/// Dense zero vector of length `dim`.
pub fn zero_vector(dim: usize) -> Vec<C64> {
    vec![C64::zero(); dim]
}
