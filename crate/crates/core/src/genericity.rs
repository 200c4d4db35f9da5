//! Monte Carlo checks of genericity for linear projections.
//!
//! On a linear space `V = C^n` with a fixed `ℓ`-dimensional target `L`, a
//! kernel `K` of dimension `n - ℓ` with `K ⊕ L = V` defines the projection
//! `π_{K,L}`. For a strongly positive `t` of rank at least `ℓ`, the kernels
//! with `rank((π_{K,L})_* t) < ℓ` form a null set; the trials below sample
//! Haar kernels to observe that, and build explicit members of the null set.

use alloc::format;
use alloc::string::String;
use alloc::vec::Vec;

use rand::{Rng, RngCore};

use crate::currents::DiscreteCurrent;
use crate::error::{domain, Error, Result};
use crate::linalg::{
    dot, gaussian_vector, gram_schmidt, haar_unitary, min_principal_sine, norm, normalized, span_basis, svd,
    unit_vector, CMatrix, C64, RANK_TOL,
};
use crate::positivity::{random_spvector_in, rank_via_span, SPVector};
use crate::projective::{random_projection, terms_transverse, Projection, MIN_PRINCIPAL_SINE, TOL_CENTER};
use crate::rng;

/// Resampling budget for kernels failing the principal-angle check.
pub const MAX_KERNEL_RETRIES: usize = 16;

/// A kernel `K` (orthonormal basis) drawn for a fixed target `L`.
#[derive(Clone, Debug, PartialEq)]
pub struct KernelSample {
    pub basis: Vec<Vec<C64>>,
    pub seed: u64,
    /// Number of rejected draws before this one.
    pub retries: usize,
}

/// Counts from a batch of independent trials.
#[derive(Clone, Debug, PartialEq)]
pub struct TrialReport {
    pub trials: usize,
    pub failures: usize,
    pub failure_indices: Vec<usize>,
    pub seed: u64,
    pub tolerances: Vec<(String, f64)>,
    /// Auxiliary events (kernel resamples, atoms on a center, ...).
    pub events: usize,
    /// Finer-grained failure count (for example atoms rather than trials).
    pub unit_failures: usize,
}

impl TrialReport {
    fn new(seed: u64, tolerances: &[(&str, f64)]) -> Self {
        Self {
            trials: 0,
            failures: 0,
            failure_indices: Vec::new(),
            seed,
            tolerances: tolerances.iter().map(|(n, v)| (String::from(*n), *v)).collect(),
            events: 0,
            unit_failures: 0,
        }
    }

    fn record(&mut self, trial: usize, failed: bool) {
        self.trials += 1;
        if failed {
            self.failures += 1;
            self.failure_indices.push(trial);
        }
    }
}

fn check_target(dim_v: usize, ell: usize, l: &[Vec<C64>]) -> Result<()> {
    if ell < 1 || ell >= dim_v {
        return Err(domain(format!("ℓ={ell} must satisfy 1 ≤ ℓ < dim V = {dim_v}")));
    }
    if l.len() != ell || l.iter().any(|v| v.len() != dim_v) {
        return Err(domain(format!("L must be given by {ell} vectors of length {dim_v}")));
    }
    Ok(())
}

fn admissible(dim_v: usize, k: &[Vec<C64>], l: &[Vec<C64>]) -> bool {
    min_principal_sine(dim_v, k, l) > MIN_PRINCIPAL_SINE
}

/// Haar kernel from an explicit generator.
pub fn haar_kernel_with<R: Rng + ?Sized>(
    dim_v: usize,
    ell: usize,
    l: &[Vec<C64>],
    seed: u64,
    rng: &mut R,
) -> Result<KernelSample> {
    check_target(dim_v, ell, l)?;
    for retries in 0..=MAX_KERNEL_RETRIES {
        let basis = haar_unitary(dim_v, rng).leading_columns(dim_v - ell).columns();
        if admissible(dim_v, &basis, l) {
            return Ok(KernelSample { basis, seed, retries });
        }
    }
    Err(Error::RetriesExhausted {
        attempts: MAX_KERNEL_RETRIES + 1,
        reason: "Haar kernels kept meeting the target".into(),
    })
}

/// `K` spanned by the first `dim V - ℓ` columns of a Haar unitary drawn from `seed`.
pub fn haar_kernel(dim_v: usize, ell: usize, l: &[Vec<C64>], seed: u64) -> Result<KernelSample> {
    haar_kernel_with(dim_v, ell, l, seed, &mut rng::seeded(seed))
}

/// `π_{K,L}` followed by coordinates in the (orthonormal) basis of `L`.
#[derive(Clone, Debug)]
pub struct LinearProjection {
    matrix: CMatrix,
}

impl LinearProjection {
    pub fn new(k: &KernelSample, l: &[Vec<C64>]) -> Result<Self> {
        let dim_v = l.first().map(Vec::len).ok_or_else(|| domain("empty target"))?;
        check_target(dim_v, l.len(), l)?;
        let pi = Projection::new(dim_v - 1, l.len() - 1, k.basis.clone(), l.to_vec())?;
        let coords = CMatrix::from_columns(dim_v, l).adjoint();
        Ok(Self {
            matrix: coords.mul(pi.projector()),
        })
    }

    /// `ℓ x dim V` matrix of the map.
    pub fn matrix(&self) -> &CMatrix {
        &self.matrix
    }

    pub fn apply(&self, v: &[C64]) -> Vec<C64> {
        self.matrix.mul_vec(v)
    }

    /// `(π_{K,L})_* t` as a vector on `L` (coordinates of `L`).
    pub fn push(&self, t: &SPVector) -> Result<SPVector> {
        t.map_linear(&self.matrix)
    }

    /// Rank of the images of `vectors`, singular values measured against
    /// `|π| max |v|` so that vectors sent to zero are not counted.
    pub fn image_rank(&self, vectors: &[Vec<C64>]) -> usize {
        let images: Vec<Vec<C64>> = vectors.iter().map(|v| self.apply(v)).collect();
        if images.is_empty() {
            return 0;
        }
        let scale = svd(&self.matrix).largest() * vectors.iter().map(|v| norm(v)).fold(0.0, f64::max);
        let values = svd(&CMatrix::from_columns(self.matrix.rows(), &images)).values;
        values.iter().filter(|&&s| s > RANK_TOL * scale).count()
    }
}

/// Whether `π_{K,L}` is injective on `span(w)`.
pub fn injectivity_trial(w: &[Vec<C64>], k: &KernelSample, l: &[Vec<C64>]) -> Result<bool> {
    let dim_v = l.first().map(Vec::len).unwrap_or(0);
    let p = span_basis(dim_v, w, RANK_TOL).len();
    if p > l.len() {
        return Err(domain(format!("injectivity needs p ≤ ℓ (got p={p}, ℓ={})", l.len())));
    }
    Ok(LinearProjection::new(k, l)?.image_rank(w) == p)
}

/// Indices (into `vectors`) of the first `count` linearly independent vectors,
/// scanning in order and discarding vectors whose residual after
/// orthogonalization is at most `RANK_TOL` times their norm.
pub fn greedy_independent(vectors: &[Vec<C64>], count: usize) -> Vec<usize> {
    let mut picked = Vec::new();
    let mut basis: Vec<Vec<C64>> = Vec::new();
    for (i, v) in vectors.iter().enumerate() {
        if picked.len() == count {
            break;
        }
        let original = norm(v);
        if original == 0.0 {
            continue;
        }
        let mut w = v.clone();
        for _ in 0..2 {
            for u in &basis {
                let c = dot(u, &w);
                for (wi, ui) in w.iter_mut().zip(u) {
                    *wi -= c * ui;
                }
            }
        }
        if norm(&w) > RANK_TOL * original {
            basis.push(normalized(&w).expect("residual is nonzero"));
            picked.push(i);
        }
    }
    picked
}

#[derive(Clone, Debug, PartialEq)]
pub struct LemmaIITrial {
    /// `rank((π_{K,L})_* t)`.
    pub rank: usize,
    /// Indices into `t.constituent_vectors()` of `ℓ` independent vectors.
    pub independent: Vec<usize>,
}

/// Pushes `t` through `π_{K,L}` and returns the rank of the result.
pub fn lemma_ii_trial(t: &SPVector, k: &KernelSample, l: &[Vec<C64>]) -> Result<LemmaIITrial> {
    let ell = l.len();
    if t.p() >= ell {
        return Err(domain(format!(
            "the rank statement needs p < ℓ (got p={}, ℓ={ell})",
            t.p()
        )));
    }
    let r = rank_via_span(t);
    if r < ell {
        return Err(domain(format!(
            "the rank statement needs rank(t) ≥ ℓ (got {r} < {ell})"
        )));
    }
    let independent = greedy_independent(&t.constituent_vectors(), ell);
    if independent.len() != ell {
        return Err(domain("could not select ℓ independent constituent vectors"));
    }
    let pushed = LinearProjection::new(k, l)?.push(t)?;
    Ok(LemmaIITrial {
        rank: rank_via_span(&pushed),
        independent,
    })
}

/// Evidence that a kernel lies in the exceptional set of `t`.
#[derive(Clone, Debug, PartialEq)]
pub struct AdversarialKernel {
    pub kernel: KernelSample,
    /// `(term, frame vector)` placed inside the kernel.
    pub pivot: (usize, usize),
    pub pushed_rank: usize,
    pub rank_drop: bool,
    /// `π_{K,L}` fails to be injective on the pivot term's span.
    pub injectivity_failure: bool,
}

impl AdversarialKernel {
    pub fn certified(&self) -> bool {
        self.rank_drop || self.injectivity_failure
    }
}

/// Builds a kernel containing a constituent frame vector of `t`, completed
/// by Haar-random directions so that it stays complementary to `L`. Frame
/// vectors are tried in order; vectors that cannot be completed (those in
/// `L`) are skipped.
pub fn adversarial_kernel(t: &SPVector, ell: usize, l: &[Vec<C64>], seed: u64) -> Result<AdversarialKernel> {
    let dim_v = t.dim();
    check_target(dim_v, ell, l)?;
    let r = rank_via_span(t);
    if r < ell {
        return Err(domain(format!(
            "exceptional kernels are built for rank(t) ≥ ℓ (got {r} < {ell})"
        )));
    }
    let mut rng = rng::seeded(seed);
    let mut attempts = 0;
    let terms: Vec<_> = t.effective_terms().collect();
    let term_index: Vec<usize> = t
        .terms()
        .iter()
        .enumerate()
        .filter(|(_, term)| terms.iter().any(|e| core::ptr::eq(*e, *term)))
        .map(|(i, _)| i)
        .collect();
    for (term_pos, term) in terms.iter().enumerate() {
        for (vi, v) in term.frame.iter().enumerate() {
            let Some(v) = normalized(v) else { continue };
            for retries in 0..=MAX_KERNEL_RETRIES {
                attempts += 1;
                let mut candidates = alloc::vec![v.clone()];
                candidates.extend((0..dim_v).map(|_| gaussian_vector(dim_v, &mut rng)));
                let mut basis = gram_schmidt(&candidates, 1e-6);
                basis.truncate(dim_v - ell);
                if basis.len() != dim_v - ell || !admissible(dim_v, &basis, l) {
                    continue;
                }
                let kernel = KernelSample { basis, seed, retries };
                let pi = LinearProjection::new(&kernel, l)?;
                let pushed_rank = rank_via_span(&pi.push(t)?);
                let span = span_basis(dim_v, &term.frame, RANK_TOL);
                let injectivity_failure = pi.image_rank(&span) < span.len();
                return Ok(AdversarialKernel {
                    kernel,
                    pivot: (term_index[term_pos], vi),
                    pushed_rank,
                    rank_drop: pushed_rank < ell,
                    injectivity_failure,
                });
            }
        }
    }
    Err(Error::RetriesExhausted {
        attempts,
        reason: "no constituent vector admits a kernel complementary to L".into(),
    })
}

/// Parameters `(dim V, p, ℓ, r)` of a genericity experiment.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct Shape {
    pub dim_v: usize,
    pub p: usize,
    pub ell: usize,
    pub r: usize,
}

/// The target `span(e_1, ..., e_ℓ)`.
pub fn coordinate_target(dim_v: usize, ell: usize) -> Vec<Vec<C64>> {
    (0..ell).map(|i| unit_vector(dim_v, i)).collect()
}

/// Random strongly positive vector of rank exactly `r`: `r` terms with frames
/// inside a Haar-random `r`-dimensional subspace.
pub fn random_rank_spvector<R: Rng + ?Sized>(dim: usize, p: usize, r: usize, rng: &mut R) -> Result<SPVector> {
    if p < 1 || p > r || r > dim {
        return Err(domain(format!("need 1 ≤ p ≤ r ≤ dim (got p={p}, r={r}, dim={dim})")));
    }
    let basis = haar_unitary(dim, rng).leading_columns(r).columns();
    let n_terms = r.div_ceil(p) + 1;
    let t = random_spvector_in(&basis, dim, p, n_terms, rng)?;
    let got = rank_via_span(&t);
    if got != r {
        return Err(domain(format!("random vector came out with rank {got} instead of {r}")));
    }
    Ok(t)
}

fn check_shape(s: Shape) -> Result<()> {
    if !(1 <= s.p && s.p < s.ell && s.ell <= s.r && s.r <= s.dim_v && s.ell < s.dim_v) {
        return Err(domain(format!("shape {s:?} violates 1 ≤ p < ℓ ≤ r ≤ dim V, ℓ < dim V")));
    }
    Ok(())
}

/// One fixed random `t` of the shape against `trials` Haar kernels, with `L`
/// the coordinate target. A trial fails when the pushed rank is not `ℓ`.
pub fn lemma_ii_montecarlo(shape: Shape, trials: usize, seed: u64) -> Result<TrialReport> {
    check_shape(shape)?;
    let l = coordinate_target(shape.dim_v, shape.ell);
    let t = random_rank_spvector(shape.dim_v, shape.p, shape.r, &mut rng::stream(seed, 0))?;
    let mut report = TrialReport::new(seed, &[("rank", RANK_TOL), ("principal_sine", MIN_PRINCIPAL_SINE)]);
    for i in 0..trials {
        let mut r = rng::stream(seed, 1 + i as u64);
        let k = haar_kernel_with(shape.dim_v, shape.ell, &l, seed, &mut r)?;
        report.events += k.retries;
        let trial = lemma_ii_trial(&t, &k, &l)?;
        report.record(i, trial.rank != shape.ell);
    }
    Ok(report)
}

/// Haar kernels against random `p`-dimensional `W`; a trial fails when
/// `π_{K,L}` is not injective on `W`.
pub fn injectivity_montecarlo(dim_v: usize, p: usize, ell: usize, trials: usize, seed: u64) -> Result<TrialReport> {
    if p < 1 || p > ell {
        return Err(domain(format!("injectivity needs 1 ≤ p ≤ ℓ (got p={p}, ℓ={ell})")));
    }
    let l = coordinate_target(dim_v, ell);
    check_target(dim_v, ell, &l)?;
    let mut report = TrialReport::new(seed, &[("rank", RANK_TOL), ("principal_sine", MIN_PRINCIPAL_SINE)]);
    for i in 0..trials {
        let mut r = rng::stream(seed, i as u64);
        let w: Vec<Vec<C64>> = (0..p).map(|_| gaussian_vector(dim_v, &mut r)).collect();
        let k = haar_kernel_with(dim_v, ell, &l, seed, &mut r)?;
        report.events += k.retries;
        report.record(i, !injectivity_trial(&w, &k, &l)?);
    }
    Ok(report)
}

/// `count` random `t` of the shape; a trial fails when the adversarial kernel
/// does not certify membership in the exceptional set.
pub fn adversarial_montecarlo(shape: Shape, count: usize, seed: u64) -> Result<TrialReport> {
    check_shape(shape)?;
    let l = coordinate_target(shape.dim_v, shape.ell);
    let mut report = TrialReport::new(seed, &[("rank", RANK_TOL), ("principal_sine", MIN_PRINCIPAL_SINE)]);
    for i in 0..count {
        let mut r = rng::stream(seed, i as u64);
        let t = random_rank_spvector(shape.dim_v, shape.p, shape.r, &mut r)?;
        let adv = adversarial_kernel(&t, shape.ell, &l, r.next_u64())?;
        report.events += usize::from(adv.rank_drop);
        report.record(i, !adv.certified());
    }
    Ok(report)
}

/// For each trial a fresh `random_projection(k, ℓ)` (or `injected` for trial
/// 0); counts atoms having a decomposable term that meets the fiber
/// nontrivially, or lying on the center. A trial fails when any atom does.
pub fn transversality_montecarlo(
    t: &DiscreteCurrent,
    ell: usize,
    trials: usize,
    seed: u64,
    injected: Option<&Projection>,
) -> Result<TrialReport> {
    let mut report = TrialReport::new(seed, &[("rank", RANK_TOL), ("tol_center", TOL_CENTER)]);
    if t.is_empty() {
        return Ok(report);
    }
    if ell < t.p() || ell + 1 > t.k() {
        return Err(domain(format!(
            "transversality needs p ≤ ℓ ≤ k-1 (got p={}, ℓ={ell}, k={})",
            t.p(),
            t.k()
        )));
    }
    if let Some(pi) = injected {
        if pi.k() != t.k() || pi.ell() != ell {
            return Err(domain("injected projection does not match (k, ℓ)"));
        }
    }
    for i in 0..trials {
        let pi = match (i, injected) {
            (0, Some(pi)) => pi.clone(),
            _ => random_projection(t.k(), ell, rng::stream(seed, i as u64).next_u64())?,
        };
        let mut bad = 0;
        for a in t.atoms() {
            match terms_transverse(&a.t, &pi, &a.x) {
                Ok(true) => {}
                Ok(false) => bad += 1,
                Err(Error::CenterIncidence { .. }) => {
                    report.events += 1;
                    bad += 1;
                }
                Err(e) => return Err(e),
            }
        }
        report.unit_failures += bad;
        report.record(i, bad > 0);
    }
    Ok(report)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::currents::{generate_plane_current, Atom};
    use crate::positivity::{normalize_trace, SPTerm};
    use crate::projective::{fiber_tangent, ProjPoint};
    use alloc::vec;

    fn e(n: usize, i: usize) -> Vec<C64> {
        unit_vector(n, i)
    }

    fn diag_t(dim: usize, idx: &[usize]) -> SPVector {
        SPVector::new(dim, 1, idx.iter().map(|&i| SPTerm::new(1.0, vec![e(dim, i)])).collect()).unwrap()
    }

    fn kernel(basis: Vec<Vec<C64>>) -> KernelSample {
        KernelSample {
            basis,
            seed: 0,
            retries: 0,
        }
    }

    #[test]
    fn haar_kernel_basics() {
        let l = coordinate_target(5, 2);
        let a = haar_kernel(5, 2, &l, 3).unwrap();
        assert_eq!(a, haar_kernel(5, 2, &l, 3).unwrap());
        assert_eq!(a.basis.len(), 3);
        assert!(haar_kernel(5, 5, &coordinate_target(5, 5), 1).is_err());
        assert!(haar_kernel(5, 0, &[], 1).is_err());
    }

    #[test]
    fn injectivity_examples() {
        let l = coordinate_target(3, 2);
        let k = kernel(vec![e(3, 2)]);
        assert!(!injectivity_trial(&[e(3, 2)], &k, &l).unwrap());
        assert!(injectivity_trial(&[e(3, 0), e(3, 1)], &k, &l).unwrap());
        assert!(injectivity_trial(&[e(3, 0), e(3, 1), e(3, 2)], &k, &l).is_err());
    }

    #[test]
    fn lemma_ii_examples() {
        let l = coordinate_target(3, 2);
        let k = kernel(vec![e(3, 2)]);
        let t = diag_t(3, &[0, 1]);
        let trial = lemma_ii_trial(&t, &k, &l).unwrap();
        assert_eq!(trial.rank, 2);
        assert_eq!(trial.independent, vec![0, 1]);
        let t = diag_t(3, &[0, 2]);
        assert_eq!(lemma_ii_trial(&t, &k, &l).unwrap().rank, 1);
        assert!(lemma_ii_trial(&diag_t(3, &[0]), &k, &l).is_err());
    }

    #[test]
    fn greedy_skips_dependent_vectors() {
        let v = vec![e(3, 0), e(3, 0), e(3, 1), e(3, 2)];
        assert_eq!(greedy_independent(&v, 2), vec![0, 2]);
        assert_eq!(greedy_independent(&v, 5), vec![0, 2, 3]);
    }

    #[test]
    fn adversarial_on_coordinate_example() {
        let l = coordinate_target(3, 2);
        let t = diag_t(3, &[0, 1, 2]);
        let adv = adversarial_kernel(&t, 2, &l, 1).unwrap();
        // e1 and e2 lie in L, so e3 is the first admissible pivot
        assert_eq!(adv.pivot, (2, 0));
        assert_eq!(adv.pushed_rank, 2);
        assert!(!adv.rank_drop && adv.injectivity_failure && adv.certified());
        assert_eq!(adv, adversarial_kernel(&t, 2, &l, 1).unwrap());

        let t = diag_t(3, &[0, 2]);
        let adv = adversarial_kernel(&t, 2, &l, 1).unwrap();
        assert_eq!(adv.pushed_rank, 1);
        assert!(adv.rank_drop);
    }

    #[test]
    fn adversarial_fails_when_span_is_l() {
        let l = coordinate_target(3, 2);
        assert!(matches!(
            adversarial_kernel(&diag_t(3, &[0, 1]), 2, &l, 1),
            Err(Error::RetriesExhausted { .. })
        ));
    }

    #[test]
    fn small_montecarlo_runs() {
        let shape = Shape {
            dim_v: 4,
            p: 1,
            ell: 2,
            r: 3,
        };
        let rep = lemma_ii_montecarlo(shape, 200, 5).unwrap();
        assert_eq!((rep.trials, rep.failures), (200, 0));
        assert_eq!(
            lemma_ii_montecarlo(shape, 50, 5).unwrap().failure_indices,
            rep.failure_indices
        );
        let rep = adversarial_montecarlo(shape, 20, 6).unwrap();
        assert_eq!(rep.failures, 0);
        let rep = injectivity_montecarlo(5, 2, 3, 200, 7).unwrap();
        assert_eq!(rep.failures, 0);
        assert!(lemma_ii_montecarlo(
            Shape {
                dim_v: 4,
                p: 2,
                ell: 2,
                r: 3
            },
            1,
            1
        )
        .is_err());
    }

    #[test]
    fn random_rank_vector_has_requested_rank() {
        let mut r = rng::seeded(2);
        for (dim, p, rank) in [(4, 1, 3), (5, 2, 4), (6, 2, 6)] {
            assert_eq!(
                rank_via_span(&random_rank_spvector(dim, p, rank, &mut r).unwrap()),
                rank
            );
        }
    }

    #[test]
    fn transversality_plane_and_injected_failure() {
        let t = generate_plane_current(3, 1, 30, 2).unwrap();
        let rep = transversality_montecarlo(&t, 2, 50, 3, None).unwrap();
        assert_eq!((rep.trials, rep.failures), (50, 0));

        let pi = random_projection(3, 2, 9).unwrap();
        let x = ProjPoint::new(vec![
            C64::new(1.0, 0.0),
            C64::new(0.2, 0.1),
            C64::new(-0.3, 0.0),
            C64::new(0.0, 0.5),
        ])
        .unwrap();
        let fiber = fiber_tangent(&pi, &x).unwrap();
        let bad = Atom::new(
            x,
            0.5,
            normalize_trace(&SPVector::decomposable(4, fiber.vectors.clone()).unwrap()).unwrap(),
        )
        .unwrap();
        let mut atoms = t.atoms().to_vec();
        atoms.push(bad);
        let t = DiscreteCurrent::new(3, 1, atoms).unwrap();
        let rep = transversality_montecarlo(&t, 2, 5, 3, Some(&pi)).unwrap();
        assert!(rep.failure_indices.contains(&0));
        assert!(rep.unit_failures >= 1);

        let empty = DiscreteCurrent::new(3, 1, Vec::new()).unwrap();
        assert_eq!(transversality_montecarlo(&empty, 2, 10, 1, None).unwrap().trials, 0);
    }
}
