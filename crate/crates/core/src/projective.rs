//! Points, tangent spaces and linear projections of `P^k`.
//!
//! A point is a unit vector `z ∈ C^{k+1}` (up to phase) and `T_x P^k` is
//! modelled as `z^⊥`. A projection with center `I` and target `L` is the
//! linear projector `P` of `C^{k+1}` onto `L̂` along `Î`; on tangent vectors
//! it acts by `w ↦ (P w)^{⊥ P z}`. The metric factor `1/|P z|` of the true
//! differential is not tracked: ranks, transversality and supports are
//! insensitive to it, and pushed vectors are trace-renormalized downstream.

use alloc::format;
use alloc::vec::Vec;

use crate::error::{domain, Error, Result};
use crate::linalg::{
    self, dot, gram_schmidt, haar_unitary, matrix_rank, min_principal_sine, normalized, CMatrix, Lu, C64, RANK_TOL,
};
use crate::positivity::SPVector;
use crate::rng;

/// Default minimal `|P z|` for a point to count as off the center.
pub const TOL_CENTER: f64 = 1e-8;

/// Minimal sine of the smallest principal angle between center and target.
pub const MIN_PRINCIPAL_SINE: f64 = 1e-8;

/// Unit-norm tolerance for stored points.
pub const UNIT_TOL: f64 = 1e-12;

/// Orthogonality tolerance between tangent vectors and their base point.
pub const TANGENT_TOL: f64 = 1e-10;

#[derive(Clone, Debug, PartialEq)]
pub struct ProjPoint {
    z: Vec<C64>,
}

impl ProjPoint {
    /// Normalizes `z`; fails on the zero vector.
    pub fn new(z: Vec<C64>) -> Result<Self> {
        normalized(&z)
            .map(|z| Self { z })
            .ok_or_else(|| domain("the zero vector is not a point of projective space"))
    }

    /// Wraps an already unit vector, checking `|z| = 1` within [`UNIT_TOL`].
    pub fn from_unit(z: Vec<C64>) -> Result<Self> {
        let n = linalg::norm(&z);
        if (n - 1.0).abs() > UNIT_TOL {
            return Err(domain(format!("representative has norm {n}, expected 1")));
        }
        Ok(Self { z })
    }

    pub fn coords(&self) -> &[C64] {
        &self.z
    }

    /// Dimension `k` of the projective space.
    pub fn k(&self) -> usize {
        self.z.len() - 1
    }

    pub fn same_point(&self, other: &Self, tol: f64) -> bool {
        fs_distance(self, other) <= tol
    }

    /// Whether `v` lies in the model `z^⊥` of the tangent space.
    pub fn is_tangent(&self, v: &[C64]) -> bool {
        dot(&self.z, v).norm() <= TANGENT_TOL * linalg::norm(v).max(1.0)
    }
}

/// Chordal Fubini–Study distance `sqrt(1 - |⟨x, y⟩|²)`, evaluated as the
/// norm of the component of `y` orthogonal to `x` to keep precision for
/// nearby points.
pub fn fs_distance(x: &ProjPoint, y: &ProjPoint) -> f64 {
    fs_distance_raw(&x.z, &y.z)
}

pub(crate) fn fs_distance_raw(x: &[C64], y: &[C64]) -> f64 {
    let c = dot(x, y);
    x.iter()
        .zip(y)
        .map(|(a, b)| (b - c * a).norm_sqr())
        .sum::<f64>()
        .sqrt()
        .min(1.0)
}

/// Tangent vectors at a point.
#[derive(Clone, Debug, PartialEq)]
pub struct TangentFrame {
    pub base: ProjPoint,
    pub vectors: Vec<Vec<C64>>,
}

impl TangentFrame {
    pub fn new(base: ProjPoint, vectors: Vec<Vec<C64>>) -> Result<Self> {
        if let Some(i) = vectors.iter().position(|v| !base.is_tangent(v)) {
            return Err(domain(format!("vector {i} is not orthogonal to the base point")));
        }
        Ok(Self { base, vectors })
    }

    pub fn len(&self) -> usize {
        self.vectors.len()
    }

    pub fn is_empty(&self) -> bool {
        self.vectors.is_empty()
    }
}

/// Linear projection `π_I : P^k ∖ I → L ≅ P^ℓ`.
#[derive(Clone, Debug, PartialEq)]
pub struct Projection {
    k: usize,
    ell: usize,
    center: Vec<Vec<C64>>,
    target: Vec<Vec<C64>>,
    projector: CMatrix,
    tol_center: f64,
}

impl Projection {
    /// Builds the projector onto `span(target)` along `span(center)`. Both
    /// bases must be orthonormal, of dimensions `k - ℓ` and `ℓ + 1`.
    pub fn new(k: usize, ell: usize, center: Vec<Vec<C64>>, target: Vec<Vec<C64>>) -> Result<Self> {
        let n = k + 1;
        if ell > k || center.len() != k - ell || target.len() != ell + 1 {
            return Err(domain(format!(
                "center of dimension {} and target of dimension {} do not fit k={k}, ℓ={ell}",
                center.len(),
                target.len()
            )));
        }
        if center.iter().chain(&target).any(|v| v.len() != n) {
            return Err(domain("basis vectors must have length k+1"));
        }
        for basis in [&center, &target] {
            let gram = CMatrix::from_columns(n, basis);
            let defect = gram.adjoint().mul(&gram).sub(&CMatrix::identity(basis.len())).max_abs();
            if defect > 1e-10 {
                return Err(domain(format!("basis is not orthonormal (defect {defect:e})")));
            }
        }
        let sine = min_principal_sine(n, &center, &target);
        if sine <= MIN_PRINCIPAL_SINE {
            return Err(domain(format!(
                "center and target intersect (smallest principal sine {sine:e})"
            )));
        }
        // P = B diag(0, I) B^{-1} with B = [center | target]
        let b = CMatrix::from_columns(n, &center).hstack(&CMatrix::from_columns(n, &target));
        let b_inv = Lu::new(&b)
            .inverse()
            .ok_or_else(|| domain("center and target are not complementary"))?;
        let mut selector = CMatrix::zeros(n, n);
        for i in (k - ell)..n {
            selector[(i, i)] = C64::new(1.0, 0.0);
        }
        let projector = b.mul(&selector).mul(&b_inv);
        Ok(Self {
            k,
            ell,
            center,
            target,
            projector,
            tol_center: TOL_CENTER,
        })
    }

    /// Center spanned by the first `k - ℓ` columns of `unitary`, target by the rest.
    pub fn from_unitary(k: usize, ell: usize, unitary: &CMatrix) -> Result<Self> {
        if unitary.rows() != k + 1 || unitary.cols() != k + 1 || ell > k {
            return Err(domain("unitary does not match k"));
        }
        let cols = unitary.columns();
        let (center, target) = cols.split_at(k - ell);
        Self::new(k, ell, center.to_vec(), target.to_vec())
    }

    pub fn with_tol_center(mut self, tol: f64) -> Self {
        self.tol_center = tol;
        self
    }

    pub fn k(&self) -> usize {
        self.k
    }

    pub fn ell(&self) -> usize {
        self.ell
    }

    pub fn center(&self) -> &[Vec<C64>] {
        &self.center
    }

    pub fn target(&self) -> &[Vec<C64>] {
        &self.target
    }

    pub fn projector(&self) -> &CMatrix {
        &self.projector
    }

    pub fn tol_center(&self) -> f64 {
        self.tol_center
    }

    /// Coordinates of a vector of `L̂` in the orthonormal target basis.
    pub fn to_target_coords(&self, v: &[C64]) -> Vec<C64> {
        self.target.iter().map(|b| dot(b, v)).collect()
    }

    /// Local data of the projection at `x`.
    pub fn local(&self, x: &ProjPoint) -> Result<LocalProjection> {
        if x.z.len() != self.k + 1 {
            return Err(domain(format!(
                "point of P^{} projected by a map from P^{}",
                x.k(),
                self.k
            )));
        }
        let pz = self.projector.mul_vec(&x.z);
        let size = linalg::norm(&pz);
        if size <= self.tol_center {
            return Err(Error::CenterIncidence { indices: Vec::new() });
        }
        let u: Vec<C64> = pz.iter().map(|c| c / size).collect();
        let n = self.k + 1;
        // (I - u u^*) P
        let mut reject = CMatrix::identity(n);
        for i in 0..n {
            for j in 0..n {
                reject[(i, j)] -= u[i] * u[j].conj();
            }
        }
        let differential = reject.mul(&self.projector);
        let basis = CMatrix::from_columns(n, &self.target);
        let target_differential = basis.adjoint().mul(&differential);
        let image_coords = self.to_target_coords(&u);
        Ok(LocalProjection {
            image: ProjPoint { z: u },
            image_in_target: ProjPoint::new(image_coords)?,
            differential,
            target_differential,
            center_distance: size,
        })
    }
}

/// The projection at one point: image and differential.
#[derive(Clone, Debug)]
pub struct LocalProjection {
    /// `π(x)` as a unit vector of `L̂ ⊂ C^{k+1}`.
    pub image: ProjPoint,
    /// `π(x)` in the coordinates of the target basis (a point of `P^ℓ`).
    pub image_in_target: ProjPoint,
    /// `w ↦ (P w)^{⊥ P z}` as a `(k+1) x (k+1)` matrix.
    pub differential: CMatrix,
    /// The same map followed by target coordinates, `(ℓ+1) x (k+1)`.
    pub target_differential: CMatrix,
    /// `|P z|`.
    pub center_distance: f64,
}

/// Haar-random projection: `Î` is spanned by the first `k - ℓ` columns of a
/// Haar unitary drawn from `seed` and `L̂` by the remaining ones.
pub fn random_projection(k: usize, ell: usize, seed: u64) -> Result<Projection> {
    if ell < 1 || ell + 1 > k {
        return Err(domain(format!(
            "target dimension ℓ={ell} must satisfy 1 ≤ ℓ ≤ k-1 = {}",
            k as i64 - 1
        )));
    }
    let mut rng = rng::seeded(seed);
    Projection::from_unitary(k, ell, &haar_unitary(k + 1, &mut rng))
}

/// `π(x)` as a point of `L̂ ⊂ C^{k+1}`.
pub fn project_point(pi: &Projection, x: &ProjPoint) -> Result<ProjPoint> {
    Ok(pi.local(x)?.image)
}

/// Matrix of `w ↦ (P w)^{⊥ P z}` on tangent representatives at `x`.
pub fn dprojection(pi: &Projection, x: &ProjPoint) -> Result<CMatrix> {
    Ok(pi.local(x)?.differential)
}

fn check_on_tangent(x: &ProjPoint, t: &SPVector) -> Result<()> {
    if t.dim() != x.z.len() {
        return Err(domain(format!(
            "vector lives in C^{} but the point in C^{}",
            t.dim(),
            x.z.len()
        )));
    }
    for (i, term) in t.terms().iter().enumerate() {
        if term.frame.iter().any(|v| !x.is_tangent(v)) {
            return Err(domain(format!("term {i} is not tangent at the base point")));
        }
    }
    Ok(())
}

/// `π_*(t)` on `T_{π(x)}`, in ambient coordinates. Terms whose pushed wedge
/// vanishes relative to the map are replaced by zero frames.
pub fn pushforward_sp(pi: &Projection, x: &ProjPoint, t: &SPVector) -> Result<SPVector> {
    check_on_tangent(x, t)?;
    let local = pi.local(x)?;
    t.map_linear(&local.differential)
}

/// Same as [`pushforward_sp`] with the result in target coordinates
/// (a vector on `T_{π(x)} P^ℓ`).
pub fn pushforward_sp_target(local: &LocalProjection, x: &ProjPoint, t: &SPVector) -> Result<SPVector> {
    check_on_tangent(x, t)?;
    t.map_linear(&local.target_differential)
}

/// Orthonormal basis of the tangent space of the fiber `π^{-1}(π(x))` at `x`.
pub fn fiber_tangent(pi: &Projection, x: &ProjPoint) -> Result<TangentFrame> {
    pi.local(x)?;
    let rejected: Vec<Vec<C64>> = pi.center.iter().map(|c| linalg::reject(c, &x.z)).collect();
    let vectors = gram_schmidt(&rejected, RANK_TOL);
    TangentFrame::new(x.clone(), vectors)
}

fn transverse_span(dim: usize, span: &[Vec<C64>], fiber: &[Vec<C64>]) -> bool {
    if span.is_empty() {
        return true;
    }
    let mut all = span.to_vec();
    all.extend_from_slice(fiber);
    matrix_rank(&CMatrix::from_columns(dim, &all), RANK_TOL) == span.len() + fiber.len()
}

/// Whether `Span(t) ∩ T_x(fiber) = {0}`.
pub fn is_transverse(t: &SPVector, pi: &Projection, x: &ProjPoint) -> Result<bool> {
    check_on_tangent(x, t)?;
    let fiber = fiber_tangent(pi, x)?;
    Ok(transverse_span(pi.k + 1, &t.span_basis(), &fiber.vectors))
}

/// Whether every decomposable constituent of `t` is transverse to the fiber.
pub fn terms_transverse(t: &SPVector, pi: &Projection, x: &ProjPoint) -> Result<bool> {
    check_on_tangent(x, t)?;
    let fiber = fiber_tangent(pi, x)?;
    let dim = pi.k + 1;
    Ok(t.effective_terms().all(|term| {
        let span = linalg::span_basis(dim, &term.frame, RANK_TOL);
        transverse_span(dim, &span, &fiber.vectors)
    }))
}

/// Orthonormal tangent frame of the projective subspace `P(Ŵ)` at `x ∈ P(Ŵ)`,
/// for an orthonormal basis `w_basis` of `Ŵ`.
pub fn subspace_tangent_frame(w_basis: &[Vec<C64>], x: &ProjPoint) -> Vec<Vec<C64>> {
    let rejected: Vec<Vec<C64>> = w_basis.iter().map(|w| linalg::reject(w, &x.z)).collect();
    let mut frame = gram_schmidt(&rejected, 1e-6);
    frame.truncate(w_basis.len().saturating_sub(1));
    frame
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg::{gaussian_vector, random_unit_vector, unit_vector};
    use crate::positivity::{rank_via_span, SPTerm};
    use alloc::vec;

    fn pt(z: Vec<C64>) -> ProjPoint {
        ProjPoint::new(z).unwrap()
    }

    fn coordinate_projection() -> Projection {
        // P^2 -> P^1 with center [e3] and target span{e1, e2}
        Projection::new(
            2,
            1,
            vec![unit_vector(3, 2)],
            vec![unit_vector(3, 0), unit_vector(3, 1)],
        )
        .unwrap()
    }

    #[test]
    fn random_projection_is_deterministic() {
        let a = random_projection(2, 1, 7).unwrap();
        let b = random_projection(2, 1, 7).unwrap();
        assert_eq!(a, b);
        assert_eq!(a.center().len(), 1);
        assert_eq!(a.target().len(), 2);
        assert!(random_projection(2, 2, 7).is_err());
        assert!(random_projection(3, 0, 7).is_err());
    }

    #[test]
    fn projector_is_idempotent_with_right_kernel() {
        for seed in 0..100 {
            let pi = random_projection(5, 2, seed).unwrap();
            let p = pi.projector();
            assert!(p.mul(p).sub(p).max_abs() < 1e-10);
            for c in pi.center() {
                assert!(linalg::norm(&p.mul_vec(c)) < 1e-10);
            }
            for t in pi.target() {
                let pt = p.mul_vec(t);
                assert!(pt.iter().zip(t).all(|(a, b)| (a - b).norm() < 1e-10));
            }
        }
    }

    #[test]
    fn oblique_projection_is_supported() {
        let tilted = linalg::normalized(&[C64::new(1.0, 0.0), C64::new(0.0, 0.0), C64::new(1.0, 0.0)]).unwrap();
        let pi = Projection::new(2, 1, vec![tilted.clone()], vec![unit_vector(3, 0), unit_vector(3, 1)]).unwrap();
        assert!(linalg::norm(&pi.projector().mul_vec(&tilted)) < 1e-14);
        let bad = Projection::new(
            2,
            1,
            vec![unit_vector(3, 0)],
            vec![unit_vector(3, 0), unit_vector(3, 1)],
        );
        assert!(bad.is_err());
    }

    #[test]
    fn project_point_examples() {
        let pi = coordinate_projection();
        let x = pt(vec![C64::new(0.6, 0.0), C64::new(0.0, 0.8), C64::new(0.0, 0.0)]);
        assert!(project_point(&pi, &x).unwrap().same_point(&x, 1e-14));

        let on_center = pt(unit_vector(3, 2));
        assert!(matches!(
            project_point(&pi, &on_center),
            Err(Error::CenterIncidence { .. })
        ));

        let pi = random_projection(4, 2, 3).unwrap();
        let mut r = rng::seeded(9);
        let x = pt(gaussian_vector(5, &mut r));
        let y = project_point(&pi, &x).unwrap();
        for c in pi.center() {
            assert!(dot(c, y.coords()).norm() < 1e-12);
        }
    }

    #[test]
    fn differential_examples() {
        let pi = coordinate_projection();
        let x = pt(unit_vector(3, 0));
        let d = dprojection(&pi, &x).unwrap();
        assert!(linalg::norm(&d.mul_vec(&unit_vector(3, 2))) < 1e-15);
        let w = unit_vector(3, 1);
        assert_eq!(d.mul_vec(&w), w);

        let mut r = rng::seeded(4);
        for seed in 0..100 {
            let k = 3 + (seed as usize % 4);
            let ell = 1 + (seed as usize % (k - 1));
            let pi = random_projection(k, ell, seed).unwrap();
            let x = pt(gaussian_vector(k + 1, &mut r));
            let d = dprojection(&pi, &x).unwrap();
            // restricted to x^⊥
            let tangent = crate::linalg::orthogonal_complement(k + 1, core::slice::from_ref(&x.coords().to_vec()));
            let restricted = d.mul(&CMatrix::from_columns(k + 1, &tangent));
            assert_eq!(matrix_rank(&restricted, RANK_TOL), ell, "k={k} ℓ={ell}");
            let fiber = fiber_tangent(&pi, &x).unwrap();
            assert_eq!(fiber.len(), k - ell);
            for v in &fiber.vectors {
                assert!(linalg::norm(&d.mul_vec(v)) < 1e-10);
                assert!(x.is_tangent(v));
            }
        }
    }

    #[test]
    fn fiber_of_plane_projection_is_a_line() {
        let pi = coordinate_projection();
        let x = pt(vec![C64::new(1.0, 0.0), C64::new(1.0, 0.0), C64::new(1.0, 0.0)]);
        assert_eq!(fiber_tangent(&pi, &x).unwrap().len(), 1);
    }

    #[test]
    fn pushforward_examples() {
        let pi = coordinate_projection();
        let x = pt(unit_vector(3, 0));
        // the fiber direction at e1 is e3
        let in_fiber = SPVector::decomposable(3, vec![unit_vector(3, 2)]).unwrap();
        let pushed = pushforward_sp(&pi, &x, &in_fiber).unwrap();
        assert!(pushed.is_zero());
        assert!(!is_transverse(&in_fiber, &pi, &x).unwrap());

        let across = SPVector::decomposable(3, vec![unit_vector(3, 1)]).unwrap();
        let pushed = pushforward_sp(&pi, &x, &across).unwrap();
        assert_eq!(rank_via_span(&pushed), 1);
        assert!(is_transverse(&across, &pi, &x).unwrap());

        let not_tangent = SPVector::decomposable(3, vec![unit_vector(3, 0)]).unwrap();
        assert!(pushforward_sp(&pi, &x, &not_tangent).is_err());
    }

    #[test]
    fn pushforward_is_linear_and_rank_bounded() {
        let mut r = rng::seeded(21);
        for seed in 0..50 {
            let (k, ell, p) = (5, 2, 2);
            let pi = random_projection(k, ell, seed).unwrap();
            let x = pt(gaussian_vector(k + 1, &mut r));
            let tangent = crate::linalg::orthogonal_complement(k + 1, core::slice::from_ref(&x.coords().to_vec()));
            let t = crate::positivity::random_spvector_in(&tangent, k + 1, p, 3, &mut r).unwrap();
            let pushed = pushforward_sp(&pi, &x, &t).unwrap();
            let pushed3 = pushforward_sp(&pi, &x, &t.scaled(3.0).unwrap()).unwrap();
            let diff = pushed3
                .cached()
                .matrix()
                .sub(&pushed.cached().matrix().scaled(3.0))
                .max_abs();
            assert!(diff <= 1e-10 * pushed3.cached().matrix().max_abs());
            assert!(rank_via_span(&pushed) <= rank_via_span(&t).min(ell));
        }
    }

    #[test]
    fn transversal_decomposable_pushes_to_rank_p() {
        let mut r = rng::seeded(2);
        let pi = random_projection(4, 3, 5).unwrap();
        let x = pt(gaussian_vector(5, &mut r));
        let tangent = crate::linalg::orthogonal_complement(5, core::slice::from_ref(&x.coords().to_vec()));
        let t = crate::positivity::random_spvector_in(&tangent, 5, 2, 1, &mut r).unwrap();
        assert!(is_transverse(&t, &pi, &x).unwrap());
        assert_eq!(rank_via_span(&pushforward_sp(&pi, &x, &t).unwrap()), 2);
    }

    #[test]
    fn fs_distance_examples() {
        let x = pt(vec![C64::new(0.6, 0.0), C64::new(0.8, 0.0)]);
        let phase = C64::new(0.0, 1.0);
        let y = pt(x.coords().iter().map(|c| c * phase).collect());
        assert!(fs_distance(&x, &y) < 1e-15);
        let o = pt(vec![C64::new(-0.8, 0.0), C64::new(0.6, 0.0)]);
        assert!((fs_distance(&x, &o) - 1.0).abs() < 1e-15);

        let mut r = rng::seeded(33);
        for _ in 0..1000 {
            let a = pt(random_unit_vector(4, &mut r));
            let b = pt(random_unit_vector(4, &mut r));
            let c = pt(random_unit_vector(4, &mut r));
            assert!(fs_distance(&a, &b) <= fs_distance(&a, &c) + fs_distance(&c, &b) + 1e-12);
            assert!((fs_distance(&a, &b) - fs_distance(&b, &a)).abs() < 1e-12);
        }
    }

    #[test]
    fn fs_distance_resolves_nearby_points() {
        let x = pt(vec![C64::new(1.0, 0.0), C64::new(0.0, 0.0)]);
        let y = pt(vec![C64::new(1.0, 0.0), C64::new(1e-12, 0.0)]);
        assert!((fs_distance(&x, &y) - 1e-12).abs() < 1e-20);
    }

    #[test]
    fn lipschitz_away_from_center() {
        let mut r = rng::seeded(44);
        let pi = random_projection(3, 2, 1).unwrap();
        let mut checked = 0;
        while checked < 10_000 {
            let x = pt(random_unit_vector(4, &mut r));
            let y = pt(random_unit_vector(4, &mut r));
            let (Ok(lx), Ok(ly)) = (pi.local(&x), pi.local(&y)) else {
                continue;
            };
            if lx.center_distance < 0.1 || ly.center_distance < 0.1 {
                continue;
            }
            assert!(fs_distance(&lx.image, &ly.image) <= (100.0 / 0.01) * fs_distance(&x, &y));
            checked += 1;
        }
    }

    #[test]
    fn terms_transverse_checks_each_term() {
        let pi = coordinate_projection();
        let x = pt(unit_vector(3, 0));
        let t = SPVector::new(
            3,
            1,
            vec![
                SPTerm::new(1.0, vec![unit_vector(3, 1)]),
                SPTerm::new(1.0, vec![unit_vector(3, 2)]),
            ],
        )
        .unwrap();
        assert!(!terms_transverse(&t, &pi, &x).unwrap());
    }
}
