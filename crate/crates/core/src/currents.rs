//! Atomic positive currents of bidimension (p,p) on `P^k`.
//!
//! A current is a finite list of atoms `(x_i, w_i, t_i)` with `t_i` a trace-1
//! strongly positive vector on `T_{x_i} P^k`; it acts on test forms by
//! `⟨T, φ⟩ = Σ w_i ⟨t_i, φ(x_i)⟩` and its trace measure is `Σ w_i δ_{x_i}`.
//!
//! Pushing forward under a linear projection groups atoms by fiber. Inside a
//! fiber cluster the conditional measure is the normalized weight vector, and
//! the output vector at the image point is the conditional average of the
//! pushed vectors, renormalized to trace 1 with the trace folded into the
//! output weight. The reciprocal of that trace is the density `h` of the
//! image of the trace measure with respect to the trace measure of the image.

use alloc::format;
use alloc::vec;
use alloc::vec::Vec;

use rand::Rng;

use crate::error::{domain, Error, Result};
use crate::exterior::{binomial, compound_matrix, pair, PPForm};
use crate::linalg::{self, gaussian_matrix, haar_unitary, orthogonal_complement, random_unit_vector, C64};
use crate::positivity::{normalize_trace, SPTerm, SPVector, TRACE_TOL};
use crate::projective::{fs_distance_raw, pushforward_sp_target, random_projection, ProjPoint, Projection};
use crate::rng;

/// Default clustering radius: only exact fiber collisions are merged.
pub const DEFAULT_DELTA: f64 = 1e-9;

#[derive(Clone, Debug, PartialEq)]
pub struct Atom {
    pub x: ProjPoint,
    pub weight: f64,
    pub t: SPVector,
}

impl Atom {
    /// Checks the atom invariants: positive weight, trace 1 and tangency.
    pub fn new(x: ProjPoint, weight: f64, t: SPVector) -> Result<Self> {
        let atom = Self { x, weight, t };
        atom.check()
            .map_err(|message| Error::Validation { atom: None, message })?;
        Ok(atom)
    }

    fn check(&self) -> core::result::Result<(), alloc::string::String> {
        if !self.weight.is_finite() || self.weight <= 0.0 {
            return Err(format!("weight {} is not positive", self.weight));
        }
        if self.t.dim() != self.x.coords().len() {
            return Err(format!(
                "vector dimension {} does not match point dimension {}",
                self.t.dim(),
                self.x.coords().len()
            ));
        }
        let tr = self.t.trace();
        if (tr - 1.0).abs() > TRACE_TOL {
            return Err(format!("tangent vector has trace {tr}, expected 1"));
        }
        for (i, term) in self.t.terms().iter().enumerate() {
            if term.frame.iter().any(|v| !self.x.is_tangent(v)) {
                return Err(format!("frame of term {i} is not orthogonal to the point"));
            }
        }
        Ok(())
    }
}

/// A point with a nonnegative weight.
#[derive(Clone, Debug, PartialEq)]
pub struct WeightedPoint {
    pub point: ProjPoint,
    pub weight: f64,
}

#[derive(Clone, Debug, PartialEq)]
pub struct DiscreteCurrent {
    k: usize,
    p: usize,
    atoms: Vec<Atom>,
}

impl DiscreteCurrent {
    /// Validates every atom against `(k, p)`; errors name the atom index.
    /// An empty atom list is accepted here (restrictions may be empty); use
    /// [`DiscreteCurrent::check_positive_mass`] where a genuine current is required.
    pub fn new(k: usize, p: usize, atoms: Vec<Atom>) -> Result<Self> {
        if p > k {
            return Err(domain(format!("bidimension ({p},{p}) exceeds k={k}")));
        }
        for (i, a) in atoms.iter().enumerate() {
            if a.x.coords().len() != k + 1 || a.t.p() != p {
                return Err(Error::Validation {
                    atom: Some(i),
                    message: format!(
                        "atom lives in P^{} with p={}, expected P^{k} with p={p}",
                        a.x.k(),
                        a.t.p()
                    ),
                });
            }
            a.check()
                .map_err(|message| Error::Validation { atom: Some(i), message })?;
        }
        Ok(Self { k, p, atoms })
    }

    pub fn check_positive_mass(&self) -> Result<()> {
        if self.atoms.is_empty() {
            return Err(Error::Validation {
                atom: None,
                message: "current has no atoms (mass must be positive)".into(),
            });
        }
        Ok(())
    }

    pub fn k(&self) -> usize {
        self.k
    }

    pub fn p(&self) -> usize {
        self.p
    }

    pub fn atoms(&self) -> &[Atom] {
        &self.atoms
    }

    pub fn len(&self) -> usize {
        self.atoms.len()
    }

    pub fn is_empty(&self) -> bool {
        self.atoms.is_empty()
    }

    pub fn mass(&self) -> f64 {
        self.atoms.iter().map(|a| a.weight).sum()
    }

    /// The trace measure `Σ w_i δ_{x_i}`.
    pub fn trace_measure(&self) -> Vec<WeightedPoint> {
        self.atoms
            .iter()
            .map(|a| WeightedPoint {
                point: a.x.clone(),
                weight: a.weight,
            })
            .collect()
    }
}

/// `T` restricted to the atoms satisfying `keep`.
pub fn restrict(t: &DiscreteCurrent, mut keep: impl FnMut(usize, &Atom) -> bool) -> DiscreteCurrent {
    let atoms = t
        .atoms
        .iter()
        .enumerate()
        .filter(|(i, a)| keep(*i, a))
        .map(|(_, a)| a.clone())
        .collect();
    DiscreteCurrent { k: t.k, p: t.p, atoms }
}

/// `⟨T, φ⟩ = Σ w_i ⟨t_i, φ_i⟩` with one form per atom.
pub fn pair_current(t: &DiscreteCurrent, forms: &[PPForm]) -> Result<f64> {
    if forms.len() != t.atoms.len() {
        return Err(domain(format!(
            "{} forms supplied for {} atoms",
            forms.len(),
            t.atoms.len()
        )));
    }
    t.atoms
        .iter()
        .zip(forms)
        .map(|(a, f)| Ok(a.weight * pair(a.t.cached(), f)?))
        .sum()
}

/// Atoms of `T` sharing one fiber of the projection.
#[derive(Clone, Debug, PartialEq)]
pub struct FiberCluster {
    /// Image point in target coordinates (the image of the first member).
    pub z: ProjPoint,
    /// Input atom indices, increasing.
    pub members: Vec<usize>,
    /// `w_i / Σ_members w`.
    pub conditional_weights: Vec<f64>,
    /// `Σ_members w`, the mass of the image measure at `z`.
    pub total_weight: f64,
    /// Largest distance from `z` to a member image.
    pub diameter: f64,
    /// Trace of the conditional average of the pushed vectors.
    pub averaged_trace: f64,
    /// `1 / averaged_trace`; `None` for degenerate clusters.
    pub density: Option<f64>,
    /// Index of the output atom; `None` when the pushed vectors all vanish.
    pub output_atom: Option<usize>,
}

impl FiberCluster {
    pub fn is_degenerate(&self) -> bool {
        self.output_atom.is_none()
    }
}

/// Result of pushing an atomic current forward.
#[derive(Clone, Debug)]
pub struct Pushforward {
    /// `π_*T` on `P^ℓ`, in target coordinates.
    pub current: DiscreteCurrent,
    pub clusters: Vec<FiberCluster>,
    /// Image of each input atom, target coordinates.
    pub images: Vec<ProjPoint>,
    /// `π_*(t_i)` for each input atom, target coordinates, not renormalized.
    pub pushed: Vec<SPVector>,
}

impl Pushforward {
    /// `π_* σ_T`: cluster masses at the image points.
    pub fn image_measure(&self) -> Vec<WeightedPoint> {
        self.clusters
            .iter()
            .map(|c| WeightedPoint {
                point: c.z.clone(),
                weight: c.total_weight,
            })
            .collect()
    }

    pub fn degenerate_clusters(&self) -> impl Iterator<Item = (usize, &FiberCluster)> {
        self.clusters.iter().enumerate().filter(|(_, c)| c.is_degenerate())
    }

    /// Cluster index of each input atom.
    pub fn cluster_of(&self) -> Vec<usize> {
        let mut out = vec![0; self.images.len()];
        for (c, cluster) in self.clusters.iter().enumerate() {
            for &m in &cluster.members {
                out[m] = c;
            }
        }
        out
    }
}

/// Sorted index for "is there a point within `radius`" queries under the
/// chordal distance. The key `|z_0|²` is 1-Lipschitz up to `√2` in that
/// distance, so only a key window has to be scanned.
struct NeighborIndex<'a> {
    points: &'a [ProjPoint],
    order: Vec<usize>,
    keys: Vec<f64>,
}

impl<'a> NeighborIndex<'a> {
    fn new(points: &'a [ProjPoint]) -> Self {
        let mut order: Vec<usize> = (0..points.len()).collect();
        let key = |p: &ProjPoint| p.coords()[0].norm_sqr();
        order.sort_by(|&a, &b| key(&points[a]).total_cmp(&key(&points[b])).then(a.cmp(&b)));
        let keys = order.iter().map(|&i| key(&points[i])).collect();
        Self { points, order, keys }
    }

    /// Indices of points within `radius` of `q`, in increasing index order.
    fn within(&self, q: &ProjPoint, radius: f64) -> Vec<usize> {
        let key = q.coords()[0].norm_sqr();
        let slack = core::f64::consts::SQRT_2 * radius + 1e-15;
        let lo = self.keys.partition_point(|&k| k < key - slack);
        let mut out: Vec<usize> = self.keys[lo..]
            .iter()
            .take_while(|&&k| k <= key + slack)
            .zip(&self.order[lo..])
            .filter(|(_, &i)| fs_distance_raw(self.points[i].coords(), q.coords()) <= radius)
            .map(|(_, &i)| i)
            .collect();
        out.sort_unstable();
        out
    }
}

fn find(parent: &mut [usize], mut i: usize) -> usize {
    while parent[i] != i {
        parent[i] = parent[parent[i]];
        i = parent[i];
    }
    i
}

/// Single-linkage clusters of `points` at radius `delta`, ordered by their
/// smallest member, members increasing.
fn single_linkage(points: &[ProjPoint], delta: f64) -> Vec<Vec<usize>> {
    let n = points.len();
    let mut parent: Vec<usize> = (0..n).collect();
    let index = NeighborIndex::new(points);
    for (i, point) in points.iter().enumerate() {
        for j in index.within(point, delta) {
            let (a, b) = (find(&mut parent, i), find(&mut parent, j));
            if a != b {
                let (lo, hi) = if a < b { (a, b) } else { (b, a) };
                parent[hi] = lo;
            }
        }
    }
    let mut root_slot: Vec<Option<usize>> = vec![None; n];
    let mut clusters: Vec<Vec<usize>> = Vec::new();
    for i in 0..n {
        let r = find(&mut parent, i);
        match root_slot[r] {
            Some(c) => clusters[c].push(i),
            None => {
                root_slot[r] = Some(clusters.len());
                clusters.push(vec![i]);
            }
        }
    }
    clusters
}

/// Pushes `T` forward under `π`, grouping atoms whose images lie within
/// `delta` (single linkage) into fiber clusters.
pub fn pushforward_current(t: &DiscreteCurrent, pi: &Projection, delta: f64) -> Result<Pushforward> {
    if delta.is_nan() || delta < 0.0 {
        return Err(domain(format!("clustering radius {delta} must be nonnegative")));
    }
    if pi.k() != t.k {
        return Err(domain(format!(
            "projection from P^{} applied to a current on P^{}",
            pi.k(),
            t.k
        )));
    }
    let mut locals = Vec::with_capacity(t.atoms.len());
    let mut incident = Vec::new();
    for (i, a) in t.atoms.iter().enumerate() {
        match pi.local(&a.x) {
            Ok(l) => locals.push(l),
            Err(Error::CenterIncidence { .. }) => incident.push(i),
            Err(e) => return Err(e),
        }
    }
    if !incident.is_empty() {
        return Err(Error::CenterIncidence { indices: incident });
    }
    let images: Vec<ProjPoint> = locals.iter().map(|l| l.image_in_target.clone()).collect();
    let pushed = t
        .atoms
        .iter()
        .zip(&locals)
        .map(|(a, l)| pushforward_sp_target(l, &a.x, &a.t))
        .collect::<Result<Vec<_>>>()?;

    let target_dim = pi.ell() + 1;
    let mut out_atoms = Vec::new();
    let mut clusters = Vec::new();
    for members in single_linkage(&images, delta) {
        let total_weight: f64 = members.iter().map(|&i| t.atoms[i].weight).sum();
        let conditional_weights: Vec<f64> = members.iter().map(|&i| t.atoms[i].weight / total_weight).collect();
        let z = images[members[0]].clone();
        let diameter = members
            .iter()
            .map(|&i| fs_distance_raw(z.coords(), images[i].coords()))
            .fold(0.0, f64::max);
        let mut terms = Vec::new();
        for (&i, &c) in members.iter().zip(&conditional_weights) {
            for term in pushed[i].terms() {
                terms.push(SPTerm::new(term.lambda * c, term.frame.clone()));
            }
        }
        let averaged = SPVector::new(target_dim, t.p, terms)?;
        let averaged_trace = averaged.trace();
        let (density, output_atom) = if averaged.is_zero() || averaged_trace.is_nan() || averaged_trace <= 0.0 {
            (None, None)
        } else {
            let normalized = normalize_trace(&averaged)?;
            out_atoms.push(Atom {
                x: z.clone(),
                weight: total_weight * averaged_trace,
                t: normalized,
            });
            (Some(1.0 / averaged_trace), Some(out_atoms.len() - 1))
        };
        clusters.push(FiberCluster {
            z,
            members,
            conditional_weights,
            total_weight,
            diameter,
            averaged_trace,
            density,
            output_atom,
        });
    }
    let current = DiscreteCurrent::new(pi.ell(), t.p, out_atoms)?;
    Ok(Pushforward {
        current,
        clusters,
        images,
        pushed,
    })
}

/// Outcome of comparing `⟨π_*T, φ⟩` with `⟨T, π^*φ⟩`.
#[derive(Clone, Debug, PartialEq)]
pub struct AdjunctionReport {
    pub max_relative_error: f64,
    /// Number of forms entering the statistic (pairs with both sides zero are skipped).
    pub compared: usize,
    /// Largest cluster diameter; the identity is exact only when this is ~0.
    pub max_cluster_diameter: f64,
}

/// Random PSD form `G G^* / |G G^*|` on `∧^{p,p} C^dim`.
pub fn random_psd_form<R: Rng + ?Sized>(dim: usize, p: usize, rng: &mut R) -> PPForm {
    let n = binomial(dim, p);
    let g = gaussian_matrix(n, n, rng);
    let mut h = g.mul(&g.adjoint());
    h.hermitize();
    let scale = h.frobenius_norm();
    PPForm::new(dim, p, h.scaled(1.0 / scale)).expect("Gram matrices are Hermitian")
}

/// For `n_forms` random PSD form fields `φ` on the target (one form per
/// fiber cluster), compares `Σ_z W_z ⟨t_z, φ(z)⟩` against
/// `Σ_i w_i ⟨t_i, π^*φ(π(x_i))⟩`, the pullback being the adjoint of the
/// induced map on Plücker coordinates.
pub fn check_pairing_adjunction(
    t: &DiscreteCurrent,
    pi: &Projection,
    delta: f64,
    n_forms: usize,
    seed: u64,
) -> Result<AdjunctionReport> {
    let push = pushforward_current(t, pi, delta)?;
    let cluster_of = push.cluster_of();
    let target_dim = pi.ell() + 1;
    let compounds = t
        .atoms
        .iter()
        .map(|a| compound_matrix(&pi.local(&a.x)?.target_differential, t.p))
        .collect::<Result<Vec<_>>>()?;
    let mut worst = 0.0f64;
    let mut compared = 0;
    for f in 0..n_forms {
        let mut rng = rng::stream(seed, f as u64);
        let field: Vec<PPForm> = push
            .clusters
            .iter()
            .map(|_| random_psd_form(target_dim, t.p, &mut rng))
            .collect();
        let mut lhs = 0.0;
        for c in &push.clusters {
            if let Some(o) = c.output_atom {
                let atom = &push.current.atoms[o];
                lhs += atom.weight * pair(atom.t.cached(), &field[cluster_of[c.members[0]]])?;
            }
        }
        let mut rhs = 0.0;
        for (i, a) in t.atoms.iter().enumerate() {
            let pulled = field[cluster_of[i]].pullback(&compounds[i], t.k + 1)?;
            rhs += a.weight * pair(a.t.cached(), &pulled)?;
        }
        let scale = lhs.abs().max(rhs.abs());
        if scale == 0.0 {
            continue;
        }
        compared += 1;
        worst = worst.max((lhs - rhs).abs() / scale);
    }
    let max_cluster_diameter = push.clusters.iter().map(|c| c.diameter).fold(0.0, f64::max);
    Ok(AdjunctionReport {
        max_relative_error: worst,
        compared,
        max_cluster_diameter,
    })
}

/// Support containment for atomic measures.
#[derive(Clone, Debug, PartialEq)]
pub struct AcCheck {
    pub holds: bool,
    /// First atom of `sigma` with no atom of `nu` within the tolerance.
    pub witness: Option<usize>,
}

/// `σ ≪ ν` for atomic measures: every atom of `σ` with positive weight has a
/// positively weighted atom of `ν` within chordal distance `tol`.
pub fn check_ac(sigma: &[WeightedPoint], nu: &[WeightedPoint], tol: f64) -> AcCheck {
    let support: Vec<ProjPoint> = nu.iter().filter(|w| w.weight > 0.0).map(|w| w.point.clone()).collect();
    let index = NeighborIndex::new(&support);
    let witness = sigma
        .iter()
        .position(|s| s.weight > 0.0 && index.within(&s.point, tol).is_empty());
    AcCheck {
        holds: witness.is_none(),
        witness,
    }
}

/// `Σ coeffs_j basis_j` in `C^len`.
fn combine(len: usize, coeffs: &[C64], basis: &[Vec<C64>]) -> Vec<C64> {
    let mut v = vec![C64::new(0.0, 0.0); len];
    for (c, b) in coeffs.iter().zip(basis) {
        linalg::axpy(*c, b, &mut v);
    }
    v
}

/// First `p` columns of a Haar unitary of size `basis.len()`, expressed in `basis`.
fn random_frame_in<R: Rng + ?Sized>(len: usize, basis: &[Vec<C64>], p: usize, rng: &mut R) -> Vec<Vec<C64>> {
    let mixing = haar_unitary(basis.len(), rng);
    (0..p).map(|j| combine(len, &mixing.column(j), basis)).collect()
}

fn plane_atom(basis: &[Vec<C64>], coeffs: &[C64], weight: f64) -> Result<Atom> {
    let dim = basis[0].len();
    let x = ProjPoint::new(combine(dim, coeffs, basis))?;
    // tangent frame: orthonormal complement of the coefficient vector inside Ŵ
    let frame: Vec<Vec<C64>> = orthogonal_complement(coeffs.len(), &[coeffs.to_vec()])
        .iter()
        .map(|u| combine(dim, u, basis))
        .collect();
    let t = normalize_trace(&SPVector::decomposable(dim, frame)?)?;
    Atom::new(x, weight, t)
}

fn check_plane_params(k: usize, p: usize, n: usize) -> Result<()> {
    if p < 1 || p + 1 > k {
        return Err(domain(format!("plane currents need 1 ≤ p ≤ k-1 (got k={k}, p={p})")));
    }
    if n == 0 {
        return Err(domain("at least one atom is required"));
    }
    Ok(())
}

/// Integration current of a Haar-random projective `p`-plane, sampled at `n`
/// Haar-uniform points with weight `1/n` each.
pub fn generate_plane_current(k: usize, p: usize, n: usize, seed: u64) -> Result<DiscreteCurrent> {
    generate_union_current(k, p, 1, n, seed)
}

/// Atoms drawn round-robin from `m` independent Haar-random `p`-planes.
pub fn generate_union_current(k: usize, p: usize, m: usize, n: usize, seed: u64) -> Result<DiscreteCurrent> {
    check_plane_params(k, p, n)?;
    if m == 0 {
        return Err(domain("a union needs at least one plane"));
    }
    let mut rng = rng::seeded(seed);
    let planes: Vec<Vec<Vec<C64>>> = (0..m)
        .map(|_| haar_unitary(k + 1, &mut rng).leading_columns(p + 1).columns())
        .collect();
    let weight = 1.0 / n as f64;
    let atoms = (0..n)
        .map(|i| plane_atom(&planes[i % m], &random_unit_vector(p + 1, &mut rng), weight))
        .collect::<Result<Vec<_>>>()?;
    DiscreteCurrent::new(k, p, atoms)
}

/// Atoms at Haar points of a projective line whose tangent vectors have full
/// rank `k`: the average of decomposable vectors over `p`-blocks of an
/// orthonormal basis of `T_x P^k`. Not the discretization of a closed current.
pub fn generate_full_rank_line(k: usize, p: usize, n: usize, seed: u64) -> Result<DiscreteCurrent> {
    if p < 1 || p > k || n == 0 {
        return Err(domain(format!("need 1 ≤ p ≤ k and n ≥ 1 (got k={k}, p={p}, n={n})")));
    }
    let mut rng = rng::seeded(seed);
    let line = haar_unitary(k + 1, &mut rng).leading_columns(2).columns();
    let weight = 1.0 / n as f64;
    let blocks = k.div_ceil(p);
    let atoms = (0..n)
        .map(|_| {
            let x = ProjPoint::new(combine(k + 1, &random_unit_vector(2, &mut rng), &line))?;
            let tangent = orthogonal_complement(k + 1, &[x.coords().to_vec()]);
            let terms = (0..blocks)
                .map(|b| {
                    let start = (b * p).min(k - p);
                    SPTerm::new(1.0, tangent[start..start + p].to_vec())
                })
                .collect();
            Atom::new(x, weight, normalize_trace(&SPVector::new(k + 1, p, terms)?)?)
        })
        .collect::<Result<Vec<_>>>()?;
    DiscreteCurrent::new(k, p, atoms)
}

/// Atoms placed on `n_fibers` common fibers of `random_projection(k, ℓ, seed)`,
/// `per_fiber` atoms each, with weights uniform in `[0.5, 1.5]` normalized to
/// total mass 1. With `identical_push`, all atoms of a fiber push forward to
/// the same decomposable vector; otherwise tangent frames are random.
pub fn generate_fibered_family(
    k: usize,
    p: usize,
    ell: usize,
    n_fibers: usize,
    per_fiber: usize,
    seed: u64,
    identical_push: bool,
) -> Result<(DiscreteCurrent, Projection)> {
    if p < 1 || p > ell {
        return Err(domain(format!("fibered families need 1 ≤ p ≤ ℓ (got p={p}, ℓ={ell})")));
    }
    if n_fibers == 0 || per_fiber == 0 {
        return Err(domain(
            "fibered families need at least one fiber and one atom per fiber",
        ));
    }
    let pi = random_projection(k, ell, seed)?;
    let mut rng = rng::stream(seed, 1);
    let dim = k + 1;
    let mut raw = Vec::with_capacity(n_fibers * per_fiber);
    for _ in 0..n_fibers {
        let y_coords = random_unit_vector(ell + 1, &mut rng);
        let y = combine(dim, &y_coords, pi.target());
        // a p-frame of T_y L, used when all members share the pushed vector
        let in_l: Vec<Vec<C64>> = orthogonal_complement(ell + 1, &[y_coords])
            .iter()
            .map(|u| combine(dim, u, pi.target()))
            .collect();
        let shared = random_frame_in(dim, &in_l, p, &mut rng);
        for _ in 0..per_fiber {
            let offsets = linalg::gaussian_vector(k - ell, &mut rng);
            let mut z = y.clone();
            for (b, c) in offsets.iter().zip(pi.center()) {
                linalg::axpy(*b, c, &mut z);
            }
            let x = ProjPoint::new(z)?;
            let frame: Vec<Vec<C64>> = if identical_push {
                shared.iter().map(|u| linalg::reject(u, x.coords())).collect()
            } else {
                let tangent = orthogonal_complement(dim, &[x.coords().to_vec()]);
                random_frame_in(dim, &tangent, p, &mut rng)
            };
            let t = normalize_trace(&SPVector::decomposable(dim, frame)?)?;
            raw.push((x, rng.random_range(0.5..=1.5), t));
        }
    }
    let total: f64 = raw.iter().map(|r| r.1).sum();
    let atoms = raw
        .into_iter()
        .enumerate()
        .map(|(i, (x, w, t))| {
            Atom::new(x, w / total, t).map_err(|e| match e {
                Error::Validation { message, .. } => Error::Validation { atom: Some(i), message },
                other => other,
            })
        })
        .collect::<Result<Vec<_>>>()?;
    Ok((DiscreteCurrent::new(k, p, atoms)?, pi))
}
