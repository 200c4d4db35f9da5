//! End-to-end check of `p ≤ rank(t_T) ≤ ½ dim(σ_T)` on an atomic current,
//! following the projection argument: estimate the dimension, choose `ℓ`,
//! project, and inspect the atoms of rank at least `ℓ`.

use std::collections::BTreeMap;

use plurirank_core::currents::{check_ac, pushforward_current, restrict, DiscreteCurrent, Pushforward, DEFAULT_DELTA};
use plurirank_core::dimension::{correlation_dimension, DimensionEstimate, DEFAULT_Q_HI, DEFAULT_Q_LO};
use plurirank_core::genericity::{coordinate_target, haar_kernel, lemma_ii_trial, transversality_montecarlo};
use plurirank_core::positivity::rank_via_span;
use plurirank_core::projective::{random_projection, Projection, TOL_CENTER};
use plurirank_core::{rng, Error};
use rand::RngCore;
use serde::Serialize;

use crate::error::AppResult;

/// Projection resamples allowed when atoms hit the center.
pub const MAX_PROJECTION_RESAMPLES: usize = 16;
/// Resolution of the dimension estimate used in rank comparisons.
pub const DEFAULT_DIM_RESOLUTION: f64 = 0.25;
/// Tolerance for the absolute-continuity support checks.
pub const AC_TOL: f64 = 1e-9;

#[derive(Clone, Debug)]
pub struct VerifyOptions {
    pub q_lo: f64,
    pub q_hi: f64,
    pub delta: f64,
    pub tol_center: f64,
    pub dim_resolution: f64,
    pub transversality_trials: usize,
    pub lemma_spot_checks: usize,
}

impl Default for VerifyOptions {
    fn default() -> Self {
        Self {
            q_lo: DEFAULT_Q_LO,
            q_hi: DEFAULT_Q_HI,
            delta: DEFAULT_DELTA,
            tol_center: TOL_CENTER,
            dim_resolution: DEFAULT_DIM_RESOLUTION,
            transversality_trials: 100,
            lemma_spot_checks: 32,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct DimSummary {
    pub value: f64,
    pub stderr: f64,
    pub fit_range: [f64; 2],
    pub n_points: usize,
    pub n_pairs: usize,
}

impl From<&DimensionEstimate> for DimSummary {
    fn from(e: &DimensionEstimate) -> Self {
        Self {
            value: e.value,
            stderr: e.stderr,
            fit_range: [e.fit_range.0, e.fit_range.1],
            n_points: e.n_points,
            n_pairs: e.n_pairs,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct AcChecks {
    /// `σ_{π_*T} ≪ π_*σ_T`.
    pub trace_of_image_ll_image_of_trace: bool,
    /// `π_*σ_T ≪ σ_{π_*T}`.
    pub image_of_trace_ll_trace_of_image: bool,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct ProjectionSummary {
    pub seed: u64,
    pub resamples: usize,
    pub clusters: usize,
    pub degenerate_clusters: usize,
    pub ac_checks: AcChecks,
    pub pushed_rank_histogram: BTreeMap<usize, usize>,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct TrialSummary {
    pub trials: usize,
    pub failures: usize,
    pub failure_indices: Vec<usize>,
    pub atom_failures: usize,
    pub seed: u64,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct SpotSummary {
    pub checked: usize,
    pub rank_ell: usize,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct RestrictionSummary {
    /// Atoms with rank ≥ ℓ.
    pub atoms: usize,
    pub mass: f64,
    pub transversality: Option<TrialSummary>,
    pub lemma_ii: Option<SpotSummary>,
    /// Atoms of the restriction whose pushed vector has rank ℓ.
    pub pushed_rank_ell: usize,
    /// Restriction nonempty with generic pushed ranks ℓ while `2ℓ` exceeds the
    /// dimension bound: both sides of the contradiction are present.
    pub contradiction_branches_coexist: bool,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct VerifyReport {
    pub k: usize,
    pub p: usize,
    pub dim_estimate: DimSummary,
    pub dim_resolution: f64,
    pub dim_upper: f64,
    pub ell: usize,
    pub ell_unstable: bool,
    pub per_atom_ranks: BTreeMap<usize, usize>,
    pub eq1_satisfied: bool,
    pub projection: Option<ProjectionSummary>,
    pub degenerate_clusters: usize,
    pub restriction: RestrictionSummary,
    pub domination: &'static str,
    pub seed: u64,
    pub tolerances: BTreeMap<&'static str, f64>,
}

impl VerifyReport {
    pub fn violations(&self) -> Vec<String> {
        let mut out = Vec::new();
        if !self.eq1_satisfied {
            let bound = (self.dim_upper / 2.0).floor() as usize;
            out.push(format!(
                "eq1: atom ranks {:?} are not all within [p, floor(dim_upper/2)] = [{}, {bound}]",
                self.per_atom_ranks.keys().collect::<Vec<_>>(),
                self.p
            ));
        }
        if let Some(proj) = &self.projection {
            if !proj.ac_checks.trace_of_image_ll_image_of_trace {
                out.push(
                    "trace measure of the pushforward is not absolutely continuous w.r.t. the image measure".into(),
                );
            }
            if !proj.ac_checks.image_of_trace_ll_trace_of_image {
                out.push(
                    "image measure is not absolutely continuous w.r.t. the trace measure of the pushforward".into(),
                );
            }
        }
        out
    }
}

/// Seed of the `tag`-th derived stream.
pub fn derive_seed(seed: u64, tag: u64) -> u64 {
    rng::stream(seed, tag).next_u64()
}

fn histogram(values: impl Iterator<Item = usize>) -> BTreeMap<usize, usize> {
    let mut h = BTreeMap::new();
    for v in values {
        *h.entry(v).or_insert(0) += 1;
    }
    h
}

/// Random projection `P^k ⇢ P^ℓ` resampled while atoms hit the center.
pub fn project_with_resamples(
    t: &DiscreteCurrent,
    ell: usize,
    seed: u64,
    delta: f64,
    tol_center: f64,
) -> AppResult<(Projection, Pushforward, u64, usize)> {
    for attempt in 0..=MAX_PROJECTION_RESAMPLES {
        let s = derive_seed(seed, 1 + attempt as u64);
        let pi = random_projection(t.k(), ell, s)?.with_tol_center(tol_center);
        match pushforward_current(t, &pi, delta) {
            Ok(push) => return Ok((pi, push, s, attempt)),
            Err(Error::CenterIncidence { .. }) => continue,
            Err(e) => return Err(e.into()),
        }
    }
    Err(Error::RetriesExhausted {
        attempts: MAX_PROJECTION_RESAMPLES + 1,
        reason: "every sampled projection had atoms on its center".into(),
    }
    .into())
}

pub fn verify_theorem(t: &DiscreteCurrent, seed: u64, opts: &VerifyOptions) -> AppResult<VerifyReport> {
    t.check_positive_mass()?;
    let (k, p) = (t.k(), t.p());
    let est = correlation_dimension(&t.trace_measure(), opts.q_lo, opts.q_hi, seed)?;
    let dim_upper = est.value + opts.dim_resolution;
    let half = (dim_upper / 2.0).floor() as usize;
    let ell = half + 1;
    let ell_unstable = (est.value - est.value.round()).abs() < 2.0 * est.stderr;

    let ranks: Vec<usize> = t.atoms().iter().map(|a| rank_via_span(&a.t)).collect();
    let eq1_satisfied = ranks.iter().all(|&r| r >= p && r <= half);

    let projection = if p <= ell && ell < k {
        let (_, push, s, resamples) = project_with_resamples(t, ell, seed, opts.delta, opts.tol_center)?;
        Some((push, s, resamples))
    } else {
        None
    };

    let s_current = restrict(t, |i, _| ranks[i] >= ell);
    let s_indices: Vec<usize> = (0..t.len()).filter(|&i| ranks[i] >= ell).collect();
    let transversality = if !s_current.is_empty() && p <= ell && ell < k {
        let r = transversality_montecarlo(
            &s_current,
            ell,
            opts.transversality_trials,
            derive_seed(seed, 100),
            None,
        )?;
        Some(TrialSummary {
            trials: r.trials,
            failures: r.failures,
            failure_indices: r.failure_indices,
            atom_failures: r.unit_failures,
            seed: r.seed,
        })
    } else {
        None
    };
    let lemma_ii = if !s_current.is_empty() && p < ell && ell < k + 1 {
        let l = coordinate_target(k + 1, ell);
        let mut rank_ell = 0;
        let checked = s_current.len().min(opts.lemma_spot_checks);
        for (j, a) in s_current.atoms().iter().take(checked).enumerate() {
            let kernel = haar_kernel(k + 1, ell, &l, derive_seed(seed, 200 + j as u64))?;
            rank_ell += usize::from(lemma_ii_trial(&a.t, &kernel, &l)?.rank == ell);
        }
        Some(SpotSummary { checked, rank_ell })
    } else {
        None
    };
    let pushed_rank_ell = projection
        .as_ref()
        .map(|(push, _, _)| {
            s_indices
                .iter()
                .filter(|&&i| rank_via_span(&push.pushed[i]) == ell)
                .count()
        })
        .unwrap_or(0);

    let (projection, degenerate_clusters) = match projection {
        Some((push, s, resamples)) => {
            let trace_of_image = push.current.trace_measure();
            let image_of_trace = push.image_measure();
            let degenerate = push.degenerate_clusters().count();
            let summary = ProjectionSummary {
                seed: s,
                resamples,
                clusters: push.clusters.len(),
                degenerate_clusters: degenerate,
                ac_checks: AcChecks {
                    trace_of_image_ll_image_of_trace: check_ac(&trace_of_image, &image_of_trace, AC_TOL).holds,
                    image_of_trace_ll_trace_of_image: check_ac(&image_of_trace, &trace_of_image, AC_TOL).holds,
                },
                pushed_rank_histogram: histogram(push.pushed.iter().map(rank_via_span)),
            };
            (Some(summary), degenerate)
        }
        None => (None, 0),
    };

    let mut tolerances = BTreeMap::new();
    tolerances.insert("rank", plurirank_core::linalg::RANK_TOL);
    tolerances.insert("cluster_delta", opts.delta);
    tolerances.insert("tol_center", opts.tol_center);
    tolerances.insert("ac", AC_TOL);
    tolerances.insert("q_lo", opts.q_lo);
    tolerances.insert("q_hi", opts.q_hi);

    Ok(VerifyReport {
        k,
        p,
        dim_estimate: DimSummary::from(&est),
        dim_resolution: opts.dim_resolution,
        dim_upper,
        ell,
        ell_unstable,
        per_atom_ranks: histogram(ranks.iter().copied()),
        eq1_satisfied,
        projection,
        degenerate_clusters,
        restriction: RestrictionSummary {
            atoms: s_current.len(),
            mass: s_current.mass(),
            transversality,
            lemma_ii,
            pushed_rank_ell,
            contradiction_branches_coexist: !s_current.is_empty() && pushed_rank_ell > 0,
        },
        domination: "assumed: domination of the restricted pushforward by the pushforward is not checked",
        seed,
        tolerances,
    })
}
