//! Observational experiment: dimension of the projected trace cloud under
//! random projections `P^k ⇢ P^ℓ`, compared with the real dimension `2ℓ`.

use plurirank_core::currents::{DiscreteCurrent, WeightedPoint};
use plurirank_core::dimension::correlation_dimension;
use plurirank_core::linalg::haar_unitary;
use plurirank_core::projective::{project_point, random_projection, Projection};
use plurirank_core::{rng, Error};
use serde::Serialize;

use crate::error::{AppError, AppResult};
use crate::verify::{derive_seed, VerifyOptions};

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct SingularityTrial {
    pub seed: u64,
    pub dim: f64,
    pub stderr: f64,
    pub center_hits: usize,
    pub singular: bool,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct SingularityReport {
    pub k: usize,
    pub ell: usize,
    pub full_dimension: usize,
    /// A trial counts as singular when its estimate is below `2ℓ - threshold_margin`.
    pub threshold_margin: f64,
    pub trials: Vec<SingularityTrial>,
    pub fraction_singular: Option<f64>,
}

fn projection_for(k: usize, ell: usize, seed: u64) -> AppResult<Projection> {
    if ell == k {
        Ok(Projection::from_unitary(
            k,
            ell,
            &haar_unitary(k + 1, &mut rng::seeded(seed)),
        )?)
    } else {
        Ok(random_projection(k, ell, seed)?)
    }
}

pub fn singularity_experiment(
    t: &DiscreteCurrent,
    ell: usize,
    trials: usize,
    seed: u64,
    opts: &VerifyOptions,
) -> AppResult<SingularityReport> {
    t.check_positive_mass()?;
    let k = t.k();
    if ell < 1 || ell > k {
        return Err(AppError::Input(format!(
            "--ell must satisfy 1 ≤ ℓ ≤ k = {k}, got {ell}"
        )));
    }
    let cloud = t.trace_measure();
    let mut out = Vec::with_capacity(trials);
    for i in 0..trials {
        let s = derive_seed(seed, i as u64);
        let pi = projection_for(k, ell, s)?.with_tol_center(opts.tol_center);
        let mut projected = Vec::with_capacity(cloud.len());
        let mut center_hits = 0;
        for wp in &cloud {
            match project_point(&pi, &wp.point) {
                Ok(point) => projected.push(WeightedPoint {
                    point,
                    weight: wp.weight,
                }),
                Err(Error::CenterIncidence { .. }) => center_hits += 1,
                Err(e) => return Err(e.into()),
            }
        }
        let est = correlation_dimension(&projected, opts.q_lo, opts.q_hi, s)?;
        out.push(SingularityTrial {
            seed: s,
            dim: est.value,
            stderr: est.stderr,
            center_hits,
            singular: est.value < 2.0 * ell as f64 - opts.dim_resolution,
        });
    }
    let fraction_singular =
        (!out.is_empty()).then(|| out.iter().filter(|t| t.singular).count() as f64 / out.len() as f64);
    Ok(SingularityReport {
        k,
        ell,
        full_dimension: 2 * ell,
        threshold_margin: opts.dim_resolution,
        trials: out,
        fraction_singular,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use plurirank_core::currents::generate_plane_current;
    use plurirank_core::currents::{Atom, DiscreteCurrent};
    use plurirank_core::dimension::haar_points_on;
    use plurirank_core::linalg::unit_vector;
    use plurirank_core::positivity::SPVector;

    #[test]
    fn projected_line_stays_singular() {
        let t = generate_plane_current(3, 1, 1500, 2).unwrap();
        let r = singularity_experiment(&t, 2, 5, 9, &VerifyOptions::default()).unwrap();
        assert_eq!(r.fraction_singular, Some(1.0));
        assert!(r.trials.iter().all(|t| (t.dim - 2.0).abs() < 0.3));
    }

    #[test]
    fn haar_cloud_on_p2_fills_the_target() {
        let basis: Vec<_> = (0..3).map(|i| unit_vector(3, i)).collect();
        let points = haar_points_on(&basis, 2000, &mut rng::seeded(3)).unwrap();
        let atoms = points
            .into_iter()
            .map(|wp| {
                let v = plurirank_core::linalg::reject(&unit_vector(3, 0), wp.point.coords());
                let v = plurirank_core::linalg::normalized(&v).unwrap_or_else(|| {
                    plurirank_core::linalg::normalized(&plurirank_core::linalg::reject(
                        &unit_vector(3, 1),
                        wp.point.coords(),
                    ))
                    .unwrap()
                });
                Atom::new(wp.point, 1.0, SPVector::decomposable(3, vec![v]).unwrap()).unwrap()
            })
            .collect();
        let t = DiscreteCurrent::new(2, 1, atoms).unwrap();
        let r = singularity_experiment(&t, 2, 3, 1, &VerifyOptions::default()).unwrap();
        assert_eq!(r.fraction_singular, Some(0.0));
    }

    #[test]
    fn zero_trials_give_an_empty_report() {
        let t = generate_plane_current(2, 1, 200, 1).unwrap();
        let r = singularity_experiment(&t, 1, 0, 1, &VerifyOptions::default()).unwrap();
        assert!(r.trials.is_empty());
        assert_eq!(r.fraction_singular, None);
    }
}
