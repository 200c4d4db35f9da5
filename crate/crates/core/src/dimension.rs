//! Correlation dimension of weighted point clouds in `P^k`.
//!
//! `C(r)` is the weighted fraction of pairs at Fubini–Study distance below
//! `r`, pairs weighted by `w_i w_j`. The estimate is the least-squares slope
//! of `log C` against `log r` on log-spaced radii between two quantiles of
//! the pair distances.

use alloc::format;
use alloc::vec::Vec;

use rand::Rng;

use crate::currents::WeightedPoint;
use crate::error::{domain, Error, Result};
use crate::linalg::{axpy, random_unit_vector, C64};
use crate::projective::{fs_distance_raw, ProjPoint, Projection};
use crate::rng;

pub const MIN_POINTS: usize = 100;
pub const MAX_PAIRS: usize = 2_000_000;
pub const DEFAULT_Q_LO: f64 = 0.05;
pub const DEFAULT_Q_HI: f64 = 0.25;
pub const N_RADII: usize = 16;

#[derive(Clone, Debug, PartialEq)]
pub struct DimensionEstimate {
    pub value: f64,
    pub stderr: f64,
    pub fit_range: (f64, f64),
    /// Distinct points after merging exact duplicates.
    pub n_points: usize,
    pub n_pairs: usize,
    /// `(r, C(r))` at the fitted radii.
    pub curve: Vec<(f64, f64)>,
}

/// Merges bitwise-identical points, summing weights, in order of first occurrence.
fn merge_duplicates(points: &[WeightedPoint]) -> Vec<(&[C64], f64)> {
    let key = |p: &WeightedPoint| -> Vec<u64> {
        p.point
            .coords()
            .iter()
            .flat_map(|c| [c.re.to_bits(), c.im.to_bits()])
            .collect()
    };
    let mut order: Vec<usize> = (0..points.len()).collect();
    order.sort_by(|&a, &b| key(&points[a]).cmp(&key(&points[b])).then(a.cmp(&b)));
    let mut first_of = alloc::vec![usize::MAX; points.len()];
    let mut weight = alloc::vec![0.0; points.len()];
    let mut run_start = 0;
    for (pos, &i) in order.iter().enumerate() {
        if pos > 0 && key(&points[order[pos - 1]]) != key(&points[i]) {
            run_start = pos;
        }
        let head = order[run_start];
        first_of[i] = head;
        weight[head] += points[i].weight;
    }
    (0..points.len())
        .filter(|&i| first_of[i] == i)
        .map(|i| (points[i].point.coords(), weight[i]))
        .collect()
}

fn quantile(sorted: &[f64], q: f64) -> f64 {
    let pos = q * (sorted.len() - 1) as f64;
    let lo = pos.floor() as usize;
    let hi = (lo + 1).min(sorted.len() - 1);
    let frac = pos - lo as f64;
    sorted[lo] * (1.0 - frac) + sorted[hi] * frac
}

/// Ordinary least squares `y = a + b x`; returns `(b, stderr(b))`.
fn fit_slope(xs: &[f64], ys: &[f64]) -> (f64, f64) {
    let n = xs.len() as f64;
    let mx = xs.iter().sum::<f64>() / n;
    let my = ys.iter().sum::<f64>() / n;
    let sxx: f64 = xs.iter().map(|x| (x - mx) * (x - mx)).sum();
    let sxy: f64 = xs.iter().zip(ys).map(|(x, y)| (x - mx) * (y - my)).sum();
    let slope = sxy / sxx;
    let sse: f64 = xs
        .iter()
        .zip(ys)
        .map(|(x, y)| (y - my - slope * (x - mx)).powi(2))
        .sum();
    let stderr = if xs.len() > 2 {
        (sse / (n - 2.0) / sxx).sqrt()
    } else {
        0.0
    };
    (slope, stderr)
}

/// Correlation dimension of a weighted cloud. All pairs are used when there
/// are at most [`MAX_PAIRS`] of them; otherwise `MAX_PAIRS` pairs are drawn
/// uniformly (with replacement) from a stream seeded by `seed`.
pub fn correlation_dimension(points: &[WeightedPoint], q_lo: f64, q_hi: f64, seed: u64) -> Result<DimensionEstimate> {
    if points.len() < MIN_POINTS {
        return Err(domain(format!(
            "dimension estimation needs at least {MIN_POINTS} points, got {}",
            points.len()
        )));
    }
    if !(0.0 < q_lo && q_lo < q_hi && q_hi < 1.0) {
        return Err(domain(format!(
            "fit quantiles must satisfy 0 < q_lo < q_hi < 1 (got {q_lo}, {q_hi})"
        )));
    }
    if points.iter().any(|p| !p.weight.is_finite() || p.weight < 0.0) {
        return Err(domain("point weights must be finite and nonnegative"));
    }
    let k = points[0].point.k();
    if points.iter().any(|p| p.point.k() != k) {
        return Err(domain("points live in projective spaces of different dimension"));
    }
    let merged: Vec<_> = merge_duplicates(points).into_iter().filter(|(_, w)| *w > 0.0).collect();
    let n = merged.len();
    if n < 2 {
        return Err(degenerate());
    }

    let all_pairs = n * (n - 1) / 2;
    let mut pairs: Vec<(f64, f64)> = Vec::with_capacity(all_pairs.min(MAX_PAIRS));
    if all_pairs <= MAX_PAIRS {
        for i in 0..n {
            for j in (i + 1)..n {
                pairs.push((fs_distance_raw(merged[i].0, merged[j].0), merged[i].1 * merged[j].1));
            }
        }
    } else {
        let mut rng = rng::seeded(seed);
        while pairs.len() < MAX_PAIRS {
            let i = rng.random_range(0..n);
            let j = rng.random_range(0..n);
            if i != j {
                pairs.push((fs_distance_raw(merged[i].0, merged[j].0), merged[i].1 * merged[j].1));
            }
        }
    }
    pairs.sort_by(|a, b| a.0.total_cmp(&b.0));
    let distances: Vec<f64> = pairs.iter().map(|p| p.0).collect();
    let (r_lo, r_hi) = (quantile(&distances, q_lo), quantile(&distances, q_hi));
    if !(r_lo > 0.0 && r_lo < r_hi) {
        return Err(degenerate());
    }

    let mut cumulative = Vec::with_capacity(pairs.len());
    let mut acc = 0.0;
    for p in &pairs {
        acc += p.1;
        cumulative.push(acc);
    }
    let total = acc;
    let (log_lo, log_hi) = (r_lo.ln(), r_hi.ln());
    let mut curve = Vec::with_capacity(N_RADII);
    let (mut xs, mut ys) = (Vec::new(), Vec::new());
    for s in 0..N_RADII {
        let r = (log_lo + (log_hi - log_lo) * s as f64 / (N_RADII - 1) as f64).exp();
        let below = distances.partition_point(|&d| d < r);
        let c = if below == 0 { 0.0 } else { cumulative[below - 1] / total };
        curve.push((r, c));
        if c > 0.0 {
            xs.push(r.ln());
            ys.push(c.ln());
        }
    }
    if xs.len() < 2 {
        return Err(degenerate());
    }
    let (slope, stderr) = fit_slope(&xs, &ys);
    Ok(DimensionEstimate {
        value: slope.clamp(0.0, 2.0 * k as f64),
        stderr,
        fit_range: (r_lo, r_hi),
        n_points: n,
        n_pairs: pairs.len(),
        curve,
    })
}

fn degenerate() -> Error {
    domain("point cloud is degenerate (all points coincide at the fit scale)")
}

#[derive(Clone, Debug, PartialEq)]
pub struct LipschitzCheck {
    pub before: DimensionEstimate,
    pub after: DimensionEstimate,
}

impl LipschitzCheck {
    /// `dim_after ≤ dim_before + 2 max(stderr)`.
    pub fn holds(&self) -> bool {
        self.after.value <= self.before.value + 2.0 * self.before.stderr.max(self.after.stderr)
    }
}

/// Dimension of a cloud and of its image under `π` (target coordinates).
pub fn lipschitz_image_check(
    points: &[WeightedPoint],
    pi: &Projection,
    q_lo: f64,
    q_hi: f64,
    seed: u64,
) -> Result<LipschitzCheck> {
    let mut images = Vec::with_capacity(points.len());
    let mut incident = Vec::new();
    for (i, p) in points.iter().enumerate() {
        match pi.local(&p.point) {
            Ok(l) => images.push(WeightedPoint {
                point: l.image_in_target,
                weight: p.weight,
            }),
            Err(Error::CenterIncidence { .. }) => incident.push(i),
            Err(e) => return Err(e),
        }
    }
    if !incident.is_empty() {
        return Err(Error::CenterIncidence { indices: incident });
    }
    Ok(LipschitzCheck {
        before: correlation_dimension(points, q_lo, q_hi, seed)?,
        after: correlation_dimension(&images, q_lo, q_hi, seed)?,
    })
}

/// Haar-uniform points of `P(Ŵ)` for `Ŵ` spanned by the orthonormal `basis`, weight `1/n`.
pub fn haar_points_on<R: Rng + ?Sized>(basis: &[Vec<C64>], n: usize, rng: &mut R) -> Result<Vec<WeightedPoint>> {
    let dim = basis[0].len();
    (0..n)
        .map(|_| {
            let g = random_unit_vector(basis.len(), rng);
            let mut z = alloc::vec![C64::new(0.0, 0.0); dim];
            for (c, b) in g.iter().zip(basis) {
                axpy(*c, b, &mut z);
            }
            Ok(WeightedPoint {
                point: ProjPoint::new(z)?,
                weight: 1.0 / n as f64,
            })
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg::{haar_unitary, unit_vector};
    use crate::projective::random_projection;
    use alloc::vec;

    fn projective_space(k: usize, n: usize, seed: u64) -> Vec<WeightedPoint> {
        let basis: Vec<_> = (0..=k).map(|i| unit_vector(k + 1, i)).collect();
        haar_points_on(&basis, n, &mut rng::seeded(seed)).unwrap()
    }

    fn line_in(k: usize, n: usize, seed: u64) -> Vec<WeightedPoint> {
        let mut r = rng::seeded(seed);
        let basis = haar_unitary(k + 1, &mut r).leading_columns(2).columns();
        haar_points_on(&basis, n, &mut r).unwrap()
    }

    #[test]
    fn slope_of_exact_power_law() {
        let xs: Vec<f64> = (0..10).map(|i| i as f64 * 0.1).collect();
        let ys: Vec<f64> = xs.iter().map(|x| 3.0 * x - 1.0).collect();
        let (b, se) = fit_slope(&xs, &ys);
        assert!((b - 3.0).abs() < 1e-12 && se < 1e-12);
    }

    #[test]
    fn quantile_interpolates() {
        let v = [0.0, 1.0, 2.0, 3.0, 4.0];
        assert_eq!(quantile(&v, 0.5), 2.0);
        assert!((quantile(&v, 0.1) - 0.4).abs() < 1e-15);
    }

    #[test]
    fn line_and_plane_in_p2() {
        let line = correlation_dimension(&line_in(2, 3000, 1), DEFAULT_Q_LO, DEFAULT_Q_HI, 1).unwrap();
        assert!((line.value - 2.0).abs() < 0.2, "{line:?}");
        let plane = correlation_dimension(&projective_space(2, 3000, 2), DEFAULT_Q_LO, DEFAULT_Q_HI, 1).unwrap();
        assert!((plane.value - 4.0).abs() < 0.3, "{plane:?}");
        assert!(plane.fit_range.0 < plane.fit_range.1);
    }

    #[test]
    fn errors() {
        let same: Vec<WeightedPoint> = (0..200)
            .map(|_| WeightedPoint {
                point: ProjPoint::new(unit_vector(3, 0)).unwrap(),
                weight: 1.0,
            })
            .collect();
        assert!(correlation_dimension(&same, 0.05, 0.25, 0).is_err());
        let few = line_in(2, 50, 3);
        assert!(correlation_dimension(&few, 0.05, 0.25, 0).is_err());
        let ok = line_in(2, 200, 3);
        assert!(correlation_dimension(&ok, 0.3, 0.2, 0).is_err());
        assert!(correlation_dimension(&ok, 0.0, 0.2, 0).is_err());
    }

    #[test]
    fn duplication_is_invisible() {
        let cloud = line_in(3, 400, 5);
        let mut doubled = cloud.clone();
        doubled.extend(cloud.iter().cloned());
        let a = correlation_dimension(&cloud, DEFAULT_Q_LO, DEFAULT_Q_HI, 9).unwrap();
        let b = correlation_dimension(&doubled, DEFAULT_Q_LO, DEFAULT_Q_HI, 9).unwrap();
        assert!((a.value - b.value).abs() < 1e-9);
    }

    #[test]
    fn subsampled_estimate_is_deterministic() {
        let cloud = projective_space(2, 2500, 4);
        let a = correlation_dimension(&cloud, DEFAULT_Q_LO, DEFAULT_Q_HI, 3).unwrap();
        let b = correlation_dimension(&cloud, DEFAULT_Q_LO, DEFAULT_Q_HI, 3).unwrap();
        assert_eq!(a, b);
        assert_eq!(a.n_pairs, MAX_PAIRS);
    }

    #[test]
    fn line_projects_to_line() {
        let cloud = line_in(3, 1500, 6);
        let pi = random_projection(3, 2, 7).unwrap();
        let check = lipschitz_image_check(&cloud, &pi, DEFAULT_Q_LO, DEFAULT_Q_HI, 1).unwrap();
        assert!(check.holds(), "{check:?}");
        assert!((check.before.value - 2.0).abs() < 0.25);
        assert!((check.after.value - 2.0).abs() < 0.25);
    }

    #[test]
    fn plane_projects_into_p2() {
        let mut r = rng::seeded(8);
        let basis = haar_unitary(5, &mut r).leading_columns(3).columns();
        let cloud = haar_points_on(&basis, 1500, &mut r).unwrap();
        let pi = random_projection(4, 2, 9).unwrap();
        let check = lipschitz_image_check(&cloud, &pi, DEFAULT_Q_LO, DEFAULT_Q_HI, 1).unwrap();
        assert!(check.holds(), "{check:?}");
        assert!(check.after.value <= 4.0 + 2.0 * check.after.stderr);
    }

    #[test]
    fn center_points_are_reported() {
        let pi = random_projection(2, 1, 1).unwrap();
        let mut cloud = line_in(2, 150, 2);
        cloud[3].point = ProjPoint::new(pi.center()[0].clone()).unwrap();
        match lipschitz_image_check(&cloud, &pi, 0.05, 0.25, 0) {
            Err(Error::CenterIncidence { indices }) => assert_eq!(indices, vec![3]),
            other => panic!("unexpected {other:?}"),
        }
    }
}
