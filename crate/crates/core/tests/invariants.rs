use num_complex::Complex64 as C64;
use plurirank_core::currents::{
    check_ac, check_pairing_adjunction, generate_fibered_family, generate_plane_current, pushforward_current, restrict,
    DEFAULT_DELTA,
};
use plurirank_core::exterior::{compound_matrix, contract_beta, pair, plucker_from_frame};
use plurirank_core::genericity::{coordinate_target, haar_kernel, lemma_ii_trial, random_rank_spvector};
use plurirank_core::linalg::{gaussian_matrix, svd, CMatrix};
use plurirank_core::positivity::{average, random_spvector, rank_via_contraction, rank_via_span, SPVector};
use plurirank_core::projective::{fs_distance, random_projection, ProjPoint};
use plurirank_core::rng;
use proptest::prelude::*;

fn shape() -> impl Strategy<Value = (usize, usize, usize, u64)> {
    (2usize..=6).prop_flat_map(|dim| (Just(dim), 1..=dim.min(3), 1usize..=5, any::<u64>()))
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn span_and_contraction_ranks_agree((dim, p, n, seed) in shape()) {
        let t = random_spvector(dim, p, n, &mut rng::seeded(seed)).unwrap();
        prop_assert_eq!(rank_via_span(&t), rank_via_contraction(&t).unwrap());
    }

    #[test]
    fn rank_is_bounded((dim, p, n, seed) in shape()) {
        let t = random_spvector(dim, p, n, &mut rng::seeded(seed)).unwrap();
        let r = rank_via_span(&t);
        prop_assert!(r >= p && r <= dim.min(n * p));
        prop_assert!(t.is_psd());
    }

    #[test]
    fn plucker_coordinates_alternate((dim, p, _n, seed) in shape(), swap in 0usize..3) {
        prop_assume!(p >= 2);
        let g = gaussian_matrix(dim, p, &mut rng::seeded(seed));
        let mut frame = g.columns();
        let w = plucker_from_frame(dim, &frame).unwrap();
        let i = swap % (p - 1);
        frame.swap(i, i + 1);
        let swapped = plucker_from_frame(dim, &frame).unwrap();
        for (a, b) in w.coeffs().iter().zip(swapped.coeffs()) {
            prop_assert!((a + b).norm() < 1e-12);
        }
    }

    #[test]
    fn plucker_of_image_is_compound_times_plucker((dim, p, _n, seed) in shape()) {
        let mut r = rng::seeded(seed);
        let frame = gaussian_matrix(dim, p, &mut r).columns();
        let a = gaussian_matrix(dim, dim, &mut r);
        let mapped: Vec<Vec<C64>> = frame.iter().map(|v| a.mul_vec(v)).collect();
        let lhs = plucker_from_frame(dim, &mapped).unwrap();
        let rhs = compound_matrix(&a, p).unwrap().mul_vec(plucker_from_frame(dim, &frame).unwrap().coeffs());
        let scale = rhs.iter().map(|z| z.norm()).fold(1.0, f64::max);
        for (x, y) in lhs.coeffs().iter().zip(&rhs) {
            prop_assert!((x - y).norm() < 1e-10 * scale);
        }
    }

    #[test]
    fn averaging_never_lowers_rank((dim, p, n, seed) in shape()) {
        let mut r = rng::seeded(seed);
        let family: Vec<SPVector> = (0..3)
            .map(|_| plurirank_core::positivity::normalize_trace(&random_spvector(dim, p, n, &mut r).unwrap()).unwrap())
            .collect();
        let avg = average(&family, &[0.5, 0.25, 0.25]).unwrap();
        let max_rank = family.iter().map(rank_via_span).max().unwrap();
        prop_assert!(rank_via_span(&avg) >= max_rank);
        prop_assert!((avg.trace() - 1.0).abs() < 1e-10);
    }

    #[test]
    fn fs_distance_is_phase_invariant_and_bounded(seed in any::<u64>(), theta in 0.0f64..core::f64::consts::TAU) {
        let mut r = rng::seeded(seed);
        let x = plurirank_core::linalg::random_unit_vector(4, &mut r);
        let y = plurirank_core::linalg::random_unit_vector(4, &mut r);
        let phase = C64::from_polar(1.0, theta);
        let px = ProjPoint::new(x.clone()).unwrap();
        let py = ProjPoint::new(y).unwrap();
        let rotated = ProjPoint::new(x.iter().map(|z| z * phase).collect()).unwrap();
        let d = fs_distance(&px, &py);
        prop_assert!((0.0..=1.0).contains(&d));
        prop_assert!((fs_distance(&rotated, &py) - d).abs() < 1e-12);
        prop_assert!(fs_distance(&rotated, &px) < 1e-7);
    }

    #[test]
    fn pushed_rank_never_exceeds_l(seed in any::<u64>()) {
        let mut r = rng::seeded(seed);
        let t = random_rank_spvector(5, 1, 4, &mut r).unwrap();
        let l = coordinate_target(5, 3);
        let k = haar_kernel(5, 3, &l, seed).unwrap();
        let trial = lemma_ii_trial(&t, &k, &l).unwrap();
        prop_assert!(trial.rank <= 3);
        prop_assert_eq!(trial.independent.len(), 3);
    }
}

#[test]
fn contraction_range_is_constituent_span() {
    let mut r = rng::seeded(21);
    for _ in 0..100 {
        let t = random_spvector(5, 2, 2, &mut r).unwrap();
        let m = contract_beta(t.cached()).unwrap();
        let range = svd(&m).range_basis(1e-9);
        let span = t.span_basis();
        let d = plurirank_core::linalg::subspace_distance(5, &range, &span);
        assert!(d <= 1e-7, "distance {d}");
    }
}

#[test]
fn pairing_with_compound_pullback_matches_pushforward() {
    let mut r = rng::seeded(4);
    let t = random_spvector(4, 2, 3, &mut r).unwrap();
    let a = gaussian_matrix(3, 4, &mut r);
    let comp = compound_matrix(&a, 2).unwrap();
    let pushed = t.map_linear(&a).unwrap();
    let phi = plurirank_core::currents::random_psd_form(3, 2, &mut r);
    let lhs = pair(pushed.cached(), &phi).unwrap();
    let rhs = pair(t.cached(), &phi.pullback(&comp, 4).unwrap()).unwrap();
    assert!((lhs - rhs).abs() <= 1e-10 * lhs.abs().max(1.0));
}

#[test]
fn pushforward_preserves_image_mass_and_ac() {
    for seed in 0..5 {
        let (t, pi) = generate_fibered_family(5, 2, 3, 20, 3, seed, false).unwrap();
        let push = pushforward_current(&t, &pi, DEFAULT_DELTA).unwrap();
        let image_mass: f64 = push.image_measure().iter().map(|w| w.weight).sum();
        assert!((image_mass - t.mass()).abs() < 1e-12);
        assert!(check_ac(&push.current.trace_measure(), &push.image_measure(), 1e-9).holds);
        assert!(check_ac(&push.image_measure(), &push.current.trace_measure(), 1e-9).holds);
        for c in &push.clusters {
            let out = &push.current.atoms()[c.output_atom.unwrap()];
            assert!((out.weight * c.density.unwrap() - c.total_weight).abs() < 1e-12);
        }
    }
}

#[test]
fn adjunction_on_plane_current_under_random_projection() {
    let t = generate_plane_current(4, 2, 200, 3).unwrap();
    let pi = random_projection(4, 3, 8).unwrap();
    let report = check_pairing_adjunction(&t, &pi, DEFAULT_DELTA, 10, 1).unwrap();
    assert!(report.max_relative_error <= 1e-10, "{report:?}");
}

#[test]
fn restriction_by_rank_and_identity_map() {
    let t = generate_plane_current(3, 1, 50, 1).unwrap();
    assert_eq!(restrict(&t, |_, a| rank_via_span(&a.t) >= 1).len(), 50);
    let id = CMatrix::identity(4);
    for a in t.atoms() {
        let same = a.t.map_linear(&id).unwrap();
        assert!(same.cached().matrix().sub(a.t.cached().matrix()).max_abs() < 1e-15);
    }
}
