use novelty_core::scorers::{
    self, fit, kde::KdeModel, HbosModel, ScorerHyper, ScorerKind, ScorerModel,
};
use novelty_core::LatentMatrix;
use novelty_testkit as oracle;
use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;

fn random_rows(rng: &mut impl Rng, n: usize, d: usize) -> Vec<Vec<f64>> {
    (0..n)
        .map(|_| (0..d).map(|j| rng.sample::<f64, _>(StandardNormal) * (1.0 + j as f64)).collect())
        .collect()
}

fn matrix(rows: &[Vec<f64>]) -> LatentMatrix {
    LatentMatrix::from_rows(rows).unwrap()
}

fn hyper_k(k: usize) -> ScorerHyper {
    ScorerHyper {
        k: Some(k),
        ..Default::default()
    }
}

fn rel_close(a: f64, b: f64, tol: f64) -> bool {
    (a - b).abs() <= tol * a.abs().max(b.abs()).max(1.0)
}

#[test]
fn lof_knn_mahalanobis_match_brute_force() {
    for seed in 0..20 {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let d = 1 + (seed as usize % 4);
        let train = random_rows(&mut rng, 100, d);
        let queries = random_rows(&mut rng, 10, d);
        let z = matrix(&train);
        let lof = fit(ScorerKind::Lof, &z, &hyper_k(7)).unwrap();
        let knn = fit(ScorerKind::Knn, &z, &hyper_k(4)).unwrap();
        let maha = fit(ScorerKind::Mahalanobis, &z, &ScorerHyper::default()).unwrap();
        for q in queries.iter().chain(&train[..5]) {
            let (std_train, std_q) = oracle::standardize(&train, q);
            let want = oracle::lof(&std_train, &std_q, 7);
            let got = lof.raw_score(q).unwrap();
            assert!(rel_close(got, want, 1e-8), "lof seed {seed}: {got} vs {want}");

            let want = oracle::knn_distance(&std_train, &std_q, 4);
            let got = knn.raw_score(q).unwrap();
            assert!(rel_close(got, want, 1e-8), "knn seed {seed}: {got} vs {want}");

            let want = oracle::mahalanobis(&std_train, &std_q);
            let got = maha.raw_score(q).unwrap();
            assert!(rel_close(got, want, 1e-8), "mahalanobis seed {seed}: {got} vs {want}");
        }
    }
}

#[test]
fn lof_on_a_uniform_grid() {
    let grid: Vec<Vec<f64>> = (0..10)
        .flat_map(|i| (0..10).map(move |j| vec![i as f64, j as f64]))
        .collect();
    let model = fit(ScorerKind::Lof, &matrix(&grid), &hyper_k(5)).unwrap();
    let inlier = model.raw_score(&[4.0, 5.0]).unwrap();
    let (st, sq) = oracle::standardize(&grid, &[4.0, 5.0]);
    assert!(rel_close(inlier, oracle::lof(&st, &sq, 5), 1e-8));
    assert!((0.9..=1.1).contains(&inlier), "inlier LOF {inlier}");

    let diameter = (2.0f64 * 81.0).sqrt();
    let far = model.raw_score(&[10.0 * diameter, 10.0 * diameter]).unwrap();
    assert!(far > 1.5, "outlier LOF {far}");
}

#[test]
fn knn_sort_oracle_on_200_points() {
    let mut rng = ChaCha8Rng::seed_from_u64(99);
    let train = random_rows(&mut rng, 200, 3);
    let model = fit(ScorerKind::Knn, &matrix(&train), &hyper_k(10)).unwrap();
    for q in random_rows(&mut rng, 20, 3) {
        let (st, sq) = oracle::standardize(&train, &q);
        assert!(rel_close(model.raw_score(&q).unwrap(), oracle::knn_distance(&st, &sq, 10), 1e-12));
    }
}

#[test]
fn kde_integrates_to_one() {
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    let pts = random_rows(&mut rng, 50, 2);
    let kde = KdeModel::new(matrix(&pts), None).unwrap();
    // Grid covering every point by more than 8 bandwidths.
    let pad = 8.0 * kde.bandwidth;
    let lo: Vec<f64> = (0..2).map(|j| pts.iter().map(|p| p[j]).fold(f64::INFINITY, f64::min) - pad).collect();
    let hi: Vec<f64> = (0..2).map(|j| pts.iter().map(|p| p[j]).fold(f64::NEG_INFINITY, f64::max) + pad).collect();
    let m = 400;
    let (dx, dy) = ((hi[0] - lo[0]) / m as f64, (hi[1] - lo[1]) / m as f64);
    let mut integral = 0.0;
    for i in 0..m {
        for j in 0..m {
            let z = [lo[0] + (i as f64 + 0.5) * dx, lo[1] + (j as f64 + 0.5) * dy];
            integral += kde.log_density(&z).exp() * dx * dy;
        }
    }
    assert!((integral - 1.0).abs() < 0.02, "integral {integral}");
}

#[test]
fn hbos_modal_bin_is_the_minimum() {
    let mut rng = ChaCha8Rng::seed_from_u64(8);
    // Uniform data with one heavier region per dim.
    let mut rows: Vec<Vec<f64>> = (0..400).map(|_| vec![rng.random::<f64>(), rng.random::<f64>()]).collect();
    rows.extend((0..100).map(|_| vec![0.55 + 0.04 * rng.random::<f64>(), 0.25 + 0.04 * rng.random::<f64>()]));
    let pts = matrix(&rows);
    let model = HbosModel::fit(&pts, 10).unwrap();
    let mut best = (f64::INFINITY, 0.0, 0.0);
    for i in 0..10 {
        for j in 0..10 {
            let (x, y) = ((i as f64 + 0.5) / 10.0, (j as f64 + 0.5) / 10.0);
            let s = model.score(&[x, y]);
            if s < best.0 {
                best = (s, x, y);
            }
        }
    }
    assert_eq!(model.score(&[0.57, 0.27]), best.0);
    assert_eq!(best.0, 0.0);
}

#[test]
fn iforest_ranks_extreme_outlier_above_median_point() {
    for trial in 0..100u64 {
        let mut rng = ChaCha8Rng::seed_from_u64(1000 + trial);
        let train = random_rows(&mut rng, 200, 3);
        let hyper = ScorerHyper {
            seed: trial,
            ..Default::default()
        };
        let model = fit(ScorerKind::Iforest, &matrix(&train), &hyper).unwrap();
        let median: Vec<f64> = (0..3)
            .map(|j| {
                let mut c: Vec<f64> = train.iter().map(|r| r[j]).collect();
                c.sort_by(f64::total_cmp);
                c[c.len() / 2]
            })
            .collect();
        let outlier = [25.0, -40.0, 60.0];
        assert!(model.raw_score(&outlier).unwrap() > model.raw_score(&median).unwrap(), "trial {trial}");
    }
}

fn rankings(model: &ScorerModel, queries: &LatentMatrix) -> Vec<usize> {
    let raw = scorers::novelty_scores(model, queries).unwrap().novelty;
    let mut idx: Vec<usize> = (0..raw.len()).collect();
    idx.sort_by(|&a, &b| raw[a].total_cmp(&raw[b]).then(a.cmp(&b)));
    idx
}

#[test]
fn rankings_absorb_per_dimension_scale() {
    let mut rng = ChaCha8Rng::seed_from_u64(17);
    let train = random_rows(&mut rng, 120, 3);
    let test = random_rows(&mut rng, 40, 3);
    let scale = |rows: &[Vec<f64>]| -> Vec<Vec<f64>> {
        rows.iter().map(|r| vec![r[0], r[1] * 37.5, r[2]]).collect()
    };
    for kind in [ScorerKind::Kde, ScorerKind::Knn, ScorerKind::Lof, ScorerKind::Mahalanobis] {
        let a = fit(kind, &matrix(&train), &hyper_k(6)).unwrap();
        let b = fit(kind, &matrix(&scale(&train)), &hyper_k(6)).unwrap();
        assert_eq!(
            rankings(&a, &matrix(&test)),
            rankings(&b, &matrix(&scale(&test))),
            "{kind}"
        );
    }
}

#[test]
fn scoring_is_repeatable() {
    let mut rng = ChaCha8Rng::seed_from_u64(23);
    let train = matrix(&random_rows(&mut rng, 80, 4));
    let test = matrix(&random_rows(&mut rng, 30, 4));
    for kind in ScorerKind::ALL {
        let hyper = ScorerHyper {
            seed: 4,
            ..hyper_k(5)
        };
        let a = scorers::novelty_scores(&fit(kind, &train, &hyper).unwrap(), &test).unwrap();
        let b = scorers::novelty_scores(&fit(kind, &train, &hyper).unwrap(), &test).unwrap();
        assert_eq!(a, b, "{kind}");
    }
}

proptest! {
    #[test]
    fn novelty_weights_are_unit_interval(raw in prop::collection::vec(-1e6f64..1e6, 1..50)) {
        for o in [scorers::Orientation::Density, scorers::Orientation::Anomaly] {
            let w = scorers::normalize(&raw, o);
            prop_assert!(w.iter().all(|v| (0.0..=1.0).contains(v)));
            let distinct = raw.iter().any(|&v| v != raw[0]);
            if distinct {
                prop_assert!(w.contains(&1.0) && w.contains(&0.0));
            } else {
                prop_assert!(w.iter().all(|&v| v == 0.5));
            }
        }
    }
}
