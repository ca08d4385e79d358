use novelty_core::benchmark::{engineer_contamination, roc_auc, run_contamination_benchmark, ContaminationSpec};
use novelty_core::scorers::ScorerKind;
use novelty_core::synthgen::ColorClass;
use novelty_core::LatentMatrix;
use novelty_testkit as oracle;
use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;

#[test]
fn auc_matches_pair_counting() {
    for seed in 0..50u64 {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let n = 5 + (seed as usize * 7) % 60;
        // Coarse scores so ties are common.
        let scores: Vec<f64> = (0..n).map(|_| (rng.random::<f64>() * 8.0).floor()).collect();
        let mut labels: Vec<bool> = (0..n).map(|_| rng.random::<bool>()).collect();
        labels[0] = true;
        labels[1] = false;
        assert_eq!(roc_auc(&scores, &labels).unwrap(), oracle::auc_pairs(&scores, &labels), "seed {seed}");
    }
}

proptest! {
    #[test]
    fn auc_is_a_rank_statistic(
        scores in prop::collection::vec(-100.0f64..100.0, 4..40),
        flips in prop::collection::vec(any::<bool>(), 4..40),
    ) {
        let n = scores.len().min(flips.len());
        let (scores, mut labels) = (&scores[..n], flips[..n].to_vec());
        labels[0] = true;
        labels[1] = false;
        let auc = roc_auc(scores, &labels).unwrap();
        prop_assert!((0.0..=1.0).contains(&auc));
        // Strictly increasing transforms leave it unchanged.
        let squashed: Vec<f64> = scores.iter().map(|s| (s / 50.0).tanh()).collect();
        prop_assert_eq!(roc_auc(&squashed, &labels).unwrap(), auc);
        // Flipping labels mirrors it.
        let flipped: Vec<bool> = labels.iter().map(|l| !l).collect();
        prop_assert!((roc_auc(scores, &flipped).unwrap() - (1.0 - auc)).abs() < 1e-12);
    }

    #[test]
    fn contamination_count_is_ceiling(fraction in 0.01f64..0.9, size in 10usize..120, seed in 0u64..1000) {
        let train = [vec![ColorClass::Red; 20], vec![ColorClass::Green; 20]].concat();
        let test = [vec![ColorClass::Yellow; 150], vec![ColorClass::Green; 150]].concat();
        let split = engineer_contamination(&train, &test, ColorClass::Green, fraction, Some(size), seed).unwrap();
        prop_assert_eq!(split.test.len(), size);
        let k = split.n_contaminated();
        prop_assert!(k as f64 >= fraction * size as f64 - 1e-9);
        prop_assert!((k as f64) < fraction * size as f64 + 1.0);
        for (&i, &l) in split.test.iter().zip(&split.labels) {
            prop_assert_eq!(l, test[i] == ColorClass::Green);
        }
    }
}

fn cluster(rng: &mut ChaCha8Rng, n: usize, centre: [f64; 3]) -> Vec<Vec<f64>> {
    (0..n)
        .map(|_| centre.iter().map(|c| c + rng.sample::<f64, _>(StandardNormal) * 0.3).collect())
        .collect()
}

#[test]
fn separated_class_scores_near_perfect_auc() {
    let mut rng = ChaCha8Rng::seed_from_u64(11);
    let centres = [[0.0, 0.0, 0.0], [1.0, 0.0, 0.0], [0.0, 6.0, 6.0]];
    let mut train = Vec::new();
    let mut test = Vec::new();
    let (mut train_labels, mut test_labels) = (Vec::new(), Vec::new());
    for (class, c) in ColorClass::ALL.into_iter().zip(centres) {
        train.extend(cluster(&mut rng, 60, c));
        train_labels.extend(vec![class; 60]);
        test.extend(cluster(&mut rng, 60, c));
        test_labels.extend(vec![class; 60]);
    }
    let spec = ContaminationSpec {
        contamination_class: ColorClass::Green,
        fractions: vec![0.1, 0.3],
        repeats: 3,
        seed: 5,
        ..Default::default()
    };
    let train = LatentMatrix::from_rows(&train).unwrap();
    let test = LatentMatrix::from_rows(&test).unwrap();
    let table = run_contamination_benchmark(&train, &train_labels, &test, &test_labels, &spec).unwrap();
    assert_eq!(table.rows.len(), 2 * ScorerKind::ALL.len());
    for row in &table.rows {
        assert_eq!(row.aucs.len(), 3);
        assert!((row.std_auc - oracle::sample_std(&row.aucs)).abs() < 1e-12);
        assert!(row.mean_auc > 0.95, "{:?} at {}: {}", row.scorer, row.fraction, row.mean_auc);
    }
    let again = run_contamination_benchmark(&train, &train_labels, &test, &test_labels, &spec).unwrap();
    assert_eq!(table, again);
}
