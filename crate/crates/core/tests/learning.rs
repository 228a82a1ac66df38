//! Properties of the resampling and fold machinery on random data.

use proptest::prelude::*;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use srm_core::learn::{smote, stratified_folds, Column, ColumnKind, Dataset, RowOrigin, DEFAULT_K};

fn dataset(points: &[(f64, f64, bool)], positives: usize) -> Dataset {
    let columns = vec![
        Column::new("a", ColumnKind::Continuous),
        Column::new("b", ColumnKind::Continuous),
        Column::new("flag", ColumnKind::Binary),
    ];
    let rows = points.iter().map(|&(a, b, f)| vec![a, b, f as u8 as f64]).collect();
    let labels = (0..points.len()).map(|i| (i < positives) as u8).collect();
    Dataset::new(columns, rows, labels).unwrap()
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn smote_reaches_parity_on_segments(
        points in proptest::collection::vec((-50.0f64..50.0, -1.0f64..1.0, any::<bool>()), 20..120),
        share in 0.1f64..0.45,
        seed in any::<u64>(),
    ) {
        let positives = ((points.len() as f64 * share) as usize).max(DEFAULT_K + 1);
        let data = dataset(&points, positives);
        let out = smote(&data, DEFAULT_K, &mut ChaCha8Rng::seed_from_u64(seed)).unwrap();
        let (neg, pos) = out.class_counts();
        prop_assert_eq!(neg, pos);
        prop_assert_eq!(&out.labels[..data.n_rows()], &data.labels[..]);
        for (i, o) in out.origins.iter().enumerate().skip(data.n_rows()) {
            let RowOrigin::Synthetic { parent, neighbor, u } = *o else { panic!("row {i} is not synthetic") };
            prop_assert!((0.0..=1.0).contains(&u));
            prop_assert_eq!(out.labels[i], 1);
            prop_assert!(parent != neighbor);
            let (x, p, q) = (out.row(i), data.row(parent), data.row(neighbor));
            for j in 0..2 {
                prop_assert!((x[j] - (p[j] + u * (q[j] - p[j]))).abs() < 1e-9);
            }
            prop_assert_eq!(x[2], p[2]);
        }
    }

    #[test]
    fn too_few_minority_rows_is_an_error(n in 20usize..60, positives in 1usize..=DEFAULT_K) {
        let points: Vec<(f64, f64, bool)> = (0..n).map(|i| (i as f64, 0.0, false)).collect();
        prop_assert!(smote(&dataset(&points, positives), DEFAULT_K, &mut ChaCha8Rng::seed_from_u64(0)).is_err());
    }

    #[test]
    fn folds_partition_rows_and_keep_class_shares(
        labels in proptest::collection::vec(0u8..2, 10..300),
        folds in 2usize..11,
        seed in any::<u64>(),
    ) {
        prop_assume!(labels.len() >= folds);
        let assignment = stratified_folds(&labels, folds, seed);
        let mut seen: Vec<usize> = assignment.iter().flatten().copied().collect();
        seen.sort_unstable();
        prop_assert_eq!(seen, (0..labels.len()).collect::<Vec<_>>());
        let sizes: Vec<usize> = assignment.iter().map(Vec::len).collect();
        prop_assert!(sizes.iter().max().unwrap() - sizes.iter().min().unwrap() <= 1);
        let positives: Vec<usize> = assignment.iter().map(|f| f.iter().filter(|&&i| labels[i] == 1).count()).collect();
        prop_assert!(positives.iter().max().unwrap() - positives.iter().min().unwrap() <= 1);
    }
}
