mod common;

use proptest::prelude::*;
use uwbdetect::estimators::{HyperParamGrid, ParamValue};
use uwbdetect::modelsel::{stratified_kfold, stratified_split, SplitSpec};
use uwbdetect::sigproc::{motion_filter, standardize};
use uwbdetect::{fit, DataType, EstimatorKind, EstimatorSpec, LabeledDataset, Matrix, SchemeKind};

use common::{class_ratio_deviation, mean_std};

fn labels(max_class: u32, per_class: std::ops::Range<usize>) -> impl Strategy<Value = Vec<u32>> {
    prop::collection::vec(per_class, 2..=max_class as usize).prop_map(|counts| {
        counts
            .iter()
            .enumerate()
            .flat_map(|(c, &n)| std::iter::repeat(c as u32).take(n))
            .collect()
    })
}

fn first_candidate(kind: EstimatorKind) -> Vec<(String, ParamValue)> {
    HyperParamGrid::table1(kind).candidates().remove(0)
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn standardized_scans_have_zero_mean_unit_std(
        x in prop::collection::vec(-1e3f64..1e3, 2..200),
        scale in 0.01f64..100.0,
        shift in -50.0f64..50.0,
    ) {
        let (_, s) = mean_std(&x);
        prop_assume!(s > 1e-6);
        let z = standardize(&x).unwrap();
        let (m, sd) = mean_std(&z);
        prop_assert!(m.abs() < 1e-9);
        prop_assert!((sd - 1.0).abs() < 1e-9);
        let moved: Vec<f64> = x.iter().map(|v| v * scale + shift).collect();
        let z2 = standardize(&moved).unwrap();
        for (a, b) in z.iter().zip(&z2) {
            prop_assert!((a - b).abs() < 1e-6);
        }
    }

    #[test]
    fn motion_filter_cancels_static_and_linear_drift(
        s in prop::collection::vec(-10.0f64..10.0, 1..64),
        d in prop::collection::vec(-1.0f64..1.0, 64),
    ) {
        // a static scene plus a constant per-bin drift has zero second difference
        let t2: Vec<f64> = s.clone();
        let t1: Vec<f64> = s.iter().zip(&d).map(|(a, b)| a + b).collect();
        let t0: Vec<f64> = s.iter().zip(&d).map(|(a, b)| a + 2.0 * b).collect();
        let out = motion_filter(&t0, &t1, &t2).unwrap();
        for v in out {
            prop_assert!(v.abs() < 1e-12);
        }
    }

    #[test]
    fn split_keeps_class_ratios(y in labels(10, 2..60), frac in 0.05f64..0.95, seed: u64) {
        let n = y.len();
        let ds = LabeledDataset::new(Matrix::zeros(n, 1), y.clone(), SchemeKind::Grid10, DataType::Raw, "p").unwrap();
        let (train, valid) = stratified_split(&ds, &SplitSpec { train_fraction: frac, seed }).unwrap();
        prop_assert_eq!(train.len() + valid.len(), n);
        // rounding contributes at most 1/2, the clamp that keeps both sides non-empty at most 1
        prop_assert!(class_ratio_deviation(&y, &train.labels, frac) <= 1.0);
    }

    #[test]
    fn folds_partition_and_stratify(y in labels(6, 5..40), k in 2usize..6, seed: u64) {
        let folds = stratified_kfold(&y, k, seed).unwrap();
        let sizes = folds.fold_sizes();
        prop_assert_eq!(sizes.iter().sum::<usize>(), y.len());
        prop_assert!(sizes.iter().max().unwrap() - sizes.iter().min().unwrap() <= 1);
        for i in 0..k {
            let (_, held) = folds.split(i);
            let part: Vec<u32> = held.iter().map(|&j| y[j]).collect();
            prop_assert!(class_ratio_deviation(&y, &part, 1.0 / k as f64) < 1.0);
        }
    }

    #[test]
    fn predictions_are_training_labels_and_fits_repeat(
        kind_idx in 0usize..8,
        raw_labels in prop::collection::vec(prop::sample::select(vec![3u32, 7, 11]), 12..30),
        seed: u64,
        data_seed: u64,
    ) {
        let kind = EstimatorKind::ALL[kind_idx];
        let mut y = raw_labels;
        y[0] = 3;
        y[1] = 7;
        let n = y.len();
        let mut state = data_seed | 1;
        let mut next = || {
            state ^= state << 13;
            state ^= state >> 7;
            state ^= state << 17;
            (state >> 11) as f64 / (1u64 << 53) as f64
        };
        let rows: Vec<Vec<f64>> = (0..n).map(|i| (0..6).map(|j| next() + if j == 0 { y[i] as f64 / 4.0 } else { 0.0 }).collect()).collect();
        let x = Matrix::from_rows(&rows).unwrap();
        let spec = EstimatorSpec::new(kind, first_candidate(kind), seed);
        let a = fit(&spec, &x, &y).unwrap();
        let b = fit(&spec, &x, &y).unwrap();
        prop_assert_eq!(&a, &b);
        let p = a.predict(&x).unwrap();
        prop_assert!(p.iter().all(|l| [3, 7, 11].contains(l)));
    }

    #[test]
    fn dataset_bytes_round_trip(
        rows in 1usize..12,
        cols in 1usize..20,
        seed: u64,
        scenario in "[a-z]{1,12}",
    ) {
        let data: Vec<f64> = (0..rows * cols).map(|i| ((i as u64).wrapping_mul(seed | 1) % 1000) as f64 - 500.25).collect();
        let y: Vec<u32> = (0..rows).map(|i| (i % 4) as u32).collect();
        let ds = LabeledDataset::new(Matrix::from_vec(rows, cols, data).unwrap(), y, SchemeKind::Simple4, DataType::Baseband, scenario).unwrap();
        let back = LabeledDataset::from_bytes(&ds.to_bytes().unwrap()).unwrap();
        prop_assert_eq!(back, ds);
    }
}
