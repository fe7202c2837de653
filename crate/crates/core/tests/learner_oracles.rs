use std::collections::HashSet;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use ctaudit::learners::logistic::LogisticObjective;
use ctaudit::learners::{fit, ForestParams, KnnModel, ModelParams, Penalty, TreeParams};
use ctaudit::{ClassifierSpec, FeatureMatrix};

fn matrix(rows: Vec<Vec<f64>>, labels: Vec<u8>) -> FeatureMatrix {
    let d = rows[0].len();
    let ids = (0..rows.len()).map(|i| format!("r{i}")).collect();
    FeatureMatrix::new((0..d).map(|j| format!("f{j}")).collect(), rows, Some(labels), ids).unwrap()
}

fn norm(v: &[f64]) -> f64 {
    v.iter().map(|x| x * x).sum::<f64>().sqrt()
}

#[test]
fn logistic_gradient_matches_central_differences() {
    let mut rng = ChaCha8Rng::seed_from_u64(7);
    let (n, d) = (60, 5);
    let rows: Vec<f64> = (0..n * d).map(|_| rng.random_range(-2.0..2.0)).collect();
    let labels: Vec<u8> = (0..n).map(|_| rng.random_range(0..2)).collect();
    let h = 1e-5;
    for point in 0..20 {
        let penalty = if point % 2 == 0 { Penalty::L2 } else { Penalty::None };
        let obj = LogisticObjective::new(&rows, &labels, d, penalty, 0.5);
        let w: Vec<f64> = (0..d).map(|_| rng.random_range(-1.5..1.5)).collect();
        let b = rng.random_range(-1.0..1.0);

        let mut analytic = vec![0.0; d];
        let gb = obj.smooth_gradient(&w, b, &mut analytic);
        analytic.push(gb);

        let mut numeric = Vec::with_capacity(d + 1);
        for j in 0..=d {
            let shifted = |delta: f64| {
                let mut w2 = w.clone();
                let mut b2 = b;
                if j < d {
                    w2[j] += delta;
                } else {
                    b2 += delta;
                }
                obj.loss(&w2, b2)
            };
            numeric.push((shifted(h) - shifted(-h)) / (2.0 * h));
        }
        let diff: Vec<f64> = analytic.iter().zip(&numeric).map(|(a, b)| a - b).collect();
        let rel = norm(&diff) / norm(&analytic).max(norm(&numeric));
        assert!(rel < 1e-4, "point {point}: relative error {rel:e}");
    }
}

#[test]
fn knn_neighbors_match_exhaustive_scan() {
    let mut rng = ChaCha8Rng::seed_from_u64(11);
    for case in 0..50 {
        // small integer grid so distance ties are common
        let rows: Vec<Vec<f64>> = (0..20)
            .map(|_| (0..3).map(|_| f64::from(rng.random_range(-3i32..=3))).collect())
            .collect();
        let labels: Vec<u8> = (0..20).map(|_| rng.random_range(0..2)).collect();
        let model = KnnModel { rows: rows.clone(), labels: labels.clone() };
        let q: Vec<f64> = (0..3).map(|_| f64::from(rng.random_range(-3i32..=3))).collect();
        let k = rng.random_range(1..=20);

        let mut scan: Vec<(f64, usize)> = rows
            .iter()
            .enumerate()
            .map(|(i, r)| (r.iter().zip(&q).map(|(a, b)| (a - b).powi(2)).sum(), i))
            .collect();
        scan.sort_by(|a, b| a.0.partial_cmp(&b.0).unwrap().then(a.1.cmp(&b.1)));
        let expected: Vec<usize> = scan[..k].iter().map(|&(_, i)| i).collect();
        assert_eq!(model.neighbors(&q, k), expected, "case {case}");

        let ones = expected.iter().filter(|&&i| labels[i] == 1).count();
        assert_eq!(model.proba(&q, k), ones as f64 / k as f64, "case {case}");
    }
}

#[test]
fn unbounded_tree_memorizes_distinct_rows() {
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    for case in 0..20 {
        let n = rng.random_range(5..200);
        let d = rng.random_range(1..6);
        let mut seen = HashSet::new();
        let mut rows = Vec::new();
        while rows.len() < n {
            let r: Vec<f64> = (0..d).map(|_| f64::from(rng.random_range(0..8u8))).collect();
            let key: Vec<u64> = r.iter().map(|v| v.to_bits()).collect();
            if seen.insert(key) {
                rows.push(r);
            }
            if seen.len() >= 8usize.pow(d as u32) {
                break;
            }
        }
        let mut labels: Vec<u8> = (0..rows.len()).map(|_| rng.random_range(0..2)).collect();
        labels[0] = 0;
        labels[1 % rows.len()] = 1;
        if rows.len() < 2 {
            continue;
        }
        let x = matrix(rows.clone(), labels.clone());
        let model = fit(&ClassifierSpec::Tree(TreeParams::default()), &x, 0).unwrap();
        assert_eq!(model.predict_rows(&rows).unwrap(), labels, "case {case}");
    }
}

#[test]
fn single_unbagged_full_feature_forest_is_a_tree() {
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    for case in 0..10 {
        let n = 150;
        let d = 6;
        let rows: Vec<Vec<f64>> = (0..n).map(|_| (0..d).map(|_| rng.random_range(0.0..10.0f64).round()).collect()).collect();
        let labels: Vec<u8> = rows.iter().map(|r| u8::from(r[0] + r[1] + rng.random_range(0.0..4.0) > 11.0)).collect();
        let x = matrix(rows.clone(), labels);
        for (max_depth, min_samples_leaf) in [(None, 1), (Some(3), 2), (Some(6), 5)] {
            let dt = fit(&ClassifierSpec::Tree(TreeParams { max_depth, min_samples_leaf }), &x, case).unwrap();
            let rf_spec = ClassifierSpec::Forest(ForestParams {
                max_depth,
                min_samples_leaf,
                n_estimators: 1,
                bootstrap: false,
                max_features: Some(d),
                seed: None,
            });
            let rf = fit(&rf_spec, &x, case).unwrap();
            let (ModelParams::Tree(t), ModelParams::Forest(f)) = (dt.params(), rf.params()) else {
                panic!("unexpected model params");
            };
            assert_eq!(&f.trees[0], t, "case {case}");
            assert_eq!(dt.predict_proba_rows(&rows).unwrap(), rf.predict_proba_rows(&rows).unwrap());
        }
    }
}
