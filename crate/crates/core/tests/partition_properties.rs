use fbtc_core::matrix::Matrix;
use fbtc_core::partition::{fuzzy_kmeans, kmeans, wcss, FuzzyConfig, KMeansConfig};
use proptest::prelude::*;

fn instance() -> impl Strategy<Value = (Vec<Vec<f64>>, usize, u64)> {
    (3usize..30, 1usize..4, 1usize..5, any::<u64>()).prop_flat_map(|(n, d, k, seed)| {
        (
            prop::collection::vec(prop::collection::vec(-5.0f64..5.0, d), n),
            Just(k.min(n)),
            Just(seed),
        )
    })
}

/// Independent WCSS from the labels alone.
fn objective(rows: &[Vec<f64>], labels: &[usize], k: usize) -> f64 {
    let d = rows[0].len();
    let mut sums = vec![vec![0.0; d]; k];
    let mut counts = vec![0.0; k];
    for (x, &l) in rows.iter().zip(labels) {
        counts[l - 1] += 1.0;
        for (s, v) in sums[l - 1].iter_mut().zip(x) {
            *s += v;
        }
    }
    rows.iter()
        .zip(labels)
        .map(|(x, &l)| x.iter().zip(&sums[l - 1]).map(|(v, s)| (v - s / counts[l - 1]).powi(2)).sum::<f64>())
        .sum()
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn kmeans_contracts((rows, k, seed) in instance()) {
        let m = Matrix::from_rows(&rows);
        let config = KMeansConfig { seed, restarts: 5, max_iter: 100 };
        let r = kmeans(&m, k, &config).unwrap();
        prop_assert_eq!(r.labels.len(), rows.len());
        prop_assert!(r.labels.iter().all(|&l| (1..=k).contains(&l)));
        prop_assert!(r.cluster_sizes().iter().all(|&s| s > 0));
        let want = objective(&rows, &r.labels, k);
        prop_assert!((r.wcss - want).abs() <= 1e-9 * (1.0 + want));
        prop_assert!((wcss(&m, &r.labels, k) - want).abs() <= 1e-9 * (1.0 + want));
        for w in r.trace.windows(2) {
            prop_assert!(w[1] <= w[0] * (1.0 + 1e-12) + 1e-12);
        }
        prop_assert_eq!(kmeans(&m, k, &config).unwrap(), r);
    }

    #[test]
    fn kmeans_labels_follow_nearest_center((rows, k, seed) in instance()) {
        let m = Matrix::from_rows(&rows);
        let r = kmeans(&m, k, &KMeansConfig { seed, restarts: 3, max_iter: 300 }).unwrap();
        prop_assume!(r.converged);
        for (x, &l) in rows.iter().zip(&r.labels) {
            let dist = |c: usize| x.iter().zip(r.centers.row(c)).map(|(a, b)| (a - b).powi(2)).sum::<f64>();
            let own = dist(l - 1);
            prop_assert!((0..k).all(|c| own <= dist(c) + 1e-9));
        }
    }

    #[test]
    fn fuzzy_contracts((rows, k, seed) in instance()) {
        let m = Matrix::from_rows(&rows);
        let config = FuzzyConfig { seed, restarts: 3, ..FuzzyConfig::default() };
        let r = fuzzy_kmeans(&m, k, &config).unwrap();
        let w = r.weights.as_ref().unwrap();
        prop_assert_eq!((w.rows(), w.cols()), (rows.len(), k));
        for (row, &label) in w.iter_rows().zip(&r.labels) {
            prop_assert!((row.iter().sum::<f64>() - 1.0).abs() <= 1e-9);
            prop_assert!(row.iter().all(|&v| v >= 0.0));
            let best = row.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
            prop_assert_eq!(row[label - 1], best);
        }
        prop_assert_eq!(fuzzy_kmeans(&m, k, &config).unwrap(), r);
    }
}

#[test]
fn invalid_k_is_rejected() {
    let m = Matrix::from_rows(&[[0.0], [1.0]]);
    assert!(kmeans(&m, 0, &KMeansConfig::default()).is_err());
    assert!(kmeans(&m, 3, &KMeansConfig::default()).is_err());
    assert!(fuzzy_kmeans(&m, 3, &FuzzyConfig::default()).is_err());
}
