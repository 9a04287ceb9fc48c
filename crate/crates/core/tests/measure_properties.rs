use fbtc_core::measures::{compute_measure_vector, MeasureConfig, MeasureId, MeasureSet};
use fbtc_core::trajectory::{center_vertically, shift_horizontally};
use fbtc_core::Trajectory;
use proptest::prelude::*;

fn trajectory() -> impl Strategy<Value = Trajectory> {
    (3usize..25)
        .prop_flat_map(|n| {
            (
                -10.0f64..10.0,
                prop::collection::vec(0.05f64..2.0, n - 1),
                prop::collection::vec(-50.0f64..50.0, n),
            )
        })
        .prop_map(|(start, gaps, values)| {
            let mut times = vec![start];
            for g in gaps {
                times.push(times.last().unwrap() + g);
            }
            Trajectory::new("p", times, values).unwrap()
        })
}

fn measures(t: &Trajectory) -> Vec<f64> {
    compute_measure_vector(t, MeasureSet::all(), &MeasureConfig::default())
        .unwrap()
        .to_vec()
}

proptest! {
    #[test]
    fn scaling_covariance(t in trajectory(), ay in 0.01f64..100.0, at in 0.01f64..100.0) {
        let scaled = Trajectory::new(
            "p",
            t.times().iter().map(|v| v * at).collect(),
            t.values().iter().map(|v| v * ay).collect(),
        )
        .unwrap();
        let (base, got) = (measures(&t), measures(&scaled));
        let ymax = t.values().iter().fold(0.0f64, |m, v| m.max(v.abs()));
        for id in MeasureId::all() {
            let (a, b) = id.scaling_exponents();
            let factor = ay.powi(a) * at.powi(b);
            let want = base[id.index()] * factor;
            // magnitude the measure would have for a trajectory of this size
            let reference = ymax.powi(a) * t.span().powi(b) * factor;
            let diff = (got[id.index()] - want).abs();
            prop_assert!(
                diff <= 1e-8 * want.abs() + 1e-9 * reference.abs(),
                "{id}: {} vs {}", got[id.index()], want
            );
        }
    }

    #[test]
    fn centering_and_shifting_touch_only_location_measures(t in trajectory()) {
        let base = measures(&t);
        let centred = measures(&center_vertically(&t));
        let shifted = measures(&shift_horizontally(&t));
        let ymax = t.values().iter().fold(0.0f64, |m, v| m.max(v.abs()));
        for id in MeasureId::all() {
            let (a, b) = id.scaling_exponents();
            let tol = 1e-9 * (base[id.index()].abs() + ymax.powi(a) * t.span().powi(b));
            if id.is_vertically_invariant() {
                prop_assert!((base[id.index()] - centred[id.index()]).abs() <= tol, "{id} after centring");
            }
            if id.is_horizontally_invariant() {
                prop_assert!((base[id.index()] - shifted[id.index()]).abs() <= tol, "{id} after shifting");
            }
        }
        prop_assert!(centred[3].abs() <= 1e-9 * ymax);
    }

    #[test]
    fn ranges_and_orderings(t in trajectory()) {
        let m = measures(&t);
        prop_assert!((0.0..=1.0).contains(&m[7]));
        prop_assert!(m[11] >= m[9].abs() - 1e-12 * m[11].abs());
        prop_assert!(m[8] >= 0.0);
        prop_assert!((-1.0..=1.0).contains(&m[12]));
        prop_assert_eq!(m[2], m[0] - m[1]);
        prop_assert!(m[1] <= m[3] && m[3] <= m[0]);
        prop_assert!(m[13] >= m[14] && m[17] >= m[18]);
        prop_assert!(m[4] >= 0.0 && m[15] >= 0.0 && m[19] >= 0.0);
    }

    #[test]
    fn affine_trajectories(t in trajectory(), slope in -5.0f64..5.0, intercept in -5.0f64..5.0) {
        let values = t.times().iter().map(|s| intercept + slope * s).collect();
        let line = Trajectory::new("l", t.times().to_vec(), values).unwrap();
        let m = measures(&line);
        let scale = 1.0 + slope.abs() + intercept.abs() + slope.abs() * t.times().iter().fold(0.0f64, |a, v| a.max(v.abs()));
        prop_assert!((m[5] - slope).abs() <= 1e-9 * scale);
        prop_assert!((m[6] - intercept).abs() <= 1e-9 * scale);
        prop_assert_eq!(m[8], 0.0);
        prop_assert!((m[13] - slope).abs() <= 1e-9 * scale && (m[14] - slope).abs() <= 1e-9 * scale);
        for v in &m[16..] {
            prop_assert!(v.abs() <= 1e-8 * scale);
        }
    }
}

#[test]
fn selection_computes_exactly_the_requested_measures() {
    let t = Trajectory::new("s", vec![0.0, 1.0, 3.0, 4.0], vec![1.0, 3.0, 2.0, 5.0]).unwrap();
    let all = measures(&t);
    let pick: MeasureSet = ["m3", "m9", "m20"].iter().map(|s| s.parse::<MeasureId>().unwrap()).collect();
    let v = compute_measure_vector(&t, pick, &MeasureConfig::default()).unwrap();
    assert_eq!(v.computed_mask(), pick);
    for id in MeasureId::all() {
        match v.get(id) {
            Some(x) => assert_eq!(x, all[id.index()]),
            None => assert!(!pick.contains(id)),
        }
    }
}
