use super::*;
use crate::camera::{Point3, Vector3};
use crate::joints::Joint;
use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn hand(seed: u64) -> HandPose {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    HandPose::new(std::array::from_fn(|_| {
        Point3::new(rng.random_range(-80.0..80.0), rng.random_range(-80.0..80.0), rng.random_range(420.0..580.0))
    }))
}

fn full(p: &HandPose) -> PartialPose {
    PartialPose::from(p)
}

#[test]
fn no_hand_no_prediction_is_zero() {
    let s = score_frame(None, &[], ErrorMode::Max).unwrap();
    assert_eq!(s.error, FrameError::Finite(0.0));
}

#[test]
fn false_positive_and_miss_are_failures() {
    let h = hand(1);
    assert_eq!(score_frame(Some(&full(&h)), &[], ErrorMode::Max).unwrap().error, FrameError::Failure);
    assert_eq!(score_frame(None, &[h], ErrorMode::Mean).unwrap().error, FrameError::Failure);
}

#[test]
fn two_hands_take_the_minimum() {
    let (a, b) = (hand(1), hand(2));
    let s = score_frame(Some(&full(&b)), &[a.clone(), b.clone()], ErrorMode::Max).unwrap();
    assert_eq!(s.error, FrameError::Finite(0.0));
    assert_eq!(s.matched, Some(1));
    let swapped = score_frame(Some(&full(&b)), &[b, a], ErrorMode::Max).unwrap();
    assert_eq!(swapped.error, FrameError::Finite(0.0));
}

#[test]
fn uniform_offset() {
    let h = hand(3);
    let p = h.translated(&Vector3::new(0.0, 0.0, 30.0));
    for mode in [ErrorMode::Max, ErrorMode::Mean] {
        let e = score_pose(Some(&p), std::slice::from_ref(&h), mode).unwrap().error.finite().unwrap();
        assert!((e - 30.0).abs() < 1e-9);
    }
}

#[test]
fn only_visible_joints_count() {
    let h = {
        let mut h = hand(4);
        h.visible[Joint::IndexTip.index()] = false;
        h
    };
    let mut p = h.clone();
    p.positions[Joint::IndexTip.index()].x += 500.0;
    assert_eq!(score_pose(Some(&p), &[h.clone()], ErrorMode::Max).unwrap().error, FrameError::Finite(0.0));
    // a visible joint missing from the prediction is a failure
    let mut partial = full(&h);
    partial.0[Joint::Wrist.index()] = None;
    assert_eq!(score_frame(Some(&partial), &[h.clone()], ErrorMode::Max).unwrap().error, FrameError::Failure);
    // an invisible one is not
    let mut partial = full(&h);
    partial.0[Joint::IndexTip.index()] = None;
    assert_eq!(score_frame(Some(&partial), &[h], ErrorMode::Max).unwrap().error, FrameError::Finite(0.0));
}

#[test]
fn hand_without_visible_joints_fails() {
    let mut h = hand(5);
    h.visible = [false; 21];
    assert_eq!(score_pose(Some(&h.clone()), &[h], ErrorMode::Max).unwrap().error, FrameError::Failure);
}

#[test]
fn curve_examples() {
    let all_zero = vec![FrameError::Finite(0.0); 7];
    assert!(threshold_curve(&all_zero, &default_thresholds()).unwrap().iter().all(|p| *p == 1.0));
    let s = [FrameError::Finite(10.0), FrameError::Finite(60.0), FrameError::Failure];
    let c = threshold_curve(&s, &[20.0, 50.0, 100.0]).unwrap();
    assert_eq!(c, vec![1.0 / 3.0, 1.0 / 3.0, 2.0 / 3.0]);
    assert!(matches!(threshold_curve(&s, &[50.0, 20.0]), Err(Error::UnsortedThresholds)));
}

#[test]
fn default_grid() {
    let t = default_thresholds();
    assert_eq!(t.len(), 81);
    assert_eq!((t[0], t[8], t[80]), (0.0, 20.0, 200.0));
}

#[test]
fn median() {
    let f = FrameError::Finite;
    assert_eq!(median_error(&[f(3.0), f(1.0), f(2.0)]), Some(2.0));
    assert_eq!(median_error(&[f(1.0), FrameError::Failure, FrameError::Failure]), None);
    assert_eq!(median_error(&[f(1.0), f(3.0)]), Some(2.0));
    assert_eq!(median_error(&[]), None);
}

fn scores() -> impl Strategy<Value = Vec<FrameError>> {
    proptest::collection::vec(
        prop_oneof![4 => (0.0..250.0f64).prop_map(FrameError::Finite), 1 => Just(FrameError::Failure)],
        0..60,
    )
}

proptest! {
    #[test]
    fn curve_matches_counting(s in scores(), mut t in proptest::collection::vec(0.0..250.0f64, 1..20)) {
        t.sort_by(f64::total_cmp);
        let c = threshold_curve(&s, &t).unwrap();
        for (ti, ci) in t.iter().zip(&c) {
            let count = s.iter().filter(|e| matches!(e, FrameError::Finite(x) if x <= ti)).count();
            let expected = if s.is_empty() { 0.0 } else { count as f64 / s.len() as f64 };
            prop_assert_eq!(*ci, expected);
        }
        prop_assert!(c.windows(2).all(|w| w[0] <= w[1]));
        prop_assert!(c.iter().all(|p| (0.0..=1.0).contains(p)));
        let mut rev = s.clone();
        rev.reverse();
        prop_assert_eq!(threshold_curve(&rev, &t).unwrap(), c);
    }

    #[test]
    fn ground_truth_order_does_not_matter(a in 0u64..1000, b in 0u64..1000, p in 0u64..1000) {
        let (ha, hb, hp) = (hand(a), hand(b), hand(p));
        let one = score_pose(Some(&hp), &[ha.clone(), hb.clone()], ErrorMode::Mean).unwrap().error;
        let two = score_pose(Some(&hp), &[hb, ha], ErrorMode::Mean).unwrap().error;
        prop_assert_eq!(one, two);
    }
}

#[test]
fn mean_never_exceeds_max() {
    let mut rng = ChaCha8Rng::seed_from_u64(9);
    let mut maxes = Vec::new();
    let mut means = Vec::new();
    for i in 0..1000 {
        let mut gt = hand(i);
        let mut pred = gt.clone();
        for p in pred.positions.iter_mut() {
            *p += Vector3::new(rng.random_range(-60.0..60.0), rng.random_range(-60.0..60.0), rng.random_range(-60.0..60.0));
        }
        for v in gt.visible.iter_mut() {
            *v = rng.random_bool(0.8);
        }
        gt.visible[0] = true;
        let mx = score_pose(Some(&pred), &[gt.clone()], ErrorMode::Max).unwrap().error;
        let mn = score_pose(Some(&pred), &[gt], ErrorMode::Mean).unwrap().error;
        assert!(mn.finite().unwrap() <= mx.finite().unwrap() + 1e-12);
        maxes.push(mx);
        means.push(mn);
    }
    let t = default_thresholds();
    let (cmax, cmean) = (threshold_curve(&maxes, &t).unwrap(), threshold_curve(&means, &t).unwrap());
    assert!(cmax.iter().zip(&cmean).all(|(a, b)| a <= b));
}

#[test]
fn report_formats_agree() {
    let preds: Vec<Option<PartialPose>> = (0..20).map(|i| (i % 5 != 0).then(|| full(&hand(i)))).collect();
    let gts: Vec<Vec<HandPose>> = (0..20).map(|i| if i % 7 == 0 { vec![] } else { vec![hand(i).translated(&Vector3::new(i as f64 * 4.0, 0.0, 0.0))] }).collect();
    let r = evaluate(&preds, &gts, ErrorMode::Max).unwrap();
    assert_eq!(r.frame_count, 20);
    let json: serde_json::Value = serde_json::from_str(&r.to_json()).unwrap();
    let csv = r.to_csv();
    for (line, point) in csv.lines().skip(1).zip(json["curve"].as_array().unwrap()) {
        let (t, p) = line.split_once(',').unwrap();
        assert_eq!(t.parse::<f64>().unwrap(), point["threshold_mm"].as_f64().unwrap());
        assert_eq!(p.parse::<f64>().unwrap(), point["proportion"].as_f64().unwrap());
    }
    assert_eq!(r.to_json(), evaluate(&preds, &gts, ErrorMode::Max).unwrap().to_json());
    assert!(r.to_svg().starts_with("<svg"));
    let back: EvalReport = serde_json::from_str(&r.to_json()).unwrap();
    assert_eq!(back, r);
    assert!(matches!(evaluate(&preds[..3], &gts, ErrorMode::Max), Err(Error::FrameMismatch(_))));
}

#[test]
fn agreement_examples() {
    let h = hand(11);
    let same = vec![vec![("a".to_string(), h.clone()), ("b".to_string(), h.clone())]; 4];
    let r = annotator_agreement(&same, ErrorMode::Max, &default_thresholds()).unwrap();
    assert!(r.curve.iter().all(|p| *p == 1.0));

    let mut moved = h.clone();
    moved.positions[Joint::IndexTip.index()].x += 25.0;
    let one = vec![vec![("a".to_string(), h.clone()), ("b".to_string(), moved)]];
    let r = annotator_agreement(&one, ErrorMode::Max, &[20.0, 50.0]).unwrap();
    assert_eq!(r.curve, vec![0.0, 1.0]);

    let single = vec![vec![("a".to_string(), h.clone())], vec![("a".to_string(), h.clone()), ("a".to_string(), h)]];
    assert!(matches!(annotator_agreement(&single, ErrorMode::Max, &[20.0]), Err(Error::InsufficientAnnotators)));
}

#[test]
fn agreement_matches_monte_carlo() {
    let mut rng = ChaCha8Rng::seed_from_u64(21);
    let normal = rand_distr::Normal::new(0.0, 10.0).unwrap();
    let mut frames = Vec::new();
    let mut direct = 0usize;
    for i in 0..2000 {
        let gt = hand(i);
        let mut other = gt.clone();
        let mut worst = 0.0f64;
        for p in other.positions.iter_mut() {
            let d = Vector3::from_fn(|_, _| rand_distr::Distribution::sample(&normal, &mut rng));
            worst = worst.max(d.norm());
            *p += d;
        }
        if worst <= 20.0 {
            direct += 1;
        }
        frames.push(vec![("first".to_string(), gt), ("second".to_string(), other)]);
    }
    let r = annotator_agreement(&frames, ErrorMode::Max, &[20.0]).unwrap();
    assert!((r.curve[0] - direct as f64 / 2000.0).abs() < 1e-12);
}

#[test]
fn cross_dataset_rejects_empty_test() {
    let est = |_: &DepthFrame| -> Result<Option<HandPose>> { Ok(None) };
    let r = cross_dataset_matrix(&[("a".to_string(), est)], &[("t".to_string(), vec![])], 50.0);
    assert!(r.is_err());
}
