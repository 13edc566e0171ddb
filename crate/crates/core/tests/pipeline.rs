use voxhand_core::eval::{evaluate, ErrorMode};
use voxhand_core::pipeline::{build_db, desk_grid, Estimator};
use voxhand_core::synth::{composite, generate_set, seed_backgrounds, GenerateConfig};
use voxhand_core::voxel::{DetectionThreshold, ExemplarOptions, SearchOptions};
use voxhand_core::{DepthFrame, PartialPose};

#[test]
fn training_frames_match_themselves_exactly() {
    let config = GenerateConfig::default();
    let set = generate_set(40, 7, &config).unwrap();
    let items: Vec<_> = set.samples.iter().enumerate().map(|(i, s)| (&s.frame, &s.pose, format!("{i}"))).collect();
    let (db, report) = build_db(items, &desk_grid(), &ExemplarOptions::default()).unwrap();
    assert_eq!(report.built + report.skipped.len(), 40);
    assert!(report.built >= 36, "{:?}", report.skipped);

    let est = Estimator::new(&db, SearchOptions::default()).unwrap();
    let mut preds = Vec::new();
    let mut gts = Vec::new();
    for t in db.templates() {
        let s = &set.samples[t.source_id.parse::<usize>().unwrap()];
        let d = est.nearest(&s.frame).unwrap().unwrap();
        assert_eq!(d.distance, 0);
        preds.push(Some(PartialPose(d.pose.positions.map(Some))));
        gts.push(vec![s.pose.clone()]);
    }
    let report = evaluate(&preds, &gts, ErrorMode::Max).unwrap();
    assert_eq!(report.proportion_at(50.0).unwrap(), 1.0);
}

#[test]
fn threshold_rejects_empty_and_background_only_frames() {
    let config = GenerateConfig::default();
    let set = generate_set(10, 11, &config).unwrap();
    let items: Vec<_> = set.samples.iter().map(|s| (&s.frame, &s.pose, String::new())).collect();
    let (db, _) = build_db(items, &desk_grid(), &ExemplarOptions::default()).unwrap();
    let options = SearchOptions { threshold: Some(DetectionThreshold::default()), ..Default::default() };
    let est = Estimator::new(&db, options).unwrap();

    let r = &config.render;
    let empty = DepthFrame::empty(r.width, r.height, r.intrinsics).unwrap();
    assert!(est.detect(&empty).unwrap().is_none());
    // a wall at 2 m is far behind the grid
    let wall = DepthFrame::from_millimeters(r.width, r.height, &vec![2000; r.width * r.height], r.intrinsics).unwrap();
    assert!(est.detect(&wall).unwrap().is_none());
    assert!(est.detect(&set.samples[0].frame).unwrap().is_some());
}

#[test]
fn compositing_behind_the_hand_keeps_the_match() {
    let config = GenerateConfig::default();
    let set = generate_set(5, 13, &config).unwrap();
    let items: Vec<_> = set.samples.iter().map(|s| (&s.frame, &s.pose, String::new())).collect();
    let (db, _) = build_db(items, &desk_grid(), &ExemplarOptions::default()).unwrap();
    let est = Estimator::new(&db, SearchOptions::default()).unwrap();
    let r = &config.render;
    let far = DepthFrame::from_millimeters(r.width, r.height, &vec![1500; r.width * r.height], r.intrinsics).unwrap();
    for (i, s) in set.samples.iter().enumerate() {
        let c = composite(s, &far).unwrap();
        let d = est.nearest(&c.frame).unwrap().unwrap();
        assert_eq!((d.exemplar_id, d.distance), (i, 0));
    }
    // seed backgrounds are valid composite inputs
    let bgs = seed_backgrounds(2, 1, r).unwrap();
    assert!(composite(&set.samples[0], &bgs[0]).is_ok());
}
