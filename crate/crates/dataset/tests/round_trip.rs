use std::time::Instant;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use voxhand_core::pipeline::desk_grid;
use voxhand_core::synth::{generate_set, GenerateConfig};
use voxhand_core::voxel::{ExemplarDb, ExemplarTemplate};
use voxhand_core::{HandPose, Point3};
use voxhand_dataset::exemplar_db::encode_exemplar_db;
use voxhand_dataset::{load_dataset, load_exemplar_db, save_exemplar_db, Annotation, DatasetError, DatasetWriter};

#[test]
fn synthetic_set_reloads_bit_identical() {
    let config = GenerateConfig::default();
    let set = generate_set(100, 42, &config).unwrap();
    let dir = tempfile::tempdir().unwrap();
    let k = config.render.intrinsics;
    let mut w = DatasetWriter::create(dir.path(), "synth-100", k, config.render.width, config.render.height).unwrap();
    for (i, s) in set.samples.iter().enumerate() {
        w.add_frame(&format!("{i:05}"), &s.frame, &[Annotation { annotator: "synth".into(), pose: s.pose.clone() }])
            .unwrap();
    }
    w.finish().unwrap();

    let ds = load_dataset(dir.path()).unwrap();
    assert_eq!(ds.len(), 100);
    for (f, s) in ds.frames().zip(&set.samples) {
        let f = f.unwrap();
        assert_eq!(f.depth.to_millimeters(), s.frame.to_millimeters());
        assert_eq!(f.depth, s.frame);
        assert_eq!(f.hands.len(), 1);
        // exact float equality, not approximate
        for (a, b) in f.hands[0].pose.positions.iter().zip(&s.pose.positions) {
            assert_eq!(a.coords.map(f64::to_bits), b.coords.map(f64::to_bits));
        }
        assert_eq!(f.hands[0].pose.visible, s.pose.visible);
    }
}

fn random_db(n: usize, seed: u64) -> ExemplarDb {
    let grid = desk_grid();
    let side = grid.template_side;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut db = ExemplarDb::new(grid);
    for i in 0..n {
        let proj = (0..side * side).map(|_| rng.random_range(0..=side as u16)).collect();
        let mut pose = HandPose::new(std::array::from_fn(|_| {
            Point3::new(rng.random_range(0.0..300.0), rng.random_range(0.0..300.0), rng.random_range(0.0..300.0))
        }));
        for v in pose.visible.iter_mut() {
            *v = rng.random_bool(0.8);
        }
        let mut t = ExemplarTemplate::from_counts(side, proj, pose, format!("frame-{i}")).unwrap();
        t.anchor = [rng.random_range(-5..5), rng.random_range(-5..5), rng.random_range(-5..5)];
        db.push(t).unwrap();
    }
    db
}

#[test]
fn thousand_template_db_round_trip() {
    let db = random_db(1000, 3);
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("train.vxex");
    save_exemplar_db(&db, &path).unwrap();
    let start = Instant::now();
    let back = load_exemplar_db(&path).unwrap();
    println!("loaded 1000 templates in {:?}", start.elapsed());
    assert_eq!(back, db);
    assert!(!dir.path().join("train.vxex.lock").exists());

    // same db, same bytes
    save_exemplar_db(&back, dir.path().join("again.vxex")).unwrap();
    assert_eq!(std::fs::read(&path).unwrap(), std::fs::read(dir.path().join("again.vxex")).unwrap());
}

#[test]
fn truncated_and_corrupted_files_fail_cleanly() {
    let db = random_db(20, 9);
    let bytes = encode_exemplar_db(&db);
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("cut.vxex");

    std::fs::write(&path, &bytes[..bytes.len() - 7]).unwrap();
    let err = load_exemplar_db(&path).unwrap_err();
    assert!(matches!(err, DatasetError::Truncated { .. }), "{err}");

    let mut flipped = bytes.clone();
    let mid = bytes.len() / 2;
    flipped[mid] ^= 1;
    std::fs::write(&path, &flipped).unwrap();
    let err = load_exemplar_db(&path).unwrap_err();
    assert!(matches!(err, DatasetError::Checksum { .. }), "{err}");
    assert!(err.to_string().contains("cut.vxex"));
}

#[test]
fn empty_db_file_round_trip() {
    let db = ExemplarDb::new(desk_grid());
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("empty.vxex");
    save_exemplar_db(&db, &path).unwrap();
    assert_eq!(load_exemplar_db(&path).unwrap(), db);
}
