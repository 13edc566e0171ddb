use nalgebra::{Matrix3, Rotation3};
use serde::{Deserialize, Serialize};

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use super::fk::{forward_kinematics, is_descendant};
use super::intersect::self_intersects;
use super::params::{dofs, PoseParams};
use super::ik::{solve_targets, IkConfig, IkTarget};
use super::sample::SamplingRanges;
use super::skeleton::HandSkeleton;
use crate::camera::{CameraIntrinsics, DepthFrame, Point3, Vector3};
use crate::joints::{HandPose, Joint, PartialPose, NUM_JOINTS};
use crate::{Error, Result};

const MIN_KNOWN_JOINTS: usize = 3;

/// Similarity transform `target ≈ s R source + t` (Umeyama).
fn similarity(source: &[Point3], target: &[Point3]) -> (Rotation3<f64>, f64, Vector3) {
    let n = source.len() as f64;
    let mean = |ps: &[Point3]| ps.iter().fold(Vector3::zeros(), |a, p| a + p.coords) / n;
    let (ms, mt) = (mean(source), mean(target));
    let mut cov = Matrix3::zeros();
    let mut var = 0.0;
    for (s, t) in source.iter().zip(target) {
        let (ds, dt) = (s.coords - ms, t.coords - mt);
        cov += dt * ds.transpose();
        var += ds.norm_squared();
    }
    cov /= n;
    var /= n;
    let svd = cov.svd(true, true);
    let (u, v_t) = (svd.u.unwrap(), svd.v_t.unwrap());
    let mut d = Matrix3::identity();
    if (u * v_t).determinant() < 0.0 {
        d[(2, 2)] = -1.0;
    }
    let r = u * d * v_t;
    let scale = if var > 0.0 { (svd.singular_values.component_mul(&d.diagonal())).sum() / var } else { 1.0 };
    let t = mt - scale * (r * ms);
    (Rotation3::from_matrix_unchecked(r), scale, t)
}

/// Fills unknown joints by fitting the kinematic model to the known ones.
///
/// Known joints constrain the fit through their projections plus a depth term
/// weighted at `fu / z` pixels per millimeter, so a millimeter of depth error
/// costs what a millimeter of lateral error costs at that depth. The fit
/// starts from the middle of the sampling ranges, rigidly aligned to the
/// known joints. Known joints are copied to the output unchanged; the
/// `visible` flags mark which joints were known.
pub fn complete_missing_joints(
    partial: &PartialPose,
    k: &CameraIntrinsics,
    skeleton: &HandSkeleton,
) -> Result<HandPose> {
    let known: Vec<(Joint, Point3)> =
        Joint::ALL.iter().filter_map(|j| partial.get(*j).map(|p| (*j, p))).collect();
    if known.len() < MIN_KNOWN_JOINTS {
        return Err(Error::TooFewJoints { required: MIN_KNOWN_JOINTS, found: known.len() });
    }
    let visible = partial.0.map(|p| p.is_some());
    if known.len() == NUM_JOINTS {
        return Ok(HandPose { positions: partial.0.map(|p| p.expect("all known")), visible });
    }

    let mut init = SamplingRanges::default().midpoint();
    let model = forward_kinematics(&init, skeleton);
    let src: Vec<Point3> = known.iter().map(|(j, _)| model.position(*j)).collect();
    let dst: Vec<Point3> = known.iter().map(|(_, p)| *p).collect();
    let (rot, scale, t) = similarity(&src, &dst);
    let (x, y, z) = rot.euler_angles();
    init.viewpoint.tilt = x;
    init.viewpoint.yaw = y;
    init.viewpoint.roll = z;
    init.scale = if scale.is_finite() && scale > 0.0 { scale } else { 1.0 };
    init.translation = t;

    let mut targets = Vec::with_capacity(known.len());
    for (j, p) in &known {
        let (u, v) = k.project(p)?;
        targets.push(IkTarget { joint: *j, u, v, depth: Some(p.z), depth_weight: k.fu / p.z });
    }
    let sol = solve_targets(&targets, k, skeleton, &init, &IkConfig::default())?;
    let mut positions = resolve_free_dofs(&sol.params, &visible, skeleton).positions;
    for (j, p) in &known {
        positions[j.index()] = *p;
    }
    Ok(HandPose { positions, visible })
}

/// Number of prior draws used to settle parameters no known joint depends on.
const PRIOR_DRAWS: usize = 256;

/// Parameters that move no known joint are left at their prior midpoint by
/// the fit. Replace them by the prior draw whose missing joints are, on
/// average, closest to those of all other draws (the medoid under the
/// max-over-joints distance).
fn resolve_free_dofs(fit: &PoseParams, known: &[bool; NUM_JOINTS], skeleton: &HandSkeleton) -> HandPose {
    let mut free = Vec::new();
    for j in Joint::ALL {
        let moves_known = Joint::ALL.iter().any(|d| known[d.index()] && is_descendant(*d, j));
        if !moves_known {
            let d = dofs(j);
            free.extend([d.bend, d.side, d.elongation].into_iter().flatten());
        }
    }
    let base = fit.to_vec();
    if free.is_empty() {
        return forward_kinematics(fit, skeleton);
    }
    let ranges = SamplingRanges::default();
    let mut rng = ChaCha8Rng::seed_from_u64(0x5eed);
    let missing: Vec<usize> = (0..NUM_JOINTS).filter(|i| !known[*i]).collect();
    let mut candidates = vec![forward_kinematics(fit, skeleton)];
    let mut attempts = 0;
    while candidates.len() <= PRIOR_DRAWS && attempts < 4 * PRIOR_DRAWS {
        attempts += 1;
        let draw = ranges.draw(&mut rng).to_vec();
        let mut theta = base;
        for i in &free {
            theta[*i] = draw[*i];
        }
        let pose = forward_kinematics(&PoseParams::from_vec(&theta), skeleton);
        if !self_intersects(&pose, skeleton) {
            candidates.push(pose);
        }
    }
    let dist = |a: &HandPose, b: &HandPose| {
        missing.iter().map(|i| (a.positions[*i] - b.positions[*i]).norm()).fold(0.0, f64::max)
    };
    let cost = |a: &HandPose| candidates[1..].iter().map(|b| dist(a, b)).sum::<f64>();
    candidates
        .iter()
        .map(|c| (cost(c), c))
        .min_by(|x, y| x.0.total_cmp(&y.0))
        .map(|(_, c)| c.clone())
        .expect("at least the fit itself")
}

/// Depth window and fallback depth of a detected hand.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DepthRegion {
    pub z_min: f64,
    pub z_max: f64,
    pub centroid_depth: f64,
}

impl DepthRegion {
    pub fn contains(&self, z: f64) -> bool {
        (self.z_min..=self.z_max).contains(&z)
    }
}

/// Lifts 2D joint predictions to 3D using the measured depth under each joint
/// when it falls inside the detected region, and the region's centroid depth
/// otherwise (background, missing or out-of-frame pixels). Joints that were
/// not predicted stay unknown.
pub fn backfill_depth(prediction: &[(Joint, (f64, f64))], frame: &DepthFrame, region: &DepthRegion) -> PartialPose {
    let k = frame.intrinsics();
    let mut out = PartialPose([None; NUM_JOINTS]);
    for &(j, (u, v)) in prediction {
        let z = frame
            .sample(u, v)
            .map(f64::from)
            .filter(|z| region.contains(*z))
            .unwrap_or(region.centroid_depth);
        out.0[j.index()] = Some(k.reproject_pixel(u, v, z));
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::kinematics::sample_pose;
    use rand::seq::index::sample;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn camera() -> CameraIntrinsics {
        CameraIntrinsics::new(475.0, 475.0, 320.0, 240.0).unwrap()
    }

    #[test]
    fn similarity_recovers_known_transform() {
        let src: Vec<Point3> = (0..6).map(|i| Point3::new(i as f64, (i * i) as f64 * 0.3, (i % 3) as f64)).collect();
        let r = Rotation3::from_euler_angles(0.3, -1.1, 2.0);
        let t = Vector3::new(5.0, -3.0, 100.0);
        let dst: Vec<Point3> = src.iter().map(|p| Point3::from(1.7 * (r * p.coords) + t)).collect();
        let (r2, s2, t2) = similarity(&src, &dst);
        assert!((s2 - 1.7).abs() < 1e-9);
        assert!(r2.angle_to(&r) < 1e-7, "{}", r2.angle_to(&r));
        assert!((t2 - t).norm() < 1e-9);
    }

    #[test]
    fn fully_known_pose_is_unchanged() {
        let s = HandSkeleton::standard();
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        let p = sample_pose(&mut rng, &s).unwrap().with_translation(Vector3::new(0.0, 0.0, 500.0));
        let pose = forward_kinematics(&p, &s);
        let out = complete_missing_joints(&PartialPose::from(&pose), &camera(), &s).unwrap();
        assert_eq!(out.positions, pose.positions);
    }

    #[test]
    fn two_known_joints_is_an_error() {
        let s = HandSkeleton::standard();
        let mut partial = PartialPose([None; NUM_JOINTS]);
        partial.0[0] = Some(Point3::new(0.0, 0.0, 500.0));
        partial.0[5] = Some(Point3::new(20.0, 80.0, 500.0));
        assert!(matches!(
            complete_missing_joints(&partial, &camera(), &s),
            Err(Error::TooFewJoints { found: 2, .. })
        ));
    }

    #[test]
    fn five_deleted_joints_are_recovered() {
        let s = HandSkeleton::standard();
        let mut rng = ChaCha8Rng::seed_from_u64(31);
        let mut worst = Vec::new();
        for _ in 0..20 {
            let p = sample_pose(&mut rng, &s).unwrap().with_translation(Vector3::new(0.0, 0.0, 500.0));
            let truth = forward_kinematics(&p, &s);
            let mut partial = PartialPose::from(&truth);
            let removed = sample(&mut rng, NUM_JOINTS, 5).into_vec();
            for i in &removed {
                partial.0[*i] = None;
            }
            let out = complete_missing_joints(&partial, &camera(), &s).unwrap();
            for i in 0..NUM_JOINTS {
                if !removed.contains(&i) {
                    assert_eq!(out.positions[i], truth.positions[i]);
                    assert!(out.visible[i]);
                }
            }
            worst.push(removed.iter().map(|i| (out.positions[*i] - truth.positions[*i]).norm()).fold(0.0, f64::max));
        }
        let ok = worst.iter().filter(|e| **e <= 30.0).count();
        assert!(ok >= 16, "{worst:?}");
    }

    #[test]
    fn backfill_rules() {
        let k = CameraIntrinsics::new(100.0, 100.0, 2.0, 0.0).unwrap();
        let raw = [400, 2000, 0, 400];
        let frame = DepthFrame::from_millimeters(4, 1, &raw, k).unwrap();
        let region = DepthRegion { z_min: 350.0, z_max: 650.0, centroid_depth: 500.0 };
        let pred = [
            (Joint::Wrist, (0.0, 0.0)),
            (Joint::IndexTip, (1.0, 0.0)),
            (Joint::ThumbTip, (2.0, 0.0)),
            (Joint::PinkyTip, (40.0, 0.0)),
        ];
        let out = backfill_depth(&pred, &frame, &region);
        assert_eq!(out.get(Joint::Wrist).unwrap().z, 400.0);
        assert_eq!(out.get(Joint::IndexTip).unwrap().z, 500.0);
        assert_eq!(out.get(Joint::ThumbTip).unwrap().z, 500.0);
        assert_eq!(out.get(Joint::PinkyTip).unwrap().z, 500.0);
        assert_eq!(out.get(Joint::Wrist).unwrap().x, -2.0 / 100.0 * 400.0);
        assert_eq!(out.known_count(), 4);
    }
}
