use super::skeleton::HandSkeleton;
use crate::camera::Point3;
use crate::joints::{HandPose, Joint};

/// A bone as a swept sphere between two joints.
#[derive(Debug, Clone, Copy)]
pub struct Capsule {
    pub a: Point3,
    pub b: Point3,
    pub radius: f64,
}

/// Bone pairs tested for self-intersection, identified by the joint each bone
/// ends at.
///
/// Checked: bones of different digits; phalanges beyond the first against
/// the palm bones; non-adjacent bones within one digit. Bones meeting at a
/// joint and the first phalanx against the palm are skipped since they touch
/// at rest.
pub fn bone_pairs() -> Vec<(Joint, Joint)> {
    let bones: Vec<Joint> = Joint::ALL.iter().copied().skip(1).collect();
    let mut pairs = Vec::new();
    for (i, &a) in bones.iter().enumerate() {
        for &b in &bones[i + 1..] {
            let (sa, sb) = (a.segment().unwrap(), b.segment().unwrap());
            let same_digit = a.digit() == b.digit();
            let keep = match (sa, sb) {
                (0, 0) => false,
                (0, s) | (s, 0) => s >= 2,
                _ if same_digit => sa.abs_diff(sb) >= 2,
                _ => true,
            };
            if keep {
                pairs.push((a, b));
            }
        }
    }
    pairs
}

/// Bone capsule ending at `j`, radius scaled with the hand.
pub(crate) fn bone_capsule(pose: &HandPose, skeleton: &HandSkeleton, j: Joint, scale: f64) -> Capsule {
    let parent = j.parent().expect("bones end at non-root joints");
    Capsule {
        a: pose.position(parent),
        b: pose.position(j),
        radius: skeleton.spec(j).radius * scale,
    }
}

/// Whether any checked pair of bone capsules overlaps.
pub fn self_intersects(pose: &HandPose, skeleton: &HandSkeleton) -> bool {
    let scale = skeleton.scale_of(pose);
    bone_pairs().into_iter().any(|(a, b)| {
        let ca = bone_capsule(pose, skeleton, a, scale);
        let cb = bone_capsule(pose, skeleton, b, scale);
        segment_distance(&ca.a, &ca.b, &cb.a, &cb.b) < ca.radius + cb.radius
    })
}

/// Shortest distance between segments `p1q1` and `p2q2`.
pub fn segment_distance(p1: &Point3, q1: &Point3, p2: &Point3, q2: &Point3) -> f64 {
    let d1 = q1 - p1;
    let d2 = q2 - p2;
    let r = p1 - p2;
    let a = d1.dot(&d1);
    let e = d2.dot(&d2);
    let f = d2.dot(&r);
    const EPS: f64 = 1e-12;
    let (s, t) = if a <= EPS && e <= EPS {
        (0.0, 0.0)
    } else if a <= EPS {
        (0.0, (f / e).clamp(0.0, 1.0))
    } else {
        let c = d1.dot(&r);
        if e <= EPS {
            ((-c / a).clamp(0.0, 1.0), 0.0)
        } else {
            let b = d1.dot(&d2);
            let denom = a * e - b * b;
            let mut s = if denom > EPS { ((b * f - c * e) / denom).clamp(0.0, 1.0) } else { 0.0 };
            let mut t = (b * s + f) / e;
            if t < 0.0 {
                t = 0.0;
                s = (-c / a).clamp(0.0, 1.0);
            } else if t > 1.0 {
                t = 1.0;
                s = ((b - c) / a).clamp(0.0, 1.0);
            }
            (s, t)
        }
    };
    ((p1 + d1 * s) - (p2 + d2 * t)).norm()
}
