use nalgebra::Rotation3;

use super::params::{dofs, PoseParams, NUM_PARAMS, ROLL, SCALE, TILT, TRANSLATION, YAW};
use super::skeleton::HandSkeleton;
use crate::camera::{Point3, Vector3};
use crate::joints::{HandPose, Joint, NUM_JOINTS};

/// World-space joint frames produced by forward kinematics.
#[derive(Debug, Clone)]
pub struct Chain {
    pub positions: [Point3; NUM_JOINTS],
    /// Joint frame orientation after articulation.
    pub frames: [Rotation3<f64>; NUM_JOINTS],
    /// Joint frame orientation before articulation (parent frame times rest).
    pub rest_frames: [Rotation3<f64>; NUM_JOINTS],
}

fn axis_rotation(axis: usize, angle: f64) -> Rotation3<f64> {
    let a = [Vector3::x_axis(), Vector3::y_axis(), Vector3::z_axis()][axis];
    Rotation3::from_axis_angle(&a, angle)
}

pub(crate) fn view_rotation(v: &[f64; NUM_PARAMS]) -> Rotation3<f64> {
    Rotation3::from_euler_angles(v[TILT], v[YAW], v[ROLL])
}

impl Chain {
    pub fn compute(params: &PoseParams, skeleton: &HandSkeleton) -> Chain {
        Self::from_flat(&params.to_vec(), skeleton)
    }

    pub(crate) fn from_flat(v: &[f64; NUM_PARAMS], skeleton: &HandSkeleton) -> Chain {
        let mut positions = [Point3::origin(); NUM_JOINTS];
        let mut frames = [Rotation3::identity(); NUM_JOINTS];
        let mut rest_frames = [Rotation3::identity(); NUM_JOINTS];
        let scale = v[SCALE];
        for j in Joint::ALL {
            let spec = skeleton.spec(j);
            let (parent_pos, parent_frame, elongation) = match j.parent() {
                None => (Point3::new(v[TRANSLATION], v[TRANSLATION + 1], v[TRANSLATION + 2]), view_rotation(v), 1.0),
                Some(p) => {
                    let e = dofs(p).elongation.map_or(1.0, |i| v[i]);
                    (positions[p.index()], frames[p.index()], e)
                }
            };
            let i = j.index();
            positions[i] = parent_pos + parent_frame * (spec.offset * (scale * elongation));
            rest_frames[i] = parent_frame * spec.rest_rotation;
            let d = dofs(j);
            let side = d.side.map_or(0.0, |k| v[k]);
            let bend = d.bend.map_or(0.0, |k| v[k]);
            frames[i] = rest_frames[i] * axis_rotation(2, side) * axis_rotation(0, bend);
        }
        Chain { positions, frames, rest_frames }
    }
}

/// Joint positions for the given parameters. Every joint is marked visible.
pub fn forward_kinematics(params: &PoseParams, skeleton: &HandSkeleton) -> HandPose {
    HandPose::new(Chain::compute(params, skeleton).positions)
}

pub(crate) fn is_descendant(d: Joint, j: Joint) -> bool {
    let mut cur = d.parent();
    while let Some(p) = cur {
        if p == j {
            return true;
        }
        cur = p.parent();
    }
    false
}

/// Analytic derivative of every joint position with respect to every flat
/// parameter: `jac[joint][param]`.
pub fn joint_jacobian(params: &PoseParams, skeleton: &HandSkeleton) -> Vec<[Vector3; NUM_PARAMS]> {
    let v = params.to_vec();
    let chain = Chain::from_flat(&v, skeleton);
    let root = chain.positions[0];
    let mut jac = vec![[Vector3::zeros(); NUM_PARAMS]; NUM_JOINTS];

    let roll_axis = Vector3::z();
    let yaw_axis = axis_rotation(2, v[ROLL]) * Vector3::y();
    let tilt_axis = axis_rotation(2, v[ROLL]) * axis_rotation(1, v[YAW]) * Vector3::x();

    for (d, row) in jac.iter_mut().enumerate() {
        let p = chain.positions[d];
        let rel = p - root;
        for k in 0..3 {
            row[TRANSLATION + k][k] = 1.0;
        }
        row[TILT] = tilt_axis.cross(&rel);
        row[YAW] = yaw_axis.cross(&rel);
        row[ROLL] = roll_axis.cross(&rel);
        if v[SCALE] != 0.0 {
            row[SCALE] = rel / v[SCALE];
        }
    }

    for j in Joint::ALL {
        let ji = j.index();
        let dof = dofs(j);
        let pivot = chain.positions[ji];
        let side_axis = chain.rest_frames[ji] * Vector3::z();
        let bend_axis = chain.rest_frames[ji] * axis_rotation(2, dof.side.map_or(0.0, |k| v[k])) * Vector3::x();
        for d in Joint::ALL {
            if !is_descendant(d, j) {
                continue;
            }
            let rel = chain.positions[d.index()] - pivot;
            let row = &mut jac[d.index()];
            if let Some(k) = dof.bend {
                row[k] = bend_axis.cross(&rel);
            }
            if let Some(k) = dof.side {
                row[k] = side_axis.cross(&rel);
            }
        }
        if let Some(k) = dof.elongation {
            // child bones of j stretch; everything below a child moves with it
            for c in Joint::ALL.iter().filter(|c| c.parent() == Some(j)) {
                let stretch = chain.frames[ji] * skeleton.spec(*c).offset * v[SCALE];
                for d in Joint::ALL {
                    if d == *c || is_descendant(d, *c) {
                        jac[d.index()][k] = stretch;
                    }
                }
            }
        }
    }
    jac
}
