//! Kinematic hand model: skeleton table, forward kinematics, rejection
//! sampling of poses, capsule self-intersection and least-squares IK.

mod complete;
mod fk;
mod ik;
mod intersect;
mod params;
mod sample;
mod skeleton;

pub use complete::{backfill_depth, complete_missing_joints, DepthRegion};
pub use fk::{forward_kinematics, joint_jacobian, Chain};
pub use ik::{ik_fit, projected_jacobian, solve_targets, IkConfig, IkSolution, IkTarget, Label};
pub use intersect::{bone_pairs, self_intersects, segment_distance, Capsule};
pub use params::{Articulation, FingerParams, PoseParams, ThumbParams, Viewpoint, NUM_PARAMS, PARAM_NAMES};
pub use sample::{sample_pose, PoseSampler, SamplingRanges, Span};
pub use skeleton::{HandSkeleton, JointSpec};
