//! Depth-based hand pose estimation with volumetric exemplars.
//!
//! A depth frame is re-projected into a metric voxel grid where every voxel
//! behind an observed surface counts as occupied. Because every column of such
//! a grid is a suffix run of ones, the 3D Hamming distance between a hand
//! template and a scene subvolume reduces to an L1 distance between their
//! z-projection count maps, which is what the search in [`voxel`] scans.
//!
//! The remaining modules provide the pieces around that search: a 21-joint
//! kinematic hand ([`kinematics`]), a capsule renderer for synthetic training
//! data ([`synth`]) and the frame scoring protocol with threshold curves
//! ([`eval`]).

pub mod camera;
mod error;
pub mod eval;
pub mod joints;
pub mod kinematics;
pub mod pipeline;
pub mod synth;
pub mod voxel;

pub use camera::{CameraIntrinsics, DepthFrame, Point3, Vector3};
pub use error::{Error, Result};
pub use joints::{HandPose, Joint, PartialPose, NUM_JOINTS};
