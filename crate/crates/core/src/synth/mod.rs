//! Synthetic depth frames of sampled hands, room-like backgrounds and the
//! random affine warps used to multiply them.

mod background;
mod generate;
mod raycast;

pub use background::{augment_background, augment_with, room_scene, seed_backgrounds, AffineParams};
pub use generate::{generate_one, generate_set, GenerateConfig, NoiseConfig, Placement, SynthSet};
pub use raycast::Primitive;

use crate::camera::{CameraIntrinsics, DepthFrame, MAX_DEPTH_MM};
use crate::joints::{HandPose, Joint, NUM_JOINTS};
use crate::kinematics::{forward_kinematics, Capsule, HandSkeleton, PoseParams};
use crate::{Error, Result};

/// Extra depth slack, millimeters, allowed in front of a joint's own surface
/// before it counts as occluded.
pub const VISIBILITY_SLACK: f64 = 10.0;

#[derive(Debug, Clone)]
pub struct RenderConfig {
    pub intrinsics: CameraIntrinsics,
    pub width: usize,
    pub height: usize,
    /// Surfaces outside `[near, far]` millimeters are not recorded.
    pub near: f64,
    pub far: f64,
    pub skeleton: HandSkeleton,
}

impl Default for RenderConfig {
    fn default() -> Self {
        Self {
            intrinsics: CameraIntrinsics::new(200.0, 200.0, 80.0, 80.0).expect("valid intrinsics"),
            width: 160,
            height: 160,
            near: 100.0,
            far: 3000.0,
            skeleton: HandSkeleton::standard(),
        }
    }
}

impl RenderConfig {
    pub fn validate(&self) -> Result<()> {
        if self.width == 0 || self.height == 0 {
            return Err(Error::InvalidConfig("image size must be positive".into()));
        }
        if !(self.near > 0.0 && self.near < self.far && self.far < MAX_DEPTH_MM as f64) {
            return Err(Error::InvalidConfig(format!(
                "depth range [{}, {}] must satisfy 0 < near < far < {MAX_DEPTH_MM}",
                self.near, self.far
            )));
        }
        self.intrinsics.validate_for(self.width, self.height)
    }
}

/// A rendered hand with its exact annotation.
#[derive(Debug, Clone, PartialEq)]
pub struct SynthSample {
    pub frame: DepthFrame,
    pub pose: HandPose,
    pub params: PoseParams,
    /// Rendered radius at each joint, millimeters.
    pub joint_radii: [f64; NUM_JOINTS],
}

/// Z-buffer render of `prims`, depth rounded to whole millimeters.
pub fn render_primitives(prims: &[Primitive], config: &RenderConfig) -> Result<DepthFrame> {
    config.validate()?;
    let (w, h) = (config.width, config.height);
    let k = config.intrinsics;
    let mut zbuf = vec![f64::INFINITY; w * h];
    for p in prims {
        let (u0, u1, v0, v1) = p.screen_bounds(&k, w, h);
        for v in v0..v1 {
            for u in u0..u1 {
                let ray = k.ray(u as f64, v as f64);
                let d = ray.normalize();
                if let Some(t) = p.hit(&d) {
                    let z = t * d.z;
                    let cell = &mut zbuf[v * w + u];
                    if z < *cell {
                        *cell = z;
                    }
                }
            }
        }
    }
    let mm: Vec<u16> = zbuf
        .iter()
        .map(|z| if *z >= config.near && *z <= config.far { z.round() as u16 } else { 0 })
        .collect();
    DepthFrame::from_millimeters(w, h, &mm, k)
}

/// Capsules making up a posed hand: one per bone, links between neighboring
/// knuckles to close the palm, and a sphere at the wrist.
pub fn hand_primitives(pose: &HandPose, skeleton: &HandSkeleton) -> Vec<Primitive> {
    let scale = skeleton.scale_of(pose);
    let radius = |j: Joint| skeleton.spec(j).radius * scale;
    let mut out: Vec<Primitive> = Joint::ALL
        .iter()
        .filter_map(|j| {
            j.parent().map(|p| Primitive::Capsule(Capsule { a: pose.position(p), b: pose.position(*j), radius: radius(*j) }))
        })
        .collect();
    let knuckles = [Joint::IndexMcp, Joint::MiddleMcp, Joint::RingMcp, Joint::PinkyMcp];
    for pair in knuckles.windows(2) {
        out.push(Primitive::Capsule(Capsule {
            a: pose.position(pair[0]),
            b: pose.position(pair[1]),
            radius: radius(pair[0]).min(radius(pair[1])),
        }));
    }
    let wrist = pose.position(Joint::Wrist);
    out.push(Primitive::Capsule(Capsule { a: wrist, b: wrist, radius: radius(Joint::Wrist) }));
    out
}

/// A joint is visible when the surface at its pixel is no nearer than its
/// own capsule surface plus [`VISIBILITY_SLACK`].
pub fn joint_visibility(pose: &HandPose, radii: &[f64; NUM_JOINTS], frame: &DepthFrame) -> [bool; NUM_JOINTS] {
    let k = frame.intrinsics();
    std::array::from_fn(|i| {
        let p = pose.positions[i];
        let Ok((u, v)) = k.project(&p) else { return false };
        frame
            .sample(u, v)
            .is_some_and(|s| s as f64 >= p.z - radii[i] - VISIBILITY_SLACK)
    })
}

pub fn render_depth(params: &PoseParams, config: &RenderConfig) -> Result<SynthSample> {
    config.validate()?;
    let skel = &config.skeleton;
    let mut pose = forward_kinematics(params, skel);
    let scale = skel.scale_of(&pose);
    let joint_radii: [f64; NUM_JOINTS] = std::array::from_fn(|i| skel.spec(Joint::ALL[i]).radius * scale);
    if pose.positions.iter().zip(&joint_radii).any(|(p, r)| p.z - r <= 0.0) {
        return Err(Error::OutsideFrustum);
    }
    let frame = render_primitives(&hand_primitives(&pose, skel), config)?;
    if frame.valid_count() == 0 {
        return Err(Error::OutsideFrustum);
    }
    pose.visible = joint_visibility(&pose, &joint_radii, &frame);
    Ok(SynthSample { frame, pose, params: params.clone(), joint_radii })
}

/// Per-pixel nearer surface of two frames.
pub fn min_depth(a: &DepthFrame, b: &DepthFrame) -> Result<DepthFrame> {
    if !a.same_geometry(b) {
        return Err(Error::FrameMismatch("frames differ in size or intrinsics".into()));
    }
    let (da, db) = (a.to_millimeters(), b.to_millimeters());
    let mm: Vec<u16> = da
        .iter()
        .zip(&db)
        .map(|(x, y)| match (*x, *y) {
            (0, y) => y,
            (x, 0) => x,
            (x, y) => x.min(y),
        })
        .collect();
    DepthFrame::from_millimeters(a.width(), a.height(), &mm, *a.intrinsics())
}

/// Places the hand in front of `background`, keeping the nearer surface per
/// pixel, and recomputes joint visibility.
pub fn composite(hand: &SynthSample, background: &DepthFrame) -> Result<SynthSample> {
    let frame = min_depth(&hand.frame, background)?;
    let mut pose = hand.pose.clone();
    pose.visible = joint_visibility(&pose, &hand.joint_radii, &frame);
    Ok(SynthSample { frame, pose, params: hand.params.clone(), joint_radii: hand.joint_radii })
}
