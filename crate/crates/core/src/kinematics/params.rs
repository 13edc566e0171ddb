use serde::{Deserialize, Serialize};

use crate::camera::Vector3;
use crate::joints::Joint;

pub const NUM_PARAMS: usize = 31;

/// Names of the flat parameter vector entries, in [`PoseParams::to_vec`] order.
pub const PARAM_NAMES: [&str; NUM_PARAMS] = [
    "translation_x",
    "translation_y",
    "translation_z",
    "view_tilt",
    "view_yaw",
    "view_roll",
    "scale",
    "wrist_bend",
    "wrist_side",
    "thumb_cmc_bend",
    "thumb_cmc_side",
    "thumb_cmc_elongation",
    "thumb_mcp_bend",
    "thumb_mcp_side",
    "thumb_ip_bend",
    "index_mcp_bend",
    "index_mcp_side",
    "index_pip_bend",
    "index_dip_bend",
    "middle_mcp_bend",
    "middle_mcp_side",
    "middle_pip_bend",
    "middle_dip_bend",
    "ring_mcp_bend",
    "ring_mcp_side",
    "ring_pip_bend",
    "ring_dip_bend",
    "pinky_mcp_bend",
    "pinky_mcp_side",
    "pinky_pip_bend",
    "pinky_dip_bend",
];

pub(crate) const TRANSLATION: usize = 0;
pub(crate) const TILT: usize = 3;
pub(crate) const YAW: usize = 4;
pub(crate) const ROLL: usize = 5;
pub(crate) const SCALE: usize = 6;

/// Which flat parameters articulate a joint.
#[derive(Debug, Clone, Copy, Default)]
pub(crate) struct Dofs {
    pub bend: Option<usize>,
    pub side: Option<usize>,
    pub elongation: Option<usize>,
}

pub(crate) fn dofs(j: Joint) -> Dofs {
    use Joint::*;
    let full = |b: usize| Dofs { bend: Some(b), side: Some(b + 1), elongation: None };
    let bend = |b: usize| Dofs { bend: Some(b), ..Dofs::default() };
    match j {
        Wrist => full(7),
        ThumbCmc => Dofs { bend: Some(9), side: Some(10), elongation: Some(11) },
        ThumbMcp => full(12),
        ThumbIp => bend(14),
        IndexMcp => full(15),
        IndexPip => bend(17),
        IndexDip => bend(18),
        MiddleMcp => full(19),
        MiddlePip => bend(21),
        MiddleDip => bend(22),
        RingMcp => full(23),
        RingPip => bend(25),
        RingDip => bend(26),
        PinkyMcp => full(27),
        PinkyPip => bend(29),
        PinkyDip => bend(30),
        ThumbTip | IndexTip | MiddleTip | RingTip | PinkyTip => Dofs::default(),
    }
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Serialize, Deserialize)]
pub struct Articulation {
    /// Flexion (negative) and extension (positive), radians.
    pub bend: f64,
    /// Side-to-side abduction, radians.
    pub side: f64,
}

/// Camera viewpoint as rotations about x (tilt), y (yaw) and z (roll),
/// composed as `Rz(roll) * Ry(yaw) * Rx(tilt)`.
#[derive(Debug, Clone, Copy, Default, PartialEq, Serialize, Deserialize)]
pub struct Viewpoint {
    pub tilt: f64,
    pub yaw: f64,
    pub roll: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ThumbParams {
    pub cmc: Articulation,
    pub cmc_elongation: f64,
    pub mcp: Articulation,
    pub ip_bend: f64,
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Serialize, Deserialize)]
pub struct FingerParams {
    pub mcp: Articulation,
    pub pip_bend: f64,
    pub dip_bend: f64,
}

/// Kinematic parameters of a hand. Twist is not modelled.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PoseParams {
    /// Wrist position in camera coordinates, millimeters.
    pub translation: Vector3,
    pub viewpoint: Viewpoint,
    /// Isotropic scale applied to every bone.
    pub scale: f64,
    pub wrist: Articulation,
    pub thumb: ThumbParams,
    /// Index, middle, ring, pinky.
    pub fingers: [FingerParams; 4],
}

impl Default for ThumbParams {
    fn default() -> Self {
        Self {
            cmc: Articulation::default(),
            cmc_elongation: 1.0,
            mcp: Articulation::default(),
            ip_bend: 0.0,
        }
    }
}

impl Default for PoseParams {
    fn default() -> Self {
        Self::rest()
    }
}

impl PoseParams {
    /// Rest pose at the camera origin: zero angles, unit scale.
    pub fn rest() -> Self {
        Self {
            translation: Vector3::zeros(),
            viewpoint: Viewpoint::default(),
            scale: 1.0,
            wrist: Articulation::default(),
            thumb: ThumbParams::default(),
            fingers: [FingerParams::default(); 4],
        }
    }

    pub fn with_translation(mut self, t: Vector3) -> Self {
        self.translation = t;
        self
    }

    pub fn to_vec(&self) -> [f64; NUM_PARAMS] {
        let mut v = [0.0; NUM_PARAMS];
        v[0..3].copy_from_slice(self.translation.as_slice());
        v[TILT] = self.viewpoint.tilt;
        v[YAW] = self.viewpoint.yaw;
        v[ROLL] = self.viewpoint.roll;
        v[SCALE] = self.scale;
        v[7] = self.wrist.bend;
        v[8] = self.wrist.side;
        let t = &self.thumb;
        v[9..15].copy_from_slice(&[t.cmc.bend, t.cmc.side, t.cmc_elongation, t.mcp.bend, t.mcp.side, t.ip_bend]);
        for (k, f) in self.fingers.iter().enumerate() {
            v[15 + 4 * k..19 + 4 * k].copy_from_slice(&[f.mcp.bend, f.mcp.side, f.pip_bend, f.dip_bend]);
        }
        v
    }

    pub fn from_vec(v: &[f64; NUM_PARAMS]) -> Self {
        let art = |b: usize| Articulation { bend: v[b], side: v[b + 1] };
        let mut fingers = [FingerParams::default(); 4];
        for (k, f) in fingers.iter_mut().enumerate() {
            let b = 15 + 4 * k;
            *f = FingerParams { mcp: art(b), pip_bend: v[b + 2], dip_bend: v[b + 3] };
        }
        Self {
            translation: Vector3::new(v[0], v[1], v[2]),
            viewpoint: Viewpoint { tilt: v[TILT], yaw: v[YAW], roll: v[ROLL] },
            scale: v[SCALE],
            wrist: art(7),
            thumb: ThumbParams { cmc: art(9), cmc_elongation: v[11], mcp: art(12), ip_bend: v[14] },
            fingers,
        }
    }

    pub fn is_finite(&self) -> bool {
        self.to_vec().iter().all(|x| x.is_finite())
    }
}
