//! The fixed 21-joint hand vocabulary and pose containers.

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::camera::{Point3, Vector3};
use crate::Error;

pub const NUM_JOINTS: usize = 21;

/// Hand joints in canonical order: wrist, then thumb, index, middle, ring and
/// pinky from base to tip.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(into = "&'static str", try_from = "String")]
pub enum Joint {
    Wrist,
    ThumbCmc,
    ThumbMcp,
    ThumbIp,
    ThumbTip,
    IndexMcp,
    IndexPip,
    IndexDip,
    IndexTip,
    MiddleMcp,
    MiddlePip,
    MiddleDip,
    MiddleTip,
    RingMcp,
    RingPip,
    RingDip,
    RingTip,
    PinkyMcp,
    PinkyPip,
    PinkyDip,
    PinkyTip,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Digit {
    Thumb,
    Index,
    Middle,
    Ring,
    Pinky,
}

impl Digit {
    pub const ALL: [Digit; 5] = [Digit::Thumb, Digit::Index, Digit::Middle, Digit::Ring, Digit::Pinky];

    /// The four joints of this digit from base to tip.
    pub fn joints(self) -> [Joint; 4] {
        let base = 1 + 4 * self as usize;
        [0, 1, 2, 3].map(|k| Joint::ALL[base + k])
    }
}

const NAMES: [&str; NUM_JOINTS] = [
    "wrist",
    "thumb_cmc",
    "thumb_mcp",
    "thumb_ip",
    "thumb_tip",
    "index_mcp",
    "index_pip",
    "index_dip",
    "index_tip",
    "middle_mcp",
    "middle_pip",
    "middle_dip",
    "middle_tip",
    "ring_mcp",
    "ring_pip",
    "ring_dip",
    "ring_tip",
    "pinky_mcp",
    "pinky_pip",
    "pinky_dip",
    "pinky_tip",
];

impl Joint {
    pub const ALL: [Joint; NUM_JOINTS] = [
        Joint::Wrist,
        Joint::ThumbCmc,
        Joint::ThumbMcp,
        Joint::ThumbIp,
        Joint::ThumbTip,
        Joint::IndexMcp,
        Joint::IndexPip,
        Joint::IndexDip,
        Joint::IndexTip,
        Joint::MiddleMcp,
        Joint::MiddlePip,
        Joint::MiddleDip,
        Joint::MiddleTip,
        Joint::RingMcp,
        Joint::RingPip,
        Joint::RingDip,
        Joint::RingTip,
        Joint::PinkyMcp,
        Joint::PinkyPip,
        Joint::PinkyDip,
        Joint::PinkyTip,
    ];

    #[inline]
    pub fn index(self) -> usize {
        self as usize
    }

    pub fn name(self) -> &'static str {
        NAMES[self.index()]
    }

    pub fn from_index(i: usize) -> Option<Joint> {
        Joint::ALL.get(i).copied()
    }

    pub fn parent(self) -> Option<Joint> {
        match self {
            Joint::Wrist => None,
            j => {
                let i = j.index();
                // digit bases hang off the wrist
                if (i - 1) % 4 == 0 {
                    Some(Joint::Wrist)
                } else {
                    Some(Joint::ALL[i - 1])
                }
            }
        }
    }

    pub fn digit(self) -> Option<Digit> {
        match self {
            Joint::Wrist => None,
            j => Some(Digit::ALL[(j.index() - 1) / 4]),
        }
    }

    /// Position along the digit, 0 at the base joint.
    pub fn segment(self) -> Option<usize> {
        self.digit().map(|_| (self.index() - 1) % 4)
    }
}

impl fmt::Display for Joint {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Joint {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        NAMES
            .iter()
            .position(|n| *n == s)
            .map(|i| Joint::ALL[i])
            .ok_or_else(|| Error::UnknownJoint(s.to_owned()))
    }
}

impl From<Joint> for &'static str {
    fn from(j: Joint) -> Self {
        j.name()
    }
}

impl TryFrom<String> for Joint {
    type Error = Error;

    fn try_from(s: String) -> Result<Self, Self::Error> {
        s.parse()
    }
}

/// Full 3D hand pose with per-joint visibility.
#[derive(Debug, Clone, PartialEq)]
pub struct HandPose {
    pub positions: [Point3; NUM_JOINTS],
    pub visible: [bool; NUM_JOINTS],
}

impl HandPose {
    pub fn new(positions: [Point3; NUM_JOINTS]) -> Self {
        Self { positions, visible: [true; NUM_JOINTS] }
    }

    #[inline]
    pub fn position(&self, j: Joint) -> Point3 {
        self.positions[j.index()]
    }

    pub fn visible_count(&self) -> usize {
        self.visible.iter().filter(|v| **v).count()
    }

    pub fn is_finite(&self) -> bool {
        self.positions.iter().all(|p| p.iter().all(|c| c.is_finite()))
    }

    /// Mean of all joint positions.
    pub fn centroid(&self) -> Point3 {
        let sum = self.positions.iter().fold(Vector3::zeros(), |acc, p| acc + p.coords);
        Point3::from(sum / NUM_JOINTS as f64)
    }

    pub fn translated(&self, offset: &Vector3) -> HandPose {
        HandPose { positions: self.positions.map(|p| p + offset), visible: self.visible }
    }
}

/// A pose where some joints are unknown.
#[derive(Debug, Clone, PartialEq)]
pub struct PartialPose(pub [Option<Point3>; NUM_JOINTS]);

impl PartialPose {
    pub fn known_count(&self) -> usize {
        self.0.iter().filter(|p| p.is_some()).count()
    }

    pub fn get(&self, j: Joint) -> Option<Point3> {
        self.0[j.index()]
    }
}

impl From<&HandPose> for PartialPose {
    fn from(p: &HandPose) -> Self {
        PartialPose(p.positions.map(Some))
    }
}
