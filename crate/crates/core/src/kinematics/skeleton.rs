use nalgebra::Rotation3;
use serde::Deserialize;

use crate::camera::Vector3;
use crate::joints::{HandPose, Joint, NUM_JOINTS};
use crate::{Error, Result};

const STANDARD_TABLE: &str = include_str!("../../data/skeleton_v1.json");
const TABLE_VERSION: u32 = 1;

/// Rest geometry of one joint, expressed in its parent's frame.
#[derive(Debug, Clone, PartialEq)]
pub struct JointSpec {
    /// Offset from the parent joint, millimeters, before scaling.
    pub offset: Vector3,
    /// Frame orientation relative to the parent frame before articulation.
    pub rest_rotation: Rotation3<f64>,
    /// Radius of the bone capsule ending at this joint.
    pub radius: f64,
}

/// A fixed 21-joint hand skeleton rooted at the wrist.
#[derive(Debug, Clone, PartialEq)]
pub struct HandSkeleton {
    joints: [JointSpec; NUM_JOINTS],
}

#[derive(Deserialize)]
struct TableFile {
    version: u32,
    units: String,
    joints: Vec<TableJoint>,
}

#[derive(Deserialize)]
struct TableJoint {
    name: String,
    offset: [f64; 3],
    rest_rotation: [f64; 3],
    radius: f64,
}

impl HandSkeleton {
    /// The bundled anthropometric table.
    pub fn standard() -> Self {
        Self::from_json(STANDARD_TABLE).expect("bundled skeleton table is valid")
    }

    /// Parses a skeleton table. Joints must appear in canonical order.
    pub fn from_json(text: &str) -> Result<Self> {
        let file: TableFile =
            serde_json::from_str(text).map_err(|e| Error::Skeleton(e.to_string()))?;
        if file.version != TABLE_VERSION {
            return Err(Error::Skeleton(format!("unsupported table version {}", file.version)));
        }
        if file.units != "millimeters" {
            return Err(Error::Skeleton(format!("units must be millimeters, got {:?}", file.units)));
        }
        if file.joints.len() != NUM_JOINTS {
            return Err(Error::Skeleton(format!("expected {NUM_JOINTS} joints, got {}", file.joints.len())));
        }
        let mut specs = Vec::with_capacity(NUM_JOINTS);
        for (j, entry) in Joint::ALL.iter().zip(&file.joints) {
            if entry.name != j.name() {
                return Err(Error::Skeleton(format!("joint {} out of order (expected {})", entry.name, j)));
            }
            let offset = Vector3::from(entry.offset);
            if *j != Joint::Wrist && !(offset.norm() > 0.0) {
                return Err(Error::Skeleton(format!("bone ending at {j} has zero length")));
            }
            if !(entry.radius > 0.0) {
                return Err(Error::Skeleton(format!("joint {j} has non-positive radius")));
            }
            let [rx, ry, rz] = entry.rest_rotation;
            specs.push(JointSpec {
                offset,
                rest_rotation: Rotation3::from_euler_angles(rx, ry, rz),
                radius: entry.radius,
            });
        }
        let joints: [JointSpec; NUM_JOINTS] = specs.try_into().expect("length checked");
        Ok(Self { joints })
    }

    #[inline]
    pub fn spec(&self, j: Joint) -> &JointSpec {
        &self.joints[j.index()]
    }

    pub fn bone_length(&self, j: Joint) -> f64 {
        self.spec(j).offset.norm()
    }

    /// Sum of all bone lengths at unit scale.
    pub fn total_length(&self) -> f64 {
        Joint::ALL.iter().map(|j| self.bone_length(*j)).sum()
    }

    /// Global scale of a posed hand, read off the wrist-to-middle-knuckle
    /// bone, which no articulation or elongation changes.
    pub fn scale_of(&self, pose: &HandPose) -> f64 {
        (pose.position(Joint::MiddleMcp) - pose.position(Joint::Wrist)).norm()
            / self.bone_length(Joint::MiddleMcp)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn standard_table_loads() {
        let s = HandSkeleton::standard();
        assert!(s.total_length() > 500.0);
        for j in Joint::ALL.iter().skip(1) {
            assert!(s.bone_length(*j) > 0.0);
        }
    }

    #[test]
    fn rejects_bad_tables() {
        assert!(HandSkeleton::from_json("{}").is_err());
        let swapped = STANDARD_TABLE.replacen("\"thumb_cmc\"", "\"thumb_xxx\"", 1);
        assert!(HandSkeleton::from_json(&swapped).is_err());
        let inches = STANDARD_TABLE.replacen("millimeters", "inches", 1);
        assert!(HandSkeleton::from_json(&inches).is_err());
    }
}
