//! The versioned dataset manifest.

use std::collections::HashSet;

use serde::{Deserialize, Serialize};
use voxhand_core::{CameraIntrinsics, HandPose, Joint, Point3, NUM_JOINTS};

use crate::{DatasetError, Result};

pub const SCHEMA_VERSION: u32 = 1;
pub const MANIFEST_FILE: &str = "manifest.json";
pub const MILLIMETERS: &str = "millimeters";

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DatasetManifest {
    pub schema_version: u32,
    pub name: String,
    /// Must be `"millimeters"`; absent units are rejected rather than assumed.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub units: Option<String>,
    pub intrinsics: CameraIntrinsics,
    pub width: usize,
    pub height: usize,
    pub frames: Vec<FrameEntry>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FrameEntry {
    pub id: String,
    /// Depth PNG path relative to the manifest directory.
    pub depth: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub rgb: Option<String>,
    #[serde(default)]
    pub hands: Vec<HandRecord>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct HandRecord {
    pub annotator: String,
    pub joints: Vec<JointRecord>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct JointRecord {
    pub name: String,
    pub position: [f64; 3],
    pub visible: bool,
}

impl DatasetManifest {
    pub fn new(name: impl Into<String>, intrinsics: CameraIntrinsics, width: usize, height: usize) -> Self {
        Self {
            schema_version: SCHEMA_VERSION,
            name: name.into(),
            units: Some(MILLIMETERS.to_owned()),
            intrinsics,
            width,
            height,
            frames: Vec::new(),
        }
    }

    pub fn from_json(text: &str, path: &std::path::Path) -> Result<Self> {
        serde_json::from_str(text).map_err(|source| DatasetError::Json { path: path.to_owned(), source })
    }

    pub fn to_json(&self) -> String {
        let mut s = serde_json::to_string_pretty(self).expect("manifest serializes");
        s.push('\n');
        s
    }

    /// Checks everything that does not touch the filesystem.
    pub fn validate(&self) -> Result<()> {
        if self.schema_version != SCHEMA_VERSION {
            return Err(DatasetError::UnsupportedVersion { found: self.schema_version, supported: SCHEMA_VERSION });
        }
        match self.units.as_deref() {
            None => return Err(DatasetError::MissingUnits),
            Some(MILLIMETERS) => {}
            Some(other) => return Err(DatasetError::UnitMismatch(other.to_owned())),
        }
        self.intrinsics.validate_for(self.width, self.height)?;
        let mut ids = HashSet::new();
        for f in &self.frames {
            if !ids.insert(f.id.as_str()) {
                return Err(DatasetError::Manifest { frame: f.id.clone(), message: "duplicate frame id".into() });
            }
            for (h, hand) in f.hands.iter().enumerate() {
                hand.to_pose().map_err(|message| DatasetError::Annotation { frame: f.id.clone(), hand: h, message })?;
            }
        }
        Ok(())
    }
}

impl HandRecord {
    pub fn from_pose(annotator: impl Into<String>, pose: &HandPose) -> Self {
        let joints = Joint::ALL
            .iter()
            .map(|j| {
                let p = pose.position(*j);
                JointRecord { name: j.name().to_owned(), position: [p.x, p.y, p.z], visible: pose.visible[j.index()] }
            })
            .collect();
        Self { annotator: annotator.into(), joints }
    }

    /// Joints may appear in any order but each of the 21 names exactly once.
    pub fn to_pose(&self) -> std::result::Result<HandPose, String> {
        if self.joints.len() != NUM_JOINTS {
            return Err(format!("expected {NUM_JOINTS} joints, found {}", self.joints.len()));
        }
        let mut positions = [Point3::origin(); NUM_JOINTS];
        let mut visible = [false; NUM_JOINTS];
        let mut seen = [false; NUM_JOINTS];
        for r in &self.joints {
            let j: Joint = r.name.parse().map_err(|_| format!("unknown joint name {:?}", r.name))?;
            if std::mem::replace(&mut seen[j.index()], true) {
                return Err(format!("joint {:?} listed twice", r.name));
            }
            if !r.position.iter().all(|c| c.is_finite()) {
                return Err(format!("joint {:?} has a non-finite position", r.name));
            }
            positions[j.index()] = Point3::from(r.position);
            visible[j.index()] = r.visible;
        }
        Ok(HandPose { positions, visible })
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn manifest() -> DatasetManifest {
        let k = CameraIntrinsics::new(200.0, 200.0, 80.0, 80.0).unwrap();
        let mut m = DatasetManifest::new("t", k, 160, 160);
        let pose = HandPose::new(std::array::from_fn(|i| Point3::new(i as f64, 0.5, 400.0)));
        m.frames.push(FrameEntry {
            id: "a".into(),
            depth: "depth/a.png".into(),
            rgb: None,
            hands: vec![HandRecord::from_pose("synth", &pose)],
        });
        m
    }

    #[test]
    fn json_round_trip() {
        let m = manifest();
        let back = DatasetManifest::from_json(&m.to_json(), "x".as_ref()).unwrap();
        assert_eq!(back, m);
        back.validate().unwrap();
    }

    #[test]
    fn missing_units_rejected() {
        let mut m = manifest();
        m.units = None;
        let text = m.to_json();
        assert!(!text.contains("units"));
        let back = DatasetManifest::from_json(&text, "x".as_ref()).unwrap();
        assert!(matches!(back.validate(), Err(DatasetError::MissingUnits)));
        m.units = Some("meters".into());
        assert!(matches!(m.validate(), Err(DatasetError::UnitMismatch(u)) if u == "meters"));
    }

    #[test]
    fn annotation_errors_name_the_entry() {
        let mut m = manifest();
        m.frames[0].hands[0].joints.pop();
        let err = m.validate().unwrap_err().to_string();
        assert!(err.contains("\"a\"") && err.contains("hand 0") && err.contains("21"), "{err}");

        let mut m = manifest();
        m.frames[0].hands[0].joints[3].name = "thumb_knuckle".into();
        let err = m.validate().unwrap_err().to_string();
        assert!(err.contains("thumb_knuckle"), "{err}");

        let mut m = manifest();
        m.frames[0].hands[0].joints[4].name = "wrist".into();
        assert!(m.validate().unwrap_err().to_string().contains("twice"));
    }

    #[test]
    fn joint_order_is_free() {
        let m = manifest();
        let mut hand = m.frames[0].hands[0].clone();
        let want = hand.to_pose().unwrap();
        hand.joints.reverse();
        assert_eq!(hand.to_pose().unwrap(), want);
    }

    #[test]
    fn version_and_duplicates() {
        let mut m = manifest();
        m.schema_version = 7;
        assert!(matches!(m.validate(), Err(DatasetError::UnsupportedVersion { found: 7, .. })));
        let mut m = manifest();
        m.frames.push(m.frames[0].clone());
        assert!(m.validate().unwrap_err().to_string().contains("duplicate"));
    }
}
