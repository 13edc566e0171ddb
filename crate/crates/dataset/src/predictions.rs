//! Per-frame estimator output as written by the command line tools.

use serde::{Deserialize, Serialize};
use voxhand_core::voxel::Detection;
use voxhand_core::{HandPose, PartialPose};

use crate::manifest::HandRecord;
use crate::{DatasetError, Result};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PredictionSet {
    /// Dataset the predictions were made on.
    pub dataset: String,
    pub frames: Vec<PredictionRecord>,
}

/// `hand` is absent when the estimator reported no detection.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PredictionRecord {
    pub frame: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub exemplar_id: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub distance: Option<u64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub position: Option<[usize; 3]>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub hand: Option<HandRecord>,
}

impl PredictionRecord {
    pub fn none(frame: impl Into<String>) -> Self {
        Self { frame: frame.into(), exemplar_id: None, distance: None, position: None, hand: None }
    }

    pub fn from_detection(frame: impl Into<String>, d: &Detection) -> Self {
        Self {
            frame: frame.into(),
            exemplar_id: Some(d.exemplar_id),
            distance: Some(d.distance),
            position: Some(d.position),
            hand: Some(HandRecord::from_pose("estimate", &d.pose)),
        }
    }

    pub fn pose(&self) -> Result<Option<HandPose>> {
        self.hand
            .as_ref()
            .map(|h| h.to_pose().map_err(|message| DatasetError::Annotation { frame: self.frame.clone(), hand: 0, message }))
            .transpose()
    }

    /// The prediction as scored: every joint counts as predicted.
    pub fn partial(&self) -> Result<Option<PartialPose>> {
        Ok(self.pose()?.map(|p| PartialPose(p.positions.map(Some))))
    }
}

impl PredictionSet {
    pub fn to_json(&self) -> String {
        let mut s = serde_json::to_string_pretty(self).expect("predictions serialize");
        s.push('\n');
        s
    }

    pub fn from_json(text: &str, path: &std::path::Path) -> Result<Self> {
        serde_json::from_str(text).map_err(|source| DatasetError::Json { path: path.to_owned(), source })
    }
}
