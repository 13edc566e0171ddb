//! Frame scoring, threshold curves and the derived reports.

mod report;

pub use report::{EvalReport, HIGHLIGHT_THRESHOLDS};

use serde::{Deserialize, Serialize};

use crate::camera::DepthFrame;
use crate::joints::{HandPose, PartialPose, NUM_JOINTS};
use crate::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ErrorMode {
    Max,
    Mean,
}

impl std::str::FromStr for ErrorMode {
    type Err = String;

    fn from_str(s: &str) -> std::result::Result<Self, String> {
        match s {
            "max" => Ok(ErrorMode::Max),
            "mean" => Ok(ErrorMode::Mean),
            _ => Err(format!("unknown error mode {s:?}, expected max or mean")),
        }
    }
}

/// Per-frame error in millimeters, or a failed detection.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum FrameError {
    Finite(f64),
    Failure,
}

impl FrameError {
    pub fn within(&self, threshold: f64) -> bool {
        matches!(self, FrameError::Finite(e) if *e <= threshold)
    }

    pub fn finite(&self) -> Option<f64> {
        match self {
            FrameError::Finite(e) => Some(*e),
            FrameError::Failure => None,
        }
    }

    /// Total order with failures last.
    pub fn cmp_total(&self, other: &FrameError) -> std::cmp::Ordering {
        match (self, other) {
            (FrameError::Finite(a), FrameError::Finite(b)) => a.total_cmp(b),
            (FrameError::Finite(_), FrameError::Failure) => std::cmp::Ordering::Less,
            (FrameError::Failure, FrameError::Finite(_)) => std::cmp::Ordering::Greater,
            (FrameError::Failure, FrameError::Failure) => std::cmp::Ordering::Equal,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FrameScore {
    pub error: FrameError,
    pub mode: ErrorMode,
    /// Index of the ground-truth hand the prediction was scored against.
    pub matched: Option<usize>,
}

/// Error of `prediction` against one hand over that hand's visible joints.
/// A visible joint the prediction lacks, or a hand with no visible joints,
/// is a failure.
fn hand_error(prediction: &PartialPose, hand: &HandPose, mode: ErrorMode) -> FrameError {
    let mut dists = Vec::with_capacity(NUM_JOINTS);
    for i in 0..NUM_JOINTS {
        if !hand.visible[i] {
            continue;
        }
        match prediction.0[i] {
            Some(p) => dists.push((p - hand.positions[i]).norm()),
            None => return FrameError::Failure,
        }
    }
    if dists.is_empty() {
        return FrameError::Failure;
    }
    FrameError::Finite(match mode {
        ErrorMode::Max => dists.iter().copied().fold(0.0, f64::max),
        ErrorMode::Mean => dists.iter().sum::<f64>() / dists.len() as f64,
    })
}

/// Scores one frame: no hands and no prediction is 0; a prediction on an
/// empty frame or a missed hand is a failure; otherwise the best match over
/// the ground-truth hands.
pub fn score_frame(prediction: Option<&PartialPose>, hands: &[HandPose], mode: ErrorMode) -> Result<FrameScore> {
    if let Some(p) = prediction {
        if p.0.iter().flatten().any(|q| !q.iter().all(|c| c.is_finite())) {
            return Err(Error::InvalidConfig("prediction contains non-finite coordinates".into()));
        }
    }
    let (error, matched) = match (prediction, hands.is_empty()) {
        (None, true) => (FrameError::Finite(0.0), None),
        (Some(_), true) | (None, false) => (FrameError::Failure, None),
        (Some(p), false) => {
            let (i, e) = hands
                .iter()
                .map(|h| hand_error(p, h, mode))
                .enumerate()
                .min_by(|a, b| a.1.cmp_total(&b.1).then(a.0.cmp(&b.0)))
                .expect("non-empty");
            (e, (e != FrameError::Failure).then_some(i))
        }
    };
    Ok(FrameScore { error, mode, matched })
}

/// Convenience for complete predictions.
pub fn score_pose(prediction: Option<&HandPose>, hands: &[HandPose], mode: ErrorMode) -> Result<FrameScore> {
    score_frame(prediction.map(PartialPose::from).as_ref(), hands, mode)
}

/// Fraction of frames with error at most each threshold. Failures never
/// count. An empty score list gives all zeros.
pub fn threshold_curve(scores: &[FrameError], thresholds: &[f64]) -> Result<Vec<f64>> {
    if thresholds.iter().any(|t| !t.is_finite()) || thresholds.windows(2).any(|w| w[0] > w[1]) {
        return Err(Error::UnsortedThresholds);
    }
    if scores.is_empty() {
        return Ok(vec![0.0; thresholds.len()]);
    }
    let mut finite: Vec<f64> = scores.iter().filter_map(FrameError::finite).collect();
    finite.sort_by(f64::total_cmp);
    let n = scores.len() as f64;
    Ok(thresholds.iter().map(|t| finite.partition_point(|e| e <= t) as f64 / n).collect())
}

/// 0 to 200 mm in 2.5 mm steps.
pub fn default_thresholds() -> Vec<f64> {
    (0..=80).map(|i| i as f64 * 2.5).collect()
}

/// Median with failures ordered last; `None` when the median is a failure
/// or there are no scores.
pub fn median_error(scores: &[FrameError]) -> Option<f64> {
    if scores.is_empty() {
        return None;
    }
    let mut s = scores.to_vec();
    s.sort_by(FrameError::cmp_total);
    let n = s.len();
    if n % 2 == 1 {
        s[n / 2].finite()
    } else {
        Some((s[n / 2 - 1].finite()? + s[n / 2].finite()?) / 2.0)
    }
}

/// Scores a whole prediction set against per-frame ground truth.
pub fn evaluate(
    predictions: &[Option<PartialPose>],
    ground_truth: &[Vec<HandPose>],
    mode: ErrorMode,
) -> Result<EvalReport> {
    if predictions.len() != ground_truth.len() {
        return Err(Error::FrameMismatch(format!(
            "{} predictions for {} frames",
            predictions.len(),
            ground_truth.len()
        )));
    }
    let frames = predictions
        .iter()
        .zip(ground_truth)
        .map(|(p, g)| score_frame(p.as_ref(), g, mode))
        .collect::<Result<Vec<_>>>()?;
    EvalReport::new(mode, frames, default_thresholds())
}

/// A depth frame with its ground-truth hands.
#[derive(Debug, Clone, PartialEq)]
pub struct LabeledFrame {
    pub frame: DepthFrame,
    pub hands: Vec<HandPose>,
}

/// Anything that turns a depth frame into at most one hand.
pub trait PoseEstimator {
    fn estimate(&self, frame: &DepthFrame) -> Result<Option<HandPose>>;
}

impl<F: Fn(&DepthFrame) -> Result<Option<HandPose>>> PoseEstimator for F {
    fn estimate(&self, frame: &DepthFrame) -> Result<Option<HandPose>> {
        self(frame)
    }
}

/// Train-by-test table of proportion correct at one threshold.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CrossDatasetMatrix {
    pub train: Vec<String>,
    pub test: Vec<String>,
    pub threshold: f64,
    /// `max[i][j]`: trained on `train[i]`, tested on `test[j]`, max-error.
    pub max: Vec<Vec<f64>>,
    pub mean: Vec<Vec<f64>>,
    /// Median max-error, `None` when more than half the frames failed.
    pub median_max: Vec<Vec<Option<f64>>>,
}

pub fn cross_dataset_matrix<E: PoseEstimator + Sync>(
    train: &[(String, E)],
    test: &[(String, Vec<LabeledFrame>)],
    threshold: f64,
) -> Result<CrossDatasetMatrix> {
    use rayon::prelude::*;
    if let Some((name, _)) = test.iter().find(|(_, frames)| frames.is_empty()) {
        return Err(Error::InvalidConfig(format!("test set {name:?} is empty")));
    }
    if test.is_empty() || train.is_empty() {
        return Err(Error::EmptyTestSet);
    }
    let mut out = CrossDatasetMatrix {
        train: train.iter().map(|t| t.0.clone()).collect(),
        test: test.iter().map(|t| t.0.clone()).collect(),
        threshold,
        max: Vec::new(),
        mean: Vec::new(),
        median_max: Vec::new(),
    };
    for (_, est) in train {
        let (mut rmax, mut rmean, mut rmed) = (Vec::new(), Vec::new(), Vec::new());
        for (_, frames) in test {
            let preds = frames.par_iter().map(|f| est.estimate(&f.frame)).collect::<Result<Vec<_>>>()?;
            let score = |mode| -> Result<Vec<FrameError>> {
                preds.iter().zip(frames).map(|(p, f)| Ok(score_pose(p.as_ref(), &f.hands, mode)?.error)).collect()
            };
            let (smax, smean) = (score(ErrorMode::Max)?, score(ErrorMode::Mean)?);
            rmax.push(threshold_curve(&smax, &[threshold])?[0]);
            rmean.push(threshold_curve(&smean, &[threshold])?[0]);
            rmed.push(median_error(&smax));
        }
        out.max.push(rmax);
        out.mean.push(rmean);
        out.median_max.push(rmed);
    }
    Ok(out)
}

/// Agreement between the first two annotators of every frame that has at
/// least two: the first is treated as ground truth, the second as a
/// prediction.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AgreementReport {
    pub mode: ErrorMode,
    pub frames_compared: usize,
    pub thresholds: Vec<f64>,
    pub curve: Vec<f64>,
    pub scores: Vec<FrameError>,
}

/// `frames[k]` lists `(annotator, pose)` pairs for frame `k`.
pub fn annotator_agreement(
    frames: &[Vec<(String, HandPose)>],
    mode: ErrorMode,
    thresholds: &[f64],
) -> Result<AgreementReport> {
    let mut scores = Vec::new();
    for annotations in frames {
        let Some((first, gt)) = annotations.first() else { continue };
        let Some((_, other)) = annotations.iter().find(|(a, _)| a != first) else { continue };
        scores.push(score_pose(Some(other), std::slice::from_ref(gt), mode)?.error);
    }
    if scores.is_empty() {
        return Err(Error::InsufficientAnnotators);
    }
    Ok(AgreementReport {
        mode,
        frames_compared: scores.len(),
        thresholds: thresholds.to_vec(),
        curve: threshold_curve(&scores, thresholds)?,
        scores,
    })
}

#[cfg(test)]
mod tests;
