//! Glue between rendered or loaded frames, the exemplar database and the
//! scorer.

use rayon::prelude::*;

use crate::camera::{DepthFrame, Point3};
use crate::eval::PoseEstimator;
use crate::joints::HandPose;
use crate::voxel::{
    build_exemplar_with, build_scene_volume, Detection, ExemplarDb, ExemplarOptions, GridConfig, Matcher,
    SearchOptions,
};
use crate::Result;

/// Grid used for single-hand desk scenes: 40 voxels of 10 mm covering
/// x, y in [-200, 200] and z in [300, 700] millimeters.
pub fn desk_grid() -> GridConfig {
    GridConfig { scene_side: 40, template_side: 30, voxel_size: 10.0, origin: Point3::new(-200.0, -200.0, 300.0) }
}

/// Outcome of turning training frames into templates.
#[derive(Debug, Clone, PartialEq)]
pub struct BuildReport {
    pub built: usize,
    /// `(input index, reason)` for every frame that produced no template.
    pub skipped: Vec<(usize, String)>,
}

/// Builds one template per `(frame, pose, source id)`, skipping frames whose
/// crop is unusable. Template ids follow input order.
pub fn build_db<'a, I>(items: I, config: &GridConfig, options: &ExemplarOptions) -> Result<(ExemplarDb, BuildReport)>
where
    I: IntoParallelIterator<Item = (&'a DepthFrame, &'a HandPose, String)>,
    I::Iter: IndexedParallelIterator,
{
    config.validate()?;
    let results: Vec<_> = items
        .into_par_iter()
        .map(|(frame, pose, id)| {
            build_exemplar_with(frame, pose, config, options).map(|mut t| {
                t.source_id = id;
                t
            })
        })
        .collect();
    let mut db = ExemplarDb::new(*config);
    let mut skipped = Vec::new();
    for (i, r) in results.into_iter().enumerate() {
        match r {
            Ok(t) => {
                db.push(t)?;
            }
            Err(e) => skipped.push((i, e.to_string())),
        }
    }
    let built = db.len();
    Ok((db, BuildReport { built, skipped }))
}

/// Nearest-exemplar pose estimator over a fixed database.
pub struct Estimator<'a> {
    matcher: Matcher<'a>,
    pub options: SearchOptions,
}

impl<'a> Estimator<'a> {
    pub fn new(db: &'a ExemplarDb, options: SearchOptions) -> Result<Self> {
        Ok(Self { matcher: Matcher::new(db)?, options })
    }

    pub fn db(&self) -> &ExemplarDb {
        self.matcher.db()
    }

    /// Scans the frame; `None` when nothing passes the threshold.
    pub fn detect(&self, frame: &DepthFrame) -> Result<Option<Detection>> {
        let scene = build_scene_volume(frame, &self.db().config)?;
        self.matcher.scan(&scene, &self.options)
    }

    /// Raw nearest neighbor, ignoring the threshold.
    pub fn nearest(&self, frame: &DepthFrame) -> Result<Option<Detection>> {
        let scene = build_scene_volume(frame, &self.db().config)?;
        self.matcher.nearest(&scene)
    }
}

impl PoseEstimator for Estimator<'_> {
    fn estimate(&self, frame: &DepthFrame) -> Result<Option<HandPose>> {
        Ok(self.detect(frame)?.map(|d| d.pose))
    }
}
