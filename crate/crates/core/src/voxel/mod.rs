//! Occlusion-filled voxel volumes and the scanning-volume exemplar search.
//!
//! Volumes are never stored densely. Because a voxel behind an observed
//! surface counts as occupied, each `(x, y)` column is a suffix run of ones
//! starting at its nearest surface, so a column is fully described by the
//! index of that first occupied voxel.

mod dense;
mod distance;
mod exemplar;
mod grid;
mod search;
mod volume;

pub use dense::{hamming_distance_dense, DenseVolume};
pub use distance::projected_l1_distance;
pub use exemplar::{build_exemplar, build_exemplar_with, ExemplarDb, ExemplarOptions, ExemplarTemplate};
pub use grid::GridConfig;
pub use search::{prune_candidates, scan, scan_with, Detection, DetectionThreshold, Matcher, SearchOptions};
pub use volume::{build_scene_volume, SceneVolume};
