//! Canonical on-disk formats for depth hand datasets.
//!
//! A dataset is a directory holding `manifest.json` and 16-bit grayscale
//! depth PNGs (millimeters, 0 = no measurement). The manifest carries camera
//! intrinsics and inline per-frame hand annotations keyed by the fixed joint
//! vocabulary. Exemplar databases use a little-endian binary layout with a
//! checksum per record; see `docs/formats.md` for both schemas.

pub mod accepted;
mod dataset;
mod depth_png;
mod error;
pub mod exemplar_db;
pub mod import;
mod lock;
pub mod manifest;
pub mod predictions;

pub use accepted::{merged_annotations, read_accepted, AcceptedRecord, AnnotationLog};
pub use dataset::{load_dataset, Annotation, Dataset, DatasetWriter, FrameData};
pub use depth_png::{decode_depth_png, encode_depth_png, encode_gray8_png, read_depth_png, write_depth_png};
pub use error::{DatasetError, Result};
pub use exemplar_db::{load_exemplar_db, save_exemplar_db};
pub use import::{import_dataset, AdapterRegistry, ImportAdapter};
pub use lock::LockFile;
pub use manifest::{DatasetManifest, FrameEntry, HandRecord, JointRecord, MANIFEST_FILE, SCHEMA_VERSION};
pub use predictions::{PredictionRecord, PredictionSet};
