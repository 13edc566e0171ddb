use std::collections::HashSet;
use std::fs;
use std::path::{Path, PathBuf};

use voxhand_core::eval::LabeledFrame;
use voxhand_core::{CameraIntrinsics, DepthFrame, HandPose};

use crate::depth_png::{read_depth_png, write_depth_png};
use crate::lock::{write_atomic, LockFile};
use crate::manifest::{DatasetManifest, FrameEntry, HandRecord, MANIFEST_FILE};
use crate::{DatasetError, Result};

/// One ground-truth hand and who labeled it.
#[derive(Debug, Clone, PartialEq)]
pub struct Annotation {
    pub annotator: String,
    pub pose: HandPose,
}

#[derive(Debug, Clone, PartialEq)]
pub struct FrameData {
    pub index: usize,
    pub id: String,
    pub depth: DepthFrame,
    pub hands: Vec<Annotation>,
}

/// A loaded manifest. Depth images are decoded on demand.
#[derive(Debug, Clone)]
pub struct Dataset {
    root: PathBuf,
    manifest: DatasetManifest,
    hands: Vec<Vec<Annotation>>,
}

/// Opens a dataset from its directory or its manifest file.
pub fn load_dataset(path: impl AsRef<Path>) -> Result<Dataset> {
    Dataset::open(path)
}

impl Dataset {
    pub fn open(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let (root, file) = if path.is_dir() {
            (path.to_owned(), path.join(MANIFEST_FILE))
        } else {
            (path.parent().unwrap_or(Path::new(".")).to_owned(), path.to_owned())
        };
        let text = fs::read_to_string(&file).map_err(DatasetError::io(&file))?;
        let manifest = DatasetManifest::from_json(&text, &file)?;
        Self::from_manifest(root, manifest)
    }

    /// Validates `manifest` against the files under `root`.
    pub fn from_manifest(root: impl Into<PathBuf>, manifest: DatasetManifest) -> Result<Self> {
        let root = root.into();
        manifest.validate()?;
        let mut hands = Vec::with_capacity(manifest.frames.len());
        for f in &manifest.frames {
            for rel in std::iter::once(&f.depth).chain(f.rgb.as_ref()) {
                let p = root.join(rel);
                if !p.is_file() {
                    return Err(DatasetError::MissingFile { frame: f.id.clone(), path: p });
                }
            }
            // validate() already proved these convert
            hands.push(
                f.hands
                    .iter()
                    .map(|h| Annotation { annotator: h.annotator.clone(), pose: h.to_pose().expect("validated") })
                    .collect(),
            );
        }
        Ok(Self { root, manifest, hands })
    }

    pub fn root(&self) -> &Path {
        &self.root
    }

    pub fn manifest(&self) -> &DatasetManifest {
        &self.manifest
    }

    pub fn name(&self) -> &str {
        &self.manifest.name
    }

    pub fn intrinsics(&self) -> CameraIntrinsics {
        self.manifest.intrinsics
    }

    pub fn len(&self) -> usize {
        self.manifest.frames.len()
    }

    pub fn is_empty(&self) -> bool {
        self.manifest.frames.is_empty()
    }

    pub fn entry(&self, index: usize) -> Option<&FrameEntry> {
        self.manifest.frames.get(index)
    }

    pub fn position(&self, id: &str) -> Option<usize> {
        self.manifest.frames.iter().position(|f| f.id == id)
    }

    pub fn annotations(&self, index: usize) -> &[Annotation] {
        &self.hands[index]
    }

    pub fn rgb_path(&self, index: usize) -> Option<PathBuf> {
        self.manifest.frames[index].rgb.as_ref().map(|r| self.root.join(r))
    }

    /// Decodes the depth image of frame `index`.
    pub fn depth(&self, index: usize) -> Result<DepthFrame> {
        let entry = &self.manifest.frames[index];
        let path = self.root.join(&entry.depth);
        let frame = read_depth_png(&path, self.manifest.intrinsics)?;
        if frame.width() != self.manifest.width || frame.height() != self.manifest.height {
            return Err(DatasetError::Manifest {
                frame: entry.id.clone(),
                message: format!(
                    "depth image is {}x{}, manifest says {}x{}",
                    frame.width(),
                    frame.height(),
                    self.manifest.width,
                    self.manifest.height
                ),
            });
        }
        Ok(frame)
    }

    pub fn frame(&self, index: usize) -> Result<FrameData> {
        Ok(FrameData {
            index,
            id: self.manifest.frames[index].id.clone(),
            depth: self.depth(index)?,
            hands: self.hands[index].clone(),
        })
    }

    /// Frames in manifest order, decoded lazily.
    pub fn frames(&self) -> impl Iterator<Item = Result<FrameData>> + '_ {
        (0..self.len()).map(|i| self.frame(i))
    }

    /// Every frame decoded with its ground truth hands, for evaluation.
    pub fn labeled_frames(&self) -> Result<Vec<LabeledFrame>> {
        self.frames()
            .map(|f| f.map(|f| LabeledFrame { frame: f.depth, hands: f.hands.into_iter().map(|a| a.pose).collect() }))
            .collect()
    }
}

/// Writes a dataset directory. Holds the manifest lock until finished or
/// dropped.
#[derive(Debug)]
pub struct DatasetWriter {
    root: PathBuf,
    manifest: DatasetManifest,
    ids: HashSet<String>,
    _lock: LockFile,
}

impl DatasetWriter {
    pub fn create(
        root: impl Into<PathBuf>,
        name: impl Into<String>,
        intrinsics: CameraIntrinsics,
        width: usize,
        height: usize,
    ) -> Result<Self> {
        let root = root.into();
        intrinsics.validate_for(width, height)?;
        let depth_dir = root.join("depth");
        fs::create_dir_all(&depth_dir).map_err(DatasetError::io(&depth_dir))?;
        let lock = LockFile::acquire(&root.join(MANIFEST_FILE))?;
        Ok(Self {
            root,
            manifest: DatasetManifest::new(name, intrinsics, width, height),
            ids: HashSet::new(),
            _lock: lock,
        })
    }

    /// Writes `depth/<id>.png` and records the frame.
    pub fn add_frame(&mut self, id: &str, depth: &DepthFrame, hands: &[Annotation]) -> Result<()> {
        let bad = |message: &str| DatasetError::Manifest { frame: id.to_owned(), message: message.to_owned() };
        if id.is_empty() || !id.chars().all(|c| c.is_ascii_alphanumeric() || "-_.".contains(c)) || id.starts_with('.') {
            return Err(bad("frame ids may only contain ASCII letters, digits, '-', '_' and '.'"));
        }
        if depth.width() != self.manifest.width
            || depth.height() != self.manifest.height
            || *depth.intrinsics() != self.manifest.intrinsics
        {
            return Err(bad("depth frame geometry differs from the dataset camera"));
        }
        if !self.ids.insert(id.to_owned()) {
            return Err(bad("duplicate frame id"));
        }
        let rel = format!("depth/{id}.png");
        write_depth_png(&self.root.join(&rel), depth)?;
        self.manifest.frames.push(FrameEntry {
            id: id.to_owned(),
            depth: rel,
            rgb: None,
            hands: hands.iter().map(|a| HandRecord::from_pose(a.annotator.clone(), &a.pose)).collect(),
        });
        Ok(())
    }

    pub fn len(&self) -> usize {
        self.manifest.frames.len()
    }

    pub fn is_empty(&self) -> bool {
        self.manifest.frames.is_empty()
    }

    /// Writes the manifest and returns its path.
    pub fn finish(self) -> Result<PathBuf> {
        let path = self.root.join(MANIFEST_FILE);
        write_atomic(&path, self.manifest.to_json().as_bytes())?;
        Ok(path)
    }
}

/// Writes `manifest` into `root` under the writer lock.
pub(crate) fn save_manifest(root: &Path, manifest: &DatasetManifest) -> Result<PathBuf> {
    manifest.validate()?;
    let path = root.join(MANIFEST_FILE);
    let _lock = LockFile::acquire(&path)?;
    write_atomic(&path, manifest.to_json().as_bytes())?;
    Ok(path)
}

#[cfg(test)]
mod tests {
    use super::*;
    use voxhand_core::Point3;

    fn k() -> CameraIntrinsics {
        CameraIntrinsics::new(20.0, 20.0, 4.0, 3.0).unwrap()
    }

    fn pose() -> HandPose {
        let mut p = HandPose::new(std::array::from_fn(|i| Point3::new(i as f64 * 1.5, -2.0, 300.0 + i as f64)));
        p.visible[7] = false;
        p
    }

    #[test]
    fn minimal_one_frame_dataset() {
        let dir = tempfile::tempdir().unwrap();
        let mut w = DatasetWriter::create(dir.path(), "one", k(), 8, 6).unwrap();
        let mut raw = vec![0u16; 48];
        raw[10] = 512;
        let depth = DepthFrame::from_millimeters(8, 6, &raw, k()).unwrap();
        w.add_frame("f0", &depth, &[Annotation { annotator: "a".into(), pose: pose() }]).unwrap();
        w.finish().unwrap();
        assert!(!dir.path().join("manifest.json.lock").exists());

        let ds = load_dataset(dir.path()).unwrap();
        assert_eq!(ds.len(), 1);
        let f = ds.frame(0).unwrap();
        assert_eq!(f.hands.len(), 1);
        assert_eq!(f.hands[0].pose.positions.len(), 21);
        assert_eq!(f.hands[0].pose, pose());
        assert_eq!(f.depth, depth);
        let via_file = load_dataset(dir.path().join("manifest.json")).unwrap();
        assert_eq!(via_file.manifest(), ds.manifest());
    }

    #[test]
    fn missing_png_names_the_path() {
        let dir = tempfile::tempdir().unwrap();
        let mut m = DatasetManifest::new("x", k(), 8, 6);
        m.frames.push(FrameEntry { id: "gone".into(), depth: "depth/gone.png".into(), rgb: None, hands: vec![] });
        fs::write(dir.path().join("manifest.json"), m.to_json()).unwrap();
        let err = load_dataset(dir.path()).unwrap_err();
        assert!(matches!(&err, DatasetError::MissingFile { frame, .. } if frame == "gone"));
        assert!(err.to_string().contains("gone.png"), "{err}");
    }

    #[test]
    fn zero_hand_frames_and_bad_ids() {
        let dir = tempfile::tempdir().unwrap();
        let mut w = DatasetWriter::create(dir.path(), "z", k(), 8, 6).unwrap();
        let depth = DepthFrame::empty(8, 6, k()).unwrap();
        w.add_frame("empty", &depth, &[]).unwrap();
        assert!(w.add_frame("empty", &depth, &[]).is_err());
        assert!(w.add_frame("../evil", &depth, &[]).is_err());
        let other = DepthFrame::empty(8, 7, CameraIntrinsics::new(20.0, 20.0, 4.0, 3.0).unwrap()).unwrap();
        assert!(w.add_frame("small", &other, &[]).is_err());
        w.finish().unwrap();
        let ds = load_dataset(dir.path()).unwrap();
        assert!(ds.annotations(0).is_empty());
        assert_eq!(ds.labeled_frames().unwrap()[0].hands.len(), 0);
    }

    #[test]
    fn writers_are_exclusive() {
        let dir = tempfile::tempdir().unwrap();
        let _w = DatasetWriter::create(dir.path(), "a", k(), 8, 6).unwrap();
        let err = DatasetWriter::create(dir.path(), "b", k(), 8, 6).unwrap_err();
        assert!(matches!(err, DatasetError::Locked(_)));
        // readers are not blocked by the lock
        assert!(matches!(load_dataset(dir.path()), Err(DatasetError::Io { .. })));
    }
}
