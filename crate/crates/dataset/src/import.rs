//! Adapters from external dataset layouts to the canonical manifest.

use std::collections::BTreeMap;
use std::fs;
use std::path::{Path, PathBuf};

use voxhand_core::{CameraIntrinsics, Joint, NUM_JOINTS};

use crate::depth_png::read_depth_png;
use crate::manifest::{DatasetManifest, FrameEntry, HandRecord, JointRecord};
use crate::{DatasetError, Result};

pub trait ImportAdapter: Send + Sync {
    fn id(&self) -> &str;
    fn import(&self, root: &Path) -> Result<DatasetManifest>;
}

pub struct AdapterRegistry {
    adapters: Vec<Box<dyn ImportAdapter>>,
}

impl Default for AdapterRegistry {
    fn default() -> Self {
        Self { adapters: vec![Box::new(PngJointsTxt::default())] }
    }
}

impl AdapterRegistry {
    pub fn empty() -> Self {
        Self { adapters: Vec::new() }
    }

    /// Adds an adapter, replacing any with the same id.
    pub fn register(&mut self, adapter: Box<dyn ImportAdapter>) {
        self.adapters.retain(|a| a.id() != adapter.id());
        self.adapters.push(adapter);
    }

    pub fn ids(&self) -> Vec<String> {
        let mut ids: Vec<String> = self.adapters.iter().map(|a| a.id().to_owned()).collect();
        ids.sort();
        ids
    }

    pub fn import(&self, id: &str, root: &Path) -> Result<DatasetManifest> {
        let adapter = self
            .adapters
            .iter()
            .find(|a| a.id() == id)
            .ok_or_else(|| DatasetError::UnknownAdapter { id: id.to_owned(), registered: self.ids() })?;
        adapter.import(root)
    }
}

/// Imports with the default registry.
pub fn import_dataset(id: &str, root: impl AsRef<Path>) -> Result<DatasetManifest> {
    AdapterRegistry::default().import(id, root.as_ref())
}

/// Saves an imported manifest next to the data it references.
pub fn write_imported(root: &Path, manifest: &DatasetManifest) -> Result<PathBuf> {
    crate::dataset::save_manifest(root, manifest)
}

/// External joint name to canonical joint.
pub type JointMap = BTreeMap<String, Joint>;

/// Canonical names plus the numbered per-digit scheme (`thumb1`..`thumb4`,
/// `index1`..`index4`, ..., `little1`..`little4` or `pinky1`..`pinky4`,
/// base to tip).
pub fn default_joint_map() -> JointMap {
    let mut map: JointMap = Joint::ALL.iter().map(|j| (j.name().to_owned(), *j)).collect();
    map.insert("palm_base".into(), Joint::Wrist);
    for (d, names) in [
        (0, &["thumb"][..]),
        (1, &["index"][..]),
        (2, &["middle"][..]),
        (3, &["ring"][..]),
        (4, &["pinky", "little"][..]),
    ] {
        for name in names {
            for k in 0..4 {
                map.insert(format!("{name}{}", k + 1), Joint::ALL[1 + 4 * d + k]);
            }
        }
    }
    map
}

/// Directory layout:
///
/// ```text
/// camera.txt          fu fv cu cv
/// depth/<stem>.png    16-bit depth, millimeters
/// joints/<stem>.txt   one "<name> <x> <y> <z> [visible]" line per joint
/// ```
///
/// Frames without a joints file get zero hands. `#` starts a comment.
pub struct PngJointsTxt {
    pub map: JointMap,
    pub annotator: String,
}

impl Default for PngJointsTxt {
    fn default() -> Self {
        Self { map: default_joint_map(), annotator: "imported".into() }
    }
}

impl PngJointsTxt {
    fn joints(&self, path: &Path) -> Result<HandRecord> {
        let bad = |message: String| DatasetError::Import { path: path.to_owned(), message };
        let text = fs::read_to_string(path).map_err(DatasetError::io(path))?;
        let mut slots: [Option<JointRecord>; NUM_JOINTS] = Default::default();
        for (n, line) in data_lines(&text) {
            let fields: Vec<&str> = line.split_whitespace().collect();
            if !(4..=5).contains(&fields.len()) {
                return Err(bad(format!("line {n}: expected name x y z [visible]")));
            }
            let joint = *self.map.get(fields[0]).ok_or_else(|| bad(format!("line {n}: unmapped joint name {:?}", fields[0])))?;
            let mut position = [0.0; 3];
            for (p, f) in position.iter_mut().zip(&fields[1..4]) {
                *p = f.parse().ok().filter(|v: &f64| v.is_finite()).ok_or_else(|| bad(format!("line {n}: bad coordinate {f:?}")))?;
            }
            let visible = match fields.get(4) {
                None | Some(&"1") => true,
                Some(&"0") => false,
                Some(v) => return Err(bad(format!("line {n}: visibility must be 0 or 1, got {v:?}"))),
            };
            let slot = &mut slots[joint.index()];
            if slot.is_some() {
                return Err(bad(format!("line {n}: {joint} given twice")));
            }
            *slot = Some(JointRecord { name: joint.name().to_owned(), position, visible });
        }
        let mut joints = Vec::with_capacity(NUM_JOINTS);
        for (j, s) in Joint::ALL.iter().zip(slots) {
            joints.push(s.ok_or_else(|| bad(format!("no entry maps to {j}")))?);
        }
        Ok(HandRecord { annotator: self.annotator.clone(), joints })
    }
}

fn data_lines(text: &str) -> impl Iterator<Item = (usize, &str)> {
    text.lines()
        .enumerate()
        .map(|(i, l)| (i + 1, l.split('#').next().unwrap_or("").trim()))
        .filter(|(_, l)| !l.is_empty())
}

impl ImportAdapter for PngJointsTxt {
    fn id(&self) -> &str {
        "png-joints-txt"
    }

    fn import(&self, root: &Path) -> Result<DatasetManifest> {
        let cam_path = root.join("camera.txt");
        let text = fs::read_to_string(&cam_path).map_err(DatasetError::io(&cam_path))?;
        let vals: Vec<f64> = data_lines(&text)
            .flat_map(|(_, l)| l.split_whitespace().map(str::parse).collect::<Vec<_>>())
            .collect::<std::result::Result<_, _>>()
            .map_err(|e| DatasetError::Import { path: cam_path.clone(), message: format!("{e}") })?;
        let [fu, fv, cu, cv] = vals[..] else {
            return Err(DatasetError::Import { path: cam_path, message: "expected fu fv cu cv".into() });
        };
        let k = CameraIntrinsics::new(fu, fv, cu, cv)?;

        let depth_dir = root.join("depth");
        let mut stems: Vec<String> = fs::read_dir(&depth_dir)
            .map_err(DatasetError::io(&depth_dir))?
            .filter_map(|e| e.ok())
            .filter_map(|e| {
                let name = e.file_name().into_string().ok()?;
                name.strip_suffix(".png").map(str::to_owned)
            })
            .collect();
        stems.sort();
        if stems.is_empty() {
            return Err(DatasetError::Import { path: depth_dir, message: "no .png files".into() });
        }

        let mut size = None;
        let mut frames = Vec::with_capacity(stems.len());
        for stem in stems {
            let rel = format!("depth/{stem}.png");
            let png_path = root.join(&rel);
            let depth = read_depth_png(&png_path, k)?;
            match size {
                None => size = Some((depth.width(), depth.height())),
                Some(s) if s != (depth.width(), depth.height()) => {
                    return Err(DatasetError::Import { path: png_path, message: format!("size differs from first frame {s:?}") })
                }
                _ => {}
            }
            let jpath = root.join("joints").join(format!("{stem}.txt"));
            let hands = if jpath.is_file() { vec![self.joints(&jpath)?] } else { vec![] };
            frames.push(FrameEntry { id: stem, depth: rel, rgb: None, hands });
        }
        let (width, height) = size.expect("at least one frame");
        let name = root.canonicalize().ok().and_then(|p| p.file_name().map(|n| n.to_string_lossy().into_owned()));
        let mut m = DatasetManifest::new(name.unwrap_or_else(|| "imported".into()), k, width, height);
        m.frames = frames;
        m.validate()?;
        Ok(m)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn default_map_covers_every_joint_per_scheme() {
        let map = default_joint_map();
        for j in Joint::ALL {
            assert_eq!(map[j.name()], j);
        }
        assert_eq!(map["thumb1"], Joint::ThumbCmc);
        assert_eq!(map["index4"], Joint::IndexTip);
        assert_eq!(map["little2"], Joint::PinkyPip);
        assert_eq!(map["pinky3"], Joint::PinkyDip);
    }

    #[test]
    fn unknown_id_lists_registered() {
        let err = AdapterRegistry::default().import("kinect-v1", Path::new(".")).unwrap_err();
        let msg = err.to_string();
        assert!(msg.contains("kinect-v1") && msg.contains("png-joints-txt"), "{msg}");
        assert!(matches!(AdapterRegistry::empty().import("x", Path::new(".")), Err(DatasetError::UnknownAdapter { .. })));
    }
}
