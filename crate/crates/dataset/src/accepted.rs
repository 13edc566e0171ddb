//! Append-only log of annotations accepted through the annotation service,
//! one JSON object per line.

use std::fs::{self, OpenOptions};
use std::io::Write;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::dataset::{Annotation, Dataset};
use crate::manifest::HandRecord;
use crate::{DatasetError, LockFile, Result};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AcceptedRecord {
    pub frame: String,
    #[serde(flatten)]
    pub hand: HandRecord,
}

/// The log file plus its parsed contents. Opening takes the writer lock.
#[derive(Debug)]
pub struct AnnotationLog {
    path: PathBuf,
    records: Vec<AcceptedRecord>,
    _lock: LockFile,
}

/// Reads a log without locking it. A missing file is an empty log.
pub fn read_accepted(path: &Path) -> Result<Vec<AcceptedRecord>> {
    let text = match fs::read_to_string(path) {
        Ok(t) => t,
        Err(e) if e.kind() == std::io::ErrorKind::NotFound => return Ok(Vec::new()),
        Err(e) => return Err(DatasetError::Io { path: path.to_owned(), source: e }),
    };
    let mut out = Vec::new();
    for (i, line) in text.lines().enumerate() {
        if line.trim().is_empty() {
            continue;
        }
        let r: AcceptedRecord = serde_json::from_str(line).map_err(|source| DatasetError::Json { path: path.to_owned(), source })?;
        r.hand
            .to_pose()
            .map_err(|message| DatasetError::Annotation { frame: r.frame.clone(), hand: i, message })?;
        out.push(r);
    }
    Ok(out)
}

impl AnnotationLog {
    pub fn open(path: impl Into<PathBuf>) -> Result<Self> {
        let path = path.into();
        let lock = LockFile::acquire(&path)?;
        let records = read_accepted(&path)?;
        Ok(Self { path, records, _lock: lock })
    }

    pub fn path(&self) -> &Path {
        &self.path
    }

    pub fn records(&self) -> &[AcceptedRecord] {
        &self.records
    }

    /// Appends unless the same annotator's latest entry for the frame is
    /// identical. Returns whether a line was written.
    pub fn append(&mut self, record: AcceptedRecord) -> Result<bool> {
        let latest = self.records.iter().rev().find(|r| r.frame == record.frame && r.hand.annotator == record.hand.annotator);
        if latest == Some(&record) {
            return Ok(false);
        }
        let mut line = serde_json::to_string(&record).expect("record serializes");
        line.push('\n');
        let mut f = OpenOptions::new().create(true).append(true).open(&self.path).map_err(DatasetError::io(&self.path))?;
        f.write_all(line.as_bytes()).map_err(DatasetError::io(&self.path))?;
        f.sync_data().map_err(DatasetError::io(&self.path))?;
        self.records.push(record);
        Ok(true)
    }
}

/// Ground truth and accepted annotations per frame. An accepted entry
/// replaces any earlier one by the same annotator on that frame; records for
/// unknown frames are ignored.
pub fn merged_annotations(ds: &Dataset, accepted: &[AcceptedRecord]) -> Vec<Vec<Annotation>> {
    let mut out: Vec<Vec<Annotation>> = (0..ds.len()).map(|i| ds.annotations(i).to_vec()).collect();
    for r in accepted {
        let Some(i) = ds.position(&r.frame) else { continue };
        let pose = r.hand.to_pose().expect("validated on read");
        let a = Annotation { annotator: r.hand.annotator.clone(), pose };
        match out[i].iter_mut().find(|x| x.annotator == a.annotator) {
            Some(slot) => *slot = a,
            None => out[i].push(a),
        }
    }
    out
}
