//! Binary exemplar database.
//!
//! All integers and floats are little-endian. The header is followed by one
//! length-prefixed record per template; each carries a CRC-32 of its payload.
//! The exact layout is in `docs/formats.md`.

use std::fs;
use std::io::{Cursor, Read};
use std::path::Path;

use byteorder::{LittleEndian as LE, ReadBytesExt, WriteBytesExt};
use voxhand_core::voxel::{ExemplarDb, ExemplarTemplate, GridConfig};
use voxhand_core::{HandPose, Point3, NUM_JOINTS};

use crate::lock::{write_atomic, LockFile};
use crate::{DatasetError, Result};

pub const MAGIC: [u8; 4] = *b"VXEX";
pub const FORMAT_VERSION: u32 = 1;
pub const HEADER_LEN: usize = 60;

pub fn encode_exemplar_db(db: &ExemplarDb) -> Vec<u8> {
    let c = &db.config;
    let mut out = Vec::with_capacity(HEADER_LEN + db.len() * (64 + 2 * c.template_side * c.template_side + 24 * NUM_JOINTS));
    out.extend_from_slice(&MAGIC);
    out.write_u32::<LE>(FORMAT_VERSION).unwrap();
    out.write_u32::<LE>(c.scene_side as u32).unwrap();
    out.write_u32::<LE>(c.template_side as u32).unwrap();
    out.write_f64::<LE>(c.voxel_size).unwrap();
    for v in c.origin.iter() {
        out.write_f64::<LE>(*v).unwrap();
    }
    out.write_u64::<LE>(db.len() as u64).unwrap();
    let crc = crc32fast::hash(&out);
    out.write_u32::<LE>(crc).unwrap();
    debug_assert_eq!(out.len(), HEADER_LEN);

    let mut payload = Vec::new();
    for (id, t) in db.templates().iter().enumerate() {
        payload.clear();
        payload.write_u64::<LE>(id as u64).unwrap();
        for a in t.anchor {
            payload.write_i64::<LE>(a).unwrap();
        }
        payload.write_u32::<LE>(t.source_id.len() as u32).unwrap();
        payload.extend_from_slice(t.source_id.as_bytes());
        for count in &t.proj {
            payload.write_u16::<LE>(*count).unwrap();
        }
        for p in &t.pose.positions {
            for v in p.iter() {
                payload.write_f64::<LE>(*v).unwrap();
            }
        }
        let mask = t.pose.visible.iter().enumerate().fold(0u32, |m, (i, v)| m | ((*v as u32) << i));
        payload.write_u32::<LE>(mask).unwrap();
        out.write_u32::<LE>(payload.len() as u32).unwrap();
        out.extend_from_slice(&payload);
        out.write_u32::<LE>(crc32fast::hash(&payload)).unwrap();
    }
    out
}

pub fn decode_exemplar_db(bytes: &[u8], path: &Path) -> Result<ExemplarDb> {
    let truncated = |section: &str| DatasetError::Truncated { path: path.to_owned(), section: section.to_owned() };
    let corrupt = |message: String| DatasetError::Corrupt { path: path.to_owned(), message };

    if bytes.len() < 8 {
        return Err(if bytes.len() >= 4 && bytes[..4] != MAGIC {
            DatasetError::BadMagic { path: path.to_owned() }
        } else {
            truncated("header")
        });
    }
    if bytes[..4] != MAGIC {
        return Err(DatasetError::BadMagic { path: path.to_owned() });
    }
    let version = u32::from_le_bytes(bytes[4..8].try_into().unwrap());
    if version != FORMAT_VERSION {
        return Err(DatasetError::VersionMismatch { path: path.to_owned(), found: version, supported: FORMAT_VERSION });
    }
    if bytes.len() < HEADER_LEN {
        return Err(truncated("header"));
    }
    let stored = u32::from_le_bytes(bytes[56..60].try_into().unwrap());
    if crc32fast::hash(&bytes[..56]) != stored {
        return Err(DatasetError::Checksum { path: path.to_owned(), section: "header".into() });
    }

    let mut r = Cursor::new(&bytes[8..56]);
    let scene_side = r.read_u32::<LE>().unwrap() as usize;
    let template_side = r.read_u32::<LE>().unwrap() as usize;
    let voxel_size = r.read_f64::<LE>().unwrap();
    let origin = Point3::new(r.read_f64::<LE>().unwrap(), r.read_f64::<LE>().unwrap(), r.read_f64::<LE>().unwrap());
    let count = r.read_u64::<LE>().unwrap();
    let config = GridConfig { scene_side, template_side, voxel_size, origin };
    config.validate().map_err(|e| corrupt(e.to_string()))?;

    let n2 = template_side * template_side;
    let mut db = ExemplarDb::new(config);
    let mut pos = HEADER_LEN;
    for id in 0..count {
        let section = format!("record {id}");
        let len_bytes = bytes.get(pos..pos + 4).ok_or_else(|| truncated(&section))?;
        let len = u32::from_le_bytes(len_bytes.try_into().unwrap()) as usize;
        let payload = bytes.get(pos + 4..pos + 4 + len).ok_or_else(|| truncated(&section))?;
        let crc_bytes = bytes.get(pos + 4 + len..pos + 8 + len).ok_or_else(|| truncated(&section))?;
        if crc32fast::hash(payload) != u32::from_le_bytes(crc_bytes.try_into().unwrap()) {
            return Err(DatasetError::Checksum { path: path.to_owned(), section });
        }
        pos += 8 + len;
        let t = decode_record(payload, id, n2, template_side).map_err(|m| corrupt(format!("{section}: {m}")))?;
        db.push(t).map_err(|e| corrupt(format!("{section}: {e}")))?;
    }
    if pos != bytes.len() {
        return Err(corrupt(format!("{} trailing bytes after the last record", bytes.len() - pos)));
    }
    Ok(db)
}

fn decode_record(payload: &[u8], id: u64, n2: usize, side: usize) -> std::result::Result<ExemplarTemplate, String> {
    let short = |_| "payload shorter than its fields".to_owned();
    let mut r = Cursor::new(payload);
    let stored_id = r.read_u64::<LE>().map_err(short)?;
    if stored_id != id {
        return Err(format!("id {stored_id} out of sequence"));
    }
    let mut anchor = [0i64; 3];
    for a in &mut anchor {
        *a = r.read_i64::<LE>().map_err(short)?;
    }
    let name_len = r.read_u32::<LE>().map_err(short)? as usize;
    let mut name = vec![0u8; name_len.min(payload.len())];
    r.read_exact(&mut name).map_err(short)?;
    let source_id = String::from_utf8(name).map_err(|_| "source id is not UTF-8".to_owned())?;
    let mut proj = vec![0u16; n2];
    r.read_u16_into::<LE>(&mut proj).map_err(short)?;
    let mut coords = [0f64; 3 * NUM_JOINTS];
    r.read_f64_into::<LE>(&mut coords).map_err(short)?;
    let mask = r.read_u32::<LE>().map_err(short)?;
    if mask >> NUM_JOINTS != 0 {
        return Err(format!("visibility mask {mask:#x} has bits beyond joint {NUM_JOINTS}"));
    }
    if r.position() as usize != payload.len() {
        return Err("payload longer than its fields".into());
    }
    let pose = HandPose {
        positions: std::array::from_fn(|i| Point3::new(coords[3 * i], coords[3 * i + 1], coords[3 * i + 2])),
        visible: std::array::from_fn(|i| mask >> i & 1 == 1),
    };
    let mut t = ExemplarTemplate::from_counts(side, proj, pose, source_id).map_err(|e| e.to_string())?;
    t.anchor = anchor;
    Ok(t)
}

pub fn save_exemplar_db(db: &ExemplarDb, path: impl AsRef<Path>) -> Result<()> {
    let path = path.as_ref();
    let _lock = LockFile::acquire(path)?;
    write_atomic(path, &encode_exemplar_db(db))
}

pub fn load_exemplar_db(path: impl AsRef<Path>) -> Result<ExemplarDb> {
    let path = path.as_ref();
    let bytes = fs::read(path).map_err(DatasetError::io(path))?;
    decode_exemplar_db(&bytes, path)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn grid() -> GridConfig {
        GridConfig { scene_side: 12, template_side: 4, voxel_size: 7.5, origin: Point3::new(-45.0, -45.0, 200.0) }
    }

    fn db(n: usize) -> ExemplarDb {
        let mut db = ExemplarDb::new(grid());
        for i in 0..n {
            let mut pose = HandPose::new(std::array::from_fn(|j| Point3::new(j as f64 * 0.1, i as f64 / 3.0, -0.0)));
            pose.visible[(i * 5) % NUM_JOINTS] = false;
            let proj = (0..16).map(|k| ((i + k) % 5) as u16).collect();
            let mut t = ExemplarTemplate::from_counts(4, proj, pose, format!("src-{i}-é")).unwrap();
            t.anchor = [i as i64 - 3, -(i as i64), 9];
            db.push(t).unwrap();
        }
        db
    }

    #[test]
    fn empty_round_trip() {
        let bytes = encode_exemplar_db(&db(0));
        assert_eq!(bytes.len(), HEADER_LEN);
        assert_eq!(decode_exemplar_db(&bytes, "e".as_ref()).unwrap(), db(0));
    }

    #[test]
    fn header_layout() {
        let bytes = encode_exemplar_db(&db(2));
        assert_eq!(&bytes[..4], b"VXEX");
        assert_eq!(u32::from_le_bytes(bytes[4..8].try_into().unwrap()), 1);
        assert_eq!(u32::from_le_bytes(bytes[12..16].try_into().unwrap()), 4);
        assert_eq!(f64::from_le_bytes(bytes[16..24].try_into().unwrap()), 7.5);
        assert_eq!(u64::from_le_bytes(bytes[48..56].try_into().unwrap()), 2);
    }

    #[test]
    fn round_trip_preserves_signed_zero_and_anchor() {
        let d = db(5);
        let back = decode_exemplar_db(&encode_exemplar_db(&d), "x".as_ref()).unwrap();
        assert_eq!(back, d);
        assert!(back.get(0).unwrap().pose.positions[0].z.is_sign_negative());
    }

    #[test]
    fn every_truncation_is_an_error() {
        let bytes = encode_exemplar_db(&db(3));
        for cut in 0..bytes.len() {
            let err = decode_exemplar_db(&bytes[..cut], "t".as_ref()).unwrap_err();
            assert!(matches!(err, DatasetError::Truncated { .. }), "cut {cut}: {err}");
        }
    }

    #[test]
    fn every_flipped_byte_is_caught() {
        let bytes = encode_exemplar_db(&db(3));
        for i in 0..bytes.len() {
            let mut b = bytes.clone();
            b[i] ^= 0x41;
            assert!(decode_exemplar_db(&b, "f".as_ref()).is_err(), "byte {i}");
        }
    }

    #[test]
    fn version_and_magic() {
        let mut b = encode_exemplar_db(&db(1));
        b[4] = 9;
        assert!(matches!(decode_exemplar_db(&b, "v".as_ref()), Err(DatasetError::VersionMismatch { found: 9, .. })));
        b[0] = b'Q';
        assert!(matches!(decode_exemplar_db(&b, "v".as_ref()), Err(DatasetError::BadMagic { .. })));
    }

    #[test]
    fn trailing_bytes_rejected() {
        let mut b = encode_exemplar_db(&db(1));
        b.push(0);
        assert!(matches!(decode_exemplar_db(&b, "t".as_ref()), Err(DatasetError::Corrupt { .. })));
    }
}
