//! 16-bit grayscale depth PNGs. Sample value is millimeters, 0 is missing.

use std::fs;
use std::path::Path;

use voxhand_core::{CameraIntrinsics, DepthFrame};

use crate::{DatasetError, Result};

pub fn encode_depth_png(frame: &DepthFrame) -> Vec<u8> {
    let raw: Vec<u8> = frame.to_millimeters().iter().flat_map(|d| d.to_be_bytes()).collect();
    encode(frame.width(), frame.height(), png::BitDepth::Sixteen, &raw)
}

/// 8-bit grayscale, used for visualizations.
pub fn encode_gray8_png(width: usize, height: usize, pixels: &[u8]) -> Vec<u8> {
    assert_eq!(pixels.len(), width * height, "pixel buffer does not match image size");
    encode(width, height, png::BitDepth::Eight, pixels)
}

fn encode(width: usize, height: usize, depth: png::BitDepth, data: &[u8]) -> Vec<u8> {
    let mut out = Vec::new();
    let mut enc = png::Encoder::new(&mut out, width as u32, height as u32);
    enc.set_color(png::ColorType::Grayscale);
    enc.set_depth(depth);
    let mut w = enc.write_header().expect("writing to memory");
    w.write_image_data(data).expect("buffer size matches header");
    w.finish().expect("writing to memory");
    out
}

/// Decodes a depth PNG. `path` only labels errors.
pub fn decode_depth_png(bytes: &[u8], intrinsics: CameraIntrinsics, path: &Path) -> Result<DepthFrame> {
    let bad = |message: String| DatasetError::Png { path: path.to_owned(), message };
    let mut dec = png::Decoder::new(bytes);
    dec.set_transformations(png::Transformations::IDENTITY);
    let mut reader = dec.read_info().map_err(|e| bad(e.to_string()))?;
    let mut buf = vec![0; reader.output_buffer_size()];
    let info = reader.next_frame(&mut buf).map_err(|e| bad(e.to_string()))?;
    if info.color_type != png::ColorType::Grayscale || info.bit_depth != png::BitDepth::Sixteen {
        return Err(bad(format!(
            "expected 16-bit grayscale, found {:?} at {} bits",
            info.color_type, info.bit_depth as u8
        )));
    }
    let (w, h) = (info.width as usize, info.height as usize);
    let raw: Vec<u16> = buf[..info.buffer_size()]
        .chunks_exact(2)
        .map(|b| u16::from_be_bytes([b[0], b[1]]))
        .collect();
    DepthFrame::from_millimeters(w, h, &raw, intrinsics).map_err(|source| DatasetError::Depth { path: path.to_owned(), source })
}

pub fn write_depth_png(path: &Path, frame: &DepthFrame) -> Result<()> {
    fs::write(path, encode_depth_png(frame)).map_err(DatasetError::io(path))
}

pub fn read_depth_png(path: &Path, intrinsics: CameraIntrinsics) -> Result<DepthFrame> {
    let bytes = fs::read(path).map_err(DatasetError::io(path))?;
    decode_depth_png(&bytes, intrinsics, path)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn k() -> CameraIntrinsics {
        CameraIntrinsics::new(10.0, 10.0, 2.0, 1.5).unwrap()
    }

    #[test]
    fn bit_exact_round_trip() {
        let raw: Vec<u16> = (0..12).map(|i| if i % 5 == 0 { 0 } else { 9999 - i * 811 }).collect();
        let f = DepthFrame::from_millimeters(4, 3, &raw, k()).unwrap();
        let back = decode_depth_png(&encode_depth_png(&f), k(), "m".as_ref()).unwrap();
        assert_eq!(back, f);
        assert_eq!(back.get(0, 0), None);
    }

    #[test]
    fn eight_bit_is_rejected() {
        let bytes = encode_gray8_png(4, 3, &[7; 12]);
        let err = decode_depth_png(&bytes, k(), "g.png".as_ref()).unwrap_err();
        assert!(matches!(err, DatasetError::Png { .. }), "{err}");
        assert!(err.to_string().contains("16-bit"));
    }

    #[test]
    fn garbage_and_out_of_range() {
        assert!(decode_depth_png(b"not a png", k(), "x".as_ref()).is_err());
        let raw: Vec<u8> = (0..12u16).flat_map(|_| 12000u16.to_be_bytes()).collect();
        let bytes = encode(4, 3, png::BitDepth::Sixteen, &raw);
        let err = decode_depth_png(&bytes, k(), "far.png".as_ref()).unwrap_err();
        assert!(matches!(err, DatasetError::Depth { .. }));
        assert!(err.to_string().contains("far.png"));
    }
}
