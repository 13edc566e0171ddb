//! Pinhole camera model and depth frames.
//!
//! All geometry is in millimeters in camera coordinates, z along the optical
//! axis. Stored depth uses 0 for "no measurement"; in memory that becomes
//! `None`.

use std::num::NonZeroU16;

use serde::{Deserialize, Serialize};

use crate::{Error, Result};

pub type Point3 = nalgebra::Point3<f64>;
pub type Vector3 = nalgebra::Vector3<f64>;

/// Largest depth a frame may carry, exclusive.
pub const MAX_DEPTH_MM: u16 = 10_000;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CameraIntrinsics {
    pub fu: f64,
    pub fv: f64,
    pub cu: f64,
    pub cv: f64,
}

impl CameraIntrinsics {
    pub fn new(fu: f64, fv: f64, cu: f64, cv: f64) -> Result<Self> {
        let k = Self { fu, fv, cu, cv };
        k.validate()?;
        Ok(k)
    }

    /// Principal point at the image center.
    pub fn centered(fu: f64, fv: f64, width: usize, height: usize) -> Result<Self> {
        Self::new(fu, fv, width as f64 / 2.0, height as f64 / 2.0)
    }

    pub fn validate(&self) -> Result<()> {
        let finite = [self.fu, self.fv, self.cu, self.cv].iter().all(|v| v.is_finite());
        if !finite {
            return Err(Error::InvalidIntrinsics("non-finite parameter".into()));
        }
        if self.fu <= 0.0 || self.fv <= 0.0 {
            return Err(Error::InvalidIntrinsics(format!(
                "focal lengths must be positive, got ({}, {})",
                self.fu, self.fv
            )));
        }
        Ok(())
    }

    pub fn validate_for(&self, width: usize, height: usize) -> Result<()> {
        self.validate()?;
        if !(0.0..width as f64).contains(&self.cu) || !(0.0..height as f64).contains(&self.cv) {
            return Err(Error::InvalidIntrinsics(format!(
                "principal point ({}, {}) outside {}x{} frame",
                self.cu, self.cv, width, height
            )));
        }
        Ok(())
    }

    /// Back-projects pixel `(u, v)` observed at `depth` millimeters.
    #[inline]
    pub fn reproject_pixel(&self, u: f64, v: f64, depth: f64) -> Point3 {
        Point3::new(
            (u - self.cu) / self.fu * depth,
            (v - self.cv) / self.fv * depth,
            depth,
        )
    }

    /// Projects a camera-space point to pixel coordinates.
    pub fn project(&self, p: &Point3) -> Result<(f64, f64)> {
        if !(p.z > 0.0) {
            return Err(Error::BehindCamera(p.z));
        }
        Ok((self.fu * p.x / p.z + self.cu, self.fv * p.y / p.z + self.cv))
    }

    /// Unit-depth ray direction through pixel `(u, v)`; its z component is 1.
    #[inline]
    pub fn ray(&self, u: f64, v: f64) -> Vector3 {
        Vector3::new((u - self.cu) / self.fu, (v - self.cv) / self.fv, 1.0)
    }
}

/// A depth image in millimeters together with the camera that produced it.
#[derive(Debug, Clone, PartialEq)]
pub struct DepthFrame {
    width: usize,
    height: usize,
    depth: Vec<Option<NonZeroU16>>,
    intrinsics: CameraIntrinsics,
}

impl DepthFrame {
    /// Builds a frame from raw millimeter samples where 0 marks a missing
    /// measurement.
    pub fn from_millimeters(
        width: usize,
        height: usize,
        raw: &[u16],
        intrinsics: CameraIntrinsics,
    ) -> Result<Self> {
        if raw.len() != width * height {
            return Err(Error::FrameSize { width, height, len: raw.len() });
        }
        intrinsics.validate_for(width, height)?;
        let mut depth = Vec::with_capacity(raw.len());
        for (i, &d) in raw.iter().enumerate() {
            if d >= MAX_DEPTH_MM {
                return Err(Error::DepthOutOfRange { u: i % width, v: i / width, value: d as u32 });
            }
            depth.push(NonZeroU16::new(d));
        }
        Ok(Self { width, height, depth, intrinsics })
    }

    /// A frame with no measurements.
    pub fn empty(width: usize, height: usize, intrinsics: CameraIntrinsics) -> Result<Self> {
        Self::from_millimeters(width, height, &vec![0; width * height], intrinsics)
    }

    pub fn width(&self) -> usize {
        self.width
    }

    pub fn height(&self) -> usize {
        self.height
    }

    pub fn intrinsics(&self) -> &CameraIntrinsics {
        &self.intrinsics
    }

    #[inline]
    pub fn get(&self, u: usize, v: usize) -> Option<u16> {
        self.depth[v * self.width + u].map(NonZeroU16::get)
    }

    /// Depth at a sub-pixel location, rounded to the nearest pixel.
    pub fn sample(&self, u: f64, v: f64) -> Option<u16> {
        let (u, v) = (u.round(), v.round());
        if u < 0.0 || v < 0.0 || u >= self.width as f64 || v >= self.height as f64 {
            return None;
        }
        self.get(u as usize, v as usize)
    }

    /// Replaces one sample; `None` or 0 clears it.
    pub fn set(&mut self, u: usize, v: usize, depth: Option<u16>) -> Result<()> {
        let d = depth.unwrap_or(0);
        if d >= MAX_DEPTH_MM {
            return Err(Error::DepthOutOfRange { u, v, value: d as u32 });
        }
        self.depth[v * self.width + u] = NonZeroU16::new(d);
        Ok(())
    }

    /// Raw samples with 0 for missing depth, row-major.
    pub fn to_millimeters(&self) -> Vec<u16> {
        self.depth.iter().map(|d| d.map_or(0, NonZeroU16::get)).collect()
    }

    pub fn valid_count(&self) -> usize {
        self.depth.iter().filter(|d| d.is_some()).count()
    }

    /// Iterates `(u, v, depth_mm)` over measured pixels in row-major order.
    pub fn measurements(&self) -> impl Iterator<Item = (usize, usize, u16)> + '_ {
        let w = self.width;
        self.depth
            .iter()
            .enumerate()
            .filter_map(move |(i, d)| d.map(|d| (i % w, i / w, d.get())))
    }

    pub fn same_geometry(&self, other: &DepthFrame) -> bool {
        self.width == other.width && self.height == other.height && self.intrinsics == other.intrinsics
    }
}

/// Re-projects every measured pixel into camera space, row-major order.
pub fn reproject(frame: &DepthFrame) -> Vec<Point3> {
    let k = frame.intrinsics;
    frame
        .measurements()
        .map(|(u, v, d)| k.reproject_pixel(u as f64, v as f64, d as f64))
        .collect()
}
