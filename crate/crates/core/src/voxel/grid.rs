use serde::{Deserialize, Serialize};

use crate::camera::Point3;
use crate::{Error, Result};

/// Geometry of the scene grid and of the hand templates scanned over it.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GridConfig {
    /// Scene grid side `M`, voxels.
    pub scene_side: usize,
    /// Template side `N`, voxels.
    pub template_side: usize,
    /// Voxel edge length, millimeters.
    pub voxel_size: f64,
    /// Camera-space corner of voxel `(0, 0, 0)`, millimeters.
    pub origin: Point3,
}

impl Default for GridConfig {
    fn default() -> Self {
        Self::centered(200, 30, 10.0, 0.0).expect("default grid is valid")
    }
}

impl GridConfig {
    /// Grid centered on the optical axis in x and y whose near face sits at
    /// depth `near` millimeters.
    pub fn centered(scene_side: usize, template_side: usize, voxel_size: f64, near: f64) -> Result<Self> {
        let half = scene_side as f64 * voxel_size / 2.0;
        let g = Self { scene_side, template_side, voxel_size, origin: Point3::new(-half, -half, near) };
        g.validate()?;
        Ok(g)
    }

    pub fn validate(&self) -> Result<()> {
        if self.template_side == 0 || self.scene_side < self.template_side {
            return Err(Error::InvalidGrid(format!(
                "need M >= N >= 1, got M = {}, N = {}",
                self.scene_side, self.template_side
            )));
        }
        if self.scene_side > u16::MAX as usize {
            return Err(Error::InvalidGrid(format!("scene side {} too large", self.scene_side)));
        }
        if !(self.voxel_size > 0.0 && self.voxel_size.is_finite()) {
            return Err(Error::InvalidGrid(format!("voxel size must be positive, got {}", self.voxel_size)));
        }
        if !self.origin.iter().all(|c| c.is_finite()) {
            return Err(Error::InvalidGrid("origin is not finite".into()));
        }
        Ok(())
    }

    /// Integer voxel index of a point on the scene lattice, unbounded.
    #[inline]
    pub fn lattice_index(&self, p: &Point3) -> [i64; 3] {
        let q = (p - self.origin) / self.voxel_size;
        [q.x.floor() as i64, q.y.floor() as i64, q.z.floor() as i64]
    }

    /// Camera-space corner of lattice cell `idx`.
    pub fn corner(&self, idx: [i64; 3]) -> Point3 {
        self.origin + nalgebra::Vector3::new(idx[0] as f64, idx[1] as f64, idx[2] as f64) * self.voxel_size
    }

    /// Number of window offsets along one axis.
    pub fn offsets_per_axis(&self) -> usize {
        self.scene_side - self.template_side + 1
    }

    /// Template edge length, millimeters.
    pub fn template_extent(&self) -> f64 {
        self.template_side as f64 * self.voxel_size
    }

    /// Whether two configs describe templates that can be scanned over the
    /// same scenes.
    pub fn compatible(&self, other: &GridConfig) -> bool {
        self == other
    }
}
