//! Explicit boolean voxel grids. Slow, used as a reference for the compact
//! column representation.

use super::volume::SceneVolume;

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct DenseVolume {
    side: usize,
    bits: Vec<bool>,
}

impl DenseVolume {
    pub fn new(side: usize) -> Self {
        Self { side, bits: vec![false; side * side * side] }
    }

    pub fn side(&self) -> usize {
        self.side
    }

    #[inline]
    fn idx(&self, x: usize, y: usize, z: usize) -> usize {
        (x * self.side + y) * self.side + z
    }

    pub fn get(&self, x: usize, y: usize, z: usize) -> bool {
        self.bits[self.idx(x, y, z)]
    }

    pub fn set(&mut self, x: usize, y: usize, z: usize, value: bool) {
        let i = self.idx(x, y, z);
        self.bits[i] = value;
    }

    pub fn from_scene(scene: &SceneVolume) -> Self {
        let m = scene.side();
        let mut out = Self::new(m);
        for x in 0..m {
            for y in 0..m {
                if let Some(f) = scene.first_z(x, y) {
                    for z in f..m {
                        out.set(x, y, z, true);
                    }
                }
            }
        }
        out
    }

    /// Suffix-filled grid from per-column counts, row-major `proj[y * side + x]`.
    pub fn from_counts(side: usize, proj: &[u16]) -> Self {
        let mut out = Self::new(side);
        for x in 0..side {
            for y in 0..side {
                let c = proj[y * side + x] as usize;
                for z in side - c..side {
                    out.set(x, y, z, true);
                }
            }
        }
        out
    }

    /// Copy of the cube of side `n` at offset `j`.
    pub fn subvolume(&self, j: [usize; 3], n: usize) -> Self {
        let mut out = Self::new(n);
        for x in 0..n {
            for y in 0..n {
                for z in 0..n {
                    out.set(x, y, z, self.get(j[0] + x, j[1] + y, j[2] + z));
                }
            }
        }
        out
    }

    /// Occupied count per column, row-major.
    pub fn proj(&self) -> Vec<u16> {
        let n = self.side;
        let mut out = vec![0u16; n * n];
        for x in 0..n {
            for y in 0..n {
                out[y * n + x] = (0..n).filter(|z| self.get(x, y, *z)).count() as u16;
            }
        }
        out
    }

    /// Whether `(x, y, z)` is occupied with an empty voxel in front of it.
    pub fn is_surface(&self, x: usize, y: usize, z: usize) -> bool {
        self.get(x, y, z) && (z == 0 || !self.get(x, y, z - 1))
    }

    pub fn count(&self) -> usize {
        self.bits.iter().filter(|b| **b).count()
    }
}

/// Number of voxels where two equally sized grids differ.
pub fn hamming_distance_dense(a: &DenseVolume, b: &DenseVolume) -> usize {
    assert_eq!(a.side, b.side, "grids must have equal side");
    a.bits.iter().zip(&b.bits).filter(|(p, q)| p != q).count()
}
