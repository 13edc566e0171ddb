use super::grid::GridConfig;
use crate::camera::DepthFrame;
use crate::{Error, Result};

/// Occlusion-filled scene grid stored as per-column first occupied z index.
#[derive(Debug, Clone, PartialEq)]
pub struct SceneVolume {
    config: GridConfig,
    /// Row-major `M x M`; `M` marks an empty column.
    first: Vec<u16>,
}

impl SceneVolume {
    /// Builds a volume from first-occupied indices (`None` for empty columns),
    /// row-major `first[y * M + x]`.
    pub fn from_first_z(config: GridConfig, first: &[Option<usize>]) -> Result<Self> {
        config.validate()?;
        let m = config.scene_side;
        if first.len() != m * m {
            return Err(Error::InvalidGrid(format!("expected {} columns, got {}", m * m, first.len())));
        }
        let mut out = Vec::with_capacity(first.len());
        for f in first {
            match f {
                Some(z) if *z >= m => {
                    return Err(Error::InvalidGrid(format!("first z index {z} outside grid of side {m}")))
                }
                Some(z) => out.push(*z as u16),
                None => out.push(m as u16),
            }
        }
        Ok(Self { config, first: out })
    }

    pub fn config(&self) -> &GridConfig {
        &self.config
    }

    pub fn side(&self) -> usize {
        self.config.scene_side
    }

    /// First occupied z index of column `(x, y)`, if any.
    #[inline]
    pub fn first_z(&self, x: usize, y: usize) -> Option<usize> {
        let f = self.first[y * self.side() + x] as usize;
        (f < self.side()).then_some(f)
    }

    #[inline]
    pub(crate) fn raw_first(&self, x: usize, y: usize) -> u16 {
        self.first[y * self.side() + x]
    }

    /// Occupied voxel count of column `(x, y)` over the whole depth.
    pub fn column_count(&self, x: usize, y: usize) -> usize {
        self.side() - self.raw_first(x, y) as usize
    }

    /// The z-projection map `v[x, y]`, row-major.
    pub fn proj(&self) -> Vec<u16> {
        let m = self.side() as u16;
        self.first.iter().map(|f| m - f).collect()
    }

    pub fn occupied_columns(&self) -> usize {
        let m = self.side() as u16;
        self.first.iter().filter(|f| **f < m).count()
    }

    /// Per-column occupied counts of the `N^3` subvolume at offset `j`,
    /// row-major `N x N`.
    pub fn window_counts(&self, j: [usize; 3], n: usize) -> Result<Vec<u16>> {
        let max = self.side().checked_sub(n).ok_or_else(|| {
            Error::InvalidGrid(format!("template side {n} exceeds scene side {}", self.side()))
        })?;
        if j.iter().any(|c| *c > max) {
            return Err(Error::WindowOutOfRange { offset: j, max });
        }
        let mut out = vec![0u16; n * n];
        self.fill_window(j, n, &mut out);
        Ok(out)
    }

    /// Unchecked variant of [`Self::window_counts`] writing into `out`.
    pub(crate) fn fill_window(&self, j: [usize; 3], n: usize, out: &mut [u16]) {
        let (jz, end) = (j[2] as u16, (j[2] + n) as u16);
        for y in 0..n {
            let row = &self.first[(j[1] + y) * self.side() + j[0]..][..n];
            for (o, f) in out[y * n..(y + 1) * n].iter_mut().zip(row) {
                *o = end.saturating_sub((*f).max(jz));
            }
        }
    }
}

/// Voxelizes a depth frame: every measured point is quantized onto the grid,
/// points outside it are dropped, and each column is filled from its nearest
/// point to the back of the grid.
pub fn build_scene_volume(frame: &DepthFrame, config: &GridConfig) -> Result<SceneVolume> {
    config.validate()?;
    let m = config.scene_side;
    let mut first = vec![m as u16; m * m];
    let k = frame.intrinsics();
    for (u, v, d) in frame.measurements() {
        let p = k.reproject_pixel(u as f64, v as f64, d as f64);
        let [x, y, z] = config.lattice_index(&p);
        let inside = |c: i64| (0..m as i64).contains(&c);
        if inside(x) && inside(y) && inside(z) {
            let cell = &mut first[y as usize * m + x as usize];
            *cell = (*cell).min(z as u16);
        }
    }
    Ok(SceneVolume { config: *config, first })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::camera::{CameraIntrinsics, Point3};
    use crate::voxel::dense::DenseVolume;

    fn grid(m: usize, n: usize) -> GridConfig {
        GridConfig { scene_side: m, template_side: n, voxel_size: 10.0, origin: Point3::new(-20.0, -20.0, 0.0) }
    }

    fn one_pixel_frame(depths: &[u16]) -> Vec<DepthFrame> {
        // orthographic-ish camera: huge focal length keeps x = y = 0
        let k = CameraIntrinsics::new(1e9, 1e9, 0.0, 0.0).unwrap();
        depths.iter().map(|d| DepthFrame::from_millimeters(1, 1, &[*d], k).unwrap()).collect()
    }

    #[test]
    fn single_point_fill() {
        let f = &one_pixel_frame(&[25])[0];
        let vol = build_scene_volume(f, &grid(4, 2)).unwrap();
        assert_eq!(vol.occupied_columns(), 1);
        assert_eq!(vol.column_count(2, 2), 4 - 2);
        assert_eq!(vol.first_z(2, 2), Some(2));
    }

    #[test]
    fn nearest_surface_wins() {
        let k = CameraIntrinsics::new(1e9, 1e9, 0.0, 0.0).unwrap();
        let f = DepthFrame::from_millimeters(2, 1, &[35, 15], k).unwrap();
        let vol = build_scene_volume(&f, &grid(4, 2)).unwrap();
        assert_eq!(vol.occupied_columns(), 1);
        assert_eq!(vol.column_count(2, 2), 3);
    }

    #[test]
    fn empty_frame_gives_empty_volume() {
        let k = CameraIntrinsics::new(100.0, 100.0, 1.0, 1.0).unwrap();
        let f = DepthFrame::empty(3, 3, k).unwrap();
        let vol = build_scene_volume(&f, &grid(4, 2)).unwrap();
        assert_eq!(vol.occupied_columns(), 0);
        assert!(vol.proj().iter().all(|c| *c == 0));
    }

    #[test]
    fn window_count_formula() {
        let g = grid(12, 4);
        let mut first = vec![None; 144];
        first[0] = Some(0);
        first[1] = Some(5);
        let vol = SceneVolume::from_first_z(g, &first).unwrap();
        for jz in 0..=8 {
            let w = vol.window_counts([0, 0, jz], 4).unwrap();
            assert_eq!(w[0], 4);
            assert_eq!(w[2], 0);
        }
        let w = vol.window_counts([0, 0, 3], 4).unwrap();
        assert_eq!(w[1], 2);
        let dense = DenseVolume::from_scene(&vol);
        let slice = dense.subvolume([0, 0, 3], 4);
        assert_eq!(slice.proj()[1], 2);
        assert!(matches!(vol.window_counts([9, 0, 0], 4), Err(Error::WindowOutOfRange { .. })));
    }

    fn lcg(state: &mut u64) -> u64 {
        *state = state.wrapping_mul(6364136223846793005).wrapping_add(1442695040888963407);
        *state >> 33
    }

    #[test]
    fn matches_dense_voxelization_oracle() {
        let k = CameraIntrinsics::new(12.0, 12.0, 7.5, 7.5).unwrap();
        let g = GridConfig { scene_side: 8, template_side: 3, voxel_size: 10.0, origin: Point3::new(-40.0, -40.0, 10.0) };
        let mut state = 11;
        for _ in 0..20 {
            let raw: Vec<u16> = (0..256).map(|_| if lcg(&mut state) % 5 == 0 { 0 } else { (lcg(&mut state) % 110) as u16 }).collect();
            let frame = DepthFrame::from_millimeters(16, 16, &raw, k).unwrap();
            // brute force: mark observed voxels, then occlusion-fill voxel by voxel
            let mut dense = vec![false; 8 * 8 * 8];
            for (u, v, d) in frame.measurements() {
                let d = d as f64;
                let p = [(u as f64 - 7.5) / 12.0 * d, (v as f64 - 7.5) / 12.0 * d, d];
                let idx: Vec<f64> = p.iter().zip([-40.0, -40.0, 10.0]).map(|(c, o)| ((c - o) / 10.0).floor()).collect();
                if idx.iter().all(|c| (0.0..8.0).contains(c)) {
                    dense[(idx[0] as usize * 8 + idx[1] as usize) * 8 + idx[2] as usize] = true;
                }
            }
            for x in 0..8 {
                for y in 0..8 {
                    for z in 1..8 {
                        if dense[(x * 8 + y) * 8 + z - 1] {
                            dense[(x * 8 + y) * 8 + z] = true;
                        }
                    }
                }
            }
            let vol = build_scene_volume(&frame, &g).unwrap();
            let proj = vol.proj();
            for x in 0..8 {
                for y in 0..8 {
                    let count = (0..8).filter(|z| dense[(x * 8 + y) * 8 + z]).count();
                    assert_eq!(proj[y * 8 + x] as usize, count);
                }
            }
        }
    }
}
