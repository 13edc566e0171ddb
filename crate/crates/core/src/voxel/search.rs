use std::sync::atomic::{AtomicU64, Ordering};

use rayon::prelude::*;

use super::distance::l1_bounded;
use super::exemplar::{ExemplarDb, ExemplarTemplate};
use super::grid::GridConfig;
use super::volume::SceneVolume;
use crate::joints::HandPose;
use crate::kinematics::DepthRegion;
use crate::{Error, Result};

/// Window offsets that contain at least one depth surface, i.e. some column
/// whose first occupied voxel lies inside the window's z range. Sorted
/// lexicographically by `(x, y, z)`.
pub fn prune_candidates(scene: &SceneVolume, n: usize) -> Vec<[usize; 3]> {
    let m = scene.side();
    if n == 0 || n > m {
        return Vec::new();
    }
    let k = m - n + 1;
    let words = m.div_ceil(64);
    // surface bit per column
    let mut bits = vec![0u64; m * m * words];
    for y in 0..m {
        for x in 0..m {
            if let Some(f) = scene.first_z(x, y) {
                bits[(y * m + x) * words + f / 64] |= 1 << (f % 64);
            }
        }
    }
    // OR over n consecutive x, then over n consecutive y
    let mut rows = vec![0u64; m * k * words];
    for y in 0..m {
        for jx in 0..k {
            let dst = (y * k + jx) * words;
            for x in jx..jx + n {
                let src = (y * m + x) * words;
                for w in 0..words {
                    rows[dst + w] |= bits[src + w];
                }
            }
        }
    }
    let mut out = Vec::new();
    let mut acc = vec![0u64; words];
    for jx in 0..k {
        for jy in 0..k {
            acc.iter_mut().for_each(|w| *w = 0);
            for y in jy..jy + n {
                let src = (y * k + jx) * words;
                for w in 0..words {
                    acc[w] |= rows[src + w];
                }
            }
            for jz in 0..k {
                if any_bit_in(&acc, jz, jz + n) {
                    out.push([jx, jy, jz]);
                }
            }
        }
    }
    out
}

fn any_bit_in(words: &[u64], lo: usize, hi: usize) -> bool {
    (lo..hi).any(|z| words[z / 64] >> (z % 64) & 1 == 1)
}

/// Turns the raw nearest neighbor into a detect / no-detect decision.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum DetectionThreshold {
    /// Accept when the distance is at most this many voxels.
    Absolute(u64),
    /// Accept when the distance is at most this fraction of the matched
    /// exemplar's occupied voxel count.
    RelativeToExemplar(f64),
}

impl Default for DetectionThreshold {
    fn default() -> Self {
        DetectionThreshold::RelativeToExemplar(0.35)
    }
}

impl DetectionThreshold {
    pub fn bound(&self, exemplar: &ExemplarTemplate) -> f64 {
        match self {
            DetectionThreshold::Absolute(t) => *t as f64,
            DetectionThreshold::RelativeToExemplar(r) => r * exemplar.mass() as f64,
        }
    }

    pub fn accepts(&self, distance: u64, exemplar: &ExemplarTemplate) -> bool {
        distance as f64 <= self.bound(exemplar)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct SearchOptions {
    /// `None` always returns the nearest neighbor.
    pub threshold: Option<DetectionThreshold>,
    /// Scan even offsets first, then refine around the best. Approximate.
    pub coarse_stride: bool,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Detection {
    pub exemplar_id: usize,
    /// Window offset in scene voxels.
    pub position: [usize; 3],
    /// Differing voxels.
    pub distance: u64,
    /// Exemplar pose placed in the scene, millimeters.
    pub pose: HandPose,
}

impl Detection {
    /// Depth range of the matched window plus the pose centroid depth.
    pub fn region(&self, config: &GridConfig) -> DepthRegion {
        let z_min = config.origin.z + self.position[2] as f64 * config.voxel_size;
        DepthRegion { z_min, z_max: z_min + config.template_extent(), centroid_depth: self.pose.centroid().z }
    }
}

type Key = (u64, usize, [usize; 3]);

/// Block partition of an `N x N` map into `k x k` near-equal regions.
#[derive(Debug, Clone)]
struct Blocks {
    k: usize,
    /// Region index per cell.
    cell: Vec<u8>,
}

impl Blocks {
    fn new(n: usize, k: usize) -> Self {
        let band = |i: usize| i * k / n;
        let mut cell = vec![0u8; n * n];
        for y in 0..n {
            for x in 0..n {
                cell[y * n + x] = (band(y) * k + band(x)) as u8;
            }
        }
        Self { k, cell }
    }

    fn sums(&self, counts: &[u16], out: &mut [u32]) {
        out.iter_mut().for_each(|s| *s = 0);
        for (c, b) in counts.iter().zip(&self.cell) {
            out[*b as usize] += *c as u32;
        }
    }

    fn len(&self) -> usize {
        self.k * self.k
    }
}

/// Exemplar database prepared for repeated exact scans.
///
/// Templates are ordered by mass, so each window only visits exemplars
/// whose mass differs from its own by no more than the best distance so
/// far. Block-sum lower bounds and a bounded L1 reject most of the rest.
pub struct Matcher<'a> {
    db: &'a ExemplarDb,
    n: usize,
    /// Template ids sorted by `(mass, id)`.
    order: Vec<usize>,
    masses: Vec<u64>,
    levels: Vec<Blocks>,
    /// Per level, per sorted template, the block sums.
    block_sums: Vec<Vec<u32>>,
}

impl<'a> Matcher<'a> {
    pub fn new(db: &'a ExemplarDb) -> Result<Self> {
        if db.is_empty() {
            return Err(Error::EmptyDatabase);
        }
        db.config.validate()?;
        let n = db.config.template_side;
        let mut order: Vec<usize> = (0..db.len()).collect();
        let mass_of = |i: usize| db.templates()[i].mass();
        order.sort_by_key(|i| (mass_of(*i), *i));
        let masses = order.iter().map(|i| mass_of(*i)).collect();
        let levels: Vec<Blocks> = [3, 6].into_iter().filter(|k| *k < n).map(|k| Blocks::new(n, k)).collect();
        let block_sums = levels
            .iter()
            .map(|b| {
                let mut all = vec![0u32; b.len() * order.len()];
                for (slot, id) in order.iter().enumerate() {
                    b.sums(&db.templates()[*id].proj, &mut all[slot * b.len()..(slot + 1) * b.len()]);
                }
                all
            })
            .collect();
        Ok(Self { db, n, order, masses, levels, block_sums })
    }

    pub fn db(&self) -> &ExemplarDb {
        self.db
    }

    fn check_scene(&self, scene: &SceneVolume) -> Result<()> {
        let c = scene.config();
        if c.scene_side < self.n {
            return Err(Error::GridMismatch(format!(
                "scene side {} smaller than template side {}",
                c.scene_side, self.n
            )));
        }
        if c.voxel_size != self.db.config.voxel_size {
            return Err(Error::GridMismatch(format!(
                "scene voxel size {} differs from exemplar voxel size {}",
                c.voxel_size, self.db.config.voxel_size
            )));
        }
        Ok(())
    }

    /// Exact nearest (exemplar, window) pair over the given offsets, ties
    /// broken by exemplar id then offset.
    fn search(&self, scene: &SceneVolume, offsets: &[[usize; 3]], initial_bound: u64) -> Option<Key> {
        let best = AtomicU64::new(initial_bound);
        let chunk = offsets.len().div_ceil(rayon::current_num_threads() * 8).max(1);
        offsets
            .par_chunks(chunk)
            .filter_map(|chunk| {
                let mut window = vec![0u16; self.n * self.n];
                let mut sums: Vec<Vec<u32>> = self.levels.iter().map(|b| vec![0u32; b.len()]).collect();
                let mut local: Option<Key> = None;
                for &j in chunk {
                    scene.fill_window(j, self.n, &mut window);
                    let s: u64 = window.iter().map(|c| *c as u64).sum();
                    for (b, out) in self.levels.iter().zip(sums.iter_mut()) {
                        b.sums(&window, out);
                    }
                    let consider = |slot: usize, local: &mut Option<Key>| {
                        let bound = best.load(Ordering::Relaxed);
                        for (li, b) in self.levels.iter().enumerate() {
                            let e = &self.block_sums[li][slot * b.len()..(slot + 1) * b.len()];
                            let lb: u64 = e.iter().zip(&sums[li]).map(|(p, q)| p.abs_diff(*q) as u64).sum();
                            if lb > bound {
                                return;
                            }
                        }
                        let id = self.order[slot];
                        if let Some(d) = l1_bounded(&self.db.templates()[id].proj, &window, bound) {
                            let key = (d, id, j);
                            if local.is_none_or(|l| key < l) {
                                *local = Some(key);
                            }
                            best.fetch_min(d, Ordering::Relaxed);
                        }
                    };
                    let pos = self.masses.partition_point(|m| *m < s);
                    let (mut lo, mut hi) = (pos, pos);
                    loop {
                        let bound = best.load(Ordering::Relaxed);
                        let down = (lo > 0).then(|| s - self.masses[lo - 1]).filter(|g| *g <= bound);
                        let up = (hi < self.masses.len()).then(|| self.masses[hi] - s).filter(|g| *g <= bound);
                        match (down, up) {
                            (None, None) => break,
                            (Some(d), Some(u)) if d <= u => {
                                lo -= 1;
                                consider(lo, &mut local);
                            }
                            (Some(_), None) => {
                                lo -= 1;
                                consider(lo, &mut local);
                            }
                            _ => {
                                consider(hi, &mut local);
                                hi += 1;
                            }
                        }
                    }
                }
                local
            })
            .min()
    }

    /// The raw nearest neighbor over all admissible windows, or `None` when
    /// the scene has no surface at all.
    pub fn nearest(&self, scene: &SceneVolume) -> Result<Option<Detection>> {
        self.nearest_with(scene, false)
    }

    fn nearest_with(&self, scene: &SceneVolume, coarse: bool) -> Result<Option<Detection>> {
        self.check_scene(scene)?;
        let candidates = prune_candidates(scene, self.n);
        let key = if coarse {
            let even: Vec<[usize; 3]> = candidates.iter().copied().filter(|j| j.iter().all(|c| c % 2 == 0)).collect();
            match self.search(scene, &even, u64::MAX) {
                None => self.search(scene, &candidates, u64::MAX),
                Some((d, _, c)) => {
                    let near: Vec<[usize; 3]> = candidates
                        .iter()
                        .copied()
                        .filter(|j| j.iter().zip(&c).all(|(a, b)| a.abs_diff(*b) <= 1))
                        .collect();
                    self.search(scene, &near, d)
                }
            }
        } else {
            self.search(scene, &candidates, u64::MAX)
        };
        Ok(key.map(|(distance, exemplar_id, position)| self.detection(scene, exemplar_id, position, distance)))
    }

    fn detection(&self, scene: &SceneVolume, exemplar_id: usize, position: [usize; 3], distance: u64) -> Detection {
        let corner = scene.config().corner(position.map(|c| c as i64));
        let pose = self.db.templates()[exemplar_id].pose.translated(&corner.coords);
        Detection { exemplar_id, position, distance, pose }
    }

    pub fn scan(&self, scene: &SceneVolume, options: &SearchOptions) -> Result<Option<Detection>> {
        let det = self.nearest_with(scene, options.coarse_stride)?;
        Ok(det.filter(|d| match options.threshold {
            None => true,
            Some(t) => t.accepts(d.distance, &self.db.templates()[d.exemplar_id]),
        }))
    }
}

/// Nearest neighbor of `scene` in `db` without a detection threshold.
pub fn scan(scene: &SceneVolume, db: &ExemplarDb) -> Result<Option<Detection>> {
    Matcher::new(db)?.nearest(scene)
}

pub fn scan_with(scene: &SceneVolume, db: &ExemplarDb, options: &SearchOptions) -> Result<Option<Detection>> {
    Matcher::new(db)?.scan(scene, options)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::camera::{CameraIntrinsics, DepthFrame, Point3};
    use crate::voxel::dense::{hamming_distance_dense, DenseVolume};
    use crate::voxel::exemplar::build_exemplar;
    use crate::voxel::volume::build_scene_volume;
    use proptest::prelude::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn grid(m: usize, n: usize) -> GridConfig {
        GridConfig { scene_side: m, template_side: n, voxel_size: 10.0, origin: Point3::origin() }
    }

    fn random_scene(rng: &mut ChaCha8Rng, m: usize, n: usize, empty: f64) -> SceneVolume {
        let first: Vec<Option<usize>> =
            (0..m * m).map(|_| (!rng.random_bool(empty)).then(|| rng.random_range(0..m))).collect();
        SceneVolume::from_first_z(grid(m, n), &first).unwrap()
    }

    fn random_template(rng: &mut ChaCha8Rng, n: usize) -> ExemplarTemplate {
        let proj = (0..n * n).map(|_| if rng.random_bool(0.5) { 0 } else { rng.random_range(1..=n as u16) }).collect();
        ExemplarTemplate::from_counts(n, proj, HandPose::new([Point3::origin(); 21]), "").unwrap()
    }

    fn brute_force(scene: &SceneVolume, db: &ExemplarDb) -> Option<Key> {
        let n = db.config.template_side;
        let dense = DenseVolume::from_scene(scene);
        let k = scene.side() - n + 1;
        let mut best: Option<Key> = None;
        for jx in 0..k {
            for jy in 0..k {
                for jz in 0..k {
                    let j = [jx, jy, jz];
                    let sub = dense.subvolume(j, n);
                    let admissible = (0..n).any(|x| (0..n).any(|y| (0..n).any(|z| {
                        dense.is_surface(jx + x, jy + y, jz + z)
                    })));
                    if !admissible {
                        continue;
                    }
                    for (i, e) in db.templates().iter().enumerate() {
                        let d = hamming_distance_dense(&DenseVolume::from_counts(n, &e.proj), &sub) as u64;
                        let key = (d, i, j);
                        if best.is_none_or(|b| key < b) {
                            best = Some(key);
                        }
                    }
                }
            }
        }
        best
    }

    #[test]
    fn empty_scene_has_no_candidates() {
        let scene = SceneVolume::from_first_z(grid(12, 4), &[None; 144]).unwrap();
        assert!(prune_candidates(&scene, 4).is_empty());
        let db = ExemplarDb::from_templates(grid(12, 4), vec![random_template(&mut ChaCha8Rng::seed_from_u64(0), 4)]).unwrap();
        assert_eq!(scan(&scene, &db).unwrap(), None);
    }

    #[test]
    fn empty_db_is_error() {
        let scene = SceneVolume::from_first_z(grid(12, 4), &[None; 144]).unwrap();
        assert!(matches!(scan(&scene, &ExemplarDb::new(grid(12, 4))), Err(Error::EmptyDatabase)));
    }

    #[test]
    fn single_column_candidates() {
        let (m, n) = (16, 5);
        let mut first = vec![None; m * m];
        let (cx, cy, f) = (7, 3, 9);
        first[cy * m + cx] = Some(f);
        let scene = SceneVolume::from_first_z(grid(m, n), &first).unwrap();
        let got = prune_candidates(&scene, n);
        let k = m - n + 1;
        let mut expected = Vec::new();
        for jx in 0..k {
            for jy in 0..k {
                for jz in 0..k {
                    if (jx..jx + n).contains(&cx) && (jy..jy + n).contains(&cy) && (jz..jz + n).contains(&f) {
                        expected.push([jx, jy, jz]);
                    }
                }
            }
        }
        assert_eq!(got, expected);
        let xy = (0..k).filter(|j| (j..&(j + n)).contains(&&cx)).count()
            * (0..k).filter(|j| (j..&(j + n)).contains(&&cy)).count();
        assert!(got.len() <= n * xy);
    }

    #[test]
    fn candidates_match_dense_surface_check() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        for _ in 0..10 {
            let scene = random_scene(&mut rng, 14, 5, 0.85);
            let dense = DenseVolume::from_scene(&scene);
            let got = prune_candidates(&scene, 5);
            let mut expected = Vec::new();
            for jx in 0..10 {
                for jy in 0..10 {
                    for jz in 0..10 {
                        let hit = (0..5).any(|x| (0..5).any(|y| (0..5).any(|z| dense.is_surface(jx + x, jy + y, jz + z))));
                        if hit {
                            expected.push([jx, jy, jz]);
                        }
                    }
                }
            }
            assert_eq!(got, expected);
        }
    }

    /// Back wall plus a few boxes floating in front of it.
    fn room_scene(rng: &mut ChaCha8Rng, m: usize, n: usize) -> SceneVolume {
        let wall = m - 1 - rng.random_range(0..2);
        let mut first: Vec<Option<usize>> = vec![Some(wall); m * m];
        for _ in 0..rng.random_range(1..=3) {
            let (w, h) = (rng.random_range(3..8), rng.random_range(3..8));
            let (x0, y0) = (rng.random_range(0..m - w), rng.random_range(0..m - h));
            let z = rng.random_range(m * 3 / 4..m - 2);
            for y in y0..y0 + h {
                for x in x0..x0 + w {
                    first[y * m + x] = Some(z);
                }
            }
        }
        SceneVolume::from_first_z(grid(m, n), &first).unwrap()
    }

    // measured ratios for seeds 0..5 at M = 40, N = 10
    const PRUNE_RATIO_FIXTURE: [f64; 5] = [0.1182, 0.0990, 0.0837, 0.0576, 0.0766];

    #[test]
    fn pruning_ratio_on_sparse_scenes() {
        let (m, n) = (40, 10);
        let total = ((m - n + 1) as f64).powi(3);
        for (seed, fixture) in PRUNE_RATIO_FIXTURE.iter().enumerate() {
            let mut rng = ChaCha8Rng::seed_from_u64(seed as u64);
            let scene = room_scene(&mut rng, m, n);
            let occupancy = scene.proj().iter().map(|c| *c as f64).sum::<f64>() / (m as f64).powi(3);
            assert!(occupancy <= 0.10, "occupancy {occupancy}");
            let ratio = prune_candidates(&scene, n).len() as f64 / total;
            println!("seed {seed}: occupancy {occupancy:.4}, candidate ratio {ratio:.4}");
            assert!(ratio <= 0.20);
            assert!((ratio - fixture).abs() < 1e-4, "seed {seed}: ratio {ratio} differs from fixture {fixture}");
        }
    }

    #[test]
    fn pruned_scan_matches_exhaustive() {
        let mut rng = ChaCha8Rng::seed_from_u64(17);
        for _ in 0..6 {
            let scene = random_scene(&mut rng, 20, 6, 0.6);
            let db = ExemplarDb::from_templates(grid(20, 6), (0..10).map(|_| random_template(&mut rng, 6)).collect()).unwrap();
            let det = scan(&scene, &db).unwrap().unwrap();
            let (d, i, j) = brute_force(&scene, &db).unwrap();
            assert_eq!((det.distance, det.exemplar_id, det.position), (d, i, j));
        }
    }

    #[test]
    fn ties_resolve_to_lowest_id_then_offset() {
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let scene = random_scene(&mut rng, 12, 4, 0.5);
        let t = random_template(&mut rng, 4);
        let db = ExemplarDb::from_templates(grid(12, 4), vec![t.clone(), t.clone(), t]).unwrap();
        let det = scan(&scene, &db).unwrap().unwrap();
        assert_eq!(det.exemplar_id, 0);
        assert_eq!(brute_force(&scene, &db).unwrap(), (det.distance, 0, det.position));
    }

    #[test]
    fn result_independent_of_thread_count() {
        let mut rng = ChaCha8Rng::seed_from_u64(8);
        let scene = random_scene(&mut rng, 24, 8, 0.5);
        let db = ExemplarDb::from_templates(grid(24, 8), (0..30).map(|_| random_template(&mut rng, 8)).collect()).unwrap();
        let run = |threads| {
            rayon::ThreadPoolBuilder::new().num_threads(threads).build().unwrap().install(|| scan(&scene, &db).unwrap())
        };
        let one = run(1);
        for t in [2, 3, 7] {
            assert_eq!(run(t), one);
        }
    }

    #[test]
    fn coarse_stride_never_beats_exact() {
        let mut rng = ChaCha8Rng::seed_from_u64(9);
        for _ in 0..5 {
            let scene = random_scene(&mut rng, 20, 6, 0.6);
            let db = ExemplarDb::from_templates(grid(20, 6), (0..8).map(|_| random_template(&mut rng, 6)).collect()).unwrap();
            let exact = scan(&scene, &db).unwrap().unwrap();
            let opts = SearchOptions { coarse_stride: true, ..Default::default() };
            let approx = scan_with(&scene, &db, &opts).unwrap().unwrap();
            assert!(approx.distance >= exact.distance);
        }
    }

    fn plate_frame(cx: f64, cy: f64, z: f64) -> DepthFrame {
        let k = CameraIntrinsics::new(200.0, 200.0, 80.0, 80.0).unwrap();
        let mut mm = vec![0u16; 160 * 160];
        for v in 0..160 {
            for u in 0..160 {
                let p = k.reproject_pixel(u as f64, v as f64, z);
                let r = ((p.x - cx).powi(2) + (p.y - cy).powi(2)).sqrt();
                if r < 70.0 {
                    mm[v * 160 + u] = (z + r * 0.5) as u16;
                }
            }
        }
        DepthFrame::from_millimeters(160, 160, &mm, k).unwrap()
    }

    #[test]
    fn self_match_is_exact() {
        let g = GridConfig { scene_side: 40, template_side: 30, voxel_size: 10.0, origin: Point3::new(-200.0, -200.0, 300.0) };
        let frame = plate_frame(5.0, -8.0, 480.0);
        let mut pose = HandPose::new([Point3::new(5.0, -8.0, 490.0); 21]);
        pose.positions[3].x += 40.0;
        let e = build_exemplar(&frame, &pose, &g).unwrap();
        let other = build_exemplar(&plate_frame(0.0, 0.0, 550.0), &HandPose::new([Point3::new(0.0, 0.0, 560.0); 21]), &g).unwrap();
        let db = ExemplarDb::from_templates(g, vec![other, e.clone()]).unwrap();
        let scene = build_scene_volume(&frame, &g).unwrap();
        let det = scan(&scene, &db).unwrap().unwrap();
        assert_eq!(det.exemplar_id, 1);
        assert_eq!(det.distance, 0);
        assert_eq!(det.position, e.anchor.map(|c| c as usize));
        for (p, q) in det.pose.positions.iter().zip(&pose.positions) {
            assert!((p - q).norm() < 1e-9);
        }
        let region = det.region(&g);
        assert!(region.contains(480.0));
    }

    #[test]
    fn threshold_rejects_poor_matches() {
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let scene = random_scene(&mut rng, 12, 4, 0.3);
        let db = ExemplarDb::from_templates(grid(12, 4), vec![random_template(&mut rng, 4)]).unwrap();
        let raw = scan(&scene, &db).unwrap().unwrap();
        let keep = SearchOptions { threshold: Some(DetectionThreshold::Absolute(raw.distance)), ..Default::default() };
        assert_eq!(scan_with(&scene, &db, &keep).unwrap(), Some(raw.clone()));
        if raw.distance > 0 {
            let drop = SearchOptions { threshold: Some(DetectionThreshold::Absolute(raw.distance - 1)), ..Default::default() };
            assert_eq!(scan_with(&scene, &db, &drop).unwrap(), None);
        }
        let t = &db.templates()[0];
        assert_eq!(DetectionThreshold::RelativeToExemplar(0.5).bound(t), 0.5 * t.mass() as f64);
    }

    fn shift(scene: &SceneVolume, axis: usize) -> SceneVolume {
        let m = scene.side();
        let mut first = vec![None; m * m];
        for y in 0..m {
            for x in 0..m {
                let (sx, sy) = match axis {
                    0 => (x + 1, y),
                    1 => (x, y + 1),
                    _ => (x, y),
                };
                if sx < m && sy < m {
                    first[sy * m + sx] = scene.first_z(x, y).map(|f| if axis == 2 { f + 1 } else { f });
                }
            }
        }
        SceneVolume::from_first_z(*scene.config(), &first).unwrap()
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(40))]

        #[test]
        fn translation_equivariance(seed in 0u64..1000, axis in 0usize..3) {
            // a compact object floating in an otherwise empty scene, away from the borders
            let (m, n) = (16, 5);
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let mut first = vec![None; m * m];
            let (x0, y0) = (rng.random_range(4..8), rng.random_range(4..8));
            for y in y0..y0 + 4 {
                for x in x0..x0 + 4 {
                    first[y * m + x] = Some(rng.random_range(5..10));
                }
            }
            let scene = SceneVolume::from_first_z(grid(m, n), &first).unwrap();
            let j0 = [x0 - 1, y0 - 1, 4];
            let t = ExemplarTemplate::from_counts(n, scene.window_counts(j0, n).unwrap(), HandPose::new([Point3::origin(); 21]), "").unwrap();
            let db = ExemplarDb::from_templates(grid(m, n), vec![t]).unwrap();
            let a = scan(&scene, &db).unwrap().unwrap();
            let b = scan(&shift(&scene, axis), &db).unwrap().unwrap();
            prop_assert_eq!(a.distance, 0);
            prop_assert_eq!(b.distance, 0);
            let mut expected = a.position;
            expected[axis] += 1;
            prop_assert_eq!(b.position, expected);
        }

        #[test]
        fn far_background_does_not_change_window(seed in 0u64..1000) {
            let (m, n) = (16, 5);
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let scene = random_scene(&mut rng, m, n, 0.7);
            let j = [rng.random_range(0..=m - n), rng.random_range(0..=m - n), rng.random_range(0..m - n)];
            let t = random_template(&mut rng, n);
            // add surfaces behind the window in every column it currently sees as empty
            let mut first: Vec<Option<usize>> = (0..m * m).map(|i| scene.first_z(i % m, i / m)).collect();
            for f in first.iter_mut() {
                if f.is_none_or(|z| z >= j[2] + n) {
                    *f = Some(rng.random_range(j[2] + n..m));
                }
            }
            let cluttered = SceneVolume::from_first_z(grid(m, n), &first).unwrap();
            let before = crate::voxel::projected_l1_distance(&t.proj, &scene.window_counts(j, n).unwrap());
            let after = crate::voxel::projected_l1_distance(&t.proj, &cluttered.window_counts(j, n).unwrap());
            prop_assert_eq!(before, after);
        }
    }
}
