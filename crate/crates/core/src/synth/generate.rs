use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};
use rayon::prelude::*;

use super::{render_depth, RenderConfig, SynthSample};
use crate::camera::{DepthFrame, Point3, Vector3, MAX_DEPTH_MM};
use crate::kinematics::{forward_kinematics, PoseSampler};
use crate::{Error, Result};

/// Where sampled hands are put: the joint centroid lands uniformly within
/// `jitter` millimeters of `center` on each axis.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Placement {
    pub center: Point3,
    pub jitter: f64,
}

impl Default for Placement {
    fn default() -> Self {
        Self { center: Point3::new(0.0, 0.0, 500.0), jitter: 30.0 }
    }
}

/// Optional sensor imperfections applied after rendering.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct NoiseConfig {
    /// Standard deviation of additive depth noise, millimeters.
    pub sigma: f64,
    /// Probability of dropping a pixel on a depth edge.
    pub edge_dropout: f64,
}

#[derive(Debug, Clone)]
pub struct GenerateConfig {
    pub render: RenderConfig,
    pub sampler: PoseSampler,
    pub placement: Placement,
    /// Failed renders tolerated per sample.
    pub max_render_failures: usize,
    pub noise: Option<NoiseConfig>,
}

impl Default for GenerateConfig {
    fn default() -> Self {
        Self {
            render: RenderConfig::default(),
            sampler: PoseSampler::default(),
            placement: Placement::default(),
            max_render_failures: 1000,
            noise: None,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SynthSet {
    pub samples: Vec<SynthSample>,
    /// Self-intersecting poses thrown away.
    pub pose_rejections: usize,
    /// Poses redrawn because they could not be rendered.
    pub render_failures: usize,
}

/// Sample `index` of the set seeded by `seed`, with its pose rejection and
/// render failure counts. Each index has its own random stream.
pub fn generate_one(index: u64, seed: u64, config: &GenerateConfig) -> Result<(SynthSample, usize, usize)> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(index);
    let skel = &config.render.skeleton;
    let mut rejected = 0;
    for failures in 0..=config.max_render_failures {
        let (mut params, r) = config.sampler.sample_counted(&mut rng, skel)?;
        rejected += r;
        let j = config.placement.jitter;
        let target = config.placement.center
            + Vector3::new(rng.random_range(-j..=j), rng.random_range(-j..=j), rng.random_range(-j..=j));
        let centroid = forward_kinematics(&params, skel).centroid();
        params.translation += target - centroid;
        match render_depth(&params, &config.render) {
            Ok(mut sample) => {
                if let Some(noise) = &config.noise {
                    sample.frame = apply_noise(&sample.frame, noise, &mut rng)?;
                    sample.pose.visible = super::joint_visibility(&sample.pose, &sample.joint_radii, &sample.frame);
                }
                return Ok((sample, rejected, failures));
            }
            Err(Error::OutsideFrustum) => continue,
            Err(e) => return Err(e),
        }
    }
    Err(Error::OutsideFrustum)
}

/// Renders `count` samples in parallel. Output order and content depend only
/// on `seed` and `config`.
pub fn generate_set(count: usize, seed: u64, config: &GenerateConfig) -> Result<SynthSet> {
    if count == 0 {
        return Err(Error::InvalidConfig("sample count must be at least 1".into()));
    }
    config.render.validate()?;
    let results: Vec<_> = (0..count as u64).into_par_iter().map(|i| generate_one(i, seed, config)).collect::<Result<_>>()?;
    let mut set = SynthSet { samples: Vec::with_capacity(count), pose_rejections: 0, render_failures: 0 };
    for (s, r, f) in results {
        set.samples.push(s);
        set.pose_rejections += r;
        set.render_failures += f;
    }
    Ok(set)
}

fn apply_noise<R: Rng + ?Sized>(frame: &DepthFrame, noise: &NoiseConfig, rng: &mut R) -> Result<DepthFrame> {
    let normal = Normal::new(0.0, noise.sigma).map_err(|e| Error::InvalidConfig(format!("noise sigma: {e}")))?;
    let (w, h) = (frame.width(), frame.height());
    let src = frame.to_millimeters();
    let mut out = src.clone();
    for v in 0..h {
        for u in 0..w {
            let d = src[v * w + u];
            if d == 0 {
                continue;
            }
            let edge = [(-1i64, 0i64), (1, 0), (0, -1), (0, 1)].iter().any(|(du, dv)| {
                let (x, y) = (u as i64 + du, v as i64 + dv);
                if x < 0 || y < 0 || x >= w as i64 || y >= h as i64 {
                    return false;
                }
                let n = src[y as usize * w + x as usize];
                n == 0 || n.abs_diff(d) > 20
            });
            if edge && rng.random_bool(noise.edge_dropout.clamp(0.0, 1.0)) {
                out[v * w + u] = 0;
                continue;
            }
            let z = d as f64 + normal.sample(rng);
            out[v * w + u] = z.round().clamp(1.0, (MAX_DEPTH_MM - 1) as f64) as u16;
        }
    }
    DepthFrame::from_millimeters(w, h, &out, *frame.intrinsics())
}
