use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::raycast::Primitive;
use super::{render_primitives, RenderConfig};
use crate::camera::{DepthFrame, Point3, Vector3};
use crate::Result;

/// A random room: a back wall, a floor and one to three boxes.
pub fn room_scene<R: Rng + ?Sized>(rng: &mut R, config: &RenderConfig) -> Result<DepthFrame> {
    let mut prims = Vec::new();
    let wall = Vector3::new(rng.random_range(-0.2..0.2), rng.random_range(-0.2..0.2), 1.0).normalize();
    prims.push(Primitive::Plane { normal: wall, offset: rng.random_range(1500.0..2800.0) * wall.z });
    prims.push(Primitive::Plane { normal: Vector3::y(), offset: rng.random_range(250.0..500.0) });
    for _ in 0..rng.random_range(1..=3) {
        let z = rng.random_range(700.0..2000.0);
        let c = Point3::new(rng.random_range(-0.6..0.6) * z * 0.5, rng.random_range(-0.6..0.6) * z * 0.5, z);
        let half = Vector3::new(rng.random_range(50.0..250.0), rng.random_range(50.0..250.0), rng.random_range(50.0..250.0));
        prims.push(Primitive::Cuboid { min: c - half, max: c + half });
    }
    render_primitives(&prims, config)
}

/// `count` room scenes, one ChaCha stream per index.
pub fn seed_backgrounds(count: usize, seed: u64, config: &RenderConfig) -> Result<Vec<DepthFrame>> {
    (0..count)
        .map(|i| {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            rng.set_stream(i as u64);
            room_scene(&mut rng, config)
        })
        .collect()
}

/// Image-plane similarity about the frame center.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AffineParams {
    /// Radians.
    pub angle: f64,
    pub scale: f64,
    /// Pixels.
    pub tx: f64,
    pub ty: f64,
}

impl AffineParams {
    pub fn identity() -> Self {
        Self { angle: 0.0, scale: 1.0, tx: 0.0, ty: 0.0 }
    }

    /// Rotation within 15 degrees, scale in [0.9, 1.1], shift within 10% of
    /// the frame size.
    pub fn sample<R: Rng + ?Sized>(rng: &mut R, width: usize, height: usize) -> Self {
        let max_angle = 15f64.to_radians();
        Self {
            angle: rng.random_range(-max_angle..=max_angle),
            scale: rng.random_range(0.9..=1.1),
            tx: rng.random_range(-0.1..=0.1) * width as f64,
            ty: rng.random_range(-0.1..=0.1) * height as f64,
        }
    }
}

pub fn augment_background<R: Rng + ?Sized>(scene: &DepthFrame, rng: &mut R) -> DepthFrame {
    augment_with(scene, &AffineParams::sample(rng, scene.width(), scene.height()))
}

/// Warps the depth image with nearest-neighbor lookup. Pixels mapping
/// outside the source become missing; depth values are copied unchanged.
pub fn augment_with(scene: &DepthFrame, a: &AffineParams) -> DepthFrame {
    let (w, h) = (scene.width(), scene.height());
    let (cx, cy) = ((w as f64 - 1.0) / 2.0, (h as f64 - 1.0) / 2.0);
    let (s, c) = a.angle.sin_cos();
    let mut out = DepthFrame::empty(w, h, *scene.intrinsics()).expect("source frame is valid");
    for v in 0..h {
        for u in 0..w {
            let (px, py) = ((u as f64 - cx - a.tx) / a.scale, (v as f64 - cy - a.ty) / a.scale);
            let (qx, qy) = (c * px + s * py + cx, -s * px + c * py + cy);
            if let Some(d) = scene.sample(qx, qy) {
                out.set(u, v, Some(d)).expect("depth copied from a valid frame");
            }
        }
    }
    out
}
