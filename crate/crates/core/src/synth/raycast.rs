//! Analytic ray casting from the camera center. Rays are unit vectors; hit
//! distances are along the ray, not depth.

use crate::camera::{CameraIntrinsics, Point3, Vector3};
use crate::kinematics::Capsule;

/// Something a depth camera can see.
#[derive(Debug, Clone, Copy)]
pub enum Primitive {
    Capsule(Capsule),
    /// Axis-aligned box.
    Cuboid { min: Point3, max: Point3 },
    /// Points `p` with `normal . p = offset`, `normal` unit length.
    Plane { normal: Vector3, offset: f64 },
}

impl Primitive {
    pub fn hit(&self, d: &Vector3) -> Option<f64> {
        match self {
            Primitive::Capsule(c) => ray_capsule(d, &c.a, &c.b, c.radius),
            Primitive::Cuboid { min, max } => ray_box(d, min, max),
            Primitive::Plane { normal, offset } => {
                let dn = normal.dot(d);
                (dn.abs() > 1e-12).then(|| offset / dn).filter(|t| *t > 0.0)
            }
        }
    }

    /// Pixel rectangle `[u0, u1) x [v0, v1)` outside of which rays cannot hit.
    pub fn screen_bounds(&self, k: &CameraIntrinsics, width: usize, height: usize) -> (usize, usize, usize, usize) {
        let (lo, hi) = match self {
            Primitive::Capsule(c) => {
                let r = Vector3::repeat(c.radius);
                (c.a.inf(&c.b) - r, c.a.sup(&c.b) + r)
            }
            Primitive::Cuboid { min, max } => (*min, *max),
            Primitive::Plane { .. } => return (0, width, 0, height),
        };
        if lo.z <= 1e-6 {
            return (0, width, 0, height);
        }
        let (mut u0, mut u1, mut v0, mut v1) = (f64::INFINITY, f64::NEG_INFINITY, f64::INFINITY, f64::NEG_INFINITY);
        for i in 0..8 {
            let p = Point3::new(
                if i & 1 == 0 { lo.x } else { hi.x },
                if i & 2 == 0 { lo.y } else { hi.y },
                if i & 4 == 0 { lo.z } else { hi.z },
            );
            let (u, v) = (k.fu * p.x / p.z + k.cu, k.fv * p.y / p.z + k.cv);
            u0 = u0.min(u);
            u1 = u1.max(u);
            v0 = v0.min(v);
            v1 = v1.max(v);
        }
        let clamp = |x: f64, n: usize| x.clamp(0.0, n as f64) as usize;
        (clamp(u0.floor(), width), clamp(u1.ceil() + 1.0, width), clamp(v0.floor(), height), clamp(v1.ceil() + 1.0, height))
    }
}

fn ray_sphere(d: &Vector3, c: &Point3, r: f64) -> Option<f64> {
    let b = d.dot(&c.coords);
    let h = b * b - (c.coords.norm_squared() - r * r);
    if h < 0.0 {
        return None;
    }
    let t = b - h.sqrt();
    (t > 0.0).then_some(t)
}

/// First intersection with the union of a finite cylinder and its two end
/// spheres.
pub(crate) fn ray_capsule(d: &Vector3, a: &Point3, b: &Point3, r: f64) -> Option<f64> {
    let mut best = ray_sphere(d, a, r);
    let sb = ray_sphere(d, b, r);
    if sb.is_some_and(|t| best.is_none_or(|s| t < s)) {
        best = sb;
    }
    let ba = b - a;
    let oa = -a.coords;
    let baba = ba.norm_squared();
    let bard = ba.dot(d);
    let baoa = ba.dot(&oa);
    let rdoa = d.dot(&oa);
    let oaoa = oa.norm_squared();
    let qa = baba - bard * bard;
    if baba > 0.0 && qa > 1e-9 * baba {
        let qb = baba * rdoa - baoa * bard;
        let qc = baba * oaoa - baoa * baoa - r * r * baba;
        let h = qb * qb - qa * qc;
        if h >= 0.0 {
            let t = (-qb - h.sqrt()) / qa;
            let y = baoa + t * bard;
            if t > 0.0 && y > 0.0 && y < baba && best.is_none_or(|s| t < s) {
                best = Some(t);
            }
        }
    }
    best
}

fn ray_box(d: &Vector3, min: &Point3, max: &Point3) -> Option<f64> {
    let (mut t0, mut t1) = (0.0f64, f64::INFINITY);
    for i in 0..3 {
        if d[i].abs() < 1e-15 {
            if 0.0 < min[i] || 0.0 > max[i] {
                return None;
            }
            continue;
        }
        let (a, b) = (min[i] / d[i], max[i] / d[i]);
        t0 = t0.max(a.min(b));
        t1 = t1.min(a.max(b));
    }
    (t0 <= t1 && t0 > 0.0).then_some(t0)
}
