use std::f64::consts::{PI, TAU};
use std::ops::RangeInclusive;

use rand::Rng;
use serde::{Deserialize, Serialize};

use super::fk::forward_kinematics;
use super::intersect::self_intersects;
use super::params::{Articulation, FingerParams, PoseParams, ThumbParams, Viewpoint};
use super::skeleton::HandSkeleton;
use crate::camera::Vector3;
use crate::{Error, Result};

/// Closed uniform range `[lo, hi]`; `lo == hi` pins the value.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Span {
    pub lo: f64,
    pub hi: f64,
}

impl Span {
    pub const fn new(lo: f64, hi: f64) -> Self {
        Self { lo, hi }
    }

    pub const fn fixed(v: f64) -> Self {
        Self { lo: v, hi: v }
    }

    pub fn contains(&self, x: f64) -> bool {
        (self.lo..=self.hi).contains(&x)
    }

    pub fn mid(&self) -> f64 {
        0.5 * (self.lo + self.hi)
    }

    fn draw<R: Rng + ?Sized>(&self, rng: &mut R) -> f64 {
        if self.lo == self.hi {
            self.lo
        } else {
            rng.random_range(RangeInclusive::new(self.lo, self.hi))
        }
    }
}

/// Independent uniform ranges for every pose parameter.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SamplingRanges {
    pub finger_bend: Span,
    pub finger_mcp_side: Span,
    pub thumb_cmc_bend: Span,
    pub thumb_cmc_side: Span,
    pub thumb_cmc_elongation: Span,
    pub thumb_mcp_bend: Span,
    pub thumb_mcp_side: Span,
    pub thumb_ip_bend: Span,
    pub wrist_bend: Span,
    pub wrist_side: Span,
    pub scale: Span,
    pub tilt: Span,
    pub yaw: Span,
    pub roll: Span,
}

impl Default for SamplingRanges {
    fn default() -> Self {
        Self {
            finger_bend: Span::new(-PI / 2.0, PI / 7.0),
            finger_mcp_side: Span::new(-PI / 8.0, PI / 8.0),
            thumb_cmc_bend: Span::new(-1.0, 0.5),
            thumb_cmc_side: Span::new(-0.7, 1.2),
            thumb_cmc_elongation: Span::new(0.8, 1.2),
            thumb_mcp_bend: Span::new(-1.0, -0.6),
            thumb_mcp_side: Span::new(-0.2, 0.5),
            thumb_ip_bend: Span::fixed(0.0),
            wrist_bend: Span::new(-1.0, 1.0),
            wrist_side: Span::new(-0.5, 0.8),
            scale: Span::new(2.0 / 3.0, 1.5),
            tilt: Span::new(0.0, TAU),
            yaw: Span::new(0.0, TAU),
            roll: Span::new(0.0, TAU),
        }
    }
}

impl SamplingRanges {
    /// Draws one parameter set without the intersection check. Translation is
    /// left at the origin.
    pub fn draw<R: Rng + ?Sized>(&self, rng: &mut R) -> PoseParams {
        let art = |rng: &mut R, b: &Span, s: &Span| Articulation { bend: b.draw(rng), side: s.draw(rng) };
        let wrist = art(rng, &self.wrist_bend, &self.wrist_side);
        let cmc = art(rng, &self.thumb_cmc_bend, &self.thumb_cmc_side);
        let cmc_elongation = self.thumb_cmc_elongation.draw(rng);
        let mcp = art(rng, &self.thumb_mcp_bend, &self.thumb_mcp_side);
        let ip_bend = self.thumb_ip_bend.draw(rng);
        let mut fingers = [FingerParams::default(); 4];
        for f in fingers.iter_mut() {
            f.mcp = art(rng, &self.finger_bend, &self.finger_mcp_side);
            f.pip_bend = self.finger_bend.draw(rng);
            f.dip_bend = self.finger_bend.draw(rng);
        }
        let scale = self.scale.draw(rng);
        let viewpoint = Viewpoint { tilt: self.tilt.draw(rng), yaw: self.yaw.draw(rng), roll: self.roll.draw(rng) };
        PoseParams {
            translation: Vector3::zeros(),
            viewpoint,
            scale,
            wrist,
            thumb: ThumbParams { cmc, cmc_elongation, mcp, ip_bend },
            fingers,
        }
    }

    /// Whether every parameter lies in its closed range.
    pub fn contains(&self, p: &PoseParams) -> bool {
        let t = &p.thumb;
        let fingers_ok = p.fingers.iter().all(|f| {
            self.finger_bend.contains(f.mcp.bend)
                && self.finger_mcp_side.contains(f.mcp.side)
                && self.finger_bend.contains(f.pip_bend)
                && self.finger_bend.contains(f.dip_bend)
        });
        fingers_ok
            && self.thumb_cmc_bend.contains(t.cmc.bend)
            && self.thumb_cmc_side.contains(t.cmc.side)
            && self.thumb_cmc_elongation.contains(t.cmc_elongation)
            && self.thumb_mcp_bend.contains(t.mcp.bend)
            && self.thumb_mcp_side.contains(t.mcp.side)
            && self.thumb_ip_bend.contains(t.ip_bend)
            && self.wrist_bend.contains(p.wrist.bend)
            && self.wrist_side.contains(p.wrist.side)
            && self.scale.contains(p.scale)
            && self.tilt.contains(p.viewpoint.tilt)
            && self.yaw.contains(p.viewpoint.yaw)
            && self.roll.contains(p.viewpoint.roll)
    }

    /// Parameters at the middle of every range, identity viewpoint, unit scale.
    pub fn midpoint(&self) -> PoseParams {
        let mut p = PoseParams::rest();
        let mid_art = |b: &Span, s: &Span| Articulation { bend: b.mid(), side: s.mid() };
        p.wrist = mid_art(&self.wrist_bend, &self.wrist_side);
        p.thumb = ThumbParams {
            cmc: mid_art(&self.thumb_cmc_bend, &self.thumb_cmc_side),
            cmc_elongation: self.thumb_cmc_elongation.mid(),
            mcp: mid_art(&self.thumb_mcp_bend, &self.thumb_mcp_side),
            ip_bend: self.thumb_ip_bend.mid(),
        };
        for f in p.fingers.iter_mut() {
            f.mcp = mid_art(&self.finger_bend, &self.finger_mcp_side);
            f.pip_bend = self.finger_bend.mid();
            f.dip_bend = self.finger_bend.mid();
        }
        p
    }
}

/// Rejection sampler over [`SamplingRanges`] that discards self-intersecting
/// hands.
#[derive(Debug, Clone)]
pub struct PoseSampler {
    pub ranges: SamplingRanges,
    /// Consecutive rejections tolerated before giving up.
    pub max_rejections: usize,
}

impl Default for PoseSampler {
    fn default() -> Self {
        Self { ranges: SamplingRanges::default(), max_rejections: 1000 }
    }
}

impl PoseSampler {
    pub fn new(ranges: SamplingRanges) -> Self {
        Self { ranges, ..Self::default() }
    }

    /// Returns an accepted sample and the number of draws rejected before it.
    pub fn sample_counted<R: Rng + ?Sized>(&self, rng: &mut R, skeleton: &HandSkeleton) -> Result<(PoseParams, usize)> {
        for rejected in 0..=self.max_rejections {
            let p = self.ranges.draw(rng);
            if !self_intersects(&forward_kinematics(&p, skeleton), skeleton) {
                return Ok((p, rejected));
            }
        }
        Err(Error::SamplingExhausted(self.max_rejections + 1))
    }

    pub fn sample<R: Rng + ?Sized>(&self, rng: &mut R, skeleton: &HandSkeleton) -> Result<PoseParams> {
        self.sample_counted(rng, skeleton).map(|(p, _)| p)
    }
}

/// Draws a non-self-intersecting pose from the default ranges.
pub fn sample_pose<R: Rng + ?Sized>(rng: &mut R, skeleton: &HandSkeleton) -> Result<PoseParams> {
    PoseSampler::default().sample(rng, skeleton)
}
