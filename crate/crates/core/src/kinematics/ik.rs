//! Damped least-squares inverse kinematics against 2D joint labels.
//!
//! The objective is the summed Euclidean pixel distance between labels and
//! projected model joints. Each iteration solves an iteratively reweighted,
//! Levenberg-damped Gauss-Newton system with the analytic Jacobian; a step is
//! accepted only when the objective strictly decreases.

use nalgebra::{DMatrix, DVector, Matrix3, Rotation3};
use serde::{Deserialize, Serialize};

use super::fk::{joint_jacobian, Chain};
use super::params::{PoseParams, NUM_PARAMS, ROLL, TILT, YAW};
use super::skeleton::HandSkeleton;
use crate::camera::CameraIntrinsics;
use crate::joints::{Joint, NUM_JOINTS};
use crate::{Error, Result};

/// A clicked 2D joint location, pixels.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Label {
    pub joint: Joint,
    pub u: f64,
    pub v: f64,
}

/// One term of the fit: a 2D location and optionally a depth for the joint.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct IkTarget {
    pub joint: Joint,
    pub u: f64,
    pub v: f64,
    /// Target depth in millimeters.
    pub depth: Option<f64>,
    /// Pixels charged per millimeter of depth error.
    pub depth_weight: f64,
}

impl From<Label> for IkTarget {
    fn from(l: Label) -> Self {
        Self { joint: l.joint, u: l.u, v: l.v, depth: None, depth_weight: 0.0 }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct IkConfig {
    pub max_iterations: usize,
    /// Stop when the parameter step norm falls below this.
    pub step_tolerance: f64,
    /// Stop when the mean per-target residual (pixels) falls below this.
    pub residual_tolerance: f64,
    /// Weight of the pull toward the initial parameters.
    pub regularization: f64,
    /// Retry from other viewpoints when the first fit leaves more than
    /// `restart_threshold` pixels of mean residual.
    pub restarts: bool,
    pub restart_threshold: f64,
    /// Fewer labels than this are fitted but flagged under-constrained.
    pub min_labels: usize,
}

impl Default for IkConfig {
    fn default() -> Self {
        Self {
            max_iterations: 200,
            step_tolerance: 1e-6,
            residual_tolerance: 1e-3,
            regularization: 1e-3,
            restarts: true,
            restart_threshold: 0.5,
            min_labels: 3,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct IkSolution {
    pub params: PoseParams,
    /// Residual per target, pixels (depth terms included when present).
    pub residuals: Vec<(Joint, f64)>,
    /// Sum of the per-target residuals.
    pub objective: f64,
    pub iterations: usize,
    pub under_constrained: bool,
    /// Objective after each accepted step of the winning run, starting with
    /// its initial value.
    pub history: Vec<f64>,
}

impl IkSolution {
    pub fn mean_residual(&self) -> f64 {
        if self.residuals.is_empty() {
            0.0
        } else {
            self.objective / self.residuals.len() as f64
        }
    }
}

/// Pixel projection of every joint and its Jacobian with respect to the flat
/// parameter vector: rows `2i` and `2i + 1` hold `du/dθ` and `dv/dθ` of joint `i`.
pub fn projected_jacobian(
    params: &PoseParams,
    skeleton: &HandSkeleton,
    k: &CameraIntrinsics,
) -> Result<(Vec<(f64, f64)>, DMatrix<f64>)> {
    let chain = Chain::compute(params, skeleton);
    let jac3 = joint_jacobian(params, skeleton);
    let mut uv = Vec::with_capacity(NUM_JOINTS);
    let mut m = DMatrix::zeros(2 * NUM_JOINTS, NUM_PARAMS);
    for (i, p) in chain.positions.iter().enumerate() {
        uv.push(k.project(p)?);
        let (du, dv) = projection_rows(k, p);
        for c in 0..NUM_PARAMS {
            m[(2 * i, c)] = du.dot(&jac3[i][c]);
            m[(2 * i + 1, c)] = dv.dot(&jac3[i][c]);
        }
    }
    Ok((uv, m))
}

fn projection_rows(k: &CameraIntrinsics, p: &crate::Point3) -> (crate::Vector3, crate::Vector3) {
    let iz = 1.0 / p.z;
    (
        crate::Vector3::new(k.fu * iz, 0.0, -k.fu * p.x * iz * iz),
        crate::Vector3::new(0.0, k.fv * iz, -k.fv * p.y * iz * iz),
    )
}

struct Problem<'a> {
    targets: &'a [IkTarget],
    k: &'a CameraIntrinsics,
    skeleton: &'a HandSkeleton,
    config: &'a IkConfig,
}

struct Run {
    theta: [f64; NUM_PARAMS],
    objective: f64,
    history: Vec<f64>,
    iterations: usize,
}

impl Problem<'_> {
    fn residual_vectors(&self, theta: &[f64; NUM_PARAMS]) -> Option<Vec<[f64; 3]>> {
        let chain = Chain::from_flat(theta, self.skeleton);
        self.targets
            .iter()
            .map(|t| {
                let p = chain.positions[t.joint.index()];
                let (u, v) = self.k.project(&p).ok()?;
                let dz = t.depth.map_or(0.0, |z| t.depth_weight * (p.z - z));
                Some([u - t.u, v - t.v, dz])
            })
            .collect()
    }

    fn objective(&self, theta: &[f64; NUM_PARAMS]) -> f64 {
        self.residual_vectors(theta)
            .map(|rs| rs.iter().map(|r| norm3(r)).sum())
            .unwrap_or(f64::INFINITY)
    }

    fn solve(&self, start: [f64; NUM_PARAMS], prior: &[f64; NUM_PARAMS]) -> Run {
        let cfg = self.config;
        let n = self.targets.len().max(1) as f64;
        let mut theta = start;
        let mut objective = self.objective(&theta);
        let mut history = vec![objective];
        let mut mu = 1e-3;
        let mut iterations = 0;
        if !objective.is_finite() {
            return Run { theta, objective, history, iterations };
        }
        'outer: while iterations < cfg.max_iterations && objective / n > cfg.residual_tolerance {
            iterations += 1;
            let params = PoseParams::from_vec(&theta);
            let chain = Chain::from_flat(&theta, self.skeleton);
            let jac3 = joint_jacobian(&params, self.skeleton);
            let mut a = DMatrix::<f64>::zeros(NUM_PARAMS, NUM_PARAMS);
            let mut g = DVector::<f64>::zeros(NUM_PARAMS);
            let residuals = self.residual_vectors(&theta).expect("finite objective");
            for (t, r) in self.targets.iter().zip(&residuals) {
                let p = chain.positions[t.joint.index()];
                let (du, dv) = projection_rows(self.k, &p);
                let rows = [du, dv, crate::Vector3::new(0.0, 0.0, t.depth_weight)];
                let weight = 1.0 / norm3(r).max(1e-2);
                let used = if t.depth.is_some() { 3 } else { 2 };
                let mut jrow = [[0.0; NUM_PARAMS]; 3];
                for (row, dir) in jrow.iter_mut().zip(&rows).take(used) {
                    for c in 0..NUM_PARAMS {
                        row[c] = dir.dot(&jac3[t.joint.index()][c]);
                    }
                }
                for ri in 0..used {
                    for c1 in 0..NUM_PARAMS {
                        let x = jrow[ri][c1];
                        if x == 0.0 {
                            continue;
                        }
                        g[c1] += weight * x * r[ri];
                        for c2 in 0..NUM_PARAMS {
                            a[(c1, c2)] += weight * x * jrow[ri][c2];
                        }
                    }
                }
            }
            for c in 0..NUM_PARAMS {
                a[(c, c)] += cfg.regularization;
                g[c] += cfg.regularization * (theta[c] - prior[c]);
            }
            loop {
                let mut damped = a.clone();
                for c in 0..NUM_PARAMS {
                    damped[(c, c)] += mu * a[(c, c)];
                }
                let step = match damped.cholesky() {
                    Some(ch) => ch.solve(&(-&g)),
                    None => {
                        mu *= 4.0;
                        if mu > 1e10 {
                            break 'outer;
                        }
                        continue;
                    }
                };
                if step.norm() < cfg.step_tolerance {
                    break 'outer;
                }
                let mut trial = theta;
                for c in 0..NUM_PARAMS {
                    trial[c] += step[c];
                }
                let f = self.objective(&trial);
                if f < objective {
                    theta = trial;
                    objective = f;
                    history.push(f);
                    mu = (mu / 3.0).max(1e-9);
                    break;
                }
                mu *= 4.0;
                if mu > 1e10 {
                    break 'outer;
                }
            }
        }
        Run { theta, objective, history, iterations }
    }
}

#[inline]
fn norm3(r: &[f64; 3]) -> f64 {
    (r[0] * r[0] + r[1] * r[1] + r[2] * r[2]).sqrt()
}

/// The 24 rotations mapping the coordinate axes onto themselves.
fn axis_aligned_rotations() -> Vec<Rotation3<f64>> {
    let perms = [[0, 1, 2], [0, 2, 1], [1, 0, 2], [1, 2, 0], [2, 0, 1], [2, 1, 0]];
    let mut out = Vec::with_capacity(24);
    for p in perms {
        for signs in 0..8u32 {
            let mut m = Matrix3::zeros();
            for (row, &col) in p.iter().enumerate() {
                m[(row, col)] = if signs >> row & 1 == 1 { -1.0 } else { 1.0 };
            }
            if m.determinant() > 0.0 {
                out.push(Rotation3::from_matrix_unchecked(m));
            }
        }
    }
    out
}

/// Fits pose parameters to a mixed set of 2D and depth targets.
pub fn solve_targets(
    targets: &[IkTarget],
    k: &CameraIntrinsics,
    skeleton: &HandSkeleton,
    init: &PoseParams,
    config: &IkConfig,
) -> Result<IkSolution> {
    for t in targets {
        let depth_ok = t.depth.is_none_or(f64::is_finite) && t.depth_weight.is_finite();
        if !(t.u.is_finite() && t.v.is_finite() && depth_ok) {
            return Err(Error::NonFiniteLabel(t.joint));
        }
    }
    if !init.is_finite() {
        return Err(Error::InvalidConfig("initial parameters are not finite".into()));
    }
    let problem = Problem { targets, k, skeleton, config };
    let theta0 = init.to_vec();
    let n = targets.len().max(1) as f64;

    let mut best = Run { theta: theta0, objective: problem.objective(&theta0), history: vec![], iterations: 0 };
    best.history.push(best.objective);
    if !targets.is_empty() {
        let first = problem.solve(theta0, &theta0);
        if first.objective <= best.objective {
            best = first;
        }
        if config.restarts && best.objective / n > config.restart_threshold {
            for rot in axis_aligned_rotations() {
                let (x, y, z) = rot.euler_angles();
                let mut start = theta0;
                start[TILT] = x;
                start[YAW] = y;
                start[ROLL] = z;
                let run = problem.solve(start, &start);
                if run.objective < best.objective {
                    best = run;
                }
                if best.objective / n <= config.restart_threshold {
                    break;
                }
            }
        }
    }

    let final_residuals = problem.residual_vectors(&best.theta);
    let residuals = targets
        .iter()
        .enumerate()
        .map(|(i, t)| (t.joint, final_residuals.as_ref().map_or(f64::INFINITY, |r| norm3(&r[i]))))
        .collect();
    Ok(IkSolution {
        params: PoseParams::from_vec(&best.theta),
        residuals,
        objective: best.objective,
        iterations: best.iterations,
        under_constrained: targets.len() < config.min_labels,
        history: best.history,
    })
}

/// Fits pose parameters so projected joints match the 2D labels.
pub fn ik_fit(
    labels: &[Label],
    k: &CameraIntrinsics,
    skeleton: &HandSkeleton,
    init: &PoseParams,
    config: &IkConfig,
) -> Result<IkSolution> {
    let targets: Vec<IkTarget> = labels.iter().copied().map(IkTarget::from).collect();
    solve_targets(&targets, k, skeleton, init, config)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::camera::Vector3;
    use crate::kinematics::{forward_kinematics, sample_pose};
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn camera() -> CameraIntrinsics {
        CameraIntrinsics::new(475.0, 475.0, 320.0, 240.0).unwrap()
    }

    fn labels_for(p: &PoseParams, s: &HandSkeleton, joints: &[Joint]) -> Vec<Label> {
        let pose = forward_kinematics(p, s);
        joints
            .iter()
            .map(|j| {
                let (u, v) = camera().project(&pose.position(*j)).unwrap();
                Label { joint: *j, u, v }
            })
            .collect()
    }

    #[test]
    fn optimal_init_is_returned_unchanged() {
        let s = HandSkeleton::standard();
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let truth = sample_pose(&mut rng, &s).unwrap().with_translation(Vector3::new(10.0, -20.0, 500.0));
        let labels = labels_for(&truth, &s, &Joint::ALL);
        let sol = ik_fit(&labels, &camera(), &s, &truth, &IkConfig::default()).unwrap();
        assert!(sol.objective < 1e-9);
        assert_eq!(sol.params, truth);
        assert_eq!(sol.iterations, 0);
    }

    #[test]
    fn five_labels_descend_monotonically() {
        let s = HandSkeleton::standard();
        let mut rng = ChaCha8Rng::seed_from_u64(8);
        let truth = sample_pose(&mut rng, &s).unwrap().with_translation(Vector3::new(0.0, 0.0, 450.0));
        let joints = [Joint::Wrist, Joint::ThumbTip, Joint::IndexTip, Joint::MiddleTip, Joint::PinkyTip];
        let labels = labels_for(&truth, &s, &joints);
        let init = PoseParams::rest().with_translation(truth.translation);
        let sol = ik_fit(&labels, &camera(), &s, &init, &IkConfig::default()).unwrap();
        assert!(sol.history.len() > 1);
        assert!(sol.history.windows(2).all(|w| w[1] < w[0]));
        let start = ik_fit(&labels, &camera(), &s, &init, &IkConfig { max_iterations: 0, restarts: false, ..Default::default() })
            .unwrap()
            .objective;
        assert!(sol.objective <= start);
        assert!(!sol.under_constrained);
    }

    #[test]
    fn few_labels_are_flagged() {
        let s = HandSkeleton::standard();
        let init = PoseParams::rest().with_translation(Vector3::new(0.0, 0.0, 500.0));
        let labels = [Label { joint: Joint::Wrist, u: 330.0, v: 250.0 }];
        let sol = ik_fit(&labels, &camera(), &s, &init, &IkConfig::default()).unwrap();
        assert!(sol.under_constrained);
        assert!(sol.objective < 1e-2);
    }

    #[test]
    fn non_finite_labels_are_rejected() {
        let s = HandSkeleton::standard();
        let labels = [Label { joint: Joint::IndexTip, u: f64::NAN, v: 1.0 }];
        let err = ik_fit(&labels, &camera(), &s, &PoseParams::rest(), &IkConfig::default()).unwrap_err();
        assert!(matches!(err, Error::NonFiniteLabel(Joint::IndexTip)));
    }

    #[test]
    fn rotations_are_proper_and_distinct() {
        let rs = axis_aligned_rotations();
        assert_eq!(rs.len(), 24);
        for (i, a) in rs.iter().enumerate() {
            for b in &rs[i + 1..] {
                assert!(a.angle_to(b) > 0.1);
            }
        }
    }

    #[test]
    fn projected_jacobian_matches_finite_differences() {
        let s = HandSkeleton::standard();
        let k = camera();
        let mut rng = ChaCha8Rng::seed_from_u64(17);
        for _ in 0..20 {
            let p = sample_pose(&mut rng, &s).unwrap().with_translation(Vector3::new(20.0, 10.0, 600.0));
            let (_, jac) = projected_jacobian(&p, &s, &k).unwrap();
            let base = p.to_vec();
            let h = 1e-6;
            let mut fd = DMatrix::zeros(2 * NUM_JOINTS, NUM_PARAMS);
            for c in 0..NUM_PARAMS {
                let (mut hi, mut lo) = (base, base);
                hi[c] += h;
                lo[c] -= h;
                let a = projected_jacobian(&PoseParams::from_vec(&hi), &s, &k).unwrap().0;
                let b = projected_jacobian(&PoseParams::from_vec(&lo), &s, &k).unwrap().0;
                for i in 0..NUM_JOINTS {
                    fd[(2 * i, c)] = (a[i].0 - b[i].0) / (2.0 * h);
                    fd[(2 * i + 1, c)] = (a[i].1 - b[i].1) / (2.0 * h);
                }
            }
            let rel = (&jac - &fd).norm() / fd.norm();
            assert!(rel < 1e-4, "relative error {rel}");
        }
    }
}
