//! De-skew, rotation stage, translation-only alignment and trajectory error.

pub mod icp;

use std::collections::BTreeMap;

use nalgebra::Isometry3;
use thiserror::Error;

pub use icp::{icp_translation, IcpParams};

use crate::geom::{rot_from_control_angles, Rotation, UnitQuaternion, Vec3};
use crate::simcore::{run_simulation, LidarFrame, Policy, Pose, SimConfig, SimError};

#[derive(Debug, Clone, PartialEq, Error)]
pub enum SlamError {
    #[error("no pose available at t = {0}")]
    MissingPose(f64),
    #[error("only {0} correspondences, need at least 3")]
    InsufficientOverlap(usize),
    #[error("frame pair set is empty")]
    EmptyPairSet,
    #[error("pair ({0}, {1}) is out of range")]
    InvalidPair(usize, usize),
    #[error("trajectories have different lengths ({0} vs {1})")]
    LengthMismatch(usize, usize),
    #[error("timestamps differ at index {index}: {est} vs {truth}")]
    Misaligned { index: usize, est: f64, truth: f64 },
    #[error(transparent)]
    Sim(#[from] SimError),
}

/// Rigid transform; `T * p = R p + t`.
pub type Transform = Isometry3<f64>;

pub fn transform(rotation: &Rotation, translation: &Vec3) -> Transform {
    Transform::from_parts(
        (*translation).into(),
        UnitQuaternion::from_rotation_matrix(rotation),
    )
}

#[derive(Debug, Clone, PartialEq, Default)]
pub struct PointCloud {
    pub points: Vec<Vec3>,
    pub timestamps: Vec<f64>,
    pub ray_indices: Vec<usize>,
}

impl PointCloud {
    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    pub fn push(&mut self, p: Vec3, t: f64, ray: usize) {
        self.points.push(p);
        self.timestamps.push(t);
        self.ray_indices.push(ray);
    }

    /// Returns along the nominal pattern directions, in the head frame.
    pub fn from_frame_head(frame: &LidarFrame) -> Self {
        let mut c = Self::default();
        for p in &frame.points {
            if let Some(v) = p.head_point() {
                c.push(v, p.timestamp, p.ray_index);
            }
        }
        c
    }

    /// Returns along the commanded directions, in the robot frame.
    pub fn from_frame_commanded(frame: &LidarFrame) -> Self {
        let mut c = Self::default();
        for p in &frame.points {
            if let Some(v) = p.commanded_point() {
                c.push(v, p.timestamp, p.ray_index);
            }
        }
        c
    }

    pub fn transformed(&self, r: &Rotation, t: &Vec3) -> Self {
        Self {
            points: self.points.iter().map(|p| r * p + t).collect(),
            ..self.clone()
        }
    }
}

/// Time-sorted pose samples with linear/spherical interpolation.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct PoseTrack {
    poses: Vec<Pose>,
}

impl PoseTrack {
    pub fn new(mut poses: Vec<Pose>) -> Self {
        poses.sort_by(|a, b| a.timestamp.total_cmp(&b.timestamp));
        Self { poses }
    }

    /// Interpolated pose, or `None` outside the sampled span.
    pub fn at(&self, t: f64) -> Option<Pose> {
        const SLACK: f64 = 1e-9;
        let (first, last) = (self.poses.first()?, self.poses.last()?);
        if t < first.timestamp - SLACK || t > last.timestamp + SLACK {
            return None;
        }
        let i = self.poses.partition_point(|p| p.timestamp <= t);
        if i == 0 {
            return Some(*first);
        }
        if i == self.poses.len() {
            return Some(*last);
        }
        let (a, b) = (&self.poses[i - 1], &self.poses[i]);
        let span = b.timestamp - a.timestamp;
        let s = if span > 0.0 {
            (t - a.timestamp) / span
        } else {
            0.0
        };
        let qa = UnitQuaternion::from_rotation_matrix(&a.rotation);
        let qb = UnitQuaternion::from_rotation_matrix(&b.rotation);
        Some(Pose {
            rotation: qa.slerp(&qb, s).to_rotation_matrix(),
            translation: a.translation.lerp(&b.translation, s),
            angular_velocity: a.angular_velocity.lerp(&b.angular_velocity, s),
            linear_acceleration: a.linear_acceleration.lerp(&b.linear_acceleration, s),
            timestamp: t,
        })
    }
}

/// Re-express every point in the robot frame at the first point's time.
pub fn deskew_cloud<F>(cloud: &PointCloud, pose_at: F) -> Result<PointCloud, SlamError>
where
    F: Fn(f64) -> Option<Pose>,
{
    let Some(&t0) = cloud.timestamps.first() else {
        return Ok(cloud.clone());
    };
    let ref_pose = pose_at(t0).ok_or(SlamError::MissingPose(t0))?;
    let r0_inv = ref_pose.rotation.transpose();
    let mut out = PointCloud {
        points: Vec::with_capacity(cloud.len()),
        ..cloud.clone()
    };
    for (p, &t) in cloud.points.iter().zip(&cloud.timestamps) {
        let pk = pose_at(t).ok_or(SlamError::MissingPose(t))?;
        out.points
            .push(r0_inv * (pk.rotation * p + pk.translation - ref_pose.translation));
    }
    Ok(out)
}

/// De-skew a frame's head-frame returns.
pub fn deskew<F>(frame: &LidarFrame, pose_at: F) -> Result<PointCloud, SlamError>
where
    F: Fn(f64) -> Option<Pose>,
{
    deskew_cloud(&PointCloud::from_frame_head(frame), pose_at)
}

/// Rotate a head-frame cloud by the mirror command `(alpha, beta)` so it
/// lands in the robot frame.
pub fn rotate_stage(cloud: &PointCloud, alpha: f64, beta: f64) -> PointCloud {
    if alpha == 0.0 && beta == 0.0 {
        return cloud.clone();
    }
    cloud.transformed(&rot_from_control_angles(alpha, beta), &Vec3::zeros())
}

/// Least-squares translation `t` with `b ≈ a + t` over shared ray indices.
pub fn estimate_translation(a: &PointCloud, b: &PointCloud) -> Result<Vec3, SlamError> {
    let index_a: BTreeMap<usize, Vec3> = a
        .ray_indices
        .iter()
        .copied()
        .zip(a.points.iter().copied())
        .collect();
    let index_b: BTreeMap<usize, Vec3> = b
        .ray_indices
        .iter()
        .copied()
        .zip(b.points.iter().copied())
        .collect();
    let (mut sa, mut sb, mut n) = (Vec3::zeros(), Vec3::zeros(), 0usize);
    for (ray, pb) in &index_b {
        if let Some(pa) = index_a.get(ray) {
            sa += pa;
            sb += pb;
            n += 1;
        }
    }
    if n < 3 {
        return Err(SlamError::InsufficientOverlap(n));
    }
    Ok((sb - sa) / n as f64)
}

#[derive(Debug, Clone, PartialEq)]
pub struct TrajectoryPair {
    pub est: Vec<(f64, Transform)>,
    pub truth: Vec<(f64, Transform)>,
    pub pairs: Vec<(usize, usize)>,
}

/// Which frame pairs enter the error average.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum PairSet {
    Consecutive,
    All,
}

impl TrajectoryPair {
    pub fn new(est: Vec<(f64, Transform)>, truth: Vec<(f64, Transform)>, set: PairSet) -> Self {
        let n = est.len().min(truth.len());
        let pairs = match set {
            PairSet::Consecutive => (1..n).map(|j| (j - 1, j)).collect(),
            PairSet::All => (0..n)
                .flat_map(|i| (i + 1..n).map(move |j| (i, j)))
                .collect(),
        };
        Self { est, truth, pairs }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AteReport {
    /// Mean translation norm of the relative-pose error, m.
    pub e_trans: f64,
    /// Mean rotation angle of the relative-pose error, rad.
    pub e_rot: f64,
    pub pairs: usize,
}

/// Timestamp tolerance when pairing trajectories.
pub const TIMESTAMP_TOLERANCE: f64 = 1e-6;

/// Average over `F` of `T̂_j T̂_i⁻¹ (T_j T_i⁻¹)⁻¹`.
pub fn ate(pair: &TrajectoryPair) -> Result<AteReport, SlamError> {
    if pair.est.len() != pair.truth.len() {
        return Err(SlamError::LengthMismatch(pair.est.len(), pair.truth.len()));
    }
    for (index, ((te, _), (tt, _))) in pair.est.iter().zip(&pair.truth).enumerate() {
        if (te - tt).abs() > TIMESTAMP_TOLERANCE {
            return Err(SlamError::Misaligned {
                index,
                est: *te,
                truth: *tt,
            });
        }
    }
    if pair.pairs.is_empty() {
        return Err(SlamError::EmptyPairSet);
    }
    let n = pair.est.len();
    let (mut et, mut er) = (0.0, 0.0);
    for &(i, j) in &pair.pairs {
        if i >= n || j >= n {
            return Err(SlamError::InvalidPair(i, j));
        }
        let rel_est = pair.est[j].1 * pair.est[i].1.inverse();
        let rel_true = pair.truth[j].1 * pair.truth[i].1.inverse();
        // Translation of rel_est · rel_true⁻¹, arranged to vanish exactly
        // when the relative poses agree.
        let (re, rt) = (rel_est.rotation, rel_true.rotation);
        let tt = rel_true.translation.vector;
        let back = rt.inverse() * tt;
        let dt = (rel_est.translation.vector - tt)
            + (rt.to_rotation_matrix().matrix() - re.to_rotation_matrix().matrix()) * back;
        et += dt.norm();
        let q = re * rt.inverse();
        er += 2.0 * q.imag().norm().atan2(q.w.abs());
    }
    let m = pair.pairs.len() as f64;
    Ok(AteReport {
        e_trans: et / m,
        e_rot: er / m,
        pairs: pair.pairs.len(),
    })
}

/// Rate of random mirror commands in the odometry experiment, Hz.
pub const ODOMETRY_COMMAND_RATE: f64 = 10.0;

#[derive(Debug, Clone, PartialEq)]
pub struct OdometryRun {
    pub est: Vec<(f64, Transform)>,
    pub truth: Vec<(f64, Transform)>,
    pub report: AteReport,
}

/// Random-mirror odometry run with translation-only alignment.
///
/// Robot attitude is taken from ground truth so that only translation is
/// estimated; frames must coincide with command periods for the rotation
/// stage to see a single command per frame.
pub fn odometry_run(
    config: &SimConfig,
    rotation_stage_enabled: bool,
    control_sigma_deg: f64,
    control_noise_sigma_deg: f64,
    icp: &IcpParams,
) -> Result<OdometryRun, SlamError> {
    let mut cfg = config.clone();
    cfg.compensation.policy = Policy::RandomHead {
        sigma: control_sigma_deg.to_radians(),
        rate: ODOMETRY_COMMAND_RATE,
    };
    cfg.compensation.actuation_noise_sigma = control_noise_sigma_deg.to_radians();
    let out = run_simulation(&cfg)?;
    let track = PoseTrack::new(out.pose_log.clone());
    let full = cfg.lidar.pattern.len();

    let mut est = Vec::new();
    let mut truth = Vec::new();
    let mut prev: Option<PointCloud> = None;
    for frame in out.frames.iter().filter(|f| f.points.len() == full) {
        let t0 = frame.points[0].timestamp;
        let p0 = track.at(t0).ok_or(SlamError::MissingPose(t0))?;
        let (alpha, beta) = frame.control_angles;
        let cloud = if rotation_stage_enabled && (alpha != 0.0 || beta != 0.0) {
            // With the command known, de-skew in the head frame so the
            // subsequent rotation lands each point in the robot frame.
            let mount = rot_from_control_angles(alpha, beta);
            rotate_stage(
                &deskew(frame, |t| {
                    track.at(t).map(|p| Pose {
                        rotation: p.rotation * mount,
                        ..p
                    })
                })?,
                alpha,
                beta,
            )
        } else {
            deskew(frame, |t| track.at(t))?
        };
        let cloud = cloud.transformed(&p0.rotation, &Vec3::zeros());
        let position = match (&prev, est.last()) {
            (Some(a), Some((_, last))) => {
                let last: &Transform = last;
                // Without enough planar matches, fall back to ray-index
                // correspondence, then to a stationary estimate.
                let t = match icp_translation(a, &cloud, icp) {
                    Err(SlamError::InsufficientOverlap(_)) => match estimate_translation(a, &cloud)
                    {
                        Err(SlamError::InsufficientOverlap(_)) => Vec3::zeros(),
                        r => r?,
                    },
                    r => r?,
                };
                last.translation.vector - t
            }
            _ => p0.translation,
        };
        est.push((t0, transform(&p0.rotation, &position)));
        truth.push((t0, transform(&p0.rotation, &p0.translation)));
        prev = Some(cloud);
    }
    let report = ate(&TrajectoryPair::new(
        est.clone(),
        truth.clone(),
        PairSet::Consecutive,
    ))?;
    Ok(OdometryRun { est, truth, report })
}

/// Translation error of [`odometry_run`] with default alignment settings.
pub fn odometry_experiment(
    config: &SimConfig,
    rotation_stage_enabled: bool,
    control_sigma_deg: f64,
    control_noise_sigma_deg: f64,
) -> Result<f64, SlamError> {
    odometry_run(
        config,
        rotation_stage_enabled,
        control_sigma_deg,
        control_noise_sigma_deg,
        &IcpParams::default(),
    )
    .map(|r| r.report.e_trans)
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;

    fn cloud(points: Vec<Vec3>) -> PointCloud {
        let n = points.len();
        PointCloud {
            points,
            timestamps: (0..n).map(|k| k as f64 * 0.01).collect(),
            ray_indices: (0..n).collect(),
        }
    }

    fn translated(x: Vec3, t: f64) -> Pose {
        Pose {
            translation: x,
            ..Pose::identity(t)
        }
    }

    #[test]
    fn static_deskew_is_identity() {
        let c = cloud(vec![Vec3::new(1.0, 2.0, 3.0), Vec3::new(-1.0, 0.5, 0.0)]);
        let d = deskew_cloud(&c, |t| Some(Pose::identity(t))).unwrap();
        assert_eq!(d, c);
    }

    #[test]
    fn deskew_translation_bookkeeping() {
        // A wall point seen 0.1 m closer after the platform moved +0.1 m in x
        // maps back to the same reference-frame coordinates.
        let c = cloud(vec![Vec3::new(2.0, 0.0, 0.0), Vec3::new(1.9, 0.0, 0.0)]);
        let pose_at = |t: f64| Some(translated(Vec3::new(10.0 * t, 0.0, 0.0), t));
        let d = deskew_cloud(&c, pose_at).unwrap();
        assert_abs_diff_eq!(d.points[1], Vec3::new(2.0, 0.0, 0.0), epsilon = 1e-12);
    }

    #[test]
    fn deskew_rotation_bookkeeping() {
        let w = 2.0;
        let pose_at = |t: f64| {
            Some(Pose {
                rotation: Rotation::from_axis_angle(&Vec3::z_axis(), w * t),
                ..Pose::identity(t)
            })
        };
        let world = Vec3::new(3.0, 1.0, 0.5);
        let t1 = 0.01;
        let seen = Rotation::from_axis_angle(&Vec3::z_axis(), -w * t1) * world;
        let d = deskew_cloud(&cloud(vec![world, seen]), pose_at).unwrap();
        assert_abs_diff_eq!(d.points[1], world, epsilon = 1e-12);
    }

    #[test]
    fn deskew_missing_pose() {
        let c = cloud(vec![Vec3::x(), Vec3::y()]);
        let r = deskew_cloud(&c, |t| (t < 0.005).then(|| Pose::identity(t)));
        assert_eq!(r, Err(SlamError::MissingPose(0.01)));
    }

    #[test]
    fn pose_track_interpolates() {
        let a = Pose {
            translation: Vec3::zeros(),
            ..Pose::identity(0.0)
        };
        let b = Pose {
            translation: Vec3::new(2.0, 0.0, 0.0),
            rotation: Rotation::from_axis_angle(&Vec3::z_axis(), 0.4),
            ..Pose::identity(1.0)
        };
        let track = PoseTrack::new(vec![b, a]);
        let m = track.at(0.25).unwrap();
        assert_abs_diff_eq!(m.translation, Vec3::new(0.5, 0.0, 0.0), epsilon = 1e-15);
        assert_abs_diff_eq!(m.rotation.angle(), 0.1, epsilon = 1e-9);
        assert!(track.at(1.5).is_none());
        assert!(track.at(-0.1).is_none());
    }

    #[test]
    fn rotate_stage_examples() {
        let c = cloud(vec![Vec3::x(), Vec3::new(0.3, -0.2, 0.9)]);
        assert_eq!(rotate_stage(&c, 0.0, 0.0), c);
        let r = rotate_stage(&c, 0.0, 90f64.to_radians());
        assert_abs_diff_eq!(r.points[0], Vec3::y(), epsilon = 1e-15);
        assert_eq!(r.timestamps, c.timestamps);
        assert_eq!(r.ray_indices, c.ray_indices);
    }

    #[test]
    fn translation_examples() {
        let a = cloud(vec![
            Vec3::new(1.0, 0.0, 0.0),
            Vec3::new(0.0, 2.0, 0.0),
            Vec3::new(0.0, 0.0, 3.0),
            Vec3::new(1.0, 1.0, 1.0),
        ]);
        assert_eq!(estimate_translation(&a, &a).unwrap(), Vec3::zeros());
        let d = Vec3::new(0.3, -0.1, 0.05);
        let b = a.transformed(&Rotation::identity(), &d);
        assert_abs_diff_eq!(estimate_translation(&a, &b).unwrap(), d, epsilon = 1e-15);
    }

    #[test]
    fn translation_needs_overlap() {
        let a = cloud(vec![Vec3::x(), Vec3::y()]);
        assert_eq!(
            estimate_translation(&a, &a),
            Err(SlamError::InsufficientOverlap(2))
        );
        let mut b = cloud(vec![Vec3::x(), Vec3::y(), Vec3::z()]);
        b.ray_indices = vec![7, 8, 9];
        let a3 = cloud(vec![Vec3::x(), Vec3::y(), Vec3::z()]);
        assert_eq!(
            estimate_translation(&a3, &b),
            Err(SlamError::InsufficientOverlap(0))
        );
    }

    fn line(n: usize, step: Vec3) -> Vec<(f64, Transform)> {
        (0..n)
            .map(|k| {
                (
                    k as f64,
                    transform(&Rotation::identity(), &(step * k as f64)),
                )
            })
            .collect()
    }

    #[test]
    fn ate_examples() {
        let truth = line(11, Vec3::new(0.1, 0.0, 0.0));
        let r = ate(&TrajectoryPair::new(
            truth.clone(),
            truth.clone(),
            PairSet::All,
        ))
        .unwrap();
        assert_eq!(r.e_trans, 0.0);

        let ident = line(11, Vec3::zeros());
        let mut est = ident.clone();
        est[5].1 = transform(&Rotation::identity(), &Vec3::new(0.5, 0.0, 0.0));
        let r = ate(&TrajectoryPair::new(
            est,
            ident.clone(),
            PairSet::Consecutive,
        ))
        .unwrap();
        assert_abs_diff_eq!(r.e_trans, 0.1, epsilon = 1e-15);

        let mut est = ident.clone();
        let delta = Vec3::new(0.0, 0.3, 0.4);
        est[3].1 = transform(&Rotation::identity(), &delta);
        let pair = TrajectoryPair {
            est,
            truth: ident,
            pairs: vec![(0, 3)],
        };
        assert_abs_diff_eq!(ate(&pair).unwrap().e_trans, 0.5, epsilon = 1e-15);
    }

    #[test]
    fn ate_errors() {
        let t = line(3, Vec3::x());
        let empty = TrajectoryPair {
            est: t.clone(),
            truth: t.clone(),
            pairs: vec![],
        };
        assert_eq!(ate(&empty), Err(SlamError::EmptyPairSet));
        let bad = TrajectoryPair {
            est: t.clone(),
            truth: t.clone(),
            pairs: vec![(0, 5)],
        };
        assert_eq!(ate(&bad), Err(SlamError::InvalidPair(0, 5)));
        let mut shifted = t.clone();
        shifted[1].0 += 1e-3;
        assert!(matches!(
            ate(&TrajectoryPair::new(shifted, t.clone(), PairSet::All)),
            Err(SlamError::Misaligned { index: 1, .. })
        ));
        assert_eq!(
            ate(&TrajectoryPair::new(line(2, Vec3::x()), t, PairSet::All)),
            Err(SlamError::LengthMismatch(2, 3))
        );
    }
}
