//! Ray-cast scanning simulator with pose-delayed mirror compensation.

pub mod imu;
pub mod rng;
pub mod scene;
pub mod trajectory;

use std::collections::{BTreeSet, VecDeque};

use thiserror::Error;

pub use imu::{imu_measure, ImuNoiseParams, ImuState};
pub use scene::{raycast, raycast_hit, Primitive, Scene, Shape, PLUS_TARGET_ID};
pub use trajectory::{gen_trajectory, JitterAxes, Pose, Trajectory, TrajectorySpec};

use crate::compensate::{
    aim_control, control_rotation, StabilizerState, DEFAULT_STABILIZER_WINDOW,
};
use crate::geom::{
    cart_to_sph, make_scan_grid, rot_from_control_angles, sph_to_cart, GeomError, Rotation,
    ScanPattern, SphericalControl, Vec3,
};
use crate::memsctl::{clamp_command, mirror_model, ContinuousSim, MirrorParams, ModelError};
use rng::{keyed_normal, keyed_rng, Stream};

/// Slack when comparing event times on the fixed-step clock.
const TIME_EPS: f64 = 1e-9;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum SimError {
    #[error("invalid config: {0}")]
    InvalidConfig(String),
    #[error(transparent)]
    Geom(#[from] GeomError),
    #[error(transparent)]
    Model(#[from] ModelError),
}

#[derive(Debug, Clone, PartialEq)]
pub struct LidarSpec {
    pub max_range: f64,
    pub min_range: f64,
    /// Points per second.
    pub sample_rate: f64,
    pub pattern: ScanPattern,
    /// Additive Gaussian range noise, m.
    pub range_noise_sigma: f64,
}

impl Default for LidarSpec {
    fn default() -> Self {
        Self {
            max_range: 4.0,
            min_range: 0.05,
            sample_rate: 400.0,
            pattern: make_scan_grid(20, 20, 7f64.to_radians(), 7f64.to_radians())
                .expect("valid default grid"),
            range_noise_sigma: 0.0,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum Policy {
    /// Emit the raw pattern.
    Off,
    /// Hold the sliding-window mean attitude.
    Stabilize { window: usize },
    /// Hold a fixed world attitude.
    HoldAttitude { desired: Rotation },
    /// Point the principal ray at a world target.
    Aim { target: Vec3 },
    /// Rotate the whole pattern by Gaussian per-axis angles (rad) redrawn
    /// at `rate` Hz, independent of the robot pose.
    RandomHead { sigma: f64, rate: f64 },
}

impl Policy {
    fn uses_pose(&self) -> bool {
        matches!(
            self,
            Self::Stabilize { .. } | Self::HoldAttitude { .. } | Self::Aim { .. }
        )
    }
}

/// Where the compensator's attitude comes from.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum PoseSource {
    /// Ground-truth snapshots, as from motion capture.
    #[default]
    Truth,
    /// Gyro-integrated attitude starting from the true initial attitude.
    Imu,
}

#[derive(Debug, Clone, PartialEq)]
pub struct CompensationConfig {
    pub policy: Policy,
    /// Pose snapshot rate, Hz.
    pub pose_rate: f64,
    /// Latency between a snapshot and its use, s.
    pub delay: f64,
    /// Per-axis Gaussian error added to every actuated point after clamping, rad.
    pub actuation_noise_sigma: f64,
    pub pose_source: PoseSource,
    /// Pass the principal command through the mirror's dynamic model.
    pub mirror_dynamics: bool,
}

impl Default for CompensationConfig {
    fn default() -> Self {
        Self {
            policy: Policy::Off,
            pose_rate: 400.0,
            delay: 0.0,
            actuation_noise_sigma: 0.0,
            pose_source: PoseSource::Truth,
            mirror_dynamics: false,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SimConfig {
    pub scene: Scene,
    pub trajectory: TrajectorySpec,
    pub lidar: LidarSpec,
    pub compensation: CompensationConfig,
    pub imu_noise: ImuNoiseParams,
    pub mirror: MirrorParams,
    pub seed: u64,
    /// s
    pub duration: f64,
}

impl SimConfig {
    pub fn validate(&self) -> Result<(), SimError> {
        let bad = |msg: &str| Err(SimError::InvalidConfig(msg.to_string()));
        if !(self.duration > 0.0 && self.duration.is_finite()) {
            return bad("duration must be positive");
        }
        let l = &self.lidar;
        if !(l.min_range >= 0.0 && l.min_range < l.max_range) {
            return bad("lidar.min_range must be non-negative and below lidar.max_range");
        }
        if !(l.sample_rate > 0.0 && l.sample_rate.is_finite()) {
            return bad("lidar.sample_rate must be positive");
        }
        if l.pattern.is_empty() {
            return bad("lidar.pattern must not be empty");
        }
        if !(l.range_noise_sigma >= 0.0) {
            return bad("lidar.range_noise_sigma must be non-negative");
        }
        let c = &self.compensation;
        if c.policy.uses_pose() && !(c.pose_rate > 0.0 && c.pose_rate.is_finite()) {
            return bad("compensation.pose_rate must be positive when compensation is on");
        }
        if !(c.delay >= 0.0 && c.delay.is_finite()) {
            return bad("compensation.delay must be non-negative");
        }
        if !(c.actuation_noise_sigma >= 0.0) {
            return bad("compensation.actuation_noise_sigma must be non-negative");
        }
        match &c.policy {
            Policy::RandomHead { sigma, rate } => {
                if !(*sigma >= 0.0) || !(*rate > 0.0) {
                    return bad(
                        "compensation.sigma must be non-negative and compensation.rate positive",
                    );
                }
            }
            Policy::Aim { target } if !target.iter().all(|v| v.is_finite()) => {
                return bad("compensation.target must be finite")
            }
            _ => {}
        }
        self.trajectory.validate()?;
        self.imu_noise.validate().map_err(SimError::InvalidConfig)?;
        self.mirror.validate()?;
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PointRecord {
    pub ray_index: usize,
    pub timestamp: f64,
    /// Pattern entry in the head frame.
    pub nominal: SphericalControl,
    /// Control sent to the mirror after compensation and clamping.
    pub control: SphericalControl,
    /// Control the mirror actually reached.
    pub actuated: SphericalControl,
    /// World origin and unit direction of the emitted ray.
    pub origin: Vec3,
    pub direction: Vec3,
    pub range: Option<f64>,
    pub hit_id: Option<u32>,
}

impl PointRecord {
    /// Head-frame point along the nominal pattern direction.
    pub fn head_point(&self) -> Option<Vec3> {
        self.range.map(|r| {
            r * sph_to_cart(&SphericalControl::direction(
                self.nominal.alpha,
                self.nominal.beta,
            ))
        })
    }

    /// Robot-frame point along the commanded direction.
    pub fn commanded_point(&self) -> Option<Vec3> {
        self.range.map(|r| {
            r * sph_to_cart(&SphericalControl::direction(
                self.control.alpha,
                self.control.beta,
            ))
        })
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct LidarFrame {
    pub frame_index: usize,
    pub points: Vec<PointRecord>,
    /// Most recent command rotation when the frame closed.
    pub r_control_applied: Rotation,
    /// Two-axis angles of the principal ray under `r_control_applied`.
    pub control_angles: (f64, f64),
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CommandRecord {
    pub timestamp: f64,
    pub r_control: Rotation,
    /// Principal-ray command after clamping.
    pub principal: (f64, f64),
    pub saturated: bool,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BeamSample {
    pub timestamp: f64,
    /// World direction of the principal ray.
    pub direction: Vec3,
}

#[derive(Debug, Clone, PartialEq, Default)]
pub struct SimOutput {
    pub frames: Vec<LidarFrame>,
    pub command_log: Vec<CommandRecord>,
    pub pose_log: Vec<Pose>,
    pub beam_log: Vec<BeamSample>,
}

#[derive(Debug, Clone, Copy)]
struct Snapshot {
    visible_at: f64,
    rotation: Rotation,
    translation: Vec3,
}

fn policy_rotation(
    policy: &Policy,
    snap: &Snapshot,
    stabilizer: &mut StabilizerState,
) -> Result<Rotation, SimError> {
    Ok(match policy {
        Policy::Stabilize { .. } => {
            let q = crate::geom::UnitQuaternion::from_rotation_matrix(&snap.rotation);
            let desired = stabilizer.update(q)?;
            control_rotation(&snap.rotation, &desired)
        }
        Policy::HoldAttitude { desired } => control_rotation(&snap.rotation, desired),
        Policy::Aim { target } => aim_control(target, &snap.translation, &snap.rotation)?.2,
        Policy::Off | Policy::RandomHead { .. } => Rotation::identity(),
    })
}

/// Index of the first point emitted at or after step `k`.
fn first_point(k: u64, sample_rate: f64, update_rate: f64) -> u64 {
    (k as f64 * sample_rate / update_rate - TIME_EPS)
        .ceil()
        .max(0.0) as u64
}

pub fn run_simulation(config: &SimConfig) -> Result<SimOutput, SimError> {
    config.validate()?;
    let traj = Trajectory::new(config.trajectory.clone(), config.seed)?;
    let (mirror, lidar, comp) = (&config.mirror, &config.lidar, &config.compensation);
    let policy = &comp.policy;
    let off = matches!(policy, Policy::Off);
    let dt = 1.0 / mirror.update_rate;
    let n_steps = (config.duration * mirror.update_rate).round() as u64;
    let pattern = &lidar.pattern;
    let seed = config.seed;

    let window = match policy {
        Policy::Stabilize { window } => *window,
        _ => DEFAULT_STABILIZER_WINDOW,
    };
    let mut stabilizer = StabilizerState::new(window);
    let mut fifo: VecDeque<Snapshot> = VecDeque::new();
    let mut next_snap = 0u64;
    let mut next_head = 0u64;
    let mut r_control = Rotation::identity();

    let mut imu_state = ImuState::new(&config.imu_noise, seed);
    let mut r_est = traj.pose(0.0).rotation;

    let mut dynamics = if comp.mirror_dynamics {
        let h1 = mirror_model(mirror);
        Some([ContinuousSim::new(&h1)?, ContinuousSim::new(&h1)?])
    } else {
        None
    };
    let substeps = (dt / crate::memsctl::REFERENCE_DT).round().max(1.0) as usize;

    let mut out = SimOutput::default();
    let mut frame: Option<LidarFrame> = None;

    for k in 0..n_steps {
        let t = k as f64 * dt;
        let pose = traj.pose(t);
        out.pose_log.push(pose);

        if policy.uses_pose() {
            while next_snap as f64 / comp.pose_rate <= t + TIME_EPS {
                let ts = next_snap as f64 / comp.pose_rate;
                let (rotation, translation) = match comp.pose_source {
                    PoseSource::Truth => {
                        let p = traj.pose(ts);
                        (p.rotation, p.translation)
                    }
                    PoseSource::Imu => (r_est, pose.translation),
                };
                fifo.push_back(Snapshot {
                    visible_at: ts + comp.delay,
                    rotation,
                    translation,
                });
                next_snap += 1;
            }
            while fifo.front().is_some_and(|s| s.visible_at <= t + TIME_EPS) {
                let snap = fifo.pop_front().expect("front checked");
                r_control = policy_rotation(policy, &snap, &mut stabilizer)?;
            }
        }
        if let Policy::RandomHead { sigma, rate } = policy {
            while next_head as f64 / rate <= t + TIME_EPS {
                let mut rng = keyed_rng(seed, Stream::HeadCommand, next_head);
                let a: f64 =
                    sigma * rand::Rng::sample::<f64, _>(&mut rng, rand_distr::StandardNormal);
                let b: f64 =
                    sigma * rand::Rng::sample::<f64, _>(&mut rng, rand_distr::StandardNormal);
                r_control = rot_from_control_angles(a, b);
                next_head += 1;
            }
        }
        if comp.pose_source == PoseSource::Imu {
            let (gyro, _, next) = imu_measure(&pose, &config.imu_noise, imu_state, dt);
            imu_state = next;
            r_est *= Rotation::new(gyro * dt);
        }

        let principal = cart_to_sph(&(r_control * Vec3::x()))?;
        let ((pa, pb), saturated) = if off {
            ((0.0, 0.0), false)
        } else {
            clamp_command(principal.alpha, principal.beta, mirror)
        };
        let lag = match dynamics.as_mut() {
            Some([sa, sb]) => {
                let lag = (sa.output(pa) - pa, sb.output(pb) - pb);
                for _ in 0..substeps {
                    sa.step_held(pa, dt / substeps as f64);
                    sb.step_held(pb, dt / substeps as f64);
                }
                lag
            }
            None => (0.0, 0.0),
        };
        out.command_log.push(CommandRecord {
            timestamp: t,
            r_control,
            principal: (pa, pb),
            saturated,
        });
        let beam = SphericalControl::direction(pa + lag.0, pb + lag.1);
        out.beam_log.push(BeamSample {
            timestamp: t,
            direction: pose.rotation * sph_to_cart(&beam),
        });

        let (i0, i1) = (
            first_point(k, lidar.sample_rate, mirror.update_rate),
            first_point(k + 1, lidar.sample_rate, mirror.update_rate),
        );
        for i in i0..i1 {
            let ray = (i % pattern.len() as u64) as usize;
            if ray == 0 {
                out.frames.extend(frame.take());
            }
            let ts = i as f64 / lidar.sample_rate;
            let nominal = pattern.points[ray];
            let control = if off {
                nominal
            } else {
                let c = cart_to_sph(
                    &(r_control
                        * sph_to_cart(&SphericalControl::direction(nominal.alpha, nominal.beta))),
                )?;
                let ((a, b), _) = clamp_command(c.alpha, c.beta, mirror);
                SphericalControl::direction(a, b)
            };
            let mut actuated =
                SphericalControl::direction(control.alpha + lag.0, control.beta + lag.1);
            if comp.actuation_noise_sigma > 0.0 {
                actuated.alpha +=
                    comp.actuation_noise_sigma * keyed_normal(seed, Stream::Actuation, 2 * i);
                actuated.beta +=
                    comp.actuation_noise_sigma * keyed_normal(seed, Stream::Actuation, 2 * i + 1);
            }
            let p = traj.pose(ts);
            let direction = p.rotation * sph_to_cart(&actuated);
            let mut rng = keyed_rng(seed, Stream::Range, i);
            let hit = raycast_hit(&config.scene, &p.translation, &direction, lidar, &mut rng);
            let f = frame.get_or_insert_with(|| LidarFrame {
                frame_index: (i / pattern.len() as u64) as usize,
                points: Vec::with_capacity(pattern.len()),
                r_control_applied: r_control,
                control_angles: (0.0, 0.0),
            });
            f.points.push(PointRecord {
                ray_index: ray,
                timestamp: ts,
                nominal,
                control,
                actuated,
                origin: p.translation,
                direction,
                range: hit.map(|h| h.0),
                hit_id: hit.map(|h| h.1),
            });
            f.r_control_applied = r_control;
            f.control_angles = (principal.alpha, principal.beta);
        }
    }
    out.frames.extend(frame.take());
    // Close the pose log at the end of the last step so it spans every point.
    out.pose_log.push(traj.pose(n_steps as f64 * dt));
    Ok(out)
}

/// Spread of the principal-ray world direction over a run.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Dispersion {
    /// RMS angle about the normalized mean direction, rad.
    pub angular_std: f64,
    /// Convex-hull area of the directions in the tangent plane at the mean, sr.
    pub trace_area: f64,
}

/// Dispersion of a beam log; an empty log yields zeros.
pub fn beam_dispersion(beam_log: &[BeamSample]) -> Dispersion {
    let dirs: Vec<Vec3> = beam_log.iter().map(|b| b.direction.normalize()).collect();
    dispersion_of(&dirs)
}

pub fn dispersion_of(dirs: &[Vec3]) -> Dispersion {
    let zero = Dispersion {
        angular_std: 0.0,
        trace_area: 0.0,
    };
    let sum: Vec3 = dirs.iter().sum();
    if dirs.is_empty() || sum.norm() == 0.0 {
        return zero;
    }
    let mean = sum.normalize();
    let ms = dirs
        .iter()
        .map(|d| d.cross(&mean).norm().atan2(d.dot(&mean)).powi(2))
        .sum::<f64>()
        / dirs.len() as f64;

    let helper = if mean.x.abs() < 0.9 {
        Vec3::x()
    } else {
        Vec3::y()
    };
    let u = mean.cross(&helper).normalize();
    let v = mean.cross(&u);
    let planar: Vec<(f64, f64)> = dirs.iter().map(|d| (d.dot(&u), d.dot(&v))).collect();
    Dispersion {
        angular_std: ms.sqrt(),
        trace_area: hull_area(planar),
    }
}

/// Area of the convex hull of planar points (monotone chain).
pub fn hull_area(mut pts: Vec<(f64, f64)>) -> f64 {
    pts.sort_by(|a, b| a.0.total_cmp(&b.0).then(a.1.total_cmp(&b.1)));
    pts.dedup();
    if pts.len() < 3 {
        return 0.0;
    }
    let cross = |o: (f64, f64), a: (f64, f64), b: (f64, f64)| {
        (a.0 - o.0) * (b.1 - o.1) - (a.1 - o.1) * (b.0 - o.0)
    };
    let mut hull: Vec<(f64, f64)> = Vec::with_capacity(2 * pts.len());
    for pass in 0..2 {
        let start = hull.len();
        let iter: Box<dyn Iterator<Item = &(f64, f64)>> = if pass == 0 {
            Box::new(pts.iter())
        } else {
            Box::new(pts.iter().rev())
        };
        for &p in iter {
            while hull.len() >= start + 2
                && cross(hull[hull.len() - 2], hull[hull.len() - 1], p) <= 0.0
            {
                hull.pop();
            }
            hull.push(p);
        }
        hull.pop();
    }
    let n = hull.len();
    0.5 * (0..n)
        .map(|i| {
            let (a, b) = (hull[i], hull[(i + 1) % n]);
            a.0 * b.1 - b.0 * a.1
        })
        .sum::<f64>()
        .abs()
}

/// Accumulated appearance of a target in the scan pattern.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Silhouette {
    /// Distinct pattern columns that ever returned from the target.
    pub columns: usize,
    /// Distinct pattern rows that ever returned from the target.
    pub rows: usize,
    pub hits: usize,
}

pub fn target_silhouette(
    frames: &[LidarFrame],
    pattern: &ScanPattern,
    target_ids: &[u32],
) -> Silhouette {
    let mut cols = BTreeSet::new();
    let mut rows = BTreeSet::new();
    let mut hits = 0;
    for p in frames.iter().flat_map(|f| &f.points) {
        if p.hit_id.is_some_and(|id| target_ids.contains(&id)) {
            let (r, c) = pattern.row_col(p.ray_index);
            rows.insert(r);
            cols.insert(c);
            hits += 1;
        }
    }
    Silhouette {
        columns: cols.len(),
        rows: rows.len(),
        hits,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;

    fn hover(amplitude: f64) -> SimConfig {
        SimConfig {
            scene: Scene::plus_target(2.4),
            trajectory: TrajectorySpec::HoverJitter {
                axes: JitterAxes::YAW_PITCH,
                freq: 1.0,
                amplitude,
                position: Vec3::zeros(),
            },
            lidar: LidarSpec::default(),
            compensation: CompensationConfig::default(),
            imu_noise: ImuNoiseParams::default(),
            mirror: MirrorParams::default(),
            seed: 1,
            duration: 2.0,
        }
    }

    #[test]
    fn off_policy_emits_raw_pattern() {
        let cfg = hover(1f64.to_radians());
        let out = run_simulation(&cfg).unwrap();
        assert_eq!(out.frames.len(), 2);
        for f in &out.frames {
            assert_eq!(f.points.len(), cfg.lidar.pattern.len());
            for p in &f.points {
                assert_eq!(p.control, cfg.lidar.pattern.points[p.ray_index]);
            }
        }
    }

    #[test]
    fn frame_timestamps_are_monotone_and_ranges_bounded() {
        let mut cfg = hover(0.02);
        cfg.lidar.range_noise_sigma = 0.01;
        cfg.compensation.policy = Policy::Aim {
            target: Vec3::new(2.4, 0.0, 0.0),
        };
        cfg.compensation.pose_rate = 50.0;
        let out = run_simulation(&cfg).unwrap();
        for f in &out.frames {
            assert!(f
                .points
                .windows(2)
                .all(|w| w[0].timestamp <= w[1].timestamp));
            for p in &f.points {
                if let Some(r) = p.range {
                    assert!(r >= cfg.lidar.min_range && r <= cfg.lidar.max_range);
                }
            }
        }
    }

    #[test]
    fn hold_attitude_at_full_rate_is_exact() {
        let mut cfg = hover(1f64.to_radians());
        cfg.mirror.step_quantum = 0.0;
        cfg.mirror.fov_alpha = (-0.5, 0.5);
        cfg.mirror.fov_beta = (-0.5, 0.5);
        cfg.compensation.policy = Policy::HoldAttitude {
            desired: Rotation::identity(),
        };
        cfg.compensation.pose_rate = cfg.mirror.update_rate;
        let d = beam_dispersion(&run_simulation(&cfg).unwrap().beam_log);
        assert!(d.angular_std < 1e-6, "{}", d.angular_std);
    }

    #[test]
    fn zero_jitter_has_no_dispersion() {
        let base = hover(0.0);
        let policies = [
            Policy::Off,
            Policy::Stabilize { window: 10 },
            Policy::HoldAttitude {
                desired: Rotation::identity(),
            },
            Policy::Aim {
                target: Vec3::new(2.4, 0.0, 0.0),
            },
        ];
        for policy in policies {
            let mut cfg = base.clone();
            cfg.compensation.policy = policy;
            cfg.compensation.pose_rate = 10.0;
            let d = beam_dispersion(&run_simulation(&cfg).unwrap().beam_log);
            assert!(d.angular_std < 1e-9);
        }
    }

    #[test]
    fn deterministic() {
        let mut cfg = hover(0.02);
        cfg.lidar.range_noise_sigma = 0.01;
        cfg.compensation.policy = Policy::Stabilize { window: 5 };
        cfg.compensation.pose_rate = 30.0;
        cfg.compensation.delay = 0.03;
        cfg.compensation.actuation_noise_sigma = 1e-3;
        assert_eq!(run_simulation(&cfg).unwrap(), run_simulation(&cfg).unwrap());
    }

    #[test]
    fn delay_holds_identity_until_first_snapshot() {
        let mut cfg = hover(0.02);
        cfg.compensation.policy = Policy::HoldAttitude {
            desired: Rotation::identity(),
        };
        cfg.compensation.pose_rate = 10.0;
        cfg.compensation.delay = 0.1;
        let out = run_simulation(&cfg).unwrap();
        let dt = 1.0 / cfg.mirror.update_rate;
        for c in out
            .command_log
            .iter()
            .take_while(|c| c.timestamp < 0.1 - 0.5 * dt)
        {
            assert_eq!(c.r_control, Rotation::identity());
        }
        let at = out
            .command_log
            .iter()
            .find(|c| c.timestamp >= 0.1 - 1e-9)
            .unwrap();
        assert_ne!(at.r_control, Rotation::identity());
    }

    #[test]
    fn rejects_zero_pose_rate() {
        let mut cfg = hover(0.01);
        cfg.compensation.policy = Policy::Stabilize { window: 10 };
        cfg.compensation.pose_rate = 0.0;
        assert!(
            matches!(run_simulation(&cfg), Err(SimError::InvalidConfig(m)) if m.contains("pose_rate"))
        );
    }

    #[test]
    fn many_points_per_step() {
        let mut cfg = hover(0.0);
        cfg.lidar.sample_rate = 150_000.0;
        cfg.duration = 0.01;
        let out = run_simulation(&cfg).unwrap();
        let n: usize = out.frames.iter().map(|f| f.points.len()).sum();
        assert_eq!(n, 1500);
        assert_eq!(out.frames.len(), 4);
    }

    #[test]
    fn dispersion_examples() {
        let log: Vec<BeamSample> = (0..10)
            .map(|k| BeamSample {
                timestamp: k as f64,
                direction: Vec3::x(),
            })
            .collect();
        assert_eq!(
            beam_dispersion(&log),
            Dispersion {
                angular_std: 0.0,
                trace_area: 0.0
            }
        );

        let a = Vec3::x();
        let b = Rotation::from_axis_angle(&Vec3::z_axis(), 1f64.to_radians()) * a;
        let log: Vec<BeamSample> = (0..10)
            .map(|k| BeamSample {
                timestamp: k as f64,
                direction: if k % 2 == 0 { a } else { b },
            })
            .collect();
        assert_abs_diff_eq!(
            beam_dispersion(&log).angular_std,
            0.5f64.to_radians(),
            epsilon = 1e-12
        );
    }

    #[test]
    fn hull_of_square() {
        let pts = vec![
            (0.0, 0.0),
            (1.0, 0.0),
            (1.0, 1.0),
            (0.0, 1.0),
            (0.5, 0.5),
            (0.2, 0.9),
        ];
        assert_abs_diff_eq!(hull_area(pts), 1.0, epsilon = 1e-15);
    }

    #[test]
    fn imu_source_tracks_truth_with_zero_noise() {
        let mut cfg = hover(1f64.to_radians());
        cfg.imu_noise = ImuNoiseParams::zero();
        cfg.mirror.step_quantum = 0.0;
        cfg.compensation.policy = Policy::HoldAttitude {
            desired: Rotation::identity(),
        };
        cfg.compensation.pose_rate = 400.0;
        cfg.compensation.pose_source = PoseSource::Imu;
        let d = beam_dispersion(&run_simulation(&cfg).unwrap().beam_log);
        let mut off = cfg.clone();
        off.compensation.policy = Policy::Off;
        let d_off = beam_dispersion(&run_simulation(&off).unwrap().beam_log);
        assert!(d.angular_std < 0.05 * d_off.angular_std);
    }

    #[test]
    fn mirror_dynamics_lags_commands() {
        let mut cfg = hover(1f64.to_radians());
        cfg.compensation.policy = Policy::HoldAttitude {
            desired: Rotation::identity(),
        };
        cfg.compensation.pose_rate = 400.0;
        let ideal = beam_dispersion(&run_simulation(&cfg).unwrap().beam_log);
        cfg.compensation.mirror_dynamics = true;
        let lagged = beam_dispersion(&run_simulation(&cfg).unwrap().beam_log);
        assert!(lagged.angular_std > ideal.angular_std);
    }
}
