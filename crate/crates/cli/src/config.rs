//! Scenario files: TOML with one table per `SimConfig` field.
//!
//! Angles are in degrees, times in seconds and rates in Hz. Every key is
//! optional and falls back to the library default.

use serde::Deserialize;

use rotcomp::geom::{make_scan_grid, Rotation, Vec3};
use rotcomp::memsctl::MirrorParams;
use rotcomp::simcore::{
    CompensationConfig, ImuNoiseParams, JitterAxes, LidarSpec, Policy, PoseSource, Primitive,
    Scene, Shape, SimConfig, TrajectorySpec,
};

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ConfigFile {
    #[serde(default)]
    pub seed: u64,
    pub duration: Option<f64>,
    #[serde(default)]
    pub scene: SceneSection,
    #[serde(default)]
    pub trajectory: TrajectorySection,
    #[serde(default)]
    pub lidar: LidarSection,
    #[serde(default)]
    pub compensation: CompensationSection,
    #[serde(default)]
    pub imu_noise: ImuNoiseSection,
    #[serde(default)]
    pub mirror: MirrorSection,
}

#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SceneSection {
    /// `plus_target`, `room` or `empty`. Extra primitives are appended.
    pub preset: Option<String>,
    /// Distance of the `plus_target` preset, m.
    pub target_distance: Option<f64>,
    #[serde(default)]
    pub primitive: Vec<PrimitiveSection>,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields, tag = "shape", rename_all = "snake_case")]
pub enum PrimitiveSection {
    Box {
        id: u32,
        min: [f64; 3],
        max: [f64; 3],
    },
    Sphere {
        id: u32,
        center: [f64; 3],
        radius: f64,
    },
    Plane {
        id: u32,
        normal: [f64; 3],
        offset: f64,
    },
}

#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TrajectorySection {
    /// `static`, `hover_jitter`, `sinusoid_sweep` or `waypoint_lateral`.
    pub kind: Option<String>,
    /// `yaw_pitch` or `all`.
    pub axes: Option<String>,
    pub freq: Option<f64>,
    pub amplitude: Option<f64>,
    pub position: Option<[f64; 3]>,
    pub start: Option<[f64; 3]>,
    pub end: Option<[f64; 3]>,
    pub period: Option<f64>,
    pub roll_amplitude: Option<f64>,
    /// deg/s
    pub max_rate: Option<f64>,
}

#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct LidarSection {
    pub max_range: Option<f64>,
    pub min_range: Option<f64>,
    pub sample_rate: Option<f64>,
    pub range_noise_sigma: Option<f64>,
    pub rows: Option<usize>,
    pub cols: Option<usize>,
    pub el_span: Option<f64>,
    pub az_span: Option<f64>,
}

#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CompensationSection {
    /// `off`, `stabilize`, `hold_attitude`, `aim` or `random_head`.
    pub policy: Option<String>,
    pub window: Option<usize>,
    /// Roll, pitch, yaw of the held attitude.
    pub desired: Option<[f64; 3]>,
    pub target: Option<[f64; 3]>,
    pub sigma: Option<f64>,
    pub rate: Option<f64>,
    pub pose_rate: Option<f64>,
    pub delay: Option<f64>,
    pub actuation_noise_sigma: Option<f64>,
    /// `truth` or `imu`.
    pub pose_source: Option<String>,
    pub mirror_dynamics: Option<bool>,
}

#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ImuNoiseSection {
    pub gyro_noise_density: Option<f64>,
    pub gyro_random_walk: Option<f64>,
    pub gyro_turn_on_bias_sigma: Option<f64>,
    pub accel_noise_density: Option<f64>,
    pub accel_random_walk: Option<f64>,
    pub accel_turn_on_bias_sigma: Option<f64>,
    pub gyro_bias_corr_time: Option<f64>,
    pub accel_bias_corr_time: Option<f64>,
    pub scale_factor: Option<f64>,
}

#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct MirrorSection {
    pub tau: Option<f64>,
    /// Tip-tilt natural frequency, Hz.
    pub natural_freq: Option<f64>,
    pub zeta: Option<f64>,
    pub fov_alpha: Option<[f64; 2]>,
    pub fov_beta: Option<[f64; 2]>,
    pub step_quantum: Option<f64>,
    pub update_rate: Option<f64>,
    pub f1: Option<f64>,
    pub f2: Option<f64>,
    pub f3: Option<f64>,
}

fn v3(a: [f64; 3]) -> Vec3 {
    Vec3::new(a[0], a[1], a[2])
}

fn deg(x: f64) -> f64 {
    x.to_radians()
}

impl ConfigFile {
    pub fn parse(text: &str) -> Result<Self, String> {
        toml::from_str(text).map_err(|e| e.to_string())
    }

    pub fn build(&self) -> Result<SimConfig, String> {
        let config = SimConfig {
            scene: self.scene.build()?,
            trajectory: self.trajectory.build()?,
            lidar: self.lidar.build()?,
            compensation: self.compensation.build()?,
            imu_noise: self.imu_noise.build(),
            mirror: self.mirror.build(),
            seed: self.seed,
            duration: self.duration.unwrap_or(10.0),
        };
        config.validate().map_err(|e| e.to_string())?;
        Ok(config)
    }
}

impl SceneSection {
    fn build(&self) -> Result<Scene, String> {
        let base = match self.preset.as_deref() {
            Some("plus_target") => Scene::plus_target(self.target_distance.unwrap_or(2.4)),
            Some(name) => Scene::preset(name)
                .ok_or_else(|| format!("scene.preset: unknown preset `{name}`"))?,
            None => Scene::default(),
        };
        let mut primitives = base.primitives().to_vec();
        primitives.extend(self.primitive.iter().map(|p| match *p {
            PrimitiveSection::Box { id, min, max } => Primitive::new(
                id,
                Shape::Box {
                    min: v3(min),
                    max: v3(max),
                },
            ),
            PrimitiveSection::Sphere { id, center, radius } => Primitive::new(
                id,
                Shape::Sphere {
                    center: v3(center),
                    radius,
                },
            ),
            PrimitiveSection::Plane { id, normal, offset } => Primitive::new(
                id,
                Shape::Plane {
                    normal: v3(normal),
                    offset,
                },
            ),
        }));
        Scene::new(primitives).map_err(|e| e.to_string())
    }
}

impl TrajectorySection {
    fn build(&self) -> Result<TrajectorySpec, String> {
        let position = v3(self.position.unwrap_or([0.0; 3]));
        Ok(match self.kind.as_deref().unwrap_or("static") {
            "static" => TrajectorySpec::Static { position },
            "hover_jitter" => TrajectorySpec::HoverJitter {
                axes: match self.axes.as_deref().unwrap_or("yaw_pitch") {
                    "yaw_pitch" => JitterAxes::YAW_PITCH,
                    "all" => JitterAxes::ALL,
                    other => return Err(format!("trajectory.axes: unknown axes `{other}`")),
                },
                freq: self.freq.unwrap_or(0.5),
                amplitude: deg(self.amplitude.unwrap_or(1.0)),
                position,
            },
            "sinusoid_sweep" => TrajectorySpec::SinusoidSweep {
                freq: self
                    .freq
                    .unwrap_or(rotcomp::simcore::trajectory::DEFAULT_SWEEP_FREQ),
                amplitude: deg(self.amplitude.unwrap_or(10.0)),
            },
            "waypoint_lateral" => TrajectorySpec::WaypointLateral {
                start: v3(self.start.unwrap_or([-1.0, 0.0, 0.0])),
                end: v3(self.end.unwrap_or([1.0, 0.0, 0.0])),
                period: self.period.unwrap_or(4.0),
                roll_amplitude: deg(self.roll_amplitude.unwrap_or(0.0)),
                max_rate: deg(self.max_rate.unwrap_or(130.0)),
            },
            other => return Err(format!("trajectory.kind: unknown kind `{other}`")),
        })
    }
}

impl LidarSection {
    fn build(&self) -> Result<LidarSpec, String> {
        let d = LidarSpec::default();
        let pattern = make_scan_grid(
            self.rows.unwrap_or(20),
            self.cols.unwrap_or(20),
            deg(self.el_span.unwrap_or(7.0)),
            deg(self.az_span.unwrap_or(7.0)),
        )
        .map_err(|e| format!("lidar pattern: {e}"))?;
        Ok(LidarSpec {
            max_range: self.max_range.unwrap_or(d.max_range),
            min_range: self.min_range.unwrap_or(d.min_range),
            sample_rate: self.sample_rate.unwrap_or(d.sample_rate),
            pattern,
            range_noise_sigma: self.range_noise_sigma.unwrap_or(d.range_noise_sigma),
        })
    }
}

impl CompensationSection {
    fn build(&self) -> Result<CompensationConfig, String> {
        let d = CompensationConfig::default();
        let policy = match self.policy.as_deref().unwrap_or("off") {
            "off" => Policy::Off,
            "stabilize" => Policy::Stabilize {
                window: self
                    .window
                    .unwrap_or(rotcomp::compensate::DEFAULT_STABILIZER_WINDOW),
            },
            "hold_attitude" => {
                let [r, p, y] = self.desired.unwrap_or([0.0; 3]);
                Policy::HoldAttitude {
                    desired: Rotation::from_euler_angles(deg(r), deg(p), deg(y)),
                }
            }
            "aim" => Policy::Aim {
                target: v3(self
                    .target
                    .ok_or("compensation.target is required for policy `aim`")?),
            },
            "random_head" => Policy::RandomHead {
                sigma: deg(self.sigma.unwrap_or(0.0)),
                rate: self
                    .rate
                    .unwrap_or(rotcomp::slamlite::ODOMETRY_COMMAND_RATE),
            },
            other => return Err(format!("compensation.policy: unknown policy `{other}`")),
        };
        if let Some(0) = self.window {
            return Err("compensation.window must be at least 1".into());
        }
        Ok(CompensationConfig {
            policy,
            pose_rate: self.pose_rate.unwrap_or(d.pose_rate),
            delay: self.delay.unwrap_or(d.delay),
            actuation_noise_sigma: deg(self.actuation_noise_sigma.unwrap_or(0.0)),
            pose_source: match self.pose_source.as_deref().unwrap_or("truth") {
                "truth" => PoseSource::Truth,
                "imu" => PoseSource::Imu,
                other => {
                    return Err(format!(
                        "compensation.pose_source: unknown source `{other}`"
                    ))
                }
            },
            mirror_dynamics: self.mirror_dynamics.unwrap_or(d.mirror_dynamics),
        })
    }
}

impl ImuNoiseSection {
    fn build(&self) -> ImuNoiseParams {
        let d = ImuNoiseParams::default();
        ImuNoiseParams {
            gyro_noise_density: self.gyro_noise_density.unwrap_or(d.gyro_noise_density),
            gyro_random_walk: self.gyro_random_walk.unwrap_or(d.gyro_random_walk),
            gyro_turn_on_bias_sigma: self
                .gyro_turn_on_bias_sigma
                .unwrap_or(d.gyro_turn_on_bias_sigma),
            accel_noise_density: self.accel_noise_density.unwrap_or(d.accel_noise_density),
            accel_random_walk: self.accel_random_walk.unwrap_or(d.accel_random_walk),
            accel_turn_on_bias_sigma: self
                .accel_turn_on_bias_sigma
                .unwrap_or(d.accel_turn_on_bias_sigma),
            gyro_bias_corr_time: self.gyro_bias_corr_time.unwrap_or(d.gyro_bias_corr_time),
            accel_bias_corr_time: self.accel_bias_corr_time.unwrap_or(d.accel_bias_corr_time),
            scale_factor: self.scale_factor.unwrap_or(d.scale_factor),
        }
    }
}

impl MirrorSection {
    fn build(&self) -> MirrorParams {
        let d = MirrorParams::default();
        let range = |v: Option<[f64; 2]>, fallback: (f64, f64)| {
            v.map_or(fallback, |[a, b]| (deg(a), deg(b)))
        };
        MirrorParams {
            tau: self.tau.unwrap_or(d.tau),
            omega_n: self
                .natural_freq
                .map_or(d.omega_n, |f| 2.0 * std::f64::consts::PI * f),
            zeta: self.zeta.unwrap_or(d.zeta),
            fov_alpha: range(self.fov_alpha, d.fov_alpha),
            fov_beta: range(self.fov_beta, d.fov_beta),
            step_quantum: self.step_quantum.map_or(d.step_quantum, deg),
            update_rate: self.update_rate.unwrap_or(d.update_rate),
            f1: self.f1.unwrap_or(d.f1),
            f2: self.f2.unwrap_or(d.f2),
            f3: self.f3.unwrap_or(d.f3),
        }
    }
}
