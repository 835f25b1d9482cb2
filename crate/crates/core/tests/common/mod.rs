#![allow(dead_code)]

use rotcomp::geom::{make_scan_grid, Vec3};
use rotcomp::memsctl::MirrorParams;
use rotcomp::simcore::{
    CompensationConfig, ImuNoiseParams, JitterAxes, LidarSpec, Policy, Scene, SimConfig,
    TrajectorySpec,
};

pub const TARGET_DISTANCE: f64 = 2.4;

/// Hovering platform facing a "+" target, 1° yaw/pitch jitter below 0.5 Hz,
/// beam aimed at the target centre.
pub fn hover(pose_rate: f64, delay: f64) -> SimConfig {
    SimConfig {
        scene: Scene::plus_target(TARGET_DISTANCE),
        trajectory: TrajectorySpec::HoverJitter {
            axes: JitterAxes::YAW_PITCH,
            freq: 0.5,
            amplitude: 1f64.to_radians(),
            position: Vec3::zeros(),
        },
        lidar: LidarSpec::default(),
        compensation: CompensationConfig {
            policy: Policy::Aim {
                target: Vec3::new(TARGET_DISTANCE, 0.0, 0.0),
            },
            pose_rate,
            delay,
            ..Default::default()
        },
        imu_noise: ImuNoiseParams::default(),
        mirror: MirrorParams::default(),
        seed: 1,
        duration: 20.0,
    }
}

pub fn hover_uncompensated() -> SimConfig {
    let mut cfg = hover(400.0, 0.0);
    cfg.compensation.policy = Policy::Off;
    cfg
}

/// Mirror with a wide field of view and continuous steps.
pub fn wide_mirror() -> MirrorParams {
    let wide = 70f64.to_radians();
    MirrorParams {
        fov_alpha: (-wide, wide),
        fov_beta: (-wide, wide),
        step_quantum: 0.0,
        ..Default::default()
    }
}

/// Lateral sweep through the room at about 0.5 m/s, one 20x20 frame per 0.1 s.
pub fn odometry(seed: u64, frames: usize) -> SimConfig {
    SimConfig {
        scene: Scene::room(),
        trajectory: TrajectorySpec::WaypointLateral {
            start: Vec3::new(-1.0, -1.5, 0.0),
            end: Vec3::new(1.0, 1.5, 0.0),
            period: 20.0,
            roll_amplitude: 0.0,
            max_rate: 1.0,
        },
        lidar: LidarSpec {
            max_range: 20.0,
            min_range: 0.05,
            sample_rate: 4000.0,
            pattern: make_scan_grid(20, 20, 40f64.to_radians(), 60f64.to_radians()).unwrap(),
            range_noise_sigma: 0.005,
        },
        compensation: CompensationConfig::default(),
        imu_noise: ImuNoiseParams::default(),
        mirror: wide_mirror(),
        seed,
        duration: frames as f64 * 0.1,
    }
}
