//! Gyroscope and accelerometer measurement model.
//!
//! Each channel is truth + turn-on bias + Ornstein–Uhlenbeck bias + white
//! noise, with every noise term multiplied by `scale_factor`.

use super::rng::{keyed_normal3, Stream};
use super::trajectory::Pose;
use crate::geom::Vec3;

/// World gravity, m/s².
pub const GRAVITY: Vec3 = Vec3::new(0.0, 0.0, -9.81);

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ImuNoiseParams {
    /// (rad/s)/√Hz
    pub gyro_noise_density: f64,
    /// (rad/s²)/√Hz
    pub gyro_random_walk: f64,
    /// rad/s
    pub gyro_turn_on_bias_sigma: f64,
    /// (m/s²)/√Hz
    pub accel_noise_density: f64,
    /// (m/s³)/√Hz
    pub accel_random_walk: f64,
    /// m/s²
    pub accel_turn_on_bias_sigma: f64,
    /// s
    pub gyro_bias_corr_time: f64,
    /// s
    pub accel_bias_corr_time: f64,
    pub scale_factor: f64,
}

impl Default for ImuNoiseParams {
    fn default() -> Self {
        Self {
            gyro_noise_density: 3.394e-4,
            gyro_random_walk: 3.879e-5,
            gyro_turn_on_bias_sigma: 8.727e-3,
            accel_noise_density: 4e-3,
            accel_random_walk: 6e-3,
            accel_turn_on_bias_sigma: 0.196,
            gyro_bias_corr_time: 1000.0,
            accel_bias_corr_time: 300.0,
            scale_factor: 1.0,
        }
    }
}

impl ImuNoiseParams {
    pub fn zero() -> Self {
        Self {
            gyro_noise_density: 0.0,
            gyro_random_walk: 0.0,
            gyro_turn_on_bias_sigma: 0.0,
            accel_noise_density: 0.0,
            accel_random_walk: 0.0,
            accel_turn_on_bias_sigma: 0.0,
            scale_factor: 1.0,
            ..Self::default()
        }
    }

    pub fn validate(&self) -> Result<(), String> {
        let fields = [
            ("gyro_noise_density", self.gyro_noise_density),
            ("gyro_random_walk", self.gyro_random_walk),
            ("gyro_turn_on_bias_sigma", self.gyro_turn_on_bias_sigma),
            ("accel_noise_density", self.accel_noise_density),
            ("accel_random_walk", self.accel_random_walk),
            ("accel_turn_on_bias_sigma", self.accel_turn_on_bias_sigma),
            ("scale_factor", self.scale_factor),
        ];
        if let Some((k, _)) = fields.iter().find(|(_, v)| !(*v >= 0.0 && v.is_finite())) {
            return Err(format!("imu_noise.{k} must be non-negative"));
        }
        for (k, v) in [
            ("gyro_bias_corr_time", self.gyro_bias_corr_time),
            ("accel_bias_corr_time", self.accel_bias_corr_time),
        ] {
            if !(v > 0.0) {
                return Err(format!("imu_noise.{k} must be positive"));
            }
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ImuState {
    pub gyro_bias: Vec3,
    pub accel_bias: Vec3,
    pub gyro_turn_on: Vec3,
    pub accel_turn_on: Vec3,
    pub seed: u64,
    /// Index of the next sample; keys the noise draws.
    pub step: u64,
}

impl ImuState {
    /// Fresh state with turn-on biases drawn from `seed`.
    pub fn new(params: &ImuNoiseParams, seed: u64) -> Self {
        let g = Vec3::from(keyed_normal3(seed, Stream::ImuTurnOn, 0));
        let a = Vec3::from(keyed_normal3(seed, Stream::ImuTurnOn, 1));
        let s = params.scale_factor;
        Self {
            gyro_bias: Vec3::zeros(),
            accel_bias: Vec3::zeros(),
            gyro_turn_on: g * params.gyro_turn_on_bias_sigma * s,
            accel_turn_on: a * params.accel_turn_on_bias_sigma * s,
            seed,
            step: 0,
        }
    }
}

fn ou_step(bias: Vec3, walk: f64, tau: f64, dt: f64, z: Vec3) -> Vec3 {
    let decay = (-dt / tau).exp();
    let sigma = walk * (0.5 * tau * (1.0 - decay * decay)).sqrt();
    bias * decay + z * sigma
}

/// One IMU sample over an interval `dt`. Returns `(gyro, accel, next_state)`.
///
/// The gyro reads body angular velocity; the accelerometer reads body-frame
/// specific force `Rᵀ (a − g)`.
pub fn imu_measure(
    pose: &Pose,
    params: &ImuNoiseParams,
    state: ImuState,
    dt: f64,
) -> (Vec3, Vec3, ImuState) {
    debug_assert!(dt > 0.0);
    let s = params.scale_factor;
    let k = state.step;
    let gz = keyed_normal3(state.seed, Stream::ImuGyro, 2 * k);
    let gw = keyed_normal3(state.seed, Stream::ImuGyro, 2 * k + 1);
    let az = keyed_normal3(state.seed, Stream::ImuAccel, 2 * k);
    let aw = keyed_normal3(state.seed, Stream::ImuAccel, 2 * k + 1);

    let gyro_bias = ou_step(
        state.gyro_bias,
        params.gyro_random_walk * s,
        params.gyro_bias_corr_time,
        dt,
        Vec3::from(gw),
    );
    let accel_bias = ou_step(
        state.accel_bias,
        params.accel_random_walk * s,
        params.accel_bias_corr_time,
        dt,
        Vec3::from(aw),
    );
    let gyro_white = Vec3::from(gz) * (params.gyro_noise_density * s / dt.sqrt());
    let accel_white = Vec3::from(az) * (params.accel_noise_density * s / dt.sqrt());

    let specific_force = pose.rotation.transpose() * (pose.linear_acceleration - GRAVITY);
    let gyro = pose.angular_velocity + state.gyro_turn_on + gyro_bias + gyro_white;
    let accel = specific_force + state.accel_turn_on + accel_bias + accel_white;
    (
        gyro,
        accel,
        ImuState {
            gyro_bias,
            accel_bias,
            step: k + 1,
            ..state
        },
    )
}
