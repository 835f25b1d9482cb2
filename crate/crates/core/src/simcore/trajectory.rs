//! Analytic robot trajectories.

use std::f64::consts::PI;

use rand::Rng;

use super::rng::{keyed_rng, Stream};
use super::SimError;
use crate::geom::{Rotation, Vec3};

/// Robot state at one instant.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Pose {
    /// Robot-to-world rotation.
    pub rotation: Rotation,
    /// Robot origin in the world frame, m.
    pub translation: Vec3,
    /// Body-frame angular velocity, rad/s.
    pub angular_velocity: Vec3,
    /// World-frame linear acceleration, m/s².
    pub linear_acceleration: Vec3,
    pub timestamp: f64,
}

impl Pose {
    pub fn identity(timestamp: f64) -> Self {
        Self {
            rotation: Rotation::identity(),
            translation: Vec3::zeros(),
            angular_velocity: Vec3::zeros(),
            linear_acceleration: Vec3::zeros(),
            timestamp,
        }
    }
}

/// Which Euler axes a hover jitter excites.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct JitterAxes {
    pub roll: bool,
    pub pitch: bool,
    pub yaw: bool,
}

impl JitterAxes {
    pub const YAW_PITCH: Self = Self {
        roll: false,
        pitch: true,
        yaw: true,
    };
    pub const ALL: Self = Self {
        roll: true,
        pitch: true,
        yaw: true,
    };
}

#[derive(Debug, Clone, PartialEq)]
pub enum TrajectorySpec {
    Static {
        position: Vec3,
    },
    /// Band-limited random attitude about a fixed position. Each excited
    /// axis is a sum of [`JITTER_TONES`] sinusoids below `freq` Hz with
    /// per-tone amplitude `amplitude / √JITTER_TONES` (rad).
    HoverJitter {
        axes: JitterAxes,
        freq: f64,
        amplitude: f64,
        position: Vec3,
    },
    /// Pitch `amplitude · sin(2π freq t)` about the origin.
    SinusoidSweep {
        freq: f64,
        amplitude: f64,
    },
    /// Smooth back-and-forth motion between two points with period `period`,
    /// banking in roll by at most `roll_amplitude` and never faster than
    /// `max_rate` rad/s.
    WaypointLateral {
        start: Vec3,
        end: Vec3,
        period: f64,
        roll_amplitude: f64,
        max_rate: f64,
    },
}

pub const JITTER_TONES: usize = 8;
pub const DEFAULT_SWEEP_FREQ: f64 = 1.5;

impl TrajectorySpec {
    pub fn validate(&self) -> Result<(), SimError> {
        let bad = |k: &str| {
            Err(SimError::InvalidConfig(format!(
                "trajectory.{k} is out of range"
            )))
        };
        match self {
            Self::Static { position } => {
                if !position.iter().all(|v| v.is_finite()) {
                    return bad("position");
                }
            }
            Self::HoverJitter {
                freq,
                amplitude,
                position,
                ..
            } => {
                if !(*freq > 0.0 && freq.is_finite()) {
                    return bad("freq");
                }
                if !(*amplitude >= 0.0 && amplitude.is_finite()) {
                    return bad("amplitude");
                }
                if !position.iter().all(|v| v.is_finite()) {
                    return bad("position");
                }
            }
            Self::SinusoidSweep { freq, amplitude } => {
                if !(*freq > 0.0 && freq.is_finite()) {
                    return bad("freq");
                }
                if !amplitude.is_finite() {
                    return bad("amplitude");
                }
            }
            Self::WaypointLateral {
                start,
                end,
                period,
                roll_amplitude,
                max_rate,
            } => {
                if !start.iter().chain(end.iter()).all(|v| v.is_finite()) {
                    return bad("start");
                }
                if !(*period > 0.0 && period.is_finite()) {
                    return bad("period");
                }
                if !(*roll_amplitude >= 0.0 && roll_amplitude.is_finite()) {
                    return bad("roll_amplitude");
                }
                if !(*max_rate >= 0.0) {
                    return bad("max_rate");
                }
            }
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
struct Tone {
    amp: f64,
    omega: f64,
    phase: f64,
}

impl Tone {
    fn eval(&self, t: f64) -> (f64, f64) {
        let x = self.omega * t + self.phase;
        (self.amp * x.sin(), self.amp * self.omega * x.cos())
    }
}

/// A trajectory with its seeded parameters drawn.
#[derive(Debug, Clone, PartialEq)]
pub struct Trajectory {
    spec: TrajectorySpec,
    /// Roll, pitch, yaw tone sets for hover jitter.
    tones: [Vec<Tone>; 3],
}

impl Trajectory {
    pub fn new(spec: TrajectorySpec, seed: u64) -> Result<Self, SimError> {
        spec.validate()?;
        let mut tones: [Vec<Tone>; 3] = Default::default();
        if let TrajectorySpec::HoverJitter {
            axes,
            freq,
            amplitude,
            ..
        } = &spec
        {
            let enabled = [axes.roll, axes.pitch, axes.yaw];
            let w = amplitude / (JITTER_TONES as f64).sqrt();
            for (axis, set) in tones.iter_mut().enumerate() {
                if !enabled[axis] || *amplitude == 0.0 {
                    continue;
                }
                let mut rng = keyed_rng(seed, Stream::Trajectory, axis as u64);
                *set = (0..JITTER_TONES)
                    .map(|_| Tone {
                        amp: w,
                        omega: 2.0 * PI * freq * rng.random_range(0.05..=1.0),
                        phase: rng.random_range(0.0..2.0 * PI),
                    })
                    .collect();
            }
        }
        Ok(Self { spec, tones })
    }

    pub fn spec(&self) -> &TrajectorySpec {
        &self.spec
    }

    pub fn pose(&self, t: f64) -> Pose {
        match &self.spec {
            TrajectorySpec::Static { position } => Pose {
                translation: *position,
                ..Pose::identity(t)
            },
            TrajectorySpec::HoverJitter { position, .. } => {
                let mut angle = [0.0; 3];
                let mut rate = [0.0; 3];
                for (axis, set) in self.tones.iter().enumerate() {
                    for tone in set {
                        let (a, r) = tone.eval(t);
                        angle[axis] += a;
                        rate[axis] += r;
                    }
                }
                Pose {
                    translation: *position,
                    ..euler_pose(angle, rate, t)
                }
            }
            TrajectorySpec::SinusoidSweep { freq, amplitude } => {
                let w = 2.0 * PI * freq;
                let pitch = amplitude * (w * t).sin();
                let rate = amplitude * w * (w * t).cos();
                euler_pose([0.0, pitch, 0.0], [0.0, rate, 0.0], t)
            }
            TrajectorySpec::WaypointLateral {
                start,
                end,
                period,
                roll_amplitude,
                max_rate,
            } => {
                let w = 2.0 * PI / period;
                let phi = roll_amplitude.min(max_rate / w);
                let roll = phi * (w * t).sin();
                let roll_rate = phi * w * (w * t).cos();
                let s = 0.5 * (1.0 - (w * t).cos());
                let s_dd = 0.5 * w * w * (w * t).cos();
                let d = end - start;
                Pose {
                    translation: start + d * s,
                    linear_acceleration: d * s_dd,
                    ..euler_pose([roll, 0.0, 0.0], [roll_rate, 0.0, 0.0], t)
                }
            }
        }
    }
}

/// `R = Rz(yaw) Ry(pitch) Rx(roll)` with the body rate from the Euler rates.
fn euler_pose([roll, pitch, yaw]: [f64; 3], [dr, dp, dy]: [f64; 3], t: f64) -> Pose {
    let (sr, cr) = roll.sin_cos();
    let (sp, cp) = pitch.sin_cos();
    let omega = Vec3::new(
        dr - dy * sp,
        dp * cr + dy * sr * cp,
        -dp * sr + dy * cr * cp,
    );
    Pose {
        rotation: Rotation::from_euler_angles(roll, pitch, yaw),
        angular_velocity: omega,
        ..Pose::identity(t)
    }
}

/// One-shot evaluation of a seeded trajectory.
pub fn gen_trajectory(spec: &TrajectorySpec, seed: u64, t: f64) -> Result<Pose, SimError> {
    Ok(Trajectory::new(spec.clone(), seed)?.pose(t))
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;

    fn body_rate_fd(tr: &Trajectory, t: f64) -> Vec3 {
        let h = 1e-5;
        let d = (tr.pose(t - h).rotation.transpose() * tr.pose(t + h).rotation).into_inner();
        Vec3::new(
            d[(2, 1)] - d[(1, 2)],
            d[(0, 2)] - d[(2, 0)],
            d[(1, 0)] - d[(0, 1)],
        ) / (4.0 * h)
    }

    #[test]
    fn zero_amplitude_hover_is_identity() {
        let spec = TrajectorySpec::HoverJitter {
            axes: JitterAxes::ALL,
            freq: 1.0,
            amplitude: 0.0,
            position: Vec3::zeros(),
        };
        let tr = Trajectory::new(spec, 3).unwrap();
        for t in [0.0, 0.37, 5.0] {
            assert_eq!(tr.pose(t).rotation, Rotation::identity());
        }
    }

    #[test]
    fn sweep_zero_at_third_second() {
        let a = 0.2;
        let tr = Trajectory::new(
            TrajectorySpec::SinusoidSweep {
                freq: DEFAULT_SWEEP_FREQ,
                amplitude: a,
            },
            0,
        )
        .unwrap();
        let p = tr.pose(1.0 / 3.0);
        assert!(p.rotation.angle() < 1e-14);
        let (_, pitch, _) = tr.pose(1.0 / 6.0).rotation.euler_angles();
        assert_abs_diff_eq!(pitch, a, epsilon = 1e-12);
    }

    #[test]
    fn angular_velocity_matches_finite_difference() {
        let specs = [
            TrajectorySpec::HoverJitter {
                axes: JitterAxes::ALL,
                freq: 2.0,
                amplitude: 0.3,
                position: Vec3::zeros(),
            },
            TrajectorySpec::SinusoidSweep {
                freq: 1.5,
                amplitude: 0.4,
            },
            TrajectorySpec::WaypointLateral {
                start: Vec3::zeros(),
                end: Vec3::new(0.0, 2.0, 0.0),
                period: 4.0,
                roll_amplitude: 0.5,
                max_rate: 10.0,
            },
        ];
        for spec in specs {
            let tr = Trajectory::new(spec, 11).unwrap();
            for t in [0.1, 0.77, 2.3] {
                assert_abs_diff_eq!(
                    tr.pose(t).angular_velocity,
                    body_rate_fd(&tr, t),
                    epsilon = 1e-6
                );
            }
        }
    }

    #[test]
    fn lateral_rate_cap() {
        let cap = 130f64.to_radians();
        let spec = TrajectorySpec::WaypointLateral {
            start: Vec3::zeros(),
            end: Vec3::new(0.0, 3.0, 0.0),
            period: 2.0,
            roll_amplitude: 60f64.to_radians(),
            max_rate: cap,
        };
        let tr = Trajectory::new(spec, 0).unwrap();
        let peak = (0..4000)
            .map(|k| tr.pose(k as f64 * 1e-3).angular_velocity.norm())
            .fold(0.0, f64::max);
        assert!(peak <= cap + 1e-12);
        assert!(peak > 0.99 * cap);
    }

    #[test]
    fn lateral_acceleration_matches_position() {
        let spec = TrajectorySpec::WaypointLateral {
            start: Vec3::new(1.0, 0.0, 0.0),
            end: Vec3::new(1.0, 2.0, 0.5),
            period: 3.0,
            roll_amplitude: 0.0,
            max_rate: 1.0,
        };
        let tr = Trajectory::new(spec, 0).unwrap();
        let (t, h) = (0.9, 1e-4);
        let fd = (tr.pose(t + h).translation - 2.0 * tr.pose(t).translation
            + tr.pose(t - h).translation)
            / (h * h);
        assert_abs_diff_eq!(fd, tr.pose(t).linear_acceleration, epsilon = 1e-5);
    }

    #[test]
    fn hover_jitter_is_seeded() {
        let spec = TrajectorySpec::HoverJitter {
            axes: JitterAxes::YAW_PITCH,
            freq: 1.0,
            amplitude: 0.02,
            position: Vec3::zeros(),
        };
        let a = Trajectory::new(spec.clone(), 5).unwrap().pose(1.3);
        let b = Trajectory::new(spec.clone(), 5).unwrap().pose(1.3);
        let c = Trajectory::new(spec, 6).unwrap().pose(1.3);
        assert_eq!(a, b);
        assert_ne!(a.rotation, c.rotation);
        let (roll, _, _) = a.rotation.euler_angles();
        assert_abs_diff_eq!(roll, 0.0, epsilon = 1e-15);
    }

    #[test]
    fn rejects_bad_freq() {
        assert!(Trajectory::new(
            TrajectorySpec::SinusoidSweep {
                freq: 0.0,
                amplitude: 1.0
            },
            0
        )
        .is_err());
    }
}
