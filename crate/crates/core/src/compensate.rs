//! Control rotations for the compensation policies and the sliding-window
//! attitude stabilizer.
//!
//! Frames follow the local-to-world convention `p_world = R * p_local`. A
//! control rotation `R_control` re-points the scan so that, mounted on a robot
//! with attitude `R_robot`, each commanded ray leaves in the world direction it
//! would have if the robot sat at `R_desired`.

use std::collections::VecDeque;

use crate::geom::{
    cart_to_sph, quat_l2_mean, rot_from_control_angles, GeomError, Rotation, ScanPattern,
    SphericalControl, UnitQuaternion, Vec3,
};

/// Default sliding-window length of the stabilizer, in samples.
pub const DEFAULT_STABILIZER_WINDOW: usize = 10;

/// `R_control = R_robotᵀ · R_desired`, so that `R_robot · R_control · p = R_desired · p`.
pub fn control_rotation(r_robot: &Rotation, r_desired: &Rotation) -> Rotation {
    r_robot.inverse() * r_desired
}

/// Re-projected scan commands for one control rotation.
#[derive(Debug, Clone, PartialEq)]
pub struct CompensationCommand {
    pub r_control: Rotation,
    pub controls: Vec<SphericalControl>,
    /// Per-point flag for rotated points that have no spherical representation.
    pub skipped: Vec<bool>,
    pub timestamp: f64,
}

impl CompensationCommand {
    /// The re-projected controls as a pattern with the source grid shape.
    pub fn as_pattern(&self, source: &ScanPattern) -> ScanPattern {
        ScanPattern::from_points(self.controls.clone(), source.rows, source.cols)
    }
}

/// Rotate every pattern point by `r_control`, preserving range and order.
pub fn compensate_pattern(pattern: &ScanPattern, r_control: &Rotation) -> CompensationCommand {
    compensate_pattern_at(pattern, r_control, 0.0)
}

pub fn compensate_pattern_at(
    pattern: &ScanPattern,
    r_control: &Rotation,
    timestamp: f64,
) -> CompensationCommand {
    if *r_control == Rotation::identity() {
        return CompensationCommand {
            r_control: *r_control,
            controls: pattern.points.clone(),
            skipped: vec![false; pattern.len()],
            timestamp,
        };
    }
    let (controls, skipped) = pattern
        .points
        .iter()
        .map(|p| match cart_to_sph(&(r_control * p.to_cartesian())) {
            Ok(c) => (c, false),
            Err(_) => (*p, true),
        })
        .unzip();
    CompensationCommand {
        r_control: *r_control,
        controls,
        skipped,
        timestamp,
    }
}

/// Two-axis special case: point the principal axis along the desired one.
///
/// Returns `(alpha, beta, R*)` with `R* = rot_from_control_angles(alpha, beta)`.
/// Roll about the principal axis cannot be represented and is left uncorrected.
pub fn two_axis_control(r_robot: &Rotation, r_desired: &Rotation) -> (f64, f64, Rotation) {
    let d = control_rotation(r_robot, r_desired) * Vec3::x();
    // d is a unit vector, never degenerate.
    let c = cart_to_sph(&d).unwrap_or(SphericalControl::direction(0.0, 0.0));
    (c.alpha, c.beta, rot_from_control_angles(c.alpha, c.beta))
}

/// Aim the principal axis at a world-frame target from the robot's pose.
pub fn aim_control(
    t_target: &Vec3,
    t_robot: &Vec3,
    r_robot: &Rotation,
) -> Result<(f64, f64, Rotation), GeomError> {
    let aim = t_target - t_robot;
    if aim.norm() <= 1e-9 {
        return Err(GeomError::DegenerateDirection);
    }
    let c = cart_to_sph(&(r_robot.inverse() * aim))?;
    Ok((c.alpha, c.beta, rot_from_control_angles(c.alpha, c.beta)))
}

/// Fixed-capacity FIFO of recent robot attitudes whose L2 mean is the
/// stabilization target.
#[derive(Debug, Clone, PartialEq)]
pub struct StabilizerState {
    queue: VecDeque<UnitQuaternion>,
    capacity: usize,
    last_output: UnitQuaternion,
}

impl StabilizerState {
    /// A capacity of zero is raised to one.
    pub fn new(capacity: usize) -> Self {
        let capacity = capacity.max(1);
        Self {
            queue: VecDeque::with_capacity(capacity),
            capacity,
            last_output: UnitQuaternion::identity(),
        }
    }

    pub fn capacity(&self) -> usize {
        self.capacity
    }

    pub fn len(&self) -> usize {
        self.queue.len()
    }

    pub fn is_empty(&self) -> bool {
        self.queue.is_empty()
    }

    pub fn last_output(&self) -> UnitQuaternion {
        self.last_output
    }

    /// Push an attitude sample and return the new desired rotation.
    pub fn update(&mut self, q_robot: UnitQuaternion) -> Result<Rotation, GeomError> {
        if self.queue.len() == self.capacity {
            self.queue.pop_front();
        }
        self.queue.push_back(q_robot);
        let mean = quat_l2_mean(self.queue.make_contiguous())?;
        self.last_output = mean;
        Ok(mean.to_rotation_matrix())
    }
}

impl Default for StabilizerState {
    fn default() -> Self {
        Self::new(DEFAULT_STABILIZER_WINDOW)
    }
}

/// Value-in/value-out form of [`StabilizerState::update`].
pub fn stabilizer_update(
    mut state: StabilizerState,
    q_robot: UnitQuaternion,
) -> Result<(StabilizerState, Rotation), GeomError> {
    let r = state.update(q_robot)?;
    Ok((state, r))
}
