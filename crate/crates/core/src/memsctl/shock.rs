//! Mirror-plate stiffness and shock tolerance.

use std::f64::consts::PI;

use super::ModelError;

/// Mirror plate and resonance inputs to [`shock_margin`].
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ShockParams {
    /// Tip-tilt resonance, Hz.
    pub f_r: f64,
    /// Piston resonance, Hz.
    pub f1: f64,
    /// Plate mass, kg.
    pub m_plate: f64,
    /// Plate thickness, m.
    pub thickness: f64,
    /// Plate length, m.
    pub length: f64,
    /// Largest piston displacement before failure, m.
    pub d_max: f64,
    /// Largest tolerable excited rotation, rad.
    pub theta_tol: f64,
}

impl Default for ShockParams {
    /// Plate mass and length are back-solved from the rated piston
    /// stiffness (3.2 N/m at 1.07 kHz) and tip-tilt stiffness (2.16e-6 N·m/rad
    /// at 1.63 kHz); thickness is a typical 30 µm.
    fn default() -> Self {
        Self {
            f_r: 1630.0,
            f1: 1070.0,
            m_plate: 7.08e-8,
            thickness: 30e-6,
            length: 1.868e-3,
            d_max: 200e-6,
            theta_tol: 0.25f64.to_radians(),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ShockReport {
    /// Tip-tilt stiffness `I (2π f_r)²`, N·m/rad.
    pub k_r: f64,
    /// Plate moment of inertia `m (t² + d²) / 12`, kg·m².
    pub moment_of_inertia: f64,
    /// `-I / k_r`: excited rotation per unit external angular acceleration, s².
    pub excited_rotation_per_accel: f64,
    /// `theta_tol · k_r / I`, rad/s².
    pub tolerable_angular_accel: f64,
    /// Piston stiffness `m (2π f1)²`, N/m.
    pub k_p: f64,
    /// `k_p d_max / m`, m/s².
    pub a_max: f64,
}

impl ShockReport {
    /// Excited plate rotation (rad) under external angular acceleration `accel` (rad/s²).
    pub fn excited_rotation(&self, accel: f64) -> f64 {
        self.excited_rotation_per_accel * accel
    }

    /// `I / k_r`, s².
    pub fn inertia_over_stiffness(&self) -> f64 {
        self.moment_of_inertia / self.k_r
    }
}

pub fn shock_margin(p: &ShockParams) -> Result<ShockReport, ModelError> {
    let named = [
        ("f_r", p.f_r),
        ("f1", p.f1),
        ("m_plate", p.m_plate),
        ("thickness", p.thickness),
        ("length", p.length),
        ("d_max", p.d_max),
        ("theta_tol", p.theta_tol),
    ];
    if let Some((name, v)) = named.iter().find(|(_, v)| !(*v > 0.0 && v.is_finite())) {
        return Err(ModelError::InvalidParameter(format!(
            "{name} must be positive, got {v}"
        )));
    }
    let inertia = p.m_plate * (p.thickness.powi(2) + p.length.powi(2)) / 12.0;
    let k_r = inertia * (2.0 * PI * p.f_r).powi(2);
    let k_p = p.m_plate * (2.0 * PI * p.f1).powi(2);
    Ok(ShockReport {
        k_r,
        moment_of_inertia: inertia,
        excited_rotation_per_accel: -inertia / k_r,
        tolerable_angular_accel: p.theta_tol * k_r / inertia,
        k_p,
        a_max: k_p * p.d_max / p.m_plate,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    #[test]
    fn tolerance_round_trip() {
        let r = shock_margin(&ShockParams::default()).unwrap();
        assert_relative_eq!(
            -r.excited_rotation(r.tolerable_angular_accel),
            0.25f64.to_radians(),
            max_relative = 1e-12
        );
    }

    #[test]
    fn piston_limit_from_formula() {
        let r = shock_margin(&ShockParams::default()).unwrap();
        // (2π·1070)² · 200 µm
        assert_relative_eq!(r.k_p / 7.08e-8, 4.5198e7, max_relative = 1e-4);
        assert_relative_eq!(r.a_max, 9.0396e3, max_relative = 1e-4);
        // Default plate matches the rated stiffnesses.
        assert_relative_eq!(r.k_p, 3.2, max_relative = 1e-2);
        assert_relative_eq!(r.k_r, 2.16e-6, max_relative = 1e-2);
    }

    #[test]
    fn ratio_is_inverse_squared_resonance() {
        let r = shock_margin(&ShockParams::default()).unwrap();
        assert_relative_eq!(
            r.inertia_over_stiffness(),
            1.0 / (2.0 * PI * 1630.0f64).powi(2),
            max_relative = 1e-12
        );
    }

    #[test]
    fn rejects_non_positive() {
        let p = ShockParams {
            m_plate: -1.0,
            ..Default::default()
        };
        assert!(
            matches!(shock_margin(&p), Err(ModelError::InvalidParameter(m)) if m.contains("m_plate"))
        );
    }
}
