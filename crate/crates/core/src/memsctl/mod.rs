//! Mirror, IMU and compensator dynamics.
//!
//! The continuous models are realized in controllable canonical form and
//! integrated with RK4 at [`transfer::REFERENCE_DT`]. The compensator runs as
//! the fixed-coefficient difference equation in [`discrete`].

pub mod discrete;
pub mod shock;
pub mod transfer;

use std::f64::consts::PI;

use nalgebra::Complex;
use thiserror::Error;

pub use discrete::{discrete_step, DiscreteFilterState};
pub use shock::{shock_margin, ShockParams, ShockReport};
pub use transfer::{step_response, ContinuousSim, StepResponse, TransferFunction, REFERENCE_DT};

#[derive(Debug, Clone, PartialEq, Error)]
pub enum ModelError {
    #[error("{label} is not proper: numerator degree {num_degree} exceeds denominator degree {den_degree}")]
    Improper {
        label: String,
        num_degree: usize,
        den_degree: usize,
    },
    #[error("invalid coefficients: {0}")]
    InvalidCoefficients(String),
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),
}

/// Physical constants of the two-axis mirror. Angles in radians.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MirrorParams {
    /// Thermal time constant, s.
    pub tau: f64,
    /// Tip-tilt natural frequency, rad/s.
    pub omega_n: f64,
    pub zeta: f64,
    /// Elevation (vertical) scan limits.
    pub fov_alpha: (f64, f64),
    /// Azimuth (horizontal) scan limits.
    pub fov_beta: (f64, f64),
    /// Smallest achievable step; zero disables quantization.
    pub step_quantum: f64,
    /// Command update rate, Hz.
    pub update_rate: f64,
    /// Piston and tip-tilt resonances, Hz.
    pub f1: f64,
    pub f2: f64,
    pub f3: f64,
}

impl Default for MirrorParams {
    fn default() -> Self {
        Self {
            tau: 2.3e-3,
            omega_n: 2.0 * PI * 1650.0,
            zeta: 0.006,
            fov_alpha: ((-3.8f64).to_radians(), 4.3f64.to_radians()),
            fov_beta: ((-4.8f64).to_radians(), 5.2f64.to_radians()),
            step_quantum: 0.035f64.to_radians(),
            update_rate: 400.0,
            f1: 1070.0,
            f2: 1630.0,
            f3: 1690.0,
        }
    }
}

impl MirrorParams {
    pub fn validate(&self) -> Result<(), ModelError> {
        let positive = [
            ("tau", self.tau),
            ("omega_n", self.omega_n),
            ("zeta", self.zeta),
            ("update_rate", self.update_rate),
            ("f1", self.f1),
            ("f2", self.f2),
            ("f3", self.f3),
        ];
        if let Some((k, v)) = positive.iter().find(|(_, v)| !(*v > 0.0 && v.is_finite())) {
            return Err(ModelError::InvalidParameter(format!(
                "{k} must be positive, got {v}"
            )));
        }
        if !(self.step_quantum >= 0.0) {
            return Err(ModelError::InvalidParameter(
                "step_quantum must be non-negative".into(),
            ));
        }
        for (k, (lo, hi)) in [("fov_alpha", self.fov_alpha), ("fov_beta", self.fov_beta)] {
            if !(lo < hi) {
                return Err(ModelError::InvalidParameter(format!(
                    "{k} bounds must be ordered, got ({lo}, {hi})"
                )));
            }
        }
        Ok(())
    }
}

/// Default IMU bandwidth, Hz.
pub const DEFAULT_IMU_BANDWIDTH: f64 = 150.0;
/// Default Butterworth bandwidth of the inverse-plant compensator, Hz.
pub const DEFAULT_BUTTERWORTH_BANDWIDTH: f64 = 200.0;

/// Third-order tip-tilt model `(ωn²/τ) / ((s² + 2ζωn s + ωn²)(s + 1/τ))`.
pub fn mirror_model(p: &MirrorParams) -> TransferFunction {
    let wn2 = p.omega_n * p.omega_n;
    let inv_tau = 1.0 / p.tau;
    TransferFunction {
        num: vec![wn2 * inv_tau],
        den: vec![
            1.0,
            2.0 * p.zeta * p.omega_n + inv_tau,
            wn2 + 2.0 * p.zeta * p.omega_n * inv_tau,
            wn2 * inv_tau,
        ],
        label: "H1".into(),
    }
}

/// First-order IMU lag with the pole at `f2 / 2π` rad/s.
pub fn imu_model(f2: f64) -> TransferFunction {
    let pole = f2 / (2.0 * PI);
    TransferFunction {
        num: vec![pole],
        den: vec![1.0, pole],
        label: "H2".into(),
    }
}

/// Passive high-pass `s / (s + 2π f_h)`.
pub fn high_pass(f_h: f64) -> TransferFunction {
    TransferFunction {
        num: vec![1.0, 0.0],
        den: vec![1.0, 2.0 * PI * f_h],
        label: "Hpf".into(),
    }
}

/// Unity-DC-gain Butterworth low-pass of the given order at `f_b` Hz.
pub fn butterworth(order: usize, f_b: f64) -> TransferFunction {
    let wc = 2.0 * PI * f_b;
    let n = order as f64;
    let mut den = vec![Complex::new(1.0, 0.0)];
    for k in 1..=order {
        let theta = PI * (2.0 * k as f64 + n - 1.0) / (2.0 * n);
        let pole = Complex::from_polar(wc, theta);
        let mut next = vec![Complex::new(0.0, 0.0); den.len() + 1];
        for (i, c) in den.iter().enumerate() {
            next[i] += c;
            next[i + 1] -= c * pole;
        }
        den = next;
    }
    TransferFunction {
        num: vec![wc.powi(order as i32)],
        den: den.iter().map(|c| c.re).collect(),
        label: format!("B{order}"),
    }
}

/// `Hg = B / (H1 · H2)`; fails unless the low-pass restores properness.
pub fn inverse_plant_compensator(
    h1: &TransferFunction,
    h2: &TransferFunction,
    b: &TransferFunction,
) -> Result<TransferFunction, ModelError> {
    let plant = h1.series(h2, "H1H2");
    let hg = b.series(&plant.inverse("1/(H1H2)")?, "Hg");
    if !hg.is_proper() {
        return Err(ModelError::Improper {
            num_degree: hg.num_degree(),
            den_degree: hg.den_degree(),
            label: hg.label,
        });
    }
    Ok(hg)
}

#[derive(Debug, Clone, PartialEq)]
pub struct PlantModels {
    pub h1: TransferFunction,
    pub h2: TransferFunction,
    pub hpf: TransferFunction,
    pub b: TransferFunction,
    pub hg: TransferFunction,
}

pub fn build_models(
    params: &MirrorParams,
    f2_imu: f64,
    f_h: f64,
    f_b: f64,
) -> Result<PlantModels, ModelError> {
    params.validate()?;
    for (k, v) in [("f2_imu", f2_imu), ("f_h", f_h), ("f_b", f_b)] {
        if !(v > 0.0 && v.is_finite()) {
            return Err(ModelError::InvalidParameter(format!(
                "{k} must be positive, got {v}"
            )));
        }
    }
    let h1 = mirror_model(params);
    let h2 = imu_model(f2_imu);
    let b = butterworth(4, f_b);
    let hg = inverse_plant_compensator(&h1, &h2, &b)?;
    Ok(PlantModels {
        h1,
        h2,
        hpf: high_pass(f_h),
        b,
        hg,
    })
}

fn clamp_axis(v: f64, (lo, hi): (f64, f64), quantum: f64) -> (f64, bool) {
    let saturated = v < lo || v > hi;
    let c = v.clamp(lo, hi);
    if quantum <= 0.0 {
        return (c, saturated);
    }
    // f64::round rounds half away from zero.
    let mut steps = (c / quantum).round();
    if steps * quantum > hi {
        steps -= 1.0;
    }
    if steps * quantum < lo {
        steps += 1.0;
    }
    (steps * quantum, saturated)
}

/// Clamp `(alpha, beta)` to the mirror FoV, then snap to the step grid,
/// moving toward the interior whenever the nearest grid point lies outside.
pub fn clamp_command(alpha: f64, beta: f64, params: &MirrorParams) -> ((f64, f64), bool) {
    let (a, sa) = clamp_axis(alpha, params.fov_alpha, params.step_quantum);
    let (b, sb) = clamp_axis(beta, params.fov_beta, params.step_quantum);
    ((a, b), sa || sb)
}

/// Sinusoidal angular jitter `amplitude · sin(2π freq t)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Jitter {
    pub freq: f64,
    pub amplitude: f64,
}

impl Jitter {
    pub fn at(&self, t: f64) -> f64 {
        self.amplitude * (2.0 * PI * self.freq * t).sin()
    }
}

/// Open-loop compensation bench: jitter → IMU → (optional compensator) →
/// mirror, with the mirror command subtracted from the jitter.
#[derive(Debug, Clone, PartialEq)]
pub struct LoopConfig {
    pub mirror: MirrorParams,
    pub f2_imu: f64,
    pub compensator: DiscreteFilterState,
    pub integration_dt: f64,
    pub transient_fraction: f64,
}

impl Default for LoopConfig {
    fn default() -> Self {
        Self {
            mirror: MirrorParams::default(),
            f2_imu: DEFAULT_IMU_BANDWIDTH,
            compensator: DiscreteFilterState::nominal(),
            integration_dt: REFERENCE_DT,
            transient_fraction: 0.25,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ResidueMetrics {
    pub rms: f64,
    pub peak: f64,
}

/// Per-controller-tick trace of a loop run.
#[derive(Debug, Clone, Default)]
pub struct LoopTrace {
    pub time: Vec<f64>,
    pub jitter: Vec<f64>,
    pub residual: Vec<f64>,
}

pub fn simulate_loop(
    jitter: Jitter,
    use_hg: bool,
    duration: f64,
) -> Result<ResidueMetrics, ModelError> {
    run_loop(&LoopConfig::default(), jitter, use_hg, duration).map(|(m, _)| m)
}

/// Runs the bench and returns residue statistics over the post-transient
/// window, evaluated at every integration step, plus a trace sampled at the
/// controller rate.
pub fn run_loop(
    cfg: &LoopConfig,
    jitter: Jitter,
    use_hg: bool,
    duration: f64,
) -> Result<(ResidueMetrics, LoopTrace), ModelError> {
    cfg.mirror.validate()?;
    if !(jitter.freq > 0.0) || !jitter.amplitude.is_finite() {
        return Err(ModelError::InvalidParameter(format!(
            "jitter frequency must be positive, got {}",
            jitter.freq
        )));
    }
    if !(duration > 0.0) || !(cfg.integration_dt > 0.0) {
        return Err(ModelError::InvalidParameter(
            "duration and integration_dt must be positive".into(),
        ));
    }
    let mut imu = ContinuousSim::new(&imu_model(cfg.f2_imu))?;
    let mut mirror = ContinuousSim::new(&mirror_model(&cfg.mirror))?;
    let mut comp = cfg.compensator.clone();
    comp.reset();

    let tick = 1.0 / cfg.mirror.update_rate;
    let substeps = (tick / cfg.integration_dt).round().max(1.0) as usize;
    let dt = tick / substeps as f64;
    let ticks = (duration / tick).round() as usize;
    let keep_from = cfg.transient_fraction * duration;

    let mut imu_out = imu.output(jitter.at(0.0));
    let mut mirror_out = mirror.output(0.0);
    let (mut sum_sq, mut count, mut peak) = (0.0, 0usize, 0.0f64);
    let mut trace = LoopTrace::default();

    for n in 0..ticks {
        let t0 = n as f64 * tick;
        let measured = if use_hg { comp.step(imu_out) } else { imu_out };
        let command = -measured;
        trace.time.push(t0);
        trace.jitter.push(jitter.at(t0));
        trace.residual.push(jitter.at(t0) + mirror_out);
        for k in 0..substeps {
            let ta = t0 + k as f64 * dt;
            let tb = ta + dt;
            imu_out = imu.step(jitter.at(ta), jitter.at(ta + 0.5 * dt), jitter.at(tb), dt);
            mirror_out = mirror.step_held(command, dt);
            if tb >= keep_from {
                let e = jitter.at(tb) + mirror_out;
                sum_sq += e * e;
                count += 1;
                peak = peak.max(e.abs());
            }
        }
    }
    let rms = if count > 0 {
        (sum_sq / count as f64).sqrt()
    } else {
        0.0
    };
    Ok((ResidueMetrics { rms, peak }, trace))
}
