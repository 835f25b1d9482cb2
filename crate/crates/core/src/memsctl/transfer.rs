//! Continuous-time rational transfer functions and a fixed-step RK4
//! realization used for time-domain simulation.

use nalgebra::{Complex, DMatrix};

use super::ModelError;

/// Reference integration step for the mirror and IMU models (5 µs).
pub const REFERENCE_DT: f64 = 5e-6;

/// `num(s) / den(s)`, coefficients in descending powers of `s`.
#[derive(Debug, Clone, PartialEq)]
pub struct TransferFunction {
    pub num: Vec<f64>,
    pub den: Vec<f64>,
    pub label: String,
}

fn trim_leading_zeros(mut c: Vec<f64>) -> Vec<f64> {
    while c.len() > 1 && c[0] == 0.0 {
        c.remove(0);
    }
    c
}

fn poly_mul(a: &[f64], b: &[f64]) -> Vec<f64> {
    let mut out = vec![0.0; a.len() + b.len() - 1];
    for (i, x) in a.iter().enumerate() {
        for (j, y) in b.iter().enumerate() {
            out[i + j] += x * y;
        }
    }
    out
}

fn poly_eval(c: &[f64], s: Complex<f64>) -> Complex<f64> {
    c.iter().fold(Complex::new(0.0, 0.0), |acc, &k| acc * s + k)
}

/// Roots of a real polynomial via the eigenvalues of its scaled companion matrix.
pub fn poly_roots(c: &[f64]) -> Vec<Complex<f64>> {
    let c = trim_leading_zeros(c.to_vec());
    let n = c.len() - 1;
    if n == 0 {
        return Vec::new();
    }
    let monic: Vec<f64> = c.iter().map(|k| k / c[0]).collect();
    // Scale s = k s' so the constant term becomes ±1; keeps the companion
    // matrix well conditioned for coefficients spanning many decades.
    let k = if monic[n] != 0.0 {
        monic[n].abs().powf(1.0 / n as f64)
    } else {
        1.0
    };
    let mut m = DMatrix::<f64>::zeros(n, n);
    for i in 1..n {
        m[(i, i - 1)] = 1.0;
    }
    for i in 0..n {
        m[(0, i)] = -monic[i + 1] / k.powi(i as i32 + 1);
    }
    m.complex_eigenvalues().iter().map(|z| z * k).collect()
}

impl TransferFunction {
    pub fn new(label: impl Into<String>, num: Vec<f64>, den: Vec<f64>) -> Result<Self, ModelError> {
        let label = label.into();
        let num = trim_leading_zeros(num);
        let den = trim_leading_zeros(den);
        if num.is_empty() || den.is_empty() || den[0] == 0.0 {
            return Err(ModelError::InvalidCoefficients(format!(
                "{label}: zero denominator"
            )));
        }
        if num.iter().chain(den.iter()).any(|c| !c.is_finite()) {
            return Err(ModelError::InvalidCoefficients(format!(
                "{label}: non-finite coefficient"
            )));
        }
        Ok(Self { num, den, label })
    }

    pub fn num_degree(&self) -> usize {
        self.num.len() - 1
    }

    pub fn den_degree(&self) -> usize {
        self.den.len() - 1
    }

    pub fn is_proper(&self) -> bool {
        self.num_degree() <= self.den_degree()
    }

    pub fn eval(&self, s: Complex<f64>) -> Complex<f64> {
        poly_eval(&self.num, s) / poly_eval(&self.den, s)
    }

    /// Frequency response at `f` Hz.
    pub fn freq_response(&self, f: f64) -> Complex<f64> {
        self.eval(Complex::new(0.0, 2.0 * std::f64::consts::PI * f))
    }

    /// Value at `s = 0`.
    pub fn dc_gain(&self) -> f64 {
        self.num[self.num.len() - 1] / self.den[self.den.len() - 1]
    }

    /// Cascade `self · other`.
    pub fn series(&self, other: &TransferFunction, label: impl Into<String>) -> TransferFunction {
        TransferFunction {
            num: poly_mul(&self.num, &other.num),
            den: poly_mul(&self.den, &other.den),
            label: label.into(),
        }
    }

    /// `1 / self`.
    pub fn inverse(&self, label: impl Into<String>) -> Result<TransferFunction, ModelError> {
        TransferFunction::new(label, self.den.clone(), self.num.clone())
    }

    pub fn poles(&self) -> Vec<Complex<f64>> {
        poly_roots(&self.den)
    }

    /// All poles strictly in the open left half-plane.
    pub fn is_stable(&self) -> bool {
        self.poles().iter().all(|p| p.re < 0.0)
    }

    pub fn state_space(&self) -> Result<StateSpace, ModelError> {
        StateSpace::from_tf(self)
    }
}

/// Controllable canonical realization of a proper transfer function.
#[derive(Debug, Clone, PartialEq)]
pub struct StateSpace {
    /// Monic denominator tail `a_1..a_n`.
    a: Vec<f64>,
    /// Output weights on `x_1..x_n`, where `x_{k+1} = x_k'`.
    c: Vec<f64>,
    d: f64,
}

impl StateSpace {
    pub fn from_tf(tf: &TransferFunction) -> Result<Self, ModelError> {
        if !tf.is_proper() {
            return Err(ModelError::Improper {
                label: tf.label.clone(),
                num_degree: tf.num_degree(),
                den_degree: tf.den_degree(),
            });
        }
        let n = tf.den_degree();
        let lead = tf.den[0];
        let a: Vec<f64> = tf.den[1..].iter().map(|k| k / lead).collect();
        let mut b = vec![0.0; n + 1 - tf.num.len()];
        b.extend(tf.num.iter().map(|k| k / lead));
        let d = b[0];
        // c_j multiplies x_j (the (j-1)th derivative) and equals the
        // coefficient of s^(j-1) in b(s) - d·den(s).
        let c = (1..=n).map(|j| b[n + 1 - j] - d * a[n - j]).collect();
        Ok(Self { a, c, d })
    }

    pub fn order(&self) -> usize {
        self.a.len()
    }

    fn derivative(&self, x: &[f64], u: f64, out: &mut [f64]) {
        let n = self.order();
        if n == 0 {
            return;
        }
        out[..n - 1].copy_from_slice(&x[1..n]);
        let feedback: f64 = (0..n).map(|j| self.a[n - 1 - j] * x[j]).sum();
        out[n - 1] = u - feedback;
    }

    fn output(&self, x: &[f64], u: f64) -> f64 {
        self.c.iter().zip(x).map(|(c, x)| c * x).sum::<f64>() + self.d * u
    }
}

/// A running time-domain simulation of a [`StateSpace`] model.
#[derive(Debug, Clone)]
pub struct ContinuousSim {
    model: StateSpace,
    x: Vec<f64>,
    k: [Vec<f64>; 4],
    tmp: Vec<f64>,
}

impl ContinuousSim {
    pub fn new(tf: &TransferFunction) -> Result<Self, ModelError> {
        let model = StateSpace::from_tf(tf)?;
        let n = model.order();
        Ok(Self {
            model,
            x: vec![0.0; n],
            k: [vec![0.0; n], vec![0.0; n], vec![0.0; n], vec![0.0; n]],
            tmp: vec![0.0; n],
        })
    }

    /// Current output for input `u`.
    pub fn output(&self, u: f64) -> f64 {
        self.model.output(&self.x, u)
    }

    /// One RK4 step of length `dt`; the input takes values `u0`, `u_mid`, `u1`
    /// at the start, middle and end of the step. Returns the output at the end.
    pub fn step(&mut self, u0: f64, u_mid: f64, u1: f64, dt: f64) -> f64 {
        let n = self.model.order();
        if n == 0 {
            return self.model.d * u1;
        }
        let [k1, k2, k3, k4] = &mut self.k;
        self.model.derivative(&self.x, u0, k1);
        for i in 0..n {
            self.tmp[i] = self.x[i] + 0.5 * dt * k1[i];
        }
        self.model.derivative(&self.tmp, u_mid, k2);
        for i in 0..n {
            self.tmp[i] = self.x[i] + 0.5 * dt * k2[i];
        }
        self.model.derivative(&self.tmp, u_mid, k3);
        for i in 0..n {
            self.tmp[i] = self.x[i] + dt * k3[i];
        }
        self.model.derivative(&self.tmp, u1, k4);
        for i in 0..n {
            self.x[i] += dt / 6.0 * (k1[i] + 2.0 * k2[i] + 2.0 * k3[i] + k4[i]);
        }
        self.model.output(&self.x, u1)
    }

    /// Step with a constant input over the interval.
    pub fn step_held(&mut self, u: f64, dt: f64) -> f64 {
        self.step(u, u, u, dt)
    }
}

/// Sampled unit-step response.
#[derive(Debug, Clone)]
pub struct StepResponse {
    pub time: Vec<f64>,
    pub value: Vec<f64>,
    /// Set when the model is unstable or the integration produced non-finite values.
    pub diverged: bool,
}

impl StepResponse {
    /// Largest `|y - target|` over samples at or after `t`.
    pub fn max_deviation_after(&self, t: f64, target: f64) -> f64 {
        self.time
            .iter()
            .zip(&self.value)
            .filter(|(ti, _)| **ti >= t - 1e-12)
            .map(|(_, y)| (y - target).abs())
            .fold(0.0, f64::max)
    }

    /// First time the response reaches `level` (rising), if ever.
    pub fn first_crossing(&self, level: f64) -> Option<f64> {
        self.time
            .iter()
            .zip(&self.value)
            .find(|(_, y)| **y >= level)
            .map(|(t, _)| *t)
    }

    pub fn final_value(&self) -> f64 {
        self.value.last().copied().unwrap_or(0.0)
    }
}

/// Unit-step response integrated with RK4 at step `dt`.
pub fn step_response(
    tf: &TransferFunction,
    duration: f64,
    dt: f64,
) -> Result<StepResponse, ModelError> {
    if !(dt > 0.0) || !(duration >= 0.0) {
        return Err(ModelError::InvalidParameter(format!(
            "step response needs dt > 0 and duration >= 0 (dt={dt}, duration={duration})"
        )));
    }
    let mut sim = ContinuousSim::new(tf)?;
    let steps = (duration / dt).round() as usize;
    let mut time = Vec::with_capacity(steps + 1);
    let mut value = Vec::with_capacity(steps + 1);
    time.push(0.0);
    value.push(sim.output(1.0));
    for i in 1..=steps {
        value.push(sim.step_held(1.0, dt));
        time.push(i as f64 * dt);
    }
    let diverged = !tf.is_stable() || value.iter().any(|v| !v.is_finite());
    Ok(StepResponse {
        time,
        value,
        diverged,
    })
}
