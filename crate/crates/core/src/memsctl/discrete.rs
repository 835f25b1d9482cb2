//! The 400 Hz discrete compensator `G[z]`.

/// Numerator taps `b0..b4` of the nominal compensator.
pub const NOMINAL_B: [f64; 5] = [0.843, 0.93, -0.32, -0.045, 0.0064];
/// Denominator taps `a1..a4` (`a0 = 1`) of the nominal compensator.
pub const NOMINAL_A: [f64; 4] = [0.32, 0.11, -0.017, 0.0021];
/// Sampling time of the compensator, seconds.
pub const COMPENSATOR_SAMPLE_TIME: f64 = 0.0025;

/// Fourth-order direct-form-I filter with its tap history.
///
/// `y[n] = Σ b_k x[n-k] - Σ a_k y[n-k]`.
#[derive(Debug, Clone, PartialEq)]
pub struct DiscreteFilterState {
    pub b: [f64; 5],
    pub a: [f64; 4],
    /// `x[n-1] .. x[n-4]`
    pub x_taps: [f64; 4],
    /// `y[n-1] .. y[n-4]`
    pub y_taps: [f64; 4],
    pub sample_time: f64,
}

impl DiscreteFilterState {
    pub fn new(b: [f64; 5], a: [f64; 4], sample_time: f64) -> Self {
        Self {
            b,
            a,
            x_taps: [0.0; 4],
            y_taps: [0.0; 4],
            sample_time,
        }
    }

    /// The nominal compensator with zero history.
    pub fn nominal() -> Self {
        Self::new(NOMINAL_B, NOMINAL_A, COMPENSATOR_SAMPLE_TIME)
    }

    pub fn step(&mut self, x: f64) -> f64 {
        let feedforward = self.b[0] * x
            + self.b[1] * self.x_taps[0]
            + self.b[2] * self.x_taps[1]
            + self.b[3] * self.x_taps[2]
            + self.b[4] * self.x_taps[3];
        let feedback = self.a[0] * self.y_taps[0]
            + self.a[1] * self.y_taps[1]
            + self.a[2] * self.y_taps[2]
            + self.a[3] * self.y_taps[3];
        let y = feedforward - feedback;
        self.x_taps = [x, self.x_taps[0], self.x_taps[1], self.x_taps[2]];
        self.y_taps = [y, self.y_taps[0], self.y_taps[1], self.y_taps[2]];
        y
    }

    /// Clear the tap history, keeping coefficients.
    pub fn reset(&mut self) {
        self.x_taps = [0.0; 4];
        self.y_taps = [0.0; 4];
    }

    /// `G(1) = Σb / (1 + Σa)`.
    pub fn dc_gain(&self) -> f64 {
        self.b.iter().sum::<f64>() / (1.0 + self.a.iter().sum::<f64>())
    }

    pub fn filter(&mut self, input: &[f64]) -> Vec<f64> {
        input.iter().map(|&x| self.step(x)).collect()
    }
}

impl Default for DiscreteFilterState {
    fn default() -> Self {
        Self::nominal()
    }
}

/// Value-in/value-out form of [`DiscreteFilterState::step`].
pub fn discrete_step(mut state: DiscreteFilterState, x: f64) -> (DiscreteFilterState, f64) {
    let y = state.step(x);
    (state, y)
}
