//! Scaling frames `u(x, t) = t^{-β} v(x / t^{1/(2n)}, log t)`.

use num_rational::Rational64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Exponents of a scaling-variable frame.
///
/// `n` is half the order of the dissipative linear part, `d` the spatial
/// dimension and `beta` the amplitude exponent. The standard frame has
/// `beta = d / (2n)`; the Cahn-Hilliard `d = 1` frame uses `beta = 1/2`.
/// The scaled time is `τ = log t`, with `η = e^{-τ/(2n)}`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ScalingFrame {
    pub n: u32,
    pub d: u32,
    #[serde(with = "crate::ratio_serde")]
    pub beta: Rational64,
}

impl ScalingFrame {
    pub fn new(n: u32, d: u32, beta: Rational64) -> Result<Self> {
        if n == 0 {
            return Err(Error::invalid("frame: n must be positive"));
        }
        if d == 0 {
            return Err(Error::invalid("frame: d must be positive"));
        }
        Ok(Self { n, d, beta })
    }

    /// The frame with `beta = d / (2n)`.
    pub fn standard(n: u32, d: u32) -> Result<Self> {
        Self::new(n, d, Rational64::new(d as i64, 2 * n as i64))
    }

    /// The `n = 2, d = 1` frame with `beta = 1/2` used for zero-mass
    /// Cahn-Hilliard data.
    pub fn dipole() -> Self {
        Self {
            n: 2,
            d: 1,
            beta: Rational64::new(1, 2),
        }
    }

    pub fn is_standard(&self) -> bool {
        self.beta == Rational64::new(self.d as i64, 2 * self.n as i64)
    }

    pub fn is_dipole(&self) -> bool {
        *self == Self::dipole()
    }

    pub fn beta_f64(&self) -> f64 {
        ratio_to_f64(self.beta)
    }

    /// `β - d/(2n)`: growth rate of the k = 0 mode relative to the standard frame.
    pub fn shift(&self) -> Rational64 {
        self.beta - Rational64::new(self.d as i64, 2 * self.n as i64)
    }

    /// Spatial dilation exponent `1/(2n)`.
    pub fn spread_exponent(&self) -> f64 {
        1.0 / (2.0 * self.n as f64)
    }

    pub fn eta(&self, tau: f64) -> f64 {
        (-tau / (2.0 * self.n as f64)).exp()
    }

    /// `η̃ = e^{-τ/8}` of the `beta = 1/2` Cahn-Hilliard frame.
    pub fn eta_tilde(&self, tau: f64) -> Option<f64> {
        self.is_dipole().then(|| (-tau / 8.0).exp())
    }
}

pub fn ratio_to_f64(r: Rational64) -> f64 {
    *r.numer() as f64 / *r.denom() as f64
}
