use serde::{Deserialize, Serialize};

use crate::error::{invalid, Result};

/// Physical parameters of the driven double well
/// `H = p²/2 − x²/4 + x⁴/(64D) + S·x·cos(ωt)` with ħ = m = 1.
///
/// Only `S` is stored; the rescaled amplitude `F = S/√(8D)` is derived so the
/// two can never disagree.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SystemParams {
    barrier_height: f64,
    frequency: f64,
    amplitude: f64,
}

impl SystemParams {
    pub fn new(barrier_height: f64, frequency: f64, amplitude: f64) -> Result<Self> {
        if !(barrier_height > 0.0 && barrier_height.is_finite()) {
            return Err(invalid("barrier_height", format!("must be positive, got {barrier_height}")));
        }
        if !(frequency > 0.0 && frequency.is_finite()) {
            return Err(invalid("frequency", format!("must be positive, got {frequency}")));
        }
        if !(amplitude >= 0.0 && amplitude.is_finite()) {
            return Err(invalid("amplitude", format!("must be non-negative, got {amplitude}")));
        }
        Ok(Self { barrier_height, frequency, amplitude })
    }

    pub fn from_rescaled(barrier_height: f64, frequency: f64, rescaled: f64) -> Result<Self> {
        if !(barrier_height > 0.0) {
            return Err(invalid("barrier_height", format!("must be positive, got {barrier_height}")));
        }
        Self::new(barrier_height, frequency, rescaled * (8.0 * barrier_height).sqrt())
    }

    /// Same system at a different rescaled amplitude F.
    pub fn with_rescaled(&self, rescaled: f64) -> Result<Self> {
        Self::from_rescaled(self.barrier_height, self.frequency, rescaled)
    }

    pub fn barrier_height(&self) -> f64 {
        self.barrier_height
    }

    pub fn frequency(&self) -> f64 {
        self.frequency
    }

    /// Driving force amplitude S.
    pub fn amplitude(&self) -> f64 {
        self.amplitude
    }

    /// F = S/√(8D).
    pub fn rescaled_amplitude(&self) -> f64 {
        self.amplitude / (8.0 * self.barrier_height).sqrt()
    }

    pub fn period(&self) -> f64 {
        2.0 * std::f64::consts::PI / self.frequency
    }

    /// Position of the right well minimum, √(8D).
    pub fn well_position(&self) -> f64 {
        (8.0 * self.barrier_height).sqrt()
    }

    pub fn potential(&self, x: f64) -> f64 {
        let x2 = x * x;
        -0.25 * x2 + x2 * x2 / (64.0 * self.barrier_height)
    }

    /// −dV/dx of the static potential.
    pub fn static_force(&self, x: f64) -> f64 {
        0.5 * x - x * x * x / (16.0 * self.barrier_height)
    }
}

impl Default for SystemParams {
    fn default() -> Self {
        Self { barrier_height: 4.0, frequency: 0.982, amplitude: 0.0 }
    }
}

/// Ohmic heat bath, J(ω) = γω (m = 1).
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BathParams {
    damping: f64,
    temperature: f64,
}

impl BathParams {
    pub fn new(damping: f64, temperature: f64) -> Result<Self> {
        if !(damping > 0.0 && damping.is_finite()) {
            return Err(invalid("damping", format!("must be positive, got {damping}")));
        }
        if !(temperature >= 0.0 && temperature.is_finite()) {
            return Err(invalid("temperature", format!("must be non-negative, got {temperature}")));
        }
        Ok(Self { damping, temperature })
    }

    /// A bath with γ = 0, used to switch dissipation off while keeping the coherent part.
    pub fn decoupled(temperature: f64) -> Self {
        Self { damping: 0.0, temperature: temperature.max(0.0) }
    }

    pub fn damping(&self) -> f64 {
        self.damping
    }

    /// k_B T in energy units.
    pub fn temperature(&self) -> f64 {
        self.temperature
    }

    pub fn inverse_temperature(&self) -> f64 {
        1.0 / self.temperature
    }

    pub fn with_temperature(&self, temperature: f64) -> Result<Self> {
        if self.damping == 0.0 {
            return Ok(Self::decoupled(temperature));
        }
        Self::new(self.damping, temperature)
    }

    pub fn with_damping(&self, damping: f64) -> Result<Self> {
        Self::new(damping, self.temperature)
    }

    /// Weak-coupling checks: γ < k_BT (for k_BT > 0) and γ below the smallest
    /// level spacing supplied by the caller.
    pub fn weak_coupling_warnings(&self, min_gap: Option<f64>) -> Vec<String> {
        let mut out = Vec::new();
        if self.temperature > 0.0 && self.damping >= self.temperature {
            out.push(format!(
                "weak-coupling condition violated: damping γ = {:e} is not below k_BT = {:e}",
                self.damping, self.temperature
            ));
        }
        if let Some(gap) = min_gap {
            if self.damping >= gap {
                out.push(format!(
                    "weak-coupling condition violated: damping γ = {:e} is not below the smallest quasienergy gap {:e}",
                    self.damping, gap
                ));
            }
        }
        out
    }
}

/// Parity label, either of an H₀ eigenstate or (generalized) of a Floquet state.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Parity {
    Even,
    Odd,
}

impl Parity {
    pub fn from_sign(sign: i32) -> Self {
        if sign >= 0 {
            Parity::Even
        } else {
            Parity::Odd
        }
    }

    /// Parity of an index, (−1)^n.
    pub fn of_index(n: i64) -> Self {
        if n.rem_euclid(2) == 0 {
            Parity::Even
        } else {
            Parity::Odd
        }
    }

    pub fn sign(self) -> i32 {
        match self {
            Parity::Even => 1,
            Parity::Odd => -1,
        }
    }

    pub fn flip(self) -> Self {
        match self {
            Parity::Even => Parity::Odd,
            Parity::Odd => Parity::Even,
        }
    }

    pub fn times(self, other: Parity) -> Parity {
        Parity::from_sign(self.sign() * other.sign())
    }

    pub fn as_str(self) -> &'static str {
        match self {
            Parity::Even => "even",
            Parity::Odd => "odd",
        }
    }
}

impl std::fmt::Display for Parity {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.as_str())
    }
}
