//! Physical configuration and the closed-form quantities that need no quadrature.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Multiply a rate in nats by this to get bits.
pub const BITS_PER_NAT: f64 = std::f64::consts::LOG2_E;

/// Element count used by the reference scenario.
pub const REFERENCE_ELEMENTS: usize = 64;
/// Per-element power gain `rho^2 |g_k v_k|^2` of the reference scenario.
pub const REFERENCE_ELEMENT_GAIN_SQ: f64 = 0.003;

/// Reflection constraint on the secondary symbol.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ReflectionConstraint {
    /// `|X2| = 1`, phase-only elements.
    UnitModulus,
    /// `|X2| <= 1`, amplitude and phase control.
    UnitDisk,
}

impl ReflectionConstraint {
    pub fn tag(self) -> &'static str {
        match self {
            ReflectionConstraint::UnitModulus => "unit",
            ReflectionConstraint::UnitDisk => "disk",
        }
    }
}

impl std::str::FromStr for ReflectionConstraint {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "unit" | "unit_modulus" => Ok(ReflectionConstraint::UnitModulus),
            "disk" | "unit_disk" => Ok(ReflectionConstraint::UnitDisk),
            other => Err(Error::Config(format!("unknown constraint `{other}` (expected unit or disk)"))),
        }
    }
}

/// Transmit SNR `P / sigma^2` in both scales.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SnrPoint {
    pub snr_db: f64,
    pub snr_linear: f64,
}

impl SnrPoint {
    pub fn from_db(snr_db: f64) -> Result<Self> {
        if !snr_db.is_finite() {
            return Err(Error::Config(format!("snr_db must be finite, got {snr_db}")));
        }
        Ok(Self { snr_db, snr_linear: 10f64.powf(snr_db / 10.0) })
    }

    pub fn from_linear(snr_linear: f64) -> Result<Self> {
        if !(snr_linear > 0.0 && snr_linear.is_finite()) {
            return Err(Error::Config(format!("linear snr must be positive, got {snr_linear}")));
        }
        Ok(Self { snr_db: 10.0 * snr_linear.log10(), snr_linear })
    }
}

/// Composite magnitude of the co-phased reflected paths.
pub fn composite_gain(element_gains: &[f64]) -> Result<f64> {
    if element_gains.is_empty() {
        return Err(Error::Config("element gain list is empty".into()));
    }
    if let Some(g) = element_gains.iter().find(|g| !(**g >= 0.0 && g.is_finite())) {
        return Err(Error::Config(format!("element gains must be finite and nonnegative, got {g}")));
    }
    // Sorted summation keeps the result independent of element order.
    let mut sorted = element_gains.to_vec();
    sorted.sort_by(f64::total_cmp);
    Ok(sorted.iter().sum())
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "RawChannelConfig")]
pub struct ChannelConfig {
    element_gains: Vec<f64>,
    noise_power: f64,
    power_budget: f64,
    composite_gain: f64,
}

#[derive(Deserialize)]
struct RawChannelConfig {
    element_gains: Vec<f64>,
    noise_power: f64,
    power_budget: f64,
    #[serde(default)]
    composite_gain: Option<f64>,
}

impl TryFrom<RawChannelConfig> for ChannelConfig {
    type Error = Error;

    fn try_from(raw: RawChannelConfig) -> Result<Self> {
        let cfg = ChannelConfig::new(raw.element_gains, raw.noise_power, raw.power_budget)?;
        if let Some(h) = raw.composite_gain {
            if (h - cfg.composite_gain).abs() > 1e-12 * cfg.composite_gain.max(1.0) {
                return Err(Error::Config(format!(
                    "composite_gain {h} disagrees with the element sum {}",
                    cfg.composite_gain
                )));
            }
        }
        Ok(cfg)
    }
}

impl ChannelConfig {
    pub fn new(element_gains: Vec<f64>, noise_power: f64, power_budget: f64) -> Result<Self> {
        let composite_gain = composite_gain(&element_gains)?;
        if !(noise_power > 0.0 && noise_power.is_finite()) {
            return Err(Error::Config(format!("noise power must be positive, got {noise_power}")));
        }
        if !(power_budget > 0.0 && power_budget.is_finite()) {
            return Err(Error::Config(format!("power budget must be positive, got {power_budget}")));
        }
        Ok(Self { element_gains, noise_power, power_budget, composite_gain })
    }

    /// `count` identical elements of power gain `element_gain_sq`.
    pub fn uniform(count: usize, element_gain_sq: f64, noise_power: f64, power_budget: f64) -> Result<Self> {
        if count == 0 {
            return Err(Error::Config("element count must be positive".into()));
        }
        if !(element_gain_sq >= 0.0) {
            return Err(Error::Config(format!("element gain must be nonnegative, got {element_gain_sq}")));
        }
        Self::new(vec![element_gain_sq.sqrt(); count], noise_power, power_budget)
    }

    /// Reference scenario (64 elements, gain 0.003 each, unit noise) at the given `P / sigma^2`.
    pub fn reference(snr_db: f64) -> Result<Self> {
        let snr = SnrPoint::from_db(snr_db)?;
        Self::uniform(REFERENCE_ELEMENTS, REFERENCE_ELEMENT_GAIN_SQ, 1.0, snr.snr_linear)
    }

    pub fn with_power(&self, power_budget: f64) -> Result<Self> {
        Self::new(self.element_gains.clone(), self.noise_power, power_budget)
    }

    pub fn with_snr_db(&self, snr_db: f64) -> Result<Self> {
        let snr = SnrPoint::from_db(snr_db)?;
        self.with_power(snr.snr_linear * self.noise_power)
    }

    pub fn element_count(&self) -> usize {
        self.element_gains.len()
    }

    pub fn element_gains(&self) -> &[f64] {
        &self.element_gains
    }

    pub fn noise_power(&self) -> f64 {
        self.noise_power
    }

    pub fn power_budget(&self) -> f64 {
        self.power_budget
    }

    pub fn composite_gain(&self) -> f64 {
        self.composite_gain
    }

    pub fn snr(&self) -> SnrPoint {
        let lin = self.power_budget / self.noise_power;
        SnrPoint { snr_db: 10.0 * lin.log10(), snr_linear: lin }
    }

    /// `P h^2 / sigma^2`.
    pub fn receive_snr(&self) -> f64 {
        self.power_budget * self.composite_gain * self.composite_gain / self.noise_power
    }

    /// Received amplitude at full power and unit reflection, `sqrt(P) h`.
    pub fn full_amplitude(&self) -> f64 {
        self.power_budget.sqrt() * self.composite_gain
    }
}

/// Primary capacity `log2(1 + P h^2 / sigma^2)`.
pub fn c1_primary_capacity(cfg: &ChannelConfig) -> f64 {
    cfg.receive_snr().ln_1p() * BITS_PER_NAT
}

/// Maximum sum rate; the same closed form as the primary capacity.
pub fn c_sum_max(cfg: &ChannelConfig) -> f64 {
    c1_primary_capacity(cfg)
}

/// Noise entropy `ln(pi e sigma^2)` in nats.
pub fn noise_entropy(noise_power: f64) -> f64 {
    (std::f64::consts::PI * std::f64::consts::E * noise_power).ln()
}
