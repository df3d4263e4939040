//! Mutual information and entropy of the channel for every input family
//! the region construction uses.

pub mod bounds;
pub mod radial;
pub mod scheme;

use serde::{Deserialize, Serialize};

pub use bounds::{bound_gap_db, mi_upper_bound_disk, upper_bound_average_power, upper_bound_mckellips};
pub use radial::{
    c2_unit_modulus, conditional_law, cross_entropy, entropy, h_y_given_amplitude, h_y_given_amplitude_with,
    marginal_entropy, mi_disk_conditional, mi_phase_uniform, mi_phase_uniform_asymptotic, output_law,
    rates_discrete_amplitude, AsymptoticRegime, ConditionalRadialDensity, MixtureRadialDensity, RadialLaw,
};
pub use scheme::{scheme_rate_pair, DecodeOrder, PhaseScheme, SchemeKind};

/// Where a boundary point came from.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "source", rename_all = "snake_case")]
pub enum Provenance {
    CornerA,
    CornerB,
    CornerC,
    Scheme { scheme: PhaseScheme, order: DecodeOrder },
    Mu { mu1: f64 },
    /// Unit-modulus optimum met on the way to a disk point.
    MuUnit { mu1: f64 },
    Hull,
    Evaluated,
}

impl Provenance {
    pub fn label(&self) -> String {
        match self {
            Provenance::CornerA => "corner_A".into(),
            Provenance::CornerB => "corner_B".into(),
            Provenance::CornerC => "corner_C".into(),
            Provenance::Scheme { scheme, order } => format!("scheme_{}_{}", scheme.label(), order.label()),
            Provenance::Mu { mu1 } => format!("mu({mu1})"),
            Provenance::MuUnit { mu1 } => format!("mu_unit({mu1})"),
            Provenance::Hull => "hull".into(),
            Provenance::Evaluated => "evaluated".into(),
        }
    }
}

/// `(R1, R2)` in bits.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RatePair {
    pub r1: f64,
    pub r2: f64,
    pub provenance: Provenance,
}

impl RatePair {
    pub fn new(r1: f64, r2: f64, provenance: Provenance) -> Self {
        Self { r1, r2, provenance }
    }

    pub fn sum(&self) -> f64 {
        self.r1 + self.r2
    }

    pub fn with_provenance(self, provenance: Provenance) -> Self {
        Self { provenance, ..self }
    }
}
