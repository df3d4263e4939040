//! Capacity region of the multiplicative multiple-access channel
//! `Y = h X1 X2 + Z` that appears when a passive reflecting surface
//! modulates its own data on top of a primary transmission.
//!
//! Rates are reported in bits at every public entry point unless a
//! function name or doc says nats.

pub mod channel;
pub mod error;
pub mod mi;
pub mod numerics;
pub mod optmass;
pub mod oracle;
pub mod region;

mod par;

pub use channel::{ChannelConfig, ReflectionConstraint, SnrPoint};
pub use error::{Error, Result};

pub use numerics::QuadratureSpec;
pub use mi::{DecodeOrder, PhaseScheme, Provenance, RatePair, SchemeKind};
pub use optmass::{BoundaryWeights, Constraint, MassPoint, MassPointDistribution, SecondaryInput};


pub use optmass::{BoundaryPoint, KktReport, SolverOptions};
pub use region::{assemble_region, boundary_ab, boundary_bc, compute_region, dof_slope, Corners, RegionBoundary, RegionReport};
