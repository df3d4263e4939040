//! Optimal discrete amplitude laws on the part of the boundary where the
//! secondary rate is favoured, and their optimality certificates.

pub mod boundary;
pub mod distribution;
pub(crate) mod grid;
pub mod kkt;
pub mod solver;

pub use boundary::{
    c2_disk, optimize_boundary_point, rayleigh_ks_distance, weighted_objective, BoundaryPoint, DiskCapacity,
    EscalationStep,
};
pub use distribution::{BoundaryWeights, Constraint, MassPoint, MassPointDistribution, SecondaryInput};
pub use kkt::{complete_support, verify_kkt, KktGrid, KktReport};
pub use solver::{optimize_fixed_support, FixedSupportSolution, SolverOptions};
