//! Weighted l1 compressed sensing: replica-symmetric recovery thresholds,
//! optimal weights, an exact LP recovery solver and a Monte Carlo harness.

pub mod error;
pub mod experiment;
pub mod format;
pub mod lp;
pub mod profile;
pub mod replica;
pub mod roots;
pub mod special;
pub mod weights;

pub use error::{Error, Result};
pub use profile::{Block, DensityProfile, ProfileFile, Weight, WeightProfile};
pub use replica::{threshold_solve, ThresholdResult};
pub use weights::{alpha_of_rho, optimal_weights, solve_optimal_u, OptimalWeightSolution};
