//! Distortion riskmetrics under distributional uncertainty.
//!
//! The crate evaluates Choquet-type riskmetrics rho_h defined by bounded-variation
//! distortion functions h (VaR, ES, dual utilities, inter-quantile ranges,
//! inverse-S weightings, and differences of these), computes concave/convex
//! envelopes with their divergence intervals, applies concentration operators to
//! quantile-represented distributions, and solves the associated worst/best-case
//! problems: closed-form bounds under moment constraints, rearrangement-algorithm
//! lower bounds under marginal constraints, and the portfolio / preference-robust
//! reductions built on top of them.

pub mod distortion;
pub mod envelope;
pub mod error;
pub mod experiments;
pub mod interval;
pub mod moment;
pub mod numerics;
pub mod oracle;
pub mod portfolio;
pub mod quantile;
pub mod rearrange;
pub mod rho;

pub use distortion::{Descriptor, Distortion, Side};
pub use error::{Error, Result};
pub use interval::IntervalSet;
pub use quantile::QuantileModel;
