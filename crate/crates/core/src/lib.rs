//! Numerical toolkit for beta log-gases with one or several cuts: equilibrium
//! measures, the Chebyshev operator algebra behind fluctuation predictions,
//! theta-function corrections, partition-function expansions, samplers and
//! numerical certificates for the kernel lemmas.

pub mod error;
pub mod poly;
pub mod potential;

pub use error::{Error, Result};
pub mod spectral;
pub mod equilibrium;
pub mod chebops;
pub mod fluctuation;
pub mod partition;
pub mod sampler;
pub mod lemmacheck;
