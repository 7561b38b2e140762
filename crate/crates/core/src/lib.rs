//! Numerical laboratory for the free Schrödinger propagator on periodic
//! boxes: Fourier-Lebesgue norms, maximal functions, Wiener-decomposition
//! randomization, dyadic counterexample scaling, and Monte Carlo tail
//! estimation, all bitwise reproducible under a single seed.

pub mod config;
pub mod dyadic;
pub mod error;
pub mod experiment;
pub mod fit;
pub mod grid;
pub mod norms;
pub mod report;
pub mod rng;
pub mod wiener;

pub use error::{Error, Result};
