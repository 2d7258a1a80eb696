//! Periodic solutions of quaternionic Riccati equations with periodic
//! coefficients.

pub mod cli;
pub mod coefficients;
pub mod conditions;
pub mod finder;
pub mod fourier;
pub mod integrator;
pub mod io;
pub mod normality;
pub mod quaternion;
pub mod transforms;

pub use coefficients::{QuaternionCoefficient, RiccatiSystem};
pub use fourier::{Harmonic, RealFourierSeries};
pub use quaternion::{Quaternion, SignedComponents};
