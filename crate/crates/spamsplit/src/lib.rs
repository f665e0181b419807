//! Simulation and noise-learning toolkit for splitting state-preparation
//! errors from measurement errors with non-computational (qutrit) states.
//!
//! The crate is organized around the stages of the noise-learning and
//! mitigation workflow:
//!
//! - [`ptm`]: Pauli-transfer-matrix algebra over the restricted `{I,Z}` basis,
//!   including the closed-form measurement-noise model.
//! - [`sim`]: dense density-matrix simulator for mixed qubit/qutrit registers
//!   with Lindblad thermal relaxation, noisy measurement and feedforward.
//! - [`fit`]: Levenberg-Marquardt fitting of sin²-Rabi and `A f^{2k}` decay
//!   models with parameter covariance.
//! - [`experiments`]: RabiEF, measurement cycle benchmarking (MCB) and the
//!   Gaussian-discrimination sensitivity model.
//! - [`learn`]: turning fitted decays into noise-model fidelities and the
//!   two-path learning workflow.
//! - [`mitigation`]: TREX / split-SPAM mitigation of the GHZ ladder and PEC
//!   mitigation of the dynamic teleportation circuit.
//! - [`config`]: device and experiment configuration files.

pub mod config;
pub mod error;
pub mod experiments;
pub mod fit;
pub mod learn;
pub mod linalg;
pub mod mitigation;
pub mod ptm;
pub mod sim;

pub use error::Error;

/// Crate-wide result alias.
pub type Result<T> = std::result::Result<T, Error>;
