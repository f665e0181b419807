//! Error mitigation: TREX and split-SPAM correction of GHZ stabilizer
//! expectations, and probabilistic error cancellation (PEC) of the dynamic
//! teleportation circuit with single-qubit state tomography.

mod ghz;
mod pec;
mod quasi;
mod tomography;

pub use ghz::{
    build_ghz_ladder, ghz_raw_exact, ghz_raw_sampled, learn_zstar, learn_zstar_exact,
    mitigate_split, mitigate_trex, GhzNoise, MitigationRow,
};
pub use pec::{
    bootstrap_fidelities, build_teleportation, pec_estimate, run_teleportation_pec,
    state_fidelity, teleport_exact_pec, teleport_unmitigated, PecRealization, TeleportNoise,
    ThetaFidelity,
};
pub use quasi::{inverse_bitflip, QuasiProbChannel, QuasiTerm};
pub use tomography::{tomography_fit, TomographyState};
