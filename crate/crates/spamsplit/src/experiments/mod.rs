//! Experiment generators and estimators: RabiEF residual-population
//! measurement, measurement cycle benchmarking (MCB), and the
//! Gaussian-discrimination sensitivity toy model.

mod gaussian;
mod mcb;
mod rabief;

pub use gaussian::{gaussian_discrimination_rabief, gaussian_rabief_signals, readout_fidelity};
pub use mcb::{
    mcb_exact, mcb_expectations, run_mcb_sampled, twirl_averaged_cycle, DepthExpectations,
    McbConfig, McbData, McbRecord, TwirlSample,
};
pub use rabief::{
    build_rabief_circuits, estimate_psp, rabief_bias, relabel_shots, run_rabief,
    run_rabief_exact, summarize_rabief, RabiefConfig, RabiefData, RabiefSummary, ResetMode,
};

/// Default rotation-angle grid: 40 points covering [0, 4π].
pub fn default_angles() -> Vec<f64> {
    let n = 40;
    (0..n)
        .map(|i| 4.0 * std::f64::consts::PI * i as f64 / (n - 1) as f64)
        .collect()
}
