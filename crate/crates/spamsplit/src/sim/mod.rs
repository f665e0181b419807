//! Dense density-matrix simulator for mixed qubit/qutrit registers.
//!
//! States are full density matrices over a register of wires with local
//! dimension 2 or 3 (wire 0 is the leftmost tensor factor). Noise enters via
//! Lindblad thermal-relaxation channels (solved by exact exponentiation of
//! the vectorized generator), a leakage-mixing measurement channel, and a
//! 3×3 readout assignment matrix. Measurements collapse onto the true
//! projective outcome while the recorded label — which drives feedforward —
//! is drawn from the assignment matrix.

mod circuit;
mod device;
mod exec;
pub mod gates;
mod state;
mod superop;

pub use circuit::{Circuit, Instruction, MeasureMode};
pub use device::DeviceParams;
pub use exec::{run_chain, Executor, ShotRecord};
pub use state::DensityMatrix;
pub use superop::{apply_to_populations, lindblad_channel, lindblad_generator, measurement_channel, ChannelCache, SuperOp};
