//! Circuit execution with collapse, noisy labeling, feedforward, and
//! shot-to-shot state carryover.

use rand::Rng;
use serde::Serialize;

use crate::error::Error;
use crate::Result;

use super::circuit::{Circuit, Instruction, MeasureMode};
use super::device::DeviceParams;
use super::state::DensityMatrix;
use super::superop::ChannelCache;

/// Outcomes of one executed circuit, with the populations of wire 0 at the
/// time the circuit started (the "input state" of the shot).
#[derive(Debug, Clone, Serialize)]
pub struct ShotRecord {
    /// Index of the circuit within the chain's circuit list.
    pub circuit_index: usize,
    /// Recorded labels, in measurement order.
    pub outcomes: Vec<u8>,
    /// Populations (p0, p1, p2) of wire 0 before the circuit ran; p2 = 0
    /// for qubit wires.
    pub input_state_populations: (f64, f64, f64),
}

/// Stateful interpreter: carries the density matrix and the last recorded
/// label of every wire across circuits.
pub struct Executor {
    params: DeviceParams,
    cache: ChannelCache,
    state: DensityMatrix,
    labels: Vec<Option<u8>>,
}

impl Executor {
    pub fn new(params: DeviceParams, dims: &[usize]) -> Result<Self> {
        params.validate()?;
        let state = DensityMatrix::ground(dims)?;
        let labels = vec![None; dims.len()];
        Ok(Executor { params, cache: ChannelCache::new(), state, labels })
    }

    pub fn state(&self) -> &DensityMatrix {
        &self.state
    }

    pub fn state_mut(&mut self) -> &mut DensityMatrix {
        &mut self.state
    }

    pub fn params(&self) -> &DeviceParams {
        &self.params
    }

    /// Populations of wire 0 padded to a (p0, p1, p2) triple.
    fn wire0_populations(&self) -> Result<(f64, f64, f64)> {
        let p = self.state.populations(0)?;
        Ok((p[0], p[1], p.get(2).copied().unwrap_or(0.0)))
    }

    /// Projective measurement with noisy labeling: the true outcome is
    /// sampled from the populations and collapses the state; the recorded
    /// label is drawn from the assignment matrix and drives feedforward.
    pub fn measure<R: Rng>(
        &mut self,
        wire: usize,
        mode: MeasureMode,
        rng: &mut R,
    ) -> Result<u8> {
        let pops = self.state.populations(wire)?;
        let total: f64 = pops.iter().sum();
        if (total - 1.0).abs() > 1e-8 {
            return Err(Error::Consistency(format!(
                "populations of wire {wire} sum to {total}, expected 1"
            )));
        }
        // Sample the true outcome.
        let draw: f64 = rng.gen::<f64>() * total;
        let mut acc = 0.0;
        let mut outcome = pops.len() - 1;
        for (o, &p) in pops.iter().enumerate() {
            acc += p;
            if draw < acc {
                outcome = o;
                break;
            }
        }
        self.state.project(wire, outcome)?;

        // Sample the recorded label from the assignment matrix column.
        let label_probs: Vec<f64> = match mode {
            MeasureMode::Qutrit => {
                (0..3).map(|j| self.params.qutrit_label_prob(j, outcome)).collect()
            }
            MeasureMode::Qubit => {
                (0..2).map(|j| self.params.qubit_label_prob(j, outcome)).collect()
            }
        };
        let draw: f64 = rng.gen();
        let mut acc = 0.0;
        let mut label = label_probs.len() - 1;
        for (j, &p) in label_probs.iter().enumerate() {
            acc += p;
            if draw < acc {
                label = j;
                break;
            }
        }
        self.labels[wire] = Some(label as u8);
        Ok(label as u8)
    }

    /// Run one circuit, returning its recorded outcomes.
    pub fn run_circuit<R: Rng>(&mut self, circuit: &Circuit, rng: &mut R) -> Result<Vec<u8>> {
        let mut recorded = Vec::new();
        for inst in &circuit.instructions {
            match inst {
                Instruction::Unitary { matrix, wires } => {
                    self.state.apply_unitary(matrix, wires)?;
                }
                Instruction::Channel { superop, wires } => {
                    self.state.apply_superop(superop, wires)?;
                }
                Instruction::Delay { duration, wires } => {
                    for &w in wires {
                        let dim = self.state.wire_dim(w);
                        let ch = self.cache.thermal(&self.params, *duration, dim)?.clone();
                        self.state.apply_superop(&ch, &[w])?;
                    }
                }
                Instruction::Measure { wire, mode, record } => {
                    let label = self.measure(*wire, *mode, rng)?;
                    if *record {
                        recorded.push(label);
                    }
                }
                Instruction::ConditionalUnitary { matrix, wire, condition } => {
                    if self.labels[*wire] == Some(*condition) {
                        self.state.apply_unitary(matrix, &[*wire])?;
                    }
                }
            }
        }
        Ok(recorded)
    }
}

/// Run a list of circuits `n_samples` times in order with full state
/// carryover. A record is emitted for every executed circuit that contains
/// at least one recorded measurement.
pub fn run_chain<R: Rng>(
    circuits: &[Circuit],
    params: &DeviceParams,
    dims: &[usize],
    n_samples: usize,
    rng: &mut R,
) -> Result<Vec<ShotRecord>> {
    let mut exec = Executor::new(params.clone(), dims)?;
    let mut records = Vec::new();
    for _ in 0..n_samples {
        for (circuit_index, circuit) in circuits.iter().enumerate() {
            let input_state_populations = exec.wire0_populations()?;
            let outcomes = exec.run_circuit(circuit, rng)?;
            if circuit.recorded_measurements() > 0 {
                records.push(ShotRecord { circuit_index, outcomes, input_state_populations });
            }
        }
    }
    Ok(records)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::sim::gates;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn ideal_params() -> DeviceParams {
        let mut p = DeviceParams::default();
        p.r = [[1.0, 0.0, 0.0], [0.0, 1.0, 0.0], [0.0, 0.0, 1.0]];
        p.p_leak = 0.0;
        p
    }

    #[test]
    fn ideal_chain_records_zeros() {
        let params = ideal_params();
        let circuit = Circuit::new().measure(0, MeasureMode::Qutrit, true);
        let mut rng = ChaCha8Rng::seed_from_u64(0);
        let records = run_chain(&[circuit], &params, &[3], 5, &mut rng).unwrap();
        assert_eq!(records.len(), 5);
        for r in &records {
            assert_eq!(r.outcomes, vec![0]);
            assert!((r.input_state_populations.0 - 1.0).abs() < 1e-12);
        }
    }

    #[test]
    fn identity_assignment_labels_truth() {
        let params = ideal_params();
        let mut exec = Executor::new(params, &[3]).unwrap();
        exec.state_mut().apply_unitary(&gates::x_qutrit(), &[0]).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let label = exec.measure(0, MeasureMode::Qutrit, &mut rng).unwrap();
        assert_eq!(label, 1);
        assert_eq!(exec.state().populations(0).unwrap(), vec![0.0, 1.0, 0.0]);
    }

    #[test]
    fn qubit_mode_merges_two_into_one() {
        // True |2⟩ in binary discrimination: label 1 with certainty
        // (q_12 + q_22 = 1 for the default matrix).
        let params = DeviceParams::default();
        let mut exec = Executor::new(params, &[3]).unwrap();
        exec.state_mut()
            .apply_unitary(&(gates::x12() * gates::x_qutrit()), &[0])
            .unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        for _ in 0..50 {
            let mut e2 = Executor::new(exec.params().clone(), &[3]).unwrap();
            e2.state_mut()
                .apply_unitary(&(gates::x12() * gates::x_qutrit()), &[0])
                .unwrap();
            assert_eq!(e2.measure(0, MeasureMode::Qubit, &mut rng).unwrap(), 1);
        }
    }

    #[test]
    fn qutrit_label_statistics_match_assignment_matrix() {
        // Populations (0.5, 0.3, 0.2): P(label 1) = 0.009·0.5 + 0.931·0.3
        // + 0.06·0.2 = 0.29580.
        let params = DeviceParams::default();
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let n = 200_000;
        let mut ones = 0usize;
        for _ in 0..n {
            let mut exec = Executor::new(params.clone(), &[3]).unwrap();
            let amps = [
                crate::linalg::cr(0.5f64.sqrt()),
                crate::linalg::cr(0.3f64.sqrt()),
                crate::linalg::cr(0.2f64.sqrt()),
            ];
            *exec.state_mut() = DensityMatrix::from_pure(&[3], &amps).unwrap();
            if exec.measure(0, MeasureMode::Qutrit, &mut rng).unwrap() == 1 {
                ones += 1;
            }
        }
        let freq = ones as f64 / n as f64;
        assert!((freq - 0.29580).abs() < 4e-3, "freq = {freq}");
    }

    #[test]
    fn feedforward_resets_excited_state() {
        let params = ideal_params();
        let mut exec = Executor::new(params, &[3]).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(4);
        // Prepare |2⟩, measure, correct: X₁₂ then X on label 2; X on label 1.
        let circuit = Circuit::new()
            .unitary(gates::x12() * gates::x_qutrit(), &[0])
            .measure(0, MeasureMode::Qutrit, false)
            .conditional(gates::x_qutrit(), 0, 1)
            .conditional(gates::x_qutrit() * gates::x12(), 0, 2);
        exec.run_circuit(&circuit, &mut rng).unwrap();
        assert_eq!(exec.state().populations(0).unwrap(), vec![1.0, 0.0, 0.0]);
    }

    #[test]
    fn population_consistency_enforced() {
        let params = ideal_params();
        let mut exec = Executor::new(params, &[2]).unwrap();
        // Corrupt the state trace.
        let m = exec.state().matrix() * crate::linalg::cr(0.5);
        *exec.state_mut() = DensityMatrix::from_matrix(&[2], m).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        assert!(exec.measure(0, MeasureMode::Qubit, &mut rng).is_err());
    }
}
