//! Circuit representation: a flat instruction list interpreted by the
//! executor.

use crate::linalg::CMatrix;
use crate::Result;

use super::gates::unitarity_defect;
use super::superop::SuperOp;

/// Discrimination mode of a measurement.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum MeasureMode {
    /// Binary classification: |1⟩ and |2⟩ share label 1.
    Qubit,
    /// Full three-outcome discrimination.
    Qutrit,
}

/// One circuit instruction.
#[derive(Debug, Clone)]
pub enum Instruction {
    /// Apply a unitary on the listed wires (wire order = operator order).
    Unitary { matrix: CMatrix, wires: Vec<usize> },
    /// Apply a superoperator channel on the listed wires.
    Channel { superop: SuperOp, wires: Vec<usize> },
    /// Idle thermal evolution for a duration (seconds) on the listed wires.
    Delay { duration: f64, wires: Vec<usize> },
    /// Projective measurement; the recorded (noisy) label is stored in the
    /// wire's classical register and optionally appended to the shot record.
    Measure { wire: usize, mode: MeasureMode, record: bool },
    /// Apply the unitary to `wire` if its last recorded label equals
    /// `condition`.
    ConditionalUnitary { matrix: CMatrix, wire: usize, condition: u8 },
}

/// An ordered instruction list.
#[derive(Debug, Clone, Default)]
pub struct Circuit {
    pub instructions: Vec<Instruction>,
}

impl Circuit {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn unitary(mut self, matrix: CMatrix, wires: &[usize]) -> Self {
        self.instructions.push(Instruction::Unitary { matrix, wires: wires.to_vec() });
        self
    }

    pub fn channel(mut self, superop: SuperOp, wires: &[usize]) -> Self {
        self.instructions.push(Instruction::Channel { superop, wires: wires.to_vec() });
        self
    }

    pub fn delay(mut self, duration: f64, wires: &[usize]) -> Self {
        self.instructions.push(Instruction::Delay { duration, wires: wires.to_vec() });
        self
    }

    pub fn measure(mut self, wire: usize, mode: MeasureMode, record: bool) -> Self {
        self.instructions.push(Instruction::Measure { wire, mode, record });
        self
    }

    pub fn conditional(mut self, matrix: CMatrix, wire: usize, condition: u8) -> Self {
        self.instructions.push(Instruction::ConditionalUnitary { matrix, wire, condition });
        self
    }

    /// Number of measurements with `record: true`.
    pub fn recorded_measurements(&self) -> usize {
        self.instructions
            .iter()
            .filter(|i| matches!(i, Instruction::Measure { record: true, .. }))
            .count()
    }

    /// Validate unitarity of gates and CPTP-ness of channels.
    pub fn validate(&self) -> Result<()> {
        for inst in &self.instructions {
            match inst {
                Instruction::Unitary { matrix, .. }
                | Instruction::ConditionalUnitary { matrix, .. } => {
                    let defect = unitarity_defect(matrix);
                    if defect > 1e-10 {
                        return Err(crate::Error::Consistency(format!(
                            "gate unitarity defect {defect:.3e}"
                        )));
                    }
                }
                Instruction::Channel { superop, .. } => {
                    superop.validate_cptp(1e-9, 1e-10)?;
                }
                Instruction::Delay { duration, .. } => {
                    if *duration < 0.0 {
                        return Err(crate::Error::domain(format!("negative delay {duration}")));
                    }
                }
                Instruction::Measure { .. } => {}
            }
        }
        Ok(())
    }
}
