//! Device parameters: coherence times, transition frequencies, repetition
//! timing and the readout assignment matrix.

use serde::{Deserialize, Serialize};

use crate::error::Error;
use crate::Result;

/// Planck constant, J·s.
pub const PLANCK: f64 = 6.626_070_15e-34;
/// Boltzmann constant, J/K.
pub const BOLTZMANN: f64 = 1.380_649e-23;

/// Transmon device parameters in SI units.
///
/// `r[j][k]` is the probability of recording label `j` given true state
/// `|k⟩` (columns are true states and sum to one).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DeviceParams {
    /// Effective temperature, K.
    pub t_eff: f64,
    /// Qubit relaxation time T1, s.
    pub t1: f64,
    /// Qubit dephasing time T2, s.
    pub t2: f64,
    /// |1⟩↔|2⟩ relaxation time, s.
    pub t1_12: f64,
    /// |1⟩↔|2⟩ dephasing time, s.
    pub t2_12: f64,
    /// |0⟩↔|1⟩ transition frequency, Hz.
    pub omega01: f64,
    /// Anharmonicity Δ (|1⟩↔|2⟩ frequency is omega01 + Δ), Hz.
    pub delta: f64,
    /// Repetition delay between shots, s.
    pub t_rep_delay: f64,
    /// Measurement duration, s.
    pub t_meas: f64,
    /// Probability of leakage to |2⟩ during a measurement.
    pub p_leak: f64,
    /// Readout assignment matrix, row-major.
    pub r: [[f64; 3]; 3],
}

impl Default for DeviceParams {
    fn default() -> Self {
        DeviceParams {
            t_eff: 60e-3,
            t1: 200e-6,
            t2: 100e-6,
            t1_12: 100e-6,
            t2_12: 50e-6,
            omega01: 4.9e9,
            delta: -0.3e9,
            t_rep_delay: 250e-6,
            t_meas: 1244e-9,
            p_leak: 0.002,
            r: [
                [0.991, 0.009, 0.0],
                [0.009, 0.931, 0.06],
                [0.0, 0.06, 0.94],
            ],
        }
    }
}

impl DeviceParams {
    pub fn validate(&self) -> Result<()> {
        for (name, t) in [
            ("t_eff", self.t_eff),
            ("t1", self.t1),
            ("t2", self.t2),
            ("t1_12", self.t1_12),
            ("t2_12", self.t2_12),
            ("t_rep_delay", self.t_rep_delay),
            ("t_meas", self.t_meas),
        ] {
            if !(t > 0.0) {
                return Err(Error::domain(format!("{name} must be positive, got {t}")));
            }
        }
        if !(0.0..=1.0).contains(&self.p_leak) {
            return Err(Error::domain(format!("p_leak = {} outside [0, 1]", self.p_leak)));
        }
        for k in 0..3 {
            let col: f64 = (0..3).map(|j| self.r[j][k]).sum();
            if (col - 1.0).abs() > 1e-12 {
                return Err(Error::domain(format!(
                    "assignment matrix column {k} sums to {col}, expected 1"
                )));
            }
            for j in 0..3 {
                if !(0.0..=1.0).contains(&self.r[j][k]) {
                    return Err(Error::domain(format!(
                        "assignment probability r[{j}][{k}] = {} outside [0, 1]",
                        self.r[j][k]
                    )));
                }
            }
        }
        Ok(())
    }

    /// Boltzmann factor `exp(−h·f/kB·T_eff)` for a transition of frequency
    /// `f` (Hz).
    pub fn boltzmann_factor(&self, f: f64) -> f64 {
        (-PLANCK * f / (BOLTZMANN * self.t_eff)).exp()
    }

    /// Thermal-equilibrium populations of the lowest `dim` levels.
    pub fn equilibrium_populations(&self, dim: usize) -> Vec<f64> {
        let w1 = self.boltzmann_factor(self.omega01);
        let w2 = w1 * self.boltzmann_factor(self.omega01 + self.delta);
        let mut pops = match dim {
            2 => vec![1.0, w1],
            3 => vec![1.0, w1, w2],
            _ => panic!("dim must be 2 or 3"),
        };
        let z: f64 = pops.iter().sum();
        for p in &mut pops {
            *p /= z;
        }
        pops
    }

    /// Thermal-equilibrium |1⟩ population (the passive-reset `p_sp`).
    pub fn equilibrium_p1(&self, dim: usize) -> f64 {
        self.equilibrium_populations(dim)[1]
    }

    /// Probability of recording label `j` given true state `k` in full
    /// three-outcome (qutrit) discrimination.
    pub fn qutrit_label_prob(&self, j: usize, k: usize) -> f64 {
        self.r[j][k]
    }

    /// Binary-discrimination label probabilities: states |1⟩ and |2⟩ are
    /// both reported as label 1, so `P(1|k) = q_1k + q_2k`.
    pub fn qubit_label_prob(&self, j: usize, k: usize) -> f64 {
        match j {
            0 => self.r[0][k],
            1 => self.r[1][k] + self.r[2][k],
            _ => 0.0,
        }
    }
}
