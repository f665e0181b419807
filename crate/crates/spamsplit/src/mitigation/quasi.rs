//! Quasi-probability representations of inverse noise channels.

use rand::Rng;
use serde::Serialize;

use crate::error::Error;
use crate::Result;

/// A Pauli term of a quasi-probability channel. `X` means the bit-flip
/// Pauli on every wire the channel acts on (single wire for Λ_s/Λ_a, both
/// wires for the correlated Λ_c).
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum QuasiTerm {
    I,
    X,
}

/// A signed mixture of Paulis with sampling overhead γ = Σ|q_i|.
#[derive(Debug, Clone, Serialize)]
pub struct QuasiProbChannel {
    pub terms: Vec<(QuasiTerm, f64)>,
    pub gamma: f64,
}

impl QuasiProbChannel {
    /// Draw one term: returns (term, sign of its quasi-probability).
    pub fn sample<R: Rng>(&self, rng: &mut R) -> (QuasiTerm, i8) {
        let draw: f64 = rng.gen::<f64>() * self.gamma;
        let mut acc = 0.0;
        for &(term, q) in &self.terms {
            acc += q.abs();
            if draw < acc {
                return (term, if q >= 0.0 { 1 } else { -1 });
            }
        }
        let &(term, q) = self.terms.last().expect("non-empty");
        (term, if q >= 0.0 { 1 } else { -1 })
    }

    /// Quasi-probability of the X term (0 if absent).
    pub fn q_x(&self) -> f64 {
        self.terms
            .iter()
            .find(|(t, _)| *t == QuasiTerm::X)
            .map(|&(_, q)| q)
            .unwrap_or(0.0)
    }
}

/// The exact inverse of a bit-flip channel with flip probability `p`:
/// `q_I = (1−p)/(1−2p)`, `q_X = −p/(1−2p)`, `γ = 1/(1−2p)`.
pub fn inverse_bitflip(p: f64) -> Result<QuasiProbChannel> {
    if !(0.0..0.5).contains(&p) {
        return Err(Error::domain(format!("flip probability {p} outside [0, 0.5)")));
    }
    let q_i = (1.0 - p) / (1.0 - 2.0 * p);
    let q_x = -p / (1.0 - 2.0 * p);
    Ok(QuasiProbChannel {
        terms: vec![(QuasiTerm::I, q_i), (QuasiTerm::X, q_x)],
        gamma: q_i.abs() + q_x.abs(),
    })
}
