//! GHZ-ladder stabilizer experiment with engineered SPAM noise, the
//! twirled all-zero reference ⟨Z*⟩, and the TREX / split-SPAM mitigators.

use num_complex::Complex64;
use rand::Rng;
use serde::Serialize;

use crate::error::Error;
use crate::fit::propagate_mitigation_error;
use crate::linalg::{c0, c1, CMatrix};
use crate::sim::{gates, Circuit};
use crate::Result;

/// SPAM noise of the engineered GHZ simulation: per-qubit state-preparation
/// fidelities and the (common) terminal-measurement fidelity product
/// `f_a·f_s`.
#[derive(Debug, Clone)]
pub struct GhzNoise {
    pub f_sp: Vec<f64>,
    pub f_meas: f64,
}

impl GhzNoise {
    pub fn uniform(n: usize, f_sp: f64, f_meas: f64) -> Self {
        GhzNoise { f_sp: vec![f_sp; n], f_meas }
    }

    fn validate(&self, n: usize) -> Result<()> {
        if self.f_sp.len() != n {
            return Err(Error::dimension(format!(
                "{} f_sp entries for {n} qubits",
                self.f_sp.len()
            )));
        }
        for &f in self.f_sp.iter().chain(std::iter::once(&self.f_meas)) {
            if !(f > 0.0 && f <= 1.0) {
                return Err(Error::domain(format!("fidelity {f} outside (0, 1]")));
            }
        }
        Ok(())
    }
}

/// Build the GHZ preparation circuit plus the X⊗ⁿ basis rotation.
///
/// Variant (a) is the sequential CNOT ladder. The two-layer variant keeps
/// the same gate sequence (the ladder's data dependencies admit no true
/// reordering) but groups gates into two alternating layers for scheduling;
/// with ideal gates both variants are identical by construction and this is
/// used as a cross-check.
pub fn build_ghz_ladder(n: usize, two_layer: bool) -> Result<Circuit> {
    if !(2..=10).contains(&n) {
        return Err(Error::domain(format!("qubit count {n} outside [2, 10]")));
    }
    if two_layer && n % 2 != 0 {
        return Err(Error::domain("two-layer variant requires an even qubit count"));
    }
    let mut c = Circuit::new().unitary(gates::hadamard(), &[0]);
    for i in 0..n - 1 {
        c = c.unitary(gates::cnot(), &[i, i + 1]);
    }
    for i in 0..n {
        c = c.unitary(gates::hadamard(), &[i]);
    }
    Ok(c)
}

// --- Small statevector engine -------------------------------------------
//
// The GHZ circuits are pure Clifford on up to 10 qubits; evolving basis
// states as statevectors and mixing over preparation-error patterns is
// exact and far cheaper than a 1024×1024 density matrix.

fn sv_apply_1q(psi: &mut [Complex64], gate: &CMatrix, wire: usize, n: usize) {
    let stride = 1usize << (n - 1 - wire);
    let d = psi.len();
    let mut base = 0;
    while base < d {
        for off in 0..stride {
            let i0 = base + off;
            let i1 = i0 + stride;
            let a = psi[i0];
            let b = psi[i1];
            psi[i0] = gate[(0, 0)] * a + gate[(0, 1)] * b;
            psi[i1] = gate[(1, 0)] * a + gate[(1, 1)] * b;
        }
        base += 2 * stride;
    }
}

fn sv_apply_cnot(psi: &mut [Complex64], control: usize, target: usize, n: usize) {
    let cbit = 1usize << (n - 1 - control);
    let tbit = 1usize << (n - 1 - target);
    for i in 0..psi.len() {
        if i & cbit != 0 && i & tbit == 0 {
            psi.swap(i, i | tbit);
        }
    }
}

/// Outcome distribution of the GHZ circuit applied to the basis state
/// `|e⟩` (the preparation-error pattern).
fn ghz_outcome_distribution(n: usize, e: usize, circuit: &Circuit) -> Result<Vec<f64>> {
    let d = 1usize << n;
    let mut psi = vec![c0(); d];
    psi[e] = c1();
    for inst in &circuit.instructions {
        match inst {
            crate::sim::Instruction::Unitary { matrix, wires } => match wires.len() {
                1 => sv_apply_1q(&mut psi, matrix, wires[0], n),
                2 => sv_apply_cnot(&mut psi, wires[0], wires[1], n),
                _ => return Err(Error::dimension("unsupported gate arity")),
            },
            _ => return Err(Error::domain("GHZ circuits are unitary-only")),
        }
    }
    Ok(psi.iter().map(|z| z.norm_sqr()).collect())
}

/// Pre-measurement outcome distribution of the noisy GHZ experiment:
/// mixture over all preparation-error patterns weighted by the per-qubit
/// flip probabilities.
fn noisy_ghz_distribution(n: usize, noise: &GhzNoise, two_layer: bool) -> Result<Vec<f64>> {
    noise.validate(n)?;
    let circuit = build_ghz_ladder(n, two_layer)?;
    let d = 1usize << n;
    let p_sp: Vec<f64> = noise.f_sp.iter().map(|f| (1.0 - f) / 2.0).collect();
    let mut dist = vec![0.0; d];
    for e in 0..d {
        let mut weight = 1.0;
        for (w, &p) in p_sp.iter().enumerate() {
            weight *= if e >> (n - 1 - w) & 1 == 1 { p } else { 1.0 - p };
        }
        if weight < 1e-18 {
            continue;
        }
        let outcome = ghz_outcome_distribution(n, e, &circuit)?;
        for (slot, q) in dist.iter_mut().zip(outcome) {
            *slot += weight * q;
        }
    }
    Ok(dist)
}

fn parity_sign(v: usize) -> f64 {
    if v.count_ones() % 2 == 0 {
        1.0
    } else {
        -1.0
    }
}

/// Exact raw ⟨X⊗ⁿ⟩ of the noisy GHZ experiment (no shot noise): the
/// rotated-basis parity damped by the measurement fidelity on every qubit.
pub fn ghz_raw_exact(n: usize, noise: &GhzNoise, two_layer: bool) -> Result<f64> {
    let dist = noisy_ghz_distribution(n, noise, two_layer)?;
    let parity: f64 = dist.iter().enumerate().map(|(v, &p)| p * parity_sign(v)).sum();
    Ok(noise.f_meas.powi(n as i32) * parity)
}

/// Sampled raw ⟨X⊗ⁿ⟩ with X-twirled measurements: per randomization an
/// X mask is applied before measurement and undone by classical XOR; each
/// recorded bit flips with the measurement error probability.
pub fn ghz_raw_sampled<R: Rng>(
    n: usize,
    noise: &GhzNoise,
    two_layer: bool,
    randomizations: usize,
    shots: usize,
    rng: &mut R,
) -> Result<(f64, f64)> {
    let dist = noisy_ghz_distribution(n, noise, two_layer)?;
    let p_m = (1.0 - noise.f_meas) / 2.0;
    sample_twirled_parity(&dist, n, p_m, randomizations, shots, rng)
}

/// Twirled parity sampling shared by the raw-GHZ and ⟨Z*⟩ estimators.
fn sample_twirled_parity<R: Rng>(
    dist: &[f64],
    n: usize,
    p_flip: f64,
    randomizations: usize,
    shots: usize,
    rng: &mut R,
) -> Result<(f64, f64)> {
    if randomizations == 0 || shots == 0 {
        return Err(Error::domain("randomizations and shots must be at least 1"));
    }
    let cumulative: Vec<f64> = dist
        .iter()
        .scan(0.0, |acc, &p| {
            *acc += p;
            Some(*acc)
        })
        .collect();
    let mut means = Vec::with_capacity(randomizations);
    for _ in 0..randomizations {
        let mask: usize = rng.gen_range(0..dist.len());
        let mut acc = 0.0;
        for _ in 0..shots {
            let draw: f64 = rng.gen();
            let v = cumulative.partition_point(|&c| c < draw).min(dist.len() - 1);
            // Physical mask, per-bit record flips, classical unmasking.
            let mut recorded = v ^ mask;
            for w in 0..n {
                if rng.gen::<f64>() < p_flip {
                    recorded ^= 1 << w;
                }
            }
            acc += parity_sign(recorded ^ mask);
        }
        means.push(acc / shots as f64);
    }
    let m = means.len() as f64;
    let mean = means.iter().sum::<f64>() / m;
    let sigma = if means.len() > 1 {
        (means.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (m - 1.0) / m).sqrt()
    } else {
        0.0
    };
    Ok((mean, sigma))
}

/// Exact ⟨Z*⟩ of the all-zero reference: `Π_i f_sp,i · f_meas`.
pub fn learn_zstar_exact(n: usize, noise: &GhzNoise) -> Result<f64> {
    noise.validate(n)?;
    Ok(noise.f_sp.iter().map(|f| f * noise.f_meas).product())
}

/// Sampled ⟨Z*⟩: measure Z⊗ⁿ on the all-zero state with X-twirled
/// measurements, same passive reset (same f_sp) as the payload circuits.
pub fn learn_zstar<R: Rng>(
    n: usize,
    noise: &GhzNoise,
    randomizations: usize,
    shots: usize,
    rng: &mut R,
) -> Result<(f64, f64)> {
    noise.validate(n)?;
    let d = 1usize << n;
    // All-zero input with per-qubit preparation flips: product distribution.
    let mut dist = vec![0.0; d];
    for v in 0..d {
        let mut w = 1.0;
        for (q, &f) in noise.f_sp.iter().enumerate() {
            let p = (1.0 - f) / 2.0;
            w *= if v >> (n - 1 - q) & 1 == 1 { p } else { 1.0 - p };
        }
        dist[v] = w;
    }
    let p_m = (1.0 - noise.f_meas) / 2.0;
    sample_twirled_parity(&dist, n, p_m, randomizations, shots, rng)
}

/// TREX mitigation: `raw / zstar`.
pub fn mitigate_trex(raw: (f64, f64), zstar: (f64, f64)) -> Result<(f64, f64)> {
    if zstar.0 == 0.0 {
        return Err(Error::domain("zstar must be nonzero"));
    }
    let sigma = propagate_mitigation_error(raw, zstar, &[])?;
    Ok((raw.0 / zstar.0, sigma))
}

/// Split-SPAM mitigation: `raw · Π_{i=1}^{n−1} f_sp,i / zstar`, restoring
/// the state-preparation fidelities of the qubits whose errors do not
/// affect X⊗ⁿ.
pub fn mitigate_split(
    raw: (f64, f64),
    zstar: (f64, f64),
    f_sp_list: &[(f64, f64)],
) -> Result<(f64, f64)> {
    if zstar.0 == 0.0 {
        return Err(Error::domain("zstar must be nonzero"));
    }
    let prod: f64 = f_sp_list.iter().map(|&(v, _)| v).product();
    let sigma = propagate_mitigation_error(raw, zstar, f_sp_list)?;
    Ok((raw.0 * prod / zstar.0, sigma))
}

/// One row of the mitigation table.
#[derive(Debug, Clone, Serialize)]
pub struct MitigationRow {
    pub n: usize,
    pub raw: (f64, f64),
    pub zstar: (f64, f64),
    pub trex: (f64, f64),
    pub split: (f64, f64),
}
