//! Probabilistic error cancellation for the dynamic teleportation circuit.
//!
//! The circuit teleports R_X(θ)|0⟩ from wire 0 to wire 2 via a Bell pair
//! and two mid-circuit measurements. Measurements are modeled in deferred
//! form: each result is copied onto a classical-bit wire (3 and 4) with a
//! CNOT, so the 5-wire density matrix captures both the quantum state and
//! the noisy records that drive the corrections. Nine bit-flip noise
//! channels act: one preparation flip per data qubit and the
//! state/assignment/correlated trio per measurement. PEC inserts the
//! sampled term of each channel's quasi-probability inverse directly after
//! the channel it cancels.

use std::collections::HashMap;

use num_complex::Complex64;
use rand::Rng;
use serde::Serialize;

use crate::error::Error;
use crate::linalg::{c0, cr, hermitian_sqrt, CMatrix};
use crate::mitigation::quasi::inverse_bitflip;
use crate::mitigation::tomography::tomography_fit;
use crate::sim::{gates, Circuit, SuperOp};
use crate::sim::DensityMatrix;
use crate::Result;

const N_CHANNELS: usize = 9;

/// Bit-flip error rates of the teleportation simulation. `p_sp` is the
/// per-qubit preparation flip probability; the measurement trio is given
/// as fidelities (restricted-PTM Z attenuations).
#[derive(Debug, Clone, Copy, Serialize)]
pub struct TeleportNoise {
    pub p_sp: f64,
    pub f_s: f64,
    pub f_a: f64,
    pub f_c: f64,
}

impl TeleportNoise {
    /// Flip probabilities of the nine channels in circuit order:
    /// prep q0..q2, then (state, assignment, correlated) per measurement.
    fn flip_probs(&self) -> [f64; N_CHANNELS] {
        let ps = (1.0 - self.f_s) / 2.0;
        let pa = (1.0 - self.f_a) / 2.0;
        let pc = (1.0 - self.f_c) / 2.0;
        [self.p_sp, self.p_sp, self.p_sp, ps, pa, pc, ps, pa, pc]
    }

    /// Total sampling overhead: product of the per-channel γ = 1/(1−2p).
    pub fn gamma(&self) -> Result<f64> {
        let mut g = 1.0;
        for p in self.flip_probs() {
            g *= inverse_bitflip(p)?.gamma;
        }
        Ok(g)
    }
}

/// One sampled PEC circuit: a 9-bit mask of which inverse terms came out
/// as X, the overall sign (−1 per X term), and the shot-estimated Pauli
/// expectations (⟨X⟩, ⟨Y⟩, ⟨Z⟩) of the output qubit.
#[derive(Debug, Clone, Copy, Serialize)]
pub struct PecRealization {
    pub pattern: u16,
    pub sign: i8,
    pub signals: [f64; 3],
}

/// Ideal teleportation circuit in deferred-measurement form. Wire layout:
/// 0 = source, 1–2 = Bell pair, 3–4 = measurement records.
pub fn build_teleportation(theta: f64) -> Circuit {
    Circuit::new()
        .unitary(gates::rx(theta), &[0])
        .unitary(gates::hadamard(), &[1])
        .unitary(gates::cnot(), &[1, 2])
        .unitary(gates::cnot(), &[0, 1])
        .unitary(gates::hadamard(), &[0])
        .unitary(gates::cnot(), &[0, 3])
        .unitary(gates::cnot(), &[1, 4])
        .unitary(gates::cnot(), &[4, 2])
        .unitary(gates::cz(), &[3, 2])
}

fn bitflip_superop(p: f64) -> Result<SuperOp> {
    let mut x = gates::x_qubit();
    x *= cr(p.sqrt());
    let mut i = CMatrix::identity(2, 2);
    i *= cr((1.0 - p).sqrt());
    SuperOp::from_kraus(&[i, x])
}

fn correlated_flip_superop(p: f64) -> Result<SuperOp> {
    let mut xx = crate::linalg::kron(&gates::x_qubit(), &gates::x_qubit());
    xx *= cr(p.sqrt());
    let mut i = CMatrix::identity(4, 4);
    i *= cr((1.0 - p).sqrt());
    SuperOp::from_kraus(&[i, xx])
}

/// Evolve the noisy teleportation circuit and return the reduced output
/// state on wire 2. `pattern` selects which inverse terms are X; the
/// all-zero pattern is the unmitigated circuit (all inverse terms
/// identity).
fn teleport_output(theta: f64, noise: &TeleportNoise, pattern: u16) -> Result<CMatrix> {
    let p = noise.flip_probs();
    let mut rho = DensityMatrix::ground(&[2, 2, 2, 2, 2])?;
    let x = gates::x_qubit();
    let flip = |rho: &mut DensityMatrix, bit: usize, wires: &[usize]| -> Result<()> {
        if pattern >> bit & 1 == 1 {
            for &w in wires {
                rho.apply_unitary(&x, &[w])?;
            }
        }
        Ok(())
    };

    for q in 0..3 {
        rho.apply_superop(&bitflip_superop(p[q])?, &[q])?;
        flip(&mut rho, q, &[q])?;
    }
    rho.apply_unitary(&gates::rx(theta), &[0])?;
    rho.apply_unitary(&gates::hadamard(), &[1])?;
    rho.apply_unitary(&gates::cnot(), &[1, 2])?;
    rho.apply_unitary(&gates::cnot(), &[0, 1])?;
    rho.apply_unitary(&gates::hadamard(), &[0])?;

    // Measurement of wire 0 recorded on wire 3, then of wire 1 on wire 4.
    for (ch, (q, c)) in [(3usize, (0usize, 3usize)), (6, (1, 4))] {
        rho.apply_superop(&bitflip_superop(p[ch])?, &[q])?;
        flip(&mut rho, ch, &[q])?;
        rho.apply_unitary(&gates::cnot(), &[q, c])?;
        rho.apply_superop(&bitflip_superop(p[ch + 1])?, &[c])?;
        flip(&mut rho, ch + 1, &[c])?;
        rho.apply_superop(&correlated_flip_superop(p[ch + 2])?, &[q, c])?;
        flip(&mut rho, ch + 2, &[q, c])?;
    }

    rho.apply_unitary(&gates::cnot(), &[4, 2])?;
    rho.apply_unitary(&gates::cz(), &[3, 2])?;
    rho.reduced(2)
}

fn bloch_of(rho: &CMatrix) -> (f64, f64, f64) {
    (
        2.0 * rho[(1, 0)].re,
        2.0 * rho[(1, 0)].im,
        rho[(0, 0)].re - rho[(1, 1)].re,
    )
}

/// Ideal teleported state R_X(θ)|0⟩⟨0|R_X(θ)†.
fn ideal_output(theta: f64) -> CMatrix {
    let psi = [
        cr((theta / 2.0).cos()),
        Complex64::new(0.0, -(theta / 2.0).sin()),
    ];
    let mut rho = CMatrix::zeros(2, 2);
    for i in 0..2 {
        for j in 0..2 {
            rho[(i, j)] = psi[i] * psi[j].conj();
        }
    }
    rho
}

/// Uhlmann fidelity (Tr√(√ρ σ √ρ))² between two density matrices. When one
/// argument is pure the formula reduces to Tr(ρσ), which sidesteps the
/// O(√ε) noise the matrix square root picks up near rank deficiency.
pub fn state_fidelity(rho: &CMatrix, sigma: &CMatrix) -> Result<f64> {
    if rho.nrows() != sigma.nrows() || rho.ncols() != sigma.ncols() {
        return Err(Error::dimension("state dimensions differ"));
    }
    let purity = |m: &CMatrix| (m * m).diagonal().iter().sum::<Complex64>().re;
    if purity(rho) > 1.0 - 1e-12 || purity(sigma) > 1.0 - 1e-12 {
        return Ok((rho * sigma).diagonal().iter().sum::<Complex64>().re);
    }
    let sr = hermitian_sqrt(rho);
    let inner = hermitian_sqrt(&(&sr * sigma * &sr));
    let mut tr = c0();
    for k in 0..inner.nrows() {
        tr += inner[(k, k)];
    }
    Ok(tr.re * tr.re)
}

/// Fidelity of the unmitigated noisy teleportation output against the
/// ideal state.
pub fn teleport_unmitigated(theta: f64, noise: &TeleportNoise) -> Result<f64> {
    let out = teleport_output(theta, noise, 0)?;
    state_fidelity(&out, &ideal_output(theta))
}

/// Deterministic PEC: the full signed quasi-probability mixture over all
/// 2⁹ inverse-term assignments. Cancellation is exact, so the result
/// matches the ideal state to numerical precision.
pub fn teleport_exact_pec(theta: f64, noise: &TeleportNoise) -> Result<(CMatrix, f64)> {
    let probs = noise.flip_probs();
    let inverses: Vec<_> = probs
        .iter()
        .map(|&p| inverse_bitflip(p))
        .collect::<Result<Vec<_>>>()?;
    let mut mixed = CMatrix::zeros(2, 2);
    for pattern in 0..(1u16 << N_CHANNELS) {
        let mut weight = 1.0;
        for (bit, inv) in inverses.iter().enumerate() {
            weight *= if pattern >> bit & 1 == 1 {
                inv.q_x()
            } else {
                inv.terms[0].1
            };
        }
        if weight.abs() < 1e-16 {
            continue;
        }
        let out = teleport_output(theta, noise, pattern)?;
        mixed += out * cr(weight);
    }
    let fid = state_fidelity(&mixed, &ideal_output(theta))?;
    Ok((mixed, fid))
}

/// Sample a pool of PEC realizations. Each realization draws one term per
/// inverse channel (an X term with probability equal to the channel's flip
/// probability, carrying sign −1) and estimates each output Pauli
/// expectation from `shots` single-shot ±1 outcomes. Output states for
/// repeated patterns are cached, so the cost scales with the number of
/// distinct patterns, not the pool size.
pub fn run_teleportation_pec<R: Rng>(
    theta: f64,
    noise: &TeleportNoise,
    pool_size: usize,
    shots: usize,
    rng: &mut R,
) -> Result<Vec<PecRealization>> {
    if pool_size == 0 || shots == 0 {
        return Err(Error::domain("pool size and shots must be at least 1"));
    }
    let probs = noise.flip_probs();
    let mut cache: HashMap<u16, (f64, f64, f64)> = HashMap::new();
    let mut pool = Vec::with_capacity(pool_size);
    for _ in 0..pool_size {
        let mut pattern = 0u16;
        let mut sign = 1i8;
        for (bit, &p) in probs.iter().enumerate() {
            if rng.gen::<f64>() < p {
                pattern |= 1 << bit;
                sign = -sign;
            }
        }
        let bloch = match cache.get(&pattern) {
            Some(&b) => b,
            None => {
                let b = bloch_of(&teleport_output(theta, noise, pattern)?);
                cache.insert(pattern, b);
                b
            }
        };
        let mut signals = [0.0; 3];
        for (slot, expect) in signals.iter_mut().zip([bloch.0, bloch.1, bloch.2]) {
            let p_plus = ((1.0 + expect) / 2.0).clamp(0.0, 1.0);
            let mut acc = 0i64;
            for _ in 0..shots {
                acc += if rng.gen::<f64>() < p_plus { 1 } else { -1 };
            }
            *slot = acc as f64 / shots as f64;
        }
        pool.push(PecRealization { pattern, sign, signals });
    }
    Ok(pool)
}

/// PEC estimator: γ times the sign-weighted mean of the sampled signals.
pub fn pec_estimate(pool: &[PecRealization], gamma: f64) -> Result<(f64, f64, f64)> {
    if pool.is_empty() {
        return Err(Error::domain("empty realization pool"));
    }
    let n = pool.len() as f64;
    let mut sums = [0.0; 3];
    for r in pool {
        for k in 0..3 {
            sums[k] += r.sign as f64 * r.signals[k];
        }
    }
    Ok((
        gamma * sums[0] / n,
        gamma * sums[1] / n,
        gamma * sums[2] / n,
    ))
}

/// Bootstrap summary of the mitigated state fidelity at one angle.
#[derive(Debug, Clone, Copy, Serialize)]
pub struct ThetaFidelity {
    pub theta: f64,
    pub median: f64,
    pub q25: f64,
    pub q75: f64,
}

fn percentile(sorted: &[f64], q: f64) -> f64 {
    let pos = q * (sorted.len() - 1) as f64;
    let lo = pos.floor() as usize;
    let hi = pos.ceil() as usize;
    let frac = pos - lo as f64;
    sorted[lo] * (1.0 - frac) + sorted[hi] * frac
}

/// Bootstrap the mitigated fidelity: resample the pool, invert the Bloch
/// vector through the physicality-constrained tomography fit, and compare
/// to the ideal state. Returns median and interquartile range.
pub fn bootstrap_fidelities<R: Rng>(
    theta: f64,
    pool: &[PecRealization],
    gamma: f64,
    resamples: usize,
    resample_size: usize,
    rng: &mut R,
) -> Result<ThetaFidelity> {
    if pool.is_empty() || resamples == 0 || resample_size == 0 {
        return Err(Error::domain("bootstrap inputs must be non-empty"));
    }
    let ideal = ideal_output(theta);
    let mut fids = Vec::with_capacity(resamples);
    let mut draw = Vec::with_capacity(resample_size);
    for _ in 0..resamples {
        draw.clear();
        for _ in 0..resample_size {
            draw.push(pool[rng.gen_range(0..pool.len())]);
        }
        let (x, y, z) = pec_estimate(&draw, gamma)?;
        let (state, _) = tomography_fit((x, y, z))?;
        fids.push(state_fidelity(&state.rho(), &ideal)?);
    }
    fids.sort_by(|a, b| a.partial_cmp(b).unwrap());
    Ok(ThetaFidelity {
        theta,
        median: percentile(&fids, 0.5),
        q25: percentile(&fids, 0.25),
        q75: percentile(&fids, 0.75),
    })
}
