//! Superoperators in column-stacking vectorization and the Lindblad thermal
//! channel.

use std::collections::HashMap;

#[cfg(test)]
use num_complex::Complex64;

use crate::error::Error;
use crate::linalg::{c0, cr, dagger, hermitian_eigenvalues, kron, CMatrix};
use crate::Result;

use super::device::DeviceParams;

/// A superoperator on a `dim`-level system, stored as a `dim²×dim²` matrix
/// acting on column-stacked density matrices (`vec(ρ)[i + j·dim] = ρ_ij`).
#[derive(Debug, Clone, PartialEq)]
pub struct SuperOp {
    dim: usize,
    m: CMatrix,
}

impl SuperOp {
    pub fn from_matrix(dim: usize, m: CMatrix) -> Result<Self> {
        let d2 = dim * dim;
        if m.nrows() != d2 || m.ncols() != d2 {
            return Err(Error::dimension(format!(
                "superoperator for dim {dim} must be {d2}x{d2}, got {}x{}",
                m.nrows(),
                m.ncols()
            )));
        }
        Ok(SuperOp { dim, m })
    }

    pub fn identity(dim: usize) -> Self {
        SuperOp { dim, m: CMatrix::identity(dim * dim, dim * dim) }
    }

    /// Channel `ρ → Σ K_i ρ K_i†` from Kraus operators.
    pub fn from_kraus(kraus: &[CMatrix]) -> Result<Self> {
        let dim = kraus
            .first()
            .ok_or_else(|| Error::dimension("empty Kraus list"))?
            .nrows();
        let mut m = CMatrix::zeros(dim * dim, dim * dim);
        for k in kraus {
            if k.nrows() != dim || k.ncols() != dim {
                return Err(Error::dimension("inconsistent Kraus dimensions"));
            }
            m += kron(&k.map(|z| z.conj()), k);
        }
        Ok(SuperOp { dim, m })
    }

    /// Unitary conjugation `ρ → U ρ U†`.
    pub fn from_unitary(u: &CMatrix) -> Result<Self> {
        Self::from_kraus(std::slice::from_ref(u))
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn matrix(&self) -> &CMatrix {
        &self.m
    }

    /// Apply to a density matrix of matching dimension.
    pub fn apply(&self, rho: &CMatrix) -> Result<CMatrix> {
        let d = self.dim;
        if rho.nrows() != d || rho.ncols() != d {
            return Err(Error::dimension("state dimension mismatch"));
        }
        let mut vec_in = nalgebra::DVector::from_element(d * d, c0());
        for j in 0..d {
            for i in 0..d {
                vec_in[i + j * d] = rho[(i, j)];
            }
        }
        let vec_out = &self.m * vec_in;
        let mut out = CMatrix::zeros(d, d);
        for j in 0..d {
            for i in 0..d {
                out[(i, j)] = vec_out[i + j * d];
            }
        }
        Ok(out)
    }

    /// Composition `self ∘ other` (other applied first).
    pub fn compose(&self, other: &SuperOp) -> Result<SuperOp> {
        if self.dim != other.dim {
            return Err(Error::dimension("superoperator dimension mismatch"));
        }
        Ok(SuperOp { dim: self.dim, m: &self.m * &other.m })
    }

    /// Convex mixture `λ·self + (1−λ)·other`.
    pub fn mix(&self, other: &SuperOp, lambda: f64) -> Result<SuperOp> {
        if self.dim != other.dim {
            return Err(Error::dimension("superoperator dimension mismatch"));
        }
        Ok(SuperOp {
            dim: self.dim,
            m: self.m.clone() * cr(lambda) + other.m.clone() * cr(1.0 - lambda),
        })
    }

    /// Unnormalized Choi matrix `Σ_ij |i⟩⟨j| ⊗ Λ(|i⟩⟨j|)`.
    pub fn choi(&self) -> CMatrix {
        let d = self.dim;
        let mut c = CMatrix::zeros(d * d, d * d);
        for i in 0..d {
            for j in 0..d {
                for k in 0..d {
                    for l in 0..d {
                        c[(i * d + k, j * d + l)] = self.m[(k + l * d, i + j * d)];
                    }
                }
            }
        }
        c
    }

    /// Max deviation of the Choi partial trace from the identity
    /// (trace-preservation defect).
    pub fn trace_preservation_defect(&self) -> f64 {
        let d = self.dim;
        let mut defect: f64 = 0.0;
        for i in 0..d {
            for j in 0..d {
                let mut tr = c0();
                for k in 0..d {
                    tr += self.m[(k + k * d, i + j * d)];
                }
                let expect = if i == j { 1.0 } else { 0.0 };
                defect = defect.max((tr - cr(expect)).norm());
            }
        }
        defect
    }

    /// Smallest eigenvalue of the Choi matrix (≥ −tol for a CP map).
    pub fn choi_min_eigenvalue(&self) -> f64 {
        hermitian_eigenvalues(&self.choi())[0]
    }

    /// Validate complete positivity and trace preservation.
    pub fn validate_cptp(&self, cp_tol: f64, tp_tol: f64) -> Result<()> {
        let tp = self.trace_preservation_defect();
        if tp > tp_tol {
            return Err(Error::Consistency(format!(
                "channel trace-preservation defect {tp:.3e} exceeds {tp_tol:.1e}"
            )));
        }
        let cp = self.choi_min_eigenvalue();
        if cp < -cp_tol {
            return Err(Error::Consistency(format!(
                "channel Choi minimum eigenvalue {cp:.3e} below -{cp_tol:.1e}"
            )));
        }
        Ok(())
    }

    pub fn max_diff(&self, other: &SuperOp) -> f64 {
        (&self.m - &other.m).iter().map(|z| z.norm()).fold(0.0, f64::max)
    }
}

/// The six thermal Lindblad operators and their rates for a `dim`-level
/// transmon: relaxation/heating on |0⟩↔|1⟩ and |1⟩↔|2⟩, plus dephasing on
/// each transition. For `dim = 2` the qutrit-subspace operators are dropped.
fn lindblad_ops(params: &DeviceParams, dim: usize) -> Vec<(f64, CMatrix)> {
    let ketbra = |i: usize, j: usize| {
        let mut m = CMatrix::zeros(dim, dim);
        m[(i, j)] = cr(1.0);
        m
    };
    let g1 = 1.0 / params.t1;
    let g2 = g1 * params.boltzmann_factor(params.omega01);
    let g5 = 1.0 / params.t2;
    let mut z01 = CMatrix::zeros(dim, dim);
    z01[(0, 0)] = cr(1.0);
    z01[(1, 1)] = cr(-1.0);
    let mut ops = vec![(g1, ketbra(0, 1)), (g2, ketbra(1, 0)), (g5, z01)];
    if dim == 3 {
        let g3 = 1.0 / params.t1_12;
        let g4 = g3 * params.boltzmann_factor(params.omega01 + params.delta);
        let g6 = 1.0 / params.t2_12;
        let mut z12 = CMatrix::zeros(dim, dim);
        z12[(1, 1)] = cr(1.0);
        z12[(2, 2)] = cr(-1.0);
        ops.push((g3, ketbra(1, 2)));
        ops.push((g4, ketbra(2, 1)));
        ops.push((g6, z12));
    }
    ops
}

/// Vectorized Lindblad generator
/// `L = Σ γ_i (conj(L_i)⊗L_i − ½ I⊗L_i†L_i − ½ (L_i†L_i)ᵀ⊗I)`.
pub fn lindblad_generator(params: &DeviceParams, dim: usize) -> Result<CMatrix> {
    if dim != 2 && dim != 3 {
        return Err(Error::dimension(format!("Lindblad dim must be 2 or 3, got {dim}")));
    }
    params.validate()?;
    let eye = CMatrix::identity(dim, dim);
    let mut gen = CMatrix::zeros(dim * dim, dim * dim);
    for (gamma, l) in lindblad_ops(params, dim) {
        let ldl = dagger(&l) * &l;
        gen += (kron(&l.map(|z| z.conj()), &l)
            - kron(&eye, &ldl) * cr(0.5)
            - kron(&ldl.transpose(), &eye) * cr(0.5))
            * cr(gamma);
    }
    Ok(gen)
}

/// Thermal relaxation channel `exp(L t)` for an idle period of `t` seconds.
pub fn lindblad_channel(params: &DeviceParams, t: f64, dim: usize) -> Result<SuperOp> {
    if t < 0.0 {
        return Err(Error::domain(format!("negative delay {t}")));
    }
    let gen = lindblad_generator(params, dim)?;
    SuperOp::from_matrix(dim, (gen * cr(t)).exp())
}

/// Measurement-duration channel on a qutrit wire:
/// `Λ_meas(ρ) = (1 − p_leak) Λ_th(ρ, t_meas) + p_leak |2⟩⟨2|`.
pub fn measurement_channel(params: &DeviceParams) -> Result<SuperOp> {
    let thermal = lindblad_channel(params, params.t_meas, 3)?;
    // Constant map ρ → |2⟩⟨2|·Tr ρ.
    let mut leak = CMatrix::zeros(9, 9);
    for i in 0..3 {
        leak[(2 + 2 * 3, i + i * 3)] = cr(1.0);
    }
    thermal.mix(&SuperOp::from_matrix(3, leak)?, 1.0 - params.p_leak)
}

/// Cache of thermal channels keyed by `(duration, dim)`, so repeated delays
/// of the same length exponentiate the generator only once.
#[derive(Debug, Default)]
pub struct ChannelCache {
    map: HashMap<(u64, usize), SuperOp>,
}

impl ChannelCache {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn thermal(&mut self, params: &DeviceParams, t: f64, dim: usize) -> Result<&SuperOp> {
        let key = (t.to_bits(), dim);
        if !self.map.contains_key(&key) {
            let ch = lindblad_channel(params, t, dim)?;
            self.map.insert(key, ch);
        }
        Ok(&self.map[&key])
    }
}

/// Embed a complex operator as a diagonal-population stochastic check helper:
/// exposed for tests that compare population dynamics only.
pub fn apply_to_populations(sop: &SuperOp, pops: &[f64]) -> Result<Vec<f64>> {
    let d = sop.dim();
    if pops.len() != d {
        return Err(Error::dimension("population vector length mismatch"));
    }
    let mut rho = CMatrix::zeros(d, d);
    for (i, &p) in pops.iter().enumerate() {
        rho[(i, i)] = cr(p);
    }
    let out = sop.apply(&rho)?;
    Ok((0..d).map(|i| out[(i, i)].re).collect())
}
