//! Density matrices over registers of qubit/qutrit wires.

use num_complex::Complex64;

use crate::error::Error;
use crate::linalg::{c0, c1, cr, dagger, hermitian_eigenvalues, hermiticity_defect, CMatrix};
use crate::Result;

use super::superop::SuperOp;

/// A density matrix over wires of local dimension 2 or 3. Wire 0 is the
/// leftmost (most significant) tensor factor.
#[derive(Debug, Clone, PartialEq)]
pub struct DensityMatrix {
    dims: Vec<usize>,
    rho: CMatrix,
}

impl DensityMatrix {
    /// All-wires-|0⟩ state.
    pub fn ground(dims: &[usize]) -> Result<Self> {
        Self::check_dims(dims)?;
        let d: usize = dims.iter().product();
        let mut rho = CMatrix::zeros(d, d);
        rho[(0, 0)] = c1();
        Ok(DensityMatrix { dims: dims.to_vec(), rho })
    }

    /// State from an explicit density matrix.
    pub fn from_matrix(dims: &[usize], rho: CMatrix) -> Result<Self> {
        Self::check_dims(dims)?;
        let d: usize = dims.iter().product();
        if rho.nrows() != d || rho.ncols() != d {
            return Err(Error::dimension(format!(
                "state for dims {dims:?} must be {d}x{d}, got {}x{}",
                rho.nrows(),
                rho.ncols()
            )));
        }
        Ok(DensityMatrix { dims: dims.to_vec(), rho })
    }

    /// Pure state |ψ⟩⟨ψ| from amplitudes.
    pub fn from_pure(dims: &[usize], psi: &[Complex64]) -> Result<Self> {
        Self::check_dims(dims)?;
        let d: usize = dims.iter().product();
        if psi.len() != d {
            return Err(Error::dimension("state vector length mismatch"));
        }
        let norm2: f64 = psi.iter().map(|z| z.norm_sqr()).sum();
        let mut rho = CMatrix::zeros(d, d);
        for i in 0..d {
            for j in 0..d {
                rho[(i, j)] = psi[i] * psi[j].conj() / cr(norm2);
            }
        }
        Ok(DensityMatrix { dims: dims.to_vec(), rho })
    }

    fn check_dims(dims: &[usize]) -> Result<()> {
        if dims.is_empty() {
            return Err(Error::dimension("empty register"));
        }
        if dims.iter().any(|&d| d != 2 && d != 3) {
            return Err(Error::dimension(format!("wire dimensions must be 2 or 3: {dims:?}")));
        }
        Ok(())
    }

    pub fn dims(&self) -> &[usize] {
        &self.dims
    }

    pub fn dim(&self) -> usize {
        self.dims.iter().product()
    }

    pub fn wire_dim(&self, wire: usize) -> usize {
        self.dims[wire]
    }

    pub fn matrix(&self) -> &CMatrix {
        &self.rho
    }

    pub fn trace(&self) -> Complex64 {
        self.rho.diagonal().iter().sum()
    }

    /// Stride of a wire in the flattened index (wire 0 most significant).
    fn stride(&self, wire: usize) -> usize {
        self.dims[wire + 1..].iter().product()
    }

    /// Split a full basis index into (digits on the given wires in order,
    /// flattened index of the rest).
    fn split_index(&self, full: usize, wires: &[usize]) -> (usize, usize) {
        let mut sub = 0usize;
        for &w in wires {
            let digit = full / self.stride(w) % self.dims[w];
            sub = sub * self.dims[w] + digit;
        }
        let mut rest = 0usize;
        for w in 0..self.dims.len() {
            if !wires.contains(&w) {
                let digit = full / self.stride(w) % self.dims[w];
                rest = rest * self.dims[w] + digit;
            }
        }
        (sub, rest)
    }

    fn validate_wires(&self, wires: &[usize]) -> Result<()> {
        if wires.is_empty() {
            return Err(Error::dimension("empty wire list"));
        }
        let mut seen = vec![false; self.dims.len()];
        for &w in wires {
            if w >= self.dims.len() {
                return Err(Error::dimension(format!("wire {w} out of range")));
            }
            if seen[w] {
                return Err(Error::dimension(format!("duplicate wire {w}")));
            }
            seen[w] = true;
        }
        Ok(())
    }

    /// Embed an operator acting on the listed wires (in the listed order)
    /// into the full register.
    pub fn embed_op(&self, op: &CMatrix, wires: &[usize]) -> Result<CMatrix> {
        self.validate_wires(wires)?;
        let k: usize = wires.iter().map(|&w| self.dims[w]).product();
        if op.nrows() != k || op.ncols() != k {
            return Err(Error::dimension(format!(
                "operator on wires {wires:?} must be {k}x{k}, got {}x{}",
                op.nrows(),
                op.ncols()
            )));
        }
        let d = self.dim();
        let mut full = CMatrix::zeros(d, d);
        for i in 0..d {
            let (ai, ri) = self.split_index(i, wires);
            for j in 0..d {
                let (aj, rj) = self.split_index(j, wires);
                if ri == rj {
                    full[(i, j)] = op[(ai, aj)];
                }
            }
        }
        Ok(full)
    }

    /// Apply a unitary on the given wires: `ρ → U ρ U†`.
    pub fn apply_unitary(&mut self, u: &CMatrix, wires: &[usize]) -> Result<()> {
        let full = self.embed_op(u, wires)?;
        self.rho = &full * &self.rho * dagger(&full);
        Ok(())
    }

    /// Apply a superoperator (column-stacking convention on the subsystem)
    /// to the given wires.
    pub fn apply_superop(&mut self, sop: &SuperOp, wires: &[usize]) -> Result<()> {
        self.validate_wires(wires)?;
        let k: usize = wires.iter().map(|&w| self.dims[w]).product();
        if sop.dim() != k {
            return Err(Error::dimension(format!(
                "superoperator dim {} does not match wires {wires:?} (dim {k})",
                sop.dim()
            )));
        }
        let d = self.dim();
        let r = d / k;
        // Precompute the inverse of split_index: full index from (sub, rest).
        let mut full_of = vec![0usize; d];
        for i in 0..d {
            let (a, b) = self.split_index(i, wires);
            full_of[a * r + b] = i;
        }
        let m = sop.matrix();
        let mut out = CMatrix::zeros(d, d);
        let mut block = nalgebra::DVector::from_element(k * k, c0());
        for b1 in 0..r {
            for b2 in 0..r {
                for a1 in 0..k {
                    for a2 in 0..k {
                        block[a1 + a2 * k] = self.rho[(full_of[a1 * r + b1], full_of[a2 * r + b2])];
                    }
                }
                let evolved = m * &block;
                for a1 in 0..k {
                    for a2 in 0..k {
                        out[(full_of[a1 * r + b1], full_of[a2 * r + b2])] = evolved[a1 + a2 * k];
                    }
                }
            }
        }
        self.rho = out;
        Ok(())
    }

    /// Diagonal populations of one wire (marginal over the rest).
    pub fn populations(&self, wire: usize) -> Result<Vec<f64>> {
        self.validate_wires(&[wire])?;
        let mut pops = vec![0.0; self.dims[wire]];
        for i in 0..self.dim() {
            let (a, _) = self.split_index(i, &[wire]);
            pops[a] += self.rho[(i, i)].re;
        }
        Ok(pops)
    }

    /// Joint diagonal populations of the full register.
    pub fn diagonal(&self) -> Vec<f64> {
        (0..self.dim()).map(|i| self.rho[(i, i)].re).collect()
    }

    /// Project one wire onto outcome `o` and renormalize.
    /// Returns the pre-projection probability of the outcome.
    pub fn project(&mut self, wire: usize, outcome: usize) -> Result<f64> {
        self.validate_wires(&[wire])?;
        if outcome >= self.dims[wire] {
            return Err(Error::domain(format!("outcome {outcome} out of range for wire {wire}")));
        }
        let d = self.dim();
        let prob = self.populations(wire)?[outcome];
        if prob < 1e-15 {
            return Err(Error::Consistency(format!(
                "projection onto outcome {outcome} of wire {wire} has probability {prob:.3e}"
            )));
        }
        for i in 0..d {
            let (ai, _) = self.split_index(i, &[wire]);
            for j in 0..d {
                let (aj, _) = self.split_index(j, &[wire]);
                if ai != outcome || aj != outcome {
                    self.rho[(i, j)] = c0();
                }
            }
        }
        self.rho /= cr(prob);
        Ok(prob)
    }

    /// Expectation value of a Hermitian operator on the given wires.
    pub fn expectation(&self, op: &CMatrix, wires: &[usize]) -> Result<f64> {
        let full = self.embed_op(op, wires)?;
        let val: Complex64 = (&full * &self.rho).diagonal().iter().sum();
        Ok(val.re)
    }

    /// Reduced density matrix of one wire (partial trace over the rest).
    pub fn reduced(&self, wire: usize) -> Result<CMatrix> {
        self.validate_wires(&[wire])?;
        let k = self.dims[wire];
        let mut out = CMatrix::zeros(k, k);
        for i in 0..self.dim() {
            let (ai, ri) = self.split_index(i, &[wire]);
            for j in 0..self.dim() {
                let (aj, rj) = self.split_index(j, &[wire]);
                if ri == rj {
                    out[(ai, aj)] += self.rho[(i, j)];
                }
            }
        }
        Ok(out)
    }

    /// Check Hermiticity, unit trace, and positivity within tolerances.
    pub fn validate(&self, herm_tol: f64, trace_tol: f64, eig_tol: f64) -> Result<()> {
        let h = hermiticity_defect(&self.rho);
        if h > herm_tol {
            return Err(Error::Consistency(format!("hermiticity defect {h:.3e}")));
        }
        let t = (self.trace() - c1()).norm();
        if t > trace_tol {
            return Err(Error::Consistency(format!("trace defect {t:.3e}")));
        }
        let min_eig = hermitian_eigenvalues(&self.rho)[0];
        if min_eig < -eig_tol {
            return Err(Error::Consistency(format!("negative eigenvalue {min_eig:.3e}")));
        }
        Ok(())
    }
}
