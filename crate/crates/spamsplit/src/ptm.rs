//! Pauli-transfer-matrix algebra over the restricted `{I,Z}` basis.
//!
//! Measurement noise, once twirled, is a mixture of bit flips, so its PTM is
//! supported entirely on Pauli strings made of `I` and `Z`. All matrices here
//! are real and indexed by `{I,Z}^⊗n` labels in lexicographic order
//! (`II, IZ, ZI, ZZ` for n = 2). Wire 0 is the leftmost letter; for a
//! measurement modeled as a CNOT onto a classical bit the convention is
//! `qubit ⊗ cbit`.

use nalgebra::DMatrix;
use serde::Serialize;

use crate::error::Error;
use crate::Result;

/// A Pauli string over the alphabet `{I,Z}`, identified by its basis index.
///
/// Bit `n-1-w` of `index` is set iff wire `w` carries a `Z`, which makes the
/// enumeration order of indices the lexicographic order of labels.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct RestrictedPauli {
    pub index: usize,
    pub n: usize,
}

impl RestrictedPauli {
    pub fn new(index: usize, n: usize) -> Result<Self> {
        if n == 0 || index >= (1 << n) {
            return Err(Error::domain(format!(
                "restricted Pauli index {index} out of range for n = {n}"
            )));
        }
        Ok(Self { index, n })
    }

    /// Parse a label like `"IZ"`.
    pub fn parse(label: &str) -> Result<Self> {
        let n = label.len();
        let mut index = 0usize;
        for c in label.chars() {
            index <<= 1;
            match c {
                'I' => {}
                'Z' => index |= 1,
                _ => {
                    return Err(Error::domain(format!(
                        "invalid restricted Pauli label {label:?}"
                    )))
                }
            }
        }
        Self::new(index, n)
    }

    /// Label string, e.g. `"ZI"`.
    pub fn label(&self) -> String {
        (0..self.n)
            .map(|w| {
                if self.index >> (self.n - 1 - w) & 1 == 1 {
                    'Z'
                } else {
                    'I'
                }
            })
            .collect()
    }

    /// Whether wire `w` carries a `Z`.
    pub fn has_z(&self, w: usize) -> bool {
        self.index >> (self.n - 1 - w) & 1 == 1
    }

    /// Number of `Z` letters on the given wires.
    pub fn z_count_on(&self, wires: &[usize]) -> usize {
        wires.iter().filter(|&&w| self.has_z(w)).count()
    }
}

/// The four measurement-noise fidelities `f_x = 1 − 2 p_x`.
///
/// `f_a` is the assignment (classical-bit flip) fidelity, `f_s` the state
/// (qubit flip at measurement) fidelity, `f_c` the correlated-flip fidelity,
/// and `f_sp` the state-preparation fidelity.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct NoiseFidelities {
    pub f_a: f64,
    pub f_s: f64,
    pub f_c: f64,
    pub f_sp: f64,
}

impl NoiseFidelities {
    pub fn new(f_a: f64, f_s: f64, f_c: f64, f_sp: f64) -> Result<Self> {
        for (name, f) in [("f_a", f_a), ("f_s", f_s), ("f_c", f_c), ("f_sp", f_sp)] {
            if !(f > -1.0 && f <= 1.0) {
                return Err(Error::domain(format!(
                    "{name} = {f} outside the physical range (-1, 1]"
                )));
            }
        }
        Ok(Self { f_a, f_s, f_c, f_sp })
    }

    pub fn ideal() -> Self {
        Self { f_a: 1.0, f_s: 1.0, f_c: 1.0, f_sp: 1.0 }
    }

    pub fn p_a(&self) -> f64 {
        (1.0 - self.f_a) / 2.0
    }

    pub fn p_s(&self) -> f64 {
        (1.0 - self.f_s) / 2.0
    }

    pub fn p_c(&self) -> f64 {
        (1.0 - self.f_c) / 2.0
    }

    pub fn p_sp(&self) -> f64 {
        (1.0 - self.f_sp) / 2.0
    }
}

/// Fidelity `f = 1 − 2p` of a bit flip with probability `p`.
pub fn flip_fidelity(p: f64) -> f64 {
    1.0 - 2.0 * p
}

/// A real PTM over the restricted `{I,Z}^⊗n` basis.
#[derive(Debug, Clone, PartialEq)]
pub struct Ptm {
    n: usize,
    m: DMatrix<f64>,
}

#[derive(Serialize)]
struct PtmJson {
    n: usize,
    entries: Vec<f64>,
}

impl Ptm {
    /// Wrap an explicit matrix; must be `2^n × 2^n`.
    pub fn from_matrix(n: usize, m: DMatrix<f64>) -> Result<Self> {
        let d = 1usize << n;
        if m.nrows() != d || m.ncols() != d {
            return Err(Error::dimension(format!(
                "PTM for n = {n} must be {d}x{d}, got {}x{}",
                m.nrows(),
                m.ncols()
            )));
        }
        Ok(Self { n, m })
    }

    pub fn identity(n: usize) -> Self {
        let d = 1usize << n;
        Self { n, m: DMatrix::identity(d, d) }
    }

    pub fn diagonal(n: usize, diag: &[f64]) -> Result<Self> {
        let d = 1usize << n;
        if diag.len() != d {
            return Err(Error::dimension(format!(
                "diagonal of length {} for n = {n}",
                diag.len()
            )));
        }
        Ok(Self { n, m: DMatrix::from_diagonal(&nalgebra::DVector::from_row_slice(diag)) })
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn dim(&self) -> usize {
        1 << self.n
    }

    pub fn matrix(&self) -> &DMatrix<f64> {
        &self.m
    }

    pub fn entry(&self, row: usize, col: usize) -> f64 {
        self.m[(row, col)]
    }

    /// Entry addressed by labels, e.g. `entry_labels("ZI", "ZI")`.
    pub fn entry_labels(&self, row: &str, col: &str) -> Result<f64> {
        let r = RestrictedPauli::parse(row)?;
        let c = RestrictedPauli::parse(col)?;
        if r.n != self.n || c.n != self.n {
            return Err(Error::dimension("label length does not match PTM"));
        }
        Ok(self.m[(r.index, c.index)])
    }

    /// PTM of a bit flip with probability `p` acting jointly on the wires in
    /// `support` (the flip is `X` on every support wire at once). Conjugation
    /// by `X` negates each `Z` letter, so the diagonal entry of label `L` is
    /// `(1 − 2p)` when `L` has an odd number of `Z` letters on the support
    /// and `1` when it has an even number.
    ///
    /// This yields the state error `Γ_s` (support = qubit), assignment error
    /// `Γ_a` (support = cbit) and correlated error `Γ_c` (support = both).
    pub fn bitflip(p: f64, support: &[usize], n: usize) -> Result<Self> {
        if !(0.0..=1.0).contains(&p) {
            return Err(Error::domain(format!("flip probability {p} outside [0, 1]")));
        }
        for &w in support {
            if w >= n {
                return Err(Error::dimension(format!("support wire {w} out of range for n = {n}")));
            }
        }
        let f = flip_fidelity(p);
        let d = 1usize << n;
        let mut diag = vec![0.0; d];
        for (i, slot) in diag.iter_mut().enumerate() {
            let pauli = RestrictedPauli { index: i, n };
            *slot = if pauli.z_count_on(support) % 2 == 1 { f } else { 1.0 };
        }
        Self::diagonal(n, &diag)
    }

    /// PTM of the ideal CNOT from the qubit onto the classical bit,
    /// restricted to `{I,Z}^2`: it exchanges the `IZ` and `ZZ` components.
    pub fn cnot() -> Self {
        let m = DMatrix::from_row_slice(
            4,
            4,
            &[
                1.0, 0.0, 0.0, 0.0, //
                0.0, 0.0, 0.0, 1.0, //
                0.0, 0.0, 1.0, 0.0, //
                0.0, 1.0, 0.0, 0.0,
            ],
        );
        Self { n: 2, m }
    }

    /// PTM of the reset-to-`|0⟩` operation on one wire.
    pub fn reset() -> Self {
        let m = DMatrix::from_row_slice(2, 2, &[1.0, 0.0, 1.0, 0.0]);
        Self { n: 1, m }
    }

    /// PTM of the SWAP of two wires, restricted to `{I,Z}^2`.
    pub fn swap() -> Self {
        let m = DMatrix::from_row_slice(
            4,
            4,
            &[
                1.0, 0.0, 0.0, 0.0, //
                0.0, 0.0, 1.0, 0.0, //
                0.0, 1.0, 0.0, 0.0, //
                0.0, 0.0, 0.0, 1.0,
            ],
        );
        Self { n: 2, m }
    }

    /// Composition `self ∘ other` (`other` applied first): the matrix
    /// product `self · other`.
    pub fn compose(&self, other: &Ptm) -> Result<Ptm> {
        if self.n != other.n {
            return Err(Error::dimension(format!(
                "cannot compose PTMs with n = {} and n = {}",
                self.n, other.n
            )));
        }
        Ok(Ptm { n: self.n, m: &self.m * &other.m })
    }

    /// `self` composed with itself `k` times; `k = 0` gives the identity.
    pub fn pow(&self, k: usize) -> Ptm {
        let mut out = Ptm::identity(self.n);
        for _ in 0..k {
            out = Ptm { n: self.n, m: &out.m * &self.m };
        }
        out
    }

    /// Tensor product with wire order `self ⊗ other`.
    pub fn tensor(&self, other: &Ptm) -> Ptm {
        Ptm {
            n: self.n + other.n,
            m: crate::linalg::kron_real(&self.m, &other.m),
        }
    }

    /// Discard a wire by projecting onto labels that carry `I` there.
    pub fn discard(&self, wire: usize) -> Result<Ptm> {
        if wire >= self.n {
            return Err(Error::dimension(format!("wire {wire} out of range")));
        }
        let keep: Vec<usize> = (0..self.dim())
            .filter(|&i| !RestrictedPauli { index: i, n: self.n }.has_z(wire))
            .collect();
        let d = keep.len();
        let mut m = DMatrix::zeros(d, d);
        for (r, &i) in keep.iter().enumerate() {
            for (c, &j) in keep.iter().enumerate() {
                m[(r, c)] = self.m[(i, j)];
            }
        }
        Ok(Ptm { n: self.n - 1, m })
    }

    /// Apply the PTM to a vector of restricted Pauli coefficients.
    pub fn apply_vec(&self, v: &[f64]) -> Result<Vec<f64>> {
        if v.len() != self.dim() {
            return Err(Error::dimension("Pauli vector length mismatch"));
        }
        let out = &self.m * nalgebra::DVector::from_row_slice(v);
        Ok(out.iter().copied().collect())
    }

    /// Noisy-measurement PTM `Γ_m = Γ_CX Γ_s Γ_a Γ_c` on `qubit ⊗ cbit`.
    pub fn measurement(f: &NoiseFidelities) -> Ptm {
        let g_s = Ptm::bitflip(f.p_s(), &[0], 2).expect("valid p_s");
        let g_a = Ptm::bitflip(f.p_a(), &[1], 2).expect("valid p_a");
        let g_c = Ptm::bitflip(f.p_c(), &[0, 1], 2).expect("valid p_c");
        Ptm::cnot()
            .compose(&g_s)
            .and_then(|m| m.compose(&g_a))
            .and_then(|m| m.compose(&g_c))
            .expect("dimensions agree")
    }

    /// Closed form of `Γ_m^{2k}`: diagonal with entries
    /// `(1, f_a^{2k}(f_c f_s)^k, (f_c f_s)^{2k}, f_a^{2k}(f_c f_s)^k)`.
    pub fn measurement_cycle_closed_form(k: usize, f: &NoiseFidelities) -> Ptm {
        let fa2k = f.f_a.powi(2 * k as i32);
        let fcs_k = (f.f_c * f.f_s).powi(k as i32);
        let fcs_2k = (f.f_c * f.f_s).powi(2 * k as i32);
        Ptm::diagonal(2, &[1.0, fa2k * fcs_k, fcs_2k, fa2k * fcs_k]).expect("n = 2")
    }

    /// The state-preparation PTM `Γ_sp` (a bit flip on the qubit wire).
    pub fn state_prep(f_sp: f64) -> Result<Ptm> {
        Ptm::bitflip((1.0 - f_sp) / 2.0, &[0], 2)
    }

    /// Final-measurement PTM on `qubit ⊗ ancilla-cbit` before the ancilla is
    /// discarded: `Γ_SWAP (Γ_|0⟩ ⊗ I) Γ_CX Γ_Λ (I ⊗ Γ_|0⟩)`.
    pub fn final_measurement_full(f: &NoiseFidelities) -> Ptm {
        let reset = Ptm::reset();
        let id1 = Ptm::identity(1);
        let g_s = Ptm::bitflip(f.p_s(), &[0], 2).expect("valid p_s");
        let g_a = Ptm::bitflip(f.p_a(), &[1], 2).expect("valid p_a");
        let g_c = Ptm::bitflip(f.p_c(), &[0, 1], 2).expect("valid p_c");
        let lambda = g_s
            .compose(&g_a)
            .and_then(|m| m.compose(&g_c))
            .expect("dimensions agree");
        Ptm::swap()
            .compose(&reset.tensor(&id1))
            .and_then(|m| m.compose(&Ptm::cnot()))
            .and_then(|m| m.compose(&lambda))
            .and_then(|m| m.compose(&id1.tensor(&reset)))
            .expect("dimensions agree")
    }

    /// Final-measurement PTM after discarding the ancillary classical line:
    /// `diag(1, f_a f_s)`. The correlated fidelity `f_c` drops out.
    pub fn final_measurement(f: &NoiseFidelities) -> Ptm {
        Ptm::final_measurement_full(f).discard(1).expect("wire 1 exists")
    }

    /// Closed form of the full MCB-circuit PTM
    /// `Γ_2k = Γ_fm Γ_m^{2k} Γ_sp` (with `Γ_fm` acting on the qubit wire).
    pub fn mcb_closed_form(k: usize, f: &NoiseFidelities) -> Ptm {
        let fa2k = f.f_a.powi(2 * k as i32);
        let fcs_k = (f.f_c * f.f_s).powi(k as i32);
        let fcs_2k = (f.f_c * f.f_s).powi(2 * k as i32);
        let fm = f.f_a * f.f_s * f.f_sp;
        Ptm::diagonal(2, &[1.0, fa2k * fcs_k, fcs_2k * fm, fa2k * fcs_k * fm]).expect("n = 2")
    }

    /// `Γ_2k` by explicit composition (final measurement on the qubit wire,
    /// identity on the cbit wire).
    pub fn mcb_composed(k: usize, f: &NoiseFidelities) -> Ptm {
        let g_fm = Ptm::final_measurement(f).tensor(&Ptm::identity(1));
        let g_sp = Ptm::state_prep(f.f_sp).expect("valid f_sp");
        g_fm.compose(&Ptm::measurement(f).pow(2 * k))
            .and_then(|m| m.compose(&g_sp))
            .expect("dimensions agree")
    }

    /// Trace preservation: the all-`I` row must be the first basis vector.
    pub fn trace_preservation_defect(&self) -> f64 {
        let mut defect: f64 = (self.m[(0, 0)] - 1.0).abs();
        for j in 1..self.dim() {
            defect = defect.max(self.m[(0, j)].abs());
        }
        defect
    }

    /// Max entrywise difference to another PTM.
    pub fn max_diff(&self, other: &Ptm) -> f64 {
        (&self.m - &other.m).iter().map(|x| x.abs()).fold(0.0, f64::max)
    }

    /// JSON debug form `{n, entries}` with row-major entries.
    pub fn to_json(&self) -> serde_json::Value {
        let entries: Vec<f64> = (0..self.dim())
            .flat_map(|i| (0..self.dim()).map(move |j| (i, j)))
            .map(|(i, j)| self.m[(i, j)])
            .collect();
        serde_json::to_value(PtmJson { n: self.n, entries }).expect("serializable")
    }
}
