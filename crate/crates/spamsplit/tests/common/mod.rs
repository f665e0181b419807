//! Shared helpers for the integration suites: random CPTP channels and
//! restricted-Pauli readout of superoperators.

use nalgebra::DMatrix;
use num_complex::Complex64;
use rand::Rng;

use spamsplit::linalg::{c0, c1, dagger, hermitian_sqrt, kron, CMatrix};
use spamsplit::sim::SuperOp;

pub fn pauli_i() -> CMatrix {
    CMatrix::identity(2, 2)
}

pub fn pauli_x() -> CMatrix {
    CMatrix::from_row_slice(2, 2, &[c0(), c1(), c1(), c0()])
}

pub fn pauli_z() -> CMatrix {
    CMatrix::from_row_slice(2, 2, &[c1(), c0(), c0(), -c1()])
}

/// Random CPTP channel via the Ginibre construction: draw `n_kraus`
/// complex-Gaussian-ish matrices and normalize them into a Kraus set.
pub fn random_cptp<R: Rng>(dim: usize, n_kraus: usize, rng: &mut R) -> SuperOp {
    let mut raw: Vec<CMatrix> = Vec::with_capacity(n_kraus);
    for _ in 0..n_kraus {
        let mut g = CMatrix::zeros(dim, dim);
        for i in 0..dim {
            for j in 0..dim {
                g[(i, j)] = Complex64::new(rng.gen::<f64>() - 0.5, rng.gen::<f64>() - 0.5);
            }
        }
        raw.push(g);
    }
    let mut s = CMatrix::zeros(dim, dim);
    for k in &raw {
        s += dagger(k) * k;
    }
    let s_inv_sqrt = hermitian_sqrt(&s)
        .try_inverse()
        .expect("Ginibre normalization is positive definite");
    let kraus: Vec<CMatrix> = raw.into_iter().map(|k| k * &s_inv_sqrt).collect();
    SuperOp::from_kraus(&kraus).expect("normalized Kraus set")
}

/// A channel close to the identity: identity mixed with a random CPTP map.
pub fn near_identity_cptp<R: Rng>(dim: usize, strength: f64, rng: &mut R) -> SuperOp {
    let noise = random_cptp(dim, dim, rng);
    noise.mix(&SuperOp::identity(dim), strength).expect("same dimension")
}

/// Restricted `{I,Z}^⊗2` PTM of a two-qubit superoperator:
/// `m[i][j] = Tr[P_i Λ(P_j)] / 4`.
pub fn restricted_ptm(sop: &SuperOp) -> DMatrix<f64> {
    assert_eq!(sop.dim(), 4);
    let basis = [
        kron(&pauli_i(), &pauli_i()),
        kron(&pauli_i(), &pauli_z()),
        kron(&pauli_z(), &pauli_i()),
        kron(&pauli_z(), &pauli_z()),
    ];
    let mut m = DMatrix::zeros(4, 4);
    for (j, pj) in basis.iter().enumerate() {
        let evolved = sop.apply(pj).expect("dimension 4");
        for (i, pi) in basis.iter().enumerate() {
            let tr: Complex64 = (pi * &evolved).diagonal().iter().sum();
            m[(i, j)] = tr.re / 4.0;
        }
    }
    m
}

/// Largest off-diagonal magnitude of a real matrix.
pub fn max_off_diagonal(m: &DMatrix<f64>) -> f64 {
    let mut worst: f64 = 0.0;
    for i in 0..m.nrows() {
        for j in 0..m.ncols() {
            if i != j {
                worst = worst.max(m[(i, j)].abs());
            }
        }
    }
    worst
}
