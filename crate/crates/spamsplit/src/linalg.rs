//! Small dense linear-algebra helpers shared by the simulator and the
//! mitigation code.

use nalgebra::DMatrix;
use num_complex::Complex64;

pub type CMatrix = DMatrix<Complex64>;

/// Complex zero.
pub fn c0() -> Complex64 {
    Complex64::new(0.0, 0.0)
}

/// Complex one.
pub fn c1() -> Complex64 {
    Complex64::new(1.0, 0.0)
}

/// Real number as complex.
pub fn cr(x: f64) -> Complex64 {
    Complex64::new(x, 0.0)
}

/// Kronecker product `a ⊗ b`.
pub fn kron(a: &CMatrix, b: &CMatrix) -> CMatrix {
    let (ar, ac) = a.shape();
    let (br, bc) = b.shape();
    let mut out = CMatrix::zeros(ar * br, ac * bc);
    for i in 0..ar {
        for j in 0..ac {
            let aij = a[(i, j)];
            if aij != c0() {
                for k in 0..br {
                    for l in 0..bc {
                        out[(i * br + k, j * bc + l)] = aij * b[(k, l)];
                    }
                }
            }
        }
    }
    out
}

/// Kronecker product of real matrices.
pub fn kron_real(a: &DMatrix<f64>, b: &DMatrix<f64>) -> DMatrix<f64> {
    let (ar, ac) = a.shape();
    let (br, bc) = b.shape();
    let mut out = DMatrix::zeros(ar * br, ac * bc);
    for i in 0..ar {
        for j in 0..ac {
            let aij = a[(i, j)];
            if aij != 0.0 {
                for k in 0..br {
                    for l in 0..bc {
                        out[(i * br + k, j * bc + l)] = aij * b[(k, l)];
                    }
                }
            }
        }
    }
    out
}

/// Conjugate transpose.
pub fn dagger(a: &CMatrix) -> CMatrix {
    a.adjoint()
}

/// Max absolute deviation from Hermiticity, `‖A − A†‖_max`.
pub fn hermiticity_defect(a: &CMatrix) -> f64 {
    let d = a - a.adjoint();
    d.iter().map(|z| z.norm()).fold(0.0, f64::max)
}

/// Eigenvalues of a Hermitian matrix, ascending.
pub fn hermitian_eigenvalues(a: &CMatrix) -> Vec<f64> {
    let eig = a.clone().symmetric_eigen();
    let mut vals: Vec<f64> = eig.eigenvalues.iter().copied().collect();
    vals.sort_by(|x, y| x.partial_cmp(y).unwrap());
    vals
}

/// Principal square root of a Hermitian PSD matrix. Small negative
/// eigenvalues from roundoff are clamped to zero.
pub fn hermitian_sqrt(a: &CMatrix) -> CMatrix {
    let eig = a.clone().symmetric_eigen();
    let d = a.nrows();
    let mut out = CMatrix::zeros(d, d);
    for k in 0..eig.eigenvalues.len() {
        let lam = eig.eigenvalues[k].max(0.0).sqrt();
        let v = eig.eigenvectors.column(k);
        for i in 0..d {
            for j in 0..d {
                out[(i, j)] += cr(lam) * v[i] * v[j].conj();
            }
        }
    }
    out
}

/// Identity matrix of size `d`.
pub fn eye(d: usize) -> CMatrix {
    CMatrix::identity(d, d)
}
