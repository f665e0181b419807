//! Gate matrices. Qubit gates come in native 2×2 form and as ideal SU(3)
//! embeddings acting on the {|0⟩,|1⟩} block with |2⟩ untouched.

use num_complex::Complex64;

use crate::linalg::{c0, c1, cr, CMatrix};

/// Pauli X, 2×2.
pub fn x_qubit() -> CMatrix {
    CMatrix::from_row_slice(2, 2, &[c0(), c1(), c1(), c0()])
}

/// Pauli Z, 2×2.
pub fn z_qubit() -> CMatrix {
    CMatrix::from_row_slice(2, 2, &[c1(), c0(), c0(), -c1()])
}

/// Hadamard, 2×2.
pub fn hadamard() -> CMatrix {
    let h = cr(1.0 / 2.0f64.sqrt());
    CMatrix::from_row_slice(2, 2, &[h, h, h, -h])
}

/// Rotation about X by θ, 2×2.
pub fn rx(theta: f64) -> CMatrix {
    let c = cr((theta / 2.0).cos());
    let s = Complex64::new(0.0, -(theta / 2.0).sin());
    CMatrix::from_row_slice(2, 2, &[c, s, s, c])
}

/// CNOT with the first listed wire as control, 4×4.
pub fn cnot() -> CMatrix {
    let mut m = CMatrix::zeros(4, 4);
    m[(0, 0)] = c1();
    m[(1, 1)] = c1();
    m[(2, 3)] = c1();
    m[(3, 2)] = c1();
    m
}

/// Controlled-Z, 4×4.
pub fn cz() -> CMatrix {
    let mut m = CMatrix::identity(4, 4);
    m[(3, 3)] = -c1();
    m
}

/// Embed a 2×2 qubit gate into SU(3) on the {|0⟩,|1⟩} block.
pub fn embed_qutrit(u: &CMatrix) -> CMatrix {
    let mut m = CMatrix::identity(3, 3);
    for i in 0..2 {
        for j in 0..2 {
            m[(i, j)] = u[(i, j)];
        }
    }
    m
}

/// Pauli X embedded in SU(3).
pub fn x_qutrit() -> CMatrix {
    embed_qutrit(&x_qubit())
}

/// Pauli Z embedded in SU(3) (|2⟩ picks up no phase).
pub fn z_qutrit() -> CMatrix {
    embed_qutrit(&z_qubit())
}

/// π pulse on the |1⟩↔|2⟩ transition.
pub fn x12() -> CMatrix {
    let mut m = CMatrix::zeros(3, 3);
    m[(0, 0)] = c1();
    m[(1, 2)] = c1();
    m[(2, 1)] = c1();
    m
}

/// `R₁₂(θ) = exp(−i θ X₁₂ / 2)` on the {|1⟩,|2⟩} block.
pub fn r12(theta: f64) -> CMatrix {
    let c = cr((theta / 2.0).cos());
    let s = Complex64::new(0.0, -(theta / 2.0).sin());
    let mut m = CMatrix::zeros(3, 3);
    m[(0, 0)] = c1();
    m[(1, 1)] = c;
    m[(1, 2)] = s;
    m[(2, 1)] = s;
    m[(2, 2)] = c;
    m
}

/// Identity of local dimension `d`.
pub fn identity(d: usize) -> CMatrix {
    CMatrix::identity(d, d)
}

/// Max deviation from unitarity, `‖U†U − I‖_max`.
pub fn unitarity_defect(u: &CMatrix) -> f64 {
    let d = u.nrows();
    let prod = u.adjoint() * u;
    let mut defect: f64 = 0.0;
    for i in 0..d {
        for j in 0..d {
            let expect = if i == j { c1() } else { c0() };
            defect = defect.max((prod[(i, j)] - expect).norm());
        }
    }
    defect
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn all_gates_unitary() {
        for u in [
            x_qubit(),
            z_qubit(),
            hadamard(),
            rx(0.7),
            cnot(),
            cz(),
            x_qutrit(),
            z_qutrit(),
            x12(),
            r12(2.1),
        ] {
            assert!(unitarity_defect(&u) < 1e-12);
        }
    }

    #[test]
    fn r12_special_angles() {
        // R₁₂(0) = I; R₁₂(π) swaps |1⟩ and |2⟩ up to phase.
        assert!((r12(0.0) - identity(3)).iter().map(|z| z.norm()).fold(0.0, f64::max) < 1e-15);
        let u = r12(std::f64::consts::PI);
        assert!((u[(2, 1)].norm() - 1.0).abs() < 1e-14);
        assert!(u[(1, 1)].norm() < 1e-14);
        assert!((u[(0, 0)] - c1()).norm() < 1e-14);
    }

    #[test]
    fn pi_experiment_gate_sequence_reaches_two() {
        // X, R₁₂(π), X on |0⟩: |0⟩ → |1⟩ → |2⟩ → |2⟩.
        let psi = CMatrix::from_row_slice(3, 1, &[c1(), c0(), c0()]);
        let out = x_qutrit() * r12(std::f64::consts::PI) * x_qutrit() * psi;
        assert!((out[(2, 0)].norm() - 1.0).abs() < 1e-14);
    }
}
