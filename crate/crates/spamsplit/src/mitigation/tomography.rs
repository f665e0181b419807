//! Maximum-likelihood single-qubit state tomography.
//!
//! PEC-mitigated Pauli expectations need not form a physical Bloch vector
//! (its length can exceed 1), so the density matrix is reconstructed as the
//! closest physical state in least squares: ρ = T†T / Tr(T†T) with a
//! lower-triangular Cholesky-style parameterization, minimized over the
//! four real parameters with Nelder–Mead.

use num_complex::Complex64;

use crate::error::Error;
use crate::linalg::{cr, CMatrix};
use crate::Result;

/// Physical single-qubit state parameterized by the lower-triangular
/// factor T = [[t1, 0], [t3 + i t4, t2]].
#[derive(Debug, Clone, Copy)]
pub struct TomographyState {
    pub t1: f64,
    pub t2: f64,
    pub t3: f64,
    pub t4: f64,
}

impl TomographyState {
    /// ρ = T†T / Tr(T†T). Positive semidefinite with unit trace by
    /// construction for any parameter values.
    pub fn rho(&self) -> CMatrix {
        let norm = self.t1 * self.t1 + self.t2 * self.t2 + self.t3 * self.t3 + self.t4 * self.t4;
        if norm < 1e-300 {
            // Degenerate parameterization: fall back to the maximally mixed
            // state rather than dividing by zero.
            return CMatrix::from_diagonal_element(2, 2, cr(0.5));
        }
        let mut rho = CMatrix::zeros(2, 2);
        rho[(0, 0)] = cr((self.t1 * self.t1 + self.t3 * self.t3 + self.t4 * self.t4) / norm);
        rho[(1, 1)] = cr(self.t2 * self.t2 / norm);
        rho[(1, 0)] = Complex64::new(self.t2 * self.t3, self.t2 * self.t4) / norm;
        rho[(0, 1)] = rho[(1, 0)].conj();
        rho
    }

    /// Bloch vector (⟨X⟩, ⟨Y⟩, ⟨Z⟩) of ρ.
    pub fn bloch(&self) -> (f64, f64, f64) {
        let rho = self.rho();
        let x = 2.0 * rho[(1, 0)].re;
        let y = 2.0 * rho[(1, 0)].im;
        let z = rho[(0, 0)].re - rho[(1, 1)].re;
        (x, y, z)
    }
}

fn bloch_mse(t: &TomographyState, target: (f64, f64, f64)) -> f64 {
    let (x, y, z) = t.bloch();
    let dx = x - target.0;
    let dy = y - target.1;
    let dz = z - target.2;
    (dx * dx + dy * dy + dz * dz) / 3.0
}

/// Seed the T parameters by direct Bloch inversion of the (possibly
/// unphysical) target, clamping the populations into [0, 1].
fn invert_bloch(target: (f64, f64, f64)) -> TomographyState {
    let (x, y, z) = target;
    let rho00 = ((1.0 + z) / 2.0).clamp(0.0, 1.0);
    let rho11 = ((1.0 - z) / 2.0).clamp(0.0, 1.0);
    let rho10 = Complex64::new(x / 2.0, y / 2.0);
    let t2 = rho11.sqrt();
    let (t3, t4) = if t2 > 1e-12 {
        let off = rho10 / t2;
        (off.re, off.im)
    } else {
        (0.0, 0.0)
    };
    let t1 = (rho00 - t3 * t3 - t4 * t4).max(0.0).sqrt();
    TomographyState { t1, t2, t3, t4 }
}

/// Nelder–Mead minimization in 4 parameters. Returns (best point, MSE).
fn nelder_mead(
    start: [f64; 4],
    scale: f64,
    target: (f64, f64, f64),
    max_iter: usize,
) -> ([f64; 4], f64) {
    let f = |p: &[f64; 4]| {
        bloch_mse(
            &TomographyState { t1: p[0], t2: p[1], t3: p[2], t4: p[3] },
            target,
        )
    };
    let mut simplex: Vec<([f64; 4], f64)> = Vec::with_capacity(5);
    simplex.push((start, f(&start)));
    for k in 0..4 {
        let mut p = start;
        p[k] += if p[k].abs() > 0.05 { 0.1 * p[k] } else { scale };
        simplex.push((p, f(&p)));
    }
    let (alpha, gamma, rho, sigma) = (1.0, 2.0, 0.5, 0.5);
    for _ in 0..max_iter {
        simplex.sort_by(|a, b| a.1.partial_cmp(&b.1).unwrap());
        if simplex[4].1 - simplex[0].1 < 1e-16 {
            break;
        }
        let mut centroid = [0.0; 4];
        for (p, _) in simplex.iter().take(4) {
            for k in 0..4 {
                centroid[k] += p[k] / 4.0;
            }
        }
        let worst = simplex[4];
        let mut refl = [0.0; 4];
        for k in 0..4 {
            refl[k] = centroid[k] + alpha * (centroid[k] - worst.0[k]);
        }
        let f_refl = f(&refl);
        if f_refl < simplex[0].1 {
            let mut exp = [0.0; 4];
            for k in 0..4 {
                exp[k] = centroid[k] + gamma * (refl[k] - centroid[k]);
            }
            let f_exp = f(&exp);
            simplex[4] = if f_exp < f_refl { (exp, f_exp) } else { (refl, f_refl) };
        } else if f_refl < simplex[3].1 {
            simplex[4] = (refl, f_refl);
        } else {
            let mut con = [0.0; 4];
            for k in 0..4 {
                con[k] = centroid[k] + rho * (worst.0[k] - centroid[k]);
            }
            let f_con = f(&con);
            if f_con < worst.1 {
                simplex[4] = (con, f_con);
            } else {
                let best = simplex[0].0;
                for entry in simplex.iter_mut().skip(1) {
                    for k in 0..4 {
                        entry.0[k] = best[k] + sigma * (entry.0[k] - best[k]);
                    }
                    entry.1 = f(&entry.0);
                }
            }
        }
    }
    simplex.sort_by(|a, b| a.1.partial_cmp(&b.1).unwrap());
    simplex[0]
}

/// Fit the closest physical state to a measured Bloch vector. Returns the
/// state and the per-axis mean squared error at the optimum.
pub fn tomography_fit(target: (f64, f64, f64)) -> Result<(TomographyState, f64)> {
    for v in [target.0, target.1, target.2] {
        if !v.is_finite() {
            return Err(Error::domain("Bloch components must be finite"));
        }
    }
    let seed = invert_bloch(target);
    let mut best: Option<([f64; 4], f64)> = None;
    let starts = [
        [seed.t1, seed.t2, seed.t3, seed.t4],
        [0.70710678, 0.70710678, 0.0, 0.0],
        [1.0, 0.0, 0.0, 0.0],
        [0.0, 1.0, 0.0, 0.0],
        [0.5, 0.5, 0.5, 0.0],
    ];
    for start in starts {
        let (p, mse) = nelder_mead(start, 0.1, target, 2000);
        if best.map_or(true, |(_, m)| mse < m) {
            best = Some((p, mse));
        }
        if mse < 1e-12 {
            break;
        }
    }
    let (p, mse) = best.unwrap();
    Ok((TomographyState { t1: p[0], t2: p[1], t3: p[2], t4: p[3] }, mse))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg::hermitian_eigenvalues;

    fn assert_physical(t: &TomographyState) {
        let rho = t.rho();
        let tr = (rho[(0, 0)] + rho[(1, 1)]).re;
        assert!((tr - 1.0).abs() < 1e-12);
        for lam in hermitian_eigenvalues(&rho) {
            assert!(lam > -1e-12, "eigenvalue {lam}");
        }
    }

    #[test]
    fn physical_vectors_fit_exactly() {
        for target in [
            (0.0, 0.0, 1.0),
            (0.0, 0.0, -1.0),
            (1.0, 0.0, 0.0),
            (0.0, -1.0, 0.0),
            (0.3, -0.2, 0.5),
            (0.0, 0.0, 0.0),
        ] {
            let (state, mse) = tomography_fit(target).unwrap();
            assert!(mse < 1e-10, "target {target:?}: MSE {mse}");
            let (x, y, z) = state.bloch();
            assert!((x - target.0).abs() < 1e-5);
            assert!((y - target.1).abs() < 1e-5);
            assert!((z - target.2).abs() < 1e-5);
            assert_physical(&state);
        }
    }

    #[test]
    fn overshooting_z_projects_to_ground_state() {
        // |⟨Z⟩| > 1 from over-corrected mitigation: closest physical state
        // is |0⟩⟨0| with MSE (0.1)²/3 ≈ 0.0033.
        let (state, mse) = tomography_fit((0.0, 0.0, 1.1)).unwrap();
        let (x, y, z) = state.bloch();
        assert!(x.abs() < 1e-5 && y.abs() < 1e-5);
        assert!((z - 1.0).abs() < 1e-5);
        assert!((mse - 0.01 / 3.0).abs() < 1e-6);
        assert_physical(&state);
    }

    #[test]
    fn long_tilted_vector_lands_on_sphere() {
        let target = (0.9, 0.0, 0.9);
        let (state, mse) = tomography_fit(target).unwrap();
        let (x, y, z) = state.bloch();
        let len = (x * x + y * y + z * z).sqrt();
        assert!((len - 1.0).abs() < 1e-5, "length {len}");
        // Closest point on the unit sphere lies along the target direction.
        assert!((x - z).abs() < 1e-4);
        assert!(y.abs() < 1e-5);
        assert!(mse > 0.0);
        assert_physical(&state);
    }

    #[test]
    fn rejects_non_finite_input() {
        assert!(tomography_fit((f64::NAN, 0.0, 0.0)).is_err());
    }
}
