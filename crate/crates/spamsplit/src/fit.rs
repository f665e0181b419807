//! Nonlinear least squares: Levenberg-Marquardt with analytic Jacobians for
//! the `a sin²(b θ + φ) + c` Rabi model and the `A f^{2k}` decay model, plus
//! the error-propagation formula for mitigated expectation values.

use nalgebra::{DMatrix, DVector};
use serde::Serialize;

use crate::error::Error;
use crate::Result;

const MAX_ITERS: usize = 200;
const PARAM_TOL: f64 = 1e-10;

/// Result of a sin² fit: `y = a sin²(b x + φ) + c`.
#[derive(Debug, Clone, Serialize)]
pub struct SinusoidFit {
    pub a: f64,
    pub b: f64,
    pub phi: f64,
    pub c: f64,
    /// Standard errors of (a, b, φ, c).
    pub std_errs: [f64; 4],
    /// Covariance of (a, b, φ, c), row-major.
    pub covariance: Vec<Vec<f64>>,
    pub residual_norm: f64,
}

/// Result of a decay fit: `y = A f^{2k}`.
#[derive(Debug, Clone, Serialize)]
pub struct DecayFit {
    pub a: f64,
    pub f: f64,
    /// Standard errors of (A, f).
    pub std_errs: [f64; 2],
    /// Covariance of (A, f), row-major.
    pub covariance: Vec<Vec<f64>>,
    pub residual_norm: f64,
}

/// Weighted sum of squared residuals.
fn ssr(
    xs: &[f64],
    ys: &[f64],
    w: &[f64],
    p: &[f64],
    model: &dyn Fn(f64, &[f64]) -> f64,
) -> f64 {
    xs.iter()
        .zip(ys)
        .zip(w)
        .map(|((&x, &y), &wi)| {
            let r = y - model(x, p);
            wi * r * r
        })
        .sum()
}

/// Generic Levenberg-Marquardt minimizer.
///
/// `jac(x, p)` returns ∂f/∂p_j at x. `clamp` projects the parameter vector
/// back into its feasible region after every step. Returns the parameters,
/// covariance (residual variance scaled by N − p degrees of freedom), and
/// the final weighted residual norm.
fn levenberg_marquardt(
    xs: &[f64],
    ys: &[f64],
    w: &[f64],
    p0: &[f64],
    model: &dyn Fn(f64, &[f64]) -> f64,
    jac: &dyn Fn(f64, &[f64]) -> Vec<f64>,
    clamp: &dyn Fn(&mut [f64]),
) -> Result<(Vec<f64>, DMatrix<f64>, f64)> {
    let n = xs.len();
    let np = p0.len();
    let mut p = p0.to_vec();
    clamp(&mut p);
    let mut lambda: f64 = 1e-3;
    let mut current_ssr = ssr(xs, ys, w, &p, model);
    let mut converged = false;

    for _ in 0..MAX_ITERS {
        // Normal equations J^T W J and J^T W r.
        let mut jtj = DMatrix::<f64>::zeros(np, np);
        let mut jtr = DVector::<f64>::zeros(np);
        for ((&x, &y), &wi) in xs.iter().zip(ys).zip(w) {
            let row = jac(x, &p);
            let r = y - model(x, &p);
            for i in 0..np {
                jtr[i] += wi * row[i] * r;
                for j in 0..np {
                    jtj[(i, j)] += wi * row[i] * row[j];
                }
            }
        }

        let mut stepped = false;
        for _ in 0..20 {
            let mut damped = jtj.clone();
            for i in 0..np {
                damped[(i, i)] += lambda * jtj[(i, i)].max(1e-12);
            }
            let Some(delta) = damped.lu().solve(&jtr) else {
                lambda *= 10.0;
                continue;
            };
            let mut trial: Vec<f64> = p.iter().zip(delta.iter()).map(|(a, d)| a + d).collect();
            clamp(&mut trial);
            let trial_ssr = ssr(xs, ys, w, &trial, model);
            if trial_ssr <= current_ssr {
                let rel_change = p
                    .iter()
                    .zip(&trial)
                    .map(|(a, b)| (a - b).abs() / a.abs().max(1e-12))
                    .fold(0.0, f64::max);
                p = trial;
                current_ssr = trial_ssr;
                lambda = (lambda / 10.0).max(1e-12);
                stepped = true;
                if rel_change < PARAM_TOL {
                    converged = true;
                }
                break;
            }
            lambda *= 10.0;
        }
        if converged || !stepped {
            converged = true;
            break;
        }
    }
    if !converged {
        return Err(Error::Fit(format!(
            "no convergence after {MAX_ITERS} iterations, residual norm {:.6e}",
            current_ssr.sqrt()
        )));
    }

    // Covariance at the solution.
    let mut jtj = DMatrix::<f64>::zeros(np, np);
    for (&x, &wi) in xs.iter().zip(w) {
        let row = jac(x, &p);
        for i in 0..np {
            for j in 0..np {
                jtj[(i, j)] += wi * row[i] * row[j];
            }
        }
    }
    let dof = (n as i64 - np as i64).max(1) as f64;
    let sigma2 = current_ssr / dof;
    let cov = match jtj.clone().try_inverse() {
        Some(inv) => inv * sigma2,
        None => DMatrix::from_element(np, np, f64::NAN),
    };
    Ok((p, cov, current_ssr.sqrt()))
}

/// Frequency seed from the dominant discrete-Fourier component of the
/// mean-subtracted signal. A sin²(bx) signal oscillates at 2b.
fn dft_frequency_seed(xs: &[f64], ys: &[f64]) -> f64 {
    let n = xs.len();
    let mean = ys.iter().sum::<f64>() / n as f64;
    let span = xs[n - 1] - xs[0];
    let mut best = (0.0f64, 1usize);
    for j in 1..=n / 2 {
        let omega = 2.0 * std::f64::consts::PI * j as f64 / span;
        let (mut re, mut im) = (0.0, 0.0);
        for (&x, &y) in xs.iter().zip(ys) {
            let ph = omega * (x - xs[0]);
            re += (y - mean) * ph.cos();
            im += (y - mean) * ph.sin();
        }
        let power = re * re + im * im;
        if power > best.0 {
            best = (power, j);
        }
    }
    std::f64::consts::PI * best.1 as f64 / span
}

/// Reduce (a, b, φ, c) to the canonical gauge b > 0, φ ∈ [−π/4, π/4),
/// transforming the covariance along. The model has the exact symmetries
/// b → −b with φ → −φ, φ → φ ± π (no change), and φ → φ − π/2 with
/// (a, c) → (−a, c + a).
fn canonicalize_sin2(p: &mut [f64; 4], cov: &mut DMatrix<f64>) {
    use std::f64::consts::{FRAC_PI_2, FRAC_PI_4, PI};
    let mut t = DMatrix::<f64>::identity(4, 4);
    if p[1] < 0.0 {
        p[1] = -p[1];
        p[2] = -p[2];
        t[(1, 1)] = -1.0;
        t[(2, 2)] = -1.0;
    }
    p[2] = p[2].rem_euclid(PI);
    if p[2] >= FRAC_PI_2 + FRAC_PI_4 {
        p[2] -= PI;
    }
    if p[2] >= FRAC_PI_4 {
        // a sin²(u + π/2) + c = −a sin²(u) + (a + c).
        p[2] -= FRAC_PI_2;
        let a = p[0];
        p[0] = -a;
        p[3] += a;
        let mut g = DMatrix::<f64>::identity(4, 4);
        g[(0, 0)] = -1.0;
        g[(3, 0)] = 1.0;
        t = g * t;
    }
    *cov = &t * cov.clone() * t.transpose();
}

/// Fit `y = a sin²(b x + φ) + c` by Levenberg-Marquardt with DFT frequency
/// seeding and both amplitude signs tried. Negative fitted amplitudes are
/// representable (and meaningful for biased Rabi signals).
pub fn fit_sin_squared(xs: &[f64], ys: &[f64], weights: Option<&[f64]>) -> Result<SinusoidFit> {
    if xs.len() != ys.len() || xs.len() < 8 {
        return Err(Error::Fit(format!(
            "need at least 8 matched points, got {} xs and {} ys",
            xs.len(),
            ys.len()
        )));
    }
    let w: Vec<f64> = match weights {
        Some(w) if w.len() == xs.len() => w.to_vec(),
        Some(_) => return Err(Error::Fit("weights length mismatch".into())),
        None => vec![1.0; xs.len()],
    };

    let model = |x: f64, p: &[f64]| p[0] * (p[1] * x + p[2]).sin().powi(2) + p[3];
    let jac = |x: f64, p: &[f64]| {
        let u = p[1] * x + p[2];
        let s2 = (2.0 * u).sin();
        vec![u.sin().powi(2), p[0] * s2 * x, p[0] * s2, 1.0]
    };
    let clamp = |_: &mut [f64]| {};

    let ymax = ys.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    let ymin = ys.iter().cloned().fold(f64::INFINITY, f64::min);
    let mean = ys.iter().sum::<f64>() / ys.len() as f64;
    let a0 = ymax - ymin;
    let b0 = dft_frequency_seed(xs, ys);

    let starts = [
        [a0, b0, 0.0, mean - a0 / 2.0],
        [-a0, b0, 0.0, mean + a0 / 2.0],
    ];
    let mut best: Option<(Vec<f64>, DMatrix<f64>, f64)> = None;
    for start in starts {
        if let Ok(res) = levenberg_marquardt(xs, ys, &w, &start, &model, &jac, &clamp) {
            if best.as_ref().map_or(true, |b| res.2 < b.2) {
                best = Some(res);
            }
        }
    }
    let (p, mut cov, residual_norm) =
        best.ok_or_else(|| Error::Fit("sin² fit failed from all starting points".into()))?;

    let mut params = [p[0], p[1], p[2], p[3]];
    canonicalize_sin2(&mut params, &mut cov);
    let std_errs = [
        cov[(0, 0)].max(0.0).sqrt(),
        cov[(1, 1)].max(0.0).sqrt(),
        cov[(2, 2)].max(0.0).sqrt(),
        cov[(3, 3)].max(0.0).sqrt(),
    ];
    Ok(SinusoidFit {
        a: params[0],
        b: params[1],
        phi: params[2],
        c: params[3],
        std_errs,
        covariance: matrix_rows(&cov),
        residual_norm,
    })
}

/// Fit two signals simultaneously with a shared frequency `b`:
/// `y_i = a_i sin²(b x + φ_i) + c_i`. Returns the two per-signal fits with
/// identical `b` and cross-consistent standard errors.
pub fn fit_sin_squared_shared(
    xs: &[f64],
    ys1: &[f64],
    ys2: &[f64],
    weights: Option<&[f64]>,
) -> Result<(SinusoidFit, SinusoidFit)> {
    if xs.len() != ys1.len() || xs.len() != ys2.len() || xs.len() < 8 {
        return Err(Error::Fit("need at least 8 matched points for both signals".into()));
    }
    let w_one: Vec<f64> = match weights {
        Some(w) if w.len() == xs.len() => w.to_vec(),
        Some(_) => return Err(Error::Fit("weights length mismatch".into())),
        None => vec![1.0; xs.len()],
    };
    // Stack: x < n uses signal 1 params, x ≥ n uses signal 2. Encode the
    // signal index in a shifted abscissa.
    let n = xs.len();
    let stacked_x: Vec<f64> = (0..2 * n).map(|i| i as f64).collect();
    let stacked_y: Vec<f64> = ys1.iter().chain(ys2).copied().collect();
    let stacked_w: Vec<f64> = w_one.iter().chain(&w_one).copied().collect();
    let xs_owned = xs.to_vec();

    // Params: [b, a1, φ1, c1, a2, φ2, c2].
    let model = {
        let xs = xs_owned.clone();
        move |ix: f64, p: &[f64]| {
            let i = ix as usize;
            let (x, off) = if i < xs.len() { (xs[i], 1) } else { (xs[i - xs.len()], 4) };
            p[off] * (p[0] * x + p[off + 1]).sin().powi(2) + p[off + 2]
        }
    };
    let jac = {
        let xs = xs_owned.clone();
        move |ix: f64, p: &[f64]| {
            let i = ix as usize;
            let (x, off) = if i < xs.len() { (xs[i], 1) } else { (xs[i - xs.len()], 4) };
            let u = p[0] * x + p[off + 1];
            let s2 = (2.0 * u).sin();
            let mut row = vec![0.0; 7];
            row[0] = p[off] * s2 * x;
            row[off] = u.sin().powi(2);
            row[off + 1] = p[off] * s2;
            row[off + 2] = 1.0;
            row
        }
    };
    let clamp = |_: &mut [f64]| {};

    let seed1 = fit_sin_squared(xs, ys1, weights)?;
    let seed2 = fit_sin_squared(xs, ys2, weights)?;
    let b0 = if seed1.a.abs() >= seed2.a.abs() { seed1.b } else { seed2.b };
    let start = [b0, seed1.a, seed1.phi, seed1.c, seed2.a, seed2.phi, seed2.c];
    let (p, cov, residual_norm) =
        levenberg_marquardt(&stacked_x, &stacked_y, &stacked_w, &start, &model, &jac, &clamp)?;

    let extract = |off: usize| -> SinusoidFit {
        // Sub-covariance in (a, b, φ, c) order.
        let order = [off, 0, off + 1, off + 2];
        let mut sub = DMatrix::zeros(4, 4);
        for (i, &oi) in order.iter().enumerate() {
            for (j, &oj) in order.iter().enumerate() {
                sub[(i, j)] = cov[(oi, oj)];
            }
        }
        let mut params = [p[off], p[0], p[off + 1], p[off + 2]];
        canonicalize_sin2(&mut params, &mut sub);
        SinusoidFit {
            a: params[0],
            b: params[1],
            phi: params[2],
            c: params[3],
            std_errs: [
                sub[(0, 0)].max(0.0).sqrt(),
                sub[(1, 1)].max(0.0).sqrt(),
                sub[(2, 2)].max(0.0).sqrt(),
                sub[(3, 3)].max(0.0).sqrt(),
            ],
            covariance: matrix_rows(&sub),
            residual_norm,
        }
    };
    Ok((extract(1), extract(4)))
}

/// Fit `y = A f^{2k}` with f constrained to (0, 1.05].
pub fn fit_decay(ks: &[f64], ys: &[f64], weights: Option<&[f64]>) -> Result<DecayFit> {
    if ks.len() != ys.len() || ks.len() < 3 {
        return Err(Error::Fit(format!("need at least 3 matched depths, got {}", ks.len())));
    }
    let mut sorted = ks.to_vec();
    sorted.sort_by(|a, b| a.partial_cmp(b).unwrap());
    sorted.dedup();
    if sorted.len() < 3 || sorted[0] != 0.0 {
        return Err(Error::Fit("need at least 3 distinct depths including k = 0".into()));
    }
    let spread = ys.iter().cloned().fold(f64::NEG_INFINITY, f64::max)
        - ys.iter().cloned().fold(f64::INFINITY, f64::min);
    if spread < 1e-15 {
        // A perfectly flat nonzero signal is the exact noiseless solution
        // f = 1; flat zero leaves f unidentifiable.
        if ys[0].abs() < 1e-15 {
            return Err(Error::Fit("degenerate decay fit: all observations zero".into()));
        }
        return Ok(DecayFit {
            a: ys[0],
            f: 1.0,
            std_errs: [0.0, 0.0],
            covariance: matrix_rows(&DMatrix::zeros(2, 2)),
            residual_norm: 0.0,
        });
    }
    let w: Vec<f64> = match weights {
        Some(w) if w.len() == ks.len() => w.to_vec(),
        Some(_) => return Err(Error::Fit("weights length mismatch".into())),
        None => vec![1.0; ks.len()],
    };

    let model = |k: f64, p: &[f64]| p[0] * p[1].powf(2.0 * k);
    let jac = |k: f64, p: &[f64]| {
        vec![p[1].powf(2.0 * k), p[0] * 2.0 * k * p[1].powf(2.0 * k - 1.0)]
    };
    let clamp = |p: &mut [f64]| {
        p[1] = p[1].clamp(1e-6, 1.05);
    };

    // Seed A from k = 0 and f from the endpoint ratio.
    let i0 = ks.iter().position(|&k| k == 0.0).unwrap();
    let a0 = ys[i0];
    let (imin, imax) = (0..ks.len()).fold((i0, i0), |(lo, hi), i| {
        (if ks[i] < ks[lo] { i } else { lo }, if ks[i] > ks[hi] { i } else { hi })
    });
    let ratio = ys[imax] / ys[imin];
    let f0 = if ratio > 0.0 && ks[imax] > ks[imin] {
        ratio.powf(1.0 / (2.0 * (ks[imax] - ks[imin]))).clamp(0.1, 1.05)
    } else {
        0.9
    };
    let (p, cov, residual_norm) =
        levenberg_marquardt(ks, ys, &w, &[a0, f0], &model, &jac, &clamp)?;
    Ok(DecayFit {
        a: p[0],
        f: p[1],
        std_errs: [cov[(0, 0)].max(0.0).sqrt(), cov[(1, 1)].max(0.0).sqrt()],
        covariance: matrix_rows(&cov),
        residual_norm,
    })
}

/// Standard error of the split-SPAM mitigated value
/// `raw · Π_i f_sp,i / zstar` by first-order (quadrature) propagation.
/// Each input is (value, standard error). With an empty `f_sp_list` this is
/// the TREX estimate `raw / zstar`.
pub fn propagate_mitigation_error(
    raw: (f64, f64),
    zstar: (f64, f64),
    f_sp_list: &[(f64, f64)],
) -> Result<f64> {
    if zstar.0 == 0.0 {
        return Err(Error::domain("zstar must be nonzero"));
    }
    let prod: f64 = f_sp_list.iter().map(|&(v, _)| v).product();
    let value = raw.0 * prod / zstar.0;
    let mut var = (prod / zstar.0 * raw.1).powi(2);
    var += (raw.0 * prod / (zstar.0 * zstar.0) * zstar.1).powi(2);
    for &(f, sf) in f_sp_list {
        if f == 0.0 {
            return Err(Error::domain("f_sp factor must be nonzero"));
        }
        var += (value / f * sf).powi(2);
    }
    Ok(var.sqrt())
}

fn matrix_rows(m: &DMatrix<f64>) -> Vec<Vec<f64>> {
    (0..m.nrows())
        .map(|i| (0..m.ncols()).map(|j| m[(i, j)]).collect())
        .collect()
}
