//! Gaussian-discrimination toy model: RabiEF with ideal gates on three
//! levels, where the measurement projects the level onto a Gaussian IQ
//! signal (|0⟩ → N(−1, σ_m), |1⟩/|2⟩ → N(+1, σ_m)) thresholded at zero.

use rand::distributions::Distribution;
use rand::Rng;
use statrs::distribution::{ContinuousCDF, Normal};

use crate::error::Error;
use crate::fit::fit_sin_squared;
use crate::Result;

use super::rabief::{estimate_psp, ideal_signals};

/// Readout fidelity of the Gaussian discriminator:
/// `F(σ_m) = 1 − Φ(−1/σ_m)`.
pub fn readout_fidelity(sigma_m: f64) -> Result<f64> {
    if sigma_m <= 0.0 {
        return Err(Error::domain(format!("sigma_m = {sigma_m} must be positive")));
    }
    let n = Normal::new(0.0, 1.0).expect("standard normal");
    Ok(1.0 - n.cdf(-1.0 / sigma_m))
}

/// Probability that the thresholded Gaussian reports "excited" for a state
/// with excited-state probability `p_excited` (levels |1⟩ and |2⟩ share the
/// +1 Gaussian).
fn click_probability(p_excited: f64, sigma_m: f64) -> Result<f64> {
    let fid = readout_fidelity(sigma_m)?;
    Ok(p_excited * fid + (1.0 - p_excited) * (1.0 - fid))
}

/// Expected no-π and π signals of the toy at angle θ for residual
/// population α (no |2⟩ population in the toy input).
pub fn gaussian_rabief_signals(theta: f64, alpha: f64, sigma_m: f64) -> Result<(f64, f64)> {
    let (nopi, pi) = ideal_signals(theta, (1.0 - alpha, alpha, 0.0));
    Ok((click_probability(nopi, sigma_m)?, click_probability(pi, sigma_m)?))
}

/// Full toy experiment: sample `shots` Gaussian-thresholded counts per
/// angle per circuit, fit both sin² signals, and return the estimate with
/// its propagated standard error.
pub fn gaussian_discrimination_rabief<R: Rng>(
    alpha: f64,
    sigma_m: f64,
    shots: usize,
    rng: &mut R,
) -> Result<(f64, f64)> {
    if !(0.0..=1.0).contains(&alpha) {
        return Err(Error::domain(format!("alpha = {alpha} outside [0, 1]")));
    }
    if shots == 0 {
        return Err(Error::domain("shots must be at least 1"));
    }
    let normal = Normal::new(0.0, sigma_m)
        .map_err(|e| Error::domain(format!("invalid sigma_m: {e}")))?;
    let angles = super::default_angles();
    let mut s_nopi = Vec::with_capacity(angles.len());
    let mut s_pi = Vec::with_capacity(angles.len());
    for &theta in &angles {
        let (p_nopi, p_pi) = ideal_signals(theta, (1.0 - alpha, alpha, 0.0));
        for (p_excited, sink) in [(p_nopi, &mut s_nopi), (p_pi, &mut s_pi)] {
            let mut clicks = 0usize;
            for _ in 0..shots {
                let mu = if rng.gen::<f64>() < p_excited { 1.0 } else { -1.0 };
                if mu + normal.sample(rng) > 0.0 {
                    clicks += 1;
                }
            }
            sink.push(clicks as f64 / shots as f64);
        }
    }
    let fit_nopi = fit_sin_squared(&angles, &s_nopi, None)?;
    let fit_pi = fit_sin_squared(&angles, &s_pi, None)?;
    estimate_psp(&fit_nopi, &fit_pi)
}
