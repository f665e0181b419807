//! Turning fitted MCB decays into the four SPAM fidelities, the two-path
//! learning workflow, assignment-matrix conversions, and error
//! amplification.

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::Error;
use crate::experiments::{
    mcb_exact, mcb_expectations, run_mcb_sampled, run_rabief, run_rabief_exact, summarize_rabief,
    McbConfig, McbData, RabiefConfig, RabiefSummary, ResetMode,
};
use crate::fit::{fit_decay, DecayFit};
use crate::ptm::NoiseFidelities;
use crate::sim::DeviceParams;
use crate::Result;

/// Standard errors of the learned fidelities.
#[derive(Debug, Clone, Serialize, Deserialize, Default)]
pub struct ModelStdErrs {
    pub f_a: f64,
    pub f_s: f64,
    pub f_c: f64,
    pub f_sp_slow: Option<f64>,
    pub f_sp_fast: Option<f64>,
}

/// The learned SPAM noise model. Fidelities slightly above 1 from shot
/// noise are retained but flagged; clipping would bias downstream PEC.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct LearnedModel {
    pub f_a: f64,
    pub f_s: f64,
    pub f_c: f64,
    pub f_sp_slow: Option<f64>,
    pub f_sp_fast: Option<f64>,
    pub std_errs: ModelStdErrs,
    /// Which workflow path produced the model.
    pub path: String,
    pub seed: u64,
    pub timestamp: String,
    /// Soft warnings: fidelities above 1, inconsistent ⟨ZZ⟩ rate, etc.
    pub flags: Vec<String>,
}

impl LearnedModel {
    pub fn validate(&self) -> Result<()> {
        let mut all = vec![("f_a", self.f_a), ("f_s", self.f_s), ("f_c", self.f_c)];
        if let Some(f) = self.f_sp_slow {
            all.push(("f_sp_slow", f));
        }
        if let Some(f) = self.f_sp_fast {
            all.push(("f_sp_fast", f));
        }
        for (name, f) in all {
            if !(f > 0.0 && f <= 1.05) {
                return Err(Error::ModelViolation(format!("{name} = {f} outside (0, 1.05]")));
            }
        }
        Ok(())
    }

    /// The state-preparation fidelity to use for mitigation, preferring the
    /// reset mode actually deployed (fast when available).
    pub fn f_sp(&self) -> Result<f64> {
        self.f_sp_fast
            .or(self.f_sp_slow)
            .ok_or_else(|| Error::ModelViolation("model carries no f_sp".into()))
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("model serializes")
    }

    pub fn from_json(s: &str) -> Result<Self> {
        serde_json::from_str(s).map_err(|e| Error::Config(format!("invalid model JSON: {e}")))
    }
}

fn flag_excursions(model: &mut LearnedModel) {
    let mut checks = vec![("f_a", model.f_a), ("f_s", model.f_s), ("f_c", model.f_c)];
    if let Some(f) = model.f_sp_slow {
        checks.push(("f_sp_slow", f));
    }
    if let Some(f) = model.f_sp_fast {
        checks.push(("f_sp_fast", f));
    }
    for (name, f) in checks {
        if f > 1.0 {
            model.flags.push(format!("{name} = {f:.6} exceeds 1 (shot-noise excursion)"));
        }
    }
}

/// Invert the MCB decays into the noise fidelities.
///
/// With decay bases `f_IZ = f_a √(f_c f_s)` and `f_ZI = f_c f_s` and the
/// ⟨ZI⟩ offset `A = f_a f_s f_sp`:
/// `f_c f_s = f_ZI`, `f_a = f_IZ / √f_ZI`, `f_sp = 1 − 2 p̂_sp`,
/// `f_s = A / (f_a f_sp)`, `f_c = f_ZI / f_s`.
/// Standard errors propagate to first order through this chain, keeping
/// the (A, f) covariance of the ⟨ZI⟩ fit and treating fits as mutually
/// independent.
pub fn extract_fidelities(
    fit_iz: &DecayFit,
    fit_zi: &DecayFit,
    fit_zz: &DecayFit,
    p_sp_hat: (f64, f64),
) -> Result<LearnedModel> {
    let q = fit_iz.f; // f_a √(f_c f_s)
    let r = fit_zi.f; // f_c f_s
    let a = fit_zi.a; // f_a f_s f_sp
    let (p, sp) = p_sp_hat;
    if r <= 0.0 || q <= 0.0 {
        return Err(Error::ModelViolation(format!("non-positive decay bases ({q}, {r})")));
    }
    let f_sp = 1.0 - 2.0 * p;
    if f_sp <= 0.0 {
        return Err(Error::ModelViolation(format!("p̂_sp = {p} implies non-positive f_sp")));
    }
    let f_a = q / r.sqrt();
    let f_s = a / (f_a * f_sp);
    if f_s <= 0.0 {
        return Err(Error::ModelViolation(format!("extracted f_s = {f_s} not positive")));
    }
    let f_c = r / f_s;

    // Variance by quadrature over (A, r) [correlated within the ⟨ZI⟩ fit],
    // q and p.
    let var_q = fit_iz.std_errs[1].powi(2);
    let var_p = sp * sp;
    let cov_zi = &fit_zi.covariance; // (A, f) order
    let quad = |d_a: f64, d_r: f64, d_q: f64, d_p: f64| -> f64 {
        let mut v = d_q * d_q * var_q + d_p * d_p * var_p;
        v += d_a * d_a * cov_zi[0][0] + d_r * d_r * cov_zi[1][1];
        v += 2.0 * d_a * d_r * cov_zi[0][1];
        v.max(0.0).sqrt()
    };

    let rs = r.sqrt();
    let sig_fa = quad(0.0, -q / (2.0 * r * rs), 1.0 / rs, 0.0);
    // f_s = A √r / (q f_sp).
    let sig_fs = quad(
        rs / (q * f_sp),
        a / (2.0 * rs * q * f_sp),
        -a * rs / (q * q * f_sp),
        2.0 * a * rs / (q * f_sp * f_sp),
    );
    // f_c = q f_sp √r / A.
    let sig_fc = quad(
        -q * f_sp * rs / (a * a),
        q * f_sp / (2.0 * rs * a),
        f_sp * rs / a,
        -2.0 * q * rs / a,
    );

    let mut model = LearnedModel {
        f_a,
        f_s,
        f_c,
        f_sp_slow: Some(f_sp),
        f_sp_fast: None,
        std_errs: ModelStdErrs {
            f_a: sig_fa,
            f_s: sig_fs,
            f_c: sig_fc,
            f_sp_slow: Some(2.0 * sp),
            f_sp_fast: None,
        },
        path: String::new(),
        seed: 0,
        timestamp: String::new(),
        flags: Vec::new(),
    };

    // Consistency: the ⟨ZZ⟩ decay base must match ⟨IZ⟩'s.
    let combined =
        (fit_zz.std_errs[1].powi(2) + fit_iz.std_errs[1].powi(2)).sqrt().max(1e-12);
    if (fit_zz.f - fit_iz.f).abs() > 5.0 * combined {
        model.flags.push(format!(
            "ZZ decay base {:.6} deviates from IZ base {:.6} by more than 5 sigma",
            fit_zz.f, fit_iz.f
        ));
    }
    flag_excursions(&mut model);
    Ok(model)
}

/// Split the ⟨ZI⟩ offset of a fast-reset MCB by the measurement fidelities
/// already learned: `f_sp_fast = A_fast / (f_a f_s)`.
pub fn learn_fast_psp(fit_zi_offset: (f64, f64), model: &LearnedModel) -> Result<(f64, f64)> {
    let fam = model.f_a * model.f_s;
    if fam.abs() < 1e-12 {
        return Err(Error::ModelViolation("f_a·f_s vanishes".into()));
    }
    let (a, sa) = fit_zi_offset;
    let f = a / fam;
    let var = (sa / fam).powi(2)
        + (a * model.std_errs.f_a / (model.f_a * fam)).powi(2)
        + (a * model.std_errs.f_s / (model.f_s * fam)).powi(2);
    Ok((f, var.sqrt()))
}

/// The symmetric binary assignment matrix implied by the fidelity product:
/// `p_00 = p_11 = (1 + f_a f_s)/2`.
pub fn fidelities_to_qubit_assignment(f_a: f64, f_s: f64) -> Result<[[f64; 2]; 2]> {
    for (name, f) in [("f_a", f_a), ("f_s", f_s)] {
        if !(f > 0.0 && f <= 1.0) {
            return Err(Error::domain(format!("{name} = {f} outside (0, 1]")));
        }
    }
    let diag = (1.0 + f_a * f_s) / 2.0;
    let off = (1.0 - f_a * f_s) / 2.0;
    Ok([[diag, off], [off, diag]])
}

/// The inverse direction recovers only the product f_a·f_s — the
/// correlated fidelity is invisible to terminating measurements.
pub fn qubit_assignment_to_product(m: &[[f64; 2]; 2]) -> f64 {
    m[0][0] + m[1][1] - 1.0
}

/// Collapse a qutrit assignment matrix to binary discrimination:
/// `p_1k = q_1k + q_2k`.
pub fn qutrit_to_qubit_assignment(r: &[[f64; 3]; 3]) -> Result<[[f64; 2]; 2]> {
    for k in 0..3 {
        let col: f64 = (0..3).map(|j| r[j][k]).sum();
        if (col - 1.0).abs() > 1e-12 {
            return Err(Error::domain(format!("column {k} of R sums to {col}")));
        }
    }
    Ok([[r[0][0], r[0][1]], [r[1][0] + r[2][0], r[1][1] + r[2][1]]])
}

/// Effective state-preparation error after post-processing relabeling with
/// probability `p_amp`: `p̃ = p_amp + p_sp (1 − 2 p_amp)`.
pub fn amplify_psp(p_sp: f64, p_amp: f64) -> Result<f64> {
    check_amp(p_sp, p_amp)?;
    Ok(p_amp + p_sp * (1.0 - 2.0 * p_amp))
}

/// Inverse of [`amplify_psp`].
pub fn deamplify_psp(p_tilde: f64, p_amp: f64) -> Result<f64> {
    check_amp(p_tilde, p_amp)?;
    Ok((p_tilde - p_amp) / (1.0 - 2.0 * p_amp))
}

fn check_amp(p: f64, p_amp: f64) -> Result<()> {
    if !(0.0..0.5).contains(&p_amp) {
        return Err(Error::domain(format!("p_amp = {p_amp} outside [0, 0.5)")));
    }
    if !(0.0..=1.0).contains(&p) {
        return Err(Error::domain(format!("probability {p} outside [0, 1]")));
    }
    Ok(())
}

/// Settings for the learning workflow beyond the device parameters.
#[derive(Debug, Clone)]
pub struct WorkflowSettings {
    /// Correlated-flip fidelity of the simulated device (not identifiable
    /// from the assignment matrix alone).
    pub f_c_true: f64,
    /// True |1⟩ population after fast active resets.
    pub p_sp_fast_true: f64,
    pub mcb: McbConfig,
    pub rabief_shots: usize,
    /// Skip sampling: exact expectations everywhere.
    pub exact: bool,
}

impl Default for WorkflowSettings {
    fn default() -> Self {
        WorkflowSettings {
            f_c_true: 0.995,
            p_sp_fast_true: 0.01206,
            mcb: McbConfig::default(),
            rabief_shots: 1000,
            exact: false,
        }
    }
}

/// Truth fidelities of the simulated device for a given reset mode:
/// `f_a f_s` from the assignment matrix (split evenly), f_c from settings,
/// f_sp from the reset mode's residual population.
pub fn true_fidelities(
    params: &DeviceParams,
    settings: &WorkflowSettings,
    slow: bool,
) -> Result<NoiseFidelities> {
    let qubit = qutrit_to_qubit_assignment(&params.r)?;
    let fam = qubit_assignment_to_product(&qubit);
    if fam <= 0.0 {
        return Err(Error::ModelViolation(format!("assignment product {fam} not positive")));
    }
    let f_half = fam.sqrt();
    let p_sp = if slow { params.equilibrium_p1(3) } else { settings.p_sp_fast_true };
    NoiseFidelities::new(f_half, f_half, settings.f_c_true, 1.0 - 2.0 * p_sp)
}

/// Fits of one MCB dataset.
#[derive(Debug, Clone, Serialize)]
pub struct McbFits {
    pub iz: DecayFit,
    pub zi: DecayFit,
    pub zz: DecayFit,
}

fn fit_mcb(data: &McbData) -> Result<McbFits> {
    let ks = data.ks();
    let fit_one = |series: Vec<(f64, f64)>| -> Result<DecayFit> {
        let ys: Vec<f64> = series.iter().map(|&(m, _)| m).collect();
        let ws: Vec<f64> = series.iter().map(|&(_, s)| 1.0 / (s * s + 1e-10)).collect();
        fit_decay(&ks, &ys, Some(&ws))
    };
    Ok(McbFits {
        iz: fit_one(data.series("iz"))?,
        zi: fit_one(data.series("zi"))?,
        zz: fit_one(data.series("zz"))?,
    })
}

fn mcb_dataset<R: Rng>(
    truth: &NoiseFidelities,
    settings: &WorkflowSettings,
    rng: &mut R,
) -> Result<McbData> {
    if settings.exact {
        let rows = mcb_exact(truth, &settings.mcb.depths)?;
        Ok(McbData {
            depths: rows
                .into_iter()
                .map(|(k, iz, zi, zz)| crate::experiments::DepthExpectations {
                    depth: k,
                    iz: (iz, 0.0),
                    zi: (zi, 0.0),
                    zz: (zz, 0.0),
                })
                .collect(),
        })
    } else {
        let records = run_mcb_sampled(truth, &settings.mcb, rng)?;
        mcb_expectations(&records)
    }
}

/// Everything the workflow produced, including intermediate fits.
#[derive(Debug, Clone, Serialize)]
pub struct WorkflowResult {
    pub model: LearnedModel,
    pub rabief: RabiefSummary,
    pub mcb_primary: McbFits,
    pub mcb_fast: Option<McbFits>,
}

/// Run the learning workflow.
///
/// With a stable fast qutrit reset (the "blue" path): RabiEF with fast
/// qutrit resets, then one fast-reset MCB. Without it (the "purple" path):
/// RabiEF with slow resets, a slow-reset MCB, and a second fast-reset MCB
/// whose offset yields `f_sp_fast` under the constant-measurement-noise
/// assumption.
pub fn run_workflow<R: Rng>(
    has_qutrit_fast_reset: bool,
    params: &DeviceParams,
    settings: &WorkflowSettings,
    seed: u64,
    rng: &mut R,
) -> Result<WorkflowResult> {
    params.validate()?;
    let slow = !has_qutrit_fast_reset;
    let reset_mode = if slow { ResetMode::SlowQutrit } else { ResetMode::FastQutrit };

    let mut rabief_cfg = RabiefConfig::new(reset_mode);
    rabief_cfg.shots = settings.rabief_shots;
    let rabief_data = if settings.exact {
        run_rabief_exact(&rabief_cfg, params)?
    } else {
        run_rabief(&rabief_cfg, params, rng)?
    };
    let rabief = summarize_rabief(&rabief_data)?;

    let truth = true_fidelities(params, settings, slow)?;
    let primary_data = mcb_dataset(&truth, settings, rng)?;
    let mcb_primary = fit_mcb(&primary_data)?;
    let mut model = extract_fidelities(
        &mcb_primary.iz,
        &mcb_primary.zi,
        &mcb_primary.zz,
        (rabief.p_sp_hat, rabief.p_sp_sigma),
    )?;

    let mcb_fast = if slow {
        // Purple path: the extracted f_sp belongs to the slow reset; add a
        // fast-reset MCB for f_sp_fast.
        let fast_truth = true_fidelities(params, settings, false)?;
        let fast_data = mcb_dataset(&fast_truth, settings, rng)?;
        let fits = fit_mcb(&fast_data)?;
        let (f_fast, sig_fast) = learn_fast_psp((fits.zi.a, fits.zi.std_errs[0]), &model)?;
        model.f_sp_fast = Some(f_fast);
        model.std_errs.f_sp_fast = Some(sig_fast);
        model.path = "purple".into();
        Some(fits)
    } else {
        // Blue path: the extracted f_sp is already the fast one.
        model.f_sp_fast = model.f_sp_slow.take();
        model.std_errs.f_sp_fast = model.std_errs.f_sp_slow.take();
        model.path = "blue".into();
        None
    };
    model.seed = seed;
    model.timestamp = chrono::Utc::now().to_rfc3339();
    flag_excursions(&mut model);
    Ok(WorkflowResult { model, rabief, mcb_primary, mcb_fast })
}
