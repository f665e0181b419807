//! RabiEF: estimating the residual excited-state population from the
//! amplitude ratio of |1⟩↔|2⟩ Rabi oscillations with and without a leading
//! π pulse.

use rand::Rng;
use serde::Serialize;

use crate::error::Error;
use crate::fit::{fit_sin_squared, SinusoidFit};
use crate::linalg::{cr, dagger, CMatrix};
use crate::sim::{
    gates, lindblad_channel, measurement_channel, Circuit, DeviceParams, Executor,
    MeasureMode, SuperOp,
};
use crate::Result;

/// Extra passive thermalization added to "slow" repetition delays.
const SLOW_RESET_DELAY: f64 = 10e-3;

/// How the qubit is reset between shots.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum ResetMode {
    FastQubit,
    FastQutrit,
    SlowQubit,
    SlowQutrit,
}

impl ResetMode {
    pub fn is_slow(self) -> bool {
        matches!(self, ResetMode::SlowQubit | ResetMode::SlowQutrit)
    }

    pub fn is_qutrit(self) -> bool {
        matches!(self, ResetMode::FastQutrit | ResetMode::SlowQutrit)
    }

    pub fn all() -> [ResetMode; 4] {
        [ResetMode::FastQubit, ResetMode::FastQutrit, ResetMode::SlowQubit, ResetMode::SlowQutrit]
    }

    pub fn name(self) -> &'static str {
        match self {
            ResetMode::FastQubit => "fast_qubit",
            ResetMode::FastQutrit => "fast_qutrit",
            ResetMode::SlowQubit => "slow_qubit",
            ResetMode::SlowQutrit => "slow_qutrit",
        }
    }
}

/// RabiEF run configuration.
#[derive(Debug, Clone)]
pub struct RabiefConfig {
    /// Rotation angles, strictly increasing, in [0, 4π].
    pub angles: Vec<f64>,
    /// Shots per angle per circuit.
    pub shots: usize,
    pub reset_mode: ResetMode,
}

impl RabiefConfig {
    pub fn new(reset_mode: ResetMode) -> Self {
        RabiefConfig { angles: super::default_angles(), shots: 1000, reset_mode }
    }

    pub fn validate(&self) -> Result<()> {
        if self.shots == 0 {
            return Err(Error::domain("shots must be at least 1"));
        }
        if self.angles.len() < 2 || self.angles.windows(2).any(|w| w[1] <= w[0]) {
            return Err(Error::domain("angles must be strictly increasing"));
        }
        Ok(())
    }
}

/// The feedforward correction for a given recorded label: X on label 1;
/// X₁₂ followed by X on label 2.
fn correction(label: u8) -> CMatrix {
    match label {
        1 => gates::x_qutrit(),
        2 => gates::x_qutrit() * gates::x12(),
        _ => gates::identity(3),
    }
}

/// One active reset: measurement channel, label sampling (qutrit or binary
/// discrimination per the reset mode), feedforward on the recorded label.
/// The label average is taken in closed form — the reset acts as the
/// deterministic channel `Σ √q(l|o)·U_l·P_o` — so only the payload
/// measurements of the chain are sampled, matching the non-selective
/// bookkeeping of the input-state populations.
fn push_active_reset(circuit: Circuit, params: &DeviceParams, mode: ResetMode) -> Result<Circuit> {
    Ok(circuit.channel(reset_superop(params, mode)?, &[0]))
}

/// The repetition-delay circuit: three active resets spaced evenly within
/// the repetition delay, plus the long passive delay for slow modes.
pub fn repetition_circuit(params: &DeviceParams, mode: ResetMode) -> Result<Circuit> {
    let gap = (params.t_rep_delay - 3.0 * params.t_meas) / 4.0;
    if gap <= 0.0 {
        return Err(Error::domain("repetition delay shorter than three measurements"));
    }
    let mut c = Circuit::new().delay(gap, &[0]);
    for _ in 0..3 {
        c = push_active_reset(c, params, mode)?;
        c = c.delay(gap, &[0]);
    }
    if mode.is_slow() {
        c = c.delay(SLOW_RESET_DELAY, &[0]);
    }
    Ok(c)
}

/// The RabiEF payload at angle θ: `R₁₂(θ), X` (no-π) or `X, R₁₂(θ), X` (π),
/// followed by a binary-discrimination measurement.
fn payload_circuit(theta: f64, with_pi: bool, params: &DeviceParams) -> Result<Circuit> {
    let mut c = Circuit::new();
    if with_pi {
        c = c.unitary(gates::x_qutrit(), &[0]);
    }
    c = c.unitary(gates::r12(theta), &[0]).unitary(gates::x_qutrit(), &[0]);
    Ok(c.channel(measurement_channel(params)?, &[0]).measure(0, MeasureMode::Qubit, true))
}

/// Build the per-angle payload circuit pairs and the repetition circuit.
pub fn build_rabief_circuits(
    cfg: &RabiefConfig,
    params: &DeviceParams,
) -> Result<(Vec<Circuit>, Vec<Circuit>, Circuit)> {
    cfg.validate()?;
    let rep = repetition_circuit(params, cfg.reset_mode)?;
    let mut no_pi = Vec::with_capacity(cfg.angles.len());
    let mut pi = Vec::with_capacity(cfg.angles.len());
    for &theta in &cfg.angles {
        no_pi.push(payload_circuit(theta, false, params)?);
        pi.push(payload_circuit(theta, true, params)?);
    }
    Ok((no_pi, pi, rep))
}

/// Raw RabiEF data for one reset mode.
#[derive(Debug, Clone, Serialize)]
pub struct RabiefData {
    pub reset_mode: ResetMode,
    pub angles: Vec<f64>,
    /// Fraction of label-1 outcomes per angle, no-π circuit.
    pub s_nopi: Vec<f64>,
    /// Fraction of label-1 outcomes per angle, π circuit.
    pub s_pi: Vec<f64>,
    /// Per-angle recorded shots (empty in exact mode).
    pub shots_nopi: Vec<Vec<u8>>,
    pub shots_pi: Vec<Vec<u8>>,
    /// Populations of the state entering every payload circuit.
    pub input_pops: Vec<(f64, f64, f64)>,
}

impl RabiefData {
    pub fn input_p1_mean(&self) -> f64 {
        self.input_pops.iter().map(|p| p.1).sum::<f64>() / self.input_pops.len() as f64
    }

    pub fn input_p1_std(&self) -> f64 {
        let m = self.input_p1_mean();
        let n = self.input_pops.len() as f64;
        (self.input_pops.iter().map(|p| (p.1 - m).powi(2)).sum::<f64>() / (n - 1.0)).sqrt()
    }

    pub fn input_p2_mean(&self) -> f64 {
        self.input_pops.iter().map(|p| p.2).sum::<f64>() / self.input_pops.len() as f64
    }

    fn recompute_signals(&mut self) {
        if self.shots_nopi.is_empty() {
            return;
        }
        let frac = |shots: &[u8]| {
            shots.iter().filter(|&&s| s == 1).count() as f64 / shots.len() as f64
        };
        self.s_nopi = self.shots_nopi.iter().map(|s| frac(s)).collect();
        self.s_pi = self.shots_pi.iter().map(|s| frac(s)).collect();
    }
}

/// Run the sampled RabiEF chain: per angle, N repetitions of the
/// (reset, no-π, reset, π) loop with full state carryover — including
/// across angles.
pub fn run_rabief<R: Rng>(
    cfg: &RabiefConfig,
    params: &DeviceParams,
    rng: &mut R,
) -> Result<RabiefData> {
    let (no_pi, pi, rep) = build_rabief_circuits(cfg, params)?;
    let mut exec = Executor::new(params.clone(), &[3])?;
    let mut data = RabiefData {
        reset_mode: cfg.reset_mode,
        angles: cfg.angles.clone(),
        s_nopi: Vec::new(),
        s_pi: Vec::new(),
        shots_nopi: Vec::new(),
        shots_pi: Vec::new(),
        input_pops: Vec::new(),
    };
    for (c_nopi, c_pi) in no_pi.iter().zip(&pi) {
        let mut shots_n = Vec::with_capacity(cfg.shots);
        let mut shots_p = Vec::with_capacity(cfg.shots);
        for _ in 0..cfg.shots {
            for (payload, sink) in [(c_nopi, &mut shots_n), (c_pi, &mut shots_p)] {
                exec.run_circuit(&rep, rng)?;
                let pops = exec.state().populations(0)?;
                data.input_pops.push((pops[0], pops[1], pops[2]));
                let out = exec.run_circuit(payload, rng)?;
                sink.push(out[0]);
            }
        }
        data.shots_nopi.push(shots_n);
        data.shots_pi.push(shots_p);
    }
    data.recompute_signals();
    Ok(data)
}

/// The reset step as a deterministic channel: non-selective measurement
/// followed by the label-conditioned correction, with labels drawn from the
/// assignment matrix. Kraus operators are `√q(l|o) · U_l · P_o`.
fn reset_superop(params: &DeviceParams, mode: ResetMode) -> Result<SuperOp> {
    let mut kraus = Vec::new();
    let labels: &[u8] = if mode.is_qutrit() { &[0, 1, 2] } else { &[0, 1] };
    for o in 0..3 {
        let mut proj = CMatrix::zeros(3, 3);
        proj[(o, o)] = cr(1.0);
        for &l in labels {
            let q = if mode.is_qutrit() {
                params.qutrit_label_prob(l as usize, o)
            } else {
                params.qubit_label_prob(l as usize, o)
            };
            if q > 0.0 {
                kraus.push(correction(l) * &proj * cr(q.sqrt()));
            }
        }
    }
    SuperOp::from_kraus(&kraus)?.compose(&measurement_channel(params)?)
}

/// Non-selective projective collapse onto the energy basis.
fn collapse_superop() -> SuperOp {
    let mut kraus = Vec::new();
    for o in 0..3 {
        let mut proj = CMatrix::zeros(3, 3);
        proj[(o, o)] = cr(1.0);
        kraus.push(proj);
    }
    SuperOp::from_kraus(&kraus).expect("projectors are valid Kraus operators")
}

/// Repetition delay as one composed channel.
fn repetition_superop(params: &DeviceParams, mode: ResetMode) -> Result<SuperOp> {
    let gap = (params.t_rep_delay - 3.0 * params.t_meas) / 4.0;
    let idle = lindblad_channel(params, gap, 3)?;
    let reset = reset_superop(params, mode)?;
    let mut sop = idle.clone();
    for _ in 0..3 {
        sop = idle.compose(&reset.compose(&sop)?)?;
    }
    if mode.is_slow() {
        sop = lindblad_channel(params, SLOW_RESET_DELAY, 3)?.compose(&sop)?;
    }
    Ok(sop)
}

/// Exact (noise-free-statistics) RabiEF: the steady state of the shot loop
/// is found by power iteration of the per-angle cycle channel, then the
/// signals are read off as exact label probabilities.
pub fn run_rabief_exact(cfg: &RabiefConfig, params: &DeviceParams) -> Result<RabiefData> {
    cfg.validate()?;
    let rep = repetition_superop(params, cfg.reset_mode)?;
    let meas = measurement_channel(params)?;
    let collapse = collapse_superop();

    let mut data = RabiefData {
        reset_mode: cfg.reset_mode,
        angles: cfg.angles.clone(),
        s_nopi: Vec::new(),
        s_pi: Vec::new(),
        shots_nopi: Vec::new(),
        shots_pi: Vec::new(),
        input_pops: Vec::new(),
    };

    let eq = params.equilibrium_populations(3);
    let mut eq_rho = CMatrix::zeros(3, 3);
    for i in 0..3 {
        eq_rho[(i, i)] = cr(eq[i]);
    }

    let conj_super = |u: &CMatrix| SuperOp::from_unitary(u).expect("unitary");
    let label1_prob = |rho: &CMatrix| -> f64 {
        (0..3).map(|k| rho[(k, k)].re * params.qubit_label_prob(1, k)).sum()
    };

    for &theta in &cfg.angles {
        let u_nopi = gates::x_qutrit() * gates::r12(theta);
        let u_pi = gates::x_qutrit() * gates::r12(theta) * gates::x_qutrit();
        // Full cycle: rep → no-π payload (collapsed) → rep → π payload.
        let half_nopi = collapse
            .compose(&meas)?
            .compose(&conj_super(&u_nopi))?
            .compose(&rep)?;
        let half_pi = collapse
            .compose(&meas)?
            .compose(&conj_super(&u_pi))?
            .compose(&rep)?;
        let cycle = half_pi.compose(&half_nopi)?;

        // Steady state by repeated squaring of the cycle channel.
        let mut pow = cycle.clone();
        for _ in 0..10 {
            pow = pow.compose(&pow)?;
        }
        let steady = pow.apply(&eq_rho)?;

        let in_nopi = rep.apply(&steady)?;
        data.input_pops.push((in_nopi[(0, 0)].re, in_nopi[(1, 1)].re, in_nopi[(2, 2)].re));
        let after_nopi = meas.apply(&(&u_nopi * &in_nopi * dagger(&u_nopi)))?;
        data.s_nopi.push(label1_prob(&after_nopi));

        let in_pi = rep.apply(&collapse.apply(&after_nopi)?)?;
        data.input_pops.push((in_pi[(0, 0)].re, in_pi[(1, 1)].re, in_pi[(2, 2)].re));
        let after_pi = meas.apply(&(&u_pi * &in_pi * dagger(&u_pi)))?;
        data.s_pi.push(label1_prob(&after_pi));
    }
    Ok(data)
}

/// Residual-population estimate `α̂ = a_nopi / (a_nopi + a_pi)` with
/// first-order error propagation of the two amplitude standard errors.
pub fn estimate_psp(no_pi_fit: &SinusoidFit, pi_fit: &SinusoidFit) -> Result<(f64, f64)> {
    let denom = no_pi_fit.a + pi_fit.a;
    if denom == 0.0 {
        return Err(Error::Fit("degenerate estimate: amplitudes sum to zero".into()));
    }
    let alpha = no_pi_fit.a / denom;
    let d_nopi = pi_fit.a / (denom * denom);
    let d_pi = -no_pi_fit.a / (denom * denom);
    let sigma =
        ((d_nopi * no_pi_fit.std_errs[0]).powi(2) + (d_pi * pi_fit.std_errs[0]).powi(2)).sqrt();
    Ok((alpha, sigma))
}

/// The closed-form bias of the amplitude-ratio estimator for a static input
/// state with |1⟩ population `p_sp` and |2⟩ population `p_sp2`:
/// `p̂_sp = (p_sp − p_sp²⁾) / (1 − 3 p_sp⁽²⁾)`.
pub fn rabief_bias(p_sp: f64, p_sp2: f64) -> Result<f64> {
    if !(0.0..=1.0).contains(&p_sp) || !(0.0..=1.0).contains(&p_sp2) || p_sp + p_sp2 > 1.0 {
        return Err(Error::domain(format!("invalid populations ({p_sp}, {p_sp2})")));
    }
    let denom = 1.0 - 3.0 * p_sp2;
    if denom <= 0.0 {
        return Err(Error::domain(format!("bias denominator 1 − 3·{p_sp2} not positive")));
    }
    Ok((p_sp - p_sp2) / denom)
}

/// Relabel each shot's no-π/π pair with probability `p_amp`, amplifying the
/// effective state-preparation error (post-processing only). In exact mode
/// the signals mix deterministically.
pub fn relabel_shots<R: Rng>(data: &mut RabiefData, p_amp: f64, rng: &mut R) -> Result<()> {
    if !(0.0..0.5).contains(&p_amp) {
        return Err(Error::domain(format!("p_amp = {p_amp} outside [0, 0.5)")));
    }
    if data.shots_nopi.is_empty() {
        for i in 0..data.s_nopi.len() {
            let (sn, sp) = (data.s_nopi[i], data.s_pi[i]);
            data.s_nopi[i] = (1.0 - p_amp) * sn + p_amp * sp;
            data.s_pi[i] = (1.0 - p_amp) * sp + p_amp * sn;
        }
        return Ok(());
    }
    for (sn, sp) in data.shots_nopi.iter_mut().zip(&mut data.shots_pi) {
        for (a, b) in sn.iter_mut().zip(sp.iter_mut()) {
            if rng.gen::<f64>() < p_amp {
                std::mem::swap(a, b);
            }
        }
    }
    data.recompute_signals();
    Ok(())
}

/// Fits and the final estimate for one RabiEF dataset.
#[derive(Debug, Clone, Serialize)]
pub struct RabiefSummary {
    pub reset_mode: ResetMode,
    pub fit_nopi: SinusoidFit,
    pub fit_pi: SinusoidFit,
    pub p_sp_hat: f64,
    pub p_sp_sigma: f64,
    /// The estimate is unphysical (outside [0, 1]), e.g. from a negative
    /// no-π amplitude.
    pub unphysical: bool,
    pub input_p1_mean: f64,
    pub input_p1_std: f64,
    pub input_p2_mean: f64,
}

/// Fit both signals and form the amplitude-ratio estimate.
pub fn summarize_rabief(data: &RabiefData) -> Result<RabiefSummary> {
    let fit_nopi = fit_sin_squared(&data.angles, &data.s_nopi, None)?;
    let fit_pi = fit_sin_squared(&data.angles, &data.s_pi, None)?;
    let (p_sp_hat, p_sp_sigma) = estimate_psp(&fit_nopi, &fit_pi)?;
    Ok(RabiefSummary {
        reset_mode: data.reset_mode,
        fit_nopi,
        fit_pi,
        p_sp_hat,
        p_sp_sigma,
        unphysical: !(0.0..=1.0).contains(&p_sp_hat),
        input_p1_mean: data.input_p1_mean(),
        input_p1_std: data.input_p1_std(),
        input_p2_mean: data.input_p2_mean(),
    })
}

/// Ideal-gate RabiEF signal pair for a static diagonal input
/// (p0, p1, p2) with perfect binary readout; used as a small oracle.
pub fn ideal_signals(theta: f64, pops: (f64, f64, f64)) -> (f64, f64) {
    let (p0, p1, p2) = pops;
    let s = (theta / 2.0).sin().powi(2);
    // no-π: R₁₂(θ) then X. |0⟩→|1⟩ (label 1); |1⟩→ cos²·|0⟩ + sin²·|2⟩
    // → label 1 with prob sin²; |2⟩→ sin²·|0⟩ + cos²·|2⟩ → label 1 w.p. cos².
    let nopi = p0 + p1 * s + p2 * (1.0 - s);
    // π: X first swaps the |0⟩ and |1⟩ roles.
    let pi = p1 + p0 * s + p2 * (1.0 - s);
    (nopi, pi)
}

#[allow(dead_code)]

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn bias_formula_cases() {
        assert_eq!(rabief_bias(0.01, 0.0).unwrap(), 0.01);
        let b = rabief_bias(0.01, 0.02).unwrap();
        assert!((b - (-0.01 / 0.94)).abs() < 1e-15);
        assert!(b < 0.0);
        let b = rabief_bias(0.03, 0.01).unwrap();
        assert!((b - 0.02 / 0.97).abs() < 1e-15);
        assert!(rabief_bias(0.1, 0.4).is_err());
    }

    #[test]
    fn ideal_signal_amplitude_ratio_is_biased_estimator() {
        // For static pops the fitted amplitudes are a_nopi = p1 − p2,
        // a_pi = p0 − p2, so the ratio equals the bias formula.
        let pops = (0.95, 0.03, 0.02);
        let angles = super::super::default_angles();
        let nopi: Vec<f64> = angles.iter().map(|&t| ideal_signals(t, pops).0).collect();
        let pi: Vec<f64> = angles.iter().map(|&t| ideal_signals(t, pops).1).collect();
        let f_nopi = fit_sin_squared(&angles, &nopi, None).unwrap();
        let f_pi = fit_sin_squared(&angles, &pi, None).unwrap();
        let (alpha, _) = estimate_psp(&f_nopi, &f_pi).unwrap();
        let expect = rabief_bias(0.03, 0.02).unwrap();
        assert!((alpha - expect).abs() < 1e-8, "alpha = {alpha}, expect = {expect}");
    }

    #[test]
    fn estimate_invariant_under_common_rescaling() {
        let pops = (0.97, 0.02, 0.01);
        let angles = super::super::default_angles();
        for lambda in [0.5, 2.0, 17.0] {
            let nopi: Vec<f64> =
                angles.iter().map(|&t| lambda * ideal_signals(t, pops).0).collect();
            let pi: Vec<f64> = angles.iter().map(|&t| lambda * ideal_signals(t, pops).1).collect();
            let f_nopi = fit_sin_squared(&angles, &nopi, None).unwrap();
            let f_pi = fit_sin_squared(&angles, &pi, None).unwrap();
            let (alpha, _) = estimate_psp(&f_nopi, &f_pi).unwrap();
            let (alpha_ref, _) = {
                let n: Vec<f64> = angles.iter().map(|&t| ideal_signals(t, pops).0).collect();
                let p: Vec<f64> = angles.iter().map(|&t| ideal_signals(t, pops).1).collect();
                estimate_psp(
                    &fit_sin_squared(&angles, &n, None).unwrap(),
                    &fit_sin_squared(&angles, &p, None).unwrap(),
                )
                .unwrap()
            };
            assert!((alpha - alpha_ref).abs() < 1e-12);
        }
    }

    #[test]
    fn exact_slow_mode_input_near_equilibrium() {
        let params = DeviceParams::default();
        let mut cfg = RabiefConfig::new(ResetMode::SlowQutrit);
        cfg.angles = super::super::default_angles().into_iter().step_by(8).collect();
        let data = run_rabief_exact(&cfg, &params).unwrap();
        let eq_p1 = params.equilibrium_p1(3);
        // Slow resets thermalize: mean input p1 tracks equilibrium.
        assert!(
            (data.input_p1_mean() - eq_p1).abs() / eq_p1 < 0.05,
            "p1 = {} vs eq {eq_p1}",
            data.input_p1_mean()
        );
        // π amplitude dominates the no-π amplitude.
        let spread = |v: &[f64]| {
            v.iter().cloned().fold(f64::NEG_INFINITY, f64::max)
                - v.iter().cloned().fold(f64::INFINITY, f64::min)
        };
        assert!(spread(&data.s_pi) > 10.0 * spread(&data.s_nopi));
    }

    #[test]
    fn relabeling_amplifies_exact_signals() {
        let params = DeviceParams::default();
        let mut cfg = RabiefConfig::new(ResetMode::SlowQutrit);
        cfg.angles = super::super::default_angles();
        let data = run_rabief_exact(&cfg, &params).unwrap();
        let base = summarize_rabief(&data).unwrap();
        let mut amplified = data.clone();
        let mut rng = ChaCha8Rng::seed_from_u64(0);
        relabel_shots(&mut amplified, 0.05, &mut rng).unwrap();
        let amp = summarize_rabief(&amplified).unwrap();
        let expect = 0.05 + base.p_sp_hat * 0.9;
        assert!((amp.p_sp_hat - expect).abs() < 1e-6, "{} vs {expect}", amp.p_sp_hat);
    }

    #[test]
    fn sampled_chain_smoke_test() {
        // Tiny sampled run: estimates exist and inputs are physical.
        let params = DeviceParams::default();
        let mut cfg = RabiefConfig::new(ResetMode::FastQutrit);
        cfg.shots = 3;
        cfg.angles = super::super::default_angles().into_iter().step_by(10).collect();
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        let data = run_rabief(&cfg, &params, &mut rng).unwrap();
        assert_eq!(data.s_nopi.len(), cfg.angles.len());
        assert_eq!(data.input_pops.len(), 2 * cfg.shots * cfg.angles.len());
        for p in &data.input_pops {
            assert!(p.0 >= -1e-10 && p.1 >= -1e-10 && p.2 >= -1e-10);
            assert!((p.0 + p.1 + p.2 - 1.0).abs() < 1e-8);
        }
    }
}
