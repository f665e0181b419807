//! End-to-end acceptance gate. Each test checks one numbered criterion and
//! prints a single `ACCEPTANCE <n> PASS|FAIL: ...` line before asserting,
//! so a full run yields one status line per criterion. Tolerances are
//! pinned in the constants next to each check.

mod common;

use std::time::Instant;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

use spamsplit::experiments::{
    gaussian_discrimination_rabief, mcb_exact, mcb_expectations, readout_fidelity,
    run_mcb_sampled, run_rabief, summarize_rabief, twirl_averaged_cycle, McbConfig,
    RabiefConfig, ResetMode,
};
use spamsplit::fit::{fit_decay, DecayFit};
use spamsplit::learn::{amplify_psp, deamplify_psp, extract_fidelities, learn_fast_psp};
use spamsplit::mitigation::{
    bootstrap_fidelities, ghz_raw_sampled, inverse_bitflip, learn_zstar, mitigate_split,
    mitigate_trex, run_teleportation_pec, teleport_exact_pec, teleport_unmitigated,
    tomography_fit, GhzNoise, TeleportNoise,
};
use spamsplit::ptm::{NoiseFidelities, Ptm};
use spamsplit::sim::{apply_to_populations, lindblad_channel, DeviceParams};

fn report(criterion: u32, description: &str, ok: bool, started: Instant, budget_s: f64) {
    let elapsed = started.elapsed().as_secs_f64();
    let verdict = if ok { "PASS" } else { "FAIL" };
    println!("ACCEPTANCE {criterion} {verdict}: {description} ({elapsed:.2} s)");
    assert!(ok, "criterion {criterion} failed");
    assert!(elapsed < budget_s, "criterion {criterion} exceeded {budget_s} s: {elapsed:.2} s");
}

fn rel_err(x: f64, truth: f64) -> f64 {
    (x - truth).abs() / truth.abs()
}

fn fit_series(data: &spamsplit::experiments::McbData, series: &str) -> DecayFit {
    let ks: Vec<f64> = data.ks();
    let pts = data.series(series);
    let ys: Vec<f64> = pts.iter().map(|p| p.0).collect();
    let ws: Vec<f64> = pts.iter().map(|p| 1.0 / (p.1 * p.1 + 1e-10)).collect();
    fit_decay(&ks, &ys, Some(&ws)).expect("decay fit")
}

#[test]
fn acceptance_1_ptm_closed_forms() {
    let t0 = Instant::now();
    const TOL: f64 = 1e-12;
    let mut rng = ChaCha8Rng::seed_from_u64(101);
    let mut ok = true;
    for _ in 0..1000 {
        let f = NoiseFidelities::new(
            rng.gen_range(0.8..=1.0),
            rng.gen_range(0.8..=1.0),
            rng.gen_range(0.8..=1.0),
            rng.gen_range(0.8..=1.0),
        )
        .unwrap();
        // Γ_m from its factor channels vs the closed-form entries.
        let composed = Ptm::cnot()
            .compose(&Ptm::bitflip(f.p_s(), &[0], 2).unwrap())
            .unwrap()
            .compose(&Ptm::bitflip(f.p_a(), &[1], 2).unwrap())
            .unwrap()
            .compose(&Ptm::bitflip(f.p_c(), &[0, 1], 2).unwrap())
            .unwrap();
        ok &= composed.max_diff(&Ptm::measurement(&f)) < TOL;
        // Γ_m^{2k} and the full MCB circuit vs their closed forms.
        for k in [0usize, 1, 2, 5, 8] {
            let powered = Ptm::measurement(&f).pow(2 * k);
            ok &= powered.max_diff(&Ptm::measurement_cycle_closed_form(k, &f)) < TOL;
            ok &= Ptm::mcb_composed(k, &f).max_diff(&Ptm::mcb_closed_form(k, &f)) < TOL;
        }
        // Full final measurement vs diag(1, f_a f_s) ⊗ reset.
        let fm = Ptm::final_measurement(&f).tensor(&Ptm::reset());
        ok &= Ptm::final_measurement_full(&f).max_diff(&fm) < TOL;
    }
    report(1, "PTM closed forms match explicit composition (1e-12, 1000 draws)", ok, t0, 1.0);
}

#[test]
fn acceptance_2_noise_learning_oracle_loop() {
    let t0 = Instant::now();
    const TOL: f64 = 1e-8;
    let depths = [0usize, 1, 2, 5, 8];
    let mut rng = ChaCha8Rng::seed_from_u64(202);
    let mut ok = true;
    for _ in 0..50 {
        let truth = NoiseFidelities::new(
            rng.gen_range(0.9..=1.0),
            rng.gen_range(0.9..=1.0),
            rng.gen_range(0.9..=1.0),
            rng.gen_range(0.9..=1.0),
        )
        .unwrap();
        let rows = mcb_exact(&truth, &depths).unwrap();
        let ks: Vec<f64> = rows.iter().map(|r| r.0 as f64).collect();
        let fit = |pick: fn(&(usize, f64, f64, f64)) -> f64| {
            let ys: Vec<f64> = rows.iter().map(pick).collect();
            fit_decay(&ks, &ys, None).expect("exact decay fit")
        };
        let fit_iz = fit(|r| r.1);
        let fit_zi = fit(|r| r.2);
        let fit_zz = fit(|r| r.3);
        let model = extract_fidelities(&fit_iz, &fit_zi, &fit_zz, (truth.p_sp(), 0.0)).unwrap();
        ok &= (model.f_a - truth.f_a).abs() < TOL;
        ok &= (model.f_s - truth.f_s).abs() < TOL;
        ok &= (model.f_c - truth.f_c).abs() < TOL;
        ok &= (model.f_sp_slow.unwrap() - truth.f_sp).abs() < TOL;
    }
    report(2, "exact inject→simulate→fit→extract loop recovers fidelities (1e-8)", ok, t0, 10.0);
}

#[test]
fn acceptance_3_learned_fidelities_sampled() {
    let t0 = Instant::now();
    const REL_TOL: f64 = 2e-3;
    let p_sp_slow = 0.01946;
    let p_sp_fast = 0.01206;
    let slow = NoiseFidelities::new(0.99096, 0.99096, 0.995, 1.0 - 2.0 * p_sp_slow).unwrap();
    let fast = NoiseFidelities::new(0.99096, 0.99096, 0.995, 1.0 - 2.0 * p_sp_fast).unwrap();
    let cfg = McbConfig { depths: vec![0, 1, 2, 5, 8], randomizations: 256, shots: 128 };
    let mut rng = ChaCha8Rng::seed_from_u64(14);

    let data = mcb_expectations(&run_mcb_sampled(&slow, &cfg, &mut rng).unwrap()).unwrap();
    let model = extract_fidelities(
        &fit_series(&data, "iz"),
        &fit_series(&data, "zi"),
        &fit_series(&data, "zz"),
        (p_sp_slow, 0.0),
    )
    .unwrap();

    let fast_data = mcb_expectations(&run_mcb_sampled(&fast, &cfg, &mut rng).unwrap()).unwrap();
    let fit_zi_fast = fit_series(&fast_data, "zi");
    let (f_sp_fast, _) =
        learn_fast_psp((fit_zi_fast.a, fit_zi_fast.std_errs[0]), &model).unwrap();

    eprintln!(
        "criterion 3: f_a {:.5} ({:.1e}), f_s {:.5} ({:.1e}), f_c {:.5} ({:.1e}), f_sp_fast {:.5} ({:.1e})",
        model.f_a,
        rel_err(model.f_a, slow.f_a),
        model.f_s,
        rel_err(model.f_s, slow.f_s),
        model.f_c,
        rel_err(model.f_c, slow.f_c),
        f_sp_fast,
        rel_err(f_sp_fast, fast.f_sp)
    );
    let ok = rel_err(model.f_a, slow.f_a) < REL_TOL
        && rel_err(model.f_s, slow.f_s) < REL_TOL
        && rel_err(model.f_c, slow.f_c) < REL_TOL
        && rel_err(f_sp_fast, fast.f_sp) < REL_TOL;
    report(3, "sampled MCB recovers f_a, f_s, f_c, f_sp^fast within 2e-3 relative", ok, t0, 120.0);
}

#[test]
fn acceptance_4_reset_mode_estimates() {
    let t0 = Instant::now();
    let params = DeviceParams::default();
    let modes = [ResetMode::SlowQutrit, ResetMode::FastQutrit, ResetMode::FastQubit];
    let summaries: Vec<_> = modes
        .par_iter()
        .enumerate()
        .map(|(i, &mode)| {
            let mut cfg = RabiefConfig::new(mode);
            cfg.shots = 8000;
            let mut rng = ChaCha8Rng::seed_from_u64(404);
            rng.set_stream(i as u64);
            let data = run_rabief(&cfg, &params, &mut rng).unwrap();
            summarize_rabief(&data).unwrap()
        })
        .collect();
    let (slow, fast3, fast2) = (&summaries[0], &summaries[1], &summaries[2]);

    eprintln!(
        "criterion 4: slow p̂ {:.5} vs mean {:.5}; fast3 p̂ {:.5} vs mean {:.5}; fast2 p̂ {:.5} a_nopi {:.4}; stds {:.2e} / {:.2e}",
        slow.p_sp_hat,
        slow.input_p1_mean,
        fast3.p_sp_hat,
        fast3.input_p1_mean,
        fast2.p_sp_hat,
        fast2.fit_nopi.a,
        fast2.input_p1_std,
        fast3.input_p1_std
    );
    let slow_ok = rel_err(slow.p_sp_hat, slow.input_p1_mean) <= 0.10;
    let fast3_ok = rel_err(fast3.p_sp_hat, fast3.input_p1_mean) <= 0.15;
    let fast2_ok = fast2.fit_nopi.a < 0.0 && fast2.p_sp_hat < 0.0 && fast2.unphysical;
    let spread_ok = fast2.input_p1_std > 100.0 * fast3.input_p1_std;
    let ok = slow_ok && fast3_ok && fast2_ok && spread_ok;
    report(
        4,
        "reset-mode comparison: slow ±10%, fast qutrit ±15%, fast qubit unphysical, >100× spread",
        ok,
        t0,
        600.0,
    );
}

#[test]
fn acceptance_5_thermal_fixed_point() {
    let t0 = Instant::now();
    let params = DeviceParams::default();
    // 10 ms ≫ T1, so the channel has fully equilibrated.
    let channel = lindblad_channel(&params, 10e-3, 3).unwrap();
    let from_ground = apply_to_populations(&channel, &[1.0, 0.0, 0.0]).unwrap();
    let eq = params.equilibrium_populations(3);
    let settled = apply_to_populations(&channel, &eq).unwrap();
    let ok = (from_ground[1] - 0.0195).abs() < 1e-3
        && (from_ground[1] - params.equilibrium_p1(3)).abs() < 1e-6
        && eq.iter().zip(&settled).all(|(a, b)| (a - b).abs() < 1e-9);
    report(5, "Lindblad equilibrium |1⟩ population ≈ 0.0195 (1e-3) and is a fixed point", ok, t0, 1.0);
}

#[test]
fn acceptance_6_ghz_mitigation() {
    let t0 = Instant::now();
    let f_sp = 0.96108;
    let f_meas = 0.982;
    let rows: Vec<(usize, f64, f64, f64, f64, f64)> = [4usize, 6, 8, 10]
        .par_iter()
        .enumerate()
        .map(|(i, &n)| {
            let noise = GhzNoise::uniform(n, f_sp, f_meas);
            let mut rng = ChaCha8Rng::seed_from_u64(606);
            rng.set_stream(i as u64);
            let raw = ghz_raw_sampled(n, &noise, false, 8 * n * n, 128, &mut rng).unwrap();
            let zstar = learn_zstar(n, &noise, 8 * n * n, 512, &mut rng).unwrap();
            let trex = mitigate_trex(raw, zstar).unwrap();
            let f_sp_list: Vec<(f64, f64)> = (1..n).map(|_| (f_sp, 0.0)).collect();
            let split = mitigate_split(raw, zstar, &f_sp_list).unwrap();
            (n, trex.0, trex.1, split.0, split.1, f_sp.powi(1 - n as i32))
        })
        .collect();
    let mut ok = true;
    for &(n, trex, st, split, ss, target) in &rows {
        ok &= (trex - target).abs() < 3.0 * st;
        ok &= (split - 1.0).abs() < 3.0 * ss;
        if n >= 6 {
            ok &= trex > 1.0;
        }
    }
    report(6, "GHZ ladders: TREX overshoots to f_sp^(1-n), split mitigation recovers +1 (3σ)", ok, t0, 120.0);
}

#[test]
fn acceptance_7_teleportation_pec() {
    let t0 = Instant::now();
    let noise = TeleportNoise { p_sp: 0.01946, f_s: 0.99096, f_a: 0.99096, f_c: 0.995 };
    let gamma = noise.gamma().unwrap();
    let n_thetas = 15;
    let thetas: Vec<f64> =
        (1..=n_thetas).map(|k| std::f64::consts::PI * k as f64 / (n_thetas + 1) as f64).collect();
    let results: Vec<(f64, f64, f64)> = thetas
        .par_iter()
        .enumerate()
        .map(|(i, &theta)| {
            let mut rng = ChaCha8Rng::seed_from_u64(707);
            rng.set_stream(i as u64);
            let pool = run_teleportation_pec(theta, &noise, 1000, 100, &mut rng).unwrap();
            let boot = bootstrap_fidelities(theta, &pool, gamma, 300, 128, &mut rng).unwrap();
            let unmit = teleport_unmitigated(theta, &noise).unwrap();
            let (_, exact_fid) = teleport_exact_pec(theta, &noise).unwrap();
            (boot.median, unmit, exact_fid)
        })
        .collect();
    for (t, r) in thetas.iter().zip(&results) {
        eprintln!(
            "criterion 7: θ {:.3} median {:.4} unmitigated {:.4} exact defect {:.2e}",
            t,
            r.0,
            r.1,
            (r.2 - 1.0).abs()
        );
    }
    let good_medians = results.iter().filter(|r| r.0 > 0.98).count();
    let ok = good_medians >= 12
        && results.iter().all(|r| r.1 < 0.96)
        && results.iter().all(|r| (r.2 - 1.0).abs() < 1e-10);
    report(
        7,
        "teleportation PEC: median fidelity > 0.98 for ≥ 12/15 θ, exact cancellation 1e-10",
        ok,
        t0,
        300.0,
    );
}

#[test]
fn acceptance_8_gaussian_sensitivity() {
    let t0 = Instant::now();
    let alpha = 0.015;
    let sigmas = [0.1, 0.2, 0.3, 0.4, 0.5, 0.6, 0.7, 0.8];
    let mut rng = ChaCha8Rng::seed_from_u64(808);
    let mut ok = true;
    let mut bars = Vec::new();
    for &sigma_m in &sigmas {
        let mut centered = 0usize;
        let mut mean_bar = 0.0;
        let reps = 8;
        for _ in 0..reps {
            let (est, sigma_est) =
                gaussian_discrimination_rabief(alpha, sigma_m, 2000, &mut rng).unwrap();
            if (est - alpha).abs() < 3.0 * sigma_est {
                centered += 1;
            }
            mean_bar += sigma_est / reps as f64;
        }
        // 3σ coverage is ~99.7% per estimate; demand most repetitions agree.
        ok &= centered >= reps - 1;
        bars.push(mean_bar);
    }
    ok &= bars.windows(2).all(|w| w[1] > w[0]);
    ok &= (readout_fidelity(0.6).unwrap() - 0.952).abs() < 1e-3;
    report(8, "Gaussian toy: estimates centered on α = 0.015, error bars grow with σ_m, F(0.6) ≈ 0.952", ok, t0, 60.0);
}

#[test]
fn acceptance_9_property_suites() {
    let t0 = Instant::now();
    let mut ok = true;
    let mut rng = ChaCha8Rng::seed_from_u64(909);

    // Twirl diagonalization of random injected channels.
    for _ in 0..10 {
        let noise = common::near_identity_cptp(4, 0.3, &mut rng);
        let averaged = twirl_averaged_cycle(&noise).unwrap();
        let residual =
            Ptm::cnot().matrix().transpose() * common::restricted_ptm(&averaged);
        ok &= common::max_off_diagonal(&residual) < 1e-10;
    }

    // Correlated error: pre-measurement X⊗X equals post-measurement X⊗I.
    {
        use spamsplit::linalg::kron;
        use spamsplit::sim::{gates, SuperOp};
        let cx = SuperOp::from_unitary(&gates::cnot()).unwrap();
        let x = common::pauli_x();
        let id = gates::identity(2);
        for p in [0.0025, 0.1] {
            let mk = |op: &spamsplit::linalg::CMatrix| {
                SuperOp::from_unitary(op)
                    .unwrap()
                    .mix(&SuperOp::identity(4), p)
                    .unwrap()
            };
            let lhs = cx.compose(&mk(&kron(&x, &x))).unwrap();
            let rhs = mk(&kron(&x, &id)).compose(&cx).unwrap();
            ok &= lhs.max_diff(&rhs) < 1e-12;
        }
    }

    // Quasi-probability inverse exactness.
    for p in [0.0025, 0.01946, 0.3] {
        let ch = inverse_bitflip(p).unwrap();
        ok &= ((1.0 - 2.0 * p) * (ch.terms[0].1 - ch.q_x()) - 1.0).abs() < 1e-14;
    }

    // Tomography physicality for unphysical targets.
    for target in [(0.0, 0.0, 1.4), (1.2, -1.2, 0.3), (-2.0, 1.5, -1.5)] {
        let (state, _) = tomography_fit(target).unwrap();
        let rho = state.rho();
        ok &= (rho[(0, 0)].re + rho[(1, 1)].re - 1.0).abs() < 1e-10;
        ok &= spamsplit::linalg::hermitian_eigenvalues(&rho)
            .iter()
            .all(|&lam| lam > -1e-10);
    }

    // Amplification round trip.
    for p in [0.0, 0.01946] {
        for amp in [0.02, 0.1, 0.25] {
            ok &= (deamplify_psp(amplify_psp(p, amp).unwrap(), amp).unwrap() - p).abs() < 1e-15;
        }
    }

    // Seed determinism: same-seeded reruns are bit-identical.
    {
        let f = NoiseFidelities::new(0.99096, 0.99096, 0.995, 0.96108).unwrap();
        let cfg = McbConfig { depths: vec![0, 1, 5], randomizations: 8, shots: 64 };
        let a = run_mcb_sampled(&f, &cfg, &mut ChaCha8Rng::seed_from_u64(11)).unwrap();
        let b = run_mcb_sampled(&f, &cfg, &mut ChaCha8Rng::seed_from_u64(11)).unwrap();
        ok &= a.len() == b.len()
            && a.iter().zip(&b).all(|(x, y)| {
                x.depth == y.depth
                    && x.iz.to_bits() == y.iz.to_bits()
                    && x.zi.to_bits() == y.zi.to_bits()
                    && x.zz.to_bits() == y.zz.to_bits()
            });
    }

    report(9, "property suites: twirl, correlated equivalence, quasi-prob, tomography, amplification, determinism", ok, t0, 60.0);
}
