//! Cross-module property suites: twirl diagonalization, correlated-error
//! pre/post equivalence, quasi-probability exactness, tomography
//! physicality, amplification round trips, and seed determinism.

mod common;

use nalgebra::DMatrix;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use common::{max_off_diagonal, near_identity_cptp, pauli_x, restricted_ptm};
use spamsplit::experiments::{run_mcb_sampled, run_rabief, twirl_averaged_cycle, McbConfig, RabiefConfig, ResetMode};
use spamsplit::learn::{amplify_psp, deamplify_psp};
use spamsplit::linalg::kron;
use spamsplit::mitigation::{inverse_bitflip, tomography_fit};
use spamsplit::ptm::Ptm;
use spamsplit::sim::{gates, DeviceParams, SuperOp};

#[test]
fn twirling_diagonalizes_random_injected_noise() {
    // Any injected qubit/cbit channel, averaged over the 8 twirl
    // assignments, becomes CNOT times a restricted-diagonal channel.
    let mut rng = ChaCha8Rng::seed_from_u64(41);
    for round in 0..25 {
        let noise = near_identity_cptp(4, 0.3, &mut rng);
        let averaged = twirl_averaged_cycle(&noise).unwrap();
        let g = restricted_ptm(&averaged);
        // Undo the CNOT permutation; the remainder must be diagonal.
        let cx = Ptm::cnot();
        let residual = cx.matrix().transpose() * &g;
        assert!(
            max_off_diagonal(&residual) < 1e-10,
            "round {round}: off-diagonal {}",
            max_off_diagonal(&residual)
        );
    }
}

#[test]
fn correlated_error_pre_and_post_measurement_agree() {
    // A post-measurement X on the qubit is the same circuit element as a
    // pre-measurement correlated X⊗X, because CX·(X⊗X) = (X⊗I)·CX.
    let cx = SuperOp::from_unitary(&gates::cnot()).unwrap();
    let x = pauli_x();
    let id = gates::identity(2);
    for p in [0.0, 0.0025, 0.01, 0.2, 0.5] {
        let pre = flip_channel(&kron(&x, &x), p);
        let post = flip_channel(&kron(&x, &id), p);
        let lhs = cx.compose(&pre).unwrap();
        let rhs = post.compose(&cx).unwrap();
        assert!(lhs.max_diff(&rhs) < 1e-12, "p = {p}: {}", lhs.max_diff(&rhs));
    }
}

fn flip_channel(op: &spamsplit::linalg::CMatrix, p: f64) -> SuperOp {
    let flip = SuperOp::from_unitary(op).unwrap();
    flip.mix(&SuperOp::identity(4), p).unwrap()
}

#[test]
fn quasi_probability_inverse_is_exact() {
    for p in [0.0, 1e-6, 0.0025, 0.00452, 0.01946, 0.1, 0.3, 0.49] {
        let ch = inverse_bitflip(p).unwrap();
        let f = 1.0 - 2.0 * p;
        let q_i = ch.terms[0].1;
        // Z-sector: the flip attenuates by f; the inverse restores it.
        assert!((f * (q_i - ch.q_x()) - 1.0).abs() < 1e-14);
        // Identity sector: quasi-probabilities sum to one.
        assert!((q_i + ch.q_x() - 1.0).abs() < 1e-14);
        assert!((ch.gamma - (q_i.abs() + ch.q_x().abs())).abs() < 1e-15);
    }
}

#[test]
fn tomography_is_physical_for_arbitrary_inputs() {
    let mut rng = ChaCha8Rng::seed_from_u64(9);
    for _ in 0..60 {
        let target = (
            rng.gen_range(-2.0..2.0),
            rng.gen_range(-2.0..2.0),
            rng.gen_range(-2.0..2.0),
        );
        let (state, _) = tomography_fit(target).unwrap();
        let rho = state.rho();
        let trace = (rho[(0, 0)] + rho[(1, 1)]).re;
        assert!((trace - 1.0).abs() < 1e-10);
        assert!(spamsplit::linalg::hermiticity_defect(&rho) < 1e-12);
        for lam in spamsplit::linalg::hermitian_eigenvalues(&rho) {
            assert!(lam > -1e-10, "eigenvalue {lam} for target {target:?}");
        }
    }
}

#[test]
fn amplification_round_trips_exactly() {
    for p in [0.0, 1e-4, 0.005, 0.01946, 0.08] {
        for amp in [0.0, 0.01, 0.05, 0.1, 0.2] {
            let round = deamplify_psp(amplify_psp(p, amp).unwrap(), amp).unwrap();
            assert!((round - p).abs() < 1e-15, "p = {p}, amp = {amp}: {round}");
        }
    }
}

#[test]
fn identical_seeds_reproduce_identical_samples() {
    let params = DeviceParams::default();
    let f = spamsplit::ptm::NoiseFidelities::new(0.99, 0.992, 0.995, 0.96).unwrap();
    let cfg = McbConfig { depths: vec![0, 1, 2], randomizations: 16, shots: 32 };

    let run_a = run_mcb_sampled(&f, &cfg, &mut ChaCha8Rng::seed_from_u64(5)).unwrap();
    let run_b = run_mcb_sampled(&f, &cfg, &mut ChaCha8Rng::seed_from_u64(5)).unwrap();
    assert_eq!(run_a.len(), run_b.len());
    for (a, b) in run_a.iter().zip(&run_b) {
        assert_eq!((a.depth, a.iz, a.zi, a.zz), (b.depth, b.iz, b.zi, b.zz));
    }
    let run_c = run_mcb_sampled(&f, &cfg, &mut ChaCha8Rng::seed_from_u64(6)).unwrap();
    assert!(run_a.iter().zip(&run_c).any(|(a, c)| a.iz != c.iz || a.zi != c.zi));

    let mut rcfg = RabiefConfig::new(ResetMode::FastQutrit);
    rcfg.shots = 20;
    rcfg.angles = (0..8).map(|k| k as f64).collect();
    let ra = run_rabief(&rcfg, &params, &mut ChaCha8Rng::seed_from_u64(3)).unwrap();
    let rb = run_rabief(&rcfg, &params, &mut ChaCha8Rng::seed_from_u64(3)).unwrap();
    assert_eq!(ra.s_nopi, rb.s_nopi);
    assert_eq!(ra.s_pi, rb.s_pi);
    assert_eq!(ra.shots_nopi, rb.shots_nopi);
}

#[test]
fn twirl_average_of_restricted_noise_reproduces_its_ptm() {
    // When the injected channel is already a restricted mixture (state +
    // assignment flips), twirling changes nothing: the averaged cycle's
    // PTM is exactly Γ_CX·Γ_s·Γ_a.
    let mut rng = ChaCha8Rng::seed_from_u64(77);
    for _ in 0..10 {
        let p_s = rng.gen_range(0.0..0.2);
        let p_a = rng.gen_range(0.0..0.2);
        let x = pauli_x();
        let id = gates::identity(2);
        let noise = flip_channel(&kron(&x, &id), p_s)
            .compose(&flip_channel(&kron(&id, &x), p_a))
            .unwrap();
        let averaged = twirl_averaged_cycle(&noise).unwrap();
        let g = restricted_ptm(&averaged);
        let expected = Ptm::cnot()
            .compose(&Ptm::bitflip(p_s, &[0], 2).unwrap())
            .unwrap()
            .compose(&Ptm::bitflip(p_a, &[1], 2).unwrap())
            .unwrap();
        let diff: f64 = (&g - expected.matrix())
            .iter()
            .map(|v| v.abs())
            .fold(0.0, f64::max);
        assert!(diff < 1e-12, "diff {diff}");
    }
}

#[test]
fn ghz_two_layer_and_ladder_agree() {
    use spamsplit::mitigation::{ghz_raw_exact, GhzNoise};
    let mut rng = ChaCha8Rng::seed_from_u64(15);
    for n in [2usize, 4, 6, 8, 10] {
        let noise = GhzNoise {
            f_sp: (0..n).map(|_| rng.gen_range(0.9..1.0)).collect(),
            f_meas: rng.gen_range(0.9..1.0),
        };
        let a = ghz_raw_exact(n, &noise, false).unwrap();
        let b = ghz_raw_exact(n, &noise, true).unwrap();
        assert!((a - b).abs() < 1e-14);
    }
}

#[test]
fn restricted_ptm_of_cnot_is_the_permutation() {
    let cx = SuperOp::from_unitary(&gates::cnot()).unwrap();
    let g = restricted_ptm(&cx);
    let diff: DMatrix<f64> = &g - Ptm::cnot().matrix();
    assert!(diff.iter().map(|v| v.abs()).fold(0.0, f64::max) < 1e-14);
}
