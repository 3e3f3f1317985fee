//! Cross-module invariants: the bound chain against sampled decoders, the
//! branch decomposition against the global SDP, Haar-moment envelopes, and
//! property tests over random layouts.

use erasure_converse::bounds::{
    expected_fidelity_bound, fidelity_upper_bound, CodeParams, ConstantEstimates,
};
use erasure_converse::ensemble::{
    decoder_fidelity, estimate_opnorm_constant, run_code_ensemble, EnsembleConfig,
};
use erasure_converse::erasure::{branch_decompose, channel_output, ErasureParams};
use erasure_converse::linalg::CMatrix;
use erasure_converse::oracle::{
    max_entanglement_fidelity, optimal_code_fidelity, solve_max_entanglement,
};
use erasure_converse::renyi::renyi_relative_entropy;
use erasure_converse::rng::{child_seed, SplitMix64};
use erasure_converse::states::{
    haar_random_isometry, haar_random_pure, marginal_purity, DensityMatrix, PureState,
    SubsystemLayout,
};
use proptest::prelude::*;

fn random_full_rank(n: usize, seed: u64) -> DensityMatrix {
    let mut rng = SplitMix64::new(seed);
    let g = CMatrix::from_fn(n, n, |_, _| {
        num_complex::Complex64::new(rng.next_gaussian(), rng.next_gaussian())
    });
    let gg = g.matmul(&g.adjoint());
    let tr = gg.trace().re;
    DensityMatrix::new(SubsystemLayout::new(vec![n]).unwrap(), gg.scale(1.0 / tr)).unwrap()
}

#[test]
fn haar_mean_density_converges_to_maximally_mixed() {
    let layout = SubsystemLayout::new(vec![2, 2]).unwrap();
    let trials = 4000usize;
    let mut acc = CMatrix::zeros(4, 4);
    for t in 0..trials {
        let psi = haar_random_pure(&layout, child_seed(99, t as u64));
        acc = acc.add(psi.projector().matrix());
    }
    let mean = acc.scale(1.0 / trials as f64);
    let target = CMatrix::identity(4).scale(0.25);
    let dev = mean.max_abs_diff(&target);
    let budget = 5.0 / (trials as f64).sqrt();
    assert!(dev < budget, "max entry deviation {dev} vs {budget}");
}

#[test]
fn bound_chain_holds_for_sampled_decoders() {
    // measured fidelity through random decoders never exceeds the bound
    let alphas = [1.1, 1.5, 2.0];
    let mut worst_slack = f64::INFINITY;
    let mut code_idx = 0u64;
    for n in 1..=3usize {
        for m in [2u64, 4] {
            let code = CodeParams::from_m(n, m).unwrap();
            let layout = SubsystemLayout::code_layout(m as usize, 2, n).unwrap();
            let b_dim = 3usize.pow(n as u32);
            for c in 0..34 {
                code_idx += 1;
                let psi = haar_random_pure(&layout, child_seed(7001, code_idx));
                let p = [0.25, 0.5, 0.75][c % 3];
                let params = ErasureParams::new(p, 2).unwrap();
                let bounds: Vec<f64> = alphas
                    .iter()
                    .map(|&a| fidelity_upper_bound(&psi, &code, &params, a).unwrap().value)
                    .collect();
                let min_bound = bounds.iter().cloned().fold(f64::INFINITY, f64::min);
                for dec in 0..10u64 {
                    // environment dim 3 keeps the pushed state smaller than
                    // the generous (d+1)^n choice while staying an isometry
                    let env = b_dim.div_ceil(m as usize).max(3);
                    let v = haar_random_isometry(
                        b_dim,
                        m as usize * env,
                        child_seed(8000 + dec, code_idx),
                    )
                    .unwrap();
                    let f = decoder_fidelity(&psi, &code, &params, &v).unwrap();
                    assert!(
                        f <= min_bound + 1e-8,
                        "decoder fidelity {f} above bound {min_bound} (n={n} m={m} p={p})"
                    );
                    worst_slack = worst_slack.min(min_bound - f);
                }
            }
        }
    }
    assert!(worst_slack >= -1e-8);
}

#[test]
fn per_branch_oracle_matches_global_sdp() {
    for (n, m, p, seed) in [(1usize, 2u64, 0.3, 1u64), (2, 2, 0.5, 2), (2, 4, 0.25, 3)] {
        let code = CodeParams::from_m(n, m).unwrap();
        let layout = SubsystemLayout::code_layout(m as usize, 2, n).unwrap();
        let psi = haar_random_pure(&layout, seed);
        let params = ErasureParams::new(p, 2).unwrap();
        let tol = 1e-7;
        let per_branch = optimal_code_fidelity(&psi, &code, &params, tol).unwrap();
        let full = channel_output(&psi, &params).unwrap();
        let global = max_entanglement_fidelity(&full, m as usize, tol).unwrap();
        assert!(
            (per_branch - global).abs() <= 10.0 * tol,
            "n={n} m={m}: branch {per_branch} vs global {global}"
        );
    }
}

#[test]
fn branch_mixing_is_monotone_for_the_oracle() {
    // F_opt of a flagless mixture never exceeds the mixture of F_opts
    let tol = 1e-6;
    for seed in 0..5u64 {
        let layout = SubsystemLayout::new(vec![2, 4]).unwrap();
        let a = haar_random_pure(&layout, 10 + seed).projector();
        let b = haar_random_pure(&layout, 20 + seed).projector();
        let w = 0.3;
        let mixed = DensityMatrix::new(
            layout.clone(),
            a.matrix().scale(w).add(&b.matrix().scale(1.0 - w)),
        )
        .unwrap();
        let f_mix = max_entanglement_fidelity(&mixed, 2, tol).unwrap();
        let f_a = max_entanglement_fidelity(&a, 2, tol).unwrap();
        let f_b = max_entanglement_fidelity(&b, 2, tol).unwrap();
        assert!(f_mix <= w * f_a + (1.0 - w) * f_b + 10.0 * tol);
    }
}

#[test]
fn sdp_certificates_are_two_sided() {
    for seed in 0..6u64 {
        let layout = SubsystemLayout::new(vec![2, 2, 2]).unwrap();
        let psi = haar_random_pure(&layout, 42 + seed);
        let joint = psi.projector().partial_trace(&[0, 1]).unwrap();
        let sol = solve_max_entanglement(&joint, 2, 1e-7).unwrap();
        assert!(sol.gap() <= 1e-7);
        assert!(sol.primal <= sol.dual + 1e-12);
        sol.choi.validate(1e-9).unwrap();
    }
}

#[test]
fn purity_envelope_from_empirical_constant() {
    // E Tr{phi_S^alpha} <= (C_hat d^-|S|)^(alpha-1) with matching-size C_hat
    let d = 2usize;
    let n = 4usize;
    let m = 4usize;
    let layout = SubsystemLayout::code_layout(m, d, n).unwrap();
    let total = layout.total();
    let trials = 400usize;
    for k in 1..=n {
        let d_r = d.pow(k as u32);
        let d_s = total / d_r;
        let c_hat = estimate_opnorm_constant(d_r, d_s, 4000, 5).unwrap();
        let subset: Vec<usize> = (1..=k).collect();
        for alpha in [1.5, 2.0] {
            let mut vals = Vec::with_capacity(trials);
            for t in 0..trials {
                let psi = haar_random_pure(&layout, child_seed(600 + k as u64, t as u64));
                vals.push(marginal_purity(&psi, &subset, alpha).unwrap());
            }
            let mean: f64 = vals.iter().sum::<f64>() / trials as f64;
            let sd =
                (vals.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / (trials - 1) as f64).sqrt();
            let envelope = (c_hat / d_r as f64).powf(alpha - 1.0);
            assert!(
                mean <= envelope + 3.0 * sd / (trials as f64).sqrt(),
                "k={k} alpha={alpha}: mean {mean} vs envelope {envelope}"
            );
        }
    }
}

#[test]
fn ensemble_mean_below_expected_bound_with_empirical_constant() {
    let d = 2usize;
    let n = 4usize;
    let code = CodeParams::new(n, 0.5).unwrap();
    let params = ErasureParams::new(0.5, d).unwrap();
    let cfg = EnsembleConfig::new(500, 314, code, params, vec![2.0]).unwrap();
    let report = run_code_ensemble(&cfg).unwrap();
    let stats = &report.per_alpha[0];
    // C_hat = max over pattern sizes of the matching-size estimate
    let total = code.require_m().unwrap() as usize * d.pow(n as u32);
    let mut c_hat = 1.0f64;
    for k in 1..=n {
        let d_r = d.pow(k as u32);
        c_hat = c_hat.max(estimate_opnorm_constant(d_r, total / d_r, 4000, 17).unwrap());
    }
    let consts = ConstantEstimates::new(c_hat, 1.0).unwrap();
    let expected = expected_fidelity_bound(&code, &params, 2.0, &consts).unwrap();
    assert!(
        stats.mean <= expected.value + 3.0 * stats.stderr,
        "mean {} vs expected bound {} (C_hat {c_hat})",
        stats.mean,
        expected.value
    );
    // pinned by the pre-build oracle run: mean per-code bound 0.814 at this
    // configuration (the C=1 envelope 0.78125 does not dominate here)
    assert!(
        (stats.mean - 0.814).abs() < 0.012,
        "mean {} outside the pinned window 0.814 +/- 0.012",
        stats.mean
    );
}

#[test]
fn data_processing_smoke() {
    // a lighter copy of the acceptance criterion, for cargo test runs
    let mut idx = 0u64;
    for trial in 0..20u64 {
        let in_dim = 2 + (trial % 3) as usize;
        let out_dim = 2 + (trial % 2) as usize;
        let env_dim = in_dim.div_ceil(out_dim).max(2);
        let alpha = [1.1, 1.5, 2.0][(trial % 3) as usize];
        idx += 1;
        let rho = random_full_rank(in_dim, 1000 + idx);
        let sigma = random_full_rank(in_dim, 2000 + idx);
        let v = haar_random_isometry(in_dim, out_dim * env_dim, 3000 + idx).unwrap();
        let push = |dm: &DensityMatrix| -> DensityMatrix {
            let big = dm.matrix().conjugate_by(&v);
            let layout = SubsystemLayout::new(vec![out_dim, env_dim]).unwrap();
            DensityMatrix::new(layout, big)
                .unwrap()
                .partial_trace(&[0])
                .unwrap()
        };
        let before = renyi_relative_entropy(&rho, sigma.matrix(), alpha).unwrap();
        let after = renyi_relative_entropy(&push(&rho), push(&sigma).matrix(), alpha).unwrap();
        assert!(
            before >= after - 1e-9,
            "data processing violated: {before} < {after}"
        );
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(48))]

    #[test]
    fn partial_trace_outputs_are_density_matrices(
        seed in 0u64..1_000_000,
        dims_pick in 0usize..4,
        keep_mask in 1usize..7,
    ) {
        let dims: Vec<usize> = match dims_pick {
            0 => vec![2, 2, 2],
            1 => vec![2, 3, 2],
            2 => vec![4, 2],
            _ => vec![2, 2, 4],
        };
        let layout = SubsystemLayout::new(dims.clone()).unwrap();
        let psi = haar_random_pure(&layout, seed);
        let keep: Vec<usize> = (0..dims.len()).filter(|i| (keep_mask >> i) & 1 == 1).collect();
        let reduced = psi.projector().partial_trace(&keep).unwrap();
        prop_assert!(reduced.validate_full().is_ok());
        // trace preserved within 1e-12
        prop_assert!((reduced.matrix().trace().re - 1.0).abs() < 1e-12);
        // matches the pure-state fast path
        let direct = psi.reduced(&keep).unwrap();
        prop_assert!(reduced.matrix().max_abs_diff(direct.matrix()) < 1e-10);
    }

    #[test]
    fn marginal_purity_matches_spectrum_sum(
        seed in 0u64..1_000_000,
        alpha in 1.0001f64..=2.0,
        subset_mask in 1usize..4,
    ) {
        let layout = SubsystemLayout::new(vec![2, 3, 2]).unwrap();
        let psi = haar_random_pure(&layout, seed);
        let subset: Vec<usize> = (0..3).filter(|i| (subset_mask >> i) & 1 == 1).collect();
        let purity = marginal_purity(&psi, &subset, alpha).unwrap();
        prop_assert!(purity > 0.0 && purity <= 1.0 + 1e-12);
        let spec = psi.reduced(&subset).unwrap().spectrum().unwrap();
        let direct: f64 = spec.iter().filter(|&&l| l > 1e-14).map(|&l| l.powf(alpha)).sum();
        prop_assert!((purity - direct).abs() < 1e-10);
    }

    #[test]
    fn schmidt_spectra_agree_on_random_bipartitions(
        seed in 0u64..1_000_000,
        mask in 1usize..7,
    ) {
        let layout = SubsystemLayout::new(vec![2, 2, 3]).unwrap();
        let psi = haar_random_pure(&layout, seed);
        let s: Vec<usize> = (0..3).filter(|i| (mask >> i) & 1 == 1).collect();
        let sc: Vec<usize> = (0..3).filter(|i| (mask >> i) & 1 == 0).collect();
        let spec_s = psi.reduced(&s).unwrap().spectrum().unwrap();
        let spec_sc = psi.reduced(&sc).unwrap().spectrum().unwrap();
        let k = spec_s.len().min(spec_sc.len());
        for i in 0..k {
            prop_assert!((spec_s[i] - spec_sc[i]).abs() < 1e-10);
        }
        for &l in spec_s.iter().skip(k).chain(spec_sc.iter().skip(k)) {
            prop_assert!(l.abs() < 1e-10);
        }
    }

    #[test]
    fn closed_form_tracks_direct_on_random_small_codes(
        seed in 0u64..1_000_000,
        p in 0.0f64..=1.0,
        alpha in 1.05f64..=2.0,
    ) {
        let layout = SubsystemLayout::new(vec![2, 2, 2]).unwrap();
        let psi = haar_random_pure(&layout, seed);
        let params = ErasureParams::new(p, 2).unwrap();
        let closed = erasure_converse::bounds::erasure_renyi_closed_form(&psi, &params, alpha).unwrap();
        let direct = erasure_converse::renyi::renyi_coherent_info_direct(&psi, &params, 2, alpha).unwrap();
        prop_assert!((closed - direct).abs() < 1e-8, "closed {} direct {}", closed, direct);
    }
}

#[test]
fn reduced_states_of_branches_satisfy_invariants() {
    let layout = SubsystemLayout::new(vec![4, 2, 2]).unwrap();
    let params = ErasureParams::new(0.4, 2).unwrap();
    for seed in 0..4 {
        let psi = haar_random_pure(&layout, seed);
        let branches = branch_decompose(&psi, &params).unwrap();
        for e in branches.entries() {
            e.state.validate_full().unwrap();
        }
        let total: f64 = branches.entries().iter().map(|e| e.probability).sum();
        assert!((total - 1.0).abs() < 1e-10);
    }
}

#[test]
fn lipschitz_example_pair_and_self_pair() {
    // phi1 = phi2 excluded from the max by the denominator guard
    let code = CodeParams::from_m(1, 2).unwrap();
    let params = ErasureParams::new(0.0, 2).unwrap();
    let max = erasure_converse::ensemble::lipschitz_audit(10, &code, &params, 3, 5).unwrap();
    assert!(max <= 2.0 + 1e-8);
}

#[test]
fn fidelity_bound_respects_oracle_on_bell_states() {
    // the central chain on the hand-checkable instance
    let bell: PureState = erasure_converse::states::maximally_entangled(2).unwrap();
    let code = CodeParams::from_m(1, 2).unwrap();
    for p in [0.25, 0.5, 0.75] {
        let params = ErasureParams::new(p, 2).unwrap();
        let f = optimal_code_fidelity(&bell, &code, &params, 1e-6).unwrap();
        for alpha in [1.1, 1.5, 2.0] {
            let b = fidelity_upper_bound(&bell, &code, &params, alpha).unwrap();
            assert!(
                f <= b.value + 1e-6,
                "p={p} alpha={alpha}: {f} vs {}",
                b.value
            );
        }
    }
}
