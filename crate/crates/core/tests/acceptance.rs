//! Acceptance suite: one pass/fail line per criterion, nonzero exit if any
//! criterion fails. Every tolerance is pinned here, in code.
//!
//! Expected values marked "pinned" were computed before this crate was
//! built, with an independent implementation (numpy Monte Carlo and a
//! prototype of the decoder SDP) plus closed forms where they exist.

use std::time::Instant;

use erasure_converse::bounds::{
    classical_renyi_term, classical_success_bound, erasure_renyi_closed_form, fidelity_upper_bound,
    optimize_exponent, renyi_capacity_term, CodeParams, ConstantEstimates,
};
use erasure_converse::ensemble::{
    estimate_opnorm_constant, lipschitz_audit, run_code_ensemble, EnsembleConfig,
};
use erasure_converse::erasure::{branch_decompose, quantum_capacity, ErasureParams};
use erasure_converse::oracle::{
    optimal_classical_success, optimal_code_fidelity, pure_branch_fidelity, solve_max_entanglement,
};
use erasure_converse::renyi::{renyi_coherent_info_direct, renyi_relative_entropy};
use erasure_converse::rng::{child_seed, SplitMix64};
use erasure_converse::states::{
    haar_random_isometry, haar_random_pure, maximally_entangled, DensityMatrix, PureState,
    SubsystemLayout,
};

type Check = fn() -> Result<String, String>;

fn code_instances() -> Vec<(usize, u64)> {
    let mut v = Vec::new();
    for n in 1..=3usize {
        for m in [2u64, 4] {
            v.push((n, m));
        }
    }
    v
}

fn haar_code(n: usize, m: u64, idx: u64) -> PureState {
    let layout = SubsystemLayout::code_layout(m as usize, 2, n).unwrap();
    haar_random_pure(
        &layout,
        child_seed(0xACCE97, (n as u64) << 32 | m << 16 | idx),
    )
}

/// 1. Closed-form pattern sum equals the direct full-output divergence.
fn criterion_closed_form_equivalence() -> Result<String, String> {
    let alphas = [1.1, 1.5, 2.0];
    let mut worst = 0.0f64;
    for (n, m) in code_instances() {
        for idx in 0..20u64 {
            let psi = haar_code(n, m, idx);
            for p in [0.25, 0.5, 0.75] {
                let params = ErasureParams::new(p, 2).map_err(|e| e.to_string())?;
                for &alpha in &alphas {
                    let closed = erasure_renyi_closed_form(&psi, &params, alpha)
                        .map_err(|e| e.to_string())?;
                    let direct = renyi_coherent_info_direct(&psi, &params, n, alpha)
                        .map_err(|e| e.to_string())?;
                    worst = worst.max((closed - direct).abs());
                }
            }
        }
    }
    if worst <= 1e-8 {
        Ok(format!("max |closed - direct| = {worst:.2e}"))
    } else {
        Err(format!("max |closed - direct| = {worst:.2e} > 1e-8"))
    }
}

/// 2. Oracle fidelity never exceeds the bound; every branch SDP certified.
fn criterion_bound_validity() -> Result<String, String> {
    let alphas = [1.1, 1.5, 2.0];
    let tol = 1e-6;
    let mut worst_slack = f64::INFINITY;
    let mut max_gap = 0.0f64;
    for (n, m) in code_instances() {
        let code = CodeParams::from_m(n, m).unwrap();
        for idx in 0..20u64 {
            let psi = haar_code(n, m, idx);
            for p in [0.25, 0.5, 0.75] {
                let params = ErasureParams::new(p, 2).unwrap();
                // per-branch solve with explicit certificates
                let branches = branch_decompose(&psi, &params).map_err(|e| e.to_string())?;
                let mut f_opt = 0.0f64;
                for entry in branches.entries() {
                    if entry.probability == 0.0 {
                        continue;
                    }
                    let sol = solve_max_entanglement(&entry.state, m as usize, tol)
                        .map_err(|e| e.to_string())?;
                    max_gap = max_gap.max(sol.gap());
                    if sol.gap() > tol {
                        return Err(format!("branch duality gap {} > {tol}", sol.gap()));
                    }
                    f_opt += entry.probability * sol.primal;
                }
                // cross-check the packaged oracle path
                let packaged =
                    optimal_code_fidelity(&psi, &code, &params, tol).map_err(|e| e.to_string())?;
                if (packaged - f_opt).abs() > 1e-9 {
                    return Err(format!("oracle path mismatch: {packaged} vs {f_opt}"));
                }
                let min_bound = alphas
                    .iter()
                    .map(|&a| fidelity_upper_bound(&psi, &code, &params, a).unwrap().value)
                    .fold(f64::INFINITY, f64::min);
                if f_opt > min_bound + 1e-6 {
                    return Err(format!(
                        "F_opt {f_opt} exceeds bound {min_bound} (n={n} m={m} p={p})"
                    ));
                }
                worst_slack = worst_slack.min(min_bound - f_opt);
            }
        }
    }
    Ok(format!(
        "360 codes: min bound slack {worst_slack:.4}, max SDP gap {max_gap:.2e}"
    ))
}

/// 3. Hand values on the n=1 Bell code and the classical oracle.
fn criterion_hand_values() -> Result<String, String> {
    let bell = maximally_entangled(2).unwrap();
    let code = CodeParams::from_m(1, 2).unwrap();
    let params = ErasureParams::new(0.5, 2).unwrap();
    let bound = fidelity_upper_bound(&bell, &code, &params, 2.0)
        .unwrap()
        .value;
    let want_bound = 0.625f64.sqrt(); // 0.790569415...
    if (bound - want_bound).abs() > 1e-6 {
        return Err(format!("bound {bound} vs {want_bound}"));
    }
    let fid = optimal_code_fidelity(&bell, &code, &params, 1e-6).unwrap();
    if (fid - 0.625).abs() > 1e-5 {
        return Err(format!("oracle fidelity {fid} vs 0.625"));
    }
    // classical: exact closed form sqrt(3)/2 (pinned; see ledger re 0.866122)
    let cbound = classical_success_bound(&code, &params, 2.0).unwrap().value;
    let want_cbound = 0.75f64.sqrt();
    if (cbound - want_cbound).abs() > 1e-6 {
        return Err(format!("classical bound {cbound} vs {want_cbound}"));
    }
    let ml = optimal_classical_success(&code, &params).unwrap();
    if (ml - 0.75).abs() > 1e-12 {
        return Err(format!("ML success {ml} vs 0.75"));
    }
    Ok(format!(
        "bound {bound:.9}, F_opt {fid:.6}, classical {cbound:.9}, ML {ml}"
    ))
}

/// 4. Both Rényi terms converge to their capacities as alpha -> 1.
fn criterion_capacity_limits() -> Result<String, String> {
    let alpha = 1.0 + 1e-4;
    let mut worst = 0.0f64;
    for d in [2usize, 3, 4] {
        for i in 1..=9 {
            let p = i as f64 / 10.0;
            let params = ErasureParams::new(p, d).unwrap();
            let g = renyi_capacity_term(&params, alpha).unwrap();
            let q_lim = (1.0 - 2.0 * p) * (d as f64).log2();
            let c = classical_renyi_term(&params, alpha).unwrap();
            let c_lim = (1.0 - p) * (d as f64).log2();
            worst = worst.max((g - q_lim).abs()).max((c - c_lim).abs());
        }
    }
    if worst <= 2e-3 {
        Ok(format!("max deviation {worst:.2e} at alpha = 1 + 1e-4"))
    } else {
        Err(format!("max deviation {worst:.2e} > 2e-3"))
    }
}

/// 5. Exponent sign flips across the capacity with a 0.05 margin at n=100.
fn criterion_exponent_sign() -> Result<String, String> {
    let consts = ConstantEstimates::default();
    let n = 100usize;
    let mut checked = 0usize;
    for d in [2usize, 3, 4] {
        for i in 1..=9 {
            let p = i as f64 / 10.0;
            let params = ErasureParams::new(p, d).unwrap();
            let cap = quantum_capacity(&params);
            let code_hi = CodeParams::new(n, cap + 0.05).unwrap();
            if code_hi.rate_eff() >= cap + 0.05 - 1e-9 {
                let prof = optimize_exponent(&code_hi, &params, &consts, 64).unwrap();
                if prof.best_exponent <= 0.0 {
                    return Err(format!(
                        "best exponent {} not positive at p={p} d={d} rate {}",
                        prof.best_exponent,
                        code_hi.rate_eff()
                    ));
                }
                checked += 1;
            }
            if cap - 0.05 >= 0.02 {
                let code_lo = CodeParams::new(n, cap - 0.05).unwrap();
                // floor only lowers the effective rate, keeping the margin
                let prof = optimize_exponent(&code_lo, &params, &consts, 64).unwrap();
                if prof.best_exponent > 1e-9 {
                    return Err(format!(
                        "best exponent {} positive below capacity at p={p} d={d}",
                        prof.best_exponent
                    ));
                }
                checked += 1;
            }
        }
    }
    Ok(format!("{checked} (p, d, rate) sign checks"))
}

/// 6. SDP against the Schmidt closed form on random purified spectra.
fn criterion_sdp_vs_schmidt() -> Result<String, String> {
    let mut rng = SplitMix64::new(0x5D9);
    let mut worst = 0.0f64;
    for trial in 0..100 {
        let m = [2usize, 4][trial % 2];
        // random simplex spectrum of length m
        let mut lam: Vec<f64> = (0..m).map(|_| -rng.next_unit_open().ln()).collect();
        let total: f64 = lam.iter().sum();
        for l in lam.iter_mut() {
            *l /= total;
        }
        let mut amps = vec![num_complex::Complex64::new(0.0, 0.0); m * m];
        for (j, &l) in lam.iter().enumerate() {
            amps[j * m + j] = num_complex::Complex64::new(l.sqrt(), 0.0);
        }
        let layout = SubsystemLayout::new(vec![m, m]).unwrap();
        let psi = PureState::new(layout, amps).unwrap();
        let sol = solve_max_entanglement(&psi.projector(), m, 1e-6).map_err(|e| e.to_string())?;
        let closed = pure_branch_fidelity(&lam, m).unwrap();
        worst = worst.max((sol.primal - closed).abs());
    }
    if worst <= 1e-5 {
        Ok(format!("100 spectra: max |sdp - closed| = {worst:.2e}"))
    } else {
        Err(format!("max |sdp - closed| = {worst:.2e} > 1e-5"))
    }
}

/// 7. Ensemble decay audit (pinned by the pre-build oracle run; see ledger).
fn criterion_ensemble_decay() -> Result<String, String> {
    let params = ErasureParams::new(0.5, 2).unwrap();
    let mut means = Vec::new();
    for n in 1..=6usize {
        let code = CodeParams::new(n, 0.5).unwrap();
        let cfg = EnsembleConfig::new(2000, 2026, code, params, vec![2.0])
            .unwrap()
            .with_threads(4);
        let report = run_code_ensemble(&cfg).unwrap();
        means.push(report.per_alpha[0].mean);
    }
    // reproducibility: rerun one config and compare bits
    let code = CodeParams::new(2, 0.5).unwrap();
    let cfg = EnsembleConfig::new(2000, 2026, code, params, vec![2.0])
        .unwrap()
        .with_threads(4);
    let again = run_code_ensemble(&cfg).unwrap().per_alpha[0].mean;
    let reproducible = again.to_bits() == means[1].to_bits();

    // least-squares slope of log2(mean) against n
    let ys: Vec<f64> = means.iter().map(|m| m.log2()).collect();
    let xbar = 3.5;
    let ybar: f64 = ys.iter().sum::<f64>() / 6.0;
    let num: f64 = ys
        .iter()
        .enumerate()
        .map(|(i, y)| ((i + 1) as f64 - xbar) * (y - ybar))
        .sum();
    let slope = num / 17.5;
    let slope_ok = (-0.080..=-0.055).contains(&slope);
    let monotone = means.windows(2).all(|w| w[0] > w[1]);

    let detail = format!(
        "means {:?}, slope {slope:.4} (pinned window [-0.080, -0.055]), monotone {monotone}, reproducible {reproducible}",
        means.iter().map(|m| (m * 1e4).round() / 1e4).collect::<Vec<_>>()
    );
    if monotone && slope_ok && reproducible {
        Ok(detail)
    } else {
        Err(detail)
    }
}

/// 8. Operator-norm constant at (2,2) and its d_S sweep.
fn criterion_opnorm_constant() -> Result<String, String> {
    let est = estimate_opnorm_constant(2, 2, 100_000, 8).unwrap();
    if (est - 1.75).abs() > 0.02 {
        return Err(format!("estimate {est} outside 1.75 +/- 0.02"));
    }
    let mut sweep = Vec::new();
    for d_s in [2usize, 8, 32, 128] {
        sweep.push(estimate_opnorm_constant(2, d_s, 20_000, 9).unwrap());
    }
    for w in sweep.windows(2) {
        if w[1] > w[0] + 0.01 {
            return Err(format!("sweep not nonincreasing: {sweep:?}"));
        }
    }
    Ok(format!("estimate(2,2) = {est:.4}, sweep {sweep:?}"))
}

/// 9. Data-processing inequality over random states, channels, and orders.
fn criterion_data_processing() -> Result<String, String> {
    let mut rng = SplitMix64::new(0xDA7A);
    let mut worst = f64::NEG_INFINITY;
    let mut done = 0usize;
    let mut trial = 0u64;
    while done < 150 {
        trial += 1;
        let in_dim = 2 + (rng.next_u64() % 3) as usize; // 2..4
        let out_dim = 2 + (rng.next_u64() % 2) as usize; // 2..3
        let env_dim = 2 + (rng.next_u64() % 2) as usize; // 2..3
        if out_dim * env_dim < in_dim {
            continue;
        }
        let alpha = [1.1, 1.5, 2.0][(rng.next_u64() % 3) as usize];
        let mk = |seed: u64| -> DensityMatrix {
            let mut g = SplitMix64::new(seed);
            let mat = erasure_converse::linalg::CMatrix::from_fn(in_dim, in_dim, |_, _| {
                num_complex::Complex64::new(g.next_gaussian(), g.next_gaussian())
            });
            let gg = mat.matmul(&mat.adjoint());
            let tr = gg.trace().re;
            DensityMatrix::new(
                SubsystemLayout::new(vec![in_dim]).unwrap(),
                gg.scale(1.0 / tr),
            )
            .unwrap()
        };
        let rho = mk(trial * 31 + 1);
        let sigma = mk(trial * 31 + 2);
        let v = haar_random_isometry(in_dim, out_dim * env_dim, trial * 31 + 3).unwrap();
        let push = |dm: &DensityMatrix| -> DensityMatrix {
            let big = dm.matrix().conjugate_by(&v);
            DensityMatrix::new(SubsystemLayout::new(vec![out_dim, env_dim]).unwrap(), big)
                .unwrap()
                .partial_trace(&[0])
                .unwrap()
        };
        let before = renyi_relative_entropy(&rho, sigma.matrix(), alpha).unwrap();
        let after = renyi_relative_entropy(&push(&rho), push(&sigma).matrix(), alpha).unwrap();
        worst = worst.max(after - before);
        if after - before > 1e-9 {
            return Err(format!(
                "violation {:.3e} at trial {trial} (in {in_dim} out {out_dim} alpha {alpha})",
                after - before
            ));
        }
        done += 1;
    }
    Ok(format!("150 triples, max (after - before) = {worst:.2e}"))
}

/// 10. Lipschitz ratio of the decoded fidelity over Haar pairs.
fn criterion_lipschitz() -> Result<String, String> {
    let code = CodeParams::from_m(1, 2).unwrap();
    let params = ErasureParams::new(0.5, 2).unwrap();
    let max = lipschitz_audit(100, &code, &params, 0xDEC0DE, 0x11F5).unwrap();
    if max <= 2.0 + 1e-8 {
        Ok(format!("max ratio {max:.4} <= 2"))
    } else {
        Err(format!("max ratio {max} exceeds 2 + 1e-8"))
    }
}

fn main() {
    let criteria: Vec<(&str, f64, Check)> = vec![
        (
            "closed-form-equivalence",
            30.0,
            criterion_closed_form_equivalence,
        ),
        ("bound-validity", 300.0, criterion_bound_validity),
        ("hand-value-reproduction", 60.0, criterion_hand_values),
        ("capacity-limits", 1.0, criterion_capacity_limits),
        ("exponent-sign", 5.0, criterion_exponent_sign),
        ("sdp-vs-schmidt", 120.0, criterion_sdp_vs_schmidt),
        ("ensemble-decay", 600.0, criterion_ensemble_decay),
        ("opnorm-constant", 300.0, criterion_opnorm_constant),
        ("data-processing", 120.0, criterion_data_processing),
        ("lipschitz-audit", 300.0, criterion_lipschitz),
    ];
    let mut failures = 0usize;
    for (i, (name, budget_secs, check)) in criteria.iter().enumerate() {
        let start = Instant::now();
        let outcome = check();
        let elapsed = start.elapsed().as_secs_f64();
        let within_budget = elapsed < *budget_secs;
        match (outcome, within_budget) {
            (Ok(detail), true) => {
                println!(
                    "criterion {:02} {name}: PASS ({detail}) [{elapsed:.1}s]",
                    i + 1
                );
            }
            (Ok(detail), false) => {
                failures += 1;
                println!(
                    "criterion {:02} {name}: FAIL (over runtime budget {budget_secs}s; {detail}) [{elapsed:.1}s]",
                    i + 1
                );
            }
            (Err(detail), _) => {
                failures += 1;
                println!(
                    "criterion {:02} {name}: FAIL ({detail}) [{elapsed:.1}s]",
                    i + 1
                );
            }
        }
    }
    if failures > 0 {
        println!(
            "acceptance: {failures} of {} criteria failed",
            criteria.len()
        );
        std::process::exit(1);
    }
    println!("acceptance: all {} criteria passed", criteria.len());
}
