//! Acceptance suite: one test per criterion, each printing a PASS line
//! with its key numbers (visible under `--nocapture`). Every tolerance is
//! pinned here; a `violated` verdict on any seeded case fails the suite.

use std::time::Instant;

use icm_core::bounds::{
    verify, verify_lemma_a1, verify_moment_bound, BoundId, BoundSpec, Verdict, VerifyMode,
};
use icm_core::complexity::{index_of_resolvability, FamilyCover};
use icm_core::divergence::{renyi_divergence, rho_divergence};
use icm_core::estimator::{empirical_risk, gibbs_posterior, FeasibleSet};
use icm_core::experiments::{run_counterexample, run_parametric_rate_demo, CounterexampleConfig};
use icm_core::hull::{
    block_mixture_product_divergence, block_mixture_product_kl, inf_kl_over_hull,
    inf_renyi_over_hull, max_power_mean_over_hull, sup_kl_over_hull, sup_renyi_over_hull,
};
use icm_core::math::log_sum_exp;
use icm_core::model::{log_likelihood, sample_dataset, Density, ModelFamily};
use icm_core::rng::{CounterRng, RngSpec};
use icm_core::synth;

const FAMILY_FIXTURE: &str = include_str!("fixtures/family.json");

/// Seeded M = 6, N = 10 family with a random truth, as used by the Monte
/// Carlo criteria.
fn acceptance_family(idx: u64) -> (ModelFamily, Density) {
    let mut rng = CounterRng::new(RngSpec::new(0xACCE97, idx));
    let family = synth::random_family(&mut rng, 6, 10);
    let q = synth::random_density(&mut rng, 6);
    (family, q)
}

fn small_fixture() -> (ModelFamily, Density) {
    let loaded = icm_core::io::parse_family(FAMILY_FIXTURE).unwrap();
    let q = loaded.truth.clone().unwrap();
    (loaded.family, q)
}

#[test]
fn criterion_01_counterexample_probability_and_resolvability() {
    let start = Instant::now();
    let report = run_counterexample(&CounterexampleConfig {
        n: 8,
        m: 128,
        replicates: 2000,
        rng: RngSpec::new(7, 0),
    })
    .unwrap();
    let bound = (-0.5f64).exp();
    let se_at_bound = (bound * (1.0 - bound) / 2000.0).sqrt();
    assert!(
        report.empirical_prob <= bound + 3.0 * se_at_bound,
        "recovery frequency {} above {} + {}",
        report.empirical_prob,
        bound,
        3.0 * se_at_bound
    );
    assert_eq!(report.resolvability, 4.0f64.ln() / 8.0);
    assert_eq!(report.event_agreement, 2000);
    assert!(report.feasibility_ratio >= 0.5);
    let elapsed = start.elapsed();
    assert!(elapsed.as_secs() < 60, "took {elapsed:?}");
    println!(
        "[acceptance] criterion 01 (counterexample): PASS — empirical {:.4} <= {:.4}, resolvability ln4/8, {:?}",
        report.empirical_prob,
        bound + 3.0 * se_at_bound,
        elapsed
    );
}

#[test]
fn criterion_02_divergence_inequality_suite() {
    let start = Instant::now();
    let mut rng = CounterRng::new(RngSpec::new(0xD17, 0));
    let rhos: Vec<f64> = (1..10).map(|i| i as f64 / 10.0).collect();
    let tol = 1e-9;
    let mut skipped_upper = 0usize;
    for case in 0..10_000 {
        let m = 2 + rng.below(7) as usize;
        let (q, p) = if case % 100 == 99 {
            // Disjoint supports: the Rényi side is infinite and the upper
            // sandwich clause is vacuous.
            disjoint_pair(&mut rng, m)
        } else {
            (
                random_density_with_zeros(&mut rng, m),
                random_density_with_zeros(&mut rng, m),
            )
        };
        let half = rho_divergence(&q, &p, 0.5).unwrap();
        for &rho in &rhos {
            let dr = rho_divergence(&q, &p, rho).unwrap();
            let re = renyi_divergence(&q, &p, rho).unwrap();
            assert!(dr <= re + tol, "case {case} rho {rho}: {dr} > {re}");
            let denom = 1.0 - rho * (1.0 - rho) * dr;
            if denom > 0.0 && re.is_finite() {
                assert!(
                    re <= dr / denom + tol,
                    "case {case} rho {rho}: {re} > {}",
                    dr / denom
                );
            } else {
                skipped_upper += 1;
            }
            assert!(
                rho.max(1.0 - rho) * dr >= 0.5 * half - tol,
                "case {case} rho {rho}: equivalence upper"
            );
            assert!(
                rho.min(1.0 - rho) * dr <= 0.5 * half + tol,
                "case {case} rho {rho}: equivalence lower"
            );
        }
    }
    let elapsed = start.elapsed();
    assert!(elapsed.as_secs() < 10, "took {elapsed:?}");
    println!(
        "[acceptance] criterion 02 (divergence inequalities): PASS — 10^4 pairs x 9 rho, {skipped_upper} vacuous upper clauses, {elapsed:?}"
    );
}

fn disjoint_pair(rng: &mut CounterRng, m: usize) -> (Density, Density) {
    let cut = 1 + rng.below((m - 1) as u64) as usize;
    let left = synth::random_simplex(rng, cut);
    let right = synth::random_simplex(rng, m - cut);
    let mut q = vec![0.0; m];
    let mut p = vec![0.0; m];
    q[..cut].copy_from_slice(&left);
    p[cut..].copy_from_slice(&right);
    (Density::new(q).unwrap(), Density::new(p).unwrap())
}

fn random_density_with_zeros(rng: &mut CounterRng, m: usize) -> Density {
    let mut mass: Vec<f64> = (0..m).map(|_| -rng.next_f64_open().ln()).collect();
    for v in mass.iter_mut().skip(1) {
        if rng.next_f64() < 0.15 {
            *v = 0.0;
        }
    }
    let sum: f64 = mass.iter().sum();
    for v in &mut mass {
        *v /= sum;
    }
    Density::new(mass).unwrap()
}

#[test]
fn criterion_03_gibbs_risk_identity_and_optimality() {
    let mut rng = CounterRng::new(RngSpec::new(0x9155, 0));
    for case in 0..100u64 {
        let m = 3 + rng.below(4) as usize;
        let n_models = 3 + rng.below(6) as usize;
        let family = synth::random_family(&mut rng, m, n_models);
        let q = synth::random_density(&mut rng, m);
        let n = 5 + rng.below(26) as usize;
        let lambda = 0.3 + 3.7 * rng.next_f64();
        let data = sample_dataset(&q, n, RngSpec::new(0x9155, 1).substream(case));

        let post = gibbs_posterior(&family, &data, 1.0 / lambda).unwrap();
        let risk = empirical_risk(&family, &data, &post, &q, lambda);

        // Closed form: −(λ/n) ln E_π exp((1/λ) Σ_i ln(p(X_i|θ)/q(X_i))).
        let log_q: f64 = data.samples().iter().map(|&x| q.at(x).ln()).sum();
        let scores: Vec<f64> = (0..family.len())
            .map(|j| family.prior()[j].ln() + (log_likelihood(&family, j, &data) - log_q) / lambda)
            .collect();
        let closed_form = -lambda / n as f64 * log_sum_exp(&scores);
        assert!(
            (risk - closed_form).abs() <= 1e-9,
            "case {case}: identity gap {}",
            (risk - closed_form).abs()
        );

        for _ in 0..100 {
            let w =
                icm_core::PosteriorWeights::new(synth::random_simplex(&mut rng, n_models)).unwrap();
            let at_w = empirical_risk(&family, &data, &w, &q, lambda);
            assert!(risk <= at_w + 1e-12, "case {case}: optimality");
        }
    }
    println!(
        "[acceptance] criterion 03 (tempered-posterior risk identity): PASS — 100 triples x 100 competitors"
    );
}

#[test]
fn criterion_04_master_inequality_exact_enumeration() {
    let (family, q) = small_fixture();
    for (alpha, beta) in [(1.0, 1.0), (0.5, 1.0), (0.25, 0.5)] {
        let report = verify_moment_bound(
            &family,
            &q,
            0.5,
            1.0,
            FeasibleSet::FullSimplex,
            3,
            alpha,
            beta,
        )
        .unwrap();
        assert_eq!(report.replicates, 27);
        assert!(
            report.slack >= -1e-10,
            "moment form (alpha {alpha}, beta {beta}): slack {}",
            report.slack
        );
    }
    // Expectation form at alpha = beta = 1: E_X of the statistic <= 0.
    for feasible in [FeasibleSet::FullSimplex, FeasibleSet::PointMasses] {
        let mut spec = BoundSpec::new(BoundId::Thm21Exp, feasible, 3);
        spec.lambda = Some(1.0);
        spec.rho = Some(0.5);
        spec.alpha = Some(1.0);
        spec.beta = Some(1.0);
        let report = verify(&spec, &family, &q, 0, RngSpec::new(4, 0), None).unwrap();
        assert_eq!(report.mode, VerifyMode::Exact);
        assert_eq!(report.rhs, 0.0);
        assert!(report.lhs <= 0.0, "expectation form: {}", report.lhs);
    }
    println!(
        "[acceptance] criterion 04 (master inequality, 27 datasets): PASS — 3 moment pairs + expectation form"
    );
}

const LAMBDAS: [f64; 3] = [1.5, 2.0, 4.0];
const SAMPLE_SIZES: [usize; 2] = [10, 50];
const FAMILIES: u64 = 20;
const REPS: usize = 1000;

#[test]
fn criterion_05_global_bounds_monte_carlo() {
    let mut cell = 0u64;
    let mut worst = f64::INFINITY;
    for idx in 0..FAMILIES {
        let (family, q) = acceptance_family(idx);
        for lambda in LAMBDAS {
            for n in SAMPLE_SIZES {
                for token in ["thm4.1", "thm5.1"] {
                    let mut spec = BoundSpec::from_token(token, n).unwrap();
                    spec.lambda = Some(lambda);
                    let report = verify(
                        &spec,
                        &family,
                        &q,
                        REPS,
                        RngSpec::new(0xC5, 0).substream(cell),
                        Some(VerifyMode::MonteCarlo),
                    )
                    .unwrap();
                    cell += 1;
                    assert_ne!(
                        report.verdict,
                        Verdict::Violated,
                        "family {idx} {token} lambda {lambda} n {n}: slack {} se {}",
                        report.slack,
                        report.lhs_se
                    );
                    worst = worst.min(report.slack / report.lhs_se.max(1e-300));
                }
            }
        }
    }
    println!(
        "[acceptance] criterion 05 (global bounds, {cell} cells x {REPS} reps): PASS — worst slack {worst:.1} se"
    );
}

#[test]
fn criterion_06_localized_bound_dominates_and_holds() {
    let mut cell = 0u64;
    for idx in 0..FAMILIES {
        let (family, q) = acceptance_family(idx);
        for lambda in LAMBDAS {
            for n in SAMPLE_SIZES {
                let localized =
                    icm_core::bounds::rhs_localized(&family, &q, lambda, n, 0.5).unwrap();
                let rho = 1.0 / lambda;
                let global = 2.0 / (1.0 - rho) * index_of_resolvability(&family, &q, lambda, n);
                assert!(
                    localized <= global + 1e-12,
                    "family {idx} lambda {lambda} n {n}: localized {localized} > global {global}"
                );
                let mut spec = BoundSpec::from_token("thm4.2", n).unwrap();
                spec.lambda = Some(lambda);
                let report = verify(
                    &spec,
                    &family,
                    &q,
                    REPS,
                    RngSpec::new(0xC6, 0).substream(cell),
                    Some(VerifyMode::MonteCarlo),
                )
                .unwrap();
                cell += 1;
                assert_ne!(
                    report.verdict,
                    Verdict::Violated,
                    "family {idx} lambda {lambda} n {n}"
                );
            }
        }
    }
    println!(
        "[acceptance] criterion 06 (localized refinement, {cell} cells): PASS — localized rhs <= global rhs everywhere"
    );
}

fn three_block_partition(n_models: usize, rng: &mut CounterRng) -> FamilyCover {
    let mut order: Vec<usize> = (0..n_models).collect();
    for i in 0..n_models {
        let j = i + rng.below((n_models - i) as u64) as usize;
        order.swap(i, j);
    }
    let third = n_models / 3;
    let blocks = vec![
        order[..third].to_vec(),
        order[third..2 * third].to_vec(),
        order[2 * third..].to_vec(),
    ];
    FamilyCover::new(blocks, n_models).unwrap()
}

#[test]
fn criterion_07_unit_lambda_bounds() {
    let mut cell = 0u64;
    let mut cover_rng = CounterRng::new(RngSpec::new(0xC07E, 0));
    for idx in 0..FAMILIES {
        let (family, q) = acceptance_family(idx);
        let cover = three_block_partition(family.len(), &mut cover_rng);
        for gamma in [1.0, 2.0] {
            for n in SAMPLE_SIZES {
                // Model selection with the singleton cover.
                let mut spec = BoundSpec::from_token("thm4.3", n).unwrap();
                spec.rho = Some(0.5);
                spec.gamma = Some(gamma);
                let report = verify(
                    &spec,
                    &family,
                    &q,
                    REPS,
                    RngSpec::new(0xC7, 0).substream(cell),
                    Some(VerifyMode::MonteCarlo),
                )
                .unwrap();
                cell += 1;
                assert_ne!(report.verdict, Verdict::Violated, "thm4.3 family {idx}");

                // Standard posterior with a random 3-block cover.
                let mut spec = BoundSpec::from_token("thm5.2", n).unwrap();
                spec.rho = Some(0.5);
                spec.gamma = Some(gamma);
                spec.cover = Some(cover.clone());
                let report = verify(
                    &spec,
                    &family,
                    &q,
                    REPS,
                    RngSpec::new(0xC7, 1).substream(cell),
                    Some(VerifyMode::MonteCarlo),
                )
                .unwrap();
                cell += 1;
                assert_ne!(report.verdict, Verdict::Violated, "thm5.2 family {idx}");
            }
        }
    }
    println!(
        "[acceptance] criterion 07 (lambda = 1 bounds, {cell} cells): PASS — singleton and 3-block covers"
    );
}

#[test]
fn criterion_08_weak_convergence() {
    let n = 50;
    for idx in 0..FAMILIES {
        let (family, q) = acceptance_family(idx);
        for token in ["thm3.2", "thm4.4"] {
            let spec = BoundSpec::from_token(token, n).unwrap();
            // 50 random draws plus all sign vectors; the report carries the
            // worst function.
            let report = verify(
                &spec,
                &family,
                &q,
                400,
                RngSpec::new(0xC8, 0).substream(idx),
                Some(VerifyMode::MonteCarlo),
            )
            .unwrap();
            assert_ne!(
                report.verdict,
                Verdict::Violated,
                "{token} family {idx}: worst deviation {} vs {} (se {})",
                report.lhs,
                report.rhs,
                report.lhs_se
            );
        }
    }
    println!(
        "[acceptance] criterion 08 (weak convergence, {FAMILIES} families x 2 estimators x 114 functions): PASS"
    );
}

#[test]
fn criterion_09_risk_lower_bounds_exact() {
    let mut families = vec![small_fixture()];
    let mut rng = CounterRng::new(RngSpec::new(0xC9, 0));
    for _ in 0..2 {
        let family = synth::random_family(&mut rng, 3, 5);
        let q = synth::random_density(&mut rng, 3);
        families.push((family, q));
    }
    let n = 2;
    for (f_idx, (family, q)) in families.iter().enumerate() {
        for lambda_prime in [1.0, 2.0] {
            for feasible in [FeasibleSet::FullSimplex, FeasibleSet::PointMasses] {
                let report = verify_lemma_a1(
                    family,
                    q,
                    lambda_prime,
                    n,
                    feasible,
                    0,
                    RngSpec::new(0xC9, 1),
                    None,
                )
                .unwrap();
                assert_eq!(report.mode, VerifyMode::Exact);
                assert!(
                    report.lhs >= -1e-12,
                    "family {f_idx}: lower bound {}",
                    report.lhs
                );
                assert!(
                    report.slack >= -1e-9,
                    "family {f_idx} lambda' {lambda_prime}: slack {}",
                    report.slack
                );
            }
        }
        // Cover form with random two-block partitions.
        for lambda_prime in [0.0, 0.5, 1.0] {
            let cut = 1 + rng.below((family.len() - 1) as u64) as usize;
            let blocks = vec![(0..cut).collect::<Vec<_>>(), (cut..family.len()).collect()];
            let mut spec = BoundSpec::new(BoundId::LemmaA2, FeasibleSet::FullSimplex, n);
            spec.lambda = Some(lambda_prime);
            spec.cover = Some(FamilyCover::new(blocks, family.len()).unwrap());
            let report = verify(&spec, family, q, 0, RngSpec::new(0xC9, 2), None).unwrap();
            assert_eq!(report.mode, VerifyMode::Exact);
            assert!(
                report.slack >= -1e-9,
                "family {f_idx} lambda' {lambda_prime}: cover-form slack {}",
                report.slack
            );
        }
    }
    println!(
        "[acceptance] criterion 09 (risk lower bounds, exact 9-dataset enumeration): PASS — 3 families"
    );
}

#[test]
fn criterion_10_hull_sandwich_and_grid_oracle() {
    let mut rng = CounterRng::new(RngSpec::new(0xCA, 0));
    let families = [
        synth::random_family(&mut rng, 4, 4),
        synth::random_family(&mut rng, 4, 4),
        synth::random_family(&mut rng, 3, 4),
    ];
    let rho = 0.5;
    let mut blocks_checked = 0usize;
    for family in &families {
        let q = synth::random_density(&mut rng, family.space().size());
        let all_blocks = subsets_up_to_three(family.len());
        for block in &all_blocks {
            let members = family.gather(block);
            let lo = inf_renyi_over_hull(&q, &members, rho).unwrap();
            let hi = sup_renyi_over_hull(&q, &members, rho).unwrap();
            let lo_kl = inf_kl_over_hull(&q, &members).unwrap();
            let hi_kl = sup_kl_over_hull(&q, &members).unwrap();
            for n in 1..=3 {
                let per_renyi =
                    block_mixture_product_divergence(&q, family, block, rho, n).unwrap() / n as f64;
                assert!(lo <= per_renyi + 1e-8, "renyi lower {lo} vs {per_renyi}");
                assert!(per_renyi <= hi + 1e-8, "renyi upper {per_renyi} vs {hi}");
                let per_kl = block_mixture_product_kl(&q, family, block, n).unwrap() / n as f64;
                assert!(lo_kl <= per_kl + 1e-8, "kl lower {lo_kl} vs {per_kl}");
                assert!(per_kl <= hi_kl + 1e-8, "kl upper {per_kl} vs {hi_kl}");
            }
            // Optimizer vs 10^-3 grid oracle on the power-mean scale.
            let fw = max_power_mean_over_hull(&q, &members, rho).unwrap();
            let grid = grid_max_power_mean(&q, &members, rho, 1000);
            assert!(
                (fw.value - grid).abs() <= 1e-6,
                "block {block:?}: optimizer {} vs grid {grid}",
                fw.value
            );
            blocks_checked += 1;
        }
    }
    println!(
        "[acceptance] criterion 10 (hull sandwich + grid oracle): PASS — {blocks_checked} blocks x n in 1..=3"
    );
}

fn subsets_up_to_three(n: usize) -> Vec<Vec<usize>> {
    let mut out = Vec::new();
    for mask in 1u32..(1 << n) {
        if mask.count_ones() <= 3 {
            out.push((0..n).filter(|&j| mask >> j & 1 == 1).collect());
        }
    }
    out
}

fn grid_max_power_mean(q: &Density, block: &[Density], rho: f64, steps: usize) -> f64 {
    fn eval(q: &Density, block: &[Density], rho: f64, w: &[f64]) -> f64 {
        let mut g = 0.0;
        for x in 0..q.len() {
            let qx = q.at(x);
            if qx == 0.0 {
                continue;
            }
            let pw: f64 = block.iter().zip(w).map(|(p, &wi)| wi * p.at(x)).sum();
            if pw > 0.0 {
                g += ((1.0 - rho) * qx.ln() + rho * pw.ln()).exp();
            }
        }
        g
    }
    let k = block.len();
    let mut best = f64::NEG_INFINITY;
    match k {
        1 => best = eval(q, block, rho, &[1.0]),
        2 => {
            for i in 0..=steps {
                let w0 = i as f64 / steps as f64;
                best = best.max(eval(q, block, rho, &[w0, 1.0 - w0]));
            }
        }
        3 => {
            for i in 0..=steps {
                for j in 0..=(steps - i) {
                    let w = [
                        i as f64 / steps as f64,
                        j as f64 / steps as f64,
                        (steps - i - j) as f64 / steps as f64,
                    ];
                    best = best.max(eval(q, block, rho, &w));
                }
            }
        }
        _ => unreachable!("blocks are capped at three members"),
    }
    best
}

#[test]
fn criterion_11_posterior_tail_concentration() {
    let n = 10;
    let mut cell = 0u64;
    for idx in 0..FAMILIES {
        let (family, q) = acceptance_family(idx);
        for t in [0.1, 0.3] {
            let mut spec = BoundSpec::from_token("cor5.1", n).unwrap();
            spec.lambda = Some(2.0);
            spec.rho = Some(0.5);
            spec.t = Some(t);
            spec.delta = Some(0.2);
            let report = verify(
                &spec,
                &family,
                &q,
                REPS,
                RngSpec::new(0xCB, 0).substream(cell),
                Some(VerifyMode::MonteCarlo),
            )
            .unwrap();
            cell += 1;
            assert_ne!(
                report.verdict,
                Verdict::Violated,
                "family {idx} t {t}: exceedance frequency {} vs {}",
                report.lhs,
                report.rhs
            );
        }
    }
    println!(
        "[acceptance] criterion 11 (posterior tail concentration, {cell} cells x {REPS} reps): PASS"
    );
}

#[test]
fn criterion_12_parametric_rate_demo() {
    let rows = run_parametric_rate_demo(&[64, 256, 1024, 4096], 200, RngSpec::new(3, 0)).unwrap();
    assert_eq!(rows.len(), 4);
    let localized: Vec<f64> = rows.iter().map(|r| r.localized_entropy).collect();
    let max = localized.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    let min = localized.iter().cloned().fold(f64::INFINITY, f64::min);
    assert!(
        max / min <= 1.5,
        "localized entropy ratio {} above 1.5 ({localized:?})",
        max / min
    );
    let growth = rows.last().unwrap().global_entropy - rows[0].global_entropy;
    assert!(
        growth > 2f64.ln(),
        "global entropy grew only {growth}, need > ln 2"
    );
    for row in &rows {
        assert!(row.quad_ratio_lower > 0.0);
        assert!(row.quad_ratio_upper.is_finite());
    }
    println!(
        "[acceptance] criterion 12 (rate demo): PASS — localized ratio {:.3} <= 1.5, global growth {:.3} > ln2",
        max / min,
        growth
    );
}

#[test]
fn criterion_13_stochastic_subcommands_are_byte_deterministic() {
    let bin = env!("CARGO_BIN_EXE_icm");
    let dir = std::env::temp_dir().join("icm-acceptance-determinism");
    std::fs::create_dir_all(&dir).unwrap();
    let family =
        std::path::Path::new(env!("CARGO_MANIFEST_DIR")).join("tests/fixtures/family.json");
    let grid = std::path::Path::new(env!("CARGO_MANIFEST_DIR")).join("tests/fixtures/grid.json");

    let runs: Vec<Vec<String>> = vec![
        vec![
            "counterexample".into(),
            "--n".into(),
            "4".into(),
            "--m".into(),
            "64".into(),
            "--reps".into(),
            "100".into(),
            "--seed".into(),
            "7".into(),
        ],
        vec![
            "verify".into(),
            "--family".into(),
            family.display().to_string(),
            "--bound".into(),
            "thm5.1".into(),
            "--lambda".into(),
            "2.0".into(),
            "--n".into(),
            "25".into(),
            "--reps".into(),
            "200".into(),
            "--seed".into(),
            "11".into(),
        ],
        vec![
            "rate-demo".into(),
            "--ns".into(),
            "16,64".into(),
            "--seed".into(),
            "3".into(),
            "--reps".into(),
            "20".into(),
        ],
        vec![
            "sweep".into(),
            "--family".into(),
            family.display().to_string(),
            "--bounds".into(),
            "cor3.2,thm5.1".into(),
            "--grid".into(),
            grid.display().to_string(),
            "--seed".into(),
            "11".into(),
            "--reps".into(),
            "100".into(),
        ],
    ];
    for (i, args) in runs.iter().enumerate() {
        let out_a = dir.join(format!("run{i}_a.csv"));
        let out_b = dir.join(format!("run{i}_b.csv"));
        for out in [&out_a, &out_b] {
            let status = std::process::Command::new(bin)
                .args(args)
                .arg("--out")
                .arg(out)
                .status()
                .unwrap();
            assert!(status.success(), "{args:?}");
        }
        let a = std::fs::read(&out_a).unwrap();
        let b = std::fs::read(&out_b).unwrap();
        assert_eq!(a, b, "byte mismatch for {args:?}");
        assert!(!a.is_empty());
    }
    println!(
        "[acceptance] criterion 13 (seeded determinism): PASS — {} subcommands byte-identical",
        runs.len()
    );
}
