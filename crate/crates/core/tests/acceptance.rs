//! Acceptance suite: one test per criterion, each printing a pass line with
//! its runtime. Tolerances and runtime budgets are pinned here.

use std::time::{Duration, Instant};

use nalgebra::{DMatrix, DVector};
use rand::{Rng, SeedableRng};
use rand_distr::{Distribution, StandardNormal};
use rand_xoshiro::Xoshiro256PlusPlus;

use sbl_core::classifier::{
    predict_prob_detailed, run_classifier_mcmc, ClassifierModel, LossKind,
};
use sbl_core::gibbs::run_chain;
use sbl_core::kernel::{build_design_matrix, build_prediction_row, CovariateSet, DesignMatrix, KernelKind, KernelSpec};
use sbl_core::lab::{
    divergence_probe, lemma4_quadrature, verify_eigen_bounds, verify_lemma2_bounds,
    verify_monotone_f1, truncated_posterior_expectation, ProbeVerdict, RandomInstance,
};
use sbl_core::linalg::{smw_inverse, PrecisionDiag};
use sbl_core::mcmc::{summarize, GibbsConfig};
use sbl_core::propriety::{
    check_classifier_propriety, check_rvm_propriety, lemma4_closed_form, ClassifierPriorSpec,
    LambdaPriorKind, Lemma4Value, ProprietyRule, ProprietyStatus, RvmHyperParams, RvmPrior,
};
use sbl_core::regression::{
    evidence_gradient, fit_type2_ml, log_marginal_likelihood, posterior_beta, predict, FitOptions,
};

fn finish(criterion: &str, started: Instant, budget: Duration) {
    let elapsed = started.elapsed();
    println!(
        "acceptance {criterion}: PASS ({:.2}s, budget {:.0}s)",
        elapsed.as_secs_f64(),
        budget.as_secs_f64()
    );
    assert!(
        elapsed <= budget,
        "{criterion} exceeded its runtime budget: {elapsed:?} > {budget:?}"
    );
}

fn hp(a: f64, b: f64, c: f64, d: f64) -> RvmHyperParams {
    RvmHyperParams::new(a, b, c, d).unwrap()
}

/// Criterion 1: gate fidelity on the named configurations.
#[test]
fn criterion1_gate_fidelity() {
    let start = Instant::now();

    let v = check_rvm_propriety(&hp(1.0, 0.0, 1.0, 0.0).prior(), None, None).unwrap();
    assert_eq!(v.status, ProprietyStatus::Improper);
    assert_eq!(v.rule, ProprietyRule::Thm1NecessaryViolated);

    let v = check_rvm_propriety(&hp(0.0, 0.0, 0.0, 0.0).prior(), None, None).unwrap();
    assert_eq!(v.status, ProprietyStatus::Improper);
    assert_eq!(v.rule, ProprietyRule::Thm1NecessaryViolated);

    let jeffreys = RvmPrior {
        lambda: LambdaPriorKind::Jeffreys,
        c: 1.0,
        d: 1.0,
    };
    let v = check_rvm_propriety(&jeffreys, None, None).unwrap();
    assert_eq!(v.status, ProprietyStatus::Improper);
    assert_eq!(v.rule, ProprietyRule::Thm1NecessaryViolated);

    let v = check_rvm_propriety(&hp(1.0, 1.0, 1.0, 1.0).prior(), None, Some(10)).unwrap();
    assert_eq!(v.status, ProprietyStatus::Proper);
    assert_eq!(v.rule, ProprietyRule::Thm2SufficientMet);

    let v = check_rvm_propriety(&hp(-0.25, 0.0, 1.0, 1.0).prior(), None, None).unwrap();
    assert_eq!(v.status, ProprietyStatus::Undetermined);

    finish("criterion 1 (gate fidelity)", start, Duration::from_secs(1));
}

/// Criterion 2: boundary integral: closed form vs truncated quadrature on a
/// 20-point grid, the exact scaling law, and divergence flags.
#[test]
fn criterion2_lemma4() {
    let start = Instant::now();

    let a_grid = [-0.45, -0.35, -0.25, -0.15, -0.05];
    let k_grid = [0.5, 1.0, 2.0, 8.0];
    for &a in &a_grid {
        for &k in &k_grid {
            let exact = match lemma4_closed_form(a, k).unwrap() {
                Lemma4Value::Finite(v) => v,
                Lemma4Value::Divergent => panic!("a={a} should be finite"),
            };
            // Geometric-grid extrapolation of the truncated integral: the
            // missing tail decays like T^{-(a+1/2)}.
            let i1 = lemma4_quadrature(a, k, 1e6).unwrap();
            let i2 = lemma4_quadrature(a, k, 1e8).unwrap();
            let rho = 1e2f64.powf(-(a + 0.5));
            let est = i2 + (i2 - i1).max(0.0) * rho / (1.0 - rho);
            assert!(
                (est - exact).abs() <= 1e-6 * exact,
                "a={a} k={k}: quadrature {est} vs closed form {exact}"
            );
        }
        // Scaling law value(k=4)/value(k=1) = 4^{-(a+1/2)}.
        let v1 = lemma4_closed_form(a, 1.0).unwrap().finite().unwrap();
        let v4 = lemma4_closed_form(a, 4.0).unwrap().finite().unwrap();
        let expected = 4f64.powf(-(a + 0.5));
        assert!(
            (v4 / v1 - expected).abs() <= 1e-6 * expected,
            "a={a}: scaling {} vs {expected}",
            v4 / v1
        );
    }

    // Divergence flags at a in {0, 0.2, -0.6}.
    for a in [0.0, 0.2, -0.6] {
        assert_eq!(lemma4_closed_form(a, 1.0).unwrap(), Lemma4Value::Divergent);
    }
    // a >= 0: the t -> 0 endpoint itself is flagged.
    assert!(lemma4_quadrature(0.0, 1.0, 10.0).is_err());
    assert!(lemma4_quadrature(0.2, 1.0, 10.0).is_err());
    // a = -0.6: truncated values grow without bound along the T-grid.
    let mut prev = lemma4_quadrature(-0.6, 1.0, 1e2).unwrap();
    for t in [1e3, 1e4, 1e5] {
        let next = lemma4_quadrature(-0.6, 1.0, t).unwrap();
        assert!(next > prev * 1.2, "no growth at T={t}");
        prev = next;
    }

    finish("criterion 2 (lemma 4)", start, Duration::from_secs(10));
}

/// Criterion 3: sandwich bounds and monotonicity of f1 on 1000 random
/// instances with zero failures.
#[test]
fn criterion3_lemma2_and_monotonicity() {
    let start = Instant::now();
    let mut failures = 0;
    for seed in 0..1000u64 {
        let inst = RandomInstance::generate(seed);
        if !verify_lemma2_bounds(&inst).unwrap().ok() {
            failures += 1;
        }
        for i in 0..=inst.n {
            if !verify_monotone_f1(&inst, i, 1e-5).unwrap() {
                failures += 1;
            }
        }
    }
    assert_eq!(failures, 0);
    finish(
        "criterion 3 (lemma 2 sandwich + monotonicity, 1000 instances)",
        start,
        Duration::from_secs(30),
    );
}

/// Criterion 4: eigenvalue bounds (1e-10, log scale) and the SMW identity
/// (1e-8 max-abs) on 1000 random instances.
#[test]
fn criterion4_smw_and_eigen_bounds() {
    let start = Instant::now();
    let mut failures = 0;
    for seed in 0..1000u64 {
        let inst = RandomInstance::generate(seed);
        if !verify_eigen_bounds(&inst).unwrap() {
            failures += 1;
        }
        let inv = smw_inverse(inst.sigma2, &inst.k, &inst.lambda).unwrap();
        let n = inst.n;
        let mut c = DMatrix::identity(n, n) * inst.sigma2;
        for j in 0..inst.k.ncols() {
            let col = inst.k.matrix().column(j);
            let scale = 1.0 / inst.lambda.values()[j];
            for r in 0..n {
                for s in 0..n {
                    c[(r, s)] += scale * col[r] * col[s];
                }
            }
        }
        let prod = &inv * c;
        if (prod - DMatrix::identity(n, n)).abs().max() > 1e-8 {
            failures += 1;
        }
    }
    assert_eq!(failures, 0);
    finish(
        "criterion 4 (SMW + eigenvalue bounds, 1000 instances)",
        start,
        Duration::from_secs(30),
    );
}

fn toy_n1(seed: u64) -> (DVector<f64>, DesignMatrix) {
    let mut rng = Xoshiro256PlusPlus::seed_from_u64(seed);
    let x = CovariateSet::from_rows(&[vec![rng.gen_range(-1.0..1.0)]]).unwrap();
    let spec = KernelSpec::new(KernelKind::Gaussian, 1.0).unwrap();
    let k = build_design_matrix(&x, &spec).unwrap();
    let y = DVector::from_vec(vec![rng.gen_range(0.5..1.5)]);
    (y, k)
}

/// Criterion 5: the theorems cross-validated numerically at n = 1: a
/// 6-configuration matrix where every gate-Improper configuration shows
/// divergence evidence and every gate-Proper one a stable estimate.
#[test]
fn criterion5_divergence_cross_validation() {
    let start = Instant::now();
    let (y, k) = toy_n1(41);
    // The T-grid reaches 1e6 because the half-Cauchy and Gumbel priors have
    // λ^{-3/2} tails: their truncated mass converges like T^{-1/2}, which
    // needs one more decade to settle below 1% per decade.
    let grid = [1e2, 1e3, 1e4, 1e5, 1e6];

    let configs: Vec<RvmPrior> = vec![
        hp(1.0, 0.0, 1.0, 0.0).prior(),
        hp(0.0, 0.0, 0.0, 0.0).prior(),
        RvmPrior {
            lambda: LambdaPriorKind::Jeffreys,
            c: 1.0,
            d: 1.0,
        },
        hp(1.0, 1.0, 1.0, 1.0).prior(),
        RvmPrior {
            lambda: LambdaPriorKind::HalfCauchyRootInverse { scale: 1.0 },
            c: 1.0,
            d: 1.0,
        },
        RvmPrior {
            lambda: LambdaPriorKind::GumbelType2 { rate: 1.0 },
            c: 1.0,
            d: 1.0,
        },
    ];

    for prior in &configs {
        let gate = check_rvm_propriety(prior, Some((&y, &k)), None).unwrap();
        let report = divergence_probe(&y, &k, prior, &grid).unwrap();
        match gate.status {
            ProprietyStatus::Improper => {
                assert_eq!(
                    report.verdict,
                    ProbeVerdict::DivergenceEvidence,
                    "gate-Improper config {} must show divergence: {}",
                    prior.describe(),
                    report.record()
                );
            }
            ProprietyStatus::Proper => {
                match report.verdict {
                    ProbeVerdict::ConvergentEstimate(v) => {
                        assert!(v.is_finite() && v > 0.0);
                        // Stability: < 1% growth over the final decade.
                        let m = report.i_values.len();
                        let growth = report.i_values[m - 1] / report.i_values[m - 2] - 1.0;
                        assert!(
                            growth < 0.01,
                            "config {}: final-decade growth {growth}",
                            prior.describe()
                        );
                    }
                    ProbeVerdict::DivergenceEvidence => panic!(
                        "gate-Proper config {} flagged divergent: {}",
                        prior.describe(),
                        report.record()
                    ),
                }
            }
            ProprietyStatus::Undetermined => {
                panic!("config {} should not be Undetermined here", prior.describe())
            }
        }
    }
    finish(
        "criterion 5 (divergence cross-validation, 6 configs at n=1)",
        start,
        Duration::from_secs(300),
    );
}

/// Criterion 6: sampler correctness: posterior mean of β0 against the
/// quadrature oracle, and the β-block-only chain against the closed form,
/// both within 3 Monte Carlo standard errors with 1e5 kept draws.
#[test]
fn criterion6_sampler_vs_quadrature_oracle() {
    let start = Instant::now();
    // n = 2 toy problem.
    let x = CovariateSet::from_rows(&[vec![-0.6], vec![0.8]]).unwrap();
    let spec = KernelSpec::new(KernelKind::Gaussian, 1.0).unwrap();
    let k = build_design_matrix(&x, &spec).unwrap();
    let y = DVector::from_vec(vec![0.9, -0.4]);
    let hp_proper = hp(1.0, 1.0, 1.0, 1.0);

    let cfg = GibbsConfig::new(110_000, 10_000, 1, 2024).unwrap();
    let trace = run_chain(&y, &k, &hp_proper, &cfg).unwrap();
    assert_eq!(trace.n_kept(), 100_000);
    let summary = summarize(&trace).unwrap();

    // Quadrature oracle: E[β0 | y] with β integrated in closed form and
    // (λ, 1/σ²) integrated numerically under truncation T = 100 (the proper
    // gamma priors leave ~e^{-100} mass beyond). The weight
    // β0(λ, σ²) = [(KᵀK + Dσ²)⁻¹Kᵀy]_0 is evaluated through the (KᵀK, D)
    // pencil, memoized per λ, so the inner σ² sweep costs O(1) per point.
    let ktk = k.matrix().transpose() * k.matrix();
    let kty = k.matrix().transpose() * &y;
    struct Pencil {
        lambda: Vec<f64>,
        evals: DVector<f64>,
        row0: DVector<f64>,
        w: DVector<f64>,
    }
    let cache: std::cell::RefCell<Option<Pencil>> = std::cell::RefCell::new(None);
    let beta0_mean = move |lambda: &[f64], sigma2: f64| {
        let mut cached = cache.borrow_mut();
        let must_build = match cached.as_ref() {
            Some(p) => p.lambda != lambda,
            None => true,
        };
        if must_build {
            // (KᵀK + σ²D)⁻¹ = D^{-1/2} Q (Λ + σ²I)⁻¹ Qᵀ D^{-1/2} from the
            // symmetric eigendecomposition of D^{-1/2} KᵀK D^{-1/2}.
            let m = lambda.len();
            let dmh = DVector::from_fn(m, |j, _| 1.0 / lambda[j].sqrt());
            let mut s = ktk.clone();
            for r in 0..m {
                for c in 0..m {
                    s[(r, c)] *= dmh[r] * dmh[c];
                }
            }
            let eig = nalgebra::SymmetricEigen::new(s);
            let row0 = DVector::from_fn(m, |j, _| dmh[0] * eig.eigenvectors[(0, j)]);
            let w = eig.eigenvectors.transpose() * DVector::from_fn(m, |j, _| dmh[j] * kty[j]);
            *cached = Some(Pencil {
                lambda: lambda.to_vec(),
                evals: eig.eigenvalues.clone(),
                row0,
                w,
            });
        }
        let p = cached.as_ref().unwrap();
        (0..lambda.len())
            .map(|j| p.row0[j] * p.w[j] / (p.evals[j].max(0.0) + sigma2))
            .sum::<f64>()
    };
    // Oracle tolerance 2e-3 relative: far below the 3-MCSE comparison bound
    // (~1e-2) it feeds.
    let oracle = truncated_posterior_expectation(
        &y,
        &k,
        &hp_proper.prior(),
        100.0,
        2e-3,
        &beta0_mean,
    )
    .unwrap();
    let p = summary.get("beta_0").unwrap();
    let mcse = p.mcse();
    assert!(
        (p.mean - oracle).abs() <= 3.0 * mcse,
        "chain beta_0 {} vs quadrature oracle {} (3 mcse = {})",
        p.mean,
        oracle,
        3.0 * mcse
    );

    // β-block-only chain against the closed-form conditional posterior.
    let cfg = GibbsConfig::new(100_000, 0, 1, 77)
        .unwrap()
        .update_lambda(false)
        .update_sigma2(false);
    let trace = run_chain(&y, &k, &hp_proper, &cfg).unwrap();
    let mean_y = y.sum() / 2.0;
    let var_y = y.iter().map(|v| (v - mean_y) * (v - mean_y)).sum::<f64>() / 2.0;
    let (closed, _) = posterior_beta(
        &y,
        &k,
        &PrecisionDiag::constant(3, 1.0).unwrap(),
        var_y,
    )
    .unwrap();
    let summary = summarize(&trace).unwrap();
    for j in 0..3 {
        let p = summary.get(&format!("beta_{j}")).unwrap();
        // Draws are iid here, so sd/sqrt(n) is the exact MCSE.
        let mcse = p.sd / (trace.n_kept() as f64).sqrt();
        assert!(
            (p.mean - closed[j]).abs() <= 3.0 * mcse,
            "beta_{j}: block-only chain {} vs closed form {} (3 mcse = {})",
            p.mean,
            closed[j],
            3.0 * mcse
        );
    }
    finish(
        "criterion 6 (Gibbs vs quadrature oracle, 1e5 draws)",
        start,
        Duration::from_secs(300),
    );
}

/// Criterion 7: type-II ML: monotone evidence on 50 seeded datasets,
/// finite-difference gradient agreement at 20 random points, and the sinc
/// benchmark (sparse and better than the constant predictor).
#[test]
fn criterion7_type2_ml() {
    let start = Instant::now();

    // Evidence sequences nondecreasing within 1e-9 per step.
    let mut rng = Xoshiro256PlusPlus::seed_from_u64(4242);
    for _ in 0..50 {
        let n = rng.gen_range(6..20);
        let rows: Vec<Vec<f64>> = (0..n).map(|_| vec![rng.gen_range(-3.0..3.0)]).collect();
        let x = CovariateSet::from_rows(&rows).unwrap();
        let spec = KernelSpec::new(KernelKind::Gaussian, 1.0).unwrap();
        let k = build_design_matrix(&x, &spec).unwrap();
        let coef = DVector::from_fn(n + 1, |_, _| rng.gen_range(-1.0..1.0));
        let noise = DVector::from_fn(n, |_, _| {
            let z: f64 = StandardNormal.sample(&mut rng);
            0.1 * z
        });
        let y = k.matrix() * coef + noise;
        let fit = fit_type2_ml(&y, &k, None, &FitOptions::default()).unwrap();
        for w in fit.evidence_path.windows(2) {
            assert!(
                w[1] >= w[0] - 1e-9,
                "evidence decreased: {} -> {}",
                w[0],
                w[1]
            );
        }
    }

    // Analytic gradient vs central differences at 20 random points.
    for point in 0..20 {
        let mut rng = Xoshiro256PlusPlus::seed_from_u64(9000 + point);
        let n = rng.gen_range(2..6);
        let rows: Vec<Vec<f64>> = (0..n).map(|_| vec![rng.gen_range(-2.0..2.0)]).collect();
        let x = CovariateSet::from_rows(&rows).unwrap();
        let spec = KernelSpec::new(KernelKind::Gaussian, 1.0).unwrap();
        let k = build_design_matrix(&x, &spec).unwrap();
        let y = DVector::from_fn(n, |_, _| rng.gen_range(-2.0..2.0));
        let lambda = PrecisionDiag::new(
            (0..n + 1)
                .map(|_| 10f64.powf(rng.gen_range(-1.0..1.0)))
                .collect(),
        )
        .unwrap();
        let sigma2 = 10f64.powf(rng.gen_range(-1.0..0.5));
        let (grad_l, grad_s) = evidence_gradient(&y, &k, &lambda, sigma2).unwrap();
        let h = 1e-6f64;
        for j in 0..n + 1 {
            let mut up = lambda.values().to_vec();
            let mut dn = up.clone();
            up[j] *= h.exp();
            dn[j] *= (-h).exp();
            let lu =
                log_marginal_likelihood(&y, &k, &PrecisionDiag::new(up).unwrap(), sigma2).unwrap();
            let ld =
                log_marginal_likelihood(&y, &k, &PrecisionDiag::new(dn).unwrap(), sigma2).unwrap();
            let fd = (lu - ld) / (2.0 * h);
            assert!(
                (fd - grad_l[j]).abs() <= 1e-4 * grad_l[j].abs().max(1.0),
                "point {point} lambda[{j}]: fd {fd} vs analytic {}",
                grad_l[j]
            );
        }
        let lu = log_marginal_likelihood(&y, &k, &lambda, (sigma2.ln() + h).exp()).unwrap();
        let ld = log_marginal_likelihood(&y, &k, &lambda, (sigma2.ln() - h).exp()).unwrap();
        let fd = (lu - ld) / (2.0 * h);
        assert!(
            (fd - grad_s).abs() <= 1e-4 * grad_s.abs().max(1.0),
            "point {point} sigma2: fd {fd} vs analytic {grad_s}"
        );
    }

    // Sinc benchmark: n = 50, noise sd 0.1, gaussian kernel.
    let mut rng = Xoshiro256PlusPlus::seed_from_u64(31415);
    let n = 50;
    let rows: Vec<Vec<f64>> = (0..n)
        .map(|i| vec![-10.0 + 20.0 * (i as f64 + 0.5) / n as f64])
        .collect();
    let x = CovariateSet::from_rows(&rows).unwrap();
    let spec = KernelSpec::new(KernelKind::Gaussian, 2.0).unwrap();
    let k = build_design_matrix(&x, &spec).unwrap();
    let sinc = |t: f64| if t == 0.0 { 1.0 } else { t.sin() / t };
    let y = DVector::from_fn(n, |i, _| {
        let z: f64 = StandardNormal.sample(&mut rng);
        sinc(rows[i][0]) + 0.1 * z
    });
    let fit = fit_type2_ml(&y, &k, None, &FitOptions::default()).unwrap();
    assert!(
        fit.relevance_indices.len() < n / 2,
        "kept {} of {} columns",
        fit.relevance_indices.len(),
        n + 1
    );
    let mean_y = y.sum() / n as f64;
    let mut rmse_fit = 0.0;
    let mut rmse_const = 0.0;
    for i in 0..n {
        let row = build_prediction_row(&x, &rows[i], &spec).unwrap();
        let pred = predict(&fit, &row).unwrap();
        rmse_fit += (pred.mean - y[i]).powi(2);
        rmse_const += (mean_y - y[i]).powi(2);
    }
    rmse_fit = (rmse_fit / n as f64).sqrt();
    rmse_const = (rmse_const / n as f64).sqrt();
    assert!(
        rmse_fit < rmse_const,
        "RVM rmse {rmse_fit} not better than constant predictor {rmse_const}"
    );

    finish("criterion 7 (type-II ML)", start, Duration::from_secs(120));
}

/// Criterion 8: classifier: separable accuracy, θ support containment,
/// label-flip symmetry, and the Jeffreys refusal.
#[test]
fn criterion8_classifier() {
    let start = Instant::now();

    // Linearly separable 2-class toy set, n = 40, p = 2.
    let mut rng = Xoshiro256PlusPlus::seed_from_u64(515);
    let n = 40;
    let mut rows = Vec::new();
    let mut labels = Vec::new();
    for i in 0..n {
        let class = (i % 2) as f64;
        let cx = if class > 0.5 { 1.8 } else { -1.8 };
        rows.push(vec![cx + rng.gen_range(-0.8..0.8), rng.gen_range(-1.0..1.0)]);
        labels.push(class);
    }
    let x = CovariateSet::from_rows(&rows).unwrap();
    let y = DVector::from_vec(labels.clone());
    // Concentrated proper scale priors: separable data lets the latent scale
    // (z, β, σ²) random-walk upward, and loose priors mix too slowly for the
    // Monte Carlo comparisons below.
    let priors = ClassifierPriorSpec::new(
        LambdaPriorKind::Gamma {
            shape: 2.0,
            rate: 1.0,
        },
        3.0,
        2.0,
        0.3,
        3.0,
        1e-4,
    )
    .unwrap();
    let model = ClassifierModel::new(LossKind::Logistic, priors, KernelKind::Gaussian).unwrap();
    let cfg = GibbsConfig::new(30_000, 5000, 5, 99).unwrap();
    let trace = run_classifier_mcmc(&y, &x, &model, &cfg).unwrap();

    // θ never leaves (u1, u2).
    let theta = trace.column("theta").unwrap();
    assert!(theta.iter().all(|&t| t > 0.3 && t < 3.0));

    // Training accuracy with the plug-in 0.5 rule.
    let mut correct = 0;
    for i in 0..n {
        let (p, _) = predict_prob_detailed(&trace, &x, &rows[i], &model).unwrap();
        assert!((0.0..=1.0).contains(&p));
        let class = if p > 0.5 { 1.0 } else { 0.0 };
        if class == labels[i] {
            correct += 1;
        }
    }
    let accuracy = correct as f64 / n as f64;
    assert!(accuracy >= 0.9, "training accuracy {accuracy}");

    // Label-flip symmetry at a probe point: p maps to 1 - p within 2 MCSE.
    let flipped = DVector::from_fn(n, |i, _| 1.0 - y[i]);
    let trace_flipped = run_classifier_mcmc(&flipped, &x, &model, &cfg).unwrap();
    let probe_point = [0.4, 0.0];
    let (p, mcse) = predict_prob_detailed(&trace, &x, &probe_point, &model).unwrap();
    let (p_flip, mcse_flip) = predict_prob_detailed(&trace_flipped, &x, &probe_point, &model).unwrap();
    let combined = (mcse * mcse + mcse_flip * mcse_flip).sqrt();
    assert!(
        (p + p_flip - 1.0).abs() <= 2.0 * combined,
        "label-flip: p {p} + p' {p_flip} - 1 = {} vs 2 mcse {}",
        p + p_flip - 1.0,
        2.0 * combined
    );

    // Jeffreys configuration: flagged Improper and refused by default.
    let jeffreys = ClassifierPriorSpec::new(LambdaPriorKind::Jeffreys, 1.0, 1.0, 0.3, 3.0, 1e-4)
        .unwrap();
    let verdict = check_classifier_propriety(&jeffreys).unwrap();
    assert_eq!(verdict.status, ProprietyStatus::Improper);
    assert_eq!(verdict.rule, ProprietyRule::Prop1Jeffreys);
    let jmodel = ClassifierModel::new(LossKind::Logistic, jeffreys, KernelKind::Gaussian).unwrap();
    assert!(matches!(
        run_classifier_mcmc(&y, &x, &jmodel, &cfg),
        Err(sbl_core::Error::GateRefusal(_))
    ));

    finish("criterion 8 (classifier)", start, Duration::from_secs(300));
}
