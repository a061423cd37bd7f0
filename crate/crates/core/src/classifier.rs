//! RKHS Bayesian classification with loss-based likelihoods.
//!
//! The hierarchy couples binary labels to latent responses z through
//! f(y|z) ∝ exp{−Σ l(y_i, z_i)}, puts z | β, σ², θ ~ N(Kβ, σ²I) on the
//! latents, β | λ, σ² ~ N(0, σ²D⁻¹) on the coefficients, gamma-family priors
//! on λ_1..λ_n (λ_0 fixed small), an inverse-gamma prior on σ² and a uniform
//! prior on the kernel parameter θ. Sampling is Metropolis-within-Gibbs:
//! single-site Gaussian proposals for z (adapted toward 40% acceptance during
//! burn-in, then frozen), conjugate draws for β, λ and σ², and a reflected
//! Gaussian proposal for θ that rebuilds the design matrix.

use nalgebra::{DMatrix, DVector};
use rand::{Rng, SeedableRng};
use rand_distr::Distribution;
use rand_xoshiro::Xoshiro256PlusPlus;

use crate::error::{Error, Result};
use crate::kernel::{build_design_matrix, build_prediction_row, CovariateSet, DesignMatrix, KernelKind, KernelSpec};
use crate::linalg::CovarianceFactor;
use crate::mcmc::{BlockAcceptance, GibbsConfig, McmcTrace};
use crate::propriety::{check_classifier_propriety, ClassifierPriorSpec, LambdaPriorKind, ProprietyStatus};
use crate::quadrature::gauss_hermite_32;

/// Supported loss functions.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum LossKind {
    /// Negative Bernoulli log-likelihood with logit link:
    /// l(y, z) = log(1 + e^z) − y·z.
    Logistic,
    /// l(y, z) = max(0, 1 − (2y−1)·z).
    Hinge,
}

impl LossKind {
    pub fn name(&self) -> &'static str {
        match self {
            LossKind::Logistic => "logistic",
            LossKind::Hinge => "hinge",
        }
    }

    pub fn parse(s: &str) -> Result<Self> {
        match s {
            "logistic" => Ok(LossKind::Logistic),
            "hinge" => Ok(LossKind::Hinge),
            other => Err(Error::InvalidConfig(format!(
                "unknown loss '{other}' (expected logistic or hinge)"
            ))),
        }
    }
}

fn check_label(y: f64) -> Result<()> {
    if y != 0.0 && y != 1.0 {
        return Err(Error::InvalidInput(format!(
            "class label must be 0 or 1, got {y}"
        )));
    }
    Ok(())
}

/// log(1 + e^x) without overflow.
fn log1p_exp(x: f64) -> f64 {
    if x > 0.0 {
        x + (-x).exp().ln_1p()
    } else {
        x.exp().ln_1p()
    }
}

/// Evaluate the loss l(y, z) for a label y ∈ {0, 1}.
pub fn loss_eval(kind: LossKind, y: f64, z: f64) -> Result<f64> {
    check_label(y)?;
    Ok(loss_unchecked(kind, y, z))
}

fn loss_unchecked(kind: LossKind, y: f64, z: f64) -> f64 {
    match kind {
        LossKind::Logistic => log1p_exp(z) - y * z,
        LossKind::Hinge => (1.0 - (2.0 * y - 1.0) * z).max(0.0),
    }
}

/// Two-point normalized class-1 probability at a latent value z:
/// exp(−l(1,z)) / (exp(−l(1,z)) + exp(−l(0,z))).
///
/// For the logistic loss this is exactly the sigmoid of z.
pub fn class_one_probability(kind: LossKind, z: f64) -> f64 {
    let diff = loss_unchecked(kind, 0.0, z) - loss_unchecked(kind, 1.0, z);
    1.0 / (1.0 + (-diff).exp())
}

/// The classification model: loss, priors and the kernel family whose
/// parameter θ is sampled over (u1, u2).
#[derive(Debug, Clone)]
pub struct ClassifierModel {
    pub loss: LossKind,
    pub priors: ClassifierPriorSpec,
    pub kernel_kind: KernelKind,
}

impl ClassifierModel {
    pub fn new(loss: LossKind, priors: ClassifierPriorSpec, kernel_kind: KernelKind) -> Result<Self> {
        if !(priors.u1 > 0.0) {
            return Err(Error::InvalidConfig(format!(
                "theta support must sit inside the valid kernel-parameter range: u1 = {} must be positive",
                priors.u1
            )));
        }
        Ok(Self {
            loss,
            priors,
            kernel_kind,
        })
    }
}

/// Current values of the latent variables and parameters.
#[derive(Debug, Clone)]
pub struct LatentState {
    pub z: DVector<f64>,
    pub beta: DVector<f64>,
    /// Full (n+1)-vector of precisions; entry 0 is pinned at λ_0 and never
    /// updated.
    pub lambda: DVector<f64>,
    pub sigma2: f64,
    pub theta: f64,
}

fn reflect_into(x: f64, lo: f64, hi: f64) -> f64 {
    let len = hi - lo;
    let mut t = (x - lo).rem_euclid(2.0 * len);
    if t > len {
        t = 2.0 * len - t;
    }
    // Keep strictly inside the open support.
    let eps = 1e-12 * len;
    (lo + t).clamp(lo + eps, hi - eps)
}

const DRAW_CLAMP: (f64, f64) = (1e-300, 1e300);

/// Metropolis-within-Gibbs sampler for the classification hierarchy.
///
/// The block updates are public so tests can validate them in isolation;
/// `run_classifier_mcmc` is the normal entry point.
pub struct ClassifierSampler {
    y: DVector<f64>,
    x: CovariateSet,
    model: ClassifierModel,
    lambda_shape: f64,
    lambda_rate: f64,
    pub state: LatentState,
    k: DesignMatrix,
    z_sd: f64,
    theta_sd: f64,
    rng: Xoshiro256PlusPlus,
    z_accepted: u64,
    z_proposed: u64,
    theta_accepted: u64,
    theta_proposed: u64,
    pub step_errors: Vec<String>,
}

impl ClassifierSampler {
    pub fn new(
        y: &DVector<f64>,
        x: &CovariateSet,
        model: &ClassifierModel,
        seed: u64,
    ) -> Result<Self> {
        if y.len() != x.n() {
            return Err(Error::DimensionMismatch(format!(
                "y has length {} but X has {} rows",
                y.len(),
                x.n()
            )));
        }
        for &v in y.iter() {
            check_label(v)?;
        }
        let (lambda_shape, lambda_rate) = match model.priors.lambda_prior {
            LambdaPriorKind::Gamma { shape, rate } => (shape, rate),
            // Jeffreys is the (0, 0) member of the gamma family; it is only
            // reachable through allow_improper.
            LambdaPriorKind::Jeffreys => (0.0, 0.0),
            other => {
                return Err(Error::InvalidConfig(format!(
                    "the classifier sampler supports gamma-family lambda priors, got {}",
                    other.describe()
                )))
            }
        };
        let n = y.len();
        let p = model.priors;
        let theta = 0.5 * (p.u1 + p.u2);
        let spec = KernelSpec::new(model.kernel_kind, theta)?;
        let k = build_design_matrix(x, &spec)?;
        let mut lambda = DVector::from_element(n + 1, 1.0);
        lambda[0] = p.lambda0;
        let state = LatentState {
            z: DVector::from_fn(n, |i, _| 2.0 * y[i] - 1.0),
            beta: DVector::zeros(n + 1),
            lambda,
            sigma2: 1.0,
            theta,
        };
        Ok(Self {
            y: y.clone(),
            x: x.clone(),
            model: model.clone(),
            lambda_shape,
            lambda_rate,
            state,
            k,
            z_sd: 1.0,
            theta_sd: (p.u2 - p.u1) / 6.0,
            rng: Xoshiro256PlusPlus::seed_from_u64(seed),
            z_accepted: 0,
            z_proposed: 0,
            theta_accepted: 0,
            theta_proposed: 0,
            step_errors: Vec::new(),
        })
    }

    pub fn design(&self) -> &DesignMatrix {
        &self.k
    }

    fn update_z_inner(&mut self, with_loss: bool) {
        let mean = self.k.matrix() * &self.state.beta;
        let sigma2 = self.state.sigma2;
        for i in 0..self.y.len() {
            let zi = self.state.z[i];
            let step: f64 = rand_distr::StandardNormal.sample(&mut self.rng);
            let prop = zi + self.z_sd * step;
            let mut log_ratio =
                ((zi - mean[i]).powi(2) - (prop - mean[i]).powi(2)) / (2.0 * sigma2);
            if with_loss {
                log_ratio += loss_unchecked(self.model.loss, self.y[i], zi)
                    - loss_unchecked(self.model.loss, self.y[i], prop);
            }
            self.z_proposed += 1;
            let u: f64 = self.rng.gen_range(0.0..1.0f64);
            if u.ln() < log_ratio {
                self.state.z[i] = prop;
                self.z_accepted += 1;
            }
        }
    }

    /// Single-site Metropolis sweep over z targeting
    /// exp{−l(y_i, z_i)}·N(z_i; k_iᵀβ, σ²).
    pub fn update_z(&mut self) {
        self.update_z_inner(true);
    }

    /// Validation hook: the same sweep with the loss factor removed, so the
    /// stationary law of z is exactly N(Kβ, σ²I).
    pub fn update_z_prior_only(&mut self) {
        self.update_z_inner(false);
    }

    /// Conditional moments of β | z, λ, σ²: N((KᵀK + D)⁻¹Kᵀz, σ²(KᵀK + D)⁻¹).
    pub fn beta_conditional(&self) -> Result<(DVector<f64>, DMatrix<f64>)> {
        let mut b = self.k.matrix().transpose() * self.k.matrix();
        for j in 0..b.nrows() {
            b[(j, j)] += self.state.lambda[j];
        }
        let factor = CovarianceFactor::factor(&b)?;
        let mean = factor.solve_vec(&(self.k.matrix().transpose() * &self.state.z));
        let cov = factor.inverse() * self.state.sigma2;
        Ok((mean, cov))
    }

    pub fn update_beta(&mut self) -> Result<()> {
        let mut b = self.k.matrix().transpose() * self.k.matrix();
        for j in 0..b.nrows() {
            b[(j, j)] += self.state.lambda[j];
        }
        let factor = CovarianceFactor::factor(&b)?;
        let mean = factor.solve_vec(&(self.k.matrix().transpose() * &self.state.z));
        let m = b.nrows();
        let z = DVector::from_fn(m, |_, _| rand_distr::StandardNormal.sample(&mut self.rng));
        let x = factor
            .lower()
            .transpose()
            .solve_upper_triangular(&z)
            .ok_or_else(|| Error::Numeric("triangular solve failed in beta draw".into()))?;
        self.state.beta = mean + x * self.state.sigma2.sqrt();
        Ok(())
    }

    /// Conjugate λ_i | β_i, σ² ~ Gamma(a + 1/2, b + β_i²/(2σ²)) for i ≥ 1;
    /// λ_0 is never touched.
    pub fn update_lambda(&mut self, iteration: usize) {
        let sigma2 = self.state.sigma2;
        for i in 1..self.state.lambda.len() {
            let shape = self.lambda_shape + 0.5;
            let rate = self.lambda_rate + self.state.beta[i].powi(2) / (2.0 * sigma2);
            if !(shape > 0.0) || !(rate > 0.0) || !rate.is_finite() {
                self.step_errors.push(format!(
                    "iteration {iteration}: lambda[{i}] conditional invalid (shape={shape}, rate={rate}); kept previous value"
                ));
                continue;
            }
            if let Ok(g) = rand_distr::Gamma::new(shape, 1.0 / rate) {
                self.state.lambda[i] = g.sample(&mut self.rng).clamp(DRAW_CLAMP.0, DRAW_CLAMP.1);
            }
        }
    }

    /// Conjugate σ² | β, z ~ InverseGamma with shape c + n/2 + (n+1)/2 and
    /// rate d + ‖z − Kβ‖²/2 + βᵀDβ/2 (σ² also scales the β prior).
    pub fn update_sigma2(&mut self, iteration: usize) {
        let n = self.y.len() as f64;
        let resid = (&self.state.z - self.k.matrix() * &self.state.beta).norm_squared();
        let prior_quad: f64 = (0..self.state.lambda.len())
            .map(|j| self.state.lambda[j] * self.state.beta[j].powi(2))
            .sum();
        let shape = self.model.priors.c + n / 2.0 + (n + 1.0) / 2.0;
        let rate = self.model.priors.d + 0.5 * resid + 0.5 * prior_quad;
        if !(shape > 0.0) || !(rate > 0.0) || !rate.is_finite() {
            self.step_errors.push(format!(
                "iteration {iteration}: sigma2 conditional invalid (shape={shape}, rate={rate}); kept previous value"
            ));
            return;
        }
        if let Ok(g) = rand_distr::Gamma::new(shape, 1.0 / rate) {
            let phi: f64 = g.sample(&mut self.rng);
            self.state.sigma2 = (1.0 / phi).clamp(DRAW_CLAMP.0, DRAW_CLAMP.1);
        }
    }

    /// Metropolis step for θ on (u1, u2) with a reflected Gaussian proposal;
    /// the design matrix is rebuilt for the proposal and kept on acceptance.
    pub fn update_theta(&mut self) -> Result<()> {
        let p = self.model.priors;
        let step: f64 = rand_distr::StandardNormal.sample(&mut self.rng);
        let prop = reflect_into(self.state.theta + self.theta_sd * step, p.u1, p.u2);
        let spec = KernelSpec::new(self.model.kernel_kind, prop)?;
        let k_prop = build_design_matrix(&self.x, &spec)?;
        let cur = (&self.state.z - self.k.matrix() * &self.state.beta).norm_squared();
        let new = (&self.state.z - k_prop.matrix() * &self.state.beta).norm_squared();
        let log_ratio = (cur - new) / (2.0 * self.state.sigma2);
        self.theta_proposed += 1;
        let u: f64 = self.rng.gen_range(0.0..1.0f64);
        if u.ln() < log_ratio {
            self.state.theta = prop;
            self.k = k_prop;
            self.theta_accepted += 1;
        }
        Ok(())
    }

    /// One full sweep in the fixed order z, β, λ, σ², θ.
    pub fn sweep(&mut self, iteration: usize) -> Result<()> {
        self.update_z();
        self.update_beta()?;
        self.update_lambda(iteration);
        self.update_sigma2(iteration);
        self.update_theta()?;
        Ok(())
    }

    /// Rescale the z proposal toward 40% acceptance using the counts since
    /// the last adaptation. Called on burn-in batches only, so the
    /// post-burn-in kernel stays fixed.
    fn adapt_z_sd(&mut self) {
        if self.z_proposed == 0 {
            return;
        }
        let rate = self.z_accepted as f64 / self.z_proposed as f64;
        self.z_sd = (self.z_sd * (rate - 0.4).exp()).clamp(1e-3, 1e3);
        self.z_accepted = 0;
        self.z_proposed = 0;
    }

    fn reset_counters(&mut self) {
        self.z_accepted = 0;
        self.z_proposed = 0;
        self.theta_accepted = 0;
        self.theta_proposed = 0;
    }

    fn acceptance(&self) -> (f64, f64) {
        let z = if self.z_proposed > 0 {
            self.z_accepted as f64 / self.z_proposed as f64
        } else {
            f64::NAN
        };
        let theta = if self.theta_proposed > 0 {
            self.theta_accepted as f64 / self.theta_proposed as f64
        } else {
            f64::NAN
        };
        (z, theta)
    }
}

/// Run the classification chain, recording β, λ, σ², z and θ.
///
/// Unless `cfg.allow_improper` is set, the propriety gate must certify the
/// prior configuration as Proper; Jeffreys-on-λ runs are refused with the
/// Proposition-1 verdict in the error.
pub fn run_classifier_mcmc(
    y: &DVector<f64>,
    x: &CovariateSet,
    model: &ClassifierModel,
    cfg: &GibbsConfig,
) -> Result<McmcTrace> {
    let verdict = check_classifier_propriety(&model.priors)?;
    if verdict.status != ProprietyStatus::Proper && !cfg.allow_improper {
        return Err(Error::GateRefusal(verdict.record()));
    }
    let mut sampler = ClassifierSampler::new(y, x, model, cfg.seed)?;
    let n = y.len();
    let m = n + 1;

    let mut names: Vec<String> = (0..m).map(|j| format!("beta_{j}")).collect();
    names.extend((0..m).map(|j| format!("lambda_{j}")));
    names.push("sigma2".into());
    names.extend((1..=n).map(|i| format!("z_{i}")));
    names.push("theta".into());
    let mut trace = McmcTrace::new(names);

    const ADAPT_BATCH: usize = 50;
    let mut row = Vec::with_capacity(2 * m + n + 2);
    for t in 0..cfg.n_iter {
        sampler.sweep(t)?;
        if t < cfg.burn_in {
            if (t + 1) % ADAPT_BATCH == 0 {
                sampler.adapt_z_sd();
            }
            if t + 1 == cfg.burn_in {
                // Freeze the kernel and start acceptance bookkeeping fresh.
                sampler.adapt_z_sd();
                sampler.reset_counters();
            }
        }
        if cfg.keeps(t) {
            row.clear();
            row.extend(sampler.state.beta.iter());
            row.extend(sampler.state.lambda.iter());
            row.push(sampler.state.sigma2);
            row.extend(sampler.state.z.iter());
            row.push(sampler.state.theta);
            trace.push_row(&row);
        }
    }
    let (z_rate, theta_rate) = sampler.acceptance();
    for (block, rate) in [
        ("beta", 1.0),
        ("lambda", 1.0),
        ("sigma2", 1.0),
        ("z", z_rate),
        ("theta", theta_rate),
    ] {
        trace.accepted_meta.push(BlockAcceptance {
            block: block.into(),
            rate,
        });
    }
    trace.step_errors = sampler.step_errors;
    Ok(trace)
}

/// Posterior predictive probability P(y_new = 1 | y) as a Monte Carlo
/// average over the kept draws, with the latent z_new integrated by the
/// fixed 32-point Gauss–Hermite rule.
pub fn predict_prob(
    trace: &McmcTrace,
    x: &CovariateSet,
    x_new: &[f64],
    model: &ClassifierModel,
) -> Result<f64> {
    predict_prob_detailed(trace, x, x_new, model).map(|(p, _)| p)
}

/// As `predict_prob`, also returning the Monte Carlo standard error of the
/// estimate (autocorrelation-adjusted).
pub fn predict_prob_detailed(
    trace: &McmcTrace,
    x: &CovariateSet,
    x_new: &[f64],
    model: &ClassifierModel,
) -> Result<(f64, f64)> {
    let kept = trace.n_kept();
    if kept == 0 {
        return Err(Error::InvalidInput("prediction needs a non-empty trace".into()));
    }
    let n = x.n();
    let theta = trace
        .column("theta")
        .ok_or_else(|| Error::InvalidInput("trace has no theta column".into()))?;
    let sigma2 = trace
        .column("sigma2")
        .ok_or_else(|| Error::InvalidInput("trace has no sigma2 column".into()))?;
    let betas: Vec<&[f64]> = (0..n + 1)
        .map(|j| {
            trace
                .column(&format!("beta_{j}"))
                .ok_or_else(|| Error::InvalidInput(format!("trace has no beta_{j} column")))
        })
        .collect::<Result<_>>()?;
    let rule = gauss_hermite_32();
    let mut probs = Vec::with_capacity(kept);
    for t in 0..kept {
        let spec = KernelSpec::new(model.kernel_kind, theta[t])?;
        let k_new = build_prediction_row(x, x_new, &spec)?;
        let mean: f64 = (0..n + 1).map(|j| k_new[j] * betas[j][t]).sum();
        let sd = sigma2[t].sqrt();
        let p = rule.gaussian_expectation(mean, sd, |z| class_one_probability(model.loss, z));
        probs.push(p.clamp(0.0, 1.0));
    }
    let mean = probs.iter().sum::<f64>() / kept as f64;
    let sd = (probs.iter().map(|p| (p - mean) * (p - mean)).sum::<f64>() / kept as f64).sqrt();
    let ess = crate::mcmc::effective_sample_size(&probs);
    let mcse = if ess > 0.0 { sd / ess.sqrt() } else { f64::INFINITY };
    Ok((mean.clamp(0.0, 1.0), mcse))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::mcmc::summarize;
    use rand::Rng;

    fn priors(lambda: LambdaPriorKind) -> ClassifierPriorSpec {
        ClassifierPriorSpec::new(lambda, 1.0, 1.0, 0.3, 3.0, 1e-4).unwrap()
    }

    fn gamma11() -> LambdaPriorKind {
        LambdaPriorKind::Gamma {
            shape: 1.0,
            rate: 1.0,
        }
    }

    fn toy_model() -> ClassifierModel {
        ClassifierModel::new(LossKind::Logistic, priors(gamma11()), KernelKind::Gaussian).unwrap()
    }

    /// Two linearly separated clusters in the plane.
    fn separable_data(n: usize, seed: u64) -> (DVector<f64>, CovariateSet) {
        let mut rng = Xoshiro256PlusPlus::seed_from_u64(seed);
        let mut rows = Vec::new();
        let mut labels = Vec::new();
        for i in 0..n {
            let class = (i % 2) as f64;
            let cx = if class > 0.5 { 1.6 } else { -1.6 };
            rows.push(vec![
                cx + rng.gen_range(-0.7..0.7),
                rng.gen_range(-1.0..1.0),
            ]);
            labels.push(class);
        }
        (
            DVector::from_vec(labels),
            CovariateSet::from_rows(&rows).unwrap(),
        )
    }

    #[test]
    fn logistic_loss_values() {
        let v = loss_eval(LossKind::Logistic, 1.0, 0.0).unwrap();
        assert!((v - 2.0f64.ln()).abs() < 1e-12);
        assert!((v - std::f64::consts::LN_2).abs() < 1e-12);
    }

    #[test]
    fn hinge_loss_values() {
        assert_eq!(loss_eval(LossKind::Hinge, 1.0, 2.0).unwrap(), 0.0);
        assert_eq!(loss_eval(LossKind::Hinge, 0.0, 1.0).unwrap(), 2.0);
    }

    #[test]
    fn loss_rejects_non_binary_labels() {
        assert!(loss_eval(LossKind::Logistic, 0.5, 0.0).is_err());
        assert!(loss_eval(LossKind::Hinge, 2.0, 0.0).is_err());
    }

    #[test]
    fn losses_are_nonnegative_and_bounded_likelihood() {
        for z in [-30.0, -2.0, -0.5, 0.0, 0.5, 2.0, 30.0] {
            for y in [0.0, 1.0] {
                for kind in [LossKind::Logistic, LossKind::Hinge] {
                    let l = loss_eval(kind, y, z).unwrap();
                    assert!(l >= 0.0, "{kind:?} loss({y},{z}) = {l}");
                    assert!((-l).exp() <= 1.0 + 1e-15);
                }
            }
        }
    }

    #[test]
    fn logistic_class_probabilities_sum_to_one() {
        for z in [-5.0, -1.0, 0.0, 0.3, 4.0] {
            let p1 = class_one_probability(LossKind::Logistic, z);
            // Two-point normalization is exact by construction; for the
            // logistic loss p1 must equal the sigmoid.
            let sigmoid = 1.0 / (1.0 + (-z).exp());
            assert!((p1 - sigmoid).abs() < 1e-12);
            let e1 = (-loss_unchecked(LossKind::Logistic, 1.0, z)).exp();
            let e0 = (-loss_unchecked(LossKind::Logistic, 0.0, z)).exp();
            assert!((e1 + e0 - 1.0).abs() < 1e-12);
        }
    }

    #[test]
    fn jeffreys_is_refused_by_default() {
        let (y, x) = separable_data(10, 1);
        let model =
            ClassifierModel::new(LossKind::Logistic, priors(LambdaPriorKind::Jeffreys), KernelKind::Gaussian)
                .unwrap();
        let cfg = GibbsConfig::new(50, 10, 1, 3).unwrap();
        let err = run_classifier_mcmc(&y, &x, &model, &cfg).unwrap_err();
        match err {
            Error::GateRefusal(msg) => assert!(msg.contains("Prop1_jeffreys")),
            other => panic!("expected refusal, got {other:?}"),
        }
    }

    #[test]
    fn same_seed_gives_identical_traces() {
        let (y, x) = separable_data(8, 2);
        let model = toy_model();
        let cfg = GibbsConfig::new(150, 50, 1, 11).unwrap();
        let t1 = run_classifier_mcmc(&y, &x, &model, &cfg).unwrap();
        let t2 = run_classifier_mcmc(&y, &x, &model, &cfg).unwrap();
        for name in t1.names() {
            assert_eq!(t1.column(name).unwrap(), t2.column(name).unwrap());
        }
    }

    #[test]
    fn theta_stays_in_support_and_lambda0_fixed() {
        let (y, x) = separable_data(8, 3);
        let model = toy_model();
        let cfg = GibbsConfig::new(800, 100, 1, 17).unwrap();
        let trace = run_classifier_mcmc(&y, &x, &model, &cfg).unwrap();
        let theta = trace.column("theta").unwrap();
        assert!(theta.iter().all(|&t| t > 0.3 && t < 3.0));
        let l0 = trace.column("lambda_0").unwrap();
        assert!(l0.iter().all(|&v| v == 1e-4));
    }

    #[test]
    fn conjugate_blocks_balance_against_joint_density() {
        // Conditional density ratios must equal joint (prior × likelihood)
        // ratios for the conjugate blocks at random state pairs.
        use crate::quadrature::ln_gamma;
        let (y, x) = separable_data(6, 4);
        let model = toy_model();
        let mut sampler = ClassifierSampler::new(&y, &x, &model, 5).unwrap();
        let mut rng = Xoshiro256PlusPlus::seed_from_u64(6);
        // Randomize the state a little.
        for _ in 0..10 {
            sampler.sweep(0).unwrap();
        }
        let n = y.len();
        let k = sampler.design().matrix().clone();
        let st = sampler.state.clone();

        // β block.
        let (mean, cov) = sampler.beta_conditional().unwrap();
        let joint_beta = |b: &DVector<f64>| {
            let r = (&st.z - &k * b).norm_squared();
            let prior: f64 = (0..n + 1)
                .map(|j| -0.5 * st.lambda[j] * b[j] * b[j] / st.sigma2)
                .sum();
            -0.5 * r / st.sigma2 + prior
        };
        let mut diffs = Vec::new();
        for _ in 0..10 {
            let b = DVector::from_fn(n + 1, |_, _| rng.gen_range(-1.0..1.0));
            let cond = crate::linalg::gaussian_logpdf(&b, &mean, &cov).unwrap();
            diffs.push(cond - joint_beta(&b));
        }
        let first = diffs[0];
        assert!(diffs.iter().all(|d| (d - first).abs() < 1e-8));

        // λ_i block (i = 1): Gamma(a + 1/2, b + β_i²/(2σ²)).
        let shape = 1.0 + 0.5;
        let rate = 1.0 + st.beta[1].powi(2) / (2.0 * st.sigma2);
        let mut diffs = Vec::new();
        for _ in 0..10 {
            let l: f64 = rng.gen_range(0.05..4.0);
            let cond = shape * rate.ln() - ln_gamma(shape) + (shape - 1.0) * l.ln() - rate * l;
            // prior λ^{a-1}e^{-bλ} × N(β_1; 0, σ²/λ).
            let joint = 0.0 * l.ln() - l + 0.5 * l.ln() - 0.5 * l * st.beta[1].powi(2) / st.sigma2;
            diffs.push(cond - joint);
        }
        let first = diffs[0];
        assert!(diffs.iter().all(|d| (d - first).abs() < 1e-8));

        // σ² block: InverseGamma(c + n/2 + (n+1)/2, d + ‖z−Kβ‖²/2 + βᵀDβ/2).
        let resid = (&st.z - &k * &st.beta).norm_squared();
        let quad: f64 = (0..n + 1).map(|j| st.lambda[j] * st.beta[j].powi(2)).sum();
        let shape = 1.0 + n as f64 / 2.0 + (n as f64 + 1.0) / 2.0;
        let rate = 1.0 + 0.5 * resid + 0.5 * quad;
        let mut diffs = Vec::new();
        for _ in 0..10 {
            let s2: f64 = rng.gen_range(0.1..3.0);
            let cond = shape * rate.ln() - ln_gamma(shape) - (shape + 1.0) * s2.ln() - rate / s2;
            let joint = -0.5 * (n as f64) * s2.ln() - 0.5 * resid / s2
                - 0.5 * (n as f64 + 1.0) * s2.ln()
                - 0.5 * quad / s2
                - (1.0 + 1.0) * s2.ln()
                - 1.0 / s2;
            diffs.push(cond - joint);
        }
        let first = diffs[0];
        assert!(
            diffs.iter().all(|d| (d - first).abs() < 1e-8),
            "sigma2 block imbalance"
        );
    }

    #[test]
    fn z_block_without_loss_samples_prior_gaussian() {
        // With the loss disabled the z-marginal must be N(Kβ, σ²I):
        // Kolmogorov–Smirnov per coordinate on thinned draws.
        let (y, x) = separable_data(3, 7);
        let model = toy_model();
        let mut sampler = ClassifierSampler::new(&y, &x, &model, 8).unwrap();
        sampler.state.beta = DVector::from_vec(vec![0.4, -0.2, 0.8, 0.1]);
        sampler.state.sigma2 = 0.49;
        let mean = sampler.design().matrix() * &sampler.state.beta;
        let thin = 10;
        let kept = 10_000;
        let mut draws: Vec<Vec<f64>> = vec![Vec::with_capacity(kept); 3];
        // Warm up, then collect.
        for _ in 0..2_000 {
            sampler.update_z_prior_only();
        }
        for _ in 0..kept {
            for _ in 0..thin {
                sampler.update_z_prior_only();
            }
            for i in 0..3 {
                draws[i].push(sampler.state.z[i]);
            }
        }
        let sd = 0.7f64;
        for i in 0..3 {
            let mut v = draws[i].clone();
            v.sort_by(|a, b| a.partial_cmp(b).unwrap());
            let mut ks = 0.0f64;
            for (j, &val) in v.iter().enumerate() {
                let z = (val - mean[i]) / (sd * std::f64::consts::SQRT_2);
                let cdf = 0.5 * (1.0 + erf(z));
                let lo = j as f64 / kept as f64;
                let hi = (j + 1) as f64 / kept as f64;
                ks = ks.max((cdf - lo).abs()).max((cdf - hi).abs());
            }
            assert!(ks < 0.02, "coordinate {i}: KS statistic {ks}");
        }
    }

    // Abramowitz–Stegun 7.1.26 rational approximation, enough for the KS
    // check above.
    fn erf(x: f64) -> f64 {
        let sign = if x < 0.0 { -1.0 } else { 1.0 };
        let x = x.abs();
        let t = 1.0 / (1.0 + 0.3275911 * x);
        let poly = t
            * (0.254829592
                + t * (-0.284496736 + t * (1.421413741 + t * (-1.453152027 + t * 1.061405429))));
        sign * (1.0 - poly * (-x * x).exp())
    }

    #[test]
    fn separable_toy_data_is_learned() {
        let (y, x) = separable_data(24, 9);
        let model = toy_model();
        let cfg = GibbsConfig::new(1500, 500, 1, 21).unwrap();
        let trace = run_classifier_mcmc(&y, &x, &model, &cfg).unwrap();
        let mut correct = 0;
        for i in 0..24 {
            let row = x.row(i);
            let p = predict_prob(&trace, &x, row.as_slice(), &model).unwrap();
            assert!((0.0..=1.0).contains(&p));
            let class = if p > 0.5 { 1.0 } else { 0.0 };
            if class == y[i] {
                correct += 1;
            }
        }
        assert!(
            correct as f64 / 24.0 >= 0.9,
            "training accuracy {}",
            correct as f64 / 24.0
        );
    }

    #[test]
    fn empty_trace_prediction_is_error() {
        let (_, x) = separable_data(4, 10);
        let model = toy_model();
        let trace = McmcTrace::new(vec!["theta".into()]);
        assert!(predict_prob(&trace, &x, &[0.0, 0.0], &model).is_err());
    }

    #[test]
    fn hinge_model_runs_and_predicts_in_range() {
        let (y, x) = separable_data(10, 11);
        let model =
            ClassifierModel::new(LossKind::Hinge, priors(gamma11()), KernelKind::Gaussian).unwrap();
        let cfg = GibbsConfig::new(400, 100, 1, 13).unwrap();
        let trace = run_classifier_mcmc(&y, &x, &model, &cfg).unwrap();
        let p = predict_prob(&trace, &x, &[0.0, 0.0], &model).unwrap();
        assert!((0.0..=1.0).contains(&p));
        let s = summarize(&trace).unwrap();
        assert!(s.get("sigma2").unwrap().mean > 0.0);
    }
}
