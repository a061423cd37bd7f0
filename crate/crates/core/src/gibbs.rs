//! Fully Bayesian relevance vector machine via Gibbs sampling.
//!
//! Cycles the conjugate full conditionals
//!
//! * β | λ, σ², y ~ N((KᵀK + Dσ²)⁻¹Kᵀy, (KᵀKσ⁻² + D)⁻¹)
//! * λ_i | β_i ~ Gamma(a + 1/2, rate b + β_i²/2)
//! * 1/σ² | β, y ~ Gamma(c + n/2, rate d + ‖y − Kβ‖²/2)
//!
//! in that fixed order. The propriety gate is consulted before the first
//! draw: sampling an uncertified posterior is an explicit opt-in
//! (`allow_improper`), reserved for the impropriety demonstrations. Chains
//! are driven by Xoshiro256++ seeded from the run configuration, so identical
//! inputs give bitwise-identical traces.

use nalgebra::DVector;
use rand::{Rng, SeedableRng};
use rand_distr::Distribution;
use rand_xoshiro::Xoshiro256PlusPlus;

use crate::error::{Error, Result};
use crate::kernel::DesignMatrix;
use crate::linalg::CovarianceFactor;
use crate::mcmc::{BlockAcceptance, GibbsConfig, McmcTrace};
use crate::propriety::{check_rvm_propriety, ProprietyStatus, RvmHyperParams};

/// Keep draws inside the representable range; the exploding-precision
/// trajectories of improper configurations would otherwise overflow.
const DRAW_CLAMP: (f64, f64) = (1e-300, 1e300);

/// Draw β from its conjugate conditional given (λ, σ²).
///
/// Exposed for block-level validation; `run_chain` is the normal entry.
pub fn draw_beta<R: Rng>(
    rng: &mut R,
    y: &DVector<f64>,
    k: &DesignMatrix,
    lambda: &[f64],
    sigma2: f64,
) -> Result<DVector<f64>> {
    let m = k.ncols();
    let mut b = k.matrix().transpose() * k.matrix() / sigma2;
    for (j, &l) in lambda.iter().enumerate() {
        b[(j, j)] += l;
    }
    let kty = k.matrix().transpose() * y;
    let z = DVector::from_fn(m, |_, _| rand_distr::StandardNormal.sample(rng));
    if let Ok(factor) = CovarianceFactor::factor(&b) {
        let mean = factor.solve_vec(&kty) / sigma2;
        // cov = B⁻¹ = L⁻ᵀ L⁻¹, so mean + L⁻ᵀ z has the right law.
        let lower = factor.lower();
        let x = lower
            .transpose()
            .solve_upper_triangular(&z)
            .ok_or_else(|| Error::Numeric("triangular solve failed in beta draw".into()))?;
        return Ok(mean + x);
    }
    // σ² collapsing toward 0 (the improper-demo regime) makes the Cholesky
    // pivots cancel catastrophically; fall back to a symmetric
    // eigendecomposition with a relative eigenvalue floor so the chain keeps
    // running.
    let eig = nalgebra::SymmetricEigen::new(b);
    let emax = eig
        .eigenvalues
        .iter()
        .cloned()
        .fold(0.0f64, f64::max)
        .max(f64::MIN_POSITIVE);
    let floor = emax * f64::EPSILON;
    let evals: Vec<f64> = eig.eigenvalues.iter().map(|&e: &f64| e.max(floor)).collect();
    let vt_kty = eig.eigenvectors.transpose() * kty;
    let mut coeff = DVector::zeros(m);
    for j in 0..m {
        coeff[j] = vt_kty[j] / evals[j] / sigma2 + z[j] / evals[j].sqrt();
    }
    Ok(&eig.eigenvectors * coeff)
}

fn draw_gamma<R: Rng>(rng: &mut R, shape: f64, rate: f64) -> Option<f64> {
    if !(shape > 0.0) || !(rate > 0.0) || !shape.is_finite() || !rate.is_finite() {
        return None;
    }
    let g = rand_distr::Gamma::new(shape, 1.0 / rate).ok()?;
    Some(g.sample(rng).clamp(DRAW_CLAMP.0, DRAW_CLAMP.1))
}

/// Run the Gibbs chain.
///
/// Unless `cfg.allow_improper` is set, the propriety gate must certify the
/// hyperparameters as Proper for this (y, K); otherwise the run is refused
/// with the verdict in the error. Under improper hyperparameters an update
/// whose conditional has invalid Gamma parameters is skipped and recorded in
/// `step_errors`, and the chain continues (demo mode).
pub fn run_chain(
    y: &DVector<f64>,
    k: &DesignMatrix,
    hp: &RvmHyperParams,
    cfg: &GibbsConfig,
) -> Result<McmcTrace> {
    if y.len() != k.n() {
        return Err(Error::DimensionMismatch(format!(
            "y has length {} but K has {} rows",
            y.len(),
            k.n()
        )));
    }
    let verdict = check_rvm_propriety(&hp.prior(), Some((y, k)), None)?;
    if verdict.status != ProprietyStatus::Proper && !cfg.allow_improper {
        return Err(Error::GateRefusal(verdict.record()));
    }

    let n = y.len();
    let m = k.ncols();
    let mut rng = Xoshiro256PlusPlus::seed_from_u64(cfg.seed);

    let mut names: Vec<String> = (0..m).map(|j| format!("beta_{j}")).collect();
    names.extend((0..m).map(|j| format!("lambda_{j}")));
    names.push("sigma2".into());
    let mut trace = McmcTrace::new(names);

    let mean_y = y.sum() / n as f64;
    let var_y = y.iter().map(|v| (v - mean_y) * (v - mean_y)).sum::<f64>() / n as f64;
    let mut lambda = vec![1.0f64; m];
    let mut sigma2 = if var_y > 0.0 { var_y } else { 1.0 };
    let mut beta;
    let mut row = vec![0.0f64; 2 * m + 2];

    for t in 0..cfg.n_iter {
        beta = draw_beta(&mut rng, y, k, &lambda, sigma2)?;
        if cfg.update_lambda {
            for j in 0..m {
                let shape = hp.a + 0.5;
                let rate = hp.b + 0.5 * beta[j] * beta[j];
                match draw_gamma(&mut rng, shape, rate) {
                    Some(l) => lambda[j] = l,
                    None => trace.step_errors.push(format!(
                        "iteration {t}: lambda[{j}] conditional invalid (shape={shape}, rate={rate}); kept previous value"
                    )),
                }
            }
        }
        if cfg.update_sigma2 {
            let resid = (y - k.matrix() * &beta).norm_squared();
            let shape = hp.c + n as f64 / 2.0;
            let rate = hp.d + 0.5 * resid;
            match draw_gamma(&mut rng, shape, rate) {
                Some(phi) => sigma2 = (1.0 / phi).clamp(DRAW_CLAMP.0, DRAW_CLAMP.1),
                None => trace.step_errors.push(format!(
                    "iteration {t}: 1/sigma2 conditional invalid (shape={shape}, rate={rate}); kept previous value"
                )),
            }
        }
        if cfg.keeps(t) {
            row.clear();
            row.extend(beta.iter());
            row.extend(lambda.iter());
            row.push(sigma2);
            trace.push_row(&row);
        }
    }
    for block in ["beta", "lambda", "sigma2"] {
        trace.accepted_meta.push(BlockAcceptance {
            block: block.into(),
            rate: 1.0,
        });
    }
    Ok(trace)
}
