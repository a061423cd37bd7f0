//! Numerical linear-algebra primitives behind every proof-backed computation:
//! Sherman–Morrison–Woodbury inversion, projection residuals, Gaussian
//! log-densities and extreme eigenvalues.

use nalgebra::{Cholesky, DMatrix, DVector, Dyn};

use crate::error::{Error, Result};
use crate::kernel::DesignMatrix;

/// The diagonal precision matrix D = diag(λ_0, ..., λ_n).
///
/// Entries are strictly positive; +∞ marks a pruned coefficient whose column
/// is dropped from the design matrix before any factorization.
#[derive(Debug, Clone)]
pub struct PrecisionDiag {
    lambda: Vec<f64>,
}

impl PrecisionDiag {
    pub fn new(lambda: Vec<f64>) -> Result<Self> {
        if lambda.is_empty() {
            return Err(Error::InvalidInput("empty precision diagonal".into()));
        }
        if lambda.iter().any(|&v| !(v > 0.0) || v.is_nan()) {
            return Err(Error::InvalidInput(
                "precision diagonal entries must be positive (possibly +inf)".into(),
            ));
        }
        Ok(Self { lambda })
    }

    /// All entries equal to `value`, length `len`.
    pub fn constant(len: usize, value: f64) -> Result<Self> {
        Self::new(vec![value; len])
    }

    pub fn len(&self) -> usize {
        self.lambda.len()
    }

    pub fn is_empty(&self) -> bool {
        self.lambda.is_empty()
    }

    pub fn values(&self) -> &[f64] {
        &self.lambda
    }

    pub fn is_pruned(&self, i: usize) -> bool {
        self.lambda[i].is_infinite()
    }

    /// Indices with finite precision, i.e. columns kept in factorizations.
    pub fn retained_indices(&self) -> Vec<usize> {
        (0..self.lambda.len())
            .filter(|&i| self.lambda[i].is_finite())
            .collect()
    }
}

/// A Cholesky factor of an SPD matrix together with its log-determinant.
#[derive(Debug, Clone)]
pub struct CovarianceFactor {
    chol: Cholesky<f64, Dyn>,
    logdet: f64,
}

impl CovarianceFactor {
    /// Factor an SPD matrix. Fails with a condition estimate when the matrix
    /// is numerically non-SPD.
    pub fn factor(m: &DMatrix<f64>) -> Result<Self> {
        match Cholesky::new(m.clone()) {
            Some(chol) => {
                let logdet = 2.0 * chol.l_dirty().diagonal().iter().map(|v| v.ln()).sum::<f64>();
                Ok(Self { chol, logdet })
            }
            None => Err(Error::Numeric(format!(
                "Cholesky factorization failed (matrix not SPD); {}",
                condition_note(m)
            ))),
        }
    }

    pub fn lower(&self) -> DMatrix<f64> {
        self.chol.l()
    }

    pub fn logdet(&self) -> f64 {
        self.logdet
    }

    pub fn solve_vec(&self, b: &DVector<f64>) -> DVector<f64> {
        self.chol.solve(b)
    }

    pub fn solve_mat(&self, b: &DMatrix<f64>) -> DMatrix<f64> {
        self.chol.solve(b)
    }

    pub fn inverse(&self) -> DMatrix<f64> {
        self.chol.inverse()
    }

    /// Lower-triangular multiply, used to turn standard normals into draws
    /// from N(0, M).
    pub fn mul_lower(&self, z: &DVector<f64>) -> DVector<f64> {
        self.chol.l_dirty().lower_triangle() * z
    }
}

fn condition_note(m: &DMatrix<f64>) -> String {
    let sym = m.symmetric_part();
    let eig = sym.symmetric_eigenvalues();
    let max = eig.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    let min = eig.iter().cloned().fold(f64::INFINITY, f64::min);
    if min <= 0.0 {
        format!("min eigenvalue {min:.3e}, max {max:.3e}")
    } else {
        format!("condition estimate {:.3e}", max / min)
    }
}

/// Extract the columns of K whose precision is finite, paired with the
/// matching finite sub-diagonal.
fn retained_parts(k: &DMatrix<f64>, d: &PrecisionDiag) -> (DMatrix<f64>, Vec<f64>) {
    let idx = d.retained_indices();
    let mut kr = DMatrix::zeros(k.nrows(), idx.len());
    let mut dr = Vec::with_capacity(idx.len());
    for (c, &j) in idx.iter().enumerate() {
        kr.set_column(c, &k.column(j));
        dr.push(d.values()[j]);
    }
    (kr, dr)
}

/// Invert σ²I + K D⁻¹ Kᵀ through the Sherman–Morrison–Woodbury identity,
/// σ⁻²(I − K (KᵀK + Dσ²)⁻¹ Kᵀ), factoring only the (n+1)×(n+1) inner matrix.
///
/// Pruned entries (λ_i = +∞) contribute nothing to K D⁻¹ Kᵀ and their columns
/// are dropped before factorization.
pub fn smw_inverse(
    sigma2: f64,
    k: &DesignMatrix,
    d: &PrecisionDiag,
) -> Result<DMatrix<f64>> {
    if !(sigma2 > 0.0) {
        return Err(Error::InvalidInput(format!(
            "sigma2 must be positive, got {sigma2}"
        )));
    }
    if d.len() != k.ncols() {
        return Err(Error::DimensionMismatch(format!(
            "precision diagonal has length {} but design matrix has {} columns",
            d.len(),
            k.ncols()
        )));
    }
    let n = k.n();
    let (kr, dr) = retained_parts(k.matrix(), d);
    if kr.ncols() == 0 {
        return Ok(DMatrix::identity(n, n) / sigma2);
    }
    let mut inner = kr.transpose() * &kr;
    for (i, &di) in dr.iter().enumerate() {
        inner[(i, i)] += di * sigma2;
    }
    let factor = CovarianceFactor::factor(&inner)?;
    let kt = kr.transpose();
    let solve = factor.solve_mat(&kt);
    let mut out = -(&kr * solve);
    for i in 0..n {
        out[(i, i)] += 1.0;
    }
    out /= sigma2;
    // Symmetrize away factorization round-off.
    let outs = out.symmetric_part();
    Ok(outs)
}

/// Residual yᵀ(I − P_K)y of the orthogonal projection onto the column space
/// of K, with P_K = K(KᵀK)⁻Kᵀ.
///
/// The generalized inverse is realized through the SVD pseudoinverse (rank
/// tolerance max-dim·ε·σ_max), to which P_K is invariant. Round-off below
/// zero is clamped since the quantity is provably nonnegative.
pub fn projection_residual(k: &DesignMatrix, y: &DVector<f64>) -> Result<f64> {
    if y.len() != k.n() {
        return Err(Error::DimensionMismatch(format!(
            "y has length {} but design matrix has {} rows",
            y.len(),
            k.n()
        )));
    }
    let m = k.matrix();
    let svd = m.clone().svd(true, false);
    let u = svd.u.as_ref().expect("svd computed with u");
    let smax = svd.singular_values.iter().cloned().fold(0.0, f64::max);
    let tol = (m.nrows().max(m.ncols()) as f64) * f64::EPSILON * smax;
    let mut projected = 0.0;
    for (j, &s) in svd.singular_values.iter().enumerate() {
        if s > tol {
            let c = u.column(j).dot(y);
            projected += c * c;
        }
    }
    Ok((y.norm_squared() - projected).max(0.0))
}

/// Exact multivariate normal log-density via Cholesky.
pub fn gaussian_logpdf(
    y: &DVector<f64>,
    mean: &DVector<f64>,
    cov: &DMatrix<f64>,
) -> Result<f64> {
    let n = y.len();
    if mean.len() != n || cov.nrows() != n || cov.ncols() != n {
        return Err(Error::DimensionMismatch(format!(
            "gaussian_logpdf: y has length {n}, mean {}, cov {}x{}",
            mean.len(),
            cov.nrows(),
            cov.ncols()
        )));
    }
    let factor = CovarianceFactor::factor(cov)?;
    let r = y - mean;
    let solved = factor.solve_vec(&r);
    let quad = r.dot(&solved);
    Ok(-0.5 * (n as f64 * (2.0 * std::f64::consts::PI).ln() + factor.logdet() + quad))
}

const SYMMETRY_RTOL: f64 = 1e-10;

/// Largest eigenvalue of a symmetric PSD matrix, via power iteration with a
/// Rayleigh-quotient stopping rule. The dense symmetric eigendecomposition
/// stays available as an independent test oracle.
pub fn max_eigenvalue(m: &DMatrix<f64>) -> Result<f64> {
    if m.nrows() != m.ncols() {
        return Err(Error::InvalidInput(format!(
            "matrix must be square, got {}x{}",
            m.nrows(),
            m.ncols()
        )));
    }
    let scale = m.abs().max();
    for i in 0..m.nrows() {
        for j in (i + 1)..m.ncols() {
            if (m[(i, j)] - m[(j, i)]).abs() > SYMMETRY_RTOL * scale.max(1.0) {
                return Err(Error::InvalidInput(format!(
                    "matrix is not symmetric at ({i},{j}): {} vs {}",
                    m[(i, j)],
                    m[(j, i)]
                )));
            }
        }
    }
    if scale == 0.0 {
        return Ok(0.0);
    }
    let n = m.nrows();
    // Deterministic generic start direction.
    let mut v = DVector::from_fn(n, |i, _| 1.0 + 0.017 * (i as f64 + 1.0).sin());
    v /= v.norm();
    let mut rq_prev = f64::NEG_INFINITY;
    for _ in 0..200_000 {
        let mv = m * &v;
        let norm = mv.norm();
        if norm == 0.0 {
            return Ok(0.0);
        }
        let rq = v.dot(&mv);
        if (rq - rq_prev).abs() <= 1e-13 * rq.abs().max(scale * 1e-16) {
            return Ok(rq);
        }
        rq_prev = rq;
        v = mv / norm;
    }
    Ok(rq_prev)
}
