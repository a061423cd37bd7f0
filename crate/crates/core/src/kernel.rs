//! Reproducing-kernel design matrices.
//!
//! The regression and classification models both work on the n×(n+1) design
//! matrix whose i-th row is (1, k_θ(x_i, x_1), ..., k_θ(x_i, x_n)): a leading
//! intercept column followed by kernel evaluations against every training
//! point. This module builds that matrix and the matching prediction rows.

use nalgebra::{DMatrix, DVector};

use crate::error::{Error, Result};

/// The kernel families the toolkit supports.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum KernelKind {
    Gaussian,
    Laplace,
    Polynomial,
    Linear,
}

impl KernelKind {
    pub fn name(&self) -> &'static str {
        match self {
            KernelKind::Gaussian => "gaussian",
            KernelKind::Laplace => "laplace",
            KernelKind::Polynomial => "polynomial",
            KernelKind::Linear => "linear",
        }
    }

    pub fn parse(s: &str) -> Result<Self> {
        match s {
            "gaussian" => Ok(KernelKind::Gaussian),
            "laplace" => Ok(KernelKind::Laplace),
            "polynomial" => Ok(KernelKind::Polynomial),
            "linear" => Ok(KernelKind::Linear),
            other => Err(Error::InvalidConfig(format!(
                "unknown kernel kind '{other}' (expected gaussian, laplace, polynomial or linear)"
            ))),
        }
    }
}

/// A kernel family together with its bandwidth/scale parameter θ.
///
/// θ is a fixed input here; selecting it (e.g. by cross validation) is the
/// caller's business.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct KernelSpec {
    pub kind: KernelKind,
    pub theta: f64,
}

impl KernelSpec {
    pub fn new(kind: KernelKind, theta: f64) -> Result<Self> {
        if !(theta > 0.0) || !theta.is_finite() {
            return Err(Error::InvalidConfig(format!(
                "kernel parameter theta must be a positive finite real, got {theta}"
            )));
        }
        Ok(Self { kind, theta })
    }
}

/// An n×p matrix of raw covariates; rows are observations.
#[derive(Debug, Clone)]
pub struct CovariateSet {
    x: DMatrix<f64>,
}

impl CovariateSet {
    pub fn new(x: DMatrix<f64>) -> Result<Self> {
        if x.nrows() == 0 || x.ncols() == 0 {
            return Err(Error::InvalidInput(format!(
                "covariate matrix must have n >= 1 and p >= 1, got {}x{}",
                x.nrows(),
                x.ncols()
            )));
        }
        if x.iter().any(|v| !v.is_finite()) {
            return Err(Error::InvalidInput(
                "covariate matrix contains non-finite entries".into(),
            ));
        }
        Ok(Self { x })
    }

    /// Build from row-major data, one inner slice per observation.
    pub fn from_rows(rows: &[Vec<f64>]) -> Result<Self> {
        if rows.is_empty() {
            return Err(Error::InvalidInput("no covariate rows supplied".into()));
        }
        let p = rows[0].len();
        if rows.iter().any(|r| r.len() != p) {
            return Err(Error::DimensionMismatch(
                "covariate rows have differing lengths".into(),
            ));
        }
        let n = rows.len();
        Self::new(DMatrix::from_fn(n, p, |i, j| rows[i][j]))
    }

    pub fn n(&self) -> usize {
        self.x.nrows()
    }

    pub fn p(&self) -> usize {
        self.x.ncols()
    }

    pub fn matrix(&self) -> &DMatrix<f64> {
        &self.x
    }

    pub fn row(&self, i: usize) -> DVector<f64> {
        self.x.row(i).transpose()
    }
}

/// The n×(n+1) design matrix K with its generating kernel.
///
/// Column 0 is all ones; entry (i, j+1) is k_θ(x_i, x_j).
#[derive(Debug, Clone)]
pub struct DesignMatrix {
    k: DMatrix<f64>,
    spec: KernelSpec,
}

impl DesignMatrix {
    pub fn matrix(&self) -> &DMatrix<f64> {
        &self.k
    }

    pub fn spec(&self) -> &KernelSpec {
        &self.spec
    }

    /// Number of observations n (rows).
    pub fn n(&self) -> usize {
        self.k.nrows()
    }

    /// Number of columns, always n+1.
    pub fn ncols(&self) -> usize {
        self.k.ncols()
    }

    /// Wrap an externally assembled matrix. Intended for tests and for the
    /// verification lab, which needs degenerate matrices (all zeros,
    /// duplicated rows) that no kernel produces.
    pub fn from_raw(k: DMatrix<f64>, spec: KernelSpec) -> Result<Self> {
        if k.ncols() != k.nrows() + 1 {
            return Err(Error::DimensionMismatch(format!(
                "design matrix must be n x (n+1), got {}x{}",
                k.nrows(),
                k.ncols()
            )));
        }
        Ok(Self { k, spec })
    }
}

fn check_dims(x1: &[f64], x2: &[f64]) -> Result<()> {
    if x1.len() != x2.len() {
        return Err(Error::DimensionMismatch(format!(
            "kernel arguments have lengths {} and {}",
            x1.len(),
            x2.len()
        )));
    }
    Ok(())
}

/// Evaluate k_θ(x1, x2).
///
/// Forms: gaussian exp(−‖x1−x2‖²/(2θ²)), laplace exp(−‖x1−x2‖/θ),
/// polynomial (1 + x1·x2/θ)², linear x1·x2.
pub fn kernel_eval(spec: &KernelSpec, x1: &[f64], x2: &[f64]) -> Result<f64> {
    check_dims(x1, x2)?;
    let theta = spec.theta;
    let value = match spec.kind {
        KernelKind::Gaussian => {
            let sq: f64 = x1.iter().zip(x2).map(|(a, b)| (a - b) * (a - b)).sum();
            (-sq / (2.0 * theta * theta)).exp()
        }
        KernelKind::Laplace => {
            let sq: f64 = x1.iter().zip(x2).map(|(a, b)| (a - b) * (a - b)).sum();
            (-sq.sqrt() / theta).exp()
        }
        KernelKind::Polynomial => {
            let dot: f64 = x1.iter().zip(x2).map(|(a, b)| a * b).sum();
            let base = 1.0 + dot / theta;
            base * base
        }
        KernelKind::Linear => x1.iter().zip(x2).map(|(a, b)| a * b).sum(),
    };
    Ok(value)
}

/// Build the n×(n+1) design matrix for a covariate set.
pub fn build_design_matrix(x: &CovariateSet, spec: &KernelSpec) -> Result<DesignMatrix> {
    let n = x.n();
    let mut k = DMatrix::zeros(n, n + 1);
    for i in 0..n {
        k[(i, 0)] = 1.0;
    }
    // Kernel symmetry: fill the (i, j) pair once.
    for i in 0..n {
        let xi = x.matrix().row(i);
        for j in i..n {
            let v = kernel_eval(spec, xi.transpose().as_slice(), x.matrix().row(j).transpose().as_slice())?;
            k[(i, j + 1)] = v;
            k[(j, i + 1)] = v;
        }
    }
    Ok(DesignMatrix { k, spec: *spec })
}

/// Build the (n+1)-vector (1, k_θ(x_new, x_1), ..., k_θ(x_new, x_n)) used by
/// the posterior predictive distribution.
pub fn build_prediction_row(
    x: &CovariateSet,
    x_new: &[f64],
    spec: &KernelSpec,
) -> Result<DVector<f64>> {
    if x_new.len() != x.p() {
        return Err(Error::DimensionMismatch(format!(
            "x_new has {} entries but covariates have p = {}",
            x_new.len(),
            x.p()
        )));
    }
    let n = x.n();
    let mut row = DVector::zeros(n + 1);
    row[0] = 1.0;
    for j in 0..n {
        row[j + 1] = kernel_eval(spec, x_new, x.matrix().row(j).transpose().as_slice())?;
    }
    Ok(row)
}
