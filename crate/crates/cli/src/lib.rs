//! Support library for the `sbl` command line tool: CSV ingestion, the
//! θ cross-validation loop, and the bound-verification suites.

use std::fs;
use std::path::Path;

use nalgebra::DVector;
use sbl_core::error::{Error, Result};
use sbl_core::kernel::{build_design_matrix, build_prediction_row, CovariateSet, KernelKind, KernelSpec};
use sbl_core::lab::{
    lemma4_quadrature, verify_eigen_bounds, verify_lemma2_bounds, verify_monotone_f1,
    RandomInstance,
};
use sbl_core::linalg::smw_inverse;
use sbl_core::propriety::lemma4_closed_form;
use sbl_core::regression::{fit_type2_ml, predict, FitOptions};

/// A parsed data file: covariates, response column and names.
#[derive(Debug, Clone)]
pub struct Dataset {
    pub source: String,
    pub x: CovariateSet,
    pub y: DVector<f64>,
    pub feature_names: Vec<String>,
    pub response_name: String,
}

impl Dataset {
    pub fn n(&self) -> usize {
        self.x.n()
    }

    pub fn p(&self) -> usize {
        self.x.p()
    }

    /// Classification responses must be exactly 0 or 1.
    pub fn require_binary_response(&self) -> Result<()> {
        for (i, &v) in self.y.iter().enumerate() {
            if v != 0.0 && v != 1.0 {
                return Err(Error::InvalidInput(format!(
                    "response at data row {} is {v}, but classification needs labels in {{0, 1}}",
                    i + 1
                )));
            }
        }
        Ok(())
    }
}

/// Read a header-first, comma-separated, UTF-8 data file, splitting off the
/// named response column. Parse errors cite the 1-based data row and the
/// column name.
pub fn ingest_csv(path: &Path, response_column: &str) -> Result<Dataset> {
    let text = fs::read_to_string(path)
        .map_err(|e| Error::Parse(format!("cannot read {}: {e}", path.display())))?;
    let mut lines = text.lines().filter(|l| !l.trim().is_empty());
    let header = lines
        .next()
        .ok_or_else(|| Error::Parse(format!("{} is empty", path.display())))?;
    let names: Vec<&str> = header.split(',').map(str::trim).collect();
    let resp_idx = names.iter().position(|&n| n == response_column).ok_or_else(|| {
        Error::Parse(format!(
            "response column '{response_column}' not found; available columns: {}",
            names.join(", ")
        ))
    })?;
    let mut rows: Vec<Vec<f64>> = Vec::new();
    let mut y = Vec::new();
    for (i, line) in lines.enumerate() {
        let cells: Vec<&str> = line.split(',').map(str::trim).collect();
        if cells.len() != names.len() {
            return Err(Error::Parse(format!(
                "data row {} has {} cells but the header names {} columns",
                i + 1,
                cells.len(),
                names.len()
            )));
        }
        let mut row = Vec::with_capacity(names.len() - 1);
        for (j, cell) in cells.iter().enumerate() {
            let value: f64 = cell.parse().map_err(|_| {
                Error::Parse(format!(
                    "cell '{cell}' at data row {} column '{}' is not numeric",
                    i + 1,
                    names[j]
                ))
            })?;
            if j == resp_idx {
                y.push(value);
            } else {
                row.push(value);
            }
        }
        rows.push(row);
    }
    if rows.is_empty() {
        return Err(Error::Parse(format!(
            "{} has a header but no data rows",
            path.display()
        )));
    }
    let feature_names = names
        .iter()
        .enumerate()
        .filter(|(j, _)| *j != resp_idx)
        .map(|(_, n)| n.to_string())
        .collect();
    Ok(Dataset {
        source: path.display().to_string(),
        x: CovariateSet::from_rows(&rows)?,
        y: DVector::from_vec(y),
        feature_names,
        response_name: response_column.to_string(),
    })
}

/// Read covariate rows only, optionally dropping a named column (so files
/// that still carry the response can be fed to `predict`).
pub fn ingest_features_csv(path: &Path, drop_column: Option<&str>) -> Result<(Vec<Vec<f64>>, Vec<String>)> {
    let text = fs::read_to_string(path)
        .map_err(|e| Error::Parse(format!("cannot read {}: {e}", path.display())))?;
    let mut lines = text.lines().filter(|l| !l.trim().is_empty());
    let header = lines
        .next()
        .ok_or_else(|| Error::Parse(format!("{} is empty", path.display())))?;
    let names: Vec<&str> = header.split(',').map(str::trim).collect();
    let drop_idx = match drop_column {
        Some(c) => names.iter().position(|&n| n == c),
        None => None,
    };
    let mut rows = Vec::new();
    for (i, line) in lines.enumerate() {
        let cells: Vec<&str> = line.split(',').map(str::trim).collect();
        if cells.len() != names.len() {
            return Err(Error::Parse(format!(
                "data row {} has {} cells but the header names {} columns",
                i + 1,
                cells.len(),
                names.len()
            )));
        }
        let mut row = Vec::new();
        for (j, cell) in cells.iter().enumerate() {
            if Some(j) == drop_idx {
                continue;
            }
            row.push(cell.parse::<f64>().map_err(|_| {
                Error::Parse(format!(
                    "cell '{cell}' at data row {} column '{}' is not numeric",
                    i + 1,
                    names[j]
                ))
            })?);
        }
        rows.push(row);
    }
    let kept = names
        .iter()
        .enumerate()
        .filter(|(j, _)| Some(*j) != drop_idx)
        .map(|(_, n)| n.to_string())
        .collect();
    Ok((rows, kept))
}

/// k-fold predictive root-mean-square error for one kernel bandwidth.
fn fold_rmse(
    x_rows: &[Vec<f64>],
    y: &DVector<f64>,
    spec: &KernelSpec,
    folds: usize,
    opts: &FitOptions,
) -> Result<f64> {
    let n = x_rows.len();
    let mut sq_sum = 0.0;
    let mut count = 0usize;
    for fold in 0..folds {
        let train_idx: Vec<usize> = (0..n).filter(|i| i % folds != fold).collect();
        let test_idx: Vec<usize> = (0..n).filter(|i| i % folds == fold).collect();
        if train_idx.len() < 2 || test_idx.is_empty() {
            continue;
        }
        let train_rows: Vec<Vec<f64>> = train_idx.iter().map(|&i| x_rows[i].clone()).collect();
        let x_train = CovariateSet::from_rows(&train_rows)?;
        let y_train = DVector::from_iterator(train_idx.len(), train_idx.iter().map(|&i| y[i]));
        let k = build_design_matrix(&x_train, spec)?;
        let fit = fit_type2_ml(&y_train, &k, None, opts)?;
        for &i in &test_idx {
            let row = build_prediction_row(&x_train, &x_rows[i], spec)?;
            let pred = predict(&fit, &row)?;
            sq_sum += (pred.mean - y[i]).powi(2);
            count += 1;
        }
    }
    if count == 0 {
        return Err(Error::InvalidConfig(
            "cross validation left no test points; reduce folds".into(),
        ));
    }
    Ok((sq_sum / count as f64).sqrt())
}

/// Select θ from a grid by k-fold predictive RMSE. Returns the winning θ and
/// the (θ, rmse) table.
pub fn cross_validate_theta(
    x_rows: &[Vec<f64>],
    y: &DVector<f64>,
    kind: KernelKind,
    grid: &[f64],
    folds: usize,
    opts: &FitOptions,
) -> Result<(f64, Vec<(f64, f64)>)> {
    if grid.is_empty() {
        return Err(Error::InvalidConfig("theta grid is empty".into()));
    }
    if folds < 2 {
        return Err(Error::InvalidConfig("cross validation needs >= 2 folds".into()));
    }
    let mut table = Vec::with_capacity(grid.len());
    for &theta in grid {
        let spec = KernelSpec::new(kind, theta)?;
        let rmse = fold_rmse(x_rows, y, &spec, folds, opts)?;
        table.push((theta, rmse));
    }
    let best = table
        .iter()
        .cloned()
        .min_by(|a, b| a.1.partial_cmp(&b.1).unwrap_or(std::cmp::Ordering::Equal))
        .expect("non-empty table");
    Ok((best.0, table))
}

/// One verification suite's outcome.
#[derive(Debug, Clone)]
pub struct SuiteOutcome {
    pub name: &'static str,
    pub checks: usize,
    pub failures: usize,
}

impl SuiteOutcome {
    pub fn record(&self) -> String {
        format!(
            "suite={} checks={} failures={} status={}",
            self.name,
            self.checks,
            self.failures,
            if self.failures == 0 { "pass" } else { "fail" }
        )
    }
}

/// Run every lab property suite over seeded random instances plus the
/// boundary-integral agreement grid. Mirrors the acceptance checks so the
/// gate is scriptable outside the test harness.
pub fn run_verification_suites(seed: u64, instances: usize) -> Result<Vec<SuiteOutcome>> {
    let mut outcomes = Vec::new();

    let mut failures = 0;
    for i in 0..instances {
        let inst = RandomInstance::generate(seed.wrapping_add(i as u64));
        if !verify_lemma2_bounds(&inst)?.ok() {
            failures += 1;
        }
    }
    outcomes.push(SuiteOutcome {
        name: "lemma2_sandwich",
        checks: instances,
        failures,
    });

    let mut failures = 0;
    let mut checks = 0;
    for i in 0..instances {
        let inst = RandomInstance::generate(seed.wrapping_add(i as u64));
        for coord in 0..=inst.n {
            checks += 1;
            if !verify_monotone_f1(&inst, coord, 1e-5)? {
                failures += 1;
            }
        }
    }
    outcomes.push(SuiteOutcome {
        name: "f1_monotonicity",
        checks,
        failures,
    });

    let mut failures = 0;
    for i in 0..instances {
        let inst = RandomInstance::generate(seed.wrapping_add(i as u64));
        if !verify_eigen_bounds(&inst)? {
            failures += 1;
        }
    }
    outcomes.push(SuiteOutcome {
        name: "eigenvalue_bounds",
        checks: instances,
        failures,
    });

    let mut failures = 0;
    for i in 0..instances {
        let inst = RandomInstance::generate(seed.wrapping_add(i as u64));
        let inv = smw_inverse(inst.sigma2, &inst.k, &inst.lambda)?;
        // Dense reconstruction of sigma^2 I + K D^{-1} K^T.
        let n = inst.n;
        let mut c = nalgebra::DMatrix::identity(n, n) * inst.sigma2;
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
        let eye = nalgebra::DMatrix::identity(n, n);
        if (prod - eye).abs().max() > 1e-8 {
            failures += 1;
        }
    }
    outcomes.push(SuiteOutcome {
        name: "smw_identity",
        checks: instances,
        failures,
    });

    let mut failures = 0;
    let mut checks = 0;
    for &a in &[-0.49, -0.4, -0.3, -0.25, -0.01] {
        for &k in &[0.5, 1.0, 2.0, 8.0] {
            checks += 1;
            let exact = match lemma4_closed_form(a, k)? {
                sbl_core::propriety::Lemma4Value::Finite(v) => v,
                sbl_core::propriety::Lemma4Value::Divergent => {
                    failures += 1;
                    continue;
                }
            };
            if (lemma4_extrapolated(a, k)? - exact).abs() > 1e-6 * exact {
                failures += 1;
            }
        }
    }
    outcomes.push(SuiteOutcome {
        name: "lemma4_agreement",
        checks,
        failures,
    });

    Ok(outcomes)
}

/// Extrapolate the truncated boundary integral to T → ∞ on a geometric grid:
/// the tail decays like T^{−(a+1/2)} for a in (−1/2, 0).
pub fn lemma4_extrapolated(a: f64, k: f64) -> Result<f64> {
    let i1 = lemma4_quadrature(a, k, 1e6)?;
    let i2 = lemma4_quadrature(a, k, 1e8)?;
    let rho = 1e2f64.powf(-(a + 0.5));
    Ok(if i2 > i1 {
        i2 + (i2 - i1) * rho / (1.0 - rho)
    } else {
        i2
    })
}

/// Parse a comma-separated list of floats (grid flags).
pub fn parse_grid(s: &str) -> Result<Vec<f64>> {
    s.split(',')
        .map(|t| {
            t.trim()
                .parse::<f64>()
                .map_err(|_| Error::Parse(format!("bad grid value '{t}'")))
        })
        .collect()
}
