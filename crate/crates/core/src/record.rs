//! Structured text records: one record per line, explicit `key=value` pairs,
//! values with spaces quoted. Chosen for diff-ability; every artifact the
//! toolkit writes (verdicts, fits, summaries) is a record or a CSV.

use nalgebra::{DMatrix, DVector};

use crate::error::{Error, Result};
use crate::kernel::{CovariateSet, KernelKind, KernelSpec};
use crate::linalg::PrecisionDiag;
use crate::propriety::ProprietyVerdict;
use crate::regression::RvmFit;

/// An ordered set of key=value fields.
#[derive(Debug, Clone, Default)]
pub struct Record {
    fields: Vec<(String, String)>,
}

impl Record {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn push(&mut self, key: &str, value: impl std::fmt::Display) {
        self.fields.push((key.to_string(), value.to_string()));
    }

    pub fn get(&self, key: &str) -> Option<&str> {
        self.fields
            .iter()
            .find(|(k, _)| k == key)
            .map(|(_, v)| v.as_str())
    }

    pub fn require(&self, key: &str) -> Result<&str> {
        self.get(key)
            .ok_or_else(|| Error::Parse(format!("record is missing field '{key}'")))
    }

    pub fn require_f64(&self, key: &str) -> Result<f64> {
        parse_float(self.require(key)?)
            .ok_or_else(|| Error::Parse(format!("field '{key}' is not a number")))
    }

    pub fn to_line(&self) -> String {
        self.fields
            .iter()
            .map(|(k, v)| {
                if v.contains(' ') || v.is_empty() {
                    format!("{k}=\"{v}\"")
                } else {
                    format!("{k}={v}")
                }
            })
            .collect::<Vec<_>>()
            .join(" ")
    }

    /// Parse one record line. Quoted values may contain spaces; quotes are
    /// not nested.
    pub fn parse_line(line: &str) -> Result<Self> {
        let mut fields = Vec::new();
        let mut rest = line.trim();
        while !rest.is_empty() {
            let eq = rest
                .find('=')
                .ok_or_else(|| Error::Parse(format!("expected key=value, got '{rest}'")))?;
            let key = rest[..eq].to_string();
            rest = &rest[eq + 1..];
            let value;
            if let Some(stripped) = rest.strip_prefix('"') {
                let close = stripped
                    .find('"')
                    .ok_or_else(|| Error::Parse(format!("unterminated quote after '{key}'")))?;
                value = stripped[..close].to_string();
                rest = stripped[close + 1..].trim_start();
            } else {
                match rest.find(' ') {
                    Some(sp) => {
                        value = rest[..sp].to_string();
                        rest = rest[sp + 1..].trim_start();
                    }
                    None => {
                        value = rest.to_string();
                        rest = "";
                    }
                }
            }
            fields.push((key, value));
        }
        Ok(Self { fields })
    }
}

fn format_float(v: f64) -> String {
    if v.is_infinite() {
        if v > 0.0 { "inf".into() } else { "-inf".into() }
    } else {
        format!("{v:.17e}")
    }
}

fn parse_float(s: &str) -> Option<f64> {
    match s {
        "inf" => Some(f64::INFINITY),
        "-inf" => Some(f64::NEG_INFINITY),
        other => other.parse().ok(),
    }
}

/// Comma-joined vector; +∞ entries (pruned precisions) written as `inf`.
pub fn format_vector(v: &[f64]) -> String {
    v.iter()
        .map(|&x| format_float(x))
        .collect::<Vec<_>>()
        .join(",")
}

pub fn parse_vector(s: &str) -> Result<Vec<f64>> {
    if s.is_empty() {
        return Ok(Vec::new());
    }
    s.split(',')
        .map(|t| parse_float(t).ok_or_else(|| Error::Parse(format!("bad number '{t}'"))))
        .collect()
}

/// Semicolon-separated rows of comma-joined entries.
pub fn format_matrix(m: &DMatrix<f64>) -> String {
    (0..m.nrows())
        .map(|i| {
            (0..m.ncols())
                .map(|j| format_float(m[(i, j)]))
                .collect::<Vec<_>>()
                .join(",")
        })
        .collect::<Vec<_>>()
        .join(";")
}

pub fn parse_matrix(s: &str) -> Result<DMatrix<f64>> {
    let rows: Vec<Vec<f64>> = s
        .split(';')
        .map(parse_vector)
        .collect::<Result<_>>()?;
    if rows.is_empty() || rows[0].is_empty() {
        return Err(Error::Parse("empty matrix".into()));
    }
    let p = rows[0].len();
    if rows.iter().any(|r| r.len() != p) {
        return Err(Error::Parse("ragged matrix rows".into()));
    }
    Ok(DMatrix::from_fn(rows.len(), p, |i, j| rows[i][j]))
}

/// A fitted RVM together with everything needed to predict on new rows:
/// the kernel, the training covariates and responses, and the gate verdict
/// recorded at fit time.
#[derive(Debug, Clone)]
pub struct SavedRvmFit {
    pub kernel: KernelSpec,
    pub x: CovariateSet,
    pub y: DVector<f64>,
    pub fit: RvmFit,
    pub gate_status: String,
    pub gate_rule: String,
}

impl SavedRvmFit {
    pub fn to_record(&self) -> Record {
        let mut r = Record::new();
        r.push("type", "rvm_fit");
        r.push("kernel", self.kernel.kind.name());
        r.push("theta", format_float(self.kernel.theta));
        r.push("n", self.x.n());
        r.push("p", self.x.p());
        r.push("lambda_hat", format_vector(self.fit.lambda_hat.values()));
        r.push("sigma2_hat", format_float(self.fit.sigma2_hat));
        r.push("beta_mean", format_vector(self.fit.beta_mean.as_slice()));
        r.push(
            "relevance_indices",
            self.fit
                .relevance_indices
                .iter()
                .map(|i| i.to_string())
                .collect::<Vec<_>>()
                .join(","),
        );
        r.push("log_evidence", format_float(self.fit.log_evidence));
        r.push("iterations", self.fit.iterations);
        r.push("converged", self.fit.converged);
        r.push("degenerate", self.fit.degenerate);
        r.push("gate_status", &self.gate_status);
        r.push("gate_rule", &self.gate_rule);
        r.push("beta_cov", format_matrix(&self.fit.beta_cov));
        r.push("x", format_matrix(self.x.matrix()));
        r.push("y", format_vector(self.y.as_slice()));
        r
    }

    pub fn from_record(r: &Record) -> Result<Self> {
        if r.require("type")? != "rvm_fit" {
            return Err(Error::Parse(format!(
                "expected a type=rvm_fit record, got type={}",
                r.require("type")?
            )));
        }
        let kind = KernelKind::parse(r.require("kernel")?)?;
        let kernel = KernelSpec::new(kind, r.require_f64("theta")?)?;
        let x = CovariateSet::new(parse_matrix(r.require("x")?)?)?;
        let y = DVector::from_vec(parse_vector(r.require("y")?)?);
        let lambda_hat = PrecisionDiag::new(parse_vector(r.require("lambda_hat")?)?)?;
        let beta_mean = DVector::from_vec(parse_vector(r.require("beta_mean")?)?);
        let relevance_raw = r.require("relevance_indices")?;
        let relevance_indices: Vec<usize> = if relevance_raw.is_empty() {
            Vec::new()
        } else {
            relevance_raw
                .split(',')
                .map(|t| {
                    t.parse()
                        .map_err(|_| Error::Parse(format!("bad index '{t}'")))
                })
                .collect::<Result<_>>()?
        };
        let beta_cov = if relevance_indices.is_empty() {
            DMatrix::zeros(0, 0)
        } else {
            parse_matrix(r.require("beta_cov")?)?
        };
        let fit = RvmFit {
            lambda_hat,
            sigma2_hat: r.require_f64("sigma2_hat")?,
            beta_mean,
            beta_cov,
            relevance_indices,
            log_evidence: r.require_f64("log_evidence")?,
            iterations: r
                .require("iterations")?
                .parse()
                .map_err(|_| Error::Parse("bad iterations".into()))?,
            converged: r.require("converged")? == "true",
            evidence_path: Vec::new(),
            degenerate: r.require("degenerate")? == "true",
        };
        Ok(Self {
            kernel,
            x,
            y,
            fit,
            gate_status: r.require("gate_status")?.to_string(),
            gate_rule: r.require("gate_rule")?.to_string(),
        })
    }
}

pub fn saved_fit(
    kernel: KernelSpec,
    x: CovariateSet,
    y: DVector<f64>,
    fit: RvmFit,
    gate: &ProprietyVerdict,
) -> SavedRvmFit {
    SavedRvmFit {
        kernel,
        x,
        y,
        fit,
        gate_status: gate.status.name().to_string(),
        gate_rule: gate.rule.name().to_string(),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::kernel::build_design_matrix;
    use crate::propriety::{check_rvm_propriety, RvmHyperParams};
    use crate::regression::{fit_type2_ml, predict, FitOptions};

    #[test]
    fn record_round_trip_with_quotes() {
        let mut r = Record::new();
        r.push("status", "Improper");
        r.push("explanation", "b = 0 violates the necessary condition");
        r.push("residual", "none");
        let line = r.to_line();
        let back = Record::parse_line(&line).unwrap();
        assert_eq!(back.get("status"), Some("Improper"));
        assert_eq!(
            back.get("explanation"),
            Some("b = 0 violates the necessary condition")
        );
        assert_eq!(back.get("residual"), Some("none"));
    }

    #[test]
    fn vector_codec_handles_pruned_entries() {
        let v = vec![1.5, f64::INFINITY, 2.25e-9];
        let s = format_vector(&v);
        let back = parse_vector(&s).unwrap();
        assert_eq!(v, back);
    }

    #[test]
    fn saved_fit_round_trips_and_predicts_identically() {
        let rows: Vec<Vec<f64>> = (0..8).map(|i| vec![i as f64 * 0.5 - 2.0]).collect();
        let x = CovariateSet::from_rows(&rows).unwrap();
        let kernel = KernelSpec::new(KernelKind::Gaussian, 1.0).unwrap();
        let k = build_design_matrix(&x, &kernel).unwrap();
        let y = DVector::from_fn(8, |i, _| (rows[i][0]).sin());
        let fit = fit_type2_ml(&y, &k, None, &FitOptions::default()).unwrap();
        let gate = check_rvm_propriety(
            &RvmHyperParams::new(1.0, 0.0, 1.0, 0.0).unwrap().prior(),
            Some((&y, &k)),
            None,
        )
        .unwrap();
        let saved = saved_fit(kernel, x.clone(), y.clone(), fit, &gate);
        let line = saved.to_record().to_line();
        let loaded = SavedRvmFit::from_record(&Record::parse_line(&line).unwrap()).unwrap();
        // Predictions from the reloaded fit are bit-identical.
        for i in 0..8 {
            let row = crate::kernel::build_prediction_row(&x, &rows[i], &loaded.kernel).unwrap();
            let a = predict(&saved.fit, &row).unwrap();
            let b = predict(&loaded.fit, &row).unwrap();
            assert_eq!(a.mean, b.mean);
            assert_eq!(a.variance, b.variance);
        }
        assert_eq!(loaded.gate_status, "Improper");
    }
}
