//! MCMC plumbing shared by the Gibbs and classifier samplers: run
//! configuration, recorded traces, CSV export and trace summaries with
//! autocovariance-based effective sample sizes.

use std::io::Write;

use crate::error::{Error, Result};

/// Configuration of a sampling run.
#[derive(Debug, Clone, Copy)]
pub struct GibbsConfig {
    pub n_iter: usize,
    pub burn_in: usize,
    pub thin: usize,
    pub seed: u64,
    /// Opt-in for running chains whose posterior the gate did not certify.
    pub allow_improper: bool,
    /// Diagnostics hooks: freeze the λ or σ² block (both true in normal use).
    pub update_lambda: bool,
    pub update_sigma2: bool,
}

impl GibbsConfig {
    pub fn new(n_iter: usize, burn_in: usize, thin: usize, seed: u64) -> Result<Self> {
        if n_iter == 0 {
            return Err(Error::InvalidConfig("n_iter must be positive".into()));
        }
        if burn_in >= n_iter {
            return Err(Error::InvalidConfig(format!(
                "burn_in ({burn_in}) must be smaller than n_iter ({n_iter})"
            )));
        }
        if thin == 0 {
            return Err(Error::InvalidConfig("thin must be positive".into()));
        }
        Ok(Self {
            n_iter,
            burn_in,
            thin,
            seed,
            allow_improper: false,
            update_lambda: true,
            update_sigma2: true,
        })
    }

    pub fn allow_improper(mut self, yes: bool) -> Self {
        self.allow_improper = yes;
        self
    }

    pub fn update_lambda(mut self, yes: bool) -> Self {
        self.update_lambda = yes;
        self
    }

    pub fn update_sigma2(mut self, yes: bool) -> Self {
        self.update_sigma2 = yes;
        self
    }

    /// Number of iterations the trace will keep.
    pub fn n_kept(&self) -> usize {
        (self.n_iter - self.burn_in).div_ceil(self.thin)
    }

    /// Whether iteration `t` (0-based) is recorded.
    pub fn keeps(&self, t: usize) -> bool {
        t >= self.burn_in && (t - self.burn_in) % self.thin == 0
    }
}

/// Acceptance bookkeeping for one update block; conjugate Gibbs blocks always
/// report 1.0.
#[derive(Debug, Clone)]
pub struct BlockAcceptance {
    pub block: String,
    pub rate: f64,
}

/// A recorded chain: named parameter columns over kept iterations.
#[derive(Debug, Clone)]
pub struct McmcTrace {
    names: Vec<String>,
    columns: Vec<Vec<f64>>,
    pub accepted_meta: Vec<BlockAcceptance>,
    /// Step errors recorded while continuing in demo mode (invalid full
    /// conditionals under improper hyperparameters).
    pub step_errors: Vec<String>,
}

impl McmcTrace {
    pub fn new(names: Vec<String>) -> Self {
        let columns = names.iter().map(|_| Vec::new()).collect();
        Self {
            names,
            columns,
            accepted_meta: Vec::new(),
            step_errors: Vec::new(),
        }
    }

    pub fn push_row(&mut self, row: &[f64]) {
        assert_eq!(row.len(), self.names.len(), "trace row width mismatch");
        for (col, &v) in self.columns.iter_mut().zip(row) {
            col.push(v);
        }
    }

    pub fn n_kept(&self) -> usize {
        self.columns.first().map_or(0, Vec::len)
    }

    pub fn names(&self) -> &[String] {
        &self.names
    }

    pub fn column(&self, name: &str) -> Option<&[f64]> {
        self.names
            .iter()
            .position(|n| n == name)
            .map(|i| self.columns[i].as_slice())
    }

    pub fn column_at(&self, idx: usize) -> &[f64] {
        &self.columns[idx]
    }

    /// CSV export: header row with parameter names, one kept iteration per
    /// data row.
    pub fn to_csv<W: Write>(&self, w: &mut W) -> std::io::Result<()> {
        writeln!(w, "{}", self.names.join(","))?;
        for r in 0..self.n_kept() {
            let row: Vec<String> = self
                .columns
                .iter()
                .map(|c| format!("{:.17e}", c[r]))
                .collect();
            writeln!(w, "{}", row.join(","))?;
        }
        Ok(())
    }

    /// Re-read a trace written by `to_csv`. Leading `#` comment lines (the
    /// gate verdict recorded by the CLI) are skipped.
    pub fn from_csv<R: std::io::BufRead>(reader: R) -> Result<Self> {
        let mut lines = reader.lines();
        let header = loop {
            let line = lines
                .next()
                .ok_or_else(|| Error::Parse("empty trace file".into()))?
                .map_err(|e| Error::Parse(e.to_string()))?;
            if !line.starts_with('#') {
                break line;
            }
        };
        let names: Vec<String> = header.split(',').map(str::to_string).collect();
        let mut trace = McmcTrace::new(names);
        let width = trace.names.len();
        for (lineno, line) in lines.enumerate() {
            let line = line.map_err(|e| Error::Parse(e.to_string()))?;
            if line.trim().is_empty() {
                continue;
            }
            let row: Vec<f64> = line
                .split(',')
                .map(|t| {
                    t.parse().map_err(|_| {
                        Error::Parse(format!("bad number '{t}' at trace data row {}", lineno + 1))
                    })
                })
                .collect::<Result<_>>()?;
            if row.len() != width {
                return Err(Error::Parse(format!(
                    "trace data row {} has {} fields, expected {width}",
                    lineno + 1,
                    row.len()
                )));
            }
            trace.push_row(&row);
        }
        Ok(trace)
    }
}

/// Summary statistics of one trace column.
#[derive(Debug, Clone)]
pub struct ParamSummary {
    pub name: String,
    pub mean: f64,
    pub sd: f64,
    pub median: f64,
    pub q05: f64,
    pub q95: f64,
    pub ess: f64,
}

impl ParamSummary {
    /// Monte Carlo standard error of the mean estimate.
    pub fn mcse(&self) -> f64 {
        if self.ess > 0.0 {
            self.sd / self.ess.sqrt()
        } else {
            f64::INFINITY
        }
    }
}

/// Per-parameter summary of a kept trace.
#[derive(Debug, Clone)]
pub struct TraceSummary {
    pub n_kept: usize,
    pub params: Vec<ParamSummary>,
}

impl TraceSummary {
    pub fn get(&self, name: &str) -> Option<&ParamSummary> {
        self.params.iter().find(|p| p.name == name)
    }

    pub fn records(&self) -> Vec<String> {
        self.params
            .iter()
            .map(|p| {
                format!(
                    "param={} mean={:.8e} sd={:.8e} median={:.8e} q05={:.8e} q95={:.8e} ess={:.1}",
                    p.name, p.mean, p.sd, p.median, p.q05, p.q95, p.ess
                )
            })
            .collect()
    }
}

fn quantile(sorted: &[f64], p: f64) -> f64 {
    let n = sorted.len();
    if n == 1 {
        return sorted[0];
    }
    let h = (n - 1) as f64 * p;
    let lo = h.floor() as usize;
    let hi = h.ceil() as usize;
    if lo == hi {
        sorted[lo]
    } else {
        sorted[lo] + (h - lo as f64) * (sorted[hi] - sorted[lo])
    }
}

/// Effective sample size from the positive-autocorrelation sum:
/// ESS = n / (1 + 2 Σ ρ_k), truncated at the first non-positive lag.
/// A constant column reports ESS = n.
pub fn effective_sample_size(chain: &[f64]) -> f64 {
    let n = chain.len();
    if n == 0 {
        return 0.0;
    }
    let mean = chain.iter().sum::<f64>() / n as f64;
    let var = chain.iter().map(|v| (v - mean) * (v - mean)).sum::<f64>() / n as f64;
    if var == 0.0 {
        return n as f64;
    }
    let max_lag = (n / 2).min(1000);
    let mut rho_sum = 0.0;
    for lag in 1..=max_lag {
        let mut cov = 0.0;
        for i in 0..n - lag {
            cov += (chain[i] - mean) * (chain[i + lag] - mean);
        }
        cov /= n as f64;
        let rho = cov / var;
        if rho <= 0.0 {
            break;
        }
        rho_sum += rho;
    }
    n as f64 / (1.0 + 2.0 * rho_sum)
}

/// Per-parameter mean, sd, quantiles and effective sample size.
pub fn summarize(trace: &McmcTrace) -> Result<TraceSummary> {
    let n = trace.n_kept();
    if n == 0 {
        return Err(Error::InvalidInput("cannot summarize an empty trace".into()));
    }
    let params = trace
        .names
        .iter()
        .zip(&trace.columns)
        .map(|(name, col)| {
            let mean = col.iter().sum::<f64>() / n as f64;
            let var = col.iter().map(|v| (v - mean) * (v - mean)).sum::<f64>() / n as f64;
            let sd = var.sqrt();
            let mut sorted = col.clone();
            sorted.sort_by(|a, b| a.partial_cmp(b).unwrap_or(std::cmp::Ordering::Equal));
            ParamSummary {
                name: name.clone(),
                mean,
                sd,
                median: quantile(&sorted, 0.5),
                q05: quantile(&sorted, 0.05),
                q95: quantile(&sorted, 0.95),
                ess: effective_sample_size(col),
            }
        })
        .collect();
    Ok(TraceSummary { n_kept: n, params })
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_distr::{Distribution, StandardNormal};
    use rand_xoshiro::Xoshiro256PlusPlus;

    #[test]
    fn config_validates() {
        assert!(GibbsConfig::new(0, 0, 1, 1).is_err());
        assert!(GibbsConfig::new(10, 10, 1, 1).is_err());
        assert!(GibbsConfig::new(10, 2, 0, 1).is_err());
        let cfg = GibbsConfig::new(1000, 200, 4, 1).unwrap();
        assert_eq!(cfg.n_kept(), 200);
    }

    #[test]
    fn constant_column_summary() {
        let mut t = McmcTrace::new(vec!["x".into()]);
        for _ in 0..50 {
            t.push_row(&[3.25]);
        }
        let s = summarize(&t).unwrap();
        let p = s.get("x").unwrap();
        assert_eq!(p.sd, 0.0);
        assert_eq!(p.ess, 50.0);
        assert_eq!(p.mean, 3.25);
    }

    #[test]
    fn iid_normal_column_mean_near_zero() {
        let mut rng = Xoshiro256PlusPlus::seed_from_u64(99);
        let mut t = McmcTrace::new(vec!["z".into()]);
        for _ in 0..10_000 {
            let z: f64 = StandardNormal.sample(&mut rng);
            t.push_row(&[z]);
        }
        let s = summarize(&t).unwrap();
        let p = s.get("z").unwrap();
        assert!(p.mean.abs() < 0.05, "mean {}", p.mean);
        // iid draws: ESS should be in the vicinity of n.
        assert!(p.ess > 5_000.0, "ess {}", p.ess);
    }

    #[test]
    fn quantiles_are_monotone() {
        let mut rng = Xoshiro256PlusPlus::seed_from_u64(100);
        let mut t = McmcTrace::new(vec!["a".into(), "b".into()]);
        for _ in 0..500 {
            let a: f64 = StandardNormal.sample(&mut rng);
            let b: f64 = StandardNormal.sample(&mut rng);
            t.push_row(&[2.0 * a + 1.0, b * b]);
        }
        let s = summarize(&t).unwrap();
        for p in &s.params {
            assert!(p.q05 <= p.median && p.median <= p.q95);
        }
    }

    #[test]
    fn empty_trace_summary_is_an_error() {
        let t = McmcTrace::new(vec!["x".into()]);
        assert!(summarize(&t).is_err());
    }

    #[test]
    fn csv_round_trips_header_and_rows() {
        let mut t = McmcTrace::new(vec!["beta_0".into(), "sigma2".into()]);
        t.push_row(&[1.0, 2.0]);
        t.push_row(&[0.125, 4.5e-3]);
        let mut buf = Vec::new();
        t.to_csv(&mut buf).unwrap();
        let text = String::from_utf8(buf).unwrap();
        assert_eq!(text.lines().next().unwrap(), "beta_0,sigma2");
        let back = McmcTrace::from_csv(std::io::BufReader::new(text.as_bytes())).unwrap();
        assert_eq!(back.n_kept(), 2);
        assert_eq!(back.column("beta_0").unwrap(), t.column("beta_0").unwrap());
        assert_eq!(back.column("sigma2").unwrap(), t.column("sigma2").unwrap());
    }
}
