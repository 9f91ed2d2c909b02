//! Sample summaries, empirical CDFs, Kolmogorov-Smirnov distances and
//! log-log exponent fits.

use std::fmt::Write as _;

use statrs::distribution::{ContinuousCDF, Normal};

use crate::error::{Error, Result};

/// Moments and range of a sample. The variance is the unbiased `n - 1`
/// estimator (zero for a single value).
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SummaryStats {
    pub count: usize,
    pub mean: f64,
    pub variance: f64,
    pub stddev: f64,
    pub min: f64,
    pub max: f64,
}

/// Neumaier-compensated sum.
fn compensated_sum(values: impl Iterator<Item = f64>) -> f64 {
    let (mut sum, mut comp) = (0.0f64, 0.0f64);
    for v in values {
        let t = sum + v;
        if sum.abs() >= v.abs() {
            comp += (sum - t) + v;
        } else {
            comp += (v - t) + sum;
        }
        sum = t;
    }
    sum + comp
}

/// Summary with compensated accumulation: the mean first, then the
/// squared deviations about it.
pub fn summarize(sample: &[f64]) -> Result<SummaryStats> {
    if sample.is_empty() {
        return Err(Error::EmptySample);
    }
    let count = sample.len();
    let (mut min, mut max) = (f64::INFINITY, f64::NEG_INFINITY);
    for &x in sample {
        min = min.min(x);
        max = max.max(x);
    }
    let mean = (compensated_sum(sample.iter().copied()) / count as f64).clamp(min, max);
    let variance = if count > 1 {
        let ss = compensated_sum(sample.iter().map(|x| (x - mean) * (x - mean)));
        (ss / (count - 1) as f64).max(0.0)
    } else {
        0.0
    };
    Ok(SummaryStats {
        count,
        mean,
        variance,
        stddev: variance.sqrt(),
        min,
        max,
    })
}

/// Right-continuous empirical CDF.
#[derive(Debug, Clone)]
pub struct Ecdf {
    sorted: Vec<f64>,
}

impl Ecdf {
    pub fn new(sample: &[f64]) -> Result<Self> {
        if sample.is_empty() {
            return Err(Error::EmptySample);
        }
        if sample.iter().any(|x| x.is_nan()) {
            return Err(Error::InvalidArgument("sample contains NaN".into()));
        }
        let mut sorted = sample.to_vec();
        sorted.sort_by(f64::total_cmp);
        Ok(Self { sorted })
    }

    /// Fraction of the sample that is `<= x`.
    pub fn eval(&self, x: f64) -> f64 {
        self.sorted.partition_point(|&v| v <= x) as f64 / self.sorted.len() as f64
    }

    pub fn len(&self) -> usize {
        self.sorted.len()
    }

    pub fn is_empty(&self) -> bool {
        self.sorted.is_empty()
    }

    pub fn sorted(&self) -> &[f64] {
        &self.sorted
    }

    /// `sup |ECDF - F|` checking the gaps just before and at every jump.
    pub fn ks_against<F: Fn(f64) -> f64>(&self, cdf: F) -> f64 {
        let n = self.sorted.len() as f64;
        let mut d = 0.0f64;
        let mut i = 0;
        while i < self.sorted.len() {
            let x = self.sorted[i];
            let mut j = i;
            while j < self.sorted.len() && self.sorted[j] == x {
                j += 1;
            }
            let f = cdf(x).clamp(0.0, 1.0);
            d = d.max((f - i as f64 / n).abs()).max((j as f64 / n - f).abs());
            i = j;
        }
        d
    }
}

/// KS distance between `sample` and a reference CDF.
pub fn ks_distance<F: Fn(f64) -> f64>(sample: &[f64], cdf: F) -> Result<f64> {
    Ok(Ecdf::new(sample)?.ks_against(cdf))
}

/// Two-sample KS distance `sup |F_a - F_b|`.
pub fn ks_two_sample(a: &[f64], b: &[f64]) -> Result<f64> {
    let (ea, eb) = (Ecdf::new(a)?, Ecdf::new(b)?);
    let mut d = 0.0f64;
    for &x in ea.sorted().iter().chain(eb.sorted()) {
        d = d.max((ea.eval(x) - eb.eval(x)).abs());
    }
    Ok(d)
}

/// KS distance against the normal law with the sample's own mean and
/// standard deviation. A degenerate sample gives 1.
pub fn ks_fitted_normal(sample: &[f64]) -> Result<f64> {
    let s = summarize(sample)?;
    if s.stddev <= 0.0 {
        return Ok(1.0);
    }
    let normal = Normal::new(s.mean, s.stddev).map_err(|e| Error::Numeric(e.to_string()))?;
    ks_distance(sample, |x| normal.cdf(x))
}

/// Least-squares line through `(ln n, ln stddev)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ExponentFit {
    pub slope: f64,
    pub intercept: f64,
    pub r2: f64,
    pub point_count: usize,
    /// Standard error of the slope; zero with two points or an exact fit.
    pub slope_stderr: f64,
}

pub fn loglog_fit(points: &[(f64, f64)]) -> Result<ExponentFit> {
    if points.len() < 2 {
        return Err(Error::InvalidArgument("need at least two points".into()));
    }
    if let Some(p) = points.iter().find(|(x, y)| !(*x > 0.0 && *y > 0.0) || !x.is_finite() || !y.is_finite()) {
        return Err(Error::InvalidArgument(format!(
            "values must be positive and finite, got ({}, {})",
            p.0, p.1
        )));
    }
    let m = points.len() as f64;
    let lx: Vec<f64> = points.iter().map(|p| p.0.ln()).collect();
    let ly: Vec<f64> = points.iter().map(|p| p.1.ln()).collect();
    let mx = lx.iter().sum::<f64>() / m;
    let my = ly.iter().sum::<f64>() / m;
    let sxx: f64 = lx.iter().map(|x| (x - mx).powi(2)).sum();
    if sxx == 0.0 {
        return Err(Error::InvalidArgument("abscissae are all equal".into()));
    }
    let sxy: f64 = lx.iter().zip(&ly).map(|(x, y)| (x - mx) * (y - my)).sum();
    let syy: f64 = ly.iter().map(|y| (y - my).powi(2)).sum();
    let slope = sxy / sxx;
    let intercept = my - slope * mx;
    let sse: f64 = lx
        .iter()
        .zip(&ly)
        .map(|(x, y)| (y - intercept - slope * x).powi(2))
        .sum();
    let r2 = if syy == 0.0 { 1.0 } else { (1.0 - sse / syy).clamp(0.0, 1.0) };
    let slope_stderr = if points.len() > 2 {
        (sse / (m - 2.0) / sxx).sqrt()
    } else {
        0.0
    };
    Ok(ExponentFit {
        slope,
        intercept,
        r2,
        point_count: points.len(),
        slope_stderr,
    })
}

/// Parses an `n,stddev` CSV (header required, blank lines skipped).
pub fn read_stddev_csv(text: &str) -> Result<Vec<(f64, f64)>> {
    let mut lines = text.lines().map(str::trim).filter(|l| !l.is_empty());
    match lines.next() {
        Some(h) if h.replace(' ', "") == "n,stddev" => {}
        other => {
            return Err(Error::Parse(format!(
                "expected header `n,stddev`, found {:?}",
                other.unwrap_or("")
            )))
        }
    }
    lines
        .map(|l| {
            let mut it = l.split(',').map(str::trim);
            let (Some(a), Some(b), None) = (it.next(), it.next(), it.next()) else {
                return Err(Error::Parse(format!("expected two columns in `{l}`")));
            };
            let p = |s: &str| s.parse::<f64>().map_err(|e| Error::Parse(format!("`{s}`: {e}")));
            Ok((p(a)?, p(b)?))
        })
        .collect()
}

pub fn write_stddev_csv(points: &[(f64, f64)]) -> String {
    let mut out = String::from("n,stddev\n");
    for (n, s) in points {
        let _ = writeln!(out, "{n},{s}");
    }
    out
}

/// Writes `x,F` rows for a CDF.
pub fn write_cdf_csv(rows: impl IntoIterator<Item = (f64, f64)>) -> String {
    let mut out = String::from("x,F\n");
    for (x, f) in rows {
        let _ = writeln!(out, "{x},{f}");
    }
    out
}
