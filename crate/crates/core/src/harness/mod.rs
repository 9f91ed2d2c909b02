//! Seeded, parallel Monte Carlo experiments over grids of sequence lengths.

mod config;
mod diagnostics;
mod seed;

pub use config::{parse_gap_mode, parse_grid, parse_pairs, ExperimentConfig, GapMode, LetterCoding, ScoringChoice};
pub use diagnostics::{
    calibrate_event_constant, delta_n, run_event_diagnostics, run_event_schedule, EventRates, ScheduleReport,
    CALIBRATION_DRAWS, CALIBRATION_QUANTILE, EVENT_HEADER,
};
pub use seed::{splitmix64, trial_rng, trial_seed, TrialRng};

use std::fmt::Write as _;

use rand::Rng;
use rayon::prelude::*;

use crate::align::{align_full, align_kgap};
use crate::brownian::{theorem1_statistic, tw_ks};
use crate::error::{Error, Result};
use crate::scoring::{Letter, LetterCounts, PairScore};
use crate::stats::{ks_fitted_normal, loglog_fit, summarize, ExponentFit, SummaryStats};
use crate::brownian::sample_lk;
use crate::walks::{mean_step, sample_letters, sample_normals, LetterModel, ScoringRule};

/// Product of a coded `X` letter with a real `Y` value; gaps score zero.
#[derive(Debug, Clone, Copy)]
struct CodedProduct {
    coding: LetterCoding,
}

impl CodedProduct {
    fn code(&self, x: Letter) -> f64 {
        match (self.coding, x) {
            (LetterCoding::PlusMinus, l) => l.sign(),
            (LetterCoding::ZeroOne, Letter::A) => 1.0,
            (LetterCoding::ZeroOne, Letter::B) => 0.0,
        }
    }
}

impl PairScore for CodedProduct {
    type Y = f64;

    fn pair(&self, x: Letter, y: f64) -> f64 {
        self.code(x) * y
    }

    fn gap(&self, _y: f64) -> f64 {
        0.0
    }
}

/// Result of a single trial.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TrialOutcome {
    pub score: f64,
    /// Letter counts of both strings (binary letter model only).
    pub counts: Option<LetterCounts>,
}

/// Summary of one grid length.
#[derive(Debug, Clone, PartialEq)]
pub struct ReportRow {
    pub n: usize,
    /// Gap count; `None` for unconstrained alignment.
    pub k: Option<usize>,
    pub raw: SummaryStats,
    /// Rescaled gap-constrained statistic (requires `k >= 1`).
    pub rescaled: Option<SummaryStats>,
    pub ks_tw: Option<f64>,
    /// KS distance of the raw scores from their fitted normal.
    pub ks_normal: f64,
    pub outcomes: Vec<TrialOutcome>,
    pub rescaled_values: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ExperimentReport {
    pub rows: Vec<ReportRow>,
    /// Log-log fit of the score standard deviation against `n`, when at
    /// least two rows have positive spread.
    pub fit: Option<ExponentFit>,
    pub config_hash: String,
    pub master_seed: u64,
    /// `E[S(X_1, Y_1)]` used to centre the rescaled statistic.
    pub mean_step: f64,
}

pub const REPORT_HEADER: &str = "n,k,trials,mean,stddev,var,mean_rescaled,ks_tw,ks_normal";

fn opt(v: Option<f64>) -> String {
    v.map_or_else(|| "NaN".to_string(), |x| x.to_string())
}

impl ExperimentReport {
    /// The report table; unavailable entries print as `NaN`.
    pub fn to_csv(&self) -> String {
        let mut s = String::from(REPORT_HEADER);
        s.push('\n');
        for r in &self.rows {
            let _ = writeln!(
                s,
                "{},{},{},{},{},{},{},{},{}",
                r.n,
                r.k.unwrap_or(0),
                r.raw.count,
                r.raw.mean,
                r.raw.stddev,
                r.raw.variance,
                opt(r.rescaled.map(|x| x.mean)),
                opt(r.ks_tw),
                r.ks_normal
            );
        }
        s
    }

    /// `(n, stddev)` pairs for exponent fitting.
    pub fn stddev_points(&self) -> Vec<(f64, f64)> {
        self.rows.iter().map(|r| (r.n as f64, r.raw.stddev)).collect()
    }

    /// One-line provenance summary.
    pub fn provenance(&self) -> String {
        format!("config_hash={} seed={}", self.config_hash, self.master_seed)
    }
}

/// Work estimate `sum_n trials n (k(n) + 1)`; unconstrained alignment
/// counts `n^2` per trial.
pub fn estimated_ops(cfg: &ExperimentConfig) -> f64 {
    cfg.n_grid
        .iter()
        .map(|&n| {
            let per = match cfg.gap_mode.gaps(n) {
                Some(k) => n as f64 * (k + 1) as f64,
                None => (n as f64) * (n as f64),
            };
            per * cfg.trials as f64
        })
        .sum()
}

/// Runs `f(trial)` for every trial on a pool of `threads` workers and
/// returns the results in trial order.
pub(crate) fn par_trials<T, F>(threads: usize, trials: usize, f: F) -> Result<Vec<T>>
where
    T: Send,
    F: Fn(usize) -> T + Sync + Send,
{
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(threads)
        .build()
        .map_err(|e| Error::Config(format!("thread pool: {e}")))?;
    Ok(pool.install(|| (0..trials).into_par_iter().map(&f).collect()))
}

/// One trial at length `n`: `X` first, then `Y`, drawn from `rng`.
pub fn run_trial<R: Rng>(cfg: &ExperimentConfig, n: usize, rng: &mut R) -> Result<TrialOutcome> {
    let p_a = cfg.letter_model.p_a();
    let k = cfg.gap_mode.gaps(n);
    let x_len = n - k.unwrap_or(0);
    let x = sample_letters(rng, x_len, p_a);
    match cfg.letter_model {
        LetterModel::Binary { .. } => {
            let y = sample_letters(rng, n, p_a);
            let m = cfg.letter_matrix();
            let score = match k {
                Some(k) => align_kgap(&x, &y, &m, k)?.score,
                None => align_full(&x, &y, &m).score,
            };
            Ok(TrialOutcome {
                score,
                counts: Some(LetterCounts::of(&x, &y)),
            })
        }
        LetterModel::BinaryXNormalY { .. } => {
            let y = sample_normals(rng, n);
            let k = k.ok_or_else(|| Error::Config("unconstrained alignment needs binary letters".into()))?;
            let s = CodedProduct { coding: cfg.letters };
            Ok(TrialOutcome {
                score: align_kgap(&x, &y, &s, k)?.score,
                counts: None,
            })
        }
    }
}

/// `trials` independent draws of the discretised Brownian functional on
/// `steps` grid steps; draw `t` uses `trial_rng(seed, 0, t)`.
pub fn brownian_trials(k: usize, steps: usize, trials: usize, seed: u64, threads: usize) -> Result<Vec<f64>> {
    par_trials(threads, trials, |t| sample_lk(k, steps, &mut trial_rng(seed, 0, t as u64)))
}

/// `E[S(X_1, Y_1)]` under the configured model and scoring.
pub fn config_mean_step(cfg: &ExperimentConfig) -> Result<f64> {
    match cfg.letter_model {
        LetterModel::Binary { .. } => mean_step(&ScoringRule::Matrix(cfg.letter_matrix()), &cfg.letter_model),
        LetterModel::BinaryXNormalY { .. } => Ok(0.0),
    }
}

/// Runs every trial of every grid length. Trial `t` at grid index `i`
/// draws from `trial_rng(seed, i, t)`, so the report depends only on the
/// configuration and seed.
pub fn run_experiment(cfg: &ExperimentConfig) -> Result<ExperimentReport> {
    cfg.validate()?;
    let ops = estimated_ops(cfg);
    if ops > cfg.op_ceiling {
        return Err(Error::Budget(ops, cfg.op_ceiling));
    }
    let mu = config_mean_step(cfg)?;
    let mut rows = Vec::with_capacity(cfg.n_grid.len());
    for (cell, &n) in cfg.n_grid.iter().enumerate() {
        let outcomes = par_trials(cfg.threads, cfg.trials, |t| {
            run_trial(cfg, n, &mut trial_rng(cfg.master_seed, cell as u64, t as u64))
        })?
        .into_iter()
        .collect::<Result<Vec<_>>>()?;
        let scores: Vec<f64> = outcomes.iter().map(|o| o.score).collect();
        let raw = summarize(&scores)?;
        let k = cfg.gap_mode.gaps(n);
        let rescaled_values: Vec<f64> = match k {
            Some(k) if k >= 1 => scores.iter().map(|&s| theorem1_statistic(s, n, k, mu)).collect(),
            _ => Vec::new(),
        };
        let (rescaled, ks_tw) = if rescaled_values.is_empty() {
            (None, None)
        } else {
            (Some(summarize(&rescaled_values)?), Some(tw_ks(&rescaled_values)?))
        };
        rows.push(ReportRow {
            n,
            k,
            raw,
            rescaled,
            ks_tw,
            ks_normal: ks_fitted_normal(&scores)?,
            outcomes,
            rescaled_values,
        });
    }
    let points: Vec<(f64, f64)> = rows
        .iter()
        .filter(|r| r.raw.stddev > 0.0)
        .map(|r| (r.n as f64, r.raw.stddev))
        .collect();
    let fit = if points.len() >= 2 { Some(loglog_fit(&points)?) } else { None };
    Ok(ExperimentReport {
        rows,
        fit,
        config_hash: cfg.hash(),
        master_seed: cfg.master_seed,
        mean_step: mu,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::scoring::{decompose, normal_part, residual_scoring, ScoringMatrix};

    fn cfg(text: &str) -> ExperimentConfig {
        ExperimentConfig::parse(text, None).unwrap()
    }

    #[test]
    fn alignment_independent_scoring_is_constant() {
        let c = cfg("scoring=s0\ngap_mode=fixed:0\nn_grid=50,120\ntrials=40");
        let r = run_experiment(&c).unwrap();
        for row in &r.rows {
            assert!(row.outcomes.iter().all(|o| o.score == row.n as f64));
            assert_eq!(row.raw.stddev, 0.0);
        }
        assert!(r.fit.is_none());
        let u = run_experiment(&cfg("scoring=s0\nn_grid=30\ntrials=10")).unwrap();
        assert!(u.rows[0].outcomes.iter().all(|o| o.score == 30.0));
    }

    #[test]
    fn s1_score_is_a_count() {
        let c = cfg("scoring=s1\ngap_mode=fixed:0\nn_grid=200\ntrials=300\np_a=0.3");
        let r = run_experiment(&c).unwrap();
        for o in &r.rows[0].outcomes {
            let cnt = o.counts.unwrap();
            assert_eq!(o.score, cnt.total_a() as f64 - 200.0);
        }
        let target = 2.0 * 200.0 * 0.3 * 0.7;
        let se = target * (2.0f64 / 299.0).sqrt();
        assert!((r.rows[0].raw.variance - target).abs() < 5.0 * se);
    }

    #[test]
    fn normal_part_neutrality() {
        let s = ScoringMatrix::new(1.5, -0.25, 0.5, -0.75, 0.25);
        let mut a = cfg("gap_mode=fixed:3\nn_grid=40,90\ntrials=30\np_a=0.4");
        a.scoring = ScoringChoice::Matrix(s);
        let mut b = a.clone();
        b.scoring = ScoringChoice::Matrix(residual_scoring(&s));
        let (ra, rb) = (run_experiment(&a).unwrap(), run_experiment(&b).unwrap());
        let c = decompose(&s);
        for (row_a, row_b) in ra.rows.iter().zip(&rb.rows) {
            for (oa, ob) in row_a.outcomes.iter().zip(&row_b.outcomes) {
                let np = normal_part(&c, &oa.counts.unwrap(), row_a.n, 3).unwrap();
                assert!((oa.score - ob.score - np).abs() < 1e-9);
            }
        }
    }

    #[test]
    fn thread_count_does_not_change_results() {
        let mut c = cfg("letter_model=binaryx_normaly\ngap_mode=power:0.2\nn_grid=64,256\ntrials=24\nseed=5");
        c.threads = 1;
        let one = run_experiment(&c).unwrap();
        c.threads = 3;
        let three = run_experiment(&c).unwrap();
        assert_eq!(one.to_csv(), three.to_csv());
        assert_eq!(one.rows, three.rows);
        c.master_seed = 6;
        assert_ne!(run_experiment(&c).unwrap().to_csv(), one.to_csv());
    }

    #[test]
    fn budget_is_checked_before_work() {
        let c = cfg("gap_mode=fixed:10\nn_grid=1000\ntrials=100\nop_ceiling=1e5");
        assert!(matches!(run_experiment(&c), Err(Error::Budget(_, _))));
        assert_eq!(estimated_ops(&c), 1000.0 * 11.0 * 100.0);
    }

    #[test]
    fn csv_layout() {
        let c = cfg("scoring=s1\ngap_mode=fixed:2\nn_grid=20,40\ntrials=5");
        let r = run_experiment(&c).unwrap();
        let csv = r.to_csv();
        let lines: Vec<&str> = csv.lines().collect();
        assert_eq!(lines[0], REPORT_HEADER);
        assert_eq!(lines.len(), 3);
        assert!(lines[1].starts_with("20,2,5,"));
        assert_eq!(lines[1].split(',').count(), 9);
        let none = run_experiment(&cfg("scoring=s1\ngap_mode=fixed:0\nn_grid=20\ntrials=5")).unwrap();
        assert!(none.to_csv().lines().nth(1).unwrap().contains(",NaN,NaN,"));
    }

    #[test]
    fn mean_steps() {
        assert_eq!(config_mean_step(&cfg("p_a=0.5")).unwrap(), 0.0);
        assert!((config_mean_step(&cfg("p_a=0.7")).unwrap() - 0.16).abs() < 1e-12);
        assert!((config_mean_step(&cfg("p_a=0.7\nletters=01")).unwrap() - 0.49).abs() < 1e-12);
    }

    #[test]
    fn zero_one_product_with_normal_y() {
        // X coded 0/1: letters b contribute nothing
        let s = CodedProduct { coding: LetterCoding::ZeroOne };
        assert_eq!(s.pair(Letter::B, 3.0), 0.0);
        assert_eq!(s.pair(Letter::A, 3.0), 3.0);
        let p = CodedProduct { coding: LetterCoding::PlusMinus };
        assert_eq!(p.pair(Letter::B, 3.0), -3.0);
    }
}
