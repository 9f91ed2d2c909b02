//! Monte Carlo pass rates of the events under which the walk ensemble is
//! close to a coupled Brownian motion.
//!
//! Letters: `X` is +-1 with `P(+1) = p_a`, `Y` is standard normal, and the
//! score is the product rule. With mesh `j = floor(n^beta)` the walk is cut
//! into `n / j` blocks; any remainder past the last full block is ignored.
//! Per trial:
//!
//! * **A** holds when every block covariance (given `X`) satisfies
//!   `|Cov - j I| <= C k sqrt(j)`.
//! * Each block increment `v` is mapped to `N = j^{1/2} Cov^{-1/2} v`, and
//!   the Brownian path inside the block is the straight line to `N` plus an
//!   independent Brownian bridge.
//! * **F** holds when no walk component moves more than `ln(n) sqrt(j)`
//!   from its value at the start of a block, **G** the same for the
//!   Brownian path.
//! * **D** holds when `|R(m j) - B(m j)| <= ln(n) sqrt(k) sqrt(n) / j^{1/4}`
//!   at every mesh point. A block whose covariance is singular cannot be
//!   coupled and fails D.

use std::fmt::Write as _;

use rand::Rng;
use rand_distr::StandardNormal;

use super::{par_trials, trial_rng, ExperimentConfig};
use crate::error::{Error, Result};
use crate::scoring::ProductScore;
use crate::walks::{
    build_walks, calibrate_cov_constant, empirical_increment_cov, sample_letter, ExtendedLetters,
    IsotropicCoupling, LetterModel,
};

/// Independent sequences drawn when calibrating `C`.
pub const CALIBRATION_DRAWS: usize = 10_000;
/// Quantile of the block-maximum ratio taken as `C`.
pub const CALIBRATION_QUANTILE: f64 = 0.999;

/// `4 max(ln n sqrt(j) / sqrt(n), ln n sqrt(k) / j^{1/4})`.
pub fn delta_n(n: usize, k: usize, j: usize) -> f64 {
    let (nf, kf, jf) = (n as f64, k as f64, j as f64);
    let l = nf.ln();
    4.0 * (l * jf.sqrt() / nf.sqrt()).max(l * kf.sqrt() / jf.powf(0.25))
}

#[derive(Debug, Clone, PartialEq)]
pub struct EventRates {
    pub n: usize,
    pub k: usize,
    pub j: usize,
    pub blocks: usize,
    pub trials: usize,
    pub c_constant: f64,
    pub pass_a: f64,
    pub pass_d: f64,
    pub pass_f: f64,
    pub pass_g: f64,
    pub delta_n: f64,
}

pub const EVENT_HEADER: &str = "n,k,j,blocks,trials,c,pass_a,pass_d,pass_f,pass_g,delta_n";

impl EventRates {
    pub fn csv_row(&self) -> String {
        format!(
            "{},{},{},{},{},{},{},{},{},{},{}",
            self.n,
            self.k,
            self.j,
            self.blocks,
            self.trials,
            self.c_constant,
            self.pass_a,
            self.pass_d,
            self.pass_f,
            self.pass_g,
            self.delta_n
        )
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ScheduleReport {
    pub c_constant: f64,
    /// Whether `C` was calibrated rather than configured.
    pub calibrated: bool,
    pub rows: Vec<EventRates>,
}

impl ScheduleReport {
    pub fn to_csv(&self) -> String {
        let mut s = format!("{EVENT_HEADER}\n");
        for r in &self.rows {
            let _ = writeln!(s, "{}", r.csv_row());
        }
        s
    }
}

fn mesh(n: usize, k: usize, beta: f64) -> Result<usize> {
    if !(beta > 0.0 && beta < 1.0) {
        return Err(Error::InvalidArgument(format!("mesh exponent {beta} not in (0, 1)")));
    }
    let j = ((n as f64).powf(beta) + 1e-9).floor() as usize;
    if j < k.max(1) {
        return Err(Error::InvalidArgument(format!("mesh j={j} is smaller than k={k}")));
    }
    Ok(j)
}

/// `C` as the calibration quantile of `max_b |Cov_b - j I| / (k sqrt(j))`
/// over whole sequences of `n / j` blocks.
pub fn calibrate_event_constant(cfg: &ExperimentConfig, n: usize, k: usize, beta: f64) -> Result<f64> {
    let j = mesh(n, k, beta)?;
    let mut rng = trial_rng(cfg.master_seed, u64::MAX - n as u64, 0);
    calibrate_cov_constant(
        k,
        j,
        n / j,
        CALIBRATION_DRAWS,
        CALIBRATION_QUANTILE,
        cfg.letter_model.p_a(),
        &mut rng,
    )
}

#[derive(Debug, Clone, Copy, Default)]
struct TrialEvents {
    a: bool,
    d: bool,
    f: bool,
    g: bool,
}

fn one_trial<R: Rng>(rng: &mut R, n: usize, k: usize, j: usize, c: f64, p_a: f64) -> Result<TrialEvents> {
    let d = k + 1;
    let ext: Vec<_> = (0..k).map(|_| sample_letter(rng, p_a)).collect();
    let body: Vec<_> = (0..n).map(|_| sample_letter(rng, p_a)).collect();
    let y: Vec<f64> = (0..n).map(|_| rng.sample(StandardNormal)).collect();
    let walks = build_walks(&ExtendedLetters::new(ext, body), &y, &ProductScore, k)?;

    let ln_n = (n as f64).ln();
    let jf = j as f64;
    let a_bound = c * k as f64 * jf.sqrt();
    let exc_bound = ln_n * jf.sqrt();
    let d_bound = ln_n * (k as f64).sqrt() * (n as f64).sqrt() / jf.powf(0.25);

    let mut ev = TrialEvents {
        a: true,
        d: true,
        f: true,
        g: true,
    };
    // running R(m j) - B(m j) per component
    let mut diff = vec![0.0; d];
    let mut bridge = vec![0.0; j + 1];
    for b in 0..n / j {
        let start = b * j;
        let cov = empirical_increment_cov(&walks, start, j)?;
        if cov.distance_to_scaled_identity(jf) > a_bound {
            ev.a = false;
        }
        let v = walks.position_vector(start + j) - walks.position_vector(start);
        let coupled = IsotropicCoupling::new(&cov, jf).ok().map(|cp| cp.apply(&v));
        for i in 0..d {
            let r0 = walks.position(i + 1, start);
            for t in 1..=j {
                if (walks.position(i + 1, start + t) - r0).abs() > exc_bound {
                    ev.f = false;
                }
            }
            for t in 1..=j {
                let z: f64 = rng.sample(StandardNormal);
                bridge[t] = bridge[t - 1] + z;
            }
            let end = coupled.as_ref().map_or(0.0, |nv| nv[i]);
            for t in 1..=j {
                let s = t as f64 / jf;
                let w = s * end + bridge[t] - s * bridge[j];
                if w.abs() > exc_bound {
                    ev.g = false;
                }
            }
            match &coupled {
                Some(nv) => {
                    diff[i] += v[i] - nv[i];
                    if diff[i].abs() > d_bound {
                        ev.d = false;
                    }
                }
                None => ev.d = false,
            }
        }
    }
    Ok(ev)
}

/// Pass rates of the A, D, F and G analogues at length `n` with `k` gaps.
/// Uses `cfg.c_constant` when set and calibrates `C` at this `n` otherwise.
pub fn run_event_diagnostics(cfg: &ExperimentConfig, n: usize, k: usize, mesh_beta: f64) -> Result<EventRates> {
    if !matches!(cfg.letter_model, LetterModel::BinaryXNormalY { .. }) {
        return Err(Error::Config("event diagnostics need letter_model=binaryx_normaly".into()));
    }
    let j = mesh(n, k, mesh_beta)?;
    let c = match cfg.c_constant {
        Some(c) => c,
        None => calibrate_event_constant(cfg, n, k, mesh_beta)?,
    };
    let p_a = cfg.letter_model.p_a();
    let events = par_trials(cfg.threads, cfg.trials, |t| {
        one_trial(&mut trial_rng(cfg.master_seed, n as u64, t as u64), n, k, j, c, p_a)
    })?
    .into_iter()
    .collect::<Result<Vec<_>>>()?;
    let rate = |f: fn(&TrialEvents) -> bool| events.iter().filter(|e| f(e)).count() as f64 / events.len() as f64;
    Ok(EventRates {
        n,
        k,
        j,
        blocks: n / j,
        trials: cfg.trials,
        c_constant: c,
        pass_a: rate(|e| e.a),
        pass_d: rate(|e| e.d),
        pass_f: rate(|e| e.f),
        pass_g: rate(|e| e.g),
        delta_n: delta_n(n, k, j),
    })
}

/// Diagnostics along `cfg.n_grid` with `k` from `cfg.gap_mode` and
/// `j = floor(n^mesh_beta)`. Without a configured `C`, one constant is
/// calibrated at the largest `n` and used for the whole grid.
pub fn run_event_schedule(cfg: &ExperimentConfig) -> Result<ScheduleReport> {
    cfg.validate()?;
    let gaps = |n: usize| {
        cfg.gap_mode
            .gaps(n)
            .ok_or_else(|| Error::Config("event diagnostics need a gap_mode".into()))
    };
    let largest = *cfg.n_grid.last().expect("validated grid is nonempty");
    let (c, calibrated) = match cfg.c_constant {
        Some(c) => (c, false),
        None => (calibrate_event_constant(cfg, largest, gaps(largest)?, cfg.mesh_beta)?, true),
    };
    let fixed = ExperimentConfig {
        c_constant: Some(c),
        ..cfg.clone()
    };
    let rows = cfg
        .n_grid
        .iter()
        .map(|&n| run_event_diagnostics(&fixed, n, gaps(n)?, cfg.mesh_beta))
        .collect::<Result<Vec<_>>>()?;
    Ok(ScheduleReport {
        c_constant: c,
        calibrated,
        rows,
    })
}
