//! Discretised Brownian last-passage functional and the Tracy-Widom
//! reference used to judge its fluctuations.
//!
//! For independent standard Brownian motions `W^1..W^{k+1}` on `[0, 1]`,
//!
//! ```text
//! L^k(W) = max_{0 <= t_1 <= ... <= t_k <= 1} sum_i (W^i(t_i) - W^i(t_{i-1}))
//! ```
//!
//! with `t_0 = 0`, `t_{k+1} = 1`. On a grid of `T` steps the maximum is
//! found by the recursion `D_i(t) = W^i(t) + max_{s <= t} (D_{i-1}(s) - W^i(s))`
//! in `O(k T)` time. `k^{1/6} (L^k(W) - 2 sqrt(k))` approaches the GUE
//! Tracy-Widom law as `k` grows.

mod tw_table;

use std::sync::OnceLock;

use rand::Rng;
use rand_distr::StandardNormal;

use crate::error::{Error, Result};
use crate::stats::ks_distance;
use tw_table::TW_GUE_TABLE;

/// Mean of the GUE Tracy-Widom law.
pub const TW_MEAN: f64 = -1.771_087;
/// Variance of the GUE Tracy-Widom law.
pub const TW_VAR: f64 = 0.813_195;

/// Sample paths `W^1..W^{k+1}` at times `t / T`, `t = 0..=T`.
#[derive(Debug, Clone, PartialEq)]
pub struct BrownianPaths {
    k: usize,
    steps: usize,
    // component-major: values[i * (steps + 1) + t] = W^{i+1}(t / T)
    values: Vec<f64>,
}

impl BrownianPaths {
    /// Builds paths from explicit values, one `Vec` of length `T + 1` per
    /// component. Every path must start at zero.
    pub fn from_components(components: Vec<Vec<f64>>) -> Result<Self> {
        let k = components
            .len()
            .checked_sub(1)
            .ok_or_else(|| Error::InvalidArgument("need at least one component".into()))?;
        let len = components[0].len();
        if len < 2 {
            return Err(Error::InvalidArgument("paths need at least one step".into()));
        }
        if components.iter().any(|c| c.len() != len) {
            return Err(Error::LengthMismatch("components differ in length".into()));
        }
        if components.iter().any(|c| c[0] != 0.0) {
            return Err(Error::InvalidArgument("paths must start at 0".into()));
        }
        Ok(Self {
            k,
            steps: len - 1,
            values: components.concat(),
        })
    }

    pub fn k(&self) -> usize {
        self.k
    }

    pub fn steps(&self) -> usize {
        self.steps
    }

    /// `W^{i+1}(t / T)` for `i` in `0..=k`.
    #[inline]
    pub fn value(&self, t: usize, i: usize) -> f64 {
        self.values[i * (self.steps + 1) + t]
    }

    pub fn component(&self, i: usize) -> &[f64] {
        let w = self.steps + 1;
        &self.values[i * w..(i + 1) * w]
    }
}

/// Default grid size `64 k ceil(ln^2(k + 2))` (with `k` floored at 1).
pub fn default_grid(k: usize) -> usize {
    let l = ((k + 2) as f64).ln();
    64 * k.max(1) * (l * l).ceil() as usize
}

/// Draws `k + 1` independent paths with `N(0, 1/T)` increments, component
/// by component.
pub fn sample_bm<R: Rng>(k: usize, steps: usize, rng: &mut R) -> BrownianPaths {
    let steps = steps.max(1);
    let sd = (1.0 / steps as f64).sqrt();
    let w = steps + 1;
    let mut values = vec![0.0; (k + 1) * w];
    for path in values.chunks_exact_mut(w) {
        for t in 1..w {
            let z: f64 = rng.sample(StandardNormal);
            path[t] = path[t - 1] + z * sd;
        }
    }
    BrownianPaths { k, steps, values }
}

/// `L^k(W)` on the grid of `paths`.
pub fn lk_functional(paths: &BrownianPaths) -> f64 {
    let mut best = paths.component(0).to_vec();
    for i in 1..=paths.k {
        let w = paths.component(i);
        let mut run = f64::NEG_INFINITY;
        for (d, &wt) in best.iter_mut().zip(w) {
            run = run.max(*d - wt);
            *d = wt + run;
        }
    }
    best[paths.steps]
}

/// Samples paths and evaluates `L^k(W)` in one pass with `O(T)` memory.
///
/// Consumes the random stream in the same order as [`sample_bm`], so for
/// equal seeds the result equals `lk_functional(&sample_bm(..))` exactly.
pub fn sample_lk<R: Rng>(k: usize, steps: usize, rng: &mut R) -> f64 {
    let steps = steps.max(1);
    let sd = (1.0 / steps as f64).sqrt();
    let mut best = vec![0.0; steps + 1];
    for t in 1..=steps {
        let z: f64 = rng.sample(StandardNormal);
        best[t] = best[t - 1] + z * sd;
    }
    for _ in 0..k {
        let mut w = 0.0;
        let mut run = best[0];
        for (t, d) in best.iter_mut().enumerate() {
            if t > 0 {
                let z: f64 = rng.sample(StandardNormal);
                w += z * sd;
            }
            run = run.max(*d - w);
            *d = w + run;
        }
    }
    best[steps]
}

/// `k^{1/6} (value - 2 sqrt(k))`.
pub fn tw_rescale(value: f64, k: usize) -> Result<f64> {
    if k < 1 {
        return Err(Error::InvalidGapCount("Tracy-Widom rescaling needs k >= 1".into()));
    }
    let kf = k as f64;
    Ok(kf.powf(1.0 / 6.0) * (value - 2.0 * kf.sqrt()))
}

/// `k^{1/6} (score - n mean_step - 2 sqrt(n k)) / sqrt(n)`, the rescaled
/// gap-constrained score.
pub fn theorem1_statistic(score: f64, n: usize, k: usize, mean_step: f64) -> f64 {
    let (nf, kf) = (n as f64, k as f64);
    kf.powf(1.0 / 6.0) * (score - nf * mean_step - 2.0 * (nf * kf).sqrt()) / nf.sqrt()
}

/// Tabulated GUE Tracy-Widom CDF with monotone cubic interpolation.
#[derive(Debug, Clone)]
pub struct TwReference {
    xs: Vec<f64>,
    fs: Vec<f64>,
    slopes: Vec<f64>,
}

impl TwReference {
    /// The bundled table (81 points on `[-5, 3]`).
    pub fn gue() -> &'static TwReference {
        static REF: OnceLock<TwReference> = OnceLock::new();
        REF.get_or_init(|| {
            let (xs, fs) = TW_GUE_TABLE.iter().copied().unzip();
            TwReference::from_table(xs, fs).expect("bundled table is valid")
        })
    }

    /// Builds an interpolant through strictly increasing `xs` and
    /// nondecreasing `fs` in `(0, 1)`.
    pub fn from_table(xs: Vec<f64>, fs: Vec<f64>) -> Result<Self> {
        if xs.len() != fs.len() || xs.len() < 3 {
            return Err(Error::InvalidArgument("table needs >= 3 matching points".into()));
        }
        if xs.windows(2).any(|w| w[0] >= w[1]) || fs.windows(2).any(|w| w[0] > w[1]) {
            return Err(Error::InvalidArgument("table must be monotone".into()));
        }
        if fs[0] <= 0.0 || fs[fs.len() - 1] >= 1.0 {
            return Err(Error::InvalidArgument("table values must lie in (0, 1)".into()));
        }
        let slopes = pchip_slopes(&xs, &fs);
        Ok(Self { xs, fs, slopes })
    }

    pub fn table(&self) -> impl Iterator<Item = (f64, f64)> + '_ {
        self.xs.iter().copied().zip(self.fs.iter().copied())
    }

    pub fn mean(&self) -> f64 {
        TW_MEAN
    }

    pub fn variance(&self) -> f64 {
        TW_VAR
    }

    /// `F(x)`. Beyond the table the left tail decays like
    /// `exp(-|x|^3 / 12)` and the right tail like `exp(-4/3 x^{3/2})`.
    pub fn cdf(&self, x: f64) -> f64 {
        let last = self.xs.len() - 1;
        let (x0, x1) = (self.xs[0], self.xs[last]);
        if x.is_nan() {
            return f64::NAN;
        }
        if x <= x0 {
            return self.fs[0] * (-(x.abs().powi(3) - x0.abs().powi(3)) / 12.0).exp();
        }
        if x >= x1 {
            let tail = 1.0 - self.fs[last];
            return 1.0 - tail * (-(4.0 / 3.0) * (x.powf(1.5) - x1.powf(1.5))).exp();
        }
        let i = match self.xs.binary_search_by(|v| v.total_cmp(&x)) {
            Ok(i) => return self.fs[i],
            Err(i) => i - 1,
        };
        let h = self.xs[i + 1] - self.xs[i];
        let t = (x - self.xs[i]) / h;
        let (t2, t3) = (t * t, t * t * t);
        let h00 = 2.0 * t3 - 3.0 * t2 + 1.0;
        let h10 = t3 - 2.0 * t2 + t;
        let h01 = -2.0 * t3 + 3.0 * t2;
        let h11 = t3 - t2;
        h00 * self.fs[i] + h10 * h * self.slopes[i] + h01 * self.fs[i + 1] + h11 * h * self.slopes[i + 1]
    }

    /// Inverse CDF by bisection, for `p` in `(0, 1)`.
    pub fn quantile(&self, p: f64) -> Result<f64> {
        if !(p > 0.0 && p < 1.0) {
            return Err(Error::InvalidArgument(format!("probability {p} not in (0, 1)")));
        }
        let (mut lo, mut hi) = (-12.0, 8.0);
        for _ in 0..200 {
            let mid = 0.5 * (lo + hi);
            if self.cdf(mid) < p {
                lo = mid;
            } else {
                hi = mid;
            }
            if hi - lo < 1e-13 {
                break;
            }
        }
        Ok(0.5 * (lo + hi))
    }

    /// One draw by inverse transform.
    pub fn sample<R: Rng>(&self, rng: &mut R) -> f64 {
        loop {
            let u: f64 = rng.random();
            if u > 0.0 {
                return self.quantile(u).expect("u in (0, 1)");
            }
        }
    }
}

/// Fritsch-Carlson style derivative estimates that keep the Hermite
/// interpolant monotone.
fn pchip_slopes(xs: &[f64], fs: &[f64]) -> Vec<f64> {
    let n = xs.len();
    let h: Vec<f64> = xs.windows(2).map(|w| w[1] - w[0]).collect();
    let delta: Vec<f64> = (0..n - 1).map(|i| (fs[i + 1] - fs[i]) / h[i]).collect();
    let mut d = vec![0.0; n];
    for i in 1..n - 1 {
        if delta[i - 1] * delta[i] <= 0.0 {
            d[i] = 0.0;
        } else {
            let w1 = 2.0 * h[i] + h[i - 1];
            let w2 = h[i] + 2.0 * h[i - 1];
            d[i] = (w1 + w2) / (w1 / delta[i - 1] + w2 / delta[i]);
        }
    }
    let end = |h0: f64, h1: f64, d0: f64, d1: f64| {
        let mut s = ((2.0 * h0 + h1) * d0 - h0 * d1) / (h0 + h1);
        if s.signum() != d0.signum() {
            s = 0.0;
        } else if d0.signum() != d1.signum() && s.abs() > 3.0 * d0.abs() {
            s = 3.0 * d0;
        }
        s
    };
    d[0] = end(h[0], h[1], delta[0], delta[1]);
    d[n - 1] = end(h[n - 2], h[n - 3], delta[n - 2], delta[n - 3]);
    d
}

/// Kolmogorov-Smirnov distance between `sample` and the GUE Tracy-Widom law.
pub fn tw_ks(sample: &[f64]) -> Result<f64> {
    let tw = TwReference::gue();
    ks_distance(sample, |x| tw.cdf(x))
}
