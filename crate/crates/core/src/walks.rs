//! The `(k+1)`-component walk `R` whose increments are
//! `R^i(j) - R^i(j-1) = S(X_{j-i+1}, Y_j)`, its covariance structure, and
//! the rescaling that couples a nearly isotropic Gaussian vector to an
//! exactly isotropic one.

use nalgebra::{DMatrix, DVector, SymmetricEigen};
use rand::Rng;
use rand_distr::StandardNormal;

use crate::error::{Error, Result};
use crate::scoring::{Letter, PairScore, ScoringMatrix, S2};

/// A finite window `X_{1-e}, ..., X_0, X_1, ..., X_m` of a doubly infinite
/// letter sequence.
#[derive(Debug, Clone, PartialEq)]
pub struct ExtendedLetters {
    // X_{1-e} .. X_m in increasing index order
    letters: Vec<Letter>,
    extension: usize,
}

impl ExtendedLetters {
    /// `extension` lists `X_0, X_{-1}, ..., X_{1-e}` (walking left from the
    /// origin); `body` lists `X_1, ..., X_m`.
    pub fn new(extension: Vec<Letter>, body: Vec<Letter>) -> Self {
        let e = extension.len();
        let mut letters = extension;
        letters.reverse();
        letters.extend(body);
        Self {
            letters,
            extension: e,
        }
    }

    /// Number of letters at non-positive indices.
    pub fn extension_len(&self) -> usize {
        self.extension
    }

    /// Number of letters at positive indices.
    pub fn body_len(&self) -> usize {
        self.letters.len() - self.extension
    }

    pub fn body(&self) -> &[Letter] {
        &self.letters[self.extension..]
    }

    /// `X_index`; panics outside the stored window.
    #[inline]
    pub fn get(&self, index: isize) -> Letter {
        self.letters[(index + self.extension as isize - 1) as usize]
    }
}

/// Increments and positions of the walk ensemble built from one sample.
#[derive(Debug, Clone)]
pub struct WalkEnsemble {
    k: usize,
    n: usize,
    // row j-1 holds (S(X_{j-i+1}, Y_j))_{i=1..k+1}
    increments: Vec<f64>,
    // row t holds (R^i(t))_{i=1..k+1}
    positions: Vec<f64>,
    x: ExtendedLetters,
}

impl WalkEnsemble {
    pub fn k(&self) -> usize {
        self.k
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn dim(&self) -> usize {
        self.k + 1
    }

    pub fn letters(&self) -> &ExtendedLetters {
        &self.x
    }

    /// `R^i(j) - R^i(j-1)` for `i` in `1..=k+1`, `j` in `1..=n`.
    #[inline]
    pub fn increment(&self, j: usize, i: usize) -> f64 {
        self.increments[(j - 1) * (self.k + 1) + i - 1]
    }

    /// `R^i(t)` for `i` in `1..=k+1`, `t` in `0..=n`.
    #[inline]
    pub fn position(&self, i: usize, t: usize) -> f64 {
        self.positions[t * (self.k + 1) + i - 1]
    }

    /// `R(t)` as a vector.
    pub fn position_vector(&self, t: usize) -> DVector<f64> {
        let d = self.k + 1;
        DVector::from_column_slice(&self.positions[t * d..(t + 1) * d])
    }
}

/// Builds `R^1..R^{k+1}` from `X_{1-k..n}` and `Y_{1..n}`.
pub fn build_walks<S: PairScore>(
    x: &ExtendedLetters,
    y: &[S::Y],
    s: &S,
    k: usize,
) -> Result<WalkEnsemble> {
    let n = y.len();
    if x.extension_len() < k {
        return Err(Error::LengthMismatch(format!(
            "X extension has {} letters, need {k}",
            x.extension_len()
        )));
    }
    if x.body_len() < n {
        return Err(Error::LengthMismatch(format!(
            "X has {} letters at positive indices, need {n}",
            x.body_len()
        )));
    }
    let d = k + 1;
    let mut increments = Vec::with_capacity(n * d);
    let mut positions = vec![0.0; (n + 1) * d];
    for j in 1..=n {
        let yj = y[j - 1];
        for i in 1..=d {
            let step = s.pair(x.get(j as isize - i as isize + 1), yj);
            increments.push(step);
            positions[j * d + i - 1] = positions[(j - 1) * d + i - 1] + step;
        }
    }
    Ok(WalkEnsemble {
        k,
        n,
        increments,
        positions,
        x: x.clone(),
    })
}

/// Which pairwise score generates the increments.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum ScoringRule {
    Matrix(ScoringMatrix),
    /// `S(x, y) = x * y` on `{+1, -1}` codes (and on real `Y`).
    Product,
}

/// Distribution of the letters.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum LetterModel {
    /// Both strings i.i.d. with `P(a) = p_a`.
    Binary { p_a: f64 },
    /// `X` i.i.d. with `P(+1) = p_a`, `Y` i.i.d. standard normal.
    BinaryXNormalY { p_a: f64 },
}

impl LetterModel {
    pub fn p_a(&self) -> f64 {
        match *self {
            LetterModel::Binary { p_a } | LetterModel::BinaryXNormalY { p_a } => p_a,
        }
    }
}

/// Second moments of single walk increments.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CovParams {
    /// `VAR[S(X_1, Y_1)]`
    pub var_diag: f64,
    /// `COV(S(X_1, Y_1), S(X_0, Y_1))`: shared `Y`, neighbouring `X`.
    pub cov_off: f64,
    /// `COV(S(X_1, Y_1), S(X_1, Y_2))`: shared `X`, neighbouring `Y`.
    pub cov_v: f64,
}

fn binary_rule(rule: &ScoringRule) -> ScoringMatrix {
    match rule {
        ScoringRule::Matrix(m) => *m,
        ScoringRule::Product => S2,
    }
}

fn weights(p_a: f64) -> [(Letter, f64); 2] {
    [(Letter::A, p_a), (Letter::B, 1.0 - p_a)]
}

fn check_model(model: &LetterModel, rule: &ScoringRule) -> Result<()> {
    let p = model.p_a();
    if !(0.0..=1.0).contains(&p) {
        return Err(Error::InvalidArgument(format!("p_a={p} outside [0, 1]")));
    }
    if matches!(model, LetterModel::BinaryXNormalY { .. }) && !matches!(rule, ScoringRule::Product) {
        return Err(Error::InvalidArgument(
            "real-valued Y letters need the product rule".into(),
        ));
    }
    Ok(())
}

/// `E[S(X_1, Y_1)]`, the common drift of every component.
pub fn mean_step(rule: &ScoringRule, model: &LetterModel) -> Result<f64> {
    check_model(model, rule)?;
    Ok(match model {
        LetterModel::Binary { p_a } => {
            let s = binary_rule(rule);
            let w = weights(*p_a);
            w.iter()
                .flat_map(|&(x, px)| w.iter().map(move |&(y, py)| px * py * s.letters(x, y)))
                .sum()
        }
        LetterModel::BinaryXNormalY { .. } => 0.0,
    })
}

/// Exact increment moments by enumerating the binary outcomes, or from
/// Gaussian moment identities when `Y` is standard normal.
pub fn theoretical_cov(rule: &ScoringRule, model: &LetterModel) -> Result<CovParams> {
    check_model(model, rule)?;
    let mu = mean_step(rule, model)?;
    match *model {
        LetterModel::Binary { p_a } => {
            let s = binary_rule(rule);
            let w = weights(p_a);
            let (mut sq, mut off, mut v) = (0.0, 0.0, 0.0);
            for &(a, pa) in &w {
                for &(b, pb) in &w {
                    sq += pa * pb * s.letters(a, b).powi(2);
                    for &(c, pc) in &w {
                        // (X_1, X_0, Y_1) = (a, c, b)
                        off += pa * pb * pc * s.letters(a, b) * s.letters(c, b);
                        // (X_1, Y_1, Y_2) = (a, b, c)
                        v += pa * pb * pc * s.letters(a, b) * s.letters(a, c);
                    }
                }
            }
            Ok(CovParams {
                var_diag: sq - mu * mu,
                cov_off: off - mu * mu,
                cov_v: v - mu * mu,
            })
        }
        LetterModel::BinaryXNormalY { p_a } => {
            let ex = 2.0 * p_a - 1.0;
            Ok(CovParams {
                // E[X^2] E[Y^2]
                var_diag: 1.0,
                // E[X_1] E[X_0] E[Y_1^2]
                cov_off: ex * ex,
                // E[X_1^2] E[Y_1] E[Y_2]
                cov_v: 0.0,
            })
        }
    }
}

/// Symmetric positive semidefinite covariance matrix.
#[derive(Debug, Clone, PartialEq)]
pub struct CovMatrix(DMatrix<f64>);

impl CovMatrix {
    /// Checks squareness and symmetry (to `1e-12` relative to the largest
    /// entry).
    pub fn new(m: DMatrix<f64>) -> Result<Self> {
        if !m.is_square() {
            return Err(Error::InvalidArgument("covariance must be square".into()));
        }
        let scale = m.amax().max(1.0);
        let asym = (&m - m.transpose()).amax();
        if asym > 1e-12 * scale {
            return Err(Error::InvalidArgument(format!(
                "covariance not symmetric (max asymmetry {asym:e})"
            )));
        }
        Ok(Self(m))
    }

    pub fn dim(&self) -> usize {
        self.0.nrows()
    }

    pub fn matrix(&self) -> &DMatrix<f64> {
        &self.0
    }

    pub fn eigenvalues(&self) -> DVector<f64> {
        SymmetricEigen::new(self.0.clone()).eigenvalues
    }

    /// Operator norm `|Sigma - j I|`, i.e. `max_i |lambda_i - j|`.
    pub fn distance_to_scaled_identity(&self, j: f64) -> f64 {
        self.eigenvalues()
            .iter()
            .fold(0.0f64, |m, &l| m.max((l - j).abs()))
    }
}

/// `sum_m w_m w_m^T` over the block `m = block_start+1 ..= block_start+j`
/// with `w_m = (x_m, x_{m-1}, ..., x_{m-k})`: the covariance of the block
/// increment `R(block_start + j) - R(block_start)` given `X` when `Y` is
/// i.i.d. standard normal under the product rule.
pub fn empirical_increment_cov(walks: &WalkEnsemble, block_start: usize, j: usize) -> Result<CovMatrix> {
    if j == 0 || block_start + j > walks.n() {
        return Err(Error::OutOfRange(format!(
            "block [{}, {}] not inside [1, {}]",
            block_start + 1,
            block_start + j,
            walks.n()
        )));
    }
    Ok(CovMatrix(window_cov(walks.letters(), walks.k(), block_start, j)))
}

fn window_cov(x: &ExtendedLetters, k: usize, block_start: usize, j: usize) -> DMatrix<f64> {
    let d = k + 1;
    let mut acc = DMatrix::<f64>::zeros(d, d);
    let mut w = vec![0.0; d];
    for m in block_start + 1..=block_start + j {
        for (i, wi) in w.iter_mut().enumerate() {
            *wi = x.get(m as isize - i as isize).sign();
        }
        for a in 0..d {
            for b in a..d {
                acc[(a, b)] += w[a] * w[b];
            }
        }
    }
    acc.fill_lower_triangle_with_upper_triangle();
    acc
}

/// Calibrates the constant `C` in `|Cov - j I| <= C k sqrt(j)` as the given
/// quantile (nearest rank) of `max_b |Cov_b - j I| / (k sqrt(j))` over
/// `draws` independent sequences, each cut into `blocks` consecutive blocks
/// of length `j`. With `blocks = 1` this calibrates a single block.
pub fn calibrate_cov_constant<R: Rng>(
    k: usize,
    j: usize,
    blocks: usize,
    draws: usize,
    quantile: f64,
    p_a: f64,
    rng: &mut R,
) -> Result<f64> {
    if j == 0 || blocks == 0 || draws == 0 || !(0.0..=1.0).contains(&quantile) {
        return Err(Error::InvalidArgument("calibration needs j, blocks, draws >= 1".into()));
    }
    if k == 0 {
        return Ok(0.0);
    }
    let scale = k as f64 * (j as f64).sqrt();
    let mut stats: Vec<f64> = (0..draws)
        .map(|_| {
            let ext: Vec<Letter> = (0..k).map(|_| sample_letter(rng, p_a)).collect();
            let body: Vec<Letter> = (0..blocks * j).map(|_| sample_letter(rng, p_a)).collect();
            let x = ExtendedLetters::new(ext, body);
            (0..blocks)
                .map(|b| {
                    CovMatrix(window_cov(&x, k, b * j, j)).distance_to_scaled_identity(j as f64)
                        / scale
                })
                .fold(0.0, f64::max)
        })
        .collect();
    stats.sort_by(f64::total_cmp);
    let rank = ((quantile * draws as f64).ceil() as usize).clamp(1, draws);
    Ok(stats[rank - 1])
}

/// One letter, `a` with probability `p_a`.
pub fn sample_letter<R: Rng>(rng: &mut R, p_a: f64) -> Letter {
    if rng.random::<f64>() < p_a {
        Letter::A
    } else {
        Letter::B
    }
}

pub fn sample_letters<R: Rng>(rng: &mut R, len: usize, p_a: f64) -> Vec<Letter> {
    (0..len).map(|_| sample_letter(rng, p_a)).collect()
}

/// `len` independent standard normal values.
pub fn sample_normals<R: Rng>(rng: &mut R, len: usize) -> Vec<f64> {
    (0..len).map(|_| rng.sample(StandardNormal)).collect()
}

/// The linear map `N = j^{1/2} Sigma^{-1/2} v` taking a centred Gaussian
/// with covariance `Sigma` to one with covariance `j I`.
#[derive(Debug, Clone)]
pub struct IsotropicCoupling {
    transform: DMatrix<f64>,
    /// `max_i (sqrt(lambda_i) - sqrt(j))^2 = |COV[v - N]|`.
    pub deviation_bound: f64,
    /// `max_i |lambda_i - j| = |Sigma - j I|`.
    pub epsilon: f64,
}

impl IsotropicCoupling {
    pub fn new(sigma: &CovMatrix, j: f64) -> Result<Self> {
        if j.is_nan() || j <= 0.0 {
            return Err(Error::InvalidArgument(format!("j={j} must be positive")));
        }
        let eig = SymmetricEigen::new(sigma.0.clone());
        let floor = 1e-12 * j;
        let min = eig.eigenvalues.min();
        if min <= floor {
            return Err(Error::NotPositiveDefinite(min));
        }
        let mut deviation_bound = 0.0f64;
        let mut epsilon = 0.0f64;
        let factors = eig.eigenvalues.map(|l| {
            deviation_bound = deviation_bound.max((l.sqrt() - j.sqrt()).powi(2));
            epsilon = epsilon.max((l - j).abs());
            (j / l).sqrt()
        });
        let q = &eig.eigenvectors;
        let transform = q * DMatrix::from_diagonal(&factors) * q.transpose();
        Ok(Self {
            transform,
            deviation_bound,
            epsilon,
        })
    }

    pub fn transform(&self) -> &DMatrix<f64> {
        &self.transform
    }

    pub fn apply(&self, v: &DVector<f64>) -> DVector<f64> {
        &self.transform * v
    }
}

/// Applies the coupling to every row of `samples` (one `d`-vector per row).
pub fn couple_to_isotropic(
    samples: &DMatrix<f64>,
    sigma: &CovMatrix,
    j: f64,
) -> Result<(DMatrix<f64>, f64)> {
    if samples.ncols() != sigma.dim() {
        return Err(Error::LengthMismatch(format!(
            "samples have {} columns, covariance is {}x{}",
            samples.ncols(),
            sigma.dim(),
            sigma.dim()
        )));
    }
    let c = IsotropicCoupling::new(sigma, j)?;
    // rows are samples, so N^T = v^T T^T = v^T T (T symmetric)
    Ok((samples * c.transform.transpose(), c.deviation_bound))
}

/// `P(N(0, 1) >= s)` for `s > 0`.
pub fn gaussian_tail(s: f64) -> Result<f64> {
    if s.is_nan() || s <= 0.0 {
        return Err(Error::InvalidArgument(format!("tail threshold {s} must be positive")));
    }
    Ok(0.5 * libm::erfc(s / std::f64::consts::SQRT_2))
}

/// Draws standard normal samples into a `rows x d` matrix.
pub fn standard_normal_matrix<R: Rng>(rng: &mut R, rows: usize, d: usize) -> DMatrix<f64> {
    DMatrix::from_fn(rows, d, |_, _| rng.sample::<f64, _>(StandardNormal))
}
