//! Optimal alignment scores.
//!
//! [`align_full`] is the unconstrained global alignment: a last-passage
//! problem on the `(|X|+1) x (|Y|+1)` lattice where diagonal steps align two
//! letters and horizontal/vertical steps align a letter with a gap.
//!
//! [`align_kgap`] solves the constrained problem where `X` has `n - k`
//! letters, `Y` has `n`, and exactly `k` letters of `Y` are aligned with
//! gaps. An alignment is then a gap set `c_1 < ... < c_k`; a non-gapped
//! `Y_j` is aligned with `X_{j - g(j)}` where `g(j)` counts gap positions
//! `<= j`.

use std::fmt;
use std::ops::Deref;
use std::str::FromStr;

use crate::error::{Error, Result};
use crate::scoring::{Letter, PairScore, ScoringMatrix};
use crate::walks::WalkEnsemble;

/// Upper bound on the number of gap sets [`kgap_bruteforce`] will enumerate.
pub const ENUMERATION_BUDGET: u128 = 1_000_000;

/// A string over `{a, b}`.
#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct LetterString(pub Vec<Letter>);

impl LetterString {
    pub fn new(letters: Vec<Letter>) -> Self {
        Self(letters)
    }

    /// The letters as `+1`/`-1` reals, for use with the product rule.
    pub fn signs(&self) -> Vec<f64> {
        self.0.iter().map(|l| l.sign()).collect()
    }
}

impl Deref for LetterString {
    type Target = [Letter];

    fn deref(&self) -> &[Letter] {
        &self.0
    }
}

impl From<Vec<Letter>> for LetterString {
    fn from(v: Vec<Letter>) -> Self {
        Self(v)
    }
}

impl FromStr for LetterString {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        s.chars()
            .filter(|c| !c.is_whitespace())
            .map(|c| {
                Letter::from_char(c)
                    .ok_or_else(|| Error::Parse(format!("`{c}` is not a letter of {{a, b}}")))
            })
            .collect::<Result<Vec<_>>>()
            .map(LetterString)
    }
}

impl fmt::Display for LetterString {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        self.0.iter().try_for_each(|l| write!(f, "{}", l.as_char()))
    }
}

/// Positions `c_1 < ... < c_k` (1-based) of the `Y` letters aligned with gaps.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash, Default)]
pub struct GapAlignment {
    positions: Vec<usize>,
}

impl GapAlignment {
    pub fn new(positions: Vec<usize>, n: usize) -> Result<Self> {
        if let Some(&p) = positions.iter().find(|&&p| p == 0 || p > n) {
            return Err(Error::OutOfRange(format!("gap position {p} not in [1, {n}]")));
        }
        if positions.windows(2).any(|w| w[0] >= w[1]) {
            return Err(Error::InvalidArgument(
                "gap positions must be strictly increasing".into(),
            ));
        }
        Ok(Self { positions })
    }

    pub fn positions(&self) -> &[usize] {
        &self.positions
    }

    pub fn len(&self) -> usize {
        self.positions.len()
    }

    pub fn is_empty(&self) -> bool {
        self.positions.is_empty()
    }
}

impl fmt::Display for GapAlignment {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let parts: Vec<String> = self.positions.iter().map(|p| p.to_string()).collect();
        f.write_str(&parts.join(","))
    }
}

/// How an optimum was attained.
#[derive(Debug, Clone, PartialEq)]
pub enum Witness {
    /// Gap set of a constrained alignment.
    Gaps(GapAlignment),
    /// Aligned `(i, j)` pairs (1-based, both coordinates increasing) of an
    /// unconstrained alignment; every other letter is gapped.
    Pairs(Vec<(usize, usize)>),
}

#[derive(Debug, Clone, PartialEq)]
pub struct ScoreResult {
    pub score: f64,
    pub witness: Option<Witness>,
}

impl ScoreResult {
    pub fn gaps(&self) -> Option<&GapAlignment> {
        match &self.witness {
            Some(Witness::Gaps(g)) => Some(g),
            _ => None,
        }
    }

    pub fn pairs(&self) -> Option<&[(usize, usize)]> {
        match &self.witness {
            Some(Witness::Pairs(p)) => Some(p),
            _ => None,
        }
    }
}

#[derive(Clone, Copy, PartialEq, Eq)]
enum Step {
    Diag,
    GapX,
    GapY,
}

/// Unconstrained optimal alignment score with gap scores from the matrix.
///
/// The witness prefers diagonal steps, then gapping `X`, then gapping `Y`
/// when tracing back from `(|X|, |Y|)`.
pub fn align_full(x: &[Letter], y: &[Letter], s: &ScoringMatrix) -> ScoreResult {
    let (nx, ny) = (x.len(), y.len());
    let w = ny + 1;
    let mut table = vec![0.0f64; (nx + 1) * w];
    let mut step = vec![Step::Diag; (nx + 1) * w];
    for j in 1..=ny {
        table[j] = table[j - 1] + s.letter_gap(y[j - 1]);
        step[j] = Step::GapY;
    }
    for i in 1..=nx {
        table[i * w] = table[(i - 1) * w] + s.letter_gap(x[i - 1]);
        step[i * w] = Step::GapX;
        for j in 1..=ny {
            let diag = table[(i - 1) * w + j - 1] + s.letters(x[i - 1], y[j - 1]);
            let up = table[(i - 1) * w + j] + s.letter_gap(x[i - 1]);
            let left = table[i * w + j - 1] + s.letter_gap(y[j - 1]);
            let (best, how) = if diag >= up && diag >= left {
                (diag, Step::Diag)
            } else if up >= left {
                (up, Step::GapX)
            } else {
                (left, Step::GapY)
            };
            table[i * w + j] = best;
            step[i * w + j] = how;
        }
    }
    let mut pairs = Vec::new();
    let (mut i, mut j) = (nx, ny);
    while i > 0 || j > 0 {
        match step[i * w + j] {
            Step::Diag if i > 0 && j > 0 => {
                pairs.push((i, j));
                i -= 1;
                j -= 1;
            }
            Step::GapX if i > 0 => i -= 1,
            _ => j -= 1,
        }
    }
    pairs.reverse();
    ScoreResult {
        score: table[nx * w + ny],
        witness: Some(Witness::Pairs(pairs)),
    }
}

/// Score of the unconstrained alignment given by its aligned pairs.
pub fn score_pairs(
    x: &[Letter],
    y: &[Letter],
    s: &ScoringMatrix,
    pairs: &[(usize, usize)],
) -> Result<f64> {
    if pairs.windows(2).any(|p| p[0].0 >= p[1].0 || p[0].1 >= p[1].1) {
        return Err(Error::InvalidArgument("aligned pairs must be increasing".into()));
    }
    let mut x_used = vec![false; x.len()];
    let mut y_used = vec![false; y.len()];
    let mut total = 0.0;
    for &(i, j) in pairs {
        if i == 0 || i > x.len() || j == 0 || j > y.len() {
            return Err(Error::OutOfRange(format!("pair ({i}, {j})")));
        }
        x_used[i - 1] = true;
        y_used[j - 1] = true;
        total += s.letters(x[i - 1], y[j - 1]);
    }
    total += x
        .iter()
        .zip(&x_used)
        .filter(|(_, &u)| !u)
        .map(|(&l, _)| s.letter_gap(l))
        .sum::<f64>();
    total += y
        .iter()
        .zip(&y_used)
        .filter(|(_, &u)| !u)
        .map(|(&l, _)| s.letter_gap(l))
        .sum::<f64>();
    Ok(total)
}

fn check_kgap_shape(x_len: usize, n: usize, k: usize) -> Result<()> {
    if k > n {
        return Err(Error::InvalidGapCount(format!("k={k} exceeds n={n}")));
    }
    if x_len != n - k {
        return Err(Error::LengthMismatch(format!(
            "|X|={x_len} but n-k={}",
            n - k
        )));
    }
    Ok(())
}

/// Optimal score with exactly `k` gaps, all aligned with letters of `Y`.
///
/// Forward recursion over `Y` positions with a rolling column indexed by
/// the number of gaps used so far: `O(n k)` time, `O(k)` memory. No
/// witness is produced; see [`align_kgap_witness`].
pub fn align_kgap<S: PairScore>(x: &[Letter], y: &[S::Y], s: &S, k: usize) -> Result<ScoreResult> {
    let n = y.len();
    check_kgap_shape(x.len(), n, k)?;
    let m = n - k;
    let mut col = vec![f64::NEG_INFINITY; k + 1];
    col[0] = 0.0;
    for j in 1..=n {
        let yj = y[j - 1];
        let gap = s.gap(yj);
        for g in (0..=k.min(j)).rev() {
            // Y_j aligned with X_{j-g}
            let xi = j - g;
            let mut best = if xi >= 1 && xi <= m {
                col[g] + s.pair(x[xi - 1], yj)
            } else {
                f64::NEG_INFINITY
            };
            if g >= 1 {
                best = best.max(col[g - 1] + gap);
            }
            col[g] = best;
        }
    }
    Ok(ScoreResult {
        score: col[k],
        witness: None,
    })
}

/// As [`align_kgap`], also returning the lexicographically smallest optimal
/// gap set. Uses `O(n k)` memory for the suffix table.
pub fn align_kgap_witness<S: PairScore>(
    x: &[Letter],
    y: &[S::Y],
    s: &S,
    k: usize,
) -> Result<ScoreResult> {
    let n = y.len();
    check_kgap_shape(x.len(), n, k)?;
    let m = n - k;
    let w = k + 1;
    // suffix[j * w + r]: best score of Y_{j+1..n} with r gaps still to place
    // (so k - r gaps already placed before position j + 1).
    let mut suffix = vec![f64::NEG_INFINITY; (n + 1) * w];
    suffix[n * w] = 0.0;
    for j in (0..n).rev() {
        let yj = y[j];
        for r in 0..=k.min(n - j) {
            let used = k - r;
            let xi = (j + 1).wrapping_sub(used);
            let mut best = if used <= j && xi >= 1 && xi <= m {
                suffix[(j + 1) * w + r] + s.pair(x[xi - 1], yj)
            } else {
                f64::NEG_INFINITY
            };
            if r >= 1 {
                best = best.max(suffix[(j + 1) * w + r - 1] + s.gap(yj));
            }
            suffix[j * w + r] = best;
        }
    }
    let score = suffix[k];
    let mut positions = Vec::with_capacity(k);
    let mut r = k;
    for j in 0..n {
        if r >= 1 && suffix[(j + 1) * w + r - 1] + s.gap(y[j]) == suffix[j * w + r] {
            positions.push(j + 1);
            r -= 1;
        }
    }
    debug_assert_eq!(positions.len(), k);
    Ok(ScoreResult {
        score,
        witness: Some(Witness::Gaps(GapAlignment { positions })),
    })
}

/// Score of one fixed gap set.
pub fn gap_set_score<S: PairScore>(
    x: &[Letter],
    y: &[S::Y],
    s: &S,
    gaps: &GapAlignment,
) -> Result<f64> {
    let n = y.len();
    check_kgap_shape(x.len(), n, gaps.len())?;
    if gaps.positions().last().is_some_and(|&p| p > n) {
        return Err(Error::OutOfRange("gap position beyond |Y|".into()));
    }
    let mut total = 0.0;
    let mut g = 0;
    let mut next = gaps.positions().iter().peekable();
    for j in 1..=n {
        if next.peek() == Some(&&j) {
            next.next();
            g += 1;
            total += s.gap(y[j - 1]);
        } else {
            total += s.pair(x[j - g - 1], y[j - 1]);
        }
    }
    Ok(total)
}

fn binomial(n: usize, k: usize) -> u128 {
    let k = k.min(n - k);
    (0..k).fold(1u128, |acc, i| acc * (n - i) as u128 / (i + 1) as u128)
}

/// Exhaustive maximum over all `C(n, k)` gap sets, visited in lexicographic
/// order so ties resolve to the smallest set.
pub fn kgap_bruteforce<S: PairScore>(
    x: &[Letter],
    y: &[S::Y],
    s: &S,
    k: usize,
) -> Result<ScoreResult> {
    let n = y.len();
    check_kgap_shape(x.len(), n, k)?;
    let count = binomial(n, k);
    if count > ENUMERATION_BUDGET {
        return Err(Error::EnumerationBudget(count, ENUMERATION_BUDGET));
    }
    let mut idx: Vec<usize> = (1..=k).collect();
    let mut best: Option<(f64, Vec<usize>)> = None;
    loop {
        let set = GapAlignment { positions: idx.clone() };
        let v = gap_set_score(x, y, s, &set)?;
        if best.as_ref().is_none_or(|(b, _)| v > *b) {
            best = Some((v, idx.clone()));
        }
        // advance to the next k-combination of 1..=n
        let mut i = k;
        loop {
            if i == 0 {
                let (score, positions) = best.expect("at least one gap set");
                return Ok(ScoreResult {
                    score,
                    witness: Some(Witness::Gaps(GapAlignment { positions })),
                });
            }
            i -= 1;
            if idx[i] < n - k + i + 1 {
                idx[i] += 1;
                for t in i + 1..k {
                    idx[t] = idx[t - 1] + 1;
                }
                break;
            }
        }
    }
}

/// Score of a gap set read off the walk ensemble: the increment of `R^1`
/// on `[0, c_1 - 1]`, of `R^2` on `[c_1, c_2 - 1]`, ..., of `R^{k+1}` on
/// `[c_k, n]`. Gap scores are not included.
pub fn score_via_walks(walks: &WalkEnsemble, gaps: &GapAlignment) -> Result<f64> {
    let k = walks.k();
    let n = walks.n();
    if gaps.len() != k {
        return Err(Error::InvalidGapCount(format!(
            "walks built for k={k}, gap set has {}",
            gaps.len()
        )));
    }
    if gaps.positions().last().is_some_and(|&p| p > n) {
        return Err(Error::OutOfRange("gap position beyond walk length".into()));
    }
    let mut total = 0.0;
    let mut start = 0;
    for (i, &c) in gaps.positions().iter().enumerate() {
        total += walks.position(i + 1, c - 1) - walks.position(i + 1, start);
        start = c;
    }
    total += walks.position(k + 1, n) - walks.position(k + 1, start);
    Ok(total)
}
