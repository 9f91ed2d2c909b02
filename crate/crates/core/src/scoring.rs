//! Symmetric scoring functions on the binary alphabet `{a, b}` plus a gap.
//!
//! Every such function is a point in a five-dimensional space spanned by
//! [`S0`]..[`S4`]. The first two basis elements are "linear" scores
//! `T(x, y) = h(x) + h(y)` with `h(gap) = 0`: they add the same amount to
//! every alignment of a given pair of strings, so they shift the optimal
//! score by a letter-count statistic without changing which alignment wins.
//! [`decompose`] recovers the coordinates, [`normal_part`] evaluates that
//! alignment-independent contribution and [`residual_scoring`] strips it.

use std::fmt;
use std::str::FromStr;

use crate::error::{Error, Result};

/// A letter of the binary alphabet. `A` is coded `+1`, `B` is coded `-1`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Letter {
    A,
    B,
}

impl Letter {
    /// Numeric code used by the product scoring rule.
    #[inline]
    pub fn sign(self) -> f64 {
        match self {
            Letter::A => 1.0,
            Letter::B => -1.0,
        }
    }

    pub fn from_char(c: char) -> Option<Letter> {
        match c {
            'a' | 'A' => Some(Letter::A),
            'b' | 'B' => Some(Letter::B),
            _ => None,
        }
    }

    pub fn as_char(self) -> char {
        match self {
            Letter::A => 'a',
            Letter::B => 'b',
        }
    }
}

/// One column entry of an alignment: a letter or the gap symbol.
///
/// The gap is a separate variant rather than a numeric code so it can never
/// be multiplied into a product score by accident.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Symbol {
    Letter(Letter),
    Gap,
}

impl From<Letter> for Symbol {
    fn from(l: Letter) -> Self {
        Symbol::Letter(l)
    }
}

/// Symmetric 3x3 scoring matrix over `{a, b, G}` with `S(G, G) = 0`.
///
/// Only the upper triangle is stored, so symmetry holds by construction.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ScoringMatrix {
    pub saa: f64,
    pub sab: f64,
    pub sbb: f64,
    pub sag: f64,
    pub sbg: f64,
}

/// Alignment-independent constant part: `h(a) = h(b) = 1/2`.
pub const S0: ScoringMatrix = ScoringMatrix::new(1.0, 1.0, 1.0, 0.5, 0.5);
/// Alignment-independent letter-count part: `h(a) = 1/2`, `h(b) = -1/2`.
pub const S1: ScoringMatrix = ScoringMatrix::new(1.0, 0.0, -1.0, 0.5, -0.5);
/// Match/mismatch part; equals the product rule `x * y` on `{+1, -1}`.
pub const S2: ScoringMatrix = ScoringMatrix::new(1.0, -1.0, 1.0, 0.0, 0.0);
/// Letter-dependent gap score.
pub const S3: ScoringMatrix = ScoringMatrix::new(0.0, 0.0, 0.0, 1.0, -1.0);
/// Uniform gap score.
pub const S4: ScoringMatrix = ScoringMatrix::new(0.0, 0.0, 0.0, 1.0, 1.0);

impl ScoringMatrix {
    pub const fn new(saa: f64, sab: f64, sbb: f64, sag: f64, sbg: f64) -> Self {
        Self {
            saa,
            sab,
            sbb,
            sag,
            sbg,
        }
    }

    pub const fn zero() -> Self {
        Self::new(0.0, 0.0, 0.0, 0.0, 0.0)
    }

    /// Longest-common-subsequence scoring: 1 for equal letters, 0 otherwise,
    /// free gaps.
    pub const fn lcs() -> Self {
        Self::new(1.0, 0.0, 1.0, 0.0, 0.0)
    }

    #[inline]
    pub fn letters(&self, x: Letter, y: Letter) -> f64 {
        match (x, y) {
            (Letter::A, Letter::A) => self.saa,
            (Letter::B, Letter::B) => self.sbb,
            _ => self.sab,
        }
    }

    #[inline]
    pub fn letter_gap(&self, x: Letter) -> f64 {
        match x {
            Letter::A => self.sag,
            Letter::B => self.sbg,
        }
    }

    pub fn score(&self, x: Symbol, y: Symbol) -> f64 {
        match (x, y) {
            (Symbol::Letter(x), Symbol::Letter(y)) => self.letters(x, y),
            (Symbol::Letter(l), Symbol::Gap) | (Symbol::Gap, Symbol::Letter(l)) => {
                self.letter_gap(l)
            }
            (Symbol::Gap, Symbol::Gap) => 0.0,
        }
    }

    /// Full matrix in `a, b, G` order.
    pub fn to_array(&self) -> [[f64; 3]; 3] {
        [
            [self.saa, self.sab, self.sag],
            [self.sab, self.sbb, self.sbg],
            [self.sag, self.sbg, 0.0],
        ]
    }

    /// Trace inner product `Tr(A B)`, equal to the entrywise sum for
    /// symmetric matrices.
    pub fn inner(&self, other: &ScoringMatrix) -> f64 {
        let (a, b) = (self.to_array(), other.to_array());
        (0..3)
            .flat_map(|i| (0..3).map(move |j| (i, j)))
            .map(|(i, j)| a[i][j] * b[i][j])
            .sum()
    }

    pub fn scaled(&self, f: f64) -> Self {
        Self::new(
            self.saa * f,
            self.sab * f,
            self.sbb * f,
            self.sag * f,
            self.sbg * f,
        )
    }

    pub fn plus(&self, o: &ScoringMatrix) -> Self {
        Self::new(
            self.saa + o.saa,
            self.sab + o.sab,
            self.sbb + o.sbb,
            self.sag + o.sag,
            self.sbg + o.sbg,
        )
    }

    /// Largest absolute letter/letter score.
    pub fn max_abs_letter_score(&self) -> f64 {
        self.saa.abs().max(self.sab.abs()).max(self.sbb.abs())
    }

    pub fn max_abs_diff(&self, o: &ScoringMatrix) -> f64 {
        [
            self.saa - o.saa,
            self.sab - o.sab,
            self.sbb - o.sbb,
            self.sag - o.sag,
            self.sbg - o.sbg,
        ]
        .iter()
        .fold(0.0f64, |m, d| m.max(d.abs()))
    }
}

impl fmt::Display for ScoringMatrix {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(f, "saa={}", self.saa)?;
        writeln!(f, "sab={}", self.sab)?;
        writeln!(f, "sbb={}", self.sbb)?;
        writeln!(f, "sag={}", self.sag)?;
        writeln!(f, "sbg={}", self.sbg)
    }
}

/// Parses the five-line `key=value` format written by `Display`. Blank lines
/// and `#` comments are ignored; every key must appear exactly once.
impl FromStr for ScoringMatrix {
    type Err = Error;

    fn from_str(text: &str) -> Result<Self> {
        let mut slots: [Option<f64>; 5] = [None; 5];
        const KEYS: [&str; 5] = ["saa", "sab", "sbb", "sag", "sbg"];
        for (lineno, raw) in text.lines().enumerate() {
            let line = raw.trim();
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            let (key, value) = line.split_once('=').ok_or_else(|| {
                Error::Parse(format!("line {}: expected key=value", lineno + 1))
            })?;
            let key = key.trim();
            let idx = KEYS
                .iter()
                .position(|k| *k == key)
                .ok_or_else(|| Error::Parse(format!("line {}: unknown key `{key}`", lineno + 1)))?;
            if slots[idx].is_some() {
                return Err(Error::Parse(format!("duplicate key `{key}`")));
            }
            let v: f64 = value.trim().parse().map_err(|_| {
                Error::Parse(format!("line {}: bad number `{}`", lineno + 1, value.trim()))
            })?;
            if !v.is_finite() {
                return Err(Error::Parse(format!("non-finite value for `{key}`")));
            }
            slots[idx] = Some(v);
        }
        let mut out = [0.0; 5];
        for (i, slot) in slots.iter().enumerate() {
            out[i] = slot.ok_or_else(|| Error::Parse(format!("missing key `{}`", KEYS[i])))?;
        }
        Ok(ScoringMatrix::new(out[0], out[1], out[2], out[3], out[4]))
    }
}

/// Coordinates of a scoring matrix in the `S0..S4` basis.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct BasisCoefficients {
    pub a0: f64,
    pub a1: f64,
    pub a2: f64,
    pub a3: f64,
    pub a4: f64,
}

impl BasisCoefficients {
    pub const fn new(a0: f64, a1: f64, a2: f64, a3: f64, a4: f64) -> Self {
        Self { a0, a1, a2, a3, a4 }
    }

    pub fn as_array(&self) -> [f64; 5] {
        [self.a0, self.a1, self.a2, self.a3, self.a4]
    }
}

impl fmt::Display for BasisCoefficients {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(
            f,
            "a0={} a1={} a2={} a3={} a4={}",
            self.a0, self.a1, self.a2, self.a3, self.a4
        )
    }
}

/// Letter counts of the two strings being aligned.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub struct LetterCounts {
    pub na_x: usize,
    pub nb_x: usize,
    pub na_y: usize,
    pub nb_y: usize,
}

impl LetterCounts {
    pub fn of(x: &[Letter], y: &[Letter]) -> Self {
        let na_x = x.iter().filter(|&&l| l == Letter::A).count();
        let na_y = y.iter().filter(|&&l| l == Letter::A).count();
        Self {
            na_x,
            nb_x: x.len() - na_x,
            na_y,
            nb_y: y.len() - na_y,
        }
    }

    /// Total number of `a`s in both strings.
    pub fn total_a(&self) -> usize {
        self.na_x + self.na_y
    }
}

/// Solves `S = a0 S0 + ... + a4 S4` in closed form.
pub fn decompose(s: &ScoringMatrix) -> BasisCoefficients {
    let a0 = (s.saa + 2.0 * s.sab + s.sbb) / 4.0;
    let a1 = (s.saa - s.sbb) / 2.0;
    let a2 = (s.saa - 2.0 * s.sab + s.sbb) / 4.0;
    let a4 = (s.sag + s.sbg) / 2.0 - a0 / 2.0;
    let a3 = (s.sag - s.sbg) / 2.0 - a1 / 2.0;
    BasisCoefficients { a0, a1, a2, a3, a4 }
}

/// Evaluates `a0 S0 + ... + a4 S4` entrywise.
pub fn reconstruct(c: &BasisCoefficients) -> ScoringMatrix {
    [S0, S1, S2, S3, S4]
        .iter()
        .zip(c.as_array())
        .fold(ScoringMatrix::zero(), |acc, (b, a)| acc.plus(&b.scaled(a)))
}

/// Score shared by every alignment of `X` (length `n - k`) against `Y`
/// (length `n`): `a0 (n - k/2) + a1 (sum of h over all letters)` with
/// `h(a) = 1/2`, `h(b) = -1/2`.
pub fn normal_part(c: &BasisCoefficients, counts: &LetterCounts, n: usize, k: usize) -> Result<f64> {
    if k > n {
        return Err(Error::InvalidGapCount(format!("k={k} exceeds n={n}")));
    }
    if counts.na_x + counts.nb_x != n - k || counts.na_y + counts.nb_y != n {
        return Err(Error::InconsistentCounts(format!(
            "|X|={} (want {}), |Y|={} (want {n})",
            counts.na_x + counts.nb_x,
            n - k,
            counts.na_y + counts.nb_y
        )));
    }
    let h_sum = (counts.total_a() as f64 - (counts.nb_x + counts.nb_y) as f64) / 2.0;
    Ok(c.a0 * (n as f64 - k as f64 / 2.0) + c.a1 * h_sum)
}

/// Drops the `S0` and `S1` components.
pub fn residual_scoring(s: &ScoringMatrix) -> ScoringMatrix {
    let c = decompose(s);
    reconstruct(&BasisCoefficients { a0: 0.0, a1: 0.0, ..c })
}

/// A pairwise score usable by the gap-constrained aligner and the walk
/// builder. `Y` is the element type of the second sequence, which may be a
/// letter or (for the product rule) a real number.
pub trait PairScore: Sync {
    type Y: Copy + Send + Sync;

    fn pair(&self, x: Letter, y: Self::Y) -> f64;

    /// Score of aligning `y` with a gap.
    fn gap(&self, y: Self::Y) -> f64;
}

impl PairScore for ScoringMatrix {
    type Y = Letter;

    #[inline]
    fn pair(&self, x: Letter, y: Letter) -> f64 {
        self.letters(x, y)
    }

    #[inline]
    fn gap(&self, y: Letter) -> f64 {
        self.letter_gap(y)
    }
}

/// Product rule `S(x, y) = x * y` with `x` in `{+1, -1}` and real `y`; gaps
/// score zero.
#[derive(Debug, Clone, Copy, Default, PartialEq)]
pub struct ProductScore;

impl PairScore for ProductScore {
    type Y = f64;

    #[inline]
    fn pair(&self, x: Letter, y: f64) -> f64 {
        x.sign() * y
    }

    #[inline]
    fn gap(&self, _y: f64) -> f64 {
        0.0
    }
}
