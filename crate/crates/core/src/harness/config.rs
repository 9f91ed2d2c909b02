//! Experiment configuration read from `key=value` text.

use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::path::Path;

use sha2::{Digest, Sha256};

use crate::brownian::default_grid;
use crate::error::{Error, Result};
use crate::scoring::{ScoringMatrix, S0, S1, S2, S3, S4};
use crate::walks::LetterModel;

/// Pairwise score used by an experiment.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum ScoringChoice {
    Product,
    Matrix(ScoringMatrix),
}

/// How letters are coded as numbers for the product rule.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum LetterCoding {
    /// `a = +1`, `b = -1`.
    PlusMinus,
    /// `a = 1`, `b = 0`.
    ZeroOne,
}

/// Number of gaps as a function of `n`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum GapMode {
    /// Unconstrained alignment (any number of gaps in either string).
    None,
    Fixed(usize),
    /// `k = floor(n^alpha)`.
    Power(f64),
    /// `k = floor(rho n)`.
    Linear(f64),
}

impl GapMode {
    /// Gap count at length `n`; `None` for unconstrained alignment.
    pub fn gaps(&self, n: usize) -> Option<usize> {
        match *self {
            GapMode::None => None,
            GapMode::Fixed(k) => Some(k),
            // the small offset keeps exact powers such as 2^12 at alpha = 1/12
            // from rounding down
            GapMode::Power(a) => Some(((n as f64).powf(a) + 1e-9).floor() as usize),
            GapMode::Linear(r) => Some(((n as f64) * r + 1e-9).floor() as usize),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ExperimentConfig {
    pub letter_model: LetterModel,
    pub scoring: ScoringChoice,
    pub letters: LetterCoding,
    pub gap_mode: GapMode,
    pub n_grid: Vec<usize>,
    pub trials: usize,
    pub master_seed: u64,
    /// Multiplier in the Brownian grid policy `T = factor k ceil(ln^2(k + 2))`.
    pub grid_factor: usize,
    /// Largest admissible `sum_n trials n (k(n) + 1)`.
    pub op_ceiling: f64,
    /// Worker threads; 0 lets the pool decide.
    pub threads: usize,
    /// Constant `C` of the covariance event; calibrated when absent.
    pub c_constant: Option<f64>,
    /// Mesh exponent `beta` for the event diagnostics (`j = floor(n^beta)`).
    pub mesh_beta: f64,
}

impl Default for ExperimentConfig {
    fn default() -> Self {
        Self {
            letter_model: LetterModel::Binary { p_a: 0.5 },
            scoring: ScoringChoice::Product,
            letters: LetterCoding::PlusMinus,
            gap_mode: GapMode::None,
            n_grid: vec![100],
            trials: 100,
            master_seed: 0,
            grid_factor: 64,
            op_ceiling: 1e11,
            threads: 0,
            c_constant: None,
            mesh_beta: 0.5,
        }
    }
}

const KEYS: [&str; 14] = [
    "letter_model",
    "p_a",
    "scoring",
    "letters",
    "gap_mode",
    "n_grid",
    "trials",
    "seed",
    "grid_factor",
    "op_ceiling",
    "threads",
    "c_constant",
    "mesh_beta",
    "scoring_file",
];

/// Splits `key=value` lines, skipping blanks and `#` comments.
pub fn parse_pairs(text: &str) -> Result<Vec<(String, String)>> {
    let mut out = Vec::new();
    for (no, raw) in text.lines().enumerate() {
        let line = raw.split('#').next().unwrap_or("").trim();
        if line.is_empty() {
            continue;
        }
        let (k, v) = line
            .split_once('=')
            .ok_or_else(|| Error::Config(format!("line {}: expected key=value", no + 1)))?;
        out.push((k.trim().to_string(), v.trim().to_string()));
    }
    Ok(out)
}

impl ExperimentConfig {
    /// Parses a configuration file body. Relative scoring-file paths are
    /// resolved against `base_dir`.
    pub fn parse(text: &str, base_dir: Option<&Path>) -> Result<Self> {
        Self::from_pairs(&parse_pairs(text)?, base_dir)
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| Error::Config(format!("{}: {e}", path.display())))?;
        Self::parse(&text, path.parent())
    }

    /// Builds a config from ordered pairs; a later pair overrides an
    /// earlier one with the same key.
    pub fn from_pairs(pairs: &[(String, String)], base_dir: Option<&Path>) -> Result<Self> {
        let mut map = BTreeMap::new();
        for (k, v) in pairs {
            if !KEYS.contains(&k.as_str()) {
                return Err(Error::Config(format!("unknown key `{k}`")));
            }
            map.insert(k.as_str(), v.as_str());
        }
        let mut cfg = ExperimentConfig::default();
        let p_a = match map.get("p_a") {
            Some(v) => parse_num::<f64>("p_a", v)?,
            None => 0.5,
        };
        if !(0.0..=1.0).contains(&p_a) {
            return Err(Error::Config(format!("p_a={p_a} outside [0, 1]")));
        }
        if let Some(v) = map.get("letter_model") {
            cfg.letter_model = match *v {
                "binary" => LetterModel::Binary { p_a },
                "binaryx_normaly" => LetterModel::BinaryXNormalY { p_a },
                other => return Err(Error::Config(format!("unknown letter_model `{other}`"))),
            };
        } else {
            cfg.letter_model = LetterModel::Binary { p_a };
        }
        match (map.get("scoring"), map.get("scoring_file")) {
            (Some(_), Some(_)) => {
                return Err(Error::Config("give either scoring or scoring_file".into()))
            }
            (Some(v), None) => cfg.scoring = parse_scoring(v)?,
            (None, Some(f)) => {
                let path = match base_dir {
                    Some(d) if Path::new(f).is_relative() => d.join(f),
                    _ => Path::new(f).to_path_buf(),
                };
                let text = std::fs::read_to_string(&path)
                    .map_err(|e| Error::Config(format!("{}: {e}", path.display())))?;
                cfg.scoring = ScoringChoice::Matrix(text.parse()?);
            }
            (None, None) => {}
        }
        if let Some(v) = map.get("letters") {
            cfg.letters = match *v {
                "pm" => LetterCoding::PlusMinus,
                "01" => LetterCoding::ZeroOne,
                other => return Err(Error::Config(format!("letters must be pm or 01, got `{other}`"))),
            };
        }
        if let Some(v) = map.get("gap_mode") {
            cfg.gap_mode = parse_gap_mode(v)?;
        }
        if let Some(v) = map.get("n_grid") {
            cfg.n_grid = parse_grid(v)?;
        }
        if let Some(v) = map.get("trials") {
            cfg.trials = parse_num("trials", v)?;
        }
        if let Some(v) = map.get("seed") {
            cfg.master_seed = parse_num("seed", v)?;
        }
        if let Some(v) = map.get("grid_factor") {
            cfg.grid_factor = parse_num("grid_factor", v)?;
        }
        if let Some(v) = map.get("op_ceiling") {
            cfg.op_ceiling = parse_num("op_ceiling", v)?;
        }
        if let Some(v) = map.get("threads") {
            cfg.threads = parse_num("threads", v)?;
        }
        if let Some(v) = map.get("c_constant") {
            cfg.c_constant = Some(parse_num("c_constant", v)?);
        }
        if let Some(v) = map.get("mesh_beta") {
            cfg.mesh_beta = parse_num("mesh_beta", v)?;
        }
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |m: String| Err(Error::Config(m));
        if self.trials < 1 {
            return bad("trials must be >= 1".into());
        }
        if self.n_grid.is_empty() || self.n_grid[0] < 1 {
            return bad("n_grid must hold positive lengths".into());
        }
        if self.n_grid.windows(2).any(|w| w[0] >= w[1]) {
            return bad("n_grid must be strictly increasing".into());
        }
        match self.gap_mode {
            GapMode::Power(a) if !(a > 0.0 && a < 1.0) => return bad(format!("alpha={a} not in (0, 1)")),
            GapMode::Linear(r) if !(r > 0.0 && r < 1.0) => return bad(format!("rho={r} not in (0, 1)")),
            _ => {}
        }
        for &n in &self.n_grid {
            if let Some(k) = self.gap_mode.gaps(n) {
                if k > n {
                    return bad(format!("{k} gaps exceed length {n}"));
                }
            }
        }
        let normal_y = matches!(self.letter_model, LetterModel::BinaryXNormalY { .. });
        if normal_y && matches!(self.scoring, ScoringChoice::Matrix(_)) {
            return bad("real-valued Y letters need scoring=product".into());
        }
        if normal_y && self.gap_mode == GapMode::None {
            return bad("unconstrained alignment needs binary letters".into());
        }
        if self.grid_factor < 1 {
            return bad("grid_factor must be >= 1".into());
        }
        if self.op_ceiling.is_nan() || self.op_ceiling <= 0.0 {
            return bad("op_ceiling must be positive".into());
        }
        if let Some(c) = self.c_constant {
            if !(c >= 0.0 && c.is_finite()) {
                return bad(format!("c_constant={c} must be finite and >= 0"));
            }
        }
        if !(self.mesh_beta > 0.0 && self.mesh_beta < 1.0) {
            return bad(format!("mesh_beta={} not in (0, 1)", self.mesh_beta));
        }
        Ok(())
    }

    /// Brownian grid size at gap count `k` under this config's factor.
    pub fn brownian_grid(&self, k: usize) -> usize {
        default_grid(k) / 64 * self.grid_factor
    }

    /// The matrix actually applied when both strings are letters.
    pub fn letter_matrix(&self) -> ScoringMatrix {
        match (self.scoring, self.letters) {
            (ScoringChoice::Matrix(m), _) => m,
            (ScoringChoice::Product, LetterCoding::PlusMinus) => S2,
            (ScoringChoice::Product, LetterCoding::ZeroOne) => ScoringMatrix::new(1.0, 0.0, 0.0, 0.0, 0.0),
        }
    }

    /// Canonical text listing every setting; the thread count is left out
    /// because it cannot change results.
    pub fn canonical(&self) -> String {
        let mut s = String::new();
        let (model, p) = match self.letter_model {
            LetterModel::Binary { p_a } => ("binary", p_a),
            LetterModel::BinaryXNormalY { p_a } => ("binaryx_normaly", p_a),
        };
        let _ = writeln!(s, "letter_model={model}");
        let _ = writeln!(s, "p_a={p}");
        match self.scoring {
            ScoringChoice::Product => s.push_str("scoring=product\n"),
            ScoringChoice::Matrix(m) => {
                let _ = writeln!(s, "scoring=matrix:{},{},{},{},{}", m.saa, m.sab, m.sbb, m.sag, m.sbg);
            }
        }
        let _ = writeln!(
            s,
            "letters={}",
            match self.letters {
                LetterCoding::PlusMinus => "pm",
                LetterCoding::ZeroOne => "01",
            }
        );
        let gap = match self.gap_mode {
            GapMode::None => "none".to_string(),
            GapMode::Fixed(k) => format!("fixed:{k}"),
            GapMode::Power(a) => format!("power:{a}"),
            GapMode::Linear(r) => format!("linear:{r}"),
        };
        let _ = writeln!(s, "gap_mode={gap}");
        let grid: Vec<String> = self.n_grid.iter().map(|n| n.to_string()).collect();
        let _ = writeln!(s, "n_grid={}", grid.join(","));
        let _ = writeln!(s, "trials={}", self.trials);
        let _ = writeln!(s, "seed={}", self.master_seed);
        let _ = writeln!(s, "grid_factor={}", self.grid_factor);
        let _ = writeln!(s, "op_ceiling={}", self.op_ceiling);
        if let Some(c) = self.c_constant {
            let _ = writeln!(s, "c_constant={c}");
        }
        let _ = writeln!(s, "mesh_beta={}", self.mesh_beta);
        s
    }

    /// First 16 hex digits of the SHA-256 of [`Self::canonical`].
    pub fn hash(&self) -> String {
        let digest = Sha256::digest(self.canonical().as_bytes());
        digest.iter().take(8).map(|b| format!("{b:02x}")).collect()
    }
}

fn parse_num<T: std::str::FromStr>(key: &str, v: &str) -> Result<T>
where
    T::Err: std::fmt::Display,
{
    v.parse::<T>()
        .map_err(|e| Error::Config(format!("{key}: cannot parse `{v}`: {e}")))
}

fn parse_scoring(v: &str) -> Result<ScoringChoice> {
    let m = match v.to_ascii_lowercase().as_str() {
        "product" => return Ok(ScoringChoice::Product),
        "lcs" => ScoringMatrix::lcs(),
        "s0" => S0,
        "s1" => S1,
        "s2" => S2,
        "s3" => S3,
        "s4" => S4,
        other => {
            let Some(list) = other.strip_prefix("matrix:") else {
                return Err(Error::Config(format!(
                    "scoring must be product, lcs, s0..s4 or matrix:saa,sab,sbb,sag,sbg; got `{v}`"
                )));
            };
            let vals: Vec<f64> = list
                .split(',')
                .map(|x| parse_num("scoring", x.trim()))
                .collect::<Result<_>>()?;
            if vals.len() != 5 || vals.iter().any(|x| !x.is_finite()) {
                return Err(Error::Config("matrix: needs five finite numbers".into()));
            }
            ScoringMatrix::new(vals[0], vals[1], vals[2], vals[3], vals[4])
        }
    };
    Ok(ScoringChoice::Matrix(m))
}

pub fn parse_gap_mode(v: &str) -> Result<GapMode> {
    if v == "none" {
        return Ok(GapMode::None);
    }
    let (kind, arg) = v
        .split_once(':')
        .ok_or_else(|| Error::Config(format!("gap_mode `{v}`: expected none, fixed:K, power:A or linear:R")))?;
    match kind {
        "fixed" => Ok(GapMode::Fixed(parse_num("gap_mode", arg)?)),
        "power" => Ok(GapMode::Power(parse_num("gap_mode", arg)?)),
        "linear" => Ok(GapMode::Linear(parse_num("gap_mode", arg)?)),
        _ => Err(Error::Config(format!("unknown gap_mode `{kind}`"))),
    }
}

/// Either an explicit list `100,200,400` or `log:LO:HI:COUNT`, which rounds
/// `COUNT` log-spaced values to integers and drops duplicates.
pub fn parse_grid(v: &str) -> Result<Vec<usize>> {
    if let Some(spec) = v.strip_prefix("log:") {
        let parts: Vec<&str> = spec.split(':').collect();
        if parts.len() != 3 {
            return Err(Error::Config("n_grid log form is log:LO:HI:COUNT".into()));
        }
        let lo: f64 = parse_num("n_grid", parts[0])?;
        let hi: f64 = parse_num("n_grid", parts[1])?;
        let count: usize = parse_num("n_grid", parts[2])?;
        if !(lo >= 1.0 && hi >= lo) || count < 1 {
            return Err(Error::Config("n_grid log form needs 1 <= LO <= HI, COUNT >= 1".into()));
        }
        let mut out: Vec<usize> = (0..count)
            .map(|i| {
                let t = if count == 1 { 0.0 } else { i as f64 / (count - 1) as f64 };
                (lo.ln() + t * (hi.ln() - lo.ln())).exp().round() as usize
            })
            .collect();
        out.dedup();
        return Ok(out);
    }
    v.split(',').map(|x| parse_num("n_grid", x.trim())).collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn full_config_parses() {
        let text = "\
# a comment
letter_model = binaryx_normaly
p_a = 0.5
scoring = product
gap_mode = power:0.1
n_grid = 100, 1000, 10000
trials = 50
seed = 7
threads = 2
";
        let c = ExperimentConfig::parse(text, None).unwrap();
        assert_eq!(c.letter_model, LetterModel::BinaryXNormalY { p_a: 0.5 });
        assert_eq!(c.gap_mode, GapMode::Power(0.1));
        assert_eq!(c.n_grid, vec![100, 1000, 10000]);
        assert_eq!((c.trials, c.master_seed, c.threads), (50, 7, 2));
    }

    #[test]
    fn unknown_and_malformed_keys() {
        assert!(matches!(ExperimentConfig::parse("bogus=1", None), Err(Error::Config(_))));
        assert!(ExperimentConfig::parse("trials", None).is_err());
        assert!(ExperimentConfig::parse("trials=x", None).is_err());
        assert!(ExperimentConfig::parse("trials=0", None).is_err());
        assert!(ExperimentConfig::parse("n_grid=10,5", None).is_err());
        assert!(ExperimentConfig::parse("gap_mode=power:1.5", None).is_err());
        assert!(ExperimentConfig::parse("gap_mode=linear:0", None).is_err());
        assert!(ExperimentConfig::parse("gap_mode=fixed:20\nn_grid=10", None).is_err());
        assert!(ExperimentConfig::parse("letters=xy", None).is_err());
        assert!(ExperimentConfig::parse("letter_model=binaryx_normaly\nscoring=lcs\ngap_mode=fixed:1", None).is_err());
        assert!(ExperimentConfig::parse("letter_model=binaryx_normaly", None).is_err());
        assert!(ExperimentConfig::parse("mesh_beta=1", None).is_err());
    }

    #[test]
    fn later_pairs_override() {
        let pairs = vec![
            ("trials".to_string(), "5".to_string()),
            ("trials".to_string(), "9".to_string()),
        ];
        assert_eq!(ExperimentConfig::from_pairs(&pairs, None).unwrap().trials, 9);
    }

    #[test]
    fn scoring_forms() {
        assert_eq!(parse_scoring("S1").unwrap(), ScoringChoice::Matrix(S1));
        assert_eq!(
            parse_scoring("matrix:1,0,1,-1,-1").unwrap(),
            ScoringChoice::Matrix(ScoringMatrix::new(1.0, 0.0, 1.0, -1.0, -1.0))
        );
        assert!(parse_scoring("matrix:1,2").is_err());
        assert!(parse_scoring("blosum").is_err());
    }

    #[test]
    fn scoring_file_is_resolved_relative_to_config() {
        let dir = std::env::temp_dir().join(format!("gapwalk-cfg-{}", std::process::id()));
        std::fs::create_dir_all(&dir).unwrap();
        std::fs::write(dir.join("m.txt"), "saa=2\nsab=0\nsbb=2\nsag=-1\nsbg=-1\n").unwrap();
        let c = ExperimentConfig::parse("scoring_file=m.txt", Some(&dir)).unwrap();
        assert_eq!(c.scoring, ScoringChoice::Matrix(ScoringMatrix::new(2.0, 0.0, 2.0, -1.0, -1.0)));
        assert!(ExperimentConfig::parse("scoring_file=missing.txt", Some(&dir)).is_err());
        std::fs::remove_dir_all(&dir).unwrap();
    }

    #[test]
    fn log_grid() {
        assert_eq!(parse_grid("log:100:10000:3").unwrap(), vec![100, 1000, 10000]);
        assert_eq!(parse_grid("log:1:2:5").unwrap(), vec![1, 2]);
        assert!(parse_grid("log:0:10:3").is_err());
    }

    #[test]
    fn gap_counts() {
        assert_eq!(GapMode::Power(0.1).gaps(100_000), Some(3));
        assert_eq!(GapMode::Power(1.0 / 12.0).gaps(4096), Some(2));
        assert_eq!(GapMode::Linear(0.05).gaps(1000), Some(50));
        assert_eq!(GapMode::Fixed(20).gaps(10), Some(20));
        assert_eq!(GapMode::None.gaps(10), None);
    }

    #[test]
    fn canonical_round_trip_and_hash() {
        let c = ExperimentConfig::parse("scoring=matrix:1,0.5,1,-1,-1\ngap_mode=linear:0.05\nn_grid=log:100:1000:4\nc_constant=2.5", None)
            .unwrap();
        let again = ExperimentConfig::parse(&c.canonical(), None).unwrap();
        assert_eq!(c, again);
        assert_eq!(c.hash(), again.hash());
        assert_eq!(c.hash().len(), 16);
        let mut d = c.clone();
        d.threads = 3;
        assert_eq!(c.hash(), d.hash());
        d.trials += 1;
        assert_ne!(c.hash(), d.hash());
    }

    #[test]
    fn zero_one_product_matrix() {
        let c = ExperimentConfig::parse("letters=01", None).unwrap();
        assert_eq!(c.letter_matrix(), ScoringMatrix::new(1.0, 0.0, 0.0, 0.0, 0.0));
        assert_eq!(ExperimentConfig::default().letter_matrix(), S2);
    }
}
