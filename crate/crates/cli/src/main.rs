use std::fmt::Write as _;
use std::fs;
use std::io::Write as _;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};

use gapwalk_core::align::{align_full, align_kgap_witness};
use gapwalk_core::brownian::{tw_rescale, TwReference};
use gapwalk_core::harness::{
    brownian_trials, parse_pairs, run_event_schedule, run_experiment, trial_rng, ExperimentConfig, TrialRng,
};
use gapwalk_core::scoring::{decompose, ProductScore, ScoringMatrix};
use gapwalk_core::stats::{loglog_fit, read_stddev_csv, write_cdf_csv};
use gapwalk_core::walks::{build_walks, empirical_increment_cov, sample_letters, sample_normals, ExtendedLetters};
use gapwalk_core::{Error, LetterString};

#[derive(Parser)]
#[command(name = "gapwalk", version, about = "Gap-constrained alignment scores and their fluctuations")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Print the basis coefficients a0..a4 of a scoring matrix
    Decompose {
        #[arg(long)]
        matrix: PathBuf,
    },
    /// Optimal alignment score of two letter strings
    Align(AlignArgs),
    /// Walk increments or block covariances as `i,j,value` CSV
    Walks(WalksArgs),
    /// Sample the discretised Brownian functional
    Brownian(BrownianArgs),
    /// Run a Monte Carlo experiment over a grid of lengths
    Simulate(RunArgs),
    /// Pass rates of the coupling events along a length grid
    Diagnose(RunArgs),
    /// Fit log(stddev) against log(n)
    Exponent {
        #[arg(long = "in")]
        input: PathBuf,
    },
    /// Export the Tracy-Widom reference table as `x,F` CSV
    TwTable {
        #[arg(long)]
        out: Option<PathBuf>,
    },
}

#[derive(Args)]
struct AlignArgs {
    /// First string, e.g. `abba`
    #[arg(long, conflicts_with = "x_file")]
    x: Option<String>,
    #[arg(long)]
    x_file: Option<PathBuf>,
    /// Second string
    #[arg(long, conflicts_with = "y_file")]
    y: Option<String>,
    #[arg(long)]
    y_file: Option<PathBuf>,
    /// Scoring matrix file (5 key=value lines)
    #[arg(long)]
    matrix: PathBuf,
    /// Exactly k gaps, all against letters of Y (requires |X| = |Y| - k)
    #[arg(long)]
    k: Option<usize>,
    /// Also print the optimal gap positions (or aligned pairs)
    #[arg(long)]
    witness: bool,
}

#[derive(Clone, Copy, ValueEnum)]
enum WalksMode {
    Increments,
    Cov,
}

#[derive(Args)]
struct WalksArgs {
    #[arg(long)]
    k: usize,
    /// Letters X_1..X_n; sampled when absent
    #[arg(long)]
    x: Option<String>,
    /// Letters X_0, X_-1, ..., X_{1-k}; sampled when absent
    #[arg(long)]
    x_ext: Option<String>,
    /// Letters Y_1..Y_n (scored with --matrix); Y is standard normal under
    /// the product rule when absent
    #[arg(long)]
    y: Option<String>,
    #[arg(long)]
    matrix: Option<PathBuf>,
    /// Length when letters are sampled
    #[arg(long)]
    n: Option<usize>,
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long, default_value_t = 0.5)]
    p_a: f64,
    #[arg(long, value_enum, default_value_t = WalksMode::Increments)]
    mode: WalksMode,
    #[arg(long, default_value_t = 0)]
    block_start: usize,
    /// Block length for --mode cov (defaults to the whole walk)
    #[arg(long)]
    block_len: Option<usize>,
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct BrownianArgs {
    #[arg(long)]
    k: usize,
    /// Grid steps; defaults to the policy 64 k ceil(ln^2(k + 2))
    #[arg(long)]
    grid: Option<usize>,
    #[arg(long, default_value_t = 1000)]
    trials: usize,
    #[arg(long)]
    seed: u64,
    #[arg(long, default_value_t = 0)]
    threads: usize,
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct RunArgs {
    /// Configuration file of key=value lines
    #[arg(long)]
    config: Option<PathBuf>,
    #[arg(long)]
    seed: u64,
    #[arg(long)]
    trials: Option<usize>,
    #[arg(long)]
    threads: Option<usize>,
    /// Length grid, `100,200` or `log:LO:HI:COUNT`
    #[arg(long)]
    n_grid: Option<String>,
    /// `none`, `fixed:K`, `power:A` or `linear:R`
    #[arg(long)]
    gap_mode: Option<String>,
    /// Any other configuration key, as key=value (repeatable)
    #[arg(long = "set", value_name = "KEY=VALUE")]
    set: Vec<String>,
    #[arg(long)]
    out: Option<PathBuf>,
}

fn usage(msg: impl Into<String>) -> Error {
    Error::InvalidArgument(msg.into())
}

fn read(path: &Path) -> Result<String, Error> {
    fs::read_to_string(path).map_err(|e| usage(format!("{}: {e}", path.display())))
}

fn emit(out: &Option<PathBuf>, text: &str) -> Result<(), Error> {
    match out {
        Some(p) => fs::write(p, text).map_err(|e| usage(format!("{}: {e}", p.display()))),
        None => {
            let mut stdout = std::io::stdout().lock();
            stdout
                .write_all(text.as_bytes())
                .map_err(|e| usage(format!("stdout: {e}")))
        }
    }
}

fn letters_arg(inline: &Option<String>, file: &Option<PathBuf>, name: &str) -> Result<LetterString, Error> {
    let text = match (inline, file) {
        (Some(s), None) => s.clone(),
        (None, Some(p)) => read(p)?,
        _ => return Err(usage(format!("give --{name} or --{name}-file"))),
    };
    text.split_whitespace().collect::<String>().parse()
}

fn matrix_arg(path: &Path) -> Result<ScoringMatrix, Error> {
    read(path)?.parse()
}

fn cmd_align(a: &AlignArgs) -> Result<String, Error> {
    let x = letters_arg(&a.x, &a.x_file, "x")?;
    let y = letters_arg(&a.y, &a.y_file, "y")?;
    let s = matrix_arg(&a.matrix)?;
    let mut out = String::new();
    match a.k {
        Some(k) => {
            let r = align_kgap_witness(&x, &y, &s, k)?;
            let _ = writeln!(out, "score={}", r.score);
            if a.witness {
                let _ = writeln!(out, "gaps={}", r.gaps().expect("gap witness"));
            }
        }
        None => {
            let r = align_full(&x, &y, &s);
            let _ = writeln!(out, "score={}", r.score);
            if a.witness {
                let pairs: Vec<String> = r
                    .pairs()
                    .expect("pair witness")
                    .iter()
                    .map(|(i, j)| format!("{i}:{j}"))
                    .collect();
                let _ = writeln!(out, "pairs={}", pairs.join(","));
            }
        }
    }
    Ok(out)
}

fn seeded<'a>(rng: &'a mut Option<TrialRng>, what: &str) -> Result<&'a mut TrialRng, Error> {
    rng.as_mut()
        .ok_or_else(|| usage(format!("--seed is required to sample {what}")))
}

fn cmd_walks(a: &WalksArgs) -> Result<String, Error> {
    let mut rng = a.seed.map(|s| trial_rng(s, 0, 0));
    let body = match &a.x {
        Some(s) => s.parse::<LetterString>()?.0,
        None => {
            let n = a.n.ok_or_else(|| usage("give --x or --n"))?;
            sample_letters(seeded(&mut rng, "X")?, n, a.p_a)
        }
    };
    let ext = match &a.x_ext {
        Some(s) => s.parse::<LetterString>()?.0,
        None => sample_letters(seeded(&mut rng, "the X extension")?, a.k, a.p_a),
    };
    let n = body.len();
    let x = ExtendedLetters::new(ext, body);
    let walks = match (&a.y, &a.matrix) {
        (Some(y), Some(m)) => build_walks(&x, &y.parse::<LetterString>()?, &matrix_arg(m)?, a.k)?,
        (Some(_), None) => return Err(usage("letter Y needs --matrix")),
        (None, Some(_)) => return Err(usage("--matrix needs --y; without --y the product rule is used")),
        (None, None) => {
            let y = sample_normals(seeded(&mut rng, "Y")?, n);
            build_walks(&x, &y, &ProductScore, a.k)?
        }
    };
    let mut out = String::from("i,j,value\n");
    match a.mode {
        WalksMode::Increments => {
            for j in 1..=walks.n() {
                for i in 1..=walks.dim() {
                    let _ = writeln!(out, "{i},{j},{}", walks.increment(j, i));
                }
            }
        }
        WalksMode::Cov => {
            let len = a.block_len.unwrap_or(n.saturating_sub(a.block_start));
            let c = empirical_increment_cov(&walks, a.block_start, len)?;
            for i in 0..c.dim() {
                for j in 0..c.dim() {
                    let _ = writeln!(out, "{},{},{}", i + 1, j + 1, c.matrix()[(i, j)]);
                }
            }
        }
    }
    Ok(out)
}

fn cmd_brownian(a: &BrownianArgs) -> Result<String, Error> {
    if a.trials == 0 {
        return Err(usage("--trials must be positive"));
    }
    let steps = a.grid.unwrap_or_else(|| gapwalk_core::brownian::default_grid(a.k));
    if steps == 0 {
        return Err(usage("--grid must be positive"));
    }
    let values = brownian_trials(a.k, steps, a.trials, a.seed, a.threads)?;
    let mut out = String::from("trial,lk,rescaled\n");
    for (t, v) in values.iter().enumerate() {
        let r = tw_rescale(*v, a.k).map_or_else(|_| "NaN".to_string(), |x| x.to_string());
        let _ = writeln!(out, "{t},{v},{r}");
    }
    Ok(out)
}

fn run_config(a: &RunArgs) -> Result<ExperimentConfig, Error> {
    let mut pairs = Vec::new();
    let base = a.config.as_deref().and_then(Path::parent).map(Path::to_path_buf);
    if let Some(p) = &a.config {
        pairs = parse_pairs(&read(p)?)?;
    }
    for s in &a.set {
        let (k, v) = s
            .split_once('=')
            .ok_or_else(|| usage(format!("--set expects KEY=VALUE, got `{s}`")))?;
        pairs.push((k.trim().to_string(), v.trim().to_string()));
    }
    let mut push = |k: &str, v: String| pairs.push((k.to_string(), v));
    push("seed", a.seed.to_string());
    if let Some(t) = a.trials {
        push("trials", t.to_string());
    }
    if let Some(t) = a.threads {
        push("threads", t.to_string());
    }
    if let Some(g) = &a.n_grid {
        push("n_grid", g.clone());
    }
    if let Some(g) = &a.gap_mode {
        push("gap_mode", g.clone());
    }
    ExperimentConfig::from_pairs(&pairs, base.as_deref())
}

fn cmd_simulate(a: &RunArgs) -> Result<String, Error> {
    let cfg = run_config(a)?;
    let report = run_experiment(&cfg)?;
    eprintln!("{}", report.provenance());
    if let Some(f) = report.fit {
        eprintln!("slope={} stderr={} r2={}", f.slope, f.slope_stderr, f.r2);
    }
    Ok(report.to_csv())
}

fn cmd_diagnose(a: &RunArgs) -> Result<String, Error> {
    let cfg = run_config(a)?;
    let report = run_event_schedule(&cfg)?;
    eprintln!(
        "config_hash={} seed={} c={} calibrated={}",
        cfg.hash(),
        cfg.master_seed,
        report.c_constant,
        report.calibrated
    );
    Ok(report.to_csv())
}

fn cmd_exponent(input: &Path) -> Result<String, Error> {
    let fit = loglog_fit(&read_stddev_csv(&read(input)?)?)?;
    Ok(format!(
        "slope={} intercept={} r2={} points={} stderr={}\n",
        fit.slope, fit.intercept, fit.r2, fit.point_count, fit.slope_stderr
    ))
}

fn run(cli: Cli) -> Result<(), Error> {
    match cli.command {
        Command::Decompose { matrix } => emit(&None, &format!("{}\n", decompose(&matrix_arg(&matrix)?))),
        Command::Align(a) => emit(&None, &cmd_align(&a)?),
        Command::Walks(a) => emit(&a.out, &cmd_walks(&a)?),
        Command::Brownian(a) => emit(&a.out, &cmd_brownian(&a)?),
        Command::Simulate(a) => emit(&a.out, &cmd_simulate(&a)?),
        Command::Diagnose(a) => emit(&a.out, &cmd_diagnose(&a)?),
        Command::Exponent { input } => emit(&None, &cmd_exponent(&input)?),
        Command::TwTable { out } => emit(&out, &write_cdf_csv(TwReference::gue().table())),
    }
}

fn exit_code(e: &Error) -> u8 {
    match e {
        Error::Budget(..) => 3,
        Error::NotPositiveDefinite(_) | Error::Numeric(_) | Error::EmptySample => 4,
        _ => 2,
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(exit_code(&e))
        }
    }
}
