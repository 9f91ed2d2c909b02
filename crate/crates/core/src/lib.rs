//! Gap-constrained sequence alignment, its random-walk and Brownian
//! representations, and Monte Carlo experiments on score fluctuations.

pub mod align;
pub mod brownian;
pub mod error;
pub mod harness;
pub mod scoring;
pub mod stats;
pub mod walks;

pub use align::{GapAlignment, LetterString, ScoreResult, Witness};
pub use brownian::{BrownianPaths, TwReference};
pub use error::{Error, Result};
pub use harness::{ExperimentConfig, ExperimentReport};
pub use scoring::{BasisCoefficients, Letter, LetterCounts, ScoringMatrix};
pub use stats::{ExponentFit, SummaryStats};
pub use walks::{CovMatrix, WalkEnsemble};
