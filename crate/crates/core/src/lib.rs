//! Certified spectral-radius, growth and entropy bounds for finitely
//! presented groups.

pub mod asymptotics;
pub mod bounds;
pub mod cayley;
pub mod decider;
pub mod dehn;
pub mod diagonal;
pub mod enumeration;
pub mod error;
pub mod interval;
pub mod presentation;
pub mod ser;
pub mod words;
pub mod zdgreen;

pub use bounds::{CertifiedInterval, Direction, RootBound};
pub use cayley::{build_ball, walk_counts, BallGraph, ReturnSeries, WalkTable};
pub use dehn::{DehnSolver, Triviality, WordProblemStrategy};
pub use error::{Error, Result};
pub use interval::Interval;
pub use num_rational::{BigRational, Ratio};
pub use presentation::{CancellationReport, Presentation};
pub use words::{parse_word, Alphabet, Letter, Word};
