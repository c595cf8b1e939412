//! Word problem for C'(1/6) groups by two interleaved semi-decisions:
//! (A) enumerate trivial words until `w` shows up, and (B) look for
//! `ρ(G) < ρ(G/⟨⟨w⟩⟩)`, which forces `w ≠ e`.
//!
//! Under the promise that every nontrivial `w` changes the spectral
//! radius, one of the two processes stops.

use std::cmp::Ordering;

use serde::Serialize;

use crate::bounds::{rho_lower, rho_upper, RootBound};
use crate::cayley::ReturnSeries;
use crate::enumeration::{LowerSequence, TrivialWordStream};
use crate::error::{Error, Result};
use crate::presentation::{is_c16, Presentation};
use crate::words::Word;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
pub enum Process {
    A,
    B,
}

/// `[A, B, A, B, ...]` of length `budget`.
pub fn interleave_schedule(budget: usize) -> Vec<Process> {
    (0..budget)
        .map(|i| if i % 2 == 0 { Process::A } else { Process::B })
        .collect()
}

/// Whether the caller asserts the spectral-gap promise. Verdicts are sound
/// either way; only termination depends on it.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize)]
pub struct Promise {
    pub declared: bool,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum LowerSource {
    /// `p_Q(2k)^(1/2k)` from exact returns in a C'(1/6) quotient.
    QuotientReturns,
    /// The lower sequence from enumerated trivial words of the quotient.
    TrivialWords,
}

#[derive(Clone, Debug, Serialize)]
#[serde(tag = "verdict", rename_all = "snake_case")]
pub enum DecisionOutcome {
    Trivial {
        /// Position of the witness in the trivial-word stream (1-based).
        witness_index: usize,
        witness: String,
    },
    Nontrivial {
        k: usize,
        x_k: RootBound,
        y_k: RootBound,
        y_source: LowerSource,
    },
    Undecided {
        budget: usize,
    },
}

#[derive(Clone, Debug, Serialize)]
pub struct Decision {
    pub outcome: DecisionOutcome,
    pub promise: Promise,
    pub steps: usize,
}

/// Upper envelope `x_k = min(1, min_{j≤k} ρ_upper(p_G(2j), j))`.
struct UpperSide {
    series: ReturnSeries,
    value: RootBound,
    frozen: bool,
}

impl UpperSide {
    fn step(&mut self, k: usize) -> Result<()> {
        if self.frozen {
            return Ok(());
        }
        match self.series.p2n(k) {
            Ok(p) => {
                self.value = self.value.clone().min(rho_upper(&p, k));
                Ok(())
            }
            Err(Error::VertexLimit(_)) => {
                self.frozen = true;
                Ok(())
            }
            Err(e) => Err(e),
        }
    }
}

/// Lower bound `y_k` for the spectral radius of the quotient.
enum LowerSide {
    Returns {
        series: ReturnSeries,
        value: RootBound,
        frozen: bool,
    },
    Words(LowerSequence),
}

impl LowerSide {
    fn new(quotient: &Presentation) -> Result<Self> {
        if is_c16(quotient) {
            Ok(LowerSide::Returns {
                series: ReturnSeries::new(quotient)?,
                value: RootBound::zero(),
                frozen: false,
            })
        } else {
            Ok(LowerSide::Words(LowerSequence::new(quotient)))
        }
    }

    fn step(&mut self, k: usize) -> Result<()> {
        match self {
            LowerSide::Returns {
                series,
                value,
                frozen,
            } => {
                if *frozen {
                    return Ok(());
                }
                match series.p2n(k) {
                    Ok(p) => {
                        *value = value.clone().max(rho_lower(&p, k));
                        Ok(())
                    }
                    Err(Error::VertexLimit(_)) => {
                        *frozen = true;
                        Ok(())
                    }
                    Err(e) => Err(e),
                }
            }
            LowerSide::Words(seq) => {
                seq.step();
                Ok(())
            }
        }
    }

    fn value(&self) -> &RootBound {
        match self {
            LowerSide::Returns { value, .. } => value,
            LowerSide::Words(seq) => seq.value(),
        }
    }

    fn source(&self) -> LowerSource {
        match self {
            LowerSide::Returns { .. } => LowerSource::QuotientReturns,
            LowerSide::Words(_) => LowerSource::TrivialWords,
        }
    }
}

/// Runs `budget` steps of the schedule on `w` in the C'(1/6) group `p`.
pub fn decide_trivial(p: &Presentation, w: &Word, budget: usize, promise: Promise) -> Result<Decision> {
    if !is_c16(p) {
        return Err(Error::NotSmallCancellation(
            "the decider needs a C'(1/6) presentation".into(),
        ));
    }
    if !p.alphabet().contains_word(w) {
        return Err(Error::AlphabetMismatch);
    }
    let target = w.free_reduce();
    let mut stream = TrivialWordStream::new(p);
    let mut upper: Option<UpperSide> = None;
    let mut lower: Option<LowerSide> = None;
    let mut k = 0;
    for (i, process) in interleave_schedule(budget).into_iter().enumerate() {
        let steps = i + 1;
        match process {
            Process::A => {
                let hit = if target.is_empty() {
                    Some((0, w.clone()))
                } else {
                    let t = stream.next_trivial().expect("nonempty alphabet");
                    (t.free_reduce() == target).then(|| (stream.emitted().len(), t))
                };
                if let Some((witness_index, t)) = hit {
                    return Ok(Decision {
                        outcome: DecisionOutcome::Trivial {
                            witness_index,
                            witness: p.alphabet().format(&t),
                        },
                        promise,
                        steps,
                    });
                }
            }
            Process::B => {
                k += 1;
                if upper.is_none() {
                    upper = Some(UpperSide {
                        series: ReturnSeries::new(p)?,
                        value: RootBound::one(),
                        frozen: false,
                    });
                    lower = Some(LowerSide::new(&p.with_relator(&target)?)?);
                }
                let (up, low) = (upper.as_mut().expect("set"), lower.as_mut().expect("set"));
                up.step(k)?;
                low.step(k)?;
                if up.value.compare(low.value()) == Ordering::Less {
                    return Ok(Decision {
                        outcome: DecisionOutcome::Nontrivial {
                            k,
                            x_k: up.value.clone(),
                            y_k: low.value().clone(),
                            y_source: low.source(),
                        },
                        promise,
                        steps,
                    });
                }
            }
        }
    }
    Ok(Decision {
        outcome: DecisionOutcome::Undecided { budget },
        promise,
        steps: budget,
    })
}
