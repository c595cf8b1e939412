//! Growth rate and asymptotic entropy: exact values on balls, their
//! submultiplicative envelopes, and the upper sequences driven by the
//! enumeration of trivial words.

use std::cmp::Ordering;
use std::collections::HashMap;

use num_bigint::BigUint;
use num_rational::BigRational;
use num_traits::Pow;
use serde::Serialize;

use crate::bounds::RootBound;
use crate::cayley::{build_ball, walk_counts};
use crate::dehn::WordProblemStrategy;
use crate::enumeration::{entropy_of_counts, DeltaPairs, QuotientApprox};
use crate::error::{Error, Result};
use crate::interval::Interval;
use crate::presentation::Presentation;

/// Both reports only certify upper bounds on the limits.
pub const CERTIFICATION: &str = "upper certified only";

/// Largest `Σ_{j≤n} |S|^j` used by default for the quotient sequences.
pub const DEFAULT_QUOTIENT_WORDS: usize = 1 << 20;

/// Largest `n ≤ n_max` whose word set `S^{≤n}` has at most `limit` words.
pub fn quotient_length(symmetric_size: usize, n_max: usize, limit: usize) -> usize {
    let mut total = 1usize;
    let mut layer = 1usize;
    let mut n = 0;
    while n < n_max {
        layer = layer.saturating_mul(symmetric_size);
        total = total.saturating_add(layer);
        if total > limit {
            break;
        }
        n += 1;
    }
    n
}

/// Word-set quotient `S^{≤n}/∼_k`, refined by the pairs of [`DeltaPairs`].
#[derive(Clone, Debug)]
pub struct QuotientSequence {
    pairs: DeltaPairs,
    approx: QuotientApprox,
}

impl QuotientSequence {
    pub fn new(p: &Presentation, n: usize) -> Result<Self> {
        Ok(QuotientSequence {
            pairs: DeltaPairs::new(p),
            approx: QuotientApprox::for_presentation(p, n)?,
        })
    }

    /// Number of pairs consumed, the index `k`.
    pub fn k(&self) -> usize {
        self.approx.consumed()
    }

    pub fn max_len(&self) -> usize {
        self.approx.max_len()
    }

    pub fn approx(&self) -> &QuotientApprox {
        &self.approx
    }

    /// Consumes up to `count` further pairs.
    pub fn advance(&mut self, count: usize) {
        for _ in 0..count {
            match self.pairs.next() {
                Some((v, w)) => {
                    self.approx.refine(&v, &w);
                }
                None => break,
            }
        }
    }

    /// `β_k(j)` for `j = 0..=n`.
    pub fn class_counts(&self) -> Vec<usize> {
        let n = self.max_len();
        let mut first_len: HashMap<usize, usize> = HashMap::new();
        let mut offset = 0usize;
        let mut layer = 1usize;
        let size = self.approx.symmetric_size();
        for len in 0..=n {
            for x in offset..offset + layer {
                first_len.entry(self.approx.root_of(x)).or_insert(len);
            }
            offset += layer;
            layer *= size;
        }
        let mut per_len = vec![0usize; n + 1];
        for &l in first_len.values() {
            per_len[l] += 1;
        }
        per_len
            .iter()
            .scan(0, |acc, &c| {
                *acc += c;
                Some(*acc)
            })
            .collect()
    }

    /// `y_k = min_{1≤j≤n} β_k(j)^(1/j)`.
    pub fn growth_bound(&self) -> RootBound {
        let counts = self.class_counts();
        envelope_of_counts(counts.iter().map(|&c| BigUint::from(c as u64)).collect::<Vec<_>>().as_slice())
            .expect("n ≥ 1")
            .1
    }

    /// `H_k^j / j` for `j = 1..=n`.
    pub fn entropy_terms(&self) -> Vec<Interval> {
        (1..=self.max_len())
            .map(|j| self.approx.entropy_upper_term(j).scale(1.0 / j as f64))
            .collect()
    }

    /// `min_{1≤j≤n} H_k^j / j`.
    pub fn entropy_bound(&self) -> Interval {
        min_interval(&self.entropy_terms())
    }
}

fn min_interval(v: &[Interval]) -> Interval {
    v.iter().copied().reduce(Interval::min).expect("nonempty")
}

/// `(argmin, min_{n≥1} β(n)^(1/n))` for counts `β(0), β(1), ...`.
fn envelope_of_counts(beta: &[BigUint]) -> Option<(usize, RootBound)> {
    let mut best: Option<(usize, RootBound)> = None;
    for (n, b) in beta.iter().enumerate().skip(1) {
        let r = RootBound::new(BigRational::from_integer(b.clone().into()), n as u32)
            .expect("nonnegative");
        if best.as_ref().is_none_or(|(_, m)| r.compare(m) == Ordering::Less) {
            best = Some((n, r));
        }
    }
    best
}

#[derive(Clone, Debug, Serialize)]
pub struct GrowthPoint {
    pub n: usize,
    pub beta: String,
    pub root: RootBound,
}

#[derive(Clone, Debug, Serialize)]
pub struct SequencePoint<T> {
    pub k: usize,
    pub value: T,
}

#[derive(Clone, Debug, Serialize)]
pub struct GrowthReport {
    pub certification: &'static str,
    pub exact: Vec<GrowthPoint>,
    pub upper_envelope: RootBound,
    pub envelope_at: usize,
    pub quotient_length: usize,
    pub quotient_sequence: Vec<SequencePoint<RootBound>>,
}

#[derive(Clone, Debug, Serialize)]
pub struct EntropyPoint {
    pub n: usize,
    pub entropy: Interval,
}

#[derive(Clone, Debug, Serialize)]
pub struct EntropyReport {
    pub certification: &'static str,
    pub exact: Vec<EntropyPoint>,
    pub upper_envelope: Interval,
    pub quotient_length: usize,
    pub quotient_sequence: Vec<SequencePoint<Interval>>,
}

/// How far to run the quotient sequences: `checkpoints` snapshots, each
/// after `pairs_per_checkpoint` more pairs.
#[derive(Clone, Copy, Debug)]
pub struct SequencePlan {
    pub quotient_words: usize,
    pub checkpoints: usize,
    pub pairs_per_checkpoint: usize,
}

impl Default for SequencePlan {
    fn default() -> Self {
        SequencePlan {
            quotient_words: DEFAULT_QUOTIENT_WORDS,
            checkpoints: 8,
            pairs_per_checkpoint: 2048,
        }
    }
}

fn check_n(n_max: usize) -> Result<()> {
    if n_max == 0 {
        return Err(Error::InvalidArgument("n must be at least 1".into()));
    }
    Ok(())
}

/// Exact `β(n) = |B(e,n)|` for `n = 0..=n_max`.
pub fn exact_growth(s: &WordProblemStrategy, n_max: usize) -> Result<Vec<BigUint>> {
    let ball = build_ball(s, n_max)?;
    Ok((0..=n_max)
        .map(|n| BigUint::from(ball.ball_size(n) as u64))
        .collect())
}

/// Exact `H(X_n)` (natural log) for `n = 0..=n_max`.
pub fn exact_entropy(s: &WordProblemStrategy, n_max: usize) -> Result<Vec<Interval>> {
    let ball = build_ball(s, n_max)?;
    let table = walk_counts(&ball, n_max);
    let size = BigUint::from(ball.symmetric_size() as u64);
    (0..=n_max)
        .map(|n| {
            let dist = table.distribution(n)?;
            Ok(entropy_of_counts(dist.iter().cloned(), &Pow::pow(&size, n)))
        })
        .collect()
}

fn quotient_for(p: &Presentation, n_max: usize, plan: &SequencePlan) -> Result<QuotientSequence> {
    let len = quotient_length(p.alphabet().symmetric_size(), n_max, plan.quotient_words).max(1);
    QuotientSequence::new(p, len)
}

pub fn growth_report(p: &Presentation, n_max: usize, plan: &SequencePlan) -> Result<GrowthReport> {
    check_n(n_max)?;
    let s = WordProblemStrategy::for_presentation(p)?;
    let beta = exact_growth(&s, n_max)?;
    let (envelope_at, upper_envelope) = envelope_of_counts(&beta).expect("n_max ≥ 1");
    let exact = beta
        .iter()
        .enumerate()
        .skip(1)
        .map(|(n, b)| GrowthPoint {
            n,
            beta: b.to_string(),
            root: RootBound::new(BigRational::from_integer(b.clone().into()), n as u32)
                .expect("nonnegative"),
        })
        .collect();
    let mut q = quotient_for(p, n_max, plan)?;
    let mut seq = Vec::with_capacity(plan.checkpoints);
    for _ in 0..plan.checkpoints {
        q.advance(plan.pairs_per_checkpoint);
        seq.push(SequencePoint {
            k: q.k(),
            value: q.growth_bound(),
        });
    }
    Ok(GrowthReport {
        certification: CERTIFICATION,
        exact,
        upper_envelope,
        envelope_at,
        quotient_length: q.max_len(),
        quotient_sequence: seq,
    })
}

pub fn entropy_report(p: &Presentation, n_max: usize, plan: &SequencePlan) -> Result<EntropyReport> {
    check_n(n_max)?;
    let s = WordProblemStrategy::for_presentation(p)?;
    let h = exact_entropy(&s, n_max)?;
    let per_step: Vec<Interval> = h
        .iter()
        .enumerate()
        .skip(1)
        .map(|(n, v)| v.scale(1.0 / n as f64))
        .collect();
    let upper_envelope = min_interval(&per_step);
    let exact = h
        .into_iter()
        .enumerate()
        .skip(1)
        .map(|(n, entropy)| EntropyPoint { n, entropy })
        .collect();
    let mut q = quotient_for(p, n_max, plan)?;
    let mut seq = Vec::with_capacity(plan.checkpoints);
    for _ in 0..plan.checkpoints {
        q.advance(plan.pairs_per_checkpoint);
        seq.push(SequencePoint {
            k: q.k(),
            value: q.entropy_bound(),
        });
    }
    Ok(EntropyReport {
        certification: CERTIFICATION,
        exact,
        upper_envelope,
        quotient_length: q.max_len(),
        quotient_sequence: seq,
    })
}
