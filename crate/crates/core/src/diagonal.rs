//! Desk-scale diagonalization over the groups `⟨a,b | r_i, i ∈ I⟩` with
//! `r_i = (a^i b^i)^7`: pick indices one at a time so that each new group's
//! spectral radius is certifiably far from a list of target reals.

use std::collections::hash_map::Entry;
use std::collections::HashMap;

use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{Pow, Signed};
use serde::Serialize;

use crate::bounds::{CertifiedInterval, Direction};
use crate::cayley::ReturnSeries;
use crate::error::{Error, Result};
use crate::presentation::{is_c16, Presentation};
use crate::ser::{big_ratio, parse_decimal, parse_rational};
use crate::words::{Alphabet, Letter, Word};

/// `(a^i b^i)^7` over the alphabet `a, b`.
pub fn family_relator(i: usize) -> Result<Word> {
    if i == 0 {
        return Err(Error::InvalidArgument("relator index must be at least 1".into()));
    }
    let (a, b) = (Letter::new(0, true), Letter::new(1, true));
    let mut block = vec![a; i];
    block.extend(std::iter::repeat_n(b, i));
    Ok(Word::from_letters(block).pow(7))
}

/// `⟨a,b | r_i, i ∈ indices⟩`.
pub fn family_presentation(indices: &[usize]) -> Result<Presentation> {
    let rels = indices
        .iter()
        .map(|&i| family_relator(i))
        .collect::<Result<Vec<_>>>()?;
    Presentation::new(Alphabet::standard(2), rels)
}

/// A real `x` given by rationals `a_m ↗ x` and `b_m ↘ x`.
pub trait ComputableRealOracle {
    fn lower(&self, m: usize) -> BigRational;
    fn upper(&self, m: usize) -> BigRational;
    fn describe(&self) -> String;
}

/// The constant sequences `a_m = b_m = q`.
#[derive(Clone, Debug)]
pub struct ConstantOracle(pub BigRational);

impl ComputableRealOracle for ConstantOracle {
    fn lower(&self, _m: usize) -> BigRational {
        self.0.clone()
    }

    fn upper(&self, _m: usize) -> BigRational {
        self.0.clone()
    }

    fn describe(&self) -> String {
        crate::ser::rational_string(&self.0)
    }
}

/// A decimal string read to `m` digits: `a_m = ⌊10^m x⌋/10^m`,
/// `b_m = ⌈10^m x⌉/10^m`.
#[derive(Clone, Debug)]
pub struct DecimalOracle {
    text: String,
    value: BigRational,
}

impl DecimalOracle {
    pub fn parse(text: &str) -> Result<Self> {
        let value = parse_decimal(text)
            .ok_or_else(|| Error::InvalidArgument(format!("not a decimal: {text:?}")))?;
        Ok(DecimalOracle {
            text: text.trim().to_string(),
            value,
        })
    }

    fn scaled(&self, m: usize) -> (BigRational, BigRational) {
        let scale = BigRational::from_integer(Pow::pow(BigInt::from(10), m));
        let x = &self.value * &scale;
        (x.floor() / &scale, x.ceil() / scale)
    }
}

impl ComputableRealOracle for DecimalOracle {
    fn lower(&self, m: usize) -> BigRational {
        self.scaled(m).0
    }

    fn upper(&self, m: usize) -> BigRational {
        self.scaled(m).1
    }

    fn describe(&self) -> String {
        self.text.clone()
    }
}

/// A target given as `p/q` is a constant oracle; otherwise a decimal one.
pub fn parse_target(text: &str) -> Result<Box<dyn ComputableRealOracle + Send + Sync>> {
    if text.contains('/') {
        let q = parse_rational(text)
            .ok_or_else(|| Error::InvalidArgument(format!("not a rational: {text:?}")))?;
        Ok(Box::new(ConstantOracle(q)))
    } else {
        Ok(Box::new(DecimalOracle::parse(text)?))
    }
}

/// Targets in `(0.6, 1.4)` need envelopes too tight for small budgets.
pub fn in_hard_band(x: &BigRational) -> bool {
    let lo = BigRational::new(3.into(), 5.into());
    let hi = BigRational::new(7.into(), 5.into());
    lo < *x && *x < hi
}

/// Vertex cap for the balls of candidate groups.
pub const DIAGONAL_VERTEX_LIMIT: usize = 1 << 20;

/// Decimals kept for the rational endpoints of a ρ-interval.
pub const ENDPOINT_DIGITS: u32 = 30;

#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct TargetCheck {
    pub target: usize,
    #[serde(serialize_with = "big_ratio")]
    pub enclosure_lo: BigRational,
    #[serde(serialize_with = "big_ratio")]
    pub enclosure_hi: BigRational,
    #[serde(serialize_with = "big_ratio")]
    pub gap: BigRational,
}

#[derive(Clone, Debug, Serialize)]
pub struct StepCertificate {
    /// Relator indices of the certified group, `I_k ∪ {ℓ}`.
    pub indices: Vec<usize>,
    pub ell: usize,
    /// Oracle precision.
    pub m: usize,
    /// Walk depth: returns `p(2j)` for `j ≤ n` were used.
    pub n: usize,
    pub rho: CertifiedInterval,
    #[serde(serialize_with = "big_ratio")]
    pub rho_lo: BigRational,
    #[serde(serialize_with = "big_ratio")]
    pub rho_hi: BigRational,
    pub checks: Vec<TargetCheck>,
}

#[derive(Clone, Debug, Default, Serialize)]
pub struct DiagonalState {
    pub indices: Vec<usize>,
    #[serde(serialize_with = "ser_rationals")]
    pub epsilons: Vec<BigRational>,
    pub certificates: Vec<StepCertificate>,
}

fn ser_rationals<S: serde::Serializer>(v: &[BigRational], s: S) -> std::result::Result<S::Ok, S::Error> {
    use serde::ser::SerializeSeq;
    let mut seq = s.serialize_seq(Some(v.len()))?;
    for r in v {
        seq.serialize_element(&crate::ser::rational_string(r))?;
    }
    seq.end()
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
#[serde(tag = "status", rename_all = "snake_case")]
pub enum StepOutcome {
    Accepted { ell: usize, triples: usize },
    Undecided { budget: usize },
}

/// `(ℓ − i_k − 1, m, n)` triples in order of their sum, lowest `ℓ` first.
pub fn dovetail(budget: usize) -> impl Iterator<Item = (usize, usize, usize)> {
    (2usize..)
        .flat_map(|s| {
            (0..=s - 2).flat_map(move |l| (1..s - l).map(move |m| (l, m, s - l - m)))
        })
        .take(budget)
}

/// Gap between `[lo, hi]` and `[a, b]`, or `None` when they meet.
fn gap(lo: &BigRational, hi: &BigRational, a: &BigRational, b: &BigRational) -> Option<BigRational> {
    if hi < a {
        Some(a - hi)
    } else if lo > b {
        Some(lo - b)
    } else {
        None
    }
}

fn interval_for(series: &mut ReturnSeries, n: usize) -> Result<(CertifiedInterval, BigRational, BigRational)> {
    let returns = series.returns_up_to(n)?;
    let rho = CertifiedInterval::from_returns(&returns, true);
    let lo = rho.lo.rational_bound(ENDPOINT_DIGITS, Direction::Down);
    let hi = rho.hi.rational_bound(ENDPOINT_DIGITS, Direction::Up);
    Ok((rho, lo, hi))
}

/// Checks of `[lo, hi]` against targets `1..=k+1` at precision `m`;
/// `None` unless every old gap exceeds its `ε` and the last is positive.
fn target_checks(
    lo: &BigRational,
    hi: &BigRational,
    targets: &[Box<dyn ComputableRealOracle + Send + Sync>],
    epsilons: &[BigRational],
    m: usize,
) -> Option<Vec<TargetCheck>> {
    let k = epsilons.len();
    let mut checks = Vec::with_capacity(k + 1);
    for (j, t) in targets.iter().take(k + 1).enumerate() {
        let (a, b) = (t.lower(m), t.upper(m));
        let g = gap(lo, hi, &a, &b)?;
        if j < k && g <= epsilons[j] {
            return None;
        }
        checks.push(TargetCheck {
            target: j + 1,
            enclosure_lo: a,
            enclosure_hi: b,
            gap: g,
        });
    }
    Some(checks)
}

/// One diagonalization step: finds `ℓ > i_k` whose group is separated from
/// targets `1..=k+1`, within `budget` dovetailed `(ℓ, m, n)` triples.
pub fn diagonal_step(
    state: &mut DiagonalState,
    targets: &[Box<dyn ComputableRealOracle + Send + Sync>],
    budget: usize,
) -> Result<StepOutcome> {
    let k = state.indices.len();
    if targets.len() < k + 1 {
        return Err(Error::InvalidArgument(format!(
            "step {} needs {} targets",
            k + 1,
            k + 1
        )));
    }
    let base = state.indices.last().copied().unwrap_or(0);
    // Per candidate: its series (None if not C'(1/6)) and the first depth
    // that hit the vertex limit.
    let mut candidates: HashMap<usize, (Option<ReturnSeries>, usize)> = HashMap::new();
    for (t, (l_off, m, n)) in dovetail(budget).enumerate() {
        let ell = base + 1 + l_off;
        let (series, too_deep) = match candidates.entry(ell) {
            Entry::Occupied(e) => e.into_mut(),
            Entry::Vacant(v) => {
                let mut idx = state.indices.clone();
                idx.push(ell);
                let p = family_presentation(&idx)?;
                let series = if is_c16(&p) {
                    Some(ReturnSeries::with_limit(&p, DIAGONAL_VERTEX_LIMIT)?)
                } else {
                    None
                };
                v.insert((series, usize::MAX))
            }
        };
        let Some(series) = series.as_mut() else {
            continue;
        };
        if n >= *too_deep {
            continue;
        }
        let (rho, lo, hi) = match interval_for(series, n) {
            Ok(v) => v,
            Err(Error::VertexLimit(_)) => {
                *too_deep = n;
                continue;
            }
            Err(e) => return Err(e),
        };
        let Some(checks) = target_checks(&lo, &hi, targets, &state.epsilons, m) else {
            continue;
        };
        let eps = &checks[k].gap / BigRational::from_integer(2.into());
        let mut indices = state.indices.clone();
        indices.push(ell);
        state.indices.push(ell);
        state.epsilons.push(eps);
        state.certificates.push(StepCertificate {
            indices,
            ell,
            m,
            n,
            rho,
            rho_lo: lo,
            rho_hi: hi,
            checks,
        });
        return Ok(StepOutcome::Accepted { ell, triples: t + 1 });
    }
    Ok(StepOutcome::Undecided { budget })
}

/// Recomputes every certificate from its `(indices, m, n)` data and checks
/// that the stored intervals, gaps and `ε` values are reproduced exactly.
pub fn replay(
    state: &DiagonalState,
    targets: &[Box<dyn ComputableRealOracle + Send + Sync>],
) -> Result<bool> {
    if state.certificates.len() != state.indices.len()
        || state.epsilons.len() != state.indices.len()
    {
        return Ok(false);
    }
    for (step, cert) in state.certificates.iter().enumerate() {
        if cert.indices[..] != state.indices[..=step] || cert.ell != state.indices[step] {
            return Ok(false);
        }
        let p = family_presentation(&cert.indices)?;
        if !is_c16(&p) {
            return Ok(false);
        }
        let (_, lo, hi) = interval_for(&mut ReturnSeries::with_limit(&p, DIAGONAL_VERTEX_LIMIT)?, cert.n)?;
        if lo != cert.rho_lo || hi != cert.rho_hi {
            return Ok(false);
        }
        let Some(checks) = target_checks(&lo, &hi, targets, &state.epsilons[..step], cert.m) else {
            return Ok(false);
        };
        if checks != cert.checks {
            return Ok(false);
        }
        let eps = &checks[step].gap / BigRational::from_integer(2.into());
        if eps != state.epsilons[step] || !eps.is_positive() {
            return Ok(false);
        }
    }
    Ok(true)
}
