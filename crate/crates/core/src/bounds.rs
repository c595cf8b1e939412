//! Exact root bounds `q^(1/m)` and certified spectral-radius intervals.
//!
//! For a C'(1/6) presentation, the n-step return probability sandwiches ρ:
//!
//! ```text
//! p(2n)^(1/2n)  ≤  ρ  ≤  ((10n+1)^6 · p(2n))^(1/2n)
//! ```
//!
//! Both sides are algebraic numbers of the form `q^(1/m)` with `q`
//! rational, which compare exactly by cross-powering.

use std::cmp::Ordering;
use std::fmt;

use num_bigint::{BigInt, BigUint};
use num_integer::Integer;
use num_rational::BigRational;
use num_traits::{One, Pow, Signed, ToPrimitive, Zero};
use serde::ser::SerializeStruct;
use serde::{Serialize, Serializer};

use crate::cayley::ReturnSeries;
use crate::error::{Error, Result};
use crate::interval::Interval;
use crate::presentation::{is_c16, Presentation};

/// The real number `q^(1/m)`, `q ≥ 0` rational, `m ≥ 1`, kept canonical:
/// `q` in lowest terms and `m` minimal.
#[derive(Clone, PartialEq, Eq, Hash)]
pub struct RootBound {
    q: BigRational,
    m: u32,
}

/// Rounding direction for decimal output.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Direction {
    Down,
    Up,
}

fn to_biguint(x: &BigInt) -> BigUint {
    x.to_biguint().expect("nonnegative")
}

/// Exact `k`-th root of `x` if it exists.
fn exact_root(x: &BigUint, k: u32) -> Option<BigUint> {
    let r = x.nth_root(k);
    (Pow::pow(&r, k) == *x).then_some(r)
}

fn divisors_desc(m: u32) -> Vec<u32> {
    let mut d: Vec<u32> = (1..=m).filter(|d| m % d == 0).collect();
    d.reverse();
    d
}

impl RootBound {
    pub fn new(q: BigRational, m: u32) -> Result<Self> {
        if m == 0 {
            return Err(Error::InvalidArgument("root index must be positive".into()));
        }
        if q.is_negative() {
            return Err(Error::InvalidArgument("radicand must be nonnegative".into()));
        }
        Ok(Self::canonical(q, m))
    }

    pub fn from_ints(num: u64, den: u64, m: u32) -> Self {
        Self::new(BigRational::new(num.into(), den.into()), m).expect("valid root bound")
    }

    pub fn integer(k: u64) -> Self {
        Self::from_ints(k, 1, 1)
    }

    pub fn one() -> Self {
        Self::integer(1)
    }

    pub fn zero() -> Self {
        Self::integer(0)
    }

    fn canonical(q: BigRational, m: u32) -> Self {
        if q.is_zero() || q.is_one() {
            return RootBound { q, m: 1 };
        }
        let num = to_biguint(q.numer());
        let den = to_biguint(q.denom());
        for d in divisors_desc(m) {
            if d == 1 {
                break;
            }
            if let (Some(n), Some(dd)) = (exact_root(&num, d), exact_root(&den, d)) {
                return RootBound {
                    q: BigRational::new(n.into(), dd.into()),
                    m: m / d,
                };
            }
        }
        RootBound { q, m }
    }

    pub fn radicand(&self) -> &BigRational {
        &self.q
    }

    pub fn index(&self) -> u32 {
        self.m
    }

    fn num(&self) -> BigUint {
        to_biguint(self.q.numer())
    }

    fn den(&self) -> BigUint {
        to_biguint(self.q.denom())
    }

    /// Enclosure of `ln(self)`; `None` for zero.
    pub fn ln_interval(&self) -> Option<Interval> {
        if self.q.is_zero() {
            return None;
        }
        Some(Interval::ln_ratio(&self.num(), &self.den()).div(Interval::point(self.m as f64)))
    }

    /// Exact comparison. Logarithmic enclosures settle most cases; ties and
    /// near-ties fall back to integer cross-powering.
    pub fn compare(&self, other: &RootBound) -> Ordering {
        match (self.q.is_zero(), other.q.is_zero()) {
            (true, true) => return Ordering::Equal,
            (true, false) => return Ordering::Less,
            (false, true) => return Ordering::Greater,
            _ => {}
        }
        if let (Some(a), Some(b)) = (self.ln_interval(), other.ln_interval()) {
            if a.certainly_lt(&b) {
                return Ordering::Less;
            }
            if b.certainly_lt(&a) {
                return Ordering::Greater;
            }
        }
        self.compare_exact(other)
    }

    /// Comparison by cross-powering only.
    pub fn compare_exact(&self, other: &RootBound) -> Ordering {
        let l = self.m.lcm(&other.m);
        let (ea, eb) = (l / self.m, l / other.m);
        let lhs = Pow::pow(self.num(), ea) * Pow::pow(other.den(), eb);
        let rhs = Pow::pow(other.num(), eb) * Pow::pow(self.den(), ea);
        lhs.cmp(&rhs)
    }

    /// Exact product `q_a^(1/m_a) · q_b^(1/m_b)`.
    pub fn mul(&self, other: &RootBound) -> RootBound {
        let l = self.m.lcm(&other.m);
        let qa: BigRational = Pow::pow(&self.q, l / self.m);
        let qb: BigRational = Pow::pow(&other.q, l / other.m);
        Self::canonical(qa * qb, l)
    }

    pub fn min(self, other: RootBound) -> RootBound {
        if other.compare(&self) == Ordering::Less {
            other
        } else {
            self
        }
    }

    pub fn max(self, other: RootBound) -> RootBound {
        if other.compare(&self) == Ordering::Greater {
            other
        } else {
            self
        }
    }

    /// Directed-rounded value scaled by `10^digits`, as an integer.
    fn scaled_root(&self, digits: u32, dir: Direction) -> BigUint {
        let scale = Pow::pow(BigUint::from(10u32), digits as u64 * self.m as u64);
        let n = self.num() * scale;
        let d = self.den();
        let (quot, _) = n.div_rem(&d);
        let k = quot.nth_root(self.m);
        match dir {
            Direction::Down => k,
            Direction::Up => {
                if Pow::pow(&k, self.m) * &d == n {
                    k
                } else {
                    k + 1u32
                }
            }
        }
    }

    /// Rational lower (`Down`) or upper (`Up`) bound with `digits` decimals.
    pub fn rational_bound(&self, digits: u32, dir: Direction) -> BigRational {
        let k = self.scaled_root(digits, dir);
        BigRational::new(k.into(), Pow::pow(BigInt::from(10), digits))
    }

    /// Directed-rounded decimal string with exactly `digits` decimals.
    pub fn to_decimal(&self, digits: u32, dir: Direction) -> Result<String> {
        if digits > 50 {
            return Err(Error::InvalidArgument("at most 50 digits".into()));
        }
        Ok(format_scaled(&self.scaled_root(digits, dir), digits))
    }

    /// Nearest `f64` (no rounding guarantee); for display and estimates.
    pub fn approx(&self) -> f64 {
        self.ln_interval().map(|i| i.mid().exp()).unwrap_or(0.0)
    }
}

/// Formats `k / 10^digits`.
pub fn format_scaled(k: &BigUint, digits: u32) -> String {
    let s = k.to_string();
    let digits = digits as usize;
    if digits == 0 {
        return s;
    }
    let padded = if s.len() <= digits {
        format!("{}{}", "0".repeat(digits + 1 - s.len()), s)
    } else {
        s
    };
    let (int, frac) = padded.split_at(padded.len() - digits);
    format!("{int}.{frac}")
}

/// Directed decimal for a nonnegative rational.
pub fn rational_to_decimal(q: &BigRational, digits: u32, dir: Direction) -> String {
    let neg = q.is_negative();
    let a = q.abs();
    let scaled = a * BigRational::from_integer(Pow::pow(BigInt::from(10), digits));
    // Rounding a negative number down means rounding its magnitude up.
    let toward_up = (dir == Direction::Up) != neg;
    let k = if toward_up { scaled.ceil() } else { scaled.floor() };
    let s = format_scaled(&to_biguint(&k.to_integer()), digits);
    if neg && !k.is_zero() {
        format!("-{s}")
    } else {
        s
    }
}

impl PartialOrd for RootBound {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

impl Ord for RootBound {
    fn cmp(&self, other: &Self) -> Ordering {
        self.compare(other)
    }
}

impl fmt::Debug for RootBound {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "({})^(1/{}) ≈ {:.6}", self.q, self.m, self.approx())
    }
}

impl fmt::Display for RootBound {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        fmt::Debug::fmt(self, f)
    }
}

/// Decimal digits used in JSON renderings.
pub const JSON_DIGITS: u32 = 15;

impl Serialize for RootBound {
    fn serialize<S: Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        let mut st = s.serialize_struct("RootBound", 4)?;
        st.serialize_field("q", &crate::ser::rational_string(&self.q))?;
        st.serialize_field("m", &self.m)?;
        st.serialize_field(
            "decimal_down",
            &format_scaled(&self.scaled_root(JSON_DIGITS, Direction::Down), JSON_DIGITS),
        )?;
        st.serialize_field(
            "decimal_up",
            &format_scaled(&self.scaled_root(JSON_DIGITS, Direction::Up), JSON_DIGITS),
        )?;
        st.end()
    }
}

pub fn compare(a: &RootBound, b: &RootBound) -> Ordering {
    a.compare(b)
}

fn n_u32(n: usize) -> u32 {
    u32::try_from(n).expect("step count fits in u32")
}

/// `p(2n)^(1/2n)`, a lower bound for ρ.
pub fn rho_lower(p2n: &BigRational, n: usize) -> RootBound {
    assert!(n >= 1);
    RootBound::new(p2n.clone(), 2 * n_u32(n)).expect("probability is nonnegative")
}

/// `P(n) = (10n + 1)^3`, the Rapid Decay polynomial of C'(1/6) groups.
pub fn rapid_decay_polynomial(n: usize) -> BigUint {
    Pow::pow(BigUint::from(10 * n as u64 + 1), 3u32)
}

/// `(P(n)^2 · p(2n))^(1/2n)`, an upper bound for ρ on C'(1/6) presentations.
pub fn rho_upper(p2n: &BigRational, n: usize) -> RootBound {
    assert!(n >= 1);
    let p = rapid_decay_polynomial(n);
    let factor = BigRational::from_integer(BigInt::from(&p * &p));
    RootBound::new(factor * p2n, 2 * n_u32(n)).expect("probability is nonnegative")
}

/// `(10n+1)^(3/n)`: the exact ratio `rho_upper / rho_lower`.
pub fn sandwich_ratio(n: usize) -> RootBound {
    RootBound::new(
        BigRational::from_integer(BigInt::from(rapid_decay_polynomial(n))),
        n_u32(n),
    )
    .expect("positive")
}

/// Which inequality produced an endpoint.
#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum BoundSource {
    /// `p(2n)^(1/2n) ≤ ρ`.
    ReturnProbability { n: usize },
    /// `ρ ≤ (P(n)^2 p(2n))^(1/2n)`.
    RapidDecay { n: usize },
    /// `ρ ≤ 1` (every return probability is at most 1).
    Trivial,
    /// Lower semi-computation from enumerated trivial words.
    Enumeration { words: usize },
}

#[derive(Clone, Debug, Serialize)]
pub struct Witness {
    pub n: usize,
    #[serde(serialize_with = "crate::ser::big_ratio")]
    pub p2n: BigRational,
}

/// Certified enclosure `lo ≤ ρ ≤ hi`.
#[derive(Clone, Debug, Serialize)]
pub struct CertifiedInterval {
    pub lo: RootBound,
    pub hi: RootBound,
    pub lo_source: BoundSource,
    pub hi_source: BoundSource,
    pub witness: Vec<Witness>,
}

impl CertifiedInterval {
    /// Envelopes over the given `p(2n)` values, `n = 1, 2, ...`.
    /// With `upper` false only the trivial upper bound 1 is used.
    pub fn from_returns(returns: &[BigRational], upper: bool) -> Self {
        let mut lo = RootBound::zero();
        let mut lo_source = BoundSource::Trivial;
        let mut hi = RootBound::one();
        let mut hi_source = BoundSource::Trivial;
        let mut witness = Vec::new();
        for (i, p) in returns.iter().enumerate() {
            let n = i + 1;
            let l = rho_lower(p, n);
            if l.compare(&lo) == Ordering::Greater {
                lo = l;
                lo_source = BoundSource::ReturnProbability { n };
            }
            if upper {
                let u = rho_upper(p, n);
                if u.compare(&hi) == Ordering::Less {
                    hi = u;
                    hi_source = BoundSource::RapidDecay { n };
                }
            }
            witness.push(Witness { n, p2n: p.clone() });
        }
        CertifiedInterval {
            lo,
            hi,
            lo_source,
            hi_source,
            witness,
        }
    }
}

/// Certified interval for ρ(G,S) from exact return probabilities up to
/// `n_max`. Requires a C'(1/6) presentation.
pub fn rho_interval(p: &Presentation, n_max: usize) -> Result<CertifiedInterval> {
    if !is_c16(p) {
        return Err(Error::NotSmallCancellation(
            "the upper bound needs a C'(1/6) presentation".into(),
        ));
    }
    let mut series = ReturnSeries::new(p)?;
    let returns = series.returns_up_to(n_max)?;
    Ok(CertifiedInterval::from_returns(&returns, true))
}

/// Rational number to `f64` (approximate).
pub fn approx_rational(q: &BigRational) -> f64 {
    q.to_f64().unwrap_or(f64::NAN)
}
