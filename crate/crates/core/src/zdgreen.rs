//! Green function of ℤ^d with the cubical generators `{±1}^d` at `z = 1`,
//! and the spectral radius `ρ = 1 − 1/(2θ)` for `d ≥ 5`.
//!
//! Terms `t_n = (C(2n,n)/4^n)^d` are summed exactly. The tail uses
//! `C(2n,n)/4^n ≤ (πn)^(−1/2)` and an integral comparison:
//!
//! ```text
//! Σ_{n>N} t_n ≤ π^(−d/2) · 2/(d−2) · N^(1−d/2),   with π ≥ 157/50.
//! ```

use num_bigint::{BigInt, BigUint};
use num_integer::Integer;
use num_rational::BigRational;
use num_traits::{One, Pow, Zero};
use serde::Serialize;

use crate::bounds::{rational_to_decimal, Direction};
use crate::error::{Error, Result};

/// Lower rational bound for π used in the tail estimate.
pub fn pi_lower() -> BigRational {
    BigRational::new(157.into(), 50.into())
}

/// `C(2n, n)` for `n = 0..=n_max` by the recurrence
/// `C(2n+2, n+1) = C(2n, n) · 2(2n+1) / (n+1)`.
pub fn central_binomials(n_max: usize) -> Vec<BigUint> {
    let mut out = Vec::with_capacity(n_max + 1);
    let mut c = BigUint::one();
    out.push(c.clone());
    for n in 0..n_max as u64 {
        c = c * BigUint::from(2 * (2 * n + 1)) / BigUint::from(n + 1);
        out.push(c.clone());
    }
    out
}

fn rat(n: impl Into<BigInt>, d: impl Into<BigInt>) -> BigRational {
    BigRational::new(n.into(), d.into())
}

/// `p(2n) = (C(2n,n)/4^n)^d`, the return probability of the cubical walk.
pub fn cube_p2n(d: usize, n: usize) -> Result<BigRational> {
    if d == 0 {
        return Err(Error::InvalidArgument("dimension must be positive".into()));
    }
    let c = central_binomials(n).pop().expect("nonempty");
    let base = rat(c, Pow::pow(BigUint::from(4u32), n));
    Ok(Pow::pow(base, d))
}

/// `⌈√x⌉` on the grid `2^(−bits)`, an upper bound for `√x`.
fn sqrt_up(x: &BigRational, bits: usize) -> BigRational {
    let scale = BigUint::one() << (2 * bits);
    let num = x.numer().to_biguint().expect("nonnegative") * scale;
    let den = x.denom().to_biguint().expect("nonnegative");
    let (q, r) = num.div_rem(&den);
    let mut s = q.sqrt();
    if &s * &s != q || !r.is_zero() {
        s += 1u32;
    }
    rat(s, BigUint::one() << bits)
}

/// Upper bound for `Σ_{n>N} t_n`.
pub fn tail_bound(d: usize, n: usize) -> BigRational {
    assert!(d >= 5 && n >= 1);
    // ((50/157)^d · N^(2−d))^(1/2) · 2/(d−2)
    let inside = Pow::pow(pi_lower().recip(), d) / rat(Pow::pow(BigUint::from(n), d - 2), 1);
    sqrt_up(&inside, 96) * rat(2, d as u64 - 2)
}

/// Certified enclosure of `θ = Σ_n t_n` and of `ρ(ℤ^d, cube)`.
#[derive(Clone, Debug, Serialize)]
pub struct GreenEvaluation {
    pub d: usize,
    /// Truncation index `N`.
    pub n: usize,
    #[serde(skip)]
    pub partial: BigRational,
    #[serde(skip)]
    pub tail_hi: BigRational,
    pub theta_lo: String,
    pub theta_hi: String,
    #[serde(skip)]
    pub rho_lo: BigRational,
    #[serde(skip)]
    pub rho_hi: BigRational,
    pub rho_lo_decimal: String,
    pub rho_hi_decimal: String,
}

/// Decimal digits kept for the outward-rounded ρ endpoints.
pub const RHO_DIGITS: u32 = 40;

fn check_dimension(d: usize) -> Result<()> {
    if d < 5 {
        return Err(Error::InvalidArgument(format!(
            "dimension {d} < 5 is not supported"
        )));
    }
    Ok(())
}

/// Smallest `N ≥ 1` whose tail bound is at most `width`.
pub fn truncation_for(d: usize, width: &BigRational) -> Result<usize> {
    check_dimension(d)?;
    if *width <= BigRational::zero() {
        return Err(Error::InvalidArgument("width must be positive".into()));
    }
    let mut hi = 1usize;
    while tail_bound(d, hi) > *width {
        hi *= 2;
    }
    let mut lo = hi / 2;
    if lo == 0 {
        return Ok(1);
    }
    // tail_bound(lo) > width ≥ tail_bound(hi)
    while hi - lo > 1 {
        let mid = (lo + hi) / 2;
        if tail_bound(d, mid) > *width {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    Ok(hi)
}

/// Exact `Σ_{n=0}^{N} (C(2n,n)/4^n)^d`.
pub fn partial_sum(d: usize, n_max: usize) -> BigRational {
    // Σ_n C(2n,n)^d 4^{d(N−n)} / 4^{dN}, accumulated Horner-style.
    let shift = 2 * d;
    let mut acc = BigUint::zero();
    let mut c = BigUint::one();
    for n in 0..=n_max as u64 {
        if n > 0 {
            c = c * BigUint::from(2 * (2 * n - 1)) / BigUint::from(n);
        }
        acc = (acc << shift) + Pow::pow(&c, d);
    }
    rat(acc, BigUint::one() << (shift * n_max))
}

fn rho_of(theta: &BigRational) -> BigRational {
    BigRational::one() - (rat(2, 1) * theta).recip()
}

/// Evaluates `θ` to within `width` and maps it to `ρ = 1 − 1/(2θ)`.
pub fn theta(d: usize, width: &BigRational) -> Result<GreenEvaluation> {
    let n = truncation_for(d, width)?;
    let partial = partial_sum(d, n);
    let tail_hi = tail_bound(d, n);
    let hi = &partial + &tail_hi;
    let digits = RHO_DIGITS;
    let rho_lo_exact = rho_of(&partial);
    let rho_hi_exact = rho_of(&hi);
    let rho_lo_decimal = rational_to_decimal(&rho_lo_exact, digits, Direction::Down);
    let rho_hi_decimal = rational_to_decimal(&rho_hi_exact, digits, Direction::Up);
    let parse = |s: &str| crate::ser::parse_decimal(s).expect("decimal");
    Ok(GreenEvaluation {
        d,
        n,
        theta_lo: rational_to_decimal(&partial, digits, Direction::Down),
        theta_hi: rational_to_decimal(&hi, digits, Direction::Up),
        rho_lo: parse(&rho_lo_decimal),
        rho_hi: parse(&rho_hi_decimal),
        rho_lo_decimal,
        rho_hi_decimal,
        partial,
        tail_hi,
    })
}

/// Certified interval for `ρ(ℤ^d, cube)` of width at most `width`.
pub fn rho_zd_cube(d: usize, width: &BigRational) -> Result<(BigRational, BigRational)> {
    let g = theta(d, width)?;
    Ok((g.rho_lo, g.rho_hi))
}
