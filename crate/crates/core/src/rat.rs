//! Exact rational scalars.
//!
//! All arithmetic in the crate is exact: rationals are ratios of
//! arbitrary-precision integers, always reduced, denominator positive
//! (`num::BigRational` guarantees the canonical form). Serialized form is
//! `"p/q"`, or `"p"` when the denominator is one.

use num::bigint::BigInt;
use num::rational::BigRational;
use num::traits::{One, Signed, Zero};

pub type Rat = BigRational;

/// `p/q` as an exact rational. Panics on a zero denominator.
pub fn rat(p: i64, q: i64) -> Rat {
    assert!(q != 0, "zero denominator");
    BigRational::new(BigInt::from(p), BigInt::from(q))
}

/// Integer as a rational.
pub fn rat_i(p: i64) -> Rat {
    BigRational::from_integer(BigInt::from(p))
}

pub fn is_zero(x: &Rat) -> bool {
    x.is_zero()
}

/// Canonical display form: `p/q`, or just `p` for integers.
pub fn fmt_rat(x: &Rat) -> String {
    if x.denom().is_one() {
        x.numer().to_string()
    } else {
        format!("{}/{}", x.numer(), x.denom())
    }
}

/// Parse `p`, `-p`, or `p/q`.
pub fn parse_rat(s: &str) -> Option<Rat> {
    let s = s.trim();
    match s.split_once('/') {
        Some((p, q)) => {
            let p: BigInt = p.trim().parse().ok()?;
            let q: BigInt = q.trim().parse().ok()?;
            if q.is_zero() {
                return None;
            }
            Some(BigRational::new(p, q))
        }
        None => {
            let p: BigInt = s.parse().ok()?;
            Some(BigRational::from_integer(p))
        }
    }
}

/// Binomial coefficient `n choose k` for integer `n` (generalized: `n` may
/// be any integer, `k >= 0`).
pub fn binom(n: i64, k: u32) -> Rat {
    let mut acc = Rat::one();
    for t in 0..k {
        acc *= rat(n - t as i64, 1 + t as i64);
    }
    acc
}

/// `x^k` for integer `k` (negative powers allowed for nonzero `x`).
pub fn rat_pow(x: &Rat, k: i64) -> Rat {
    if k == 0 {
        return Rat::one();
    }
    assert!(!x.is_zero() || k > 0, "negative power of zero");
    let mut acc = Rat::one();
    for _ in 0..k.unsigned_abs() {
        acc *= x;
    }
    if k < 0 {
        acc.recip()
    } else {
        acc
    }
}

/// Sign of a permutation given in one-line form (entries `0..n`).
pub fn perm_sign(perm: &[usize]) -> i32 {
    let mut seen = vec![false; perm.len()];
    let mut sign = 1;
    for start in 0..perm.len() {
        if seen[start] {
            continue;
        }
        let mut len = 0;
        let mut at = start;
        while !seen[at] {
            seen[at] = true;
            at = perm[at];
            len += 1;
        }
        if len % 2 == 0 {
            sign = -sign;
        }
    }
    sign
}

pub fn rat_abs(x: &Rat) -> Rat {
    x.abs()
}
