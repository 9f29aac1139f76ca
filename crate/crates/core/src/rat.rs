//! Exact rational scalars used by every exact code path.

use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{One, Signed, ToPrimitive, Zero};

pub type Rat = BigRational;

/// `p/q` as an exact rational. Panics on `q == 0`.
pub fn rat(p: i64, q: i64) -> Rat {
    Rat::new(BigInt::from(p), BigInt::from(q))
}

pub fn rat_int(p: i64) -> Rat {
    Rat::from_integer(BigInt::from(p))
}

pub fn rat_u(p: u64) -> Rat {
    Rat::from_integer(BigInt::from(p))
}

pub fn rzero() -> Rat {
    Rat::zero()
}

pub fn rone() -> Rat {
    Rat::one()
}

pub fn to_f64(x: &Rat) -> f64 {
    x.to_f64().unwrap_or(f64::NAN)
}

/// Non-negative integer power by repeated squaring.
pub fn rat_pow(x: &Rat, mut e: u32) -> Rat {
    let mut base = x.clone();
    let mut acc = rone();
    while e > 0 {
        if e & 1 == 1 {
            acc *= &base;
        }
        e >>= 1;
        if e > 0 {
            base = &base * &base;
        }
    }
    acc
}

pub fn rat_abs(x: &Rat) -> Rat {
    x.abs()
}

/// Canonical text form `p/q`, used by the kernel file format.
pub fn rat_to_text(x: &Rat) -> String {
    format!("{}/{}", x.numer(), x.denom())
}

/// Parses `p/q` or a bare integer `p`.
pub fn rat_from_text(s: &str) -> Option<Rat> {
    let s = s.trim();
    match s.split_once('/') {
        Some((p, q)) => {
            let p: BigInt = p.trim().parse().ok()?;
            let q: BigInt = q.trim().parse().ok()?;
            if q.is_zero() {
                None
            } else {
                Some(Rat::new(p, q))
            }
        }
        None => {
            let p: BigInt = s.parse().ok()?;
            Some(Rat::from_integer(p))
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn pow_and_text_round_trip() {
        let x = rat(-3, 4);
        assert_eq!(rat_pow(&x, 3), rat(-27, 64));
        assert_eq!(rat_pow(&x, 0), rone());
        assert_eq!(rat_from_text(&rat_to_text(&x)).unwrap(), x);
        assert_eq!(rat_from_text("7").unwrap(), rat_int(7));
        assert!(rat_from_text("1/0").is_none());
    }
}
