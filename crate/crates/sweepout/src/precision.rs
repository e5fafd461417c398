//! Interval enclosures of transcendental expressions, refined by doubling
//! the working precision until a decision (a floor, a strict comparison)
//! can be made exactly.
//!
//! Every enclosure is a pair `[lo, hi]` of directed-rounded floats that is
//! guaranteed to contain the true real value. Decisions are only taken when
//! they hold for the whole enclosure, so no answer ever depends on rounding.

use std::sync::atomic::{AtomicU32, Ordering as AtomicOrdering};

use rug::float::Round;
use rug::ops::AssignRound;
use rug::{Float, Integer, Rational};
use thiserror::Error;

/// Starting working precision in bits.
const PREC_START: u32 = 64;

/// Hard cap on working precision in bits. Decisions still open at this
/// precision abort with [`PrecisionError::PrecisionExhausted`].
pub const PREC_CAP_DEFAULT: u32 = 4096;

static PREC_CAP: AtomicU32 = AtomicU32::new(PREC_CAP_DEFAULT);

/// Sets the global precision cap (bits). Exposed for the CLI's
/// `--precision-cap` flag.
pub fn set_precision_cap(bits: u32) {
    PREC_CAP.store(bits.max(PREC_START), AtomicOrdering::Relaxed);
}

pub fn precision_cap() -> u32 {
    PREC_CAP.load(AtomicOrdering::Relaxed)
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum PrecisionError {
    #[error("decision still open at the {0}-bit precision cap")]
    PrecisionExhausted(u32),
    #[error("logarithm of a non-positive enclosure")]
    LogOfNonPositive,
}

/// A closed interval `[lo, hi]` containing the true value of an expression.
#[derive(Debug, Clone)]
pub struct Enclosure {
    pub lo: Float,
    pub hi: Float,
}

impl Enclosure {
    pub fn from_rational(q: &Rational, prec: u32) -> Self {
        let mut lo = Float::new(prec);
        lo.assign_round(q, Round::Down);
        let mut hi = Float::new(prec);
        hi.assign_round(q, Round::Up);
        Enclosure { lo, hi }
    }

    pub fn from_integer(n: &Integer, prec: u32) -> Self {
        let mut lo = Float::new(prec);
        lo.assign_round(n, Round::Down);
        let mut hi = Float::new(prec);
        hi.assign_round(n, Round::Up);
        Enclosure { lo, hi }
    }

    pub fn from_u64(n: u64, prec: u32) -> Self {
        Self::from_integer(&Integer::from(n), prec)
    }

    fn prec(&self) -> u32 {
        self.lo.prec()
    }

    pub fn add(&self, rhs: &Enclosure) -> Enclosure {
        let prec = self.prec();
        let mut lo = Float::new(prec);
        lo.assign_round(&self.lo + &rhs.lo, Round::Down);
        let mut hi = Float::new(prec);
        hi.assign_round(&self.hi + &rhs.hi, Round::Up);
        Enclosure { lo, hi }
    }

    pub fn sub(&self, rhs: &Enclosure) -> Enclosure {
        let prec = self.prec();
        let mut lo = Float::new(prec);
        lo.assign_round(&self.lo - &rhs.hi, Round::Down);
        let mut hi = Float::new(prec);
        hi.assign_round(&self.hi - &rhs.lo, Round::Up);
        Enclosure { lo, hi }
    }

    /// General interval product over all four endpoint pairs.
    pub fn mul(&self, rhs: &Enclosure) -> Enclosure {
        let prec = self.prec();
        let pairs = [
            (&self.lo, &rhs.lo),
            (&self.lo, &rhs.hi),
            (&self.hi, &rhs.lo),
            (&self.hi, &rhs.hi),
        ];
        let mut lo: Option<Float> = None;
        let mut hi: Option<Float> = None;
        for (a, b) in pairs {
            let mut down = Float::new(prec);
            down.assign_round(a * b, Round::Down);
            let mut up = Float::new(prec);
            up.assign_round(a * b, Round::Up);
            lo = Some(match lo {
                Some(cur) => cur.min(&down),
                None => down,
            });
            hi = Some(match hi {
                Some(cur) => cur.max(&up),
                None => up,
            });
        }
        Enclosure {
            lo: lo.unwrap(),
            hi: hi.unwrap(),
        }
    }

    /// Reciprocal; only valid when the enclosure does not straddle zero.
    pub fn recip(&self) -> Enclosure {
        let prec = self.prec();
        debug_assert!(self.lo.is_sign_positive() || self.hi.is_sign_negative());
        let mut lo = Float::new(prec);
        lo.assign_round(self.hi.recip_ref(), Round::Down);
        let mut hi = Float::new(prec);
        hi.assign_round(self.lo.recip_ref(), Round::Up);
        Enclosure { lo, hi }
    }

    pub fn div(&self, rhs: &Enclosure) -> Enclosure {
        self.mul(&rhs.recip())
    }

    pub fn neg(&self) -> Enclosure {
        Enclosure {
            lo: -self.hi.clone(),
            hi: -self.lo.clone(),
        }
    }

    /// exp is monotone increasing, so endpoints map directly.
    pub fn exp(&self) -> Enclosure {
        let prec = self.prec();
        let mut lo = Float::new(prec);
        lo.assign_round(self.lo.exp_ref(), Round::Down);
        let mut hi = Float::new(prec);
        hi.assign_round(self.hi.exp_ref(), Round::Up);
        Enclosure { lo, hi }
    }

    /// Natural logarithm; requires a strictly positive enclosure.
    pub fn ln(&self) -> Result<Enclosure, PrecisionError> {
        if !self.lo.is_sign_positive() || self.lo.is_zero() {
            return Err(PrecisionError::LogOfNonPositive);
        }
        let prec = self.prec();
        let mut lo = Float::new(prec);
        lo.assign_round(self.lo.ln_ref(), Round::Down);
        let mut hi = Float::new(prec);
        hi.assign_round(self.hi.ln_ref(), Round::Up);
        Ok(Enclosure { lo, hi })
    }

    /// `self^e` for rational exponent, via `exp(e * ln self)`; requires
    /// a strictly positive base.
    pub fn pow_rational(&self, e: &Rational, prec: u32) -> Result<Enclosure, PrecisionError> {
        let ln = self.ln()?;
        let exp = Enclosure::from_rational(e, prec);
        Ok(ln.mul(&exp).exp())
    }

    /// The unique integer `k` with `k <= x < k+1`, when the enclosure is
    /// narrow enough to pin it down.
    pub fn decided_floor(&self) -> Option<Integer> {
        let f_lo = self.lo.clone().floor().to_integer()?;
        let f_hi = self.hi.clone().floor().to_integer()?;
        if f_lo == f_hi {
            Some(f_lo)
        } else {
            None
        }
    }

    /// Strict position of a rational relative to the enclosed value, when
    /// decidable from the enclosure alone.
    pub fn compare_rational(&self, q: &Rational) -> Option<std::cmp::Ordering> {
        if *q < self.lo {
            Some(std::cmp::Ordering::Less)
        } else if *q > self.hi {
            Some(std::cmp::Ordering::Greater)
        } else {
            None
        }
    }

    /// True iff the two enclosures are disjoint with `self` entirely below.
    pub fn strictly_below(&self, rhs: &Enclosure) -> Option<bool> {
        if self.hi < rhs.lo {
            Some(true)
        } else if self.lo > rhs.hi {
            Some(false)
        } else {
            None
        }
    }
}

/// Runs `eval` at doubling precisions until it commits to an answer.
pub fn refine<T>(mut eval: impl FnMut(u32) -> Option<T>) -> Result<T, PrecisionError> {
    let cap = precision_cap();
    let mut prec = PREC_START;
    loop {
        if let Some(v) = eval(prec) {
            return Ok(v);
        }
        if prec >= cap {
            return Err(PrecisionError::PrecisionExhausted(cap));
        }
        prec = (prec * 2).min(cap);
    }
}

/// Exact floor of a transcendental expression given as an
/// enclosure-valued evaluator.
pub fn floor_exact(
    eval: impl Fn(u32) -> Result<Enclosure, PrecisionError>,
) -> Result<Integer, PrecisionError> {
    let mut failed = None;
    let out = refine(|prec| match eval(prec) {
        Ok(enc) => enc.decided_floor(),
        Err(e) => {
            failed = Some(e);
            // Returning a dummy stops the loop; the error wins below.
            Some(Integer::new())
        }
    });
    match failed {
        Some(e) => Err(e),
        None => out,
    }
}

/// Decides `q < value` / `q > value` exactly for a transcendental `value`.
pub fn compare_rational_to(
    q: &Rational,
    eval: impl Fn(u32) -> Result<Enclosure, PrecisionError>,
) -> Result<std::cmp::Ordering, PrecisionError> {
    let mut failed = None;
    let out = refine(|prec| match eval(prec) {
        Ok(enc) => enc.compare_rational(q),
        Err(e) => {
            failed = Some(e);
            Some(std::cmp::Ordering::Equal)
        }
    });
    match failed {
        Some(e) => Err(e),
        None => out,
    }
}

/// Decides whether `lhs < rhs` for two transcendental expressions.
pub fn strictly_less(
    lhs: impl Fn(u32) -> Result<Enclosure, PrecisionError>,
    rhs: impl Fn(u32) -> Result<Enclosure, PrecisionError>,
) -> Result<bool, PrecisionError> {
    let mut failed = None;
    let out = refine(|prec| match (lhs(prec), rhs(prec)) {
        (Ok(a), Ok(b)) => a.strictly_below(&b),
        (Err(e), _) | (_, Err(e)) => {
            failed = Some(e);
            Some(false)
        }
    });
    match failed {
        Some(e) => Err(e),
        None => out,
    }
}

/// Enclosure of `ln(ln(x))` for rational `x`; defined only when `ln x > 0`,
/// i.e. `x > e`, which callers must guarantee (integers `>= 3`).
pub fn log_log(x: &Rational, prec: u32) -> Result<Enclosure, PrecisionError> {
    Enclosure::from_rational(x, prec).ln()?.ln()
}

#[cfg(test)]
mod tests {
    use super::*;

    fn rat(n: i64, d: i64) -> Rational {
        Rational::from((n, d))
    }

    #[test]
    fn floor_of_e_cubed() {
        let f = floor_exact(|prec| Ok(Enclosure::from_u64(3, prec).exp())).unwrap();
        assert_eq!(f, Integer::from(20));
    }

    #[test]
    fn compare_pi_ish() {
        // 22/7 > e, 5/2 < e
        let e = |prec: u32| Ok(Enclosure::from_u64(1, prec).exp());
        assert_eq!(
            compare_rational_to(&rat(22, 7), e).unwrap(),
            std::cmp::Ordering::Greater
        );
        assert_eq!(
            compare_rational_to(&rat(5, 2), e).unwrap(),
            std::cmp::Ordering::Less
        );
    }

    #[test]
    fn pow_rational_matches_sqrt() {
        // 2^(1/2) is between 1.414 and 1.415
        let enc = Enclosure::from_u64(2, 128)
            .pow_rational(&rat(1, 2), 128)
            .unwrap();
        assert_eq!(
            enc.compare_rational(&rat(1414, 1000)),
            Some(std::cmp::Ordering::Less)
        );
        assert_eq!(
            enc.compare_rational(&rat(1415, 1000)),
            Some(std::cmp::Ordering::Greater)
        );
    }

    #[test]
    fn exhausted_on_exact_integer() {
        // exp(0) = 1 exactly: the floor of the constant 1 is decidable,
        // but asking whether 1 < exp(0) strictly never resolves.
        let err = compare_rational_to(&rat(1, 1), |prec| Ok(Enclosure::from_u64(0, prec).exp()));
        assert_eq!(
            err,
            Err(PrecisionError::PrecisionExhausted(precision_cap()))
        );
    }

    #[test]
    fn log_log_domain() {
        // ln(ln 1) = ln(0): undefined
        assert!(log_log(&rat(1, 1), 64).is_err());
        // ln of a negative inner log: undefined
        assert!(log_log(&rat(1, 2), 64).is_err());
        // defined but negative between 1 and e
        let enc = log_log(&rat(2, 1), 64).unwrap();
        assert!(enc.hi.is_sign_negative());
        // positive above e
        let enc = log_log(&rat(3, 1), 64).unwrap();
        assert!(enc.lo.is_sign_positive());
    }
}
