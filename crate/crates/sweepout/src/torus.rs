//! Exact rational arithmetic on the unit interval mod 1 and on the
//! K-dimensional torus: points, open bins, intervals, rotations.
//!
//! Nothing here ever touches floating point; membership and binning are
//! decided by exact rational comparison, with boundary hits surfaced as
//! [`BinResult::OnBoundary`] rather than silently assigned.

use rug::{Integer, Rational};
use thiserror::Error;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum TorusError {
    #[error("dimension mismatch: {0} vs {1}")]
    DimensionMismatch(usize, usize),
    #[error("invalid interval: lo must satisfy 0 <= lo < hi <= 1")]
    InvalidInterval,
}

/// An exact rational in `[0, 1)`, reduced mod 1 at construction.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord)]
pub struct UnitRational(Rational);

impl UnitRational {
    pub fn new(x: Rational) -> Self {
        UnitRational(mod_one(x))
    }

    pub fn value(&self) -> &Rational {
        &self.0
    }

    pub fn into_value(self) -> Rational {
        self.0
    }
}

impl std::fmt::Display for UnitRational {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "{}", self.0)
    }
}

/// Reduces an exact rational mod 1: returns `x - floor(x)`.
pub fn mod_one(x: Rational) -> Rational {
    let floor = x.clone().floor();
    x - floor
}

/// An open sub-interval `(lo, hi)` of `[0, 1]`. Both endpoints open,
/// matching the bins of the torus construction.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ModOneInterval {
    lo: Rational,
    hi: Rational,
}

impl ModOneInterval {
    pub fn new(lo: Rational, hi: Rational) -> Result<Self, TorusError> {
        if lo < 0 || lo >= hi || hi > 1 {
            return Err(TorusError::InvalidInterval);
        }
        Ok(ModOneInterval { lo, hi })
    }

    /// The open bin `(p/Q, (p+1)/Q)` for a zero-based bin index.
    pub fn bin(p: u64, q: u64) -> Self {
        ModOneInterval {
            lo: Rational::from((p, q)),
            hi: Rational::from((p + 1, q)),
        }
    }

    pub fn lo(&self) -> &Rational {
        &self.lo
    }

    pub fn hi(&self) -> &Rational {
        &self.hi
    }

    pub fn length(&self) -> Rational {
        Rational::from(&self.hi - &self.lo)
    }

    /// Open containment: `lo < v < hi`, exact.
    pub fn contains(&self, v: &UnitRational) -> bool {
        *v.value() > self.lo && *v.value() < self.hi
    }
}

/// A point of the K-torus with exact rational coordinates.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct TorusPoint {
    coords: Vec<UnitRational>,
}

impl TorusPoint {
    pub fn new(coords: Vec<UnitRational>) -> Self {
        assert!(!coords.is_empty(), "torus dimension must be >= 1");
        TorusPoint { coords }
    }

    pub fn from_rationals(coords: Vec<Rational>) -> Self {
        Self::new(coords.into_iter().map(UnitRational::new).collect())
    }

    pub fn dim(&self) -> usize {
        self.coords.len()
    }

    pub fn coords(&self) -> &[UnitRational] {
        &self.coords
    }
}

/// Per-coordinate rotation numbers `(r_1, ..., r_K)`, stored as exact
/// rationals in `[0, 1)`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct RotationVector {
    coords: Vec<UnitRational>,
}

impl RotationVector {
    pub fn new(coords: Vec<UnitRational>) -> Self {
        assert!(!coords.is_empty(), "rotation dimension must be >= 1");
        RotationVector { coords }
    }

    pub fn from_rationals(coords: Vec<Rational>) -> Self {
        Self::new(coords.into_iter().map(UnitRational::new).collect())
    }

    pub fn dim(&self) -> usize {
        self.coords.len()
    }

    pub fn coords(&self) -> &[UnitRational] {
        &self.coords
    }
}

///// Applies the `a`-th power of the rotation by `r` to `x`:
/// coordinate `k` of the result is `x_k + r_k * a (mod 1)`, exact.
pub fn rotate(x: &TorusPoint, r: &RotationVector, a: &Integer) -> Result<TorusPoint, TorusError> {
    if x.dim() != r.dim() {
        return Err(TorusError::DimensionMismatch(x.dim(), r.dim()));
    }
    let coords = x
        .coords
        .iter()
        .zip(&r.coords)
        .map(|(xk, rk)| {
            let shifted = xk.value() + Rational::from(rk.value() * a);
            UnitRational::new(shifted)
        })
        .collect();
    Ok(TorusPoint::new(coords))
}

/// Outcome of binning a point into the `Q` open bins of the circle.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum BinResult {
    /// `v` lies strictly inside `(p/Q, (p+1)/Q)`.
    Bin(u64),
    /// `v * Q` is an integer; the point sits on a bin boundary.
    OnBoundary,
}

/// Zero-based open bin of `v` among `(p/Q, (p+1)/Q)`, `p = 0..Q-1`.
pub fn bin_of(v: &UnitRational, q: u64) -> BinResult {
    debug_assert!(q >= 2);
    let scaled = Rational::from(v.value() * Rational::from(q));
    if scaled.is_integer() {
        return BinResult::OnBoundary;
    }
    let p = scaled.floor().numer().to_u64().expect("bin index fits u64");
    BinResult::Bin(p)
}
