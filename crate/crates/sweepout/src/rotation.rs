//! Constructive rotation-number solver: given a finite sequence with
//! consecutive ratios above `2Q` and a target bin per element, produce an
//! exact rational `r` placing every `r * a_n mod 1` strictly inside its
//! target bin.
//!
//! The solver runs a nested-interval argument. It maintains a closed
//! feasible interval `S`; for the next constraint `(a, p)` the admissible
//! rotations form the union of cells `((m + p/Q)/a, (m + (p+1)/Q)/a)` over
//! `m = 0..a-1`, and the ratio hypothesis guarantees a full cell inside
//! `S`. The closed cell becomes the new `S`. The final answer is the
//! midpoint of the last cell, which is strictly interior to every chosen
//! cell along the way, so open-bin membership holds exactly.

use rug::{Integer, Rational};
use thiserror::Error;

use crate::torus::{self, BinResult, UnitRational};

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum RotationError {
    #[error("constraint {0}: ratio a[{0}+1]/a[{0}] must strictly exceed 2Q")]
    RatioTooSmall(usize),
    #[error("constraint {0}: no full cell fits the feasible interval (internal bug)")]
    Infeasible(usize),
    #[error("constraints must have strictly increasing a (violated at {0})")]
    NotIncreasing(usize),
    #[error("target bin {target} out of range for Q = {q}")]
    TargetOutOfRange { target: u64, q: u64 },
    #[error("solver output failed exact verification (internal bug)")]
    VerificationFailed,
}

/// One placement requirement: `r * a mod 1` must land in the open bin
/// `(target/Q, (target+1)/Q)`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct BinConstraint {
    pub a: Integer,
    pub target: u64,
}

impl BinConstraint {
    pub fn new(a: Integer, target: u64) -> Self {
        debug_assert!(a >= 1);
        BinConstraint { a, target }
    }
}

/// Closed interval of rotations satisfying all constraints processed so far.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct FeasibleInterval {
    pub lo: Rational,
    pub hi: Rational,
}

impl FeasibleInterval {
    fn full() -> Self {
        FeasibleInterval {
            lo: Rational::new(),
            hi: Rational::from(1),
        }
    }

    pub fn length(&self) -> Rational {
        Rational::from(&self.hi - &self.lo)
    }

    fn midpoint(&self) -> Rational {
        Rational::from(&self.lo + &self.hi) / 2u32
    }

    fn contains(&self, other: &FeasibleInterval) -> bool {
        self.lo <= other.lo && other.hi <= self.hi
    }
}

/// One solver step, for the optional trace log.
#[derive(Debug, Clone)]
pub struct TraceStep {
    pub constraint_index: usize,
    pub chosen_m: Integer,
    pub cell: FeasibleInterval,
}

impl std::fmt::Display for TraceStep {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(
            f,
            "constraint {} m={} cell=({}, {})",
            self.constraint_index, self.chosen_m, self.cell.lo, self.cell.hi
        )
    }
}

/// Solves the placement problem, returning the rotation number together
/// with the per-constraint trace.
pub fn solve_rotation_traced(
    constraints: &[BinConstraint],
    q: u64,
) -> Result<(UnitRational, Vec<TraceStep>), RotationError> {
    assert!(q >= 2);
    check_preconditions(constraints, q)?;

    if constraints.is_empty() {
        return Ok((UnitRational::new(Rational::from((1, 2))), Vec::new()));
    }

    let mut feasible = FeasibleInterval::full();
    let mut trace = Vec::with_capacity(constraints.len());

    for (j, c) in constraints.iter().enumerate() {
        let a = Rational::from(&c.a);
        // Cells: ((m + p/Q)/a, (m + (p+1)/Q)/a). A cell is inside the
        // closed feasible interval iff
        //   m >= a*lo - p/Q   and   m <= a*hi - (p+1)/Q.
        let p_over_q = Rational::from((c.target, q));
        let p1_over_q = Rational::from((c.target + 1, q));
        let alpha = Rational::from(&a * &feasible.lo) - &p_over_q;
        let beta = Rational::from(&a * &feasible.hi) - &p1_over_q;
        let mut m_min = alpha.clone().ceil().numer().clone();
        let mut m_max = beta.clone().floor().numer().clone();
        if m_min < 0 {
            m_min = Integer::new();
        }
        let a_minus_1 = c.a.clone() - 1u32;
        if m_max > a_minus_1 {
            m_max = a_minus_1;
        }
        if m_min > m_max {
            return Err(RotationError::Infeasible(j));
        }
        // Among admissible cells, pick the one whose center is nearest the
        // center of the feasible interval; ties go to the smaller m.
        let center = feasible.midpoint();
        let ideal = Rational::from(&a * &center) - (Rational::from(&p_over_q + &p1_over_q) / 2u32);
        let m = nearest_in_range(&ideal, &m_min, &m_max);
        let cell_lo = Rational::from(&Rational::from(&m + &p_over_q) / &a);
        let cell_hi = Rational::from(&Rational::from(&m + &p1_over_q) / &a);
        let cell = FeasibleInterval {
            lo: cell_lo,
            hi: cell_hi,
        };
        debug_assert!(feasible.contains(&cell));
        feasible = cell.clone();
        trace.push(TraceStep {
            constraint_index: j,
            chosen_m: m,
            cell,
        });
    }

    let r = UnitRational::new(feasible.midpoint());
    if !verify_rotation(&r, constraints, q) {
        return Err(RotationError::VerificationFailed);
    }
    Ok((r, trace))
}

/// Solves the placement problem. See [`solve_rotation_traced`].
pub fn solve_rotation(constraints: &[BinConstraint], q: u64) -> Result<UnitRational, RotationError> {
    solve_rotation_traced(constraints, q).map(|(r, _)| r)
}

/// Integer in `[m_min, m_max]` nearest to `ideal`, ties toward the
/// smaller value.
fn nearest_in_range(ideal: &Rational, m_min: &Integer, m_max: &Integer) -> Integer {
    let rounded = nearest_integer(ideal);
    if rounded < *m_min {
        m_min.clone()
    } else if rounded > *m_max {
        m_max.clone()
    } else {
        rounded
    }
}

/// Nearest integer to a rational, rounding half-way cases down (which is
/// the tie-toward-smaller-m rule).
fn nearest_integer(x: &Rational) -> Integer {
    let shifted = x.clone() + Rational::from((1, 2));
    let mut n = shifted.clone().floor().numer().clone();
    // floor(x + 1/2) rounds .5 up; pull exact halves back down.
    if shifted.is_integer() {
        n -= 1u32;
    }
    n
}

/// Exact check that every constraint's open bin strictly contains
/// `r * a mod 1`; boundary hits count as failure.
pub fn verify_rotation(r: &UnitRational, constraints: &[BinConstraint], q: u64) -> bool {
    constraints.iter().all(|c| {
        let v = UnitRational::new(Rational::from(r.value() * &c.a));
        bin_hits(&v, q, c.target)
    })
}

fn bin_hits(v: &UnitRational, q: u64, target: u64) -> bool {
    matches!(torus::bin_of(v, q), BinResult::Bin(p) if p == target)
}

fn check_preconditions(constraints: &[BinConstraint], q: u64) -> Result<(), RotationError> {
    for (j, c) in constraints.iter().enumerate() {
        if c.target >= q {
            return Err(RotationError::TargetOutOfRange {
                target: c.target,
                q,
            });
        }
        if j + 1 < constraints.len() {
            let next = &constraints[j + 1];
            if next.a <= c.a {
                return Err(RotationError::NotIncreasing(j));
            }
            // a_{j+1}/a_j > 2Q, exact rational check.
            let ratio = Rational::from((next.a.clone(), c.a.clone()));
            if ratio <= Rational::from(2 * q) {
                return Err(RotationError::RatioTooSmall(j));
            }
        }
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    fn rat(n: i64, d: i64) -> Rational {
        Rational::from((n, d))
    }

    fn cons(pairs: &[(u64, u64)]) -> Vec<BinConstraint> {
        pairs
            .iter()
            .map(|&(a, p)| BinConstraint::new(Integer::from(a), p))
            .collect()
    }

    #[test]
    fn empty_constraints_default() {
        let r = solve_rotation(&[], 2).unwrap();
        assert_eq!(r.value(), &rat(1, 2));
    }

    #[test]
    fn single_constraint_center_of_cell() {
        let r = solve_rotation(&cons(&[(1, 0)]), 2).unwrap();
        assert_eq!(r.value(), &rat(1, 4));
    }

    #[test]
    fn two_constraints_verified_membership() {
        let constraints = cons(&[(1, 1), (5, 0)]);
        let r = solve_rotation(&constraints, 2).unwrap();
        assert!(verify_rotation(&r, &constraints, 2));
        // r itself must lie in (1/2, 1) and 5r mod 1 in (0, 1/2).
        assert!(*r.value() > rat(1, 2) && *r.value() < rat(1, 1));
        let five_r = UnitRational::new(Rational::from(r.value() * &Integer::from(5)));
        assert!(*five_r.value() > rat(0, 1) && *five_r.value() < rat(1, 2));
    }

    #[test]
    fn marginal_ratio_instance_succeeds() {
        // a = (1, 5) with Q = 2 has ratio 5, just above 2Q = 4. Target
        // bins (0, 1): the admissible set is (1/10, 2/10) and the solver
        // must find it.
        let constraints = cons(&[(1, 0), (5, 1)]);
        let r = solve_rotation(&constraints, 2).unwrap();
        assert!(verify_rotation(&r, &constraints, 2));
    }

    #[test]
    fn ratio_too_small_detected() {
        let constraints = cons(&[(1, 0), (4, 1)]);
        assert_eq!(
            solve_rotation(&constraints, 2),
            Err(RotationError::RatioTooSmall(0))
        );
    }

    #[test]
    fn verify_rotation_examples() {
        assert!(verify_rotation(
            &UnitRational::new(rat(1, 4)),
            &cons(&[(1, 0)]),
            2
        ));
        // boundary: r = 1/2 sits on the bin edge
        assert!(!verify_rotation(
            &UnitRational::new(rat(1, 2)),
            &cons(&[(1, 0)]),
            2
        ));
        assert!(verify_rotation(
            &UnitRational::new(rat(13, 20)),
            &cons(&[(1, 1), (5, 0)]),
            2
        ));
    }

    #[test]
    fn trace_records_cells() {
        let constraints = cons(&[(1, 0), (9, 1)]);
        let (r, trace) = solve_rotation_traced(&constraints, 2).unwrap();
        assert_eq!(trace.len(), 2);
        assert!(trace[1].cell.lo <= *r.value() && *r.value() <= trace[1].cell.hi);
        // nested intervals
        assert!(trace[0].cell.contains(&trace[1].cell));
    }

    #[test]
    fn nearest_integer_ties_down() {
        assert_eq!(nearest_integer(&rat(5, 2)), Integer::from(2));
        assert_eq!(nearest_integer(&rat(7, 3)), Integer::from(2));
        assert_eq!(nearest_integer(&rat(-1, 2)), Integer::from(-1));
    }
}
