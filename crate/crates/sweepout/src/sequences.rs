//! Integer sequences with prescribed ratio growth, and exact verification
//! of the growth conditions.
//!
//! Floors of transcendental values are decided by interval refinement
//! (see [`crate::precision`]); ratio bounds are checked strictly, with
//! `log log` bounds only evaluated from index 3 upward unless strict
//! mode is requested.

use rug::{Integer, Rational};
use thiserror::Error;

use crate::precision::{self, Enclosure, PrecisionError};

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum SequenceError {
    #[error("start index {0} too small: log log n must be positive, need n >= 3")]
    IndexTooSmall(u64),
    #[error("sequence terms must be strictly increasing (violated at index {0})")]
    NotIncreasing(u64),
    #[error("sequence terms must be >= 1")]
    NonPositiveTerm,
    #[error("empty sequence")]
    Empty,
    #[error("growth bound undefined at index {0} (log log <= 0) under strict policy")]
    UndefinedBound(u64),
    #[error("rho must exceed 1")]
    RhoTooSmall,
    #[error("eta must be positive")]
    EtaNotPositive,
    #[error(transparent)]
    Precision(#[from] PrecisionError),
}

/// A strictly increasing list of arbitrary-precision positive integers,
/// addressed by absolute index `n` starting at `start_index`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct IntegerSequence {
    start_index: u64,
    terms: Vec<Integer>,
}

impl IntegerSequence {
    pub fn new(start_index: u64, terms: Vec<Integer>) -> Result<Self, SequenceError> {
        if terms.is_empty() {
            return Err(SequenceError::Empty);
        }
        if terms.iter().any(|t| *t < 1) {
            return Err(SequenceError::NonPositiveTerm);
        }
        for (i, w) in terms.windows(2).enumerate() {
            if w[1] <= w[0] {
                return Err(SequenceError::NotIncreasing(start_index + i as u64));
            }
        }
        Ok(IntegerSequence { start_index, terms })
    }

    pub fn start_index(&self) -> u64 {
        self.start_index
    }

    pub fn len(&self) -> usize {
        self.terms.len()
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    /// Term at absolute index `n`.
    pub fn term(&self, n: u64) -> Option<&Integer> {
        n.checked_sub(self.start_index)
            .and_then(|i| self.terms.get(i as usize))
    }

    pub fn last_index(&self) -> u64 {
        self.start_index + self.terms.len() as u64 - 1
    }

    pub fn terms(&self) -> &[Integer] {
        &self.terms
    }

    /// Absolute indices paired with terms, in order.
    pub fn iter(&self) -> impl Iterator<Item = (u64, &Integer)> {
        self.terms
            .iter()
            .enumerate()
            .map(move |(i, t)| (self.start_index + i as u64, t))
    }

    /// Counting function `A(t) = #{n : term(n) <= t}`.
    pub fn counting_function(&self, t: &Integer) -> u64 {
        self.terms.partition_point(|a| a <= t) as u64
    }
}

/// Growth condition to verify a sequence against.
#[derive(Debug, Clone, PartialEq)]
pub enum GrowthSpec {
    /// `a_{n+1}/a_n > 1 + 1/(log log n)^{1-eta}`
    LogLogDeterministic { eta: Rational },
    /// `a_{n+1}/a_n > 1 + 1/(log log G(n))^{1-eta}` with `G` the prefix
    /// sums of the given weights (weight list aligned to absolute index 1).
    LogLogWeighted { eta: Rational, weights: Vec<Rational> },
    /// `a_{n+1}/a_n > rho`
    FixedRatio { rho: Rational },
    /// `a_{n+1}/a_n > 1 + eta`
    Lacunary { eta: Rational },
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct GrowthReport {
    pub holds: bool,
    /// Least absolute index `n` such that the pair `(n, n+1)` violates
    /// the bound, when `holds` is false.
    pub first_violation: Option<u64>,
}

/// Policy for indices where a `log log` bound is undefined.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum DomainPolicy {
    /// Skip indices `n < 3`; the growth conditions are asymptotic.
    #[default]
    Permissive,
    /// Error out if the bound is undefined anywhere in range.
    Strict,
}

/// `a_n = floor(exp(n / (log log n)^{1-eta}))` for `n = n0, ..., n0+count-1`.
pub fn generate_paper_example(
    eta: &Rational,
    n0: u64,
    count: usize,
) -> Result<IntegerSequence, SequenceError> {
    if *eta <= 0 {
        return Err(SequenceError::EtaNotPositive);
    }
    if n0 < 3 {
        return Err(SequenceError::IndexTooSmall(n0));
    }
    assert!(count >= 1);
    let one_minus_eta = Rational::from(1) - eta.clone();
    let mut terms = Vec::with_capacity(count);
    for n in n0..n0 + count as u64 {
        let term = precision::floor_exact(|prec| paper_exponent(n, &one_minus_eta, prec))?;
        terms.push(term);
    }
    IntegerSequence::new(n0, terms)
}

/// Enclosure of `exp(n / (log log n)^{1-eta})`.
fn paper_exponent(
    n: u64,
    one_minus_eta: &Rational,
    prec: u32,
) -> Result<Enclosure, PrecisionError> {
    let loglog = precision::log_log(&Rational::from(n), prec)?;
    let denom = loglog.pow_rational(one_minus_eta, prec)?;
    let num = Enclosure::from_u64(n, prec);
    Ok(num.div(&denom).exp())
}

/// `term(1) = a_start`, `term(n+1) = floor(rho * term(n)) + 1`. The `+1`
/// makes every ratio strictly exceed `rho`, which is what the downstream
/// grid construction needs.
pub fn generate_ratio_sequence(
    rho: &Rational,
    a_start: &Integer,
    count: usize,
) -> Result<IntegerSequence, SequenceError> {
    if *rho <= 1 {
        return Err(SequenceError::RhoTooSmall);
    }
    assert!(*a_start >= 1);
    assert!(count >= 1);
    let mut terms = Vec::with_capacity(count);
    let mut cur = a_start.clone();
    terms.push(cur.clone());
    for _ in 1..count {
        let next = Rational::from(rho * &cur).floor().numer().clone() + 1u32;
        cur = next;
        terms.push(cur.clone());
    }
    IntegerSequence::new(1, terms)
}

/// Checks every consecutive ratio of `seq` against the bound of `spec`.
/// All bounds are strict; transcendental bounds are decided by interval
/// refinement, never by fixed-precision rounding.
pub fn verify_growth(
    seq: &IntegerSequence,
    spec: &GrowthSpec,
    policy: DomainPolicy,
) -> Result<GrowthReport, SequenceError> {
    for (n, pair) in seq.terms.windows(2).enumerate() {
        let n = seq.start_index + n as u64;
        let ratio = Rational::from((pair[1].clone(), pair[0].clone()));
        let ok = match spec {
            GrowthSpec::FixedRatio { rho } => ratio > *rho,
            GrowthSpec::Lacunary { eta } => ratio > Rational::from(1) + eta.clone(),
            GrowthSpec::LogLogDeterministic { eta } => {
                match loglog_bound_holds(&ratio, &Rational::from(n), eta, n, policy)? {
                    Some(ok) => ok,
                    None => continue,
                }
            }
            GrowthSpec::LogLogWeighted { eta, weights } => {
                let g = prefix_sum(weights, n);
                match loglog_bound_holds(&ratio, &g, eta, n, policy)? {
                    Some(ok) => ok,
                    None => continue,
                }
            }
        };
        if !ok {
            return Ok(GrowthReport {
                holds: false,
                first_violation: Some(n),
            });
        }
    }
    Ok(GrowthReport {
        holds: true,
        first_violation: None,
    })
}

/// Decides `ratio > 1 + 1/(log log arg)^{1-eta}` exactly, or `None` when
/// the bound is undefined at this index and the policy is permissive.
fn loglog_bound_holds(
    ratio: &Rational,
    arg: &Rational,
    eta: &Rational,
    n: u64,
    policy: DomainPolicy,
) -> Result<Option<bool>, SequenceError> {
    // log log arg > 0 requires arg > e; rational guard at arg >= 3.
    if *arg < 3 {
        return match policy {
            DomainPolicy::Permissive => Ok(None),
            DomainPolicy::Strict => Err(SequenceError::UndefinedBound(n)),
        };
    }
    let one_minus_eta = Rational::from(1) - eta.clone();
    let ord = precision::compare_rational_to(ratio, |prec| {
        let loglog = precision::log_log(arg, prec)?;
        let denom = loglog.pow_rational(&one_minus_eta, prec)?;
        let one = Enclosure::from_u64(1, prec);
        Ok(one.add(&denom.recip()))
    })?;
    Ok(Some(ord == std::cmp::Ordering::Greater))
}

fn prefix_sum(weights: &[Rational], n: u64) -> Rational {
    weights
        .iter()
        .take(n as usize)
        .fold(Rational::new(), |acc, w| acc + w)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn rat(n: i64, d: i64) -> Rational {
        Rational::from((n, d))
    }

    #[test]
    fn paper_example_eta_one() {
        let seq = generate_paper_example(&rat(1, 1), 3, 5).unwrap();
        let want: Vec<Integer> = [20, 54, 148, 403, 1096]
            .iter()
            .map(|&x| Integer::from(x as u32))
            .collect();
        assert_eq!(seq.terms(), &want[..]);
    }

    #[test]
    fn paper_example_index_too_small() {
        assert!(matches!(
            generate_paper_example(&rat(1, 1), 2, 1),
            Err(SequenceError::IndexTooSmall(2))
        ));
    }

    #[test]
    fn ratio_sequence_examples() {
        let seq = generate_ratio_sequence(&rat(21, 1), &Integer::from(1), 3).unwrap();
        assert_eq!(
            seq.terms(),
            &[Integer::from(1), Integer::from(22), Integer::from(463)]
        );
        let seq = generate_ratio_sequence(&rat(2, 1), &Integer::from(1), 5).unwrap();
        assert_eq!(seq.terms(), &[1, 3, 7, 15, 31].map(Integer::from)[..]);
        let seq = generate_ratio_sequence(&rat(5, 1), &Integer::from(1), 2).unwrap();
        assert_eq!(seq.terms(), &[Integer::from(1), Integer::from(6)]);
    }

    #[test]
    fn ratio_strictly_exceeds_rho() {
        let rho = rat(7, 2);
        let seq = generate_ratio_sequence(&rho, &Integer::from(3), 10).unwrap();
        for w in seq.terms().windows(2) {
            let ratio = Rational::from((w[1].clone(), w[0].clone()));
            assert!(ratio > rho);
        }
    }

    #[test]
    fn verify_growth_fixed_ratio() {
        let seq = generate_ratio_sequence(&rat(2, 1), &Integer::from(1), 5).unwrap();
        let report =
            verify_growth(&seq, &GrowthSpec::FixedRatio { rho: rat(2, 1) }, DomainPolicy::default())
                .unwrap();
        assert!(report.holds);
    }

    #[test]
    fn verify_growth_boundary_is_strict() {
        let seq = IntegerSequence::new(1, vec![Integer::from(10), Integer::from(20)]).unwrap();
        let report =
            verify_growth(&seq, &GrowthSpec::FixedRatio { rho: rat(2, 1) }, DomainPolicy::default())
                .unwrap();
        assert!(!report.holds);
        assert_eq!(report.first_violation, Some(1));
    }

    #[test]
    fn verify_growth_lacunary_scan() {
        // terms n = 3..=20 at absolute indices 3..=20; ratio (n+1)/n first
        // drops below 3/2 already at n = 3 (4/3 < 3/2).
        let terms: Vec<Integer> = (3..=20).map(Integer::from).collect();
        let seq = IntegerSequence::new(3, terms).unwrap();
        let report =
            verify_growth(&seq, &GrowthSpec::Lacunary { eta: rat(1, 2) }, DomainPolicy::default())
                .unwrap();
        assert!(!report.holds);
        assert_eq!(report.first_violation, Some(3));
    }

    #[test]
    fn verify_growth_loglog_skips_small_indices() {
        // Indices 1 and 2 are skipped under the permissive policy.
        let seq = generate_paper_example(&rat(1, 1), 3, 4).unwrap();
        let report = verify_growth(
            &seq,
            &GrowthSpec::LogLogDeterministic { eta: rat(1, 1) },
            DomainPolicy::Permissive,
        )
        .unwrap();
        // eta = 1 bound is 1 + 1/(log log n)^0 = 2; ratios of floor(e^n) are
        // all > 2.
        assert!(report.holds);
    }

    #[test]
    fn verify_growth_strict_policy_errors() {
        let seq = IntegerSequence::new(1, vec![Integer::from(1), Integer::from(10)]).unwrap();
        assert!(matches!(
            verify_growth(
                &seq,
                &GrowthSpec::LogLogDeterministic { eta: rat(1, 2) },
                DomainPolicy::Strict,
            ),
            Err(SequenceError::UndefinedBound(1))
        ));
    }

    #[test]
    fn counting_function_examples() {
        let seq = generate_ratio_sequence(&rat(2, 1), &Integer::from(1), 5).unwrap();
        assert_eq!(seq.counting_function(&Integer::from(7)), 3);
        assert_eq!(seq.counting_function(&Integer::from(0)), 0);
        assert_eq!(seq.counting_function(&Integer::from(100)), 5);
        let seq = IntegerSequence::new(3, [20, 54, 148].map(Integer::from).to_vec()).unwrap();
        assert_eq!(seq.counting_function(&Integer::from(54)), 2);
    }

    #[test]
    fn duplicate_terms_rejected() {
        assert!(matches!(
            IntegerSequence::new(1, vec![Integer::from(5), Integer::from(5)]),
            Err(SequenceError::NotIncreasing(1))
        ));
    }
}
