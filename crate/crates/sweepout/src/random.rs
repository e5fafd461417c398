//! Random sub-lacunary sequences: Bernoulli sampling with the slowly
//! decaying inclusion probabilities, the threshold interval grid, and the
//! D/E/B thinning that removes crowded and adjacent elements so the
//! survivors satisfy an exact interval-gap growth bound.
//!
//! Sampling is counter-based: the random word for index `n` is a pure
//! function of `(seed, n)` (SplitMix64 of a seed/index mix), so draws are
//! bit-identical across platforms and parallel schedules.

use rug::{Integer, Rational};
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::precision::{self, Enclosure, PrecisionError};

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum RandomError {
    #[error("t_max {t_max} below the sampling start {n_start}")]
    HorizonTooSmall { t_max: u64, n_start: u64 },
    #[error("draw extends beyond the grid horizon (draw t_max {draw}, grid t_max {grid})")]
    GridCoverage { draw: u64, grid: u64 },
    #[error(transparent)]
    Precision(#[from] PrecisionError),
}

/// SplitMix64 finalizer; the counter-based randomness primitive.
pub fn split_mix64(x: u64) -> u64 {
    let mut z = x.wrapping_add(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// The uniform 64-bit word attached to `(seed, n)`.
fn word_at(seed: u64, n: u64) -> u64 {
    split_mix64(split_mix64(seed) ^ split_mix64(n))
}

/// Inclusion-probability rule.
#[derive(Debug, Clone, PartialEq)]
pub enum SigmaRule {
    /// `sigma_n = min(1, (log log log n)^{1-eta} / n)` for `n >= n_start`,
    /// 0 below.
    Theorem3 { eta: Rational },
    /// Constant probability, for tests and degenerate checks.
    Constant { value: Rational },
}

/// Probability profile `(rule, n_start)`.
///
/// The default start is 16: `log log log n` is real and positive only for
/// `n > e^e ~ 15.15`, and indices below contribute probability zero.
#[derive(Debug, Clone, PartialEq)]
pub struct ProbabilityProfile {
    pub rule: SigmaRule,
    pub n_start: u64,
}

pub const DEFAULT_N_START: u64 = 16;

impl ProbabilityProfile {
    pub fn theorem3(eta: Rational) -> Self {
        assert!(eta > 0, "eta must be positive");
        ProbabilityProfile {
            rule: SigmaRule::Theorem3 { eta },
            n_start: DEFAULT_N_START,
        }
    }

    pub fn constant(value: Rational) -> Self {
        assert!(value >= 0 && value <= 1);
        ProbabilityProfile {
            rule: SigmaRule::Constant { value },
            n_start: DEFAULT_N_START,
        }
    }

    /// Enclosure of the unclamped `sigma_n`; zero below `n_start`.
    pub fn sigma(&self, n: u64, prec: u32) -> Result<Enclosure, PrecisionError> {
        if n < self.n_start {
            return Ok(Enclosure::from_u64(0, prec));
        }
        match &self.rule {
            SigmaRule::Constant { value } => Ok(Enclosure::from_rational(value, prec)),
            SigmaRule::Theorem3 { eta } => {
                let one_minus_eta = Rational::from(1) - eta.clone();
                let logloglog = precision::log_log(&Rational::from(n), prec)?.ln()?;
                let num = logloglog.pow_rational(&one_minus_eta, prec)?;
                Ok(num.div(&Enclosure::from_u64(n, prec)))
            }
        }
    }

    /// Acceptance threshold for index `n`: the random word is compared
    /// against `floor(sigma_n * 2^64)`, computed from a 192-bit lower
    /// bound of `sigma_n` (fixed precision and rounding make the result
    /// a pure deterministic function of the profile).
    fn threshold(&self, n: u64) -> Result<u64, PrecisionError> {
        let enc = self.sigma(n, 192)?;
        if enc.lo >= 1 {
            return Ok(u64::MAX);
        }
        if !enc.lo.is_sign_positive() || enc.lo.is_zero() {
            return Ok(0);
        }
        let scaled = enc.lo * rug::Float::with_val(192, rug::Integer::from(1) << 64);
        let floor = scaled.floor().to_integer().expect("finite");
        Ok(floor.to_u64().unwrap_or(u64::MAX))
    }
}

/// Precomputed per-index acceptance thresholds for a profile/horizon pair;
/// reusable across seeds.
#[derive(Debug, Clone)]
pub struct SigmaTable {
    pub n_start: u64,
    pub t_max: u64,
    thresholds: Vec<u64>,
}

impl SigmaTable {
    pub fn build(profile: &ProbabilityProfile, t_max: u64) -> Result<Self, RandomError> {
        if t_max < profile.n_start {
            return Err(RandomError::HorizonTooSmall {
                t_max,
                n_start: profile.n_start,
            });
        }
        let thresholds = (profile.n_start..=t_max)
            .map(|n| profile.threshold(n))
            .collect::<Result<_, _>>()?;
        Ok(SigmaTable {
            n_start: profile.n_start,
            t_max,
            thresholds,
        })
    }

    /// Expected draw size `sum sigma_n`, from the same lower bounds that
    /// drive acceptance (approximate, reporting only).
    pub fn expected_size(&self) -> f64 {
        self.thresholds
            .iter()
            .map(|&t| t as f64 / 2u128.pow(64) as f64)
            .sum()
    }
}

/// A reproducible random draw: the sorted selected indices.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RandomDraw {
    pub seed: u64,
    pub n_start: u64,
    pub t_max: u64,
    pub selected: Vec<u64>,
}

/// Includes each `n` in `[n_start, t_max]` independently with probability
/// `sigma_n`.
pub fn sample_sequence(
    profile: &ProbabilityProfile,
    t_max: u64,
    seed: u64,
) -> Result<RandomDraw, RandomError> {
    let table = SigmaTable::build(profile, t_max)?;
    Ok(sample_with_table(&table, seed))
}

/// Same draw as [`sample_sequence`], reusing a prebuilt threshold table.
pub fn sample_with_table(table: &SigmaTable, seed: u64) -> RandomDraw {
    let selected = (table.n_start..=table.t_max)
        .zip(&table.thresholds)
        .filter_map(|(n, &t)| (word_at(seed, n) < t).then_some(n))
        .collect();
    RandomDraw {
        seed,
        n_start: table.n_start,
        t_max: table.t_max,
        selected,
    }
}

/// The threshold grid `I_m = [v_m, v_{m+1}) ∩ N` with
/// `v_m = exp(m (log log m)^{-1+eta/2})`.
///
/// The thresholds are not monotone for the first few indices (the
/// exponent dips before it grows), so the usable grid starts at
/// `first_index`, the index after the last descent; integers below
/// `coverage_start()` are outside the grid.
#[derive(Debug, Clone, PartialEq)]
pub struct IntervalGrid {
    pub eta: Rational,
    pub t_max: u64,
    /// Index `m` of the first interval.
    pub first_index: u64,
    /// `starts[j]` = least integer `>= v_{first_index + j}`; interval `j`
    /// is `[starts[j], starts[j+1] - 1]`.
    starts: Vec<Integer>,
}

impl IntervalGrid {
    /// Smallest integer covered by the grid.
    pub fn coverage_start(&self) -> &Integer {
        &self.starts[0]
    }

    /// Number of intervals.
    pub fn interval_count(&self) -> usize {
        self.starts.len() - 1
    }

    /// Paper index of interval slot `j`.
    pub fn index_of_slot(&self, j: usize) -> u64 {
        self.first_index + j as u64
    }

    /// Interval slot containing integer `t`, if covered.
    pub fn slot_of(&self, t: u64) -> Option<usize> {
        let t = Integer::from(t);
        if t < self.starts[0] || t >= *self.starts.last().unwrap() {
            return None;
        }
        let j = self.starts.partition_point(|s| *s <= t);
        Some(j - 1)
    }

    /// Integer range `[lo, hi]` of slot `j`.
    pub fn slot_range(&self, j: usize) -> (Integer, Integer) {
        (
            self.starts[j].clone(),
            self.starts[j + 1].clone() - 1u32,
        )
    }

    /// True iff all elements of slot `j` are `<= t_max`, i.e. the draw
    /// horizon sees the whole interval.
    pub fn slot_fully_covered(&self, j: usize) -> bool {
        j + 1 < self.starts.len() && self.starts[j + 1] <= Integer::from(self.t_max) + 1u32
    }
}

/// Enclosure of the threshold `v_m`.
pub fn threshold_enclosure(
    m: u64,
    eta: &Rational,
    prec: u32,
) -> Result<Enclosure, PrecisionError> {
    // exponent of (log log m): -1 + eta/2
    let expo = Rational::from((-1i32, 1i32)) + Rational::from(eta / Rational::from(2));
    let loglog = precision::log_log(&Rational::from(m), prec)?;
    let factor = loglog.pow_rational(&expo, prec)?;
    Ok(Enclosure::from_u64(m, prec).mul(&factor).exp())
}

/// Builds the grid covering integers up to `t_max`.
pub fn build_interval_grid(eta: &Rational, t_max: u64) -> Result<IntervalGrid, RandomError> {
    assert!(*eta > 0);
    // ceil(v_m) for each m, until the thresholds pass t_max. Thresholds
    // are (as far as anyone knows) irrational, so the least integer >= v_m
    // is floor(v_m) + 1; an exactly-integer threshold would exhaust the
    // precision cap and error out rather than guess.
    let mut ceilings: Vec<(u64, Integer)> = Vec::new();
    let horizon = Integer::from(t_max);
    let mut m = 3u64;
    loop {
        let floor = precision::floor_exact(|prec| threshold_enclosure(m, eta, prec))?;
        let ceiling = floor + 1u32;
        let past = ceiling > horizon;
        ceilings.push((m, ceiling));
        if past && monotone_tail_confirmed(&ceilings) {
            break;
        }
        m += 1;
    }
    // Start after the last descent of the ceiling sequence.
    let mut first_slot = 0usize;
    for j in 1..ceilings.len() {
        if ceilings[j].1 <= ceilings[j - 1].1 {
            first_slot = j;
        }
    }
    let first_index = ceilings[first_slot].0;
    let starts: Vec<Integer> = ceilings[first_slot..].iter().map(|(_, c)| c.clone()).collect();
    Ok(IntervalGrid {
        eta: eta.clone(),
        t_max,
        first_index,
        starts,
    })
}

/// The exponent `m (log log m)^{-1+eta/2}` grows without bound once past
/// its early dip; two consecutive ascents past the horizon are enough to
/// stop extending the threshold list.
fn monotone_tail_confirmed(ceilings: &[(u64, Integer)]) -> bool {
    let n = ceilings.len();
    n >= 3 && ceilings[n - 1].1 > ceilings[n - 2].1 && ceilings[n - 2].1 > ceilings[n - 3].1
}

/// The D/E/B decomposition of a draw.
///
/// `E` takes every element of a multiply-occupied interval; `D` takes the
/// single occupants whose successor interval is occupied; `B` keeps the
/// rest, together with the pre-grid head of the draw (indices below the
/// grid's coverage, which the asymptotic construction never sees).
/// Elements in the final intervals whose successor is not fully covered
/// by the horizon are left unclassified in `truncated`.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ThinningResult {
    pub b: Vec<u64>,
    pub d: Vec<u64>,
    pub e: Vec<u64>,
    /// Count of leading `b` elements that sit below the grid's coverage.
    pub head_len: usize,
    /// Unclassified tail elements (truncation at the horizon).
    pub truncated: Vec<u64>,
}

impl ThinningResult {
    /// Grid-classified survivors (excludes the pre-grid head).
    pub fn grid_b(&self) -> &[u64] {
        &self.b[self.head_len..]
    }
}

/// Runs the D/E/B thinning of a draw against a grid.
pub fn thin(draw: &RandomDraw, grid: &IntervalGrid) -> Result<ThinningResult, RandomError> {
    if draw.t_max > grid.t_max {
        return Err(RandomError::GridCoverage {
            draw: draw.t_max,
            grid: grid.t_max,
        });
    }
    let slots = grid.interval_count();
    let mut occupants: Vec<Vec<u64>> = vec![Vec::new(); slots];
    let mut head = Vec::new();
    for &n in &draw.selected {
        match grid.slot_of(n) {
            Some(j) => occupants[j].push(n),
            None => {
                debug_assert!(Integer::from(n) < *grid.coverage_start());
                head.push(n);
            }
        }
    }

    let head_len = head.len();
    let mut b = head;
    let mut d = Vec::new();
    let mut e = Vec::new();
    let mut truncated = Vec::new();
    for j in 0..slots {
        let occ = &occupants[j];
        if occ.is_empty() {
            continue;
        }
        // classification needs the successor interval fully visible
        let classifiable = grid.slot_fully_covered(j)
            && j + 1 < slots
            && grid.slot_fully_covered(j + 1);
        if !classifiable {
            truncated.extend_from_slice(occ);
            continue;
        }
        if occ.len() > 1 {
            e.extend_from_slice(occ);
        } else if !occupants[j + 1].is_empty() {
            d.push(occ[0]);
        } else {
            b.push(occ[0]);
        }
    }
    Ok(ThinningResult {
        b,
        d,
        e,
        head_len,
        truncated,
    })
}

/// One consecutive-pair check in the thinning report.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct PairCheck {
    pub b_lo: u64,
    pub b_hi: u64,
    pub slot_lo: u64,
    pub slot_hi: u64,
    pub gap_ok: bool,
    pub ratio_ok: bool,
}

/// Outcome of [`verify_thinning`].
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ThinningReport {
    /// `|B ∩ I_m| <= 1` for every interval.
    pub occupancy_ok: bool,
    /// Occupied interval implies empty successor.
    pub gap_rule_ok: bool,
    pub pair_checks: Vec<PairCheck>,
    /// Paper indices `m` where the displayed exponential lower bound on
    /// `v_{m+1}/v_m` fails numerically (diagnostic; the asymptotic bound
    /// is not literally true at small indices).
    pub ratio_bound_failures: Vec<u64>,
    pub all_ok: bool,
}

/// Verifies the structural invariants of a thinning and the exact
/// interval-gap ratio bound for consecutive survivors: interval indices
/// `m' >= m + 2` and `b'/b > v_{m+2}/v_{m+1}`, decided by enclosure
/// refinement.
pub fn verify_thinning(
    result: &ThinningResult,
    grid: &IntervalGrid,
) -> Result<ThinningReport, RandomError> {
    let grid_b = result.grid_b();
    let mut occupancy = vec![0usize; grid.interval_count()];
    for &n in grid_b {
        if let Some(j) = grid.slot_of(n) {
            occupancy[j] += 1;
        }
    }
    let occupancy_ok = occupancy.iter().all(|&c| c <= 1);
    let gap_rule_ok = occupancy
        .windows(2)
        .all(|w| !(w[0] >= 1 && w[1] >= 1));

    let mut pair_checks = Vec::new();
    for w in grid_b.windows(2) {
        let (b_lo, b_hi) = (w[0], w[1]);
        let slot_lo = grid.slot_of(b_lo).expect("grid b element covered");
        let slot_hi = grid.slot_of(b_hi).expect("grid b element covered");
        let m_lo = grid.index_of_slot(slot_lo);
        let m_hi = grid.index_of_slot(slot_hi);
        let gap_ok = m_hi >= m_lo + 2;
        let ratio = Rational::from((b_hi, b_lo));
        // b'/b > v_{m+2}/v_{m+1}
        let eta = grid.eta.clone();
        let ord = precision::compare_rational_to(&ratio, move |prec| {
            let hi = threshold_enclosure(m_lo + 2, &eta, prec)?;
            let lo = threshold_enclosure(m_lo + 1, &eta, prec)?;
            Ok(hi.div(&lo))
        })?;
        let ratio_ok = ord == std::cmp::Ordering::Greater;
        pair_checks.push(PairCheck {
            b_lo,
            b_hi,
            slot_lo: m_lo,
            slot_hi: m_hi,
            gap_ok,
            ratio_ok,
        });
    }

    // Diagnostic: where does the paper's displayed threshold-ratio lower
    // bound hold? v_{m+1}/v_m >= exp(1/(log log m)^{1-eta/2}).
    let mut ratio_bound_failures = Vec::new();
    for j in 0..grid.interval_count() {
        let m = grid.index_of_slot(j);
        let eta = grid.eta.clone();
        let holds = precision::strictly_less(
            {
                let eta = eta.clone();
                move |prec| {
                    let expo =
                        Rational::from(1) - Rational::from(&eta / Rational::from(2));
                    let loglog = precision::log_log(&Rational::from(m), prec)?;
                    let denom = loglog.pow_rational(&expo, prec)?;
                    Ok(denom.recip().exp())
                }
            },
            move |prec| {
                let hi = threshold_enclosure(m + 1, &eta, prec)?;
                let lo = threshold_enclosure(m, &eta, prec)?;
                Ok(hi.div(&lo))
            },
        )?;
        if !holds {
            ratio_bound_failures.push(m);
        }
    }

    let all_ok = occupancy_ok
        && gap_rule_ok
        && pair_checks.iter().all(|p| p.gap_ok && p.ratio_ok);
    Ok(ThinningReport {
        occupancy_ok,
        gap_rule_ok,
        pair_checks,
        ratio_bound_failures,
        all_ok,
    })
}

/// One density checkpoint row.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct DensityRow {
    pub t: u64,
    pub a_count: u64,
    pub b_count: u64,
    pub ratio_num: u64,
    pub ratio_den: u64,
}

/// Exact counting-function ratios `B(t)/A(t)` at the given checkpoints.
pub fn density_report(
    draw: &RandomDraw,
    result: &ThinningResult,
    checkpoints: &[u64],
) -> Vec<DensityRow> {
    let mut b_sorted = result.b.clone();
    b_sorted.sort_unstable();
    checkpoints
        .iter()
        .map(|&t| {
            let a_count = draw.selected.partition_point(|&n| n <= t) as u64;
            let b_count = b_sorted.partition_point(|&n| n <= t) as u64;
            let ratio = if a_count == 0 {
                Rational::new()
            } else {
                Rational::from((b_count, a_count))
            };
            DensityRow {
                t,
                a_count,
                b_count,
                ratio_num: ratio.numer().to_u64().unwrap_or(0),
                ratio_den: ratio.denom().to_u64().unwrap_or(1),
            }
        })
        .collect()
}

/// Partial sum `sum_{k<=n} sigma_k` (enclosure midpoint, reporting only)
/// and `u_j = min{t : sum_{k<=t} sigma_k >= j}` for `j = 1..=n`, together
/// with the asymptotic comparator `exp(j (log log j)^{-1+eta})` for manual
/// inspection.
#[derive(Debug, Clone)]
pub struct SigmaDiagnostics {
    pub partial_sum_lo: f64,
    pub partial_sum_hi: f64,
    pub u: Vec<u64>,
    pub comparator_approx: Vec<f64>,
}

pub fn sigma_diagnostics(
    profile: &ProbabilityProfile,
    n: u64,
) -> Result<SigmaDiagnostics, RandomError> {
    assert!(n >= 1);
    let prec = 192;
    let mut sum = Enclosure::from_u64(0, prec);
    let mut u = Vec::with_capacity(n as usize);
    let mut partial_at_n = None;
    let mut t = profile.n_start;
    let mut next_level = 1u64;
    // scan partial sums until all u_1..u_n are found
    while next_level <= n {
        sum = sum.add(&profile.sigma(t, prec)?);
        while next_level <= n {
            let level = Rational::from(next_level);
            if sum.lo >= level {
                // partial sum provably reached the level at this t
                u.push(t);
                next_level += 1;
            } else if sum.hi < level {
                break;
            } else {
                return Err(PrecisionError::PrecisionExhausted(prec).into());
            }
        }
        if t == n {
            partial_at_n = Some((sum.lo.to_f64(), sum.hi.to_f64()));
        }
        t += 1;
    }
    // partial sum at t = n (may be before or after the scan end)
    let (partial_sum_lo, partial_sum_hi) = match partial_at_n {
        Some(p) => p,
        None => {
            let mut s = Enclosure::from_u64(0, prec);
            for k in profile.n_start..=n {
                s = s.add(&profile.sigma(k, prec)?);
            }
            (s.lo.to_f64(), s.hi.to_f64())
        }
    };
    let comparator_approx = (1..=n)
        .map(|j| {
            if j < 3 {
                return Ok(f64::NAN);
            }
            let expo = Rational::from(-1) + profile_eta(profile);
            let enc = precision::log_log(&Rational::from(j), 96)?
                .pow_rational(&expo, 96)?
                .mul(&Enclosure::from_u64(j, 96))
                .exp();
            Ok(enc.lo.to_f64())
        })
        .collect::<Result<_, PrecisionError>>()?;
    Ok(SigmaDiagnostics {
        partial_sum_lo,
        partial_sum_hi,
        u,
        comparator_approx,
    })
}

fn profile_eta(profile: &ProbabilityProfile) -> Rational {
    match &profile.rule {
        SigmaRule::Theorem3 { eta } => eta.clone(),
        SigmaRule::Constant { .. } => Rational::from(1),
    }
}

/// Per-interval sums `sum_{u in I_m} sigma_u` (lower bounds, reporting
/// only); the construction needs these to tend to zero, which happens far
/// beyond desk scale.
pub fn sigma_interval_sums(
    profile: &ProbabilityProfile,
    grid: &IntervalGrid,
) -> Result<Vec<(u64, f64)>, RandomError> {
    let prec = 96;
    let mut out = Vec::with_capacity(grid.interval_count());
    for j in 0..grid.interval_count() {
        let (lo, hi) = grid.slot_range(j);
        let lo = lo.to_u64().unwrap_or(u64::MAX);
        let hi = hi.to_u64().unwrap_or(u64::MAX).min(grid.t_max);
        let mut sum = Enclosure::from_u64(0, prec);
        for n in lo..=hi {
            sum = sum.add(&profile.sigma(n, prec)?);
        }
        out.push((grid.index_of_slot(j), sum.lo.to_f64()));
    }
    Ok(out)
}
