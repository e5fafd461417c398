//! The K-dimensional torus grid construction: parameters, index
//! partitions, cube-to-bin targets, the bad set, per-coordinate rotation
//! numbers, and the exact full-coverage certificate.
//!
//! The construction matches each of the `Q^K` open cubes of the torus
//! with a block of sequence indices, and chooses one rotation number per
//! coordinate so that every orbit segment from a matched block lands in
//! the bad set `E` (a union of `K` coordinate slabs of width `2/Q`).
//! Verification is exact: a per-cube bin certificate, cross-checked by
//! direct evaluation of block averages at sampled rational points.

use rayon::prelude::*;
use rug::ops::Pow;
use rug::{Integer, Rational};
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::precision::{self, Enclosure, PrecisionError};
use crate::random::split_mix64;
use crate::rotation::{self, BinConstraint, RotationError};
use crate::sequences::IntegerSequence;
use crate::torus::{self, BinResult, RotationVector, TorusPoint, UnitRational};

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum GridError {
    #[error("no parameters satisfying the constraints with Q <= 10^6")]
    InfeasibleParameters,
    #[error("need at least {needed} indices, sequence provides {available}")]
    NotEnoughIndices { needed: u64, available: u64 },
    #[error("block length must be at least K so each block meets every residue class")]
    BlockTooShort,
    #[error("coordinate {coordinate}: {source}")]
    Rotation {
        coordinate: usize,
        source: RotationError,
    },
    #[error("empty block")]
    EmptyBlock,
    #[error("weighted thresholds exceed G(N_total)")]
    ThresholdOutOfRange,
    #[error(transparent)]
    Torus(#[from] torus::TorusError),
    #[error(transparent)]
    Precision(#[from] PrecisionError),
}

/// Mode of the construction. Demo mode uses short uniform blocks so the
/// full-coverage identity can be certified exactly at desk scale; full
/// mode keeps the dyadic block schedule and the astronomically large
/// `N = 2^{Q^K}` purely symbolically.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum GridMode {
    Full,
    Demo,
}

#[derive(Debug, Clone, PartialEq)]
pub struct GridParameters {
    pub eta: Rational,
    pub epsilon: Rational,
    pub c: Rational,
    pub q: u64,
    pub k: u64,
    pub mode: GridMode,
    /// Uniform block length (demo mode).
    pub block_length: u64,
    /// Dyadic offset `N_1` (full mode).
    pub n1: u64,
}

impl GridParameters {
    /// Number of cubes `Q^K`; also the number of blocks.
    pub fn cube_count(&self) -> u64 {
        self.q.checked_pow(self.k as u32).expect("Q^K fits u64")
    }

    /// The bookkeeping value `N = 2^{Q^K}`, recorded symbolically as the
    /// pair `(Q, K)`; never expanded.
    pub fn symbolic_n(&self) -> (u64, u64) {
        (self.q, self.k)
    }
}

/// Extra knobs for [`plan_parameters`].
#[derive(Debug, Clone, Default)]
pub struct PlanOverrides {
    pub q: Option<u64>,
    pub k: Option<u64>,
    pub block_length: Option<u64>,
    pub n1: Option<u64>,
}

/// Chooses and validates grid parameters.
///
/// Demo mode accepts the caller's `Q, K` and enforces only the measure
/// constraint `2K/Q < min(epsilon, 1/C)`. Full mode starts from the
/// caller's `Q` (default 3) and grows it until the minimal `K` with
/// `K > (log Q)^{2/eta}` also satisfies the measure constraint.
pub fn plan_parameters(
    eta: &Rational,
    epsilon: &Rational,
    c: &Rational,
    mode: GridMode,
    overrides: &PlanOverrides,
) -> Result<GridParameters, GridError> {
    assert!(*eta > 0, "eta must be positive");
    assert!(*epsilon > 0 && *epsilon < 1, "epsilon must be in (0,1)");
    assert!(*c >= 1, "C must be >= 1");
    let bound = min_eps_inv_c(epsilon, c);

    let (q, k) = match mode {
        GridMode::Demo => {
            let q = overrides.q.unwrap_or(10);
            let k = overrides.k.unwrap_or(2);
            assert!(q >= 3 && k >= 1);
            if !measure_ok(k, q, &bound) {
                return Err(GridError::InfeasibleParameters);
            }
            (q, k)
        }
        GridMode::Full => {
            let mut q = overrides.q.unwrap_or(3).max(3);
            loop {
                if q > 1_000_000 {
                    return Err(GridError::InfeasibleParameters);
                }
                let k = minimal_k(q, eta)?;
                if measure_ok(k, q, &bound) {
                    break (q, k);
                }
                q += 1;
            }
        }
    };

    let block_length = overrides.block_length.unwrap_or(k).max(k);
    Ok(GridParameters {
        eta: eta.clone(),
        epsilon: epsilon.clone(),
        c: c.clone(),
        q,
        k,
        mode,
        block_length,
        n1: overrides.n1.unwrap_or(0),
    })
}

fn min_eps_inv_c(epsilon: &Rational, c: &Rational) -> Rational {
    let inv_c = Rational::from(c.recip_ref());
    if *epsilon < inv_c {
        epsilon.clone()
    } else {
        inv_c
    }
}

/// `2K/Q < min(eps, 1/C)`, strict.
fn measure_ok(k: u64, q: u64, bound: &Rational) -> bool {
    Rational::from((2 * k, q)) < *bound
}

/// Minimal integer `K` with `K > (log Q)^{2/eta}`, decided by interval
/// refinement.
fn minimal_k(q: u64, eta: &Rational) -> Result<u64, GridError> {
    let exponent = Rational::from(2) / eta.clone();
    let mut k = 1u64;
    loop {
        let ord = precision::compare_rational_to(&Rational::from(k), |prec| {
            Enclosure::from_u64(q, prec)
                .ln()?
                .pow_rational(&exponent, prec)
        })?;
        if ord == std::cmp::Ordering::Greater {
            return Ok(k);
        }
        k += 1;
    }
}

/// Index partition: residue classes mod K and the ordered block list.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct IndexPartition {
    pub n_total: u64,
    pub k: u64,
    /// Blocks as closed index ranges `[lo, hi]`, 1-based absolute indices.
    pub blocks: Vec<(u64, u64)>,
}

impl IndexPartition {
    /// Sorted members of residue class `k` (1-based, `k in 1..=K`):
    /// indices `n <= n_total` with `n ≡ k (mod K)`.
    pub fn residue_class(&self, class: u64) -> impl Iterator<Item = u64> + '_ {
        debug_assert!(class >= 1 && class <= self.k);
        let k = self.k;
        (1..=self.n_total).filter(move |n| n % k == class % k)
    }

    /// Indices of block `i` (1-based block number) in residue class `class`.
    pub fn block_class_indices(&self, block: usize, class: u64) -> Vec<u64> {
        let (lo, hi) = self.blocks[block];
        let k = self.k;
        (lo..=hi).filter(|n| n % k == class % k).collect()
    }

    pub fn block_indices(&self, block: usize) -> std::ops::RangeInclusive<u64> {
        let (lo, hi) = self.blocks[block];
        lo..=hi
    }
}

/// Builds the block partition. Demo mode: uniform consecutive blocks
/// `J_i = [(i-1)L+1, iL]`. Full mode: dyadic blocks
/// `J_i = (2^{N1+i}, 2^{N1+i+1}]`, permitted only when they fit `n_total`.
pub fn partition_indices(
    params: &GridParameters,
    n_total: u64,
) -> Result<IndexPartition, GridError> {
    let cubes = params.cube_count();
    match params.mode {
        GridMode::Demo => {
            if params.block_length < params.k {
                return Err(GridError::BlockTooShort);
            }
            let needed = cubes
                .checked_mul(params.block_length)
                .expect("index budget fits u64");
            if n_total < needed {
                return Err(GridError::NotEnoughIndices {
                    needed,
                    available: n_total,
                });
            }
            let blocks = (0..cubes)
                .map(|i| {
                    let lo = i * params.block_length + 1;
                    (lo, lo + params.block_length - 1)
                })
                .collect();
            Ok(IndexPartition {
                n_total,
                k: params.k,
                blocks,
            })
        }
        GridMode::Full => {
            let top = params
                .n1
                .checked_add(cubes + 1)
                .and_then(|e| 2u64.checked_pow(e.try_into().ok()?))
                .ok_or(GridError::NotEnoughIndices {
                    needed: u64::MAX,
                    available: n_total,
                })?;
            if top > n_total {
                return Err(GridError::NotEnoughIndices {
                    needed: top,
                    available: n_total,
                });
            }
            let blocks = (1..=cubes)
                .map(|i| {
                    let lo = 2u64.pow((params.n1 + i) as u32) + 1;
                    let hi = 2u64.pow((params.n1 + i + 1) as u32);
                    (lo, hi)
                })
                .collect();
            Ok(IndexPartition {
                n_total,
                k: params.k,
                blocks,
            })
        }
    }
}

/// Bijection between block numbers and cubes, mixed-radix with
/// coordinate 1 fastest, plus the per-coordinate target bins.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct CubeAssignment {
    pub q: u64,
    pub k: u64,
    /// `cubes[i][k-1] = q_i(k)`, zero-based bin components.
    pub cubes: Vec<Vec<u64>>,
    /// `constraints[k-1]` = coordinate k's placement list, ordered by
    /// increasing `a`.
    pub constraints: Vec<Vec<BinConstraint>>,
}

/// Component `q_i(k)` of cube `i` (1-based block number, 1-based k),
/// mixed-radix with coordinate 1 fastest.
pub fn cube_component(i: u64, k: u64, q: u64) -> u64 {
    ((i - 1) / q.pow((k - 1) as u32)) % q
}

/// The target bin `(Q - q) mod Q` for a cube component `q`.
pub fn target_bin(q_component: u64, q: u64) -> u64 {
    (q - q_component) % q
}

/// Enumerates cubes and appends, for each coordinate `k` and each index
/// `n` in `J_i` of class `k`, the constraint `(a_n, (Q - q_i(k)) mod Q)`.
pub fn assign_targets(
    partition: &IndexPartition,
    params: &GridParameters,
    seq: &IntegerSequence,
) -> Result<CubeAssignment, GridError> {
    let q = params.q;
    let k_dim = params.k;
    let cubes_n = params.cube_count();
    let last_needed = partition.blocks.last().map(|&(_, hi)| hi).unwrap_or(0);
    if seq.start_index() > 1 || seq.last_index() < last_needed {
        return Err(GridError::NotEnoughIndices {
            needed: last_needed,
            available: seq.last_index(),
        });
    }

    let mut cubes = Vec::with_capacity(cubes_n as usize);
    let mut constraints: Vec<Vec<BinConstraint>> = vec![Vec::new(); k_dim as usize];
    for i in 1..=cubes_n {
        let cube: Vec<u64> = (1..=k_dim).map(|k| cube_component(i, k, q)).collect();
        for k in 1..=k_dim {
            let target = target_bin(cube[(k - 1) as usize], q);
            for n in partition.block_class_indices((i - 1) as usize, k) {
                let a = seq.term(n).expect("index in range").clone();
                constraints[(k - 1) as usize].push(BinConstraint::new(a, target));
            }
        }
        cubes.push(cube);
    }
    Ok(CubeAssignment {
        q,
        k: k_dim,
        cubes,
        constraints,
    })
}

/// One rotation solve per coordinate, in parallel; the returned vector
/// passes exact verification per coordinate.
pub fn solve_all_rotations(assignment: &CubeAssignment) -> Result<RotationVector, GridError> {
    let coords: Result<Vec<UnitRational>, GridError> = assignment
        .constraints
        .par_iter()
        .enumerate()
        .map(|(k, list)| {
            rotation::solve_rotation(list, assignment.q).map_err(|source| GridError::Rotation {
                coordinate: k + 1,
                source,
            })
        })
        .collect();
    Ok(RotationVector::new(coords?))
}

/// The bad set `E = ∪_k {x : x_k ∈ (0, 2/Q)}`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct BadSet {
    pub k: u64,
    pub q: u64,
}

impl BadSet {
    pub fn new(k: u64, q: u64) -> Self {
        debug_assert!(q >= 3 && k >= 1);
        BadSet { k, q }
    }

    pub fn slab_width(&self) -> Rational {
        Rational::from((2, self.q))
    }

    /// True iff some coordinate lies in the open slab `(0, 2/Q)`.
    pub fn contains(&self, x: &TorusPoint) -> Result<bool, GridError> {
        if x.dim() as u64 != self.k {
            return Err(torus::TorusError::DimensionMismatch(x.dim(), self.k as usize).into());
        }
        let width = self.slab_width();
        Ok(x.coords()
            .iter()
            .any(|c| *c.value() > 0 && *c.value() < width))
    }
}

/// Exact measure `1 - (1 - 2/Q)^K` of the bad set; always `<= 2K/Q`.
pub fn bad_set_measure(k: u64, q: u64) -> Rational {
    assert!(q >= 3 && k >= 1);
    let slab = Rational::from((2, q));
    let complement = (Rational::from(1) - slab).pow(k as u32);
    let measure = Rational::from(1) - complement;
    debug_assert!(measure <= Rational::from((2 * k, q)));
    measure
}

/// Arithmetic average of the bad-set indicator along the orbit times
/// `a_n`, `n` in the block: exact rational in `[0, 1]`.
pub fn block_average(
    x: &TorusPoint,
    block: impl IntoIterator<Item = u64>,
    seq: &IntegerSequence,
    r: &RotationVector,
    bad: &BadSet,
) -> Result<Rational, GridError> {
    let mut hits = 0u64;
    let mut total = 0u64;
    for n in block {
        let a = seq.term(n).expect("index in range");
        let y = torus::rotate(x, r, a)?;
        if bad.contains(&y)? {
            hits += 1;
        }
        total += 1;
    }
    if total == 0 {
        return Err(GridError::EmptyBlock);
    }
    Ok(Rational::from((hits, total)))
}

/// Maximum of the prefix averages `A_{[N]}` for `N <= n_max`, returning
/// `(best_N, best_value)` with ties going to the smallest `N`.
pub fn max_initial_segment_average(
    x: &TorusPoint,
    seq: &IntegerSequence,
    r: &RotationVector,
    bad: &BadSet,
    n_max: u64,
) -> Result<(u64, Rational), GridError> {
    assert!(n_max >= seq.start_index());
    let mut hits = 0u64;
    let mut best: Option<(u64, Rational)> = None;
    for (count, (n, a)) in seq.iter().take_while(|&(n, _)| n <= n_max).enumerate() {
        let y = torus::rotate(x, r, a)?;
        if bad.contains(&y)? {
            hits += 1;
        }
        let value = Rational::from((hits, count as u64 + 1));
        match &best {
            Some((_, v)) if *v >= value => {}
            _ => best = Some((n, value)),
        }
    }
    best.ok_or(GridError::EmptyBlock)
}

/// Per-cube verification record.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct CubeReport {
    pub cube_index: u64,
    pub q_vector: Vec<u64>,
    pub pass: bool,
    /// First failing `(k, n)` when the certificate fails.
    pub witness: Option<(u64, u64)>,
    /// Exact block averages at the sampled points, as "p/q" strings.
    pub sampled_averages: Vec<String>,
}

/// Outcome of [`verify_sweepout`].
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepoutReport {
    pub q: u64,
    pub k: u64,
    pub cube_reports: Vec<CubeReport>,
    /// Exact bad-set measure as a "p/q" string.
    pub bad_set_measure: String,
    /// Decimal rendering of the measure, approximate, for reading only.
    pub bad_set_measure_approx: f64,
    pub full_cover: bool,
}

/// Verifies the full-coverage identity exactly.
///
/// For each cube the certificate asserts that every `r_k * a_n mod 1`
/// (for `n` in the matched block and residue class `k`) lands in the open
/// bin `(Q - q_i(k)) mod Q`. Together with `x_k` ranging over the open
/// cube bin, the two open bins sum into the slab `(0, 2/Q)`, so the
/// certificate proves `block_average = 1` for every point of the open
/// cube. Block averages are additionally evaluated directly at
/// `samples_per_cube` pseudo-random rational points per cube.
pub fn verify_sweepout(
    seq: &IntegerSequence,
    params: &GridParameters,
    partition: &IndexPartition,
    assignment: &CubeAssignment,
    r: &RotationVector,
    bad: &BadSet,
    samples_per_cube: u32,
    sample_seed: u64,
) -> Result<SweepoutReport, GridError> {
    let q = params.q;
    let cube_reports: Result<Vec<CubeReport>, GridError> = (1..=params.cube_count())
        .into_par_iter()
        .map(|i| {
            let cube = &assignment.cubes[(i - 1) as usize];
            let mut pass = true;
            let mut witness = None;
            'outer: for k in 1..=params.k {
                let target = target_bin(cube[(k - 1) as usize], q);
                for n in partition.block_class_indices((i - 1) as usize, k) {
                    let a = seq.term(n).expect("index in range");
                    let v = UnitRational::new(Rational::from(r.coords()[(k - 1) as usize].value() * a));
                    let ok = matches!(torus::bin_of(&v, q), BinResult::Bin(p) if p == target);
                    if !ok {
                        pass = false;
                        witness = Some((k, n));
                        break 'outer;
                    }
                }
            }
            let mut sampled_averages = Vec::new();
            for s in 0..samples_per_cube {
                let x = sample_point_in_cube(cube, q, sample_seed, i, s);
                let avg = block_average(&x, partition.block_indices((i - 1) as usize), seq, r, bad)?;
                if avg != 1u32 {
                    pass = false;
                    witness = witness.or(Some((0, 0)));
                }
                sampled_averages.push(crate::io::rational_to_string(&avg));
            }
            Ok(CubeReport {
                cube_index: i,
                q_vector: cube.clone(),
                pass,
                witness,
                sampled_averages,
            })
        })
        .collect();
    let cube_reports = cube_reports?;
    let full_cover = cube_reports.iter().all(|c| c.pass);
    let measure = bad_set_measure(params.k, params.q);
    Ok(SweepoutReport {
        q,
        k: params.k,
        bad_set_measure: crate::io::rational_to_string(&measure),
        bad_set_measure_approx: measure.to_f64(),
        cube_reports,
        full_cover,
    })
}

/// Deterministic pseudo-random rational point strictly inside the open
/// cube: each coordinate has denominator at most 2^32 and is rejected
/// away from the bin boundaries.
fn sample_point_in_cube(cube: &[u64], q: u64, seed: u64, cube_index: u64, sample: u32) -> TorusPoint {
    let coords = cube
        .iter()
        .enumerate()
        .map(|(k, &qc)| {
            let mut ctr = 0u64;
            loop {
                let word = split_mix64(
                    seed ^ (cube_index << 32) ^ ((sample as u64) << 16) ^ (k as u64) ^ (ctr << 48),
                );
                let num = word >> 32; // denominator 2^32
                let frac = Rational::from((num, 1u64 << 32));
                // interior offset within the open bin (qc/Q, (qc+1)/Q)
                if frac > 0 && frac < 1 {
                    let v = (Rational::from(qc) + frac) / Rational::from(q);
                    let bin = torus::bin_of(&UnitRational::new(v.clone()), q);
                    if bin == BinResult::Bin(qc) {
                        break UnitRational::new(v);
                    }
                }
                ctr += 1;
            }
        })
        .collect();
    TorusPoint::new(coords)
}

/// Weighted block boundaries for the weighted engine: `G` is the exact
/// prefix-sum of the weights and `G^{-1}(y) = min{n : G(n) >= y}`;
/// block `i` is `(G^{-1}(2^{N1+i}), G^{-1}(2^{N1+i+1})]`.
pub fn weighted_block_intervals(
    weights: &[Rational],
    n1: u64,
    count: u64,
    n_total: u64,
) -> Result<Vec<(u64, u64)>, GridError> {
    assert!(n_total as usize <= weights.len());
    assert!(weights.iter().all(|w| *w > 0 && *w <= 1));
    let mut prefix = Vec::with_capacity(n_total as usize + 1);
    prefix.push(Rational::new());
    for w in &weights[..n_total as usize] {
        let next = Rational::from(prefix.last().unwrap() + w);
        prefix.push(next);
    }
    let g_total = prefix.last().unwrap().clone();
    let top_threshold = Rational::from(Integer::from(2).pow((n1 + count + 1) as u32));
    if top_threshold > g_total {
        return Err(GridError::ThresholdOutOfRange);
    }
    let g_inv = |y: &Rational| -> u64 {
        // min{n : G(n) >= y}; prefix[n] = G(n)
        prefix.partition_point(|g| g < y) as u64
    };
    let mut blocks = Vec::with_capacity(count as usize);
    for i in 1..=count {
        let lo = g_inv(&Rational::from(Integer::from(2).pow((n1 + i) as u32)));
        let hi = g_inv(&Rational::from(Integer::from(2).pow((n1 + i + 1) as u32)));
        let hi = hi.min(n_total);
        if lo >= hi {
            return Err(GridError::EmptyBlock);
        }
        blocks.push((lo + 1, hi));
    }
    Ok(blocks)
}

/// `w`-weighted average of the bad-set indicator over a block, exact.
pub fn weighted_average(
    x: &TorusPoint,
    block: impl IntoIterator<Item = u64>,
    weights: &[Rational],
    seq: &IntegerSequence,
    r: &RotationVector,
    bad: &BadSet,
) -> Result<Rational, GridError> {
    let mut num = Rational::new();
    let mut den = Rational::new();
    let mut any = false;
    for n in block {
        any = true;
        let w = &weights[(n - 1) as usize];
        let a = seq.term(n).expect("index in range");
        let y = torus::rotate(x, r, a)?;
        if bad.contains(&y)? {
            num += w;
        }
        den += w;
    }
    if !any {
        return Err(GridError::EmptyBlock);
    }
    Ok(num / den)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::sequences::generate_ratio_sequence;

    fn rat(n: i64, d: i64) -> Rational {
        Rational::from((n, d))
    }

    fn demo_params(q: u64, k: u64, block_length: u64) -> GridParameters {
        GridParameters {
            eta: rat(1, 1),
            epsilon: rat(1, 2),
            c: rat(2, 1),
            q,
            k,
            mode: GridMode::Demo,
            block_length,
            n1: 0,
        }
    }

    #[test]
    fn plan_demo_examples() {
        let ok = plan_parameters(
            &rat(1, 1),
            &rat(1, 2),
            &rat(2, 1),
            GridMode::Demo,
            &PlanOverrides {
                q: Some(10),
                k: Some(2),
                ..Default::default()
            },
        );
        assert!(ok.is_ok());

        // 2K/Q = 2/5 fails strictly against min(2/5, 1/2) = 2/5
        let bad = plan_parameters(
            &rat(1, 1),
            &rat(2, 5),
            &rat(2, 1),
            GridMode::Demo,
            &PlanOverrides {
                q: Some(10),
                k: Some(2),
                ..Default::default()
            },
        );
        assert_eq!(bad, Err(GridError::InfeasibleParameters));
    }

    #[test]
    fn plan_full_minimal_k() {
        // eta = 2: (log Q)^{2/eta} = ln 10 ~ 2.303, so minimal K = 3;
        // 2*3/10 = 3/5 >= 1/2, so the planner must grow Q.
        let params = plan_parameters(
            &rat(2, 1),
            &rat(1, 2),
            &rat(2, 1),
            GridMode::Full,
            &PlanOverrides {
                q: Some(10),
                ..Default::default()
            },
        )
        .unwrap();
        assert!(params.q > 10);
        // K stays minimal for the final Q
        let k_check = minimal_k(params.q, &rat(2, 1)).unwrap();
        assert_eq!(params.k, k_check);
        assert!(measure_ok(params.k, params.q, &rat(1, 2)));
    }

    #[test]
    fn minimal_k_for_eta_two_q_ten() {
        assert_eq!(minimal_k(10, &rat(2, 1)).unwrap(), 3);
    }

    #[test]
    fn partition_demo_example() {
        let params = demo_params(2, 2, 2);
        let part = partition_indices(&params, 16).unwrap();
        assert_eq!(part.blocks, vec![(1, 2), (3, 4), (5, 6), (7, 8)]);
        let odds: Vec<u64> = part.residue_class(1).take(4).collect();
        assert_eq!(odds, vec![1, 3, 5, 7]);
        let evens: Vec<u64> = part.residue_class(2).take(4).collect();
        assert_eq!(evens, vec![2, 4, 6, 8]);
    }

    #[test]
    fn partition_k1_single_class() {
        let params = demo_params(3, 1, 1);
        let part = partition_indices(&params, 3).unwrap();
        let all: Vec<u64> = part.residue_class(1).collect();
        assert_eq!(all, vec![1, 2, 3]);
    }

    #[test]
    fn partition_block_too_short() {
        let params = demo_params(3, 2, 2);
        let mut p = params;
        p.block_length = 1;
        assert_eq!(partition_indices(&p, 100), Err(GridError::BlockTooShort));
    }

    #[test]
    fn cube_enumeration_mixed_radix() {
        // Q=10: cube with components (6, 3) has targets (4, 7), matching
        // the two-dimensional picture in the construction.
        assert_eq!(target_bin(6, 10), 4);
        assert_eq!(target_bin(3, 10), 7);
        // wraparound
        assert_eq!(target_bin(0, 10), 0);
        // coordinate 1 fastest: i=1 -> (0,0), i=2 -> (1,0), i=11 -> (0,1)
        assert_eq!(cube_component(1, 1, 10), 0);
        assert_eq!(cube_component(2, 1, 10), 1);
        assert_eq!(cube_component(2, 2, 10), 0);
        assert_eq!(cube_component(11, 1, 10), 0);
        assert_eq!(cube_component(11, 2, 10), 1);
    }

    #[test]
    fn assignment_orders_constraints_by_a() {
        let params = demo_params(2, 2, 2);
        let part = partition_indices(&params, 8).unwrap();
        let seq = generate_ratio_sequence(&rat(5, 1), &Integer::from(1), 8).unwrap();
        let assignment = assign_targets(&part, &params, &seq).unwrap();
        assert_eq!(assignment.constraints.len(), 2);
        for list in &assignment.constraints {
            assert_eq!(list.len(), 4);
            for w in list.windows(2) {
                assert!(w[1].a > w[0].a);
            }
        }
        // Q=2, cubes (0,0),(1,0),(0,1),(1,1): coordinate-1 targets cycle 0,1
        let t1: Vec<u64> = assignment.constraints[0].iter().map(|c| c.target).collect();
        assert_eq!(t1, vec![0, 1, 0, 1]);
        let t2: Vec<u64> = assignment.constraints[1].iter().map(|c| c.target).collect();
        assert_eq!(t2, vec![0, 0, 1, 1]);
    }

    #[test]
    fn bad_set_measure_examples() {
        assert_eq!(bad_set_measure(1, 10), rat(1, 5));
        assert_eq!(bad_set_measure(2, 10), rat(9, 25));
        assert_eq!(bad_set_measure(2, 4), rat(3, 4));
    }

    #[test]
    fn in_bad_set_examples() {
        let bad = BadSet::new(2, 10);
        let x = TorusPoint::from_rationals(vec![rat(1, 10), rat(9, 10)]);
        assert!(bad.contains(&x).unwrap());
        let x = TorusPoint::from_rationals(vec![rat(5, 10), rat(9, 10)]);
        assert!(!bad.contains(&x).unwrap());
        // open interval: 0 excluded
        let x = TorusPoint::from_rationals(vec![rat(0, 1), rat(0, 1)]);
        assert!(!bad.contains(&x).unwrap());
    }

    #[test]
    fn solve_all_rotations_ratio_too_small() {
        let params = demo_params(10, 2, 2);
        let part = partition_indices(&params, 400).unwrap();
        let terms: Vec<Integer> = (1..=400).map(Integer::from).collect();
        let seq = IntegerSequence::new(1, terms).unwrap();
        let assignment = assign_targets(&part, &params, &seq).unwrap();
        let err = solve_all_rotations(&assignment).unwrap_err();
        assert!(matches!(
            err,
            GridError::Rotation {
                source: RotationError::RatioTooSmall(_),
                ..
            }
        ));
    }

    #[test]
    fn small_grid_end_to_end() {
        // K=1, Q=3, three cubes, 1-element blocks: hand-checkable.
        let params = demo_params(3, 1, 1);
        let part = partition_indices(&params, 3).unwrap();
        // ratios must exceed 2Q = 6
        let seq = generate_ratio_sequence(&rat(7, 1), &Integer::from(1), 3).unwrap();
        let assignment = assign_targets(&part, &params, &seq).unwrap();
        let r = solve_all_rotations(&assignment).unwrap();
        let bad = BadSet::new(1, 3);
        let report =
            verify_sweepout(&seq, &params, &part, &assignment, &r, &bad, 2, 7).unwrap();
        assert!(report.full_cover);
        // every cube pass, averages exactly 1
        for c in &report.cube_reports {
            assert!(c.pass);
            assert!(c.sampled_averages.iter().all(|a| a == "1/1"));
        }
    }

    #[test]
    fn tampered_rotation_yields_witness() {
        let params = demo_params(3, 1, 1);
        let part = partition_indices(&params, 3).unwrap();
        let seq = generate_ratio_sequence(&rat(7, 1), &Integer::from(1), 3).unwrap();
        let assignment = assign_targets(&part, &params, &seq).unwrap();
        let r = solve_all_rotations(&assignment).unwrap();
        let bad = BadSet::new(1, 3);
        let tampered = RotationVector::from_rationals(vec![
            r.coords()[0].value().clone() + rat(1, 3),
        ]);
        let report =
            verify_sweepout(&seq, &params, &part, &assignment, &tampered, &bad, 1, 7).unwrap();
        assert!(!report.full_cover);
        let failing = report.cube_reports.iter().find(|c| !c.pass).unwrap();
        assert!(failing.witness.is_some());
    }

    #[test]
    fn block_average_extremes() {
        let params = demo_params(3, 1, 1);
        let part = partition_indices(&params, 3).unwrap();
        let seq = generate_ratio_sequence(&rat(7, 1), &Integer::from(1), 3).unwrap();
        let bad = BadSet::new(1, 3);
        // rotation 0: orbit stays at x
        let r0 = RotationVector::from_rationals(vec![rat(0, 1)]);
        // 3/4 lies outside the open slab (0, 2/3)
        let inside = TorusPoint::from_rationals(vec![rat(3, 4)]);
        let avg = block_average(&inside, part.block_indices(0), &seq, &r0, &bad).unwrap();
        assert_eq!(avg, rat(0, 1));
        let in_slab = TorusPoint::from_rationals(vec![rat(1, 3)]);
        let avg = block_average(&in_slab, part.block_indices(0), &seq, &r0, &bad).unwrap();
        assert_eq!(avg, rat(1, 1));
    }

    #[test]
    fn max_prefix_average_ties() {
        let params = demo_params(3, 1, 1);
        let _ = params;
        let seq = generate_ratio_sequence(&rat(7, 1), &Integer::from(1), 5).unwrap();
        let bad = BadSet::new(1, 3);
        let r0 = RotationVector::from_rationals(vec![rat(0, 1)]);
        // every index hits: x in slab
        let x = TorusPoint::from_rationals(vec![rat(1, 3)]);
        let (n, v) = max_initial_segment_average(&x, &seq, &r0, &bad, 5).unwrap();
        assert_eq!((n, v), (1, rat(1, 1)));
        // no hits at all: 3/4 is outside the open slab (0, 2/3)
        let x = TorusPoint::from_rationals(vec![rat(3, 4)]);
        let (n, v) = max_initial_segment_average(&x, &seq, &r0, &bad, 5).unwrap();
        assert_eq!((n, v), (1, rat(0, 1)));
    }

    #[test]
    fn weighted_blocks_unit_weights_are_dyadic() {
        let weights: Vec<Rational> = (0..64).map(|_| rat(1, 1)).collect();
        let blocks = weighted_block_intervals(&weights, 0, 4, 64).unwrap();
        assert_eq!(blocks, vec![(3, 4), (5, 8), (9, 16), (17, 32)]);
    }

    #[test]
    fn weighted_blocks_harmonic() {
        // H_3 = 11/6 < 2 <= H_4 = 25/12, so G^{-1}(2) = 4.
        let weights: Vec<Rational> = (1..=100u64).map(|n| Rational::from((1u64, n))).collect();
        let mut g = Rational::new();
        let mut g_inv_2 = 0;
        for (i, w) in weights.iter().enumerate() {
            g += w;
            if g >= 2 {
                g_inv_2 = i + 1;
                break;
            }
        }
        assert_eq!(g_inv_2, 4);
        // N1=0, count=1, N_total=3: needs G >= 4 but H_3 < 4.
        let err = weighted_block_intervals(&weights[..3], 0, 1, 3);
        assert_eq!(err, Err(GridError::ThresholdOutOfRange));
    }

    #[test]
    fn weighted_average_examples() {
        let seq = generate_ratio_sequence(&rat(7, 1), &Integer::from(1), 3).unwrap();
        let weights: Vec<Rational> = (1..=3u64).map(|n| Rational::from((1u64, n))).collect();

        // all hits -> 1 regardless of weights (Q=3 slab is wide)
        let bad = BadSet::new(1, 3);
        let r0 = RotationVector::from_rationals(vec![rat(0, 1)]);
        let x = TorusPoint::from_rationals(vec![rat(1, 3)]);
        let avg = weighted_average(&x, 1..=3, &weights, &seq, &r0, &bad).unwrap();
        assert_eq!(avg, rat(1, 1));

        // J = {2,3}, w = 1/n, hit only at n = 2: terms are (1, 8, 57),
        // slab (0, 1/5) for Q = 10, x = 0, r = 1/80:
        // a_2 * r = 1/10 (hit), a_3 * r mod 1 = 57/80 (miss).
        let bad = BadSet::new(1, 10);
        let r = RotationVector::from_rationals(vec![rat(1, 80)]);
        let x = TorusPoint::from_rationals(vec![rat(0, 1)]);
        let avg = weighted_average(&x, 2..=3, &weights, &seq, &r, &bad).unwrap();
        assert_eq!(avg, rat(3, 5));
    }

    #[test]
    fn constant_weights_degenerate_to_block_average() {
        let seq = generate_ratio_sequence(&rat(7, 1), &Integer::from(1), 6).unwrap();
        let bad = BadSet::new(1, 3);
        let r = RotationVector::from_rationals(vec![rat(3, 7)]);
        let x = TorusPoint::from_rationals(vec![rat(2, 5)]);
        let weights: Vec<Rational> = (0..6).map(|_| rat(1, 3)).collect();
        let wavg = weighted_average(&x, 1..=6, &weights, &seq, &r, &bad).unwrap();
        let avg = block_average(&x, 1..=6, &seq, &r, &bad).unwrap();
        assert_eq!(wavg, avg);
    }
}
