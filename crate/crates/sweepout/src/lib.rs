//! Exact-arithmetic construction and verification of strong sweeping out
//! for slowly growing sequences.
//!
//! The crate builds, in exact rational arithmetic, the combinatorial
//! machinery behind a family of ergodic-theory counterexamples: sequences
//! just above the lacunarity threshold, a nested-interval solver that
//! steers rotation orbits into prescribed bins, a `K`-torus grid whose
//! block averages over a small bad set are driven to 1 on every cube,
//! a random sub-lacunary model with a deterministic thinning, and a
//! weighted generalization. Everything a theorem asserts at finite scale
//! is checked exactly — rationals stay rational, and transcendental
//! quantities are handled through interval enclosures that refine until
//! each decision (a floor, a comparison) is provable.
//!
//! Modules:
//! - [`precision`]: directed-rounding interval enclosures and
//!   precision-doubling decision procedures.
//! - [`sequences`]: growth specs, the slow-growth example sequence, and
//!   growth-condition verification.
//! - [`torus`]: exact mod-1 arithmetic, bins, rotations.
//! - [`rotation`]: the nested-interval rotation solver.
//! - [`grid`]: parameter planning, block partitions, target assignment,
//!   bad-set measure, and the full-coverage sweep-out certificate,
//!   plus the weighted-average engine.
//! - [`random`]: Bernoulli draws with slowly decaying probabilities, the
//!   threshold interval grid, D/E/B thinning, and density reports.
//! - [`io`]: file formats (plain text, JSON, CSV) with exact "p/q"
//!   rational serialization.

pub mod grid;
pub mod io;
pub mod precision;
pub mod random;
pub mod rotation;
pub mod sequences;
pub mod torus;

// The guide chapters double as doc-tests so the book's code stays honest.
#[cfg(doctest)]
mod book {
    macro_rules! chapter {
        ($name:ident, $path:literal) => {
            #[doc = include_str!($path)]
            mod $name {}
        };
    }
    chapter!(sequences, "../../../book/src/sequences.md");
    chapter!(torus, "../../../book/src/torus.md");
    chapter!(rotation_solver, "../../../book/src/rotation-solver.md");
    chapter!(grid, "../../../book/src/grid.md");
    chapter!(random, "../../../book/src/random.md");
    chapter!(weighted, "../../../book/src/weighted.md");
}
