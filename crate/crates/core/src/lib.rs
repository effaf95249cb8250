//! Exact certificates for rationality properties of moduli of plane curves.
//!
//! The library has two independent certificate pipelines plus the shared
//! arithmetic they run on:
//!
//! * [`rep`] — dimension bookkeeping for irreducible `SL3` representations
//!   `V(a,b)` and the search for admissible `(U, V, W)` triples ("candidates")
//!   with `dim W = dim U - 1`.
//! * [`projops`] — exact projector coefficients for the equivariant split of
//!   `Sym^e ⊗ Sym^f∨` and the closed-form `chi` polynomial that evaluates a
//!   sum of projectors on pure tensors in two field multiplications and a
//!   table lookup.
//! * [`ffcore`] — prime-field arithmetic below `2^31`, the precomputed `chi`
//!   lookup table, and keyed counter-based sample streams.
//! * [`ranklab`] — dense blocked elimination over `GF(p)` with delayed
//!   reduction, nullspace extraction, and CRC-protected checkpoints.
//! * [`genericity`] — the double-bundle genericity check: random evaluation
//!   matrices whose full rank certifies `psi(x0, U) = W` and `psi(V, y0) = W`
//!   in characteristic zero.
//! * [`covariants`] — the covariant spanning check: bracket invariants of
//!   power-sum quartics/octics evaluated along interpolation fibers.
//! * [`table`] — the per-degree rationality status table with sources.

pub mod covariants;
pub mod error;
pub mod ffcore;
pub mod genericity;
pub mod projops;
pub mod ranklab;
pub mod rep;
pub mod table;

pub use error::{Error, Result};

/// Log target used for the one-line-per-stage progress records.
pub const STAGE_LOG_TARGET: &str = "curvecert::stage";
