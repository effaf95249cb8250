//! Dimension bookkeeping for irreducible `SL3` representations and the
//! candidate search.
//!
//! `V(a, b)` denotes the irreducible representation of highest weight
//! `(a, b)`; `Sym^e` of the standard representation is `V(e, 0)` and `Sym^f`
//! of its dual is `V(0, f)`.  The tensor product `V(e,0) ⊗ V(0,f)` splits as
//! the multiplicity-free sum of `V(e-i, f-i)` for `0 <= i <= min(e, f)`, and
//! a *candidate* for the double-bundle check at degree `d` is a choice of
//! `e` and a subset `I` of those indices with
//!
//! ```text
//!     sum_{i in I} dim V(e-i, d-i)  =  dim V(e, 0) - 1 .
//! ```

use serde::Serialize;

use crate::error::{Error, Result};

/// Highest weight `(a, b)` of an irreducible `SL3` representation.
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize)]
pub struct Weight {
    pub a: u32,
    pub b: u32,
}

impl Weight {
    pub fn new(a: u32, b: u32) -> Self {
        Weight { a, b }
    }

    /// Dimension of `V(a, b)`: `(a+1)(b+1)(a+b+2)/2`.
    pub fn dim(self) -> u64 {
        dim_irrep(self.a, self.b)
    }
}

/// Dimension of the irreducible representation `V(a, b)`.
pub fn dim_irrep(a: u32, b: u32) -> u64 {
    let (a, b) = (a as u128, b as u128);
    let n = (a + 1) * (b + 1) * (a + b + 2) / 2;
    debug_assert!(n <= u64::MAX as u128);
    n as u64
}

/// A multiplicity-free direct sum of irreducibles, highest component first.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct RepSum(Vec<Weight>);

impl RepSum {
    pub fn components(&self) -> &[Weight] {
        &self.0
    }

    pub fn dim(&self) -> u64 {
        self.0.iter().map(|w| w.dim()).sum()
    }
}

/// Clebsch-Gordan split of `V(e,0) ⊗ V(0,f)` into `V(e-i, f-i)`,
/// `i = 0 .. min(e, f)`.
pub fn decompose_tensor(e: u32, f: u32) -> RepSum {
    let m = e.min(f);
    RepSum((0..=m).map(|i| Weight::new(e - i, f - i)).collect())
}

/// An admissible `(U, V, W)` triple for the double-bundle check at degree `d`:
/// `U = V(e, 0)`, `V = V(0, d)`, `W = ⊕_{i in I} V(e-i, d-i)` with
/// `dim W = dim U - 1` and `dim V - dim U > kappa`.
#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "camelCase")]
pub struct Candidate {
    pub d: u32,
    pub e: u32,
    /// Strictly increasing component indices `I`.
    pub components: Vec<u32>,
    pub dim_u: u64,
    pub dim_v: u64,
    pub dim_w: u64,
    pub kappa: u64,
}

impl Candidate {
    /// Build and validate a candidate from `(d, e, I, kappa)`.
    pub fn new(d: u32, e: u32, components: Vec<u32>, kappa: u64) -> Result<Self> {
        if components.iter().any(|&i| i > e.min(d)) {
            return Err(Error::InvalidInput(format!(
                "component index beyond min(e, d) = {}",
                e.min(d)
            )));
        }
        let c = Candidate {
            d,
            e,
            dim_u: dim_irrep(e, 0),
            dim_v: dim_irrep(0, d),
            dim_w: components.iter().map(|&i| dim_irrep(e - i, d - i)).sum(),
            components,
            kappa,
        };
        c.validate()?;
        Ok(c)
    }

    /// Re-check every stored invariant from scratch.
    pub fn validate(&self) -> Result<()> {
        if self.e > self.d {
            return Err(Error::InvalidInput(format!(
                "candidate needs e <= d, got e={} d={}",
                self.e, self.d
            )));
        }
        let m = self.e.min(self.d);
        if !self.components.windows(2).all(|w| w[0] < w[1]) {
            return Err(Error::InvalidInput(
                "component indices must be strictly increasing".into(),
            ));
        }
        if self.components.last().is_some_and(|&i| i > m) {
            return Err(Error::InvalidInput(format!(
                "component index beyond min(e, d) = {m}"
            )));
        }
        if self.dim_u != dim_irrep(self.e, 0) || self.dim_v != dim_irrep(0, self.d) {
            return Err(Error::InvalidInput("stored dimensions are stale".into()));
        }
        let w: u64 = self
            .components
            .iter()
            .map(|&i| dim_irrep(self.e - i, self.d - i))
            .sum();
        if w != self.dim_w {
            return Err(Error::InvalidInput("stored dim W is stale".into()));
        }
        validate_dims(self.dim_v, self.dim_u, self.dim_w, self.kappa)
    }
}

/// The two numeric hypotheses of the double-bundle method, on raw dimensions:
/// `dim U = dim W + 1` and `dim V - dim U > kappa`.  Usable on its own for
/// configurations whose `U` is not a single irreducible.
pub fn validate_dims(dim_v: u64, dim_u: u64, dim_w: u64, kappa: u64) -> Result<()> {
    if dim_u != dim_w + 1 {
        return Err(Error::InvalidInput(format!(
            "need dim U = dim W + 1, got dim U = {dim_u}, dim W = {dim_w}"
        )));
    }
    if dim_v <= dim_u || dim_v - dim_u <= kappa {
        return Err(Error::InvalidInput(format!(
            "need dim V - dim U > kappa, got {dim_v} - {dim_u} <= {kappa}"
        )));
    }
    Ok(())
}

/// Default codimension safety margin for the candidate search.
pub const DEFAULT_KAPPA: u64 = 19;

/// Largest search degree; beyond this the subset-sum tables stop being cheap
/// and no certificate run is realistic anyway.
pub const MAX_SEARCH_DEGREE: u32 = 1024;

/// Largest admissible `e` for degree `d`: the biggest `e` with
/// `dim V(e,0) < dim V(0,d) - kappa`.
pub fn default_e_max(d: u32, kappa: u64) -> u32 {
    let dv = dim_irrep(0, d);
    let mut e = 0;
    while dim_irrep(e + 1, 0) + kappa < dv {
        e += 1;
    }
    e
}

/// Enumerate every candidate at degree `d`, ordered by `e` and then
/// lexicographically by `I`.  `e_range` defaults to `1..=default_e_max`.
pub fn search_candidates(
    d: u32,
    kappa: u64,
    e_range: Option<std::ops::RangeInclusive<u32>>,
) -> Result<Vec<Candidate>> {
    if d == 0 || d > MAX_SEARCH_DEGREE {
        return Err(Error::InvalidInput(format!(
            "search degree must be in 1..={MAX_SEARCH_DEGREE}, got {d}"
        )));
    }
    let range = e_range.unwrap_or(1..=default_e_max(d, kappa));
    let (e_lo, e_hi) = ((*range.start()).max(1), (*range.end()).min(d));
    let mut out = Vec::new();
    for e in e_lo..=e_hi {
        if dim_irrep(e, 0) + kappa >= dim_irrep(0, d) {
            continue;
        }
        let target = dim_irrep(e, 0) - 1;
        let items: Vec<u64> = (0..=e).map(|i| dim_irrep(e - i, d - i)).collect();
        for set in subset_sums(&items, target) {
            out.push(Candidate::new(d, e, set, kappa)?);
        }
    }
    Ok(out)
}

/// All subsets of `items` (as strictly increasing index lists, lexicographic
/// order) whose values sum to `target`.  Suffix-reachability bitsets prune the
/// enumeration so each solution costs `O(len)`.
fn subset_sums(items: &[u64], target: u64) -> Vec<Vec<u32>> {
    let n = items.len();
    let t = target as usize;
    let words = t / 64 + 1;
    // reach[i] = set of sums attainable from items[i..], clipped to target
    let mut reach = vec![0u64; (n + 1) * words];
    reach[n * words] |= 1; // sum 0
    for i in (0..n).rev() {
        let (head, tail) = reach.split_at_mut((i + 1) * words);
        let prev = &tail[..words];
        let row = &mut head[i * words..];
        row.copy_from_slice(prev);
        let s = items[i] as usize;
        if s <= t {
            let (wsh, bsh) = (s / 64, s % 64);
            for w in (wsh..words).rev() {
                let mut v = prev[w - wsh] << bsh;
                if bsh > 0 && w > wsh {
                    v |= prev[w - wsh - 1] >> (64 - bsh);
                }
                row[w] |= v;
            }
            let top = t % 64;
            row[words - 1] &= if top == 63 { !0 } else { (1u64 << (top + 1)) - 1 };
        }
    }
    let has = |i: usize, s: u64| reach[i * words + s as usize / 64] >> (s % 64) & 1 == 1;
    let mut sols = Vec::new();
    if !has(0, target) {
        return sols;
    }
    let mut acc: Vec<u32> = Vec::new();
    // include-first depth-first walk emits index sets in lexicographic order
    fn dfs(
        items: &[u64],
        has: &dyn Fn(usize, u64) -> bool,
        i: usize,
        rem: u64,
        acc: &mut Vec<u32>,
        sols: &mut Vec<Vec<u32>>,
    ) {
        if rem == 0 {
            sols.push(acc.clone());
            return;
        }
        if i == items.len() {
            return;
        }
        if items[i] <= rem && has(i + 1, rem - items[i]) {
            acc.push(i as u32);
            dfs(items, has, i + 1, rem - items[i], acc, sols);
            acc.pop();
        }
        if has(i + 1, rem) {
            dfs(items, has, i + 1, rem, acc, sols);
        }
    }
    dfs(items, &has, 0, target, &mut acc, &mut sols);
    sols
}
