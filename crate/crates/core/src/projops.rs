//! Exact projector coefficients and `chi` polynomials for the equivariant
//! split of `Sym^e ⊗ Sym^f∨`.
//!
//! Work happens in the bigraded algebra with vector variables `e1, e2, e3`
//! and covector variables `x1, x2, x3`.  Two operators drive everything:
//! the contraction `Delta = sum_i d/de_i ⊗ d/dx_i`, whose kernel in bidegree
//! `(a, b)` is the irreducible `V(a, b)`, and multiplication `delta` by the
//! invariant element `sum_i e_i ⊗ x_i`.  On bidegree `(a, b)` they satisfy
//! `Delta∘delta - delta∘Delta = (a + b + 3)·id`.
//!
//! The projector onto the `i`-th summand `V(e-i, f-i)` of `Sym^e ⊗ Sym^f∨`
//! is a polynomial `pi_i = sum_j mu_{i,j} delta^j Delta^j` with rational
//! `mu_{i,j}`, computed bottom-up along the diagonal `(e-k, f-k)` via
//!
//! ```text
//!   pi_{e,f,i} = lambda_i * delta^i ∘ pi_{e-i,f-i} ∘ Delta^i ,
//!   pi_{e,f,0} = id - sum_{i>=1} pi_{e,f,i} ,
//! ```
//!
//! where `1/lambda_i` is the scalar by which `pi_{e-i,f-i} ∘ Delta^i ∘
//! delta^i` acts on the highest-weight monomial `e1^(e-i) ⊗ x3^(f-i)`.  That
//! scalar is found symbolically; the computation never leaves the small
//! subspace spanned by `delta^k` images of the highest-weight monomial.
//!
//! For `e <= f` and a component set `I`, evaluating `sum_{i in I} pi_i` on a
//! pure tensor `u^e ⊗ v^f` at a point pair `(p, q)` collapses to
//!
//! ```text
//!   v(q)^(f-e) * chi( <p,q>·v(u), u(p)·v(q) )
//! ```
//!
//! with a single bivariate polynomial `chi(x, y) = sum_j c_j x^j y^(e-j)`
//! whose coefficients carry the `mu`'s times falling factorials.  `chi` is
//! what the finite-field layer tabulates.

use std::collections::{BTreeMap, HashMap};
use std::sync::{Arc, RwLock};

use num_bigint::BigInt;
use num_traits::{One, Signed, Zero};
use serde::ser::SerializeSeq;
use serde::{Serialize, Serializer};

use crate::error::{Error, Result};

/// Exact scalar type for all projector arithmetic.
pub type Rational = num_rational::BigRational;

fn rat(n: i64, d: i64) -> Rational {
    Rational::new(BigInt::from(n), BigInt::from(d))
}

/// Exponent triple of a monomial in three variables.
pub type Mono = [u16; 3];

/// A bihomogeneous element of bidegree `(a, b)`: a sparse map from pairs of
/// monomials (vector side, covector side) to nonzero rationals.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct BiForm {
    a: u32,
    b: u32,
    terms: BTreeMap<(Mono, Mono), Rational>,
}

fn deg(m: Mono) -> u32 {
    m.iter().map(|&x| x as u32).sum()
}

impl BiForm {
    /// The zero form of bidegree `(a, b)`.
    pub fn zero(a: u32, b: u32) -> Self {
        BiForm { a, b, terms: BTreeMap::new() }
    }

    pub fn bidegree(&self) -> (u32, u32) {
        (self.a, self.b)
    }

    pub fn is_zero(&self) -> bool {
        self.terms.is_empty()
    }

    pub fn terms(&self) -> impl Iterator<Item = (&(Mono, Mono), &Rational)> {
        self.terms.iter()
    }

    /// Add `c * e^alpha ⊗ x^beta`, dropping the pair if it cancels.
    pub fn add_term(&mut self, alpha: Mono, beta: Mono, c: Rational) {
        debug_assert_eq!(deg(alpha), self.a);
        debug_assert_eq!(deg(beta), self.b);
        if c.is_zero() {
            return;
        }
        match self.terms.entry((alpha, beta)) {
            std::collections::btree_map::Entry::Vacant(v) => {
                v.insert(c);
            }
            std::collections::btree_map::Entry::Occupied(mut o) => {
                *o.get_mut() += c;
                if o.get().is_zero() {
                    o.remove();
                }
            }
        }
    }

    /// The highest-weight monomial `e1^a ⊗ x3^b`.
    pub fn highest_weight(a: u32, b: u32) -> Self {
        let mut t = BiForm::zero(a, b);
        t.add_term([a as u16, 0, 0], [0, 0, b as u16], Rational::one());
        t
    }

    /// Expansion of the pure tensor `u^e ⊗ v^f`.
    pub fn pure_power(u: &[Rational; 3], v: &[Rational; 3], e: u32, f: u32) -> Self {
        let mut t = BiForm::zero(0, 0);
        t.add_term([0; 3], [0; 3], Rational::one());
        for _ in 0..e {
            t = t.mul_linear(u, true);
        }
        for _ in 0..f {
            t = t.mul_linear(v, false);
        }
        t
    }

    fn mul_linear(&self, w: &[Rational; 3], vector_side: bool) -> Self {
        let (a, b) = if vector_side { (self.a + 1, self.b) } else { (self.a, self.b + 1) };
        let mut out = BiForm::zero(a, b);
        for ((al, be), c) in &self.terms {
            for i in 0..3 {
                if w[i].is_zero() {
                    continue;
                }
                let (mut al2, mut be2) = (*al, *be);
                if vector_side {
                    al2[i] += 1;
                } else {
                    be2[i] += 1;
                }
                out.add_term(al2, be2, c * &w[i]);
            }
        }
        out
    }

    pub fn scaled(&self, c: &Rational) -> Self {
        if c.is_zero() {
            return BiForm::zero(self.a, self.b);
        }
        BiForm {
            a: self.a,
            b: self.b,
            terms: self.terms.iter().map(|(k, v)| (*k, v * c)).collect(),
        }
    }

    pub fn add_assign(&mut self, other: &BiForm) {
        debug_assert_eq!((self.a, self.b), (other.a, other.b));
        for ((al, be), c) in &other.terms {
            self.add_term(*al, *be, c.clone());
        }
    }

    /// Apply the contraction `Delta`, lowering bidegree to `(a-1, b-1)`.
    pub fn contract(&self) -> Self {
        debug_assert!(self.is_zero() || self.a.min(self.b) > 0);
        let mut out = BiForm::zero(self.a.saturating_sub(1), self.b.saturating_sub(1));
        for ((al, be), c) in &self.terms {
            for i in 0..3 {
                if al[i] > 0 && be[i] > 0 {
                    let (mut al2, mut be2) = (*al, *be);
                    al2[i] -= 1;
                    be2[i] -= 1;
                    out.add_term(al2, be2, c * rat((al[i] as i64) * (be[i] as i64), 1));
                }
            }
        }
        out
    }

    /// Multiply by the invariant `sum_i e_i ⊗ x_i`, raising bidegree.
    pub fn mul_invariant(&self) -> Self {
        let mut out = BiForm::zero(self.a + 1, self.b + 1);
        for ((al, be), c) in &self.terms {
            for i in 0..3 {
                let (mut al2, mut be2) = (*al, *be);
                al2[i] += 1;
                be2[i] += 1;
                out.add_term(al2, be2, c.clone());
            }
        }
        out
    }

    /// Evaluate at a point pair: substitute `e_i -> p_i`, `x_i -> q_i`.
    pub fn eval(&self, p: &[Rational; 3], q: &[Rational; 3]) -> Rational {
        let mut total = Rational::zero();
        for ((al, be), c) in &self.terms {
            let mut t = c.clone();
            for i in 0..3 {
                for _ in 0..al[i] {
                    t *= &p[i];
                }
                for _ in 0..be[i] {
                    t *= &q[i];
                }
            }
            total += t;
        }
        total
    }

    /// Apply `sum_j coeffs[j] * delta^j Delta^j` to this form.
    pub fn apply_diagonal_op(&self, coeffs: &[Rational]) -> Self {
        let mut out = self.scaled(&coeffs[0]);
        let mut lowered = self.clone();
        for c in &coeffs[1..] {
            lowered = lowered.contract();
            if lowered.is_zero() {
                break;
            }
            if c.is_zero() {
                continue;
            }
            let mut raised = lowered.clone();
            for _ in 0..(deg_gap(self, &lowered)) {
                raised = raised.mul_invariant();
            }
            out.add_assign(&raised.scaled(c));
        }
        out
    }
}

fn deg_gap(top: &BiForm, low: &BiForm) -> u32 {
    top.a - low.a
}

/// Coefficients `mu_{i,j}` of the projector onto the `i`-th summand of
/// `Sym^e ⊗ Sym^f∨`, as the operator `sum_j mu[j] * delta^j Delta^j`.
#[derive(Clone, Debug, PartialEq)]
pub struct ProjectorCoeffs {
    pub e: u32,
    pub f: u32,
    pub i: u32,
    pub mu: Vec<Rational>,
}

type MuCache = HashMap<(u32, u32), Arc<Vec<Rational>>>;

static MU_ZERO: RwLock<Option<MuCache>> = RwLock::new(None);

/// `1/lambda_i` at level `(a, b)`, found symbolically: apply `delta^i`, then
/// `Delta^i`, then the level-`(a, b)` kernel projector to the highest-weight
/// monomial and read off the scalar.
fn inv_lambda_symbolic(a: u32, b: u32, i: u32, mu_low: &[Rational]) -> Rational {
    let hw = BiForm::highest_weight(a, b);
    let mut t = hw.clone();
    for _ in 0..i {
        t = t.mul_invariant();
    }
    for _ in 0..i {
        t = t.contract();
    }
    let projected = t.apply_diagonal_op(mu_low);
    // the result is a multiple of the highest-weight monomial
    let key = ([a as u16, 0, 0], [0, 0, b as u16]);
    let scalar = projected.terms.get(&key).cloned().unwrap_or_else(Rational::zero);
    debug_assert_eq!(projected, hw.scaled(&scalar));
    scalar
}

/// Closed-form `1/lambda_i` at level `(a, b)`:
/// `i! * prod_{k=1..i} ((a-i) + (b-i) + k + 2)`.  Cross-check for the
/// symbolic route.
pub fn inv_lambda_product(a: u32, b: u32, i: u32) -> Rational {
    let s = (a + b - 2 * i) as i64;
    let mut acc = BigInt::one();
    for k in 1..=i as i64 {
        acc *= BigInt::from(k * (s + k + 2));
    }
    Rational::from_integer(acc)
}

/// Kernel-projector coefficients `mu_{0,j}` at level `(a, b)`, memoized.
/// Levels are filled bottom-up along the diagonal so lookups never recurse.
fn mu_zero(a: u32, b: u32) -> Arc<Vec<Rational>> {
    if let Some(cache) = MU_ZERO.read().unwrap().as_ref() {
        if let Some(v) = cache.get(&(a, b)) {
            return v.clone();
        }
    }
    let m = a.min(b);
    for k in (0..=m).rev() {
        let (la, lb) = (a - k, b - k);
        if MU_ZERO.read().unwrap().as_ref().is_some_and(|c| c.contains_key(&(la, lb))) {
            continue;
        }
        let level_min = la.min(lb);
        let mut out = vec![Rational::zero(); level_min as usize + 1];
        out[0] = Rational::one();
        for j in 1..=level_min {
            let mut s = Rational::zero();
            for i in 1..=j {
                let low = mu_zero_cached(la - i, lb - i);
                let inv = inv_lambda_symbolic(la - i, lb - i, i, &low);
                debug_assert_eq!(inv, inv_lambda_product(la, lb, i));
                s += low[(j - i) as usize].clone() / inv;
            }
            out[j as usize] = -s;
        }
        MU_ZERO
            .write()
            .unwrap()
            .get_or_insert_with(HashMap::new)
            .insert((la, lb), Arc::new(out));
    }
    mu_zero_cached(a, b)
}

fn mu_zero_cached(a: u32, b: u32) -> Arc<Vec<Rational>> {
    MU_ZERO
        .read()
        .unwrap()
        .as_ref()
        .and_then(|c| c.get(&(a, b)).cloned())
        .expect("mu cache filled bottom-up")
}

/// Projector coefficients for the `i`-th summand of `Sym^e ⊗ Sym^f∨`.
pub fn projector_coeffs(e: u32, f: u32, i: u32) -> Result<ProjectorCoeffs> {
    let m = e.min(f);
    if i > m {
        return Err(Error::InvalidInput(format!(
            "component index {i} exceeds min(e, f) = {m}"
        )));
    }
    let mu = if i == 0 {
        mu_zero(e, f).as_ref().clone()
    } else {
        let low = mu_zero(e - i, f - i);
        let lam = inv_lambda_symbolic(e - i, f - i, i, &low).recip();
        let mut mu = vec![Rational::zero(); m as usize + 1];
        for j in i..=m {
            mu[j as usize] = &lam * &low[(j - i) as usize];
        }
        mu
    };
    Ok(ProjectorCoeffs { e, f, i, mu })
}

fn serialize_rationals<S: Serializer>(v: &[Rational], s: S) -> std::result::Result<S::Ok, S::Error> {
    let mut seq = s.serialize_seq(Some(v.len()))?;
    for r in v {
        seq.serialize_element(&[r.numer().to_string(), r.denom().to_string()])?;
    }
    seq.end()
}

/// The evaluation polynomial `chi(x, y) = sum_j coeffs[j] x^j y^(e-j)` of a
/// component sum, with `coeffs[j] = sum_{i in I} mu_{i,j} * e!/(e-j)! *
/// f!/(f-j)!`.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct ChiPoly {
    pub e: u32,
    pub f: u32,
    pub components: Vec<u32>,
    #[serde(serialize_with = "serialize_rationals")]
    pub coeffs: Vec<Rational>,
    /// Largest prime factor over all coefficient denominators; any field
    /// characteristic above this (and above `f`) can invert them.
    #[serde(skip)]
    pub denom_prime_bound: u64,
}

/// Build `chi` for `psi = sum_{i in I} pi_i` on `Sym^e ⊗ Sym^f∨`; requires
/// `e <= f` and strictly increasing `I` within `0..=e`.
pub fn chi_poly(e: u32, f: u32, components: &[u32]) -> Result<ChiPoly> {
    if e > f {
        return Err(Error::InvalidInput(format!(
            "chi needs e <= f, got e={e}, f={f}"
        )));
    }
    if !components.windows(2).all(|w| w[0] < w[1]) || components.last().is_some_and(|&i| i > e) {
        return Err(Error::InvalidInput(
            "components must be strictly increasing within 0..=e".into(),
        ));
    }
    let mut mu_total = vec![Rational::zero(); e as usize + 1];
    for &i in components {
        let pc = projector_coeffs(e, f, i)?;
        for (t, c) in mu_total.iter_mut().zip(pc.mu) {
            *t += c;
        }
    }
    let mut coeffs = Vec::with_capacity(e as usize + 1);
    let mut falling = Rational::one();
    for j in 0..=e {
        if j > 0 {
            falling *= rat(((e - j + 1) as i64) * ((f - j + 1) as i64), 1);
        }
        coeffs.push(&mu_total[j as usize] * &falling);
    }
    let denom_prime_bound = coeffs
        .iter()
        .map(|c| largest_prime_factor(c.denom()))
        .max()
        .unwrap_or(1);
    debug_assert!(denom_prime_bound <= (e + f + 2) as u64);
    Ok(ChiPoly { e, f, components: components.to_vec(), coeffs, denom_prime_bound })
}

/// Largest prime factor of a denominator.  Denominators here only ever carry
/// small primes, so trial division terminates immediately; a huge surviving
/// cofactor would mean a bug upstream and is reported as its own "factor".
fn largest_prime_factor(n: &BigInt) -> u64 {
    let mut n = n.abs();
    let one = BigInt::one();
    let mut best = 1u64;
    let mut d = 2u64;
    while n > one {
        if let Some(small) = n.to_u64_digits().1.first().copied().filter(|_| n.bits() <= 64) {
            // fits in u64: finish natively
            let mut m = small;
            while m > 1 {
                while m % d == 0 {
                    best = best.max(d);
                    m /= d;
                }
                d += 1;
                if d * d > m && m > 1 {
                    best = best.max(m);
                    break;
                }
            }
            return best;
        }
        let db = BigInt::from(d);
        if (&n % &db).is_zero() {
            best = best.max(d);
            n /= db;
        } else {
            d += 1;
        }
    }
    best
}

/// `delta^i Delta^i (u^a ⊗ v^b)` evaluated at the point pair `(p, q)`:
/// `a!/(a-i)! * b!/(b-i)! * <p,q>^i * v(u)^i * u(p)^(a-i) * v(q)^(b-i)`.
pub fn eval_delta_power(
    a: u32,
    b: u32,
    i: u32,
    u: &[Rational; 3],
    v: &[Rational; 3],
    p: &[Rational; 3],
    q: &[Rational; 3],
) -> Result<Rational> {
    if i > a.min(b) {
        return Err(Error::InvalidInput(format!(
            "power {i} exceeds min(a, b) = {}",
            a.min(b)
        )));
    }
    let dot = |x: &[Rational; 3], y: &[Rational; 3]| {
        x.iter().zip(y).map(|(a, b)| a * b).sum::<Rational>()
    };
    let mut out = Rational::one();
    for k in 0..i {
        out *= rat(((a - k) as i64) * ((b - k) as i64), 1);
    }
    let (dpq, vu, up, vq) = (dot(p, q), dot(v, u), dot(u, p), dot(v, q));
    for _ in 0..i {
        out *= &dpq;
        out *= &vu;
    }
    for _ in 0..(a - i) {
        out *= &up;
    }
    for _ in 0..(b - i) {
        out *= &vq;
    }
    Ok(out)
}

/// Evaluate `chi` exactly at rational arguments (reference route for tests
/// and the finite-field reduction).
pub fn chi_eval(chi: &ChiPoly, x: &Rational, y: &Rational) -> Rational {
    let mut total = Rational::zero();
    for (j, c) in chi.coeffs.iter().enumerate() {
        let mut t = c.clone();
        for _ in 0..j {
            t *= x;
        }
        for _ in 0..(chi.e as usize - j) {
            t *= y;
        }
        total += t;
    }
    total
}
