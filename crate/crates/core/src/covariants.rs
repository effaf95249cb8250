//! Spanning certificates built from bracket invariants of power sums.
//!
//! For degrees d = 3n+1 the quartic-valued covariant of a power sum
//! `sum_t a_t L_t^d` is the quadruple sum of
//! `a_t1 a_t2 a_t3 a_t4 * I(L_t1,..,L_t4)^n * (L_t1 L_t2 L_t3 L_t4)`,
//! where `I` is the product of the four 3x3 coefficient determinants; for
//! d = 3n+2 the factor forms are squared and the value is an octic.  The
//! certificate fixes one power sum g, sweeps interpolation data (nodes b,
//! a pencil direction, an off-node point c), evaluates the covariant on
//! each fiber element f(c) + g, and asks the values to span the full space
//! of quartics (dimension 15) resp. octics (dimension 45).  A full-rank
//! coefficient matrix mod p lifts to characteristic zero.
//!
//! The fiber evaluation never expands f(c) + g as one big power sum:
//! summation against the interpolation weights cancels every quadruple
//! with two or more distinct pencil slots (their node dependence has
//! per-variable degree at most K-1, which the weights annihilate), so the
//! value splits into a K * |g|^3 cross term plus the covariant of the
//! (|g|+1)-term form {-(cx+y)^d} union g.  The split is exact, scalar 1;
//! `split_matches_full_expansion` pins that down.

use std::time::Instant;

use rayon::prelude::*;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::ffcore::{Fp, SampleStream};
use crate::genericity::Status;
use crate::ranklab::{rank_fp, DenseMatrixFp};
use crate::STAGE_LOG_TARGET;

/// A linear form in three variables, by its coefficient triple.
pub type LinForm = [u64; 3];

/// Number of terms in the fixed fiber base point g.
pub const DEFAULT_G_TERMS: usize = 20;
/// Escalations of `g_terms` before a spanning check gives up.
pub const MAX_ESCALATIONS: u32 = 2;

/// `sum_t a_t * L_t^degree`.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct PowerSumForm {
    degree: u32,
    terms: Vec<(u64, LinForm)>,
}

impl PowerSumForm {
    pub fn new(degree: u32, terms: Vec<(u64, LinForm)>) -> Result<Self> {
        if degree == 0 {
            return Err(Error::InvalidInput("power sum degree must be positive".into()));
        }
        if terms.is_empty() {
            return Err(Error::InvalidInput("power sum needs at least one term".into()));
        }
        Ok(PowerSumForm { degree, terms })
    }

    pub fn degree(&self) -> u32 {
        self.degree
    }

    pub fn terms(&self) -> &[(u64, LinForm)] {
        &self.terms
    }

    pub fn eval(&self, fp: Fp, x: &[u64; 3]) -> u64 {
        self.terms.iter().fold(0, |acc, (a, l)| {
            fp.add(acc, fp.mul(*a, fp.pow(fp.dot3(l, x), self.degree as u64)))
        })
    }
}

/// Nodes, pencil direction, and evaluation point for one fiber element:
/// with y = lambda*x2 + mu*x3 the pencil forms are `l_i = b_i*x1 + y` and
/// the apex is `c*x1 + y`.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct InterpolationData {
    b: Vec<u64>,
    lambda: u64,
    mu: u64,
    c: u64,
}

impl InterpolationData {
    pub fn new(b: Vec<u64>, lambda: u64, mu: u64, c: u64, fp: Fp) -> Result<Self> {
        let b: Vec<u64> = b.iter().map(|&x| fp.reduce(x)).collect();
        let (lambda, mu, c) = (fp.reduce(lambda), fp.reduce(mu), fp.reduce(c));
        for (i, &bi) in b.iter().enumerate() {
            if b[..i].contains(&bi) {
                return Err(Error::DuplicateNode);
            }
            if bi == c {
                return Err(Error::CollidingC);
            }
        }
        if lambda == 0 && mu == 0 {
            return Err(Error::InvalidInput("pencil direction must be nonzero".into()));
        }
        Ok(InterpolationData { b, lambda, mu, c })
    }

    pub fn k(&self) -> usize {
        self.b.len()
    }

    pub fn nodes(&self) -> &[u64] {
        &self.b
    }

    pub fn c(&self) -> u64 {
        self.c
    }

    pub fn pencil_form(&self, i: usize) -> LinForm {
        [self.b[i], self.lambda, self.mu]
    }

    pub fn apex_form(&self) -> LinForm {
        [self.c, self.lambda, self.mu]
    }
}

/// Lagrange cardinal values at c: `w_i = prod_{j != i} (c - b_j)/(b_i - b_j)`.
/// Summing `w_i * h(b_i)` reproduces `h(c)` exactly for every polynomial `h`
/// of degree below `b.len()`.
pub fn interp_weights(b: &[u64], c: u64, fp: Fp) -> Result<Vec<u64>> {
    let b: Vec<u64> = b.iter().map(|&x| fp.reduce(x)).collect();
    let c = fp.reduce(c);
    for (i, &bi) in b.iter().enumerate() {
        if b[..i].contains(&bi) {
            return Err(Error::DuplicateNode);
        }
        if bi == c {
            return Err(Error::CollidingC);
        }
    }
    Ok((0..b.len())
        .map(|i| {
            let mut num = 1;
            let mut den = 1;
            for (j, &bj) in b.iter().enumerate() {
                if j != i {
                    num = fp.mul(num, fp.sub(c, bj));
                    den = fp.mul(den, fp.sub(b[i], bj));
                }
            }
            fp.mul(num, fp.inv(den))
        })
        .collect())
}

/// The fiber element over c: `f(c) = sum_i w_i * l_i^d - (cx+y)^d`, as a
/// (K+1)-term power sum whose last coefficient is -1.  Its expansion is
/// nonzero and divisible by x1^K.
pub fn build_fc(data: &InterpolationData, d: u32, fp: Fp) -> Result<PowerSumForm> {
    let k = data.k();
    if d as usize <= k {
        return Err(Error::InvalidInput(format!(
            "fiber construction needs degree above the node count, got d={d}, K={k}"
        )));
    }
    let w = interp_weights(data.nodes(), data.c(), fp)?;
    let mut terms: Vec<(u64, LinForm)> =
        (0..k).map(|i| (w[i], data.pencil_form(i))).collect();
    terms.push((fp.neg(1), data.apex_form()));
    PowerSumForm::new(d, terms)
}

fn det3(fp: Fp, r1: &LinForm, r2: &LinForm, r3: &LinForm) -> u64 {
    let t1 = fp.mul(r1[0], fp.sub(fp.mul(r2[1], r3[2]), fp.mul(r2[2], r3[1])));
    let t2 = fp.mul(r1[1], fp.sub(fp.mul(r2[2], r3[0]), fp.mul(r2[0], r3[2])));
    let t3 = fp.mul(r1[2], fp.sub(fp.mul(r2[0], r3[1]), fp.mul(r2[1], r3[0])));
    fp.add(fp.add(t1, t2), t3)
}

/// The quadruple bracket invariant: the product of the four 3x3 coefficient
/// determinants on the 3-element subsets, in argument order.  Symmetric under
/// all 24 permutations and zero whenever two arguments are proportional.
pub fn bracket_i(l1: &LinForm, l2: &LinForm, l3: &LinForm, l4: &LinForm, fp: Fp) -> u64 {
    fp.mul(
        fp.mul(det3(fp, l1, l2, l3), det3(fp, l1, l2, l4)),
        fp.mul(det3(fp, l1, l3, l4), det3(fp, l2, l3, l4)),
    )
}

/// A dense ternary form of degree 4 or 8.  Coefficients are stored over the
/// monomials x1^i x2^j x3^k in graded order (i descending, then j), so the
/// coefficient of x1^i x2^j sits at `(g-i)(g-i+1)/2 + (g-i-j)`.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct TernaryForm {
    degree: u32,
    coeffs: Vec<u64>,
}

#[inline]
fn midx(g: u32, i: u32, j: u32) -> usize {
    let r = g - i;
    (r * (r + 1) / 2 + (r - j)) as usize
}

fn mono_count(g: u32) -> usize {
    ((g + 1) * (g + 2) / 2) as usize
}

impl TernaryForm {
    pub fn zero(degree: u32) -> Result<Self> {
        if degree != 4 && degree != 8 {
            return Err(Error::InvalidInput(format!(
                "covariant values have degree 4 or 8, got {degree}"
            )));
        }
        Ok(TernaryForm { degree, coeffs: vec![0; mono_count(degree)] })
    }

    pub fn degree(&self) -> u32 {
        self.degree
    }

    pub fn coeffs(&self) -> &[u64] {
        &self.coeffs
    }

    pub fn is_zero(&self) -> bool {
        self.coeffs.iter().all(|&c| c == 0)
    }

    pub fn coeff(&self, i: u32, j: u32) -> u64 {
        self.coeffs[midx(self.degree, i, j)]
    }

    pub fn eval(&self, fp: Fp, x: &[u64; 3]) -> u64 {
        let g = self.degree;
        let mut total = 0;
        for i in 0..=g {
            for j in 0..=(g - i) {
                let c = self.coeffs[midx(g, i, j)];
                if c == 0 {
                    continue;
                }
                let m = fp.mul(
                    fp.pow(x[0], i as u64),
                    fp.mul(fp.pow(x[1], j as u64), fp.pow(x[2], (g - i - j) as u64)),
                );
                total = fp.add(total, fp.mul(c, m));
            }
        }
        total
    }

    /// Compose with a linear substitution: the result sends x to F(Ax).
    pub fn substitute(&self, a: &[[u64; 3]; 3], fp: Fp) -> TernaryForm {
        let g = self.degree;
        let mut out = vec![0u64; mono_count(g)];
        for i in 0..=g {
            for j in 0..=(g - i) {
                let c = self.coeffs[midx(g, i, j)];
                if c == 0 {
                    continue;
                }
                let mut cur = vec![c];
                let mut deg = 0;
                for (row, reps) in a.iter().zip([i, j, g - i - j]) {
                    for _ in 0..reps {
                        let mut next = vec![0u64; mono_count(deg + 1)];
                        mul_linear(fp, deg, &cur, row, &mut next);
                        cur = next;
                        deg += 1;
                    }
                }
                for (o, v) in out.iter_mut().zip(&cur) {
                    *o = fp.add(*o, *v);
                }
            }
        }
        TernaryForm { degree: g, coeffs: out }
    }
}

/// dst (degree g+1, zero-initialized) += src (degree g) times the form l.
fn mul_linear(fp: Fp, g: u32, src: &[u64], l: &LinForm, dst: &mut [u64]) {
    for i in 0..=g {
        for j in 0..=(g - i) {
            let v = src[midx(g, i, j)];
            if v == 0 {
                continue;
            }
            let up = midx(g + 1, i + 1, j);
            dst[up] = fp.add(dst[up], fp.mul(l[0], v));
            let right = midx(g + 1, i, j + 1);
            dst[right] = fp.add(dst[right], fp.mul(l[1], v));
            let back = midx(g + 1, i, j);
            dst[back] = fp.add(dst[back], fp.mul(l[2], v));
        }
    }
}

const DEG4: [(u32, u32); 15] = [
    (4, 0), (3, 1), (3, 0), (2, 2), (2, 1), (2, 0), (1, 3), (1, 2), (1, 1),
    (1, 0), (0, 4), (0, 3), (0, 2), (0, 1), (0, 0),
];

/// Reused expansion buffers; the quadruple loops never allocate.
struct Scratch {
    d2: [u64; 6],
    d3: [u64; 10],
    d4: [u64; 15],
    d8: [u64; 45],
}

impl Scratch {
    fn new() -> Scratch {
        Scratch { d2: [0; 6], d3: [0; 10], d4: [0; 15], d8: [0; 45] }
    }
}

/// out += scalar * (l1 l2 l3 l4)^w.
fn add_quad_product(
    fp: Fp,
    out: &mut [u64],
    sc: &mut Scratch,
    scalar: u64,
    ls: [&LinForm; 4],
    w: u32,
) {
    sc.d2.fill(0);
    mul_linear(fp, 1, ls[0], ls[1], &mut sc.d2);
    sc.d3.fill(0);
    mul_linear(fp, 2, &sc.d2, ls[2], &mut sc.d3);
    sc.d4.fill(0);
    mul_linear(fp, 3, &sc.d3, ls[3], &mut sc.d4);
    if w == 1 {
        for (o, &v) in out.iter_mut().zip(&sc.d4) {
            *o = fp.add(*o, fp.mul(scalar, v));
        }
        return;
    }
    sc.d8.fill(0);
    for a in 0..15 {
        let va = sc.d4[a];
        if va == 0 {
            continue;
        }
        let (ia, ja) = DEG4[a];
        for b in 0..15 {
            let vb = sc.d4[b];
            if vb == 0 {
                continue;
            }
            let (ib, jb) = DEG4[b];
            let t = midx(8, ia + ib, ja + jb);
            sc.d8[t] = fp.add(sc.d8[t], fp.mul(va, vb));
        }
    }
    for (o, &v) in out.iter_mut().zip(&sc.d8) {
        *o = fp.add(*o, fp.mul(scalar, v));
    }
}

fn check_shape(degree: u32, n: u32, w: u32) -> Result<()> {
    if w != 1 && w != 2 {
        return Err(Error::InvalidInput(format!("weight must be 1 or 2, got {w}")));
    }
    if n == 0 {
        return Err(Error::InvalidInput("bracket exponent must be positive".into()));
    }
    if degree != 3 * n + w {
        return Err(Error::InvalidInput(format!(
            "degree mismatch: a weight-{w} covariant with bracket exponent {n} needs degree {}, got {degree}",
            3 * n + w
        )));
    }
    Ok(())
}

/// The covariant of a power sum, over ordered quadruples of its terms:
/// `sum a_t1 a_t2 a_t3 a_t4 * I(..)^n * (L_t1 L_t2 L_t3 L_t4)^w`.  Ordered
/// quadruples with a repeated index kill the bracket, so the sum runs over
/// index combinations with multiplicity 24.
pub fn cov_quad(fm: &PowerSumForm, n: u32, w: u32, fp: Fp) -> Result<TernaryForm> {
    check_shape(fm.degree(), n, w)?;
    let mut out = TernaryForm::zero(4 * w)?;
    let terms = fm.terms();
    let mut sc = Scratch::new();
    let m24 = fp.reduce(24);
    for t1 in 0..terms.len() {
        for t2 in (t1 + 1)..terms.len() {
            for t3 in (t2 + 1)..terms.len() {
                for t4 in (t3 + 1)..terms.len() {
                    let (a1, l1) = &terms[t1];
                    let (a2, l2) = &terms[t2];
                    let (a3, l3) = &terms[t3];
                    let (a4, l4) = &terms[t4];
                    let iv = bracket_i(l1, l2, l3, l4, fp);
                    if iv == 0 {
                        continue;
                    }
                    let mut s = fp.mul(fp.mul(*a1, *a2), fp.mul(*a3, *a4));
                    s = fp.mul(s, fp.pow(iv, n as u64));
                    s = fp.mul(s, m24);
                    if s == 0 {
                        continue;
                    }
                    add_quad_product(fp, &mut out.coeffs, &mut sc, s, [l1, l2, l3, l4], w);
                }
            }
        }
    }
    Ok(out)
}

/// The covariant of the fiber element f(c) + g without expanding it: the
/// interpolation weights annihilate every quadruple holding two or more
/// distinct pencil forms, leaving the cross term over (pencil form, three
/// g-terms) plus the covariant of `{-(cx+y)^d}` union g.
pub fn eval_cov_fiber(
    data: &InterpolationData,
    g: &PowerSumForm,
    n: u32,
    w: u32,
    fp: Fp,
) -> Result<TernaryForm> {
    check_shape(g.degree(), n, w)?;
    let d = g.degree();
    let k = data.k();
    if d as usize <= k {
        return Err(Error::InvalidInput(format!(
            "fiber construction needs degree above the node count, got d={d}, K={k}"
        )));
    }
    let weights = interp_weights(data.nodes(), data.c(), fp)?;

    let mut base_terms = vec![(fp.neg(1), data.apex_form())];
    base_terms.extend_from_slice(g.terms());
    let base = PowerSumForm::new(d, base_terms)?;
    let mut out = cov_quad(&base, n, w, fp)?;

    let gt = g.terms();
    let mut sc = Scratch::new();
    let m24 = fp.reduce(24);
    for (i, wi) in weights.iter().enumerate() {
        let li = data.pencil_form(i);
        for j in 0..gt.len() {
            for k2 in (j + 1)..gt.len() {
                for p in (k2 + 1)..gt.len() {
                    let (aj, mj) = &gt[j];
                    let (ak, mk) = &gt[k2];
                    let (ap, mp) = &gt[p];
                    let iv = bracket_i(&li, mj, mk, mp, fp);
                    if iv == 0 {
                        continue;
                    }
                    let mut s = fp.mul(*wi, fp.mul(fp.mul(*aj, *ak), *ap));
                    s = fp.mul(s, fp.pow(iv, n as u64));
                    s = fp.mul(s, m24);
                    if s == 0 {
                        continue;
                    }
                    add_quad_product(fp, &mut out.coeffs, &mut sc, s, [&li, mj, mk, mp], w);
                }
            }
        }
    }
    Ok(out)
}

/// S or T family of spanning checks.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
pub enum CaseTag {
    S,
    T,
}

/// Shape parameters of the check at degree d.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct CaseParams {
    pub tag: CaseTag,
    pub n: u32,
    pub w: u32,
    pub k: usize,
    pub needed: u32,
}

/// Resolve the check family: quartic-valued for d = 1 mod 3 (d >= 19,
/// target 15), octic-valued for d = 2 mod 3 (d >= 35, target 45).
pub fn case_for(d: u32) -> Result<CaseParams> {
    match d % 3 {
        1 if d >= 19 => {
            let n = (d - 1) / 3;
            Ok(CaseParams { tag: CaseTag::S, n, w: 1, k: (2 * n + 3) as usize, needed: 15 })
        }
        2 if d >= 35 => {
            let n = (d - 2) / 3;
            Ok(CaseParams { tag: CaseTag::T, n, w: 2, k: (2 * n + 5) as usize, needed: 45 })
        }
        _ => Err(Error::InvalidInput(format!(
            "no spanning check at degree {d}: need d = 1 mod 3 with d >= 19 or d = 2 mod 3 with d >= 35"
        ))),
    }
}

/// Machine-readable outcome of a spanning check.
#[derive(Clone, Debug, Serialize)]
#[serde(rename_all = "camelCase")]
pub struct SpanReport {
    pub d: u32,
    pub case_tag: CaseTag,
    pub prime: u64,
    pub seed: u64,
    pub samples: usize,
    pub g_terms: usize,
    pub rank: u32,
    pub needed: u32,
    pub status: Status,
    pub wall_seconds: f64,
}

fn sample_interpolation(
    seed: u64,
    attempt: u32,
    sample: usize,
    k: usize,
    fp: Fp,
) -> Result<InterpolationData> {
    let nodes = SampleStream::new(seed, &format!("nodes/{attempt}/{sample}"), fp);
    let mut vals: Vec<u64> = Vec::with_capacity(k + 1);
    let mut j = 0u64;
    while vals.len() < k + 1 {
        if j > 100_000 {
            return Err(Error::Internal("node sampling failed to find distinct values".into()));
        }
        let x = nodes.element(j);
        j += 1;
        if !vals.contains(&x) {
            vals.push(x);
        }
    }
    let c = vals.pop().expect("k+1 values drawn");
    let pencil = SampleStream::new(seed, &format!("pencil/{attempt}/{sample}"), fp);
    let mut t = 0u64;
    let (lambda, mu) = loop {
        let (la, mu) = (pencil.element(2 * t), pencil.element(2 * t + 1));
        if la != 0 || mu != 0 {
            break (la, mu);
        }
        t += 1;
    };
    InterpolationData::new(vals, lambda, mu, c, fp)
}

/// Certify that covariant values along one fiber span the whole target
/// space.  One fixed g per check; on a rank shortfall the g is regrown with
/// twice the terms, up to [`MAX_ESCALATIONS`] times.  PASS lifts to a
/// characteristic-zero dominance certificate; INCONCLUSIVE disproves
/// nothing.
pub fn span_check(
    d: u32,
    prime: u64,
    seed: u64,
    samples: usize,
    g_terms: usize,
) -> Result<SpanReport> {
    let t0 = Instant::now();
    let cp = case_for(d)?;
    if samples < cp.needed as usize {
        return Err(Error::InvalidInput(format!(
            "{} samples cannot witness a rank-{} span",
            samples, cp.needed
        )));
    }
    if g_terms == 0 {
        return Err(Error::InvalidInput("the fixed g needs at least one term".into()));
    }
    let fp = Fp::new(prime)?;

    let mut g_terms_now = g_terms;
    let mut rank = 0;
    for attempt in 0..=MAX_ESCALATIONS {
        let gs = SampleStream::new(seed, &format!("g/{attempt}"), fp);
        let terms: Vec<(u64, LinForm)> =
            (0..g_terms_now).map(|t| (1, gs.vec3(t as u64).0)).collect();
        let g = PowerSumForm::new(d, terms)?;
        let rows: Vec<Vec<u64>> = (0..samples)
            .into_par_iter()
            .map(|s| -> Result<Vec<u64>> {
                let data = sample_interpolation(seed, attempt, s, cp.k, fp)?;
                let t = eval_cov_fiber(&data, &g, cp.n, cp.w, fp)?;
                Ok(t.coeffs().to_vec())
            })
            .collect::<Result<_>>()?;
        let m = DenseMatrixFp::from_rows(fp, rows)?;
        rank = rank_fp(&m).rank;
        log::info!(
            target: STAGE_LOG_TARGET,
            "stage=span d={d} attempt={attempt} g_terms={g_terms_now} rank={rank} needed={} secs={:.3}",
            cp.needed,
            t0.elapsed().as_secs_f64()
        );
        if rank == cp.needed {
            break;
        }
        if attempt < MAX_ESCALATIONS {
            g_terms_now *= 2;
        }
    }
    let status = if rank == cp.needed { Status::Pass } else { Status::Inconclusive };
    Ok(SpanReport {
        d,
        case_tag: cp.tag,
        prime,
        seed,
        samples,
        g_terms: g_terms_now,
        rank,
        needed: cp.needed,
        status,
        wall_seconds: t0.elapsed().as_secs_f64(),
    })
}
