//! The double-bundle genericity certificate.
//!
//! For a candidate triple (d, e, I) the bilinear map under test sends a pair
//! (degree-d covector power, degree-e vector power) to the component sum
//! picked out by I.  Rationality of the associated quotient needs a point
//! pair (x0, y0) with the map surjective onto W from both sides and zero at
//! the pair itself.  This module certifies exactly that over GF(p):
//!
//! 1. sample x0 as a weighted sum of t covector powers;
//! 2. sample a basis of U out of vector powers (verified by an evaluation
//!    rank check);
//! 3. build A with A[s, k] = (the image of (x0, u_s) evaluated at point k);
//!    rank A = dim W forces the image of (x0, U) to be all of W;
//! 4. the left kernel of A is then one-dimensional and yields y0;
//! 5. a second matrix N built from fresh covector powers against y0
//!    certifies surjectivity from the other side;
//! 6. the pair value is checked to vanish at 64 fresh points.
//!
//! Every matrix entry is an integer-point evaluation of an exact rational
//! expression with a denominator invertible mod p, so full rank mod p lifts
//! to full rank in characteristic zero: PASS is a rigorous certificate,
//! while INCONCLUSIVE never disproves anything.

use std::path::PathBuf;
use std::time::Instant;

use serde::Serialize;

use crate::error::{Error, Result};
use crate::ffcore::{reduce_chi, ChiTable, Fp, PointPair, SampleStream};
use crate::projops::{chi_eval, chi_poly, projector_coeffs, BiForm, Rational};
use crate::ranklab::{nullspace_fp, rank_fp, rank_fp_checkpointed, DenseMatrixFp, DEFAULT_PANEL};
use crate::rep::Candidate;
use crate::STAGE_LOG_TARGET;

/// Extra evaluation points beyond dim W, absorbing unlucky functionals.
pub const DEFAULT_MARGIN: usize = 32;
/// Extra power-sum terms in x0 beyond dim W.
pub const DEFAULT_T_EXTRA: usize = 33;
pub const DEFAULT_MAX_RETRIES: u32 = 3;
/// Fresh points for the final vanishing check.
pub const ZERO_CHECK_POINTS: usize = 64;

const MAX_BASIS_TRIES: u64 = 8;

/// Parameters of one certification run.
#[derive(Clone, Debug)]
pub struct GenericityInstance {
    pub candidate: Candidate,
    pub prime: u64,
    pub seed: u64,
    pub n_points: usize,
    pub t_terms: usize,
    pub margin: usize,
    pub max_retries: u32,
    /// When set, the two big rank computations persist their state here and
    /// pick up where they left off after an interruption.
    pub checkpoint_dir: Option<PathBuf>,
}

impl GenericityInstance {
    pub fn new(candidate: Candidate, prime: u64, seed: u64) -> GenericityInstance {
        let dim_w = candidate.dim_w as usize;
        GenericityInstance {
            candidate,
            prime,
            seed,
            n_points: dim_w + DEFAULT_MARGIN,
            t_terms: dim_w + DEFAULT_T_EXTRA,
            margin: DEFAULT_MARGIN,
            max_retries: DEFAULT_MAX_RETRIES,
            checkpoint_dir: None,
        }
    }

    pub fn validate(&self) -> Result<()> {
        self.candidate.validate()?;
        let need = self.candidate.dim_w as usize + self.margin;
        if self.n_points < need {
            return Err(Error::InvalidInput(format!(
                "n_points = {} is below dim W + margin = {need}",
                self.n_points
            )));
        }
        Ok(())
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
pub enum Status {
    #[serde(rename = "PASS")]
    Pass,
    #[serde(rename = "INCONCLUSIVE")]
    Inconclusive,
}

/// Machine-readable outcome of a certification run.
#[derive(Clone, Debug, Serialize)]
#[serde(rename_all = "camelCase")]
pub struct Verdict {
    pub d: u32,
    pub e: u32,
    pub components: Vec<u32>,
    pub prime: u64,
    pub seed: u64,
    pub n_points: usize,
    pub t_terms: usize,
    pub rank_a: u32,
    pub kernel_dim: u32,
    pub rank_n: u32,
    pub zero_check: bool,
    pub status: Status,
    pub retries: u32,
    pub wall_seconds: f64,
}

/// The PASS predicate: both surjectivity ranks, a one-dimensional kernel,
/// and a clean vanishing check.
pub fn verdict_status(
    rank_a: u32,
    kernel_dim: u32,
    rank_n: u32,
    zero_check: bool,
    dim_w: u64,
) -> Status {
    if rank_a as u64 == dim_w && kernel_dim == 1 && rank_n as u64 == dim_w && zero_check {
        Status::Pass
    } else {
        Status::Inconclusive
    }
}

struct Attempt {
    t_terms: usize,
    rank_a: u32,
    kernel_dim: u32,
    rank_n: u32,
    zero_check: bool,
}

/// Run the full certificate for one instance.
pub fn run_check(inst: &GenericityInstance) -> Result<Verdict> {
    let t0 = Instant::now();
    inst.validate()?;
    let cand = &inst.candidate;
    let fp = Fp::new(inst.prime)?;
    let chi = chi_poly(cand.e, cand.d, &cand.components)?;
    let tbl = reduce_chi(&chi, fp)?;
    let dim_w = cand.dim_w;

    let mut t_terms = inst.t_terms;
    let mut retries = 0;
    let mut last: Option<Attempt> = None;
    for attempt in 0..=inst.max_retries {
        retries = attempt;
        let out = run_attempt(inst, &tbl, attempt, t_terms)?;
        let status = verdict_status(out.rank_a, out.kernel_dim, out.rank_n, out.zero_check, dim_w);
        last = Some(out);
        if status == Status::Pass {
            break;
        }
        t_terms = t_terms.saturating_mul(2);
    }
    let last = last.expect("at least one attempt runs");
    let status =
        verdict_status(last.rank_a, last.kernel_dim, last.rank_n, last.zero_check, dim_w);
    Ok(Verdict {
        d: cand.d,
        e: cand.e,
        components: cand.components.clone(),
        prime: inst.prime,
        seed: inst.seed,
        n_points: inst.n_points,
        t_terms: last.t_terms,
        rank_a: last.rank_a,
        kernel_dim: last.kernel_dim,
        rank_n: last.rank_n,
        zero_check: last.zero_check,
        status,
        retries,
        wall_seconds: t0.elapsed().as_secs_f64(),
    })
}

fn run_attempt(
    inst: &GenericityInstance,
    tbl: &ChiTable,
    r: u32,
    t_terms: usize,
) -> Result<Attempt> {
    let fp = tbl.fp();
    let (e, _) = tbl.degrees();
    let cand = &inst.candidate;
    let dim_u = cand.dim_u as usize;
    let dim_w = cand.dim_w;
    let n_points = inst.n_points;
    let seed = inst.seed;

    let xi_stream = SampleStream::new(seed, &format!("xi/{r}"), fp);
    let v_stream = SampleStream::new(seed, &format!("v/{r}"), fp);
    let xis: Vec<u64> = (0..t_terms).map(|j| xi_stream.nonzero(j as u64)).collect();
    let mut skips = 0;
    let vs: Vec<[u64; 3]> = (0..t_terms)
        .map(|j| {
            let (v, sk) = v_stream.vec3(j as u64);
            skips += sk;
            v
        })
        .collect();

    // A basis of U out of pure powers, certified by an evaluation rank check.
    let mut us: Vec<[u64; 3]> = Vec::new();
    let mut basis_ok = false;
    for round in 0..MAX_BASIS_TRIES {
        let u_stream = SampleStream::new(seed, &format!("u/{r}/{round}"), fp);
        us = (0..dim_u)
            .map(|s| {
                let (u, sk) = u_stream.vec3(s as u64);
                skips += sk;
                u
            })
            .collect();
        let bp_stream = SampleStream::new(seed, &format!("bpts/{r}/{round}"), fp);
        let bps: Vec<[u64; 3]> = (0..n_points)
            .map(|k| {
                let (b, sk) = bp_stream.vec3(k as u64);
                skips += sk;
                b
            })
            .collect();
        let b = DenseMatrixFp::fill_streamed(fp, dim_u, n_points, |s, k| {
            fp.pow(fp.dot3(&us[s], &bps[k]), e as u64)
        })?;
        if rank_fp(&b).rank as usize == dim_u {
            basis_ok = true;
            break;
        }
        log::info!(
            target: STAGE_LOG_TARGET,
            "stage=basis attempt={r} round={round} outcome=resample"
        );
    }
    if !basis_ok {
        return Err(Error::Internal(format!(
            "no pure-power basis of U after {MAX_BASIS_TRIES} rounds (d={}, e={e})",
            cand.d
        )));
    }
    if skips > 0 {
        log::info!(target: STAGE_LOG_TARGET, "stage=sample attempt={r} skips={skips}");
    }

    let pt_stream = SampleStream::new(seed, &format!("pts/{r}"), fp);
    let pts: Vec<PointPair> = (0..n_points)
        .map(|k| point_pair(&pt_stream, k as u64))
        .collect();

    let t_fill = Instant::now();
    let a = psi_matrix_rows_u(tbl, &us, &vs, &xis, &pts)?;
    log::info!(
        target: STAGE_LOG_TARGET,
        "stage=fill matrix=A rows={dim_u} cols={n_points} terms={t_terms} secs={:.3}",
        t_fill.elapsed().as_secs_f64()
    );
    let rank_a = checked_rank(inst, r, "A", &a)?;
    if rank_a as u64 > dim_w {
        return Err(Error::Internal(format!(
            "rank {rank_a} exceeds dim W = {dim_w}; the fill is inconsistent"
        )));
    }
    if (rank_a as u64) < dim_w {
        return Ok(Attempt {
            t_terms,
            rank_a,
            kernel_dim: (dim_u as u32) - rank_a,
            rank_n: 0,
            zero_check: false,
        });
    }

    let t_kernel = Instant::now();
    let kernel = nullspace_fp(&a.transpose());
    let kernel_dim = kernel.len() as u32;
    log::info!(
        target: STAGE_LOG_TARGET,
        "stage=kernel attempt={r} dim={kernel_dim} secs={:.3}",
        t_kernel.elapsed().as_secs_f64()
    );
    if kernel_dim != 1 {
        return Err(Error::Internal(format!(
            "left nullity {kernel_dim} contradicts rank {rank_a} of a {dim_u}-row matrix"
        )));
    }
    let eta = &kernel[0];

    let nv_stream = SampleStream::new(seed, &format!("nv/{r}"), fp);
    let npt_stream = SampleStream::new(seed, &format!("npts/{r}"), fp);
    let vs2: Vec<[u64; 3]> = (0..n_points).map(|j| nv_stream.vec3(j as u64).0).collect();
    let pts2: Vec<PointPair> = (0..n_points)
        .map(|k| point_pair(&npt_stream, k as u64))
        .collect();
    let t_fill_n = Instant::now();
    let n = psi_matrix_rows_v(tbl, &us, &vs2, eta, &pts2)?;
    log::info!(
        target: STAGE_LOG_TARGET,
        "stage=fill matrix=N rows={n_points} cols={n_points} secs={:.3}",
        t_fill_n.elapsed().as_secs_f64()
    );
    let rank_n = checked_rank(inst, r, "N", &n)?;
    if rank_n as u64 > dim_w {
        return Err(Error::Internal(format!(
            "rank {rank_n} of the second matrix exceeds dim W = {dim_w}"
        )));
    }

    let z_stream = SampleStream::new(seed, &format!("zpts/{r}"), fp);
    let mut zero_check = true;
    for k in 0..ZERO_CHECK_POINTS {
        let pt = point_pair(&z_stream, k as u64);
        let mut total = 0u64;
        for (v, &xi) in vs.iter().zip(&xis) {
            let mut inner = 0u64;
            for (u, &h) in us.iter().zip(eta) {
                inner = fp.add(inner, fp.mul(h, tbl.eval_psi(u, v, &pt)));
            }
            total = fp.add(total, fp.mul(xi, inner));
        }
        if total != 0 {
            zero_check = false;
            break;
        }
    }
    let sz_log10 = ZERO_CHECK_POINTS as f64
        * ((2.0 * cand.d as f64).log10() - (fp.modulus() as f64).log10());
    log::info!(
        target: STAGE_LOG_TARGET,
        "stage=verify attempt={r} zero_points={ZERO_CHECK_POINTS} pass={zero_check} sz_bound_log10={sz_log10:.1}"
    );

    Ok(Attempt { t_terms, rank_a, kernel_dim, rank_n, zero_check })
}

fn point_pair(stream: &SampleStream, k: u64) -> PointPair {
    PointPair { pcov: stream.vec3(2 * k).0, qvec: stream.vec3(2 * k + 1).0 }
}

fn checked_rank(
    inst: &GenericityInstance,
    r: u32,
    tag: &str,
    m: &DenseMatrixFp,
) -> Result<u32> {
    match &inst.checkpoint_dir {
        None => Ok(rank_fp(m).rank),
        Some(dir) => {
            let cand = &inst.candidate;
            let name = format!(
                "db-d{}-e{}-p{}-s{}-r{r}-{tag}.crkp",
                cand.d, cand.e, inst.prime, inst.seed
            );
            Ok(rank_fp_checkpointed(m, &dir.join(name), DEFAULT_PANEL)?.rank)
        }
    }
}

/// Matrix with rows swept by the vector powers: entry (s, k) is
/// `sum_j w[j] * psi(u_s, v_j)(pt_k)`.
fn psi_matrix_rows_u(
    tbl: &ChiTable,
    us: &[[u64; 3]],
    vs: &[[u64; 3]],
    weights: &[u64],
    pts: &[PointPair],
) -> Result<DenseMatrixFp> {
    let fp = tbl.fp();
    let (e, f) = tbl.degrees();
    assert!(f > e, "the fast fill assumes a strict degree drop");
    assert_eq!(vs.len(), weights.len());
    let (nu, nv, np) = (us.len(), vs.len(), pts.len());

    let dpq: Vec<u64> = pts.iter().map(|pt| fp.dot3(&pt.pcov, &pt.qvec)).collect();
    let mut upinv = vec![0u64; nu * np];
    let mut upe = vec![0u64; nu * np];
    for s in 0..nu {
        for k in 0..np {
            let up = fp.dot3(&us[s], &pts[k].pcov);
            if up != 0 {
                upinv[s * np + k] = fp.inv(up);
                upe[s * np + k] = fp.pow(up, e as u64);
            }
        }
    }
    let mut wvqf = vec![0u64; nv * np];
    let mut vqinv = vec![0u64; nv * np];
    for j in 0..nv {
        for k in 0..np {
            let vq = fp.dot3(&vs[j], &pts[k].qvec);
            if vq != 0 {
                wvqf[j * np + k] = fp.mul(weights[j], fp.pow(vq, f as u64));
                vqinv[j * np + k] = fp.inv(vq);
            }
        }
    }
    let mut vu = vec![0u64; nv * nu];
    for j in 0..nv {
        for s in 0..nu {
            vu[j * nu + s] = fp.dot3(&vs[j], &us[s]);
        }
    }
    let chunk = fp.delayed_chunk().max(1);

    DenseMatrixFp::fill_streamed(fp, nu, np, |s, k| {
        if upe[s * np + k] == 0 {
            let mut acc = 0u64;
            for (j, v) in vs.iter().enumerate() {
                acc = fp.add(acc, fp.mul(weights[j], tbl.eval_psi(&us[s], v, &pts[k])));
            }
            return acc;
        }
        let c = fp.mul(dpq[k], upinv[s * np + k]);
        let mut total = 0u64;
        let mut j = 0;
        while j < nv {
            let stop = (j + chunk).min(nv);
            let mut acc = total;
            while j < stop {
                let idx = fp.mul(fp.mul(c, vu[j * nu + s]), vqinv[j * np + k]);
                acc += tbl.lookup(idx) * wvqf[j * np + k];
                j += 1;
            }
            total = fp.reduce(acc);
        }
        fp.mul(upe[s * np + k], total)
    })
}

/// Matrix with rows swept by the covector powers: entry (j, k) is
/// `sum_s w[s] * psi(u_s, v_j)(pt_k)`.
fn psi_matrix_rows_v(
    tbl: &ChiTable,
    us: &[[u64; 3]],
    vs: &[[u64; 3]],
    weights: &[u64],
    pts: &[PointPair],
) -> Result<DenseMatrixFp> {
    let fp = tbl.fp();
    let (e, f) = tbl.degrees();
    assert!(f > e, "the fast fill assumes a strict degree drop");
    assert_eq!(us.len(), weights.len());
    let (nu, nv, np) = (us.len(), vs.len(), pts.len());

    let dpq: Vec<u64> = pts.iter().map(|pt| fp.dot3(&pt.pcov, &pt.qvec)).collect();
    let mut upinv = vec![0u64; nu * np];
    let mut wupe = vec![0u64; nu * np];
    let mut zero_up: Vec<Vec<usize>> = vec![Vec::new(); np];
    for s in 0..nu {
        for k in 0..np {
            let up = fp.dot3(&us[s], &pts[k].pcov);
            if up != 0 {
                upinv[s * np + k] = fp.inv(up);
                wupe[s * np + k] = fp.mul(weights[s], fp.pow(up, e as u64));
            } else {
                zero_up[k].push(s);
            }
        }
    }
    let mut vqf = vec![0u64; nv * np];
    let mut vqinv = vec![0u64; nv * np];
    for j in 0..nv {
        for k in 0..np {
            let vq = fp.dot3(&vs[j], &pts[k].qvec);
            if vq != 0 {
                vqf[j * np + k] = fp.pow(vq, f as u64);
                vqinv[j * np + k] = fp.inv(vq);
            }
        }
    }
    let mut vu = vec![0u64; nv * nu];
    for j in 0..nv {
        for s in 0..nu {
            vu[j * nu + s] = fp.dot3(&vs[j], &us[s]);
        }
    }
    let chunk = fp.delayed_chunk().max(1);

    DenseMatrixFp::fill_streamed(fp, nv, np, |j, k| {
        if vqf[j * np + k] == 0 {
            return 0;
        }
        let c = fp.mul(dpq[k], vqinv[j * np + k]);
        let mut total = 0u64;
        let mut s = 0;
        while s < nu {
            let stop = (s + chunk).min(nu);
            let mut acc = total;
            while s < stop {
                let idx = fp.mul(fp.mul(c, vu[j * nu + s]), upinv[s * np + k]);
                acc += tbl.lookup(idx) * wupe[s * np + k];
                s += 1;
            }
            total = fp.reduce(acc);
        }
        let mut entry = fp.mul(vqf[j * np + k], total);
        for &s in &zero_up[k] {
            entry = fp.add(entry, fp.mul(weights[s], tbl.eval_psi(&us[s], &vs[j], &pts[k])));
        }
        entry
    })
}

/// Cross-check that the two matrix orientations describe one bilinear map:
/// with r vector powers, s covector powers, and t evaluation functionals,
/// the t matrices built row-by-vector and the r matrices built
/// row-by-functional hold identical values.  The first route evaluates
/// through the `chi` polynomial, the second through the symbolic projector,
/// so agreement also ties the two evaluation paths together.
pub fn transpose_consistency(
    e: u32,
    f: u32,
    components: &[u32],
    r: usize,
    s: usize,
    t: usize,
    seed: u64,
) -> Result<bool> {
    use rand::rngs::StdRng;
    use rand::{Rng, SeedableRng};
    let chi = chi_poly(e, f, components)?;
    let mut rng = StdRng::seed_from_u64(seed);
    let vec3 = |rng: &mut StdRng| -> [Rational; 3] {
        std::array::from_fn(|_| Rational::from_integer(rng.random_range(-3i64..=3).into()))
    };
    let us: Vec<_> = (0..r).map(|_| vec3(&mut rng)).collect();
    let vs: Vec<_> = (0..s).map(|_| vec3(&mut rng)).collect();
    let pts: Vec<_> = (0..t).map(|_| (vec3(&mut rng), vec3(&mut rng))).collect();
    let dot = |x: &[Rational; 3], y: &[Rational; 3]| {
        x.iter().zip(y).map(|(a, b)| a * b).sum::<Rational>()
    };
    let mu_total: Vec<Vec<Rational>> = components
        .iter()
        .map(|&i| projector_coeffs(e, f, i).map(|pc| pc.mu))
        .collect::<Result<_>>()?;
    for (i, u) in us.iter().enumerate() {
        for (j, v) in vs.iter().enumerate() {
            let tensor = BiForm::pure_power(u, v, e, f);
            let mut proj = BiForm::zero(e, f);
            for mu in &mu_total {
                proj.add_assign(&tensor.apply_diagonal_op(mu));
            }
            for (k, (p, q)) in pts.iter().enumerate() {
                let via_projector = proj.eval(p, q);
                let xx = dot(p, q) * dot(v, u);
                let yy = dot(u, p) * dot(v, q);
                let mut via_chi = chi_eval(&chi, &xx, &yy);
                for _ in 0..(f - e) {
                    via_chi *= dot(v, q);
                }
                if via_projector != via_chi {
                    log::warn!(
                        "transpose mismatch at (i={i}, j={j}, k={k}): {via_projector} vs {via_chi}"
                    );
                    return Ok(false);
                }
            }
        }
    }
    Ok(true)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::ranklab::Elimination;
    use rand::rngs::StdRng;
    use rand::{Rng, SeedableRng};

    const P: u64 = 65521;

    fn d10_candidate() -> Candidate {
        Candidate::new(10, 7, vec![6], 19).unwrap()
    }

    fn d10_instance(seed: u64) -> GenericityInstance {
        GenericityInstance::new(d10_candidate(), P, seed)
    }

    #[test]
    fn transpose_consistency_scalar_and_full() {
        assert!(transpose_consistency(1, 1, &[1], 1, 1, 1, 0).unwrap());
        assert!(transpose_consistency(1, 1, &[1], 3, 3, 4, 1).unwrap());
        for rep in 0..10 {
            assert!(transpose_consistency(2, 3, &[1, 2], 2, 2, 2, rep).unwrap());
            assert!(transpose_consistency(1, 4, &[0], 2, 2, 2, rep).unwrap());
        }
        assert!(transpose_consistency(2, 4, &[0, 1, 2], 2, 2, 3, 7).unwrap());
    }

    #[test]
    fn degenerate_zero_map_is_inconclusive() {
        let mut inst = d10_instance(1);
        inst.t_terms = 0;
        inst.max_retries = 1;
        let v = run_check(&inst).unwrap();
        assert_eq!(v.status, Status::Inconclusive);
        assert_eq!(v.rank_a, 0);
        assert_eq!(v.kernel_dim, 36);
        assert_eq!(v.rank_n, 0);
        assert!(!v.zero_check);
        assert_eq!(v.retries, 1);
        assert_eq!(v.t_terms, 0);
    }

    #[test]
    fn degree_ten_certificate_passes() {
        let inst = d10_instance(1);
        let v = run_check(&inst).unwrap();
        assert_eq!(v.status, Status::Pass);
        assert_eq!(v.rank_a, 35);
        assert_eq!(v.kernel_dim, 1);
        assert_eq!(v.rank_n, 35);
        assert!(v.zero_check);
        assert_eq!(v.retries, 0);
        assert_eq!(v.d, 10);
        assert_eq!(v.e, 7);
    }

    #[test]
    fn checkpointed_run_leaves_files_and_agrees() {
        let dir = tempfile::tempdir().unwrap();
        let plain = run_check(&d10_instance(3)).unwrap();
        let mut inst = d10_instance(3);
        inst.checkpoint_dir = Some(dir.path().to_path_buf());
        let ck = run_check(&inst).unwrap();
        assert_eq!(ck.status, plain.status);
        assert_eq!(ck.rank_a, plain.rank_a);
        assert_eq!(ck.rank_n, plain.rank_n);
        let files: Vec<String> = std::fs::read_dir(dir.path())
            .unwrap()
            .map(|e| e.unwrap().file_name().into_string().unwrap())
            .collect();
        assert!(files.iter().any(|f| f.ends_with("-A.crkp")));
        assert!(files.iter().any(|f| f.ends_with("-N.crkp")));

        let again = run_check(&inst).unwrap();
        assert_eq!(again.rank_a, plain.rank_a);
    }

    #[test]
    fn verdict_is_deterministic_modulo_timing() {
        let inst = d10_instance(9);
        let a = run_check(&inst).unwrap();
        let b = run_check(&inst).unwrap();
        let strip = |v: &Verdict| {
            let mut j = serde_json::to_value(v).unwrap();
            j.as_object_mut().unwrap().remove("wallSeconds");
            j
        };
        assert_eq!(strip(&a), strip(&b));
    }

    #[test]
    fn verdict_json_shape() {
        let inst = d10_instance(1);
        let v = run_check(&inst).unwrap();
        let text = serde_json::to_string(&v).unwrap();
        for key in [
            "\"d\":", "\"e\":", "\"components\":", "\"prime\":", "\"seed\":",
            "\"nPoints\":", "\"tTerms\":", "\"rankA\":", "\"kernelDim\":",
            "\"rankN\":", "\"zeroCheck\":", "\"status\":\"PASS\"", "\"retries\":",
            "\"wallSeconds\":",
        ] {
            assert!(text.contains(key), "missing {key} in {text}");
        }
        assert!(text.find("\"d\"").unwrap() < text.find("\"wallSeconds\"").unwrap());
    }

    #[test]
    fn pass_predicate_needs_every_condition() {
        assert_eq!(verdict_status(35, 1, 35, true, 35), Status::Pass);
        assert_eq!(verdict_status(34, 1, 35, true, 35), Status::Inconclusive);
        assert_eq!(verdict_status(35, 2, 35, true, 35), Status::Inconclusive);
        assert_eq!(verdict_status(35, 1, 34, true, 35), Status::Inconclusive);
        assert_eq!(verdict_status(35, 1, 35, false, 35), Status::Inconclusive);
    }

    #[test]
    fn synthetic_rank_and_kernel_pipeline() {
        // A constructed matrix with known rank dim_w and a known left kernel
        // exercises the extraction steps without any evaluation plumbing.
        let fp = Fp::new(P).unwrap();
        let (dim_u, dim_w, n) = (12usize, 11usize, 20usize);
        let mut rng = StdRng::seed_from_u64(3);
        let base: Vec<Vec<u64>> = (0..dim_w)
            .map(|_| (0..n).map(|_| rng.random_range(0..P)).collect())
            .collect();
        let coeffs: Vec<u64> = (0..dim_w).map(|_| rng.random_range(1..P)).collect();
        let mut rows = base.clone();
        let combo: Vec<u64> = (0..n)
            .map(|j| {
                base.iter()
                    .zip(&coeffs)
                    .fold(0, |acc, (row, &c)| fp.add(acc, fp.mul(c, row[j])))
            })
            .collect();
        rows.push(combo);
        let a = DenseMatrixFp::from_rows(fp, rows).unwrap();
        assert_eq!(rank_fp(&a).rank as usize, dim_w);
        assert_eq!(Elimination::with_panel(a.clone(), 4).run().rank as usize, dim_w);

        let kernel = nullspace_fp(&a.transpose());
        assert_eq!(kernel.len(), 1);
        let eta = &kernel[0];
        let prod = a.transpose().mul_vec(eta);
        assert!(prod.iter().all(|&v| v == 0));
        assert_eq!(
            verdict_status(dim_w as u32, 1, dim_w as u32, true, dim_w as u64),
            Status::Pass
        );
        assert_eq!(dim_u, a.rows());
    }

    #[test]
    fn instance_validation_rejects_thin_point_sets() {
        let mut inst = d10_instance(1);
        inst.n_points = 10;
        assert!(matches!(run_check(&inst), Err(Error::InvalidInput(_))));
    }
}
