//! Dense exact linear algebra over GF(p): streamed fill, blocked parallel
//! elimination, rank, nullspace, and checkpoint/restart.
//!
//! Elimination proceeds in column panels (default width 256).  Within a
//! panel, pivots are chosen as the first nonzero entry in column order and
//! row operations are applied immediately; the trailing matrix is then
//! updated in one blocked pass, partitioned by rows across workers, with
//! products accumulated in `u64` and reduced once per chunk.  Because field
//! arithmetic is exact, the computed rank is independent of worker count and
//! panel width.
//!
//! After each panel the eliminated rows and consumed columns are dropped, so
//! the working set shrinks as elimination proceeds and a checkpoint is just
//! the residual block plus counters.

use std::io::Write as _;
use std::path::Path;
use std::time::Instant;

use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::ffcore::Fp;
use crate::STAGE_LOG_TARGET;

/// Default elimination panel width in columns.
pub const DEFAULT_PANEL: usize = 256;

const CRC64_POLY: u64 = 0x42F0_E1EB_A9EA_3693;

const fn crc64_table() -> [u64; 256] {
    let mut table = [0u64; 256];
    let mut i = 0;
    while i < 256 {
        let mut crc = (i as u64) << 56;
        let mut bit = 0;
        while bit < 8 {
            crc = if crc & (1 << 63) != 0 { (crc << 1) ^ CRC64_POLY } else { crc << 1 };
            bit += 1;
        }
        table[i] = crc;
        i += 1;
    }
    table
}

static CRC64_TABLE: [u64; 256] = crc64_table();

/// CRC-64 with the ECMA-182 polynomial, zero initial value, no reflection.
pub fn crc64(bytes: &[u8]) -> u64 {
    let mut crc = 0u64;
    for &b in bytes {
        crc = (crc << 8) ^ CRC64_TABLE[(((crc >> 56) as u8) ^ b) as usize];
    }
    crc
}

/// A row-major dense matrix over GF(p); every entry is reduced.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct DenseMatrixFp {
    fp: Fp,
    rows: usize,
    cols: usize,
    data: Vec<u64>,
}

fn alloc_entries(rows: usize, cols: usize) -> Result<Vec<u64>> {
    let n = rows.checked_mul(cols).ok_or(Error::Resource { bytes: u64::MAX })?;
    let mut data = Vec::new();
    data.try_reserve_exact(n)
        .map_err(|_| Error::Resource { bytes: n as u64 * 8 })?;
    data.resize(n, 0);
    Ok(data)
}

impl DenseMatrixFp {
    pub fn zero(fp: Fp, rows: usize, cols: usize) -> Result<DenseMatrixFp> {
        Ok(DenseMatrixFp { fp, rows, cols, data: alloc_entries(rows, cols)? })
    }

    /// Build a matrix from a pure entry generator.  The fill is partitioned
    /// by rows across workers; because the generator depends only on the
    /// index pair, any worker count produces the identical matrix.
    pub fn fill_streamed<G>(fp: Fp, rows: usize, cols: usize, gen: G) -> Result<DenseMatrixFp>
    where
        G: Fn(usize, usize) -> u64 + Sync,
    {
        let mut data = alloc_entries(rows, cols)?;
        data.par_chunks_mut(cols.max(1)).enumerate().for_each(|(i, row)| {
            for (j, slot) in row.iter_mut().enumerate() {
                let v = gen(i, j);
                debug_assert!(v < fp.modulus());
                *slot = v;
            }
        });
        Ok(DenseMatrixFp { fp, rows, cols, data })
    }

    pub fn from_rows(fp: Fp, rows: Vec<Vec<u64>>) -> Result<DenseMatrixFp> {
        let r = rows.len();
        let c = rows.first().map_or(0, Vec::len);
        if rows.iter().any(|row| row.len() != c) {
            return Err(Error::InvalidInput("ragged row lengths".into()));
        }
        let mut data = alloc_entries(r, c)?;
        for (i, row) in rows.iter().enumerate() {
            data[i * c..(i + 1) * c].copy_from_slice(row);
        }
        Ok(DenseMatrixFp { fp, rows: r, cols: c, data })
    }

    pub fn fp(&self) -> Fp {
        self.fp
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    #[inline]
    pub fn get(&self, i: usize, j: usize) -> u64 {
        self.data[i * self.cols + j]
    }

    pub fn set(&mut self, i: usize, j: usize, v: u64) {
        debug_assert!(v < self.fp.modulus());
        self.data[i * self.cols + j] = v;
    }

    pub fn row(&self, i: usize) -> &[u64] {
        &self.data[i * self.cols..(i + 1) * self.cols]
    }

    pub fn transpose(&self) -> DenseMatrixFp {
        let mut out = DenseMatrixFp::zero(self.fp, self.cols, self.rows)
            .expect("transpose of an allocated matrix");
        for i in 0..self.rows {
            for j in 0..self.cols {
                out.data[j * self.rows + i] = self.get(i, j);
            }
        }
        out
    }

    /// Matrix-vector product.
    pub fn mul_vec(&self, x: &[u64]) -> Vec<u64> {
        assert_eq!(x.len(), self.cols);
        let chunk = self.fp.delayed_chunk().max(1);
        (0..self.rows)
            .map(|i| {
                let row = self.row(i);
                let mut total = 0u64;
                for (rs, xs) in row.chunks(chunk).zip(x.chunks(chunk)) {
                    let mut acc = total;
                    for (&a, &b) in rs.iter().zip(xs) {
                        acc += a * b;
                    }
                    total = self.fp.reduce(acc);
                }
                total
            })
            .collect()
    }

    /// Matrix product, used by small-scale tests and verifications.
    pub fn matmul(&self, other: &DenseMatrixFp) -> DenseMatrixFp {
        assert_eq!(self.cols, other.rows);
        let fp = self.fp;
        let mut out = DenseMatrixFp::zero(fp, self.rows, other.cols)
            .expect("product allocation");
        for i in 0..self.rows {
            for k in 0..self.cols {
                let a = self.get(i, k);
                if a == 0 {
                    continue;
                }
                let orow = other.row(k);
                let dest = &mut out.data[i * other.cols..(i + 1) * other.cols];
                for (d, &b) in dest.iter_mut().zip(orow) {
                    *d = fp.reduce(*d + a * b);
                }
            }
        }
        out
    }
}

/// Summary of one rank computation.
#[derive(Clone, Debug)]
pub struct RankReport {
    pub rank: u32,
    pub rows: u64,
    pub cols: u64,
    pub p: u64,
    pub elapsed: f64,
    pub panels: u32,
    pub checkpoint: Option<String>,
}

/// In-progress blocked elimination.  `step` consumes one panel; the struct
/// can be serialized at any panel boundary and resumed later.
#[derive(Debug)]
pub struct Elimination {
    fp: Fp,
    rows: u64,
    cols: u64,
    panel: usize,
    rank: u32,
    panels_done: u32,
    res_rows: usize,
    res_cols: usize,
    res: Vec<u64>,
}

impl Elimination {
    pub fn new(m: DenseMatrixFp) -> Elimination {
        Elimination::with_panel(m, DEFAULT_PANEL)
    }

    pub fn with_panel(m: DenseMatrixFp, panel: usize) -> Elimination {
        assert!(panel > 0);
        Elimination {
            fp: m.fp,
            rows: m.rows as u64,
            cols: m.cols as u64,
            panel,
            rank: 0,
            panels_done: 0,
            res_rows: m.rows,
            res_cols: m.cols,
            res: m.data,
        }
    }

    pub fn is_done(&self) -> bool {
        self.res_rows == 0 || self.res_cols == 0
    }

    pub fn rank_so_far(&self) -> u32 {
        self.rank
    }

    pub fn panels_done(&self) -> u32 {
        self.panels_done
    }

    /// Eliminate the next panel of columns.
    pub fn step(&mut self) {
        if self.is_done() {
            return;
        }
        let fp = self.fp;
        let p = fp.modulus();
        let rc = self.res_cols;
        let pw = self.panel.min(rc);
        let nrows = self.res_rows;

        // Panel factorization: sequential over the panel columns, immediate
        // updates within the panel, multipliers stored in pivot-column slots.
        let mut piv_cols: Vec<usize> = Vec::with_capacity(pw);
        for c in 0..pw {
            let np = piv_cols.len();
            let Some(sel) = (np..nrows).find(|&r| self.res[r * rc + c] != 0) else {
                continue;
            };
            if sel != np {
                for j in 0..rc {
                    self.res.swap(np * rc + j, sel * rc + j);
                }
            }
            let inv = fp.inv(self.res[np * rc + c]);
            let (piv, below) = self.res.split_at_mut((np + 1) * rc);
            let piv_row = &piv[np * rc..np * rc + pw];
            for row in below.chunks_exact_mut(rc) {
                let v = row[c];
                if v == 0 {
                    continue;
                }
                let m = fp.mul(v, inv);
                row[c] = m;
                let mneg = fp.neg(m);
                for j in c + 1..pw {
                    row[j] = fp.reduce(row[j] + mneg * piv_row[j]);
                }
            }
            piv_cols.push(c);
        }
        let np = piv_cols.len();
        let trailing = rc - pw;

        if np > 0 && trailing > 0 {
            let chunk = fp.delayed_chunk().max(1);

            // Finish the pivot rows' trailing parts: row t still lacks the
            // contributions of pivots 0..t of this panel.
            let mut acc = vec![0u64; trailing];
            for t in 1..np {
                let mults: Vec<u64> =
                    (0..t).map(|t2| self.res[t * rc + piv_cols[t2]]).collect();
                acc.copy_from_slice(&self.res[t * rc + pw..t * rc + rc]);
                for start in (0..t).step_by(chunk) {
                    for t2 in start..(start + chunk).min(t) {
                        let m = mults[t2];
                        if m == 0 {
                            continue;
                        }
                        axpy_u64(&mut acc, p - m, &self.res[t2 * rc + pw..t2 * rc + rc]);
                    }
                    for a in acc.iter_mut() {
                        *a = fp.reduce(*a);
                    }
                }
                self.res[t * rc + pw..t * rc + rc].copy_from_slice(&acc);
            }

            // Stage the finished pivot rows as u32 for the blocked update.
            let mut ustage = vec![0u32; np * trailing];
            for t in 0..np {
                for j in 0..trailing {
                    ustage[t * trailing + j] = self.res[t * rc + pw + j] as u32;
                }
            }

            // Trailing update of all non-pivot rows, partitioned by rows.
            let (_, tail) = self.res.split_at_mut(np * rc);
            let piv_cols = &piv_cols[..];
            let ustage = &ustage[..];
            tail.par_chunks_mut(rc).for_each_init(
                || vec![0u64; trailing],
                |acc, row| {
                    for (a, &v) in acc.iter_mut().zip(row[pw..].iter()) {
                        *a = v;
                    }
                    for tchunk in (0..np).step_by(chunk).map(|s| s..(s + chunk).min(np)) {
                        for t in tchunk {
                            let m = row[piv_cols[t]];
                            if m == 0 {
                                continue;
                            }
                            axpy_u32(acc, (p - m) as u32, &ustage[t * trailing..(t + 1) * trailing]);
                        }
                        for a in acc.iter_mut() {
                            *a = fp.reduce(*a);
                        }
                    }
                    row[pw..].copy_from_slice(acc);
                },
            );
        }

        // Compact: drop the finished pivot rows and the consumed columns.
        let new_rows = nrows - np;
        for r in 0..new_rows {
            let src = (np + r) * rc + pw;
            self.res.copy_within(src..src + trailing, r * trailing);
        }
        self.res.truncate(new_rows * trailing);
        self.res_rows = new_rows;
        self.res_cols = trailing;
        self.rank += np as u32;
        self.panels_done += 1;
    }

    /// Run to completion and summarize.
    pub fn run(mut self) -> RankReport {
        let t0 = Instant::now();
        while !self.is_done() {
            self.step();
        }
        let elapsed = t0.elapsed().as_secs_f64();
        log::info!(
            target: STAGE_LOG_TARGET,
            "stage=rank rows={} cols={} p={} rank={} panels={} secs={:.3}",
            self.rows, self.cols, self.fp.modulus(), self.rank, self.panels_done, elapsed
        );
        RankReport {
            rank: self.rank,
            rows: self.rows,
            cols: self.cols,
            p: self.fp.modulus(),
            elapsed,
            panels: self.panels_done,
            checkpoint: None,
        }
    }

    /// Serialize the residual state.  Valid only at a panel boundary, which
    /// is every moment outside `step`.
    pub fn write_checkpoint(&self, path: &Path) -> Result<()> {
        let mut header = Vec::with_capacity(40);
        header.extend_from_slice(b"CRKP");
        header.extend_from_slice(&1u32.to_le_bytes());
        header.extend_from_slice(&self.fp.modulus().to_le_bytes());
        header.extend_from_slice(&self.rows.to_le_bytes());
        header.extend_from_slice(&self.cols.to_le_bytes());
        header.extend_from_slice(&self.panels_done.to_le_bytes());
        header.extend_from_slice(&self.rank.to_le_bytes());
        let mut payload = Vec::with_capacity(self.res.len() * 4);
        for &v in &self.res {
            payload.extend_from_slice(&(v as u32).to_le_bytes());
        }
        let mut w = std::io::BufWriter::new(std::fs::File::create(path)?);
        w.write_all(&header)?;
        w.write_all(&crc64(&header).to_le_bytes())?;
        w.write_all(&payload)?;
        w.write_all(&crc64(&payload).to_le_bytes())?;
        Ok(())
    }

    /// Restore an elimination from a checkpoint file.
    pub fn resume(path: &Path, panel: usize) -> Result<Elimination> {
        assert!(panel > 0);
        let bytes = std::fs::read(path)?;
        let corrupt = |offset: u64, detail: &str| Error::CorruptCheckpoint {
            offset,
            detail: detail.into(),
        };
        if bytes.len() < 56 {
            return Err(corrupt(bytes.len() as u64, "file shorter than any valid checkpoint"));
        }
        if &bytes[0..4] != b"CRKP" {
            return Err(corrupt(0, "bad magic"));
        }
        let version = u32::from_le_bytes(bytes[4..8].try_into().unwrap());
        if version != 1 {
            return Err(corrupt(4, "unsupported version"));
        }
        let stored_hcrc = u64::from_le_bytes(bytes[40..48].try_into().unwrap());
        if crc64(&bytes[0..40]) != stored_hcrc {
            return Err(corrupt(40, "header checksum mismatch"));
        }
        let p = u64::from_le_bytes(bytes[8..16].try_into().unwrap());
        let rows = u64::from_le_bytes(bytes[16..24].try_into().unwrap());
        let cols = u64::from_le_bytes(bytes[24..32].try_into().unwrap());
        let panels_done = u32::from_le_bytes(bytes[32..36].try_into().unwrap());
        let rank = u32::from_le_bytes(bytes[36..40].try_into().unwrap());
        let fp = Fp::new(p)?;
        if rank as u64 > rows {
            return Err(corrupt(36, "rank exceeds row count"));
        }
        let payload = &bytes[48..bytes.len() - 8];
        let stored_pcrc = u64::from_le_bytes(bytes[bytes.len() - 8..].try_into().unwrap());
        if crc64(payload) != stored_pcrc {
            return Err(corrupt(bytes.len() as u64 - 8, "payload checksum mismatch"));
        }
        if payload.len() % 4 != 0 {
            return Err(corrupt(48, "payload is not a whole number of entries"));
        }
        let n_entries = payload.len() / 4;
        let res_rows = (rows - rank as u64) as usize;
        let res_cols = if res_rows == 0 {
            if n_entries != 0 {
                return Err(corrupt(48, "entries present for an empty residual"));
            }
            0
        } else {
            if n_entries % res_rows != 0 {
                return Err(corrupt(48, "entry count not divisible by residual rows"));
            }
            let rc = n_entries / res_rows;
            if rc as u64 > cols {
                return Err(corrupt(48, "residual wider than the original matrix"));
            }
            rc
        };
        let mut res = Vec::with_capacity(n_entries);
        for (i, chunk) in payload.chunks_exact(4).enumerate() {
            let v = u32::from_le_bytes(chunk.try_into().unwrap()) as u64;
            if v >= p {
                return Err(corrupt(48 + 4 * i as u64, "entry not reduced modulo p"));
            }
            res.push(v);
        }
        Ok(Elimination {
            fp,
            rows,
            cols,
            panel,
            rank,
            panels_done,
            res_rows,
            res_cols,
            res,
        })
    }
}

#[inline]
fn axpy_u64(acc: &mut [u64], m: u64, u: &[u64]) {
    for (a, &x) in acc.iter_mut().zip(u) {
        *a += m * x;
    }
}

#[inline]
fn axpy_u32(acc: &mut [u64], m: u32, u: &[u32]) {
    let m = m as u64;
    for (a, &x) in acc.iter_mut().zip(u) {
        *a += m * x as u64;
    }
}

/// Exact rank over GF(p).
pub fn rank_fp(m: &DenseMatrixFp) -> RankReport {
    Elimination::new(m.clone()).run()
}

/// Rank with persistence: picks up from `path` when a checkpoint for the same
/// matrix shape and modulus is already there, rewrites it after every panel,
/// and leaves the final file behind.  A checkpoint for a different computation
/// is refused rather than silently discarded.
pub fn rank_fp_checkpointed(m: &DenseMatrixFp, path: &Path, panel: usize) -> Result<RankReport> {
    let t0 = Instant::now();
    let mut elim = if path.exists() {
        let e = Elimination::resume(path, panel)?;
        if e.fp.modulus() != m.fp.modulus()
            || e.rows != m.rows as u64
            || e.cols != m.cols as u64
        {
            return Err(Error::InvalidInput(format!(
                "checkpoint {} describes a {}x{} matrix mod {}, not {}x{} mod {}",
                path.display(),
                e.rows,
                e.cols,
                e.fp.modulus(),
                m.rows,
                m.cols,
                m.fp.modulus()
            )));
        }
        log::info!(
            target: STAGE_LOG_TARGET,
            "stage=resume path={} panels={} rank={}",
            path.display(),
            e.panels_done,
            e.rank
        );
        e
    } else {
        Elimination::with_panel(m.clone(), panel)
    };
    while !elim.is_done() {
        elim.step();
        elim.write_checkpoint(path)?;
    }
    let elapsed = t0.elapsed().as_secs_f64();
    log::info!(
        target: STAGE_LOG_TARGET,
        "stage=rank rows={} cols={} p={} rank={} panels={} secs={:.3} checkpoint={}",
        elim.rows,
        elim.cols,
        elim.fp.modulus(),
        elim.rank,
        elim.panels_done,
        elapsed,
        path.display()
    );
    Ok(RankReport {
        rank: elim.rank,
        rows: elim.rows,
        cols: elim.cols,
        p: elim.fp.modulus(),
        elapsed,
        panels: elim.panels_done,
        checkpoint: Some(path.display().to_string()),
    })
}

/// Basis of the right nullspace `{x : m.x = 0}`, each vector checked by
/// multiplication before return.
pub fn nullspace_fp(m: &DenseMatrixFp) -> Vec<Vec<u64>> {
    let fp = m.fp;
    let rows = m.rows;
    let cols = m.cols;
    let mut a = m.data.clone();
    let mut pivots: Vec<(usize, usize)> = Vec::new();
    for c in 0..cols {
        let r = pivots.len();
        let Some(sel) = (r..rows).find(|&rr| a[rr * cols + c] != 0) else {
            continue;
        };
        if sel != r {
            for j in 0..cols {
                a.swap(r * cols + j, sel * cols + j);
            }
        }
        let inv = fp.inv(a[r * cols + c]);
        for j in c..cols {
            a[r * cols + j] = fp.mul(a[r * cols + j], inv);
        }
        let pivot_row: Vec<u64> = a[r * cols..(r + 1) * cols].to_vec();
        for rr in 0..rows {
            if rr == r {
                continue;
            }
            let factor = a[rr * cols + c];
            if factor == 0 {
                continue;
            }
            let mneg = fp.neg(factor);
            for j in c..cols {
                a[rr * cols + j] = fp.reduce(a[rr * cols + j] + mneg * pivot_row[j]);
            }
        }
        pivots.push((r, c));
    }
    let pivot_cols: Vec<usize> = pivots.iter().map(|&(_, c)| c).collect();
    let mut basis = Vec::with_capacity(cols - pivots.len());
    for fc in 0..cols {
        if pivot_cols.contains(&fc) {
            continue;
        }
        let mut x = vec![0u64; cols];
        x[fc] = 1;
        for &(pr, pc) in &pivots {
            x[pc] = fp.neg(a[pr * cols + fc]);
        }
        let check = m.mul_vec(&x);
        assert!(
            check.iter().all(|&v| v == 0),
            "nullspace vector failed verification"
        );
        basis.push(x);
    }
    basis
}
