//! Prime-field arithmetic, `chi` lookup tables, deterministic sampling, and
//! O(1) evaluation of the split map on decomposable tensors.
//!
//! Everything downstream of the exact projector computation runs over GF(p)
//! for a single odd prime p below 2^31, so products of two reduced values fit
//! in a `u64`.  Reduction uses a Barrett multiplier precomputed from p; the
//! hot paths are branch-free.
//!
//! A [`ChiTable`] stores the dehomogenized values `chi(z, 1)` for all z plus
//! the leading value `chi(1, 0)`, turning every evaluation
//! `v(q)^(f-e) * chi(<p,q>*v(u), u(p)*v(q))` into a handful of
//! multiplications and one lookup.

use std::io::{Read as _, Write as _};
use std::path::Path;

use num_bigint::BigInt;
use num_traits::Signed;
use sha2::{Digest, Sha256};

use crate::error::{Error, Result};
use crate::projops::{ChiPoly, Rational};

/// Arithmetic context for GF(p): the modulus and its Barrett multiplier.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct Fp {
    p: u64,
    barrett: u64,
}

/// Largest prime below 2^20; the default modulus.  Its full lookup table
/// occupies 8 MB at 64-bit entries.
pub const DEFAULT_PRIME: u64 = 1_048_573;

fn is_prime(n: u64) -> bool {
    if n < 2 {
        return false;
    }
    if n % 2 == 0 {
        return n == 2;
    }
    let mut d = 3;
    while d * d <= n {
        if n % d == 0 {
            return false;
        }
        d += 2;
    }
    true
}

/// The fixed fallback list: the eight largest primes not exceeding the
/// default, tried in descending order when a prime divides a coefficient
/// denominator.
pub fn fallback_primes() -> Vec<u64> {
    let mut out = Vec::with_capacity(8);
    let mut n = DEFAULT_PRIME;
    while out.len() < 8 {
        if is_prime(n) {
            out.push(n);
        }
        n -= 1;
    }
    out
}

impl Fp {
    pub fn new(p: u64) -> Result<Fp> {
        if p < 3 || p >= 1 << 31 {
            return Err(Error::BadPrime {
                p,
                reason: "modulus must satisfy 3 <= p < 2^31".into(),
            });
        }
        if !is_prime(p) {
            return Err(Error::BadPrime { p, reason: "not prime".into() });
        }
        Ok(Fp { p, barrett: ((1u128 << 64) / p as u128) as u64 })
    }

    #[inline(always)]
    pub fn modulus(&self) -> u64 {
        self.p
    }

    /// Reduce any `u64` modulo p without a division.
    #[inline(always)]
    pub fn reduce(&self, x: u64) -> u64 {
        let q = ((x as u128 * self.barrett as u128) >> 64) as u64;
        let r = x.wrapping_sub(q.wrapping_mul(self.p));
        let r = r.min(r.wrapping_sub(self.p));
        r.min(r.wrapping_sub(self.p))
    }

    #[inline(always)]
    pub fn add(&self, a: u64, b: u64) -> u64 {
        let s = a + b;
        s.min(s.wrapping_sub(self.p))
    }

    #[inline(always)]
    pub fn sub(&self, a: u64, b: u64) -> u64 {
        let d = a.wrapping_sub(b);
        d.min(d.wrapping_add(self.p))
    }

    #[inline(always)]
    pub fn neg(&self, a: u64) -> u64 {
        if a == 0 { 0 } else { self.p - a }
    }

    #[inline(always)]
    pub fn mul(&self, a: u64, b: u64) -> u64 {
        self.reduce(a * b)
    }

    pub fn pow(&self, mut base: u64, mut exp: u64) -> u64 {
        let mut acc = 1u64;
        while exp > 0 {
            if exp & 1 == 1 {
                acc = self.mul(acc, base);
            }
            base = self.mul(base, base);
            exp >>= 1;
        }
        acc
    }

    /// Multiplicative inverse of a nonzero element.
    #[inline]
    pub fn inv(&self, a: u64) -> u64 {
        debug_assert_ne!(a, 0, "inverse of zero");
        self.pow(a, self.p - 2)
    }

    /// How many products of reduced values can be accumulated in a `u64`
    /// before a reduction is required.
    pub fn delayed_chunk(&self) -> usize {
        ((u64::MAX - (self.p - 1)) / ((self.p - 1) * (self.p - 1))) as usize
    }

    /// Map an exact rational into GF(p); the denominator must be a unit.
    pub fn from_rational(&self, r: &Rational) -> Result<u64> {
        let den = self.from_bigint(r.denom());
        if den == 0 {
            return Err(Error::BadPrime {
                p: self.p,
                reason: format!("prime divides denominator {}", r.denom()),
            });
        }
        Ok(self.mul(self.from_bigint(r.numer()), self.inv(den)))
    }

    fn from_bigint(&self, n: &BigInt) -> u64 {
        let p = BigInt::from(self.p);
        let mut m = n % &p;
        if m.is_negative() {
            m += &p;
        }
        let digits = m.to_u64_digits().1;
        digits.first().copied().unwrap_or(0)
    }

    #[inline(always)]
    pub fn dot3(&self, a: &[u64; 3], b: &[u64; 3]) -> u64 {
        self.reduce(a[0] * b[0] + a[1] * b[1] + a[2] * b[2])
    }
}

/// A deterministic, randomly accessible stream of field elements keyed by
/// (seed, label).  Element k is a pure function of (seed, label, k), so any
/// element can be drawn in any order by any worker.
///
/// Values are the low 8 bytes of SHA-256 output reduced mod p; for p < 2^31
/// the selection bias is below 2^-33 per draw.
pub struct SampleStream {
    key: [u8; 32],
    fp: Fp,
}

impl SampleStream {
    pub fn new(seed: u64, label: &str, fp: Fp) -> SampleStream {
        let mut h = Sha256::new();
        h.update(seed.to_le_bytes());
        h.update(label.as_bytes());
        SampleStream { key: h.finalize().into(), fp }
    }

    fn raw(&self, indices: &[u64]) -> u64 {
        let mut h = Sha256::new();
        h.update(self.key);
        for &i in indices {
            h.update(i.to_le_bytes());
        }
        let digest = h.finalize();
        u64::from_le_bytes(digest[..8].try_into().unwrap())
    }

    /// The k-th field element of the stream.
    pub fn element(&self, k: u64) -> u64 {
        self.fp.reduce(self.raw(&[k]))
    }

    /// The k-th nonzero field element; skips are resolved by a sub-counter,
    /// preserving random access.
    pub fn nonzero(&self, k: u64) -> u64 {
        for j in 0.. {
            let v = self.fp.reduce(self.raw(&[k, j]));
            if v != 0 {
                return v;
            }
        }
        unreachable!()
    }

    /// The k-th coordinate triple, never identically zero.  Returns the
    /// triple and the number of all-zero candidates skipped.
    pub fn vec3(&self, k: u64) -> ([u64; 3], u64) {
        for j in 0.. {
            let v = [
                self.fp.reduce(self.raw(&[k, j, 0])),
                self.fp.reduce(self.raw(&[k, j, 1])),
                self.fp.reduce(self.raw(&[k, j, 2])),
            ];
            if v != [0, 0, 0] {
                return (v, j);
            }
        }
        unreachable!()
    }
}

/// An evaluation site: a covector (pairing with the power-of-vector side)
/// and a vector (pairing with the power-of-covector side).
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct PointPair {
    pub pcov: [u64; 3],
    pub qvec: [u64; 3],
}

/// Full value table of a `chi` polynomial modulo p.
pub struct ChiTable {
    fp: Fp,
    e: u32,
    f: u32,
    table: Vec<u64>,
    lead: u64,
}

/// Tabulate `chi` over GF(p): `table[z] = chi(z, 1)`, `lead = chi(1, 0)`.
pub fn reduce_chi(chi: &ChiPoly, fp: Fp) -> Result<ChiTable> {
    if fp.modulus() <= chi.f as u64 {
        return Err(Error::BadPrime {
            p: fp.modulus(),
            reason: format!("prime must exceed the covector degree {}", chi.f),
        });
    }
    let coeffs: Vec<u64> = chi
        .coeffs
        .iter()
        .map(|c| fp.from_rational(c))
        .collect::<Result<_>>()?;
    let lead = *coeffs.last().expect("chi has e + 1 coefficients");
    let p = fp.modulus();
    let mut table = vec![0u64; p as usize];
    for (z, slot) in table.iter_mut().enumerate() {
        let mut acc = lead;
        for &c in coeffs.iter().rev().skip(1) {
            acc = fp.add(fp.mul(acc, z as u64), c);
        }
        *slot = acc;
    }
    Ok(ChiTable { fp, e: chi.e, f: chi.f, table, lead })
}

impl ChiTable {
    pub fn fp(&self) -> Fp {
        self.fp
    }

    pub fn degrees(&self) -> (u32, u32) {
        (self.e, self.f)
    }

    #[inline(always)]
    pub fn lookup(&self, z: u64) -> u64 {
        self.table[z as usize]
    }

    #[inline(always)]
    pub fn lead(&self) -> u64 {
        self.lead
    }

    /// `chi(x, y)` from the table: `y^e * table[x / y]` for y != 0, else
    /// `lead * x^e`.
    #[inline]
    pub fn eval_chi(&self, x: u64, y: u64) -> u64 {
        let fp = &self.fp;
        if y == 0 {
            fp.mul(self.lead, fp.pow(x, self.e as u64))
        } else {
            fp.mul(fp.pow(y, self.e as u64), self.table[fp.mul(x, fp.inv(y)) as usize])
        }
    }

    /// Value of the component-sum image of `u^e ⊗ v^f` at a point pair:
    /// `v(q)^(f-e) * chi(<p,q>*v(u), u(p)*v(q))`.
    pub fn eval_psi(&self, u: &[u64; 3], v: &[u64; 3], pt: &PointPair) -> u64 {
        let fp = &self.fp;
        let up = fp.dot3(u, &pt.pcov);
        let vq = fp.dot3(v, &pt.qvec);
        let vu = fp.dot3(v, u);
        let dpq = fp.dot3(&pt.pcov, &pt.qvec);
        let outer = fp.pow(vq, (self.f - self.e) as u64);
        if outer == 0 {
            return 0;
        }
        let x = fp.mul(dpq, vu);
        let y = fp.mul(up, vq);
        fp.mul(outer, self.eval_chi(x, y))
    }

    /// Serialize to the binary cache format.
    pub fn write_cache(&self, path: &Path) -> Result<()> {
        let mut w = std::io::BufWriter::new(std::fs::File::create(path)?);
        w.write_all(b"CHIT")?;
        w.write_all(&1u32.to_le_bytes())?;
        w.write_all(&self.fp.modulus().to_le_bytes())?;
        w.write_all(&self.e.to_le_bytes())?;
        w.write_all(&self.f.to_le_bytes())?;
        for &v in &self.table {
            w.write_all(&v.to_le_bytes())?;
        }
        w.write_all(&self.lead.to_le_bytes())?;
        Ok(())
    }

    /// Load a table previously written by [`ChiTable::write_cache`].
    pub fn read_cache(path: &Path) -> Result<ChiTable> {
        let mut r = std::io::BufReader::new(std::fs::File::open(path)?);
        let mut head = [0u8; 20];
        r.read_exact(&mut head)?;
        if &head[0..4] != b"CHIT" {
            return Err(Error::InvalidInput("not a chi table cache".into()));
        }
        let version = u32::from_le_bytes(head[4..8].try_into().unwrap());
        if version != 1 {
            return Err(Error::InvalidInput(format!(
                "unsupported chi table version {version}"
            )));
        }
        let p = u64::from_le_bytes(head[8..16].try_into().unwrap());
        let e = u32::from_le_bytes(head[16..20].try_into().unwrap());
        let mut fe = [0u8; 4];
        r.read_exact(&mut fe)?;
        let f = u32::from_le_bytes(fe);
        let fp = Fp::new(p)?;
        if e > f {
            return Err(Error::InvalidInput("cache has e > f".into()));
        }
        let mut body = Vec::new();
        r.read_to_end(&mut body)?;
        if body.len() != 8 * (p as usize + 1) {
            return Err(Error::InvalidInput(format!(
                "cache body holds {} bytes, expected {}",
                body.len(),
                8 * (p as usize + 1)
            )));
        }
        let mut vals = body
            .chunks_exact(8)
            .map(|c| u64::from_le_bytes(c.try_into().unwrap()));
        let table: Vec<u64> = vals.by_ref().take(p as usize).collect();
        let lead = vals.next().unwrap();
        if table.iter().any(|&v| v >= p) || lead >= p {
            return Err(Error::InvalidInput("cache entry out of range".into()));
        }
        Ok(ChiTable { fp, e, f, table, lead })
    }
}
