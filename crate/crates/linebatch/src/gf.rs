//! Finite-field arithmetic for recoding coefficients.
//!
//! Supports prime fields `GF(p)` for p < 2^16 and the byte field `GF(256)`
//! with the AES reducing polynomial x^8 + x^4 + x^3 + x + 1 (0x11b), using
//! log/antilog tables over the generator 0x03. Elements are stored as `u16`.

use crate::rng::SplitMix64;
use crate::{Error, Result};

/// A finite field of order `q`, where `q` is prime or 256.
#[derive(Debug, Clone)]
pub struct Field {
    q: u32,
    tables: Option<Box<Gf256Tables>>,
}

#[derive(Debug, Clone)]
struct Gf256Tables {
    exp: [u8; 510],
    log: [u8; 256],
}

const AES_POLY: u16 = 0x11b;

fn build_tables() -> Gf256Tables {
    let mut exp = [0u8; 510];
    let mut log = [0u8; 256];
    let mut x: u8 = 1;
    for i in 0..255usize {
        exp[i] = x;
        log[x as usize] = i as u8;
        // multiply by the generator 0x03 = x * (x + 1)
        let doubled = ((x as u16) << 1) ^ if x & 0x80 != 0 { AES_POLY } else { 0 };
        x ^= doubled as u8;
    }
    for i in 255..510 {
        exp[i] = exp[i - 255];
    }
    Gf256Tables { exp, log }
}

fn is_prime(n: u32) -> bool {
    if n < 2 {
        return false;
    }
    let mut d = 2;
    while d * d <= n {
        if n.is_multiple_of(d) {
            return false;
        }
        d += 1;
    }
    true
}

impl Field {
    /// `q` must be prime (below 2^16) or exactly 256.
    pub fn new(q: u32) -> Result<Self> {
        if q == 256 {
            return Ok(Field { q, tables: Some(Box::new(build_tables())) });
        }
        if q >= 1 << 16 || !is_prime(q) {
            return Err(Error::InvalidParameter(format!(
                "field order {q} is neither a prime below 2^16 nor 256"
            )));
        }
        Ok(Field { q, tables: None })
    }

    pub fn order(&self) -> u32 {
        self.q
    }

    pub fn add(&self, a: u16, b: u16) -> u16 {
        match &self.tables {
            Some(_) => a ^ b,
            None => (((a as u32) + (b as u32)) % self.q) as u16,
        }
    }

    pub fn sub(&self, a: u16, b: u16) -> u16 {
        match &self.tables {
            Some(_) => a ^ b,
            None => (((a as u32) + self.q - (b as u32)) % self.q) as u16,
        }
    }

    pub fn mul(&self, a: u16, b: u16) -> u16 {
        match &self.tables {
            Some(t) => {
                if a == 0 || b == 0 {
                    0
                } else {
                    t.exp[t.log[a as usize] as usize + t.log[b as usize] as usize] as u16
                }
            }
            None => (((a as u64) * (b as u64)) % self.q as u64) as u16,
        }
    }

    pub fn inv(&self, a: u16) -> Result<u16> {
        if a == 0 {
            return Err(Error::Domain("zero has no multiplicative inverse".into()));
        }
        match &self.tables {
            Some(t) => Ok(t.exp[255 - t.log[a as usize] as usize] as u16),
            None => {
                // Fermat: a^(q-2) mod q
                let mut result: u64 = 1;
                let mut base = a as u64 % self.q as u64;
                let mut e = self.q as u64 - 2;
                while e > 0 {
                    if e & 1 == 1 {
                        result = result * base % self.q as u64;
                    }
                    base = base * base % self.q as u64;
                    e >>= 1;
                }
                Ok(result as u16)
            }
        }
    }

    pub fn uniform(&self, rng: &mut SplitMix64) -> u16 {
        rng.next_below(self.q as u64) as u16
    }

    /// Rank of a matrix over the field by Gaussian elimination. Rows may
    /// have any common length; an empty matrix has rank 0.
    pub fn rank(&self, rows: &[Vec<u16>]) -> usize {
        let mut m: Vec<Vec<u16>> = rows.to_vec();
        let ncols = m.first().map_or(0, |r| r.len());
        let mut rank = 0;
        for col in 0..ncols {
            let Some(pivot) = (rank..m.len()).find(|&r| m[r][col] != 0) else {
                continue;
            };
            m.swap(rank, pivot);
            let inv = self.inv(m[rank][col]).expect("pivot is non-zero");
            for j in col..ncols {
                m[rank][j] = self.mul(m[rank][j], inv);
            }
            for r in 0..m.len() {
                if r != rank && m[r][col] != 0 {
                    let f = m[r][col];
                    for j in col..ncols {
                        let delta = self.mul(f, m[rank][j]);
                        m[r][j] = self.sub(m[r][j], delta);
                    }
                }
            }
            rank += 1;
            if rank == m.len() {
                break;
            }
        }
        rank
    }

    /// `v += c * w` componentwise.
    pub fn axpy(&self, v: &mut [u16], c: u16, w: &[u16]) {
        for (a, &b) in v.iter_mut().zip(w) {
            *a = self.add(*a, self.mul(c, b));
        }
    }
}
