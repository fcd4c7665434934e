//! Bit-packed unit states.
//!
//! States are packed with a fixed word order — unit 0 is the least
//! significant bit of word 0 — so that bitwise deduplication of local minima
//! has an exact canonical representation.

use crate::error::{Error, Result};
use serde::{Deserialize, Serialize};

/// Fixed-length packed bit vector. Unused high bits are always zero, which
/// makes `Eq`/`Hash`/`Ord` canonical.
#[derive(Clone, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct BitVec {
    n_bits: usize,
    words: Vec<u64>,
}

impl BitVec {
    pub fn zeros(n_bits: usize) -> Self {
        BitVec {
            n_bits,
            words: vec![0; n_bits.div_ceil(64)],
        }
    }

    pub fn from_bools(bits: &[bool]) -> Self {
        let mut v = BitVec::zeros(bits.len());
        for (i, &b) in bits.iter().enumerate() {
            v.set(i, b);
        }
        v
    }

    /// Interprets the low `n_bits` of `value` as a state (bit 0 = unit 0).
    pub fn from_usize(value: usize, n_bits: usize) -> Self {
        assert!(n_bits <= 64, "from_usize supports at most 64 bits");
        let mut v = BitVec::zeros(n_bits);
        if n_bits > 0 {
            let mask = if n_bits == 64 { !0u64 } else { (1u64 << n_bits) - 1 };
            if !v.words.is_empty() {
                v.words[0] = (value as u64) & mask;
            }
        }
        v
    }

    pub fn len(&self) -> usize {
        self.n_bits
    }

    pub fn is_empty(&self) -> bool {
        self.n_bits == 0
    }

    #[inline]
    pub fn get(&self, i: usize) -> bool {
        debug_assert!(i < self.n_bits);
        (self.words[i / 64] >> (i % 64)) & 1 == 1
    }

    #[inline]
    pub fn set(&mut self, i: usize, value: bool) {
        debug_assert!(i < self.n_bits);
        let (w, b) = (i / 64, i % 64);
        if value {
            self.words[w] |= 1 << b;
        } else {
            self.words[w] &= !(1 << b);
        }
    }

    #[inline]
    pub fn flip(&mut self, i: usize) {
        debug_assert!(i < self.n_bits);
        self.words[i / 64] ^= 1 << (i % 64);
    }

    pub fn count_ones(&self) -> usize {
        self.words.iter().map(|w| w.count_ones() as usize).sum()
    }

    /// Indices of the set bits, ascending.
    pub fn iter_ones(&self) -> impl Iterator<Item = usize> + '_ {
        self.words.iter().enumerate().flat_map(|(wi, &w)| {
            let mut rem = w;
            std::iter::from_fn(move || {
                if rem == 0 {
                    None
                } else {
                    let b = rem.trailing_zeros() as usize;
                    rem &= rem - 1;
                    Some(wi * 64 + b)
                }
            })
        })
    }

    pub fn iter_bits(&self) -> impl Iterator<Item = bool> + '_ {
        (0..self.n_bits).map(move |i| self.get(i))
    }

    /// `self` followed by `other` (other's unit 0 lands at index `self.len()`).
    pub fn concat(&self, other: &BitVec) -> BitVec {
        let mut out = BitVec::zeros(self.n_bits + other.n_bits);
        for i in self.iter_ones() {
            out.set(i, true);
        }
        for i in other.iter_ones() {
            out.set(self.n_bits + i, true);
        }
        out
    }

    /// Bits `[lo, hi)` as a new vector.
    pub fn slice(&self, lo: usize, hi: usize) -> BitVec {
        assert!(lo <= hi && hi <= self.n_bits);
        let mut out = BitVec::zeros(hi - lo);
        for i in lo..hi {
            if self.get(i) {
                out.set(i - lo, true);
            }
        }
        out
    }

    /// Hex encoding of the state read as a little-endian bit integer
    /// (unit 0 = least significant bit), using `ceil(n_bits / 4)` digits.
    pub fn to_hex(&self) -> String {
        let digits = self.n_bits.div_ceil(4).max(1);
        let mut s = String::with_capacity(digits);
        for d in (0..digits).rev() {
            let lo = d * 4;
            let mut nibble = 0u8;
            for k in 0..4 {
                let i = lo + k;
                if i < self.n_bits && self.get(i) {
                    nibble |= 1 << k;
                }
            }
            s.push(char::from_digit(nibble as u32, 16).unwrap());
        }
        s
    }

    pub fn from_hex(hex: &str, n_bits: usize) -> Result<BitVec> {
        let expected = n_bits.div_ceil(4).max(1);
        if hex.len() != expected {
            return Err(Error::InvalidData(format!(
                "hex state `{hex}` has {} digits, expected {expected} for {n_bits} bits",
                hex.len()
            )));
        }
        let mut v = BitVec::zeros(n_bits);
        for (pos, ch) in hex.chars().rev().enumerate() {
            let nibble = ch
                .to_digit(16)
                .ok_or_else(|| Error::InvalidData(format!("bad hex digit `{ch}`")))?;
            for k in 0..4 {
                let i = pos * 4 + k;
                if nibble >> k & 1 == 1 {
                    if i >= n_bits {
                        return Err(Error::InvalidData(format!(
                            "hex state `{hex}` sets bit {i} beyond {n_bits} bits"
                        )));
                    }
                    v.set(i, true);
                }
            }
        }
        Ok(v)
    }

    pub fn as_words(&self) -> &[u64] {
        &self.words
    }
}

impl std::fmt::Debug for BitVec {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "BitVec({}:{})", self.n_bits, self.to_hex())
    }
}

/// Joint state of all RBM units: visible layer `v`, hidden layer `h`.
/// Every unit is 0 or 1 (QUBO convention).
#[derive(Clone, PartialEq, Eq, Hash, Debug, Serialize, Deserialize)]
pub struct Configuration {
    pub v: BitVec,
    pub h: BitVec,
}

impl Configuration {
    pub fn zeros(n_v: usize, n_h: usize) -> Self {
        Configuration {
            v: BitVec::zeros(n_v),
            h: BitVec::zeros(n_h),
        }
    }

    pub fn new(v: BitVec, h: BitVec) -> Self {
        Configuration { v, h }
    }

    /// Visible vector with an all-zero hidden layer.
    pub fn from_visible(v: BitVec, n_h: usize) -> Self {
        Configuration {
            v,
            h: BitVec::zeros(n_h),
        }
    }

    /// Flat packed state: visible units first, then hidden.
    pub fn flat(&self) -> BitVec {
        self.v.concat(&self.h)
    }

    pub fn from_flat(flat: &BitVec, n_v: usize) -> Result<Self> {
        if flat.len() < n_v {
            return Err(Error::DimensionMismatch {
                what: "flat configuration",
                expected: n_v,
                found: flat.len(),
            });
        }
        Ok(Configuration {
            v: flat.slice(0, n_v),
            h: flat.slice(n_v, flat.len()),
        })
    }
}
