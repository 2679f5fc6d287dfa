//! Bit-packed vectors and matrices over GF(2).
//!
//! Words are stored little-endian inside `u64` limbs: bit `j` of a vector
//! lives in limb `j / 64` at position `j % 64`. Unused high bits of the last
//! limb are always zero so limb-wise equality is vector equality.

use std::fmt;

use serde::{Deserialize, Serialize};

const LIMB: usize = 64;

#[inline]
pub(crate) fn limbs_for(bits: usize) -> usize {
    bits.div_ceil(LIMB)
}

/// A fixed-length binary vector.
#[derive(Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct BinaryWord {
    len: usize,
    limbs: Vec<u64>,
}

impl BinaryWord {
    pub fn zeros(len: usize) -> Self {
        BinaryWord {
            len,
            limbs: vec![0; limbs_for(len)],
        }
    }

    pub fn from_bits<I>(bits: I) -> Self
    where
        I: IntoIterator<Item = bool>,
    {
        let mut limbs = Vec::new();
        let mut len = 0;
        for bit in bits {
            if len % LIMB == 0 {
                limbs.push(0);
            }
            if bit {
                limbs[len / LIMB] |= 1 << (len % LIMB);
            }
            len += 1;
        }
        BinaryWord { len, limbs }
    }

    /// Parses a string of `0`/`1` characters; any other character is ignored,
    /// so `"1011 0100"` and `"1011_0100"` both work.
    pub fn from_str_bits(s: &str) -> Self {
        Self::from_bits(s.chars().filter_map(|c| match c {
            '0' => Some(false),
            '1' => Some(true),
            _ => None,
        }))
    }

    #[inline]
    pub fn len(&self) -> usize {
        self.len
    }

    #[inline]
    pub fn is_empty(&self) -> bool {
        self.len == 0
    }

    #[inline]
    pub fn get(&self, j: usize) -> bool {
        debug_assert!(j < self.len);
        self.limbs[j / LIMB] >> (j % LIMB) & 1 == 1
    }

    #[inline]
    pub fn set(&mut self, j: usize, value: bool) {
        debug_assert!(j < self.len);
        let mask = 1 << (j % LIMB);
        if value {
            self.limbs[j / LIMB] |= mask;
        } else {
            self.limbs[j / LIMB] &= !mask;
        }
    }

    #[inline]
    pub fn flip(&mut self, j: usize) {
        debug_assert!(j < self.len);
        self.limbs[j / LIMB] ^= 1 << (j % LIMB);
    }

    pub fn xor_assign(&mut self, other: &BinaryWord) {
        assert_eq!(self.len, other.len, "xor of words with different lengths");
        for (a, b) in self.limbs.iter_mut().zip(&other.limbs) {
            *a ^= b;
        }
    }

    pub fn xor(&self, other: &BinaryWord) -> BinaryWord {
        let mut out = self.clone();
        out.xor_assign(other);
        out
    }

    pub fn is_zero(&self) -> bool {
        self.limbs.iter().all(|&l| l == 0)
    }

    pub fn count_ones(&self) -> usize {
        self.limbs.iter().map(|l| l.count_ones() as usize).sum()
    }

    /// Parity of the bitwise AND with `other`, i.e. the GF(2) inner product.
    #[inline]
    pub fn dot(&self, other: &BinaryWord) -> bool {
        debug_assert_eq!(self.len, other.len);
        self.limbs
            .iter()
            .zip(&other.limbs)
            .fold(0u32, |acc, (a, b)| acc ^ (a & b).count_ones())
            & 1
            == 1
    }

    pub fn iter(&self) -> impl Iterator<Item = bool> + '_ {
        (0..self.len).map(move |j| self.get(j))
    }

    pub fn to_bits(&self) -> Vec<bool> {
        self.iter().collect()
    }

    /// Reads `width` bits starting at `start` as an MSB-first integer.
    pub fn read_msb(&self, start: usize, width: usize) -> u32 {
        debug_assert!(width <= 32 && start + width <= self.len);
        (start..start + width).fold(0, |acc, j| acc << 1 | self.get(j) as u32)
    }

    /// Writes `value` as `width` MSB-first bits starting at `start`.
    pub fn write_msb(&mut self, start: usize, width: usize, value: u32) {
        debug_assert!(width <= 32 && start + width <= self.len);
        for l in 0..width {
            self.set(start + l, value >> (width - 1 - l) & 1 == 1);
        }
    }

    /// Lexicographic comparison with bit 0 most significant.
    pub fn lex_cmp(&self, other: &BinaryWord) -> std::cmp::Ordering {
        self.iter().cmp(other.iter())
    }
}

impl fmt::Debug for BinaryWord {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "BinaryWord({self})")
    }
}

impl fmt::Display for BinaryWord {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for b in self.iter() {
            f.write_str(if b { "1" } else { "0" })?;
        }
        Ok(())
    }
}

/// A dense binary matrix stored as bit-packed rows.
#[derive(Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct BitMatrix {
    cols: usize,
    rows: Vec<BinaryWord>,
}

impl BitMatrix {
    pub fn zeros(rows: usize, cols: usize) -> Self {
        BitMatrix {
            cols,
            rows: vec![BinaryWord::zeros(cols); rows],
        }
    }

    pub fn identity(size: usize) -> Self {
        let mut m = Self::zeros(size, size);
        for i in 0..size {
            m.rows[i].set(i, true);
        }
        m
    }

    pub fn from_rows(cols: usize, rows: Vec<BinaryWord>) -> Self {
        assert!(rows.iter().all(|r| r.len() == cols), "ragged matrix rows");
        BitMatrix { cols, rows }
    }

    pub fn num_rows(&self) -> usize {
        self.rows.len()
    }

    pub fn num_cols(&self) -> usize {
        self.cols
    }

    pub fn row(&self, i: usize) -> &BinaryWord {
        &self.rows[i]
    }

    pub fn rows(&self) -> &[BinaryWord] {
        &self.rows
    }

    pub fn get(&self, i: usize, j: usize) -> bool {
        self.rows[i].get(j)
    }

    pub fn set(&mut self, i: usize, j: usize, value: bool) {
        self.rows[i].set(j, value)
    }

    pub fn transpose(&self) -> BitMatrix {
        let mut t = BitMatrix::zeros(self.cols, self.rows.len());
        for (i, row) in self.rows.iter().enumerate() {
            for j in 0..self.cols {
                if row.get(j) {
                    t.rows[j].set(i, true);
                }
            }
        }
        t
    }

    /// `self * other^T`, i.e. entry `(i, j)` is the inner product of row `i`
    /// of `self` with row `j` of `other`.
    pub fn mul_transpose(&self, other: &BitMatrix) -> BitMatrix {
        assert_eq!(self.cols, other.cols);
        let mut out = BitMatrix::zeros(self.rows.len(), other.rows.len());
        for (i, a) in self.rows.iter().enumerate() {
            for (j, b) in other.rows.iter().enumerate() {
                if a.dot(b) {
                    out.rows[i].set(j, true);
                }
            }
        }
        out
    }

    /// Row vector times matrix: XOR of the rows selected by `v`.
    pub fn left_mul(&self, v: &BinaryWord) -> BinaryWord {
        assert_eq!(v.len(), self.rows.len());
        let mut out = BinaryWord::zeros(self.cols);
        for (i, row) in self.rows.iter().enumerate() {
            if v.get(i) {
                out.xor_assign(row);
            }
        }
        out
    }

    /// Matrix times column vector: one inner product per row.
    pub fn mul_vec(&self, v: &BinaryWord) -> BinaryWord {
        BinaryWord::from_bits(self.rows.iter().map(|r| r.dot(v)))
    }

    pub fn is_zero(&self) -> bool {
        self.rows.iter().all(BinaryWord::is_zero)
    }

    /// Rank by Gaussian elimination with word-parallel row XOR.
    pub fn rank(&self) -> usize {
        let mut rows = self.rows.clone();
        let mut rank = 0;
        for col in 0..self.cols {
            let Some(pivot) = (rank..rows.len()).find(|&r| rows[r].get(col)) else {
                continue;
            };
            rows.swap(rank, pivot);
            let (head, tail) = rows.split_at_mut(rank + 1);
            let p = &head[rank];
            for r in tail.iter_mut() {
                if r.get(col) {
                    r.xor_assign(p);
                }
            }
            rank += 1;
            if rank == rows.len() {
                break;
            }
        }
        rank
    }
}

impl fmt::Debug for BitMatrix {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(f, "BitMatrix {}x{} [", self.rows.len(), self.cols)?;
        for r in &self.rows {
            writeln!(f, "  {r}")?;
        }
        write!(f, "]")
    }
}
