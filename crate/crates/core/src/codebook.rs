//! Binary linear block codes: random linear codes and CRC codes in systematic
//! form, encoding, and syndrome-based codebook membership.

use std::fmt;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::gf2::{limbs_for, BinaryWord, BitMatrix};
use crate::{Error, Result};

/// A CRC generator polynomial, stored with its leading term.
///
/// Bit `d` of the value is the coefficient of `x^d`, so `x^3 + x + 1` is
/// `0b1011`.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub struct CrcPolynomial(pub u128);

impl CrcPolynomial {
    /// Degree 24 polynomial used for the 24-bit CRC in 5G NR (CRC24A).
    pub const CRC24A: CrcPolynomial = CrcPolynomial(0x186_4CFB);
    /// Degree 22 polynomial with `d_min >= 5` at length 256.
    pub const CRC22: CrcPolynomial = CrcPolynomial(0x64_6DD7);

    pub fn degree(self) -> Option<usize> {
        (self.0 != 0).then(|| 127 - self.0.leading_zeros() as usize)
    }

    pub fn to_hex(self) -> String {
        format!("0x{:x}", self.0)
    }

    pub fn from_hex(s: &str) -> Result<Self> {
        let digits = s.trim().trim_start_matches("0x").trim_start_matches("0X");
        u128::from_str_radix(digits, 16)
            .map(CrcPolynomial)
            .map_err(|e| Error::Config(format!("bad polynomial {s:?}: {e}")))
    }

    /// Remainders `x^j mod g(x)` for `j = 0..count`, as integers with bit `d`
    /// holding the coefficient of `x^d`.
    fn power_remainders(self, count: usize) -> Vec<u128> {
        let degree = self.degree().expect("nonzero polynomial");
        let top = 1u128 << degree;
        let mut out = Vec::with_capacity(count);
        let mut r = if degree == 0 { 0 } else { 1 };
        for _ in 0..count {
            out.push(r);
            r <<= 1;
            if r & top != 0 {
                r ^= self.0;
            }
        }
        out
    }
}

impl Serialize for CrcPolynomial {
    fn serialize<S: serde::Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        s.serialize_str(&self.to_hex())
    }
}

impl<'de> Deserialize<'de> for CrcPolynomial {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        let s = String::deserialize(d)?;
        CrcPolynomial::from_hex(&s).map_err(serde::de::Error::custom)
    }
}

/// Declarative description of a code, as found in simulation configs.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "family", rename_all = "lowercase")]
pub enum CodeSpec {
    Rlc { n: usize, k: usize, seed: u64 },
    Crc { n: usize, k: usize, poly: CrcPolynomial },
}

impl CodeSpec {
    pub fn build(&self) -> Result<LinearCode> {
        match *self {
            CodeSpec::Rlc { n, k, seed } => make_random_linear_code(n, k, seed),
            CodeSpec::Crc { n, k, poly } => make_crc_code(n, k, poly),
        }
    }

    pub fn n(&self) -> usize {
        match *self {
            CodeSpec::Rlc { n, .. } | CodeSpec::Crc { n, .. } => n,
        }
    }

    pub fn k(&self) -> usize {
        match *self {
            CodeSpec::Rlc { k, .. } | CodeSpec::Crc { k, .. } => k,
        }
    }
}

/// Generator matrix with `k` rows of length `n`.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct GeneratorMatrix {
    pub matrix: BitMatrix,
    pub systematic: bool,
}

/// Parity-check matrix with `n - k` rows of length `n`.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct ParityCheckMatrix {
    pub matrix: BitMatrix,
}

/// A binary linear `[n, k]` code.
///
/// Besides the two matrices, the code caches the syndrome of every unit
/// vector (the columns of `H`) so a decoder can update a syndrome by XOR when
/// it flips bits instead of re-multiplying the whole word.
#[derive(Clone)]
pub struct LinearCode {
    n: usize,
    k: usize,
    generator: GeneratorMatrix,
    parity: ParityCheckMatrix,
    label: String,
    syndrome_limbs: usize,
    columns: Vec<u64>,
}

impl fmt::Debug for LinearCode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("LinearCode")
            .field("label", &self.label)
            .field("n", &self.n)
            .field("k", &self.k)
            .finish()
    }
}

impl LinearCode {
    /// Builds a code from a systematic generator `[I | P]`, deriving
    /// `H = [P^T | I]`.
    fn from_parity_part(n: usize, k: usize, p: BitMatrix, label: String) -> LinearCode {
        debug_assert_eq!((p.num_rows(), p.num_cols()), (k, n - k));
        let mut g = BitMatrix::zeros(k, n);
        for i in 0..k {
            g.set(i, i, true);
            for j in 0..n - k {
                if p.get(i, j) {
                    g.set(i, k + j, true);
                }
            }
        }
        let mut h = BitMatrix::zeros(n - k, n);
        for j in 0..n - k {
            for i in 0..k {
                if p.get(i, j) {
                    h.set(j, i, true);
                }
            }
            h.set(j, k + j, true);
        }

        let syndrome_limbs = limbs_for(n - k);
        let mut columns = vec![0u64; n * syndrome_limbs];
        for (r, row) in h.rows().iter().enumerate() {
            for c in 0..n {
                if row.get(c) {
                    columns[c * syndrome_limbs + r / 64] |= 1 << (r % 64);
                }
            }
        }

        LinearCode {
            n,
            k,
            generator: GeneratorMatrix {
                matrix: g,
                systematic: true,
            },
            parity: ParityCheckMatrix { matrix: h },
            label,
            syndrome_limbs,
            columns,
        }
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn k(&self) -> usize {
        self.k
    }

    pub fn rate(&self) -> f64 {
        self.k as f64 / self.n as f64
    }

    pub fn label(&self) -> &str {
        &self.label
    }

    pub fn generator(&self) -> &GeneratorMatrix {
        &self.generator
    }

    pub fn parity(&self) -> &ParityCheckMatrix {
        &self.parity
    }

    /// `message * G` over GF(2).
    pub fn encode(&self, message: &BinaryWord) -> Result<BinaryWord> {
        if message.len() != self.k {
            return Err(Error::LengthMismatch {
                expected: self.k,
                actual: message.len(),
            });
        }
        Ok(self.generator.matrix.left_mul(message))
    }

    /// Codebook membership: `H * word^T == 0`.
    pub fn is_member(&self, word: &BinaryWord) -> Result<bool> {
        if word.len() != self.n {
            return Err(Error::LengthMismatch {
                expected: self.n,
                actual: word.len(),
            });
        }
        Ok(self.parity.matrix.rows().iter().all(|row| !row.dot(word)))
    }

    /// Number of `u64` limbs in a packed syndrome.
    pub fn syndrome_limbs(&self) -> usize {
        self.syndrome_limbs
    }

    /// Packed syndrome contribution of bit `j` (column `j` of `H`).
    #[inline]
    pub fn column_syndrome(&self, j: usize) -> &[u64] {
        &self.columns[j * self.syndrome_limbs..(j + 1) * self.syndrome_limbs]
    }

    /// Packed syndrome `H * word^T`, accumulated column by column.
    pub fn syndrome(&self, word: &BinaryWord) -> Vec<u64> {
        assert_eq!(word.len(), self.n);
        let mut s = vec![0u64; self.syndrome_limbs];
        for j in (0..self.n).filter(|&j| word.get(j)) {
            for (a, b) in s.iter_mut().zip(self.column_syndrome(j)) {
                *a ^= b;
            }
        }
        s
    }
}

/// Random linear code `[I | P]` with `P` drawn uniformly from a seeded
/// ChaCha8 stream.
pub fn make_random_linear_code(n: usize, k: usize, seed: u64) -> Result<LinearCode> {
    if k == 0 || k >= n {
        return Err(Error::InvalidDimensions { n, k });
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut p = BitMatrix::zeros(k, n - k);
    for i in 0..k {
        for j in 0..n - k {
            p.set(i, j, rng.random::<bool>());
        }
    }
    Ok(LinearCode::from_parity_part(
        n,
        k,
        p,
        format!("RLC[{n},{k}] seed={seed}"),
    ))
}

/// Systematic CRC code: the `n - k` parity bits are the remainder of
/// `m(x) * x^(n-k)` modulo `poly`, with bits taken MSB first and a zero
/// initial register.
pub fn make_crc_code(n: usize, k: usize, poly: CrcPolynomial) -> Result<LinearCode> {
    if k == 0 || k >= n {
        return Err(Error::InvalidDimensions { n, k });
    }
    let r = n - k;
    match poly.degree() {
        Some(d) if d == r => {}
        d => {
            return Err(Error::PolynomialDegree {
                degree: d.unwrap_or(0),
                expected: r,
            })
        }
    }
    if r > 127 {
        return Err(Error::InvalidDimensions { n, k });
    }
    // Message bit i carries x^(k-1-i), so its parity is x^(n-1-i) mod g.
    let rems = poly.power_remainders(n);
    let mut p = BitMatrix::zeros(k, r);
    for i in 0..k {
        let rem = rems[n - 1 - i];
        for j in 0..r {
            // Column j of the parity part is the coefficient of x^(r-1-j).
            if rem >> (r - 1 - j) & 1 == 1 {
                p.set(i, j, true);
            }
        }
    }
    Ok(LinearCode::from_parity_part(
        n,
        k,
        p,
        format!("CRC[{n},{k}] poly={}", poly.to_hex()),
    ))
}

/// CRC remainder of a whole word by MSB-first long division with a zero
/// initial register. A word is a codeword of [`make_crc_code`] iff this is 0.
pub fn crc_remainder(word: &BinaryWord, poly: CrcPolynomial) -> u128 {
    let degree = poly.degree().expect("nonzero polynomial");
    let top = 1u128 << degree;
    let mut reg = 0u128;
    for bit in word.iter() {
        reg = reg << 1 | bit as u128;
        if reg & top != 0 {
            reg ^= poly.0;
        }
    }
    reg
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn rejects_bad_dimensions() {
        assert!(matches!(
            make_random_linear_code(4, 4, 0),
            Err(Error::InvalidDimensions { .. })
        ));
        assert!(make_random_linear_code(4, 0, 0).is_err());
        assert!(make_crc_code(3, 3, CrcPolynomial(0b1011)).is_err());
    }

    #[test]
    fn crc_degree_mismatch() {
        assert!(matches!(
            make_crc_code(8, 4, CrcPolynomial(0b1011)),
            Err(Error::PolynomialDegree {
                degree: 3,
                expected: 4
            })
        ));
    }

    #[test]
    fn crc_hand_division() {
        // x^3 mod (x^3 + x + 1) = x + 1, so the message 1 encodes to 1|011.
        let code = make_crc_code(4, 1, CrcPolynomial(0b1011)).unwrap();
        let cw = code.encode(&BinaryWord::from_str_bits("1")).unwrap();
        assert_eq!(cw.to_string(), "1011");
        assert_eq!(crc_remainder(&cw, CrcPolynomial(0b1011)), 0);
    }

    #[test]
    fn crc_membership_matches_division() {
        let poly = CrcPolynomial(0b1_0011); // x^4 + x + 1
        let code = make_crc_code(11, 7, poly).unwrap();
        for v in 0u32..(1 << 11) {
            let w = BinaryWord::from_bits((0..11).map(|j| v >> (10 - j) & 1 == 1));
            assert_eq!(
                code.is_member(&w).unwrap(),
                crc_remainder(&w, poly) == 0,
                "{w}"
            );
        }
    }

    #[test]
    fn length_checks() {
        let code = make_random_linear_code(6, 3, 1).unwrap();
        assert!(code.encode(&BinaryWord::zeros(4)).is_err());
        assert!(code.is_member(&BinaryWord::zeros(5)).is_err());
        assert!(code.is_member(&BinaryWord::zeros(6)).unwrap());
    }

    #[test]
    fn column_syndromes_agree_with_rows() {
        let code = make_crc_code(128, 104, CrcPolynomial::CRC24A).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(9);
        for _ in 0..50 {
            let w = BinaryWord::from_bits((0..128).map(|_| rng.random::<bool>()));
            let s = code.syndrome(&w);
            let direct = code.parity().matrix.mul_vec(&w);
            let packed = BinaryWord::from_bits((0..24).map(|r| s[r / 64] >> (r % 64) & 1 == 1));
            assert_eq!(packed, direct);
            assert_eq!(s.iter().all(|&l| l == 0), code.is_member(&w).unwrap());
        }
    }

    #[test]
    fn polynomial_hex() {
        assert_eq!(CrcPolynomial::CRC24A.degree(), Some(24));
        assert_eq!(CrcPolynomial::CRC22.degree(), Some(22));
        let p = CrcPolynomial::from_hex("0x1864cfb").unwrap();
        assert_eq!(p, CrcPolynomial::CRC24A);
        assert!(CrcPolynomial::from_hex("zz").is_err());
    }
}
