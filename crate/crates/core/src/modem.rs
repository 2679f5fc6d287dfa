//! Gray-mapped square QAM, the AWGN channel, hard detection, nearest-neighbour
//! candidate lists with exceedance distances, and the Log-MAP bit demapper.
//!
//! A constellation is the product of an in-phase and a quadrature PAM axis.
//! Each axis carries a reflected Gray label over its levels, ordered from the
//! most negative amplitude upwards. The label of a point is the I label
//! followed by the Q label, and a symbol carries its label bits MSB first.
//! Points are indexed in raster order `i_level * q_levels + q_level`.

use num_complex::Complex64;
use rand::Rng;
use rand_distr::StandardNormal;

use crate::gf2::BinaryWord;
use crate::{Error, Result};

/// Identifies the bit mapping used by [`Constellation`], recorded in
/// simulation output.
pub const MAPPING_VERSION: &str = "gray-per-axis-msb-first-v1";

#[inline]
fn gray(j: u32) -> u32 {
    j ^ (j >> 1)
}

#[inline]
fn dist2(a: Complex64, b: Complex64) -> f64 {
    let dr = a.re - b.re;
    let di = a.im - b.im;
    dr * dr + di * di
}

/// One PAM axis of a square (or degenerate) QAM constellation.
#[derive(Clone, Debug)]
struct Axis {
    bits: u32,
    levels: Vec<f64>,
    scale: f64,
}

impl Axis {
    fn new(bits: u32, scale: f64) -> Axis {
        let m = 1usize << bits;
        let levels = (0..m)
            .map(|j| (2.0 * j as f64 - (m as f64 - 1.0)) * scale)
            .collect();
        Axis {
            bits,
            levels,
            scale,
        }
    }

    fn len(&self) -> usize {
        self.levels.len()
    }

    /// Nearest level, ties to the lower level.
    #[inline]
    fn nearest(&self, x: f64) -> usize {
        let m = self.levels.len();
        if m == 1 {
            return 0;
        }
        let t = (x / self.scale + (m as f64 - 1.0)) / 2.0;
        let j = (t - 0.5).ceil();
        j.clamp(0.0, (m - 1) as f64) as usize
    }

    /// Levels ordered by distance from `x` (ties to the lower level), cut at
    /// `count` entries but keeping any level tied with the last one kept.
    fn nearest_levels(&self, x: f64, count: usize, out: &mut Vec<usize>) {
        out.clear();
        let m = self.levels.len();
        let start = self.nearest(x);
        out.push(start);
        let (mut lo, mut hi) = (start as isize - 1, start + 1);
        let dist = |j: usize| (x - self.levels[j]).abs();
        while out.len() < m {
            let next = match (lo >= 0, hi < m) {
                (true, true) => {
                    if dist(lo as usize) <= dist(hi) {
                        lo as usize
                    } else {
                        hi
                    }
                }
                (true, false) => lo as usize,
                (false, true) => hi,
                (false, false) => break,
            };
            if out.len() >= count && dist(next) > dist(*out.last().unwrap()) {
                break;
            }
            out.push(next);
            if next == hi {
                hi += 1;
            } else {
                lo -= 1;
            }
        }
    }
}

/// A Gray-labelled QAM constellation with unit average energy.
#[derive(Clone, Debug)]
pub struct Constellation {
    bits_per_symbol: usize,
    i_axis: Axis,
    q_axis: Axis,
    points: Vec<Complex64>,
    labels: Vec<u32>,
    index_of_label: Vec<usize>,
}

/// A neighbour of a received sample together with its exceedance distance.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Candidate {
    pub index: usize,
    pub delta: f64,
}

impl Constellation {
    /// Square `2^m_s`-QAM for `m_s` in {2, 4, 6, 8}.
    pub fn square_qam(bits_per_symbol: usize) -> Result<Constellation> {
        if !matches!(bits_per_symbol, 2 | 4 | 6 | 8) {
            return Err(Error::UnsupportedModulation(bits_per_symbol));
        }
        let h = (bits_per_symbol / 2) as u32;
        let m = (1u64 << h) as f64;
        // Per axis E[a^2] = (M^2 - 1) / 3 for unit level spacing 2.
        let scale = (3.0 / (2.0 * (m * m - 1.0))).sqrt();
        Ok(Self::from_axes(Axis::new(h, scale), Axis::new(h, scale)))
    }

    /// Antipodal 2-point constellation on the real axis: bit 0 maps to -1,
    /// bit 1 to +1.
    pub fn bpsk() -> Constellation {
        Self::from_axes(Axis::new(1, 1.0), Axis::new(0, 1.0))
    }

    fn from_axes(i_axis: Axis, q_axis: Axis) -> Constellation {
        let mut c = Constellation {
            bits_per_symbol: 0,
            i_axis,
            q_axis,
            points: Vec::new(),
            labels: Vec::new(),
            index_of_label: Vec::new(),
        };
        c.rebuild();
        c
    }

    fn rebuild(&mut self) {
        let (mi, mq) = (self.i_axis.len(), self.q_axis.len());
        let qb = self.q_axis.bits;
        self.bits_per_symbol = (self.i_axis.bits + qb) as usize;
        self.points.clear();
        self.labels.clear();
        self.index_of_label = vec![0; mi * mq];
        for ji in 0..mi {
            for jq in 0..mq {
                let idx = ji * mq + jq;
                let label = gray(ji as u32) << qb | gray(jq as u32);
                self.points
                    .push(Complex64::new(self.i_axis.levels[ji], self.q_axis.levels[jq]));
                self.labels.push(label);
                self.index_of_label[label as usize] = idx;
            }
        }
    }

    pub fn bits_per_symbol(&self) -> usize {
        self.bits_per_symbol
    }

    pub fn size(&self) -> usize {
        self.points.len()
    }

    pub fn points(&self) -> &[Complex64] {
        &self.points
    }

    pub fn point(&self, index: usize) -> Complex64 {
        self.points[index]
    }

    /// Bit label of a point, MSB first on the wire.
    pub fn label(&self, index: usize) -> u32 {
        self.labels[index]
    }

    pub fn index_of_label(&self, label: u32) -> usize {
        self.index_of_label[label as usize]
    }

    /// Levels per axis (`sqrt(size)` for square QAM).
    pub fn axis_levels(&self) -> (usize, usize) {
        (self.i_axis.len(), self.q_axis.len())
    }

    pub fn average_energy(&self) -> f64 {
        self.points.iter().map(|p| p.norm_sqr()).sum::<f64>() / self.size() as f64
    }

    /// Maps each run of `m_s` codeword bits onto one symbol.
    pub fn modulate(&self, word: &BinaryWord) -> Result<SymbolBlock> {
        let m = self.bits_per_symbol;
        if word.len() % m != 0 {
            return Err(Error::LengthMismatch {
                expected: word.len().next_multiple_of(m),
                actual: word.len(),
            });
        }
        Ok(SymbolBlock(
            (0..word.len() / m)
                .map(|s| self.points[self.index_of_label(word.read_msb(s * m, m))])
                .collect(),
        ))
    }

    /// Concatenated labels of a sequence of point indices.
    pub fn bits_of(&self, indices: &[usize]) -> BinaryWord {
        let m = self.bits_per_symbol;
        let mut w = BinaryWord::zeros(indices.len() * m);
        for (s, &idx) in indices.iter().enumerate() {
            w.write_msb(s * m, m, self.labels[idx]);
        }
        w
    }

    /// Nearest point, ties to the lowest index. Uses per-axis rounding.
    pub fn hard_detect(&self, y: Complex64) -> usize {
        self.i_axis.nearest(y.re) * self.q_axis.len() + self.q_axis.nearest(y.im)
    }

    /// Exhaustive nearest-point scan.
    pub fn hard_detect_exhaustive(&self, y: Complex64) -> usize {
        let mut best = 0;
        let mut best_d = f64::INFINITY;
        for (i, &p) in self.points.iter().enumerate() {
            let d = dist2(y, p);
            if d < best_d {
                best = i;
                best_d = d;
            }
        }
        best
    }

    /// Hard decisions for a whole block, as bits.
    pub fn hard_bits(&self, block: &SymbolBlock) -> BinaryWord {
        let idx: Vec<usize> = block.0.iter().map(|&y| self.hard_detect(y)).collect();
        self.bits_of(&idx)
    }

    /// The `mu` points nearest `y`, ordered by squared distance (ties by
    /// index), each with its exceedance distance over the first.
    pub fn candidates(&self, y: Complex64, mu: usize) -> Result<Vec<Candidate>> {
        let mut out = Vec::with_capacity(mu);
        let mut scratch = CandidateScratch::default();
        self.candidates_into(y, mu, &mut scratch, &mut out)?;
        Ok(out)
    }

    pub(crate) fn candidates_into(
        &self,
        y: Complex64,
        mu: usize,
        scratch: &mut CandidateScratch,
        out: &mut Vec<Candidate>,
    ) -> Result<()> {
        self.check_mu(mu)?;
        out.clear();
        self.i_axis.nearest_levels(y.re, mu, &mut scratch.i_levels);
        self.q_axis.nearest_levels(y.im, mu, &mut scratch.q_levels);
        let mq = self.q_axis.len();
        scratch.pool.clear();
        for &ji in &scratch.i_levels {
            for &jq in &scratch.q_levels {
                let idx = ji * mq + jq;
                scratch.pool.push((dist2(y, self.points[idx]), idx));
            }
        }
        Self::select(&mut scratch.pool, mu, out);
        Ok(())
    }

    /// Same contract as [`Constellation::candidates`], scanning every point.
    pub fn candidates_exhaustive(&self, y: Complex64, mu: usize) -> Result<Vec<Candidate>> {
        self.check_mu(mu)?;
        let mut pool: Vec<(f64, usize)> = self
            .points
            .iter()
            .enumerate()
            .map(|(i, &p)| (dist2(y, p), i))
            .collect();
        let mut out = Vec::with_capacity(mu);
        Self::select(&mut pool, mu, &mut out);
        Ok(out)
    }

    fn check_mu(&self, mu: usize) -> Result<()> {
        if mu == 0 || mu > self.size() {
            return Err(Error::NeighbourCount {
                mu,
                max: self.size(),
            });
        }
        Ok(())
    }

    fn select(pool: &mut [(f64, usize)], mu: usize, out: &mut Vec<Candidate>) {
        pool.sort_unstable_by(|a, b| a.0.total_cmp(&b.0).then(a.1.cmp(&b.1)));
        let base = pool[0].0;
        out.extend(pool[..mu].iter().enumerate().map(|(e, &(d, index))| Candidate {
            index,
            delta: if e == 0 { 0.0 } else { d - base },
        }));
    }

    /// Log-MAP bit LLRs of one received sample, `ln P(bit=1)/P(bit=0)`,
    /// evaluated over every constellation point with a per-subset
    /// log-sum-exp.
    pub fn logmap_demap(&self, y: Complex64, n0: f64) -> Vec<f64> {
        let m = self.bits_per_symbol;
        let metrics: Vec<f64> = self.points.iter().map(|&p| -dist2(y, p) / n0).collect();
        (0..m)
            .map(|l| {
                let shift = m - 1 - l;
                let ones = log_sum_exp(
                    metrics
                        .iter()
                        .zip(&self.labels)
                        .filter(|(_, &lab)| lab >> shift & 1 == 1)
                        .map(|(&v, _)| v),
                );
                let zeros = log_sum_exp(
                    metrics
                        .iter()
                        .zip(&self.labels)
                        .filter(|(_, &lab)| lab >> shift & 1 == 0)
                        .map(|(&v, _)| v),
                );
                ones - zeros
            })
            .collect()
    }

    /// Exact Log-MAP LLRs using the product structure: the sum over the
    /// other axis cancels in every ratio, so each bit only needs its own
    /// axis. Writes `m_s` values into `out`.
    pub fn logmap_demap_axiswise(&self, y: Complex64, n0: f64, out: &mut [f64]) {
        debug_assert_eq!(out.len(), self.bits_per_symbol);
        let ib = self.i_axis.bits as usize;
        axis_llrs(&self.i_axis, y.re, n0, &mut out[..ib]);
        axis_llrs(&self.q_axis, y.im, n0, &mut out[ib..]);
    }

    /// Axis-wise Log-MAP LLRs for a whole block.
    pub fn demap_block(&self, block: &SymbolBlock, n0: f64) -> LlrVector {
        let m = self.bits_per_symbol;
        let mut values = vec![0.0; block.len() * m];
        for (chunk, &y) in values.chunks_exact_mut(m).zip(&block.0) {
            self.logmap_demap_axiswise(y, n0, chunk);
        }
        LlrVector(values)
    }
}

fn axis_llrs(axis: &Axis, x: f64, n0: f64, out: &mut [f64]) {
    let bits = axis.bits as usize;
    let metrics: Vec<f64> = axis.levels.iter().map(|&a| -(x - a) * (x - a) / n0).collect();
    for (l, slot) in out.iter_mut().enumerate().take(bits) {
        let shift = bits - 1 - l;
        let ones = log_sum_exp(
            metrics
                .iter()
                .enumerate()
                .filter(|(j, _)| gray(*j as u32) >> shift & 1 == 1)
                .map(|(_, &v)| v),
        );
        let zeros = log_sum_exp(
            metrics
                .iter()
                .enumerate()
                .filter(|(j, _)| gray(*j as u32) >> shift & 1 == 0)
                .map(|(_, &v)| v),
        );
        *slot = ones - zeros;
    }
}

fn log_sum_exp<I: Iterator<Item = f64> + Clone>(values: I) -> f64 {
    let max = values.clone().fold(f64::NEG_INFINITY, f64::max);
    if max == f64::NEG_INFINITY {
        return max;
    }
    max + values.map(|v| (v - max).exp()).sum::<f64>().ln()
}

#[derive(Default)]
pub(crate) struct CandidateScratch {
    i_levels: Vec<usize>,
    q_levels: Vec<usize>,
    pool: Vec<(f64, usize)>,
}

/// A block of complex baseband samples, one per transmitted symbol.
#[derive(Clone, Debug, PartialEq)]
pub struct SymbolBlock(pub Vec<Complex64>);

impl SymbolBlock {
    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn samples(&self) -> &[Complex64] {
        &self.0
    }
}

/// Per-bit log-likelihood ratios; positive favours bit 1.
#[derive(Clone, Debug, PartialEq)]
pub struct LlrVector(pub Vec<f64>);

impl LlrVector {
    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn values(&self) -> &[f64] {
        &self.0
    }
}

/// Candidate lists for every position of a received block, `mu` per
/// position, stored flat.
#[derive(Clone, Debug)]
pub struct CandidateSet {
    mu: usize,
    entries: Vec<Candidate>,
}

impl CandidateSet {
    pub fn build(constellation: &Constellation, block: &SymbolBlock, mu: usize) -> Result<Self> {
        let mut entries = Vec::with_capacity(block.len() * mu);
        let mut scratch = CandidateScratch::default();
        let mut one = Vec::with_capacity(mu);
        for &y in block.samples() {
            constellation.candidates_into(y, mu, &mut scratch, &mut one)?;
            entries.extend_from_slice(&one);
        }
        Ok(CandidateSet { mu, entries })
    }

    pub fn mu(&self) -> usize {
        self.mu
    }

    pub fn positions(&self) -> usize {
        self.entries.len() / self.mu
    }

    pub fn at(&self, position: usize) -> &[Candidate] {
        &self.entries[position * self.mu..(position + 1) * self.mu]
    }

    /// Hard decision (entry 0) of every position.
    pub fn hard_indices(&self) -> Vec<usize> {
        self.entries.iter().step_by(self.mu).map(|c| c.index).collect()
    }
}

/// Channel operating point.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct ChannelParams {
    pub n0: f64,
    pub ebn0_db: f64,
    pub rate: f64,
    pub bits_per_symbol: usize,
}

impl ChannelParams {
    pub fn from_ebn0(ebn0_db: f64, rate: f64, bits_per_symbol: usize) -> Result<Self> {
        Ok(ChannelParams {
            n0: ebn0_to_n0(ebn0_db, rate, bits_per_symbol)?,
            ebn0_db,
            rate,
            bits_per_symbol,
        })
    }

    /// Operating point given directly by `N0`, at rate 1 and one bit per
    /// symbol.
    pub fn from_n0(n0: f64) -> Result<Self> {
        if !(n0 > 0.0 && n0.is_finite()) {
            return Err(Error::Channel(format!("N0 must be positive, got {n0}")));
        }
        Ok(ChannelParams {
            n0,
            ebn0_db: -10.0 * n0.log10(),
            rate: 1.0,
            bits_per_symbol: 1,
        })
    }
}

/// `N0 = 1 / (rate * m_s * 10^(Eb/N0 / 10))` for unit average symbol energy.
pub fn ebn0_to_n0(ebn0_db: f64, rate: f64, bits_per_symbol: usize) -> Result<f64> {
    if !(rate > 0.0 && rate <= 1.0) {
        return Err(Error::Channel(format!("rate must lie in (0, 1], got {rate}")));
    }
    if bits_per_symbol == 0 {
        return Err(Error::Channel("bits per symbol must be at least 1".into()));
    }
    Ok(1.0 / (rate * bits_per_symbol as f64 * 10f64.powf(ebn0_db / 10.0)))
}

/// Adds circular complex Gaussian noise with variance `N0 / 2` per real
/// dimension.
pub fn awgn<R: Rng + ?Sized>(block: &SymbolBlock, params: &ChannelParams, rng: &mut R) -> SymbolBlock {
    let sigma = (params.n0 / 2.0).sqrt();
    SymbolBlock(
        block
            .samples()
            .iter()
            .map(|&x| {
                let re: f64 = rng.sample(StandardNormal);
                let im: f64 = rng.sample(StandardNormal);
                x + Complex64::new(sigma * re, sigma * im)
            })
            .collect(),
    )
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn c(re: f64, im: f64) -> Complex64 {
        Complex64::new(re, im)
    }

    #[test]
    fn rejects_unsupported_orders() {
        for m in [0, 1, 3, 5, 10] {
            assert!(Constellation::square_qam(m).is_err());
        }
    }

    #[test]
    fn qpsk_points() {
        let q = Constellation::square_qam(2).unwrap();
        let a = 1.0 / 2f64.sqrt();
        for p in q.points() {
            assert!((p.re.abs() - a).abs() < 1e-15 && (p.im.abs() - a).abs() < 1e-15);
        }
        assert!((q.average_energy() - 1.0).abs() < 1e-12);
    }

    #[test]
    fn qam16_levels() {
        let q = Constellation::square_qam(4).unwrap();
        let s = 1.0 / 10f64.sqrt();
        let mut re: Vec<f64> = q.points().iter().map(|p| p.re / s).collect();
        re.sort_by(f64::total_cmp);
        re.dedup_by(|a, b| (*a - *b).abs() < 1e-9);
        assert_eq!(re.len(), 4);
        for (x, want) in re.iter().zip([-3.0, -1.0, 1.0, 3.0]) {
            assert!((x - want).abs() < 1e-12);
        }
        assert!((q.average_energy() - 1.0).abs() < 1e-12);
    }

    #[test]
    fn unit_energy_all_orders() {
        for m in [2, 4, 6, 8] {
            let q = Constellation::square_qam(m).unwrap();
            assert_eq!(q.size(), 1 << m);
            assert!((q.average_energy() - 1.0).abs() < 1e-12);
        }
        assert!((Constellation::bpsk().average_energy() - 1.0).abs() < 1e-12);
    }

    #[test]
    fn label_bijection() {
        for m in [2, 4, 6, 8] {
            let q = Constellation::square_qam(m).unwrap();
            let mut seen = vec![false; q.size()];
            for i in 0..q.size() {
                let l = q.label(i) as usize;
                assert!(!seen[l]);
                seen[l] = true;
                assert_eq!(q.index_of_label(l as u32), i);
            }
        }
    }

    #[test]
    fn qam16_hard_detection_example() {
        let q = Constellation::square_qam(4).unwrap();
        let s = 1.0 / 10f64.sqrt();
        let idx = q.hard_detect(c(2.6 * s, 0.9 * s));
        let p = q.point(idx);
        assert!((p.re / s - 3.0).abs() < 1e-12 && (p.im / s - 1.0).abs() < 1e-12);
    }

    #[test]
    fn qam16_candidate_example() {
        let q = Constellation::square_qam(4).unwrap();
        let s = 1.0 / 10f64.sqrt();
        let cands = q.candidates(c(2.6 * s, 0.9 * s), 2).unwrap();
        assert_eq!(cands[0].delta, 0.0);
        let p1 = q.point(cands[1].index);
        assert!((p1.re / s - 1.0).abs() < 1e-12 && (p1.im / s - 1.0).abs() < 1e-12);
        // (1.6^2 + 0.1^2) - (0.4^2 + 0.1^2) = 2.57 - 0.17 in unscaled units.
        assert!((cands[1].delta / (s * s) - 2.40).abs() < 1e-12);
    }

    #[test]
    fn mu_range() {
        let q = Constellation::square_qam(4).unwrap();
        assert!(q.candidates(c(0.0, 0.0), 0).is_err());
        assert!(q.candidates(c(0.0, 0.0), 17).is_err());
        let one = q.candidates(c(0.1, 0.2), 1).unwrap();
        assert_eq!(one.len(), 1);
        assert_eq!(one[0].delta, 0.0);
        assert_eq!(q.candidates(c(0.1, 0.2), 16).unwrap().len(), 16);
    }

    #[test]
    fn modulate_requires_divisible_length() {
        let q = Constellation::square_qam(4).unwrap();
        assert!(q.modulate(&BinaryWord::zeros(6)).is_err());
    }

    #[test]
    fn modulate_zero_word_qpsk() {
        let q = Constellation::square_qam(2).unwrap();
        let block = q.modulate(&BinaryWord::zeros(8)).unwrap();
        let zero = q.point(q.index_of_label(0));
        assert!(block.samples().iter().all(|&x| x == zero));
    }

    #[test]
    fn ebn0_conversion() {
        assert!((ebn0_to_n0(0.0, 1.0, 1).unwrap() - 1.0).abs() < 1e-15);
        assert!((ebn0_to_n0(10.0, 0.5, 2).unwrap() - 0.1).abs() < 1e-15);
        let want = 1.0 / (7.3125 * 10f64.powf(0.3));
        assert!((ebn0_to_n0(3.0, 234.0 / 256.0, 8).unwrap() - want).abs() < 1e-15);
        assert!(ebn0_to_n0(3.0, 0.0, 8).is_err());
        assert!(ebn0_to_n0(3.0, -0.5, 8).is_err());
        assert!(ebn0_to_n0(3.0, 0.5, 0).is_err());
    }

    #[test]
    fn awgn_vanishing_noise() {
        let q = Constellation::square_qam(4).unwrap();
        let block = q.modulate(&BinaryWord::from_str_bits("10110100")).unwrap();
        let params = ChannelParams::from_n0(1e-300).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let out = awgn(&block, &params, &mut rng);
        for (a, b) in out.samples().iter().zip(block.samples()) {
            assert!((a - b).norm() < 1e-140);
        }
        assert!(ChannelParams::from_n0(0.0).is_err());
    }

    #[test]
    fn awgn_seeded_determinism() {
        let block = SymbolBlock(vec![c(0.0, 0.0); 64]);
        let params = ChannelParams::from_n0(0.3).unwrap();
        let a = awgn(&block, &params, &mut ChaCha8Rng::seed_from_u64(5));
        let b = awgn(&block, &params, &mut ChaCha8Rng::seed_from_u64(5));
        assert_eq!(a, b);
    }

    #[test]
    fn demap_zero_on_symmetry_axis() {
        let q = Constellation::square_qam(4).unwrap();
        // On the imaginary axis the first I bit (sign bit) is undecided.
        let llr = q.logmap_demap(c(0.0, 0.37), 0.2);
        assert!(llr[0].abs() < 1e-12);
    }
}
