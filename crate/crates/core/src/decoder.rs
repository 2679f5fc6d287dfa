//! The GRAND query loop and its hard, binary-ORBGRAND and symbol-ORBGRAND
//! front ends, plus an exhaustive maximum-likelihood decoder for testing.
//!
//! Every front end reduces to the same search: a base word (the hard
//! decision), a table of *moves* indexed by reliability rank, and a pattern
//! source choosing sets of moves. A move flips one or more bits of the base
//! word and belongs to a group; a pattern using two moves of the same group
//! is invalid and skipped without a codebook query. In binary mode a move is
//! a single bit flip with its own group. In symbol mode a move substitutes one
//! neighbouring constellation point for the hard decision at a symbol
//! position, and the group is that position.
//!
//! Queries are answered from syndromes: the base syndrome is computed once,
//! and each candidate's syndrome is the base XOR the syndromes of its moves,
//! which equals `H * (base ^ z)^T`.

use crate::codebook::LinearCode;
use crate::gf2::BinaryWord;
use crate::modem::{CandidateSet, Constellation, LlrVector, SymbolBlock};
use crate::patterns::{
    fit_weight_model, rank, PatternGenerator, PatternSource, ReliabilityRanking, SortedSchedule,
    WeightModel,
};
use crate::{Error, Result};

/// Upper bound on codebook queries for one decode.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct QueryBudget(u64);

impl QueryBudget {
    pub const DEFAULT: QueryBudget = QueryBudget(1_000_000);

    pub fn new(max_queries: u64) -> Result<Self> {
        if max_queries == 0 {
            return Err(Error::Config("query budget must be at least 1".into()));
        }
        Ok(QueryBudget(max_queries))
    }

    pub fn max_queries(self) -> u64 {
        self.0
    }
}

impl Default for QueryBudget {
    fn default() -> Self {
        Self::DEFAULT
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum DecodeStatus {
    Decoded,
    /// Budget spent, or the schedule ran out, without finding a codeword.
    Abandoned,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct DecodeOutcome {
    pub codeword: Option<BinaryWord>,
    pub status: DecodeStatus,
    /// Codebook membership queries issued.
    pub queries: u64,
    /// Patterns generated but skipped as invalid (never queried).
    pub skipped: u64,
    /// Number of reliabilities that were rank-ordered.
    pub ranked: usize,
}

impl DecodeOutcome {
    pub fn is_decoded(&self) -> bool {
        self.status == DecodeStatus::Decoded
    }
}

/// Rank-indexed move table shared by all front ends.
#[derive(Clone, Debug)]
struct MoveTable {
    limbs: usize,
    syndromes: Vec<u64>,
    groups: Vec<u32>,
    flip_offsets: Vec<u32>,
    flip_bits: Vec<u32>,
}

impl MoveTable {
    fn new(limbs: usize, capacity: usize) -> MoveTable {
        MoveTable {
            limbs,
            syndromes: Vec::with_capacity(capacity * limbs),
            groups: Vec::with_capacity(capacity),
            flip_offsets: vec![0],
            flip_bits: Vec::with_capacity(capacity),
        }
    }

    fn push(&mut self, code: &LinearCode, group: u32, bits: impl IntoIterator<Item = usize>) {
        let start = self.syndromes.len();
        self.syndromes.resize(start + self.limbs, 0);
        for b in bits {
            for (a, c) in self.syndromes[start..].iter_mut().zip(code.column_syndrome(b)) {
                *a ^= c;
            }
            self.flip_bits.push(b as u32);
        }
        self.flip_offsets.push(self.flip_bits.len() as u32);
        self.groups.push(group);
    }

    fn len(&self) -> usize {
        self.groups.len()
    }

    #[inline]
    fn syndrome(&self, m: usize) -> &[u64] {
        &self.syndromes[m * self.limbs..(m + 1) * self.limbs]
    }

    fn apply(&self, word: &mut BinaryWord, m: usize) {
        let (a, b) = (self.flip_offsets[m] as usize, self.flip_offsets[m + 1] as usize);
        for &bit in &self.flip_bits[a..b] {
            word.flip(bit as usize);
        }
    }

    #[inline]
    fn distinct_groups(&self, pattern: &[usize]) -> bool {
        pattern.iter().enumerate().all(|(i, &a)| {
            pattern[i + 1..]
                .iter()
                .all(|&b| self.groups[a] != self.groups[b])
        })
    }
}

/// A prepared GRAND search: base word, its syndrome and the move table.
#[derive(Clone, Debug)]
struct Search {
    base: BinaryWord,
    base_syndrome: Vec<u64>,
    moves: MoveTable,
}

impl Search {
    fn run<S: PatternSource>(
        &self,
        source: &mut S,
        budget: QueryBudget,
        ranked: usize,
        mut trace: Option<&mut Vec<BinaryWord>>,
    ) -> DecodeOutcome {
        let mut queries = 0u64;
        let mut skipped = 0u64;
        let mut syn = vec![0u64; self.base_syndrome.len()];
        let abandoned = |queries, skipped| DecodeOutcome {
            codeword: None,
            status: DecodeStatus::Abandoned,
            queries,
            skipped,
            ranked,
        };
        while let Some(pattern) = source.next_pattern() {
            if !self.moves.distinct_groups(pattern) {
                skipped += 1;
                continue;
            }
            if queries == budget.max_queries() {
                return abandoned(queries, skipped);
            }
            queries += 1;
            syn.copy_from_slice(&self.base_syndrome);
            for &m in pattern {
                for (a, b) in syn.iter_mut().zip(self.moves.syndrome(m)) {
                    *a ^= b;
                }
            }
            let member = syn.iter().all(|&l| l == 0);
            if member || trace.is_some() {
                let mut word = self.base.clone();
                for &m in pattern {
                    self.moves.apply(&mut word, m);
                }
                if let Some(t) = trace.as_deref_mut() {
                    t.push(word.clone());
                }
                if member {
                    return DecodeOutcome {
                        codeword: Some(word),
                        status: DecodeStatus::Decoded,
                        queries,
                        skipped,
                        ranked,
                    };
                }
            }
        }
        abandoned(queries, skipped)
    }
}

fn model_for(ranking: &ReliabilityRanking, lines: usize) -> Result<WeightModel> {
    let n = ranking.len();
    match n {
        0 => Ok(WeightModel::uniform(0)),
        1 => Ok(WeightModel::uniform(1)),
        _ => fit_weight_model(ranking, lines.clamp(1, n - 1)),
    }
}

fn check_len(expected: usize, actual: usize) -> Result<()> {
    if expected != actual {
        return Err(Error::LengthMismatch { expected, actual });
    }
    Ok(())
}

/// Hard-detection GRAND: bit flips in order of increasing flip count, then
/// lexicographically by bit position.
pub fn grand_hard(code: &LinearCode, hard_bits: &BinaryWord, budget: QueryBudget) -> Result<DecodeOutcome> {
    check_len(code.n(), hard_bits.len())?;
    let mut moves = MoveTable::new(code.syndrome_limbs(), code.n());
    for j in 0..code.n() {
        moves.push(code, j as u32, [j]);
    }
    let search = Search {
        base: hard_bits.clone(),
        base_syndrome: code.syndrome(hard_bits),
        moves,
    };
    let mut source = PatternGenerator::new(&WeightModel::uniform(code.n()));
    Ok(search.run(&mut source, budget, 0, None))
}

/// ORBGRAND on demapped bit LLRs, prepared but not yet run.
#[derive(Clone, Debug)]
pub struct BinarySearch {
    search: Search,
    ranking: ReliabilityRanking,
}

impl BinarySearch {
    /// Hard bits are the LLR signs (positive means 1); bits are ranked by
    /// `|LLR|`.
    pub fn prepare(code: &LinearCode, llrs: &LlrVector) -> Result<Self> {
        check_len(code.n(), llrs.len())?;
        let hard = BinaryWord::from_bits(llrs.values().iter().map(|&l| l > 0.0));
        let magnitudes: Vec<f64> = llrs.values().iter().map(|l| l.abs()).collect();
        let ranking = rank(&magnitudes)?;
        let mut moves = MoveTable::new(code.syndrome_limbs(), code.n());
        for &bit in ranking.perm() {
            moves.push(code, bit as u32, [bit]);
        }
        Ok(BinarySearch {
            search: Search {
                base_syndrome: code.syndrome(&hard),
                base: hard,
                moves,
            },
            ranking,
        })
    }

    pub fn ranking(&self) -> &ReliabilityRanking {
        &self.ranking
    }

    pub fn hard_bits(&self) -> &BinaryWord {
        &self.search.base
    }

    pub fn run<S: PatternSource>(&self, source: &mut S, budget: QueryBudget) -> DecodeOutcome {
        self.search.run(source, budget, self.ranking.len(), None)
    }

    pub fn run_traced<S: PatternSource>(
        &self,
        source: &mut S,
        budget: QueryBudget,
    ) -> (DecodeOutcome, Vec<BinaryWord>) {
        let mut trace = Vec::new();
        let out = self.search.run(source, budget, self.ranking.len(), Some(&mut trace));
        (out, trace)
    }

    /// The fitted `lines`-segment weight model for this block.
    pub fn weight_model(&self, lines: usize) -> Result<WeightModel> {
        model_for(&self.ranking, lines)
    }
}

/// Binary ORBGRAND with a weight model refitted to this block's `|LLR|`s.
pub fn orbgrand_binary(
    code: &LinearCode,
    llrs: &LlrVector,
    budget: QueryBudget,
    lines: usize,
) -> Result<DecodeOutcome> {
    let search = BinarySearch::prepare(code, llrs)?;
    let mut source = PatternGenerator::new(&search.weight_model(lines)?);
    Ok(search.run(&mut source, budget))
}

/// [`orbgrand_binary`] that also returns every queried word in order.
pub fn orbgrand_binary_traced(
    code: &LinearCode,
    llrs: &LlrVector,
    budget: QueryBudget,
    lines: usize,
) -> Result<(DecodeOutcome, Vec<BinaryWord>)> {
    let search = BinarySearch::prepare(code, llrs)?;
    let mut source = PatternGenerator::new(&search.weight_model(lines)?);
    Ok(search.run_traced(&mut source, budget))
}

/// ORBGRAND on symbol candidates, prepared but not yet run.
#[derive(Clone, Debug)]
pub struct SymbolSearch {
    search: Search,
    ranking: ReliabilityRanking,
    candidates: CandidateSet,
}

impl SymbolSearch {
    /// Builds the `mu`-nearest candidate lists, ranks the `n_s (mu - 1)`
    /// non-hard candidates by exceedance distance and tabulates the bit
    /// changes each substitution makes through the label map.
    pub fn prepare(
        code: &LinearCode,
        constellation: &Constellation,
        received: &SymbolBlock,
        mu: usize,
    ) -> Result<Self> {
        let m = constellation.bits_per_symbol();
        check_len(code.n(), received.len() * m)?;
        let candidates = CandidateSet::build(constellation, received, mu)?;
        let hard = candidates.hard_indices();
        let base = constellation.bits_of(&hard);

        let alternatives = mu - 1;
        let deltas: Vec<f64> = (0..candidates.positions())
            .flat_map(|i| candidates.at(i)[1..].iter().map(|c| c.delta))
            .collect();
        let ranking = rank(&deltas)?;
        debug_assert_eq!(ranking.len(), code.n() * alternatives / m);

        let mut moves = MoveTable::new(code.syndrome_limbs(), ranking.len());
        for &alt in ranking.perm() {
            let position = alt / alternatives;
            let entry = candidates.at(position)[alt % alternatives + 1];
            let diff = constellation.label(hard[position]) ^ constellation.label(entry.index);
            let bits = (0..m)
                .filter(move |l| diff >> (m - 1 - l) & 1 == 1)
                .map(move |l| position * m + l);
            moves.push(code, position as u32, bits);
        }

        Ok(SymbolSearch {
            search: Search {
                base_syndrome: code.syndrome(&base),
                base,
                moves,
            },
            ranking,
            candidates,
        })
    }

    pub fn ranking(&self) -> &ReliabilityRanking {
        &self.ranking
    }

    pub fn candidates(&self) -> &CandidateSet {
        &self.candidates
    }

    /// Bits of the hard-detection sequence.
    pub fn hard_bits(&self) -> &BinaryWord {
        &self.search.base
    }

    /// Symbol position substituted by the move of rank `r`.
    pub fn position_of_rank(&self, r: usize) -> usize {
        self.search.moves.groups[r] as usize
    }

    pub fn num_moves(&self) -> usize {
        self.search.moves.len()
    }

    pub fn run<S: PatternSource>(&self, source: &mut S, budget: QueryBudget) -> DecodeOutcome {
        self.search.run(source, budget, self.ranking.len(), None)
    }

    pub fn run_traced<S: PatternSource>(
        &self,
        source: &mut S,
        budget: QueryBudget,
    ) -> (DecodeOutcome, Vec<BinaryWord>) {
        let mut trace = Vec::new();
        let out = self.search.run(source, budget, self.ranking.len(), Some(&mut trace));
        (out, trace)
    }

    pub fn weight_model(&self, lines: usize) -> Result<WeightModel> {
        model_for(&self.ranking, lines)
    }
}

/// Symbol ORBGRAND: exceedance distances only, no LLRs.
pub fn orbgrand_symbol(
    code: &LinearCode,
    constellation: &Constellation,
    received: &SymbolBlock,
    mu: usize,
    budget: QueryBudget,
    lines: usize,
) -> Result<DecodeOutcome> {
    let search = SymbolSearch::prepare(code, constellation, received, mu)?;
    let mut source = PatternGenerator::new(&search.weight_model(lines)?);
    Ok(search.run(&mut source, budget))
}

/// [`orbgrand_symbol`] that also returns every queried word in order.
pub fn orbgrand_symbol_traced(
    code: &LinearCode,
    constellation: &Constellation,
    received: &SymbolBlock,
    mu: usize,
    budget: QueryBudget,
    lines: usize,
) -> Result<(DecodeOutcome, Vec<BinaryWord>)> {
    let search = SymbolSearch::prepare(code, constellation, received, mu)?;
    let mut source = PatternGenerator::new(&search.weight_model(lines)?);
    Ok(search.run_traced(&mut source, budget))
}

/// Symbol GRAND with patterns in exact nondecreasing total exceedance
/// distance, over substitution sets of at most `max_size` candidates and total
/// distance at most `max_delta`. Exponential; for small codes only.
pub fn symbol_grand_exact(
    code: &LinearCode,
    constellation: &Constellation,
    received: &SymbolBlock,
    mu: usize,
    max_size: usize,
    max_delta: f64,
    budget: QueryBudget,
) -> Result<DecodeOutcome> {
    const LIMIT: usize = 5_000_000;
    let search = SymbolSearch::prepare(code, constellation, received, mu)?;
    let mut schedule = SortedSchedule::new(search.ranking().values(), max_size, max_delta, LIMIT)?;
    Ok(search.run(&mut schedule, budget))
}

/// Exhaustive maximum-likelihood decoding: the codeword whose modulated
/// sequence is nearest the received block in squared Euclidean distance,
/// ties to the lexicographically smallest codeword.
pub fn ml_oracle(
    code: &LinearCode,
    constellation: &Constellation,
    received: &SymbolBlock,
) -> Result<BinaryWord> {
    let k = code.k();
    if k > 20 {
        return Err(Error::CodebookTooLarge(k));
    }
    let m = constellation.bits_per_symbol();
    check_len(code.n(), received.len() * m)?;
    let g = &code.generator().matrix;

    let distance = |cw: &BinaryWord| -> f64 {
        received
            .samples()
            .iter()
            .enumerate()
            .map(|(s, &y)| {
                let p = constellation.point(constellation.index_of_label(cw.read_msb(s * m, m)));
                (y - p).norm_sqr()
            })
            .sum()
    };

    // Walk the codebook in Gray-code order of the message.
    let mut cw = BinaryWord::zeros(code.n());
    let mut best = cw.clone();
    let mut best_d = distance(&cw);
    for step in 1u64..(1 << k) {
        let row = step.trailing_zeros() as usize;
        cw.xor_assign(g.row(row));
        let d = distance(&cw);
        if d < best_d || (d == best_d && cw.lex_cmp(&best).is_lt()) {
            best_d = d;
            best = cw.clone();
        }
    }
    Ok(best)
}
