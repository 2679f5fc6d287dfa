//! Seeded, paired Monte Carlo sweeps over Eb/N0.
//!
//! Every block draws its message and noise from a ChaCha8 stream selected by
//! `(master seed, grid index, block index)`, so results do not depend on how
//! blocks are spread over worker threads. Blocks are processed in fixed-size
//! batches and the stopping rule is checked only between batches, in block
//! order.

mod config;
mod oracle;
mod report;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

pub use config::{CodeFamily, SimConfig, Variant};
pub use oracle::{run_ml_equivalence, MlEquivalenceConfig, MlEquivalenceReport, MlEquivalenceRow};
pub use report::{
    percentile, wilson_interval, PairedComparison, PointStats, ReportFormat, SimReport,
    TrialRecord, Z95,
};

use crate::codebook::LinearCode;
use crate::decoder::{grand_hard, orbgrand_binary, orbgrand_symbol, QueryBudget};
use crate::gf2::BinaryWord;
use crate::modem::{awgn, ChannelParams, Constellation, MAPPING_VERSION};
use crate::{Error, Result};

/// Blocks per batch between stopping-rule checks.
pub const BATCH_BLOCKS: u64 = 250;

fn splitmix64(mut x: u64) -> u64 {
    x = x.wrapping_add(0x9E37_79B9_7F4A_7C15);
    x = (x ^ (x >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    x = (x ^ (x >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    x ^ (x >> 31)
}

/// RNG for one block: seeded from the master seed and grid index, with the
/// block index as ChaCha stream.
pub fn block_rng(master_seed: u64, point: usize, block: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(splitmix64(master_seed ^ splitmix64(point as u64)));
    rng.set_stream(block);
    rng
}

/// Everything a worker needs to simulate one grid point.
struct Point<'a> {
    config: &'a SimConfig,
    code: &'a LinearCode,
    constellation: &'a Constellation,
    params: ChannelParams,
    index: usize,
    budget: QueryBudget,
}

impl Point<'_> {
    fn simulate(&self, block: u64) -> Result<Vec<TrialRecord>> {
        let mut rng = block_rng(self.config.seed, self.index, block);
        let message = BinaryWord::from_bits((0..self.code.k()).map(|_| rng.random::<bool>()));
        let codeword = self.code.encode(&message)?;
        let tx = self.constellation.modulate(&codeword)?;
        let rx = if self.config.noiseless {
            tx
        } else {
            awgn(&tx, &self.params, &mut rng)
        };

        self.config
            .variants
            .iter()
            .map(|&variant| {
                let outcome = match variant {
                    Variant::Hard => {
                        grand_hard(self.code, &self.constellation.hard_bits(&rx), self.budget)?
                    }
                    Variant::Binary => orbgrand_binary(
                        self.code,
                        &self.constellation.demap_block(&rx, self.params.n0),
                        self.budget,
                        self.config.lines,
                    )?,
                    Variant::Symbol => orbgrand_symbol(
                        self.code,
                        self.constellation,
                        &rx,
                        self.config.mu,
                        self.budget,
                        self.config.lines,
                    )?,
                };
                Ok(TrialRecord {
                    ebn0_db: self.params.ebn0_db,
                    variant,
                    block,
                    error: outcome.codeword.as_ref() != Some(&codeword),
                    queries: outcome.queries,
                    skipped: outcome.skipped,
                })
            })
            .collect()
    }
}

/// Per-variant accumulators for one grid point.
struct Tally {
    errors: Vec<u64>,
    queries: Vec<Vec<u64>>,
    skipped: Vec<u64>,
    /// `only[a][b]`: blocks where variant `a` failed and `b` did not.
    only: Vec<Vec<u64>>,
    blocks: u64,
}

impl Tally {
    fn new(variants: usize) -> Tally {
        Tally {
            errors: vec![0; variants],
            queries: vec![Vec::new(); variants],
            skipped: vec![0; variants],
            only: vec![vec![0; variants]; variants],
            blocks: 0,
        }
    }

    fn add(&mut self, trials: &[TrialRecord]) {
        self.blocks += 1;
        for (v, t) in trials.iter().enumerate() {
            self.errors[v] += t.error as u64;
            self.queries[v].push(t.queries);
            self.skipped[v] += t.skipped;
            for (w, u) in trials.iter().enumerate() {
                if t.error && !u.error {
                    self.only[v][w] += 1;
                }
            }
        }
    }
}

/// Runs the sweep on `workers` threads. The result is independent of
/// `workers`.
pub fn run_sweep(config: &SimConfig, workers: usize) -> Result<SimReport> {
    config.validate()?;
    let code = config.code_spec()?.build()?;
    let constellation = config.constellation()?;
    let budget = QueryBudget::new(config.budget)?;
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(workers.max(1))
        .build()
        .map_err(|e| Error::Config(format!("thread pool: {e}")))?;

    let mut points = Vec::new();
    let mut paired = Vec::new();
    for (index, &ebn0_db) in config.ebn0_db.iter().enumerate() {
        let point = Point {
            config,
            code: &code,
            constellation: &constellation,
            params: ChannelParams::from_ebn0(ebn0_db, code.rate(), constellation.bits_per_symbol())?,
            index,
            budget,
        };
        let nv = config.variants.len();
        let mut tally = Tally::new(nv);
        let mut next = 0u64;
        while next < config.max_blocks
            && tally.errors.iter().copied().min().unwrap_or(0) < config.min_errors
        {
            let end = (next + BATCH_BLOCKS).min(config.max_blocks);
            let batch: Vec<Vec<TrialRecord>> = pool.install(|| {
                (next..end)
                    .into_par_iter()
                    .map(|b| point.simulate(b))
                    .collect::<Result<_>>()
            })?;
            for trials in &batch {
                tally.add(trials);
            }
            next = end;
        }

        for (v, &variant) in config.variants.iter().enumerate() {
            points.push(PointStats::from_trials(
                ebn0_db,
                variant,
                point.params.n0,
                tally.errors[v],
                &mut tally.queries[v],
                tally.skipped[v],
            ));
        }
        for a in 0..nv {
            for b in a + 1..nv {
                paired.push(PairedComparison::new(
                    ebn0_db,
                    config.variants[a],
                    config.variants[b],
                    tally.blocks,
                    tally.only[a][b],
                    tally.only[b][a],
                ));
            }
        }
    }

    Ok(SimReport {
        config: config.clone(),
        code: code.label().to_string(),
        mapping: MAPPING_VERSION.to_string(),
        points,
        paired,
    })
}

/// Simulates a single block of grid point `point` and returns one record
/// per configured variant. Exposed so callers can inspect individual paired
/// trials.
pub fn simulate_block(config: &SimConfig, point: usize, block: u64) -> Result<Vec<TrialRecord>> {
    config.validate()?;
    let code = config.code_spec()?.build()?;
    let constellation = config.constellation()?;
    let ebn0_db = *config
        .ebn0_db
        .get(point)
        .ok_or_else(|| Error::Config(format!("no grid point {point}")))?;
    Point {
        config,
        code: &code,
        constellation: &constellation,
        params: ChannelParams::from_ebn0(ebn0_db, code.rate(), constellation.bits_per_symbol())?,
        index: point,
        budget: QueryBudget::new(config.budget)?,
    }
    .simulate(block)
}
