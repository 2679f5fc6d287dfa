//! Small-instance check that symbol GRAND run in exact exceedance-distance
//! order returns the maximum-likelihood codeword.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::codebook::make_random_linear_code;
use crate::decoder::{ml_oracle, symbol_grand_exact, QueryBudget};
use crate::gf2::BinaryWord;
use crate::modem::{awgn, ChannelParams, Constellation};
use crate::Result;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct MlEquivalenceConfig {
    pub n: usize,
    pub k: usize,
    pub code_seed: u64,
    pub bits_per_symbol: usize,
    pub mu: usize,
    pub n0: Vec<f64>,
    /// Trials per `n0` value.
    pub trials: u64,
    pub seed: u64,
    /// Largest substitution set enumerated; `None` means one per symbol.
    pub max_size: Option<usize>,
    /// Largest total exceedance distance enumerated.
    pub max_delta: f64,
}

impl Default for MlEquivalenceConfig {
    fn default() -> Self {
        MlEquivalenceConfig {
            n: 12,
            k: 6,
            code_seed: 7,
            bits_per_symbol: 4,
            mu: 16,
            n0: vec![0.05, 0.2, 1.0],
            trials: 3334,
            seed: 2024,
            max_size: None,
            max_delta: f64::INFINITY,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct MlEquivalenceRow {
    pub n0: f64,
    pub trials: u64,
    /// Decodes that found a codeword within the enumeration bound.
    pub completed: u64,
    /// Completed decodes agreeing with the ML codeword.
    pub matches: u64,
    /// Decodes that ran out of patterns; counted as mismatches.
    pub incomplete: u64,
    pub mean_queries: f64,
}

impl MlEquivalenceRow {
    pub fn mismatches_within_bound(&self) -> u64 {
        self.completed - self.matches
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct MlEquivalenceReport {
    pub config: MlEquivalenceConfig,
    pub rows: Vec<MlEquivalenceRow>,
}

impl MlEquivalenceReport {
    pub fn trials(&self) -> u64 {
        self.rows.iter().map(|r| r.trials).sum()
    }

    pub fn mismatches_within_bound(&self) -> u64 {
        self.rows.iter().map(|r| r.mismatches_within_bound()).sum()
    }

    pub fn incomplete(&self) -> u64 {
        self.rows.iter().map(|r| r.incomplete).sum()
    }
}

pub fn run_ml_equivalence(config: &MlEquivalenceConfig) -> Result<MlEquivalenceReport> {
    let code = make_random_linear_code(config.n, config.k, config.code_seed)?;
    let constellation = match config.bits_per_symbol {
        1 => Constellation::bpsk(),
        m => Constellation::square_qam(m)?,
    };
    let symbols = config.n / constellation.bits_per_symbol();
    let max_size = config.max_size.unwrap_or(symbols);
    let budget = QueryBudget::new(u64::MAX)?;

    let mut rows = Vec::new();
    for (p, &n0) in config.n0.iter().enumerate() {
        let params = ChannelParams::from_n0(n0)?;
        let mut row = MlEquivalenceRow {
            n0,
            trials: config.trials,
            completed: 0,
            matches: 0,
            incomplete: 0,
            mean_queries: 0.0,
        };
        let mut queries = 0u64;
        for t in 0..config.trials {
            let mut rng = ChaCha8Rng::seed_from_u64(config.seed ^ ((p as u64) << 48));
            rng.set_stream(t);
            let message = BinaryWord::from_bits((0..code.k()).map(|_| rng.random::<bool>()));
            let tx = constellation.modulate(&code.encode(&message)?)?;
            let rx = awgn(&tx, &params, &mut rng);
            let ml = ml_oracle(&code, &constellation, &rx)?;
            let out = symbol_grand_exact(
                &code,
                &constellation,
                &rx,
                config.mu,
                max_size,
                config.max_delta,
                budget,
            )?;
            queries += out.queries;
            match out.codeword {
                Some(c) => {
                    row.completed += 1;
                    row.matches += (c == ml) as u64;
                }
                None => row.incomplete += 1,
            }
        }
        row.mean_queries = queries as f64 / config.trials.max(1) as f64;
        rows.push(row);
    }
    Ok(MlEquivalenceReport {
        config: config.clone(),
        rows,
    })
}
