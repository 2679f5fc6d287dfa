use std::fmt;
use std::path::Path;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::codebook::{CodeSpec, CrcPolynomial};
use crate::modem::Constellation;
use crate::{Error, Result};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum CodeFamily {
    Rlc,
    Crc,
}

/// Decoder run on every simulated block.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Variant {
    /// Hard-detection GRAND on the per-symbol hard decisions.
    Hard,
    /// ORBGRAND on Log-MAP bit LLRs.
    Binary,
    /// ORBGRAND on symbol exceedance distances.
    Symbol,
}

impl Variant {
    pub fn name(self) -> &'static str {
        match self {
            Variant::Hard => "hard",
            Variant::Binary => "binary",
            Variant::Symbol => "symbol",
        }
    }
}

impl fmt::Display for Variant {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Variant {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim() {
            "hard" => Ok(Variant::Hard),
            "binary" => Ok(Variant::Binary),
            "symbol" => Ok(Variant::Symbol),
            other => Err(Error::Config(format!("unknown variant {other:?}"))),
        }
    }
}

fn default_bits_per_symbol() -> usize {
    4
}
fn default_mu() -> usize {
    3
}
fn default_lines() -> usize {
    3
}
fn default_variants() -> Vec<Variant> {
    vec![Variant::Binary, Variant::Symbol]
}
fn default_min_errors() -> u64 {
    100
}
fn default_max_blocks() -> u64 {
    1_000_000
}
fn default_budget() -> u64 {
    1_000_000
}
fn default_seed() -> u64 {
    1
}

/// Monte Carlo sweep configuration. Read from a flat TOML file of top-level
/// keys, e.g.
///
/// ```toml
/// family = "crc"
/// n = 128
/// k = 104
/// poly = "0x1864cfb"
/// m_s = 4
/// mu = 3
/// ebn0_db = [6.0, 7.0, 8.0]
/// ```
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SimConfig {
    pub family: CodeFamily,
    pub n: usize,
    pub k: usize,
    /// Generator seed for `rlc`.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub code_seed: Option<u64>,
    /// Hex generator polynomial including the leading term, for `crc`.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub poly: Option<String>,
    /// Bits per symbol: 1 selects BPSK, 2/4/6/8 square QAM.
    #[serde(rename = "m_s", default = "default_bits_per_symbol")]
    pub bits_per_symbol: usize,
    #[serde(default = "default_mu")]
    pub mu: usize,
    /// Segments in the piecewise-linear weight model.
    #[serde(default = "default_lines")]
    pub lines: usize,
    #[serde(default = "default_variants")]
    pub variants: Vec<Variant>,
    pub ebn0_db: Vec<f64>,
    #[serde(default = "default_min_errors")]
    pub min_errors: u64,
    #[serde(default = "default_max_blocks")]
    pub max_blocks: u64,
    #[serde(default = "default_budget")]
    pub budget: u64,
    /// Master seed; every block's random stream derives from it.
    #[serde(default = "default_seed")]
    pub seed: u64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub out: Option<String>,
    /// Skip the channel (received = transmitted).
    #[serde(default)]
    pub noiseless: bool,
}

impl SimConfig {
    pub fn from_toml_str(text: &str) -> Result<SimConfig> {
        Ok(toml::from_str(text)?)
    }

    pub fn load(path: &Path) -> Result<SimConfig> {
        Self::from_toml_str(&std::fs::read_to_string(path)?)
    }

    pub fn code_spec(&self) -> Result<CodeSpec> {
        let (n, k) = (self.n, self.k);
        match self.family {
            CodeFamily::Rlc => Ok(CodeSpec::Rlc {
                n,
                k,
                seed: self
                    .code_seed
                    .ok_or_else(|| Error::Config("rlc codes need `code_seed`".into()))?,
            }),
            CodeFamily::Crc => {
                let poly = self
                    .poly
                    .as_deref()
                    .ok_or_else(|| Error::Config("crc codes need `poly`".into()))?;
                Ok(CodeSpec::Crc {
                    n,
                    k,
                    poly: CrcPolynomial::from_hex(poly)?,
                })
            }
        }
    }

    pub fn constellation(&self) -> Result<Constellation> {
        match self.bits_per_symbol {
            1 => Ok(Constellation::bpsk()),
            m => Constellation::square_qam(m),
        }
    }

    /// Checks every invariant a sweep relies on, including that the code
    /// can be built.
    pub fn validate(&self) -> Result<()> {
        let bad = |msg: String| Err(Error::Config(msg));
        if self.ebn0_db.is_empty() {
            return bad("ebn0_db grid is empty".into());
        }
        if let Some(x) = self.ebn0_db.iter().find(|x| !x.is_finite()) {
            return bad(format!("ebn0_db entry {x} is not finite"));
        }
        if self.min_errors == 0 {
            return bad("min_errors must be at least 1".into());
        }
        if self.max_blocks == 0 {
            return bad("max_blocks must be at least 1".into());
        }
        if self.budget == 0 {
            return bad("budget must be at least 1".into());
        }
        if self.lines == 0 {
            return bad("lines must be at least 1".into());
        }
        if self.variants.is_empty() {
            return bad("no decoder variants selected".into());
        }
        let mut sorted = self.variants.clone();
        sorted.sort();
        sorted.dedup();
        if sorted.len() != self.variants.len() {
            return bad("duplicate decoder variant".into());
        }
        let constellation = self.constellation()?;
        if self.mu == 0 || self.mu > constellation.size() {
            return bad(format!(
                "mu = {} must lie in 1..={}",
                self.mu,
                constellation.size()
            ));
        }
        if self.n % self.bits_per_symbol != 0 {
            return bad(format!(
                "n = {} is not a multiple of m_s = {}",
                self.n, self.bits_per_symbol
            ));
        }
        self.code_spec()?.build()?;
        Ok(())
    }
}
