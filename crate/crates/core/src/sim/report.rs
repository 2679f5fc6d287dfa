use std::io::Write;
use std::path::Path;

use serde::{Deserialize, Serialize};

use super::config::{SimConfig, Variant};
use crate::Result;

/// Two-sided 95% normal quantile.
pub const Z95: f64 = 1.959_963_984_540_054;

/// Wilson score interval for `errors` successes out of `blocks` trials.
pub fn wilson_interval(errors: u64, blocks: u64) -> (f64, f64) {
    if blocks == 0 {
        return (0.0, 1.0);
    }
    let n = blocks as f64;
    let p = errors as f64 / n;
    let z2 = Z95 * Z95;
    let denom = 1.0 + z2 / n;
    let centre = (p + z2 / (2.0 * n)) / denom;
    let half = Z95 * (p * (1.0 - p) / n + z2 / (4.0 * n * n)).sqrt() / denom;
    let lo = if errors == 0 { 0.0 } else { (centre - half).max(0.0) };
    let hi = if errors == blocks { 1.0 } else { (centre + half).min(1.0) };
    (lo, hi)
}

/// Nearest-rank percentile of an ascending slice.
pub fn percentile(sorted: &[u64], q: f64) -> u64 {
    if sorted.is_empty() {
        return 0;
    }
    let rank = (q * sorted.len() as f64).ceil() as usize;
    sorted[rank.clamp(1, sorted.len()) - 1]
}

/// One simulated block as seen by one decoder.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct TrialRecord {
    pub ebn0_db: f64,
    pub variant: Variant,
    pub block: u64,
    pub error: bool,
    pub queries: u64,
    pub skipped: u64,
}

/// Statistics of one decoder at one grid point.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct PointStats {
    pub ebn0_db: f64,
    pub variant: Variant,
    pub n0: f64,
    pub blocks: u64,
    pub errors: u64,
    pub bler: f64,
    pub ci_lo: f64,
    pub ci_hi: f64,
    pub mean_queries: f64,
    /// Half-width of the 95% normal interval on `mean_queries`.
    pub mean_queries_ci: f64,
    pub median_queries: u64,
    pub p99_queries: u64,
    pub max_queries: u64,
    pub mean_skipped: f64,
}

impl PointStats {
    pub(crate) fn from_trials(ebn0_db: f64, variant: Variant, n0: f64, errors: u64, queries: &mut [u64], skipped: u64) -> PointStats {
        let blocks = queries.len() as u64;
        queries.sort_unstable();
        let n = blocks.max(1) as f64;
        let mean = queries.iter().map(|&q| q as f64).sum::<f64>() / n;
        let var = if blocks > 1 {
            queries.iter().map(|&q| (q as f64 - mean).powi(2)).sum::<f64>() / (n - 1.0)
        } else {
            0.0
        };
        let (ci_lo, ci_hi) = wilson_interval(errors, blocks);
        PointStats {
            ebn0_db,
            variant,
            n0,
            blocks,
            errors,
            bler: errors as f64 / n,
            ci_lo,
            ci_hi,
            mean_queries: mean,
            mean_queries_ci: Z95 * (var / n).sqrt(),
            median_queries: percentile(queries, 0.5),
            p99_queries: percentile(queries, 0.99),
            max_queries: queries.last().copied().unwrap_or(0),
            mean_skipped: skipped as f64 / n,
        }
    }
}

/// Paired comparison of two decoders over the same received blocks.
///
/// The per-block difference of error indicators `e_a - e_b` takes values in
/// {-1, 0, 1}; its mean is `bler_a - bler_b` and the interval is the 95%
/// normal interval on that mean.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct PairedComparison {
    pub ebn0_db: f64,
    pub a: Variant,
    pub b: Variant,
    pub blocks: u64,
    /// Blocks where only `a` failed.
    pub only_a: u64,
    /// Blocks where only `b` failed.
    pub only_b: u64,
    pub diff: f64,
    pub ci_lo: f64,
    pub ci_hi: f64,
}

impl PairedComparison {
    pub(crate) fn new(ebn0_db: f64, a: Variant, b: Variant, blocks: u64, only_a: u64, only_b: u64) -> Self {
        let n = blocks.max(1) as f64;
        let diff = (only_a as f64 - only_b as f64) / n;
        let var = if blocks > 1 {
            ((only_a + only_b) as f64 - n * diff * diff) / (n - 1.0)
        } else {
            0.0
        };
        let half = Z95 * (var.max(0.0) / n).sqrt();
        PairedComparison {
            ebn0_db,
            a,
            b,
            blocks,
            only_a,
            only_b,
            diff,
            ci_lo: diff - half,
            ci_hi: diff + half,
        }
    }

    /// True when zero lies inside the 95% interval on the paired difference.
    pub fn within_ci(&self) -> bool {
        self.ci_lo <= 0.0 && 0.0 <= self.ci_hi
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SimReport {
    pub config: SimConfig,
    pub code: String,
    pub mapping: String,
    pub points: Vec<PointStats>,
    pub paired: Vec<PairedComparison>,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum ReportFormat {
    Csv,
    Json,
}

impl std::str::FromStr for ReportFormat {
    type Err = crate::Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "csv" => Ok(ReportFormat::Csv),
            "json" => Ok(ReportFormat::Json),
            other => Err(crate::Error::Config(format!("unknown format {other:?}"))),
        }
    }
}

#[derive(Serialize)]
struct CsvRow {
    ebn0_db: f64,
    variant: &'static str,
    blocks: u64,
    errors: u64,
    bler: f64,
    ci_lo: f64,
    ci_hi: f64,
    mean_queries: f64,
    median_queries: u64,
    p99_queries: u64,
}

impl SimReport {
    pub fn stats(&self, ebn0_db: f64, variant: Variant) -> Option<&PointStats> {
        self.points
            .iter()
            .find(|p| p.ebn0_db == ebn0_db && p.variant == variant)
    }

    pub fn paired(&self, ebn0_db: f64, a: Variant, b: Variant) -> Option<&PairedComparison> {
        self.paired
            .iter()
            .find(|p| p.ebn0_db == ebn0_db && p.a == a && p.b == b)
    }

    pub fn write_csv<W: Write>(&self, out: W) -> Result<()> {
        let mut w = csv::Writer::from_writer(out);
        for p in &self.points {
            w.serialize(CsvRow {
                ebn0_db: p.ebn0_db,
                variant: p.variant.name(),
                blocks: p.blocks,
                errors: p.errors,
                bler: p.bler,
                ci_lo: p.ci_lo,
                ci_hi: p.ci_hi,
                mean_queries: p.mean_queries,
                median_queries: p.median_queries,
                p99_queries: p.p99_queries,
            })?;
        }
        w.flush()?;
        Ok(())
    }

    pub fn to_csv_string(&self) -> Result<String> {
        let mut buf = Vec::new();
        self.write_csv(&mut buf)?;
        Ok(String::from_utf8(buf).expect("csv output is utf-8"))
    }

    pub fn to_json_string(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(self)?)
    }

    pub fn from_json_str(text: &str) -> Result<SimReport> {
        Ok(serde_json::from_str(text)?)
    }

    /// Writes the report to `path` in the chosen format.
    pub fn emit(&self, format: ReportFormat, path: &Path) -> Result<()> {
        let text = match format {
            ReportFormat::Csv => self.to_csv_string()?,
            ReportFormat::Json => self.to_json_string()?,
        };
        std::fs::write(path, text)?;
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn wilson_reference_values() {
        // 10 of 100: p = 0.1, Wilson 95% = [0.05523, 0.17437].
        let (lo, hi) = wilson_interval(10, 100);
        assert!((lo - 0.055_229).abs() < 1e-5, "{lo}");
        assert!((hi - 0.174_366).abs() < 1e-5, "{hi}");
        let (lo, hi) = wilson_interval(0, 50);
        assert_eq!(lo, 0.0);
        assert!(hi > 0.0 && hi < 0.08);
    }

    #[test]
    fn nearest_rank_percentiles() {
        let v: Vec<u64> = (1..=100).collect();
        assert_eq!(percentile(&v, 0.5), 50);
        assert_eq!(percentile(&v, 0.99), 99);
        assert_eq!(percentile(&[7], 0.99), 7);
        assert_eq!(percentile(&[], 0.5), 0);
    }

    #[test]
    fn paired_interval() {
        let p = PairedComparison::new(1.0, Variant::Binary, Variant::Symbol, 1000, 5, 5);
        assert_eq!(p.diff, 0.0);
        assert!(p.within_ci());
        let p = PairedComparison::new(1.0, Variant::Binary, Variant::Symbol, 1000, 40, 5);
        assert!(!p.within_ci());
    }
}
