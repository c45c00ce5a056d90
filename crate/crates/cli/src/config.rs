//! Pipeline configuration: TOML file with sections, overridden by flags.
//!
//! ```toml
//! seed = 7
//!
//! [paths]
//! corpus = ["data/corpus.jsonl"]
//! emb = ["data/corpus.emb"]
//! out = "out"
//!
//! [similarity]
//! tau = 0.8
//!
//! [hawkes]
//! max_lag = 14
//! iters = 500
//! ```

use std::path::{Path, PathBuf};

use chrono::NaiveDate;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::error::{CliError, Result};

#[derive(Debug, Clone, Default, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct Paths {
    pub corpus: Vec<PathBuf>,
    pub emb: Vec<PathBuf>,
    pub out: Option<PathBuf>,
    pub exclude: Option<PathBuf>,
    /// `telegram`, `none`, or a `name,group` CSV file.
    pub aggregate_map: Option<String>,
    pub labels: Option<PathBuf>,
    pub report: Option<PathBuf>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct IngestSection {
    pub start: Option<NaiveDate>,
    pub end: Option<NaiveDate>,
    /// Fail on out-of-window records instead of dropping them.
    pub strict_window: bool,
    pub top_domains: usize,
}

impl Default for IngestSection {
    fn default() -> Self {
        Self { start: None, end: None, strict_window: false, top_domains: 10 }
    }
}

#[derive(Debug, Clone, Default, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct EmbSection {
    pub renormalize: bool,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SimilaritySection {
    pub tau: f64,
    pub top_channels: usize,
}

impl Default for SimilaritySection {
    fn default() -> Self {
        Self { tau: 0.8, top_channels: 5 }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ClusterSection {
    pub lambda: f64,
    pub max_iters: usize,
    pub batch_size: usize,
}

impl Default for ClusterSection {
    fn default() -> Self {
        Self { lambda: 0.8, max_iters: 50, batch_size: 256 }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct FlowSection {
    pub horizon_days: usize,
    pub top_channels: usize,
}

impl Default for FlowSection {
    fn default() -> Self {
        Self { horizon_days: 14, top_channels: 5 }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct HawkesSection {
    pub max_lag: usize,
    pub iters: usize,
    pub burn_in: usize,
    pub min_events: u64,
    pub pooled: bool,
    pub background_shape: f64,
    pub background_rate: f64,
    pub weight_shape: f64,
    pub weight_rate: f64,
    pub impulse_concentration: f64,
    pub dump_models: bool,
}

impl Default for HawkesSection {
    fn default() -> Self {
        let p = infoflow::hawkes::Priors::default();
        Self {
            max_lag: 14,
            iters: 500,
            burn_in: 250,
            min_events: 5,
            pooled: false,
            background_shape: p.background_shape,
            background_rate: p.background_rate,
            weight_shape: p.weight_shape,
            weight_rate: p.weight_rate,
            impulse_concentration: p.impulse_concentration,
            dump_models: false,
        }
    }
}

impl HawkesSection {
    pub fn priors(&self) -> infoflow::hawkes::Priors {
        infoflow::hawkes::Priors {
            background_shape: self.background_shape,
            background_rate: self.background_rate,
            weight_shape: self.weight_shape,
            weight_rate: self.weight_rate,
            impulse_concentration: self.impulse_concentration,
        }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SweepSection {
    pub thresholds: Vec<f64>,
    pub half_width: f64,
    pub sample_n: usize,
}

impl Default for SweepSection {
    fn default() -> Self {
        Self { thresholds: (0..10).map(|i| (50 + 5 * i) as f64 / 100.0).collect(), half_width: 0.01, sample_n: 250 }
    }
}

#[derive(Debug, Clone, Default, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct PipelineConfig {
    pub seed: u64,
    pub threads: Option<usize>,
    pub paths: Paths,
    pub ingest: IngestSection,
    pub emb: EmbSection,
    pub similarity: SimilaritySection,
    pub cluster: ClusterSection,
    pub flow: FlowSection,
    pub hawkes: HawkesSection,
    pub sweep: SweepSection,
}

/// The part of the configuration that determines outputs. Paths and the
/// thread count are left out: inputs are identified by content digest, and
/// results do not depend on parallelism.
#[derive(Serialize)]
struct Hashed<'a> {
    seed: u64,
    aggregate_map: &'a Option<String>,
    ingest: &'a IngestSection,
    emb: &'a EmbSection,
    similarity: &'a SimilaritySection,
    cluster: &'a ClusterSection,
    flow: &'a FlowSection,
    hawkes: &'a HawkesSection,
    sweep: &'a SweepSection,
}

impl PipelineConfig {
    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| CliError::io(path, e))?;
        toml::from_str(&text).map_err(|e| CliError::Config(format!("{}: {e}", path.display())))
    }

    pub fn validate(&self) -> Result<()> {
        let unit_open = |name: &str, v: f64| {
            if v > 0.0 && v < 1.0 {
                Ok(())
            } else {
                Err(CliError::Config(format!("{name} must lie in (0, 1), got {v}")))
            }
        };
        unit_open("tau", self.similarity.tau)?;
        unit_open("lambda", self.cluster.lambda)?;
        let h = &self.hawkes;
        if h.iters <= h.burn_in {
            return Err(CliError::Config(format!("iters ({}) must exceed burn-in ({})", h.iters, h.burn_in)));
        }
        if h.max_lag == 0 {
            return Err(CliError::Config("max-lag must be at least 1".into()));
        }
        h.priors().validate().map_err(|e| CliError::Config(e.to_string()))?;
        if self.cluster.max_iters == 0 || self.cluster.batch_size == 0 {
            return Err(CliError::Config("cluster max_iters and batch_size must be positive".into()));
        }
        if self.threads == Some(0) {
            return Err(CliError::Config("threads must be positive".into()));
        }
        if let (Some(a), Some(b)) = (self.ingest.start, self.ingest.end) {
            if a > b {
                return Err(CliError::Config(format!("window start {a} is after end {b}")));
            }
        }
        if self.sweep.thresholds.iter().any(|t| !(-1.0..=1.0).contains(t)) || !(self.sweep.half_width >= 0.0) {
            return Err(CliError::Config("sweep thresholds must lie in [-1, 1] with a nonnegative half-width".into()));
        }
        Ok(())
    }

    pub fn out_dir(&self) -> PathBuf {
        self.paths.out.clone().unwrap_or_else(|| PathBuf::from("out"))
    }

    /// SHA-256 of the canonical JSON of the output-determining fields.
    pub fn hash(&self) -> String {
        let h = Hashed {
            seed: self.seed,
            aggregate_map: &self.paths.aggregate_map,
            ingest: &self.ingest,
            emb: &self.emb,
            similarity: &self.similarity,
            cluster: &self.cluster,
            flow: &self.flow,
            hawkes: &self.hawkes,
            sweep: &self.sweep,
        };
        let bytes = serde_json::to_vec(&h).expect("config serializes");
        hex::encode(Sha256::digest(bytes))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn parses_sections() {
        let c: PipelineConfig = toml::from_str(
            "seed = 3\n[paths]\ncorpus = [\"a.jsonl\"]\n[similarity]\ntau = 0.7\n[hawkes]\niters = 20\nburn_in = 10\n",
        )
        .unwrap();
        assert_eq!(c.seed, 3);
        assert_eq!(c.similarity.tau, 0.7);
        assert_eq!(c.hawkes.max_lag, 14);
        assert_eq!(c.paths.corpus, vec![PathBuf::from("a.jsonl")]);
        c.validate().unwrap();
    }

    #[test]
    fn rejects_unknown_keys_and_bad_values() {
        assert!(toml::from_str::<PipelineConfig>("[similarity]\ntua = 0.7\n").is_err());
        let mut c = PipelineConfig::default();
        c.similarity.tau = 1.0;
        assert!(c.validate().is_err());
        let mut c = PipelineConfig::default();
        c.hawkes.burn_in = c.hawkes.iters;
        assert!(c.validate().is_err());
    }

    #[test]
    fn hash_tracks_fields_but_not_paths() {
        let a = PipelineConfig::default();
        let mut b = a.clone();
        b.paths.out = Some("elsewhere".into());
        b.threads = Some(3);
        assert_eq!(a.hash(), b.hash());
        b.cluster.lambda = 0.81;
        assert_ne!(a.hash(), b.hash());
        let mut c = a.clone();
        c.hawkes.pooled = true;
        assert_ne!(a.hash(), c.hash());
    }
}
