//! The run configuration: one TOML document with a section per subcommand.
//!
//! Precedence, lowest first: built-in defaults, the `--config` file, then
//! command-line flags. The resolved document is what every artifact
//! records as its provenance.

use std::fmt;
use std::path::{Path, PathBuf};

use mtl_embed::corpus::{SessionGenConfig, SynthConfig};
use mtl_embed::downstream::{EvalConfig, Method};
use mtl_embed::model::Preset;
use serde::{Deserialize, Serialize};

/// Bad invocation: missing or invalid arguments, unreadable inputs.
/// Reported with exit code 2.
#[derive(Debug)]
pub struct UsageError(pub String);

impl fmt::Display for UsageError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.0)
    }
}

impl std::error::Error for UsageError {}

pub fn usage(msg: impl Into<String>) -> anyhow::Error {
    UsageError(msg.into()).into()
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RunConfig {
    pub prepare: PrepareSection,
    pub synth: SynthSection,
    pub label: LabelSection,
    pub train: TrainSection,
    pub embed: EmbedSection,
    pub eval: EvalSection,
    pub report: ReportSection,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct PrepareSection {
    pub input: Option<PathBuf>,
    pub output: Option<PathBuf>,
    pub vocab: Option<PathBuf>,
    pub max_vocab: usize,
    pub min_count: u64,
    /// Replacement tables; all three must be given to override the
    /// bundled ones.
    pub misspellings: Option<PathBuf>,
    pub contractions: Option<PathBuf>,
    pub common_words: Option<PathBuf>,
}

impl Default for PrepareSection {
    fn default() -> Self {
        PrepareSection {
            input: None,
            output: None,
            vocab: None,
            max_vocab: 20_000,
            min_count: 1,
            misspellings: None,
            contractions: None,
            common_words: None,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SynthSection {
    /// Pairs use `seed`, behavior sessions `seed + 1`, emotion sessions
    /// `seed + 2`.
    pub seed: u64,
    pub pairs: usize,
    pub output: Option<PathBuf>,
    pub sessions_output: Option<PathBuf>,
    pub emotion_output: Option<PathBuf>,
    pub corpus: SynthConfig,
    pub sessions: SessionGenConfig,
    pub emotion_groups: usize,
    pub emotion_per_group: usize,
}

impl Default for SynthSection {
    fn default() -> Self {
        SynthSection {
            seed: 0,
            pairs: 1000,
            output: None,
            sessions_output: None,
            emotion_output: None,
            corpus: SynthConfig::default(),
            sessions: SessionGenConfig::default(),
            emotion_groups: 5,
            emotion_per_group: 40,
        }
    }
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct LabelSection {
    pub input: Option<PathBuf>,
    pub output: Option<PathBuf>,
    /// Bundled lexicon when absent.
    pub lexicon: Option<PathBuf>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct TrainSection {
    pub pairs: Option<PathBuf>,
    pub output: Option<PathBuf>,
    pub preset: Preset,
    pub lambda: f64,
    pub seed: u64,
    /// Preset value when absent.
    pub layers: Option<usize>,
    pub dim: Option<usize>,
    pub epochs: Option<usize>,
    pub learning_rate: Option<f64>,
    pub batch_size: Option<usize>,
    pub head_hidden: Option<Vec<usize>>,
    pub checkpoint_every: Option<u64>,
    /// Labels pairs that carry none while batching; bundled lexicon when
    /// absent.
    pub lexicon: Option<PathBuf>,
    pub max_vocab: usize,
    pub min_count: u64,
    pub max_len: usize,
    /// Train every (layers, dim) cell of the grid instead of one model.
    pub grid: bool,
    pub grid_layers: Option<Vec<usize>>,
    pub grid_dims: Option<Vec<usize>>,
}

impl Default for TrainSection {
    fn default() -> Self {
        TrainSection {
            pairs: None,
            output: None,
            preset: Preset::Desk,
            lambda: 0.5,
            seed: 0,
            layers: None,
            dim: None,
            epochs: None,
            learning_rate: None,
            batch_size: None,
            head_hidden: None,
            checkpoint_every: None,
            lexicon: None,
            max_vocab: 20_000,
            min_count: 1,
            max_len: mtl_embed::corpus::DEFAULT_MAX_LEN,
            grid: false,
            grid_layers: None,
            grid_dims: None,
        }
    }
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize, clap::ValueEnum)]
#[serde(rename_all = "lowercase")]
pub enum EmbedFormat {
    #[default]
    Bin,
    Csv,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct EmbedSection {
    pub checkpoint: Option<PathBuf>,
    /// Session JSONL input; mutually exclusive with `text`.
    pub sessions: Option<PathBuf>,
    /// Raw text input, one sentence per line.
    pub text: Option<PathBuf>,
    pub output: Option<PathBuf>,
    pub format: EmbedFormat,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct EvalSection {
    pub checkpoints: Vec<PathBuf>,
    /// Model names for the report, one per checkpoint; the checkpoint path
    /// when absent.
    pub labels: Vec<String>,
    pub sessions: Option<PathBuf>,
    pub methods: Vec<Method>,
    /// Every rated behavior found in the sessions when empty.
    pub behaviors: Vec<String>,
    pub output: Option<PathBuf>,
    pub settings: EvalConfig,
}

impl Default for EvalSection {
    fn default() -> Self {
        EvalSection {
            checkpoints: Vec::new(),
            labels: Vec::new(),
            sessions: None,
            methods: vec![Method::Knn],
            behaviors: Vec::new(),
            output: None,
            settings: EvalConfig::default(),
        }
    }
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize, clap::ValueEnum)]
#[serde(rename_all = "lowercase")]
pub enum ReportMetric {
    /// Unweighted accuracy.
    #[default]
    Accuracy,
    /// Weighted accuracy (mean per-class recall).
    Wa,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ReportSection {
    pub results: Vec<PathBuf>,
    /// Text table destination; stdout only when absent.
    pub output: Option<PathBuf>,
    pub csv: Option<PathBuf>,
    pub metric: ReportMetric,
}

impl RunConfig {
    pub fn load(path: &Path) -> anyhow::Result<Self> {
        let src = std::fs::read_to_string(path)
            .map_err(|e| usage(format!("cannot read config file {}: {e}", path.display())))?;
        toml::from_str(&src).map_err(|e| usage(format!("invalid config file {}: {e}", path.display())))
    }
}

/// Fails with a usage error naming both the flag and the config key.
pub fn required<'a, T>(value: &'a Option<T>, flag: &str, key: &str) -> anyhow::Result<&'a T> {
    value
        .as_ref()
        .ok_or_else(|| usage(format!("missing {flag} (or `{key}` in the config file)")))
}

/// Input files are checked before any work starts.
pub fn require_file(path: &Path) -> anyhow::Result<()> {
    if path.is_file() {
        Ok(())
    } else {
        Err(usage(format!("input file not found: {}", path.display())))
    }
}

/// Resolved configuration plus the tool identity, as recorded in outputs.
#[derive(Debug, Clone, Serialize)]
pub struct Provenance {
    pub tool: &'static str,
    pub tool_version: &'static str,
    pub command: &'static str,
    pub config: RunConfig,
}

impl Provenance {
    pub fn new(command: &'static str, config: &RunConfig) -> Self {
        Provenance {
            tool: "mtl-embed",
            tool_version: mtl_embed::VERSION,
            command,
            config: config.clone(),
        }
    }

    pub fn to_value(&self) -> serde_json::Value {
        serde_json::to_value(self).expect("provenance serializes")
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn empty_document_is_the_default() {
        let cfg: RunConfig = toml::from_str("").unwrap();
        assert_eq!(cfg, RunConfig::default());
    }

    #[test]
    fn defaults_roundtrip_through_toml() {
        let cfg = RunConfig::default();
        let back: RunConfig = toml::from_str(&toml::to_string(&cfg).unwrap()).unwrap();
        assert_eq!(back, cfg);
    }

    #[test]
    fn unknown_keys_are_rejected() {
        assert!(toml::from_str::<RunConfig>("[train]\nlamda = 0.5\n").is_err());
    }

    #[test]
    fn nested_sections_parse() {
        let cfg: RunConfig = toml::from_str(
            "[train]\nlambda = 1.0\npreset = \"paper\"\n[eval]\nmethods = [\"kmeans\", \"rating\"]\n[eval.settings]\nk_neighbors = 3\n",
        )
        .unwrap();
        assert_eq!(cfg.train.lambda, 1.0);
        assert_eq!(cfg.train.preset, Preset::Paper);
        assert_eq!(cfg.eval.methods, [Method::Kmeans, Method::Rating]);
        assert_eq!(cfg.eval.settings.k_neighbors, 3);
    }
}
