//! Uniform prediction interface over method-name models: two deterministic
//! built-in baselines plus subprocess and HTTP seats for external neural
//! models.
//!
//! Every prediction is normalized at the boundary — scores clamped to
//! `[0, 1]`, sorted non-increasing with lexicographic tie-breaks, duplicate
//! labels collapsed — so the oracle sees one shape regardless of the model.

pub mod baseline;
pub mod remote;

use std::fmt;
use std::path::PathBuf;
use std::str::FromStr;
use std::sync::Mutex;

use serde::{Deserialize, Serialize};
use thiserror::Error;

pub use baseline::{build_index, baseline_predict, BaselineIndex, FeatureMode, IndexError};

/// One ranked label with its score.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PredictionEntry {
    /// Subtoken sequence joined by `|`, e.g. `is|prime`.
    pub label: String,
    pub score: f64,
}

/// Ranked, normalized model output: scores non-increasing in `[0, 1]`, ties
/// broken by label, labels pairwise distinct, never empty.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Prediction {
    pub entries: Vec<PredictionEntry>,
}

impl Prediction {
    /// Normalizes raw model output into the canonical shape, truncating to
    /// `k` entries. Empty output is a protocol violation.
    pub fn normalize(
        raw: Vec<(String, f64)>,
        k: usize,
    ) -> Result<Prediction, ModelUnavailable> {
        let mut entries: Vec<PredictionEntry> = raw
            .into_iter()
            .map(|(label, score)| PredictionEntry {
                label,
                score: score.clamp(0.0, 1.0),
            })
            .collect();
        entries.sort_by(|a, b| {
            b.score
                .partial_cmp(&a.score)
                .unwrap_or(std::cmp::Ordering::Equal)
                .then_with(|| a.label.cmp(&b.label))
        });
        let mut seen = std::collections::HashSet::new();
        entries.retain(|e| seen.insert(e.label.clone()));
        entries.truncate(k.max(1));
        if entries.is_empty() {
            return Err(ModelUnavailable {
                detail: "model returned no predictions".into(),
            });
        }
        Ok(Prediction { entries })
    }

    pub fn top1(&self) -> &str {
        &self.entries[0].label
    }

    /// Score of `label` within this prediction, 0 when absent.
    pub fn score_of(&self, label: &str) -> f64 {
        self.entries
            .iter()
            .find(|e| e.label == label)
            .map_or(0.0, |e| e.score)
    }
}

/// A prediction request failed; campaigns record this instead of crashing.
#[derive(Debug, Clone, Error, PartialEq, Eq, Serialize, Deserialize)]
#[error("model unavailable: {detail}")]
pub struct ModelUnavailable {
    pub detail: String,
}

impl ModelUnavailable {
    pub fn new(detail: impl Into<String>) -> Self {
        ModelUnavailable {
            detail: detail.into(),
        }
    }
}

/// Where predictions come from.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum EndpointKind {
    Subprocess,
    Http,
    BuiltinToken,
    BuiltinStructure,
}

/// Model seat configuration: what to talk to and how.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub struct ModelEndpoint {
    pub kind: EndpointKind,
    /// Command line, URL, or index path, depending on `kind`.
    pub address: String,
    pub topk: usize,
    pub timeout_ms: u64,
}

pub const DEFAULT_TOPK: usize = 5;
pub const DEFAULT_TIMEOUT_MS: u64 = 10_000;

impl ModelEndpoint {
    /// Parses an endpoint spec:
    /// `builtin-token:INDEX | builtin-structure:INDEX | cmd:"..." | http://...`.
    pub fn parse_spec(spec: &str, topk: usize, timeout_ms: u64) -> Result<Self, String> {
        let (kind, address) = if let Some(path) = spec.strip_prefix("builtin-token:") {
            (EndpointKind::BuiltinToken, path.to_string())
        } else if let Some(path) = spec.strip_prefix("builtin-structure:") {
            (EndpointKind::BuiltinStructure, path.to_string())
        } else if let Some(cmd) = spec.strip_prefix("cmd:") {
            let cmd = cmd.trim();
            let cmd = cmd
                .strip_prefix('"')
                .and_then(|c| c.strip_suffix('"'))
                .unwrap_or(cmd);
            (EndpointKind::Subprocess, cmd.to_string())
        } else if spec.starts_with("http://") || spec.starts_with("https://") {
            (EndpointKind::Http, spec.to_string())
        } else {
            return Err(format!(
                "unrecognized endpoint spec `{spec}` (expected builtin-token:PATH, \
                 builtin-structure:PATH, cmd:\"...\", or http://...)"
            ));
        };
        if address.is_empty() {
            return Err(format!("endpoint spec `{spec}` has an empty address"));
        }
        if topk == 0 {
            return Err("topk must be at least 1".to_string());
        }
        Ok(ModelEndpoint {
            kind,
            address,
            topk,
            timeout_ms,
        })
    }
}

impl fmt::Display for ModelEndpoint {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self.kind {
            EndpointKind::Subprocess => write!(f, "cmd:\"{}\"", self.address),
            EndpointKind::Http => write!(f, "{}", self.address),
            EndpointKind::BuiltinToken => write!(f, "builtin-token:{}", self.address),
            EndpointKind::BuiltinStructure => write!(f, "builtin-structure:{}", self.address),
        }
    }
}

impl FromStr for ModelEndpoint {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        ModelEndpoint::parse_spec(s, DEFAULT_TOPK, DEFAULT_TIMEOUT_MS)
    }
}

/// A connected endpoint, ready to serve predictions. Builtins hold their
/// loaded index; subprocess endpoints hold the running child and serialize
/// requests to it.
pub enum Endpoint {
    Builtin {
        mode: FeatureMode,
        index: BaselineIndex,
        topk: usize,
    },
    Subprocess {
        client: Mutex<remote::SubprocessClient>,
        topk: usize,
    },
    Http {
        url: String,
        topk: usize,
        timeout_ms: u64,
    },
}

impl Endpoint {
    /// Acquires whatever the endpoint needs: loads the index file for
    /// builtins, spawns the child for subprocess seats.
    pub fn connect(config: &ModelEndpoint) -> Result<Endpoint, ModelUnavailable> {
        match config.kind {
            EndpointKind::BuiltinToken | EndpointKind::BuiltinStructure => {
                let mode = if config.kind == EndpointKind::BuiltinToken {
                    FeatureMode::Token
                } else {
                    FeatureMode::Structure
                };
                let index = BaselineIndex::load(&PathBuf::from(&config.address))
                    .map_err(|e| ModelUnavailable::new(format!("cannot load index: {e}")))?;
                if index.mode() != mode {
                    return Err(ModelUnavailable::new(format!(
                        "index at {} was built in {:?} mode, endpoint expects {:?}",
                        config.address,
                        index.mode(),
                        mode
                    )));
                }
                Ok(Endpoint::Builtin {
                    mode,
                    index,
                    topk: config.topk,
                })
            }
            EndpointKind::Subprocess => {
                let client =
                    remote::SubprocessClient::spawn(&config.address, config.timeout_ms)?;
                Ok(Endpoint::Subprocess {
                    client: Mutex::new(client),
                    topk: config.topk,
                })
            }
            EndpointKind::Http => Ok(Endpoint::Http {
                url: config.address.clone(),
                topk: config.topk,
                timeout_ms: config.timeout_ms,
            }),
        }
    }

    /// Predicts the name of the method in `method_source`. Every failure is
    /// a [`ModelUnavailable`] value, never a panic.
    pub fn predict(&self, method_source: &str) -> Result<Prediction, ModelUnavailable> {
        match self {
            Endpoint::Builtin { index, topk, .. } => {
                baseline_predict(index, method_source, *topk)
                    .map_err(|e| ModelUnavailable::new(e.to_string()))
            }
            Endpoint::Subprocess { client, topk } => {
                let mut client = client
                    .lock()
                    .map_err(|_| ModelUnavailable::new("subprocess client poisoned"))?;
                client.predict(method_source, *topk)
            }
            Endpoint::Http {
                url,
                topk,
                timeout_ms,
            } => remote::http_predict(url, method_source, *topk, *timeout_ms),
        }
    }
}

/// One-shot convenience: connect and predict.
pub fn predict(
    config: &ModelEndpoint,
    method_source: &str,
) -> Result<Prediction, ModelUnavailable> {
    Endpoint::connect(config)?.predict(method_source)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn normalization_sorts_dedupes_and_clamps() {
        let raw = vec![
            ("b".to_string(), 0.5),
            ("a".to_string(), 0.5),
            ("c".to_string(), 2.0),
            ("a".to_string(), 0.1),
        ];
        let p = Prediction::normalize(raw, 5).unwrap();
        let labels: Vec<&str> = p.entries.iter().map(|e| e.label.as_str()).collect();
        assert_eq!(labels, vec!["c", "a", "b"]);
        assert_eq!(p.entries[0].score, 1.0);
        // Ties broken by label: a before b.
        assert_eq!(p.entries[1].label, "a");
        assert_eq!(p.entries[1].score, 0.5);
    }

    #[test]
    fn normalization_rejects_empty() {
        assert!(Prediction::normalize(Vec::new(), 5).is_err());
    }

    #[test]
    fn normalization_truncates_to_k() {
        let raw = (0..10).map(|i| (format!("l{i}"), 1.0 - i as f64 * 0.05)).collect();
        let p = Prediction::normalize(raw, 3).unwrap();
        assert_eq!(p.entries.len(), 3);
    }

    #[test]
    fn scores_are_non_increasing_for_any_input() {
        // A coarse property sweep over scrambled inputs.
        for seed in 0..50u64 {
            let raw: Vec<(String, f64)> = (0..8)
                .map(|i| {
                    let x = ((seed.wrapping_mul(31).wrapping_add(i) * 2654435761) % 1000) as f64
                        / 500.0;
                    (format!("l{}", (seed + i) % 5), x)
                })
                .collect();
            let p = Prediction::normalize(raw, 5).unwrap();
            for pair in p.entries.windows(2) {
                assert!(pair[0].score >= pair[1].score);
                if pair[0].score == pair[1].score {
                    assert!(pair[0].label < pair[1].label);
                }
            }
        }
    }

    #[test]
    fn endpoint_spec_grammar() {
        let e = ModelEndpoint::parse_spec("builtin-token:idx.json", 5, 1000).unwrap();
        assert_eq!(e.kind, EndpointKind::BuiltinToken);
        assert_eq!(e.address, "idx.json");

        let e = ModelEndpoint::parse_spec("builtin-structure:/tmp/i.json", 5, 1000).unwrap();
        assert_eq!(e.kind, EndpointKind::BuiltinStructure);

        let e = ModelEndpoint::parse_spec("cmd:\"python3 stub.py --x\"", 5, 1000).unwrap();
        assert_eq!(e.kind, EndpointKind::Subprocess);
        assert_eq!(e.address, "python3 stub.py --x");

        let e = ModelEndpoint::parse_spec("cmd:cat", 5, 1000).unwrap();
        assert_eq!(e.address, "cat");

        let e = ModelEndpoint::parse_spec("http://127.0.0.1:9000", 5, 1000).unwrap();
        assert_eq!(e.kind, EndpointKind::Http);

        assert!(ModelEndpoint::parse_spec("gopher://x", 5, 1000).is_err());
        assert!(ModelEndpoint::parse_spec("builtin-token:", 5, 1000).is_err());
        assert!(ModelEndpoint::parse_spec("builtin-token:i", 0, 1000).is_err());
    }

    #[test]
    fn score_of_absent_label_is_zero() {
        let p = Prediction::normalize(vec![("x".into(), 0.9)], 5).unwrap();
        assert_eq!(p.score_of("x"), 0.9);
        assert_eq!(p.score_of("y"), 0.0);
    }
}
