//! JSON config files with flat keys mirroring the command-line flags.

use std::collections::BTreeMap;
use std::path::Path;

use serde::Deserialize;
use serde_json::Value;
use svip_core::algorithms::Algorithm;
use svip_core::experiments::RuleKind;

#[derive(Debug, Default, Deserialize)]
pub struct FileConfig {
    #[serde(alias = "alg")]
    pub algorithm: Option<Algorithm>,
    pub n: Option<u64>,
    pub n_grid: Option<Vec<u64>>,
    pub a: Option<f64>,
    pub d: Option<u32>,
    pub s_rule: Option<RuleKind>,
    pub v_rule: Option<RuleKind>,
    pub eps: Option<f64>,
    pub tau: Option<f64>,
    pub trials: Option<u64>,
    pub seed: Option<u64>,
    pub workers: Option<usize>,
    pub tolerance: Option<f64>,
    pub predicted_exponent: Option<f64>,
    #[serde(flatten)]
    pub other: BTreeMap<String, Value>,
}

impl FileConfig {
    /// Reads a flat config object, or the `config` object embedded in an
    /// artifact written by an earlier run.
    pub fn load(path: &Path) -> Result<Self, String> {
        let text = std::fs::read_to_string(path).map_err(|e| format!("cannot read {}: {e}", path.display()))?;
        let mut value: Value =
            serde_json::from_str(&text).map_err(|e| format!("{} is not valid JSON: {e}", path.display()))?;
        if let Some(inner) = value.get_mut("config").filter(|c| c.is_object()) {
            value = inner.take();
        }
        let cfg: FileConfig =
            serde_json::from_value(value).map_err(|e| format!("bad config in {}: {e}", path.display()))?;
        for key in cfg.other.keys() {
            log::warn!("ignoring unknown config key {key:?} in {}", path.display());
        }
        Ok(cfg)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn flat_and_embedded() {
        let dir = tempfile::tempdir().unwrap();
        let flat = dir.path().join("flat.json");
        std::fs::write(&flat, r#"{"alg": "mv1", "n_grid": [16, 32, 64], "s_rule": "one-over-n", "foo": 1}"#).unwrap();
        let cfg = FileConfig::load(&flat).unwrap();
        assert_eq!(cfg.algorithm, Some(Algorithm::Mv1));
        assert_eq!(cfg.s_rule, Some(RuleKind::At));
        assert!(cfg.other.contains_key("foo"));

        let art = dir.path().join("artifact.json");
        std::fs::write(&art, r#"{"config": {"algorithm": "id", "d": 3}, "slope": 0.1}"#).unwrap();
        let cfg = FileConfig::load(&art).unwrap();
        assert_eq!((cfg.algorithm, cfg.d), (Some(Algorithm::Id), Some(3)));

        let bad = dir.path().join("bad.json");
        std::fs::write(&bad, r#"{"a": "two"}"#).unwrap();
        assert!(FileConfig::load(&bad).is_err());
    }
}
