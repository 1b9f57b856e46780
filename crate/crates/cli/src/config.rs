//! Runtime configuration.
//!
//! Precedence, lowest first: built-in defaults, the TOML file, `DWCLOVER_*`
//! environment variables, command-line flags.

use std::path::{Path, PathBuf};

use anyhow::{Context, Result};
use clover_core::MatchThresholds;
use serde::Deserialize;

pub const DEFAULT_LISTEN: &str = "127.0.0.1:8080";

#[derive(Debug, Clone, PartialEq)]
pub struct Config {
    pub corpus_dir: Option<PathBuf>,
    pub listen: String,
    pub thresholds: MatchThresholds,
}

impl Default for Config {
    fn default() -> Self {
        Config {
            corpus_dir: None,
            listen: DEFAULT_LISTEN.to_string(),
            thresholds: MatchThresholds::default(),
        }
    }
}

/// Every field optional so a file may set only some of them.
#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
struct FileConfig {
    corpus_dir: Option<PathBuf>,
    listen: Option<String>,
    min_similarity: Option<f64>,
    min_nodes: Option<usize>,
    max_candidates: Option<usize>,
}

/// Values given on the command line.
#[derive(Debug, Default, Clone)]
pub struct Overrides {
    pub corpus_dir: Option<PathBuf>,
    pub listen: Option<String>,
    pub min_similarity: Option<f64>,
    pub min_nodes: Option<usize>,
    pub max_candidates: Option<usize>,
}

impl Config {
    pub fn load(file: Option<&Path>, flags: &Overrides) -> Result<Config> {
        Self::load_with_env(file, flags, |k| std::env::var(k).ok())
    }

    /// As [`Config::load`], reading variables through `env`.
    pub fn load_with_env(file: Option<&Path>, flags: &Overrides, env: impl Fn(&str) -> Option<String>) -> Result<Config> {
        let mut cfg = Config::default();
        if let Some(path) = file {
            let text = std::fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
            let f: FileConfig = toml::from_str(&text).with_context(|| format!("parsing {}", path.display()))?;
            cfg.apply(Overrides {
                corpus_dir: f.corpus_dir,
                listen: f.listen,
                min_similarity: f.min_similarity,
                min_nodes: f.min_nodes,
                max_candidates: f.max_candidates,
            });
        }
        cfg.apply(env_overrides(&env)?);
        cfg.apply(flags.clone());
        cfg.thresholds.check()?;
        Ok(cfg)
    }

    fn apply(&mut self, o: Overrides) {
        if o.corpus_dir.is_some() {
            self.corpus_dir = o.corpus_dir;
        }
        if let Some(l) = o.listen {
            self.listen = l;
        }
        if let Some(v) = o.min_similarity {
            self.thresholds.min_similarity = v;
        }
        if let Some(v) = o.min_nodes {
            self.thresholds.min_nodes = v;
        }
        if let Some(v) = o.max_candidates {
            self.thresholds.max_candidates = v;
        }
    }
}

fn env_overrides(env: &impl Fn(&str) -> Option<String>) -> Result<Overrides> {
    fn parsed<T: std::str::FromStr>(env: &impl Fn(&str) -> Option<String>, key: &str) -> Result<Option<T>>
    where
        T::Err: std::error::Error + Send + Sync + 'static,
    {
        env(key)
            .map(|v| v.trim().parse::<T>().with_context(|| format!("{key}={v:?}")))
            .transpose()
    }
    Ok(Overrides {
        corpus_dir: env("DWCLOVER_CORPUS").map(PathBuf::from),
        listen: env("DWCLOVER_LISTEN"),
        min_similarity: parsed(env, "DWCLOVER_MIN_SIMILARITY")?,
        min_nodes: parsed(env, "DWCLOVER_MIN_NODES")?,
        max_candidates: parsed(env, "DWCLOVER_MAX_CANDIDATES")?,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::collections::HashMap;

    #[test]
    fn precedence() {
        let dir = tempfile::tempdir().unwrap();
        let file = dir.path().join("clover.toml");
        std::fs::write(&file, "min_similarity = 0.7\nmin_nodes = 4\nlisten = \"0.0.0.0:9000\"\n").unwrap();
        let env: HashMap<&str, &str> = [("DWCLOVER_MIN_NODES", "5"), ("DWCLOVER_MAX_CANDIDATES", "2")].into();
        let flags = Overrides {
            max_candidates: Some(3),
            ..Overrides::default()
        };
        let cfg = Config::load_with_env(Some(&file), &flags, |k| env.get(k).map(|v| v.to_string())).unwrap();
        assert_eq!(cfg.thresholds, MatchThresholds::new(0.7, 5, 3).unwrap());
        assert_eq!(cfg.listen, "0.0.0.0:9000");
        assert!(cfg.corpus_dir.is_none());
    }

    #[test]
    fn rejects_bad_values() {
        let bad_env = |k: &str| (k == "DWCLOVER_MIN_SIMILARITY").then(|| "1.5".to_string());
        assert!(Config::load_with_env(None, &Overrides::default(), bad_env).is_err());
        let junk = |k: &str| (k == "DWCLOVER_MIN_NODES").then(|| "many".to_string());
        assert!(Config::load_with_env(None, &Overrides::default(), junk).is_err());
        let dir = tempfile::tempdir().unwrap();
        let file = dir.path().join("c.toml");
        std::fs::write(&file, "unknown = 1\n").unwrap();
        assert!(Config::load_with_env(Some(&file), &Overrides::default(), |_| None).is_err());
    }
}
