//! Experiment configuration: flat `key = value` text with `[section]`
//! headers, every key mirrored by a CLI flag. Later layers override earlier
//! ones, so flag values win over the file.

use super::Strategy;
use crate::attack::{AttackConfig, IndirectConfig, Side};
use crate::graph::TripleFormat;
use crate::scoring::ModelKind;
use crate::train::TrainConfig;
use std::collections::BTreeMap;
use std::path::PathBuf;
use thiserror::Error;

#[derive(Debug, Error)]
pub enum ConfigError {
    #[error("config line {0}: expected `key = value` or `[section]`")]
    BadLine(usize),
    #[error("missing required key `{0}`")]
    Missing(&'static str),
    #[error("key `{key}`: {reason}")]
    BadValue { key: String, reason: String },
}

/// One configuration layer: (section, key) -> raw value.
#[derive(Debug, Clone, Default)]
pub struct ConfigOverlay {
    pairs: BTreeMap<(String, String), String>,
}

impl ConfigOverlay {
    pub fn parse(text: &str) -> Result<Self, ConfigError> {
        let mut pairs = BTreeMap::new();
        let mut section = String::new();
        for (idx, raw) in text.lines().enumerate() {
            let line = raw.trim();
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            if let Some(name) = line.strip_prefix('[').and_then(|s| s.strip_suffix(']')) {
                section = name.trim().to_string();
                continue;
            }
            let Some((key, value)) = line.split_once('=') else {
                return Err(ConfigError::BadLine(idx + 1));
            };
            pairs.insert(
                (section.clone(), key.trim().to_string()),
                value.trim().to_string(),
            );
        }
        Ok(Self { pairs })
    }

    pub fn set(&mut self, section: &str, key: &str, value: impl ToString) {
        self.pairs
            .insert((section.to_string(), key.to_string()), value.to_string());
    }

    fn get(&self, section: &str, key: &str) -> Option<&str> {
        self.pairs
            .get(&(section.to_string(), key.to_string()))
            .map(|s| s.as_str())
    }
}

fn lookup<'a>(layers: &'a [ConfigOverlay], section: &str, key: &str) -> Option<&'a str> {
    layers.iter().rev().find_map(|l| l.get(section, key))
}

fn parse_as<T: std::str::FromStr>(
    layers: &[ConfigOverlay],
    section: &str,
    key: &str,
    default: T,
) -> Result<T, ConfigError>
where
    T::Err: std::fmt::Display,
{
    match lookup(layers, section, key) {
        None => Ok(default),
        Some(raw) => raw.parse().map_err(|e: T::Err| ConfigError::BadValue {
            key: format!("{section}.{key}"),
            reason: e.to_string(),
        }),
    }
}

fn parse_bool(
    layers: &[ConfigOverlay],
    section: &str,
    key: &str,
    default: bool,
) -> Result<bool, ConfigError> {
    match lookup(layers, section, key) {
        None => Ok(default),
        Some("true") | Some("1") | Some("yes") | Some("on") => Ok(true),
        Some("false") | Some("0") | Some("no") | Some("off") => Ok(false),
        Some(other) => Err(ConfigError::BadValue {
            key: format!("{section}.{key}"),
            reason: format!("expected a boolean, got `{other}`"),
        }),
    }
}

/// Fully resolved experiment settings.
#[derive(Debug, Clone)]
pub struct ExperimentConfig {
    pub train_path: PathBuf,
    pub test_path: PathBuf,
    pub format: TripleFormat,
    pub model: ModelKind,
    pub train: TrainConfig,
    pub strategy: Strategy,
    pub attack: AttackConfig,
    pub indirect: IndirectConfig,
    pub num_targets: usize,
    pub seed: u64,
    pub threads: usize,
    pub out_dir: PathBuf,
    pub per_target_retrain: bool,
    pub eval_side_only: Option<Side>,
}

impl ExperimentConfig {
    /// Resolve a config from layered overlays; last layer wins per key.
    /// `data.train` and `data.test` are required, everything else has
    /// documented defaults.
    pub fn from_layers(layers: &[ConfigOverlay]) -> Result<Self, ConfigError> {
        let train_path = lookup(layers, "data", "train")
            .ok_or(ConfigError::Missing("data.train"))?
            .into();
        let test_path = lookup(layers, "data", "test")
            .ok_or(ConfigError::Missing("data.test"))?
            .into();
        let format = parse_as(layers, "data", "format", TripleFormat::NameTsv)?;
        let model = parse_as(layers, "model", "kind", ModelKind::TransE)?;

        let seed: u64 = parse_as(layers, "run", "seed", 42)?;
        let dim = parse_as(layers, "model", "dim", 50usize)?;
        let train = TrainConfig {
            dim,
            epochs: parse_as(layers, "train", "epochs", 200)?,
            batch_size: parse_as(layers, "train", "batch_size", 256)?,
            learning_rate: parse_as(layers, "train", "learning_rate", 0.05)?,
            margin: parse_as(layers, "train", "margin", 1.0)?,
            negatives_per_positive: parse_as(layers, "train", "negatives", 1)?,
            seed: parse_as(layers, "train", "seed", seed)?,
            normalize_entities: parse_bool(layers, "train", "normalize", true)?,
            log_progress: parse_bool(layers, "train", "log", false)?,
        };

        let strategy = parse_as(layers, "attack", "strategy", Strategy::DirectDelete)?;
        let side: Side = parse_as(layers, "attack", "side", Side::Head)?;
        let budget: usize = parse_as(layers, "attack", "budget", 1)?;
        let eps_h: f64 = parse_as(layers, "attack", "eps_h", 1.0)?;
        let lambda1: f64 = parse_as(layers, "attack", "lambda1", 1.0)?;
        let lambda2: f64 = parse_as(layers, "attack", "lambda2", 1.0)?;
        let sample: usize = parse_as(layers, "attack", "sample", 10_000)?;
        let attack_seed: u64 = parse_as(layers, "attack", "seed", seed)?;

        let attack = AttackConfig {
            budget_m: budget,
            step_eps_h: eps_h,
            lambda1,
            lambda2,
            add_candidate_sample: sample,
            target_side: side,
            rng_seed: attack_seed,
            both_orientations: parse_bool(layers, "attack", "both_orientations", false)?,
            promote: parse_bool(layers, "attack", "promote", false)?,
        };
        let indirect = IndirectConfig {
            k_hops: parse_as(layers, "attack", "k_hops", 2)?,
            path_count: parse_as(layers, "attack", "paths", 5)?,
            lambda: parse_as(layers, "attack", "lambda", 1.0)?,
            lambda1,
            lambda2,
            budget_m: budget,
            step_eps_h: eps_h,
            add_candidate_sample: sample,
            target_side: side,
            rng_seed: attack_seed,
            promote: attack.promote,
        };

        let eval_side_only = match lookup(layers, "run", "side_only") {
            None | Some("") | Some("both") => None,
            Some(s) => Some(s.parse().map_err(|e: String| ConfigError::BadValue {
                key: "run.side_only".to_string(),
                reason: e,
            })?),
        };

        Ok(Self {
            train_path,
            test_path,
            format,
            model,
            train,
            strategy,
            attack,
            indirect,
            num_targets: parse_as(layers, "run", "num_targets", 100)?,
            seed,
            threads: parse_as(layers, "run", "threads", 1)?,
            out_dir: lookup(layers, "run", "out").unwrap_or("out").into(),
            per_target_retrain: parse_bool(layers, "run", "per_target_retrain", false)?,
            eval_side_only,
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    const SAMPLE: &str = "\
# experiment
[data]
train = data/train.tsv
test = data/test.tsv
format = name-tsv

[model]
kind = transr
dim = 20

[train]
epochs = 50
learning_rate = 0.01

[attack]
strategy = indirect-add
budget = 6
paths = 3

[run]
seed = 9
out = results
";

    #[test]
    fn file_values_are_picked_up() {
        let file = ConfigOverlay::parse(SAMPLE).unwrap();
        let cfg = ExperimentConfig::from_layers(&[file]).unwrap();
        assert_eq!(cfg.model, ModelKind::TransR);
        assert_eq!(cfg.train.dim, 20);
        assert_eq!(cfg.train.epochs, 50);
        assert_eq!(cfg.strategy, Strategy::IndirectAdd);
        assert_eq!(cfg.attack.budget_m, 6);
        assert_eq!(cfg.indirect.budget_m, 6);
        assert_eq!(cfg.indirect.path_count, 3);
        assert_eq!(cfg.seed, 9);
        // derived seeds follow the global seed unless set explicitly
        assert_eq!(cfg.train.seed, 9);
        assert_eq!(cfg.attack.rng_seed, 9);
        assert_eq!(cfg.out_dir, PathBuf::from("results"));
    }

    #[test]
    fn later_layers_win() {
        let file = ConfigOverlay::parse(SAMPLE).unwrap();
        let mut flags = ConfigOverlay::default();
        flags.set("attack", "budget", 2);
        flags.set("model", "kind", "rescal");
        let cfg = ExperimentConfig::from_layers(&[file, flags]).unwrap();
        assert_eq!(cfg.attack.budget_m, 2);
        assert_eq!(cfg.model, ModelKind::Rescal);
        // untouched keys still come from the file
        assert_eq!(cfg.train.epochs, 50);
    }

    #[test]
    fn missing_required_keys_error() {
        let cfg = ExperimentConfig::from_layers(&[ConfigOverlay::default()]);
        assert!(matches!(cfg, Err(ConfigError::Missing("data.train"))));
    }

    #[test]
    fn bad_lines_and_values_are_reported() {
        assert!(matches!(
            ConfigOverlay::parse("not a key value line"),
            Err(ConfigError::BadLine(1))
        ));
        let mut layer = ConfigOverlay::default();
        layer.set("data", "train", "x");
        layer.set("data", "test", "y");
        layer.set("train", "epochs", "many");
        assert!(matches!(
            ExperimentConfig::from_layers(&[layer]),
            Err(ConfigError::BadValue { .. })
        ));
    }
}
