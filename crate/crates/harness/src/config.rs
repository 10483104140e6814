//! Experiment configuration: a TOML file with dataset, regularization,
//! run-budget, algorithm, and optional federated sections. Parsing and
//! serialization round-trip, and a parsed config is validated before use.

use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::error::{HarnessError, Result};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    pub dataset: DatasetConfig,
    pub regularization: RegularizationConfig,
    pub run: RunConfig,
    #[serde(rename = "algorithm")]
    pub algorithms: Vec<AlgorithmConfig>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub federated: Option<FederatedConfig>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum DatasetConfig {
    Synthetic {
        samples: usize,
        features: usize,
        /// Fraction of nonzero coordinates per row, in (0, 1].
        sparsity: f64,
        /// Probability of flipping a planted label.
        label_noise: f64,
        seed: u64,
    },
    Libsvm {
        path: PathBuf,
        /// Declared dimension; inferred from the data when absent.
        #[serde(default, skip_serializing_if = "Option::is_none")]
        features: Option<usize>,
    },
}

/// Either a number or the string `"auto"` (= `L_max / N` with the plain
/// logistic smoothness constants).
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum L2Spec {
    Auto,
    Value(f64),
}

impl Serialize for L2Spec {
    fn serialize<S: serde::Serializer>(&self, serializer: S) -> std::result::Result<S::Ok, S::Error> {
        match self {
            L2Spec::Auto => serializer.serialize_str("auto"),
            L2Spec::Value(v) => serializer.serialize_f64(*v),
        }
    }
}

impl<'de> Deserialize<'de> for L2Spec {
    fn deserialize<D: serde::Deserializer<'de>>(deserializer: D) -> std::result::Result<Self, D::Error> {
        #[derive(Deserialize)]
        #[serde(untagged)]
        enum Raw {
            Num(f64),
            Text(String),
        }
        match Raw::deserialize(deserializer)? {
            Raw::Num(v) => Ok(L2Spec::Value(v)),
            Raw::Text(s) if s == "auto" => Ok(L2Spec::Auto),
            Raw::Text(s) => Err(serde::de::Error::custom(format!(
                "l2 must be a number or \"auto\", got \"{s}\""
            ))),
        }
    }
}

/// Where the ridge term lives: inside each loss oracle or inside the
/// regularizer that the prox handles.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Placement {
    Loss,
    Regularizer,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RegularizationConfig {
    pub l1: f64,
    pub l2: L2Spec,
    pub placement: Placement,
}

fn default_reference_tol() -> f64 {
    1e-10
}

fn default_record_objective() -> bool {
    true
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    /// Epoch budget `T`; SGD runs `n * T` steps.
    pub epochs: usize,
    pub seeds: Vec<u64>,
    pub out: PathBuf,
    #[serde(default = "default_reference_tol")]
    pub reference_tol: f64,
    #[serde(default = "default_record_objective")]
    pub record_objective: bool,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum AlgorithmKind {
    ProxRr,
    ProxSo,
    ProxSgd,
    RrHeuristic,
    ProxGd,
    FedRr,
    FedSo,
}

impl AlgorithmKind {
    pub fn is_federated(self) -> bool {
        matches!(self, AlgorithmKind::FedRr | AlgorithmKind::FedSo)
    }

    pub fn label(self) -> &'static str {
        match self {
            AlgorithmKind::ProxRr => "prox_rr",
            AlgorithmKind::ProxSo => "prox_so",
            AlgorithmKind::ProxSgd => "prox_sgd",
            AlgorithmKind::RrHeuristic => "rr_heuristic",
            AlgorithmKind::ProxGd => "prox_gd",
            AlgorithmKind::FedRr => "fed_rr",
            AlgorithmKind::FedSo => "fed_so",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "snake_case")]
pub enum ScheduleKind {
    #[default]
    Constant,
    Decreasing,
    Tuned,
}

impl ScheduleKind {
    pub fn label(self) -> &'static str {
        match self {
            ScheduleKind::Constant => "constant",
            ScheduleKind::Decreasing => "decreasing",
            ScheduleKind::Tuned => "tuned",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct AlgorithmConfig {
    pub kind: AlgorithmKind,
    #[serde(default)]
    pub schedule: ScheduleKind,
    /// Overrides the theoretical constant stepsize.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub gamma: Option<f64>,
    /// Target accuracy for the tuned schedule.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub epsilon: Option<f64>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Partition {
    Iid,
    ByLabel,
    ByShard,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FederatedConfig {
    pub clients: usize,
    pub partition: Partition,
}

impl ExperimentConfig {
    pub fn from_toml(text: &str) -> Result<Self> {
        let config: ExperimentConfig =
            toml::from_str(text).map_err(|e| HarnessError::config(e.to_string()))?;
        config.validate()?;
        Ok(config)
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| {
            HarnessError::config(format!("cannot read {}: {e}", path.display()))
        })?;
        Self::from_toml(&text)
    }

    pub fn to_toml(&self) -> String {
        toml::to_string_pretty(self).expect("config serializes")
    }

    pub fn validate(&self) -> Result<()> {
        if self.run.epochs == 0 {
            return Err(HarnessError::config("empty budget: epochs must be at least 1"));
        }
        if self.run.seeds.is_empty() {
            return Err(HarnessError::config("need at least one seed"));
        }
        if !(self.run.reference_tol > 0.0) {
            return Err(HarnessError::config("reference_tol must be positive"));
        }
        if self.algorithms.is_empty() {
            return Err(HarnessError::config("need at least one algorithm"));
        }
        if self.regularization.l1 < 0.0 {
            return Err(HarnessError::config("l1 must be nonnegative"));
        }
        if let L2Spec::Value(v) = self.regularization.l2 {
            if v < 0.0 {
                return Err(HarnessError::config("l2 must be nonnegative"));
            }
        }
        match &self.dataset {
            DatasetConfig::Synthetic { samples, features, sparsity, label_noise, .. } => {
                if *samples == 0 || *features == 0 {
                    return Err(HarnessError::config("synthetic dataset needs samples, features >= 1"));
                }
                if !(*sparsity > 0.0 && *sparsity <= 1.0) {
                    return Err(HarnessError::config("sparsity must lie in (0, 1]"));
                }
                if !(0.0..=1.0).contains(label_noise) {
                    return Err(HarnessError::config("label_noise must lie in [0, 1]"));
                }
            }
            DatasetConfig::Libsvm { .. } => {}
        }
        let uses_federated = self.algorithms.iter().any(|a| a.kind.is_federated());
        if uses_federated {
            match &self.federated {
                None => {
                    return Err(HarnessError::config(
                        "federated algorithms need a [federated] section",
                    ))
                }
                Some(fed) if fed.clients == 0 => {
                    return Err(HarnessError::config("federated clients must be at least 1"))
                }
                _ => {}
            }
        }
        for algorithm in &self.algorithms {
            if let Some(gamma) = algorithm.gamma {
                if !(gamma > 0.0) {
                    return Err(HarnessError::config("gamma override must be positive"));
                }
            }
            if algorithm.schedule == ScheduleKind::Tuned && algorithm.epsilon.is_none() {
                return Err(HarnessError::config("tuned schedule needs epsilon"));
            }
            if algorithm.schedule != ScheduleKind::Constant
                && matches!(algorithm.kind, AlgorithmKind::ProxSgd | AlgorithmKind::ProxGd)
            {
                return Err(HarnessError::config(
                    "decreasing/tuned schedules apply to the reshuffling methods only",
                ));
            }
        }
        Ok(())
    }

    /// Unique, order-stable label per algorithm cell; used in file names and
    /// the summary.
    pub fn cell_labels(&self) -> Vec<String> {
        self.algorithms
            .iter()
            .enumerate()
            .map(|(i, a)| format!("{:02}_{}-{}", i, a.kind.label(), a.schedule.label()))
            .collect()
    }
}
