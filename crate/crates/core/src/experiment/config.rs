use std::fmt;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::estimators::EstimatorConfig;
use crate::optimizers::OptimizerKind;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum ExperimentKind {
    #[serde(rename = "train")]
    Train,
    #[serde(rename = "gradient-alignment")]
    GradientAlignment,
    #[serde(rename = "noise")]
    Noise,
    #[serde(rename = "theory.drift")]
    TheoryDrift,
    #[serde(rename = "theory.hitting")]
    TheoryHitting,
    #[serde(rename = "theory.theorem2")]
    TheoryTheorem2,
    #[serde(rename = "theory.prop1")]
    TheoryProp1,
    #[serde(rename = "theory.prop2")]
    TheoryProp2,
}

impl ExperimentKind {
    pub const ALL: [ExperimentKind; 8] = [
        ExperimentKind::Train,
        ExperimentKind::GradientAlignment,
        ExperimentKind::Noise,
        ExperimentKind::TheoryDrift,
        ExperimentKind::TheoryHitting,
        ExperimentKind::TheoryTheorem2,
        ExperimentKind::TheoryProp1,
        ExperimentKind::TheoryProp2,
    ];

    pub fn name(self) -> &'static str {
        match self {
            ExperimentKind::Train => "train",
            ExperimentKind::GradientAlignment => "gradient-alignment",
            ExperimentKind::Noise => "noise",
            ExperimentKind::TheoryDrift => "theory.drift",
            ExperimentKind::TheoryHitting => "theory.hitting",
            ExperimentKind::TheoryTheorem2 => "theory.theorem2",
            ExperimentKind::TheoryProp1 => "theory.prop1",
            ExperimentKind::TheoryProp2 => "theory.prop2",
        }
    }

    pub fn is_theory(self) -> bool {
        self.name().starts_with("theory.")
    }
}

impl fmt::Display for ExperimentKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for ExperimentKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        ExperimentKind::ALL.into_iter().find(|k| k.name() == s).ok_or_else(|| {
            let names: Vec<&str> = ExperimentKind::ALL.iter().map(|k| k.name()).collect();
            Error::Config(format!("unknown experiment '{s}', expected one of {}", names.join(", ")))
        })
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Method {
    Es,
    Ours,
}

impl Method {
    pub fn name(self) -> &'static str {
        match self {
            Method::Es => "es",
            Method::Ours => "ours",
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct OptimizerConfig {
    pub kind: OptimizerKind,
    pub learning_rate: f64,
    /// When nonempty, every method is trained at each rate and the best run
    /// (fewest updates to the threshold, then lowest best loss) is reported.
    pub lr_grid: Vec<f64>,
}

impl Default for OptimizerConfig {
    fn default() -> Self {
        OptimizerConfig { kind: OptimizerKind::Adam, learning_rate: 1e-3, lr_grid: Vec::new() }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "lowercase", deny_unknown_fields)]
pub enum ObjectiveConfig {
    /// MLP classifier on `[data]`; input and output widths come from the data.
    Mlp { hidden: Vec<usize> },
    /// `c . theta` with Gaussian `c`.
    Linear { dim: usize },
    /// Random rotation of a diagonal Hessian with log-spaced eigenvalues.
    Quadratic { dim: usize, eig_min: f64, eig_max: f64 },
}

impl Default for ObjectiveConfig {
    fn default() -> Self {
        ObjectiveConfig::Mlp { hidden: vec![64, 64] }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum DataSource {
    Blobs,
    Mnist,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct DataConfig {
    pub source: DataSource,
    pub num_classes: usize,
    pub samples_per_class: usize,
    pub feature_dim: usize,
    pub spread: f64,
    pub mnist_images: Option<PathBuf>,
    pub mnist_labels: Option<PathBuf>,
    /// Keep only the first `limit` MNIST samples.
    pub limit: Option<usize>,
    pub batch_size: usize,
}

impl Default for DataConfig {
    fn default() -> Self {
        DataConfig {
            source: DataSource::Blobs,
            num_classes: 10,
            samples_per_class: 100,
            feature_dim: 16,
            spread: 0.15,
            mnist_images: None,
            mnist_labels: None,
            limit: None,
            batch_size: crate::dataset::DEFAULT_BATCH_SIZE,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RunConfig {
    /// Parameter updates per run (proper updates for the noise study).
    pub steps: usize,
    pub methods: Vec<Method>,
    /// Absolute loss threshold; defaults to `threshold_fraction` of the
    /// initial loss.
    pub loss_threshold: Option<f64>,
    pub threshold_fraction: f64,
    /// Store the raw gradient estimate in the surrogate history instead of
    /// the applied parameter update.
    pub store_raw_estimate: bool,
    /// Seeds per cell in the noise study.
    pub replicates: usize,
}

impl Default for RunConfig {
    fn default() -> Self {
        RunConfig {
            steps: 500,
            methods: vec![Method::Es, Method::Ours],
            loss_threshold: None,
            threshold_fraction: 0.5,
            store_raw_estimate: false,
            replicates: 3,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct NoiseConfig {
    /// Permutation probability of the noisy arm.
    pub prob: f64,
    /// Surrogate counts of the guided arms. Each keeps the total budget by
    /// taking `p_random = k_history + p_random (estimator) - k`.
    pub k_values: Vec<usize>,
    /// Two-sided confidence level of the per-cell final-loss intervals.
    pub confidence: f64,
    /// Largest relative final-loss gap the robust arm may show.
    pub max_relative_gap: f64,
}

impl Default for NoiseConfig {
    fn default() -> Self {
        NoiseConfig { prob: 0.2, k_values: vec![1, 4], confidence: 0.95, max_relative_gap: 0.2 }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct TheoryConfig {
    pub dim: usize,
    pub p_random: usize,
    pub alpha: f64,
    pub delta: f64,
    pub trials: usize,
    /// Starting alignments for the one-step drift check.
    pub x_sq_points: Vec<f64>,
    /// Standard errors allowed for statistical checks.
    pub se_tolerance: f64,
    /// Hitting-time grid; empty means the single `(dim, p_random, delta)` cell.
    pub hitting_dims: Vec<usize>,
    pub hitting_p: Vec<usize>,
    pub hitting_deltas: Vec<f64>,
    /// Rotating-chain length, burn-in and conditional-mean tolerance.
    pub steps: usize,
    pub burn_in: usize,
    pub conditional_tolerance: f64,
    pub min_bin_samples: usize,
    pub long_run_tolerance: f64,
    pub sign_offset: f64,
    /// Trials per one-step drift measurement at `A +- sign_offset`.
    pub sign_trials: usize,
    /// Random problem instances and span samples for the optimality check.
    pub instances: usize,
    pub span_trials: usize,
    pub max_dim: usize,
    pub max_k: usize,
    pub max_p: usize,
    /// `(P, absolute tolerance)` cells of the captured-energy check.
    pub prop2_cells: Vec<(usize, f64)>,
}

impl Default for TheoryConfig {
    fn default() -> Self {
        TheoryConfig {
            dim: 101,
            p_random: 10,
            alpha: 0.95,
            delta: 0.1,
            trials: 20000,
            x_sq_points: vec![0.0, 0.25, 0.5, 0.75],
            se_tolerance: 3.0,
            hitting_dims: Vec::new(),
            hitting_p: Vec::new(),
            hitting_deltas: Vec::new(),
            steps: 400,
            burn_in: 200,
            conditional_tolerance: 0.01,
            min_bin_samples: 100,
            long_run_tolerance: 0.02,
            sign_offset: 0.05,
            sign_trials: 20000,
            instances: 200,
            span_trials: 10_000,
            max_dim: 32,
            max_k: 3,
            max_p: 6,
            prop2_cells: vec![(5, 0.005), (1, 0.002)],
        }
    }
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ReportConfig {
    /// Fill the `wall_ms` column. Off by default so reruns are byte-identical.
    pub wall_clock: bool,
    /// Skip the loss.svg chart.
    pub no_svg: bool,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ExperimentConfig {
    pub seed: u64,
    /// Worker threads for objective evaluations; `None` uses all cores.
    pub threads: Option<usize>,
    pub estimator: EstimatorConfig,
    pub optimizer: OptimizerConfig,
    pub objective: ObjectiveConfig,
    pub data: DataConfig,
    pub run: RunConfig,
    pub noise: NoiseConfig,
    pub theory: TheoryConfig,
    pub report: ReportConfig,
}

impl Default for ExperimentConfig {
    fn default() -> Self {
        ExperimentConfig {
            seed: 0,
            threads: None,
            estimator: EstimatorConfig::default(),
            optimizer: OptimizerConfig::default(),
            objective: ObjectiveConfig::default(),
            data: DataConfig::default(),
            run: RunConfig::default(),
            noise: NoiseConfig::default(),
            theory: TheoryConfig::default(),
            report: ReportConfig::default(),
        }
    }
}

fn positive(name: &str, x: f64) -> Result<()> {
    if x > 0.0 && x.is_finite() {
        Ok(())
    } else {
        Err(Error::Config(format!("{name} must be positive and finite, got {x}")))
    }
}

impl ExperimentConfig {
    /// Parses TOML text and applies `key.path=value` overrides on top.
    pub fn from_toml(text: &str, overrides: &[String]) -> Result<Self> {
        let mut value: toml::Value = toml::from_str(text).map_err(|e| Error::Config(e.to_string()))?;
        for o in overrides {
            apply_override(&mut value, o)?;
        }
        value.try_into().map_err(|e: toml::de::Error| Error::Config(e.to_string()))
    }

    pub fn load(path: &Path, overrides: &[String]) -> Result<Self> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| Error::Io(std::io::Error::new(e.kind(), format!("cannot read config {}: {e}", path.display()))))?;
        Self::from_toml(&text, overrides)
    }

    /// Checks numeric ranges, and that referenced files exist.
    pub fn validate(&self, kind: ExperimentKind) -> Result<()> {
        if self.threads == Some(0) {
            return Err(Error::Config("threads must be at least 1".into()));
        }
        if kind.is_theory() {
            return self.validate_theory(kind);
        }
        self.estimator.validate()?;
        let lrs = if self.optimizer.lr_grid.is_empty() {
            vec![self.optimizer.learning_rate]
        } else {
            self.optimizer.lr_grid.clone()
        };
        for lr in lrs {
            if !(lr >= 0.0) || !lr.is_finite() {
                return Err(Error::Config(format!("learning rate must be finite and >= 0, got {lr}")));
            }
        }
        if self.run.steps == 0 {
            return Err(Error::Config("run.steps must be at least 1".into()));
        }
        if self.run.methods.is_empty() {
            return Err(Error::Config("run.methods must name at least one method".into()));
        }
        if let Some(t) = self.run.loss_threshold {
            if !t.is_finite() {
                return Err(Error::Config(format!("run.loss_threshold must be finite, got {t}")));
            }
        } else {
            positive("run.threshold_fraction", self.run.threshold_fraction)?;
        }
        match &self.objective {
            ObjectiveConfig::Mlp { .. } => self.validate_data()?,
            ObjectiveConfig::Linear { dim } | ObjectiveConfig::Quadratic { dim, .. } if *dim == 0 => {
                return Err(Error::Config("objective.dim must be at least 1".into()));
            }
            ObjectiveConfig::Quadratic { eig_min, eig_max, .. } => {
                positive("objective.eig_min", *eig_min)?;
                if !(eig_max >= eig_min) || !eig_max.is_finite() {
                    return Err(Error::Config("objective.eig_max must be finite and >= eig_min".into()));
                }
            }
            ObjectiveConfig::Linear { .. } => {}
        }
        if kind == ExperimentKind::Noise {
            // a run counts proper updates, so every update being permuted would never end
            if !(0.0..1.0).contains(&self.noise.prob) {
                return Err(Error::Config(format!("noise.prob must lie in [0, 1), got {}", self.noise.prob)));
            }
            if self.run.replicates < 2 {
                return Err(Error::Config("the noise study needs at least 2 replicates".into()));
            }
            if !(self.noise.confidence > 0.0 && self.noise.confidence < 1.0) {
                return Err(Error::Config("noise.confidence must lie in (0, 1)".into()));
            }
            let budget = self.estimator.k_history + self.estimator.p_random;
            if let Some(&k) = self.noise.k_values.iter().find(|&&k| k > budget) {
                return Err(Error::Config(format!("noise.k_values entry {k} exceeds the direction budget {budget}")));
            }
        }
        Ok(())
    }

    fn validate_data(&self) -> Result<()> {
        let d = &self.data;
        if d.batch_size == 0 {
            return Err(Error::Config("data.batch_size must be at least 1".into()));
        }
        match d.source {
            DataSource::Blobs => {
                if d.num_classes == 0 || d.samples_per_class == 0 || d.feature_dim == 0 {
                    return Err(Error::Config("blob counts must be at least 1".into()));
                }
                if !(d.spread >= 0.0) || !d.spread.is_finite() {
                    return Err(Error::Config(format!("data.spread must be finite and >= 0, got {}", d.spread)));
                }
            }
            DataSource::Mnist => {
                for (name, p) in [("data.mnist_images", &d.mnist_images), ("data.mnist_labels", &d.mnist_labels)] {
                    match p {
                        None => return Err(Error::Config(format!("{name} is required for MNIST data"))),
                        Some(p) if !p.is_file() => {
                            return Err(Error::Io(std::io::Error::new(
                                std::io::ErrorKind::NotFound,
                                format!("{name}: {} is not a readable file", p.display()),
                            )))
                        }
                        Some(_) => {}
                    }
                }
            }
        }
        Ok(())
    }

    fn validate_theory(&self, kind: ExperimentKind) -> Result<()> {
        let t = &self.theory;
        if t.trials == 0 {
            return Err(Error::Config("theory.trials must be at least 1".into()));
        }
        positive("theory.se_tolerance", t.se_tolerance)?;
        let chain = crate::theory::ChainParams { dim: t.dim, p_random: t.p_random, alpha: t.alpha, delta: t.delta };
        match kind {
            ExperimentKind::TheoryDrift | ExperimentKind::TheoryHitting | ExperimentKind::TheoryTheorem2 => {
                chain.validate().map_err(|e| Error::Config(e.to_string()))?;
            }
            _ => {}
        }
        if kind == ExperimentKind::TheoryTheorem2 && (t.steps == 0 || t.burn_in >= t.steps) {
            return Err(Error::Config("theory.burn_in must be below theory.steps".into()));
        }
        if kind == ExperimentKind::TheoryProp1 && (t.max_dim < 2 || t.instances == 0 || t.span_trials == 0) {
            return Err(Error::Config("theory.prop1 needs max_dim >= 2 and nonzero instances and span_trials".into()));
        }
        if kind == ExperimentKind::TheoryProp2 {
            if let Some((p, _)) = t.prop2_cells.iter().find(|(p, _)| *p == 0 || *p > t.dim) {
                return Err(Error::Config(format!("theory.prop2_cells: P={p} outside 1..={}", t.dim)));
            }
        }
        Ok(())
    }

    /// Antithetic direction pairs per update, shared by every compared
    /// estimator: the guided estimator's `k + P`, and the ES baseline's `P`.
    pub fn budget_directions(&self) -> usize {
        self.estimator.k_history + self.estimator.p_random
    }
}

/// Sets `a.b.c = value` in a TOML tree. The value is parsed as a TOML
/// literal when possible and taken as a bare string otherwise.
pub fn apply_override(root: &mut toml::Value, assignment: &str) -> Result<()> {
    let (key, raw) = assignment
        .split_once('=')
        .ok_or_else(|| Error::Config(format!("override '{assignment}' is not of the form key=value")))?;
    let key = key.trim();
    let raw = raw.trim();
    let value = match toml::from_str::<toml::Table>(&format!("v = {raw}")) {
        Ok(mut t) => t.remove("v").expect("parsed key"),
        Err(_) => toml::Value::String(raw.to_string()),
    };
    let parts: Vec<&str> = key.split('.').collect();
    if parts.iter().any(|p| p.is_empty()) {
        return Err(Error::Config(format!("malformed override key '{key}'")));
    }
    let mut node = root;
    for part in &parts[..parts.len() - 1] {
        let table = node
            .as_table_mut()
            .ok_or_else(|| Error::Config(format!("override '{key}': '{part}' is not inside a table")))?;
        node = table.entry(part.to_string()).or_insert_with(|| toml::Value::Table(toml::Table::new()));
    }
    let table = node.as_table_mut().ok_or_else(|| Error::Config(format!("override '{key}' does not address a table")))?;
    table.insert(parts[parts.len() - 1].to_string(), value);
    Ok(())
}
