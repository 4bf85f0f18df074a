//! Run configuration. Every field has a default, so `{"schema": 1}` is a
//! complete config; see `docs/formats.md` for the full layout.

use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::kernel::{KernelFunction, Retention};
use crate::preimage::{PreImageConfig, RestartPolicy};
use crate::regression::FitMethod;

pub const CONFIG_SCHEMA: u32 = 1;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    pub schema: u32,
    #[serde(default)]
    pub instance: InstanceConfig,
    #[serde(default)]
    pub circuit: CircuitConfig,
    #[serde(default)]
    pub training: TrainingConfig,
    #[serde(default)]
    pub state: StateConfig,
    #[serde(default)]
    pub kernel: KernelConfig,
    #[serde(default)]
    pub preimage: PreImageSettings,
    #[serde(default)]
    pub output: OutputConfig,
    #[serde(default, skip_serializing_if = "DebugConfig::is_default")]
    pub debug: DebugConfig,
}

impl Default for RunConfig {
    fn default() -> Self {
        RunConfig {
            schema: CONFIG_SCHEMA,
            instance: InstanceConfig::default(),
            circuit: CircuitConfig::default(),
            training: TrainingConfig::default(),
            state: StateConfig::default(),
            kernel: KernelConfig::default(),
            preimage: PreImageSettings::default(),
            output: OutputConfig::default(),
            debug: DebugConfig::default(),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum InstanceKind {
    MaxcutRing,
    MaxcutRandom,
    /// Graph read from `instance.path`.
    File,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct InstanceConfig {
    pub kind: InstanceKind,
    pub size: usize,
    pub seed: u64,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub path: Option<PathBuf>,
}

impl Default for InstanceConfig {
    fn default() -> Self {
        InstanceConfig {
            kind: InstanceKind::MaxcutRing,
            size: 4,
            seed: 1,
            path: None,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Ansatz {
    /// Per layer: one `Z⊗Z` rotation per edge, then one `X` rotation per qubit.
    Alternating,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum ParameterSharing {
    /// One parameter per gate: `L = p·(|S| + n)`.
    PerGate,
    /// One parameter per gate family per layer: `L = 2p`.
    Shared,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct CircuitConfig {
    pub ansatz: Ansatz,
    pub layers: usize,
    pub parameters: ParameterSharing,
}

impl Default for CircuitConfig {
    fn default() -> Self {
        CircuitConfig {
            ansatz: Ansatz::Alternating,
            layers: 1,
            parameters: ParameterSharing::PerGate,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case", deny_unknown_fields)]
pub enum ThetaDistribution {
    Uniform { low: f64, high: f64 },
    Normal { mean: f64, std: f64 },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct TrainingConfig {
    pub samples: usize,
    pub distribution: ThetaDistribution,
    pub seed: u64,
}

impl Default for TrainingConfig {
    fn default() -> Self {
        TrainingConfig {
            samples: 100,
            distribution: ThetaDistribution::Uniform {
                low: 0.0,
                high: std::f64::consts::TAU,
            },
            seed: 2,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case", deny_unknown_fields)]
pub enum ThetaStart {
    Zero,
    Random { seed: u64 },
    Supplied { values: Vec<f64> },
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case", deny_unknown_fields)]
pub enum TargetSpec {
    Absolute { value: f64 },
    /// `f* = f₀ + delta`.
    Step { delta: f64 },
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case", deny_unknown_fields)]
pub enum Estimator {
    Exact,
    Sampled { shots: u64, seed: u64 },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct StateConfig {
    pub theta0: ThetaStart,
    pub target: TargetSpec,
    pub method: FitMethod,
    pub ratio_steps: Vec<f64>,
    pub estimator: Estimator,
}

impl Default for StateConfig {
    fn default() -> Self {
        StateConfig {
            theta0: ThetaStart::Zero,
            target: TargetSpec::Step { delta: 0.5 },
            method: FitMethod::LeastSquaresBatch,
            ratio_steps: vec![0.04, 0.02, 0.01],
            estimator: Estimator::Exact,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum KernelKind {
    Rbf,
    Polynomial,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum RetainMode {
    Auto,
    AllPositive,
}

/// `"auto"`, `"all-positive"`, or a component count.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum RetainSpec {
    Count(usize),
    Mode(RetainMode),
}

impl RetainSpec {
    pub fn to_retention(self) -> Retention {
        match self {
            RetainSpec::Count(n) => Retention::Count(n),
            RetainSpec::Mode(RetainMode::Auto) => Retention::Auto,
            RetainSpec::Mode(RetainMode::AllPositive) => Retention::AllPositive,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct KernelConfig {
    pub kind: KernelKind,
    /// rbf width; `null` selects the median pairwise distance.
    pub sigma: Option<f64>,
    pub degree: u32,
    pub offset: f64,
    pub retain: RetainSpec,
}

impl Default for KernelConfig {
    fn default() -> Self {
        KernelConfig {
            kind: KernelKind::Rbf,
            sigma: None,
            degree: 2,
            offset: 1.0,
            retain: RetainSpec::Mode(RetainMode::Auto),
        }
    }
}

impl KernelConfig {
    /// Resolves the kernel against a training set (needed for the median width).
    pub fn build(&self, training: &[Vec<f64>]) -> Result<KernelFunction<f64>> {
        match self.kind {
            KernelKind::Rbf => {
                let sigma = match self.sigma {
                    Some(s) => s,
                    None => crate::kernel::median_distance(training).ok_or(Error::DegenerateTrainingSet {
                        cutoff: crate::kernel::EIGENVALUE_CUTOFF,
                    })?,
                };
                KernelFunction::rbf(sigma)
            }
            KernelKind::Polynomial => KernelFunction::polynomial(self.degree, self.offset),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum RestartKind {
    None,
    Perturb,
    GrowPhi,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct PreImageSettings {
    pub phi: f64,
    pub max_iterations: usize,
    pub tol: f64,
    pub restart: RestartKind,
    pub restart_scale: f64,
    pub restart_factor: f64,
    pub seed: u64,
}

impl Default for PreImageSettings {
    fn default() -> Self {
        PreImageSettings {
            phi: 0.0,
            max_iterations: 500,
            tol: 1e-8,
            restart: RestartKind::GrowPhi,
            restart_scale: 0.1,
            restart_factor: 10.0,
            seed: 3,
        }
    }
}

impl PreImageSettings {
    pub fn to_config(&self) -> PreImageConfig<f64> {
        let restart = match self.restart {
            RestartKind::None => RestartPolicy::None,
            RestartKind::Perturb => RestartPolicy::Perturb {
                scale: self.restart_scale,
            },
            RestartKind::GrowPhi => RestartPolicy::GrowPhi {
                factor: self.restart_factor,
            },
        };
        PreImageConfig {
            phi: self.phi,
            max_iterations: self.max_iterations,
            tol: self.tol,
            restart,
            seed: self.seed,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum OutputFormat {
    Json,
    Csv,
    Both,
}

impl OutputFormat {
    pub fn json(self) -> bool {
        matches!(self, OutputFormat::Json | OutputFormat::Both)
    }

    pub fn csv(self) -> bool {
        matches!(self, OutputFormat::Csv | OutputFormat::Both)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct OutputConfig {
    pub dir: PathBuf,
    pub format: OutputFormat,
}

impl Default for OutputConfig {
    fn default() -> Self {
        OutputConfig {
            dir: PathBuf::from("out"),
            format: OutputFormat::Json,
        }
    }
}

/// Fault injection for negative-control runs of `validate`.
#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct DebugConfig {
    /// Center with the unscaled all-ones matrix instead of `J/N`.
    pub corrupt_centering: bool,
}

impl DebugConfig {
    fn is_default(&self) -> bool {
        *self == DebugConfig::default()
    }
}

impl RunConfig {
    pub fn from_json(text: &str) -> Result<Self> {
        let config: RunConfig = serde_json::from_str(text).map_err(|e| Error::Config(e.to_string()))?;
        config.validate()?;
        Ok(config)
    }

    pub fn read(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| Error::Config(format!("{}: {e}", path.display())))?;
        Self::from_json(&text).map_err(|e| match e {
            Error::Config(m) => Error::Config(format!("{}: {m}", path.display())),
            other => other,
        })
    }

    /// Replaces every seed with one derived from `seed`.
    pub fn override_seeds(&mut self, seed: u64) {
        self.instance.seed = seed;
        self.training.seed = seed.wrapping_add(1);
        self.preimage.seed = seed.wrapping_add(2);
        if let ThetaStart::Random { seed: s } = &mut self.state.theta0 {
            *s = seed.wrapping_add(3);
        }
        if let Estimator::Sampled { seed: s, .. } = &mut self.state.estimator {
            *s = seed.wrapping_add(4);
        }
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |m: String| Err(Error::Config(m));
        if self.schema != CONFIG_SCHEMA {
            return bad(format!("schema {} unsupported (expected {CONFIG_SCHEMA})", self.schema));
        }
        match self.instance.kind {
            InstanceKind::File if self.instance.path.is_none() => {
                return bad("instance.kind \"file\" needs instance.path".into())
            }
            InstanceKind::MaxcutRing | InstanceKind::MaxcutRandom
                if !(2..=14).contains(&self.instance.size) =>
            {
                return bad(format!("instance.size {} outside 2..=14", self.instance.size))
            }
            _ => {}
        }
        if self.circuit.layers == 0 {
            return bad("circuit.layers must be >= 1".into());
        }
        if self.training.samples < 2 {
            return bad("training.samples must be >= 2".into());
        }
        match self.training.distribution {
            ThetaDistribution::Uniform { low, high } if !(low < high && low.is_finite() && high.is_finite()) => {
                return bad("training.distribution uniform needs finite low < high".into())
            }
            ThetaDistribution::Normal { mean, std } if !(std > 0.0 && std.is_finite() && mean.is_finite()) => {
                return bad("training.distribution normal needs finite mean and std > 0".into())
            }
            _ => {}
        }
        if let Estimator::Sampled { shots: 0, .. } = self.state.estimator {
            return bad("state.estimator shots must be >= 1".into());
        }
        if self.state.ratio_steps.iter().any(|d| !(d.is_finite() && *d != 0.0)) {
            return bad("state.ratio_steps must be finite and nonzero".into());
        }
        if let RetainSpec::Count(0) = self.kernel.retain {
            return bad("kernel.retain must be >= 1".into());
        }
        if self.kernel.kind == KernelKind::Rbf {
            if let Some(s) = self.kernel.sigma {
                if !(s > 0.0 && s.is_finite()) {
                    return bad("kernel.sigma must be > 0".into());
                }
            }
        }
        if self.kernel.kind == KernelKind::Polynomial && self.kernel.degree == 0 {
            return bad("kernel.degree must be >= 1".into());
        }
        self.preimage
            .to_config()
            .validate()
            .map_err(|e| Error::Config(format!("preimage: {e}")))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn minimal_config_uses_defaults() {
        let c = RunConfig::from_json(r#"{"schema": 1}"#).unwrap();
        assert_eq!(c, RunConfig::default());
    }

    #[test]
    fn round_trip() {
        let mut c = RunConfig::default();
        c.kernel.retain = RetainSpec::Count(3);
        c.state.theta0 = ThetaStart::Random { seed: 9 };
        let text = serde_json::to_string(&c).unwrap();
        assert_eq!(RunConfig::from_json(&text).unwrap(), c);
    }

    #[test]
    fn rejects_bad_configs() {
        for text in [
            r#"{"schema": 2}"#,
            r#"{"schema": 1, "instance": {"size": 15}}"#,
            r#"{"schema": 1, "instance": {"kind": "file"}}"#,
            r#"{"schema": 1, "training": {"samples": 1}}"#,
            r#"{"schema": 1, "bogus": 0}"#,
            r#"{"schema": 1, "preimage": {"tol": 0}}"#,
            r#"{"schema": 1, "kernel": {"retain": 0}}"#,
        ] {
            assert!(matches!(RunConfig::from_json(text), Err(Error::Config(_))), "{text}");
        }
    }

    #[test]
    fn retain_forms() {
        let c = RunConfig::from_json(r#"{"schema": 1, "kernel": {"retain": "all-positive"}}"#).unwrap();
        assert_eq!(c.kernel.retain.to_retention(), Retention::AllPositive);
        let c = RunConfig::from_json(r#"{"schema": 1, "kernel": {"retain": 4}}"#).unwrap();
        assert_eq!(c.kernel.retain.to_retention(), Retention::Count(4));
    }

    #[test]
    fn seed_override_touches_every_seed() {
        let mut c = RunConfig::default();
        c.state.theta0 = ThetaStart::Random { seed: 0 };
        c.state.estimator = Estimator::Sampled { shots: 10, seed: 0 };
        c.override_seeds(100);
        assert_eq!(c.instance.seed, 100);
        assert_eq!(c.training.seed, 101);
        assert_eq!(c.preimage.seed, 102);
        assert_eq!(c.state.theta0, ThetaStart::Random { seed: 103 });
        assert_eq!(c.state.estimator, Estimator::Sampled { shots: 10, seed: 104 });
    }
}
