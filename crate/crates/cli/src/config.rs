//! Experiment configuration: a TOML file with nested sections. Unknown keys
//! are hard errors, so typos in sweep scripts fail before any run starts.

use std::path::{Path, PathBuf};

use serde::Deserialize;

use blockgrad::solvers::{BatchSchedule, Method, StepsizeKind, StepsizeSchedule, UpdateOrder};
use blockgrad::{Budget, SolverConfig};

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    pub problem: ProblemSpec,
    #[serde(default)]
    pub evaluation: EvaluationSpec,
    pub experiment: ExperimentSpec,
    #[serde(rename = "solver")]
    pub solvers: Vec<SolverSpec>,
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields, rename_all = "kebab-case", tag = "kind")]
pub enum ProblemSpec {
    #[serde(rename = "least-squares")]
    LeastSquares {
        dim: usize,
        samples: usize,
        #[serde(default = "default_noise_std")]
        noise_std: f64,
        #[serde(default)]
        mode: LsMode,
    },
    Logistic {
        #[serde(default)]
        dim: usize,
        #[serde(default)]
        samples: usize,
        /// Sparse-format dataset; overrides the synthetic generator.
        dataset: Option<PathBuf>,
    },
    Tensor {
        sizes: [usize; 3],
        slab_width: usize,
        rank: usize,
        measurements: usize,
        #[serde(default)]
        l1_weight: f64,
    },
    Bilinear {
        #[serde(default)]
        rows: usize,
        #[serde(default)]
        cols: usize,
        #[serde(default)]
        samples: usize,
        rank: usize,
        #[serde(default = "default_truth_rank")]
        truth_rank: usize,
        /// Dense matrix dataset; overrides the synthetic generator.
        dataset: Option<PathBuf>,
    },
}

fn default_noise_std() -> f64 {
    0.1
}

fn default_truth_rank() -> usize {
    1
}

#[derive(Debug, Clone, Copy, Default, Deserialize, PartialEq, Eq)]
#[serde(rename_all = "kebab-case")]
pub enum LsMode {
    #[default]
    Streaming,
    FiniteSum,
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields, rename_all = "kebab-case")]
pub struct EvaluationSpec {
    #[serde(default)]
    pub metric: MetricSpec,
    /// Fresh draws for the empirical-loss metric.
    #[serde(default = "default_fresh_samples")]
    pub fresh_samples: usize,
    /// Reference optimum for the objective-gap metric.
    #[serde(default)]
    pub phi_star: PhiStarSpec,
    /// Epoch budget of the deterministic reference run when `phi_star`
    /// is "solve".
    #[serde(default = "default_phi_star_epochs")]
    pub phi_star_epochs: f64,
}

impl Default for EvaluationSpec {
    fn default() -> Self {
        Self {
            metric: MetricSpec::None,
            fresh_samples: default_fresh_samples(),
            phi_star: PhiStarSpec::default(),
            phi_star_epochs: default_phi_star_epochs(),
        }
    }
}

fn default_fresh_samples() -> usize {
    100_000
}

fn default_phi_star_epochs() -> f64 {
    300.0
}

#[derive(Debug, Clone, Copy, Default, Deserialize, PartialEq, Eq)]
#[serde(rename_all = "kebab-case")]
pub enum MetricSpec {
    #[default]
    None,
    /// Mean loss over fresh samples (least squares).
    EmpiricalLoss,
    /// Squared distance to the generating truth (least squares).
    DistanceSquared,
    /// Objective minus a reference optimum.
    ObjectiveGap,
    /// Reconstruction error relative to the ground-truth tensor.
    RelativeError,
    /// Classification accuracy on the training samples (bilinear).
    Accuracy,
}

#[derive(Debug, Clone, Copy, Deserialize, PartialEq)]
#[serde(untagged)]
pub enum PhiStarSpec {
    /// A known numeric optimum.
    Value(f64),
    Keyword(PhiStarKeyword),
}

impl Default for PhiStarSpec {
    fn default() -> Self {
        PhiStarSpec::Keyword(PhiStarKeyword::ClosedForm)
    }
}

#[derive(Debug, Clone, Copy, Deserialize, PartialEq, Eq)]
#[serde(rename_all = "kebab-case")]
pub enum PhiStarKeyword {
    /// Closed form, where the problem has one (streaming least squares).
    ClosedForm,
    /// A long deterministic cyclic-descent run on the trial's data.
    Solve,
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields, rename_all = "kebab-case")]
pub struct ExperimentSpec {
    pub trials: usize,
    pub master_seed: u64,
    pub output_prefix: PathBuf,
    #[serde(default = "default_record_every")]
    pub record_every: f64,
    /// When false (the default) the seconds column is written as zero so
    /// outputs are byte-identical across machines and reruns.
    #[serde(default)]
    pub record_wall_clock: bool,
    #[serde(default = "default_x0_scale")]
    pub x0_scale: f64,
}

fn default_record_every() -> f64 {
    1.0
}

fn default_x0_scale() -> f64 {
    0.1
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields, rename_all = "kebab-case")]
pub struct SolverSpec {
    pub name: String,
    pub method: MethodSpec,
    #[serde(default = "default_theta")]
    pub theta: f64,
    #[serde(default)]
    pub stepsize: StepsizeSpec,
    /// Cap the schedule by the reciprocal sampled Lipschitz constant.
    #[serde(default = "default_true")]
    pub cap: bool,
    /// Horizon of the fixed-horizon schedule, in iterations.
    #[serde(default)]
    pub horizon: usize,
    /// Constant batch size; ignored when `batch_growth` says otherwise.
    #[serde(default = "default_batch")]
    pub batch: usize,
    #[serde(default)]
    pub batch_growth: BatchGrowthSpec,
    #[serde(default = "default_stride")]
    pub batch_stride: usize,
    #[serde(default = "default_epsilon")]
    pub batch_epsilon: f64,
    #[serde(default)]
    pub order: OrderSpec,
    pub epochs: f64,
    #[serde(default)]
    pub max_seconds: Option<f64>,
    /// Blocks selected per iteration (sbmd only).
    #[serde(default)]
    pub sbmd_blocks: usize,
    #[serde(default)]
    pub track_ergodic: bool,
}

fn default_theta() -> f64 {
    1.0
}

fn default_true() -> bool {
    true
}

fn default_batch() -> usize {
    1
}

fn default_stride() -> usize {
    10
}

fn default_epsilon() -> f64 {
    1.0
}

#[derive(Debug, Clone, Copy, Deserialize, PartialEq, Eq)]
#[serde(rename_all = "kebab-case")]
pub enum MethodSpec {
    Bsg,
    Sg,
    Sbmd,
    Bcgd,
}

#[derive(Debug, Clone, Copy, Default, Deserialize, PartialEq, Eq)]
#[serde(rename_all = "kebab-case")]
pub enum StepsizeSpec {
    #[default]
    DimSqrt,
    DimSqrtLog,
    DimLinear,
    FixedHorizon,
    LipschitzOnly,
}

#[derive(Debug, Clone, Copy, Default, Deserialize, PartialEq, Eq)]
#[serde(rename_all = "kebab-case")]
pub enum BatchGrowthSpec {
    #[default]
    Constant,
    Linear,
    Polynomial,
    Full,
}

#[derive(Debug, Clone, Copy, Default, Deserialize, PartialEq, Eq)]
#[serde(rename_all = "kebab-case")]
pub enum OrderSpec {
    #[default]
    Fixed,
    Shuffled,
}

impl SolverSpec {
    /// Lowers this section into a core solver configuration (the seed is
    /// derived per trial and filled in later).
    pub fn to_solver_config(&self, record_every: f64) -> Result<SolverConfig, String> {
        let method = match self.method {
            MethodSpec::Bsg => Method::Bsg,
            MethodSpec::Sg => Method::Sg,
            MethodSpec::Sbmd => {
                if self.sbmd_blocks == 0 {
                    return Err(format!("solver `{}`: sbmd needs sbmd_blocks >= 1", self.name));
                }
                Method::Sbmd { blocks_per_iter: self.sbmd_blocks }
            }
            MethodSpec::Bcgd => Method::Bcgd,
        };
        let kind = match self.stepsize {
            StepsizeSpec::DimSqrt => StepsizeKind::DimSqrt { theta: self.theta },
            StepsizeSpec::DimSqrtLog => StepsizeKind::DimSqrtLog { theta: self.theta },
            StepsizeSpec::DimLinear => StepsizeKind::DimLinear { theta: self.theta },
            StepsizeSpec::FixedHorizon => {
                if self.horizon == 0 {
                    return Err(format!("solver `{}`: fixed-horizon needs horizon >= 1", self.name));
                }
                StepsizeKind::FixedHorizon { theta: self.theta, horizon: self.horizon }
            }
            StepsizeSpec::LipschitzOnly => StepsizeKind::LipschitzOnly,
        };
        let batch = match self.batch_growth {
            BatchGrowthSpec::Constant => BatchSchedule::Constant { m: self.batch },
            BatchGrowthSpec::Linear => {
                BatchSchedule::LinearIncrease { initial: self.batch, stride: self.batch_stride }
            }
            BatchGrowthSpec::Polynomial => {
                BatchSchedule::Polynomial { initial: self.batch, epsilon: self.batch_epsilon }
            }
            BatchGrowthSpec::Full => BatchSchedule::Full,
        };
        Ok(SolverConfig {
            method,
            stepsize: StepsizeSchedule { kind, cap_by_lipschitz: self.cap },
            batch,
            order: match self.order {
                OrderSpec::Fixed => UpdateOrder::Fixed,
                OrderSpec::Shuffled => UpdateOrder::Shuffled,
            },
            budget: Budget { epochs: self.epochs, max_seconds: self.max_seconds },
            seed: 0,
            record_every,
            track_ergodic: self.track_ergodic,
        })
    }
}

impl ExperimentConfig {
    pub fn load(path: &Path) -> Result<Self, String> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| format!("cannot read {}: {e}", path.display()))?;
        let config: ExperimentConfig =
            toml::from_str(&text).map_err(|e| format!("{}: {e}", path.display()))?;
        config.validate()?;
        Ok(config)
    }

    pub fn validate(&self) -> Result<(), String> {
        if self.experiment.trials == 0 {
            return Err("experiment.trials must be at least 1".into());
        }
        if self.experiment.record_every <= 0.0 {
            return Err("experiment.record_every must be positive".into());
        }
        if self.solvers.is_empty() {
            return Err("at least one [[solver]] section is required".into());
        }
        let mut seen = std::collections::HashSet::new();
        for s in &self.solvers {
            if !seen.insert(&s.name) {
                return Err(format!("duplicate solver name `{}`", s.name));
            }
            if s.epochs < 0.0 {
                return Err(format!("solver `{}`: epochs must be nonnegative", s.name));
            }
            s.to_solver_config(self.experiment.record_every)?;
        }
        match &self.problem {
            ProblemSpec::LeastSquares { dim, samples, noise_std, .. } => {
                if *dim == 0 || *samples == 0 {
                    return Err("least-squares needs dim >= 1 and samples >= 1".into());
                }
                if *noise_std < 0.0 {
                    return Err("noise_std must be nonnegative".into());
                }
            }
            ProblemSpec::Logistic { dim, samples, dataset } => {
                if dataset.is_none() && (*dim == 0 || *samples == 0 || samples % 2 != 0) {
                    return Err(
                        "synthetic logistic needs dim >= 1 and a positive even sample count".into()
                    );
                }
            }
            ProblemSpec::Tensor { sizes, slab_width, rank, measurements, l1_weight } => {
                if sizes.contains(&0) || *rank == 0 || *measurements == 0 {
                    return Err("tensor sizes, rank, and measurements must be positive".into());
                }
                if sizes.iter().any(|&s| *slab_width > s) {
                    return Err("slab_width exceeds a mode size".into());
                }
                if *l1_weight < 0.0 {
                    return Err("l1_weight must be nonnegative".into());
                }
            }
            ProblemSpec::Bilinear { rows, cols, samples, rank, truth_rank, dataset } => {
                if *rank == 0 {
                    return Err("bilinear rank must be positive".into());
                }
                if dataset.is_none()
                    && (*rows == 0 || *cols == 0 || *samples == 0 || samples % 2 != 0 || *truth_rank == 0)
                {
                    return Err("synthetic bilinear needs rows, cols, truth_rank >= 1 and a positive even sample count".into());
                }
            }
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    const GOOD: &str = r#"
[problem]
kind = "least-squares"
dim = 20
samples = 100

[experiment]
trials = 2
master-seed = 7
output-prefix = "out/x"

[[solver]]
name = "bsg"
method = "bsg"
theta = 0.1
epochs = 1.0
"#;

    #[test]
    fn parses_a_minimal_config() {
        let c: ExperimentConfig = toml::from_str(GOOD).unwrap();
        c.validate().unwrap();
        assert_eq!(c.solvers.len(), 1);
        assert_eq!(c.experiment.trials, 2);
        assert!(!c.experiment.record_wall_clock);
    }

    #[test]
    fn unknown_keys_are_rejected() {
        let bad = GOOD.replace("theta = 0.1", "theta = 0.1\ntypo-key = 3");
        let err = toml::from_str::<ExperimentConfig>(&bad).unwrap_err();
        assert!(err.to_string().contains("typo-key"), "{err}");
    }

    #[test]
    fn duplicate_solver_names_are_rejected() {
        let dup = format!(
            "{GOOD}\n[[solver]]\nname = \"bsg\"\nmethod = \"sg\"\nepochs = 1.0\n"
        );
        let c: ExperimentConfig = toml::from_str(&dup).unwrap();
        assert!(c.validate().unwrap_err().contains("duplicate"));
    }

    #[test]
    fn sbmd_requires_block_count() {
        let sbmd = GOOD.replace("method = \"bsg\"", "method = \"sbmd\"");
        let c: ExperimentConfig = toml::from_str(&sbmd).unwrap();
        assert!(c.validate().is_err());
    }

    #[test]
    fn phi_star_accepts_value_and_keywords() {
        #[derive(Deserialize)]
        struct Holder {
            p: PhiStarSpec,
        }
        let v: Holder = toml::from_str("p = 0.005").unwrap();
        assert_eq!(v.p, PhiStarSpec::Value(0.005));
        let v: Holder = toml::from_str("p = \"closed-form\"").unwrap();
        assert_eq!(v.p, PhiStarSpec::Keyword(PhiStarKeyword::ClosedForm));
        let v: Holder = toml::from_str("p = \"solve\"").unwrap();
        assert_eq!(v.p, PhiStarSpec::Keyword(PhiStarKeyword::Solve));
    }
}
