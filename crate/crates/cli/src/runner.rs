//! Trial execution and trace persistence.
//!
//! Seed derivation (the reproducibility contract): with `mix` the splitmix64
//! fold from the core crate,
//!   data seed  = mix(master_seed, [0xDA, trial])
//!   start seed = mix(master_seed, [0x17, trial])
//!   eval seed  = mix(master_seed, [0xE7, trial])
//!   run seed   = mix(master_seed, [0x50, solver_index, trial])
//! Data, starting point, and evaluation samples depend only on the trial, so
//! every solver in a trial sees the same instance, the same start, and the
//! same fresh evaluation set; run seeds also mix the solver index. Hashing
//! instead of drawing seeds sequentially keeps trials independent under
//! parallel execution.

use std::fmt::Write as _;
use std::path::{Path, PathBuf};
use std::sync::Arc;

use rayon::prelude::*;

use blockgrad::problems::{
    io, BilinearLogisticInstance, LeastSquaresInstance, LogisticInstance, TensorRecoveryInstance,
};
use blockgrad::seed::{mix, rng_for, stream};
use blockgrad::solvers::{self, BatchSchedule, Method, StepsizeSchedule};
use blockgrad::{BlockPoint, SolverConfig, StochasticProblem};
use rand_distr::Distribution;

use crate::config::{
    ExperimentConfig, LsMode, MetricSpec, PhiStarKeyword, PhiStarSpec, ProblemSpec,
};

const DATA_TAG: u64 = 0xDA;
const START_TAG: u64 = 0x17;
const EVAL_TAG: u64 = 0xE7;
const RUN_TAG: u64 = 0x50;

#[derive(Debug)]
pub enum CliError {
    /// Bad configuration or unreadable inputs; exit code 1.
    Config(String),
    /// Failure during or after the runs; exit code 2.
    Runtime(String),
}

impl std::fmt::Display for CliError {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            CliError::Config(m) => write!(f, "configuration error: {m}"),
            CliError::Runtime(m) => write!(f, "runtime error: {m}"),
        }
    }
}

enum Loader {
    LsStreaming { dim: usize, samples: usize, noise_std: f64 },
    LsFinite { dim: usize, samples: usize, noise_std: f64 },
    LogisticSynthetic { dim: usize, samples: usize },
    LogisticFixed(Arc<LogisticInstance>),
    Tensor { sizes: [usize; 3], slab_width: usize, rank: usize, measurements: usize, l1_weight: f64 },
    BilinearSynthetic { rows: usize, cols: usize, samples: usize, rank: usize, truth_rank: usize },
    BilinearFixed(Arc<BilinearLogisticInstance>),
}

enum Built {
    Ls(Arc<LeastSquaresInstance>),
    Logistic(Arc<LogisticInstance>),
    Tensor(Arc<TensorRecoveryInstance>),
    Bilinear(Arc<BilinearLogisticInstance>),
}

impl Loader {
    fn from_spec(spec: &ProblemSpec) -> Result<Self, CliError> {
        Ok(match spec {
            ProblemSpec::LeastSquares { dim, samples, noise_std, mode } => match mode {
                LsMode::Streaming => {
                    Loader::LsStreaming { dim: *dim, samples: *samples, noise_std: *noise_std }
                }
                LsMode::FiniteSum => {
                    Loader::LsFinite { dim: *dim, samples: *samples, noise_std: *noise_std }
                }
            },
            ProblemSpec::Logistic { dim, samples, dataset } => match dataset {
                Some(path) => Loader::LogisticFixed(Arc::new(
                    io::read_libsvm(path).map_err(|e| CliError::Config(e.to_string()))?,
                )),
                None => Loader::LogisticSynthetic { dim: *dim, samples: *samples },
            },
            ProblemSpec::Tensor { sizes, slab_width, rank, measurements, l1_weight } => {
                Loader::Tensor {
                    sizes: *sizes,
                    slab_width: *slab_width,
                    rank: *rank,
                    measurements: *measurements,
                    l1_weight: *l1_weight,
                }
            }
            ProblemSpec::Bilinear { rows, cols, samples, rank, truth_rank, dataset } => {
                match dataset {
                    Some(path) => {
                        let ds =
                            io::read_dense_matrix(path).map_err(|e| CliError::Config(e.to_string()))?;
                        Loader::BilinearFixed(Arc::new(
                            ds.to_bilinear(*rank).map_err(|e| CliError::Config(e.to_string()))?,
                        ))
                    }
                    None => Loader::BilinearSynthetic {
                        rows: *rows,
                        cols: *cols,
                        samples: *samples,
                        rank: *rank,
                        truth_rank: *truth_rank,
                    },
                }
            }
        })
    }

    fn build(&self, data_seed: u64) -> Result<Built, CliError> {
        Ok(match self {
            Loader::LsStreaming { dim, samples, noise_std } => Built::Ls(Arc::new(
                LeastSquaresInstance::streaming(*dim, *samples, *noise_std, data_seed),
            )),
            Loader::LsFinite { dim, samples, noise_std } => Built::Ls(Arc::new(
                LeastSquaresInstance::finite_sum(*dim, *samples, *noise_std, data_seed),
            )),
            Loader::LogisticSynthetic { dim, samples } => Built::Logistic(Arc::new(
                LogisticInstance::synthetic(*dim, *samples, data_seed)
                    .map_err(|e| CliError::Runtime(e.to_string()))?,
            )),
            Loader::LogisticFixed(p) => Built::Logistic(p.clone()),
            Loader::Tensor { sizes, slab_width, rank, measurements, l1_weight } => {
                Built::Tensor(Arc::new(
                    TensorRecoveryInstance::generate(
                        *sizes,
                        *slab_width,
                        *rank,
                        *measurements,
                        *l1_weight,
                        data_seed,
                    )
                    .map_err(|e| CliError::Runtime(e.to_string()))?,
                ))
            }
            Loader::BilinearSynthetic { rows, cols, samples, rank, truth_rank } => {
                Built::Bilinear(Arc::new(
                    BilinearLogisticInstance::synthetic(
                        *rows,
                        *cols,
                        *samples,
                        *rank,
                        *truth_rank,
                        data_seed,
                    )
                    .map_err(|e| CliError::Runtime(e.to_string()))?,
                ))
            }
            Loader::BilinearFixed(p) => Built::Bilinear(p.clone()),
        })
    }

    fn is_finite_sum(&self) -> bool {
        !matches!(self, Loader::LsStreaming { .. })
    }
}

type BoxedMetric = Box<dyn Fn(&BlockPoint) -> f64 + Sync>;

/// One CSV row of the merged trace file.
struct Row {
    trial: usize,
    solver: usize,
    epoch: f64,
    seconds: f64,
    objective: f64,
    metric: Option<f64>,
}

struct TrialOutput {
    rows: Vec<Row>,
    /// Final metric per solver (the summary statistic).
    finals: Vec<f64>,
}

/// Aggregate of the final metric for one solver.
#[derive(Debug, Clone, PartialEq)]
pub struct SolverSummary {
    pub name: String,
    pub trials: usize,
    pub mean: f64,
    pub std: f64,
    pub min: f64,
    pub max: f64,
}

pub fn summarize(name: &str, finals: &[f64]) -> SolverSummary {
    let n = finals.len();
    let mean = finals.iter().sum::<f64>() / n as f64;
    let std = if n > 1 {
        (finals.iter().map(|v| (v - mean) * (v - mean)).sum::<f64>() / (n as f64 - 1.0)).sqrt()
    } else {
        0.0
    };
    SolverSummary {
        name: name.to_string(),
        trials: n,
        mean,
        std,
        min: finals.iter().copied().fold(f64::INFINITY, f64::min),
        max: finals.iter().copied().fold(f64::NEG_INFINITY, f64::max),
    }
}

/// 17 significant digits; round-trips f64 exactly.
pub fn fmt_float(v: f64) -> String {
    format!("{v:.16e}")
}

fn preflight(config: &ExperimentConfig, loader: &Loader) -> Result<(), CliError> {
    let eval = &config.evaluation;
    let is_ls = matches!(loader, Loader::LsStreaming { .. } | Loader::LsFinite { .. });
    match eval.metric {
        MetricSpec::EmpiricalLoss | MetricSpec::DistanceSquared if !is_ls => {
            return Err(CliError::Config(
                "empirical-loss and distance-squared metrics need a least-squares problem".into(),
            ));
        }
        MetricSpec::RelativeError if !matches!(loader, Loader::Tensor { .. }) => {
            return Err(CliError::Config("relative-error metric needs the tensor problem".into()));
        }
        MetricSpec::Accuracy
            if !matches!(loader, Loader::BilinearSynthetic { .. } | Loader::BilinearFixed(_)) =>
        {
            return Err(CliError::Config("accuracy metric needs the bilinear problem".into()));
        }
        _ => {}
    }
    if eval.metric == MetricSpec::ObjectiveGap {
        match eval.phi_star {
            PhiStarSpec::Keyword(PhiStarKeyword::ClosedForm)
                if !matches!(loader, Loader::LsStreaming { .. }) =>
            {
                return Err(CliError::Config(
                    "phi_star = \"closed-form\" is only available for streaming least squares; use \"solve\" or a numeric value".into(),
                ));
            }
            PhiStarSpec::Keyword(PhiStarKeyword::Solve) if !loader.is_finite_sum() => {
                return Err(CliError::Config(
                    "phi_star = \"solve\" needs a finite-sum problem".into(),
                ));
            }
            _ => {}
        }
    }
    for spec in &config.solvers {
        let needs_full = spec.method == crate::config::MethodSpec::Bcgd
            || spec.batch_growth == crate::config::BatchGrowthSpec::Full;
        if needs_full && !loader.is_finite_sum() {
            return Err(CliError::Config(format!(
                "solver `{}` needs full batches, which streaming problems cannot provide",
                spec.name
            )));
        }
    }
    Ok(())
}

fn starting_point<P: StochasticProblem>(problem: &P, seed: u64, scale: f64) -> BlockPoint {
    let mut rng = rng_for(seed, stream::INIT);
    let values = (0..problem.partition().total_dim())
        .map(|_| {
            let z: f64 = rand_distr::StandardNormal.sample(&mut rng);
            scale * z
        })
        .collect();
    BlockPoint::new(problem.partition().clone(), values).expect("dims match")
}

/// Reference optimum via a deterministic cyclic-descent run on the trial's
/// data.
fn solve_phi_star<P: StochasticProblem>(problem: &P, epochs: f64) -> Result<f64, CliError> {
    let config = SolverConfig {
        method: Method::Bcgd,
        stepsize: StepsizeSchedule::lipschitz_only(),
        batch: BatchSchedule::Full,
        order: solvers::UpdateOrder::Fixed,
        budget: blockgrad::Budget::epochs(epochs),
        seed: 0,
        record_every: epochs.max(1.0),
        track_ergodic: false,
    };
    let x0 = BlockPoint::zeros(problem.partition().clone());
    let trace = solvers::run(problem, &x0, &config, None)
        .map_err(|e| CliError::Runtime(format!("reference solve failed: {e}")))?;
    Ok(problem.objective(&trace.final_point).value())
}

fn run_trial_generic<P: StochasticProblem>(
    problem: &P,
    config: &ExperimentConfig,
    trial: usize,
    metric_fn: Option<&(dyn Fn(&BlockPoint) -> f64 + Sync)>,
) -> Result<(Vec<Row>, Vec<BlockPoint>), CliError> {
    let master = config.experiment.master_seed;
    let x0 = starting_point(
        problem,
        mix(master, &[START_TAG, trial as u64]),
        config.experiment.x0_scale,
    );
    let mut rows = Vec::new();
    let mut finals = Vec::new();
    for (si, spec) in config.solvers.iter().enumerate() {
        let mut solver_config = spec
            .to_solver_config(config.experiment.record_every)
            .map_err(CliError::Config)?;
        solver_config.seed = mix(master, &[RUN_TAG, si as u64, trial as u64]);
        let trace = solvers::run(problem, &x0, &solver_config, metric_fn)
            .map_err(|e| CliError::Runtime(format!("solver `{}`, trial {trial}: {e}", spec.name)))?;
        for rec in &trace.records {
            rows.push(Row {
                trial,
                solver: si,
                epoch: rec.epoch,
                seconds: if config.experiment.record_wall_clock { rec.seconds } else { 0.0 },
                objective: rec.objective,
                metric: rec.metric,
            });
        }
        finals.push(trace.final_point);
    }
    Ok((rows, finals))
}

fn run_trial(
    loader: &Loader,
    config: &ExperimentConfig,
    trial: usize,
) -> Result<TrialOutput, CliError> {
    let master = config.experiment.master_seed;
    let built = loader.build(mix(master, &[DATA_TAG, trial as u64]))?;
    let eval = &config.evaluation;

    let phi_star = if eval.metric == MetricSpec::ObjectiveGap {
        Some(match (eval.phi_star, &built) {
            (PhiStarSpec::Value(v), _) => v,
            (PhiStarSpec::Keyword(PhiStarKeyword::ClosedForm), Built::Ls(p)) => {
                0.5 * p.noise_variance()
            }
            (PhiStarSpec::Keyword(PhiStarKeyword::Solve), Built::Ls(p)) => {
                solve_phi_star(p.as_ref(), eval.phi_star_epochs)?
            }
            (PhiStarSpec::Keyword(PhiStarKeyword::Solve), Built::Logistic(p)) => {
                solve_phi_star(p.as_ref(), eval.phi_star_epochs)?
            }
            (PhiStarSpec::Keyword(PhiStarKeyword::Solve), Built::Tensor(p)) => {
                solve_phi_star(p.as_ref(), eval.phi_star_epochs)?
            }
            (PhiStarSpec::Keyword(PhiStarKeyword::Solve), Built::Bilinear(p)) => {
                solve_phi_star(p.as_ref(), eval.phi_star_epochs)?
            }
            (PhiStarSpec::Keyword(PhiStarKeyword::ClosedForm), _) => unreachable!("preflighted"),
        })
    } else {
        None
    };

    let (rows, finals) = match &built {
        Built::Ls(p) => {
            let metric: Option<BoxedMetric> = match eval.metric {
                MetricSpec::DistanceSquared => {
                    let p = p.clone();
                    Some(Box::new(move |x: &BlockPoint| p.distance_squared_to_truth(x)))
                }
                MetricSpec::ObjectiveGap => {
                    let p = p.clone();
                    let phi = phi_star.unwrap();
                    Some(Box::new(move |x: &BlockPoint| p.objective(x).value() - phi))
                }
                _ => None,
            };
            let (rows, points) =
                run_trial_generic(p.as_ref(), config, trial, metric.as_deref())?;
            let finals = match eval.metric {
                MetricSpec::EmpiricalLoss => {
                    let refs: Vec<&BlockPoint> = points.iter().collect();
                    let mut rng =
                        rng_for(mix(master, &[EVAL_TAG, trial as u64]), stream::EVAL);
                    p.empirical_loss_many(&refs, eval.fresh_samples, &mut rng)
                }
                _ => final_metrics(&rows, &points, metric.as_deref(), config),
            };
            (rows, finals)
        }
        Built::Logistic(p) => {
            let metric: Option<BoxedMetric> = match eval.metric {
                MetricSpec::ObjectiveGap => {
                    let p = p.clone();
                    let phi = phi_star.unwrap();
                    Some(Box::new(move |x: &BlockPoint| p.objective(x).value() - phi))
                }
                _ => None,
            };
            let (rows, points) =
                run_trial_generic(p.as_ref(), config, trial, metric.as_deref())?;
            let finals = final_metrics(&rows, &points, metric.as_deref(), config);
            (rows, finals)
        }
        Built::Tensor(p) => {
            let metric: Option<BoxedMetric> = match eval.metric {
                MetricSpec::RelativeError => {
                    let p = p.clone();
                    Some(Box::new(move |x: &BlockPoint| {
                        p.relative_error(x).expect("nonzero truth")
                    }))
                }
                MetricSpec::ObjectiveGap => {
                    let p = p.clone();
                    let phi = phi_star.unwrap();
                    Some(Box::new(move |x: &BlockPoint| p.objective(x).value() - phi))
                }
                _ => None,
            };
            let (rows, points) =
                run_trial_generic(p.as_ref(), config, trial, metric.as_deref())?;
            let finals = final_metrics(&rows, &points, metric.as_deref(), config);
            (rows, finals)
        }
        Built::Bilinear(p) => {
            let metric: Option<BoxedMetric> = match eval.metric {
                MetricSpec::Accuracy => {
                    let p = p.clone();
                    Some(Box::new(move |x: &BlockPoint| p.accuracy(x)))
                }
                MetricSpec::ObjectiveGap => {
                    let p = p.clone();
                    let phi = phi_star.unwrap();
                    Some(Box::new(move |x: &BlockPoint| p.objective(x).value() - phi))
                }
                _ => None,
            };
            let (rows, points) =
                run_trial_generic(p.as_ref(), config, trial, metric.as_deref())?;
            let finals = final_metrics(&rows, &points, metric.as_deref(), config);
            (rows, finals)
        }
    };
    Ok(TrialOutput { rows, finals })
}

/// Final summary statistic per solver: the metric at the final point when a
/// metric is configured, the final recorded objective otherwise.
fn final_metrics(
    rows: &[Row],
    points: &[BlockPoint],
    metric: Option<&(dyn Fn(&BlockPoint) -> f64 + Sync)>,
    config: &ExperimentConfig,
) -> Vec<f64> {
    match metric {
        Some(f) => points.iter().map(|p| f(p)).collect(),
        None => (0..config.solvers.len())
            .map(|si| {
                rows.iter()
                    .filter(|r| r.solver == si)
                    .last()
                    .map(|r| r.objective)
                    .unwrap_or(f64::NAN)
            })
            .collect(),
    }
}

pub struct ExperimentOutput {
    pub traces_path: PathBuf,
    pub summary_csv_path: PathBuf,
    pub summary_text_path: PathBuf,
    pub summaries: Vec<SolverSummary>,
}

pub fn run_experiment(config: &ExperimentConfig) -> Result<ExperimentOutput, CliError> {
    config.validate().map_err(CliError::Config)?;
    let loader = Loader::from_spec(&config.problem)?;
    preflight(config, &loader)?;

    let trials: Vec<TrialOutput> = (0..config.experiment.trials)
        .into_par_iter()
        .map(|trial| run_trial(&loader, config, trial))
        .collect::<Result<_, _>>()?;

    // Merge in trial order; the parallel collect preserves indices.
    let mut traces = String::from("trial,solver,epoch,seconds,objective,metric\n");
    for out in &trials {
        for row in &out.rows {
            let metric = row.metric.map(fmt_float).unwrap_or_default();
            let _ = writeln!(
                traces,
                "{},{},{},{},{},{}",
                row.trial,
                config.solvers[row.solver].name,
                fmt_float(row.epoch),
                fmt_float(row.seconds),
                fmt_float(row.objective),
                metric
            );
        }
    }

    let summaries: Vec<SolverSummary> = config
        .solvers
        .iter()
        .enumerate()
        .map(|(si, spec)| {
            let finals: Vec<f64> = trials.iter().map(|t| t.finals[si]).collect();
            summarize(&spec.name, &finals)
        })
        .collect();

    let mut summary_csv = String::from("solver,trials,mean,std,min,max\n");
    for s in &summaries {
        let _ = writeln!(
            summary_csv,
            "{},{},{},{},{},{}",
            s.name,
            s.trials,
            fmt_float(s.mean),
            fmt_float(s.std),
            fmt_float(s.min),
            fmt_float(s.max)
        );
    }

    let prefix = &config.experiment.output_prefix;
    if let Some(parent) = prefix.parent() {
        if !parent.as_os_str().is_empty() {
            std::fs::create_dir_all(parent)
                .map_err(|e| CliError::Runtime(format!("cannot create output directory: {e}")))?;
        }
    }
    let traces_path = with_suffix(prefix, "_traces.csv");
    let summary_csv_path = with_suffix(prefix, "_summary.csv");
    let summary_text_path = with_suffix(prefix, "_summary.txt");
    let text = render_summary_table(&summaries);
    std::fs::write(&traces_path, traces)
        .map_err(|e| CliError::Runtime(format!("cannot write traces: {e}")))?;
    std::fs::write(&summary_csv_path, summary_csv)
        .map_err(|e| CliError::Runtime(format!("cannot write summary: {e}")))?;
    std::fs::write(&summary_text_path, &text)
        .map_err(|e| CliError::Runtime(format!("cannot write summary: {e}")))?;

    Ok(ExperimentOutput { traces_path, summary_csv_path, summary_text_path, summaries })
}

pub fn render_summary_table(summaries: &[SolverSummary]) -> String {
    let name_width = summaries.iter().map(|s| s.name.len()).max().unwrap_or(6).max(6);
    let mut out = format!(
        "{:<name_width$}  {:>6}  {:>13}  {:>13}  {:>13}  {:>13}\n",
        "solver", "trials", "mean", "std", "min", "max"
    );
    for s in summaries {
        let _ = writeln!(
            out,
            "{:<name_width$}  {:>6}  {:>13.6e}  {:>13.6e}  {:>13.6e}  {:>13.6e}",
            s.name, s.trials, s.mean, s.std, s.min, s.max
        );
    }
    out
}

fn with_suffix(prefix: &Path, suffix: &str) -> PathBuf {
    let mut name = prefix.file_name().map(|s| s.to_os_string()).unwrap_or_default();
    name.push(suffix);
    prefix.with_file_name(name)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn summary_of_two_trials() {
        let s = summarize("x", &[1.0, 3.0]);
        assert_eq!(s.mean, 2.0);
        assert!((s.std - std::f64::consts::SQRT_2).abs() < 1e-15);
        assert_eq!(s.min, 1.0);
        assert_eq!(s.max, 3.0);
    }

    #[test]
    fn summary_of_single_trial_has_zero_std() {
        let s = summarize("x", &[4.5]);
        assert_eq!(s.mean, 4.5);
        assert_eq!(s.std, 0.0);
    }

    #[test]
    fn float_format_round_trips() {
        for v in [0.005, 1.0 / 3.0, 6.02e23, -1.25e-300] {
            assert_eq!(fmt_float(v).parse::<f64>().unwrap(), v);
        }
    }

    #[test]
    fn suffix_handles_directories() {
        assert_eq!(
            with_suffix(Path::new("out/run1"), "_traces.csv"),
            PathBuf::from("out/run1_traces.csv")
        );
    }
}
