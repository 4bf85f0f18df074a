//! End-to-end runs: target-state determination and pathway recovery.

use std::time::Instant;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Uniform};
use serde::{Deserialize, Serialize};

use super::config::{Estimator, RunConfig, TargetSpec, ThetaStart};
use super::instance::{generate_instance, sample_training_set, simulate_point, Instance, TrainingSample};
use crate::circuit::{build_state_from_zero, measure, sampled_objective, GateParameterVector};
use crate::error::{Error, Result};
use crate::kernel::{kernel_matrix, KernelFunction, KernelModel};
use crate::pathway::{decode_element, decompose_objective, DecodedPathway, PathwayElement};
use crate::preimage::{ExtremumDiagnostic, PreImageProblem, PreImageResult, Termination};
use crate::regression::{
    decompose_theta, fit_chi, target_theta, FitMethod, KernelFitInput, RegressionModel, RegressionSample,
};

pub const REPORT_SCHEMA: u32 = 1;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum RunMode {
    DetermineState,
    Pathway,
    Full,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct InstanceSummary {
    pub vertices: usize,
    pub edges: Vec<(usize, usize)>,
    pub weights: Vec<f64>,
    pub gates: usize,
    pub parameters: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrainingSummary {
    pub samples: usize,
    pub value_min: f64,
    pub value_max: f64,
    /// `max_i |Σ_e Ω_e − f_i|`.
    pub additivity_error: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RatioRow {
    pub delta: f64,
    pub f_star: f64,
    pub f_sim: f64,
    pub gap: f64,
    /// `gap / Δf²`.
    pub scaled_gap: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RatioTest {
    pub rows: Vec<RatioRow>,
    /// `max/min` of `scaled_gap` over the rows.
    pub spread: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StateReport {
    pub model: RegressionModel<f64>,
    pub theta0: Vec<f64>,
    pub f0: f64,
    /// Exact `f₀` when the configured estimator samples.
    pub f0_exact: f64,
    pub f_star: f64,
    pub theta_star: Vec<f64>,
    pub f_component: Vec<f64>,
    pub null_component: Vec<f64>,
    /// `max_j |F(θ₀)_j + F(U)_j − θ₀_j|`.
    pub split_residual: f64,
    /// `χᵀF(U)`.
    pub null_residual: f64,
    /// `χᵀθ* − f*`.
    pub target_residual: f64,
    /// `|sin ∠(θ* − θ₀, χ)|`; zero when `θ* = θ₀`.
    pub parallel_sine: f64,
    pub f_sim: f64,
    pub f_sim_exact: f64,
    /// `|f_sim − f*|`.
    pub gap: f64,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub ratio_test: Option<RatioTest>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EdgeComparison {
    pub edge: (usize, usize),
    pub omega_star: f64,
    pub omega_sim: f64,
    pub deviation: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PathwayReport {
    pub kernel: KernelFunction<f64>,
    pub positive_components: usize,
    pub retained_components: usize,
    /// Retained `λ_k`.
    pub eigenvalues: Vec<f64>,
    pub anchor: Vec<f64>,
    pub beta: Vec<f64>,
    pub preimage: PreImageResult<f64>,
    pub distance_monotone: bool,
    pub decoded: DecodedPathway<f64>,
    pub kappa_exact: bool,
    pub comparison: Vec<EdgeComparison>,
    pub max_deviation: f64,
    pub extremum: ExtremumDiagnostic<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunReport {
    pub schema: u32,
    pub mode: RunMode,
    pub config: RunConfig,
    pub instance: InstanceSummary,
    pub training: TrainingSummary,
    pub state: StateReport,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub pathway: Option<PathwayReport>,
}

impl RunReport {
    /// Exit-worthy numerical failure of the pre-image stage.
    pub fn numerical_failure(&self) -> Option<Termination> {
        self.pathway
            .as_ref()
            .map(|p| p.preimage.termination)
            .filter(|t| matches!(t, Termination::DenominatorCollapse | Termination::NonFinite))
    }
}

/// Wall-clock per stage, kept out of the report so reports stay reproducible.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct Timings {
    pub instance_s: f64,
    pub training_s: f64,
    pub state_s: f64,
    pub pathway_s: f64,
    pub total_s: f64,
}

pub struct Prepared {
    pub instance: Instance,
    pub training: Vec<TrainingSample>,
}

pub fn prepare(config: &RunConfig, timings: &mut Timings) -> Result<Prepared> {
    let t = Instant::now();
    let instance = generate_instance(&config.instance, &config.circuit)?;
    timings.instance_s = t.elapsed().as_secs_f64();
    let t = Instant::now();
    let training = sample_training_set(&instance, &config.training)?;
    timings.training_s = t.elapsed().as_secs_f64();
    Ok(Prepared { instance, training })
}

fn summarize(instance: &Instance, training: &[TrainingSample]) -> (InstanceSummary, TrainingSummary) {
    let m = instance.graph().edge_count();
    let inst = InstanceSummary {
        vertices: instance.graph().vertex_count(),
        edges: instance.graph().edges().to_vec(),
        weights: instance.objective.terms().iter().map(|t| t.weight).collect(),
        gates: instance.circuit.len(),
        parameters: instance.circuit.parameter_count(),
    };
    let tr = TrainingSummary {
        samples: training.len(),
        value_min: training.iter().map(|s| s.value).fold(f64::INFINITY, f64::min),
        value_max: training.iter().map(|s| s.value).fold(f64::NEG_INFINITY, f64::max),
        additivity_error: training
            .iter()
            .map(|s| (s.element[m..].iter().sum::<f64>() - s.value).abs())
            .fold(0.0, f64::max),
    };
    (inst, tr)
}

/// `(estimate, exact)` of `f(θ)`.
pub fn evaluate(instance: &Instance, theta: &[f64], estimator: Estimator) -> Result<(f64, f64)> {
    let state = build_state_from_zero(&instance.circuit, &GateParameterVector::new(theta.to_vec())?)?;
    let exact = crate::circuit::objective_value(&state, &instance.objective)?;
    let estimate = match estimator {
        Estimator::Exact => exact,
        Estimator::Sampled { shots, seed } => sampled_objective(&measure(&state, shots, seed)?, &instance.objective),
    };
    Ok((estimate, exact))
}

fn initial_theta(config: &RunConfig, len: usize) -> Result<Vec<f64>> {
    match &config.state.theta0 {
        ThetaStart::Zero => Ok(vec![0.0; len]),
        ThetaStart::Random { seed } => {
            let mut rng = ChaCha8Rng::seed_from_u64(*seed);
            let d = Uniform::new(0.0, std::f64::consts::TAU).expect("valid range");
            Ok((0..len).map(|_| d.sample(&mut rng)).collect())
        }
        ThetaStart::Supplied { values } => {
            if values.len() != len {
                return Err(Error::Config(format!(
                    "state.theta0 has {} values, circuit has {len} parameters",
                    values.len()
                )));
            }
            Ok(values.clone())
        }
    }
}

/// Kernel model over the training elements, honoring the centering hook.
pub fn fit_kernel_model(config: &RunConfig, training: &[TrainingSample]) -> Result<KernelModel<f64>> {
    let points: Vec<Vec<f64>> = training.iter().map(|s| s.element.clone()).collect();
    let kernel = config.kernel.build(&points)?;
    let retention = config.kernel.retain.to_retention();
    if !config.debug.corrupt_centering {
        return KernelModel::fit(points, kernel, retention);
    }
    let gram = kernel_matrix(&points, &kernel)?;
    let centered = corrupt_center(&gram);
    KernelModel::from_parts(points, kernel, gram, centered, retention)
}

/// `K − JK − KJ + JKJ` with the unscaled all-ones `J`.
fn corrupt_center(k: &nalgebra::DMatrix<f64>) -> nalgebra::DMatrix<f64> {
    let n = k.nrows();
    let j = nalgebra::DMatrix::<f64>::from_element(n, n, 1.0);
    let out = k - &j * k - k * &j + &j * k * &j;
    // keep it symmetric so only the centering property breaks
    (&out + out.transpose()) * 0.5
}

fn fit_regression(
    config: &RunConfig,
    prepared: &Prepared,
    theta0: &[f64],
    f0: f64,
    anchor: &[f64],
) -> Result<RegressionModel<f64>> {
    match config.state.method {
        FitMethod::MinNormSingle => fit_chi(
            &[RegressionSample::new(theta0.to_vec(), f0)],
            FitMethod::MinNormSingle,
            None,
        ),
        FitMethod::LeastSquaresBatch => {
            let samples: Vec<_> = prepared
                .training
                .iter()
                .map(|s| RegressionSample::new(s.theta.clone(), s.value))
                .collect();
            fit_chi(&samples, FitMethod::LeastSquaresBatch, None)
        }
        FitMethod::KernelCoefficients => {
            let model = fit_kernel_model(config, &prepared.training)?;
            fit_chi(
                &[RegressionSample::new(theta0.to_vec(), f0)],
                FitMethod::KernelCoefficients,
                Some(KernelFitInput { model: &model, anchor }),
            )
        }
    }
}

fn sine_between(a: &[f64], b: &[f64]) -> f64 {
    let na = a.iter().map(|v| v * v).sum::<f64>().sqrt();
    let nb = b.iter().map(|v| v * v).sum::<f64>().sqrt();
    if na == 0.0 || nb == 0.0 {
        return 0.0;
    }
    // rejection of a from b; stays accurate for nearly parallel vectors
    let along = a.iter().zip(b).map(|(x, y)| x * y).sum::<f64>() / nb;
    let reject = a
        .iter()
        .zip(b)
        .map(|(x, y)| (x - along * y / nb).powi(2))
        .sum::<f64>()
        .sqrt();
    reject / na
}

pub fn run_state_determination(config: &RunConfig, prepared: &Prepared, with_ratio: bool) -> Result<StateReport> {
    let instance = &prepared.instance;
    let theta0 = initial_theta(config, instance.circuit.parameter_count())?;
    let (f0, f0_exact) = evaluate(instance, &theta0, config.state.estimator)?;
    let (_, anchor) = simulate_point(instance, &theta0)?;
    let f_star = match config.state.target {
        TargetSpec::Absolute { value } => value,
        TargetSpec::Step { delta } => f0 + delta,
    };
    let model = fit_regression(config, prepared, &theta0, f0, &anchor)?;
    let split = decompose_theta(&theta0, &model, f0)?;
    let theta_star = target_theta(&theta0, &model, f0, f_star)?;
    let split_residual = theta0
        .iter()
        .enumerate()
        .map(|(j, t)| (split.f_component[j] + split.null_component[j] - t).abs())
        .fold(0.0, f64::max);
    let null_residual = model.predict(&split.null_component);
    let target_residual = model.predict(&theta_star) - f_star;
    let step: Vec<f64> = theta_star.iter().zip(&theta0).map(|(a, b)| a - b).collect();
    let parallel_sine = sine_between(&step, &model.chi);
    let (f_sim, f_sim_exact) = evaluate(instance, &theta_star, config.state.estimator)?;

    let ratio_test = if with_ratio && !config.state.ratio_steps.is_empty() {
        let mut rows = Vec::new();
        for &delta in &config.state.ratio_steps {
            let fs = f0 + delta;
            let th = target_theta(&theta0, &model, f0, fs)?;
            let (sim, _) = evaluate(instance, &th, config.state.estimator)?;
            let gap = (sim - fs).abs();
            rows.push(RatioRow {
                delta,
                f_star: fs,
                f_sim: sim,
                gap,
                scaled_gap: gap / (delta * delta),
            });
        }
        let max = rows.iter().map(|r| r.scaled_gap).fold(f64::NEG_INFINITY, f64::max);
        let min = rows.iter().map(|r| r.scaled_gap).fold(f64::INFINITY, f64::min);
        Some(RatioTest { rows, spread: max / min })
    } else {
        None
    };

    Ok(StateReport {
        model,
        theta0,
        f0,
        f0_exact,
        f_star,
        theta_star,
        f_component: split.f_component,
        null_component: split.null_component,
        split_residual,
        null_residual,
        target_residual,
        parallel_sine,
        f_sim,
        f_sim_exact,
        gap: (f_sim - f_star).abs(),
        ratio_test,
    })
}

pub fn run_pathway(config: &RunConfig, prepared: &Prepared, state: &StateReport) -> Result<PathwayReport> {
    let instance = &prepared.instance;
    let model = fit_kernel_model(config, &prepared.training)?;
    let (_, anchor) = simulate_point(instance, &state.theta0)?;
    let problem = PreImageProblem::new(&model, &anchor)?;
    let result = problem.solve(&config.preimage.to_config())?;
    let extremum = problem.extremum_check(&result.solution, result.phi)?;
    let decoded = decode_element(&PathwayElement::from_input_vector(&result.solution)?)?;
    let m = instance.graph().edge_count();
    let kappa_exact = decoded.edge_indices.iter().copied().eq(0..m);

    let at_target = build_state_from_zero(
        &instance.circuit,
        &GateParameterVector::new(state.theta_star.clone())?,
    )?;
    let omega_sim = decompose_objective(&at_target, &instance.objective)?;
    let comparison: Vec<EdgeComparison> = instance
        .graph()
        .edges()
        .iter()
        .zip(decoded.omega.iter().zip(&omega_sim))
        .map(|(&edge, (&omega_star, &omega_sim))| EdgeComparison {
            edge,
            omega_star,
            omega_sim,
            deviation: (omega_star - omega_sim).abs(),
        })
        .collect();
    let max_deviation = comparison.iter().map(|c| c.deviation).fold(0.0, f64::max);

    Ok(PathwayReport {
        kernel: *model.kernel(),
        positive_components: model.positive_count(),
        retained_components: model.retained(),
        eigenvalues: model.eigenpairs()[..model.retained()].iter().map(|p| p.eigenvalue).collect(),
        anchor,
        beta: problem.projection().beta.clone(),
        distance_monotone: result.distance_monotone(),
        preimage: result,
        decoded,
        kappa_exact,
        comparison,
        max_deviation,
        extremum,
    })
}

/// Runs the stages selected by `mode`.
pub fn execute(config: &RunConfig, mode: RunMode) -> Result<(RunReport, Timings)> {
    let start = Instant::now();
    let mut timings = Timings::default();
    let prepared = prepare(config, &mut timings)?;
    let t = Instant::now();
    let state = run_state_determination(config, &prepared, mode != RunMode::Pathway)?;
    timings.state_s = t.elapsed().as_secs_f64();
    let pathway = if mode == RunMode::DetermineState {
        None
    } else {
        let t = Instant::now();
        let p = run_pathway(config, &prepared, &state)?;
        timings.pathway_s = t.elapsed().as_secs_f64();
        Some(p)
    };
    let (instance, training) = summarize(&prepared.instance, &prepared.training);
    timings.total_s = start.elapsed().as_secs_f64();
    Ok((
        RunReport {
            schema: REPORT_SCHEMA,
            mode,
            config: config.clone(),
            instance,
            training,
            state,
            pathway,
        },
        timings,
    ))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn small() -> RunConfig {
        let mut c = RunConfig::default();
        c.instance.size = 3;
        c.training.samples = 30;
        c
    }

    #[test]
    fn target_equal_to_start_stays_put() {
        let mut c = small();
        c.state.target = TargetSpec::Step { delta: 0.0 };
        let (r, _) = execute(&c, RunMode::DetermineState).unwrap();
        assert_eq!(r.state.theta_star, r.state.theta0);
        assert_eq!(r.state.gap, 0.0);
    }

    #[test]
    fn zero_start_gives_zero_objective() {
        let (r, _) = execute(&small(), RunMode::DetermineState).unwrap();
        assert_eq!(r.state.f0, 0.0);
        assert!(r.state.target_residual.abs() < 1e-10);
        assert!(r.state.parallel_sine < 1e-10);
    }

    #[test]
    fn huge_phi_returns_anchor_pathway() {
        let mut c = small();
        c.preimage.phi = 1e12;
        let (r, _) = execute(&c, RunMode::Full).unwrap();
        let p = r.pathway.unwrap();
        assert!(p.kappa_exact);
        assert!((p.decoded.total - r.state.f0).abs() < 1e-6);
    }

    #[test]
    fn min_norm_needs_nonzero_start() {
        let mut c = small();
        c.state.method = FitMethod::MinNormSingle;
        assert!(matches!(execute(&c, RunMode::DetermineState), Err(Error::DegenerateFit(_))));
        c.state.theta0 = ThetaStart::Random { seed: 4 };
        let (r, _) = execute(&c, RunMode::DetermineState).unwrap();
        assert!(r.state.null_residual.abs() < 1e-10);
    }

    #[test]
    fn supplied_start_length_checked() {
        let mut c = small();
        c.state.theta0 = ThetaStart::Supplied { values: vec![0.1] };
        assert!(matches!(execute(&c, RunMode::DetermineState), Err(Error::Config(_))));
    }

    #[test]
    fn sampled_estimator_reports_both() {
        let mut c = small();
        c.state.theta0 = ThetaStart::Random { seed: 5 };
        c.state.estimator = Estimator::Sampled { shots: 20000, seed: 1 };
        let (r, _) = execute(&c, RunMode::DetermineState).unwrap();
        assert!((r.state.f0 - r.state.f0_exact).abs() < 0.1);
        assert_ne!(r.state.f0, r.state.f0_exact);
    }
}
