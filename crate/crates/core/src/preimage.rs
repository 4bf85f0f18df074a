//! Pre-image of a kernel-PCA projection: find `Υ*` in input space whose
//! feature map is closest to the projection `𝒫(τ₀)` of an anchor `Υ₀`,
//! regularized toward the anchor by `Φ‖Υ* − Υ₀‖²`.
//!
//! The objective (constants dropped) is
//!
//! ```text
//! f_d(x) = K̃(x,x) − 2 Σ_i ℓ_i K̃(x,Υ_i) + Φ (xᵀx − 2 xᵀΥ₀)
//! ```
//!
//! Expanding the centered evaluations, the cross term becomes
//! `−2 Σ_i γ_i K(x,Υ_i)` with `γ_i = ℓ_i + (1 − Σℓ)/N`. Setting the gradient
//! to zero gives the fixed-point update used by [`PreImageProblem::iterate_once`]:
//!
//! ```text
//! x ← (Σ_i γ_i w_i(x) Υ_i + Φ Υ₀) / (s(x) + Φ)
//! ```
//!
//! rbf: `w_i = K(x,Υ_i)/σ²`, `s = Σ_i γ_i w_i`.
//! polynomial: `w_i = ∂K/∂⟨x,Υ_i⟩`, `s = ∂K/∂⟨x,x⟩` at `(x, x)`.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::kernel::{KernelFunction, KernelModel, Projection};
use crate::scalar::{dist_sq, dot, from_usize, lit, norm_sq, Real};

/// Denominators at or below this abort the iteration.
pub const DENOMINATOR_FLOOR: f64 = 1e-12;
/// An anchor whose every `|β_k|` is at or below this has no projection.
pub const PROJECTION_FLOOR: f64 = 1e-12;
pub const MAX_RESTARTS: usize = 3;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case")]
pub enum RestartPolicy<T> {
    None,
    /// Restart from `Υ₀ + scale·N(0, I)`.
    Perturb { scale: T },
    /// Restart from `Υ₀` with `Φ ← Φ·factor` (or `10⁻³·max|K|` when `Φ = 0`).
    GrowPhi { factor: T },
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PreImageConfig<T> {
    pub phi: T,
    pub max_iterations: usize,
    /// Exit once `‖Υ_r − Υ_{r−1}‖ ≤ tol`.
    pub tol: T,
    pub restart: RestartPolicy<T>,
    pub seed: u64,
}

impl<T: Real> Default for PreImageConfig<T> {
    fn default() -> Self {
        PreImageConfig {
            phi: T::zero(),
            max_iterations: 500,
            tol: lit(1e-8),
            restart: RestartPolicy::GrowPhi { factor: lit(10.0) },
            seed: 0,
        }
    }
}

impl<T: Real> PreImageConfig<T> {
    pub fn validate(&self) -> Result<()> {
        if !(self.phi >= T::zero()) || !self.phi.is_finite() {
            return Err(Error::InvalidInput("Φ must be finite and >= 0".into()));
        }
        if self.max_iterations == 0 {
            return Err(Error::InvalidInput("max_iterations must be >= 1".into()));
        }
        if !(self.tol > T::zero()) {
            return Err(Error::InvalidInput("tol must be > 0".into()));
        }
        match self.restart {
            RestartPolicy::Perturb { scale } if !(scale > T::zero()) => {
                Err(Error::InvalidInput("perturb scale must be > 0".into()))
            }
            RestartPolicy::GrowPhi { factor } if !(factor > T::one()) => {
                Err(Error::InvalidInput("grow-phi factor must be > 1".into()))
            }
            _ => Ok(()),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Termination {
    Converged,
    MaxIterations,
    DenominatorCollapse,
    NonFinite,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PreImageResult<T> {
    pub solution: Vec<T>,
    pub iterations_used: usize,
    pub converged: bool,
    pub termination: Termination,
    pub restarts: usize,
    /// `Φ` in force when the run ended.
    pub phi: T,
    pub gradient_norm_at_solution: T,
    /// `f_d(Υ_r)` per iteration.
    pub distance_trace: Vec<T>,
    /// `‖Υ_r − Υ_{r−1}‖` per iteration.
    pub step_trace: Vec<T>,
    /// `s(Υ_{r−1}) + Φ` per iteration.
    pub denominator_trace: Vec<T>,
    /// Whether every pull weight `γ_i w_i` was non-negative at that step,
    /// i.e. the update was a convex combination of training points and `Υ₀`.
    pub convex_trace: Vec<bool>,
}

impl<T: Real> PreImageResult<T> {
    /// True when the distance never increased along the trace.
    pub fn distance_monotone(&self) -> bool {
        self.distance_trace.windows(2).all(|w| w[1] <= w[0])
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExtremumDiagnostic<T> {
    /// `ε = Σ_i σ_i Υ_i / Σ_j σ_j`.
    pub epsilon: Vec<T>,
    pub sigma: Vec<T>,
    pub gradient_norm_at_extremum: T,
    /// `‖ε − Υ*‖`.
    pub distance_to_solution: T,
    pub fixed_point_iterations: usize,
    /// Set when `|Σσ|` fell below `1e-12`.
    pub inconclusive: bool,
}

/// One update of the fixed-point map.
#[derive(Debug, Clone, PartialEq)]
pub struct Step<T> {
    pub next: Vec<T>,
    pub denominator: T,
    pub convex: bool,
}

/// A fitted kernel model plus the anchor `Υ₀` and its projection.
#[derive(Debug, Clone)]
pub struct PreImageProblem<'a, T: Real> {
    model: &'a KernelModel<T>,
    anchor: Vec<T>,
    projection: Projection<T>,
    gamma: Vec<T>,
    /// False when `γ` was supplied directly; the distance is then evaluated
    /// in uncentered form `K(x,x) − 2 Σ_i γ_i K(x,Υ_i)`.
    from_projection: bool,
}

impl<'a, T: Real> PreImageProblem<'a, T> {
    /// Projects `anchor` onto the model's retained components.
    pub fn new(model: &'a KernelModel<T>, anchor: &[T]) -> Result<Self> {
        let projection = model.project(anchor)?;
        let floor = lit::<T>(PROJECTION_FLOOR);
        if projection.beta.iter().all(|b| b.abs() <= floor) {
            return Err(Error::ProjectionZero);
        }
        let gamma = reconstruction_coefficients(&projection.ell);
        Ok(PreImageProblem {
            model,
            anchor: anchor.to_vec(),
            projection,
            gamma,
            from_projection: true,
        })
    }

    /// Uses explicit expansion coefficients `γ` for the target feature-space
    /// element `Σ_i γ_i Γ(Υ_i)` instead of the anchor's projection.
    pub fn with_coefficients(model: &'a KernelModel<T>, anchor: &[T], gamma: Vec<T>) -> Result<Self> {
        if gamma.len() != model.training_len() {
            return Err(Error::dim("expansion coefficients", model.training_len(), gamma.len()));
        }
        let projection = model.project(anchor)?;
        Ok(PreImageProblem {
            model,
            anchor: anchor.to_vec(),
            projection,
            gamma,
            from_projection: false,
        })
    }

    pub fn anchor(&self) -> &[T] {
        &self.anchor
    }

    pub fn projection(&self) -> &Projection<T> {
        &self.projection
    }

    /// `γ_i = ℓ_i + (1 − Σℓ)/N`.
    pub fn coefficients(&self) -> &[T] {
        &self.gamma
    }

    fn check(&self, x: &[T]) -> Result<()> {
        if x.len() != self.anchor.len() {
            return Err(Error::dim("pre-image input length", self.anchor.len(), x.len()));
        }
        Ok(())
    }

    /// `f_d(x)` with constant terms dropped.
    pub fn distance(&self, x: &[T], phi: T) -> Result<T> {
        self.check(x)?;
        let two = lit::<T>(2.0);
        let regularizer = phi * (norm_sq(x) - two * dot(x, &self.anchor));
        if !self.from_projection {
            let k = self.model.kernel_vector(x)?;
            return Ok(self.model.kernel().eval(x, x) - two * dot(&self.gamma, &k) + regularizer);
        }
        let centered = self.model.centered_kernel_vector(x)?;
        let self_term = self.model.centered_self_kernel(x)?;
        Ok(self_term - two * dot(&self.projection.ell, &centered) + regularizer)
    }

    /// `∇f_d(x) = ∇K(x,x) − 2 Σ_i γ_i ∇K(x,Υ_i) + 2Φ(x − Υ₀)`.
    pub fn gradient(&self, x: &[T], phi: T) -> Result<Vec<T>> {
        self.check(x)?;
        let kernel = self.model.kernel();
        let two = lit::<T>(2.0);
        let mut g = kernel.self_gradient(x);
        for (t, &c) in self.model.training().iter().zip(&self.gamma) {
            let gk = kernel.gradient_first(x, t);
            for (gi, v) in g.iter_mut().zip(gk) {
                *gi -= two * c * v;
            }
        }
        for ((gi, &xi), &ai) in g.iter_mut().zip(x).zip(&self.anchor) {
            *gi += two * phi * (xi - ai);
        }
        Ok(g)
    }

    /// `(γ_i w_i(x), s(x))`.
    fn pull_weights(&self, x: &[T]) -> (Vec<T>, T) {
        let kernel = self.model.kernel();
        match *kernel {
            KernelFunction::Rbf { sigma } => {
                let inv = T::one() / (sigma * sigma);
                let w: Vec<T> = self
                    .model
                    .training()
                    .iter()
                    .zip(&self.gamma)
                    .map(|(t, &c)| c * kernel.eval(x, t) * inv)
                    .collect();
                let s = w.iter().fold(T::zero(), |a, &b| a + b);
                (w, s)
            }
            KernelFunction::Polynomial { .. } => {
                let w = self
                    .model
                    .training()
                    .iter()
                    .zip(&self.gamma)
                    .map(|(t, &c)| c * kernel.derivative(x, t))
                    .collect();
                (w, kernel.derivative(x, x))
            }
        }
    }

    /// One fixed-point update from `prev`.
    pub fn iterate_once(&self, prev: &[T], phi: T) -> Result<Step<T>> {
        self.check(prev)?;
        let (w, s) = self.pull_weights(prev);
        let denominator = s + phi;
        if !(denominator > lit(DENOMINATOR_FLOOR)) {
            return Err(Error::DenominatorCollapse {
                iteration: 0,
                value: denominator.to_f64().unwrap_or(f64::NAN),
            });
        }
        let mut next: Vec<T> = self.anchor.iter().map(|&a| phi * a).collect();
        for (t, &wi) in self.model.training().iter().zip(&w) {
            for (n, &v) in next.iter_mut().zip(t) {
                *n += wi * v;
            }
        }
        next.iter_mut().for_each(|v| *v /= denominator);
        let convex = w.iter().all(|&v| v >= T::zero());
        Ok(Step {
            next,
            denominator,
            convex,
        })
    }

    /// Runs the fixed-point iteration from `Υ₀`.
    pub fn solve(&self, config: &PreImageConfig<T>) -> Result<PreImageResult<T>> {
        config.validate()?;
        let mut phi = config.phi;
        let mut start = self.anchor.clone();
        let mut restarts = 0;
        let mut distance_trace = Vec::new();
        let mut step_trace = Vec::new();
        let mut denominator_trace = Vec::new();
        let mut convex_trace = Vec::new();

        let (solution, termination) = 'attempts: loop {
            let mut x = start.clone();
            let mut termination = Termination::MaxIterations;
            for _ in 0..config.max_iterations {
                let step = match self.iterate_once(&x, phi) {
                    Ok(step) => step,
                    Err(Error::DenominatorCollapse { .. }) => {
                        termination = Termination::DenominatorCollapse;
                        break;
                    }
                    Err(e) => return Err(e),
                };
                if !step.next.iter().all(|v| v.is_finite()) {
                    termination = Termination::NonFinite;
                    break;
                }
                let step_norm = dist_sq(&step.next, &x).sqrt();
                x = step.next;
                distance_trace.push(self.distance(&x, phi)?);
                step_trace.push(step_norm);
                denominator_trace.push(step.denominator);
                convex_trace.push(step.convex);
                if step_norm <= config.tol {
                    termination = Termination::Converged;
                    break;
                }
            }
            if termination != Termination::DenominatorCollapse || restarts >= MAX_RESTARTS {
                break 'attempts (x, termination);
            }
            match config.restart {
                RestartPolicy::None => break 'attempts (x, termination),
                RestartPolicy::GrowPhi { factor } => {
                    phi = if phi > T::zero() {
                        phi * factor
                    } else {
                        lit::<T>(1e-3) * self.model.max_abs_gram()
                    };
                    start = self.anchor.clone();
                }
                RestartPolicy::Perturb { scale } => {
                    let mut rng = ChaCha8Rng::seed_from_u64(config.seed.wrapping_add(restarts as u64));
                    start = self
                        .anchor
                        .iter()
                        .map(|&a| {
                            let z: f64 = StandardNormal.sample(&mut rng);
                            a + scale * lit::<T>(z)
                        })
                        .collect();
                }
            }
            restarts += 1;
        };

        let gradient_norm_at_solution = if solution.iter().all(|v| v.is_finite()) {
            norm_sq(&self.gradient(&solution, phi)?).sqrt()
        } else {
            lit::<T>(f64::NAN)
        };
        Ok(PreImageResult {
            solution,
            iterations_used: step_trace.len(),
            converged: termination == Termination::Converged,
            termination,
            restarts,
            phi,
            gradient_norm_at_solution,
            distance_trace,
            step_trace,
            denominator_trace,
            convex_trace,
        })
    }

    /// Locates the weighted-mean extremum `ε(Υ*)` by fixed-point evaluation
    /// seeded at `solution`. Purely diagnostic.
    pub fn extremum_check(&self, solution: &[T], phi: T) -> Result<ExtremumDiagnostic<T>> {
        self.check(solution)?;
        let floor = lit::<T>(DENOMINATOR_FLOOR);
        let mut eps = solution.to_vec();
        let mut sigma = self.pull_weights(&eps).0;
        let mut iterations = 0;
        let mut inconclusive = false;
        for _ in 0..200 {
            let total = sigma.iter().fold(T::zero(), |a, &b| a + b);
            if total.abs() < floor {
                inconclusive = true;
                break;
            }
            let next = weighted_mean(self.model.training(), &sigma, total);
            iterations += 1;
            let moved = dist_sq(&next, &eps).sqrt();
            eps = next;
            sigma = self.pull_weights(&eps).0;
            if moved <= lit::<T>(1e-13) * (T::one() + norm_sq(&eps).sqrt()) {
                break;
            }
        }
        let gradient_norm_at_extremum = norm_sq(&self.gradient(&eps, phi)?).sqrt();
        Ok(ExtremumDiagnostic {
            distance_to_solution: dist_sq(&eps, solution).sqrt(),
            epsilon: eps,
            sigma,
            gradient_norm_at_extremum,
            fixed_point_iterations: iterations,
            inconclusive,
        })
    }
}

fn weighted_mean<T: Real>(points: &[Vec<T>], weights: &[T], total: T) -> Vec<T> {
    let mut out = vec![T::zero(); points[0].len()];
    for (p, &w) in points.iter().zip(weights) {
        for (o, &v) in out.iter_mut().zip(p) {
            *o += w * v;
        }
    }
    out.iter_mut().for_each(|v| *v /= total);
    out
}

/// `γ_i = ℓ_i + (1 − Σ_j ℓ_j)/N`: coefficients of `μ + 𝒫(τ₀)` over the
/// uncentered feature maps `Γ(Υ_i)`.
pub fn reconstruction_coefficients<T: Real>(ell: &[T]) -> Vec<T> {
    let n = from_usize::<T>(ell.len());
    let shift = (T::one() - ell.iter().fold(T::zero(), |a, &b| a + b)) / n;
    ell.iter().map(|&l| l + shift).collect()
}

pub fn distance<T: Real>(x: &[T], model: &KernelModel<T>, anchor: &[T], phi: T) -> Result<T> {
    PreImageProblem::new(model, anchor)?.distance(x, phi)
}

pub fn gradient<T: Real>(x: &[T], model: &KernelModel<T>, anchor: &[T], phi: T) -> Result<Vec<T>> {
    PreImageProblem::new(model, anchor)?.gradient(x, phi)
}

pub fn iterate_once<T: Real>(prev: &[T], model: &KernelModel<T>, anchor: &[T], phi: T) -> Result<Vec<T>> {
    Ok(PreImageProblem::new(model, anchor)?.iterate_once(prev, phi)?.next)
}

pub fn solve_preimage<T: Real>(
    model: &KernelModel<T>,
    anchor: &[T],
    config: &PreImageConfig<T>,
) -> Result<PreImageResult<T>> {
    PreImageProblem::new(model, anchor)?.solve(config)
}

pub fn extremum_check<T: Real>(
    result: &PreImageResult<T>,
    model: &KernelModel<T>,
    anchor: &[T],
    phi: T,
) -> Result<ExtremumDiagnostic<T>> {
    PreImageProblem::new(model, anchor)?.extremum_check(&result.solution, phi)
}
