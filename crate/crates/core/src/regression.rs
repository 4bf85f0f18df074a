//! Linear regression model `f(θ) ≈ θᵀχ` and the target-parameter update
//! `θ* = θ₀ + χ⁺(f* − f₀)`.

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::kernel::KernelModel;
use crate::scalar::{all_finite, dot, from_usize, lit, norm_sq, Real};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum FitMethod {
    /// `χ = θ₀·f₀/‖θ₀‖²` from a single sample.
    MinNormSingle,
    /// `χ = Θ⁺f` over a batch, via SVD.
    LeastSquaresBatch,
    /// `χ_j = Σ_i α_i^j K̃(Υ₀, Υ_i)` from a fitted kernel model.
    KernelCoefficients,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RegressionSample<T> {
    pub theta: Vec<T>,
    pub value: T,
}

impl<T> RegressionSample<T> {
    pub fn new(theta: Vec<T>, value: T) -> Self {
        RegressionSample { theta, value }
    }
}

/// Kernel inputs for [`FitMethod::KernelCoefficients`].
pub struct KernelFitInput<'a, T: Real> {
    pub model: &'a KernelModel<T>,
    /// Point the coefficients are evaluated at (stands in for the unknown `Υ*`).
    pub anchor: &'a [T],
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RegressionModel<T> {
    pub chi: Vec<T>,
    pub method: FitMethod,
    pub provenance: String,
    /// Numerical rank of the design (1 for single-sample fits).
    pub rank: usize,
    /// `max_i |θ_iᵀχ − f_i|` over the fitting samples.
    pub training_residual: T,
}

impl<T: Real> RegressionModel<T> {
    /// Wraps a known coefficient vector, rejecting all-zero or non-finite `χ`.
    pub fn from_chi(chi: Vec<T>, provenance: impl Into<String>) -> Result<Self> {
        validate_chi(&chi)?;
        Ok(RegressionModel {
            chi,
            method: FitMethod::LeastSquaresBatch,
            provenance: provenance.into(),
            rank: 1,
            training_residual: T::zero(),
        })
    }

    pub fn parameter_count(&self) -> usize {
        self.chi.len()
    }

    /// `θᵀχ`.
    pub fn predict(&self, theta: &[T]) -> T {
        dot(theta, &self.chi)
    }
}

fn validate_chi<T: Real>(chi: &[T]) -> Result<()> {
    if chi.is_empty() {
        return Err(Error::DegenerateFit("empty coefficient vector".into()));
    }
    if !all_finite(chi) {
        return Err(Error::DegenerateFit("non-finite coefficient".into()));
    }
    if chi.iter().all(|c| *c == T::zero()) {
        return Err(Error::DegenerateFit(
            "all-zero χ leaves the target update undefined".into(),
        ));
    }
    Ok(())
}

/// Moore–Penrose pseudoinverse of a column vector: `χᵀ/‖χ‖²`.
pub fn vector_pseudoinverse<T: Real>(chi: &[T]) -> Result<Vec<T>> {
    let n2 = norm_sq(chi);
    if !(n2 > T::zero()) {
        return Err(Error::ZeroVector);
    }
    Ok(chi.iter().map(|&c| c / n2).collect())
}

pub fn fit_chi<T: Real>(
    samples: &[RegressionSample<T>],
    method: FitMethod,
    kernel: Option<KernelFitInput<'_, T>>,
) -> Result<RegressionModel<T>> {
    let first = samples
        .first()
        .ok_or_else(|| Error::InvalidInput("fit needs at least one sample".into()))?;
    let l = first.theta.len();
    if l == 0 {
        return Err(Error::InvalidInput("empty parameter vector".into()));
    }
    for s in samples {
        if s.theta.len() != l {
            return Err(Error::dim("regression sample length", l, s.theta.len()));
        }
        if !all_finite(&s.theta) || !s.value.is_finite() {
            return Err(Error::InvalidInput("non-finite regression sample".into()));
        }
    }

    let (chi, rank, provenance) = match method {
        FitMethod::MinNormSingle => {
            if samples.len() != 1 {
                return Err(Error::InvalidInput(format!(
                    "min-norm-single takes exactly one sample, got {}",
                    samples.len()
                )));
            }
            let n2 = norm_sq(&first.theta);
            if !(n2 > T::zero()) {
                return Err(Error::DegenerateFit(
                    "θ₀ = 0: the single-sample equation has no minimum-norm solution".into(),
                ));
            }
            let scale = first.value / n2;
            let chi = first.theta.iter().map(|&t| t * scale).collect();
            (chi, 1, "min-norm solution of θ₀ᵀχ = f₀ (1 sample)".to_string())
        }
        FitMethod::LeastSquaresBatch => {
            let (chi, rank) = least_squares(samples, l)?;
            let provenance = format!(
                "minimum-norm least squares over {} samples, rank {rank} of {l}",
                samples.len()
            );
            (chi, rank, provenance)
        }
        FitMethod::KernelCoefficients => {
            let input = kernel.ok_or_else(|| {
                Error::InvalidInput("kernel-coefficients needs a fitted kernel model".into())
            })?;
            let n = input.model.training_len();
            if n != l {
                return Err(Error::InvalidInput(format!(
                    "kernel-coefficients yields {n} coefficients (one per training point) \
                     but the circuit has {l} parameters"
                )));
            }
            let centered = input.model.centered_kernel_vector(input.anchor)?;
            let chi = input
                .model
                .all_eigenvectors()
                .iter()
                .map(|alpha| dot(alpha, &centered))
                .collect();
            let provenance = format!(
                "kernel eigen-coefficients over {n} centered training points, evaluated at the \
                 anchor Υ₀ as a proxy for Υ*"
            );
            (chi, n, provenance)
        }
    };
    validate_chi(&chi)?;
    let training_residual = samples.iter().fold(T::zero(), |m, s| {
        m.max((dot(&s.theta, &chi) - s.value).abs())
    });
    Ok(RegressionModel {
        chi,
        method,
        provenance,
        rank,
        training_residual,
    })
}

fn least_squares<T: Real>(samples: &[RegressionSample<T>], l: usize) -> Result<(Vec<T>, usize)> {
    let n = samples.len();
    let design = DMatrix::from_fn(n, l, |i, j| samples[i].theta[j]);
    if design.iter().all(|x| *x == T::zero()) {
        return Err(Error::DegenerateFit("all-zero design matrix".into()));
    }
    let rhs = DVector::from_iterator(n, samples.iter().map(|s| s.value));
    let svd = design.svd(true, true);
    let smax = svd.singular_values.max();
    let eps = smax * from_usize::<T>(n.max(l)) * lit::<T>(f64::EPSILON);
    let rank = svd.rank(eps);
    let chi = svd
        .solve(&rhs, eps)
        .map_err(|e| Error::DegenerateFit(format!("SVD solve failed: {e}")))?;
    Ok((chi.iter().copied().collect(), rank))
}

/// `θ₀ = F(θ₀) + F(U)` with `F(θ₀) = χ⁺f₀` and `F(U)` in the null space of `χᵀ`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ThetaDecomposition<T> {
    pub f_component: Vec<T>,
    pub null_component: Vec<T>,
    /// `θ₀ᵀχ − f₀`; equals `χᵀF(U)`, zero when `(θ₀, f₀)` lies on the model.
    pub consistency_residual: T,
}

pub fn decompose_theta<T: Real>(theta0: &[T], model: &RegressionModel<T>, f0: T) -> Result<ThetaDecomposition<T>> {
    if theta0.len() != model.chi.len() {
        return Err(Error::dim("θ₀ length", model.chi.len(), theta0.len()));
    }
    let pinv = vector_pseudoinverse(&model.chi)?;
    let f_component: Vec<T> = pinv.iter().map(|&p| p * f0).collect();
    let null_component = theta0.iter().zip(&f_component).map(|(&t, &f)| t - f).collect();
    Ok(ThetaDecomposition {
        f_component,
        null_component,
        consistency_residual: model.predict(theta0) - f0,
    })
}

/// `θ* = θ₀ + χ⁺(f* − f₀)`.
pub fn target_theta<T: Real>(theta0: &[T], model: &RegressionModel<T>, f0: T, f_star: T) -> Result<Vec<T>> {
    if theta0.len() != model.chi.len() {
        return Err(Error::dim("θ₀ length", model.chi.len(), theta0.len()));
    }
    let pinv = vector_pseudoinverse(&model.chi)?;
    let delta = f_star - f0;
    Ok(theta0.iter().zip(&pinv).map(|(&t, &p)| t + p * delta).collect())
}
