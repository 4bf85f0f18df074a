//! Kernel PCA over pathway vectors.
//!
//! The Gram matrix is centered with `H = I − J/N` (`⟨K⟩ = HKH`), so the
//! feature-mapped training set has zero mean. Out-of-sample evaluations are
//! centered against the training set the same way, see
//! [`KernelModel::centered_kernel_vector`].

use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::scalar::{dist_sq, dot, from_usize, lit, Real};

/// Eigenvalues `λ` at or below this are treated as zero.
pub const EIGENVALUE_CUTOFF: f64 = 1e-12;

/// Fraction of the centered trace captured by [`Retention::Auto`].
pub const AUTO_RETAINED_VARIANCE: f64 = 0.99;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case")]
pub enum KernelFunction<T> {
    /// `exp(−‖x−y‖² / 2σ²)`
    Rbf { sigma: T },
    /// `(⟨x,y⟩ + c)^d`
    Polynomial { degree: u32, offset: T },
}

impl<T: Real> KernelFunction<T> {
    pub fn rbf(sigma: T) -> Result<Self> {
        if !(sigma > T::zero()) || !sigma.is_finite() {
            return Err(Error::InvalidInput("rbf width σ must be positive and finite".into()));
        }
        Ok(KernelFunction::Rbf { sigma })
    }

    pub fn polynomial(degree: u32, offset: T) -> Result<Self> {
        if degree == 0 {
            return Err(Error::InvalidInput("polynomial degree must be >= 1".into()));
        }
        if !(offset >= T::zero()) || !offset.is_finite() {
            return Err(Error::InvalidInput("polynomial offset must be >= 0".into()));
        }
        Ok(KernelFunction::Polynomial { degree, offset })
    }

    pub fn eval(&self, x: &[T], y: &[T]) -> T {
        match *self {
            KernelFunction::Rbf { sigma } => (-dist_sq(x, y) / (lit::<T>(2.0) * sigma * sigma)).exp(),
            KernelFunction::Polynomial { degree, offset } => (dot(x, y) + offset).powi(degree as i32),
        }
    }

    /// Scalar derivative `K′`: with respect to `‖x−y‖²` for rbf, to `⟨x,y⟩`
    /// for the polynomial kernel.
    pub fn derivative(&self, x: &[T], y: &[T]) -> T {
        match *self {
            KernelFunction::Rbf { sigma } => {
                -self.eval(x, y) / (lit::<T>(2.0) * sigma * sigma)
            }
            KernelFunction::Polynomial { degree, offset } => {
                from_usize::<T>(degree as usize) * (dot(x, y) + offset).powi(degree as i32 - 1)
            }
        }
    }

    /// `∇_x K(x, y)`.
    pub fn gradient_first(&self, x: &[T], y: &[T]) -> Vec<T> {
        let d = self.derivative(x, y);
        match self {
            KernelFunction::Rbf { .. } => {
                let two_d = lit::<T>(2.0) * d;
                x.iter().zip(y).map(|(&a, &b)| two_d * (a - b)).collect()
            }
            KernelFunction::Polynomial { .. } => y.iter().map(|&b| d * b).collect(),
        }
    }

    /// `∇_x K(x, x)`.
    pub fn self_gradient(&self, x: &[T]) -> Vec<T> {
        match self {
            KernelFunction::Rbf { .. } => vec![T::zero(); x.len()],
            KernelFunction::Polynomial { .. } => {
                let two_d = lit::<T>(2.0) * self.derivative(x, x);
                x.iter().map(|&a| two_d * a).collect()
            }
        }
    }
}

/// Median of the nonzero pairwise distances, the usual rbf width heuristic.
pub fn median_distance<T: Real>(points: &[Vec<T>]) -> Option<T> {
    let mut d: Vec<T> = Vec::with_capacity(points.len() * points.len().saturating_sub(1) / 2);
    for i in 0..points.len() {
        for j in i + 1..points.len() {
            let v = dist_sq(&points[i], &points[j]).sqrt();
            if v > T::zero() {
                d.push(v);
            }
        }
    }
    if d.is_empty() {
        return None;
    }
    d.sort_by(|a, b| a.partial_cmp(b).expect("finite distances"));
    let m = d.len();
    Some(if m % 2 == 1 {
        d[m / 2]
    } else {
        (d[m / 2 - 1] + d[m / 2]) / lit(2.0)
    })
}

fn check_points<T: Real>(points: &[Vec<T>], min: usize) -> Result<usize> {
    if points.len() < min {
        return Err(Error::InvalidInput(format!(
            "need at least {min} points, got {}",
            points.len()
        )));
    }
    let dim = points[0].len();
    if dim == 0 {
        return Err(Error::InvalidInput("zero-length input vectors".into()));
    }
    for p in points {
        if p.len() != dim {
            return Err(Error::dim("training vector length", dim, p.len()));
        }
        if !p.iter().all(|v| v.is_finite()) {
            return Err(Error::InvalidInput("non-finite training vector".into()));
        }
    }
    Ok(dim)
}

/// `K[i][j] = kernel(Υ_i, Υ_j)`.
pub fn kernel_matrix<T: Real>(points: &[Vec<T>], kernel: &KernelFunction<T>) -> Result<DMatrix<T>> {
    check_points(points, 2)?;
    let n = points.len();
    let mut k = DMatrix::zeros(n, n);
    for i in 0..n {
        for j in 0..=i {
            let v = kernel.eval(&points[i], &points[j]);
            k[(i, j)] = v;
            k[(j, i)] = v;
        }
    }
    Ok(k)
}

/// `HKH` with `H = I − J/N`.
pub fn center_kernel_matrix<T: Real>(k: &DMatrix<T>) -> DMatrix<T> {
    let n = k.nrows();
    let nf = from_usize::<T>(n);
    let row_means: Vec<T> = (0..n).map(|i| k.row(i).sum() / nf).collect();
    let grand = row_means.iter().fold(T::zero(), |a, &b| a + b) / nf;
    DMatrix::from_fn(n, n, |i, j| k[(i, j)] - (row_means[i] + row_means[j]) + grand)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EigenPair<T> {
    /// `λ` in `⟨K⟩α = Nλα`.
    pub eigenvalue: T,
    /// `α`, scaled so `Nλ‖α‖² = 1` when `λ` is above the cutoff, unit norm otherwise.
    pub alpha: Vec<T>,
}

/// Solves `⟨K⟩α = Nλα`, sorted by descending `λ`. Returns all `N` pairs and
/// the count above the cutoff: [`EIGENVALUE_CUTOFF`] or `N·ε·λ_max`, whichever
/// is larger, so round-off in single precision is not counted as signal.
pub fn eigendecompose<T: Real>(centered: &DMatrix<T>) -> Result<(Vec<EigenPair<T>>, usize)> {
    let n = centered.nrows();
    let nf = from_usize::<T>(n);
    let eig = centered.clone().symmetric_eigen();
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&a, &b| {
        eig.eigenvalues[b]
            .partial_cmp(&eig.eigenvalues[a])
            .unwrap_or(std::cmp::Ordering::Equal)
    });
    let top = order.first().map_or(T::zero(), |&i| eig.eigenvalues[i] / nf);
    let cutoff = lit::<T>(EIGENVALUE_CUTOFF).max(nf * T::default_epsilon() * top);
    let mut positive = 0;
    let pairs = order
        .into_iter()
        .map(|idx| {
            let mu = eig.eigenvalues[idx];
            let lambda = mu / nf;
            let u = eig.eigenvectors.column(idx);
            let alpha = if lambda > cutoff {
                positive += 1;
                let s = mu.sqrt();
                u.iter().map(|&v| v / s).collect()
            } else {
                u.iter().copied().collect()
            };
            EigenPair {
                eigenvalue: lambda,
                alpha,
            }
        })
        .collect();
    if positive == 0 {
        return Err(Error::DegenerateTrainingSet {
            cutoff: EIGENVALUE_CUTOFF,
        });
    }
    Ok((pairs, positive))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Retention {
    /// Fixed component count, clamped to the number of positive eigenvalues.
    Count(usize),
    /// Every component with `λ` above the cutoff.
    AllPositive,
    /// Fewest components reaching 99 % of the positive spectrum.
    Auto,
}

#[derive(Debug, Clone, PartialEq)]
pub struct KernelModel<T> {
    training: Vec<Vec<T>>,
    kernel: KernelFunction<T>,
    gram: DMatrix<T>,
    centered: DMatrix<T>,
    pairs: Vec<EigenPair<T>>,
    positive: usize,
    retained: usize,
    column_means: Vec<T>,
    grand_mean: T,
}

impl<T: Real> KernelModel<T> {
    pub fn fit(training: Vec<Vec<T>>, kernel: KernelFunction<T>, retention: Retention) -> Result<Self> {
        let gram = kernel_matrix(&training, &kernel)?;
        let centered = center_kernel_matrix(&gram);
        Self::from_parts(training, kernel, gram, centered, retention)
    }

    /// Builds a model around an externally supplied centered matrix.
    pub fn from_parts(
        training: Vec<Vec<T>>,
        kernel: KernelFunction<T>,
        gram: DMatrix<T>,
        centered: DMatrix<T>,
        retention: Retention,
    ) -> Result<Self> {
        check_points(&training, 2)?;
        if gram.shape() != (training.len(), training.len()) || centered.shape() != gram.shape() {
            return Err(Error::dim("kernel matrix order", training.len(), centered.nrows()));
        }
        let (pairs, positive) = eigendecompose(&centered)?;
        let retained = match retention {
            Retention::Count(0) => {
                return Err(Error::InvalidInput("must retain at least one component".into()))
            }
            Retention::Count(k) => k.min(positive),
            Retention::AllPositive => positive,
            Retention::Auto => {
                let total = pairs[..positive].iter().fold(T::zero(), |a, p| a + p.eigenvalue);
                let goal = total * lit(AUTO_RETAINED_VARIANCE);
                let mut acc = T::zero();
                let mut k = 0;
                while k < positive {
                    acc += pairs[k].eigenvalue;
                    k += 1;
                    if acc >= goal {
                        break;
                    }
                }
                k
            }
        };
        let nf = from_usize::<T>(training.len());
        let column_means: Vec<T> = (0..training.len()).map(|j| gram.column(j).sum() / nf).collect();
        let grand_mean = column_means.iter().fold(T::zero(), |a, &b| a + b) / nf;
        Ok(KernelModel {
            training,
            kernel,
            gram,
            centered,
            pairs,
            positive,
            retained,
            column_means,
            grand_mean,
        })
    }

    pub fn training(&self) -> &[Vec<T>] {
        &self.training
    }

    pub fn training_len(&self) -> usize {
        self.training.len()
    }

    pub fn input_dim(&self) -> usize {
        self.training[0].len()
    }

    pub fn kernel(&self) -> &KernelFunction<T> {
        &self.kernel
    }

    pub fn gram(&self) -> &DMatrix<T> {
        &self.gram
    }

    pub fn centered(&self) -> &DMatrix<T> {
        &self.centered
    }

    /// All `N` eigenpairs, descending.
    pub fn eigenpairs(&self) -> &[EigenPair<T>] {
        &self.pairs
    }

    /// Every eigenvector coefficient vector `α`, descending by eigenvalue.
    pub fn all_eigenvectors(&self) -> Vec<&[T]> {
        self.pairs.iter().map(|p| p.alpha.as_slice()).collect()
    }

    pub fn positive_count(&self) -> usize {
        self.positive
    }

    /// Number `n` of components used by projections.
    pub fn retained(&self) -> usize {
        self.retained
    }

    /// Returns a copy retaining `n` components (clamped to the positive count).
    pub fn with_retained(&self, n: usize) -> Result<Self> {
        if n == 0 {
            return Err(Error::InvalidInput("must retain at least one component".into()));
        }
        let mut m = self.clone();
        m.retained = n.min(self.positive);
        Ok(m)
    }

    pub fn max_abs_gram(&self) -> T {
        self.gram.iter().fold(T::zero(), |m, v| m.max(v.abs()))
    }

    fn check_input(&self, x: &[T]) -> Result<()> {
        if x.len() != self.input_dim() {
            return Err(Error::dim("kernel input length", self.input_dim(), x.len()));
        }
        Ok(())
    }

    /// Raw `K(x, Υ_j)` for every training point.
    pub fn kernel_vector(&self, x: &[T]) -> Result<Vec<T>> {
        self.check_input(x)?;
        Ok(self.training.iter().map(|t| self.kernel.eval(x, t)).collect())
    }

    /// `K̃(x, Υ_j) = K(x,Υ_j) − mean_i K(x,Υ_i) − mean_i K(Υ_i,Υ_j) + mean_ij K`.
    pub fn centered_kernel_vector(&self, x: &[T]) -> Result<Vec<T>> {
        let raw = self.kernel_vector(x)?;
        let mean = raw.iter().fold(T::zero(), |a, &b| a + b) / from_usize(raw.len());
        Ok(raw
            .iter()
            .zip(&self.column_means)
            .map(|(&k, &c)| k - mean - c + self.grand_mean)
            .collect())
    }

    /// `K̃(x, x) = ‖Γ(x) − μ‖²` with `μ` the feature-space training mean.
    pub fn centered_self_kernel(&self, x: &[T]) -> Result<T> {
        let raw = self.kernel_vector(x)?;
        let mean = raw.iter().fold(T::zero(), |a, &b| a + b) / from_usize(raw.len());
        Ok(self.kernel.eval(x, x) - lit::<T>(2.0) * mean + self.grand_mean)
    }

    /// Projection of `x` onto the first `retained()` components.
    pub fn project(&self, x: &[T]) -> Result<Projection<T>> {
        self.project_n(x, self.retained)
    }

    /// Projection of `x` onto the first `n` components.
    pub fn project_n(&self, x: &[T], n: usize) -> Result<Projection<T>> {
        if n == 0 || n > self.positive {
            return Err(Error::InvalidInput(format!(
                "component count {n} outside 1..={}",
                self.positive
            )));
        }
        let centered = self.centered_kernel_vector(x)?;
        let beta: Vec<T> = self.pairs[..n].iter().map(|p| dot(&p.alpha, &centered)).collect();
        let mut ell = vec![T::zero(); self.training.len()];
        for (b, p) in beta.iter().zip(&self.pairs[..n]) {
            for (l, &a) in ell.iter_mut().zip(&p.alpha) {
                *l += *b * a;
            }
        }
        Ok(Projection {
            beta,
            ell,
            centered_kernel: centered,
        })
    }

    /// Squared feature-space distance from `Γ(x)` to its projection on the
    /// first `n` components: `K̃(x,x) − Σ_k β_k²`.
    pub fn projection_residual(&self, x: &[T], n: usize) -> Result<T> {
        let p = self.project_n(x, n)?;
        Ok(self.centered_self_kernel(x)? - dot(&p.beta, &p.beta))
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Projection<T> {
    /// `β_k = Σ_j α_j^k K̃(x, Υ_j)`.
    pub beta: Vec<T>,
    /// `ℓ_i = Σ_k β_k α_i^k`.
    pub ell: Vec<T>,
    /// `K̃(x, Υ_j)` used to form `β`.
    pub centered_kernel: Vec<T>,
}

/// `(β, ℓ)` of `x` under `model`'s retained components.
pub fn project_coefficients<T: Real>(x: &[T], model: &KernelModel<T>) -> Result<Projection<T>> {
    model.project(x)
}
