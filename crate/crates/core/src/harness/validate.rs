//! Desk-scale invariant suite behind the `validate` subcommand.

use std::fmt::Write as _;

use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::config::RunConfig;
use super::instance::sample_training_set;
use super::report::{parse_report, report_json};
use super::run::{execute, fit_kernel_model, prepare, run_state_determination, RunMode, Timings};
use super::synthetic::{cluster_instance, cluster_model};
use crate::circuit::{
    apply_pauli_rotation, build_state, build_state_from_zero, objective_value, GateParameterVector, GateSequence,
    GateSpec, Pauli, PauliString, StateVector,
};
use crate::error::Result;
use crate::kernel::{KernelModel, Retention};
use crate::oracle::{dense_build_state, pauli_matrix};
use crate::pathway::decompose_objective;
use crate::preimage::{PreImageConfig, PreImageProblem};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CheckRow {
    pub name: String,
    pub passed: bool,
    pub detail: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ValidationReport {
    pub rows: Vec<CheckRow>,
}

impl ValidationReport {
    pub fn passed(&self) -> bool {
        self.rows.iter().all(|r| r.passed)
    }

    pub fn failures(&self) -> usize {
        self.rows.iter().filter(|r| !r.passed).count()
    }

    /// Fixed-width pass/fail table.
    pub fn transcript(&self) -> String {
        let width = self.rows.iter().map(|r| r.name.len()).max().unwrap_or(0);
        let mut s = String::new();
        for r in &self.rows {
            let mark = if r.passed { "PASS" } else { "FAIL" };
            writeln!(s, "{mark}  {:width$}  {}", r.name, r.detail).unwrap();
        }
        writeln!(s, "{} checks, {} failed", self.rows.len(), self.failures()).unwrap();
        s
    }
}

fn e(x: f64) -> String {
    format!("{x:.3e}")
}

struct Suite {
    rows: Vec<CheckRow>,
}

impl Suite {
    fn check(&mut self, name: &str, f: impl FnOnce() -> Result<(bool, String)>) {
        let (passed, detail) = f().unwrap_or_else(|err| (false, format!("error: {err}")));
        self.rows.push(CheckRow {
            name: name.to_string(),
            passed,
            detail,
        });
    }
}

fn random_pauli(rng: &mut ChaCha8Rng, n: usize) -> PauliString {
    let ops = (0..n)
        .map(|_| [Pauli::I, Pauli::X, Pauli::Y, Pauli::Z][rng.random_range(0..4)])
        .collect();
    PauliString::new(ops).expect("nonempty")
}

fn random_circuit(rng: &mut ChaCha8Rng, max_qubits: usize, max_gates: usize) -> (GateSequence, GateParameterVector<f64>) {
    let n = rng.random_range(1..=max_qubits);
    let gates: Vec<GateSpec> = (0..rng.random_range(1..=max_gates))
        .map(|k| GateSpec {
            generator: random_pauli(rng, n),
            parameter_index: k,
        })
        .collect();
    let theta = (0..gates.len()).map(|_| rng.random_range(-4.0..4.0)).collect();
    (
        GateSequence::new(n, gates.len(), gates).expect("valid circuit"),
        GateParameterVector::new(theta).expect("finite"),
    )
}

fn random_state(rng: &mut ChaCha8Rng, n: usize) -> StateVector<f64> {
    let amps = (0..1usize << n)
        .map(|_| Complex64::new(rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0)))
        .collect();
    StateVector::normalized(amps).expect("nonzero")
}

/// `max_k ‖⟨K⟩α_k − Nλ_k α_k‖ / ‖α_k‖` over positive components.
pub fn eigen_residual(model: &KernelModel<f64>) -> f64 {
    let n = model.training_len() as f64;
    let c = model.centered();
    model.eigenpairs()[..model.positive_count()]
        .iter()
        .map(|p| {
            let a = nalgebra::DVector::from_column_slice(&p.alpha);
            (c * &a - &a * (n * p.eigenvalue)).norm() / a.norm()
        })
        .fold(0.0, f64::max)
}

/// `|Σ_k Nλ_k − trace⟨K⟩|` over every eigenvalue (including non-positive ones).
pub fn trace_gap(model: &KernelModel<f64>) -> f64 {
    let n = model.training_len() as f64;
    let sum: f64 = model.eigenpairs().iter().map(|p| n * p.eigenvalue).sum();
    (sum - model.centered().trace()).abs()
}

pub fn max_row_sum(model: &KernelModel<f64>) -> f64 {
    model
        .centered()
        .row_iter()
        .map(|r| r.sum().abs())
        .fold(0.0, f64::max)
}

/// Feature-space distance from a training point to its projection, by the
/// kernel-trick expansion `K̃(x,x) − 2ℓᵀk̃ + ℓᵀ⟨K⟩ℓ`.
pub fn reconstruction_error(model: &KernelModel<f64>, index: usize) -> Result<f64> {
    let x = &model.training()[index];
    let p = model.project_n(x, model.positive_count())?;
    let l = nalgebra::DVector::from_column_slice(&p.ell);
    let quad = (l.transpose() * model.centered() * &l)[(0, 0)];
    let cross: f64 = p.ell.iter().zip(&p.centered_kernel).map(|(a, b)| a * b).sum();
    Ok((model.centered_self_kernel(x)? - 2.0 * cross + quad).abs())
}

/// `‖g − g_fd‖ / max(‖g_fd‖, 1e-3)` with central differences of step `h`.
pub fn gradient_deviation(problem: &PreImageProblem<'_, f64>, x: &[f64], phi: f64, h: f64) -> Result<f64> {
    let g = problem.gradient(x, phi)?;
    let mut num = 0.0;
    let mut den = 0.0;
    for i in 0..x.len() {
        let mut xp = x.to_vec();
        let mut xm = x.to_vec();
        xp[i] += h;
        xm[i] -= h;
        let fd = (problem.distance(&xp, phi)? - problem.distance(&xm, phi)?) / (2.0 * h);
        num += (g[i] - fd).powi(2);
        den += fd * fd;
    }
    Ok(num.sqrt() / den.sqrt().max(1e-3))
}

pub fn validate(config: &RunConfig) -> Result<ValidationReport> {
    let mut suite = Suite { rows: Vec::new() };
    let mut rng = ChaCha8Rng::seed_from_u64(config.training.seed ^ 0x5eed);
    let mut timings = Timings::default();
    let prepared = prepare(config, &mut timings)?;
    let instance = &prepared.instance;
    let training = &prepared.training;

    suite.check("simulator matches dense oracle", || {
        let mut worst = 0.0f64;
        for _ in 0..40 {
            let (seq, theta) = random_circuit(&mut rng, 3, 6);
            let input = random_state(&mut rng, seq.qubit_count());
            let fast = build_state(&seq, &theta, &input)?;
            let dense = dense_build_state(&seq, &theta, &input)?;
            for (a, b) in fast.amplitudes().iter().zip(&dense) {
                worst = worst.max((a - b).norm());
            }
        }
        Ok((worst <= 1e-10, format!("max amplitude error {}", e(worst))))
    });

    suite.check("pauli strings square to identity", || {
        let mut worst = 0.0f64;
        for _ in 0..20 {
            let n = rng.random_range(1..=3);
            let m = pauli_matrix(&random_pauli(&mut rng, n));
            let d = m.nrows();
            worst = worst.max((&m * &m - nalgebra::DMatrix::identity(d, d)).norm());
        }
        Ok((worst <= 1e-12, format!("max ‖P² − I‖ {}", e(worst))))
    });

    suite.check("rotation inverse restores state", || {
        let mut worst = 0.0f64;
        for _ in 0..20 {
            let n = rng.random_range(1..=6);
            let p = random_pauli(&mut rng, n);
            let s = random_state(&mut rng, n);
            let t = rng.random_range(-4.0..4.0);
            let back = apply_pauli_rotation(&apply_pauli_rotation(&s, &p, t)?, &p, -t)?;
            worst = worst.max(back.max_abs_diff(&s));
        }
        Ok((worst <= 1e-12, format!("max amplitude error {}", e(worst))))
    });

    suite.check("norm preserved on instance circuit", || {
        let mut worst = 0.0f64;
        for s in training.iter().take(50) {
            let st = build_state_from_zero(&instance.circuit, &GateParameterVector::new(s.theta.clone())?)?;
            worst = worst.max((st.norm() - 1.0).abs());
        }
        Ok((worst <= 1e-10, format!("max |‖ψ‖ − 1| {}", e(worst))))
    });

    suite.check("objective within enumerated bounds", || {
        let (lo, hi) = instance.objective.bounds();
        let ok = training.iter().all(|s| s.value >= lo - 1e-10 && s.value <= hi + 1e-10);
        Ok((ok, format!("bounds [{lo}, {hi}] over {} samples", training.len())))
    });

    suite.check("pathway additivity", || {
        let m = instance.graph().edge_count();
        let worst = training
            .iter()
            .map(|s| (s.element[m..].iter().sum::<f64>() - s.value).abs())
            .fold(0.0, f64::max);
        Ok((worst <= 1e-10, format!("max |ΣΩ − f| {}", e(worst))))
    });

    suite.check("objective ignores global phase", || {
        let n = instance.graph().vertex_count();
        let mut worst = 0.0f64;
        for _ in 0..10 {
            let s = random_state(&mut rng, n);
            let phase = rng.random_range(0.0..std::f64::consts::TAU);
            let a = decompose_objective(&s, &instance.objective)?;
            let b = decompose_objective(&s.with_global_phase(phase), &instance.objective)?;
            for (x, y) in a.iter().zip(&b) {
                worst = worst.max((x - y).abs());
            }
            worst = worst.max(
                (objective_value(&s, &instance.objective)?
                    - objective_value(&s.with_global_phase(phase), &instance.objective)?)
                .abs(),
            );
        }
        Ok((worst <= 1e-12, format!("max deviation {}", e(worst))))
    });

    suite.check("training set deterministic under seed", || {
        let again = sample_training_set(instance, &config.training)?;
        Ok((&again == training, "resampled set identical".to_string()))
    });

    let state = run_state_determination(config, &prepared, false);
    suite.check("parameter split sums to start", || {
        let s = state.as_ref().map_err(clone_err)?;
        Ok((s.split_residual <= 1e-12, format!("max residual {}", e(s.split_residual))))
    });
    suite.check("target parameters hit linear model", || {
        let s = state.as_ref().map_err(clone_err)?;
        let tol = 1e-10 * (1.0 + s.f_star.abs());
        Ok((s.target_residual.abs() <= tol, format!("χᵀθ* − f* = {}", e(s.target_residual))))
    });
    suite.check("target step parallel to coefficients", || {
        let s = state.as_ref().map_err(clone_err)?;
        Ok((s.parallel_sine <= 1e-10, format!("sine {}", e(s.parallel_sine))))
    });

    let model = fit_kernel_model(config, training);
    suite.check("centered kernel rows sum to zero", || {
        let m = model.as_ref().map_err(clone_err)?;
        let r = max_row_sum(m);
        Ok((r <= 1e-9, format!("max |row sum| {}", e(r))))
    });
    suite.check("centered eigenpairs satisfy eigen equation", || {
        let m = model.as_ref().map_err(clone_err)?;
        let r = eigen_residual(m);
        let scale = m.training_len() as f64 * m.eigenpairs()[0].eigenvalue;
        Ok((r <= 1e-8 * scale, format!("residual {} (scale {})", e(r), e(scale))))
    });
    suite.check("eigenvalues sum to centered trace", || {
        let m = model.as_ref().map_err(clone_err)?;
        let g = trace_gap(m);
        Ok((g <= 1e-8, format!("gap {}", e(g))))
    });
    suite.check("training points reconstruct with all components", || {
        let m = model.as_ref().map_err(clone_err)?;
        let full = m.with_retained(m.positive_count())?;
        let mut worst = 0.0f64;
        for i in 0..full.training_len().min(20) {
            worst = worst.max(reconstruction_error(&full, i)?);
        }
        Ok((worst <= 1e-8, format!("max distance² {}", e(worst))))
    });

    suite.check("pre-image gradient matches finite differences", || {
        let m = model.as_ref().map_err(clone_err)?;
        let anchor = &training[0].element;
        let problem = PreImageProblem::new(m, anchor)?;
        let mut worst = 0.0f64;
        for s in training.iter().skip(1).take(5) {
            let x: Vec<f64> = s.element.iter().zip(anchor).map(|(a, b)| 0.5 * (a + b)).collect();
            worst = worst.max(gradient_deviation(&problem, &x, 0.3, 1e-6)?);
        }
        Ok((worst <= 1e-5, format!("max relative deviation {}", e(worst))))
    });

    let run = execute(config, RunMode::Full);
    suite.check("converged pre-image is a fixed point", || {
        let (r, _) = run.as_ref().map_err(clone_err)?;
        let p = r.pathway.as_ref().expect("full run");
        if !p.preimage.converged {
            return Ok((false, format!("did not converge: {:?}", p.preimage.termination)));
        }
        let m = model.as_ref().map_err(clone_err)?;
        let problem = PreImageProblem::new(m, &p.anchor)?;
        let next = problem.iterate_once(&p.preimage.solution, p.preimage.phi)?.next;
        let moved = next
            .iter()
            .zip(&p.preimage.solution)
            .map(|(a, b)| (a - b).powi(2))
            .sum::<f64>()
            .sqrt();
        let tol = config.preimage.tol;
        Ok((moved <= tol, format!("step {} after {} iterations", e(moved), p.preimage.iterations_used)))
    });
    suite.check("decoded edge identifiers exact", || {
        let (r, _) = run.as_ref().map_err(clone_err)?;
        let p = r.pathway.as_ref().expect("full run");
        Ok((p.kappa_exact && p.decoded.flagged.is_empty(), format!("κ* = {:?}", p.decoded.edge_indices)))
    });
    suite.check("report round-trips through JSON", || {
        let (r, _) = run.as_ref().map_err(clone_err)?;
        let back = parse_report(&report_json(r)?)?;
        Ok((&back == r, "re-read report identical".to_string()))
    });

    suite.check("regularizer pulls solution to anchor", || {
        let m = model.as_ref().map_err(clone_err)?;
        let anchor = &training[0].element;
        let scale = m.max_abs_gram();
        let mut dist = Vec::new();
        for phi in [1e3 * scale, 1e6 * scale] {
            let cfg = PreImageConfig {
                phi,
                ..config.preimage.to_config()
            };
            let r = PreImageProblem::new(m, anchor)?.solve(&cfg)?;
            dist.push(
                r.solution
                    .iter()
                    .zip(anchor)
                    .map(|(a, b)| (a - b).powi(2))
                    .sum::<f64>()
                    .sqrt(),
            );
        }
        Ok((
            dist[1] <= dist[0] && dist[1] <= 1e-6,
            format!("‖Υ* − Υ₀‖ {} → {}", e(dist[0]), e(dist[1])),
        ))
    });

    suite.check("rbf iterates stay in hull when weights non-negative", || {
        let mut checked = 0;
        for k in 0..10 {
            let inst = cluster_instance(config.preimage.seed.wrapping_add(k), 12);
            let m = cluster_model(&inst, Retention::Count(1))?;
            let problem = PreImageProblem::new(&m, &inst.anchor)?;
            let (lo, hi) = bbox(&inst.points);
            let mut x = inst.anchor.clone();
            for _ in 0..50 {
                let Ok(step) = problem.iterate_once(&x, 0.0) else { break };
                if step.convex {
                    checked += 1;
                    let inside = step
                        .next
                        .iter()
                        .enumerate()
                        .all(|(d, v)| *v >= lo[d] - 1e-12 && *v <= hi[d] + 1e-12);
                    if !inside {
                        return Ok((false, format!("convex step left bounding box at {:?}", step.next)));
                    }
                }
                x = step.next;
            }
        }
        Ok((true, format!("{checked} convex steps inside hull box")))
    });

    Ok(ValidationReport { rows: suite.rows })
}

fn bbox(points: &[Vec<f64>]) -> (Vec<f64>, Vec<f64>) {
    let d = points[0].len();
    let mut lo = vec![f64::INFINITY; d];
    let mut hi = vec![f64::NEG_INFINITY; d];
    for p in points {
        for k in 0..d {
            lo[k] = lo[k].min(p[k]);
            hi[k] = hi[k].max(p[k]);
        }
    }
    (lo, hi)
}

fn clone_err(e: &crate::error::Error) -> crate::error::Error {
    crate::error::Error::InvalidInput(e.to_string())
}
