//! Problem instances: connectivity graph, MaxCut objective and the
//! alternating-layer circuit over it.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use rand_distr::{Distribution, Normal, Uniform};
use serde::{Deserialize, Serialize};

use super::config::{CircuitConfig, InstanceConfig, InstanceKind, ParameterSharing, ThetaDistribution, TrainingConfig};
use crate::circuit::{build_state_from_zero, GateParameterVector, GateSequence, GateSpec, Pauli, PauliString};
use crate::error::{Error, Result};
use crate::pathway::{decompose_objective, encode_element, ConnectivityGraph, GraphFile, ObjectiveSpec};

pub const MIN_SIZE: usize = 2;
pub const MAX_SIZE: usize = 14;

#[derive(Debug, Clone, PartialEq)]
pub struct Instance {
    pub objective: ObjectiveSpec<f64>,
    pub circuit: GateSequence,
}

impl Instance {
    pub fn graph(&self) -> &ConnectivityGraph {
        self.objective.graph()
    }
}

/// Ring on `n` vertices in canonical order; `n = 2` gives the single edge.
pub fn ring_graph(n: usize) -> Result<ConnectivityGraph> {
    check_size(n)?;
    if n == 2 {
        return ConnectivityGraph::new(2, vec![(0, 1)]);
    }
    ConnectivityGraph::canonicalize(n, (0..n).map(|i| (i, (i + 1) % n)))
}

/// Erdős–Rényi `G(n, 1/2)`; redrawn from the same stream until it has an edge.
pub fn random_graph(n: usize, seed: u64) -> Result<ConnectivityGraph> {
    check_size(n)?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    loop {
        let mut edges = Vec::new();
        for i in 0..n {
            for j in i + 1..n {
                if rng.random_bool(0.5) {
                    edges.push((i, j));
                }
            }
        }
        if !edges.is_empty() {
            return ConnectivityGraph::new(n, edges);
        }
    }
}

fn check_size(n: usize) -> Result<()> {
    if !(MIN_SIZE..=MAX_SIZE).contains(&n) {
        return Err(Error::InvalidInput(format!("instance size {n} outside {MIN_SIZE}..={MAX_SIZE}")));
    }
    Ok(())
}

/// `p` layers of `Z_iZ_j` per edge followed by `X_q` per qubit.
pub fn alternating_circuit(graph: &ConnectivityGraph, layers: usize, sharing: ParameterSharing) -> Result<GateSequence> {
    let n = graph.vertex_count();
    let mut gates = Vec::new();
    let mut next = 0;
    for _ in 0..layers {
        let shared = next;
        for &(i, j) in graph.edges() {
            let index = match sharing {
                ParameterSharing::PerGate => post_inc(&mut next),
                ParameterSharing::Shared => shared,
            };
            gates.push(GateSpec {
                generator: PauliString::sparse(n, &[(i, Pauli::Z), (j, Pauli::Z)])?,
                parameter_index: index,
            });
        }
        if sharing == ParameterSharing::Shared {
            next += 1;
        }
        let shared = next;
        for q in 0..n {
            let index = match sharing {
                ParameterSharing::PerGate => post_inc(&mut next),
                ParameterSharing::Shared => shared,
            };
            gates.push(GateSpec {
                generator: PauliString::single(n, q, Pauli::X)?,
                parameter_index: index,
            });
        }
        if sharing == ParameterSharing::Shared {
            next += 1;
        }
    }
    GateSequence::new(n, next, gates)
}

fn post_inc(k: &mut usize) -> usize {
    *k += 1;
    *k - 1
}

pub fn generate_instance(instance: &InstanceConfig, circuit: &CircuitConfig) -> Result<Instance> {
    let objective = match instance.kind {
        InstanceKind::MaxcutRing => ObjectiveSpec::maxcut(ring_graph(instance.size)?),
        InstanceKind::MaxcutRandom => ObjectiveSpec::maxcut(random_graph(instance.size, instance.seed)?),
        InstanceKind::File => {
            let path = instance
                .path
                .as_ref()
                .ok_or_else(|| Error::Config("instance.path missing".into()))?;
            GraphFile::read(path)?.to_objective()?
        }
    };
    let circuit = alternating_circuit(objective.graph(), circuit.layers, circuit.parameters)?;
    Ok(Instance { objective, circuit })
}

/// One simulated training point.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrainingSample {
    pub theta: Vec<f64>,
    pub value: f64,
    /// `Υ = (κ, Ω)` as a flat input vector.
    pub element: Vec<f64>,
}

/// Draws `count` parameter vectors from `distribution` in stream order.
pub fn draw_thetas(distribution: ThetaDistribution, len: usize, count: usize, seed: u64) -> Result<Vec<Vec<f64>>> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    match distribution {
        ThetaDistribution::Uniform { low, high } => {
            let d = Uniform::new(low, high).map_err(|e| Error::InvalidInput(e.to_string()))?;
            Ok((0..count).map(|_| (0..len).map(|_| d.sample(&mut rng)).collect()).collect())
        }
        ThetaDistribution::Normal { mean, std } => {
            let d = Normal::new(mean, std).map_err(|e| Error::InvalidInput(e.to_string()))?;
            Ok((0..count).map(|_| (0..len).map(|_| d.sample(&mut rng)).collect()).collect())
        }
    }
}

/// Simulates `θ` and returns `(f, Υ)`.
pub fn simulate_point(instance: &Instance, theta: &[f64]) -> Result<(f64, Vec<f64>)> {
    let state = build_state_from_zero(&instance.circuit, &GateParameterVector::new(theta.to_vec())?)?;
    let omega = decompose_objective(&state, &instance.objective)?;
    let value = omega.iter().sum();
    let element = encode_element(instance.graph(), &omega)?.to_input_vector();
    Ok((value, element))
}

/// Simulates a batch of parameter vectors in parallel, preserving order.
pub fn simulate_batch(instance: &Instance, thetas: Vec<Vec<f64>>) -> Result<Vec<TrainingSample>> {
    thetas
        .into_par_iter()
        .map(|theta| {
            let (value, element) = simulate_point(instance, &theta)?;
            Ok(TrainingSample { theta, value, element })
        })
        .collect()
}

pub fn sample_training_set(instance: &Instance, training: &TrainingConfig) -> Result<Vec<TrainingSample>> {
    if training.samples < 2 {
        return Err(Error::InvalidInput("training set needs at least 2 samples".into()));
    }
    let thetas = draw_thetas(
        training.distribution,
        instance.circuit.parameter_count(),
        training.samples,
        training.seed,
    )?;
    simulate_batch(instance, thetas)
}
