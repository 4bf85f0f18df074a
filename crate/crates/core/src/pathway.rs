//! Connectivity graph, per-edge objective decomposition and the pathway
//! element `Υ = (κ, Ω)` handed to the kernel machine.
//!
//! Edges are kept in lexicographic order of `(i, j)` with `i < j`. That order
//! is the canonical edge index used everywhere: in `Ω`, in the `κ`
//! coordinates and in the graph file format.

use std::collections::BTreeSet;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::circuit::{check_objective_width, StateVector};
use crate::error::{Error, Result};
use crate::scalar::{from_usize, lit, Real};

/// Schema version written into graph files.
pub const GRAPH_SCHEMA: u32 = 1;

/// `κ` entries further than this from an integer are flagged on decode.
pub const KAPPA_DEVIATION_FLAG: f64 = 0.25;

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ConnectivityGraph {
    vertex_count: usize,
    edges: Vec<(usize, usize)>,
}

impl ConnectivityGraph {
    /// Requires edges already in canonical form: `i < j < n`, strictly increasing.
    pub fn new(vertex_count: usize, edges: Vec<(usize, usize)>) -> Result<Self> {
        if vertex_count == 0 {
            return Err(Error::InvalidInput("graph needs at least one vertex".into()));
        }
        for &(i, j) in &edges {
            if i >= j || j >= vertex_count {
                return Err(Error::InvalidInput(format!(
                    "edge ({i}, {j}) must satisfy i < j < {vertex_count}"
                )));
            }
        }
        for w in edges.windows(2) {
            if w[0] == w[1] {
                return Err(Error::InvalidInput(format!("duplicate edge {:?}", w[0])));
            }
            if w[0] > w[1] {
                return Err(Error::InvalidInput(format!(
                    "edges not in lexicographic order: {:?} before {:?}",
                    w[0], w[1]
                )));
            }
        }
        Ok(ConnectivityGraph {
            vertex_count,
            edges,
        })
    }

    /// Orients each pair as `(min, max)` and sorts; duplicates and self-loops are errors.
    pub fn canonicalize(vertex_count: usize, edges: impl IntoIterator<Item = (usize, usize)>) -> Result<Self> {
        let mut seen = BTreeSet::new();
        for (a, b) in edges {
            if a == b {
                return Err(Error::InvalidInput(format!("self-loop on vertex {a}")));
            }
            if !seen.insert((a.min(b), a.max(b))) {
                return Err(Error::InvalidInput(format!("duplicate edge ({a}, {b})")));
            }
        }
        Self::new(vertex_count, seen.into_iter().collect())
    }

    pub fn vertex_count(&self) -> usize {
        self.vertex_count
    }

    pub fn edges(&self) -> &[(usize, usize)] {
        &self.edges
    }

    pub fn edge_count(&self) -> usize {
        self.edges.len()
    }

    pub fn edge_index(&self, edge: (usize, usize)) -> Option<usize> {
        self.edges.binary_search(&edge).ok()
    }
}

/// Boolean clause attached to an edge, scaled by the edge weight.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum ClauseKind {
    /// `[bit_i(z) ≠ bit_j(z)]`
    Cut,
    /// `[bit_i(z) = bit_j(z)]`
    Agree,
}

impl ClauseKind {
    #[inline]
    fn holds(self, z: usize, i: usize, j: usize) -> bool {
        let differ = ((z >> i) ^ (z >> j)) & 1 == 1;
        match self {
            ClauseKind::Cut => differ,
            ClauseKind::Agree => !differ,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EdgeTerm<T> {
    pub weight: T,
    pub kind: ClauseKind,
}

/// Diagonal objective `C(z) = Σ_e C_e(z)`, one clause per canonical edge.
#[derive(Debug, Clone, PartialEq)]
pub struct ObjectiveSpec<T> {
    graph: ConnectivityGraph,
    terms: Vec<EdgeTerm<T>>,
}

impl<T: Real> ObjectiveSpec<T> {
    pub fn new(graph: ConnectivityGraph, terms: Vec<EdgeTerm<T>>) -> Result<Self> {
        if terms.len() != graph.edge_count() {
            return Err(Error::dim("edge terms", graph.edge_count(), terms.len()));
        }
        if terms.iter().any(|t| !t.weight.is_finite()) {
            return Err(Error::InvalidInput("edge weights must be finite".into()));
        }
        Ok(ObjectiveSpec { graph, terms })
    }

    /// Unit-weight MaxCut on every edge.
    pub fn maxcut(graph: ConnectivityGraph) -> Self {
        Self::weighted_cut(graph.clone(), vec![T::one(); graph.edge_count()])
            .expect("one weight per edge")
    }

    pub fn weighted_cut(graph: ConnectivityGraph, weights: Vec<T>) -> Result<Self> {
        let terms = weights
            .into_iter()
            .map(|weight| EdgeTerm {
                weight,
                kind: ClauseKind::Cut,
            })
            .collect();
        Self::new(graph, terms)
    }

    pub fn graph(&self) -> &ConnectivityGraph {
        &self.graph
    }

    pub fn terms(&self) -> &[EdgeTerm<T>] {
        &self.terms
    }

    pub fn qubit_count(&self) -> usize {
        self.graph.vertex_count
    }

    /// `C_e(z)` for canonical edge `e`.
    #[inline]
    pub fn clause_value(&self, edge: usize, z: usize) -> T {
        let (i, j) = self.graph.edges[edge];
        let term = self.terms[edge];
        if term.kind.holds(z, i, j) {
            term.weight
        } else {
            T::zero()
        }
    }

    /// `C(z)`.
    pub fn value(&self, z: usize) -> T {
        (0..self.terms.len()).fold(T::zero(), |acc, e| acc + self.clause_value(e, z))
    }

    /// `(min_z C(z), max_z C(z))` by enumeration.
    pub fn bounds(&self) -> (T, T) {
        let dim = 1usize << self.qubit_count();
        (0..dim).fold((T::max_value().unwrap(), T::min_value().unwrap()), |(lo, hi), z| {
            let v = self.value(z);
            (lo.min(v), hi.max(v))
        })
    }
}

/// `Ω_e = Σ_z |amplitude(z)|²·C_e(z)` in canonical edge order.
pub fn decompose_objective<T: Real>(state: &StateVector<T>, objective: &ObjectiveSpec<T>) -> Result<Vec<T>> {
    check_objective_width(state, objective)?;
    let mut omega = vec![T::zero(); objective.terms.len()];
    for (z, p) in state.probabilities().into_iter().enumerate() {
        for (e, slot) in omega.iter_mut().enumerate() {
            *slot += p * objective.clause_value(e, z);
        }
    }
    Ok(omega)
}

/// Input-space point `Υ = (κ, Ω)`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PathwayElement<T> {
    pub kappa: Vec<T>,
    pub omega: Vec<T>,
}

impl<T: Real> PathwayElement<T> {
    /// Splits a `2|S|` vector into its `κ` and `Ω` halves.
    pub fn from_input_vector(v: &[T]) -> Result<Self> {
        if v.is_empty() || !v.len().is_multiple_of(2) {
            return Err(Error::InvalidInput(format!(
                "pathway vector length {} is not a positive even number",
                v.len()
            )));
        }
        let (kappa, omega) = v.split_at(v.len() / 2);
        Ok(PathwayElement {
            kappa: kappa.to_vec(),
            omega: omega.to_vec(),
        })
    }

    /// Concatenation `κ ‖ Ω`.
    pub fn to_input_vector(&self) -> Vec<T> {
        self.kappa.iter().chain(&self.omega).copied().collect()
    }

    pub fn edge_count(&self) -> usize {
        self.kappa.len()
    }

    /// `Σ_e Ω_e`.
    pub fn total(&self) -> T {
        self.omega.iter().fold(T::zero(), |a, &b| a + b)
    }
}

/// Pairs each canonical edge index (as a real coordinate) with its value.
pub fn encode_element<T: Real>(graph: &ConnectivityGraph, omega: &[T]) -> Result<PathwayElement<T>> {
    if omega.len() != graph.edge_count() {
        return Err(Error::dim("pathway values", graph.edge_count(), omega.len()));
    }
    Ok(PathwayElement {
        kappa: (0..graph.edge_count()).map(from_usize).collect(),
        omega: omega.to_vec(),
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DecodedPathway<T> {
    /// Rounded canonical edge indices `κ*`.
    pub edge_indices: Vec<usize>,
    /// `Ω*` as produced by the solver.
    pub omega: Vec<T>,
    /// `C* = Σ Ω*`.
    pub total: T,
    /// Positions whose `κ` entry sat more than 0.25 from its rounded index.
    pub flagged: Vec<usize>,
    /// `|κ_e − round(κ_e)|` per position.
    pub deviations: Vec<T>,
}

impl<T> DecodedPathway<T> {
    /// Resolves the decoded indices to `(i, j)` pairs of `graph`.
    pub fn edges(&self, graph: &ConnectivityGraph) -> Result<Vec<(usize, usize)>> {
        self.edge_indices
            .iter()
            .map(|&k| {
                graph
                    .edges()
                    .get(k)
                    .copied()
                    .ok_or_else(|| Error::Decode(format!("edge index {k} not in graph")))
            })
            .collect()
    }
}

/// Rounds `κ` to canonical edge indices and totals `Ω`.
pub fn decode_element<T: Real>(element: &PathwayElement<T>) -> Result<DecodedPathway<T>> {
    let m = element.edge_count();
    if element.omega.len() != m {
        return Err(Error::dim("pathway Ω block", m, element.omega.len()));
    }
    let mut used = vec![false; m];
    let mut edge_indices = Vec::with_capacity(m);
    let mut deviations = Vec::with_capacity(m);
    let mut flagged = Vec::new();
    for (pos, &k) in element.kappa.iter().enumerate() {
        if !k.is_finite() {
            return Err(Error::Decode(format!("κ[{pos}] is not finite")));
        }
        let r = k.round();
        if r < T::zero() || r >= from_usize(m) {
            return Err(Error::Decode(format!(
                "κ[{pos}] = {} rounds to {}, outside the valid index range 0..{m}",
                k.to_f64().unwrap_or(f64::NAN),
                r.to_f64().unwrap_or(f64::NAN)
            )));
        }
        let idx = r.to_usize().expect("checked range");
        if std::mem::replace(&mut used[idx], true) {
            return Err(Error::Decode(format!("κ[{pos}] collides on edge index {idx}")));
        }
        let dev = (k - r).abs();
        if dev > lit(KAPPA_DEVIATION_FLAG) {
            flagged.push(pos);
        }
        edge_indices.push(idx);
        deviations.push(dev);
    }
    Ok(DecodedPathway {
        edge_indices,
        omega: element.omega.clone(),
        total: element.total(),
        flagged,
        deviations,
    })
}

/// On-disk graph/objective format.
///
/// ```json
/// {"schema": 1, "vertices": 3, "edges": [[0, 1, 1.0], [0, 2, 1.0], [1, 2, 1.0]]}
/// ```
///
/// Edges must have `i < j` and appear in lexicographic order; each weight
/// scales a cut clause.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GraphFile {
    pub schema: u32,
    pub vertices: usize,
    pub edges: Vec<(usize, usize, f64)>,
}

impl GraphFile {
    pub fn from_objective(objective: &ObjectiveSpec<f64>) -> Result<Self> {
        if objective.terms.iter().any(|t| t.kind != ClauseKind::Cut) {
            return Err(Error::InvalidInput(
                "graph file format only carries weighted cut clauses".into(),
            ));
        }
        Ok(GraphFile {
            schema: GRAPH_SCHEMA,
            vertices: objective.graph.vertex_count,
            edges: objective
                .graph
                .edges
                .iter()
                .zip(&objective.terms)
                .map(|(&(i, j), t)| (i, j, t.weight))
                .collect(),
        })
    }

    pub fn to_objective(&self) -> Result<ObjectiveSpec<f64>> {
        if self.schema != GRAPH_SCHEMA {
            return Err(Error::Config(format!(
                "graph schema {} unsupported (expected {GRAPH_SCHEMA})",
                self.schema
            )));
        }
        let graph = ConnectivityGraph::new(
            self.vertices,
            self.edges.iter().map(|&(i, j, _)| (i, j)).collect(),
        )?;
        ObjectiveSpec::weighted_cut(graph, self.edges.iter().map(|e| e.2).collect())
    }

    pub fn read(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)?;
        serde_json::from_str(&text).map_err(|e| Error::Config(format!("{}: {e}", path.display())))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn triangle() -> ConnectivityGraph {
        ConnectivityGraph::new(3, vec![(0, 1), (0, 2), (1, 2)]).unwrap()
    }

    #[test]
    fn graph_rejects_noncanonical_edges() {
        assert!(ConnectivityGraph::new(3, vec![(1, 0)]).is_err());
        assert!(ConnectivityGraph::new(3, vec![(0, 3)]).is_err());
        assert!(ConnectivityGraph::new(3, vec![(0, 1), (0, 1)]).is_err());
        assert!(ConnectivityGraph::new(3, vec![(1, 2), (0, 1)]).is_err());
    }

    #[test]
    fn canonicalize_orients_and_sorts() {
        let g = ConnectivityGraph::canonicalize(4, [(3, 0), (1, 0), (2, 1)]).unwrap();
        assert_eq!(g.edges(), &[(0, 1), (0, 3), (1, 2)]);
        assert!(ConnectivityGraph::canonicalize(3, [(0, 1), (1, 0)]).is_err());
        assert!(ConnectivityGraph::canonicalize(3, [(1, 1)]).is_err());
    }

    #[test]
    fn decompose_basis_states() {
        let single = ObjectiveSpec::<f64>::maxcut(ConnectivityGraph::new(2, vec![(0, 1)]).unwrap());
        let s = StateVector::basis(2, 0b01).unwrap();
        assert_eq!(decompose_objective(&s, &single).unwrap(), vec![1.0]);

        let tri = ObjectiveSpec::<f64>::maxcut(triangle());
        let s = StateVector::zero_state(3).unwrap();
        assert_eq!(decompose_objective(&s, &tri).unwrap(), vec![0.0, 0.0, 0.0]);
    }

    #[test]
    fn decompose_uniform_triangle() {
        // Brute force: of the 8 bitstrings, each edge is cut by exactly 4.
        let tri = ObjectiveSpec::<f64>::maxcut(triangle());
        let mut oracle = [0.0; 3];
        for z in 0..8usize {
            for (e, &(i, j)) in [(0, 1), (0, 2), (1, 2)].iter().enumerate() {
                if (z >> i) & 1 != (z >> j) & 1 {
                    oracle[e] += 1.0 / 8.0;
                }
            }
        }
        let omega = decompose_objective(&StateVector::uniform(3).unwrap(), &tri).unwrap();
        for (a, b) in omega.iter().zip(oracle) {
            assert!((a - b).abs() < 1e-15);
        }
        assert!((omega[0] - 0.5).abs() < 1e-15);
    }

    #[test]
    fn agree_clause_complements_cut() {
        let g = ConnectivityGraph::new(2, vec![(0, 1)]).unwrap();
        let agree = ObjectiveSpec::<f64>::new(
            g,
            vec![EdgeTerm {
                weight: 2.0,
                kind: ClauseKind::Agree,
            }],
        )
        .unwrap();
        assert_eq!(agree.value(0b00), 2.0);
        assert_eq!(agree.value(0b10), 0.0);
        assert_eq!(agree.bounds(), (0.0, 2.0));
    }

    #[test]
    fn encode_triangle() {
        let e = encode_element(&triangle(), &[0.0, 0.0, 0.0]).unwrap();
        assert_eq!(e.kappa, vec![0.0, 1.0, 2.0]);
        assert_eq!(e.to_input_vector(), vec![0.0, 1.0, 2.0, 0.0, 0.0, 0.0]);

        let single = ConnectivityGraph::new(2, vec![(0, 1)]).unwrap();
        assert_eq!(encode_element(&single, &[0.7]).unwrap().to_input_vector(), vec![0.0, 0.7]);
        assert!(encode_element(&single, &[0.7, 0.1]).is_err());
    }

    #[test]
    fn decode_rounds_kappa() {
        let el = PathwayElement::from_input_vector(&[0.02f64, 0.98, 2.01, 0.4, 0.1, 0.2]).unwrap();
        let d = decode_element(&el).unwrap();
        assert_eq!(d.edge_indices, vec![0, 1, 2]);
        assert!((d.total - 0.7).abs() < 1e-15);
        assert!(d.flagged.is_empty());

        let d = decode_element(&PathwayElement::from_input_vector(&[0.0, 0.5]).unwrap()).unwrap();
        assert_eq!(d.edge_indices, vec![0]);
        assert_eq!(d.total, 0.5);
    }

    #[test]
    fn decode_out_of_range_and_collision() {
        let err = decode_element(&PathwayElement::from_input_vector(&[0.6, 0.3]).unwrap()).unwrap_err();
        assert!(matches!(err, Error::Decode(_)));
        let err = decode_element(&PathwayElement::from_input_vector(&[0.1, 0.2, 1.0, 1.0]).unwrap()).unwrap_err();
        assert!(err.to_string().contains("collides"));
    }

    #[test]
    fn decode_flags_large_deviation() {
        let el = PathwayElement::from_input_vector(&[0.3, 1.0, 0.5, 0.5]).unwrap();
        let d = decode_element(&el).unwrap();
        assert_eq!(d.flagged, vec![0]);
        let g = ConnectivityGraph::new(3, vec![(0, 1), (1, 2)]).unwrap();
        assert_eq!(d.edges(&g).unwrap(), vec![(0, 1), (1, 2)]);
    }

    #[test]
    fn encode_decode_round_trip() {
        let g = triangle();
        let omega = vec![0.125, 0.7, 0.3333333333333333];
        let d = decode_element(&encode_element(&g, &omega).unwrap()).unwrap();
        assert_eq!(d.omega, omega);
        assert_eq!(d.edge_indices, vec![0, 1, 2]);
    }

    #[test]
    fn graph_file_round_trip_and_validation() {
        let text = r#"{"schema": 1, "vertices": 3, "edges": [[0, 1, 1.0], [0, 2, 2.5], [1, 2, 1.0]]}"#;
        let f: GraphFile = serde_json::from_str(text).unwrap();
        let obj = f.to_objective().unwrap();
        assert_eq!(obj.terms()[1].weight, 2.5);
        assert_eq!(GraphFile::from_objective(&obj).unwrap(), f);

        let unsorted = r#"{"schema": 1, "vertices": 3, "edges": [[1, 2, 1.0], [0, 1, 1.0]]}"#;
        let f: GraphFile = serde_json::from_str(unsorted).unwrap();
        assert!(f.to_objective().is_err());
        let bad_schema = r#"{"schema": 2, "vertices": 2, "edges": [[0, 1, 1.0]]}"#;
        let f: GraphFile = serde_json::from_str(bad_schema).unwrap();
        assert!(matches!(f.to_objective(), Err(Error::Config(_))));
    }
}
