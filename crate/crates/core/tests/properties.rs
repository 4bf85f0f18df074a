use num_complex::Complex64;
use proptest::prelude::*;

use qpath_core::circuit::{
    apply_pauli_rotation, build_state, objective_value, GateParameterVector, GateSequence, GateSpec, Pauli,
    PauliString, StateVector,
};
use qpath_core::harness::instance::ring_graph;
use qpath_core::kernel::{center_kernel_matrix, kernel_matrix, median_distance, KernelFunction, KernelModel, Retention};
use qpath_core::oracle::{dense_build_state, pauli_matrix};
use qpath_core::pathway::{decode_element, decompose_objective, encode_element, ObjectiveSpec};
use qpath_core::preimage::{PreImageConfig, PreImageProblem};
use qpath_core::regression::{decompose_theta, target_theta, vector_pseudoinverse, RegressionModel};

fn pauli() -> impl Strategy<Value = Pauli> {
    prop_oneof![Just(Pauli::I), Just(Pauli::X), Just(Pauli::Y), Just(Pauli::Z)]
}

fn pauli_string(n: usize) -> impl Strategy<Value = PauliString> {
    prop::collection::vec(pauli(), n).prop_map(|ops| PauliString::new(ops).unwrap())
}

fn state(n: usize) -> impl Strategy<Value = StateVector<f64>> {
    prop::collection::vec((-1.0..1.0f64, -1.0..1.0f64), 1usize << n)
        .prop_filter("nonzero", |v| v.iter().any(|(a, b)| a.abs() + b.abs() > 1e-3))
        .prop_map(|v| StateVector::normalized(v.into_iter().map(|(a, b)| Complex64::new(a, b)).collect()).unwrap())
}

fn circuit(n: usize, max_gates: usize) -> impl Strategy<Value = (GateSequence, GateParameterVector<f64>)> {
    prop::collection::vec((pauli_string(n), -7.0..7.0f64), 1..=max_gates).prop_map(move |gates| {
        let thetas = gates.iter().map(|g| g.1).collect();
        let specs = gates
            .into_iter()
            .enumerate()
            .map(|(k, (generator, _))| GateSpec {
                generator,
                parameter_index: k,
            })
            .collect::<Vec<_>>();
        let len = specs.len();
        (
            GateSequence::new(n, len, specs).unwrap(),
            GateParameterVector::new(thetas).unwrap(),
        )
    })
}

fn sized_circuit(max_qubits: usize, max_gates: usize) -> impl Strategy<Value = (GateSequence, GateParameterVector<f64>, StateVector<f64>)> {
    (1..=max_qubits).prop_flat_map(move |n| {
        (circuit(n, max_gates), state(n)).prop_map(|((c, t), s)| (c, t, s))
    })
}

fn points(max_n: usize, max_d: usize) -> impl Strategy<Value = Vec<Vec<f64>>> {
    (3..=max_n, 1..=max_d).prop_flat_map(|(n, d)| prop::collection::vec(prop::collection::vec(-1.0..1.0f64, d), n))
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn build_state_preserves_norm((seq, theta, input) in sized_circuit(8, 12)) {
        let out = build_state(&seq, &theta, &input).unwrap();
        prop_assert!((out.norm() - 1.0).abs() <= 1e-10);
    }

    #[test]
    fn build_state_matches_dense((seq, theta, input) in sized_circuit(3, 6)) {
        let fast = build_state(&seq, &theta, &input).unwrap();
        let dense = dense_build_state(&seq, &theta, &input).unwrap();
        for (a, b) in fast.amplitudes().iter().zip(&dense) {
            prop_assert!((a - b).norm() <= 1e-10);
        }
    }

    #[test]
    fn rotation_angles_compose(p in pauli_string(4), s in state(4), a in -4.0..4.0f64, b in -4.0..4.0f64) {
        let two = apply_pauli_rotation(&apply_pauli_rotation(&s, &p, a).unwrap(), &p, b).unwrap();
        let one = apply_pauli_rotation(&s, &p, a + b).unwrap();
        prop_assert!(two.max_abs_diff(&one) <= 1e-12);
    }

    #[test]
    fn rotation_inverse(p in pauli_string(5), s in state(5), a in -4.0..4.0f64) {
        let back = apply_pauli_rotation(&apply_pauli_rotation(&s, &p, a).unwrap(), &p, -a).unwrap();
        prop_assert!(back.max_abs_diff(&s) <= 1e-12);
    }

    #[test]
    fn pauli_squares_to_identity(p in pauli_string(3)) {
        let m = pauli_matrix(&p);
        let d = m.nrows();
        let diff = &m * &m - nalgebra::DMatrix::identity(d, d);
        prop_assert!(diff.iter().all(|z| z.norm() <= 1e-14));
    }

    #[test]
    fn objective_within_bounds_and_additive(n in 2usize..=8, seed in any::<u64>()) {
        let objective = ObjectiveSpec::<f64>::maxcut(ring_graph(n).unwrap());
        let s = {
            use rand::{Rng, SeedableRng};
            let mut r = rand_chacha::ChaCha8Rng::seed_from_u64(seed);
            let amps = (0..1usize << n).map(|_| Complex64::new(r.random_range(-1.0..1.0), r.random_range(-1.0..1.0))).collect();
            StateVector::normalized(amps).unwrap()
        };
        let f = objective_value(&s, &objective).unwrap();
        let (lo, hi) = objective.bounds();
        prop_assert!(f >= lo - 1e-12 && f <= hi + 1e-12);
        let omega = decompose_objective(&s, &objective).unwrap();
        prop_assert!((omega.iter().sum::<f64>() - f).abs() <= 1e-10);
        let decoded = decode_element(&encode_element(objective.graph(), &omega).unwrap()).unwrap();
        prop_assert_eq!(decoded.edge_indices, (0..objective.graph().edge_count()).collect::<Vec<_>>());
    }

    #[test]
    fn global_phase_invisible(s in state(4), phase in 0.0..6.3f64) {
        let objective = ObjectiveSpec::<f64>::maxcut(ring_graph(4).unwrap());
        let a = decompose_objective(&s, &objective).unwrap();
        let b = decompose_objective(&s.with_global_phase(phase), &objective).unwrap();
        for (x, y) in a.iter().zip(&b) {
            prop_assert!((x - y).abs() <= 1e-12);
        }
    }

    #[test]
    fn pseudoinverse_identities(chi in prop::collection::vec(-3.0..3.0f64, 1..10)) {
        prop_assume!(chi.iter().any(|c| c.abs() > 1e-3));
        let p = vector_pseudoinverse(&chi).unwrap();
        let pc: f64 = p.iter().zip(&chi).map(|(a, b)| a * b).sum();
        // χ⁺χ = 1, so χχ⁺χ = χ and χ⁺χχ⁺ = χ⁺; χχ⁺ is symmetric by construction
        prop_assert!((pc - 1.0).abs() <= 1e-12);
        for i in 0..chi.len() {
            for j in 0..chi.len() {
                prop_assert!((chi[i] * p[j] - chi[j] * p[i]).abs() <= 1e-12);
            }
        }
    }

    #[test]
    fn split_and_target(chi in prop::collection::vec(-3.0..3.0f64, 1..10), seed in any::<u64>(), step in -2.0..2.0f64) {
        prop_assume!(chi.iter().any(|c| c.abs() > 1e-3));
        use rand::{Rng, SeedableRng};
        let mut r = rand_chacha::ChaCha8Rng::seed_from_u64(seed);
        let theta0: Vec<f64> = chi.iter().map(|_| r.random_range(-3.0..3.0)).collect();
        let model = RegressionModel::from_chi(chi.clone(), "property").unwrap();
        let f0 = model.predict(&theta0);
        let d = decompose_theta(&theta0, &model, f0).unwrap();
        for ((a, b), t) in d.f_component.iter().zip(&d.null_component).zip(&theta0) {
            prop_assert!((a + b - t).abs() <= 1e-12);
        }
        prop_assert!(model.predict(&d.null_component).abs() <= 1e-10);
        let ts = target_theta(&theta0, &model, f0, f0 + step).unwrap();
        prop_assert!((model.predict(&ts) - (f0 + step)).abs() <= 1e-10);
        let after = decompose_theta(&ts, &model, f0 + step).unwrap();
        for j in 0..chi.len() {
            prop_assert!((after.null_component[j] - d.null_component[j]).abs() <= 1e-10);
        }
    }

    #[test]
    fn centered_kernel_is_symmetric_with_zero_rows(pts in points(30, 6)) {
        let sigma = median_distance(&pts);
        prop_assume!(sigma.is_some());
        let k = kernel_matrix(&pts, &KernelFunction::rbf(sigma.unwrap()).unwrap()).unwrap();
        let c = center_kernel_matrix(&k);
        prop_assert_eq!(&c, &c.transpose());
        for row in c.row_iter() {
            prop_assert!(row.sum().abs() <= 1e-9);
        }
    }

    #[test]
    fn projection_residual_shrinks_with_components(pts in points(20, 4)) {
        let sigma = median_distance(&pts);
        prop_assume!(sigma.is_some());
        let model = KernelModel::fit(pts.clone(), KernelFunction::rbf(sigma.unwrap()).unwrap(), Retention::AllPositive);
        prop_assume!(model.is_ok());
        let model = model.unwrap();
        let x = &pts[0];
        let mut prev = f64::INFINITY;
        for n in 1..=model.positive_count() {
            let r = model.projection_residual(x, n).unwrap();
            prop_assert!(r <= prev + 1e-12);
            prop_assert!(r >= -1e-10);
            prev = r;
        }
        prop_assert!(prev.abs() <= 1e-8);
    }

    #[test]
    fn preimage_gradient_matches_differences(pts in points(15, 4), phi in 0.0..2.0f64, t in 0.0..1.0f64) {
        let sigma = median_distance(&pts);
        prop_assume!(sigma.is_some());
        let model = KernelModel::fit(pts.clone(), KernelFunction::rbf(sigma.unwrap()).unwrap(), Retention::Auto);
        prop_assume!(model.is_ok());
        let model = model.unwrap();
        let problem = PreImageProblem::new(&model, &pts[0]);
        prop_assume!(problem.is_ok());
        let problem = problem.unwrap();
        let x: Vec<f64> = pts[1].iter().zip(&pts[2]).map(|(a, b)| a + t * (b - a)).collect();
        let g = problem.gradient(&x, phi).unwrap();
        let h = 1e-6;
        let mut num = 0.0;
        let mut den = 0.0;
        for i in 0..x.len() {
            let mut xp = x.clone();
            let mut xm = x.clone();
            xp[i] += h;
            xm[i] -= h;
            let fd = (problem.distance(&xp, phi).unwrap() - problem.distance(&xm, phi).unwrap()) / (2.0 * h);
            num += (g[i] - fd).powi(2);
            den += fd * fd;
        }
        prop_assert!(num.sqrt() <= 1e-5 * den.sqrt().max(1e-3));
    }

    #[test]
    fn converged_preimage_is_fixed_point(pts in points(15, 3)) {
        let sigma = median_distance(&pts);
        prop_assume!(sigma.is_some());
        let model = KernelModel::fit(pts.clone(), KernelFunction::rbf(sigma.unwrap()).unwrap(), Retention::Auto);
        prop_assume!(model.is_ok());
        let model = model.unwrap();
        let problem = PreImageProblem::new(&model, &pts[0]);
        prop_assume!(problem.is_ok());
        let problem = problem.unwrap();
        let cfg = PreImageConfig::default();
        let r = problem.solve(&cfg).unwrap();
        prop_assume!(r.converged);
        let next = problem.iterate_once(&r.solution, r.phi).unwrap().next;
        let moved: f64 = next.iter().zip(&r.solution).map(|(a, b)| (a - b).powi(2)).sum::<f64>().sqrt();
        prop_assert!(moved <= cfg.tol);
        prop_assert_eq!(r.step_trace.len(), r.iterations_used);
    }
}

#[test]
fn f32_pipeline_smoke() {
    let seq = GateSequence::per_gate(2, vec![PauliString::parse("ZZ").unwrap(), PauliString::parse("XI").unwrap()]).unwrap();
    let theta = GateParameterVector::new(vec![0.3f32, 0.7]).unwrap();
    let out = qpath_core::circuit::build_state_from_zero(&seq, &theta).unwrap();
    let objective = ObjectiveSpec::<f32>::maxcut(ring_graph(2).unwrap());
    let f = objective_value(&out, &objective).unwrap();
    assert!((f - 0.7f32.sin().powi(2)).abs() < 1e-6);
    let model = KernelModel::<f32>::fit(
        vec![vec![0.0, 0.0], vec![1.0, 0.0], vec![0.0, 1.0]],
        KernelFunction::rbf(1.0).unwrap(),
        Retention::AllPositive,
    )
    .unwrap();
    assert_eq!(model.positive_count(), 2);
}
