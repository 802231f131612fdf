use bellsdp::algebra::{generate_basis, LevelSpec};
use bellsdp::moment::{apply_symmetry, build_template, partial_transpose, SymmetrySpec};
use bellsdp::oracle::linalg::{herm_eigvals, kron, max_abs_diff, random_density};
use bellsdp::oracle::{behavior_of, moment_matrix_of, u_of, QuantumModel};
use bellsdp::scenario::Scenario;
use faer::{c64, Mat};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn random_scenario(rng: &mut impl Rng) -> (Scenario, Vec<usize>) {
    let parties = rng.random_range(1..=2);
    let outcomes = (0..parties)
        .map(|_| {
            (0..rng.random_range(1..=3))
                .map(|_| rng.random_range(2..=3))
                .collect()
        })
        .collect();
    let dims = (0..parties).map(|_| rng.random_range(2..=3)).collect();
    (Scenario::new(outcomes).unwrap(), dims)
}

#[test]
fn template_matches_explicit_moment_matrix_on_fifty_models() {
    let mut rng = ChaCha8Rng::seed_from_u64(2024);
    for trial in 0..50 {
        let (sc, dims) = random_scenario(&mut rng);
        let level = rng.random_range(1..=2);
        let model = QuantumModel::random(&sc, &dims, &mut rng);
        let basis = generate_basis(&sc, &LevelSpec::full(level)).unwrap();
        let template = build_template(&sc, &basis).unwrap();
        let check = moment_matrix_of(&model, &basis).unwrap();
        assert!(
            check.fixed_deviation < 1e-10,
            "trial {trial}: fixed cells off by {}",
            check.fixed_deviation
        );
        let b = behavior_of(&model).unwrap();
        let u = u_of(&model, &template).unwrap();
        let chi = template.instantiate(&b, &u).unwrap();
        let diff = max_abs_diff(&chi, &check.matrix);
        assert!(
            diff < 1e-10,
            "trial {trial}: instantiated template differs by {diff}"
        );
        let min = herm_eigvals(&chi)[0];
        assert!(min >= -1e-10, "trial {trial}: min eigenvalue {min}");
    }
}

#[test]
fn behaviors_are_normalised_probabilities() {
    let mut rng = ChaCha8Rng::seed_from_u64(7);
    for _ in 0..20 {
        let (sc, dims) = random_scenario(&mut rng);
        let model = QuantumModel::random(&sc, &dims, &mut rng);
        let b = behavior_of(&model).unwrap();
        assert!((b.coordinates[0] - 1.0).abs() < 1e-12);
        for (_, _, p) in b.full_table() {
            assert!((-1e-12..=1.0 + 1e-12).contains(&p));
        }
    }
}

/// Mixture of product states: separable, hence PPT.
fn separable_state(dims: &[usize], terms: usize, rng: &mut impl Rng) -> Mat<c64> {
    let dim: usize = dims.iter().product();
    let mut rho = Mat::<c64>::zeros(dim, dim);
    let weights: Vec<f64> = (0..terms).map(|_| rng.random::<f64>() + 0.1).collect();
    let total: f64 = weights.iter().sum();
    for w in weights {
        let a = random_density(dims[0], 1, rng);
        let b = random_density(dims[1], rng.random_range(1..=dims[1]), rng);
        let k = kron(&a, &b);
        for j in 0..dim {
            for i in 0..dim {
                rho[(i, j)] += k[(i, j)] * (w / total);
            }
        }
    }
    rho
}

#[test]
fn separable_states_give_ppt_moment_matrices() {
    let mut rng = ChaCha8Rng::seed_from_u64(11);
    let sc = Scenario::uniform(2, 2, 2).unwrap();
    let basis = generate_basis(&sc, &LevelSpec::full(2)).unwrap();
    let template = build_template(&sc, &basis).unwrap();
    let pt = partial_transpose(&template, &[0]).unwrap();
    let cells = pt.apply(&template);
    for _ in 0..10 {
        let mut model = QuantumModel::random(&sc, &[2, 2], &mut rng);
        model.state = separable_state(&[2, 2], 3, &mut rng);
        let b = behavior_of(&model).unwrap();
        let u = u_of(&model, &template).unwrap();
        let chi = template.instantiate(&b, &u).unwrap();
        let n = template.side();
        let chi_pt = Mat::from_fn(n, n, |r, c| {
            chi[(pt.image(r * n + c) / n, pt.image(r * n + c) % n)]
        });
        assert!(herm_eigvals(&chi)[0] > -1e-10);
        assert!(herm_eigvals(&chi_pt)[0] > -1e-10);
        assert_eq!(cells.len(), n * n);
    }
}

#[test]
fn real_reduction_sees_real_parts_only() {
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    let sc = Scenario::uniform(2, 2, 2).unwrap();
    let basis = generate_basis(&sc, &LevelSpec::full(2)).unwrap();
    let template = build_template(&sc, &basis).unwrap();
    let real = apply_symmetry(&template, &SymmetrySpec::real(), None).unwrap();
    let model = QuantumModel::random(&sc, &[2, 2], &mut rng);
    let b = behavior_of(&model).unwrap();
    let u = u_of(&model, &template).unwrap();
    let full = template.instantiate(&b, &u).unwrap();
    let re = real.instantiate(&b, &u).unwrap();
    let n = template.side();
    for r in 0..n {
        for c in 0..n {
            assert!((re[(r, c)] - c64::new(full[(r, c)].re, 0.0)).norm() < 1e-14);
        }
    }
}
