use bellsdp::algebra::{generate_basis, LevelSpec};
use bellsdp::moment::{apply_symmetry, build_template, MomentTemplate, SymmetrySpec};
use bellsdp::oracle::{behavior_of, negativity_of, seesaw, QuantumModel, SeesawConfig};
use bellsdp::programs::*;
use bellsdp::scenario::{builtin, BellFunctional, Scenario};
use bellsdp::solver::{SolverConfig, Status};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

const SQRT2: f64 = std::f64::consts::SQRT_2;

fn functional(name: &str) -> BellFunctional {
    builtin(name).unwrap().functional
}

fn template(f: &BellFunctional, level: usize, sym: &SymmetrySpec) -> MomentTemplate {
    let b = generate_basis(&f.scenario, &LevelSpec::full(level)).unwrap();
    let t = build_template(&f.scenario, &b).unwrap();
    apply_symmetry(&t, sym, Some(f)).unwrap()
}

fn real(f: &BellFunctional, level: usize) -> MomentTemplate {
    template(f, level, &SymmetrySpec::real())
}

fn value(p: &SdpProblem) -> f64 {
    let r = solve_program(p, &SolverConfig::default()).unwrap();
    assert_eq!(r.status, Status::Optimal, "{}", r.message);
    assert!(r.gap < 1e-7, "gap {}", r.gap);
    r.value.unwrap()
}

#[test]
fn chsh_first_level_bounds() {
    let f = functional("CHSH");
    let t = real(&f, 1);
    assert!((value(&tsirelson(&t, &f).unwrap()) - 2.0 * SQRT2).abs() < 1e-7);
    assert!((value(&ppt_tsirelson(&t, &f, &[vec![0]]).unwrap()) - 2.0).abs() < 1e-7);
    assert!((value(&dimension_witness(&t, &f, 2).unwrap()) - 2.0 * SQRT2).abs() < 1e-7);
}

#[test]
fn chsh_negativity_endpoints() {
    let f = functional("CHSH");
    let t = real(&f, 3);
    assert!(value(&negativity(&t, &f, 2.0).unwrap()).abs() < 1e-6);
    assert!((value(&negativity(&t, &f, 2.0 * SQRT2).unwrap()) - 0.5).abs() < 1e-6);
}

#[test]
fn super_quantum_value_is_infeasible_with_note() {
    let f = functional("CHSH");
    let t = real(&f, 1);
    let p = negativity(&t, &f, 3.0).unwrap();
    let r = solve_program(&p, &SolverConfig::default()).unwrap();
    assert_eq!(r.status, Status::PrimalInfeasible);
    assert!(r.value.is_none());
    let p = negativity(&t, &f, 100.0).unwrap();
    assert!(p.notes.iter().any(|n| n.contains("exceeds")));
}

#[test]
fn marginal_functional_mixture_reaches_algebraic_maximum() {
    let sc = Scenario::uniform(3, 2, 2).unwrap();
    let mut c = vec![0.0; sc.cg_len()];
    for party in 0..3 {
        let mut locals = vec![0; 3];
        locals[party] = 1 + sc.local_index(party, 0, 0).unwrap();
        c[sc.cg_index(&locals)] = 1.0;
    }
    let f = BellFunctional::from_collins_gisin("marginals", sc, c).unwrap();
    let t = real(&f, 1);
    assert!((value(&ppt_mixture(&t, &f).unwrap()) - 3.0).abs() < 1e-6);
}

#[test]
fn program_errors() {
    let chsh = functional("CHSH");
    let i32 = functional("I32");
    let t2 = real(&chsh, 1);
    let t3 = real(&i32, 1);
    assert!(matches!(
        tsirelson(&t2, &i32),
        Err(ProgramError::Mismatch(_))
    ));
    assert!(matches!(
        ppt_tsirelson(&t2, &chsh, &[]),
        Err(ProgramError::NoPartitions)
    ));
    assert!(matches!(
        ppt_tsirelson(&t2, &chsh, &[vec![0, 1]]),
        Err(ProgramError::DegeneratePartition(_))
    ));
    assert!(matches!(
        ppt_tsirelson(&t2, &chsh, &[vec![]]),
        Err(ProgramError::DegeneratePartition(_))
    ));
    assert!(matches!(
        negativity(&t3, &i32, 4.0),
        Err(ProgramError::NeedsBipartite(_))
    ));
    assert!(matches!(
        dimension_witness(&t2, &chsh, 1),
        Err(ProgramError::InvalidDimension(1))
    ));
    assert!(matches!(
        ppt_mixture(&t2, &chsh),
        Err(ProgramError::NeedsMultipartite(_))
    ));
    assert!(matches!(
        genuine_negativity(&t2, &chsh, 2.0),
        Err(ProgramError::NeedsMultipartite(_))
    ));
    let ppt = SymmetrySpec {
        real: true,
        ppt_invariant: vec![vec![0]],
        swap: vec![],
    };
    let tp = template(&chsh, 1, &ppt);
    assert!(matches!(
        negativity(&tp, &chsh, 2.0),
        Err(ProgramError::UnsupportedSymmetry(_))
    ));
    assert!(matches!(
        dimension_witness(&tp, &chsh, 2),
        Err(ProgramError::UnsupportedSymmetry(_))
    ));
}

#[test]
fn bounds_are_monotone_in_level() {
    let i3322 = functional("I3322");
    let b1 = value(&tsirelson(&real(&i3322, 1), &i3322).unwrap());
    let b2 = value(&tsirelson(&real(&i3322, 2), &i3322).unwrap());
    assert!(b1 >= b2 - 1e-7, "{b1} < {b2}");
    assert!(b2 > 0.25 && b2 < 0.2509);

    let chsh = functional("CHSH");
    let n: Vec<f64> = (1..=3)
        .map(|l| value(&negativity(&real(&chsh, l), &chsh, 2.5).unwrap()))
        .collect();
    assert!(n[0] <= n[1] + 1e-7 && n[1] <= n[2] + 1e-7, "{n:?}");
}

#[test]
fn symmetry_reductions_leave_values_unchanged() {
    let chsh = functional("CHSH");
    let full = template(&chsh, 2, &SymmetrySpec::default());
    let re = real(&chsh, 2);
    let sw = template(
        &chsh,
        2,
        &SymmetrySpec {
            real: true,
            ppt_invariant: vec![],
            swap: vec![vec![1, 0]],
        },
    );
    assert!(re.real_unknowns() < full.real_unknowns());
    assert!(sw.real_unknowns() < re.real_unknowns());
    let vals: Vec<f64> = [&full, &re, &sw]
        .iter()
        .map(|t| value(&tsirelson(t, &chsh).unwrap()))
        .collect();
    for v in &vals {
        assert!((v - vals[0]).abs() < 1e-7, "{vals:?}");
    }
    let neg: Vec<f64> = [&full, &re, &sw]
        .iter()
        .map(|t| value(&negativity(t, &chsh, 2.6).unwrap()))
        .collect();
    for v in &neg {
        assert!((v - neg[0]).abs() < 1e-7, "{neg:?}");
    }

    let i3322 = functional("I3322");
    let full = template(&i3322, 1, &SymmetrySpec::default());
    let re = real(&i3322, 1);
    assert!(re.real_unknowns() < full.real_unknowns());
    let a = value(&tsirelson(&full, &i3322).unwrap());
    let b = value(&tsirelson(&re, &i3322).unwrap());
    assert!((a - b).abs() < 1e-7, "{a} vs {b}");

    let re = real(&chsh, 2);
    let ppt = template(
        &chsh,
        2,
        &SymmetrySpec {
            real: true,
            ppt_invariant: vec![vec![0]],
            swap: vec![],
        },
    );
    assert!(ppt.real_unknowns() < re.real_unknowns());
    let a = value(&ppt_tsirelson(&re, &chsh, &[vec![0]]).unwrap());
    let b = value(&ppt_tsirelson(&ppt, &chsh, &[vec![0]]).unwrap());
    assert!((a - b).abs() < 1e-7, "{a} vs {b}");
}

#[test]
fn negativity_curve_is_convex() {
    let f = functional("CHSH");
    let t = real(&f, 2);
    let grid: Vec<f64> = (0..7)
        .map(|k| 2.0 + k as f64 * (2.0 * SQRT2 - 2.0) / 6.0)
        .collect();
    let n: Vec<f64> = grid
        .iter()
        .map(|&v| value(&negativity(&t, &f, v).unwrap()))
        .collect();
    for k in 1..n.len() - 1 {
        assert!(n[k] <= 0.5 * (n[k - 1] + n[k + 1]) + 1e-6, "{n:?}");
    }
}

#[test]
fn seesaw_and_models_sit_below_relaxations() {
    let cfg = SeesawConfig {
        restarts: 5,
        ..Default::default()
    };
    for (name, dims) in [("CHSH", vec![2, 2]), ("I3322", vec![2, 2])] {
        let f = functional(name);
        let t = real(&f, if name == "CHSH" { 1 } else { 2 });
        let upper = value(&tsirelson(&t, &f).unwrap());
        let s = seesaw(&f, &dims, &cfg).unwrap();
        assert!(s.value <= upper + 1e-7, "{name}: {} > {upper}", s.value);
    }

    let f = functional("CHSH");
    let t = real(&f, 2);
    let mut rng = ChaCha8Rng::seed_from_u64(7);
    let best = seesaw(&f, &[2, 2], &cfg).unwrap().model;
    let mut models = vec![best];
    models.extend((0..3).map(|_| QuantumModel::random(&f.scenario, &[2, 2], &mut rng)));
    for m in models {
        let v = f.evaluate(&behavior_of(&m).unwrap()).unwrap();
        let actual = negativity_of(&m.state, &m.dims, &[0]).unwrap().value;
        let bound = value(&negativity(&t, &f, v).unwrap());
        assert!(
            bound <= actual + 1e-6,
            "v = {v}: bound {bound} > state negativity {actual}"
        );
    }
}
