use nalgebra::{dmatrix, dvector, DMatrix, DVector};
use proptest::prelude::*;

use super::*;

fn farkas_example() -> QpProblem<f64> {
    // z ≤ -1 together with z ≥ 1.
    QpProblem::new(dmatrix![1.0], dvector![0.0], dmatrix![1.0; -1.0], dvector![-1.0, -1.0]).unwrap()
}

#[test]
fn reports_farkas_certificate_for_contradictory_bounds() {
    let problem = farkas_example();
    let outcome = solve(&problem, &QpSettings::default());
    let QpOutcome::Infeasible(cert) = &outcome else { panic!("expected infeasible, got {outcome:?}") };
    assert!((cert.farkas[0] - 1.0).abs() < 1e-9);
    assert!((cert.farkas[1] - 1.0).abs() < 1e-9);
    assert!(check_certificate(&problem, &outcome));
}

#[test]
fn unconstrained_and_bounded_parabola() {
    // ½·2z² − 2z = (z − 1)² − 1
    let free = QpProblem::<f64>::new(dmatrix![2.0], dvector![-2.0], DMatrix::zeros(0, 1), DVector::zeros(0)).unwrap();
    let outcome = solve(&free, &QpSettings::default());
    let sol = outcome.solution().expect("feasible");
    assert!((sol.z_star[0] - 1.0).abs() < 1e-9);
    assert!((sol.objective + 1.0).abs() < 1e-9);
    assert!(check_certificate(&free, &outcome));

    let bounded = QpProblem::<f64>::new(dmatrix![2.0], dvector![-2.0], dmatrix![1.0], dvector![0.5]).unwrap();
    let outcome = solve(&bounded, &QpSettings::default());
    let sol = outcome.solution().expect("feasible");
    assert!((sol.z_star[0] - 0.5).abs() < 1e-9);
    assert!((sol.ineq_multipliers[0] - 1.0).abs() < 1e-9);
    assert!(check_certificate(&bounded, &outcome));
}

#[test]
fn equality_constraints_are_honoured() {
    // minimize z1² + z2² subject to z1 + z2 = 2, z1 ≤ 0.5
    let problem = QpProblem::<f64>::new(
        dmatrix![2.0, 0.0; 0.0, 2.0],
        dvector![0.0, 0.0],
        dmatrix![1.0, 0.0],
        dvector![0.5],
    )
    .unwrap()
    .with_equalities(dmatrix![1.0, 1.0], dvector![2.0])
    .unwrap();
    let outcome = solve(&problem, &QpSettings::default());
    let sol = outcome.solution().expect("feasible");
    assert!((sol.z_star[0] - 0.5).abs() < 1e-9);
    assert!((sol.z_star[1] - 1.5).abs() < 1e-9);
    assert!(check_certificate(&problem, &outcome));
}

#[test]
fn contradictory_equalities_are_infeasible() {
    let problem = QpProblem::new(DMatrix::identity(2, 2), DVector::zeros(2), DMatrix::zeros(0, 2), DVector::zeros(0))
        .unwrap()
        .with_equalities(dmatrix![1.0, 1.0; 2.0, 2.0], dvector![1.0, 3.0])
        .unwrap();
    let outcome = solve(&problem, &QpSettings::default());
    assert_eq!(outcome.status(), QpStatus::Infeasible);
    assert!(check_certificate(&problem, &outcome));
}

#[test]
fn tampered_outcomes_are_rejected() {
    let bounded = QpProblem::<f64>::new(dmatrix![2.0], dvector![-2.0], dmatrix![1.0], dvector![0.5]).unwrap();
    let mut outcome = solve(&bounded, &QpSettings::default());
    if let QpOutcome::Feasible(sol) = &mut outcome {
        sol.z_star[0] += 1e-3;
        sol.objective = bounded.objective(&sol.z_star);
    }
    assert!(!check_certificate(&bounded, &outcome));

    let problem = farkas_example();
    let bad = QpOutcome::Infeasible(InfeasibilityCertificate {
        farkas: dvector![1.0, -0.1],
        farkas_eq: DVector::zeros(0),
        iterations: 0,
    });
    assert!(!check_certificate(&problem, &bad));
    let zero = QpOutcome::Infeasible(InfeasibilityCertificate {
        farkas: dvector![0.0, 0.0],
        farkas_eq: DVector::zeros(0),
        iterations: 0,
    });
    assert!(!check_certificate(&problem, &zero));
    let report = QpOutcome::MaxIter(IterationReport { primal_residual: 0.0, dual_residual: 0.0, iterations: 1, z: dvector![0.0] });
    assert!(!check_certificate(&problem, &report));
}

#[test]
fn rejects_malformed_problems() {
    assert!(matches!(
        QpProblem::new(dmatrix![1.0, 2.0; 0.0, 1.0], dvector![0.0, 0.0], DMatrix::zeros(0, 2), DVector::zeros(0)),
        Err(QpError::Asymmetric(_))
    ));
    assert!(matches!(
        QpProblem::new(dmatrix![1.0], dvector![0.0, 0.0], DMatrix::zeros(0, 2), DVector::zeros(0)),
        Err(QpError::Dimension(_))
    ));
    assert!(matches!(
        QpProblem::new(dmatrix![1.0], dvector![f64::NAN], DMatrix::zeros(0, 1), DVector::zeros(0)),
        Err(QpError::NonFinite)
    ));
}

#[test]
fn single_precision_solve() {
    let problem = QpProblem::<f32>::new(dmatrix![2.0], dvector![-2.0], dmatrix![1.0], dvector![0.5]).unwrap();
    let settings = QpSettings { tolerance: 1e-4, certificate_tolerance: 1e-4, ..QpSettings::default() };
    let outcome = solve(&problem, &settings);
    let sol = outcome.solution().expect("feasible");
    assert!((sol.z_star[0] - 0.5).abs() < 1e-4);
}

fn random_problem(n: usize, m: usize, seed: &[f64]) -> QpProblem<f64> {
    let mut it = seed.iter().copied().cycle();
    let l = DMatrix::from_fn(n, n, |_, _| it.next().unwrap());
    let p = &l * l.transpose();
    let p = (&p + p.transpose()) * 0.5;
    let q = DVector::from_fn(n, |_, _| it.next().unwrap());
    let g = DMatrix::from_fn(m, n, |_, _| it.next().unwrap());
    let h = DVector::from_fn(m, |_, _| it.next().unwrap());
    QpProblem::new(p, q, g, h).unwrap()
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn cost_scaling_keeps_minimizer(
        seed in prop::collection::vec(-2.0f64..2.0, 40),
        alpha in 0.1f64..10.0,
    ) {
        // Strictly convex with a box so the minimizer is unique and attained.
        let mut problem = random_problem(3, 2, &seed);
        problem.hessian += DMatrix::identity(3, 3);
        let boxed = (0..3).fold(problem, |p, j| {
            let mut e = DVector::zeros(3);
            e[j] = 1.0;
            p.with_extra_inequality(&e, 5.0).with_extra_inequality(&(-e), 5.0)
        });
        let settings = QpSettings::default();
        let base = solve(&boxed, &settings);
        let scaled = solve(&boxed.scaled_cost(alpha), &settings);
        match (&base, &scaled) {
            (QpOutcome::Feasible(a), QpOutcome::Feasible(b)) => {
                prop_assert!((&a.z_star - &b.z_star).amax() < 1e-6);
                prop_assert!((b.objective - alpha * a.objective).abs() <= 1e-6 * (1.0 + b.objective.abs()));
            }
            (QpOutcome::Infeasible(_), QpOutcome::Infeasible(_)) => {}
            _ => prop_assert!(false, "status changed under cost scaling: {:?} vs {:?}", base.status(), scaled.status()),
        }
        prop_assert!(check_certificate(&boxed, &base));
    }

    #[test]
    fn extra_rows_keep_infeasibility(
        seed in prop::collection::vec(-2.0f64..2.0, 40),
        row in prop::collection::vec(-2.0f64..2.0, 3),
        bound in -2.0f64..2.0,
    ) {
        // a·z ≤ -1 and -a·z ≤ -1 cannot both hold.
        let problem = random_problem(3, 2, &seed);
        let a = DVector::from_vec(vec![1.0 + seed[0].abs(), seed[1], seed[2]]);
        let infeasible = problem.with_extra_inequality(&a, -1.0).with_extra_inequality(&(-&a), -1.0);
        let settings = QpSettings::default();
        let first = solve(&infeasible, &settings);
        prop_assert_eq!(first.status(), QpStatus::Infeasible);
        prop_assert!(check_certificate(&infeasible, &first));
        let tighter = infeasible.with_extra_inequality(&DVector::from_vec(row), bound);
        let second = solve(&tighter, &settings);
        prop_assert_eq!(second.status(), QpStatus::Infeasible);
        prop_assert!(check_certificate(&tighter, &second));
    }
}
