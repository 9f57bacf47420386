//! Brute-force QP reference: enumerate every active set, solve its KKT system
//! and keep the best point that is primal feasible with nonnegative
//! multipliers. Only practical for a handful of rows.

use nalgebra::{DMatrix, DVector};
use rand::Rng;
use rand_chacha::ChaCha8Rng;
use sca_core::qp::QpProblem;

pub struct OraclePoint {
    pub z: DVector<f64>,
    pub objective: f64,
}

fn solve_kkt(p: &DMatrix<f64>, q: &DVector<f64>, g: &DMatrix<f64>, h: &DVector<f64>, rows: &[usize]) -> Option<(DVector<f64>, DVector<f64>)> {
    let n = q.len();
    let k = rows.len();
    let mut kkt = DMatrix::zeros(n + k, n + k);
    let mut rhs = DVector::zeros(n + k);
    kkt.view_mut((0, 0), (n, n)).copy_from(p);
    rhs.rows_mut(0, n).copy_from(&(-q));
    for (r, &i) in rows.iter().enumerate() {
        for j in 0..n {
            kkt[(n + r, j)] = g[(i, j)];
            kkt[(j, n + r)] = g[(i, j)];
        }
        rhs[n + r] = h[i];
    }
    let svd = kkt.clone().svd(true, true);
    let sol = svd.solve(&rhs, 1e-12 * svd.singular_values.max().max(1.0)).ok()?;
    let residual = (&kkt * &sol - &rhs).amax();
    if residual > 1e-9 * (1.0 + rhs.amax()) {
        return None;
    }
    Some((sol.rows(0, n).into_owned(), sol.rows(n, k).into_owned()))
}

/// Optimal point of an inequality-only QP, or `None` when no active set
/// yields a KKT point (infeasible or unbounded).
pub fn enumerate(problem: &QpProblem<f64>) -> Option<OraclePoint> {
    let m = problem.num_ineq();
    let (p, q, g, h) = (&problem.hessian, &problem.linear_cost, &problem.g_ineq, &problem.h_ineq);
    let mut best: Option<OraclePoint> = None;
    for mask in 0u32..(1 << m) {
        let rows: Vec<usize> = (0..m).filter(|i| mask & (1 << i) != 0).collect();
        let Some((z, lambda)) = solve_kkt(p, q, g, h, &rows) else { continue };
        if lambda.iter().any(|&l| l < -1e-10) {
            continue;
        }
        let gz = g * &z;
        if (0..m).any(|i| gz[i] - h[i] > 1e-9 * (1.0 + h[i].abs())) {
            continue;
        }
        let objective = problem.objective(&z);
        if best.as_ref().is_none_or(|b| objective < b.objective) {
            best = Some(OraclePoint { z, objective });
        }
    }
    best
}

/// Random convex QP with a feasible interior point and a dual-feasible
/// linear term, so the optimum is attained. The Hessian may be singular.
pub fn random_bounded_qp(rng: &mut ChaCha8Rng, n: usize, m: usize) -> (QpProblem<f64>, bool) {
    let rank = rng.random_range(1..=n);
    let l = DMatrix::from_fn(n, rank, |_, _| rng.random_range(-2.0..2.0));
    let p = &l * l.transpose();
    let p = (&p + p.transpose()) * 0.5;
    let g = DMatrix::from_fn(m, n, |_, _| rng.random_range(-2.0..2.0));
    let z0 = DVector::from_fn(n, |_, _| rng.random_range(-1.0..1.0));
    let slack = DVector::from_fn(m, |_, _| if rng.random_bool(0.4) { 0.0 } else { rng.random_range(0.0..2.0) });
    let h = &g * &z0 + slack;
    let w = DVector::from_fn(n, |_, _| rng.random_range(-3.0..3.0));
    let nu = DVector::from_fn(m, |_, _| if rng.random_bool(0.5) { 0.0 } else { rng.random_range(0.0..2.0) });
    let q = -(&p * &w) - g.transpose() * &nu;
    (QpProblem::new(p, q, g, h).unwrap(), rank == n)
}

/// Random QP whose rows contain `a·z ≤ c` and `-a·z ≤ -c - gap` for a
/// positive gap, plus random extra rows.
pub fn random_infeasible_qp(rng: &mut ChaCha8Rng, n: usize, m: usize) -> QpProblem<f64> {
    let l = DMatrix::from_fn(n, n, |_, _| rng.random_range(-1.0..1.0));
    let p = &l * l.transpose();
    let p = (&p + p.transpose()) * 0.5;
    let q = DVector::from_fn(n, |_, _| rng.random_range(-2.0..2.0));
    let mut g = DMatrix::from_fn(m, n, |_, _| rng.random_range(-2.0..2.0));
    let mut h = DVector::from_fn(m, |_, _| rng.random_range(-1.0..2.0));
    let a = DVector::from_fn(n, |_, _| rng.random_range(-2.0..2.0));
    let c = rng.random_range(-1.0..1.0);
    let gap = rng.random_range(0.05..2.0);
    let (i, j) = (rng.random_range(0..m), rng.random_range(0..m - 1));
    let j = if j >= i { j + 1 } else { j };
    let scale = rng.random_range(0.2..3.0);
    g.row_mut(i).copy_from(&a.transpose());
    h[i] = c;
    g.row_mut(j).copy_from(&(-&a * scale).transpose());
    h[j] = (-c - gap) * scale;
    QpProblem::new(p, q, g, h).unwrap()
}
