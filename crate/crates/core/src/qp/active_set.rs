//! Exact finishing steps: an active-set refinement of approximate primal-dual
//! pairs and a null-space projection of approximate Farkas directions.

use nalgebra::{DMatrix, DVector};

use super::verify::{certificate_is_valid, kkt_residual, solution_is_valid};
use super::{FeasibleSolution, InfeasibilityCertificate, QpProblem, QpSettings};
use crate::Real;

fn inf_norm<T: Real>(v: &DVector<T>) -> T {
    v.iter().fold(T::zero(), |m, x| m.max(x.abs()))
}

/// Solves the equality-constrained KKT system for the working set.
fn solve_working_set<T: Real>(problem: &QpProblem<T>, working: &[usize]) -> Option<(DVector<T>, DVector<T>, DVector<T>)> {
    let n = problem.num_vars();
    let w = working.len();
    let me = problem.num_eq();
    let dim = n + w + me;
    let mut kkt = DMatrix::zeros(dim, dim);
    let mut rhs = DVector::zeros(dim);
    kkt.view_mut((0, 0), (n, n)).copy_from(&problem.hessian);
    for j in 0..n {
        rhs[j] = -problem.linear_cost[j];
    }
    for (r, &i) in working.iter().enumerate() {
        for j in 0..n {
            let g = problem.g_ineq[(i, j)];
            kkt[(n + r, j)] = g;
            kkt[(j, n + r)] = g;
        }
        rhs[n + r] = problem.h_ineq[i];
    }
    for r in 0..me {
        for j in 0..n {
            let a = problem.a_eq[(r, j)];
            kkt[(n + w + r, j)] = a;
            kkt[(j, n + w + r)] = a;
        }
        rhs[n + w + r] = problem.b_eq[r];
    }

    let scale = T::one() + kkt.amax() + inf_norm(&rhs);
    let accept = |sol: &DVector<T>| {
        sol.iter().all(|v| v.is_finite()) && inf_norm(&(&kkt * sol - &rhs)) <= T::lit(1e-10) * scale * (T::one() + inf_norm(sol))
    };
    let mut solution = kkt.clone().lu().solve(&rhs).filter(|s| accept(s));
    if solution.is_none() {
        let svd = kkt.clone().svd(true, true);
        let eps = T::lit(1e-11) * svd.singular_values.max();
        solution = svd.solve(&rhs, eps).ok().filter(|s| accept(s));
    }
    let sol = solution?;
    let z = sol.rows(0, n).into_owned();
    let lambda_w = sol.rows(n, w).into_owned();
    let mu = sol.rows(n + w, me).into_owned();
    Some((z, lambda_w, mu))
}

/// Active-set iteration started from the rows flagged in `initial`. Adds the
/// most violated inactive row or drops the most negative multiplier until the
/// KKT conditions hold.
pub(crate) fn refine_solution<T: Real>(
    problem: &QpProblem<T>,
    initial: &[bool],
    iterations: usize,
    settings: &QpSettings<T>,
) -> Option<FeasibleSolution<T>> {
    let m = problem.num_ineq();
    let mut active: Vec<bool> = initial.to_vec();
    let max_steps = 3 * (m + problem.num_vars()) + 10;
    let tiny = T::lit(1e-10);

    for _ in 0..max_steps {
        let working: Vec<usize> = (0..m).filter(|&i| active[i]).collect();
        let (z, lambda_w, mu) = solve_working_set(problem, &working)?;
        let gz = &problem.g_ineq * &z;

        let mut worst_violation = None;
        let mut worst_value = T::zero();
        for i in 0..m {
            if active[i] {
                continue;
            }
            let excess = gz[i] - problem.h_ineq[i];
            let limit = tiny * (T::one() + problem.h_ineq[i].abs() + gz[i].abs());
            if excess > limit && excess > worst_value {
                worst_value = excess;
                worst_violation = Some(i);
            }
        }
        if let Some(i) = worst_violation {
            active[i] = true;
            continue;
        }

        let lambda_scale = T::one() + inf_norm(&lambda_w);
        let mut most_negative = None;
        let mut most_negative_value = -tiny * lambda_scale;
        for (r, &i) in working.iter().enumerate() {
            if lambda_w[r] < most_negative_value {
                most_negative_value = lambda_w[r];
                most_negative = Some(i);
            }
        }
        if let Some(i) = most_negative {
            active[i] = false;
            continue;
        }

        let mut lambda = DVector::zeros(m);
        for (r, &i) in working.iter().enumerate() {
            lambda[i] = lambda_w[r].max(T::zero());
        }
        let residual = kkt_residual(problem, &z, &lambda, &mu);
        let solution = FeasibleSolution {
            objective: problem.objective(&z),
            z_star: z,
            kkt_residual: residual,
            ineq_multipliers: lambda,
            eq_multipliers: mu,
            iterations,
        };
        return solution_is_valid(problem, &solution, settings).then_some(solution);
    }
    None
}

/// Projects `(y, μ)` restricted to its significant support onto the null
/// space of `[G_Sᵀ Aᵀ]`, alternating with clipping `y ≥ 0`.
pub(crate) fn refine_certificate<T: Real>(
    problem: &QpProblem<T>,
    y0: &DVector<T>,
    mu0: &DVector<T>,
    iterations: usize,
    settings: &QpSettings<T>,
) -> Option<InfeasibilityCertificate<T>> {
    let m = problem.num_ineq();
    let me = problem.num_eq();
    let n = problem.num_vars();
    let y_clipped = y0.map(|v| v.max(T::zero()));
    let norm = inf_norm(&y_clipped).max(inf_norm(mu0));
    if norm <= T::zero() {
        return None;
    }

    let candidate = |y: DVector<T>, mu: DVector<T>| {
        let scale = inf_norm(&y).max(inf_norm(&mu));
        if scale <= T::zero() {
            return None;
        }
        let cert = InfeasibilityCertificate { farkas: y / scale, farkas_eq: mu / scale, iterations };
        certificate_is_valid(problem, &cert, settings).then_some(cert)
    };

    if let Some(cert) = candidate(y_clipped.clone(), mu0.clone()) {
        return Some(cert);
    }

    for threshold in [1e-6, 1e-3, 1e-1] {
        let support: Vec<usize> = (0..m).filter(|&i| y_clipped[i] > T::lit(threshold) * norm).collect();
        let k = support.len() + me;
        if k == 0 || n == 0 {
            continue;
        }
        let mut basis = DMatrix::zeros(n, k);
        for (c, &i) in support.iter().enumerate() {
            for j in 0..n {
                basis[(j, c)] = problem.g_ineq[(i, j)];
            }
        }
        for r in 0..me {
            for j in 0..n {
                basis[(j, support.len() + r)] = problem.a_eq[(r, j)];
            }
        }
        let svd = basis.svd(false, true);
        let v_t = svd.v_t?;
        let sigma_max = svd.singular_values.max();
        let cutoff = T::lit(1e-10) * sigma_max.max(T::one());
        let rows: Vec<usize> = (0..svd.singular_values.len()).filter(|&r| svd.singular_values[r] > cutoff).collect();

        let mut w = DVector::zeros(k);
        for (c, &i) in support.iter().enumerate() {
            w[c] = y_clipped[i];
        }
        for r in 0..me {
            w[support.len() + r] = mu0[r];
        }
        for _ in 0..20 {
            for &r in &rows {
                let row = v_t.row(r);
                let coeff = (row * &w)[0];
                w -= row.transpose() * coeff;
            }
            for c in 0..support.len() {
                w[c] = w[c].max(T::zero());
            }
            let mut y = DVector::zeros(m);
            for (c, &i) in support.iter().enumerate() {
                y[i] = w[c];
            }
            let mu = w.rows(support.len(), me).into_owned();
            if let Some(cert) = candidate(y, mu) {
                return Some(cert);
            }
        }
    }
    None
}
