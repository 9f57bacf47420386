use nalgebra::DVector;

use super::{FeasibleSolution, InfeasibilityCertificate, QpOutcome, QpProblem, QpSettings};
use crate::Real;

fn inf_norm<T: Real>(v: &DVector<T>) -> T {
    v.iter().fold(T::zero(), |m, x| m.max(x.abs()))
}

/// Largest KKT residual of `(z, λ, μ)`, each term divided by `1 + scale`
/// where scale is the magnitude of the quantities it compares.
pub fn kkt_residual<T: Real>(
    problem: &QpProblem<T>,
    z: &DVector<T>,
    lambda: &DVector<T>,
    mu: &DVector<T>,
) -> T {
    let gz = &problem.g_ineq * z;
    let az = &problem.a_eq * z;

    let mut primal = T::zero();
    for (g, h) in gz.iter().zip(problem.h_ineq.iter()) {
        primal = primal.max(*g - *h);
    }
    for (a, b) in az.iter().zip(problem.b_eq.iter()) {
        primal = primal.max((*a - *b).abs());
    }
    let primal_scale = inf_norm(&gz).max(inf_norm(&problem.h_ineq)).max(inf_norm(&az)).max(inf_norm(&problem.b_eq));

    let pz = &problem.hessian * z;
    let gl = problem.g_ineq.tr_mul(lambda);
    let am = problem.a_eq.tr_mul(mu);
    let stationarity = inf_norm(&(&pz + &problem.linear_cost + &gl + &am));
    let dual_scale = inf_norm(&pz).max(inf_norm(&problem.linear_cost)).max(inf_norm(&gl)).max(inf_norm(&am));

    let mut complementarity = T::zero();
    let mut dual_sign = T::zero();
    for ((l, g), h) in lambda.iter().zip(gz.iter()).zip(problem.h_ineq.iter()) {
        complementarity = complementarity.max((*l * (*h - *g)).abs());
        dual_sign = dual_sign.max(-*l);
    }
    let lambda_norm = inf_norm(lambda);

    let one = T::one();
    (primal / (one + primal_scale))
        .max(stationarity / (one + dual_scale))
        .max(complementarity / (one + lambda_norm * primal_scale))
        .max(dual_sign / (one + lambda_norm))
}

pub(crate) fn solution_is_valid<T: Real>(
    problem: &QpProblem<T>,
    sol: &FeasibleSolution<T>,
    settings: &QpSettings<T>,
) -> bool {
    let n = problem.num_vars();
    if sol.z_star.len() != n
        || sol.ineq_multipliers.len() != problem.num_ineq()
        || sol.eq_multipliers.len() != problem.num_eq()
    {
        return false;
    }
    if sol.z_star.iter().chain(sol.ineq_multipliers.iter()).chain(sol.eq_multipliers.iter()).any(|v| !v.is_finite()) {
        return false;
    }
    if sol.ineq_multipliers.iter().any(|l| *l < T::zero()) {
        return false;
    }
    let residual = kkt_residual(problem, &sol.z_star, &sol.ineq_multipliers, &sol.eq_multipliers);
    if residual > settings.tolerance {
        return false;
    }
    let objective = problem.objective(&sol.z_star);
    (objective - sol.objective).abs() <= settings.tolerance * (T::one() + objective.abs())
}

pub(crate) fn certificate_is_valid<T: Real>(
    problem: &QpProblem<T>,
    cert: &InfeasibilityCertificate<T>,
    settings: &QpSettings<T>,
) -> bool {
    if cert.farkas.len() != problem.num_ineq() || cert.farkas_eq.len() != problem.num_eq() {
        return false;
    }
    if cert.farkas.iter().chain(cert.farkas_eq.iter()).any(|v| !v.is_finite()) {
        return false;
    }
    if cert.farkas.iter().any(|y| *y < T::zero()) {
        return false;
    }
    let norm = inf_norm(&cert.farkas).max(inf_norm(&cert.farkas_eq));
    if norm <= T::zero() {
        return false;
    }
    let combination = problem.g_ineq.tr_mul(&cert.farkas) + problem.a_eq.tr_mul(&cert.farkas_eq);
    if inf_norm(&combination) > settings.certificate_tolerance * norm {
        return false;
    }
    let bound = problem.h_ineq.dot(&cert.farkas) + problem.b_eq.dot(&cert.farkas_eq);
    bound <= -settings.certificate_margin * norm
}

/// Re-checks an outcome against the problem data using only matrix-vector
/// products. `MaxIter` carries nothing to verify and is never accepted.
pub fn check_certificate_with<T: Real>(
    problem: &QpProblem<T>,
    outcome: &QpOutcome<T>,
    settings: &QpSettings<T>,
) -> bool {
    match outcome {
        QpOutcome::Feasible(sol) => solution_is_valid(problem, sol, settings),
        QpOutcome::Infeasible(cert) => certificate_is_valid(problem, cert, settings),
        QpOutcome::MaxIter(_) => false,
    }
}

/// [`check_certificate_with`] at the default tolerances.
pub fn check_certificate<T: Real>(problem: &QpProblem<T>, outcome: &QpOutcome<T>) -> bool {
    check_certificate_with(problem, outcome, &QpSettings::default())
}
