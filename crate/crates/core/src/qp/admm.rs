use nalgebra::{Cholesky, DMatrix, DVector, Dyn};

use super::active_set::{refine_certificate, refine_solution};
use super::verify::{kkt_residual, solution_is_valid};
use super::{FeasibleSolution, InfeasibilityCertificate, IterationReport, QpOutcome, QpProblem, QpSettings};
use crate::Real;

fn inf_norm<T: Real>(v: &DVector<T>) -> T {
    v.iter().fold(T::zero(), |m, x| m.max(x.abs()))
}

/// Ruiz-equilibrated copy of the problem with stacked constraint rows
/// `[G; A]`. Original variables are `D·x̄`, original multipliers `E·ȳ / c`.
struct Scaled<T: Real> {
    p: DMatrix<T>,
    q: DVector<T>,
    c: DMatrix<T>,
    u: DVector<T>,
    d: DVector<T>,
    e: DVector<T>,
    cost: T,
}

impl<T: Real> Scaled<T> {
    fn new(problem: &QpProblem<T>, iterations: usize) -> Self {
        let n = problem.num_vars();
        let mi = problem.num_ineq();
        let m = mi + problem.num_eq();
        let mut c = DMatrix::zeros(m, n);
        c.view_mut((0, 0), (mi, n)).copy_from(&problem.g_ineq);
        c.view_mut((mi, 0), (problem.num_eq(), n)).copy_from(&problem.a_eq);
        let mut u = DVector::zeros(m);
        u.rows_mut(0, mi).copy_from(&problem.h_ineq);
        u.rows_mut(mi, problem.num_eq()).copy_from(&problem.b_eq);

        let mut p = problem.hessian.clone();
        let mut q = problem.linear_cost.clone();
        let mut d = DVector::from_element(n, T::one());
        let mut e = DVector::from_element(m, T::one());
        let floor = T::lit(1e-4);
        let ceil = T::lit(1e4);
        let factor = |norm: T| if norm < floor { T::one() } else { T::one() / norm.min(ceil).sqrt() };

        for _ in 0..iterations {
            let dj: Vec<T> = (0..n).map(|j| factor(p.column(j).amax().max(c.column(j).amax()))).collect();
            let ei: Vec<T> = (0..m).map(|i| factor(c.row(i).amax())).collect();
            for j in 0..n {
                for i in 0..n {
                    p[(i, j)] *= dj[i] * dj[j];
                }
                for i in 0..m {
                    c[(i, j)] *= ei[i] * dj[j];
                }
                q[j] *= dj[j];
                d[j] *= dj[j];
            }
            for i in 0..m {
                e[i] *= ei[i];
            }
        }

        let mean_col = if n > 0 { (0..n).map(|j| p.column(j).amax()).fold(T::zero(), |a, b| a + b) / T::lit(n as f64) } else { T::one() };
        let magnitude = mean_col.max(inf_norm(&q));
        let cost = if magnitude < floor { T::one() } else { (T::one() / magnitude).min(ceil) };
        p *= cost;
        q *= cost;
        for i in 0..m {
            u[i] *= e[i];
        }
        Self { p, q, c, u, d, e, cost }
    }
}

pub(crate) struct Admm<'a, T: Real> {
    problem: &'a QpProblem<T>,
    settings: &'a QpSettings<T>,
}

impl<'a, T: Real> Admm<'a, T> {
    pub(crate) fn new(problem: &'a QpProblem<T>, settings: &'a QpSettings<T>) -> Self {
        Self { problem, settings }
    }

    fn factor(&self, s: &Scaled<T>, rho: &DVector<T>) -> Option<Cholesky<T, Dyn>> {
        let n = s.p.nrows();
        let mut sigma = self.settings.sigma;
        for _ in 0..6 {
            let mut k = s.p.clone();
            for j in 0..n {
                k[(j, j)] += sigma;
            }
            let weighted = DMatrix::from_fn(s.c.nrows(), n, |i, j| s.c[(i, j)] * rho[i]);
            k += s.c.tr_mul(&weighted);
            if let Some(ch) = Cholesky::new(k) {
                return Some(ch);
            }
            sigma *= T::lit(100.0);
        }
        None
    }

    fn rho_vector(&self, rho: T) -> DVector<T> {
        let mi = self.problem.num_ineq();
        let m = mi + self.problem.num_eq();
        DVector::from_fn(m, |i, _| if i < mi { rho } else { rho * T::lit(1e3) })
    }

    fn unscale(&self, s: &Scaled<T>, x: &DVector<T>, y: &DVector<T>) -> (DVector<T>, DVector<T>, DVector<T>) {
        let mi = self.problem.num_ineq();
        let me = self.problem.num_eq();
        let z = x.component_mul(&s.d);
        let dual = y.component_mul(&s.e) / s.cost;
        (z, dual.rows(0, mi).into_owned(), dual.rows(mi, me).into_owned())
    }

    fn try_polish(&self, z: &DVector<T>, lambda: &DVector<T>, iterations: usize) -> Option<FeasibleSolution<T>> {
        let gz = &self.problem.g_ineq * z;
        let active: Vec<bool> = (0..self.problem.num_ineq()).map(|i| self.problem.h_ineq[i] - gz[i] < lambda[i]).collect();
        refine_solution(self.problem, &active, iterations, self.settings)
    }

    fn trivial(&self) -> QpOutcome<T> {
        // No decision variables: the constraints read 0 ≤ h and 0 = b.
        let p = self.problem;
        if let Some(i) = (0..p.num_ineq()).find(|&i| p.h_ineq[i] < T::zero()) {
            let mut y = DVector::zeros(p.num_ineq());
            y[i] = T::one();
            return QpOutcome::Infeasible(InfeasibilityCertificate { farkas: y, farkas_eq: DVector::zeros(p.num_eq()), iterations: 0 });
        }
        if let Some(r) = (0..p.num_eq()).find(|&r| p.b_eq[r] != T::zero()) {
            let mut mu = DVector::zeros(p.num_eq());
            mu[r] = -p.b_eq[r].signum();
            return QpOutcome::Infeasible(InfeasibilityCertificate { farkas: DVector::zeros(p.num_ineq()), farkas_eq: mu, iterations: 0 });
        }
        QpOutcome::Feasible(FeasibleSolution {
            z_star: DVector::zeros(0),
            objective: T::zero(),
            kkt_residual: T::zero(),
            ineq_multipliers: DVector::zeros(p.num_ineq()),
            eq_multipliers: DVector::zeros(p.num_eq()),
            iterations: 0,
        })
    }

    pub(crate) fn run(&self) -> QpOutcome<T> {
        let problem = self.problem;
        let settings = self.settings;
        let n = problem.num_vars();
        let mi = problem.num_ineq();
        let m = mi + problem.num_eq();
        if n == 0 {
            return self.trivial();
        }

        let s = Scaled::new(problem, settings.scaling_iterations);
        let mut rho_scalar = settings.rho;
        let mut rho = self.rho_vector(rho_scalar);
        let Some(mut chol) = self.factor(&s, &rho) else {
            return QpOutcome::MaxIter(IterationReport {
                primal_residual: T::lit(f64::INFINITY),
                dual_residual: T::lit(f64::INFINITY),
                iterations: 0,
                z: DVector::zeros(n),
            });
        };

        let alpha = settings.alpha;
        let one_minus_alpha = T::one() - alpha;
        let sigma = settings.sigma;
        let mut x = DVector::zeros(n);
        let mut z = DVector::zeros(m);
        let mut y = DVector::zeros(m);
        let mut y_prev = DVector::zeros(m);
        let check_interval = settings.check_interval.max(1);
        let coarse = T::lit(1e-3);
        let mut last_polish_set: Option<Vec<bool>> = None;
        let mut primal_residual = T::lit(f64::INFINITY);
        let mut dual_residual = T::lit(f64::INFINITY);

        for iter in 1..=settings.max_iter {
            y_prev.copy_from(&y);
            let rhs = &x * sigma - &s.q + s.c.tr_mul(&(rho.component_mul(&z) - &y));
            let x_tilde = chol.solve(&rhs);
            let z_tilde = &s.c * &x_tilde;
            x = &x_tilde * alpha + &x * one_minus_alpha;
            let z_relaxed = &z_tilde * alpha + &z * one_minus_alpha;
            let mut z_next = &z_relaxed + y.component_div(&rho);
            for i in 0..m {
                z_next[i] = if i < mi { z_next[i].min(s.u[i]) } else { s.u[i] };
            }
            y += rho.component_mul(&(&z_relaxed - &z_next));
            z = z_next;

            if iter % check_interval != 0 && iter != settings.max_iter {
                continue;
            }

            // Residuals in original units.
            let cx = &s.c * &x;
            let prim_vec = (&cx - &z).component_div(&s.e);
            primal_residual = inf_norm(&prim_vec);
            let px = &s.p * &x;
            let cty = s.c.tr_mul(&y);
            let dual_vec = (&px + &s.q + &cty).component_div(&s.d) / s.cost;
            dual_residual = inf_norm(&dual_vec);
            let prim_scale = inf_norm(&cx.component_div(&s.e)).max(inf_norm(&z.component_div(&s.e)));
            let dual_scale = inf_norm(&px.component_div(&s.d))
                .max(inf_norm(&cty.component_div(&s.d)))
                .max(inf_norm(&s.q.component_div(&s.d)))
                / s.cost;
            let prim_rel = primal_residual / (T::one() + prim_scale);
            let dual_rel = dual_residual / (T::one() + dual_scale);

            let (z_orig, y_ineq, y_eq) = self.unscale(&s, &x, &y);
            if prim_rel <= settings.tolerance && dual_rel <= settings.tolerance {
                let lambda = y_ineq.map(|v| v.max(T::zero()));
                let candidate = FeasibleSolution {
                    objective: problem.objective(&z_orig),
                    kkt_residual: kkt_residual(problem, &z_orig, &lambda, &y_eq),
                    z_star: z_orig.clone(),
                    ineq_multipliers: lambda.clone(),
                    eq_multipliers: y_eq.clone(),
                    iterations: iter,
                };
                if let Some(polished) = self.try_polish(&z_orig, &lambda, iter) {
                    return QpOutcome::Feasible(polished);
                }
                if solution_is_valid(problem, &candidate, settings) {
                    return QpOutcome::Feasible(candidate);
                }
            } else if prim_rel <= coarse && dual_rel <= coarse {
                let lambda = y_ineq.map(|v| v.max(T::zero()));
                let gz = &problem.g_ineq * &z_orig;
                let guess: Vec<bool> = (0..mi).map(|i| problem.h_ineq[i] - gz[i] < lambda[i]).collect();
                if last_polish_set.as_ref() != Some(&guess) {
                    if let Some(polished) = refine_solution(problem, &guess, iter, settings) {
                        return QpOutcome::Feasible(polished);
                    }
                    last_polish_set = Some(guess);
                }
            }

            // Infeasibility: the dual increment converges to a Farkas direction.
            let dy = &y - &y_prev;
            let dy_orig = dy.component_mul(&s.e);
            let dy_norm = inf_norm(&dy_orig);
            if dy_norm > T::lit(1e-12) && prim_rel > settings.tolerance {
                let mut bound = T::zero();
                for i in 0..m {
                    let u_orig = s.u[i] / s.e[i];
                    bound += if i < mi { u_orig * dy_orig[i].max(T::zero()) } else { u_orig * dy_orig[i] };
                }
                let combo = s.c.tr_mul(&dy).component_div(&s.d);
                if bound < T::zero() && inf_norm(&combo) <= coarse * dy_norm {
                    let y_ineq = dy_orig.rows(0, mi).into_owned();
                    let y_eq = dy_orig.rows(mi, m - mi).into_owned();
                    if let Some(cert) = refine_certificate(problem, &y_ineq, &y_eq, iter, settings) {
                        return QpOutcome::Infeasible(cert);
                    }
                }
            }

            if settings.adaptive_rho && iter % (5 * check_interval) == 0 {
                let tiny = T::lit(1e-30);
                let prim_norm = inf_norm(&(&cx - &z)) / (inf_norm(&cx).max(inf_norm(&z)) + tiny);
                let dual_norm = inf_norm(&(&px + &s.q + &cty)) / (inf_norm(&px).max(inf_norm(&cty)).max(inf_norm(&s.q)) + tiny);
                let ratio = (prim_norm / (dual_norm + tiny)).sqrt();
                let new_rho = (rho_scalar * ratio).max(T::lit(1e-6)).min(T::lit(1e6));
                if new_rho > rho_scalar * T::lit(5.0) || new_rho < rho_scalar * T::lit(0.2) {
                    let candidate_rho = self.rho_vector(new_rho);
                    if let Some(ch) = self.factor(&s, &candidate_rho) {
                        rho_scalar = new_rho;
                        rho = candidate_rho;
                        chol = ch;
                    }
                }
            }
        }

        let (z_orig, y_ineq, _) = self.unscale(&s, &x, &y);
        let lambda = y_ineq.map(|v| v.max(T::zero()));
        if let Some(polished) = self.try_polish(&z_orig, &lambda, settings.max_iter) {
            return QpOutcome::Feasible(polished);
        }
        let dy_orig = (&y - &y_prev).component_mul(&s.e);
        if let Some(cert) =
            refine_certificate(problem, &dy_orig.rows(0, mi).into_owned(), &dy_orig.rows(mi, m - mi).into_owned(), settings.max_iter, settings)
        {
            return QpOutcome::Infeasible(cert);
        }
        QpOutcome::MaxIter(IterationReport { primal_residual, dual_residual, iterations: settings.max_iter, z: z_orig })
    }
}
