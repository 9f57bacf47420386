//! Dense convex QP solver with a three-way outcome.
//!
//! Problems have the form
//!
//! ```text
//!     minimize    ½ zᵀ P z + qᵀ z
//!     subject to  G z ≤ h
//!                 A z = b
//! ```
//!
//! A run ends with a solution whose KKT conditions have been re-verified, a
//! Farkas certificate proving the constraints inconsistent, or an iteration
//! cap report. The iterations are ADMM (operator splitting); candidate
//! solutions are finished by an exact active-set refinement and candidate
//! certificates by a null-space projection, and nothing is returned as
//! `Feasible`/`Infeasible` unless [`check_certificate_with`] accepts it.

mod active_set;
mod admm;
mod verify;

pub use verify::{check_certificate, check_certificate_with, kkt_residual};

use nalgebra::{DMatrix, DVector};
use thiserror::Error;

use crate::Real;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum QpError {
    #[error("dimension mismatch: {0}")]
    Dimension(String),
    #[error("hessian is not symmetric (max asymmetry {0:e})")]
    Asymmetric(f64),
    #[error("problem data must be finite")]
    NonFinite,
}

#[derive(Debug, Clone, PartialEq)]
pub struct QpProblem<T: Real> {
    pub hessian: DMatrix<T>,
    pub linear_cost: DVector<T>,
    pub g_ineq: DMatrix<T>,
    pub h_ineq: DVector<T>,
    /// Equality block; zero rows when absent.
    pub a_eq: DMatrix<T>,
    pub b_eq: DVector<T>,
}

impl<T: Real> QpProblem<T> {
    /// Inequality-constrained problem. `g_ineq` may have zero rows.
    pub fn new(
        hessian: DMatrix<T>,
        linear_cost: DVector<T>,
        g_ineq: DMatrix<T>,
        h_ineq: DVector<T>,
    ) -> Result<Self, QpError> {
        let n = linear_cost.len();
        let problem = Self {
            hessian,
            linear_cost,
            g_ineq,
            h_ineq,
            a_eq: DMatrix::zeros(0, n),
            b_eq: DVector::zeros(0),
        };
        problem.validate()?;
        Ok(problem)
    }

    pub fn with_equalities(mut self, a_eq: DMatrix<T>, b_eq: DVector<T>) -> Result<Self, QpError> {
        self.a_eq = a_eq;
        self.b_eq = b_eq;
        self.validate()?;
        Ok(self)
    }

    pub fn num_vars(&self) -> usize {
        self.linear_cost.len()
    }

    pub fn num_ineq(&self) -> usize {
        self.h_ineq.len()
    }

    pub fn num_eq(&self) -> usize {
        self.b_eq.len()
    }

    pub fn objective(&self, z: &DVector<T>) -> T {
        (z.dot(&(&self.hessian * z))) * T::lit(0.5) + self.linear_cost.dot(z)
    }

    /// Same constraints with the cost multiplied by `alpha`.
    pub fn scaled_cost(&self, alpha: T) -> Self {
        Self { hessian: &self.hessian * alpha, linear_cost: &self.linear_cost * alpha, ..self.clone() }
    }

    /// Appends one inequality row `g·z ≤ h`.
    pub fn with_extra_inequality(&self, g: &DVector<T>, h: T) -> Self {
        let m = self.num_ineq();
        let n = self.num_vars();
        let mut g_ineq = DMatrix::zeros(m + 1, n);
        g_ineq.view_mut((0, 0), (m, n)).copy_from(&self.g_ineq);
        g_ineq.row_mut(m).copy_from(&g.transpose());
        let mut h_ineq = DVector::zeros(m + 1);
        h_ineq.rows_mut(0, m).copy_from(&self.h_ineq);
        h_ineq[m] = h;
        Self { g_ineq, h_ineq, ..self.clone() }
    }

    pub fn validate(&self) -> Result<(), QpError> {
        let n = self.num_vars();
        if self.hessian.shape() != (n, n) {
            return Err(QpError::Dimension(format!("hessian is {:?}, expected {n}x{n}", self.hessian.shape())));
        }
        if self.g_ineq.ncols() != n || self.g_ineq.nrows() != self.h_ineq.len() {
            return Err(QpError::Dimension(format!(
                "inequality block is {:?} with {} bounds",
                self.g_ineq.shape(),
                self.h_ineq.len()
            )));
        }
        if self.a_eq.ncols() != n || self.a_eq.nrows() != self.b_eq.len() {
            return Err(QpError::Dimension(format!(
                "equality block is {:?} with {} right-hand sides",
                self.a_eq.shape(),
                self.b_eq.len()
            )));
        }
        let finite = self.hessian.iter().all(|v| v.is_finite())
            && self.linear_cost.iter().all(|v| v.is_finite())
            && self.g_ineq.iter().all(|v| v.is_finite())
            && self.h_ineq.iter().all(|v| v.is_finite())
            && self.a_eq.iter().all(|v| v.is_finite())
            && self.b_eq.iter().all(|v| v.is_finite());
        if !finite {
            return Err(QpError::NonFinite);
        }
        let scale = self.hessian.amax().max(T::one());
        let asym = (&self.hessian - self.hessian.transpose()).amax();
        if asym > T::lit(1e-12) * scale {
            return Err(QpError::Asymmetric(asym.as_f64()));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct QpSettings<T> {
    /// Absolute and relative tolerance on primal feasibility, stationarity
    /// and complementarity.
    pub tolerance: T,
    /// Relative bound on `‖Gᵀy + Aᵀμ‖∞ / ‖(y, μ)‖∞` for a certificate.
    pub certificate_tolerance: T,
    /// Required `-(hᵀy + bᵀμ) / ‖(y, μ)‖∞` for a certificate.
    pub certificate_margin: T,
    pub max_iter: usize,
    pub rho: T,
    pub sigma: T,
    pub alpha: T,
    pub check_interval: usize,
    pub scaling_iterations: usize,
    pub adaptive_rho: bool,
}

impl<T: Real> Default for QpSettings<T> {
    fn default() -> Self {
        Self {
            tolerance: T::lit(1e-6),
            certificate_tolerance: T::lit(1e-6),
            certificate_margin: T::lit(1e-8),
            max_iter: 20_000,
            rho: T::lit(0.1),
            sigma: T::lit(1e-6),
            alpha: T::lit(1.6),
            check_interval: 10,
            scaling_iterations: 10,
            adaptive_rho: true,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct FeasibleSolution<T: Real> {
    pub z_star: DVector<T>,
    pub objective: T,
    /// Largest KKT residual, each normalized by `1 + scale` of its terms.
    pub kkt_residual: T,
    pub ineq_multipliers: DVector<T>,
    pub eq_multipliers: DVector<T>,
    pub iterations: usize,
}

#[derive(Debug, Clone, PartialEq)]
pub struct InfeasibilityCertificate<T: Real> {
    /// Nonnegative multipliers of `G z ≤ h`, normalized to unit max-norm
    /// together with `farkas_eq`.
    pub farkas: DVector<T>,
    /// Free multipliers of `A z = b`.
    pub farkas_eq: DVector<T>,
    pub iterations: usize,
}

#[derive(Debug, Clone, PartialEq)]
pub struct IterationReport<T: Real> {
    pub primal_residual: T,
    pub dual_residual: T,
    pub iterations: usize,
    pub z: DVector<T>,
}

#[derive(Debug, Clone, PartialEq)]
pub enum QpOutcome<T: Real> {
    Feasible(FeasibleSolution<T>),
    Infeasible(InfeasibilityCertificate<T>),
    MaxIter(IterationReport<T>),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum QpStatus {
    Feasible,
    Infeasible,
    MaxIter,
}

impl QpStatus {
    pub fn as_str(self) -> &'static str {
        match self {
            QpStatus::Feasible => "feasible",
            QpStatus::Infeasible => "infeasible",
            QpStatus::MaxIter => "max_iter",
        }
    }
}

impl<T: Real> QpOutcome<T> {
    pub fn status(&self) -> QpStatus {
        match self {
            QpOutcome::Feasible(_) => QpStatus::Feasible,
            QpOutcome::Infeasible(_) => QpStatus::Infeasible,
            QpOutcome::MaxIter(_) => QpStatus::MaxIter,
        }
    }

    pub fn iterations(&self) -> usize {
        match self {
            QpOutcome::Feasible(s) => s.iterations,
            QpOutcome::Infeasible(c) => c.iterations,
            QpOutcome::MaxIter(r) => r.iterations,
        }
    }

    pub fn solution(&self) -> Option<&FeasibleSolution<T>> {
        match self {
            QpOutcome::Feasible(s) => Some(s),
            _ => None,
        }
    }

    pub fn is_feasible(&self) -> bool {
        matches!(self, QpOutcome::Feasible(_))
    }
}

/// Solves `problem`. Deterministic for identical inputs and settings.
pub fn solve<T: Real>(problem: &QpProblem<T>, settings: &QpSettings<T>) -> QpOutcome<T> {
    admm::Admm::new(problem, settings).run()
}

#[cfg(test)]
mod tests;
