use nalgebra::{DMatrix, DVector};

use super::{MpcConfig, PolytopeSpec, SupervisorError};
use crate::qp::QpProblem;
use crate::vehicle::{DiscreteLti, ErrorState, ReferenceInput};
use crate::Real;

/// Finite-horizon linear-quadratic problem of arbitrary dimensions:
///
/// ```text
///     minimize    Σ_{i=1..N} x_iᵀ Q x_i + Σ_{j=0..N-1} u_jᵀ R u_j
///     subject to  x_{i+1} = A x_i + B u_i + E r_i,  x_0 given
///                 Gˣ x_i ≤ hˣ_i  (i = 0..=N),  Gᵘ u_j ≤ hᵘ
/// ```
///
/// Non-finite entries of `h_state` mark rows that do not apply.
#[derive(Debug, Clone, PartialEq)]
pub struct LinearHorizon<T: Real> {
    pub a: DMatrix<T>,
    pub b: DMatrix<T>,
    pub e: DMatrix<T>,
    pub q: DMatrix<T>,
    pub r: DMatrix<T>,
    pub x0: DVector<T>,
    /// `N` feed-forward vectors.
    pub refs: Vec<DVector<T>>,
    pub g_state: DMatrix<T>,
    /// `N + 1` bound vectors.
    pub h_state: Vec<DVector<T>>,
    pub g_input: DMatrix<T>,
    pub h_input: DVector<T>,
}

impl<T: Real> LinearHorizon<T> {
    pub fn horizon(&self) -> usize {
        self.refs.len()
    }

    fn validate(&self) -> Result<(), SupervisorError> {
        let n = self.a.nrows();
        let nu = self.b.ncols();
        let nr = self.e.ncols();
        let ok = self.a.ncols() == n
            && self.b.nrows() == n
            && self.e.nrows() == n
            && self.q.shape() == (n, n)
            && self.r.shape() == (nu, nu)
            && self.x0.len() == n
            && self.refs.iter().all(|r| r.len() == nr)
            && self.g_state.ncols() == n
            && self.h_state.len() == self.refs.len() + 1
            && self.h_state.iter().all(|h| h.len() == self.g_state.nrows())
            && self.g_input.ncols() == nu
            && self.h_input.len() == self.g_input.nrows();
        if !ok {
            return Err(SupervisorError::Dimension("inconsistent horizon data".into()));
        }
        if self.refs.is_empty() {
            return Err(SupervisorError::InvalidConfig("horizon must be at least one step"));
        }
        Ok(())
    }
}

/// Input-only QP equivalent to a [`LinearHorizon`], with the predictor
/// `X = free_response + input_response · U` (states `x_0..x_N` stacked).
#[derive(Debug, Clone, PartialEq)]
pub struct CondensedProblem<T: Real> {
    pub qp: QpProblem<T>,
    /// Constant dropped from the cost; `qp.objective(U) + objective_offset`
    /// is the horizon cost.
    pub objective_offset: T,
    pub free_response: DVector<T>,
    pub input_response: DMatrix<T>,
    pub state_dim: usize,
}

impl<T: Real> CondensedProblem<T> {
    pub fn horizon_cost(&self, u: &DVector<T>) -> T {
        self.qp.objective(u) + self.objective_offset
    }

    /// Predicted states `x_0..x_N` for the stacked input sequence `u`.
    pub fn predict(&self, u: &DVector<T>) -> Vec<DVector<T>> {
        let x = &self.free_response + &self.input_response * u;
        x.as_slice().chunks(self.state_dim).map(DVector::from_column_slice).collect()
    }
}

pub fn condense_horizon<T: Real>(data: &LinearHorizon<T>) -> Result<CondensedProblem<T>, SupervisorError> {
    data.validate()?;
    let n = data.a.nrows();
    let nu = data.b.ncols();
    let horizon = data.horizon();
    let nz = nu * horizon;

    // Free response and input-to-state map for x_0..x_N.
    let mut free = DVector::zeros(n * (horizon + 1));
    let mut gamma = DMatrix::zeros(n * (horizon + 1), nz);
    free.rows_mut(0, n).copy_from(&data.x0);
    for i in 0..horizon {
        let prev = free.rows(i * n, n).into_owned();
        let next = &data.a * prev + &data.e * &data.refs[i];
        free.rows_mut((i + 1) * n, n).copy_from(&next);
        let prev_block = gamma.view((i * n, 0), (n, nz)).into_owned();
        let mut next_block = &data.a * prev_block;
        next_block.view_mut((0, i * nu), (n, nu)).copy_from(&data.b);
        gamma.view_mut(((i + 1) * n, 0), (n, nz)).copy_from(&next_block);
    }

    let mut hessian = DMatrix::zeros(nz, nz);
    let mut linear = DVector::zeros(nz);
    let mut offset = T::zero();
    for i in 1..=horizon {
        let gi = gamma.view((i * n, 0), (n, nz));
        let ci = free.rows(i * n, n);
        let qg = &data.q * gi;
        hessian += gi.transpose() * &qg;
        let qc = &data.q * ci;
        linear += gi.transpose() * &qc;
        offset += ci.dot(&qc);
    }
    for j in 0..horizon {
        let mut block = hessian.view_mut((j * nu, j * nu), (nu, nu));
        block += &data.r;
    }
    let two = T::lit(2.0);
    hessian *= two;
    linear *= two;
    let hessian = (&hessian + hessian.transpose()) * T::lit(0.5);

    let mut rows: Vec<(DVector<T>, T)> = Vec::new();
    for (i, h) in data.h_state.iter().enumerate() {
        let gi = gamma.view((i * n, 0), (n, nz));
        let ci = free.rows(i * n, n);
        let gx_gamma = &data.g_state * gi;
        let gx_c = &data.g_state * ci;
        for r in 0..data.g_state.nrows() {
            if !h[r].is_finite() {
                continue;
            }
            let coeffs = gx_gamma.row(r).transpose();
            let bound = h[r] - gx_c[r];
            // Rows that no input can influence are kept only when violated,
            // so an unsafe initial state still makes the problem infeasible.
            if coeffs.iter().all(|c| *c == T::zero()) && bound >= T::zero() {
                continue;
            }
            rows.push((coeffs, bound));
        }
    }
    for j in 0..horizon {
        for r in 0..data.g_input.nrows() {
            let mut coeffs = DVector::zeros(nz);
            for c in 0..nu {
                coeffs[j * nu + c] = data.g_input[(r, c)];
            }
            rows.push((coeffs, data.h_input[r]));
        }
    }
    let mut g = DMatrix::zeros(rows.len(), nz);
    let mut h = DVector::zeros(rows.len());
    for (k, (coeffs, bound)) in rows.into_iter().enumerate() {
        g.row_mut(k).copy_from(&coeffs.transpose());
        h[k] = bound;
    }

    let qp = QpProblem::new(hessian, linear, g, h)?;
    Ok(CondensedProblem { qp, objective_offset: offset, free_response: free, input_response: gamma, state_dim: n })
}

/// [`condense_horizon`] for the vehicle error model.
pub fn condense<T: Real>(
    model: &DiscreteLti<T>,
    config: &MpcConfig<T>,
    x0: &ErrorState<T>,
    refs: &[ReferenceInput<T>],
    constraints: &PolytopeSpec<T>,
) -> Result<CondensedProblem<T>, SupervisorError> {
    if refs.len() != config.horizon || constraints.h_state.len() != config.horizon + 1 {
        return Err(SupervisorError::Dimension(format!(
            "expected {} references and {} state bounds, got {} and {}",
            config.horizon,
            config.horizon + 1,
            refs.len(),
            constraints.h_state.len()
        )));
    }
    let data = LinearHorizon {
        a: DMatrix::from_column_slice(8, 8, model.a_mat.as_slice()),
        b: DMatrix::from_column_slice(8, 2, model.b_mat.as_slice()),
        e: DMatrix::from_column_slice(8, 2, model.e_mat.as_slice()),
        q: DMatrix::from_column_slice(8, 8, config.q_weight.as_slice()),
        r: DMatrix::from_column_slice(2, 2, config.r_weight.as_slice()),
        x0: DVector::from_column_slice(x0.to_vector().as_slice()),
        refs: refs.iter().map(|r| DVector::from_column_slice(r.to_vector().as_slice())).collect(),
        g_state: DMatrix::from_column_slice(5, 8, constraints.g_state.as_slice()),
        h_state: constraints.h_state.iter().map(|h| DVector::from_column_slice(h.as_slice())).collect(),
        g_input: DMatrix::from_column_slice(4, 2, constraints.g_input.as_slice()),
        h_input: DVector::from_column_slice(constraints.h_input.as_slice()),
    };
    condense_horizon(&data)
}
