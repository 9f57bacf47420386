use nalgebra::{DMatrix, SMatrix, SVector};

use super::{ErrorState, ModelError, RateInput, ReferenceInput, VehicleParams};
use crate::Real;

/// Continuous-time augmented error dynamics `ẋ = A_c x + B_c u + E_c u_ref`.
#[derive(Debug, Clone, PartialEq)]
pub struct ContinuousLti<T: Real> {
    pub a_mat: SMatrix<T, 8, 8>,
    pub b_mat: SMatrix<T, 8, 2>,
    pub e_mat: SMatrix<T, 8, 2>,
}

/// Zero-order-hold discretization of [`ContinuousLti`].
#[derive(Debug, Clone, PartialEq)]
pub struct DiscreteLti<T: Real> {
    pub a_mat: SMatrix<T, 8, 8>,
    pub b_mat: SMatrix<T, 8, 2>,
    pub e_mat: SMatrix<T, 8, 2>,
    pub ts: T,
}

impl<T: Real> DiscreteLti<T> {
    pub fn step_vector(
        &self,
        x: &SVector<T, 8>,
        u: &nalgebra::Vector2<T>,
        r: &nalgebra::Vector2<T>,
    ) -> SVector<T, 8> {
        self.a_mat * x + self.b_mat * u + self.e_mat * r
    }

    pub fn step(
        &self,
        x: &ErrorState<T>,
        u: &RateInput<T>,
        r: &ReferenceInput<T>,
    ) -> ErrorState<T> {
        ErrorState::from_vector(&self.step_vector(&x.to_vector(), &u.to_vector(), &r.to_vector()))
    }
}

/// Lateral/yaw error dynamics linearized at `params.v_x`, with
/// longitudinal station error and two integrators for steering angle and
/// acceleration appended.
///
/// State order is `[e_y, ė_y, e_ψ, ė_ψ, e_x, ė_x, δ, a]`, inputs are
/// `[δ̇, ȧ]`, feed-forward is `[ψ̇_des, a_ref]`. The coefficients follow
/// the standard single-track derivation with per-tire cornering stiffness.
pub fn build_continuous_model<T: Real>(
    params: &VehicleParams<T>,
) -> Result<ContinuousLti<T>, ModelError> {
    params.validate()?;
    let two = T::lit(2.0);
    let VehicleParams { c_alpha_f: cf, c_alpha_r: cr, l_f: lf, l_r: lr, i_z: iz, mass: m, v_x: vx, .. } =
        *params;

    let a = -(two * cf + two * cr) / (m * vx);
    let b = (two * cf + two * cr) / m;
    let c = (two * cr * lr - two * cf * lf) / (m * vx);
    let d = -(two * cf * lf - two * cr * lr) / (iz * vx);
    let e = (two * cf * lf - two * cr * lr) / iz;
    let f = -(two * cf * lf * lf + two * cr * lr * lr) / (iz * vx);
    let g = -(two * cf * lf - two * cr * lr) / (m * vx) - vx;
    let h = -(two * cf * lf * lf + two * cr * lr * lr) / (iz * vx);

    let one = T::one();
    let mut a_mat = SMatrix::<T, 8, 8>::zeros();
    a_mat[(0, 1)] = one;
    a_mat[(1, 1)] = a;
    a_mat[(1, 2)] = b;
    a_mat[(1, 3)] = c;
    a_mat[(2, 3)] = one;
    a_mat[(3, 1)] = d;
    a_mat[(3, 2)] = e;
    a_mat[(3, 3)] = f;
    a_mat[(4, 5)] = one;
    // B_1 block: steering and acceleration act as states of the augmented model.
    a_mat[(1, 6)] = two * cf / m;
    a_mat[(3, 6)] = two * cf * lf / iz;
    a_mat[(5, 7)] = one;

    let mut b_mat = SMatrix::<T, 8, 2>::zeros();
    b_mat[(6, 0)] = one;
    b_mat[(7, 1)] = one;

    let mut e_mat = SMatrix::<T, 8, 2>::zeros();
    e_mat[(1, 0)] = g;
    e_mat[(3, 0)] = h;
    e_mat[(5, 1)] = -one;

    Ok(ContinuousLti { a_mat, b_mat, e_mat })
}

/// Exact zero-order-hold discretization of `ẋ = A x + Σ B_j u_j`.
///
/// Returns `exp(A ts)` and `∫₀^ts exp(A τ) dτ · B_j` for every input block,
/// read off a single exponential of the block matrix `[[A, B_1, ..], [0, 0]]·ts`.
pub fn zoh_blocks<T: Real>(
    a: &DMatrix<T>,
    inputs: &[&DMatrix<T>],
    ts: T,
) -> Result<(DMatrix<T>, Vec<DMatrix<T>>), ModelError> {
    if !(ts.is_finite() && ts > T::zero()) {
        return Err(ModelError::InvalidSampleTime);
    }
    let n = a.nrows();
    let widths: Vec<usize> = inputs.iter().map(|b| b.ncols()).collect();
    let total = n + widths.iter().sum::<usize>();
    let mut block = DMatrix::<T>::zeros(total, total);
    block.view_mut((0, 0), (n, n)).copy_from(&(a * ts));
    let mut col = n;
    for b in inputs {
        block.view_mut((0, col), (n, b.ncols())).copy_from(&(*b * ts));
        col += b.ncols();
    }
    let expm = block.exp();
    if expm.iter().any(|v| !v.is_finite()) {
        return Err(ModelError::NonFinite);
    }
    let phi = expm.view((0, 0), (n, n)).into_owned();
    let mut col = n;
    let mut gammas = Vec::with_capacity(inputs.len());
    for w in widths {
        gammas.push(expm.view((0, col), (n, w)).into_owned());
        col += w;
    }
    Ok((phi, gammas))
}

/// Discretizes the augmented model with sample time `ts`.
pub fn discretize_exact<T: Real>(
    model: &ContinuousLti<T>,
    ts: T,
) -> Result<DiscreteLti<T>, ModelError> {
    let a = DMatrix::from_iterator(8, 8, model.a_mat.iter().copied());
    let b = DMatrix::from_iterator(8, 2, model.b_mat.iter().copied());
    let e = DMatrix::from_iterator(8, 2, model.e_mat.iter().copied());
    let (phi, gammas) = zoh_blocks(&a, &[&b, &e], ts)?;
    Ok(DiscreteLti {
        a_mat: SMatrix::from_iterator(phi.iter().copied()),
        b_mat: SMatrix::from_iterator(gammas[0].iter().copied()),
        e_mat: SMatrix::from_iterator(gammas[1].iter().copied()),
        ts,
    })
}
