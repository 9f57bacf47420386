//! The horizon problem with the states kept as decision variables, and a
//! generator of random vehicle horizon instances.

use nalgebra::{DMatrix, DVector};
use rand::Rng;
use sca_core::qp::QpProblem;
use sca_core::supervisor::{build_horizon_constraints, LinearHorizon, MpcConfig, ObstacleSpec, PassingSide, VehicleFootprint};
use sca_core::vehicle::{build_continuous_model, discretize_exact, VehicleParams};

/// Sparse QP over `[u_0..u_{N-1}, x_1..x_N]`, or `None` when a row on the
/// fixed `x_0` is already violated (no choice of variables can help).
pub fn sparse_problem(h: &LinearHorizon<f64>) -> Option<QpProblem<f64>> {
    let n = h.a.nrows();
    let nu = h.b.ncols();
    let big_n = h.refs.len();
    let nzu = nu * big_n;
    let nz = nzu + n * big_n;
    let x_col = |i: usize| nzu + (i - 1) * n;

    let g0 = &h.g_state * &h.x0;
    for r in 0..h.g_state.nrows() {
        if h.h_state[0][r].is_finite() && g0[r] > h.h_state[0][r] {
            return None;
        }
    }

    let mut p = DMatrix::zeros(nz, nz);
    for j in 0..big_n {
        p.view_mut((j * nu, j * nu), (nu, nu)).copy_from(&(&h.r * 2.0));
    }
    for i in 1..=big_n {
        p.view_mut((x_col(i), x_col(i)), (n, n)).copy_from(&(&h.q * 2.0));
    }

    let mut a_eq = DMatrix::zeros(n * big_n, nz);
    let mut b_eq = DVector::zeros(n * big_n);
    for i in 0..big_n {
        let row = i * n;
        // x_{i+1} − A x_i − B u_i = E r_i (+ A x_0 when i = 0)
        a_eq.view_mut((row, x_col(i + 1)), (n, n)).copy_from(&DMatrix::identity(n, n));
        a_eq.view_mut((row, i * nu), (n, nu)).copy_from(&(-&h.b));
        let mut rhs = &h.e * &h.refs[i];
        if i == 0 {
            rhs += &h.a * &h.x0;
        } else {
            a_eq.view_mut((row, x_col(i)), (n, n)).copy_from(&(-&h.a));
        }
        b_eq.rows_mut(row, n).copy_from(&rhs);
    }

    let mut rows: Vec<(DVector<f64>, f64)> = Vec::new();
    for i in 1..=big_n {
        for r in 0..h.g_state.nrows() {
            let bound = h.h_state[i][r];
            if !bound.is_finite() {
                continue;
            }
            let mut coeffs = DVector::zeros(nz);
            for c in 0..n {
                coeffs[x_col(i) + c] = h.g_state[(r, c)];
            }
            rows.push((coeffs, bound));
        }
    }
    for j in 0..big_n {
        for r in 0..h.g_input.nrows() {
            let mut coeffs = DVector::zeros(nz);
            for c in 0..nu {
                coeffs[j * nu + c] = h.g_input[(r, c)];
            }
            rows.push((coeffs, h.h_input[r]));
        }
    }
    let mut g = DMatrix::zeros(rows.len(), nz);
    let mut hv = DVector::zeros(rows.len());
    for (k, (c, b)) in rows.into_iter().enumerate() {
        g.row_mut(k).copy_from(&c.transpose());
        hv[k] = b;
    }
    Some(QpProblem::new(p, DVector::zeros(nz), g, hv).unwrap().with_equalities(a_eq, b_eq).unwrap())
}

/// Vehicle horizon with a random speed, horizon length, initial error,
/// road curvature, obstacle placement and margin.
pub fn random_vehicle_horizon(rng: &mut impl Rng) -> LinearHorizon<f64> {
    let speed = rng.random_range(5.0..20.0);
    let params = VehicleParams::passenger_car().with_speed(speed);
    let config = MpcConfig::<f64> { horizon: rng.random_range(2..=10), ..MpcConfig::default() };
    let model = discretize_exact(&build_continuous_model(&params).unwrap(), config.ts).unwrap();
    let limits = config.limits;

    let x0 = DVector::from_vec(vec![
        rng.random_range(-0.5..0.5),
        rng.random_range(-1.0..1.0),
        rng.random_range(-0.1..0.1),
        rng.random_range(-0.3..0.3),
        rng.random_range(-0.5..0.5),
        rng.random_range(-0.5..0.5),
        rng.random_range(limits.delta_min..limits.delta_max) * 0.5,
        rng.random_range(limits.accel_min..limits.accel_max) * 0.5,
    ]);
    let curvature = rng.random_range(-0.02..0.02);
    let refs = (0..config.horizon).map(|_| DVector::from_vec(vec![curvature * speed, 0.0])).collect();

    let side = if rng.random_bool(0.5) { PassingSide::Right } else { PassingSide::Left };
    let s_start = rng.random_range(2.0..speed * config.ts * config.horizon as f64 + 4.0);
    let obstacle = ObstacleSpec::new(s_start, s_start + rng.random_range(1.0..6.0), rng.random_range(0.5..3.0), side).unwrap();
    let footprint = VehicleFootprint { front: params.l_f, rear: params.l_r, width: params.veh_width };
    let margin = rng.random_range(0.0..1.0);
    let spec = build_horizon_constraints(Some(&obstacle), 0.0, speed, &footprint, margin, &config).unwrap();

    let dm = |s: &[f64], r, c| DMatrix::from_column_slice(r, c, s);
    LinearHorizon {
        a: dm(model.a_mat.as_slice(), 8, 8),
        b: dm(model.b_mat.as_slice(), 8, 2),
        e: dm(model.e_mat.as_slice(), 8, 2),
        q: dm(config.q_weight.as_slice(), 8, 8),
        r: dm(config.r_weight.as_slice(), 2, 2),
        x0,
        refs,
        g_state: dm(spec.g_state.as_slice(), 5, 8),
        h_state: spec.h_state.iter().map(|h| DVector::from_column_slice(h.as_slice())).collect(),
        g_input: dm(spec.g_input.as_slice(), 4, 2),
        h_input: DVector::from_column_slice(spec.h_input.as_slice()),
    }
}
