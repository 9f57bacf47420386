//! Zero-order-hold discretization by truncated power series.

use nalgebra::DMatrix;

const TERMS: usize = 30;

/// `exp(A t)` and `∫₀^t exp(A τ) dτ` from 30-term series at `t / 2^s`,
/// then doubled `s` times with `Φ(2t) = Φ(t)²`, `Ψ(2t) = Ψ(t) + Φ(t) Ψ(t)`.
pub fn phi_psi(a: &DMatrix<f64>, t: f64) -> (DMatrix<f64>, DMatrix<f64>) {
    let n = a.nrows();
    let norm = (a * t).abs().row_sum().max();
    let squarings = if norm > 0.5 { (norm / 0.5).log2().ceil() as u32 } else { 0 };
    let h = t / f64::from(2u32.pow(squarings));
    let ah = a * h;
    let mut phi = DMatrix::identity(n, n);
    let mut psi = DMatrix::identity(n, n) * h;
    // term = (A h)^k / k!
    let mut term = DMatrix::identity(n, n);
    for k in 1..TERMS {
        term = &term * &ah / k as f64;
        phi += &term;
        psi += &term * (h / (k + 1) as f64);
    }
    for _ in 0..squarings {
        psi = &psi + &phi * &psi;
        phi = &phi * &phi;
    }
    (phi, psi)
}
