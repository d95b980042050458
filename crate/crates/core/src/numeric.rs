//! Small numerical helpers shared by the grid and quadrature paths.

use num_complex::Complex64;

/// Pairwise (cascade) summation; deterministic and with better roundoff
/// behavior than a running sum for long quadrature node lists.
pub fn pairwise_sum(values: &[Complex64]) -> Complex64 {
    match values.len() {
        0 => Complex64::new(0.0, 0.0),
        1 => values[0],
        2 => values[0] + values[1],
        n => {
            let (lo, hi) = values.split_at(n / 2);
            pairwise_sum(lo) + pairwise_sum(hi)
        }
    }
}

/// Pairwise summation for real values.
pub fn pairwise_sum_f64(values: &[f64]) -> f64 {
    match values.len() {
        0 => 0.0,
        1 => values[0],
        2 => values[0] + values[1],
        n => {
            let (lo, hi) = values.split_at(n / 2);
            pairwise_sum_f64(lo) + pairwise_sum_f64(hi)
        }
    }
}

/// Numerical Wirtinger derivatives of `f` at `z0` from the 4-point central
/// stencil: `d_z = (d_x - i d_y)/2`, `d_zbar = (d_x + i d_y)/2`.
///
/// Returns `(d_z f, d_zbar f)`. Errors from `f` propagate unchanged.
pub fn wirtinger_fd<E>(
    f: impl Fn(Complex64) -> Result<Complex64, E>,
    z0: Complex64,
    step: f64,
) -> Result<(Complex64, Complex64), E> {
    let i = Complex64::new(0.0, 1.0);
    let dx = (f(z0 + step)? - f(z0 - step)?) / (2.0 * step);
    let dy = (f(z0 + i * step)? - f(z0 - i * step)?) / (2.0 * step);
    Ok(((dx - i * dy) / 2.0, (dx + i * dy) / 2.0))
}
