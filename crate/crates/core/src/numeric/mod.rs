//! Numerical primitives shared by the equilibrium machinery.

pub mod interp;
pub mod ode;
pub mod quad;

pub use interp::Hermite;
pub use quad::{integrate, integrate_to_infinity, Integral, QuadConfig};

/// Lagrange-polynomial derivative at `xs[i]` using every node in `xs`.
/// Used for finite-difference checks on non-uniform grids.
pub fn lagrange_derivative(xs: &[f64], ys: &[f64], i: usize) -> f64 {
    let x0 = xs[i];
    let n = xs.len();
    let mut total = 0.0;
    for j in 0..n {
        // derivative at x0 of the j-th Lagrange basis polynomial
        let w = if j == i {
            (0..n)
                .filter(|&m| m != i)
                .map(|m| 1.0 / (x0 - xs[m]))
                .sum::<f64>()
        } else {
            let mut num = 1.0;
            let mut den = xs[j] - xs[i];
            for m in 0..n {
                if m != i && m != j {
                    num *= x0 - xs[m];
                    den *= xs[j] - xs[m];
                }
            }
            num / den
        };
        total += w * ys[j];
    }
    total
}

/// Lagrange extrapolation of `(xs, ys)` to `x`.
pub fn lagrange_value(xs: &[f64], ys: &[f64], x: f64) -> f64 {
    let n = xs.len();
    (0..n)
        .map(|j| {
            let basis: f64 = (0..n)
                .filter(|&m| m != j)
                .map(|m| (x - xs[m]) / (xs[j] - xs[m]))
                .product();
            basis * ys[j]
        })
        .sum()
}
