//! Gaussian approximation at a mode from the numerical Hessian.

use nalgebra::{Matrix3, SymmetricEigen, Vector3};

use crate::error::{Error, Result};
use crate::orbit::OrbitParams;

pub const HESSIAN_STEP: f64 = 5e-6;
pub const EIGEN_FLOOR: f64 = 1e-12;
pub const MAX_CONDITION: f64 = 1e14;

fn shifted(x: &[f64; 3], moves: &[(usize, f64)]) -> OrbitParams {
    let mut p = *x;
    for &(i, d) in moves {
        p[i] += d;
    }
    OrbitParams::from_array(p)
}

/// Central-difference Hessian (three-point diagonal, four-point cross terms).
pub fn hessian_central<F: Fn(&OrbitParams) -> f64>(f: F, at: &OrbitParams, step: f64) -> Matrix3<f64> {
    let x = at.to_array();
    let f0 = f(at);
    let h2 = step * step;
    let mut out = Matrix3::zeros();
    for i in 0..3 {
        out[(i, i)] = (f(&shifted(&x, &[(i, step)])) - 2.0 * f0 + f(&shifted(&x, &[(i, -step)]))) / h2;
        for j in 0..i {
            let v = (f(&shifted(&x, &[(i, step), (j, step)])) - f(&shifted(&x, &[(i, step), (j, -step)]))
                - f(&shifted(&x, &[(i, -step), (j, step)]))
                + f(&shifted(&x, &[(i, -step), (j, -step)])))
                / (4.0 * h2);
            out[(i, j)] = v;
            out[(j, i)] = v;
        }
    }
    out
}

/// Fourth-order five-point-stencil Hessian, used as an accuracy reference.
pub fn hessian_five_point<F: Fn(&OrbitParams) -> f64>(f: F, at: &OrbitParams, step: f64) -> Matrix3<f64> {
    let x = at.to_array();
    let f0 = f(at);
    let h2 = step * step;
    let w = [(-2.0, 1.0), (-1.0, -8.0), (1.0, 8.0), (2.0, -1.0)];
    let mut out = Matrix3::zeros();
    for i in 0..3 {
        let g = |k: f64| f(&shifted(&x, &[(i, k * step)]));
        out[(i, i)] = (-g(2.0) + 16.0 * g(1.0) - 30.0 * f0 + 16.0 * g(-1.0) - g(-2.0)) / (12.0 * h2);
        for j in 0..i {
            let mut acc = 0.0;
            for &(a, wa) in &w {
                for &(b, wb) in &w {
                    acc += wa * wb * f(&shifted(&x, &[(i, a * step), (j, b * step)]));
                }
            }
            let v = acc / (144.0 * h2);
            out[(i, j)] = v;
            out[(j, i)] = v;
        }
    }
    out
}

/// Inverse of a symmetric positive matrix after flooring its eigenvalues at
/// [`EIGEN_FLOOR`].
pub fn repaired_inverse(information: &Matrix3<f64>) -> Result<Matrix3<f64>> {
    let sym = (information + information.transpose()) * 0.5;
    if sym.iter().any(|v| !v.is_finite()) {
        return Err(Error::SingularHessian { condition: f64::INFINITY });
    }
    let eig = SymmetricEigen::new(sym);
    let vals = eig.eigenvalues.map(|v| v.max(EIGEN_FLOOR));
    let condition = vals.max() / vals.min();
    if !(condition <= MAX_CONDITION) {
        return Err(Error::SingularHessian { condition });
    }
    let inv = Vector3::new(1.0 / vals[0], 1.0 / vals[1], 1.0 / vals[2]);
    let cov = eig.eigenvectors * Matrix3::from_diagonal(&inv) * eig.eigenvectors.transpose();
    Ok((cov + cov.transpose()) * 0.5)
}

/// `[-∇∇ᵀ f]^-1` at `mean`.
pub fn laplace_covariance<F: Fn(&OrbitParams) -> f64>(f: F, mean: &OrbitParams, step: f64) -> Result<Matrix3<f64>> {
    let h = hessian_central(f, mean, step);
    repaired_inverse(&(-h))
}
