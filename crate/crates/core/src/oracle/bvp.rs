//! Two-point boundary problem `−ψ'' + vψ = 0` on `[0, a]` by Chebyshev
//! collocation, used to check the closed-form DtN blocks.

use nalgebra::{DMatrix, DVector};

use crate::error::{invalid, Error, Result};

const MIN_NODES: usize = 24;
const MAX_NODES: usize = 400;
const REL_TOL: f64 = 1e-10;

/// Chebyshev points `x_j = cos(πj/n)` and the differentiation matrix.
fn chebyshev(n: usize) -> (DVector<f64>, DMatrix<f64>) {
    let x = DVector::from_fn(n + 1, |j, _| (std::f64::consts::PI * j as f64 / n as f64).cos());
    let c = |j: usize| if j == 0 || j == n { 2.0 } else { 1.0 } * if j % 2 == 0 { 1.0 } else { -1.0 };
    let mut d = DMatrix::from_fn(n + 1, n + 1, |i, j| {
        if i == j {
            0.0
        } else {
            c(i) / c(j) / (x[i] - x[j])
        }
    });
    for i in 0..=n {
        let s: f64 = d.row(i).sum();
        d[(i, i)] = -s;
    }
    (x, d)
}

/// Endpoint derivatives `(ψ'(0), ψ'(a))` of the solutions with
/// `(ψ(0), ψ(a)) = (1, 0)` and `(0, 1)`.
fn endpoint_derivatives(v: f64, a: f64, n: usize) -> Result<[[f64; 2]; 2]> {
    let (_, d) = chebyshev(n);
    // u = a(1 − x)/2: node 0 is u = 0, node n is u = a
    let du = d * (-2.0 / a);
    let d2 = &du * &du;
    let mut lhs = DMatrix::identity(n + 1, n + 1) * v - d2;
    for j in 0..=n {
        lhs[(0, j)] = 0.0;
        lhs[(n, j)] = 0.0;
    }
    lhs[(0, 0)] = 1.0;
    lhs[(n, n)] = 1.0;
    let lu = lhs.lu();
    let mut out = [[0.0; 2]; 2];
    for (k, (at0, at_a)) in [(1.0, 0.0), (0.0, 1.0)].into_iter().enumerate() {
        let mut rhs = DVector::zeros(n + 1);
        rhs[0] = at0;
        rhs[n] = at_a;
        let psi = lu.solve(&rhs).ok_or(Error::NoConvergence("collocation system"))?;
        let dpsi = &du * psi;
        out[k] = [dpsi[0], dpsi[n]];
    }
    Ok(out)
}

/// Numerical DtN block: solve the boundary problem with `ψ(0) = e_i`,
/// `ψ(a) = A⁻¹e_i` and return `A·ψ'(a) − ψ'(0)` column by column.
pub fn dtn_ode_oracle(nu2: f64, shift: f64, a: f64, action: &DMatrix<f64>) -> Result<DMatrix<f64>> {
    let v = nu2 + shift;
    if !(v > 0.0) || !v.is_finite() {
        return Err(invalid("nu2 + shift", format!("must be > 0, got {v}")));
    }
    if !(a > 0.0) || !a.is_finite() {
        return Err(invalid("a", format!("must be > 0, got {a}")));
    }
    if !action.is_square() {
        return Err(invalid("action", "must be square"));
    }
    let inverse = action
        .clone()
        .lu()
        .try_inverse()
        .ok_or_else(|| Error::Singular("action matrix is not invertible".into()))?;
    // refine until two resolutions agree
    let x = a * v.sqrt();
    let mut n = MIN_NODES.max((2.0 * x) as usize + MIN_NODES);
    let mut prev = endpoint_derivatives(v, a, n)?;
    loop {
        let next_n = n + 16;
        if next_n > MAX_NODES {
            return Err(Error::NoConvergence("dtn_ode_oracle collocation"));
        }
        let next = endpoint_derivatives(v, a, next_n)?;
        let scale = next.iter().flatten().fold(0.0f64, |m, x| m.max(x.abs()));
        let diff = prev
            .iter()
            .flatten()
            .zip(next.iter().flatten())
            .fold(0.0f64, |m, (p, q)| m.max((p - q).abs()));
        prev = next;
        n = next_n;
        if diff <= REL_TOL * scale {
            break;
        }
    }
    let [[f0, fa], [h0, ha]] = prev;
    let m = action.nrows();
    let id = DMatrix::<f64>::identity(m, m);
    Ok(action * fa + action * &inverse * ha - id * f0 - inverse * h0)
}

#[cfg(test)]
mod tests {
    use super::*;
    use nalgebra::dmatrix;

    #[test]
    fn identity_case() {
        let r = dtn_ode_oracle(0.0, 1.0, 1.0, &DMatrix::identity(2, 2)).unwrap();
        assert!((r - DMatrix::identity(2, 2) * (2.0 * 0.5f64.tanh())).amax() < 1e-10);
    }

    #[test]
    fn reflection_case() {
        let r = dtn_ode_oracle(1.0, 0.0, 1.0, &dmatrix![1.0, 0.0; 0.0, -1.0]).unwrap();
        assert!((r[(0, 0)] - 2.0 * 0.5f64.tanh()).abs() < 1e-10);
        assert!((r[(1, 1)] - 2.0 / 0.5f64.tanh()).abs() < 1e-10);
        assert!(r[(0, 1)].abs() < 1e-12);
    }

    #[test]
    fn rejects_bad_input() {
        let i = DMatrix::identity(1, 1);
        assert!(dtn_ode_oracle(0.0, 0.0, 1.0, &i).is_err());
        assert!(dtn_ode_oracle(1.0, 0.0, -1.0, &i).is_err());
        assert!(dtn_ode_oracle(1.0, 0.0, 1.0, &DMatrix::zeros(1, 1)).is_err());
    }
}
