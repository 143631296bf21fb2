//! Blockwise Dirichlet-to-Neumann operator on `[0, a] × M`.
//!
//! On an eigenspace of `Δ_M` with eigenvalue `ν²` and shift `λ+μ`, the boundary
//! problem `(-∂_u² + v)ψ = 0`, `v = ν² + λ + μ`, with `ψ(0) = α` and
//! `ψ(a) = (φ⁻¹)*α`, is solved in closed form, and the operator is
//! `φ*∂_uψ(a) − ∂_uψ(0)`. Everything here is generic over the scalar field.

use nalgebra::{convert, try_convert, DMatrix, DVector, RealField};

use crate::error::{invalid, Error, Result};

/// Orthogonality tolerance for incoming action matrices.
pub const ORTHOGONALITY_TOL: f64 = 1e-8;

#[derive(Debug, Clone, PartialEq)]
pub struct DtnBlock<T: RealField> {
    pub nu2: T,
    pub shift: T,
    pub a: T,
    pub matrix: DMatrix<T>,
}

/// `ψ(u) = coeff_left·(e^{−√v(u−a)} − e^{√v(u−a)}) + coeff_right·(e^{u√v} − e^{−u√v})`.
///
/// The coefficients underflow once `a√v` is large, so [`evaluate`](Self::evaluate)
/// and [`derivative`](Self::derivative) work from the boundary data directly.
#[derive(Debug, Clone, PartialEq)]
pub struct BoundarySolution<T: RealField> {
    pub nu2: T,
    pub shift: T,
    pub a: T,
    pub coeff_left: DVector<T>,
    pub coeff_right: DVector<T>,
    datum: DVector<T>,
    transported: DVector<T>,
}

impl<T: RealField + Copy> BoundarySolution<T> {
    fn root(&self) -> T {
        (self.nu2 + self.shift).sqrt()
    }

    pub fn evaluate(&self, u: T) -> DVector<T> {
        let s = self.root();
        &self.datum * sinh_ratio(s * (self.a - u), s * self.a)
            + &self.transported * sinh_ratio(s * u, s * self.a)
    }

    pub fn derivative(&self, u: T) -> DVector<T> {
        let s = self.root();
        &self.transported * (s * cosh_sinh_ratio(s * u, s * self.a))
            - &self.datum * (s * cosh_sinh_ratio(s * (self.a - u), s * self.a))
    }
}

/// `sinh(x)/sinh(y)` for `0 ≤ x ≤ y`, `y > 0`, without overflow.
fn sinh_ratio<T: RealField + Copy>(x: T, y: T) -> T {
    let two: T = convert(2.0);
    (x - y).exp() * (-(-two * x).exp_m1()) / (-(-two * y).exp_m1())
}

/// `cosh(x)/sinh(y)` for `0 ≤ x ≤ y`, `y > 0`, without overflow.
fn cosh_sinh_ratio<T: RealField + Copy>(x: T, y: T) -> T {
    let two: T = convert(2.0);
    (x - y).exp() * (T::one() + (-two * x).exp()) / (-(-two * y).exp_m1())
}

fn to_f64<T: RealField + Copy>(x: T) -> f64 {
    try_convert::<T, f64>(x).unwrap_or(f64::NAN)
}

pub fn boundary_solution<T: RealField + Copy>(
    nu2: T,
    shift: T,
    a: T,
    datum: &DVector<T>,
    transported_datum: &DVector<T>,
) -> Result<BoundarySolution<T>> {
    let v = nu2 + shift;
    if !(v > T::zero()) {
        return Err(invalid("nu2 + shift", "must be > 0; use dtn_zero_mode"));
    }
    if !(a > T::zero()) {
        return Err(invalid("a", format!("must be > 0, got {}", to_f64(a))));
    }
    if datum.len() != transported_datum.len() {
        return Err(invalid("transported_datum", "length differs from datum"));
    }
    let two: T = convert(2.0);
    let sinh_sa = (v.sqrt() * a).sinh();
    Ok(BoundarySolution {
        nu2,
        shift,
        a,
        coeff_left: datum / (two * sinh_sa),
        coeff_right: transported_datum / (two * sinh_sa),
        datum: datum.clone(),
        transported: transported_datum.clone(),
    })
}

/// `I − ¼(A + Aᵀ + B + Bᵀ)` with `B` the inverse action; equals
/// `I − ½(A + A⁻¹)` for orthogonal `A` and is exactly symmetric.
pub fn perturbation<T: RealField + Copy>(action: &DMatrix<T>, inverse_action: &DMatrix<T>) -> DMatrix<T> {
    let n = action.nrows();
    let quarter: T = convert(0.25);
    // S + Sᵀ is symmetric to the bit; A + Aᵀ + B + Bᵀ summed left to right is not
    let s = action + inverse_action;
    DMatrix::identity(n, n) - (&s + s.transpose()) * quarter
}

fn check_action<T: RealField + Copy>(action: &DMatrix<T>, inverse_action: &DMatrix<T>) -> Result<()> {
    if !action.is_square() || action.shape() != inverse_action.shape() {
        return Err(invalid("action", "action and inverse_action must be square and of equal size"));
    }
    let n = action.nrows();
    let defect = to_f64((action.transpose() * action - DMatrix::identity(n, n)).amax());
    let inverse_defect = to_f64((action * inverse_action - DMatrix::identity(n, n)).amax());
    let worst = defect.max(inverse_defect);
    if !(worst <= ORTHOGONALITY_TOL) {
        return Err(Error::NotOrthogonal { defect: worst });
    }
    Ok(())
}

/// `2√v·tanh(a√v/2)·[I + 2e^{a√v}/(e^{a√v}−1)²·(I − ½(A + A⁻¹))]`.
///
/// Uses `tanh(x/2)·2eˣ/(eˣ−1)² = 1/sinh x`, so both coefficients are bounded
/// and no exponential is formed at positive argument.
pub fn dtn_block<T: RealField + Copy>(
    nu2: T,
    shift: T,
    a: T,
    action: &DMatrix<T>,
    inverse_action: &DMatrix<T>,
) -> Result<DtnBlock<T>> {
    let v = nu2 + shift;
    if !(v > T::zero()) {
        return Err(invalid("nu2 + shift", format!("must be > 0, got {}", to_f64(v))));
    }
    if !(a > T::zero()) {
        return Err(invalid("a", format!("must be > 0, got {}", to_f64(a))));
    }
    check_action(action, inverse_action)?;
    let two: T = convert(2.0);
    let root = v.sqrt();
    let x = a * root;
    let tanh_half = (x / two).tanh();
    let csch = two * (-x).exp() / (-(-two * x).exp_m1());
    let n = action.nrows();
    let matrix = (DMatrix::identity(n, n) * tanh_half + perturbation(action, inverse_action) * csch)
        * (two * root);
    Ok(DtnBlock {
        nu2,
        shift,
        a,
        matrix,
    })
}

/// `ν = λ = μ = 0`: the operator reduces to `(2/a)(I − ½(A + A⁻¹))`.
pub fn dtn_zero_mode<T: RealField + Copy>(
    a: T,
    action: &DMatrix<T>,
    inverse_action: &DMatrix<T>,
) -> Result<DtnBlock<T>> {
    if !(a > T::zero()) {
        return Err(invalid("a", format!("must be > 0, got {}", to_f64(a))));
    }
    check_action(action, inverse_action)?;
    let two: T = convert(2.0);
    Ok(DtnBlock {
        nu2: T::zero(),
        shift: T::zero(),
        a,
        matrix: perturbation(action, inverse_action) * (two / a),
    })
}

/// `2e^{x}/(e^{x}−1)²` evaluated as `2e^{−x}/expm1(−x)²`.
pub fn correction_factor<T: RealField + Copy>(x: T) -> T {
    let two: T = convert(2.0);
    let e = (-x).exp_m1();
    two * (-x).exp() / (e * e)
}
