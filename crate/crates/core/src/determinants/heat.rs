use std::f64::consts::PI;

use crate::error::{invalid, Error, Result};
use crate::spectral_model::{binomial, ManifoldSpec};

/// Small-time coefficients `Tr e^{−tΔ} ~ Σ_j 𝔞_j t^{−dim/2 + j}`.
#[derive(Debug, Clone, PartialEq)]
pub struct HeatCoefficients {
    pub coeffs: Vec<f64>,
    pub base_dim: usize,
}

impl HeatCoefficients {
    /// Flat bases: only `𝔞₀` is nonzero (the remainder is exponentially small).
    /// `depth` zero coefficients are stored after it.
    pub fn scalar(base: &ManifoldSpec, depth: usize) -> Self {
        let a0 = match *base {
            ManifoldSpec::Circle { radius } => radius * PI.sqrt(),
            ManifoldSpec::RectTorus { l1, l2 } => l1 * l2 / (4.0 * PI),
        };
        let mut coeffs = vec![0.0; depth + 1];
        coeffs[0] = a0;
        Self {
            coeffs,
            base_dim: base.dimension(),
        }
    }

    /// Coefficients of `Δ^q ⊕ Δ^{q−1}` on the base.
    pub fn tilde(base: &ManifoldSpec, q: usize, depth: usize) -> Self {
        let d = base.dimension();
        let rank = binomial(d, q) + if q > 0 { binomial(d, q - 1) } else { 0 };
        let mut h = Self::scalar(base, depth);
        h.coeffs.iter_mut().for_each(|c| *c *= rank as f64);
        h
    }

    fn get(&self, j: usize) -> Result<f64> {
        self.coeffs.get(j).copied().ok_or(Error::MissingCoefficient(j))
    }
}

fn factorial(n: usize) -> f64 {
    (1..=n).map(|k| k as f64).product()
}

fn check_m(m: usize) -> Result<()> {
    if m < 2 {
        return Err(invalid("m", format!("mapping torus dimension must be >= 2, got {m}")));
    }
    Ok(())
}

/// Constant `c₀(λ)` of the gluing formula; `m` is the mapping-torus dimension.
pub fn c0_coefficient(heat: &HeatCoefficients, lambda: f64, m: usize) -> Result<f64> {
    check_m(m)?;
    if m % 2 == 0 {
        return Ok(0.0);
    }
    let top = (m - 1) / 2;
    let mut s = 0.0;
    for k in 0..=top {
        let sign = if k % 2 == 0 { 1.0 } else { -1.0 };
        s += sign / factorial(k) * heat.get(top - k)? * lambda.powi(k as i32);
    }
    Ok(-std::f64::consts::LN_2 * s)
}

/// `log 2·ζ_{(Δ̃ + λ + μ)}(0)` from the heat coefficients.
pub fn zeta_zero_shifted(heat: &HeatCoefficients, lambda: f64, mu: f64, m: usize) -> Result<f64> {
    check_m(m)?;
    if m % 2 == 0 {
        return Ok(0.0);
    }
    let top = (m - 1) / 2;
    let mut s = 0.0;
    for l in 0..=top {
        for k in 0..=top - l {
            let sign = if (k + l) % 2 == 0 { 1.0 } else { -1.0 };
            s += sign / (factorial(k) * factorial(l))
                * heat.get(top - k - l)?
                * lambda.powi(k as i32)
                * mu.powi(l as i32);
        }
    }
    Ok(std::f64::consts::LN_2 * s)
}
