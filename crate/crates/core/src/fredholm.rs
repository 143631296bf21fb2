//! Fredholm-determinant corrections as certified, deterministic series over
//! eigenblocks, and log-determinants of finite harmonic blocks.

use std::collections::BTreeMap;

use nalgebra::{Cholesky, DMatrix, SymmetricEigen};
use rayon::prelude::*;
use serde::Serialize;

use crate::dtn::{correction_factor, perturbation, ORTHOGONALITY_TOL};
use crate::error::{invalid, require_positive, Error, Result};
use crate::spectral_model::{form_spectrum, IsometrySpec, ManifoldSpec, SpectrumStream};
use crate::summation::CompensatedSum;

/// How every infinite series in the crate is truncated.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct TruncationPolicy {
    /// Initial eigenvalue cutoff `Λ`.
    pub cutoff: f64,
    /// Maximum admissible certified tail bound.
    pub tail_tol: f64,
    /// Hard cap on enumerated blocks.
    pub max_blocks: usize,
    /// Number of times `Λ` may be doubled when the bound is not met.
    pub max_doublings: u32,
}

impl Default for TruncationPolicy {
    fn default() -> Self {
        Self {
            cutoff: 64.0,
            tail_tol: 1e-12,
            max_blocks: 2_000_000,
            max_doublings: 12,
        }
    }
}

impl TruncationPolicy {
    pub fn new(cutoff: f64, tail_tol: f64) -> Result<Self> {
        let p = Self {
            cutoff,
            tail_tol,
            ..Self::default()
        };
        p.validate()?;
        Ok(p)
    }

    /// Same policy, but failing instead of growing the cutoff.
    pub fn fixed(self) -> Self {
        Self {
            max_doublings: 0,
            ..self
        }
    }

    pub fn validate(&self) -> Result<()> {
        require_positive("cutoff", self.cutoff)?;
        require_positive("tail_tol", self.tail_tol)?;
        if self.max_blocks == 0 {
            return Err(invalid("max_blocks", "must be > 0"));
        }
        Ok(())
    }
}

/// A log-determinant (or related series value) with its truncation certificate.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct DetResult {
    pub value: f64,
    pub tail_bound: f64,
    pub blocks_used: usize,
    pub diagnostics: BTreeMap<String, f64>,
}

impl DetResult {
    pub fn exact(value: f64) -> Self {
        Self {
            value,
            tail_bound: 0.0,
            blocks_used: 0,
            diagnostics: BTreeMap::new(),
        }
    }

    pub fn with(mut self, key: &str, value: f64) -> Self {
        self.diagnostics.insert(key.to_owned(), value);
        self
    }

    /// Sum of two results: values add, tail bounds add, diagnostics merge.
    pub fn combine(mut self, other: &DetResult, scale: f64) -> Self {
        self.value += scale * other.value;
        self.tail_bound += scale.abs() * other.tail_bound;
        self.blocks_used += other.blocks_used;
        for (k, v) in &other.diagnostics {
            self.diagnostics.entry(k.clone()).or_insert(*v);
        }
        self
    }
}

/// Upper bound on `#{eigenfunctions with frequency ≤ r}` as `α + βr + γr²`.
fn counting_bound(base: &ManifoldSpec) -> (f64, f64, f64) {
    match *base {
        // 2⌊ρr⌋ + 1
        ManifoldSpec::Circle { radius } => (1.0, 2.0 * radius, 0.0),
        // lattice points in an ellipse: area + perimeter·√2/2 + π/2
        ManifoldSpec::RectTorus { l1, l2 } => (
            std::f64::consts::FRAC_PI_2,
            l1.max(l2) / std::f64::consts::SQRT_2,
            l1 * l2 / (4.0 * std::f64::consts::PI),
        ),
    }
}

/// `Σ_{ν² > Λ} mult·F(ν)` for any `F(r) ≤ prefactor·e^{−a√(r²+λ)}`, `r ≥ √Λ`.
///
/// Uses the tangent-line bound `√(r²+λ) ≥ √(Λ+λ) + (r−√Λ)·b/a`,
/// `b = a√Λ/√(Λ+λ)`, and Weyl counting `N(r) ≤ α + βr + γr²`:
/// `prefactor·e^{−a√(Λ+λ)}·[N(√Λ) + β/b + 2γ(√Λ/b + 1/b²)]`.
pub fn weyl_tail(cutoff: f64, a: f64, shift: f64, base: &ManifoldSpec, prefactor: f64) -> f64 {
    let r = cutoff.sqrt();
    let w = (cutoff + shift).sqrt();
    let f0 = prefactor * (-a * w).exp();
    if f0 == 0.0 {
        return 0.0;
    }
    let (alpha, beta, gamma) = counting_bound(base);
    let b = a * r / w;
    f0 * (alpha + beta * r + gamma * r * r + beta / b + 2.0 * gamma * (r / b + 1.0 / (b * b)))
}

/// Certified bound on `Σ_{ν² > Λ} mult·log det(I + g(ν²+λ)·K)` for scalar
/// functions on `base`, using `log(1 + gκ) ≤ 2g ≤ 4e^{−x}/(1 − e^{−a√(Λ+λ)})²`.
pub fn tail_bound(cutoff: f64, a: f64, shift: f64, base: &ManifoldSpec) -> f64 {
    let w = (cutoff + shift).sqrt();
    weyl_tail(cutoff, a, shift, base, 4.0 / (-(-a * w).exp_m1()).powi(2))
}

/// `log det[I + g(v)·(I − ½(A + A⁻¹))]` for one block, `v = ν² + shift`.
pub fn block_correction(nu2: f64, shift: f64, a: f64, action: &DMatrix<f64>, inverse_action: &DMatrix<f64>) -> Result<f64> {
    let n = action.nrows();
    let defect = (action.transpose() * action - DMatrix::identity(n, n)).amax();
    if !(defect <= ORTHOGONALITY_TOL) {
        return Err(Error::NotOrthogonal { defect });
    }
    let g = correction_factor(a * (nu2 + shift).sqrt());
    if g == 0.0 {
        return Ok(0.0);
    }
    let k = perturbation(action, inverse_action);
    let mut acc = CompensatedSum::new();
    for kappa in kappa_spectrum_sym(k) {
        acc.add((g * kappa).ln_1p());
    }
    Ok(acc.value())
}

fn kappa_spectrum_sym(k: DMatrix<f64>) -> Vec<f64> {
    SymmetricEigen::new(k)
        .eigenvalues
        .iter()
        .map(|&x| x.clamp(0.0, 2.0))
        .collect()
}

/// Fredholm correction over an already enumerated spectrum.
pub fn fredholm_correction(
    spectrum: &SpectrumStream,
    a: f64,
    shift: f64,
    policy: &TruncationPolicy,
    exclude_kernel: bool,
) -> Result<DetResult> {
    require_positive("a", a)?;
    policy.validate()?;
    if !(shift >= 0.0) || !shift.is_finite() {
        return Err(invalid("lambda", format!("must be finite and >= 0, got {shift}")));
    }
    if shift == 0.0 && !exclude_kernel {
        return Err(Error::Singular(
            "the correction factor is singular on harmonic blocks at lambda = 0; exclude the kernel".into(),
        ));
    }
    let blocks: Vec<_> = spectrum
        .iter()
        .filter(|b| !(exclude_kernel && b.nu2 == 0.0))
        .collect();
    if blocks.len() > policy.max_blocks {
        return Err(invalid("max_blocks", format!("{} blocks exceed the cap {}", blocks.len(), policy.max_blocks)));
    }
    // Contributions in parallel, reduction in ascending ν² order.
    let terms = blocks
        .par_iter()
        .map(|b| block_correction(b.nu2, shift, a, &b.action, &b.inverse_action))
        .collect::<Result<Vec<f64>>>()?;
    let mut acc = CompensatedSum::new();
    terms.iter().for_each(|&t| acc.add(t));
    let bound = spectrum.frame_rank as f64 * tail_bound(spectrum.cutoff, a, shift, &spectrum.base);
    if bound > policy.tail_tol {
        return Err(Error::Truncation {
            cutoff: spectrum.cutoff,
            tail_bound: bound,
            tolerance: policy.tail_tol,
        });
    }
    Ok(DetResult {
        value: acc.value(),
        tail_bound: bound,
        blocks_used: blocks.len(),
        diagnostics: BTreeMap::from([("cutoff".to_owned(), spectrum.cutoff)]),
    })
}

/// Smallest cutoff `policy.cutoff·2^k` (`k ≤ max_doublings`) whose certified
/// tail bound meets the tolerance.
pub fn adaptive_cutoff(base: &ManifoldSpec, a: f64, shift: f64, frame_rank: usize, policy: &TruncationPolicy) -> Result<f64> {
    let mut cutoff = policy.cutoff;
    for _ in 0..=policy.max_doublings {
        let bound = frame_rank as f64 * tail_bound(cutoff, a, shift, base);
        if bound <= policy.tail_tol {
            return Ok(cutoff);
        }
        cutoff *= 2.0;
    }
    let cutoff = cutoff / 2.0;
    Err(Error::Truncation {
        cutoff,
        tail_bound: frame_rank as f64 * tail_bound(cutoff, a, shift, base),
        tolerance: policy.tail_tol,
    })
}

/// Fredholm correction on `q`-forms of the isometry's base, enumerating the
/// spectrum up to an adaptively chosen cutoff.
pub fn fredholm_correction_for(
    isometry: &IsometrySpec,
    degree: usize,
    a: f64,
    shift: f64,
    policy: &TruncationPolicy,
    exclude_kernel: bool,
) -> Result<DetResult> {
    require_positive("a", a)?;
    policy.validate()?;
    let base = isometry.base();
    let rank = crate::spectral_model::binomial(base.dimension(), degree);
    if isometry.is_identity() {
        // φ = Id: every factor is det(I) = 1.
        let cutoff = adaptive_cutoff(&base, a, shift, rank, policy)?;
        let bound = rank as f64 * tail_bound(cutoff, a, shift, &base);
        return Ok(DetResult {
            tail_bound: bound,
            ..DetResult::exact(0.0)
        }
        .with("cutoff", cutoff));
    }
    let cutoff = adaptive_cutoff(&base, a, shift, rank, policy)?;
    let spectrum = form_spectrum(isometry, degree, cutoff)?;
    fredholm_correction(&spectrum, a, shift, policy, exclude_kernel)
}

/// `log det` of a symmetric positive definite block; `0` for an empty block.
pub fn finite_block_logdet(block: &DMatrix<f64>) -> Result<f64> {
    if !block.is_square() {
        return Err(invalid("block", "must be square"));
    }
    let asym = (block - block.transpose()).amax();
    if asym > 1e-12 * block.amax().max(1.0) {
        return Err(Error::NotPositiveDefinite);
    }
    match block.nrows() {
        0 => Ok(0.0),
        1 => {
            let x = block[(0, 0)];
            if x > 0.0 {
                Ok(x.ln())
            } else {
                Err(Error::NotPositiveDefinite)
            }
        }
        2 => {
            let (p, q, r) = (block[(0, 0)], block[(0, 1)], block[(1, 1)]);
            let det = p * r - q * q;
            if p > 0.0 && det > 0.0 {
                Ok(det.ln())
            } else {
                Err(Error::NotPositiveDefinite)
            }
        }
        _ => {
            let chol = Cholesky::new(block.clone()).ok_or(Error::NotPositiveDefinite)?;
            Ok(2.0 * chol.l().diagonal().iter().map(|d| d.ln()).sum::<f64>())
        }
    }
}
