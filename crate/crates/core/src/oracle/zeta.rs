use crate::error::{invalid, Error, Result};
use crate::special::{gamma, upper_gamma, EULER_GAMMA};
use crate::summation::CompensatedSum;

use super::theta::{heat_trace_dual, RawSpectrum, ThetaTerm};

/// Continuation result for one spectrum and shift.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct OracleValue {
    /// `−ζ'(0)`: `log Det` (or `log Det*` with the kernel dropped).
    pub log_det: f64,
    /// `ζ(0)`.
    pub zeta_zero: f64,
    /// Bound on the discarded large-time eigenvalue tail.
    pub tail_bound: f64,
    pub eigenvalues_used: usize,
    /// Mellin split point.
    pub split: f64,
}

/// Decay target for the discarded pieces: `e^{−TAIL_EXPONENT}`.
const TAIL_EXPONENT: f64 = 42.0;
const MAX_TAYLOR: usize = 80;

struct Split {
    u0: f64,
    tau: f64,
    kernel: f64,
}

fn prepare(spectrum: &RawSpectrum, shift: f64, drop_kernel: bool) -> Result<Split> {
    if !(shift >= 0.0) || !shift.is_finite() {
        return Err(invalid("shift", format!("must be finite and >= 0, got {shift}")));
    }
    let kernel = if shift == 0.0 {
        spectrum
            .terms()
            .iter()
            .filter(|t| t.has_zero_mode())
            .map(|t| t.coef)
            .sum()
    } else {
        0.0
    };
    let finite_kernel = shift == 0.0 && spectrum.finite_part().iter().any(|e| e.0 == 0.0 && e.1 != 0.0);
    if (kernel != 0.0 || finite_kernel) && !drop_kernel {
        return Err(Error::Singular(format!(
            "spectrum `{}` has a kernel at shift 0; request log Det* instead",
            spectrum.name
        )));
    }
    let qmin = spectrum
        .terms()
        .iter()
        .filter_map(ThetaTerm::min_dual)
        .min_by(f64::total_cmp)
        .unwrap_or(f64::INFINITY);
    let mut u0 = 1.0f64.min(qmin / 4.0);
    if shift > 0.0 {
        u0 = u0.min(1.0 / shift);
    }
    Ok(Split { u0, tau: shift, kernel })
}

/// Large-time piece `Σ coef·(μ+τ)^{−s}Γ(s, u₀(μ+τ))` over the theta eigenvalues,
/// plus a bound on the neglected eigenvalues `μ > Λ`.
fn large_time(spectrum: &RawSpectrum, sp: &Split, s: f64) -> Result<(f64, f64, usize)> {
    let cutoff = 2.0 * TAIL_EXPONENT / sp.u0;
    let theta_only = spectrum.theta_part();
    let mut raw = theta_only.raw_eigenvalues(cutoff)?;
    raw.retain(|e| e.0 + sp.tau > 0.0);
    raw.sort_by(|x, y| x.0.total_cmp(&y.0).then(x.1.total_cmp(&y.1)));
    let mut acc = CompensatedSum::new();
    for &(mu, coef) in &raw {
        let v = mu + sp.tau;
        let g = if s == 0.0 {
            upper_gamma(0.0, sp.u0 * v)
        } else {
            v.powf(-s) * upper_gamma(s, sp.u0 * v)
        };
        acc.add(coef * g);
    }
    // Σ_{μ>Λ} Γ(s,u₀μ)μ^{-s} ≤ max(1,(u₀μ)^{s-1})·u₀^{-s}·e^{−u₀Λ/2}·Tr e^{−u₀Δ/2}
    let heat = heat_trace_dual(&theta_only, sp.u0 / 2.0).abs();
    let x = sp.u0 * cutoff;
    let tail = heat * (-x / 2.0).exp() * x.powf(s - 1.0).max(1.0) * sp.u0.powf(-s);
    Ok((acc.value(), tail, raw.len()))
}

/// Power series of `e^{−uτ}` integrated against a term, as `Σ_n (−τ)^n/n!·f(n)`.
fn taylor(tau: f64, mut f: impl FnMut(usize) -> f64) -> f64 {
    let mut acc = CompensatedSum::new();
    let mut weight = 1.0;
    for n in 0..MAX_TAYLOR {
        if n > 0 {
            weight *= -tau / n as f64;
            if weight == 0.0 {
                break;
            }
        }
        let c = weight * f(n);
        acc.add(c);
        if n > 2 && c.abs() <= 1e-20 * acc.value().abs().max(1e-300) {
            break;
        }
    }
    acc.value()
}

/// `−ζ'(0)` and `ζ(0)` by the Mellin split at `u₀ ≤ 1`: eigenvalue sum for
/// `u ≥ u₀`, Poisson-dual heat trace for `u ≤ u₀`.
pub fn zeta_det_detailed(spectrum: &RawSpectrum, shift: f64, drop_kernel: bool) -> Result<OracleValue> {
    let sp = prepare(spectrum, shift, drop_kernel)?;
    let (u0, tau) = (sp.u0, sp.tau);
    let ln_u0 = u0.ln();
    let (large, tail, used) = large_time(spectrum, &sp, 0.0)?;
    // I(s) = A/s + B + O(s)
    let mut a = CompensatedSum::new();
    let mut b = CompensatedSum::new();
    b.add(large);
    a.add(-sp.kernel);
    b.add(-sp.kernel * ln_u0);
    let qmax = 2.0 * TAIL_EXPONENT * u0;
    for t in spectrum.terms() {
        let w = t.coef * t.weyl_weight();
        let half_d = t.dimension() as f64 / 2.0;
        let mut resonant = 0.0;
        let regular = taylor(tau, |n| {
            let p = n as f64 - half_d;
            if p == 0.0 {
                resonant = if n == 0 { 1.0 } else { (-tau).powi(n as i32) / factorial(n) };
                0.0
            } else {
                u0.powf(p) / p
            }
        });
        a.add(w * resonant);
        b.add(w * resonant * ln_u0);
        b.add(w * regular);
        let mut rem = CompensatedSum::new();
        for (q, phase) in t.dual_lattice(qmax) {
            rem.add(phase * taylor(tau, |n| q.powf(n as f64 - half_d) * upper_gamma(half_d - n as f64, q / u0)));
        }
        b.add(w * rem.value());
    }
    let (a, b) = (a.value(), b.value());
    let mut log_det = CompensatedSum::new();
    log_det.add(-(b + EULER_GAMMA * a));
    let mut zeta_zero = a;
    for &(mu, m) in spectrum.finite_part() {
        if mu + tau > 0.0 {
            log_det.add(m * (mu + tau).ln());
            zeta_zero += m;
        }
    }
    Ok(OracleValue {
        log_det: log_det.value(),
        zeta_zero,
        tail_bound: tail,
        eigenvalues_used: used + spectrum.finite_part().len(),
        split: u0,
    })
}

fn factorial(n: usize) -> f64 {
    (1..=n).map(|k| k as f64).product()
}

/// `log Det(Δ + shift)` (or `log Det*` when `drop_kernel`) of a raw spectrum.
pub fn zeta_det_oracle(spectrum: &RawSpectrum, shift: f64, drop_kernel: bool) -> Result<f64> {
    zeta_det_detailed(spectrum, shift, drop_kernel).map(|r| r.log_det)
}

/// `ζ(s) = Σ (μ + shift)^{−s}` continued to a regular point `s` (not a pole,
/// not `0, −1, −2, …`).
pub fn spectral_zeta(spectrum: &RawSpectrum, s: f64, shift: f64, drop_kernel: bool) -> Result<f64> {
    if !s.is_finite() || (s <= 0.0 && s.fract() == 0.0) {
        return Err(invalid("s", format!("{s} is not a regular point of the continuation")));
    }
    let sp = prepare(spectrum, shift, drop_kernel)?;
    let (u0, tau) = (sp.u0, sp.tau);
    let (large, _, _) = large_time(spectrum, &sp, s)?;
    let mut acc = CompensatedSum::new();
    acc.add(large);
    acc.add(-sp.kernel * u0.powf(s) / s);
    let qmax = 2.0 * TAIL_EXPONENT * u0;
    for t in spectrum.terms() {
        let w = t.coef * t.weyl_weight();
        let half_d = t.dimension() as f64 / 2.0;
        let mut pole = false;
        let lead = taylor(tau, |n| {
            let e = s + n as f64 - half_d;
            if e == 0.0 {
                pole = true;
            }
            u0.powf(e) / e
        });
        if pole {
            return Err(invalid("s", format!("{s} is a pole of the continuation")));
        }
        acc.add(w * lead);
        let mut rem = CompensatedSum::new();
        for (q, phase) in t.dual_lattice(qmax) {
            rem.add(phase * taylor(tau, |n| q.powf(s + n as f64 - half_d) * upper_gamma(half_d - n as f64 - s, q / u0)));
        }
        acc.add(w * rem.value());
    }
    let mut z = acc.value() / gamma(s);
    for &(mu, m) in spectrum.finite_part() {
        if mu + tau > 0.0 {
            z += m * (mu + tau).powf(-s);
        }
    }
    Ok(z)
}
