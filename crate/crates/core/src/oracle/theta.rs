use std::collections::BTreeMap;
use std::f64::consts::PI;

use crate::error::{invalid, Error, Result};
use crate::summation::CompensatedSum;

/// `θ_{c,σ}(u) = Σ_{m∈ℤ} e^{−u c² (m+σ)²}`: one 1-D family of eigenvalues
/// `c²(m+σ)²`. Stored with `σ` reduced to `[0, ½]`, which leaves θ unchanged.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ThetaFactor {
    pub c: f64,
    pub sigma: f64,
}

impl ThetaFactor {
    pub fn new(c: f64, sigma: f64) -> Result<Self> {
        if !(c > 0.0 && c.is_finite()) {
            return Err(invalid("c", format!("theta frequency must be > 0, got {c}")));
        }
        if !sigma.is_finite() {
            return Err(invalid("sigma", "must be finite"));
        }
        let s = sigma.rem_euclid(1.0);
        let sigma = if s > 0.5 { 1.0 - s } else { s };
        Ok(Self { c, sigma })
    }

    fn key(&self) -> (u64, u64) {
        (self.c.to_bits(), self.sigma.to_bits())
    }

    /// Direct lattice sum.
    pub fn direct(&self, u: f64) -> f64 {
        let w = u * self.c * self.c;
        let mut acc = CompensatedSum::new();
        let start = (-self.sigma).round() as i64;
        acc.add((-w * (start as f64 + self.sigma).powi(2)).exp());
        for k in 1.. {
            let up = (-w * ((start + k) as f64 + self.sigma).powi(2)).exp();
            let down = (-w * ((start - k) as f64 + self.sigma).powi(2)).exp();
            acc.add(up);
            acc.add(down);
            if up + down <= 1e-20 * acc.value() {
                break;
            }
        }
        acc.value()
    }

    /// `Σ_{j≠0} e^{−π²j²/(c²u)} cos(2πjσ)`: the Poisson-dual remainder, so that
    /// `θ = √π/(c√u)·(1 + remainder)`.
    pub fn dual_remainder(&self, u: f64) -> f64 {
        let z = PI * PI / (self.c * self.c * u);
        let mut acc = CompensatedSum::new();
        for j in 1.. {
            let e = (-z * (j * j) as f64).exp();
            acc.add(2.0 * e * cos_turns(j as f64 * self.sigma));
            if e < 1e-20 {
                break;
            }
        }
        acc.value()
    }

    pub fn dual(&self, u: f64) -> f64 {
        PI.sqrt() / (self.c * u.sqrt()) * (1.0 + self.dual_remainder(u))
    }
}

/// `cos(2π·t)`, exact at quarter turns.
pub(crate) fn cos_turns(t: f64) -> f64 {
    let r = t.rem_euclid(1.0);
    match r {
        x if x == 0.0 => 1.0,
        x if x == 0.25 || x == 0.75 => 0.0,
        x if x == 0.5 => -1.0,
        x => (2.0 * PI * x).cos(),
    }
}

/// `coef·Π θ_{c_i,σ_i}`; an empty product is the constant `coef` (a finite
/// number of zero eigenvalues).
#[derive(Debug, Clone, PartialEq)]
pub struct ThetaTerm {
    pub coef: f64,
    pub factors: Vec<ThetaFactor>,
}

impl ThetaTerm {
    pub fn dimension(&self) -> usize {
        self.factors.len()
    }

    /// `π^{d/2}/Π c_i`: leading heat coefficient of the term (without `coef`).
    pub fn weyl_weight(&self) -> f64 {
        PI.powf(self.factors.len() as f64 / 2.0) / self.factors.iter().map(|f| f.c).product::<f64>()
    }

    /// Whether `0` is an eigenvalue of the term (all shifts vanish).
    pub fn has_zero_mode(&self) -> bool {
        self.factors.iter().all(|f| f.sigma == 0.0)
    }

    fn key(&self) -> Vec<(u64, u64)> {
        self.factors.iter().map(ThetaFactor::key).collect()
    }

    /// Calls `visit(μ)` for every eigenvalue `μ ≤ cutoff` of the term.
    pub fn for_each_eigenvalue(&self, cutoff: f64, visit: &mut dyn FnMut(f64)) {
        fn rec(factors: &[ThetaFactor], acc: f64, cutoff: f64, visit: &mut dyn FnMut(f64)) {
            let Some((f, rest)) = factors.split_first() else {
                visit(acc);
                return;
            };
            let span = ((cutoff - acc).max(0.0)).sqrt() / f.c;
            let lo = (-span - f.sigma).ceil() as i64;
            let hi = (span - f.sigma).floor() as i64;
            for m in lo..=hi {
                let mu = acc + (f.c * (m as f64 + f.sigma)).powi(2);
                if mu <= cutoff {
                    rec(rest, mu, cutoff, visit);
                }
            }
        }
        rec(&self.factors, 0.0, cutoff, visit);
    }

    /// Approximate number of lattice points below `cutoff` (for guarding).
    fn count_estimate(&self, cutoff: f64) -> f64 {
        self.factors
            .iter()
            .map(|f| 2.0 * cutoff.sqrt() / f.c + 1.0)
            .product()
    }

    /// Products `Π(1 + r_i) − 1` of the dual remainders, without cancellation.
    fn dual_remainder(&self, u: f64) -> f64 {
        self.factors.iter().fold(0.0, |p, f| {
            let r = f.dual_remainder(u);
            p + r + p * r
        })
    }

    /// Dual lattice `(q_j, Π cos(2π j_i σ_i))` over `j ≠ 0` with
    /// `q_j = π² Σ j_i²/c_i² ≤ qmax`.
    pub fn dual_lattice(&self, qmax: f64) -> Vec<(f64, f64)> {
        let mut out = Vec::new();
        fn rec(fs: &[ThetaFactor], q: f64, phase: f64, nonzero: bool, qmax: f64, out: &mut Vec<(f64, f64)>) {
            let Some((f, rest)) = fs.split_first() else {
                if nonzero {
                    out.push((q, phase));
                }
                return;
            };
            let step = PI * PI / (f.c * f.c);
            let jmax = ((qmax - q).max(0.0) / step).sqrt().floor() as i64;
            for j in -jmax..=jmax {
                let qj = q + step * (j * j) as f64;
                if qj <= qmax {
                    rec(rest, qj, phase * cos_turns(j as f64 * f.sigma), nonzero || j != 0, qmax, out);
                }
            }
        }
        rec(&self.factors, 0.0, 1.0, false, qmax, &mut out);
        out.retain(|&(_, phase)| phase != 0.0);
        out.sort_by(|x, y| x.0.total_cmp(&y.0));
        out
    }

    /// Smallest nonzero dual quadratic form value `π²/c_max²`.
    pub fn min_dual(&self) -> Option<f64> {
        self.factors
            .iter()
            .map(|f| PI * PI / (f.c * f.c))
            .min_by(f64::total_cmp)
    }
}

/// A spectrum given by its heat trace `Σ_T coef_T Π θ_{c,σ}(u)`, optionally
/// plus a finite list of `(eigenvalue, multiplicity)` pairs.
///
/// Terms are kept canonical (factors sorted, like terms merged), so formal
/// differences of spectra cancel exactly.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct RawSpectrum {
    pub name: String,
    terms: Vec<ThetaTerm>,
    finite: Vec<(f64, f64)>,
}

impl RawSpectrum {
    pub fn new(name: impl Into<String>) -> Self {
        Self {
            name: name.into(),
            ..Self::default()
        }
    }

    /// A finite list of eigenvalues with multiplicities.
    pub fn finite(name: impl Into<String>, eigenvalues: &[(f64, f64)]) -> Result<Self> {
        if eigenvalues.iter().any(|&(mu, m)| !(mu >= 0.0) || !mu.is_finite() || !m.is_finite()) {
            return Err(invalid("eigenvalues", "must be finite and non-negative"));
        }
        let mut s = Self::new(name);
        s.finite = eigenvalues.to_vec();
        Ok(s)
    }

    pub fn terms(&self) -> &[ThetaTerm] {
        &self.terms
    }

    /// The same spectrum without its finite eigenvalue list.
    pub fn theta_part(&self) -> Self {
        Self {
            name: self.name.clone(),
            terms: self.terms.clone(),
            finite: Vec::new(),
        }
    }

    pub fn finite_part(&self) -> &[(f64, f64)] {
        &self.finite
    }

    /// `self + coef·Π factors`.
    pub fn with_term(mut self, coef: f64, factors: &[ThetaFactor]) -> Self {
        self.push(coef, factors.to_vec());
        self.canonicalize();
        self
    }

    fn push(&mut self, coef: f64, mut factors: Vec<ThetaFactor>) {
        factors.sort_by(|x, y| x.c.total_cmp(&y.c).then(x.sigma.total_cmp(&y.sigma)));
        self.terms.push(ThetaTerm { coef, factors });
    }

    fn canonicalize(&mut self) {
        let mut merged: BTreeMap<Vec<(u64, u64)>, ThetaTerm> = BTreeMap::new();
        for t in self.terms.drain(..) {
            merged
                .entry(t.key())
                .and_modify(|e| e.coef += t.coef)
                .or_insert(t);
        }
        self.terms = merged.into_values().filter(|t| t.coef != 0.0).collect();
    }

    pub fn scale(mut self, k: f64) -> Self {
        self.terms.iter_mut().for_each(|t| t.coef *= k);
        self.finite.iter_mut().for_each(|e| e.1 *= k);
        self.canonicalize();
        self
    }

    pub fn add(mut self, other: &RawSpectrum) -> Self {
        self.terms.extend(other.terms.iter().cloned());
        self.finite.extend(other.finite.iter().copied());
        self.canonicalize();
        self
    }

    /// Formal difference; equal theta terms cancel exactly.
    pub fn difference(&self, other: &RawSpectrum) -> Self {
        let mut d = self.clone().add(&other.clone().scale(-1.0));
        d.name = format!("{} - {}", self.name, other.name);
        d
    }

    /// Product of heat traces (spectrum of a Riemannian product).
    pub fn product(&self, other: &RawSpectrum) -> Result<Self> {
        if !self.finite.is_empty() || !other.finite.is_empty() {
            return Err(Error::Unsupported("products of finite eigenvalue lists".into()));
        }
        let mut out = Self::new(format!("{} x {}", self.name, other.name));
        for a in &self.terms {
            for b in &other.terms {
                let mut f = a.factors.clone();
                f.extend(b.factors.iter().copied());
                out.push(a.coef * b.coef, f);
            }
        }
        out.canonicalize();
        Ok(out)
    }

    /// Dimension of the underlying manifold (highest theta order).
    pub fn dimension(&self) -> usize {
        self.terms.iter().map(ThetaTerm::dimension).max().unwrap_or(0)
    }

    /// Leading small-time heat coefficient: `Tr e^{−uΔ} ~ weyl_constant·u^{−d/2}`.
    pub fn weyl_constant(&self) -> f64 {
        let d = self.dimension();
        self.terms
            .iter()
            .filter(|t| t.dimension() == d)
            .map(|t| t.coef * t.weyl_weight())
            .sum()
    }

    /// Multiplicity of the eigenvalue `0`.
    pub fn zero_multiplicity(&self) -> f64 {
        let theta: f64 = self
            .terms
            .iter()
            .filter(|t| t.has_zero_mode())
            .map(|t| t.coef)
            .sum();
        let finite: f64 = self.finite.iter().filter(|e| e.0 == 0.0).map(|e| e.1).sum();
        theta + finite
    }

    /// Raw `(μ, coefficient)` pairs of every term with `μ ≤ cutoff`, unsorted.
    pub(crate) fn raw_eigenvalues(&self, cutoff: f64) -> Result<Vec<(f64, f64)>> {
        let estimate: f64 = self.terms.iter().map(|t| t.count_estimate(cutoff)).sum();
        if estimate > 5e7 {
            return Err(Error::Truncation {
                cutoff,
                tail_bound: f64::INFINITY,
                tolerance: 0.0,
            });
        }
        let mut out = Vec::with_capacity(estimate as usize);
        for t in &self.terms {
            t.for_each_eigenvalue(cutoff, &mut |mu| out.push((mu, t.coef)));
        }
        out.extend(self.finite.iter().copied().filter(|e| e.0 <= cutoff));
        Ok(out)
    }

    /// Sorted `(eigenvalue, multiplicity)` list up to `cutoff`; eigenvalues
    /// agreeing to 1e-12 relative are merged and vanishing multiplicities dropped.
    pub fn enumerate(&self, cutoff: f64) -> Result<Vec<(f64, f64)>> {
        let mut raw = self.raw_eigenvalues(cutoff)?;
        raw.sort_by(|x, y| x.0.total_cmp(&y.0));
        let mut out: Vec<(f64, f64)> = Vec::new();
        for (mu, m) in raw {
            match out.last_mut() {
                Some(last) if (mu - last.0).abs() <= 1e-12 * mu.max(1e-300) => last.1 += m,
                _ => out.push((mu, m)),
            }
        }
        for e in &mut out {
            e.1 = (e.1 * 2.0).round() / 2.0;
        }
        out.retain(|e| e.1 != 0.0);
        Ok(out)
    }

    /// Switch-over time between the direct and the dual branch of
    /// [`heat_trace`]: `π/c_max²`.
    pub fn switch_time(&self) -> f64 {
        self.terms
            .iter()
            .filter_map(ThetaTerm::min_dual)
            .min_by(f64::total_cmp)
            .map_or(1.0, |q| q / PI)
    }
}

/// Heat trace by direct lattice sums of every theta factor.
pub fn heat_trace_direct(spectrum: &RawSpectrum, u: f64) -> f64 {
    let mut acc = CompensatedSum::new();
    for t in spectrum.terms() {
        acc.add(t.coef * t.factors.iter().map(|f| f.direct(u)).product::<f64>());
    }
    for &(mu, m) in spectrum.finite_part() {
        acc.add(m * (-u * mu).exp());
    }
    acc.value()
}

/// Heat trace from the Poisson-dual representation. Leading parts
/// `coef·W_T·u^{−d/2}` are grouped by the frequency multiset before summing,
/// so that formal differences of spectra lose no accuracy.
pub fn heat_trace_dual(spectrum: &RawSpectrum, u: f64) -> f64 {
    let mut leading: BTreeMap<Vec<u64>, (f64, f64)> = BTreeMap::new();
    let mut acc = CompensatedSum::new();
    for t in spectrum.terms() {
        let lead = t.weyl_weight() * u.powf(-(t.dimension() as f64) / 2.0);
        let shape: Vec<u64> = t.factors.iter().map(|f| f.c.to_bits()).collect();
        let e = leading.entry(shape).or_insert((0.0, lead));
        e.0 += t.coef;
        acc.add(t.coef * lead * t.dual_remainder(u));
    }
    for (coef, lead) in leading.values() {
        acc.add(coef * lead);
    }
    for &(mu, m) in spectrum.finite_part() {
        acc.add(m * (-u * mu).exp());
    }
    acc.value()
}

/// `Tr e^{−uΔ}`: direct branch for `u ≥ switch_time`, dual branch below.
pub fn heat_trace(spectrum: &RawSpectrum, u: f64) -> Result<f64> {
    if !(u > 0.0) || !u.is_finite() {
        return Err(invalid("t", format!("must be finite and > 0, got {u}")));
    }
    Ok(if u >= spectrum.switch_time() {
        heat_trace_direct(spectrum, u)
    } else {
        heat_trace_dual(spectrum, u)
    })
}
